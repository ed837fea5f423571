use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{col_count, row_count, FrameKind, FrameTable};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// JSON form of a frame table. Complex numbers are `[re, im]` pairs and both
/// matrices are flattened row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameDocument {
    pub arity: usize,
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<[f64; 2]>>,
    pub entries: Vec<[f64; 2]>,
}

fn pairs<T: Real>(m: &CMatrix<T>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            out.push([v.re.as_f64(), v.im.as_f64()]);
        }
    }
    out
}

fn from_pairs<T: Real>(rows: usize, cols: usize, data: &[[f64; 2]]) -> Result<CMatrix<T>> {
    if data.len() != rows * cols {
        return Err(Error::ArityMismatch { expected: rows * cols, found: data.len() });
    }
    Ok(CMatrix::from_row_iterator(rows, cols, data.iter().map(|&[re, im]| Cx::new(T::lit(re), T::lit(im)))))
}

impl FrameDocument {
    pub fn from_table<T: Real>(table: &FrameTable<T>) -> FrameDocument {
        FrameDocument {
            arity: table.arity(),
            kind: table.kind(),
            unitary: table.unitary().map(pairs),
            entries: pairs(table.entries()),
        }
    }

    pub fn into_table<T: Real>(self) -> Result<FrameTable<T>> {
        let dim = 1usize << self.arity;
        let unitary = match &self.unitary {
            Some(u) => Some(from_pairs(dim, dim, u)?),
            None => None,
        };
        let entries = from_pairs(row_count(self.arity), col_count(self.arity), &self.entries)?;
        FrameTable::from_entries(self.arity, self.kind, unitary, entries)
    }
}

impl<T: Real> FrameTable<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FrameDocument::from_table(self))?)
    }

    pub fn from_json(text: &str) -> Result<FrameTable<T>> {
        serde_json::from_str::<FrameDocument>(text)?.into_table()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FrameTable<T>> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Parses a square matrix from whitespace-separated `re im` pairs in
/// row-major order. Lines starting with `#` are ignored.
pub fn parse_unitary<T: Real>(text: &str) -> Result<CMatrix<T>> {
    let err = || Error::Parse { what: "unitary", input: text.chars().take(80).collect() };
    let nums: Vec<f64> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .map(|t| t.parse::<f64>().map_err(|_| err()))
        .collect::<Result<_>>()?;
    if nums.len() % 2 != 0 {
        return Err(err());
    }
    let count = nums.len() / 2;
    let dim = (count as f64).sqrt().round() as usize;
    if dim * dim != count || !dim.is_power_of_two() || dim < 2 {
        return Err(err());
    }
    let pairs: Vec<[f64; 2]> = nums.chunks(2).map(|c| [c[0], c[1]]).collect();
    let u = from_pairs(dim, dim, &pairs)?;
    crate::dense::check_unitary(&u, crate::scalar::tol::<T>(1e-10))?;
    Ok(u)
}

pub fn load_unitary<T: Real>(path: impl AsRef<Path>) -> Result<CMatrix<T>> {
    parse_unitary(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{g_min_closed_form, rotated_frame};
    use crate::gates;

    #[test]
    fn json_round_trip_preserves_table() {
        let g = g_min_closed_form::<f64>();
        let back = FrameTable::<f64>::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        let doc: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        assert_eq!(doc["kind"], "g_min");
        assert_eq!(doc["entries"].as_array().unwrap().len(), 36 * 16);
        assert!(doc.get("unitary").is_none());
    }

    #[test]
    fn json_keeps_unitary() {
        let g = crate::frame::g_min_pair::<f64>();
        let gu = rotated_frame(&gates::cz::<f64>(), &g).unwrap();
        let back = FrameTable::<f64>::from_json(&gu.to_json().unwrap()).unwrap();
        assert_eq!(back.unitary(), gu.unitary());
        assert_eq!(back.kind(), FrameKind::GRotated);
    }

    #[test]
    fn unitary_text_form() {
        let u = parse_unitary::<f64>("# iswap\n1 0 0 0 0 0 0 0\n0 0 0 0 0 1 0 0\n0 0 0 1 0 0 0 0\n0 0 0 0 0 0 1 0\n").unwrap();
        assert_eq!(u, gates::iswap::<f64>());
        assert!(parse_unitary::<f64>("1 0 0").is_err());
        assert!(matches!(parse_unitary::<f64>("2 0 0 0 0 0 2 0"), Err(Error::InvalidUnitary(_))));
    }

    #[test]
    fn truncated_document_rejected() {
        let mut doc = FrameDocument::from_table(&g_min_closed_form::<f64>());
        doc.entries.pop();
        assert!(doc.into_table::<f64>().is_err());
    }
}
