//! Named one- and two-qubit gates.

use crate::dense::{identity, kron, pauli, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::PauliLabel;
use crate::scalar::{cx, Real};

fn from_rows<T: Real>(dim: usize, rows: &[(f64, f64)]) -> CMatrix<T> {
    CMatrix::from_row_iterator(dim, dim, rows.iter().map(|&(re, im)| cx::<T>(re, im)))
}

pub fn iswap<T: Real>() -> CMatrix<T> {
    let o = (0.0, 0.0);
    let l = (1.0, 0.0);
    let i = (0.0, 1.0);
    from_rows(4, &[l, o, o, o, o, o, i, o, o, i, o, o, o, o, o, l])
}

/// Control on qubit 0.
pub fn cnot<T: Real>() -> CMatrix<T> {
    let o = (0.0, 0.0);
    let l = (1.0, 0.0);
    from_rows(4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o])
}

pub fn cz<T: Real>() -> CMatrix<T> {
    let o = (0.0, 0.0);
    let l = (1.0, 0.0);
    from_rows(4, &[l, o, o, o, o, l, o, o, o, o, l, o, o, o, o, (-1.0, 0.0)])
}

pub fn swap<T: Real>() -> CMatrix<T> {
    let o = (0.0, 0.0);
    let l = (1.0, 0.0);
    from_rows(4, &[l, o, o, o, o, o, l, o, o, l, o, o, o, o, o, l])
}

pub fn hadamard<T: Real>() -> CMatrix<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    from_rows(2, &[(h, 0.0), (h, 0.0), (h, 0.0), (-h, 0.0)])
}

pub fn phase_s<T: Real>() -> CMatrix<T> {
    from_rows(2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 1.0)])
}

/// `diag(1, e^{i pi/4})`.
pub fn t_gate<T: Real>() -> CMatrix<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    from_rows(2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (h, h)])
}

/// Looks up a gate by name. Two-qubit products are written `a*b`
/// (`t*i`, `x*x`); single letters `i x y z h s t` name one-qubit gates.
pub fn by_name<T: Real>(name: &str) -> Result<CMatrix<T>> {
    let lower = name.trim().to_ascii_lowercase();
    if let Some((a, b)) = lower.split_once('*') {
        return Ok(kron(&single(a)?, &single(b)?));
    }
    match lower.as_str() {
        "iswap" => Ok(iswap()),
        "cnot" | "cx" => Ok(cnot()),
        "cz" => Ok(cz()),
        "swap" => Ok(swap()),
        "id2" => Ok(identity(4)),
        other => single(other),
    }
}

fn single<T: Real>(name: &str) -> Result<CMatrix<T>> {
    match name.trim() {
        "i" | "id" => Ok(identity(2)),
        "x" => Ok(pauli(PauliLabel::X)),
        "y" => Ok(pauli(PauliLabel::Y)),
        "z" => Ok(pauli(PauliLabel::Z)),
        "h" => Ok(hadamard()),
        "s" => Ok(phase_s()),
        "t" => Ok(t_gate()),
        _ => Err(Error::Parse { what: "gate name", input: name.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::unitarity_defect;

    #[test]
    fn named_gates_are_unitary() {
        for name in ["iswap", "cnot", "cz", "swap", "h", "s", "t", "t*t", "t*i", "x*i", "id2"] {
            let u = by_name::<f64>(name).unwrap();
            assert!(unitarity_defect(&u) < 1e-15, "{name}");
        }
        assert!(by_name::<f64>("foo").is_err());
    }

    #[test]
    fn t_squared_is_s() {
        let t = t_gate::<f64>();
        let diff = crate::dense::max_abs_diff(&(&t * &t), &phase_s::<f64>());
        assert!(diff < 1e-15);
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let c = cnot::<f64>();
        assert_eq!(c[(3, 2)].re, 1.0);
        assert_eq!(c[(1, 1)].re, 1.0);
    }
}
