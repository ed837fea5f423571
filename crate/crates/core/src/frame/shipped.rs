use std::path::PathBuf;

use super::{build_f, g_min_pair, left_kernel, minimize_table, rotated_frame, weight_p_u, FrameTable, SolverKind};
use crate::dense::{max_abs_diff, CMatrix};
use crate::error::{Error, Result};
use crate::gates;
use crate::scalar::Real;

/// Gates with a precomputed rotated-minimized table in `tables/`.
pub const SHIPPED_GATES: [&str; 2] = ["iswap", "cnot"];

pub fn shipped_table_path(gate: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tables").join(format!("{gate}_rotated_min.json"))
}

/// `g^min (x) g^min` rotated by `u` and minimized column by column under
/// the weight `p_U`. Objectives are returned alongside.
pub fn rotated_minimized_frame<T: Real>(u: &CMatrix<T>) -> Result<(FrameTable<T>, Vec<T>)> {
    let kernel = left_kernel(&build_f::<T>(2))?;
    let rotated = rotated_frame(u, &g_min_pair())?;
    minimize_table(&rotated, &kernel, &weight_p_u(u)?, SolverKind::Reduced)
}

/// The shipped table for `gate`, recomputed when the file is absent.
pub fn shipped_table<T: Real>(gate: &str) -> Result<FrameTable<T>> {
    if !SHIPPED_GATES.contains(&gate) {
        return Err(Error::Parse { what: "shipped gate", input: gate.to_string() });
    }
    let path = shipped_table_path(gate);
    if path.exists() {
        let table = FrameTable::load(&path)?;
        let u = gates::by_name::<T>(gate)?;
        if table.unitary().is_none_or(|tu| max_abs_diff(tu, &u) > 1e-12) {
            return Err(Error::InvalidFrameAssignment(format!("{} does not hold a {gate} table", path.display())));
        }
        return Ok(table);
    }
    Ok(rotated_minimized_frame(&gates::by_name::<T>(gate)?)?.0)
}
