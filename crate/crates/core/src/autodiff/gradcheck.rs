//! Central finite-difference gradient checking.

use super::tensor::Tensor;
use crate::error::Result;

/// Step used when none is given.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Entries whose analytic and numeric gradients are both below this magnitude
/// are compared on an absolute rather than relative scale. Central differences
/// of an O(1) loss carry roundoff near `f64::EPSILON / DEFAULT_STEP ≈ 2e-11`,
/// so smaller gradients cannot be resolved to a meaningful relative error.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct TableCheck {
    pub name: String,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// Position of the worst entry within the table.
    pub worst_index: usize,
}

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Perturbs every entry of every table by `±step` and compares the central
/// difference of `loss` against the provided analytic gradients.
pub fn check_tables<F>(
    names: &[String],
    values: &[Tensor],
    analytic: &[Tensor],
    step: f64,
    mut loss: F,
) -> Result<Vec<TableCheck>>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    let mut work = values.to_vec();
    let mut report = Vec::with_capacity(values.len());
    for (t, name) in names.iter().enumerate() {
        let mut check = TableCheck {
            name: name.clone(),
            max_relative_error: 0.0,
            max_absolute_error: 0.0,
            worst_index: 0,
        };
        for i in 0..work[t].len() {
            let original = work[t].data()[i];
            work[t].data_mut()[i] = original + step;
            let plus = loss(&work)?;
            work[t].data_mut()[i] = original - step;
            let minus = loss(&work)?;
            work[t].data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[t].data()[i];
            let rel = relative_error(a, numeric);
            if rel > check.max_relative_error {
                check.max_relative_error = rel;
                check.worst_index = i;
            }
            check.max_absolute_error = check.max_absolute_error.max((a - numeric).abs());
        }
        report.push(check);
    }
    Ok(report)
}
