//! Least-squares fit of the `b/m` slicing law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual above which a fit is reported as a misfit.
pub const MISFIT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseFit {
    pub b: f64,
    /// `‖err − b/m‖₂ / ‖err‖₂`.
    pub residual: f64,
    pub misfit: bool,
}

/// `b = Σ(err/m) / Σ(1/m²)`, the minimizer of `Σ(err_i − b/m_i)²`.
pub fn fit_inverse_m(points: &[(f64, f64)]) -> Result<InverseFit> {
    if points.len() < 3 {
        return Err(Error::Invalid(format!("b/m fit needs at least 3 points, got {}", points.len())));
    }
    for &(m, err) in points {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Invalid(format!("slice count {m} must be positive")));
        }
        if !err.is_finite() {
            return Err(Error::Numeric(format!("non-finite error at m = {m}")));
        }
    }
    let mut ms: Vec<f64> = points.iter().map(|p| p.0).collect();
    ms.sort_by(f64::total_cmp);
    if ms.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invalid("slice counts must be distinct".into()));
    }
    let norm: f64 = points.iter().map(|(_, e)| e * e).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Invalid("all errors are zero; b/m fit is degenerate".into()));
    }
    let num: f64 = points.iter().map(|(m, e)| e / m).sum();
    let den: f64 = points.iter().map(|(m, _)| 1.0 / (m * m)).sum();
    let b = num / den;
    let ssr: f64 = points.iter().map(|(m, e)| (e - b / m).powi(2)).sum();
    let residual = ssr.sqrt() / norm;
    Ok(InverseFit { b, residual, misfit: residual > MISFIT_THRESHOLD })
}
