//! Least-squares fits in transformed coordinates.

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `y = amplitude · x^exponent` (log-log regression).
    PowerLaw,
    /// `y = slope · ln(x) + offset` (linear in ln x).
    LogGrowth,
    /// `y = amplitude · ratio^n` (log-linear in n).
    Geometric,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: FitModel,
    /// `[exponent, amplitude]`, `[slope, offset]`, or `[ratio, amplitude]`.
    pub params: [f64; 2],
    pub r_squared: f64,
    pub rows: Vec<(f64, f64)>,
}

/// Fit `rows` of `(x, y)` under the model; at least 4 rows required.
pub fn fit(model: FitModel, rows: &[(f64, f64)]) -> Result<FitReport> {
    if rows.len() < 4 {
        return Err(LabError::InsufficientData { needed: 4, got: rows.len() });
    }
    let transformed: Vec<(f64, f64)> = match model {
        FitModel::PowerLaw => {
            if rows.iter().any(|(x, y)| *x <= 0.0 || *y <= 0.0) {
                return Err(LabError::InvalidParameter(
                    "power-law fit needs positive data".into(),
                ));
            }
            rows.iter().map(|(x, y)| (x.ln(), y.ln())).collect()
        }
        FitModel::LogGrowth => {
            if rows.iter().any(|(x, _)| *x <= 0.0) {
                return Err(LabError::InvalidParameter(
                    "log-growth fit needs positive abscissas".into(),
                ));
            }
            rows.iter().map(|(x, y)| (x.ln(), *y)).collect()
        }
        FitModel::Geometric => {
            if rows.iter().any(|(_, y)| *y <= 0.0) {
                return Err(LabError::InvalidParameter(
                    "geometric fit needs positive values".into(),
                ));
            }
            rows.iter().map(|(x, y)| (*x, y.ln())).collect()
        }
    };
    let n = transformed.len() as f64;
    let sx: f64 = transformed.iter().map(|p| p.0).sum();
    let sy: f64 = transformed.iter().map(|p| p.1).sum();
    let sxx: f64 = transformed.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = transformed.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(LabError::NumericalBreakdown("degenerate abscissas".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in &transformed {
        let pred = slope * x + intercept;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean) * (y - mean);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    let params = match model {
        FitModel::PowerLaw => [slope, intercept.exp()],
        FitModel::LogGrowth => [slope, intercept],
        FitModel::Geometric => [slope.exp(), intercept.exp()],
    };
    Ok(FitReport { model, params, r_squared, rows: rows.to_vec() })
}
