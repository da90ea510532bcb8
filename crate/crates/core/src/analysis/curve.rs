use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::contribution::PerturbationDump;
use crate::error::{Error, Result};

pub const DEFAULT_DEGREE: usize = 6;

// Relative pivot size below which the Vandermonde system counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCurve {
    pub degree: usize,
    /// Ascending powers.
    pub coefficients: Vec<f64>,
    #[serde(rename = "n")]
    pub sample_count: usize,
}

impl PositionCurve {
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }
}

pub(crate) fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `(relative position, C_SR)` for every scorable token of every sentence
/// with at least two tokens. Token `j` (0-based) of an `m`-token sentence
/// sits at `j / (m - 1)`.
pub fn position_points(dumps: &[PerturbationDump]) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for dump in dumps {
        let csr = dump.csr()?;
        let m = csr.len();
        if m < 2 {
            continue;
        }
        points.extend(
            csr.into_iter()
                .enumerate()
                .filter_map(|(j, v)| v.map(|v| (j as f64 / (m - 1) as f64, v))),
        );
    }
    Ok(points)
}

/// Least-squares polynomial fit by Householder QR of the Vandermonde matrix.
/// Needs at least `degree + 1` points.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    let cols = degree + 1;
    if xs.len() < cols {
        return Err(Error::TooFewValues {
            needed: cols,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite point in fit".into()));
    }
    let vander = DMatrix::from_fn(xs.len(), cols, |i, k| xs[i].powi(k as i32));
    let rhs = DVector::from_column_slice(ys);
    let qr = vander.qr();
    let r = qr.r();
    let pivots: Vec<f64> = (0..cols).map(|k| r[(k, k)].abs()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    let smallest = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if largest.is_nan() || largest <= 0.0 || smallest <= RANK_TOLERANCE * largest {
        return Err(Error::RankDeficient {
            condition: if smallest > 0.0 { largest / smallest } else { f64::INFINITY },
        });
    }
    let qtb = qr.q().transpose() * rhs;
    let coef = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient { condition: f64::INFINITY })?;
    Ok(coef.iter().copied().collect())
}

/// Fits C_SR against relative position. Requires more than `degree + 1`
/// points.
pub fn position_curve(dumps: &[PerturbationDump], degree: usize) -> Result<PositionCurve> {
    let points = position_points(dumps)?;
    if points.len() <= degree + 1 {
        return Err(Error::TooFewValues {
            needed: degree + 2,
            got: points.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(PositionCurve {
        degree,
        coefficients: fit_polynomial(&xs, &ys, degree)?,
        sample_count: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_fit() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let c = fit_polynomial(&xs, &[0.5; 10], 0).unwrap();
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_fit() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let c = fit_polynomial(&xs, &xs, 1).unwrap();
        assert_abs_diff_eq!(c[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_polynomial(&[0.0, 1.0], &[1.0, 2.0], 2), Err(Error::TooFewValues { .. })));
    }

    #[test]
    fn repeated_abscissae_are_rank_deficient() {
        let err = fit_polynomial(&[0.5; 12], &[1.0; 12], 3).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn points_use_relative_positions() {
        let dump = PerturbationDump {
            id: 1,
            tokens: vec!["a".into(), "b".into(), "c".into()],
            p_src: vec![vec![0.4, 0.6], vec![0.5, 0.5], vec![0.0, 1.0]],
            p_tgt: vec![vec![0.4, 0.6], vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let single = PerturbationDump {
            id: 2,
            tokens: vec!["z".into()],
            p_src: vec![vec![0.1, 0.9]],
            p_tgt: vec![vec![0.1, 0.9]],
        };
        let pts = position_points(&[dump, single]).unwrap();
        // Middle token is skipped (zero variance on both sides).
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].0, 0.0);
        assert_abs_diff_eq!(pts[0].1, 0.5, epsilon = 1e-12);
        assert_eq!(pts[1], (1.0, 1.0));
    }

    #[test]
    fn curve_json_shape() {
        let curve = PositionCurve {
            degree: 6,
            coefficients: vec![0.0; 7],
            sample_count: 9,
        };
        let json = serde_json::to_string(&curve).unwrap();
        assert_eq!(json, r#"{"degree":6,"coefficients":[0.0,0.0,0.0,0.0,0.0,0.0,0.0],"n":9}"#);
    }
}
