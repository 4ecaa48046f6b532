//! Extreme eigenvalues of `H`, used only by the optimality certificates.
//!
//! `λ_max` comes from power iteration on `H`, `λ_min` from power iteration on
//! the shifted operator `λ_max·I − H`, both matrix-free. An estimate is
//! accepted once its eigen-residual `‖Hv − λv‖` is below `1e-7·|λ|`, which
//! places an exact eigenvalue within that distance. If either iteration does
//! not get there in [`POWER_MAX_ITER`] steps, the bounds come from a dense
//! symmetric eigendecomposition instead.

use alloc::vec::Vec;

use crate::linalg;
use crate::model::{apply_h, hessian_h, EigenBounds, Iterate, ModelParams, ProblemData};
use crate::{Error, Result};

/// Largest `n + m` for which bounds are computed.
pub const EIGEN_SIZE_CAP: usize = 2000;
pub const POWER_MAX_ITER: usize = 500;
/// Relative change of the Rayleigh quotient below which iteration may stop.
pub const RAYLEIGH_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-7;

/// Which route produced the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    PowerIteration,
    DenseFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenReport {
    pub bounds: EigenBounds,
    pub method: EigenMethod,
}

pub fn eigen_bounds(prob: &ProblemData, params: &ModelParams) -> Result<EigenBounds> {
    eigen_bounds_report(prob, params).map(|r| r.bounds)
}

pub fn eigen_bounds_report(prob: &ProblemData, params: &ModelParams) -> Result<EigenReport> {
    let size = prob.n() + prob.m();
    if size > EIGEN_SIZE_CAP {
        return Err(Error::UnsupportedSize {
            size,
            cap: EIGEN_SIZE_CAP,
        });
    }
    if !(params.eta > 0.0) {
        return Err(Error::Precondition("eigenvalue bounds need eta > 0".into()));
    }
    let n = prob.n();
    let apply = |v: &[f64]| -> Vec<f64> {
        apply_h(prob, params, &Iterate::from_stacked(v, n))
            .expect("dimensions fixed by construction")
            .to_stacked()
    };

    if let Some(lmax) = power_iteration(size, 0.0, &apply) {
        if let Some(mu) = power_iteration(size, lmax, &apply) {
            let lmin = lmax - mu;
            if lmin > 0.0 && lmin <= lmax {
                return Ok(EigenReport {
                    bounds: EigenBounds {
                        lambda_min: lmin,
                        lambda_max: lmax,
                    },
                    method: EigenMethod::PowerIteration,
                });
            }
        }
    }
    dense_bounds(prob, params).map(|bounds| EigenReport {
        bounds,
        method: EigenMethod::DenseFallback,
    })
}

/// Dominant eigenvalue of `shift·I − H` when `shift > 0`, of `H` otherwise.
/// Returns `None` if the residual test is not met within the iteration cap.
fn power_iteration(size: usize, shift: f64, apply: &impl Fn(&[f64]) -> Vec<f64>) -> Option<f64> {
    // Deterministic start with no special alignment to the coordinate axes.
    let mut v: Vec<f64> = (0..size)
        .map(|i| 1.0 + 0.5 * libm::sin(1.0 + i as f64 * 0.7548776662466927))
        .collect();
    let nv = linalg::norm(&v);
    v.iter_mut().for_each(|t| *t /= nv);

    let op = |v: &[f64]| -> Vec<f64> {
        let hv = apply(v);
        if shift > 0.0 {
            v.iter().zip(&hv).map(|(vi, hi)| shift * vi - hi).collect()
        } else {
            hv
        }
    };

    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let w = op(&v);
        let lambda = linalg::dot(&v, &w);
        let residual = libm::sqrt(
            w.iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi) * (wi - lambda * vi))
                .sum::<f64>(),
        );
        // For the shifted operator the accuracy target is relative to λ_min = shift − λ.
        let scale = if shift > 0.0 { shift - lambda } else { lambda };
        let rq_settled = residual == 0.0 || libm::fabs(lambda - lambda_prev) <= RAYLEIGH_TOL * libm::fabs(lambda);
        if scale > 0.0 && residual <= RESIDUAL_TOL * scale && rq_settled {
            return Some(lambda);
        }
        let nw = linalg::norm(&w);
        if !(nw > 0.0) || !nw.is_finite() {
            return None;
        }
        v = w.into_iter().map(|t| t / nw).collect();
        lambda_prev = lambda;
    }
    None
}

/// Extreme eigenvalues from a full symmetric eigendecomposition of `H`.
pub fn dense_bounds(prob: &ProblemData, params: &ModelParams) -> Result<EigenBounds> {
    let size = prob.n() + prob.m();
    if size > EIGEN_SIZE_CAP {
        return Err(Error::UnsupportedSize {
            size,
            cap: EIGEN_SIZE_CAP,
        });
    }
    let h = hessian_h(prob, params).matrix;
    let values = symmetric_eigenvalues(size, h.as_slice());
    let lambda_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(EigenBounds { lambda_min, lambda_max })
}

/// All eigenvalues of a symmetric row-major matrix (unordered).
pub fn symmetric_eigenvalues(size: usize, data: &[f64]) -> Vec<f64> {
    let mat = nalgebra::DMatrix::from_row_slice(size, size, data);
    nalgebra::SymmetricEigen::new(mat).eigenvalues.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::three_by_four_instance;
    use crate::linalg::DenseMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn zero_matrix_gives_eta_and_one() {
        let prob = ProblemData::from_a(DenseMatrix::zeros(3, 2)).unwrap();
        let params = ModelParams::new(0.1, 0.5, 1, 0).unwrap();
        let b = eigen_bounds(&prob, &params).unwrap();
        assert_relative_eq!(b.lambda_min, 0.5, max_relative = 1e-6);
        assert_relative_eq!(b.lambda_max, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn identity_h() {
        let prob = ProblemData::from_a(DenseMatrix::zeros(2, 2)).unwrap();
        let params = ModelParams::new(0.1, 1.0, 1, 0).unwrap();
        let b = eigen_bounds(&prob, &params).unwrap();
        assert_relative_eq!(b.lambda_min, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b.lambda_max, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn three_by_four_instance_matches_dense() {
        for t in [0.05, 0.2, 0.4, 1.0] {
            let prob = three_by_four_instance(t);
            let params = ModelParams::new(0.3, 1.0, 1, 1).unwrap();
            let b = eigen_bounds(&prob, &params).unwrap();
            let d = dense_bounds(&prob, &params).unwrap();
            assert_relative_eq!(b.lambda_min, d.lambda_min, max_relative = 1e-6);
            assert_relative_eq!(b.lambda_max, d.lambda_max, max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_zero_eta_and_large_sizes() {
        let prob = three_by_four_instance(0.2);
        let params = ModelParams::new(0.3, 0.0, 1, 1).unwrap();
        assert!(matches!(eigen_bounds(&prob, &params), Err(Error::Precondition(_))));
        let big = ProblemData::from_a(DenseMatrix::zeros(1000, 1001)).unwrap();
        let params = ModelParams::new(0.3, 1.0, 1, 1).unwrap();
        assert_eq!(
            eigen_bounds(&big, &params).unwrap_err(),
            Error::UnsupportedSize { size: 2001, cap: 2000 }
        );
    }
}
