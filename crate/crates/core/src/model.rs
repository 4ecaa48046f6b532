//! Problem data, model constants and the quadratic objective
//! `f(x, y) = ‖Ax + y − ε1‖² + η‖x‖²`.
//!
//! Writing `z = (x; y)`, the objective is the quadratic
//! `f(z) = ‖z‖²_H − 2ε⟨(Aᵀ1; 1), z⟩ + mε²` with
//!
//! ```text
//! H = ½∇²f = [ AᵀA + ηI   Aᵀ ]
//!            [ A          I  ]
//! ```
//!
//! which is positive definite whenever `η > 0`. The solver never forms `H`;
//! [`hessian_h`] materializes it for diagnostics only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Measurement matrix `Φ`, observed signs `c` and the row-scaled `A = Diag(c)Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    phi: DenseMatrix,
    c: Vec<f64>,
    a: DenseMatrix,
}

impl ProblemData {
    pub fn new(phi: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        if phi.rows() == 0 || phi.cols() == 0 {
            return Err(Error::invalid("measurement matrix must be non-empty"));
        }
        Error::check_len("sign vector", phi.rows(), c.len())?;
        if c.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("sign vector entries must be +1 or -1"));
        }
        let n = phi.cols();
        let a = DenseMatrix::from_fn(phi.rows(), n, |i, j| c[i] * phi.get(i, j));
        Ok(Self { phi, c, a })
    }

    /// Problem given directly by `A` (all observed signs `+1`, so `Φ = A`).
    pub fn from_a(a: DenseMatrix) -> Result<Self> {
        let c = vec![1.0; a.rows()];
        Self::new(a, c)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn phi(&self) -> &DenseMatrix {
        &self.phi
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }
}

/// Model constants: offset `ε`, ridge weight `η`, sparsity budget `s`,
/// sign-flip budget `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub epsilon: f64,
    pub eta: f64,
    pub s: usize,
    pub k: usize,
}

impl ModelParams {
    pub fn new(epsilon: f64, eta: f64, s: usize, k: usize) -> Result<Self> {
        let params = Self { epsilon, eta, s, k };
        params.validate_scalars()?;
        Ok(params)
    }

    fn validate_scalars(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(format!("eta must be non-negative, got {}", self.eta)));
        }
        if self.s == 0 {
            return Err(Error::invalid("s must be at least 1"));
        }
        Ok(())
    }

    /// Checks the constants against problem dimensions: `1 ≤ s ≤ n`, `k ≤ m`.
    pub fn validate_for(&self, prob: &ProblemData) -> Result<()> {
        self.validate_scalars()?;
        if self.s > prob.n() {
            return Err(Error::invalid(format!("s = {} exceeds n = {}", self.s, prob.n())));
        }
        if self.k > prob.m() {
            return Err(Error::invalid(format!("k = {} exceeds m = {}", self.k, prob.m())));
        }
        Ok(())
    }

    /// `η = 0` is accepted but `H` may then be singular.
    pub fn eta_is_zero(&self) -> bool {
        self.eta == 0.0
    }
}

/// The stacked point `z = (x; y)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Iterate {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; m],
        }
    }

    pub fn check_dims(&self, prob: &ProblemData) -> Result<()> {
        Error::check_len("x", prob.n(), self.x.len())?;
        Error::check_len("y", prob.m(), self.y.len())
    }

    /// `‖x‖₀ ≤ s` and `‖y₊‖₀ ≤ k`.
    pub fn is_feasible(&self, s: usize, k: usize) -> bool {
        count_nonzero(&self.x) <= s && count_positive(&self.y) <= k
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        linalg::dist_sq(&self.x, &other.x) + linalg::dist_sq(&self.y, &other.y)
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.x) + linalg::norm_sq(&self.y)
    }

    /// Flattens to `(x; y)`.
    pub fn to_stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len() + self.y.len());
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.y);
        out
    }

    pub fn from_stacked(z: &[f64], n: usize) -> Self {
        Self {
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        }
    }
}

/// `∇f` split into its `x` and `y` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Gradient {
    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.x) + linalg::norm_sq(&self.y)
    }

    pub fn dot(&self, z: &Iterate) -> f64 {
        linalg::dot(&self.x, &z.x) + linalg::dot(&self.y, &z.y)
    }
}

/// Extreme eigenvalues of `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn count_nonzero(v: &[f64]) -> usize {
    v.iter().filter(|&&t| t != 0.0).count()
}

pub fn count_positive(v: &[f64]) -> usize {
    v.iter().filter(|&&t| t > 0.0).count()
}

pub(crate) fn support_of(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter_map(|(i, &t)| (t != 0.0).then_some(i))
        .collect()
}

/// `Ax + y − ε1`, exploiting sparsity of `x`.
pub fn residual(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<Vec<f64>> {
    z.check_dims(prob)?;
    let mut r = vec![0.0; prob.m()];
    let support = support_of(&z.x);
    prob.a().mul_vec_sparse_into(&z.x, &support, &mut r);
    for (ri, yi) in r.iter_mut().zip(&z.y) {
        *ri += yi - params.epsilon;
    }
    Ok(r)
}

pub(crate) fn objective_from_residual(r: &[f64], x: &[f64], eta: f64) -> f64 {
    linalg::norm_sq(r) + eta * linalg::norm_sq(x)
}

pub(crate) fn gradient_from_residual(prob: &ProblemData, params: &ModelParams, r: &[f64], x: &[f64]) -> Gradient {
    let mut gx = prob.a().tr_mul_vec(r);
    for (g, xi) in gx.iter_mut().zip(x) {
        *g = 2.0 * *g + 2.0 * params.eta * xi;
    }
    let gy = r.iter().map(|v| 2.0 * v).collect();
    Gradient { x: gx, y: gy }
}

/// `f(z) = ‖Ax + y − ε1‖² + η‖x‖²`.
pub fn objective(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<f64> {
    let r = residual(prob, params, z)?;
    Ok(objective_from_residual(&r, &z.x, params.eta))
}

/// `∇ₓf = 2Aᵀ(Ax + y − ε1) + 2ηx`, `∇ᵧf = 2(Ax + y − ε1)`.
pub fn gradient(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<Gradient> {
    let r = residual(prob, params, z)?;
    Ok(gradient_from_residual(prob, params, &r, &z.x))
}

/// Matrix-free `H z`.
pub fn apply_h(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<Iterate> {
    z.check_dims(prob)?;
    let a = prob.a();
    let mut hy = a.mul_vec(&z.x);
    for (h, yi) in hy.iter_mut().zip(&z.y) {
        *h += yi;
    }
    // top block: Aᵀ(Ax + y) + ηx
    let mut hx = a.tr_mul_vec(&hy);
    for (h, xi) in hx.iter_mut().zip(&z.x) {
        *h += params.eta * xi;
    }
    Ok(Iterate { x: hx, y: hy })
}

/// `‖z‖²_H = ‖Ax + y‖² + η‖x‖²`.
pub fn h_norm_sq(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<f64> {
    z.check_dims(prob)?;
    let mut w = prob.a().mul_vec(&z.x);
    for (wi, yi) in w.iter_mut().zip(&z.y) {
        *wi += yi;
    }
    Ok(linalg::norm_sq(&w) + params.eta * linalg::norm_sq(&z.x))
}

/// The objective through its quadratic-form expansion
/// `‖z‖²_H − 2ε⟨(Aᵀ1; 1), z⟩ + mε²`.
pub fn objective_quadratic_form(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<f64> {
    let quad = h_norm_sq(prob, params, z)?;
    let ones = vec![1.0; prob.m()];
    let at1 = prob.a().tr_mul_vec(&ones);
    let lin = linalg::dot(&at1, &z.x) + z.y.iter().sum::<f64>();
    let eps = params.epsilon;
    Ok(quad - 2.0 * eps * lin + prob.m() as f64 * eps * eps)
}

/// Dense `H`, plus a flag raised when `η = 0` (the matrix may be singular).
#[derive(Debug, Clone)]
pub struct HessianH {
    pub matrix: DenseMatrix,
    pub possibly_singular: bool,
}

pub fn hessian_h(prob: &ProblemData, params: &ModelParams) -> HessianH {
    let (m, n) = (prob.m(), prob.n());
    let a = prob.a();
    let mut h = DenseMatrix::zeros(n + m, n + m);
    // AᵀA accumulated row by row of A keeps the block exactly symmetric.
    for i in 0..m {
        let row = a.row(i);
        for p in 0..n {
            if row[p] == 0.0 {
                continue;
            }
            for q in p..n {
                let v = h.get(p, q) + row[p] * row[q];
                h.set(p, q, v);
            }
        }
    }
    for p in 0..n {
        h.set(p, p, h.get(p, p) + params.eta);
        for q in 0..p {
            h.set(p, q, h.get(q, p));
        }
    }
    for i in 0..m {
        for j in 0..n {
            h.set(n + i, j, a.get(i, j));
            h.set(j, n + i, a.get(i, j));
        }
        h.set(n + i, n + i, 1.0);
    }
    HessianH {
        matrix: h,
        possibly_singular: params.eta_is_zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::three_by_four_instance as example_one;
    use approx::assert_relative_eq;

    #[test]
    fn a_is_row_scaled_phi() {
        let phi = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let prob = ProblemData::new(phi, vec![1.0, -1.0]).unwrap();
        assert_eq!(prob.a().as_slice(), &[1.0, 2.0, -3.0, -4.0]);
    }

    #[test]
    fn rejects_non_sign_entries() {
        let phi = DenseMatrix::zeros(2, 2);
        assert!(ProblemData::new(phi, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0, 1, 0).is_err());
        assert!(ModelParams::new(0.1, -1.0, 1, 0).is_err());
        assert!(ModelParams::new(0.1, 0.0, 0, 0).is_err());
        let prob = example_one(0.2);
        assert!(ModelParams::new(0.1, 1.0, 5, 0).unwrap().validate_for(&prob).is_err());
        assert!(ModelParams::new(0.1, 1.0, 4, 4).unwrap().validate_for(&prob).is_err());
        assert!(ModelParams::new(0.1, 0.0, 4, 3).unwrap().validate_for(&prob).is_ok());
    }

    #[test]
    fn objective_at_origin_is_m_eps_squared() {
        let prob = example_one(0.2);
        let params = ModelParams::new(0.3, 1.0, 1, 1).unwrap();
        let f = objective(&prob, &params, &Iterate::zeros(4, 3)).unwrap();
        assert_relative_eq!(f, 3.0 * 0.09, epsilon = 1e-15);
    }

    #[test]
    fn example_one_objective_and_gradient() {
        let (eta, eps, t) = (1.0, 0.3, 0.2);
        let c = 2.0 * eps / (2.0 + eta);
        let prob = example_one(t);
        let params = ModelParams::new(eps, eta, 1, 1).unwrap();
        let z = Iterate::new(vec![c, 0.0, 0.0, 0.0], vec![c + eps, 0.0, 0.0]);
        let f = objective(&prob, &params, &z).unwrap();
        assert_relative_eq!(f, 2.0 * (c - eps) * (c - eps) + eta * c * c, epsilon = 1e-15);
        let g = gradient(&prob, &params, &z).unwrap();
        let gy = [0.0, -c * eta, -c * eta];
        let gx = [0.0, -t * c * eta, -t * c * eta, -t * c * eta];
        for (a, b) in g.y.iter().zip(gy) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in g.x.iter().zip(gx) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_vanishes_when_residual_does() {
        let prob = example_one(0.7);
        let params = ModelParams::new(0.25, 2.0, 1, 3).unwrap();
        let z = Iterate::new(vec![0.0; 4], vec![0.25; 3]);
        let g = gradient(&prob, &params, &z).unwrap();
        assert!(g.x.iter().chain(&g.y).all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let prob = example_one(0.2);
        let params = ModelParams::new(0.3, 1.0, 1, 1).unwrap();
        let z = Iterate::zeros(3, 3);
        assert!(matches!(
            objective(&prob, &params, &z),
            Err(Error::DimensionMismatch { what: "x", .. })
        ));
        assert!(gradient(&prob, &params, &Iterate::zeros(4, 2)).is_err());
    }

    #[test]
    fn hessian_of_zero_matrix_is_block_diagonal() {
        let prob = ProblemData::from_a(DenseMatrix::zeros(2, 3)).unwrap();
        let params = ModelParams::new(0.1, 0.5, 1, 0).unwrap();
        let h = hessian_h(&prob, &params);
        let expected = DenseMatrix::from_fn(5, 5, |i, j| match (i == j, i < 3) {
            (true, true) => 0.5,
            (true, false) => 1.0,
            _ => 0.0,
        });
        assert_eq!(h.matrix, expected);
        assert!(!h.possibly_singular);
        let flagged = hessian_h(&prob, &ModelParams::new(0.1, 0.0, 1, 0).unwrap());
        assert!(flagged.possibly_singular);
    }

    #[test]
    fn hessian_is_exactly_symmetric_and_matches_apply() {
        let prob = example_one(0.37);
        let params = ModelParams::new(0.3, 1.0, 1, 1).unwrap();
        let h = hessian_h(&prob, &params).matrix;
        assert_eq!(h.max_abs_diff(&h.transpose()), 0.0);
        let z = Iterate::new(vec![0.3, -1.0, 0.5, 2.0], vec![1.0, -0.25, 0.75]);
        let dense = h.mul_vec(&z.to_stacked());
        let free = apply_h(&prob, &params, &z).unwrap().to_stacked();
        for (a, b) in dense.iter().zip(&free) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }
}
