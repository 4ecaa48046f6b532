//! Recovery metrics: SNR in dB, Hamming distance to the observed signs and
//! Hamming error to the clean signs.

use alloc::format;

use crate::datagen::sgn;
use crate::linalg;
use crate::model::{support_of, ProblemData};
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-6;

/// `−20·log₁₀‖x − x_true‖`; `+∞` when the two coincide.
pub fn snr(x: &[f64], x_true: &[f64]) -> Result<f64> {
    Error::check_len("snr input", x_true.len(), x.len())?;
    for (name, v) in [("estimate", x), ("ground truth", x_true)] {
        let nv = linalg::norm(v);
        if libm::fabs(nv - 1.0) > UNIT_TOL {
            return Err(Error::invalid(format!("snr {name} has norm {nv}, expected 1")));
        }
    }
    let dist = libm::sqrt(linalg::dist_sq(x, x_true));
    if dist == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * libm::log10(dist))
}

/// Fraction of rows where `sgn(Φx)` differs from `reference`.
fn sign_mismatch(prob: &ProblemData, x: &[f64], reference: &[f64]) -> Result<f64> {
    Error::check_len("x", prob.n(), x.len())?;
    Error::check_len("reference signs", prob.m(), reference.len())?;
    let support = support_of(x);
    let mut phix = alloc::vec![0.0; prob.m()];
    prob.phi().mul_vec_sparse_into(x, &support, &mut phix);
    let wrong = phix.iter().zip(reference).filter(|(p, c)| sgn(**p) != **c).count();
    Ok(wrong as f64 / prob.m() as f64)
}

/// `HD = ‖sgn(Φx) − c‖₀ / m`.
pub fn hamming_distance(prob: &ProblemData, x: &[f64]) -> Result<f64> {
    sign_mismatch(prob, x, prob.c())
}

/// `HE = ‖sgn(Φx) − c_true‖₀ / m`.
pub fn hamming_error(prob: &ProblemData, x: &[f64], c_true: &[f64]) -> Result<f64> {
    sign_mismatch(prob, x, c_true)
}
