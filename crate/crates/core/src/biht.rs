//! Binary iterative hard thresholding, the baseline solver.
//!
//! ```text
//! x ← Π_S(x + (step/2)·Aᵀ(1 − sgn(Ax)))
//! ```
//!
//! started from `x = 0` and normalized once at the end. The iterate is not
//! renormalized between steps: its norm grows, which shrinks the relative
//! step, and that is what makes a unit step usable on unnormalized rows.
//! Iteration stops after `max_iter` steps or once neither the support of `x`
//! nor the sign pattern `sgn(Ax)` changes.

use alloc::vec;
use alloc::vec::Vec;

use crate::datagen::sgn;
use crate::gpsp::{normalize_output, SolverResult, Termination, TraceBuffer};
use crate::linalg;
use crate::model::{support_of, ProblemData};
use crate::projections::project_s;
use crate::{Error, Result};

pub const DEFAULT_STEP: f64 = 1.0;
pub const DEFAULT_MAX_ITER: usize = 200;

fn sign_pattern(prob: &ProblemData, x: &[f64], ax: &mut [f64]) -> Vec<bool> {
    prob.a().mul_vec_sparse_into(x, &support_of(x), ax);
    ax.iter().map(|&v| sgn(v) > 0.0).collect()
}

pub fn biht_solve(prob: &ProblemData, s: usize, step: f64, max_iter: usize) -> Result<SolverResult> {
    let (n, m) = (prob.n(), prob.m());
    if s == 0 || s > n {
        return Err(Error::invalid(alloc::format!("s = {s} outside [1, {n}]")));
    }
    if !(step >= 0.0 && step.is_finite()) {
        return Err(Error::invalid("step must be finite and non-negative"));
    }
    let a = prob.a();
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut pattern = sign_pattern(prob, &x, &mut ax);
    let mut support = support_of(&x);
    let mut objective_trace = TraceBuffer::default();
    let mut tol_trace = TraceBuffer::default();
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;
    let mut resid = vec![0.0; m];

    while iterations < max_iter {
        for (ri, &p) in resid.iter_mut().zip(&pattern) {
            *ri = if p { 0.0 } else { 2.0 };
        }
        let grad = a.tr_mul_vec(&resid);
        let mut w = x.clone();
        linalg::axpy(0.5 * step, &grad, &mut w);
        let x_new = project_s(&w, s)?;
        let new_pattern = sign_pattern(prob, &x_new, &mut ax);
        let new_support = support_of(&x_new);
        // One-sided ℓ1 misfit ‖(−Ax)₊‖₁ of the new iterate, scale-free.
        let nrm = linalg::norm(&x_new);
        let misfit: f64 = ax.iter().map(|v| (-v).max(0.0)).sum();
        objective_trace.push(if nrm > 0.0 { misfit / nrm } else { misfit });
        tol_trace.push(libm::sqrt(linalg::dist_sq(&x_new, &x)));
        iterations += 1;
        let fixed = new_pattern == pattern && new_support == support;
        x = x_new;
        pattern = new_pattern;
        support = new_support;
        if fixed {
            termination = Termination::StalledSupports;
            break;
        }
    }

    let x_bar = normalize_output(&x)?;
    Ok(SolverResult {
        x_bar,
        x_raw: x,
        y_raw: Vec::new(),
        iterations,
        objective_trace,
        tol_trace,
        termination,
        subspace_steps_taken: 0,
        subspace_solves_failed: 0,
        wall_time: None,
    })
}
