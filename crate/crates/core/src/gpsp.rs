//! Gradient projection subspace pursuit (GPSP).
//!
//! Each iteration takes a projected gradient step `u = Π_F(z − τ∇f(z))` with
//! Armijo backtracking `τ = β^σ`. When the step leaves the positive part of
//! `y` in place (and either keeps the support of `x` or has nearly zero
//! `x`-gradient), a subspace step solves the quadratic restricted to the
//! current supports in closed form and replaces `u` if it decreases `f`
//! enough. The loop stops once `‖u − z‖ ≤ tol`.
//!
//! After the tolerance is met the solver keeps going, for at most
//! `finish_max_iter` further iterations, until `‖u − z‖` drops to
//! [`FIXED_POINT_TOL`]. Supports settle within a few steps, after which the
//! subspace step lands exactly on a `τ`-stationary point and `u = z` up to
//! rounding. `finish_max_iter = 0` stops at the tolerance.
//!
//! Minimizers scale linearly with `ε`, so by default `tol` is read relative
//! to [`REFERENCE_EPSILON`]: the effective threshold is `tol·ε/0.01`. At the
//! default `ε = 0.01` this is the plain absolute rule ([`TolMode::Absolute`]).

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::linalg::{self, Cholesky};
use crate::model::{
    gradient_from_residual, objective_from_residual, residual, Gradient, Iterate, ModelParams, ProblemData,
};
use crate::projections::{project_f, IndexPartition, SupportSelection};
use crate::{Error, Result};

/// Entries kept by each [`TraceBuffer`].
pub const TRACE_CAPACITY: usize = 64;
/// Model offset at which a relative `tol` is taken at face value.
pub const REFERENCE_EPSILON: f64 = 0.01;
/// Threshold on `‖u − z‖` ending the finishing phase, scaled like `tol`.
pub const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TolMode {
    Absolute,
    /// `tol·ε / REFERENCE_EPSILON`.
    #[default]
    RelativeToEpsilon,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub beta: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; the origin when `None`.
    pub z0: Option<Iterate>,
    pub max_backtracks: u32,
    pub tol_mode: TolMode,
    pub subspace: SubspaceMode,
    /// Extra iterations allowed after the tolerance is met.
    pub finish_max_iter: usize,
}

/// How the subspace problem over `Ω(z)` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SubspaceMode {
    /// The unconstrained closed form; discarded when `ỹ` has a positive entry on `Γ₋`.
    ClosedForm,
    /// The exact minimizer over `Ω(z)`, `y_{Γ₋} ≤ 0` included ([`subspace_minimize`]).
    #[default]
    ActiveSet,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            rho: 1e-6,
            tol: 1e-4,
            max_iter: 2000,
            z0: None,
            max_backtracks: 60,
            tol_mode: TolMode::RelativeToEpsilon,
            subspace: SubspaceMode::ActiveSet,
            finish_max_iter: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta = {} outside (0, 1)", self.beta)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho = {} must be positive", self.rho)));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol = {} must be non-negative", self.tol)));
        }
        Ok(())
    }

    /// Threshold applied to `‖u − z‖` and to `‖∇ₓf(u)‖` in the trigger.
    pub fn effective_tol(&self, params: &ModelParams) -> f64 {
        self.tol * self.tol_scale(params)
    }

    fn tol_scale(&self, params: &ModelParams) -> f64 {
        match self.tol_mode {
            TolMode::Absolute => 1.0,
            TolMode::RelativeToEpsilon => params.epsilon / REFERENCE_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Termination {
    ToleranceMet,
    MaxIter,
    /// The iterate stopped changing before the tolerance was met.
    StalledSupports,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ToleranceMet => "tolerance_met",
            Termination::MaxIter => "max_iter",
            Termination::StalledSupports => "stalled_supports",
        }
    }
}

impl core::fmt::Display for Termination {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The last [`TRACE_CAPACITY`] values of a per-iteration quantity.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceBuffer {
    values: VecDeque<f64>,
    total: usize,
}

impl TraceBuffer {
    pub fn push(&mut self, v: f64) {
        if self.values.len() == TRACE_CAPACITY {
            self.values.pop_front();
        }
        self.values.push_back(v);
        self.total += 1;
    }

    /// Retained values, oldest first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.back().copied()
    }

    /// Number of values ever pushed.
    pub fn total(&self) -> usize {
        self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// `x / ‖x‖`.
    pub x_bar: Vec<f64>,
    pub x_raw: Vec<f64>,
    /// Empty for solvers without a `y` block.
    pub y_raw: Vec<f64>,
    pub iterations: usize,
    pub objective_trace: TraceBuffer,
    pub tol_trace: TraceBuffer,
    pub termination: Termination,
    pub subspace_steps_taken: usize,
    /// Subspace systems that could not be factored (only possible with `η = 0`).
    pub subspace_solves_failed: usize,
    /// Filled in by callers with a clock.
    pub wall_time: Option<Duration>,
}

/// Outcome of the Armijo search from one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep {
    pub tau: f64,
    pub sigma: u32,
    pub u: Iterate,
    pub f_u: f64,
    residual_u: Vec<f64>,
}

/// Smallest `σ` with `f(u) ≤ f(z) − ρ‖u − z‖²`, `u = Π_F(z − β^σ∇f(z))`.
pub fn armijo_step(prob: &ProblemData, params: &ModelParams, z: &Iterate, cfg: &SolverConfig) -> Result<ArmijoStep> {
    cfg.validate()?;
    params.validate_for(prob)?;
    let r = residual(prob, params, z)?;
    let f_z = objective_from_residual(&r, &z.x, params.eta);
    let g = gradient_from_residual(prob, params, &r, &z.x);
    armijo_from(prob, params, z, f_z, &g, cfg)
}

fn armijo_from(
    prob: &ProblemData,
    params: &ModelParams,
    z: &Iterate,
    f_z: f64,
    g: &Gradient,
    cfg: &SolverConfig,
) -> Result<ArmijoStep> {
    let mut tau = 1.0;
    let mut trial = z.clone();
    for sigma in 0..=cfg.max_backtracks {
        for ((t, zi), gi) in trial.x.iter_mut().zip(&z.x).zip(&g.x) {
            *t = zi - tau * gi;
        }
        for ((t, zi), gi) in trial.y.iter_mut().zip(&z.y).zip(&g.y) {
            *t = zi - tau * gi;
        }
        let u = project_f(&trial, params.s, params.k)?;
        let r_u = residual(prob, params, &u)?;
        let f_u = objective_from_residual(&r_u, &u.x, params.eta);
        if f_u <= f_z - cfg.rho * u.dist_sq(z) {
            return Ok(ArmijoStep {
                tau,
                sigma,
                u,
                f_u,
                residual_u: r_u,
            });
        }
        tau *= cfg.beta;
    }
    Err(Error::StalledLineSearch {
        halvings: cfg.max_backtracks,
    })
}

/// Whether a subspace step is attempted after the gradient step `z → u`:
/// `Γ₊(z) = Γ₊(u)` and either `supp(x_z) = supp(x_u)` or `‖∇ₓf(u)‖ ≤ tol`.
pub fn subspace_trigger(z: &Iterate, u: &Iterate, grad_x_at_u: &[f64], tol: f64) -> bool {
    trigger_with(z, u, tol, || linalg::norm(grad_x_at_u))
}

fn trigger_with(z: &Iterate, u: &Iterate, tol: f64, grad_norm: impl FnOnce() -> f64) -> bool {
    let same_plus = z.y.iter().zip(&u.y).all(|(a, b)| (*a > 0.0) == (*b > 0.0));
    if !same_plus {
        return false;
    }
    let same_support = z.x.iter().zip(&u.x).all(|(a, b)| (*a != 0.0) == (*b != 0.0));
    same_support || grad_norm() <= tol
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSolution {
    pub v: Iterate,
    /// `ỹ ≤ 0` on `Γ₋`.
    pub feasible: bool,
}

/// Minimizes `f` over `supp(x) ⊆ T`, `y = 0` on `Γ₀`, `y` free elsewhere:
///
/// ```text
/// x_T = (A_{Γ₀T}ᵀ A_{Γ₀T} + ηI)⁻¹ A_{Γ₀T}ᵀ ε1,   ỹ = ε1 − A_{·T} x_T off Γ₀.
/// ```
///
/// The candidate is feasible when the free `y` entries on `Γ₋` come out
/// non-positive.
pub fn subspace_solve(
    prob: &ProblemData,
    params: &ModelParams,
    t_set: &SupportSelection,
    gamma_zero: &SupportSelection,
    gamma_minus: &SupportSelection,
) -> Result<SubspaceSolution> {
    check_sets(prob, t_set, gamma_zero, gamma_minus)?;
    let x_t = ridge_on_rows(prob, params, t_set.indices(), gamma_zero.indices().iter().copied())?;
    let v = assemble(
        prob,
        params,
        t_set.indices(),
        &x_t,
        |i| gamma_zero.contains(i),
        |_| false,
    );
    let feasible = gamma_minus.indices().iter().all(|&i| v.y[i] <= 0.0);
    Ok(SubspaceSolution { v, feasible })
}

/// Largest number of Newton passes in [`subspace_minimize`].
pub const ACTIVE_SET_MAX_PASSES: usize = 100;

/// The exact minimizer of `f` over
/// `Ω = {x_{T̄} = 0, y_{Γ₀} = 0, y_{Γ₋} ≤ 0}`.
///
/// Eliminating `y` leaves
/// `φ(x_T) = Σ_{Γ₀}(aᵢx − ε)² + Σ_{Γ₋} min(0, aᵢx − ε)² + η‖x‖²`, convex,
/// `C¹` and piecewise quadratic. Starting from the closed form of
/// [`subspace_solve`], each pass takes the minimizer of the piece at the
/// current point (rows of `Γ₋` with `aᵢx < ε` join `Γ₀`) as a Newton
/// direction, with backtracking on `φ`. A full step that keeps the active
/// rows unchanged is the exact minimizer. A pass cap hit reports
/// `feasible = false`.
pub fn subspace_minimize(
    prob: &ProblemData,
    params: &ModelParams,
    t_set: &SupportSelection,
    gamma_zero: &SupportSelection,
    gamma_minus: &SupportSelection,
) -> Result<SubspaceSolution> {
    check_sets(prob, t_set, gamma_zero, gamma_minus)?;
    let a = prob.a();
    let t = t_set.indices();
    let eps = params.epsilon;
    let row_value = |i: usize, x_t: &[f64]| -> f64 {
        let row = a.row(i);
        t.iter().zip(x_t).map(|(&j, &v)| row[j] * v).sum()
    };
    let phi = |x_t: &[f64]| -> f64 {
        let zero: f64 = gamma_zero
            .indices()
            .iter()
            .map(|&i| (row_value(i, x_t) - eps).powi(2))
            .sum();
        let minus: f64 = gamma_minus
            .indices()
            .iter()
            .map(|&i| (row_value(i, x_t) - eps).min(0.0).powi(2))
            .sum();
        zero + minus + params.eta * linalg::norm_sq(x_t)
    };
    let active = |x_t: &[f64]| -> Vec<usize> {
        gamma_minus
            .indices()
            .iter()
            .copied()
            .filter(|&i| row_value(i, x_t) < eps)
            .collect()
    };

    let mut x_t = ridge_on_rows(prob, params, t, gamma_zero.indices().iter().copied())?;
    let mut rows = active(&x_t);
    if rows.is_empty() {
        let v = assemble(
            prob,
            params,
            t,
            &x_t,
            |i| gamma_zero.contains(i),
            |i| gamma_minus.contains(i),
        );
        return Ok(SubspaceSolution { v, feasible: true });
    }
    let mut f_cur = phi(&x_t);
    for _ in 0..ACTIVE_SET_MAX_PASSES {
        let target = ridge_on_rows(
            prob,
            params,
            t,
            gamma_zero.indices().iter().copied().chain(rows.iter().copied()),
        )?;
        let dir: Vec<f64> = target.iter().zip(&x_t).map(|(n, o)| n - o).collect();
        if linalg::norm(&dir) <= 1e-15 * (1.0 + linalg::norm(&x_t)) {
            let v = assemble(
                prob,
                params,
                t,
                &x_t,
                |i| gamma_zero.contains(i),
                |i| gamma_minus.contains(i),
            );
            return Ok(SubspaceSolution { v, feasible: true });
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x_t.iter().zip(&dir).map(|(o, d)| o + step * d).collect();
            let f_trial = phi(&trial);
            if f_trial < f_cur || (step == 1.0 && f_trial <= f_cur) {
                accepted = Some((trial, f_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            break;
        };
        let next_rows = active(&next);
        let done = step == 1.0 && next_rows == rows;
        x_t = next;
        f_cur = f_next;
        rows = next_rows;
        if done {
            let v = assemble(
                prob,
                params,
                t,
                &x_t,
                |i| gamma_zero.contains(i),
                |i| gamma_minus.contains(i),
            );
            return Ok(SubspaceSolution { v, feasible: true });
        }
    }
    let fallback = subspace_solve(prob, params, t_set, gamma_zero, gamma_minus)?;
    Ok(SubspaceSolution {
        v: fallback.v,
        feasible: false,
    })
}

fn check_sets(
    prob: &ProblemData,
    t_set: &SupportSelection,
    gamma_zero: &SupportSelection,
    gamma_minus: &SupportSelection,
) -> Result<()> {
    if t_set.indices().last().is_some_and(|&j| j >= prob.n()) {
        return Err(Error::invalid("support index out of range"));
    }
    let m = prob.m();
    if gamma_zero.indices().last().is_some_and(|&i| i >= m) || gamma_minus.indices().last().is_some_and(|&i| i >= m) {
        return Err(Error::invalid("row index out of range"));
    }
    Ok(())
}

/// `x_T = (A_{RT}ᵀ A_{RT} + ηI)⁻¹ A_{RT}ᵀ ε1` over the rows `R`.
fn ridge_on_rows(
    prob: &ProblemData,
    params: &ModelParams,
    t: &[usize],
    rows: impl Iterator<Item = usize>,
) -> Result<Vec<f64>> {
    let p = t.len();
    let mut x_t = vec![0.0; p];
    if p == 0 {
        return Ok(x_t);
    }
    let a = prob.a();
    let eps = params.epsilon;
    let mut gram = vec![0.0; p * p];
    for i in rows {
        let row = a.row(i);
        for (q, &jq) in t.iter().enumerate() {
            let aq = row[jq];
            x_t[q] += eps * aq;
            if aq == 0.0 {
                continue;
            }
            for (r, &jr) in t.iter().enumerate().take(q + 1) {
                gram[q * p + r] += aq * row[jr];
            }
        }
    }
    for q in 0..p {
        gram[q * p + q] += params.eta;
        for r in 0..q {
            gram[r * p + q] = gram[q * p + r];
        }
    }
    Cholesky::factor(p, &gram)?.solve_in_place(&mut x_t);
    Ok(x_t)
}

/// `x` from `x_T`; `y = 0` on zero rows, `min(0, ε − aᵢx)` on clipped rows and
/// `ε − aᵢx` elsewhere.
fn assemble(
    prob: &ProblemData,
    params: &ModelParams,
    t: &[usize],
    x_t: &[f64],
    is_zero: impl Fn(usize) -> bool,
    is_clipped: impl Fn(usize) -> bool,
) -> Iterate {
    let a = prob.a();
    let mut x = vec![0.0; prob.n()];
    for (&j, &v) in t.iter().zip(x_t) {
        x[j] = v;
    }
    let y = (0..prob.m())
        .map(|i| {
            if is_zero(i) {
                return 0.0;
            }
            let row = a.row(i);
            let free = params.epsilon - t.iter().zip(x_t).map(|(&j, &v)| row[j] * v).sum::<f64>();
            if is_clipped(i) {
                free.min(0.0)
            } else {
                free
            }
        })
        .collect();
    Iterate::new(x, y)
}

/// `x / ‖x‖`, or [`Error::ZeroSignal`] for `x = 0`.
pub fn normalize_output(x: &[f64]) -> Result<Vec<f64>> {
    let nrm = linalg::norm(x);
    if !(nrm > 0.0) {
        return Err(Error::ZeroSignal);
    }
    Ok(x.iter().map(|v| v / nrm).collect())
}

/// One iteration as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord<'a> {
    /// 0-based.
    pub iteration: usize,
    pub tau: f64,
    pub sigma: u32,
    pub f_before: f64,
    /// `f` at the gradient step `u`.
    pub f_gradient_step: f64,
    /// `f` at the accepted next iterate.
    pub f_after: f64,
    /// `‖u − z‖`.
    pub tol: f64,
    /// `‖z_next − z‖²`.
    pub step_sq: f64,
    pub subspace_attempted: bool,
    pub subspace_taken: bool,
    pub z_next: &'a Iterate,
}

pub fn gpsp_solve(prob: &ProblemData, params: &ModelParams, cfg: &SolverConfig) -> Result<SolverResult> {
    gpsp_solve_observed(prob, params, cfg, |_| {})
}

/// [`gpsp_solve`] calling `observer` after every iteration.
pub fn gpsp_solve_observed(
    prob: &ProblemData,
    params: &ModelParams,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationRecord<'_>),
) -> Result<SolverResult> {
    cfg.validate()?;
    params.validate_for(prob)?;
    let mut z = match &cfg.z0 {
        Some(z0) => {
            z0.check_dims(prob)?;
            if !z0.is_feasible(params.s, params.k) {
                return Err(Error::invalid("starting point is infeasible"));
            }
            z0.clone()
        }
        None => Iterate::zeros(prob.n(), prob.m()),
    };
    let r = residual(prob, params, &z)?;
    let mut f_z = objective_from_residual(&r, &z.x, params.eta);
    let mut g = gradient_from_residual(prob, params, &r, &z.x);

    let mut objective_trace = TraceBuffer::default();
    let mut tol_trace = TraceBuffer::default();
    let mut subspace_steps_taken = 0;
    let mut subspace_solves_failed = 0;
    let mut iterations = 0;
    let mut termination = Termination::MaxIter;
    let tol = cfg.effective_tol(params);
    let fixed_point_tol = FIXED_POINT_TOL * cfg.tol_scale(params);
    let mut met_at: Option<usize> = None;

    loop {
        match met_at {
            None if iterations >= cfg.max_iter => break,
            Some(at) if iterations - at >= cfg.finish_max_iter => break,
            _ => {}
        }
        let step = armijo_from(prob, params, &z, f_z, &g, cfg)?;
        let tol_l = libm::sqrt(step.u.dist_sq(&z));

        let mut g_u: Option<Gradient> = None;
        let attempt = trigger_with(&z, &step.u, tol, || {
            let gu = gradient_from_residual(prob, params, &step.residual_u, &step.u.x);
            let nrm = linalg::norm(&gu.x);
            g_u = Some(gu);
            nrm
        });

        let mut next: Option<(Iterate, Vec<f64>, f64)> = None;
        if attempt {
            let part = IndexPartition::of(&z.y);
            let t_set = SupportSelection::support_of(&z.x);
            let solved = match cfg.subspace {
                SubspaceMode::ClosedForm => subspace_solve(prob, params, &t_set, &part.gamma_zero, &part.gamma_minus),
                SubspaceMode::ActiveSet => subspace_minimize(prob, params, &t_set, &part.gamma_zero, &part.gamma_minus),
            };
            match solved {
                Ok(sol) if sol.feasible => {
                    let r_v = residual(prob, params, &sol.v)?;
                    let f_v = objective_from_residual(&r_v, &sol.v.x, params.eta);
                    if f_v <= step.f_u - cfg.rho * sol.v.dist_sq(&step.u) {
                        next = Some((sol.v, r_v, f_v));
                    }
                }
                Ok(_) => {}
                Err(Error::NotPositiveDefinite) => subspace_solves_failed += 1,
                Err(e) => return Err(e),
            }
        }
        let subspace_taken = next.is_some();
        let (z_next, f_next, g_next) = match next {
            Some((v, r_v, f_v)) => {
                subspace_steps_taken += 1;
                let gv = gradient_from_residual(prob, params, &r_v, &v.x);
                (v, f_v, gv)
            }
            None => {
                let gu = g_u
                    .take()
                    .unwrap_or_else(|| gradient_from_residual(prob, params, &step.residual_u, &step.u.x));
                (step.u.clone(), step.f_u, gu)
            }
        };
        debug_assert!(z_next.is_feasible(params.s, params.k));

        let unchanged = z_next == z;
        let step_sq = z_next.dist_sq(&z);
        objective_trace.push(f_next);
        tol_trace.push(tol_l);
        observer(&IterationRecord {
            iteration: iterations,
            tau: step.tau,
            sigma: step.sigma,
            f_before: f_z,
            f_gradient_step: step.f_u,
            f_after: f_next,
            tol: tol_l,
            step_sq,
            subspace_attempted: attempt,
            subspace_taken,
            z_next: &z_next,
        });

        z = z_next;
        f_z = f_next;
        g = g_next;
        iterations += 1;

        if met_at.is_some() {
            if tol_l <= fixed_point_tol {
                break;
            }
            continue;
        }
        if tol_l <= tol {
            termination = Termination::ToleranceMet;
            met_at = Some(iterations);
            if cfg.finish_max_iter == 0 || tol_l <= fixed_point_tol {
                break;
            }
            continue;
        }
        if unchanged {
            termination = Termination::StalledSupports;
            break;
        }
    }

    let x_bar = normalize_output(&z.x)?;
    Ok(SolverResult {
        x_bar,
        x_raw: z.x,
        y_raw: z.y,
        iterations,
        objective_trace,
        tol_trace,
        termination,
        subspace_steps_taken,
        subspace_solves_failed,
        wall_time: None,
    })
}
