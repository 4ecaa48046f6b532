//! Optimality certificates for the double-sparsity problem.
//!
//! * [`check_local_kkt`]: the support-wise conditions characterizing local
//!   minimizers.
//! * [`check_tau_stationary`]: `z ∈ Π_F(z − τ∇f(z))`, written coordinatewise.
//! * [`tau_star`]: the closed-form step `τ*` for which a local minimizer is
//!   `τ*`-stationary; `τ* ≥ 1/(2λ_min)` certifies a global minimizer
//!   ([`certify_global`]).
//! * [`error_bound_diagnostic`]: the recovery bound `2·sin(φπ)`.
//!
//! Violations are measured in gradient units. Equalities contribute `|∇ᵢ|`,
//! sign conditions their one-sided excess, and the bounds of the stationarity
//! test their excess over `‖x‖_[s]/τ` or `‖y₊‖_[k]/τ`. The count `‖y₊‖₀ = k`
//! treats entries in `[0, tol]` as zero.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{eigen_bounds, EIGEN_SIZE_CAP};
use crate::linalg::{self, Cholesky};
use crate::model::{count_nonzero, count_positive, gradient, Gradient, Iterate, ModelParams, ProblemData};
use crate::projections::SupportSelection;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Largest `m` for which the zero-solution assumption is checked exhaustively.
pub const ZERO_SOLUTION_CHECK_MAX_M: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub passed: bool,
    /// Largest violation of the gradient conditions (`≥ 0`).
    pub max_violation: f64,
    /// Whether `#{yᵢ > tol} = k` held.
    pub count_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationarityReport {
    pub is_tau_stationary: bool,
    pub tau_used: f64,
    pub max_violation: f64,
    pub kkt_ok: bool,
    /// `None` when the local conditions fail and `τ*` is undefined.
    pub tau_star: Option<f64>,
    pub global_certified: bool,
    pub lambda_min_used: Option<f64>,
    /// `x = 0`, or the zero-solution assumption fails on a small instance.
    pub degenerate: bool,
    /// `Some(true/false)` when checked (`m ≤ 20`), `None` otherwise.
    pub zero_solution_excluded: Option<bool>,
    /// Why the global certificate could not be evaluated, if it could not.
    pub unavailable_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorBoundDiagnostic {
    pub phi: f64,
    /// `2·sin(φπ)` while `φ ≤ 1/2`; the trivial bound 2 beyond.
    pub bound: f64,
    /// `φ ∈ (0, 1/2]`.
    pub within_validity: bool,
    /// `c_A / (√(m−k) − 1)` when `c_A` is supplied.
    pub eta_ceiling: Option<f64>,
}

/// `‖v‖_[i]`: the `i`-th largest entry of `values` (1-based). Zero if there
/// are fewer than `i` entries.
fn ith_largest(mut values: Vec<f64>, i: usize) -> f64 {
    if i == 0 || values.len() < i {
        return 0.0;
    }
    values.select_nth_unstable_by(i - 1, |a, b| b.total_cmp(a));
    values[i - 1]
}

/// `‖x‖_[s]`, the `s`-th largest magnitude.
pub fn kth_largest_abs(x: &[f64], s: usize) -> f64 {
    ith_largest(x.iter().map(|v| libm::fabs(*v)).collect(), s)
}

/// `‖y₊‖_[k]`, the `k`-th largest positive part. `+∞` for `k = 0`, where no
/// positive entry survives the projection and the bound is vacuous.
pub fn kth_largest_positive(y: &[f64], k: usize) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    ith_largest(y.iter().map(|v| v.max(0.0)).collect(), k)
}

fn count_above(y: &[f64], tol: f64) -> usize {
    y.iter().filter(|&&v| v > tol).count()
}

fn require_feasible(params: &ModelParams, z: &Iterate) -> Result<()> {
    if z.is_feasible(params.s, params.k) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "point is infeasible: ‖x‖₀ = {} (s = {}), ‖y₊‖₀ = {} (k = {})",
            count_nonzero(&z.x),
            params.s,
            count_positive(&z.y),
            params.k
        )))
    }
}

fn kkt_violation(params: &ModelParams, z: &Iterate, g: &Gradient) -> f64 {
    let x_full_rank = count_nonzero(&z.x) == params.s;
    let mut worst = 0.0f64;
    for (xi, gi) in z.x.iter().zip(&g.x) {
        if !x_full_rank || *xi != 0.0 {
            worst = worst.max(libm::fabs(*gi));
        }
    }
    for (yi, gi) in z.y.iter().zip(&g.y) {
        let v = if *yi != 0.0 { libm::fabs(*gi) } else { gi.max(0.0) };
        worst = worst.max(v);
    }
    worst
}

/// Local-minimizer conditions: `∇ₓf = 0` (all of it if `‖x‖₀ < s`, on the
/// support if `‖x‖₀ = s`), `∇ᵧf = 0` on `supp(y)`, `∇ᵧf ≤ 0` off it, and
/// `‖y₊‖₀ = k`.
pub fn check_local_kkt(prob: &ProblemData, params: &ModelParams, z: &Iterate, tol: f64) -> Result<ConditionCheck> {
    params.validate_for(prob)?;
    z.check_dims(prob)?;
    require_feasible(params, z)?;
    let g = gradient(prob, params, z)?;
    let max_violation = kkt_violation(params, z, &g);
    let count_ok = count_above(&z.y, tol) == params.k;
    Ok(ConditionCheck {
        passed: count_ok && max_violation <= tol,
        max_violation,
        count_ok,
    })
}

fn tau_violation(params: &ModelParams, z: &Iterate, g: &Gradient, tau: f64) -> f64 {
    let x_bound = kth_largest_abs(&z.x, params.s) / tau;
    let y_bound = kth_largest_positive(&z.y, params.k) / tau;
    let mut worst = 0.0f64;
    for (xi, gi) in z.x.iter().zip(&g.x) {
        let v = if *xi != 0.0 {
            libm::fabs(*gi)
        } else {
            (libm::fabs(*gi) - x_bound).max(0.0)
        };
        worst = worst.max(v);
    }
    for (yi, gi) in z.y.iter().zip(&g.y) {
        let v = if *yi != 0.0 {
            libm::fabs(*gi)
        } else {
            gi.max(-gi - y_bound).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// `τ`-stationarity: gradient zero on both supports, `τ|∇ₓfᵢ| ≤ ‖x‖_[s]` off
/// `supp(x)`, `−‖y₊‖_[k] ≤ τ∇ᵧfᵢ ≤ 0` off `supp(y)`, and `‖y₊‖₀ = k`.
pub fn check_tau_stationary(
    prob: &ProblemData,
    params: &ModelParams,
    z: &Iterate,
    tau: f64,
    tol: f64,
) -> Result<ConditionCheck> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    params.validate_for(prob)?;
    z.check_dims(prob)?;
    if !z.is_feasible(params.s, params.k) {
        return Ok(ConditionCheck {
            passed: false,
            max_violation: f64::INFINITY,
            count_ok: false,
        });
    }
    let g = gradient(prob, params, z)?;
    let max_violation = tau_violation(params, z, &g, tau);
    let count_ok = count_above(&z.y, tol) == params.k;
    Ok(ConditionCheck {
        passed: count_ok && max_violation <= tol,
        max_violation,
        count_ok,
    })
}

/// `ξ* = 2εη (A_{Γ̄T} A_{Γ̄T}ᵀ + ηI)⁻¹ 1` with `T = supp(x)`, `Γ̄` the zeros of `y`.
pub fn xi_star(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<Vec<f64>> {
    z.check_dims(prob)?;
    let t_set = SupportSelection::support_of(&z.x);
    let gamma_bar = SupportSelection::support_of(&z.y).complement(prob.m());
    let rows = gamma_bar.indices();
    let q = rows.len();
    if params.eta == 0.0 {
        return Ok(vec![0.0; q]);
    }
    let a = prob.a();
    let mut mat = vec![0.0; q * q];
    for (p, &ip) in rows.iter().enumerate() {
        let row_p = a.row(ip);
        for (r, &ir) in rows.iter().enumerate().take(p + 1) {
            let row_r = a.row(ir);
            let v: f64 = t_set.indices().iter().map(|&j| row_p[j] * row_r[j]).sum();
            mat[p * q + r] = v;
            mat[r * q + p] = v;
        }
        mat[p * q + p] += params.eta;
    }
    let chol = Cholesky::factor(q, &mat)?;
    let mut xi = vec![1.0; q];
    chol.solve_in_place(&mut xi);
    let scale = 2.0 * params.epsilon * params.eta;
    xi.iter_mut().for_each(|v| *v *= scale);
    Ok(xi)
}

/// `τ* = ‖y₊‖_[k] / ‖ξ*‖_∞`, and when `‖x‖₀ = s` the minimum of that with
/// `‖x‖_[s] / ‖A_{Γ̄T̄}ᵀ ξ*‖_∞`. A zero denominator gives `+∞`.
///
/// Requires `z` to pass [`check_local_kkt`] at [`DEFAULT_TOL`].
pub fn tau_star(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<f64> {
    let kkt = check_local_kkt(prob, params, z, DEFAULT_TOL)?;
    if !kkt.passed {
        return Err(Error::Precondition(format!(
            "tau* needs a point satisfying the local conditions (violation {:.3e}, count ok: {})",
            kkt.max_violation, kkt.count_ok
        )));
    }
    tau_star_unchecked(prob, params, z)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn tau_star_unchecked(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<f64> {
    let xi = xi_star(prob, params, z)?;
    let y_term = ratio(kth_largest_positive(&z.y, params.k), linalg::inf_norm(&xi));
    if count_nonzero(&z.x) < params.s {
        return Ok(y_term);
    }
    let t_set = SupportSelection::support_of(&z.x);
    let gamma_bar = SupportSelection::support_of(&z.y).complement(prob.m());
    let a = prob.a();
    let mut at_xi = vec![0.0; prob.n()];
    for (&i, &w) in gamma_bar.indices().iter().zip(&xi) {
        linalg::axpy(w, a.row(i), &mut at_xi);
    }
    let off_support = t_set
        .complement(prob.n())
        .indices()
        .iter()
        .fold(0.0f64, |m, &j| m.max(libm::fabs(at_xi[j])));
    let x_term = ratio(kth_largest_abs(&z.x, params.s), off_support);
    Ok(y_term.min(x_term))
}

/// Exhaustive check that `‖A_{Υ:}ᵀ1‖_∞ > 0` for every `|Υ| = m − k`.
/// `None` when `m` exceeds [`ZERO_SOLUTION_CHECK_MAX_M`].
pub fn zero_solution_excluded(prob: &ProblemData, k: usize) -> Option<bool> {
    let m = prob.m();
    if m > ZERO_SOLUTION_CHECK_MAX_M || k > m {
        return None;
    }
    let a = prob.a();
    let mut total = vec![0.0; prob.n()];
    for i in 0..m {
        linalg::axpy(1.0, a.row(i), &mut total);
    }
    // Enumerate the k removed rows as combinations in lexicographic order.
    let mut removed: Vec<usize> = (0..k).collect();
    loop {
        let mut sums = total.clone();
        for &i in &removed {
            linalg::axpy(-1.0, a.row(i), &mut sums);
        }
        if linalg::inf_norm(&sums) <= 1e-12 * (1.0 + linalg::inf_norm(&total)) {
            return Some(false);
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return Some(true);
            }
            pos -= 1;
            if removed[pos] < m - k + pos {
                removed[pos] += 1;
                for q in pos + 1..k {
                    removed[q] = removed[q - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Evaluates every certificate at `z`.
///
/// `global_certified` is `τ* ≥ 1/(2λ_min)` at a point passing the local
/// conditions. Problems too large for [`EIGEN_SIZE_CAP`] or with `η = 0` get
/// a report with the certificate marked unavailable.
pub fn certify_global(prob: &ProblemData, params: &ModelParams, z: &Iterate) -> Result<StationarityReport> {
    let kkt = check_local_kkt(prob, params, z, DEFAULT_TOL)?;
    let tau_star = if kkt.passed {
        Some(tau_star_unchecked(prob, params, z)?)
    } else {
        None
    };

    let size = prob.n() + prob.m();
    let (lambda_min, unavailable_reason) = if params.eta_is_zero() {
        (None, Some(String::from("eta = 0: H may be singular")))
    } else if size > EIGEN_SIZE_CAP {
        (
            None,
            Some(format!("n + m = {size} exceeds the eigenvalue cap {EIGEN_SIZE_CAP}")),
        )
    } else {
        (Some(eigen_bounds(prob, params)?.lambda_min), None)
    };

    let tau_used = match (tau_star, lambda_min) {
        (Some(t), _) if t.is_finite() => t,
        (_, Some(l)) => 1.0 / (2.0 * l),
        _ => 1.0,
    };
    let stationary = check_tau_stationary(prob, params, z, tau_used, DEFAULT_TOL)?;
    let global_certified = match (tau_star, lambda_min) {
        (Some(t), Some(l)) => t >= 1.0 / (2.0 * l),
        _ => false,
    };
    let excluded = zero_solution_excluded(prob, params.k);
    let degenerate = count_nonzero(&z.x) == 0 || excluded == Some(false);

    Ok(StationarityReport {
        is_tau_stationary: stationary.passed,
        tau_used,
        max_violation: stationary.max_violation.max(kkt.max_violation),
        kkt_ok: kkt.passed,
        tau_star,
        global_certified,
        lambda_min_used: lambda_min,
        degenerate,
        zero_solution_excluded: excluded,
        unavailable_reason,
    })
}

/// `φ = k/m + ϱ/4 + δ` and the bound `2·sin(φπ)` on `‖x̂ − x_true‖`.
///
/// `c_a`, when known, yields the ridge ceiling `c_A / (√(m−k) − 1)`.
pub fn error_bound_diagnostic(
    m: usize,
    k: usize,
    rho_noise: f64,
    delta: f64,
    c_a: Option<f64>,
) -> Result<ErrorBoundDiagnostic> {
    if k >= m {
        return Err(Error::invalid(format!("need m > k, got m = {m}, k = {k}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0, 1)")));
    }
    if !(rho_noise >= 0.0) {
        return Err(Error::invalid("noise level must be non-negative"));
    }
    let phi = k as f64 / m as f64 + rho_noise / 4.0 + delta;
    let within_validity = phi > 0.0 && phi <= 0.5;
    let bound = if within_validity {
        2.0 * libm::sin(phi * core::f64::consts::PI)
    } else {
        2.0
    };
    let root = libm::sqrt((m - k) as f64);
    let eta_ceiling = c_a.filter(|_| root > 1.0).map(|c| c / (root - 1.0));
    Ok(ErrorBoundDiagnostic {
        phi,
        bound,
        within_validity,
        eta_ceiling,
    })
}
