#![allow(dead_code)]

use gpsp_core::datagen::SeededStream;
use gpsp_core::{DenseMatrix, Iterate, ModelParams, ProblemData};

pub fn random_problem(stream: &mut SeededStream, m: usize, n: usize) -> ProblemData {
    let phi = DenseMatrix::from_fn(m, n, |_, _| stream.gaussian());
    let c = (0..m)
        .map(|_| if stream.uniform() < 0.5 { -1.0 } else { 1.0 })
        .collect();
    ProblemData::new(phi, c).unwrap()
}

pub fn random_vec(stream: &mut SeededStream, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * stream.gaussian()).collect()
}

/// Squared distance from `x` to `{‖w‖₀ ≤ s}` by enumerating every mask.
pub fn brute_dist_sq_s(x: &[f64], s: usize) -> f64 {
    let n = x.len();
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize <= s)
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| x[i] * x[i])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Squared distance from `y` to `{‖w₊‖₀ ≤ k}`, candidates `wᵢ ∈ {0, yᵢ}`.
pub fn brute_dist_sq_k(y: &[f64], k: usize) -> f64 {
    let m = y.len();
    (0u32..1 << m)
        .filter(|mask| (0..m).filter(|i| mask & (1 << i) != 0 && y[*i] > 0.0).count() <= k)
        .map(|mask| {
            (0..m)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| y[i] * y[i])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Central differences of `objective` at `z`, stacked `(x; y)`.
pub fn finite_difference_gradient(prob: &ProblemData, params: &ModelParams, z: &Iterate, h: f64) -> Vec<f64> {
    let n = prob.n();
    let base = z.to_stacked();
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = gpsp_core::model::objective(prob, params, &Iterate::from_stacked(&plus, n)).unwrap();
            let fm = gpsp_core::model::objective(prob, params, &Iterate::from_stacked(&minus, n)).unwrap();
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    diff / scale
}
