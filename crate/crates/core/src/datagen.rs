//! Seeded synthetic instances.
//!
//! All randomness comes from one ChaCha20 stream seeded through
//! `SeedableRng::seed_from_u64`. Uniforms take the top 53 bits of a `u64`;
//! Gaussians use Box–Muller on consecutive uniform pairs with `libm`
//! transcendental functions, so a seed gives the same bits everywhere.
//!
//! Draw order for one instance:
//! 1. `Φ`, row by row (`m · n` Gaussians; correlated rows are then mixed),
//! 2. the support of `x_true`: the first `s*` slots of a Fisher–Yates pass over `0..n`,
//! 3. `s*` Gaussian values for those slots,
//! 4. `m` Gaussian noise values (always drawn, then scaled by `noise_sigma`),
//! 5. the flipped rows: the first `⌈r·m⌉` slots of a Fisher–Yates pass over `0..m`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::linalg::{self, DenseMatrix};
use crate::model::ProblemData;
use crate::{Error, Result};

/// `sgn(t)`: `+1` for `t > 0`, `−1` otherwise (so `sgn(0) = −1`).
pub fn sign_of(t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::invalid("sgn of NaN"));
    }
    Ok(if t > 0.0 { 1.0 } else { -1.0 })
}

/// `sign(t)`: like [`sign_of`] but `sign(0) = 0`.
pub fn signum_of(t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::invalid("sign of NaN"));
    }
    Ok(if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    })
}

#[inline]
pub(crate) fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `⌈r·m⌉`, ignoring rounding noise below `1e-9` (so `0.05 · 2500` stays 125).
pub fn flip_count(r: f64, m: usize) -> usize {
    let prod = r * m as f64;
    let rounded = libm::round(prod);
    if libm::fabs(prod - rounded) <= 1e-9 * f64::max(1.0, prod) {
        rounded as usize
    } else {
        libm::ceil(prod) as usize
    }
}

/// `⌈0.01·m⌉`, the default sign-flip budget.
pub fn default_k(m: usize) -> usize {
    flip_count(0.01, m)
}

/// Instance parameters. `v = None` gives independent rows, `Some(v)` rows
/// drawn from `N(0, Σ)` with `Σᵢⱼ = v^|i−j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub s_star: usize,
    pub r: f64,
    pub v: Option<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl GenSpec {
    pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;

    pub fn independent(n: usize, m: usize, s_star: usize, r: f64, seed: u64) -> Self {
        Self {
            n,
            m,
            s_star,
            r,
            v: None,
            noise_sigma: Self::DEFAULT_NOISE_SIGMA,
            seed,
        }
    }

    pub fn correlated(n: usize, m: usize, s_star: usize, r: f64, v: f64, seed: u64) -> Self {
        Self {
            v: Some(v),
            ..Self::independent(n, m, s_star, r, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n and m must be positive"));
        }
        if self.s_star == 0 || self.s_star > self.n {
            return Err(Error::invalid(format!(
                "s_star = {} outside [1, {}]",
                self.s_star, self.n
            )));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::invalid(format!("r = {} outside [0, 1)", self.r)));
        }
        if let Some(v) = self.v {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("v = {v} outside (0, 1)")));
            }
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid("noise_sigma must be finite and non-negative"));
        }
        if flip_count(self.r, self.m) > self.m {
            return Err(Error::invalid("more flips than measurements"));
        }
        Ok(())
    }
}

/// What the generator knows and the solver does not.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Unit vector with at most `s*` nonzeros.
    pub x_true: Vec<f64>,
    /// `sgn(Φ x_true)`, before noise and flips.
    pub c_true: Vec<f64>,
    /// Rows whose sign was flipped, sorted.
    pub flip_mask: Vec<usize>,
}

/// Uniform and Gaussian draws over a ChaCha20 stream.
#[derive(Debug, Clone)]
pub struct SeededStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; the second variate of each pair is cached.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare.take() {
            return g;
        }
        // 1 − U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    /// The first `count` entries of a Fisher–Yates shuffle of `0..len`.
    pub fn partial_shuffle(&mut self, len: usize, count: usize) -> Vec<usize> {
        let mut items: Vec<usize> = (0..len).collect();
        for i in 0..count.min(len) {
            let j = i + self.below(len - i);
            items.swap(i, j);
        }
        items.truncate(count.min(len));
        items
    }
}

/// Independent standard-normal `Φ` (Example with independent covariance).
pub fn gen_independent(spec: &GenSpec) -> Result<(ProblemData, GroundTruth)> {
    spec.validate()?;
    let spec = GenSpec { v: None, ..*spec };
    generate_with(&spec, |_, _| {})
}

/// Rows of `Φ` from `N(0, Σ)`, `Σᵢⱼ = v^|i−j|`.
///
/// A row is `L g` for standard-normal `g`, with `L` the lower Cholesky factor
/// of `Σ`. For this Toeplitz `Σ` the product reduces to the recursion
/// `φ₀ = g₀`, `φᵢ = v·φᵢ₋₁ + √(1−v²)·gᵢ`, which is what runs here.
pub fn gen_correlated(spec: &GenSpec) -> Result<(ProblemData, GroundTruth)> {
    spec.validate()?;
    let v = spec
        .v
        .ok_or_else(|| Error::invalid("correlated instance needs v in (0, 1)"))?;
    generate_with(spec, |row, _| correlate_row(row, v))
}

/// Dispatches on `spec.v`.
pub fn generate(spec: &GenSpec) -> Result<(ProblemData, GroundTruth)> {
    match spec.v {
        Some(_) => gen_correlated(spec),
        None => gen_independent(spec),
    }
}

pub(crate) fn correlate_row(row: &mut [f64], v: f64) {
    let scale = libm::sqrt(1.0 - v * v);
    for j in 1..row.len() {
        row[j] = v * row[j - 1] + scale * row[j];
    }
}

fn generate_with(spec: &GenSpec, mut mix_row: impl FnMut(&mut [f64], usize)) -> Result<(ProblemData, GroundTruth)> {
    let (n, m) = (spec.n, spec.m);
    let mut stream = SeededStream::new(spec.seed);

    let mut data = Vec::with_capacity(m * n);
    let mut row = vec![0.0; n];
    for i in 0..m {
        row.iter_mut().for_each(|t| *t = stream.gaussian());
        mix_row(&mut row, i);
        data.extend_from_slice(&row);
    }
    let phi = DenseMatrix::from_row_major(m, n, data)?;

    let support = stream.partial_shuffle(n, spec.s_star);
    let mut x_true = vec![0.0; n];
    for &j in &support {
        let g = stream.gaussian();
        // Push nonzeros away from zero before normalizing.
        x_true[j] = g + signum_of(g)?;
    }
    let norm = linalg::norm(&x_true);
    if !(norm > 0.0) {
        return Err(Error::ZeroSignal);
    }
    x_true.iter_mut().for_each(|t| *t /= norm);

    let support_sel: Vec<usize> = {
        let mut s = support.clone();
        s.sort_unstable();
        s
    };
    let mut clean = vec![0.0; m];
    phi.mul_vec_sparse_into(&x_true, &support_sel, &mut clean);
    let c_true: Vec<f64> = clean.iter().map(|&t| sgn(t)).collect();

    let noise: Vec<f64> = (0..m).map(|_| stream.gaussian() * spec.noise_sigma).collect();
    let mut c: Vec<f64> = clean.iter().zip(&noise).map(|(t, e)| sgn(t + e)).collect();

    let mut flip_mask = stream.partial_shuffle(m, flip_count(spec.r, m));
    flip_mask.sort_unstable();
    for &i in &flip_mask {
        c[i] = -c[i];
    }

    let prob = ProblemData::new(phi, c)?;
    Ok((
        prob,
        GroundTruth {
            x_true,
            c_true,
            flip_mask,
        },
    ))
}

/// The 3 × 4 instance with a non-global-looking local minimizer used to
/// exercise the certificates:
///
/// ```text
/// A = [ −1  t  t  0 ]
///     [  1  t  0  0 ]
///     [  1  0  t  t ]
/// ```
///
/// All observed signs are `+1`, so `Φ = A`.
pub fn three_by_four_instance(t: f64) -> ProblemData {
    let a = DenseMatrix::from_row_major(3, 4, vec![-1.0, t, t, 0.0, 1.0, t, 0.0, 0.0, 1.0, 0.0, t, t])
        .expect("finite entries");
    ProblemData::from_a(a).expect("valid signs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Cholesky;
    use crate::model::count_nonzero;
    use approx::assert_relative_eq;

    #[test]
    fn sign_conventions() {
        assert_eq!(sign_of(0.0).unwrap(), -1.0);
        assert_eq!(signum_of(0.0).unwrap(), 0.0);
        assert_eq!(sign_of(3.2).unwrap(), 1.0);
        assert_eq!(signum_of(-0.5).unwrap(), -1.0);
        assert!(sign_of(f64::NAN).is_err());
        assert!(signum_of(f64::NAN).is_err());
    }

    #[test]
    fn flip_count_rounds_up() {
        assert_eq!(flip_count(0.05, 250), 13);
        assert_eq!(flip_count(0.05, 2500), 125);
        assert_eq!(flip_count(0.0, 100), 0);
        assert_eq!(default_k(250), 3);
        assert_eq!(default_k(2500), 25);
        assert_eq!(default_k(5), 1);
    }

    #[test]
    fn clean_instance_has_true_signs() {
        let mut spec = GenSpec::independent(30, 20, 3, 0.0, 7);
        spec.noise_sigma = 0.0;
        let (prob, truth) = gen_independent(&spec).unwrap();
        assert_eq!(prob.c(), truth.c_true.as_slice());
        assert!(truth.flip_mask.is_empty());
    }

    #[test]
    fn ground_truth_shape() {
        for seed in 0..20 {
            let spec = GenSpec::independent(40, 25, 4, 0.1, seed);
            let (prob, truth) = gen_independent(&spec).unwrap();
            assert_relative_eq!(linalg::norm(&truth.x_true), 1.0, epsilon = 1e-12);
            assert!(count_nonzero(&truth.x_true) <= 4);
            assert_eq!(truth.flip_mask.len(), 3);
            assert_eq!(prob.m(), 25);
        }
    }

    #[test]
    fn replayed_stream_matches_documented_draw_order() {
        let spec = GenSpec::independent(16, 10, 3, 0.2, 99);
        let (prob, truth) = gen_independent(&spec).unwrap();
        let mut s = SeededStream::new(99);
        let phi: Vec<f64> = (0..160).map(|_| s.gaussian()).collect();
        assert_eq!(prob.phi().as_slice(), phi.as_slice());
        let support = s.partial_shuffle(16, 3);
        let raw: Vec<f64> = support
            .iter()
            .map(|_| s.gaussian())
            .map(|g| g + signum_of(g).unwrap())
            .collect();
        let raw_norm = libm::sqrt(raw.iter().map(|v| v * v).sum::<f64>());
        for (&j, r) in support.iter().zip(&raw) {
            assert!(r.abs() >= 1.0);
            assert_relative_eq!(truth.x_true[j], r / raw_norm, epsilon = 1e-15);
            assert!(truth.x_true[j].abs() >= 1.0 / raw_norm - 1e-15);
        }
    }

    #[test]
    fn determinism() {
        let spec = GenSpec::independent(8, 6, 2, 0.2, 42);
        let (a, ta) = gen_independent(&spec).unwrap();
        let (b, tb) = gen_independent(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn correlated_requires_v() {
        let spec = GenSpec::independent(8, 6, 2, 0.2, 42);
        assert!(gen_correlated(&spec).is_err());
        let bad = GenSpec::correlated(8, 6, 2, 0.2, 1.0, 42);
        assert!(gen_correlated(&bad).is_err());
        let bad_r = GenSpec::independent(8, 6, 2, 1.5, 42);
        assert!(gen_independent(&bad_r).is_err());
    }

    #[test]
    fn tiny_v_reproduces_independent_draws() {
        let ind = GenSpec::independent(12, 9, 3, 0.1, 5);
        let cor = GenSpec::correlated(12, 9, 3, 0.1, 1e-300, 5);
        assert_eq!(gen_independent(&ind).unwrap(), gen_correlated(&cor).unwrap());
    }

    #[test]
    fn recursion_equals_cholesky_factor() {
        let (n, v) = (7usize, 0.6);
        let sigma: Vec<f64> = (0..n * n)
            .map(|p| libm::pow(v, (p / n).abs_diff(p % n) as f64))
            .collect();
        let chol = Cholesky::factor(n, &sigma).unwrap();
        let g: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 1.3) * 2.0).collect();
        let dense: Vec<f64> = (0..n).map(|i| (0..=i).map(|j| chol.l(i, j) * g[j]).sum()).collect();
        let mut rec = g.clone();
        correlate_row(&mut rec, v);
        for (a, b) in dense.iter().zip(&rec) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_shuffle_is_a_distinct_sample() {
        let mut s = SeededStream::new(3);
        let pick = s.partial_shuffle(10, 4);
        assert_eq!(pick.len(), 4);
        let mut sorted = pick.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
        assert!(pick.iter().all(|&i| i < 10));
    }

    #[test]
    fn gaussian_moments() {
        let mut s = SeededStream::new(11);
        let draws: Vec<f64> = (0..200_000).map(|_| s.gaussian()).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }
}
