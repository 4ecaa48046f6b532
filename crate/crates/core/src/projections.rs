//! Euclidean projections onto `S = {‖x‖₀ ≤ s}`, `K = {‖y₊‖₀ ≤ k}` and
//! `F = S × K`.
//!
//! The projections are set-valued when magnitudes tie. A single element is
//! selected by ranking entries on `(value, index)`: larger value first, and
//! the smaller index wins a tie. Selection is a partial `select_nth`, O(n)
//! expected, followed by a sort of the `s` (or `k`) winners only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::Iterate;
use crate::{Error, Result};

/// Sorted, strictly increasing, 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct SupportSelection {
    indices: Vec<usize>,
}

impl SupportSelection {
    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Indices of `0..len` not in the selection.
    pub fn complement(&self, len: usize) -> SupportSelection {
        let mut out = Vec::with_capacity(len.saturating_sub(self.indices.len()));
        let mut it = self.indices.iter().peekable();
        for i in 0..len {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        SupportSelection { indices: out }
    }

    /// Support of a vector (exact nonzeros).
    pub fn support_of(v: &[f64]) -> Self {
        Self {
            indices: crate::model::support_of(v),
        }
    }
}

/// The partition `Γ₊ ∪ Γ₀ ∪ Γ₋` of `0..m` by the sign of `y`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexPartition {
    pub gamma_plus: SupportSelection,
    pub gamma_zero: SupportSelection,
    pub gamma_minus: SupportSelection,
}

impl IndexPartition {
    pub fn of(y: &[f64]) -> Self {
        let (mut plus, mut zero, mut minus) = (Vec::new(), Vec::new(), Vec::new());
        for (i, &v) in y.iter().enumerate() {
            if v > 0.0 {
                plus.push(i);
            } else if v < 0.0 {
                minus.push(i);
            } else {
                zero.push(i);
            }
        }
        Self {
            gamma_plus: SupportSelection { indices: plus },
            gamma_zero: SupportSelection { indices: zero },
            gamma_minus: SupportSelection { indices: minus },
        }
    }
}

/// Picks the `count` best indices from `candidates` under `better`, which
/// must be a strict total order (ties already broken by index).
fn select_best(mut candidates: Vec<usize>, count: usize, better: impl Fn(&usize, &usize) -> Ordering) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    if count < candidates.len() {
        candidates.select_nth_unstable_by(count - 1, &better);
        candidates.truncate(count);
    }
    candidates.sort_unstable();
    candidates
}

/// An element of `Σ(x; s)`: indices of the `s` largest `|xᵢ|`, lower index
/// first among equal magnitudes.
pub fn top_s_support(x: &[f64], s: usize) -> Result<SupportSelection> {
    let n = x.len();
    if s == 0 || s > n {
        return Err(Error::invalid(format!("s = {s} outside [1, {n}]")));
    }
    let indices = select_best((0..n).collect(), s, |&i, &j| {
        libm::fabs(x[j]).total_cmp(&libm::fabs(x[i])).then(i.cmp(&j))
    });
    Ok(SupportSelection { indices })
}

/// An element of `Π_S(x)`: `x` restricted to [`top_s_support`], zero elsewhere.
pub fn project_s(x: &[f64], s: usize) -> Result<Vec<f64>> {
    let support = top_s_support(x, s)?;
    let mut out = vec![0.0; x.len()];
    for &i in support.indices() {
        out[i] = x[i];
    }
    Ok(out)
}

/// An element of `Θ(y; k)`: every negative index plus the
/// `min{k, |Γ₊|}` largest positive entries.
pub fn theta_support(y: &[f64], k: usize) -> Result<SupportSelection> {
    let m = y.len();
    if k > m {
        return Err(Error::invalid(format!("k = {k} outside [0, {m}]")));
    }
    let positives: Vec<usize> = (0..m).filter(|&i| y[i] > 0.0).collect();
    let keep = k.min(positives.len());
    let mut indices = select_best(positives, keep, |&i, &j| y[j].total_cmp(&y[i]).then(i.cmp(&j)));
    indices.extend((0..m).filter(|&i| y[i] < 0.0));
    Ok(SupportSelection::new(indices))
}

/// An element of `Π_K(y)`: entries on [`theta_support`] copied, others zero.
pub fn project_k(y: &[f64], k: usize) -> Result<Vec<f64>> {
    let support = theta_support(y, k)?;
    let mut out = vec![0.0; y.len()];
    for &i in support.indices() {
        out[i] = y[i];
    }
    Ok(out)
}

/// `Π_F(z) = (Π_S(x); Π_K(y))`.
pub fn project_f(z: &Iterate, s: usize, k: usize) -> Result<Iterate> {
    Ok(Iterate {
        x: project_s(&z.x, s)?,
        y: project_k(&z.y, k)?,
    })
}
