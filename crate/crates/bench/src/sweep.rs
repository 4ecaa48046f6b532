//! Cartesian parameter sweeps over instance and model constants.
//!
//! Instance seeds depend only on the master seed, the instance grid point and
//! the trial, so every model setting and solver sees the same instances.

use anyhow::{Context, Result};
use gpsp_core::datagen::{default_k, generate, GenSpec};
use gpsp_core::ModelParams;
use rayon::prelude::*;

use crate::manifest::Example;
use crate::record::{Outcome, ResultRow, Solver};
use crate::run::{blank_row, run_one, SolverSettings};

/// Model constants for one grid point; `s` is always the instance's `s_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    pub epsilon: f64,
    pub eta: f64,
    /// `⌈0.01·m⌉` when `None`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub example: Example,
    /// Instance grid; the `seed` fields are ignored.
    pub instances: Vec<GenSpec>,
    pub models: Vec<ModelPoint>,
    pub trials: usize,
    pub solvers: Vec<Solver>,
    pub master_seed: u64,
    pub settings: SolverSettings,
}

impl SweepPlan {
    pub fn grid_len(&self) -> usize {
        self.instances.len() * self.models.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("--trials must be at least 1".into());
        }
        if self.grid_len() == 0 {
            return Err("empty grid".into());
        }
        if self.solvers.is_empty() {
            return Err("no solvers selected".into());
        }
        for spec in &self.instances {
            spec.validate().map_err(|e| e.to_string())?;
            for mp in &self.models {
                self.params(spec, mp).map_err(|e| e.to_string())?;
            }
        }
        self.settings.gpsp.validate().map_err(|e| e.to_string())
    }

    fn params(&self, spec: &GenSpec, mp: &ModelPoint) -> Result<ModelParams, gpsp_core::Error> {
        let k = mp.k.unwrap_or_else(|| default_k(spec.m));
        if k > spec.m {
            return Err(gpsp_core::Error::InvalidArgument(format!(
                "k = {k} exceeds m = {}",
                spec.m
            )));
        }
        ModelParams::new(mp.epsilon, mp.eta, spec.s_star, k)
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, instance_index: usize, trial: usize) -> u64 {
    mix(mix(mix(master) ^ instance_index as u64) ^ trial as u64)
}

/// Runs every (instance, trial) task on a pool of `workers` threads. Rows come
/// back ordered by instance, trial, model point and solver regardless of the
/// pool size. Solver errors become `error` rows and the sweep continues.
pub fn run_sweep(plan: &SweepPlan, workers: Option<usize>) -> Result<Vec<ResultRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("building worker pool")?;
    let tasks: Vec<(usize, usize)> = (0..plan.instances.len())
        .flat_map(|i| (0..plan.trials).map(move |t| (i, t)))
        .collect();
    let chunks: Vec<Result<Vec<ResultRow>>> =
        pool.install(|| tasks.par_iter().map(|&(i, t)| run_task(plan, i, t)).collect());
    let mut rows = Vec::with_capacity(tasks.len() * plan.models.len() * plan.solvers.len());
    for chunk in chunks {
        rows.extend(chunk?);
    }
    Ok(rows)
}

fn run_task(plan: &SweepPlan, instance: usize, trial: usize) -> Result<Vec<ResultRow>> {
    let spec = GenSpec {
        seed: derive_seed(plan.master_seed, instance, trial),
        ..plan.instances[instance]
    };
    let (prob, truth) = generate(&spec).with_context(|| format!("generating instance {spec:?}"))?;
    let mut rows = Vec::with_capacity(plan.models.len() * plan.solvers.len());
    for mp in &plan.models {
        let params = plan.params(&spec, mp)?;
        for &solver in &plan.solvers {
            let row = match run_one(&spec, &prob, &truth, &params, solver, &plan.settings) {
                Ok(run) => run.row,
                Err(e) => {
                    eprintln!("warning: {} failed on seed {}: {e}", solver.as_str(), spec.seed);
                    blank_row(&spec, &params, solver, Outcome::Error)
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}
