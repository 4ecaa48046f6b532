//! One solver run on one instance, turned into a [`ResultRow`].

use std::time::Instant;

use gpsp_core::biht::{self, biht_solve};
use gpsp_core::datagen::{GenSpec, GroundTruth};
use gpsp_core::gpsp::{gpsp_solve, SolverConfig, SolverResult};
use gpsp_core::metrics::{hamming_distance, hamming_error, snr};
use gpsp_core::{Error, ModelParams, ProblemData};

use crate::record::{Outcome, ResultRow, Solver};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub gpsp: SolverConfig,
    pub biht_step: f64,
    pub biht_max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            gpsp: SolverConfig::default(),
            biht_step: biht::DEFAULT_STEP,
            biht_max_iter: biht::DEFAULT_MAX_ITER,
        }
    }
}

pub struct Run {
    pub row: ResultRow,
    /// Absent when the run ended in [`Error::ZeroSignal`].
    pub result: Option<SolverResult>,
}

/// Runs `solver` and scores it against `truth`. A zero-signal failure becomes
/// a row without metrics; every other error is returned.
pub fn run_one(
    spec: &GenSpec,
    prob: &ProblemData,
    truth: &GroundTruth,
    params: &ModelParams,
    solver: Solver,
    settings: &SolverSettings,
) -> Result<Run, Error> {
    let start = Instant::now();
    let solved = match solver {
        Solver::Gpsp => gpsp_solve(prob, params, &settings.gpsp),
        Solver::Biht => biht_solve(prob, params.s, settings.biht_step, settings.biht_max_iter),
    };
    let elapsed = start.elapsed();
    let mut row = blank_row(spec, params, solver, Outcome::ZeroSignal);
    row.time_ms = elapsed.as_secs_f64() * 1e3;
    let mut result = match solved {
        Ok(res) => res,
        Err(Error::ZeroSignal) => return Ok(Run { row, result: None }),
        Err(e) => return Err(e),
    };
    result.wall_time = Some(elapsed);
    row.snr_db = Some(snr(&result.x_bar, &truth.x_true)?);
    row.hd = Some(hamming_distance(prob, &result.x_bar)?);
    row.he = Some(hamming_error(prob, &result.x_bar, &truth.c_true)?);
    row.iterations = result.iterations;
    row.termination = result.termination.into();
    Ok(Run {
        row,
        result: Some(result),
    })
}

/// A row with the grid columns filled in and no metrics.
pub fn blank_row(spec: &GenSpec, params: &ModelParams, solver: Solver, termination: Outcome) -> ResultRow {
    ResultRow {
        seed: spec.seed,
        n: spec.n,
        m: spec.m,
        s_star: spec.s_star,
        r: spec.r,
        v: spec.v,
        eta: params.eta,
        epsilon: params.epsilon,
        k: params.k,
        solver,
        snr_db: None,
        hd: None,
        he: None,
        time_ms: 0.0,
        iterations: 0,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpsp_core::datagen::{default_k, generate};

    #[test]
    fn zero_step_biht_is_a_row_without_metrics() {
        let spec = GenSpec::independent(40, 30, 3, 0.0, 1);
        let (prob, truth) = generate(&spec).unwrap();
        let params = ModelParams::new(0.01, 1e-4, 3, default_k(30)).unwrap();
        let settings = SolverSettings {
            biht_step: 0.0,
            ..SolverSettings::default()
        };
        let run = run_one(&spec, &prob, &truth, &params, Solver::Biht, &settings).unwrap();
        assert!(run.result.is_none());
        assert_eq!(run.row.termination, Outcome::ZeroSignal);
        assert_eq!(run.row.snr_db, None);
    }

    #[test]
    fn gpsp_row_carries_metrics() {
        let spec = GenSpec::independent(200, 100, 3, 0.05, 4);
        let (prob, truth) = generate(&spec).unwrap();
        let params = ModelParams::new(0.01, 1e-4, 3, default_k(100)).unwrap();
        let run = run_one(&spec, &prob, &truth, &params, Solver::Gpsp, &SolverSettings::default()).unwrap();
        let res = run.result.unwrap();
        assert!(res.wall_time.is_some());
        assert_eq!(run.row.iterations, res.iterations);
        assert!(run.row.hd.unwrap() <= 1.0);
        assert_eq!(run.row.seed, 4);
    }
}
