//! CSV rows: one per (grid point, trial, solver), plus per-point summaries.

use std::collections::HashMap;
use std::io;

use gpsp_core::gpsp::Termination;
use serde::{Deserialize, Serialize};

pub const HEADER: &str = "seed,n,m,s_star,r,v,eta,epsilon,k,solver,snr_db,hd,he,time_ms,iterations,termination";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Gpsp,
    Biht,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Gpsp => "gpsp",
            Solver::Biht => "biht",
        }
    }
}

/// How a run ended. The last two carry no metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ToleranceMet,
    MaxIter,
    StalledSupports,
    ZeroSignal,
    Error,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::ZeroSignal | Outcome::Error)
    }
}

impl From<Termination> for Outcome {
    fn from(t: Termination) -> Self {
        match t {
            Termination::ToleranceMet => Outcome::ToleranceMet,
            Termination::MaxIter => Outcome::MaxIter,
            Termination::StalledSupports => Outcome::StalledSupports,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub s_star: usize,
    pub r: f64,
    pub v: Option<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub k: usize,
    pub solver: Solver,
    #[serde(with = "metric")]
    pub snr_db: Option<f64>,
    #[serde(with = "metric")]
    pub hd: Option<f64>,
    #[serde(with = "metric")]
    pub he: Option<f64>,
    pub time_ms: f64,
    pub iterations: usize,
    pub termination: Outcome,
}

impl ResultRow {
    /// Same grid point and solver; floats compared bitwise.
    pub fn point_key(&self) -> PointKey {
        PointKey {
            n: self.n,
            m: self.m,
            s_star: self.s_star,
            r: self.r.to_bits(),
            v: self.v.map(f64::to_bits),
            eta: self.eta.to_bits(),
            epsilon: self.epsilon.to_bits(),
            k: self.k,
            solver: self.solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PointKey {
    n: usize,
    m: usize,
    s_star: usize,
    r: u64,
    v: Option<u64>,
    eta: u64,
    epsilon: u64,
    k: usize,
    solver: Solver,
}

/// Optional metrics: empty when absent, `inf` for an exact recovery.
mod metric {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&format!("{x:?}")),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(s) if s.is_empty() => Ok(None),
            Some(s) => s.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

/// Means over the successful trials of one grid point and solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub m: usize,
    pub s_star: usize,
    pub r: f64,
    pub v: Option<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub k: usize,
    pub solver: Solver,
    pub trials: usize,
    /// Rows left out of the means (`zero_signal` or `error`).
    pub excluded: usize,
    #[serde(with = "metric")]
    pub snr_db: Option<f64>,
    #[serde(with = "metric")]
    pub hd: Option<f64>,
    #[serde(with = "metric")]
    pub he: Option<f64>,
    #[serde(with = "metric")]
    pub time_ms: Option<f64>,
    #[serde(with = "metric")]
    pub iterations: Option<f64>,
}

#[derive(Default)]
struct Acc {
    trials: usize,
    excluded: usize,
    sums: [f64; 5],
}

fn mean(sum: f64, count: usize) -> Option<f64> {
    (count > 0).then(|| sum / count as f64)
}

/// Groups rows by grid point and solver in order of first appearance. An
/// infinite SNR makes the SNR mean infinite.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(PointKey, &ResultRow)> = Vec::new();
    let mut accs: HashMap<PointKey, Acc> = HashMap::new();
    for row in rows {
        let key = row.point_key();
        let acc = accs.entry(key).or_insert_with(|| {
            order.push((key, row));
            Acc::default()
        });
        acc.trials += 1;
        if row.termination.is_failure() {
            acc.excluded += 1;
            continue;
        }
        let vals = [
            row.snr_db.unwrap_or(f64::NAN),
            row.hd.unwrap_or(f64::NAN),
            row.he.unwrap_or(f64::NAN),
            row.time_ms,
            row.iterations as f64,
        ];
        for (s, v) in acc.sums.iter_mut().zip(vals) {
            *s += v;
        }
    }
    order
        .into_iter()
        .map(|(key, row)| {
            let acc = &accs[&key];
            let ok = acc.trials - acc.excluded;
            SummaryRow {
                n: row.n,
                m: row.m,
                s_star: row.s_star,
                r: row.r,
                v: row.v,
                eta: row.eta,
                epsilon: row.epsilon,
                k: row.k,
                solver: row.solver,
                trials: acc.trials,
                excluded: acc.excluded,
                snr_db: mean(acc.sums[0], ok),
                hd: mean(acc.sums[1], ok),
                he: mean(acc.sums[2], ok),
                time_ms: mean(acc.sums[3], ok),
                iterations: mean(acc.sums[4], ok),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: io::Write>(out: W, rows: &[T], header: &str) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(header.split(','))?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: &str = "n,m,s_star,r,v,eta,epsilon,k,solver,trials,excluded,snr_db,hd,he,time_ms,iterations";

pub fn read_rows<R: io::Read>(input: R) -> csv::Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
