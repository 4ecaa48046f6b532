//! JSON manifests. An instance is stored as its generator spec and rebuilt on
//! load; a saved iterate carries the model constants it was computed under.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gpsp_core::datagen::{generate, GenSpec, GroundTruth};
use gpsp_core::{Iterate, ModelParams, ProblemData};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// i.i.d. standard normal rows.
    #[value(alias = "ind")]
    Independent,
    /// Rows from `N(0, Σ)`, `Σᵢⱼ = v^|i−j|`.
    #[value(alias = "cor")]
    Correlated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub example: Example,
    pub spec: GenSpec,
}

impl Manifest {
    /// Checks that `spec.v` matches the example kind and that the spec is valid.
    pub fn new(example: Example, spec: GenSpec) -> Result<Self, String> {
        match (example, spec.v) {
            (Example::Independent, Some(_)) => return Err("--v only applies to --example correlated".into()),
            (Example::Correlated, None) => return Err("--v is required for --example correlated".into()),
            _ => {}
        }
        spec.validate().map_err(|e| e.to_string())?;
        Ok(Self { example, spec })
    }

    pub fn instance(&self) -> Result<(ProblemData, GroundTruth)> {
        generate(&self.spec).context("regenerating instance from manifest")
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Manifest = load_json(path)?;
        Manifest::new(m.example, m.spec).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }
}

/// A saved solver iterate `(x, y)` with the constants it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateDump {
    pub params: ModelParams,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl IterateDump {
    pub fn iterate(&self) -> Iterate {
        Iterate::new(self.x.clone(), self.y.clone())
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("manifest types serialize");
    s.push('\n');
    s
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
