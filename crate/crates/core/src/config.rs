//! Experiment configuration: a flat JSON object with defaults for every key.

use crate::domain::{PresetKind, Problem, RadialGrid, Tables};
use crate::error::{Error, Result};
use crate::minimizer::MinimizeOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const DEFAULT_EPS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Eight geometric points from `1e-3` to `1e-1`.
pub fn default_minimize_eps() -> Vec<f64> {
    (0..8).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_r: usize,
    pub n_theta: usize,
    /// Chart resolution across the annulus; defaults to `n_r`.
    pub n_lambda: Option<usize>,
    pub preset: PresetKind,
    pub tables: Option<Tables>,
    /// Declared `‖R₁″‖_{L¹}` for table-driven targets.
    pub bv_r1p: Option<f64>,
    pub eps_list: Vec<f64>,
    pub seed: u64,
    pub obstacle_tol: f64,
    pub patch_n: usize,
    pub anneal_n: usize,
    pub anneal_k: usize,
    pub anneal_cooling: f64,
    pub anneal_proposals_per_point: usize,
    pub anneal_eps_list: Vec<f64>,
    pub anneal_n_exact: usize,
    /// Weight of the fit-residual term in the discrete Dirichlet energy; 0 disables it.
    pub anneal_residual_weight: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_r: 400,
            n_theta: 201,
            n_lambda: None,
            preset: PresetKind::AnnulusConst,
            tables: None,
            bv_r1p: None,
            eps_list: DEFAULT_EPS.to_vec(),
            seed: 0,
            obstacle_tol: 1e-10,
            patch_n: 128,
            anneal_n: 4000,
            anneal_k: 10,
            anneal_cooling: 0.95,
            anneal_proposals_per_point: 200,
            anneal_eps_list: default_minimize_eps(),
            anneal_n_exact: 2000,
            anneal_residual_weight: 1.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 3 || self.n_theta < 3 || self.n_lambda.is_some_and(|n| n < 3) {
            return Err(Error::Validation("grids need at least 3 nodes per axis".into()));
        }
        for &e in self.eps_list.iter().chain(&self.anneal_eps_list) {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Validation(format!("epsilon {e} outside (0,1)")));
            }
        }
        if !(self.obstacle_tol > 0.0) {
            return Err(Error::Validation("obstacle_tol must be positive".into()));
        }
        if !(self.anneal_cooling > 0.0 && self.anneal_cooling < 1.0) {
            return Err(Error::Validation("anneal_cooling must lie in (0,1)".into()));
        }
        if !(self.anneal_residual_weight >= 0.0) {
            return Err(Error::Validation("anneal_residual_weight must be non-negative".into()));
        }
        if self.anneal_k < 6 {
            return Err(Error::Validation("anneal_k must be at least 6".into()));
        }
        if self.anneal_n < 100 {
            return Err(Error::Validation("anneal_n must be at least 100".into()));
        }
        if self.patch_n < 8 {
            return Err(Error::Validation("patch_n must be at least 8".into()));
        }
        if self.preset == PresetKind::Tables && self.tables.is_none() {
            return Err(Error::Validation("preset 'tables' requires a 'tables' object".into()));
        }
        Ok(())
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda.unwrap_or(self.n_r)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        let mut o = MinimizeOptions {
            k: self.anneal_k,
            residual_weight: self.anneal_residual_weight,
            n_exact: self.anneal_n_exact,
            ..MinimizeOptions::default()
        };
        o.schedule.cooling = self.anneal_cooling;
        o.schedule.proposals_per_point = self.anneal_proposals_per_point;
        o.schedule.seed = self.seed;
        o
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::build(
            self.preset,
            self.tables.as_ref(),
            self.bv_r1p.unwrap_or(0.0),
            RadialGrid::uniform(self.n_r)?,
            self.n_theta,
            self.n_lambda(),
        )
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}
