//! Run configuration: a JSON tree with the blocks `params`, `grid`, `data`, `sweep` and `output`.
//! Every block and key is optional; unknown keys are rejected all at once.

use std::path::{Path, PathBuf};

use blowuplab_core::kato::{log_grid, KatoConstants, KatoOptions};
use blowuplab_core::solver::{InitialData, ProfileShape, RadialGrid, SolverConfig};
use blowuplab_core::SystemParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsBlock {
    #[serde(alias = "N")]
    pub n: u32,
    pub mu1: f64,
    pub mu2: f64,
    pub nu1_sq: f64,
    pub nu2_sq: f64,
    pub p: f64,
    pub q: f64,
    #[serde(alias = "R")]
    pub radius: f64,
    pub eps: f64,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        let s = SystemParams::default();
        ParamsBlock { n: s.n, mu1: s.mu1, mu2: s.mu2, nu1_sq: s.nu1_sq, nu2_sq: s.nu2_sq, p: s.p, q: s.q, radius: s.radius, eps: s.eps }
    }
}

impl ParamsBlock {
    pub fn system(&self) -> SystemParams {
        SystemParams {
            n: self.n,
            mu1: self.mu1,
            mu2: self.mu2,
            nu1_sq: self.nu1_sq,
            nu2_sq: self.nu2_sq,
            p: self.p,
            q: self.q,
            radius: self.radius,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridBlock {
    /// Radial spacing; ignored when `nr` is set.
    pub dr: f64,
    /// Node count over `[0, R + t_max + margin]`.
    pub nr: Option<usize>,
    pub t_max: f64,
    pub blowup_threshold: Option<f64>,
    pub cfl: f64,
    pub growth_limit: f64,
    pub light_cone_cutoff: bool,
    pub nonlinear: bool,
    pub max_steps: usize,
    /// Write every k-th step to the CSV.
    pub csv_stride: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        let s = SolverConfig::default();
        GridBlock {
            dr: 0.02,
            nr: None,
            t_max: 50.0,
            blowup_threshold: None,
            cfl: s.cfl,
            growth_limit: s.growth_limit,
            light_cone_cutoff: s.light_cone_cutoff,
            nonlinear: s.nonlinear,
            max_steps: s.max_steps,
            csv_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Family {
    Bump,
    TruncatedGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataBlock {
    pub family: Family,
    pub f1: f64,
    pub g1: f64,
    pub f2: f64,
    pub g2: f64,
}

impl Default for DataBlock {
    fn default() -> Self {
        DataBlock { family: Family::Bump, f1: 1.0, g1: 1.0, f2: 1.0, g2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepBlock {
    pub eps_min: f64,
    pub eps_max: f64,
    pub count: usize,
    pub y_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub t2: f64,
    /// `ln(T₂ + t)` at which an integration gives up.
    pub ln_horizon: f64,
}

impl Default for SweepBlock {
    fn default() -> Self {
        let k = KatoConstants::default();
        let o = KatoOptions::default();
        SweepBlock {
            eps_min: 1e-4,
            eps_max: 1e-1,
            count: 12,
            y_max: o.y_max,
            c1: k.c1,
            c2: k.c2,
            c3: k.c3,
            t2: k.t2,
            ln_horizon: o.ln_horizon,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputBlock {
    /// JSON report path; stdout when absent.
    pub json: Option<PathBuf>,
    /// CSV path; no CSV when absent.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub data: DataBlock,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    /// Parses a JSON document, listing every unknown key in the error.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let mut unknown = Vec::new();
        let cfg: RunConfig = serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()))
            .map_err(|e| CliError::input(format!("config: {e}")))?;
        de.end().map_err(|e| CliError::input(format!("config: {e}")))?;
        if !unknown.is_empty() {
            return Err(CliError::input(format!("config: unknown keys: {}", unknown.join(", "))));
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn system(&self) -> SystemParams {
        self.params.system()
    }

    pub fn validate_params(&self) -> CliResult<SystemParams> {
        let p = self.system();
        p.validate()?;
        Ok(p)
    }

    pub fn initial_data(&self) -> InitialData {
        let d = &self.data;
        let shape = match d.family {
            Family::Bump => ProfileShape::Bump,
            Family::TruncatedGaussian => ProfileShape::TruncatedGaussian,
        };
        InitialData { shape, f1: d.f1, g1: d.g1, f2: d.f2, g2: d.g2, radius: self.params.radius }
    }

    pub fn solver_config(&self) -> CliResult<SolverConfig> {
        let g = &self.grid;
        let cfg = SolverConfig {
            cfl: g.cfl,
            growth_limit: g.growth_limit,
            light_cone_cutoff: g.light_cone_cutoff,
            nonlinear: g.nonlinear,
            blowup_threshold: g.blowup_threshold,
            max_steps: g.max_steps,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        if g.csv_stride == 0 {
            return Err(CliError::input("grid.csv_stride must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn radial_grid(&self) -> CliResult<RadialGrid> {
        let g = &self.grid;
        if !(g.t_max > 0.0 && g.t_max.is_finite()) {
            return Err(CliError::input(format!("grid.t_max must be positive (got {})", g.t_max)));
        }
        let grid = match g.nr {
            Some(nr) => {
                let reach = self.params.radius + g.t_max + 1.0;
                RadialGrid::new(nr, reach)?
            }
            None => RadialGrid::covering(self.params.radius, g.t_max, g.dr)?,
        };
        Ok(grid)
    }

    pub fn eps_grid(&self) -> CliResult<Vec<f64>> {
        let s = &self.sweep;
        Ok(log_grid(s.eps_min, s.eps_max, s.count)?)
    }

    pub fn kato_constants(&self) -> KatoConstants {
        let s = &self.sweep;
        KatoConstants { c1: s.c1, c2: s.c2, c3: s.c3, t2: s.t2 }
    }

    pub fn kato_options(&self) -> KatoOptions {
        KatoOptions { y_max: self.sweep.y_max, ln_horizon: self.sweep.ln_horizon, ..KatoOptions::default() }
    }
}
