use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{min_k_star, AnalysisParams, DEFAULT_COVERS_PER_SCALE};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::solver::{init_orszag_tang_3d, init_random_solenoidal, MhdState, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub box_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 32, box_length: 2.0 * std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    OrszagTang,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    pub amplitude: f64,
    /// Shell-spectrum exponent of the random initial condition.
    pub slope: f64,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { kind: InitKind::OrszagTang, amplitude: 1.0, slope: -5.0 / 3.0, seed: 0 }
    }
}

/// Optional overrides of [`AnalysisParams`]; `R0` defaults to `L/8`, `T` to
/// the run length and `K_star` to the smallest admissible value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(rename = "K1")]
    pub k1: Option<u32>,
    #[serde(rename = "K2")]
    pub k2: Option<u32>,
    #[serde(rename = "K_star")]
    pub k_star: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[serde(rename = "C0_localization")]
    pub c0_localization: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverConfig {
    pub covers_per_scale: usize,
    pub seed: u64,
    /// Sampling points per `R` when verifying covers.
    pub sample_density: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { covers_per_scale: DEFAULT_COVERS_PER_SCALE, seed: 0, sample_density: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionConfig {
    pub enabled: bool,
    /// Sampled `(x, y)` pairs per snapshot for the smoothness check.
    pub pair_samples: usize,
    pub seed: u64,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self { enabled: true, pair_samples: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub snapshots: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig<f64>,
    pub init: InitConfig,
    pub analysis: AnalysisConfig,
    pub covers: CoverConfig,
    pub assumptions: AssumptionConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        self.solver.validate()?;
        if !(self.init.amplitude.is_finite()) {
            return Err(Error::Config("init.amplitude must be finite".into()));
        }
        if self.covers.covers_per_scale == 0 {
            return Err(Error::Config("covers.covers_per_scale must be positive".into()));
        }
        if self.covers.sample_density == 0 {
            return Err(Error::Config("covers.sample_density must be positive".into()));
        }
        let p = self.analysis_params()?;
        if 2.0 * p.r0 >= self.grid.box_length / 2.0 {
            return Err(Error::Config(format!(
                "R0 = {} puts the integral support B(0, 2R0) outside the box of side {}",
                p.r0, self.grid.box_length
            )));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(self.grid.n, self.grid.box_length)
    }

    pub fn initial_state(&self) -> Result<MhdState<f64>> {
        let g = self.grid_spec()?;
        let a = self.init.amplitude;
        Ok(match self.init.kind {
            InitKind::OrszagTang => init_orszag_tang_3d(g, a),
            InitKind::Random => {
                let s = init_random_solenoidal(g, self.init.slope, self.init.seed);
                MhdState { u: s.u.scaled(a), b: s.b.scaled(a), time: 0.0 }
            }
        })
    }

    /// Analysis parameters with defaults filled in and range checks applied.
    pub fn analysis_params(&self) -> Result<AnalysisParams> {
        let a = &self.analysis;
        let r0 = a.r0.unwrap_or(self.grid.box_length / 8.0);
        let mut p = AnalysisParams::new(r0, a.horizon.unwrap_or(self.solver.t_end));
        if let Some(s) = &a.scales {
            p.scales = s.clone();
        }
        p.k1 = a.k1.unwrap_or(p.k1);
        p.k2 = a.k2.unwrap_or(p.k2);
        p.k_star = a.k_star.unwrap_or(min_k_star(p.k1, p.k2));
        p.beta = a.beta.unwrap_or(p.beta);
        p.m = a.m.or(p.m);
        p.c0_localization = a.c0_localization.unwrap_or(p.c0_localization);
        p.delta = a.delta.unwrap_or(p.delta);
        p.rho = a.rho.unwrap_or(p.rho);
        p.validate()?;
        Ok(p)
    }
}
