//! Run configuration: JSON with unknown keys rejected.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use fourvol::error::{Result, VolError};

/// Which limit-theorem regime drives the tuning defaults and the reported
/// rate normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `N^(1/2)` rate with `N` well below the availability bound.
    #[default]
    General,
    /// Full frequency usage on synchronous data, `Delta(n)^(-1/2)` rate.
    SynchronousOptimal,
    /// `N = floor(kappa n_min^(4/5))` with second-order bias correction,
    /// `n_min^(2/5)` rate.
    BiasedOptimalRate,
}

/// Rule for choosing the convolution width `N` per dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum NRule {
    /// `N = floor(n_min^exponent)`.
    Power { exponent: f64 },
    /// `N = floor(n_min/2) - M + 1` (all available frequencies).
    Full,
    /// A fixed value.
    Fixed { value: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TuningConfig {
    pub n_rule: Option<NRule>,
    pub m_order: Option<usize>,
    pub b: Option<usize>,
    pub l_trim: Option<usize>,
    pub kappa: Option<f64>,
    /// Holder exponent used by the advisory tuning checks (default 1).
    pub alpha_holder: Option<f64>,
    /// Kernel-evaluation budget for the variance estimator.
    pub kernel_budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HestonAssetConfig {
    pub mean_reversion: f64,
    pub long_run: f64,
    pub vol_of_vol: f64,
    pub drift: f64,
    pub leverage: f64,
}

impl Default for HestonAssetConfig {
    fn default() -> Self {
        let p = fourvol::simulate::HestonParams::default();
        Self {
            mean_reversion: p.mean_reversion,
            long_run: p.long_run,
            vol_of_vol: p.vol_of_vol,
            drift: p.drift,
            leverage: p.leverage,
        }
    }
}

impl From<HestonAssetConfig> for fourvol::simulate::HestonParams {
    fn from(c: HestonAssetConfig) -> Self {
        Self {
            mean_reversion: c.mean_reversion,
            long_run: c.long_run,
            vol_of_vol: c.vol_of_vol,
            drift: c.drift,
            leverage: c.leverage,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ModelConfig {
    /// CIR-bridge variance with leveraged diffusion per asset; `corr` is the
    /// constant price correlation matrix (identity when omitted).
    HestonBridge {
        assets: Vec<HestonAssetConfig>,
        corr: Option<Vec<Vec<f64>>>,
    },
    /// Exponential-of-fBM volatility (univariate).
    FbmVol {
        hurst: f64,
        log_level: Option<f64>,
        scale: Option<f64>,
        drift: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum SchemeConfig {
    Regular {
        mesh: f64,
    },
    PoissonThinning {
        mesh: f64,
        keep_prob: f64,
        #[serde(default = "default_max_gap")]
        max_gap: usize,
    },
    OffsetRegular {
        mesh: f64,
        offset: f64,
    },
}

fn default_max_gap() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: ModelConfig,
    pub t_window: f64,
    pub dt: f64,
    pub schemes: Vec<SchemeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Window length; inferred from the data when omitted.
    pub window_t: Option<f64>,
    #[serde(default)]
    pub tick_files: Vec<PathBuf>,
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub tuning: TuningConfig,
    pub functionals: Vec<String>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub replications: Option<usize>,
    /// Interval miscoverage level alpha (default 0.05).
    pub level: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Whether the volatility path satisfies c(0) = c(T); selects the
    /// boundary-trim default. Defaults to true for bridge simulations and
    /// false for tick files.
    pub periodic: Option<bool>,
    /// Also compute the realized-variance baseline (univariate synchronous
    /// data only).
    #[serde(default)]
    pub baseline_rv: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| VolError::Config(format!("bad configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.tick_files.is_empty(), &self.simulation) {
            (true, None) => {
                return Err(VolError::Config(
                    "configuration needs either tick_files or a simulation block".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(VolError::Config(
                    "tick_files and a simulation block are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        if self.functionals.is_empty() {
            return Err(VolError::Config("no functionals requested".into()));
        }
        for f in &self.functionals {
            f.parse::<fourvol::Functional>()?;
        }
        if let Some(l) = self.level {
            if !(0.0 < l && l < 1.0) {
                return Err(VolError::Config(format!(
                    "interval level must be in (0,1), got {l}"
                )));
            }
        }
        if let Some(sim) = &self.simulation {
            if !(sim.t_window > 0.0) || !(sim.dt > 0.0) {
                return Err(VolError::Config(
                    "simulation needs positive t_window and dt".into(),
                ));
            }
            let d = match &sim.model {
                ModelConfig::HestonBridge { assets, corr } => {
                    if assets.is_empty() {
                        return Err(VolError::Config("heston-bridge needs at least one asset".into()));
                    }
                    if let Some(c) = corr {
                        if c.len() != assets.len() || c.iter().any(|r| r.len() != assets.len()) {
                            return Err(VolError::Config(
                                "correlation matrix dimensions do not match the asset count".into(),
                            ));
                        }
                    }
                    assets.len()
                }
                ModelConfig::FbmVol { hurst, .. } => {
                    if !(0.0 < *hurst && *hurst < 1.0) {
                        return Err(VolError::Config(format!(
                            "Hurst exponent must lie in (0,1), got {hurst}"
                        )));
                    }
                    1
                }
            };
            if sim.schemes.len() != d {
                return Err(VolError::Config(format!(
                    "{} sampling schemes for {d} simulated assets",
                    sim.schemes.len()
                )));
            }
        }
        Ok(())
    }

    /// Boundary mode: bridge simulations are periodic by construction.
    pub fn periodic(&self) -> bool {
        self.periodic.unwrap_or_else(|| match &self.simulation {
            Some(s) => matches!(s.model, ModelConfig::HestonBridge { .. }),
            None => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "tick_files": ["ticks.csv"],
        "functionals": ["power:2"],
        "seed": 1
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.mode, Mode::General);
        assert!(cfg.simulation.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{
            "tick_files": ["ticks.csv"],
            "functionals": ["power:2"],
            "seed": 1,
            "surprise": true
        }"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn requires_data_source_and_functionals() {
        assert!(RunConfig::from_json(r#"{"functionals": ["log"]}"#).is_err());
        let no_g = r#"{"tick_files": ["t.csv"], "functionals": []}"#;
        assert!(RunConfig::from_json(no_g).is_err());
        let bad_g = r#"{"tick_files": ["t.csv"], "functionals": ["sqrt"]}"#;
        assert!(RunConfig::from_json(bad_g).is_err());
    }

    #[test]
    fn simulation_block_is_validated() {
        let good = r#"{
            "simulation": {
                "model": {"kind": "heston-bridge", "assets": [{}]},
                "t_window": 1.0,
                "dt": 0.001,
                "schemes": [{"kind": "regular", "mesh": 0.001}]
            },
            "functionals": ["power:2"],
            "seed": 3
        }"#;
        let cfg = RunConfig::from_json(good).unwrap();
        assert!(cfg.periodic());
        let wrong_schemes = good.replace(
            r#""schemes": [{"kind": "regular", "mesh": 0.001}]"#,
            r#""schemes": []"#,
        );
        assert!(RunConfig::from_json(&wrong_schemes).is_err());
    }
}
