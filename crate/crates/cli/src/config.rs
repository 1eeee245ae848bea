//! Run configuration, read from a TOML file.
//!
//! Every section is optional except `master_seed`. `CORRIDOR_OUTPUT_DIR` and
//! `CORRIDOR_WORKERS` override `output_dir` and `workers`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use corridor::quenched::Boundary;
use corridor::rates::SweepVariant;
use corridor::{BandSpec, Corridor, TransferSettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUTPUT_DIR_VAR: &str = "CORRIDOR_OUTPUT_DIR";
pub const WORKERS_VAR: &str = "CORRIDOR_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub corridor: CorridorSection,
    #[serde(default)]
    pub transfer: TransferSettings,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub rate: Option<RateSection>,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub check: CheckSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("corridor-out")
}

/// Constant corridor `(a, b)` with optional windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorridorSection {
    pub a: f64,
    pub b: f64,
    /// Defaults to the band centre.
    pub start_window: Option<[f64; 2]>,
    /// Defaults to the band.
    pub terminal_window: Option<[f64; 2]>,
}

impl Default for CorridorSection {
    fn default() -> Self {
        CorridorSection {
            a: 0.0,
            b: 1.0,
            start_window: None,
            terminal_window: None,
        }
    }
}

impl CorridorSection {
    pub fn band(&self) -> Result<BandSpec, CliError> {
        Ok(BandSpec::new(self.a, self.b)?)
    }

    pub fn windows(&self) -> ((f64, f64), (f64, f64)) {
        let c = 0.5 * (self.a + self.b);
        let sw = self.start_window.map(|w| (w[0], w[1])).unwrap_or((c, c));
        let tw = self.terminal_window.map(|w| (w[0], w[1])).unwrap_or((self.a, self.b));
        (sw, tw)
    }

    pub fn build(&self, beta: f64) -> Result<Corridor, CliError> {
        let (sw, tw) = self.windows();
        Ok(Corridor::constant(self.a, self.b, sw, tw, beta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub betas: Vec<f64>,
    pub ensemble_size: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Defaults to `[horizon/4, horizon]`.
    pub fit_window: Option<[f64; 2]>,
    pub variant: SweepVariant,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            betas: vec![0.0, 0.5, 1.0],
            ensemble_size: 16,
            horizon: 20.0,
            dt: 1e-3,
            fit_window: None,
            variant: SweepVariant::InfStart,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    /// Directory of curve files, all for one `beta`.
    pub curve_dir: PathBuf,
    pub beta: f64,
    /// Defaults to `[t_end/4, t_end]` of the shortest curve.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    /// Defaults to the corridor width.
    #[serde(default)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub beta: f64,
    pub environments: usize,
    pub checkpoints: Vec<f64>,
    pub dt: f64,
    /// Start and terminal window; defaults to the corridor's windows when
    /// they coincide, otherwise the middle half of the band.
    pub window: Option<[f64; 2]>,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            beta: 1.0,
            environments: 20,
            checkpoints: (1..=10).map(f64::from).collect(),
            dt: 1e-3,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub small_dev: SmallDevSection,
    pub functional: FunctionalSection,
    pub annealed: AnnealedSection,
    pub tail: TailSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallDevSection {
    pub alpha: f64,
    pub beta: f64,
    pub t_grid: Vec<f64>,
    pub ensemble_size: usize,
    /// Env step for unit scale; the run at `t` uses `dt · t^{2α}`.
    pub dt: f64,
    /// Unscaled start window; defaults to the band centre.
    pub start_window: Option<[f64; 2]>,
    /// Unit-width rate `γ(β)`; required unless `beta = 0`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
}

impl Default for SmallDevSection {
    fn default() -> Self {
        SmallDevSection {
            alpha: 0.25,
            beta: 0.0,
            t_grid: vec![100.0, 400.0, 1600.0, 3600.0, 6400.0, 10_000.0],
            ensemble_size: 8,
            dt: 1e-3,
            start_window: None,
            gamma: None,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalSection {
    /// Polynomial coefficients of the lower boundary, constant term first.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub start_window: [f64; 2],
    /// Defaults to `[f(1), g(1)]`.
    pub terminal_window: Option<[f64; 2]>,
    pub beta: f64,
    pub horizons: Vec<f64>,
    pub ensemble_size: usize,
    pub dt: f64,
    /// Unit-width rate `γ(β)`; required unless `beta = 0`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
}

impl Default for FunctionalSection {
    fn default() -> Self {
        FunctionalSection {
            f: vec![0.0],
            g: vec![1.0, 0.5],
            start_window: [0.5, 0.5],
            terminal_window: None,
            beta: 0.0,
            horizons: vec![10.0, 25.0, 50.0],
            ensemble_size: 1,
            dt: 1e-3,
            gamma: None,
            tolerance: 0.05,
        }
    }
}

impl FunctionalSection {
    pub fn boundaries(&self) -> Result<(Boundary, Boundary), CliError> {
        if self.f.is_empty() || self.g.is_empty() {
            return Err(CliError::Input("functional boundaries need at least one coefficient".into()));
        }
        Ok((Boundary::Polynomial(self.f.clone()), Boundary::Polynomial(self.g.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealedSection {
    pub band: [f64; 2],
    pub beta: f64,
    pub t: f64,
    pub ensemble_size: usize,
    pub dt: f64,
}

impl Default for AnnealedSection {
    fn default() -> Self {
        AnnealedSection {
            band: [-0.5, 0.5],
            beta: 1.0,
            t: 3.0,
            ensemble_size: 500,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailSection {
    pub band: [f64; 2],
    /// Start and terminal window.
    pub window: [f64; 2],
    pub beta: f64,
    pub t: f64,
    pub q_exponent: f64,
    /// Samples are drawn for twice this size to check moment stability.
    pub ensemble_size: usize,
    pub dt: f64,
}

impl Default for TailSection {
    fn default() -> Self {
        TailSection {
            band: [-1.0, 1.0],
            window: [-0.5, 0.5],
            beta: 1.0,
            t: 2.0,
            q_exponent: 1.5,
            ensemble_size: 1000,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub ensemble_size: usize,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            ensemble_size: 8,
            horizon: 20.0,
            dt: 1e-3,
        }
    }
}

/// Unit-width rate at `β = 0`.
pub const CLASSICAL_RATE: f64 = PI * PI / 2.0;

/// Resolves an optional rate: given, or the classical value at `β = 0`.
pub fn rate_or_classical(given: Option<f64>, beta: f64, what: &str) -> Result<f64, CliError> {
    match given {
        Some(r) if r > 0.0 && r.is_finite() => Ok(r),
        Some(r) => Err(CliError::Input(format!("{what} must be positive, got {r}"))),
        None if beta == 0.0 => Ok(CLASSICAL_RATE),
        None => Err(CliError::Input(format!(
            "{what} must be given for beta = {beta}; only beta = 0 has a closed form"
        ))),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `CORRIDOR_OUTPUT_DIR` and `CORRIDOR_WORKERS`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        if let Some(dir) = get(OUTPUT_DIR_VAR).filter(|s| !s.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(w) = get(WORKERS_VAR).filter(|s| !s.is_empty()) {
            let n: usize = w
                .parse()
                .map_err(|_| CliError::Input(format!("{WORKERS_VAR} must be a positive integer, got {w:?}")))?;
            self.workers = Some(n);
        }
        if self.workers == Some(0) {
            return Err(CliError::Input("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        let err = RunConfig::from_toml("output_dir = \"x\"").unwrap_err();
        assert!(err.to_string().contains("master_seed"));
        let cfg = RunConfig::from_toml("master_seed = 3").unwrap();
        assert_eq!(cfg.sweep, SweepSection::default());
        assert_eq!(cfg.transfer, TransferSettings::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("master_seed = 3\n[sweep]\nbeta = [1.0]").is_err());
    }

    #[test]
    fn env_overrides() {
        let mut cfg = RunConfig::from_toml("master_seed = 3\nworkers = 2").unwrap();
        cfg.apply_env(|k| match k {
            OUTPUT_DIR_VAR => Some("/tmp/o".into()),
            WORKERS_VAR => Some("5".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/o"));
        assert_eq!(cfg.workers, Some(5));
        assert!(cfg.apply_env(|k| (k == WORKERS_VAR).then(|| "many".into())).is_err());
    }
}
