//! Quenched survival for one environment path.
//!
//! `q_t = -ln P^x(a + βW_s < B_s < b + βW_s for s ≤ t, B_t in the terminal
//! window | W)`, computed either by a deterministic transfer-operator sweep or
//! by particle splitting. [`x_bar`] and [`x_under`] take the worst and best
//! starting point over a finite start grid.

mod corridor;
mod splitting;
mod transfer;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use corridor::{Boundary, Corridor, CorridorShape};
pub(crate) use corridor::Geometry;
pub use splitting::{particle_splitting_survival, SplittingConfig};
pub(crate) use transfer::{sweep_backward_inf, SweepParams};
pub use transfer::SubstepModel;

use crate::env::{parse_header, EnvironmentPath};
use crate::error::{Error, Result};
use crate::kernels::SeriesConfig;

/// Numerical settings of the transfer-operator evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferSettings {
    /// Cell-centred nodes across the band.
    pub spatial_points: usize,
    /// Start grid size for [`x_bar`] and [`x_under`].
    pub start_points: usize,
    /// Spacing of recorded times; rounded to a whole number of env steps.
    pub output_interval: f64,
    pub model: SubstepModel,
    pub series: SeriesConfig,
}

impl Default for TransferSettings {
    fn default() -> Self {
        TransferSettings {
            spatial_points: 201,
            start_points: 17,
            output_interval: 0.25,
            model: SubstepModel::Bridge,
            series: SeriesConfig::default(),
        }
    }
}

impl TransferSettings {
    pub fn validate(&self) -> Result<()> {
        if self.spatial_points < 32 {
            return Err(Error::param(format!(
                "spatial_points must be at least 32, got {}",
                self.spatial_points
            )));
        }
        if self.start_points == 0 {
            return Err(Error::param("start_points must be positive"));
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return Err(Error::param(format!(
                "output_interval must be positive, got {}",
                self.output_interval
            )));
        }
        self.series.validate()
    }
}

/// Which starting-point functional a curve holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Pointwise(f64),
    /// Worst start over the start window.
    InfStart,
    /// Best start over the open band.
    SupStart,
}

impl Variant {
    fn tag(&self) -> String {
        match self {
            Variant::Pointwise(x) => format!("pointwise:{x:.16e}"),
            Variant::InfStart => "inf_start".into(),
            Variant::SupStart => "sup_start".into(),
        }
    }

    fn parse(tag: &str) -> Result<Self> {
        match tag {
            "inf_start" => Ok(Variant::InfStart),
            "sup_start" => Ok(Variant::SupStart),
            other => other
                .strip_prefix("pointwise:")
                .and_then(|x| x.parse().ok())
                .map(Variant::Pointwise)
                .ok_or_else(|| Error::Format(format!("unknown variant `{other}`"))),
        }
    }
}

/// `q_t = -ln p_t` on a time grid, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub log_survival: Vec<f64>,
    /// Standard errors of `q_t`, for stochastic estimates.
    pub stderr: Option<Vec<f64>>,
    pub variant: Variant,
    pub corridor_id: String,
    pub env_seed: u64,
    /// Set when a stochastic estimate ran out of particles at this time.
    pub end_of_data: Option<f64>,
}

impl SurvivalCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_q(&self) -> f64 {
        *self.log_survival.last().unwrap_or(&f64::NAN)
    }

    /// Index of the recorded time closest to `t`, if within `1e-9` relative.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t - 1e-9 * t.abs().max(1e-12));
        (k < self.times.len() && (self.times[k] - t).abs() <= 1e-9 * t.abs().max(1e-12)).then_some(k)
    }

    /// `q` at a recorded time.
    pub fn q_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|k| self.log_survival[k])
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let end = match self.end_of_data {
            Some(t) => format!("{t:.16e}"),
            None => "none".into(),
        };
        writeln!(
            out,
            "# survival env_seed={} corridor={} variant={} end_of_data={}",
            self.env_seed,
            self.corridor_id,
            self.variant.tag(),
            end
        )?;
        match &self.stderr {
            Some(se) => {
                writeln!(out, "# t q stderr")?;
                for ((t, q), s) in self.times.iter().zip(&self.log_survival).zip(se) {
                    writeln!(out, "{t:.16e} {q:.16e} {s:.16e}")?;
                }
            }
            None => {
                writeln!(out, "# t q")?;
                for (t, q) in self.times.iter().zip(&self.log_survival) {
                    writeln!(out, "{t:.16e} {q:.16e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty survival file".into()))??;
        let fields = parse_header(&header, "# survival")?;
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::Format(format!("survival header lacks `{key}`")))
        };
        let env_seed: u64 = get("env_seed")?
            .parse()
            .map_err(|_| Error::Format("bad `env_seed`".into()))?;
        let corridor_id = get("corridor")?;
        let variant = Variant::parse(&get("variant")?)?;
        let end_of_data = match get("end_of_data")?.as_str() {
            "none" => None,
            v => Some(v.parse().map_err(|_| Error::Format("bad `end_of_data`".into()))?),
        };
        let columns = lines.next().ok_or_else(|| Error::Format("missing column line".into()))??;
        let with_se = match columns.trim() {
            "# t q" => false,
            "# t q stderr" => true,
            other => return Err(Error::Format(format!("unknown column line `{other}`"))),
        };
        let (mut times, mut q, mut se) = (Vec::new(), Vec::new(), Vec::new());
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format(format!("row {k}: bad number")))?;
            if cols.len() != if with_se { 3 } else { 2 } {
                return Err(Error::Format(format!("row {k}: wrong column count")));
            }
            times.push(cols[0]);
            q.push(cols[1]);
            if with_se {
                se.push(cols[2]);
            }
        }
        Ok(SurvivalCurve {
            times,
            log_survival: q,
            stderr: with_se.then_some(se),
            variant,
            corridor_id,
            env_seed,
            end_of_data,
        })
    }
}

fn same_beta(a: f64, b: f64) -> bool {
    a == b
}

/// Checks shared preconditions and returns the number of env steps.
pub(crate) fn prepare(
    env: &EnvironmentPath,
    corridor: &Corridor,
    horizon: f64,
) -> Result<usize> {
    if !same_beta(env.beta(), corridor.beta()) {
        return Err(Error::param(format!(
            "corridor beta {} does not match environment beta {}",
            corridor.beta(),
            env.beta()
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    let steps = (horizon / env.dt() - 1e-9).ceil() as usize;
    if steps > env.steps() {
        return Err(Error::param(format!(
            "environment covers t <= {} but horizon is {horizon}",
            env.horizon()
        )));
    }
    Ok(steps)
}

fn stride(interval: f64, dt: f64) -> usize {
    ((interval / dt).round() as usize).max(1)
}

fn run_sweep(
    env: &EnvironmentPath,
    corridor: &Corridor,
    starts: &[f64],
    horizon: f64,
    settings: &TransferSettings,
    window: bool,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    settings.validate()?;
    let steps = prepare(env, corridor, horizon)?;
    let geometry = Geometry::resolve(corridor, horizon);
    let window = window.then(|| geometry.terminal_window());
    let params = SweepParams {
        env,
        geometry: &geometry,
        steps,
        spatial_points: settings.spatial_points,
        model: settings.model,
        series: settings.series,
        output_stride: stride(settings.output_interval, env.dt()),
        window_everywhere: geometry.constant_width(),
        window,
    };
    let out = transfer::sweep_forward(&params, starts)?;
    Ok((out.times, out.q))
}

/// Quenched `q_t` from a single start, with the corridor's terminal window.
///
/// A start outside the open corridor gives `q ≡ +∞`.
pub fn quenched_survival(
    env: &EnvironmentPath,
    corridor: &Corridor,
    start: f64,
    horizon: f64,
    settings: &TransferSettings,
) -> Result<SurvivalCurve> {
    let (times, mut q) = run_sweep(env, corridor, &[start], horizon, settings, true)?;
    Ok(SurvivalCurve {
        times,
        log_survival: q.pop().unwrap(),
        stderr: None,
        variant: Variant::Pointwise(start),
        corridor_id: corridor.id(),
        env_seed: env.seed(),
        end_of_data: None,
    })
}

fn spread(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn reduce(q: Vec<Vec<f64>>, pick: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut it = q.into_iter();
    let first = it.next().unwrap();
    it.fold(first, |acc, row| acc.iter().zip(&row).map(|(&a, &b)| pick(a, b)).collect())
}

/// Quenched survival from start-grid points; `q` per start in start order.
pub fn quenched_survival_many(
    env: &EnvironmentPath,
    corridor: &Corridor,
    starts: &[f64],
    horizon: f64,
    settings: &TransferSettings,
) -> Result<Vec<SurvivalCurve>> {
    if starts.is_empty() {
        return Err(Error::param("at least one start point is required"));
    }
    let (times, q) = run_sweep(env, corridor, starts, horizon, settings, true)?;
    Ok(q.into_iter()
        .zip(starts)
        .map(|(q, &x)| SurvivalCurve {
            times: times.clone(),
            log_survival: q,
            stderr: None,
            variant: Variant::Pointwise(x),
            corridor_id: corridor.id(),
            env_seed: env.seed(),
            end_of_data: None,
        })
        .collect())
}

/// `X̄_t`: the largest `q_t` over `start_points` starts spanning the start
/// window, with the terminal window applied.
pub fn x_bar(
    env: &EnvironmentPath,
    corridor: &Corridor,
    horizon: f64,
    settings: &TransferSettings,
) -> Result<SurvivalCurve> {
    let geometry = Geometry::resolve(corridor, horizon);
    let (lo, hi) = geometry.start_window();
    let starts = spread(lo, hi, settings.start_points);
    let (times, q) = run_sweep(env, corridor, &starts, horizon, settings, true)?;
    Ok(SurvivalCurve {
        times,
        log_survival: reduce(q, f64::max),
        stderr: None,
        variant: Variant::InfStart,
        corridor_id: corridor.id(),
        env_seed: env.seed(),
        end_of_data: None,
    })
}

/// `X̲_t`: the smallest `q_t` over `start_points` starts spread evenly inside
/// the open band at time 0, without terminal window.
pub fn x_under(
    env: &EnvironmentPath,
    corridor: &Corridor,
    horizon: f64,
    settings: &TransferSettings,
) -> Result<SurvivalCurve> {
    let geometry = Geometry::resolve(corridor, horizon);
    let (lower, width) = (geometry.lower(0.0), geometry.width(0.0));
    let k = settings.start_points;
    let starts: Vec<f64> = (0..k).map(|i| lower + width * (i + 1) as f64 / (k + 1) as f64).collect();
    let (times, q) = run_sweep(env, corridor, &starts, horizon, settings, false)?;
    Ok(SurvivalCurve {
        times,
        log_survival: reduce(q, f64::min),
        stderr: None,
        variant: Variant::SupStart,
        corridor_id: corridor.id(),
        env_seed: env.seed(),
        end_of_data: None,
    })
}
