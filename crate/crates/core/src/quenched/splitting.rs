use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::corridor::Geometry;
use super::transfer::SubstepModel;
use super::{prepare, SurvivalCurve, Variant};
use crate::env::EnvironmentPath;
use crate::error::{Error, Result};
use crate::kernels::{bridge_band_survival, BandSpec, SeriesConfig};
use crate::quenched::Corridor;
use crate::seeds::mix;

/// Settings of the particle-splitting estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplittingConfig {
    pub n_particles: usize,
    /// Time between multinomial resampling rounds.
    pub resample_period: f64,
    pub seed: u64,
    /// Kill with the bridge crossing probability inside each step.
    pub bridge_thinning: bool,
    /// Within-step model used for thinning; should match the transfer settings.
    pub model: SubstepModel,
    pub output_interval: f64,
    pub series: SeriesConfig,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        SplittingConfig {
            n_particles: 10_000,
            resample_period: 0.05,
            seed: 0,
            bridge_thinning: true,
            model: SubstepModel::Bridge,
            output_interval: 0.25,
            series: SeriesConfig::default(),
        }
    }
}

impl SplittingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 100 {
            return Err(Error::param(format!(
                "n_particles must be at least 100, got {}",
                self.n_particles
            )));
        }
        if !(self.resample_period > 0.0 && self.resample_period.is_finite()) {
            return Err(Error::param("resample_period must be positive"));
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return Err(Error::param("output_interval must be positive"));
        }
        self.series.validate()
    }
}

/// Sequential Monte Carlo estimate of `q_t`.
///
/// Standard errors come from the genealogy of the population: each walker
/// carries the index of its time-0 ancestor, and the spread of the estimate
/// across ancestral families gives the relative variance.
///
/// Walkers move on the environment grid in the corridor frame; a walker dies
/// when it leaves the band or, with thinning on, with the probability that
/// the connecting bridge crossed a boundary. Survivors are resampled back to
/// `n_particles` every `resample_period`. If every walker dies the curve stops
/// at that time and `end_of_data` is set.
pub fn particle_splitting_survival(
    env: &EnvironmentPath,
    corridor: &Corridor,
    start: f64,
    horizon: f64,
    cfg: &SplittingConfig,
) -> Result<SurvivalCurve> {
    cfg.validate()?;
    let steps = prepare(env, corridor, horizon)?;
    let geometry = Geometry::resolve(corridor, horizon);
    let dt = env.dt();
    let beta = env.beta();
    let sd = dt.sqrt();
    let bridge_var = match cfg.model {
        SubstepModel::Linear => dt,
        SubstepModel::Bridge => (1.0 + beta * beta) * dt,
    };
    let thin_reach = 7.0 * bridge_var.sqrt();
    let output_stride = ((cfg.output_interval / dt).round() as usize).max(1);
    let resample_stride = ((cfg.resample_period / dt).round() as usize).max(1);
    let window = geometry.terminal_window();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &[env.seed()]));

    let mut curve = SurvivalCurve {
        times: vec![0.0],
        log_survival: vec![],
        stderr: Some(vec![0.0]),
        variant: Variant::Pointwise(start),
        corridor_id: corridor.id(),
        env_seed: env.seed(),
        end_of_data: None,
    };
    let z0 = start - geometry.lower(0.0);
    let w0 = geometry.width(0.0);
    let in_window0 = start >= window.0 && start <= window.1;
    if !(z0 > 0.0 && z0 < w0) {
        curve.log_survival.push(f64::INFINITY);
        curve.end_of_data = Some(0.0);
        return Ok(curve);
    }
    curve.log_survival.push(if in_window0 || !geometry.constant_width() { 0.0 } else { f64::INFINITY });

    let n = cfg.n_particles;
    let mut walkers = vec![z0; n];
    let mut eves: Vec<u32> = (0..n as u32).collect();
    let mut next = Vec::with_capacity(n);
    let mut next_eves = Vec::with_capacity(n);
    let mut family = vec![0u32; n];
    let mut population = n as f64;
    let mut log_p = 0.0;

    for k in 0..steps {
        let (t0, t1) = (env.time(k), env.time(k + 1));
        let width = if geometry.constant_width() {
            w0
        } else {
            geometry.width(0.5 * (t0 + t1))
        };
        let band = BandSpec::unit(width)?;
        let drift = beta * (env.values()[k + 1] - env.values()[k]) + geometry.lower(t1) - geometry.lower(t0);
        next.clear();
        next_eves.clear();
        for (&z, &eve) in walkers.iter().zip(&eves) {
            let noise: f64 = rng.sample(StandardNormal);
            let y = z + sd * noise - drift;
            if !(y > 0.0 && y < width) {
                continue;
            }
            if cfg.bridge_thinning && z.min(y).min(width - z.max(y)) < thin_reach {
                let stay = bridge_band_survival(z, y, band, bridge_var, &cfg.series)?;
                if rng.gen::<f64>() >= stay {
                    continue;
                }
            }
            next.push(y);
            next_eves.push(eve);
        }
        std::mem::swap(&mut walkers, &mut next);
        std::mem::swap(&mut eves, &mut next_eves);

        let step = k + 1;
        if walkers.is_empty() {
            curve.end_of_data = Some(t1);
            return Ok(curve);
        }
        if step % output_stride == 0 || step == steps {
            let lower = geometry.lower(t1);
            let (lo, hi) = if geometry.constant_width() || step == steps {
                (window.0 - lower, window.1 - lower)
            } else {
                (0.0, width)
            };
            family.iter_mut().for_each(|c| *c = 0);
            let mut inside = 0u64;
            for (&z, &eve) in walkers.iter().zip(&eves) {
                if z >= lo && z <= hi {
                    family[eve as usize] += 1;
                    inside += 1;
                }
            }
            let (q, se) = if inside > 0 {
                let f = inside as f64 / population;
                let nf = n as f64;
                let spread: f64 = family
                    .iter()
                    .map(|&c| {
                        let d = nf * c as f64 / inside as f64 - 1.0;
                        d * d
                    })
                    .sum();
                (-(log_p + f.ln()), (spread / (nf * (nf - 1.0))).sqrt())
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            curve.times.push(t1);
            curve.log_survival.push(q.max(0.0));
            curve.stderr.as_mut().unwrap().push(se);
        }
        if step % resample_stride == 0 && step < steps {
            let f = walkers.len() as f64 / population;
            log_p += f.ln();
            next.clear();
            next_eves.clear();
            for _ in 0..n {
                let j = rng.gen_range(0..walkers.len());
                next.push(walkers[j]);
                next_eves.push(eves[j]);
            }
            std::mem::swap(&mut walkers, &mut next);
            std::mem::swap(&mut eves, &mut next_eves);
            population = n as f64;
        }
    }
    Ok(curve)
}
