//! Environment paths: realizations of the Brownian motion `W` that moves the
//! corridor, their Brownian-bridge refinement, and δ-ladder stopping times.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64`. Increment `k` of a sampled path is the `k`-th standard
//! normal (`rand_distr::StandardNormal`) of the stream seeded with the low
//! 63 bits of the path seed, scaled by `sqrt(dt)`; a set
//! [`MIRROR_BIT`](crate::seeds::MIRROR_BIT) negates the path. Bridge points
//! inserted by [`refine_environment`] use one fresh stream per segment,
//! seeded with `mix(seed, [generation, factor, segment])`.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{mix, MIRROR_BIT};

/// One realization of `W` on the uniform grid `t_k = k·dt`, plus the
/// coupling amplitude `β`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPath {
    seed: u64,
    beta: f64,
    dt: f64,
    generation: u32,
    values: Vec<f64>,
}

impl EnvironmentPath {
    /// Builds a path from explicit values (e.g. hand-made test paths).
    pub fn from_values(seed: u64, beta: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {dt}")));
        }
        if !beta.is_finite() {
            return Err(Error::param(format!("beta must be finite, got {beta}")));
        }
        if values.len() < 2 {
            return Err(Error::param("an environment path needs at least two grid points"));
        }
        if values[0] != 0.0 {
            return Err(Error::param(format!("environment must start at W_0 = 0, got {}", values[0])));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("environment values must be finite"));
        }
        Ok(EnvironmentPath {
            seed,
            beta,
            dt,
            generation: 0,
            values,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Grid spacing.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of bridge refinements applied since sampling.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.time(k))
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    /// Grid index of time `t`, if `t` lies on the grid (relative tolerance 1e-9).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k as usize >= self.values.len() {
            return None;
        }
        if (k * self.dt - t).abs() <= 1e-9 * t.abs().max(self.dt) {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Same path with a different coupling amplitude.
    pub fn with_beta(&self, beta: f64) -> Self {
        EnvironmentPath { beta, ..self.clone() }
    }

    /// Writes the path as `time value` rows under a one-line header,
    /// 17 significant digits throughout.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "# environment seed={} dt={:.16e} beta={:.16e} generation={}",
            self.seed, self.dt, self.beta, self.generation
        )?;
        for (t, v) in self.times().zip(&self.values) {
            writeln!(out, "{t:.16e} {v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty environment file".into()))??;
        let fields = parse_header(&header, "# environment")?;
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Format(format!("environment header lacks `{key}`")))
        };
        let parse_f = |key: &str| -> Result<f64> {
            get(key)?.parse().map_err(|_| Error::Format(format!("bad `{key}` in environment header")))
        };
        let seed: u64 = get("seed")?.parse().map_err(|_| Error::Format("bad `seed`".into()))?;
        let generation: u32 = get("generation")?
            .parse()
            .map_err(|_| Error::Format("bad `generation`".into()))?;
        let dt = parse_f("dt")?;
        let beta = parse_f("beta")?;
        let mut values = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Format(format!("row {k}: expected `time value`")));
            };
            let t: f64 = t.parse().map_err(|_| Error::Format(format!("row {k}: bad time")))?;
            let v: f64 = v.parse().map_err(|_| Error::Format(format!("row {k}: bad value")))?;
            if (t - k as f64 * dt).abs() > 1e-9 * (k as f64 * dt).max(dt) {
                return Err(Error::Format(format!("row {k}: time {t} is off the uniform grid")));
            }
            values.push(v);
        }
        let mut path = EnvironmentPath::from_values(seed, beta, dt, values)?;
        path.generation = generation;
        Ok(path)
    }
}

pub(crate) fn parse_header(header: &str, tag: &str) -> Result<Vec<(String, String)>> {
    let rest = header
        .strip_prefix(tag)
        .ok_or_else(|| Error::Format(format!("header must start with `{tag}`")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Format(format!("bad header field `{kv}`")))
        })
        .collect()
}

fn stream(seed: u64) -> (ChaCha8Rng, f64) {
    let sign = if seed & MIRROR_BIT != 0 { -1.0 } else { 1.0 };
    (ChaCha8Rng::seed_from_u64(seed & !MIRROR_BIT), sign)
}

/// Samples `W` on `⌈horizon/dt⌉ + 1` grid points spaced exactly `dt`.
pub fn sample_environment(seed: u64, horizon: f64, dt: f64, beta: f64) -> Result<EnvironmentPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if dt > horizon {
        return Err(Error::param(format!("dt = {dt} exceeds the horizon {horizon}")));
    }
    if !beta.is_finite() {
        return Err(Error::param(format!("beta must be finite, got {beta}")));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let (mut rng, sign) = stream(seed);
    let scale = sign * dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        w += scale * z;
        values.push(w);
    }
    Ok(EnvironmentPath {
        seed,
        beta,
        dt,
        generation: 0,
        values,
    })
}

/// Inserts `factor - 1` Brownian-bridge points into every grid step.
/// Existing grid values are kept exactly.
pub fn refine_environment(path: &EnvironmentPath, factor: usize) -> Result<EnvironmentPath> {
    if factor < 2 {
        return Err(Error::param(format!("refinement factor must be at least 2, got {factor}")));
    }
    let sign = if path.seed & MIRROR_BIT != 0 { -1.0 } else { 1.0 };
    let base = path.seed & !MIRROR_BIT;
    let sub = path.dt / factor as f64;
    let mut values = Vec::with_capacity(path.steps() * factor + 1);
    values.push(path.values[0]);
    for (k, pair) in path.values.windows(2).enumerate() {
        let (start, end) = (pair[0], pair[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(mix(base, &[path.generation as u64, factor as u64, k as u64]));
        let mut prev = start;
        for j in 1..factor {
            // Remaining time from the previous point to the segment end.
            let remaining = (factor - j + 1) as f64 * sub;
            let mean = prev + (end - prev) * sub / remaining;
            let sd = (sub * (remaining - sub) / remaining).sqrt();
            let z: f64 = StandardNormal.sample(&mut rng);
            prev = mean + sign * sd * z;
            values.push(prev);
        }
        values.push(end);
    }
    Ok(EnvironmentPath {
        seed: path.seed,
        beta: path.beta,
        dt: sub,
        generation: path.generation + 1,
        values,
    })
}

/// Stopping times `τ_{n,δ}` at which `W` has moved by `δ` since the
/// previous ladder time, detected at grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLadder {
    pub delta: f64,
    /// `τ_{1,δ}, τ_{2,δ}, ...` up to the horizon (τ₀ = 0 is implicit).
    pub tau: Vec<f64>,
    /// `ρ_{k,δ} = τ_{k,δ} - τ_{k-1,δ}`.
    pub rho: Vec<f64>,
    /// `N = sup{n : τ_{n,δ} < horizon}`.
    pub count_before: usize,
    /// Set when `δ² < 10·dt`: crossing times are then dominated by the grid.
    pub coarse_grid_warning: bool,
}

/// First grid point at which `|W - W(τ_n)| ≥ δ`, repeated up to `horizon`.
pub fn delta_ladder(path: &EnvironmentPath, delta: f64, horizon: f64) -> Result<DeltaLadder> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if !(horizon > 0.0) || horizon > path.horizon() * (1.0 + 1e-12) {
        return Err(Error::param(format!(
            "horizon {horizon} is not covered by the path (ends at {})",
            path.horizon()
        )));
    }
    let mut tau = Vec::new();
    let mut anchor = path.values[0];
    let mut last = 0.0;
    let mut rho = Vec::new();
    for (k, &w) in path.values.iter().enumerate().skip(1) {
        let t = path.time(k);
        if t > horizon * (1.0 + 1e-12) {
            break;
        }
        if (w - anchor).abs() >= delta {
            tau.push(t);
            rho.push(t - last);
            last = t;
            anchor = w;
        }
    }
    let count_before = tau.iter().filter(|&&t| t < horizon).count();
    Ok(DeltaLadder {
        delta,
        tau,
        rho,
        count_before,
        coarse_grid_warning: delta * delta < 10.0 * path.dt,
    })
}
