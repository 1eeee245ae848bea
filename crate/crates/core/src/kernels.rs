//! Closed-form kernels for Brownian motion killed on leaving a fixed band.
//!
//! Every series here has two representations: the method of images, which
//! converges fast for short times, and the sine eigen-expansion, which
//! converges fast for long times. The public entry points switch at
//! `t* = L²/π²`; both halves are exposed so their agreement can be tested.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// A fixed interval `[lower, upper]` with `lower < upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    lower: f64,
    upper: f64,
}

impl BandSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::param(format!(
                "band requires finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(BandSpec { lower, upper })
    }

    /// The band `[0, width]`.
    pub fn unit(width: f64) -> Result<Self> {
        Self::new(0.0, width)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn shifted(&self, c: f64) -> BandSpec {
        BandSpec {
            lower: self.lower + c,
            upper: self.upper + c,
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<BandSpec> {
        BandSpec::new(self.lower * factor, self.upper * factor)
    }

    /// `t* = L²/π²`, the switch point between image and eigen representations.
    pub fn regime_switch(&self) -> f64 {
        let l = self.width();
        l * l / (PI * PI)
    }
}

/// Truncation control shared by every series in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    pub relative_tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            relative_tolerance: 1e-13,
            max_terms: 512,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance < 1.0) {
            return Err(Error::param(format!(
                "series relative_tolerance must lie in (0, 1), got {}",
                self.relative_tolerance
            )));
        }
        if self.max_terms < 8 {
            return Err(Error::param(format!(
                "series max_terms must be at least 8, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

/// Sums `term(0) + term(1) + ...` where `term(n)` returns the value and a
/// magnitude envelope. Stops once the envelope falls below
/// `relative_tolerance * |partial|` while still decreasing.
fn sum_series(cfg: &SeriesConfig, mut term: impl FnMut(usize) -> (f64, f64)) -> Result<f64> {
    let mut partial = 0.0;
    let mut prev_bound = f64::INFINITY;
    for n in 0..cfg.max_terms {
        let (value, bound) = term(n);
        partial += value;
        if n > 0 && bound <= cfg.relative_tolerance * partial.abs() && bound <= prev_bound {
            return Ok(partial);
        }
        prev_bound = bound;
    }
    Err(Error::Numerical {
        terms: cfg.max_terms,
        partial,
        bound: prev_bound,
    })
}

/// Upper standard normal tail `P(Z > z)`.
pub(crate) fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `P(lo < Z < hi)` for a standard normal, accurate in both tails.
pub(crate) fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        0.0
    } else if lo >= 0.0 {
        normal_tail(lo) - normal_tail(hi)
    } else if hi <= 0.0 {
        normal_tail(-hi) - normal_tail(-lo)
    } else {
        1.0 - normal_tail(-lo) - normal_tail(hi)
    }
}

/// Heat kernel `φ_t(d)` of a standard Brownian motion.
pub(crate) fn gaussian(d: f64, t: f64) -> f64 {
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

fn check_time(t: f64, name: &str) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::param(format!("{name} must be non-negative, got {t}")));
    }
    Ok(())
}

/// `P^x(B_s ∈ [a, b] for all s ≤ t)`.
pub fn band_survival_fixed(x: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_time(t, "t")?;
    if !band.contains_open(x) {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t < band.regime_switch() {
        band_survival_images(x, band, t, cfg)
    } else {
        Ok(log_band_survival_eigen(x, band, t, cfg)?.exp())
    }
}

/// Natural log of [`band_survival_fixed`]; finite even when the
/// probability underflows. Returns `-inf` outside the open band.
pub fn log_band_survival_fixed(x: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_time(t, "t")?;
    if !band.contains_open(x) {
        return Ok(f64::NEG_INFINITY);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < band.regime_switch() {
        Ok(band_survival_images(x, band, t, cfg)?.ln())
    } else {
        log_band_survival_eigen(x, band, t, cfg)
    }
}

/// Image (reflection) series for the band survival probability.
pub fn band_survival_images(x: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    if !band.contains_open(x) {
        return Ok(0.0);
    }
    let l = band.width();
    let u = x - band.lower();
    let s = t.sqrt();
    let pieces = |shift: f64| {
        let direct = normal_interval((-u + shift) / s, (l - u + shift) / s);
        let mirror = normal_interval((u + shift) / s, (l + u + shift) / s);
        (direct, mirror)
    };
    let value = sum_series(cfg, |k| {
        if k == 0 {
            let (d, m) = pieces(0.0);
            (d - m, d + m)
        } else {
            let shift = 2.0 * k as f64 * l;
            let (d1, m1) = pieces(-shift);
            let (d2, m2) = pieces(shift);
            (d1 - m1 + d2 - m2, d1 + m1 + d2 + m2)
        }
    })?;
    Ok(value.clamp(0.0, 1.0))
}

/// Eigen-series band survival, returned in log form:
/// `ln Σ_{n odd} (4/nπ) sin(nπu/L) exp(-n²π²t / 2L²)`.
pub fn log_band_survival_eigen(x: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    if !band.contains_open(x) {
        return Ok(f64::NEG_INFINITY);
    }
    let l = band.width();
    let theta = PI * (x - band.lower()) / l;
    let base_sin = theta.sin();
    let decay = PI * PI * t / (2.0 * l * l);
    let ratio_sum = sum_series(cfg, |m| {
        if m == 0 {
            return (1.0, 1.0);
        }
        let n = (2 * m + 1) as f64;
        let envelope = (-(n * n - 1.0) * decay).exp();
        let value = (n * theta).sin() / (n * base_sin) * envelope;
        (value, envelope)
    })?;
    if ratio_sum <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let log = (4.0 / PI).ln() + base_sin.ln() - decay + ratio_sum.ln();
    Ok(log.min(0.0))
}

/// Transition sub-density of Brownian motion killed on leaving `band`,
/// from `x` to `y` over time `t`.
pub fn absorbing_density(x: f64, y: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::param(format!("dt must be positive, got {t}")));
    }
    if !band.contains_open(x) || !band.contains_open(y) {
        return Ok(0.0);
    }
    if t < band.regime_switch() {
        absorbing_density_images(x, y, band, t, cfg)
    } else {
        Ok(log_absorbing_density_eigen(x, y, band, t, cfg)?.exp())
    }
}

/// `Σ_k [φ_t(y - x - 2kL) - φ_t(y + x - 2a - 2kL)]`.
pub fn absorbing_density_images(x: f64, y: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    let l = band.width();
    let u = x - band.lower();
    let v = y - band.lower();
    let value = sum_series(cfg, |k| {
        if k == 0 {
            let d = gaussian(v - u, t);
            let m = gaussian(v + u, t);
            (d - m, d + m)
        } else {
            let shift = 2.0 * k as f64 * l;
            let d1 = gaussian(v - u - shift, t);
            let d2 = gaussian(v - u + shift, t);
            let m1 = gaussian(v + u - shift, t);
            let m2 = gaussian(v + u + shift, t);
            (d1 + d2 - m1 - m2, d1 + d2 + m1 + m2)
        }
    })?;
    Ok(value.max(0.0))
}

/// Log of `(2/L) Σ_n sin(nπu/L) sin(nπv/L) exp(-n²π²t/2L²)`.
pub fn log_absorbing_density_eigen(x: f64, y: f64, band: BandSpec, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    if !band.contains_open(x) || !band.contains_open(y) {
        return Ok(f64::NEG_INFINITY);
    }
    let l = band.width();
    let tu = PI * (x - band.lower()) / l;
    let tv = PI * (y - band.lower()) / l;
    let lead = tu.sin() * tv.sin();
    let decay = PI * PI * t / (2.0 * l * l);
    let ratio_sum = sum_series(cfg, |m| {
        if m == 0 {
            return (1.0, 1.0);
        }
        let n = (m + 1) as f64;
        // |sin(nθ)| ≤ n |sin θ| bounds the ratio by n².
        let envelope = n * n * (-(n * n - 1.0) * decay).exp();
        let value = (n * tu).sin() * (n * tv).sin() / lead * (-(n * n - 1.0) * decay).exp();
        (value, envelope)
    })?;
    if ratio_sum <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((2.0 / l).ln() + lead.ln() - decay + ratio_sum.ln())
}

/// Probability that a Brownian bridge from `x` to `y` over time `dt`
/// stays inside `band`.
pub fn bridge_band_survival(x: f64, y: f64, band: BandSpec, dt: f64, cfg: &SeriesConfig) -> Result<f64> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if !band.contains_open(x) || !band.contains_open(y) {
        return Ok(0.0);
    }
    if dt >= band.regime_switch() {
        let log_abs = log_absorbing_density_eigen(x, y, band, dt, cfg)?;
        let d = y - x;
        let log_free = -d * d / (2.0 * dt) - 0.5 * (2.0 * PI * dt).ln();
        return Ok((log_abs - log_free).exp().clamp(0.0, 1.0));
    }
    let l = band.width();
    let u = x - band.lower();
    let v = y - band.lower();
    let direct = |k: f64| (-2.0 * k * l * (k * l + v - u) / dt).exp();
    let mirror = |k: f64| (-2.0 * (k * l + u) * (k * l + v) / dt).exp();
    let value = sum_series(cfg, |k| {
        if k == 0 {
            let m = mirror(0.0) + mirror(-1.0);
            (1.0 - m, 1.0 + m)
        } else {
            let kf = k as f64;
            let d = direct(kf) + direct(-kf);
            // k = -1 of the mirror family was folded into the k = 0 term.
            let m = mirror(kf) + mirror(-kf - 1.0);
            (d - m, d + m)
        }
    })?;
    Ok(value.clamp(0.0, 1.0))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Killed transition densities with constant drift `-slope`, obtained from
/// the driftless density by the factor `exp(slope·(x - y) - slope²·dt/2)`.
pub fn tilted_propagator(
    x_grid: &[f64],
    y_grid: &[f64],
    band: BandSpec,
    dt: f64,
    slope: f64,
    cfg: &SeriesConfig,
) -> Result<DenseMatrix> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if let Some(p) = x_grid.iter().chain(y_grid).find(|p| !band.contains_open(**p)) {
        return Err(Error::param(format!(
            "grid point {p} lies outside the open band ({}, {})",
            band.lower(),
            band.upper()
        )));
    }
    let mut out = DenseMatrix::zeros(x_grid.len(), y_grid.len());
    for (i, &x) in x_grid.iter().enumerate() {
        for (j, &y) in y_grid.iter().enumerate() {
            let base = absorbing_density(x, y, band, dt, cfg)?;
            if base > 0.0 {
                let log_tilt = slope * (x - y) - 0.5 * slope * slope * dt;
                out.set(i, j, (base.ln() + log_tilt).exp());
            }
        }
    }
    Ok(out)
}

/// Density of the first time a standard Brownian motion started at 0
/// leaves `(-δ, δ)`.
pub fn first_exit_density_two_sided(delta: f64, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if !(t > 0.0) {
        return Err(Error::param(format!("t must be positive, got {t}")));
    }
    let d2 = delta * delta;
    if t < 4.0 * d2 / (PI * PI) {
        let prefactor = 2.0 * delta / (2.0 * PI * t * t * t).sqrt();
        let sum = sum_series(cfg, |k| {
            let m = (2 * k + 1) as f64;
            let mag = m * (-m * m * d2 / (2.0 * t)).exp();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (sign * mag, mag)
        })?;
        Ok((prefactor * sum).max(0.0))
    } else {
        let sum = sum_series(cfg, |k| {
            let m = (2 * k + 1) as f64;
            let mag = m * PI / (2.0 * d2) * (-m * m * PI * PI * t / (8.0 * d2)).exp();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (sign * mag, mag)
        })?;
        Ok(sum.max(0.0))
    }
}
