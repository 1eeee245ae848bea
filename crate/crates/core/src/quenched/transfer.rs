//! Banded transfer-operator sweeps in the corridor frame.
//!
//! Coordinates are `z = B - βW - lower`, so the band is `(0, width)` and each
//! environment step adds a constant drift `-c`. The per-step kernel factorises
//! as `K0(x, y) · exp(c(x - y) - c²h/2)`, so `K0` is built once per width.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::corridor::Geometry;
use crate::env::EnvironmentPath;
use crate::error::{Error, Result};
use crate::kernels::{absorbing_density, bridge_band_survival, gaussian, BandSpec, SeriesConfig};

/// How the relative motion `B - βW` is modelled inside one environment step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstepModel {
    /// `W` is the linear interpolant of its grid values.
    Linear,
    /// `W` is a Brownian bridge between its grid values, averaged out: the
    /// relative path is a bridge of variance `(1 + β²)h` between the endpoints.
    Bridge,
}

/// Gaussian cut-off, in standard deviations, for the banded products.
const CUTOFF_SIGMAS: f64 = 9.0;
/// Largest grid spacing, in units of the step's standard deviation.
const MAX_SPACING_SIGMAS: f64 = 1.5;
/// Relative width change that triggers a kernel rebuild.
pub(crate) const WIDTH_TOLERANCE: f64 = 2.5e-4;
/// L1 distance below which two normalised densities are treated as equal.
const MERGE_TOLERANCE: f64 = 1e-13;
const MERGE_CHECK_EVERY: usize = 8;

pub(crate) struct StepKernel {
    n: usize,
    width: f64,
    spacing: f64,
    h: f64,
    radius: isize,
    model: SubstepModel,
    bridge_variance: f64,
    series: SeriesConfig,
    band: BandSpec,
    base: Vec<f64>,
}

impl StepKernel {
    pub(crate) fn new(
        width: f64,
        n: usize,
        h: f64,
        model: SubstepModel,
        beta: f64,
        series: SeriesConfig,
    ) -> Result<Self> {
        let spacing = width / n as f64;
        if spacing > MAX_SPACING_SIGMAS * h.sqrt() {
            return Err(Error::param(format!(
                "spatial grid too coarse: spacing {spacing:.3e} exceeds {MAX_SPACING_SIGMAS}·sqrt(dt) = {:.3e}; \
                 use at least {} spatial points",
                MAX_SPACING_SIGMAS * h.sqrt(),
                (width / (MAX_SPACING_SIGMAS * h.sqrt())).ceil()
            )));
        }
        let radius = (CUTOFF_SIGMAS * h.sqrt() / spacing).ceil() as isize + 1;
        let mut kernel = StepKernel {
            n,
            width,
            spacing,
            h,
            radius,
            model,
            bridge_variance: 1.0 + beta * beta,
            series,
            band: BandSpec::unit(width)?,
            base: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in i..n {
                let value = kernel.base_entry(kernel.node(i), kernel.node(j))?;
                kernel.base[i * n + j] = value;
                kernel.base[j * n + i] = value;
            }
        }
        Ok(kernel)
    }

    pub(crate) fn width(&self) -> f64 {
        self.width
    }

    pub(crate) fn spacing(&self) -> f64 {
        self.spacing
    }

    pub(crate) fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    fn band(&self) -> BandSpec {
        self.band
    }

    fn base_entry(&self, x: f64, y: f64) -> Result<f64> {
        match self.model {
            SubstepModel::Linear => absorbing_density(x, y, self.band(), self.h, &self.series),
            SubstepModel::Bridge => {
                let free = gaussian(y - x, self.h);
                if free == 0.0 {
                    return Ok(0.0);
                }
                let stay = bridge_band_survival(x, y, self.band(), self.bridge_variance * self.h, &self.series)?;
                Ok(free * stay)
            }
        }
    }

    fn shift(&self, c: f64) -> isize {
        (c * self.h / self.spacing).round() as isize
    }

    /// `Σ_k Δ φ_h(kΔ - offset)` over the lattice; 1 up to aliasing of order
    /// `exp(-2π²h/Δ²)`, which matters only when `Δ` is comparable to `√h`.
    fn lattice_mass(&self, offset: f64) -> f64 {
        let k0 = (offset / self.spacing).round() as isize;
        (k0 - self.radius..=k0 + self.radius)
            .map(|k| self.spacing * gaussian(k as f64 * self.spacing - offset, self.h))
            .sum()
    }

    /// Quadrature-weighted tilt `Δ exp(c d Δ - c²h/2)` for `d` in
    /// `shift - radius ..= shift + radius`, scaled so the free part of the
    /// step carries unit mass on the lattice.
    fn tilt_table(&self, c: f64, table: &mut Vec<f64>) -> isize {
        let s = self.shift(c);
        let r = self.radius;
        table.clear();
        let half = 0.5 * c * c * self.h;
        let scale = self.spacing / self.lattice_mass(c * self.h);
        for d in (s - r)..=(s + r) {
            table.push(scale * (c * d as f64 * self.spacing - half).exp());
        }
        s
    }

    /// `out(y) = Σ_x u(x) K(x, y) Δ`.
    pub(crate) fn forward(&self, c: f64, u: &[f64], out: &mut [f64], table: &mut Vec<f64>) {
        let s = self.tilt_table(c, table);
        let (n, r) = (self.n as isize, self.radius);
        for (j, slot) in out.iter_mut().enumerate() {
            let j = j as isize;
            let lo = (j + s - r).max(0);
            let hi = (j + s + r).min(n - 1);
            let mut acc = 0.0;
            if lo <= hi {
                let row = &self.base[j as usize * self.n..(j as usize + 1) * self.n];
                let offset = (lo - j - s + r) as usize;
                let span = (hi - lo + 1) as usize;
                let (lo, hi) = (lo as usize, hi as usize + 1);
                for ((&ui, &k), &w) in u[lo..hi].iter().zip(&row[lo..hi]).zip(&table[offset..offset + span]) {
                    acc += ui * k * w;
                }
            }
            *slot = acc;
        }
    }

    /// `out(x) = Σ_y K(x, y) v(y) Δ`.
    pub(crate) fn backward(&self, c: f64, v: &[f64], out: &mut [f64], table: &mut Vec<f64>) {
        let s = self.tilt_table(c, table);
        let (n, r) = (self.n as isize, self.radius);
        for (i, slot) in out.iter_mut().enumerate() {
            let i = i as isize;
            let lo = (i - s - r).max(0);
            let hi = (i - s + r).min(n - 1);
            let mut acc = 0.0;
            if lo <= hi {
                let row = &self.base[i as usize * self.n..(i as usize + 1) * self.n];
                for j in lo..=hi {
                    let d = (i - j - s + r) as usize;
                    acc += row[j as usize] * table[d] * v[j as usize];
                }
            }
            *slot = acc;
        }
    }

    /// Density after one step from the point `z0`.
    pub(crate) fn point_column(&self, z0: f64, c: f64, out: &mut [f64]) -> Result<()> {
        let half = 0.5 * c * c * self.h;
        let sd = self.h.sqrt();
        let scale = 1.0 / self.lattice_mass(z0 - 0.5 * self.spacing - c * self.h);
        for (j, slot) in out.iter_mut().enumerate() {
            let y = self.node(j);
            let d = y - z0 + c * self.h;
            *slot = if d.abs() > (CUTOFF_SIGMAS + 2.0) * sd {
                0.0
            } else {
                let base = self.base_entry(z0, y)?;
                if base == 0.0 {
                    0.0
                } else {
                    scale * base * (c * (z0 - y) - half).exp()
                }
            };
        }
        Ok(())
    }
}

/// Coefficients `b_m`, `m = 1..=n`, of the sine interpolant
/// `u(z) = Σ b_m sin(mπz/w)` through cell-centred nodes.
fn sine_coefficients(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (1..=n)
        .map(|m| {
            let eps = if m == n { 1.0 } else { 2.0 };
            let sum: f64 = u
                .iter()
                .enumerate()
                .map(|(i, &ui)| ui * (m as f64 * PI * (i as f64 + 0.5) / n as f64).sin())
                .sum();
            eps * sum / n as f64
        })
        .collect()
}

/// Moves a density between cell-centred grids of different widths through its
/// sine interpolant; zero beyond the old width.
pub(crate) fn regrid(u: &[f64], old_width: f64, new_width: f64) -> Vec<f64> {
    let n = u.len();
    let b = sine_coefficients(u);
    (0..n)
        .map(|j| {
            let z = (j as f64 + 0.5) * new_width / n as f64;
            if z >= old_width {
                return 0.0;
            }
            let value: f64 = b
                .iter()
                .enumerate()
                .map(|(m, &bm)| bm * ((m + 1) as f64 * PI * z / old_width).sin())
                .sum();
            value.max(0.0)
        })
        .collect()
}

/// Node weights `ω_i` with `Σ ω_i u_i = ∫_lo^hi u` for the sine interpolant of
/// `u` on `(0, width)`.
pub(crate) fn window_weights(lo: f64, hi: f64, width: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (lo.clamp(0.0, width), hi.clamp(0.0, width));
    let integrals: Vec<f64> = (1..=n)
        .map(|m| {
            let k = m as f64 * PI / width;
            let eps = if m == n { 1.0 } else { 2.0 };
            eps / n as f64 * ((k * lo).cos() - (k * hi).cos()) / k
        })
        .collect();
    (0..n)
        .map(|i| {
            integrals
                .iter()
                .enumerate()
                .map(|(m, &im)| im * ((m + 1) as f64 * PI * (i as f64 + 0.5) / n as f64).sin())
                .sum()
        })
        .collect()
}

/// Grid indices whose nodes lie in `[lo, hi]`.
pub(crate) fn window_range(lo: f64, hi: f64, spacing: f64, n: usize) -> Option<(usize, usize)> {
    let eps = 1e-9 * spacing;
    let first = ((lo - eps) / spacing - 0.5).ceil().max(0.0);
    let last = ((hi + eps) / spacing - 0.5).floor().min(n as f64 - 1.0);
    if first > last {
        None
    } else {
        Some((first as usize, last as usize))
    }
}

pub(crate) struct ForwardOutput {
    pub times: Vec<f64>,
    /// `q[start][output]`.
    pub q: Vec<Vec<f64>>,
}

pub(crate) struct SweepParams<'a> {
    pub env: &'a EnvironmentPath,
    pub geometry: &'a Geometry<'a>,
    pub steps: usize,
    pub spatial_points: usize,
    pub model: SubstepModel,
    pub series: SeriesConfig,
    pub output_stride: usize,
    /// Apply the terminal window at intermediate output times too.
    pub window_everywhere: bool,
    /// `None` means the whole band.
    pub window: Option<(f64, f64)>,
}

fn output_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps).step_by(stride.max(1)).collect();
    if *out.last().unwrap() != steps {
        out.push(steps);
    }
    out
}

fn l1_distance(a: &[f64], b: &[f64], spacing: f64) -> f64 {
    spacing * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Propagates one density per start (absolute positions at time 0), merging
/// starts whose normalised densities coincide.
pub(crate) fn sweep_forward(p: &SweepParams<'_>, starts: &[f64]) -> Result<ForwardOutput> {
    let env = p.env;
    let g = p.geometry;
    let dt = env.dt();
    let beta = env.beta();
    let n = p.spatial_points;
    let outputs = output_steps(p.steps, p.output_stride);
    let times: Vec<f64> = outputs.iter().map(|&k| env.time(k)).collect();
    let ns = starts.len();
    let mut q = vec![Vec::with_capacity(outputs.len()); ns];

    let window_at = |step: usize, width: f64| -> (f64, f64) {
        let t = env.time(step);
        let lower = g.lower(t);
        match p.window {
            Some((lo, hi)) if p.window_everywhere || step == p.steps => (lo - lower, hi - lower),
            _ => (0.0, width),
        }
    };

    // Time-0 output.
    let z0: Vec<f64> = starts.iter().map(|&x| x - g.lower(0.0)).collect();
    let w0 = g.width(0.0);
    let (wlo, whi) = window_at(0, w0);
    for (s, &z) in z0.iter().enumerate() {
        let inside_band = z > 0.0 && z < w0;
        let inside_window = z >= wlo - 1e-12 && z <= whi + 1e-12;
        q[s].push(if inside_band && inside_window { 0.0 } else { f64::INFINITY });
    }
    if p.steps == 0 {
        return Ok(ForwardOutput { times, q });
    }

    let mut kernel: Option<StepKernel> = None;
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; ns];
    let mut alias: Vec<usize> = (0..ns).collect();
    let mut log_mass = vec![0.0; ns];
    let mut alive: Vec<bool> = z0.iter().map(|&z| z > 0.0 && z < w0).collect();
    let mut step_log = vec![0.0; ns];
    let mut scratch = vec![0.0; n];
    let mut table = Vec::new();
    let mut next_output = 1;
    let mut weights: Option<((u64, u64, u64), Vec<f64>)> = None;

    for k in 0..p.steps {
        let (t0, t1) = (env.time(k), env.time(k + 1));
        let target_width = if g.constant_width() {
            g.width(0.0)
        } else {
            g.width(0.5 * (t0 + t1))
        };
        let rebuild = match &kernel {
            None => true,
            Some(kern) => (target_width - kern.width()).abs() > WIDTH_TOLERANCE * kern.width(),
        };
        if rebuild {
            let fresh = StepKernel::new(target_width, n, dt, p.model, beta, p.series)?;
            if let Some(old) = &kernel {
                for v in vectors.iter_mut().flatten() {
                    let moved = regrid(v, old.width(), fresh.width());
                    *v = moved;
                }
                // Regridding changes mass; fold the change into the log mass.
                for r in 0..ns {
                    if alias[r] == r && alive[r] {
                        if let Some(v) = vectors[r].as_mut() {
                            let mass = fresh.spacing() * v.iter().sum::<f64>();
                            step_log[r] = normalise(v, mass);
                        }
                    }
                }
                for s in 0..ns {
                    if alive[s] {
                        log_mass[s] += step_log[alias[s]];
                    }
                }
            }
            kernel = Some(fresh);
        }
        let kern = kernel.as_ref().unwrap();
        let dw = env.values()[k + 1] - env.values()[k];
        let c = (beta * dw + g.lower(t1) - g.lower(t0)) / dt;

        for r in 0..ns {
            if alias[r] != r || !alive[r] {
                continue;
            }
            match vectors[r].as_mut() {
                None => {
                    let mut v = vec![0.0; n];
                    kern.point_column(z0[r], c, &mut v)?;
                    let mass = kern.spacing() * v.iter().sum::<f64>();
                    step_log[r] = normalise(&mut v, mass);
                    vectors[r] = Some(v);
                }
                Some(v) => {
                    kern.forward(c, v, &mut scratch, &mut table);
                    let mass = kern.spacing() * scratch.iter().sum::<f64>();
                    v.copy_from_slice(&scratch);
                    step_log[r] = normalise(v, mass);
                }
            }
        }
        for s in 0..ns {
            if alive[s] {
                log_mass[s] += step_log[alias[s]];
                if log_mass[s] == f64::NEG_INFINITY {
                    alive[s] = false;
                }
            }
        }

        if (k + 1) % MERGE_CHECK_EVERY == 0 {
            merge_starts(&mut vectors, &mut alias, &alive, kern.spacing());
        }

        if next_output < outputs.len() && outputs[next_output] == k + 1 {
            let (lo, hi) = window_at(k + 1, kern.width());
            let key = (lo.to_bits(), hi.to_bits(), kern.width().to_bits());
            if weights.as_ref().map(|(k, _)| *k) != Some(key) {
                weights = Some((key, window_weights(lo, hi, kern.width(), n)));
            }
            let omega = &weights.as_ref().unwrap().1;
            let mut window_log = vec![f64::NEG_INFINITY; ns];
            for r in 0..ns {
                if alias[r] == r && alive[r] {
                    if let Some(v) = vectors[r].as_ref() {
                        let m: f64 = v.iter().zip(omega).map(|(a, b)| a * b).sum();
                        if m > 0.0 {
                            window_log[r] = m.ln();
                        }
                    }
                }
            }
            for s in 0..ns {
                let value = if alive[s] {
                    -(log_mass[s] + window_log[alias[s]])
                } else {
                    f64::INFINITY
                };
                q[s].push(value.max(0.0));
            }
            next_output += 1;
        }
    }
    Ok(ForwardOutput { times, q })
}

/// Scales `v` to unit mass and returns `ln(mass)`.
fn normalise(v: &mut [f64], mass: f64) -> f64 {
    if !(mass > 0.0) || !mass.is_finite() {
        v.iter_mut().for_each(|x| *x = 0.0);
        return f64::NEG_INFINITY;
    }
    let inv = 1.0 / mass;
    v.iter_mut().for_each(|x| *x *= inv);
    mass.ln()
}

fn merge_starts(vectors: &mut [Option<Vec<f64>>], alias: &mut [usize], alive: &[bool], spacing: f64) {
    let reps: Vec<usize> = (0..alias.len()).filter(|&r| alias[r] == r && alive[r] && vectors[r].is_some()).collect();
    if reps.len() < 2 {
        return;
    }
    let leader = reps[0];
    for &r in &reps[1..] {
        let close = {
            let a = vectors[leader].as_ref().unwrap();
            let b = vectors[r].as_ref().unwrap();
            l1_distance(a, b, spacing) < MERGE_TOLERANCE
        };
        if close {
            vectors[r] = None;
            for slot in alias.iter_mut() {
                if *slot == r {
                    *slot = leader;
                }
            }
        }
    }
}

/// Backward sweeps for a constant-width corridor: for every checkpoint `n`
/// returns `q[m][n] = -ln min_{x ∈ window} P^x(survive steps m..n, end in
/// window)` for every earlier checkpoint `m`, with starts restricted to grid
/// nodes in the window.
pub(crate) fn sweep_backward_inf(
    p: &SweepParams<'_>,
    window: (f64, f64),
    checkpoints: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let env = p.env;
    let g = p.geometry;
    if !g.constant_width() {
        return Err(Error::param("backward sweeps need a constant-width corridor"));
    }
    let dt = env.dt();
    let beta = env.beta();
    let n = p.spatial_points;
    let kern = StepKernel::new(g.width(0.0), n, dt, p.model, beta, p.series)?;
    let lower = g.lower(0.0);
    let (a, b) = window_range(window.0 - lower, window.1 - lower, kern.spacing(), n)
        .ok_or_else(|| Error::param("window contains no grid node; increase spatial_points"))?;
    let mut table = Vec::new();
    let mut scratch = vec![0.0; n];
    let kc = checkpoints.len();
    let mut out = vec![vec![f64::NAN; kc]; kc];
    for (ni, &nstep) in checkpoints.iter().enumerate() {
        let mut v = vec![0.0; n];
        v[a..=b].iter_mut().for_each(|x| *x = 1.0);
        let mut log_scale = 0.0;
        let mut mi = ni;
        out[ni][ni] = 0.0;
        for k in (0..nstep).rev() {
            let dw = env.values()[k + 1] - env.values()[k];
            let c = beta * dw / dt;
            kern.backward(c, &v, &mut scratch, &mut table);
            let max = scratch.iter().cloned().fold(0.0, f64::max);
            if !(max > 0.0) {
                for row in out.iter_mut().take(mi) {
                    row[ni] = f64::INFINITY;
                }
                break;
            }
            let inv = 1.0 / max;
            for (dst, &src) in v.iter_mut().zip(&scratch) {
                *dst = src * inv;
            }
            log_scale += max.ln();
            while mi > 0 && checkpoints[mi - 1] == k {
                mi -= 1;
                let min = v[a..=b].iter().cloned().fold(f64::INFINITY, f64::min);
                out[mi][ni] = -(log_scale + min.ln());
            }
        }
    }
    Ok(out)
}
