//! Decay-constant estimation and the structural checks on `γ(β)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::env::{sample_environment, EnvironmentPath};
use crate::error::{Error, Result};
use crate::kernels::BandSpec;
use crate::par;
use crate::quenched::{
    sweep_backward_inf, x_bar, x_under, Corridor, Geometry, SurvivalCurve, SweepParams, TransferSettings,
};
use crate::seeds::{seed_schedule, TaskLabel};
use crate::stats::{fit_line, mean_sd, t_interval_half_width};

const CONFIDENCE: f64 = 0.95;

/// Fitted decay constant of one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub beta: f64,
    pub width: f64,
    /// Ensemble-mean slope of `q_t` (units 1/time).
    pub gamma_over_l2: f64,
    /// `slope · width²`.
    pub gamma: f64,
    /// 95% Student-t bounds on `gamma`; infinite when undefined.
    pub ci_low: f64,
    pub ci_high: f64,
    pub fit_window: (f64, f64),
    pub n_environments: usize,
    /// Mean per-environment `r²`.
    pub r_squared: f64,
    /// Mean of `(q_{2τ} - q_τ)/τ` at `τ = t_max/2`, times `width²`.
    pub increment_gamma: f64,
    pub ci_defined: bool,
    pub low_quality: bool,
    /// Per-environment slopes (units 1/time).
    pub slopes: Vec<f64>,
}

impl RateEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

fn interpolate(curve: &SurvivalCurve, t: f64) -> Result<f64> {
    let times = &curve.times;
    if times.is_empty() || t < times[0] || t > *times.last().unwrap() + 1e-9 * t.abs() {
        return Err(Error::param(format!("time {t} lies outside the curve")));
    }
    let k = times.partition_point(|&s| s < t);
    if k < times.len() && (times[k] - t).abs() <= 1e-9 * t.abs().max(1e-12) {
        return Ok(curve.log_survival[k]);
    }
    if k == 0 || k >= times.len() {
        return Ok(curve.log_survival[k.min(times.len() - 1)]);
    }
    let f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    Ok(curve.log_survival[k - 1] * (1.0 - f) + curve.log_survival[k] * f)
}

/// Least-squares slope per curve over `fit_window`, aggregated across the
/// ensemble with a Student-t interval.
pub fn extract_rate(curves: &[SurvivalCurve], fit_window: (f64, f64), width: f64, beta: f64) -> Result<RateEstimate> {
    if curves.is_empty() {
        return Err(Error::param("extract_rate needs at least one curve"));
    }
    let (t_min, t_max) = fit_window;
    if !(t_min >= 1.0 && t_max > t_min) {
        return Err(Error::param(format!(
            "fit window must satisfy 1 <= t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if !(width > 0.0) {
        return Err(Error::param("width must be positive"));
    }
    let mut slopes = Vec::with_capacity(curves.len());
    let mut r2 = Vec::with_capacity(curves.len());
    let mut increments = Vec::with_capacity(curves.len());
    let tau = 0.5 * t_max;
    for (i, c) in curves.iter().enumerate() {
        if c.final_time() < t_max - 1e-9 * t_max {
            return Err(Error::param(format!(
                "curve {i} ends at {} before the fit window end {t_max}",
                c.final_time()
            )));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = c
            .times
            .iter()
            .zip(&c.log_survival)
            .filter(|(&t, _)| t >= t_min - 1e-9 * t_min && t <= t_max + 1e-9 * t_max)
            .map(|(&t, &q)| (t, q))
            .unzip();
        if y.iter().any(|q| !q.is_finite()) {
            return Err(Error::param(format!("curve {i} has non-finite q in the fit window")));
        }
        let fit = fit_line(&x, &y)
            .ok_or_else(|| Error::param(format!("curve {i} has fewer than two points in the fit window")))?;
        slopes.push(fit.slope);
        r2.push(fit.r_squared.clamp(0.0, 1.0));
        increments.push((interpolate(c, t_max)? - interpolate(c, tau)?) / tau);
    }
    let (mean, sd) = mean_sd(&slopes);
    let l2 = width * width;
    let half = t_interval_half_width(sd, slopes.len(), CONFIDENCE);
    let (ci_low, ci_high) = match half {
        Some(h) => ((mean - h) * l2, (mean + h) * l2),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let r_squared = r2.iter().sum::<f64>() / r2.len() as f64;
    Ok(RateEstimate {
        beta,
        width,
        gamma_over_l2: mean,
        gamma: mean * l2,
        ci_low,
        ci_high,
        fit_window,
        n_environments: curves.len(),
        r_squared,
        increment_gamma: mean_sd(&increments).0 * l2,
        ci_defined: half.is_some(),
        low_quality: r_squared < 0.99,
        slopes,
    })
}

/// Which start functional a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariant {
    InfStart,
    SupStart,
}

/// Inputs of [`gamma_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub ensemble_size: usize,
    pub horizon: f64,
    pub dt: f64,
    pub band: BandSpec,
    /// Defaults to the band centre.
    pub start_window: Option<(f64, f64)>,
    /// Defaults to the band.
    pub terminal_window: Option<(f64, f64)>,
    /// Defaults to `[horizon/4, horizon]`.
    pub fit_window: Option<(f64, f64)>,
    pub master_seed: u64,
    pub variant: SweepVariant,
    pub settings: TransferSettings,
}

impl SweepConfig {
    pub fn new(betas: Vec<f64>, ensemble_size: usize, horizon: f64, band: BandSpec, master_seed: u64) -> Self {
        SweepConfig {
            betas,
            ensemble_size,
            horizon,
            dt: 1e-3,
            band,
            start_window: None,
            terminal_window: None,
            fit_window: None,
            master_seed,
            variant: SweepVariant::InfStart,
            settings: TransferSettings::default(),
        }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.fit_window.unwrap_or((self.horizon / 4.0, self.horizon))
    }

    pub fn corridor(&self, beta: f64) -> Result<Corridor> {
        let c = self.band.center();
        Corridor::constant(
            self.band.lower(),
            self.band.upper(),
            self.start_window.unwrap_or((c, c)),
            self.terminal_window.unwrap_or((self.band.lower(), self.band.upper())),
            beta,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.ensemble_size < 8 {
            return Err(Error::param(format!(
                "ensemble_size must be at least 8, got {}",
                self.ensemble_size
            )));
        }
        if self.betas.is_empty() {
            return Err(Error::param("betas must not be empty"));
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("betas must be finite"));
        }
        if self.betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("betas must be strictly increasing"));
        }
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::param("horizon and dt must be positive"));
        }
        self.settings.validate()?;
        for &b in &self.betas {
            self.corridor(b)?;
        }
        Ok(())
    }
}

/// One evaluated environment of a sweep.
#[derive(Debug, Clone)]
pub struct SweepTask {
    pub label: TaskLabel,
    pub seed: u64,
    pub curve: SurvivalCurve,
}

/// Curves for every `(β, replica)` label, in label order.
pub fn sweep_curves(cfg: &SweepConfig) -> Result<Vec<SweepTask>> {
    cfg.validate()?;
    let labels: Vec<TaskLabel> = cfg
        .betas
        .iter()
        .flat_map(|&b| (0..cfg.ensemble_size as u64).map(move |r| TaskLabel::new(b, r)))
        .collect();
    let seeds = seed_schedule(cfg.master_seed, &labels)?;
    let tasks: Vec<(TaskLabel, u64)> = labels.into_iter().zip(seeds).collect();
    let results = par::map(&tasks, |&(label, seed)| -> Result<SweepTask> {
        let env = sample_environment(seed, cfg.horizon, cfg.dt, label.beta)?;
        let corridor = cfg.corridor(label.beta)?;
        let curve = match cfg.variant {
            SweepVariant::InfStart => x_bar(&env, &corridor, cfg.horizon, &cfg.settings)?,
            SweepVariant::SupStart => x_under(&env, &corridor, cfg.horizon, &cfg.settings)?,
        };
        Ok(SweepTask { label, seed, curve })
    });
    results.into_iter().collect()
}

/// Aggregates sweep curves into a [`GammaCurve`].
pub fn gamma_from_tasks(cfg: &SweepConfig, tasks: &[SweepTask]) -> Result<GammaCurve> {
    let mut estimates = Vec::with_capacity(cfg.betas.len());
    for &b in &cfg.betas {
        let curves: Vec<SurvivalCurve> = tasks
            .iter()
            .filter(|t| t.label.beta == b)
            .map(|t| t.curve.clone())
            .collect();
        estimates.push(extract_rate(&curves, cfg.fit_window(), cfg.band.width(), b)?);
    }
    Ok(GammaCurve {
        betas: cfg.betas.clone(),
        estimates,
        config: Some(cfg.clone()),
    })
}

/// `γ̂(β)` over a grid of `β`, one ensemble of `X̄` (or `X̲`) curves per `β`.
pub fn gamma_sweep(cfg: &SweepConfig) -> Result<GammaCurve> {
    let tasks = sweep_curves(cfg)?;
    gamma_from_tasks(cfg, &tasks)
}

/// `β ↦ γ̂(β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub betas: Vec<f64>,
    pub estimates: Vec<RateEstimate>,
    pub config: Option<SweepConfig>,
}

impl GammaCurve {
    pub fn from_estimates(estimates: Vec<RateEstimate>) -> Result<Self> {
        let betas: Vec<f64> = estimates.iter().map(|e| e.beta).collect();
        if betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("betas must be strictly increasing"));
        }
        Ok(GammaCurve {
            betas,
            estimates,
            config: None,
        })
    }

    pub fn get(&self, beta: f64) -> Option<&RateEstimate> {
        self.estimates.iter().find(|e| (e.beta - beta).abs() < 1e-12)
    }

    /// One record per line: `beta gamma ci_low ci_high r_squared n_env`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# beta gamma ci_low ci_high r_squared n_env\n");
        for e in &self.estimates {
            let _ = writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {}",
                e.beta, e.gamma, e.ci_low, e.ci_high, e.r_squared, e.n_environments
            );
        }
        out
    }
}

/// Verdict of one structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    /// No check failed; skipped and consistency-only checks do not count.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.verdict)
    }
}

/// Relative numerical slack added to CI slack in the bound checks; needed at
/// `β = 0`, where the ensemble CI is degenerate and the lower bound is attained.
pub const NUMERICAL_TOLERANCE: f64 = 5e-3;

fn pass_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn half(e: &RateEstimate) -> f64 {
    if e.ci_defined {
        e.half_width()
    } else {
        f64::INFINITY
    }
}

/// Checks (i) `γ(0) = π²/2`, (ii) `γ(β) ≥ π²(1+β²)/2`, (iii) `γ(1) ≤ 4π²`,
/// (iv) midpoint convexity, (v) monotonicity on `β ≥ 0`.
pub fn property_report(curve: &GammaCurve) -> PropertyReport {
    let mut checks = Vec::new();
    let target0 = PI * PI / 2.0;
    checks.push(match curve.get(0.0) {
        Some(e) => {
            let slack = half(e).min(1e300) + NUMERICAL_TOLERANCE * target0;
            PropertyCheck {
                name: "gamma0".into(),
                verdict: pass_fail((e.gamma - target0).abs() <= slack),
                detail: format!("gamma(0) = {:.6} +- {:.6}, expected {target0:.6}", e.gamma, half(e)),
            }
        }
        None => PropertyCheck {
            name: "gamma0".into(),
            verdict: Verdict::Skipped,
            detail: "beta = 0 not in sweep".into(),
        },
    });

    let mut lower_ok = true;
    let mut lower_detail = Vec::new();
    for e in &curve.estimates {
        let bound = PI * PI * (1.0 + e.beta * e.beta) / 2.0;
        let ok = e.ci_high >= bound * (1.0 - NUMERICAL_TOLERANCE);
        lower_ok &= ok;
        lower_detail.push(format!("beta {}: ci_high {:.4} vs {:.4}", e.beta, e.ci_high, bound));
    }
    checks.push(PropertyCheck {
        name: "lower_bound".into(),
        verdict: if curve.estimates.is_empty() { Verdict::Skipped } else { pass_fail(lower_ok) },
        detail: lower_detail.join("; "),
    });

    checks.push(match curve.get(1.0) {
        Some(e) => PropertyCheck {
            name: "upper_bound".into(),
            verdict: pass_fail(e.ci_low <= 4.0 * PI * PI * (1.0 + NUMERICAL_TOLERANCE)),
            detail: format!("gamma(1) ci_low {:.4} vs 4pi^2 = {:.4}", e.ci_low, 4.0 * PI * PI),
        },
        None => PropertyCheck {
            name: "upper_bound".into(),
            verdict: Verdict::Skipped,
            detail: "beta = 1 not in sweep".into(),
        },
    });

    let est = &curve.estimates;
    let mut triples = 0;
    let mut convex_ok = true;
    let mut convex_detail = Vec::new();
    for w in est.windows(3) {
        let mid = 0.5 * (w[0].beta + w[2].beta);
        if (w[1].beta - mid).abs() > 1e-9 * (1.0 + mid.abs()) {
            continue;
        }
        triples += 1;
        let slack = (half(&w[1]).powi(2) + 0.25 * (half(&w[0]).powi(2) + half(&w[2]).powi(2))).sqrt();
        let excess = w[1].gamma - 0.5 * (w[0].gamma + w[2].gamma);
        convex_ok &= excess <= slack;
        convex_detail.push(format!("beta {}: excess {:.4} slack {:.4}", w[1].beta, excess, slack));
    }
    checks.push(PropertyCheck {
        name: "convexity".into(),
        verdict: if triples == 0 { Verdict::Skipped } else { pass_fail(convex_ok) },
        detail: convex_detail.join("; "),
    });

    let nonneg: Vec<&RateEstimate> = est.iter().filter(|e| e.beta >= 0.0).collect();
    checks.push(if nonneg.len() < 2 {
        PropertyCheck {
            name: "monotonicity".into(),
            verdict: Verdict::Skipped,
            detail: "fewer than two beta >= 0".into(),
        }
    } else {
        let ok = nonneg.windows(2).all(|w| w[1].gamma > w[0].gamma);
        PropertyCheck {
            name: "monotonicity".into(),
            verdict: if ok { Verdict::Consistent } else { Verdict::Inconsistent },
            detail: nonneg
                .iter()
                .map(|e| format!("{}:{:.4}", e.beta, e.gamma))
                .collect::<Vec<_>>()
                .join(" "),
        }
    });
    PropertyReport { checks }
}

/// One `(m, n)` pair of the subadditivity audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditPair {
    pub m: f64,
    pub n: f64,
    pub q_0m: f64,
    pub q_mn: f64,
    pub q_0n: f64,
    /// `q_{0,n} - q_{0,m} - q_{m,n}`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub pairs: Vec<AuditPair>,
    pub max_violation: f64,
    pub pass: bool,
}

/// Tolerance on subadditivity violations.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

/// Checks `q_{0,n} ≤ q_{0,m} + q_{m,n}` for every pair of checkpoints, where
/// `q_{m,n}` is the worst-start survival over the window from time `m` to
/// `n` in the shifted environment. Start and terminal windows must coincide.
pub fn subadditivity_audit(
    env: &EnvironmentPath,
    corridor: &Corridor,
    checkpoints: &[f64],
    settings: &TransferSettings,
) -> Result<AuditReport> {
    settings.validate()?;
    if corridor.start_window() != corridor.terminal_window() {
        return Err(Error::param(
            "subadditivity audit needs the inf-start variant with start window equal to terminal window",
        ));
    }
    if corridor.constant_band().is_none() {
        return Err(Error::param("subadditivity audit needs a constant corridor"));
    }
    if env.beta() != corridor.beta() {
        return Err(Error::param("corridor beta does not match environment beta"));
    }
    let mut times = vec![0.0];
    times.extend_from_slice(checkpoints);
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints must be positive and strictly increasing"));
    }
    let steps: Vec<usize> = times
        .iter()
        .map(|&t| {
            env.index_of(t)
                .ok_or_else(|| Error::param(format!("checkpoint {t} is not on the environment grid")))
        })
        .collect::<Result<_>>()?;
    let last = *times.last().unwrap();
    let geometry = Geometry::resolve(corridor, last);
    let params = SweepParams {
        env,
        geometry: &geometry,
        steps: *steps.last().unwrap(),
        spatial_points: settings.spatial_points,
        model: settings.model,
        series: settings.series,
        output_stride: 1,
        window_everywhere: true,
        window: Some(corridor.terminal_window()),
    };
    let q = sweep_backward_inf(&params, corridor.terminal_window(), &steps)?;
    let mut pairs = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for n in 1..times.len() {
        for m in 1..n {
            let (q_0m, q_mn, q_0n) = (q[0][m], q[m][n], q[0][n]);
            let violation = q_0n - q_0m - q_mn;
            max_violation = max_violation.max(violation);
            pairs.push(AuditPair {
                m: times[m],
                n: times[n],
                q_0m,
                q_mn,
                q_0n,
                violation,
            });
        }
    }
    if pairs.is_empty() {
        max_violation = 0.0;
    }
    Ok(AuditReport {
        pass: max_violation <= AUDIT_TOLERANCE,
        pairs,
        max_violation,
    })
}

/// `q_{m,n}` for consecutive checkpoints and `q_{0,n}` for all, from one audit.
pub fn audit_increments(report: &AuditReport) -> Vec<(f64, f64, f64)> {
    report.pairs.iter().map(|p| (p.m, p.n, p.q_mn)).collect()
}

/// Inputs of [`width_scaling_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthScalingConfig {
    pub widths: Vec<f64>,
    pub beta: f64,
    pub ensemble_size: usize,
    /// Horizon for unit width; width `L` runs to `L² · horizon_unit`.
    pub horizon_unit: f64,
    pub dt: f64,
    pub master_seed: u64,
    pub settings: TransferSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthScalingReport {
    pub estimates: Vec<RateEstimate>,
    /// Largest `|γ_i - γ_j| / sqrt(h_i² + h_j²)` over pairs.
    pub max_pair_z: f64,
    /// Largest relative spread `max|γ_i - γ_j| / mean γ`.
    pub max_relative_spread: f64,
    pub pass: bool,
}

/// Estimates `slope(L) · L²` for each width with matched seeds: replica `r`
/// uses the same environment path for every width, on the same time grid.
pub fn width_scaling_check(cfg: &WidthScalingConfig) -> Result<WidthScalingReport> {
    if cfg.widths.len() < 2 {
        return Err(Error::param("width scaling needs at least two widths"));
    }
    if cfg.widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::param("widths must be positive"));
    }
    let mut estimates = Vec::new();
    for &w in &cfg.widths {
        let band = BandSpec::new(0.0, w)?;
        let mut sweep = SweepConfig::new(vec![cfg.beta], cfg.ensemble_size, cfg.horizon_unit * w * w, band, cfg.master_seed);
        sweep.dt = cfg.dt;
        sweep.settings = cfg.settings;
        let curve = gamma_sweep(&sweep)?;
        estimates.push(curve.estimates.into_iter().next().unwrap());
    }
    let mut max_pair_z: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            let d = (estimates[i].gamma - estimates[j].gamma).abs();
            max_diff = max_diff.max(d);
            let s = (half(&estimates[i]).powi(2) + half(&estimates[j]).powi(2)).sqrt();
            let z = if s > 0.0 { d / s } else if d == 0.0 { 0.0 } else { f64::INFINITY };
            max_pair_z = max_pair_z.max(z);
        }
    }
    let mean = estimates.iter().map(|e| e.gamma).sum::<f64>() / estimates.len() as f64;
    Ok(WidthScalingReport {
        pass: max_pair_z <= 1.0,
        max_relative_spread: max_diff / mean,
        max_pair_z,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{log_band_survival_fixed, SeriesConfig};
    use crate::quenched::Variant;

    fn synthetic(times: Vec<f64>, q: Vec<f64>) -> SurvivalCurve {
        SurvivalCurve {
            times,
            log_survival: q,
            stderr: None,
            variant: Variant::InfStart,
            corridor_id: String::new(),
            env_seed: 0,
            end_of_data: None,
        }
    }

    #[test]
    fn analytic_curve_gives_classical_rate() {
        let band = BandSpec::new(0.0, 1.0).unwrap();
        let times: Vec<f64> = (0..=80).map(|k| k as f64 * 0.25).collect();
        let q = times
            .iter()
            .map(|&t| if t == 0.0 { 0.0 } else { -log_band_survival_fixed(0.5, band, t, &SeriesConfig::default()).unwrap() })
            .collect();
        let est = extract_rate(&[synthetic(times, q)], (5.0, 20.0), 1.0, 0.0).unwrap();
        assert!((est.gamma - PI * PI / 2.0).abs() / (PI * PI / 2.0) < 5e-3);
        assert!(!est.ci_defined);
        assert!(est.ci_low <= est.gamma && est.gamma <= est.ci_high);
    }

    #[test]
    fn synthetic_linear_plus_sine() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.1).collect();
        let q = times.iter().map(|&t| 3.0 * t + t.sin()).collect();
        let est = extract_rate(&[synthetic(times, q)], (10.0, 100.0), 1.0, 0.0).unwrap();
        assert!((est.gamma_over_l2 - 3.0).abs() < 0.05);
    }

    #[test]
    fn fit_window_validated() {
        let c = synthetic(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]);
        assert!(extract_rate(std::slice::from_ref(&c), (0.5, 2.0), 1.0, 0.0).is_err());
        assert!(extract_rate(std::slice::from_ref(&c), (1.0, 3.0), 1.0, 0.0).is_err());
        assert!(extract_rate(&[], (1.0, 2.0), 1.0, 0.0).is_err());
    }

    fn estimate(beta: f64, gamma: f64, half: f64) -> RateEstimate {
        RateEstimate {
            beta,
            width: 1.0,
            gamma_over_l2: gamma,
            gamma,
            ci_low: gamma - half,
            ci_high: gamma + half,
            fit_window: (1.0, 2.0),
            n_environments: 8,
            r_squared: 1.0,
            increment_gamma: gamma,
            ci_defined: true,
            low_quality: false,
            slopes: vec![],
        }
    }

    #[test]
    fn report_skips_missing_points() {
        let curve = GammaCurve::from_estimates(vec![estimate(0.0, PI * PI / 2.0, 0.0)]).unwrap();
        let r = property_report(&curve);
        assert_eq!(r.verdict("gamma0"), Some(Verdict::Pass));
        assert_eq!(r.verdict("upper_bound"), Some(Verdict::Skipped));
        assert_eq!(r.verdict("convexity"), Some(Verdict::Skipped));
        assert_eq!(r.verdict("monotonicity"), Some(Verdict::Skipped));
        assert!(r.passed());
    }

    #[test]
    fn report_flags_violations() {
        let curve = GammaCurve::from_estimates(vec![
            estimate(0.0, PI * PI / 2.0, 0.01),
            estimate(0.5, 9.0, 0.01),
            estimate(1.0, 9.5, 0.01),
        ])
        .unwrap();
        let r = property_report(&curve);
        assert_eq!(r.verdict("lower_bound"), Some(Verdict::Fail));
        assert_eq!(r.verdict("convexity"), Some(Verdict::Fail));
        assert_eq!(r.verdict("monotonicity"), Some(Verdict::Consistent));
        assert!(!r.passed());
    }

    #[test]
    fn text_format_has_one_record_per_beta() {
        let curve = GammaCurve::from_estimates(vec![estimate(0.0, 4.9, 0.1), estimate(1.0, 11.0, 0.5)]).unwrap();
        assert_eq!(curve.to_text().lines().count(), 3);
        assert!(GammaCurve::from_estimates(vec![estimate(1.0, 1.0, 0.1), estimate(0.0, 1.0, 0.1)]).is_err());
    }
}
