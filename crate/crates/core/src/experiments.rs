//! Scenario runners: small-deviation scaling, functional corridors, the
//! annealed identity and the tail diagnostic for `X̄_t`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::env::sample_environment;
use crate::error::{Error, Result};
use crate::kernels::{band_survival_fixed, BandSpec};
use crate::par;
use crate::quad::adaptive_simpson;
use crate::quenched::{quenched_survival, x_bar, Boundary, Corridor, TransferSettings};
use crate::seeds::{seed_schedule, TaskLabel};
use crate::stats::mean_sd;

/// One row of a scenario's time-grid diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub time: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub parameters: BTreeMap<String, String>,
    pub observed_rate: f64,
    pub observed_stderr: f64,
    pub predicted_rate: f64,
    pub relative_error: f64,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl ScenarioResult {
    fn new(
        scenario_id: &str,
        parameters: BTreeMap<String, String>,
        observed: (f64, f64),
        predicted_rate: f64,
        diagnostics: Vec<DiagnosticRow>,
    ) -> Self {
        ScenarioResult {
            scenario_id: scenario_id.to_string(),
            parameters,
            observed_rate: observed.0,
            observed_stderr: observed.1,
            predicted_rate,
            relative_error: (observed.0 - predicted_rate).abs() / predicted_rate.abs(),
            diagnostics,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# scenario {}\n", self.scenario_id);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(
            out,
            "# observed {:.16e} stderr {:.16e} predicted {:.16e} relative_error {:.16e}",
            self.observed_rate, self.observed_stderr, self.predicted_rate, self.relative_error
        );
        out.push_str("# t value stderr\n");
        for r in &self.diagnostics {
            let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", r.time, r.value, r.stderr);
        }
        out
    }
}

/// Shared ensemble inputs of the scenario runners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub settings: TransferSettings,
}

impl EnsembleSpec {
    pub fn new(ensemble_size: usize, master_seed: u64) -> Self {
        EnsembleSpec {
            ensemble_size,
            master_seed,
            dt: 1e-3,
            settings: TransferSettings::default(),
        }
    }

    fn seeds(&self, beta: f64) -> Result<Vec<u64>> {
        if self.ensemble_size == 0 {
            return Err(Error::param("ensemble_size must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt must be positive"));
        }
        self.settings.validate()?;
        let labels: Vec<TaskLabel> = (0..self.ensemble_size as u64).map(|r| TaskLabel::new(beta, r)).collect();
        seed_schedule(self.master_seed, &labels)
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let (m, sd) = mean_sd(values);
    let se = if values.len() > 1 { sd / (values.len() as f64).sqrt() } else { f64::INFINITY };
    (m, se)
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(format!("{what} must not be empty")));
    }
    if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::param(format!("{what} must be positive")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// `-ln p / t^{1-2α}` for corridors `[a t^α + βW, b t^α + βW]`, averaged over
/// the ensemble for each `t`; the observed rate is the average over the last
/// quarter of the grid.
///
/// Replica `r` uses one seed for every `t`, with env step `dt · t^{2α}`, so the
/// runs are Brownian rescalings of a single unit-width path.
pub fn small_deviation_run(
    alpha: f64,
    band: BandSpec,
    start_window: (f64, f64),
    beta: f64,
    t_grid: &[f64],
    ens: &EnsembleSpec,
    predicted_rate: f64,
) -> Result<ScenarioResult> {
    let corridor = Corridor::scaled(band.lower(), band.upper(), alpha, start_window, (band.lower(), band.upper()), beta)?;
    check_grid(t_grid, "t_grid")?;
    let seeds = ens.seeds(beta)?;
    let start_mid = 0.5 * (start_window.0 + start_window.1);
    let per_env = par::map(&seeds, |&seed| -> Result<Vec<f64>> {
        t_grid
            .iter()
            .map(|&t| {
                let scale = t.powf(alpha);
                let env = sample_environment(seed, t, ens.dt * scale * scale, beta)?;
                let curve = quenched_survival(&env, &corridor, start_mid * scale, t, &ens.settings)?;
                Ok(curve.final_q() / t.powf(1.0 - 2.0 * alpha))
            })
            .collect()
    });
    let per_env: Vec<Vec<f64>> = per_env.into_iter().collect::<Result<_>>()?;
    let diagnostics: Vec<DiagnosticRow> = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col: Vec<f64> = per_env.iter().map(|row| row[k]).collect();
            let (value, stderr) = mean_se(&col);
            DiagnosticRow { time: t, value, stderr }
        })
        .collect();
    let tail = (t_grid.len() / 4).max(1);
    let last: Vec<f64> = per_env
        .iter()
        .map(|row| row[row.len() - tail..].iter().sum::<f64>() / tail as f64)
        .collect();
    let mut params = BTreeMap::new();
    params.insert("alpha".into(), alpha.to_string());
    params.insert("band".into(), format!("({}, {})", band.lower(), band.upper()));
    params.insert("beta".into(), beta.to_string());
    params.insert("ensemble_size".into(), ens.ensemble_size.to_string());
    params.insert("master_seed".into(), ens.master_seed.to_string());
    params.insert("dt_unit".into(), ens.dt.to_string());
    Ok(ScenarioResult::new("small-dev", params, mean_se(&last), predicted_rate, diagnostics))
}

/// `∫₀¹ (g(s) - f(s))⁻² ds` to absolute tolerance `1e-8`.
pub fn inverse_square_width_integral(f: &Boundary, g: &Boundary) -> Result<f64> {
    adaptive_simpson(
        |s| {
            let w = g.eval(s) - f.eval(s);
            1.0 / (w * w)
        },
        0.0,
        1.0,
        1e-8,
    )
}

/// `-ln X̄_t / t` for corridors `[f(s/t) + βW_s, g(s/t) + βW_s]` over growing
/// `t`; the observed rate is the ensemble mean at the largest `t`. The
/// prediction is `gamma · ∫₀¹ (g - f)⁻² ds`, with `gamma` the unit-width rate.
#[allow(clippy::too_many_arguments)]
pub fn functional_corridor_run(
    f: Boundary,
    g: Boundary,
    start_window: (f64, f64),
    terminal_window: (f64, f64),
    beta: f64,
    horizons: &[f64],
    ens: &EnsembleSpec,
    gamma: f64,
) -> Result<ScenarioResult> {
    let f_name = f.describe();
    let g_name = g.describe();
    let corridor = Corridor::functional(f, g, start_window, terminal_window, beta)?;
    check_grid(horizons, "horizons")?;
    let seeds = ens.seeds(beta)?;
    let t_max = *horizons.last().unwrap();
    let per_env = par::map(&seeds, |&seed| -> Result<Vec<f64>> {
        let env = sample_environment(seed, t_max, ens.dt, beta)?;
        horizons
            .iter()
            .map(|&t| Ok(x_bar(&env, &corridor, t, &ens.settings)?.final_q() / t))
            .collect()
    });
    let per_env: Vec<Vec<f64>> = per_env.into_iter().collect::<Result<_>>()?;
    let diagnostics: Vec<DiagnosticRow> = horizons
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col: Vec<f64> = per_env.iter().map(|row| row[k]).collect();
            let (value, stderr) = mean_se(&col);
            DiagnosticRow { time: t, value, stderr }
        })
        .collect();
    let (fb, gb) = match corridor.shape() {
        crate::quenched::CorridorShape::Functional { f, g } => (f, g),
        _ => unreachable!(),
    };
    let integral = inverse_square_width_integral(fb, gb)?;
    let last = *diagnostics.last().unwrap();
    let mut params = BTreeMap::new();
    params.insert("f".into(), f_name);
    params.insert("g".into(), g_name);
    params.insert("beta".into(), beta.to_string());
    params.insert("gamma".into(), gamma.to_string());
    params.insert("integral".into(), format!("{integral:.12}"));
    params.insert("ensemble_size".into(), ens.ensemble_size.to_string());
    params.insert("master_seed".into(), ens.master_seed.to_string());
    params.insert("dt".into(), ens.dt.to_string());
    Ok(ScenarioResult::new(
        "functional",
        params,
        (last.value, last.stderr),
        gamma * integral,
        diagnostics,
    ))
}

/// Ensemble mean of quenched survival against the band survival of a
/// Brownian motion with variance `(1+β²)t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealedReport {
    pub beta: f64,
    pub t: f64,
    pub ensemble_size: usize,
    pub analytic: f64,
    /// Mean of `p_i`.
    pub mean_survival: f64,
    pub stderr: f64,
    /// `(mean - analytic) / stderr`.
    pub z_score: f64,
    pub relative_error: f64,
    /// Mean of `q_i = -ln p_i`.
    pub mean_q: f64,
    /// `mean_q + ln(mean p)`.
    pub jensen_gap: f64,
    pub pass: bool,
}

pub const ANNEALED_Z_LIMIT: f64 = 3.0;

/// Annealed comparison with the start at the band centre.
pub fn annealed_comparison(band: BandSpec, beta: f64, t: f64, ens: &EnsembleSpec) -> Result<AnnealedReport> {
    let corridor = Corridor::band(band, beta)?;
    let seeds = ens.seeds(beta)?;
    let center = band.center();
    let qs = par::map(&seeds, |&seed| -> Result<f64> {
        let env = sample_environment(seed, t, ens.dt, beta)?;
        Ok(quenched_survival(&env, &corridor, center, t, &ens.settings)?.final_q())
    });
    let qs: Vec<f64> = qs.into_iter().collect::<Result<_>>()?;
    let analytic = band_survival_fixed(center, band, (1.0 + beta * beta) * t, &ens.settings.series)?;
    // Work with p / analytic to stay well scaled when p is tiny.
    let ln_a = analytic.ln();
    let ratios: Vec<f64> = qs.iter().map(|q| (-q - ln_a).exp()).collect();
    let (mean_ratio, se_ratio) = mean_se(&ratios);
    let mean_q = qs.iter().sum::<f64>() / qs.len() as f64;
    let ln_mean_p = mean_ratio.ln() + ln_a;
    let z_score = if se_ratio > 0.0 {
        (mean_ratio - 1.0) / se_ratio
    } else if mean_ratio == 1.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let relative_error = (mean_ratio - 1.0).abs();
    let pass = if beta == 0.0 {
        relative_error < 1e-6
    } else {
        z_score.abs() <= ANNEALED_Z_LIMIT
    };
    Ok(AnnealedReport {
        beta,
        t,
        ensemble_size: ens.ensemble_size,
        analytic,
        mean_survival: mean_ratio * analytic,
        stderr: se_ratio * analytic,
        z_score,
        relative_error,
        mean_q,
        jensen_gap: mean_q + ln_mean_p,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub order: u32,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub n: f64,
    pub p: f64,
    pub threshold: f64,
    pub fraction: f64,
    /// `n^p · fraction`.
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t: f64,
    pub q_exponent: f64,
    pub ensemble_size: usize,
    pub samples: Vec<f64>,
    pub moments: Vec<Moment>,
    pub exceedances: Vec<Exceedance>,
    /// Per `p`: products decrease along `n`.
    pub pass: bool,
}

pub const TAIL_NS: [f64; 3] = [1e2, 1e3, 1e4];
pub const TAIL_PS: [f64; 2] = [1.0, 2.0];

/// Moments of orders 1..=4 with standard errors.
pub fn empirical_moments(samples: &[f64]) -> Vec<Moment> {
    (1..=4)
        .map(|j| {
            let powers: Vec<f64> = samples.iter().map(|x| x.powi(j as i32)).collect();
            let (value, stderr) = mean_se(&powers);
            Moment { order: j, value, stderr }
        })
        .collect()
}

/// Exceedance products `n^p · #{X ≥ (ln n)^q} / N` and the trend verdict:
/// a product must be strictly smaller than a positive predecessor and may
/// not grow from zero.
pub fn exceedance_products(samples: &[f64], q_exponent: f64, ns: &[f64], ps: &[f64]) -> (Vec<Exceedance>, bool) {
    let mut out = Vec::new();
    let mut pass = true;
    for &p in ps {
        let mut prev: Option<f64> = None;
        for &n in ns {
            let threshold = n.ln().powf(q_exponent);
            let fraction = samples.iter().filter(|&&x| x >= threshold).count() as f64 / samples.len() as f64;
            let product = n.powf(p) * fraction;
            if let Some(prev) = prev {
                pass &= if prev > 0.0 { product < prev } else { product <= prev };
            }
            prev = Some(product);
            out.push(Exceedance {
                n,
                p,
                threshold,
                fraction,
                product,
            });
        }
    }
    (out, pass)
}

/// Samples `X̄_t` over the ensemble and summarises its tail.
pub fn tail_diagnostic(t: f64, corridor: &Corridor, q_exponent: f64, ens: &EnsembleSpec) -> Result<TailReport> {
    if !(q_exponent > 1.0) {
        return Err(Error::param(format!("q_exponent must exceed 1, got {q_exponent}")));
    }
    if ens.ensemble_size < 1000 {
        return Err(Error::param(format!(
            "tail diagnostic needs ensemble_size >= 1000, got {}",
            ens.ensemble_size
        )));
    }
    let samples = tail_samples(t, corridor, ens)?;
    Ok(TailReport::from_samples(t, q_exponent, samples))
}

impl TailReport {
    pub fn from_samples(t: f64, q_exponent: f64, samples: Vec<f64>) -> Self {
        let (exceedances, pass) = exceedance_products(&samples, q_exponent, &TAIL_NS, &TAIL_PS);
        TailReport {
            t,
            q_exponent,
            ensemble_size: samples.len(),
            moments: empirical_moments(&samples),
            samples,
            exceedances,
            pass,
        }
    }
}

/// Change of one moment when the ensemble is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentChange {
    pub order: u32,
    pub half: f64,
    pub full: f64,
    /// Standard error of the full-ensemble estimate, which is also the
    /// standard deviation of `full - half` for nested ensembles.
    pub stderr: f64,
    pub stable: bool,
}

/// Compares moments of `samples[..len/2]` with those of all `samples`;
/// stable when every change is below three standard errors.
pub fn moment_doubling(samples: &[f64]) -> Vec<MomentChange> {
    let half = empirical_moments(&samples[..samples.len() / 2]);
    let full = empirical_moments(samples);
    half.iter()
        .zip(&full)
        .map(|(h, f)| MomentChange {
            order: f.order,
            half: h.value,
            full: f.value,
            stderr: f.stderr,
            stable: f.value.is_finite() && (f.value - h.value).abs() <= 3.0 * f.stderr,
        })
        .collect()
}

/// `X̄_t` for replicas `0..ensemble_size`; a larger ensemble extends a smaller one.
pub fn tail_samples(t: f64, corridor: &Corridor, ens: &EnsembleSpec) -> Result<Vec<f64>> {
    let beta = corridor.beta();
    let seeds = ens.seeds(beta)?;
    let xs = par::map(&seeds, |&seed| -> Result<f64> {
        let env = sample_environment(seed, t, ens.dt, beta)?;
        Ok(x_bar(&env, corridor, t, &ens.settings)?.final_q())
    });
    xs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_closed_form() {
        let v = inverse_square_width_integral(&Boundary::constant(0.0), &Boundary::linear(1.0, 0.5)).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
        let one = inverse_square_width_integral(&Boundary::constant(0.0), &Boundary::constant(1.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exceedance_trend_rule() {
        let samples = vec![1.0; 10];
        let (rows, pass) = exceedance_products(&samples, 1.5, &TAIL_NS, &TAIL_PS);
        assert!(pass);
        assert!(rows.iter().all(|r| r.product == 0.0));
        let heavy: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (_, pass) = exceedance_products(&heavy, 1.5, &TAIL_NS, &TAIL_PS);
        assert!(!pass);
    }

    #[test]
    fn moments_of_constant_sample() {
        let m = empirical_moments(&[2.0; 50]);
        assert_eq!(m[3].value, 16.0);
        assert_eq!(m[3].stderr, 0.0);
    }

    #[test]
    fn tail_requires_large_ensemble() {
        let corridor = Corridor::band(BandSpec::new(-1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(tail_diagnostic(2.0, &corridor, 1.5, &EnsembleSpec::new(999, 0)).is_err());
        assert!(tail_diagnostic(2.0, &corridor, 1.0, &EnsembleSpec::new(1000, 0)).is_err());
    }

    #[test]
    fn small_deviation_rejects_alpha() {
        let band = BandSpec::new(0.0, 1.0).unwrap();
        let err = small_deviation_run(0.5, band, (0.5, 0.5), 0.0, &[10.0], &EnsembleSpec::new(2, 0), 1.0).unwrap_err();
        assert!(err.to_string().contains("small-deviation"));
    }
}
