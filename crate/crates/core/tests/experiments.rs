use std::f64::consts::PI;

use corridor::experiments::{
    annealed_comparison, functional_corridor_run, small_deviation_run, tail_diagnostic, EnsembleSpec,
};
use corridor::quenched::{quenched_survival, x_bar, Boundary};
use corridor::{sample_environment, BandSpec, Corridor, TransferSettings};

const CLASSICAL: f64 = PI * PI / 2.0;

fn ens(n: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        settings: TransferSettings {
            spatial_points: 48,
            start_points: 5,
            ..TransferSettings::default()
        },
        ..EnsembleSpec::new(n, seed)
    }
}

fn unit() -> BandSpec {
    BandSpec::new(0.0, 1.0).unwrap()
}

#[test]
fn small_alpha_recovers_unscaled_rate() {
    let r = small_deviation_run(0.01, unit(), (0.5, 0.5), 0.0, &[5.0, 10.0, 20.0], &ens(1, 0), CLASSICAL).unwrap();
    assert!(r.relative_error < 0.05, "{r:?}");
}

#[test]
fn quarter_power_plateau_at_beta_zero() {
    let r = small_deviation_run(0.25, unit(), (0.5, 0.5), 0.0, &[1600.0, 4900.0, 10_000.0], &ens(1, 0), CLASSICAL).unwrap();
    assert!(r.relative_error < 0.05, "{r:?}");
}

#[test]
fn scaled_band_is_a_rescaled_unit_band() {
    // band t^α·(0,1) over [0, t] against (0,1) over [0, t^{1-2α}], same seed
    let alpha = 0.25;
    let t: f64 = 400.0;
    let s = ens(1, 0).settings;
    for beta in [0.0, 1.0] {
        let scale = t.powf(alpha);
        let scaled = Corridor::scaled(0.0, 1.0, alpha, (0.5, 0.5), (0.0, 1.0), beta).unwrap();
        let env = sample_environment(5, t, 1e-3 * scale * scale, beta).unwrap();
        let q_scaled = quenched_survival(&env, &scaled, 0.5 * scale, t, &s).unwrap().final_q();
        let short = t.powf(1.0 - 2.0 * alpha);
        let unit_env = sample_environment(5, short, 1e-3, beta).unwrap();
        let corridor = Corridor::band(unit(), beta).unwrap();
        let q_unit = quenched_survival(&unit_env, &corridor, 0.5, short, &s).unwrap().final_q();
        assert!(((q_scaled - q_unit) / q_unit).abs() < 1e-8, "beta {beta}: {q_scaled} vs {q_unit}");
    }
}

#[test]
fn constant_functional_corridor_reduces_to_band() {
    let r = functional_corridor_run(
        Boundary::constant(0.0),
        Boundary::constant(1.0),
        (0.5, 0.5),
        (0.0, 1.0),
        0.0,
        &[10.0],
        &ens(1, 0),
        CLASSICAL,
    )
    .unwrap();
    assert!((r.predicted_rate - CLASSICAL).abs() < 1e-9);
    let env = sample_environment(0, 10.0, 1e-3, 0.0).unwrap();
    let band = Corridor::band(unit(), 0.0).unwrap();
    let direct = x_bar(&env, &band, 10.0, &ens(1, 0).settings).unwrap().final_q() / 10.0;
    assert!((r.observed_rate - direct).abs() < 1e-9);
}

#[test]
fn widening_the_corridor_lowers_the_rate() {
    let run = |slope: f64| {
        functional_corridor_run(
            Boundary::constant(0.0),
            Boundary::linear(1.0, slope),
            (0.5, 0.5),
            (0.0, 1.0),
            1.0,
            &[5.0],
            &ens(4, 8),
            10.9,
        )
        .unwrap()
    };
    let (narrow, wide) = (run(0.2), run(0.5));
    for (a, b) in narrow.diagnostics.iter().zip(&wide.diagnostics) {
        assert!(b.value < a.value);
    }
    assert!(wide.predicted_rate < narrow.predicted_rate);
}

#[test]
fn crossing_boundaries_rejected() {
    let err = functional_corridor_run(
        Boundary::constant(0.0),
        Boundary::linear(1.0, -1.5),
        (0.5, 0.5),
        (-1.0, -0.4),
        0.0,
        &[5.0],
        &ens(1, 0),
        CLASSICAL,
    )
    .unwrap_err();
    assert!(err.to_string().contains("f(s) < g(s)"));
}

#[test]
fn annealed_identity_at_beta_zero_is_exact() {
    let r = annealed_comparison(BandSpec::new(-0.5, 0.5).unwrap(), 0.0, 3.0, &ens(4, 0)).unwrap();
    assert!(r.relative_error < 1e-6);
    assert!(r.jensen_gap.abs() < 1e-9);
    assert!(r.pass);
}

#[test]
fn annealed_jensen_gap_positive_with_noise() {
    let r = annealed_comparison(BandSpec::new(-0.5, 0.5).unwrap(), 1.0, 1.0, &ens(64, 4)).unwrap();
    assert!(r.jensen_gap > 0.0);
}

#[test]
fn tail_at_beta_zero_is_degenerate() {
    let corridor = Corridor::constant(-1.0, 1.0, (-0.5, 0.5), (-0.5, 0.5), 0.0).unwrap();
    let spec = EnsembleSpec { dt: 1e-2, ..ens(1000, 0) };
    let r = tail_diagnostic(2.0, &corridor, 1.5, &spec).unwrap();
    assert!(r.samples.iter().all(|&x| x == r.samples[0]));
    assert!(r.moments[0].stderr < 1e-12 * r.moments[0].value);
    for e in &r.exceedances {
        assert_eq!(e.product, if r.samples[0] >= e.threshold { e.n.powf(e.p) } else { 0.0 });
    }
    assert!(r.pass);
}

#[test]
fn tail_mean_is_well_resolved() {
    let corridor = Corridor::constant(-1.0, 1.0, (-0.5, 0.5), (-0.5, 0.5), 1.0).unwrap();
    let spec = EnsembleSpec {
        dt: 1e-2,
        settings: TransferSettings {
            spatial_points: 32,
            start_points: 3,
            ..TransferSettings::default()
        },
        ..EnsembleSpec::new(10_000, 1)
    };
    let r = tail_diagnostic(2.0, &corridor, 1.5, &spec).unwrap();
    let m = r.moments[0];
    assert!(m.value.is_finite() && m.stderr < 0.05 * m.value);
    assert!(r.moments.iter().all(|m| m.value.is_finite()));
}
