use corridor::kernels::log_band_survival_fixed;
use corridor::quenched::{
    particle_splitting_survival, quenched_survival, x_bar, x_under, SplittingConfig, SubstepModel,
};
use corridor::stats::{f_test_p_value, mean_sd};
use corridor::{refine_environment, sample_environment, BandSpec, Corridor, SeriesConfig, TransferSettings};
use proptest::prelude::*;

fn settings(n: usize) -> TransferSettings {
    TransferSettings {
        spatial_points: n,
        output_interval: 0.5,
        ..TransferSettings::default()
    }
}

fn analytic_q(x: f64, t: f64) -> f64 {
    -log_band_survival_fixed(x, BandSpec::new(0.0, 1.0).unwrap(), t, &SeriesConfig::default()).unwrap()
}

#[test]
fn transfer_agrees_with_splitting_at_beta_one() {
    let env = sample_environment(2024, 2.0, 1e-3, 1.0).unwrap();
    let corridor = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), 1.0).unwrap();
    let a = quenched_survival(&env, &corridor, 0.5, 2.0, &settings(96)).unwrap();
    let cfg = SplittingConfig {
        output_interval: 0.5,
        ..SplittingConfig::default()
    };
    let b = particle_splitting_survival(&env, &corridor, 0.5, 2.0, &cfg).unwrap();
    let se = b.stderr.as_ref().unwrap();
    for (k, &t) in b.times.iter().enumerate().skip(1) {
        let qa = a.q_at(t).unwrap();
        assert!((qa - b.log_survival[k]).abs() < 3.0 * se[k], "t {t}: {qa} vs {} +- {}", b.log_survival[k], se[k]);
    }
}

#[test]
fn refinement_moves_q_by_less_than_half_a_percent() {
    let env = sample_environment(8, 5.0, 1e-3, 1.0).unwrap();
    let fine = refine_environment(&env, 2).unwrap();
    let corridor = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), 1.0).unwrap();
    let coarse_q = quenched_survival(&env, &corridor, 0.5, 5.0, &settings(64)).unwrap().final_q();
    let fine_q = quenched_survival(&fine, &corridor, 0.5, 5.0, &settings(128)).unwrap().final_q();
    assert!(((coarse_q - fine_q) / fine_q).abs() < 5e-3, "{coarse_q} vs {fine_q}");
}

#[test]
fn x_bar_with_point_window_is_pointwise() {
    let env = sample_environment(4, 3.0, 1e-3, 0.7).unwrap();
    let corridor = Corridor::constant(0.0, 1.0, (0.4, 0.4), (0.0, 1.0), 0.7).unwrap();
    let a = x_bar(&env, &corridor, 3.0, &settings(64)).unwrap();
    let b = quenched_survival(&env, &corridor, 0.4, 3.0, &settings(64)).unwrap();
    assert_eq!(a.log_survival, b.log_survival);
}

#[test]
fn beta_zero_extremes_are_analytic() {
    let env = sample_environment(1, 6.0, 1e-2, 0.0).unwrap();
    let corridor = Corridor::constant(0.0, 1.0, (0.2, 0.8), (0.0, 1.0), 0.0).unwrap();
    let s = settings(64);
    let over = x_bar(&env, &corridor, 6.0, &s).unwrap();
    let under = x_under(&env, &corridor, 6.0, &s).unwrap();
    for (k, &t) in over.times.iter().enumerate().skip(1) {
        assert!((over.log_survival[k] - analytic_q(0.2, t)).abs() < 1e-6);
        assert!((under.log_survival[k] - analytic_q(0.5, t)).abs() < 1e-6);
    }
}

#[test]
fn gap_between_extremes_is_sublinear() {
    let env = sample_environment(77, 20.0, 1e-3, 1.0).unwrap();
    let corridor = Corridor::constant(0.0, 1.0, (0.25, 0.75), (0.25, 0.75), 1.0).unwrap();
    let s = settings(64);
    let over = x_bar(&env, &corridor, 20.0, &s).unwrap();
    let under = x_under(&env, &corridor, 20.0, &s).unwrap();
    let gap = |t: f64| (over.q_at(t).unwrap() - under.q_at(t).unwrap()) / t;
    assert!(gap(20.0) * 2.0 <= gap(5.0), "gap(5) {} gap(20) {}", gap(5.0), gap(20.0));
}

#[test]
fn splitting_matches_analytic_at_beta_zero() {
    let env = sample_environment(0, 3.0, 1e-3, 0.0).unwrap();
    let corridor = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), 0.0).unwrap();
    let c = particle_splitting_survival(&env, &corridor, 0.5, 3.0, &SplittingConfig::default()).unwrap();
    let se = *c.stderr.as_ref().unwrap().last().unwrap();
    assert!((c.final_q() - analytic_q(0.5, 3.0)).abs() < 3.0 * se);
}

#[test]
fn thinning_reduces_coarse_step_bias() {
    let env = sample_environment(0, 2.0, 0.05, 0.0).unwrap();
    let corridor = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), 0.0).unwrap();
    let exact = analytic_q(0.5, 2.0);
    let run = |thin: bool| {
        let cfg = SplittingConfig {
            bridge_thinning: thin,
            model: SubstepModel::Linear,
            ..SplittingConfig::default()
        };
        particle_splitting_survival(&env, &corridor, 0.5, 2.0, &cfg).unwrap().final_q()
    };
    assert!((run(true) - exact).abs() < (run(false) - exact).abs());
}

#[test]
fn doubling_particles_halves_variance() {
    let env = sample_environment(3, 1.0, 1e-2, 1.0).unwrap();
    let corridor = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), 1.0).unwrap();
    let replicas = |n: usize, offset: u64| -> Vec<f64> {
        (0..40)
            .map(|r| {
                let cfg = SplittingConfig {
                    n_particles: n,
                    seed: offset + r,
                    ..SplittingConfig::default()
                };
                particle_splitting_survival(&env, &corridor, 0.5, 1.0, &cfg).unwrap().final_q()
            })
            .collect()
    };
    let (_, sd_small) = mean_sd(&replicas(500, 0));
    let (_, sd_large) = mean_sd(&replicas(1000, 1000));
    let p = f_test_p_value(sd_small * sd_small / 2.0, 40, sd_large * sd_large, 40);
    assert!(p > 0.05, "p = {p}");
}

#[test]
fn more_start_points_refine_the_infimum() {
    let env = sample_environment(12, 4.0, 1e-3, 1.0).unwrap();
    let corridor = Corridor::constant(0.0, 1.0, (0.1, 0.9), (0.0, 1.0), 1.0).unwrap();
    let coarse = x_bar(&env, &corridor, 4.0, &TransferSettings { start_points: 17, ..settings(64) }).unwrap();
    let fine = x_bar(&env, &corridor, 4.0, &TransferSettings { start_points: 33, ..settings(64) }).unwrap();
    let (a, b) = (coarse.final_q(), fine.final_q());
    assert!(b >= a - 1e-12);
    assert!((b - a) / b < 1e-3, "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nested_corridor_invariants(seed in any::<u64>(), beta in -1.5f64..1.5, shift in -3.0f64..3.0) {
        let env = sample_environment(seed, 1.0, 1e-2, beta).unwrap();
        let s = settings(48);
        let narrow = Corridor::band(BandSpec::new(0.0, 1.0).unwrap(), beta).unwrap();
        let wide = Corridor::constant(-0.2, 1.1, (0.5, 0.5), (-0.2, 1.1), beta).unwrap();
        let qn = quenched_survival(&env, &narrow, 0.5, 1.0, &s).unwrap();
        let qw = quenched_survival(&env, &wide, 0.5, 1.0, &s).unwrap();
        for (a, b) in qn.log_survival.iter().zip(&qw.log_survival) {
            prop_assert!(b <= &(a + 1e-9));
        }
        prop_assert!(qn.log_survival.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert_eq!(qn.log_survival[0], 0.0);

        let moved = narrow.shifted(shift).unwrap();
        let qs = quenched_survival(&env, &moved, 0.5 + shift, 1.0, &s).unwrap();
        for (a, b) in qn.log_survival.iter().zip(&qs.log_survival) {
            prop_assert!((a - b).abs() < 1e-9);
        }

        let window = Corridor::constant(0.0, 1.0, (0.3, 0.7), (0.0, 1.0), beta).unwrap();
        let over = x_bar(&env, &window, 1.0, &TransferSettings { start_points: 5, ..s }).unwrap();
        let under = x_under(&env, &window, 1.0, &TransferSettings { start_points: 5, ..s }).unwrap();
        let mid = quenched_survival(&env, &window, 0.5, 1.0, &s).unwrap();
        for k in 0..over.len() {
            prop_assert!(over.log_survival[k] >= mid.log_survival[k] - 1e-12);
            prop_assert!(under.log_survival[k] <= over.log_survival[k] + 1e-12);
        }
    }
}
