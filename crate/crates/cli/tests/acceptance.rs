//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured) and then asserts. Tests hold a global lock so the timed
//! criteria are measured without contention.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use corridor::experiments::{
    annealed_comparison, functional_corridor_run, moment_doubling, small_deviation_run, tail_samples,
    EnsembleSpec, TailReport,
};
use corridor::quenched::{particle_splitting_survival, quenched_survival, Boundary, SplittingConfig};
use corridor::rates::{
    gamma_sweep, property_report, subadditivity_audit, GammaCurve, RateEstimate, SweepConfig, Verdict,
    WidthScalingConfig,
};
use corridor::seeds::{seed_schedule, TaskLabel};
use corridor::{par, sample_environment, BandSpec, Corridor, TransferSettings};

const SEED: u64 = 1;
const CLASSICAL: f64 = PI * PI / 2.0;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} [{verdict}] {name}: {detail}");
}

fn unit_band() -> BandSpec {
    BandSpec::new(0.0, 1.0).unwrap()
}

fn settings() -> TransferSettings {
    TransferSettings {
        spatial_points: 96,
        start_points: 9,
        ..TransferSettings::default()
    }
}

fn sweep_config(betas: Vec<f64>, ensemble: usize, seed: u64) -> SweepConfig {
    let mut cfg = SweepConfig::new(betas, ensemble, 20.0, unit_band(), seed);
    cfg.settings = settings();
    cfg
}

/// `β ∈ {0, ±0.25, ±0.5, ±0.75, ±1}`, 32 environments each, mirrored seeds.
fn main_sweep() -> &'static GammaCurve {
    static SWEEP: OnceLock<GammaCurve> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let betas = vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0];
        gamma_sweep(&sweep_config(betas, 32, SEED)).unwrap()
    })
}

fn est(curve: &GammaCurve, beta: f64) -> &RateEstimate {
    curve.get(beta).unwrap()
}

/// Survival from `x` in `(0, 1)` up to time `t`, summed from the sine series
/// of the heat kernel with Dirichlet edges.
fn eigenseries_survival(x: f64, t: f64) -> f64 {
    let mut p = 0.0;
    for n in (1..400).step_by(2) {
        let k = n as f64 * PI;
        p += 4.0 / k * (k * x).sin() * (-k * k * t / 2.0).exp();
    }
    p
}

#[test]
fn c01_classical_rate() {
    let _g = serial();
    let start = Instant::now();
    let curve = par::with_workers(1, || {
        let mut cfg = SweepConfig::new(vec![0.0], 8, 20.0, unit_band(), SEED);
        cfg.settings = TransferSettings::default();
        gamma_sweep(&cfg).unwrap()
    });
    let secs = start.elapsed().as_secs_f64();
    let g = est(&curve, 0.0).gamma;
    let rel = (g - CLASSICAL).abs() / CLASSICAL;

    let env = sample_environment(SEED, 5.0, 1e-3, 0.0).unwrap();
    let corridor = Corridor::band(unit_band(), 0.0).unwrap();
    let mut max_oracle: f64 = 0.0;
    for x in [0.5, 0.2] {
        let c = quenched_survival(&env, &corridor, x, 5.0, &TransferSettings::default()).unwrap();
        for (&t, &q) in c.times.iter().zip(&c.log_survival).skip(1) {
            let p = eigenseries_survival(x, t);
            max_oracle = max_oracle.max(((-q).exp() - p).abs() / p);
        }
    }
    let pass = rel < 5e-3 && secs < 60.0 && max_oracle < 1e-6;
    report(
        1,
        "classical rate",
        pass,
        &format!(
            "gamma(0) = {g:.6} vs pi^2/2 = {CLASSICAL:.6} (rel {rel:.2e}), {secs:.1} s on one worker, \
             eigenseries max rel dev {max_oracle:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn c02_lower_bound() {
    let _g = serial();
    let start = Instant::now();
    let curve = main_sweep();
    let mut pass = true;
    let mut parts = Vec::new();
    for beta in [0.25, 0.5, 1.0] {
        let e = est(curve, beta);
        let bound = CLASSICAL * (1.0 + beta * beta) * 0.97;
        pass &= e.ci_defined && e.ci_low > bound && e.n_environments >= 32;
        parts.push(format!("beta {beta}: CI [{:.3}, {:.3}] vs {bound:.3}", e.ci_low, e.ci_high));
    }
    report(
        2,
        "lower bound",
        pass,
        &format!("{} (sweep {:.0} s)", parts.join("; "), start.elapsed().as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn c03_upper_bound() {
    let _g = serial();
    let e = est(main_sweep(), 1.0);
    let pass = e.ci_defined && e.ci_high < 4.0 * PI * PI;
    report(
        3,
        "upper bound at beta = 1",
        pass,
        &format!("gamma(1) = {:.3}, CI high {:.3} < 4 pi^2 = {:.3}", e.gamma, e.ci_high, 4.0 * PI * PI),
    );
    assert!(pass);
}

#[test]
fn c04_evenness() {
    let _g = serial();
    let mirrored = main_sweep();
    let negatives = vec![-1.0, -0.75, -0.5, -0.25];
    let independent = gamma_sweep(&sweep_config(negatives.clone(), 32, SEED + 1000)).unwrap();
    let mut max_mirror: f64 = 0.0;
    let mut overlap = true;
    let mut worst_gap = f64::NEG_INFINITY;
    for &b in &negatives {
        let (pos, neg) = (est(mirrored, -b), est(mirrored, b));
        max_mirror = max_mirror.max((pos.gamma - neg.gamma).abs());
        let ind = est(&independent, b);
        let gap = (pos.gamma - ind.gamma).abs() - (pos.half_width() + ind.half_width());
        worst_gap = worst_gap.max(gap);
        overlap &= gap <= 0.0;
    }
    let pass = max_mirror <= 1e-9 && overlap;
    report(
        4,
        "evenness",
        pass,
        &format!(
            "mirrored max |gamma(b) - gamma(-b)| = {max_mirror:.1e}; independent seeds: \
             worst |diff| - (h1 + h2) = {worst_gap:.3}"
        ),
    );
    assert!(pass);
}

#[test]
fn c05_monotone_and_convex() {
    let _g = serial();
    let all = main_sweep();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let curve = GammaCurve::from_estimates(grid.iter().map(|&b| est(all, b).clone()).collect()).unwrap();
    let points: Vec<f64> = curve.estimates.iter().map(|e| e.gamma).collect();
    let increasing = points.windows(2).all(|w| w[0] < w[1]);
    let rep = property_report(&curve);
    let convex = rep.verdict("convexity") == Some(Verdict::Pass);
    let pass = increasing && convex;
    let shown: Vec<String> = points.iter().map(|g| format!("{g:.3}")).collect();
    report(
        5,
        "monotonicity and midpoint convexity",
        pass,
        &format!("gamma over beta 0..1 step 0.25 = [{}], convexity {:?}", shown.join(", "), rep.verdict("convexity")),
    );
    assert!(pass);
}

#[test]
fn c06_width_scaling() {
    let _g = serial();
    let base = WidthScalingConfig {
        widths: vec![0.5, 1.0, 2.0],
        beta: 0.0,
        ensemble_size: 8,
        horizon_unit: 16.0,
        dt: 1e-3,
        master_seed: SEED,
        settings: TransferSettings {
            spatial_points: 64,
            ..settings()
        },
    };
    let zero = corridor::rates::width_scaling_check(&base).unwrap();
    let one = corridor::rates::width_scaling_check(&WidthScalingConfig {
        beta: 1.0,
        ensemble_size: 16,
        ..base.clone()
    })
    .unwrap();
    let pass = zero.max_relative_spread <= 0.03 && one.pass;
    let fmt = |r: &corridor::rates::WidthScalingReport| {
        r.estimates.iter().map(|e| format!("{:.3}", e.gamma)).collect::<Vec<_>>().join(", ")
    };
    report(
        6,
        "width scaling",
        pass,
        &format!(
            "beta 0: [{}] spread {:.2e}; beta 1: [{}] max pair z {:.2}",
            fmt(&zero),
            zero.max_relative_spread,
            fmt(&one),
            one.max_pair_z
        ),
    );
    assert!(pass);
}

#[test]
fn c07_subadditivity() {
    let _g = serial();
    let corridor = Corridor::constant(0.0, 1.0, (0.25, 0.75), (0.25, 0.75), 1.0).unwrap();
    let checkpoints: Vec<f64> = (1..=10).map(f64::from).collect();
    let labels: Vec<TaskLabel> = (0..20).map(|r| TaskLabel::new(1.0, r)).collect();
    let seeds = seed_schedule(SEED, &labels).unwrap();
    let reports: Vec<_> = par::map(&seeds, |&seed| {
        let env = sample_environment(seed, 10.0, 1e-3, 1.0).unwrap();
        subadditivity_audit(&env, &corridor, &checkpoints, &settings()).unwrap()
    });
    let pairs: usize = reports.iter().map(|r| r.pairs.len()).sum();
    let violations = reports
        .iter()
        .flat_map(|r| &r.pairs)
        .filter(|p| p.violation > 1e-6)
        .count();
    let worst = reports.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
    let pass = pairs == 20 * 45 && violations == 0;
    report(
        7,
        "subadditivity audit",
        pass,
        &format!("{pairs} pairs over 20 environments, {violations} violations, max violation {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c08_oracle_equivalence() {
    let _g = serial();
    let mut tasks = Vec::new();
    for beta in [0.0, 0.5, 1.0] {
        for r in 0..10u64 {
            tasks.push((beta, r));
        }
    }
    let z: Vec<f64> = par::map(&tasks, |&(beta, r)| {
        let seed = corridor::seeds::task_seed(SEED, TaskLabel::new(beta, r));
        let env = sample_environment(seed, 3.0, 1e-3, beta).unwrap();
        let corridor = Corridor::band(unit_band(), beta).unwrap();
        let s = TransferSettings {
            output_interval: 0.5,
            ..settings()
        };
        let a = quenched_survival(&env, &corridor, 0.5, 3.0, &s).unwrap().final_q();
        let cfg = SplittingConfig {
            seed: r,
            output_interval: 0.5,
            ..SplittingConfig::default()
        };
        let b = particle_splitting_survival(&env, &corridor, 0.5, 3.0, &cfg).unwrap();
        let se = *b.stderr.as_ref().unwrap().last().unwrap();
        (a - b.final_q()).abs() / se
    });
    let worst = z.iter().cloned().fold(0.0, f64::max);
    let pass = z.len() == 30 && worst <= 3.0;
    report(
        8,
        "transfer operator vs particle splitting",
        pass,
        &format!("30 environments at t = 3, worst |diff| / se = {worst:.2}"),
    );
    assert!(pass);
}

#[test]
fn c09_annealed_identity() {
    let _g = serial();
    let ens = EnsembleSpec {
        settings: settings(),
        ..EnsembleSpec::new(500, SEED)
    };
    let r = annealed_comparison(BandSpec::new(-0.5, 0.5).unwrap(), 1.0, 3.0, &ens).unwrap();
    let pass = r.z_score.abs() <= 3.0 && r.jensen_gap > 0.0;
    report(
        9,
        "annealed identity",
        pass,
        &format!(
            "mean p {:.4e} +- {:.2e} vs analytic {:.4e} (z {:.2}), Jensen gap {:.3}",
            r.mean_survival, r.stderr, r.analytic, r.z_score, r.jensen_gap
        ),
    );
    assert!(pass);
}

#[test]
fn c10_small_deviation() {
    let _g = serial();
    let ens = |n| EnsembleSpec {
        settings: TransferSettings {
            spatial_points: 64,
            ..settings()
        },
        ..EnsembleSpec::new(n, SEED)
    };
    let grid = [100.0, 400.0, 1600.0, 3600.0, 6400.0, 10_000.0];
    let zero = small_deviation_run(0.25, unit_band(), (0.5, 0.5), 0.0, &grid, &ens(1), CLASSICAL).unwrap();
    let g1 = est(main_sweep(), 1.0);
    let one = small_deviation_run(0.25, unit_band(), (0.5, 0.5), 1.0, &grid, &ens(8), g1.gamma).unwrap();
    let inside = one.observed_rate >= g1.ci_low && one.observed_rate <= g1.ci_high;
    let pass = zero.relative_error <= 0.05 && inside;
    report(
        10,
        "small deviation, alpha = 0.25",
        pass,
        &format!(
            "beta 0 plateau {:.4} vs {CLASSICAL:.4} (rel {:.2e}); beta 1 plateau {:.3} +- {:.3} in CI [{:.3}, {:.3}]",
            zero.observed_rate, zero.relative_error, one.observed_rate, one.observed_stderr, g1.ci_low, g1.ci_high
        ),
    );
    assert!(pass);
}

#[test]
fn c11_functional_corridor() {
    let _g = serial();
    let ens = EnsembleSpec {
        settings: settings(),
        ..EnsembleSpec::new(1, SEED)
    };
    let r = functional_corridor_run(
        Boundary::constant(0.0),
        Boundary::linear(1.0, 0.5),
        (0.5, 0.5),
        (0.0, 1.5),
        0.0,
        &[10.0, 25.0, 50.0],
        &ens,
        CLASSICAL,
    )
    .unwrap();
    let target = PI * PI / 3.0;
    let rel = (r.observed_rate - target).abs() / target;
    let pass = rel <= 0.05;
    report(
        11,
        "functional corridor",
        pass,
        &format!("observed {:.4} vs pi^2/3 = {target:.4} (rel {rel:.2e})", r.observed_rate),
    );
    assert!(pass);
}

#[test]
fn c12_tail_diagnostic() {
    let _g = serial();
    let corridor = Corridor::constant(-1.0, 1.0, (-0.5, 0.5), (-0.5, 0.5), 1.0).unwrap();
    let ens = EnsembleSpec {
        settings: TransferSettings {
            spatial_points: 64,
            start_points: 5,
            ..TransferSettings::default()
        },
        ..EnsembleSpec::new(2000, SEED)
    };
    let samples = tail_samples(2.0, &corridor, &ens).unwrap();
    let doubling = moment_doubling(&samples);
    let tail = TailReport::from_samples(2.0, 1.5, samples);
    let finite = tail.moments.iter().all(|m| m.value.is_finite() && m.stderr.is_finite());
    let stable = doubling.iter().all(|m| m.stable);
    let pass = finite && stable && tail.pass;
    let moments: Vec<String> = doubling
        .iter()
        .map(|m| format!("m{} {:.3}->{:.3}", m.order, m.half, m.full))
        .collect();
    let products: Vec<String> = tail
        .exceedances
        .iter()
        .map(|e| format!("{:.3}", e.product))
        .collect();
    report(
        12,
        "tail diagnostic",
        pass,
        &format!(
            "moments 1000->2000: {}; products p=1,2 over n=1e2,1e3,1e4: [{}]",
            moments.join(", "),
            products.join(", ")
        ),
    );
    assert!(pass);
}

const DETERMINISM_CONFIG: &str = r#"
master_seed = 3

[transfer]
spatial_points = 48
start_points = 3

[sweep]
betas = [0.0, 0.5, 1.0]
ensemble_size = 8
horizon = 4.0

[audit]
environments = 3
checkpoints = [1.0, 2.0, 3.0]

[scenario.small_dev]
beta = 1.0
gamma = 10.9
t_grid = [16.0, 81.0]
ensemble_size = 4

[scenario.annealed]
ensemble_size = 40
"#;

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn c13_determinism() {
    let _g = serial();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let pipelines: [&[&str]; 4] = [&["sweep"], &["audit"], &["scenario", "small-dev"], &["scenario", "annealed"]];
    let mut pass = true;
    let mut files = 0;
    for (i, args) in pipelines.iter().enumerate() {
        let mut trees = Vec::new();
        for (run, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
            let out_dir = tmp.path().join(format!("p{i}{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_corridor"))
                .arg("--config")
                .arg(&cfg)
                .args(*args)
                .env("CORRIDOR_OUTPUT_DIR", &out_dir)
                .env("CORRIDOR_WORKERS", workers)
                .stdout(Stdio::null())
                .status()
                .unwrap();
            pass &= matches!(status.code(), Some(0 | 2));
            pass &= out_dir.join("manifest.json").exists();
            trees.push(tree(&out_dir));
        }
        files += trees[0].len();
        pass &= !trees[0].is_empty() && trees[0] == trees[1] && trees[0] == trees[2];
    }
    report(
        13,
        "determinism",
        pass,
        &format!("4 pipelines x (2 reruns on 1 worker + 1 run on 3 workers), {files} files byte-identical"),
    );
    assert!(pass);
}
