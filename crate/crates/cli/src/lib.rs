//! Command-line driver: parses a run configuration, runs one pipeline and
//! writes plot-ready text files plus a JSON summary and manifest.
//!
//! Exit status is 0 on success, 1 on input errors and 2 when a property check
//! of the run fails.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use corridor::experiments::{
    annealed_comparison, functional_corridor_run, moment_doubling, small_deviation_run, tail_samples,
    EnsembleSpec, ScenarioResult, TailReport,
};
use corridor::rates::{
    extract_rate, gamma_from_tasks, property_report, subadditivity_audit, GammaCurve, PropertyReport,
    SweepConfig, Verdict,
};
use corridor::seeds::{seed_schedule, TaskLabel};
use corridor::{par, sample_environment, BandSpec, Corridor, SurvivalCurve};
use serde::Serialize;
use serde_json::json;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] corridor::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corridor", version, about = "Quenched survival of Brownian motion in a random corridor")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep `β`, writing one curve per environment and the rate estimates.
    Sweep,
    /// Fit a rate to existing curve files.
    Rate,
    /// Subadditivity audit of worst-start survival over checkpoint pairs.
    Audit,
    /// Run one scenario.
    #[command(subcommand)]
    Scenario(Scenario),
    /// Sweep and run the property checks; `--beta 0` needs no config.
    Check {
        /// Overrides the sweep's `β` grid; repeatable.
        #[arg(long, allow_negative_numbers = true)]
        beta: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Scenario {
    SmallDev,
    Functional,
    Annealed,
    Tail,
}

impl Scenario {
    fn name(self) -> &'static str {
        match self {
            Scenario::SmallDev => "small-dev",
            Scenario::Functional => "functional",
            Scenario::Annealed => "annealed",
            Scenario::Tail => "tail",
        }
    }
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Sweep => "sweep".into(),
            Command::Rate => "rate".into(),
            Command::Audit => "audit".into(),
            Command::Scenario(s) => format!("scenario {}", s.name()),
            Command::Check { .. } => "check".into(),
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    PropertyFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::PropertyFailure => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Ok
        } else {
            Status::PropertyFailure
        }
    }
}

/// Parses `args`, runs, and returns the exit code. Messages go to `out` and `err`.
pub fn main_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    env: impl Fn(&str) -> Option<String>,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match run(&cli, env, out) {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Loads the configuration and dispatches the command.
pub fn run(cli: &Cli, env: impl Fn(&str) -> Option<String>, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Command::Check { beta }) if !beta.is_empty() && beta.iter().all(|&b| b == 0.0) => {
            // Nothing is random at β = 0, so the seed is immaterial.
            RunConfig::from_toml("master_seed = 0")?
        }
        (None, _) => {
            return Err(CliError::Input(
                "a --config file is required (only `check --beta 0` runs without one)".into(),
            ))
        }
    };
    cfg.apply_env(&env)?;
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let run = Run::new(&cfg, cli.command.name())?;
    par::with_workers(workers, || dispatch(&cfg, &cli.command, run, out))
}

fn dispatch(cfg: &RunConfig, command: &Command, mut run: Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let status = match command {
        Command::Sweep => sweep(cfg, &mut run, out)?,
        Command::Rate => rate(cfg, &mut run, out)?,
        Command::Audit => audit(cfg, &mut run, out)?,
        Command::Scenario(s) => scenario(cfg, *s, &mut run, out)?,
        Command::Check { beta } => check(cfg, beta, &mut run, out)?,
    };
    run.finish(cfg, status)?;
    Ok(status)
}

/// Output directory plus the seed log for the manifest.
struct Run {
    dir: PathBuf,
    command: String,
    seeds: Vec<SeedRecord>,
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SeedRecord {
    beta: f64,
    replica: u64,
    seed: u64,
}

impl Run {
    fn new(cfg: &RunConfig, command: String) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(format!(
            "cannot create output directory {}",
            cfg.output_dir.display()
        )))?;
        Ok(Run {
            dir: cfg.output_dir.clone(),
            command,
            seeds: Vec::new(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: impl AsRef<Path>, contents: &[u8]) -> Result<(), CliError> {
        let rel = rel.as_ref();
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(CliError::io(format!("cannot create {}", parent.display())))?;
        }
        fs::write(&path, contents).map_err(CliError::io(format!("cannot write {}", path.display())))?;
        self.files.push(rel.to_string_lossy().replace('\\', "/"));
        Ok(())
    }

    fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    fn record_seeds(&mut self, master_seed: u64, beta: f64, count: usize) -> Result<(), CliError> {
        let labels: Vec<TaskLabel> = (0..count as u64).map(|r| TaskLabel::new(beta, r)).collect();
        let seeds = seed_schedule(master_seed, &labels)?;
        for (label, seed) in labels.iter().zip(seeds) {
            self.seeds.push(SeedRecord {
                beta: label.beta,
                replica: label.replica,
                seed,
            });
        }
        Ok(())
    }

    fn finish(mut self, cfg: &RunConfig, status: Status) -> Result<(), CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let files = std::mem::take(&mut self.files);
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "exit_status": status.code(),
            "files": files,
            "seeds": self.seeds,
            "timestamp_unix": timestamp,
        });
        self.write_json("manifest.json", &manifest)
    }
}

fn sweep_config(cfg: &RunConfig, betas: Vec<f64>, ensemble_size: usize, horizon: f64, dt: f64) -> Result<SweepConfig, CliError> {
    for &b in &betas {
        cfg.corridor.build(b)?;
    }
    let (sw, tw) = cfg.corridor.windows();
    let mut sweep = SweepConfig::new(betas, ensemble_size, horizon, cfg.corridor.band()?, cfg.master_seed);
    sweep.dt = dt;
    sweep.start_window = Some(sw);
    sweep.terminal_window = Some(tw);
    sweep.fit_window = cfg.sweep.fit_window.map(|w| (w[0], w[1]));
    sweep.variant = cfg.sweep.variant;
    sweep.settings = cfg.transfer;
    Ok(sweep)
}

fn beta_dir(beta: f64) -> String {
    format!("beta_{beta}")
}

fn curve_text(curve: &SurvivalCurve) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    curve.write_to(&mut buf)?;
    Ok(buf)
}

/// Runs a sweep, writes curves, `gamma.txt` and the property report.
fn sweep_and_report(
    sweep: &SweepConfig,
    run: &mut Run,
) -> Result<(GammaCurve, PropertyReport), CliError> {
    let tasks = corridor::rates::sweep_curves(sweep)?;
    for task in &tasks {
        let rel = PathBuf::from("curves")
            .join(beta_dir(task.label.beta))
            .join(format!("env_{:04}.txt", task.label.replica));
        run.write(rel, &curve_text(&task.curve)?)?;
        run.seeds.push(SeedRecord {
            beta: task.label.beta,
            replica: task.label.replica,
            seed: task.seed,
        });
    }
    let gamma = gamma_from_tasks(sweep, &tasks)?;
    let report = property_report(&gamma);
    run.write("gamma.txt", gamma.to_text().as_bytes())?;
    run.write("report.txt", report_text(&report).as_bytes())?;
    run.write_json("summary.json", &json!({ "gamma": gamma, "report": report }))?;
    Ok((gamma, report))
}

fn report_text(report: &PropertyReport) -> String {
    let mut out = String::from("# check verdict detail\n");
    for c in &report.checks {
        let verdict = serde_json::to_value(c.verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        out.push_str(&format!("{} {} {}\n", c.name, verdict, c.detail));
    }
    out
}

fn print_gamma(out: &mut (dyn Write + Send), gamma: &GammaCurve) {
    for e in &gamma.estimates {
        let _ = writeln!(
            out,
            "beta {:>6}  gamma {:.5}  95% CI [{:.5}, {:.5}]  n_env {}",
            e.beta, e.gamma, e.ci_low, e.ci_high, e.n_environments
        );
    }
}

fn print_report(out: &mut (dyn Write + Send), report: &PropertyReport) {
    for c in &report.checks {
        let _ = writeln!(out, "{:<13} {:<12} {}", c.name, format!("{:?}", c.verdict).to_lowercase(), c.detail);
    }
}

fn sweep(cfg: &RunConfig, run: &mut Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let s = &cfg.sweep;
    let sweep = sweep_config(cfg, s.betas.clone(), s.ensemble_size, s.horizon, s.dt)?;
    let (gamma, report) = sweep_and_report(&sweep, run)?;
    print_gamma(out, &gamma);
    print_report(out, &report);
    Ok(Status::from_pass(report.passed()))
}

fn check(cfg: &RunConfig, betas: &[f64], run: &mut Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let betas = if betas.is_empty() { cfg.sweep.betas.clone() } else { betas.to_vec() };
    let c = &cfg.check;
    let sweep = sweep_config(cfg, betas, c.ensemble_size, c.horizon, c.dt)?;
    let (gamma, report) = sweep_and_report(&sweep, run)?;
    print_gamma(out, &gamma);
    print_report(out, &report);
    let pass = report.passed();
    let _ = writeln!(out, "{}", if pass { "all checks passed" } else { "property check FAILED" });
    Ok(Status::from_pass(pass))
}

fn rate(cfg: &RunConfig, run: &mut Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let sec = cfg
        .rate
        .as_ref()
        .ok_or_else(|| CliError::Input("`rate` needs a [rate] section with curve_dir and beta".into()))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&sec.curve_dir)
        .map_err(CliError::io(format!("cannot read {}", sec.curve_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!("no curve files in {}", sec.curve_dir.display())));
    }
    let curves: Vec<SurvivalCurve> = paths
        .iter()
        .map(|p| -> Result<SurvivalCurve, CliError> {
            let f = fs::File::open(p).map_err(CliError::io(format!("cannot open {}", p.display())))?;
            SurvivalCurve::read_from(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        })
        .collect::<Result<_, _>>()?;
    let t_end = curves.iter().map(SurvivalCurve::final_time).fold(f64::INFINITY, f64::min);
    let window = sec.fit_window.map(|w| (w[0], w[1])).unwrap_or((t_end / 4.0, t_end));
    let width = sec.width.unwrap_or(cfg.corridor.b - cfg.corridor.a);
    let estimate = extract_rate(&curves, window, width, sec.beta)?;
    let gamma = GammaCurve::from_estimates(vec![estimate.clone()])?;
    run.write("rate.txt", gamma.to_text().as_bytes())?;
    run.write_json("summary.json", &estimate)?;
    print_gamma(out, &gamma);
    if estimate.low_quality {
        let _ = writeln!(out, "warning: mean r^2 {:.4} below 0.99", estimate.r_squared);
    }
    Ok(Status::Ok)
}

fn audit(cfg: &RunConfig, run: &mut Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let a = &cfg.audit;
    if a.environments == 0 {
        return Err(CliError::Input("audit.environments must be positive".into()));
    }
    let horizon = *a
        .checkpoints
        .last()
        .ok_or_else(|| CliError::Input("audit.checkpoints must not be empty".into()))?;
    let (sw, tw) = cfg.corridor.windows();
    let window = match a.window {
        Some(w) => (w[0], w[1]),
        None if sw == tw => sw,
        None => {
            let q = 0.25 * (cfg.corridor.b - cfg.corridor.a);
            (cfg.corridor.a + q, cfg.corridor.b - q)
        }
    };
    let corridor = Corridor::constant(cfg.corridor.a, cfg.corridor.b, window, window, a.beta)?;
    let labels: Vec<TaskLabel> = (0..a.environments as u64).map(|r| TaskLabel::new(a.beta, r)).collect();
    let seeds = seed_schedule(cfg.master_seed, &labels)?;
    run.record_seeds(cfg.master_seed, a.beta, a.environments)?;
    let reports = par::map(&seeds, |&seed| -> Result<_, corridor::Error> {
        let env = sample_environment(seed, horizon, a.dt, a.beta)?;
        subadditivity_audit(&env, &corridor, &a.checkpoints, &cfg.transfer)
    });
    let reports: Vec<_> = reports.into_iter().collect::<Result<_, _>>()?;
    let mut text = String::from("# replica seed m n q_0m q_mn q_0n violation\n");
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0usize;
    let mut failures = 0usize;
    for ((r, seed), rep) in seeds.iter().enumerate().zip(&reports) {
        for p in &rep.pairs {
            text.push_str(&format!(
                "{r} {seed} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n",
                p.m, p.n, p.q_0m, p.q_mn, p.q_0n, p.violation
            ));
        }
        worst = worst.max(rep.max_violation);
        pairs += rep.pairs.len();
        failures += usize::from(!rep.pass);
    }
    let pass = failures == 0;
    run.write("audit.txt", text.as_bytes())?;
    run.write_json(
        "summary.json",
        &json!({
            "beta": a.beta,
            "environments": a.environments,
            "pairs": pairs,
            "max_violation": worst,
            "tolerance": corridor::rates::AUDIT_TOLERANCE,
            "failing_environments": failures,
            "pass": pass,
        }),
    )?;
    let _ = writeln!(
        out,
        "audit: {} environments, {pairs} pairs, max violation {worst:.3e}, {}",
        a.environments,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(Status::from_pass(pass))
}

fn ensemble(cfg: &RunConfig, ensemble_size: usize, dt: f64) -> EnsembleSpec {
    EnsembleSpec {
        ensemble_size,
        master_seed: cfg.master_seed,
        dt,
        settings: cfg.transfer,
    }
}

fn scenario_outputs(run: &mut Run, out: &mut (dyn Write + Send), result: &ScenarioResult, tolerance: f64) -> Result<Status, CliError> {
    let pass = result.relative_error <= tolerance;
    let file = format!("scenario_{}.txt", result.scenario_id);
    run.write(&file, result.to_text().as_bytes())?;
    run.write_json("summary.json", &json!({ "result": result, "tolerance": tolerance, "pass": pass }))?;
    let _ = writeln!(
        out,
        "{}: observed {:.5} ± {:.5}, predicted {:.5}, relative error {:.3}% ({})",
        result.scenario_id,
        result.observed_rate,
        result.observed_stderr,
        result.predicted_rate,
        100.0 * result.relative_error,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(Status::from_pass(pass))
}

fn scenario(cfg: &RunConfig, which: Scenario, run: &mut Run, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let sc = &cfg.scenario;
    match which {
        Scenario::SmallDev => {
            let s = &sc.small_dev;
            let band = cfg.corridor.band()?;
            let c = band.center();
            let sw = s.start_window.map(|w| (w[0], w[1])).unwrap_or((c, c));
            let gamma = config::rate_or_classical(s.gamma, s.beta, "scenario.small_dev.gamma")?;
            let ens = ensemble(cfg, s.ensemble_size, s.dt);
            run.record_seeds(cfg.master_seed, s.beta, s.ensemble_size)?;
            let result = small_deviation_run(s.alpha, band, sw, s.beta, &s.t_grid, &ens, gamma / (band.width() * band.width()))?;
            scenario_outputs(run, out, &result, s.tolerance)
        }
        Scenario::Functional => {
            let s = &sc.functional;
            let (f, g) = s.boundaries()?;
            let tw = s.terminal_window.map(|w| (w[0], w[1])).unwrap_or((f.eval(1.0), g.eval(1.0)));
            let gamma = config::rate_or_classical(s.gamma, s.beta, "scenario.functional.gamma")?;
            let ens = ensemble(cfg, s.ensemble_size, s.dt);
            run.record_seeds(cfg.master_seed, s.beta, s.ensemble_size)?;
            let result = functional_corridor_run(
                f,
                g,
                (s.start_window[0], s.start_window[1]),
                tw,
                s.beta,
                &s.horizons,
                &ens,
                gamma,
            )?;
            scenario_outputs(run, out, &result, s.tolerance)
        }
        Scenario::Annealed => {
            let s = &sc.annealed;
            let band = BandSpec::new(s.band[0], s.band[1])?;
            let ens = ensemble(cfg, s.ensemble_size, s.dt);
            run.record_seeds(cfg.master_seed, s.beta, s.ensemble_size)?;
            let report = annealed_comparison(band, s.beta, s.t, &ens)?;
            let pass = report.pass && (s.beta == 0.0 || report.jensen_gap > 0.0);
            let text = format!(
                "# scenario annealed\n# beta = {}\n# t = {}\n# ensemble_size = {}\n# master_seed = {}\n\
                 # analytic mean_survival stderr z_score relative_error mean_q jensen_gap\n\
                 {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n",
                s.beta,
                s.t,
                s.ensemble_size,
                cfg.master_seed,
                report.analytic,
                report.mean_survival,
                report.stderr,
                report.z_score,
                report.relative_error,
                report.mean_q,
                report.jensen_gap
            );
            run.write("scenario_annealed.txt", text.as_bytes())?;
            run.write_json("summary.json", &json!({ "report": report, "pass": pass }))?;
            let _ = writeln!(
                out,
                "annealed: mean survival {:.6e} ± {:.2e}, analytic {:.6e}, z {:.2}, Jensen gap {:.4} ({})",
                report.mean_survival,
                report.stderr,
                report.analytic,
                report.z_score,
                report.jensen_gap,
                if pass { "pass" } else { "FAIL" }
            );
            Ok(Status::from_pass(pass))
        }
        Scenario::Tail => {
            let s = &sc.tail;
            if s.ensemble_size < 1000 {
                return Err(CliError::Input(format!(
                    "scenario.tail.ensemble_size must be at least 1000, got {}",
                    s.ensemble_size
                )));
            }
            let corridor = Corridor::constant(
                s.band[0],
                s.band[1],
                (s.window[0], s.window[1]),
                (s.window[0], s.window[1]),
                s.beta,
            )?;
            let ens = ensemble(cfg, 2 * s.ensemble_size, s.dt);
            run.record_seeds(cfg.master_seed, s.beta, 2 * s.ensemble_size)?;
            let samples = tail_samples(s.t, &corridor, &ens)?;
            let doubling = moment_doubling(&samples);
            let report = TailReport::from_samples(s.t, s.q_exponent, samples);
            let stable = doubling.iter().all(|m| m.stable);
            let pass = report.pass && stable;
            let mut text = format!(
                "# scenario tail\n# beta = {}\n# t = {}\n# q = {}\n# ensemble_size = {}\n# master_seed = {}\n",
                s.beta, s.t, s.q_exponent, report.ensemble_size, cfg.master_seed
            );
            text.push_str("# moment order half full stderr stable\n");
            for m in &doubling {
                text.push_str(&format!("moment {} {:.16e} {:.16e} {:.16e} {}\n", m.order, m.half, m.full, m.stderr, m.stable));
            }
            text.push_str("# exceedance n p threshold fraction product\n");
            for e in &report.exceedances {
                text.push_str(&format!(
                    "exceedance {} {} {:.16e} {:.16e} {:.16e}\n",
                    e.n, e.p, e.threshold, e.fraction, e.product
                ));
            }
            run.write("scenario_tail.txt", text.as_bytes())?;
            let mut sample_text = String::from("# replica x_bar\n");
            for (r, x) in report.samples.iter().enumerate() {
                sample_text.push_str(&format!("{r} {x:.16e}\n"));
            }
            run.write("tail_samples.txt", sample_text.as_bytes())?;
            let summary: BTreeMap<&str, serde_json::Value> = [
                ("moments", json!(report.moments)),
                ("doubling", json!(doubling)),
                ("exceedances", json!(report.exceedances)),
                ("products_decreasing", json!(report.pass)),
                ("moments_stable", json!(stable)),
                ("pass", json!(pass)),
            ]
            .into_iter()
            .collect();
            run.write_json("summary.json", &summary)?;
            let _ = writeln!(
                out,
                "tail: {} samples, moments {}, exceedance products {} ({})",
                report.ensemble_size,
                if stable { "stable" } else { "UNSTABLE" },
                if report.pass { "decreasing" } else { "NOT decreasing" },
                if pass { "pass" } else { "FAIL" }
            );
            Ok(Status::from_pass(pass))
        }
    }
}

/// Whether the named check in `report` passed.
pub fn check_passed(report: &PropertyReport, name: &str) -> bool {
    matches!(report.verdict(name), Some(Verdict::Pass | Verdict::Consistent))
}
