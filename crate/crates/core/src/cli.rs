//! Batch front end: `run`, `sweep`, `validate`, and `noise-check`
//! subcommands over scenario TOML files. Outputs are CSV tables plus a
//! plain-text report, written deterministically so identical invocations
//! produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::diagnostics::{self, fmt_float, Certificate};
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::semigroup::SpectralOperator;
use crate::solver::{self, Prepared, Scenario, SolutionBundle};
use crate::validation;

#[derive(Debug, Parser)]
#[command(
    name = "mildsolve",
    version,
    about = "Regularized solves of dissipative stochastic reaction-diffusion scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario at the first lambda of its schedule and gate the
    /// exit status on the certificate table
    Run(JobArgs),
    /// Walk the lambda schedule on one noise path and tabulate the Cauchy
    /// distances between consecutive solutions
    Sweep(JobArgs),
    /// Run the library invariant suites on deterministic fixtures
    Validate(ValidateArgs),
    /// Compare empirical mode variances of the sampled noise against the
    /// exact stationary-free law
    NoiseCheck(JobArgs),
}

#[derive(Debug, Args)]
struct JobArgs {
    /// scenario config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// output directory, created if missing
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// dotted-path config override, e.g. scenario.dt=5e-4 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// worker threads for per-lambda jobs in sweep
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// also parse this config and report the result as a leading check
    #[arg(long)]
    config: Option<PathBuf>,
    /// dotted-path config override applied before the parse check
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Parse std::env::args and dispatch; returns the process exit code.
pub fn run_from_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version land here too; only real parse errors are config
            // failures
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::NoiseCheck(args) => cmd_noise_check(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Io(_) => 2,
                Error::Numerical(_) => 3,
            }
        }
    }
}

fn load_scenario(args: &JobArgs) -> Result<(Scenario, ConfigFile)> {
    let (mut config, base) = ConfigFile::load(&args.config, &args.set)?;
    if let Some(seed) = args.seed {
        config.scenario.seed = seed;
    }
    let scenario = config.to_scenario(&base)?;
    Ok((scenario, config))
}

fn config_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_run(args: &JobArgs) -> Result<i32> {
    let (scenario, config) = load_scenario(args)?;
    let prepared = Prepared::new(&scenario)?;
    let lambda = scenario.lambdas.values()[0];
    let bundle = prepared.solve(lambda)?;
    let id = scenario.fingerprint();

    let mut certificates = vec![diagnostics::energy_certificate(
        &bundle,
        diagnostics::ENERGY_TOL,
        id,
    )];
    certificates.extend(diagnostics::bdd_certificates(
        &bundle,
        prepared.effective_graph(),
        prepared.forcing(),
        diagnostics::BDD_TOL,
        id,
    )?);
    certificates.push(diagnostics::graph_membership(
        &bundle,
        prepared.effective_graph(),
        id,
    )?);

    fs::create_dir_all(&args.out)?;
    write_trajectory(
        &args.out.join("trajectory.csv"),
        &bundle,
        config.output.stride,
    )?;
    write_certificates(&args.out.join("certificates.csv"), &certificates)?;

    let mut report = String::new();
    let _ = writeln!(report, "command: run");
    let _ = writeln!(report, "config: {}", config_label(&args.config));
    let _ = writeln!(report, "scenario: {id:016x}");
    let _ = writeln!(report, "seed: {}", bundle.seed);
    let _ = writeln!(report, "scheme: {}", bundle.scheme.name());
    let _ = writeln!(report, "lambda: {}", fmt_float(lambda));
    let _ = writeln!(report, "steps: {}", bundle.steps());
    let _ = writeln!(report, "dt: {}", fmt_float(bundle.dt));
    let _ = writeln!(
        report,
        "max_mild_residual_l1: {}",
        fmt_float(bundle.max_mild_residual())
    );
    let _ = writeln!(
        report,
        "forcing_sup_norm: {}",
        fmt_float(prepared.forcing().sup_norm())
    );
    for c in &certificates {
        let _ = writeln!(
            report,
            "certificate {}: value {} {} {} -> {}",
            c.name,
            fmt_float(c.value),
            c.direction.label(),
            fmt_float(c.threshold),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let all_pass = certificates.iter().all(|c| c.pass);
    let _ = writeln!(
        report,
        "verdict: {}",
        if all_pass { "pass" } else { "FAIL" }
    );
    fs::write(args.out.join("report.txt"), &report)?;
    print!("{report}");

    Ok(if all_pass { 0 } else { 4 })
}

/// Fixed column order of the sweep table. Row j describes the consecutive
/// pair (lambda_j, lambda_{j+1}): d_j and the weak-test columns are pair
/// distances, the last two columns are stats of the bundle at lambda_j.
const CAUCHY_HEADER: &str = "j,lambda,d_j,weak_const,weak_sin_x,weak_cos_t,\
weak_mixed,weak_sign,fenchel_gap_integral,energy_slack_min";

fn cmd_sweep(args: &JobArgs) -> Result<i32> {
    let (scenario, config) = load_scenario(args)?;
    let cont = solver::continuation_jobs(&scenario, args.jobs.max(1))?;
    let id = scenario.fingerprint();
    let prepared = Prepared::new(&scenario)?;

    if cont.bundles.iter().flatten().count() < 2 {
        let first_failure = cont
            .failures
            .iter()
            .flatten()
            .next()
            .cloned()
            .unwrap_or_else(|| "no failure message recorded".to_string());
        return Err(Error::numerical(format!(
            "fewer than two lambda solves succeeded: {first_failure}"
        )));
    }

    // per-bundle stats reused across rows and the monotonicity gate
    let mut gap_integrals: Vec<Option<f64>> = Vec::with_capacity(cont.lambdas.len());
    let mut slack_mins: Vec<Option<f64>> = Vec::with_capacity(cont.lambdas.len());
    let mut weak: Vec<Option<[f64; 5]>> = Vec::with_capacity(cont.lambdas.len());
    for bundle in &cont.bundles {
        match bundle {
            Some(b) => {
                let horizon = b.dt * b.steps() as f64;
                let membership = diagnostics::graph_membership(b, prepared.effective_graph(), id)?;
                gap_integrals.push(Some(membership.value * horizon));
                slack_mins.push(Some(
                    diagnostics::energy_certificate(b, diagnostics::ENERGY_TOL, id).value,
                ));
                weak.push(Some(diagnostics::weak_functionals(&b.v, b.dt)));
            }
            None => {
                gap_integrals.push(None);
                slack_mins.push(None);
                weak.push(None);
            }
        }
    }

    let mut table = String::from(CAUCHY_HEADER);
    table.push('\n');
    for j in 0..cont.lambdas.len() - 1 {
        let (Some(d), Some(wa), Some(wb), Some(gap), Some(slack)) = (
            cont.distances[j],
            weak[j].as_ref(),
            weak[j + 1].as_ref(),
            gap_integrals[j],
            slack_mins[j],
        ) else {
            continue;
        };
        let _ = write!(table, "{j},{},{}", fmt_float(cont.lambdas[j]), fmt_float(d));
        for (a, b) in wa.iter().zip(wb) {
            let _ = write!(table, ",{}", fmt_float((a - b).abs()));
        }
        let _ = writeln!(table, ",{},{}", fmt_float(gap), fmt_float(slack));
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("cauchy.csv"), &table)?;
    let limit = cont
        .limit()
        .expect("at least two lambda solves succeeded, so a limit exists");
    write_trajectory(
        &args.out.join("limit_trajectory.csv"),
        limit,
        config.output.stride,
    )?;

    // exit gate: distances nonincreasing and membership gap integral
    // nonincreasing across consecutive available entries
    let available: Vec<f64> = cont.distances.iter().flatten().copied().collect();
    let d_monotone = available.windows(2).all(|w| w[1] <= w[0]);
    let gaps: Vec<f64> = gap_integrals.iter().flatten().copied().collect();
    let gap_monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let pass = d_monotone && gap_monotone;

    let mut report = String::new();
    let _ = writeln!(report, "command: sweep");
    let _ = writeln!(report, "config: {}", config_label(&args.config));
    let _ = writeln!(report, "scenario: {id:016x}");
    let _ = writeln!(report, "seed: {}", scenario.seed);
    let _ = writeln!(report, "scheme: {}", limit.scheme.name());
    let _ = writeln!(report, "lambdas: {}", cont.lambdas.len());
    for (j, lambda) in cont.lambdas.iter().enumerate() {
        let status = match &cont.failures[j] {
            Some(msg) => format!("failed: {msg}"),
            None => "solved".to_string(),
        };
        let _ = writeln!(report, "lambda[{j}] = {}: {status}", fmt_float(*lambda));
    }
    for (j, d) in cont.distances.iter().enumerate() {
        if let Some(d) = d {
            let _ = writeln!(report, "d[{j}] = {}", fmt_float(*d));
        }
    }
    let _ = writeln!(
        report,
        "limit_lambda: {}",
        fmt_float(cont.lambdas[cont.limit_index.expect("limit exists")])
    );
    let _ = writeln!(
        report,
        "limit_max_mild_residual_l1: {}",
        fmt_float(limit.max_mild_residual())
    );
    let _ = writeln!(report, "distances_nonincreasing: {d_monotone}");
    let _ = writeln!(report, "gap_integral_nonincreasing: {gap_monotone}");
    let _ = writeln!(report, "verdict: {}", if pass { "pass" } else { "FAIL" });
    fs::write(args.out.join("report.txt"), &report)?;
    print!("{report}");

    Ok(if pass { 0 } else { 4 })
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let mut checks = Vec::new();
    if let Some(path) = &args.config {
        // a broken config is a config error (exit 2), not a failed check
        let (config, base) = ConfigFile::load(path, &args.set)?;
        let scenario = config.to_scenario(&base)?;
        checks.push(validation::Check {
            name: "config.parses_and_builds",
            pass: true,
            detail: format!(
                "{}: scenario {:016x}",
                config_label(path),
                scenario.fingerprint()
            ),
        });
    }
    checks.extend(validation::all_suites());
    let mut all_pass = true;
    for check in &checks {
        all_pass &= check.pass;
        println!(
            "{} {} ({})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    println!(
        "{} of {} checks passed",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    Ok(if all_pass { 0 } else { 4 })
}

const NOISE_HEADER: &str =
    "k,coefficient,eigenvalue,exact_variance,empirical_variance,std_err,z_score,pass";

fn cmd_noise_check(args: &JobArgs) -> Result<i32> {
    let (scenario, config) = load_scenario(args)?;
    let paths = config.noise_check.paths;
    let op = SpectralOperator::with_shift(scenario.n_x, scenario.operator_shift)?;
    let steps = scenario.steps()?;
    let t_final = scenario.dt * steps as f64;
    let modes = op.modes();

    let mut finals = vec![Vec::with_capacity(paths); modes];
    for p in 0..paths as u64 {
        let path = NoisePath::sample(
            &op,
            &scenario.diffusion,
            steps,
            scenario.dt,
            scenario.seed.wrapping_add(p),
        )?;
        for (k, series) in finals.iter_mut().enumerate() {
            series.push(path.mode_path(k + 1)[steps]);
        }
    }

    let mut table = String::from(NOISE_HEADER);
    table.push('\n');
    let mut all_pass = true;
    let mut worst_z = 0.0f64;
    let mut moments = Vec::with_capacity(modes);
    for k in 1..=modes {
        let series = &finals[k - 1];
        let mean: f64 = series.iter().sum::<f64>() / paths as f64;
        let var: f64 =
            series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (paths - 1) as f64;
        let bk = scenario.diffusion.coefficient(k);
        let mu = op.eigenvalue(k);
        let exact = bk * bk * (1.0 - (-2.0 * mu * t_final).exp()) / (2.0 * mu);
        let se = exact * (2.0 / (paths as f64 - 1.0)).sqrt();
        // a silent mode has zero exact variance and must stay exactly zero
        let (z, pass) = if exact == 0.0 {
            (0.0, var == 0.0)
        } else {
            let z = (var - exact).abs() / se;
            (z, z <= 3.0)
        };
        worst_z = worst_z.max(z);
        all_pass &= pass;
        moments.push((mean, exact));
        let _ = writeln!(
            table,
            "{k},{},{},{},{},{},{},{}",
            fmt_float(bk),
            fmt_float(mu),
            fmt_float(exact),
            fmt_float(var),
            fmt_float(se),
            fmt_float(z),
            pass
        );
    }

    // independence spot check on the first mode pair
    let mut cov_line = "cov_check: skipped (fewer than two modes)".to_string();
    if modes >= 2 {
        let (mean1, exact1) = moments[0];
        let (mean2, exact2) = moments[1];
        let cov: f64 = finals[0]
            .iter()
            .zip(&finals[1])
            .map(|(x, y)| (x - mean1) * (y - mean2))
            .sum::<f64>()
            / (paths - 1) as f64;
        let se = (exact1 * exact2).sqrt() / (paths as f64 - 1.0).sqrt();
        let (z, pass) = if se == 0.0 {
            (0.0, cov == 0.0)
        } else {
            let z = cov.abs() / se;
            (z, z <= 3.0)
        };
        all_pass &= pass;
        cov_line = format!(
            "cov_check: modes (1, 2) cov {} z {} -> {}",
            fmt_float(cov),
            fmt_float(z),
            if pass { "pass" } else { "FAIL" }
        );
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("noise_check.csv"), &table)?;

    let mut report = String::new();
    let _ = writeln!(report, "command: noise-check");
    let _ = writeln!(report, "config: {}", config_label(&args.config));
    let _ = writeln!(report, "seed: {}", scenario.seed);
    let _ = writeln!(report, "paths: {paths}");
    let _ = writeln!(report, "modes: {modes}");
    let _ = writeln!(report, "steps: {steps}");
    let _ = writeln!(report, "dt: {}", fmt_float(scenario.dt));
    let _ = writeln!(report, "horizon: {}", fmt_float(t_final));
    let _ = writeln!(report, "worst_z: {}", fmt_float(worst_z));
    let _ = writeln!(report, "{cov_line}");
    let _ = writeln!(
        report,
        "verdict: {}",
        if all_pass { "pass" } else { "FAIL" }
    );
    fs::write(args.out.join("report.txt"), &report)?;
    print!("{report}");

    Ok(if all_pass { 0 } else { 4 })
}

/// Times kept in trajectory files: every stride-th step plus the final one.
fn kept_steps(steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut keep: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *keep.last().expect("0 is always kept") != steps {
        keep.push(steps);
    }
    keep
}

/// Schema: t,field,x1..xN with one row per retained time for each of the
/// fields u (solution), v (noise-shifted part), and zeta (drift selection).
fn write_trajectory(path: &Path, bundle: &SolutionBundle, stride: usize) -> Result<()> {
    let n_x = bundle.v[0].len();
    let mut out = String::from("t,field");
    for j in 1..=n_x {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for n in kept_steps(bundle.steps(), stride) {
        let t = bundle.dt * n as f64;
        for (label, traj) in [("u", &bundle.u), ("v", &bundle.v), ("zeta", &bundle.zeta)] {
            let _ = write!(out, "{},{label}", fmt_float(t));
            for value in traj[n].values() {
                let _ = write!(out, ",{}", fmt_float(*value));
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_certificates(path: &Path, certificates: &[Certificate]) -> Result<()> {
    let mut out = String::from(Certificate::CSV_HEADER);
    out.push('\n');
    for c in certificates {
        out.push_str(&c.csv_row());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
