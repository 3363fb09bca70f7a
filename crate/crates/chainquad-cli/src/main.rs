//! `chainquad` — simulate the cable-suspended-payload quadrotor testbench,
//! inspect its linearization, evaluate stability certificates, and run the
//! randomized validation suites.
//!
//! Exit codes: 0 success, 1 failed certificate or validation, 2 bad input
//! or runtime failure.

use chainquad_cli::scenario::load_scenario;
use chainquad_cli::{export, report, validate, CliError};
use chainquad_core::linearize::{build_linear_model, closed_loop};
use chainquad_core::sim::{certify_scenario, metrics, run, Scenario};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chainquad", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scenario file (JSON); defaults to the "paper-sim" preset.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Output directory for generated artifacts.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Disable the integral action (zeroes K_z and k_I).
    #[arg(long)]
    no_integral: bool,
    /// Override the integrator step (s).
    #[arg(long, value_name = "X")]
    dt_int: Option<f64>,
    /// Override the controller period (s).
    #[arg(long, value_name = "X")]
    dt_ctrl: Option<f64>,
    /// Override the simulated duration (s).
    #[arg(long, value_name = "X")]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop simulation; writes trajectory CSV, plot script and
    /// a metrics report.
    Simulate(CommonOpts),
    /// Dump the linearized model and closed-loop matrices with eigenvalues.
    Linearize(CommonOpts),
    /// Evaluate the stability certificates; exits 0 only if all pass.
    Certify(CommonOpts),
    /// Run the randomized validation suites; exits 0 only if all pass.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reproduce the benchmark comparison: the disturbance-rejection run
    /// with and without the integral term.
    DemoPaper(CommonOpts),
}

fn load(opts: &CommonOpts) -> Result<Scenario, CliError> {
    let mut sc = match &opts.scenario {
        Some(path) => load_scenario(path)?,
        None => Scenario::paper_sim(),
    };
    if opts.no_integral {
        sc.enable_integral = false;
    }
    if let Some(dt) = opts.dt_int {
        sc.dt_int = dt;
        sc.dt_log = sc.dt_log.max(dt);
    }
    if let Some(dt) = opts.dt_ctrl {
        sc.dt_ctrl = dt;
    }
    if let Some(d) = opts.duration {
        sc.duration = d;
    }
    sc.validate()?;
    Ok(sc)
}

fn cmd_simulate(opts: &CommonOpts) -> Result<ExitCode, CliError> {
    let sc = load(opts)?;
    match certify_scenario(&sc) {
        Ok(cert) if !cert.passed() => {
            eprintln!(
                "warning: stability certificate failed ({}); simulating anyway",
                cert.failures().join(", ")
            );
        }
        Ok(_) => {}
        Err(e) => eprintln!("warning: certificate could not be evaluated: {e}"),
    }
    let log = run(&sc)?;
    std::fs::create_dir_all(&opts.out)?;
    let csv = opts.out.join("trajectory.csv");
    export::write_csv(&log, &csv)?;
    export::write_plot_script(&opts.out.join("plot.gp"), "trajectory.csv", log.n)?;
    let m = metrics(&log, &sc.target)?;
    let rep = report::metrics_report(&m);
    std::fs::write(opts.out.join("metrics.txt"), &rep)?;
    print!("{rep}");
    println!("trajectory: {}", csv.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_linearize(opts: &CommonOpts) -> Result<ExitCode, CliError> {
    let sc = load(opts)?;
    let lm = build_linear_model(&sc.params);
    let kx = sc.gains.kx_matrix();
    let kdx = sc.gains.kdx_matrix();
    let (a, b) = closed_loop(&lm, &kx, &kdx)
        .map_err(|e| CliError::Scenario(format!("closed loop: {e}")))?;
    std::fs::create_dir_all(&opts.out)?;
    export::write_matrix(&opts.out.join("M.txt"), &lm.mass)?;
    export::write_matrix(&opts.out.join("G.txt"), &lm.stiffness)?;
    export::write_matrix(&opts.out.join("B.txt"), &lm.input)?;
    export::write_matrix(&opts.out.join("A_closed.txt"), &a)?;
    export::write_matrix(&opts.out.join("B_closed.txt"), &b)?;

    let eigs = chainquad_core::gains::eigenvalues(&a)
        .map_err(|e| CliError::Scenario(format!("eigenvalues: {e}")))?;
    let mut lines = String::new();
    let mut abscissa = f64::NEG_INFINITY;
    for e in eigs.iter() {
        lines.push_str(&format!("{} {}\n", e.re, e.im));
        abscissa = abscissa.max(e.re);
    }
    std::fs::write(opts.out.join("eigenvalues.txt"), lines)?;
    println!(
        "linearized model: {} links, state dim {}, spectral abscissa {abscissa}",
        lm.n,
        a.nrows()
    );
    println!("matrices written to {}", opts.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(opts: &CommonOpts) -> Result<ExitCode, CliError> {
    let sc = load(opts)?;
    let cert = certify_scenario(&sc)?;
    let rep = report::certificate_report(&cert);
    print!("{rep}");
    std::fs::create_dir_all(&opts.out)?;
    std::fs::write(opts.out.join("certificate.txt"), &rep)?;
    if cert.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_validate(_opts: &CommonOpts, seed: u64) -> Result<ExitCode, CliError> {
    let results = validate::run_all(seed);
    let mut all_ok = true;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("{name}: PASS ({detail})"),
            Err(why) => {
                all_ok = false;
                println!("{name}: FAIL ({why})");
            }
        }
    }
    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_demo_paper(opts: &CommonOpts) -> Result<ExitCode, CliError> {
    let mut with = load(opts)?;
    with.enable_integral = true;
    let mut without = with.clone();
    without.enable_integral = false;

    std::fs::create_dir_all(&opts.out)?;
    let log_with = run(&with)?;
    let log_without = run(&without)?;
    export::write_csv(&log_with, &opts.out.join("with_integral.csv"))?;
    export::write_csv(&log_without, &opts.out.join("without_integral.csv"))?;
    export::write_plot_script(&opts.out.join("plot_with.gp"), "with_integral.csv", log_with.n)?;
    export::write_plot_script(
        &opts.out.join("plot_without.gp"),
        "without_integral.csv",
        log_without.n,
    )?;
    let m_with = metrics(&log_with, &with.target)?;
    let m_without = metrics(&log_without, &without.target)?;
    let rep = report::comparison_report(&m_with, &m_without);
    std::fs::write(opts.out.join("comparison.txt"), &rep)?;
    print!("{rep}");
    println!("artifacts in {}", opts.out.display());
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Simulate(o) => cmd_simulate(o),
        Command::Linearize(o) => cmd_linearize(o),
        Command::Certify(o) => cmd_certify(o),
        Command::Validate { common, seed } => cmd_validate(common, *seed),
        Command::DemoPaper(o) => cmd_demo_paper(o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
