//! `capflow`: run the flow from a config file, run the verification suites,
//! or print the closed-form data of a stationary cap.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use capflow_core::flow::{make_initial_condition, run_from, FlowState};
use capflow_core::halfspace::{cap_area, cap_from_rho0, cap_volume};
use capflow_core::io::{self, RunManifest};
use capflow_core::verify::{self, Level};

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_VERIFY_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Output directory used when neither the config nor the environment names one.
const DEFAULT_OUT_DIR: &str = "capflow-out";

#[derive(Parser)]
#[command(
    name = "capflow",
    version,
    about = "Volume-preserving flow of free-boundary caps in the unit ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data until it converges or reaches t_max.
    Run {
        config: PathBuf,
        /// Also write a snapshot every N steps.
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
        snapshot_every: Option<u64>,
    },
    /// Run the identity and oracle suites.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
    /// Print the geometry of the cap {rho = rho0}.
    Caps {
        #[arg(long)]
        rho0: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run { config, snapshot_every } => run_cmd(&config, snapshot_every).map(|()| 0),
        Command::Verify { level } => verify_cmd(level),
        Command::Caps { rho0, n } => caps_cmd(rho0, n).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_RUN_FAILURE)
        }
    }
}

fn out_dir(configured: Option<&Path>) -> PathBuf {
    match env::var_os("CAPFLOW_OUT_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), Path::to_path_buf),
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn run_cmd(config_path: &Path, snapshot_every: Option<u64>) -> Result<()> {
    let started = now();
    let config = io::load_config(config_path)?;
    let dir = out_dir(config.out_dir.as_deref());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let grid = config.build_grid()?;
    let field = make_initial_condition(&config.initial_condition, grid.clone())?;
    let mut files = vec!["initial.csv".to_string()];
    io::write_snapshot(&field, 0, &dir.join("initial.csv"))?;

    let mut written = Vec::new();
    let report = run_from(FlowState::new(field), &config, |state| {
        if let Some(every) = snapshot_every {
            if state.step_count % every == 0 {
                let name = format!("snapshot_{:09}.csv", state.step_count);
                io::write_snapshot(&state.field, state.step_count, &dir.join(&name))?;
                written.push(name);
            }
        }
        Ok(())
    })?;
    files.extend(written);

    io::write_snapshot(&report.state.field, report.state.step_count, &dir.join("final.csv"))?;
    io::write_timeseries(&report.audits, &dir.join("timeseries.csv"))?;
    files.extend(["final.csv".to_string(), "timeseries.csv".to_string()]);

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        grid: grid.description(),
        started,
        finished: now(),
        stopped_reason: report.state.stopped_reason,
        steps: report.state.step_count,
        final_time: report.state.field.time,
        cap_fit: report.cap.map(|(fit, _)| fit),
        files,
    };
    manifest.write(&dir.join("manifest.json"))?;

    println!("stopped_reason  {}", report.state.stopped_reason.as_str());
    println!("steps           {}", report.state.step_count);
    println!("time            {}", report.state.field.time);
    if let Some((fit, cap)) = report.cap {
        println!("rho0_fit        {}", fit.rho0_fit);
        println!("deviation       {:e}", fit.deviation);
        println!("cap_radius      {}", cap.cap_radius);
    }
    println!("output          {}", dir.display());
    Ok(())
}

fn verify_cmd(level: LevelArg) -> Result<u8> {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let checks = verify::run_suite(level)?;
    for check in &checks {
        println!("{check}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    Ok(if failed == 0 { 0 } else { EXIT_VERIFY_FAILURE })
}

fn caps_cmd(rho0: f64, n: usize) -> Result<()> {
    if n < 2 {
        anyhow::bail!("--n must be at least 2");
    }
    let cap = cap_from_rho0(rho0)?;
    println!("rho0             {}", cap.rho0);
    println!("cap_radius       {}", cap.cap_radius);
    println!("boundary_height  {}", cap.boundary_height());
    println!("H                {}", cap.mean_curvature(n));
    println!("area             {}", cap_area(rho0, n)?);
    println!("volume           {}", cap_volume(rho0, n)?);
    Ok(())
}
