//! Command-line front end: run a scenario, sweep gust frequencies, compare
//! controllers, or certify a logged run.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime divergence or
//! controller failure, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use wingload::harness::{
    compare_controllers, run_scenario, sweep, Condition, ControllerKind, HarnessError, ScenarioConfig,
};
use wingload::indi::{certify_log, CertificateLog};

#[derive(Parser)]
#[command(name = "wingload", version, about = "Load-alleviation scenarios on the morphing-wing twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with its open-loop partner; writes <name>.csv,
    /// <name>_metrics.json and, for incremental controllers, <name>_diag.json.
    Run(Common),
    /// Repeat a gust scenario at each frequency; writes <name>_sweep.csv and
    /// <name>_sweep.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Gust frequencies in Hz, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
    },
    /// Score several controllers under each condition; writes
    /// <name>_compare.csv and <name>_compare.json.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Controllers, comma separated (open-loop, indi-pi, indi-qp, indi-qp-v, lqg).
        #[arg(long, value_delimiter = ',', default_value = "indi-qp-v,lqg")]
        controllers: Vec<ControllerKind>,
        /// Conditions, comma separated (no-noise, noise, noise+fault+backlash).
        #[arg(long, value_delimiter = ',', value_parser = parse_condition, default_value = "no-noise,noise,noise+fault+backlash")]
        conditions: Vec<Condition>,
    },
    /// Evaluate the bound certificates of a <name>_diag.json log and print them.
    Certify {
        log: PathBuf,
    },
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    Condition::ALL
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown condition '{s}' (expected no-noise, noise or noise+fault+backlash)"))
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure { code: e.exit_code() as u8, error: e.into() }
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: e.into() }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))
        .map_err(|error| {
            let code = match error.downcast_ref::<HarnessError>() {
                Some(e) => e.exit_code() as u8,
                None => 1,
            };
            Failure { code, error }
        })?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))
        .map_err(io_failure)?;
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(io_failure)?;
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(io_failure)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(io_failure)
}

fn fmt4(v: [f64; 4]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(",")
}

fn run(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let csv = common.out.join(format!("{}.csv", cfg.name));
    let result = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            if let Some(partial) = e.partial_log() {
                partial.emit_csv(&csv)?;
                eprintln!("partial log written to {}", csv.display());
            }
            return Err(e.into());
        }
    };
    result.closed.log.emit_csv(&csv)?;
    write_json(&common.out.join(format!("{}_metrics.json", cfg.name)), &result.metrics)?;
    if let Some(diag) = &result.closed.certificate {
        write_json(&common.out.join(format!("{}_diag.json", cfg.name)), diag)?;
    }
    let r = result.metrics.reduction;
    println!("{} ({}): reduction fy_max {:.2} %, fy_rms {:.2} %, mx_max {:.2} %, mx_rms {:.2} %", cfg.name, cfg.controller, r.fy_max, r.fy_rms, r.mx_max, r.mx_rms);
    let v = result.metrics.violations;
    println!(
        "allocator: max iterations {}, max |eps_ca| {:.3e}; violations position {} relative {} rate {}",
        result.metrics.allocation.max_iterations, result.metrics.allocation.max_eps_ca, v.position, v.relative, v.rate
    );
    Ok(())
}

fn run_sweep(common: &Common, freqs: &[f64]) -> Result<(), Failure> {
    let cfg = load(common)?;
    if cfg.gust.is_none() {
        return Err(Failure { code: 1, error: anyhow::anyhow!("sweep needs a scenario with a gust") });
    }
    let points = sweep(&cfg, freqs)?;
    let mut table = String::from("frequency,fy_max,fy_rms,mx_max,mx_rms\n");
    for p in &points {
        let line = format!("{},{}", p.frequency, fmt4(p.metrics.reduction.as_array()));
        println!("{line}");
        table.push_str(&line);
        table.push('\n');
    }
    write_text(&common.out.join(format!("{}_sweep.csv", cfg.name)), &table)?;
    write_json(&common.out.join(format!("{}_sweep.json", cfg.name)), &points)
}

fn run_compare(common: &Common, controllers: &[ControllerKind], conditions: &[Condition]) -> Result<(), Failure> {
    let cfg = load(common)?;
    let rows = compare_controllers(&cfg, controllers, conditions)?;
    let mut table = String::from("condition,controller,fy_max,fy_rms,mx_max,mx_rms\n");
    for row in &rows {
        for e in &row.entries {
            let line = format!("{},{},{}", row.condition.name(), e.controller, fmt4(e.reduction.as_array()));
            println!("{line}");
            table.push_str(&line);
            table.push('\n');
        }
    }
    write_text(&common.out.join(format!("{}_compare.csv", cfg.name)), &table)?;
    write_json(&common.out.join(format!("{}_compare.json", cfg.name)), &rows)
}

fn run_certify(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(io_failure)?;
    let log: CertificateLog = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|error| Failure { code: 1, error })?;
    let cert = certify_log(&log).map_err(|e| Failure { code: 2, error: e.into() })?;
    println!("{}", serde_json::to_string_pretty(&cert).map_err(io_failure)?);
    println!("certificate {}", if cert.passed() { "holds" } else { "does not hold" });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => run(common),
        Command::Sweep { common, freqs } => run_sweep(common, freqs),
        Command::Compare { common, controllers, conditions } => run_compare(common, controllers, conditions),
        Command::Certify { log } => run_certify(log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
