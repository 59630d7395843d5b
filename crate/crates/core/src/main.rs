use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cavity_chain::config::{parse_config, ObjectiveKind, RunConfig};
use cavity_chain::evolution::evolve;
use cavity_chain::experiments::{
    bottleneck_scan, dat_scan, default_g_grid, default_rate_grid, run_sweep, Axis, Objective, SweepParam,
    SweepResult,
};
use cavity_chain::output::{write_sweep_csv, write_trajectory_csv, RunManifest};

/// Excitation transport through a cavity chain with a sink.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its trajectory.
    Evolve(Common),
    /// Time to reach the target sink population over rate_in x rate_out.
    Bottleneck(Common),
    /// Sink population at a fixed time over rate_out x g.
    Dat(Common),
    /// Sweep the axes given in the configuration.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output prefix; writes <prefix>.csv and <prefix>.manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Evolve(_) => "evolve",
            Command::Bottleneck(_) => "bottleneck",
            Command::Dat(_) => "dat",
            Command::Sweep(_) => "sweep",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Evolve(c) | Command::Bottleneck(c) | Command::Dat(c) | Command::Sweep(c) => c,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let text = fs::read_to_string(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let mut run = parse_config(&text).map_err(|e| format!("{}: {e}", common.config.display()))?;
    if let Some(dt) = common.dt {
        run.dt = dt;
    }
    if let Some(t) = common.t_max {
        run.t_max = t;
    }
    if let Some(t) = common.target {
        run.target = t;
    }
    run.validate().map_err(|e| e.to_string())?;
    Ok(run)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn rate_axis(param: SweepParam) -> Axis {
    Axis::new(param, default_rate_grid()).expect("default grid is valid")
}

fn run(cli: &Cli) -> Result<(), String> {
    let common = cli.command.common();
    let mut config = load(common)?;
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    let csv = with_suffix(&common.out, ".csv");
    let started = Instant::now();
    let (max_trace_drift, min_eigenvalue) = match &cli.command {
        Command::Evolve(_) => {
            let record = evolve(&config.chain, config.t_max, config.dt, config.sample_every).map_err(|e| e.to_string())?;
            write_trajectory_csv(&record, &csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            if record.any_flagged() {
                eprintln!("warning: minimum eigenvalue {:e} below the positivity tolerance", record.min_eigenvalue);
            }
            (record.max_trace_drift, record.min_eigenvalue)
        }
        Command::Bottleneck(_) => {
            let defaults = (rate_axis(SweepParam::RateIn), Some(rate_axis(SweepParam::RateOut)));
            config.objective = ObjectiveKind::TimeToReach;
            let spec = config.sweep_spec(Some(defaults), config.objective()).map_err(|e| e.to_string())?;
            let result = bottleneck_scan(&spec).map_err(|e| e.to_string())?;
            finish_sweep(&mut config, &result, &csv)?
        }
        Command::Dat(_) => {
            let g = Axis::new(SweepParam::G, default_g_grid()).expect("default grid is valid");
            config.objective = ObjectiveKind::SinkAtTime;
            let spec = config.sweep_spec(Some((rate_axis(SweepParam::RateOut), Some(g))), config.objective()).map_err(|e| e.to_string())?;
            let result = dat_scan(&spec).map_err(|e| e.to_string())?;
            finish_sweep(&mut config, &result, &csv)?
        }
        Command::Sweep(_) => {
            let spec = config.sweep_spec(None, config.objective()).map_err(|e| e.to_string())?;
            let result = run_sweep(&spec).map_err(|e| e.to_string())?;
            finish_sweep(&mut config, &result, &csv)?
        }
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        warnings: config.warnings(),
        config,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock: started.elapsed(),
        max_trace_drift,
        min_eigenvalue,
    };
    let path = with_suffix(&common.out, ".manifest");
    manifest.write(&path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes the sweep CSV and records the axes actually used in `config`.
fn finish_sweep(config: &mut RunConfig, result: &SweepResult, csv: &Path) -> Result<(f64, f64), String> {
    write_sweep_csv(result, csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    config.axis1 = Some(result.spec.axis1.clone());
    config.axis2 = result.spec.axis2.clone();
    if let Objective::SinkAtTime { t } = result.spec.objective {
        config.objective_time = Some(t);
    }
    Ok((result.max_trace_drift, result.min_eigenvalue))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
