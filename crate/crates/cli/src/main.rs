//! `wsrm`: experiment runner for distributed weighted sum-rate
//! maximization.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wsrm_core::coordinator::InitMode;
use wsrm_core::experiment::{self, ExperimentSpec, Preset};
use wsrm_core::WsrmError;

#[derive(Debug, Parser)]
#[command(name = "wsrm", version, about = "Run weighted sum-rate maximization experiments and write CSV results")]
struct Cli {
    /// convergence | power_sweep | single_run
    #[arg(long, default_value = "single_run")]
    preset: String,

    /// TOML experiment file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    subcarriers: Option<usize>,
    #[arg(long = "power-dbw", allow_hyphen_values = true)]
    power_dbw: Option<f64>,

    /// Comma-separated, cell-major (cell 0 users first).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,

    /// Single seed; shorthand for `--seeds <n>`.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,

    /// Comma-separated seeds or a half-open range `a..b`.
    #[arg(long)]
    seeds: Option<String>,

    /// ia | random | both
    #[arg(long)]
    init: Option<String>,

    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "ia-iters")]
    ia_iters: Option<usize>,
    #[arg(long = "ia-restarts")]
    ia_restarts: Option<usize>,

    /// Comma-separated transmit powers in dBW for the power sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep: Option<Vec<f64>>,

    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, WsrmError> {
    let bad = || WsrmError::Config(format!("cannot parse seeds {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn parse_modes(text: &str) -> Result<Vec<InitMode>, WsrmError> {
    if text == "both" {
        return Ok(InitMode::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

fn resolve(cli: &Cli) -> Result<ExperimentSpec, WsrmError> {
    let preset: Preset = cli.preset.parse()?;
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| WsrmError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentSpec::from_toml(&text)?
        }
        None => ExperimentSpec::preset(preset),
    };
    spec.preset = preset;

    let sys = &mut spec.system;
    let dims_changed = cli.cells.is_some() || cli.users.is_some();
    if let Some(v) = cli.cells {
        sys.num_cells = v;
    }
    if let Some(v) = cli.users {
        sys.users_per_cell = v;
    }
    if let Some(v) = cli.nt {
        sys.tx_antennas = v;
    }
    if let Some(v) = cli.nr {
        sys.rx_antennas = v;
    }
    if let Some(v) = cli.subcarriers {
        sys.num_subcarriers = v;
    }
    if let Some(v) = cli.power_dbw {
        sys.power_budget_dbw = v;
    }
    match &cli.weights {
        Some(w) => sys.user_weights = w.clone(),
        None if dims_changed && sys.user_weights.len() != sys.num_users() => {
            log::warn!("user count changed without --weights; using unit weights");
            sys.user_weights = vec![1.0; sys.num_users()];
        }
        None => {}
    }
    if let Some(v) = cli.tol {
        sys.convergence_tol = v;
    }
    if let Some(v) = cli.max_iters {
        sys.wsrm_max_iters = v;
    }
    if let Some(v) = cli.ia_iters {
        sys.ia_iters = v;
    }
    if let Some(v) = cli.ia_restarts {
        sys.ia_restarts = v;
    }
    if let Some(s) = cli.seed {
        spec.seeds = vec![s];
    }
    if let Some(s) = &cli.seeds {
        spec.seeds = parse_seeds(s)?;
    }
    if let Some(m) = &cli.init {
        spec.init_modes = parse_modes(m)?;
    }
    if let Some(p) = &cli.sweep {
        spec.power_sweep_dbw = p.clone();
    }
    if let Some(o) = &cli.out {
        spec.out_dir = o.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let spec = match resolve(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match experiment::run(&spec) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(WsrmError::Config(msg)) => {
            eprintln!("error: configuration: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
