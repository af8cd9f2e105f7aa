//! Seeded experiment drivers: convergence comparison, power sweep and a
//! fully traced single run. Every driver writes its resolved
//! configuration next to its CSV output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{round_robin_assignment, ChannelSet, SystemConfig};
use crate::coordinator::{self, InitMode, RunState};
use crate::error::{Result, WsrmError};
use crate::report::{self, RunSummary, SweepPoint};
use crate::subproblem::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Convergence,
    PowerSweep,
    SingleRun,
}

impl FromStr for Preset {
    type Err = WsrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(Preset::Convergence),
            "power_sweep" | "power-sweep" => Ok(Preset::PowerSweep),
            "single_run" | "single-run" | "single" => Ok(Preset::SingleRun),
            other => Err(WsrmError::Config(format!("unknown preset {other:?}"))),
        }
    }
}

/// 5, 10, ..., 30 dBW.
pub fn default_power_sweep() -> Vec<f64> {
    (1..=6).map(|i| 5.0 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub init_modes: Vec<InitMode>,
    pub power_sweep_dbw: Vec<f64>,
    pub out_dir: PathBuf,
    pub system: SystemConfig,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ExperimentSpec {
    /// Defaults for a preset: the reference two-cell system, both init
    /// modes, 20 seeds for the studies and one for a single run.
    pub fn preset(preset: Preset) -> Self {
        let seeds = match preset {
            Preset::SingleRun => vec![0],
            _ => (0..20).collect(),
        };
        let system = match preset {
            Preset::PowerSweep => SystemConfig::default().with_unit_weights(),
            _ => SystemConfig::default(),
        };
        Self {
            preset,
            seeds,
            init_modes: InitMode::ALL.to_vec(),
            power_sweep_dbw: default_power_sweep(),
            out_dir: PathBuf::from("out"),
            system,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.solver.validate()?;
        if self.seeds.is_empty() {
            return Err(WsrmError::Config("seed list is empty".into()));
        }
        if self.init_modes.is_empty() {
            return Err(WsrmError::Config("init mode list is empty".into()));
        }
        if self.preset == Preset::PowerSweep {
            if self.power_sweep_dbw.is_empty() {
                return Err(WsrmError::Config("power sweep list is empty".into()));
            }
            if let Some(p) = self.power_sweep_dbw.iter().find(|p| !p.is_finite()) {
                return Err(WsrmError::Config(format!("power sweep value {p} is not finite")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| WsrmError::Config(e.to_string()))
    }

    fn config_for_seed(&self, seed: u64) -> SystemConfig {
        SystemConfig { rng_seed: seed, ..self.system.clone() }
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_with(
    path: PathBuf,
    files: &mut Vec<PathBuf>,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut out = create_file(&path)?;
    f(&mut out)?;
    out.flush()?;
    files.push(path);
    Ok(())
}

fn prepare(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let mut files = Vec::new();
    write_with(spec.out_dir.join("resolved_config.toml"), &mut files, |w| Ok(w.write_all(spec.to_toml().as_bytes())?))?;
    Ok(files)
}

pub fn trajectory_file_name(seed: u64, mode: InitMode) -> String {
    format!("trajectory_seed{seed}_{mode}.csv")
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub files: Vec<PathBuf>,
    pub runs: Vec<(RunSummary, RunState)>,
}

impl ConvergenceOutcome {
    pub fn summaries(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().map(|(s, _)| s)
    }
}

fn summarize(seed: u64, state: &RunState) -> RunSummary {
    RunSummary {
        seed,
        mode: state.init_mode,
        converged: state.converged,
        iterations: state.iterations_used,
        final_wsr: state.final_wsr().unwrap_or(0.0),
        messages_exchanged: state.messages_exchanged,
    }
}

/// Every `(seed, mode)` pair run to convergence; one trajectory file per
/// pair plus `summary.csv`.
pub fn run_convergence_experiment(spec: &ExperimentSpec) -> Result<ConvergenceOutcome> {
    let mut files = prepare(spec)?;
    let jobs: Vec<(u64, InitMode)> =
        spec.seeds.iter().flat_map(|&s| spec.init_modes.iter().map(move |&m| (s, m))).collect();
    let runs: Vec<(RunSummary, RunState)> = jobs
        .par_iter()
        .map(|&(seed, mode)| {
            let cfg = spec.config_for_seed(seed);
            let channels = ChannelSet::generate(&cfg);
            let state = coordinator::run(&channels, &cfg, mode, &spec.solver)?;
            Ok((summarize(seed, &state), state))
        })
        .collect::<Result<_>>()?;
    for (summary, state) in &runs {
        let path = spec.out_dir.join(trajectory_file_name(summary.seed, summary.mode));
        write_with(path, &mut files, |w| report::write_trajectory(w, state))?;
    }
    let rows: Vec<RunSummary> = runs.iter().map(|(s, _)| s.clone()).collect();
    write_with(spec.out_dir.join("summary.csv"), &mut files, |w| report::write_summary(w, &rows))?;
    Ok(ConvergenceOutcome { files, runs })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub files: Vec<PathBuf>,
    pub points: Vec<SweepPoint>,
}

impl SweepOutcome {
    pub fn point(&self, power_dbw: f64, mode: InitMode) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.power_dbw == power_dbw && p.mode == mode)
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Converged unweighted sum-rate versus transmit power, averaged over
/// seeds, written to `power_sweep.csv`.
pub fn run_power_sweep(spec: &ExperimentSpec) -> Result<SweepOutcome> {
    let mut files = prepare(spec)?;
    let jobs: Vec<(usize, u64, InitMode)> = (0..spec.power_sweep_dbw.len())
        .flat_map(|p| spec.seeds.iter().flat_map(move |&s| spec.init_modes.iter().map(move |&m| (p, s, m))))
        .collect();
    let rates: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, seed, mode)| {
            let cfg = SystemConfig { power_budget_dbw: spec.power_sweep_dbw[p], ..spec.config_for_seed(seed) }
                .with_unit_weights();
            let channels = ChannelSet::generate(&cfg);
            let state = coordinator::run(&channels, &cfg, mode, &spec.solver)?;
            Ok(state.report.as_ref().map_or(0.0, |r| r.sum_rate()))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for (p, &power_dbw) in spec.power_sweep_dbw.iter().enumerate() {
        for &mode in &spec.init_modes {
            let per_seed: Vec<f64> =
                jobs.iter().zip(&rates).filter(|((pi, _, m), _)| *pi == p && *m == mode).map(|(_, &r)| r).collect();
            let (mean_sumrate, stderr) = mean_and_stderr(&per_seed);
            points.push(SweepPoint { power_dbw, mode, mean_sumrate, stderr, per_seed });
        }
    }
    write_with(spec.out_dir.join("power_sweep.csv"), &mut files, |w| report::write_sweep(w, &points))?;
    Ok(SweepOutcome { files, points })
}

#[derive(Debug, Clone)]
pub struct SingleOutcome {
    pub files: Vec<PathBuf>,
    pub state: RunState,
}

/// One seeded run (first seed, first mode) with every trace written:
/// channels, IA leakage (IA mode only), solver iterates, trajectory and
/// final per-link rates.
pub fn run_single(spec: &ExperimentSpec) -> Result<SingleOutcome> {
    let mut files = prepare(spec)?;
    let seed = spec.seeds[0];
    let mode = spec.init_modes[0];
    let cfg = spec.config_for_seed(seed);
    let channels = ChannelSet::generate(&cfg);
    let assignment = round_robin_assignment(&cfg)?;
    let state = coordinator::run(&channels, &cfg, mode, &spec.solver)?;
    let dir = &spec.out_dir;

    write_with(dir.join("channels.txt"), &mut files, |w| channels.write_dump(w))?;
    if let Some(ia) = &state.ia {
        write_with(dir.join("ia_leakage.csv"), &mut files, |w| report::write_leakage_trace(w, &ia.trace))?;
    }
    write_with(dir.join("solver_trace.csv"), &mut files, |w| report::write_solver_trace(w, &state.solver_trace))?;
    write_with(dir.join("trajectory.csv"), &mut files, |w| report::write_trajectory(w, &state))?;
    if let Some(rep) = &state.report {
        write_with(dir.join("rates.csv"), &mut files, |w| report::write_rate_report(w, rep, &assignment))?;
    }
    Ok(SingleOutcome { files, state })
}

/// Runs whichever driver the preset names and returns the written files.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    Ok(match spec.preset {
        Preset::Convergence => run_convergence_experiment(spec)?.files,
        Preset::PowerSweep => run_power_sweep(spec)?.files,
        Preset::SingleRun => run_single(spec)?.files,
    })
}
