//! Outer loop of the sum-rate phase.
//!
//! Each iteration recomputes every MMSE receive filter from the current
//! beams, freezes a snapshot, lets every cell solve its own subproblem
//! against that snapshot (concurrently, Jacobi style), commits all new
//! beams at once and records the true weighted sum-rate.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{
    random_feasible_beamformers, round_robin_assignment, Assignment, BeamformerSet, ChannelSet, FilterSet, SystemConfig,
};
use crate::error::{Result, WsrmError};
use crate::ia::{self, IaResult};
use crate::linalg::CMat;
use crate::rate::{self, RateReport};
use crate::subproblem::{self, CovarianceSet, InnerStep, SolverOptions, INIT_JITTER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Ia,
    Random,
}

impl InitMode {
    pub const ALL: [InitMode; 2] = [InitMode::Ia, InitMode::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Ia => "ia",
            InitMode::Random => "random",
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMode {
    type Err = WsrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ia" => Ok(InitMode::Ia),
            "random" => Ok(InitMode::Random),
            other => Err(WsrmError::Config(format!("unknown init mode {other:?} (expected ia or random)"))),
        }
    }
}

/// Counts messages passed between per-cell solver contexts, indexed by
/// `(from, to)`.
#[derive(Debug)]
pub struct ExchangeLog {
    cells: usize,
    counts: Vec<AtomicU64>,
}

impl ExchangeLog {
    pub fn new(cells: usize) -> Self {
        Self { cells, counts: (0..cells * cells).map(|_| AtomicU64::new(0)).collect() }
    }

    pub fn record(&self, from: usize, to: usize) {
        self.counts[from * self.cells + to].fetch_add(1, Ordering::Relaxed);
    }

    pub fn between(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.cells + to].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }
}

/// Global state frozen at the start of an outer iteration.
#[derive(Debug)]
struct Snapshot<'a> {
    channels: &'a ChannelSet,
    assignment: &'a Assignment,
    config: &'a SystemConfig,
    beams: BeamformerSet,
    filters: FilterSet,
}

/// What one cell sees while it solves: its index, the read-only snapshot,
/// and the exchange log any peer-to-peer message would have to go through.
struct CellContext<'a> {
    cell: usize,
    snapshot: &'a Snapshot<'a>,
    #[allow(dead_code)]
    exchange: &'a ExchangeLog,
}

struct CellOutcome {
    beams: Vec<CMat>,
    covs: CovarianceSet,
    trace: Vec<InnerStep>,
}

impl CellContext<'_> {
    fn solve(&self, opts: &SolverOptions) -> Result<CellOutcome> {
        let s = self.snapshot;
        let data = subproblem::build_subproblem(s.channels, &s.beams, &s.filters, s.assignment, s.config, self.cell)?;
        let init = CovarianceSet::from_beams(s.beams.0.cell(self.cell), INIT_JITTER);
        let out = subproblem::solve(&data, &init, s.config.power_budget(), opts)?;
        let beams = out.covs.0.iter().map(|w| subproblem::recover_beamformer(w, s.config.rx_antennas)).collect();
        Ok(CellOutcome { beams, covs: out.covs, trace: out.trace })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// 1-based outer iteration.
    pub iteration: usize,
    pub cell_wsr: Vec<f64>,
    pub wsr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTraceRow {
    pub cell: usize,
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub objective: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct RunState {
    pub beams: BeamformerSet,
    pub filters: FilterSet,
    /// Latest solved covariances per cell; empty until the first iteration.
    pub covs: Vec<Option<CovarianceSet>>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub converged: bool,
    pub iterations_used: usize,
    pub init_mode: InitMode,
    /// Peer-to-peer messages between cell solver contexts after
    /// initialization.
    pub messages_exchanged: u64,
    pub solver_failures: usize,
    pub solver_trace: Vec<SolverTraceRow>,
    pub report: Option<RateReport>,
    pub ia: Option<IaResult>,
}

impl RunState {
    pub fn new(beams: BeamformerSet, filters: FilterSet, init_mode: InitMode) -> Self {
        let cells = beams.num_cells();
        Self {
            beams,
            filters,
            covs: vec![None; cells],
            trajectory: Vec::new(),
            converged: false,
            iterations_used: 0,
            init_mode,
            messages_exchanged: 0,
            solver_failures: 0,
            solver_trace: Vec::new(),
            report: None,
            ia: None,
        }
    }

    pub fn final_wsr(&self) -> Option<f64> {
        self.trajectory.last().map(|p| p.wsr)
    }
}

/// One outer iteration.
pub fn wsrm_iteration(
    mut state: RunState,
    channels: &ChannelSet,
    config: &SystemConfig,
    assignment: &Assignment,
    opts: &SolverOptions,
) -> Result<RunState> {
    let iteration = state.iterations_used + 1;
    let filters = rate::mmse_filters(channels, &state.beams, assignment)?;
    let snapshot = Snapshot { channels, assignment, config, beams: state.beams.clone(), filters };
    let exchange = ExchangeLog::new(config.num_cells);

    let outcomes: Vec<Result<CellOutcome>> = (0..config.num_cells)
        .into_par_iter()
        .map(|cell| CellContext { cell, snapshot: &snapshot, exchange: &exchange }.solve(opts))
        .collect();

    for (cell, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(out) => {
                for (n, v) in out.beams.into_iter().enumerate() {
                    state.beams.set(cell, n, v);
                }
                state.solver_trace.extend(out.trace.iter().map(|s| SolverTraceRow {
                    cell,
                    outer_iter: iteration,
                    inner_iter: s.inner_iter,
                    objective: s.objective,
                    step: s.step,
                }));
                state.covs[cell] = Some(out.covs);
            }
            Err(e) => {
                log::warn!("cell {cell}, iteration {iteration}: subproblem failed ({e}); keeping previous beams");
                state.solver_failures += 1;
            }
        }
    }
    state.filters = snapshot.filters;
    state.messages_exchanged += exchange.total();

    let report = rate::weighted_sum_rate(channels, &state.beams, config, assignment)?;
    state.trajectory.push(TrajectoryPoint { iteration, cell_wsr: report.cell_wsr.clone(), wsr: report.wsr });
    state.report = Some(report);
    state.iterations_used = iteration;
    Ok(state)
}

/// Starting beams for a run, plus the IA outcome when applicable.
pub fn initial_beams(
    channels: &ChannelSet,
    config: &SystemConfig,
    mode: InitMode,
) -> Result<(BeamformerSet, Option<IaResult>)> {
    match mode {
        InitMode::Ia => {
            let res = ia::run_ia_phase(channels, config)?;
            Ok((res.beams.clone(), Some(res)))
        }
        InitMode::Random => Ok((random_feasible_beamformers(config)?, None)),
    }
}

/// Full two-phase run: initialization, then outer iterations until the
/// global weighted sum-rate changes by at most `convergence_tol` between
/// successive iterations or `wsrm_max_iters` is reached.
pub fn run(channels: &ChannelSet, config: &SystemConfig, mode: InitMode, opts: &SolverOptions) -> Result<RunState> {
    config.validate()?;
    opts.validate()?;
    let assignment = round_robin_assignment(config)?;
    let (beams, ia_result) = initial_beams(channels, config, mode)?;
    let filters = rate::mmse_filters(channels, &beams, &assignment)?;
    let mut state = RunState::new(beams, filters, mode);
    state.ia = ia_result;

    for _ in 0..config.wsrm_max_iters {
        state = wsrm_iteration(state, channels, config, &assignment, opts)?;
        let t = &state.trajectory;
        if t.len() >= 2 && (t[t.len() - 1].wsr - t[t.len() - 2].wsr).abs() <= config.convergence_tol {
            state.converged = true;
            break;
        }
    }
    if let Some(rep) = state.report.as_mut() {
        rep.trajectory = state.trajectory.iter().map(|p| p.wsr).collect();
    }
    Ok(state)
}
