//! Per-cell convex subproblem over transmit covariances.
//!
//! With the other cells' beamformers and every receive filter held fixed,
//! cell `m` maximizes
//!
//! ```text
//! f(W) = sum_n  w_n log2 det(A_n W_n A_n^H + eps I) - tr(P_n W_n) / ln 2
//! ```
//!
//! over `W_n >= 0`, `sum_n tr(W_n) <= P_max`, where `A_n = U^H H` is the
//! filtered signal map and `P_n` collects the trace-linearized leakage the
//! cell inflicts on the other cells' users. The rank constraint is dropped;
//! beamformers are recovered by keeping the `Nr` dominant eigenpairs.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel_model::{Assignment, BeamformerSet, ChannelSet, FilterSet, SystemConfig};
use crate::error::{Result, WsrmError};
use crate::linalg::{self, hermitize, identity, zeros, CMat};
use crate::rate;

pub const DEFAULT_REGULARIZER: f64 = 1e-9;

/// Diagonal loading used when seeding covariances from beamformers.
pub const INIT_JITTER: f64 = 1e-6;

/// A trial point must keep every `lambda_min(A_n W_n A_n^H)` at or above
/// this fraction of its current value.
pub const BOUNDARY_FRACTION: f64 = 0.1;

/// Transmit covariances `W[n]` of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet(pub Vec<CMat>);

impl CovarianceSet {
    /// `W_n = V_n V_n^H + jitter I`.
    pub fn from_beams(beams: &[CMat], jitter: f64) -> Self {
        Self(
            beams
                .iter()
                .map(|v| hermitize(&(v * v.adjoint())) + identity(v.nrows()) * Complex64::new(jitter, 0.0))
                .collect(),
        )
    }

    pub fn total_trace(&self) -> f64 {
        self.0.iter().map(linalg::trace_re).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn axpy(&self, t: f64, dir: &[CMat]) -> Self {
        let t = Complex64::new(t, 0.0);
        Self(self.0.iter().zip(dir).map(|(w, g)| w + g * t).collect())
    }

    fn inner(&self, other: &[CMat]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| linalg::inner_re(a, b)).sum()
    }

    fn diff(&self, other: &Self) -> Vec<CMat> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }
}

/// Interference a cell's transmission on subcarrier `n` causes at one
/// victim link.
#[derive(Debug, Clone)]
pub struct LeakMap {
    pub victim: usize,
    pub weight: f64,
    /// `B = U_victim^H H_{m -> victim}`, `Nr x Nt`.
    pub map: CMat,
    /// Victim's leakage-plus-noise excluding this cell.
    pub leakage_plus_noise: CMat,
}

#[derive(Debug, Clone)]
pub struct SubcarrierTerm {
    pub weight: f64,
    /// `A = U^H H`, `Nr x Nt`.
    pub signal_map: CMat,
    /// `P = sum_victims w' B^H N^{-1} B`, `Nt x Nt` Hermitian PSD.
    pub penalty: CMat,
    pub leaks: Vec<LeakMap>,
}

#[derive(Debug, Clone)]
pub struct SubproblemData {
    pub cell: usize,
    pub terms: Vec<SubcarrierTerm>,
    pub regularizer: f64,
}

impl SubproblemData {
    /// Data with explicit signal maps, weights and penalties; leak maps are
    /// left empty.
    pub fn from_parts(cell: usize, parts: Vec<(f64, CMat, CMat)>) -> Self {
        let terms = parts
            .into_iter()
            .map(|(weight, signal_map, penalty)| SubcarrierTerm { weight, signal_map, penalty, leaks: Vec::new() })
            .collect();
        Self { cell, terms, regularizer: DEFAULT_REGULARIZER }
    }

    pub fn tx_antennas(&self) -> usize {
        self.terms.first().map_or(0, |t| t.signal_map.ncols())
    }
}

pub fn build_subproblem(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    config: &SystemConfig,
    cell: usize,
) -> Result<SubproblemData> {
    let nt = channels.tx_antennas();
    let mut terms = Vec::with_capacity(channels.num_subcarriers());
    for n in 0..channels.num_subcarriers() {
        let k = assignment.user(cell, n);
        let signal_map = filters.get(cell, n).adjoint() * channels.get(cell, cell, k, n);
        let mut penalty = zeros(nt, nt);
        let mut leaks = Vec::new();
        for victim in (0..channels.num_cells()).filter(|&i| i != cell) {
            let kv = assignment.user(victim, n);
            let weight = config.weight(victim, kv);
            let map = filters.get(victim, n).adjoint() * channels.get(cell, victim, kv, n);
            let lpn = rate::aggregate_leakage_plus_noise(channels, beams, filters, assignment, victim, n, cell)?;
            let n_inv_b = linalg::solve_hpd(&lpn, &map)?;
            penalty += (map.adjoint() * n_inv_b) * Complex64::new(weight, 0.0);
            leaks.push(LeakMap { victim, weight, map, leakage_plus_noise: lpn });
        }
        terms.push(SubcarrierTerm { weight: config.weight(cell, k), signal_map, penalty: hermitize(&penalty), leaks });
    }
    Ok(SubproblemData { cell, terms, regularizer: DEFAULT_REGULARIZER })
}

fn loaded_signal(term: &SubcarrierTerm, w: &CMat, eps: f64) -> CMat {
    let a = &term.signal_map;
    hermitize(&(a * w * a.adjoint())) + identity(a.nrows()) * Complex64::new(eps, 0.0)
}

/// `lambda_min(A_n W_n A_n^H)` per subcarrier, without the regularizer.
fn signal_floor(data: &SubproblemData, covs: &CovarianceSet) -> Vec<f64> {
    data.terms
        .iter()
        .zip(&covs.0)
        .map(|(term, w)| linalg::eigh(&loaded_signal(term, w, 0.0)).values.first().copied().unwrap_or(0.0))
        .collect()
}

fn objective_with(data: &SubproblemData, covs: &CovarianceSet, eps: f64) -> Result<f64> {
    check_len(data, covs)?;
    let mut total = 0.0;
    for (n, (term, w)) in data.terms.iter().zip(&covs.0).enumerate() {
        let ld = linalg::ln_det_hpd(&loaded_signal(term, w, eps))
            .map_err(|_| WsrmError::SingularSignal { cell: data.cell, subcarrier: n })?;
        total += (term.weight * ld - linalg::inner_re(&term.penalty, w)) / LN_2;
    }
    Ok(total)
}

fn gradient_with(data: &SubproblemData, covs: &CovarianceSet, eps: f64) -> Result<Vec<CMat>> {
    check_len(data, covs)?;
    data.terms
        .iter()
        .zip(&covs.0)
        .enumerate()
        .map(|(n, (term, w))| {
            let a = &term.signal_map;
            let m_inv_a = linalg::solve_hpd(&loaded_signal(term, w, eps), a)
                .map_err(|_| WsrmError::SingularSignal { cell: data.cell, subcarrier: n })?;
            let g = (a.adjoint() * m_inv_a) * Complex64::new(term.weight, 0.0) - &term.penalty;
            Ok(hermitize(&g) * Complex64::new(1.0 / LN_2, 0.0))
        })
        .collect()
}

fn check_len(data: &SubproblemData, covs: &CovarianceSet) -> Result<()> {
    if data.terms.len() != covs.len() {
        return Err(WsrmError::ShapeMismatch {
            expected: format!("{} covariances", data.terms.len()),
            got: covs.len().to_string(),
        });
    }
    Ok(())
}

/// Relaxed concave objective at `covs`, using `data.regularizer`.
pub fn objective(data: &SubproblemData, covs: &CovarianceSet) -> Result<f64> {
    objective_with(data, covs, data.regularizer)
}

/// Hermitian gradient `G_n` with `df = sum_n Re tr(G_n dW_n)`:
/// `(w / ln 2) A^H (A W A^H + eps I)^{-1} A - P / ln 2`.
pub fn gradient(data: &SubproblemData, covs: &CovarianceSet) -> Result<Vec<CMat>> {
    gradient_with(data, covs, data.regularizer)
}

/// Euclidean projection onto `{W_n >= 0, sum_n tr W_n <= budget}`.
///
/// All eigenvalues share one water level: `lambda -> max(lambda - tau, 0)`
/// with `tau = 0` when the clipped spectrum already fits the budget.
pub fn project_feasible(covs: &CovarianceSet, budget: f64) -> CovarianceSet {
    let eigs: Vec<linalg::Eigh> = covs.0.iter().map(linalg::eigh).collect();
    let all: Vec<f64> = eigs.iter().flat_map(|e| e.values.iter().copied()).collect();
    let clipped_sum: f64 = all.iter().map(|&l| l.max(0.0)).sum();
    let already_psd = all.iter().all(|&l| l >= 0.0);
    if already_psd && clipped_sum <= budget {
        return CovarianceSet(covs.0.iter().map(hermitize).collect());
    }
    let tau = if clipped_sum <= budget { 0.0 } else { water_level(&all, budget) };
    CovarianceSet(
        eigs.iter()
            .map(|e| {
                let vals: Vec<f64> = e.values.iter().map(|&l| (l - tau).max(0.0)).collect();
                e.rebuild(&vals)
            })
            .collect(),
    )
}

/// `tau >= 0` with `sum max(lambda_i - tau, 0) = budget`, assuming the
/// positive part exceeds the budget.
fn water_level(values: &[f64], budget: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|&l| l > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (i, &l) in sorted.iter().enumerate() {
        prefix += l;
        let candidate = (prefix - budget) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= candidate {
            tau = candidate;
            break;
        }
    }
    tau.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_inner_iters: usize,
    pub step_init: f64,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub regularizer: f64,
    pub objective_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_inner_iters: 200,
            step_init: 1.0,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            regularizer: DEFAULT_REGULARIZER,
            objective_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_inner_iters > 0
            && self.step_init > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0
            && self.regularizer >= 0.0
            && self.objective_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(WsrmError::Config(format!("invalid solver options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStep {
    pub inner_iter: usize,
    pub objective: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub covs: CovarianceSet,
    pub objective: f64,
    /// Accepted iterates; entry 0 is the projected starting point.
    pub trace: Vec<InnerStep>,
}

/// Projected gradient ascent with Armijo backtracking.
///
/// The first trial step is `step_init`; later trial steps are the
/// Barzilai-Borwein ratio `<s, s> / <s, y>` of the last accepted move `s`
/// and gradient change `y`, clamped to `[1e-12, 1e12] * step_init`. Each
/// trial is halved (by `backtrack`) until it passes the Armijo test and does
/// not lower the objective. Stops when an accepted step improves the
/// objective by less than `objective_tol`, when backtracking underflows, or
/// after `max_inner_iters` steps.
pub fn solve(data: &SubproblemData, init: &CovarianceSet, budget: f64, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let eps = opts.regularizer;
    let mut w = project_feasible(init, budget);
    let mut f = match objective_with(data, &w, eps) {
        Ok(v) if v.is_finite() => v,
        Ok(v) => return Err(WsrmError::NonFiniteObjective(v)),
        Err(e) => return Err(e),
    };
    let mut trace = vec![InnerStep { inner_iter: 0, objective: f, step: 0.0 }];
    let mut g = gradient_with(data, &w, eps)?;
    let mut floor = signal_floor(data, &w);
    let mut trial = opts.step_init;
    for iter in 1..=opts.max_inner_iters {
        let mut step = trial;
        let mut accepted = None;
        while step > 1e-16 * opts.step_init {
            let cand = project_feasible(&w.axpy(step, &g), budget);
            let cand_floor = signal_floor(data, &cand);
            let interior = cand_floor.iter().zip(&floor).all(|(new, old)| *new >= BOUNDARY_FRACTION * old);
            let rise = CovarianceSet(cand.diff(&w)).inner(&g);
            if let (true, Ok(fc)) = (interior, objective_with(data, &cand, eps)) {
                if fc.is_finite() && fc >= f && fc >= f + opts.sufficient_decrease * rise {
                    accepted = Some((cand, fc, cand_floor));
                    break;
                }
            }
            step *= opts.backtrack;
        }
        let Some((cand, fc, cand_floor)) = accepted else { break };
        let g_next = gradient_with(data, &cand, eps)?;
        let s = cand.diff(&w);
        let y: Vec<CMat> = g.iter().zip(&g_next).map(|(a, b)| a - b).collect();
        let ss = CovarianceSet(s.clone()).inner(&s);
        let sy = CovarianceSet(s).inner(&y);
        trial = if sy > 0.0 {
            (ss / sy).clamp(1e-12 * opts.step_init, 1e12 * opts.step_init)
        } else {
            step / opts.backtrack
        };

        let gain = fc - f;
        w = cand;
        f = fc;
        g = g_next;
        floor = cand_floor;
        trace.push(InnerStep { inner_iter: iter, objective: f, step });
        if gain < opts.objective_tol {
            break;
        }
    }
    Ok(SolveOutcome { covs: w, objective: f, trace })
}

/// Rank-`nr` factor `V = [v_1..v_nr] diag(sqrt(sigma_1)..sqrt(sigma_nr))`
/// from the dominant eigenpairs of `W`, so `V V^H` is the best rank-`nr`
/// PSD approximation of `W`. Negative eigenvalues are clipped to zero,
/// which leaves zero columns when `W` has fewer than `nr` positive
/// eigenvalues.
pub fn recover_beamformer(w: &CMat, nr: usize) -> CMat {
    let e = linalg::eigh(w);
    let (vals, mut vecs) = e.largest(nr);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let positive = vals.iter().filter(|&&s| s > 1e-14 * top && s > 0.0).count();
    if positive < nr {
        log::warn!("degenerate covariance: {positive} of {nr} eigenvalues positive");
    }
    for (j, s) in vals.iter().enumerate() {
        vecs.column_mut(j).scale_mut(s.max(0.0).sqrt());
    }
    vecs
}
