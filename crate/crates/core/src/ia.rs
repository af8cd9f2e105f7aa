//! Interference-alignment initialization.
//!
//! Alternating leakage minimization: receive filters take the least
//! interfered directions of their receive covariance, then transmit
//! beamformers take the directions that leak least into the other cells'
//! filtered receivers. The best of several random restarts (by unweighted
//! sum capacity) seeds the sum-rate phase.

use rayon::prelude::*;

use crate::channel_model::rng::Purpose;
use crate::channel_model::{round_robin_assignment, Assignment, BeamformerSet, ChannelSet, FilterSet, SystemConfig};
use crate::error::Result;
use crate::linalg::{self, hermitize, zeros, CMat};
use crate::rate::{self, received_from};

/// Interference power at link `(m, n)` after filtering:
/// `sum_{m' != m} tr(U^H H_{m'} V_{m'} V_{m'}^H H_{m'}^H U)`.
pub fn leakage(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> f64 {
    let u = filters.get(m, n);
    (0..channels.num_cells())
        .filter(|&i| i != m)
        .map(|i| linalg::trace_re(&(u.adjoint() * received_from(channels, beams, assignment, i, m, n) * u)))
        .sum()
}

pub fn network_leakage(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
) -> f64 {
    (0..channels.num_cells())
        .flat_map(|m| (0..channels.num_subcarriers()).map(move |n| (m, n)))
        .map(|(m, n)| leakage(channels, beams, filters, assignment, m, n))
        .sum()
}

/// One alternating sweep: all receive filters from the incoming beams, then
/// all beams from the new filters, then per-cell power renormalization.
pub fn ia_sweep(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    config: &SystemConfig,
) -> (BeamformerSet, FilterSet) {
    let cells = channels.num_cells();
    let (nr, nt) = (channels.rx_antennas(), channels.tx_antennas());
    let streams = beams.0.shape().1;
    if cells < 2 {
        let mut v = beams.clone();
        v.normalize_cell(0, config.power_budget());
        return (v, filters.clone());
    }

    let mut new_filters = filters.clone();
    for m in 0..cells {
        for n in 0..channels.num_subcarriers() {
            let mut q = zeros(nr, nr);
            for i in (0..cells).filter(|&i| i != m) {
                q += received_from(channels, beams, assignment, i, m, n);
            }
            new_filters.set(m, n, linalg::eigh(&q).smallest(nr));
        }
    }

    let mut new_beams = beams.clone();
    for m in 0..cells {
        for n in 0..channels.num_subcarriers() {
            let mut q = zeros(nt, nt);
            for victim in (0..cells).filter(|&i| i != m) {
                let h = channels.get(m, victim, assignment.user(victim, n), n);
                let uh = new_filters.get(victim, n).adjoint() * h;
                q += uh.adjoint() * uh;
            }
            new_beams.set(m, n, linalg::eigh(&hermitize(&q)).smallest(streams));
        }
        new_beams.normalize_cell(m, config.power_budget());
    }
    (new_beams, new_filters)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageTraceRow {
    pub restart: usize,
    /// 0 is the random start, before any sweep.
    pub sweep: usize,
    pub total_leakage: f64,
    pub sum_capacity: f64,
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub beams: BeamformerSet,
    pub filters: FilterSet,
    pub sum_capacity: f64,
    pub trace: Vec<LeakageTraceRow>,
}

#[derive(Debug, Clone)]
pub struct IaResult {
    pub beams: BeamformerSet,
    pub filters: FilterSet,
    /// `leakage_per_link[m][n]` for the selected restart.
    pub leakage_per_link: Vec<Vec<f64>>,
    pub sum_capacity: f64,
    pub restarts_run: usize,
    pub selected_restart: usize,
    pub restart_capacities: Vec<f64>,
    pub trace: Vec<LeakageTraceRow>,
}

fn sum_capacity(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    config: &SystemConfig,
    assignment: &Assignment,
) -> Result<f64> {
    Ok(rate::weighted_sum_rate(channels, beams, config, assignment)?.sum_rate())
}

/// One restart: fresh random feasible beams, identity filters, then
/// `ia_iters` sweeps.
pub fn run_restart(
    channels: &ChannelSet,
    config: &SystemConfig,
    assignment: &Assignment,
    restart: usize,
) -> Result<RestartOutcome> {
    let mut beams = BeamformerSet::random_feasible(config, Purpose::IaRestart, restart);
    let mut filters = FilterSet::identity(config.num_cells, config.num_subcarriers, config.rx_antennas);
    let mut trace = Vec::with_capacity(config.ia_iters + 1);
    let mut record = |sweep, beams: &BeamformerSet, filters: &FilterSet| -> Result<f64> {
        let cap = sum_capacity(channels, beams, config, assignment)?;
        trace.push(LeakageTraceRow {
            restart,
            sweep,
            total_leakage: network_leakage(channels, beams, filters, assignment),
            sum_capacity: cap,
        });
        Ok(cap)
    };
    let mut cap = record(0, &beams, &filters)?;
    for sweep in 1..=config.ia_iters {
        (beams, filters) = ia_sweep(channels, &beams, &filters, assignment, config);
        cap = record(sweep, &beams, &filters)?;
    }
    Ok(RestartOutcome { beams, filters, sum_capacity: cap, trace })
}

/// Runs `ia_restarts` independent restarts and keeps the one with the
/// largest sum capacity (lowest index on ties).
pub fn run_ia_phase(channels: &ChannelSet, config: &SystemConfig) -> Result<IaResult> {
    config.validate()?;
    let assignment = round_robin_assignment(config)?;
    let outcomes: Vec<RestartOutcome> = (0..config.ia_restarts)
        .into_par_iter()
        .map(|r| run_restart(channels, config, &assignment, r))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.sum_capacity > outcomes[best].sum_capacity {
            best = i;
        }
    }
    let restart_capacities = outcomes.iter().map(|o| o.sum_capacity).collect();
    let trace = outcomes.iter().flat_map(|o| o.trace.iter().copied()).collect();
    let chosen = outcomes.into_iter().nth(best).expect("at least one restart");
    let leakage_per_link = (0..config.num_cells)
        .map(|m| {
            (0..config.num_subcarriers)
                .map(|n| leakage(channels, &chosen.beams, &chosen.filters, &assignment, m, n))
                .collect()
        })
        .collect();
    Ok(IaResult {
        beams: chosen.beams,
        filters: chosen.filters,
        leakage_per_link,
        sum_capacity: chosen.sum_capacity,
        restarts_run: config.ia_restarts,
        selected_restart: best,
        restart_capacities,
        trace,
    })
}

/// Smallest singular value of the effective signal matrix `U^H H V`.
pub fn signal_min_singular_value(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> f64 {
    let s: CMat = filters.get(m, n).adjoint() * channels.get(m, m, assignment.user(m, n), n) * beams.get(m, n);
    s.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_sweep_changes_nothing() {
        let cfg = SystemConfig { num_cells: 1, user_weights: vec![1.0, 1.0], ..SystemConfig::desk() };
        let ch = ChannelSet::generate(&cfg);
        let a = round_robin_assignment(&cfg).unwrap();
        let v = BeamformerSet::random_feasible(&cfg, Purpose::IaRestart, 0);
        let f = FilterSet::identity(1, 4, 2);
        let (v2, f2) = ia_sweep(&ch, &v, &f, &a, &cfg);
        assert!((0..4).all(|n| linalg::frobenius(&(v2.get(0, n) - v.get(0, n))) < 1e-12));
        assert_eq!(f2, f);
        assert_eq!(network_leakage(&ch, &v2, &f2, &a), 0.0);
    }

    #[test]
    fn sweep_keeps_power_equality() {
        let cfg = SystemConfig { rng_seed: 5, ..SystemConfig::desk() };
        let ch = ChannelSet::generate(&cfg);
        let a = round_robin_assignment(&cfg).unwrap();
        let v = BeamformerSet::random_feasible(&cfg, Purpose::IaRestart, 0);
        let (v2, _) = ia_sweep(&ch, &v, &FilterSet::identity(2, 4, 2), &a, &cfg);
        for m in 0..2 {
            assert!((v2.cell_power(m) - 100.0).abs() <= 1e-9 * 100.0);
        }
    }

    #[test]
    fn single_restart_is_returned_verbatim() {
        let cfg = SystemConfig { ia_restarts: 1, rng_seed: 9, ..SystemConfig::desk() };
        let ch = ChannelSet::generate(&cfg);
        let a = round_robin_assignment(&cfg).unwrap();
        let alone = run_restart(&ch, &cfg, &a, 0).unwrap();
        let res = run_ia_phase(&ch, &cfg).unwrap();
        assert_eq!(res.beams, alone.beams);
        assert_eq!(res.sum_capacity, alone.sum_capacity);
        assert_eq!((res.restarts_run, res.selected_restart), (1, 0));
    }
}
