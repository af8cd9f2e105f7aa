//! Rate and interference statistics.
//!
//! Noise covariance is the identity; all logs are base 2, so rates are in
//! bits per channel use. A link `(m, n)` is the transmission of cell `m`
//! to its scheduled user `f(m, n)` on subcarrier `n`.

use std::f64::consts::LN_2;

use crate::channel_model::{Assignment, BeamformerSet, ChannelSet, FilterSet, SystemConfig};
use crate::error::{Result, WsrmError};
use crate::linalg::{self, hermitian_defect, hermitize, identity, CMat};

fn check_shapes(channels: &ChannelSet, beams: &BeamformerSet) -> Result<()> {
    let want = (channels.tx_antennas(), channels.rx_antennas());
    let got = beams.0.shape();
    if got != want || beams.num_cells() != channels.num_cells() || beams.num_subcarriers() != channels.num_subcarriers()
    {
        return Err(WsrmError::ShapeMismatch {
            expected: format!(
                "{} cells x {} subcarriers of {}x{}",
                channels.num_cells(),
                channels.num_subcarriers(),
                want.0,
                want.1
            ),
            got: format!(
                "{} cells x {} subcarriers of {}x{}",
                beams.num_cells(),
                beams.num_subcarriers(),
                got.0,
                got.1
            ),
        });
    }
    Ok(())
}

fn check_filter_shapes(channels: &ChannelSet, filters: &FilterSet) -> Result<()> {
    let nr = channels.rx_antennas();
    let got = filters.0.shape();
    if got != (nr, nr)
        || filters.0.num_cells() != channels.num_cells()
        || filters.0.num_subcarriers() != channels.num_subcarriers()
    {
        return Err(WsrmError::ShapeMismatch {
            expected: format!("{nr}x{nr} filters"),
            got: format!("{}x{}", got.0, got.1),
        });
    }
    Ok(())
}

/// Signal channel `H_{m -> (m, k)}` with `k = f(m, n)`.
fn signal_channel<'a>(channels: &'a ChannelSet, assignment: &Assignment, m: usize, n: usize) -> &'a CMat {
    channels.get(m, m, assignment.user(m, n), n)
}

/// Interference received at user `f(m, n)` from cell `from`, `H V V^H H^H`.
pub(crate) fn received_from(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    assignment: &Assignment,
    from: usize,
    m: usize,
    n: usize,
) -> CMat {
    let hv = channels.get(from, m, assignment.user(m, n), n) * beams.get(from, n);
    &hv * hv.adjoint()
}

/// `X = I + sum_{m' != m} H_{m'} V_{m'} V_{m'}^H H_{m'}^H` at user `f(m, n)`.
pub fn interference_covariance(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> Result<CMat> {
    check_shapes(channels, beams)?;
    let mut x = identity(channels.rx_antennas());
    for other in (0..channels.num_cells()).filter(|&i| i != m) {
        x += received_from(channels, beams, assignment, other, m, n);
    }
    Ok(hermitize(&x))
}

/// `gamma = V^H H^H X^{-1} H V`.
pub fn sinr_matrix(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> Result<CMat> {
    let x = interference_covariance(channels, beams, assignment, m, n)?;
    let hv = signal_channel(channels, assignment, m, n) * beams.get(m, n);
    let x_inv_hv = linalg::solve_hpd(&x, &hv)?;
    Ok(hermitize(&(hv.adjoint() * x_inv_hv)))
}

/// `log2 det(I + gamma)` for Hermitian PSD `gamma`.
pub fn rate(gamma: &CMat) -> Result<f64> {
    let scale = gamma.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(gamma);
    if defect > 1e-9 * scale {
        return Err(WsrmError::NotHermitian(defect));
    }
    let r = linalg::log2_det_hpd(&(identity(gamma.nrows()) + gamma))?;
    Ok(r.max(0.0))
}

/// Capacity-preserving receive filter `U = X^{-1} H V`.
pub fn mmse_filter(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> Result<CMat> {
    let x = interference_covariance(channels, beams, assignment, m, n)?;
    let hv = signal_channel(channels, assignment, m, n) * beams.get(m, n);
    linalg::solve_hpd(&x, &hv)
}

pub fn mmse_filters(channels: &ChannelSet, beams: &BeamformerSet, assignment: &Assignment) -> Result<FilterSet> {
    check_shapes(channels, beams)?;
    let mut out = FilterSet::identity(channels.num_cells(), channels.num_subcarriers(), channels.rx_antennas());
    for m in 0..channels.num_cells() {
        for n in 0..channels.num_subcarriers() {
            out.set(m, n, mmse_filter(channels, beams, assignment, m, n)?);
        }
    }
    Ok(out)
}

/// Rate seen through filter `U`:
/// `log2 det(I + (U^H X U)^{-1} U^H H V V^H H^H U)`.
pub fn filtered_rate(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> Result<f64> {
    check_filter_shapes(channels, filters)?;
    let x = interference_covariance(channels, beams, assignment, m, n)?;
    let u = filters.get(m, n);
    let noise = hermitize(&(u.adjoint() * &x * u));
    let s = u.adjoint() * signal_channel(channels, assignment, m, n) * beams.get(m, n);
    let signal = hermitize(&(&s * s.adjoint()));
    let degenerate = |_| WsrmError::DegenerateFilter { cell: m, subcarrier: n };
    let ln_noise = linalg::ln_det_hpd(&noise).map_err(degenerate)?;
    let ln_total = linalg::ln_det_hpd(&(noise + signal)).map_err(degenerate)?;
    Ok(((ln_total - ln_noise) / LN_2).max(0.0))
}

/// High-SINR surrogate `log2 det(U^H H V V^H H^H U) - log2 det(U^H X U)`.
pub fn high_sinr_rate(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    m: usize,
    n: usize,
) -> Result<f64> {
    check_filter_shapes(channels, filters)?;
    let x = interference_covariance(channels, beams, assignment, m, n)?;
    let u = filters.get(m, n);
    let s = u.adjoint() * signal_channel(channels, assignment, m, n) * beams.get(m, n);
    let signal = hermitize(&(&s * s.adjoint()));
    let ln_signal = linalg::ln_det_hpd(&signal).map_err(|_| WsrmError::SingularSignal { cell: m, subcarrier: n })?;
    let ln_noise = linalg::ln_det_hpd(&(u.adjoint() * &x * u))
        .map_err(|_| WsrmError::DegenerateFilter { cell: m, subcarrier: n })?;
    Ok((ln_signal - ln_noise) / LN_2)
}

/// Leakage-plus-noise at victim link `(victim, n)` from every cell except
/// `victim` and `excluded`:
/// `N = sum_{i not in {excluded, victim}} U^H H_i V_i V_i^H H_i^H U + U^H U`.
pub fn aggregate_leakage_plus_noise(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    filters: &FilterSet,
    assignment: &Assignment,
    victim: usize,
    n: usize,
    excluded: usize,
) -> Result<CMat> {
    check_shapes(channels, beams)?;
    check_filter_shapes(channels, filters)?;
    let u = filters.get(victim, n);
    let mut acc = u.adjoint() * u;
    for i in (0..channels.num_cells()).filter(|&i| i != victim && i != excluded) {
        acc += u.adjoint() * received_from(channels, beams, assignment, i, victim, n) * u;
    }
    let acc = hermitize(&acc);
    linalg::ln_det_hpd(&acc).map_err(|_| WsrmError::DegenerateFilter { cell: victim, subcarrier: n })?;
    Ok(acc)
}

/// First-order surrogate `tr(A) / ln 2` of `log2 det(I + A)`, accurate when
/// the spectral radius of `A` is small.
pub fn trace_log2det_approx(a: &CMat) -> f64 {
    linalg::trace_re(a) / LN_2
}

/// Per-link rates, per-user capacities and the weighted sum-rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `link_rates[m][n]` is the rate of user `f(m, n)` on subcarrier `n`.
    pub link_rates: Vec<Vec<f64>>,
    /// `user_capacity[m][k] = sum_{n in S_km} R_mkn`.
    pub user_capacity: Vec<Vec<f64>>,
    /// `sum_k w_mk C_mk` per cell.
    pub cell_wsr: Vec<f64>,
    pub wsr: f64,
    /// Global weighted sum-rate after each outer iteration, when known.
    pub trajectory: Vec<f64>,
}

impl RateReport {
    /// Unweighted total of all link rates.
    pub fn sum_rate(&self) -> f64 {
        self.link_rates.iter().flatten().sum()
    }
}

pub fn weighted_sum_rate(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    config: &SystemConfig,
    assignment: &Assignment,
) -> Result<RateReport> {
    check_shapes(channels, beams)?;
    let (cells, users, subcarriers) = (channels.num_cells(), channels.users_per_cell(), channels.num_subcarriers());
    let mut link_rates = vec![vec![0.0; subcarriers]; cells];
    for (m, row) in link_rates.iter_mut().enumerate() {
        for (n, r) in row.iter_mut().enumerate() {
            *r = rate(&sinr_matrix(channels, beams, assignment, m, n)?)?;
        }
    }
    let user_capacity: Vec<Vec<f64>> = (0..cells)
        .map(|m| (0..users).map(|k| assignment.subcarriers(m, k).iter().map(|&n| link_rates[m][n]).sum()).collect())
        .collect();
    let cell_wsr: Vec<f64> =
        (0..cells).map(|m| (0..users).map(|k| config.weight(m, k) * user_capacity[m][k]).sum()).collect();
    let wsr = cell_wsr.iter().sum();
    Ok(RateReport { link_rates, user_capacity, cell_wsr, wsr, trajectory: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    fn single_cell_identity() -> (ChannelSet, BeamformerSet, Assignment) {
        let ch = ChannelSet::from_fn(1, 1, 1, 2, 2, |_, _, _, _| identity(2)).unwrap();
        let v = BeamformerSet::from_fn(1, 1, 2, 2, |_, _| identity(2));
        let a = Assignment::round_robin(1, 1, 1).unwrap();
        (ch, v, a)
    }

    #[test]
    fn rate_of_diagonal_sinr() {
        assert_eq!(rate(&diag(&[0.0, 0.0])).unwrap(), 0.0);
        assert!((rate(&diag(&[1.0, 1.0])).unwrap() - 2.0).abs() < 1e-14);
        assert!((rate(&diag(&[3.0, 7.0])).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn rate_rejects_non_hermitian() {
        let mut g = diag(&[1.0, 1.0]);
        g[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(rate(&g), Err(WsrmError::NotHermitian(_))));
    }

    #[test]
    fn identity_link() {
        let (ch, v, a) = single_cell_identity();
        assert_eq!(interference_covariance(&ch, &v, &a, 0, 0).unwrap(), identity(2));
        assert!(linalg::frobenius(&(sinr_matrix(&ch, &v, &a, 0, 0).unwrap() - identity(2))) < 1e-15);
        let u = mmse_filter(&ch, &v, &a, 0, 0).unwrap();
        assert!(linalg::frobenius(&(u - identity(2))) < 1e-15);
        let f = FilterSet::identity(1, 1, 2);
        assert!((filtered_rate(&ch, &v, &f, &a, 0, 0).unwrap() - 2.0).abs() < 1e-14);
        // The surrogate drops the identity: log2 det(I) - log2 det(I) = 0.
        assert!(high_sinr_rate(&ch, &v, &f, &a, 0, 0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn zero_beams_give_zero_sinr_and_identity_covariance() {
        let (ch, _, a) = single_cell_identity();
        let v = BeamformerSet::from_fn(1, 1, 2, 2, |_, _| CMat::zeros(2, 2));
        assert_eq!(sinr_matrix(&ch, &v, &a, 0, 0).unwrap(), CMat::zeros(2, 2));
        assert!(matches!(
            high_sinr_rate(&ch, &v, &FilterSet::identity(1, 1, 2), &a, 0, 0),
            Err(WsrmError::SingularSignal { .. })
        ));
    }

    #[test]
    fn mmse_filter_is_linear_in_beam_scale() {
        let (ch, v, a) = single_cell_identity();
        let mut v3 = v.clone();
        v3.scale_cell(0, 3.0);
        let u = mmse_filter(&ch, &v, &a, 0, 0).unwrap() * Complex64::new(3.0, 0.0);
        assert!(linalg::frobenius(&(mmse_filter(&ch, &v3, &a, 0, 0).unwrap() - u)) < 1e-14);
    }

    #[test]
    fn leakage_plus_noise_two_cells_is_filter_gram() {
        let cfg = SystemConfig { rng_seed: 3, ..SystemConfig::desk() };
        let ch = ChannelSet::generate(&cfg);
        let v = BeamformerSet::random_feasible(&cfg, crate::channel_model::rng::Purpose::RandomInit, 0);
        let a = Assignment::round_robin(2, 2, 4).unwrap();
        let f = mmse_filters(&ch, &v, &a).unwrap();
        let u = f.get(1, 2);
        let got = aggregate_leakage_plus_noise(&ch, &v, &f, &a, 1, 2, 0).unwrap();
        assert!(linalg::frobenius(&(got - u.adjoint() * u)) < 1e-12);
        let id = FilterSet::identity(2, 4, 2);
        assert!(
            linalg::frobenius(&(aggregate_leakage_plus_noise(&ch, &v, &id, &a, 0, 1, 1).unwrap() - identity(2)))
                < 1e-15
        );
    }

    #[test]
    fn rank_deficient_filter_is_flagged() {
        let cfg = SystemConfig::desk();
        let ch = ChannelSet::generate(&cfg);
        let v = BeamformerSet::zeros(&cfg);
        let a = Assignment::round_robin(2, 2, 4).unwrap();
        let mut f = FilterSet::identity(2, 4, 2);
        f.set(0, 0, diag(&[1.0, 0.0]));
        assert!(matches!(
            aggregate_leakage_plus_noise(&ch, &v, &f, &a, 0, 0, 1),
            Err(WsrmError::DegenerateFilter { .. })
        ));
    }

    #[test]
    fn zero_beams_give_zero_wsr() {
        let cfg = SystemConfig::desk();
        let ch = ChannelSet::generate(&cfg);
        let a = Assignment::round_robin(2, 2, 4).unwrap();
        let rep = weighted_sum_rate(&ch, &BeamformerSet::zeros(&cfg), &cfg, &a).unwrap();
        assert_eq!(rep.wsr, 0.0);
    }
}
