use serde::{Deserialize, Serialize};

use crate::error::{Result, WsrmError};

/// User priorities of the reference two-cell, two-user setup, cell-major.
pub const PAPER_WEIGHTS: [f64; 4] = [0.25, 0.54, 0.67, 0.79];

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Dimensions, budgets, weights and iteration controls of one system.
///
/// `user_weights` is flattened cell-major: weight of user `k` in cell `m`
/// sits at index `m * users_per_cell + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub num_subcarriers: usize,
    pub power_budget_dbw: f64,
    pub user_weights: Vec<f64>,
    pub convergence_tol: f64,
    pub ia_iters: usize,
    pub ia_restarts: usize,
    pub wsrm_max_iters: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    /// Two cells, two users each, 4x2 antennas, 64 subcarriers, 20 dBW.
    fn default() -> Self {
        Self {
            num_cells: 2,
            users_per_cell: 2,
            tx_antennas: 4,
            rx_antennas: 2,
            num_subcarriers: 64,
            power_budget_dbw: 20.0,
            user_weights: PAPER_WEIGHTS.to_vec(),
            convergence_tol: 0.01,
            ia_iters: 10,
            ia_restarts: 100,
            wsrm_max_iters: 20,
            rng_seed: 0,
        }
    }
}

impl SystemConfig {
    /// Same as the default but with 4 subcarriers, for quick runs.
    pub fn desk() -> Self {
        Self { num_subcarriers: 4, ..Self::default() }
    }

    /// Linear per-cell power budget.
    pub fn power_budget(&self) -> f64 {
        db_to_linear(self.power_budget_dbw)
    }

    pub fn weight(&self, cell: usize, user: usize) -> f64 {
        self.user_weights[cell * self.users_per_cell + user]
    }

    pub fn num_users(&self) -> usize {
        self.num_cells * self.users_per_cell
    }

    /// Replaces the weights with ones everywhere.
    pub fn with_unit_weights(mut self) -> Self {
        self.user_weights = vec![1.0; self.num_users()];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(WsrmError::Config(msg));
        if self.num_cells == 0 || self.num_cells > 255 {
            return fail(format!("num_cells must be in 1..=255, got {}", self.num_cells));
        }
        if self.users_per_cell == 0 || self.users_per_cell > 255 {
            return fail(format!("users_per_cell must be in 1..=255, got {}", self.users_per_cell));
        }
        if self.rx_antennas < 2 {
            return fail(format!("rx_antennas must be at least 2, got {}", self.rx_antennas));
        }
        if self.tx_antennas < self.rx_antennas {
            return fail(format!(
                "tx_antennas ({}) must be at least rx_antennas ({})",
                self.tx_antennas, self.rx_antennas
            ));
        }
        if self.num_subcarriers == 0 || self.num_subcarriers >= 1 << 20 {
            return fail(format!("num_subcarriers must be in 1..2^20, got {}", self.num_subcarriers));
        }
        if self.users_per_cell > self.num_subcarriers {
            return fail(format!(
                "users_per_cell ({}) exceeds num_subcarriers ({})",
                self.users_per_cell, self.num_subcarriers
            ));
        }
        if !self.power_budget_dbw.is_finite() {
            return fail(format!("power_budget_dbw must be finite, got {}", self.power_budget_dbw));
        }
        if self.power_budget().is_nan() || self.power_budget() <= 0.0 {
            return fail("linear power budget underflows to zero".into());
        }
        if self.user_weights.len() != self.num_users() {
            return fail(format!(
                "expected {} user weights (cells x users), got {}",
                self.num_users(),
                self.user_weights.len()
            ));
        }
        if let Some(w) = self.user_weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return fail(format!("user weights must be positive and finite, got {w}"));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return fail(format!("convergence_tol must be positive, got {}", self.convergence_tol));
        }
        if self.ia_iters == 0 || self.wsrm_max_iters == 0 {
            return fail("ia_iters and wsrm_max_iters must be positive".into());
        }
        if self.ia_restarts == 0 || self.ia_restarts > u16::MAX as usize {
            return fail(format!("ia_restarts must be in 1..=65535, got {}", self.ia_restarts));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| WsrmError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_reference_setup() {
        let c = SystemConfig::default();
        c.validate().unwrap();
        assert_eq!((c.num_cells, c.users_per_cell, c.tx_antennas, c.rx_antennas), (2, 2, 4, 2));
        assert_eq!(c.num_subcarriers, 64);
        assert!((c.power_budget() - 100.0).abs() < 1e-12);
        assert_eq!(c.weight(1, 0), 0.67);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let bad = [
            SystemConfig { rx_antennas: 1, tx_antennas: 1, ..SystemConfig::desk() },
            SystemConfig { tx_antennas: 1, ..SystemConfig::desk() },
            SystemConfig { users_per_cell: 5, user_weights: vec![1.0; 10], ..SystemConfig::desk() },
            SystemConfig { user_weights: vec![1.0; 3], ..SystemConfig::desk() },
            SystemConfig { user_weights: vec![1.0, 0.0, 1.0, 1.0], ..SystemConfig::desk() },
            SystemConfig { convergence_tol: 0.0, ..SystemConfig::desk() },
            SystemConfig { power_budget_dbw: f64::NEG_INFINITY, ..SystemConfig::desk() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(WsrmError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let c = SystemConfig { convergence_tol: f64::INFINITY, ..SystemConfig::desk() };
        let back = SystemConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }
}
