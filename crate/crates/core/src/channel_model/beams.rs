use num_complex::Complex64;

use super::rng::{self, Purpose};
use super::SystemConfig;
use crate::linalg::{frobenius, zeros, CMat};

/// One matrix per `(cell, subcarrier)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGrid {
    num_cells: usize,
    num_subcarriers: usize,
    rows: usize,
    cols: usize,
    mats: Vec<CMat>,
}

impl LinkGrid {
    pub fn zeros(num_cells: usize, num_subcarriers: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(num_cells, num_subcarriers, rows, cols, |_, _| zeros(rows, cols))
    }

    pub fn from_fn(
        num_cells: usize,
        num_subcarriers: usize,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> CMat,
    ) -> Self {
        let mut mats = Vec::with_capacity(num_cells * num_subcarriers);
        for m in 0..num_cells {
            for n in 0..num_subcarriers {
                let a = f(m, n);
                assert_eq!(a.shape(), (rows, cols), "link matrix ({m}, {n}) has the wrong shape");
                mats.push(a);
            }
        }
        Self { num_cells, num_subcarriers, rows, cols, mats }
    }

    pub fn get(&self, cell: usize, subcarrier: usize) -> &CMat {
        &self.mats[cell * self.num_subcarriers + subcarrier]
    }

    pub fn set(&mut self, cell: usize, subcarrier: usize, value: CMat) {
        assert_eq!(value.shape(), (self.rows, self.cols));
        self.mats[cell * self.num_subcarriers + subcarrier] = value;
    }

    pub fn cell(&self, cell: usize) -> &[CMat] {
        &self.mats[cell * self.num_subcarriers..(cell + 1) * self.num_subcarriers]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [CMat] {
        &mut self.mats[cell * self.num_subcarriers..(cell + 1) * self.num_subcarriers]
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }
    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Transmit beamformers `V[m, n]` (`Nt x Nr`) for user `f(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet(pub LinkGrid);

/// Receive filters `U[m, n]` (`Nr x Nr`) of user `f(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet(pub LinkGrid);

impl BeamformerSet {
    pub fn from_fn(
        num_cells: usize,
        num_subcarriers: usize,
        tx_antennas: usize,
        streams: usize,
        f: impl FnMut(usize, usize) -> CMat,
    ) -> Self {
        Self(LinkGrid::from_fn(num_cells, num_subcarriers, tx_antennas, streams, f))
    }

    pub fn zeros(config: &SystemConfig) -> Self {
        Self(LinkGrid::zeros(config.num_cells, config.num_subcarriers, config.tx_antennas, config.rx_antennas))
    }

    /// Complex Gaussian entries, then each cell scaled so its total power
    /// equals the budget exactly.
    pub fn random_feasible(config: &SystemConfig, purpose: Purpose, restart: usize) -> Self {
        let (nt, nr) = (config.tx_antennas, config.rx_antennas);
        let mut set = Self::from_fn(config.num_cells, config.num_subcarriers, nt, nr, |m, n| {
            let mut rng = rng::substream(config.rng_seed, purpose, restart, m, m, 0, n);
            CMat::from_fn(nt, nr, |_, _| rng::complex_normal(&mut rng))
        });
        let budget = config.power_budget();
        for m in 0..config.num_cells {
            set.normalize_cell(m, budget);
        }
        set
    }

    pub fn get(&self, cell: usize, subcarrier: usize) -> &CMat {
        self.0.get(cell, subcarrier)
    }

    pub fn set(&mut self, cell: usize, subcarrier: usize, v: CMat) {
        self.0.set(cell, subcarrier, v)
    }

    pub fn num_cells(&self) -> usize {
        self.0.num_cells()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.0.num_subcarriers()
    }

    /// `sum_n tr(V V^H)` for one cell.
    pub fn cell_power(&self, cell: usize) -> f64 {
        self.0.cell(cell).iter().map(|v| frobenius(v).powi(2)).sum()
    }

    pub fn scale_cell(&mut self, cell: usize, factor: f64) {
        let f = Complex64::new(factor, 0.0);
        for v in self.0.cell_mut(cell) {
            *v *= f;
        }
    }

    /// Uniformly rescales a cell to total power `budget`; an all-zero cell is
    /// left untouched.
    pub fn normalize_cell(&mut self, cell: usize, budget: f64) {
        let p = self.cell_power(cell);
        if p > 0.0 {
            self.scale_cell(cell, (budget / p).sqrt());
        }
    }

    /// Per-cell power constraint with relative slack `1e-9`.
    pub fn is_feasible(&self, budget: f64) -> bool {
        (0..self.num_cells()).all(|m| self.cell_power(m) <= budget * (1.0 + 1e-9))
    }
}

impl FilterSet {
    pub fn from_fn(
        num_cells: usize,
        num_subcarriers: usize,
        rx_antennas: usize,
        f: impl FnMut(usize, usize) -> CMat,
    ) -> Self {
        Self(LinkGrid::from_fn(num_cells, num_subcarriers, rx_antennas, rx_antennas, f))
    }

    pub fn identity(num_cells: usize, num_subcarriers: usize, rx_antennas: usize) -> Self {
        Self::from_fn(num_cells, num_subcarriers, rx_antennas, |_, _| CMat::identity(rx_antennas, rx_antennas))
    }

    pub fn get(&self, cell: usize, subcarrier: usize) -> &CMat {
        self.0.get(cell, subcarrier)
    }

    pub fn set(&mut self, cell: usize, subcarrier: usize, u: CMat) {
        self.0.set(cell, subcarrier, u)
    }
}
