use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::rng::{self, Purpose};
use super::SystemConfig;
use crate::error::{Result, WsrmError};
use crate::linalg::{zeros, CMat};

/// Every channel `H[m_tx -> (m_rx, k), n]`, each `Nr x Nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_cells: usize,
    users_per_cell: usize,
    num_subcarriers: usize,
    rx_antennas: usize,
    tx_antennas: usize,
    mats: Vec<CMat>,
}

impl ChannelSet {
    /// Builds a set from a generator closure `(m_tx, m_rx, k, n) -> H`.
    pub fn from_fn(
        num_cells: usize,
        users_per_cell: usize,
        num_subcarriers: usize,
        rx_antennas: usize,
        tx_antennas: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> CMat,
    ) -> Result<Self> {
        let mut mats = Vec::with_capacity(num_cells * num_cells * users_per_cell * num_subcarriers);
        for m_tx in 0..num_cells {
            for m_rx in 0..num_cells {
                for k in 0..users_per_cell {
                    for n in 0..num_subcarriers {
                        let h = f(m_tx, m_rx, k, n);
                        if h.shape() != (rx_antennas, tx_antennas) {
                            return Err(WsrmError::ShapeMismatch {
                                expected: format!("{rx_antennas}x{tx_antennas}"),
                                got: format!("{}x{}", h.nrows(), h.ncols()),
                            });
                        }
                        mats.push(h);
                    }
                }
            }
        }
        Ok(Self { num_cells, users_per_cell, num_subcarriers, rx_antennas, tx_antennas, mats })
    }

    /// i.i.d. CN(0, 1) entries, one substream per matrix.
    pub fn generate(config: &SystemConfig) -> Self {
        let (nr, nt) = (config.rx_antennas, config.tx_antennas);
        Self::from_fn(config.num_cells, config.users_per_cell, config.num_subcarriers, nr, nt, |mt, mr, k, n| {
            let mut rng = rng::substream(config.rng_seed, Purpose::Channel, 0, mt, mr, k, n);
            CMat::from_fn(nr, nt, |_, _| rng::complex_normal(&mut rng))
        })
        .expect("generated shapes are consistent")
    }

    fn index(&self, m_tx: usize, m_rx: usize, k: usize, n: usize) -> usize {
        ((m_tx * self.num_cells + m_rx) * self.users_per_cell + k) * self.num_subcarriers + n
    }

    /// Channel from BS `m_tx` to user `k` of cell `m_rx` on subcarrier `n`.
    pub fn get(&self, m_tx: usize, m_rx: usize, k: usize, n: usize) -> &CMat {
        &self.mats[self.index(m_tx, m_rx, k, n)]
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }
    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }
    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }
    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }
    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }
    pub fn len(&self) -> usize {
        self.mats.len()
    }
    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = &CMat> {
        self.mats.iter()
    }

    /// Writes one line per entry: `m_tx,m_rx,k,n,row,col,re,im`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for m_tx in 0..self.num_cells {
            for m_rx in 0..self.num_cells {
                for k in 0..self.users_per_cell {
                    for n in 0..self.num_subcarriers {
                        let h = self.get(m_tx, m_rx, k, n);
                        for r in 0..self.rx_antennas {
                            for c in 0..self.tx_antennas {
                                let z = h[(r, c)];
                                writeln!(out, "{m_tx},{m_rx},{k},{n},{r},{c},{},{}", z.re, z.im)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses a dump written by [`ChannelSet::write_dump`]; dimensions are
    /// inferred from the largest indices present.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut dims = [0usize; 6];
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || WsrmError::Parse(format!("line {}: {line:?}", lineno + 1));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(bad());
            }
            let mut idx = [0usize; 6];
            for (slot, f) in idx.iter_mut().zip(&fields[..6]) {
                *slot = f.parse().map_err(|_| bad())?;
            }
            let re: f64 = fields[6].parse().map_err(|_| bad())?;
            let im: f64 = fields[7].parse().map_err(|_| bad())?;
            for (d, i) in dims.iter_mut().zip(idx) {
                *d = (*d).max(i + 1);
            }
            entries.push((idx, Complex64::new(re, im)));
        }
        let [m_tx_n, m_rx_n, k_n, n_n, rows, cols] = dims;
        if m_tx_n != m_rx_n {
            return Err(WsrmError::Parse("transmit and receive cell counts differ".into()));
        }
        let expected = m_tx_n * m_rx_n * k_n * n_n * rows * cols;
        if entries.len() != expected {
            return Err(WsrmError::Parse(format!("expected {expected} entries, found {}", entries.len())));
        }
        let mut set = Self::from_fn(m_tx_n, k_n, n_n, rows, cols, |_, _, _, _| zeros(rows, cols))?;
        let mut seen = vec![false; expected];
        for ([mt, mr, k, n, r, c], z) in entries {
            let i = set.index(mt, mr, k, n);
            let flat = i * rows * cols + r * cols + c;
            if std::mem::replace(&mut seen[flat], true) {
                return Err(WsrmError::Parse(format!("duplicate entry {mt},{mr},{k},{n},{r},{c}")));
            }
            set.mats[i][(r, c)] = z;
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_dimensions() {
        let cfg = SystemConfig::default();
        let h = ChannelSet::generate(&cfg);
        assert_eq!(h.len(), 512);
        assert!(h.iter().all(|m| m.shape() == (2, 4)));
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = SystemConfig { rng_seed: 42, ..SystemConfig::desk() };
        assert_eq!(ChannelSet::generate(&cfg), ChannelSet::generate(&cfg));
        let other = SystemConfig { rng_seed: 43, ..cfg.clone() };
        assert_ne!(ChannelSet::generate(&cfg), ChannelSet::generate(&other));
    }

    #[test]
    fn unit_complex_variance() {
        // 2*2*2*64 matrices of 2x4 = 4096 entries per draw; pool 25 seeds.
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..25 {
            let cfg = SystemConfig { rng_seed: seed, ..SystemConfig::default() };
            for h in ChannelSet::generate(&cfg).iter() {
                for z in h.iter() {
                    acc += z.norm_sqr();
                    count += 1;
                }
            }
        }
        assert!(count >= 100_000);
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let cfg = SystemConfig { rng_seed: 7, ..SystemConfig::desk() };
        let h = ChannelSet::generate(&cfg);
        let mut buf = Vec::new();
        h.write_dump(&mut buf).unwrap();
        let back = ChannelSet::read_dump(&buf[..]).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn dump_rejects_missing_entries() {
        let text = "0,0,0,0,0,0,1.0,0.0\n0,0,0,0,1,1,1.0,0.0\n";
        assert!(matches!(ChannelSet::read_dump(text.as_bytes()), Err(WsrmError::Parse(_))));
    }
}
