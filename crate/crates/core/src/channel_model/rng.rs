//! Hierarchical random substreams.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, purpose,
//! indices)`, so results do not depend on generation order or threading.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    RandomInit = 2,
    IaRestart = 3,
    Test = 15,
}

/// Stream for one `(purpose, restart, m_tx, m_rx, user, subcarrier)` tuple.
pub fn substream(
    seed: u64,
    purpose: Purpose,
    restart: usize,
    m_tx: usize,
    m_rx: usize,
    user: usize,
    subcarrier: usize,
) -> ChaCha8Rng {
    debug_assert!(restart < 1 << 16 && m_tx < 256 && m_rx < 256 && user < 256);
    debug_assert!(subcarrier < 1 << 20);
    let key = (purpose as u64) << 60
        | (restart as u64) << 44
        | (m_tx as u64) << 36
        | (m_rx as u64) << 28
        | (user as u64) << 20
        | subcarrier as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// One CN(0, 1) sample: real and imaginary parts each N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
