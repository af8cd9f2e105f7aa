//! System dimensions, subcarrier assignment, and seeded generation of
//! channels and feasible starting beamformers.

mod assignment;
mod beams;
mod channels;
mod config;
pub mod rng;

pub use assignment::Assignment;
pub use beams::{BeamformerSet, FilterSet, LinkGrid};
pub use channels::ChannelSet;
pub use config::{db_to_linear, SystemConfig, PAPER_WEIGHTS};

use crate::error::Result;

pub fn generate_channels(config: &SystemConfig) -> Result<ChannelSet> {
    config.validate()?;
    Ok(ChannelSet::generate(config))
}

pub fn round_robin_assignment(config: &SystemConfig) -> Result<Assignment> {
    Assignment::round_robin(config.num_cells, config.users_per_cell, config.num_subcarriers)
}

pub fn random_feasible_beamformers(config: &SystemConfig) -> Result<BeamformerSet> {
    config.validate()?;
    Ok(BeamformerSet::random_feasible(config, rng::Purpose::RandomInit, 0))
}
