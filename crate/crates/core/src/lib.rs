//! Distributed weighted sum-rate maximization for the multicell MU-MIMO
//! OFDMA downlink.
//!
//! The pipeline: seeded channels ([`channel_model`]), interference-alignment
//! initialization ([`ia`]), per-cell covariance subproblems solved by
//! projected gradient ascent ([`subproblem`]), and the alternating outer
//! loop ([`coordinator`]). [`rate`] evaluates every rate and interference
//! statistic; [`experiment`] drives seeded studies and writes CSV.

pub mod channel_model;
pub mod coordinator;
pub mod error;
pub mod experiment;
pub mod ia;
pub mod linalg;
pub mod rate;
pub mod report;
pub mod subproblem;

pub use channel_model::{Assignment, BeamformerSet, ChannelSet, FilterSet, SystemConfig};
pub use error::{Result, WsrmError};
