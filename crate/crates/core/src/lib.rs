//! Simulator and analysis toolkit for an amplitude- and polarization-
//! modulated faint-pulse QKD transmitter.
//!
//! The crate models the full chain from source to key rate:
//!
//! - [`source`]: the transmitter itself: photon budget, VOA attenuation,
//!   modulator calibration tables, random-phase pulse trains, cavity
//!   coherence suppression, and the driver power budget.
//! - [`sidechannel`]: pulse indistinguishability: mode-overlap integrals,
//!   chirp sensitivity, spectra, PER-derived QBER floors, and first-order
//!   coherence estimates of the train.
//! - [`link`]: free-space link budget and detection-layer yields.
//! - [`decoy`]: the analytic decoy-state BB84 engine: gains, QBERs,
//!   single-photon estimation (exact model or decoy bound, behind one
//!   trait), the secure-rate lower bound, and distance sweeps.
//! - [`montecarlo`]: a pulse-level stochastic harness that cross-validates
//!   the analytic engine, reproducible for any worker count.
//! - [`config`] and [`cli`]: the shared key=value configuration file and the
//!   subcommands tying everything together.

// validation uses `!(x > 0.0)` on purpose: the negated form rejects NaN
// along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod decoy;
pub mod link;
pub mod montecarlo;
pub mod reference;
pub mod rng;
pub mod sidechannel;
pub mod source;

pub use config::RunConfig;
pub use decoy::{DecoyParams, GainStats, KeyRateResult, SinglePhoton};
pub use link::LinkParams;
pub use montecarlo::{MCConfig, MCResult};
pub use sidechannel::{OverlapReport, Waveform};
pub use source::{PolarizationState, PulseSpec, SourceConfig};
