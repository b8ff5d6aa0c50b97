//! Energy-efficient IRS-assisted downlink with phase cooperation.
//!
//! A user network (multi-antenna AP serving single-antenna users through an
//! intelligent reflecting surface) optimizes its reflection phases, either by
//! alternating optimization with semidefinite relaxation or by a cheap
//! element-wise coordinate descent. A second, power-splitting SWIPT IoT
//! network then reuses those phases and only re-solves its own beamformers
//! and splitting ratios.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod phase_ebcd;
pub mod phase_sdr;
pub mod pipeline;
pub mod scenario;
pub mod swipt;

pub use error::{Error, Result};
