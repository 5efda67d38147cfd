//! LT fountain codes tuned for the low-overhead region.
//!
//! The crate covers the whole pipeline:
//!
//! * [`distributions`]: Ideal/Robust Soliton, the spike-free improved
//!   distribution, the DLLT split and square-root deconvolution, UEP source
//!   distributions and the fixed comparator distributions.
//! * [`analysis`]: And-Or tree evolution, the BER lower bound, the overhead
//!   thresholds and the encoding-complexity reduction.
//! * [`codec`]: LT encoding, the erasure channel, the peeling decoder and the
//!   all-source checksum symbol.
//! * [`relay`]: two-source relaying (forward or XOR) for DLLT and UEP-DLLT.
//! * [`sim`]: seeded, parallel Monte Carlo sweeps producing BER/FER tables.
//! * [`cli`]: the `ltcodes` command-line front end.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod analysis;
pub mod cli;
pub mod codec;
pub mod config;
pub mod distributions;
mod error;
pub mod relay;
pub mod sim;

pub use config::Tolerances;
pub use distributions::{DegreeDistribution, DistKind, RsdMeta, Sigma};
pub use error::{Error, Result};
