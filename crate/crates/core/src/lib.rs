//! Numerical toolkit for the key-rate versus interaction-rate tradeoff of
//! two-terminal secret key generation from correlated sources.
//!
//! The pieces, bottom to top:
//!
//! - [`dist`]: finite-alphabet joint distributions, the two-parameter charts
//!   of binary lower sets, and XY-absolute-continuity factorization;
//! - [`info`]: entropies and mutual information, in nats;
//! - [`svd`] / [`correlation`]: dependency-free Jacobi SVD, maximal
//!   correlation, and the stationarity conditions of lower-set maximizers;
//! - [`envelope`]: marginal concave envelopes on chart grids, fiber by fiber
//!   in the marginal coordinate, alternated to a joint fixed point;
//! - [`rates`]: data-processing thresholds, key bits per interaction bit,
//!   minimum interaction for maximum key rate (two routes), rate-region
//!   boundaries by concave conjugation, and a blocklength-free converse;
//! - [`conjecture`]: grid verification of the four-parameter dominance
//!   inequality and its reduced form, plus plot surfaces.
//!
//! All information quantities are in nats.

pub mod conjecture;
pub mod correlation;
pub mod dist;
pub mod envelope;
pub mod error;
pub mod info;
pub mod rates;
pub mod svd;

pub use dist::{check_xy_abs_continuity, connected_components, FactorPair, JointDist, ParamFamily};
pub use envelope::{Axis, EnvelopeConfig, GridFunctional, Rounds};
pub use error::{Error, Result};
pub use info::{binary_convolution, binary_entropy, entropy, mutual_information};
pub use rates::RateConfig;
