//! Energy-efficient transmit beamforming for integrated sensing and
//! communication (ISAC) MIMO base stations.
//!
//! The crate contains the physical model ([`scenario`], [`steering`],
//! [`metrics`]), a small conic modelling layer with an interior-point SDP
//! solver ([`sdp`]), the constraint builders and iterative solvers for the
//! communication- and sensing-centric energy-efficiency problems
//! ([`constraints`], [`solvers`]), rank-one recovery ([`recovery`]) and
//! independent brute-force checks ([`oracle`]).

pub mod constraints;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod recovery;
pub mod scenario;
pub mod sdp;
pub mod solvers;
pub mod steering;

pub use error::{Error, Result};

/// Complex double.
pub type C64 = nalgebra::Complex<f64>;
