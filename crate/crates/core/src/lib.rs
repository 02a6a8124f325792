//! Constructive compilation of wavelet expansions into sparse rectifier networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: the feed-forward network representation, its realization,
//!   weight count and JSON serialization.
//! - [`calculus`]: scaling, summation, tupling, composition and affine
//!   precomposition of networks with exact weight/depth accounting.
//! - [`piecewise`]: compactly supported piecewise polynomials.
//! - [`gadgets`]: multiplication and spline networks for ReLU and RePU(2).
//! - [`wavelets`]: CDF biorthogonal B-spline wavelet systems.
//! - [`expansion`]: tensor-product fast wavelet transform, Besov seminorms,
//!   N-term selection and error quadrature.
//! - [`compiler`]: per-wavelet networks and full N-term expansion networks.
//! - [`harness`]: target generation, budget sweeps, rate fits and reports.
//!
//! With the default `parallel` feature, batch evaluation, transforms and
//! sweeps are spread over a rayon pool; without it everything runs on the
//! calling thread and produces identical results.

pub mod calculus;
pub mod compiler;
pub mod error;
pub mod expansion;
pub mod gadgets;
pub mod harness;
pub mod network;
pub mod par;
pub mod piecewise;
pub mod wavelets;

pub use error::{Error, Result};
pub use network::{Activation, AffineMap, Network};
pub use piecewise::PiecewisePoly;
pub use wavelets::BiorthWaveletSystem;
