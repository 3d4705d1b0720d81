//! Canonical cocycles of highest-weight representations of the circle
//! diffeomorphism group, computed by contour integrals over conformal
//! weldings and by Grunsky/Gaussian operator algebra.

pub mod circle_series;
pub mod cocycle;
pub mod corpus;
pub mod error;
pub mod gauss_fock;
pub mod grunsky;
pub mod kernel_rkhs;
pub mod linalg;
pub mod par;
pub mod spectral;
pub mod univalent_maps;
pub mod virasoro;
pub mod welding;

pub use error::{Error, Result};

/// Complex double.
pub type C64 = num_complex::Complex64;
