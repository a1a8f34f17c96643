//! Anisotropic plank geometry of nondegenerate curves, and discrete Fourier
//! experiments that check wave-envelope, square-function, Kakeya-type,
//! Bochner-Riesz and local-smoothing inequalities at desk scale.

// index loops read better than iterator chains in the matrix-heavy code
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod cover;
pub mod curve;
pub mod error;
pub mod extremal;
pub mod field;
pub mod frame;
pub mod grid;
pub mod highlow;
pub mod hollow;
pub mod jet;
pub mod oscint;
pub mod packets;
pub mod plank;
pub mod prune;
pub mod report;
pub mod runner;
pub mod scale;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
