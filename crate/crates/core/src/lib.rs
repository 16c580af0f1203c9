//! Fourier-Hermite toolkit for the Grushin-Schrodinger equation
//! `i ∂t u − Δ_G u = |u|² u` on `R_x × T_y`, with `Δ_G = ∂²_x + x² ∂²_y`.
//!
//! A field is stored through its coefficients `f_m(η_q)` in the frame
//! `F_{y→η} u(x, η) = Σ_m f_m(η) h_m(√|η| x)`, on which `Δ_G` is diagonal
//! with symbol `−(2m+1)|η|`.
//!
//! Numerical kernels are generic over [`Real`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the sweep harness and the CLI use.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod flow;
pub mod grid;
pub mod hermite;
pub mod io;
pub mod products;
pub mod report;
pub mod shift;
pub mod solver;
pub mod spectral;
pub mod stats;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use error::{Error, Result};
pub use grid::{DyadicIndex, GridSpec};
pub use num_complex::Complex;

/// Scalar type accepted by the numerical kernels.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + rustfft::FftNum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[inline]
pub(crate) fn cst<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable")
}

#[inline]
pub(crate) fn to64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub type Grid64 = spectral::Grid<f64>;
pub type SpectralField64 = spectral::SpectralField<f64>;
pub type PhysicalField64 = spectral::PhysicalField<f64>;
pub type HermiteTable64 = hermite::HermiteTable<f64>;
pub type Solver64 = solver::Solver<f64>;

/// Version string embedded in every report.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
