//! Correlation kernels for the squared singular values of a coupled product
//! `X1 X2` of two complex Gaussian matrices.
//!
//! The finite-N kernel is available two ways (inverse Gram matrix and a double
//! contour integral), together with the four hard-edge limiting kernels, the
//! Jacobi-type variant, Fredholm gap probabilities, Monte Carlo sampling and
//! convergence sweeps. A command-line front end lives in `src/main.rs`.
//!
//! Quadrature rules are generic over [`Real`] (`f32` or `f64`); the complex
//! special functions and kernels work in `f64`.

pub mod biorthogonal;
pub mod cli;
pub mod contour;
pub mod ensemble;
pub mod error;
pub mod fredholm;
pub mod limits;
pub mod parallel;
pub mod quadrature;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Scalar bound for the generic numerical layers.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + nalgebra::RealField
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

pub type GaussRule64 = quadrature::GaussRule<f64>;
pub type GaussRule32 = quadrature::GaussRule<f32>;

pub use biorthogonal::{BiorthogonalSystem, JacobiEnsembleParams};
pub use contour::{ContourPair, ContourSpec, KernelValue};
pub use ensemble::{GaussianEnsembleParams, SampleBatch};
pub use limits::LimitKernelParams;
