//! Piecewise-linear analogues of the trigonometric system.
//!
//! The crate covers the sawtooth pair `C(x) = 4|x - 1/2| - 1`,
//! `S(x) = |2 - 4|x - 1/4|| - 1` (both 1-periodic), the 2-periodic
//! antiperiodic hat function, their integer dilations, tensor products and
//! ridge compositions `C(k . x)`, together with
//!
//! * exact rational inner products and Gram matrices ([`gram`]),
//! * a cyclic Jacobi eigensolver for Riesz-constant checks ([`eigen`]),
//! * the transfer operators mapping trigonometric systems onto the
//!   piecewise-linear ones, in function space and in coefficient space
//!   (Dirichlet convolution) ([`transfer`]),
//! * quadrature: exact piecewise-quadratic integration, composite
//!   Gauss-Legendre, Monte Carlo and randomized lattice rules ([`quadrature`]),
//! * coefficient extraction, change of basis, reconstruction and L_q
//!   convergence experiments ([`expand`]),
//! * compilation of every univariate and ridge basis function into an exact
//!   one-hidden-layer ReLU network ([`relu`]).

pub mod eigen;
pub mod error;
pub mod expand;
pub mod gram;
pub mod index;
pub mod pwl;
pub mod quadrature;
pub mod rational;
pub mod relu;
pub mod transfer;

mod par;

pub use error::{Error, Result};
pub use par::set_threads;
pub use index::{FreqIndex, MultiIndex};
pub use pwl::Family;
pub use rational::ExactRational;
