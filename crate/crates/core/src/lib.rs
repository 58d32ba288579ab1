//! Potential field around two equal disks with imperfectly bonded interfaces.
//!
//! The exterior of the disks maps conformally onto an annulus. There the
//! problem reduces to a diagonally dominant tridiagonal system for the
//! Fourier coefficients of a complex potential `W`. `Re W` solves the
//! low-conductivity (Robin) problem. `Im W` solves the high-conductivity
//! (surface Laplacian) problem with the same parameter.
//!
//! ```
//! use bondfield::{field, ComplexPotential, ConformalFrame};
//! use num_complex::Complex64;
//!
//! let frame = ConformalFrame::from_params(1.0, 1e-4)?;
//! let sol = bondfield::operator::solve(&frame, 1.0, 1e-12)?;
//! let pot = ComplexPotential::new(sol);
//! let (ux, _) = field::eval_grad(&pot, Complex64::new(0.0, 0.0))?;
//! assert!(ux > 0.0);
//! # Ok::<(), bondfield::Error>(())
//! ```

pub mod bounds;
pub mod ddouble;
pub mod duality;
pub mod error;
pub mod field;
pub mod geometry;
pub mod operator;
pub mod parallel;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ComplexPotential, FieldMode};
pub use geometry::{ConformalFrame, DiskPair, ExtendedPoint};
pub use operator::{BondingConfig, SpectralSolution};
pub use parallel::Execution;
