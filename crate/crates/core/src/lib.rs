//! Optimal transport and inner-product Gromov-Wasserstein (IGW) alignment
//! between Gaussian measures.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectra`]: symmetric eigendecomposition, PSD square roots, PSD tests.
//! - [`gaussian`]: the [`Gaussian`] value type, empirical fitting and the
//!   eigenbasis view ([`SpectralForm`]) consumed by the IGW formulas.
//! - [`transport`]: Bures-Wasserstein distance, OT map, displacement
//!   interpolation and the fixed-point 2-Wasserstein barycenter.
//! - [`manifold`]: Riemannian gradient ascent on the Stiefel manifold and a
//!   trust-region solver on the block-Gram manifold `{U : U_i U_iᵀ = Σ_i}`.
//! - [`igw`]: IGW distances (optimised, bounded, closed-form), couplings and
//!   barycenters.
//! - [`multimarginal`]: multimarginal IGW in closed form and multimarginal OT
//!   through a low-rank (Burer-Monteiro) factorisation.
//! - [`cluster`]: pairwise distance matrices, k-means++, classical MDS, CKA.
//! - [`io`]: Gaussian JSON and point-cloud CSV files.
//!
//! ```
//! use gaussalign::igw::{igw_bounds, igw_distance_rgd};
//! use gaussalign::{DMatrix, DVector, Gaussian, SolverConfig};
//!
//! let a = Gaussian::new(
//!     DVector::from_vec(vec![1.0, -0.5]),
//!     DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
//! )?;
//! let b = Gaussian::centered(DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 3.0, 0.1, 0.0, 0.1, 0.5]))?;
//! let est = igw_distance_rgd(&a, &b, &SolverConfig::rgd())?;
//! let bounds = igw_bounds(&a, &b)?;
//! assert!(bounds.lower <= est.distance && est.distance <= bounds.upper);
//! # Ok::<(), gaussalign::Error>(())
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod gaussian;
pub mod igw;
pub mod io;
pub mod manifold;
pub mod multimarginal;
pub mod sampling;
pub mod spectra;
pub mod transport;

pub use error::{Error, Result};
pub use gaussian::{Gaussian, SpectralForm, WeightedCollection};
pub use manifold::{SolverConfig, SospReport};

pub use nalgebra::{DMatrix, DVector};
