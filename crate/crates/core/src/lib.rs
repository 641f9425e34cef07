//! Spectral Galerkin boundary-integral solver for time-harmonic elastic
//! scattering by a rigid 3D obstacle.
//!
//! The displacement field is split into a compressional potential (a Helmholtz
//! problem at wavenumber `kappa_p`) and a shear potential (a Maxwell-type
//! problem at `kappa_s`). The coupled boundary integral system is discretized
//! with spherical-harmonic Galerkin quadrature on a parametrized boundary; the
//! weakly singular kernels are handled by rotating each observation point to
//! the north pole so a product rule with Legendre-sum weights integrates the
//! 1/|x - y| singularity exactly on the sphere.
//!
//! Crate layout follows the pipeline: [`geometry`] (parametrized surfaces and
//! tangent frames), [`sphharm`] (scalar and tangential vector harmonics,
//! rotation coefficients), [`quadrature`] (Gauss-Legendre product rules and
//! singular weights), [`kernels`] (split fundamental-solution kernels),
//! [`rotation`] (north-pole rotation and tangent transport), [`assembly`]
//! (Galerkin matrix chains), [`solver`] (dense solve and density synthesis),
//! [`fields`] (incident fields, far-field patterns, error norms).

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod fields;
pub mod kernels;
pub mod quadrature;
pub mod solver;
pub mod rotation;
pub mod special;
pub mod sphharm;

pub use error::{Error, Result};
