//! Spherical harmonics, associated Legendre tables, and Wigner-d machinery.

pub mod harmonics;
pub mod legendre;
pub mod wigner;

pub use harmonics::{
    alpha_coeff, alpha_coeff_dtheta, alpha_coeff_dtheta_from, alpha_coeff_from,
    grad_sph_harmonic, phase, sph_harmonic, sph_harmonic_from, sphere_basis, z_basis,
};
pub use legendre::{
    assoc_legendre, legendre, legendre_partial_sum, legendre_with_deriv, NormalizedLegendre,
};
pub use wigner::{rotation_coefficients, WignerTable};
