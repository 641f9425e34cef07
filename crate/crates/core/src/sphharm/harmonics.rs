//! Complex spherical harmonics, their surface gradients, and the transported
//! tangential vector basis on a parametrized surface.

use super::legendre::NormalizedLegendre;
use crate::error::Result;
use crate::geometry::Surface;
use crate::rotation::tangent_transport;
use nalgebra::Vector3;
use num_complex::Complex64;

/// Sign carried by the normalization constant: (-1)^j for j > 0, +1 otherwise.
#[inline]
pub fn phase(j: i64) -> f64 {
    if j > 0 && j % 2 != 0 {
        -1.0
    } else {
        1.0
    }
}

/// Y_{l,j}(theta, phi).
pub fn sph_harmonic(l: usize, j: i64, theta: f64, phi: f64) -> Complex64 {
    debug_assert!(j.unsigned_abs() as usize <= l);
    let tab = NormalizedLegendre::new(l, theta);
    sph_harmonic_from(&tab, l, j, phi)
}

/// Y_{l,j} using a prebuilt Legendre table at the polar angle.
#[inline]
pub fn sph_harmonic_from(tab: &NormalizedLegendre, l: usize, j: i64, phi: f64) -> Complex64 {
    let m = j.unsigned_abs() as usize;
    phase(j) * tab.value(l, m) * Complex64::from_polar(1.0, j as f64 * phi)
}

/// Spherical basis vectors e_theta, e_phi at (theta, phi).
#[inline]
pub fn sphere_basis(theta: f64, phi: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vector3::new(ct * cp, ct * sp, -st),
        Vector3::new(-sp, cp, 0.0),
    )
}

#[inline]
fn combine(
    e_t: &Vector3<f64>,
    e_p: &Vector3<f64>,
    a: Complex64,
    b: Complex64,
) -> Vector3<Complex64> {
    Vector3::new(
        a * e_t.x + b * e_p.x,
        a * e_t.y + b * e_p.y,
        a * e_t.z + b * e_p.z,
    )
}

/// Surface gradient of Y_{l,j} on the unit sphere, as an ambient 3-vector.
/// The pole values are the continuous limits, nonzero only for |j| = 1.
pub fn grad_sph_harmonic(l: usize, j: i64, theta: f64, phi: f64) -> Vector3<Complex64> {
    let m = j.unsigned_abs() as usize;
    debug_assert!(m <= l);
    let (e_t, e_p) = sphere_basis(theta, phi);
    let st = theta.sin();
    let eijp = Complex64::from_polar(1.0, j as f64 * phi);
    let (a, b) = if st.abs() < 1e-12 {
        if m != 1 || l == 0 {
            return Vector3::zeros();
        }
        pole_gradient_components(l, j, theta.cos())
    } else {
        let tab = NormalizedLegendre::new(l, theta);
        (
            Complex64::from(phase(j) * tab.dtheta(l, m)),
            Complex64::new(0.0, j as f64) * (phase(j) * tab.value(l, m) / st),
        )
    };
    combine(&e_t, &e_p, a * eijp, b * eijp)
}

/// (e_theta, e_phi) components of grad Y_{l,±1} at a pole, without the
/// azimuthal phase factor: the limit of (dN, i j N / sin) as sin -> 0.
#[inline]
fn pole_gradient_components(l: usize, j: i64, ct: f64) -> (Complex64, Complex64) {
    let lf = l as f64;
    let n = (((2.0 * lf + 1.0) / (4.0 * std::f64::consts::PI)) * lf * (lf + 1.0)).sqrt();
    let a = Complex64::from(phase(j) * n * ct.powi(l as i32) / 2.0);
    let b = Complex64::new(0.0, j as f64 * phase(j) * n * ct.powi(l as i32 + 1) / 2.0);
    (a, b)
}

/// alpha^{(k,d)}_{l,j}(theta) for d = 1, 2: expansion coefficients over
/// (e_theta, e_phi) of the two tangential families
///   k = 1: Grad Y / sqrt(l(l+1)),
///   k = 2: (xhat x Grad Y) / sqrt(l(l+1)).
pub fn alpha_coeff(k: usize, l: usize, j: i64, theta: f64) -> [Complex64; 2] {
    let tab = NormalizedLegendre::new(l, theta);
    alpha_coeff_from(&tab, k, l, j, theta)
}

/// Same, with a caller-owned Legendre table (table lmax must be >= l).
pub fn alpha_coeff_from(
    tab: &NormalizedLegendre,
    k: usize,
    l: usize,
    j: i64,
    theta: f64,
) -> [Complex64; 2] {
    debug_assert!(l >= 1 && (k == 1 || k == 2));
    let m = j.unsigned_abs() as usize;
    let st = theta.sin();
    let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
    let (a, b) = if st.abs() < 1e-12 {
        if m != 1 {
            (Complex64::default(), Complex64::default())
        } else {
            let (ga, gb) = pole_gradient_components(l, j, theta.cos());
            (ga * norm, gb * norm)
        }
    } else {
        (
            Complex64::from(phase(j) * tab.dtheta(l, m) * norm),
            Complex64::new(0.0, j as f64) * (phase(j) * tab.value(l, m) * norm / st),
        )
    };
    match k {
        1 => [a, b],
        _ => [-b, a],
    }
}

/// d/dtheta of alpha^{(k,d)}_{l,j}; interior angles only.
pub fn alpha_coeff_dtheta(k: usize, l: usize, j: i64, theta: f64) -> [Complex64; 2] {
    let tab = NormalizedLegendre::new(l, theta);
    alpha_coeff_dtheta_from(&tab, k, l, j, theta)
}

pub fn alpha_coeff_dtheta_from(
    tab: &NormalizedLegendre,
    k: usize,
    l: usize,
    j: i64,
    theta: f64,
) -> [Complex64; 2] {
    debug_assert!(l >= 1 && (k == 1 || k == 2));
    let m = j.unsigned_abs() as usize;
    let (st, ct) = theta.sin_cos();
    debug_assert!(st.abs() > 1e-12, "derivative requested at a pole");
    let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
    let da = Complex64::from(phase(j) * tab.d2theta(l, m) * norm);
    // d/dtheta [ value / sin ] = (dvalue sin - value cos) / sin^2
    let db = Complex64::new(0.0, j as f64)
        * (phase(j) * norm * (tab.dtheta(l, m) * st - tab.value(l, m) * ct) / (st * st));
    match k {
        1 => [da, db],
        _ => [-db, da],
    }
}

/// Transported tangential basis field on the surface:
/// Z^{(k)}_{l,j} = F(xhat) { Grad Y, xhat x Grad Y }_k / sqrt(l(l+1)).
pub fn z_basis(
    surface: &Surface,
    k: usize,
    l: usize,
    j: i64,
    theta: f64,
    phi: f64,
) -> Result<Vector3<Complex64>> {
    let frame = surface.frame(theta, phi)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let xhat = Vector3::new(st * cp, st * sp, ct);
    let f = tangent_transport(&xhat, &frame.normal)?;
    let g = grad_sph_harmonic(l, j, theta, phi);
    let w = match k {
        1 => g,
        _ => xhat.map(Complex64::from).cross(&g),
    };
    let norm = Complex64::from(1.0 / ((l * (l + 1)) as f64).sqrt());
    Ok((f.map(Complex64::from) * w) * norm)
}
