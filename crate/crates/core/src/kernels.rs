//! Wavenumbers, the acoustic fundamental solution, and split kernels.
//!
//! Every boundary kernel used by the assembly is written as
//! `(1/|x^ - y^|) * weak + smooth` in the sphere chart, where both factors
//! extend smoothly across the diagonal. The weak parts carry the distance
//! ratio R = |x^ - y^| / |q(x^) - q(y^)| so that the graded singular rule,
//! which integrates 1/|x^ - y^| exactly against low-degree harmonics, can be
//! applied verbatim. Single-layer parts carry J(y^); normal-derivative and
//! tangential-cross parts carry J(y^)J(x^).

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Surface;

/// Sphere-chart separation below which difference ratios switch to the
/// second-order Taylor branch. Product grids never get this close, but the
/// guard keeps the evaluator total.
const NEAR_DIAGONAL: f64 = 1e-6;

/// Homogeneous isotropic elastic medium at a fixed angular frequency.
#[derive(Clone, Copy, Debug)]
pub struct ElasticMedium {
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticMedium {
    /// Requires omega > 0, mu > 0 and lambda + mu > 0, which makes both wave
    /// speeds real and kappa_p < kappa_s.
    pub fn new(omega: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(omega > 0.0) || !(mu > 0.0) || !(lambda + mu > 0.0) {
            return Err(Error::InvalidMedium { omega, lambda, mu });
        }
        Ok(Self { omega, lambda, mu })
    }

    /// Compressional wavenumber omega / sqrt(lambda + 2 mu).
    pub fn kappa_p(&self) -> f64 {
        self.omega / (self.lambda + 2.0 * self.mu).sqrt()
    }

    /// Shear wavenumber omega / sqrt(mu).
    pub fn kappa_s(&self) -> f64 {
        self.omega / self.mu.sqrt()
    }

    pub fn wavenumbers(&self) -> (f64, f64) {
        (self.kappa_p(), self.kappa_s())
    }
}

/// Outgoing Helmholtz fundamental solution e^{i kappa r} / (4 pi r).
pub fn fundamental_solution(x: &Vector3<f64>, y: &Vector3<f64>, kappa: f64) -> Result<Complex64> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(Complex64::from_polar(1.0, kappa * r) / (4.0 * PI * r))
}

/// sin(z)/z continued through z = 0, with sin z supplied by the caller so a
/// hot loop can share one evaluation across every splitting at the same z.
#[inline]
fn sinc_from(z: f64, sin_z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0)
    } else {
        sin_z / z
    }
}

/// sin(z)/z continued through z = 0.
fn sinc(z: f64) -> f64 {
    sinc_from(z, z.sin())
}

/// (z cos z - sin z) / z^3, entire and even, value -1/3 at z = 0.
#[inline]
fn phi3_from(z: f64, sin_z: f64, cos_z: f64) -> f64 {
    if z.abs() < 0.5 {
        // alternating series sum_{k>=1} (-1)^k 2k z^{2k-2} / (2k+1)!
        let z2 = z * z;
        let mut term = -1.0 / 3.0;
        let mut acc = term;
        for k in 2u32..=8 {
            let tk = 2 * k;
            term *= -z2 * f64::from(tk) / f64::from(tk * (tk + 1) * (tk - 2));
            acc += term;
        }
        acc
    } else {
        (z * cos_z - sin_z) / (z * z * z)
    }
}

fn phi3(z: f64) -> f64 {
    phi3_from(z, z.sin(), z.cos())
}

/// Even coefficient of the 1/r singularity of twice the normal derivative:
/// -(cos z + z sin z) / (2 pi) at z = kr.
#[inline]
fn sigma_even_from(z: f64, sin_z: f64, cos_z: f64) -> f64 {
    -(cos_z + z * sin_z) / (2.0 * PI)
}

fn sigma_even(kappa: f64, r: f64) -> f64 {
    let z = kappa * r;
    sigma_even_from(z, z.sin(), z.cos())
}

/// Geometry data the kernel splittings need at one chart point.
#[derive(Clone, Copy, Debug)]
pub struct KernelPoint {
    /// Unit direction on the parameter sphere.
    pub dir: Vector3<f64>,
    /// Surface point q(dir).
    pub point: Vector3<f64>,
    /// Outward unit normal at the surface point.
    pub normal: Vector3<f64>,
    /// Area element relative to the sphere measure.
    pub jacobian: f64,
}

impl KernelPoint {
    pub fn at(surface: &Surface, theta: f64, phi: f64) -> Result<Self> {
        let frame = surface.frame(theta, phi)?;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(Self {
            dir: Vector3::new(st * cp, st * sp, ct),
            point: frame.point,
            normal: frame.normal,
            jacobian: frame.jacobian,
        })
    }
}

/// Chart angles of a unit direction; only the near-diagonal jet expansions
/// need them, so they are recovered on demand rather than carried around.
#[inline]
fn chart_angles(dir: &Vector3<f64>) -> (f64, f64) {
    (dir.z.clamp(-1.0, 1.0).acos(), dir.y.atan2(dir.x))
}

/// nu(x).(x - y) / |x - y|^2, smooth across the diagonal on a smooth surface.
/// Near-diagonal pairs are expanded to second order about x to avoid the
/// cancellation in the numerator.
fn delta_ratio(
    surface: &Surface,
    x: &KernelPoint,
    y: &KernelPoint,
    delta: &Vector3<f64>,
    rt2: f64,
    sphere_dist: f64,
) -> f64 {
    if sphere_dist >= NEAR_DIAGONAL {
        return x.normal.dot(delta) / rt2;
    }
    let (xt, xp) = chart_angles(&x.dir);
    let (dt, dp) = wrapped_increments(xt, xp, y);
    let jet = surface.jet2(xt, xp);
    let dquad2 = jet.q_tt * (dt * dt) + jet.q_tp * (2.0 * dt * dp) + jet.q_pp * (dp * dp);
    let dlin = jet.q_t * dt + jet.q_p * dp;
    -x.normal.dot(&dquad2) / (2.0 * dlin.norm_squared())
}

/// The pair (nu(x).delta/r^2, B/r^2) with B = delta (nu(x)-nu(y))^T - (nu(x).delta) I.
/// B annihilates the normal component at y, so B g is tangential data times
/// the scalar splitting.
fn delta_ratios(
    surface: &Surface,
    x: &KernelPoint,
    y: &KernelPoint,
    delta: &Vector3<f64>,
    rt2: f64,
    sphere_dist: f64,
) -> (f64, Matrix3<f64>) {
    if sphere_dist >= NEAR_DIAGONAL {
        let ratio = x.normal.dot(delta) / rt2;
        let bratio =
            delta * (x.normal - y.normal).transpose() / rt2 - Matrix3::identity() * ratio;
        return (ratio, bratio);
    }
    let (xt, xp) = chart_angles(&x.dir);
    let (dt, dp) = wrapped_increments(xt, xp, y);
    let jet = surface.jet2(xt, xp);
    let dquad2 = jet.q_tt * (dt * dt) + jet.q_tp * (2.0 * dt * dp) + jet.q_pp * (dp * dp);
    let dlin = jet.q_t * dt + jet.q_p * dp;
    let lin2 = dlin.norm_squared();
    let ratio = -x.normal.dot(&dquad2) / (2.0 * lin2);
    let dnu = match surface.frame_jet(xt, xp) {
        Ok(fj) => fj.dnormal_t * dt + fj.dnormal_p * dp,
        // interior chart points always have a frame jet; fall back to the
        // exact difference rather than panic
        Err(_) => x.normal - y.normal,
    };
    let bratio = dlin * dnu.transpose() / lin2 - Matrix3::identity() * ratio;
    (ratio, bratio)
}

fn wrapped_increments(xt: f64, xp: f64, y: &KernelPoint) -> (f64, f64) {
    let (yt, yp) = chart_angles(&y.dir);
    let dt = xt - yt;
    let mut dp = xp - yp;
    dp -= (dp / (2.0 * PI)).round() * 2.0 * PI;
    (dt, dp)
}

/// Split single-layer kernel at one ordered pair for a raw wavenumber:
/// weak part R cos(kappa r)/(2 pi) J(y^) and smooth part
/// i sin(kappa r)/(2 pi r) J(y^). Reassembles to 2 Phi J(y^).
pub fn single_layer_parts(kappa: f64, x: &KernelPoint, y: &KernelPoint) -> (f64, Complex64) {
    let rt = (x.point - y.point).norm();
    let sphere_dist = (x.dir - y.dir).norm();
    let ratio_r = sphere_dist / rt;
    let s1 = (kappa * rt).cos() / (2.0 * PI);
    let s2 = Complex64::new(0.0, kappa * sinc(kappa * rt) / (2.0 * PI));
    (ratio_r * s1 * y.jacobian, s2 * y.jacobian)
}

/// Split kernel of twice the normal derivative at x for a raw wavenumber,
/// with both Jacobians folded in. Reassembles to
/// 2 dPhi/dnu(x) J(y^) J(x^).
pub fn normal_derivative_parts(
    surface: &Surface,
    kappa: f64,
    x: &KernelPoint,
    y: &KernelPoint,
) -> (f64, Complex64) {
    let delta = x.point - y.point;
    let rt2 = delta.norm_squared();
    let rt = rt2.sqrt();
    let sphere_dist = (x.dir - y.dir).norm();
    let ratio = delta_ratio(surface, x, y, &delta, rt2, sphere_dist);
    let jj = x.jacobian * y.jacobian;
    let k1 = (sphere_dist / rt) * ratio * sigma_even(kappa, rt) * jj;
    let odd = Complex64::new(0.0, kappa.powi(3) / (2.0 * PI) * phi3(kappa * rt));
    let k2 = ratio * rt2 * odd * jj;
    (k1, k2)
}

/// All split-kernel values at one ordered node pair: single layers for both
/// wavenumbers, the compressional normal-derivative kernel, and the scalar
/// and matrix factors of the shear tangential-cross kernel.
#[derive(Clone, Copy, Debug)]
pub struct KernelSample {
    pub sp1: f64,
    pub sp2: Complex64,
    pub ss1: f64,
    pub ss2: Complex64,
    pub k1: f64,
    pub k2: Complex64,
    /// Scalar multiplying `bratio` in the weak cross-kernel part.
    pub m1: f64,
    /// Scalar multiplying `bratio` in the smooth cross-kernel part.
    pub m2: Complex64,
    /// (delta (nu(x)-nu(y))^T - (nu(x).delta) I) / r^2, real and O(1).
    pub bratio: Matrix3<f64>,
    /// Distance ratio R = |x^ - y^| / |q(x^) - q(y^)|.
    pub ratio: f64,
}

impl KernelSample {
    /// Weak cross-kernel part as a full matrix.
    pub fn m1_matrix(&self) -> Matrix3<Complex64> {
        self.bratio.map(|v| Complex64::from(v * self.m1))
    }

    /// Smooth cross-kernel part as a full matrix.
    pub fn m2_matrix(&self) -> Matrix3<Complex64> {
        self.bratio.map(|v| self.m2 * v)
    }
}

/// Evaluate every split kernel at the ordered pair (x, y), x^ != y^.
pub fn kernel_samples(
    surface: &Surface,
    medium: &ElasticMedium,
    x: &KernelPoint,
    y: &KernelPoint,
) -> KernelSample {
    let (kp, ks) = medium.wavenumbers();
    let delta = x.point - y.point;
    let rt2 = delta.norm_squared();
    let rt = rt2.sqrt();
    let sphere_dist = (x.dir - y.dir).norm();
    let ratio_r = sphere_dist / rt;
    let (ratio_nd, bratio) = delta_ratios(surface, x, y, &delta, rt2, sphere_dist);

    let jy = y.jacobian;
    let jj = x.jacobian * jy;

    // One sin and one cos per wavenumber feed every splitting at this pair.
    let zp = kp * rt;
    let zs = ks * rt;
    let (sin_p, cos_p) = (zp.sin(), zp.cos());
    let (sin_s, cos_s) = (zs.sin(), zs.cos());

    let sp2 = Complex64::new(0.0, kp * sinc_from(zp, sin_p) / (2.0 * PI));
    let ss2 = Complex64::new(0.0, ks * sinc_from(zs, sin_s) / (2.0 * PI));
    let odd_p = Complex64::new(0.0, kp.powi(3) / (2.0 * PI) * phi3_from(zp, sin_p, cos_p));
    let odd_s = Complex64::new(0.0, ks.powi(3) / (2.0 * PI) * phi3_from(zs, sin_s, cos_s));

    KernelSample {
        sp1: ratio_r * cos_p / (2.0 * PI) * jy,
        sp2: sp2 * jy,
        ss1: ratio_r * cos_s / (2.0 * PI) * jy,
        ss2: ss2 * jy,
        k1: ratio_r * ratio_nd * sigma_even_from(zp, sin_p, cos_p) * jj,
        k2: ratio_nd * rt2 * odd_p * jj,
        m1: ratio_r * sigma_even_from(zs, sin_s, cos_s) * jj,
        m2: rt2 * odd_s * jj,
        bratio,
        ratio: ratio_r,
    }
}
