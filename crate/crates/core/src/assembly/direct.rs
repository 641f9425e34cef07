//! Literal quadruple-sum evaluation of single Galerkin entries.
//!
//! Every entry is computed by iterating the outer rule and, per outer node,
//! the rotated inner rule, evaluating the ansatz functions at the rotated
//! nodes directly from their definitions. No azimuthal transforms, no
//! recoupling matrices, no factored test weights: this path shares only the
//! kernel splittings and the special-function primitives with the fast
//! chains, which makes it a meaningful cross-check for them, entry by entry.

use crate::error::Result;
use crate::fields::IncidentField;
use crate::geometry::Surface;
use crate::kernels::{
    kernel_samples, normal_derivative_parts, single_layer_parts, ElasticMedium, KernelPoint,
};
use crate::quadrature::{singular_weights, SphericalQuadrature};
use crate::rotation::{node_rotation, rotated_angles, tangent_transport_jet};
use crate::sphharm::{
    alpha_coeff_dtheta_from, alpha_coeff_from, grad_sph_harmonic, sph_harmonic, sphere_basis,
    z_basis, NormalizedLegendre,
};
use nalgebra::Vector3;
use num_complex::Complex64;

fn cvec(v: &Vector3<f64>) -> Vector3<Complex64> {
    v.map(Complex64::from)
}

/// Visit the rotated inner rule around one outer node. The closure receives
/// the plain rule weight, the corrective weight of the weak kernel parts,
/// the rotated kernel point, and its chart angles.
fn for_inner(
    surface: &Surface,
    inner: &SphericalQuadrature,
    alpha_sing: &[f64],
    x_theta: f64,
    x_phi: f64,
    mut f: impl FnMut(f64, f64, &KernelPoint, f64, f64) -> Result<()>,
) -> Result<()> {
    let rot = node_rotation(x_theta, x_phi);
    for (sp, &th) in inner.thetas.iter().enumerate() {
        let weight = inner.mu * inner.nu[sp];
        let alpha = alpha_sing[sp];
        let (st, ct) = th.sin_cos();
        for &ph in &inner.phis {
            let (spn, cpn) = ph.sin_cos();
            let z = Vector3::new(st * cpn, st * spn, ct);
            let (lam, xi) = rotated_angles(&rot.t_inv, &z)?;
            let y = KernelPoint::at(surface, lam, xi)?;
            f(weight, alpha, &y, lam, xi)?;
        }
    }
    Ok(())
}

/// Rule data for the slow entry evaluation.
pub struct DirectRule {
    pub surface: Surface,
    pub medium: ElasticMedium,
    pub n: usize,
    pub nprime: usize,
    outer: SphericalQuadrature,
    inner: SphericalQuadrature,
    alpha_sing: Vec<f64>,
}

impl DirectRule {
    pub fn new(surface: Surface, medium: ElasticMedium, n: usize, nprime: usize) -> Self {
        let outer = SphericalQuadrature::build(n + 1);
        let inner = SphericalQuadrature::build(nprime);
        let alpha_sing = singular_weights(nprime, &inner.zs);
        Self {
            surface,
            medium,
            n,
            nprime,
            outer,
            inner,
            alpha_sing,
        }
    }

    /// Outer Galerkin sum: weight * f(theta_s, phi_r, x node) over the rule.
    fn outer_sum(
        &self,
        mut f: impl FnMut(f64, f64, &KernelPoint) -> Result<Complex64>,
    ) -> Result<Complex64> {
        let mut acc = Complex64::default();
        for (s, &theta) in self.outer.thetas.iter().enumerate() {
            for &phi in &self.outer.phis {
                let x = KernelPoint::at(&self.surface, theta, phi)?;
                acc += self.outer.mu * self.outer.nu[s] * f(theta, phi, &x)?;
            }
        }
        Ok(acc)
    }

    fn inner(
        &self,
        x_theta: f64,
        x_phi: f64,
        f: impl FnMut(f64, f64, &KernelPoint, f64, f64) -> Result<()>,
    ) -> Result<()> {
        for_inner(&self.surface, &self.inner, &self.alpha_sing, x_theta, x_phi, f)
    }

    /// Scalar Gram entry (J Y_{l,j}, Y_{l',j'}) over the outer rule.
    pub fn gram_scalar(&self, lp: usize, jp: i64, l: usize, j: i64) -> Result<Complex64> {
        self.outer_sum(|theta, phi, x| {
            Ok(x.jacobian
                * sph_harmonic(l, j, theta, phi)
                * sph_harmonic(lp, jp, theta, phi).conj())
        })
    }

    /// Tangential Gram entry (J Z^{(kt)}_{l,j}, Z^{(k')}_{l',j'}).
    pub fn gram_vector(
        &self,
        kprime: usize,
        ktilde: usize,
        lp: usize,
        jp: i64,
        l: usize,
        j: i64,
    ) -> Result<Complex64> {
        self.outer_sum(|theta, phi, x| {
            let zt = z_basis(&self.surface, ktilde, l, j, theta, phi)?;
            let zp = z_basis(&self.surface, kprime, lp, jp, theta, phi)?;
            Ok(x.jacobian * zp.dotc(&zt))
        })
    }

    /// Entry of twice the compressional double-layer block against scalar
    /// test modes.
    pub fn k_entry(&self, lp: usize, jp: i64, l: usize, j: i64) -> Result<Complex64> {
        let kappa = self.medium.kappa_p();
        self.outer_sum(|theta, phi, x| {
            let mut applied = Complex64::default();
            self.inner(theta, phi, |weight, alpha, y, lam, xi| {
                let (k1, k2) = normal_derivative_parts(&self.surface, kappa, x, y);
                applied += weight * (k2 + alpha * k1) * sph_harmonic(l, j, lam, xi);
                Ok(())
            })?;
            Ok(applied * sph_harmonic(lp, jp, theta, phi).conj())
        })
    }

    /// Entry of the shear single-layer block: vector single layer applied to
    /// Z^{(ktilde)}_{l,j}, tested against the curl-type scalar-row factor.
    pub fn n_entry(
        &self,
        ktilde: usize,
        lp: usize,
        jp: i64,
        l: usize,
        j: i64,
    ) -> Result<Complex64> {
        let kappa = self.medium.kappa_s();
        self.outer_sum(|theta, phi, x| {
            let mut applied = Vector3::<Complex64>::zeros();
            self.inner(theta, phi, |weight, alpha, y, lam, xi| {
                let (s1, s2) = single_layer_parts(kappa, x, y);
                let z = z_basis(&self.surface, ktilde, l, j, lam, xi)?;
                applied += z * ((s2 + alpha * s1) * weight);
                Ok(())
            })?;
            // Test vector: chart tangents weighted by the components of the
            // sphere curl of the test harmonic.
            let fr = self.surface.frame(theta, phi)?;
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            let xhat = Vector3::new(st * cp, st * sp, ct);
            let g = grad_sph_harmonic(lp, jp, theta, phi);
            let curl = g.cross(&cvec(&xhat));
            let (et, ep) = sphere_basis(theta, phi);
            let test = cvec(&fr.t1) * curl.dot(&cvec(&et)) + cvec(&fr.t2) * curl.dot(&cvec(&ep));
            Ok(test.dotc(&applied))
        })
    }

    /// Entry of the compressional single-layer block against tangential
    /// tests: scalar single layer applied to Y_{l,j}, tested with the
    /// rotated-gradient contraction of Z^{(k')}_{l',j'}.
    pub fn h_entry(
        &self,
        kprime: usize,
        lp: usize,
        jp: i64,
        l: usize,
        j: i64,
    ) -> Result<Complex64> {
        let kappa = self.medium.kappa_p();
        self.outer_sum(|theta, phi, x| {
            let mut applied = Complex64::default();
            self.inner(theta, phi, |weight, alpha, y, lam, xi| {
                let (s1, s2) = single_layer_parts(kappa, x, y);
                applied += weight * (s2 + alpha * s1) * sph_harmonic(l, j, lam, xi);
                Ok(())
            })?;
            let test = self.h_test_factor(kprime, lp, jp, theta, phi)?;
            Ok(applied * test.conj())
        })
    }

    /// The scalar test factor of the tangential rows against a scalar
    /// density: (1/sin) t1 . dphi Z' - t2 . dtheta Z', by the product rule
    /// through the transport, the expansion coefficients, and the moving
    /// sphere basis.
    pub fn h_test_factor(
        &self,
        kprime: usize,
        lp: usize,
        jp: i64,
        theta: f64,
        phi: f64,
    ) -> Result<Complex64> {
        let fr = self.surface.frame(theta, phi)?;
        let jet = tangent_transport_jet(&self.surface, theta, phi)?;
        let tab = NormalizedLegendre::new(lp, theta);
        let al = alpha_coeff_from(&tab, kprime, lp, jp, theta);
        let dal = alpha_coeff_dtheta_from(&tab, kprime, lp, jp, theta);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let xhat = Vector3::new(st * cp, st * sp, ct);
        let (et, ep) = sphere_basis(theta, phi);
        let v = [et, ep];
        let dv_t = [-xhat, Vector3::zeros()];
        let dv_p = [ct * ep, -(st * xhat + ct * et)];
        let eph = Complex64::from_polar(1.0, jp as f64 * phi);
        let ijp = Complex64::new(0.0, jp as f64);
        let mut dz_t = Vector3::<Complex64>::zeros();
        let mut dz_p = Vector3::<Complex64>::zeros();
        for d in 0..2 {
            let fv = jet.f * v[d];
            let dfv_t = jet.df_t * v[d] + jet.f * dv_t[d];
            let dfv_p = jet.df_p * v[d] + jet.f * dv_p[d];
            dz_t += cvec(&fv) * (dal[d] * eph) + cvec(&dfv_t) * (al[d] * eph);
            dz_p += cvec(&fv) * (ijp * al[d] * eph) + cvec(&dfv_p) * (al[d] * eph);
        }
        Ok(cvec(&fr.t1).dot(&dz_p) / st - cvec(&fr.t2).dot(&dz_t))
    }

    /// Entry of the shear tangential-cross block: matrix kernel applied to
    /// Z^{(ktilde)}_{l,j}, tested against Z^{(k')}_{l',j'}.
    pub fn m_entry(
        &self,
        kprime: usize,
        ktilde: usize,
        lp: usize,
        jp: i64,
        l: usize,
        j: i64,
    ) -> Result<Complex64> {
        self.outer_sum(|theta, phi, x| {
            let mut applied = Vector3::<Complex64>::zeros();
            self.inner(theta, phi, |weight, alpha, y, lam, xi| {
                let samp = kernel_samples(&self.surface, &self.medium, x, y);
                let cm = (samp.m2 + alpha * samp.m1) * weight;
                let z = z_basis(&self.surface, ktilde, l, j, lam, xi)?;
                applied += (samp.bratio.map(Complex64::from) * z) * cm;
                Ok(())
            })?;
            let zp = z_basis(&self.surface, kprime, lp, jp, theta, phi)?;
            Ok(zp.dotc(&applied))
        })
    }

    /// Scalar right-hand side entry 2 (f1 J, Y_{l',j'}).
    pub fn rhs_scalar(&self, incident: &IncidentField, lp: usize, jp: i64) -> Result<Complex64> {
        self.outer_sum(|theta, phi, x| {
            let (f1, _) = incident.trace(&self.surface, theta, phi)?;
            Ok(2.0 * x.jacobian * f1 * sph_harmonic(lp, jp, theta, phi).conj())
        })
    }

    /// Tangential right-hand side entry 2 (f2 J, Z^{(k')}_{l',j'}).
    pub fn rhs_vector(
        &self,
        incident: &IncidentField,
        kprime: usize,
        lp: usize,
        jp: i64,
    ) -> Result<Complex64> {
        self.outer_sum(|theta, phi, x| {
            let (_, f2) = incident.trace(&self.surface, theta, phi)?;
            let zp = z_basis(&self.surface, kprime, lp, jp, theta, phi)?;
            Ok(2.0 * x.jacobian * zp.dotc(&f2))
        })
    }
}

/// Rotated singular rule for the scalar single layer of a raw wavenumber:
/// values of the operator applied to g at every outer node, node-major.
pub fn apply_single_layer(
    surface: &Surface,
    kappa: f64,
    n: usize,
    nprime: usize,
    g: &dyn Fn(f64, f64) -> Complex64,
) -> Result<Vec<Complex64>> {
    let outer = SphericalQuadrature::build(n + 1);
    let inner = SphericalQuadrature::build(nprime);
    let alpha_sing = singular_weights(nprime, &inner.zs);
    let mut out = Vec::with_capacity(outer.n_nodes());
    for &theta in &outer.thetas {
        for &phi in &outer.phis {
            let x = KernelPoint::at(surface, theta, phi)?;
            let mut acc = Complex64::default();
            for_inner(surface, &inner, &alpha_sing, theta, phi, |weight, alpha, y, lam, xi| {
                let (s1, s2) = single_layer_parts(kappa, &x, y);
                acc += weight * (s2 + alpha * s1) * g(lam, xi);
                Ok(())
            })?;
            out.push(acc);
        }
    }
    Ok(out)
}

/// Rotated singular rule for twice the normal-derivative operator of a raw
/// wavenumber, same layout as `apply_single_layer`.
pub fn apply_normal_derivative(
    surface: &Surface,
    kappa: f64,
    n: usize,
    nprime: usize,
    g: &dyn Fn(f64, f64) -> Complex64,
) -> Result<Vec<Complex64>> {
    let outer = SphericalQuadrature::build(n + 1);
    let inner = SphericalQuadrature::build(nprime);
    let alpha_sing = singular_weights(nprime, &inner.zs);
    let mut out = Vec::with_capacity(outer.n_nodes());
    for &theta in &outer.thetas {
        for &phi in &outer.phis {
            let x = KernelPoint::at(surface, theta, phi)?;
            let mut acc = Complex64::default();
            for_inner(surface, &inner, &alpha_sing, theta, phi, |weight, alpha, y, lam, xi| {
                let (k1, k2) = normal_derivative_parts(surface, kappa, &x, y);
                acc += weight * (k2 + alpha * k1) * g(lam, xi);
                Ok(())
            })?;
            out.push(acc);
        }
    }
    Ok(out)
}
