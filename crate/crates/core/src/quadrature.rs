//! Product Gauss–Legendre / trapezoidal quadrature on the unit sphere and the
//! composite weights used for the weakly singular layer integrals.

use crate::error::{Error, Result};
use crate::sphharm::legendre::{legendre_partial_sum, legendre_with_deriv};
use num_complex::Complex64;

/// Nodes and weights of the N-point Gauss–Legendre rule on [-1, 1].
/// Nodes are returned in descending order, so the corresponding polar angles
/// arccos(z) come out ascending.
pub fn gauss_legendre(npts: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(npts >= 1);
    let n = npts;
    let mut zs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for k in 1..=n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_deriv(n, z);
            let step = p / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, z);
        zs.push(z);
        ws.push(2.0 / ((1.0 - z * z) * dp * dp));
    }
    (zs, ws)
}

/// Tensor-product quadrature of order n on the sphere:
/// polar nodes theta_s = arccos(z_s) with z_s the zeros of P_{n+1}, uniform
/// azimuths phi_r = r pi / (n+1) for r = 0..2n+1, weights mu_r = pi/(n+1) and
/// nu_s the Gauss weights. Exact on spherical polynomials of degree <= 2n+1.
#[derive(Clone, Debug)]
pub struct SphericalQuadrature {
    pub order: usize,
    pub thetas: Vec<f64>,
    pub zs: Vec<f64>,
    pub nu: Vec<f64>,
    pub phis: Vec<f64>,
    pub mu: f64,
}

impl SphericalQuadrature {
    pub fn build(order: usize) -> Self {
        let (zs, nu) = gauss_legendre(order + 1);
        let thetas: Vec<f64> = zs.iter().map(|&z| z.acos()).collect();
        let nphi = 2 * order + 2;
        let mu = std::f64::consts::PI / (order as f64 + 1.0);
        let phis: Vec<f64> = (0..nphi).map(|r| mu * r as f64).collect();
        Self {
            order,
            thetas,
            zs,
            nu,
            phis,
            mu,
        }
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.order + 1
    }

    #[inline]
    pub fn n_phi(&self) -> usize {
        2 * self.order + 2
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    /// Flat node index; node values throughout the crate are stored s-major.
    #[inline]
    pub fn node_index(&self, s: usize, r: usize) -> usize {
        s * self.n_phi() + r
    }

    pub fn integrate<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let mut acc = Complex64::default();
        for (s, &theta) in self.thetas.iter().enumerate() {
            let mut row = Complex64::default();
            for &phi in &self.phis {
                row += f(theta, phi);
            }
            acc += self.nu[s] * row;
        }
        self.mu * acc
    }

    pub fn integrate_real<F>(&self, mut f: F) -> f64
    where
        F: FnMut(f64, f64) -> f64,
    {
        let mut acc = 0.0;
        for (s, &theta) in self.thetas.iter().enumerate() {
            let mut row = 0.0;
            for &phi in &self.phis {
                row += f(theta, phi);
            }
            acc += self.nu[s] * row;
        }
        self.mu * acc
    }

    /// Quadrature sum over tabulated node values (s-major layout).
    pub fn integrate_nodes(&self, values: &[Complex64]) -> Result<Complex64> {
        if values.len() != self.n_nodes() {
            return Err(Error::ShapeMismatch {
                expected: self.n_nodes(),
                got: values.len(),
            });
        }
        let nphi = self.n_phi();
        let mut acc = Complex64::default();
        for s in 0..self.n_theta() {
            let mut row = Complex64::default();
            for r in 0..nphi {
                row += values[s * nphi + r];
            }
            acc += self.nu[s] * row;
        }
        Ok(self.mu * acc)
    }
}

/// Composite polar weights for the weakly singular rule:
/// alpha_s = sum_{l=0}^{nprime} P_l(cos Theta_s). Together with the plain
/// product weights these integrate |north - y|^{-1} times any harmonic of
/// degree <= nprime exactly.
pub fn singular_weights(nprime: usize, zs: &[f64]) -> Vec<f64> {
    zs.iter()
        .map(|&z| legendre_partial_sum(nprime, z))
        .collect()
}
