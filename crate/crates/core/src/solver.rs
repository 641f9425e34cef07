//! Direct dense solve of the block system and density synthesis from the
//! solved spherical-harmonic coefficients.

use faer::linalg::matmul::matmul;
use faer::prelude::*;
use faer::{Accum, Mat, Par};
use nalgebra::Vector3;
use num_complex::Complex64;
use std::io::Write;
use std::path::Path;

use crate::assembly::{scalar_index, system_dim, vector_dim, vector_index, BlockSystem};
use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::rotation::tangent_transport;
use crate::sphharm::{alpha_coeff_from, sph_harmonic_from, NormalizedLegendre};

/// Solved density coefficients: scalar modes w_{lj} for l = 0..n and the two
/// tangential-family modes for l = 1..n.
#[derive(Clone, Debug)]
pub struct HarmonicCoefficients {
    pub n: usize,
    pub surface: Surface,
    pub scalar: Vec<Complex64>,
    pub vector: [Vec<Complex64>; 2],
}

impl HarmonicCoefficients {
    pub fn zeros(n: usize, surface: Surface) -> Self {
        Self {
            n,
            surface,
            scalar: vec![Complex64::default(); (n + 1) * (n + 1)],
            vector: [
                vec![Complex64::default(); vector_dim(n)],
                vec![Complex64::default(); vector_dim(n)],
            ],
        }
    }

    /// Split a stacked solution vector into the three coefficient blocks.
    pub fn from_solution_vector(n: usize, surface: Surface, x: &[Complex64]) -> Result<Self> {
        if x.len() != system_dim(n) {
            return Err(Error::ShapeMismatch {
                expected: system_dim(n),
                got: x.len(),
            });
        }
        let ns = (n + 1) * (n + 1);
        let nv = vector_dim(n);
        Ok(Self {
            n,
            surface,
            scalar: x[..ns].to_vec(),
            vector: [
                x[ns..ns + nv].to_vec(),
                x[ns + nv..ns + 2 * nv].to_vec(),
            ],
        })
    }

    /// Scalar density value at a chart point.
    pub fn scalar_value(&self, theta: f64, phi: f64) -> Complex64 {
        let tab = NormalizedLegendre::new(self.n, theta);
        let mut acc = Complex64::default();
        for l in 0..=self.n {
            for j in -(l as i64)..=(l as i64) {
                acc += self.scalar[scalar_index(l, j)] * sph_harmonic_from(&tab, l, j, phi);
            }
        }
        acc
    }

    /// Tangential density value at a chart point; tangential to the surface.
    pub fn vector_value(&self, theta: f64, phi: f64) -> Result<Vector3<Complex64>> {
        let frame = self.surface.frame(theta, phi)?;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let xhat = Vector3::new(st * cp, st * sp, ct);
        let f = tangent_transport(&xhat, &frame.normal)?;
        let e_t = Vector3::new(ct * cp, ct * sp, -st);
        let e_p = Vector3::new(-sp, cp, 0.0);

        let tab = NormalizedLegendre::new(self.n, theta);
        let mut c1 = Complex64::default();
        let mut c2 = Complex64::default();
        for l in 1..=self.n {
            for j in -(l as i64)..=(l as i64) {
                let [a, b] = alpha_coeff_from(&tab, 1, l, j, theta);
                let ph = Complex64::from_polar(1.0, j as f64 * phi);
                let w1 = self.vector[0][vector_index(l, j)] * ph;
                let w2 = self.vector[1][vector_index(l, j)] * ph;
                // second family has theta-component -b and phi-component a
                c1 += w1 * a - w2 * b;
                c2 += w1 * b + w2 * a;
            }
        }
        let sphere_tangent = Vector3::new(
            c1 * Complex64::from(e_t.x) + c2 * Complex64::from(e_p.x),
            c1 * Complex64::from(e_t.y) + c2 * Complex64::from(e_p.y),
            c1 * Complex64::from(e_t.z) + c2 * Complex64::from(e_p.z),
        );
        Ok(f.map(Complex64::from) * sphere_tangent)
    }

    /// Coefficient export: one row `l, j, k, re, im` per mode (k = 0 scalar).
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "l,j,k,re,im")?;
        for l in 0..=self.n {
            for j in -(l as i64)..=(l as i64) {
                let w = self.scalar[scalar_index(l, j)];
                writeln!(out, "{l},{j},0,{:.16e},{:.16e}", w.re, w.im)?;
            }
        }
        for (k, block) in self.vector.iter().enumerate() {
            for l in 1..=self.n {
                for j in -(l as i64)..=(l as i64) {
                    let w = block[vector_index(l, j)];
                    writeln!(out, "{l},{j},{},{:.16e},{:.16e}", k + 1, w.re, w.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Pointwise density synthesis: (scalar value, tangential 3-vector value).
pub fn evaluate_density(
    coeffs: &HarmonicCoefficients,
    theta: f64,
    phi: f64,
) -> Result<(Complex64, Vector3<Complex64>)> {
    Ok((
        coeffs.scalar_value(theta, phi),
        coeffs.vector_value(theta, phi)?,
    ))
}

fn frob(m: &Mat<Complex64>) -> f64 {
    let mut acc = 0.0;
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            acc += m[(row, col)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// LU solve with a residual gate and at most one refinement pass. The
/// relative residual must reach 1e-10; failure signals a numerically
/// singular system (interior eigenvalue of the chosen wavenumbers).
pub fn solve_dense(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    let bnorm = frob(b);
    if bnorm == 0.0 {
        return Ok(Mat::zeros(b.nrows(), b.ncols()));
    }
    let lu = a.partial_piv_lu();
    let mut x = lu.solve(b);
    for pass in 0..2 {
        let mut r = b.clone();
        matmul(
            &mut r,
            Accum::Add,
            a,
            &x,
            -Complex64::from(1.0),
            Par::Seq,
        );
        let rel = frob(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::SingularSystem);
        }
        if rel < 1e-10 {
            return Ok(x);
        }
        if pass == 1 {
            return Err(Error::SingularSystem);
        }
        let d = lu.solve(&r);
        for col in 0..x.ncols() {
            for row in 0..x.nrows() {
                x[(row, col)] += d[(row, col)];
            }
        }
    }
    unreachable!("loop returns on every path");
}

/// Solve the assembled system and split the solution into coefficients.
pub fn solve(system: &BlockSystem, surface: &Surface) -> Result<HarmonicCoefficients> {
    let x = solve_dense(&system.a, &system.b)?;
    let flat: Vec<Complex64> = (0..x.nrows()).map(|r| x[(r, 0)]).collect();
    HarmonicCoefficients::from_solution_vector(system.n, surface.clone(), &flat)
}
