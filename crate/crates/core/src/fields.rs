//! Incident fields, the fundamental displacement tensor, far-field synthesis
//! from solved densities, and the far-field comparison norm.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::kernels::{fundamental_solution, ElasticMedium};
use crate::quadrature::SphericalQuadrature;
use crate::solver::HarmonicCoefficients;

fn cvec(v: &Vector3<f64>) -> Vector3<Complex64> {
    v.map(Complex64::from)
}

/// Hessian of the outgoing fundamental solution in its first argument:
/// Phi(r) [ (-k^2 - 3ik/r + 3/r^2) dd^T + (ik/r - 1/r^2) I ].
pub(crate) fn grad_grad_phi(
    x: &Vector3<f64>,
    y: &Vector3<f64>,
    kappa: f64,
) -> Result<Matrix3<Complex64>> {
    let delta = x - y;
    let r = delta.norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let phi = fundamental_solution(x, y, kappa)?;
    let dhat = delta / r;
    let radial = Complex64::new(3.0 / (r * r) - kappa * kappa, -3.0 * kappa / r);
    let lateral = Complex64::new(-1.0 / (r * r), kappa / r);
    let mut out = Matrix3::from_element(Complex64::default());
    for i in 0..3 {
        for k in 0..3 {
            let mut v = radial * Complex64::from(dhat[i] * dhat[k]);
            if i == k {
                v += lateral;
            }
            out[(i, k)] = phi * v;
        }
    }
    Ok(out)
}

/// Kupradze displacement tensor
/// G(x,y) = (1/mu)(Phi_s I + (1/kappa_s^2) Hess(Phi_s - Phi_p)).
pub fn green_tensor(
    x: &Vector3<f64>,
    y: &Vector3<f64>,
    medium: &ElasticMedium,
) -> Result<Matrix3<Complex64>> {
    let (kp, ks) = medium.wavenumbers();
    let phi_s = fundamental_solution(x, y, ks)?;
    let hess = (grad_grad_phi(x, y, ks)? - grad_grad_phi(x, y, kp)?) / Complex64::from(ks * ks);
    let mut out = hess;
    for i in 0..3 {
        out[(i, i)] += phi_s;
    }
    Ok(out / Complex64::from(medium.mu))
}

/// Incident wave, bundled with the medium it propagates in.
#[derive(Clone, Debug)]
pub enum IncidentKind {
    /// u^i(x) = -G(x, source) polarization.
    PointSource {
        source: Vector3<f64>,
        polarization: Vector3<f64>,
    },
    /// u^i(x) = (1/mu) e^{i ks x.d} (d x p) x d
    ///        + (1/(lambda+2mu)) e^{i kp x.d} (d.p) d.
    PlaneElastic {
        direction: Vector3<f64>,
        polarization: Vector3<f64>,
    },
    /// u^i(x) = d e^{i kp d.x}.
    PlaneP { direction: Vector3<f64> },
    /// u^i(x) = (d x p) e^{i ks d.x}, p.d = 0.
    PlaneS {
        direction: Vector3<f64>,
        polarization: Vector3<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct IncidentField {
    pub kind: IncidentKind,
    pub medium: ElasticMedium,
}

impl IncidentField {
    pub fn point_source(medium: ElasticMedium, source: Vector3<f64>, p: Vector3<f64>) -> Self {
        Self {
            kind: IncidentKind::PointSource {
                source,
                polarization: p.normalize(),
            },
            medium,
        }
    }

    pub fn plane_elastic(medium: ElasticMedium, d: Vector3<f64>, p: Vector3<f64>) -> Self {
        Self {
            kind: IncidentKind::PlaneElastic {
                direction: d.normalize(),
                polarization: p.normalize(),
            },
            medium,
        }
    }

    pub fn plane_p(medium: ElasticMedium, d: Vector3<f64>) -> Self {
        Self {
            kind: IncidentKind::PlaneP {
                direction: d.normalize(),
            },
            medium,
        }
    }

    /// The polarization is projected onto the plane orthogonal to the
    /// propagation direction and normalized.
    pub fn plane_s(medium: ElasticMedium, d: Vector3<f64>, p: Vector3<f64>) -> Self {
        let d = d.normalize();
        let p_t = p - d * d.dot(&p);
        Self {
            kind: IncidentKind::PlaneS {
                direction: d,
                polarization: p_t.normalize(),
            },
            medium,
        }
    }

    /// Displacement of the incident wave at a point.
    pub fn displacement(&self, x: &Vector3<f64>) -> Result<Vector3<Complex64>> {
        let (kp, ks) = self.medium.wavenumbers();
        match &self.kind {
            IncidentKind::PointSource {
                source,
                polarization,
            } => {
                if (x - source).norm() < 1e-10 {
                    return Err(Error::SourceOnBoundary);
                }
                let g = green_tensor(x, source, &self.medium)?;
                Ok(-(g * cvec(polarization)))
            }
            IncidentKind::PlaneElastic {
                direction: d,
                polarization: p,
            } => {
                let shear_amp = (d.cross(p)).cross(d);
                let es = Complex64::from_polar(1.0, ks * x.dot(d)) / self.medium.mu;
                let ep = Complex64::from_polar(1.0, kp * x.dot(d)) * d.dot(p)
                    / (self.medium.lambda + 2.0 * self.medium.mu);
                Ok(cvec(&shear_amp).map(|v| v * es) + cvec(d).map(|v| v * ep))
            }
            IncidentKind::PlaneP { direction: d } => {
                let e = Complex64::from_polar(1.0, kp * d.dot(x));
                Ok(cvec(d).map(|v| v * e))
            }
            IncidentKind::PlaneS {
                direction: d,
                polarization: p,
            } => {
                let e = Complex64::from_polar(1.0, ks * d.dot(x));
                Ok(cvec(&d.cross(p)).map(|v| v * e))
            }
        }
    }

    /// Rigid-boundary data (f1, f2) = (-nu.u^i, -nu x u^i) at a chart point.
    pub fn trace(
        &self,
        surface: &Surface,
        theta: f64,
        phi: f64,
    ) -> Result<(Complex64, Vector3<Complex64>)> {
        let frame = surface.frame(theta, phi)?;
        let u = self.displacement(&frame.point)?;
        let nu = cvec(&frame.normal);
        let f1 = -(nu.x * u.x + nu.y * u.y + nu.z * u.z);
        let f2 = -nu.cross(&u);
        Ok((f1, f2))
    }
}

/// Product observation grid on the unit sphere; polar angles strictly
/// interior, azimuths starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl ObservationGrid {
    /// ntheta equally spaced interior polar angles i pi/(ntheta+1) and nphi
    /// equally spaced azimuths 2 pi k / nphi.
    pub fn equally_spaced(ntheta: usize, nphi: usize) -> Self {
        let thetas = (1..=ntheta)
            .map(|i| i as f64 * PI / (ntheta as f64 + 1.0))
            .collect();
        let phis = (0..nphi)
            .map(|k| 2.0 * PI * k as f64 / nphi as f64)
            .collect();
        Self { thetas, phis }
    }

    /// The 26 x 50 = 1300 point reference grid.
    pub fn standard() -> Self {
        Self::equally_spaced(26, 50)
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit directions in theta-major order.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for &t in &self.thetas {
            let (st, ct) = t.sin_cos();
            for &p in &self.phis {
                out.push(Vector3::new(st * p.cos(), st * p.sin(), ct));
            }
        }
        out
    }

    fn matches(&self, other: &Self) -> bool {
        self.thetas.len() == other.thetas.len()
            && self.phis.len() == other.phis.len()
            && self
                .thetas
                .iter()
                .zip(&other.thetas)
                .all(|(a, b)| (a - b).abs() < 1e-14)
            && self
                .phis
                .iter()
                .zip(&other.phis)
                .all(|(a, b)| (a - b).abs() < 1e-14)
    }
}

/// Far-field pattern samples over an observation grid, split into the
/// compressional (radial) and shear (tangential) parts.
#[derive(Clone, Debug)]
pub struct FarField {
    pub grid: ObservationGrid,
    pub vp: Vec<Vector3<Complex64>>,
    pub vs: Vec<Vector3<Complex64>>,
}

impl FarField {
    pub fn total(&self, idx: usize) -> Vector3<Complex64> {
        self.vp[idx] + self.vs[idx]
    }

    /// CSV export: theta, phi, then Re/Im of the three components of the
    /// compressional part followed by the shear part.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "theta,phi,vp1_re,vp1_im,vp2_re,vp2_im,vp3_re,vp3_im,\
             vs1_re,vs1_im,vs2_re,vs2_im,vs3_re,vs3_im"
        )?;
        let nphi = self.grid.phis.len();
        for (i, &theta) in self.grid.thetas.iter().enumerate() {
            for (k, &phi) in self.grid.phis.iter().enumerate() {
                let idx = i * nphi + k;
                let (p, s) = (&self.vp[idx], &self.vs[idx]);
                write!(out, "{theta:.16e},{phi:.16e}")?;
                for v in [p, s] {
                    for c in 0..3 {
                        write!(out, ",{:.16e},{:.16e}", v[c].re, v[c].im)?;
                    }
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Far field radiated by solved densities:
/// the compressional pattern i kp phi_inf(x^) x^ with
/// phi_inf = (1/4pi) \int e^{-i kp x^.y} g1(y) ds(y), and the shear pattern
/// (i ks/4pi) x^ x \int g2(y) e^{-i ks x^.y} ds(y).
pub fn farfield_from_densities(
    coeffs: &HarmonicCoefficients,
    medium: &ElasticMedium,
    grid: &ObservationGrid,
) -> Result<FarField> {
    let (kp, ks) = medium.wavenumbers();
    let rule = SphericalQuadrature::build(coeffs.n + 1);

    struct NodeSample {
        point: Vector3<f64>,
        weight: f64,
        g1: Complex64,
        g2: Vector3<Complex64>,
    }

    let mut nodes = Vec::with_capacity(rule.n_nodes());
    for (s, &theta) in rule.thetas.iter().enumerate() {
        for &phi in &rule.phis {
            let frame = coeffs.surface.frame(theta, phi)?;
            nodes.push(NodeSample {
                point: frame.point,
                weight: rule.mu * rule.nu[s] * frame.jacobian,
                g1: coeffs.scalar_value(theta, phi),
                g2: coeffs.vector_value(theta, phi)?,
            });
        }
    }

    let dirs = grid.directions();
    let pairs: Vec<(Vector3<Complex64>, Vector3<Complex64>)> = dirs
        .par_iter()
        .map(|xhat| {
            let mut phi_inf = Complex64::default();
            let mut shear = Vector3::from_element(Complex64::default());
            for node in &nodes {
                let ep = Complex64::from_polar(node.weight, -kp * xhat.dot(&node.point));
                phi_inf += ep * node.g1;
                let es = Complex64::from_polar(node.weight, -ks * xhat.dot(&node.point));
                shear += node.g2.map(|v| v * es);
            }
            phi_inf /= 4.0 * PI;
            let vp = cvec(xhat).map(|v| v * Complex64::new(0.0, kp) * phi_inf);
            let cross = cvec(xhat).cross(&shear);
            let vs = cross.map(|v| v * Complex64::new(0.0, ks / (4.0 * PI)));
            (vp, vs)
        })
        .collect();

    let (vp, vs) = pairs.into_iter().unzip();
    Ok(FarField {
        grid: grid.clone(),
        vp,
        vs,
    })
}

/// Closed-form far field of the rigid-scattering solution manufactured from
/// an interior point source with polarization p:
/// (1/mu)(e^{-i ks x^.y0}/4pi)(x^ x p) x x^
/// + (1/(lambda+2mu))(e^{-i kp x^.y0}/4pi)(x^.p) x^.
pub fn exact_pointsource_farfield(
    xhat: &Vector3<f64>,
    medium: &ElasticMedium,
    source: &Vector3<f64>,
    p: &Vector3<f64>,
) -> Vector3<Complex64> {
    let (kp, ks) = medium.wavenumbers();
    let shear_amp = (xhat.cross(p)).cross(xhat);
    let es = Complex64::from_polar(1.0 / (4.0 * PI * medium.mu), -ks * xhat.dot(source));
    let ep = Complex64::from_polar(
        xhat.dot(p) / (4.0 * PI * (medium.lambda + 2.0 * medium.mu)),
        -kp * xhat.dot(source),
    );
    cvec(&shear_amp).map(|v| v * es) + cvec(xhat).map(|v| v * ep)
}

/// Exact total far field sampled over a grid.
pub fn exact_pointsource_farfield_grid(
    medium: &ElasticMedium,
    source: &Vector3<f64>,
    p: &Vector3<f64>,
    grid: &ObservationGrid,
) -> FarField {
    let dirs = grid.directions();
    let mut vp = Vec::with_capacity(dirs.len());
    let mut vs = Vec::with_capacity(dirs.len());
    let (kp, ks) = medium.wavenumbers();
    for xhat in &dirs {
        let shear_amp = (xhat.cross(p)).cross(xhat);
        let es = Complex64::from_polar(1.0 / (4.0 * PI * medium.mu), -ks * xhat.dot(source));
        let ep = Complex64::from_polar(
            xhat.dot(p) / (4.0 * PI * (medium.lambda + 2.0 * medium.mu)),
            -kp * xhat.dot(source),
        );
        vs.push(cvec(&shear_amp).map(|v| v * es));
        vp.push(cvec(xhat).map(|v| v * ep));
    }
    FarField {
        grid: grid.clone(),
        vp,
        vs,
    }
}

/// Sup over the grid of the Euclidean norm of the total far-field difference.
pub fn error_sup(computed: &FarField, reference: &FarField) -> Result<f64> {
    if !computed.grid.matches(&reference.grid) {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            computed.grid.thetas.len(),
            computed.grid.phis.len(),
            reference.grid.thetas.len(),
            reference.grid.phis.len()
        )));
    }
    let mut sup: f64 = 0.0;
    for idx in 0..computed.grid.len() {
        sup = sup.max((computed.total(idx) - reference.total(idx)).norm());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn medium() -> ElasticMedium {
        ElasticMedium::new(PI, 2.0, 1.0).unwrap()
    }

    fn standard_source() -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::new(0.0, 0.05, 0.0866),
            Vector3::new(1.0, 0.0, 0.0),
        )
    }

    fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
            );
            if v.norm() > 0.3 {
                return v;
            }
        }
    }

    #[test]
    fn green_tensor_columns_satisfy_navier() {
        // mu lap(u) + (lambda+mu) grad div(u) + omega^2 u = 0 columnwise,
        // by nested central differences at step 1e-3
        let m = medium();
        let y = Vector3::zeros();
        let x = Vector3::new(0.9, -0.4, 0.7);
        let h = 1e-3;
        let col = |x: &Vector3<f64>, c: usize| -> Vector3<Complex64> {
            let g = green_tensor(x, &y, &m).unwrap();
            Vector3::new(g[(0, c)], g[(1, c)], g[(2, c)])
        };
        for c in 0..3 {
            let u0 = col(&x, c);
            let mut lap = Vector3::from_element(Complex64::default());
            for ax in 0..3 {
                let mut e = Vector3::zeros();
                e[ax] = h;
                lap += (col(&(x + e), c) + col(&(x - e), c) - u0 * Complex64::from(2.0))
                    / Complex64::from(h * h);
            }
            let div_at = |x: &Vector3<f64>| -> Complex64 {
                let mut acc = Complex64::default();
                for ax in 0..3 {
                    let mut e = Vector3::zeros();
                    e[ax] = h;
                    acc += (col(&(x + e), c)[ax] - col(&(x - e), c)[ax])
                        / Complex64::from(2.0 * h);
                }
                acc
            };
            let mut graddiv = Vector3::from_element(Complex64::default());
            for ax in 0..3 {
                let mut e = Vector3::zeros();
                e[ax] = h;
                graddiv[ax] = (div_at(&(x + e)) - div_at(&(x - e))) / Complex64::from(2.0 * h);
            }
            let res = lap * Complex64::from(m.mu)
                + graddiv * Complex64::from(m.lambda + m.mu)
                + u0 * Complex64::from(m.omega * m.omega);
            assert!(res.norm() < 1e-4, "column {c}: residual {}", res.norm());
        }
    }

    #[test]
    fn green_tensor_reciprocity() {
        let m = medium();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let x = random_point(&mut rng, 2.0);
            let mut y = random_point(&mut rng, 2.0);
            while (x - y).norm() < 0.3 {
                y = random_point(&mut rng, 2.0);
            }
            let gxy = green_tensor(&x, &y, &m).unwrap();
            let gyx = green_tensor(&y, &x, &m).unwrap();
            let diff = (gxy - gyx.transpose()).map(|v| v.norm()).max();
            assert!(diff < 1e-12, "reciprocity violated: {diff}");
        }
    }

    #[test]
    fn green_tensor_shear_only_structure() {
        // removing the Hessian part leaves (1/mu) Phi_s I
        let m = medium();
        let x = Vector3::new(1.2, 0.3, -0.5);
        let y = Vector3::new(-0.2, 0.4, 0.1);
        let (kp, ks) = m.wavenumbers();
        let g = green_tensor(&x, &y, &m).unwrap();
        let hess = (grad_grad_phi(&x, &y, ks).unwrap() - grad_grad_phi(&x, &y, kp).unwrap())
            / Complex64::from(ks * ks * m.mu);
        let phi_s = fundamental_solution(&x, &y, ks).unwrap() / m.mu;
        let residue = g - hess;
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { phi_s } else { Complex64::default() };
                assert!((residue[(i, k)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn plane_elastic_decomposes_into_plane_p_and_plane_s() {
        let m = medium();
        let d = Vector3::new(0.3, -0.5, 0.81).normalize();
        let raw_p = Vector3::new(0.2, 0.9, 0.1).normalize();
        let elastic = IncidentField::plane_elastic(m, d, raw_p);
        // shear part: amplitude (d x p) x d = |p_t| * unit; realized through
        // the shear template with polarization unit(p x d)
        let p_t = raw_p - d * d.dot(&raw_p);
        let shear = IncidentField::plane_s(m, d, p_t.cross(&d));
        let comp = IncidentField::plane_p(m, d);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let x = random_point(&mut rng, 3.0);
            let want = elastic.displacement(&x).unwrap();
            let us = shear.displacement(&x).unwrap();
            let up = comp.displacement(&x).unwrap();
            let got = us.map(|v| v * Complex64::from(p_t.norm() / m.mu))
                + up.map(|v| v * Complex64::from(d.dot(&raw_p) / (m.lambda + 2.0 * m.mu)));
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_p_trace_second_component_vanishes_where_normal_matches() {
        // on the unit sphere the outward normal at (theta, phi) is the
        // direction itself, so d = nu there and f2 = -nu x d = 0
        let m = medium();
        let (theta, phi) = (1.1f64, 0.6f64);
        let (st, ct) = theta.sin_cos();
        let d = Vector3::new(st * phi.cos(), st * phi.sin(), ct);
        let field = IncidentField::plane_p(m, d);
        let (_, f2) = field.trace(&Surface::Sphere, theta, phi).unwrap();
        assert!(f2.norm() < 1e-14);
    }

    #[test]
    fn trace_second_component_is_tangential() {
        let m = medium();
        let (y0, p) = standard_source();
        let field = IncidentField::point_source(m, y0, p);
        let surface = Surface::Bean;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let theta = rng.gen_range(0.1..PI - 0.1);
            let phi = rng.gen_range(0.0..2.0 * PI);
            let (_, f2) = field.trace(&surface, theta, phi).unwrap();
            let nu = surface.frame(theta, phi).unwrap().normal;
            let dot: Complex64 = (0..3).map(|i| f2[i] * Complex64::from(nu[i])).sum();
            assert!(dot.norm() < 1e-14 * f2.norm().max(1.0));
        }
    }

    #[test]
    fn source_on_boundary_is_rejected() {
        let m = medium();
        let surface = Surface::Sphere;
        let point = surface.point(1.0, 2.0);
        let field = IncidentField::point_source(m, point, Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            field.trace(&surface, 1.0, 2.0),
            Err(Error::SourceOnBoundary)
        ));
    }

    #[test]
    fn exact_farfield_reference_values() {
        let m = medium();
        let (y0, p) = standard_source();
        // x^.y0 = 0 there, shear term vanishes: (1/(16 pi), 0, 0)
        let v = exact_pointsource_farfield(&Vector3::new(1.0, 0.0, 0.0), &m, &y0, &p);
        assert!((v.x - Complex64::from(1.0 / (16.0 * PI))).norm() < 1e-15);
        assert!(v.y.norm() < 1e-15 && v.z.norm() < 1e-15);
        // x^ perpendicular to p with x^.y0 = 0: pure shear (1/(4 pi mu)) p
        let xhat = Vector3::new(0.0, -0.0866, 0.05).normalize();
        let v = exact_pointsource_farfield(&xhat, &m, &y0, &p);
        let want = cvec(&p).map(|c| c * Complex64::from(1.0 / (4.0 * PI * m.mu)));
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn exact_farfield_split_is_orthogonal() {
        let m = medium();
        let (y0, p) = standard_source();
        let grid = ObservationGrid::equally_spaced(8, 10);
        let ff = exact_pointsource_farfield_grid(&m, &y0, &p, &grid);
        for (idx, xhat) in grid.directions().iter().enumerate() {
            let radial: Complex64 = (0..3).map(|i| ff.vs[idx][i] * Complex64::from(xhat[i])).sum();
            assert!(radial.norm() < 1e-15);
            let tangential = cvec(xhat).cross(&ff.vp[idx]);
            assert!(tangential.norm() < 1e-15);
            let total = ff.total(idx);
            let exact = exact_pointsource_farfield(xhat, &m, &y0, &p);
            assert!((total - exact).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_densities_produce_zero_farfield() {
        let m = medium();
        let coeffs = crate::solver::HarmonicCoefficients::zeros(3, Surface::Ellipsoid);
        let grid = ObservationGrid::equally_spaced(4, 6);
        let ff = farfield_from_densities(&coeffs, &m, &grid).unwrap();
        for idx in 0..grid.len() {
            assert!(ff.total(idx).norm() == 0.0);
        }
    }

    #[test]
    fn synthesized_farfield_has_radial_p_and_tangential_s_parts() {
        let m = medium();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut coeffs = crate::solver::HarmonicCoefficients::zeros(4, Surface::Cushion);
        for v in coeffs.scalar.iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        for block in coeffs.vector.iter_mut() {
            for v in block.iter_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let grid = ObservationGrid::standard();
        let ff = farfield_from_densities(&coeffs, &m, &grid).unwrap();
        for (idx, xhat) in grid.directions().iter().enumerate() {
            let vp_tangential = cvec(xhat).cross(&ff.vp[idx]).norm();
            assert!(vp_tangential < 1e-10 * ff.vp[idx].norm().max(1.0));
            let vs_radial: Complex64 =
                (0..3).map(|i| ff.vs[idx][i] * Complex64::from(xhat[i])).sum();
            assert!(vs_radial.norm() < 1e-10 * ff.vs[idx].norm().max(1.0));
        }
    }

    #[test]
    fn error_sup_basics() {
        let m = medium();
        let (y0, p) = standard_source();
        let grid = ObservationGrid::equally_spaced(5, 7);
        let ff = exact_pointsource_farfield_grid(&m, &y0, &p, &grid);
        assert_eq!(error_sup(&ff, &ff).unwrap(), 0.0);

        let mut shifted = ff.clone();
        for v in shifted.vp.iter_mut() {
            v.x += Complex64::new(0.0, 2.5);
        }
        assert!((error_sup(&shifted, &ff).unwrap() - 2.5).abs() < 1e-15);

        let other = exact_pointsource_farfield_grid(&m, &y0, &p, &ObservationGrid::standard());
        assert!(matches!(
            error_sup(&ff, &other),
            Err(Error::GridMismatch(_))
        ));
    }
}
