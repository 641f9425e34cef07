//! Parametrized obstacle boundaries over the unit sphere with analytic
//! derivatives through second order.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use std::sync::Arc;

/// Position and partial derivatives of the chart q(theta, phi) through
/// second order.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub q: Vector3<f64>,
    pub q_t: Vector3<f64>,
    pub q_p: Vector3<f64>,
    pub q_tt: Vector3<f64>,
    pub q_tp: Vector3<f64>,
    pub q_pp: Vector3<f64>,
}

/// Orthonormal-free surface frame at a chart point: the two tangent vectors
/// t1 = dq/dtheta and t2 = (1/sin theta) dq/dphi, the area element
/// J = |t1 x t2| relative to the sphere measure, and the outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceFrame {
    pub point: Vector3<f64>,
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
    pub jacobian: f64,
    pub normal: Vector3<f64>,
}

/// Frame plus the parameter derivatives of the unit normal, needed wherever
/// the transported tangent fields are differentiated.
#[derive(Clone, Copy, Debug)]
pub struct FrameJet {
    pub frame: SurfaceFrame,
    pub dnormal_t: Vector3<f64>,
    pub dnormal_p: Vector3<f64>,
}

type JetFn = dyn Fn(f64, f64) -> Jet2 + Send + Sync;

/// User-supplied chart; must be a smooth positively-oriented parametrization
/// over the unit sphere angles.
#[derive(Clone)]
pub struct CustomSurface {
    pub jet: Arc<JetFn>,
}

impl std::fmt::Debug for CustomSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CustomSurface")
    }
}

#[derive(Clone, Debug)]
pub enum Surface {
    Sphere,
    Ellipsoid,
    Cushion,
    Bean,
    Custom(CustomSurface),
}

/// Sines and cosines of one chart point. Angle evaluations build it with two
/// sin_cos calls; rotated-grid evaluations read it straight off the unit
/// direction, which keeps the hot kernel loops free of inverse trig.
#[derive(Clone, Copy, Debug)]
pub struct ChartTrig {
    pub st: f64,
    pub ct: f64,
    pub sp: f64,
    pub cp: f64,
}

impl ChartTrig {
    #[inline]
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { st, ct, sp, cp }
    }

    /// From a unit direction; the chart azimuth degenerates at the poles.
    #[inline]
    pub fn from_direction(dir: &Vector3<f64>) -> Result<Self> {
        let st = (dir.x * dir.x + dir.y * dir.y).sqrt();
        if st < 1e-12 {
            return Err(Error::PoleEvaluation {
                theta: dir.z.clamp(-1.0, 1.0).acos(),
            });
        }
        Ok(Self {
            st,
            ct: dir.z,
            sp: dir.y / st,
            cp: dir.x / st,
        })
    }
}

#[inline]
fn unit_jet(tr: &ChartTrig) -> Jet2 {
    let ChartTrig { st, ct, sp, cp } = *tr;
    let p = Vector3::new(st * cp, st * sp, ct);
    Jet2 {
        q: p,
        q_t: Vector3::new(ct * cp, ct * sp, -st),
        q_p: Vector3::new(-st * sp, st * cp, 0.0),
        q_tt: -p,
        q_tp: Vector3::new(-ct * sp, ct * cp, 0.0),
        q_pp: Vector3::new(-st * cp, -st * sp, 0.0),
    }
}

impl Surface {
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Surface::Sphere),
            "ellipsoid" => Ok(Surface::Ellipsoid),
            "cushion" => Ok(Surface::Cushion),
            "bean" => Ok(Surface::Bean),
            other => Err(Error::GridMismatch(format!(
                "unknown geometry '{other}' (expected sphere, ellipsoid, cushion, or bean)"
            ))),
        }
    }

    /// Chart point and all first/second parameter derivatives.
    pub fn jet2(&self, theta: f64, phi: f64) -> Jet2 {
        match self {
            Surface::Custom(c) => (c.jet)(theta, phi),
            _ => self.jet2_trig(&ChartTrig::from_angles(theta, phi)),
        }
    }

    /// Same jet from precomputed chart trig. Custom charts take angles, so
    /// this path reconstructs them; the built-in shapes never need to.
    pub fn jet2_trig(&self, tr: &ChartTrig) -> Jet2 {
        match self {
            Surface::Sphere => unit_jet(tr),
            Surface::Ellipsoid => {
                let j = unit_jet(tr);
                let scale = |v: Vector3<f64>| Vector3::new(v.x, 0.75 * v.y, 0.5 * v.z);
                Jet2 {
                    q: scale(j.q),
                    q_t: scale(j.q_t),
                    q_p: scale(j.q_p),
                    q_tt: scale(j.q_tt),
                    q_tp: scale(j.q_tp),
                    q_pp: scale(j.q_pp),
                }
            }
            Surface::Cushion => {
                let j = unit_jet(tr);
                // rho^2 = 0.27 + 0.065 (cos 2phi - 1)(cos 4theta - 1)
                let c2t = tr.ct * tr.ct - tr.st * tr.st;
                let s2t = 2.0 * tr.st * tr.ct;
                let c4t = c2t * c2t - s2t * s2t;
                let s4t = 2.0 * s2t * c2t;
                let c2p = tr.cp * tr.cp - tr.sp * tr.sp;
                let s2p = 2.0 * tr.sp * tr.cp;
                let w = 0.27 + 0.065 * (c2p - 1.0) * (c4t - 1.0);
                let w_t = 0.065 * (c2p - 1.0) * (-4.0 * s4t);
                let w_p = 0.065 * (-2.0 * s2p) * (c4t - 1.0);
                let w_tt = 0.065 * (c2p - 1.0) * (-16.0 * c4t);
                let w_tp = 0.065 * (-2.0 * s2p) * (-4.0 * s4t);
                let w_pp = 0.065 * (-4.0 * c2p) * (c4t - 1.0);
                let rho = w.sqrt();
                let r_t = w_t / (2.0 * rho);
                let r_p = w_p / (2.0 * rho);
                let r_tt = w_tt / (2.0 * rho) - w_t * w_t / (4.0 * rho * rho * rho);
                let r_tp = w_tp / (2.0 * rho) - w_t * w_p / (4.0 * rho * rho * rho);
                let r_pp = w_pp / (2.0 * rho) - w_p * w_p / (4.0 * rho * rho * rho);
                Jet2 {
                    q: rho * j.q,
                    q_t: r_t * j.q + rho * j.q_t,
                    q_p: r_p * j.q + rho * j.q_p,
                    q_tt: r_tt * j.q + 2.0 * r_t * j.q_t + rho * j.q_tt,
                    q_tp: r_tp * j.q + r_t * j.q_p + r_p * j.q_t + rho * j.q_tp,
                    q_pp: r_pp * j.q + 2.0 * r_p * j.q_p + rho * j.q_pp,
                }
            }
            Surface::Bean => {
                // Horizontal slices are ellipses centered on the x2-axis:
                //   x1 = a(u) sin(theta) cos(phi)
                //   x2 = b(u) sin(theta) sin(phi) + c(u)
                //   x3 = u = cos(theta)
                // with a = 0.8 sqrt(1 - 0.1 cos(pi u)),
                //      b = 0.8 sqrt(1 - 0.4 cos(pi u)), c = -0.3 cos(pi u).
                let ChartTrig { st, ct, sp, cp } = *tr;
                let u = ct;
                let u_t = -st;
                let u_tt = -ct;
                let (spin, cpiu) = (std::f64::consts::PI * u).sin_cos();
                let pi = std::f64::consts::PI;

                let ga = 1.0 - 0.1 * cpiu;
                let ga_u = 0.1 * pi * spin;
                let ga_uu = 0.1 * pi * pi * cpiu;
                let a = 0.8 * ga.sqrt();
                let a_u = 0.8 * ga_u / (2.0 * ga.sqrt());
                let a_uu = 0.8 * (ga_uu / (2.0 * ga.sqrt()) - ga_u * ga_u / (4.0 * ga.powf(1.5)));

                let gb = 1.0 - 0.4 * cpiu;
                let gb_u = 0.4 * pi * spin;
                let gb_uu = 0.4 * pi * pi * cpiu;
                let b = 0.8 * gb.sqrt();
                let b_u = 0.8 * gb_u / (2.0 * gb.sqrt());
                let b_uu = 0.8 * (gb_uu / (2.0 * gb.sqrt()) - gb_u * gb_u / (4.0 * gb.powf(1.5)));

                let c = -0.3 * cpiu;
                let c_u = 0.3 * pi * spin;
                let c_uu = 0.3 * pi * pi * cpiu;

                let x = st * cp;
                let y = st * sp;
                let x_t = ct * cp;
                let x_p = -st * sp;
                let x_tt = -x;
                let x_tp = -ct * sp;
                let x_pp = -x;
                let y_t = ct * sp;
                let y_p = st * cp;
                let y_tt = -y;
                let y_tp = ct * cp;
                let y_pp = -y;

                let q = Vector3::new(a * x, b * y + c, u);
                let q_t = Vector3::new(
                    a_u * u_t * x + a * x_t,
                    b_u * u_t * y + b * y_t + c_u * u_t,
                    u_t,
                );
                let q_p = Vector3::new(a * x_p, b * y_p, 0.0);
                let q_tt = Vector3::new(
                    a_uu * u_t * u_t * x + a_u * u_tt * x + 2.0 * a_u * u_t * x_t + a * x_tt,
                    b_uu * u_t * u_t * y + b_u * u_tt * y + 2.0 * b_u * u_t * y_t + b * y_tt
                        + c_uu * u_t * u_t
                        + c_u * u_tt,
                    u_tt,
                );
                let q_tp = Vector3::new(
                    a_u * u_t * x_p + a * x_tp,
                    b_u * u_t * y_p + b * y_tp,
                    0.0,
                );
                let q_pp = Vector3::new(a * x_pp, b * y_pp, 0.0);
                Jet2 {
                    q,
                    q_t,
                    q_p,
                    q_tt,
                    q_tp,
                    q_pp,
                }
            }
            Surface::Custom(c) => (c.jet)(tr.st.atan2(tr.ct), tr.sp.atan2(tr.cp)),
        }
    }

    /// Chart point only.
    #[inline]
    pub fn point(&self, theta: f64, phi: f64) -> Vector3<f64> {
        self.jet2(theta, phi).q
    }

    /// Tangent frame, area element, and outward normal. The frame divides by
    /// sin(theta), so the poles are rejected.
    pub fn frame(&self, theta: f64, phi: f64) -> Result<SurfaceFrame> {
        let st = theta.sin();
        if st.abs() < 1e-12 {
            return Err(Error::PoleEvaluation { theta });
        }
        let j = self.jet2(theta, phi);
        Ok(frame_from_jet(&j, st))
    }

    /// Frame from precomputed chart trig; `ChartTrig::from_direction` has
    /// already rejected the poles, where st vanishes.
    pub fn frame_trig(&self, tr: &ChartTrig) -> SurfaceFrame {
        frame_from_jet(&self.jet2_trig(tr), tr.st)
    }

    /// Frame together with the parameter derivatives of the unit normal.
    pub fn frame_jet(&self, theta: f64, phi: f64) -> Result<FrameJet> {
        let st = theta.sin();
        if st.abs() < 1e-12 {
            return Err(Error::PoleEvaluation { theta });
        }
        let j = self.jet2(theta, phi);
        let frame = frame_from_jet(&j, st);
        // w = q_t x q_p, nu = w / |w|; dnu = (I - nu nu^T) dw / |w|.
        let w = j.q_t.cross(&j.q_p);
        let wn = w.norm();
        let w_t = j.q_tt.cross(&j.q_p) + j.q_t.cross(&j.q_tp);
        let w_p = j.q_tp.cross(&j.q_p) + j.q_t.cross(&j.q_pp);
        let nu = frame.normal;
        let dnormal_t = (w_t - nu * nu.dot(&w_t)) / wn;
        let dnormal_p = (w_p - nu * nu.dot(&w_p)) / wn;
        Ok(FrameJet {
            frame,
            dnormal_t,
            dnormal_p,
        })
    }

    /// The sphere-differential matrix t1 e_theta^T + t2 e_phi^T mapping
    /// tangent vectors of S^2 at (theta, phi) to surface tangent vectors. It
    /// annihilates the radial direction.
    pub fn dsq_matrix(&self, theta: f64, phi: f64) -> Result<Matrix3<f64>> {
        let f = self.frame(theta, phi)?;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let e_t = Vector3::new(ct * cp, ct * sp, -st);
        let e_p = Vector3::new(-sp, cp, 0.0);
        Ok(f.t1 * e_t.transpose() + f.t2 * e_p.transpose())
    }
}

#[inline]
fn frame_from_jet(j: &Jet2, st: f64) -> SurfaceFrame {
    let t1 = j.q_t;
    let t2 = j.q_p / st;
    let w = t1.cross(&t2);
    let jac = w.norm();
    SurfaceFrame {
        point: j.q,
        t1,
        t2,
        jacobian: jac,
        normal: w / jac,
    }
}

/// Frame quantities at a point given by its unit direction rather than
/// explicit angles; used on rotated quadrature grids.
pub fn frame_at_direction(surface: &Surface, dir: &Vector3<f64>) -> Result<SurfaceFrame> {
    let (theta, phi) = angles_of(dir)?;
    surface.frame(theta, phi)
}

/// Polar/azimuthal angles of a unit vector; rejects the poles where the chart
/// frame is undefined.
pub fn angles_of(dir: &Vector3<f64>) -> Result<(f64, f64)> {
    let ct = dir.z.clamp(-1.0, 1.0);
    let theta = ct.acos();
    if theta.sin().abs() < 1e-12 {
        return Err(Error::PoleEvaluation { theta });
    }
    let phi = dir.y.atan2(dir.x);
    Ok((theta, phi))
}
