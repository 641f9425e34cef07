//! Rotations carrying quadrature nodes to the north pole and the orthogonal
//! transport of tangent frames from the sphere onto the surface.

use crate::error::{Error, Result};
use crate::geometry::Surface;
use nalgebra::{Matrix3, Vector3};

/// Rotation about the x3-axis by psi.
#[inline]
pub fn rot_axis3(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation in the x1-x3 plane by psi.
#[inline]
pub fn rot_plane13(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c)
}

/// The rotation T = D_P(phi) D_Q(theta) D_P(-phi) taking the unit direction
/// at (theta, phi) to the north pole.
pub fn rotation_to_pole(theta: f64, phi: f64) -> Matrix3<f64> {
    rot_axis3(phi) * rot_plane13(theta) * rot_axis3(-phi)
}

/// T and its inverse for one outer node.
#[derive(Clone, Copy, Debug)]
pub struct NodeRotation {
    pub t: Matrix3<f64>,
    pub t_inv: Matrix3<f64>,
}

pub fn node_rotation(theta: f64, phi: f64) -> NodeRotation {
    let t = rotation_to_pole(theta, phi);
    NodeRotation {
        t,
        t_inv: t.transpose(),
    }
}

/// Angles of a rotated node T^{-1} z; fails only if the image lands on a pole
/// of the chart, which the staggered azimuth grids exclude.
pub fn rotated_angles(t_inv: &Matrix3<f64>, z: &Vector3<f64>) -> Result<(f64, f64)> {
    let y = t_inv * z;
    crate::geometry::angles_of(&y)
}

/// Orthogonal transport F(xhat): the unique rotation with axis xhat x nu(xhat)
/// mapping the sphere direction xhat onto the surface normal nu. On tangent
/// fields it carries the sphere frame to the surface. Singular when the
/// normal is antipodal to the direction.
pub fn tangent_transport(xhat: &Vector3<f64>, normal: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let gamma = xhat.dot(normal);
    if 1.0 + gamma < 1e-8 {
        return Err(Error::FrameSingular { cos_angle: gamma });
    }
    let c = xhat.cross(normal);
    let cx = cross_matrix(&c);
    Ok(Matrix3::identity() * gamma + cx + c * c.transpose() / (1.0 + gamma))
}

#[inline]
fn cross_matrix(c: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -c.z, c.y, c.z, 0.0, -c.x, -c.y, c.x, 0.0)
}

/// F(xhat) at a chart node together with its parameter derivatives, obtained
/// by differentiating gamma and c = xhat x nu analytically.
pub struct TransportJet {
    pub f: Matrix3<f64>,
    pub df_t: Matrix3<f64>,
    pub df_p: Matrix3<f64>,
}

pub fn tangent_transport_jet(surface: &Surface, theta: f64, phi: f64) -> Result<TransportJet> {
    let fj = surface.frame_jet(theta, phi)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let xhat = Vector3::new(st * cp, st * sp, ct);
    let x_t = Vector3::new(ct * cp, ct * sp, -st);
    let x_p = Vector3::new(-st * sp, st * cp, 0.0);
    let nu = fj.frame.normal;
    let gamma = xhat.dot(&nu);
    if 1.0 + gamma < 1e-8 {
        return Err(Error::FrameSingular { cos_angle: gamma });
    }
    let c = xhat.cross(&nu);
    let g_t = x_t.dot(&nu) + xhat.dot(&fj.dnormal_t);
    let g_p = x_p.dot(&nu) + xhat.dot(&fj.dnormal_p);
    let c_t = x_t.cross(&nu) + xhat.cross(&fj.dnormal_t);
    let c_p = x_p.cross(&nu) + xhat.cross(&fj.dnormal_p);

    let f = Matrix3::identity() * gamma + cross_matrix(&c) + c * c.transpose() / (1.0 + gamma);
    let df = |g_d: f64, c_d: Vector3<f64>| {
        Matrix3::identity() * g_d
            + cross_matrix(&c_d)
            + (c_d * c.transpose() + c * c_d.transpose()) / (1.0 + gamma)
            - c * c.transpose() * (g_d / ((1.0 + gamma) * (1.0 + gamma)))
    };
    Ok(TransportJet {
        f,
        df_t: df(g_t, c_t),
        df_p: df(g_p, c_p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CustomSurface;
    use crate::quadrature::SphericalQuadrature;
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn unit(theta: f64, phi: f64) -> Vector3<f64> {
        Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    #[test]
    fn rotation_sends_node_to_pole() {
        for &(t, p) in &[(0.3, 0.0), (1.2, 2.5), (2.8, 4.1), (FRAC_PI_2, PI)] {
            let rot = rotation_to_pole(t, p);
            let north = rot * unit(t, p);
            assert!((north - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
            // Orthogonality.
            let err = (rot * rot.transpose() - Matrix3::identity()).norm();
            assert!(err < 1e-14);
            assert!((rot.determinant() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn north_pole_rotation_is_identity() {
        let rot = rotation_to_pole(0.0, 1.3);
        assert!((rot - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn rotated_grid_preserves_pairwise_distances() {
        // |xhat - T^{-1} z| must equal |north - z| for every outer node and
        // inner node: the sphere distance to the singular point is carried
        // over exactly.
        let outer = SphericalQuadrature::build(5);
        let inner = SphericalQuadrature::build(9);
        let north = Vector3::new(0.0, 0.0, 1.0);
        for &t in &outer.thetas {
            for &p in &outer.phis {
                let rot = node_rotation(t, p);
                let x = unit(t, p);
                for &ti in &inner.thetas {
                    for &pi_ in &inner.phis {
                        let z = unit(ti, pi_);
                        let y = rot.t_inv * z;
                        assert!(
                            ((x - y).norm() - (north - z).norm()).abs() < 1e-13
                        );
                        // Angle recovery is safe away from poles.
                        let (lam, xi) = rotated_angles(&rot.t_inv, &z).unwrap();
                        assert!((unit(lam, xi) - y).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn transport_is_identity_on_sphere() {
        let x = unit(1.1, 0.4);
        let f = tangent_transport(&x, &x).unwrap();
        assert!((f - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn transport_maps_direction_to_normal_and_is_orthogonal() {
        let rule = SphericalQuadrature::build(10);
        for surf in [Surface::Ellipsoid, Surface::Cushion, Surface::Bean] {
            for &t in &rule.thetas {
                for &p in &rule.phis {
                    let fr = surf.frame(t, p).unwrap();
                    let x = unit(t, p);
                    let f = tangent_transport(&x, &fr.normal).unwrap();
                    assert!((f * x - fr.normal).norm() < 1e-12);
                    assert!((f * f.transpose() - Matrix3::identity()).norm() < 1e-12);
                    assert!((f.determinant() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transport_jet_matches_finite_differences() {
        let h = 1e-5;
        for surf in [Surface::Ellipsoid, Surface::Bean] {
            for &(t, p) in &[(0.9, 1.1), (1.8, 3.3), (2.3, 5.2)] {
                let jet = tangent_transport_jet(&surf, t, p).unwrap();
                let f = |tt: f64, pp: f64| {
                    let fr = surf.frame(tt, pp).unwrap();
                    tangent_transport(&unit(tt, pp), &fr.normal).unwrap()
                };
                let fd_t = (f(t + h, p) - f(t - h, p)) / (2.0 * h);
                let fd_p = (f(t, p + h) - f(t, p - h)) / (2.0 * h);
                assert!((jet.f - f(t, p)).norm() < 1e-13);
                assert!(
                    (jet.df_t - fd_t).norm() < 1e-7,
                    "{surf:?} df_t at ({t},{p}): delta {}",
                    (jet.df_t - fd_t).norm()
                );
                assert!((jet.df_p - fd_p).norm() < 1e-7, "{surf:?} df_p at ({t},{p})");
            }
        }
    }

    #[test]
    fn antipodal_normal_is_rejected() {
        // Reversing the chart orientation flips the normal, which puts the
        // transport at its singular configuration.
        let flipped = Surface::Custom(CustomSurface {
            jet: Arc::new(|t, p| {
                let j = Surface::Sphere.jet2(t, -p);
                crate::geometry::Jet2 {
                    q_p: -j.q_p,
                    q_tp: -j.q_tp,
                    ..j
                }
            }),
        });
        let fr = flipped.frame(1.0, 0.0).unwrap();
        let x = unit(1.0, 0.0);
        assert!((fr.normal + x).norm() < 1e-12);
        assert!(matches!(
            tangent_transport(&x, &fr.normal),
            Err(crate::Error::FrameSingular { .. })
        ));
    }

    #[test]
    fn production_shapes_stay_clear_of_the_singularity() {
        let rule = SphericalQuadrature::build(26);
        for surf in [Surface::Sphere, Surface::Ellipsoid, Surface::Cushion, Surface::Bean] {
            for &t in &rule.thetas {
                for &p in &rule.phis {
                    let fr = surf.frame(t, p).unwrap();
                    let gamma = unit(t, p).dot(&fr.normal);
                    assert!(gamma > 0.1, "{surf:?} at ({t},{p}): cos angle {gamma}");
                }
            }
        }
    }
}
