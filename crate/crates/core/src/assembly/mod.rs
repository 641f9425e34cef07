//! Galerkin system assembly: block layout and the fast summation chains.
//!
//! Unknown ordering: scalar coefficients (l, j) with l = 0..n, j = -l..l in
//! lexicographic order, then the two tangential families with l >= 1 in the
//! same order. Block row/column order is scalar, family 1, family 2.
//!
//! The boundary operators are evaluated with the rotated singular rule: for
//! every outer node the inner grid is carried to that node's pole, the weakly
//! singular kernel parts pick up the corrective weights, and the density is
//! expanded over the rotated grid through the degree-l recoupling matrices.
//! Regrouping the resulting sums gives, per outer node, a set of azimuthal
//! transforms (E), Legendre contractions (D), recouplings (C) and outer
//! azimuthal transforms (B) whose total cost is O(n^5).

pub mod direct;

use crate::error::{Error, Result};
use crate::fields::IncidentField;
use crate::geometry::Surface;
use crate::kernels::{kernel_samples, ElasticMedium, KernelPoint};
use crate::quadrature::{singular_weights, SphericalQuadrature};
use crate::rotation::{node_rotation, tangent_transport, tangent_transport_jet, NodeRotation};
use crate::sphharm::{
    alpha_coeff_dtheta_from, alpha_coeff_from, phase, rotation_coefficients, sphere_basis,
    NormalizedLegendre, WignerTable,
};
use faer::linalg::matmul::matmul;
use faer::{Mat, Par};
use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Number of scalar unknowns (n+1)^2.
pub fn scalar_dim(n: usize) -> usize {
    (n + 1) * (n + 1)
}

/// Number of unknowns in one tangential family, (n+1)^2 - 1 (no l = 0 mode).
pub fn vector_dim(n: usize) -> usize {
    (n + 1) * (n + 1) - 1
}

/// Total system dimension 3(n+1)^2 - 2.
pub fn system_dim(n: usize) -> usize {
    scalar_dim(n) + 2 * vector_dim(n)
}

/// Position of the scalar mode (l, j) inside the scalar block.
pub fn scalar_index(l: usize, j: i64) -> usize {
    debug_assert!(j.unsigned_abs() as usize <= l);
    l * l + (l as i64 + j) as usize
}

/// Position of the tangential mode (l, j), l >= 1, inside one vector block.
pub fn vector_index(l: usize, j: i64) -> usize {
    debug_assert!(l >= 1 && j.unsigned_abs() as usize <= l);
    scalar_index(l, j) - 1
}

/// Dense discrete system: matrix, right-hand side, and its ansatz orders.
pub struct BlockSystem {
    pub n: usize,
    pub nprime: usize,
    pub a: Mat<Complex64>,
    pub b: Mat<Complex64>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        system_dim(self.n)
    }

    /// Flat binary dump (dimension header, then column-major complex pairs,
    /// little-endian f64) for regression comparisons.
    pub fn dump(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let dim = self.dim() as u64;
        out.write_all(&dim.to_le_bytes())?;
        out.write_all(&(self.nprime as u64).to_le_bytes())?;
        for col in 0..self.a.ncols() {
            for row in 0..self.a.nrows() {
                let v = self.a[(row, col)];
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
        }
        for row in 0..self.b.nrows() {
            let v = self.b[(row, 0)];
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Everything about one outer quadrature node that the chains reuse: the
/// kernel-side geometry, the chart tangents t1 = q_theta and t2 = q_phi/sin,
/// the transported tangent basis w_d = F v_d with the three azimuth-free
/// test weights of the scalar-density rows, and the pole rotation.
struct OuterNode {
    kp: KernelPoint,
    t1: Vector3<f64>,
    t2: Vector3<f64>,
    w: [Vector3<f64>; 2],
    /// hw[0][d] = w_d . t1 / sin, hw[1][d] = dphi(F v_d) . t1 / sin
    /// - dtheta(F v_d) . t2, hw[2][d] = -w_d . t2.
    hw: [[f64; 2]; 3],
    rot: NodeRotation,
}

/// Per-node output of the inner chains, ready for the outer transforms: the
/// rule values of the operators applied to every ansatz mode at this node.
struct NodeChains {
    ck: Vec<Complex64>,
    cp: Vec<Complex64>,
    cn: [[Vec<Complex64>; 2]; 2],
    cm: [[Vec<Complex64>; 2]; 2],
}

/// Precomputed grids, weights and tables shared by the matrix and right-hand
/// side assembly for one (surface, medium, n, n') configuration.
pub struct AssemblyContext {
    pub surface: Surface,
    pub medium: ElasticMedium,
    pub n: usize,
    pub nprime: usize,
    outer: SphericalQuadrature,
    inner: SphericalQuadrature,
    nodes: Vec<OuterNode>,
    tabs: Vec<NormalizedLegendre>,
    /// alpha^{(1,d)}_{l,j}(theta_s) for d = 1, 2 at every outer colatitude,
    /// indexed s * (n+1)^2 + scalar_index(l, j); the family-2 coefficients
    /// follow by the quarter-turn relation.
    alpha1: Vec<[Complex64; 2]>,
    dalpha1: Vec<[Complex64; 2]>,
    inner_dirs: Vec<Vector3<f64>>,
    inner_vd: Vec<[Vector3<f64>; 2]>,
    alpha_sing: Vec<f64>,
    /// Legendre contraction tables [m][l][s'], Gauss weights folded in.
    wy: Vec<f64>,
    wa: Vec<f64>,
    wb: Vec<f64>,
    /// Inner azimuthal transform, [r'][jt]: xi e^{i jt Phi_{r'}}.
    phase_et: Mat<Complex64>,
    wigner: WignerTable,
}

impl AssemblyContext {
    pub fn new(surface: Surface, medium: ElasticMedium, n: usize, nprime: usize) -> Result<Self> {
        if n < 1 || nprime < n + 1 {
            return Err(Error::GridMismatch(format!(
                "ansatz order n = {n} needs an inner rule order n' >= n + 1, got n' = {nprime}"
            )));
        }
        let outer = SphericalQuadrature::build(n + 1);
        let inner = SphericalQuadrature::build(nprime);
        let ld = n + 1;
        let sdim = scalar_dim(n);

        let mut nodes = Vec::with_capacity(outer.n_nodes());
        let mut tabs = Vec::with_capacity(outer.n_theta());
        let mut alpha1 = vec![[Complex64::default(); 2]; outer.n_theta() * sdim];
        let mut dalpha1 = vec![[Complex64::default(); 2]; outer.n_theta() * sdim];
        for (s, &theta) in outer.thetas.iter().enumerate() {
            let tab = NormalizedLegendre::new(n, theta);
            for l in 1..=n {
                for j in -(l as i64)..=(l as i64) {
                    let idx = s * sdim + scalar_index(l, j);
                    alpha1[idx] = alpha_coeff_from(&tab, 1, l, j, theta);
                    dalpha1[idx] = alpha_coeff_dtheta_from(&tab, 1, l, j, theta);
                }
            }
            tabs.push(tab);
            let (st, ct) = theta.sin_cos();
            for &phi in &outer.phis {
                let frame = surface.frame(theta, phi)?;
                let jet = tangent_transport_jet(&surface, theta, phi)?;
                let (sp, cp) = phi.sin_cos();
                let dir = Vector3::new(st * cp, st * sp, ct);
                let (et, ep) = sphere_basis(theta, phi);
                let kp = KernelPoint {
                    dir,
                    point: frame.point,
                    normal: frame.normal,
                    jacobian: frame.jacobian,
                };
                let w = [jet.f * et, jet.f * ep];
                // Chart derivatives of F v_d through F and the moving basis.
                let dth = [jet.df_t * et - jet.f * dir, jet.df_t * ep];
                let dph = [
                    jet.df_p * et + jet.f * (ct * ep),
                    jet.df_p * ep - jet.f * (st * dir + ct * et),
                ];
                let mut hw = [[0.0; 2]; 3];
                for d in 0..2 {
                    hw[0][d] = w[d].dot(&frame.t1) / st;
                    hw[1][d] = dph[d].dot(&frame.t1) / st - dth[d].dot(&frame.t2);
                    hw[2][d] = -w[d].dot(&frame.t2);
                }
                nodes.push(OuterNode {
                    kp,
                    t1: frame.t1,
                    t2: frame.t2,
                    w,
                    hw,
                    rot: node_rotation(theta, phi),
                });
            }
        }

        let spn = inner.n_theta();
        let rpn = inner.n_phi();
        let mut inner_dirs = Vec::with_capacity(inner.n_nodes());
        let mut inner_vd = Vec::with_capacity(inner.n_nodes());
        for &th in &inner.thetas {
            let (st, ct) = th.sin_cos();
            for &ph in &inner.phis {
                let (sp, cp) = ph.sin_cos();
                inner_dirs.push(Vector3::new(st * cp, st * sp, ct));
                let (et, ep) = sphere_basis(th, ph);
                inner_vd.push([et, ep]);
            }
        }

        let mut wy = vec![0.0; ld * ld * spn];
        let mut wa = vec![0.0; ld * ld * spn];
        let mut wb = vec![0.0; ld * ld * spn];
        for sp_i in 0..spn {
            let th = inner.thetas[sp_i];
            let eta = inner.nu[sp_i];
            let tab = NormalizedLegendre::new(n, th);
            let sth = th.sin();
            for m in 0..=n {
                for l in m.max(1)..=n {
                    let idx = (m * ld + l) * spn + sp_i;
                    wy[idx] = eta * tab.value(l, m);
                    let nrm = 1.0 / ((l * (l + 1)) as f64).sqrt();
                    wa[idx] = eta * tab.dtheta(l, m) * nrm;
                    wb[idx] = eta * m as f64 * tab.value(l, m) * nrm / sth;
                }
            }
            wy[sp_i] = eta * tab.value(0, 0);
        }

        let nj = 2 * n + 1;
        let mut phase_et = Mat::<Complex64>::zeros(rpn, nj);
        for (rp, &phir) in inner.phis.iter().enumerate() {
            for jt in -(n as i64)..=(n as i64) {
                phase_et[(rp, (jt + n as i64) as usize)] =
                    Complex64::from_polar(inner.mu, jt as f64 * phir);
            }
        }

        let alpha_sing = singular_weights(nprime, &inner.zs);
        let wigner = WignerTable::new(n)?;

        Ok(Self {
            surface,
            medium,
            n,
            nprime,
            outer,
            inner,
            nodes,
            tabs,
            alpha1,
            dalpha1,
            inner_dirs,
            inner_vd,
            alpha_sing,
            wy,
            wa,
            wb,
            phase_et,
            wigner,
        })
    }

    fn node(&self, s: usize, r: usize) -> &OuterNode {
        &self.nodes[s * self.outer.n_phi() + r]
    }

    /// alpha^{(k,d)}_{l,j}(theta_s) for d = 1, 2.
    fn alpha_pair(&self, s: usize, k: usize, l: usize, j: i64) -> [Complex64; 2] {
        let [a1, a2] = self.alpha1[s * scalar_dim(self.n) + scalar_index(l, j)];
        if k == 1 {
            [a1, a2]
        } else {
            [-a2, a1]
        }
    }

    fn dalpha_pair(&self, s: usize, k: usize, l: usize, j: i64) -> [Complex64; 2] {
        let [a1, a2] = self.dalpha1[s * scalar_dim(self.n) + scalar_index(l, j)];
        if k == 1 {
            [a1, a2]
        } else {
            [-a2, a1]
        }
    }

    /// Inner chains for one outer node: kernel sampling over the rotated
    /// grid, azimuthal transform (one matrix product), Legendre contraction,
    /// and the degree-wise recoupling back to the unrotated modes.
    fn chain_for_node(&self, s: usize, r: usize, fmats: &[Vec<Complex64>]) -> Result<NodeChains> {
        let n = self.n;
        let ni = n as i64;
        let nj = 2 * n + 1;
        let sdim = scalar_dim(n);
        let vdim = vector_dim(n);
        let spn = self.inner.n_theta();
        let rpn = self.inner.n_phi();
        let node = self.node(s, r);
        let tinv = node.rot.t_inv;

        // Kernel families over the rotated inner grid, one column per inner
        // azimuth: 0 K, 1 single layer (compressional), 2..6 the shear rows
        // [h][d], 6..10 the cross rows [d][d'].
        let mut vt = Mat::<Complex64>::zeros(10 * spn, rpn);
        for rp in 0..rpn {
            for sp_i in 0..spn {
                let zi = self.inner.node_index(sp_i, rp);
                let ydir = tinv * self.inner_dirs[zi];
                let tr = crate::geometry::ChartTrig::from_direction(&ydir)?;
                let yfr = self.surface.frame_trig(&tr);
                let ykp = KernelPoint {
                    dir: ydir,
                    point: yfr.point,
                    normal: yfr.normal,
                    jacobian: yfr.jacobian,
                };
                let fy = tangent_transport(&ydir, &yfr.normal)?;
                let samp = kernel_samples(&self.surface, &self.medium, &node.kp, &ykp);
                let al = self.alpha_sing[sp_i];
                let vk = samp.k2 + al * samp.k1;
                let vp = samp.sp2 + al * samp.sp1;
                let sbr = samp.ss2 + al * samp.ss1;
                let cm = samp.m2 + al * samp.m1;
                let vds = &self.inner_vd[zi];
                let v1 = fy * (tinv * vds[0]);
                let v2 = fy * (tinv * vds[1]);
                let u = [
                    [-v1.dot(&node.t2), -v2.dot(&node.t2)],
                    [-v1.dot(&node.t1), -v2.dot(&node.t1)],
                ];
                let bv = [samp.bratio * v1, samp.bratio * v2];
                vt[(sp_i, rp)] = vk;
                vt[(spn + sp_i, rp)] = vp;
                for h in 0..2 {
                    for d in 0..2 {
                        vt[((2 + 2 * h + d) * spn + sp_i, rp)] = sbr * u[h][d];
                    }
                }
                for d in 0..2 {
                    for dp in 0..2 {
                        vt[((6 + 2 * d + dp) * spn + sp_i, rp)] = cm * node.w[dp].dot(&bv[d]);
                    }
                }
            }
        }

        let mut et = Mat::<Complex64>::zeros(10 * spn, nj);
        matmul(
            &mut et,
            faer::Accum::Replace,
            &vt,
            &self.phase_et,
            Complex64::from(1.0),
            Par::Seq,
        );
        // Column-contiguous copy so the Legendre contractions read slices.
        let stride = 10 * spn;
        let mut ec = vec![Complex64::default(); nj * stride];
        for c in 0..nj {
            for row in 0..stride {
                ec[c * stride + row] = et[(row, c)];
            }
        }

        // Legendre contractions over the inner colatitudes.
        let zero = || vec![Complex64::default(); sdim];
        let mut d_k = zero();
        let mut d_p = zero();
        let mut d_n: [[Vec<Complex64>; 2]; 2] = std::array::from_fn(|_| [zero(), zero()]);
        let mut d_m: [[Vec<Complex64>; 2]; 2] = std::array::from_fn(|_| [zero(), zero()]);
        let ld = n + 1;
        for jt in -ni..=ni {
            let m = jt.unsigned_abs() as usize;
            let col = &ec[((jt + ni) as usize) * stride..][..stride];
            let ph = phase(jt);
            let sg = jt.signum() as f64;
            for l in m..=n {
                let tidx = (m * ld + l) * spn;
                let w_y = &self.wy[tidx..tidx + spn];
                let si = scalar_index(l, jt);
                let mut ak = Complex64::default();
                let mut ap = Complex64::default();
                for i in 0..spn {
                    ak += w_y[i] * col[i];
                    ap += w_y[i] * col[spn + i];
                }
                d_k[si] = ph * ak;
                d_p[si] = ph * ap;
                if l == 0 {
                    continue;
                }
                let w_a = &self.wa[tidx..tidx + spn];
                let w_b = &self.wb[tidx..tidx + spn];
                let contract = |f1: usize, f2: usize| {
                    let e1 = &col[f1 * spn..(f1 + 1) * spn];
                    let e2 = &col[f2 * spn..(f2 + 1) * spn];
                    let mut a1 = Complex64::default();
                    let mut a2 = Complex64::default();
                    let mut b1 = Complex64::default();
                    let mut b2 = Complex64::default();
                    for i in 0..spn {
                        a1 += w_a[i] * e1[i];
                        a2 += w_a[i] * e2[i];
                        b1 += w_b[i] * e1[i];
                        b2 += w_b[i] * e2[i];
                    }
                    (
                        ph * (a1 + Complex64::i() * (sg * b2)),
                        ph * (a2 - Complex64::i() * (sg * b1)),
                    )
                };
                for h in 0..2 {
                    let (k1v, k2v) = contract(2 + 2 * h, 2 + 2 * h + 1);
                    d_n[0][h][si] = k1v;
                    d_n[1][h][si] = k2v;
                }
                for dp in 0..2 {
                    let (k1v, k2v) = contract(6 + dp, 6 + 2 + dp);
                    d_m[0][dp][si] = k1v;
                    d_m[1][dp][si] = k2v;
                }
            }
        }

        // Recoupling to the unrotated modes, degree by degree, with the
        // outer azimuthal phases on both sides.
        let phir = self.outer.phis[r];
        let eneg: Vec<Complex64> = (-ni..=ni)
            .map(|k| Complex64::from_polar(1.0, -k as f64 * phir))
            .collect();
        let mut acc = vec![Complex64::default(); nj];
        let mut mix = |dvec: &[Complex64], out: &mut [Complex64], vector_layout: bool| {
            let lmin = if vector_layout { 1 } else { 0 };
            for l in lmin..=n {
                let li = l as i64;
                let dim_l = 2 * l + 1;
                let fm = &fmats[l];
                for a in acc[..dim_l].iter_mut() {
                    *a = Complex64::default();
                }
                for jt in -li..=li {
                    let coef = dvec[scalar_index(l, jt)] * eneg[(jt + ni) as usize];
                    let row = &fm[((jt + li) as usize) * dim_l..][..dim_l];
                    for (a, &f) in acc[..dim_l].iter_mut().zip(row) {
                        *a += coef * f;
                    }
                }
                for j in -li..=li {
                    let v = acc[(j + li) as usize] * eneg[(ni - j) as usize];
                    let oi = if vector_layout {
                        vector_index(l, j)
                    } else {
                        scalar_index(l, j)
                    };
                    out[oi] = v;
                }
            }
        };

        let mut ck = zero();
        let mut cp = zero();
        mix(&d_k, &mut ck, false);
        mix(&d_p, &mut cp, false);
        let vzero = || vec![Complex64::default(); vdim];
        let mut cn: [[Vec<Complex64>; 2]; 2] = std::array::from_fn(|_| [vzero(), vzero()]);
        let mut cm: [[Vec<Complex64>; 2]; 2] = std::array::from_fn(|_| [vzero(), vzero()]);
        for kt in 0..2 {
            for h in 0..2 {
                mix(&d_n[kt][h], &mut cn[kt][h], true);
                mix(&d_m[kt][h], &mut cm[kt][h], true);
            }
        }
        Ok(NodeChains { ck, cp, cn, cm })
    }
}

/// Gram blocks of the ansatz bases under the surface measure: the scalar
/// block (J Y_{l,j}, Y_{l',j'}) and the four tangential blocks
/// (J Z^{(kt)}, Z^{(k')}), all over the outer rule.
pub fn assemble_gram(ctx: &AssemblyContext) -> (Mat<Complex64>, [[Mat<Complex64>; 2]; 2]) {
    let n = ctx.n;
    let ni = n as i64;
    let sdim = scalar_dim(n);
    let vdim = vector_dim(n);

    // Azimuthal moments of the area element per outer colatitude.
    let nk = 4 * n + 1;
    let mut jphase = vec![Complex64::default(); ctx.outer.n_theta() * nk];
    for s in 0..ctx.outer.n_theta() {
        for (r, &phir) in ctx.outer.phis.iter().enumerate() {
            let jac = ctx.node(s, r).kp.jacobian;
            for k in -(2 * ni)..=(2 * ni) {
                jphase[s * nk + (k + 2 * ni) as usize] +=
                    Complex64::from_polar(ctx.outer.mu * jac, k as f64 * phir);
            }
        }
    }

    let mut ig = Mat::<Complex64>::zeros(sdim, sdim);
    let mut ug: [[Mat<Complex64>; 2]; 2] =
        std::array::from_fn(|_| std::array::from_fn(|_| Mat::<Complex64>::zeros(vdim, vdim)));

    for s in 0..ctx.outer.n_theta() {
        let nu_s = ctx.outer.nu[s];
        let tab = &ctx.tabs[s];
        let jp_row = &jphase[s * nk..(s + 1) * nk];
        for lp in 0..=n {
            for jp in -(lp as i64)..=(lp as i64) {
                let row = scalar_index(lp, jp);
                let wp = nu_s * phase(jp) * tab.value(lp, jp.unsigned_abs() as usize);
                for l in 0..=n {
                    for j in -(l as i64)..=(l as i64) {
                        let w = wp * phase(j) * tab.value(l, j.unsigned_abs() as usize);
                        ig[(row, scalar_index(l, j))] +=
                            w * jp_row[(j - jp + 2 * ni) as usize];
                    }
                }
            }
        }
        for lp in 1..=n {
            for jp in -(lp as i64)..=(lp as i64) {
                let row = vector_index(lp, jp);
                let [c1, c2] = ctx.alpha_pair(s, 1, lp, jp);
                let (c1, c2) = (c1.conj(), c2.conj());
                for l in 1..=n {
                    for j in -(l as i64)..=(l as i64) {
                        let col = vector_index(l, j);
                        let [a1, a2] = ctx.alpha_pair(s, 1, l, j);
                        let jph = nu_s * jp_row[(j - jp + 2 * ni) as usize];
                        // Sum over d of alpha^{(kt,d)} conj(alpha^{(k',d)})
                        // for the four (k', kt) combinations.
                        let p = a1 * c1 + a2 * c2;
                        let q = a2 * c1 - a1 * c2;
                        ug[0][0][(row, col)] += p * jph;
                        ug[1][1][(row, col)] += p * jph;
                        ug[0][1][(row, col)] -= q * jph;
                        ug[1][0][(row, col)] += q * jph;
                    }
                }
            }
        }
    }
    (ig, ug)
}

/// Assemble the full Galerkin matrix over the outer rule, all blocks.
pub fn assemble_matrix(ctx: &AssemblyContext) -> Result<Mat<Complex64>> {
    let n = ctx.n;
    let ni = n as i64;
    let nj = 2 * n + 1;
    let sdim = scalar_dim(n);
    let vdim = vector_dim(n);
    let dim = system_dim(n);
    let s_out = ctx.outer.n_theta();
    let r_out = ctx.outer.n_phi();

    let mut k_blk = vec![Complex64::default(); sdim * sdim];
    let mut n_blk: [Vec<Complex64>; 2] =
        std::array::from_fn(|_| vec![Complex64::default(); sdim * vdim]);
    let mut h_blk: [Vec<Complex64>; 2] =
        std::array::from_fn(|_| vec![Complex64::default(); vdim * sdim]);
    let mut m_blk: [[Vec<Complex64>; 2]; 2] =
        std::array::from_fn(|_| std::array::from_fn(|_| vec![Complex64::default(); vdim * vdim]));

    for s in 0..s_out {
        let theta = ctx.outer.thetas[s];
        let nu_s = ctx.outer.nu[s];
        let st = theta.sin();
        let fmats: Vec<Vec<Complex64>> = (0..=n)
            .map(|l| rotation_coefficients(&ctx.wigner, l, theta))
            .collect();

        let per_r: Result<Vec<NodeChains>> = (0..r_out)
            .into_par_iter()
            .map(|r| ctx.chain_for_node(s, r, &fmats))
            .collect();
        let per_r = per_r?;

        // Stack the per-azimuth chain outputs as columns.
        let mut ckt = Mat::<Complex64>::zeros(sdim, r_out);
        let mut cpt = Mat::<Complex64>::zeros(sdim, r_out);
        let mut cnt: [[Mat<Complex64>; 2]; 2] =
            std::array::from_fn(|_| std::array::from_fn(|_| Mat::<Complex64>::zeros(vdim, r_out)));
        let mut cmt: [[Mat<Complex64>; 2]; 2] =
            std::array::from_fn(|_| std::array::from_fn(|_| Mat::<Complex64>::zeros(vdim, r_out)));
        for (r, ch) in per_r.iter().enumerate() {
            for i in 0..sdim {
                ckt[(i, r)] = ch.ck[i];
                cpt[(i, r)] = ch.cp[i];
            }
            for kt in 0..2 {
                for h in 0..2 {
                    for i in 0..vdim {
                        cnt[kt][h][(i, r)] = ch.cn[kt][h][i];
                        cmt[kt][h][(i, r)] = ch.cm[kt][h][i];
                    }
                }
            }
        }

        // Outer azimuthal transforms.
        let mut pbt = Mat::<Complex64>::zeros(r_out, nj);
        for (r, &phir) in ctx.outer.phis.iter().enumerate() {
            for jp in -ni..=ni {
                pbt[(r, (jp + ni) as usize)] =
                    Complex64::from_polar(ctx.outer.mu, -jp as f64 * phir);
            }
        }
        let pbt_h: [[Mat<Complex64>; 2]; 3] = std::array::from_fn(|w| {
            std::array::from_fn(|d| {
                let mut m = Mat::<Complex64>::zeros(r_out, nj);
                for r in 0..r_out {
                    let hwv = ctx.node(s, r).hw[w][d];
                    for c in 0..nj {
                        m[(r, c)] = pbt[(r, c)] * hwv;
                    }
                }
                m
            })
        });
        let gemm = |lhs: &Mat<Complex64>, rhs: &Mat<Complex64>| {
            let mut out = Mat::<Complex64>::zeros(lhs.nrows(), nj);
            matmul(
                &mut out,
                faer::Accum::Replace,
                lhs,
                rhs,
                Complex64::from(1.0),
                Par::Seq,
            );
            out
        };
        let bk = gemm(&ckt, &pbt);
        let bn: [[Mat<Complex64>; 2]; 2] =
            std::array::from_fn(|kt| std::array::from_fn(|h| gemm(&cnt[kt][h], &pbt)));
        let bm: [[Mat<Complex64>; 2]; 2] =
            std::array::from_fn(|kt| std::array::from_fn(|dp| gemm(&cmt[kt][dp], &pbt)));
        let bh: [[Mat<Complex64>; 2]; 3] =
            std::array::from_fn(|w| std::array::from_fn(|d| gemm(&cpt, &pbt_h[w][d])));

        // Fold with the outer test factors.
        for lp in 0..=n {
            for jp in -(lp as i64)..=(lp as i64) {
                let m_ab = jp.unsigned_abs() as usize;
                let jcol = (jp + ni) as usize;
                let wk = nu_s * phase(jp) * ctx.tabs[s].value(lp, m_ab);
                let row = &mut k_blk[scalar_index(lp, jp) * sdim..][..sdim];
                for (c, rv) in row.iter_mut().enumerate() {
                    *rv += wk * bk[(c, jcol)];
                }
                if lp == 0 {
                    // The curl-type test weights vanish identically for the
                    // constant mode, so that shear-coupling row stays zero.
                    continue;
                }
                // Scalar-row shear coupling: curl-type test weights.
                let w1 = Complex64::from(nu_s * phase(jp) * ctx.tabs[s].dtheta(lp, m_ab));
                let w2 = Complex64::new(0.0, jp as f64)
                    * (nu_s * phase(jp) * ctx.tabs[s].value(lp, m_ab) / st);
                for kt in 0..2 {
                    let row = &mut n_blk[kt][scalar_index(lp, jp) * vdim..][..vdim];
                    for (c, rv) in row.iter_mut().enumerate() {
                        *rv += w1 * bn[kt][0][(c, jcol)] + w2 * bn[kt][1][(c, jcol)];
                    }
                }
                for kprime in 0..2 {
                    let a = ctx.alpha_pair(s, kprime + 1, lp, jp);
                    let da = ctx.dalpha_pair(s, kprime + 1, lp, jp);
                    let row = &mut h_blk[kprime][vector_index(lp, jp) * sdim..][..sdim];
                    for d in 0..2 {
                        let c1 = nu_s * (Complex64::new(0.0, jp as f64) * a[d]).conj();
                        let c2 = nu_s * a[d].conj();
                        let c3 = nu_s * da[d].conj();
                        for (c, rv) in row.iter_mut().enumerate() {
                            *rv += c1 * bh[0][d][(c, jcol)]
                                + c2 * bh[1][d][(c, jcol)]
                                + c3 * bh[2][d][(c, jcol)];
                        }
                    }
                    for kt in 0..2 {
                        let row =
                            &mut m_blk[kprime][kt][vector_index(lp, jp) * vdim..][..vdim];
                        for dp in 0..2 {
                            let cw = nu_s * a[dp].conj();
                            for (c, rv) in row.iter_mut().enumerate() {
                                *rv += cw * bm[kt][dp][(c, jcol)];
                            }
                        }
                    }
                }
            }
        }
    }

    let (ig, ug) = assemble_gram(ctx);
    let mut a = Mat::<Complex64>::zeros(dim, dim);
    for col in 0..sdim {
        for row in 0..sdim {
            a[(row, col)] = k_blk[row * sdim + col] - ig[(row, col)];
        }
        for kprime in 0..2 {
            for row in 0..vdim {
                a[(sdim + kprime * vdim + row, col)] = h_blk[kprime][row * sdim + col];
            }
        }
    }
    for kt in 0..2 {
        for col in 0..vdim {
            let acol = sdim + kt * vdim + col;
            for row in 0..sdim {
                a[(row, acol)] = n_blk[kt][row * vdim + col];
            }
            for kprime in 0..2 {
                for row in 0..vdim {
                    a[(sdim + kprime * vdim + row, acol)] =
                        m_blk[kprime][kt][row * vdim + col] + ug[kprime][kt][(row, col)];
                }
            }
        }
    }
    Ok(a)
}

/// Right-hand side from the incident-field traces, factor 2 included.
pub fn assemble_rhs(ctx: &AssemblyContext, incident: &IncidentField) -> Result<Mat<Complex64>> {
    let m = &ctx.medium;
    let im = &incident.medium;
    if m.omega != im.omega || m.lambda != im.lambda || m.mu != im.mu {
        return Err(Error::GridMismatch(
            "incident field medium differs from the assembly medium".into(),
        ));
    }
    let mut traces = Vec::with_capacity(ctx.nodes.len());
    for &theta in &ctx.outer.thetas {
        for &phi in &ctx.outer.phis {
            traces.push(incident.trace(&ctx.surface, theta, phi)?);
        }
    }
    Ok(rhs_from_traces(ctx, &traces))
}

fn rhs_from_traces(
    ctx: &AssemblyContext,
    traces: &[(Complex64, Vector3<Complex64>)],
) -> Mat<Complex64> {
    let n = ctx.n;
    let ni = n as i64;
    let nj = 2 * n + 1;
    let sdim = scalar_dim(n);
    let vdim = vector_dim(n);
    let s_out = ctx.outer.n_theta();

    // Azimuthal moments of the weighted traces per outer colatitude.
    let mut f1ph = vec![Complex64::default(); s_out * nj];
    let mut f2ph = vec![[Complex64::default(); 2]; s_out * nj];
    for s in 0..s_out {
        for (r, &phir) in ctx.outer.phis.iter().enumerate() {
            let node = ctx.node(s, r);
            let (f1, f2) = &traces[s * ctx.outer.n_phi() + r];
            let jac = node.kp.jacobian;
            let fw = [
                f2.dot(&node.w[0].map(Complex64::from)),
                f2.dot(&node.w[1].map(Complex64::from)),
            ];
            for jp in -ni..=ni {
                let e = Complex64::from_polar(ctx.outer.mu * jac, -jp as f64 * phir);
                let slot = s * nj + (jp + ni) as usize;
                f1ph[slot] += e * f1;
                f2ph[slot][0] += e * fw[0];
                f2ph[slot][1] += e * fw[1];
            }
        }
    }

    let mut b = Mat::<Complex64>::zeros(system_dim(n), 1);
    for s in 0..s_out {
        let nu_s = ctx.outer.nu[s];
        for lp in 0..=n {
            for jp in -(lp as i64)..=(lp as i64) {
                let slot = s * nj + (jp + ni) as usize;
                let w = 2.0 * nu_s * phase(jp) * ctx.tabs[s].value(lp, jp.unsigned_abs() as usize);
                b[(scalar_index(lp, jp), 0)] += w * f1ph[slot];
                if lp == 0 {
                    continue;
                }
                for kprime in 0..2 {
                    let a = ctx.alpha_pair(s, kprime + 1, lp, jp);
                    let mut acc = Complex64::default();
                    for d in 0..2 {
                        acc += a[d].conj() * f2ph[slot][d];
                    }
                    b[(sdim + kprime * vdim + vector_index(lp, jp), 0)] += 2.0 * nu_s * acc;
                }
            }
        }
    }
    b
}

/// Matrix and right-hand side for one scattering configuration.
pub fn assemble_system(ctx: &AssemblyContext, incident: &IncidentField) -> Result<BlockSystem> {
    Ok(BlockSystem {
        n: ctx.n,
        nprime: ctx.nprime,
        a: assemble_matrix(ctx)?,
        b: assemble_rhs(ctx, incident)?,
    })
}

#[cfg(test)]
mod tests {
    use super::direct::{apply_normal_derivative, apply_single_layer, DirectRule};
    use super::*;
    use crate::sphharm::{sph_harmonic, z_basis};
    use std::f64::consts::PI;

    fn medium() -> ElasticMedium {
        ElasticMedium::new(PI, 2.0, 1.0).unwrap()
    }

    #[test]
    fn index_layout_is_lexicographic_and_dense() {
        let n = 4usize;
        let mut expect = 0usize;
        for l in 0..=n {
            for j in -(l as i64)..=(l as i64) {
                assert_eq!(scalar_index(l, j), expect);
                if l >= 1 {
                    assert_eq!(vector_index(l, j), expect - 1);
                }
                expect += 1;
            }
        }
        assert_eq!(expect, scalar_dim(n));
        assert_eq!(system_dim(n), 3 * (n + 1) * (n + 1) - 2);
    }

    #[test]
    fn context_rejects_inconsistent_orders() {
        assert!(AssemblyContext::new(Surface::Sphere, medium(), 0, 3).is_err());
        assert!(AssemblyContext::new(Surface::Sphere, medium(), 4, 4).is_err());
        assert!(AssemblyContext::new(Surface::Sphere, medium(), 4, 5).is_ok());
    }

    #[test]
    fn gram_blocks_reduce_to_identity_on_the_sphere() {
        let n = 6;
        let ctx = AssemblyContext::new(Surface::Sphere, medium(), n, 2 * n + 1).unwrap();
        let (ig, ug) = assemble_gram(&ctx);
        for r in 0..scalar_dim(n) {
            for c in 0..scalar_dim(n) {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!(
                    (ig[(r, c)] - want).norm() < 1e-12,
                    "scalar gram ({r},{c}) = {}",
                    ig[(r, c)]
                );
            }
        }
        for kp in 0..2 {
            for kt in 0..2 {
                for r in 0..vector_dim(n) {
                    for c in 0..vector_dim(n) {
                        let want = if kp == kt && r == c { 1.0 } else { 0.0 };
                        assert!(
                            (ug[kp][kt][(r, c)] - want).norm() < 1e-12,
                            "vector gram [{kp}][{kt}] ({r},{c}) = {}",
                            ug[kp][kt][(r, c)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gram_blocks_are_hermitian_on_the_bean() {
        let n = 5;
        let ctx = AssemblyContext::new(Surface::Bean, medium(), n, 2 * n + 1).unwrap();
        let (ig, ug) = assemble_gram(&ctx);
        for r in 0..scalar_dim(n) {
            for c in 0..scalar_dim(n) {
                assert!((ig[(r, c)] - ig[(c, r)].conj()).norm() < 1e-12);
            }
        }
        for kp in 0..2 {
            for kt in 0..2 {
                for r in 0..vector_dim(n) {
                    for c in 0..vector_dim(n) {
                        assert!((ug[kp][kt][(r, c)] - ug[kt][kp][(c, r)].conj()).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_single_layer_matches_separated_eigenvalues() {
        // 2 i kappa j_l(kappa) h_l^(1)(kappa) at kappa = pi/2, 40-digit
        // reference values.
        let eigs = [
            Complex64::new(0.0, 1.273239544735162686),
            Complex64::new(0.8105694691387021716, 0.516024550931191827),
            Complex64::new(0.5248944819329820198, 0.05932409754676175668),
            Complex64::new(0.3263668700133929211, 0.003242643775750750725),
            Complex64::new(0.2384718971538016836, 0.0001039851671291661977),
            Complex64::new(0.1900899137803777237, 2.19655007599910614e-6),
        ];
        let n = 8;
        let nprime = 17;
        let kappa = 0.5 * PI;
        let outer = SphericalQuadrature::build(n + 1);
        for (l, &eig) in eigs.iter().enumerate() {
            let mut js = vec![0i64];
            if l > 0 {
                js.push(l as i64);
                js.push(-(l as i64));
            }
            for j in js {
                let g = move |th: f64, ph: f64| sph_harmonic(l, j, th, ph);
                let vals = apply_single_layer(&Surface::Sphere, kappa, n, nprime, &g).unwrap();
                let mut i = 0;
                for &theta in &outer.thetas {
                    for &phi in &outer.phis {
                        let want = eig * sph_harmonic(l, j, theta, phi);
                        assert!(
                            (vals[i] - want).norm() < 1e-8,
                            "l={l} j={j}: {} vs {want}",
                            vals[i]
                        );
                        i += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_static_limits_are_exact_for_resolved_degrees() {
        // At zero wavenumber the smooth kernel parts vanish and the weak
        // parts are constants over the unit sphere, so the corrective rule
        // reproduces the layer-potential eigenvalues 2/(2l+1) and -1/(2l+1)
        // to roundoff for every degree the rule resolves.
        let n = 6;
        let nprime = 13;
        let outer = SphericalQuadrature::build(n + 1);
        for l in 0..=6usize {
            let j = -((l / 2) as i64);
            let g = move |th: f64, ph: f64| sph_harmonic(l, j, th, ph);
            let s_vals = apply_single_layer(&Surface::Sphere, 0.0, n, nprime, &g).unwrap();
            let k_vals = apply_normal_derivative(&Surface::Sphere, 0.0, n, nprime, &g).unwrap();
            let es = 2.0 / (2.0 * l as f64 + 1.0);
            let ek = -1.0 / (2.0 * l as f64 + 1.0);
            let mut i = 0;
            for &theta in &outer.thetas {
                for &phi in &outer.phis {
                    let y = sph_harmonic(l, j, theta, phi);
                    assert!((s_vals[i] - es * y).norm() < 1e-12, "single layer l={l}");
                    assert!((k_vals[i] - ek * y).norm() < 1e-12, "double layer l={l}");
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn fast_chains_match_literal_quadruple_sums() {
        let n = 4;
        let nprime = 9;
        let med = medium();
        let ctx = AssemblyContext::new(Surface::Bean, med, n, nprime).unwrap();
        let a = assemble_matrix(&ctx).unwrap();
        let rule = DirectRule::new(Surface::Bean, med, n, nprime);
        let sdim = scalar_dim(n);
        let vdim = vector_dim(n);

        let close = |got: Complex64, want: Complex64, what: &str| {
            let tol = 1e-10 * want.norm().max(1.0);
            assert!(
                (got - want).norm() < tol,
                "{what}: fast {got} vs direct {want}"
            );
        };

        let scalar_pairs: [(usize, i64, usize, i64); 9] = [
            (0, 0, 0, 0),
            (1, -1, 2, 1),
            (3, 2, 1, 0),
            (4, -3, 4, 3),
            (2, 0, 3, -2),
            (1, 1, 1, 1),
            (4, 4, 2, -2),
            (3, -1, 4, 0),
            (2, 2, 0, 0),
        ];
        for &(lp, jp, l, j) in &scalar_pairs {
            let want =
                rule.k_entry(lp, jp, l, j).unwrap() - rule.gram_scalar(lp, jp, l, j).unwrap();
            close(
                a[(scalar_index(lp, jp), scalar_index(l, j))],
                want,
                "scalar diagonal block",
            );
        }

        let nv_pairs: [(usize, i64, usize, i64); 9] = [
            (0, 0, 1, 0),
            (1, -1, 1, 1),
            (2, 1, 3, -2),
            (4, -4, 2, 2),
            (3, 0, 4, 1),
            (1, 1, 2, -1),
            (4, 2, 1, -1),
            (2, -2, 4, 4),
            (3, 3, 3, -3),
        ];
        for kt in 0..2usize {
            for &(lp, jp, l, j) in &nv_pairs {
                let want = rule.n_entry(kt + 1, lp, jp, l, j).unwrap();
                close(
                    a[(scalar_index(lp, jp), sdim + kt * vdim + vector_index(l, j))],
                    want,
                    "shear coupling block",
                );
            }
        }

        let hv_pairs: [(usize, i64, usize, i64); 9] = [
            (1, 0, 0, 0),
            (1, -1, 2, 1),
            (2, 2, 4, -3),
            (3, -3, 1, 1),
            (4, 1, 3, 0),
            (2, 0, 2, 0),
            (4, -2, 4, 4),
            (3, 1, 2, -2),
            (1, 1, 4, 0),
        ];
        for kp in 0..2usize {
            for &(lp, jp, l, j) in &hv_pairs {
                let want = rule.h_entry(kp + 1, lp, jp, l, j).unwrap();
                close(
                    a[(sdim + kp * vdim + vector_index(lp, jp), scalar_index(l, j))],
                    want,
                    "compressional coupling block",
                );
            }
        }

        let mm_pairs: [(usize, i64, usize, i64); 9] = [
            (1, 0, 1, 0),
            (1, -1, 2, 1),
            (2, 2, 4, -3),
            (3, -3, 1, 1),
            (4, 1, 3, 0),
            (2, 0, 2, 0),
            (4, -2, 4, 4),
            (3, 1, 2, -2),
            (1, 1, 3, 3),
        ];
        for kp in 0..2usize {
            for kt in 0..2usize {
                for &(lp, jp, l, j) in &mm_pairs {
                    let want = rule.gram_vector(kp + 1, kt + 1, lp, jp, l, j).unwrap()
                        + rule.m_entry(kp + 1, kt + 1, lp, jp, l, j).unwrap();
                    close(
                        a[(
                            sdim + kp * vdim + vector_index(lp, jp),
                            sdim + kt * vdim + vector_index(l, j),
                        )],
                        want,
                        "tangential diagonal block",
                    );
                }
            }
        }

        // The constant test mode has no curl, so its shear-coupling row is
        // exactly zero.
        for kt in 0..2 {
            for c in 0..vdim {
                assert_eq!(a[(0, sdim + kt * vdim + c)], Complex64::default());
            }
        }
    }

    #[test]
    fn rhs_matches_literal_sums_for_a_point_source() {
        let n = 3;
        let nprime = 7;
        let med = medium();
        let ctx = AssemblyContext::new(Surface::Cushion, med, n, nprime).unwrap();
        let inc = IncidentField::point_source(
            med,
            Vector3::new(0.0, 0.05, 0.0866),
            Vector3::new(1.0, 0.0, 0.0),
        );
        let b = assemble_rhs(&ctx, &inc).unwrap();
        let rule = DirectRule::new(Surface::Cushion, med, n, nprime);
        let sdim = scalar_dim(n);
        let vdim = vector_dim(n);

        for &(lp, jp) in &[(0usize, 0i64), (1, -1), (2, 2), (3, 0), (3, -3)] {
            let want = rule.rhs_scalar(&inc, lp, jp).unwrap();
            let got = b[(scalar_index(lp, jp), 0)];
            assert!(
                (got - want).norm() < 1e-10 * want.norm().max(1.0),
                "scalar rhs ({lp},{jp}): {got} vs {want}"
            );
        }
        for kp in 0..2usize {
            for &(lp, jp) in &[(1usize, 0i64), (2, -1), (3, 2), (1, 1)] {
                let want = rule.rhs_vector(&inc, kp + 1, lp, jp).unwrap();
                let got = b[(sdim + kp * vdim + vector_index(lp, jp), 0)];
                assert!(
                    (got - want).norm() < 1e-10 * want.norm().max(1.0),
                    "vector rhs [{kp}] ({lp},{jp}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn rhs_rejects_mismatched_media() {
        let ctx = AssemblyContext::new(Surface::Sphere, medium(), 2, 5).unwrap();
        let other = ElasticMedium::new(2.0 * PI, 2.0, 1.0).unwrap();
        let inc = IncidentField::plane_p(other, Vector3::new(0.0, 0.0, 1.0));
        assert!(assemble_rhs(&ctx, &inc).is_err());
    }

    #[test]
    fn zero_traces_give_zero_rhs() {
        let n = 3;
        let ctx = AssemblyContext::new(Surface::Ellipsoid, medium(), n, 7).unwrap();
        let traces = vec![(Complex64::default(), Vector3::zeros()); ctx.nodes.len()];
        let b = rhs_from_traces(&ctx, &traces);
        for i in 0..system_dim(n) {
            assert_eq!(b[(i, 0)], Complex64::default());
        }
    }

    #[test]
    fn assembly_is_bitwise_deterministic() {
        let n = 3;
        let ctx = AssemblyContext::new(Surface::Bean, medium(), n, 7).unwrap();
        let a1 = assemble_matrix(&ctx).unwrap();
        let a2 = assemble_matrix(&ctx).unwrap();
        for c in 0..system_dim(n) {
            for r in 0..system_dim(n) {
                assert_eq!(a1[(r, c)], a2[(r, c)]);
            }
        }
    }

    #[test]
    fn tangential_test_factor_matches_finite_differences() {
        let rule = DirectRule::new(Surface::Bean, medium(), 5, 11);
        let h = 1e-5;
        let inv2h = Complex64::from(1.0 / (2.0 * h));
        for &(k, l, j) in &[(1usize, 3usize, 2i64), (2, 4, -3), (1, 1, 0), (2, 2, 1)] {
            for &(theta, phi) in &[(1.1f64, 2.3f64), (0.7, 5.1), (2.2, 0.4)] {
                let fr = rule.surface.frame(theta, phi).unwrap();
                let zt = (z_basis(&rule.surface, k, l, j, theta + h, phi).unwrap()
                    - z_basis(&rule.surface, k, l, j, theta - h, phi).unwrap())
                    * inv2h;
                let zp = (z_basis(&rule.surface, k, l, j, theta, phi + h).unwrap()
                    - z_basis(&rule.surface, k, l, j, theta, phi - h).unwrap())
                    * inv2h;
                let t1 = fr.t1.map(Complex64::from);
                let t2 = fr.t2.map(Complex64::from);
                let want = t1.dot(&zp) / theta.sin() - t2.dot(&zt);
                let got = rule.h_test_factor(k, l, j, theta, phi).unwrap();
                assert!(
                    (got - want).norm() < 1e-7 * want.norm().max(1.0),
                    "k={k} l={l} j={j} at ({theta},{phi}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn rotated_grids_stay_clear_of_chart_poles() {
        for &n in &[4usize, 12, 25] {
            let outer = SphericalQuadrature::build(n + 1);
            let inner = SphericalQuadrature::build(2 * n + 1);
            let mut dirs = Vec::with_capacity(inner.n_nodes());
            for &th in &inner.thetas {
                let (st, ct) = th.sin_cos();
                for &ph in &inner.phis {
                    dirs.push(Vector3::new(st * ph.cos(), st * ph.sin(), ct));
                }
            }
            let mut min_sin = f64::INFINITY;
            for &theta in &outer.thetas {
                for &phi in &outer.phis {
                    let rot = node_rotation(theta, phi);
                    for z in &dirs {
                        let y = rot.t_inv * z;
                        min_sin = min_sin.min((1.0 - y.z * y.z).max(0.0).sqrt());
                    }
                }
            }
            assert!(
                min_sin > 1e-6,
                "rotated grid reaches sin(colatitude) = {min_sin} at n = {n}"
            );
        }
    }
}
