//! Wigner d-matrix values at beta = pi/2 and the azimuthal recoupling
//! coefficients used to expand harmonics on rotated grids.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense table of d^{(l)}_{j,m}(pi/2) for all l <= lmax.
///
/// Degree-boundary entries come from the closed-form top row
/// d^l_{l,m'} = (-1)^{l-m'} sqrt(C(2l, l-m')) 2^{-l} (stepped by stable
/// ratios) and its symmetry images; interior entries follow the three-term
/// recurrence in l, which at beta = pi/2 stays well-conditioned far beyond
/// the degrees used here (validated to l = 200).
pub struct WignerTable {
    lmax: usize,
    levels: Vec<Vec<f64>>,
}

impl WignerTable {
    pub fn new(lmax: usize) -> Result<Self> {
        if lmax > 300 {
            return Err(Error::Overflow { degree: lmax });
        }
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(lmax + 1);
        levels.push(vec![1.0]);
        for l in 1..=lmax {
            let dim = 2 * l + 1;
            let mut cur = vec![0.0f64; dim * dim];
            let li = l as i64;
            let idx = |j: i64, m: i64| ((j + li) as usize) * dim + (m + li) as usize;

            // Top row j = l: seed at (l, l), then step m downward.
            cur[idx(li, li)] = 0.5f64.powi(l as i32);
            for m in (-li + 1..=li).rev() {
                let ratio = -(((l as f64) + m as f64) / ((l as f64) - m as f64 + 1.0)).sqrt();
                cur[idx(li, m - 1)] = ratio * cur[idx(li, m)];
            }
            // Right column m = l from the top row: d_{j,l} = (-1)^{l-j} d_{l,j}.
            for j in -li..li {
                let sign = if (li - j) % 2 == 0 { 1.0 } else { -1.0 };
                cur[idx(j, li)] = sign * cur[idx(li, j)];
            }
            // Left column and bottom row by d_{j,m} = d_{-m,-j}.
            for j in -li..=li {
                cur[idx(j, -li)] = cur[idx(li, -j)];
            }
            for m in -li + 1..li {
                cur[idx(-li, m)] = cur[idx(-m, li)];
            }

            if l == 1 {
                // Single interior entry: d^1_{0,0}(pi/2) = cos(pi/2) = 0.
                cur[idx(0, 0)] = 0.0;
            } else {
                let prev = &levels[l - 1];
                let prev2 = &levels[l - 2];
                let jcur = (l - 1) as f64; // recurrence steps J -> J+1 = l
                let get = |tab: &Vec<f64>, deg: i64, j: i64, m: i64| -> f64 {
                    if j.abs() > deg || m.abs() > deg {
                        0.0
                    } else {
                        let d = (2 * deg + 1) as usize;
                        tab[((j + deg) as usize) * d + (m + deg) as usize]
                    }
                };
                for j in -li + 1..li {
                    for m in -li + 1..li {
                        let jf = j as f64;
                        let mf = m as f64;
                        let denom = jcur
                            * (((l * l) as f64 - jf * jf) * ((l * l) as f64 - mf * mf)).sqrt();
                        let t1 = -(2.0 * jcur + 1.0) * jf * mf
                            * get(prev, li - 1, j, m);
                        let t2 = (jcur + 1.0)
                            * ((jcur * jcur - jf * jf) * (jcur * jcur - mf * mf)).sqrt()
                            * get(prev2, li - 2, j, m);
                        cur[idx(j, m)] = (t1 - t2) / denom;
                    }
                }
            }
            levels.push(cur);
        }
        Ok(Self { lmax, levels })
    }

    #[inline]
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// d^{(l)}_{j,m}(pi/2); zero outside |j|,|m| <= l.
    #[inline]
    pub fn d(&self, l: usize, j: i64, m: i64) -> f64 {
        debug_assert!(l <= self.lmax);
        let li = l as i64;
        if j.abs() > li || m.abs() > li {
            return 0.0;
        }
        let dim = 2 * l + 1;
        self.levels[l][((j + li) as usize) * dim + (m + li) as usize]
    }
}

/// Recoupling matrix for degree l at polar angle theta:
/// F_{jt,j} = e^{i (j - jt) pi/2} sum_m d^{(l)}_{jt,m} d^{(l)}_{j,m} e^{i m theta},
/// returned row-major with rows jt = -l..l and columns j = -l..l. Multiplied
/// by the azimuthal phases it expands Y_{l,j} on a grid rotated to the pole
/// of the outer node.
pub fn rotation_coefficients(table: &WignerTable, l: usize, theta: f64) -> Vec<Complex64> {
    let li = l as i64;
    let dim = 2 * l + 1;
    // e^{i m theta} for m = -l..l.
    let phases: Vec<Complex64> = (-li..=li)
        .map(|m| Complex64::from_polar(1.0, m as f64 * theta))
        .collect();
    let mut out = vec![Complex64::default(); dim * dim];
    for jt in -li..=li {
        for j in -li..=li {
            let mut acc = Complex64::default();
            for m in -li..=li {
                acc += table.d(l, jt, m) * table.d(l, j, m) * phases[(m + li) as usize];
            }
            let pre = Complex64::from_polar(1.0, (j - jt) as f64 * std::f64::consts::FRAC_PI_2);
            out[((jt + li) as usize) * dim + (j + li) as usize] = pre * acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::node_rotation;
    use crate::sphharm::harmonics::sph_harmonic;
    use nalgebra::Vector3;

    /// Exact-binomial evaluation through the hypergeometric-style sum
    /// 2^j sqrt((l+j)!(l-j)!/((l+m)!(l-m)!)) P_{l+j}^{(m-j, -m-j)}(0),
    /// normalized so it applies once (j, m) is moved into the domain
    /// m >= |j| via the symmetries; independent of the recurrence above.
    fn d_reference(l: i64, j: i64, m: i64) -> f64 {
        // Normalize to a representative with m' - j' >= 0 and -m' - j' >= 0.
        let flip = if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
        let (jj, mm, sign) = if j <= -m.abs() {
            (j, m, 1.0)
        } else if j >= m.abs() {
            // d_{j,m} = (-1)^{j-m} d_{-j,-m}
            (-j, -m, flip)
        } else if m >= j.abs() {
            // d_{j,m} = d_{-m,-j}
            (-m, -j, 1.0)
        } else {
            // m <= -|j|: d_{j,m} = (-1)^{j-m} d_{m,j}
            (m, j, flip)
        };
        let alpha = mm - jj;
        let beta = -mm - jj;
        let nbar = l + jj;
        assert!(alpha >= 0 && beta >= 0 && nbar >= 0);
        let binom = |n: i64, k: i64| -> i128 {
            if k < 0 || k > n {
                return 0;
            }
            let mut num: i128 = 1;
            let mut den: i128 = 1;
            for t in 0..k.min(n - k) {
                num *= (n - t) as i128;
                den *= (t + 1) as i128;
            }
            num / den
        };
        let mut sum: i128 = 0;
        for t in 0..=nbar {
            let term = binom(nbar + alpha, nbar - t) * binom(nbar + beta, t);
            sum += if t % 2 == 0 { term } else { -term };
        }
        let jacobi0 = sum as f64 * 0.5f64.powi(nbar as i32);
        let fact = |n: i64| -> f64 { (1..=n).map(|v| v as f64).product::<f64>().max(1.0) };
        let scale = 2.0f64.powi(jj as i32)
            * (fact(l + jj) * fact(l - jj) / (fact(l + mm) * fact(l - mm))).sqrt();
        sign * scale * jacobi0
    }

    #[test]
    fn degree_one_closed_form() {
        let t = WignerTable::new(1).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((t.d(1, 1, 1) - 0.5).abs() < 1e-15);
        assert!((t.d(1, 1, 0) + s).abs() < 1e-15);
        assert!((t.d(1, 1, -1) - 0.5).abs() < 1e-15);
        assert!((t.d(1, 0, 1) - s).abs() < 1e-15);
        assert!(t.d(1, 0, 0).abs() < 1e-15);
        assert!((t.d(1, 0, -1) + s).abs() < 1e-15);
        assert!((t.d(1, -1, 1) - 0.5).abs() < 1e-15);
        assert!((t.d(1, -1, 0) - s).abs() < 1e-15);
        assert!((t.d(1, -1, -1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_exact_sum_through_degree_twenty() {
        let t = WignerTable::new(20).unwrap();
        for l in 0..=20i64 {
            for j in -l..=l {
                for m in -l..=l {
                    let want = d_reference(l, j, m);
                    let got = t.d(l as usize, j, m);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "l={l} j={j} m={m}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn frozen_high_degree_values() {
        // Values frozen from a 50-digit reference implementation.
        let t = WignerTable::new(200).unwrap();
        let cases: [(usize, i64, i64, f64); 8] = [
            (5, 2, -3, -0.1530931089239486311),
            (10, 7, 4, 0.0455543116784789099),
            (20, 15, -11, 0.2579019501227651166),
            (60, 33, -20, 0.0820342053178912868),
            (120, 77, 50, 0.0893321283754362035),
            (200, 113, -95, -0.0684154724750367968),
            (200, 0, 0, 0.0563484790092564223),
            (200, 200, 13, -0.1309662519898753743),
        ];
        for (l, j, m, want) in cases {
            let got = t.d(l, j, m);
            assert!(
                (got - want).abs() < 1e-11,
                "l={l} j={j} m={m}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn symmetries_and_row_norms() {
        let t = WignerTable::new(12).unwrap();
        let l = 12usize;
        for j in -12i64..=12 {
            let mut norm = 0.0;
            for m in -12i64..=12 {
                let v = t.d(l, j, m);
                norm += v * v;
                let sign = if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
                assert!((v - sign * t.d(l, m, j)).abs() < 1e-13);
                assert!((v - t.d(l, -m, -j)).abs() < 1e-13);
            }
            assert!((norm - 1.0).abs() < 1e-12, "row {j}: {norm}");
        }
    }

    #[test]
    fn rotation_coefficients_unitary_rows() {
        let t = WignerTable::new(8).unwrap();
        for l in [1usize, 4, 8] {
            let f = rotation_coefficients(&t, l, 0.9871);
            let dim = 2 * l + 1;
            for row in 0..dim {
                let mut norm = 0.0;
                for col in 0..dim {
                    norm += f[row * dim + col].norm_sqr();
                }
                assert!((norm - 1.0).abs() < 1e-12, "l={l} row={row}");
            }
        }
    }

    #[test]
    fn expansion_reproduces_rotated_harmonics() {
        // Y_{l,j}(T^{-1} z) = sum_{jt} F_{jt,j} e^{i (j - jt) phi} Y_{l,jt}(z)
        // for the pole rotation T of the outer node (theta, phi).
        let t = WignerTable::new(6).unwrap();
        let nodes = [(0.8, 0.65), (1.7, 2.9), (2.4, 5.1)];
        let zpts: [(f64, f64); 3] = [(0.5, 1.2), (1.3, 4.0), (2.1, 0.2)];
        for &(theta, phi) in &nodes {
            let rot = node_rotation(theta, phi);
            for l in 1..=6usize {
                let f = rotation_coefficients(&t, l, theta);
                let dim = 2 * l + 1;
                let li = l as i64;
                for &(tz, pz) in &zpts {
                    let z = Vector3::new(tz.sin() * pz.cos(), tz.sin() * pz.sin(), tz.cos());
                    let y = rot.t_inv * z;
                    let (lam, xi) = crate::geometry::angles_of(&y).unwrap();
                    for j in -li..=li {
                        let direct = sph_harmonic(l, j, lam, xi);
                        let mut acc = Complex64::default();
                        for jt in -li..=li {
                            let fc = f[((jt + li) as usize) * dim + (j + li) as usize];
                            let ph =
                                Complex64::from_polar(1.0, (j - jt) as f64 * phi);
                            acc += fc * ph * sph_harmonic(l, jt, tz, pz);
                        }
                        assert!(
                            (acc - direct).norm() < 1e-10,
                            "l={l} j={j} node=({theta},{phi}): {acc} vs {direct}"
                        );
                    }
                }
            }
        }
    }
}
