//! Legendre polynomials and fully-normalized associated Legendre tables.

/// P_n(x), three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_deriv(n, x).0
}

/// (P_n(x), P_n'(x)).
pub fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm1 = 1.0f64;
    let mut p = x;
    for l in 1..n {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * p - lf * pm1) / (lf + 1.0);
        pm1 = p;
        p = next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1); use the recurrence form that
    // stays finite at the endpoints.
    let dp = if (x * x - 1.0).abs() < 1e-14 {
        let nf = n as f64;
        // P_n'(±1) = ±^{n+1} n(n+1)/2
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        n as f64 * (x * p - pm1) / (x * x - 1.0)
    };
    (p, dp)
}

/// sum_{l=0}^{n} P_l(x).
pub fn legendre_partial_sum(n: usize, x: f64) -> f64 {
    let mut acc = 1.0f64;
    if n == 0 {
        return acc;
    }
    let mut pm1 = 1.0f64;
    let mut p = x;
    acc += p;
    for l in 1..n {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * p - lf * pm1) / (lf + 1.0);
        pm1 = p;
        p = next;
        acc += p;
    }
    acc
}

/// Associated Legendre P_l^m(x) without the (-1)^m phase, so P_1^1(0) = 1.
/// Intended for low degrees (cross-checks, closed-form comparisons); the
/// normalized table below is the production path.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l, "order exceeds degree");
    let s2 = (1.0 - x * x).max(0.0);
    // P_m^m = (2m-1)!! (1-x^2)^{m/2}
    let mut pmm = 1.0f64;
    let s = s2.sqrt();
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = pmm;
    let mut p = (2 * m + 1) as f64 * x * pmm;
    for ll in (m + 1)..l {
        let lf = ll as f64;
        let mf = m as f64;
        let next = ((2.0 * lf + 1.0) * x * p - (lf + mf) * pm1) / (lf - mf + 1.0);
        pm1 = p;
        p = next;
    }
    p
}

/// Fully-normalized associated Legendre values at a fixed polar angle:
/// ntheta(l,m) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos theta), m >= 0,
/// together with first and second theta-derivatives. All three tables are
/// valid for l <= lmax; the builder extends two extra degrees internally so
/// the derivative identities close.
pub struct NormalizedLegendre {
    lmax: usize,
    lcap: usize,
    val: Vec<f64>,
    dval: Vec<f64>,
    d2val: Vec<f64>,
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

impl NormalizedLegendre {
    pub fn new(lmax: usize, theta: f64) -> Self {
        let lcap = lmax + 2;
        let nslots = tri(lcap, lcap) + 1;
        let mut val = vec![0.0; nslots];
        let mut dval = vec![0.0; tri(lcap - 1, lcap - 1) + 1];
        let mut d2val = vec![0.0; tri(lmax, lmax) + 1];
        let (st, ct) = theta.sin_cos();

        // Values. Diagonal: N_m^m = sqrt((2m+1)/(2m)) sin(theta) N_{m-1}^{m-1},
        // seeded by N_0^0 = 1/sqrt(4 pi). Off-diagonal by the (l,m) recurrence.
        val[tri(0, 0)] = 0.5 / std::f64::consts::PI.sqrt();
        for m in 1..=lcap {
            let mf = m as f64;
            val[tri(m, m)] =
                ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st * val[tri(m - 1, m - 1)];
        }
        for m in 0..lcap {
            let mf = m as f64;
            val[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * ct * val[tri(m, m)];
            for l in (m + 1)..lcap {
                let lf = l as f64;
                let a = ((4.0 * (lf + 1.0) * (lf + 1.0) - 1.0)
                    / ((lf + 1.0) * (lf + 1.0) - mf * mf))
                    .sqrt();
                let b = ((lf * lf - mf * mf) / (4.0 * lf * lf - 1.0)).sqrt();
                val[tri(l + 1, m)] = a * (ct * val[tri(l, m)] - b * val[tri(l - 1, m)]);
            }
        }

        // First derivative:
        // sin(theta) d/dtheta N_{l,m} = -(l+1) cos(theta) N_{l,m} + K_{l,m} N_{l+1,m},
        // K_{l,m} = sqrt((2l+1)(l+1+m)(l+1-m)/(2l+3)).
        // At the poles every m != 1 derivative vanishes; the m = 1 limit is
        // obtained from the same identity applied twice (l'Hopital), which
        // reduces to d/dtheta N_{l,1}(0) = -(l+1) N'_{...}; we instead use the
        // stable closed form below.
        let pole = st.abs() < 1e-14;
        for l in 0..lcap {
            for m in 0..=l {
                let lf = l as f64;
                let mf = m as f64;
                let k = ((2.0 * lf + 1.0) * (lf + 1.0 + mf) * (lf + 1.0 - mf)
                    / (2.0 * lf + 3.0))
                    .sqrt();
                let d = if pole {
                    if m == 1 {
                        // Limit of (K N_{l+1,1} - (l+1) c N_{l,1})/s as s -> 0.
                        // Both N's vanish like s; use N_{l,1} ~ s * g_l with
                        // g_l = lim N_{l,1}/s = dval of scalar table; compute
                        // from the m=1 diagonal/recurrence limits directly.
                        let g_l = Self::m1_over_sin(l, ct);
                        let g_lp1 = Self::m1_over_sin(l + 1, ct);
                        k * g_lp1 - (lf + 1.0) * ct * g_l
                    } else {
                        0.0
                    }
                } else {
                    (k * val[tri(l + 1, m)] - (lf + 1.0) * ct * val[tri(l, m)]) / st
                };
                if l <= lcap - 1 {
                    dval[tri(l, m)] = d;
                }
            }
        }

        // Second derivative, differentiating the first-derivative identity:
        // d2N_{l,m} = (l+1) N_{l,m} + [K_{l,m} dN_{l+1,m} - (l+2) cos(theta) dN_{l,m}]/sin(theta).
        for l in 0..=lmax {
            for m in 0..=l {
                let lf = l as f64;
                let mf = m as f64;
                let k = ((2.0 * lf + 1.0) * (lf + 1.0 + mf) * (lf + 1.0 - mf)
                    / (2.0 * lf + 3.0))
                    .sqrt();
                let d2 = if pole {
                    // Gauss angles are interior, so pole second derivatives are
                    // never consumed; only the m=0 limit is supplied.
                    match m {
                        0 => -0.5 * lf * (lf + 1.0) * val[tri(l, 0)],
                        _ => 0.0,
                    }
                } else {
                    (lf + 1.0) * val[tri(l, m)]
                        + (k * dval[tri(l + 1, m)] - (lf + 2.0) * ct * dval[tri(l, m)]) / st
                };
                d2val[tri(l, m)] = d2;
            }
        }

        Self {
            lmax,
            lcap,
            val,
            dval,
            d2val,
        }
    }

    /// lim_{theta->pole} N_{l,1}(theta)/sin(theta), with ct = cos at the pole
    /// (+1 or -1). From N_{l,1} ~ sqrt((2l+1)/(4 pi) l (l+1)) / ... the limit
    /// equals sqrt((2l+1) l (l+1) / (16 pi)) ct^{l+1} * 2/..; derived from the
    /// m=1 recurrences: g_l = c_l ct g_{l-1} chain seeded by g_1.
    fn m1_over_sin(l: usize, ct: f64) -> f64 {
        if l == 0 {
            return 0.0;
        }
        // N_{l,1}(theta) = sqrt((2l+1)/(4 pi) (l-1)!/(l+1)!) P_l^1(cos theta)
        // and P_l^1 ~ sin(theta) * P_l'(cos_pole) with P_l'(±1) = (±1)^{l+1} l(l+1)/2.
        let lf = l as f64;
        let norm = ((2.0 * lf + 1.0) / (4.0 * std::f64::consts::PI)
            / (lf * (lf + 1.0)))
            .sqrt();
        let sign = if ct > 0.0 {
            1.0
        } else {
            (-1.0f64).powi(l as i32 + 1)
        };
        norm * sign * lf * (lf + 1.0) / 2.0
    }

    #[inline]
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// ntheta(l,m); valid for l <= lmax + 2.
    #[inline]
    pub fn value(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lcap);
        self.val[tri(l, m)]
    }

    /// d/dtheta ntheta(l,m); valid for l <= lmax + 1.
    #[inline]
    pub fn dtheta(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lcap - 1);
        self.dval[tri(l, m)]
    }

    /// d^2/dtheta^2 ntheta(l,m); valid for l <= lmax.
    #[inline]
    pub fn d2theta(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lmax);
        self.d2val[tri(l, m)]
    }
}
