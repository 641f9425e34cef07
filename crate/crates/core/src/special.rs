//! Spherical Bessel functions of real argument.
//!
//! `y_l` is computed by upward recurrence (stable), `j_l` by downward
//! recurrence normalized against `j_0` (Miller's method), so the two halves of
//! `h_l = j_l + i y_l` come from independent recurrence directions.

use num_complex::Complex64;

/// j_l(z) for l = 0..=lmax, z > 0.
pub fn sph_bessel_j(lmax: usize, z: f64) -> Vec<f64> {
    assert!(z > 0.0, "argument must be positive");
    let j0 = z.sin() / z;
    if lmax == 0 {
        return vec![j0];
    }
    // Start the backward recurrence well above lmax and above |z| so the
    // minimal solution dominates by the time it reaches lmax.
    let start = lmax + 16 + (2.0 * z) as usize;
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut out = vec![0.0; lmax + 1];
    for l in (0..=start).rev() {
        // j_{l-1} = (2l+1)/z j_l - j_{l+1}
        let jm1 = (2 * l + 1) as f64 / z * j - jp1;
        if l <= lmax {
            out[l] = j;
        }
        jp1 = j;
        j = jm1;
        if j.abs() > 1e280 {
            let scale = 1e-280;
            j *= scale;
            jp1 *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    // j now holds the unnormalized j_{-1} candidate; normalize with j_0.
    let norm = j0 / out[0];
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

/// y_l(z) for l = 0..=lmax, z > 0.
pub fn sph_bessel_y(lmax: usize, z: f64) -> Vec<f64> {
    assert!(z > 0.0, "argument must be positive");
    let mut out = Vec::with_capacity(lmax + 1);
    let y0 = -z.cos() / z;
    out.push(y0);
    if lmax == 0 {
        return out;
    }
    let y1 = -z.cos() / (z * z) - z.sin() / z;
    out.push(y1);
    for l in 1..lmax {
        let next = (2 * l + 1) as f64 / z * out[l] - out[l - 1];
        out.push(next);
    }
    out
}

/// h_l^{(1)}(z) = j_l(z) + i y_l(z) for l = 0..=lmax.
pub fn sph_hankel1(lmax: usize, z: f64) -> Vec<Complex64> {
    let j = sph_bessel_j(lmax, z);
    let y = sph_bessel_y(lmax, z);
    j.iter()
        .zip(y.iter())
        .map(|(&jr, &yr)| Complex64::new(jr, yr))
        .collect()
}
