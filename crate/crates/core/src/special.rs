//! Hermite functions, Mehler kernels and lattice comb sums.

use ndarray::Array2;
use std::f64::consts::PI;

const RESCALE: f64 = 1e150;

/// Hermite functions `h_0(x) .. h_{n-1}(x)` by the three-term recurrence.
///
/// The recurrence runs on `h_n e^{x^2/2}` with an explicit log-scale so that
/// large `x` (where `h_0` underflows) still gives correct high-order values.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let mut log_scale = -x * x / 2.0;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out[0] = cur * log_scale.exp();
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[k] = if log_scale < -745.0 { 0.0 } else { cur * log_scale.exp() };
    }
    out
}

/// Table `h[n, i] = h_n(xs[i])`.
pub fn hermite_table(n: usize, xs: &[f64]) -> Array2<f64> {
    let mut t = Array2::zeros((n, xs.len()));
    for (i, &x) in xs.iter().enumerate() {
        for (k, v) in hermite_functions(n, x).into_iter().enumerate() {
            t[[k, i]] = v;
        }
    }
    t
}

/// Mehler kernel `sum_n e^{-t n} h_n(x) h_n(y)`.
pub fn mehler(t: f64, x: f64, y: f64) -> f64 {
    let e = (-t).exp();
    let d = 1.0 - e * e;
    (PI * d).sqrt().recip() * (-((1.0 + e * e) * (x * x + y * y) - 4.0 * e * x * y) / (2.0 * d)).exp()
}

/// Comb-site truncation tolerance.
pub const COMB_EPS: f64 = 1e-14;

/// Lattice sites `k*period + offset` kept for damping `beta` when only photon
/// numbers below `nmax` are needed.
pub fn comb_sites(period: f64, offset: f64, beta: f64, nmax: usize) -> Vec<f64> {
    let envelope = if beta > 0.0 { (2.0 * (1.0 / COMB_EPS).ln() / beta).sqrt() } else { f64::INFINITY };
    // h_n(s) is negligible for |s| beyond the classical turning point plus a margin
    let support = (2.0 * nmax as f64 + 1.0).sqrt() + 12.0;
    let radius = envelope.min(support);
    let kmax = ((radius + offset.abs()) / period).ceil() as i64 + 1;
    (-kmax..=kmax)
        .map(|k| k as f64 * period + offset)
        .filter(|s| s.abs() <= radius)
        .collect()
}

/// `sum_s h_n(s)` over a site set, for `n < nmax`.
pub fn comb_sum(sites: &[f64], nmax: usize) -> Vec<f64> {
    let mut acc = vec![0.0; nmax];
    for &s in sites {
        for (a, h) in acc.iter_mut().zip(hermite_functions(nmax, s)) {
            *a += h;
        }
    }
    acc
}

/// `sum_{x,y} mehler(t, x, y)` over all pairs of sites.
pub fn mehler_comb(t: f64, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().map(|&x| ys.iter().map(|&y| mehler(t, x, y)).sum::<f64>()).sum()
}

/// `sqrt((2k)!) / k!` without overflow.
pub fn even_ratio(k: usize) -> f64 {
    let mut l = 0.0f64;
    for j in 1..=k {
        let jf = j as f64;
        // (2j)(2j-1) / j^2 under the square root on (2k)!, 1/j^2 from k!^2
        l += 0.5 * ((2.0 * jf) * (2.0 * jf - 1.0)).ln() - jf.ln();
    }
    l.exp()
}
