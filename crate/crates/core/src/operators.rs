//! Gate constructors in the truncated Fock basis and their Heisenberg actions.
//!
//! Gates that do not conserve photon number are built at a padded working
//! cutoff and truncated; the beamsplitter is built exactly from its
//! photon-number sectors.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::{interior_indices, operator_distance_up_to_phase, Cutoff, FockOperator};
use crate::linalg::{eigh, spectral, Memo};

/// Working cutoff used when building a non-number-conserving gate for cutoff `n`.
pub fn padded(n: usize) -> usize {
    2 * n + 20
}

pub(crate) struct Eigen {
    pub(crate) w: Array1<f64>,
    pub(crate) u: Array2<f64>,
}

static Q_BASIS: Memo<usize, Eigen> = Memo::new();
static SQZ_BASIS: Memo<usize, Eigen> = Memo::new();
static BS_SECTORS: Memo<usize, Array2<f64>> = Memo::new();

/// Eigenbasis of the truncated position quadrature at dimension `m` (real).
pub(crate) fn q_basis(m: usize) -> Arc<Eigen> {
    Q_BASIS.get_or(m, || {
        let mut q = Array2::zeros((m, m));
        for k in 1..m {
            let v = (k as f64 / 2.0).sqrt();
            q[[k - 1, k]] = v;
            q[[k, k - 1]] = v;
        }
        let (w, u) = eigh(&q);
        Eigen { w, u }
    })
}

/// Eigenbasis of `(a^2 + a^dag^2)/2` at dimension `m` (real).
fn sqz_basis(m: usize) -> Arc<Eigen> {
    SQZ_BASIS.get_or(m, || {
        let mut x = Array2::zeros((m, m));
        for k in 2..m {
            let v = ((k * (k - 1)) as f64).sqrt() / 2.0;
            x[[k - 2, k]] = v;
            x[[k, k - 2]] = v;
        }
        let (w, u) = eigh(&x);
        Eigen { w, u }
    })
}

pub(crate) fn i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `f(q)` at working dimension `m`.
pub(crate) fn fn_of_q(m: usize, f: impl Fn(f64) -> C64) -> Array2<C64> {
    let e = q_basis(m);
    spectral(&e.u, &e.w, f)
}

/// `f(p) = R(pi/2) f(q) R(pi/2)^dag` at working dimension `m`.
pub(crate) fn fn_of_p(m: usize, f: impl Fn(f64) -> C64) -> Array2<C64> {
    let mut a = fn_of_q(m, f);
    conj_rotation(&mut a, FRAC_PI_2);
    a
}

/// In place `A -> R(theta) A R(theta)^dag`.
pub(crate) fn conj_rotation(a: &mut Array2<C64>, theta: f64) {
    for ((j, k), z) in a.indexed_iter_mut() {
        *z *= C64::from_polar(1.0, theta * (j as f64 - k as f64));
    }
}

fn truncate(a: Array2<C64>, n: usize) -> Array2<C64> {
    a.slice(s![..n, ..n]).to_owned()
}

/// Diagonal matrix `e^{i theta n}` of size `n`.
pub(crate) fn rotation_matrix(theta: f64, n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(j, k)| if j == k { C64::from_polar(1.0, theta * j as f64) } else { C64::new(0.0, 0.0) })
}

/// `R(theta) = e^{i theta n}`.
pub fn phase_delay(theta: f64, cutoff: Cutoff) -> FockOperator {
    FockOperator::single(rotation_matrix(theta, cutoff.get()))
}

/// `N(beta) = e^{-beta n}`.
pub fn damping(beta: f64, cutoff: Cutoff) -> Result<FockOperator> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("damping needs beta >= 0, got {beta}")));
    }
    let n = cutoff.get();
    Ok(FockOperator::single(Array2::from_shape_fn((n, n), |(j, k)| {
        if j == k { C64::new((-beta * j as f64).exp(), 0.0) } else { C64::new(0.0, 0.0) }
    })))
}

/// `D(alpha)` built at working dimension `m`, truncated to `n`.
pub(crate) fn displacement_matrix(alpha: C64, n: usize, m: usize) -> Array2<C64> {
    let r = alpha.norm();
    if r == 0.0 {
        return Array2::eye(n).mapv(|x: f64| C64::new(x, 0.0));
    }
    // D(alpha) = R(theta)^dag exp(i sqrt2 |alpha| q) R(theta), cos = Im/|a|, sin = Re/|a|
    let theta = alpha.re.atan2(alpha.im);
    let mut d = truncate(fn_of_q(m, |x| C64::from_polar(1.0, std::f64::consts::SQRT_2 * r * x)), n);
    conj_rotation(&mut d, -theta);
    d
}

/// `D(alpha) = exp(alpha a^dag - alpha* a) = exp(i sqrt2 (Im(alpha) q - Re(alpha) p))`.
pub fn displacement(alpha: C64, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let m = padded(n) + (4.0 * alpha.norm_sqr()).ceil() as usize;
    FockOperator::single(displacement_matrix(alpha, n, m))
}

/// Nonzero real squeezing factor; negative values include a parity flip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParam(f64);

impl SqueezeParam {
    pub fn new(zeta: f64) -> Result<Self> {
        if zeta == 0.0 || !zeta.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing factor must be finite and nonzero, got {zeta}")));
        }
        Ok(Self(zeta))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `S(zeta) = R(Im ln zeta) exp(-i ln|zeta| (qp + pq)/2)` built at dimension `m`, truncated to `n`.
pub(crate) fn squeeze_matrix(zeta: f64, n: usize, m: usize) -> Array2<C64> {
    let r = zeta.abs().ln();
    let e = sqz_basis(m);
    // (qp + pq)/2 = R(pi/4) [(a^2 + a^dag^2)/2] R(pi/4)^dag
    let mut u = spectral(&e.u, &e.w, |w| C64::from_polar(1.0, -r * w));
    conj_rotation(&mut u, FRAC_PI_4);
    let mut out = truncate(u, n);
    if zeta < 0.0 {
        for (j, mut row) in out.rows_mut().into_iter().enumerate() {
            if j % 2 == 1 {
                row.mapv_inplace(|z| -z);
            }
        }
    }
    out
}

/// Squeezer with `S^dag q S = zeta q`, `S^dag p S = p / zeta`.
pub fn squeeze(zeta: SqueezeParam, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let extra = (8.0 * zeta.get().abs().ln().abs() * n as f64).ceil() as usize;
    FockOperator::single(squeeze_matrix(zeta.get(), n, padded(n) + extra.min(4 * n)))
}

/// `P(sigma) = exp(i sigma q^2 / 2)`.
pub fn shear_q(sigma: f64, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    FockOperator::single(truncate(fn_of_q(padded(n), |x| C64::from_polar(1.0, sigma * x * x / 2.0)), n))
}

/// `P_p(sigma) = exp(-i sigma p^2 / 2)`.
pub fn shear_p(sigma: f64, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    FockOperator::single(truncate(fn_of_p(padded(n), |x| C64::from_polar(1.0, -sigma * x * x / 2.0)), n))
}

/// `V = R(theta_+ - pi/2) S(tan theta_-) R(theta_+)`, `theta_pm = (theta_a pm theta_b)/2`.
pub(crate) fn v_gate_matrix(theta_a: f64, theta_b: f64, n: usize, m: usize) -> Result<Array2<C64>> {
    check_angles(theta_a, theta_b)?;
    let tp = (theta_a + theta_b) / 2.0;
    let tm = (theta_a - theta_b) / 2.0;
    let mut v = squeeze_matrix(tm.tan(), n, m);
    for ((j, k), z) in v.indexed_iter_mut() {
        *z *= C64::from_polar(1.0, (tp - FRAC_PI_2) * j as f64 + tp * k as f64);
    }
    Ok(v)
}

pub(crate) fn check_angles(theta_a: f64, theta_b: f64) -> Result<()> {
    let s = (theta_a - theta_b).sin();
    if s.abs() < 1e-9 {
        return Err(Error::DegenerateAngles(s.abs()));
    }
    Ok(())
}

pub fn v_gate(theta_a: f64, theta_b: f64, cutoff: Cutoff) -> Result<FockOperator> {
    let n = cutoff.get();
    let tm = (theta_a - theta_b) / 2.0;
    let extra = (8.0 * tm.tan().abs().ln().abs() * n as f64).ceil() as usize;
    Ok(FockOperator::single(v_gate_matrix(theta_a, theta_b, n, padded(n) + extra.min(4 * n))?))
}

/// Real sector block of the beamsplitter on total photon number `l`:
/// `E[j, k] = <j, l-j| B |k, l-k>`, index = photons in mode 1.
pub(crate) fn bs_sector(l: usize) -> Arc<Array2<f64>> {
    BS_SECTORS.get_or(l, || {
        // generator in the sector is -(pi/4) G with G[k+1,k] = c_k, G[k,k+1] = -c_k;
        // conjugating by diag(i^k) makes it i(pi/4) T with T real symmetric
        let d = l + 1;
        let mut t = Array2::zeros((d, d));
        for k in 0..l {
            let c = (((k + 1) * (l - k)) as f64).sqrt();
            t[[k + 1, k]] = c;
            t[[k, k + 1]] = c;
        }
        let (w, u) = eigh(&t);
        let ph: Vec<C64> = w.iter().map(|&x| C64::from_polar(1.0, FRAC_PI_4 * x)).collect();
        Array2::from_shape_fn((d, d), |(j, k)| {
            let mut acc = C64::new(0.0, 0.0);
            for (lidx, p) in ph.iter().enumerate() {
                acc += p * (u[[j, lidx]] * u[[k, lidx]]);
            }
            (acc * i_pow(j) * i_pow(4 - k % 4)).re
        })
    })
}

/// Applies `B` (or `B^dag`) to a two-mode amplitude matrix, returning the
/// amplitudes with photon numbers below `out` in each mode. Exact.
pub(crate) fn bs_apply(psi: &Array2<C64>, out: (usize, usize), dagger: bool) -> Array2<C64> {
    let (n1, n2) = psi.dim();
    let (o1, o2) = out;
    let mut res = Array2::zeros((o1, o2));
    let lmax = (n1 + n2 - 1).min(o1 + o2 - 1);
    let mut v = Vec::new();
    for l in 0..lmax {
        let e = bs_sector(l);
        let k_in = l.saturating_sub(n2 - 1)..=l.min(n1 - 1);
        let k_out = l.saturating_sub(o2 - 1)..=l.min(o1 - 1);
        if k_in.is_empty() || k_out.is_empty() {
            continue;
        }
        v.clear();
        v.extend(k_in.clone().map(|k| (k, psi[[k, l - k]])));
        for j in k_out {
            let mut acc = C64::new(0.0, 0.0);
            for &(k, a) in &v {
                let m = if dagger { e[[k, j]] } else { e[[j, k]] };
                acc += a * m;
            }
            res[[j, l - j]] = acc;
        }
    }
    res
}

/// `B = exp(-i (pi/4)(q x p - p x q))` on two modes of cutoff `N`.
pub fn beamsplitter(cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let mut b = Array2::zeros((n * n, n * n));
    for l in 0..(2 * n - 1) {
        let e = bs_sector(l);
        let ks: Vec<usize> = (l.saturating_sub(n - 1)..=l.min(n - 1)).collect();
        for &j in &ks {
            for &k in &ks {
                b[[j * n + (l - j), k * n + (l - k)]] = C64::new(e[[j, k]], 0.0);
            }
        }
    }
    FockOperator::new(b, vec![n, n]).expect("square by construction")
}

/// Quadrature on which a two-mode coupling acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quad {
    Q,
    P,
}

fn real_dot(u: &Array2<f64>, c: &Array2<C64>) -> Array2<C64> {
    let re = u.dot(&c.mapv(|z| z.re));
    let im = u.dot(&c.mapv(|z| z.im));
    ndarray::Zip::from(&re).and(&im).map_collect(|&a, &b| C64::new(a, b))
}

fn dot_real(c: &Array2<C64>, u: &Array2<f64>) -> Array2<C64> {
    let re = c.mapv(|z| z.re).dot(u);
    let im = c.mapv(|z| z.im).dot(u);
    ndarray::Zip::from(&re).and(&im).map_collect(|&a, &b| C64::new(a, b))
}

/// `exp(i g A x B)` applied to a two-mode amplitude matrix in the quadrature
/// eigenbases at working dimension `m`; the input is zero-padded to `m x m`
/// and the full `m x m` result returned.
pub(crate) fn apply_coupling(psi: &Array2<C64>, g: f64, a: Quad, b: Quad, m: usize) -> Array2<C64> {
    let e = q_basis(m);
    let mut x = Array2::zeros((m, m));
    let (r, c) = psi.dim();
    x.slice_mut(s![..r.min(m), ..c.min(m)]).assign(&psi.slice(s![..r.min(m), ..c.min(m)]));
    // p eigenvectors are diag(i^n) times q eigenvectors
    if a == Quad::P {
        for (j, mut row) in x.rows_mut().into_iter().enumerate() {
            let ph = i_pow(4 - j % 4);
            row.mapv_inplace(|z| z * ph);
        }
    }
    if b == Quad::P {
        for (k, mut col) in x.columns_mut().into_iter().enumerate() {
            let ph = i_pow(4 - k % 4);
            col.mapv_inplace(|z| z * ph);
        }
    }
    let mut coef = dot_real(&real_dot(&e.u.t().to_owned(), &x), &e.u);
    for ((i, j), z) in coef.indexed_iter_mut() {
        *z *= C64::from_polar(1.0, g * e.w[i] * e.w[j]);
    }
    let mut y = dot_real(&real_dot(&e.u, &coef), &e.u.t().to_owned());
    if a == Quad::P {
        for (j, mut row) in y.rows_mut().into_iter().enumerate() {
            let ph = i_pow(j);
            row.mapv_inplace(|z| z * ph);
        }
    }
    if b == Quad::P {
        for (k, mut col) in y.columns_mut().into_iter().enumerate() {
            let ph = i_pow(k);
            col.mapv_inplace(|z| z * ph);
        }
    }
    y
}

/// Dense two-mode coupling operator `exp(i g A x B)` at cutoff `n`, one
/// column per input basis state.
fn coupling_operator(g: f64, a: Quad, b: Quad, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let m = padded(n);
    let mut out = Array2::zeros((n * n, n * n));
    for j in 0..n {
        for k in 0..n {
            let mut basis = Array2::zeros((n, n));
            basis[[j, k]] = C64::new(1.0, 0.0);
            let y = apply_coupling(&basis, g, a, b, m);
            for p in 0..n {
                for q in 0..n {
                    out[[p * n + q, j * n + k]] = y[[p, q]];
                }
            }
        }
    }
    FockOperator::new(out, vec![n, n]).expect("square by construction")
}

/// `C^X(g) = exp(-i g q x p)`.
pub fn controlled_x(g: f64, cutoff: Cutoff) -> FockOperator {
    coupling_operator(-g, Quad::Q, Quad::P, cutoff)
}

/// `C^Z(g) = exp(i g q x q)`.
pub fn controlled_z(g: f64, cutoff: Cutoff) -> FockOperator {
    coupling_operator(g, Quad::Q, Quad::Q, cutoff)
}

/// Appendix-style unitary decomposition of the beamsplitter.
#[derive(Clone, Debug)]
pub struct BsDecomposition {
    /// Decomposition evaluated on the interior-triangle columns (others zero).
    pub operator: FockOperator,
    pub interior: usize,
    /// Up-to-phase distance from `beamsplitter` on the interior triangle.
    pub residual: f64,
}

pub fn bs_decomposition(cutoff: Cutoff) -> BsDecomposition {
    bs_decomposition_with_interior(cutoff, cutoff.interior())
}

pub fn bs_decomposition_with_interior(cutoff: Cutoff, interior: usize) -> BsDecomposition {
    let n = cutoff.get();
    let m = padded(n);
    let dims = vec![n, n];
    let cols = interior_indices(&dims, interior);
    let mut out = Array2::zeros((n * n, n * n));
    // squeezers are shared across columns
    let sq = std::f64::consts::SQRT_2;
    let s2 = squeeze_matrix(sq, m, m);
    let s2d = s2.t().mapv(|z| z.conj());
    let s2t = s2.t().to_owned();
    for &col in &cols {
        let (j, k) = (col / n, col % n);
        let mut basis = Array2::zeros((n, n));
        basis[[j, k]] = C64::new(1.0, 0.0);
        let x = apply_coupling(&basis, 1.0, Quad::P, Quad::Q, m);
        let x = s2d.dot(&x).dot(&s2t);
        let x = apply_coupling(&x, -1.0, Quad::Q, Quad::P, m);
        for p in 0..n {
            for q in 0..n {
                out[[p * n + q, col]] = x[[p, q]];
            }
        }
    }
    let operator = FockOperator::new(out, dims).expect("square by construction");
    let residual = operator_distance_up_to_phase(&operator, &beamsplitter(cutoff), interior)
        .expect("matching dims");
    BsDecomposition { operator, interior, residual }
}

/// Heisenberg action `U^dag x U = S x` on `x = (q_1..q_k, p_1..p_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix(Array2<f64>);

impl SymplecticMatrix {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || r % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("symplectic matrix must be 2k x 2k, got {r}x{c}")));
        }
        let s = Self(m);
        if !s.is_symplectic(1e-10) {
            return Err(Error::InvalidParameter("matrix does not preserve the symplectic form".into()));
        }
        Ok(s)
    }

    fn unchecked(m: Array2<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    /// `[[0, I], [-I, 0]]`.
    pub fn omega(k: usize) -> Array2<f64> {
        let mut o = Array2::zeros((2 * k, 2 * k));
        for i in 0..k {
            o[[i, k + i]] = 1.0;
            o[[k + i, i]] = -1.0;
        }
        o
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        let o = Self::omega(self.modes());
        let d = self.0.t().dot(&o).dot(&self.0) - &o;
        d.iter().all(|x| x.abs() <= tol)
    }

    /// Action of the product `U_self U_rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0.dot(&rhs.0))
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::unchecked(ndarray::arr2(&[[c, -s], [s, c]]))
    }

    pub fn squeeze(zeta: SqueezeParam) -> Self {
        let z = zeta.get();
        Self::unchecked(ndarray::arr2(&[[z, 0.0], [0.0, 1.0 / z]]))
    }

    pub fn shear_q(sigma: f64) -> Self {
        Self::unchecked(ndarray::arr2(&[[1.0, 0.0], [sigma, 1.0]]))
    }

    pub fn shear_p(sigma: f64) -> Self {
        Self::unchecked(ndarray::arr2(&[[1.0, sigma], [0.0, 1.0]]))
    }

    /// Beamsplitter on `(q1, q2, p1, p2)`.
    pub fn beamsplitter() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::unchecked(ndarray::arr2(&[
            [h, -h, 0.0, 0.0],
            [h, h, 0.0, 0.0],
            [0.0, 0.0, h, -h],
            [0.0, 0.0, h, h],
        ]))
    }

    pub fn v_gate(theta_a: f64, theta_b: f64) -> Result<Self> {
        check_angles(theta_a, theta_b)?;
        let tp = (theta_a + theta_b) / 2.0;
        let tm = (theta_a - theta_b) / 2.0;
        let sq = SqueezeParam::new(tm.tan())?;
        Ok(Self::rotation(tp - FRAC_PI_2).compose(&Self::squeeze(sq)).compose(&Self::rotation(tp)))
    }

    /// Lower, diagonal and upper factors whose product is `rotation(theta)`.
    pub fn ldu(theta: f64) -> [Array2<f64>; 3] {
        let (t, c) = (theta.tan(), theta.cos());
        [
            ndarray::arr2(&[[1.0, 0.0], [t, 1.0]]),
            ndarray::arr2(&[[c, 0.0], [0.0, 1.0 / c]]),
            ndarray::arr2(&[[1.0, -t], [0.0, 1.0]]),
        ]
    }

    /// Upper, diagonal and lower factors whose product is `rotation(theta)`.
    pub fn udl(theta: f64) -> [Array2<f64>; 3] {
        let (t, c) = (theta.tan(), theta.cos());
        [
            ndarray::arr2(&[[1.0, -t], [0.0, 1.0]]),
            ndarray::arr2(&[[1.0 / c, 0.0], [0.0, c]]),
            ndarray::arr2(&[[1.0, 0.0], [t, 1.0]]),
        ]
    }

    /// Shear, squeeze and shear factors of the beamsplitter action on `(q1, q2, p1, p2)`.
    pub fn bs_factors() -> [Array2<f64>; 3] {
        let r = std::f64::consts::SQRT_2;
        let h = FRAC_1_SQRT_2;
        [
            ndarray::arr2(&[[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0], [0.0, 0.0, 0.0, 1.0]]),
            ndarray::arr2(&[[h, 0.0, 0.0, 0.0], [0.0, r, 0.0, 0.0], [0.0, 0.0, r, 0.0], [0.0, 0.0, 0.0, h]]),
            ndarray::arr2(&[[1.0, -1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 1.0, 1.0]]),
        ]
    }
}

/// Largest entrywise deviation of `U^dag x U` from the symplectic prediction,
/// over the interior block of a single-mode gate.
pub fn heisenberg_residual(u: &FockOperator, s: &SymplecticMatrix, interior: usize) -> Result<f64> {
    if u.dims().len() != 1 || s.modes() != 1 {
        return Err(Error::DimensionMismatch("single-mode gate expected".into()));
    }
    let n = u.dims()[0];
    let (q, p) = crate::fock_core::quadrature_matrices(n);
    let ud = u.dagger();
    let m = s.matrix();
    let mut worst: f64 = 0.0;
    for (row, x) in [&q, &p].iter().enumerate() {
        let lhs = ud.matrix().dot(*x).dot(u.matrix());
        let rhs = q.mapv(|z| z * m[[row, 0]]) + p.mapv(|z| z * m[[row, 1]]);
        for i in 0..interior {
            for j in 0..interior {
                worst = worst.max((lhs[[i, j]] - rhs[[i, j]]).norm());
            }
        }
    }
    Ok(worst)
}
