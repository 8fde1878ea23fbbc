//! Truncated Fock-space containers and the distance measures used throughout.

use ndarray::{Array1, Array2, ArrayView1, IxDyn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::frob;

/// Photon-number cutoff of one mode (dimension of the truncated space).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Cutoff(usize);

impl Cutoff {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCutoff(n));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Default interior used by distances: floor(2N/3).
    pub fn interior(self) -> usize {
        (2 * self.0) / 3
    }
}

impl TryFrom<usize> for Cutoff {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Cutoff::new(n)
    }
}

impl From<Cutoff> for usize {
    fn from(c: Cutoff) -> usize {
        c.0
    }
}

impl std::fmt::Display for Cutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether amplitudes describe a normalized state or a non-normalizable
/// density (ideal eigenstates, combs) sampled in the Fock basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Unit,
    Density,
}

/// Amplitudes over a product of truncated modes, row-major with mode 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    amps: Array1<C64>,
    dims: Vec<usize>,
    kind: NormKind,
}

impl FockState {
    pub fn new(amps: Array1<C64>, dims: Vec<usize>, kind: NormKind) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for mode dims {:?}",
                amps.len(),
                dims
            )));
        }
        Ok(Self { amps, dims, kind })
    }

    pub fn single(amps: Array1<C64>, kind: NormKind) -> Self {
        let n = amps.len();
        Self { amps, dims: vec![n], kind }
    }

    /// Rescales to unit norm and marks the state as `Unit`.
    pub fn normalized(amps: Array1<C64>, dims: Vec<usize>) -> Result<Self> {
        let mut s = Self::new(amps, dims, NormKind::Unit)?;
        s.normalize()?;
        Ok(s)
    }

    pub fn basis(n: usize, cutoff: Cutoff) -> Result<Self> {
        if n >= cutoff.get() {
            return Err(Error::InvalidParameter(format!("|{n}> outside cutoff {cutoff}")));
        }
        let mut amps = Array1::zeros(cutoff.get());
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self::single(amps, NormKind::Unit))
    }

    pub fn vacuum(cutoff: Cutoff) -> Self {
        Self::basis(0, cutoff).expect("cutoff >= 2")
    }

    /// Two-mode state from an amplitude matrix `m[n1, n2]`.
    pub fn from_two_mode(m: Array2<C64>, kind: NormKind) -> Self {
        let dims = vec![m.nrows(), m.ncols()];
        let amps = Array1::from_iter(m.iter().copied());
        Self { amps, dims, kind }
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        self.amps.mapv_inplace(|z| z / n);
        self.kind = NormKind::Unit;
        Ok(())
    }

    /// Amplitude matrix of a two-mode state.
    pub fn two_mode_matrix(&self) -> Result<Array2<C64>> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch(format!("expected two modes, got {:?}", self.dims)));
        }
        Ok(self
            .amps
            .clone()
            .into_shape_with_order((self.dims[0], self.dims[1]))
            .expect("length checked at construction"))
    }

    /// Keeps photon numbers below `n` in every mode.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if self.dims.iter().any(|&d| d < n) {
            return Err(Error::DimensionMismatch(format!("cannot restrict {:?} to {n}", self.dims)));
        }
        let new_dims = vec![n; self.dims.len()];
        let idx = box_indices(&self.dims, n);
        let amps = Array1::from_iter(idx.iter().map(|&i| self.amps[i]));
        Self::new(amps, new_dims, self.kind)
    }
}

/// Dense operator on a product of truncated modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    mat: Array2<C64>,
    dims: Vec<usize>,
}

impl FockOperator {
    pub fn new(mat: Array2<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || mat.nrows() != total || mat.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for mode dims {:?}",
                mat.nrows(),
                mat.ncols(),
                dims
            )));
        }
        Ok(Self { mat, dims })
    }

    /// Single-mode operator from a square matrix.
    pub fn single(mat: Array2<C64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrix must be square");
        let n = mat.nrows();
        Self { mat, dims: vec![n] }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self { mat: Array2::eye(n), dims }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dagger(&self) -> Self {
        Self { mat: self.mat.t().mapv(|z| z.conj()), dims: self.dims.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self { mat: self.mat.t().to_owned(), dims: self.dims.clone() }
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &FockOperator) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, rhs.dims)));
        }
        Ok(Self { mat: self.mat.dot(&rhs.mat), dims: self.dims.clone() })
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if self.dims != state.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, state.dims)));
        }
        FockState::new(self.mat.dot(&state.amps), self.dims.clone(), state.kind)
    }

    /// Keeps photon numbers below `n` in every mode.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if self.dims.iter().any(|&d| d < n) {
            return Err(Error::DimensionMismatch(format!("cannot restrict {:?} to {n}", self.dims)));
        }
        let idx = box_indices(&self.dims, n);
        let mat = Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| self.mat[[idx[i], idx[j]]]);
        Self::new(mat, vec![n; self.dims.len()])
    }
}

pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for FockState {
    fn tensor(&self, other: &Self) -> Self {
        let mut amps = Array1::zeros(self.amps.len() * other.amps.len());
        let m = other.amps.len();
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * m + j] = a * b;
            }
        }
        let kind = if self.kind == NormKind::Unit && other.kind == NormKind::Unit {
            NormKind::Unit
        } else {
            NormKind::Density
        };
        let dims = self.dims.iter().chain(other.dims.iter()).copied().collect();
        Self { amps, dims, kind }
    }
}

impl Tensor for FockOperator {
    fn tensor(&self, other: &Self) -> Self {
        let (n, m) = (self.mat.nrows(), other.mat.nrows());
        let mut mat = Array2::zeros((n * m, n * m));
        for ((i, j), a) in self.mat.indexed_iter() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            let mut blk = mat.slice_mut(ndarray::s![i * m..(i + 1) * m, j * m..(j + 1) * m]);
            blk.zip_mut_with(&other.mat, |x, b| *x = a * b);
        }
        let dims = self.dims.iter().chain(other.dims.iter()).copied().collect();
        Self { mat, dims }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Applies `op` (dims `[d_i, d_j]`) to modes `(i, j)` of `state`.
pub fn apply_two_mode(op: &FockOperator, state: &FockState, modes: (usize, usize)) -> Result<FockState> {
    apply_on_modes(op, state, &[modes.0, modes.1])
}

/// Applies a single-mode operator to mode `i`.
pub fn apply_single_mode(op: &FockOperator, state: &FockState, mode: usize) -> Result<FockState> {
    apply_on_modes(op, state, &[mode])
}

fn apply_on_modes(op: &FockOperator, state: &FockState, modes: &[usize]) -> Result<FockState> {
    let nm = state.dims.len();
    let mut seen = vec![false; nm];
    for &m in modes {
        if m >= nm || seen[m] {
            return Err(Error::InvalidParameter(format!("bad mode list {modes:?} for {nm} modes")));
        }
        seen[m] = true;
    }
    let want: Vec<usize> = modes.iter().map(|&m| state.dims[m]).collect();
    if op.dims != want {
        return Err(Error::DimensionMismatch(format!("operator dims {:?} vs modes {:?}", op.dims, want)));
    }
    let mut perm: Vec<usize> = modes.to_vec();
    perm.extend((0..nm).filter(|m| !modes.contains(m)));
    let t = state
        .amps
        .clone()
        .into_shape_with_order(IxDyn(&state.dims))
        .expect("length checked at construction")
        .permuted_axes(IxDyn(&perm));
    let rows: usize = want.iter().product();
    let rest = state.amps.len() / rows;
    let flat = t
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, rest))
        .expect("contiguous");
    let out = op.mat.dot(&flat);
    let permuted_dims: Vec<usize> = perm.iter().map(|&p| state.dims[p]).collect();
    let mut inv = vec![0; nm];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    let back = out
        .into_shape_with_order(IxDyn(&permuted_dims))
        .expect("contiguous")
        .permuted_axes(IxDyn(&inv));
    let amps = Array1::from_iter(back.as_standard_layout().iter().copied());
    FockState::new(amps, state.dims.clone(), state.kind)
}

fn check_same(a: &FockState, b: &FockState) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims, b.dims)));
    }
    Ok(())
}

/// `<a|b>`.
pub fn overlap(a: &FockState, b: &FockState) -> Result<C64> {
    check_same(a, b)?;
    Ok(dot_conj(a.amps.view(), b.amps.view()))
}

fn dot_conj(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `|<a|b>|^2 / (|a|^2 |b|^2)`.
pub fn fidelity_up_to_phase(a: &FockState, b: &FockState) -> Result<f64> {
    let ov = overlap(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(ov.norm_sqr() / (na * na * nb * nb))
}

/// Flat indices whose photon numbers all lie below `n` (a box).
pub fn box_indices(dims: &[usize], n: usize) -> Vec<usize> {
    multi_indices(dims, |idx| idx.iter().all(|&k| k < n))
}

/// Flat indices with total photon number below `k`; for one mode this is `0..k`.
pub fn interior_indices(dims: &[usize], k: usize) -> Vec<usize> {
    multi_indices(dims, |idx| idx.iter().sum::<usize>() < k)
}

fn multi_indices(dims: &[usize], keep: impl Fn(&[usize]) -> bool) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut out = Vec::new();
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..total {
        if keep(&idx) {
            out.push(flat);
        }
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

fn gather(s: &FockState, idx: &[usize]) -> Array1<C64> {
    Array1::from_iter(idx.iter().map(|&i| s.amps[i]))
}

/// `1 - F` between the states restricted to the interior of total photon
/// number below `k`.
pub fn interior_infidelity(a: &FockState, b: &FockState, k: usize) -> Result<f64> {
    check_same(a, b)?;
    let idx = interior_indices(&a.dims, k);
    let (x, y) = (gather(a, &idx), gather(b, &idx));
    let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let f = dot_conj(x.view(), y.view()).norm_sqr() / (nx * ny);
    Ok((1.0 - f).max(0.0))
}

/// `min_phi |a - e^{i phi} b| / |b|` on the interior; sensitive to scale.
pub fn state_distance_up_to_phase(a: &FockState, b: &FockState, k: usize) -> Result<f64> {
    check_same(a, b)?;
    let idx = interior_indices(&a.dims, k);
    let (x, y) = (gather(a, &idx), gather(b, &idx));
    let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if ny == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let c = dot_conj(y.view(), x.view());
    let phase = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    let d: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b * phase).norm_sqr()).sum();
    Ok(d.sqrt() / ny.sqrt())
}

fn interior_blocks(a: &FockOperator, b: &FockOperator, k: usize) -> Result<(Array2<C64>, Array2<C64>)> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims, b.dims)));
    }
    let idx = interior_indices(&a.dims, k);
    let n = idx.len();
    let pa = Array2::from_shape_fn((n, n), |(i, j)| a.mat[[idx[i], idx[j]]]);
    let pb = Array2::from_shape_fn((n, n), |(i, j)| b.mat[[idx[i], idx[j]]]);
    Ok((pa, pb))
}

/// `min_phi |A - e^{i phi} B|_F / |B|_F` over the interior (triangle for
/// two modes).
pub fn operator_distance_up_to_phase(a: &FockOperator, b: &FockOperator, k: usize) -> Result<f64> {
    let (pa, pb) = interior_blocks(a, b, k)?;
    let nb = frob(pb.view());
    if nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let c: C64 = pb.iter().zip(pa.iter()).map(|(y, x)| y.conj() * x).sum();
    let phase = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    Ok(frob((&pa - &pb.mapv(|z| z * phase)).view()) / nb)
}

/// `min_c |A - c B|_F / |A|_F` over complex scalars `c`; returns the
/// residual and the optimal `c`.
pub fn operator_distance_up_to_scale(a: &FockOperator, b: &FockOperator, k: usize) -> Result<(f64, C64)> {
    let (pa, pb) = interior_blocks(a, b, k)?;
    let nb2 = pb.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let na = frob(pa.view());
    if nb2 == 0.0 || na == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let c: C64 = pb.iter().zip(pa.iter()).map(|(y, x)| y.conj() * x).sum::<C64>() / nb2;
    Ok((frob((&pa - &pb.mapv(|z| z * c)).view()) / na, c))
}

pub const DEFAULT_SCHEDULE: [usize; 9] = [20, 30, 40, 50, 60, 70, 80, 90, 100];
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Converged {
    pub value: f64,
    pub cutoff: Cutoff,
}

/// Evaluates `f` along the schedule until two successive values agree to `tol`.
pub fn converge_in_cutoff<F>(mut f: F, schedule: &[usize], tol: f64) -> Result<Converged>
where
    F: FnMut(Cutoff) -> Result<f64>,
{
    let mut prev: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    for &n in schedule {
        let c = Cutoff::new(n)?;
        let v = f(c)?;
        if let Some(p) = prev {
            last_change = (v - p).abs();
            if last_change < tol {
                return Ok(Converged { value: v, cutoff: c });
            }
        }
        prev = Some(v);
    }
    Err(Error::NotConverged { last_change, tol })
}

/// Annihilation and creation operators.
pub fn ladder(cutoff: Cutoff) -> (FockOperator, FockOperator) {
    let a = ladder_matrix(cutoff.get());
    let ad = a.t().to_owned();
    (FockOperator::single(a), FockOperator::single(ad))
}

pub(crate) fn ladder_matrix(n: usize) -> Array2<C64> {
    let mut a = Array2::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `q = (a + a^dag)/sqrt2`, `p = -i(a - a^dag)/sqrt2`.
pub fn quadratures(cutoff: Cutoff) -> (FockOperator, FockOperator) {
    let (q, p) = quadrature_matrices(cutoff.get());
    (FockOperator::single(q), FockOperator::single(p))
}

pub(crate) fn quadrature_matrices(n: usize) -> (Array2<C64>, Array2<C64>) {
    let a = ladder_matrix(n);
    let ad = a.t().to_owned();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad).mapv(|z| z * s);
    let p = (&a - &ad).mapv(|z| z * C64::new(0.0, -s));
    (q, p)
}

pub fn number(cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let mut m = Array2::zeros((n, n));
    for k in 0..n {
        m[[k, k]] = C64::new(k as f64, 0.0);
    }
    FockOperator::single(m)
}
