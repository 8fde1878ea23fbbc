//! Small dense helpers shared by the operator builders.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

/// Eigen-decomposition of a real symmetric matrix; columns of the second
/// value are the eigenvectors.
pub(crate) fn eigh(h: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = h.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| h[[i, j]]);
    let e = nalgebra::SymmetricEigen::new(m);
    let w = Array1::from_iter(e.eigenvalues.iter().copied());
    let v = Array2::from_shape_fn((n, n), |(i, j)| e.eigenvectors[(i, j)]);
    (w, v)
}

pub(crate) fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

/// `V diag(f(w)) V^T` for a real orthogonal `V`.
pub(crate) fn spectral(v: &Array2<f64>, w: &Array1<f64>, f: impl Fn(f64) -> C64) -> Array2<C64> {
    let vc = to_complex(v);
    let mut left = vc.clone();
    for (j, &x) in w.iter().enumerate() {
        let s = f(x);
        left.column_mut(j).mapv_inplace(|z| z * s);
    }
    left.dot(&vc.t())
}

pub(crate) fn frob(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Process-wide memo table for expensive deterministic builds.
pub(crate) struct Memo<K, V> {
    cell: OnceLock<Mutex<HashMap<K, Arc<V>>>>,
}

impl<K: Eq + Hash + Clone, V> Memo<K, V> {
    pub(crate) const fn new() -> Self {
        Self { cell: OnceLock::new() }
    }

    pub(crate) fn get_or(&self, key: K, build: impl FnOnce() -> V) -> Arc<V> {
        let map = self.cell.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = map.lock().unwrap().get(&key) {
            return v.clone();
        }
        // built outside the lock; a duplicate build on a race is harmless
        let v = Arc::new(build());
        map.lock().unwrap().entry(key).or_insert(v).clone()
    }
}
