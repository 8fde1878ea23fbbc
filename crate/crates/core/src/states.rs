//! Fock-basis constructors for the ancilla and code states: squeezed vacua,
//! damped quadrature eigenstates, EPR, qunaught and square-lattice GKP states.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::{Cutoff, FockState, NormKind};
use crate::operators::i_pow;
use crate::special::{comb_sites, comb_sum, even_ratio, hermite_functions, mehler};

/// Largest norm fraction a unit constructor may lose to truncation before
/// it refuses (the cutoff is too small for the requested squeezing).
pub const DEFAULT_MAX_DEFICIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

/// Quality figures of an approximate GKP state with damping `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GkpQuality {
    pub beta: f64,
    pub delta_sq: f64,
    pub kappa_sq: f64,
    pub s_gkp_db: f64,
}

impl GkpQuality {
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("GKP damping must be positive, got {beta}")));
        }
        Ok(Self { beta, delta_sq: beta, kappa_sq: beta, s_gkp_db: -10.0 * beta.log10() })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_beta(10f64.powf(-db / 10.0))
    }
}

fn finish_unit(raw: Array1<C64>, max_deficit: f64) -> Result<FockState> {
    let n2: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
    let deficit = 1.0 - n2;
    if deficit > max_deficit {
        return Err(Error::TruncationDeficit { deficit, tol: max_deficit });
    }
    FockState::normalized(raw.clone(), vec![raw.len()])
}

/// Squeezed-vacuum amplitudes; `alternate` adds the `(-1)^n` of the q variant.
fn squeezed_amplitudes(zeta: f64, n: usize, alternate: bool) -> Array1<C64> {
    let pre = (2.0 * zeta / (1.0 + zeta * zeta)).sqrt();
    let ratio = (1.0 - zeta * zeta) / (1.0 + zeta * zeta);
    let mut out = Array1::zeros(n);
    for k in 0..n.div_ceil(2) {
        let sign = if alternate && k % 2 == 1 { -1.0 } else { 1.0 };
        // ratio^k * sqrt((2k)!) / (2^k k!)
        let v = pre * sign * ratio.powi(k as i32) * even_ratio(k) / 2f64.powi(k as i32);
        out[2 * k] = C64::new(v, 0.0);
    }
    out
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!("squeezing factor must be positive, got {zeta}")));
    }
    Ok(())
}

/// `S(zeta)|0>`: position variance `zeta^2 / 2`.
pub fn squeezed_vacuum_q(zeta: f64, cutoff: Cutoff) -> Result<FockState> {
    check_zeta(zeta)?;
    finish_unit(squeezed_amplitudes(zeta, cutoff.get(), true), DEFAULT_MAX_DEFICIT)
}

/// Momentum-squeezed vacuum, equal to `squeezed_vacuum_q(1/zeta)`.
pub fn squeezed_vacuum_p(zeta: f64, cutoff: Cutoff) -> Result<FockState> {
    check_zeta(zeta)?;
    finish_unit(squeezed_amplitudes(zeta, cutoff.get(), false), DEFAULT_MAX_DEFICIT)
}

/// Normalization `(1 + zeta^2) / (2 zeta sqrt(pi))` of a damped 0-eigenstate.
pub fn squeezed_norm(zeta: f64) -> f64 {
    (1.0 + zeta * zeta) / (2.0 * zeta * PI.sqrt())
}

/// Squeezing factor `e^{-r}` with `tanh r = e^{-2 beta}`.
pub fn zeta_from_beta(beta: f64) -> f64 {
    (-(-2.0 * beta).exp().atanh()).exp()
}

/// `<s|N(2 beta)|s>` for a quadrature eigenstate at value `s`.
pub fn eigenstate_norm(value: f64, beta: f64) -> f64 {
    (-value * value * beta.tanh()).exp() / (PI * (1.0 - (-4.0 * beta).exp())).sqrt()
}

/// Ideal eigenstate amplitudes `<n|s>_q = h_n(s)`, `<n|t>_p = i^n h_n(t)`.
pub(crate) fn eigenstate_amplitudes(kind: Quadrature, value: f64, m: usize) -> Array1<C64> {
    let h = hermite_functions(m, value);
    Array1::from_iter(h.into_iter().enumerate().map(|(n, x)| match kind {
        Quadrature::Q => C64::new(x, 0.0),
        Quadrature::P => i_pow(n) * x,
    }))
}

/// `N(beta)|value> / sqrt(N)`, renormalized after truncation.
pub fn damped_quadrature_eigenstate(kind: Quadrature, value: f64, beta: f64, cutoff: Cutoff) -> Result<FockState> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("eigenstate damping must be positive, got {beta}")));
    }
    let norm = eigenstate_norm(value, beta).sqrt();
    let mut a = eigenstate_amplitudes(kind, value, cutoff.get());
    for (n, z) in a.iter_mut().enumerate() {
        *z *= (-beta * n as f64).exp() / norm;
    }
    finish_unit(a, DEFAULT_MAX_DEFICIT)
}

/// `(1/sqrt(2 pi)) sum_n |n>|n>`, density normalized.
pub fn fock_epr(cutoff: Cutoff) -> FockState {
    let n = cutoff.get();
    let v = (2.0 * PI).sqrt().recip();
    let m = Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(v, 0.0) } else { C64::new(0.0, 0.0) });
    FockState::from_two_mode(m, NormKind::Density)
}

/// Weighted position comb `sum_s w_s |s>_q`.
#[derive(Clone, Debug)]
pub(crate) struct Comb {
    /// (period, offset, weight) families of sites
    families: Vec<(f64, f64, f64)>,
    alternating: Vec<bool>,
    /// Fourier-invariant comb: Fock support on n = 0 mod 4 only
    mod4: bool,
}

impl Comb {
    pub(crate) fn gkp(j: u8) -> Self {
        let rp = PI.sqrt();
        Comb { families: vec![(2.0 * rp, j as f64 * rp, (2.0 * rp).sqrt())], alternating: vec![false], mod4: false }
    }

    pub(crate) fn gkp_pm(plus: bool) -> Self {
        let rp = PI.sqrt();
        let w = (2.0 * rp).sqrt() / 2f64.sqrt();
        Comb {
            families: vec![(2.0 * rp, 0.0, w), (2.0 * rp, rp, if plus { w } else { -w })],
            alternating: vec![false, false],
            mod4: false,
        }
    }

    pub(crate) fn qunaught() -> Self {
        Comb { families: vec![((2.0 * PI).sqrt(), 0.0, (2.0 * PI).powf(0.25))], alternating: vec![false], mod4: true }
    }

    fn weighted_sites(&self, beta: f64, nmax: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for ((period, offset, w), alt) in self.families.iter().zip(&self.alternating) {
            for s in comb_sites(*period, *offset, beta, nmax) {
                let k = ((s - offset) / period).round() as i64;
                let sign = if *alt && k.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                out.push((s, w * sign));
            }
        }
        out
    }

    /// Ideal Fock amplitudes `sum_s w_s h_n(s)` for `n < m`, with the
    /// structural zeros set exactly.
    pub(crate) fn ideal_amplitudes(&self, m: usize) -> Array1<C64> {
        let mut acc = vec![0.0; m];
        for ((period, offset, w), _) in self.families.iter().zip(&self.alternating) {
            let sites = comb_sites(*period, *offset, 0.0, m);
            for (a, v) in acc.iter_mut().zip(comb_sum(&sites, m)) {
                *a += w * v;
            }
        }
        Array1::from_iter(acc.into_iter().enumerate().map(|(n, v)| {
            let zero = if self.mod4 { n % 4 != 0 } else { n % 2 != 0 };
            C64::new(if zero { 0.0 } else { v }, 0.0)
        }))
    }

    /// `<comb|N(2 beta)|comb>` from the Mehler kernel.
    pub(crate) fn damped_norm(&self, beta: f64) -> f64 {
        let sites = self.weighted_sites(beta, usize::MAX / 4);
        let mut acc = 0.0;
        for &(x, wx) in &sites {
            for &(y, wy) in &sites {
                acc += wx * wy * mehler(2.0 * beta, x, y);
            }
        }
        acc
    }

    /// Exact position wavefunction of `N(beta)|comb> / sqrt(norm)`.
    pub(crate) fn damped_wavefunction(&self, beta: f64, x: f64) -> f64 {
        let sites = self.weighted_sites(beta, usize::MAX / 4);
        sites.iter().map(|&(s, w)| w * mehler(beta, x, s)).sum::<f64>() / self.damped_norm(beta).sqrt()
    }
}

fn damped_comb_state(comb: &Comb, beta: f64, cutoff: Cutoff) -> Result<FockState> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("comb damping must be positive, got {beta}")));
    }
    let norm = comb.damped_norm(beta).sqrt();
    let mut a = comb.ideal_amplitudes(cutoff.get());
    for (n, z) in a.iter_mut().enumerate() {
        *z *= (-beta * n as f64).exp() / norm;
    }
    finish_unit(a, DEFAULT_MAX_DEFICIT)
}

fn check_j(j: u8) -> Result<()> {
    if j > 1 {
        return Err(Error::InvalidParameter(format!("GKP codeword index must be 0 or 1, got {j}")));
    }
    Ok(())
}

/// Damped square-lattice GKP codeword `N(beta)|j>` (unit norm).
pub fn gkp_codeword(j: u8, beta: f64, cutoff: Cutoff) -> Result<FockState> {
    check_j(j)?;
    damped_comb_state(&Comb::gkp(j), beta, cutoff)
}

/// Damped `|+>` or `|->` GKP state.
pub fn gkp_plus_minus(plus: bool, beta: f64, cutoff: Cutoff) -> Result<FockState> {
    damped_comb_state(&Comb::gkp_pm(plus), beta, cutoff)
}

/// Damped qunaught (comb of period `sqrt(2 pi)`).
pub fn qunaught(beta: f64, cutoff: Cutoff) -> Result<FockState> {
    damped_comb_state(&Comb::qunaught(), beta, cutoff)
}

/// `<j|N(2 beta)|j>` of the ideal codeword.
pub fn gkp_norm(j: u8, beta: f64) -> Result<f64> {
    check_j(j)?;
    Ok(Comb::gkp(j).damped_norm(beta))
}

pub fn qunaught_norm(beta: f64) -> f64 {
    Comb::qunaught().damped_norm(beta)
}

/// `(|0>|0> + |1>|1>)` from damped codewords, unit norm.
pub fn gkp_bell_pair(beta: f64, cutoff: Cutoff) -> Result<FockState> {
    let c0 = gkp_codeword(0, beta, cutoff)?;
    let c1 = gkp_codeword(1, beta, cutoff)?;
    let (a, b) = (c0.amplitudes(), c1.amplitudes());
    let n = cutoff.get();
    let m = Array2::from_shape_fn((n, n), |(i, k)| a[i] * a[k] + b[i] * b[k]);
    let mut s = FockState::from_two_mode(m, NormKind::Unit);
    s.normalize()?;
    Ok(s)
}

/// `sum_n c_n <x|n>` in the position or momentum representation.
pub fn wavefunction(state: &FockState, basis: Quadrature, grid: &[f64]) -> Result<Vec<C64>> {
    if state.dims().len() != 1 {
        return Err(Error::DimensionMismatch(format!("wavefunction needs one mode, got {:?}", state.dims())));
    }
    let n = state.dims()[0];
    let amps = state.amplitudes();
    Ok(grid
        .iter()
        .map(|&x| {
            let h = hermite_functions(n, x);
            amps.iter()
                .zip(h)
                .enumerate()
                .map(|(k, (c, hk))| match basis {
                    Quadrature::Q => c * hk,
                    // <t|n>_p = (-i)^n h_n(t)
                    Quadrature::P => c * i_pow(4 - k % 4) * hk,
                })
                .sum()
        })
        .collect())
}

/// Small-damping comb-of-Gaussians form of the damped codeword wavefunction,
/// `sqrt2 / pi^{1/4} e^{-beta x^2 / 2} sum_n e^{-(x - (2n+j) sqrt(pi))^2 / (2 beta)}`.
pub fn comb_gaussian_wavefunction(j: u8, beta: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_j(j)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("comb damping must be positive, got {beta}")));
    }
    let rp = PI.sqrt();
    let sites = comb_sites(2.0 * rp, j as f64 * rp, beta, usize::MAX / 4);
    let pre = 2f64.sqrt() / PI.powf(0.25);
    Ok(grid
        .iter()
        .map(|&x| {
            let spikes: f64 = sites.iter().map(|s| (-(x - s).powi(2) / (2.0 * beta)).exp()).sum();
            pre * (-beta * x * x / 2.0).exp() * spikes
        })
        .collect())
}

/// Exact position wavefunction of the damped codeword (Mehler sums).
pub fn gkp_wavefunction_exact(j: u8, beta: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_j(j)?;
    let comb = Comb::gkp(j);
    Ok(grid.iter().map(|&x| comb.damped_wavefunction(beta, x)).collect())
}

/// Declarative ancilla description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AncillaKind {
    QEigenstate { s: f64 },
    PEigenstate { t: f64 },
    /// position-squeezed vacuum; its squeezing follows from the damping via
    /// `tanh r = e^{-2 beta}`, `zeta = e^{-r}`
    SqueezedQ,
    /// momentum-squeezed vacuum, as `SqueezedQ`
    SqueezedP,
    Qunaught,
    GkpCodeword { j: u8 },
    GkpPlusMinus { plus: bool },
    /// arbitrary normalizable amplitudes (damping applied on top)
    Custom { amps: Vec<C64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaSpec {
    pub kind: AncillaKind,
    pub beta: f64,
}

impl AncillaSpec {
    pub fn new(kind: AncillaKind, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("ancilla damping must be >= 0, got {beta}")));
        }
        match &kind {
            AncillaKind::GkpCodeword { j } => check_j(*j)?,
            AncillaKind::Custom { amps } if amps.iter().all(|z| z.norm() == 0.0) => return Err(Error::ZeroNorm),
            _ => {}
        }
        Ok(Self { kind, beta })
    }

    pub fn squeezed_p(beta: f64) -> Result<Self> {
        Self::new(AncillaKind::SqueezedP, beta)
    }

    pub fn squeezed_q(beta: f64) -> Result<Self> {
        Self::new(AncillaKind::SqueezedQ, beta)
    }

    pub fn qunaught(beta: f64) -> Result<Self> {
        Self::new(AncillaKind::Qunaught, beta)
    }

    /// Squeezing factor of the squeezed kinds (`1/zeta` for momentum squeezing
    /// expressed as a position squeezer).
    pub fn zeta(&self) -> Option<f64> {
        match self.kind {
            AncillaKind::SqueezedQ | AncillaKind::SqueezedP if self.beta > 0.0 => Some(zeta_from_beta(self.beta)),
            _ => None,
        }
    }

    fn comb(&self) -> Option<Comb> {
        match self.kind {
            AncillaKind::Qunaught => Some(Comb::qunaught()),
            AncillaKind::GkpCodeword { j } => Some(Comb::gkp(j)),
            AncillaKind::GkpPlusMinus { plus } => Some(Comb::gkp_pm(plus)),
            _ => None,
        }
    }

    /// Undamped Fock amplitudes for photon numbers below `m` (density
    /// normalized for eigenstates and combs).
    pub fn ideal_amplitudes(&self, m: usize) -> Array1<C64> {
        match &self.kind {
            AncillaKind::QEigenstate { s } => eigenstate_amplitudes(Quadrature::Q, *s, m),
            AncillaKind::PEigenstate { t } => eigenstate_amplitudes(Quadrature::P, *t, m),
            AncillaKind::SqueezedQ => eigenstate_amplitudes(Quadrature::Q, 0.0, m),
            AncillaKind::SqueezedP => eigenstate_amplitudes(Quadrature::P, 0.0, m),
            AncillaKind::Custom { amps } => Array1::from_shape_fn(m, |n| amps.get(n).copied().unwrap_or_default()),
            _ => self.comb().expect("comb kinds").ideal_amplitudes(m),
        }
    }

    /// `<ideal|N(2 beta)|ideal>`.
    pub fn damped_norm(&self) -> Result<f64> {
        let b = self.beta;
        let density = !matches!(self.kind, AncillaKind::Custom { .. });
        if density && b == 0.0 {
            return Err(Error::InvalidParameter("ideal eigenstates and combs need beta > 0 to normalize".into()));
        }
        Ok(match &self.kind {
            AncillaKind::QEigenstate { s } => eigenstate_norm(*s, b),
            AncillaKind::PEigenstate { t } => eigenstate_norm(*t, b),
            AncillaKind::SqueezedQ | AncillaKind::SqueezedP => eigenstate_norm(0.0, b),
            AncillaKind::Custom { amps } => {
                amps.iter().enumerate().map(|(n, z)| (-2.0 * b * n as f64).exp() * z.norm_sqr()).sum()
            }
            _ => self.comb().expect("comb kinds").damped_norm(b),
        })
    }

    /// `N(beta)|ideal> / sqrt(norm)` for photon numbers below `m`, without
    /// renormalizing the truncated vector.
    pub fn damped_amplitudes(&self, m: usize) -> Result<Array1<C64>> {
        let norm = self.damped_norm()?.sqrt();
        let mut a = self.ideal_amplitudes(m);
        for (n, z) in a.iter_mut().enumerate() {
            *z *= (-self.beta * n as f64).exp() / norm;
        }
        Ok(a)
    }

    /// Unit-norm state at `cutoff`.
    pub fn state(&self, cutoff: Cutoff) -> Result<FockState> {
        finish_unit(self.damped_amplitudes(cutoff.get())?, DEFAULT_MAX_DEFICIT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_core::{fidelity_up_to_phase, overlap, quadratures};
    use crate::operators::phase_delay;
    use approx::assert_abs_diff_eq;

    fn c(n: usize) -> Cutoff {
        Cutoff::new(n).unwrap()
    }

    #[test]
    fn squeezed_variance_and_vacuum() {
        let s = squeezed_vacuum_q(0.5, c(60)).unwrap();
        let (q, _) = quadratures(c(60));
        let qs = q.compose(&q).unwrap().apply(&s).unwrap();
        assert_abs_diff_eq!(overlap(&s, &qs).unwrap().re, 0.125, epsilon = 1e-6);
        let v = squeezed_vacuum_q(1.0, c(10)).unwrap();
        assert_abs_diff_eq!(v.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        let vac = FockState::vacuum(c(60));
        assert_abs_diff_eq!(fidelity_up_to_phase(&vac, &s).unwrap(), 2.0 * 0.5 / 1.25, epsilon = 1e-10);
    }

    #[test]
    fn p_squeezing_is_inverse_q_squeezing() {
        let a = squeezed_vacuum_p(0.7, c(60)).unwrap();
        let b = squeezed_vacuum_q(1.0 / 0.7, c(60)).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn damped_eigenstate_is_squeezed_vacuum() {
        for &beta in &[0.05, 0.2] {
            let zeta = zeta_from_beta(beta);
            let a = damped_quadrature_eigenstate(Quadrature::Q, 0.0, beta, c(400)).unwrap();
            let b = squeezed_vacuum_q(zeta, c(400)).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(eigenstate_norm(0.0, beta), squeezed_norm(zeta), epsilon = 1e-10);
        }
    }

    #[test]
    fn fourier_maps_q_to_p_eigenstate() {
        let q0 = damped_quadrature_eigenstate(Quadrature::Q, 0.0, 0.05, c(60)).unwrap();
        let p0 = damped_quadrature_eigenstate(Quadrature::P, 0.0, 0.05, c(60)).unwrap();
        let f = phase_delay(std::f64::consts::FRAC_PI_2, c(60)).apply(&q0).unwrap();
        assert!(fidelity_up_to_phase(&f, &p0).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn comb_structural_zeros() {
        let g = gkp_codeword(1, 0.05, c(60)).unwrap();
        for n in (1..60).step_by(2) {
            assert_eq!(g.amplitudes()[n], C64::new(0.0, 0.0));
        }
        let z = qunaught(0.05, c(60)).unwrap();
        for n in 0..60 {
            if n % 4 != 0 {
                assert_eq!(z.amplitudes()[n], C64::new(0.0, 0.0));
            }
        }
        let f = phase_delay(std::f64::consts::FRAC_PI_2, c(60)).apply(&z).unwrap();
        for (x, y) in f.amplitudes().iter().zip(z.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn codeword_norm_matches_fock_sum() {
        let beta = 0.1;
        let comb = Comb::gkp(0);
        let a = comb.ideal_amplitudes(400);
        let s: f64 = a.iter().enumerate().map(|(n, z)| (-2.0 * beta * n as f64).exp() * z.norm_sqr()).sum();
        assert_abs_diff_eq!(s / gkp_norm(0, beta).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn wavefunction_of_vacuum() {
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let w = wavefunction(&FockState::vacuum(c(40)), Quadrature::Q, &grid).unwrap();
        for (x, v) in grid.iter().zip(w) {
            assert_abs_diff_eq!(v.re, PI.powf(-0.25) * (-x * x / 2.0).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn quality_db() {
        let q = GkpQuality::from_beta(0.0138).unwrap();
        assert!((q.s_gkp_db - 18.6).abs() < 0.05);
    }
}
