//! The two-homodyne teleportation gadget: input on wire 1, ancillae `psi` on
//! wire 2 and `phi` on wire 3, beamsplitters `B_23` then `B_12`, rotated
//! homodyne on wires 1 and 2, output on wire 3.
//!
//! The Kraus operator is built two ways. [`kraus_direct`] contracts the
//! three-mode state against the homodyne bras. [`kraus_analytic`] assembles
//! `A(psi, phi) D(mu) V(theta_a, theta_b)` from the teleported gate, with the
//! damping and normalization factors of finite-energy ancillae.

use std::f64::consts::{FRAC_PI_4, PI};

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::{operator_distance_up_to_phase, operator_distance_up_to_scale, Cutoff, FockOperator, FockState, NormKind};
use crate::operators::{bs_apply, check_angles, displacement_matrix, i_pow, squeeze_matrix, v_gate_matrix};
use crate::special::{comb_sites, even_ratio, hermite_functions, hermite_table};
use crate::states::{AncillaKind, AncillaSpec, Comb};

/// Fraction of the cutoff used as the comparison interior by default.
pub const DEFAULT_INTERIOR_FRACTION: f64 = 2.0 / 3.0;

/// Damping applied to ideal homodyne bras when checking identities.
pub const DEFAULT_BETA_MEAS: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetConfig {
    pub theta_a: f64,
    pub theta_b: f64,
    pub ancilla_psi: AncillaSpec,
    pub ancilla_phi: AncillaSpec,
    pub cutoff: Cutoff,
    pub interior_fraction: f64,
}

impl GadgetConfig {
    pub fn new(theta_a: f64, theta_b: f64, ancilla_psi: AncillaSpec, ancilla_phi: AncillaSpec, cutoff: Cutoff) -> Result<Self> {
        check_angles(theta_a, theta_b)?;
        Ok(Self { theta_a, theta_b, ancilla_psi, ancilla_phi, cutoff, interior_fraction: DEFAULT_INTERIOR_FRACTION })
    }

    pub fn with_interior_fraction(mut self, f: f64) -> Result<Self> {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidParameter(format!("interior fraction must be in (0, 1], got {f}")));
        }
        self.interior_fraction = f;
        Ok(self)
    }

    pub fn interior(&self) -> usize {
        ((self.cutoff.get() as f64 * self.interior_fraction).floor() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        check_angles(self.theta_a, self.theta_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneOutcome {
    pub m_a: f64,
    pub m_b: f64,
}

impl HomodyneOutcome {
    pub fn new(m_a: f64, m_b: f64) -> Result<Self> {
        if !m_a.is_finite() || !m_b.is_finite() {
            return Err(Error::InvalidParameter(format!("homodyne outcomes must be finite, got ({m_a}, {m_b})")));
        }
        Ok(Self { m_a, m_b })
    }

    pub fn zero() -> Self {
        Self { m_a: 0.0, m_b: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct KrausResult {
    pub operator: FockOperator,
    pub mu: C64,
    pub mu_prime: C64,
    pub mu_doubleprime: C64,
    /// `Pr(m_a, m_b) = |K psi|^2` when an input was supplied, else 0
    pub density: f64,
}

/// `mu = -(m_a e^{i theta_b} + m_b e^{i theta_a}) / sin(theta_a - theta_b)`.
pub fn mu(theta_a: f64, theta_b: f64, m_a: f64, m_b: f64) -> Result<C64> {
    check_angles(theta_a, theta_b)?;
    Ok(-(C64::from_polar(m_a, theta_b) + C64::from_polar(m_b, theta_a)) / (theta_a - theta_b).sin())
}

/// Amplitude of the displacement acting before `V`: `V D(mu') = D(mu) V`.
pub fn mu_prime(theta_a: f64, theta_b: f64, m_a: f64, m_b: f64) -> Result<C64> {
    check_angles(theta_a, theta_b)?;
    Ok((-C64::from_polar(m_a, -theta_b) + C64::from_polar(m_b, -theta_a)) / (theta_a - theta_b).sin())
}

pub fn mu_doubleprime(theta_a: f64, theta_b: f64, m_a: f64, m_b: f64) -> Result<C64> {
    check_angles(theta_a, theta_b)?;
    let i = C64::new(0.0, 1.0);
    Ok((-i * C64::from_polar(m_a, theta_b) - i * C64::from_polar(m_b, theta_a)) / (theta_a - theta_b).sin())
}

/// Components `<m|_p R(theta) |n> = e^{i n theta} (-i)^n h_n(m)` for `n < len`,
/// times `e^{-beta n}`.
fn bra_components(theta: f64, m: f64, beta: f64, len: usize) -> Vec<C64> {
    hermite_functions(len, m)
        .into_iter()
        .enumerate()
        .map(|(n, h)| C64::from_polar(h * (-beta * n as f64).exp(), theta * n as f64) * i_pow(4 - n % 4))
        .collect()
}

/// Rotated-quadrature bra `<m|_{p_theta}` as a density-normalized row vector.
pub fn homodyne_bra(theta: f64, m: f64, cutoff: Cutoff) -> FockState {
    FockState::single(Array1::from(bra_components(theta, m, 0.0, cutoff.get())), NormKind::Density)
}

/// `W[n, k] = <m_a|_{p_a} <m_b|_{p_b} N(beta) x N(beta) B |n, k>` for `n < rows`,
/// `k < cols`, exact from photon-number sectors.
fn measurement_block(theta_a: f64, theta_b: f64, o: HomodyneOutcome, beta: f64, rows: usize, cols: usize) -> Array2<C64> {
    let len = rows + cols;
    let ba = bra_components(theta_a, o.m_a, beta, len);
    let bb = bra_components(theta_b, o.m_b, beta, len);
    let mut w = Array2::zeros((rows, cols));
    for l in 0..(rows + cols - 1) {
        let e = crate::operators::bs_sector(l);
        let lo = l.saturating_sub(cols - 1);
        let hi = l.min(rows - 1);
        for n in lo..=hi {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..=l {
                acc += ba[j] * bb[l - j] * e[[j, n]];
            }
            w[[n, l - n]] = acc;
        }
    }
    w
}

/// `sqrt(pi) <k, o| B |psi, phi>` arranged as `A[o, k]`, `o < rows`, `k < cols`.
/// Entries with `o + k` below the ancilla length are exact.
fn choi_block(psi: &Array1<C64>, phi: &Array1<C64>, rows: usize, cols: usize) -> Array2<C64> {
    let joint = Array2::from_shape_fn((psi.len(), phi.len()), |(i, j)| psi[i] * phi[j]);
    let chi = bs_apply(&joint, (cols, rows), false);
    chi.t().mapv(|z| z * PI.sqrt())
}

fn damped_unnormalized(spec: &AncillaSpec, m: usize) -> Array1<C64> {
    let mut a = spec.ideal_amplitudes(m);
    for (n, z) in a.iter_mut().enumerate() {
        *z *= (-spec.beta * n as f64).exp();
    }
    a
}

/// Teleported gate `A` from the Choi relation, for the ancillae `N(beta)|ideal>`
/// without normalization, so that `beta = 0` gives the ideal gate and damped
/// ancillae give `N(beta) A N(beta)`.
pub fn teleported_gate_choi(ancilla_psi: &AncillaSpec, ancilla_phi: &AncillaSpec, cutoff: Cutoff) -> FockOperator {
    let n = cutoff.get();
    let psi = damped_unnormalized(ancilla_psi, 2 * n);
    let phi = damped_unnormalized(ancilla_phi, 2 * n);
    FockOperator::single(choi_block(&psi, &phi, n, n))
}

/// Projector-like sum `sum_s |s><s|` over `s = k sqrt(pi)` in the position
/// (`momentum = false`) or momentum basis.
fn sha_block(momentum: bool, rows: usize, cols: usize) -> Array2<C64> {
    let m = rows.max(cols);
    let sites = comb_sites(PI.sqrt(), 0.0, 0.0, m);
    let h = hermite_table(m, &sites);
    Array2::from_shape_fn((rows, cols), |(a, b)| {
        let v: f64 = (0..sites.len()).map(|i| h[[a, i]] * h[[b, i]]).sum();
        if momentum { i_pow(a) * i_pow(4 - b % 4) * v } else { C64::new(v, 0.0) }
    })
}

/// Closed form of the ideal teleported gate where one is known.
pub(crate) fn closed_form_gate(psi: &AncillaKind, phi: &AncillaKind, rows: usize, cols: usize) -> Option<Array2<C64>> {
    use AncillaKind::*;
    let p_zero = |k: &AncillaKind| matches!(k, SqueezedP) || matches!(k, PEigenstate { t } if *t == 0.0);
    let q_zero = |k: &AncillaKind| matches!(k, SqueezedQ) || matches!(k, QEigenstate { s } if *s == 0.0);
    // 2^{1/4} sqrt(pi) Sha_T with Sha_T = sqrt(T) sum_k |kT><kT|, T = sqrt(pi)
    let comb_pre = 2f64.powf(0.25) * PI.sqrt() * PI.powf(0.25);
    let out = match (psi, phi) {
        (PEigenstate { .. } | SqueezedP, QEigenstate { .. } | SqueezedQ) => {
            let t = if let PEigenstate { t } = psi { *t } else { 0.0 };
            let s = if let QEigenstate { s } = phi { *s } else { 0.0 };
            let m = rows.max(cols);
            displacement_matrix(C64::new(s, t), m, 2 * m + 20).slice(s![..rows, ..cols]).to_owned()
        }
        (Qunaught, Qunaught) => {
            let m = rows.max(cols);
            let g0 = Comb::gkp(0).ideal_amplitudes(m);
            let g1 = Comb::gkp(1).ideal_amplitudes(m);
            let c = (PI / 2.0).sqrt();
            Array2::from_shape_fn((rows, cols), |(a, b)| (g0[a] * g0[b] + g1[a] * g1[b]) * c)
        }
        (k, Qunaught) if p_zero(k) => sha_block(true, rows, cols).mapv(|z| z * comb_pre),
        (Qunaught, k) if q_zero(k) => sha_block(false, rows, cols).mapv(|z| z * comb_pre),
        _ => return None,
    };
    Some(out)
}

/// `(D(mu) V)[..rows, ..cols]`, both factors built at dimension `m`.
fn dv_block(mu: C64, theta_a: f64, theta_b: f64, rows: usize, cols: usize, m: usize) -> Result<Array2<C64>> {
    let d = displacement_matrix(mu, m, m);
    let v = v_gate_matrix(theta_a, theta_b, m, m)?;
    Ok(d.slice(s![..rows, ..]).dot(&v.slice(s![.., ..cols])))
}

/// Kraus operator by contracting `B_12 B_23 |n>|psi>|phi>` against the two
/// homodyne bras, column by column in `n`.
pub fn kraus_direct(config: &GadgetConfig, outcome: HomodyneOutcome) -> Result<FockOperator> {
    config.validate()?;
    let n = config.cutoff.get();
    let k3 = 3 * n;
    let ma = 4 * n + 2;
    let psi = config.ancilla_psi.damped_amplitudes(ma)?;
    let phi = config.ancilla_phi.damped_amplitudes(ma)?;
    let joint = Array2::from_shape_fn((ma, ma), |(i, j)| psi[i] * phi[j]);
    // chi[k, o]: wire 2 photon number k, wire 3 photon number o
    let chi = bs_apply(&joint, (k3, n), false);
    let w = measurement_block(config.theta_a, config.theta_b, outcome, 0.0, n, k3);
    Ok(FockOperator::single(w.dot(&chi).reversed_axes()))
}

/// Kraus operator `A(psi, phi) D(mu) V / (pi sqrt|sin(theta_a - theta_b)|)`
/// with the damped-ancilla factors `N(beta) A N(beta) / sqrt(N_psi N_phi)`.
///
/// `A` comes from its closed form for the standard ancilla pairs with equal
/// damping, otherwise from the Choi relation of the damped ancillae.
pub fn kraus_analytic(config: &GadgetConfig, outcome: HomodyneOutcome, input: Option<&FockState>) -> Result<KrausResult> {
    config.validate()?;
    let (ta, tb) = (config.theta_a, config.theta_b);
    let n = config.cutoff.get();
    let k3 = 3 * n;
    let (psi, phi) = (&config.ancilla_psi, &config.ancilla_phi);
    let norm = (psi.damped_norm()? * phi.damped_norm()?).sqrt();
    let gate = match closed_form_gate(&psi.kind, &phi.kind, n, k3) {
        Some(mut a) if psi.beta == phi.beta => {
            let b = psi.beta;
            for ((o, k), z) in a.indexed_iter_mut() {
                *z *= (-b * (o + k) as f64).exp();
            }
            a
        }
        _ => choi_block(&damped_unnormalized(psi, n + k3), &damped_unnormalized(phi, n + k3), n, k3),
    };
    let m = mu(ta, tb, outcome.m_a, outcome.m_b)?;
    let dv = dv_block(m, ta, tb, k3, n, 4 * n + 20)?;
    let c = 1.0 / (PI * norm * (ta - tb).sin().abs().sqrt());
    let operator = FockOperator::single(gate.dot(&dv).mapv(|z| z * c));
    let density = match input {
        Some(s) => operator.apply(s)?.norm().powi(2),
        None => 0.0,
    };
    Ok(KrausResult {
        operator,
        mu: m,
        mu_prime: mu_prime(ta, tb, outcome.m_a, outcome.m_b)?,
        mu_doubleprime: mu_doubleprime(ta, tb, outcome.m_a, outcome.m_b)?,
        density,
    })
}

/// Up-to-phase interior distance between the two Kraus pipelines.
pub fn dual_pipeline_distance(config: &GadgetConfig, outcome: HomodyneOutcome) -> Result<f64> {
    let direct = kraus_direct(config, outcome)?;
    let analytic = kraus_analytic(config, outcome, None)?;
    operator_distance_up_to_phase(&direct, &analytic.operator, config.interior())
}

/// Two-mode measurement identity with damped bras: compares
/// `<m_a|<m_b| N x N B |n, k>` (as an operator `k <- n`) against
/// `N (D(mu) V) N / sqrt(pi |sin(theta_a - theta_b)|)` on the interior.
pub fn measurement_identity_check(
    theta_a: f64,
    theta_b: f64,
    outcome: HomodyneOutcome,
    cutoff: Cutoff,
    beta_meas: f64,
) -> Result<f64> {
    check_angles(theta_a, theta_b)?;
    let n = cutoff.get();
    let lhs = measurement_block(theta_a, theta_b, outcome, beta_meas, n, n).reversed_axes();
    let m = mu(theta_a, theta_b, outcome.m_a, outcome.m_b)?;
    let mut rhs = dv_block(m, theta_a, theta_b, n, n, 4 * n + 20)?;
    let c = 1.0 / (PI * (theta_a - theta_b).sin().abs()).sqrt();
    for ((k, j), z) in rhs.indexed_iter_mut() {
        *z *= c * (-beta_meas * (j + k) as f64).exp();
    }
    let k = (n as f64 * DEFAULT_INTERIOR_FRACTION) as usize;
    operator_distance_up_to_phase(&FockOperator::single(lhs), &FockOperator::single(rhs), k)
}

/// Fock amplitudes of `P(sigma)|0>_p` (`momentum_shear = false`) or
/// `P_p(sigma)|0>_q`, both supported on even photon numbers.
pub fn shear_ancilla_amplitudes(sigma: f64, momentum_shear: bool, m: usize) -> Array1<C64> {
    let one = C64::new(1.0, 0.0);
    let is = C64::new(0.0, sigma);
    let (c, den) = if momentum_shear {
        (-(one - is) / ((one + is) * 2.0), one + is)
    } else {
        ((one + is) / ((one - is) * 2.0), one - is)
    };
    let pre = (2.0 * PI).sqrt().recip() * PI.powf(-0.25) * (C64::new(2.0 * PI, 0.0) / den).sqrt();
    Array1::from_shape_fn(m, |n| if n % 2 == 0 { pre * c.powu((n / 2) as u32) * even_ratio(n / 2) } else { C64::new(0.0, 0.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SFactorFit {
    pub theta: f64,
    /// `-tan(theta - pi/4)`
    pub zeta_formula: f64,
    pub zeta_fit: f64,
    /// up-to-scale interior residual at the fitted squeeze
    pub residual: f64,
}

/// Fits the squeeze factor of the gate teleported by the shear ancillae
/// `P(tan theta)|0>_p`, `P_p(tan theta)|0>_q` (damped by `beta`) to the form
/// `R(-pi/4) S(zeta) R(pi/4)`, searching both signs of `zeta`.
pub fn sfactor_fit(theta: f64, beta: f64, cutoff: Cutoff) -> Result<SFactorFit> {
    if !(theta.cos().abs() > 1e-6) {
        return Err(Error::InvalidParameter(format!("shear angle {theta} too close to pi/2")));
    }
    let n = cutoff.get();
    let k = (n as f64 * DEFAULT_INTERIOR_FRACTION) as usize;
    let sig = theta.tan();
    let sec = theta.cos().abs().recip().sqrt();
    let damp = |a: Array1<C64>| Array1::from_shape_fn(a.len(), |j| a[j] * sec * (-beta * j as f64).exp());
    let psi = damp(shear_ancilla_amplitudes(sig, false, 4 * n));
    let phi = damp(shear_ancilla_amplitudes(sig, true, 4 * n));
    let a = FockOperator::single(choi_block(&psi, &phi, n, n));
    let residual = |zeta: f64| -> Result<f64> {
        let mut o = squeeze_matrix(zeta, n, 3 * n);
        for ((j, l), z) in o.indexed_iter_mut() {
            *z *= C64::from_polar((-beta * (j + l) as f64).exp(), -FRAC_PI_4 * j as f64 + FRAC_PI_4 * l as f64);
        }
        Ok(operator_distance_up_to_scale(&a, &FockOperator::single(o), k)?.0)
    };
    let mut best = (f64::INFINITY, 0.0);
    for sign in [1.0, -1.0] {
        let x = golden_min(|x| residual(sign * x.exp()).unwrap_or(f64::INFINITY), (0.1f64).ln(), (10.0f64).ln(), 1e-9);
        let r = residual(sign * x.exp())?;
        if r < best.0 {
            best = (r, sign * x.exp());
        }
    }
    Ok(SFactorFit { theta, zeta_formula: -(theta - FRAC_PI_4).tan(), zeta_fit: best.1, residual: best.0 })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}
