//! Registry of circuit identities checked numerically, EC sweeps and plot-data
//! export.
//!
//! Identities involving unnormalizable objects are evaluated with damped
//! regularization over a schedule of `beta`; they pass when the residual at
//! the smallest `beta` is within tolerance and the residuals do not increase
//! as `beta` decreases. Operator identities are `beta`-independent and are
//! evaluated once.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::{
    interior_infidelity, operator_distance_up_to_phase, state_distance_up_to_phase, Cutoff, FockOperator, FockState,
    NormKind,
};
use crate::gkp_ec::{run_chain, ChainSpec, EcVariant, OutcomeGrid};
use crate::operators::{apply_coupling, bs_apply, bs_decomposition, displacement_matrix, padded, squeeze_matrix, v_gate_matrix, Quad};
use crate::states::{
    eigenstate_amplitudes, gkp_bell_pair, squeezed_vacuum_p, squeezed_vacuum_q, wavefunction, AncillaKind, AncillaSpec,
    GkpQuality, Quadrature,
};
use crate::teleport_gadget::{
    closed_form_gate, dual_pipeline_distance, measurement_identity_check, mu, mu_prime, sfactor_fit, GadgetConfig,
    HomodyneOutcome,
};
use crate::C64;

pub const DEFAULT_BETAS: [f64; 3] = [0.1, 0.05, 0.02];
pub const DEFAULT_CUTOFF: usize = 60;
/// Residuals at or below this count as non-increasing.
pub const NOISE_FLOOR: f64 = 1e-9;

/// How an identity depends on the regularization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// evaluated at every `beta`; residual must not grow as `beta` decreases
    Damped,
    /// exact operator identity; `beta` is ignored
    Exact,
}

type Evaluator = fn(Cutoff, f64) -> Result<f64>;

pub struct IdentityCase {
    pub id: &'static str,
    pub description: &'static str,
    pub regularization: Regularization,
    /// bound on the residual at the smallest `beta` (every `beta` for exact ones)
    pub tolerance: f64,
    eval: Evaluator,
}

impl IdentityCase {
    pub fn evaluate(&self, cutoff: Cutoff, beta: f64) -> Result<f64> {
        let r = (self.eval)(cutoff, beta)?;
        if !r.is_finite() {
            return Err(Error::NotConverged { last_change: r, tol: self.tolerance });
        }
        Ok(r)
    }
}

static REGISTRY: [IdentityCase; 16] = [
    IdentityCase {
        id: "epr_cx",
        description: "C_X(1) on |0>_p |0>_q equals the EPR state",
        regularization: Regularization::Damped,
        tolerance: 1e-3,
        eval: epr_cx,
    },
    IdentityCase {
        id: "cvcs_fourier",
        description: "C_Z(1) on |0>_p |0>_p equals the EPR state with a Fourier transform on one mode",
        regularization: Regularization::Damped,
        tolerance: 1e-3,
        eval: cvcs_fourier,
    },
    IdentityCase {
        id: "gkp_bell_qunaught",
        description: "two qunaughts on a beamsplitter give the GKP Bell pair",
        regularization: Regularization::Damped,
        tolerance: 1e-3,
        eval: gkp_bell_qunaught,
    },
    IdentityCase {
        id: "partial_p_comb",
        description: "|0>_p and a qunaught on a beamsplitter teleport 2^{1/4} Sha(p)",
        regularization: Regularization::Damped,
        tolerance: 1e-8,
        eval: partial_p_comb,
    },
    IdentityCase {
        id: "partial_q_comb",
        description: "a qunaught and |0>_q on a beamsplitter teleport 2^{1/4} Sha(q)",
        regularization: Regularization::Damped,
        tolerance: 1e-8,
        eval: partial_q_comb,
    },
    IdentityCase {
        id: "bs_decomposition",
        description: "beamsplitter as C_X, squeezers and inverse C_X",
        regularization: Regularization::Exact,
        tolerance: 1e-6,
        eval: bs_decomposition_residual,
    },
    IdentityCase {
        id: "bounce_transpose",
        description: "O on one half of the EPR state equals O^T on the other",
        regularization: Regularization::Damped,
        // first order in beta: the damped EPR state misses by beta |[n, O]|
        tolerance: 1e-1,
        eval: bounce_transpose,
    },
    IdentityCase {
        id: "bs_displacement_choi",
        description: "|t>_p and |s>_q on a beamsplitter teleport D(s + i t)",
        regularization: Regularization::Damped,
        tolerance: 1e-8,
        eval: bs_displacement_choi,
    },
    IdentityCase {
        id: "measurement_v_mu",
        description: "rotated two-mode homodyne after a beamsplitter equals D(mu) V / sqrt(pi)",
        regularization: Regularization::Damped,
        tolerance: 1e-8,
        eval: measurement_v_mu,
    },
    IdentityCase {
        id: "kraus_state_damped",
        description: "local damping of the ancillae moves onto both sides of the teleported gate",
        regularization: Regularization::Damped,
        tolerance: 1e-10,
        eval: kraus_state_damped,
    },
    IdentityCase {
        id: "gadget_full",
        description: "gadget contraction equals N A N D(mu) V assembly",
        regularization: Regularization::Damped,
        tolerance: 5e-3,
        eval: gadget_full,
    },
    IdentityCase {
        id: "case_ab",
        description: "two damped qunaughts teleport sqrt(pi/2) times the damped GKP projector",
        regularization: Regularization::Damped,
        tolerance: 2e-2,
        eval: case_ab,
    },
    IdentityCase {
        id: "case_a",
        description: "momentum-squeezed state and damped qunaught: damped 2^{1/4} Sha(p) Kraus state",
        regularization: Regularization::Damped,
        tolerance: 1e-6,
        eval: case_a,
    },
    IdentityCase {
        id: "case_b",
        description: "damped qunaught and position-squeezed state: damped 2^{1/4} Sha(q) Kraus state",
        regularization: Regularization::Damped,
        tolerance: 1e-6,
        eval: case_b,
    },
    IdentityCase {
        id: "mu_prime_commutation",
        description: "V D(mu') = D(mu) V",
        regularization: Regularization::Exact,
        tolerance: 1e-8,
        eval: mu_prime_commutation,
    },
    IdentityCase {
        id: "sfactor_relation",
        description: "shear ancillae teleport R(-pi/4) S(zeta) R(pi/4) with zeta = -tan(theta - pi/4)",
        regularization: Regularization::Damped,
        tolerance: 1e-6,
        eval: sfactor_relation,
    },
];

pub fn registry() -> &'static [IdentityCase] {
    &REGISTRY
}

pub fn identity_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.id).collect()
}

pub fn find_identity(id: &str) -> Result<&'static IdentityCase> {
    REGISTRY.iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownIdentity(id.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: String,
    pub cutoff: usize,
    pub betas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub pass: bool,
}

/// Residuals must not grow along `betas` sorted in decreasing order.
pub fn trend_ok(betas: &[f64], residuals: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = betas.iter().copied().zip(residuals.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.windows(2).all(|w| w[1].1 <= w[0].1 || w[1].1 <= NOISE_FLOOR)
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta schedule must be non-empty and positive, got {betas:?}")));
    }
    Ok(())
}

pub fn run_identity(id: &str, cutoff: Cutoff, betas: &[f64]) -> Result<IdentityReport> {
    check_betas(betas)?;
    let case = find_identity(id)?;
    let (residuals, pass) = match case.regularization {
        Regularization::Exact => {
            let r = case.evaluate(cutoff, betas[0])?;
            (vec![r; betas.len()], r <= case.tolerance)
        }
        Regularization::Damped => {
            let rs = betas.iter().map(|&b| case.evaluate(cutoff, b)).collect::<Result<Vec<_>>>()?;
            let (at_min, _) = betas.iter().zip(&rs).min_by(|a, b| a.0.total_cmp(b.0)).expect("non-empty");
            let endpoint = rs[betas.iter().position(|b| b == at_min).expect("present")];
            let pass = endpoint <= case.tolerance && trend_ok(betas, &rs);
            (rs, pass)
        }
    };
    Ok(IdentityReport { id: id.to_string(), cutoff: cutoff.get(), betas: betas.to_vec(), residuals, pass })
}

/// All registered identities, in parallel, sorted by id.
pub fn run_all(cutoff: Cutoff, betas: &[f64]) -> Result<Vec<IdentityReport>> {
    check_betas(betas)?;
    let mut out = REGISTRY.par_iter().map(|c| run_identity(c.id, cutoff, betas)).collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn write_identity_report(reports: &[IdentityReport], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), reports)?;
    Ok(())
}

// ---- identity evaluators -------------------------------------------------

fn damp(mut a: Array1<C64>, beta: f64) -> Array1<C64> {
    for (n, z) in a.iter_mut().enumerate() {
        *z *= (-beta * n as f64).exp();
    }
    a
}

fn outer(a: &Array1<C64>, b: &Array1<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn two_mode(m: Array2<C64>, n: usize) -> FockState {
    FockState::from_two_mode(m.slice(s![..n, ..n]).to_owned(), NormKind::Density)
}

/// `sum_n x_n e^{-beta n} |n>|n>`, the EPR state damped on one side.
fn epr_damped(beta: f64, n: usize, phase: impl Fn(usize) -> C64) -> FockState {
    let m = Array2::from_shape_fn((n, n), |(i, j)| if i == j { phase(i) * (-beta * i as f64).exp() } else { C64::new(0.0, 0.0) });
    FockState::from_two_mode(m, NormKind::Density)
}

/// Working dimension for squeezed inputs of a two-mode coupling.
fn coupling_dim(n: usize, beta: f64) -> usize {
    padded(n).max((4.0 / beta) as usize + n)
}

fn epr_cx(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let m = coupling_dim(n, beta);
    let p0 = damp(eigenstate_amplitudes(Quadrature::P, 0.0, m), beta);
    let q0 = damp(eigenstate_amplitudes(Quadrature::Q, 0.0, m), beta);
    // C_X = exp(-i q x p)
    let out = apply_coupling(&outer(&p0, &q0), -1.0, Quad::Q, Quad::P, m);
    let rhs = epr_damped(beta, n, |_| C64::new(1.0, 0.0));
    interior_infidelity(&two_mode(out, n), &rhs, cutoff.interior())
}

fn cvcs_fourier(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let m = coupling_dim(n, beta);
    let p0 = damp(eigenstate_amplitudes(Quadrature::P, 0.0, m), beta);
    let out = apply_coupling(&outer(&p0, &p0), 1.0, Quad::Q, Quad::Q, m);
    // (F x I) sum e^{-beta n}|n>|n> with F = R(pi/2)
    let rhs = epr_damped(beta, n, crate::operators::i_pow);
    interior_infidelity(&two_mode(out, n), &rhs, cutoff.interior())
}

/// Damped ancilla normalized by its exact norm, truncated without renormalizing.
fn spec_amplitudes(spec: &AncillaSpec, n: usize) -> Result<Array1<C64>> {
    spec.damped_amplitudes(n)
}

fn gkp_bell_qunaught(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let q = spec_amplitudes(&AncillaSpec::qunaught(beta)?, n)?;
    let lhs = bs_apply(&outer(&q, &q), (n, n), false);
    let wide = gkp_bell_pair(beta, Cutoff::new(coupling_dim(n, beta))?)?;
    let rhs = two_mode(wide.two_mode_matrix()?, n);
    interior_infidelity(&two_mode(lhs, n), &rhs, cutoff.interior())
}

/// `(N x N)(I x A) sum |k>|k> / sqrt(pi)` as a two-mode amplitude matrix
/// `[k, o] = e^{-beta (k + o)} A[o, k] / sqrt(pi)`.
fn damped_choi(gate: &Array2<C64>, beta: f64, scale: f64) -> Array2<C64> {
    let c = scale / PI.sqrt();
    Array2::from_shape_fn(gate.dim(), |(k, o)| gate[[o, k]] * c * (-beta * (k + o) as f64).exp())
}

/// `B (N psi x N phi)` for ideal ancillae against the closed-form gate.
fn closed_form_kraus_state(psi: AncillaKind, phi: AncillaKind, cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let a = AncillaSpec::new(psi.clone(), beta)?;
    let b = AncillaSpec::new(phi.clone(), beta)?;
    let lhs = bs_apply(&outer(&damp(a.ideal_amplitudes(n), beta), &damp(b.ideal_amplitudes(n), beta)), (n, n), false);
    let gate = closed_form_gate(&psi, &phi, n, n).ok_or_else(|| Error::InvalidParameter("no closed form".into()))?;
    let rhs = damped_choi(&gate, beta, 1.0);
    state_distance_up_to_phase(&two_mode(lhs, n), &two_mode(rhs, n), cutoff.interior())
}

fn partial_p_comb(cutoff: Cutoff, beta: f64) -> Result<f64> {
    closed_form_kraus_state(AncillaKind::PEigenstate { t: 0.0 }, AncillaKind::Qunaught, cutoff, beta)
}

fn partial_q_comb(cutoff: Cutoff, beta: f64) -> Result<f64> {
    closed_form_kraus_state(AncillaKind::Qunaught, AncillaKind::QEigenstate { s: 0.0 }, cutoff, beta)
}

fn bs_displacement_choi(cutoff: Cutoff, beta: f64) -> Result<f64> {
    closed_form_kraus_state(AncillaKind::PEigenstate { t: 0.3 }, AncillaKind::QEigenstate { s: -0.2 }, cutoff, beta)
}

fn bs_decomposition_residual(cutoff: Cutoff, _beta: f64) -> Result<f64> {
    Ok(bs_decomposition(cutoff).residual)
}

fn bounce_transpose(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let m = padded(n);
    // a non-symmetric single-mode gate
    let o = displacement_matrix(C64::new(0.3, 0.2), n, m).dot(&squeeze_matrix(1.3, n, m));
    let d = Array1::from_shape_fn(n, |j| (-beta * j as f64).exp());
    let epr = Array2::from_diag(&d.mapv(|x| C64::new(x, 0.0)));
    // (O x I)|EPR> has matrix O E; (I x O^T)|EPR> has matrix E O
    let lhs = o.dot(&epr);
    let rhs = epr.dot(&o);
    state_distance_up_to_phase(&two_mode(lhs, n), &two_mode(rhs, n), cutoff.interior())
}

const MEASUREMENT_ANGLES: (f64, f64) = (1.2, 0.3);

fn measurement_v_mu(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let (ta, tb) = MEASUREMENT_ANGLES;
    measurement_identity_check(ta, tb, HomodyneOutcome::new(0.4, -0.3)?, cutoff, beta)
}

fn kraus_state_damped(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    // generic normalizable ancillae: a coherent state and a Fock superposition
    let alpha = C64::new(0.4, 0.2);
    let mut psi = Array1::zeros(n);
    psi[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 1..n {
        psi[k] = psi[k - 1] * alpha / (k as f64).sqrt();
    }
    let mut phi = Array1::zeros(n);
    phi[0] = C64::new(0.6, 0.0);
    phi[3] = C64::new(0.0, 0.8);
    let lhs = bs_apply(&outer(&damp(psi.clone(), beta), &damp(phi.clone(), beta)), (n, n), false);
    // teleported gate of the undamped pair, A[o, k] = sqrt(pi) chi[k, o]
    let chi = bs_apply(&outer(&psi, &phi), (n, n), false);
    let gate = chi.t().mapv(|z| z * PI.sqrt());
    let rhs = damped_choi(&gate, beta, 1.0);
    state_distance_up_to_phase(&two_mode(lhs, n), &two_mode(rhs, n), cutoff.interior())
}

fn gadget_full(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let (ta, tb) = MEASUREMENT_ANGLES;
    let cfg = GadgetConfig::new(ta, tb, AncillaSpec::squeezed_p(beta)?, AncillaSpec::squeezed_q(beta)?, cutoff)?;
    dual_pipeline_distance(&cfg, HomodyneOutcome::new(0.3, -0.2)?)
}

/// Damped projector `sum_j |j_beta><j_beta|` from normalized damped codewords.
fn damped_code_projector(beta: f64, n: usize) -> Result<Array2<C64>> {
    let mut p = Array2::zeros((n, n));
    for j in 0..2u8 {
        let c = spec_amplitudes(&AncillaSpec::new(AncillaKind::GkpCodeword { j }, beta)?, n)?;
        p = p + outer(&c, &c.mapv(|z| z.conj()));
    }
    Ok(p)
}

fn case_ab(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let q = AncillaSpec::qunaught(beta)?;
    let gate = crate::teleport_gadget::teleported_gate_choi(&q, &q, cutoff);
    // N A N scaled by the |0> codeword normalization
    let n0 = AncillaSpec::new(AncillaKind::GkpCodeword { j: 0 }, beta)?.damped_norm()?;
    let lhs = gate.matrix().mapv(|z| z / n0);
    let rhs = damped_code_projector(beta, n)?.mapv(|z| z * (PI / 2.0).sqrt());
    operator_distance_up_to_phase(&FockOperator::single(lhs), &FockOperator::single(rhs), cutoff.interior())
}

/// Kraus state of a squeezed ancilla and a damped qunaught against the
/// normalized, damped comb gate.
fn squeezed_comb_case(momentum: bool, cutoff: Cutoff, beta: f64) -> Result<f64> {
    let n = cutoff.get();
    // closed-form amplitudes renormalize after truncation; go far enough
    // out that the dropped tail is below e^{-60}
    let wide = Cutoff::new(n + (30.0 / beta) as usize)?;
    let zeta = crate::states::zeta_from_beta(beta);
    let (sq, spec) = if momentum {
        (squeezed_vacuum_p(zeta, wide)?, AncillaSpec::squeezed_p(beta)?)
    } else {
        (squeezed_vacuum_q(zeta, wide)?, AncillaSpec::squeezed_q(beta)?)
    };
    let sq = sq.amplitudes().slice(s![..n]).to_owned();
    let qn = AncillaSpec::qunaught(beta)?;
    let q = spec_amplitudes(&qn, n)?;
    let (psi, phi, kinds) = if momentum {
        (&sq, &q, (AncillaKind::PEigenstate { t: 0.0 }, AncillaKind::Qunaught))
    } else {
        (&q, &sq, (AncillaKind::Qunaught, AncillaKind::QEigenstate { s: 0.0 }))
    };
    let lhs = bs_apply(&outer(psi, phi), (n, n), false);
    let gate = closed_form_gate(&kinds.0, &kinds.1, n, n).expect("comb closed form");
    let scale = 1.0 / (spec.damped_norm()? * qn.damped_norm()?).sqrt();
    let rhs = damped_choi(&gate, beta, scale);
    state_distance_up_to_phase(&two_mode(lhs, n), &two_mode(rhs, n), cutoff.interior())
}

fn case_a(cutoff: Cutoff, beta: f64) -> Result<f64> {
    squeezed_comb_case(true, cutoff, beta)
}

fn case_b(cutoff: Cutoff, beta: f64) -> Result<f64> {
    squeezed_comb_case(false, cutoff, beta)
}

fn mu_prime_commutation(cutoff: Cutoff, _beta: f64) -> Result<f64> {
    let n = cutoff.get();
    let m = 4 * n + 20;
    let (ta, tb) = MEASUREMENT_ANGLES;
    let (ma, mb) = (0.5, -0.2);
    let v = v_gate_matrix(ta, tb, m, m)?;
    let lhs = v.dot(&displacement_matrix(mu_prime(ta, tb, ma, mb)?, m, m));
    let rhs = displacement_matrix(mu(ta, tb, ma, mb)?, m, m).dot(&v);
    let cut = |x: Array2<C64>| FockOperator::single(x.slice(s![..n, ..n]).to_owned());
    operator_distance_up_to_phase(&cut(lhs), &cut(rhs), cutoff.interior())
}

fn sfactor_relation(cutoff: Cutoff, beta: f64) -> Result<f64> {
    let fit = sfactor_fit(0.4, beta, cutoff)?;
    let zeta_err = (fit.zeta_fit - fit.zeta_formula).abs() / fit.zeta_formula.abs();
    Ok(fit.residual.max(zeta_err))
}

// ---- sweeps and plot data ------------------------------------------------

/// Swept parameter of an EC sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    SqueezingDb,
    Steps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// `None` runs plain teleportation only
    pub variant: Option<EcVariant>,
    pub beta: f64,
    pub steps: usize,
    pub ec_period: usize,
    pub seeds: u64,
    pub cutoff: Cutoff,
    pub grid: OutcomeGrid,
    pub input: [C64; 2],
}

impl SweepSpec {
    pub fn single(variant: Option<EcVariant>, beta: f64, steps: usize, ec_period: usize, seeds: u64) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ok(Self {
            parameter: SweepParameter::Beta,
            values: vec![beta],
            variant,
            beta,
            steps,
            ec_period,
            seeds,
            cutoff: Cutoff::new(60)?,
            grid: OutcomeGrid::wide(),
            input: [C64::new(h, 0.0), C64::new(h, 0.0)],
        })
    }
}

/// One CSV row of an EC sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub squeezing_db: f64,
    pub beta: f64,
    pub steps: usize,
    pub ec_period: usize,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub n_seeds: u64,
}

pub const SWEEP_HEADER: [&str; 7] = ["squeezing_db", "beta", "steps", "ec_period", "mean_fidelity", "stderr", "n_seeds"];

/// Mean and standard error; the sum runs in a fixed order.
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs one point: seeds `0..seeds` in parallel.
pub fn run_sweep_point(spec: &SweepSpec, beta: f64, steps: usize) -> Result<SweepRow> {
    if spec.seeds == 0 {
        return Err(Error::InvalidParameter("at least one seed required".into()));
    }
    let mut chain = ChainSpec::periodic(spec.variant, beta, steps, spec.ec_period, spec.input)?;
    chain.cutoff = spec.cutoff;
    chain.grid = spec.grid;
    let mut fids: Vec<(u64, f64)> = (0..spec.seeds)
        .into_par_iter()
        .map(|seed| run_chain(&chain, seed).map(|r| (seed, r.logical_fidelity)))
        .collect::<Result<Vec<_>>>()?;
    fids.sort_by_key(|p| p.0);
    let xs: Vec<f64> = fids.into_iter().map(|p| p.1).collect();
    let (mean_fidelity, stderr) = mean_stderr(&xs);
    Ok(SweepRow {
        squeezing_db: GkpQuality::from_beta(beta)?.s_gkp_db,
        beta,
        steps,
        ec_period: spec.ec_period,
        mean_fidelity,
        stderr,
        n_seeds: spec.seeds,
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep range".into()));
    }
    spec.values
        .iter()
        .map(|&v| match spec.parameter {
            SweepParameter::Beta => run_sweep_point(spec, v, spec.steps),
            SweepParameter::SqueezingDb => run_sweep_point(spec, GkpQuality::from_db(v)?.beta, spec.steps),
            SweepParameter::Steps => {
                if !(v >= 0.0) || v.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("step count must be a whole number, got {v}")));
                }
                run_sweep_point(spec, spec.beta, v as usize)
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Wavefunction samples for CSV export.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionRow {
    pub x: f64,
    pub re: f64,
    pub im: f64,
    pub abs2: f64,
}

pub const WAVEFUNCTION_HEADER: [&str; 4] = ["x", "re", "im", "abs2"];

pub fn wavefunction_rows(grid: &[f64], values: &[C64]) -> Vec<WavefunctionRow> {
    grid.iter().zip(values).map(|(&x, z)| WavefunctionRow { x, re: z.re, im: z.im, abs2: z.norm_sqr() }).collect()
}

/// Fock-basis wavefunction of `state` on `grid`.
pub fn fock_wavefunction_rows(state: &FockState, basis: Quadrature, grid: &[f64]) -> Result<Vec<WavefunctionRow>> {
    Ok(wavefunction_rows(grid, &wavefunction(state, basis, grid)?))
}

pub fn write_wavefunction_csv<W: Write>(rows: &[WavefunctionRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(WAVEFUNCTION_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `min:max:step` into grid points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("grid must be min:max:step, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    Ok(OutcomeGrid::new(v[0], v[1], v[2])?.points())
}
