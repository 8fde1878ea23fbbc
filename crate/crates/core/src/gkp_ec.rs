//! Teleportation-based GKP error correction with qunaught ancillae (cases A,
//! B and AB), homodyne outcome sampling and multi-step chains.
//!
//! Chains run in a working space of dimension `4N` where displacements are
//! generated by rotated quadratures diagonalized once. Lattice parts of EC
//! syndromes go to a Pauli frame by default; the continuous remainder of
//! plain teleportation steps is undone with an active displacement.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::Arc;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::{Cutoff, FockState, NormKind};
use crate::linalg::Memo;
use crate::operators::{check_angles, q_basis, v_gate_matrix};
use crate::states::{gkp_codeword, AncillaKind, AncillaSpec, GkpQuality};
use crate::teleport_gadget::{closed_form_gate, kraus_analytic, mu, GadgetConfig, HomodyneOutcome};

/// Smallest code-space weight accepted by [`logical_readout`].
pub const MIN_CODESPACE_WEIGHT: f64 = 0.9;

/// Smallest fraction of the outcome density the sampling grid must hold.
pub const MIN_GRID_MASS: f64 = 0.999;
/// Grid mass above `1 + MAX_EXCESS_MASS` signals an undersized working space.
pub const MAX_EXCESS_MASS: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcVariant {
    /// p-eigenstate and qunaught: comb projection of the momentum
    A,
    /// qunaught and q-eigenstate: comb projection of the position
    B,
    /// two qunaughts: the full GKP projector
    AB,
}

impl std::str::FromStr for EcVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Self::A),
            "B" => Ok(Self::B),
            "AB" => Ok(Self::AB),
            _ => Err(Error::InvalidParameter(format!("unknown EC case '{s}', expected A, B or AB"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcCase {
    pub variant: EcVariant,
    pub beta: f64,
    pub theta_a: f64,
    pub theta_b: f64,
}

impl EcCase {
    /// Case at the standard homodyne angles `(pi/2, 0)`, where `V = I`.
    pub fn new(variant: EcVariant, beta: f64) -> Result<Self> {
        Self::with_angles(variant, beta, FRAC_PI_2, 0.0)
    }

    pub fn with_angles(variant: EcVariant, beta: f64, theta_a: f64, theta_b: f64) -> Result<Self> {
        check_beta(beta)?;
        check_angles(theta_a, theta_b)?;
        Ok(Self { variant, beta, theta_a, theta_b })
    }

    fn ancillae(&self) -> (AncillaKind, AncillaKind) {
        match self.variant {
            EcVariant::A => (AncillaKind::PEigenstate { t: 0.0 }, AncillaKind::Qunaught),
            EcVariant::B => (AncillaKind::Qunaught, AncillaKind::QEigenstate { s: 0.0 }),
            EcVariant::AB => (AncillaKind::Qunaught, AncillaKind::Qunaught),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("damping must be positive, got {beta}")));
    }
    Ok(())
}

/// One gadget in a chain: plain teleportation through squeezed ancillae, or
/// an error-correction step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    Plain { beta: f64 },
    Ec(EcCase),
}

impl StepKind {
    fn ancillae(&self) -> Result<(AncillaSpec, AncillaSpec)> {
        let (a, b, beta) = match self {
            StepKind::Plain { beta } => (AncillaKind::SqueezedP, AncillaKind::SqueezedQ, *beta),
            StepKind::Ec(c) => {
                let (a, b) = c.ancillae();
                (a, b, c.beta)
            }
        };
        check_beta(beta)?;
        Ok((AncillaSpec::new(a, beta)?, AncillaSpec::new(b, beta)?))
    }

    fn angles(&self) -> (f64, f64) {
        match self {
            StepKind::Plain { .. } => (FRAC_PI_2, 0.0),
            StepKind::Ec(c) => (c.theta_a, c.theta_b),
        }
    }

    fn key(&self) -> [u64; 4] {
        let (ta, tb) = self.angles();
        let (tag, beta) = match self {
            StepKind::Plain { beta } => (0, *beta),
            StepKind::Ec(c) => (1 + c.variant as u64, c.beta),
        };
        [tag, beta.to_bits(), ta.to_bits(), tb.to_bits()]
    }

    pub fn gadget_config(&self, cutoff: Cutoff) -> Result<GadgetConfig> {
        let (psi, phi) = self.ancillae()?;
        let (ta, tb) = self.angles();
        GadgetConfig::new(ta, tb, psi, phi, cutoff)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyndromeRecord {
    pub outcome: HomodyneOutcome,
    pub mu: C64,
    /// nearest lattice multiples of `sqrt(pi)` in the position and momentum shift
    pub shift_bin: (i64, i64),
    /// normalized logical coefficients, absent when the state has left the code space
    pub coefficients: Option<[C64; 2]>,
    pub pr_density: f64,
}

/// Nearest `sqrt(pi)` lattice point of the shift applied by `D(mu)`
/// (`sqrt2 Re mu` in position, `sqrt2 Im mu` in momentum).
pub fn shift_bin(mu: C64) -> (i64, i64) {
    let rp = PI.sqrt();
    ((SQRT_2 * mu.re / rp).round() as i64, (SQRT_2 * mu.im / rp).round() as i64)
}

/// Damped codewords at a cutoff with their Gram matrix, for repeated readout.
#[derive(Clone, Debug)]
pub struct CodeBasis {
    zero: FockState,
    one: FockState,
    gram_inv: [[C64; 2]; 2],
}

impl CodeBasis {
    pub fn new(beta: f64, cutoff: Cutoff) -> Result<Self> {
        let zero = gkp_codeword(0, beta, cutoff)?;
        let one = gkp_codeword(1, beta, cutoff)?;
        let g01 = dot(&zero, one.amplitudes());
        let det = C64::new(1.0, 0.0) - g01 * g01.conj();
        let one_c = C64::new(1.0, 0.0);
        let gram_inv = [[one_c / det, -g01 / det], [-g01.conj() / det, one_c / det]];
        Ok(Self { zero, one, gram_inv })
    }

    /// Normalized state `c0 |0> + c1 |1>`.
    pub fn encode(&self, c: [C64; 2]) -> Result<FockState> {
        let a = self.zero.amplitudes().mapv(|z| z * c[0]) + self.one.amplitudes().mapv(|z| z * c[1]);
        FockState::normalized(a, self.zero.dims().to_vec())
    }

    /// Least-squares coefficients in the non-orthogonal codeword basis,
    /// normalized to unit length.
    pub fn readout(&self, state: &FockState) -> Result<[C64; 2]> {
        if state.dims() != self.zero.dims() {
            return Err(Error::DimensionMismatch(format!("{:?} vs code basis {:?}", state.dims(), self.zero.dims())));
        }
        let o = [dot(&self.zero, state.amplitudes()), dot(&self.one, state.amplitudes())];
        let g = &self.gram_inv;
        let c = [g[0][0] * o[0] + g[0][1] * o[1], g[1][0] * o[0] + g[1][1] * o[1]];
        let weight = (o[0].conj() * c[0] + o[1].conj() * c[1]).re / state.norm().powi(2);
        if !(weight >= MIN_CODESPACE_WEIGHT) {
            return Err(Error::LowCodespaceWeight { weight, min: MIN_CODESPACE_WEIGHT });
        }
        let n = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
        Ok([c[0] / n, c[1] / n])
    }
}

fn dot(a: &FockState, b: &Array1<C64>) -> C64 {
    a.amplitudes().iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Logical coefficients of a state in the damped code space at `beta`.
pub fn logical_readout(state: &FockState, beta: f64) -> Result<(C64, C64)> {
    if state.dims().len() != 1 {
        return Err(Error::DimensionMismatch(format!("readout needs one mode, got {:?}", state.dims())));
    }
    let c = CodeBasis::new(beta, Cutoff::new(state.dims()[0])?)?.readout(state)?;
    Ok((c[0], c[1]))
}

fn single_mode_cutoff(state: &FockState) -> Result<Cutoff> {
    match state.dims() {
        [n] => Cutoff::new(*n),
        d => Err(Error::DimensionMismatch(format!("single-mode input expected, got {d:?}"))),
    }
}

/// Applies one EC gadget at a fixed outcome: `K input`, normalized, with its
/// syndrome record. No correction is applied.
pub fn ec_step(case: &EcCase, input: &FockState, outcome: HomodyneOutcome) -> Result<(FockState, SyndromeRecord)> {
    let cutoff = single_mode_cutoff(input)?;
    let cfg = StepKind::Ec(*case).gadget_config(cutoff)?;
    let k = kraus_analytic(&cfg, outcome, Some(input))?;
    if !(k.density > 0.0) || !k.density.is_finite() {
        return Err(Error::VanishingDensity);
    }
    let mut out = k.operator.apply(input)?;
    out.normalize()?;
    let coefficients = logical_readout(&out, case.beta).ok().map(|(a, b)| [a, b]);
    let record = SyndromeRecord { outcome, mu: k.mu, shift_bin: shift_bin(k.mu), coefficients, pr_density: k.density };
    Ok((out, record))
}

/// Uniform grid of homodyne values used for both outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for OutcomeGrid {
    fn default() -> Self {
        Self { min: -6.0, max: 6.0, step: 0.05 }
    }
}

impl OutcomeGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(max > min) || !(step > 0.0) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!("bad grid {min}:{max}:{step}")));
        }
        Ok(Self { min, max, step })
    }

    /// Grid wide enough for GKP inputs down to `beta = 0.05`.
    pub fn wide() -> Self {
        Self { min: -14.0, max: 14.0, step: 0.1 }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }

    fn key(&self) -> [u64; 3] {
        [self.min.to_bits(), self.max.to_bits(), self.step.to_bits()]
    }
}

/// `exp(i t G)` for `G = sqrt2 (Im z q - Re z p)`, the generator of `D(t z)`,
/// diagonalized in a truncated rotated-quadrature basis.
struct Generator {
    basis: Array2<C64>,
    basis_h: Array2<C64>,
    lambda: Array1<f64>,
}

impl Generator {
    fn new(z: C64, m: usize) -> Self {
        // G = sqrt2 |z| R(theta)^dag q R(theta) with theta = pi/2 - arg z
        let theta = FRAC_PI_2 - z.arg();
        let e = q_basis(m);
        let basis = Array2::from_shape_fn((m, m), |(n, k)| C64::from_polar(e.u[[n, k]], -theta * n as f64));
        let basis_h = basis.t().mapv(|x| x.conj());
        let lambda = e.w.mapv(|w| SQRT_2 * z.norm() * w);
        Self { basis, basis_h, lambda }
    }

    fn apply(&self, t: f64, x: &Array1<C64>) -> Array1<C64> {
        let mut y = self.basis_h.dot(x);
        for (v, l) in y.iter_mut().zip(self.lambda.iter()) {
            *v *= C64::from_polar(1.0, t * l);
        }
        self.basis.dot(&y)
    }

    /// Columns `exp(i t_j G) x` for every grid value `t_j`.
    fn apply_grid(&self, ts: &[f64], x: &Array1<C64>) -> Array2<C64> {
        let y = self.basis_h.dot(x);
        let e = Array2::from_shape_fn((y.len(), ts.len()), |(k, j)| y[k] * C64::from_polar(1.0, ts[j] * self.lambda[k]));
        self.basis.dot(&e)
    }
}

/// `D(alpha) x` in the working space.
fn displace(alpha: C64, x: &Array1<C64>, m: usize) -> Array1<C64> {
    if alpha.norm() == 0.0 {
        return x.clone();
    }
    Generator::new(alpha, m).apply(1.0, x)
}

/// Precomputed pieces of one gadget for outcome sampling.
struct StepModel {
    m: usize,
    v: Option<Array2<C64>>,
    /// `c N A N` times the eigenbasis of `G_a`; the outcome density is
    /// `|c N A N D(mu) V psi|^2`
    gate_a: Array2<C64>,
    gen_a: Generator,
    gen_b: Generator,
    /// `int dm_a exp(-i m_a G_a) gate^dag gate exp(i m_a G_a)` over the grid
    kernel: Array2<C64>,
    grid: Vec<f64>,
    dm: f64,
}

static MODELS: Memo<([u64; 4], usize, [u64; 3]), StepModel> = Memo::new();

/// `sum_k e^{i x_k d}` over an arithmetic grid.
fn grid_phase_sum(x0: f64, h: f64, n: usize, d: f64) -> C64 {
    let z = C64::from_polar(1.0, h * d);
    let one = C64::new(1.0, 0.0);
    let head = C64::from_polar(1.0, x0 * d);
    if (one - z).norm() < 1e-12 {
        return head * n as f64;
    }
    head * (one - z.powu(n as u32)) / (one - z)
}

impl StepModel {
    fn get(step: &StepKind, m: usize, grid: &OutcomeGrid) -> Result<Arc<StepModel>> {
        let (psi, phi) = step.ancillae()?;
        // validate before touching the cache so errors are not memoized
        let norm = (psi.damped_norm()? * phi.damped_norm()?).sqrt();
        let (ta, tb) = step.angles();
        check_angles(ta, tb)?;
        let gate = closed_form_gate(&psi.kind, &phi.kind, m, m)
            .ok_or_else(|| Error::InvalidParameter("no closed-form teleported gate for this step".into()))?;
        let v = if (ta, tb) == (FRAC_PI_2, 0.0) { None } else { Some(v_gate_matrix(ta, tb, m, m)?) };
        Ok(MODELS.get_or((step.key(), m, grid.key()), || {
            let s = (ta - tb).sin();
            let c = 1.0 / (PI * norm * s.abs().sqrt());
            let beta = psi.beta;
            let gate = Array2::from_shape_fn((m, m), |(o, k)| gate[[o, k]] * c * (-beta * (o + k) as f64).exp());
            // mu = u m_a + v m_b
            let u = -C64::from_polar(1.0, tb) / s;
            let w = -C64::from_polar(1.0, ta) / s;
            let gen_a = Generator::new(u, m);
            let gen_b = Generator::new(w, m);
            let points = grid.points();
            let h = gate.t().mapv(|z| z.conj()).dot(&gate);
            let hp = gen_a.basis_h.dot(&h).dot(&gen_a.basis);
            let lam = &gen_a.lambda;
            let weighted = Array2::from_shape_fn((m, m), |(i, j)| {
                hp[[i, j]] * grid_phase_sum(grid.min, grid.step, points.len(), lam[j] - lam[i]) * grid.step
            });
            let kernel = gen_a.basis.dot(&weighted).dot(&gen_a.basis_h);
            let gate_a = gate.dot(&gen_a.basis);
            StepModel { m, gate_a, v, gen_a, gen_b, kernel, grid: points, dm: grid.step }
        }))
    }
}

/// Two-stage exact sampler over a discretized outcome grid: the marginal in
/// `m_b` from a precomputed kernel, then `m_a` conditionally.
pub struct OutcomeSampler {
    model: Arc<StepModel>,
    phi: Array2<C64>,
    marginal: WeightedIndex<f64>,
    mass: f64,
}

/// Output of one draw, in the working space.
struct Draw {
    outcome: HomodyneOutcome,
    state: Array1<C64>,
    density: f64,
}

impl OutcomeSampler {
    /// Working dimension is `working_dim`, which must be at least the input cutoff.
    pub fn new(step: &StepKind, input: &FockState, grid: &OutcomeGrid, working_dim: usize) -> Result<Self> {
        let n = single_mode_cutoff(input)?.get();
        if working_dim < n {
            return Err(Error::InvalidParameter(format!("working dimension {working_dim} below cutoff {n}")));
        }
        let model = StepModel::get(step, working_dim, grid)?;
        let mut x = Array1::zeros(model.m);
        x.slice_mut(s![..n]).assign(input.amplitudes());
        let x = match &model.v {
            Some(v) => v.dot(&x),
            None => x,
        };
        let phi = model.gen_b.apply_grid(&model.grid, &x);
        let kp = model.kernel.dot(&phi);
        let pb: Vec<f64> = (0..model.grid.len())
            .map(|j| phi.column(j).iter().zip(kp.column(j).iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0))
            .collect();
        let mass = pb.iter().sum::<f64>() * model.dm / input.norm().powi(2);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::VanishingDensity);
        }
        if mass < MIN_GRID_MASS {
            return Err(Error::GridMass { mass });
        }
        if mass > 1.0 + MAX_EXCESS_MASS {
            return Err(Error::InvalidParameter(format!(
                "outcome mass {mass} exceeds 1: working dimension {working_dim} too small for the grid"
            )));
        }
        let marginal = WeightedIndex::new(&pb).map_err(|_| Error::VanishingDensity)?;
        Ok(Self { model, phi, marginal, mass })
    }

    /// Fraction of the outcome density on the grid.
    pub fn grid_mass(&self) -> f64 {
        self.mass
    }

    fn draw_full(&self, rng: &mut ChaCha8Rng) -> Result<Draw> {
        let md = &self.model;
        let ib = self.marginal.sample(rng);
        let x = md.gen_a.basis_h.dot(&self.phi.column(ib));
        let e = Array2::from_shape_fn((md.m, md.grid.len()), |(k, j)| {
            x[k] * C64::from_polar(1.0, md.grid[j] * md.gen_a.lambda[k])
        });
        let y = md.gate_a.dot(&e);
        let pa: Vec<f64> = y.columns().into_iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
        let ia = WeightedIndex::new(&pa).map_err(|_| Error::VanishingDensity)?.sample(rng);
        Ok(Draw {
            outcome: HomodyneOutcome { m_a: md.grid[ia], m_b: md.grid[ib] },
            state: y.column(ia).to_owned(),
            density: pa[ia],
        })
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<HomodyneOutcome> {
        Ok(self.draw_full(rng)?.outcome)
    }
}

/// Working dimension of the sampler for cutoff `n`: the truncated generators
/// must hold the input shifted by the largest displacement on the grid, or the
/// shifted tails fold back into low Fock rows.
pub fn working_dim(n: usize, step: &StepKind, grid: &OutcomeGrid) -> usize {
    let (ta, tb) = step.angles();
    let reach = grid.min.abs().max(grid.max.abs()) * SQRT_2 / (ta - tb).sin().abs().max(1e-3);
    let radius = (2.0 * n as f64).sqrt() + reach + 4.0;
    let m = (radius * radius / 2.0).ceil() as usize;
    m.max(4 * n).next_multiple_of(8)
}

/// One outcome drawn from `Pr(m_a, m_b)` for `input`; deterministic in `seed`.
pub fn sample_outcome(step: &StepKind, input: &FockState, seed: u64, grid: &OutcomeGrid) -> Result<HomodyneOutcome> {
    Ok(sample_outcomes(step, input, seed, grid, 1)?[0])
}

pub fn sample_outcomes(step: &StepKind, input: &FockState, seed: u64, grid: &OutcomeGrid, count: usize) -> Result<Vec<HomodyneOutcome>> {
    let n = single_mode_cutoff(input)?.get();
    let sampler = OutcomeSampler::new(step, input, grid, working_dim(n, step, grid))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sampler.draw(&mut rng)).collect()
}

/// How lattice-valued syndromes of EC steps are corrected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// classical Pauli frame update
    #[default]
    PauliFrame,
    /// physical `sqrt(pi)` lattice displacement
    Active,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub schedule: Vec<StepKind>,
    pub input: [C64; 2],
    pub beta: f64,
    pub cutoff: Cutoff,
    pub grid: OutcomeGrid,
    pub correction: CorrectionMode,
}

impl ChainSpec {
    /// `steps` plain teleportations at `beta`, every `ec_period`-th replaced by
    /// an EC step of `variant` (`ec_period = 0` or no variant: no EC).
    pub fn periodic(variant: Option<EcVariant>, beta: f64, steps: usize, ec_period: usize, input: [C64; 2]) -> Result<Self> {
        check_beta(beta)?;
        let schedule = (1..=steps)
            .map(|s| match variant {
                Some(v) if ec_period > 0 && s % ec_period == 0 => EcCase::new(v, beta).map(StepKind::Ec),
                _ => Ok(StepKind::Plain { beta }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schedule,
            input,
            beta,
            cutoff: Cutoff::new(60)?,
            grid: OutcomeGrid::wide(),
            correction: CorrectionMode::default(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub steps: usize,
    pub seed: u64,
    pub records: Vec<SyndromeRecord>,
    /// `|<target|psi>|^2` with the target `X^fx Z^fz` of the input re-encoded at the chain's beta
    pub logical_fidelity: f64,
    pub squeezing_db: f64,
    pub frame: (u8, u8),
}

/// Logical `(c0, c1)` after `Z^fz` then `X^fx`.
fn apply_frame(c: [C64; 2], frame: (u8, u8)) -> [C64; 2] {
    let z = if frame.1 == 1 { [c[0], -c[1]] } else { c };
    if frame.0 == 1 { [z[1], z[0]] } else { z }
}

/// Runs a chain of gadgets with sampled outcomes.
pub fn run_chain(spec: &ChainSpec, seed: u64) -> Result<ChainReport> {
    let n = spec.cutoff.get();
    let code = CodeBasis::new(spec.beta, spec.cutoff)?;
    let mut state = code.encode(spec.input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame = (0u8, 0u8);
    let mut records = Vec::with_capacity(spec.schedule.len());
    let rp = PI.sqrt();
    for step in &spec.schedule {
        if step.angles() != (FRAC_PI_2, 0.0) {
            return Err(Error::InvalidParameter("chains run at the standard angles (pi/2, 0)".into()));
        }
        let m = working_dim(n, step, &spec.grid);
        let sampler = OutcomeSampler::new(step, &state, &spec.grid, m)?;
        let d = sampler.draw_full(&mut rng)?;
        let mu = mu(FRAC_PI_2, 0.0, d.outcome.m_a, d.outcome.m_b)?;
        let (kx, kz) = shift_bin(mu);
        let lattice = C64::new(kx as f64, kz as f64) * rp / SQRT_2;
        let active = spec.correction == CorrectionMode::Active;
        let (undo, fx, fz) = match step {
            StepKind::Plain { .. } => (-mu, 0, 0),
            StepKind::Ec(c) => match c.variant {
                EcVariant::AB if active => (-lattice, 0, 0),
                EcVariant::AB => (C64::new(0.0, 0.0), kx, kz),
                EcVariant::A if active => (-C64::new(mu.re, lattice.im), 0, 0),
                EcVariant::A => (-C64::new(mu.re, 0.0), 0, kz),
                EcVariant::B if active => (-C64::new(lattice.re, mu.im), 0, 0),
                EcVariant::B => (-C64::new(0.0, mu.im), kx, 0),
            },
        };
        frame = (((frame.0 as i64 + fx).rem_euclid(2)) as u8, ((frame.1 as i64 + fz).rem_euclid(2)) as u8);
        let out = displace(undo, &d.state, m);
        let mut next = FockState::single(out.slice(s![..n]).to_owned(), NormKind::Unit);
        next.normalize()?;
        let coefficients = code.readout(&next).ok();
        records.push(SyndromeRecord { outcome: d.outcome, mu, shift_bin: (kx, kz), coefficients, pr_density: d.density });
        state = next;
    }
    let target = code.encode(apply_frame(spec.input, frame))?;
    let f = dot(&target, state.amplitudes()).norm_sqr();
    Ok(ChainReport {
        steps: spec.schedule.len(),
        seed,
        records,
        logical_fidelity: f,
        squeezing_db: GkpQuality::from_beta(spec.beta)?.s_gkp_db,
        frame,
    })
}
