//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use cvkraus::fock_core::{fidelity_up_to_phase, quadratures, Cutoff, FockState};
use cvkraus::gkp_ec::{ec_step, EcCase, EcVariant};
use cvkraus::harness::{
    find_identity, run_all, run_sweep_point, trend_ok, wavefunction_rows, SweepSpec, DEFAULT_BETAS, DEFAULT_CUTOFF,
};
use cvkraus::operators::{bs_decomposition, displacement, SymplecticMatrix};
use cvkraus::special::hermite_functions;
use cvkraus::states::{
    comb_gaussian_wavefunction, damped_quadrature_eigenstate, eigenstate_norm, gkp_codeword, squeezed_norm,
    squeezed_vacuum_q, wavefunction, zeta_from_beta, AncillaKind, AncillaSpec, Quadrature,
};
use cvkraus::teleport_gadget::{dual_pipeline_distance, GadgetConfig, HomodyneOutcome};
use cvkraus::{Result, C64};
use rayon::prelude::*;

type Outcome = Result<(bool, String)>;
type Check = fn() -> Outcome;

fn cut(n: usize) -> Cutoff {
    Cutoff::new(n).expect("valid cutoff")
}

fn expect_q2(state: &FockState) -> f64 {
    let n = state.dims()[0];
    let (q, _) = quadratures(cut(n));
    let a = state.amplitudes();
    let qa = q.matrix().dot(a);
    (q.matrix().dot(&qa).iter().zip(a.iter()).map(|(x, y)| y.conj() * x).sum::<C64>()).re
}

fn convention_anchors() -> Outcome {
    let vac = expect_q2(&FockState::vacuum(cut(20)));
    let sq = expect_q2(&squeezed_vacuum_q(0.5, cut(60))?);
    let (e1, e2) = ((vac - 0.5).abs(), (sq - 0.125).abs());
    Ok((e1 <= 1e-12 && e2 <= 1e-6, format!("vacuum <q^2> err {e1:.1e}, squeezed <q^2> err {e2:.1e}")))
}

fn damping_squeezing() -> Outcome {
    let n = 60;
    let mut worst_state: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for beta in [0.05, 0.2] {
        let damped = damped_quadrature_eigenstate(Quadrature::Q, 0.0, beta, cut(n))?;
        let zeta = zeta_from_beta(beta);
        let sq = squeezed_vacuum_q(zeta, cut(n))?;
        let d = damped.amplitudes().iter().zip(sq.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst_state = worst_state.max(d);
        // <0|N(2 beta)|0>_q as a direct Fock sum
        let h = hermite_functions(4000, 0.0);
        let direct: f64 = h.iter().enumerate().map(|(k, x)| (-2.0 * beta * k as f64).exp() * x * x).sum();
        let tanh_r = (1.0 - zeta * zeta) / (1.0 + zeta * zeta);
        let cosh_form = (0.5 * ((1.0 / zeta) + zeta)) / PI.sqrt();
        let forms = [eigenstate_norm(0.0, beta), squeezed_norm(zeta), cosh_form];
        worst_norm = worst_norm.max((tanh_r - (-2.0 * beta).exp()).abs());
        for f in forms {
            worst_norm = worst_norm.max((f - direct).abs() / direct);
        }
    }
    Ok((
        worst_state <= 1e-10 && worst_norm <= 1e-10,
        format!("max entry diff {worst_state:.1e}, norm rel err {worst_norm:.1e}"),
    ))
}

fn beamsplitter_decomposition() -> Outcome {
    let d = bs_decomposition(cut(40));
    let [l, m, u] = SymplecticMatrix::bs_factors();
    let p = l.dot(&m).dot(&u);
    let bs = SymplecticMatrix::beamsplitter();
    let e = (&p - bs.matrix()).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok((d.residual <= 1e-6 && e <= 1e-14, format!("operator residual {:.1e}, symplectic {e:.1e}", d.residual)))
}

fn dual_pipeline() -> Outcome {
    let families = [
        (AncillaKind::SqueezedP, AncillaKind::SqueezedQ),
        (AncillaKind::Qunaught, AncillaKind::Qunaught),
        (AncillaKind::PEigenstate { t: 0.0 }, AncillaKind::Qunaught),
        (AncillaKind::Qunaught, AncillaKind::QEigenstate { s: 0.0 }),
    ];
    let angles = [(FRAC_PI_2, 0.0), (1.2, 0.3)];
    let ms = [-0.4, 0.0, 0.4];
    let mut jobs = Vec::new();
    for (fi, _) in families.iter().enumerate() {
        for (ai, _) in angles.iter().enumerate() {
            for &ma in &ms {
                for &mb in &ms {
                    jobs.push((fi, ai, ma, mb));
                }
            }
        }
    }
    let eval = |beta: f64, (fi, ai, ma, mb): (usize, usize, f64, f64)| -> Result<f64> {
        let (a, b) = families[fi].clone();
        let (ta, tb) = angles[ai];
        let config = GadgetConfig::new(ta, tb, AncillaSpec::new(a, beta)?, AncillaSpec::new(b, beta)?, cut(60))?;
        dual_pipeline_distance(&config, HomodyneOutcome::new(ma, mb)?)
    };
    let at = |beta: f64| jobs.par_iter().map(|&j| eval(beta, j)).collect::<Result<Vec<f64>>>();
    let (r05, r02) = (at(0.05)?, at(0.02)?);
    let worst = r05.iter().cloned().fold(0.0, f64::max);
    let trend = r05.iter().zip(&r02).all(|(a, b)| trend_ok(&[0.05, 0.02], &[*a, *b]));
    let worst02 = r02.iter().cloned().fold(0.0, f64::max);
    Ok((
        worst <= 5e-3 && trend,
        format!("{} cases, max distance {worst:.1e} at beta 0.05, {worst02:.1e} at 0.02, trend {trend}", jobs.len()),
    ))
}

fn projector_emergence() -> Outcome {
    let case = find_identity("case_ab")?;
    let (a, b) = (case.evaluate(cut(100), 0.05)?, case.evaluate(cut(100), 0.02)?);
    Ok((a <= 5e-2 && b <= 2e-2, format!("distance {a:.1e} at beta 0.05, {b:.1e} at 0.02")))
}

fn bell_pair() -> Outcome {
    let case = find_identity("gkp_bell_qunaught")?;
    let f = 1.0 - case.evaluate(cut(100), 0.05)?;
    Ok((f >= 0.995, format!("fidelity {f:.6}")))
}

fn error_correction() -> Outcome {
    let mean = |variant: Option<EcVariant>| -> Result<f64> {
        let spec = SweepSpec::single(variant, 0.05, 8, 2, 50)?;
        Ok(run_sweep_point(&spec, 0.05, 8)?.mean_fidelity)
    };
    let (ab, none) = (mean(Some(EcVariant::AB))?, mean(None)?);
    let beta = 0.05;
    let zero = gkp_codeword(0, beta, cut(60))?;
    let shifted = displacement(C64::new(0.28 / SQRT_2, 0.0), cut(60)).apply(&zero)?;
    let (out, rec) = ec_step(&EcCase::new(EcVariant::AB, beta)?, &shifted, HomodyneOutcome::zero())?;
    let f = fidelity_up_to_phase(&out, &zero)?;
    Ok((
        ab - none >= 0.05 && rec.shift_bin == (0, 0) && f >= 0.95,
        format!("AB every 2 steps {ab:.3} vs no EC {none:.3}; 0.28 shift bin {:?}, fidelity {f:.4}", rec.shift_bin),
    ))
}

fn identity_suite() -> Outcome {
    let reports = run_all(cut(DEFAULT_CUTOFF), &DEFAULT_BETAS)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    let msg = if failed.is_empty() { format!("{} identities pass", reports.len()) } else { format!("failed: {}", failed.join(", ")) };
    Ok((reports.len() == 16 && failed.is_empty(), msg))
}

fn local_maxima(xs: &[f64], ys: &[f64], floor: f64) -> Vec<f64> {
    (1..ys.len() - 1).filter(|&i| ys[i] > floor && ys[i] >= ys[i - 1] && ys[i] > ys[i + 1]).map(|i| xs[i]).collect()
}

fn figure_data() -> Outcome {
    let beta = 0.0138;
    let grid = cvkraus::harness::parse_grid("-6:6:0.01")?;
    let rp = PI.sqrt();
    let mut worst_peak: f64 = 0.0;
    let mut n_peaks = 0;
    for j in 0..2u8 {
        let psi = comb_gaussian_wavefunction(j, beta, &grid)?;
        let top = psi.iter().cloned().fold(0.0, f64::max);
        for x in local_maxima(&grid, &psi, 0.05 * top) {
            let k = ((x / rp - j as f64) / 2.0).round();
            worst_peak = worst_peak.max((x - (2.0 * k + j as f64) * rp).abs());
            n_peaks += 1;
        }
    }
    // variance of the central spike of the 0 codeword, read as a Gaussian in x
    let psi0 = comb_gaussian_wavefunction(0, beta, &grid)?;
    let win: Vec<(f64, f64)> = grid.iter().zip(&psi0).filter(|(x, _)| x.abs() < rp / 2.0).map(|(x, y)| (*x, *y)).collect();
    let w: f64 = win.iter().map(|p| p.1).sum();
    let var = win.iter().map(|(x, y)| x * x * y).sum::<f64>() / w;
    let var_err = (var - beta).abs() / beta;

    // Fock-basis cross-check at beta 0.1
    let fine = cvkraus::harness::parse_grid("-9:9:0.01")?;
    let mut worst_l2: f64 = 0.0;
    for j in 0..2u8 {
        let fock = wavefunction(&gkp_codeword(j, 0.1, cut(100))?, Quadrature::Q, &fine)?;
        let analytic = comb_gaussian_wavefunction(j, 0.1, &fine)?;
        let rows = wavefunction_rows(&fine, &fock);
        let sign = if rows.iter().zip(&analytic).map(|(r, a)| r.re * a).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let l2 = (rows.iter().zip(&analytic).map(|(r, a)| (sign * r.re - a).powi(2) + r.im * r.im).sum::<f64>() * 0.01).sqrt();
        worst_l2 = worst_l2.max(l2);
    }
    Ok((
        worst_peak <= 0.02 && n_peaks >= 6 && var_err <= 0.1 && worst_l2 <= 0.05,
        format!(
            "{n_peaks} peaks, max offset {worst_peak:.1e}; central variance {var:.5} (rel err {var_err:.1e}); Fock L2 {worst_l2:.1e}"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("convention anchors", convention_anchors),
        ("damping and squeezing equivalence", damping_squeezing),
        ("beamsplitter decomposition", beamsplitter_decomposition),
        ("dual-pipeline Kraus equality", dual_pipeline),
        ("GKP projector emergence", projector_emergence),
        ("GKP Bell pair from qunaughts", bell_pair),
        ("error-correction efficacy", error_correction),
        ("identity-suite completeness", identity_suite),
        ("figure-level wavefunction data", figure_data),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        let secs = t.elapsed().as_secs_f64();
        println!("{} criterion {}: {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
