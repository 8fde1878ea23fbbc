use cvkraus::fock_core::{
    apply_two_mode, number, overlap, quadratures, tensor, Cutoff, FockOperator, FockState, NormKind,
};
use cvkraus::operators::{
    beamsplitter, damping, displacement, heisenberg_residual, phase_delay, shear_p, shear_q, squeeze, v_gate,
    SqueezeParam, SymplecticMatrix,
};
use cvkraus::special::{comb_sites, comb_sum};
use cvkraus::states::{gkp_codeword, gkp_plus_minus, qunaught, squeezed_vacuum_p, squeezed_vacuum_q};
use cvkraus::C64;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn vec_c(v: &[(f64, f64)]) -> Array1<C64> {
    v.iter().map(|&(a, b)| C64::new(a, b)).collect()
}

fn amps(len: usize) -> impl Strategy<Value = Array1<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(|v| vec_c(&v))
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn unitarity_defect(u: &FockOperator, k: usize) -> f64 {
    let p = u.dagger().matrix().dot(u.matrix());
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let e = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((p[[i, j]] - e).norm());
        }
    }
    worst
}

#[test]
fn ladder_quadratures_hermitian_and_transpose_rules() {
    for n in [2, 7, 40] {
        let cut = Cutoff::new(n).unwrap();
        let (q, p) = quadratures(cut);
        let num = number(cut);
        assert_eq!(q.matrix(), q.dagger().matrix());
        assert_eq!(p.matrix(), p.dagger().matrix());
        assert_eq!(num.matrix(), num.dagger().matrix());
        // position-basis transpose: q real symmetric, p imaginary antisymmetric
        assert_eq!(q.transpose().matrix(), q.matrix());
        assert_eq!(p.transpose().matrix(), &p.matrix().mapv(|z| -z));
        assert!(q.matrix().iter().all(|z| z.im == 0.0));
        assert!(p.matrix().iter().all(|z| z.re == 0.0));
    }
}

#[test]
fn beamsplitter_conserves_number_and_commutes_with_damping() {
    let n = 20;
    let cut = Cutoff::new(n).unwrap();
    let b = beamsplitter(cut);
    let id = FockOperator::identity(vec![n]);
    let num = number(cut);
    let total = tensor(&num, &id).matrix() + tensor(&id, &num).matrix();
    let comm = b.matrix().dot(&total) - total.dot(b.matrix());
    assert!(max_abs(&comm) < 1e-12, "[B, n1 + n2] = {}", max_abs(&comm));
    for beta in [0.05, 0.3] {
        let d = damping(beta, cut).unwrap();
        let dd = tensor(&d, &d);
        let comm = b.matrix().dot(dd.matrix()) - dd.matrix().dot(b.matrix());
        assert!(max_abs(&comm) < 1e-12, "[N x N, B] at beta {beta}: {}", max_abs(&comm));
    }
}

#[test]
fn comb_sum_is_converged_in_sites() {
    let rp = std::f64::consts::PI.sqrt();
    for (period, offset) in [(2.0 * rp, 0.0), (2.0 * rp, rp), ((2.0 * std::f64::consts::PI).sqrt(), 0.0)] {
        let nmax = 120;
        let sites = comb_sites(period, offset, 0.0, nmax);
        let mut more = sites.clone();
        let lo = sites.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sites.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        more.push(lo - period);
        more.push(hi + period);
        let (a, b) = (comb_sum(&sites, nmax), comb_sum(&more, nmax));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "one more site changed an amplitude by {}", (x - y).abs());
        }
    }
}

#[test]
fn apply_two_mode_matches_dense_embedding() {
    let d = 4;
    let n3 = d * d * d;
    let amps: Array1<C64> = (0..n3).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
    let state = FockState::new(amps.clone(), vec![d, d, d], NormKind::Density).unwrap();
    let op_m = Array2::from_shape_fn((d * d, d * d), |(i, j)| C64::new((i * 7 + j) as f64 * 0.013, (i as f64 - j as f64) * 0.02));
    let op = FockOperator::new(op_m.clone(), vec![d, d]).unwrap();
    for modes in [(0, 1), (1, 2), (0, 2), (2, 0)] {
        let got = apply_two_mode(&op, &state, modes).unwrap();
        // oracle: explicit index sums
        let mut want = Array1::<C64>::zeros(n3);
        for i0 in 0..d {
            for i1 in 0..d {
                for i2 in 0..d {
                    let idx = [i0, i1, i2];
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..d {
                        for b in 0..d {
                            let mut src = idx;
                            src[modes.0] = a;
                            src[modes.1] = b;
                            let row = idx[modes.0] * d + idx[modes.1];
                            acc += op_m[[row, a * d + b]] * amps[src[0] * d * d + src[1] * d + src[2]];
                        }
                    }
                    want[i0 * d * d + i1 * d + i2] = acc;
                }
            }
        }
        let err = (got.amplitudes() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12, "modes {modes:?}: {err}");
    }
}

#[test]
fn unit_constructors_are_normalized() {
    let cut = Cutoff::new(100).unwrap();
    for beta in [0.1, 0.2, 0.5] {
        let states = [
            gkp_codeword(0, beta, cut).unwrap(),
            gkp_codeword(1, beta, cut).unwrap(),
            gkp_plus_minus(true, beta, cut).unwrap(),
            gkp_plus_minus(false, beta, cut).unwrap(),
            qunaught(beta, cut).unwrap(),
        ];
        for s in &states {
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }
    for zeta in [0.4, 1.0, 2.0] {
        assert!((squeezed_vacuum_q(zeta, cut).unwrap().norm() - 1.0).abs() < 1e-10);
        assert!((squeezed_vacuum_p(zeta, cut).unwrap().norm() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tensor_is_associative(a in amps(3), b in amps(4), c in amps(2)) {
        let (a, b, c) = (
            FockState::single(a, NormKind::Density),
            FockState::single(b, NormKind::Density),
            FockState::single(c, NormKind::Density),
        );
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        let err = (left.amplitudes() - right.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-15, "{}", err);
        prop_assert_eq!(left.dims(), right.dims());
    }

    #[test]
    fn overlap_is_conjugate_symmetric(a in amps(6), b in amps(6)) {
        let a = FockState::single(a, NormKind::Density);
        let b = FockState::single(b, NormKind::Density);
        let (ab, ba) = (overlap(&a, &b).unwrap(), overlap(&b, &a).unwrap());
        prop_assert!((ab - ba.conj()).norm() <= 1e-14 * (1.0 + ab.norm()));
    }

    #[test]
    fn symplectic_compositions_stay_symplectic(
        th in -3.0f64..3.0, z in 0.2f64..3.0, s in -2.0f64..2.0, ta in 0.3f64..2.8, tb in -0.2f64..0.2,
    ) {
        let m = SymplecticMatrix::rotation(th)
            .compose(&SymplecticMatrix::squeeze(SqueezeParam::new(z).unwrap()))
            .compose(&SymplecticMatrix::shear_q(s))
            .compose(&SymplecticMatrix::shear_p(-s))
            .compose(&SymplecticMatrix::v_gate(ta, tb).unwrap());
        prop_assert!(m.is_symplectic(1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gaussian_unitaries_are_unitary_with_matching_heisenberg_action(
        re in -1.0f64..1.0, im in -1.0f64..1.0, z in 0.8f64..1.25, th in -3.0f64..3.0, s in -0.5f64..0.5,
        ta in 1.35f64..1.8, tb in -0.1f64..0.1,
    ) {
        // squeezing pushes columns past the cutoff, so only a low block is
        // checked; at these parameters it stays well inside
        let cut = Cutoff::new(40).unwrap();
        let k = 10;
        let zeta = SqueezeParam::new(z).unwrap();
        prop_assert!(unitarity_defect(&displacement(C64::new(re, im), cut), k) < 1e-8);
        let checks = [
            (phase_delay(th, cut), SymplecticMatrix::rotation(th)),
            (squeeze(zeta, cut), SymplecticMatrix::squeeze(zeta)),
            (shear_q(s, cut), SymplecticMatrix::shear_q(s)),
            (shear_p(s, cut), SymplecticMatrix::shear_p(s)),
            (v_gate(ta, tb, cut).unwrap(), SymplecticMatrix::v_gate(ta, tb).unwrap()),
        ];
        for (u, sm) in &checks {
            prop_assert!(unitarity_defect(u, k) < 1e-8);
            // the Heisenberg check needs one extra row of q and p
            let r = heisenberg_residual(u, sm, k - 1).unwrap();
            prop_assert!(r < 1e-8, "heisenberg residual {}", r);
        }
    }
}
