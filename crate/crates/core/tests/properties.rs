use std::f64::consts::PI;

use num_complex::Complex;
use proptest::prelude::*;

use qbattery::oracle;
use qbattery::{
    advantage, build_single_mode, ComplexMatrix, charge_once_in, charger_init, ergotropy, evolve_joint, kron, measure_charger,
    partial_trace, passive_state, qubit_basis, BatteryChargerModel, ChargerBlocks, ChargerInit, DensityMatrix, Frame,
    HermitianOperator, QubitBasisParams,
};

fn passive_pops(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, d).prop_map(|mut w| {
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

/// Random mixed state built as `A A† / tr`.
fn mixed_state(d: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let a = ComplexMatrix::from_fn(d, d, |i, j| Complex::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        DensityMatrix::from_unnormalized(&a * a.adjoint()).unwrap()
    })
}

fn model(delta: f64) -> BatteryChargerModel {
    build_single_mode(6, 1.0, 1.0 - delta, 1.0).unwrap()
}

fn excited() -> DensityMatrix {
    charger_init(ChargerInit::Excited(1), 2).unwrap().realized
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolved_states_stay_valid(pops in passive_pops(6), t in 0.0f64..10.0, delta in prop::sample::select(vec![0.0, 0.1])) {
        let m = model(delta);
        let rb = DensityMatrix::from_populations(&pops).unwrap();
        let joint = evolve_joint(&m, &rb, &excited(), t).unwrap();
        prop_assert!(joint.validate().is_ok());
        prop_assert!((joint.trace() - 1.0).abs() < 1e-12);
        prop_assert!(joint.eigenvalues()[0] > -1e-12);
        let out = charge_once_in(&m, &rb, &excited(), t, Frame::Lab).unwrap();
        prop_assert!(out.validate().is_ok());
    }

    #[test]
    fn evolution_composes(pops in passive_pops(6), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let m = model(0.1);
        let rb = DensityMatrix::from_populations(&pops).unwrap();
        let joint = m.joint_state(&excited(), &rb).unwrap();
        let p = m.propagator();
        let two_step = p.evolve(t2, &p.evolve(t1, &joint).unwrap()).unwrap();
        let one_step = p.evolve(t1 + t2, &joint).unwrap();
        prop_assert!(max_abs(&(two_step.matrix() - one_step.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_inverts_kron(a in mixed_state(2), b in mixed_state(3)) {
        let ab = DensityMatrix::new(kron(a.matrix(), b.matrix())).unwrap();
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        prop_assert!(max_abs(&(ra.matrix() - a.matrix())) < 1e-12);
        prop_assert!(max_abs(&(rb.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn ergotropy_is_unitarily_invariant_on_passive_states(pops in passive_pops(5), rho in mixed_state(5)) {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let passive = DensityMatrix::from_populations(&pops).unwrap();
        prop_assert!(ergotropy(&passive, &h).unwrap().abs() < 1e-12);
        let e = ergotropy(&rho, &h).unwrap();
        prop_assert!(e >= 0.0);
        let p = passive_state(&rho, &h).unwrap();
        prop_assert!(ergotropy(&p, &h).unwrap().abs() < 1e-10);
        let mean = h.expectation(rho.matrix());
        prop_assert!((mean - h.expectation(p.matrix()) - e).abs() < 1e-10);
    }

    #[test]
    fn ergotropy_is_convex(a in mixed_state(4), b in mixed_state(4), w in 0.0f64..1.0) {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0]);
        let mix = DensityMatrix::new(a.matrix() * Complex::new(w, 0.0) + b.matrix() * Complex::new(1.0 - w, 0.0)).unwrap();
        let lhs = ergotropy(&mix, &h).unwrap();
        let rhs = w * ergotropy(&a, &h).unwrap() + (1.0 - w) * ergotropy(&b, &h).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn measured_ensemble_averages_to_reduced_state(
        pops in passive_pops(6), t in 0.0f64..7.0, alpha in 0.0f64..PI, gamma in 0.0f64..(2.0 * PI),
    ) {
        let m = model(0.1);
        let rb = DensityMatrix::from_populations(&pops).unwrap();
        let joint = evolve_joint(&m, &rb, &excited(), t).unwrap();
        let basis = qubit_basis(QubitBasisParams { alpha, gamma });
        let ens = measure_charger(&joint, &m, &basis).unwrap();
        prop_assert!((ens.total_probability() - 1.0).abs() < 1e-9);
        let reduced = partial_trace(&joint, &m.joint_dims(), &[1]).unwrap();
        prop_assert!(max_abs(&(ens.mixture() - reduced.matrix())) < 1e-9);
        prop_assert!(advantage(&joint, &m, &basis).unwrap() >= -1e-12);
    }

    #[test]
    fn daemonic_ergotropy_ignores_gamma_for_fock_diagonal_inputs(
        pops in passive_pops(6), t in 0.0f64..7.0, alpha in 0.0f64..PI, g1 in 0.0f64..(2.0 * PI), g2 in 0.0f64..(2.0 * PI),
    ) {
        let m = model(0.1);
        let rb = DensityMatrix::from_populations(&pops).unwrap();
        let joint = evolve_joint(&m, &rb, &excited(), t).unwrap();
        let blocks = ChargerBlocks::new(&joint, &m).unwrap();
        let a = blocks.daemonic(qubit_basis(QubitBasisParams { alpha, gamma: g1 }).vectors());
        let b = blocks.daemonic(qubit_basis(QubitBasisParams { alpha, gamma: g2 }).vectors());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn recursion_tracks_dense_populations(pops in passive_pops(6), t in 0.0f64..6.0, delta in prop::sample::select(vec![0.0, 0.1])) {
        let m = model(delta);
        let rb = DensityMatrix::from_populations(&pops).unwrap();
        let out = charge_once_in(&m, &rb, &excited(), t, Frame::Lab).unwrap();
        let r = oracle::recursion_step(&pops, 1.0, delta, t).unwrap();
        for (x, y) in out.populations().iter().zip(&r) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn excitation_number_is_conserved(d in 2usize..8, omega in 0.5f64..2.0, delta in -0.2f64..0.2, g in 0.1f64..2.0) {
        let m = build_single_mode(d, omega, omega - delta, g).unwrap();
        prop_assert!(m.excitation_commutator_norm() <= 1e-12);
    }
}
