//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qbattery::oracle;
use qbattery::{
    battery_init, battery_init_product, build_multimode, build_single_mode, charge_once_in, charger_init,
    daemonic_report, ergotropy, evolve_joint, find_tau, partial_trace, per_mode_ergotropies, qubit_basis,
    repeat_cycles, BasisParams, BatteryChargerModel, BatteryInit, ChargerBlocks, ChargerInit, CycleOptions,
    DaemonicReport, DensityMatrix, Frame, QubitBasisParams, ReportOptions, Termination,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn single(d_b: usize, delta: f64) -> BatteryChargerModel {
    build_single_mode(d_b, 1.0, 1.0 - delta, 1.0).unwrap()
}

fn excited() -> DensityMatrix {
    charger_init(ChargerInit::Excited(1), 2).unwrap().realized
}

fn battery(kind: BatteryInit<f64>, d_b: usize) -> DensityMatrix {
    battery_init(&kind, d_b, 1.0).unwrap().realized
}

/// Report at `t` for one cycle from `rho_b`.
fn report_at(model: &BatteryChargerModel, rho_b: &DensityMatrix, rho_a: &DensityMatrix, t: f64) -> DaemonicReport {
    let joint = evolve_joint(model, rho_b, rho_a, t).unwrap();
    daemonic_report(&joint, model, t, &ReportOptions::default()).unwrap()
}

fn argmin_alpha(rep: &DaemonicReport) -> f64 {
    match &rep.argmin_params {
        BasisParams::Qubit(p) => p.alpha,
        other => panic!("expected qubit parameters, got {other:?}"),
    }
}

fn vacuum_equivalence() -> Outcome {
    let start = Instant::now();
    let model = single(11, 0.0);
    let rb = battery(BatteryInit::Ground, 11);
    let ra = excited();
    let bases: Vec<_> = (0..37)
        .flat_map(|i| (0..24).map(move |j| (PI * i as f64 / 36.0, 2.0 * PI * j as f64 / 24.0)))
        .map(|(alpha, gamma)| qubit_basis(QubitBasisParams { alpha, gamma }))
        .collect();
    let worst = (0..401)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 400.0;
            let joint = evolve_joint(&model, &rb, &ra, t).unwrap();
            let blocks = ChargerBlocks::new(&joint, &model).unwrap();
            let reduced = partial_trace(&joint, &model.joint_dims(), &[1]).unwrap();
            let e = ergotropy(&reduced, &model.battery_hamiltonian()).unwrap();
            let want_e = (t.sin().powi(2) - t.cos().powi(2)).max(0.0);
            let want_d = t.sin().powi(2);
            let mut w = (e - want_e).abs().max((blocks.ergotropy() - want_e).abs());
            for b in &bases {
                w = w.max((blocks.daemonic(b.vectors()) - want_d).abs());
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-9 && secs < 5.0,
        format!("max deviation {worst:.2e} (tol 1e-9), runtime {secs:.2} s (limit 5 s)"),
    )
}

fn detuned_gap() -> Outcome {
    let rb = battery(BatteryInit::Ground, 11);
    let ra = excited();
    let mut lines = Vec::new();
    let mut ok = true;
    for delta in [0.02, 0.05, 0.1] {
        let model = single(11, delta);
        let tau = find_tau(&model, &rb, &ra, None).unwrap().tau.unwrap();
        let rep = report_at(&model, &rb, &ra, tau);
        let want = oracle::gap_vacuum(1.0, delta, 1.0);
        let err = (rep.gap - want).abs();
        ok &= err <= 1e-6;
        lines.push(format!("delta {delta}: L {:.6e} vs {want:.6e} (err {err:.1e})", rep.gap));
    }
    let model = single(11, 0.0);
    let tau = find_tau(&model, &rb, &ra, None).unwrap().tau.unwrap();
    let rep = report_at(&model, &rb, &ra, tau);
    ok &= rep.gap.abs() <= 1e-9 && rep.band.abs() <= 1e-9;
    lines.push(format!("delta 0: L {:.1e}, band {:.1e} (tol 1e-9)", rep.gap, rep.band));
    ensure(ok, format!("{} (tol 1e-6)", lines.join("; ")))
}

fn resonant_ladder() -> Outcome {
    let start = Instant::now();
    let model = single(11, 0.0);
    let traj = repeat_cycles(&model, &battery(BatteryInit::Ground, 11), &excited(), &CycleOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut worst_e: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for r in &traj.records {
        worst_e = worst_e.max((r.e_max_m - r.m as f64).abs());
        worst_t = worst_t.max((r.tau_m - PI / (2.0 * (r.m as f64).sqrt())).abs());
    }
    ensure(
        traj.terminated == Termination::FullCharge
            && traj.records.len() == 10
            && worst_e <= 1e-9
            && worst_t <= 1e-8
            && secs < 10.0,
        format!(
            "{} cycles ({:?}), max |E - m| {worst_e:.1e} (tol 1e-9), max tau error {worst_t:.1e} (tol 1e-8), runtime {secs:.2} s (limit 10 s)",
            traj.records.len(),
            traj.terminated
        ),
    )
}

fn detuned_slowdown() -> Outcome {
    let model = single(11, 0.1);
    let traj = repeat_cycles(&model, &battery(BatteryInit::Ground, 11), &excited(), &CycleOptions::default()).unwrap();
    let at10 = traj.records.get(9).map(|r| r.e_max_m).unwrap_or(f64::NAN);
    ensure(
        traj.terminated == Termination::FullCharge && traj.records.len() > 10,
        format!(
            "{} cycles ({:?}), E after 10 cycles {at10:.6}",
            traj.records.len(),
            traj.terminated
        ),
    )
}

/// Random passive populations on `d` levels.
fn random_passive(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => battery(BatteryInit::Thermal { beta: rng.random_range(0.2..3.0) }, d).populations(),
        1 => {
            let r0 = rng.random_range(0.5..1.0);
            let mut p = vec![0.0; d];
            p[0] = r0;
            p[1] = 1.0 - r0;
            p
        }
        _ => {
            let mut w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        }
    }
}

fn recursion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ra = excited();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let delta = if case % 2 == 0 { 0.0 } else { 0.1 };
        let model = single(11, delta);
        let pops = random_passive(&mut rng, 11);
        let t = rng.random_range(0.05..6.0);
        let m = rng.random_range(1..=5);
        let mut rho = DensityMatrix::from_populations(&pops).unwrap();
        let mut r = pops;
        for _ in 0..m {
            rho = charge_once_in(&model, &rho, &ra, t, Frame::Lab).unwrap();
            r = oracle::recursion_step(&r, 1.0, delta, t).unwrap();
        }
        for (a, b) in rho.populations().iter().zip(&r) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-10, format!("50 cases, max population deviation {worst:.1e} (tol 1e-10)"))
}

fn spot_checks() -> Outcome {
    let ra = excited();
    let mut ok = true;
    let mut lines = Vec::new();

    let model = single(11, 0.1);
    let rb = battery(BatteryInit::Truncated(vec![0.9, 0.1]), 11);
    let tau = find_tau(&model, &rb, &ra, None).unwrap().tau.unwrap();
    let rep = report_at(&model, &rb, &ra, tau);
    let alpha = argmin_alpha(&rep);
    ok &= (rep.gap - 2e-3).abs() <= 1e-3 && alpha.abs() <= 0.02 * PI;
    lines.push(format!("trunc2 delta 0.1: L {:.3e}, alpha {:.4}pi", rep.gap, alpha / PI));

    let rb = battery(BatteryInit::Truncated(vec![0.43, 0.42, 0.15]), 11);
    for (delta, want_l, want_a) in [(0.0, 1.1e-2, 0.12), (0.1, 1.4e-2, 0.14)] {
        let model = single(11, delta);
        let tau = find_tau(&model, &rb, &ra, None).unwrap().tau.unwrap();
        let t = (tau / PI * 100.0).round() / 100.0 * PI;
        let rep = report_at(&model, &rb, &ra, t);
        let alpha = argmin_alpha(&rep);
        let case_ok = (tau - 1.46 * PI).abs() <= 0.01 * PI
            && (rep.gap - want_l).abs() <= 2e-3
            && (alpha / PI - want_a).abs() <= 0.02;
        ok &= case_ok;
        lines.push(format!(
            "trunc3 delta {delta}: tau {:.4}pi, L {:.3e} at {:.2}pi, alpha {:.4}pi",
            tau / PI,
            rep.gap,
            t / PI,
            alpha / PI
        ));
    }
    ensure(ok, lines.join("; "))
}

fn thermal_window() -> Outcome {
    let model = single(11, 0.0);
    let ra = excited();
    let betas = [0.5, 1.0, 1.7, 2.0, 3.0, 5.0, 10.0];
    let rows: Vec<(f64, f64, DaemonicReport)> = betas
        .iter()
        .map(|&beta| {
            let rb = battery(BatteryInit::Thermal { beta }, 11);
            let s = find_tau(&model, &rb, &ra, None).unwrap();
            (beta, s.e_max, report_at(&model, &rb, &ra, s.tau.unwrap()))
        })
        .collect();
    let mut ok = true;
    for (beta, _, rep) in &rows {
        ok &= if *beta >= 1.7 {
            rep.gapless && rep.gap <= 1e-3
        } else {
            !rep.gapless && rep.gap > 1e-3
        };
    }
    for w in rows.windows(2) {
        ok &= w[1].1 < w[0].1 && w[1].2.daemonic_min < w[0].2.daemonic_min;
        ok &= w[1].1 >= 1.0 - 1e-9 && w[1].2.daemonic_min >= 1.0 - 1e-9;
    }
    let e2 = rows[3].1;
    ok &= (e2 - 1.0).abs() <= 0.02;
    let gaps: Vec<String> = rows.iter().map(|(b, _, r)| format!("{b}:{:.1e}", r.gap)).collect();
    ensure(ok, format!("L by beta [{}], E(beta=2) {e2:.5}", gaps.join(" ")))
}

fn two_mode() -> BatteryChargerModel {
    build_multimode(&[3, 3], &[0.8, 1.0], &[0.0, 0.8, 1.0], 1.0).unwrap()
}

fn superposition(theta: f64) -> DensityMatrix {
    charger_init(ChargerInit::Superposition { theta, phi: 0.0 }, 3).unwrap().realized
}

fn double_mode() -> Outcome {
    let model = two_mode();
    let ground = battery_init_product(&BatteryInit::Ground, &model).unwrap();
    let thr = 1e-9 * model.min_frequency();

    // (a) never both modes in the first cycle
    let mut worst_a: f64 = 0.0;
    for theta in [0.3, PI / 2.0, 2.5] {
        let ra = superposition(theta);
        for k in 0..401 {
            let t = 2.0 * PI * k as f64 / 400.0;
            let rho = charge_once_in(&model, &ground, &ra, t, Frame::Rotating).unwrap();
            let e = per_mode_ergotropies(&rho, &model).unwrap();
            worst_a = worst_a.max(e[0].min(e[1]));
        }
    }
    let ok_a = worst_a <= 1e-12;

    // (b) second cycle: simultaneous exactly inside the θ window
    let tau2 = PI / (2.0 * 2f64.sqrt());
    let probe = repeat_cycles(
        &model,
        &ground,
        &superposition(PI / 2.0),
        &CycleOptions { max_cycles: 2, ..CycleOptions::default() },
    )
    .unwrap();
    let tau2_found = probe.records.get(1).map(|r| r.tau_m).unwrap_or(f64::NAN);
    let n = 73;
    let step = PI / (n - 1) as f64;
    let boundaries = [(1.0f64 / 3.0).sqrt().asin() * 2.0, (2.0f64 / 3.0).sqrt().asin() * 2.0];
    let mismatches: Vec<f64> = (0..n)
        .into_par_iter()
        .filter_map(|k| {
            let theta = k as f64 * step;
            let ra = superposition(theta);
            let tau1 = find_tau(&model, &ground, &ra, None).unwrap().tau?;
            let after1 = charge_once_in(&model, &ground, &ra, tau1, Frame::Rotating).unwrap();
            let after2 = charge_once_in(&model, &after1, &ra, tau2, Frame::Rotating).unwrap();
            let e = per_mode_ergotropies(&after2, &model).unwrap();
            let sim = e[0] > thr && e[1] > thr;
            let near = boundaries.iter().any(|b| (theta - b).abs() <= step);
            (sim != oracle::simultaneous_window(theta) && !near).then_some(theta)
        })
        .collect();
    let ok_b = mismatches.is_empty() && (tau2_found - tau2).abs() <= 1e-8;

    // (c) collective battery gapless at τ
    let ra = superposition(PI / 3.0);
    let tau = find_tau(&model, &ground, &ra, None).unwrap().tau.unwrap();
    let rep = report_at(&model, &ground, &ra, tau);
    let ok_c = rep.gap.abs() <= 1e-6;

    ensure(
        ok_a && ok_b && ok_c,
        format!(
            "(a) max min-mode ergotropy {worst_a:.1e} (tol 1e-12); (b) tau2 {tau2_found:.10} vs {tau2:.10}, {} theta mismatches of {n}; (c) L {:.1e} (tol 1e-6)",
            mismatches.len(),
            rep.gap
        ),
    )
}

fn structural() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_state: f64 = 0.0;
    let mut invalid = 0;
    let mut worst_dominance: f64 = 0.0;
    let mut worst_mixture: f64 = 0.0;
    let mut worst_gamma: f64 = 0.0;

    let mut worst_exc: f64 = 0.0;
    for delta in [0.0, 0.1] {
        worst_exc = worst_exc.max(single(11, delta).excitation_commutator_norm());
    }
    worst_exc = worst_exc.max(two_mode().excitation_commutator_norm());

    let ra = excited();
    for case in 0..40 {
        let delta = if case % 2 == 0 { 0.0 } else { 0.1 };
        let model = single(8, delta);
        let rb = DensityMatrix::from_populations(&random_passive(&mut rng, 8)).unwrap();
        let t = rng.random_range(0.0..7.0);
        let joint = evolve_joint(&model, &rb, &ra, t).unwrap();
        let reduced = charge_once_in(&model, &rb, &ra, t, Frame::Lab).unwrap();
        for s in [&joint, &reduced] {
            invalid += usize::from(s.validate().is_err());
            let eig = s.eigenvalues();
            worst_state = worst_state.max((s.trace() - 1.0).abs()).max(-eig[0]);
        }
        let blocks = ChargerBlocks::new(&joint, &model).unwrap();
        let e = blocks.ergotropy();
        let alpha = rng.random_range(0.0..PI);
        let gamma = rng.random_range(0.0..2.0 * PI);
        let basis = qubit_basis(QubitBasisParams { alpha, gamma });
        let d = blocks.daemonic(basis.vectors());
        worst_dominance = worst_dominance.max(e - d);
        let ens = qbattery::measure_charger(&joint, &model, &basis).unwrap();
        for o in &ens.outcomes {
            invalid += usize::from(o.state.validate().is_err());
        }
        worst_mixture = worst_mixture.max((ens.mixture() - reduced.matrix()).camax());
        let shifted = qubit_basis(QubitBasisParams { alpha, gamma: gamma + rng.random_range(0.0..2.0 * PI) });
        worst_gamma = worst_gamma.max((blocks.daemonic(shifted.vectors()) - d).abs());
    }
    ensure(
        invalid == 0
            && worst_state <= 1e-10
            && worst_exc <= 1e-12
            && worst_dominance <= 1e-12
            && worst_mixture <= 1e-9
            && worst_gamma <= 1e-9,
        format!(
            "{invalid} invalid states, state defect {worst_state:.1e}, |[H,N]| {worst_exc:.1e} (tol 1e-12), E - daemonic {worst_dominance:.1e}, mixture {worst_mixture:.1e} (tol 1e-9), gamma shift {worst_gamma:.1e} (tol 1e-9)"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 vacuum closed forms", vacuum_equivalence),
        ("2 detuned daemonic gap", detuned_gap),
        ("3 resonant charging ladder", resonant_ladder),
        ("4 detuned slowdown", detuned_slowdown),
        ("5 population recursion vs dense", recursion_oracle),
        ("6 numeric spot checks", spot_checks),
        ("7 thermal gapless window", thermal_window),
        ("8 double-mode charging", double_mode),
        ("9 structural properties", structural),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (tag, detail) = match std::panic::catch_unwind(run) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        failed += usize::from(tag == "FAIL");
        println!("{tag} criterion {name}: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
