//! Regression checks of the simulation against the closed forms. Each check
//! is cheap enough to run on every invocation of the CLI `verify` command.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cycle::{charge_once_in, find_tau, per_mode_ergotropies, repeat_cycles, CycleOptions, Frame, Termination};
use crate::ergo::ChargerBlocks;
use crate::error::Result;
use crate::measopt::{daemonic_report, qubit_basis, OptBudget, QubitBasisParams, ReportOptions};
use crate::model::{battery_init, battery_init_product, build_multimode, build_single_mode, charger_init, BatteryInit, ChargerInit};
use crate::oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn vacuum_closed_forms() -> Result<Check> {
    let model = build_single_mode(11, 1.0, 1.0, 1.0)?;
    let rb = battery_init(&BatteryInit::Ground, 11, 1.0)?.realized;
    let ra = charger_init(ChargerInit::Excited(1), 2)?.realized;
    let joint = model.joint_state(&ra, &rb)?;
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let t = 2.0 * PI * i as f64 / 40.0;
        let rho = model.propagator().evolve(t, &joint)?;
        let blocks = ChargerBlocks::new(&rho, &model)?;
        worst = worst.max((blocks.ergotropy() - oracle::ergo_vacuum(1.0, 0.0, 1.0, t)?).abs());
        for (alpha, gamma) in [(0.0, 0.0), (1.0, 2.0), (PI, 4.0)] {
            let b = qubit_basis(QubitBasisParams { alpha, gamma });
            let d = blocks.daemonic(b.vectors());
            worst = worst.max((d - oracle::daemonic_vacuum(1.0, 0.0, 1.0, t)?).abs());
        }
    }
    Ok(check("vacuum ergotropy and daemonic ergotropy", worst <= 1e-9, format!("max deviation {worst:.3e}")))
}

fn detuned_gap() -> Result<Check> {
    let delta = 0.1;
    let model = build_single_mode(11, 1.0, 1.0 - delta, 1.0)?;
    let rb = battery_init(&BatteryInit::Ground, 11, 1.0)?.realized;
    let ra = charger_init(ChargerInit::Excited(1), 2)?.realized;
    let tau = find_tau(&model, &rb, &ra, None)?.tau.unwrap_or(f64::NAN);
    let rho = model.propagator().evolve(tau, &model.joint_state(&ra, &rb)?)?;
    let opts = ReportOptions {
        budget: OptBudget {
            alpha_points: 37,
            gamma_points: 24,
            ..OptBudget::default()
        },
        ..ReportOptions::default()
    };
    let rep = daemonic_report(&rho, &model, tau, &opts)?;
    let want = oracle::gap_vacuum(1.0, delta, 1.0);
    let err = (rep.gap - want).abs();
    Ok(check("detuned gap at tau", err <= 1e-6, format!("gap {:.6e}, closed form {want:.6e}", rep.gap)))
}

fn resonant_ladder() -> Result<Check> {
    let model = build_single_mode(11, 1.0, 1.0, 1.0)?;
    let rb = battery_init(&BatteryInit::Ground, 11, 1.0)?.realized;
    let ra = charger_init(ChargerInit::Excited(1), 2)?.realized;
    let traj = repeat_cycles(&model, &rb, &ra, &CycleOptions::default())?;
    let mut worst_e: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for r in &traj.records {
        worst_e = worst_e.max((r.e_max_m - r.m as f64).abs());
        worst_t = worst_t.max((r.tau_m - oracle::tau_ladder(r.m, 1.0)).abs());
    }
    let ok = traj.terminated == Termination::FullCharge && traj.records.len() == 10 && worst_e <= 1e-9 && worst_t <= 1e-8;
    Ok(check(
        "resonant ladder fills in d_b - 1 cycles",
        ok,
        format!("{} cycles, max |E - m| {worst_e:.2e}, max tau error {worst_t:.2e}", traj.records.len()),
    ))
}

fn recursion_vs_dense() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ra = charger_init(ChargerInit::Excited(1), 2)?.realized;
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let delta = if case % 2 == 0 { 0.0 } else { 0.1 };
        let model = build_single_mode(6, 1.0, 1.0 - delta, 1.0)?;
        let beta = 0.3 + 2.0 * rng.random::<f64>();
        let t = 3.0 * rng.random::<f64>();
        let mut rb = battery_init(&BatteryInit::Thermal { beta }, 6, 1.0)?.realized;
        let mut r = rb.populations();
        for _ in 0..3 {
            rb = charge_once_in(&model, &rb, &ra, t, Frame::Lab)?;
            r = oracle::recursion_step(&r, 1.0, delta, t)?;
        }
        for (a, b) in rb.populations().iter().zip(&r) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(check("population recursion matches dense evolution", worst <= 1e-10, format!("max deviation {worst:.3e}")))
}

fn two_mode_cycles() -> Result<Check> {
    let model = build_multimode(&[3, 3], &[0.8, 1.0], &[0.0, 0.8, 1.0], 1.0)?;
    let rb = battery_init_product(&BatteryInit::Ground, &model)?;
    let mut never_first = true;
    for theta in [0.3, PI / 2.0, 2.5] {
        let ra = charger_init(ChargerInit::Superposition { theta, phi: 0.0 }, 3)?.realized;
        for i in 1..=50 {
            let t = 2.0 * PI * i as f64 / 50.0;
            let out = charge_once_in(&model, &rb, &ra, t, Frame::Rotating)?;
            let e = per_mode_ergotropies(&out, &model)?;
            never_first &= e[0].min(e[1]) <= 1e-12;
        }
    }
    let ra = charger_init(ChargerInit::Superposition { theta: PI / 2.0, phi: 0.0 }, 3)?.realized;
    let traj = repeat_cycles(&model, &rb, &ra, &CycleOptions { max_cycles: 2, ..CycleOptions::default() })?;
    let sim = crate::cycle::simultaneous_charging_check(&traj);
    let ok = never_first && sim == [false, true];
    Ok(check(
        "two modes charge together only from the second cycle",
        ok,
        format!("first cycle never simultaneous: {never_first}, per-cycle flags {sim:?}"),
    ))
}

fn excitation_conservation() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for delta in [0.0, 0.1] {
        worst = worst.max(build_single_mode(11, 1.0, 1.0 - delta, 1.0)?.excitation_commutator_norm());
    }
    worst = worst.max(build_multimode(&[3, 4], &[0.8, 1.0], &[0.0, 0.8, 1.0], 1.0)?.excitation_commutator_norm());
    Ok(check("excitation number is conserved", worst <= 1e-12, format!("max |[H, N]| {worst:.2e}")))
}

/// Runs every check; an error inside a check counts as a failure.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<Check>); 6] = [
        ("vacuum ergotropy and daemonic ergotropy", vacuum_closed_forms),
        ("detuned gap at tau", detuned_gap),
        ("resonant ladder fills in d_b - 1 cycles", resonant_ladder),
        ("population recursion matches dense evolution", recursion_vs_dense),
        ("two modes charge together only from the second cycle", two_mode_cycles),
        ("excitation number is conserved", excitation_conservation),
    ];
    checks
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| check(name, false, format!("error: {e}"))))
        .collect()
}
