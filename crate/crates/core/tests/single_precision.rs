//! The kernels run in f32 as well; tolerances here are scaled to its epsilon.

use std::f32::consts::{FRAC_PI_2, PI};

use qbattery::cycle::CycleOptions;
use qbattery::measopt::{daemonic_report, ReportOptions};
use qbattery::model::{battery_init, build_single_mode, charger_init, BatteryInit, ChargerInit};
use qbattery::{evolve_joint, find_tau, repeat_cycles, BatteryChargerModelF32, DensityMatrixF32, Termination};

fn setup(delta: f32) -> (BatteryChargerModelF32, DensityMatrixF32, DensityMatrixF32) {
    let model = build_single_mode(11, 1.0f32, 1.0 - delta, 1.0).unwrap();
    let rb = battery_init(&BatteryInit::Ground, 11, 1.0f32).unwrap().realized;
    let ra = charger_init(ChargerInit::Excited(1), 2).unwrap().realized;
    (model, rb, ra)
}

#[test]
fn vacuum_peak_in_f32() {
    let (model, rb, ra) = setup(0.0);
    let s = find_tau(&model, &rb, &ra, None).unwrap();
    assert!((s.tau.unwrap() - FRAC_PI_2).abs() < 1e-3);
    assert!((s.e_max - 1.0).abs() < 1e-5);
}

#[test]
fn ladder_fills_in_f32() {
    let (model, rb, ra) = setup(0.0);
    let traj = repeat_cycles(&model, &rb, &ra, &CycleOptions::default()).unwrap();
    assert_eq!(traj.terminated, Termination::FullCharge);
    assert_eq!(traj.records.len(), 10);
    for r in &traj.records {
        assert!((r.e_max_m - r.m as f32).abs() < 1e-3, "m = {}: {}", r.m, r.e_max_m);
    }
}

#[test]
fn detuned_gap_in_f32() {
    let delta = 0.1f32;
    let (model, rb, ra) = setup(delta);
    let joint = evolve_joint(&model, &rb, &ra, PI / 2.0).unwrap();
    let rep = daemonic_report(&joint, &model, PI / 2.0, &ReportOptions::default()).unwrap();
    assert!(rep.gap >= -1e-5);
    assert!(rep.daemonic_max + 1e-5 >= rep.daemonic_min);
    assert!(rep.daemonic_min + 1e-5 >= rep.ergotropy);
}
