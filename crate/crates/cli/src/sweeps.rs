//! The sweeps behind each subcommand. Rows are computed in parallel and
//! collected in grid order, so output does not depend on scheduling.

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use qbattery::{
    battery_init, battery_init_product, charger_init, daemonic_report, evolve_joint, find_tau, qubit_basis,
    repeat_cycles, simultaneous_charging_check, BatteryInit, ChargerBlocks, ChargerInit, CycleOptions, DensityMatrix,
    QubitBasisParams,
};

use crate::config::Settings;
use crate::table::{Cell, Table};

fn excited_qubit() -> Result<DensityMatrix> {
    Ok(charger_init(ChargerInit::Excited(1), 2)?.realized)
}

fn single_battery(s: &Settings, kind: &BatteryInit<f64>, d: usize) -> Result<DensityMatrix> {
    Ok(battery_init(kind, d, s.single_omega()?)?.realized)
}

/// Ergotropy and the daemonic extremes along the time grid.
pub fn time_sweep(s: &Settings) -> Result<Table> {
    let model = s.single_model()?;
    let rb = single_battery(s, &s.init, model.battery_dim())?;
    let ra = excited_qubit()?;
    let opts = s.report_options();
    let rows = s
        .tgrid
        .points()
        .into_par_iter()
        .map(|t| -> Result<Vec<Cell>> {
            let joint = evolve_joint(&model, &rb, &ra, t)?;
            let r = daemonic_report(&joint, &model, t, &opts)?;
            Ok(vec![t.into(), r.ergotropy.into(), r.daemonic_min.into(), r.daemonic_max.into(), r.gap.into(), r.band.into()])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["t", "ergotropy", "daemonic_min", "daemonic_max", "gap", "band"]);
    table.rows = rows;
    Ok(table)
}

/// Thermal batteries: optimal cycle time, peak ergotropy and daemonic gap
/// against the inverse temperature.
pub fn beta_sweep(s: &Settings) -> Result<Table> {
    let model = s.single_model()?;
    let ra = excited_qubit()?;
    let opts = s.report_options();
    let rows = s
        .betas
        .par_iter()
        .map(|&beta| -> Result<(Vec<Cell>, bool)> {
            let rb = single_battery(s, &BatteryInit::Thermal { beta }, model.battery_dim())?;
            let found = find_tau(&model, &rb, &ra, None)?;
            let Some(tau) = found.tau else {
                warn!("beta {beta}: no ergotropy in the search window");
                return Ok((vec![beta.into(), f64::NAN.into(), 0.0.into(), 0.0.into(), 0.0.into()], true));
            };
            let joint = evolve_joint(&model, &rb, &ra, tau)?;
            let r = daemonic_report(&joint, &model, tau, &opts)?;
            Ok((
                vec![beta.into(), tau.into(), found.e_max.into(), r.daemonic_min.into(), r.gap.into()],
                r.gapless,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gapless: Vec<String> = s
        .betas
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.1)
        .map(|(b, _)| b.to_string())
        .collect();
    info!("gapless (gap <= {}) at beta: {}", s.gapless_threshold, gapless.join(", "));
    let mut table = Table::new(&["beta", "tau", "e_max", "daemonic_min", "gap"]);
    table.rows = rows.into_iter().map(|r| r.0).collect();
    Ok(table)
}

/// One row per charging cycle with the battery populations after it.
pub fn repeat_charge(s: &Settings) -> Result<Table> {
    let model = s.single_model()?;
    let rb = single_battery(s, &s.init, model.battery_dim())?;
    let opts = CycleOptions {
        max_cycles: s.cycles,
        daemonic: Some(s.report_options()),
        ..CycleOptions::default()
    };
    let traj = repeat_cycles(&model, &rb, &excited_qubit()?, &opts)?;
    info!(
        "{} cycles, terminated: {:?}, first gapless cycle: {}",
        traj.records.len(),
        traj.terminated,
        traj.first_gapless.map_or("none".to_string(), |m| m.to_string())
    );
    let mut header = vec!["m".to_string(), "tau_m".into(), "e_max_m".into()];
    header.extend((0..model.battery_dim()).map(|n| format!("pop_{n}")));
    let rows = traj
        .records
        .iter()
        .map(|r| {
            let mut row: Vec<Cell> = vec![r.m.into(), r.tau_m.into(), r.e_max_m.into()];
            row.extend(r.battery_populations.iter().map(|&p| Cell::from(p)));
            row
        })
        .collect();
    Ok(Table { header, rows })
}

/// Two-mode battery charged by a superposed three-level charger.
pub fn double_mode(s: &Settings) -> Result<Table> {
    let model = s.double_model()?;
    let rb = battery_init_product(&s.init, &model)?;
    let ra = charger_init(ChargerInit::Superposition { theta: s.theta, phi: s.phi }, 3)?.realized;
    let opts = CycleOptions {
        max_cycles: s.cycles,
        ..CycleOptions::default()
    };
    let traj = repeat_cycles(&model, &rb, &ra, &opts)?;
    info!("{} cycles, terminated: {:?}", traj.records.len(), traj.terminated);
    let sim = simultaneous_charging_check(&traj);
    let mut table = Table::new(&["m", "tau_m", "e_b", "e_b1", "e_b2", "simultaneous"]);
    for (r, flag) in traj.records.iter().zip(sim) {
        table.rows.push(vec![
            r.m.into(),
            r.tau_m.into(),
            r.e_max_m.into(),
            r.per_mode_ergotropy[0].into(),
            r.per_mode_ergotropy[1].into(),
            flag.into(),
        ]);
    }
    Ok(table)
}

/// Daemonic advantage of a two-level truncated battery at its optimal cycle
/// time, over the grid of ground population and measurement angle.
pub fn landscape(s: &Settings) -> Result<Table> {
    let model = s.single_model()?;
    let ra = excited_qubit()?;
    let alphas = s.alphagrid.points();
    let blocks = s
        .r0grid
        .points()
        .into_par_iter()
        .map(|r0| -> Result<Vec<Vec<Cell>>> {
            let kind = BatteryInit::Truncated(vec![r0, 1.0 - r0]);
            let rb = single_battery(s, &kind, model.battery_dim()).with_context(|| format!("r0 = {r0}"))?;
            let tau = find_tau(&model, &rb, &ra, None)?.tau.unwrap_or_else(|| {
                warn!("r0 {r0}: no ergotropy in the search window, using the window end");
                qbattery::default_window(&model).1
            });
            let joint = evolve_joint(&model, &rb, &ra, tau)?;
            let cb = ChargerBlocks::new(&joint, &model)?;
            let e = cb.ergotropy();
            Ok(alphas
                .iter()
                .map(|&alpha| {
                    let b = qubit_basis(QubitBasisParams { alpha, gamma: s.gamma });
                    vec![r0.into(), alpha.into(), (cb.daemonic(b.vectors()) - e).into()]
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["r0", "alpha", "advantage"]);
    table.rows = blocks.into_iter().flatten().collect();
    Ok(table)
}
