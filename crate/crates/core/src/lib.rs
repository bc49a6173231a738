//! Simulation of quantum-battery charging cycles.
//!
//! A battery made of one or more truncated bosonic modes is charged by a
//! qubit (or qudit) charger through a Jaynes–Cummings coupling. After each
//! joint evolution the charger is traced out; the ergotropy of what is left
//! is compared with the daemonic ergotropy obtained by measuring the charger
//! instead, and the cycle is repeated until the battery is full.
//!
//! All kernels are generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`). The aliases at the crate root fix `f64`; the `F32`
//! variants exist for memory-bound sweeps.
//!
//! ```
//! use qbattery::{battery_init, build_single_mode, charger_init, find_tau, BatteryInit, ChargerInit};
//!
//! let model = build_single_mode(11, 1.0, 1.0, 1.0).unwrap();
//! let battery = battery_init(&BatteryInit::Ground, 11, 1.0).unwrap().realized;
//! let charger = charger_init(ChargerInit::Excited(1), 2).unwrap().realized;
//! let best = find_tau(&model, &battery, &charger, None).unwrap();
//! assert!((best.tau.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
//! assert!((best.e_max - 1.0).abs() < 1e-9);
//! ```

pub mod cycle;
pub mod ergo;
pub mod error;
pub mod measopt;
pub mod model;
pub mod oracle;
pub mod qla;
pub mod scalar;
pub mod verify;

pub use cycle::{
    charge_once, charge_once_in, default_window, evolve_joint, find_tau, per_mode_ergotropies, repeat_cycles,
    simultaneous_charging_check, CycleOptions, Frame, TauSearch, Termination,
};
pub use ergo::{advantage, daemonic_ergotropy, ergotropy, measure_charger, passive_state, BasisParams, ChargerBlocks, Outcome};
pub use error::{Error, Result};
pub use measopt::{
    daemonic_report, optimize_daemonic, qubit_basis, qudit_basis, OptBudget, ReportOptions, Sense,
    DEFAULT_GAPLESS_THRESHOLD,
};
pub use model::{
    battery_init, battery_init_product, build_multimode, build_single_mode, charger_init, is_passive, BatteryInit,
    ChargerInit,
};
pub use qla::{apply_projector, evolve, herm_eig, kron, partial_trace, Propagator};
pub use scalar::Real;

pub type ComplexMatrix = qla::ComplexMatrix<f64>;
pub type DensityMatrix = qla::DensityMatrix<f64>;
pub type HermitianOperator = qla::HermitianOperator<f64>;
pub type Spectrum = qla::Spectrum<f64>;
pub type BatteryChargerModel = model::BatteryChargerModel<f64>;
pub type BatteryInitState = model::BatteryInitState<f64>;
pub type ChargerInitState = model::ChargerInitState<f64>;
pub type MeasurementBasis = ergo::MeasurementBasis<f64>;
pub type MeasuredEnsemble = ergo::MeasuredEnsemble<f64>;
pub type QubitBasisParams = measopt::QubitBasisParams<f64>;
pub type QuditBasisParams = measopt::QuditBasisParams<f64>;
pub type OptResult = measopt::OptResult<f64>;
pub type DaemonicReport = measopt::DaemonicReport<f64>;
pub type CycleRecord = cycle::CycleRecord<f64>;
pub type ChargeTrajectory = cycle::ChargeTrajectory<f64>;
pub type JcCoefficients = oracle::JcCoefficients<f64>;

pub type DensityMatrixF32 = qla::DensityMatrix<f32>;
pub type HermitianOperatorF32 = qla::HermitianOperator<f32>;
pub type BatteryChargerModelF32 = model::BatteryChargerModel<f32>;
pub type DaemonicReportF32 = measopt::DaemonicReport<f32>;
pub type ChargeTrajectoryF32 = cycle::ChargeTrajectory<f32>;
