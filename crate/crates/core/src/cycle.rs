//! Charging cycles: evolve battery and a fresh charger together, trace the
//! charger out, pick the time that maximizes the battery's ergotropy, and
//! repeat.

use crate::ergo::{ergotropy_from_parts, ChargerBlocks};
use crate::error::{Error, Result};
use crate::measopt::{golden_section, report_from_blocks, Counter, DaemonicReport, ReportOptions};
use crate::model::BatteryChargerModel;
use crate::qla::{eigenvalues_of, partial_trace_matrix, ComplexMatrix, DensityMatrix};
use crate::scalar::{cis, from_usize, lit, tol, Real};

/// Frame in which the battery state is handed from one cycle to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// Undo the free battery evolution `e^{−iH_b τ}` after every cycle, so
    /// coherences carry no accumulated dynamical phase.
    #[default]
    Rotating,
    /// Keep the state exactly as produced by `U(τ)`.
    Lab,
}

const GRID_POINTS: usize = 2001;
const TIME_TOL: f64 = 1e-10;
const POLISH_STEP: f64 = 1e-5;
const MAX_PEAKS: usize = 32;
/// Refined peaks this close (relative) to the best count as equally high.
const TIE_TOL: f64 = 1e-10;

fn check_states<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b: &DensityMatrix<T>,
    rho_a: &DensityMatrix<T>,
) -> Result<()> {
    if rho_b.dim() != model.battery_dim() || rho_a.dim() != model.charger_dim() {
        return Err(Error::DimensionMismatch(format!(
            "battery {} / charger {} states for a model with battery {} and charger {}",
            rho_b.dim(),
            rho_a.dim(),
            model.battery_dim(),
            model.charger_dim()
        )));
    }
    Ok(())
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter("time must be finite".into()));
    }
    Ok(())
}

/// Joint state `U(t)(ρ_a ⊗ ρ_b)U(t)†`.
pub fn evolve_joint<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b: &DensityMatrix<T>,
    rho_a: &DensityMatrix<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    check_states(model, rho_b, rho_a)?;
    check_time(t)?;
    let joint = model.joint_state(rho_a, rho_b)?;
    model.propagator().evolve(t, &joint)
}

/// `e^{iH_b t} ρ e^{−iH_b t}` on the battery space.
fn to_rotating<T: Real>(model: &BatteryChargerModel<T>, rho: &ComplexMatrix<T>, t: T) -> ComplexMatrix<T> {
    let e = model.battery_energies();
    let mut out = rho.clone();
    for i in 0..e.len() {
        for j in 0..e.len() {
            if i != j {
                out[(i, j)] *= cis((e[i] - e[j]) * t);
            }
        }
    }
    out
}

/// One charging cycle of duration `t`: the battery state left after the
/// joint evolution with the charger traced out.
pub fn charge_once<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b_in: &DensityMatrix<T>,
    rho_a_in: &DensityMatrix<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    charge_once_in(model, rho_b_in, rho_a_in, t, Frame::Lab)
}

/// As [`charge_once`], returning the battery state in the chosen frame.
pub fn charge_once_in<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b_in: &DensityMatrix<T>,
    rho_a_in: &DensityMatrix<T>,
    t: T,
    frame: Frame,
) -> Result<DensityMatrix<T>> {
    let joint = evolve_joint(model, rho_b_in, rho_a_in, t)?;
    let keep: Vec<usize> = (1..=model.n_modes()).collect();
    let rb = partial_trace_matrix(joint.matrix(), &model.joint_dims(), &keep);
    let rb = match frame {
        Frame::Lab => rb,
        Frame::Rotating => to_rotating(model, &rb, t),
    };
    DensityMatrix::from_unnormalized(rb)
}

/// Evaluates the battery ergotropy after a cycle of any duration, sharing
/// the work that does not depend on time.
struct CycleEvaluator<'a, T: Real> {
    model: &'a BatteryChargerModel<T>,
    joint_in: ComplexMatrix<T>,
    dims: Vec<usize>,
    keep: Vec<usize>,
    energies: Vec<T>,
    energies_asc: Vec<T>,
}

impl<'a, T: Real> CycleEvaluator<'a, T> {
    fn new(model: &'a BatteryChargerModel<T>, rho_b: &DensityMatrix<T>, rho_a: &DensityMatrix<T>) -> Result<Self> {
        check_states(model, rho_b, rho_a)?;
        let energies = model.battery_energies();
        let mut energies_asc = energies.clone();
        energies_asc.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self {
            model,
            joint_in: model.joint_state(rho_a, rho_b)?.into_matrix(),
            dims: model.joint_dims(),
            keep: (1..=model.n_modes()).collect(),
            energies,
            energies_asc,
        })
    }

    fn joint(&self, t: T) -> ComplexMatrix<T> {
        self.model.propagator().evolve_matrix(t, &self.joint_in)
    }

    fn battery(&self, t: T) -> ComplexMatrix<T> {
        partial_trace_matrix(&self.joint(t), &self.dims, &self.keep)
    }

    fn ergotropy(&self, t: T) -> T {
        let rb = self.battery(t);
        let mean = self
            .energies
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (i, &e)| a + e * rb[(i, i)].re);
        ergotropy_from_parts(mean, &eigenvalues_of(&rb), &self.energies_asc)
    }
}

/// Outcome of the search for the ergotropy-maximizing cycle duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSearch<T: Real> {
    /// `None` when the ergotropy vanishes on the whole window.
    pub tau: Option<T>,
    pub e_max: T,
}

/// Default search window: the first period `(0, 2π/Ω₁]` of the single-mode
/// dynamics, `(0, 2π/g]` for several modes.
pub fn default_window<T: Real>(model: &BatteryChargerModel<T>) -> (T, T) {
    let g = model.coupling();
    if model.is_multimode() {
        (T::zero(), T::two_pi() / g)
    } else {
        let d = model.detunings()[0];
        let omega1 = (g * g + d * d * lit::<T>(0.25)).sqrt();
        (T::zero(), T::two_pi() / omega1)
    }
}

/// Earliest time in `(lo, hi]` that maximizes the ergotropy after one cycle.
///
/// A 2001-point uniform scan locates the local maxima; each is refined by
/// golden-section search to `1e-10` and polished with a symmetric
/// three-point parabola. The earliest refined peak within `1e-10` (relative)
/// of the highest one wins.
pub fn find_tau<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b_in: &DensityMatrix<T>,
    rho_a_in: &DensityMatrix<T>,
    window: Option<(T, T)>,
) -> Result<TauSearch<T>> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(model));
    if !(lo.is_finite() && hi.is_finite() && hi > lo && lo >= T::zero()) {
        return Err(Error::InvalidParameter("time window must satisfy 0 <= lo < hi".into()));
    }
    let ev = CycleEvaluator::new(model, rho_b_in, rho_a_in)?;
    Ok(search_tau(&ev, lo, hi))
}

fn search_tau<T: Real>(ev: &CycleEvaluator<'_, T>, lo: T, hi: T) -> TauSearch<T> {
    let n = GRID_POINTS;
    let step = (hi - lo) / from_usize::<T>(n);
    let times: Vec<T> = (1..=n).map(|k| lo + step * from_usize::<T>(k)).collect();
    let values: Vec<T> = times.iter().map(|&t| ev.ergotropy(t)).collect();

    let best = values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let scale = T::one().max(best.abs());
    if best <= tol::<T>(1e-12) * scale {
        return TauSearch { tau: None, e_max: T::zero() };
    }

    // grid local maxima (first point of a plateau), best few kept
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let v = values[k];
            v > tol::<T>(1e-12) * scale
                && (k == 0 || v > values[k - 1])
                && (k + 1 == n || v >= values[k + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    peaks.truncate(MAX_PEAKS);
    peaks.sort_unstable();

    let refined: Vec<(T, T)> = peaks
        .iter()
        .map(|&k| {
            let a = if k == 0 { lo } else { times[k - 1] };
            let b = if k + 1 == n { hi } else { times[k + 1] };
            refine_peak(ev, a, b, (times[k], values[k]), lo, hi)
        })
        .collect();
    let top = refined.iter().fold(T::zero(), |a, p| a.max(p.1));
    let tie = tol::<T>(TIE_TOL) * T::one().max(top.abs());
    let (tau, e_max) = refined
        .into_iter()
        .find(|p| p.1 >= top - tie)
        .expect("at least one peak");
    TauSearch { tau: Some(tau), e_max }
}

/// Golden-section search on `[a, b]`, then a parabolic vertex through
/// `τ ± h`, kept unless it lowers the ergotropy beyond rounding.
fn refine_peak<T: Real>(ev: &CycleEvaluator<'_, T>, a: T, b: T, seed: (T, T), lo: T, hi: T) -> (T, T) {
    let mut counter = Counter { used: 0, limit: usize::MAX };
    let (mut tau, neg) = golden_section(|t| -ev.ergotropy(t), a, b, tol::<T>(TIME_TOL), &mut counter);
    let mut e_max = -neg;
    if seed.1 > e_max {
        (tau, e_max) = seed;
    }
    let h = lit::<T>(POLISH_STEP) * (hi - lo) / T::two_pi();
    if tau - h > lo && tau + h <= hi {
        let (fm, fp) = (ev.ergotropy(tau - h), ev.ergotropy(tau + h));
        let curvature = fp - e_max - e_max + fm;
        if curvature < T::zero() {
            let shift = h * (fp - fm) / (lit::<T>(2.0) * curvature);
            if shift.abs() <= h {
                let cand = tau - shift;
                let fc = ev.ergotropy(cand);
                // the peak is flat to rounding, so a tie keeps the vertex
                if fc >= e_max - tol::<T>(1e-14) * T::one().max(e_max.abs()) {
                    tau = cand;
                    e_max = e_max.max(fc);
                }
            }
        }
    }
    (tau, e_max)
}

/// Per-mode ergotropies of a multi-mode battery state, each against its own
/// mode Hamiltonian.
pub fn per_mode_ergotropies<T: Real>(rho_b: &DensityMatrix<T>, model: &BatteryChargerModel<T>) -> Result<Vec<T>> {
    if !model.is_multimode() {
        return Err(Error::NotMultiMode);
    }
    if rho_b.dim() != model.battery_dim() {
        return Err(Error::DimensionMismatch(format!(
            "battery state of dimension {} for battery dimension {}",
            rho_b.dim(),
            model.battery_dim()
        )));
    }
    Ok(mode_ergotropies(rho_b.matrix(), model))
}

fn mode_ergotropies<T: Real>(rho_b: &ComplexMatrix<T>, model: &BatteryChargerModel<T>) -> Vec<T> {
    (0..model.n_modes())
        .map(|i| {
            let r = partial_trace_matrix(rho_b, model.mode_dims(), &[i]);
            let w = model.mode_freqs()[i];
            let e: Vec<T> = (0..model.mode_dims()[i]).map(|n| w * from_usize::<T>(n)).collect();
            let mean = e.iter().enumerate().fold(T::zero(), |a, (n, &en)| a + en * r[(n, n)].re);
            ergotropy_from_parts(mean, &eigenvalues_of(&r), &e)
        })
        .collect()
}

/// One round of the repeated protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord<T: Real> {
    /// 1-based cycle index.
    pub m: usize,
    pub tau_m: T,
    pub e_max_m: T,
    /// Battery populations in the Fock basis after the cycle.
    pub battery_populations: Vec<T>,
    /// Ergotropy of each mode's reduced state (multi-mode models only).
    pub per_mode_ergotropy: Vec<T>,
    pub daemonic: Option<DaemonicReport<T>>,
    pub state: DensityMatrix<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    FullCharge,
    MaxCycles,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTrajectory<T: Real> {
    pub records: Vec<CycleRecord<T>>,
    pub terminated: Termination,
    /// Smallest mode frequency, used for the simultaneous-charging threshold.
    pub omega_min: T,
    /// First cycle whose daemonic gap is at or below the gapless threshold,
    /// when daemonic reports were requested.
    pub first_gapless: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOptions<T: Real> {
    pub max_cycles: usize,
    /// Attach a daemonic report at every `τ_(m)`.
    pub daemonic: Option<ReportOptions>,
    pub frame: Frame,
    /// Overrides the default `τ` search window.
    pub window: Option<(T, T)>,
}

impl<T: Real> Default for CycleOptions<T> {
    fn default() -> Self {
        Self {
            max_cycles: 100,
            daemonic: None,
            frame: Frame::Rotating,
            window: None,
        }
    }
}

const STALL_GAIN: f64 = 1e-9;
const STALL_CYCLES: usize = 3;

/// Repeats the charging cycle, each time with the same fresh charger state
/// and at the duration that maximizes the ergotropy, until the battery is
/// full, progress stalls, or `max_cycles` is reached.
pub fn repeat_cycles<T: Real>(
    model: &BatteryChargerModel<T>,
    rho_b_in: &DensityMatrix<T>,
    rho_a: &DensityMatrix<T>,
    opts: &CycleOptions<T>,
) -> Result<ChargeTrajectory<T>> {
    if opts.max_cycles == 0 {
        return Err(Error::InvalidParameter("max_cycles must be >= 1".into()));
    }
    check_states(model, rho_b_in, rho_a)?;
    let full = model.max_energy() - lit::<T>(1e-6) * model.min_frequency();
    let (lo, hi) = opts.window.unwrap_or_else(|| default_window(model));

    let mut records: Vec<CycleRecord<T>> = Vec::new();
    let mut rho_b = rho_b_in.clone();
    let mut prev = crate::ergo::ergotropy(&rho_b, &model.battery_hamiltonian())?;
    let mut flat = 0;
    let mut first_gapless = None;
    let mut terminated = Termination::MaxCycles;

    for m in 1..=opts.max_cycles {
        let ev = CycleEvaluator::new(model, &rho_b, rho_a)?;
        let Some(tau) = search_tau(&ev, lo, hi).tau else {
            terminated = Termination::Stalled;
            break;
        };
        let joint = ev.joint(tau);
        let rb = partial_trace_matrix(&joint, &ev.dims, &ev.keep);
        let rb = match opts.frame {
            Frame::Lab => rb,
            Frame::Rotating => to_rotating(model, &rb, tau),
        };
        let state = DensityMatrix::from_unnormalized(rb)?;
        let e_max = crate::ergo::ergotropy(&state, &model.battery_hamiltonian())?;
        let per_mode = if model.is_multimode() {
            mode_ergotropies(state.matrix(), model)
        } else {
            Vec::new()
        };
        let daemonic = match &opts.daemonic {
            Some(ro) => {
                let blocks = ChargerBlocks::new(&DensityMatrix::trusted(joint), model)?;
                let rep = report_from_blocks(&blocks, model.charger_dim(), tau, ro);
                if first_gapless.is_none() && rep.gapless {
                    first_gapless = Some(m);
                }
                Some(rep)
            }
            None => None,
        };
        records.push(CycleRecord {
            m,
            tau_m: tau,
            e_max_m: e_max,
            battery_populations: state.populations(),
            per_mode_ergotropy: per_mode,
            daemonic,
            state: state.clone(),
        });
        rho_b = state;

        if e_max >= full {
            terminated = Termination::FullCharge;
            break;
        }
        if e_max - prev < lit::<T>(STALL_GAIN) {
            flat += 1;
            if flat >= STALL_CYCLES {
                terminated = Termination::Stalled;
                break;
            }
        } else {
            flat = 0;
        }
        prev = e_max;
    }
    Ok(ChargeTrajectory {
        records,
        terminated,
        omega_min: model.min_frequency(),
        first_gapless,
    })
}

/// Whether the collective battery and every individual mode carry
/// ergotropy above `1e-9·ω_min` at each recorded cycle.
pub fn simultaneous_charging_check<T: Real>(trajectory: &ChargeTrajectory<T>) -> Vec<bool> {
    let thr = lit::<T>(1e-9) * trajectory.omega_min;
    trajectory
        .records
        .iter()
        .map(|r| {
            r.e_max_m > thr
                && !r.per_mode_ergotropy.is_empty()
                && r.per_mode_ergotropy.iter().all(|&e| e > thr)
        })
        .collect()
}
