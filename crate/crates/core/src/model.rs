//! Battery and charger Hamiltonians, plus the initial states used in the
//! charging protocol.
//!
//! The joint space is ordered charger ⊗ mode₁ ⊗ mode₂ ⊗ …, so a joint index
//! is `a · D_b + b` with `a` the charger level and `b` the flat battery index.

use log::warn;

use crate::error::{Error, Result};
use crate::qla::{
    herm_eig, identity, kron, real_diagonal, ComplexMatrix, ComplexVector, DensityMatrix,
    HermitianOperator, Propagator,
};
use crate::scalar::{cis, cr, from_usize, lit, to_f64, tol, Real};

/// Lowering operator `O|n⟩ = √n |n−1⟩` on `d` Fock levels.
pub fn lowering<T: Real>(d: usize) -> ComplexMatrix<T> {
    let mut o = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        o[(n - 1, n)] = cr(from_usize::<T>(n).sqrt());
    }
    o
}

/// `|e_i⟩⟨e_j|` on `d` levels.
fn ket_bra<T: Real>(d: usize, i: usize, j: usize) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = cr(T::one());
    m
}

/// Embeds a single-mode operator at position `mode` of the battery factors.
fn embed_mode<T: Real>(op: &ComplexMatrix<T>, mode: usize, dims: &[usize]) -> ComplexMatrix<T> {
    dims.iter().enumerate().fold(identity(1), |acc, (i, &d)| {
        if i == mode {
            kron(&acc, op)
        } else {
            kron(&acc, &identity(d))
        }
    })
}

/// Battery + charger system with its Hamiltonian blocks assembled on the
/// joint space.
#[derive(Debug, Clone)]
pub struct BatteryChargerModel<T: Real> {
    mode_dims: Vec<usize>,
    mode_freqs: Vec<T>,
    charger_levels: Vec<T>,
    coupling: T,
    detunings: Vec<T>,
    h_b: HermitianOperator<T>,
    h_a: HermitianOperator<T>,
    h_ab: HermitianOperator<T>,
    h_total: HermitianOperator<T>,
    propagator: Propagator<T>,
}

fn check_positive<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {}",
            to_f64(x)
        )));
    }
    Ok(())
}

/// Single bosonic mode (`d_b` Fock levels, spacing `omega`) charged by a
/// qubit with gap `nu` through a Jaynes–Cummings coupling `g`.
pub fn build_single_mode<T: Real>(d_b: usize, omega: T, nu: T, g: T) -> Result<BatteryChargerModel<T>> {
    if d_b < 2 {
        return Err(Error::InvalidParameter(format!("d_b must be >= 2, got {d_b}")));
    }
    check_positive("omega", omega)?;
    check_positive("nu", nu)?;
    check_positive("g", g)?;
    assemble(vec![d_b], vec![omega], vec![T::zero(), nu], g)
}

/// Several non-degenerate modes, mode `i` coupled to the `e₀ ↔ e_{i+1}`
/// transition of a `(modes + 1)`-level charger. `charger_levels[0]` must be 0.
pub fn build_multimode<T: Real>(
    mode_dims: &[usize],
    mode_freqs: &[T],
    charger_levels: &[T],
    g: T,
) -> Result<BatteryChargerModel<T>> {
    if mode_dims.is_empty() {
        return Err(Error::InvalidParameter("at least one battery mode is required".into()));
    }
    if mode_dims.len() != mode_freqs.len() || charger_levels.len() != mode_dims.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} mode dims, {} mode frequencies, {} charger levels (need modes + 1)",
            mode_dims.len(),
            mode_freqs.len(),
            charger_levels.len()
        )));
    }
    if let Some(&d) = mode_dims.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidParameter(format!("mode dimension must be >= 2, got {d}")));
    }
    for &w in mode_freqs {
        check_positive("mode frequency", w)?;
    }
    check_positive("g", g)?;
    if charger_levels[0] != T::zero() {
        return Err(Error::InvalidParameter("charger ground level must be 0".into()));
    }
    for w in charger_levels.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::InvalidParameter(
                "charger levels must be finite and strictly increasing".into(),
            ));
        }
    }
    for i in 0..mode_freqs.len() {
        for j in i + 1..mode_freqs.len() {
            if mode_freqs[i] == mode_freqs[j] {
                return Err(Error::DegenerateModes(i, j));
            }
        }
    }
    assemble(mode_dims.to_vec(), mode_freqs.to_vec(), charger_levels.to_vec(), g)
}

fn assemble<T: Real>(
    mode_dims: Vec<usize>,
    mode_freqs: Vec<T>,
    charger_levels: Vec<T>,
    g: T,
) -> Result<BatteryChargerModel<T>> {
    let d_a = charger_levels.len();
    let d_b: usize = mode_dims.iter().product();
    let detunings: Vec<T> = mode_freqs
        .iter()
        .zip(&charger_levels[1..])
        .map(|(&w, &nu)| w - nu)
        .collect();
    for (i, (&dl, &w)) in detunings.iter().zip(&mode_freqs).enumerate() {
        if dl.abs() > lit::<T>(0.1) * w {
            warn!(
                "mode {i}: |detuning| {} exceeds 0.1·ω = {}; formulas remain valid but lie outside the studied regime",
                to_f64(dl),
                to_f64(lit::<T>(0.1) * w)
            );
        }
    }

    let battery_hamiltonian = battery_hamiltonian_matrix(&mode_dims, &mode_freqs);
    let h_b = kron(&identity(d_a), &battery_hamiltonian);
    let h_a = kron(&real_diagonal(&charger_levels), &identity(d_b));
    let mut h_ab = ComplexMatrix::zeros(d_a * d_b, d_a * d_b);
    for (i, &d) in mode_dims.iter().enumerate() {
        let o = embed_mode(&lowering::<T>(d), i, &mode_dims);
        let up = kron(&ket_bra(d_a, 0, i + 1), &o.adjoint());
        let down = kron(&ket_bra(d_a, i + 1, 0), &o);
        h_ab += up + down;
    }
    h_ab.iter_mut().for_each(|z| *z *= g);

    let h_total = HermitianOperator::new(&h_a + &h_b + &h_ab)?;
    let propagator = Propagator::new(&h_total);
    Ok(BatteryChargerModel {
        mode_dims,
        mode_freqs,
        charger_levels,
        coupling: g,
        detunings,
        h_b: HermitianOperator::new(h_b)?,
        h_a: HermitianOperator::new(h_a)?,
        h_ab: HermitianOperator::new(h_ab)?,
        h_total,
        propagator,
    })
}

fn battery_hamiltonian_matrix<T: Real>(mode_dims: &[usize], mode_freqs: &[T]) -> ComplexMatrix<T> {
    real_diagonal(&battery_energies_of(mode_dims, mode_freqs))
}

/// `Σ_i ω_i n_i` for every flat battery index.
fn battery_energies_of<T: Real>(mode_dims: &[usize], mode_freqs: &[T]) -> Vec<T> {
    let total: usize = mode_dims.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut e = T::zero();
            for (&d, &w) in mode_dims.iter().zip(mode_freqs).rev() {
                e += w * from_usize::<T>(idx % d);
                idx /= d;
            }
            e
        })
        .collect()
}

impl<T: Real> BatteryChargerModel<T> {
    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn mode_freqs(&self) -> &[T] {
        &self.mode_freqs
    }

    pub fn charger_levels(&self) -> &[T] {
        &self.charger_levels
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn is_multimode(&self) -> bool {
        self.mode_dims.len() > 1
    }

    pub fn charger_dim(&self) -> usize {
        self.charger_levels.len()
    }

    pub fn battery_dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    pub fn joint_dim(&self) -> usize {
        self.charger_dim() * self.battery_dim()
    }

    /// Factor dimensions of the joint space, charger first.
    pub fn joint_dims(&self) -> Vec<usize> {
        std::iter::once(self.charger_dim())
            .chain(self.mode_dims.iter().copied())
            .collect()
    }

    pub fn h_b(&self) -> &HermitianOperator<T> {
        &self.h_b
    }

    pub fn h_a(&self) -> &HermitianOperator<T> {
        &self.h_a
    }

    pub fn h_ab(&self) -> &HermitianOperator<T> {
        &self.h_ab
    }

    pub fn h_total(&self) -> &HermitianOperator<T> {
        &self.h_total
    }

    /// Propagator of `h_total`, decomposed once at construction.
    pub fn propagator(&self) -> &Propagator<T> {
        &self.propagator
    }

    /// Battery Hamiltonian on the battery space alone.
    pub fn battery_hamiltonian(&self) -> HermitianOperator<T> {
        HermitianOperator::from_real_diagonal(&self.battery_energies())
    }

    /// Diagonal of the battery Hamiltonian (it is diagonal in the Fock basis).
    pub fn battery_energies(&self) -> Vec<T> {
        battery_energies_of(&self.mode_dims, &self.mode_freqs)
    }

    /// `ω_i n` on mode `i` alone.
    pub fn mode_hamiltonian(&self, i: usize) -> Result<HermitianOperator<T>> {
        let (&d, &w) = self
            .mode_dims
            .get(i)
            .zip(self.mode_freqs.get(i))
            .ok_or_else(|| Error::InvalidParameter(format!("mode {i} out of range")))?;
        let diag: Vec<T> = (0..d).map(|n| w * from_usize::<T>(n)).collect();
        Ok(HermitianOperator::from_real_diagonal(&diag))
    }

    /// Highest battery energy `Σ_i (d_i − 1) ω_i`.
    pub fn max_energy(&self) -> T {
        self.mode_dims
            .iter()
            .zip(&self.mode_freqs)
            .fold(T::zero(), |acc, (&d, &w)| acc + w * from_usize::<T>(d - 1))
    }

    pub fn min_frequency(&self) -> T {
        self.mode_freqs
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
    }

    /// Total excitation number `Σ_i n_i + Σ_{i≥1} |e_i⟩⟨e_i|` (joint space).
    pub fn excitation_operator(&self) -> HermitianOperator<T> {
        let ones = vec![T::one(); self.n_modes()];
        let n_b = battery_energies_of(&self.mode_dims, &ones);
        let d_b = self.battery_dim();
        let diag: Vec<T> = (0..self.joint_dim())
            .map(|k| {
                let a = k / d_b;
                let b = k % d_b;
                n_b[b] + if a > 0 { T::one() } else { T::zero() }
            })
            .collect();
        HermitianOperator::from_real_diagonal(&diag)
    }

    /// Largest entry of `[h_total, N_exc]`.
    pub fn excitation_commutator_norm(&self) -> T {
        let n = self.excitation_operator();
        let h = self.h_total.matrix();
        let comm = h * n.matrix() - n.matrix() * h;
        comm.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()))
    }

    /// `ρ_a ⊗ ρ_b` with dimension checks.
    pub fn joint_state(&self, rho_a: &DensityMatrix<T>, rho_b: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        if rho_a.dim() != self.charger_dim() || rho_b.dim() != self.battery_dim() {
            return Err(Error::DimensionMismatch(format!(
                "charger {} / battery {} states for a model with charger {} and battery {}",
                rho_a.dim(),
                rho_b.dim(),
                self.charger_dim(),
                self.battery_dim()
            )));
        }
        Ok(DensityMatrix::trusted(kron(rho_a.matrix(), rho_b.matrix())))
    }
}

/// How the battery is prepared.
#[derive(Debug, Clone, PartialEq)]
pub enum BatteryInit<T: Real> {
    Ground,
    /// Descending populations on the lowest `populations.len()` levels.
    Truncated(Vec<T>),
    /// Boltzmann populations at inverse temperature `beta`.
    Thermal { beta: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryInitState<T: Real> {
    pub kind: BatteryInit<T>,
    pub realized: DensityMatrix<T>,
}

impl<T: Real> BatteryInitState<T> {
    pub fn populations(&self) -> Vec<T> {
        self.realized.populations()
    }
}

/// Checks the passivity inequalities of a truncated mixture and names the
/// first one that fails.
fn check_truncated<T: Real>(r: &[T]) -> Result<()> {
    let slack = tol::<T>(1e-12);
    if let Some(&p) = r.iter().find(|p| !p.is_finite() || **p < T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "population {} is negative or non-finite",
            to_f64(p)
        )));
    }
    let sum = r.iter().fold(T::zero(), |a, &b| a + b);
    if (sum - T::one()).abs() > tol::<T>(1e-10) {
        return Err(Error::NotNormalized(to_f64(sum)));
    }
    match r.len() {
        2 if r[0] < lit::<T>(0.5) - slack => Err(Error::NotPassive(format!(
            "r0 >= 1/2 violated (r0 = {})",
            to_f64(r[0])
        ))),
        3 if r[0] < lit::<T>(1.0 / 3.0) - slack => Err(Error::NotPassive(format!(
            "r0 >= 1/3 violated (r0 = {})",
            to_f64(r[0])
        ))),
        3 if r[1] > r[0] + slack => Err(Error::NotPassive(format!(
            "r0 >= r1 violated (r0 = {}, r1 = {})",
            to_f64(r[0]),
            to_f64(r[1])
        ))),
        3 if r[1] < (T::one() - r[0]) * lit::<T>(0.5) - slack => Err(Error::NotPassive(format!(
            "r1 >= (1 - r0)/2 violated (r0 = {}, r1 = {})",
            to_f64(r[0]),
            to_f64(r[1])
        ))),
        _ => {
            for (n, w) in r.windows(2).enumerate() {
                if w[1] > w[0] + slack {
                    return Err(Error::NotPassive(format!(
                        "r{n} >= r{} violated ({} < {})",
                        n + 1,
                        to_f64(w[0]),
                        to_f64(w[1])
                    )));
                }
            }
            Ok(())
        }
    }
}

/// Passive battery state on a single mode of `d_b` levels with spacing `omega`.
pub fn battery_init<T: Real>(kind: &BatteryInit<T>, d_b: usize, omega: T) -> Result<BatteryInitState<T>> {
    if d_b < 2 {
        return Err(Error::InvalidParameter(format!("d_b must be >= 2, got {d_b}")));
    }
    let mut pops = vec![T::zero(); d_b];
    match kind {
        BatteryInit::Ground => pops[0] = T::one(),
        BatteryInit::Truncated(r) => {
            if r.is_empty() || r.len() > d_b {
                return Err(Error::InvalidParameter(format!(
                    "truncated mixture needs 1..={d_b} populations, got {}",
                    r.len()
                )));
            }
            check_truncated(r)?;
            pops[..r.len()].copy_from_slice(r);
        }
        BatteryInit::Thermal { beta } => {
            if !(beta.is_finite() && *beta > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "beta must be finite and > 0, got {}",
                    to_f64(*beta)
                )));
            }
            check_positive("omega", omega)?;
            let x = (-*beta * omega).exp();
            let mut w = T::one();
            for p in pops.iter_mut() {
                *p = w;
                w *= x;
            }
            let z = pops.iter().fold(T::zero(), |a, &b| a + b);
            pops.iter_mut().for_each(|p| *p /= z);
        }
    }
    Ok(BatteryInitState {
        kind: kind.clone(),
        realized: DensityMatrix::from_populations(&pops)?,
    })
}

/// Product of one prepared state per mode (same `kind` on every mode, each
/// at its own frequency).
pub fn battery_init_product<T: Real>(
    kind: &BatteryInit<T>,
    model: &BatteryChargerModel<T>,
) -> Result<DensityMatrix<T>> {
    let mut m = identity::<T>(1);
    for (&d, &w) in model.mode_dims().iter().zip(model.mode_freqs()) {
        m = kron(&m, battery_init(kind, d, w)?.realized.matrix());
    }
    let rho = DensityMatrix::trusted(m);
    if model.is_multimode() && !is_passive(&rho, &model.battery_hamiltonian()) {
        warn!("product initial state is not passive for the collective battery Hamiltonian");
    }
    Ok(rho)
}

/// How the charger is prepared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargerInit<T: Real> {
    /// `|e_i⟩⟨e_i|`.
    Excited(usize),
    /// `cos(θ/2)|e₁⟩ + e^{iφ} sin(θ/2)|e₂⟩`.
    Superposition { theta: T, phi: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargerInitState<T: Real> {
    pub kind: ChargerInit<T>,
    pub realized: DensityMatrix<T>,
}

pub fn charger_init<T: Real>(kind: ChargerInit<T>, d_a: usize) -> Result<ChargerInitState<T>> {
    let mut psi = ComplexVector::<T>::zeros(d_a);
    match kind {
        ChargerInit::Excited(i) => {
            if i >= d_a {
                return Err(Error::InvalidParameter(format!(
                    "charger level {i} out of range for {d_a} levels"
                )));
            }
            psi[i] = cr(T::one());
        }
        ChargerInit::Superposition { theta, phi } => {
            if d_a < 3 {
                return Err(Error::InvalidParameter(format!(
                    "superposition over e1, e2 needs at least 3 charger levels, got {d_a}"
                )));
            }
            if !(theta >= T::zero() && theta <= T::pi()) || !phi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "theta must lie in [0, pi] and phi be finite (theta = {}, phi = {})",
                    to_f64(theta),
                    to_f64(phi)
                )));
            }
            let half = theta * lit::<T>(0.5);
            psi[1] = cr(half.cos());
            psi[2] = cis(phi) * half.sin();
        }
    }
    Ok(ChargerInitState {
        kind,
        realized: DensityMatrix::from_pure(&psi)?,
    })
}

/// True iff `rho` is diagonal in the eigenbasis of `h` (off-diagonal norm at
/// most 1e-10) with populations non-increasing as the energy grows.
pub fn is_passive<T: Real>(rho: &DensityMatrix<T>, h: &HermitianOperator<T>) -> bool {
    if rho.dim() != h.dim() {
        return false;
    }
    let spec = herm_eig(h);
    let v = &spec.eigenvectors;
    let r = v.adjoint() * rho.matrix() * v;
    let n = r.nrows();
    let mut off = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += r[(i, j)].norm_sqr();
            }
        }
    }
    if off.sqrt() > tol::<T>(1e-10) {
        return false;
    }
    let e = &spec.eigenvalues;
    let slack = tol::<T>(1e-12);
    let gap = tol::<T>(1e-12) * T::one().max(e.last().map(|x| x.abs()).unwrap_or_else(T::one));
    for i in 0..n {
        for j in i + 1..n {
            if e[j] > e[i] + gap && r[(j, j)].re > r[(i, i)].re + slack {
                return false;
            }
        }
    }
    true
}
