//! Ergotropy, passive states and measurement-conditioned (daemonic)
//! ergotropy of the battery.

use crate::error::{Error, Result};
use crate::measopt::{QubitBasisParams, QuditBasisParams};
use crate::model::BatteryChargerModel;
use crate::qla::{
    eigenvalues_of, herm_eig, real_diagonal, ComplexMatrix, ComplexVector, DensityMatrix,
    HermitianOperator, ZERO_PROB,
};
use crate::scalar::{cr, to_f64, tol, Real};

/// Ergotropy from the mean energy, the ascending spectrum of the state and the
/// ascending energies. Works unchanged on unnormalized states, giving `p·𝓔`.
pub(crate) fn ergotropy_from_parts<T: Real>(mean: T, eig_asc: &[T], energies_asc: &[T]) -> T {
    let n = eig_asc.len();
    let passive = energies_asc
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (j, &e)| acc + eig_asc[n - 1 - j] * e);
    (mean - passive).max(T::zero())
}

fn sorted_ascending<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

fn check_same_dim<T: Real>(rho: &DensityMatrix<T>, h: &HermitianOperator<T>) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with Hamiltonian of dimension {}",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Passive counterpart: the eigenvalues of `rho` in descending order placed on
/// the eigenvectors of `h` in ascending energy order.
pub fn passive_state<T: Real>(rho: &DensityMatrix<T>, h: &HermitianOperator<T>) -> Result<DensityMatrix<T>> {
    check_same_dim(rho, h)?;
    let q: Vec<T> = rho.eigenvalues().into_iter().rev().map(|l| l.max(T::zero())).collect();
    let spec = herm_eig(h);
    let v = &spec.eigenvectors;
    let m = v * real_diagonal(&q) * v.adjoint();
    DensityMatrix::from_unnormalized(m)
}

/// `Tr[H ρ] − Tr[H ϱ]` with `ϱ` the passive counterpart; never negative.
pub fn ergotropy<T: Real>(rho: &DensityMatrix<T>, h: &HermitianOperator<T>) -> Result<T> {
    check_same_dim(rho, h)?;
    let energies = if h.is_diagonal() {
        sorted_ascending(h.diagonal())
    } else {
        herm_eig(h).eigenvalues
    };
    Ok(ergotropy_from_parts(
        h.expectation(rho.matrix()),
        &rho.eigenvalues(),
        &energies,
    ))
}

/// Parameters that generated a measurement basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisParams<T: Real> {
    Qubit(QubitBasisParams<T>),
    Qudit(QuditBasisParams<T>),
    /// Supplied directly as vectors.
    Explicit,
}

/// Complete orthonormal basis of the charger defining a projective
/// measurement `{|v_k⟩⟨v_k| ⊗ I_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis<T: Real> {
    vectors: Vec<ComplexVector<T>>,
    params: BasisParams<T>,
}

impl<T: Real> MeasurementBasis<T> {
    pub fn new(vectors: Vec<ComplexVector<T>>, params: BasisParams<T>) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty measurement basis".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "{d} basis vectors of length {}",
                v.len()
            )));
        }
        let mut worst = T::zero();
        for i in 0..d {
            for j in i..d {
                let ip = vectors[i].dotc(&vectors[j]);
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((ip - cr(target)).norm_sqr().sqrt());
            }
        }
        if worst > tol::<T>(1e-10) {
            return Err(Error::NotOrthonormal(to_f64(worst)));
        }
        Ok(Self { vectors, params })
    }

    /// Energy eigenbasis `{|e_0⟩, …, |e_{d−1}⟩}`.
    pub fn computational(d: usize) -> Self {
        let vectors = (0..d)
            .map(|k| {
                let mut v = ComplexVector::zeros(d);
                v[k] = cr(T::one());
                v
            })
            .collect();
        Self {
            vectors,
            params: BasisParams::Explicit,
        }
    }

    pub(crate) fn trusted(vectors: Vec<ComplexVector<T>>, params: BasisParams<T>) -> Self {
        Self { vectors, params }
    }

    pub fn charger_dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[ComplexVector<T>] {
        &self.vectors
    }

    pub fn params(&self) -> &BasisParams<T> {
        &self.params
    }
}

/// One measurement outcome that occurs with nonzero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T: Real> {
    /// Index of the basis vector.
    pub k: usize,
    pub prob: T,
    pub state: DensityMatrix<T>,
}

/// Battery states conditioned on each charger outcome. Outcomes with
/// probability at most 1e-12 are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredEnsemble<T: Real> {
    pub outcomes: Vec<Outcome<T>>,
}

impl<T: Real> MeasuredEnsemble<T> {
    pub fn total_probability(&self) -> T {
        self.outcomes.iter().fold(T::zero(), |a, o| a + o.prob)
    }

    /// `Σ_k p^k ρ_b^k`.
    pub fn mixture(&self) -> ComplexMatrix<T> {
        let d = self.outcomes.first().map(|o| o.state.dim()).unwrap_or(0);
        self.outcomes.iter().fold(ComplexMatrix::zeros(d, d), |acc, o| {
            acc + o.state.matrix().map(|z| z * o.prob)
        })
    }
}

/// The `d_a × d_a` grid of battery blocks `ρ_ij = ⟨e_i|ρ_ab|e_j⟩` of a joint
/// state. Contracting with a charger vector gives the unnormalized battery
/// state for that outcome, so one set of blocks serves every basis.
#[derive(Debug, Clone)]
pub struct ChargerBlocks<T: Real> {
    d_a: usize,
    d_b: usize,
    blocks: Vec<Option<ComplexMatrix<T>>>,
    energies: Vec<T>,
    energies_asc: Vec<T>,
}

impl<T: Real> ChargerBlocks<T> {
    pub fn new(rho_ab: &DensityMatrix<T>, model: &BatteryChargerModel<T>) -> Result<Self> {
        if rho_ab.dim() != model.joint_dim() {
            return Err(Error::DimensionMismatch(format!(
                "joint state of dimension {} for a model with joint dimension {}",
                rho_ab.dim(),
                model.joint_dim()
            )));
        }
        let (d_a, d_b) = (model.charger_dim(), model.battery_dim());
        let m = rho_ab.matrix();
        let zero = cr(T::zero());
        let mut blocks = Vec::with_capacity(d_a * d_a);
        for i in 0..d_a {
            for j in 0..d_a {
                let b = m.view((i * d_b, j * d_b), (d_b, d_b)).into_owned();
                blocks.push(if b.iter().all(|z| *z == zero) { None } else { Some(b) });
            }
        }
        let energies = model.battery_energies();
        let energies_asc = sorted_ascending(energies.clone());
        Ok(Self {
            d_a,
            d_b,
            blocks,
            energies,
            energies_asc,
        })
    }

    /// `Σ_ij conj(v_i) v_j ρ_ij`.
    pub fn contract(&self, v: &ComplexVector<T>) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(self.d_b, self.d_b);
        for i in 0..self.d_a {
            for j in 0..self.d_a {
                if let Some(b) = &self.blocks[i * self.d_a + j] {
                    let w = v[i].conj() * v[j];
                    if w.re == T::zero() && w.im == T::zero() {
                        continue;
                    }
                    out.zip_apply(b, |o, x| *o += x * w);
                }
            }
        }
        out
    }

    /// Battery state with the charger traced out.
    pub fn reduced(&self) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(self.d_b, self.d_b);
        for i in 0..self.d_a {
            if let Some(b) = &self.blocks[i * self.d_a + i] {
                out += b;
            }
        }
        out
    }

    fn mean_energy(&self, m: &ComplexMatrix<T>) -> T {
        self.energies
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (i, &e)| a + e * m[(i, i)].re)
    }

    /// Ergotropy of the reduced battery state.
    pub fn ergotropy(&self) -> T {
        let r = self.reduced();
        ergotropy_from_parts(self.mean_energy(&r), &eigenvalues_of(&r), &self.energies_asc)
    }

    /// `p^k 𝓔^k` for one charger vector, or 0 when `p^k ≤ 1e-12`.
    pub fn weighted_outcome_ergotropy(&self, v: &ComplexVector<T>) -> T {
        let m = self.contract(v);
        if m.trace().re <= tol::<T>(ZERO_PROB) {
            return T::zero();
        }
        ergotropy_from_parts(self.mean_energy(&m), &eigenvalues_of(&m), &self.energies_asc)
    }

    /// `Σ_k p^k 𝓔^k` over the vectors of a basis.
    pub fn daemonic(&self, vectors: &[ComplexVector<T>]) -> T {
        vectors
            .iter()
            .fold(T::zero(), |a, v| a + self.weighted_outcome_ergotropy(v))
    }
}

fn check_basis<T: Real>(model: &BatteryChargerModel<T>, basis: &MeasurementBasis<T>) -> Result<()> {
    if basis.charger_dim() != model.charger_dim() {
        return Err(Error::DimensionMismatch(format!(
            "basis on {} levels for a charger with {} levels",
            basis.charger_dim(),
            model.charger_dim()
        )));
    }
    Ok(())
}

/// Projects the charger onto each basis vector and returns the conditional
/// battery states with their probabilities.
pub fn measure_charger<T: Real>(
    rho_ab: &DensityMatrix<T>,
    model: &BatteryChargerModel<T>,
    basis: &MeasurementBasis<T>,
) -> Result<MeasuredEnsemble<T>> {
    check_basis(model, basis)?;
    let blocks = ChargerBlocks::new(rho_ab, model)?;
    let mut outcomes = Vec::new();
    for (k, v) in basis.vectors().iter().enumerate() {
        let m = blocks.contract(v);
        let prob = m.trace().re;
        if prob <= tol::<T>(ZERO_PROB) {
            continue;
        }
        outcomes.push(Outcome {
            k,
            prob,
            state: DensityMatrix::from_unnormalized(m)?,
        });
    }
    Ok(MeasuredEnsemble { outcomes })
}

/// `Σ_k p^k 𝓔(ρ_b^k)` for the given charger measurement.
pub fn daemonic_ergotropy<T: Real>(
    rho_ab: &DensityMatrix<T>,
    model: &BatteryChargerModel<T>,
    basis: &MeasurementBasis<T>,
) -> Result<T> {
    check_basis(model, basis)?;
    Ok(ChargerBlocks::new(rho_ab, model)?.daemonic(basis.vectors()))
}

/// Daemonic ergotropy minus the ergotropy of the reduced battery state.
pub fn advantage<T: Real>(
    rho_ab: &DensityMatrix<T>,
    model: &BatteryChargerModel<T>,
    basis: &MeasurementBasis<T>,
) -> Result<T> {
    check_basis(model, basis)?;
    let blocks = ChargerBlocks::new(rho_ab, model)?;
    Ok(blocks.daemonic(basis.vectors()) - blocks.ergotropy())
}
