//! Closed-form results for the Jaynes–Cummings charging cycle, used to
//! cross-check the dense simulation and as fast paths.
//!
//! Two-mode states are written in the frame co-rotating with the free
//! battery Hamiltonian (see [`crate::cycle::Frame::Rotating`]).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qla::{outer, ComplexVector, DensityMatrix};
use crate::scalar::{cis, cr, from_usize, lit, to_f64, tol, Real};

/// Populations and coherence of the `n`-excitation block.
///
/// Starting from `|e₁, n−1⟩`, `A_n` is the population transferred to
/// `|e₀, n⟩`, `B_n = 1 − A_n` the population left behind, and `C_n` the
/// coherence `⟨e₀, n|ρ(t)|e₁, n−1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcCoefficients<T: Real> {
    pub n: usize,
    pub omega_n: T,
    pub a_n: T,
    pub b_n: T,
    pub c_n: Complex<T>,
}

/// `Ω_n = √(g²n + δ²/4)`.
pub fn rabi_frequency<T: Real>(n: usize, g: T, delta: T) -> T {
    (g * g * from_usize::<T>(n) + delta * delta * lit::<T>(0.25)).sqrt()
}

pub fn jc_coeffs<T: Real>(n: usize, g: T, delta: T, t: T) -> Result<JcCoefficients<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("the zero-excitation sector has no coupling".into()));
    }
    let omega = rabi_frequency(n, g, delta);
    let nn = from_usize::<T>(n);
    let (s, c) = (omega * t).sin_cos();
    let w2 = omega * omega;
    let a_n = g * g * nn * s * s / w2;
    let b_n = (lit::<T>(4.0) * g * g * nn * c * c + delta * delta) / (lit::<T>(4.0) * w2);
    let pre = g * nn.sqrt() / (lit::<T>(2.0) * w2);
    let sin2 = (lit::<T>(2.0) * omega * t).sin();
    let c_n = Complex::new(-pre * delta * s * s, -pre * omega * sin2);
    Ok(JcCoefficients {
        n,
        omega_n: omega,
        a_n,
        b_n,
        c_n,
    })
}

/// Battery populations after one cycle of duration `t` with a fresh excited
/// qubit charger, from the populations before it (length `d_b`).
pub fn recursion_step<T: Real>(r_prev: &[T], g: T, delta: T, t: T) -> Result<Vec<T>> {
    let d = r_prev.len();
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two battery levels".into()));
    }
    let sum = r_prev.iter().fold(T::zero(), |a, &b| a + b);
    if (sum - T::one()).abs() > tol::<T>(1e-10) {
        return Err(Error::NotNormalized(to_f64(sum)));
    }
    // a[n], b[n] for blocks n = 1..d−1
    let mut a = vec![T::zero(); d];
    let mut b = vec![T::one(); d];
    for n in 1..d {
        let k = jc_coeffs(n, g, delta, t)?;
        a[n] = k.a_n;
        b[n] = k.b_n;
    }
    let mut out = vec![T::zero(); d];
    out[0] = r_prev[0] * b[1];
    for i in 1..d - 1 {
        out[i] = r_prev[i - 1] * a[i] + r_prev[i] * b[i + 1];
    }
    out[d - 1] = r_prev[d - 1] + r_prev[d - 2] * a[d - 1];
    Ok(out)
}

/// `cos⁻¹√((4g² − δ²)/8g²)`: the phase `Ω₁t (mod π)` at which the vacuum
/// ergotropy switches on.
pub fn alpha_int<T: Real>(g: T, delta: T) -> Result<T> {
    let num = lit::<T>(4.0) * g * g - delta * delta;
    if num < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "detuning {} exceeds 2g = {}",
            to_f64(delta),
            to_f64(lit::<T>(2.0) * g)
        )));
    }
    Ok((num / (lit::<T>(8.0) * g * g)).sqrt().acos())
}

/// Ergotropy after one cycle from the battery ground state.
pub fn ergo_vacuum<T: Real>(g: T, delta: T, omega: T, t: T) -> Result<T> {
    let a = alpha_int(g, delta)?;
    let k = jc_coeffs(1, g, delta, t)?;
    let phase = (k.omega_n * t) % T::pi();
    let phase = if phase < T::zero() { phase + T::pi() } else { phase };
    if phase > a && phase < T::pi() - a {
        Ok(omega * (k.a_n - k.b_n))
    } else {
        Ok(T::zero())
    }
}

/// Daemonic ergotropy after one cycle from the ground state: `ω A₁(t)`,
/// the same for every charger measurement.
pub fn daemonic_vacuum<T: Real>(g: T, delta: T, omega: T, t: T) -> Result<T> {
    Ok(omega * jc_coeffs(1, g, delta, t)?.a_n)
}

/// Daemonic gap at the optimal time for a ground-state battery: `ωδ²/4Ω₁²`.
pub fn gap_vacuum<T: Real>(g: T, delta: T, omega: T) -> T {
    let w = rabi_frequency(1, g, delta);
    omega * delta * delta / (lit::<T>(4.0) * w * w)
}

/// Optimal first-cycle time `(2ℓ+1)π/2Ω₁` for a ground-state battery.
pub fn tau_vacuum<T: Real>(g: T, delta: T, l: usize) -> T {
    from_usize::<T>(2 * l + 1) * T::pi() / (lit::<T>(2.0) * rabi_frequency(1, g, delta))
}

/// Optimal time of cycle `m` on resonance when the battery sits in `|m−1⟩`:
/// `π/(2√m g)`.
pub fn tau_ladder<T: Real>(m: usize, g: T) -> T {
    T::pi() / (lit::<T>(2.0) * from_usize::<T>(m).sqrt() * g)
}

fn two_level_ergotropy<T: Real>(p_excited: T, omega: T) -> T {
    // populations (1−p, p) on (0, ω)
    omega * (lit::<T>(2.0) * p_excited - T::one()).max(T::zero())
}

fn check_two_mode<T: Real>(theta: T, g: T, dims: [usize; 2], min_dim: usize) -> Result<()> {
    if !(theta >= T::zero() && theta <= T::pi()) {
        return Err(Error::InvalidParameter(format!("theta {} outside [0, pi]", to_f64(theta))));
    }
    if !(g > T::zero()) {
        return Err(Error::InvalidParameter("g must be > 0".into()));
    }
    if dims.iter().any(|&d| d < min_dim) {
        return Err(Error::InvalidParameter(format!(
            "mode dimensions must be >= {min_dim}, got {dims:?}"
        )));
    }
    Ok(())
}

fn ket(dims: [usize; 2], n1: usize, n2: usize) -> usize {
    n1 * dims[1] + n2
}

/// First cycle from `|00⟩` with charger `cos(θ/2)|e₁⟩ + e^{iφ}sin(θ/2)|e₂⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFirstCycle<T: Real> {
    /// Collective battery state on `dims[0] × dims[1]` levels.
    pub state: DensityMatrix<T>,
    pub collective_ergotropy: T,
    pub mode_ergotropies: [T; 2],
}

/// `t ∈ (π/4g + ℓπ/g, 3π/4g + ℓπ/g)` for some `ℓ`.
pub fn in_first_cycle_interval<T: Real>(g: T, t: T) -> bool {
    let x = (g * t) % T::pi();
    let x = if x < T::zero() { x + T::pi() } else { x };
    x > T::frac_pi_4() && x < lit::<T>(3.0) * T::frac_pi_4()
}

pub fn two_mode_first_cycle<T: Real>(
    theta: T,
    phi: T,
    g: T,
    omega1: T,
    omega2: T,
    t: T,
    dims: [usize; 2],
) -> Result<TwoModeFirstCycle<T>> {
    check_two_mode(theta, g, dims, 2)?;
    if !(omega1 > T::zero() && omega2 > T::zero()) || omega1 == omega2 {
        return Err(Error::InvalidParameter("mode frequencies must be positive and distinct".into()));
    }
    let half = theta * lit::<T>(0.5);
    let (c, s) = (half.cos(), half.sin());
    let (sg, cg) = (g * t).sin_cos();
    let (s2, c2) = (sg * sg, cg * cg);

    let n = dims[0] * dims[1];
    let mut chi = ComplexVector::zeros(n);
    chi[ket(dims, 1, 0)] = cr(c);
    chi[ket(dims, 0, 1)] = cis(phi) * s;
    let mut m = outer(&chi).map(|z| z * s2);
    m[(0, 0)] += cr(c2);

    // the branch formula is written for ω₂ < ω₁; swap labels otherwise
    let low = omega1.min(omega2);
    let mean = s2 * (omega1 * c * c + omega2 * s * s);
    let collective = if in_first_cycle_interval(g, t) {
        mean - low * c2
    } else {
        mean - low * s2
    };
    Ok(TwoModeFirstCycle {
        state: DensityMatrix::trusted(m),
        collective_ergotropy: collective.max(T::zero()),
        mode_ergotropies: [
            two_level_ergotropy(s2 * c * c, omega1),
            two_level_ergotropy(s2 * s * s, omega2),
        ],
    })
}

/// Second cycle, applied to the first-cycle output at `τ_(1) = π/2g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeSecondCycle<T: Real> {
    pub state: DensityMatrix<T>,
    /// Reduced state of mode 1 (populations on `|0⟩, |1⟩, |2⟩, …`).
    pub mode1: DensityMatrix<T>,
    pub mode2: DensityMatrix<T>,
}

pub fn two_mode_second_cycle<T: Real>(theta: T, phi: T, g: T, t: T, dims: [usize; 2]) -> Result<TwoModeSecondCycle<T>> {
    check_two_mode(theta, g, dims, 3)?;
    let half = theta * lit::<T>(0.5);
    let (c, s) = (half.cos(), half.sin());
    let (sg, cg) = (lit::<T>(2.0).sqrt() * g * t).sin_cos();
    let (big_s, big_c) = (sg * sg, cg * cg);

    let n = dims[0] * dims[1];
    let mut chi = ComplexVector::zeros(n);
    chi[ket(dims, 1, 0)] = cr(c);
    chi[ket(dims, 0, 1)] = cis(phi) * s;
    let mut xi = ComplexVector::zeros(n);
    xi[ket(dims, 2, 0)] = cr(c * c);
    xi[ket(dims, 1, 1)] = cis(phi) * (lit::<T>(2.0).sqrt() * c * s);
    xi[ket(dims, 0, 2)] = cis(lit::<T>(2.0) * phi) * (s * s);
    let m = outer(&chi).map(|z| z * big_c) + outer(&xi).map(|z| z * big_s);

    let (c2, s2) = (c * c, s * s);
    let mut p1 = vec![T::zero(); dims[0]];
    p1[0] = big_s * s2 * s2 + big_c * s2;
    p1[1] = big_s * lit::<T>(2.0) * c2 * s2 + big_c * c2;
    p1[2] = big_s * c2 * c2;
    let mut p2 = vec![T::zero(); dims[1]];
    p2[0] = big_s * c2 * c2 + big_c * c2;
    p2[1] = big_s * lit::<T>(2.0) * c2 * s2 + big_c * s2;
    p2[2] = big_s * s2 * s2;
    Ok(TwoModeSecondCycle {
        state: DensityMatrix::trusted(m),
        mode1: DensityMatrix::trusted(crate::qla::real_diagonal(&p1)),
        mode2: DensityMatrix::trusted(crate::qla::real_diagonal(&p2)),
    })
}

/// Optimal second-cycle time `(2ℓ+1)π/(2√2 g)`.
pub fn tau_second_cycle<T: Real>(g: T, l: usize) -> T {
    from_usize::<T>(2 * l + 1) * T::pi() / (lit::<T>(2.0) * lit::<T>(2.0).sqrt() * g)
}

/// Both modes hold ergotropy after the second cycle iff `sin²(θ/2)` lies in
/// `[1/3, 2/3]` (the endpoints themselves give a passive mode).
pub fn simultaneous_window<T: Real>(theta: T) -> bool {
    let s2 = (theta * lit::<T>(0.5)).sin().powi(2);
    s2 >= lit::<T>(1.0 / 3.0) && s2 <= lit::<T>(2.0 / 3.0)
}
