//! Minimum and maximum daemonic ergotropy over projective measurements of
//! the charger.
//!
//! The search is a heuristic global optimization: a deterministic coarse
//! sampling of the basis manifold followed by coordinate descent with
//! golden-section line searches. Qubit chargers use an (α, γ) grid; larger
//! chargers use seeded random multistarts over a product of two-level
//! rotations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ergo::{BasisParams, ChargerBlocks, MeasurementBasis};
use crate::error::{Error, Result};
use crate::model::BatteryChargerModel;
use crate::qla::{ComplexVector, DensityMatrix};
use crate::scalar::{cis, cr, from_usize, lit, Real};

/// Threshold below which a daemonic gap counts as zero.
pub const DEFAULT_GAPLESS_THRESHOLD: f64 = 1e-3;

/// `ξ₊ = cos(α/2)|e₀⟩ + e^{iγ} sin(α/2)|e₁⟩`, `ξ₋ = sin(α/2)|e₀⟩ − e^{iγ} cos(α/2)|e₁⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBasisParams<T: Real> {
    pub alpha: T,
    pub gamma: T,
}

/// Angle/phase pairs `(a, c)` for every level pair `(i, j)`, `i < j`, in
/// lexicographic order: `d(d−1)` numbers in total.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditBasisParams<T: Real> {
    pub values: Vec<T>,
}

impl<T: Real> QuditBasisParams<T> {
    pub fn zeros(d: usize) -> Self {
        Self {
            values: vec![T::zero(); d * d.saturating_sub(1)],
        }
    }
}

fn qubit_vectors<T: Real>(alpha: T, gamma: T) -> [ComplexVector<T>; 2] {
    let half = alpha * lit::<T>(0.5);
    let (c, s) = (half.cos(), half.sin());
    let ph = cis(gamma);
    [
        ComplexVector::from_vec(vec![cr(c), ph * s]),
        ComplexVector::from_vec(vec![cr(s), -ph * c]),
    ]
}

pub fn qubit_basis<T: Real>(params: QubitBasisParams<T>) -> MeasurementBasis<T> {
    let [p, m] = qubit_vectors(params.alpha, params.gamma);
    MeasurementBasis::trusted(vec![p, m], BasisParams::Qubit(params))
}

fn qudit_vectors<T: Real>(d: usize, values: &[T]) -> Vec<ComplexVector<T>> {
    // columns of U = G_(0,1) G_(0,2) … G_(d−2,d−1)
    let mut u = nalgebra::DMatrix::<num_complex::Complex<T>>::identity(d, d);
    let mut p = 0;
    for i in 0..d {
        for j in i + 1..d {
            let (a, c) = (values[p], values[p + 1]);
            p += 2;
            let half = a * lit::<T>(0.5);
            let (co, si) = (half.cos(), half.sin());
            let ph = cis(c);
            // right-multiply by the rotation acting on columns i and j
            for r in 0..d {
                let ui = u[(r, i)];
                let uj = u[(r, j)];
                u[(r, i)] = ui * co + uj * ph * si;
                u[(r, j)] = -(ui * ph.conj() * si) + uj * co;
            }
        }
    }
    (0..d).map(|k| u.column(k).into_owned()).collect()
}

/// Orthonormal basis on `d` levels from `d(d−1)` rotation parameters.
pub fn qudit_basis<T: Real>(d: usize, params: QuditBasisParams<T>) -> Result<MeasurementBasis<T>> {
    if d < 2 || params.values.len() != d * (d - 1) {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for a {d}-level charger (need {})",
            params.values.len(),
            d * d.saturating_sub(1)
        )));
    }
    let vectors = qudit_vectors(d, &params.values);
    Ok(MeasurementBasis::trusted(vectors, BasisParams::Qudit(params)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Search effort. The defaults are what the reports use.
#[derive(Debug, Clone, PartialEq)]
pub struct OptBudget {
    pub alpha_points: usize,
    pub gamma_points: usize,
    /// Random starts for chargers with more than two levels.
    pub starts: usize,
    pub seed: u64,
    /// Grid points (qubit) or coarse starts (qudit) that get refined.
    pub refine_seeds: usize,
    pub param_tol: f64,
    pub max_sweeps: usize,
    pub max_evaluations: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self {
            alpha_points: 181,
            gamma_points: 72,
            starts: 64,
            seed: 0x5eed,
            refine_seeds: 4,
            param_tol: 1e-6,
            max_sweeps: 200,
            max_evaluations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<T: Real> {
    pub value: T,
    pub params: BasisParams<T>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Objective on a flat parameter vector, oriented so that smaller is better.
struct Objective<'a, T: Real> {
    blocks: &'a ChargerBlocks<T>,
    d: usize,
    sign: T,
}

impl<T: Real> Objective<'_, T> {
    fn eval(&self, x: &[T]) -> T {
        let value = if self.d == 2 {
            self.blocks.daemonic(&qubit_vectors(x[0], x[1]))
        } else {
            self.blocks.daemonic(&qudit_vectors(self.d, x))
        };
        self.sign * value
    }
}

#[derive(Clone, Copy)]
enum Domain {
    /// Clamped to `[0, π]`.
    Polar,
    /// Wrapped into `[0, 2π)`.
    Periodic,
}

fn wrap<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let r = x % two_pi;
    if r < T::zero() {
        r + two_pi
    } else {
        r
    }
}

pub(crate) struct Counter {
    pub(crate) used: usize,
    pub(crate) limit: usize,
}

impl Counter {
    fn exhausted(&self) -> bool {
        self.used >= self.limit
    }
}

/// Best point among all evaluated on `[lo, hi]`, endpoints included.
pub(crate) fn golden_section<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T, counter: &mut Counter) -> (T, T) {
    let inv_phi = lit::<T>(0.618_033_988_749_894_8);
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f(a));
    let fb = f(b);
    counter.used += 2;
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    counter.used += 2;
    for &(x, v) in &[(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    while (b - a) > tol && !counter.exhausted() {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
        counter.used += 1;
    }
    best
}

/// Coordinate descent from `x` (value `fx`) with line searches over
/// `[x_k − h_k, x_k + h_k]`. Returns the final point, value and whether the
/// last sweep moved every coordinate by less than `tol`.
fn coordinate_descent<T: Real>(
    obj: &Objective<'_, T>,
    mut x: Vec<T>,
    mut fx: T,
    steps: &[T],
    domains: &[Domain],
    tol: T,
    max_sweeps: usize,
    counter: &mut Counter,
) -> (Vec<T>, T, bool) {
    for _ in 0..max_sweeps {
        let mut moved = T::zero();
        for k in 0..x.len() {
            if counter.exhausted() {
                return (x, fx, false);
            }
            let (lo, hi) = match domains[k] {
                Domain::Polar => ((x[k] - steps[k]).max(T::zero()), (x[k] + steps[k]).min(T::pi())),
                Domain::Periodic => (x[k] - steps[k], x[k] + steps[k]),
            };
            let mut probe = x.clone();
            let (s, fs) = golden_section(
                |s| {
                    probe[k] = s;
                    obj.eval(&probe)
                },
                lo,
                hi,
                tol,
                counter,
            );
            if fs < fx {
                let s = match domains[k] {
                    Domain::Polar => s,
                    Domain::Periodic => wrap(s),
                };
                moved = moved.max((s - x[k]).abs().min(T::two_pi() - (s - x[k]).abs()));
                x[k] = s;
                fx = fs;
            }
        }
        if moved < tol {
            return (x, fx, true);
        }
    }
    (x, fx, false)
}

fn lexicographic<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Lower value first; values within 1e-12 are ordered by their parameters.
fn better<T: Real>(a: (&[T], T), b: (&[T], T)) -> bool {
    let tie = lit::<T>(1e-12);
    if (a.1 - b.1).abs() <= tie {
        lexicographic(a.0, b.0) == std::cmp::Ordering::Less
    } else {
        a.1 < b.1
    }
}

struct Candidate<T: Real> {
    x: Vec<T>,
    /// Oriented objective (smaller is better).
    f: T,
    converged: bool,
}

fn pick_best<T: Real>(cands: Vec<Candidate<T>>) -> Candidate<T> {
    let mut it = cands.into_iter();
    let mut best = it.next().expect("at least one candidate");
    for c in it {
        if better((&c.x, c.f), (&best.x, best.f)) {
            best = c;
        }
    }
    best
}

/// Grid of daemonic ergotropy values for a qubit charger; `grid[i][j]` is at
/// `α_i = π i/(n_α − 1)`, `γ_j = 2π j/n_γ`.
fn qubit_grid<T: Real>(blocks: &ChargerBlocks<T>, budget: &OptBudget) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let na = budget.alpha_points.max(2);
    let ng = budget.gamma_points.max(1);
    let alphas: Vec<T> = (0..na)
        .map(|i| T::pi() * from_usize::<T>(i) / from_usize::<T>(na - 1))
        .collect();
    let gammas: Vec<T> = (0..ng)
        .map(|j| T::two_pi() * from_usize::<T>(j) / from_usize::<T>(ng))
        .collect();
    let grid: Vec<Vec<T>> = alphas
        .par_iter()
        .map(|&a| gammas.iter().map(|&g| blocks.daemonic(&qubit_vectors(a, g))).collect())
        .collect();
    (alphas, gammas, grid)
}

/// Indices of the best `k` grid points that are local optima over their
/// eight neighbours (γ wraps), for the oriented objective.
fn grid_seeds<T: Real>(grid: &[Vec<T>], sign: T, k: usize) -> Vec<(usize, usize)> {
    let na = grid.len();
    let ng = grid[0].len();
    let f = |i: usize, j: usize| sign * grid[i][j];
    let mut locals = Vec::new();
    for i in 0..na {
        for j in 0..ng {
            let v = f(i, j);
            let mut is_local = true;
            'n: for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= na as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(ng as i64) as usize;
                    if f(ii as usize, jj) < v {
                        is_local = false;
                        break 'n;
                    }
                }
            }
            if is_local {
                locals.push((i, j, v));
            }
        }
    }
    // stable: value, then grid position
    locals.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((a.0, a.1).cmp(&(b.0, b.1)))
    });
    locals.into_iter().take(k.max(1)).map(|(i, j, _)| (i, j)).collect()
}

/// `(π − α, γ + π)` is the same basis with the two outcomes swapped; report
/// the representative with `α ≤ π/2`.
fn canonical_qubit<T: Real>(mut x: Vec<T>) -> Vec<T> {
    if x[0] > T::frac_pi_2() {
        x[0] = T::pi() - x[0];
        x[1] = wrap(x[1] + T::pi());
    }
    x
}

fn optimize_qubit<T: Real>(
    blocks: &ChargerBlocks<T>,
    grid: &(Vec<T>, Vec<T>, Vec<Vec<T>>),
    sense: Sense,
    budget: &OptBudget,
) -> OptResult<T> {
    let sign = match sense {
        Sense::Min => T::one(),
        Sense::Max => -T::one(),
    };
    let (alphas, gammas, values) = grid;
    let obj = Objective { blocks, d: 2, sign };
    let mut counter = Counter {
        used: alphas.len() * gammas.len(),
        limit: budget.max_evaluations,
    };
    let steps = [
        T::pi() / from_usize::<T>(alphas.len() - 1),
        T::two_pi() / from_usize::<T>(gammas.len()),
    ];
    let domains = [Domain::Polar, Domain::Periodic];
    let tol = lit::<T>(budget.param_tol);
    let mut cands = Vec::new();
    for (i, j) in grid_seeds(values, sign, budget.refine_seeds) {
        let x0 = vec![alphas[i], gammas[j]];
        let f0 = sign * values[i][j];
        if counter.exhausted() {
            cands.push(Candidate { x: x0, f: f0, converged: false });
            continue;
        }
        let (x, f, converged) =
            coordinate_descent(&obj, x0, f0, &steps, &domains, tol, budget.max_sweeps, &mut counter);
        cands.push(Candidate { x: canonical_qubit(x), f, converged });
    }
    let best = pick_best(cands);
    OptResult {
        value: sign * best.f,
        params: BasisParams::Qubit(QubitBasisParams {
            alpha: best.x[0],
            gamma: best.x[1],
        }),
        evaluations: counter.used,
        converged: best.converged && !counter.exhausted(),
    }
}

fn optimize_qudit<T: Real>(blocks: &ChargerBlocks<T>, d: usize, sense: Sense, budget: &OptBudget) -> OptResult<T> {
    let sign = match sense {
        Sense::Min => T::one(),
        Sense::Max => -T::one(),
    };
    let obj = Objective { blocks, d, sign };
    let n = d * (d - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut starts = vec![vec![T::zero(); n]];
    for _ in 0..budget.starts {
        starts.push((0..n).map(|_| lit::<T>(rng.random::<f64>() * std::f64::consts::TAU)).collect());
    }
    let domains = vec![Domain::Periodic; n];
    let coarse_steps = vec![lit::<T>(0.5); n];
    let coarse_tol = lit::<T>(1e-3);
    let per_start = budget.max_evaluations / (starts.len() + budget.refine_seeds.max(1));

    // loose local descent from every start, in parallel; each start has its
    // own share of the evaluation budget so the result is schedule-independent
    let coarse: Vec<(Candidate<T>, usize)> = starts
        .into_par_iter()
        .map(|x0| {
            let mut counter = Counter { used: 1, limit: per_start };
            let f0 = obj.eval(&x0);
            let (x, f, _) = coordinate_descent(&obj, x0, f0, &coarse_steps, &domains, coarse_tol, 30, &mut counter);
            (Candidate { x, f, converged: false }, counter.used)
        })
        .collect();
    let mut used: usize = coarse.iter().map(|c| c.1).sum();
    let mut coarse: Vec<Candidate<T>> = coarse.into_iter().map(|c| c.0).collect();
    coarse.sort_by(|a, b| {
        if better((&a.x, a.f), (&b.x, b.f)) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    coarse.truncate(budget.refine_seeds.max(1));

    let fine_steps = vec![lit::<T>(0.05); n];
    let tol = lit::<T>(budget.param_tol);
    let mut cands = Vec::new();
    let mut exhausted = false;
    for c in coarse {
        let mut counter = Counter { used: 0, limit: per_start };
        let (x, f, converged) =
            coordinate_descent(&obj, c.x, c.f, &fine_steps, &domains, tol, budget.max_sweeps, &mut counter);
        exhausted |= counter.exhausted();
        used += counter.used;
        cands.push(Candidate { x, f, converged });
    }
    let best = pick_best(cands);
    OptResult {
        value: sign * best.f,
        params: BasisParams::Qudit(QuditBasisParams { values: best.x }),
        evaluations: used,
        converged: best.converged && !exhausted,
    }
}

/// Minimum or maximum of the daemonic ergotropy over charger bases.
pub fn optimize_daemonic<T: Real>(
    rho_ab: &DensityMatrix<T>,
    model: &BatteryChargerModel<T>,
    sense: Sense,
    budget: &OptBudget,
) -> Result<OptResult<T>> {
    let blocks = ChargerBlocks::new(rho_ab, model)?;
    Ok(optimize_blocks(&blocks, model.charger_dim(), sense, budget))
}

fn optimize_blocks<T: Real>(blocks: &ChargerBlocks<T>, d: usize, sense: Sense, budget: &OptBudget) -> OptResult<T> {
    if d == 2 {
        let grid = qubit_grid(blocks, budget);
        optimize_qubit(blocks, &grid, sense, budget)
    } else {
        optimize_qudit(blocks, d, sense, budget)
    }
}

/// Ergotropy and daemonic extremes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DaemonicReport<T: Real> {
    pub t: T,
    pub ergotropy: T,
    pub daemonic_min: T,
    pub daemonic_max: T,
    /// `E̅_min − E`.
    pub gap: T,
    /// `E̅_max − E`.
    pub gain: T,
    /// `E̅_max − E̅_min`.
    pub band: T,
    pub argmin_params: BasisParams<T>,
    pub argmax_params: BasisParams<T>,
    pub gapless: bool,
    pub converged: bool,
    pub evaluations: usize,
}

/// Knobs for [`daemonic_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub budget: OptBudget,
    pub gapless_threshold: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            budget: OptBudget::default(),
            gapless_threshold: DEFAULT_GAPLESS_THRESHOLD,
        }
    }
}

/// Gap, gain and band of the joint state `rho_ab` (taken at time `t`).
pub fn daemonic_report<T: Real>(
    rho_ab: &DensityMatrix<T>,
    model: &BatteryChargerModel<T>,
    t: T,
    opts: &ReportOptions,
) -> Result<DaemonicReport<T>> {
    let blocks = ChargerBlocks::new(rho_ab, model)?;
    Ok(report_from_blocks(&blocks, model.charger_dim(), t, opts))
}

pub(crate) fn report_from_blocks<T: Real>(
    blocks: &ChargerBlocks<T>,
    d: usize,
    t: T,
    opts: &ReportOptions,
) -> DaemonicReport<T> {
    let e = blocks.ergotropy();
    let (min, max) = if d == 2 {
        let grid = qubit_grid(blocks, &opts.budget);
        (
            optimize_qubit(blocks, &grid, Sense::Min, &opts.budget),
            optimize_qubit(blocks, &grid, Sense::Max, &opts.budget),
        )
    } else {
        (
            optimize_qudit(blocks, d, Sense::Min, &opts.budget),
            optimize_qudit(blocks, d, Sense::Max, &opts.budget),
        )
    };
    let gap = min.value - e;
    DaemonicReport {
        t,
        ergotropy: e,
        daemonic_min: min.value,
        daemonic_max: max.value,
        gap,
        gain: max.value - e,
        band: max.value - min.value,
        argmin_params: min.params,
        argmax_params: max.params,
        gapless: gap <= lit::<T>(opts.gapless_threshold),
        converged: min.converged && max.converged,
        evaluations: min.evaluations + max.evaluations,
    }
}
