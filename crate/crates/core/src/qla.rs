//! Dense complex linear algebra for small quantum systems.
//!
//! Everything here works on `nalgebra::DMatrix<Complex<T>>`. The joint
//! spaces in this crate stay below ~50 dimensions, so dense storage with an
//! eigendecomposition-based propagator is exact to machine precision and
//! cheap to reuse across many time points.
//!
//! Tensor factors are ordered left to right: for `dims = [d0, d1, d2]` the
//! flat index is `(i0 * d1 + i1) * d2 + i2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, cr, lit, to_f64, tol, Real};

pub type ComplexMatrix<T> = DMatrix<Complex<T>>;
pub type ComplexVector<T> = DVector<Complex<T>>;

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const OPERATOR_HERMITIAN_TOL: f64 = 1e-12;
pub(crate) const TRACE_TOL: f64 = 1e-10;
pub(crate) const PSD_TOL: f64 = 1e-10;
pub(crate) const CLAMP_TOL: f64 = 1e-12;
pub(crate) const ZERO_PROB: f64 = 1e-12;

#[inline]
pub(crate) fn modulus<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Largest entrywise modulus of `m − m†`.
pub fn hermiticity_defect<T: Real>(m: &ComplexMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = modulus(m[(i, j)] - m[(j, i)].conj());
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

fn max_abs_entry<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| {
        let a = modulus(*z);
        if a > acc {
            a
        } else {
            acc
        }
    })
}

pub(crate) fn check_finite<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_square<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `(m + m†) / 2`.
pub(crate) fn symmetrize<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let half = lit::<T>(0.5);
    (m + m.adjoint()).map(|z| z * half)
}

/// Standard Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Identity on `n` levels.
pub fn identity<T: Real>(n: usize) -> ComplexMatrix<T> {
    ComplexMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn real_diagonal<T: Real>(diag: &[T]) -> ComplexMatrix<T> {
    let n = diag.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, &d) in diag.iter().enumerate() {
        m[(i, i)] = cr(d);
    }
    m
}

/// `|v⟩⟨v|`.
pub fn outer<T: Real>(v: &ComplexVector<T>) -> ComplexMatrix<T> {
    v * v.adjoint()
}

/// Hermitian operator on a finite-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity (relative to the largest entry) and symmetrizes
    /// away the residual.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let scale = T::one().max(max_abs_entry(&matrix));
        let defect = hermiticity_defect(&matrix);
        if defect > tol::<T>(OPERATOR_HERMITIAN_TOL) * scale {
            return Err(Error::NotHermitian(to_f64(defect)));
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
        })
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        Self {
            matrix: real_diagonal(diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Real part of the diagonal.
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == Complex::new(T::zero(), T::zero())))
    }

    /// `Tr[H ρ]` (real part).
    pub fn expectation(&self, rho: &ComplexMatrix<T>) -> T {
        trace_product(&self.matrix, rho).re
    }
}

/// `Tr[a b]` without forming the product.
pub fn trace_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// A quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates all three state invariants.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let defect = hermiticity_defect(&matrix);
        if defect > tol::<T>(HERMITIAN_TOL) {
            return Err(Error::NotHermitian(to_f64(defect)));
        }
        let matrix = symmetrize(&matrix);
        let tr = matrix.trace().re;
        if (tr - T::one()).abs() > tol::<T>(TRACE_TOL) {
            return Err(Error::InvalidTrace(to_f64(tr)));
        }
        let min = eigenvalues_of(&matrix)
            .into_iter()
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
        if min < -tol::<T>(PSD_TOL) {
            return Err(Error::NotPsd(to_f64(min)));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a positive (possibly roundoff-contaminated) matrix: the
    /// Hermitian part is kept, eigenvalues in `[−1e-12, 0)` are clamped to
    /// zero and the trace is renormalized.
    pub fn from_unnormalized(matrix: ComplexMatrix<T>) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let mut m = symmetrize(&matrix);
        let tr = m.trace().re;
        if tr <= T::zero() {
            return Err(Error::InvalidTrace(to_f64(tr)));
        }
        let inv = T::one() / tr;
        m.iter_mut().for_each(|z| *z *= inv);
        let spec = herm_eig_unchecked(&m);
        let min = spec.eigenvalues.first().copied().unwrap_or_else(T::zero);
        if min < -tol::<T>(PSD_TOL) {
            return Err(Error::NotPsd(to_f64(min)));
        }
        if min < T::zero() {
            debug_assert!(min >= -tol::<T>(CLAMP_TOL) || min >= -tol::<T>(PSD_TOL));
            let clamped: Vec<T> = spec.eigenvalues.iter().map(|&l| l.max(T::zero())).collect();
            let total = clamped.iter().fold(T::zero(), |a, &b| a + b);
            let v = &spec.eigenvectors;
            let mut d = ComplexMatrix::zeros(clamped.len(), clamped.len());
            for (i, &l) in clamped.iter().enumerate() {
                d[(i, i)] = cr(l / total);
            }
            m = symmetrize(&(v * d * v.adjoint()));
        }
        Ok(Self { matrix: m })
    }

    /// Skips validation; the caller guarantees a state up to roundoff.
    pub(crate) fn trusted(matrix: ComplexMatrix<T>) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn from_pure(psi: &ComplexVector<T>) -> Result<Self> {
        let norm = psi.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        if (norm - T::one()).abs() > tol::<T>(TRACE_TOL) {
            return Err(Error::InvalidTrace(to_f64(norm)));
        }
        Ok(Self {
            matrix: symmetrize(&outer(psi)),
        })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(pops: &[T]) -> Result<Self> {
        if let Some(&p) = pops.iter().find(|p| **p < T::zero()) {
            return Err(Error::NotPsd(to_f64(p)));
        }
        let sum = pops.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > tol::<T>(TRACE_TOL) {
            return Err(Error::InvalidTrace(to_f64(sum)));
        }
        Ok(Self {
            matrix: real_diagonal(pops),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// Diagonal (real parts) in the computational basis.
    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn off_diagonal_norm(&self) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.matrix[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        eigenvalues_of(&self.matrix)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        trace_product(&self.matrix, &self.matrix).re
    }

    /// Checks every state invariant, returning the first violated one.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.matrix.clone()).map(|_| ())
    }
}

/// Eigenpairs of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix<T>,
}

/// Index sets of the connected components of the sparsity graph of `m`.
/// Components are returned ordered by their smallest index; indices within a
/// component are ascending.
fn components<T: Real>(m: &ComplexMatrix<T>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < comp.len() {
            let i = comp[head];
            head += 1;
            for j in 0..n {
                if label[j] == usize::MAX && (m[(i, j)] != zero || m[(j, i)] != zero) {
                    label[j] = id;
                    comp.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn leading_index<T: Real>(v: &ComplexMatrix<T>, col: usize) -> usize {
    let mut best = 0;
    let mut best_mag = -T::one();
    for i in 0..v.nrows() {
        let mag = v[(i, col)].norm_sqr();
        // first index wins among equal magnitudes (to roundoff)
        if mag > best_mag + tol::<T>(1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    best
}

/// Hermitian eigendecomposition with deterministic ordering.
///
/// The sparsity graph is split into connected components first, so an
/// operator that conserves some quantum number is diagonalized block by
/// block and its eigenvectors carry exact zeros outside their block.
/// Eigenvalues are ascending; near-ties (within `1e-12·‖H‖`) are ordered by
/// the basis index where the eigenvector has its largest component, and each
/// eigenvector's largest component is made real and positive.
pub fn herm_eig<T: Real>(h: &HermitianOperator<T>) -> Spectrum<T> {
    herm_eig_unchecked(h.matrix())
}

/// As [`herm_eig`], validating Hermiticity of a raw matrix first.
pub fn herm_eig_matrix<T: Real>(m: &ComplexMatrix<T>) -> Result<Spectrum<T>> {
    let h = HermitianOperator::new(m.clone())?;
    Ok(herm_eig(&h))
}

pub(crate) fn herm_eig_unchecked<T: Real>(m: &ComplexMatrix<T>) -> Spectrum<T> {
    let n = m.nrows();
    let mut pairs: Vec<(T, ComplexVector<T>)> = Vec::with_capacity(n);
    for comp in components(m) {
        let k = comp.len();
        if k == 1 {
            let mut v = ComplexVector::zeros(n);
            v[comp[0]] = cr(T::one());
            pairs.push((m[(comp[0], comp[0])].re, v));
            continue;
        }
        let sub = ComplexMatrix::from_fn(k, k, |i, j| m[(comp[i], comp[j])]);
        let eig = sub.symmetric_eigen();
        for c in 0..k {
            let mut v = ComplexVector::zeros(n);
            for (r, &g) in comp.iter().enumerate() {
                v[g] = eig.eigenvectors[(r, c)];
            }
            pairs.push((eig.eigenvalues[c], v));
        }
    }

    let mut vecs = ComplexMatrix::zeros(n, n);
    for (c, (_, v)) in pairs.iter().enumerate() {
        vecs.set_column(c, v);
    }
    let mut order: Vec<(T, usize, usize)> = pairs
        .iter()
        .enumerate()
        .map(|(c, (l, _))| (*l, leading_index(&vecs, c), c))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let scale = T::one().max(max_abs_entry(m));
    let tie = tol::<T>(1e-12) * scale;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && order[end].0 - order[end - 1].0 <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|e| e.1);
        start = end;
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &(l, lead, src)) in order.iter().enumerate() {
        let mut col = vecs.column(src).into_owned();
        let pivot = col[lead];
        let mag = modulus(pivot);
        if mag > T::zero() {
            let phase = Complex::new(pivot.re / mag, -pivot.im / mag);
            col.iter_mut().for_each(|z| *z *= phase);
        }
        eigenvalues.push(l);
        eigenvectors.set_column(dst, &col);
    }
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Ascending eigenvalues of a Hermitian matrix, skipping rows and columns
/// that are identically zero (each contributes an exact zero eigenvalue).
pub(crate) fn eigenvalues_of<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    let n = m.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    let support: Vec<usize> = (0..n)
        .filter(|&i| (0..n).any(|j| m[(i, j)] != zero))
        .collect();
    let mut out: Vec<T> = vec![T::zero(); n - support.len()];
    match support.len() {
        0 => {}
        1 => out.push(m[(support[0], support[0])].re),
        2 => {
            let a = m[(support[0], support[0])].re;
            let d = m[(support[1], support[1])].re;
            let b = m[(support[0], support[1])];
            let half = lit::<T>(0.5);
            let mean = (a + d) * half;
            let r = (((a - d) * half).powi(2) + b.norm_sqr()).sqrt();
            out.push(mean - r);
            out.push(mean + r);
        }
        k => {
            let sub = ComplexMatrix::from_fn(k, k, |i, j| m[(support[i], support[j])]);
            out.extend(sub.symmetric_eigenvalues().iter().copied());
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn check_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}

/// Reduced matrix over the factors in `keep` (trace over the rest). No
/// state validation; used on hot paths.
pub(crate) fn partial_trace_matrix<T: Real>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> ComplexMatrix<T> {
    let nf = dims.len();
    let traced: Vec<usize> = (0..nf).filter(|f| !keep.contains(f)).collect();
    let kept_dim: usize = keep.iter().map(|&f| dims[f]).product();
    let traced_dim: usize = traced.iter().map(|&f| dims[f]).product();

    // stride of each factor in the flat index
    let mut stride = vec![1usize; nf];
    for f in (0..nf.saturating_sub(1)).rev() {
        stride[f] = stride[f + 1] * dims[f + 1];
    }
    let flat = |factors: &[usize], digits_of: usize| -> usize {
        let mut rem = digits_of;
        let mut idx = 0;
        for &f in factors.iter().rev() {
            idx += (rem % dims[f]) * stride[f];
            rem /= dims[f];
        }
        idx
    };
    let kept_offsets: Vec<usize> = (0..kept_dim).map(|a| flat(keep, a)).collect();
    let traced_offsets: Vec<usize> = (0..traced_dim).map(|t| flat(&traced, t)).collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (a, &ra) in kept_offsets.iter().enumerate() {
        for (b, &rb) in kept_offsets.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &t in &traced_offsets {
                acc += m[(ra + t, rb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Reduced state over the factors listed in `keep`, returned in the same
/// factor order as `dims`.
pub fn partial_trace<T: Real>(
    rho: &DensityMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix<T>> {
    let total: usize = dims.iter().product();
    check_dims("partial_trace", total, rho.dim())?;
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial_trace: keep is empty".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&f| f >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: factor {bad} out of range for {} factors",
            dims.len()
        )));
    }
    Ok(DensityMatrix::trusted(partial_trace_matrix(
        rho.matrix(),
        dims,
        &keep,
    )))
}

/// Exact unitary propagation `e^{−iHt}` built from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    spectrum: Spectrum<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &HermitianOperator<T>) -> Self {
        Self {
            spectrum: herm_eig(h),
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.eigenvalues.len()
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    /// `U(t) = V e^{−iλt} V†`.
    pub fn unitary(&self, t: T) -> ComplexMatrix<T> {
        let v = &self.spectrum.eigenvectors;
        let mut scaled = v.clone();
        for (c, &l) in self.spectrum.eigenvalues.iter().enumerate() {
            let phase = cis(-l * t);
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * v.adjoint()
    }

    /// `U ρ U†` on a raw matrix.
    pub fn evolve_matrix(&self, t: T, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let u = self.unitary(t);
        &u * rho * u.adjoint()
    }

    pub fn evolve(&self, t: T, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        check_dims("evolve", self.dim(), rho.dim())?;
        if !t.is_finite() {
            return Err(Error::InvalidParameter("evolve: non-finite time".into()));
        }
        Ok(DensityMatrix::trusted(self.evolve_matrix(t, rho.matrix())))
    }
}

/// `U ρ U†` with `U = exp(−iHt)`.
pub fn evolve<T: Real>(
    h: &HermitianOperator<T>,
    t: T,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    check_dims("evolve", h.dim(), rho.dim())?;
    Propagator::new(h).evolve(t, rho)
}

/// Applies a projector on the full space: returns `Tr[PρP]` and, when that
/// probability exceeds `1e-12`, the normalized post-measurement state.
pub fn apply_projector<T: Real>(
    rho: &DensityMatrix<T>,
    p: &ComplexMatrix<T>,
) -> Result<(T, Option<DensityMatrix<T>>)> {
    check_square(p)?;
    check_dims("apply_projector", rho.dim(), p.nrows())?;
    let herm = hermiticity_defect(p);
    let idem = max_abs_entry(&(p * p - p));
    let defect = herm.max(idem);
    if defect > tol::<T>(1e-10) {
        return Err(Error::NotProjector(to_f64(defect)));
    }
    let post = p * rho.matrix() * p;
    let prob = post.trace().re;
    if prob <= tol::<T>(ZERO_PROB) {
        return Ok((prob.max(T::zero()), None));
    }
    let inv = T::one() / prob;
    Ok((prob, Some(DensityMatrix::trusted(post.map(|z| z * inv)))))
}
