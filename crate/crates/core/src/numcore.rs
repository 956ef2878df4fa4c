//! Dense complex linear-algebra substrate.
//!
//! Everything downstream is built on four services: operator norms, support
//! projections, orthonormal subspaces under the trace (Hilbert-Schmidt)
//! inner product, and numerical kernels of stacked linear constraint
//! systems. All rank decisions use a relative singular-value cutoff against
//! the largest singular value, so they are scale invariant.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense complex matrix; the carrier for every operator-space element.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = DVector<Complex64>;

/// Numerical tolerances shared by every rank, membership, and residual
/// decision in the workbench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub tol_rank: f64,
    /// Maximum HS distance for subspace membership, relative to max(1, ‖m‖).
    pub tol_member: f64,
    /// Maximum deviation for scalar norm equalities.
    pub tol_norm: f64,
    /// Maximum residual for algebraic identities.
    pub tol_resid: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_rank: 1e-9,
            tol_member: 1e-8,
            tol_norm: 1e-8,
            tol_resid: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tol_rank, self.tol_member, self.tol_norm, self.tol_resid];
        if all.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::Input(
                "all tolerances must be strictly positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Which side of a matrix family a support projection lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Projection onto the span of all column ranges (acts on the codomain).
    Left,
    /// Projection onto the span of all row supports (acts on the domain).
    Right,
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for (idx, v) in m.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            let r = idx % m.nrows();
            let c = idx / m.nrows();
            return Err(Error::Input(format!(
                "non-finite entry at ({r},{c}): {v}"
            )));
        }
    }
    Ok(())
}

/// Largest singular value. Degenerate shapes (0×n, n×0) have norm 0.
///
/// Inputs are validated for finiteness at the construction boundaries
/// (document load, span); a NaN fed here propagates rather than being
/// silently absorbed.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Checked variant of [`op_norm`]: rejects non-finite entries.
pub fn op_norm_checked(m: &CMatrix) -> Result<f64> {
    ensure_finite(m)?;
    Ok(op_norm(m))
}

/// Trace inner product ⟨a,b⟩ = trace(a* b).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matrix_unit(rows: usize, cols: usize, r: usize, c: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    m[(r, c)] = Complex64::new(1.0, 0.0);
    m
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Matrix units for a fixed entry pattern, in the given order.
pub fn pattern_units(shape: (usize, usize), entries: &[(usize, usize)]) -> Vec<CMatrix> {
    entries
        .iter()
        .map(|&(r, c)| matrix_unit(shape.0, shape.1, r, c))
        .collect()
}

/// Row-major vectorization.
pub fn vectorize(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_fn(r * c, |i, _| m[(i / c, i % c)])
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    debug_assert_eq!(v.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Assemble a block matrix from a rectangular grid of equal-shape blocks.
pub fn assemble_blocks(grid: &[Vec<CMatrix>]) -> CMatrix {
    let bn = grid.len();
    let bm = grid[0].len();
    let (h, k) = grid[0][0].shape();
    let mut out = CMatrix::zeros(bn * h, bm * k);
    for (i, row) in grid.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            debug_assert_eq!(blk.shape(), (h, k));
            out.view_mut((i * h, j * k), (h, k)).copy_from(blk);
        }
    }
    out
}

fn check_common_shape(mats: &[CMatrix], shape: (usize, usize)) -> Result<()> {
    for (i, m) in mats.iter().enumerate() {
        if m.shape() != shape {
            return Err(Error::Input(format!(
                "matrix {} has shape {:?}, expected {:?}",
                i,
                m.shape(),
                shape
            )));
        }
        ensure_finite(m)?;
    }
    Ok(())
}

/// Orthogonal projection onto the span of the column ranges (left) or row
/// supports (right) of a matrix family. Idempotent and Hermitian by
/// construction. An empty family yields the zero projection of the
/// requested side's size.
pub fn support_projection(
    mats: &[CMatrix],
    shape: (usize, usize),
    side: Side,
    tol: &Tolerances,
) -> Result<CMatrix> {
    check_common_shape(mats, shape)?;
    let n = match side {
        Side::Left => shape.0,
        Side::Right => shape.1,
    };
    if mats.is_empty() || shape.0 == 0 || shape.1 == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    // Stack the family (or its adjoints) horizontally; the left singular
    // vectors above the rank cutoff span the support.
    let stacked = match side {
        Side::Left => {
            let cols: Vec<CMatrix> = mats.to_vec();
            CMatrix::from_fn(shape.0, shape.1 * mats.len(), |i, j| {
                cols[j / shape.1][(i, j % shape.1)]
            })
        }
        Side::Right => {
            let adj: Vec<CMatrix> = mats.iter().map(|m| m.adjoint()).collect();
            CMatrix::from_fn(shape.1, shape.0 * mats.len(), |i, j| {
                adj[j / shape.0][(i, j % shape.0)]
            })
        }
    };
    let svd = stacked.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let mut p = CMatrix::zeros(n, n);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol.tol_rank * smax {
            let col = u.column(i);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += col[r] * col[c].conj();
                }
            }
        }
    }
    Ok(p)
}

/// Orthonormal column basis of the range of a projection (or any PSD
/// matrix); columns with singular value above 1/2 are kept, which is exact
/// for genuine projections.
pub fn isometry_from_projection(p: &CMatrix) -> CMatrix {
    let n = p.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let svd = p.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.5)
        .map(|(i, _)| i)
        .collect();
    CMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
}

/// An orthonormalized linear span of complex matrices of common shape.
///
/// The basis is orthonormal under the trace inner product, so orthogonal
/// projection and membership are basis independent.
#[derive(Debug, Clone)]
pub struct Subspace {
    rows: usize,
    cols: usize,
    basis: Vec<CMatrix>,
}

impl Subspace {
    /// Orthonormal basis of the span, with the dimension decided as the
    /// numerical rank of the stacked system at `tol_rank`.
    pub fn span(shape: (usize, usize), mats: &[CMatrix], tol: &Tolerances) -> Result<Self> {
        check_common_shape(mats, shape)?;
        let (r, c) = shape;
        let n = r * c;
        if mats.is_empty() || n == 0 {
            return Ok(Subspace {
                rows: r,
                cols: c,
                basis: Vec::new(),
            });
        }
        let stacked = CMatrix::from_fn(mats.len(), n, |i, j| mats[i][(j / c, j % c)]);
        let svd = stacked.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
        let smax = svd.singular_values.max();
        let mut basis = Vec::new();
        if smax > 0.0 {
            for (i, s) in svd.singular_values.iter().enumerate() {
                if *s > tol.tol_rank * smax {
                    let row = v_t.row(i);
                    let vec = CVector::from_fn(n, |j, _| row[j].conj());
                    basis.push(unvectorize(&vec, r, c));
                }
            }
        }
        Ok(Subspace {
            rows: r,
            cols: c,
            basis,
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Subspace {
            rows,
            cols,
            basis: Vec::new(),
        }
    }

    /// The full matrix space, with matrix units as basis.
    pub fn full(rows: usize, cols: usize) -> Self {
        let mut basis = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                basis.push(matrix_unit(rows, cols, i, j));
            }
        }
        Subspace { rows, cols, basis }
    }

    /// Build directly from an already orthonormal family (debug checked).
    pub fn from_orthonormal(shape: (usize, usize), basis: Vec<CMatrix>) -> Self {
        #[cfg(debug_assertions)]
        for (i, a) in basis.iter().enumerate() {
            debug_assert_eq!(a.shape(), shape);
            for (j, b) in basis.iter().enumerate() {
                let g = hs_inner(a, b);
                let want = if i == j { 1.0 } else { 0.0 };
                debug_assert!(
                    (g - Complex64::new(want, 0.0)).norm() < 1e-7,
                    "basis not orthonormal at ({i},{j}): {g}"
                );
            }
        }
        Subspace {
            rows: shape.0,
            cols: shape.1,
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    /// Orthogonal projection of `m` onto the subspace.
    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for b in &self.basis {
            let coeff = hs_inner(b, m);
            out += b * coeff;
        }
        out
    }

    /// HS distance ‖m − P(m)‖ to the subspace.
    pub fn member_distance(&self, m: &CMatrix) -> Result<f64> {
        if m.shape() != (self.rows, self.cols) {
            return Err(Error::Input(format!(
                "member_distance: shape {:?} does not match subspace shape {:?}",
                m.shape(),
                (self.rows, self.cols)
            )));
        }
        Ok(hs_norm(&(m - self.project(m))))
    }

    /// Membership at the relative threshold tol_member · max(1, ‖m‖).
    pub fn contains(&self, m: &CMatrix, tol: &Tolerances) -> Result<bool> {
        let d = self.member_distance(m)?;
        Ok(d <= tol.tol_member * hs_norm(m).max(1.0))
    }

    /// Span of the adjoints. The adjoint map preserves HS orthonormality,
    /// so the basis carries over directly.
    pub fn adjoint(&self) -> Subspace {
        Subspace {
            rows: self.cols,
            cols: self.rows,
            basis: self.basis.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Span of the union.
    pub fn sum(&self, other: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        if other.shape() != self.shape() {
            return Err(Error::Input("sum: subspace shapes differ".into()));
        }
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        Subspace::span(self.shape(), &all, tol)
    }

    /// Intersection via the joint kernel of the two stacked
    /// orthogonal-complement projectors. Numerically stable against
    /// near-degenerate bases.
    pub fn intersect(&self, other: &Subspace, tol: &Tolerances) -> Result<Subspace> {
        if other.shape() != self.shape() {
            return Err(Error::Input("intersect: subspace shapes differ".into()));
        }
        let a = self.clone();
        let b = other.clone();
        let constraints: Vec<Box<dyn Fn(&CMatrix) -> CMatrix>> = vec![
            Box::new(move |m: &CMatrix| m - a.project(m)),
            Box::new(move |m: &CMatrix| m - b.project(m)),
        ];
        Ok(linear_kernel(self.shape(), &constraints, tol))
    }

    /// True when every basis vector of `other` lies in `self`.
    pub fn contains_subspace(&self, other: &Subspace, tol: &Tolerances) -> Result<bool> {
        for b in other.basis() {
            if !self.contains(b, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Mutual inclusion of bases.
    pub fn equals(&self, other: &Subspace, tol: &Tolerances) -> Result<bool> {
        Ok(self.dim() == other.dim()
            && self.contains_subspace(other, tol)?
            && other.contains_subspace(self, tol)?)
    }

    /// Detect a 0/1 entry pattern: when every basis vector is supported on
    /// a fixed entry set whose matrix units all lie in the subspace (and
    /// the dimensions agree), report the sorted entry list.
    pub fn pattern(&self, tol: &Tolerances) -> Option<Vec<(usize, usize)>> {
        let thresh = tol.tol_member.sqrt();
        let mut support = std::collections::BTreeSet::new();
        for b in &self.basis {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    if b[(r, c)].norm() > thresh {
                        support.insert((r, c));
                    }
                }
            }
        }
        if support.len() != self.dim() {
            return None;
        }
        for &(r, c) in &support {
            let u = matrix_unit(self.rows, self.cols, r, c);
            if !self.contains(&u, tol).ok()? {
                return None;
            }
        }
        Some(support.into_iter().collect())
    }
}

/// Orthonormal basis of the joint numerical kernel of a family of linear
/// maps acting on an `shape`-sized unknown. Each map is sampled on matrix
/// units to build the stacked constraint matrix; rank is decided at
/// `tol_rank` on its singular values. An empty family yields the full
/// ambient space.
pub fn linear_kernel<F>(shape: (usize, usize), constraints: &[F], tol: &Tolerances) -> Subspace
where
    F: Fn(&CMatrix) -> CMatrix,
{
    let (r, c) = shape;
    let n = r * c;
    if n == 0 {
        return Subspace::zero(r, c);
    }
    if constraints.is_empty() {
        return Subspace::full(r, c);
    }
    // Column j of the stacked matrix holds all constraint residuals of the
    // j-th matrix unit.
    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    let mut total_rows = 0;
    for j in 0..n {
        let unit = matrix_unit(r, c, j / c, j % c);
        let mut col_parts = Vec::with_capacity(constraints.len());
        for f in constraints {
            col_parts.push(vectorize(&f(&unit)));
        }
        let col = CVector::from_iterator(
            col_parts.iter().map(|p| p.len()).sum(),
            col_parts.iter().flat_map(|p| p.iter().cloned()),
        );
        if j == 0 {
            total_rows = col.len();
        }
        columns.push(col);
    }
    if total_rows == 0 {
        return Subspace::full(r, c);
    }
    let m = CMatrix::from_fn(total_rows, n, |i, j| columns[j][i]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let smax = svd.singular_values.max();
    let rank = if smax <= 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|s| **s > tol.tol_rank * smax)
            .count()
    };
    let mut basis = Vec::with_capacity(n - rank);
    for i in rank..v_t.nrows() {
        let row = v_t.row(i);
        let vec = CVector::from_fn(n, |j, _| row[j].conj());
        basis.push(unvectorize(&vec, r, c));
    }
    // v_t from a thin SVD has min(rows, n) rows; complete the kernel with
    // the nullspace directions the decomposition did not carry.
    if v_t.nrows() < n {
        let mut carried: Vec<CVector> = (0..v_t.nrows())
            .map(|i| CVector::from_fn(n, |j, _| v_t[(i, j)].conj()))
            .collect();
        for j in 0..n {
            if carried.len() == n {
                break;
            }
            let mut cand = CVector::zeros(n);
            cand[j] = Complex64::new(1.0, 0.0);
            for b in &carried {
                let coeff: Complex64 = b.iter().zip(cand.iter()).map(|(x, y)| x.conj() * y).sum();
                cand -= b * coeff;
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                cand /= Complex64::new(nrm, 0.0);
                basis.push(unvectorize(&cand, r, c));
                carried.push(cand);
            }
        }
    }
    Subspace {
        rows: r,
        cols: c,
        basis,
    }
}

/// Kernel of a constraint family restricted to a subspace: returns
/// orthonormal elements of `within` annihilated by every map.
pub fn kernel_within<F>(within: &Subspace, constraints: &[F], tol: &Tolerances) -> Vec<CMatrix>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    let d = within.dim();
    if d == 0 {
        return Vec::new();
    }
    if constraints.is_empty() {
        return within.basis().to_vec();
    }
    let mut columns: Vec<CVector> = Vec::with_capacity(d);
    for b in within.basis() {
        let parts: Vec<CVector> = constraints.iter().map(|f| vectorize(&f(b))).collect();
        columns.push(CVector::from_iterator(
            parts.iter().map(|p| p.len()).sum(),
            parts.iter().flat_map(|p| p.iter().cloned()),
        ));
    }
    let rows = columns[0].len();
    if rows == 0 {
        return within.basis().to_vec();
    }
    let m = CMatrix::from_fn(rows, d, |i, j| columns[j][i]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let smax = svd.singular_values.max();
    let rank = if smax <= 0.0 {
        0
    } else {
        svd.singular_values
            .iter()
            .filter(|s| **s > tol.tol_rank * smax)
            .count()
    };
    let mut out = Vec::new();
    for i in rank..v_t.nrows() {
        let mut m_out = CMatrix::zeros(within.shape().0, within.shape().1);
        for (l, b) in within.basis().iter().enumerate() {
            m_out += b * v_t[(i, l)].conj();
        }
        out.push(m_out);
    }
    if v_t.nrows() < d {
        // Thin SVD: remaining coefficient directions are all in the kernel.
        let mut carried: Vec<CVector> = (0..v_t.nrows())
            .map(|i| CVector::from_fn(d, |j, _| v_t[(i, j)].conj()))
            .collect();
        for j in 0..d {
            if carried.len() == d {
                break;
            }
            let mut cand = CVector::zeros(d);
            cand[j] = Complex64::new(1.0, 0.0);
            for b in &carried {
                let coeff: Complex64 = b.iter().zip(cand.iter()).map(|(x, y)| x.conj() * y).sum();
                cand -= b * coeff;
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                cand /= Complex64::new(nrm, 0.0);
                let mut m_out = CMatrix::zeros(within.shape().0, within.shape().1);
                for (l, b) in within.basis().iter().enumerate() {
                    m_out += b * cand[l];
                }
                out.push(m_out);
                carried.push(cand);
            }
        }
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b` via SVD pseudoinverse
/// with the relative rank cutoff.
pub fn least_squares(a: &CMatrix, b: &CVector, tol: &Tolerances) -> CVector {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return CVector::zeros(n);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let mut x = CVector::zeros(n);
    if smax <= 0.0 {
        return x;
    }
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol.tol_rank * smax {
            let ub: Complex64 = u.column(i).iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
            let coeff = ub / Complex64::new(*s, 0.0);
            for j in 0..n {
                x[j] += v_t[(i, j)].conj() * coeff;
            }
        }
    }
    x
}

/// Standard complex Gaussian matrix (independent N(0,1) real and imaginary
/// parts).
pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-ish random unitary from the QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = random_matrix(n, n, rng);
    let qr = g.qr();
    qr.q()
}

/// Random element of a subspace with complex Gaussian coefficients.
pub fn random_element<R: Rng>(sub: &Subspace, rng: &mut R) -> CMatrix {
    let (r, c) = sub.shape();
    let mut out = CMatrix::zeros(r, c);
    for b in sub.basis() {
        let coeff = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        out += b * coeff;
    }
    out
}

/// Random Hermitian element of a *-closed subspace.
pub fn random_hermitian<R: Rng>(sub: &Subspace, rng: &mut R) -> CMatrix {
    let g = random_element(sub, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Residual of a projection candidate: max(‖p² − p‖, ‖p − p*‖).
pub fn projection_residual(p: &CMatrix) -> f64 {
    if p.nrows() == 0 {
        return 0.0;
    }
    let idem = op_norm(&(p * p - p));
    let herm = op_norm(&(p - p.adjoint()));
    idem.max(herm)
}

/// True when all entries are (numerically) zero.
pub fn is_zero_matrix(m: &CMatrix, eps: f64) -> bool {
    m.iter().all(|v| v.norm() <= eps)
}

pub fn zeros_like(m: &CMatrix) -> CMatrix {
    CMatrix::zeros(m.nrows(), m.ncols())
}

pub fn scalar(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn czero() -> Complex64 {
    Complex64::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand::SeedableRng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn op_norm_identity_and_zero() {
        assert!((op_norm(&identity(3)) - 1.0).abs() < 1e-12);
        assert_eq!(op_norm(&CMatrix::zeros(2, 5)), 0.0);
    }

    #[test]
    fn op_norm_diagonal_moduli() {
        // diag(3, 4i): singular values are the entry moduli.
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = scalar(3.0, 0.0);
        m[(1, 1)] = scalar(0.0, 4.0);
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_checked_rejects_nan() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = scalar(f64::NAN, 0.0);
        assert!(op_norm_checked(&m).is_err());
    }

    #[test]
    fn support_projection_examples() {
        let t = tol();
        // Range of E12 is span(e1).
        let e12 = matrix_unit(2, 2, 0, 1);
        let p = support_projection(std::slice::from_ref(&e12), (2, 2), Side::Left, &t).unwrap();
        assert!(op_norm(&(&p - matrix_unit(2, 2, 0, 0))) < 1e-10);
        // Identity has full range.
        let p = support_projection(&[identity(3)], (3, 3), Side::Left, &t).unwrap();
        assert!(op_norm(&(&p - identity(3))) < 1e-10);
        // Row supports of E12 and E22 both span e2.
        let mats = vec![matrix_unit(2, 2, 0, 1), matrix_unit(2, 2, 1, 1)];
        let p = support_projection(&mats, (2, 2), Side::Right, &t).unwrap();
        assert!(op_norm(&(&p - matrix_unit(2, 2, 1, 1))) < 1e-10);
        // Empty family: zero projection of the requested side's size.
        let p = support_projection(&[], (3, 2), Side::Right, &t).unwrap();
        assert_eq!(p.shape(), (2, 2));
        assert!(is_zero_matrix(&p, 0.0));
    }

    #[test]
    fn span_examples() {
        let t = tol();
        let e11 = matrix_unit(2, 2, 0, 0);
        let s = Subspace::span((2, 2), &[e11.clone(), &e11 * scalar(2.0, 0.0)], &t).unwrap();
        assert_eq!(s.dim(), 1);
        let s = Subspace::span(
            (2, 2),
            &[matrix_unit(2, 2, 0, 0), matrix_unit(2, 2, 1, 1)],
            &t,
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        // The five staircase pattern units are independent.
        let units = pattern_units((3, 3), &[(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)]);
        let s = Subspace::span((3, 3), &units, &t).unwrap();
        assert_eq!(s.dim(), 5);
    }

    #[test]
    fn span_rejects_shape_mismatch() {
        let t = tol();
        let err = Subspace::span((2, 2), &[matrix_unit(2, 3, 0, 0)], &t);
        assert!(err.is_err());
    }

    #[test]
    fn member_distance_examples() {
        let t = tol();
        let e11 = matrix_unit(2, 2, 0, 0);
        let e22 = matrix_unit(2, 2, 1, 1);
        let v = Subspace::span((2, 2), std::slice::from_ref(&e11), &t).unwrap();
        assert!(v.member_distance(&e11).unwrap() < 1e-12);
        assert!((v.member_distance(&e22).unwrap() - 1.0).abs() < 1e-12);
        // span((E11+E22)/√2): projection residual of E11 is 1/√2.
        let diag = (&e11 + &e22) * scalar(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let v = Subspace::span((2, 2), &[diag], &t).unwrap();
        let d = v.member_distance(&e11).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(v.member_distance(&matrix_unit(2, 3, 0, 0)).is_err());
    }

    #[test]
    fn linear_kernel_examples() {
        let t = tol();
        // z·E11 = 0 on M_2: the second column stays free.
        let e11 = matrix_unit(2, 2, 0, 0);
        let cons = vec![move |z: &CMatrix| z * &e11];
        let k = linear_kernel((2, 2), &cons, &t);
        assert_eq!(k.dim(), 2);
        // No constraints: the full ambient space.
        let k = linear_kernel::<fn(&CMatrix) -> CMatrix>((2, 2), &[], &t);
        assert_eq!(k.dim(), 4);
        // zI ∈ target: full target keeps everything, span(I) keeps dim 1.
        let full = Subspace::full(2, 2);
        let cons = vec![move |z: &CMatrix| {
            let prod = z * identity(2);
            &prod - full.project(&prod)
        }];
        let k = linear_kernel((2, 2), &cons, &t);
        assert_eq!(k.dim(), 4);
        let line = Subspace::span((2, 2), &[identity(2)], &t).unwrap();
        let cons = vec![move |z: &CMatrix| {
            let prod = z * identity(2);
            &prod - line.project(&prod)
        }];
        let k = linear_kernel((2, 2), &cons, &t);
        assert_eq!(k.dim(), 1);
    }

    #[test]
    fn intersection_of_patterns() {
        let t = tol();
        let a = Subspace::span((2, 2), &pattern_units((2, 2), &[(0, 0), (0, 1)]), &t).unwrap();
        let b = Subspace::span((2, 2), &pattern_units((2, 2), &[(0, 1), (1, 1)]), &t).unwrap();
        let i = a.intersect(&b, &t).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&matrix_unit(2, 2, 0, 1), &t).unwrap());
    }

    #[test]
    fn pattern_detection() {
        let t = tol();
        let entries = [(0usize, 0usize), (0, 1), (1, 2)];
        let s = Subspace::span((2, 3), &pattern_units((2, 3), &entries), &t).unwrap();
        let p = s.pattern(&t).unwrap();
        assert_eq!(p, entries.to_vec());
        // A rotated line is not a pattern space.
        let mut m = matrix_unit(2, 2, 0, 0);
        m[(1, 1)] = scalar(1.0, 0.0);
        let s = Subspace::span((2, 2), &[m], &t).unwrap();
        assert!(s.pattern(&t).is_none());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(4, &mut rng);
        assert!(op_norm(&(&u * u.adjoint() - identity(4))) < 1e-10);
    }

    #[test]
    fn degenerate_shapes_flow_through() {
        let t = tol();
        let s = Subspace::span((0, 3), &[], &t).unwrap();
        assert_eq!(s.dim(), 0);
        assert_eq!(op_norm(&CMatrix::zeros(0, 3)), 0.0);
        let p = support_projection(&[], (0, 3), Side::Left, &t).unwrap();
        assert_eq!(p.shape(), (0, 0));
    }
}
