//! The operator-space data model: corner presentation X ⊂ B(ℂᵏ,ℂʰ),
//! nondegenerate reduction, amplification, generated TRO, and the linking
//! *-algebra inside the square matrices of size h+k.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numcore::{
    hs_norm, identity, isometry_from_projection, matrix_unit, op_norm, support_projection,
    CMatrix, Side, Subspace, Tolerances,
};

/// A concrete operator space: ambient corner dimensions (h, k) plus an
/// orthonormalized basis of h×k complex matrices.
#[derive(Debug, Clone)]
pub struct OperatorSpace {
    name: String,
    h: usize,
    k: usize,
    space: Subspace,
}

impl OperatorSpace {
    /// Span the given matrices and wrap them as an operator space.
    pub fn new(
        name: impl Into<String>,
        h: usize,
        k: usize,
        basis: &[CMatrix],
        tol: &Tolerances,
    ) -> Result<Self> {
        let space = Subspace::span((h, k), basis, tol)?;
        Ok(OperatorSpace {
            name: name.into(),
            h,
            k,
            space,
        })
    }

    pub fn from_subspace(name: impl Into<String>, space: Subspace) -> Self {
        let (h, k) = space.shape();
        OperatorSpace {
            name: name.into(),
            h,
            k,
            space,
        }
    }

    /// The full rectangle M_{h,k}.
    pub fn full(name: impl Into<String>, h: usize, k: usize) -> Self {
        OperatorSpace {
            name: name.into(),
            h,
            k,
            space: Subspace::full(h, k),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn basis(&self) -> &[CMatrix] {
        self.space.basis()
    }

    /// Left and right support projections of the basis family.
    pub fn supports(&self, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
        let left = support_projection(self.basis(), (self.h, self.k), Side::Left, tol)?;
        let right = support_projection(self.basis(), (self.h, self.k), Side::Right, tol)?;
        Ok((left, right))
    }

    /// True when [X ℂᵏ] = ℂʰ and [X* ℂʰ] = ℂᵏ.
    pub fn is_nondegenerate(&self, tol: &Tolerances) -> Result<bool> {
        let (l, r) = self.supports(tol)?;
        Ok(op_norm(&(&l - identity(self.h))) <= tol.tol_resid
            && op_norm(&(&r - identity(self.k))) <= tol.tol_resid)
    }
}

/// The two compression isometries recording a nondegenerate reduction:
/// `left` maps the reduced codomain into the ambient one (h×h'), `right`
/// the reduced domain (k×k'). Ambient elements are recovered as
/// `left · x_red · right*`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub left: CMatrix,
    pub right: CMatrix,
}

impl Reduction {
    pub fn identity(h: usize, k: usize) -> Self {
        Reduction {
            left: identity(h),
            right: identity(k),
        }
    }

    /// Compress an ambient h×k matrix to reduced coordinates.
    pub fn compress(&self, m: &CMatrix) -> CMatrix {
        self.left.adjoint() * m * &self.right
    }

    /// Embed a reduced matrix back into ambient coordinates.
    pub fn embed(&self, m: &CMatrix) -> CMatrix {
        &self.left * m * self.right.adjoint()
    }

    /// Compress a k×h matrix living on the multiplier side.
    pub fn compress_dual(&self, m: &CMatrix) -> CMatrix {
        self.right.adjoint() * m * &self.left
    }

    pub fn embed_dual(&self, m: &CMatrix) -> CMatrix {
        &self.right * m * self.left.adjoint()
    }
}

/// Compress X to its supports so that [X ℂᵏ] = ℂʰ and [X* ℂʰ] = ℂᵏ hold.
/// The compression is completely isometric on X and idempotent.
pub fn nondegenerate_reduce(
    x: &OperatorSpace,
    tol: &Tolerances,
) -> Result<(OperatorSpace, Reduction)> {
    let (pl, pr) = x.supports(tol)?;
    // Full supports compress by the identity, which makes the operation
    // exactly idempotent.
    let u = if op_norm(&(&pl - identity(x.h()))) <= tol.tol_resid {
        identity(x.h())
    } else {
        isometry_from_projection(&pl)
    };
    let v = if op_norm(&(&pr - identity(x.k()))) <= tol.tol_resid {
        identity(x.k())
    } else {
        isometry_from_projection(&pr)
    };
    if u.ncols() == x.h() && v.ncols() == x.k() {
        return Ok((x.clone(), Reduction::identity(x.h(), x.k())));
    }
    let red = Reduction {
        left: u,
        right: v,
    };
    let basis: Vec<CMatrix> = x.basis().iter().map(|b| red.compress(b)).collect();
    // Compression preserves the trace inner product on X, so the basis
    // stays orthonormal; re-spanning would only churn it.
    let sub = Subspace::from_orthonormal((red.left.ncols(), red.right.ncols()), basis);
    Ok((
        OperatorSpace::from_subspace(format!("{}|reduced", x.name()), sub),
        red,
    ))
}

/// Smallest subspace containing X and closed under (a,b,c) ↦ a b* c,
/// computed by iterated span growth to a fixed point. The dimension is
/// strictly increasing until the fixed point, so at most h·k+1 passes run.
pub fn generated_tro(x: &OperatorSpace, tol: &Tolerances) -> Result<Subspace> {
    let shape = (x.h(), x.k());
    let mut current = x.space().clone();
    let cap = x.h() * x.k() + 1;
    for _ in 0..cap {
        let dim_before = current.dim();
        let mut gens: Vec<CMatrix> = current.basis().to_vec();
        for a in current.basis() {
            for b in current.basis() {
                let ab = a * b.adjoint();
                for c in current.basis() {
                    gens.push(&ab * c);
                }
            }
        }
        current = Subspace::span(shape, &gens, tol)?;
        if current.dim() == dim_before {
            return Ok(current);
        }
    }
    Ok(current)
}

/// Maximum membership residual of the triple product over all basis
/// triples; a subspace is TRO-closed when this stays below tol_member.
pub fn tro_closure_residual(sub: &Subspace) -> f64 {
    let mut worst = 0.0f64;
    for a in sub.basis() {
        for b in sub.basis() {
            let ab = a * b.adjoint();
            for c in sub.basis() {
                let prod = &ab * c;
                let d = sub
                    .member_distance(&prod)
                    .expect("triple product has the subspace shape");
                let rel = d / hs_norm(&prod).max(1.0);
                if rel > worst {
                    worst = rel;
                }
            }
        }
    }
    worst
}

pub fn is_tro_closed(sub: &Subspace, tol: &Tolerances) -> bool {
    tro_closure_residual(sub) <= tol.tol_member
}

/// A *-closed, multiplicatively closed matrix subspace with its unit
/// (support) projection.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    n: usize,
    space: Subspace,
    unit: CMatrix,
}

impl StarAlgebra {
    pub fn new(space: Subspace, unit: CMatrix) -> Result<Self> {
        let (r, c) = space.shape();
        if r != c {
            return Err(Error::Input(format!(
                "star algebra must live in square matrices, got {r}×{c}"
            )));
        }
        if unit.shape() != (r, r) {
            return Err(Error::Input("unit shape does not match ambient".into()));
        }
        Ok(StarAlgebra { n: r, space, unit })
    }

    pub fn zero(n: usize) -> Self {
        StarAlgebra {
            n,
            space: Subspace::zero(n, n),
            unit: CMatrix::zeros(n, n),
        }
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn basis(&self) -> &[CMatrix] {
        self.space.basis()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn unit(&self) -> &CMatrix {
        &self.unit
    }

    /// Check the algebra contract: closed under adjoint and product, and
    /// the unit acts as a two-sided identity on the basis.
    pub fn verify_closed(&self, tol: &Tolerances) -> Result<()> {
        for (i, a) in self.basis().iter().enumerate() {
            if !self.space.contains(&a.adjoint(), tol)? {
                return Err(Error::Input(format!(
                    "algebra is not adjoint-closed: basis element {i}"
                )));
            }
            let ua = self.unit() * a;
            let au = a * self.unit();
            if op_norm(&(&ua - a)) > tol.tol_resid || op_norm(&(&au - a)) > tol.tol_resid {
                return Err(Error::Input(format!(
                    "unit does not act as identity on basis element {i}"
                )));
            }
            for (j, b) in self.basis().iter().enumerate() {
                if !self.space.contains(&(a * b), tol)? {
                    return Err(Error::Input(format!(
                        "algebra is not product-closed: pair ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Corner positions of the linking picture in M_{h+k}.
#[derive(Debug, Clone, Copy)]
pub enum Corner {
    /// h×h block at (0,0).
    TopLeft,
    /// h×k block at (0,h).
    TopRight,
    /// k×h block at (h,0).
    BottomLeft,
    /// k×k block at (h,h).
    BottomRight,
}

/// Embed a block into the (h+k)×(h+k) linking space.
pub fn corner_embed(m: &CMatrix, h: usize, k: usize, corner: Corner) -> CMatrix {
    let n = h + k;
    let mut out = CMatrix::zeros(n, n);
    let (r0, c0, rows, cols) = match corner {
        Corner::TopLeft => (0, 0, h, h),
        Corner::TopRight => (0, h, h, k),
        Corner::BottomLeft => (h, 0, k, h),
        Corner::BottomRight => (h, h, k, k),
    };
    debug_assert_eq!(m.shape(), (rows, cols));
    out.view_mut((r0, c0), (rows, cols)).copy_from(m);
    out
}

/// Extract a corner block from the linking space.
pub fn corner_extract(m: &CMatrix, h: usize, k: usize, corner: Corner) -> CMatrix {
    let (r0, c0, rows, cols) = match corner {
        Corner::TopLeft => (0, 0, h, h),
        Corner::TopRight => (0, h, h, k),
        Corner::BottomLeft => (h, 0, k, h),
        Corner::BottomRight => (h, h, k, k),
    };
    m.view((r0, c0), (rows, cols)).into_owned()
}

/// The linking *-algebra of X inside M_{h+k}: the spans of TT*, T, T*,
/// and T*T placed in the four corners, where T is the generated TRO. The
/// unit is the support projection e ⊕ f of the two diagonal C*-corners.
pub fn linking_algebra(x: &OperatorSpace, tol: &Tolerances) -> Result<StarAlgebra> {
    let h = x.h();
    let k = x.k();
    let t = generated_tro(x, tol)?;
    if t.dim() == 0 {
        return Ok(StarAlgebra::zero(h + k));
    }
    let mut ee_gens = Vec::new();
    let mut ff_gens = Vec::new();
    for a in t.basis() {
        for b in t.basis() {
            ee_gens.push(a * b.adjoint());
            ff_gens.push(a.adjoint() * b);
        }
    }
    let ee = Subspace::span((h, h), &ee_gens, tol)?;
    let ff = Subspace::span((k, k), &ff_gens, tol)?;
    let mut gens: Vec<CMatrix> = Vec::new();
    for m in ee.basis() {
        gens.push(corner_embed(m, h, k, Corner::TopLeft));
    }
    for m in t.basis() {
        gens.push(corner_embed(m, h, k, Corner::TopRight));
        gens.push(corner_embed(&m.adjoint(), h, k, Corner::BottomLeft));
    }
    for m in ff.basis() {
        gens.push(corner_embed(m, h, k, Corner::BottomRight));
    }
    let space = Subspace::span((h + k, h + k), &gens, tol)?;
    let e = support_projection(t.basis(), (h, k), Side::Left, tol)?;
    let f = support_projection(t.basis(), (h, k), Side::Right, tol)?;
    let unit = corner_embed(&e, h, k, Corner::TopLeft) + corner_embed(&f, h, k, Corner::BottomRight);
    StarAlgebra::new(space, unit)
}

/// The amplification M_n(X) ⊂ B(ℂ^{nk}, ℂ^{nh}) with basis
/// {E_ij ⊗ b}; its dimension is n²·dim X.
pub fn amplify(x: &OperatorSpace, n: usize, tol: &Tolerances) -> Result<OperatorSpace> {
    if n == 0 {
        return Err(Error::Input("amplification level must be at least 1".into()));
    }
    let mut gens = Vec::with_capacity(n * n * x.dim());
    for i in 0..n {
        for j in 0..n {
            let unit = matrix_unit(n, n, i, j);
            for b in x.basis() {
                gens.push(unit.kronecker(b));
            }
        }
    }
    let space = Subspace::span((n * x.h(), n * x.k()), &gens, tol)?;
    Ok(OperatorSpace::from_subspace(
        format!("M_{}({})", n, x.name()),
        space,
    ))
}

/// The staircase pattern space on the (1,1)-, (1,2)-, (1,3)-, (2,3)-, and
/// (3,3)-entries of M_3; the running example with a quasi-identity but no
/// one-sided identity.
pub fn staircase(tol: &Tolerances) -> OperatorSpace {
    let units = crate::numcore::pattern_units((3, 3), &[(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)]);
    OperatorSpace::new("staircase", 3, 3, &units, tol).expect("staircase pattern is valid")
}

/// The adjoint-side companion pattern (zero only on the (3,1)-entry).
pub fn staircase_dual(tol: &Tolerances) -> OperatorSpace {
    let units = crate::numcore::pattern_units(
        (3, 3),
        &[
            (0, 0),
            (0, 1),
            (0, 2),
            (1, 0),
            (1, 1),
            (1, 2),
            (2, 1),
            (2, 2),
        ],
    );
    OperatorSpace::new("staircase-dual", 3, 3, &units, tol).expect("dual pattern is valid")
}

/// Scale a matrix by a real factor.
pub fn scale(m: &CMatrix, f: f64) -> CMatrix {
    m * Complex64::new(f, 0.0)
}
