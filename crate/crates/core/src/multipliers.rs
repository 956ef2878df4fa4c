//! Multiplier spaces of a concrete operator space: QM(X) as the solution
//! space of x z y ∈ X over all basis pairs, LM(X) and RM(X) as the
//! one-sided analogues, the local isometry/co-isometry/unitary classes,
//! and TER(X) = X ∩ QM(X)*.
//!
//! All three spaces are computed relative to the supplied embedding after
//! nondegenerate reduction and mapped back to ambient coordinates; reports
//! carry the tag "embedding-relative QM" to make that explicit.

use crate::error::{Error, Result};
use crate::numcore::{identity, linear_kernel, op_norm, CMatrix, Subspace, Tolerances};
use crate::spaces::{nondegenerate_reduce, tro_closure_residual, OperatorSpace, Reduction};

/// Semantics tag attached to every multiplier computation.
pub const SEMANTICS_TAG: &str = "embedding-relative QM";

/// The three multiplier spaces: quasi (k×h), left (h×h), right (k×k).
#[derive(Debug, Clone)]
pub struct MultiplierSpaces {
    pub qm: Subspace,
    pub lm: Subspace,
    pub rm: Subspace,
}

/// QM, LM, and RM as joint numerical kernels. A degenerate space is
/// reduced first; the solutions are embedded back into ambient shape, so
/// directions that act as zero on the supports are excluded.
pub fn compute_multipliers(x: &OperatorSpace, tol: &Tolerances) -> Result<MultiplierSpaces> {
    let (xr, red) = nondegenerate_reduce(x, tol)?;
    let (h, k) = (xr.h(), xr.k());
    let space = xr.space().clone();
    let basis: Vec<CMatrix> = xr.basis().to_vec();

    let mut qm_cons = Vec::with_capacity(basis.len() * basis.len());
    for xi in &basis {
        for xj in &basis {
            let xi = xi.clone();
            let xj = xj.clone();
            let space = space.clone();
            qm_cons.push(move |z: &CMatrix| {
                let prod = &xi * z * &xj;
                &prod - space.project(&prod)
            });
        }
    }
    let qm_red = linear_kernel((k, h), &qm_cons, tol);

    let mut lm_cons = Vec::with_capacity(basis.len());
    for xi in &basis {
        let xi = xi.clone();
        let space = space.clone();
        lm_cons.push(move |a: &CMatrix| {
            let prod = a * &xi;
            &prod - space.project(&prod)
        });
    }
    let lm_red = linear_kernel((h, h), &lm_cons, tol);

    let mut rm_cons = Vec::with_capacity(basis.len());
    for xi in &basis {
        let xi = xi.clone();
        let space = space.clone();
        rm_cons.push(move |b: &CMatrix| {
            let prod = &xi * b;
            &prod - space.project(&prod)
        });
    }
    let rm_red = linear_kernel((k, k), &rm_cons, tol);

    Ok(MultiplierSpaces {
        qm: embed_sub(&qm_red, |m| red.embed_dual(m)),
        lm: embed_sub(&lm_red, |m| &red.left * m * red.left.adjoint()),
        rm: embed_sub(&rm_red, |m| &red.right * m * red.right.adjoint()),
    })
}

fn embed_sub(sub: &Subspace, f: impl Fn(&CMatrix) -> CMatrix) -> Subspace {
    let mapped: Vec<CMatrix> = sub.basis().iter().map(|b| f(b)).collect();
    if mapped.is_empty() {
        // Shape bookkeeping for the empty case: apply to a zero matrix.
        let probe = f(&CMatrix::zeros(sub.shape().0, sub.shape().1));
        return Subspace::zero(probe.nrows(), probe.ncols());
    }
    let shape = mapped[0].shape();
    // Isometric embeddings preserve orthonormality.
    Subspace::from_orthonormal(shape, mapped)
}

/// Local isometry (z*z = 1), co-isometry (zz* = 1), and unitary flags of a
/// candidate quasi-multiplier, evaluated against the identities of the
/// nondegenerate compression of X.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalUnitaryClass {
    pub is_left: bool,
    pub is_right: bool,
    pub is_both: bool,
}

pub fn local_unitary_class(
    x: &OperatorSpace,
    z: &CMatrix,
    tol: &Tolerances,
) -> Result<LocalUnitaryClass> {
    if z.shape() != (x.k(), x.h()) {
        return Err(Error::Input(format!(
            "z has shape {:?}, expected (k,h) = ({},{})",
            z.shape(),
            x.k(),
            x.h()
        )));
    }
    let (xr, red) = nondegenerate_reduce(x, tol)?;
    let zr = red.compress_dual(z);
    Ok(local_unitary_class_reduced(&zr, xr.h(), xr.k(), tol))
}

pub(crate) fn local_unitary_class_reduced(
    z: &CMatrix,
    h: usize,
    k: usize,
    tol: &Tolerances,
) -> LocalUnitaryClass {
    let is_left = op_norm(&(z.adjoint() * z - identity(h))) <= tol.tol_resid;
    let is_right = op_norm(&(z * z.adjoint() - identity(k))) <= tol.tol_resid;
    LocalUnitaryClass {
        is_left,
        is_right,
        is_both: is_left && is_right,
    }
}

/// TER(X) = X ∩ QM(X)*, together with the TRO-closure verification the
/// extremality arguments rely on.
#[derive(Debug, Clone)]
pub struct TerReport {
    pub space: Subspace,
    pub tro_closed: bool,
    pub max_closure_residual: f64,
}

pub fn compute_ter(x: &OperatorSpace, tol: &Tolerances) -> Result<TerReport> {
    let mults = compute_multipliers(x, tol)?;
    compute_ter_with(x, &mults, tol)
}

/// TER from an already computed multiplier family (avoids recomputation).
pub fn compute_ter_with(
    x: &OperatorSpace,
    mults: &MultiplierSpaces,
    tol: &Tolerances,
) -> Result<TerReport> {
    let qm_adj = mults.qm.adjoint();
    let space = x.space().intersect(&qm_adj, tol)?;
    let residual = tro_closure_residual(&space);
    Ok(TerReport {
        tro_closed: residual <= tol.tol_member,
        max_closure_residual: residual,
        space,
    })
}

/// Reduced-coordinate view used by downstream modules that need both the
/// compression and the multipliers.
pub(crate) struct ReducedView {
    pub xr: OperatorSpace,
    pub red: Reduction,
}

pub(crate) fn reduced_view(x: &OperatorSpace, tol: &Tolerances) -> Result<ReducedView> {
    let (xr, red) = nondegenerate_reduce(x, tol)?;
    Ok(ReducedView { xr, red })
}
