//! Algebrization by a quasi-multiplier and everything that interrogates the
//! resulting operator algebra: identity and quasi-identity verification and
//! search, the Kadison extreme-point test on TRO-closed subspaces, a
//! numerical extremality refuter for general subspaces, the classification
//! pipeline tying adjoint membership, local unitary classes, extremality,
//! and found identities together, and the one-sided Haagerup norm check.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multipliers::{
    compute_multipliers, compute_ter_with, local_unitary_class, LocalUnitaryClass,
    MultiplierSpaces, TerReport,
};
use crate::numcore::{
    identity, least_squares, op_norm, random_element, vectorize, CMatrix, CVector, Subspace,
    Tolerances,
};
use crate::spaces::{corner_embed, is_tro_closed, Corner, OperatorSpace};

/// An operator space paired with a contractive quasi-multiplier z, carrying
/// the product m_z(x,y) = x z y.
#[derive(Debug, Clone)]
pub struct AlgebrizedSpace {
    base: OperatorSpace,
    z: CMatrix,
    multipliers: MultiplierSpaces,
}

/// Validate and build the algebrization of x by z. Rejects z outside the
/// computed quasi-multiplier space ("not closed") and z of norm above
/// 1 + tol_norm ("not contractive": the product may fail to be an
/// operator-algebra product).
pub fn algebrize(x: &OperatorSpace, z: &CMatrix, tol: &Tolerances) -> Result<AlgebrizedSpace> {
    if z.shape() != (x.k(), x.h()) {
        return Err(Error::Input(format!(
            "z has shape {:?}, expected (k,h) = ({},{})",
            z.shape(),
            x.k(),
            x.h()
        )));
    }
    crate::numcore::ensure_finite(z)?;
    let multipliers = compute_multipliers(x, tol)?;
    if !multipliers.qm.contains(z, tol)? {
        return Err(Error::NotQuasiMultiplier(format!(
            "X z X ⊄ X: distance to QM(X) is {:.3e}",
            multipliers.qm.member_distance(z)?
        )));
    }
    let norm = op_norm(z);
    if norm > 1.0 + tol.tol_norm {
        return Err(Error::NotContractive(format!("‖z‖ = {norm:.6} > 1")));
    }
    Ok(AlgebrizedSpace {
        base: x.clone(),
        z: z.clone(),
        multipliers,
    })
}

impl AlgebrizedSpace {
    pub fn base(&self) -> &OperatorSpace {
        &self.base
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn multipliers(&self) -> &MultiplierSpaces {
        &self.multipliers
    }

    /// The algebra product m_z(a, b) = a z b.
    pub fn product(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * &self.z * b
    }

    /// n-fold m_z power of an element.
    pub fn power(&self, e: &CMatrix, n: usize) -> CMatrix {
        assert!(n >= 1);
        let mut out = e.clone();
        for _ in 1..n {
            out = self.product(&out, e);
        }
        out
    }
}

/// Verdict of a quasi-identity check: the defining residual over the basis,
/// the candidate's norm, and its membership in X.
#[derive(Debug, Clone)]
pub struct QuasiIdentityCheck {
    pub holds: bool,
    pub max_residual: f64,
    pub norm: f64,
    pub in_space: bool,
}

/// Check r = e·r + r·e − e·r·e (products via m_z) on every basis vector.
pub fn check_quasi_identity(
    a: &AlgebrizedSpace,
    e: &CMatrix,
    tol: &Tolerances,
) -> Result<QuasiIdentityCheck> {
    let (h, k) = (a.base.h(), a.base.k());
    if e.shape() != (h, k) {
        return Err(Error::Input(format!(
            "e has shape {:?}, expected (h,k) = ({h},{k})",
            e.shape()
        )));
    }
    let mut max_residual = 0.0f64;
    for x in a.base.basis() {
        let ex = a.product(e, x);
        let xe = a.product(x, e);
        let exe = a.product(&ex, e);
        let resid = op_norm(&(x - (ex + xe - exe)));
        max_residual = max_residual.max(resid);
    }
    Ok(QuasiIdentityCheck {
        holds: max_residual <= tol.tol_resid,
        max_residual,
        norm: op_norm(e),
        in_space: a.base.space().contains(e, tol)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentitySide {
    Left,
    Right,
    Two,
}

#[derive(Debug, Clone)]
pub struct OneSidedCheck {
    pub holds: bool,
    pub max_residual: f64,
}

/// Check e as a left (e z x = x), right (x z e = x), or two-sided identity
/// on every basis vector.
pub fn check_one_sided_identity(
    a: &AlgebrizedSpace,
    e: &CMatrix,
    side: IdentitySide,
    tol: &Tolerances,
) -> Result<OneSidedCheck> {
    let (h, k) = (a.base.h(), a.base.k());
    if e.shape() != (h, k) {
        return Err(Error::Input(format!(
            "e has shape {:?}, expected (h,k) = ({h},{k})",
            e.shape()
        )));
    }
    let mut max_residual = 0.0f64;
    for x in a.base.basis() {
        let r = match side {
            IdentitySide::Left => op_norm(&(x - a.product(e, x))),
            IdentitySide::Right => op_norm(&(x - a.product(x, e))),
            IdentitySide::Two => op_norm(&(x - a.product(e, x)))
                .max(op_norm(&(x - a.product(x, e)))),
        };
        max_residual = max_residual.max(r);
    }
    Ok(OneSidedCheck {
        holds: max_residual <= tol.tol_resid,
        max_residual,
    })
}

/// Which path produced (or exhausted) the identity search. Linear routes
/// are decision procedures; the Newton route is sound but incomplete, so
/// "not found" under `Heuristic` is never a nonexistence certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    ExhaustiveLinear,
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub quasi: Option<(CMatrix, f64)>,
    pub left: Option<CMatrix>,
    pub right: Option<CMatrix>,
    pub two_sided: Option<CMatrix>,
    pub search_status: SearchStatus,
}

/// Search for contractive identities. One-sided identities come from exact
/// linear solves (the conditions are linear in e, with z* as the canonical
/// fallback). The quasi-identity is tried in order: the candidate z* when
/// z* ∈ X, any found one-sided identity, then damped Gauss-Newton on the
/// stacked quadratic residual from random starts in Ball(X). Every
/// candidate is re-verified before being reported.
pub fn find_identities(a: &AlgebrizedSpace, seed: u64, tol: &Tolerances) -> IdentityReport {
    let left = solve_one_sided(a, IdentitySide::Left, tol);
    let right = solve_one_sided(a, IdentitySide::Right, tol);
    let two_sided = match (&left, &right) {
        (Some(el), Some(_)) => {
            let check = check_one_sided_identity(a, el, IdentitySide::Two, tol)
                .expect("shape is valid");
            check.holds.then(|| el.clone())
        }
        _ => None,
    };

    // Route (i): z* when it lies in X.
    let z_adj = a.z.adjoint();
    if a.base.space().contains(&z_adj, tol).unwrap_or(false) {
        if let Ok(check) = check_quasi_identity(a, &z_adj, tol) {
            if check.holds && check.norm <= 1.0 + tol.tol_norm {
                return IdentityReport {
                    quasi: Some((z_adj, check.max_residual)),
                    left,
                    right,
                    two_sided,
                    search_status: SearchStatus::ExhaustiveLinear,
                };
            }
        }
    }
    // Route (ii): a one-sided identity is a quasi-identity.
    let mut linear_quasi = None;
    for cand in [left.as_ref(), right.as_ref()].into_iter().flatten() {
        if let Ok(check) = check_quasi_identity(a, cand, tol) {
            if check.holds && check.norm <= 1.0 + tol.tol_norm {
                linear_quasi = Some((cand.clone(), check.max_residual));
                break;
            }
        }
    }
    if linear_quasi.is_some() {
        return IdentityReport {
            quasi: linear_quasi,
            left,
            right,
            two_sided,
            search_status: SearchStatus::ExhaustiveLinear,
        };
    }
    // Route (iii): Newton.
    let quasi = newton_quasi_search(a, seed, tol).map(|e| {
        let check = check_quasi_identity(a, &e, tol).expect("candidate has the right shape");
        (e, check.max_residual)
    });
    IdentityReport {
        quasi,
        left,
        right,
        two_sided,
        search_status: SearchStatus::Heuristic,
    }
}

/// Exact linear solve for a contractive one-sided identity in X; falls
/// back to the canonical candidate z* when the minimum-norm solution of
/// the linear system is not contractive.
fn solve_one_sided(
    a: &AlgebrizedSpace,
    side: IdentitySide,
    tol: &Tolerances,
) -> Option<CMatrix> {
    let d = a.base.dim();
    let (h, k) = (a.base.h(), a.base.k());
    let rows = d * h * k;
    let basis = a.base.basis();
    let mut mat = CMatrix::zeros(rows, d);
    let mut rhs = CVector::zeros(rows);
    for (j, xj) in basis.iter().enumerate() {
        let target = vectorize(xj);
        for (l, bl) in basis.iter().enumerate() {
            let prod = match side {
                IdentitySide::Left => a.product(bl, xj),
                IdentitySide::Right => a.product(xj, bl),
                IdentitySide::Two => unreachable!("solved per side"),
            };
            let col = vectorize(&prod);
            for r in 0..h * k {
                mat[(j * h * k + r, l)] = col[r];
            }
        }
        for r in 0..h * k {
            rhs[j * h * k + r] = target[r];
        }
    }
    let coeffs = least_squares(&mat, &rhs, tol);
    let mut e = CMatrix::zeros(h, k);
    for (l, bl) in basis.iter().enumerate() {
        e += bl * coeffs[l];
    }
    let verified = check_one_sided_identity(a, &e, side, tol).ok()?;
    if verified.holds && op_norm(&e) <= 1.0 + tol.tol_norm {
        return Some(e);
    }
    // Canonical fallback: a contractive one-sided identity exists exactly
    // when z* ∈ X with the matching local unitary flag, and then z* is it.
    let z_adj = a.z.adjoint();
    if a.base.space().contains(&z_adj, tol).ok()? {
        let check = check_one_sided_identity(a, &z_adj, side, tol).ok()?;
        if check.holds && op_norm(&z_adj) <= 1.0 + tol.tol_norm {
            return Some(z_adj);
        }
    }
    None
}

/// Damped Gauss-Newton on the stacked residual r_i(e) = x_i − (e·x_i +
/// x_i·e − e·x_i·e), over coefficients of e in the basis of X. A first
/// phase with a small Tikhonov term steers toward small-norm points of the
/// solution variety (the contractive quasi-identity is the norm-minimal
/// one); the second phase polishes the exact system.
fn newton_quasi_search(a: &AlgebrizedSpace, seed: u64, tol: &Tolerances) -> Option<CMatrix> {
    let d = a.base.dim();
    if d == 0 {
        return None;
    }
    let (h, k) = (a.base.h(), a.base.k());
    let n_res = d * h * k;
    let basis = a.base.basis().to_vec();

    let assemble = |coeffs: &CVector| -> CMatrix {
        let mut e = CMatrix::zeros(h, k);
        for (l, bl) in basis.iter().enumerate() {
            e += bl * coeffs[l];
        }
        e
    };
    let residual = |e: &CMatrix| -> CVector {
        let mut r = CVector::zeros(n_res);
        for (i, x) in basis.iter().enumerate() {
            let ex = a.product(e, x);
            let xe = a.product(x, e);
            let exe = a.product(&ex, e);
            let block = vectorize(&(x - (ex + xe - exe)));
            for j in 0..h * k {
                r[i * h * k + j] = block[j];
            }
        }
        r
    };
    // Holomorphic Jacobian column for the l-th coefficient.
    let jac_col = |e: &CMatrix, bl: &CMatrix| -> CVector {
        let mut col = CVector::zeros(n_res);
        for (i, x) in basis.iter().enumerate() {
            let t1 = a.product(bl, x);
            let t2 = a.product(x, bl);
            let t3 = a.product(&t1, e);
            let t4 = a.product(&a.product(e, x), bl);
            let block = vectorize(&(-(t1 + t2) + t3 + t4));
            for j in 0..h * k {
                col[i * h * k + j] = block[j];
            }
        }
        col
    };

    const STARTS: usize = 32;
    const MAX_ITERS: usize = 200;
    const REGULARIZED_ITERS: usize = 60;
    let lambda = 1e-3;

    for start in 0..STARTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(start as u64 * 0x9E37_79B9_7F4A_7C15));
        let mut coeffs = CVector::from_fn(d, |_, _| {
            Complex64::new(
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
            )
        });
        let e0 = assemble(&coeffs);
        let norm0 = op_norm(&e0);
        if norm0 > 0.0 {
            coeffs *= Complex64::new(0.9 / norm0.max(1.0), 0.0);
        }
        let mut r = residual(&assemble(&coeffs));
        for iter in 0..MAX_ITERS {
            let reg = if iter < REGULARIZED_ITERS { lambda } else { 0.0 };
            let e = assemble(&coeffs);
            let rows = if reg > 0.0 { n_res + d } else { n_res };
            let mut jac = CMatrix::zeros(rows, d);
            for l in 0..d {
                let col = jac_col(&e, &basis[l]);
                for i in 0..n_res {
                    jac[(i, l)] = col[i];
                }
                if reg > 0.0 {
                    jac[(n_res + l, l)] = Complex64::new(reg, 0.0);
                }
            }
            let mut full_r = CVector::zeros(rows);
            for i in 0..n_res {
                full_r[i] = r[i];
            }
            if reg > 0.0 {
                for l in 0..d {
                    full_r[n_res + l] = coeffs[l] * Complex64::new(reg, 0.0);
                }
            }
            let delta = least_squares(&jac, &(-&full_r), tol);
            if delta.norm() < 1e-15 {
                break;
            }
            // Step damping by halving until the residual decreases.
            let current = r.norm();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let cand = &coeffs + &delta * Complex64::new(alpha, 0.0);
                let cand_r = residual(&assemble(&cand));
                if cand_r.norm() < current {
                    coeffs = cand;
                    r = cand_r;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            if r.norm() <= tol.tol_resid * 1e-2 && reg == 0.0 {
                break;
            }
        }
        let e = assemble(&coeffs);
        if let Ok(check) = check_quasi_identity(a, &e, tol) {
            if check.holds && check.norm <= 1.0 + tol.tol_norm {
                return Some(e);
            }
        }
    }
    None
}

/// Kadison verdict for a candidate inside a TRO-closed subspace.
#[derive(Debug, Clone)]
pub struct KadisonVerdict {
    pub extreme: bool,
    pub partial_isometry_residual: f64,
    pub max_compression_residual: f64,
}

/// x0 is extreme in Ball(t) iff it is a partial isometry and
/// (I − x0 x0*) t (I − x0* x0) vanishes. Requires t to be TRO-closed.
pub fn kadison_extreme_test(
    t: &Subspace,
    x0: &CMatrix,
    tol: &Tolerances,
) -> Result<KadisonVerdict> {
    if x0.shape() != t.shape() {
        return Err(Error::Input(format!(
            "x0 has shape {:?}, expected {:?}",
            x0.shape(),
            t.shape()
        )));
    }
    if !is_tro_closed(t, tol) {
        return Err(Error::Input("Kadison requires a TRO".into()));
    }
    if op_norm(x0) > 1.0 + tol.tol_norm {
        return Err(Error::Input(format!(
            "x0 must lie in the unit ball, ‖x0‖ = {:.6}",
            op_norm(x0)
        )));
    }
    let (h, k) = t.shape();
    let pi_resid = op_norm(&(x0 - x0 * x0.adjoint() * x0));
    let left_def = identity(h) - x0 * x0.adjoint();
    let right_def = identity(k) - x0.adjoint() * x0;
    let mut comp_resid = 0.0f64;
    for b in t.basis() {
        comp_resid = comp_resid.max(op_norm(&(&left_def * b * &right_def)));
    }
    Ok(KadisonVerdict {
        extreme: pi_resid <= tol.tol_resid && comp_resid <= tol.tol_resid,
        partial_isometry_residual: pi_resid,
        max_compression_residual: comp_resid,
    })
}

/// Outcome of the numerical extremality refuter.
#[derive(Debug, Clone)]
pub enum ProbeOutcome {
    /// A witness y ≠ 0 with both x0 ± y in the unit ball.
    Refuted(CMatrix),
    Undecided,
}

impl ProbeOutcome {
    pub fn is_refuted(&self) -> bool {
        matches!(self, ProbeOutcome::Refuted(_))
    }
}

/// Bisection depth of the probe; resolves perturbation sizes far below the
/// refutation threshold.
const PROBE_BISECTIONS: usize = 40;

/// Sample unit directions d in v and bisect for the largest t with
/// max(‖x0+td‖, ‖x0−td‖) ≤ 1. Refutes extremality when t exceeds
/// 100·tol_norm; an `Undecided` answer is never a certificate.
pub fn extreme_probe(
    v: &Subspace,
    x0: &CMatrix,
    directions: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ProbeOutcome> {
    if x0.shape() != v.shape() {
        return Err(Error::Input(format!(
            "x0 has shape {:?}, expected {:?}",
            x0.shape(),
            v.shape()
        )));
    }
    if op_norm(x0) > 1.0 + tol.tol_norm {
        return Err(Error::Input("x0 must lie in the unit ball".into()));
    }
    if v.dim() == 0 {
        return Ok(ProbeOutcome::Undecided);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = 100.0 * tol.tol_norm;
    for _ in 0..directions {
        let g = random_element(v, &mut rng);
        let n = op_norm(&g);
        if n < 1e-14 {
            continue;
        }
        let d = &g * Complex64::new(1.0 / n, 0.0);
        // max(‖x0 ± t d‖) is convex and even in t, hence nondecreasing on
        // t ≥ 0, and exceeds 1 at t = 2.
        let fits = |t: f64| -> bool {
            let step = &d * Complex64::new(t, 0.0);
            op_norm(&(x0 + &step)).max(op_norm(&(x0 - &step))) <= 1.0
        };
        let mut lo = 0.0f64;
        let mut hi = 2.0f64;
        if !fits(lo) {
            continue;
        }
        for _ in 0..PROBE_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > threshold {
            return Ok(ProbeOutcome::Refuted(&d * Complex64::new(lo, 0.0)));
        }
    }
    Ok(ProbeOutcome::Undecided)
}

/// One named consistency check of the classification pipeline.
#[derive(Debug, Clone)]
pub struct ConsistencyCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// The four independent sides of the characterization pipeline plus the
/// implications asserted between them.
#[derive(Debug, Clone)]
pub struct ClassifyReport {
    pub z_adjoint_in_space: bool,
    pub unitary_class: LocalUnitaryClass,
    pub ter: TerReport,
    pub z_adjoint_extreme_in_ter: Option<bool>,
    pub identities: IdentityReport,
    pub checks: Vec<ConsistencyCheck>,
}

/// Evaluate (a) z* ∈ X, (b) the local unitary class, (c) extremality of z*
/// in Ball(TER(X)) via the Kadison test, and (d) the identity search; then
/// assert the cross-implications. A violated implication is an internal
/// consistency failure, never a property of the input.
pub fn classify_algebrization(
    x: &OperatorSpace,
    z: &CMatrix,
    seed: u64,
    tol: &Tolerances,
) -> Result<ClassifyReport> {
    let a = algebrize(x, z, tol)?;
    let z_adj = a.z.adjoint();
    let in_space = a.base.space().contains(&z_adj, tol)?;
    let class = local_unitary_class(x, z, tol)?;
    let ter = compute_ter_with(x, &a.multipliers, tol)?;
    let extreme = if in_space && ter.tro_closed && ter.space.contains(&z_adj, tol)? {
        Some(kadison_extreme_test(&ter.space, &z_adj, tol)?.extreme)
    } else {
        None
    };
    let identities = find_identities(&a, seed, tol);

    let mut checks = Vec::new();
    let mut push = |name: &str, expected: bool, actual: bool| {
        checks.push(ConsistencyCheck {
            name: name.to_string(),
            ok: expected == actual,
            detail: format!("expected {expected}, observed {actual}"),
        });
    };
    push(
        "left identity ⟺ z* ∈ X and z local isometry",
        in_space && class.is_left,
        identities.left.is_some(),
    );
    push(
        "right identity ⟺ z* ∈ X and z local co-isometry",
        in_space && class.is_right,
        identities.right.is_some(),
    );
    push(
        "two-sided identity ⟺ z* ∈ X and z local unitary",
        in_space && class.is_both,
        identities.two_sided.is_some(),
    );
    if in_space && extreme == Some(true) {
        // z* extreme in TER(X) forces z* to be a quasi-identity.
        let direct = check_quasi_identity(&a, &z_adj, tol)?;
        checks.push(ConsistencyCheck {
            name: "z* extreme in TER(X) ⟹ z* is a quasi-identity".into(),
            ok: direct.holds,
            detail: format!("residual {:.3e}", direct.max_residual),
        });
    }
    if let Some(bad) = checks.iter().find(|c| !c.ok) {
        return Err(Error::Inconsistent(format!(
            "classification check failed: {} ({})",
            bad.name, bad.detail
        )));
    }
    Ok(ClassifyReport {
        z_adjoint_in_space: in_space,
        unitary_class: class,
        ter,
        z_adjoint_extreme_in_ter: extreme,
        identities,
        checks,
    })
}

/// Block data for the one-sided Haagerup check: v, w ∈ M_m(X) and a tensor
/// representation Σ_r x^(r) ⊗ y^(r) entered as R pairs of m×m grids.
#[derive(Debug, Clone)]
pub struct HaagerupData {
    pub m: usize,
    pub v: Vec<Vec<CMatrix>>,
    pub w: Vec<Vec<CMatrix>>,
    pub tensors: Vec<(Vec<Vec<CMatrix>>, Vec<Vec<CMatrix>>)>,
}

impl HaagerupData {
    fn validate(&self, h: usize, k: usize) -> Result<()> {
        let check_grid = |g: &Vec<Vec<CMatrix>>, what: &str| -> Result<()> {
            if g.len() != self.m || g.iter().any(|row| row.len() != self.m) {
                return Err(Error::Input(format!("{what} is not an {0}×{0} grid", self.m)));
            }
            for row in g {
                for e in row {
                    if e.shape() != (h, k) {
                        return Err(Error::Input(format!(
                            "{what} entry has shape {:?}, expected ({h},{k})",
                            e.shape()
                        )));
                    }
                }
            }
            Ok(())
        };
        check_grid(&self.v, "v")?;
        check_grid(&self.w, "w")?;
        for (r, (xs, ys)) in self.tensors.iter().enumerate() {
            check_grid(xs, &format!("x-grid {r}"))?;
            check_grid(ys, &format!("y-grid {r}"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HaagerupVerdict {
    pub lhs: f64,
    pub rhs_upper: f64,
    pub holds: bool,
}

/// One-sided test of the block-matrix inequality behind complete
/// contractivity of the product map: the operator norm of
/// [[v, Σ x z y], [0, w]] must not exceed the row-times-column Haagerup
/// upper bound of the given tensor representation. The bound is computed
/// from the representation as entered, so it dominates the true Haagerup
/// norm; the verdict is meaningful for contractive z and the check can
/// genuinely fail for ‖z‖ > 1.
pub fn haagerup_upper_inequality(
    x: &OperatorSpace,
    z: &CMatrix,
    data: &HaagerupData,
    tol: &Tolerances,
) -> Result<HaagerupVerdict> {
    let (h, k) = (x.h(), x.k());
    if z.shape() != (k, h) {
        return Err(Error::Input(format!(
            "z has shape {:?}, expected (k,h) = ({k},{h})",
            z.shape()
        )));
    }
    data.validate(h, k)?;
    let m = data.m;
    let zero_block = CMatrix::zeros(h, k);

    // LHS: the 2m×2m block matrix over X.
    let mut grid: Vec<Vec<CMatrix>> = vec![vec![zero_block.clone(); 2 * m]; 2 * m];
    for p in 0..m {
        for q in 0..m {
            grid[p][q] = data.v[p][q].clone();
            grid[m + p][m + q] = data.w[p][q].clone();
            let mut sum = CMatrix::zeros(h, k);
            for (xs, ys) in &data.tensors {
                sum += &xs[p][q] * z * &ys[p][q];
            }
            grid[p][m + q] = sum;
        }
    }
    let lhs = op_norm(&crate::numcore::assemble_blocks(&grid));

    // RHS: ‖A‖·‖B‖ for the canonical row/column factorization of
    // [[v⊗1, Σ x⊗y], [0, 1⊗w]], with entries corner-embedded in M_{h+k}.
    let n = h + k;
    let big = |m_: &CMatrix| corner_embed(m_, h, k, Corner::TopRight);
    let one = identity(n);
    let zero = CMatrix::zeros(n, n);
    let r_terms = data.tensors.len();
    let mid = m * m * r_terms;
    let a_cols = m + mid + m;
    let b_rows = a_cols;
    let mut a_grid: Vec<Vec<CMatrix>> = vec![vec![zero.clone(); a_cols]; 2 * m];
    let mut b_grid: Vec<Vec<CMatrix>> = vec![vec![zero.clone(); 2 * m]; b_rows];
    let mid_index = |s: usize, t: usize, r: usize| m + (s * m + t) * r_terms + r;
    for p in 0..m {
        for s in 0..m {
            a_grid[p][s] = big(&data.v[p][s]);
            b_grid[s][p] = if s == p { one.clone() } else { zero.clone() };
        }
        for t in 0..m {
            for (r, (xs, ys)) in data.tensors.iter().enumerate() {
                a_grid[p][mid_index(p, t, r)] = big(&xs[p][t]);
                b_grid[mid_index(p, t, r)][m + t] = big(&ys[p][t]);
            }
        }
        a_grid[m + p][m + mid + p] = one.clone();
        for q in 0..m {
            b_grid[m + mid + p][m + q] = big(&data.w[p][q]);
        }
    }
    let rhs_upper = op_norm(&crate::numcore::assemble_blocks(&a_grid))
        * op_norm(&crate::numcore::assemble_blocks(&b_grid));
    Ok(HaagerupVerdict {
        lhs,
        rhs_upper,
        holds: lhs <= rhs_upper + tol.tol_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{matrix_unit, pattern_units, scalar};
    use crate::spaces::{staircase, staircase_dual};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn e11_e33() -> CMatrix {
        matrix_unit(3, 3, 0, 0) + matrix_unit(3, 3, 2, 2)
    }

    #[test]
    fn algebrize_accepts_and_rejects() {
        let t = tol();
        let x = staircase(&t);
        assert!(algebrize(&x, &identity(3), &t).is_ok());
        let m2 = OperatorSpace::full("M2", 2, 2);
        assert!(algebrize(&m2, &identity(2), &t).is_ok());
        match algebrize(&m2, &(identity(2) * scalar(2.0, 0.0)), &t) {
            Err(Error::NotContractive(_)) => {}
            other => panic!("expected NotContractive, got {other:?}"),
        }
        // E21 is outside QM(staircase) (zero pattern entry at (3,1)
        // position of the quasi-multiplier side).
        match algebrize(&x, &matrix_unit(3, 3, 2, 0), &t) {
            Err(Error::NotQuasiMultiplier(_)) => {}
            other => panic!("expected NotQuasiMultiplier, got {other:?}"),
        }
    }

    #[test]
    fn staircase_quasi_identity() {
        let t = tol();
        let x = staircase(&t);
        let a = algebrize(&x, &identity(3), &t).unwrap();
        let check = check_quasi_identity(&a, &e11_e33(), &t).unwrap();
        assert!(check.holds);
        assert!(check.in_space);
        assert!((check.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_is_quasi_identity_of_full_algebra() {
        let t = tol();
        let m2 = OperatorSpace::full("M2", 2, 2);
        let a = algebrize(&m2, &identity(2), &t).unwrap();
        assert!(check_quasi_identity(&a, &identity(2), &t).unwrap().holds);
    }

    #[test]
    fn dual_pattern_candidate_fails() {
        let t = tol();
        let x = staircase_dual(&t);
        let a = algebrize(&x, &e11_e33(), &t).unwrap();
        let check = check_quasi_identity(&a, &e11_e33(), &t).unwrap();
        assert!(!check.holds);
        assert!(check.max_residual > 0.5);
    }

    #[test]
    fn one_sided_checks() {
        let t = tol();
        let m2 = OperatorSpace::full("M2", 2, 2);
        let a = algebrize(&m2, &identity(2), &t).unwrap();
        assert!(check_one_sided_identity(&a, &identity(2), IdentitySide::Two, &t)
            .unwrap()
            .holds);
        let x = staircase(&t);
        let a = algebrize(&x, &identity(3), &t).unwrap();
        assert!(!check_one_sided_identity(&a, &e11_e33(), IdentitySide::Left, &t)
            .unwrap()
            .holds);
        // Column corner: e1 is the contractive right identity (x z e = x),
        // and there is no left identity since e z cannot reach rank 2.
        let col = OperatorSpace::full("col", 2, 1);
        let z = matrix_unit(1, 2, 0, 0);
        let a = algebrize(&col, &z, &t).unwrap();
        let e1 = matrix_unit(2, 1, 0, 0);
        assert!(check_one_sided_identity(&a, &e1, IdentitySide::Right, &t)
            .unwrap()
            .holds);
        assert!(!check_one_sided_identity(&a, &e1, IdentitySide::Left, &t)
            .unwrap()
            .holds);
    }

    #[test]
    fn find_identities_staircase() {
        let t = tol();
        let x = staircase(&t);
        let a = algebrize(&x, &identity(3), &t).unwrap();
        let report = find_identities(&a, 7, &t);
        assert!(report.left.is_none());
        assert!(report.right.is_none());
        assert!(report.two_sided.is_none());
        let (e, resid) = report.quasi.expect("Newton should find the quasi-identity");
        assert!(resid <= t.tol_resid);
        assert!(op_norm(&(&e - e11_e33())) < 1e-6, "found {e}");
        assert_eq!(report.search_status, SearchStatus::Heuristic);
    }

    #[test]
    fn find_identities_full_matrix_algebra() {
        let t = tol();
        let m3 = OperatorSpace::full("M3", 3, 3);
        let a = algebrize(&m3, &identity(3), &t).unwrap();
        let report = find_identities(&a, 1, &t);
        assert!(op_norm(&(report.two_sided.unwrap() - identity(3))) < 1e-8);
        let (q, _) = report.quasi.unwrap();
        assert!(op_norm(&(q - identity(3))) < 1e-8);
        assert_eq!(report.search_status, SearchStatus::ExhaustiveLinear);
    }

    #[test]
    fn find_identities_column_corner() {
        let t = tol();
        let col = OperatorSpace::full("col", 2, 1);
        let z = matrix_unit(1, 2, 0, 0);
        let a = algebrize(&col, &z, &t).unwrap();
        let report = find_identities(&a, 3, &t);
        let right = report.right.expect("right identity exists");
        assert!(op_norm(&(right - matrix_unit(2, 1, 0, 0))) < 1e-8);
        assert!(report.left.is_none());
        assert!(report.two_sided.is_none());
        assert!(report.quasi.is_some());
    }

    #[test]
    fn quasi_identity_structure_properties() {
        // Idempotency, Hermitian-ness of ez and ze, and m_z powers.
        let t = tol();
        let x = staircase(&t);
        let a = algebrize(&x, &identity(3), &t).unwrap();
        let e = e11_e33();
        assert!(op_norm(&(a.product(&e, &e) - &e)) <= t.tol_resid);
        let ez = &e * a.z();
        let ze = a.z() * &e;
        assert!(op_norm(&(&ez - ez.adjoint())) <= t.tol_resid);
        assert!(op_norm(&(&ze - ze.adjoint())) <= t.tol_resid);
        assert!(op_norm(&(&ez * &ez - &ez)) <= t.tol_resid);
        for n in 2..=3 {
            let en = a.power(&e, n);
            assert!(check_quasi_identity(&a, &en, &t).unwrap().holds);
        }
    }

    #[test]
    fn kadison_examples() {
        let t = tol();
        let full = Subspace::full(3, 3);
        assert!(kadison_extreme_test(&full, &identity(3), &t).unwrap().extreme);
        let full2 = Subspace::full(2, 2);
        let v = kadison_extreme_test(&full2, &matrix_unit(2, 2, 0, 0), &t).unwrap();
        assert!(!v.extreme);
        let ter = Subspace::span(
            (3, 3),
            &pattern_units((3, 3), &[(0, 0), (0, 1), (1, 2), (2, 2)]),
            &t,
        )
        .unwrap();
        assert!(kadison_extreme_test(&ter, &e11_e33(), &t).unwrap().extreme);
        // A non-TRO input is rejected.
        let x = staircase(&t);
        match kadison_extreme_test(x.space(), &e11_e33(), &t) {
            Err(Error::Input(msg)) => assert!(msg.contains("TRO")),
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn probe_examples() {
        let t = tol();
        let full = Subspace::full(2, 2);
        assert!(extreme_probe(&full, &matrix_unit(2, 2, 0, 0), 64, 5, &t)
            .unwrap()
            .is_refuted());
        assert!(!extreme_probe(&full, &identity(2), 64, 5, &t)
            .unwrap()
            .is_refuted());
        let line = Subspace::span((2, 2), &[identity(2)], &t).unwrap();
        match extreme_probe(&line, &(identity(2) * scalar(0.5, 0.0)), 16, 5, &t).unwrap() {
            ProbeOutcome::Refuted(y) => assert!((op_norm(&y) - 0.5).abs() < 1e-6),
            ProbeOutcome::Undecided => panic!("interior point must be refuted"),
        }
    }

    #[test]
    fn classify_staircase_with_extreme_z() {
        let t = tol();
        let x = staircase(&t);
        let report = classify_algebrization(&x, &e11_e33(), 11, &t).unwrap();
        assert!(report.z_adjoint_in_space);
        assert!(!report.unitary_class.is_left && !report.unitary_class.is_right);
        assert_eq!(report.z_adjoint_extreme_in_ter, Some(true));
        let (q, _) = report.identities.quasi.as_ref().expect("quasi-identity");
        assert!(op_norm(&(q - e11_e33())) < 1e-6);
        assert!(report.identities.left.is_none());
    }

    #[test]
    fn classify_full_matrix_space() {
        let t = tol();
        let m2 = OperatorSpace::full("M2", 2, 2);
        let report = classify_algebrization(&m2, &identity(2), 11, &t).unwrap();
        assert!(report.z_adjoint_in_space);
        assert!(report.unitary_class.is_both);
        assert_eq!(report.z_adjoint_extreme_in_ter, Some(true));
        assert!(report.identities.two_sided.is_some());
    }

    #[test]
    fn classify_staircase_with_identity_z() {
        // z = I₃: z* ∉ X, yet the algebra has a quasi-identity, showing the
        // one-way nature of the extreme-point criterion.
        let t = tol();
        let x = staircase(&t);
        let report = classify_algebrization(&x, &identity(3), 11, &t).unwrap();
        assert!(!report.z_adjoint_in_space);
        assert_eq!(report.z_adjoint_extreme_in_ter, None);
        let a = algebrize(&x, &identity(3), &t).unwrap();
        assert!(check_quasi_identity(&a, &e11_e33(), &t).unwrap().holds);
    }

    #[test]
    fn haagerup_trivial_tensor() {
        let t = tol();
        let m2 = OperatorSpace::full("M2", 2, 2);
        let zero = vec![vec![CMatrix::zeros(2, 2)]];
        let x_grid = vec![vec![identity(2)]];
        let y_grid = vec![vec![identity(2)]];
        let data = HaagerupData {
            m: 1,
            v: zero.clone(),
            w: zero,
            tensors: vec![(x_grid, y_grid)],
        };
        let v = haagerup_upper_inequality(&m2, &identity(2), &data, &t).unwrap();
        assert!(v.holds);
        assert!((v.lhs - 1.0).abs() < 1e-9);
        assert!((v.rhs_upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn haagerup_detects_noncontractive_z() {
        let t = tol();
        let m2 = OperatorSpace::full("M2", 2, 2);
        let one = vec![vec![identity(2)]];
        let data = HaagerupData {
            m: 1,
            v: one.clone(),
            w: one.clone(),
            tensors: vec![(one.clone(), one.clone())],
        };
        let v =
            haagerup_upper_inequality(&m2, &(identity(2) * scalar(2.0, 0.0)), &data, &t).unwrap();
        assert!(!v.holds);
        assert!(v.lhs > v.rhs_upper + 0.1);
    }
}
