//! Cayley correspondence between accretive impedances and contractions,
//! restrictions of `A*` by boundary conditions, and m-dissipativity checks.
//!
//! With `Γ0^V = V^{-1}Γ0`, `Γ1^V = V^♮Γ1` and `Z_V = V^♮ Z V`:
//!
//! * impedance form: `Z Γ0 y = i Γ1 y`;
//! * contraction form: `(K + I) Γ0^V y + i (K − I) Γ1^V y = 0`;
//! * `K = (Z_V − I)(Z_V + I)^{-1}` makes the two forms define the same domain.
//!
//! `K = −I` gives `Γ1^V y = 0`, the reference restriction `Â_1`; `K = I`
//! gives `Γ0^V y = 0`.

use serde::{Serialize, Serializer};

use crate::boundary::{
    accretivity_defect, to_boundary_triple, BoundaryTupleModel, OperatorModel, TupleTransform,
};
use crate::error::{invalid, Result};
use crate::linalg::{self, ComplexMatrix, GramMatrix};
use crate::{c, Error, C64, I};

/// Relative singularity threshold for `Z + I`, `I − K` and resolvent systems.
const SINGULAR_TOL: f64 = 1e-13;
/// Constraint nullspace threshold (relative to `σ_max`).
pub const NULLSPACE_TOL: f64 = 1e-10;
/// Test points for the resolvent bound.
pub const RESOLVENT_TEST_POINTS: [(f64, f64); 4] = [(0.0, 1.0), (0.0, 2.0), (1.0, 1.0), (-1.0, 3.0)];

#[derive(Clone, Debug)]
pub struct ContractionParam {
    pub k: ComplexMatrix,
}

impl ContractionParam {
    /// Checks `‖K‖ ≤ 1 + 1e-10` in the pivot Gram.
    pub fn new(k: ComplexMatrix, gram: &GramMatrix) -> Result<Self> {
        let p = Self { k };
        let n = p.norm(gram)?;
        if n > 1.0 + 1e-10 {
            return invalid(format!("K is not a contraction (norm {n:.6e})"));
        }
        Ok(p)
    }

    /// Wraps `k` without the contraction check.
    pub fn unchecked(k: ComplexMatrix) -> Self {
        Self { k }
    }

    pub fn norm(&self, gram: &GramMatrix) -> Result<f64> {
        linalg::gram_operator_norm(&self.k, gram, gram)
    }

    pub fn is_contraction(&self, gram: &GramMatrix, tol: f64) -> Result<bool> {
        Ok(self.norm(gram)? <= 1.0 + tol)
    }

    /// `‖K* G K − G‖`, zero exactly for `G`-unitary `K`.
    pub fn unitarity_residual(&self, gram: &GramMatrix) -> f64 {
        let g = gram.matrix();
        (&(&self.k.adjoint() * g) * &self.k).max_abs_diff(g)
    }
}

/// `(Z − I)(Z + I)^{-1}`.
pub fn cayley(z: &ComplexMatrix) -> Result<ContractionParam> {
    if !z.is_square() || z.is_empty() {
        return invalid("cayley: impedance must be square and nonempty");
    }
    let n = z.rows();
    let plus_inv = linalg::checked_inverse(&z.shift(c(1.0, 0.0)), SINGULAR_TOL)
        .map_err(|_| Error::InvalidInput("cayley: −1 is in the spectrum of Z".into()))?;
    let k = &(z - &ComplexMatrix::identity(n)) * &plus_inv;
    Ok(ContractionParam::unchecked(k))
}

/// `(I − K)^{-1}(I + K)`.
pub fn inverse_cayley(k: &ContractionParam) -> Result<ComplexMatrix> {
    let m = &k.k;
    if !m.is_square() || m.is_empty() {
        return invalid("inverse_cayley: K must be square and nonempty");
    }
    let id = ComplexMatrix::identity(m.rows());
    let minus = &id - m;
    linalg::checked_inverse(&minus, SINGULAR_TOL)
        .map_err(|_| Error::InvalidInput("inverse_cayley: 1 is in the spectrum of K".into()))?;
    linalg::solve(&minus, &(&id + m))
}

/// `‖(C_Z + I) − 2Z(Z + I)^{-1}‖`.
pub fn cayley_identity_defect(z: &ComplexMatrix) -> Result<f64> {
    let k = cayley(z)?;
    let n = z.rows();
    let plus_inv = linalg::checked_inverse(&z.shift(c(1.0, 0.0)), SINGULAR_TOL)?;
    let rhs = (z * &plus_inv).scale_real(2.0);
    linalg::spectral_norm(&(&k.k.shift(c(1.0, 0.0)) - &rhs)).map(|v| if n == 0 { 0.0 } else { v })
}

/// `Z_V = V^♮ Z V`.
pub fn transformed_impedance(z: &ComplexMatrix, t: &TupleTransform) -> Result<ComplexMatrix> {
    if z.rows() != t.v.rows() || z.cols() != t.v_natural.cols() {
        return invalid("impedance and transform dimensions differ");
    }
    Ok(&(&t.v_natural * z) * &t.v)
}

/// `cayley(V^♮ Z V)` for an accretive `Z`.
pub fn impedance_to_contraction(
    z: &ComplexMatrix,
    tuple: &BoundaryTupleModel,
    t: &TupleTransform,
) -> Result<ContractionParam> {
    let defect = accretivity_defect(z, tuple)?;
    if defect < -1e-10 {
        return invalid(format!("impedance is not accretive (defect {defect:.3e})"));
    }
    cayley(&transformed_impedance(z, t)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    FromK,
    FromZ,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::FromK => "from-K",
            Source::FromZ => "from-Z",
        }
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub enum BoundaryCondition {
    Contraction(ContractionParam),
    Impedance(ComplexMatrix),
}

/// Restriction of `A*` to the kernel of a boundary constraint.
#[derive(Clone, Debug)]
pub struct ExtensionModel {
    /// Compression `B* G_x A* B` in the coordinates of `basis`.
    pub op: ComplexMatrix,
    /// `G_x`-orthonormal basis of the admissible subspace.
    pub basis: ComplexMatrix,
    pub source: Source,
    pub gram: GramMatrix,
    pub astar: ComplexMatrix,
    /// Constraint rows `C` with admissible subspace `ker C`.
    pub constraint: ComplexMatrix,
    /// `G_x`-orthonormal basis of `ker Γ1^V`, the shared test space of the resolvents.
    pub test_basis: ComplexMatrix,
    /// `‖(I − B B* G_x) A* B‖` in the state norm.
    pub invariance_residual: f64,
    pub notes: Vec<String>,
}

impl ExtensionModel {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.op)
    }
}

fn admissible_basis(constraint: &ComplexMatrix, gram: &GramMatrix) -> Result<ComplexMatrix> {
    let null = linalg::nullspace(constraint, NULLSPACE_TOL)?;
    if null.cols() == 0 {
        return invalid("boundary constraint has an empty nullspace (over-constrained model)");
    }
    gram.orthonormalize(&null)
}

pub fn restrict_extension(
    model: &OperatorModel,
    tuple: &BoundaryTupleModel,
    t: &TupleTransform,
    bc: &BoundaryCondition,
) -> Result<ExtensionModel> {
    if tuple.model_dim() != model.dim() {
        return invalid("model and tuple dimensions differ");
    }
    let k_dim = tuple.boundary_dim();
    let (triple, _) = to_boundary_triple(tuple, t)?;
    let mut notes = Vec::new();
    let (constraint, source) = match bc {
        BoundaryCondition::Contraction(k) => {
            if k.k.rows() != k_dim || k.k.cols() != k_dim {
                return invalid(format!("K must be {k_dim}x{k_dim}"));
            }
            let plus = &k.k.shift(c(1.0, 0.0)) * &triple.gamma0;
            let minus = &k.k.shift(c(-1.0, 0.0)) * &triple.gamma1;
            (&plus + &minus.scale(I), Source::FromK)
        }
        BoundaryCondition::Impedance(z) => {
            if z.rows() != k_dim || z.cols() != k_dim {
                return invalid(format!("Z must be {k_dim}x{k_dim}"));
            }
            if cayley(&transformed_impedance(z, t)?).is_err() {
                notes.push("−1 in spectrum of Z_V: contraction route unavailable, Z-form used".to_string());
            }
            (&(z * &tuple.gamma0) - &tuple.gamma1.scale(I), Source::FromZ)
        }
    };
    let gram = model.gram_x.clone();
    let basis = admissible_basis(&constraint, &gram)?;
    let test_basis = admissible_basis(&triple.gamma1, &gram)?;
    let ab = &model.astar * &basis;
    let op = &(&basis.adjoint() * gram.matrix()) * &ab;
    let leak = &ab - &(&basis * &op);
    let invariance_residual = linalg::spectral_norm(&gram.upper().matmul(&leak))?;
    Ok(ExtensionModel {
        op,
        basis,
        source,
        gram,
        astar: model.astar.clone(),
        constraint,
        test_basis,
        invariance_residual,
        notes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventCheck {
    pub z: C64,
    /// `‖(T − z)^{-1}‖ · Im z`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MdissReport {
    pub source: Source,
    pub max_im_numrange: f64,
    pub resolvent_checks: Vec<ResolventCheck>,
    pub eigs: Vec<C64>,
}

impl MdissReport {
    pub fn is_dissipative(&self, tol: f64) -> bool {
        self.max_im_numrange <= tol
    }

    pub fn resolvent_bounds_hold(&self, tol: f64) -> bool {
        self.resolvent_checks.iter().all(|r| r.bound <= 1.0 + tol)
    }

    pub fn max_abs_imag_eig(&self) -> f64 {
        self.eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Numerical range and resolvent-bound certificate for the compressed operator.
pub fn mdissipativity_report(ext: &ExtensionModel) -> Result<MdissReport> {
    mdissipativity_of(&ext.op, ext.source)
}

/// Same for a bare matrix in orthonormal coordinates.
pub fn mdissipativity_of(op: &ComplexMatrix, source: Source) -> Result<MdissReport> {
    if !op.is_square() || op.is_empty() {
        return invalid("operator must be square and nonempty");
    }
    let max_im_numrange = *linalg::hermitian_eigenvalues(&op.imaginary_part())?.last().unwrap();
    let mut resolvent_checks = Vec::with_capacity(RESOLVENT_TEST_POINTS.len());
    for &(re, im) in &RESOLVENT_TEST_POINTS {
        let z = c(re, im);
        let shifted = op.shift(-z);
        let smin = *linalg::singular_values(&shifted)?.last().unwrap();
        if !(smin > SINGULAR_TOL * linalg::spectral_norm(&shifted)?) {
            if max_im_numrange <= 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "T − z singular at z = {re}+{im}i although the numerical range lies in Im ≤ 0"
                )));
            }
            resolvent_checks.push(ResolventCheck { z, bound: f64::INFINITY });
            continue;
        }
        resolvent_checks.push(ResolventCheck { z, bound: im / smin });
    }
    let mut eigs = linalg::eigenvalues(op)?;
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(MdissReport { source, max_im_numrange, resolvent_checks, eigs })
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub z: C64,
    pub rank_resolvent_diff: usize,
    pub rank_k_diff: usize,
    pub violation: bool,
    pub resolvent_profile: Vec<f64>,
    pub k_profile: Vec<f64>,
}

/// Resolvent `f ↦ y` of an extension: `y ∈ ker C` with
/// `((A* − z) y | φ) = (f | φ)` for every `φ` in the shared test space.
pub fn resolvent_matrix(ext: &ExtensionModel, z: C64) -> Result<ComplexMatrix> {
    let n = ext.astar.rows();
    let tw = &ext.test_basis.adjoint() * ext.gram.matrix();
    let top = &tw * &ext.astar.shift(-z);
    let system = top.vstack(&ext.constraint);
    if !system.is_square() {
        return invalid(format!(
            "resolvent system is {}x{}; constraint rank does not match the boundary dimension",
            system.rows(),
            system.cols()
        ));
    }
    let s = linalg::singular_values(&system)?;
    if !(s[n - 1] > SINGULAR_TOL * s[0]) {
        return invalid(format!("z = {} + {}i lies in the spectrum of the extension", z.re, z.im));
    }
    let rhs = tw.vstack(&ComplexMatrix::zeros(ext.constraint.rows(), n));
    linalg::solve(&system, &rhs)
}

/// `rank(R_2(z) − R_1(z))` against `rank(K_2 − K_1)`, both at relative tolerance 1e-8.
pub fn resolvent_difference_rank(
    e1: &ExtensionModel,
    e2: &ExtensionModel,
    z: C64,
    k1: &ContractionParam,
    k2: &ContractionParam,
) -> Result<RankReport> {
    if e1.astar.rows() != e2.astar.rows() || k1.k.rows() != k2.k.rows() {
        return invalid("extensions or contractions have different dimensions");
    }
    let r1 = resolvent_matrix(e1, z)?;
    let r2 = resolvent_matrix(e2, z)?;
    let scale = linalg::spectral_norm(&r1)?.max(linalg::spectral_norm(&r2)?);
    let resolvent_profile = linalg::singular_values(&(&r2 - &r1))?;
    let k_scale = linalg::spectral_norm(&k1.k)?.max(linalg::spectral_norm(&k2.k)?).max(f64::MIN_POSITIVE);
    let k_profile = linalg::singular_values(&(&k2.k - &k1.k))?;
    let tol = linalg::DEFAULT_RANK_TOL;
    let rank_resolvent_diff = resolvent_profile.iter().filter(|s| **s > tol * scale).count();
    let rank_k_diff = k_profile.iter().filter(|s| **s > tol * k_scale).count();
    Ok(RankReport {
        z,
        rank_resolvent_diff,
        rank_k_diff,
        violation: rank_resolvent_diff > rank_k_diff,
        resolvent_profile,
        k_profile,
    })
}
