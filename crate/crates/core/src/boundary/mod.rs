//! m-boundary tuples on finite operator models.
//!
//! Coordinates and pairings:
//!
//! * the state space carries `(f|g)_𝔛 = g* G_x f`;
//! * `Γ0` maps model coordinates to coordinates of `H_{−,+}`, `Γ1` to
//!   coordinates of `H_{+,−}`;
//! * the duality between `a ∈ H_{+,−}` and `b ∈ H_{−,+}` is
//!   `⟨a, b⟩ = b* P a` with `P` the pairing matrix, and
//!   `⟨b, a⟩ = conj⟨a, b⟩`. Trivial duality means `P = G_H`.
//!
//! The abstract Green identity then reads
//! `(A*f|g) − (f|A*g) = ⟨Γ1 f, Γ0 g⟩ − ⟨Γ0 f, Γ1 g⟩`.

mod collocation;
pub mod fixtures;

pub use collocation::{lobatto, Lobatto};
pub use fixtures::Fixture;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, vdot, ComplexMatrix, GramMatrix};
use crate::{C64, I};

/// Tolerance used when a model does not say otherwise.
pub const DEFAULT_MODEL_TOL: f64 = 1e-8;

/// Finite model of `A*`: its matrix on model coordinates and the state Gram.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorModel {
    pub astar: ComplexMatrix,
    pub gram_x: GramMatrix,
    pub label: String,
}

impl OperatorModel {
    pub fn new(astar: ComplexMatrix, gram_x: GramMatrix, label: impl Into<String>) -> Result<Self> {
        if !astar.is_square() || astar.rows() != gram_x.dim() {
            return invalid(format!(
                "A* is {}x{} but the state Gram has dimension {}",
                astar.rows(),
                astar.cols(),
                gram_x.dim()
            ));
        }
        Ok(Self { astar, gram_x, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.gram_x.dim()
    }
}

/// Trace maps and the generalized rigged structure `(H_{−,+}, H, H_{+,−})`.
#[derive(Clone, Debug)]
pub struct BoundaryTupleModel {
    pub gamma0: ComplexMatrix,
    pub gamma1: ComplexMatrix,
    pub gram_minus: GramMatrix,
    pub gram_pivot: GramMatrix,
    pub gram_plus: GramMatrix,
    pub pairing: ComplexMatrix,
}

impl BoundaryTupleModel {
    pub fn new(
        gamma0: ComplexMatrix,
        gamma1: ComplexMatrix,
        gram_minus: GramMatrix,
        gram_pivot: GramMatrix,
        gram_plus: GramMatrix,
        pairing: ComplexMatrix,
    ) -> Result<Self> {
        if gamma0.cols() != gamma1.cols() {
            return invalid("Γ0 and Γ1 must act on the same model dimension");
        }
        let k = gram_pivot.dim();
        if gamma0.rows() != gram_minus.dim() || gamma1.rows() != gram_plus.dim() {
            return invalid("trace maps do not match the boundary-space Grams");
        }
        if gram_minus.dim() != k || gram_plus.dim() != k || pairing.rows() != k || pairing.cols() != k {
            return invalid("boundary spaces and pairing must share one dimension");
        }
        linalg::checked_inverse(&pairing, 1e-13)
            .map_err(|_| crate::Error::InvalidInput("pairing matrix is degenerate".into()))?;
        Ok(Self { gamma0, gamma1, gram_minus, gram_pivot, gram_plus, pairing })
    }

    /// Boundary triple form: all spaces equal `H` with Gram `g`.
    pub fn trivial(gamma0: ComplexMatrix, gamma1: ComplexMatrix, g: GramMatrix) -> Result<Self> {
        let p = g.matrix().clone();
        Self::new(gamma0, gamma1, g.clone(), g.clone(), g, p)
    }

    pub fn model_dim(&self) -> usize {
        self.gamma0.cols()
    }

    pub fn boundary_dim(&self) -> usize {
        self.gram_pivot.dim()
    }

    pub fn has_trivial_duality(&self) -> bool {
        let g = self.gram_pivot.matrix();
        self.pairing.max_abs_diff(g) == 0.0
            && self.gram_minus.matrix().max_abs_diff(g) == 0.0
            && self.gram_plus.matrix().max_abs_diff(g) == 0.0
    }

    /// `⟨a, b⟩` for `a ∈ H_{+,−}`, `b ∈ H_{−,+}`.
    pub fn pair(&self, a: &[C64], b: &[C64]) -> C64 {
        vdot(&self.pairing.mul_vec(a), b)
    }

    /// `⟨Γ1 f, Γ0 g⟩ − ⟨Γ0 f, Γ1 g⟩`.
    pub fn pairing_part(&self, f: &[C64], g: &[C64]) -> C64 {
        let (g0f, g1f) = (self.gamma0.mul_vec(f), self.gamma1.mul_vec(f));
        let (g0g, g1g) = (self.gamma0.mul_vec(g), self.gamma1.mul_vec(g));
        self.pair(&g1f, &g0g) - self.pair(&g1g, &g0f).conj()
    }

    /// Matrix of the pairing part on basis pairs: entry `(j, i)` is the pairing part for `(e_i, e_j)`.
    pub fn pairing_part_matrix(&self) -> ComplexMatrix {
        let a = &(&self.gamma0.adjoint() * &self.pairing) * &self.gamma1;
        let b = &(&self.gamma1.adjoint() * &self.pairing.adjoint()) * &self.gamma0;
        &a - &b
    }

    /// Finite shadow of surjectivity of `Γ = (Γ0, Γ1)`: the stacked trace matrix has full row rank.
    pub fn traces_full_row_rank(&self, tol: f64) -> Result<bool> {
        let stacked = self.gamma0.vstack(&self.gamma1);
        Ok(linalg::numerical_rank(&stacked, tol)? == stacked.rows())
    }
}

/// Homeomorphism `V: H → H_{−,+}` with its ♮-adjoint `V^♮: H_{+,−} → H`.
#[derive(Clone, Debug)]
pub struct TupleTransform {
    pub v: ComplexMatrix,
    pub v_natural: ComplexMatrix,
}

impl TupleTransform {
    /// Computes `V^♮ = G_H^{-1} V* P` from `⟨V f, g⟩ = (f | V^♮ g)_H`.
    pub fn new(v: ComplexMatrix, tuple: &BoundaryTupleModel) -> Result<Self> {
        let k = tuple.boundary_dim();
        if v.rows() != k || v.cols() != k {
            return invalid(format!("V must be {k}x{k}"));
        }
        linalg::checked_inverse(&v, 1e-13).map_err(|_| crate::Error::InvalidInput("V is singular".into()))?;
        let v_natural = tuple.gram_pivot.solve(&(&v.adjoint() * &tuple.pairing))?;
        Ok(Self { v, v_natural })
    }

    pub fn identity(tuple: &BoundaryTupleModel) -> Result<Self> {
        Self::new(ComplexMatrix::identity(tuple.boundary_dim()), tuple)
    }

    /// Largest violation of `⟨V e_i, e_j⟩ = (e_i | V^♮ e_j)_H` over basis pairs.
    pub fn natural_identity_defect(&self, tuple: &BoundaryTupleModel) -> f64 {
        // ⟨V f, g⟩ = conj(⟨g, V f⟩) = conj((Vf)* P g) → matrix P* V ; (f|V^♮ g)_H → (V^♮)* G
        let lhs = &tuple.pairing.adjoint() * &self.v;
        let rhs = &self.v_natural.adjoint() * tuple.gram_pivot.matrix();
        lhs.max_abs_diff(&rhs)
    }
}

/// `(A*f|g)_𝔛 − (f|A*g)_𝔛 − ⟨Γ1 f, Γ0 g⟩ + ⟨Γ0 f, Γ1 g⟩`.
pub fn green_defect(model: &OperatorModel, tuple: &BoundaryTupleModel, f: &[C64], g: &[C64]) -> Result<C64> {
    let n = model.dim();
    if tuple.model_dim() != n || f.len() != n || g.len() != n {
        return invalid(format!(
            "green_defect: model dim {n}, tuple dim {}, vectors {} and {}",
            tuple.model_dim(),
            f.len(),
            g.len()
        ));
    }
    let af = model.astar.mul_vec(f);
    let ag = model.astar.mul_vec(g);
    let lhs = model.gram_x.inner(&af, g) - model.gram_x.inner(f, &ag);
    Ok(lhs - tuple.pairing_part(f, g))
}

/// Green defect on all basis pairs at once (entry `(j, i)` ↔ `(e_i, e_j)`).
pub fn green_defect_matrix(model: &OperatorModel, tuple: &BoundaryTupleModel) -> Result<ComplexMatrix> {
    if tuple.model_dim() != model.dim() {
        return invalid("green_defect_matrix: model/tuple dimension mismatch");
    }
    let g = model.gram_x.matrix();
    let lhs = &(g * &model.astar) - &(&model.astar.adjoint() * g);
    Ok(&lhs - &tuple.pairing_part_matrix())
}

/// Boundary triple `(H, V^{-1}Γ0, V^♮Γ1)` and its dual `(H, iΓ1^V, −iΓ0^V)`.
pub fn to_boundary_triple(
    tuple: &BoundaryTupleModel,
    t: &TupleTransform,
) -> Result<(BoundaryTupleModel, BoundaryTupleModel)> {
    let k = tuple.boundary_dim();
    if t.v.rows() != k || t.v_natural.rows() != k {
        return invalid("transform does not match the tuple's boundary dimension");
    }
    let v_inv =
        linalg::checked_inverse(&t.v, 1e-13).map_err(|_| crate::Error::InvalidInput("V is singular".into()))?;
    let g0 = &v_inv * &tuple.gamma0;
    let g1 = &t.v_natural * &tuple.gamma1;
    let triple = BoundaryTupleModel::trivial(g0.clone(), g1.clone(), tuple.gram_pivot.clone())?;
    let dual = BoundaryTupleModel::trivial(g1.scale(I), g0.scale(-I), tuple.gram_pivot.clone())?;
    Ok((triple, dual))
}

/// Dual triple `(H, iΓ1, −iΓ0)` of a triple.
pub fn dual_triple(triple: &BoundaryTupleModel) -> Result<BoundaryTupleModel> {
    BoundaryTupleModel::trivial(triple.gamma1.scale(I), triple.gamma0.scale(-I), triple.gram_pivot.clone())
}

/// `Z^♮ = P^{-1} Z* P*`, the adjoint of `Z: H_{−,+} → H_{+,−}` w.r.t. the pairing.
pub fn natural_adjoint(z: &ComplexMatrix, tuple: &BoundaryTupleModel) -> Result<ComplexMatrix> {
    let k = tuple.boundary_dim();
    if z.rows() != k || z.cols() != k {
        return invalid(format!("impedance must be {k}x{k}, got {}x{}", z.rows(), z.cols()));
    }
    linalg::solve(&tuple.pairing, &(&z.adjoint() * &tuple.pairing.adjoint()))
}

/// Largest violation of `⟨Z e_i, e_j⟩ = ⟨e_i, Z^♮ e_j⟩` over basis pairs.
pub fn natural_adjoint_defect(z: &ComplexMatrix, z_nat: &ComplexMatrix, tuple: &BoundaryTupleModel) -> f64 {
    // ⟨Z f, g⟩ = g* P Z f ; ⟨f, Z^♮ g⟩ = conj((Z^♮ g)* ... ) = g* (Z^♮)* P* f
    let lhs = &tuple.pairing * z;
    let rhs = &z_nat.adjoint() * &tuple.pairing.adjoint();
    lhs.max_abs_diff(&rhs)
}

/// `min Re⟨Z y, y⟩` over `y ∈ H_{−,+}` of unit `H_{−,+}`-norm.
///
/// Non-negative (up to tolerance) exactly when `Z` is accretive.
pub fn accretivity_defect(z: &ComplexMatrix, tuple: &BoundaryTupleModel) -> Result<f64> {
    let k = tuple.boundary_dim();
    if z.rows() != k || z.cols() != k {
        return invalid(format!("impedance must be {k}x{k}, got {}x{}", z.rows(), z.cols()));
    }
    if k == 0 {
        return Ok(0.0);
    }
    // Re(y* P Z y) = y* Herm(P Z) y, whitened by the H_{−,+} Cholesky factor
    let h = (&tuple.pairing * z).hermitian_part();
    let r = &tuple.gram_minus;
    let whitened = r.left_divide_upper_adjoint(&r.right_divide_upper(&h)?);
    let eig = linalg::hermitian_eigenvalues(&whitened.hermitian_part())?;
    Ok(eig[0])
}

/// Accretivity in a plain Hilbert space (trivial duality with identity Gram).
pub fn hilbert_accretivity_defect(z: &ComplexMatrix) -> Result<f64> {
    if !z.is_square() {
        return invalid("accretivity of a non-square matrix");
    }
    if z.is_empty() {
        return Ok(0.0);
    }
    Ok(linalg::hermitian_eigenvalues(&z.hermitian_part())?[0])
}
