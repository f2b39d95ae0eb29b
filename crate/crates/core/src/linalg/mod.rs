//! Dense complex linear algebra used by every other module.
//!
//! Everything here is a thin, checked layer over `faer`: callers get
//! finite-entry matrices, Gram matrices with a cached Cholesky factor, and
//! eigen/singular solvers that report failure as [`Error`] values instead of
//! silently returning NaNs.

mod gram;
mod matrix;

pub use gram::GramMatrix;
pub use matrix::{vdot, vnorm, ComplexMatrix};

use faer::linalg::solvers::Solve;
use faer::Side;

use crate::error::{invalid, numerical, Error, Result};
use crate::C64;

/// Relative threshold used for rank decisions unless a caller overrides it.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Default bound on the condition number of `b` in [`solve_pencil`].
pub const DEFAULT_PENCIL_COND_LIMIT: f64 = 1e12;

/// Full singular value decomposition `m = U Σ V*`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let sigma = ComplexMatrix::from_fn(m, n, |i, j| {
            if i == j && i < self.singular_values.len() {
                C64::new(self.singular_values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &(&self.u * &sigma) * &self.v.adjoint()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.is_empty() {
        return invalid("svd of an empty matrix");
    }
    let dec = m
        .as_faer()
        .svd()
        .map_err(|e| Error::NumericalFailure(format!("svd did not converge: {e:?}")))?;
    let singular_values: Vec<f64> = dec.S().column_vector().iter().map(|s| s.re.max(0.0)).collect();
    Ok(Svd {
        u: ComplexMatrix::from_faer(dec.U().to_owned()),
        singular_values,
        v: ComplexMatrix::from_faer(dec.V().to_owned()),
    })
}

/// Singular values only, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return invalid("singular values of an empty matrix");
    }
    let mut s = m
        .as_faer()
        .singular_values()
        .map_err(|e| Error::NumericalFailure(format!("svd did not converge: {e:?}")))?;
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(singular_values(m)?[0])
}

/// Number of singular values above `tol · σ_max`; zero for the zero matrix.
pub fn numerical_rank(m: &ComplexMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return invalid(format!("rank tolerance must be positive, got {tol}"));
    }
    if m.is_empty() {
        return Ok(0);
    }
    let s = singular_values(m)?;
    Ok(rank_from_singular_values(&s, tol))
}

pub(crate) fn rank_from_singular_values(s: &[f64], tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Operator norm of `m: (C^n, g_in) → (C^m, g_out)`.
///
/// With `G = R* R` the weighted norm is `‖R_out · m · R_in^{-1}‖₂`.
pub fn gram_operator_norm(m: &ComplexMatrix, g_in: &GramMatrix, g_out: &GramMatrix) -> Result<f64> {
    if m.cols() != g_in.dim() || m.rows() != g_out.dim() {
        return invalid(format!(
            "gram_operator_norm: {}x{} matrix against Grams of dims {} (in) and {} (out)",
            m.rows(),
            m.cols(),
            g_in.dim(),
            g_out.dim()
        ));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    let weighted = g_in.right_divide_upper(&g_out.upper().matmul(m))?;
    spectral_norm(&weighted)
}

/// One eigenpair of a pencil or matrix.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    /// Unit 2-norm.
    pub vector: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct PencilSolution {
    pub pairs: Vec<EigenPair>,
    /// 2-norm condition number of `b`.
    pub b_condition: f64,
}

/// Eigenpairs of `a x = λ b x` for invertible `b`.
pub fn solve_pencil(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<PencilSolution> {
    solve_pencil_with_limit(a, b, DEFAULT_PENCIL_COND_LIMIT)
}

pub fn solve_pencil_with_limit(a: &ComplexMatrix, b: &ComplexMatrix, cond_limit: f64) -> Result<PencilSolution> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() || a.is_empty() {
        return invalid(format!(
            "pencil needs equal square blocks, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        ));
    }
    let b_condition = condition_number(b)?;
    if !(b_condition <= cond_limit) {
        return invalid(format!("b is singular to working precision (condition estimate {b_condition:.3e})"));
    }
    let dec = a
        .as_faer()
        .generalized_eigen(b.as_faer())
        .map_err(|e| Error::NumericalFailure(format!("QZ iteration failed: {e:?}")))?;
    let (sa, sb, u) = (dec.S_a(), dec.S_b(), dec.U());
    let n = a.rows();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let beta = sb[k];
        if beta.norm() == 0.0 {
            return numerical("infinite eigenvalue from an invertible b");
        }
        let value = sa[k] / beta;
        let mut vector: Vec<C64> = (0..n).map(|i| u[(i, k)]).collect();
        let nv = vnorm(&vector);
        vector.iter_mut().for_each(|z| *z /= nv);
        pairs.push(EigenPair { value, vector });
    }
    Ok(PencilSolution { pairs, b_condition })
}

/// Residual `‖a x − λ b x‖ / (‖a‖ + |λ|‖b‖)` for unit `x`, norms Frobenius.
pub fn pencil_residual(a: &ComplexMatrix, b: &ComplexMatrix, pair: &EigenPair) -> f64 {
    let ax = a.mul_vec(&pair.vector);
    let bx = b.mul_vec(&pair.vector);
    let r: Vec<C64> = ax.iter().zip(&bx).map(|(p, q)| p - pair.value * q).collect();
    let denom = a.frobenius_norm() + pair.value.norm() * b.frobenius_norm();
    vnorm(&r) / (denom * vnorm(&pair.vector)).max(f64::MIN_POSITIVE)
}

/// Eigenvalues of a general square matrix (complex Schur form).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return invalid("eigenvalues of a non-square matrix");
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    m.as_faer()
        .eigenvalues()
        .map_err(|e| Error::NumericalFailure(format!("Schur iteration failed: {e:?}")))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return invalid("Hermitian eigenproblem needs a square matrix");
    }
    let dec = m
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("Hermitian eigensolver failed: {e:?}")))?;
    let vals = dec.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, ComplexMatrix::from_faer(dec.U().to_owned())))
}

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return invalid("Hermitian eigenproblem needs a square matrix");
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    m.as_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("Hermitian eigensolver failed: {e:?}")))
}

/// `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &ComplexMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    let smin = *s.last().unwrap();
    Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
}

/// Solves `a x = rhs` by LU with partial pivoting; fails on non-finite output.
pub fn solve(a: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != rhs.rows() {
        return invalid(format!("solve: {}x{} system with {} rhs rows", a.rows(), a.cols(), rhs.rows()));
    }
    let lu = a.as_faer().partial_piv_lu();
    let x = ComplexMatrix::from_faer(lu.solve(rhs.as_faer()));
    if !x.is_finite() {
        return numerical("singular linear system");
    }
    Ok(x)
}

/// Reusable LU factorization.
pub struct LuFactor {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    n: usize,
}

impl LuFactor {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return invalid("LU of a non-square matrix");
        }
        Ok(Self { lu: a.as_faer().partial_piv_lu(), n: a.rows() })
    }

    pub fn solve_vec(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        if rhs.len() != self.n {
            return invalid("LU solve dimension mismatch");
        }
        let x = self.lu.solve(ComplexMatrix::column_vector(rhs).as_faer());
        let out: Vec<C64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return numerical("singular linear system");
        }
        Ok(out)
    }
}

/// Inverse with an explicit conditioning check.
///
/// Fails with `InvalidInput` when `cond(a) > 1/rel_tol`.
pub fn checked_inverse(a: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    if !a.is_square() || a.is_empty() {
        return invalid("inverse of a non-square or empty matrix");
    }
    let cond = condition_number(a)?;
    if !(cond * rel_tol < 1.0) {
        return invalid(format!("matrix is singular to tolerance (condition estimate {cond:.3e})"));
    }
    solve(a, &ComplexMatrix::identity(a.rows()))
}

/// Orthonormal (Euclidean) basis of `ker m`, singular values below `rel_tol · σ_max` count as zero.
pub fn nullspace(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let n = m.cols();
    if m.rows() == 0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let dec = svd(m)?;
    let rank = rank_from_singular_values(&dec.singular_values, rel_tol);
    Ok(dec.v.col_block(rank, n))
}

/// Cosines of the principal angles between `span(a)` and `span(b)`, both
/// assumed orthonormal in the same inner product; `gram` is that inner product.
pub fn principal_angles(a: &ComplexMatrix, b: &ComplexMatrix, gram: &GramMatrix) -> Result<Vec<f64>> {
    if a.rows() != gram.dim() || b.rows() != gram.dim() {
        return invalid("principal_angles: basis/gram dimension mismatch");
    }
    if a.cols() == 0 || b.cols() == 0 {
        return Ok(Vec::new());
    }
    let cross = &(&a.adjoint() * gram.matrix()) * b;
    let cosines = singular_values(&cross)?;
    Ok(cosines.iter().map(|c| c.clamp(0.0, 1.0).acos()).collect())
}

/// Largest principal angle between two subspaces; `π/2` if dimensions differ.
pub fn max_principal_angle(a: &ComplexMatrix, b: &ComplexMatrix, gram: &GramMatrix) -> Result<f64> {
    if a.cols() != b.cols() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let angles = principal_angles(a, b, gram)?;
    // acos is ill-conditioned near 1; recover small angles from the orthogonal residual instead
    let pa = &(&(b * &b.adjoint()) * gram.matrix()) * a;
    let resid = spectral_norm(&gram.upper().matmul(&(a - &pa)))?;
    let coarse = angles.iter().copied().fold(0.0, f64::max);
    Ok(if coarse < 1e-4 { resid.min(1.0).asin() } else { coarse })
}
