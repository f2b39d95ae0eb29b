use faer::Side;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ComplexMatrix;
use crate::error::{invalid, Result};
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian positive-definite matrix defining an inner product
/// `(x|y) = y* G x`, with its Cholesky factor cached (`G = R* R`, `R` upper).
#[derive(Clone, Debug)]
pub struct GramMatrix {
    matrix: ComplexMatrix,
    upper: ComplexMatrix,
}

impl GramMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("Gram matrix must be square");
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return invalid("Gram matrix is not Hermitian to 1e-12");
        }
        // symmetrize so the factor sees exactly Hermitian data
        let matrix = matrix.hermitian_part();
        let llt = matrix
            .as_faer()
            .llt(Side::Lower)
            .map_err(|_| crate::Error::InvalidInput("Gram matrix is not positive definite".into()))?;
        let upper = ComplexMatrix::from_faer(llt.L().adjoint().to_owned());
        Ok(Self { matrix, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(n), upper: ComplexMatrix::identity(n) }
    }

    /// Diagonal Gram; all weights must be positive.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return invalid(format!("diagonal Gram weight {w} is not positive"));
        }
        let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self { matrix: ComplexMatrix::from_real_diag(weights), upper: ComplexMatrix::from_real_diag(&roots) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `R` with `G = R* R`.
    pub fn upper(&self) -> &ComplexMatrix {
        &self.upper
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.max_abs_diff(&ComplexMatrix::identity(self.dim())) == 0.0
    }

    /// `(x|y) = y* G x`.
    pub fn inner(&self, x: &[C64], y: &[C64]) -> C64 {
        super::vdot(&self.matrix.mul_vec(x), y)
    }

    pub fn norm(&self, x: &[C64]) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// `G^{-1} x` for a block of columns.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        // G^{-1} = R^{-1} R^{-*}
        let y = self.left_divide_upper_adjoint(rhs);
        Ok(self.left_divide_upper(&y))
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve(&ComplexMatrix::identity(self.dim()))
    }

    /// `R^{-1} x`.
    pub fn left_divide_upper(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut x = rhs.as_faer().clone();
        faer::linalg::triangular_solve::solve_upper_triangular_in_place(
            self.upper.as_faer().as_ref(),
            x.as_mut(),
            faer::Par::Seq,
        );
        ComplexMatrix::from_faer(x)
    }

    /// `R^{-*} x`.
    pub fn left_divide_upper_adjoint(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut x = rhs.as_faer().clone();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(
            self.upper.as_faer().adjoint(),
            x.as_mut(),
            faer::Par::Seq,
        );
        ComplexMatrix::from_faer(x)
    }

    /// `x R^{-1}`.
    pub fn right_divide_upper(&self, lhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if lhs.cols() != self.dim() {
            return invalid("right_divide_upper dimension mismatch");
        }
        // (x R^{-1})* = R^{-*} x*
        Ok(self.left_divide_upper_adjoint(&lhs.adjoint()).adjoint())
    }

    /// Columns of `basis` orthonormalized in this inner product: returns `Q`
    /// with `Q* G Q = I` and `span Q = span basis` (basis must have full column rank).
    pub fn orthonormalize(&self, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
        if basis.rows() != self.dim() {
            return invalid("orthonormalize: basis/gram dimension mismatch");
        }
        if basis.cols() == 0 {
            return Ok(basis.clone());
        }
        // QR of R·B in the Euclidean sense, then map back with R^{-1}
        let rb = self.upper.matmul(basis);
        let qr = rb.as_faer().qr();
        let q = ComplexMatrix::from_faer(qr.compute_thin_Q());
        let r = qr.thin_R();
        let diag_min = (0..r.ncols()).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        let diag_max = (0..r.ncols()).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        if !(diag_min > 1e-13 * diag_max) {
            return invalid("basis is rank deficient");
        }
        Ok(self.left_divide_upper(&q))
    }
}

impl Serialize for GramMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        GramMatrix::new(m).map_err(serde::de::Error::custom)
    }
}
