//! P1 finite elements for the acoustic impedance eigenproblem on polygons.
//!
//! With `p` the pressure and `ζ` the boundary impedance the weak form is
//!
//! ```text
//! ∫ α⁻¹∇p·∇q̄ − iλ ∫_∂Ω ζ p q̄ = λ² ∫ β p q̄,
//! ```
//!
//! i.e. the quadratic pencil `λ²M + iλC − K`. Integrating by parts gives
//! `∂_n p = iλζ p` on the boundary; for `Re ζ ≥ 0` the spectrum lies in the
//! closed lower half-plane.

mod convergence;
mod march;
mod mesh;
mod qep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use convergence::{convergence_study, neumann_rectangle_reference, ConvergenceRow, ConvergenceTable};
pub use march::{cn_energy_march, EnergyTrace, MarchState};
pub use mesh::{build_mesh, BoundaryEdge, Mesh, MeshShape};
pub use qep::{qep_residual, solve_qep, MAX_DOFS, QEP_RESIDUAL_TOL, ZERO_MODE};

use crate::error::{invalid, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::quadrature::gauss_legendre_on;
use crate::sobolev::ImpedanceCoefficient;
use crate::{c, C64};

const MIN_COEFFICIENT: f64 = 1e-10;

/// `α⁻¹` stored as `[a11, a12, a22]`, and `β`; one entry for the whole mesh or one per triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialCoefficients {
    pub alpha_inv: Vec<[f64; 3]>,
    pub beta: Vec<f64>,
}

impl MaterialCoefficients {
    pub fn unit() -> Self {
        Self::constant([1.0, 0.0, 1.0], 1.0)
    }

    pub fn constant(alpha_inv: [f64; 3], beta: f64) -> Self {
        Self { alpha_inv: vec![alpha_inv], beta: vec![beta] }
    }

    fn check(&self, n_triangles: usize) -> Result<()> {
        for (name, len) in [("alpha_inv", self.alpha_inv.len()), ("beta", self.beta.len())] {
            if len != 1 && len != n_triangles {
                return invalid(format!("{name} has {len} entries for {n_triangles} triangles"));
            }
        }
        for (t, &[a, b, d]) in self.alpha_inv.iter().enumerate() {
            // eigenvalues of [[a, b], [b, d]]
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            if !(mid - rad >= MIN_COEFFICIENT) {
                return invalid(format!("alpha_inv on triangle {t} is not uniformly positive definite"));
            }
        }
        if let Some((t, b)) = self.beta.iter().enumerate().find(|(_, b)| !(**b >= MIN_COEFFICIENT)) {
            return invalid(format!("beta = {b} on triangle {t} is below {MIN_COEFFICIENT:e}"));
        }
        Ok(())
    }

    fn at(&self, t: usize) -> ([f64; 3], f64) {
        let pick = |n: usize| if n == 1 { 0 } else { t };
        (self.alpha_inv[pick(self.alpha_inv.len())], self.beta[pick(self.beta.len())])
    }
}

/// Impedance on one boundary segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeImpedance {
    Constant(C64),
    /// `ζ(θ)` at the polar angle of the boundary point, 3-point Gauss per edge.
    Angular(ImpedanceCoefficient),
}

impl EdgeImpedance {
    fn is_zero(&self) -> bool {
        matches!(self, EdgeImpedance::Constant(z) if *z == c(0.0, 0.0))
    }

    fn is_accretive(&self) -> bool {
        match self {
            EdgeImpedance::Constant(z) => z.re >= 0.0,
            EdgeImpedance::Angular(coef) => coef.is_accretive(),
        }
    }
}

/// Impedance per boundary label, with an optional fallback for unlisted labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryImpedance {
    pub default: Option<EdgeImpedance>,
    pub by_label: BTreeMap<String, EdgeImpedance>,
}

impl BoundaryImpedance {
    pub fn uniform(z: EdgeImpedance) -> Self {
        Self { default: Some(z), by_label: BTreeMap::new() }
    }

    pub fn constant(z: C64) -> Self {
        Self::uniform(EdgeImpedance::Constant(z))
    }

    pub fn with_label(mut self, label: &str, z: EdgeImpedance) -> Self {
        self.by_label.insert(label.to_string(), z);
        self
    }

    pub fn for_label(&self, label: &str) -> Option<&EdgeImpedance> {
        self.by_label.get(label).or(self.default.as_ref())
    }

    fn used<'a>(&'a self, mesh: &'a Mesh) -> impl Iterator<Item = Option<&'a EdgeImpedance>> + 'a {
        mesh.labels().into_iter().map(move |l| self.for_label(&l))
    }

    /// `ζ ≡ 0` on every segment of `mesh`.
    pub fn vanishes_on(&self, mesh: &Mesh) -> bool {
        self.used(mesh).all(|z| z.is_some_and(EdgeImpedance::is_zero))
    }

    /// `Re ζ ≥ 0` on every segment of `mesh`.
    pub fn accretive_on(&self, mesh: &Mesh) -> bool {
        self.used(mesh).all(|z| z.is_some_and(EdgeImpedance::is_accretive))
    }
}

/// Stiffness `K`, boundary damping `C` and mass `M` of the pencil `λ²M + iλC − K`.
#[derive(Clone, Debug)]
pub struct QepMatrices {
    pub k_stiff: ComplexMatrix,
    pub c_bdry: ComplexMatrix,
    pub m_mass: ComplexMatrix,
    /// `ζ ≡ 0`: the constant mode is then a genuine eigenvector.
    pub undamped: bool,
}

impl QepMatrices {
    pub fn dim(&self) -> usize {
        self.m_mass.rows()
    }

    /// `λ²M + iλC − K`.
    pub fn pencil_at(&self, lambda: C64) -> ComplexMatrix {
        let a = lambda * lambda;
        let b = crate::I * lambda;
        ComplexMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            a * self.m_mass[(i, j)] + b * self.c_bdry[(i, j)] - self.k_stiff[(i, j)]
        })
    }

    pub fn diagnostics(&self) -> Result<QepDiagnostics> {
        let ones = vec![c(1.0, 0.0); self.dim()];
        let k1 = self.k_stiff.mul_vec(&ones);
        let kmax = self.k_stiff.max_abs().max(f64::MIN_POSITIVE);
        let kev = hermitian_eigenvalues(&self.k_stiff.hermitian_part())?;
        let ktop = kev.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let herm_c = hermitian_eigenvalues(&self.c_bdry.hermitian_part())?;
        let cscale = self.c_bdry.max_abs().max(f64::MIN_POSITIVE);
        Ok(QepDiagnostics {
            stiffness_hermitian_defect: self.k_stiff.max_abs_diff(&self.k_stiff.adjoint()) / kmax,
            mass_hermitian_defect: self.m_mass.max_abs_diff(&self.m_mass.adjoint()) / self.m_mass.max_abs(),
            constant_kernel_residual: k1.iter().map(|z| z.norm()).fold(0.0, f64::max) / kmax,
            stiffness_min_eig: kev[0] / ktop,
            stiffness_kernel_dim: kev.iter().filter(|&&e| e.abs() <= 1e-10 * ktop).count(),
            mass_min_eig: hermitian_eigenvalues(&self.m_mass)?[0],
            damping_hermitian_min_eig: herm_c[0] / cscale,
            damping_hermitian_norm: herm_c.iter().map(|e| e.abs()).fold(0.0, f64::max) / cscale,
        })
    }
}

/// Structural checks of the assembled matrices; eigenvalues relative to the largest entry.
#[derive(Clone, Debug, Serialize)]
pub struct QepDiagnostics {
    pub stiffness_hermitian_defect: f64,
    pub mass_hermitian_defect: f64,
    pub constant_kernel_residual: f64,
    pub stiffness_min_eig: f64,
    pub stiffness_kernel_dim: usize,
    pub mass_min_eig: f64,
    pub damping_hermitian_min_eig: f64,
    pub damping_hermitian_norm: f64,
}

pub fn assemble(mesh: &Mesh, mat: &MaterialCoefficients, zeta: &BoundaryImpedance) -> Result<QepMatrices> {
    mat.check(mesh.n_triangles())?;
    if let Some(l) = mesh.labels().into_iter().find(|l| zeta.for_label(l).is_none()) {
        return invalid(format!("no impedance given for boundary segment '{l}'"));
    }
    let n = mesh.n_vertices();
    if n > MAX_DOFS {
        return invalid(format!("{n} degrees of freedom exceed the dense limit {MAX_DOFS}"));
    }
    let mut k = vec![0.0; n * n];
    let mut m = vec![0.0; n * n];
    let v = mesh.vertices();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let ([a11, a12, a22], beta) = mat.at(t);
        let area = mesh.signed_area(t);
        // ∇φ_i = (y_j − y_k, x_k − x_j) / 2A for (i, j, k) cyclic
        let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
            let (pj, pk) = (v[tri[(i + 1) % 3]], v[tri[(i + 2) % 3]]);
            [(pj[1] - pk[1]) / (2.0 * area), (pk[0] - pj[0]) / (2.0 * area)]
        });
        for i in 0..3 {
            let gi = grads[i];
            let agi = [a11 * gi[0] + a12 * gi[1], a12 * gi[0] + a22 * gi[1]];
            for j in 0..3 {
                let gj = grads[j];
                k[tri[i] * n + tri[j]] += area * (agi[0] * gj[0] + agi[1] * gj[1]);
                m[tri[i] * n + tri[j]] += beta * area * if i == j { 2.0 } else { 1.0 } / 12.0;
            }
        }
    }
    let mut cb = vec![c(0.0, 0.0); n * n];
    let rule = gauss_legendre_on(3, 0.0, 1.0);
    for e in mesh.boundary_edges() {
        let (pa, pb) = (v[e.a], v[e.b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let local: [[C64; 2]; 2] = match zeta.for_label(&e.label).expect("checked above") {
            EdgeImpedance::Constant(z) => {
                let (d, o) = (z * (len / 3.0), z * (len / 6.0));
                [[d, o], [o, d]]
            }
            EdgeImpedance::Angular(coef) => {
                let mut loc = [[c(0.0, 0.0); 2]; 2];
                for &(s, w) in &rule {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let z = coef.eval(x[1].atan2(x[0])) * (w * len);
                    let phi = [1.0 - s, s];
                    for i in 0..2 {
                        for j in 0..2 {
                            loc[i][j] += z * (phi[i] * phi[j]);
                        }
                    }
                }
                loc
            }
        };
        let idx = [e.a, e.b];
        for i in 0..2 {
            for j in 0..2 {
                cb[idx[i] * n + idx[j]] += local[i][j];
            }
        }
    }
    if cb.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("impedance is not integrable on the boundary mesh");
    }
    Ok(QepMatrices {
        k_stiff: ComplexMatrix::from_real(n, n, &k)?,
        c_bdry: ComplexMatrix::new(n, n, cb)?,
        m_mass: ComplexMatrix::from_real(n, n, &m)?,
        undamped: zeta.vanishes_on(mesh),
    })
}

#[cfg(test)]
mod tests;
