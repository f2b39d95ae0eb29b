use faer::Mat;

use super::QepMatrices;
use crate::error::{invalid, numerical, Error, Result};
use crate::linalg::{eigenvalues, hermitian_eigen, vdot, vnorm, ComplexMatrix, GramMatrix, LuFactor};
use crate::spectrum::{SpectrumEntry, SpectrumReport, QUOTIENT_ARTIFACT};
use crate::{c, C64, I};

/// Dense companion solves are desk scale only.
pub const MAX_DOFS: usize = 2048;
pub const QEP_RESIDUAL_TOL: f64 = 1e-8;
/// Tag of the genuine `λ = 0` double eigenvalue when `ζ ≡ 0`.
pub const ZERO_MODE: &str = "zero-mode";

const ZERO_MODE_TOL: f64 = 1e-10;
/// `|λ| / max(1, σ)` below which a companion eigenvalue is tested for the constant direction.
const ARTIFACT_TOL: f64 = 1e-6;
const CONSTANT_COSINE_TOL: f64 = 1e-6;

/// `‖Q(λ)p‖ / ((|λ|²‖M‖ + |λ|‖C‖ + ‖K‖)‖p‖)`, Frobenius norms.
pub fn qep_residual(q: &QepMatrices, lambda: C64, p: &[C64]) -> f64 {
    let r = q.pencil_at(lambda).mul_vec(p);
    let l = lambda.norm();
    let scale = l * l * q.m_mass.frobenius_norm() + l * q.c_bdry.frobenius_norm() + q.k_stiff.frobenius_norm();
    vnorm(&r) / (scale * vnorm(p)).max(f64::MIN_POSITIVE)
}

struct Mode {
    lambda: C64,
    vector: Option<Vec<C64>>,
    zero_mode: bool,
}

/// Eigenvalues of `λ²M + iλC − K` through the companion pencil on `(p, λp)`.
///
/// `M = R*R` is factored first so the companion matrix is standard:
/// with `K̂ = R^{-*}KR^{-1}`, `Ĉ = R^{-*}CR^{-1}` and `λ = σμ`,
/// `μ [q; w] = [[0, I], [K̂/σ², −iĈ/σ]] [q; w]`. `C = 0` reduces to the
/// Hermitian problem `λ² = eig(K̂)`. The `n_want` smallest-modulus
/// eigenvalues get eigenvectors and residuals; the rest go to `full_spectrum`.
pub fn solve_qep(q: &QepMatrices, n_want: usize) -> Result<SpectrumReport> {
    let n = q.dim();
    if n == 0 || q.k_stiff.rows() != n || q.c_bdry.rows() != n || !q.k_stiff.is_square() || !q.c_bdry.is_square() {
        return invalid("QEP matrices have inconsistent shapes");
    }
    if n > MAX_DOFS {
        return invalid(format!("{n} degrees of freedom exceed the dense limit {MAX_DOFS}"));
    }
    let gram = GramMatrix::new(q.m_mass.clone())
        .map_err(|e| Error::NumericalFailure(format!("degenerate pencil, mass matrix rejected: {e}")))?;
    let reduce = |a: &ComplexMatrix| -> Result<ComplexMatrix> {
        Ok(gram.left_divide_upper_adjoint(&gram.right_divide_upper(a)?))
    };
    let khat = reduce(&q.k_stiff)?.hermitian_part();
    let mut modes = Vec::with_capacity(2 * n);
    if q.c_bdry.max_abs() == 0.0 {
        let (kappa, v) = hermitian_eigen(&khat)?;
        let top = kappa.iter().map(|k| k.abs()).fold(0.0, f64::max);
        for (j, &k) in kappa.iter().enumerate() {
            let p = gram.left_divide_upper(&ComplexMatrix::column_vector(&v.column(j))).column(0);
            if k.abs() <= ZERO_MODE_TOL * top {
                modes.push(Mode { lambda: c(0.0, 0.0), vector: Some(p), zero_mode: true });
            } else if k < 0.0 {
                return numerical(format!("stiffness has a negative eigenvalue {k:.3e} after mass reduction"));
            } else {
                let r = k.sqrt();
                modes.push(Mode { lambda: c(r, 0.0), vector: Some(p.clone()), zero_mode: false });
                modes.push(Mode { lambda: c(-r, 0.0), vector: Some(p), zero_mode: false });
            }
        }
    } else {
        let chat = reduce(&q.c_bdry)?;
        let sigma = (khat.frobenius_norm() / (n as f64).sqrt()).sqrt().max(1e-3);
        for lambda in companion_eigenvalues(&khat, &chat, sigma)? {
            if !lambda.re.is_finite() || !lambda.im.is_finite() {
                return numerical(format!("degenerate pencil: non-finite companion eigenvalue (σ = {sigma:.3e})"));
            }
            modes.push(Mode { lambda, vector: None, zero_mode: false });
        }
    }
    let scale = modes.iter().map(|m| m.lambda.norm()).fold(1.0, f64::max).sqrt();
    modes.sort_by(|a, b| {
        a.lambda
            .norm()
            .total_cmp(&b.lambda.norm())
            .then(a.lambda.re.total_cmp(&b.lambda.re))
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });

    let mut report = SpectrumReport::default();
    let mut rank = 0;
    let mut zero_seen = false;
    for mode in modes {
        if mode.zero_mode {
            if !zero_seen {
                zero_seen = true;
                let p = mode.vector.expect("Hermitian path has vectors");
                report.entries.push(SpectrumEntry {
                    lambda: mode.lambda,
                    residual: qep_residual(q, mode.lambda, &p),
                    mode_tag: ZERO_MODE.to_string(),
                    multiplicity: 2,
                });
            }
            continue;
        }
        let candidate = !q.undamped && mode.lambda.norm() < ARTIFACT_TOL * scale.max(1.0);
        if rank >= n_want && !candidate {
            report.full_spectrum.push(mode.lambda);
            continue;
        }
        let p = match mode.vector {
            Some(p) => p,
            None => inverse_iteration(q, mode.lambda)?,
        };
        let residual = qep_residual(q, mode.lambda, &p);
        if candidate && constant_cosine(q, &p) > 1.0 - CONSTANT_COSINE_TOL {
            report.entries.push(SpectrumEntry {
                lambda: mode.lambda,
                residual,
                mode_tag: QUOTIENT_ARTIFACT.to_string(),
                multiplicity: 1,
            });
            continue;
        }
        if rank >= n_want {
            report.full_spectrum.push(mode.lambda);
            continue;
        }
        if !(residual <= QEP_RESIDUAL_TOL) {
            return numerical(format!("eigenpair at λ = {} has QEP residual {residual:.3e}", mode.lambda));
        }
        report.entries.push(SpectrumEntry { lambda: mode.lambda, residual, mode_tag: format!("k={rank}"), multiplicity: 1 });
        rank += 1;
    }
    Ok(report)
}

fn is_real(a: &ComplexMatrix) -> bool {
    a.to_row_major().iter().all(|z| z.im == 0.0)
}

fn is_imaginary(a: &ComplexMatrix) -> bool {
    a.to_row_major().iter().all(|z| z.re == 0.0)
}

/// Companion eigenvalues mapped back to `λ`; real arithmetic when `K̂` is real
/// and `Ĉ` is real (`λ = iσν`) or purely imaginary (`λ = σμ`).
fn companion_eigenvalues(khat: &ComplexMatrix, chat: &ComplexMatrix, sigma: f64) -> Result<Vec<C64>> {
    let n = khat.rows();
    let (s2, s1) = (sigma * sigma, sigma);
    if is_real(khat) && (is_real(chat) || is_imaginary(chat)) {
        let damping_real = is_real(chat);
        let a = Mat::<f64>::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => 0.0,
            (true, false) => f64::from(u8::from(j - n == i)),
            (false, true) => {
                let k = khat[(i - n, j)].re / s2;
                if damping_real { -k } else { k }
            }
            (false, false) => {
                let z = chat[(i - n, j - n)];
                if damping_real { -z.re / s1 } else { z.im / s1 }
            }
        });
        let nu = a
            .eigenvalues()
            .map_err(|e| Error::NumericalFailure(format!("companion Schur iteration failed: {e:?}")))?;
        let rot = if damping_real { I * sigma } else { c(sigma, 0.0) };
        return Ok(nu.into_iter().map(|v| v * rot).collect());
    }
    let a = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => c(0.0, 0.0),
        (true, false) => c(f64::from(u8::from(j - n == i)), 0.0),
        (false, true) => khat[(i - n, j)] / s2,
        (false, false) => -I * chat[(i - n, j - n)] / s1,
    });
    Ok(eigenvalues(&a)?.into_iter().map(|mu| mu * sigma).collect())
}

/// Two steps of inverse iteration on `Q(λ)` from a fixed start vector.
fn inverse_iteration(q: &QepMatrices, lambda: C64) -> Result<Vec<C64>> {
    let n = q.dim();
    let mut x: Vec<C64> = (0..n).map(|i| c(1.0 + (0.37 * i as f64).sin(), (0.91 * i as f64).cos())).collect();
    let mut shift = lambda;
    for attempt in 0..4 {
        let lu = LuFactor::new(&q.pencil_at(shift))?;
        let solved = (|| -> Result<Vec<C64>> {
            let mut y = x.clone();
            for _ in 0..2 {
                y = lu.solve_vec(&y)?;
                let ny = vnorm(&y);
                y.iter_mut().for_each(|z| *z /= ny);
            }
            Ok(y)
        })();
        match solved {
            Ok(y) if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => return Ok(y),
            _ => {
                // exactly singular shift: nudge it off the eigenvalue
                shift = lambda + c(1e-13, 1e-13) * (1.0 + lambda.norm()) * f64::from(1u8 << attempt);
                x.iter_mut().enumerate().for_each(|(i, z)| *z += c(1e-3 * i as f64, 0.0));
            }
        }
    }
    numerical(format!("inverse iteration failed at λ = {lambda}"))
}

/// `|𝟙*Mp|² / ((𝟙*M𝟙)(p*Mp))`.
fn constant_cosine(q: &QepMatrices, p: &[C64]) -> f64 {
    let ones = vec![c(1.0, 0.0); q.dim()];
    let mp = q.m_mass.mul_vec(p);
    let m1 = q.m_mass.mul_vec(&ones);
    let num = vdot(&mp, &ones).norm_sqr();
    num / (vdot(&m1, &ones).re * vdot(&mp, p).re).max(f64::MIN_POSITIVE)
}
