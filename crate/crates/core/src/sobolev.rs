//! Fractional Sobolev scale on the unit circle and pointwise multipliers
//! `M_ζ: H^s → H^{−s}`.
//!
//! `H^s(S¹)` carries the norm `‖u‖_s² = Σ (1 + n²)^s |û(n)|²`, so the matrix
//! of `M_ζ` between the unit balls of `H^s` and `H^{−s}` has entries
//! `ζ̂(m − n) / (w_m w_n)` with `w_n = (1 + n²)^{s/2}` and
//! `ζ̂(n) = (1/2π) ∫ ζ e^{−inθ} dθ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::quadrature::gauss_legendre_on;
use crate::report::{fmt_f64, CsvTable};
use crate::{c, C64};

/// Geometric grading toward θ = 0.
const GRADING_RATIO: f64 = 0.5;
const GRADING_LEVELS: i32 = 40;
const PANEL_POINTS: usize = 16;

pub const DEFAULT_SCHEDULE: [usize; 4] = [16, 32, 64, 128];
pub const THETA_COMPACT: f64 = 0.05;
pub const THETA_NONCOMPACT: f64 = 0.5;
pub const MONOTONE_SLACK: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct SobolevScale {
    pub s: f64,
    pub n: usize,
    /// `w_k` for `k = −N..N`.
    pub weights: Vec<f64>,
}

impl SobolevScale {
    pub fn new(s: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return invalid(format!("Sobolev index s = {s} outside (0, 1]"));
        }
        let weights = (-(n as i64)..=n as i64).map(|k| (1.0 + (k * k) as f64).powf(0.5 * s)).collect();
        Ok(Self { s, n, weights })
    }

    pub fn weight(&self, k: i64) -> f64 {
        self.weights[(k + self.n as i64) as usize]
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientKind {
    Constant { value: C64 },
    /// Values at `θ_j = 2πj/M`, `j = 0..M`.
    Sampled { values: Vec<C64> },
    /// `ζ̂(−M..M)`.
    Fourier { coeffs: Vec<C64> },
    /// `strength · |θ|^{−a}` on `(−π, π]`.
    PowerSingular { a: f64, strength: C64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceCoefficient {
    #[serde(flatten)]
    pub kind: CoefficientKind,
    #[serde(default)]
    pub accretive_claimed: bool,
}

impl ImpedanceCoefficient {
    pub fn new(kind: CoefficientKind, accretive_claimed: bool) -> Result<Self> {
        let z = Self { kind, accretive_claimed };
        match &z.kind {
            CoefficientKind::Sampled { values } if values.is_empty() => return invalid("no samples"),
            CoefficientKind::Fourier { coeffs } if coeffs.len() % 2 == 0 => {
                return invalid("Fourier data must have odd length (indices −M..M)")
            }
            CoefficientKind::PowerSingular { a, .. } if !(*a > 0.0) || !a.is_finite() => {
                return invalid(format!("power exponent a = {a} must be positive"))
            }
            _ => {}
        }
        if accretive_claimed {
            let bad = match &z.kind {
                CoefficientKind::Constant { value } => value.re < 0.0,
                CoefficientKind::Sampled { values } => values.iter().any(|v| v.re < 0.0),
                _ => false,
            };
            if bad {
                return invalid("coefficient claimed accretive but Re ζ < 0 at a sample");
            }
        }
        Ok(z)
    }

    pub fn constant(value: C64) -> Self {
        Self { kind: CoefficientKind::Constant { value }, accretive_claimed: value.re >= 0.0 }
    }

    pub fn power(a: f64, strength: C64) -> Result<Self> {
        Self::new(CoefficientKind::PowerSingular { a, strength }, strength.re >= 0.0)
    }

    pub fn fourier(coeffs: Vec<C64>) -> Result<Self> {
        Self::new(CoefficientKind::Fourier { coeffs }, false)
    }

    pub fn sampled(values: Vec<C64>) -> Result<Self> {
        let acc = values.iter().all(|v| v.re >= 0.0);
        Self::new(CoefficientKind::Sampled { values }, acc)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let kind = match &self.kind {
            CoefficientKind::Constant { value } => CoefficientKind::Constant { value: value * factor },
            CoefficientKind::Sampled { values } => {
                CoefficientKind::Sampled { values: values.iter().map(|v| v * factor).collect() }
            }
            CoefficientKind::Fourier { coeffs } => {
                CoefficientKind::Fourier { coeffs: coeffs.iter().map(|v| v * factor).collect() }
            }
            CoefficientKind::PowerSingular { a, strength } => {
                CoefficientKind::PowerSingular { a: *a, strength: strength * factor }
            }
        };
        Self { kind, accretive_claimed: false }
    }

    /// `ζ(θ)`; the power kind is infinite at θ = 0.
    pub fn eval(&self, theta: f64) -> C64 {
        let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
        match &self.kind {
            CoefficientKind::Constant { value } => *value,
            CoefficientKind::Sampled { values } => {
                let m = values.len();
                let j = ((theta.rem_euclid(2.0 * PI)) / (2.0 * PI) * m as f64).round() as usize % m;
                values[j]
            }
            CoefficientKind::Fourier { coeffs } => {
                let m = (coeffs.len() / 2) as i64;
                (-m..=m).map(|k| coeffs[(k + m) as usize] * C64::from_polar(1.0, k as f64 * theta)).sum()
            }
            CoefficientKind::PowerSingular { a, strength } => strength * t.abs().powf(-a),
        }
    }

    /// `Re ζ ≥ 0` everywhere (Fourier data checked on a fine grid).
    pub fn is_accretive(&self) -> bool {
        match &self.kind {
            CoefficientKind::Constant { value } => value.re >= 0.0,
            CoefficientKind::Sampled { values } => values.iter().all(|v| v.re >= 0.0),
            CoefficientKind::PowerSingular { strength, .. } => strength.re >= 0.0,
            CoefficientKind::Fourier { coeffs } => {
                let m = 16 * coeffs.len().max(64);
                (0..m).all(|j| self.eval(2.0 * PI * j as f64 / m as f64).re >= -1e-12)
            }
        }
    }
}

/// Nodes and weights on `[π·2^{−40}, π]`, geometrically graded toward 0 and
/// split so every subpanel spans at most half a period of `cos(freq·θ)`.
fn graded_rule(freq: f64) -> Vec<(f64, f64)> {
    let mut rule = Vec::new();
    for level in 0..GRADING_LEVELS {
        let hi = PI * GRADING_RATIO.powi(level);
        let lo = hi * GRADING_RATIO;
        let pieces = (((hi - lo) * freq / PI).ceil() as usize).max(1);
        let h = (hi - lo) / pieces as f64;
        for p in 0..pieces {
            rule.extend(gauss_legendre_on(PANEL_POINTS, lo + p as f64 * h, lo + (p + 1) as f64 * h));
        }
    }
    rule
}

fn graded_cutoff() -> f64 {
    PI * GRADING_RATIO.powi(GRADING_LEVELS)
}

/// `∫_0^π θ^{−a} cos(kθ) dθ` for `k = 0..=k_max`, `a < 1`.
fn power_cosine_integrals(a: f64, k_max: usize, freq: f64) -> Vec<f64> {
    let rule = graded_rule(freq);
    let eps = graded_cutoff();
    let head = eps.powf(1.0 - a) / (1.0 - a);
    let head2 = eps.powf(3.0 - a) / (2.0 * (3.0 - a));
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let body: f64 = rule.iter().map(|(t, w)| w * t.powf(-a) * (kf * t).cos()).sum();
            body + head - kf * kf * head2
        })
        .collect()
}

/// `ζ̂(k)` for `k = −2N..2N` (index `k + 2N`).
pub fn fourier_coeffs(zeta: &ImpedanceCoefficient, n_max: usize, quad_points: usize) -> Result<Vec<C64>> {
    if quad_points < 8 * n_max {
        return invalid(format!("quad_points = {quad_points} below 8·N = {}", 8 * n_max));
    }
    let kmax = 2 * n_max as i64;
    let len = (2 * kmax + 1) as usize;
    let mut out = vec![C64::new(0.0, 0.0); len];
    match &zeta.kind {
        CoefficientKind::Constant { value } => out[kmax as usize] = *value,
        CoefficientKind::Sampled { values } => {
            let m = values.len() as f64;
            for k in -kmax..=kmax {
                out[(k + kmax) as usize] = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * (k * j as i64) as f64 / m))
                    .sum::<C64>()
                    / m;
            }
        }
        CoefficientKind::Fourier { coeffs } => {
            let m = (coeffs.len() / 2) as i64;
            for k in -kmax.min(m)..=kmax.min(m) {
                out[(k + kmax) as usize] = coeffs[(k + m) as usize];
            }
        }
        CoefficientKind::PowerSingular { a, strength } => {
            if *a >= 1.0 {
                return invalid(format!("|θ|^(−{a}) is not integrable (a ≥ 1)"));
            }
            let freq = (2 * n_max).max(quad_points / 8).max(1) as f64;
            let ints = power_cosine_integrals(*a, kmax as usize, freq);
            for k in -kmax..=kmax {
                out[(k + kmax) as usize] = strength * ints[k.unsigned_abs() as usize] / PI;
            }
        }
    }
    Ok(out)
}

/// Section `B_N` from coefficients `ζ̂(−2M..2M)` with `M ≥ N`.
fn section_from_coeffs(coeffs: &[C64], scale: &SobolevScale) -> ComplexMatrix {
    let off = (coeffs.len() / 2) as i64;
    let n = scale.n as i64;
    ComplexMatrix::from_fn(scale.dim(), scale.dim(), |i, j| {
        let (m, k) = (i as i64 - n, j as i64 - n);
        coeffs[(m - k + off) as usize] / (scale.weight(m) * scale.weight(k))
    })
}

pub fn multiplier_section(zeta: &ImpedanceCoefficient, s: f64, n: usize) -> Result<ComplexMatrix> {
    let scale = SobolevScale::new(s, n)?;
    let coeffs = fourier_coeffs(zeta, n, 8 * n.max(1))?;
    Ok(section_from_coeffs(&coeffs, &scale))
}

/// Diagonal operator `Z_n = scale · (1 + n²)^{exponent/2}`; `i·Λ` is `scale = i`, `exponent = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSymbol {
    pub scale: C64,
    pub exponent: f64,
}

impl FourierSymbol {
    pub fn i_lambda() -> Self {
        Self { scale: c(0.0, 1.0), exponent: 1.0 }
    }

    pub fn section(&self, s: f64, n: usize) -> Result<ComplexMatrix> {
        let scale = SobolevScale::new(s, n)?;
        let diag: Vec<C64> = (-(n as i64)..=n as i64)
            .map(|k| {
                let w = scale.weight(k);
                self.scale * (1.0 + (k * k) as f64).powf(0.5 * self.exponent) / (w * w)
            })
            .collect();
        Ok(ComplexMatrix::from_diag(&diag))
    }
}

#[derive(Clone, Debug)]
pub enum GateOperand {
    Coefficient(ImpedanceCoefficient),
    Symbol(FourierSymbol),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Compact,
    NonCompact,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Compact => "compact",
            Verdict::NonCompact => "non-compact",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GateThresholds {
    pub theta_c: f64,
    pub theta_n: f64,
    pub monotone_slack: f64,
    pub tail_index: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    pub s: f64,
    pub sections: Vec<usize>,
    #[serde(skip)]
    pub singular_profiles: Vec<Vec<f64>>,
    pub tail_indicator: Vec<f64>,
    /// Smallest eigenvalue of the Hermitian part of each section.
    pub accretivity_defect: Vec<f64>,
    pub verdict: Verdict,
    pub thresholds: GateThresholds,
    pub note: &'static str,
}

impl CompactnessReport {
    /// Columns `N, k, sigma_k` (k is 1-based).
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["N", "k", "sigma_k"]);
        for (n, prof) in self.sections.iter().zip(&self.singular_profiles) {
            for (k, s) in prof.iter().enumerate() {
                t.push(vec![n.to_string(), (k + 1).to_string(), fmt_f64(*s)]);
            }
        }
        t.render()
    }
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.len() < 3 {
        return invalid("schedule needs at least 3 sections");
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("schedule must be positive and strictly increasing");
    }
    Ok(())
}

fn sections_for(op: &GateOperand, s: f64, schedule: &[usize]) -> Result<Vec<ComplexMatrix>> {
    let n_max = *schedule.iter().max().unwrap();
    match op {
        GateOperand::Coefficient(z) => {
            let coeffs = fourier_coeffs(z, n_max, 8 * n_max)?;
            let off = 2 * n_max;
            schedule
                .iter()
                .map(|&n| {
                    let scale = SobolevScale::new(s, n)?;
                    Ok(section_from_coeffs(&coeffs[off - 2 * n..=off + 2 * n], &scale))
                })
                .collect()
        }
        GateOperand::Symbol(sym) => schedule.iter().map(|&n| sym.section(s, n)).collect(),
    }
}

pub fn verdict_from_tail(tail: &[f64]) -> Verdict {
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK));
    if monotone && tail.last().is_some_and(|t| *t < THETA_COMPACT) {
        Verdict::Compact
    } else if tail.iter().all(|t| *t > THETA_NONCOMPACT) {
        Verdict::NonCompact
    } else {
        Verdict::Inconclusive
    }
}

pub fn compactness_gate(op: &GateOperand, s: f64, schedule: &[usize]) -> Result<CompactnessReport> {
    check_schedule(schedule)?;
    let sections = sections_for(op, s, schedule)?;
    let analysed: Vec<(Vec<f64>, f64)> = sections
        .par_iter()
        .map(|b| {
            let sv = linalg::singular_values(b)?;
            let herm = linalg::hermitian_eigenvalues(&b.hermitian_part())?;
            Ok((sv, herm[0]))
        })
        .collect::<Result<_>>()?;
    let tail_indicator: Vec<f64> = schedule
        .iter()
        .zip(&analysed)
        .map(|(&n, (sv, _))| {
            let idx = n.div_ceil(2) - 1;
            if sv[0] == 0.0 {
                0.0
            } else {
                sv[idx] / sv[0]
            }
        })
        .collect();
    Ok(CompactnessReport {
        s,
        sections: schedule.to_vec(),
        verdict: verdict_from_tail(&tail_indicator),
        tail_indicator,
        accretivity_defect: analysed.iter().map(|a| a.1).collect(),
        singular_profiles: analysed.into_iter().map(|a| a.0).collect(),
        thresholds: GateThresholds {
            theta_c: THETA_COMPACT,
            theta_n: THETA_NONCOMPACT,
            monotone_slack: MONOTONE_SLACK,
            tail_index: "ceil(N/2)",
        },
        note: "verdicts are schedule-stable heuristics; non-compact is never proven by finite sections",
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LqReport {
    pub q: f64,
    /// `None` marks a divergent integral.
    pub lq_norm: Option<f64>,
    pub theorem_applies: bool,
    pub holder_ratio: Option<f64>,
    pub section_norms: Vec<f64>,
    pub accretive: bool,
}

/// `(∫_{−π}^{π} |ζ|^q dθ)^{1/q}`, `None` if divergent.
pub fn lq_norm(zeta: &ImpedanceCoefficient, q: f64) -> Result<Option<f64>> {
    if !(q >= 1.0) {
        return invalid(format!("q = {q} must be ≥ 1"));
    }
    let integral = match &zeta.kind {
        CoefficientKind::Constant { value } => 2.0 * PI * value.norm().powf(q),
        CoefficientKind::Sampled { values } => {
            2.0 * PI * values.iter().map(|v| v.norm().powf(q)).sum::<f64>() / values.len() as f64
        }
        CoefficientKind::Fourier { coeffs } => {
            let m = 32 * coeffs.len().max(64);
            2.0 * PI * (0..m).map(|j| zeta.eval(2.0 * PI * j as f64 / m as f64).norm().powf(q)).sum::<f64>()
                / m as f64
        }
        CoefficientKind::PowerSingular { a, strength } => {
            let b = a * q;
            if b >= 1.0 {
                return Ok(None);
            }
            let eps = graded_cutoff();
            let body: f64 = graded_rule(1.0).iter().map(|(t, w)| w * t.powf(-b)).sum();
            2.0 * strength.norm().powf(q) * (body + eps.powf(1.0 - b) / (1.0 - b))
        }
    };
    Ok(Some(integral.powf(1.0 / q)))
}

pub fn lq_report(zeta: &ImpedanceCoefficient, q: f64, s: f64, schedule: &[usize]) -> Result<LqReport> {
    check_schedule(schedule)?;
    let norm = lq_norm(zeta, q)?;
    let accretive = zeta.is_accretive();
    let section_norms = match norm {
        Some(_) => sections_for(&GateOperand::Coefficient(zeta.clone()), s, schedule)?
            .par_iter()
            .map(linalg::spectral_norm)
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let holder_ratio =
        norm.filter(|n| *n > 0.0).map(|n| section_norms.iter().fold(0.0f64, |m, b| m.max(*b)) / n);
    Ok(LqReport {
        q,
        lq_norm: norm,
        theorem_applies: norm.is_some_and(f64::is_finite) && q > 1.0 && accretive,
        holder_ratio,
        section_norms,
        accretive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e_i_theta() -> ImpedanceCoefficient {
        ImpedanceCoefficient::fourier(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn weights_symmetric_and_at_least_one() {
        let sc = SobolevScale::new(0.5, 10).unwrap();
        for k in 0..=10 {
            assert_eq!(sc.weight(k), sc.weight(-k));
            assert!(sc.weight(k) >= 1.0);
        }
        assert!(SobolevScale::new(0.0, 4).is_err());
        assert!(SobolevScale::new(1.5, 4).is_err());
    }

    #[test]
    fn coeffs_of_exponential() {
        let co = fourier_coeffs(&e_i_theta(), 4, 32).unwrap();
        for (i, v) in co.iter().enumerate() {
            let expect = if i == 8 + 1 { 1.0 } else { 0.0 };
            assert!((v - c(expect, 0.0)).norm() < 1e-12);
        }
        // the same function sampled
        let samples: Vec<C64> = (0..64).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / 64.0)).collect();
        let co = fourier_coeffs(&ImpedanceCoefficient::sampled(samples).unwrap(), 4, 32).unwrap();
        assert!((co[9] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(co.iter().enumerate().filter(|(i, _)| *i != 9).all(|(_, v)| v.norm() < 1e-12));
    }

    #[test]
    fn coeffs_of_constant() {
        let co = fourier_coeffs(&ImpedanceCoefficient::constant(c(1.0, 0.0)), 3, 24).unwrap();
        assert_eq!(co[6], c(1.0, 0.0));
        assert!(co.iter().enumerate().all(|(i, v)| i == 6 || v.norm() == 0.0));
    }

    #[test]
    fn coeffs_of_inverse_sqrt() {
        let z = ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap();
        let co = fourier_coeffs(&z, 8, 64).unwrap();
        assert!((co[16].re - 2.0 / PI.sqrt()).abs() < 1e-6, "{}", co[16]);
        // ∫_0^π θ^{-1/2} cos θ dθ = √(2π)·C(√2), Fresnel C(x) = ∫_0^x cos(πt²/2) dt
        let expect = (2.0 * PI).sqrt() * 0.528_891_595_111_246_5 / PI;
        assert!((co[17].re - expect).abs() < 1e-6, "{} vs {expect}", co[17].re);
        for k in 1..=16 {
            assert!((co[16 - k] - co[16 + k].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn coeffs_rejections() {
        let z = ImpedanceCoefficient::power(1.0, c(1.0, 0.0)).unwrap();
        assert!(matches!(fourier_coeffs(&z, 4, 32), Err(crate::Error::InvalidInput(_))));
        assert!(fourier_coeffs(&ImpedanceCoefficient::constant(c(1.0, 0.0)), 4, 31).is_err());
    }

    #[test]
    fn section_examples() {
        let b = multiplier_section(&ImpedanceCoefficient::constant(c(1.0, 0.0)), 0.5, 3).unwrap();
        let d: Vec<f64> = b.diagonal().iter().map(|z| z.re).collect();
        assert!((d[3] - 1.0).abs() < 1e-15);
        assert!((d[4] - 0.5f64.sqrt()).abs() < 1e-15 && (d[2] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((d[5] - 0.2f64.sqrt()).abs() < 1e-15);
        assert!((&b - &ComplexMatrix::from_diag(&b.diagonal())).max_abs() == 0.0);

        let zero = multiplier_section(&ImpedanceCoefficient::constant(c(0.0, 0.0)), 0.5, 3).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let sc = SobolevScale::new(0.5, 3).unwrap();
        let b = multiplier_section(&e_i_theta(), 0.5, 3).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let (m, n) = (i as i64 - 3, j as i64 - 3);
                let expect = if m == n + 1 { 1.0 / (sc.weight(m) * sc.weight(n)) } else { 0.0 };
                assert!((b[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_coefficient_gives_hermitian_psd_section() {
        let z = ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap();
        let b = multiplier_section(&z, 0.5, 16).unwrap();
        assert!(b.is_hermitian(1e-10));
        assert!(linalg::hermitian_eigenvalues(&b.hermitian_part()).unwrap()[0] >= -1e-10);
    }

    #[test]
    fn section_scales_linearly() {
        let z = ImpedanceCoefficient::power(0.3, c(1.0, 0.0)).unwrap();
        let f = c(0.7, -1.3);
        let b = multiplier_section(&z, 0.5, 8).unwrap();
        let bs = multiplier_section(&z.scaled(f), 0.5, 8).unwrap();
        assert!(bs.max_abs_diff(&b.scale(f)) < 1e-12);
    }

    #[test]
    fn singular_values_grow_with_n() {
        let z = ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap();
        let r = compactness_gate(&GateOperand::Coefficient(z), 0.5, &[8, 16, 32]).unwrap();
        for w in r.singular_profiles.windows(2) {
            for (fine, coarse) in w[1].iter().zip(&w[0]) {
                assert!(*fine >= coarse - 1e-8);
            }
        }
    }

    #[test]
    fn gate_verdicts() {
        let one = GateOperand::Coefficient(ImpedanceCoefficient::constant(c(1.0, 0.0)));
        let r = compactness_gate(&one, 0.5, &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(r.verdict, Verdict::Compact);
        // σ_64 of a doubly degenerate diagonal sits at |n| = 32
        let expect = (1.0 + 32.0f64 * 32.0).powf(-0.5);
        assert!((r.tail_indicator[3] - expect).abs() < 1e-12);

        let il = compactness_gate(&GateOperand::Symbol(FourierSymbol::i_lambda()), 0.5, &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(il.verdict, Verdict::NonCompact);
        assert!(il.singular_profiles.iter().flatten().all(|s| (s - 1.0).abs() < 1e-14));

        let sing = GateOperand::Coefficient(ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap());
        assert_eq!(compactness_gate(&sing, 0.5, &DEFAULT_SCHEDULE).unwrap().verdict, Verdict::Compact);
    }

    #[test]
    fn gate_rejects_bad_schedules() {
        let one = GateOperand::Coefficient(ImpedanceCoefficient::constant(c(1.0, 0.0)));
        assert!(compactness_gate(&one, 0.5, &[16, 32]).is_err());
        assert!(compactness_gate(&one, 0.5, &[16, 16, 32]).is_err());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict_from_tail(&[0.2, 0.1, 0.04]), Verdict::Compact);
        assert_eq!(verdict_from_tail(&[0.2, 0.3, 0.04]), Verdict::Inconclusive);
        assert_eq!(verdict_from_tail(&[0.9, 0.8, 0.7]), Verdict::NonCompact);
        assert_eq!(verdict_from_tail(&[0.2, 0.15, 0.1]), Verdict::Inconclusive);
    }

    #[test]
    fn lq_examples() {
        let one = ImpedanceCoefficient::constant(c(1.0, 0.0));
        let r = lq_report(&one, 2.0, 0.5, &[4, 8, 16]).unwrap();
        assert!((r.lq_norm.unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);

        let z = ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap();
        let r3 = lq_report(&z, 3.0, 0.5, &[4, 8, 16]).unwrap();
        assert!(r3.lq_norm.is_none() && !r3.theorem_applies);
        let r15 = lq_report(&z, 1.5, 0.5, &[4, 8, 16]).unwrap();
        assert!(r15.theorem_applies);
        assert!(r15.holder_ratio.unwrap().is_finite());

        let z9 = ImpedanceCoefficient::power(0.9, c(1.0, 0.0)).unwrap();
        let r = lq_report(&z9, 1.05, 0.5, &DEFAULT_SCHEDULE).unwrap();
        assert!(r.theorem_applies);
        assert_eq!(
            compactness_gate(&GateOperand::Coefficient(z9), 0.5, &DEFAULT_SCHEDULE).unwrap().verdict,
            Verdict::Compact
        );
        assert!(lq_norm(&one, 0.5).is_err());
    }

    #[test]
    fn lq_power_matches_closed_form() {
        for (a, q, strength) in [(0.5, 1.5, c(1.0, 0.0)), (0.9, 1.05, c(0.5, 2.0)), (0.3, 2.0, c(2.0, 0.0))] {
            let z = ImpedanceCoefficient::power(a, strength).unwrap();
            let b = a * q;
            let closed = (2.0 * strength.norm().powf(q) * PI.powf(1.0 - b) / (1.0 - b)).powf(1.0 / q);
            let got = lq_norm(&z, q).unwrap().unwrap();
            assert!((got - closed).abs() < 1e-6 * closed, "{got} vs {closed}");
        }
    }

    #[test]
    fn non_accretive_claim_rejected() {
        assert!(ImpedanceCoefficient::new(CoefficientKind::Constant { value: c(-1.0, 0.0) }, true).is_err());
        let r = lq_report(&ImpedanceCoefficient::constant(c(-1.0, 0.0)), 2.0, 0.5, &[4, 8, 16]).unwrap();
        assert!(!r.theorem_applies);
    }

    #[test]
    fn csv_and_sidecar() {
        let one = GateOperand::Coefficient(ImpedanceCoefficient::constant(c(1.0, 0.0)));
        let r = compactness_gate(&one, 0.5, &[2, 4, 8]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("N,k,sigma_k\n2,1,"));
        assert_eq!(csv.lines().count(), 1 + 5 + 9 + 17);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["verdict"], r.verdict.as_str());
        assert_eq!(json["tail_indicator"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn coefficient_json() {
        let z = ImpedanceCoefficient::power(0.5, c(1.0, 0.0)).unwrap();
        let s = serde_json::to_string(&z).unwrap();
        assert!(s.contains("\"kind\":\"power-singular\""));
        let back: ImpedanceCoefficient = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
    }
}
