//! Eigenvalue reports shared by the analytic models and the FEM solver.

use serde::{Deserialize, Serialize};

use crate::C64;

/// Tag given to λ = 0 companion modes that come from the constant kernel of
/// the stiffness matrix rather than from the acoustic operator.
pub const QUOTIENT_ARTIFACT: &str = "quotient-artifact";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumEntry {
    pub lambda: C64,
    /// Scaled residual of the defining equation at `lambda`.
    pub residual: f64,
    pub mode_tag: String,
    pub multiplicity: usize,
}

impl SpectrumEntry {
    pub fn is_artifact(&self) -> bool {
        self.mode_tag == QUOTIENT_ARTIFACT
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub entries: Vec<SpectrumEntry>,
    /// Non-artifact eigenvalues not listed in `entries`, when `entries` is
    /// only a requested subset (FEM); empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub full_spectrum: Vec<C64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl SpectrumReport {
    pub fn new(entries: Vec<SpectrumEntry>) -> Self {
        Self { entries, ..Self::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Non-artifact eigenvalues: the full spectrum when present, else the entries.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self.entries.iter().filter(|e| !e.is_artifact()).map(|e| e.lambda).collect();
        out.extend(self.full_spectrum.iter().copied());
        out
    }

    /// Largest imaginary part over non-artifact eigenvalues (−∞ if none).
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest |Im λ| over non-artifact eigenvalues (0 if none).
    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Dissipative enclosure: every eigenvalue in `{Im λ ≤ tol}`.
    pub fn enclosed(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(re: f64, im: f64, tag: &str) -> SpectrumEntry {
        SpectrumEntry { lambda: C64::new(re, im), residual: 0.0, mode_tag: tag.into(), multiplicity: 1 }
    }

    #[test]
    fn artifacts_are_ignored_by_enclosure() {
        let mut r = SpectrumReport::new(vec![entry(1.0, -0.5, "a"), entry(0.0, 1e-3, QUOTIENT_ARTIFACT)]);
        assert!(r.enclosed(1e-8));
        r.full_spectrum.push(C64::new(2.0, 1e-6));
        assert!(!r.enclosed(1e-8));
        assert!((r.max_abs_imag() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_report() {
        let r = SpectrumReport::default();
        assert!(r.enclosed(0.0));
        assert_eq!(r.max_abs_imag(), 0.0);
    }
}
