use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, numerical, Result};
use crate::spectrum::{SpectrumEntry, SpectrumReport};
use crate::{c, C64, I};

pub const CRITICAL_DAMPING: &str = "critical-damping";

const CRITICAL_TOL: f64 = 1e-12;
const AGREEMENT_TOL: f64 = 1e-8;

/// String on `[0, 1]`, Dirichlet at 0, impedance `ζ` at 1, `α = β = 1`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StringSpec {
    pub zeta: C64,
    pub n_modes: usize,
}

impl StringSpec {
    fn validate(&self) -> Result<()> {
        if !(self.zeta.re >= 0.0) || !self.zeta.im.is_finite() {
            return invalid(format!("string impedance {} must have Re ζ ≥ 0", self.zeta));
        }
        Ok(())
    }

    fn is_critical(&self) -> bool {
        (self.zeta - 1.0).norm() < CRITICAL_TOL
    }
}

/// `g(λ) = iζ sin λ − cos λ` and `g'(λ)`.
fn characteristic(zeta: C64, lambda: C64) -> (C64, C64) {
    let (s, co) = (lambda.sin(), lambda.cos());
    (I * zeta * s - co, I * zeta * co + s)
}

fn scaled_residual(zeta: C64, lambda: C64) -> f64 {
    let g = characteristic(zeta, lambda).0;
    g.norm() / (zeta.norm() * lambda.sin().norm() + lambda.cos().norm())
}

fn log_ratio(zeta: C64) -> C64 {
    let mut r = (zeta + 1.0) / (zeta - 1.0);
    // a signed zero would put real ratios on the wrong side of the cut
    if r.im == 0.0 {
        r.im = 0.0;
    }
    r.ln()
}

/// `λ_n = (Log((ζ+1)/(ζ−1)) + 2πin)/(2i)`, principal branch, `n = 0..n_modes`.
pub fn string_closed_form(zeta: C64, n_modes: usize) -> Result<Vec<C64>> {
    let spec = StringSpec { zeta, n_modes };
    spec.validate()?;
    if spec.is_critical() {
        return Ok(Vec::new());
    }
    let l = log_ratio(zeta);
    Ok((0..n_modes).map(|n| (l + c(0.0, 2.0 * PI * n as f64)) / c(0.0, 2.0)).collect())
}

fn newton(zeta: C64, mut lambda: C64) -> Option<C64> {
    for _ in 0..60 {
        let (g, dg) = characteristic(zeta, lambda);
        if dg.norm() == 0.0 {
            return None;
        }
        let step = g / dg;
        lambda -= step;
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + lambda.norm()) {
            return Some(lambda);
        }
    }
    let (g, _) = characteristic(zeta, lambda);
    (g.norm() < 1e-13).then_some(lambda)
}

/// Path from 0 to `zeta`, detouring through `1 + i/2` when the segment passes near the critical point.
fn continuation_path(zeta: C64) -> impl Fn(f64) -> C64 {
    let t_star = (zeta.re / zeta.norm_sqr()).clamp(0.0, 1.0);
    let near = zeta.norm() > 0.0 && (zeta * t_star - 1.0).norm() < 0.05;
    let waypoint = c(1.0, 0.5);
    move |t: f64| {
        if !near {
            zeta * t
        } else if t <= 0.5 {
            waypoint * (2.0 * t)
        } else {
            waypoint + (zeta - waypoint) * (2.0 * t - 1.0)
        }
    }
}

/// Roots of `g` by continuation in `ζ` from the Neumann end, `λ_n(0) = (n + ½)π`.
pub fn string_newton_roots(zeta: C64, n_modes: usize) -> Result<Vec<C64>> {
    let spec = StringSpec { zeta, n_modes };
    spec.validate()?;
    if spec.is_critical() {
        return Ok(Vec::new());
    }
    let path = continuation_path(zeta);
    let mut roots = Vec::with_capacity(n_modes);
    for n in 0..n_modes {
        let mut lambda = c((n as f64 + 0.5) * PI, 0.0);
        let (mut t, mut dt) = (0.0f64, 1.0f64 / 32.0);
        while t < 1.0 {
            let t_next = (t + dt).min(1.0);
            match newton(path(t_next), lambda) {
                Some(next) if (next - lambda).norm() < 0.5 => {
                    lambda = next;
                    t = t_next;
                    dt = (dt * 1.5).min(0.125);
                }
                _ => {
                    dt *= 0.5;
                    if dt < 1e-10 {
                        return numerical(format!("string continuation stalled for mode {n} at t = {t}"));
                    }
                }
            }
        }
        roots.push(lambda);
    }
    Ok(roots)
}

/// Max distance from each continued root to the nearest closed-form branch value.
pub fn string_cross_check(zeta: C64, n_modes: usize) -> Result<f64> {
    let roots = string_newton_roots(zeta, n_modes)?;
    if roots.is_empty() {
        return Ok(0.0);
    }
    let l = log_ratio(zeta);
    Ok(roots
        .iter()
        .map(|mu| {
            let k = ((c(0.0, 2.0) * mu - l) / c(0.0, 2.0 * PI)).re.round();
            (mu - (l + c(0.0, 2.0 * PI * k)) / c(0.0, 2.0)).norm()
        })
        .fold(0.0, f64::max))
}

pub fn string_spectrum(spec: &StringSpec) -> Result<SpectrumReport> {
    spec.validate()?;
    if spec.is_critical() {
        let mut r = SpectrumReport::default();
        r.flags.push(CRITICAL_DAMPING.to_string());
        return Ok(r);
    }
    let lambdas = string_closed_form(spec.zeta, spec.n_modes)?;
    let gap = string_cross_check(spec.zeta, spec.n_modes)?;
    if gap > AGREEMENT_TOL {
        return numerical(format!("closed form and root finder disagree by {gap:.3e}"));
    }
    let entries = lambdas
        .into_iter()
        .enumerate()
        .map(|(n, lambda)| SpectrumEntry {
            lambda,
            residual: scaled_residual(spec.zeta, lambda),
            mode_tag: format!("n={n}"),
            multiplicity: 1,
        })
        .collect();
    Ok(SpectrumReport::new(entries))
}
