use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_sequence;
use crate::error::{invalid, numerical, Result};
use crate::spectrum::{SpectrumEntry, SpectrumReport};
use crate::{c, C64, I};

pub const MAX_ANGULAR_MODES: usize = 20;
/// Search boxes must stay in `Im λ ≤ ENCLOSURE_DELTA`.
pub const ENCLOSURE_DELTA: f64 = 0.1;
const BASE_POINTS: usize = 2048;
const PERTURBATION: f64 = 1e-4;
const MAX_PERTURBATIONS: usize = 5;
/// A contour segment still turning by more than this after shrinking below
/// `NEAR_ROOT` is treated as passing through a root.
const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_4;
const NEAR_ROOT: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;
const SPLIT_FRACTIONS: [f64; 4] = [0.5, 0.4713, 0.5318, 0.4419];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Self { re_min, re_max, im_min, im_max };
        if ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) || re_min >= re_max || im_min >= im_max {
            return invalid(format!("degenerate search box {b:?}"));
        }
        Ok(b)
    }

    fn expanded(&self, d: f64) -> Self {
        Self { re_min: self.re_min - d, re_max: self.re_max + d, im_min: self.im_min - d, im_max: self.im_max + d }
    }

    fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re_min - slack && z.re <= self.re_max + slack && z.im >= self.im_min - slack && z.im <= self.im_max + slack
    }

    fn perimeter(&self) -> f64 {
        2.0 * ((self.re_max - self.re_min) + (self.im_max - self.im_min))
    }

    fn center(&self) -> C64 {
        c(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn corners(&self) -> [C64; 4] {
        [
            c(self.re_min, self.im_min),
            c(self.re_max, self.im_min),
            c(self.re_max, self.im_max),
            c(self.re_min, self.im_max),
        ]
    }

    fn split(&self, frac: f64) -> (Self, Self) {
        if self.re_max - self.re_min >= self.im_max - self.im_min {
            let x = self.re_min + frac * (self.re_max - self.re_min);
            (Self { re_max: x, ..*self }, Self { re_min: x, ..*self })
        } else {
            let y = self.im_min + frac * (self.im_max - self.im_min);
            (Self { im_max: y, ..*self }, Self { im_min: y, ..*self })
        }
    }
}

/// `h̃(λ) = (iζ J_m(λ) − J_m'(λ)) / λ^ν`, with the root at λ = 0 divided out.
struct Characteristic {
    m: usize,
    zeta: C64,
    nu: i32,
}

impl Characteristic {
    fn new(m: usize, zeta: C64) -> Self {
        let nu = match m {
            0 if zeta == C64::new(0.0, 0.0) => 1,
            0 | 1 => 0,
            _ => m as i32 - 1,
        };
        Self { m, zeta, nu }
    }

    /// `h` and `h'`, using `J_m'' = −J_m'/λ − (1 − m²/λ²) J_m`.
    fn raw(&self, lambda: C64) -> Result<(C64, C64)> {
        let seq = bessel_j_sequence(self.m + 1, lambda)?;
        let m = self.m;
        let below = if m == 0 { -seq[1] } else { seq[m - 1] };
        let j = seq[m];
        let dj = (below - seq[m + 1]) * 0.5;
        let h = I * self.zeta * j - dj;
        let ddj = -dj / lambda - (1.0 - (m * m) as f64 / (lambda * lambda)) * j;
        Ok((h, I * self.zeta * dj - ddj))
    }

    fn at_zero(&self) -> C64 {
        match (self.m, self.nu) {
            (0, 1) => c(0.5, 0.0),
            (0, _) => I * self.zeta,
            (1, _) => c(-0.5, 0.0),
            (m, _) => c(-1.0 / (2f64.powi(m as i32) * (1..m).map(|k| k as f64).product::<f64>()), 0.0),
        }
    }

    fn value(&self, lambda: C64) -> Result<C64> {
        if lambda.norm() < 1e-12 {
            return Ok(self.at_zero());
        }
        let (h, _) = self.raw(lambda)?;
        Ok(h / lambda.powi(self.nu))
    }

    fn newton_step(&self, lambda: C64) -> Result<C64> {
        let (h, dh) = self.raw(lambda)?;
        let nu = self.nu as f64;
        // h̃/h̃' = h / (h' − ν h/λ)
        Ok(h / (dh - h * nu / lambda))
    }

    /// Phase increment along `a → b`; `None` when the segment runs through a root.
    fn phase(&self, a: C64, b: C64, fa: C64, fb: C64, depth: usize) -> Result<Option<f64>> {
        if fa.norm() == 0.0 || fb.norm() == 0.0 {
            return Ok(None);
        }
        let d = (fb / fa).arg();
        if d.abs() < MAX_PHASE_STEP {
            return Ok(Some(d));
        }
        if (b - a).norm() < NEAR_ROOT || depth > 60 {
            return Ok(None);
        }
        let mid = (a + b) * 0.5;
        let fm = self.value(mid)?;
        let Some(left) = self.phase(a, mid, fa, fm, depth + 1)? else { return Ok(None) };
        let Some(right) = self.phase(mid, b, fm, fb, depth + 1)? else { return Ok(None) };
        Ok(Some(left + right))
    }

    /// Winding number of `h̃` around the box; `None` if the contour is too close to a root.
    fn winding(&self, bx: &SearchBox, density: f64) -> Result<Option<i64>> {
        let corners = bx.corners();
        let mut total = 0.0;
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            let pts = (((b - a).norm() * density).ceil() as usize).max(8);
            let mut za = a;
            let mut fa = self.value(a)?;
            for k in 1..=pts {
                let zb = a + (b - a) * (k as f64 / pts as f64);
                let fb = self.value(zb)?;
                match self.phase(za, zb, fa, fb, 0)? {
                    Some(d) => total += d,
                    None => return Ok(None),
                }
                za = zb;
                fa = fb;
            }
        }
        let w = total / (2.0 * std::f64::consts::PI);
        if (w - w.round()).abs() > 0.05 || w.round() < 0.0 {
            return Ok(None);
        }
        Ok(Some(w.round() as i64))
    }

    fn newton(&self, start: C64) -> Result<Option<C64>> {
        let mut z = start;
        for _ in 0..60 {
            let step = self.newton_step(z)?;
            if !step.re.is_finite() || !step.im.is_finite() {
                return Ok(None);
            }
            z -= step;
            if z.norm() > super::bessel::MAX_ARGUMENT {
                return Ok(None);
            }
            if step.norm() <= 1e-15 * z.norm().max(1.0) {
                return Ok(Some(z));
            }
        }
        let (h, _) = self.raw(z)?;
        Ok((h.norm() <= RESIDUAL_TOL).then_some(z))
    }

    fn isolate(&self, bx: &SearchBox, count: i64, density: f64, depth: usize, out: &mut Vec<C64>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if count == 1 {
            let slack = 1e-9 * bx.perimeter().max(1.0);
            if let Some(z) = self.newton(bx.center())? {
                if bx.contains(z, slack) {
                    out.push(z);
                    return Ok(());
                }
            }
        }
        if depth > 80 || bx.perimeter() < 1e-9 {
            return numerical(format!("root isolation failed near {} (count {count})", bx.center()));
        }
        for frac in SPLIT_FRACTIONS {
            let (lo, hi) = bx.split(frac);
            let (Some(a), Some(b)) = (self.winding(&lo, density)?, self.winding(&hi, density)?) else { continue };
            if a + b != count {
                continue;
            }
            self.isolate(&lo, a, density, depth + 1, out)?;
            self.isolate(&hi, b, density, depth + 1, out)?;
            return Ok(());
        }
        numerical(format!("no admissible split of a cell near {}", bx.center()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeRoots {
    pub m: usize,
    pub roots: Vec<C64>,
    /// `|h(λ)|` at each polished root.
    pub residuals: Vec<f64>,
    pub contour_count: usize,
    /// Box actually used after perturbations.
    pub search_box: SearchBox,
    pub perturbations: usize,
}

/// Roots of `h(λ) = iζ J_m(λ) − J_m'(λ)` in `bx`, excluding `λ = 0`.
pub fn disk_mode_roots(m: usize, zeta: C64, bx: &SearchBox) -> Result<ModeRoots> {
    if m > MAX_ANGULAR_MODES {
        return invalid(format!("angular mode {m} exceeds {MAX_ANGULAR_MODES}"));
    }
    let bx = SearchBox::new(bx.re_min, bx.re_max, bx.im_min, bx.im_max)?;
    let ch = Characteristic::new(m, zeta);
    for attempt in 0..=MAX_PERTURBATIONS {
        let cur = bx.expanded(attempt as f64 * PERTURBATION);
        let density = BASE_POINTS as f64 / cur.perimeter();
        let Some(count) = ch.winding(&cur, density)? else { continue };
        let mut roots = Vec::with_capacity(count as usize);
        ch.isolate(&cur, count, density, 0, &mut roots)?;
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let residuals: Vec<f64> = roots.iter().map(|z| ch.raw(*z).map(|r| r.0.norm())).collect::<Result<_>>()?;
        if let Some(r) = residuals.iter().find(|r| **r > RESIDUAL_TOL) {
            return numerical(format!("polished root residual {r:.3e} above {RESIDUAL_TOL:e}"));
        }
        if roots.windows(2).any(|w| (w[1] - w[0]).norm() <= NEAR_ROOT) {
            return numerical("duplicate roots after isolation");
        }
        return Ok(ModeRoots {
            m,
            contour_count: count as usize,
            roots,
            residuals,
            search_box: cur,
            perturbations: attempt,
        });
    }
    numerical(format!("contour stays within {NEAR_ROOT:e} of a root after {MAX_PERTURBATIONS} perturbations"))
}

/// Unit disk, `α = 𝕀`, `β = 1`, constant impedance `ζ`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiskSpec {
    pub zeta: C64,
    pub m_max: usize,
    pub search_box: SearchBox,
}

pub fn disk_spectrum(spec: &DiskSpec) -> Result<SpectrumReport> {
    if !(spec.zeta.re >= 0.0) {
        return invalid(format!("disk impedance {} must have Re ζ ≥ 0", spec.zeta));
    }
    if spec.m_max > MAX_ANGULAR_MODES {
        return invalid(format!("m_max = {} exceeds {MAX_ANGULAR_MODES}", spec.m_max));
    }
    if spec.search_box.im_max > ENCLOSURE_DELTA {
        return invalid(format!("search box must lie in Im λ ≤ {ENCLOSURE_DELTA}"));
    }
    let modes: Vec<ModeRoots> = (0..=spec.m_max)
        .into_par_iter()
        .map(|m| disk_mode_roots(m, spec.zeta, &spec.search_box))
        .collect::<Result<_>>()?;
    let mut report = SpectrumReport::default();
    for mode in &modes {
        if mode.perturbations > 0 {
            report.flags.push(format!("box-perturbed:m={}:{}", mode.m, mode.perturbations));
        }
        for (k, (lambda, res)) in mode.roots.iter().zip(&mode.residuals).enumerate() {
            report.entries.push(SpectrumEntry {
                lambda: *lambda,
                residual: *res,
                mode_tag: format!("m={}:k={k}", mode.m),
                multiplicity: if mode.m == 0 { 1 } else { 2 },
            });
        }
    }
    let all: Vec<C64> = report.entries.iter().map(|e| e.lambda).collect();
    let isolated = all.iter().enumerate().all(|(i, a)| all[i + 1..].iter().all(|b| (a - b).norm() > NEAR_ROOT));
    if !isolated {
        report.flags.push("isolation-violated".to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_box() -> SearchBox {
        SearchBox::new(0.0, 20.0, -5.0, 0.0).unwrap()
    }

    #[test]
    fn neumann_first_roots() {
        let r0 = disk_mode_roots(0, c(0.0, 0.0), &standard_box()).unwrap();
        assert!((r0.roots[0] - c(3.831706, 0.0)).norm() < 1e-6, "{:?}", r0.roots);
        assert_eq!(r0.contour_count, r0.roots.len());
        let r1 = disk_mode_roots(1, c(0.0, 0.0), &standard_box()).unwrap();
        assert!((r1.roots[0] - c(1.841184, 0.0)).norm() < 1e-6, "{:?}", r1.roots);
    }

    #[test]
    fn unit_impedance_roots_decay() {
        let r = disk_mode_roots(0, c(1.0, 0.0), &standard_box()).unwrap();
        assert!(!r.roots.is_empty());
        assert!(r.roots.iter().all(|z| z.im < 0.0), "{:?}", r.roots);
        assert_eq!(r.contour_count, r.roots.len());
    }

    #[test]
    fn half_impedance_has_imaginary_root_for_m0() {
        // iζ I_0(y) = i I_1(y) at λ = −iy, so I_1(y)/I_0(y) = 1/2
        let r = disk_mode_roots(0, c(0.5, 0.0), &standard_box()).unwrap();
        let imag: Vec<_> = r.roots.iter().filter(|z| z.re.abs() < 1e-8).collect();
        assert_eq!(imag.len(), 1, "{:?}", r.roots);
    }

    #[test]
    fn skew_impedance_roots_are_real() {
        let spec = DiskSpec { zeta: c(0.0, 0.3), m_max: 4, search_box: standard_box() };
        let r = disk_spectrum(&spec).unwrap();
        assert!(!r.is_empty());
        assert!(r.max_abs_imag() < 1e-8);
    }

    #[test]
    fn neumann_spectrum_symmetric() {
        let spec = DiskSpec { zeta: c(0.0, 0.0), m_max: 3, search_box: SearchBox::new(-12.0, 12.0, -2.0, 0.0).unwrap() };
        let r = disk_spectrum(&spec).unwrap();
        let eig = r.eigenvalues();
        for z in &eig {
            assert!(z.im.abs() < 1e-8);
            assert!(eig.iter().any(|w| (w + z).norm() < 1e-8), "no partner for {z}");
        }
    }

    #[test]
    fn multiplicities_and_tags() {
        let spec = DiskSpec { zeta: c(0.5, 0.0), m_max: 2, search_box: SearchBox::new(0.0, 8.0, -3.0, 0.0).unwrap() };
        let r = disk_spectrum(&spec).unwrap();
        for e in &r.entries {
            let m0 = e.mode_tag.starts_with("m=0:");
            assert_eq!(e.multiplicity, if m0 { 1 } else { 2 });
            assert!(e.lambda.im < 0.0);
        }
        assert!(!r.has_flag("isolation-violated"));
    }

    #[test]
    fn invalid_specs() {
        let bx = standard_box();
        assert!(disk_spectrum(&DiskSpec { zeta: c(-0.5, 0.0), m_max: 1, search_box: bx }).is_err());
        assert!(disk_spectrum(&DiskSpec { zeta: c(0.5, 0.0), m_max: 21, search_box: bx }).is_err());
        let up = SearchBox::new(0.0, 5.0, -1.0, 2.0).unwrap();
        assert!(disk_spectrum(&DiskSpec { zeta: c(0.5, 0.0), m_max: 1, search_box: up }).is_err());
        assert!(SearchBox::new(1.0, 0.0, -1.0, 0.0).is_err());
    }
}
