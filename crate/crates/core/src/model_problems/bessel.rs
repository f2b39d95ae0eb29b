use crate::error::{invalid, Result};
use crate::C64;

/// Desk-scale argument range.
pub(super) const MAX_ARGUMENT: f64 = 200.0;
const SERIES_RADIUS: f64 = 12.0;
const RESCALE: f64 = 1e200;

fn check_argument(z: C64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() || z.norm() > MAX_ARGUMENT {
        return invalid(format!("Bessel argument {z} outside |z| ≤ {MAX_ARGUMENT}"));
    }
    Ok(())
}

fn series(m: usize, z: C64) -> C64 {
    let half = z * 0.5;
    let mut term = C64::new(1.0, 0.0);
    for k in 1..=m {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k * (k + m)) as f64;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && k as f64 > z.norm() {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence, normalized by whichever of
/// `1 = J0 + 2ΣJ_{2k}`, `cos z = J0 + 2Σ(−1)^k J_{2k}`, `e^{±iz} = J0 + 2Σ(±i)^k J_k`
/// suffers least cancellation.
fn miller(nmax: usize, z: C64) -> Vec<C64> {
    let r = z.norm();
    let start = nmax.max(r.ceil() as usize) + 40 + (4.0 * r.sqrt()).ceil() as usize;
    let start = start + start % 2;
    let mut f = vec![C64::new(0.0, 0.0); start + 2];
    f[start] = C64::new(1e-30, 0.0);
    for k in (1..=start).rev() {
        f[k - 1] = f[k] * (2.0 * k as f64) / z - f[k + 1];
        if f[k - 1].norm() > RESCALE {
            for v in f.iter_mut().skip(k - 1) {
                *v /= RESCALE;
            }
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut best: Option<(f64, C64)> = None;
    type Weight = Box<dyn Fn(usize) -> C64>;
    let candidates: [(C64, Weight); 4] = [
        (C64::new(1.0, 0.0), Box::new(|k| C64::new(if k % 2 == 0 { 1.0 } else { 0.0 }, 0.0))),
        (z.cos(), Box::new(|k| C64::new(if k % 2 == 0 { if k % 4 == 0 { 1.0 } else { -1.0 } } else { 0.0 }, 0.0))),
        ((i * z).exp(), Box::new(move |k| i.powu(k as u32))),
        ((-i * z).exp(), Box::new(move |k| (-i).powu(k as u32))),
    ];
    for (target, weight) in candidates.iter() {
        let mut sum = f[0];
        let mut mag = f[0].norm();
        for (k, v) in f.iter().enumerate().skip(1) {
            let t = weight(k) * v * 2.0;
            sum += t;
            mag += t.norm();
        }
        if sum.norm() == 0.0 || mag == 0.0 {
            continue;
        }
        let quality = sum.norm() / mag;
        if best.is_none_or(|(q, _)| quality > q) {
            best = Some((quality, target / sum));
        }
    }
    let scale = best.map(|b| b.1).unwrap_or(C64::new(0.0, 0.0));
    f.truncate(nmax + 1);
    f.iter().map(|v| v * scale).collect()
}

/// `J_0(z), …, J_nmax(z)`.
pub fn bessel_j_sequence(nmax: usize, z: C64) -> Result<Vec<C64>> {
    check_argument(z)?;
    if z.norm() <= SERIES_RADIUS {
        Ok((0..=nmax).map(|m| series(m, z)).collect())
    } else {
        Ok(miller(nmax, z))
    }
}

/// `J_m(z)` and `J_m'(z) = (J_{m−1}(z) − J_{m+1}(z))/2`.
pub fn bessel_j(m: usize, z: C64) -> Result<(C64, C64)> {
    let seq = bessel_j_sequence(m + 1, z)?;
    let below = if m == 0 { -seq[1] } else { seq[m - 1] };
    Ok((seq[m], (below - seq[m + 1]) * 0.5))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::c;

    /// `J_m(z) = (1/2π) ∫ e^{i(mτ − z sin τ)} dτ` by the periodic trapezoid rule.
    fn integral_oracle(m: usize, z: C64) -> C64 {
        let n = 1024;
        (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                (C64::new(0.0, m as f64 * t) - C64::new(0.0, 1.0) * z * t.sin()).exp()
            })
            .sum::<C64>()
            / n as f64
    }

    #[test]
    fn values_at_zero() {
        let (j, dj) = bessel_j(0, c(0.0, 0.0)).unwrap();
        assert_eq!(j, c(1.0, 0.0));
        assert_eq!(dj, c(0.0, 0.0));
        assert_eq!(bessel_j(3, c(0.0, 0.0)).unwrap().0, c(0.0, 0.0));
    }

    #[test]
    fn first_zero_of_j0_by_bisection() {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if bessel_j(0, c(a, 0.0)).unwrap().0.re * bessel_j(0, c(mid, 0.0)).unwrap().0.re <= 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        assert!((a - 2.404826).abs() < 1e-6);
    }

    #[test]
    fn real_argument_gives_real_values() {
        for x in [0.3, 5.0, 11.0, 13.0, 40.0, 120.0] {
            for m in 0..8 {
                let (j, dj) = bessel_j(m, c(x, 0.0)).unwrap();
                assert!(j.im.abs() < 1e-14 && dj.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matches_integral_oracle() {
        let points = [
            c(0.5, 0.0),
            c(3.0, 0.0),
            c(11.9, 0.0),
            c(12.1, 0.0),
            c(25.0, 0.0),
            c(80.0, 0.0),
            c(150.0, 0.0),
            c(5.0, -3.0),
            c(15.0, -5.0),
            c(20.0, -0.1),
            c(1.0, 1.0),
            c(-7.0, 9.5),
            c(0.0, -14.0),
        ];
        for z in points {
            for m in [0, 1, 2, 5, 9, 20] {
                let got = bessel_j(m, z).unwrap().0;
                let want = integral_oracle(m, z);
                // relative to the size of the integrand, the natural scale near zeros
                let scale = want.norm().max(1e-3 * z.im.abs().exp().min(1e3));
                assert!((got - want).norm() <= 1e-10 * scale.max(want.norm()), "m={m} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for z in [c(2.0, -0.5), c(17.0, -2.0)] {
            for m in [0, 1, 4] {
                let h = 1e-5;
                let fd = (bessel_j(m, z + h).unwrap().0 - bessel_j(m, z - h).unwrap().0) / (2.0 * h);
                assert!((bessel_j(m, z).unwrap().1 - fd).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(bessel_j(0, c(250.0, 0.0)).is_err());
        assert!(bessel_j(0, c(f64::NAN, 0.0)).is_err());
    }
}
