//! Legendre–Gauss–Lobatto collocation on `[0, 1]`.
//!
//! With `W = diag(weights)` and `D` the differentiation matrix the pair is
//! summation-by-parts: `W D + Dᵀ W = diag(−1, 0, …, 0, 1)` up to roundoff.
//! The quadrature is exact for polynomials of degree `2N − 1`, which covers
//! every product `f' ḡ` of interpolants.

use crate::quadrature::legendre_pair;

/// Nodes (ascending), quadrature weights and differentiation matrix (row-major).
#[derive(Clone, Debug)]
pub struct Lobatto {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub diff: Vec<Vec<f64>>,
}

/// `points` collocation nodes (polynomial degree `points − 1`); needs `points ≥ 2`.
pub fn lobatto(points: usize) -> Lobatto {
    assert!(points >= 2, "Lobatto rule needs at least two points");
    let n = points - 1;
    let nf = n as f64;
    // Newton on (1 − x²) P_N'(x), started from Chebyshev–Lobatto points
    let mut x: Vec<f64> = (0..points).map(|j| -(std::f64::consts::PI * j as f64 / nf).cos()).collect();
    for xi in x.iter_mut().take(n).skip(1) {
        for _ in 0..100 {
            let (p, pm) = legendre_pair(n, *xi);
            let step = (*xi * p - pm) / (nf + 1.0) / p;
            *xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    x[0] = -1.0;
    x[n] = 1.0;
    let pn: Vec<f64> = x.iter().map(|&xi| legendre_pair(n, xi).0).collect();
    let weights_ref: Vec<f64> = pn.iter().map(|p| 2.0 / (nf * (nf + 1.0) * p * p)).collect();

    let mut diff = vec![vec![0.0; points]; points];
    for i in 0..points {
        let mut row_sum = 0.0;
        for j in 0..points {
            if i != j {
                let d = pn[i] / (pn[j] * (x[i] - x[j]));
                diff[i][j] = d;
                row_sum += d;
            }
        }
        // negative-sum diagonal keeps D·1 = 0 exactly
        diff[i][i] = -row_sum;
    }

    // affine map [-1, 1] → [0, 1]
    let nodes = x.iter().map(|xi| 0.5 * (xi + 1.0)).collect();
    let weights = weights_ref.iter().map(|w| 0.5 * w).collect();
    for row in diff.iter_mut() {
        row.iter_mut().for_each(|d| *d *= 2.0);
    }
    Lobatto { nodes, weights, diff }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials_exactly() {
        let rule = lobatto(12);
        // exact through degree 2N − 1 = 21
        for deg in 0..=21 {
            let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}: {q}");
        }
    }

    #[test]
    fn differentiates_polynomials() {
        let rule = lobatto(10);
        let f: Vec<f64> = rule.nodes.iter().map(|x| x.powi(7) - 2.0 * x * x).collect();
        for (i, x) in rule.nodes.iter().enumerate() {
            let d: f64 = rule.diff[i].iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!((d - (7.0 * x.powi(6) - 4.0 * x)).abs() < 1e-11);
        }
    }

    #[test]
    fn summation_by_parts() {
        let rule = lobatto(64);
        let n = rule.nodes.len();
        for i in 0..n {
            for j in 0..n {
                let q = rule.weights[i] * rule.diff[i][j] + rule.weights[j] * rule.diff[j][i];
                let expect = match (i, j) {
                    (0, 0) => -1.0,
                    (a, b) if a == n - 1 && b == n - 1 => 1.0,
                    _ => 0.0,
                };
                assert!((q - expect).abs() < 1e-12, "({i},{j}): {q}");
            }
        }
    }
}
