use serde::Serialize;

use super::QepMatrices;
use crate::error::{invalid, Result};
use crate::linalg::{vdot, LuFactor};
use crate::report::{fmt_f64, CsvTable};
use crate::{c, C64};

/// State of the first-order system `u̇ = p`, `Mṗ = −Ku − Cp`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarchState {
    pub u: Vec<C64>,
    pub p: Vec<C64>,
}

impl MarchState {
    pub fn zeros(n: usize) -> Self {
        Self { u: vec![c(0.0, 0.0); n], p: vec![c(0.0, 0.0); n] }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyTrace {
    pub dt: f64,
    /// `E_n = u*Ku + p*Mp`, `n = 0..=steps`.
    pub energies: Vec<f64>,
}

impl EnergyTrace {
    /// `max_n (E_{n+1} − E_n) / E_0`; zero for a zero trace.
    pub fn max_relative_increase(&self) -> f64 {
        let e0 = self.energies[0];
        if e0 == 0.0 {
            return 0.0;
        }
        self.energies.windows(2).map(|w| (w[1] - w[0]) / e0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_n |E_n/E_0 − 1|`.
    pub fn relative_drift(&self) -> f64 {
        let e0 = self.energies[0];
        if e0 == 0.0 {
            return self.energies.iter().fold(0.0, |a, e| a.max(e.abs()));
        }
        self.energies.iter().map(|e| (e / e0 - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `step, time, energy`.
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["step", "time", "energy"]);
        for (n, e) in self.energies.iter().enumerate() {
            t.push(vec![n.to_string(), fmt_f64(n as f64 * self.dt), fmt_f64(*e)]);
        }
        t.render()
    }
}

fn energy(q: &QepMatrices, s: &MarchState) -> f64 {
    (vdot(&q.k_stiff.mul_vec(&s.u), &s.u) + vdot(&q.m_mass.mul_vec(&s.p), &s.p)).re
}

/// Crank–Nicolson march. `u` is first stripped of its `M`-weighted mean;
/// `K` annihilates constants, so energies are unchanged by it.
pub fn cn_energy_march(q: &QepMatrices, initial: &MarchState, dt: f64, steps: usize) -> Result<EnergyTrace> {
    let n = q.dim();
    if !(dt > 0.0) || !dt.is_finite() {
        return invalid(format!("time step {dt} must be positive"));
    }
    if initial.u.len() != n || initial.p.len() != n {
        return invalid(format!("initial state has lengths {}, {} for {n} unknowns", initial.u.len(), initial.p.len()));
    }
    let mut s = initial.clone();
    let ones = vec![c(1.0, 0.0); n];
    let m1 = q.m_mass.mul_vec(&ones);
    let mean = vdot(&s.u, &m1) / vdot(&ones, &m1);
    s.u.iter_mut().for_each(|z| *z -= mean);

    let (h, h2) = (0.5 * dt, 0.25 * dt * dt);
    // (M + h C + h² K) p₁ = (M − h C − h² K) p₀ − dt K u₀,  u₁ = u₀ + h (p₀ + p₁)
    let lhs = crate::linalg::ComplexMatrix::from_fn(n, n, |i, j| {
        q.m_mass[(i, j)] + q.c_bdry[(i, j)] * h + q.k_stiff[(i, j)] * h2
    });
    let rhs = crate::linalg::ComplexMatrix::from_fn(n, n, |i, j| {
        q.m_mass[(i, j)] - q.c_bdry[(i, j)] * h - q.k_stiff[(i, j)] * h2
    });
    let lu = LuFactor::new(&lhs)?;
    let mut energies = Vec::with_capacity(steps + 1);
    energies.push(energy(q, &s));
    for _ in 0..steps {
        let ku = q.k_stiff.mul_vec(&s.u);
        let b: Vec<C64> = rhs.mul_vec(&s.p).iter().zip(&ku).map(|(r, k)| r - k * dt).collect();
        let p1 = lu.solve_vec(&b)?;
        for ((u, p0), p1) in s.u.iter_mut().zip(&s.p).zip(&p1) {
            *u += (p0 + p1) * h;
        }
        s.p = p1;
        energies.push(energy(q, &s));
    }
    Ok(EnergyTrace { dt, energies })
}
