use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{assemble, build_mesh, solve_qep, BoundaryImpedance, MaterialCoefficients, MeshShape};
use crate::error::{invalid, Result};
use crate::report::{fmt_f64, CsvTable};
use crate::spectrum::{SpectrumEntry, SpectrumReport};
use crate::{c, C64};

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dofs: usize,
    pub mode_tag: String,
    pub lambda_ref: C64,
    /// `None` when no FEM eigenvalue lies within half the reference gap.
    pub lambda_h: Option<C64>,
    pub error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `(mode_tag, p_obs)` on the two finest levels where both matched.
    pub observed_orders: Vec<(String, Option<f64>)>,
    pub unmatched: Vec<String>,
}

impl ConvergenceTable {
    pub fn errors_for(&self, tag: &str) -> Vec<Option<f64>> {
        self.rows.iter().filter(|r| r.mode_tag == tag).map(|r| r.error).collect()
    }

    pub fn order_for(&self, tag: &str) -> Option<f64> {
        self.observed_orders.iter().find(|(t, _)| t == tag).and_then(|(_, p)| *p)
    }

    /// `h, dofs, mode_tag, re_ref, im_ref, re_h, im_h, error`.
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["h", "dofs", "mode_tag", "re_ref", "im_ref", "re_h", "im_h", "error"]);
        let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), fmt_f64);
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.h),
                r.dofs.to_string(),
                r.mode_tag.replace(',', ";"),
                fmt_f64(r.lambda_ref.re),
                fmt_f64(r.lambda_ref.im),
                opt(r.lambda_h.map(|z| z.re)),
                opt(r.lambda_h.map(|z| z.im)),
                opt(r.error),
            ]);
        }
        t.render()
    }
}

/// Neumann eigenvalues `π√(m²/lx² + n²/ly²)` of a rectangle, `0 < m² + n²`, the smallest `count`.
pub fn neumann_rectangle_reference(lx: f64, ly: f64, count: usize) -> SpectrumReport {
    let mut modes: Vec<(f64, usize, usize)> = Vec::new();
    let reach = count + 1;
    for m in 0..=reach {
        for n in 0..=reach {
            if m + n > 0 {
                let x = m as f64 / lx;
                let y = n as f64 / ly;
                modes.push((PI * (x * x + y * y).sqrt(), m, n));
            }
        }
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for (lambda, m, n) in modes {
        if let Some(last) = entries.last_mut() {
            if (last.lambda.re - lambda).abs() <= 1e-12 * lambda {
                last.multiplicity += 1;
                continue;
            }
        }
        if entries.len() == count {
            break;
        }
        entries.push(SpectrumEntry {
            lambda: c(lambda, 0.0),
            residual: 0.0,
            mode_tag: format!("m={m}:n={n}"),
            multiplicity: 1,
        });
    }
    SpectrumReport::new(entries)
}

/// FEM eigenvalues against a tagged reference on a sequence of meshes.
pub fn convergence_study(
    shapes: &[MeshShape],
    mat: &MaterialCoefficients,
    zeta: &BoundaryImpedance,
    reference: &SpectrumReport,
) -> Result<ConvergenceTable> {
    if shapes.len() < 2 {
        return invalid("convergence study needs at least two meshes");
    }
    let hs: Vec<f64> = shapes.iter().map(MeshShape::mesh_size).collect();
    if hs.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("mesh schedule must refine strictly");
    }
    let refs: Vec<&SpectrumEntry> = reference.entries.iter().filter(|e| !e.is_artifact()).collect();
    if refs.is_empty() {
        return invalid("reference spectrum is empty");
    }
    let gap = |i: usize| {
        refs.iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| (e.lambda - refs[i].lambda).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let levels: Vec<(usize, Vec<C64>)> = shapes
        .par_iter()
        .map(|shape| {
            let mesh = build_mesh(shape)?;
            let q = assemble(&mesh, mat, zeta)?;
            let spec = solve_qep(&q, 0)?;
            Ok((q.dim(), spec.eigenvalues()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (h, (dofs, eigs)) in hs.iter().zip(&levels) {
        for (i, r) in refs.iter().enumerate() {
            let nearest = eigs.iter().copied().min_by(|a, b| (a - r.lambda).norm().total_cmp(&(b - r.lambda).norm()));
            let matched = nearest.filter(|z| (z - r.lambda).norm() < 0.5 * gap(i));
            rows.push(ConvergenceRow {
                h: *h,
                dofs: *dofs,
                mode_tag: r.mode_tag.clone(),
                lambda_ref: r.lambda,
                lambda_h: matched,
                error: matched.map(|z| (z - r.lambda).norm()),
            });
        }
    }
    let mut observed_orders = Vec::new();
    let mut unmatched = Vec::new();
    let nl = shapes.len();
    for (i, r) in refs.iter().enumerate() {
        let coarse = &rows[(nl - 2) * refs.len() + i];
        let fine = &rows[(nl - 1) * refs.len() + i];
        let order = match (coarse.error, fine.error) {
            (Some(ec), Some(ef)) if ec > 0.0 && ef > 0.0 => Some((ec / ef).ln() / (coarse.h / fine.h).ln()),
            _ => None,
        };
        observed_orders.push((r.mode_tag.clone(), order));
        for row in rows.iter().skip(i).step_by(refs.len()) {
            if row.lambda_h.is_none() {
                unmatched.push(format!("{} at h = {}", row.mode_tag, row.h));
            }
        }
    }
    Ok(ConvergenceTable { rows, observed_orders, unmatched })
}
