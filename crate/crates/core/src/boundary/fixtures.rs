//! Shipped operator/tuple fixtures and the randomized Green-identity check.
//!
//! * `transport-N`: `A* = i d/dx` on `[0, 1]` with `N` Lobatto nodes,
//!   `Γ0 f = (f(0) + f(1))/√2`, `Γ1 f = i(f(1) − f(0))/√2`, boundary triple
//!   with `H = ℂ`.
//! * `transport-pair-N`: direct sum of two transport models, `H = ℂ²`.
//! * `rigged-pair-N`: the pair with a non-trivial rigging. Traces are
//!   rescaled by `μ_k^{∓1/2}` (`μ_k = √(1 + k²)`), `H_{−,+}` carries
//!   `diag μ`, `H_{+,−}` carries `diag μ^{-1}`, the pairing is the identity.
//!   `V = diag μ^{-1/2}` maps it back onto the pair triple.
//!
//! The finite model captures the Green identity exactly (summation by parts)
//! but not the unboundedness of the traces or the deficiency indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    green_defect, green_defect_matrix, lobatto, to_boundary_triple, BoundaryTupleModel, OperatorModel,
    TupleTransform, DEFAULT_MODEL_TOL,
};
use crate::error::{invalid, Result};
use crate::linalg::{ComplexMatrix, GramMatrix};
use crate::{c, C64, I};

pub const FIXTURE_NAMES: [&str; 3] = ["transport-64", "transport-pair-64", "rigged-pair-64"];

#[derive(Clone, Debug)]
pub struct Fixture {
    pub model: OperatorModel,
    pub tuple: BoundaryTupleModel,
    /// Homeomorphism `V` used to pass to a boundary triple.
    pub v: ComplexMatrix,
    pub tolerance: f64,
    /// `(component, x)` for each model coordinate.
    pub nodes: Vec<(usize, f64)>,
}

impl Fixture {
    pub fn label(&self) -> &str {
        &self.model.label
    }

    pub fn transform(&self) -> Result<TupleTransform> {
        TupleTransform::new(self.v.clone(), &self.tuple)
    }

    pub fn components(&self) -> usize {
        self.nodes.iter().map(|n| n.0 + 1).max().unwrap_or(0)
    }

    /// Random smooth function sampled at the nodes, normalized in the state norm.
    pub fn smooth_vector(&self, rng: &mut impl Rng) -> Vec<C64> {
        let comps = self.components();
        let coeffs: Vec<Vec<(C64, f64)>> = (0..comps)
            .map(|_| {
                (0..6)
                    .map(|_| (c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0.0..6.3)))
                    .collect()
            })
            .collect();
        let f: Vec<C64> = self
            .nodes
            .iter()
            .map(|&(k, x)| {
                coeffs[k]
                    .iter()
                    .enumerate()
                    .map(|(j, (a, phase))| a * (std::f64::consts::PI * j as f64 * x + phase).cos())
                    .sum()
            })
            .collect();
        let n = self.model.gram_x.norm(&f);
        f.iter().map(|z| z / n).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = FixtureJson {
            astar: self.model.astar.clone(),
            gram_x: self.model.gram_x.clone(),
            gamma0: self.tuple.gamma0.clone(),
            gamma1: self.tuple.gamma1.clone(),
            grams: GramsJson {
                minus: self.tuple.gram_minus.clone(),
                pivot: self.tuple.gram_pivot.clone(),
                plus: self.tuple.gram_plus.clone(),
            },
            pairing: self.tuple.pairing.clone(),
            tolerance: self.tolerance,
            label: self.model.label.clone(),
            v: Some(self.v.clone()),
            nodes: self.nodes.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| crate::Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FixtureJson =
            serde_json::from_str(text).map_err(|e| crate::Error::InvalidInput(format!("fixture JSON: {e}")))?;
        if !(doc.tolerance > 0.0) {
            return invalid("fixture tolerance must be positive");
        }
        let model = OperatorModel::new(doc.astar, doc.gram_x, doc.label)?;
        let tuple = BoundaryTupleModel::new(
            doc.gamma0,
            doc.gamma1,
            doc.grams.minus,
            doc.grams.pivot,
            doc.grams.plus,
            doc.pairing,
        )?;
        if tuple.model_dim() != model.dim() {
            return invalid("fixture traces do not act on the model dimension");
        }
        let v = doc.v.unwrap_or_else(|| ComplexMatrix::identity(tuple.boundary_dim()));
        let nodes = if doc.nodes.len() == model.dim() {
            doc.nodes
        } else {
            (0..model.dim()).map(|j| (0, j as f64 / model.dim().max(2).saturating_sub(1) as f64)).collect()
        };
        Ok(Self { model, tuple, v, tolerance: doc.tolerance, nodes })
    }
}

#[derive(Serialize, Deserialize)]
struct GramsJson {
    minus: GramMatrix,
    pivot: GramMatrix,
    plus: GramMatrix,
}

#[derive(Serialize, Deserialize)]
struct FixtureJson {
    astar: ComplexMatrix,
    gram_x: GramMatrix,
    gamma0: ComplexMatrix,
    gamma1: ComplexMatrix,
    grams: GramsJson,
    pairing: ComplexMatrix,
    tolerance: f64,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nodes: Vec<(usize, f64)>,
}

/// Single transport segment: `(A*, W, Γ0, Γ1, nodes)`.
fn transport_parts(points: usize) -> (ComplexMatrix, Vec<f64>, ComplexMatrix, ComplexMatrix, Vec<f64>) {
    let rule = lobatto(points);
    let astar = ComplexMatrix::from_fn(points, points, |i, j| I * rule.diff[i][j]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut g0 = ComplexMatrix::zeros(1, points);
    let mut g1 = ComplexMatrix::zeros(1, points);
    g0[(0, 0)] = c(s, 0.0);
    g0[(0, points - 1)] = c(s, 0.0);
    g1[(0, 0)] = c(0.0, -s);
    g1[(0, points - 1)] = c(0.0, s);
    (astar, rule.weights, g0, g1, rule.nodes)
}

pub fn transport(points: usize) -> Result<Fixture> {
    if points < 2 {
        return invalid("transport fixture needs at least 2 nodes");
    }
    let (astar, w, g0, g1, x) = transport_parts(points);
    let model = OperatorModel::new(astar, GramMatrix::diagonal(&w)?, format!("transport-{points}"))?;
    let tuple = BoundaryTupleModel::trivial(g0, g1, GramMatrix::identity(1))?;
    Ok(Fixture {
        model,
        tuple,
        v: ComplexMatrix::identity(1),
        tolerance: DEFAULT_MODEL_TOL,
        nodes: x.into_iter().map(|x| (0, x)).collect(),
    })
}

pub fn transport_pair(points: usize) -> Result<Fixture> {
    if points < 2 {
        return invalid("transport fixture needs at least 2 nodes");
    }
    let (astar, w, g0, g1, x) = transport_parts(points);
    let mut weights = w.clone();
    weights.extend_from_slice(&w);
    let model =
        OperatorModel::new(astar.direct_sum(&astar), GramMatrix::diagonal(&weights)?, format!("transport-pair-{points}"))?;
    let tuple = BoundaryTupleModel::trivial(g0.direct_sum(&g0), g1.direct_sum(&g1), GramMatrix::identity(2))?;
    let nodes = x.iter().map(|&x| (0, x)).chain(x.iter().map(|&x| (1, x))).collect();
    Ok(Fixture { model, tuple, v: ComplexMatrix::identity(2), tolerance: DEFAULT_MODEL_TOL, nodes })
}

pub fn rigged_pair(points: usize) -> Result<Fixture> {
    let base = transport_pair(points)?;
    let mu: Vec<f64> = (0..2).map(|k| (1.0 + (k * k) as f64).sqrt()).collect();
    let down = ComplexMatrix::from_real_diag(&mu.iter().map(|m| m.powf(-0.5)).collect::<Vec<_>>());
    let up = ComplexMatrix::from_real_diag(&mu.iter().map(|m| m.sqrt()).collect::<Vec<_>>());
    let tuple = BoundaryTupleModel::new(
        &down * &base.tuple.gamma0,
        &up * &base.tuple.gamma1,
        GramMatrix::diagonal(&mu)?,
        GramMatrix::identity(2),
        GramMatrix::diagonal(&mu.iter().map(|m| 1.0 / m).collect::<Vec<_>>())?,
        ComplexMatrix::identity(2),
    )?;
    let mut model = base.model;
    model.label = format!("rigged-pair-{points}");
    Ok(Fixture { model, tuple, v: down, tolerance: DEFAULT_MODEL_TOL, nodes: base.nodes })
}

/// Fixture by label: `transport-N`, `transport-pair-N` or `rigged-pair-N`.
pub fn by_name(name: &str) -> Result<Fixture> {
    let parse = |s: &str| s.parse::<usize>().map_err(|_| crate::Error::InvalidInput(format!("unknown fixture {name}")));
    if let Some(n) = name.strip_prefix("transport-pair-") {
        transport_pair(parse(n)?)
    } else if let Some(n) = name.strip_prefix("rigged-pair-") {
        rigged_pair(parse(n)?)
    } else if let Some(n) = name.strip_prefix("transport-") {
        transport(parse(n)?)
    } else {
        invalid(format!("unknown fixture {name}; known: {}", FIXTURE_NAMES.join(", ")))
    }
}

pub fn all() -> Result<Vec<Fixture>> {
    FIXTURE_NAMES.iter().map(|n| by_name(n)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenCheck {
    pub label: String,
    pub trials: usize,
    /// Max |defect| over random unit-norm smooth pairs.
    pub max_defect: f64,
    /// Same for the V-transformed triple and its dual.
    pub triple_max_defect: f64,
    pub dual_max_defect: f64,
    /// Max entry of the Green defect on basis pairs, relative to ‖G_x A*‖.
    pub basis_defect: f64,
    pub traces_full_rank: bool,
    pub tolerance: f64,
}

impl GreenCheck {
    pub fn passed(&self) -> bool {
        self.max_defect <= self.tolerance
            && self.triple_max_defect <= self.tolerance
            && self.dual_max_defect <= self.tolerance
    }
}

pub fn green_check(fixture: &Fixture, trials: usize, seed: u64) -> Result<GreenCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = fixture.transform()?;
    let (triple, dual) = to_boundary_triple(&fixture.tuple, &t)?;
    let (mut max_defect, mut triple_max, mut dual_max) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let f = fixture.smooth_vector(&mut rng);
        let g = fixture.smooth_vector(&mut rng);
        max_defect = max_defect.max(green_defect(&fixture.model, &fixture.tuple, &f, &g)?.norm());
        triple_max = triple_max.max(green_defect(&fixture.model, &triple, &f, &g)?.norm());
        dual_max = dual_max.max(green_defect(&fixture.model, &dual, &f, &g)?.norm());
    }
    let scale = (fixture.model.gram_x.matrix() * &fixture.model.astar).max_abs().max(1.0);
    let basis_defect = green_defect_matrix(&fixture.model, &fixture.tuple)?.max_abs() / scale;
    Ok(GreenCheck {
        label: fixture.label().to_string(),
        trials,
        max_defect,
        triple_max_defect: triple_max,
        dual_max_defect: dual_max,
        basis_defect,
        traces_full_rank: fixture.tuple.traces_full_row_rank(crate::linalg::DEFAULT_RANK_TOL)?,
        tolerance: fixture.tolerance,
    })
}
