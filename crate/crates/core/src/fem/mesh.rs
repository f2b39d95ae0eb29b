use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const MIN_AREA: f64 = 1e-14;
const FILE_HEADER: &str = "mesh2d v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub label: String,
}

/// Conforming triangulation of a polygon with labelled boundary segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum MeshShape {
    /// Unit square, `n × n` cells.
    Square { n: usize },
    Rectangle { nx: usize, ny: usize, lx: f64, ly: f64 },
    /// Polygon inscribed in the unit circle, `n_r` rings of `n_theta` vertices.
    DiskPolygon { n_r: usize, n_theta: usize },
}

impl MeshShape {
    /// Characteristic mesh size used in convergence tables.
    pub fn mesh_size(&self) -> f64 {
        match self {
            MeshShape::Square { n } => 1.0 / *n as f64,
            MeshShape::Rectangle { nx, ny, lx, ly } => (lx / *nx as f64).max(ly / *ny as f64),
            MeshShape::DiskPolygon { n_r, .. } => 1.0 / *n_r as f64,
        }
    }
}

pub fn build_mesh(shape: &MeshShape) -> Result<Mesh> {
    match *shape {
        MeshShape::Square { n } => rectangle(n, n, 1.0, 1.0),
        MeshShape::Rectangle { nx, ny, lx, ly } => rectangle(nx, ny, lx, ly),
        MeshShape::DiskPolygon { n_r, n_theta } => disk_polygon(n_r, n_theta),
    }
}

fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return invalid("rectangle needs at least one cell per direction");
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return invalid(format!("rectangle sides {lx} × {ly} must be positive"));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    let mut edge = |a, b, label: &str| boundary_edges.push(BoundaryEdge { a, b, label: label.to_string() });
    for i in 0..nx {
        edge(id(i, 0), id(i + 1, 0), "bottom");
    }
    for j in 0..ny {
        edge(id(nx, j), id(nx, j + 1), "right");
    }
    for i in (0..nx).rev() {
        edge(id(i + 1, ny), id(i, ny), "top");
    }
    for j in (0..ny).rev() {
        edge(id(0, j + 1), id(0, j), "left");
    }
    Mesh::new(vertices, triangles, boundary_edges)
}

fn disk_polygon(n_r: usize, n_theta: usize) -> Result<Mesh> {
    if n_r == 0 || n_theta < 3 {
        return invalid(format!("disk polygon needs n_r ≥ 1 and n_theta ≥ 3, got {n_r}, {n_theta}"));
    }
    let ring = |k: usize, j: usize| 1 + (k - 1) * n_theta + j % n_theta;
    let mut vertices = vec![[0.0, 0.0]];
    for k in 1..=n_r {
        let r = k as f64 / n_r as f64;
        for j in 0..n_theta {
            let t = 2.0 * PI * j as f64 / n_theta as f64;
            vertices.push([r * t.cos(), r * t.sin()]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n_theta {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..n_r {
        for j in 0..n_theta {
            let (a, b, c, d) = (ring(k, j), ring(k + 1, j), ring(k + 1, j + 1), ring(k, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let boundary_edges = (0..n_theta)
        .map(|j| BoundaryEdge { a: ring(n_r, j), b: ring(n_r, j + 1), label: "circle".to_string() })
        .collect();
    Mesh::new(vertices, triangles, boundary_edges)
}

impl Mesh {
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, boundary_edges: Vec<BoundaryEdge>) -> Result<Self> {
        let mesh = Self { vertices, triangles, boundary_edges };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return invalid("mesh has no triangles");
        }
        if let Some(v) = self.vertices.iter().find(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return invalid(format!("non-finite vertex {v:?}"));
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return invalid(format!("triangle {t} references a missing vertex"));
            }
            let area = self.signed_area(t);
            if !(area > MIN_AREA) {
                return invalid(format!("triangle {t} has signed area {area:e} (needs positive orientation, > {MIN_AREA:e})"));
            }
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, _)) = edge_count.iter().find(|(_, &n)| n > 2) {
            return invalid(format!("edge {e:?} is shared by more than two triangles"));
        }
        let free = edge_count.values().filter(|&&n| n == 1).count();
        let mut degree = vec![0usize; nv];
        let mut seen = HashMap::new();
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if edge_count.get(&key) != Some(&1) {
                return invalid(format!("boundary edge {k} ({}, {}) does not belong to exactly one triangle", e.a, e.b));
            }
            if seen.insert(key, k).is_some() {
                return invalid(format!("boundary edge {k} is listed twice"));
            }
            if e.label.is_empty() || e.label.chars().any(char::is_whitespace) {
                return invalid(format!("boundary edge {k} has an empty or blank-containing label"));
            }
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        if seen.len() != free {
            return invalid(format!("{free} free triangle edges but {} boundary edges", seen.len()));
        }
        if degree.iter().any(|&d| d != 0 && d != 2) {
            return invalid("boundary edges do not form closed loops");
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.boundary_edges.iter().map(|e| e.label.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, FILE_HEADER)) => {}
            Some((n, l)) => return invalid(format!("line {n}: expected header '{FILE_HEADER}', found '{l}'")),
            None => return invalid("empty mesh file"),
        }
        let (count_line, count) = match lines.next() {
            Some((n, l)) => (n, l.parse::<usize>().map_err(|_| bad_line(n, "vertex count"))?),
            None => return invalid("mesh file ends before the vertex count"),
        };
        let (mut vertices, mut triangles, mut edges) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["v", x, y] => vertices.push([num(n, x)?, num(n, y)?]),
                ["t", i, j, k] => triangles.push([idx(n, i)?, idx(n, j)?, idx(n, k)?]),
                ["b", i, j, label] => edges.push(BoundaryEdge { a: idx(n, i)?, b: idx(n, j)?, label: label.to_string() }),
                _ => return Err(bad_line(n, "'v x y', 't i j k' or 'b i j label'")),
            }
        }
        if vertices.len() != count {
            return invalid(format!("line {count_line}: declared {count} vertices, found {}", vertices.len()));
        }
        Self::new(vertices, triangles, edges)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{FILE_HEADER}\n{}\n", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "v {:?} {:?}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "b {} {} {}", e.a, e.b, e.label);
        }
        s
    }
}

fn bad_line(n: usize, what: &str) -> crate::Error {
    crate::Error::InvalidInput(format!("line {n}: malformed mesh line, expected {what}"))
}

fn num(n: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad_line(n, "a number"))
}

fn idx(n: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad_line(n, "a vertex index"))
}
