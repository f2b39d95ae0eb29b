use std::path::Path;

use impedance_core::fem::{EdgeImpedance, MeshShape};
use impedance_core::linalg::ComplexMatrix;
use impedance_core::sobolev::{CoefficientKind, ImpedanceCoefficient};
use impedance_core::{Error, C64};

type Result<T> = std::result::Result<T, Error>;

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(format!("{what}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(bad(format!("{what}: '{s}' is not finite")));
    }
    Ok(v)
}

/// `re` or `re,im`.
pub fn complex(s: &str) -> Result<C64> {
    match s.split_once(',') {
        Some((re, im)) => Ok(C64::new(number(re, "real part")?, number(im, "imaginary part")?)),
        None => Ok(C64::new(number(s, "value")?, 0.0)),
    }
}

/// Comma-separated, strictly increasing positive integers.
pub fn schedule(s: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad(format!("schedule entry '{t}' is not a count"))))
        .collect::<Result<_>>()?;
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(format!("schedule '{s}' must be strictly increasing positive counts")));
    }
    Ok(v)
}

pub fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(|t| number(t, what)).collect::<Result<_>>()?;
    if v.len() != n {
        return Err(bad(format!("{what} needs {n} comma-separated numbers, got '{s}'")));
    }
    Ok(v)
}

/// Impedance coefficient: `const:re,im`, `power:a=..,c=..[,ci=..]`, `file:path`, or a bare `re[,im]`.
pub fn impedance(s: &str) -> Result<ImpedanceCoefficient> {
    let (kind, rest) = s.split_once(':').unwrap_or(("const", s));
    match kind {
        "const" => Ok(ImpedanceCoefficient::constant(complex(rest)?)),
        "power" => {
            let (mut a, mut cr, mut ci) = (None, 1.0, 0.0);
            for item in rest.split(',') {
                let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("power spec item '{item}' is not key=value")))?;
                match k.trim() {
                    "a" => a = Some(number(v, "a")?),
                    "c" => cr = number(v, "c")?,
                    "ci" => ci = number(v, "ci")?,
                    other => return Err(bad(format!("unknown power spec key '{other}'"))),
                }
            }
            let a = a.ok_or_else(|| bad("power spec needs a=<exponent>"))?;
            ImpedanceCoefficient::power(a, C64::new(cr, ci))
        }
        "file" => impedance_file(Path::new(rest)),
        other => Err(bad(format!("unknown impedance kind '{other}' (const, power, file)"))),
    }
}

/// JSON coefficient, or one sample `re [im]` per line at equispaced angles.
fn impedance_file(path: &Path) -> Result<ImpedanceCoefficient> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let z: ImpedanceCoefficient =
            serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        return ImpedanceCoefficient::new(z.kind, z.accretive_claimed);
    }
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let at = |i: usize| number(f[i], &format!("{} line {}", path.display(), n + 1));
        values.push(match f.len() {
            1 => C64::new(at(0)?, 0.0),
            2 => C64::new(at(0)?, at(1)?),
            _ => return Err(bad(format!("{} line {}: expected 're [im]'", path.display(), n + 1))),
        });
    }
    ImpedanceCoefficient::sampled(values)
}

pub fn edge_impedance(s: &str) -> Result<EdgeImpedance> {
    let z = impedance(s)?;
    Ok(match z.kind {
        CoefficientKind::Constant { value } => EdgeImpedance::Constant(value),
        _ => EdgeImpedance::Angular(z),
    })
}

/// `label=SPEC`.
pub fn labelled_impedance(s: &str) -> Result<(String, EdgeImpedance)> {
    let (label, spec) = s.split_once('=').ok_or_else(|| bad(format!("edge override '{s}' must be label=SPEC")))?;
    Ok((label.to_string(), edge_impedance(spec)?))
}

/// Square matrix of size `n`: `scalar:re[,im]`, `diag:d1,d2,..` (real), or `file:path` (JSON rows of `[re, im]`).
pub fn matrix(s: &str, n: usize) -> Result<ComplexMatrix> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| bad(format!("matrix spec '{s}' needs a kind prefix")))?;
    let m = match kind {
        "scalar" => ComplexMatrix::identity(n).scale(complex(rest)?),
        "diag" => ComplexMatrix::from_real_diag(&numbers(rest, n, "diagonal")?),
        "file" => {
            let text = std::fs::read_to_string(rest)?;
            serde_json::from_str(&text).map_err(|e| bad(format!("{rest}: {e}")))?
        }
        other => return Err(bad(format!("unknown matrix kind '{other}' (scalar, diag, file)"))),
    };
    if m.rows() != n || m.cols() != n {
        return Err(bad(format!("matrix is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
    }
    Ok(m)
}

pub fn shape(name: &str, n: usize, rect: Option<&str>, disk: Option<&str>) -> Result<MeshShape> {
    match name {
        "square" => Ok(MeshShape::Square { n }),
        "rectangle" => {
            let v = numbers(rect.ok_or_else(|| bad("rectangle needs --rect nx,ny,lx,ly"))?, 4, "--rect")?;
            if v[0] < 1.0 || v[1] < 1.0 || v[0].fract() != 0.0 || v[1].fract() != 0.0 {
                return Err(bad("--rect cell counts must be positive integers"));
            }
            Ok(MeshShape::Rectangle { nx: v[0] as usize, ny: v[1] as usize, lx: v[2], ly: v[3] })
        }
        "disk" => {
            let (n_r, n_theta) = match disk {
                Some(d) => {
                    let v = schedule_pair(d)?;
                    (v.0, v.1)
                }
                None => (n, 4 * n),
            };
            Ok(MeshShape::DiskPolygon { n_r, n_theta })
        }
        other => Err(bad(format!("unknown shape '{other}' (square, rectangle, disk, file)"))),
    }
}

fn schedule_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(',').ok_or_else(|| bad("--disk needs n_r,n_theta"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(format!("'{t}' is not a count")));
    Ok((p(a)?, p(b)?))
}
