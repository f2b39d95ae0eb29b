#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use impedance_core::boundary::fixtures::{self, Fixture};
use impedance_core::boundary::{accretivity_defect, hilbert_accretivity_defect};
use impedance_core::extensions::{
    cayley, cayley_identity_defect, inverse_cayley, mdissipativity_report, resolvent_difference_rank,
    restrict_extension, BoundaryCondition, ContractionParam,
};
use impedance_core::fem::{
    assemble, build_mesh, cn_energy_march, convergence_study, neumann_rectangle_reference, solve_qep,
    BoundaryImpedance, MarchState, MaterialCoefficients, Mesh, MeshShape,
};
use impedance_core::linalg::{gram_operator_norm, GramMatrix};
use impedance_core::model_problems::{disk_spectrum, string_spectrum, DiskSpec, SearchBox, StringSpec};
use impedance_core::report::{spectrum_csv, to_json, write_atomic};
use impedance_core::sobolev::{compactness_gate, lq_report, CoefficientKind, FourierSymbol, GateOperand};
use impedance_core::{Error, SpectrumReport, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

mod parse;

/// Numerical workbench for impedance boundary conditions and dissipative spectra.
#[derive(Parser)]
#[command(name = "impedance", version)]
struct Cli {
    /// Tolerance of the subcommand's invariant check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file, written atomically. Tables go to CSV with a JSON sidecar.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Green identity defect of a boundary-tuple fixture.
    GreenCheck(GreenArgs),
    /// Extensions of the transport fixtures.
    #[command(subcommand)]
    Extension(ExtensionCmd),
    /// Compactness gate for a multiplier between H^s and H^-s on the circle.
    Gate(GateArgs),
    /// L^q norm of an impedance coefficient against its finite sections.
    Lq(LqArgs),
    /// Damped string spectrum.
    String(StringArgs),
    /// Impedance disk spectrum.
    Disk(DiskArgs),
    /// Finite-element impedance eigenvalues.
    Fem(FemArgs),
    /// Crank-Nicolson energy trace.
    March(MarchArgs),
    /// FEM eigenvalue convergence against analytic references.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct GreenArgs {
    #[arg(long, default_value = "transport-64")]
    fixture: String,
    /// Fixture JSON; overrides --fixture.
    #[arg(long)]
    fixture_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum ExtensionCmd {
    /// Cayley transform of an impedance matrix.
    Cayley {
        /// scalar:re[,im] | diag:d1,.. | file:path
        #[arg(long)]
        z: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// m-dissipativity certificate of an extension.
    Mdiss {
        #[arg(long, default_value = "transport-pair-64")]
        fixture: String,
        /// Impedance matrix spec.
        #[arg(long, conflicts_with = "k")]
        z: Option<String>,
        /// Contraction matrix spec.
        #[arg(long)]
        k: Option<String>,
    },
    /// Rank of a resolvent difference against rank(K2 - K1).
    Rank {
        #[arg(long, default_value = "transport-pair-64")]
        fixture: String,
        #[arg(long)]
        k1: String,
        #[arg(long)]
        k2: String,
        /// Spectral points re,im separated by ';'.
        #[arg(long, default_value = "0,1;1,2")]
        at: String,
    },
}

#[derive(Args)]
struct GateArgs {
    /// Impedance coefficient spec.
    #[arg(long, conflicts_with = "symbol")]
    zeta: Option<String>,
    /// Fourier symbol instead of a coefficient (i-lambda).
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    #[arg(long, default_value = "16,32,64,128")]
    sections: String,
}

#[derive(Args)]
struct LqArgs {
    #[arg(long)]
    zeta: String,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    #[arg(long, default_value = "16,32,64,128")]
    sections: String,
}

#[derive(Args)]
struct StringArgs {
    #[arg(long, default_value = "0.5")]
    zeta: String,
    #[arg(long, default_value_t = 10)]
    modes: usize,
}

#[derive(Args)]
struct DiskArgs {
    #[arg(long, default_value = "0.5")]
    zeta: String,
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    /// re_min,re_max,im_min,im_max
    #[arg(long = "box", default_value = "0,20,-5,0", allow_hyphen_values = true)]
    search_box: String,
}

#[derive(Args)]
struct MeshArgs {
    /// square | rectangle | disk | file
    #[arg(long, default_value = "square")]
    shape: String,
    /// Cells per side (square), rings (disk).
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// nx,ny,lx,ly for rectangles.
    #[arg(long)]
    rect: Option<String>,
    /// n_r,n_theta for disks (default n, 4n).
    #[arg(long)]
    disk: Option<String>,
    /// Mesh file for --shape file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Impedance on every boundary segment.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    zeta: String,
    /// Per-segment override label=SPEC, repeatable.
    #[arg(long = "edge")]
    edges: Vec<String>,
    /// a11,a12,a22 of the inverse stiffness tensor.
    #[arg(long, default_value = "1,0,1")]
    alpha_inv: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Run even when Re ζ < 0 somewhere.
    #[arg(long)]
    allow_nonaccretive: bool,
}

#[derive(Args)]
struct FemArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value_t = 10)]
    nev: usize,
}

#[derive(Args)]
struct MarchArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    /// square | disk
    #[arg(long, default_value = "square")]
    shape: String,
    /// Cells per side (square) or rings (disk, 4 vertices per ring and unit radius).
    #[arg(long, default_value = "8,16,32")]
    levels: String,
    #[arg(long, default_value = "0")]
    zeta: String,
    /// Number of reference eigenvalues.
    #[arg(long, default_value_t = 1)]
    modes: usize,
}

struct Ctx {
    tol: Option<f64>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn write(&self, contents: &str) -> anyhow::Result<()> {
        if let Some(p) = &self.out {
            write_atomic(p, contents)?;
        }
        Ok(())
    }

    /// CSV to `--out`, structured verdict next to it as `.json`.
    fn write_table(&self, csv: &str, sidecar: &serde_json::Value) -> anyhow::Result<()> {
        if let Some(p) = &self.out {
            write_atomic(p, csv)?;
            write_atomic(&sidecar_path(p), &to_json(sidecar)?)?;
        }
        Ok(())
    }
}

fn sidecar_path(p: &Path) -> PathBuf {
    if p.extension().is_some_and(|e| e == "json") {
        p.with_extension("summary.json")
    } else {
        p.with_extension("json")
    }
}

fn violation(msg: String) -> anyhow::Error {
    Error::InvariantViolation(msg).into()
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidInput(msg.into()).into()
}

fn load_fixture(name: &str, file: Option<&Path>) -> anyhow::Result<Fixture> {
    Ok(match file {
        Some(p) => Fixture::from_json(&std::fs::read_to_string(p).with_context(|| p.display().to_string())?)?,
        None => fixtures::by_name(name)?,
    })
}

fn green_check(ctx: &Ctx, a: &GreenArgs) -> anyhow::Result<String> {
    let fx = load_fixture(&a.fixture, a.fixture_file.as_deref())?;
    let r = fixtures::green_check(&fx, a.trials, a.seed)?;
    let tol = ctx.tol(r.tolerance);
    ctx.write(&to_json(&r)?)?;
    let worst = r.max_defect.max(r.triple_max_defect).max(r.dual_max_defect);
    let line = format!("{}: max defect {worst:.1e} over {} pairs", r.label, r.trials);
    if worst > tol {
        return Err(violation(format!("{line} exceeds {tol:e}")));
    }
    Ok(line)
}

fn extension(ctx: &Ctx, cmd: &ExtensionCmd) -> anyhow::Result<String> {
    let tol = ctx.tol(1e-10);
    match cmd {
        ExtensionCmd::Cayley { z, dim } => {
            let z = parse::matrix(z, *dim)?;
            let k = cayley(&z)?;
            let norm = gram_operator_norm(&k.k, &GramMatrix::identity(*dim), &GramMatrix::identity(*dim))?;
            let defect = hilbert_accretivity_defect(&z)?;
            let round = inverse_cayley(&k).map(|b| b.max_abs_diff(&z)).unwrap_or(f64::NAN);
            let ident = cayley_identity_defect(&z)?;
            let (accretive, contraction) = (defect >= -tol, norm <= 1.0 + tol);
            ctx.write(&to_json(&json!({
                "k": k.k, "norm": norm, "accretivity_defect": defect, "accretive": accretive,
                "contraction": contraction, "round_trip_error": round, "identity_defect": ident,
            }))?)?;
            let line = format!("‖K‖ = {norm:.6}, accretivity defect {defect:.3e}, identity defect {ident:.1e}");
            if accretive != contraction {
                return Err(violation(format!("{line}: contraction and accretivity disagree")));
            }
            Ok(line)
        }
        ExtensionCmd::Mdiss { fixture, z, k } => {
            let fx = fixtures::by_name(fixture)?;
            let t = fx.transform()?;
            let n = fx.tuple.boundary_dim();
            let g = fx.tuple.gram_pivot.clone();
            let (bc, admissible) = match (z, k) {
                (Some(z), None) => {
                    let z = parse::matrix(z, n)?;
                    let ok = accretivity_defect(&z, &fx.tuple)? >= -tol;
                    (BoundaryCondition::Impedance(z), ok)
                }
                (None, Some(k)) => {
                    let k = ContractionParam::unchecked(parse::matrix(k, n)?);
                    let ok = k.is_contraction(&g, tol)?;
                    (BoundaryCondition::Contraction(k), ok)
                }
                _ => return Err(invalid("mdiss needs exactly one of --z or --k")),
            };
            let ext = restrict_extension(&fx.model, &fx.tuple, &t, &bc)?;
            let r = mdissipativity_report(&ext)?;
            ctx.write(&to_json(&json!({ "report": r, "admissible": admissible, "notes": ext.notes }))?)?;
            let line = format!(
                "{}: max Im numerical range {:.3e}, admissible condition {admissible}",
                fx.label(),
                r.max_im_numrange
            );
            if admissible && !(r.is_dissipative(tol) && r.resolvent_bounds_hold(tol)) {
                return Err(violation(format!("{line}: dissipativity fails for an admissible condition")));
            }
            Ok(line)
        }
        ExtensionCmd::Rank { fixture, k1, k2, at } => {
            let fx = fixtures::by_name(fixture)?;
            let t = fx.transform()?;
            let n = fx.tuple.boundary_dim();
            let k1 = ContractionParam::unchecked(parse::matrix(k1, n)?);
            let k2 = ContractionParam::unchecked(parse::matrix(k2, n)?);
            let ext = |k: &ContractionParam| {
                restrict_extension(&fx.model, &fx.tuple, &t, &BoundaryCondition::Contraction(k.clone()))
            };
            let (e1, e2) = (ext(&k1)?, ext(&k2)?);
            let reports = at
                .split(';')
                .map(|p| Ok(resolvent_difference_rank(&e1, &e2, parse::complex(p)?, &k1, &k2)?))
                .collect::<anyhow::Result<Vec<_>>>()?;
            ctx.write(&to_json(&reports)?)?;
            let bad = reports.iter().filter(|r| r.violation).count();
            let ranks: Vec<String> = reports.iter().map(|r| format!("{}≤{}", r.rank_resolvent_diff, r.rank_k_diff)).collect();
            let line = format!("rank(R2−R1) vs rank(K2−K1): {}", ranks.join(", "));
            if bad > 0 {
                return Err(violation(format!("{line}: {bad} violations")));
            }
            Ok(line)
        }
    }
}

fn gate(ctx: &Ctx, a: &GateArgs) -> anyhow::Result<String> {
    let tol = ctx.tol(1e-10);
    let op = match (&a.zeta, a.symbol.as_deref()) {
        (Some(z), None) => GateOperand::Coefficient(parse::impedance(z)?),
        (None, Some("i-lambda")) => GateOperand::Symbol(FourierSymbol::i_lambda()),
        (None, Some(other)) => return Err(invalid(format!("unknown symbol '{other}' (i-lambda)"))),
        _ => return Err(invalid("gate needs --zeta or --symbol")),
    };
    let r = compactness_gate(&op, a.s, &parse::schedule(&a.sections)?)?;
    let accretive = r.accretivity_defect.iter().all(|d| *d >= -tol);
    let mut sidecar = serde_json::to_value(&r)?;
    sidecar["accretive"] = json!(accretive);
    ctx.write_table(&r.to_csv(), &sidecar)?;
    let tail = r.tail_indicator.last().copied().unwrap_or(f64::NAN);
    Ok(format!("verdict {} (tail indicator {tail:.3e} at N = {})", r.verdict.as_str(), r.sections.last().unwrap()))
}

fn lq(ctx: &Ctx, a: &LqArgs) -> anyhow::Result<String> {
    let _ = ctx.tol(1e-10);
    let r = lq_report(&parse::impedance(&a.zeta)?, a.q, a.s, &parse::schedule(&a.sections)?)?;
    ctx.write(&to_json(&r)?)?;
    Ok(match r.lq_norm {
        Some(v) => format!("L^{} norm {v:.6e}, theorem applies: {}", a.q, r.theorem_applies),
        None => format!("L^{} norm diverges", a.q),
    })
}

fn constant(spec: &str) -> anyhow::Result<C64> {
    match parse::impedance(spec)?.kind {
        CoefficientKind::Constant { value } => Ok(value),
        _ => Err(invalid("this model needs a constant impedance (const:re,im)")),
    }
}

fn spectrum_output(ctx: &Ctx, r: &SpectrumReport, enclosure_applies: bool, tol: f64) -> anyhow::Result<String> {
    let max_im = r.max_imag();
    ctx.write_table(
        &spectrum_csv(r),
        &json!({
            "eigenvalues": r.entries.len(),
            "max_imag": if max_im.is_finite() { json!(max_im) } else { json!(null) },
            "max_residual": r.max_residual(),
            "flags": r.flags,
            "enclosure_checked": enclosure_applies,
            "tolerance": tol,
        }),
    )?;
    let line = if r.is_empty() {
        format!("no eigenvalues{}", if r.flags.is_empty() { String::new() } else { format!(" ({})", r.flags.join(", ")) })
    } else {
        format!("{} eigenvalues, max Im λ {max_im:.3e}, max residual {:.1e}", r.entries.len(), r.max_residual())
    };
    if enclosure_applies && max_im > tol {
        return Err(violation(format!("{line}: enclosure Im λ ≤ {tol:e} breached")));
    }
    Ok(line)
}

fn string(ctx: &Ctx, a: &StringArgs) -> anyhow::Result<String> {
    let zeta = constant(&a.zeta)?;
    let r = string_spectrum(&StringSpec { zeta, n_modes: a.modes })?;
    spectrum_output(ctx, &r, true, ctx.tol(1e-8))
}

fn disk(ctx: &Ctx, a: &DiskArgs) -> anyhow::Result<String> {
    let zeta = constant(&a.zeta)?;
    let b = parse::numbers(&a.search_box, 4, "--box")?;
    let search_box = SearchBox::new(b[0], b[1], b[2], b[3])?;
    let r = disk_spectrum(&DiskSpec { zeta, m_max: a.m_max, search_box })?;
    spectrum_output(ctx, &r, true, ctx.tol(1e-8))
}

struct Problem {
    mesh: Mesh,
    mat: MaterialCoefficients,
    zeta: BoundaryImpedance,
    accretive: bool,
}

fn problem(a: &MeshArgs) -> anyhow::Result<Problem> {
    let mesh = if a.shape == "file" {
        Mesh::read(a.mesh.as_deref().ok_or_else(|| invalid("--shape file needs --mesh PATH"))?)?
    } else {
        build_mesh(&parse::shape(&a.shape, a.n, a.rect.as_deref(), a.disk.as_deref())?)?
    };
    let al = parse::numbers(&a.alpha_inv, 3, "--alpha-inv")?;
    let mat = MaterialCoefficients::constant([al[0], al[1], al[2]], a.beta);
    let mut zeta = BoundaryImpedance::uniform(parse::edge_impedance(&a.zeta)?);
    for e in &a.edges {
        let (label, z) = parse::labelled_impedance(e)?;
        if !mesh.labels().contains(&label) {
            return Err(invalid(format!("mesh has no boundary segment '{label}'")));
        }
        zeta = zeta.with_label(&label, z);
    }
    let accretive = zeta.accretive_on(&mesh);
    if !accretive && !a.allow_nonaccretive {
        return Err(violation("Re ζ < 0 on the boundary breaches the dissipative enclosure; pass --allow-nonaccretive to run anyway".into()));
    }
    Ok(Problem { mesh, mat, zeta, accretive })
}

fn fem(ctx: &Ctx, a: &FemArgs) -> anyhow::Result<String> {
    let p = problem(&a.mesh)?;
    let q = assemble(&p.mesh, &p.mat, &p.zeta)?;
    let r = solve_qep(&q, a.nev)?;
    let line = spectrum_output(ctx, &r, p.accretive, ctx.tol(1e-8))?;
    Ok(format!("{} dofs: {line}", q.dim()))
}

fn march(ctx: &Ctx, a: &MarchArgs) -> anyhow::Result<String> {
    let p = problem(&a.mesh)?;
    let q = assemble(&p.mesh, &p.mat, &p.zeta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut v = || (0..q.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let state = MarchState { u: v(), p: v() };
    let t = cn_energy_march(&q, &state, a.dt, a.steps)?;
    let tol = ctx.tol(1e-12);
    let (inc, drift) = (t.max_relative_increase(), t.relative_drift());
    let conservative = q.c_bdry.hermitian_part().max_abs() <= 1e-14 * q.c_bdry.max_abs().max(1.0);
    ctx.write_table(
        &t.to_csv(),
        &json!({ "dt": a.dt, "steps": a.steps, "max_relative_increase": inc, "relative_drift": drift, "accretive": p.accretive, "conservative": conservative }),
    )?;
    let last = t.energies.last().unwrap();
    let line = format!("E_N/E_0 = {:.6}, max step increase {inc:.2e}", last / t.energies[0]);
    if p.accretive && inc > tol {
        return Err(violation(format!("{line}: energy grew beyond {tol:e}")));
    }
    if conservative && drift > 1e-10 {
        return Err(violation(format!("{line}: energy drifted {drift:.2e} with Re ζ ≡ 0")));
    }
    Ok(line)
}

fn converge(ctx: &Ctx, a: &ConvergeArgs) -> anyhow::Result<String> {
    let zeta = constant(&a.zeta)?;
    let levels = parse::schedule(&a.levels)?;
    let (shapes, reference): (Vec<MeshShape>, SpectrumReport) = match a.shape.as_str() {
        "square" => {
            if zeta != C64::new(0.0, 0.0) {
                return Err(invalid("the square reference is the Neumann spectrum; use --zeta 0"));
            }
            (levels.iter().map(|&n| MeshShape::Square { n }).collect(), neumann_rectangle_reference(1.0, 1.0, a.modes))
        }
        "disk" => {
            let bx = SearchBox::new(0.0, 8.0, -3.0, 0.0)?;
            let mut r = disk_spectrum(&DiskSpec { zeta, m_max: 4, search_box: bx })?;
            r.entries.sort_by(|x, y| x.lambda.norm().total_cmp(&y.lambda.norm()));
            r.entries.truncate(a.modes);
            (levels.iter().map(|&n| MeshShape::DiskPolygon { n_r: n, n_theta: 4 * n }).collect(), r)
        }
        other => return Err(invalid(format!("unknown convergence shape '{other}' (square, disk)"))),
    };
    let t = convergence_study(&shapes, &MaterialCoefficients::unit(), &BoundaryImpedance::constant(zeta), &reference)?;
    let tol = ctx.tol(0.05);
    let finest: Vec<(String, Option<f64>)> = reference
        .entries
        .iter()
        .map(|e| (e.mode_tag.clone(), t.errors_for(&e.mode_tag).last().copied().flatten().map(|x| x / e.lambda.norm())))
        .collect();
    ctx.write_table(
        &t.to_csv(),
        &json!({ "observed_orders": t.observed_orders, "unmatched": t.unmatched, "finest_relative_errors": finest, "tolerance": tol }),
    )?;
    let (tag, rel) = &finest[0];
    let rel = rel.ok_or_else(|| anyhow!("{tag} unmatched at the finest level"))?;
    let order = t.order_for(tag).map_or("n/a".to_string(), |p| format!("{p:.2}"));
    Ok(format!("{tag}: relative error {rel:.2e} at h = {:.4}, observed order {order}, within tol {}", t.rows.last().unwrap().h, rel <= tol))
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WORKBENCH_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| invalid(format!("WORKBENCH_THREADS = '{v}' is not a positive count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    configure_threads()?;
    if let Some(t) = cli.tol {
        if !(t > 0.0) || !t.is_finite() {
            bail!(invalid(format!("--tol must be positive, got {t}")));
        }
    }
    let ctx = Ctx { tol: cli.tol, out: cli.out.clone() };
    match &cli.command {
        Command::GreenCheck(a) => green_check(&ctx, a),
        Command::Extension(c) => extension(&ctx, c),
        Command::Gate(a) => gate(&ctx, a),
        Command::Lq(a) => lq(&ctx, a),
        Command::String(a) => string(&ctx, a),
        Command::Disk(a) => disk(&ctx, a),
        Command::Fem(a) => fem(&ctx, a),
        Command::March(a) => march(&ctx, a),
        Command::Converge(a) => converge(&ctx, a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::InvariantViolation(_)) => 2,
        Some(Error::InvalidInput(_)) => 3,
        Some(Error::NumericalFailure(_)) | Some(Error::Io(_)) => 4,
        None => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
