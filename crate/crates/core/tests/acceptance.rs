//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use impedance_core::boundary::{fixtures, hilbert_accretivity_defect};
use impedance_core::extensions::{
    cayley, cayley_identity_defect, impedance_to_contraction, inverse_cayley, resolvent_difference_rank,
    restrict_extension, BoundaryCondition, ContractionParam,
};
use impedance_core::fem::{
    assemble, build_mesh, cn_energy_march, convergence_study, neumann_rectangle_reference, solve_qep,
    BoundaryImpedance, MarchState, MaterialCoefficients, MeshShape,
};
use impedance_core::linalg::{max_principal_angle, spectral_norm, ComplexMatrix, GramMatrix};
use impedance_core::model_problems::{
    disk_mode_roots, disk_spectrum, string_closed_form, string_cross_check, string_newton_roots, string_spectrum,
    DiskSpec, SearchBox, StringSpec,
};
use impedance_core::sobolev::{compactness_gate, FourierSymbol, GateOperand, ImpedanceCoefficient, Verdict, DEFAULT_SCHEDULE};
use impedance_core::{SpectrumReport, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_accretive(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n);
    let s = random_matrix(rng, n);
    &(&a * &a.adjoint()).scale_real(0.5) + &(&s - &s.adjoint())
}

fn green_identity() -> Outcome {
    let fx = fixtures::by_name("transport-64").map_err(err)?;
    let r = fixtures::green_check(&fx, 100, 7).map_err(err)?;
    let worst = r.max_defect.max(r.triple_max_defect).max(r.dual_max_defect);
    ensure(worst < 1e-8, || format!("max defect {worst:.3e}"))?;
    Ok(format!("max defect {worst:.2e} over 100 pairs"))
}

fn cayley_correspondence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut round, mut ident) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let n = 1 + i % 16;
        let z = random_accretive(&mut rng, n);
        let k = cayley(&z).map_err(err)?;
        round = round.max(inverse_cayley(&k).map_err(err)?.max_abs_diff(&z));
        ident = ident.max(cayley_identity_defect(&z).map_err(err)?);
    }
    ensure(round < 1e-9, || format!("round trip {round:.3e}"))?;
    ensure(ident < 1e-10, || format!("identity defect {ident:.3e}"))?;
    let mut agree = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..9);
        let shift = rng.gen_range(-0.5..1.5);
        let z = &random_matrix(&mut rng, n) + &ComplexMatrix::identity(n).scale_real(shift);
        let Ok(k) = cayley(&z) else { continue };
        let accretive = hilbert_accretivity_defect(&z).map_err(err)? >= -1e-10;
        let contraction = k.is_contraction(&GramMatrix::identity(n), 1e-10).map_err(err)?;
        ensure(accretive == contraction, || format!("accretive = {accretive} but contraction = {contraction}"))?;
        agree += 1;
    }
    Ok(format!("round trip {round:.2e}, identity defect {ident:.2e}, {agree} norm/accretivity agreements"))
}

fn condition_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for fx in fixtures::all().map_err(err)? {
        let t = fx.transform().map_err(err)?;
        let k_dim = fx.tuple.boundary_dim();
        for trial in 0..4 {
            let z = if trial == 0 { ComplexMatrix::identity(k_dim) } else { random_accretive(&mut rng, k_dim) };
            let k = impedance_to_contraction(&z, &fx.tuple, &t).map_err(err)?;
            let ez = restrict_extension(&fx.model, &fx.tuple, &t, &BoundaryCondition::Impedance(z)).map_err(err)?;
            let ek = restrict_extension(&fx.model, &fx.tuple, &t, &BoundaryCondition::Contraction(k)).map_err(err)?;
            worst = worst.max(max_principal_angle(&ez.basis, &ek.basis, &fx.model.gram_x).map_err(err)?);
        }
    }
    ensure(worst < 1e-8, || format!("principal angle {worst:.3e}"))?;
    Ok(format!("max principal angle {worst:.2e} on {} fixtures", fixtures::FIXTURE_NAMES.len()))
}

fn resolvent_rank() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let fx = fixtures::by_name("transport-pair-64").map_err(err)?;
    let t = fx.transform().map_err(err)?;
    let g = GramMatrix::identity(2);
    let k1 = ContractionParam::new(ComplexMatrix::from_real_diag(&[0.3, -0.2]), &g).map_err(err)?;
    let u: Vec<C64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let v: Vec<C64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let outer = ComplexMatrix::from_fn(2, 2, |i, j| u[i] * v[j].conj());
    let outer = outer.scale_real(0.3 / spectral_norm(&outer).map_err(err)?);
    let cases = [
        k1.clone(),
        ContractionParam::new(&k1.k + &outer, &g).map_err(err)?,
        ContractionParam::unchecked(ComplexMatrix::from_real_diag(&[-0.5, 0.9])),
    ];
    let ext = |k: &ContractionParam| {
        restrict_extension(&fx.model, &fx.tuple, &t, &BoundaryCondition::Contraction(k.clone())).map_err(err)
    };
    let e1 = ext(&k1)?;
    let mut seen = Vec::new();
    for z in [c(0.0, 1.0), c(1.0, 2.0)] {
        for k2 in &cases {
            let r = resolvent_difference_rank(&e1, &ext(k2)?, z, &k1, k2).map_err(err)?;
            ensure(!r.violation, || format!("rank {} > {} at z = {z}", r.rank_resolvent_diff, r.rank_k_diff))?;
            seen.push(format!("{}≤{}", r.rank_resolvent_diff, r.rank_k_diff));
        }
    }
    Ok(format!("zero violations ({})", seen.join(" ")))
}

fn multiplier_gate() -> Outcome {
    let mut operands = vec![("ζ≡1".to_string(), GateOperand::Coefficient(ImpedanceCoefficient::constant(c(1.0, 0.0))))];
    for a in [0.3, 0.5, 0.9] {
        let z = ImpedanceCoefficient::power(a, c(1.0, 0.0)).map_err(err)?;
        operands.push((format!("|θ|^-{a}"), GateOperand::Coefficient(z)));
    }
    let mut parts = Vec::new();
    for (name, op) in &operands {
        let r = compactness_gate(op, 0.5, &DEFAULT_SCHEDULE).map_err(err)?;
        ensure(r.verdict == Verdict::Compact, || format!("{name}: verdict {}", r.verdict.as_str()))?;
        parts.push(format!("{name} {:.3}", r.tail_indicator.last().copied().unwrap_or(f64::NAN)));
    }
    let il = compactness_gate(&GateOperand::Symbol(FourierSymbol::i_lambda()), 0.5, &DEFAULT_SCHEDULE).map_err(err)?;
    ensure(il.verdict == Verdict::NonCompact, || format!("iΛ verdict {}", il.verdict.as_str()))?;
    let flat = il.singular_profiles.iter().flatten().all(|s| (s - 1.0).abs() < 1e-12);
    ensure(flat, || "iΛ singular values not all 1".to_string())?;
    Ok(format!("compact: {}; iΛ non-compact", parts.join(", ")))
}

fn string_oracle() -> Outcome {
    let zeta = c(0.5, 0.0);
    let closed = string_closed_form(zeta, 10).map_err(err)?;
    let newton = string_newton_roots(zeta, 10).map_err(err)?;
    let mut worst = 0.0f64;
    for (n, (a, b)) in closed.iter().zip(&newton).enumerate() {
        let exact = c((n as f64 + 0.5) * PI, -0.5 * 3f64.ln());
        worst = worst.max((a - exact).norm()).max((b - exact).norm());
    }
    ensure(worst < 1e-8, || format!("string ζ=1/2 error {worst:.3e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut max_im = f64::NEG_INFINITY;
    for _ in 0..50 {
        let z = C64::from_polar(rng.gen_range(0.0..3.0), rng.gen_range(-PI / 2.0..PI / 2.0));
        let r = string_spectrum(&StringSpec { zeta: z, n_modes: 10 }).map_err(err)?;
        max_im = max_im.max(r.max_imag());
        let gap = string_cross_check(z, 10).map_err(err)?;
        ensure(gap < 1e-8, || format!("closed form vs root finder {gap:.3e} at ζ = {z}"))?;
    }
    ensure(max_im <= 0.0, || format!("max Im λ = {max_im:.3e}"))?;
    Ok(format!("ζ=1/2 error {worst:.2e}; max Im λ over 50 accretive ζ: {max_im:.3e}"))
}

fn disk_oracle() -> Outcome {
    let bx = SearchBox::new(0.0, 20.0, -5.0, 0.0).map_err(err)?;
    let first = disk_mode_roots(0, c(0.0, 0.0), &bx).map_err(err)?.roots[0];
    ensure((first - c(3.831706, 0.0)).norm() < 1e-6, || format!("first ζ=0 root {first}"))?;
    let mut total = 0;
    for zeta in [c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.3)] {
        for m in 0..=8 {
            let r = disk_mode_roots(m, zeta, &bx).map_err(err)?;
            ensure(r.contour_count == r.roots.len(), || format!("m={m}, ζ={zeta}: count mismatch"))?;
            total += r.roots.len();
        }
        let r = disk_spectrum(&DiskSpec { zeta, m_max: 8, search_box: bx }).map_err(err)?;
        if zeta.re > 0.0 {
            ensure(r.eigenvalues().iter().all(|z| z.im < 0.0), || format!("ζ={zeta}: root with Im λ ≥ 0"))?;
        } else {
            ensure(r.max_abs_imag() < 1e-8, || format!("ζ=0.3i: |Im λ| up to {:.3e}", r.max_abs_imag()))?;
        }
    }
    Ok(format!("first root {:.9}, {total} roots with matching contour counts", first.re))
}

fn unit_square(n: usize, zeta: C64) -> Result<impedance_core::fem::QepMatrices, String> {
    let mesh = build_mesh(&MeshShape::Square { n }).map_err(err)?;
    assemble(&mesh, &MaterialCoefficients::unit(), &BoundaryImpedance::constant(zeta)).map_err(err)
}

fn fem_enclosure() -> Outcome {
    let damped = solve_qep(&unit_square(32, c(1.0, 0.0))?, 10).map_err(err)?;
    let max_im = damped.max_imag();
    ensure(max_im <= 1e-8, || format!("ζ=1: max Im λ = {max_im:.3e}"))?;
    let skew = solve_qep(&unit_square(32, c(0.0, 0.5))?, 10).map_err(err)?;
    let abs_im = skew.max_abs_imag();
    ensure(abs_im <= 1e-8, || format!("ζ=0.5i: max |Im λ| = {abs_im:.3e}"))?;
    Ok(format!("ζ=1 max Im λ {max_im:.2e}; ζ=0.5i max |Im λ| {abs_im:.2e}"))
}

fn first_reference(r: &SpectrumReport) -> SpectrumReport {
    let mut e = r.entries.clone();
    e.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
    e.truncate(1);
    SpectrumReport::new(e)
}

fn fem_convergence() -> Outcome {
    let unit = MaterialCoefficients::unit();
    let neumann = BoundaryImpedance::constant(c(0.0, 0.0));
    let squares: Vec<MeshShape> = [8, 16, 32].map(|n| MeshShape::Square { n }).to_vec();
    let reference = neumann_rectangle_reference(1.0, 1.0, 1);
    let tag = reference.entries[0].mode_tag.clone();
    let t = convergence_study(&squares, &unit, &neumann, &reference).map_err(err)?;
    let errs = t.errors_for(&tag);
    let fine = errs.last().copied().flatten().ok_or("π unmatched at h = 1/32")? / PI;
    let order = t.order_for(&tag).ok_or("no observed order")?;
    ensure(fine < 0.01, || format!("square relative error {fine:.3e}"))?;
    ensure((1.7..=2.3).contains(&order), || format!("observed order {order:.3}"))?;

    let disks: Vec<MeshShape> = [(4, 16), (8, 32), (16, 64)].map(|(n_r, n_theta)| MeshShape::DiskPolygon { n_r, n_theta }).to_vec();
    let bx = SearchBox::new(0.0, 6.0, -3.0, 0.0).map_err(err)?;
    let bessel = disk_mode_roots(0, c(0.0, 0.0), &bx).map_err(err)?.roots[0];
    let ref0 = SpectrumReport::new(vec![impedance_core::SpectrumEntry {
        lambda: bessel,
        residual: 0.0,
        mode_tag: "m=0:k=0".into(),
        multiplicity: 1,
    }]);
    let t0 = convergence_study(&disks, &unit, &neumann, &ref0).map_err(err)?;
    let e0 = t0.errors_for("m=0:k=0").last().copied().flatten().ok_or("disk ζ=0 unmatched")? / bessel.norm();
    ensure(e0 < 0.02, || format!("disk ζ=0 relative error {e0:.3e}"))?;

    let half = c(0.5, 0.0);
    let ref_half = first_reference(&disk_spectrum(&DiskSpec { zeta: half, m_max: 3, search_box: bx }).map_err(err)?);
    let th = convergence_study(&disks, &unit, &BoundaryImpedance::constant(half), &ref_half).map_err(err)?;
    let r = &ref_half.entries[0];
    let eh = th.errors_for(&r.mode_tag).last().copied().flatten().ok_or("disk ζ=1/2 unmatched")? / r.lambda.norm();
    ensure(eh < 0.05, || format!("disk ζ=1/2 relative error {eh:.3e}"))?;
    Ok(format!(
        "square rel. error {fine:.2e}, order {order:.2}; disk ζ=0 {e0:.2e}; disk ζ=1/2 ({}, λ={:.4}{:+.4}i) {eh:.2e}",
        r.mode_tag, r.lambda.re, r.lambda.im
    ))
}

fn contraction_semigroup() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut state = |n: usize| {
        let mut v = || (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
        MarchState { u: v(), p: v() }
    };
    let q0 = unit_square(16, c(0.0, 0.0))?;
    let t0 = cn_energy_march(&q0, &state(q0.dim()), 1e-3, 2000).map_err(err)?;
    let drift = t0.relative_drift();
    ensure(drift < 1e-10, || format!("ζ=0 energy drift {drift:.3e}"))?;
    let q1 = unit_square(16, c(1.0, 0.0))?;
    let t1 = cn_energy_march(&q1, &state(q1.dim()), 1e-3, 2000).map_err(err)?;
    let inc = t1.max_relative_increase();
    ensure(inc <= 1e-12, || format!("ζ=1 energy increased by {inc:.3e}"))?;
    let ratio = t1.energies.last().unwrap() / t1.energies[0];
    Ok(format!("ζ=0 drift {drift:.2e}; ζ=1 max step increase {inc:.2e}, E_N/E_0 = {ratio:.4}"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("green identity", green_identity, Duration::from_secs(1)),
        ("cayley correspondence", cayley_correspondence, Duration::from_secs(5)),
        ("boundary-condition equivalence", condition_equivalence, Duration::from_secs(5)),
        ("resolvent-difference rank", resolvent_rank, Duration::from_secs(60)),
        ("multiplier gate", multiplier_gate, Duration::from_secs(30)),
        ("string oracle", string_oracle, Duration::from_secs(1)),
        ("disk oracle", disk_oracle, Duration::from_secs(30)),
        ("fem enclosure and symmetry", fem_enclosure, Duration::from_secs(60)),
        ("fem convergence", fem_convergence, Duration::from_secs(600)),
        ("contraction semigroup", contraction_semigroup, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {budget:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict} [{:>2}] {name}: {detail} ({:.2}s)", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
