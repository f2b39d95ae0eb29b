use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::spectrum::QUOTIENT_ARTIFACT;

fn square(n: usize) -> Mesh {
    build_mesh(&MeshShape::Square { n }).unwrap()
}

fn unit(mesh: &Mesh, zeta: C64) -> QepMatrices {
    assemble(mesh, &MaterialCoefficients::unit(), &BoundaryImpedance::constant(zeta)).unwrap()
}

fn random_state(n: usize, seed: u64) -> MarchState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
    MarchState { u: v(), p: v() }
}

#[test]
fn single_triangle_stiffness() {
    let pts = [[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]];
    let e = |a, b| BoundaryEdge { a, b, label: "s".into() };
    let mesh = Mesh::new(pts.to_vec(), vec![[0, 1, 2]], vec![e(0, 1), e(1, 2), e(2, 0)]).unwrap();
    let q = unit(&mesh, c(0.0, 0.0));
    let area = 1.5;
    // K_ij = (e_i · e_j) / 4A with e_i the edge opposite vertex i
    let edge = |i: usize| {
        let (a, b) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
        [b[0] - a[0], b[1] - a[1]]
    };
    for i in 0..3 {
        for j in 0..3 {
            let (ei, ej) = (edge(i), edge(j));
            let expect = (ei[0] * ej[0] + ei[1] * ej[1]) / (4.0 * area);
            assert!((q.k_stiff[(i, j)].re - expect).abs() < 1e-14);
        }
    }
    let total: f64 = q.m_mass.to_row_major().iter().map(|z| z.re).sum();
    assert!((total - area).abs() < 1e-14);
}

#[test]
fn neumann_square_structure() {
    let q = unit(&square(4), c(0.0, 0.0));
    assert!(q.undamped);
    assert_eq!(q.c_bdry.max_abs(), 0.0);
    let d = q.diagnostics().unwrap();
    assert!(d.constant_kernel_residual < 1e-14);
    assert_eq!(d.stiffness_kernel_dim, 1);
    assert!(d.stiffness_hermitian_defect == 0.0 && d.mass_min_eig > 0.0);
}

#[test]
fn imaginary_impedance_is_antihermitian() {
    let q = unit(&square(5), c(0.0, 1.0));
    assert!(q.c_bdry.hermitian_part().max_abs() < 1e-12);
    let q = unit(&square(5), c(0.7, 0.3));
    assert!(q.diagnostics().unwrap().damping_hermitian_min_eig > -1e-12);
    // ∫_∂Ω ζ = 𝟙*C𝟙 = 4ζ on the unit square
    let total: C64 = q.c_bdry.to_row_major().iter().sum();
    assert!((total - c(2.8, 1.2)).norm() < 1e-13);
}

#[test]
fn angular_constant_matches_constant() {
    let mesh = build_mesh(&MeshShape::DiskPolygon { n_r: 3, n_theta: 12 }).unwrap();
    let z = c(0.4, -0.2);
    let a = unit(&mesh, z);
    let ang = EdgeImpedance::Angular(ImpedanceCoefficient::constant(z));
    let b = assemble(&mesh, &MaterialCoefficients::unit(), &BoundaryImpedance::uniform(ang)).unwrap();
    assert!(a.c_bdry.max_abs_diff(&b.c_bdry) < 1e-15);
}

#[test]
fn invalid_inputs() {
    let mesh = square(2);
    let none = BoundaryImpedance::default().with_label("top", EdgeImpedance::Constant(c(1.0, 0.0)));
    assert!(assemble(&mesh, &MaterialCoefficients::unit(), &none).is_err());
    let bad = MaterialCoefficients::constant([1.0, 2.0, 1.0], 1.0);
    assert!(assemble(&mesh, &bad, &BoundaryImpedance::constant(c(0.0, 0.0))).is_err());
    let bad = MaterialCoefficients { alpha_inv: vec![[1.0, 0.0, 1.0]; 3], beta: vec![1.0] };
    assert!(assemble(&mesh, &bad, &BoundaryImpedance::constant(c(0.0, 0.0))).is_err());
}

#[test]
fn neumann_spectrum_symmetric_and_close_to_pi() {
    let q = unit(&square(12), c(0.0, 0.0));
    let r = solve_qep(&q, 9).unwrap();
    assert_eq!(r.entries[0].mode_tag, ZERO_MODE);
    let eig = r.eigenvalues();
    assert!(r.max_abs_imag() == 0.0);
    for z in &eig {
        assert!(eig.iter().any(|w| (w + z).norm() < 1e-9 * (1.0 + z.norm())));
    }
    let first = eig.iter().filter(|z| z.re > 1e-6).map(|z| z.re).fold(f64::INFINITY, f64::min);
    assert!((first - PI).abs() / PI < 0.02, "{first}");
    assert!(r.max_residual() <= QEP_RESIDUAL_TOL);
}

#[test]
fn dissipative_enclosure_and_artifact() {
    let q = unit(&square(6), c(1.0, 0.0));
    let r = solve_qep(&q, 6).unwrap();
    assert!(r.max_imag() <= 1e-8, "{}", r.max_imag());
    assert_eq!(r.entries.iter().filter(|e| e.mode_tag == QUOTIENT_ARTIFACT).count(), 1);
    assert_eq!(r.entries.iter().filter(|e| !e.is_artifact()).count(), 6);
    assert_eq!(r.eigenvalues().len(), 2 * q.dim() - 1);
    assert!(r.max_residual() <= QEP_RESIDUAL_TOL);
}

#[test]
fn skew_impedance_gives_real_spectrum() {
    let r = solve_qep(&unit(&square(6), c(0.0, 0.5)), 4).unwrap();
    assert!(r.max_abs_imag() < 1e-8, "{}", r.max_abs_imag());
}

#[test]
fn general_complex_impedance_uses_complex_companion() {
    let zeta = BoundaryImpedance::constant(c(0.5, 0.5)).with_label("left", EdgeImpedance::Constant(c(0.0, 0.0)));
    let q = assemble(&square(5), &MaterialCoefficients::unit(), &zeta).unwrap();
    let r = solve_qep(&q, 5).unwrap();
    assert!(r.max_imag() <= 1e-8);
    assert!(r.max_residual() <= QEP_RESIDUAL_TOL);
}

#[test]
fn non_accretive_leaves_enclosure() {
    let r = solve_qep(&unit(&square(4), c(-1.0, 0.0)), 4).unwrap();
    assert!(r.max_imag() > 1e-3);
}

#[test]
fn march_conserves_without_damping() {
    let q = unit(&square(6), c(0.0, 0.0));
    let t = cn_energy_march(&q, &random_state(q.dim(), 3), 1e-3, 500).unwrap();
    assert!(t.relative_drift() < 1e-10, "{}", t.relative_drift());
    let q = unit(&square(6), c(0.0, 2.0));
    let t = cn_energy_march(&q, &random_state(q.dim(), 4), 1e-2, 200).unwrap();
    assert!(t.relative_drift() < 1e-10);
}

#[test]
fn march_decays_with_damping_on_one_edge() {
    let zeta = BoundaryImpedance::constant(c(0.0, 0.0)).with_label("bottom", EdgeImpedance::Constant(c(1.0, 0.0)));
    let q = assemble(&square(6), &MaterialCoefficients::unit(), &zeta).unwrap();
    let t = cn_energy_march(&q, &random_state(q.dim(), 5), 1e-3, 400).unwrap();
    assert!(t.max_relative_increase() <= 1e-12);
    assert!(t.energies.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn march_zero_state_and_gauge() {
    let q = unit(&square(4), c(1.0, 0.0));
    let t = cn_energy_march(&q, &MarchState::zeros(q.dim()), 1e-2, 20).unwrap();
    assert!(t.energies.iter().all(|e| *e == 0.0));
    let s = random_state(q.dim(), 6);
    let mut shifted = s.clone();
    shifted.u.iter_mut().for_each(|z| *z += c(3.0, -1.0));
    let a = cn_energy_march(&q, &s, 1e-2, 20).unwrap();
    let b = cn_energy_march(&q, &shifted, 1e-2, 20).unwrap();
    for (x, y) in a.energies.iter().zip(&b.energies) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
    assert!(cn_energy_march(&q, &s, 0.0, 1).is_err());
    assert_eq!(a.to_csv().lines().count(), 22);
}

#[test]
fn rectangle_reference_multiplicities() {
    let r = neumann_rectangle_reference(1.0, 1.0, 3);
    assert!((r.entries[0].lambda.re - PI).abs() < 1e-15);
    assert_eq!(r.entries[0].multiplicity, 2);
    assert_eq!(r.entries[1].multiplicity, 1);
    assert!((r.entries[1].lambda.re - PI * 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn square_errors_decrease() {
    let reference = neumann_rectangle_reference(1.0, 1.0, 1);
    let shapes: Vec<_> = [4, 8, 16].map(|n| MeshShape::Square { n }).to_vec();
    let t = convergence_study(&shapes, &MaterialCoefficients::unit(), &BoundaryImpedance::constant(c(0.0, 0.0)), &reference)
        .unwrap();
    let tag = &reference.entries[0].mode_tag;
    assert_eq!(tag, "m=0:n=1");
    let e: Vec<f64> = t.errors_for(tag).into_iter().map(Option::unwrap).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    let p = t.order_for(tag).unwrap();
    assert!((1.7..=2.3).contains(&p), "{p}");
    assert!(t.unmatched.is_empty());
    assert_eq!(t.to_csv().lines().count(), 4);
}
