mod common;

use common::{dense_inverse, max_abs};
use dgpenalty::assembly::{DGOperator, ProblemConfig};
use dgpenalty::linalg;
use dgpenalty::mesh::BoundaryCondition;
use dgpenalty::pde::{FluxConfig, SystemKind};
use dgpenalty::refelem::NodeFamily;
use dgpenalty::spectral::compute_spectrum;
use dgpenalty::timedomain::dissipation_rate;
use dgpenalty::Error;
use faer::Mat;
use proptest::prelude::*;

fn small(system: SystemKind, degree: usize) -> ProblemConfig {
    let mut c = ProblemConfig::new(system, degree);
    c.elements = 4;
    c.nx = 2;
    c.ny = 2;
    if system == SystemKind::Advection2d {
        c.beta = Some([1.0, 0.5]);
    }
    c
}

const SYSTEMS: [SystemKind; 4] = [
    SystemKind::Advection1d,
    SystemKind::Acoustics1d,
    SystemKind::Advection2d,
    SystemKind::Acoustics2d,
];

#[test]
fn central_operator_is_skew() {
    for system in SYSTEMS {
        for degree in 1..=4 {
            let op = small(system, degree).assemble(FluxConfig::central()).unwrap();
            let scale = max_abs(&op.k_matrix);
            assert!(linalg::skew_defect(op.k_matrix.as_ref()) <= 1e-14 * scale, "{system} N={degree}");
            assert_eq!(max_abs(&op.k_penalty), 0.0);
            assert_eq!(linalg::symmetry_defect(op.m_matrix.as_ref()), 0.0);
        }
    }
}

#[test]
fn operator_is_affine_in_tau() {
    for system in SYSTEMS {
        let c = small(system, 3);
        let base = c.penalty(0.0).unwrap();
        for tau in [0.0, 1.0, 3.7, 100.0] {
            let direct = c.penalty(tau).unwrap();
            let diff = &direct.k_matrix - &base.k_at(tau);
            assert!(max_abs(&diff) <= 1e-12 * tau.max(1.0), "{system} tau={tau}");
            let swapped = base.with_tau(tau).unwrap();
            assert_eq!(swapped.k_matrix, base.k_at(tau));
        }
    }
}

fn max_sym_eigenvalue(k: &Mat<f64>) -> f64 {
    let n = k.nrows();
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
    *linalg::symmetric_eigenvalues(s.as_ref()).unwrap().last().unwrap()
}

#[test]
fn penalized_operators_are_dissipative() {
    for system in SYSTEMS {
        let c = small(system, 2);
        for flux in [
            FluxConfig::penalty(2.0).unwrap(),
            FluxConfig::upwind(),
            FluxConfig::lax_friedrichs(0.5).unwrap(),
        ] {
            let op = c.assemble(flux).unwrap();
            let top = max_sym_eigenvalue(&op.k_matrix);
            assert!(top <= 1e-12 * max_abs(&op.k_matrix), "{system} {:?}: {top}", flux.kind);
        }
    }
}

#[test]
fn apply_matches_dense_inverse() {
    for system in SYSTEMS {
        let op = small(system, 2).penalty(1.5).unwrap();
        let dense = &dense_inverse(&op.m_matrix) * &op.k_matrix;
        let u: Vec<f64> = (0..op.n_dofs()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let got = op.apply(&u).unwrap();
        let want = linalg::mat_vec(dense.as_ref(), &u);
        let scale = want.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-11 * scale);
        }
    }
}

#[test]
fn mass_integrates_constants() {
    for system in SYSTEMS {
        let op = small(system, 3).penalty(1.0).unwrap();
        let ones = vec![1.0; op.n_dofs()];
        let total = op.energy(&ones);
        let fields = op.dof_map.n_fields as f64;
        assert!((total - fields * op.mesh.domain_measure()).abs() < 1e-12);
    }
}

#[test]
fn constants_are_steady_for_periodic_advection() {
    for system in [SystemKind::Advection1d, SystemKind::Advection2d] {
        let op = small(system, 3).penalty(4.0).unwrap();
        let r = op.apply(&vec![1.0; op.n_dofs()]).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn spectrum_does_not_depend_on_the_node_set() {
    for system in [SystemKind::Acoustics2d, SystemKind::Advection2d, SystemKind::Acoustics1d] {
        let mut a = small(system, 3);
        a.node_family = NodeFamily::Optimized;
        let mut b = a.clone();
        b.node_family = NodeFamily::Equispaced;
        let ea = compute_spectrum(&a.penalty(1.0).unwrap()).unwrap().eigenvalues;
        let eb = compute_spectrum(&b.penalty(1.0).unwrap()).unwrap().eigenvalues;
        let d = common::nearest_pairing_distance(&ea, &eb);
        assert!(d <= 1e-8, "{system}: {d}");
    }
}

#[test]
fn advection_has_no_wall_rule() {
    let mut c = small(SystemKind::Advection1d, 2);
    c.bc = Some(BoundaryCondition::Wall);
    assert!(matches!(c.penalty(1.0), Err(Error::MissingBoundaryRule { .. })));
}

#[test]
fn negative_tau_is_rejected() {
    assert!(matches!(FluxConfig::penalty(-1.0), Err(Error::InvalidArgument(_))));
}

fn energy_rate_identity(op: &DGOperator, u: &[f64]) -> (f64, f64) {
    // dE/dt = 2 u^T K u must equal minus the face dissipation.
    let ku = linalg::mat_vec(op.k_matrix.as_ref(), u);
    (2.0 * linalg::dot(u, &ku), -dissipation_rate(op, u))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_rate_equals_face_dissipation(seed in prop::collection::vec(-1.0f64..1.0, 96), tau in 0.0f64..20.0, which in 0usize..4) {
        let op = small(SYSTEMS[which], 2).penalty(tau).unwrap();
        let u: Vec<f64> = (0..op.n_dofs()).map(|i| seed[i % seed.len()] * (1.0 + (i / seed.len()) as f64)).collect();
        let (rate, faces) = energy_rate_identity(&op, &u);
        prop_assert!((rate - faces).abs() <= 1e-11 * rate.abs().max(1.0));
        prop_assert!(rate <= 1e-11);
    }

    #[test]
    fn dof_map_is_a_bijection(ne in 1usize..6, np in 1usize..11, nf in 1usize..4) {
        let c = dgpenalty::assembly::DofMap { n_elements: ne, n_nodes: np, n_fields: nf };
        let mut seen = vec![false; c.len()];
        for k in 0..ne {
            for a in 0..np {
                for f in 0..nf {
                    let i = c.index(k, a, f);
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                    prop_assert_eq!(c.locate(i), (k, a, f));
                }
            }
        }
    }
}
