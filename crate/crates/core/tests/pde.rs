use dgpenalty::linalg;
use dgpenalty::pde::{normal_flux_data, recommend_tau, FluxConfig, FluxKind, HyperbolicSystem, SystemKind};
use dgpenalty::Error;
use faer::Mat;
use proptest::prelude::*;

fn max_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    linalg::max_abs((a - b).as_ref())
}

fn systems() -> Vec<HyperbolicSystem> {
    vec![
        HyperbolicSystem::advection_1d(1.0),
        HyperbolicSystem::advection_1d(-2.5),
        HyperbolicSystem::advection_2d([1.0, 0.5]),
        HyperbolicSystem::acoustics_1d(),
        HyperbolicSystem::acoustics_2d(),
    ]
}

fn unit(theta: f64, dim: usize) -> [f64; 2] {
    if dim == 1 {
        [if theta.cos() >= 0.0 { 1.0 } else { -1.0 }, 0.0]
    } else {
        [theta.cos(), theta.sin()]
    }
}

#[test]
fn acoustic_normal_matrix_has_eigenvalues_minus_one_zero_one() {
    let d = normal_flux_data(&HyperbolicSystem::acoustics_2d(), [1.0, 0.0], FluxConfig::central()).unwrap();
    let mut ev = d.eigenvalues.clone();
    ev.sort_by(f64::total_cmp);
    for (a, b) in ev.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn acoustic_penalty_acts_on_pressure_and_normal_velocity() {
    let tau = 0.7;
    let n = [0.6, 0.8];
    let d = normal_flux_data(&HyperbolicSystem::acoustics_2d(), n, FluxConfig::penalty(tau).unwrap()).unwrap();
    let jump = [0.3, -1.1, 2.0];
    let got = linalg::mat_vec(d.penalization.as_ref(), &jump);
    let un = jump[1] * n[0] + jump[2] * n[1];
    let want = [0.5 * tau * jump[0], 0.5 * tau * un * n[0], 0.5 * tau * un * n[1]];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-14);
    }
}

#[test]
fn unit_advection_penalty_is_upwind() {
    let sys = HyperbolicSystem::advection_1d(1.0);
    for n in [[1.0, 0.0], [-1.0, 0.0]] {
        let p = normal_flux_data(&sys, n, FluxConfig::penalty(1.0).unwrap()).unwrap();
        let u = normal_flux_data(&sys, n, FluxConfig::upwind()).unwrap();
        assert!(max_diff(&p.penalization, &u.penalization) < 1e-15);
        assert!((p.penalization[(0, 0)] - 0.5).abs() < 1e-15);
    }
}

#[test]
fn recommended_tau_values() {
    for theta in [0.0, 0.3, 1.7, 4.0] {
        let t = recommend_tau(&HyperbolicSystem::acoustics_2d(), unit(theta, 2)).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
    let t = recommend_tau(&HyperbolicSystem::advection_1d(2.0), [1.0, 0.0]).unwrap();
    assert!((t - 0.5).abs() < 1e-15);
    let t = recommend_tau(&HyperbolicSystem::advection_2d([1.0, 0.0]), [1.0, 0.0]).unwrap();
    assert!((t - 1.0).abs() < 1e-15);
    assert!(matches!(
        recommend_tau(&HyperbolicSystem::advection_2d([1.0, 0.0]), [0.0, 1.0]),
        Err(Error::DegenerateNormal { .. })
    ));
}

#[test]
fn identifiers_parse() {
    for (s, k) in [
        ("advection1d", SystemKind::Advection1d),
        ("advection2d", SystemKind::Advection2d),
        ("acoustics1d", SystemKind::Acoustics1d),
        ("acoustics2d", SystemKind::Acoustics2d),
    ] {
        assert_eq!(s.parse::<SystemKind>().unwrap(), k);
        assert_eq!(k.id(), s);
    }
    for (s, k) in [
        ("central", FluxKind::Central),
        ("penalty", FluxKind::Penalty),
        ("upwind", FluxKind::Upwind),
        ("lf", FluxKind::LaxFriedrichs),
    ] {
        assert_eq!(s.parse::<FluxKind>().unwrap(), k);
    }
    assert!("burgers".parse::<SystemKind>().is_err());
}

#[test]
fn non_unit_normals_are_rejected() {
    assert!(normal_flux_data(&HyperbolicSystem::acoustics_2d(), [1.0, 1.0], FluxConfig::upwind()).is_err());
}

proptest! {
    #[test]
    fn flux_matrix_invariants(theta in 0.0f64..6.3, tau in 0.0f64..10.0, which in 0usize..5) {
        let sys = &systems()[which];
        let n = unit(theta, sys.dim);
        for a in &sys.coeff_matrices {
            prop_assert_eq!(linalg::symmetry_defect(a.as_ref()), 0.0);
        }
        let d = normal_flux_data(sys, n, FluxConfig::penalty(tau).unwrap()).unwrap();
        // A+ + A- = A_n and A+ - A- = |A_n|.
        prop_assert!(max_diff(&(&d.a_plus + &d.a_minus), &d.a_n) < 1e-12);
        prop_assert!(max_diff(&(&d.a_plus - &d.a_minus), &d.abs_a_n) < 1e-12);
        // Penalization is symmetric PSD with the null space of A_n.
        prop_assert!(linalg::symmetry_defect(d.penalization.as_ref()) < 1e-14);
        let ev = linalg::symmetric_eigenvalues(d.unit_penalization.as_ref()).unwrap();
        prop_assert!(ev.iter().all(|&l| l > -1e-14));
        let rank = |m: &Mat<f64>| linalg::singular_values(m.as_ref()).unwrap().iter().filter(|&&s| s > 1e-10).count();
        prop_assert_eq!(rank(&d.unit_penalization), rank(&d.a_n));
        let up = normal_flux_data(sys, n, FluxConfig::upwind()).unwrap();
        let up_ev = linalg::symmetric_eigenvalues(up.penalization.as_ref()).unwrap();
        prop_assert!(up_ev.iter().all(|&l| l > -1e-14));
        // tau = 0 reduces to the central flux.
        let zero = normal_flux_data(sys, n, FluxConfig::penalty(0.0).unwrap()).unwrap();
        prop_assert_eq!(linalg::max_abs(zero.penalization.as_ref()), 0.0);
    }
}
