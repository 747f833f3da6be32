use dgpenalty::assembly::ProblemConfig;
use dgpenalty::linalg;
use dgpenalty::pde::SystemKind;
use dgpenalty::spectral::compute_spectrum;
use dgpenalty::timedomain::{dissipation_rate, integrate, IntegrateOptions};
use dgpenalty::Error;
use faer::c64;

#[test]
fn energy_decays_monotonically_with_penalty() {
    for system in [SystemKind::Acoustics1d, SystemKind::Acoustics2d, SystemKind::Advection2d] {
        let mut c = ProblemConfig::new(system, 2);
        c.nx = 2;
        c.ny = 2;
        let op = c.penalty(1.0).unwrap();
        let u0 = op.interpolate(|x| vec![(-4.0 * (x[0] * x[0] + x[1] * x[1])).exp(); 3]);
        let opts = IntegrateOptions {
            growth_tol: 0.0,
            ..IntegrateOptions::default()
        };
        let rho = dgpenalty::timedomain::operator_spectral_radius(&op).unwrap();
        let tr = integrate(&op, &u0, 0.4 / rho, 200, &opts).unwrap();
        assert!(tr.energies.windows(2).all(|w| w[1] <= w[0]), "{system}");
        assert!(tr.energies[200] < tr.energies[0]);
    }
}

#[test]
fn discrete_energy_loss_matches_face_dissipation() {
    let op = ProblemConfig::new(SystemKind::Acoustics1d, 3).penalty(2.0).unwrap();
    let u0 = op.interpolate(|x| vec![(-10.0 * x[0] * x[0]).exp(), 0.0]);
    let dt = 1e-3;
    let tr = integrate(&op, &u0, dt, 500, &IntegrateOptions::default()).unwrap();
    let mut u = u0.clone();
    let mut dissipated = 0.0;
    let mut prev = dissipation_rate(&op, &u);
    for _ in 0..500 {
        u = dgpenalty::timedomain::rk4_step(&op, &u, dt).unwrap();
        let d = dissipation_rate(&op, &u);
        dissipated += 0.5 * dt * (prev + d);
        prev = d;
    }
    let lost = tr.energies[0] - tr.energies[500];
    assert!((lost - dissipated).abs() < 1e-4 * lost);
}

#[test]
fn eigenmode_evolves_as_its_exponential() {
    let mut c = ProblemConfig::new(SystemKind::Advection1d, 3);
    c.elements = 4;
    let op = c.penalty(1.0).unwrap();
    let spec = compute_spectrum(&op).unwrap();
    // A damped complex eigenpair: u(t) = Re(w e^{lambda t}).
    let j = (0..spec.len()).find(|&j| spec.eigenvalues[j].im > 1.0 && spec.eigenvalues[j].re < -0.5).unwrap();
    let lam = spec.eigenvalues[j];
    let w = spec.eigenvector(j);
    let u0: Vec<f64> = w.iter().map(|z| z.re).collect();
    let (dt, steps) = (1e-3, 400);
    let tr = integrate(&op, &u0, dt, steps, &IntegrateOptions::default()).unwrap();
    let g = (lam * c64::new(dt * steps as f64, 0.0)).exp();
    let exact: Vec<f64> = w.iter().map(|z| (z * g).re).collect();
    let err: Vec<f64> = exact.iter().zip(&tr.final_state).map(|(a, b)| a - b).collect();
    assert!(linalg::norm(&err) < 1e-8 * linalg::norm(&exact));
}

#[test]
fn growing_energy_is_reported() {
    let mut op = ProblemConfig::new(SystemKind::Advection1d, 2).penalty(1.0).unwrap();
    // Reverse the dissipation: -K^T has the same skew part and an anti-dissipative symmetric part.
    let n = op.n_dofs();
    op.k_matrix = faer::Mat::from_fn(n, n, |i, j| -op.k_matrix[(j, i)]);
    let u0 = op.interpolate(|x| vec![if x[0] < 0.0 { 1.0 } else { -1.0 }]);
    let r = integrate(&op, &u0, 1e-3, 100, &IntegrateOptions::default());
    assert!(matches!(r, Err(Error::Unstable { .. })));
}

#[test]
fn mismatched_state_is_rejected() {
    let op = ProblemConfig::new(SystemKind::Advection1d, 2).penalty(1.0).unwrap();
    assert!(matches!(
        integrate(&op, &[1.0], 1e-3, 1, &IntegrateOptions::default()),
        Err(Error::DimensionMismatch(_))
    ));
}
