//! Property tests for the numerical invariants.

use decaylab::config::RunConfig;
use decaylab::damping::{ConvexInverse, DampingLaw, LawKind};
use decaylab::decay_ode::{
    conjugate_eval, estimate_alpha, k0_window, solve_phi, solve_phi_substep, solve_theta, theta_bound,
    uniform_grid, BoundParams, PhiParams,
};
use decaylab::mesh::{bump_profile, coupling_bound, poincare_constant, CoefficientProfile, Mesh1D, PoincareMode};
use decaylab::verify::{fit_exponent, run_experiment};
use decaylab::wave_sim::{CoupledSystem, SimConfig, WaveState};
use proptest::prelude::*;

fn catalog() -> Vec<DampingLaw> {
    [
        LawKind::Linear,
        LawKind::Polynomial { p: 1.5 },
        LawKind::Polynomial { p: 3.0 },
        LawKind::LogWeakened { p: 0.5 },
        LawKind::LogWeakened { p: 2.0 },
        LawKind::ExpOrigin,
        LawKind::DoubleExpOrigin,
        LawKind::QuadraticTest,
    ]
    .into_iter()
    .map(|k| DampingLaw::new(k).unwrap())
    .collect()
}

fn law_index() -> impl Strategy<Value = usize> {
    0..catalog().len()
}

fn field(n: usize, amp: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-amp..amp, n)
}

/// Mesh size and a random state on it.
fn mesh_and_state(max_n: usize, amp: f64) -> impl Strategy<Value = (usize, WaveState)> {
    (3..max_n).prop_flat_map(move |n| {
        (field(n, amp), field(n, amp), field(n, amp), field(n, amp))
            .prop_map(move |(u, v, p, q)| (n, WaveState { u, v, p, q, t: 0.0 }))
    })
}

/// `a` on `(0.1, 0.4)`, `b` on `(0.5, 0.9)` at fraction `b_frac` of the coupling bound.
fn profiles(mesh: &Mesh1D, a_amp: f64, b_frac: f64, delta: f64) -> (CoefficientProfile, CoefficientProfile) {
    let lambda = poincare_constant(mesh, PoincareMode::Discrete);
    let a = bump_profile(mesh, 0.1, 0.4, a_amp, 0.05).unwrap();
    let b = bump_profile(mesh, 0.5, 0.9, b_frac * coupling_bound(lambda, delta), 0.05).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn coercivity((n, s) in mesh_and_state(60, 5.0), frac in 0.0..=1.0f64, delta in 0.05..0.95f64) {
        let mesh = Mesh1D::new(1.0, n).unwrap();
        let (a, b) = profiles(&mesh, 1.0, frac, delta);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&mesh, &a, &b, &law).unwrap();
        let e = sys.energy(&s).unwrap();
        let q = sys.quadratic_sum(&s).unwrap();
        prop_assert!(e >= 0.5 * delta * q - 1e-12 * q, "E = {e}, Q = {q}");
    }

    #[test]
    fn discrete_poincare(w in (2usize..80).prop_flat_map(|n| field(n, 10.0)), len in 0.5..3.0f64) {
        let mesh = Mesh1D::new(len, w.len()).unwrap();
        let lambda = poincare_constant(&mesh, PoincareMode::Discrete);
        prop_assert!(mesh.norm_sq(&w) <= lambda * lambda * mesh.grad_norm_sq(&w) * (1.0 + 1e-12));
    }

    #[test]
    fn bump_is_nonnegative_and_monotone_on_ramps(
        lo in 0.0..0.5f64, width in 0.0..0.5f64, amp in 0.0..10.0f64, sigma in 0.0..0.3f64, n in 5usize..200,
    ) {
        let mesh = Mesh1D::new(1.0, n).unwrap();
        let hi = lo + width;
        let b = bump_profile(&mesh, lo, hi, amp, sigma).unwrap();
        prop_assert!(b.values.iter().all(|&v| v >= 0.0 && v <= amp));
        let xs = mesh.nodes();
        let mid = 0.5 * (lo + hi);
        for i in 1..n {
            if xs[i] <= mid {
                prop_assert!(b.values[i] >= b.values[i - 1] || xs[i - 1] > hi);
            } else if xs[i - 1] >= mid {
                prop_assert!(b.values[i] <= b.values[i - 1]);
            }
        }
    }

    #[test]
    fn g_is_monotone_and_odd(k in law_index(), s1 in -50.0..50.0f64, ds in 0.0..10.0f64) {
        let law = &catalog()[k];
        let s2 = s1 + ds;
        prop_assert!(law.g(s1) <= law.g(s2));
        prop_assert_eq!(law.g(-s1), -law.g(s1));
    }

    #[test]
    fn growth_bounds(k in law_index(), s in 1.0..100.0f64, t in 1e-6..1.0f64, sign in prop::bool::ANY) {
        let law = &catalog()[k];
        let s = if sign { s } else { -s };
        let gs = law.g(s) * s;
        let tol = 1e-12 * s * s;
        prop_assert!(law.m * s * s <= gs + tol && gs <= law.big_m * s * s + tol);
        prop_assert!(law.g(t) * t <= law.m0 * t * t * (1.0 + 1e-12));
    }

    #[test]
    fn h0_is_concave(k in law_index(), y1 in 0.0..1.0f64, y2 in 0.0..1.0f64) {
        let law = &catalog()[k];
        let mid = law.h0(0.5 * (y1 + y2)).unwrap();
        let avg = 0.5 * (law.h0(y1).unwrap() + law.h0(y2).unwrap());
        prop_assert!(mid >= avg * (1.0 - 1e-12) - 1e-300);
    }

    #[test]
    fn conjugate_is_midpoint_convex(gamma in 0.5..0.95f64, u1 in 0.0..1.0f64, u2 in 0.0..1.0f64) {
        let law = DampingLaw::polynomial_with_gamma(gamma).unwrap();
        let inv = law.h_inverse(1.0).unwrap();
        let top = inv.d1(1.0);
        let (x1, x2) = (u1 * top, u2 * top);
        let f = |x: f64| conjugate_eval(&inv, 1.0, x).unwrap();
        prop_assert!(f(0.5 * (x1 + x2)) <= 0.5 * (f(x1) + f(x2)) + 1e-12);
    }

    #[test]
    fn young_equality(k in law_index(), u in 0.01..1.0f64) {
        let law = &catalog()[k];
        let inv = law.h_inverse(1.0).unwrap();
        let r0 = decaylab::decay_ode::natural_r0(law, 1.0);
        let y = u * r0;
        let x = inv.d1(y);
        prop_assume!(x > 0.0 && x.is_finite());
        let lhs = x * y - inv.value(y);
        let rhs = conjugate_eval(&inv, r0, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn fit_is_exact_on_power_laws(k in -3.0..-0.1f64, c in 0.1..100.0f64, ta in 0.0..50.0f64) {
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        let e: Vec<f64> = times.iter().map(|t| c * (1.0 + t).powf(k)).collect();
        let fitted = fit_exponent(&times, &e, ta, 199.5).unwrap();
        prop_assert!((fitted - k).abs() <= 1e-12, "{fitted} vs {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_identity_and_monotone_energy(
        k in law_index(), (n, s) in mesh_and_state(40, 2.0), a_amp in 0.0..5.0f64, frac in 0.0..1.0f64,
    ) {
        let mesh = Mesh1D::new(1.0, n).unwrap();
        let (a, b) = profiles(&mesh, a_amp, frac, 0.5);
        let law = &catalog()[k];
        let sys = CoupledSystem::new(&mesh, &a, &b, law).unwrap();
        let cfg = SimConfig::for_mesh(&mesh, 1.0);
        let mut state = s;
        for _ in 0..20 {
            let e_old = sys.energy(&state).unwrap();
            let out = sys.step(&state, &cfg).unwrap();
            let e_new = sys.energy(&out.state).unwrap();
            let scale = e_old.max(1.0);
            prop_assert!((e_new - e_old + out.dissipation).abs() <= 10.0 * cfg.newton_tol * scale);
            prop_assert!(e_new <= e_old + 10.0 * cfg.newton_tol * scale);
            state = out.state;
        }
    }

    #[test]
    fn undamped_runs_conserve_and_are_symmetric((n, s) in mesh_and_state(40, 2.0), frac in 0.0..1.0f64) {
        let mesh = Mesh1D::new(1.0, n).unwrap();
        let zero = CoefficientProfile::zero(&mesh);
        let (_, b) = profiles(&mesh, 0.0, frac, 0.5);
        let law = DampingLaw::polynomial(3.0).unwrap();
        let sys = CoupledSystem::new(&mesh, &zero, &b, &law).unwrap();
        let cfg = SimConfig { record_every: 1, ..SimConfig::for_mesh(&mesh, 2.0) };
        let run = sys.simulate(&s, &cfg).unwrap();
        let swapped = sys.simulate(&s.swapped(), &cfg).unwrap();
        let e0 = run.records[0].e_uv.max(1e-300);
        for (r, w) in run.records.iter().zip(&swapped.records) {
            prop_assert!((r.e_uv - e0).abs() <= 1e-9 * e0);
            prop_assert!((r.e_uv - w.e_uv).abs() <= 1e-12 * e0);
        }
        let f = &run.final_state;
        let g = swapped.final_state.swapped();
        let scale = f.u.iter().chain(&f.p).fold(1e-300, |m: f64, x| m.max(x.abs()));
        for (x, y) in f.u.iter().chain(&f.p).zip(g.u.iter().chain(&g.p)) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn theta_stays_below_the_bound(k in law_index(), w in 0.0..=1.0f64, theta0 in 0.2..1.0f64, c in 0.1..2.0f64) {
        let law = &catalog()[k];
        let inv = law.h_inverse(1.0).unwrap();
        let r0 = decaylab::decay_ode::natural_r0(law, 1.0);
        let beta = 2.0;
        let Some(alpha) = estimate_alpha(&inv, r0) else { return Ok(()); };
        let theta0 = theta0 * r0.sqrt();
        let (lo, hi) = k0_window(alpha, beta, c, r0, theta0, &inv);
        // (h^{-1})' underflows to 0 for the flattest laws, leaving no upper end
        prop_assume!(hi.is_finite());
        let bp = BoundParams { alpha, beta, c, k0: lo + w * (hi - lo), r0 };
        let grid = uniform_grid(100.0, 201);
        let th = solve_theta(c, beta, theta0, r0, &inv, &grid).unwrap();
        for (t, v) in grid.iter().zip(&th.values) {
            let b = theta_bound(*t, &bp, &inv).unwrap();
            prop_assert!(*v <= b * (1.0 + 1e-9), "theta({t}) = {v} > {b}");
        }
    }

    #[test]
    fn theta_phi_reciprocal_and_phi_shape(gamma in 0.5..0.95f64, extra in 0.0..1.0f64, c1 in 0.5..4.0f64) {
        // phi is concave once beta (1/gamma - 1) >= 1
        let beta = (gamma / (1.0 - gamma)).max(1.05) * (1.0 + extra);
        let law = DampingLaw::polynomial_with_gamma(gamma).unwrap();
        let inv = law.h_inverse(1.0).unwrap();
        let params = PhiParams { eps0: 1.0, c1, beta, phi0: 1.0, r0: 1.0 };
        let grid = uniform_grid(100.0, 401);
        let phi = solve_phi(&params, &inv, &grid).unwrap();
        let theta = solve_theta(params.rate(), beta, 1.0, 1.0, &inv, &grid).unwrap();
        for (p, t) in phi.values.iter().zip(&theta.values) {
            prop_assert!((p * t - 1.0).abs() <= 1e-7);
        }
        let v = &phi.values;
        for i in 1..v.len() {
            prop_assert!(v[i] >= v[i - 1]);
        }
        for i in 1..v.len() - 1 {
            prop_assert!(v[i + 1] - 2.0 * v[i] + v[i - 1] <= 1e-10 * v[i]);
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let law = DampingLaw::quadratic_test();
    let inv = law.h_inverse(1.0).unwrap();
    let params = PhiParams { eps0: 1.0, c1: 1.0, beta: 2.0, phi0: 1.0, r0: 1.0 };
    let grid = uniform_grid(10.0, 11);
    let err = |h: f64| {
        let traj = solve_phi_substep(&params, &inv, &grid, h).unwrap();
        grid.iter()
            .zip(&traj.values)
            .map(|(t, v)| (v - (1.0 + t).sqrt()).abs())
            .fold(0.0, f64::max)
    };
    for h in [0.5, 0.25, 0.125] {
        let ratio = err(h) / err(h / 2.0);
        assert!(ratio >= 12.0, "h = {h}: ratio {ratio}");
    }
}

fn small_config(law: &str, scale: f64) -> RunConfig {
    RunConfig::from_toml_str(&format!(
        r#"
        [mesh]
        n = 40
        [law]
        kind = "{law}"
        [a]
        x_lo = 0.1
        x_hi = 0.4
        amplitude = 1.0
        smoothing = 0.05
        [b]
        x_lo = 0.5
        x_hi = 0.9
        admissible_fraction = 0.3
        smoothing = 0.05
        [initial.u0]
        modes = [[1, {a}], [2, {b}]]
        [initial.v1]
        modes = [[1, {b}]]
        [sim]
        t_end = 20.0
        [verify]
        t_cal_fraction = 0.25
        margin = 0.1
        "#,
        a = scale,
        b = 0.5 * scale
    ))
    .unwrap()
}

#[test]
fn reports_are_reproducible() {
    let cfg = small_config("polynomial\"\np = 3.0\n#\"", 1.0);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn linear_envelope_is_scale_covariant() {
    let base = run_experiment(&small_config("linear", 1.0)).unwrap();
    let env = base.envelope.as_ref().unwrap();
    for sigma in [1e-3, 0.5, 7.0] {
        let rep = run_experiment(&small_config("linear", sigma)).unwrap();
        let e = rep.envelope.as_ref().unwrap();
        let s2 = sigma * sigma;
        assert!((rep.e0 / base.e0 - s2).abs() <= 1e-12 * s2);
        assert!((e.c_cal / env.c_cal - s2).abs() <= 1e-9 * s2);
        assert_eq!(e.pass, env.pass);
        assert_eq!(rep.verdict("upper_envelope"), base.verdict("upper_envelope"));
    }
}
