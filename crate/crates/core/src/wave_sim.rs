//! Implicit-midpoint integration of the coupled system
//!
//! ```text
//! u_tt - lap u + b v + a g(u_t) = 0
//! v_tt - lap v + b u            = 0
//! ```
//!
//! on a Dirichlet grid, written first order in `(u, v, p, q) = (u, v, u_t, v_t)`.
//! Every right-hand side is evaluated at the midpoint average of the old and
//! new states. Since the energy is quadratic, each step satisfies
//! `E(new) - E(old) = -dt <a g(p_mid), p_mid>` exactly, up to the Newton
//! residual and rounding.

use serde::{Deserialize, Serialize};

use crate::damping::DampingLaw;
use crate::error::{config_err, Error, Result};
use crate::linalg::{solve_block_tridiag, Block};
use crate::mesh::{CoefficientProfile, Mesh1D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
            t: 0.0,
        }
    }

    /// Exchange the two components, `(u, p) <-> (v, q)`.
    pub fn swapped(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
            p: self.q.clone(),
            q: self.p.clone(),
            t: self.t,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let s = |w: &[f64]| w.iter().map(|x| x * factor).collect();
        Self {
            u: s(&self.u),
            v: s(&self.v),
            p: s(&self.p),
            q: s(&self.q),
            t: self.t,
        }
    }

    fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.p, &self.q]
            .iter()
            .all(|w| w.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_every: usize,
}

impl SimConfig {
    /// `dt = h`, `newton_tol = 1e-12`, 50 Newton iterations, every step recorded.
    pub fn for_mesh(mesh: &Mesh1D, t_end: f64) -> Self {
        Self {
            dt: mesh.h(),
            t_end,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config_err(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(config_err("newton_tol must be positive"));
        }
        if self.newton_max_iter == 0 {
            return Err(config_err("newton_max_iter must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(config_err("record_every must be at least 1"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(config_err(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        Ok(())
    }

    /// Number of full steps that fit in `[0, t_end]`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub e_uv: f64,
    pub e_high: f64,
    pub diss_cum: f64,
    /// `||grad u||^2 + ||grad v||^2 + ||p||^2 + ||q||^2`, for the coercivity check.
    pub quadratic_sum: f64,
    pub x_diag: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: WaveState,
    /// `dt <a g(p_mid), p_mid>`, the energy removed by this step.
    pub dissipation: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub records: Vec<EnergyRecord>,
    /// `max_n |E(t_n) - E(0) + diss_cum(t_n)|` over every step, not just records.
    pub identity_residual_max: f64,
    /// `max_n |E(t_{n+1}) - E(t_n) + dt <a g(p_mid), p_mid>|`.
    pub step_residual_max: f64,
    pub steps: usize,
    pub halved_steps: usize,
    pub final_state: WaveState,
}

/// The discretized coupled system: mesh, coefficients and damping law.
#[derive(Debug, Clone, Copy)]
pub struct CoupledSystem<'a> {
    pub mesh: &'a Mesh1D,
    pub a: &'a CoefficientProfile,
    pub b: &'a CoefficientProfile,
    pub law: &'a DampingLaw,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(
        mesh: &'a Mesh1D,
        a: &'a CoefficientProfile,
        b: &'a CoefficientProfile,
        law: &'a DampingLaw,
    ) -> Result<Self> {
        mesh.check_len("a profile", a.values.len())?;
        mesh.check_len("b profile", b.values.len())?;
        Ok(Self { mesh, a, b, law })
    }

    fn check_state(&self, s: &WaveState) -> Result<()> {
        for (name, w) in [("u", &s.u), ("v", &s.v), ("p", &s.p), ("q", &s.q)] {
            self.mesh.check_len(name, w.len())?;
        }
        Ok(())
    }

    /// `1/2 [ |grad u|^2 + |grad v|^2 + |p|^2 + |q|^2 ] + <b u, v>`.
    pub fn energy(&self, s: &WaveState) -> Result<f64> {
        self.check_state(s)?;
        Ok(self.energy_unchecked(s))
    }

    fn energy_unchecked(&self, s: &WaveState) -> f64 {
        0.5 * self.quadratic_sum_unchecked(s) + self.mesh.weighted_inner(&self.b.values, &s.u, &s.v)
    }

    pub fn quadratic_sum(&self, s: &WaveState) -> Result<f64> {
        self.check_state(s)?;
        Ok(self.quadratic_sum_unchecked(s))
    }

    fn quadratic_sum_unchecked(&self, s: &WaveState) -> f64 {
        let m = self.mesh;
        m.grad_norm_sq(&s.u) + m.grad_norm_sq(&s.v) + m.norm_sq(&s.p) + m.norm_sq(&s.q)
    }

    /// Accelerations `(p_t, q_t)` read off the equations.
    pub fn accelerations(&self, s: &WaveState) -> (Vec<f64>, Vec<f64>) {
        let n = self.mesh.n();
        let (mut pt, mut qt) = (vec![0.0; n], vec![0.0; n]);
        self.mesh.laplacian(&s.u, &mut pt);
        self.mesh.laplacian(&s.v, &mut qt);
        let (a, b) = (&self.a.values, &self.b.values);
        for i in 0..n {
            pt[i] -= b[i] * s.v[i] + a[i] * self.law.g(s.p[i]);
            qt[i] -= b[i] * s.u[i];
        }
        (pt, qt)
    }

    /// Energy of `(u_t, v_t)`: the same functional applied to `(p, q, p_t, q_t)`.
    pub fn higher_energy(&self, s: &WaveState) -> Result<f64> {
        self.check_state(s)?;
        Ok(self.higher_energy_unchecked(s))
    }

    fn higher_energy_unchecked(&self, s: &WaveState) -> f64 {
        let (pt, qt) = self.accelerations(s);
        let m = self.mesh;
        0.5 * (m.grad_norm_sq(&s.p) + m.grad_norm_sq(&s.q) + m.norm_sq(&pt) + m.norm_sq(&qt))
            + m.weighted_inner(&self.b.values, &s.p, &s.q)
    }

    /// Weighted functional
    /// `phi' (<u,p> + <v,q>) + k1 phi' (<p_t,q> - <q_t,p>) + phi E + k phi' E_high`.
    /// Diagnostic only.
    pub fn x_functional(
        &self,
        s: &WaveState,
        phi: f64,
        phi_prime: f64,
        k: f64,
        k1: f64,
    ) -> Result<f64> {
        self.check_state(s)?;
        let m = self.mesh;
        let (pt, qt) = self.accelerations(s);
        let cross = m.inner(&pt, &s.q) - m.inner(&qt, &s.p);
        Ok(phi_prime * (m.inner(&s.u, &s.p) + m.inner(&s.v, &s.q))
            + k1 * phi_prime * cross
            + phi * self.energy_unchecked(s)
            + k * phi_prime * self.higher_energy_unchecked(s))
    }

    /// One implicit-midpoint step of length `cfg.dt`.
    pub fn step(&self, s: &WaveState, cfg: &SimConfig) -> Result<StepOutcome> {
        self.check_state(s)?;
        self.step_dt(s, cfg.dt, cfg)
    }

    fn step_dt(&self, s: &WaveState, dt: f64, cfg: &SimConfig) -> Result<StepOutcome> {
        let n = self.mesh.n();
        let h = self.mesh.h();
        let (a, b) = (&self.a.values, &self.b.values);
        let half = 0.5 * dt;
        let quarter2 = 0.25 * dt * dt;
        let lap_coef = quarter2 / (h * h);

        // unknowns: midpoint velocities P = (p + p')/2, Q = (q + q')/2
        let mut pm = s.p.clone();
        let mut qm = s.q.clone();
        let mut ubar = vec![0.0; n];
        let mut vbar = vec![0.0; n];
        let mut lap_u = vec![0.0; n];
        let mut lap_v = vec![0.0; n];
        let mut rhs = vec![[0.0; 2]; n];
        let mut diag: Vec<Block> = vec![[[0.0; 2]; 2]; n];

        let mut residual: f64;
        let mut iterations = 0;
        loop {
            for i in 0..n {
                ubar[i] = s.u[i] + half * pm[i];
                vbar[i] = s.v[i] + half * qm[i];
            }
            self.mesh.laplacian(&ubar, &mut lap_u);
            self.mesh.laplacian(&vbar, &mut lap_v);
            residual = 0.0;
            for i in 0..n {
                let f1 = pm[i] - s.p[i]
                    - half * (lap_u[i] - b[i] * vbar[i] - a[i] * self.law.g(pm[i]));
                let f2 = qm[i] - s.q[i] - half * (lap_v[i] - b[i] * ubar[i]);
                residual = residual.max(f1.abs()).max(f2.abs());
                rhs[i] = [-f1, -f2];
            }
            if !residual.is_finite() {
                break;
            }
            if residual <= cfg.newton_tol || iterations >= cfg.newton_max_iter {
                break;
            }
            for i in 0..n {
                let cross = quarter2 * b[i];
                let base = 1.0 + 2.0 * lap_coef;
                diag[i] = [
                    [base + half * a[i] * self.law.g_prime(pm[i]), cross],
                    [cross, base],
                ];
            }
            if solve_block_tridiag(&diag, -lap_coef, &mut rhs).is_none() {
                break;
            }
            for i in 0..n {
                pm[i] += rhs[i][0];
                qm[i] += rhs[i][1];
            }
            iterations += 1;
        }
        if !(residual <= cfg.newton_tol) {
            return Err(Error::Newton {
                t: s.t,
                dt,
                residual,
                iterations,
            });
        }

        let mut next = WaveState {
            u: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            p: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            t: s.t + dt,
        };
        let mut dissipation = 0.0;
        for i in 0..n {
            next.u.push(s.u[i] + dt * pm[i]);
            next.v.push(s.v[i] + dt * qm[i]);
            next.p.push(2.0 * pm[i] - s.p[i]);
            next.q.push(2.0 * qm[i] - s.q[i]);
            dissipation += a[i] * self.law.g(pm[i]) * pm[i];
        }
        dissipation *= dt * h;
        if !next.is_finite() {
            return Err(Error::Newton {
                t: s.t,
                dt,
                residual: f64::NAN,
                iterations,
            });
        }
        Ok(StepOutcome {
            state: next,
            dissipation,
            newton_iterations: iterations,
            residual,
        })
    }

    /// A step that, on Newton failure, retries once as two half steps.
    fn robust_step(&self, s: &WaveState, cfg: &SimConfig) -> Result<(WaveState, f64, bool)> {
        match self.step_dt(s, cfg.dt, cfg) {
            Ok(o) => Ok((o.state, o.dissipation, false)),
            Err(Error::Newton { .. }) => {
                let first = self.step_dt(s, 0.5 * cfg.dt, cfg)?;
                let second = self.step_dt(&first.state, 0.5 * cfg.dt, cfg)?;
                Ok((second.state, first.dissipation + second.dissipation, true))
            }
            Err(e) => Err(e),
        }
    }

    pub fn simulate(&self, initial: &WaveState, cfg: &SimConfig) -> Result<Simulation> {
        self.simulate_with(initial, cfg, |_, _| Ok(()))
    }

    /// Runs from `initial` to `t_end`, recording every `record_every` steps
    /// (and the final step). `observe` may fill extra diagnostics in each record.
    pub fn simulate_with<F>(
        &self,
        initial: &WaveState,
        cfg: &SimConfig,
        mut observe: F,
    ) -> Result<Simulation>
    where
        F: FnMut(&WaveState, &mut EnergyRecord) -> Result<()>,
    {
        cfg.validate()?;
        self.check_state(initial)?;
        let steps = cfg.n_steps();
        let mut state = initial.clone();
        state.t = 0.0;
        let e0 = self.energy_unchecked(&state);
        let mut records = Vec::with_capacity(steps / cfg.record_every + 2);
        let mut diss_cum = 0.0;
        let mut e_prev = e0;
        let mut identity_residual_max: f64 = 0.0;
        let mut step_residual_max: f64 = 0.0;
        let mut halved_steps = 0;

        let mut record = |state: &WaveState, e: f64, diss_cum: f64, records: &mut Vec<EnergyRecord>| {
            let mut rec = EnergyRecord {
                t: state.t,
                e_uv: e,
                e_high: self.higher_energy_unchecked(state),
                diss_cum,
                quadratic_sum: self.quadratic_sum_unchecked(state),
                x_diag: None,
            };
            observe(state, &mut rec)?;
            records.push(rec);
            Ok::<(), Error>(())
        };
        record(&state, e0, 0.0, &mut records)?;

        for k in 1..=steps {
            let (mut next, diss, halved) = self.robust_step(&state, cfg)?;
            if halved {
                halved_steps += 1;
            }
            next.t = k as f64 * cfg.dt;
            diss_cum += diss;
            let e = self.energy_unchecked(&next);
            step_residual_max = step_residual_max.max((e - e_prev + diss).abs());
            identity_residual_max = identity_residual_max.max((e - e0 + diss_cum).abs());
            e_prev = e;
            state = next;
            if k % cfg.record_every == 0 || k == steps {
                record(&state, e, diss_cum, &mut records)?;
            }
        }
        Ok(Simulation {
            records,
            identity_residual_max,
            step_residual_max,
            steps,
            halved_steps,
            final_state: state,
        })
    }
}

/// Initial profile of one field: a sum of Dirichlet sine modes
/// `amp sin(k pi x / L)` and Gaussian bumps `amp exp(-((x - c)/w)^2)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldProfile {
    /// `[mode, amplitude]` pairs.
    #[serde(default)]
    pub modes: Vec<[f64; 2]>,
    /// `[center, width, amplitude]` triples.
    #[serde(default)]
    pub gaussians: Vec<[f64; 3]>,
}

impl FieldProfile {
    pub fn modes(modes: &[(f64, f64)]) -> Self {
        Self {
            modes: modes.iter().map(|&(k, a)| [k, a]).collect(),
            gaussians: Vec::new(),
        }
    }

    pub fn sample(&self, mesh: &Mesh1D) -> Vec<f64> {
        let l = mesh.length();
        mesh.sample(|x| {
            let s: f64 = self
                .modes
                .iter()
                .map(|[k, a]| a * (k * std::f64::consts::PI * x / l).sin())
                .sum();
            let g: f64 = self
                .gaussians
                .iter()
                .map(|[c, w, a]| a * (-((x - c) / w).powi(2)).exp())
                .sum();
            s + g
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub u0: FieldProfile,
    #[serde(default)]
    pub v0: FieldProfile,
    #[serde(default)]
    pub u1: FieldProfile,
    #[serde(default)]
    pub v1: FieldProfile,
}

impl InitialData {
    pub fn state(&self, mesh: &Mesh1D) -> WaveState {
        WaveState {
            u: self.u0.sample(mesh),
            v: self.v0.sample(mesh),
            p: self.u1.sample(mesh),
            q: self.v1.sample(mesh),
            t: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::LawKind;
    use crate::mesh::bump_profile;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (Mesh1D, CoefficientProfile, CoefficientProfile) {
        let m = Mesh1D::new(1.0, n).unwrap();
        let a = bump_profile(&m, 0.1, 0.4, 1.0, 0.05).unwrap();
        let b = bump_profile(&m, 0.5, 0.9, 1.0, 0.05).unwrap();
        (m, a, b)
    }

    #[test]
    fn energy_examples() {
        let m = Mesh1D::new(1.0, 200).unwrap();
        let zero = CoefficientProfile::zero(&m);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &zero, &zero, &law).unwrap();
        assert_eq!(sys.energy(&WaveState::zeros(200)).unwrap(), 0.0);

        let mut s = WaveState::zeros(200);
        s.u = m.sample(|x| (PI * x).sin());
        let e = sys.energy(&s).unwrap();
        // exact discrete value mu_1 / 4
        let mu = crate::mesh::first_dirichlet_eigenvalue(&m);
        assert!((e - mu / 4.0).abs() < 1e-12);
        assert!((e - PI * PI / 4.0).abs() < PI.powi(4) / 48.0 * m.h() * m.h() * 1.01);

        let b0 = 0.7;
        let bc = bump_profile(&m, 0.0, 1.0, b0, 0.0).unwrap();
        let sys_b = CoupledSystem::new(&m, &zero, &bc, &law).unwrap();
        s.v = s.u.clone();
        let e = sys_b.energy(&s).unwrap();
        assert!((e - (PI * PI / 2.0 + b0 / 2.0)).abs() < 1e-3);
    }

    #[test]
    fn size_mismatch_is_config_error() {
        let (m, a, b) = setup(20);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        assert!(matches!(sys.energy(&WaveState::zeros(19)), Err(Error::Config(_))));
        let short = CoefficientProfile::zero(&Mesh1D::new(1.0, 10).unwrap());
        assert!(CoupledSystem::new(&m, &short, &b, &law).is_err());
    }

    #[test]
    fn higher_energy_example() {
        let m = Mesh1D::new(1.0, 400).unwrap();
        let zero = CoefficientProfile::zero(&m);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &zero, &zero, &law).unwrap();
        assert_eq!(sys.higher_energy(&WaveState::zeros(400)).unwrap(), 0.0);
        let mut s = WaveState::zeros(400);
        s.u = m.sample(|x| (PI * x).sin() / (PI * PI));
        let eh = sys.higher_energy(&s).unwrap();
        assert!((eh - 0.25).abs() < 1e-4, "{eh}");
    }

    #[test]
    fn higher_energy_matches_time_derivative() {
        // with g linear, E_high is the energy of the time derivative of the fields
        let (m, a, b) = setup(60);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        let mut s = WaveState::zeros(60);
        s.u = m.sample(|x| (PI * x).sin());
        s.v = m.sample(|x| 0.5 * (2.0 * PI * x).sin());
        s.p = m.sample(|x| 0.3 * (3.0 * PI * x).sin());
        let dt = 1e-6;
        let cfg = SimConfig {
            dt,
            t_end: dt,
            newton_tol: 1e-14,
            newton_max_iter: 20,
            record_every: 1,
        };
        let next = sys.step(&s, &cfg).unwrap().state;
        let d = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| (a - b) / dt).collect() };
        let deriv = WaveState {
            u: d(&next.u, &s.u),
            v: d(&next.v, &s.v),
            p: d(&next.p, &s.p),
            q: d(&next.q, &s.q),
            t: 0.0,
        };
        let fd = sys.energy(&deriv).unwrap();
        let eh = sys.higher_energy(&s).unwrap();
        assert!((fd - eh).abs() < 1e-3 * eh, "fd {fd} eh {eh}");
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let (m, a, b) = setup(30);
        let law = DampingLaw::polynomial(3.0).unwrap();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        let cfg = SimConfig::for_mesh(&m, 1.0);
        let out = sys.step(&WaveState::zeros(30), &cfg).unwrap();
        assert!(out.state.u.iter().chain(&out.state.p).all(|&x| x == 0.0));
        assert_eq!(out.dissipation, 0.0);
    }

    #[test]
    fn damped_step_identity() {
        let (m, a, b) = setup(50);
        for kind in [LawKind::Linear, LawKind::Polynomial { p: 3.0 }, LawKind::ExpOrigin] {
            let law = DampingLaw::new(kind).unwrap();
            let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
            let mut s = WaveState::zeros(50);
            s.u = m.sample(|x| (PI * x).sin());
            s.p = m.sample(|x| 2.0 * (2.0 * PI * x).sin());
            s.q = m.sample(|x| (3.0 * PI * x).sin());
            let cfg = SimConfig::for_mesh(&m, 1.0);
            let out = sys.step(&s, &cfg).unwrap();
            let lhs = sys.energy(&out.state).unwrap() - sys.energy(&s).unwrap() + out.dissipation;
            assert!(lhs.abs() <= 10.0 * cfg.newton_tol, "{kind:?} {lhs:e}");
            assert!(out.dissipation > 0.0);
        }
    }

    #[test]
    fn undamped_run_conserves_energy() {
        let m = Mesh1D::new(1.0, 50).unwrap();
        let zero = CoefficientProfile::zero(&m);
        let b = bump_profile(&m, 0.5, 0.9, 2.0, 0.05).unwrap();
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &zero, &b, &law).unwrap();
        let mut s = WaveState::zeros(50);
        s.u = m.sample(|x| (PI * x).sin());
        let mut cfg = SimConfig::for_mesh(&m, 0.0);
        cfg.t_end = 10_000.0 * cfg.dt;
        cfg.record_every = 1000;
        let sim = sys.simulate(&s, &cfg).unwrap();
        assert_eq!(sim.steps, 10_000);
        let e0 = sim.records[0].e_uv;
        let ef = sim.records.last().unwrap().e_uv;
        assert!((ef - e0).abs() <= 10.0 * cfg.newton_tol * sim.steps as f64);
        assert!(sim.records.iter().all(|r| r.diss_cum == 0.0));
    }

    #[test]
    fn empty_horizon_gives_single_record() {
        let (m, a, b) = setup(20);
        let law = DampingLaw::linear();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        let mut cfg = SimConfig::for_mesh(&m, 0.0);
        cfg.t_end = 0.5 * cfg.dt;
        let sim = sys.simulate(&WaveState::zeros(20), &cfg).unwrap();
        assert_eq!(sim.records.len(), 1);
        assert_eq!(sim.records[0].t, 0.0);
    }

    #[test]
    fn x_functional_reductions() {
        let (m, a, b) = setup(40);
        let law = DampingLaw::polynomial(3.0).unwrap();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        assert_eq!(sys.x_functional(&WaveState::zeros(40), 2.0, 0.1, 1.0, 1.0).unwrap(), 0.0);
        let mut s = WaveState::zeros(40);
        s.u = m.sample(|x| (PI * x).sin());
        s.q = m.sample(|x| x * (1.0 - x));
        let x = sys.x_functional(&s, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(x, sys.energy(&s).unwrap());
    }

    #[test]
    fn newton_failure_is_reported() {
        let (m, a, b) = setup(20);
        let law = DampingLaw::polynomial(3.0).unwrap();
        let sys = CoupledSystem::new(&m, &a, &b, &law).unwrap();
        let mut s = WaveState::zeros(20);
        s.p = m.sample(|x| (PI * x).sin());
        let cfg = SimConfig {
            dt: 0.05,
            t_end: 1.0,
            newton_tol: 1e-300,
            newton_max_iter: 1,
            record_every: 1,
        };
        assert!(matches!(sys.step(&s, &cfg), Err(Error::Newton { .. })));
        assert!(matches!(sys.simulate(&s, &cfg), Err(Error::Newton { .. })));
    }
}
