//! Envelope calibration and the checks that turn a simulation plus a decay
//! ODE into verdicts.

use serde::{Deserialize, Serialize};

use crate::config::{Resolved, RunConfig};
use crate::damping::{ConvexInverse, LawKind, MassScaledInverse};
use crate::decay_ode::{
    min_admissible_phi0, natural_r0, phi_initial_admissible, solve_phi, solve_psi, AdmissibilityConstants,
    PhiAdmissibility, PhiParams, Trajectory,
};
use crate::error::{Error, Result};
use crate::mesh::{check_b_admissible, AdmissibilityReport};
use crate::wave_sim::{CoupledSystem, EnergyRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    /// A diagnostic check failed; does not fail the run.
    Warn,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "NOT-APPLICABLE",
            Verdict::Warn => "WARN",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

fn check_series(times: &[f64], values: &[f64], name: &str) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Analysis(format!("{name}: empty series")));
    }
    if times.len() != values.len() {
        return Err(Error::Analysis(format!(
            "{name}: {} times but {} values",
            times.len(),
            values.len()
        )));
    }
    Ok(())
}

/// `max_{t <= t_cal} E(t) phi(t)`.
pub fn calibrate_envelope(times: &[f64], energy: &[f64], phi: &[f64], t_cal: f64) -> Result<f64> {
    check_series(times, energy, "energy")?;
    check_series(times, phi, "phi")?;
    times
        .iter()
        .zip(energy.iter().zip(phi))
        .filter(|(t, _)| **t <= t_cal)
        .map(|(_, (e, p))| e * p)
        .reduce(f64::max)
        .ok_or_else(|| Error::Analysis(format!("no samples at or before t_cal = {t_cal}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub c_cal: f64,
    pub t_cal: f64,
    pub margin: f64,
    /// `max_{t > t_cal} (E phi / C_cal - 1)`, floored at 0.
    pub max_violation: f64,
    pub pass: bool,
}

/// Dominance `E(t) <= (1 + margin) C_cal / phi(t)` for every `t > t_cal`.
pub fn check_upper_envelope(
    times: &[f64],
    energy: &[f64],
    phi: &[f64],
    c_cal: f64,
    t_cal: f64,
    margin: f64,
) -> Result<EnvelopeCheck> {
    check_series(times, energy, "energy")?;
    check_series(times, phi, "phi")?;
    let mut max_violation: f64 = 0.0;
    for ((t, e), p) in times.iter().zip(energy).zip(phi) {
        if *t > t_cal {
            let rel = if c_cal > 0.0 {
                e * p / c_cal - 1.0
            } else if *e > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            max_violation = max_violation.max(rel);
        }
    }
    Ok(EnvelopeCheck {
        c_cal,
        t_cal,
        margin,
        max_violation,
        pass: max_violation <= margin,
    })
}

/// Least-squares slope of `ln E` against `ln(1 + t)` over `t_a <= t <= t_b`.
pub fn fit_exponent(times: &[f64], energy: &[f64], t_a: f64, t_b: f64) -> Result<f64> {
    check_series(times, energy, "energy")?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energy)
        .filter(|(t, _)| **t >= t_a && **t <= t_b)
        .map(|(t, e)| (*t, *e))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Analysis(format!(
            "fit window [{t_a}, {t_b}] holds {} samples, need 2",
            pts.len()
        )));
    }
    if let Some((t, e)) = pts.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::Analysis(format!("nonpositive energy {e} at t = {t} in fit window")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Analysis("fit window spans a single time".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerCheck {
    pub t0_cal: f64,
    pub psi0: f64,
    pub e_high0: f64,
    pub violations: usize,
    /// `min_{t >= T0} E / bound`; infinite when the bound vanishes.
    pub min_ratio: f64,
    pub verdict: Verdict,
}

/// `E(t) >= (psi(t) / (4 sqrt(E_high(0))))^2` for `t >= t0_cal`. Failure is a warning.
pub fn check_lower_envelope(
    times: &[f64],
    energy: &[f64],
    psi: &[f64],
    e_high0: f64,
    t0_cal: f64,
) -> Result<LowerCheck> {
    check_series(times, energy, "energy")?;
    check_series(times, psi, "psi")?;
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for ((t, e), p) in times.iter().zip(energy).zip(psi) {
        if *t < t0_cal {
            continue;
        }
        let bound = if e_high0 > 0.0 {
            (p / (4.0 * e_high0.sqrt())).powi(2)
        } else {
            0.0
        };
        if bound > 0.0 {
            min_ratio = min_ratio.min(e / bound);
        }
        if *e < bound {
            violations += 1;
        }
    }
    Ok(LowerCheck {
        t0_cal,
        psi0: psi.first().copied().unwrap_or(0.0),
        e_high0,
        violations,
        min_ratio,
        verdict: if violations == 0 { Verdict::Pass } else { Verdict::Warn },
    })
}

/// Value of a sampled series at `t`, by linear interpolation.
pub fn sample_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&s| s <= t);
    if i == 0 {
        return values[0];
    }
    if i >= times.len() {
        return values[values.len() - 1];
    }
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    values[i - 1] * (1.0 - w) + values[i] * w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeFit {
    pub window: [f64; 2],
    pub exponent: f64,
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub law_name: String,
    pub m_a: f64,
    pub a_inf: f64,
    pub lambda: f64,
    pub lambda_continuum: f64,
    pub admissibility: AdmissibilityReport,
    pub phi_params: Option<PhiParams>,
    pub phi_admissibility: Option<PhiAdmissibility>,
    pub records: Vec<EnergyRecord>,
    /// `phi` at the record times, when the decay checks apply.
    pub phi: Option<Trajectory>,
    pub psi: Option<Trajectory>,
    pub envelope: Option<EnvelopeCheck>,
    pub fit_window: [f64; 2],
    pub fitted_exponent: Option<f64>,
    pub ode_fit: Option<OdeFit>,
    pub lower: Option<LowerCheck>,
    pub e0: f64,
    pub identity_residual_max: f64,
    pub energy_drift: f64,
    pub coercivity_violations: usize,
    pub steps: usize,
    pub halved_steps: usize,
    pub verdicts: Vec<NamedVerdict>,
}

impl ExperimentReport {
    /// True when no verdict is a failure.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict != Verdict::Fail)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.verdicts.iter().find(|v| v.name == name).map(|v| v.verdict)
    }

    /// `C_cal / phi(t)` at each record, when available.
    pub fn envelope_series(&self) -> Option<Vec<f64>> {
        let (phi, env) = (self.phi.as_ref()?, self.envelope.as_ref()?);
        Some(phi.values.iter().map(|p| env.c_cal / p).collect())
    }
}

/// Times at which a simulation with `cfg` records.
pub fn record_times(dt: f64, steps: usize, record_every: usize) -> Vec<f64> {
    (0..=steps)
        .filter(|k| k % record_every == 0 || *k == steps)
        .map(|k| k as f64 * dt)
        .collect()
}

/// ODE parameters of a run; `phi0` defaults to `phi0_factor` times the
/// smallest admissible value.
pub fn resolve_phi_params(
    cfg: &RunConfig,
    r: &Resolved,
    inv: &MassScaledInverse<'_>,
) -> Result<(PhiParams, AdmissibilityConstants)> {
    let mut params = PhiParams {
        eps0: cfg.ode.eps0,
        c1: cfg.ode.c1,
        beta: r.beta,
        phi0: 1.0,
        r0: cfg.ode.r0.unwrap_or_else(|| natural_r0(&r.law, inv.m_a())),
    };
    let consts = AdmissibilityConstants {
        delta: cfg.ode.delta,
        lambda: r.lambda,
        c_t: cfg.ode.c_t,
        m: r.law.m,
        big_m: r.law.big_m,
    };
    params.phi0 = match cfg.ode.phi0 {
        Some(p) => p,
        None => cfg.ode.phi0_factor * min_admissible_phi0(&params, inv, &consts)?,
    };
    params.validate()?;
    Ok((params, consts))
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    let r = cfg.resolve()?;
    let delta = cfg.ode.delta;
    let admissibility = check_b_admissible(&r.b, r.lambda, delta)?;
    let sys = CoupledSystem::new(&r.mesh, &r.a, &r.b, &r.law)?;
    let initial = cfg.initial.state(&r.mesh);
    let m_a = r.a.mass(&r.mesh);
    let a_inf = r.a.sup();
    let mut verdicts = Vec::new();
    let mut push = |name: &str, verdict: Verdict, detail: String| {
        verdicts.push(NamedVerdict {
            name: name.into(),
            verdict,
            detail,
        })
    };

    let decay_reason = if !admissibility.admissible {
        Some(format!(
            "b_max = {:e} exceeds (1 - delta)/lambda^2 = {:e}",
            admissibility.b_max, admissibility.bound
        ))
    } else if !(m_a > 0.0) {
        Some("a is identically zero".to_string())
    } else {
        None
    };

    let times = record_times(r.sim.dt, r.sim.n_steps(), r.sim.record_every);
    let inv = if decay_reason.is_none() {
        Some(r.law.h_inverse(m_a)?)
    } else {
        None
    };

    let mut phi_params = None;
    let mut phi_admissibility = None;
    let mut phi = None;
    if let Some(inv) = &inv {
        let (params, consts) = resolve_phi_params(cfg, &r, inv)?;
        let adm = phi_initial_admissible(&params, inv, &consts)?;
        push(
            "phi0_admissible",
            Verdict::of(adm.admissible),
            format!("(h^-1)'(phi0^-beta) = {:e} vs bound {:e}", adm.lhs, adm.rhs),
        );
        phi = Some(solve_phi(&params, inv, &times)?);
        phi_params = Some(params);
        phi_admissibility = Some(adm);
    }

    let x_diag = cfg.verify.x_diag;
    let sim = sys.simulate_with(&initial, &r.sim, |state, rec| {
        if let (Some(x), Some(phi), Some(params), Some(inv)) = (x_diag, &phi, &phi_params, &inv) {
            let p = phi.at(state.t);
            let dp = params.rate() * p * inv.d1(p.powf(-params.beta));
            rec.x_diag = Some(sys.x_functional(state, p, dp, x.k, x.k1)?);
        }
        Ok(())
    })?;
    let records = sim.records;
    let e0 = records[0].e_uv;
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let identity_ok = sim.identity_residual_max <= cfg.verify.identity_rel_tol * scale;
    push(
        "dissipation_identity",
        Verdict::of(identity_ok),
        format!("max |E - E0 + D| / E0 = {:e}", sim.identity_residual_max / scale),
    );
    let energy_drift = (records.last().unwrap().e_uv - e0) / scale;

    let coercivity_violations = records
        .iter()
        .filter(|rec| rec.e_uv < 0.5 * delta * rec.quadratic_sum * (1.0 - 1e-12))
        .count();
    if admissibility.admissible {
        push(
            "coercivity",
            Verdict::of(coercivity_violations == 0),
            format!("{coercivity_violations} violating records"),
        );
    } else {
        push("coercivity", Verdict::NotApplicable, decay_reason.clone().unwrap_or_default());
    }

    let ts: Vec<f64> = records.iter().map(|rec| rec.t).collect();
    let es: Vec<f64> = records.iter().map(|rec| rec.e_uv).collect();
    let t_end = *ts.last().unwrap();
    let fit_window = cfg.verify.fit_window.unwrap_or([0.5 * t_end, t_end]);
    let fitted_exponent = fit_exponent(&ts, &es, fit_window[0], fit_window[1]).ok();

    let mut envelope = None;
    let mut ode_fit = None;
    let mut lower = None;
    let mut psi = None;
    match (&decay_reason, &phi, &phi_params, &inv) {
        (None, Some(phi), Some(params), Some(inv)) => {
            let t_cal = cfg.verify.t_cal_fraction * t_end;
            let c_cal = calibrate_envelope(&ts, &es, &phi.values, t_cal)?;
            let env = check_upper_envelope(&ts, &es, &phi.values, c_cal, t_cal, cfg.verify.margin)?;
            push(
                "upper_envelope",
                Verdict::of(env.pass),
                format!(
                    "C_cal = {:e}, max violation {:.4} (margin {})",
                    env.c_cal, env.max_violation, env.margin
                ),
            );
            envelope = Some(env);

            if let Some(max) = cfg.verify.fit_exponent_max {
                let (v, d) = match fitted_exponent {
                    Some(k) => (Verdict::of(k <= max), format!("fitted {k:.4}, required <= {max}")),
                    None => (Verdict::Fail, "fit failed".to_string()),
                };
                push("fitted_exponent", v, d);
            }

            if let Some(w) = cfg.verify.ode_fit_window {
                let mut grid = vec![0.0];
                grid.extend(crate::damping::log_uniform(w[0].max(1e-9), w[1], 400));
                let tr = solve_phi(params, inv, &grid)?;
                let inv_phi: Vec<f64> = tr.values.iter().map(|p| 1.0 / p).collect();
                let exponent = fit_exponent(&grid, &inv_phi, w[0], w[1])?;
                let predicted = match r.law.kind {
                    LawKind::Polynomial { p } => Some(-2.0 / (params.beta * (p - 1.0))),
                    _ => None,
                };
                if let Some(pred) = predicted {
                    let rel = (exponent / pred - 1.0).abs();
                    push(
                        "ode_exponent",
                        Verdict::of(rel <= cfg.verify.ode_fit_rel_tol),
                        format!("1/phi exponent {exponent:.5} vs predicted {pred:.5} (rel {rel:.2e})"),
                    );
                }
                ode_fit = Some(OdeFit {
                    window: w,
                    exponent,
                    predicted,
                });
            }

            if cfg.verify.lower_bound && a_inf > 0.0 {
                let t0 = cfg.verify.t0_cal_fraction * t_end;
                let e_high0 = records[0].e_high;
                let psi0 = 4.0 * (e_high0 * sample_at(&ts, &es, t0)).sqrt();
                if psi0 > 0.0 {
                    let tr = solve_psi(a_inf, &r.law, psi0, &ts)?;
                    let chk = check_lower_envelope(&ts, &es, &tr.values, e_high0, t0)?;
                    push(
                        "lower_bound",
                        chk.verdict,
                        format!("{} violations, min E/bound = {:e}", chk.violations, chk.min_ratio),
                    );
                    lower = Some(chk);
                    psi = Some(tr);
                } else {
                    push("lower_bound", Verdict::NotApplicable, "zero initial energy".into());
                }
            }
        }
        _ => {
            let why = decay_reason.clone().unwrap_or_default();
            for name in ["upper_envelope", "fitted_exponent", "lower_bound"] {
                push(name, Verdict::NotApplicable, why.clone());
            }
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        law_name: r.law.kind.name().to_string(),
        m_a,
        a_inf,
        lambda: r.lambda,
        lambda_continuum: r.lambda_continuum,
        admissibility,
        phi_params,
        phi_admissibility,
        records,
        phi,
        psi,
        envelope,
        fit_window,
        fitted_exponent,
        ode_fit,
        lower,
        e0,
        identity_residual_max: sim.identity_residual_max,
        energy_drift,
        coercivity_violations,
        steps: sim.steps,
        halved_steps: sim.halved_steps,
        verdicts,
    })
}
