//! CSV, summary and gnuplot output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::decay_ode::{A2Report, PhiAudit};
use crate::error::Result;
use crate::verify::ExperimentReport;
use crate::wave_sim::EnergyRecord;

pub const ENERGY_HEADER: &str = "t,E_uv,E_high,diss_cum,phi,envelope,X_diag";
pub const DECAY_HEADER: &str = "t,phi,theta,theta_bound,psi";

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn col(c: Option<&[f64]>, i: usize) -> Option<f64> {
    c.and_then(|v| v.get(i).copied())
}

pub fn energy_csv(records: &[EnergyRecord], phi: Option<&[f64]>, envelope: Option<&[f64]>) -> String {
    let mut s = String::with_capacity(records.len() * 160);
    s.push_str(ENERGY_HEADER);
    s.push('\n');
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.e_uv),
            fmt_f64(r.e_high),
            fmt_f64(r.diss_cum),
            opt(col(phi, i)),
            opt(col(envelope, i)),
            opt(r.x_diag)
        );
    }
    s
}

pub fn decay_csv(
    times: &[f64],
    phi: Option<&[f64]>,
    theta: Option<&[f64]>,
    theta_bound: Option<&[f64]>,
    psi: Option<&[f64]>,
) -> String {
    let mut s = String::with_capacity(times.len() * 120);
    s.push_str(DECAY_HEADER);
    s.push('\n');
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(*t),
            opt(col(phi, i)),
            opt(col(theta, i)),
            opt(col(theta_bound, i)),
            opt(col(psi, i))
        );
    }
    s
}

/// Log-log plot of the energy against its envelope.
pub fn gnuplot_script(energy_csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set key top right\n\
         set xlabel '1 + t'\n\
         set ylabel 'energy'\n\
         set title '{title}'\n\
         set terminal pngcairo size 900,600\n\
         set output 'energy.png'\n\
         plot '{energy_csv}' every ::1 using (1+$1):2 with lines title 'E_uv', \\\n\
         \x20    '' every ::1 using (1+$1):6 with lines dashtype 2 title 'C_cal/phi', \\\n\
         \x20    '' every ::1 using (1+$1):3 with lines title 'E_high'\n"
    )
}

pub fn experiment_summary(rep: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "law                 {}", rep.law_name);
    let _ = writeln!(s, "m_a                 {}", fmt_f64(rep.m_a));
    let _ = writeln!(s, "a_inf               {}", fmt_f64(rep.a_inf));
    let _ = writeln!(s, "lambda (discrete)   {}", fmt_f64(rep.lambda));
    let _ = writeln!(s, "lambda (continuum)  {}", fmt_f64(rep.lambda_continuum));
    let adm = &rep.admissibility;
    let _ = writeln!(
        s,
        "b_max               {} (bound {}, admissible {}, strict_uc {})",
        fmt_f64(adm.b_max),
        fmt_f64(adm.bound),
        adm.admissible,
        adm.strict_uc
    );
    if let Some(p) = &rep.phi_params {
        let _ = writeln!(
            s,
            "ode                 eps0 {} C1 {} beta {} phi0 {} r0 {} C_T {}",
            p.eps0, p.c1, p.beta, fmt_f64(p.phi0), fmt_f64(p.r0), rep.config.ode.c_t
        );
    }
    let _ = writeln!(s, "steps               {} (halved {})", rep.steps, rep.halved_steps);
    let _ = writeln!(s, "E(0)                {}", fmt_f64(rep.e0));
    let _ = writeln!(s, "identity residual   {}", fmt_f64(rep.identity_residual_max));
    let _ = writeln!(s, "relative drift      {}", fmt_f64(rep.energy_drift));
    if let Some(env) = &rep.envelope {
        let _ = writeln!(
            s,
            "C_cal               {} (t_cal {}, max violation {})",
            fmt_f64(env.c_cal),
            env.t_cal,
            fmt_f64(env.max_violation)
        );
    }
    let _ = writeln!(
        s,
        "fitted exponent     {} on [{}, {}]",
        opt(rep.fitted_exponent),
        rep.fit_window[0],
        rep.fit_window[1]
    );
    if let Some(f) = &rep.ode_fit {
        let _ = writeln!(
            s,
            "ode exponent        {} on [{}, {}] (predicted {})",
            fmt_f64(f.exponent),
            f.window[0],
            f.window[1],
            opt(f.predicted)
        );
    }
    if let Some(l) = &rep.lower {
        let _ = writeln!(
            s,
            "lower bound         psi0 {} T0 {} violations {} min ratio {}",
            fmt_f64(l.psi0),
            l.t0_cal,
            l.violations,
            fmt_f64(l.min_ratio)
        );
    }
    s.push_str("verdicts\n");
    for v in &rep.verdicts {
        let _ = writeln!(s, "  {:<22}{:<16}{}", v.name, v.verdict.label(), v.detail);
    }
    let _ = writeln!(s, "overall             {}", if rep.passed() { "PASS" } else { "FAIL" });
    s
}

pub fn a2_summary(rep: &A2Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "beta            {}", rep.beta);
    let _ = writeln!(s, "r0              {}", fmt_f64(rep.r0));
    let _ = writeln!(
        s,
        "alpha0          {} ({:?}, slope {})",
        fmt_f64(rep.alpha0.value),
        rep.alpha0.status,
        fmt_f64(rep.alpha0.slope)
    );
    let _ = writeln!(
        s,
        "limits at 0     [{}] ok {}",
        rep.limits.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", "),
        rep.limits_ok
    );
    let _ = writeln!(
        s,
        "ineq2           ok {} worst {} at s = {}",
        rep.ineq2.ok,
        fmt_f64(rep.ineq2.worst_value),
        fmt_f64(rep.ineq2.worst_s)
    );
    let _ = writeln!(
        s,
        "ineq3           ok {} worst {} at s = {}",
        rep.ineq3.ok,
        fmt_f64(rep.ineq3.worst_value),
        fmt_f64(rep.ineq3.worst_s)
    );
    let _ = writeln!(
        s,
        "ratio bound     applies {} bounded {} alpha1 {}",
        rep.ratio_applies,
        rep.ratio_bounded,
        fmt_f64(rep.alpha1)
    );
    let _ = writeln!(s, "verdict         {}", if rep.verdict { "PASS" } else { "FAIL" });
    s
}

pub fn audit_summary(a: &PhiAudit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "horizon                 {}", a.horizon);
    let _ = writeln!(s, "increasing              {}", a.increasing);
    let _ = writeln!(s, "concave                 {}", a.concave);
    let _ = writeln!(s, "phi'(0)                 {}", fmt_f64(a.phi_prime0));
    let _ = writeln!(s, "phi'(T)                 {}", fmt_f64(a.phi_prime_end));
    let _ = writeln!(s, "slope limit             {}", fmt_f64(a.slope_limit));
    let _ = writeln!(s, "|phi''/phi'| decreasing {}", a.curvature_ratio_decreasing);
    let _ = writeln!(
        s,
        "int |phi''|             {} (limit {})",
        fmt_f64(a.int_abs_phi_pp),
        fmt_f64(a.int_abs_phi_pp_limit)
    );
    let _ = writeln!(
        s,
        "conjugate budget        {} (bound {}, ok {})",
        fmt_f64(a.budget),
        fmt_f64(a.budget_bound),
        a.budget_ok
    );
    s
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Energy CSV, decay CSV, summary and plot script for one experiment.
pub fn write_experiment(dir: &Path, rep: &ExperimentReport) -> Result<()> {
    let env = rep.envelope_series();
    let phi = rep.phi.as_ref().map(|p| p.values.as_slice());
    write_file(dir, "energy.csv", &energy_csv(&rep.records, phi, env.as_deref()))?;
    let times: Vec<f64> = rep.records.iter().map(|r| r.t).collect();
    let theta: Option<Vec<f64>> = rep.phi.as_ref().map(|p| p.values.iter().map(|v| 1.0 / v).collect());
    write_file(
        dir,
        "decay.csv",
        &decay_csv(
            &times,
            phi,
            theta.as_deref(),
            None,
            rep.psi.as_ref().map(|p| p.values.as_slice()),
        ),
    )?;
    write_file(dir, "summary.txt", &experiment_summary(rep))?;
    write_file(dir, "plot.gp", &gnuplot_script("energy.csv", &rep.law_name))
}
