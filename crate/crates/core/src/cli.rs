//! Command-line front end.
//!
//! Exit codes: 0 when every verdict passes (or does not apply), 1 when a
//! verdict fails or a run aborts, 2 on configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::config::{default_beta, parse_assignment, set_path, LawConfig, RunConfig};
use crate::damping::DampingLaw;
use crate::decay_ode::{
    check_a2, estimate_alpha, estimate_alpha0, k0_window, natural_r0, phi_property_audit, solve_phi, solve_psi,
    solve_theta, theta_bound, uniform_grid, BoundParams, PhiParams,
};
use crate::error::{config_err, Error, Result};
use crate::report::{self, fmt_f64};
use crate::verify::{resolve_phi_params, run_experiment, ExperimentReport};
use crate::wave_sim::CoupledSystem;

#[derive(Debug, Parser)]
#[command(name = "decaylab", version, about = "Coupled damped wave simulation and decay-rate verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the wave simulation and write the energy series.
    Simulate(RunArgs),
    /// Solve the phi, theta and psi ODEs and audit phi.
    DecayOde(DecayArgs),
    /// Simulate, solve the decay ODE and check the envelopes.
    Verify(RunArgs),
    /// Check assumption A2 for a law.
    CheckA2(A2Args),
    /// Run `verify` over a grid of parameter values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LawArgs {
    /// Law kind, e.g. `polynomial`, `quadratic_test`.
    #[arg(long)]
    pub law: Option<String>,
    /// Law parameter `p` (polynomial, log_weakened).
    #[arg(long)]
    pub p: Option<f64>,
    /// Majorant exponent (power-type majorants).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Majorant scale.
    #[arg(long)]
    pub c: Option<f64>,
    /// Damping mass `m_a`.
    #[arg(long = "m-a")]
    pub m_a: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub r0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    /// Number of output samples on `[0, t_end]`.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    /// `||a||_inf` in the psi ODE.
    #[arg(long = "a-inf")]
    pub a_inf: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub psi0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct A2Args {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long = "n-samples", default_value_t = 400)]
    pub n_samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `section.key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long = "param", required = true)]
    pub params: Vec<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, env: Vec<(String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command, &env) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("decaylab: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cmd: Command, env: &[(String, String)]) -> Result<bool> {
    match cmd {
        Command::Simulate(a) => simulate(&a, env),
        Command::DecayOde(a) => decay_ode(&a, env),
        Command::Verify(a) => verify(&a, env),
        Command::CheckA2(a) => a2(&a, env),
        Command::Sweep(a) => sweep(&a, env),
    }
}

fn load(path: &Path, env: &[(String, String)]) -> Result<RunConfig> {
    RunConfig::load(path, env.iter().cloned())
}

fn out_dir(flag: &Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn simulate(a: &RunArgs, env: &[(String, String)]) -> Result<bool> {
    let cfg = load(&a.config, env)?;
    let r = cfg.resolve()?;
    let sys = CoupledSystem::new(&r.mesh, &r.a, &r.b, &r.law)?;
    let sim = sys.simulate(&cfg.initial.state(&r.mesh), &r.sim)?;
    let dir = out_dir(&a.out, Some(&cfg));
    report::write_file(&dir, "energy.csv", &report::energy_csv(&sim.records, None, None))?;
    report::write_file(&dir, "plot.gp", &report::gnuplot_script("energy.csv", r.law.kind.name()))?;
    let e0 = sim.records[0].e_uv;
    let last = sim.records.last().unwrap();
    let mut s = String::new();
    let _ = writeln!(s, "law                 {}", r.law.kind.name());
    let _ = writeln!(s, "steps               {} (halved {})", sim.steps, sim.halved_steps);
    let _ = writeln!(s, "E(0)                {}", fmt_f64(e0));
    let _ = writeln!(s, "E(t_end)            {}", fmt_f64(last.e_uv));
    let _ = writeln!(s, "dissipated          {}", fmt_f64(last.diss_cum));
    let _ = writeln!(s, "identity residual   {}", fmt_f64(sim.identity_residual_max));
    report::write_file(&dir, "summary.txt", &s)?;
    print!("{s}");
    Ok(true)
}

fn verify(a: &RunArgs, env: &[(String, String)]) -> Result<bool> {
    let cfg = load(&a.config, env)?;
    let rep = run_experiment(&cfg)?;
    let dir = out_dir(&a.out, Some(&cfg));
    report::write_experiment(&dir, &rep)?;
    print!("{}", report::experiment_summary(&rep));
    Ok(rep.passed())
}

/// Law and `m_a` from the config (if any), with command-line overrides.
fn law_from(args: &LawArgs, cfg: Option<&RunConfig>) -> Result<(DampingLaw, f64)> {
    let law = match (&args.law, cfg) {
        (Some(name), _) => {
            let mut t = toml::Table::new();
            t.insert("kind".into(), toml::Value::String(name.clone()));
            if let Some(p) = args.p {
                t.insert("p".into(), toml::Value::Float(p));
            }
            let mut lc: LawConfig = toml::Value::Table(t)
                .try_into()
                .map_err(|e| config_err(format!("law {name}: {e}")))?;
            lc.gamma = args.gamma;
            lc.c = args.c;
            lc.build()?
        }
        (None, Some(c)) => {
            let mut lc = c.law.clone();
            lc.gamma = args.gamma.or(lc.gamma);
            lc.c = args.c.or(lc.c);
            lc.build()?
        }
        (None, None) => return Err(config_err("give --law or --config")),
    };
    let m_a = match (args.m_a, cfg) {
        (Some(m), _) => m,
        (None, Some(c)) => {
            let r = c.resolve()?;
            r.a.mass(&r.mesh)
        }
        (None, None) => 1.0,
    };
    if !(m_a > 0.0) {
        return Err(config_err(format!("damping mass m_a must be positive, got {m_a}")));
    }
    Ok((law, m_a))
}

fn decay_ode(a: &DecayArgs, env: &[(String, String)]) -> Result<bool> {
    let cfg = a.config.as_deref().map(|p| load(p, env)).transpose()?;
    let (law, m_a) = law_from(&a.law, cfg.as_ref())?;
    let inv = law.h_inverse(m_a)?;
    let beta = a.law.beta.or(cfg.as_ref().and_then(|c| c.ode.beta)).unwrap_or_else(|| default_beta(&law));
    let r0 = a
        .law
        .r0
        .or(cfg.as_ref().and_then(|c| c.ode.r0))
        .unwrap_or_else(|| natural_r0(&law, m_a));
    let mut params = PhiParams {
        eps0: a.eps0.or(cfg.as_ref().map(|c| c.ode.eps0)).unwrap_or(1.0),
        c1: a.c1.or(cfg.as_ref().map(|c| c.ode.c1)).unwrap_or(1.0),
        beta,
        phi0: r0.powf(-1.0 / beta),
        r0,
    };
    if let Some(p) = a.phi0 {
        params.phi0 = p;
    } else if let Some(c) = &cfg {
        // same rule as `verify`, with the config's law and constants
        let mut c = c.clone();
        c.ode.beta = Some(beta);
        c.ode.r0 = Some(r0);
        c.ode.eps0 = params.eps0;
        c.ode.c1 = params.c1;
        let mut res = c.resolve()?;
        res.law = law.clone();
        params.phi0 = resolve_phi_params(&c, &res, &inv)?.0.phi0;
    }
    params.validate()?;
    if params.y0() > r0 * (1.0 + 1e-12) {
        return Err(config_err(format!(
            "phi0^(-beta) = {} exceeds r0 = {r0}",
            params.y0()
        )));
    }
    let t_end = a.t_end.or(cfg.as_ref().map(|c| c.sim.t_end)).unwrap_or(100.0);
    if !(t_end > 0.0) {
        return Err(config_err("t-end must be positive"));
    }
    let grid = uniform_grid(t_end, a.samples);
    let phi = solve_phi(&params, &inv, &grid)?;
    let theta0 = 1.0 / params.phi0;
    let theta = solve_theta(params.rate(), beta, theta0, r0.max(theta0.powf(beta)), &inv, &grid)?;
    let bound: Option<Vec<f64>> = estimate_alpha(&inv, r0).and_then(|alpha| {
        let c = params.rate();
        let (_, k0) = k0_window(alpha, beta, c, r0, theta0, &inv);
        let bp = BoundParams { alpha, beta, c, k0, r0 };
        grid.iter().map(|&t| theta_bound(t, &bp, &inv).ok()).collect()
    });
    let a_inf = a
        .a_inf
        .or_else(|| cfg.as_ref().and_then(|c| c.resolve().ok()).map(|r| r.a.sup()))
        .unwrap_or(1.0);
    let psi = if a_inf > 0.0 {
        Some(solve_psi(a_inf, &law, a.psi0, &grid)?)
    } else {
        None
    };
    let audit = phi_property_audit(&params, &inv, &estimate_alpha0(&inv, beta.max(1.0 + 1e-9), r0), t_end)?;

    let dir = out_dir(&a.out, cfg.as_ref());
    report::write_file(
        &dir,
        "decay.csv",
        &report::decay_csv(
            &grid,
            Some(&phi.values),
            Some(&theta.values),
            bound.as_deref(),
            psi.as_ref().map(|p| p.values.as_slice()),
        ),
    )?;
    let mut s = String::new();
    let _ = writeln!(s, "law                     {}", law.kind.name());
    let _ = writeln!(s, "m_a                     {}", fmt_f64(m_a));
    let _ = writeln!(
        s,
        "ode                     eps0 {} C1 {} beta {} phi0 {} r0 {}",
        params.eps0, params.c1, beta, fmt_f64(params.phi0), fmt_f64(r0)
    );
    let _ = writeln!(s, "phi(t_end)              {}", fmt_f64(phi.last()));
    s.push_str(&report::audit_summary(&audit));
    report::write_file(&dir, "audit.txt", &s)?;
    print!("{s}");
    Ok(audit.increasing && audit.concave && audit.budget_ok)
}

fn a2(a: &A2Args, env: &[(String, String)]) -> Result<bool> {
    let cfg = a.config.as_deref().map(|p| load(p, env)).transpose()?;
    let (law, m_a) = law_from(&a.law, cfg.as_ref())?;
    let inv = law.h_inverse(m_a)?;
    let beta = a.law.beta.or(cfg.as_ref().and_then(|c| c.ode.beta)).unwrap_or_else(|| default_beta(&law));
    let r0 = a
        .law
        .r0
        .or(cfg.as_ref().and_then(|c| c.ode.r0))
        .unwrap_or_else(|| natural_r0(&law, m_a));
    let rep = check_a2(&inv, beta, r0, a.n_samples)?;
    let mut s = format!("law             {}\nm_a             {}\n", law.kind.name(), fmt_f64(m_a));
    s.push_str(&report::a2_summary(&rep));
    if let Some(dir) = a.out.clone().or_else(|| cfg.as_ref().map(|c| c.output.dir.clone())) {
        report::write_file(&dir, "a2.txt", &s)?;
    }
    print!("{s}");
    Ok(rep.verdict)
}

struct SweepPoint {
    assignments: Vec<(String, toml::Value)>,
    config: RunConfig,
}

fn sweep_points(base: &toml::Value, params: &[String]) -> Result<Vec<SweepPoint>> {
    let mut axes: Vec<(Vec<String>, Vec<toml::Value>)> = Vec::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| config_err(format!("expected KEY=V1,V2,..., got {p}")))?;
        let values = v
            .split(',')
            .map(|x| parse_assignment(&format!("{k}={x}")).map(|(_, val)| val))
            .collect::<Result<Vec<_>>>()?;
        let path = parse_assignment(&format!("{k}=0"))?.0;
        axes.push((path, values));
    }
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for (_, vals) in &axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..vals.len()).map(move |i| {
                    let mut c = c.clone();
                    c.push(i);
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            let mut v = base.clone();
            let mut assignments = Vec::new();
            for ((path, vals), &i) in axes.iter().zip(&combo) {
                set_path(&mut v, path, vals[i].clone())?;
                assignments.push((path.join("."), vals[i].clone()));
            }
            Ok(SweepPoint {
                assignments,
                config: RunConfig::from_value(v)?,
            })
        })
        .collect()
}

fn sweep(a: &SweepArgs, env: &[(String, String)]) -> Result<bool> {
    let base = RunConfig::load_value(&a.config, env.iter().cloned())?;
    let base_cfg = RunConfig::from_value(base.clone())?;
    let points = sweep_points(&base, &a.params)?;
    for p in &points {
        p.config.resolve()?;
    }
    let root = out_dir(&a.out, Some(&base_cfg));
    std::fs::create_dir_all(&root)?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, points.len().max(1));

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<std::result::Result<ExperimentReport, Error>>>> =
        Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let dir = root.join(format!("point_{i:04}"));
                let res = run_experiment(&points[i].config)
                    .and_then(|rep| report::write_experiment(&dir, &rep).map(|_| rep));
                results.lock().expect("sweep worker panicked")[i] = Some(res);
            });
        }
    });

    let results = results.into_inner().expect("sweep worker panicked");
    let mut manifest = String::from("index,dir");
    if let Some(p) = points.first() {
        for (k, _) in &p.assignments {
            manifest.push(',');
            manifest.push_str(k);
        }
    }
    manifest.push_str(",passed,fitted_exponent,c_cal,max_violation,error\n");
    let mut all_ok = true;
    for (i, (p, res)) in points.iter().zip(results).enumerate() {
        let _ = write!(manifest, "{i},point_{i:04}");
        for (_, v) in &p.assignments {
            let _ = write!(manifest, ",{}", v.to_string().replace(',', ";"));
        }
        match res.expect("every point is processed") {
            Ok(rep) => {
                all_ok &= rep.passed();
                let env = rep.envelope.as_ref();
                let _ = writeln!(
                    manifest,
                    ",{},{},{},{},",
                    rep.passed(),
                    rep.fitted_exponent.map(fmt_f64).unwrap_or_default(),
                    env.map(|e| fmt_f64(e.c_cal)).unwrap_or_default(),
                    env.map(|e| fmt_f64(e.max_violation)).unwrap_or_default()
                );
            }
            Err(e) => {
                all_ok = false;
                let _ = writeln!(manifest, ",false,,,,{}", e.to_string().replace(',', ";"));
            }
        }
    }
    report::write_file(&root, "manifest.csv", &manifest)?;
    println!("{} points, {} workers, manifest {}", points.len(), workers, root.join("manifest.csv").display());
    Ok(all_ok)
}
