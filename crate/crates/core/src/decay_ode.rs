//! Scalar decay calculus: the phi / theta / psi ODEs, the closed-form theta
//! bound, the convex conjugate `H*`, the A2 checker and the phi property audit.

use serde::{Deserialize, Serialize};

use crate::damping::{log_uniform, ConvexInverse, DampingLaw, LowerBoundInverse, MassScaledInverse};
use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiParams {
    pub eps0: f64,
    pub c1: f64,
    pub beta: f64,
    pub phi0: f64,
    pub r0: f64,
}

impl PhiParams {
    /// `eps0 / (2 C1)`.
    pub fn rate(&self) -> f64 {
        self.eps0 / (2.0 * self.c1)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("eps0", self.eps0)?;
        pos("C1", self.c1)?;
        pos("phi0", self.phi0)?;
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(config_err(format!("beta must be >= 1, got {}", self.beta)));
        }
        if !(self.r0 > 0.0 && self.r0 <= 1.0) {
            return Err(config_err(format!("r0 must lie in (0, 1], got {}", self.r0)));
        }
        Ok(())
    }

    /// `phi0^{-beta}`, the starting argument of `(h^{-1})'`.
    pub fn y0(&self) -> f64 {
        self.phi0.powf(-self.beta)
    }
}

/// Largest `r0 <= 1` on which `h^{-1}` stays on the law's own branch
/// (below the point where the majorant switches to its tangent line).
pub fn natural_r0(law: &DampingLaw, m_a: f64) -> f64 {
    (m_a * law.h0_at_one()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeKind {
    Phi,
    Theta,
    Psi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: OdeKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory is never empty")
    }

    /// Monotone in the direction expected for its kind.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| match self.kind {
            OdeKind::Phi => w[1] >= w[0],
            OdeKind::Theta | OdeKind::Psi => w[1] <= w[0],
        })
    }

    /// Linear interpolation at `t` (clamped to the end points).
    pub fn at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i >= self.times.len() {
            return self.last();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_err("time grid is empty"));
    }
    if !(grid[0] >= 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config_err("time grid must start at t >= 0 and be strictly increasing"));
    }
    Ok(())
}

/// Classical RK4 for the autonomous scalar ODE `y' = f(y)` from `y(grid[0]) = y0`,
/// sampled on `grid`, with substeps no longer than `max_substep`.
pub fn rk4_autonomous(
    f: impl Fn(f64) -> f64,
    y0: f64,
    grid: &[f64],
    max_substep: f64,
) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if !(max_substep > 0.0) {
        return Err(config_err("RK4 substep must be positive"));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    out.push(y);
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let n = (span / max_substep).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        for _ in 0..n {
            let k1 = f(y);
            let k2 = f(y + 0.5 * dt * k1);
            let k3 = f(y + 0.5 * dt * k2);
            let k4 = f(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Solver(format!("non-positive or non-finite value {y} at t = {}", w[1])));
        }
        out.push(y);
    }
    Ok(out)
}

/// Substep bound `0.01 / relative rate`; grid intervals shorter than that
/// are taken in one substep.
fn substep(rel_rate: f64) -> f64 {
    if rel_rate > 0.0 && rel_rate.is_finite() {
        0.01 / rel_rate
    } else {
        1.0
    }
}

/// Outcome of the initial-value condition on `phi(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiAdmissibility {
    pub admissible: bool,
    /// `(h^{-1})'(phi0^{-beta})`.
    pub lhs: f64,
    /// The smaller of the two upper bounds.
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub within_r0: bool,
}

/// Constants entering the admissibility of `phi(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityConstants {
    pub delta: f64,
    pub lambda: f64,
    pub c_t: f64,
    pub m: f64,
    pub big_m: f64,
}

impl AdmissibilityConstants {
    pub fn bound(&self, params: &PhiParams) -> f64 {
        let first = 2.0 * params.c1 * self.delta / params.eps0
            / (8.0 * self.c_t + 2.0 * self.lambda * self.lambda + 1.0);
        let second = 1.0 / params.eps0 / (1.0 / self.m + self.big_m * self.big_m);
        first.min(second)
    }
}

pub fn phi_initial_admissible(
    params: &PhiParams,
    inv: &MassScaledInverse<'_>,
    consts: &AdmissibilityConstants,
) -> Result<PhiAdmissibility> {
    params.validate()?;
    let y0 = params.y0();
    let lhs = inv.d1(y0);
    let rhs = consts.bound(params);
    let within_r0 = y0 <= params.r0;
    Ok(PhiAdmissibility {
        admissible: within_r0 && lhs < rhs,
        lhs,
        rhs,
        margin: rhs - lhs,
        within_r0,
    })
}

/// Smallest admissible `phi(0)` (to relative 1e-12), found by bisection on
/// `log phi0`; `(h^{-1})'(phi0^{-beta})` is decreasing in `phi0`.
pub fn min_admissible_phi0(
    params: &PhiParams,
    inv: &MassScaledInverse<'_>,
    consts: &AdmissibilityConstants,
) -> Result<f64> {
    let mut p = *params;
    let floor = params.r0.powf(-1.0 / params.beta);
    let ok = |p: &mut PhiParams, v: f64| -> Result<bool> {
        p.phi0 = v;
        Ok(phi_initial_admissible(p, inv, consts)?.admissible)
    };
    if ok(&mut p, floor)? {
        return Ok(floor);
    }
    let mut hi = floor * 2.0;
    while !ok(&mut p, hi)? {
        hi *= 2.0;
        if hi > 1e150 {
            return Err(Error::Analysis("no admissible phi(0) below 1e150".into()));
        }
    }
    let mut lo = hi / 2.0;
    while hi / lo - 1.0 > 1e-12 {
        let mid = (lo * hi).sqrt();
        if ok(&mut p, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `phi' = (eps0 / 2 C1) phi (h^{-1})'(phi^{-beta})`.
pub fn solve_phi(params: &PhiParams, inv: &MassScaledInverse<'_>, grid: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    let (rate, beta) = (params.rate(), params.beta);
    let step = substep(rate * inv.d1(params.y0()));
    solve_phi_with_substep(params, inv, grid, step, rate, beta)
}

fn solve_phi_with_substep(
    params: &PhiParams,
    inv: &MassScaledInverse<'_>,
    grid: &[f64],
    step: f64,
    rate: f64,
    beta: f64,
) -> Result<Trajectory> {
    let values = rk4_autonomous(|phi| rate * phi * inv.d1(phi.powf(-beta)), params.phi0, grid, step)?;
    Ok(Trajectory {
        kind: OdeKind::Phi,
        times: grid.to_vec(),
        values,
    })
}

/// `phi` with an explicit RK4 substep, for convergence studies.
pub fn solve_phi_substep(
    params: &PhiParams,
    inv: &MassScaledInverse<'_>,
    grid: &[f64],
    max_substep: f64,
) -> Result<Trajectory> {
    params.validate()?;
    solve_phi_with_substep(params, inv, grid, max_substep, params.rate(), params.beta)
}

/// `theta' = -C theta (h^{-1})'(theta^beta)`, with `C = eps0 / 2 C1` in the theorem.
pub fn solve_theta(
    c: f64,
    beta: f64,
    theta0: f64,
    r0: f64,
    inv: &MassScaledInverse<'_>,
    grid: &[f64],
) -> Result<Trajectory> {
    if !(c > 0.0) || !(beta >= 1.0) {
        return Err(config_err("theta ODE needs C > 0 and beta >= 1"));
    }
    if !(theta0 > 0.0 && theta0.powf(beta) <= r0) {
        return Err(config_err(format!(
            "theta(0) = {theta0} must satisfy 0 < theta(0)^beta <= r0 = {r0}"
        )));
    }
    let step = substep(c * inv.d1(theta0.powf(beta)));
    let values = rk4_autonomous(|th| -c * th * inv.d1(th.powf(beta)), theta0, grid, step)?;
    Ok(Trajectory {
        kind: OdeKind::Theta,
        times: grid.to_vec(),
        values,
    })
}

/// `psi' = -||a||_inf psi (h^{-1})'(psi)` with `h^{-1}(s) = g(sqrt s) sqrt s`.
pub fn solve_psi(a_inf: f64, law: &DampingLaw, psi0: f64, grid: &[f64]) -> Result<Trajectory> {
    if !(a_inf > 0.0 && psi0 > 0.0) {
        return Err(config_err("psi ODE needs ||a||_inf > 0 and psi(0) > 0"));
    }
    let inv: LowerBoundInverse<'_> = law.lower_bound_inverse();
    let step = substep(a_inf * inv.d1(psi0));
    let values = rk4_autonomous(|ps| -a_inf * ps * inv.d1(ps), psi0, grid, step)?;
    Ok(Trajectory {
        kind: OdeKind::Psi,
        times: grid.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub k0: f64,
    pub r0: f64,
}

/// Admissible interval for `k0`, given `theta(0)`.
pub fn k0_window(
    alpha: f64,
    beta: f64,
    c: f64,
    r0: f64,
    theta0: f64,
    inv: &MassScaledInverse<'_>,
) -> (f64, f64) {
    let num = alpha / (beta * c);
    (num / inv.d1(r0), num / inv.d1(theta0.powf(beta)))
}

/// `(((h^{-1})')^{-1}((alpha / beta C) / (t + k0)))^{1/beta}`.
pub fn theta_bound(t: f64, bp: &BoundParams, inv: &MassScaledInverse<'_>) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            what: "theta bound needs t >= 0",
            value: t,
            range: "[0, inf)".into(),
        });
    }
    let x = bp.alpha / (bp.beta * bp.c) / (t + bp.k0);
    let y = inv.d1_inverse_on(x, bp.r0)?;
    Ok(y.powf(1.0 / bp.beta))
}

/// Smallest `alpha` with `(h^{-1})'(s) <= alpha s (h^{-1})''(s)` on sampled
/// `(0, r0]`; `None` when `(h^{-1})''` vanishes somewhere.
pub fn estimate_alpha(inv: &MassScaledInverse<'_>, r0: f64) -> Option<f64> {
    let mut alpha: f64 = 0.0;
    for s in log_uniform(r0 * 1e-8, r0, 400) {
        if inv.is_clamped(s) {
            continue;
        }
        let [_, d1, d2, _] = inv.derivs(s);
        if d1 == 0.0 {
            continue;
        }
        if !(d2 > 0.0) {
            return None;
        }
        alpha = alpha.max(d1 / (s * d2));
    }
    (alpha > 0.0 && alpha.is_finite()).then_some(alpha)
}

/// `H*(x) = x y - h^{-1}(y)` with `y = ((h^{-1})')^{-1}(x)`, for `0 <= x <= (h^{-1})'(r0)`.
pub fn conjugate_eval(inv: &MassScaledInverse<'_>, r0: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let y = inv.d1_inverse_on(x, r0)?;
    Ok((x * y - inv.value(y)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alpha0Status {
    /// Converged to a positive finite limit.
    Positive,
    /// The sequence tends to 0.
    Zero,
    /// The sequence grows without bound.
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha0 {
    pub value: f64,
    pub status: Alpha0Status,
    /// Final log-log slope of `s (h^{-1})'(s^{-beta})` against `s`.
    pub slope: f64,
}

/// `lim_{s -> inf} s (h^{-1})'(s^{-beta})`, read off a geometric sequence.
pub fn estimate_alpha0(inv: &MassScaledInverse<'_>, beta: f64, r0: f64) -> Alpha0 {
    let s0 = 10.0 * r0.powf(-1.0 / beta);
    let seq: Vec<(f64, f64)> = (0..=24)
        .map(|j| {
            let s = s0 * 10f64.powf(0.5 * j as f64);
            (s, s * inv.d1(s.powf(-beta)))
        })
        .collect();
    let n = seq.len();
    let (s1, a1) = seq[n - 2];
    let (s2, a2) = seq[n - 1];
    if a2 == 0.0 || !a2.is_finite() && a2 < 0.0 {
        return Alpha0 {
            value: 0.0,
            status: Alpha0Status::Zero,
            slope: f64::NEG_INFINITY,
        };
    }
    let slope = if a1 > 0.0 {
        (a2 / a1).ln() / (s2 / s1).ln()
    } else {
        f64::INFINITY
    };
    if slope < -1e-3 {
        Alpha0 {
            value: 0.0,
            status: Alpha0Status::Zero,
            slope,
        }
    } else if slope > 1e-3 || !a2.is_finite() {
        Alpha0 {
            value: f64::INFINITY,
            status: Alpha0Status::Divergent,
            slope,
        }
    } else {
        let a0 = seq[n - 3].1;
        Alpha0 {
            value: aitken(a0, a1, a2),
            status: Alpha0Status::Positive,
            slope,
        }
    }
}

fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let den = x2 - 2.0 * x1 + x0;
    if den.abs() <= 1e-14 * (x0.abs() + x1.abs() + x2.abs()) {
        return x2;
    }
    x2 - (x2 - x1).powi(2) / den
}

/// A sampled check with its worst point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledCheck {
    pub ok: bool,
    /// Argument of the worst (most violating or closest) sample.
    pub worst_s: f64,
    /// Value of the normalized quantity at `worst_s`; `ok` iff within tolerance.
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub beta: f64,
    pub r0: f64,
    pub alpha0: Alpha0,
    /// Extrapolated limits of `h^{-1}`, `(h^{-1})'`, `s (h^{-1})''`, `s^2 (h^{-1})'''` at 0.
    pub limits: [f64; 4],
    pub limits_ok: bool,
    /// `(h^{-1})' <= beta s (h^{-1})''`.
    pub ineq2: SampledCheck,
    /// `(beta^2 - beta) s (h^{-1})'' + beta^2 s^2 (h^{-1})''' >= 0`.
    pub ineq3: SampledCheck,
    /// Whether the strict form of the second inequality holds on every sample.
    pub ratio_applies: bool,
    pub ratio_bounded: bool,
    /// Largest sampled ratio (the candidate `alpha_1`), 0 when not applicable.
    pub alpha1: f64,
    pub verdict: bool,
}

const A2_REL_TOL: f64 = 1e-9;

pub fn check_a2(inv: &MassScaledInverse<'_>, beta: f64, r0: f64, n_samples: usize) -> Result<A2Report> {
    if n_samples < 100 {
        return Err(config_err(format!("A2 check needs at least 100 samples, got {n_samples}")));
    }
    if !(beta > 1.0) || !(r0 > 0.0 && r0 <= 1.0) {
        return Err(config_err("A2 check needs beta > 1 and r0 in (0, 1]"));
    }

    // limits at 0 along y_k = r0 10^{-k}
    let seq: Vec<[f64; 4]> = (1..=14)
        .map(|k| {
            let y = r0 * 10f64.powi(-k);
            let [f0, f1, f2, f3] = inv.derivs(y);
            [f0, f1, y * f2, y * y * f3]
        })
        .collect();
    let n = seq.len();
    let scale = inv.derivs(r0);
    let scale = [scale[0], scale[1], r0 * scale[2], r0 * r0 * scale[3]];
    let mut limits = [0.0; 4];
    let mut limits_ok = true;
    for j in 0..4 {
        limits[j] = aitken(seq[n - 3][j], seq[n - 2][j], seq[n - 1][j]);
        let tol = 1e-6 * scale[j].abs().max(1.0);
        if !(limits[j].abs() <= tol) {
            limits_ok = false;
        }
    }

    let samples: Vec<f64> = log_uniform(r0 * 1e-10, r0, n_samples)
        .into_iter()
        .filter(|&s| !inv.is_clamped(s))
        .collect();

    let mut ineq2 = SampledCheck {
        ok: true,
        worst_s: r0,
        worst_value: f64::NEG_INFINITY,
    };
    let mut ineq3 = SampledCheck {
        ok: true,
        worst_s: r0,
        worst_value: f64::INFINITY,
    };
    let mut ratio_applies = true;
    let mut ratios = Vec::with_capacity(samples.len());
    for &s in &samples {
        let [_, d1, d2, d3] = inv.derivs(s);
        if d1 == 0.0 && d2 == 0.0 && d3 == 0.0 {
            continue;
        }
        let gap = beta * s * d2 - d1;
        // normalized excess of d1 over beta s d2 (> 0 violates)
        let v2 = -gap / (d1.abs() + (beta * s * d2).abs()).max(f64::MIN_POSITIVE);
        if v2 > ineq2.worst_value {
            ineq2.worst_value = v2;
            ineq2.worst_s = s;
        }
        let t1 = (beta * beta - beta) * s * d2;
        let t2 = beta * beta * s * s * d3;
        let v3 = (t1 + t2) / (t1.abs() + t2.abs()).max(f64::MIN_POSITIVE);
        if v3 < ineq3.worst_value {
            ineq3.worst_value = v3;
            ineq3.worst_s = s;
        }
        if gap > A2_REL_TOL * (d1.abs() + (beta * s * d2).abs()) {
            ratios.push((s, d1 * (t1 + t2) / gap));
        } else {
            ratio_applies = false;
        }
    }
    ineq2.ok = ineq2.worst_value <= A2_REL_TOL;
    ineq3.ok = ineq3.worst_value >= -A2_REL_TOL;

    let (ratio_bounded, alpha1) = if ratio_applies && !ratios.is_empty() {
        let finite = ratios.iter().all(|(_, r)| r.is_finite());
        let alpha1 = ratios.iter().map(|&(_, r)| r).fold(f64::NEG_INFINITY, f64::max);
        // growth of the ratio over the smallest two decades of s
        let cut = ratios[0].0 * 100.0;
        let low: Vec<_> = ratios.iter().filter(|(s, _)| *s <= cut).collect();
        let growing = match (low.first(), low.last()) {
            (Some(&&(sa, ra)), Some(&&(sb, rb))) if sb > sa && ra > 0.0 && rb > 0.0 => {
                (rb / ra).ln() / (sb / sa).ln() < -1e-3
            }
            _ => false,
        };
        (finite && !growing, alpha1)
    } else {
        (true, 0.0)
    };

    let verdict = limits_ok && ineq2.ok && ineq3.ok && ratio_bounded;
    Ok(A2Report {
        beta,
        r0,
        alpha0: estimate_alpha0(inv, beta, r0),
        limits,
        limits_ok,
        ineq2,
        ineq3,
        ratio_applies,
        ratio_bounded,
        alpha1,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiAudit {
    pub horizon: f64,
    pub increasing: bool,
    pub concave: bool,
    pub phi_prime0: f64,
    pub phi_prime_end: f64,
    /// `eps0 alpha0 / 2 C1`, the limit of `phi'`.
    pub slope_limit: f64,
    /// `|phi'' / phi'|` nonincreasing on the samples.
    pub curvature_ratio_decreasing: bool,
    /// Trapezoid value of `int_0^T |phi''|`.
    pub int_abs_phi_pp: f64,
    /// `phi'(0) - slope_limit`.
    pub int_abs_phi_pp_limit: f64,
    /// `(eps0 / 2 C1) int_0^T phi H*(2 C1 phi' / (eps0 phi))`.
    pub budget: f64,
    /// `phi(0)^{1 - beta} / (beta - 1)`.
    pub budget_bound: f64,
    pub budget_ok: bool,
}

/// Audit grid: 0 followed by `n` geometric points on `[t_min, t_big]`.
pub fn audit_grid(t_big: f64, n: usize) -> Vec<f64> {
    let t_min = (t_big * 1e-8).min(1e-4);
    let mut g = vec![0.0];
    g.extend(log_uniform(t_min, t_big, n));
    g
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

pub fn phi_property_audit(
    params: &PhiParams,
    inv: &MassScaledInverse<'_>,
    alpha0: &Alpha0,
    t_big: f64,
) -> Result<PhiAudit> {
    params.validate()?;
    if !(t_big > 0.0) {
        return Err(config_err("audit horizon must be positive"));
    }
    let grid = audit_grid(t_big, 4000);
    let traj = solve_phi(params, inv, &grid)?;
    let (rate, beta) = (params.rate(), params.beta);

    let mut dphi = Vec::with_capacity(grid.len());
    let mut ddphi = Vec::with_capacity(grid.len());
    let mut budget_integrand = Vec::with_capacity(grid.len());
    for &phi in &traj.values {
        let y = phi.powf(-beta);
        let [_, d1, d2, _] = inv.derivs(y);
        let p1 = rate * phi * d1;
        dphi.push(p1);
        ddphi.push(rate * p1 * (d1 - beta * y * d2));
        let x = p1 / (rate * phi);
        budget_integrand.push(rate * phi * conjugate_eval(inv, params.r0, x)?);
    }

    let slope_limit = if alpha0.status == Alpha0Status::Positive {
        rate * alpha0.value
    } else {
        0.0
    };
    let tol = 1e-12 * dphi[0].abs().max(1e-300);
    let abs_pp: Vec<f64> = ddphi.iter().map(|v| v.abs()).collect();
    let curv: Vec<f64> = ddphi
        .iter()
        .zip(&dphi)
        .map(|(pp, p)| if *p > 0.0 { (pp / p).abs() } else { 0.0 })
        .collect();
    let budget = trapezoid(&grid, &budget_integrand);
    let budget_bound = params.phi0.powf(1.0 - beta) / (beta - 1.0);
    Ok(PhiAudit {
        horizon: t_big,
        increasing: traj.is_monotone() && dphi.iter().all(|&v| v >= 0.0),
        concave: ddphi.iter().all(|&v| v <= tol),
        phi_prime0: dphi[0],
        phi_prime_end: *dphi.last().unwrap(),
        slope_limit,
        curvature_ratio_decreasing: curv.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300),
        int_abs_phi_pp: trapezoid(&grid, &abs_pp),
        int_abs_phi_pp_limit: dphi[0] - slope_limit,
        budget,
        budget_bound,
        budget_ok: budget <= budget_bound,
    })
}

/// `n` points evenly spaced on `[0, t_end]` (inclusive).
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}
