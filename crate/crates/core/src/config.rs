//! Run configuration: TOML file plus `DECAYLAB_` environment overrides.
//!
//! An override `DECAYLAB_SIM__T_END=100` sets `sim.t_end`; nested keys are
//! separated by a double underscore. Values are parsed as TOML scalars or
//! arrays, falling back to a plain string.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::damping::{DampingLaw, LawKind, Majorant};
use crate::error::{config_err, Result};
use crate::mesh::{bump_profile, coupling_bound, poincare_constant, CoefficientProfile, Mesh1D, PoincareMode};
use crate::wave_sim::{InitialData, SimConfig};

pub const ENV_PREFIX: &str = "DECAYLAB_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            n: default_n(),
        }
    }
}

/// A bump profile. For `b`, `admissible_fraction` may replace `amplitude`:
/// the amplitude is then that fraction of `(1 - delta) / lambda^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub admissible_fraction: Option<f64>,
    #[serde(default)]
    pub smoothing: f64,
}

impl ProfileConfig {
    fn zero() -> Self {
        Self {
            x_lo: 0.0,
            x_hi: 0.0,
            amplitude: Some(0.0),
            admissible_fraction: None,
            smoothing: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawConfig {
    #[serde(flatten)]
    pub kind: LawKind,
    /// Majorant scale, replacing the catalog default.
    #[serde(default)]
    pub c: Option<f64>,
    /// Majorant exponent for power-type majorants.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl LawConfig {
    pub fn build(&self) -> Result<DampingLaw> {
        let base = DampingLaw::new(self.kind)?;
        if self.c.is_none() && self.gamma.is_none() {
            return Ok(base);
        }
        let majorant = match base.majorant {
            Majorant::Power { c, gamma } => Majorant::Power {
                c: self.c.unwrap_or(c),
                gamma: self.gamma.unwrap_or(gamma),
            },
            _ if self.gamma.is_some() => {
                return Err(config_err(format!(
                    "law.gamma applies only to power-type majorants, not {}",
                    self.kind.name()
                )))
            }
            Majorant::Exp { c } => Majorant::Exp { c: self.c.unwrap_or(c) },
            Majorant::DoubleExp { c } => Majorant::DoubleExp { c: self.c.unwrap_or(c) },
        };
        DampingLaw::with_majorant(self.kind, majorant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Defaults to the mesh spacing.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    /// `eps0` of the decay ODE. Independent of the law's certified constant.
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default = "one")]
    pub c1: f64,
    /// Defaults per law; see [`default_beta`].
    #[serde(default)]
    pub beta: Option<f64>,
    /// Defaults to `phi0_factor` times the smallest admissible value.
    #[serde(default)]
    pub phi0: Option<f64>,
    #[serde(default = "default_phi0_factor")]
    pub phi0_factor: f64,
    /// Defaults to [`crate::decay_ode::natural_r0`].
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "one")]
    pub c_t: f64,
    #[serde(default = "half")]
    pub delta: f64,
}

impl Default for OdeSection {
    fn default() -> Self {
        Self {
            eps0: 1.0,
            c1: 1.0,
            beta: None,
            phi0: None,
            phi0_factor: default_phi0_factor(),
            r0: None,
            c_t: 1.0,
            delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "quarter")]
    pub t_cal_fraction: f64,
    #[serde(default = "tenth")]
    pub margin: f64,
    /// Window of the energy exponent fit; defaults to the second half of the run.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    /// If set, the fitted exponent must not exceed it.
    #[serde(default)]
    pub fit_exponent_max: Option<f64>,
    /// Window of the exponent fit of `1/phi` on the ODE side alone.
    #[serde(default)]
    pub ode_fit_window: Option<[f64; 2]>,
    /// Relative tolerance between the ODE-side exponent and its predicted value.
    #[serde(default = "default_ode_fit_tol")]
    pub ode_fit_rel_tol: f64,
    #[serde(default = "yes")]
    pub lower_bound: bool,
    #[serde(default = "quarter")]
    pub t0_cal_fraction: f64,
    /// Bound on `max |E(t_n) - E(0) + diss_cum(t_n)| / E(0)`.
    #[serde(default = "default_identity_tol")]
    pub identity_rel_tol: f64,
    #[serde(default)]
    pub x_diag: Option<XDiagConfig>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            t_cal_fraction: 0.25,
            margin: 0.1,
            fit_window: None,
            fit_exponent_max: None,
            ode_fit_window: None,
            ode_fit_rel_tol: default_ode_fit_tol(),
            lower_bound: true,
            t0_cal_fraction: 0.25,
            identity_rel_tol: default_identity_tol(),
            x_diag: None,
        }
    }
}

/// Weights of the X functional, e.g. `k >= max(8 C_T / delta, 64 ||a||_inf C_T^2 ||g'||_inf^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XDiagConfig {
    pub k: f64,
    pub k1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub a: Option<ProfileConfig>,
    #[serde(default)]
    pub b: Option<ProfileConfig>,
    pub law: LawConfig,
    #[serde(default)]
    pub initial: InitialData,
    pub sim: SimSection,
    #[serde(default)]
    pub ode: OdeSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn quarter() -> f64 {
    0.25
}
fn tenth() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}
fn default_n() -> usize {
    200
}
fn default_newton_tol() -> f64 {
    1e-12
}
fn default_newton_iter() -> usize {
    50
}
fn default_phi0_factor() -> f64 {
    1.01
}
fn default_ode_fit_tol() -> f64 {
    0.02
}
fn default_identity_tol() -> f64 {
    1e-8
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// `gamma / (1 - gamma)` for power majorants with `gamma < 1`
/// (`2 / (p - 1)` for polynomial laws), else 2.
pub fn default_beta(law: &DampingLaw) -> f64 {
    match law.majorant {
        Majorant::Power { gamma, .. } if gamma < 1.0 && !matches!(law.kind, LawKind::QuadraticTest) => {
            let b = gamma / (1.0 - gamma);
            if b > 1.0 {
                b
            } else {
                2.0
            }
        }
        _ => 2.0,
    }
}

/// Everything a run needs, built and cross-validated from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub mesh: Mesh1D,
    pub a: CoefficientProfile,
    pub b: CoefficientProfile,
    pub law: DampingLaw,
    pub sim: SimConfig,
    /// Discrete Poincare constant.
    pub lambda: f64,
    pub lambda_continuum: f64,
    pub beta: f64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        value
            .try_into::<RunConfig>()
            .map_err(|e| config_err(e.to_string()))
    }

    /// Reads `path`, then applies overrides from `env`.
    pub fn load<I>(path: &Path, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        Self::from_value(Self::load_value(path, env)?)
    }

    /// The TOML tree of `path` with environment overrides applied.
    pub fn load_value<I>(path: &Path, env: I) -> Result<toml::Value>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut value: toml::Value = toml::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        apply_env_overrides(&mut value, env)?;
        Ok(value)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let mesh = Mesh1D::new(self.mesh.length, self.mesh.n)?;
        let lambda = poincare_constant(&mesh, PoincareMode::Discrete);
        let lambda_continuum = poincare_constant(&mesh, PoincareMode::Continuum);
        if !(self.ode.delta > 0.0 && self.ode.delta < 1.0) {
            return Err(config_err(format!("ode.delta must lie in (0, 1), got {}", self.ode.delta)));
        }
        let build = |p: &Option<ProfileConfig>, name: &str| -> Result<CoefficientProfile> {
            let p = p.clone().unwrap_or_else(ProfileConfig::zero);
            let amplitude = match (p.amplitude, p.admissible_fraction) {
                (Some(_), Some(_)) => {
                    return Err(config_err(format!(
                        "{name}: give either amplitude or admissible_fraction, not both"
                    )))
                }
                (Some(a), None) => a,
                (None, Some(f)) => f * coupling_bound(lambda, self.ode.delta),
                (None, None) => return Err(config_err(format!("{name}: amplitude is required"))),
            };
            bump_profile(&mesh, p.x_lo, p.x_hi, amplitude, p.smoothing)
        };
        let a = build(&self.a, "a")?;
        let b = build(&self.b, "b")?;
        let law = self.law.build()?;
        let sim = SimConfig {
            dt: self.sim.dt.unwrap_or(mesh.h()),
            t_end: self.sim.t_end,
            newton_tol: self.sim.newton_tol,
            newton_max_iter: self.sim.newton_max_iter,
            record_every: self.sim.record_every,
        };
        sim.validate()?;
        if sim.t_end < sim.dt {
            return Err(config_err(format!(
                "sim.t_end = {} is shorter than one step dt = {}",
                sim.t_end, sim.dt
            )));
        }
        let beta = self.ode.beta.unwrap_or_else(|| default_beta(&law));
        let v = &self.verify;
        for (name, f) in [("t_cal_fraction", v.t_cal_fraction), ("t0_cal_fraction", v.t0_cal_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(config_err(format!("verify.{name} must lie in (0, 1), got {f}")));
            }
        }
        if !(v.margin >= 0.0) {
            return Err(config_err("verify.margin must be >= 0"));
        }
        for w in [v.fit_window, v.ode_fit_window].into_iter().flatten() {
            if !(w[0] >= 0.0 && w[1] > w[0]) {
                return Err(config_err(format!("fit window [{}, {}] is not an interval", w[0], w[1])));
            }
        }
        if let Some(w) = v.fit_window {
            if w[1] > sim.t_end * (1.0 + 1e-12) {
                return Err(config_err(format!(
                    "verify.fit_window ends at {} beyond sim.t_end = {}",
                    w[1], sim.t_end
                )));
            }
        }
        if !(self.ode.phi0_factor >= 1.0) {
            return Err(config_err("ode.phi0_factor must be >= 1"));
        }
        Ok(Resolved {
            mesh,
            a,
            b,
            law,
            sim,
            lambda,
            lambda_continuum,
            beta,
        })
    }
}

/// Applies `DECAYLAB_SECTION__KEY=value` pairs to a parsed TOML tree.
pub fn apply_env_overrides<I>(root: &mut toml::Value, env: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut pairs: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.len() > ENV_PREFIX.len())
        .collect();
    pairs.sort();
    for (key, raw) in pairs {
        let path: Vec<String> = key[ENV_PREFIX.len()..]
            .split("__")
            .map(|s| s.to_ascii_lowercase())
            .collect();
        set_path(root, &path, parse_scalar(&raw)).map_err(|e| config_err(format!("{key}: {e}")))?;
    }
    Ok(())
}

/// Sets `root[path[0]][path[1]]... = value`, creating tables on the way.
pub fn set_path(root: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    if path.is_empty() || path.iter().any(|s| s.is_empty()) {
        return Err(config_err(format!("malformed key path {path:?}")));
    }
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| config_err(format!("{part} is not inside a table")))?;
        if i + 1 == path.len() {
            table.insert(part.clone(), value);
            return Ok(());
        }
        node = table
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

/// Parses a dotted `section.key=value` assignment.
pub fn parse_assignment(text: &str) -> Result<(Vec<String>, toml::Value)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| config_err(format!("expected KEY=VALUE, got {text}")))?;
    let path: Vec<String> = k.trim().split('.').map(str::to_string).collect();
    Ok((path, parse_scalar(v.trim())))
}

pub fn parse_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [law]
        kind = "polynomial"
        p = 3.0

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
        modes = [[1, 1.0], [2, 0.5]]

        [sim]
        t_end = 10.0
    "#;

    #[test]
    fn parses_and_resolves_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.law.kind, LawKind::Polynomial { p: 3.0 });
        assert_eq!(cfg.mesh.n, 200);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.sim.dt, 1.0 / 201.0);
        let bound = coupling_bound(r.lambda, 0.5);
        assert!((r.b.sup() - 0.3 * bound).abs() < 1e-12);
        assert_eq!(r.beta, 2.0);
    }

    #[test]
    fn env_overrides_apply() {
        let mut v: toml::Value = toml::from_str(MINIMAL).unwrap();
        apply_env_overrides(
            &mut v,
            [
                ("DECAYLAB_SIM__T_END".to_string(), "42".to_string()),
                ("DECAYLAB_ODE__BETA".to_string(), "1.05".to_string()),
                ("DECAYLAB_LAW__KIND".to_string(), "linear".to_string()),
                ("OTHER".to_string(), "x".to_string()),
            ],
        )
        .unwrap();
        let cfg = RunConfig::from_value(v).unwrap();
        assert_eq!(cfg.sim.t_end, 42.0);
        assert_eq!(cfg.ode.beta, Some(1.05));
        assert_eq!(cfg.law.kind, LawKind::Linear);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml_str("[sim]\nt_end = 1.0").is_err());
        let bad = MINIMAL.replace("t_end = 10.0", "t_end = 10.0\nbogus = 1");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let both = MINIMAL.replace("admissible_fraction = 0.3", "admissible_fraction = 0.3\namplitude = 1.0");
        assert!(RunConfig::from_toml_str(&both).unwrap().resolve().is_err());
        let inverted = MINIMAL.replace("x_hi = 0.4", "x_hi = 0.05");
        assert!(RunConfig::from_toml_str(&inverted).unwrap().resolve().is_err());
        let short = MINIMAL.replace("t_end = 10.0", "t_end = 0.001");
        assert!(RunConfig::from_toml_str(&short).unwrap().resolve().is_err());
    }

    #[test]
    fn beta_defaults() {
        assert!((default_beta(&DampingLaw::linear()) - 2.0).abs() < 1e-12);
        assert!((default_beta(&DampingLaw::polynomial(2.0).unwrap()) - 2.0).abs() < 1e-12);
        assert!((default_beta(&DampingLaw::polynomial(1.5).unwrap()) - 4.0).abs() < 1e-12);
        assert_eq!(default_beta(&DampingLaw::polynomial(3.0).unwrap()), 2.0);
        assert_eq!(default_beta(&DampingLaw::quadratic_test()), 2.0);
    }
}
