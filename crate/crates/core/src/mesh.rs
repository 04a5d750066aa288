//! Uniform Dirichlet grid on `(0, L)`, nonnegative coefficient profiles and
//! the coupling-smallness admissibility check.
//!
//! All discrete norms use the rectangle rule `h * sum` over interior nodes,
//! with ghost zeros at both endpoints. With this choice the gradient form
//! `h * sum_{i=0}^{n} ((w_{i+1} - w_i) / h)^2` equals `-<lap_h w, w>` exactly
//! for the three-point Laplacian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    length: f64,
    n: usize,
    h: f64,
}

impl Mesh1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(config_err(format!("mesh length must be positive, got {length}")));
        }
        if n < 2 {
            return Err(config_err(format!("mesh needs at least 2 interior nodes, got {n}")));
        }
        Ok(Self {
            length,
            n,
            h: length / (n + 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (1-based, `1..=n`).
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.length / (self.n + 1) as f64
    }

    /// Interior node coordinates `x_1 .. x_n`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (1..=self.n).map(|i| f(self.x(i))).collect()
    }

    /// `<f, g> = h * sum f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.h * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Weighted inner product `<w * f, g>`.
    pub fn weighted_inner(&self, w: &[f64], f: &[f64], g: &[f64]) -> f64 {
        self.h
            * w.iter()
                .zip(f)
                .zip(g)
                .map(|((w, a), b)| w * a * b)
                .sum::<f64>()
    }

    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.inner(f, f)
    }

    /// `||grad_h w||^2` with homogeneous Dirichlet ghost values.
    pub fn grad_norm_sq(&self, w: &[f64]) -> f64 {
        let n = w.len();
        let mut acc = w[0] * w[0] + w[n - 1] * w[n - 1];
        for i in 0..n - 1 {
            let d = w[i + 1] - w[i];
            acc += d * d;
        }
        acc / self.h
    }

    /// Three-point Dirichlet Laplacian `(w_{i-1} - 2 w_i + w_{i+1}) / h^2`.
    pub fn laplacian(&self, w: &[f64], out: &mut [f64]) {
        let n = w.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        for i in 0..n {
            let left = if i > 0 { w[i - 1] } else { 0.0 };
            let right = if i + 1 < n { w[i + 1] } else { 0.0 };
            out[i] = (left - 2.0 * w[i] + right) * inv_h2;
        }
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(config_err(format!(
                "{what} has length {len}, mesh has {} interior nodes",
                self.n
            )));
        }
        Ok(())
    }
}

/// A nonnegative coefficient sampled at interior nodes, with its support metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientProfile {
    pub values: Vec<f64>,
    pub x_lo: f64,
    pub x_hi: f64,
    pub amplitude: f64,
    pub smoothing: f64,
}

impl CoefficientProfile {
    pub fn zero(mesh: &Mesh1D) -> Self {
        Self {
            values: vec![0.0; mesh.n()],
            x_lo: 0.0,
            x_hi: 0.0,
            amplitude: 0.0,
            smoothing: 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Discrete mass `h * sum values`, the grid version of `int a dx`.
    pub fn mass(&self, mesh: &Mesh1D) -> f64 {
        mesh.h() * self.values.iter().sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Plateau of height `amplitude` on `[x_lo + sigma, x_hi - sigma]` with cubic
/// smoothstep ramps of width `sigma`, zero outside `[x_lo, x_hi]`.
/// `sigma = 0` gives the sharp indicator of `[x_lo, x_hi]`.
pub fn bump_profile(
    mesh: &Mesh1D,
    x_lo: f64,
    x_hi: f64,
    amplitude: f64,
    smoothing: f64,
) -> Result<CoefficientProfile> {
    let l = mesh.length();
    if !(0.0 <= x_lo && x_lo <= x_hi && x_hi <= l) {
        return Err(config_err(format!(
            "profile interval [{x_lo}, {x_hi}] must satisfy 0 <= x_lo <= x_hi <= {l}"
        )));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(config_err(format!("profile amplitude must be >= 0, got {amplitude}")));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(config_err(format!("profile smoothing must be >= 0, got {smoothing}")));
    }
    let values = mesh.sample(|x| {
        if x < x_lo || x > x_hi {
            return 0.0;
        }
        if smoothing == 0.0 {
            return amplitude;
        }
        let rise = smoothstep((x - x_lo) / smoothing);
        let fall = smoothstep((x_hi - x) / smoothing);
        amplitude * rise.min(fall)
    });
    Ok(CoefficientProfile {
        values,
        x_lo,
        x_hi,
        amplitude,
        smoothing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoincareMode {
    /// `L / pi`, from the first Dirichlet eigenvalue `(pi / L)^2`.
    Continuum,
    /// `1 / sqrt(mu_1)` with `mu_1 = (4 / h^2) sin^2(pi h / 2L)`.
    Discrete,
}

pub fn poincare_constant(mesh: &Mesh1D, mode: PoincareMode) -> f64 {
    match mode {
        PoincareMode::Continuum => mesh.length() / PI,
        PoincareMode::Discrete => 1.0 / first_dirichlet_eigenvalue(mesh).sqrt(),
    }
}

/// Smallest eigenvalue of the three-point Dirichlet `-lap_h`.
pub fn first_dirichlet_eigenvalue(mesh: &Mesh1D) -> f64 {
    let h = mesh.h();
    let s = (PI * h / (2.0 * mesh.length())).sin();
    4.0 / (h * h) * s * s
}

/// Largest admissible sup of `b`: `(1 - delta) / lambda^2`.
pub fn coupling_bound(lambda: f64, delta: f64) -> f64 {
    (1.0 - delta) / (lambda * lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub lambda: f64,
    pub delta: f64,
    pub b_max: f64,
    pub bound: f64,
    pub admissible: bool,
    /// Stricter unique-continuation branch `b_max <= 1 / (5 lambda^2)`; informational.
    pub strict_uc: bool,
}

pub fn check_b_admissible(
    b: &CoefficientProfile,
    lambda: f64,
    delta: f64,
) -> Result<AdmissibilityReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(config_err(format!("Poincare constant must be positive, got {lambda}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(config_err(format!("delta must lie in (0, 1), got {delta}")));
    }
    let b_max = b.sup();
    let bound = coupling_bound(lambda, delta);
    Ok(AdmissibilityReport {
        lambda,
        delta,
        b_max,
        bound,
        // equality counts as admissible; allow for rounding in (1 - delta) / lambda^2
        admissible: b_max <= bound * (1.0 + 1e-12),
        strict_uc: b_max <= 1.0 / (5.0 * lambda * lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_spacing_and_nodes() {
        let m = Mesh1D::new(1.0, 3).unwrap();
        assert_eq!(m.h(), 0.25);
        assert_eq!(m.nodes(), vec![0.25, 0.5, 0.75]);
        assert!((Mesh1D::new(1.0, 199).unwrap().h() - 0.005).abs() < 1e-15);
        assert_eq!(Mesh1D::new(2.0, 3).unwrap().h(), 0.5);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(Mesh1D::new(0.0, 10).is_err());
        assert!(Mesh1D::new(-1.0, 10).is_err());
        assert!(Mesh1D::new(1.0, 1).is_err());
        assert!(Mesh1D::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn bump_edge_cases() {
        let m = Mesh1D::new(1.0, 50).unwrap();
        let z = bump_profile(&m, 0.2, 0.6, 0.0, 0.05).unwrap();
        assert!(z.is_zero());
        let full = bump_profile(&m, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(full.values.iter().all(|&v| v == 1.0));
        assert!(bump_profile(&m, 0.6, 0.2, 1.0, 0.0).is_err());
        assert!(bump_profile(&m, -0.1, 0.2, 1.0, 0.0).is_err());
        assert!(bump_profile(&m, 0.1, 1.2, 1.0, 0.0).is_err());
    }

    #[test]
    fn bump_indicator_mass() {
        let m = Mesh1D::new(1.0, 199).unwrap();
        let p = bump_profile(&m, 0.1, 0.4, 2.0, 0.0).unwrap();
        let mass = p.mass(&m);
        assert!((mass - 2.0 * 0.3).abs() <= m.h() * 2.0 * (1.0 + 1e-9), "mass {mass}");
    }

    #[test]
    fn bump_smooth_shape() {
        let m = Mesh1D::new(1.0, 400).unwrap();
        let p = bump_profile(&m, 0.2, 0.6, 1.5, 0.05).unwrap();
        for (i, &v) in p.values.iter().enumerate() {
            let x = m.x(i + 1);
            assert!((0.0..=1.5).contains(&v));
            if !(0.2..=0.6).contains(&x) {
                assert_eq!(v, 0.0);
            }
            if (0.25 + 1e-12..=0.55 - 1e-12).contains(&x) {
                assert_eq!(v, 1.5);
            }
        }
        // monotone on the ramps
        let ramp_up: Vec<f64> = (0..m.n())
            .filter(|&i| m.x(i + 1) <= 0.25)
            .map(|i| p.values[i])
            .collect();
        assert!(ramp_up.windows(2).all(|w| w[0] <= w[1]));
        let ramp_down: Vec<f64> = (0..m.n())
            .filter(|&i| m.x(i + 1) >= 0.55)
            .map(|i| p.values[i])
            .collect();
        assert!(ramp_down.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn poincare_values() {
        let m = Mesh1D::new(1.0, 3).unwrap();
        assert!((poincare_constant(&m, PoincareMode::Continuum) - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
        let mu = first_dirichlet_eigenvalue(&m);
        assert!((mu - 9.372_583_002_030_48).abs() < 1e-12);
        assert!((poincare_constant(&m, PoincareMode::Discrete) - 0.326_640_741_219_094_1).abs() < 1e-12);
    }

    #[test]
    fn discrete_poincare_converges_from_above() {
        let mut prev = f64::INFINITY;
        for n in [3, 7, 15, 31, 63, 127, 255, 1023, 4095] {
            let lam = poincare_constant(&Mesh1D::new(1.0, n).unwrap(), PoincareMode::Discrete);
            assert!(lam > 1.0 / PI);
            assert!(lam < prev);
            prev = lam;
        }
        assert!((prev - 1.0 / PI).abs() < 1e-7);
    }

    #[test]
    fn eigenvector_is_exact() {
        let m = Mesh1D::new(1.0, 20).unwrap();
        let u = m.sample(|x| (PI * x).sin());
        let mut lap = vec![0.0; m.n()];
        m.laplacian(&u, &mut lap);
        let mu = first_dirichlet_eigenvalue(&m);
        for (l, ui) in lap.iter().zip(&u) {
            assert!((l + mu * ui).abs() < 1e-10);
        }
        // gradient form equals the Laplacian quadratic form
        assert!((m.grad_norm_sq(&u) + m.inner(&lap, &u)).abs() < 1e-12);
    }

    #[test]
    fn admissibility() {
        let m = Mesh1D::new(1.0, 50).unwrap();
        let lam = 1.0 / PI;
        let zero = CoefficientProfile::zero(&m);
        for delta in [0.01, 0.5, 0.99] {
            assert!(check_b_admissible(&zero, lam, delta).unwrap().admissible);
        }
        let edge = bump_profile(&m, 0.0, 1.0, 0.5 * PI * PI, 0.0).unwrap();
        assert!(check_b_admissible(&edge, lam, 0.5).unwrap().admissible);
        let over = bump_profile(&m, 0.0, 1.0, 6.0, 0.0).unwrap();
        let r = check_b_admissible(&over, lam, 0.5).unwrap();
        assert!(!r.admissible);
        assert_eq!(r.b_max, 6.0);
        assert!(check_b_admissible(&zero, lam, 1.0).is_err());
        assert!(check_b_admissible(&zero, 0.0, 0.5).is_err());
    }
}
