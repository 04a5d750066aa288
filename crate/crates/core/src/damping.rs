//! Catalog of damping nonlinearities `g`, their certified growth constants,
//! the concave majorant `h0` of `s -> g(s) s` near the origin, and the
//! derivatives of the mass-rescaled inverse `h^{-1}(y) = m_a h0^{-1}(y / m_a)`
//! that drive the decay ODE.
//!
//! Every law is given by a catalog formula on `|s| <= s_star = 1` and
//! continued past `s_star` by its tangent line, so it is odd, nondecreasing
//! and linearly bounded at infinity. `h0` is continued past `y = 1` by its
//! tangent line in the same way.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Below this argument the super-exponential laws return their limit 0.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// `g(s) = s`.
    Linear,
    /// `g(s) = |s|^{p-1} s` near the origin, `p > 1`.
    Polynomial { p: f64 },
    /// `g(s) = s (ln(e + 1/|s|))^{-p}`, `p > 0`.
    LogWeakened { p: f64 },
    /// `g(s) = s^3 exp(-1/s^2)`.
    ExpOrigin,
    /// `g(s) = s^3 exp(-exp(1/s^2))`.
    DoubleExpOrigin,
    /// `g(s) = s^3` paired with `h0(y) = sqrt(2y)`, so that `h^{-1}(y) = y^2/2` for `m_a = 1`.
    QuadraticTest,
}

impl LawKind {
    pub fn name(&self) -> &'static str {
        match self {
            LawKind::Linear => "linear",
            LawKind::Polynomial { .. } => "polynomial",
            LawKind::LogWeakened { .. } => "log_weakened",
            LawKind::ExpOrigin => "exp_origin",
            LawKind::DoubleExpOrigin => "double_exp_origin",
            LawKind::QuadraticTest => "quadratic_test",
        }
    }
}

/// Shape of the concave majorant `h0` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Majorant {
    /// `h0(y) = (c y)^gamma`, inverse `y^{1/gamma} / c`.
    Power { c: f64, gamma: f64 },
    /// inverse `c^{-2} y^2 exp(-c/y)`.
    Exp { c: f64 },
    /// inverse `c^{-2} y^2 exp(-exp(c/y))`.
    DoubleExp { c: f64 },
}

/// A damping law with its certified constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingLaw {
    pub kind: LawKind,
    pub majorant: Majorant,
    /// `m y^2 <= g(y) y` for `|y| >= 1`.
    pub m: f64,
    /// `g(y) y <= M y^2` for `|y| >= 1`.
    pub big_m: f64,
    /// `g(y) y <= M0 y^2` for `|y| < 1`.
    pub m0: f64,
    /// `sup |g'|`.
    pub m1: f64,
    /// Domination constant of `h0(g(s) s) >= eps0 (s^2 + g(s)^2)` on `|s| <= 1`.
    pub eps0: f64,
    pub r0: f64,
    pub s_star: f64,
    // tangent data at s_star and at the h0 matching point
    g_star: f64,
    gp_star: f64,
    h0_at_one: f64,
    h0_slope_at_one: f64,
}

impl DampingLaw {
    /// Catalog law with its default majorant.
    pub fn new(kind: LawKind) -> Result<Self> {
        let majorant = match kind {
            LawKind::Linear | LawKind::LogWeakened { .. } => Majorant::Power {
                c: 1.0,
                gamma: 2.0 / 3.0,
            },
            LawKind::Polynomial { p } => Majorant::Power {
                c: 1.0,
                gamma: 2.0 / (p + 1.0),
            },
            LawKind::ExpOrigin => Majorant::Exp { c: 1.0 },
            LawKind::DoubleExpOrigin => Majorant::DoubleExp { c: 1.0 },
            LawKind::QuadraticTest => Majorant::Power { c: 2.0, gamma: 0.5 },
        };
        Self::with_majorant(kind, majorant)
    }

    pub fn linear() -> Self {
        Self::new(LawKind::Linear).expect("catalog law")
    }

    pub fn polynomial(p: f64) -> Result<Self> {
        Self::new(LawKind::Polynomial { p })
    }

    pub fn quadratic_test() -> Self {
        Self::new(LawKind::QuadraticTest).expect("catalog law")
    }

    /// Polynomial law whose majorant exponent is `gamma` (`p = 2/gamma - 1`).
    pub fn polynomial_with_gamma(gamma: f64) -> Result<Self> {
        Self::polynomial(2.0 / gamma - 1.0)
    }

    /// Law with an explicit majorant. `eps0` is certified as the minimum of
    /// `h0(g(s) s) / (s^2 + g(s)^2)` over a dense log-uniform sample of
    /// `(0, 1]` that includes `s = 1`. For every catalog law `g(s)/s` is
    /// nondecreasing on `(0, 1]`, so the minimum sits at `s = 1` and the
    /// sampled value is the closed form (e.g. `1/2` for polynomial laws).
    pub fn with_majorant(kind: LawKind, majorant: Majorant) -> Result<Self> {
        match kind {
            LawKind::Polynomial { p } if !(p > 1.0 && p.is_finite()) => {
                return Err(config_err(format!("polynomial law needs p > 1, got {p}")))
            }
            LawKind::LogWeakened { p } if !(p > 0.0 && p.is_finite()) => {
                return Err(config_err(format!("log_weakened law needs p > 0, got {p}")))
            }
            _ => {}
        }
        match majorant {
            Majorant::Power { c, gamma } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(config_err(format!("majorant scale c must be positive, got {c}")));
                }
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(config_err(format!("majorant exponent gamma must lie in (0, 1], got {gamma}")));
                }
            }
            Majorant::Exp { c } | Majorant::DoubleExp { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(config_err(format!("majorant scale c must be positive, got {c}")));
                }
            }
        }
        let s_star = 1.0;
        let g_star = core_g(kind, s_star);
        let gp_star = core_gp(kind, s_star);
        let h0_at_one = catalog_h0(majorant, 1.0);
        let h0_slope_at_one = 1.0 / catalog_inv(majorant, h0_at_one)[1];

        let mut law = Self {
            kind,
            majorant,
            m: g_star,
            big_m: gp_star.max(g_star),
            m0: g_star,
            m1: gp_star,
            eps0: 0.0,
            r0: 1.0,
            s_star,
            g_star,
            gp_star,
            h0_at_one,
            h0_slope_at_one,
        };
        let samples = log_uniform(1e-6, 1.0, 4001);
        law.m1 = samples
            .iter()
            .map(|&s| law.g_prime(s))
            .fold(gp_star, f64::max);
        law.eps0 = law.certify_eps0(&samples);
        Ok(law)
    }

    pub fn with_eps0(mut self, eps0: f64) -> Self {
        self.eps0 = eps0;
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    fn certify_eps0(&self, samples: &[f64]) -> f64 {
        let ratio = samples
            .iter()
            .filter_map(|&s| {
                let g = self.g(s);
                let w = g * s;
                if w < f64::MIN_POSITIVE * 1e6 {
                    return None;
                }
                Some(self.h0(w).ok()? / (s * s + g * g))
            })
            .fold(f64::INFINITY, f64::min);
        // strictly inside, so the equality point does not read as a violation
        ratio * (1.0 - 1e-12)
    }

    /// The damping nonlinearity, odd and nondecreasing on all of R.
    pub fn g(&self, s: f64) -> f64 {
        let a = s.abs();
        let mag = if a <= self.s_star {
            core_g(self.kind, a)
        } else {
            self.g_star + self.gp_star * (a - self.s_star)
        };
        if s < 0.0 {
            -mag
        } else {
            mag
        }
    }

    pub fn g_prime(&self, s: f64) -> f64 {
        let a = s.abs();
        if a <= self.s_star {
            core_gp(self.kind, a)
        } else {
            self.gp_star
        }
    }

    /// Concave majorant `h0`, tangent-extended beyond `y = 1`.
    pub fn h0(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain {
                what: "h0 requires a nonnegative argument",
                value: y,
                range: "[0, inf)".into(),
            });
        }
        if y <= 1.0 {
            Ok(catalog_h0(self.majorant, y))
        } else {
            Ok(self.h0_at_one + self.h0_slope_at_one * (y - 1.0))
        }
    }

    /// `[h0^{-1}, (h0^{-1})', (h0^{-1})'', (h0^{-1})''']` at `w >= 0`, for the
    /// inverse of the tangent-extended `h0`.
    pub fn h0_inv_derivs(&self, w: f64) -> [f64; 4] {
        if w <= self.h0_at_one {
            catalog_inv(self.majorant, w)
        } else {
            let slope = 1.0 / self.h0_slope_at_one;
            [1.0 + (w - self.h0_at_one) * slope, slope, 0.0, 0.0]
        }
    }

    /// `h0(1)`; the catalog inverse formula applies on `[0, h0(1)]`.
    pub fn h0_at_one(&self) -> f64 {
        self.h0_at_one
    }

    /// Power-type majorant data `(c, gamma)`, when the law has one.
    pub fn power_majorant(&self) -> Option<(f64, f64)> {
        match self.majorant {
            Majorant::Power { c, gamma } => Some((c, gamma)),
            _ => None,
        }
    }

    /// `h0(g(s) s) - eps0 (s^2 + g(s)^2)` minimized over `n_samples`
    /// log-uniform points of `(0, 1]`. Points where `g(s) s` is not a normal
    /// float (super-exponential laws near 0) are skipped.
    pub fn verify_h0_domination(&self, n_samples: usize) -> Result<f64> {
        if n_samples < 10 {
            return Err(config_err("verify_h0_domination needs at least 10 samples"));
        }
        let mut min_slack = f64::INFINITY;
        for s in log_uniform(1e-6, 1.0, n_samples) {
            let g = self.g(s);
            let w = g * s;
            if w < f64::MIN_POSITIVE * 1e6 {
                continue;
            }
            let slack = self.h0(w)? - self.eps0 * (s * s + g * g);
            min_slack = min_slack.min(slack);
        }
        Ok(min_slack)
    }

    /// `h^{-1}` for the given damping mass `m_a = int a dx`.
    pub fn h_inverse(&self, m_a: f64) -> Result<MassScaledInverse<'_>> {
        MassScaledInverse::new(self, m_a)
    }

    /// `h^{-1}(s) = g(sqrt s) sqrt s`, the inverse used by the 1D lower bound.
    pub fn lower_bound_inverse(&self) -> LowerBoundInverse<'_> {
        LowerBoundInverse { law: self }
    }
}

/// `n` points log-uniformly spaced on `[lo, hi]`, endpoints included.
pub(crate) fn log_uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn core_g(kind: LawKind, s: f64) -> f64 {
    match kind {
        LawKind::Linear => s,
        LawKind::Polynomial { p } => s.powf(p),
        LawKind::LogWeakened { p } => {
            if s == 0.0 {
                0.0
            } else {
                s * (E + 1.0 / s).ln().powf(-p)
            }
        }
        LawKind::ExpOrigin => {
            if s == 0.0 {
                0.0
            } else {
                s * s * s * (-1.0 / (s * s)).exp()
            }
        }
        LawKind::DoubleExpOrigin => {
            let u = 1.0 / (s * s);
            if !u.is_finite() {
                0.0
            } else {
                s * s * s * (-u.exp()).exp()
            }
        }
        LawKind::QuadraticTest => s * s * s,
    }
}

fn core_gp(kind: LawKind, s: f64) -> f64 {
    match kind {
        LawKind::Linear => 1.0,
        LawKind::Polynomial { p } => p * s.powf(p - 1.0),
        LawKind::LogWeakened { p } => {
            if s == 0.0 {
                return 0.0;
            }
            let l = (E + 1.0 / s).ln();
            l.powf(-p) + p * l.powf(-p - 1.0) / (E * s + 1.0)
        }
        LawKind::ExpOrigin => {
            if s == 0.0 {
                0.0
            } else {
                (3.0 * s * s + 2.0) * (-1.0 / (s * s)).exp()
            }
        }
        LawKind::DoubleExpOrigin => {
            let u = 1.0 / (s * s);
            if !u.is_finite() {
                return 0.0;
            }
            let big = u.exp();
            3.0 * s * s * (-big).exp() + 2.0 * (u - big).exp()
        }
        LawKind::QuadraticTest => 3.0 * s * s,
    }
}

fn catalog_h0(majorant: Majorant, y: f64) -> f64 {
    match majorant {
        Majorant::Power { c, gamma } => (c * y).powf(gamma),
        Majorant::Exp { .. } | Majorant::DoubleExp { .. } => {
            if y == 0.0 {
                return 0.0;
            }
            // invert the increasing catalog inverse by bisection
            let f = |x: f64| catalog_inv(majorant, x)[0];
            let mut hi = 1.0;
            while f(hi) < y {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

/// `u^k e^{-u}` evaluated in log space.
fn pow_exp(u: f64, k: f64, damp: f64) -> f64 {
    (k * u.ln() - damp).exp()
}

fn catalog_inv(majorant: Majorant, w: f64) -> [f64; 4] {
    match majorant {
        Majorant::Power { c, gamma } => {
            let k = 1.0 / gamma;
            // a zero coefficient wins over a 0^negative power
            let term = |coef: f64, e: f64| if coef == 0.0 { 0.0 } else { coef * w.powf(e) / c };
            [
                term(1.0, k),
                term(k, k - 1.0),
                term(k * (k - 1.0), k - 2.0),
                term(k * (k - 1.0) * (k - 2.0), k - 3.0),
            ]
        }
        Majorant::Exp { c } => {
            if w < UNDERFLOW_FLOOR {
                return [0.0; 4];
            }
            let u = c / w;
            let c2 = c * c;
            let t0 = (-u).exp();
            [
                w * w * t0 / c2,
                (2.0 * w + c) * t0 / c2,
                (2.0 * t0 + 2.0 * pow_exp(u, 1.0, u) + pow_exp(u, 2.0, u)) / c2,
                pow_exp(u, 4.0, u) / (c2 * c),
            ]
        }
        Majorant::DoubleExp { c } => {
            if w < UNDERFLOW_FLOOR {
                return [0.0; 4];
            }
            let u = c / w;
            let big = u.exp();
            let c2 = c * c;
            // u^k E^j e^{-E} with E = e^u, in log space
            let pe = |k: f64, j: f64| (k * u.ln() + j * u - big).exp();
            [
                w * w * pe(0.0, 0.0) / c2,
                (2.0 * w * pe(0.0, 0.0) + c * pe(0.0, 1.0)) / c2,
                (2.0 * pe(0.0, 0.0) + 2.0 * pe(1.0, 1.0) + pe(2.0, 2.0) - pe(2.0, 1.0)) / c2,
                (pe(4.0, 3.0) - 3.0 * pe(4.0, 2.0) + pe(4.0, 1.0)) / (c2 * c),
            ]
        }
    }
}

/// Interface shared by the two `h^{-1}` objects used in the decay calculus.
pub trait ConvexInverse {
    fn value(&self, y: f64) -> f64;
    fn d1(&self, y: f64) -> f64;

    /// Solve `d1(y) = x` for `y` in `[0, upper]` by monotone bisection.
    fn d1_inverse(&self, x: f64, upper: f64) -> Result<f64> {
        let top = self.d1(upper);
        if !(x >= 0.0 && x <= top) {
            return Err(Error::Domain {
                what: "inverse of (h^{-1})' evaluated outside its range",
                value: x,
                range: format!("[0, {top:e}]"),
            });
        }
        let (mut lo, mut hi) = (0.0_f64, upper);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.d1(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `h^{-1}(y) = m_a h0^{-1}(y / m_a)` with derivatives up to third order.
#[derive(Debug, Clone, Copy)]
pub struct MassScaledInverse<'a> {
    law: &'a DampingLaw,
    m_a: f64,
}

impl<'a> MassScaledInverse<'a> {
    pub fn new(law: &'a DampingLaw, m_a: f64) -> Result<Self> {
        if !(m_a > 0.0 && m_a.is_finite()) {
            return Err(config_err(format!("damping mass m_a must be positive, got {m_a}")));
        }
        Ok(Self { law, m_a })
    }

    pub fn law(&self) -> &DampingLaw {
        self.law
    }

    pub fn m_a(&self) -> f64 {
        self.m_a
    }

    /// `[h^{-1}, (h^{-1})', (h^{-1})'', (h^{-1})''']` at `y`.
    pub fn derivs(&self, y: f64) -> [f64; 4] {
        let [f0, f1, f2, f3] = self.law.h0_inv_derivs(y / self.m_a);
        [self.m_a * f0, f1, f2 / self.m_a, f3 / (self.m_a * self.m_a)]
    }

    pub fn d2(&self, y: f64) -> f64 {
        self.derivs(y)[2]
    }

    pub fn d3(&self, y: f64) -> f64 {
        self.derivs(y)[3]
    }

    /// True when `y / m_a` falls below [`UNDERFLOW_FLOOR`] for a
    /// super-exponential law, i.e. the returned values are the clamped limit 0.
    pub fn is_clamped(&self, y: f64) -> bool {
        !matches!(self.law.majorant, Majorant::Power { .. }) && y / self.m_a < UNDERFLOW_FLOOR
    }

    /// `((h^{-1})')^{-1}(x)` restricted to `(0, upper]`: closed form for
    /// power majorants on the catalog branch, bisection otherwise.
    pub fn d1_inverse_on(&self, x: f64, upper: f64) -> Result<f64> {
        let top = self.d1(upper);
        if !(x >= 0.0 && x <= top * (1.0 + 1e-14)) {
            return Err(Error::Domain {
                what: "inverse of (h^{-1})' evaluated outside its range",
                value: x,
                range: format!("[0, {top:e}]"),
            });
        }
        if let Majorant::Power { c, gamma } = self.law.majorant {
            let k = 1.0 / gamma;
            if k > 1.0 && upper / self.m_a <= self.law.h0_at_one {
                // (k/c) w^{k-1} = x
                let w = (x * c / k).powf(1.0 / (k - 1.0));
                return Ok((self.m_a * w).min(upper));
            }
        }
        self.d1_inverse(x.min(top), upper)
    }
}

impl ConvexInverse for MassScaledInverse<'_> {
    fn value(&self, y: f64) -> f64 {
        self.derivs(y)[0]
    }

    fn d1(&self, y: f64) -> f64 {
        self.derivs(y)[1]
    }
}

/// `h^{-1}(s) = g(sqrt s) sqrt s`, built directly from `g`. Deliberately a
/// different object from [`MassScaledInverse`].
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundInverse<'a> {
    law: &'a DampingLaw,
}

impl ConvexInverse for LowerBoundInverse<'_> {
    fn value(&self, s: f64) -> f64 {
        let r = s.sqrt();
        self.law.g(r) * r
    }

    fn d1(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.law.g_prime(0.0);
        }
        let r = s.sqrt();
        0.5 * (self.law.g_prime(r) + self.law.g(r) / r)
    }
}

/// `(h^{-1})'(y)` for damping mass `m_a`; `y` must be positive.
pub fn h_inv_prime(law: &DampingLaw, m_a: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain {
            what: "(h^{-1})' requires a positive argument",
            value: y,
            range: "(0, r0]".into(),
        });
    }
    Ok(law.h_inverse(m_a)?.d1(y))
}
