//! The change of variables `u = g(v)` that turns the quasilinear problem into
//! a semilinear one.
//!
//! `g` is the odd solution of `g'(t) = 1 / sqrt(1 + 2 g(t)^2)`, `g(0) = 0`. Its
//! inverse is the antiderivative of `sqrt(1 + 2 s^2)`, which has the closed form
//!
//! ```text
//! g⁻¹(u) = u sqrt(1 + 2u²) / 2 + asinh(√2 u) / (2√2)
//! ```
//!
//! so `g` itself is evaluated by inverting that formula.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Below this magnitude `g` is evaluated from its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Anything that can play the role of `g` in the dual formulation.
pub trait ChangeOfVariables {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn inverse(&self, u: f64) -> f64;
}

/// The dual transform with `κ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTransform {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for DualTransform {
    fn default() -> Self {
        Self {
            newton_tol: 4.0 * f64::EPSILON,
            newton_max_iter: 100,
        }
    }
}

impl DualTransform {
    pub fn g_inverse(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::Domain(format!("g_inverse of non-finite value {u}")));
        }
        Ok(g_inverse_closed_form(u))
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("g of non-finite value {t}")));
        }
        let a = t.abs();
        let magnitude = if a < SERIES_CUTOFF {
            let a2 = a * a;
            a * (1.0 - a2 / 3.0 + 13.0 * a2 * a2 / 30.0)
        } else {
            self.solve_positive(a)?
        };
        Ok(magnitude.copysign(t))
    }

    pub fn g_prime(&self, t: f64) -> Result<f64> {
        let g = self.g(t)?;
        Ok(1.0 / (1.0 + 2.0 * g * g).sqrt())
    }

    /// Solves `g⁻¹(u) = t` for `t > 0` by Newton iteration from the right.
    ///
    /// `g⁻¹` is convex on `[0, ∞)`, so Newton started where `g⁻¹(u) ≥ t`
    /// decreases monotonically onto the root. The bracket `[0, min(t, 2^{1/4}√t)]`
    /// catches any step that would leave it and falls back to bisection.
    fn solve_positive(&self, t: f64) -> Result<f64> {
        let mut lo = 0.0_f64;
        let mut hi = t.min(2f64.powf(0.25) * t.sqrt());
        // Make sure the upper end really is above the root.
        while g_inverse_closed_form(hi) < t {
            hi *= 1.0 + 1e-12;
            hi += f64::MIN_POSITIVE;
        }
        let mut u = hi;
        for _ in 0..self.newton_max_iter {
            let residual = g_inverse_closed_form(u) - t;
            if residual == 0.0 {
                return Ok(u);
            }
            if residual > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let mut next = u - residual / (1.0 + 2.0 * u * u).sqrt();
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= self.newton_tol * u.abs() {
                return Ok(next);
            }
            u = next;
        }
        Err(Error::Numeric(format!(
            "Newton inversion of g did not converge for t = {t} within {} iterations",
            self.newton_max_iter
        )))
    }
}

impl ChangeOfVariables for DualTransform {
    fn value(&self, t: f64) -> f64 {
        self.g(t).unwrap_or(f64::NAN)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.g_prime(t).unwrap_or(f64::NAN)
    }

    fn inverse(&self, u: f64) -> f64 {
        self.g_inverse(u).unwrap_or(f64::NAN)
    }
}

/// The identity map; plugging it in turns the dual problem into the classical
/// semilinear scalar-field equation. Used only to calibrate the oracles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Identity;

impl ChangeOfVariables for Identity {
    fn value(&self, t: f64) -> f64 {
        t
    }

    fn derivative(&self, _t: f64) -> f64 {
        1.0
    }

    fn inverse(&self, u: f64) -> f64 {
        u
    }
}

fn g_inverse_closed_form(u: f64) -> f64 {
    let a = u.abs();
    let s = (1.0 + 2.0 * a * a).sqrt();
    let v = 0.5 * a * s + (SQRT_2 * a).asinh() / (2.0 * SQRT_2);
    v.copysign(u)
}

/// Log-spaced sample covering `[1e-8, 1e8]`, `per_decade` points per decade,
/// mirrored to negative values.
pub fn default_sample(per_decade: usize) -> Vec<f64> {
    let n = 16 * per_decade;
    let positive: Vec<f64> = (0..=n)
        .map(|i| 10f64.powf(-8.0 + 16.0 * i as f64 / n as f64))
        .collect();
    let mut out: Vec<f64> = positive.iter().rev().map(|t| -t).collect();
    out.extend(positive);
    out
}

/// One line of the property report.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyItem {
    pub label: String,
    pub description: &'static str,
    /// Worst-case margin; nonnegative (up to the item tolerance) means the property holds.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub items: Vec<PropertyItem>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&PropertyItem> {
        self.items.iter().filter(|i| !i.passed).collect()
    }

    pub fn item(&self, label: &str) -> Option<&PropertyItem> {
        self.items.iter().find(|i| i.label == label)
    }

    fn push(&mut self, label: &str, description: &'static str, margin: f64, tolerance: f64) {
        self.items.push(PropertyItem {
            label: label.to_string(),
            description,
            margin,
            passed: margin.is_finite() && margin >= -tolerance,
        });
    }
}

/// Pointwise items tolerate this much negative margin (rounding).
pub const POINTWISE_TOLERANCE: f64 = 1e-12;
/// Asymptotic limits are checked to this accuracy at the sample extremes.
pub const ASYMPTOTIC_TOLERANCE: f64 = 1e-3;
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-10;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

/// Evaluates the thirteen listed properties of `g`, plus the round trip and the
/// closed-form check of `g⁻¹`, on `sample`.
pub fn property_suite<T: ChangeOfVariables + ?Sized>(transform: &T, sample: &[f64]) -> PropertyReport {
    let mut sample: Vec<f64> = sample.iter().copied().filter(|t| t.is_finite()).collect();
    sample.sort_by(f64::total_cmp);
    sample.dedup();
    let positive: Vec<f64> = sample.iter().copied().filter(|&t| t > 0.0).collect();
    let nonzero: Vec<f64> = sample.iter().copied().filter(|&t| t != 0.0).collect();
    let g = |t: f64| transform.value(t);
    let gp = |t: f64| transform.derivative(t);
    let quarter = 2f64.powf(0.25);

    let mut report = PropertyReport::default();

    // (1) smooth, uniquely defined, invertible: odd and strictly increasing on the sample.
    let mut m1 = f64::INFINITY;
    for w in sample.windows(2) {
        let (a, b) = (g(w[0]), g(w[1]));
        m1 = m1.min((b - a) / (a.abs() + b.abs()).max(f64::MIN_POSITIVE));
    }
    for &t in &sample {
        m1 = m1.min(-(g(-t) + g(t)).abs());
    }
    report.push("1", "g is odd and strictly increasing (invertible)", m1, 0.0);

    let m2 = sample.iter().map(|&t| 1.0 - gp(t).abs()).fold(f64::INFINITY, f64::min);
    report.push("2", "|g'(t)| <= 1", m2, POINTWISE_TOLERANCE);

    let m3 = nonzero
        .iter()
        .map(|&t| (t.abs() - g(t).abs()) / t.abs())
        .fold(f64::INFINITY, f64::min);
    report.push("3", "|g(t)| <= |t|", m3, POINTWISE_TOLERANCE);

    let t_small = positive.first().copied().unwrap_or(1e-8);
    let m4 = ASYMPTOTIC_TOLERANCE
        - [t_small, -t_small]
            .iter()
            .map(|&t| (g(t) / t - 1.0).abs())
            .fold(0.0, f64::max);
    report.push("4", "g(t)/t -> 1 as t -> 0", m4, 0.0);

    let t_large = positive.last().copied().unwrap_or(1e8);
    let m5 = ASYMPTOTIC_TOLERANCE - (g(t_large) / t_large.sqrt() - quarter).abs();
    report.push("5", "g(t)/sqrt(t) -> 2^(1/4) as t -> +inf", m5, 0.0);

    let mut m6 = f64::INFINITY;
    for &t in &positive {
        let (gv, tg) = (g(t), t * gp(t));
        m6 = m6.min((tg - 0.5 * gv) / gv).min((gv - tg) / gv);
    }
    report.push("6", "g(t)/2 <= t g'(t) <= g(t) for t > 0", m6, POINTWISE_TOLERANCE);

    let m7 = nonzero
        .iter()
        .map(|&t| {
            let bound = quarter * t.abs().sqrt();
            (bound - g(t).abs()) / bound
        })
        .fold(f64::INFINITY, f64::min);
    report.push("7", "|g(t)| <= 2^(1/4) |t|^(1/2)", m7, POINTWISE_TOLERANCE);

    let m8 = nonzero
        .iter()
        .map(|&t| {
            let gv = g(t);
            (gv * gv - gv * gp(t) * t) / (gv * gv)
        })
        .fold(f64::INFINITY, f64::min);
    report.push("8", "g(t)^2 - g(t) g'(t) t >= 0", m8, POINTWISE_TOLERANCE);

    // (9) lower bound constant, estimated from the sample.
    let c9 = nonzero
        .iter()
        .map(|&t| {
            let a = t.abs();
            if a <= 1.0 {
                g(t).abs() / a
            } else {
                g(t).abs() / a.sqrt()
            }
        })
        .fold(f64::INFINITY, f64::min);
    report.push("9", "g(t) >= C|t| (|t|<=1), C|t|^(1/2) (|t|>1) for some C > 0", c9 - 1e-9, 0.0);

    let m10 = sample
        .iter()
        .map(|&t| std::f64::consts::FRAC_1_SQRT_2 - (g(t) * gp(t)).abs())
        .fold(f64::INFINITY, f64::min);
    report.push("10", "|g(t) g'(t)| <= 1/sqrt(2)", m10, POINTWISE_TOLERANCE);

    let ratio11 = |t: f64| g(t) * gp(t) / t;
    let m11 = positive
        .windows(2)
        .map(|w| (ratio11(w[0]) - ratio11(w[1])) / ratio11(w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    report.push("11", "g(t) g'(t) / t decreasing for t > 0", m11, POINTWISE_TOLERANCE);

    let ratio12 = |t: f64| g(t).powi(3) * gp(t) / t;
    let m12 = positive
        .windows(2)
        .map(|w| (ratio12(w[1]) - ratio12(w[0])) / ratio12(w[1]).abs())
        .fold(f64::INFINITY, f64::min);
    report.push("12", "g(t)^3 g'(t) / t increasing for t > 0 (p = 3)", m12, POINTWISE_TOLERANCE);

    // (13) on a grid of (t, r) pairs.
    let factors: Vec<f64> = (-12..=12).map(|j| 10f64.powf(j as f64 / 3.0)).collect();
    let mut c13 = f64::INFINITY;
    for &t in nonzero.iter().step_by(4) {
        let g2 = g(t).powi(2);
        for &r in &factors {
            let rt = r * t;
            if !rt.is_finite() || rt.abs() > 1e12 || rt.abs() < 1e-12 {
                continue;
            }
            let lhs = g(rt).powi(2);
            let c = if r >= 1.0 { lhs / (r * g2) } else { lhs / (r * r * g2) };
            c13 = c13.min(c);
        }
    }
    report.push("13", "g(rt)^2 >= C r g(t)^2 (r>=1), C r^2 g(t)^2 (r<=1) for some C > 0", c13 - 1e-9, 0.0);

    let worst_round_trip = sample
        .iter()
        .map(|&u| (g(transform.inverse(u)) - u).abs() / (1.0 + u.abs()))
        .fold(0.0, f64::max);
    report.push("round-trip", "|g(g^-1(u)) - u| <= 1e-10 (1 + |u|)", ROUND_TRIP_TOLERANCE - worst_round_trip, 0.0);

    report.push(
        "closed-form",
        "g^-1 agrees with quadrature of sqrt(1 + 2s^2) to 1e-12 relative",
        CLOSED_FORM_TOLERANCE - closed_form_discrepancy(transform, &positive),
        0.0,
    );
    report
}

/// Largest relative gap between `inverse(u)` and a cumulative adaptive quadrature
/// of `sqrt(1 + 2 s^2)` over the sorted positive sample.
fn closed_form_discrepancy<T: ChangeOfVariables + ?Sized>(transform: &T, positive: &[f64]) -> f64 {
    let integrand = |s: f64| (1.0 + 2.0 * s * s).sqrt();
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut worst = 0.0_f64;
    for &u in positive {
        // Piece tolerance relative to the running total keeps the sum within 1e-14.
        let scale = (u - prev) * integrand(u);
        match adaptive_simpson(integrand, prev, u, 1e-15 * scale.max(f64::MIN_POSITIVE)) {
            Ok(piece) => acc += piece,
            Err(_) => return f64::INFINITY,
        }
        prev = u;
        worst = worst.max((transform.inverse(u) - acc).abs() / acc.abs());
    }
    worst
}
