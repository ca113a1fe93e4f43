//! Nonlinearities `h` under the classical existence conditions (odd, `h(t) ~ -mt`
//! near 0, subcritical growth, `H(ξ₀) > 0` somewhere) and the positive/negative split used by
//! the energy estimates.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::transform::ChangeOfVariables;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Primitive {
    ClosedForm(ScalarFn),
    Quadrature,
}

/// An odd nonlinearity `h` with primitive `H`, the limit constant
/// `m = -lim_{t→0} h(t)/t` and a witness `ξ₀` with `H(ξ₀) > 0`.
#[derive(Clone)]
pub struct BLNonlinearity {
    name: String,
    h: ScalarFn,
    primitive: Primitive,
    m: f64,
    xi0: f64,
    kappa: f64,
}

impl fmt::Debug for BLNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BLNonlinearity")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("xi0", &self.xi0)
            .field("kappa", &self.kappa)
            .field(
                "primitive",
                &match self.primitive {
                    Primitive::ClosedForm(_) => "closed form",
                    Primitive::Quadrature => "quadrature",
                },
            )
            .finish()
    }
}

/// `(3N + 2) / (N - 2)`, the exclusive upper bound on the power growth of `h`.
pub fn growth_exponent_bound(n: usize) -> f64 {
    let n = n as f64;
    (3.0 * n + 2.0) / (n - 2.0)
}

/// `2·2* - 1 = (3N + 2) / (N - 2)`; `h(t) / t^q` must vanish at infinity.
fn critical_power(n: usize) -> f64 {
    growth_exponent_bound(n)
}

impl BLNonlinearity {
    /// A user-supplied nonlinearity whose primitive is computed by quadrature.
    pub fn new<F>(name: &str, h: F, m: f64, xi0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::validate_constants(m, xi0)?;
        Ok(Self {
            name: name.to_string(),
            h: Arc::new(h),
            primitive: Primitive::Quadrature,
            m,
            xi0,
            kappa: 1.0,
        })
    }

    /// A user-supplied nonlinearity with a closed-form primitive.
    pub fn with_primitive<F, P>(name: &str, h: F, primitive: P, m: f64, xi0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::validate_constants(m, xi0)?;
        Ok(Self {
            name: name.to_string(),
            h: Arc::new(h),
            primitive: Primitive::ClosedForm(Arc::new(primitive)),
            m,
            xi0,
            kappa: 1.0,
        })
    }

    fn validate_constants(m: f64, xi0: f64) -> Result<()> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Validation(format!("(h2): m must be positive, got {m}")));
        }
        if !(xi0.is_finite() && xi0 > 0.0) {
            return Err(Error::Validation(format!("(h4): xi0 must be positive, got {xi0}")));
        }
        Ok(())
    }

    /// `h(t) = |t|^{p-1} t - m t`, valid for `1 < p < (3N+2)/(N-2)`.
    pub fn model_power(p: f64, m: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Validation(format!("dimension N = {n} must be at least 3")));
        }
        let bound = growth_exponent_bound(n);
        if !(p > 1.0 && p < bound) {
            return Err(Error::Validation(format!(
                "(h3''): exponent p = {p} must satisfy 1 < p < (3N+2)/(N-2) = {bound}"
            )));
        }
        let xi0 = 1.1 * ((p + 1.0) * m / 2.0).powf(1.0 / (p - 1.0));
        Self::with_primitive(
            &format!("power(p={p}, m={m})"),
            move |t: f64| t.abs().powf(p - 1.0) * t - m * t,
            move |t: f64| t.abs().powf(p + 1.0) / (p + 1.0) - 0.5 * m * t * t,
            m,
            xi0,
        )
    }

    /// `h(t) = t³/(1 + t²) - m t` for `0 < m < 1`: cubic near zero, saturating to
    /// linear growth.
    pub fn saturable(m: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::Validation(format!(
                "(h4): saturable nonlinearity needs 0 < m < 1, got {m}"
            )));
        }
        let primitive = move |t: f64| {
            let t2 = t * t;
            0.5 * (1.0 - m) * t2 - 0.5 * t2.ln_1p()
        };
        let mut xi0 = 1.0;
        while primitive(xi0) <= 0.0 {
            xi0 *= 2.0;
        }
        Self::with_primitive(
            &format!("saturable(m={m})"),
            move |t: f64| t * t * t / (1.0 + t * t) - m * t,
            primitive,
            m,
            xi0,
        )
    }

    /// Reduction of `-Δu - (κ/2) u Δ(u²) = h(u)` to `κ = 1` through `w = √κ u`:
    /// `h_κ(w) = √κ h(w/√κ)`, `H_κ(w) = κ H(w/√κ)`.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Validation(format!("kappa must be positive, got {kappa}")));
        }
        if kappa == 1.0 {
            return Ok(self.clone());
        }
        let sk = kappa.sqrt();
        let inner = self.clone();
        let h = self.h.clone();
        Ok(Self {
            name: format!("{} [kappa={kappa}]", self.name),
            h: Arc::new(move |w: f64| sk * h(w / sk)),
            primitive: Primitive::ClosedForm(Arc::new(move |w: f64| kappa * inner.primitive(w / sk))),
            m: self.m,
            xi0: self.xi0 * sk,
            kappa: self.kappa * kappa,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// Accumulated `κ` of the reduction wrapper (1 for an unwrapped nonlinearity).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn has_closed_form_primitive(&self) -> bool {
        matches!(self.primitive, Primitive::ClosedForm(_))
    }

    #[inline]
    pub fn h(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    /// `H(t) = ∫₀ᵗ h`. Quadrature-backed primitives return NaN if the quadrature fails.
    pub fn primitive(&self, t: f64) -> f64 {
        match &self.primitive {
            Primitive::ClosedForm(p) => p(t),
            Primitive::Quadrature => self.primitive_by_quadrature(t).unwrap_or(f64::NAN),
        }
    }

    pub fn primitive_by_quadrature(&self, t: f64) -> Result<f64> {
        adaptive_simpson(|s| (self.h)(s), 0.0, t, 1e-12)
    }

    /// `h₁(g(s)) = max{h(g(s)) + m g(s), 0}` for `s ≥ 0`, extended oddly.
    pub fn h1_of<G: ChangeOfVariables + ?Sized>(&self, g: &G, s: f64) -> f64 {
        if s < 0.0 {
            return -self.h1_of(g, -s);
        }
        let u = g.value(s);
        (self.h(u) + self.m * u).max(0.0)
    }

    /// `h₂(g(s)) = h₁(g(s)) - h(g(s))`.
    pub fn h2_of<G: ChangeOfVariables + ?Sized>(&self, g: &G, s: f64) -> f64 {
        self.h1_of(g, s) - self.h(g.value(s))
    }

    /// `H₁(g(s)) = ∫₀ˢ h₁(g(t)) g'(t) dt`, so that `H₁ - H₂ = H∘g`.
    #[allow(non_snake_case)]
    pub fn H1_of<G: ChangeOfVariables + ?Sized>(&self, g: &G, s: f64) -> Result<f64> {
        let scale = (s.abs() * (1.0 + self.h1_of(g, s).abs())).max(1.0);
        adaptive_simpson(|t| self.h1_of(g, t) * g.derivative(t), 0.0, s, 1e-13 * scale)
    }

    #[allow(non_snake_case)]
    pub fn H2_of<G: ChangeOfVariables + ?Sized>(&self, g: &G, s: f64) -> Result<f64> {
        let scale = (s.abs() * (1.0 + self.h2_of(g, s).abs())).max(1.0);
        adaptive_simpson(|t| self.h2_of(g, t) * g.derivative(t), 0.0, s, 1e-13 * scale)
    }
}

/// Outcome of one numerical condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self, condition: &str) -> bool {
        self.checks.iter().any(|c| c.condition == condition && !c.passed)
    }
}

/// Default sample: `(0, 1e-6]` and `[1e3, 1e8]`, log-spaced.
pub fn default_condition_sample() -> Vec<f64> {
    let mut s: Vec<f64> = (0..=20).map(|i| 10f64.powf(-12.0 + 6.0 * i as f64 / 20.0)).collect();
    s.extend((0..=25).map(|i| 10f64.powf(3.0 + 5.0 * i as f64 / 25.0)));
    s
}

/// Numerically certifies (h₁), (h₂), (h₃″), (h₄) and, for closed-form primitives, `H' = h`.
pub fn check_conditions(f: &BLNonlinearity, sample: &[f64], n: usize) -> ConditionReport {
    let mut report = ConditionReport::default();
    let mut positive: Vec<f64> = sample.iter().map(|t| t.abs()).filter(|&t| t > 0.0 && t.is_finite()).collect();
    positive.sort_by(f64::total_cmp);
    positive.dedup();

    let odd_violations: Vec<f64> = positive.iter().copied().filter(|&t| f.h(-t) != -f.h(t)).collect();
    report.checks.push(ConditionCheck {
        condition: "h1",
        passed: odd_violations.is_empty(),
        detail: if odd_violations.is_empty() {
            format!("h(-t) = -h(t) on {} sample pairs", positive.len())
        } else {
            format!("oddness fails at {:?}", &odd_violations[..odd_violations.len().min(5)])
        },
    });

    let small: Vec<f64> = positive.iter().copied().filter(|&t| t <= 1e-6).collect();
    let worst_small = small
        .iter()
        .map(|&t| ((f.h(t) / t + f.m()) / f.m()).abs())
        .fold(0.0, f64::max);
    report.checks.push(ConditionCheck {
        condition: "h2",
        passed: !small.is_empty() && worst_small <= 0.1,
        detail: format!(
            "max |h(t)/t + m| / m = {worst_small:e} over {} samples in (0, 1e-6]",
            small.len()
        ),
    });

    let q = critical_power(n);
    let large: Vec<f64> = positive.iter().copied().filter(|&t| t >= 1e3).collect();
    let ratios: Vec<f64> = large.iter().map(|&t| (f.h(t) / t.powf(q)).abs()).collect();
    let tail = &ratios[ratios.len().saturating_sub(5)..];
    let dominated = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let last = ratios.last().copied().unwrap_or(f64::INFINITY);
    report.checks.push(ConditionCheck {
        condition: "h3''",
        passed: !large.is_empty() && last < 1e-6 && dominated,
        detail: format!("|h(t)| / t^{q} = {last:e} at t = {:e}", large.last().copied().unwrap_or(f64::NAN)),
    });

    let h_xi0 = f.primitive(f.xi0());
    report.checks.push(ConditionCheck {
        condition: "h4",
        passed: h_xi0 > 0.0,
        detail: format!("H(xi0) = H({}) = {h_xi0:e}", f.xi0()),
    });

    if f.has_closed_form_primitive() {
        let mut worst = 0.0_f64;
        for &t in &[0.1, 0.5, 1.0, 1.7, 3.0, 10.0] {
            let d = 1e-5 * t;
            let fd = (f.primitive(t + d) - f.primitive(t - d)) / (2.0 * d);
            let scale = f.h(t).abs().max(f.m() * t);
            worst = worst.max((fd - f.h(t)).abs() / scale);
        }
        report.checks.push(ConditionCheck {
            condition: "primitive",
            passed: worst <= 1e-6,
            detail: format!("max relative |H' - h| = {worst:e} (central differences)"),
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::DualTransform;
    use approx::assert_relative_eq;

    #[test]
    fn model_power_primitive_example() {
        let f = BLNonlinearity::model_power(3.0, 1.0, 3).unwrap();
        assert_relative_eq!(f.primitive(2.0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.xi0(), 1.1 * 2f64.sqrt(), epsilon = 1e-14);
        assert!(f.primitive(f.xi0()) > 0.0);
    }

    #[test]
    fn model_power_rejects_critical_exponent() {
        let err = BLNonlinearity::model_power(11.0, 1.0, 3).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("(h3'')")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(BLNonlinearity::model_power(1.0, 1.0, 3).is_err());
        assert!(BLNonlinearity::model_power(3.0, -1.0, 3).is_err());
        assert!(BLNonlinearity::model_power(3.0, 1.0, 2).is_err());
    }

    #[test]
    fn conditions_hold_for_model_family() {
        for (p, m, n) in [(3.0, 1.0, 3), (3.0, 1.0, 4), (2.5, 0.5, 3)] {
            let f = BLNonlinearity::model_power(p, m, n).unwrap();
            let r = check_conditions(&f, &default_condition_sample(), n);
            assert!(r.all_passed(), "{p} {m} {n}: {r:#?}");
        }
        let f = BLNonlinearity::saturable(0.5).unwrap();
        assert!(check_conditions(&f, &default_condition_sample(), 3).all_passed());
    }

    #[test]
    fn small_and_large_argument_examples() {
        let f = BLNonlinearity::model_power(3.0, 1.0, 3).unwrap();
        assert!((f.h(1e-6) / 1e-6 + 1.0).abs() <= 1e-6);
        assert!(f.h(1e4) / 1e4f64.powi(11) < 1e-30);
    }

    #[test]
    fn failing_witness_is_flagged() {
        let f = BLNonlinearity::with_primitive(
            "bad",
            |t: f64| t.powi(3) - t,
            |t: f64| t.powi(4) / 4.0 - t * t / 2.0,
            1.0,
            0.5,
        )
        .unwrap();
        let r = check_conditions(&f, &default_condition_sample(), 3);
        assert!(r.failed("h4"));
        assert!(!r.failed("h1"));
    }

    #[test]
    fn even_nonlinearity_fails_oddness() {
        let f = BLNonlinearity::new("even", |t: f64| t * t - t, 1.0, 3.0).unwrap();
        assert!(check_conditions(&f, &default_condition_sample(), 3).failed("h1"));
    }

    #[test]
    fn quadrature_primitive_matches_closed_form() {
        let closed = BLNonlinearity::model_power(2.5, 0.5, 3).unwrap();
        let quad = BLNonlinearity::new("q", |t: f64| t.abs().powf(1.5) * t - 0.5 * t, 0.5, closed.xi0()).unwrap();
        for t in [-2.0, 0.3, 1.0, 4.0] {
            assert_relative_eq!(quad.primitive(t), closed.primitive(t), epsilon = 1e-11);
        }
    }

    #[test]
    fn split_identities() {
        let g = DualTransform::default();
        let f = BLNonlinearity::model_power(3.0, 1.0, 3).unwrap();
        assert_eq!(f.h1_of(&g, 0.0), 0.0);
        for s in [1e-6, 0.01, 0.5, 1.0, 3.0, 50.0] {
            let u = g.value(s);
            assert_relative_eq!(f.h1_of(&g, s), u.powi(3), max_relative = 1e-14);
            let h2 = f.h2_of(&g, s);
            assert!((f.h1_of(&g, s) - f.h(u) - h2).abs() <= 1e-12 * (1.0 + h2.abs()));
            assert!(h2 >= f.m() * u * (1.0 - 1e-14));
            assert_eq!(f.h1_of(&g, -s), -f.h1_of(&g, s));
        }
        // h1(g(s)) / g(s) -> 0 as s -> 0+.
        let s = 1e-6;
        assert!(f.h1_of(&g, s) / g.value(s) < 1e-3);
    }

    #[test]
    fn primitive_split_matches_h_of_g() {
        let g = DualTransform::default();
        let f = BLNonlinearity::model_power(3.0, 1.0, 3).unwrap();
        assert_eq!(f.H1_of(&g, 0.0).unwrap(), 0.0);
        let s = 1.0;
        let diff = f.H1_of(&g, s).unwrap() - f.H2_of(&g, s).unwrap();
        // Independent route: quadrature of h over [0, g(1)].
        let direct = adaptive_simpson(|u| f.h(u), 0.0, g.value(s), 1e-14).unwrap();
        assert!((diff - direct).abs() <= 1e-9, "{diff} vs {direct}");
        assert!((diff - f.primitive(g.value(s))).abs() <= 1e-9);
        assert_relative_eq!(f.H1_of(&g, -2.0).unwrap(), f.H1_of(&g, 2.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn kappa_wrapper_rescales() {
        let f = BLNonlinearity::model_power(3.0, 1.0, 3).unwrap();
        let k = 4.0;
        let fk = f.with_kappa(k).unwrap();
        for w in [0.2, 1.0, 3.0] {
            assert_relative_eq!(fk.h(w), 2.0 * f.h(w / 2.0), epsilon = 1e-14);
            assert_relative_eq!(fk.primitive(w), 4.0 * f.primitive(w / 2.0), epsilon = 1e-14);
        }
        assert_eq!(fk.m(), f.m());
        assert!(fk.primitive(fk.xi0()) > 0.0);
        assert!(check_conditions(&fk, &default_condition_sample(), 3).all_passed());
        assert!(f.with_kappa(0.0).is_err());
    }
}
