//! Shooting for the radial ground state of `v'' + (N-1)/r v' + f(v) = 0`,
//! `v(0) = a`, `v'(0) = 0`, with `f(v) = h(g(v))g'(v)`.
//!
//! Too small a centre value makes `v` turn back up while still positive; too
//! large a value drives it through zero. The ground state sits on the boundary
//! between the two behaviours and is located by bisection.

use crate::error::{Error, Result};
use crate::grid::{sphere_area, Sector};
use crate::pohozaev::FunctionalContext;
use crate::transform::ChangeOfVariables;

/// Where the series expansion at the origin hands over to the integrator.
const R_START: f64 = 1e-4;
/// Classification runs stop here if neither event has occurred.
const R_CAP: f64 = 200.0;
const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `v` reaches zero: the centre value overshoots.
    CrossesZero,
    /// `v'` becomes positive while `v > 0`: the centre value undershoots.
    TurnsBack,
    /// Neither event before `R_CAP`.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub a_star: f64,
    /// `u(0) = g(a*)`.
    pub center_u: f64,
    /// `J = ∫ ½|v'|² - H(g(v))` over `ℝᴺ`.
    pub energy: f64,
    pub psi: f64,
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
    pub bisection_steps: usize,
}

/// State: `v`, `v'`, `∫½|v'|²`, `∫H(g(v))` (the last two with the full measure).
type State = [f64; 4];

struct Ode<'a> {
    ctx: &'a FunctionalContext,
    n: f64,
    omega: f64,
}

impl Ode<'_> {
    fn rhs(&self, r: f64, y: &State) -> State {
        let density = self.omega * r.powf(self.n - 1.0);
        [
            y[1],
            -(self.n - 1.0) / r * y[1] - self.ctx.force(y[0]),
            0.5 * y[1] * y[1] * density,
            self.ctx.potential(y[0]) * density,
        ]
    }

    /// Series start `v ≈ a - f(a) r²/(2N)` at `R_START`.
    fn initial(&self, a: f64) -> State {
        let f = self.ctx.force(a);
        let r = R_START;
        let n = self.n;
        [
            a - f * r * r / (2.0 * n),
            -f * r / n,
            0.5 * (f / n).powi(2) * self.omega * r.powf(n + 2.0) / (n + 2.0),
            self.ctx.potential(a) * self.omega * r.powf(n) / n,
        ]
    }

    /// One Dormand–Prince 5(4) step; returns the fifth-order solution and the
    /// embedded error estimate.
    fn step(&self, r: f64, y: &State, h: f64) -> (State, f64) {
        const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut k = [[0.0; 4]; 7];
        k[0] = self.rhs(r, y);
        for s in 0..6 {
            let mut yt = *y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                for c in 0..4 {
                    yt[c] += h * A[s][j] * kj[c];
                }
            }
            k[s + 1] = self.rhs(r + C[s] * h, &yt);
        }
        // Row 6 of A holds the fifth-order weights (FSAL), so k[6] is f at the new point.
        let mut y5 = *y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for c in 0..4 {
                y5[c] += h * A[5][j] * kj[c];
            }
        }
        let mut err: f64 = 0.0;
        // Only v and v' steer the step size; the energy integrals follow along.
        for c in 0..2 {
            let e: f64 = (0..7).map(|j| E[j] * k[j][c]).sum::<f64>() * h;
            let scale = ATOL + RTOL * y[c].abs().max(y5[c].abs());
            err = err.max((e / scale).abs());
        }
        (y5, err)
    }

    /// Integrates from `r0` to `r1`, stopping early when `stop` fires after an
    /// accepted step. Returns the final state, radius and whether it stopped.
    fn integrate<S: Fn(&State) -> bool>(&self, mut y: State, r0: f64, r1: f64, h0: &mut f64, stop: S) -> Result<(State, f64, bool)> {
        let mut r = r0;
        let mut h = h0.min(r1 - r0);
        let mut guard = 0usize;
        while r < r1 {
            guard += 1;
            if guard > 10_000_000 {
                return Err(Error::Numeric("shooting integration needed too many steps".into()));
            }
            h = h.min(r1 - r);
            let (y_new, err) = self.step(r, &y, h);
            if !y_new.iter().all(|x| x.is_finite()) {
                h *= 0.25;
                if h < 1e-14 {
                    return Err(Error::Numeric(format!("shooting integration blew up at r = {r}")));
                }
                continue;
            }
            if err <= 1.0 {
                r += h;
                y = y_new;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                h *= grow;
                if stop(&y) {
                    *h0 = h;
                    return Ok((y, r, true));
                }
            } else {
                h *= (0.9 * err.powf(-0.25)).max(0.1);
                if h < 1e-14 {
                    return Err(Error::Numeric(format!("shooting step size underflow at r = {r}")));
                }
            }
        }
        *h0 = h;
        Ok((y, r, false))
    }
}

fn event(y: &State) -> bool {
    y[0] < 0.0 || y[1] > 0.0
}

fn classify_state(y: &State, stopped: bool) -> Classification {
    if !stopped {
        Classification::Undecided
    } else if y[0] < 0.0 {
        Classification::CrossesZero
    } else {
        Classification::TurnsBack
    }
}

fn ode(ctx: &FunctionalContext) -> Result<Ode<'_>> {
    if ctx.spec().sector() != Sector::Radial {
        return Err(Error::Usage(format!(
            "the shooting oracle only applies to the radial sector, not {}",
            ctx.spec().sector()
        )));
    }
    let n = ctx.spec().n();
    Ok(Ode {
        ctx,
        n: n as f64,
        omega: sphere_area(n),
    })
}

/// Classifies the trajectory started from centre value `a`.
pub fn classify(ctx: &FunctionalContext, a: f64) -> Result<Classification> {
    let ode = ode(ctx)?;
    let mut h = 1e-3;
    let (y, _, stopped) = ode.integrate(ode.initial(a), R_START, R_CAP, &mut h, event)?;
    Ok(classify_state(&y, stopped))
}

/// A bracket `(lo, hi)` with `lo` turning back and `hi` crossing zero, found by
/// doubling or halving from `a = 1`.
pub fn find_bracket(ctx: &FunctionalContext) -> Result<(f64, f64)> {
    let mut a = 1.0;
    // An undecided start (e.g. an equilibrium of the ODE) is treated as an
    // undershoot: the search then moves upward.
    let mut prev = classify(ctx, a)?;
    for _ in 0..60 {
        let next = match prev {
            Classification::CrossesZero => a * 0.5,
            _ => a * 2.0,
        };
        let class = classify(ctx, next)?;
        if prev != Classification::Undecided && class != Classification::Undecided && class != prev {
            return Ok(if next < a { (next, a) } else { (a, next) });
        }
        a = next;
        prev = class;
    }
    Err(Error::Bracket("no sign change in the shooting classification between 2^-60 and 2^60".into()))
}

/// Bisects the centre value to `1e-10` relative and integrates the resulting
/// profile to `r_max`, sampling it every `dr`.
pub fn shooting_oracle(ctx: &FunctionalContext, bracket: (f64, f64), r_max: f64, dr: f64) -> Result<ShootingResult> {
    let ode = ode(ctx)?;
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::Bracket(format!("invalid bracket ({lo}, {hi})")));
    }
    let c_lo = classify(ctx, lo)?;
    let c_hi = classify(ctx, hi)?;
    if c_lo == c_hi || c_lo == Classification::Undecided || c_hi == Classification::Undecided {
        return Err(Error::Bracket(format!(
            "both ends of ({lo}, {hi}) classify as {c_lo:?}/{c_hi:?}"
        )));
    }
    let mut steps = 0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        let c = classify(ctx, mid)?;
        if c == Classification::Undecided {
            lo = mid;
            hi = mid;
            break;
        }
        if c == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let a_star = 0.5 * (lo + hi);

    let mut radii = vec![0.0];
    let mut profile = vec![a_star];
    let mut y = ode.initial(a_star);
    let mut r = R_START;
    let mut h = 1e-3;
    let samples = (r_max / dr).round() as usize;
    for i in 1..=samples {
        let target = i as f64 * dr;
        let (y_new, r_new, stopped) = ode.integrate(y, r, target, &mut h, event)?;
        y = y_new;
        r = r_new;
        if stopped {
            // The trajectory has separated from the ground state; the tail
            // beyond this point is below the bisection resolution.
            break;
        }
        radii.push(target);
        profile.push(y[0]);
    }
    let center_u = ctx.transform().value(a_star);
    Ok(ShootingResult {
        a_star,
        center_u,
        energy: y[2] - y[3],
        psi: 2.0 * y[2],
        radii,
        profile,
        bisection_steps: steps,
    })
}
