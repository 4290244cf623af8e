//! Descent-inequality certification for price-iteration traces.
//!
//! The chain of bounds, from the elementary ones up:
//!
//! * `y z <= (y^2 + z^2) / 2` for all reals ([`scalar_product_bound`]);
//! * summed over an index set `I`: `sum y_i z <= |I| z^2 / 2 + sum y_i^2 / 2`
//!   ([`indexed_sum_bound`]);
//! * over a staleness window of `2 t0` past increments:
//!   `sum_{t-2t0}^{t-1} a(t') a(t) <= (t0 - 1/2) a(t)^2 + 1/2 sum_{t-2t0}^{t} a(t')^2`
//!   ([`window_bound`]);
//! * the per-step descent inequality for the dual function
//!
//!   ```text
//!   D(t+1) <= D(t) - [1/gamma - A1 - A2 (t0 - 1/2)] |pi(t)|^2
//!                  + A2/2 * sum_{t'=t-2t0}^{t} |pi(t')|^2
//!   ```
//!
//!   ([`per_step_descent_check`]);
//! * its telescoped form and, via [`double_sum_bound`], the total descent
//!   `D(t+1) <= D(0) - (1/gamma - A1 - 2 A2 t0) sum_tau |pi(tau)|^2`
//!   ([`telescoped_check`]), whose coefficient is positive exactly when
//!   `gamma < 1 / (A1 + 2 A2 t0)` ([`gamma_threshold`]).
//!
//! Every function returns a *margin*: right-hand side minus left-hand side,
//! nonnegative when the inequality holds. Increments with negative time index
//! are zero. All checks consume plain sequences so persisted traces can be
//! certified without re-running the iteration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default slack for `margin >= 0` assertions, relative to term magnitudes.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Slack the constant fit leaves for roundoff in `D`, relative to `1 + |D|`.
const FIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("expected {expected} dual values for {increments} increments, got {actual}")]
    LengthMismatch {
        increments: usize,
        expected: usize,
        actual: usize,
    },
    #[error("window bound needs t0 >= 1")]
    ZeroWindow,
    #[error("time index {t} outside a sequence of length {len}")]
    IndexOutOfRange { t: usize, len: usize },
    #[error("need at least {needed} trace rows to fit constants with t0 = {t0}, got {rows}")]
    TooShort { needed: usize, rows: usize, t0: usize },
    #[error("invalid constants: {0}")]
    BadConstants(&'static str),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// `(y^2 + z^2) / 2 - y z`; equals `(y - z)^2 / 2`.
pub fn scalar_product_bound(y: f64, z: f64) -> f64 {
    (y * y + z * z) / 2.0 - y * z
}

/// `|I| z^2 / 2 + sum y_i^2 / 2 - sum y_i z`. Zero for an empty list.
pub fn indexed_sum_bound(ys: &[f64], z: f64) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let n = ys.len() as f64;
    let sq: f64 = ys.iter().map(|y| y * y).sum();
    let cross: f64 = ys.iter().map(|y| y * z).sum();
    n / 2.0 * z * z + sq / 2.0 - cross
}

/// `a(t')` with zero padding for negative times.
fn padded(a: &[f64], t: isize) -> f64 {
    if t < 0 {
        0.0
    } else {
        a[t as usize]
    }
}

fn check_index(a: &[f64], t: usize) -> Result<(), CertifyError> {
    if t >= a.len() {
        Err(CertifyError::IndexOutOfRange { t, len: a.len() })
    } else {
        Ok(())
    }
}

/// Values `a(t - 2 t0), ..., a(t - 1)`, zero padded.
pub fn window_before(a: &[f64], t: usize, t0: usize) -> Vec<f64> {
    let t = t as isize;
    (t - 2 * t0 as isize..t).map(|s| padded(a, s)).collect()
}

/// Slack of the staleness-window bound at time `t` for increment norms `a`.
pub fn window_bound(a: &[f64], t: usize, t0: usize) -> Result<f64, CertifyError> {
    if t0 == 0 {
        return Err(CertifyError::ZeroWindow);
    }
    check_index(a, t)?;
    let now = a[t];
    let before = window_before(a, t, t0);
    let sq: f64 = before.iter().map(|v| v * v).sum::<f64>() + now * now;
    let cross: f64 = before.iter().map(|v| v * now).sum();
    Ok((t0 as f64 - 0.5) * now * now + 0.5 * sq - cross)
}

/// Slack of the *invalid* window bound `sum a(t') a(t) <= sum_{t-2t0}^{t} a(t')^2`,
/// which would follow if `sum y_i^2 + z^2 - sum y_i z` were nonnegative on the
/// nonnegative orthant. It is not: for five or more window entries the form is
/// indefinite, and this margin can go negative.
pub fn unsound_window_bound(a: &[f64], t: usize, t0: usize) -> Result<f64, CertifyError> {
    check_index(a, t)?;
    let now = a[t];
    let before = window_before(a, t, t0);
    let sq: f64 = before.iter().map(|v| v * v).sum::<f64>() + now * now;
    let cross: f64 = before.iter().map(|v| v * now).sum();
    Ok(sq - cross)
}

/// `(lhs, rhs)` of the double-sum bound
/// `sum_{tau=0}^{t} sum_{t'=tau-2t0}^{tau} a(t')^2 <= (2 t0 + 1) sum_{tau=0}^{t} a(tau)^2`.
pub fn double_sum_bound(a: &[f64], t: usize, t0: usize) -> Result<(f64, f64), CertifyError> {
    check_index(a, t)?;
    let sq: Vec<f64> = a[..=t].iter().map(|v| v * v).collect();
    let lhs = (0..=t).map(|tau| window_sum(&sq, tau, t0)).sum();
    let rhs = (2 * t0 + 1) as f64 * sq.iter().sum::<f64>();
    Ok((lhs, rhs))
}

/// `sum_{t'=t-2t0}^{t} s(t')` with zero padding.
fn window_sum(s: &[f64], t: usize, t0: usize) -> f64 {
    s[t.saturating_sub(2 * t0)..=t].iter().sum()
}

/// Constants of the descent inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub a1: f64,
    pub a2: f64,
    pub t0: usize,
    pub gamma: f64,
}

impl Constants {
    pub fn new(a1: f64, a2: f64, t0: usize, gamma: f64) -> Result<Self, CertifyError> {
        let k = Self { a1, a2, t0, gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), CertifyError> {
        if !(self.a1.is_finite() && self.a1 >= 0.0) {
            return Err(CertifyError::BadConstants("A1 must be finite and nonnegative"));
        }
        if !(self.a2.is_finite() && self.a2 >= 0.0) {
            return Err(CertifyError::BadConstants("A2 must be finite and nonnegative"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(CertifyError::BadConstants("gamma must be positive and finite"));
        }
        Ok(())
    }

    /// `1/gamma - A1 - A2 (t0 - 1/2)`, the per-step coefficient of `|pi(t)|^2`.
    pub fn step_coefficient(&self) -> f64 {
        1.0 / self.gamma - self.a1 - self.a2 * (self.t0 as f64 - 0.5)
    }

    /// `1/gamma - A1 - 2 A2 t0`, the coefficient of the total descent.
    pub fn descent_coefficient(&self) -> f64 {
        1.0 / self.gamma - self.a1 - 2.0 * self.a2 * self.t0 as f64
    }
}

fn check_lengths(d: &[f64], pi_norm_sq: &[f64]) -> Result<(), CertifyError> {
    if d.len() != pi_norm_sq.len() + 1 {
        return Err(CertifyError::LengthMismatch {
            increments: pi_norm_sq.len(),
            expected: pi_norm_sq.len() + 1,
            actual: d.len(),
        });
    }
    if let Some(i) = d.iter().position(|v| !v.is_finite()) {
        return Err(CertifyError::NonFinite(i));
    }
    if let Some(i) = pi_norm_sq.iter().position(|v| !v.is_finite()) {
        return Err(CertifyError::NonFinite(i));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    ViolatedAt(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub margins: Vec<f64>,
    /// Slack granted to each margin: `tolerance * (1 + magnitude of its terms)`.
    pub slack: Vec<f64>,
    pub verdict: Verdict,
}

/// Per-step margins
/// `D(t) - c |pi(t)|^2 + A2/2 * W(t) - D(t+1)`, `c = 1/gamma - A1 - A2 (t0 - 1/2)`,
/// with `W(t)` the window sum of `|pi|^2` over `[t - 2 t0, t]`.
///
/// `d` holds `D(0..=T)` and `pi_norm_sq` holds `|pi(0..T)|^2`.
pub fn per_step_descent_check(
    d: &[f64],
    pi_norm_sq: &[f64],
    k: &Constants,
    tolerance: f64,
) -> Result<StepCheck, CertifyError> {
    check_lengths(d, pi_norm_sq)?;
    k.validate()?;
    let coef = k.step_coefficient();
    let half_a2 = k.a2 / 2.0;
    let mut margins = Vec::with_capacity(pi_norm_sq.len());
    let mut slack = Vec::with_capacity(pi_norm_sq.len());
    let mut verdict = Verdict::Holds;
    for (t, &a) in pi_norm_sq.iter().enumerate() {
        let w = window_sum(pi_norm_sq, t, k.t0);
        let margin = d[t] - coef * a + half_a2 * w - d[t + 1];
        let scale = 1.0 + d[t].abs() + d[t + 1].abs() + (coef * a).abs() + half_a2 * w;
        let allowed = tolerance * scale;
        if margin < -allowed && verdict == Verdict::Holds {
            verdict = Verdict::ViolatedAt(t);
        }
        margins.push(margin);
        slack.push(allowed);
    }
    Ok(StepCheck {
        margins,
        slack,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelescopedMargins {
    /// Recursively applied per-step inequality, at the final time.
    pub telescoped: f64,
    /// Total descent after bounding the double window sum.
    pub total: f64,
}

pub fn telescoped_check(
    d: &[f64],
    pi_norm_sq: &[f64],
    k: &Constants,
) -> Result<TelescopedMargins, CertifyError> {
    check_lengths(d, pi_norm_sq)?;
    k.validate()?;
    let first = d[0];
    let last = d[d.len() - 1];
    let sum: f64 = pi_norm_sq.iter().sum();
    let double: f64 = (0..pi_norm_sq.len())
        .map(|tau| window_sum(pi_norm_sq, tau, k.t0))
        .sum();
    Ok(TelescopedMargins {
        telescoped: first - k.step_coefficient() * sum + k.a2 / 2.0 * double - last,
        total: first - k.descent_coefficient() * sum - last,
    })
}

/// Largest step size for which the total-descent coefficient stays positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMax {
    Finite(f64),
    /// `A1 + 2 A2 t0 <= 0`: any positive step passes the coefficient test.
    Unbounded,
}

impl GammaMax {
    pub fn admits(&self, gamma: f64) -> bool {
        match *self {
            GammaMax::Finite(g) => gamma < g,
            GammaMax::Unbounded => true,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            GammaMax::Finite(g) => g,
            GammaMax::Unbounded => f64::INFINITY,
        }
    }
}

/// `1 / (A1 + 2 A2 t0)`.
pub fn gamma_threshold(a1: f64, a2: f64, t0: usize) -> GammaMax {
    let denom = a1 + 2.0 * a2 * t0 as f64;
    if denom > 0.0 {
        GammaMax::Finite(1.0 / denom)
    } else {
        GammaMax::Unbounded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    /// `D` increased across a step where neither the current nor any windowed
    /// increment is nonzero, so no finite constants can absorb it.
    UncoveredIncrease { t: usize, excess: f64 },
    /// The smallest certifying constants force `gamma_max <= gamma`.
    StepTooLarge { constants: Constants, gamma_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted { constants: Constants, gamma_max: GammaMax },
    Infeasible(Infeasibility),
}

impl FitOutcome {
    pub fn constants(&self) -> Option<Constants> {
        match *self {
            FitOutcome::Fitted { constants, .. } => Some(constants),
            FitOutcome::Infeasible(Infeasibility::StepTooLarge { constants, .. }) => Some(constants),
            FitOutcome::Infeasible(Infeasibility::UncoveredIncrease { .. }) => None,
        }
    }
}

/// Linear constraint `a * A1 + b * A2 >= r` from one step of a trace.
#[derive(Debug, Clone, Copy)]
struct StepConstraint {
    a: f64,
    b: f64,
    r: f64,
}

/// Fits the smallest nonnegative `(A1, A2)` certifying every step of the trace.
///
/// "Smallest" means minimal `A1 + 2 t0 A2` (the reciprocal of the certified
/// step-size bound), ties broken toward smaller `A2`. Each step contributes a
/// linear constraint, so the objective is convex piecewise linear in `A2`
/// once `A1` is eliminated; it is minimized by interval refinement.
pub fn estimate_constants(
    d: &[f64],
    pi_norm_sq: &[f64],
    t0: usize,
    gamma: f64,
) -> Result<FitOutcome, CertifyError> {
    check_lengths(d, pi_norm_sq)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(CertifyError::BadConstants("gamma must be positive and finite"));
    }
    let needed = 2 * t0 + 2;
    if d.len() < needed {
        return Err(CertifyError::TooShort {
            needed,
            rows: d.len(),
            t0,
        });
    }

    let mut constraints = Vec::new();
    let mut a2_floor = 0.0_f64;
    for (t, &a) in pi_norm_sq.iter().enumerate() {
        let b = if t0 == 0 {
            0.0
        } else {
            (t0 as f64 - 0.5) * a + 0.5 * window_sum(pi_norm_sq, t, t0)
        };
        let r = d[t + 1] - d[t] + a / gamma - FIT_SLACK * (1.0 + d[t].abs() + d[t + 1].abs());
        if r <= 0.0 {
            continue;
        }
        match (a > 0.0, b > 0.0) {
            (false, false) => {
                return Ok(FitOutcome::Infeasible(Infeasibility::UncoveredIncrease {
                    t,
                    excess: r,
                }))
            }
            (false, true) => a2_floor = a2_floor.max(r / b),
            (true, _) => constraints.push(StepConstraint { a, b, r }),
        }
    }

    let a1_for = |a2: f64| -> f64 {
        constraints
            .iter()
            .map(|c| (c.r - c.b * a2) / c.a)
            .fold(0.0_f64, f64::max)
    };

    let a2 = if t0 == 0 {
        0.0
    } else {
        let weight = 2.0 * t0 as f64;
        let objective = |a2: f64| a1_for(a2) + weight * a2;
        let ceiling = constraints
            .iter()
            .filter(|c| c.b > 0.0)
            .map(|c| c.r / c.b)
            .fold(a2_floor, f64::max);

        let (mut lo, mut hi) = (a2_floor, ceiling);
        for _ in 0..300 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if objective(m1) <= objective(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
            if hi - lo <= f64::EPSILON * hi.abs() {
                break;
            }
        }
        let best = objective(lo).min(objective(hi));
        let best_a2 = if objective(lo) <= objective(hi) { lo } else { hi };
        let level = best + 1e-12 * best.abs();

        // Smallest A2 on the (convex) sublevel set.
        let (mut lo, mut hi) = (a2_floor, best_a2);
        if objective(lo) <= level {
            lo
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if objective(mid) <= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };

    let constants = Constants {
        a1: a1_for(a2),
        a2,
        t0,
        gamma,
    };
    let gamma_max = gamma_threshold(constants.a1, constants.a2, t0);
    Ok(if gamma_max.admits(gamma) {
        FitOutcome::Fitted {
            constants,
            gamma_max,
        }
    } else {
        FitOutcome::Infeasible(Infeasibility::StepTooLarge {
            constants,
            gamma_max: gamma_max.value(),
        })
    })
}

/// Caveats recorded in every report.
pub const REPORT_ASSUMPTIONS: [&str; 2] = [
    "pi(t) is the post-projection increment p(t+1) - p(t)",
    "per-step descent is certified empirically for the given constants; A1 and A2 are not derived from network parameters",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub constants: Constants,
    pub fitted_constants: Option<Constants>,
    pub fit: Option<FitOutcome>,
    pub tolerance: f64,
    pub per_step_margins: Vec<f64>,
    pub telescoped_margin: f64,
    pub total_margin: f64,
    pub descent_coefficient: f64,
    pub gamma_max: GammaMax,
    pub verdict: Verdict,
    pub assumptions: Vec<String>,
}

impl CertReport {
    /// Verdict holds and the total-descent coefficient is positive.
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::Holds && self.descent_coefficient > 0.0
    }
}

/// Runs every check on one trace with the given constants.
pub fn certify_series(
    d: &[f64],
    pi_norm_sq: &[f64],
    k: &Constants,
    tolerance: f64,
) -> Result<CertReport, CertifyError> {
    let steps = per_step_descent_check(d, pi_norm_sq, k, tolerance)?;
    let tele = telescoped_check(d, pi_norm_sq, k)?;
    Ok(CertReport {
        constants: *k,
        fitted_constants: None,
        fit: None,
        tolerance,
        per_step_margins: steps.margins,
        telescoped_margin: tele.telescoped,
        total_margin: tele.total,
        descent_coefficient: k.descent_coefficient(),
        gamma_max: gamma_threshold(k.a1, k.a2, k.t0),
        verdict: steps.verdict,
        assumptions: REPORT_ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(a1: f64, a2: f64, t0: usize, gamma: f64) -> Constants {
        Constants::new(a1, a2, t0, gamma).unwrap()
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(scalar_product_bound(3.0, 5.0), 2.0);
        assert_eq!(scalar_product_bound(4.0, 4.0), 0.0);
        assert_eq!(scalar_product_bound(-1.0, 1.0), 2.0);
    }

    #[test]
    fn indexed_examples() {
        assert_eq!(indexed_sum_bound(&[5.0, 4.0, 3.0, 4.0, 5.0], 10.0), 85.5);
        assert_eq!(indexed_sum_bound(&[7.5], 7.5), 0.0);
        assert_eq!(indexed_sum_bound(&[], 3.0), 0.0);
    }

    #[test]
    fn window_examples() {
        let ones = vec![1.0; 11];
        assert_eq!(window_bound(&ones, 10, 2).unwrap(), 0.0);

        let mut a = vec![0.0, 1.0, 2.0, 3.0, 0.0];
        assert_eq!(window_bound(&a, 4, 2).unwrap(), 0.5 * (1.0 + 4.0 + 9.0));

        // window 5,4,3,4,5,6 before a(t) = 10 with t0 = 3
        a = vec![6.0, 5.0, 4.0, 3.0, 4.0, 5.0, 10.0];
        let before: f64 = a[..6].iter().sum();
        let sq: f64 = a.iter().map(|v| v * v).sum();
        let expected = 2.5 * 100.0 + 0.5 * sq - before * 10.0;
        assert_eq!(window_bound(&a, 6, 3).unwrap(), expected);
        assert!(expected >= 0.0);

        assert_eq!(window_bound(&a, 6, 0), Err(CertifyError::ZeroWindow));
        assert!(matches!(
            window_bound(&a, 7, 1),
            Err(CertifyError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn window_pads_negative_times() {
        // t = 1, t0 = 2: window covers t' = -3..=0
        let a = [2.0, 3.0];
        let m = window_bound(&a, 1, 2).unwrap();
        assert_eq!(m, 1.5 * 9.0 + 0.5 * (4.0 + 9.0) - 6.0);
    }

    #[test]
    fn double_sum_examples() {
        assert_eq!(double_sum_bound(&[1.0; 4], 3, 1).unwrap(), (9.0, 12.0));
        assert_eq!(double_sum_bound(&[0.0; 6], 5, 2).unwrap(), (0.0, 0.0));
        let mut spike = vec![0.0; 8];
        spike[7] = 1.0;
        assert_eq!(double_sum_bound(&spike, 7, 3).unwrap(), (1.0, 7.0));
    }

    #[test]
    fn per_step_examples() {
        let check = per_step_descent_check(&[4.0; 5], &[0.0; 4], &k(2.0, 1.0, 1, 0.5), 1e-9).unwrap();
        assert_eq!(check.margins, vec![0.0; 4]);

        let check =
            per_step_descent_check(&[10.0, 9.0, 8.0], &[1.0, 1.0], &k(0.0, 0.0, 0, 1.0), 1e-9).unwrap();
        assert_eq!(check.margins, vec![0.0, 0.0]);
        assert_eq!(check.verdict, Verdict::Holds);

        assert!(matches!(
            per_step_descent_check(&[1.0, 2.0], &[1.0, 1.0], &k(0.0, 0.0, 0, 1.0), 1e-9),
            Err(CertifyError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn increasing_dual_is_flagged() {
        let check =
            per_step_descent_check(&[1.0, 1.5, 2.0], &[0.1, 0.1], &k(0.0, 0.0, 0, 1.0), 1e-9).unwrap();
        assert_eq!(check.verdict, Verdict::ViolatedAt(0));
        assert!(check.margins.iter().all(|&m| m < 0.0));
    }

    #[test]
    fn telescoped_examples() {
        let m = telescoped_check(&[10.0, 9.0, 8.0], &[1.0, 1.0], &k(0.0, 0.0, 0, 1.0)).unwrap();
        assert_eq!(m.total, 0.0);
        assert_eq!(m.telescoped, 0.0);

        let m = telescoped_check(&[3.0; 6], &[0.0; 5], &k(1.0, 2.0, 2, 0.1)).unwrap();
        assert_eq!((m.telescoped, m.total), (0.0, 0.0));
    }

    #[test]
    fn gamma_threshold_examples() {
        assert_eq!(gamma_threshold(1.0, 0.5, 2), GammaMax::Finite(1.0 / 3.0));
        assert_eq!(gamma_threshold(4.0, 0.0, 7), GammaMax::Finite(0.25));
        assert_eq!(gamma_threshold(0.0, 0.0, 3), GammaMax::Unbounded);
        assert!(GammaMax::Unbounded.admits(1e9));
    }

    #[test]
    fn fit_on_stationary_trace_is_zero() {
        let out = estimate_constants(&[2.0; 10], &[0.0; 9], 2, 0.1).unwrap();
        let c = out.constants().unwrap();
        assert_eq!((c.a1, c.a2), (0.0, 0.0));
        assert!(matches!(out, FitOutcome::Fitted { gamma_max: GammaMax::Unbounded, .. }));
    }

    #[test]
    fn fit_recovers_curvature_constant() {
        let gamma = 0.5;
        let a1 = 0.3;
        let pis: Vec<f64> = (0..40).map(|i| 0.5 + ((i * 7) % 11) as f64 / 10.0).collect();
        let mut d = vec![5.0];
        for &p in &pis {
            let last = *d.last().unwrap();
            d.push(last - (1.0 / gamma - a1) * p);
        }
        for t0 in [0, 1, 3] {
            let out = estimate_constants(&d, &pis, t0, gamma).unwrap();
            let c = out.constants().unwrap();
            assert!((c.a1 - a1).abs() < 1e-6, "t0={t0}: {c:?}");
            assert_eq!(c.a2, 0.0, "t0={t0}");
            let check = per_step_descent_check(&d, &pis, &c, 1e-9).unwrap();
            assert_eq!(check.verdict, Verdict::Holds);
        }
    }

    #[test]
    fn fit_uses_window_when_cheaper() {
        // Rises after quiet steps can only be paid for by the window term.
        let pis = [1.0, 0.0, 0.0, 0.0, 0.0];
        let d = [1.0, 1.0, 1.2, 1.2, 1.2, 1.2];
        let out = estimate_constants(&d, &pis, 2, 0.1).unwrap();
        let c = out.constants().unwrap();
        assert!(c.a2 > 0.0);
        let check = per_step_descent_check(&d, &pis, &c, 1e-9).unwrap();
        assert_eq!(check.verdict, Verdict::Holds, "{check:?}");
    }

    #[test]
    fn fit_reports_uncovered_increase() {
        let out = estimate_constants(&[1.0, 1.0, 2.0, 2.0], &[0.0, 0.0, 0.0], 1, 0.1).unwrap();
        assert!(matches!(
            out,
            FitOutcome::Infeasible(Infeasibility::UncoveredIncrease { t: 1, .. })
        ));
    }

    #[test]
    fn fit_rejects_short_trace() {
        assert!(matches!(
            estimate_constants(&[1.0; 3], &[0.0; 2], 1, 0.1),
            Err(CertifyError::TooShort { needed: 4, .. })
        ));
    }

    #[test]
    fn growing_dual_needs_too_large_constants() {
        let pis = vec![1.0; 12];
        let d: Vec<f64> = (0..13).map(|t| t as f64).collect();
        let out = estimate_constants(&d, &pis, 1, 0.5).unwrap();
        assert!(
            matches!(out, FitOutcome::Infeasible(Infeasibility::StepTooLarge { .. })),
            "{out:?}"
        );
    }

    #[test]
    fn report_serializes() {
        let r = certify_series(&[10.0, 9.0, 8.0], &[1.0, 1.0], &k(0.0, 0.0, 0, 1.0), 1e-9).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["verdict"], "holds");
        assert_eq!(json["gamma_max"], "unbounded");
        assert_eq!(json["assumptions"].as_array().unwrap().len(), 2);
    }
}
