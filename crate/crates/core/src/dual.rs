//! Lagrangian dual of the utility maximization problem.
//!
//! For link prices `p >= 0` the dual function is
//!
//! ```text
//! D(p) = sum_s max_{x in [m_s, M_s]} (U_s(x) - x * q_s(p)) + sum_l p_l * c_l
//! ```
//!
//! with `q_s(p)` the sum of prices along the path of `s`. `D` is convex and is
//! minimized over the nonnegative orthant by the price iteration in
//! [`crate::engine`]. [`num_oracle`] solves the same problem by a separate
//! method so the iteration can be checked against ground truth.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RoutingMatrix, Source, ValidatedNetwork};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("price vector has a negative or non-finite entry at link {0}")]
    InvalidPrice(usize),
    #[error("link `{0}` cannot be made feasible: the minimum rates of its sources exceed capacity")]
    Infeasible(String),
    #[error("oracle did not reach KKT tolerance after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// Link prices, one nonnegative entry per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(p: Vec<f64>) -> Result<Self, DualError> {
        if let Some(l) = p.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(DualError::InvalidPrice(l));
        }
        Ok(Self(p))
    }

    /// Skips validation; used by the iteration, which flags non-finite values itself.
    pub(crate) fn from_raw(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PriceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Source rates, one entry per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Argmax over the source's rate interval of `U(x) - x * path_price`.
pub fn source_rate(source: &Source, path_price: f64) -> f64 {
    source.rate(path_price)
}

/// Rates every source picks in response to the link prices `p`.
pub fn rates_at(net: &ValidatedNetwork, p: &[f64]) -> RateVector {
    RateVector(
        net.sources()
            .iter()
            .enumerate()
            .map(|(s, src)| src.rate(net.path_price(s, p)))
            .collect(),
    )
}

/// Per-link load `R * x`.
pub fn aggregate_rates(r: &RoutingMatrix, x: &[f64]) -> Result<Vec<f64>, DualError> {
    if x.len() != r.num_sources() {
        return Err(DualError::DimensionMismatch {
            expected: r.num_sources(),
            actual: x.len(),
        });
    }
    Ok((0..r.num_links())
        .map(|l| {
            r.row(l)
                .iter()
                .zip(x)
                .filter(|(&e, _)| e != 0)
                .map(|(_, &v)| v)
                .sum()
        })
        .collect())
}

fn check_prices(net: &ValidatedNetwork, p: &[f64]) {
    assert_eq!(p.len(), net.num_links(), "price vector length");
    debug_assert!(p.iter().all(|&v| v >= 0.0), "negative price");
}

pub fn dual_value(net: &ValidatedNetwork, p: &[f64]) -> f64 {
    check_prices(net, p);
    let sources: f64 = net
        .sources()
        .iter()
        .enumerate()
        .map(|(s, src)| {
            let q = net.path_price(s, p);
            let x = src.rate(q);
            src.utility(x) - x * q
        })
        .sum();
    let links: f64 = p.iter().zip(net.capacities()).map(|(p, c)| p * c).sum();
    sources + links
}

/// `g_l = c_l - load_l(x(p))`, the gradient of `D` at `p`.
pub fn dual_gradient(net: &ValidatedNetwork, p: &[f64]) -> Vec<f64> {
    check_prices(net, p);
    let x = rates_at(net, p);
    (0..net.num_links())
        .map(|l| net.capacities()[l] - net.link_load(l, &x))
        .collect()
}

/// KKT residuals of a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `max_s |x_s - clip(w_s / q_s)|`, relative to `max(1, x_s)`.
    pub stationarity: f64,
    /// `max_l max(0, load_l - c_l) / c_l`.
    pub primal: f64,
    /// `max_l p_l * |c_l - load_l| / c_l`.
    pub complementary: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub x_star: RateVector,
    pub p_star: PriceVector,
    pub primal_value: f64,
    pub residuals: KktResiduals,
}

pub const ORACLE_KKT_TOLERANCE: f64 = 1e-8;
const ORACLE_MAX_SWEEPS: usize = 200_000;

fn clipped_log_rate(weight: f64, q: f64, lo: f64, hi: f64) -> f64 {
    if q > 0.0 {
        (weight / q).max(lo).min(hi)
    } else {
        hi
    }
}

pub fn kkt_residuals(net: &ValidatedNetwork, x: &[f64], p: &[f64]) -> KktResiduals {
    let mut res = KktResiduals {
        stationarity: 0.0,
        primal: 0.0,
        complementary: 0.0,
    };
    for (s, src) in net.sources().iter().enumerate() {
        let q: f64 = src.path.iter().map(|&l| p[l]).sum();
        let best = clipped_log_rate(src.weight, q, src.min_rate, src.max_rate);
        res.stationarity = res.stationarity.max((x[s] - best).abs() / x[s].max(1.0));
    }
    for (l, &c) in net.capacities().iter().enumerate() {
        let load: f64 = net.link_sources(l).iter().map(|&s| x[s]).sum();
        res.primal = res.primal.max((load - c).max(0.0) / c);
        res.complementary = res.complementary.max(p[l] * (c - load).abs() / c);
    }
    res
}

/// Solves `max sum_s w_s ln x_s  s.t.  R x <= c, x in [m, M]` by exact cyclic
/// coordinate minimization of the dual: each link price in turn is set by
/// bisection so that its own capacity constraint is tight (or its price is
/// zero with slack). Rates are recovered from the converged prices.
pub fn num_oracle(net: &ValidatedNetwork) -> Result<OracleSolution, DualError> {
    let links = net.num_links();
    let sources = net.sources();
    let mut p = vec![0.0; links];

    for (l, &c) in net.capacities().iter().enumerate() {
        let floor: f64 = net
            .link_sources(l)
            .iter()
            .map(|&s| sources[s].min_rate)
            .sum();
        if floor >= c {
            return Err(DualError::Infeasible(net.link_ids()[l].clone()));
        }
    }

    let rates = |p: &[f64]| -> Vec<f64> {
        sources
            .iter()
            .map(|src| {
                let q: f64 = src.path.iter().map(|&l| p[l]).sum();
                clipped_log_rate(src.weight, q, src.min_rate, src.max_rate)
            })
            .collect()
    };

    let mut residual = f64::INFINITY;
    for sweep in 0..ORACLE_MAX_SWEEPS {
        for l in 0..links {
            p[l] = best_link_price(net, &p, l);
        }
        let x = rates(&p);
        residual = kkt_residuals(net, &x, &p).max();
        // Tighter than the acceptance tolerance; stop once it stops improving.
        if residual <= 1e-13 || (residual <= ORACLE_KKT_TOLERANCE * 1e-2 && sweep > 10_000) {
            break;
        }
    }
    if residual > ORACLE_KKT_TOLERANCE {
        return Err(DualError::NoConvergence {
            sweeps: ORACLE_MAX_SWEEPS,
            residual,
        });
    }

    let x = rates(&p);
    let residuals = kkt_residuals(net, &x, &p);
    let primal_value = sources
        .iter()
        .zip(&x)
        .map(|(src, &v)| src.weight * v.ln())
        .sum();
    Ok(OracleSolution {
        x_star: RateVector(x),
        p_star: PriceVector(p),
        primal_value,
        residuals,
    })
}

/// Minimizer of `D` along coordinate `link` with the other prices fixed.
fn best_link_price(net: &ValidatedNetwork, p: &[f64], link: usize) -> f64 {
    let c = net.capacities()[link];
    let users = net.link_sources(link);
    let sources = net.sources();
    // Price along each user's path excluding this link.
    let others: Vec<f64> = users
        .iter()
        .map(|&s| {
            sources[s]
                .path
                .iter()
                .filter(|&&l| l != link)
                .map(|&l| p[l])
                .sum()
        })
        .collect();
    let load = |price: f64| -> f64 {
        users
            .iter()
            .zip(&others)
            .map(|(&s, &q)| {
                let src = &sources[s];
                clipped_log_rate(src.weight, q + price, src.min_rate, src.max_rate)
            })
            .sum()
    };

    if load(0.0) <= c {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = p[link].max(1.0);
    while load(hi) > c {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if load(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
