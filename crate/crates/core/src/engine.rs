//! Gradient-projection price iteration, synchronous and with bounded staleness.
//!
//! Each link runs `p_l <- max(0, p_l - gamma * (c_l - load_l))`. In the
//! asynchronous regime sources see link prices up to `t0` iterations old and
//! links see source rates up to `t0` iterations old. Asynchrony is simulated
//! inside one deterministic loop; delays come from a counter-based hash of
//! `(seed, t, source, link, direction)` so every run is replayable.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{dual_gradient, dual_value, rates_at, PriceVector, RateVector};
use crate::model::ValidatedNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayModel {
    /// Every exchange sees current values.
    None,
    /// Every exchange is exactly `d` iterations stale (clamped at the start).
    Fixed(usize),
    /// Staleness drawn uniformly from `{0, ..., t0}` per exchange and iteration.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub gamma: f64,
    #[serde(default)]
    pub t0: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delay_model")]
    pub delay_model: DelayModel,
}

fn default_steps() -> usize {
    10_000
}

fn default_delay_model() -> DelayModel {
    DelayModel::Uniform
}

impl EngineConfig {
    pub fn synchronous(gamma: f64, steps: usize) -> Self {
        Self {
            gamma,
            t0: 0,
            steps,
            seed: 0,
            delay_model: DelayModel::None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(EngineError::BadGamma(self.gamma));
        }
        if self.steps == 0 {
            return Err(EngineError::NoSteps);
        }
        if let DelayModel::Fixed(d) = self.delay_model {
            if d > self.t0 {
                return Err(EngineError::DelayAboveBound { delay: d, t0: self.t0 });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("step size must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("horizon must be at least one step")]
    NoSteps,
    #[error("fixed delay {delay} exceeds the staleness bound t0 = {t0}")]
    DelayAboveBound { delay: usize, t0: usize },
    #[error("initial prices: expected {expected} nonnegative finite entries")]
    BadInitialPrices { expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Link price travelling to a source.
    Price = 0,
    /// Source rate travelling to a link.
    Rate = 1,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn delay(cfg: &EngineConfig, t: usize, source: usize, link: usize, dir: Direction) -> usize {
    match cfg.delay_model {
        DelayModel::None => 0,
        DelayModel::Fixed(d) => d,
        DelayModel::Uniform => {
            if cfg.t0 == 0 {
                return 0;
            }
            let key = ((source as u64) << 33) ^ ((link as u64) << 1) ^ dir as u64;
            let h = mix64(mix64(mix64(cfg.seed) ^ t as u64) ^ key);
            (h % (cfg.t0 as u64 + 1)) as usize
        }
    }
}

/// Iteration state with staleness buffers.
///
/// `price_history` holds `p(t - t0), ..., p(t)`; `rate_history` holds
/// `x(t - t0 - 1), ..., x(t - 1)`. Both have length `t0 + 1`; entries before
/// time zero are the bootstrap values `p0` and `x(p0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmState {
    pub t: usize,
    pub p: PriceVector,
    price_history: VecDeque<Vec<f64>>,
    rate_history: VecDeque<Vec<f64>>,
}

impl AlgorithmState {
    pub fn bootstrap(net: &ValidatedNetwork, t0: usize, p0: PriceVector) -> Self {
        let x0 = rates_at(net, &p0).into_inner();
        Self {
            t: 0,
            price_history: std::iter::repeat_n(p0.to_vec(), t0 + 1).collect(),
            rate_history: std::iter::repeat_n(x0, t0 + 1).collect(),
            p: p0,
        }
    }

    pub fn history_depth(&self) -> usize {
        self.price_history.len()
    }

    /// `p(t - age)`.
    pub fn price_aged(&self, age: usize) -> &[f64] {
        let n = self.price_history.len();
        &self.price_history[n - 1 - age.min(n - 1)]
    }

    /// Rate vector `age` entries back from the newest.
    fn rate_aged(&self, age: usize) -> &[f64] {
        let n = self.rate_history.len();
        &self.rate_history[n - 1 - age.min(n - 1)]
    }

    fn push(history: &mut VecDeque<Vec<f64>>, v: Vec<f64>) {
        history.pop_front();
        history.push_back(v);
    }
}

#[inline]
fn project_update(price: f64, gradient: f64, gamma: f64) -> f64 {
    let next = price - gamma * gradient;
    if next > 0.0 || next.is_nan() {
        next
    } else {
        0.0
    }
}

/// One synchronous gradient-projection step.
pub fn sync_step(net: &ValidatedNetwork, p: &[f64], gamma: f64) -> PriceVector {
    let g = dual_gradient(net, p);
    let next = p
        .iter()
        .zip(&g)
        .map(|(&p, &g)| project_update(p, g, gamma))
        .collect();
    PriceVector::from_raw(next)
}

/// Rates the sources compute at `state.t` from (possibly stale) link prices.
pub fn source_rates(net: &ValidatedNetwork, state: &AlgorithmState, cfg: &EngineConfig) -> RateVector {
    let t = state.t;
    RateVector::new(
        net.sources()
            .iter()
            .enumerate()
            .map(|(s, src)| {
                let q: f64 = src
                    .path
                    .iter()
                    .map(|&l| state.price_aged(delay(cfg, t, s, l, Direction::Price))[l])
                    .sum();
                src.rate(q)
            })
            .collect(),
    )
}

/// One bounded-staleness iteration. Returns the rates the sources used at the
/// old `state.t`; on return the state has advanced by one.
pub fn async_step(net: &ValidatedNetwork, state: &mut AlgorithmState, cfg: &EngineConfig) -> RateVector {
    let t = state.t;
    let x = source_rates(net, state, cfg);
    AlgorithmState::push(&mut state.rate_history, x.to_vec());

    let next: Vec<f64> = (0..net.num_links())
        .map(|l| {
            let load: f64 = net
                .link_sources(l)
                .iter()
                .map(|&s| {
                    // age 0 is x(t), which was just pushed
                    state.rate_aged(delay(cfg, t, s, l, Direction::Rate))[s]
                })
                .sum();
            project_update(state.p[l], net.capacities()[l] - load, cfg.gamma)
        })
        .collect();

    AlgorithmState::push(&mut state.price_history, next.clone());
    // Non-finite entries are kept so `run` can flag them.
    state.p = PriceVector::from_raw(next);
    state.t += 1;
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub dual: f64,
    /// `p(t + 1) - p(t)`; absent on the final row.
    pub pi: Option<Vec<f64>>,
    pub pi_norm_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// A non-finite price or dual value appeared at this iteration; the trace
    /// stops just before it.
    NonFinite { t: usize },
    /// The increments over the last quarter of the run did not shrink
    /// relative to the quarter before it.
    NoContraction { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub divergence: Option<Divergence>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    /// `D(p(t))` for every row.
    pub fn dual_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dual).collect()
    }

    /// `||pi(t)||^2` for every row that has an increment.
    pub fn pi_norm_sq_series(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.pi_norm_sq).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

const TAIL_MIN_INCREMENTS: usize = 64;
const TAIL_FLOOR: f64 = 1e-20;
const TAIL_RATIO: f64 = 0.5;

fn tail_contraction(trace: &Trace, t0: usize) -> Option<Divergence> {
    let pis = trace.pi_norm_sq_series();
    let n = pis.len();
    if n < TAIL_MIN_INCREMENTS.max(8 * (2 * t0 + 1)) {
        return None;
    }
    let q = n / 4;
    let max_of = |s: &[f64]| s.iter().copied().fold(0.0_f64, f64::max);
    let last = max_of(&pis[n - q..]);
    let prev = max_of(&pis[n - 2 * q..n - q]);
    let scale = trace
        .rows
        .iter()
        .flat_map(|r| r.p.iter())
        .fold(0.0_f64, |m, p| m.max(p * p));
    if last <= TAIL_FLOOR * (1.0 + scale) {
        return None;
    }
    let ratio = if prev > 0.0 { last / prev } else { f64::INFINITY };
    (ratio >= TAIL_RATIO).then_some(Divergence::NoContraction { ratio })
}

/// Runs `cfg.steps` rows (`cfg.steps - 1` updates) from `p0`.
pub fn run(net: &ValidatedNetwork, cfg: &EngineConfig, p0: &[f64]) -> Result<Trace, EngineError> {
    cfg.validate()?;
    if p0.len() != net.num_links() {
        return Err(EngineError::BadInitialPrices {
            expected: net.num_links(),
        });
    }
    let p0 = PriceVector::new(p0.to_vec()).map_err(|_| EngineError::BadInitialPrices {
        expected: net.num_links(),
    })?;

    let synchronous = cfg.t0 == 0;
    let mut state = AlgorithmState::bootstrap(net, cfg.t0, p0.clone());
    let mut sync_p = p0;
    let mut rows: Vec<TraceRow> = Vec::with_capacity(cfg.steps);
    let mut divergence = None;

    for t in 0..cfg.steps {
        let p = if synchronous {
            sync_p.to_vec()
        } else {
            state.p.to_vec()
        };
        let dual = dual_value(net, &p);
        if !dual.is_finite() {
            divergence = Some(Divergence::NonFinite { t });
            break;
        }
        let last = t + 1 == cfg.steps;
        let (x, next) = if last {
            let x = if synchronous {
                rates_at(net, &p)
            } else {
                source_rates(net, &state, cfg)
            };
            (x, None)
        } else if synchronous {
            let x = rates_at(net, &p);
            sync_p = sync_step(net, &p, cfg.gamma);
            (x, Some(sync_p.to_vec()))
        } else {
            let x = async_step(net, &mut state, cfg);
            (x, Some(state.price_aged(0).to_vec()))
        };

        let (pi, pi_norm_sq) = match next {
            Some(next) if all_finite(&next) => {
                let pi: Vec<f64> = next.iter().zip(&p).map(|(a, b)| a - b).collect();
                let sq = pi.iter().map(|v| v * v).sum();
                (Some(pi), Some(sq))
            }
            Some(_) => {
                divergence = Some(Divergence::NonFinite { t: t + 1 });
                (None, None)
            }
            None => (None, None),
        };
        let stop = divergence.is_some();
        rows.push(TraceRow {
            t,
            p,
            x: x.into_inner(),
            dual,
            pi,
            pi_norm_sq,
        });
        if stop {
            break;
        }
    }

    let mut trace = Trace { rows, divergence };
    if trace.divergence.is_none() {
        trace.divergence = tail_contraction(&trace, cfg.t0);
    }
    Ok(trace)
}
