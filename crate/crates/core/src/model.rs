//! Network utility maximization instances: links, sources, routes and utilities.
//!
//! A [`NetworkSpec`] is the user-facing description (string ids, JSON friendly).
//! [`validate_network`] turns it into a [`ValidatedNetwork`] with dense indices,
//! which is what every numerical routine in this crate consumes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default rate interval applied when a source omits `rate_bounds`.
pub const DEFAULT_RATE_BOUNDS: [f64; 2] = [1e-6, 1e6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityKind {
    /// `U(x) = weight * ln(x)`.
    LogWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub kind: UtilityKind,
    pub weight: f64,
}

impl UtilitySpec {
    pub fn log_weighted(weight: f64) -> Self {
        Self {
            kind: UtilityKind::LogWeighted,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: String,
    /// Ordered link ids traversed by the source.
    pub path: Vec<String>,
    pub utility: UtilitySpec,
    /// Closed interval `[m, M]` for the source rate.
    #[serde(default = "default_rate_bounds")]
    pub rate_bounds: [f64; 2],
}

fn default_rate_bounds() -> [f64; 2] {
    DEFAULT_RATE_BOUNDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub links: Vec<LinkSpec>,
    pub sources: Vec<SourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("network has no links")]
    NoLinks,
    #[error("network has no sources")]
    NoSources,
    #[error("duplicate link id `{0}`")]
    DuplicateLink(String),
    #[error("duplicate source id `{0}`")]
    DuplicateSource(String),
    #[error("link `{id}`: capacity must be positive and finite, got {capacity}")]
    BadCapacity { id: String, capacity: f64 },
    #[error("source `{id}`: utility weight must be positive and finite, got {weight}")]
    BadWeight { id: String, weight: f64 },
    #[error("source `{0}`: path is empty")]
    EmptyPath(String),
    #[error("source `{source_id}`: unknown link `{link}` in path")]
    UnknownLink { source_id: String, link: String },
    #[error("source `{source_id}`: link `{link}` appears more than once in path")]
    RepeatedLink { source_id: String, link: String },
    #[error("source `{id}`: rate bounds require 0 <= m < M < inf, got [{min}, {max}]")]
    BadRateBounds { id: String, min: f64, max: f64 },
}

/// A source after validation, with its path resolved to dense link indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub id: String,
    pub path: Vec<usize>,
    pub weight: f64,
    pub min_rate: f64,
    pub max_rate: f64,
}

impl Source {
    /// Rate maximizing `weight * ln(x) - x * path_price` over `[min_rate, max_rate]`.
    ///
    /// A zero (or denormal-small) path price saturates at the upper bound.
    pub fn rate(&self, path_price: f64) -> f64 {
        if path_price <= 0.0 {
            return self.max_rate;
        }
        (self.weight / path_price).clamp(self.min_rate, self.max_rate)
    }

    /// `weight * ln(x)`.
    pub fn utility(&self, rate: f64) -> f64 {
        self.weight * rate.ln()
    }
}

/// Immutable, densely indexed problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedNetwork {
    link_ids: Vec<String>,
    capacities: Vec<f64>,
    sources: Vec<Source>,
    /// For each link, the ascending indices of the sources crossing it.
    link_sources: Vec<Vec<usize>>,
}

impl ValidatedNetwork {
    pub fn num_links(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn link_ids(&self) -> &[String] {
        &self.link_ids
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn link_sources(&self, link: usize) -> &[usize] {
        &self.link_sources[link]
    }

    /// Sum of link prices along the path of `source`, accumulated in path order.
    pub fn path_price(&self, source: usize, prices: &[f64]) -> f64 {
        self.sources[source].path.iter().map(|&l| prices[l]).sum()
    }

    /// Load on `link` given one rate per source, summed in ascending source order.
    pub fn link_load(&self, link: usize, rates: &[f64]) -> f64 {
        self.link_sources[link].iter().map(|&s| rates[s]).sum()
    }

    /// Reconstructs a spec that validates back to an equal instance.
    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            links: self
                .link_ids
                .iter()
                .zip(&self.capacities)
                .map(|(id, &capacity)| LinkSpec {
                    id: id.clone(),
                    capacity,
                })
                .collect(),
            sources: self
                .sources
                .iter()
                .map(|s| SourceSpec {
                    id: s.id.clone(),
                    path: s.path.iter().map(|&l| self.link_ids[l].clone()).collect(),
                    utility: UtilitySpec::log_weighted(s.weight),
                    rate_bounds: [s.min_rate, s.max_rate],
                })
                .collect(),
        }
    }
}

/// Checks every structural invariant of `spec` and builds the dense instance.
pub fn validate_network(spec: &NetworkSpec) -> Result<ValidatedNetwork, ModelError> {
    if spec.links.is_empty() {
        return Err(ModelError::NoLinks);
    }
    if spec.sources.is_empty() {
        return Err(ModelError::NoSources);
    }

    let mut index = HashMap::with_capacity(spec.links.len());
    for (i, link) in spec.links.iter().enumerate() {
        if index.insert(link.id.as_str(), i).is_some() {
            return Err(ModelError::DuplicateLink(link.id.clone()));
        }
        if !(link.capacity > 0.0 && link.capacity.is_finite()) {
            return Err(ModelError::BadCapacity {
                id: link.id.clone(),
                capacity: link.capacity,
            });
        }
    }

    let mut seen_sources = HashMap::with_capacity(spec.sources.len());
    let mut sources = Vec::with_capacity(spec.sources.len());
    let mut link_sources = vec![Vec::new(); spec.links.len()];
    for (s, src) in spec.sources.iter().enumerate() {
        if seen_sources.insert(src.id.as_str(), s).is_some() {
            return Err(ModelError::DuplicateSource(src.id.clone()));
        }
        let weight = src.utility.weight;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(ModelError::BadWeight {
                id: src.id.clone(),
                weight,
            });
        }
        let [min, max] = src.rate_bounds;
        if !(min >= 0.0 && min < max && max.is_finite()) {
            return Err(ModelError::BadRateBounds {
                id: src.id.clone(),
                min,
                max,
            });
        }
        if src.path.is_empty() {
            return Err(ModelError::EmptyPath(src.id.clone()));
        }
        let mut path = Vec::with_capacity(src.path.len());
        for link in &src.path {
            let l = *index
                .get(link.as_str())
                .ok_or_else(|| ModelError::UnknownLink {
                    source_id: src.id.clone(),
                    link: link.clone(),
                })?;
            if path.contains(&l) {
                return Err(ModelError::RepeatedLink {
                    source_id: src.id.clone(),
                    link: link.clone(),
                });
            }
            path.push(l);
            link_sources[l].push(s);
        }
        sources.push(Source {
            id: src.id.clone(),
            path,
            weight,
            min_rate: min,
            max_rate: max,
        });
    }

    Ok(ValidatedNetwork {
        link_ids: spec.links.iter().map(|l| l.id.clone()).collect(),
        capacities: spec.links.iter().map(|l| l.capacity).collect(),
        sources,
        link_sources,
    })
}

/// Dense 0/1 link-by-source incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl RoutingMatrix {
    pub fn num_links(&self) -> usize {
        self.rows
    }

    pub fn num_sources(&self) -> usize {
        self.cols
    }

    pub fn get(&self, link: usize, source: usize) -> u8 {
        self.data[link * self.cols + source]
    }

    pub fn row(&self, link: usize) -> &[u8] {
        &self.data[link * self.cols..(link + 1) * self.cols]
    }

    pub fn column_sum(&self, source: usize) -> usize {
        (0..self.rows).map(|l| self.get(l, source) as usize).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|l| self.row(l).to_vec()).collect()
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged routing matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }
}

/// `R[l][s] = 1` iff link `l` lies on the path of source `s`.
pub fn routing_matrix(net: &ValidatedNetwork) -> RoutingMatrix {
    let rows = net.num_links();
    let cols = net.num_sources();
    let mut data = vec![0u8; rows * cols];
    for (s, src) in net.sources().iter().enumerate() {
        for &l in &src.path {
            data[l * cols + s] = 1;
        }
    }
    RoutingMatrix { rows, cols, data }
}

/// Builders for the small instances used throughout tests, benches and docs.
pub mod fixtures {
    use super::*;

    /// One link of capacity `capacity`, one log source of weight `weight` on bounds `[m, M]`.
    pub fn single_link(capacity: f64, weight: f64, bounds: [f64; 2]) -> NetworkSpec {
        NetworkSpec {
            links: vec![LinkSpec {
                id: "l0".into(),
                capacity,
            }],
            sources: vec![SourceSpec {
                id: "s0".into(),
                path: vec!["l0".into()],
                utility: UtilitySpec::log_weighted(weight),
                rate_bounds: bounds,
            }],
        }
    }

    /// Three links in series. Source `long` crosses all of them; four single-link
    /// sources sit on `l0`, `l1`, `l2` and `l0` again.
    pub fn chain3() -> NetworkSpec {
        let bounds = [1e-3, 100.0];
        let links = [("l0", 1.0), ("l1", 2.0), ("l2", 1.5)]
            .into_iter()
            .map(|(id, capacity)| LinkSpec {
                id: id.into(),
                capacity,
            })
            .collect();
        let mut sources = vec![SourceSpec {
            id: "long".into(),
            path: vec!["l0".into(), "l1".into(), "l2".into()],
            utility: UtilitySpec::log_weighted(1.0),
            rate_bounds: bounds,
        }];
        for (id, link, weight) in [
            ("s0", "l0", 1.0),
            ("s1", "l1", 2.0),
            ("s2", "l2", 1.5),
            ("s3", "l0", 0.5),
        ] {
            sources.push(SourceSpec {
                id: id.into(),
                path: vec![link.into()],
                utility: UtilitySpec::log_weighted(weight),
                rate_bounds: bounds,
            });
        }
        NetworkSpec { links, sources }
    }
}
