//! Per-window impact networks.
//!
//! The directed matrix holds `D[j][i] = w_ji`, the impact of firm `j` on firm `i`.
//! Symmetrizing averages both directions (zeros included) into an undirected
//! network with weights in [0, 1].

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{common_days_by_index, WindowSlice};
use crate::risk::{edge_weight, estimate_mes, PairDiagnostic, PairImpact, RiskProfile};

pub const NETWORK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedNetwork {
    pub window_id: usize,
    pub label: String,
    pub firms: Vec<String>,
    /// `matrix[(j, i)] = w_ji`.
    pub matrix: DMatrix<f64>,
    /// Pairs whose weight was forced to zero by a diagnostic.
    pub diagnostics: Vec<(usize, usize, PairDiagnostic)>,
}

/// Builds the directed impact matrix of one window.
///
/// Each firm's mean return and expected shortfall come from its own observed
/// days; MES conditions on the days both firms are observed.
pub fn build_directed(slice: &WindowSlice, alpha: f64) -> Result<DirectedNetwork> {
    let n = slice.firms.len();
    if slice.degenerate || n < 2 {
        return Err(Error::OrderTooSmall(n, "a network needs at least two firms"));
    }
    let profiles: Vec<RiskProfile> = (0..n)
        .map(|f| RiskProfile::estimate(slice.firms[f].clone(), &slice.observed(f), alpha))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<PairImpact>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .filter(|&i| i != j)
                .map(|i| pair_impact(slice, &profiles, i, j, alpha))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut matrix = DMatrix::zeros(n, n);
    let mut diagnostics = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        let targets = (0..n).filter(|&i| i != j);
        for (i, pair) in targets.zip(row) {
            matrix[(j, i)] = pair.weight;
            if let Some(d) = pair.diagnostic {
                diagnostics.push((j, i, d));
            }
        }
    }
    Ok(DirectedNetwork {
        window_id: slice.window_id,
        label: slice.label.clone(),
        firms: slice.firms.clone(),
        matrix,
        diagnostics,
    })
}

/// Impact of firm `j` on firm `i` inside a window.
pub fn pair_impact(
    slice: &WindowSlice,
    profiles: &[RiskProfile],
    i: usize,
    j: usize,
    alpha: f64,
) -> Result<PairImpact> {
    let common = common_days_by_index(slice, i, j);
    if !common.estimable {
        return Ok(PairImpact::inestimable(&slice.firms[j], &slice.firms[i]));
    }
    let pick = |f: usize| -> Vec<f64> {
        common
            .days
            .iter()
            .map(|&d| slice.returns[f][d].expect("common day is observed"))
            .collect()
    };
    let mes = estimate_mes(&pick(i), &pick(j), alpha)?;
    edge_weight(&profiles[i], &profiles[j], mes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskNetwork {
    pub window_id: usize,
    pub label: String,
    firms: Vec<String>,
    weights: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexStats {
    pub firm: String,
    pub degree: usize,
    pub strength: f64,
}

impl RiskNetwork {
    /// Validates symmetry, a zero diagonal and weights in [0, 1].
    pub fn new(
        window_id: usize,
        label: impl Into<String>,
        firms: Vec<String>,
        weights: DMatrix<f64>,
    ) -> Result<Self> {
        let n = firms.len();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::InvalidPanel(format!(
                "{}x{} weights for {n} firms",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidPanel(format!("self-loop on {}", firms[i])));
            }
            for j in (i + 1)..n {
                let w = weights[(i, j)];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidPanel(format!(
                        "weight {w} between {} and {} outside [0, 1]",
                        firms[i], firms[j]
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidPanel(format!(
                        "asymmetric weight between {} and {}",
                        firms[i], firms[j]
                    )));
                }
            }
        }
        Ok(RiskNetwork {
            window_id,
            label: label.into(),
            firms,
            weights,
        })
    }

    /// Unlabelled network, mostly for tests and examples.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, x) in edges {
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
        let firms = (0..n).map(|i| format!("v{i:03}")).collect();
        RiskNetwork::new(0, "", firms, w)
    }

    pub fn order(&self) -> usize {
        self.firms.len()
    }

    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.order()).filter(move |&j| self.weights[(i, j)] > 0.0)
    }

    /// Number of unordered pairs with positive weight.
    pub fn edge_count(&self) -> usize {
        let n = self.order();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.weights[(i, j)] > 0.0).count())
            .sum()
    }

    /// Upper-triangle edge list `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.order();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn density(&self) -> Result<f64> {
        let n = self.order();
        if n < 2 {
            return Err(Error::OrderTooSmall(n, "density needs at least two vertices"));
        }
        Ok(self.edge_count() as f64 / (n * (n - 1) / 2) as f64)
    }

    pub fn strengths(&self) -> Vec<f64> {
        (0..self.order())
            .map(|i| self.weights.row(i).iter().sum())
            .collect()
    }

    pub fn vertex_stats(&self) -> Vec<VertexStats> {
        let strengths = self.strengths();
        (0..self.order())
            .map(|i| VertexStats {
                firm: self.firms[i].clone(),
                degree: self.neighbors(i).count(),
                strength: strengths[i],
            })
            .collect()
    }

    /// Subnetwork induced by `keep`, in the given order.
    pub fn induced(&self, keep: &[usize]) -> RiskNetwork {
        let w = DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
            self.weights[(keep[a], keep[b])]
        });
        RiskNetwork {
            window_id: self.window_id,
            label: self.label.clone(),
            firms: keep.iter().map(|&k| self.firms[k].clone()).collect(),
            weights: w,
        }
    }

    /// The network with vertex `v` and its edges removed.
    pub fn without_vertex(&self, v: usize) -> RiskNetwork {
        let keep: Vec<usize> = (0..self.order()).filter(|&k| k != v).collect();
        self.induced(&keep)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            schema_version: NETWORK_SCHEMA_VERSION,
            window_id: self.window_id,
            label: self.label.clone(),
            firms: self.firms.clone(),
            edges: self.edges(),
        }
    }

    pub fn from_document(doc: &NetworkDocument) -> Result<Self> {
        if doc.schema_version != NETWORK_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported network schema version {}",
                doc.schema_version
            )));
        }
        let n = doc.firms.len();
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, x) in &doc.edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidPanel(format!("bad edge ({i}, {j})")));
            }
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
        RiskNetwork::new(doc.window_id, doc.label.clone(), doc.firms.clone(), w)
    }
}

/// On-disk form of a network: firms plus the positive upper-triangle edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub schema_version: u32,
    pub window_id: usize,
    pub label: String,
    pub firms: Vec<String>,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Averages both directions of every pair: `W = (D + Dᵀ) / 2`.
pub fn symmetrize(directed: &DirectedNetwork) -> Result<RiskNetwork> {
    let d = &directed.matrix;
    let n = directed.firms.len();
    if d.nrows() != n || d.ncols() != n {
        return Err(Error::InvalidPanel("directed matrix is not square".into()));
    }
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (d[(i, j)] + d[(j, i)]) / 2.0
        }
    });
    RiskNetwork::new(
        directed.window_id,
        directed.label.clone(),
        directed.firms.clone(),
        w,
    )
}
