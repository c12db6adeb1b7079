//! Spectral robustness of a risk network.
//!
//! The weighted Kirchhoff index is `K = n * sum(1 / mu_i)` over the nonzero
//! eigenvalues of the weighted Laplacian `L = S - W`. It equals the sum of the
//! effective resistances over all vertex pairs, so lower values mean a more robust
//! network. The normalized index divides by `C(n, 2)`, which makes graphs of
//! different order comparable, and the weighted effective resistance centrality
//! (WERC) of a vertex is the relative change of the normalized index when that
//! vertex is removed.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::RiskNetwork;

/// Relative tolerance under which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

pub fn weighted_laplacian(net: &RiskNetwork) -> DMatrix<f64> {
    let strengths = net.strengths();
    let mut l = -net.weights().clone();
    for (i, s) in strengths.into_iter().enumerate() {
        l[(i, i)] = s;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub zero_multiplicity: usize,
    pub n: usize,
}

pub fn spectrum(laplacian: &DMatrix<f64>) -> Result<LaplacianSpectrum> {
    let n = laplacian.nrows();
    if laplacian.ncols() != n {
        return Err(Error::Numerical(format!(
            "{}x{} matrix is not square",
            n,
            laplacian.ncols()
        )));
    }
    if n == 0 {
        return Ok(LaplacianSpectrum {
            eigenvalues: vec![],
            zero_multiplicity: 0,
            n,
        });
    }
    let scale = laplacian.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (laplacian[(i, j)] - laplacian[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Numerical(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let mut eigenvalues: Vec<f64> = laplacian.symmetric_eigenvalues().iter().copied().collect();
    if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "eigensolver produced {bad} for a {n}x{n} matrix with max |entry| {}",
            laplacian.amax()
        )));
    }
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let cutoff = ZERO_EIGENVALUE_TOL * eigenvalues[0].max(1.0);
    let zero_multiplicity = eigenvalues.iter().filter(|mu| mu.abs() < cutoff).count();
    Ok(LaplacianSpectrum {
        eigenvalues,
        zero_multiplicity,
        n,
    })
}

/// `n * sum(1 / mu)` over the nonzero eigenvalues. Requires a connected graph.
pub fn kirchhoff_index(spec: &LaplacianSpectrum) -> Result<f64> {
    if spec.zero_multiplicity != 1 {
        return Err(Error::Disconnected {
            components: spec.zero_multiplicity,
        });
    }
    let inverse_sum: f64 = spec.eigenvalues[..spec.n - 1].iter().map(|mu| 1.0 / mu).sum();
    Ok(spec.n as f64 * inverse_sum)
}

pub fn kirchhoff(net: &RiskNetwork) -> Result<f64> {
    kirchhoff_index(&spectrum(&weighted_laplacian(net))?)
}

/// Sum of pairwise effective resistances computed from the Moore–Penrose
/// inverse of the Laplacian, `L+ = (L + J/n)^-1 - J/n`.
///
/// Independent of the eigenvalue route; used to cross-check `kirchhoff_index`.
pub fn effective_resistance_oracle(net: &RiskNetwork) -> Result<f64> {
    let n = net.order();
    let components = connected_components(net).len();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let shift = 1.0 / n as f64;
    let shifted = weighted_laplacian(net).add_scalar(shift);
    let inverse = shifted
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("shifted Laplacian is singular".into()))?;
    let pinv = inverse.add_scalar(-shift);
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)];
        }
    }
    Ok(total)
}

pub fn normalized_kirchhoff(kirchhoff: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::OrderTooSmall(n, "normalized Kirchhoff index needs n >= 2"));
    }
    Ok(kirchhoff / (n * (n - 1) / 2) as f64)
}

/// Positive-weight connected components, each sorted, ordered by smallest vertex.
pub fn connected_components(net: &RiskNetwork) -> Vec<Vec<usize>> {
    let n = net.order();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for u in net.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Vertices of the largest component; ties go to the lexicographically
/// smallest sorted list of firm identifiers.
pub fn largest_component_vertices(net: &RiskNetwork) -> Vec<usize> {
    let firms = net.firms();
    let key = |c: &Vec<usize>| {
        let mut ids: Vec<&str> = c.iter().map(|&v| firms[v].as_str()).collect();
        ids.sort_unstable();
        ids
    };
    connected_components(net)
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| key(b).cmp(&key(a))))
        .unwrap_or_default()
}

pub fn largest_component(net: &RiskNetwork) -> RiskNetwork {
    let keep = largest_component_vertices(net);
    if keep.len() == net.order() {
        return net.clone();
    }
    net.induced(&keep)
}

/// WERC of a single vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexCentrality {
    /// `+inf` when removing the vertex disconnects the graph.
    pub value: f64,
    /// Order of the largest component left after the removal.
    pub largest_survivor: usize,
}

impl VertexCentrality {
    pub fn is_disconnecting(&self) -> bool {
        self.value == f64::INFINITY
    }
}

fn check_werc_input(net: &RiskNetwork) -> Result<()> {
    let n = net.order();
    if n < 3 {
        return Err(Error::OrderTooSmall(n, "centrality needs n >= 3"));
    }
    let components = connected_components(net).len();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

fn werc_given_base(net: &RiskNetwork, vertex: usize, base: f64) -> Result<VertexCentrality> {
    let reduced = net.without_vertex(vertex);
    let components = connected_components(&reduced);
    let largest_survivor = components.iter().map(Vec::len).max().unwrap_or(0);
    if components.len() > 1 {
        return Ok(VertexCentrality {
            value: f64::INFINITY,
            largest_survivor,
        });
    }
    let reduced_n = normalized_kirchhoff(kirchhoff(&reduced)?, reduced.order())?;
    Ok(VertexCentrality {
        value: (reduced_n - base) / base,
        largest_survivor,
    })
}

fn base_normalized(net: &RiskNetwork) -> Result<f64> {
    normalized_kirchhoff(kirchhoff(net)?, net.order())
}

/// `(K_N(G - v) - K_N(G)) / K_N(G)`, each index normalized by its own order.
pub fn werc(net: &RiskNetwork, vertex: usize) -> Result<VertexCentrality> {
    check_werc_input(net)?;
    if vertex >= net.order() {
        return Err(Error::UnknownFirm(format!("vertex {vertex}")));
    }
    werc_given_base(net, vertex, base_normalized(net)?)
}

/// WERC for every vertex, each removal with a fresh spectrum.
pub fn werc_all(net: &RiskNetwork) -> Result<Vec<VertexCentrality>> {
    check_werc_input(net)?;
    let base = base_normalized(net)?;
    (0..net.order())
        .into_par_iter()
        .map(|v| werc_given_base(net, v, base))
        .collect()
}

/// Barrat weighted clustering coefficient of one vertex; 0 when its degree is
/// at most one.
pub fn barrat_clustering(net: &RiskNetwork, vertex: usize) -> f64 {
    let neighbors: Vec<usize> = net.neighbors(vertex).collect();
    let k = neighbors.len();
    if k <= 1 {
        return 0.0;
    }
    let strength: f64 = neighbors.iter().map(|&j| net.weight(vertex, j)).sum();
    let mut total = 0.0;
    for (a, &j) in neighbors.iter().enumerate() {
        for &h in &neighbors[a + 1..] {
            if net.weight(j, h) > 0.0 {
                // each unordered pair counts twice in the ordered sum
                total += net.weight(vertex, j) + net.weight(vertex, h);
            }
        }
    }
    (total / (strength * (k - 1) as f64)).clamp(0.0, 1.0)
}

pub fn barrat_clustering_all(net: &RiskNetwork) -> Vec<f64> {
    (0..net.order()).map(|v| barrat_clustering(net, v)).collect()
}

/// Per-firm line of a robustness report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRobustness {
    pub firm: String,
    #[serde(with = "crate::serde_inf")]
    pub werc: f64,
    pub largest_survivor: usize,
    pub clustering: f64,
    pub strength: f64,
    pub degree: usize,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema_version: u32,
    pub window_id: usize,
    pub label: String,
    /// Order of the full window network.
    pub window_order: usize,
    /// Density of the full window network.
    pub density: f64,
    /// Whether the full window network was connected.
    pub connected: bool,
    /// Set when the analysis was restricted to the largest component.
    pub component_note: Option<String>,
    /// Order of the analyzed network.
    pub n: usize,
    pub kirchhoff: f64,
    pub normalized_kirchhoff: f64,
    pub firms: Vec<FirmRobustness>,
}

impl RobustnessReport {
    pub fn median_clustering(&self) -> f64 {
        let mut c: Vec<f64> = self.firms.iter().map(|f| f.clustering).collect();
        median(&mut c)
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Full robustness analysis of one window network. Disconnected networks are
/// restricted to their largest component first.
pub fn analyze(net: &RiskNetwork) -> Result<RobustnessReport> {
    let density = net.density()?;
    let keep = largest_component_vertices(net);
    let connected = keep.len() == net.order();
    let (analyzed, component_note) = if connected {
        (net.clone(), None)
    } else {
        let dropped: Vec<&str> = (0..net.order())
            .filter(|v| !keep.contains(v))
            .map(|v| net.firms()[v].as_str())
            .collect();
        let note = format!(
            "restricted to largest component ({} of {} firms); dropped: {}",
            keep.len(),
            net.order(),
            dropped.join(", ")
        );
        (net.induced(&keep), Some(note))
    };

    let k = kirchhoff(&analyzed)?;
    let normalized = normalized_kirchhoff(k, analyzed.order())?;
    let centrality = werc_all(&analyzed)?;
    let clustering = barrat_clustering_all(&analyzed);
    let stats = analyzed.vertex_stats();
    let firms = stats
        .into_iter()
        .zip(centrality)
        .zip(clustering)
        .map(|((s, c), cl)| FirmRobustness {
            firm: s.firm,
            werc: c.value,
            largest_survivor: c.largest_survivor,
            clustering: cl,
            strength: s.strength,
            degree: s.degree,
        })
        .collect();
    Ok(RobustnessReport {
        schema_version: REPORT_SCHEMA_VERSION,
        window_id: net.window_id,
        label: net.label.clone(),
        window_order: net.order(),
        density,
        connected,
        component_note,
        n: analyzed.order(),
        kirchhoff: k,
        normalized_kirchhoff: normalized,
        firms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, edges: &[(usize, usize)]) -> RiskNetwork {
        let e: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        RiskNetwork::from_edges(n, &e).unwrap()
    }

    fn triangle() -> RiskNetwork {
        unit(3, &[(0, 1), (1, 2), (0, 2)])
    }

    // a - c - b with c at index 2
    fn path3() -> RiskNetwork {
        unit(3, &[(0, 2), (2, 1)])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn laplacian_examples() {
        let two = RiskNetwork::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            weighted_laplacian(&two),
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        let l = weighted_laplacian(&triangle());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let two = RiskNetwork::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let s = spectrum(&weighted_laplacian(&two)).unwrap();
        assert!(close(s.eigenvalues[0], 2.0, 1e-12) && close(s.eigenvalues[1], 0.0, 1e-12));
        assert_eq!(s.zero_multiplicity, 1);

        let s = spectrum(&weighted_laplacian(&triangle())).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([3.0, 3.0, 0.0]) {
            assert!(close(*got, want, 1e-12), "{:?}", s.eigenvalues);
        }
        let s = spectrum(&weighted_laplacian(&path3())).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([3.0, 1.0, 0.0]) {
            assert!(close(*got, want, 1e-12), "{:?}", s.eigenvalues);
        }
    }

    #[test]
    fn spectrum_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
        assert!(matches!(spectrum(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn kirchhoff_examples() {
        for w in [1.0, 0.5, 0.25] {
            let net = RiskNetwork::from_edges(2, &[(0, 1, w)]).unwrap();
            assert!(close(kirchhoff(&net).unwrap(), 1.0 / w, 1e-12));
            assert!(close(effective_resistance_oracle(&net).unwrap(), 1.0 / w, 1e-12));
        }
        assert!(close(kirchhoff(&triangle()).unwrap(), 2.0, 1e-12));
        assert!(close(kirchhoff(&path3()).unwrap(), 4.0, 1e-12));
        assert!(close(effective_resistance_oracle(&triangle()).unwrap(), 2.0, 1e-12));
        assert!(close(effective_resistance_oracle(&path3()).unwrap(), 4.0, 1e-12));

        let split = unit(4, &[(0, 1), (2, 3)]);
        assert!(matches!(kirchhoff(&split), Err(Error::Disconnected { components: 2 })));
        assert!(effective_resistance_oracle(&split).is_err());
    }

    #[test]
    fn normalized_examples() {
        assert!(close(normalized_kirchhoff(1.0, 2).unwrap(), 1.0, 1e-12));
        assert!(close(normalized_kirchhoff(2.0, 3).unwrap(), 2.0 / 3.0, 1e-12));
        assert!(close(normalized_kirchhoff(4.0, 3).unwrap(), 4.0 / 3.0, 1e-12));
        assert!(normalized_kirchhoff(0.0, 1).is_err());
    }

    #[test]
    fn werc_examples() {
        let p = path3();
        let leaf = werc(&p, 0).unwrap();
        assert!(close(leaf.value, -0.25, 1e-12));
        assert_eq!(leaf.largest_survivor, 2);
        let center = werc(&p, 2).unwrap();
        assert!(center.is_disconnecting());
        assert_eq!(center.largest_survivor, 1);

        let all = werc_all(&p).unwrap();
        assert!(close(all[0].value, -0.25, 1e-12));
        assert!(close(all[1].value, -0.25, 1e-12));
        assert!(all[2].is_disconnecting());

        let k4 = unit(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let all = werc_all(&k4).unwrap();
        for c in &all {
            // K_N(K_n) = 2/n, so the relative change is n/(n-1) - 1
            assert!(close(c.value, 1.0 / 3.0, 1e-12));
        }

        assert!(matches!(
            werc(&RiskNetwork::from_edges(2, &[(0, 1, 1.0)]).unwrap(), 0),
            Err(Error::OrderTooSmall(..))
        ));
        assert!(matches!(
            werc(&unit(4, &[(0, 1), (2, 3)]), 0),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn clustering_examples() {
        for c in barrat_clustering_all(&triangle()) {
            assert_eq!(c, 1.0);
        }
        let star = unit(4, &[(0, 1), (0, 2), (0, 3)]);
        for c in barrat_clustering_all(&star) {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn largest_component_cases() {
        let t = triangle();
        assert_eq!(largest_component(&t), t);

        let mut edges: Vec<(usize, usize)> = (0..4).map(|i| (i, i + 1)).collect();
        edges.extend([(5, 6), (6, 7)]);
        let two = unit(8, &edges);
        let big = largest_component(&two);
        assert_eq!(big.order(), 5);
        assert_eq!(big.firms(), &two.firms()[..5]);

        // equal sizes: {v000, v001} beats {v002, v003}
        let tie = unit(4, &[(2, 3), (0, 1)]);
        assert_eq!(largest_component_vertices(&tie), vec![0, 1]);

        let s = spectrum(&weighted_laplacian(&two)).unwrap();
        assert_eq!(s.zero_multiplicity, connected_components(&two).len());
    }

    #[test]
    fn analyze_restricts_to_largest_component() {
        let net = unit(6, &[(0, 1), (1, 2), (2, 3), (0, 3), (4, 5)]);
        let report = analyze(&net).unwrap();
        assert!(!report.connected);
        assert_eq!(report.n, 4);
        assert_eq!(report.window_order, 6);
        assert!(report.component_note.as_deref().unwrap().contains("v004"));
        assert!(close(report.density, 5.0 / 15.0, 1e-15));
        // 4-cycle: vertex-transitive
        let first = report.firms[0].werc;
        assert!(report.firms.iter().all(|f| close(f.werc, first, 1e-12)));
    }

    #[test]
    fn report_json_writes_inf_as_string() {
        let report = analyze(&unit(4, &[(0, 1), (1, 2), (2, 3)])).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"werc\":\"inf\""));
        let back: RobustnessReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
