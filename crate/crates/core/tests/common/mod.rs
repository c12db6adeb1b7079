#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tailnet::RiskNetwork;

/// Random spanning tree plus extra edges, weights in `[lo, hi]`.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: f64, lo: f64, hi: f64) -> RiskNetwork {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(lo..=hi)));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !edges.iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i)) && rng.random_bool(extra) {
                edges.push((i, j, rng.random_range(lo..=hi)));
            }
        }
    }
    RiskNetwork::from_edges(n, &edges).unwrap()
}

/// Erdos-Renyi graph, possibly disconnected.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, lo: f64, hi: f64) -> RiskNetwork {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.push((i, j, rng.random_range(lo..=hi)));
            }
        }
    }
    RiskNetwork::from_edges(n, &edges).unwrap()
}

pub fn with_weights(net: &RiskNetwork, weights: DMatrix<f64>) -> RiskNetwork {
    RiskNetwork::new(net.window_id, net.label.clone(), net.firms().to_vec(), weights).unwrap()
}

pub fn unit_edges(n: usize, edges: &[(usize, usize)]) -> RiskNetwork {
    let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
    RiskNetwork::from_edges(n, &e).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
