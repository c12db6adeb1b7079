mod common;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_connected, random_graph, rel_err, unit_edges};
use tailnet::network::NetworkDocument;
use tailnet::spectral::connected_components;
use tailnet::study::{read_networks, read_reports, run_study_on};
use tailnet::synthetic::{factor_panel, FactorPanelSpec};
use tailnet::{
    analyze, build_directed, kirchhoff, normalized_kirchhoff, spectrum, symmetrize,
    weighted_laplacian, werc, werc_all, window_panel, RiskNetwork, StudyConfig, WindowConfig,
};

fn small_spec() -> FactorPanelSpec {
    FactorPanelSpec {
        n_firms: 8,
        tail_firm: 2,
        start: NaiveDate::from_ymd_opt(2008, 1, 1).unwrap(),
        end: NaiveDate::from_ymd_opt(2008, 6, 30).unwrap(),
        missing_rate: 0.1,
        ..FactorPanelSpec::default()
    }
}

fn oracle_tail(series: &[f64]) -> (f64, f64, f64) {
    let mut s = series.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((0.05 * s.len() as f64).floor() as usize).max(1);
    let q = s[k - 1];
    let tail: Vec<f64> = series.iter().copied().filter(|&v| v <= q).collect();
    let es = -tail.iter().sum::<f64>() / tail.len() as f64;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    (q, es, mean)
}

#[test]
fn directed_weights_match_pairwise_oracle() {
    let panel = factor_panel(&small_spec()).unwrap();
    let slices = window_panel(&panel, &WindowConfig::default()).unwrap();
    assert!(!slices.is_empty());
    for slice in &slices {
        let d = build_directed(slice, 0.05).unwrap();
        let n = slice.firms.len();
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    assert_eq!(d.matrix[(j, i)], 0.0);
                    continue;
                }
                let (_, es_i, mean_i) = oracle_tail(&slice.observed(i));
                let common: Vec<(f64, f64)> = slice.returns[i]
                    .iter()
                    .zip(&slice.returns[j])
                    .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                    .collect();
                let expected = if common.len() < slice.min_obs {
                    0.0
                } else {
                    let src: Vec<f64> = common.iter().map(|p| p.1).collect();
                    let (q_j, _, _) = oracle_tail(&src);
                    let cond: Vec<f64> = common.iter().filter(|p| p.1 <= q_j).map(|p| p.0).collect();
                    let mes = -cond.iter().sum::<f64>() / cond.len() as f64;
                    if mean_i < -mes {
                        0.0
                    } else {
                        1.0 - ((es_i - mes) / (mean_i + es_i)).clamp(0.0, 1.0)
                    }
                };
                let got = d.matrix[(j, i)];
                assert!(
                    (got - expected).abs() < 1e-12,
                    "{} {} -> {}: {got} vs {expected}",
                    slice.label,
                    slice.firms[j],
                    slice.firms[i]
                );
            }
        }
        let sym = symmetrize(&d).unwrap();
        for a in 0..n {
            for b in 0..n {
                let avg = (d.matrix[(a, b)] + d.matrix[(b, a)]) / 2.0;
                assert_eq!(sym.weight(a, b), avg);
            }
        }
    }
}

#[test]
fn werc_all_agrees_with_single_removals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.random_range(3..9);
        let net = random_connected(&mut rng, n, 0.4, 0.05, 1.0);
        let all = werc_all(&net).unwrap();
        let base = normalized_kirchhoff(kirchhoff(&net).unwrap(), n).unwrap();
        for (v, c) in all.iter().enumerate() {
            assert_eq!(*c, werc(&net, v).unwrap());
            let reduced = net.without_vertex(v);
            let comps = connected_components(&reduced);
            if comps.len() > 1 {
                assert!(c.is_disconnecting());
                assert_eq!(c.largest_survivor, comps.iter().map(Vec::len).max().unwrap());
            } else {
                let kn = normalized_kirchhoff(kirchhoff(&reduced).unwrap(), n - 1).unwrap();
                assert!((c.value - (kn - base) / base).abs() < 1e-12);
                assert_eq!(c.largest_survivor, n - 1);
            }
        }
    }
}

#[test]
fn unit_cycle_and_complete_graph() {
    for n in 3..12 {
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        let cycle = unit_edges(n, &edges);
        let k = kirchhoff(&cycle).unwrap();
        let expected = (n * n * n - n) as f64 / 12.0;
        assert!(rel_err(k, expected) < 1e-12, "C_{n}: {k} vs {expected}");
        let w = werc_all(&cycle).unwrap();
        assert!(w.iter().all(|c| (c.value - w[0].value).abs() < 1e-12));

        let all: Vec<_> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
        let complete = unit_edges(n, &all);
        let k = kirchhoff(&complete).unwrap();
        assert!(rel_err(k, (n - 1) as f64) < 1e-12, "K_{n}: {k}");
    }
}

#[test]
fn zero_eigenvalues_count_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let n = rng.random_range(2..12);
        let p = rng.random_range(0.05..0.6);
        let net = random_graph(&mut rng, n, p, 0.01, 1.0);
        let spec = spectrum(&weighted_laplacian(&net)).unwrap();
        assert_eq!(spec.zero_multiplicity, connected_components(&net).len());
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn disconnected_window_is_restricted_to_largest_component() {
    let net = RiskNetwork::from_edges(
        6,
        &[(0, 1, 0.5), (1, 2, 0.4), (0, 2, 0.9), (3, 4, 0.7)],
    )
    .unwrap();
    let report = analyze(&net).unwrap();
    assert!(!report.connected);
    assert_eq!((report.window_order, report.n), (6, 3));
    assert!(report.component_note.as_deref().unwrap().contains("v003"));
    let triangle = net.induced(&[0, 1, 2]);
    assert_eq!(report.kirchhoff, kirchhoff(&triangle).unwrap());
}

#[test]
fn network_documents_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let net = random_graph(&mut rng, 7, 0.5, 0.01, 1.0);
    let text = serde_json::to_string(&net.to_document()).unwrap();
    let doc: NetworkDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(RiskNetwork::from_document(&doc).unwrap(), net);
}

#[test]
fn full_calendar_study_writes_one_file_per_window() {
    let spec = FactorPanelSpec {
        n_firms: 8,
        tail_firm: 3,
        late_listing_every: 0,
        ..FactorPanelSpec::default()
    };
    let panel = factor_panel(&spec).unwrap();
    let out = run_study_on(&StudyConfig::default(), &panel).unwrap();
    assert_eq!(out.windows, 180);
    assert_eq!(out.reports.len(), 180);
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path(), true).unwrap();
    let count = |sub: &str| std::fs::read_dir(dir.path().join(sub)).unwrap().count();
    assert_eq!(count("networks"), 180);
    assert_eq!(count("reports"), 180);
    assert_eq!(count("rankings"), 5);
    assert_eq!(count("charts"), 3);
    let reports = read_reports(&dir.path().join("reports")).unwrap();
    assert_eq!(reports, out.reports);
    let nets = read_networks(&dir.path().join("networks")).unwrap();
    assert_eq!(nets, out.networks);
}

fn permuted(net: &RiskNetwork, perm: &[usize]) -> RiskNetwork {
    let n = net.order();
    let w = DMatrix::from_fn(n, n, |a, b| net.weight(perm[a], perm[b]));
    let firms = perm.iter().map(|&p| net.firms()[p].clone()).collect();
    RiskNetwork::new(0, "", firms, w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn centrality_is_permutation_equivariant(seed in any::<u64>(), n in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_connected(&mut rng, n, 0.5, 0.05, 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let p = permuted(&net, &perm);
        let (k0, k1) = (kirchhoff(&net).unwrap(), kirchhoff(&p).unwrap());
        prop_assert!(rel_err(k1, k0) < 1e-10);
        let (w0, w1) = (werc_all(&net).unwrap(), werc_all(&p).unwrap());
        for (a, &orig) in perm.iter().enumerate() {
            let (x, y) = (w1[a].value, w0[orig].value);
            prop_assert!(x == y || (x - y).abs() < 1e-9 * y.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn kirchhoff_scales_inversely_with_weights(seed in any::<u64>(), n in 2usize..9, c in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_connected(&mut rng, n, 0.5, 0.05, 1.0);
        let scaled = RiskNetwork::new(0, "", net.firms().to_vec(), net.weights() * c).unwrap();
        let (k, ks) = (kirchhoff(&net).unwrap(), kirchhoff(&scaled).unwrap());
        prop_assert!(rel_err(ks, k / c) < 1e-10);
    }
}
