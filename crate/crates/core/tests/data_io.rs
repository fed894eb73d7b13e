mod common;

use common::random_hypergraph;
use heihnn::data::*;
use heihnn::{Error, Hypergraph, Matrix, Rng};

fn edges_of(h: &Hypergraph) -> Vec<Vec<usize>> {
    h.edges()
}

#[test]
fn dataset_directory_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = synth_generate(&SynthConfig {
        outlier_rate: 0.2,
        ..SynthConfig::default()
    })
    .unwrap();
    // values that a short decimal rendering would not survive
    data.features[(0, 0)] = 0.1 + 0.2;
    data.features[(1, 1)] = -1.0e-300;
    data.features[(2, 2)] = std::f64::consts::PI * 1e17;
    write_dir(dir.path(), &data).unwrap();
    let back = load_dir(dir.path(), 7).unwrap();
    assert_eq!(back.hypergraph, data.hypergraph);
    assert_eq!(back.labels, data.labels);
    assert_eq!(back.classes, data.classes);
    let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.features), bits(&data.features));
    // the split is a function of the seed alone
    assert_eq!(back.train_idx, data.train_idx);
    assert_eq!(back, data);
}

#[test]
fn random_hypergraph_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    let mut rng = Rng::new(9);
    for _ in 0..50 {
        let n = 1 + rng.below(30);
        let m = 1 + rng.below(20);
        let h = random_hypergraph(&mut rng, n, m, 7);
        write_hypergraph(&path, &h).unwrap();
        assert_eq!(read_hypergraph(&path).unwrap(), h);
    }
}

#[test]
fn sparse_and_dense_feature_rows_agree() {
    let dense = parse_features("2 4\n0 1.5 0 -2\n0 0 0 0\n", "f").unwrap();
    let sparse = parse_features("2 4\n1:1.5 3:-2\n\n", "f").unwrap();
    assert_eq!(dense, sparse);
    assert!(parse_features("1 2\n5:1\n", "f").is_err());
}

#[test]
fn graph_and_label_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let edges = vec![(0, 1), (1, 2), (3, 0)];
    write_graph(&g, 5, &edges).unwrap();
    assert_eq!(read_graph(&g).unwrap(), (5, edges));
    let l = dir.path().join("l.txt");
    write_labels(&l, &[2, 0, 1, 1]).unwrap();
    assert_eq!(read_labels(&l).unwrap(), vec![2, 0, 1, 1]);
}

#[test]
fn empty_hyperedge_line_is_rejected_with_its_line_number() {
    let err = parse_hypergraph("3 3\n0 1\n\n2\n", "hg.txt").unwrap_err();
    match err {
        Error::Parse { line, msg, .. } => {
            assert_eq!(line, 3);
            assert!(msg.contains("empty"), "{msg}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn malformed_files_name_the_line() {
    let err = parse_hypergraph("2 1\n0 x\n", "hg.txt").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    let err = parse_labels("0\n1\n-3\n", "labels.txt").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    let err = parse_graph("3 1\n0 7\n", "g.txt").unwrap_err();
    assert!(err.to_string().contains('7'), "{err}");
}

#[test]
fn manifest_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_generate(&SynthConfig::default()).unwrap();
    write_dir(dir.path(), &data).unwrap();
    std::fs::write(dir.path().join("manifest.txt"), "expected_n=200\nexpected_m=121\n").unwrap();
    match load_dir(dir.path(), 0) {
        Err(Error::StatMismatch { field, expected, found }) => {
            assert_eq!((field, expected, found), ("expected_m", 121, 120));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn neighbor_expansion_examples() {
    let empty = neighbor_hypergraph(3, &[], 1).unwrap();
    assert_eq!(edges_of(&empty), vec![vec![0], vec![1], vec![2]]);
    let triangle = neighbor_hypergraph(3, &[(0, 1), (1, 2), (2, 0)], 1).unwrap();
    assert_eq!(edges_of(&triangle), vec![vec![0, 1, 2]]);
    let path = neighbor_hypergraph(3, &[(0, 1), (1, 2)], 1).unwrap();
    assert_eq!(edges_of(&path), vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]);
    assert!(neighbor_hypergraph(3, &[(0, 3)], 1).is_err());
}

#[test]
fn neighbor_expansion_keeps_each_node_in_its_own_neighborhood() {
    let mut rng = Rng::new(4);
    for _ in 0..30 {
        let n = 1 + rng.below(40);
        let edges: Vec<(usize, usize)> = (0..rng.below(3 * n)).map(|_| (rng.below(n), rng.below(n))).collect();
        let hops = 1 + rng.below(2);
        let h = neighbor_hypergraph(n, &edges, hops).unwrap();
        let sets = h.edges();
        for v in 0..n {
            // the hyperedge emitted for v, or the earlier identical one kept
            // by dedup, contains v and its direct neighbors
            let mut want = vec![v];
            for &(a, b) in &edges {
                if a == v {
                    want.push(b);
                }
                if b == v {
                    want.push(a);
                }
            }
            assert!(
                sets.iter()
                    .any(|s| want.iter().all(|u| s.contains(u)) && s.contains(&v)),
                "node {v} has no hyperedge containing its neighborhood"
            );
        }
        let mut dedup = sets.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), sets.len(), "duplicate hyperedges survived");
    }
}

#[test]
fn knn_examples() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [10.0]]);
    let h = knn_hypergraph(&x, 2, Distance::Euclidean).unwrap();
    assert_eq!(edges_of(&h), vec![vec![0, 1], vec![0, 1], vec![1, 2]]);
    let full = knn_hypergraph(&x, 3, Distance::Euclidean).unwrap();
    assert!(edges_of(&full).iter().all(|e| e == &vec![0, 1, 2]));
    assert!(knn_hypergraph(&x, 1, Distance::Euclidean).is_err());
    assert!(knn_hypergraph(&x, 4, Distance::Euclidean).is_err());
}

#[test]
fn knn_members_are_the_nearest_by_brute_force() {
    let mut rng = Rng::new(12);
    for _ in 0..20 {
        let n = 2 + rng.below(199);
        let d = 1 + rng.below(4);
        // coarse grid values so that ties actually occur
        let x = Matrix::from_fn(n, d, |_, _| rng.below(5) as f64);
        let k = 2 + rng.below(n - 1);
        let h = knn_hypergraph(&x, k, Distance::Euclidean).unwrap();
        assert_eq!(h.m(), n);
        let dist = |a: usize, b: usize| -> f64 {
            x.row(a)
                .iter()
                .zip(x.row(b))
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        };
        for v in 0..n {
            let members = h.members(v);
            assert_eq!(members.len(), k);
            assert!(members.contains(&v));
            let mut others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
            others.sort_by(|&a, &b| dist(v, a).total_cmp(&dist(v, b)).then(a.cmp(&b)));
            let mut want: Vec<usize> = others[..k - 1].to_vec();
            want.push(v);
            want.sort_unstable();
            assert_eq!(members, &want[..], "node {v}");
        }
    }
}

#[test]
fn cosine_knn_ignores_scale() {
    let x = Matrix::from_rows(&[[1.0, 0.0], [10.0, 0.5], [0.0, 1.0], [0.1, 3.0]]);
    let h = knn_hypergraph(&x, 2, Distance::Cosine).unwrap();
    assert_eq!(edges_of(&h), vec![vec![0, 1], vec![0, 1], vec![2, 3], vec![2, 3]]);
}

#[test]
fn synthetic_benchmark_contract() {
    let data = synth_generate(&SynthConfig::default()).unwrap();
    let s = data.hypergraph.structure_stats();
    assert_eq!((s.n, s.m), (200, 120));
    assert_eq!(data.majority_baseline(), 0.25);
    assert_eq!(data, synth_generate(&SynthConfig::default()).unwrap());

    let pure = synth_generate(&SynthConfig {
        homophily: 1.0,
        ..SynthConfig::default()
    })
    .unwrap();
    for e in 0..pure.hypergraph.m() {
        let members = pure.hypergraph.members(e);
        let class = pure.labels[members[0]];
        // the post-pass may attach a stray node, but only to an edge of its class
        assert!(members.iter().all(|&v| pure.labels[v] == class), "hyperedge {e}");
    }

    let quiet = synth_generate(&SynthConfig {
        feature_noise: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    for v in 0..quiet.n() {
        let first = (0..quiet.n()).find(|&u| quiet.labels[u] == quiet.labels[v]).unwrap();
        assert_eq!(quiet.features.row(v), quiet.features.row(first));
    }
}

#[test]
fn every_class_is_in_training_for_any_seed() {
    let data = synth_generate(&SynthConfig {
        classes: 5,
        nodes_per_class: 2,
        edge_size: 2,
        hyperedges: 6,
        feature_dim: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    for seed in 0..200 {
        let d = data.resplit(seed).unwrap();
        for c in 0..5 {
            assert!(d.train_idx.iter().any(|&i| d.labels[i] == c), "seed {seed} class {c}");
        }
        let mut all: Vec<usize> = d.train_idx.iter().chain(&d.test_idx).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(d.train_idx.len(), 8);
    }
}
