use std::collections::BTreeMap;

use dlamap_core::dla_engine::*;
use dlamap_core::mullin_codec::{decode, sample_quadrant_excursion};
use dlamap_core::planar_map::Graph;
use dlamap_core::walk_engines::{harmonic_measure_exact, harmonic_measure_from_set, InfinityPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_steps_is_the_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
    let x = dla_run(&g, 0, Target::Vertex(2), None, 0, &mut rng).unwrap();
    assert_eq!(x.vertices, vec![0]);
    assert_eq!(x.diameter(&g), Ok(0));
    let d = dla_exact_distribution(&g, 0, 2, 0).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d[&vec![]], 1.0);
}

#[test]
fn path_grows_deterministically() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let edges: Vec<(u32, u32)> = (0..10).map(|i| (i, i + 1)).collect();
    let g = Graph::from_edges(11, &edges);
    for m in 0..10 {
        let x = dla_run(&g, 0, Target::Vertex(10), None, m, &mut rng).unwrap();
        assert_eq!(x.edges, (0..m as u32).collect::<Vec<_>>());
        assert_eq!(x.diameter(&g), Ok(m as u32));
        assert_eq!(x.vertices.len(), m + 1);
    }
    assert_eq!(dla_run(&g, 0, Target::Vertex(10), None, 10, &mut rng), Err(DlaError::TargetAbsorbed { step: 10 }));
}

#[test]
fn triangle_two_steps_by_hand() {
    // Seed 0, target 2 on the triangle 0-1 (e0), 1-2 (e1), 2-0 (e2).
    // Step 1: e2 w.p. 2/3 absorbs the target; e0 w.p. 1/3 adds vertex 1.
    // Step 2 from {0, 1}: the target is adjacent to both, so it is absorbed surely.
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
    let one = dla_exact_distribution(&g, 0, 2, 1).unwrap();
    assert_eq!(one.len(), 1);
    assert!((one[&vec![0]] - 1.0 / 3.0).abs() < 1e-12);
    let two = dla_exact_distribution(&g, 0, 2, 2).unwrap();
    assert!(two.is_empty());
    // A 4-cycle with target opposite to the seed: each first edge w.p. 1/2.
    let sq = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let d = dla_exact_distribution(&sq, 0, 2, 1).unwrap();
    assert!((d[&vec![0]] - 0.5).abs() < 1e-12 && (d[&vec![3]] - 0.5).abs() < 1e-12);
    // Two steps: from {0,1} the walk from 2 hits via 1-2 (absorbing) or 3-0.
    let d2 = dla_exact_distribution(&sq, 0, 2, 2).unwrap();
    let total: f64 = d2.values().sum();
    assert!(d2.keys().all(|k| k.len() == 2));
    assert!(total < 1.0 && total > 0.0);
}

#[test]
fn one_step_law_is_harmonic_measure() {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
    let h = harmonic_measure_exact(&g, &[true, false, false, false], 3).unwrap();
    let d = dla_exact_distribution(&g, 0, 3, 1).unwrap();
    for (i, &(e, _)) in h.candidates.iter().enumerate() {
        if e == 3 {
            assert!(!d.contains_key(&vec![e]));
        } else {
            assert!((d[&vec![e]] - h.probabilities[i]).abs() < 1e-12);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..n {
        let mut x = DlaCluster::new(&g, 0);
        let _ = dla_step_to_vertex(&g, &mut x, 3, &mut rng);
        *counts.entry(x.edges[0]).or_insert(0) += 1;
    }
    for (i, &(e, _)) in h.candidates.iter().enumerate() {
        let p = h.probabilities[i];
        let f = counts[&e] as f64 / n as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }
}

#[test]
fn monte_carlo_matches_exact_on_small_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..3 {
        let w = sample_quadrant_excursion(4, &mut rng);
        let g = decode(&w).unwrap().map.to_graph();
        if g.vertex_count() < 3 {
            continue;
        }
        let target = (g.vertex_count() - 1) as u32;
        let exact = dla_exact_distribution(&g, 0, target, 2).unwrap();
        let n = 100_000;
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for _ in 0..n {
            if let Ok(x) = dla_run(&g, 0, Target::Vertex(target), None, 2, &mut rng) {
                let mut k = x.edges.clone();
                k.sort();
                *counts.entry(k).or_insert(0) += 1;
            }
        }
        for (k, &p) in &exact {
            let f = *counts.get(k).unwrap_or(&0) as f64 / n as f64;
            assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "trial {trial}: {f} vs {p}");
        }
        assert!(counts.keys().all(|k| exact.contains_key(k)));
    }
}

#[test]
fn infinity_target_on_a_map_and_monotone_diameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = sample_quadrant_excursion(3000, &mut rng);
    let g = decode(&w).unwrap().map.to_graph();
    let outer = vec![false; g.vertex_count()];
    let mut ctx = InfinityContext::new(&outer);
    let mut x = DlaCluster::new(&g, 0);
    let mut last = 0;
    for _ in 0..20 {
        dla_step_to_infinity(&g, &mut x, InfinityPolicy::FarVertex { min_ratio: 0.0 }, &mut ctx, &mut rng).unwrap();
        let d = x.diameter(&g).unwrap();
        assert!(d >= last);
        last = d;
        // Tree invariant: each new edge attaches exactly one new vertex.
        assert_eq!(x.vertices.len(), x.edges.len() + 1);
    }
    let mut seen = x.vertices.clone();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 21);
    assert!(ctx.min_margin > 0.0);
}

#[test]
fn wired_ball_step_law_matches_exact_wired_measure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = sample_quadrant_excursion(150, &mut rng);
    let g = decode(&w).unwrap().map.to_graph();
    let outer = vec![false; g.vertex_count()];
    let mut ball = WiredBall::new(&g, 0, &outer, 2.0).unwrap();
    let mut x = DlaCluster::new(&g, 0);
    for _ in 0..3 {
        ball.step(&g, &mut x, &mut rng).unwrap();
    }
    let r = ball.radius();
    assert!(r as f64 >= 2.0 * ball.reach() as f64 && r > ball.reach());
    let wired: Vec<u32> =
        (0..g.vertex_count() as u32).filter(|&v| ball.distance(v).is_none_or(|d| d >= r)).collect();
    let h = harmonic_measure_from_set(&g, x.membership(), &wired).unwrap();
    let n = 100_000;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..n {
        let (mut b, mut y) = (ball.clone(), x.clone());
        b.step(&g, &mut y, &mut rng).unwrap();
        *counts.entry(y.edges[3]).or_insert(0) += 1;
    }
    for (i, &(e, _)) in h.candidates.iter().enumerate() {
        let p = h.probabilities[i];
        let f = *counts.get(&e).unwrap_or(&0) as f64 / n as f64;
        assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "edge {e}: {f} vs {p}");
    }
    assert!(counts.keys().all(|e| h.probability_of(*e) > 0.0));
}

#[test]
fn wired_ball_growth_keeps_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = sample_quadrant_excursion(20_000, &mut rng);
    let g = decode(&w).unwrap().map.to_graph();
    let outer = vec![false; g.vertex_count()];
    let mut ball = WiredBall::new(&g, 0, &outer, 2.0).unwrap();
    let mut x = DlaCluster::new(&g, 0);
    let mut last = 0;
    for k in 1..=30 {
        ball.step(&g, &mut x, &mut rng).unwrap();
        assert_eq!(x.len(), k);
        let d = ball.cluster_diameter(&g, &x).unwrap();
        assert_eq!(d, x.diameter(&g).unwrap());
        assert!(d >= last);
        last = d;
        let reach = x.vertices.iter().map(|&v| ball.distance(v).unwrap()).max().unwrap();
        assert_eq!(reach, ball.reach());
        assert!(ball.radius() as f64 >= 2.0 * reach.max(1) as f64);
    }
    let mut seen = x.vertices.clone();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 31);
    assert!(ball.walk_steps >= 30);
    // A ratio of at most one leaves no room between the cluster and the source.
    assert!(WiredBall::new(&g, 0, &outer, 1.0).is_err());
}
