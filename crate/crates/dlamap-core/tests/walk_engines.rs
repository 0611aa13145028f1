use std::collections::{BTreeMap, BTreeSet};

use dlamap_core::mullin_codec::{decode, enumerate_excursions, sample_quadrant_excursion, WalkKind};
use dlamap_core::planar_map::*;
use dlamap_core::walk_engines::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn triangle() -> Graph {
    Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)])
}

/// Distinct rooted maps with at most `n` edges (as graphs).
fn small_maps(n: usize) -> Vec<PlanarMap> {
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for k in 1..=n {
        for w in enumerate_excursions(k, WalkKind::QuadrantExcursion).unwrap() {
            let m = decode(&w).unwrap().map;
            if seen.insert(canonical_code(&m)) {
                out.push(m);
            }
        }
    }
    out
}

/// Per-edge hitting probabilities by Gauss–Seidel iteration of the Dirichlet problem
/// `h_e(v) = mean over darts of (1 if the dart is e entering the cluster, h_e(head) otherwise)`.
fn dirichlet_oracle(g: &Graph, in_cluster: &[bool], from: u32, e: u32) -> f64 {
    let n = g.vertex_count();
    let mut h = vec![0.0f64; n];
    for _ in 0..20_000 {
        let mut delta = 0.0f64;
        for v in 0..n as u32 {
            if in_cluster[v as usize] {
                continue;
            }
            let mut s = 0.0;
            for (j, &w) in g.neighbors(v).iter().enumerate() {
                if in_cluster[w as usize] {
                    if g.darts_at(v)[j] >> 1 == e {
                        s += 1.0;
                    }
                } else {
                    s += h[w as usize];
                }
            }
            let new = s / g.degree(v) as f64;
            delta = delta.max((new - h[v as usize]).abs());
            h[v as usize] = new;
        }
        if delta < 1e-15 {
            break;
        }
    }
    h[from as usize]
}

#[test]
fn srw_basics() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
    let target = [true, false, true];
    assert!(srw_until_hit(&g, 0, &target, &mut rng).is_empty());
    let mut ends = [0u32; 3];
    for _ in 0..20_000 {
        let p = srw_until_hit(&g, 1, &target, &mut rng);
        assert_eq!(p.len(), 1);
        ends[if p[0] == 1 { 0 } else { 2 }] += 1;
    }
    let frac = ends[0] as f64 / 20_000.0;
    assert!((frac - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    let lp = PlanarMap::from_next(vec![1, 0], Some(0)).unwrap().to_graph();
    assert_eq!(lp.degree(0), 2);
}

#[test]
fn harmonic_examples() {
    let g = Graph::from_edges(2, &[(0, 1)]);
    let h = harmonic_measure_exact(&g, &[true, false], 1).unwrap();
    assert_eq!(h.candidates, vec![(0, 0)]);
    assert!((h.probabilities[0] - 1.0).abs() < 1e-12);
    let t = triangle();
    // From 2 the walk enters 0 directly w.p. 1/2 + 1/4 · P, so P = 2/3.
    let h = harmonic_measure_exact(&t, &[true, false, false], 2).unwrap();
    assert!((h.probability_of(2) - 2.0 / 3.0).abs() < 1e-12);
    assert!((h.probability_of(0) - 1.0 / 3.0).abs() < 1e-12);
    // Antipodal source on a 4-cycle: the two edges at the cluster vertex are symmetric.
    let sq = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let h = harmonic_measure_exact(&sq, &[true, false, false, false], 2).unwrap();
    assert!((h.probability_of(0) - 0.5).abs() < 1e-12);
    assert!((h.probability_of(3) - 0.5).abs() < 1e-12);
    // 4-cycle 0-1-2-3 with chord 0-2, cluster {0}, from 2.
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
    let cl = [true, false, false, false];
    let h = harmonic_measure_exact(&g, &cl, 2).unwrap();
    for (i, &(e, _)) in h.candidates.iter().enumerate() {
        assert!((h.probabilities[i] - dirichlet_oracle(&g, &cl, 2, e)).abs() < 1e-10);
    }
    assert!((h.total() - 1.0).abs() < 1e-12);
    assert_eq!(harmonic_measure_exact(&g, &cl, 0), Err(WalkError::SourceInCluster));
}

#[test]
fn harmonic_matches_dirichlet_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let w = sample_quadrant_excursion(rng.random_range(3..30), &mut rng);
        let g = decode(&w).unwrap().map.to_graph();
        let n = g.vertex_count() as u32;
        if n < 2 {
            continue;
        }
        let mut cl = vec![false; n as usize];
        let c = rng.random_range(0..n);
        cl[c as usize] = true;
        for &x in g.neighbors(c).iter().take(2) {
            cl[x as usize] = true;
        }
        let Some(from) = (0..n).find(|&v| !cl[v as usize]) else { continue };
        let h = harmonic_measure_exact(&g, &cl, from).unwrap();
        let cg = harmonic_measure_with_solver(&g, &cl, &[from], Solver::ConjugateGradient).unwrap();
        let ones = h.candidates.len();
        assert_eq!(ones, cg.candidates.len());
        let mut total = 0.0;
        for i in 0..ones {
            let e = h.candidates[i].0;
            let p = h.probabilities[i];
            total += p;
            assert!((cg.probabilities[i] - p).abs() < 1e-9);
            let oracle = dirichlet_oracle(&g, &cl, from, e) / h.candidates.iter().filter(|c| c.0 == e).count() as f64;
            assert!((p - oracle).abs() < 1e-10, "{p} vs {oracle}");
            assert!(cl[h.candidates[i].1 as usize]);
        }
        assert!((total - 1.0).abs() < 1e-12 || total < 1.0 - 1e-6);
    }
}

#[test]
fn conjugate_gradient_on_a_large_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = sample_quadrant_excursion(6000, &mut rng);
    let g = decode(&w).unwrap().map.to_graph();
    let mut cl = vec![false; g.vertex_count()];
    cl[0] = true;
    let from = (g.vertex_count() - 1) as u32;
    let h = harmonic_measure_exact(&g, &cl, from).unwrap();
    assert!((h.total() - 1.0).abs() < 1e-9);
}

#[test]
fn wilson_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let path = Graph::from_edges(3, &[(0, 1), (1, 2)]);
    assert_eq!(wilson_ust(&path, 0, &mut rng), vec![true, true]);
    let t = triangle();
    let mut counts = BTreeMap::new();
    let n = 100_000;
    for _ in 0..n {
        *counts.entry(wilson_ust(&t, 1, &mut rng)).or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), 3);
    let chi: f64 = counts.values().map(|&c| (c as f64 - n as f64 / 3.0).powi(2) / (n as f64 / 3.0)).sum();
    assert!(chi < 13.8, "{chi}");
    let two = Graph::from_edges(2, &[(0, 1), (0, 1)]);
    let k = (0..20_000).filter(|_| wilson_ust(&two, 0, &mut rng)[0]).count();
    assert!((k as f64 / 20_000.0 - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
}

fn spanning_trees(g: &Graph, nv: usize) -> Vec<Vec<bool>> {
    let ne = g.edge_count();
    let mut ends = vec![(0u32, 0u32); ne];
    for v in 0..nv as u32 {
        for (j, &d) in g.darts_at(v).iter().enumerate() {
            if d % 2 == 0 {
                ends[(d / 2) as usize] = (v, g.neighbors(v)[j]);
            }
        }
    }
    let mut out = vec![];
    for mask in 0u32..(1 << ne) {
        if mask.count_ones() as usize != nv - 1 {
            continue;
        }
        let mut uf = UnionFind::new(nv);
        let ok = (0..ne).filter(|&e| mask >> e & 1 == 1).all(|e| uf.union(ends[e].0 as usize, ends[e].1 as usize));
        if ok {
            out.push((0..ne).map(|e| mask >> e & 1 == 1).collect());
        }
    }
    out
}

fn tree_path(g: &Graph, tree: &[bool], u: u32, w: u32) -> Vec<u32> {
    // DFS with parent edges.
    let n = g.vertex_count();
    let mut par = vec![(u32::MAX, u32::MAX); n];
    let mut stack = vec![u];
    par[u as usize] = (u, u32::MAX);
    while let Some(v) = stack.pop() {
        for (j, &x) in g.neighbors(v).iter().enumerate() {
            let e = g.darts_at(v)[j] >> 1;
            if tree[e as usize] && par[x as usize].0 == u32::MAX {
                par[x as usize] = (v, e);
                stack.push(x);
            }
        }
    }
    let mut path = vec![];
    let mut x = w;
    while x != u {
        path.push(par[x as usize].1);
        x = par[x as usize].0;
    }
    path.reverse();
    path
}

fn lerw_exact_stepwise(g: &Graph, verts: &mut Vec<u32>, edges: &mut Vec<u32>, w: u32, p: f64, out: &mut BTreeMap<Vec<u32>, f64>) {
    if *verts.last().unwrap() == w {
        *out.entry(edges.clone()).or_insert(0.0) += p;
        return;
    }
    for (e, far, q) in lerw_step_distribution(g, verts, w).unwrap() {
        verts.push(far);
        edges.push(e);
        lerw_exact_stepwise(g, verts, edges, w, p * q, out);
        verts.pop();
        edges.pop();
    }
}

#[test]
fn lerw_three_ways_agree_on_tiny_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mc_checked = 0;
    for m in small_maps(4) {
        let g = m.to_graph();
        let nv = g.vertex_count();
        if nv < 2 {
            continue;
        }
        let trees = spanning_trees(&g, nv);
        for u in 0..nv as u32 {
            for w in 0..nv as u32 {
                if u == w {
                    continue;
                }
                let mut a: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for t in &trees {
                    *a.entry(tree_path(&g, t, u, w)).or_insert(0.0) += 1.0 / trees.len() as f64;
                }
                let mut b = BTreeMap::new();
                lerw_exact_stepwise(&g, &mut vec![u], &mut vec![], w, 1.0, &mut b);
                assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
                for (k, p) in &a {
                    assert!((p - b[k]).abs() < 1e-10);
                }
                if mc_checked < 6 && a.len() > 1 && (u + w) % 3 == 0 {
                    mc_checked += 1;
                    let samples = 100_000;
                    let mut target = vec![false; nv];
                    target[w as usize] = true;
                    let mut c: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
                    for _ in 0..samples {
                        let path: Vec<u32> = lerw(&g, u, &target, &mut rng).iter().map(|d| d >> 1).collect();
                        *c.entry(path).or_insert(0) += 1;
                    }
                    for (k, p) in &a {
                        let f = *c.get(k).unwrap_or(&0) as f64 / samples as f64;
                        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
                        assert!((f - p).abs() <= 4.0 * sigma + 1e-12, "{f} vs {p}");
                    }
                }
            }
        }
    }
    assert!(mc_checked >= 3);
}

#[test]
fn lerw_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let path = Graph::from_edges(3, &[(0, 1), (1, 2)]);
    for _ in 0..100 {
        let p: Vec<u32> = lerw(&path, 0, &[false, false, true], &mut rng).iter().map(|d| d >> 1).collect();
        assert_eq!(p, vec![0, 1]);
    }
    let t = triangle();
    let d = lerw_step_distribution(&t, &[0], 1).unwrap();
    let direct: f64 = d.iter().filter(|c| c.1 == 1).map(|c| c.2).sum();
    assert!((direct - 2.0 / 3.0).abs() < 1e-12);
    let h = lerw_harmonic(&t, 0, 1, &mut rng).unwrap();
    assert!(h == vec![0] || h == vec![2, 1]);
    // No loops: erasure is the identity.
    let heads = |d: u32| if d % 2 == 0 { d / 2 + 1 } else { d / 2 };
    assert_eq!(loop_erase(heads, 0, &[0, 2], 3), vec![0, 2]);
}

#[test]
fn far_vertex_policy_and_margin() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
    let mut cl = vec![false; 6];
    cl[0] = true;
    let (h, src) = harmonic_measure_from_infinity(&g, &cl, &[false; 6], InfinityPolicy::FarVertex { min_ratio: 3.0 }).unwrap();
    assert_eq!(src.vertices, vec![5]);
    assert_eq!(src.distance, 5);
    assert!((h.total() - 1.0).abs() < 1e-12);
    cl[1] = true;
    cl[2] = true;
    let r = harmonic_measure_from_infinity(&g, &cl, &[false; 6], InfinityPolicy::FarVertex { min_ratio: 3.0 });
    assert!(matches!(r, Err(WalkError::MarginTooSmall { .. })));
    // Symmetric window: a path with the cluster in the middle, wired at both ends.
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let mut cl = vec![false; 5];
    cl[2] = true;
    let outer = [true, false, false, false, true];
    let (h, _) = harmonic_measure_from_infinity(&g, &cl, &outer, InfinityPolicy::WiredBoundary { min_ratio: 1.0 }).unwrap();
    assert!((h.probability_of(1) - 0.5).abs() < 1e-12);
    assert!((h.probability_of(2) - 0.5).abs() < 1e-12);
}

#[test]
fn merged_source_sampling_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w = sample_quadrant_excursion(60, &mut rng);
    let g = decode(&w).unwrap().map.to_graph();
    let n = g.vertex_count();
    let mut cl = vec![false; n];
    cl[0] = true;
    let sources: Vec<u32> = (n as u32 - 3..n as u32).filter(|&v| v != 0).collect();
    let exact = harmonic_measure_from_set(&g, &cl, &sources).unwrap();
    let ms = MergedSource::new(&g, &sources);
    let samples = 100_000;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..samples {
        *counts.entry(g.slot_edge(ms.last_slot(&g, &cl, &mut rng))).or_insert(0) += 1;
    }
    for &(e, _) in &exact.candidates {
        let p = exact.probability_of(e);
        let f = *counts.get(&e).unwrap_or(&0) as f64 / samples as f64;
        assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / samples as f64).sqrt() + 1e-9, "{f} vs {p}");
    }
}
