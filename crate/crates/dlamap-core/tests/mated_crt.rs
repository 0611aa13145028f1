use std::collections::{BTreeSet, VecDeque};

use dlamap_core::mated_crt::*;
use dlamap_core::mullin_codec::{decode, enumerate_excursions, sample_quadrant_excursion, LatticeWalk, Step, WalkKind};
use dlamap_core::planar_map::{twin, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quadratic scan over all time pairs.
fn brute_edges(w: &WalkPair, s: usize) -> BTreeSet<(u32, u32)> {
    let n = w.len() / s;
    let mut out = BTreeSet::new();
    for c1 in 0..n {
        for c2 in c1 + 1..n {
            'pair: for s1 in c1 * s..=(c1 + 1) * s {
                for s2 in c2 * s..=(c2 + 1) * s {
                    if s2 < s1 {
                        continue;
                    }
                    for v in [&w.l, &w.r] {
                        let m = *v[s1..=s2].iter().min().unwrap();
                        if v[s1] == m && v[s2] == m {
                            out.insert((c1 as u32, c2 as u32));
                            break 'pair;
                        }
                    }
                }
            }
        }
    }
    out
}

fn brute_lower(w: &WalkPair, s: usize, a: usize, b: usize) -> Vec<u32> {
    (a..b)
        .filter(|&c| {
            (c * s..=(c + 1) * s).any(|t| {
                [&w.l, &w.r].iter().any(|v| v[t] == *v[a * s..=t].iter().min().unwrap())
            })
        })
        .map(|c| c as u32)
        .collect()
}

fn random_pair(rng: &mut ChaCha8Rng, len: usize, lazy: bool) -> WalkPair {
    let mut l = vec![0i64];
    let mut r = vec![0i64];
    for _ in 0..len {
        let step = |rng: &mut ChaCha8Rng| if lazy { rng.random_range(-1..=1) } else if rng.random::<bool>() { 1 } else { -1 };
        let (a, b) = (step(rng), step(rng));
        l.push(l.last().unwrap() + a);
        r.push(r.last().unwrap() + b);
    }
    WalkPair::new(l, r, 1, PairKind::Free).unwrap()
}

#[test]
fn small_examples() {
    let w = WalkPair::new(vec![0, 1], vec![0, 1], 1, PairKind::Free).unwrap();
    let g = build_graph(&w, 1).unwrap();
    assert_eq!(g.n, 1);
    assert!(g.edges.is_empty());
    assert_eq!(build_graph(&w, 2), Err(MatedCrtError::BadLength));
    // L = 0 1 2 1 0 1 2 1 0 with cell size 2 and R increasing.
    let l = vec![0, 1, 2, 1, 0, 1, 2, 1, 0];
    let r: Vec<i64> = (0..9).collect();
    let w = WalkPair::new(l, r, 2, PairKind::Free).unwrap();
    let g = build_graph(&w, 2).unwrap();
    assert_eq!(g.n, 4);
    // Times 0, 4, 8 are at the global minimum: cells 0, {1, 2}, 3 all pairwise adjacent,
    // so every pair is adjacent.
    assert_eq!(g.edges, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    assert_eq!(g.edges.iter().copied().collect::<BTreeSet<_>>(), brute_edges(&w, 2));
    // L = 0 1 2 3 2 1 with cell size 1 and R increasing.
    let w = WalkPair::new(vec![0, 1, 2, 3, 2, 1], (0..6).collect(), 1, PairKind::Free).unwrap();
    let g = build_graph(&w, 1).unwrap();
    // Shared endpoints matter: time 4 lies in cells 3 and 4, time 2 in cells 1 and 2.
    assert_eq!(g.edges, vec![(0, 1), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
    assert_eq!(g.edges.iter().copied().collect::<BTreeSet<_>>(), brute_edges(&w, 1));
}

#[test]
fn stack_builder_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..10_000 {
        let s = [1, 2, 3, 5][i % 4];
        let cells = rng.random_range(1..=60 / s);
        let w = random_pair(&mut rng, cells * s, i % 3 == 0);
        let g = build_graph(&w, s).unwrap();
        assert_eq!(g.edges.iter().copied().collect::<BTreeSet<_>>(), brute_edges(&w, s));
        assert_eq!(g.lower_boundary, brute_lower(&w, s, 0, cells));
        for k in 1..cells as u32 {
            assert!(g.has_edge(k - 1, k));
        }
    }
}

#[test]
fn boundary_sets_examples() {
    let inc = WalkPair::new((0..7).collect(), (0..7).collect(), 1, PairKind::Free).unwrap();
    let (lower, upper) = boundary_sets(&inc, 1, 0..6).unwrap();
    assert_eq!(lower, vec![0]);
    assert_eq!(upper, (0..6).collect::<Vec<_>>());
    let dec = inc.negated();
    assert_eq!(boundary_sets(&dec, 1, 0..6).unwrap().0, (0..6).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let s = rng.random_range(1..4);
        let n = rng.random_range(2..30);
        let w = random_pair(&mut rng, n * s, false);
        let (a, b) = (rng.random_range(0..n - 1), n);
        let (lower, upper) = boundary_sets(&w, s, a..b).unwrap();
        assert_eq!(lower, brute_lower(&w, s, a, b));
        // Upper boundary is the lower boundary of the reversed walk, cell indices reversed.
        let (rev_lower, _) = boundary_sets(&w.reversed(), s, 0..n - a).unwrap();
        let mut mapped: Vec<u32> = rev_lower.iter().map(|&c| (n - 1) as u32 - c).collect();
        mapped.sort();
        assert_eq!(upper, mapped);
    }
}

#[test]
fn pitman_identity_holds() {
    let zero = WalkPair::new(vec![0; 11], vec![0; 11], 1, PairKind::Free).unwrap();
    assert!(pitman_graph_identity_check(&zero, 1).unwrap());
    // Monotone decreasing L, n = 3: the running maximum stays at 0, so 2S − L = −L.
    let w = WalkPair::new(vec![0, -1, -2, -3], vec![0, 1, 0, 1], 1, PairKind::Free).unwrap();
    assert_eq!(w.pitman().l, w.negated().l);
    assert!(pitman_graph_identity_check(&w, 1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..3000 {
        let s = [1, 2, 5][i % 3];
        let cells = rng.random_range(1..=200 / s);
        let w = random_pair(&mut rng, cells * s, i % 2 == 0);
        assert!(pitman_graph_identity_check(&w, s).unwrap());
    }
    // Jumps of size 2 can overshoot the running maximum, and the probe fires.
    let w = WalkPair::new(vec![0, -1, 0, -1, 1, 3, 1], (0..7).collect(), 1, PairKind::Free).unwrap();
    assert!(!pitman_graph_identity_check(&w, 1).unwrap());
}

#[test]
fn generated_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w = generate_walk_pair(PairKind::Free, 1_000_000, 1, 1, &mut rng).unwrap();
    let n = w.len() as f64;
    let cross: f64 = (1..w.l.len()).map(|t| ((w.l[t] - w.l[t - 1]) * (w.r[t] - w.r[t - 1])) as f64).sum();
    assert!((cross / n).abs() < 4.0 / n.sqrt());
    let mut accepted = 0;
    for _ in 0..200 {
        let q = generate_walk_pair(PairKind::QuadrantConditioned, 100, 1, 10_000, &mut rng).unwrap();
        assert!(q.l.iter().chain(&q.r).all(|&x| x >= 0));
        accepted += 1;
    }
    assert_eq!(accepted, 200);
    assert!(matches!(
        generate_walk_pair(PairKind::QuadrantConditioned, 10_000, 1, 3, &mut rng),
        Err(MatedCrtError::RejectionBudgetExceeded { attempts: 3 })
    ));
}

#[test]
fn ball_growth() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let w = random_pair(&mut rng, 2000, false);
    let g = build_graph(&w, 1).unwrap();
    let series = ball_growth_series(&g, 0, 30);
    assert_eq!(series[0], (0, 1));
    assert!(series.windows(2).all(|p| p[0].1 <= p[1].1));
    // Independent BFS over the edge list.
    let mut adj = vec![Vec::new(); g.n];
    for &(a, b) in &g.edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut dist = vec![u32::MAX; g.n];
    dist[0] = 0;
    let mut q = VecDeque::from([0u32]);
    while let Some(x) = q.pop_front() {
        for &y in &adj[x as usize] {
            if dist[y as usize] == u32::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                q.push_back(y);
            }
        }
    }
    for &(r, b) in &series {
        assert_eq!(b, dist.iter().filter(|&&d| d <= r).count() as u64);
    }
}

/// Triangle adjacency of the decoded map's tree/dual-tree triangulation,
/// indexed by walk step. Triangles are named by darts: for a tree edge the
/// side facing the face of the twin, for a dual edge the side containing the
/// tail. Step times are matched to darts through the decoder's edge order.
fn triangle_graph(w: &LatticeWalk, swap: (bool, bool)) -> BTreeSet<(u32, u32)> {
    let dm = decode(w).unwrap();
    let map = &dm.map;
    let n = map.edge_count();
    let mut time_of = vec![0u32; 2 * n];
    let (mut stack_r, mut stack_u, mut next_edge) = (Vec::new(), Vec::new(), 0u32);
    for (t, s) in w.steps.iter().enumerate() {
        let flip = if matches!(s, Step::R | Step::L) { swap.0 } else { swap.1 };
        let (first, second) = if flip { (1, 0) } else { (0, 1) };
        match s {
            Step::R | Step::U => {
                time_of[(2 * next_edge + first) as usize] = t as u32;
                if *s == Step::R { stack_r.push(next_edge) } else { stack_u.push(next_edge) }
                next_edge += 1;
            }
            Step::L => time_of[(2 * stack_r.pop().unwrap() + second) as usize] = t as u32,
            Step::D => time_of[(2 * stack_u.pop().unwrap() + second) as usize] = t as u32,
        }
    }
    let tri_of_face_side = |t: u32| if dm.in_tree(t) { twin(t) } else { t };
    let mut out = BTreeSet::new();
    let mut add = |a: u32, b: u32| {
        let (x, y) = (time_of[a as usize], time_of[b as usize]);
        if x != y {
            out.insert((x.min(y), x.max(y)));
        }
    };
    for e in 0..n as u32 {
        add(2 * e, 2 * e + 1);
    }
    for d in 0..2 * n as u32 {
        add(d, tri_of_face_side(map.next(d)));
    }
    out
}

#[test]
fn lattice_walk_graph_contains_triangle_adjacency() {
    // Pick the dart-to-time orientation under which consecutive triangles share an edge.
    let all: Vec<LatticeWalk> = (1..=5).flat_map(|n| enumerate_excursions(n, WalkKind::QuadrantExcursion).unwrap()).collect();
    let consecutive = |swap: (bool, bool)| {
        all.iter().all(|w| {
            let t = triangle_graph(w, swap);
            (1..w.len() as u32).all(|k| t.contains(&(k - 1, k)))
        })
    };
    let options = [(false, false), (false, true), (true, false), (true, true)];
    let good: Vec<_> = options.iter().copied().filter(|&o| consecutive(o)).collect();
    assert_eq!(good.len(), 1, "orientation not determined: {good:?}");
    let swap = good[0];
    let mut strict = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let samples: Vec<LatticeWalk> = (0..1000).map(|_| sample_quadrant_excursion(rng.random_range(1..=20), &mut rng)).collect();
    for w in all.iter().chain(&samples) {
        let t = triangle_graph(w, swap);
        let g = build_graph(&WalkPair::from_lattice_walk(w), 1).unwrap();
        let e: BTreeSet<_> = g.edges.iter().copied().collect();
        assert!(t.is_subset(&e), "{}", w.to_string_steps());
        if t != e {
            strict += 1;
        }
        let _ = Graph::from_edges(g.n, &g.edges);
    }
    assert!(strict > 0);
    // The lazy coordinate makes R L U D strictly larger: cells 0 and 2 both
    // sit at L = 0 with no lower value between.
    let w = LatticeWalk::new(LatticeWalk::parse_steps("RLUD").unwrap(), WalkKind::QuadrantExcursion).unwrap();
    let g = build_graph(&WalkPair::from_lattice_walk(&w), 1).unwrap();
    let t = triangle_graph(&w, swap);
    assert!(g.has_edge(0, 2) && !t.contains(&(0, 2)));
}
