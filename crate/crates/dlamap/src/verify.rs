//! Exhaustive and exact checks: codec roundtrips, the path-cut bijection,
//! exact cut laws, the Pitman graph identity and the triangle LERW law.

use std::collections::BTreeSet;
use std::time::Instant;

use dlamap_core::map_surgery::{
    bijection_forward, bijection_inverse, cut_distribution_dla, cut_distribution_lerw, enumerate_s, enumerate_s_prime,
};
use dlamap_core::mated_crt::{generate_walk_pair, pitman_graph_identity_check, PairKind, WalkPair};
use dlamap_core::mullin_codec::{decode, encode, enumerate_excursions, WalkKind};
use dlamap_core::planar_map::{canonical_code_decorated, Graph, UnionFind};
use dlamap_core::walk_engines::lerw;
use rand::Rng;
use serde::Serialize;

use crate::rng::trial_rng;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckOutcome {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckOutcome { name, passed, detail, seconds: t.elapsed().as_secs_f64() }
}

fn catalan(n: u64) -> u64 {
    (0..n).fold(1u64, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

/// Decode/encode roundtrips on every quadrant excursion with `1..=max_n`
/// edges, with counts checked against `C_n · C_{n+1}`.
pub fn check_codec_roundtrip(max_n: usize) -> CheckOutcome {
    timed("codec-roundtrip", || {
        let mut counts = Vec::new();
        for n in 1..=max_n {
            let walks = enumerate_excursions(n, WalkKind::QuadrantExcursion).map_err(|e| e.to_string())?;
            let expected = catalan(n as u64) * catalan(n as u64 + 1);
            if walks.len() as u64 != expected {
                return Err(format!("n={n}: {} walks, expected {expected}", walks.len()));
            }
            for w in &walks {
                let dm = decode(w).map_err(|e| e.to_string())?;
                let back = encode(&dm);
                if &back != w {
                    return Err(format!("encode(decode(w)) != w for {}", w.to_string_steps()));
                }
                let again = decode(&back).map_err(|e| e.to_string())?;
                if canonical_code_decorated(&again) != canonical_code_decorated(&dm) {
                    return Err(format!("decode(encode(M)) not isomorphic to M for {}", w.to_string_steps()));
                }
            }
            counts.push(walks.len().to_string());
        }
        Ok(format!("walk counts {}", counts.join(" + ")))
    })
}

/// Forward and inverse roundtrips of the path-cut bijection for all
/// `n + m ≤ max_total`, plus equal class counts on a few small sizes.
pub fn check_path_cut_bijection(max_total: usize) -> CheckOutcome {
    timed("path-cut-bijection", || {
        let err = |e: dlamap_core::map_surgery::SurgeryError| e.to_string();
        let mut checked = 0usize;
        for n in 1..max_total {
            for m in 1..=(max_total - n) {
                let s = enumerate_s(n, m).map_err(err)?;
                let sp = enumerate_s_prime(n, m).map_err(err)?;
                let sp_codes: BTreeSet<_> = sp.iter().map(|x| x.canonical_code()).collect();
                let mut image = BTreeSet::new();
                for x in &s {
                    let y = bijection_forward(x).map_err(err)?;
                    y.validate().map_err(err)?;
                    let back = bijection_inverse(&y).map_err(err)?;
                    if back.canonical_code().map_err(err)? != x.canonical_code().map_err(err)? {
                        return Err(format!("inverse(forward(x)) != x at n={n} m={m}"));
                    }
                    image.insert(y.canonical_code());
                }
                for y in &sp {
                    let x = bijection_inverse(y).map_err(err)?;
                    if bijection_forward(&x).map_err(err)?.canonical_code() != y.canonical_code() {
                        return Err(format!("forward(inverse(y)) != y at n={n} m={m}"));
                    }
                }
                if image != sp_codes {
                    return Err(format!("forward map is not onto at n={n} m={m}"));
                }
                checked += s.len() + sp.len();
            }
        }
        let mut sizes = Vec::new();
        for (n, m) in [(2, 1), (3, 1), (3, 2)] {
            let (a, b) = (enumerate_s(n, m).map_err(err)?.len(), enumerate_s_prime(n, m).map_err(err)?.len());
            if a != b {
                return Err(format!("|S|={a} but |S'|={b} at n={n} m={m}"));
            }
            sizes.push(format!("({n},{m}):{a}"));
        }
        Ok(format!("{checked} elements roundtripped; class counts {}", sizes.join(" ")))
    })
}

/// Total-variation distance between the exact cut laws for all `n ≤ max_n`, `m ≤ 2`.
pub fn check_exact_cut_laws(max_n: usize, tolerance: f64) -> CheckOutcome {
    timed("exact-cut-laws", || {
        let mut worst = 0.0f64;
        for n in 1..=max_n {
            for m in 1..=2 {
                let a = cut_distribution_lerw(n, m).map_err(|e| e.to_string())?;
                let b = cut_distribution_dla(n, m).map_err(|e| e.to_string())?;
                let keys: BTreeSet<_> = a.keys().chain(b.keys()).collect();
                let tv = keys
                    .iter()
                    .map(|k| (a.get(*k).copied().unwrap_or(0.0) - b.get(*k).copied().unwrap_or(0.0)).abs())
                    .sum::<f64>()
                    / 2.0;
                worst = worst.max(tv);
                if tv > tolerance {
                    return Err(format!("n={n} m={m}: total variation {tv:e}"));
                }
            }
        }
        Ok(format!("largest total variation {worst:.2e} over n <= {max_n}, m <= 2"))
    })
}

fn lazy_pair<R: Rng>(len: usize, rng: &mut R) -> WalkPair {
    let mut path = || {
        let mut v = vec![0i64];
        for _ in 0..len {
            let x = *v.last().unwrap_or(&0);
            v.push(x + rng.random_range(-1..=1));
        }
        v
    };
    let (l, r) = (path(), path());
    WalkPair { l, r, steps_per_unit: 1, kind: PairKind::Free }
}

/// Pitman identity on `pairs` random pairs of length at most 200, half with
/// `±1` steps and half lazy.
pub fn check_pitman(pairs: usize, seed: u64) -> CheckOutcome {
    timed("pitman-identity", || {
        let mut rng = trial_rng(seed, 0);
        for i in 0..pairs {
            let s = [1usize, 2, 5][i % 3];
            let len = rng.random_range(1..=200 / s) * s;
            let w = if i % 2 == 0 {
                generate_walk_pair(PairKind::Free, len, 1, 1, &mut rng).map_err(|e| e.to_string())?
            } else {
                lazy_pair(len, &mut rng)
            };
            if !pitman_graph_identity_check(&w, s).map_err(|e| e.to_string())? {
                return Err(format!("pair {i} (length {len}, cell size {s}) differs"));
            }
        }
        Ok(format!("{pairs} pairs agree"))
    })
}

/// Probability that the spanning-tree path from 0 to 1 is the edge `01`,
/// by enumerating spanning trees of `g`.
fn direct_edge_probability(g: &Graph, edges: &[(u32, u32)]) -> f64 {
    let n = g.vertex_count();
    let (mut trees, mut direct) = (0u64, 0u64);
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut uf = UnionFind::new(n);
        let acyclic = (0..edges.len())
            .filter(|i| mask >> i & 1 == 1)
            .all(|i| uf.union(edges[i].0 as usize, edges[i].1 as usize));
        if acyclic {
            trees += 1;
            direct += (mask & 1) as u64;
        }
    }
    direct as f64 / trees as f64
}

/// LERW from vertex 0 to vertex 1 on a triangle: frequency of the direct
/// edge against the spanning-tree count, within 4 binomial σ.
pub fn check_triangle_lerw(samples: usize, seed: u64) -> CheckOutcome {
    timed("triangle-lerw", || {
        let edges = [(0, 1), (1, 2), (0, 2)];
        let g = Graph::from_edges(3, &edges);
        let p = direct_edge_probability(&g, &edges);
        let target = [false, true, false];
        let mut rng = trial_rng(seed, 0);
        let hits = (0..samples).filter(|_| lerw(&g, 0, &target, &mut rng).len() == 1).count();
        let freq = hits as f64 / samples as f64;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let msg = format!("direct edge frequency {freq:.5}, tree count gives {p:.5}, sigma {sigma:.1e}");
        if (freq - p).abs() <= 4.0 * sigma {
            Ok(msg)
        } else {
            Err(msg)
        }
    })
}

/// The whole exact suite at acceptance sizes.
pub fn run_exact_suite(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_codec_roundtrip(5),
        check_path_cut_bijection(5),
        check_exact_cut_laws(4, 1e-9),
        check_pitman(10_000, seed),
        check_triangle_lerw(100_000, seed),
    ]
}
