use std::collections::BTreeSet;

use dlamap_core::dla_engine::dla_run;
use dlamap_core::dla_engine::Target;
use dlamap_core::map_surgery::*;
use dlamap_core::mullin_codec::{decode, decode_boundary, enumerate_excursions, sample_quadrant_excursion, WalkKind};
use dlamap_core::planar_map::{edge_of, DecoratedMap, PlanarMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn face_degrees(m: &PlanarMap) -> Vec<usize> {
    let mut seen = vec![false; m.dart_count()];
    let mut out = Vec::new();
    for d in 0..m.dart_count() as u32 {
        if !seen[d as usize] {
            let orbit = m.face_orbit(d);
            for &x in &orbit {
                seen[x as usize] = true;
            }
            out.push(orbit.len());
        }
    }
    out.sort();
    out
}

/// Checks a cut against counts that follow from the original map alone.
fn check_cut(map: &PlanarMap, edges: &[u32], cut: &CutResult) {
    let m = edges.len();
    let out = &cut.boundary_map.map;
    assert_eq!(out.edge_count(), map.edge_count() + m);
    assert_eq!(cut.boundary_map.boundary_length(), 2 * m);
    assert!(cut.boundary_map.boundary_is_simple());
    assert_eq!(out.vertex_count() as i64 - out.edge_count() as i64 + out.face_count() as i64, 2);
    let mut expect = face_degrees(map);
    expect.push(2 * m);
    expect.sort();
    assert_eq!(face_degrees(out), expect);
    let mut cut_deg = vec![0usize; map.vertex_count()];
    for &e in edges {
        cut_deg[map.vertex(2 * e) as usize] += 1;
        cut_deg[map.vertex(2 * e + 1) as usize] += 1;
    }
    let mut all = BTreeSet::new();
    for (v, copies) in cut.vertex_lift.iter().enumerate() {
        assert_eq!(copies.len(), cut_deg[v].max(1));
        all.extend(copies.iter().copied());
    }
    assert_eq!(all.len(), out.vertex_count());
    // Boundary vertices are exactly the copies of cut vertices.
    let flags = cut.boundary_map.boundary_vertex_flags();
    for (v, copies) in cut.vertex_lift.iter().enumerate() {
        for &c in copies {
            assert_eq!(flags[c as usize], cut_deg[v] > 0);
        }
    }
}

#[test]
fn single_edge_cut() {
    let map = PlanarMap::from_next(vec![0, 1], Some(0)).unwrap();
    let cut = cut_along_tree(&map, &[0], &[]).unwrap();
    check_cut(&map, &[0], &cut);
    let out = &cut.boundary_map.map;
    assert_eq!((out.vertex_count(), out.edge_count(), out.face_count()), (2, 2, 2));
    assert_eq!(cut_along_tree(&map, &[], &[]), Err(SurgeryError::EmptyCut));
    // Gluing the 2-gon back gives the single edge.
    let g = glue(&cut.boundary_map, 0).unwrap();
    assert_eq!((g.map.vertex_count(), g.map.edge_count()), (2, 1));
    assert_eq!(g.path.len(), 2);
}

#[test]
fn pendant_edge_cut() {
    // Path a - b - c; cutting b - c keeps c single and splits nothing at b.
    let map = DecoratedMap::new(decode(&dlamap_core::mullin_codec::LatticeWalk::new(
        dlamap_core::mullin_codec::LatticeWalk::parse_steps("RRLL").unwrap(),
        WalkKind::QuadrantExcursion,
    ).unwrap()).unwrap().map, vec![true, true]).unwrap().map;
    for e in 0..2u32 {
        let cut = cut_along_tree(&map, &[e], &[]).unwrap();
        check_cut(&map, &[e], &cut);
        assert_eq!(cut.boundary_map.map.vertex_count(), 3);
        assert_eq!(cut.boundary_map.boundary_length(), 2);
    }
    let both = cut_along_tree(&map, &[0, 1], &[]).unwrap();
    check_cut(&map, &[0, 1], &both);
    assert_eq!(both.boundary_map.map.vertex_count(), 4);
}

#[test]
fn rejects_non_trees() {
    // Triangle: all three edges form a cycle.
    let map = decode(&dlamap_core::mullin_codec::LatticeWalk::new(
        dlamap_core::mullin_codec::LatticeWalk::parse_steps("RURLDL").unwrap(),
        WalkKind::QuadrantExcursion,
    ).unwrap()).unwrap().map;
    assert_eq!((map.vertex_count(), map.edge_count()), (3, 3));
    let all: Vec<u32> = (0..3).collect();
    assert_eq!(cut_along_tree(&map, &all, &[]), Err(SurgeryError::NotATree));
    assert_eq!(cut_along_tree(&map, &[0, 0], &[]), Err(SurgeryError::NotATree));
    let loop_map = PlanarMap::from_next(vec![1, 0], Some(0)).unwrap();
    assert_eq!(cut_along_tree(&loop_map, &[0], &[]), Err(SurgeryError::NotATree));
}

#[test]
fn random_cuts_along_paths_and_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(2..300);
        let dm = decode(&sample_quadrant_excursion(n, &mut rng)).unwrap();
        let nv = dm.map.vertex_count() as u32;
        let (u, w) = (rng.random_range(0..nv), rng.random_range(0..nv));
        let (_, darts) = tree_path(&dm.map, &dm.tree, u, w).unwrap();
        if !darts.is_empty() {
            let edges: Vec<u32> = darts.iter().map(|&d| edge_of(d)).collect();
            let cut = cut_along_tree(&dm.map, &edges, &[]).unwrap();
            check_cut(&dm.map, &edges, &cut);
            // Gluing at the copy of w recovers the original up to isomorphism.
            let g = glue(&cut.boundary_map, cut.vertex_lift[w as usize][0]).unwrap();
            assert_eq!(g.map.edge_count(), dm.map.edge_count());
            assert_eq!(g.map.vertex_count(), dm.map.vertex_count());
            assert_eq!(face_degrees(&g.map), face_degrees(&dm.map));
        }
        if u != w {
            let g = dm.map.to_graph();
            let steps = rng.random_range(1..10);
            if let Ok(x) = dla_run(&g, u, Target::Vertex(w), None, steps, &mut rng) {
                let cut = cut_along_tree(&dm.map, &x.edges, &[w, *x.vertices.last().unwrap()]).unwrap();
                check_cut(&dm.map, &x.edges, &cut);
            }
        }
    }
}

#[test]
fn s_and_s_prime_counts_agree() {
    assert_eq!(enumerate_s(1, 1).unwrap().len(), 0);
    assert_eq!(enumerate_s_prime(1, 1).unwrap().len(), 0);
    // Hand count: only the path on three vertices, marked end-middle-end.
    assert_eq!(enumerate_s(2, 1).unwrap().len(), 1);
    for (n, m) in [(2, 1), (3, 1), (3, 2), (4, 1)] {
        let s = enumerate_s(n, m).unwrap();
        let sp = enumerate_s_prime(n, m).unwrap();
        assert_eq!(s.len(), sp.len(), "n={n} m={m}");
        assert!(!s.is_empty());
    }
}

#[test]
fn enumerations_count_each_class_once_per_root() {
    for (n, m) in [(3, 1), (3, 2), (4, 1)] {
        let mut raw = 0usize;
        for w in enumerate_excursions(n, WalkKind::QuadrantExcursion).unwrap() {
            let dm = decode(&w).unwrap();
            let nv = dm.map.vertex_count() as u32;
            for u in 0..nv {
                for x in 0..nv {
                    if tree_path(&dm.map, &dm.tree, u, x).unwrap().1.len() > m {
                        raw += 1;
                    }
                }
            }
        }
        assert_eq!(raw, 2 * n * enumerate_s(n, m).unwrap().len());
        let mut raw_prime = 0usize;
        for w in enumerate_excursions(n + m - 1, WalkKind::BoundaryExcursion(2 * m as u32 - 1)).unwrap() {
            let bd = decode_boundary(&w).unwrap();
            raw_prime += bd.boundary.boundary_vertex_flags().iter().filter(|&&b| !b).count();
        }
        assert_eq!(raw_prime, 2 * m * enumerate_s_prime(n, m).unwrap().len());
    }
}

#[test]
fn bijection_roundtrips_and_is_onto() {
    for n in 1..=4usize {
        for m in 1..=(5 - n) {
            let s = enumerate_s(n, m).unwrap();
            let sp = enumerate_s_prime(n, m).unwrap();
            let sp_codes: BTreeSet<_> = sp.iter().map(|x| x.canonical_code()).collect();
            let mut image = BTreeSet::new();
            for x in &s {
                let y = bijection_forward(x).unwrap();
                y.validate().unwrap();
                assert_eq!(y.boundary.map.edge_count(), n + m);
                assert_eq!(y.m(), m);
                let back = bijection_inverse(&y).unwrap();
                assert_eq!(back.canonical_code().unwrap(), x.canonical_code().unwrap());
                image.insert(y.canonical_code());
            }
            assert_eq!(image, sp_codes, "n={n} m={m}");
            for y in &sp {
                let x = bijection_inverse(y).unwrap();
                assert_eq!(x.m().unwrap(), m);
                assert_eq!(x.decorated.map.edge_count(), n);
                let z = bijection_forward(&x).unwrap();
                assert_eq!(z.canonical_code(), y.canonical_code());
            }
        }
    }
}

#[test]
fn membership_errors() {
    let dm = decode(&dlamap_core::mullin_codec::LatticeWalk::new(
        dlamap_core::mullin_codec::LatticeWalk::parse_steps("RRLL").unwrap(),
        WalkKind::QuadrantExcursion,
    ).unwrap()).unwrap();
    let bad = SElement { decorated: dm.clone(), u: 0, v: 0, w: 2 };
    assert_eq!(bijection_forward(&bad), Err(SurgeryError::NotInS));
    let bad = SElement { decorated: dm.clone(), u: 0, v: 2, w: 2 };
    assert_eq!(bijection_forward(&bad), Err(SurgeryError::NotInS));
    let sp = enumerate_s_prime(2, 1).unwrap().pop().unwrap();
    let mut broken = sp.clone();
    broken.boundary.marked.swap(0, 1);
    assert_eq!(bijection_inverse(&broken), Err(SurgeryError::NotInSPrime));
}

#[test]
fn random_bijection_roundtrips() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut done = 0;
    while done < 300 {
        let dm = decode(&sample_quadrant_excursion(rng.random_range(3..400), &mut rng)).unwrap();
        let nv = dm.map.vertex_count() as u32;
        let (u, w) = (rng.random_range(0..nv), rng.random_range(0..nv));
        let (verts, _) = tree_path(&dm.map, &dm.tree, u, w).unwrap();
        if verts.len() < 3 {
            continue;
        }
        let m = rng.random_range(1..verts.len() - 1);
        let s = SElement { decorated: dm, u, v: verts[m], w };
        let y = bijection_forward(&s).unwrap();
        assert_eq!(y.boundary.boundary_length(), 2 * m);
        let back = bijection_inverse(&y).unwrap();
        assert_eq!(back.canonical_code().unwrap(), s.canonical_code().unwrap());
        done += 1;
    }
}

#[test]
fn exact_cut_laws_agree() {
    for n in 1..=3usize {
        for m in 1..=2usize {
            let a = cut_distribution_lerw(n, m).unwrap();
            let b = cut_distribution_dla(n, m).unwrap();
            let keys: BTreeSet<_> = a.keys().chain(b.keys()).collect();
            let tv: f64 = keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-10, "n={n} m={m} tv={tv}");
        }
    }
    assert_eq!(cut_distribution_lerw(5, 1), Err(SurgeryError::TooLarge));
}
