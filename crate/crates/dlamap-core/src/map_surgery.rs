//! Cutting a map along a tree of edges, the inverse gluing, and the
//! correspondence between tree-decorated maps with three marked vertices and
//! wired maps with boundary.
//!
//! Cutting replaces each cut dart `d` by a *low* copy, which keeps the id `d`,
//! and a *high* copy. The high copy of dart `2e` is `2(E + j)` and that of
//! `2e + 1` is `2e + 1` itself (so the low copy of `2e + 1` is `2(E + j) + 1`),
//! where `j` is the rank of `e` among the sorted cut edges and `E` the edge
//! count before cutting. The high copies are exactly the darts of the new face.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::dla_engine::{dla_exact_paths, dla_run, DlaError, Target};
use crate::mullin_codec::{
    decode, decode_boundary, enumerate_excursions, sample_quadrant_excursion, BoundaryDecoded, CodecError, WalkKind,
};
use crate::planar_map::{
    canonical_code_boundary_rooted, canonical_code_with, edge_of, twin, BoundaryMap, CanonicalCode, Dart,
    DecoratedMap, Edge, MapError, PlanarMap, UnionFind, Vertex, NONE,
};

#[derive(Debug, Clone, PartialEq)]
pub enum SurgeryError {
    NotATree,
    EmptyCut,
    NotInS,
    NotInSPrime,
    TooLarge,
    /// The rejection sampler ran out of attempts.
    Rejected,
    Map(MapError),
    Codec(CodecError),
    Dla(DlaError),
}

impl fmt::Display for SurgeryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurgeryError::NotATree => f.write_str("cut edges do not form a tree"),
            SurgeryError::EmptyCut => f.write_str("empty cut"),
            SurgeryError::NotInS => f.write_str("input is not a valid marked decorated map"),
            SurgeryError::NotInSPrime => f.write_str("input is not a valid marked wired boundary map"),
            SurgeryError::TooLarge => f.write_str("instance too large for exact enumeration"),
            SurgeryError::Rejected => f.write_str("rejection sampling budget exhausted"),
            SurgeryError::Map(e) => write!(f, "{e}"),
            SurgeryError::Codec(e) => write!(f, "{e}"),
            SurgeryError::Dla(e) => write!(f, "{e}"),
        }
    }
}

impl From<MapError> for SurgeryError {
    fn from(e: MapError) -> Self {
        SurgeryError::Map(e)
    }
}

impl From<CodecError> for SurgeryError {
    fn from(e: CodecError) -> Self {
        SurgeryError::Codec(e)
    }
}

impl From<DlaError> for SurgeryError {
    fn from(e: DlaError) -> Self {
        SurgeryError::Dla(e)
    }
}

/// A map cut open along a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutResult {
    /// The cut map; its `marked` list holds the copies of the requested marks.
    pub boundary_map: BoundaryMap,
    /// For each original vertex, its copies in the cut map in rotation order.
    /// Vertices off the cut have one copy; a cut vertex has one per sector.
    pub vertex_lift: Vec<Vec<Vertex>>,
    /// Number of cut edges.
    pub cut_size: usize,
}

impl CutResult {
    /// The unique copy of `v`, if it has exactly one.
    pub fn single_copy(&self, v: Vertex) -> Option<Vertex> {
        match self.vertex_lift[v as usize].as_slice() {
            [x] => Some(*x),
            _ => None,
        }
    }
}

fn check_tree(map: &PlanarMap, edges: &[Edge]) -> Result<(), SurgeryError> {
    if edges.is_empty() {
        return Err(SurgeryError::EmptyCut);
    }
    let mut uf = UnionFind::new(map.vertex_count());
    let mut seen = BTreeSet::new();
    for &e in edges {
        if e as usize >= map.edge_count() || !seen.insert(e) {
            return Err(SurgeryError::NotATree);
        }
        let (a, b) = (map.vertex(2 * e), map.vertex(2 * e + 1));
        if !uf.union(a as usize, b as usize) {
            return Err(SurgeryError::NotATree);
        }
    }
    Ok(())
}

/// Cuts `map` along `cut_edges`, which must form a tree. Each cut edge becomes
/// two boundary edges and each corner of the tree a distinct boundary vertex,
/// so the new face has degree `2m` for `m` cut edges. `marks` are original
/// vertices with a single copy; their copies are recorded as marked.
pub fn cut_along_tree(map: &PlanarMap, cut_edges: &[Edge], marks: &[Vertex]) -> Result<CutResult, SurgeryError> {
    check_tree(map, cut_edges)?;
    let e_count = map.edge_count();
    let mut cut: Vec<Edge> = cut_edges.to_vec();
    cut.sort_unstable();
    let mut rank = vec![NONE; e_count];
    for (j, &e) in cut.iter().enumerate() {
        rank[e as usize] = j as u32;
    }
    let base = 2 * e_count as u32;
    let is_cut = |d: Dart| rank[edge_of(d) as usize] != NONE;
    let hi = |d: Dart| if d & 1 == 0 { base + 2 * rank[edge_of(d) as usize] } else { d };
    let lo = |d: Dart| if d & 1 == 0 { d } else { base + 2 * rank[edge_of(d) as usize] + 1 };

    let mut next = vec![NONE; map.dart_count() + 2 * cut.len()];
    let mut seq = Vec::new();
    for v in 0..map.vertex_count() as u32 {
        let rot: Vec<Dart> = map.rotation(v).collect();
        let Some(start) = rot.iter().position(|&d| is_cut(d)) else {
            for &d in &rot {
                next[d as usize] = map.next(d);
            }
            continue;
        };
        let k = rot.len();
        let mut i = start;
        loop {
            seq.clear();
            seq.push(hi(rot[i]));
            let mut j = (i + 1) % k;
            while !is_cut(rot[j]) {
                seq.push(rot[j]);
                j = (j + 1) % k;
            }
            seq.push(lo(rot[j]));
            for w in 0..seq.len() {
                next[seq[w] as usize] = seq[(w + 1) % seq.len()];
            }
            i = j;
            if i == start {
                break;
            }
        }
    }
    let out = PlanarMap::from_next(next, map.root_dart())?;
    let vertex_lift: Vec<Vec<Vertex>> = (0..map.vertex_count() as u32)
        .map(|v| {
            let mut copies: Vec<Vertex> = Vec::new();
            for d in map.rotation(v) {
                let ends = if is_cut(d) { [hi(d), lo(d)] } else { [d, d] };
                for x in ends {
                    let c = out.vertex(x);
                    if !copies.contains(&c) {
                        copies.push(c);
                    }
                }
            }
            copies
        })
        .collect();
    let mut marked = Vec::with_capacity(marks.len());
    for &x in marks {
        match vertex_lift.get(x as usize).map(|c| c.as_slice()) {
            Some([c]) => marked.push(*c),
            _ => return Err(MapError::BadVertex.into()),
        }
    }
    let boundary_map = BoundaryMap::new(out, base, marked)?;
    Ok(CutResult { boundary_map, vertex_lift, cut_size: cut.len() })
}

/// A map obtained by folding a boundary onto a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glued {
    pub map: PlanarMap,
    /// Vertex of the glued map for each vertex of the map with boundary.
    pub vertex_of: Vec<Vertex>,
    /// Edge of the glued map for each edge of the map with boundary.
    pub edge_of: Vec<Edge>,
    /// Image of the boundary: vertices from the apex to the antipode.
    pub path: Vec<Vertex>,
}

/// Identifies the boundary vertices of `bm` at equal distance from `apex`
/// along the boundary, together with the corresponding boundary edges. The
/// boundary must have even length `2m ≥ 2` with `2m` distinct edges. The
/// result is rooted at the image of the boundary dart leaving `apex`.
pub fn glue(bm: &BoundaryMap, apex: Vertex) -> Result<Glued, SurgeryError> {
    let map = &bm.map;
    let d0 = bm.boundary_dart_from(apex).ok_or(MapError::BadVertex)?;
    let t = map.face_orbit(d0);
    let len = t.len();
    let distinct: BTreeSet<Edge> = t.iter().map(|&d| edge_of(d)).collect();
    if len < 2 || len % 2 != 0 || distinct.len() != len {
        return Err(MapError::NotSimpleBoundary.into());
    }
    let m = len / 2;
    let n_darts = map.dart_count();
    let mut pos = vec![NONE; n_darts];
    for (i, &d) in t.iter().enumerate() {
        pos[d as usize] = i as u32;
    }
    // Darts of removed edges alias to the kept dart they merge with.
    let mut rep: Vec<Dart> = (0..n_darts as u32).collect();
    let mut hi_of: Vec<Dart> = (0..n_darts as u32).collect();
    let mut removed = vec![false; map.edge_count()];
    for i in 0..m {
        let j = len - 1 - i;
        let (ti, tj) = (t[i], t[j]);
        removed[edge_of(tj) as usize] = true;
        rep[tj as usize] = twin(ti);
        rep[twin(tj) as usize] = ti;
        hi_of[twin(ti) as usize] = tj;
    }
    let mut new_edge = vec![NONE; map.edge_count()];
    let mut kept = 0u32;
    for e in 0..map.edge_count() {
        if !removed[e] {
            new_edge[e] = kept;
            kept += 1;
        }
    }
    let relabel = |d: Dart| -> Dart {
        let r = rep[d as usize];
        2 * new_edge[edge_of(r) as usize] + (r & 1)
    };
    let mut next = vec![NONE; 2 * kept as usize];
    for d in 0..n_darts as u32 {
        if removed[edge_of(d) as usize] {
            continue;
        }
        next[relabel(d) as usize] = relabel(map.next(hi_of[d as usize]));
    }
    let glued = PlanarMap::from_next(next, Some(relabel(t[0])))?;
    let vertex_of: Vec<Vertex> = (0..map.vertex_count() as u32)
        .map(|v| glued.vertex(relabel(map.first_dart(v))))
        .collect();
    let edge_of_glued: Vec<Edge> = (0..map.edge_count() as u32).map(|e| relabel(2 * e) >> 1).collect();
    let path = (0..=m).map(|i| vertex_of[map.vertex(t[i]) as usize]).collect();
    Ok(Glued { map: glued, vertex_of, edge_of: edge_of_glued, path })
}

/// Vertices and darts of the tree path from `from` to `to`.
pub fn tree_path(map: &PlanarMap, tree: &[bool], from: Vertex, to: Vertex) -> Option<(Vec<Vertex>, Vec<Dart>)> {
    let n = map.vertex_count();
    let mut via = vec![NONE; n];
    let mut seen = vec![false; n];
    seen[from as usize] = true;
    let mut queue = vec![from];
    let mut head = 0;
    while head < queue.len() && !seen[to as usize] {
        let x = queue[head];
        head += 1;
        for d in map.rotation(x) {
            if !tree[edge_of(d) as usize] {
                continue;
            }
            let y = map.head(d);
            if !seen[y as usize] {
                seen[y as usize] = true;
                via[y as usize] = d;
                queue.push(y);
            }
        }
    }
    if !seen[to as usize] {
        return None;
    }
    let mut darts = Vec::new();
    let mut x = to;
    while x != from {
        let d = via[x as usize];
        darts.push(d);
        x = map.vertex(d);
    }
    darts.reverse();
    let mut verts = vec![from];
    verts.extend(darts.iter().map(|&d| map.head(d)));
    Some((verts, darts))
}

/// `(M, T, u, v, w)`: a tree-decorated map with `v` on the tree path from `u`
/// to `w`, `u ≠ v` and `w ≠ v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SElement {
    pub decorated: DecoratedMap,
    pub u: Vertex,
    pub v: Vertex,
    pub w: Vertex,
}

impl SElement {
    /// Tree path darts from `u` to `v`, after checking the membership conditions.
    pub fn path_to_v(&self) -> Result<Vec<Dart>, SurgeryError> {
        let map = &self.decorated.map;
        let n = map.vertex_count() as u32;
        if self.u >= n || self.v >= n || self.w >= n || self.u == self.v || self.w == self.v {
            return Err(SurgeryError::NotInS);
        }
        let (verts, darts) = tree_path(map, &self.decorated.tree, self.u, self.w).ok_or(SurgeryError::NotInS)?;
        let k = verts.iter().position(|&x| x == self.v).ok_or(SurgeryError::NotInS)?;
        Ok(darts[..k].to_vec())
    }

    /// Tree distance from `u` to `v`.
    pub fn m(&self) -> Result<usize, SurgeryError> {
        Ok(self.path_to_v()?.len())
    }

    /// Isomorphism-class code: rooted at the path dart leaving `v` toward `u`.
    pub fn canonical_code(&self) -> Result<CanonicalCode, SurgeryError> {
        let p = self.path_to_v()?;
        let root = twin(*p.last().ok_or(SurgeryError::NotInS)?);
        let dm = &self.decorated;
        Ok(canonical_code_with(&dm.map, Some(root), &|d| dm.in_tree(d) as u8, &[self.u, self.v, self.w]))
    }
}

/// `(M', T', w', v')`: a map with simple boundary of length `2m`, a wired
/// spanning tree `T'` containing every boundary edge, an interior vertex `w'`
/// and the boundary vertex `v'` where the `T'` branch from `w'` first meets
/// the boundary. The boundary map's `marked` list is `[w', v']`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SPrimeElement {
    pub boundary: BoundaryMap,
    pub tree: Vec<bool>,
}

impl SPrimeElement {
    pub fn w_prime(&self) -> Vertex {
        self.boundary.marked[0]
    }

    pub fn v_prime(&self) -> Vertex {
        self.boundary.marked[1]
    }

    /// Builds the element for a decoded boundary walk and interior vertex `w'`,
    /// computing `v'` from the tree.
    pub fn from_decoded(bd: &BoundaryDecoded, w_prime: Vertex) -> Result<Self, SurgeryError> {
        let tree = bd.wired_tree();
        let v = boundary_hit(&bd.boundary, &tree, w_prime).ok_or(SurgeryError::NotInSPrime)?;
        let boundary = BoundaryMap { marked: vec![w_prime, v], ..bd.boundary.clone() };
        let s = SPrimeElement { boundary, tree };
        s.validate()?;
        Ok(s)
    }

    /// Half the boundary length.
    pub fn m(&self) -> usize {
        self.boundary.boundary_length() / 2
    }

    pub fn validate(&self) -> Result<(), SurgeryError> {
        let bm = &self.boundary;
        let map = &bm.map;
        let bad = SurgeryError::NotInSPrime;
        if bm.marked.len() != 2 || self.tree.len() != map.edge_count() || !bm.boundary_is_simple() {
            return Err(bad);
        }
        let bdarts = bm.boundary_darts();
        let bedges: BTreeSet<Edge> = bdarts.iter().map(|&d| edge_of(d)).collect();
        if bdarts.len() < 2 || bdarts.len() % 2 != 0 || bedges.len() != bdarts.len() {
            return Err(bad);
        }
        let on_boundary = bm.boundary_vertex_flags();
        let (w, v) = (self.w_prime(), self.v_prime());
        if on_boundary[w as usize] || !on_boundary[v as usize] {
            return Err(bad);
        }
        // T' with the boundary contracted must be a spanning tree.
        let mut uf = UnionFind::new(map.vertex_count());
        for &d in &bdarts {
            uf.union(map.vertex(d) as usize, map.head(d) as usize);
        }
        let mut interior_edges = 0;
        for e in 0..map.edge_count() as u32 {
            if bedges.contains(&e) {
                if !self.tree[e as usize] {
                    return Err(bad);
                }
                continue;
            }
            if self.tree[e as usize] {
                interior_edges += 1;
                if !uf.union(map.vertex(2 * e) as usize, map.vertex(2 * e + 1) as usize) {
                    return Err(bad);
                }
            }
        }
        let interior_vertices = on_boundary.iter().filter(|&&b| !b).count();
        if interior_edges != interior_vertices || boundary_hit(bm, &self.tree, w) != Some(v) {
            return Err(bad);
        }
        Ok(())
    }

    /// Isomorphism-class code: rooted at the boundary dart leaving `v'`.
    pub fn canonical_code(&self) -> CanonicalCode {
        let root = self.boundary.boundary_dart_from(self.v_prime());
        canonical_code_boundary_rooted(&self.boundary, root, Some(&self.tree))
    }
}

/// First boundary vertex on the branch of the wired tree from `w`.
fn boundary_hit(bm: &BoundaryMap, tree: &[bool], w: Vertex) -> Option<Vertex> {
    let map = &bm.map;
    let on_boundary = bm.boundary_vertex_flags();
    let mut is_bedge = vec![false; map.edge_count()];
    for d in bm.boundary_darts() {
        is_bedge[edge_of(d) as usize] = true;
    }
    let mut seen = vec![false; map.vertex_count()];
    seen[w as usize] = true;
    let mut queue = vec![w];
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head];
        head += 1;
        if on_boundary[x as usize] {
            return Some(x);
        }
        for d in map.rotation(x) {
            let e = edge_of(d) as usize;
            if tree[e] && !is_bedge[e] {
                let y = map.head(d);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push(y);
                }
            }
        }
    }
    None
}

/// Cuts along the tree path from `u` to `v`; the boundary edges join `T \ P`
/// to form `T'`.
pub fn bijection_forward(s: &SElement) -> Result<SPrimeElement, SurgeryError> {
    let p = s.path_to_v()?;
    let map = &s.decorated.map;
    let edges: Vec<Edge> = p.iter().map(|&d| edge_of(d)).collect();
    let cut = cut_along_tree(map, &edges, &[s.w, s.v])?;
    let (w2, v2) = (cut.boundary_map.marked[0], cut.boundary_map.marked[1]);
    let root = cut.boundary_map.boundary_dart_from(v2).ok_or(SurgeryError::NotInS)?;
    let out = cut.boundary_map.map.with_root(Some(root))?;
    let mut tree = s.decorated.tree.clone();
    tree.resize(out.edge_count(), true);
    for &e in &edges {
        tree[e as usize] = true;
    }
    let boundary = BoundaryMap::new(out, cut.boundary_map.external_dart, vec![w2, v2])?;
    Ok(SPrimeElement { boundary, tree })
}

/// Folds the boundary at `v'`; the folded boundary joins `T'` to form `T`.
/// The result is rooted at the path dart leaving `v` toward `u`.
pub fn bijection_inverse(sp: &SPrimeElement) -> Result<SElement, SurgeryError> {
    sp.validate()?;
    let g = glue(&sp.boundary, sp.v_prime()).map_err(|_| SurgeryError::NotInSPrime)?;
    let mut tree = vec![false; g.map.edge_count()];
    for (e, &t) in sp.tree.iter().enumerate() {
        if t {
            tree[g.edge_of[e] as usize] = true;
        }
    }
    let decorated = DecoratedMap::new(g.map, tree).map_err(|_| SurgeryError::NotInSPrime)?;
    Ok(SElement {
        decorated,
        u: *g.path.last().unwrap_or(&0),
        v: g.path[0],
        w: g.vertex_of[sp.w_prime() as usize],
    })
}

const ENUM_CAP: usize = 7;

/// One representative per isomorphism class of `S` with `n` edges and tree
/// distance `m` from `u` to `v`, sorted by canonical code.
pub fn enumerate_s(n: usize, m: usize) -> Result<Vec<SElement>, SurgeryError> {
    if n > ENUM_CAP {
        return Err(SurgeryError::TooLarge);
    }
    if m == 0 {
        return Err(SurgeryError::EmptyCut);
    }
    let mut out = BTreeMap::new();
    for w in enumerate_excursions(n, WalkKind::QuadrantExcursion)? {
        let dm = decode(&w)?;
        let nv = dm.map.vertex_count() as u32;
        for u in 0..nv {
            for x in 0..nv {
                let Some((verts, _)) = tree_path(&dm.map, &dm.tree, u, x) else { continue };
                if verts.len() <= m + 1 {
                    continue;
                }
                let s = SElement { decorated: dm.clone(), u, v: verts[m], w: x };
                out.entry(s.canonical_code()?).or_insert(s);
            }
        }
    }
    Ok(out.into_values().collect())
}

/// One representative per isomorphism class of `S'` with `n + m` edges and
/// boundary length `2m`, sorted by canonical code.
pub fn enumerate_s_prime(n: usize, m: usize) -> Result<Vec<SPrimeElement>, SurgeryError> {
    if m == 0 {
        return Err(SurgeryError::EmptyCut);
    }
    if n < m || n + m - 1 > ENUM_CAP {
        return if n < m { Ok(Vec::new()) } else { Err(SurgeryError::TooLarge) };
    }
    let mut out = BTreeMap::new();
    for w in enumerate_excursions(n + m - 1, WalkKind::BoundaryExcursion(2 * m as u32 - 1))? {
        let bd = decode_boundary(&w)?;
        let on_boundary = bd.boundary.boundary_vertex_flags();
        for x in 0..bd.boundary.map.vertex_count() as u32 {
            if on_boundary[x as usize] {
                continue;
            }
            let s = SPrimeElement::from_decoded(&bd, x)?;
            out.entry(s.canonical_code()).or_insert(s);
        }
    }
    Ok(out.into_values().collect())
}

/// Code of a cut map: rooted at the boundary dart leaving the tip and marked
/// with the copy of the target. The cut must carry marks `[w', tip']`.
pub fn cut_code(cut: &CutResult) -> Result<CanonicalCode, SurgeryError> {
    let bm = &cut.boundary_map;
    let (&w, &tip) = match bm.marked.as_slice() {
        [w, tip] => (w, tip),
        _ => return Err(MapError::BadVertex.into()),
    };
    let root = bm.boundary_dart_from(tip).ok_or(MapError::BadVertex)?;
    let marked_w = BoundaryMap { marked: vec![w], ..bm.clone() };
    Ok(canonical_code_boundary_rooted(&marked_w, Some(root), None))
}

/// Cut along the first `m` edges of the tree path from `u` to `w`; `None` if
/// the path has at most `m` edges.
pub fn lerw_cut(dm: &DecoratedMap, u: Vertex, w: Vertex, m: usize) -> Result<Option<CutResult>, SurgeryError> {
    let (verts, darts) = tree_path(&dm.map, &dm.tree, u, w).ok_or(SurgeryError::NotInS)?;
    if darts.len() <= m {
        return Ok(None);
    }
    let edges: Vec<Edge> = darts[..m].iter().map(|&d| edge_of(d)).collect();
    Ok(Some(cut_along_tree(&dm.map, &edges, &[w, verts[m]])?))
}

/// Cut along a DLA cluster given as `(edge, new vertex)` history.
pub fn dla_cut(map: &PlanarMap, history: &[(Edge, Vertex)], w: Vertex) -> Result<CutResult, SurgeryError> {
    let edges: Vec<Edge> = history.iter().map(|c| c.0).collect();
    let tip = history.last().ok_or(SurgeryError::EmptyCut)?.1;
    cut_along_tree(map, &edges, &[w, tip])
}

fn check_exact(n: usize, m: usize) -> Result<(), SurgeryError> {
    if m == 0 {
        return Err(SurgeryError::EmptyCut);
    }
    if n > 4 || m > 2 {
        return Err(SurgeryError::TooLarge);
    }
    Ok(())
}

/// Exact sub-probability law of the tree-path cut under a uniform rooted
/// decorated map with `n` edges and independent uniform `u`, `w`, restricted
/// to tree distance greater than `m`.
pub fn cut_distribution_lerw(n: usize, m: usize) -> Result<BTreeMap<CanonicalCode, f64>, SurgeryError> {
    check_exact(n, m)?;
    let walks = enumerate_excursions(n, WalkKind::QuadrantExcursion)?;
    let total = walks.len() as f64;
    let mut out = BTreeMap::new();
    for w in &walks {
        let dm = decode(w)?;
        let nv = dm.map.vertex_count() as u32;
        let weight = 1.0 / (total * (nv * nv) as f64);
        for u in 0..nv {
            for x in 0..nv {
                if let Some(cut) = lerw_cut(&dm, u, x, m)? {
                    *out.entry(cut_code(&cut)?).or_insert(0.0) += weight;
                }
            }
        }
    }
    Ok(out)
}

/// Exact sub-probability law of the cut along `m` DLA steps from `u` aimed at
/// `w`, under the same law of `(M, u, w)`, restricted to `w` not absorbed.
pub fn cut_distribution_dla(n: usize, m: usize) -> Result<BTreeMap<CanonicalCode, f64>, SurgeryError> {
    check_exact(n, m)?;
    let walks = enumerate_excursions(n, WalkKind::QuadrantExcursion)?;
    let total = walks.len() as f64;
    let mut out = BTreeMap::new();
    for w in &walks {
        let map = decode(w)?.map;
        let g = map.to_graph();
        let nv = map.vertex_count() as u32;
        let weight = 1.0 / (total * (nv * nv) as f64);
        for u in 0..nv {
            for x in 0..nv {
                if u == x {
                    continue;
                }
                let mut err = None;
                dla_exact_paths(&g, u, x, m, &mut |hist, p| {
                    match dla_cut(&map, hist, x).and_then(|c| cut_code(&c)) {
                        Ok(code) => *out.entry(code).or_insert(0.0) += weight * p,
                        Err(e) => err = Some(e),
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
    }
    Ok(out)
}

const REJECTION_BUDGET: usize = 100_000;

/// Samples the tree-path cut: uniform decorated map with `n` edges, uniform
/// `u`, `w` conditioned on tree distance greater than `m`.
pub fn sample_lerw_cut<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<CutResult, SurgeryError> {
    if m == 0 {
        return Err(SurgeryError::EmptyCut);
    }
    for _ in 0..REJECTION_BUDGET {
        let dm = decode(&sample_quadrant_excursion(n, rng))?;
        let nv = dm.map.vertex_count() as u32;
        let (u, w) = (rng.random_range(0..nv), rng.random_range(0..nv));
        if let Some(cut) = lerw_cut(&dm, u, w, m)? {
            return Ok(cut);
        }
    }
    Err(SurgeryError::Rejected)
}

/// Samples the DLA cut: map marginal of a uniform decorated map with `n`
/// edges, uniform `u ≠ w`, `m` steps from `u` aimed at `w`, conditioned on
/// `w` not being absorbed.
pub fn sample_dla_cut<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<CutResult, SurgeryError> {
    if m == 0 {
        return Err(SurgeryError::EmptyCut);
    }
    for _ in 0..REJECTION_BUDGET {
        let map = decode(&sample_quadrant_excursion(n, rng))?.map;
        let g = map.to_graph();
        let nv = map.vertex_count() as u32;
        let (u, w) = (rng.random_range(0..nv), rng.random_range(0..nv));
        if u == w {
            continue;
        }
        match dla_run(&g, u, Target::Vertex(w), None, m, rng) {
            Ok(x) => {
                let hist: Vec<(Edge, Vertex)> = x.edges.iter().copied().zip(x.vertices[1..].iter().copied()).collect();
                return dla_cut(&map, &hist, w);
            }
            Err(DlaError::TargetAbsorbed { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(SurgeryError::Rejected)
}
