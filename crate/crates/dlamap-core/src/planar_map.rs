//! Rooted combinatorial planar maps stored as rotation systems on darts.
//!
//! Darts are dense integers `0..2E`; the two darts of edge `e` are `2e` and
//! `2e + 1`, so `twin(d) = d ^ 1`. `next` is the counterclockwise rotation of
//! darts around their tail vertex. Faces are the orbits of `next ∘ twin`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub type Dart = u32;
pub type Vertex = u32;
pub type Edge = u32;

/// Sentinel for "no value" in `u32` tables (unreached vertex, missing root).
pub const NONE: u32 = u32::MAX;

#[inline]
pub const fn twin(d: Dart) -> Dart {
    d ^ 1
}

#[inline]
pub const fn edge_of(d: Dart) -> Edge {
    d >> 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    NonPlanar { euler: i64 },
    Disconnected,
    BadInvolution,
    BadPermutation,
    BadRoot,
    NotSpanningTree,
    NotSimpleBoundary,
    BadFace,
    BadVertex,
    Unreachable,
    EmptySet,
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::NonPlanar { euler } => write!(f, "Euler characteristic {euler} != 2"),
            MapError::Disconnected => f.write_str("dart action is not transitive"),
            MapError::BadInvolution => f.write_str("twin is not a fixed-point-free involution"),
            MapError::BadPermutation => f.write_str("next is not a permutation of the darts"),
            MapError::BadRoot => f.write_str("root dart out of range or missing"),
            MapError::NotSpanningTree => f.write_str("edge set is not a spanning tree"),
            MapError::NotSimpleBoundary => f.write_str("external face boundary is not simple"),
            MapError::BadFace => f.write_str("face identifier out of range"),
            MapError::BadVertex => f.write_str("vertex identifier out of range"),
            MapError::Unreachable => f.write_str("target set unreachable"),
            MapError::EmptySet => f.write_str("empty vertex set"),
        }
    }
}

/// A connected genus-0 map. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarMap {
    next: Vec<Dart>,
    vert: Vec<Vertex>,
    first: Vec<Dart>,
    face_count: u32,
    root: Option<Dart>,
}

impl PlanarMap {
    /// The one-vertex map with no edges.
    pub fn empty() -> Self {
        PlanarMap { next: Vec::new(), vert: Vec::new(), first: vec![NONE], face_count: 1, root: None }
    }

    /// Builds a map whose twin involution is the implicit `d ^ 1`.
    pub fn from_next(next: Vec<Dart>, root: Option<Dart>) -> Result<Self, MapError> {
        let n = next.len();
        if n == 0 {
            return if root.is_none() { Ok(Self::empty()) } else { Err(MapError::BadRoot) };
        }
        if n % 2 != 0 || n > (u32::MAX as usize) / 2 {
            return Err(MapError::BadInvolution);
        }
        match root {
            Some(r) if (r as usize) < n => {}
            _ => return Err(MapError::BadRoot),
        }
        let mut seen = vec![false; n];
        for &x in &next {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(MapError::BadPermutation);
            }
            seen[x] = true;
        }
        let mut vert = vec![NONE; n];
        let mut first = Vec::new();
        for d in 0..n {
            if vert[d] != NONE {
                continue;
            }
            let v = first.len() as u32;
            first.push(d as Dart);
            let mut x = d;
            loop {
                vert[x] = v;
                x = next[x] as usize;
                if x == d {
                    break;
                }
            }
        }
        let map = PlanarMap { next, vert, first, face_count: 0, root };
        let faces = map.count_faces();
        let map = PlanarMap { face_count: faces, ..map };
        if !map.is_connected() {
            return Err(MapError::Disconnected);
        }
        let euler = map.vertex_count() as i64 - map.edge_count() as i64 + faces as i64;
        if euler != 2 {
            return Err(MapError::NonPlanar { euler });
        }
        Ok(map)
    }

    /// Builds a map from an arbitrary fixed-point-free involution `twin`.
    /// Darts are renumbered so that twins become `2e, 2e + 1`.
    pub fn from_permutations(next: &[Dart], twin_perm: &[Dart], root: Option<Dart>) -> Result<Self, MapError> {
        let n = next.len();
        if twin_perm.len() != n {
            return Err(MapError::BadInvolution);
        }
        for d in 0..n {
            let t = twin_perm[d] as usize;
            if t >= n || t == d || twin_perm[t] as usize != d {
                return Err(MapError::BadInvolution);
            }
        }
        let mut new_id = vec![NONE; n];
        let mut k = 0u32;
        for d in 0..n {
            if new_id[d] == NONE {
                new_id[d] = k;
                new_id[twin_perm[d] as usize] = k + 1;
                k += 2;
            }
        }
        let mut nn = vec![0; n];
        for d in 0..n {
            let x = next[d] as usize;
            if x >= n {
                return Err(MapError::BadPermutation);
            }
            nn[new_id[d] as usize] = new_id[x];
        }
        let root = match root {
            Some(r) if (r as usize) < n => Some(new_id[r as usize]),
            Some(_) => return Err(MapError::BadRoot),
            None => None,
        };
        Self::from_next(nn, root)
    }

    fn count_faces(&self) -> u32 {
        let n = self.next.len();
        let mut seen = vec![false; n];
        let mut faces = 0;
        for d in 0..n {
            if seen[d] {
                continue;
            }
            faces += 1;
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                x = self.next[x as usize ^ 1] as usize;
            }
        }
        faces
    }

    fn is_connected(&self) -> bool {
        let n = self.next.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(d) = stack.pop() {
            for x in [self.next[d] as usize, d ^ 1] {
                if !seen[x] {
                    seen[x] = true;
                    count += 1;
                    stack.push(x);
                }
            }
        }
        count == n
    }

    #[inline]
    pub fn dart_count(&self) -> usize {
        self.next.len()
    }
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.next.len() / 2
    }
    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.first.len()
    }
    #[inline]
    pub fn face_count(&self) -> usize {
        self.face_count as usize
    }
    #[inline]
    pub fn next(&self, d: Dart) -> Dart {
        self.next[d as usize]
    }
    #[inline]
    pub fn twin(&self, d: Dart) -> Dart {
        twin(d)
    }
    /// Next dart along the face to the right of `d`.
    #[inline]
    pub fn face_next(&self, d: Dart) -> Dart {
        self.next[(d ^ 1) as usize]
    }
    /// Tail vertex of `d`.
    #[inline]
    pub fn vertex(&self, d: Dart) -> Vertex {
        self.vert[d as usize]
    }
    #[inline]
    pub fn head(&self, d: Dart) -> Vertex {
        self.vert[(d ^ 1) as usize]
    }
    #[inline]
    pub fn root_dart(&self) -> Option<Dart> {
        self.root
    }
    /// The root vertex: head of the root dart, or the lone vertex of the empty map.
    pub fn root_vertex(&self) -> Vertex {
        match self.root {
            Some(r) => self.head(r),
            None => 0,
        }
    }
    pub fn next_table(&self) -> &[Dart] {
        &self.next
    }
    pub fn vertex_table(&self) -> &[Vertex] {
        &self.vert
    }
    /// Lowest-numbered dart at `v`, or `NONE` for the empty map.
    pub fn first_dart(&self, v: Vertex) -> Dart {
        self.first[v as usize]
    }
    pub fn degree(&self, v: Vertex) -> usize {
        self.rotation(v).count()
    }

    /// Darts around `v` in counterclockwise order, starting from `first_dart(v)`.
    pub fn rotation(&self, v: Vertex) -> Rotation<'_> {
        let start = self.first[v as usize];
        Rotation { map: self, start, cur: start, done: start == NONE }
    }

    /// Darts around `v` starting from a given dart at `v`.
    pub fn rotation_from(&self, d: Dart) -> Rotation<'_> {
        Rotation { map: self, start: d, cur: d, done: false }
    }

    /// Darts of the face containing `d`, in `face_next` order.
    pub fn face_orbit(&self, d: Dart) -> Vec<Dart> {
        let mut out = vec![d];
        let mut x = self.face_next(d);
        while x != d {
            out.push(x);
            x = self.face_next(x);
        }
        out
    }

    /// Face identifier for every dart; faces are numbered by their lowest dart.
    pub fn face_ids(&self) -> Vec<u32> {
        let n = self.next.len();
        let mut id = vec![NONE; n];
        let mut k = 0;
        for d in 0..n {
            if id[d] != NONE {
                continue;
            }
            let mut x = d;
            while id[x] == NONE {
                id[x] = k;
                x = self.next[x ^ 1] as usize;
            }
            k += 1;
        }
        id
    }

    /// Inverse of `next`.
    pub fn prev_table(&self) -> Vec<Dart> {
        let mut p = vec![0; self.next.len()];
        for (d, &x) in self.next.iter().enumerate() {
            p[x as usize] = d as Dart;
        }
        p
    }

    pub fn with_root(&self, root: Option<Dart>) -> Result<Self, MapError> {
        match root {
            Some(r) if (r as usize) < self.next.len() => {}
            None if self.next.is_empty() => {}
            _ => return Err(MapError::BadRoot),
        }
        let mut m = self.clone();
        m.root = root;
        Ok(m)
    }

    /// The dual map on the same darts: rotation `next ∘ twin`.
    pub fn dual(&self) -> PlanarMap {
        if self.next.is_empty() {
            return PlanarMap::empty();
        }
        let nd: Vec<Dart> = (0..self.next.len()).map(|d| self.next[d ^ 1]).collect();
        PlanarMap::from_next(nd, self.root).expect("dual of a planar map is planar")
    }

    pub fn to_graph(&self) -> Graph {
        Graph::from_map(self)
    }

    /// Vertices of the face containing `d`, one per corner, in face order.
    pub fn face_vertices(&self, d: Dart) -> Vec<Vertex> {
        self.face_orbit(d).into_iter().map(|x| self.vertex(x)).collect()
    }
}

pub struct Rotation<'a> {
    map: &'a PlanarMap,
    start: Dart,
    cur: Dart,
    done: bool,
}

impl Iterator for Rotation<'_> {
    type Item = Dart;
    fn next(&mut self) -> Option<Dart> {
        if self.done {
            return None;
        }
        let d = self.cur;
        self.cur = self.map.next(d);
        if self.cur == self.start {
            self.done = true;
        }
        Some(d)
    }
}

/// A planar map together with a marked spanning tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedMap {
    pub map: PlanarMap,
    pub tree: Vec<bool>,
}

impl DecoratedMap {
    pub fn new(map: PlanarMap, tree: Vec<bool>) -> Result<Self, MapError> {
        if tree.len() != map.edge_count() || !is_spanning_tree(&map, &tree) {
            return Err(MapError::NotSpanningTree);
        }
        Ok(DecoratedMap { map, tree })
    }

    #[inline]
    pub fn in_tree(&self, d: Dart) -> bool {
        self.tree[edge_of(d) as usize]
    }

    pub fn tree_edge_count(&self) -> usize {
        self.tree.iter().filter(|&&t| t).count()
    }

    /// Edges of the dual tree (the complement of the primal tree).
    pub fn dual_tree(&self) -> Vec<bool> {
        self.tree.iter().map(|&t| !t).collect()
    }
}

/// Union-find acyclicity test plus edge count.
pub fn is_spanning_tree(map: &PlanarMap, tree: &[bool]) -> bool {
    let nv = map.vertex_count();
    let mut uf = UnionFind::new(nv);
    let mut count = 0;
    for (e, &t) in tree.iter().enumerate() {
        if !t {
            continue;
        }
        let a = map.vertex(2 * e as u32);
        let b = map.vertex(2 * e as u32 + 1);
        if !uf.union(a as usize, b as usize) {
            return false;
        }
        count += 1;
    }
    count + 1 == nv
}

pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect() }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }
    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb) as u32;
        true
    }
}

/// A planar map with a distinguished external face (given by one of its darts)
/// whose boundary is a simple cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMap {
    pub map: PlanarMap,
    /// A dart whose face (under `face_next`) is the external face.
    pub external_dart: Dart,
    pub marked: Vec<Vertex>,
}

impl BoundaryMap {
    pub fn new(map: PlanarMap, external_dart: Dart, marked: Vec<Vertex>) -> Result<Self, MapError> {
        if external_dart as usize >= map.dart_count() {
            return Err(MapError::BadFace);
        }
        if marked.iter().any(|&v| v as usize >= map.vertex_count()) {
            return Err(MapError::BadVertex);
        }
        let bm = BoundaryMap { map, external_dart, marked };
        if !bm.boundary_is_simple() {
            return Err(MapError::NotSimpleBoundary);
        }
        Ok(bm)
    }

    pub fn boundary_darts(&self) -> Vec<Dart> {
        self.map.face_orbit(self.external_dart)
    }

    pub fn boundary_length(&self) -> usize {
        self.boundary_darts().len()
    }

    pub fn boundary_is_simple(&self) -> bool {
        let mut seen = vec![false; self.map.vertex_count()];
        for d in self.boundary_darts() {
            let v = self.map.vertex(d) as usize;
            if seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }

    /// Per-vertex boundary flags.
    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.map.vertex_count()];
        for d in self.boundary_darts() {
            f[self.map.vertex(d) as usize] = true;
        }
        f
    }

    /// Face identifier of the external face under `PlanarMap::face_ids` numbering.
    pub fn external_face(&self) -> u32 {
        self.map.face_ids()[self.external_dart as usize]
    }

    /// The external-face dart leaving boundary vertex `v`.
    pub fn boundary_dart_from(&self, v: Vertex) -> Option<Dart> {
        self.boundary_darts().into_iter().find(|&d| self.map.vertex(d) == v)
    }

    /// Vertices along the boundary, starting at `v` and following `face_next`.
    pub fn boundary_cycle_from(&self, v: Vertex) -> Option<Vec<Vertex>> {
        let d = self.boundary_dart_from(v)?;
        Some(self.map.face_vertices(d))
    }
}

/// Compressed adjacency of a multigraph: one slot per dart, in rotation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    off: Vec<u32>,
    nbr: Vec<u32>,
    dart: Vec<u32>,
}

impl Graph {
    pub fn from_map(m: &PlanarMap) -> Graph {
        let nv = m.vertex_count();
        let mut off = Vec::with_capacity(nv + 1);
        let mut nbr = Vec::with_capacity(m.dart_count());
        let mut dart = Vec::with_capacity(m.dart_count());
        off.push(0);
        for v in 0..nv as u32 {
            for d in m.rotation(v) {
                nbr.push(m.head(d));
                dart.push(d);
            }
            off.push(nbr.len() as u32);
        }
        Graph { off, nbr, dart }
    }

    /// Builds an undirected multigraph; edge `i` joins `edges[i].0` and
    /// `edges[i].1`, with dart `2i` leaving the first endpoint.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Graph {
        let mut deg = vec![0u32; n + 1];
        for &(a, b) in edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut off = vec![0u32; n + 1];
        for v in 0..n {
            off[v + 1] = off[v] + deg[v];
        }
        let mut fill = off.clone();
        let total = off[n] as usize;
        let mut nbr = vec![0; total];
        let mut dart = vec![0; total];
        for (i, &(a, b)) in edges.iter().enumerate() {
            let s = fill[a as usize] as usize;
            nbr[s] = b;
            dart[s] = 2 * i as u32;
            fill[a as usize] += 1;
            let s = fill[b as usize] as usize;
            nbr[s] = a;
            dart[s] = 2 * i as u32 + 1;
            fill[b as usize] += 1;
        }
        Graph { off, nbr, dart }
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.off.len() - 1
    }
    #[inline]
    pub fn slot_count(&self) -> usize {
        self.nbr.len()
    }
    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        (self.off[v as usize + 1] - self.off[v as usize]) as usize
    }
    #[inline]
    pub fn slot_range(&self, v: u32) -> core::ops::Range<usize> {
        self.off[v as usize] as usize..self.off[v as usize + 1] as usize
    }
    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.nbr[self.slot_range(v)]
    }
    /// Darts leaving `v`, aligned with [`Graph::neighbors`].
    #[inline]
    pub fn darts_at(&self, v: u32) -> &[u32] {
        &self.dart[self.slot_range(v)]
    }
    #[inline]
    pub fn slot_target(&self, s: usize) -> u32 {
        self.nbr[s]
    }
    #[inline]
    pub fn slot_dart(&self, s: usize) -> u32 {
        self.dart[s]
    }
    #[inline]
    pub fn slot_edge(&self, s: usize) -> u32 {
        self.dart[s] >> 1
    }
    pub fn edge_count(&self) -> usize {
        self.nbr.len() / 2
    }
    #[inline]
    pub fn offsets(&self) -> &[u32] {
        &self.off
    }
    #[inline]
    pub fn targets(&self) -> &[u32] {
        &self.nbr
    }
}

/// Reusable breadth-first search buffers.
#[derive(Debug, Clone, Default)]
pub struct Bfs {
    pub dist: Vec<u32>,
    queue: Vec<u32>,
}

impl Bfs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multi-source BFS over the whole component(s) of the sources.
    /// Returns the largest finite distance found.
    pub fn run(&mut self, g: &Graph, sources: &[u32]) -> u32 {
        self.run_limited(g, sources, u32::MAX)
    }

    /// BFS that stops expanding past `limit`.
    pub fn run_limited(&mut self, g: &Graph, sources: &[u32], limit: u32) -> u32 {
        let n = g.vertex_count();
        self.dist.clear();
        self.dist.resize(n, NONE);
        self.queue.clear();
        for &s in sources {
            if self.dist[s as usize] == NONE {
                self.dist[s as usize] = 0;
                self.queue.push(s);
            }
        }
        let mut head = 0;
        let mut maxd = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let dv = self.dist[v as usize];
            maxd = dv;
            if dv >= limit {
                continue;
            }
            for &w in g.neighbors(v) {
                if self.dist[w as usize] == NONE {
                    self.dist[w as usize] = dv + 1;
                    self.queue.push(w);
                }
            }
        }
        maxd
    }

    /// BFS that stops as soon as `wanted` vertices flagged in `flags` have
    /// been reached. Distances of unreached vertices stay `NONE`.
    pub fn run_until(&mut self, g: &Graph, sources: &[u32], flags: &[bool], wanted: usize) {
        let n = g.vertex_count();
        self.dist.clear();
        self.dist.resize(n, NONE);
        self.queue.clear();
        let mut found = 0;
        for &s in sources {
            if self.dist[s as usize] == NONE {
                self.dist[s as usize] = 0;
                self.queue.push(s);
                found += flags[s as usize] as usize;
            }
        }
        let mut head = 0;
        while head < self.queue.len() && found < wanted {
            let v = self.queue[head];
            head += 1;
            let dv = self.dist[v as usize];
            for &w in g.neighbors(v) {
                if self.dist[w as usize] == NONE {
                    self.dist[w as usize] = dv + 1;
                    self.queue.push(w);
                    found += flags[w as usize] as usize;
                }
            }
        }
    }

    /// Vertices in the order they were reached by the last run.
    pub fn order(&self) -> &[u32] {
        &self.queue
    }
}

/// Graph distance between two vertex sets (minimum over pairs).
pub fn bfs_distance(g: &Graph, from: &[u32], to: &[u32]) -> Result<u32, MapError> {
    if from.is_empty() || to.is_empty() {
        return Err(MapError::EmptySet);
    }
    let mut bfs = Bfs::new();
    bfs.run(g, from);
    to.iter()
        .map(|&t| bfs.dist[t as usize])
        .min()
        .filter(|&d| d != NONE)
        .ok_or(MapError::Unreachable)
}

/// Distance between two edges of a map: minimum over endpoint pairs.
pub fn edge_distance(m: &PlanarMap, g: &Graph, e: Edge, f: Edge) -> Result<u32, MapError> {
    let a = [m.vertex(2 * e), m.vertex(2 * e + 1)];
    let b = [m.vertex(2 * f), m.vertex(2 * f + 1)];
    bfs_distance(g, &a, &b)
}

/// Eccentricity of `v` restricted to targets flagged in `subset` (all vertices if `None`).
pub fn eccentricity(g: &Graph, bfs: &mut Bfs, v: u32, subset: Option<&[bool]>) -> Result<u32, MapError> {
    let far = bfs.run(g, &[v]);
    match subset {
        None => {
            if bfs.order().len() != g.vertex_count() {
                return Err(MapError::Unreachable);
            }
            Ok(far)
        }
        Some(s) => {
            let mut best = 0;
            for (u, &inside) in s.iter().enumerate() {
                if inside {
                    let d = bfs.dist[u];
                    if d == NONE {
                        return Err(MapError::Unreachable);
                    }
                    best = best.max(d);
                }
            }
            Ok(best)
        }
    }
}

/// Exact diameter of the whole graph (iFUB).
pub fn diameter(g: &Graph) -> Result<u32, MapError> {
    if g.vertex_count() == 0 {
        return Err(MapError::EmptySet);
    }
    let all: Vec<u32> = (0..g.vertex_count() as u32).collect();
    subset_diameter(g, &all)
}

/// Exact maximum distance between two vertices of `set`, measured in `g`.
///
/// Eccentricity bounds restricted to the set are tightened by breadth-first
/// searches from set vertices, alternating between the candidate with the
/// largest upper bound and the one with the smallest lower bound, until the
/// largest lower bound meets the largest remaining upper bound.
pub fn subset_diameter(g: &Graph, set: &[u32]) -> Result<u32, MapError> {
    if set.is_empty() {
        return Err(MapError::EmptySet);
    }
    let mut flag = vec![false; g.vertex_count()];
    let mut verts = Vec::with_capacity(set.len());
    for &v in set {
        if !flag[v as usize] {
            flag[v as usize] = true;
            verts.push(v);
        }
    }
    if verts.len() == 1 {
        return Ok(0);
    }
    let k = verts.len();
    let mut lower = vec![0u32; k];
    let mut upper = vec![u32::MAX; k];
    let mut active = vec![true; k];
    let mut bfs = Bfs::new();
    let mut lb = 0u32;
    let mut pick_high = true;
    let mut next = 0usize;
    loop {
        bfs.run_until(g, &[verts[next]], &flag, k);
        let mut ecc = 0;
        for &u in &verts {
            let d = bfs.dist[u as usize];
            if d == NONE {
                return Err(MapError::Unreachable);
            }
            ecc = ecc.max(d);
        }
        active[next] = false;
        for (i, &u) in verts.iter().enumerate() {
            let d = bfs.dist[u as usize];
            lower[i] = lower[i].max(d).max(ecc - d);
            upper[i] = upper[i].min(ecc + d);
            lb = lb.max(lower[i]);
        }
        let mut ub = 0u32;
        for i in 0..k {
            if active[i] && upper[i] <= lb {
                active[i] = false;
            }
            if active[i] {
                ub = ub.max(upper[i]);
            }
        }
        if ub <= lb {
            return Ok(lb);
        }
        let cand = (0..k).filter(|&i| active[i]);
        next = if pick_high {
            cand.max_by_key(|&i| (upper[i], core::cmp::Reverse(i)))
        } else {
            cand.min_by_key(|&i| (lower[i], i))
        }
        .unwrap_or(0);
        pick_high = !pick_high;
    }
}

/// Subgraph induced on `vertices` (listed without repetition), renumbered in
/// the given order. Returns the graph and the old-to-new id table (`NONE`
/// for dropped vertices). Slot darts keep their original ids.
pub fn induced_subgraph(g: &Graph, vertices: &[u32]) -> (Graph, Vec<u32>) {
    let mut new_id = vec![NONE; g.vertex_count()];
    for (i, &v) in vertices.iter().enumerate() {
        new_id[v as usize] = i as u32;
    }
    let mut off = Vec::with_capacity(vertices.len() + 1);
    let mut nbr = Vec::new();
    let mut dart = Vec::new();
    off.push(0);
    for &v in vertices {
        for s in g.slot_range(v) {
            let w = new_id[g.nbr[s] as usize];
            if w != NONE {
                nbr.push(w);
                dart.push(g.dart[s]);
            }
        }
        off.push(nbr.len() as u32);
    }
    (Graph { off, nbr, dart }, new_id)
}

/// Ball sizes `#B_r(center)` for `r = 0..=r_max`.
pub fn ball_sizes(g: &Graph, center: u32, r_max: u32) -> Vec<u64> {
    let mut bfs = Bfs::new();
    bfs.run_limited(g, &[center], r_max);
    let mut counts = vec![0u64; r_max as usize + 1];
    for &v in bfs.order() {
        let d = bfs.dist[v as usize];
        if d <= r_max {
            counts[d as usize] += 1;
        }
    }
    for r in 1..counts.len() {
        counts[r] += counts[r - 1];
    }
    counts
}

/// Byte string identifying a rooted map (with decorations) up to
/// root-preserving isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(pub Vec<u8>);

/// Canonical code of `map` rooted at `root`, with a per-dart flag byte and an
/// ordered list of marked vertices.
pub fn canonical_code_with(
    map: &PlanarMap,
    root: Option<Dart>,
    dart_flag: &dyn Fn(Dart) -> u8,
    marked: &[Vertex],
) -> CanonicalCode {
    let n = map.dart_count();
    let mut out = Vec::with_capacity(9 * n + 8 + 4 * marked.len());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    let root = match root {
        Some(r) if n > 0 => r,
        _ => {
            out.extend_from_slice(&(marked.len() as u32).to_le_bytes());
            for _ in marked {
                out.extend_from_slice(&0u32.to_le_bytes());
            }
            return CanonicalCode(out);
        }
    };
    let mut label = vec![NONE; n];
    let mut order = Vec::with_capacity(n);
    label[root as usize] = 0;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let d = order[head];
        head += 1;
        for x in [map.next(d), twin(d)] {
            if label[x as usize] == NONE {
                label[x as usize] = order.len() as u32;
                order.push(x);
            }
        }
    }
    for &d in &order {
        out.extend_from_slice(&label[map.next(d) as usize].to_le_bytes());
        out.extend_from_slice(&label[twin(d) as usize].to_le_bytes());
        out.push(dart_flag(d));
    }
    out.extend_from_slice(&(marked.len() as u32).to_le_bytes());
    for &v in marked {
        let min_label = map.rotation(v).map(|d| label[d as usize]).min().unwrap_or(0);
        out.extend_from_slice(&min_label.to_le_bytes());
    }
    CanonicalCode(out)
}

/// Canonical code of a rooted map.
pub fn canonical_code(map: &PlanarMap) -> CanonicalCode {
    canonical_code_with(map, map.root_dart(), &|_| 0, &[])
}

/// Canonical code of a rooted map with its spanning tree.
pub fn canonical_code_decorated(dm: &DecoratedMap) -> CanonicalCode {
    canonical_code_with(&dm.map, dm.map.root_dart(), &|d| dm.in_tree(d) as u8, &[])
}

/// Canonical code of a boundary map rooted at the map's root dart; marks the
/// external face and the marked vertices, and optionally a tree.
pub fn canonical_code_boundary(bm: &BoundaryMap, tree: Option<&[bool]>) -> CanonicalCode {
    canonical_code_boundary_rooted(bm, bm.map.root_dart(), tree)
}

/// As [`canonical_code_boundary`] with an explicit root dart.
pub fn canonical_code_boundary_rooted(bm: &BoundaryMap, root: Option<Dart>, tree: Option<&[bool]>) -> CanonicalCode {
    let mut ext = vec![false; bm.map.dart_count()];
    for d in bm.boundary_darts() {
        ext[d as usize] = true;
    }
    let flag = |d: Dart| -> u8 {
        let t = tree.map(|t| t[edge_of(d) as usize] as u8).unwrap_or(0);
        (ext[d as usize] as u8) << 1 | t
    };
    canonical_code_with(&bm.map, root, &flag, &bm.marked)
}

/// Radial quadrangulation `Q`: vertices are primal vertices (ids in order of
/// their first corner) and faces; one edge per corner, so `2E` edges and `E`
/// quadrilateral faces. `Q`-dart `2d` sits at `tail(d)` for the corner between
/// `d` and `next(d)`; dart `2d + 1` sits at the face containing that corner.
/// The root is the first `Q`-edge clockwise from the root dart at its tail.
pub fn radial_quadrangulation(dm: &DecoratedMap) -> PlanarMap {
    let m = &dm.map;
    if m.dart_count() == 0 {
        return PlanarMap::empty();
    }
    let prev = m.prev_table();
    PlanarMap::from_next(quad_next(m, &prev), quad_root(m, &prev)).expect("radial quadrangulation is planar")
}

fn quad_next(m: &PlanarMap, prev: &[Dart]) -> Vec<Dart> {
    let n = m.dart_count();
    let mut next = vec![0; 2 * n];
    for d in 0..n as Dart {
        next[(2 * d) as usize] = 2 * m.next(d);
        next[(2 * d + 1) as usize] = 2 * prev[twin(d) as usize] + 1;
    }
    next
}

fn quad_root(m: &PlanarMap, prev: &[Dart]) -> Option<Dart> {
    m.root_dart().map(|r| 2 * prev[r as usize])
}

/// The triangulation `Q ∪ T ∪ T*`: every quadrilateral of `Q` is split by the
/// tree edge or the dual-tree edge it contains, giving `2E` triangles. `Q`
/// darts are numbered as in [`radial_quadrangulation`]; the diagonal of primal
/// dart `d` is dart `2 · dart_count + d`.
pub fn mullin_triangulation(dm: &DecoratedMap) -> PlanarMap {
    let m = &dm.map;
    if m.dart_count() == 0 {
        return PlanarMap::empty();
    }
    let n = m.dart_count() as Dart;
    let prev = m.prev_table();
    let mut next = quad_next(m, &prev);
    next.resize(3 * n as usize, 0);
    for d in 0..n {
        let diag = 2 * n + d;
        let before = if dm.in_tree(d) { 2 * prev[d as usize] } else { 2 * twin(d) + 1 };
        let after = next[before as usize];
        next[before as usize] = diag;
        next[diag as usize] = after;
    }
    PlanarMap::from_next(next, quad_root(m, &prev)).expect("Q ∪ T ∪ T* is planar")
}
