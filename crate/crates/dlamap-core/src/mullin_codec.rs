//! Mullin's bijection between lattice walks and spanning-tree decorated maps.
//!
//! Horizontal steps (`R`/`L`) walk along the contour of the spanning tree:
//! `R` creates a child, `L` returns to the parent. Vertical steps (`U`/`D`)
//! open and close non-tree edges, matched last-in first-out. At every vertex
//! darts appear in the rotation in the order they are created, beginning with
//! the dart to the parent. The root dart of a decoded map is the twin of the
//! first dart created at the starting vertex `v0`, so it points at `v0`.
//!
//! Walks with boundary: a walk `w` staying in the quadrant and ending at
//! `(ℓ, 0)` is decoded as the excursion `U w D L^ℓ`. The extra chord `e0`
//! joins `v0` to the end vertex of `w`, closing a simple boundary of length
//! `ℓ + 1` made of `e0` and the tree path below it.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::planar_map::{edge_of, twin, BoundaryMap, Dart, DecoratedMap, MapError, PlanarMap, Vertex, NONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Step {
    /// `+e₁`
    R = 0,
    /// `−e₁`
    L = 1,
    /// `+e₂`
    U = 2,
    /// `−e₂`
    D = 3,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::R, Step::L, Step::U, Step::D];

    #[inline]
    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::R => (1, 0),
            Step::L => (-1, 0),
            Step::U => (0, 1),
            Step::D => (0, -1),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Step::R => 'R',
            Step::L => 'L',
            Step::U => 'U',
            Step::D => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Step> {
        match c {
            'R' => Some(Step::R),
            'L' => Some(Step::L),
            'U' => Some(Step::U),
            'D' => Some(Step::D),
            _ => None,
        }
    }

    #[inline]
    pub fn from_index(i: u32) -> Step {
        Step::ALL[(i & 3) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WalkKind {
    Free,
    QuadrantExcursion,
    /// Ends at `(ℓ, 0)`.
    BoundaryExcursion(u32),
    QuadrantMeander,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeWalk {
    pub steps: Vec<Step>,
    pub kind: WalkKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    InvalidWalk,
    WindowUnresolved,
    HorizonTooShort,
    TooLarge,
    BadWindow,
    NotDecodable,
    Map(MapError),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::InvalidWalk => f.write_str("walk violates its kind invariant"),
            CodecError::WindowUnresolved => f.write_str("window structure depends on steps outside the walk"),
            CodecError::HorizonTooShort => f.write_str("horizon reached before the requested running minima"),
            CodecError::TooLarge => f.write_str("enumeration size above cap"),
            CodecError::BadWindow => f.write_str("window bounds must satisfy a < b <= length"),
            CodecError::NotDecodable => f.write_str("map is not in the image of the boundary decoder"),
            CodecError::Map(e) => write!(f, "map error: {e}"),
        }
    }
}

impl From<MapError> for CodecError {
    fn from(e: MapError) -> Self {
        CodecError::Map(e)
    }
}

impl LatticeWalk {
    pub fn new(steps: Vec<Step>, kind: WalkKind) -> Result<Self, CodecError> {
        let w = LatticeWalk { steps, kind };
        if !w.is_valid() {
            return Err(CodecError::InvalidWalk);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end_point(&self) -> (i64, i64) {
        self.steps.iter().fold((0, 0), |(x, y), s| {
            let (dx, dy) = s.delta();
            (x + dx, y + dy)
        })
    }

    fn stays_in_quadrant(&self) -> bool {
        let (mut x, mut y) = (0i64, 0i64);
        for s in &self.steps {
            let (dx, dy) = s.delta();
            x += dx;
            y += dy;
            if x < 0 || y < 0 {
                return false;
            }
        }
        true
    }

    pub fn is_valid(&self) -> bool {
        match self.kind {
            WalkKind::Free => true,
            WalkKind::QuadrantMeander => self.stays_in_quadrant(),
            WalkKind::QuadrantExcursion => self.stays_in_quadrant() && self.end_point() == (0, 0),
            WalkKind::BoundaryExcursion(l) => self.stays_in_quadrant() && self.end_point() == (l as i64, 0),
        }
    }

    pub fn to_string_steps(&self) -> alloc::string::String {
        self.steps.iter().map(|s| s.as_char()).collect()
    }

    pub fn parse_steps(s: &str) -> Option<Vec<Step>> {
        s.chars().map(Step::from_char).collect()
    }
}

/// Decodes a quadrant excursion into a rooted map with a spanning tree.
pub fn decode(w: &LatticeWalk) -> Result<DecoratedMap, CodecError> {
    if w.kind != WalkKind::QuadrantExcursion || !w.is_valid() {
        return Err(CodecError::InvalidWalk);
    }
    decode_steps(&w.steps)
}

/// Output of decoding a walk with boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryDecoded {
    /// The map with its spanning tree; the boundary minus the root edge lies in the tree.
    pub decorated: DecoratedMap,
    pub boundary: BoundaryMap,
}

impl BoundaryDecoded {
    /// Wired spanning tree: the tree's interior edges together with every boundary edge.
    pub fn wired_tree(&self) -> Vec<bool> {
        let mut t = self.decorated.tree.clone();
        for d in self.boundary.boundary_darts() {
            t[edge_of(d) as usize] = true;
        }
        t
    }
}

/// Decodes a boundary excursion ending at `(ℓ, 0)`; see the module docs.
pub fn decode_boundary(w: &LatticeWalk) -> Result<BoundaryDecoded, CodecError> {
    let l = match w.kind {
        WalkKind::BoundaryExcursion(l) if w.is_valid() => l,
        _ => return Err(CodecError::InvalidWalk),
    };
    let steps = wrap_boundary(&w.steps, l);
    let dm = decode_steps(&steps)?;
    let boundary = BoundaryMap::new(dm.map.clone(), 0, Vec::new())?;
    debug_assert_eq!(boundary.boundary_length(), l as usize + 1);
    Ok(BoundaryDecoded { decorated: dm, boundary })
}

pub(crate) fn wrap_boundary(steps: &[Step], l: u32) -> Vec<Step> {
    let mut s = Vec::with_capacity(steps.len() + l as usize + 2);
    s.push(Step::U);
    s.extend_from_slice(steps);
    s.push(Step::D);
    s.extend(core::iter::repeat(Step::L).take(l as usize));
    s
}

/// Stack decoder for any step sequence that is a quadrant excursion.
pub(crate) fn decode_steps(steps: &[Step]) -> Result<DecoratedMap, CodecError> {
    if steps.is_empty() {
        return Ok(DecoratedMap { map: PlanarMap::empty(), tree: Vec::new() });
    }
    let n_edges = steps.len() / 2;
    // Rotation lists are built as linked insertion orders: `first_at` / `last_at` per vertex, `succ` per dart.
    let mut first_at: Vec<Dart> = vec![NONE];
    let mut last_at: Vec<Dart> = vec![NONE];
    let mut succ: Vec<Dart> = vec![NONE; 2 * n_edges];
    let mut tree = Vec::with_capacity(n_edges);
    let mut insert = |v: usize, d: Dart, first_at: &mut Vec<Dart>, last_at: &mut Vec<Dart>| {
        if first_at[v] == NONE {
            first_at[v] = d;
        } else {
            succ[last_at[v] as usize] = d;
        }
        last_at[v] = d;
    };
    let mut cur = 0usize;
    let mut parents: Vec<usize> = Vec::new();
    let mut chords: Vec<Dart> = Vec::new();
    let mut next_edge: u32 = 0;
    for &s in steps {
        match s {
            Step::R => {
                let e = next_edge;
                next_edge += 1;
                tree.push(true);
                let c = first_at.len();
                first_at.push(NONE);
                last_at.push(NONE);
                insert(cur, 2 * e, &mut first_at, &mut last_at);
                insert(c, 2 * e + 1, &mut first_at, &mut last_at);
                parents.push(cur);
                cur = c;
            }
            Step::L => {
                cur = parents.pop().ok_or(CodecError::InvalidWalk)?;
            }
            Step::U => {
                let e = next_edge;
                next_edge += 1;
                tree.push(false);
                insert(cur, 2 * e, &mut first_at, &mut last_at);
                chords.push(2 * e + 1);
            }
            Step::D => {
                let d = chords.pop().ok_or(CodecError::InvalidWalk)?;
                insert(cur, d, &mut first_at, &mut last_at);
            }
        }
    }
    if !parents.is_empty() || !chords.is_empty() || next_edge as usize != n_edges {
        return Err(CodecError::InvalidWalk);
    }
    for v in 0..first_at.len() {
        succ[last_at[v] as usize] = first_at[v];
    }
    let root = twin(first_at[0]);
    let map = PlanarMap::from_next(succ, Some(root))?;
    Ok(DecoratedMap { map, tree })
}

/// Vertex occupied by the tree contour after each step of `steps`, for the
/// map that [`decode`] builds from them; entry `0` is the root vertex.
pub fn contour_vertices(dm: &DecoratedMap, steps: &[Step]) -> Vec<Vertex> {
    let mut cur = Vec::with_capacity(steps.len() + 1);
    if dm.map.edge_count() == 0 {
        cur.resize(steps.len() + 1, 0);
        return cur;
    }
    let mut path = vec![dm.map.root_vertex()];
    let mut next_edge: u32 = 0;
    cur.push(path[0]);
    for &s in steps {
        match s {
            Step::R => {
                path.push(dm.map.vertex(2 * next_edge + 1));
                next_edge += 1;
            }
            Step::L => {
                path.pop();
            }
            Step::U => next_edge += 1,
            Step::D => {}
        }
        cur.push(*path.last().unwrap_or(&cur[0]));
    }
    cur
}

/// Inverse of [`decode`]: contour walk of the tree from the root vertex,
/// starting with the twin of the root dart.
pub fn encode(dm: &DecoratedMap) -> LatticeWalk {
    LatticeWalk { steps: encode_steps(dm), kind: WalkKind::QuadrantExcursion }
}

pub(crate) fn encode_steps(dm: &DecoratedMap) -> Vec<Step> {
    let m = &dm.map;
    let root = match m.root_dart() {
        Some(r) => r,
        None => return Vec::new(),
    };
    let mut deg = vec![0usize; m.vertex_count()];
    for &v in m.vertex_table() {
        deg[v as usize] += 1;
    }
    let mut out = Vec::with_capacity(m.dart_count());
    let mut seen = vec![false; m.dart_count()];
    let start = twin(root);
    // Frames: (next dart to examine at this vertex, darts left to examine).
    let mut frames: Vec<(Dart, usize)> = vec![(start, deg[m.vertex(start) as usize])];
    while let Some(top) = frames.last_mut() {
        if top.1 == 0 {
            frames.pop();
            if !frames.is_empty() {
                out.push(Step::L);
            }
            continue;
        }
        let d = top.0;
        top.0 = m.next(d);
        top.1 -= 1;
        if dm.in_tree(d) {
            out.push(Step::R);
            let back = twin(d);
            frames.push((m.next(back), deg[m.vertex(back) as usize] - 1));
        } else if seen[twin(d) as usize] {
            out.push(Step::D);
        } else {
            seen[d as usize] = true;
            out.push(Step::U);
        }
    }
    out
}

/// Inverse of [`decode_boundary`]. The map must be rooted at the boundary
/// edge that closes the tree path, with the external face to the left of the
/// twin of the root dart, and `tree` must contain every other boundary edge.
pub fn encode_boundary(bm: &BoundaryMap, tree: &[bool]) -> Result<LatticeWalk, CodecError> {
    let root = bm.map.root_dart().ok_or(CodecError::NotDecodable)?;
    if bm.map.face_orbit(bm.external_dart).iter().all(|&d| d != twin(root)) {
        return Err(CodecError::NotDecodable);
    }
    let dm = DecoratedMap::new(bm.map.clone(), tree.to_vec())?;
    if dm.in_tree(root) {
        return Err(CodecError::NotDecodable);
    }
    let l = bm.boundary_length() - 1;
    let steps = encode_steps(&dm);
    let n = steps.len();
    if n < l + 2 || steps[0] != Step::U || steps[n - l - 1] != Step::D || steps[n - l..].iter().any(|&s| s != Step::L) {
        return Err(CodecError::NotDecodable);
    }
    let w = LatticeWalk { steps: steps[1..n - l - 1].to_vec(), kind: WalkKind::BoundaryExcursion(l as u32) };
    if !w.is_valid() {
        return Err(CodecError::NotDecodable);
    }
    Ok(w)
}

/// All walks of the given kind, in lexicographic order over `R < L < U < D`.
/// Quadrant excursions have length `2n`; boundary excursions ending at
/// `(ℓ, 0)` have length `2n − ℓ`; meanders have length `n`.
pub fn enumerate_excursions(n: usize, kind: WalkKind) -> Result<Vec<LatticeWalk>, CodecError> {
    const CAP: usize = 7;
    if n > CAP {
        return Err(CodecError::TooLarge);
    }
    let (len, target) = match kind {
        WalkKind::QuadrantExcursion => (2 * n, Some((0i64, 0i64))),
        WalkKind::BoundaryExcursion(l) => {
            if l as usize > 2 * n {
                return Ok(Vec::new());
            }
            (2 * n - l as usize, Some((l as i64, 0)))
        }
        WalkKind::QuadrantMeander => (n, None),
        WalkKind::Free => (n, None),
    };
    let quadrant = kind != WalkKind::Free;
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(len);
    enumerate_rec(&mut buf, len, 0, 0, quadrant, target, kind, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    buf: &mut Vec<Step>,
    len: usize,
    x: i64,
    y: i64,
    quadrant: bool,
    target: Option<(i64, i64)>,
    kind: WalkKind,
    out: &mut Vec<LatticeWalk>,
) {
    let left = (len - buf.len()) as i64;
    if let Some((tx, ty)) = target {
        let need = (x - tx).abs() + (y - ty).abs();
        if need > left || (left - need) % 2 != 0 {
            return;
        }
    }
    if left == 0 {
        out.push(LatticeWalk { steps: buf.clone(), kind });
        return;
    }
    for s in Step::ALL {
        let (dx, dy) = s.delta();
        let (nx, ny) = (x + dx, y + dy);
        if quadrant && (nx < 0 || ny < 0) {
            continue;
        }
        buf.push(s);
        enumerate_rec(buf, len, nx, ny, quadrant, target, kind, out);
        buf.pop();
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn ln_catalan(k: u64) -> f64 {
    ln_choose(2 * k, k) - libm::log(k as f64 + 1.0)
}

/// Log of the number of nonnegative ±1 paths of length `j` ending at `l`.
fn ln_ballot(j: u64, l: u64) -> f64 {
    libm::log((l + 1) as f64) - libm::log((j + 1) as f64) + ln_choose(j + 1, (j - l) / 2)
}

/// Index drawn with probability proportional to `exp(logw[i])`.
fn sample_log_weights<R: Rng + ?Sized>(logw: &[(u64, f64)], rng: &mut R) -> u64 {
    let max = logw.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|p| libm::exp(p.1 - max)).sum();
    let mut u = rng.random::<f64>() * total;
    for &(k, lw) in logw {
        u -= libm::exp(lw - max);
        if u <= 0.0 {
            return k;
        }
    }
    logw.last().expect("nonempty weights").0
}

/// Uniform ±1 path with `ups` up-steps and `downs` down-steps (`ups > downs`)
/// whose partial sums are all positive, by the cycle lemma. `true` is up.
fn positive_path<R: Rng + ?Sized>(ups: usize, downs: usize, rng: &mut R) -> Vec<bool> {
    debug_assert!(ups > downs);
    let n = ups + downs;
    let mut w: Vec<bool> = (0..n).map(|i| i < ups).collect();
    w.shuffle(rng);
    let mut s = vec![0i64; n + 1];
    for i in 0..n {
        s[i + 1] = s[i] + if w[i] { 1 } else { -1 };
    }
    let h = s[n];
    let mut suffix_min = vec![i64::MAX; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1].min(s[i + 1]);
    }
    let mut good = Vec::with_capacity((ups - downs).max(1));
    let mut prefix_min = i64::MAX;
    for st in 0..n {
        if st > 0 {
            prefix_min = prefix_min.min(s[st]);
        }
        if s[st] < suffix_min[st] && (st == 0 || s[st] - h < prefix_min) {
            good.push(st);
        }
    }
    debug_assert_eq!(good.len(), ups - downs);
    let st = good[rng.random_range(0..good.len())];
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&w[st..]);
    out.extend_from_slice(&w[..st]);
    out
}

/// Uniform nonnegative ±1 path of length `j` ending at height `l`.
pub fn sample_ballot_path<R: Rng + ?Sized>(j: usize, l: usize, rng: &mut R) -> Vec<bool> {
    assert!(j >= l && (j - l) % 2 == 0);
    let ups = (j + l) / 2;
    let downs = (j - l) / 2;
    let mut p = positive_path(ups + 1, downs, rng);
    p.remove(0);
    p
}

/// Uniform Dyck path with `2k` steps.
pub fn sample_dyck_path<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<bool> {
    sample_ballot_path(2 * k, 0, rng)
}

fn shuffle_coordinates<R: Rng + ?Sized>(h: &[bool], v: &[bool], rng: &mut R) -> Vec<Step> {
    let mut which: Vec<bool> = (0..h.len() + v.len()).map(|i| i < h.len()).collect();
    which.shuffle(rng);
    let (mut hi, mut vi) = (0, 0);
    which
        .into_iter()
        .map(|is_h| {
            if is_h {
                hi += 1;
                if h[hi - 1] {
                    Step::R
                } else {
                    Step::L
                }
            } else {
                vi += 1;
                if v[vi - 1] {
                    Step::U
                } else {
                    Step::D
                }
            }
        })
        .collect()
}

/// Uniform quadrant excursion of length `2n`.
pub fn sample_quadrant_excursion<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LatticeWalk {
    let n64 = n as u64;
    let logw: Vec<(u64, f64)> =
        (0..=n64).map(|k| (k, ln_choose(2 * n64, 2 * k) + ln_catalan(k) + ln_catalan(n64 - k))).collect();
    let k = sample_log_weights(&logw, rng) as usize;
    let h = sample_dyck_path(k, rng);
    let v = sample_dyck_path(n - k, rng);
    LatticeWalk { steps: shuffle_coordinates(&h, &v, rng), kind: WalkKind::QuadrantExcursion }
}

/// Uniform boundary excursion of length `2n − ℓ` ending at `(ℓ, 0)`; it
/// decodes to a map with `n + 1` edges and a boundary of length `ℓ + 1`.
pub fn sample_boundary_excursion<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> LatticeWalk {
    assert!(l <= 2 * n);
    let len = (2 * n - l) as u64;
    let l64 = l as u64;
    let logw: Vec<(u64, f64)> = (l64..=len)
        .step_by(2)
        .map(|j| (j, ln_choose(len, j) + ln_ballot(j, l64) + ln_catalan((len - j) / 2)))
        .collect();
    let j = sample_log_weights(&logw, rng) as usize;
    let h = sample_ballot_path(j, l, rng);
    let v = sample_dyck_path((len as usize - j) / 2, rng);
    LatticeWalk { steps: shuffle_coordinates(&h, &v, rng), kind: WalkKind::BoundaryExcursion(l as u32) }
}

#[inline]
pub fn random_step<R: Rng + ?Sized>(rng: &mut R) -> Step {
    Step::from_index(rng.random_range(0..4u32))
}

pub fn sample_free_walk<R: Rng + ?Sized>(len: usize, rng: &mut R) -> LatticeWalk {
    LatticeWalk { steps: (0..len).map(|_| random_step(rng)).collect(), kind: WalkKind::Free }
}

/// The map induced on the vertices visited by the tree contour during a time window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowMap {
    pub map: PlanarMap,
    /// Per edge of `map`: whether it belongs to the spanning tree.
    pub tree: Vec<bool>,
    /// Contour vertex at times `a, a + 1, ..., b`.
    pub cur: Vec<Vertex>,
    pub root_vertex: Vertex,
    /// Vertices incident to at least one edge leaving the window vertex set.
    pub has_external: Vec<bool>,
}

impl WindowMap {
    pub fn vertex_at(&self, t_from_a: usize) -> Vertex {
        self.cur[t_from_a]
    }
}

/// `M|_{[a,b]}` for a walk held in memory. Free walks are treated as a piece of
/// a bi-infinite walk, so the window must be resolved within the given steps.
pub fn window_submap(w: &LatticeWalk, a: usize, b: usize) -> Result<WindowMap, CodecError> {
    if a >= b || b > w.len() {
        return Err(CodecError::BadWindow);
    }
    if !w.is_valid() {
        return Err(CodecError::InvalidWalk);
    }
    match w.kind {
        WalkKind::Free => window_from_streams(
            &w.steps[a..b],
            w.steps[..a].iter().rev().copied(),
            w.steps[b..].iter().copied(),
            false,
        ),
        WalkKind::QuadrantExcursion | WalkKind::QuadrantMeander => window_from_streams(
            &w.steps[a..b],
            w.steps[..a].iter().rev().copied(),
            w.steps[b..].iter().copied(),
            true,
        ),
        WalkKind::BoundaryExcursion(l) => {
            let s = wrap_boundary(&w.steps, l);
            window_from_streams(&s[a + 1..b + 1], s[..a + 1].iter().rev().copied(), s[b + 1..].iter().copied(), true)
        }
    }
}

#[derive(Clone, Copy)]
struct Tagged {
    vertex: u32,
    time: i64,
}

struct WindowBuilder {
    /// (vertex, time) of each dart; edge `k` owns entries `2k`, `2k + 1`.
    darts: Vec<Tagged>,
    tree: Vec<bool>,
    external: Vec<bool>,
}

impl WindowBuilder {
    fn edge(&mut self, u: Tagged, v: Tagged, is_tree: bool) {
        self.darts.push(u);
        self.darts.push(v);
        self.tree.push(is_tree);
    }

    fn chord(&mut self, u: Tagged, v: Tagged) {
        match (u.vertex != NONE, v.vertex != NONE) {
            (true, true) => self.edge(u, v, false),
            (true, false) => self.external[u.vertex as usize] = true,
            (false, true) => self.external[v.vertex as usize] = true,
            (false, false) => {}
        }
    }

    fn mark(&mut self, v: u32) {
        if v != NONE {
            self.external[v as usize] = true;
        }
    }
}

/// Streaming window extraction.
///
/// `window` holds steps `a + 1 ..= b`; `before` yields steps `a, a − 1, ...`
/// and `after` yields steps `b + 1, b + 2, ...`. When `finite` is false the
/// streams are prefixes of an infinite walk and running out of steps before
/// the window is resolved is an error; when true, the streams are the whole
/// walk.
pub fn window_from_streams(
    window: &[Step],
    before: impl IntoIterator<Item = Step>,
    after: impl IntoIterator<Item = Step>,
    finite: bool,
) -> Result<WindowMap, CodecError> {
    window_impl(window, before, after, if finite { Ends::Finite } else { Ends::Infinite })
}

/// Like [`window_from_streams`] for an infinite walk of which only finite
/// stretches on each side are known. Instead of failing, every vertex whose
/// edges cannot be settled from the known steps is flagged in `has_external`.
pub fn window_from_truncated_streams(
    window: &[Step],
    before: impl IntoIterator<Item = Step>,
    after: impl IntoIterator<Item = Step>,
) -> Result<WindowMap, CodecError> {
    window_impl(window, before, after, Ends::Truncated)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ends {
    Infinite,
    Finite,
    Truncated,
}

fn window_impl(
    window: &[Step],
    before: impl IntoIterator<Item = Step>,
    after: impl IntoIterator<Item = Step>,
    ends: Ends,
) -> Result<WindowMap, CodecError> {
    if window.is_empty() {
        return Err(CodecError::BadWindow);
    }
    // Levels relative to L(a) = 0.
    let mut lev = 0i64;
    let mut m_w = 0i64;
    for s in window {
        lev += s.delta().0;
        m_w = m_w.min(lev);
    }
    let levels_below = (-m_w) as usize;
    let mut b = WindowBuilder { darts: Vec::new(), tree: Vec::new(), external: Vec::new() };
    // Ancestors of cur(a) at levels m_w..=0 get ids 0..=levels_below, with cur(a) last.
    let mut chain: Vec<u32> = (0..=levels_below as u32).collect();
    b.external.resize(levels_below + 1, false);
    let w_at = |chain: &[u32], lev: i64| -> u32 { chain[(lev - m_w) as usize] };

    // Phase 0: backwards from a.
    let mut pending_closes: Vec<Tagged> = Vec::new();
    let mut open_at_a: Vec<Tagged> = Vec::new();
    let mut lev = 0i64;
    let mut runmin = 0i64;
    let mut time = 0i64;
    let mut resolved_before = false;
    let tag_before = |lev: i64, runmin: i64| -> bool { lev == runmin && lev >= m_w };
    for s in before {
        // Step `s` moves from time `time - 1` to `time`.
        let here_w = tag_before(lev, runmin);
        let here = if here_w { w_at(&chain, lev) } else { NONE };
        match s {
            Step::R => {
                let parent_lev = lev - 1;
                let new_min = runmin.min(parent_lev);
                let parent_w = tag_before(parent_lev, new_min);
                if here_w {
                    if parent_w {
                        let p = w_at(&chain, parent_lev);
                        b.edge(Tagged { vertex: p, time }, Tagged { vertex: here, time }, true);
                    } else {
                        b.mark(here);
                    }
                } else if parent_w {
                    b.mark(w_at(&chain, parent_lev));
                }
                lev = parent_lev;
                runmin = new_min;
            }
            Step::L => lev += 1,
            Step::U => {
                let opener = Tagged { vertex: here, time };
                match pending_closes.pop() {
                    Some(closer) => b.chord(opener, closer),
                    None => open_at_a.push(opener),
                }
            }
            Step::D => pending_closes.push(Tagged { vertex: here, time }),
        }
        time -= 1;
        if lev < m_w {
            resolved_before = true;
            break;
        }
    }
    if !resolved_before {
        match ends {
            Ends::Infinite => return Err(CodecError::WindowUnresolved),
            Ends::Truncated => {
                // Ancestors below the running minimum were never reached going
                // backwards; their tree edges are known, their other edges are not.
                for y in m_w..=runmin {
                    b.mark(w_at(&chain, y));
                    if y > m_w {
                        let t = time - (runmin - y);
                        let (p, c) = (w_at(&chain, y - 1), w_at(&chain, y));
                        b.edge(Tagged { vertex: p, time: t }, Tagged { vertex: c, time: t }, true);
                    }
                }
            }
            Ends::Finite => {}
        }
    }
    for c in pending_closes.drain(..) {
        b.mark(c.vertex);
    }

    // Phase 1: the window itself.
    let mut cur_ids: Vec<u32> = Vec::with_capacity(window.len() + 1);
    let mut path: Vec<u32> = chain.clone();
    let mut stack: Vec<Tagged> = Vec::new();
    let mut open_idx = 0usize;
    cur_ids.push(*path.last().expect("nonempty chain"));
    for (i, &s) in window.iter().enumerate() {
        let t = (i + 1) as i64;
        let cur = *path.last().expect("nonempty chain");
        match s {
            Step::R => {
                let c = b.external.len() as u32;
                b.external.push(false);
                b.edge(Tagged { vertex: cur, time: t }, Tagged { vertex: c, time: t }, true);
                path.push(c);
            }
            Step::L => {
                path.pop();
            }
            Step::U => stack.push(Tagged { vertex: cur, time: t }),
            Step::D => {
                let closer = Tagged { vertex: cur, time: t };
                if let Some(o) = stack.pop() {
                    b.chord(o, closer);
                } else if open_idx < open_at_a.len() {
                    b.chord(open_at_a[open_idx], closer);
                    open_idx += 1;
                } else if resolved_before || ends == Ends::Truncated {
                    b.mark(cur);
                } else {
                    return Err(CodecError::InvalidWalk);
                }
            }
        }
        cur_ids.push(*path.last().expect("nonempty chain"));
    }

    // Phase 2: forwards from b.
    let mut st: Vec<Tagged> = open_at_a[open_idx..].iter().rev().copied().collect();
    st.extend_from_slice(&stack);
    drop(stack);
    chain = path;
    let mut lev = chain.len() as i64 - 1 + m_w;
    let mut runmin = lev;
    let mut time = window.len() as i64;
    let mut resolved_after = false;
    for s in after {
        time += 1;
        let here = if lev == runmin { w_at(&chain, lev) } else { NONE };
        match s {
            Step::R => {
                b.mark(here);
                lev += 1;
            }
            Step::L => {
                lev -= 1;
                if lev < runmin {
                    runmin = lev;
                    if lev < m_w {
                        resolved_after = true;
                        break;
                    }
                    chain.truncate((lev - m_w) as usize + 1);
                }
            }
            Step::U => st.push(Tagged { vertex: here, time }),
            Step::D => {
                let closer = Tagged { vertex: here, time };
                match st.pop() {
                    Some(o) => b.chord(o, closer),
                    None => b.mark(here),
                }
            }
        }
    }
    if !resolved_after {
        match ends {
            Ends::Infinite => return Err(CodecError::WindowUnresolved),
            Ends::Truncated => chain.iter().for_each(|&v| b.mark(v)),
            Ends::Finite => {}
        }
    }
    for o in st {
        b.mark(o.vertex);
    }
    assemble_window(b, &cur_ids)
}

fn assemble_window(b: WindowBuilder, cur_ids: &[u32]) -> Result<WindowMap, CodecError> {
    let nv = b.external.len();
    let nd = b.darts.len();
    let root_internal = cur_ids[0];
    if nd == 0 {
        debug_assert_eq!(nv, 1);
        return Ok(WindowMap {
            map: PlanarMap::empty(),
            tree: Vec::new(),
            cur: vec![0; cur_ids.len()],
            root_vertex: 0,
            has_external: b.external,
        });
    }
    let mut order: Vec<u32> = (0..nd as u32).collect();
    order.sort_unstable_by_key(|&d| (b.darts[d as usize].vertex, b.darts[d as usize].time));
    let mut next = vec![0; nd];
    let mut i = 0;
    let mut root = NONE;
    while i < nd {
        let v = b.darts[order[i] as usize].vertex;
        let mut j = i;
        while j < nd && b.darts[order[j] as usize].vertex == v {
            j += 1;
        }
        for k in i..j {
            next[order[k] as usize] = order[if k + 1 == j { i } else { k + 1 }];
        }
        if v == root_internal {
            let pick = (i..j).find(|&k| b.darts[order[k] as usize].time >= 1).unwrap_or(i);
            root = twin(order[pick]);
        }
        i = j;
    }
    let map = PlanarMap::from_next(next, Some(root))?;
    // Internal ids to map ids.
    let mut ext_map = vec![false; map.vertex_count()];
    let mut id = vec![NONE; nv];
    for d in 0..nd {
        id[b.darts[d].vertex as usize] = map.vertex(d as Dart);
    }
    for v in 0..nv {
        if id[v] == NONE {
            return Err(CodecError::Map(MapError::Disconnected));
        }
        ext_map[id[v] as usize] = b.external[v];
    }
    let cur = cur_ids.iter().map(|&c| id[c as usize]).collect::<Vec<_>>();
    Ok(WindowMap { root_vertex: cur[0], map, tree: b.tree, cur, has_external: ext_map })
}

/// Times `t_1 < ... < t_m` at which the horizontal coordinate first reaches
/// `−1, ..., −m`. The branch of the tree from the starting vertex towards
/// infinity passes through the contour vertices at these times, and the
/// `j`-th branch edge joins `cur(t_{j−1})` to its parent `cur(t_j)`.
pub fn tree_branch_to_infinity(steps: &[Step], m: usize, horizon: usize) -> Result<Vec<usize>, CodecError> {
    let mut times = Vec::with_capacity(m);
    let mut lev = 0i64;
    for (i, &s) in steps.iter().take(horizon).enumerate() {
        if times.len() == m {
            break;
        }
        lev += s.delta().0;
        if lev == -(times.len() as i64) - 1 {
            times.push(i + 1);
        }
    }
    if times.len() < m {
        return Err(CodecError::HorizonTooShort);
    }
    Ok(times)
}

/// Streaming variant of [`tree_branch_to_infinity`] that also records the steps it consumes.
pub fn branch_times_from_stream(
    stream: &mut impl Iterator<Item = Step>,
    m: usize,
    horizon: usize,
    record: &mut Vec<Step>,
) -> Result<Vec<usize>, CodecError> {
    let mut times = Vec::with_capacity(m);
    let mut lev = 0i64;
    while times.len() < m {
        if record.len() >= horizon {
            return Err(CodecError::HorizonTooShort);
        }
        let s = stream.next().ok_or(CodecError::HorizonTooShort)?;
        record.push(s);
        lev += s.delta().0;
        if lev == -(times.len() as i64) - 1 {
            times.push(record.len());
        }
    }
    Ok(times)
}
