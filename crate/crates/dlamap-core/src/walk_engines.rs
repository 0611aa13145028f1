//! Simple random walk, harmonic measure, Wilson's algorithm and loop-erased walks.
//!
//! Everything here runs on the CSR [`Graph`]; a walk step picks a uniform
//! dart at the current vertex, so loops and multiple edges carry their
//! multiplicity.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::planar_map::{subset_diameter, Bfs, Edge, Graph, MapError, Vertex, NONE};

/// Below this many unknowns the harmonic system is solved densely.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum WalkError {
    Singular,
    SourceInCluster,
    EmptyCluster,
    MarginTooSmall { margin: f64, required: f64 },
    NoExternalBoundary,
    Map(MapError),
}

impl fmt::Display for WalkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkError::Singular => f.write_str("harmonic system is singular"),
            WalkError::SourceInCluster => f.write_str("walk source lies in the cluster"),
            WalkError::EmptyCluster => f.write_str("cluster is empty"),
            WalkError::MarginTooSmall { margin, required } => {
                write!(f, "far-target margin {margin:.3} below required {required:.3}")
            }
            WalkError::NoExternalBoundary => f.write_str("window has no vertex with external edges"),
            WalkError::Map(e) => write!(f, "map error: {e}"),
        }
    }
}

impl From<MapError> for WalkError {
    fn from(e: MapError) -> Self {
        WalkError::Map(e)
    }
}

#[inline]
pub(crate) fn uniform_slot<R: Rng + ?Sized>(g: &Graph, v: u32, rng: &mut R) -> usize {
    let r = g.slot_range(v);
    r.start + rng.random_range(0..r.len())
}

/// Simple random walk from `start` until it first enters a vertex flagged in
/// `target`. Returns the traversed darts (empty when `start` is a target).
pub fn srw_until_hit<R: Rng + ?Sized>(g: &Graph, start: Vertex, target: &[bool], rng: &mut R) -> Vec<u32> {
    let mut path = Vec::new();
    let mut v = start;
    while !target[v as usize] {
        let s = uniform_slot(g, v, rng);
        path.push(g.slot_dart(s));
        v = g.slot_target(s);
    }
    path
}

/// The last slot crossed by a walk from `start` before entering `target`.
/// `start` must not be a target.
pub fn srw_last_slot<R: Rng + ?Sized>(g: &Graph, start: Vertex, target: &[bool], rng: &mut R) -> usize {
    let mut v = start;
    loop {
        let s = uniform_slot(g, v, rng);
        let w = g.slot_target(s);
        if target[w as usize] {
            return s;
        }
        v = w;
    }
}

/// Hitting distribution of a cluster, indexed by boundary edge.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDistribution {
    /// Edges with exactly one endpoint in the cluster, with that endpoint.
    pub candidates: Vec<(Edge, Vertex)>,
    pub probabilities: Vec<f64>,
}

impl HarmonicDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn probability_of(&self, e: Edge) -> f64 {
        self.candidates.iter().zip(&self.probabilities).filter(|(c, _)| c.0 == e).map(|(_, p)| *p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Edge, Vertex) {
        let mut u = rng.random::<f64>() * self.total();
        for (c, &p) in self.candidates.iter().zip(&self.probabilities) {
            u -= p;
            if u < 0.0 {
                return *c;
            }
        }
        let i = self.probabilities.iter().rposition(|&p| p > 0.0).expect("positive mass");
        self.candidates[i]
    }
}

/// Exact harmonic measure on `cluster` seen from `from`.
pub fn harmonic_measure_exact(g: &Graph, in_cluster: &[bool], from: Vertex) -> Result<HarmonicDistribution, WalkError> {
    harmonic_measure_from_set(g, in_cluster, &[from])
}

/// Exact harmonic measure seen from a set of vertices that are identified
/// into one source vertex (a single vertex when `sources.len() == 1`).
///
/// With `L` the Laplacian of the source's component of the complement, the
/// expected number of visits to `x` is `(L⁻¹)[s, x] · deg(x)`, so every dart
/// `x → a` into the cluster is crossed last with probability `g(x)` where
/// `L g = e_s`.
pub fn harmonic_measure_from_set(
    g: &Graph,
    in_cluster: &[bool],
    sources: &[Vertex],
) -> Result<HarmonicDistribution, WalkError> {
    harmonic_measure_with_solver(g, in_cluster, sources, Solver::Auto)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Dense below [`DENSE_LIMIT`] unknowns, conjugate gradient above.
    Auto,
    Dense,
    ConjugateGradient,
}

/// [`harmonic_measure_from_set`] with an explicit choice of linear solver.
pub fn harmonic_measure_with_solver(
    g: &Graph,
    in_cluster: &[bool],
    sources: &[Vertex],
    solver: Solver,
) -> Result<HarmonicDistribution, WalkError> {
    if sources.is_empty() {
        return Err(WalkError::SourceInCluster);
    }
    if sources.iter().any(|&s| in_cluster[s as usize]) {
        return Err(WalkError::SourceInCluster);
    }
    let n = g.vertex_count();
    // Unknowns: vertices reachable from the sources without entering the cluster.
    let mut idx = vec![NONE; n];
    let mut order: Vec<u32> = Vec::new();
    for &s in sources {
        if idx[s as usize] == NONE {
            idx[s as usize] = 0;
            order.push(s);
        }
    }
    let mut next_idx = 1u32;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &w in g.neighbors(v) {
            if !in_cluster[w as usize] && idx[w as usize] == NONE {
                idx[w as usize] = next_idx;
                next_idx += 1;
                order.push(w);
            }
        }
    }
    let k = next_idx as usize;
    let mut diag = vec![0.0f64; k];
    let mut touches = false;
    for &v in &order {
        let i = idx[v as usize];
        for &w in g.neighbors(v) {
            if in_cluster[w as usize] {
                diag[i as usize] += 1.0;
                touches = true;
            } else if idx[w as usize] != i {
                diag[i as usize] += 1.0;
            }
        }
    }
    if !touches {
        return Err(WalkError::Singular);
    }
    let mut rhs = vec![0.0; k];
    rhs[0] = 1.0;
    let dense = match solver {
        Solver::Auto => k < DENSE_LIMIT,
        Solver::Dense => true,
        Solver::ConjugateGradient => false,
    };
    let sol = if dense {
        let mut a = vec![0.0f64; k * k];
        for i in 0..k {
            a[i * k + i] = diag[i];
        }
        for &v in &order {
            let i = idx[v as usize] as usize;
            for &w in g.neighbors(v) {
                if !in_cluster[w as usize] {
                    let j = idx[w as usize] as usize;
                    if j != i {
                        a[i * k + j] -= 1.0;
                    }
                }
            }
        }
        dense_solve(&mut a, &mut rhs, k)?
    } else {
        let matvec = |x: &[f64], y: &mut [f64]| {
            for (yi, (xi, di)) in y.iter_mut().zip(x.iter().zip(&diag)) {
                *yi = di * xi;
            }
            for &v in &order {
                let i = idx[v as usize] as usize;
                for &w in g.neighbors(v) {
                    if !in_cluster[w as usize] {
                        let j = idx[w as usize] as usize;
                        if j != i {
                            y[i] -= x[j];
                        }
                    }
                }
            }
        };
        conjugate_gradient(matvec, &diag, &rhs, 1e-12, 20 * k + 1000)?
    };
    let mut candidates = Vec::new();
    let mut probabilities = Vec::new();
    for v in 0..n as u32 {
        if in_cluster[v as usize] {
            continue;
        }
        for (j, &w) in g.neighbors(v).iter().enumerate() {
            if in_cluster[w as usize] {
                let e = g.darts_at(v)[j] >> 1;
                candidates.push((e, w));
                let i = idx[v as usize];
                probabilities.push(if i == NONE { 0.0 } else { sol[i as usize].max(0.0) });
            }
        }
    }
    Ok(HarmonicDistribution { candidates, probabilities })
}

/// Gaussian elimination with partial pivoting on a row-major `k × k` matrix.
pub fn dense_solve(a: &mut [f64], b: &mut [f64], k: usize) -> Result<Vec<f64>, WalkError> {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col].abs() <= 1e-13 * scale {
            return Err(WalkError::Singular);
        }
        if piv != col {
            for c in 0..k {
                a.swap(col * k + c, piv * k + c);
            }
            b.swap(col, piv);
        }
        let p = a[col * k + col];
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = b[r];
        for c in r + 1..k {
            s -= a[r * k + c] * x[c];
        }
        x[r] = s / a[r * k + r];
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradient for a symmetric positive definite operator.
pub fn conjugate_gradient(
    matvec: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, WalkError> {
    let k = b.len();
    let mut x = vec![0.0; k];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; k];
    let bb: f64 = b.iter().map(|v| v * v).sum();
    let tol2 = rel_tol * rel_tol * bb;
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let rr: f64 = r.iter().map(|v| v * v).sum();
        if rr <= tol2 {
            return Ok(x);
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(WalkError::Singular);
        }
        let alpha = rz / pap;
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..k {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..k {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(WalkError::Singular)
}

/// How the far end of a window stands in for the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfinityPolicy {
    /// Walk from a vertex at maximal graph distance from the cluster (lowest id on ties).
    FarVertex { min_ratio: f64 },
    /// Walk from the window's outer vertices identified into one vertex.
    WiredBoundary { min_ratio: f64 },
}

impl InfinityPolicy {
    pub fn min_ratio(&self) -> f64 {
        match *self {
            InfinityPolicy::FarVertex { min_ratio } | InfinityPolicy::WiredBoundary { min_ratio } => min_ratio,
        }
    }
}

impl Default for InfinityPolicy {
    fn default() -> Self {
        InfinityPolicy::FarVertex { min_ratio: 10.0 }
    }
}

/// Where walks from "infinity" start, with the distance margin it provides.
#[derive(Debug, Clone, PartialEq)]
pub struct FarSource {
    /// Vertices identified into the source (one vertex for `FarVertex`).
    pub vertices: Vec<Vertex>,
    /// Graph distance from the cluster to the source.
    pub distance: u32,
    /// `distance / max(1, cluster diameter)`.
    pub margin: f64,
}

/// Resolves a policy into a concrete walk source on a window graph.
/// `outer` flags vertices with edges leaving the window.
pub fn far_source(
    g: &Graph,
    cluster: &[Vertex],
    outer: &[bool],
    policy: InfinityPolicy,
    bfs: &mut Bfs,
) -> Result<FarSource, WalkError> {
    if cluster.is_empty() {
        return Err(WalkError::EmptyCluster);
    }
    let diam = subset_diameter(g, cluster)?;
    bfs.run(g, cluster);
    let (vertices, distance) = match policy {
        InfinityPolicy::FarVertex { .. } => {
            let mut best = (0u32, NONE);
            for (v, &d) in bfs.dist.iter().enumerate() {
                if d != NONE && (d > best.0 || best.1 == NONE) {
                    best = (d, v as u32);
                }
            }
            (vec![best.1], best.0)
        }
        InfinityPolicy::WiredBoundary { .. } => {
            let vs: Vec<Vertex> = (0..g.vertex_count() as u32).filter(|&v| outer[v as usize]).collect();
            if vs.is_empty() {
                return Err(WalkError::NoExternalBoundary);
            }
            let d = vs.iter().map(|&v| bfs.dist[v as usize]).min().unwrap_or(0);
            (vs, d)
        }
    };
    let margin = distance as f64 / (diam.max(1) as f64);
    if margin < policy.min_ratio() || distance == 0 {
        return Err(WalkError::MarginTooSmall { margin, required: policy.min_ratio() });
    }
    Ok(FarSource { vertices, distance, margin })
}

/// Harmonic measure from infinity on a window: exact harmonic measure from the policy's source.
pub fn harmonic_measure_from_infinity(
    g: &Graph,
    in_cluster: &[bool],
    outer: &[bool],
    policy: InfinityPolicy,
) -> Result<(HarmonicDistribution, FarSource), WalkError> {
    let cluster: Vec<Vertex> = (0..g.vertex_count() as u32).filter(|&v| in_cluster[v as usize]).collect();
    let mut bfs = Bfs::new();
    let src = far_source(g, &cluster, outer, policy, &mut bfs)?;
    let h = harmonic_measure_from_set(g, in_cluster, &src.vertices)?;
    Ok((h, src))
}

/// A sampler for walks started from a set of identified vertices: at the
/// merged vertex a uniform dart among all darts of the set is taken.
#[derive(Debug, Clone)]
pub struct MergedSource {
    slots: Vec<u32>,
    member: Vec<bool>,
}

impl MergedSource {
    pub fn new(g: &Graph, vertices: &[Vertex]) -> Self {
        let mut member = vec![false; g.vertex_count()];
        let mut slots = Vec::new();
        for &v in vertices {
            if !member[v as usize] {
                member[v as usize] = true;
                slots.extend(g.slot_range(v).map(|s| s as u32));
            }
        }
        MergedSource { slots, member }
    }

    /// Last slot crossed before entering the cluster, for a walk from the merged source.
    pub fn last_slot<R: Rng + ?Sized>(&self, g: &Graph, in_cluster: &[bool], rng: &mut R) -> usize {
        loop {
            let s = self.slots[rng.random_range(0..self.slots.len())] as usize;
            let mut w = g.slot_target(s);
            if in_cluster[w as usize] {
                return s;
            }
            // Ordinary walk until it enters the cluster or comes back to the source.
            loop {
                if self.member[w as usize] {
                    break;
                }
                let s = uniform_slot(g, w, rng);
                let x = g.slot_target(s);
                if in_cluster[x as usize] {
                    return s;
                }
                w = x;
            }
        }
    }
}

/// Uniform spanning tree by Wilson's algorithm; returns per-edge tree flags.
pub fn wilson_ust<R: Rng + ?Sized>(g: &Graph, root: Vertex, rng: &mut R) -> Vec<bool> {
    let n = g.vertex_count();
    let mut in_tree = vec![false; n];
    let mut succ = vec![usize::MAX; n];
    let mut tree = vec![false; g.edge_count()];
    in_tree[root as usize] = true;
    for start in 0..n as u32 {
        let mut v = start;
        while !in_tree[v as usize] {
            let s = uniform_slot(g, v, rng);
            succ[v as usize] = s;
            v = g.slot_target(s);
        }
        let mut v = start;
        while !in_tree[v as usize] {
            in_tree[v as usize] = true;
            let s = succ[v as usize];
            tree[g.slot_edge(s) as usize] = true;
            v = g.slot_target(s);
        }
    }
    tree
}

/// Chronological loop erasure of a dart path starting at `start`.
pub fn loop_erase(g_heads: impl Fn(u32) -> Vertex, start: Vertex, darts: &[u32], n: usize) -> Vec<u32> {
    let mut pos = vec![NONE; n];
    let mut verts: Vec<Vertex> = vec![start];
    let mut out: Vec<u32> = Vec::new();
    pos[start as usize] = 0;
    for &d in darts {
        let h = g_heads(d);
        let p = pos[h as usize];
        if p != NONE {
            for &v in &verts[p as usize + 1..] {
                pos[v as usize] = NONE;
            }
            verts.truncate(p as usize + 1);
            out.truncate(p as usize);
        } else {
            pos[h as usize] = verts.len() as u32;
            verts.push(h);
            out.push(d);
        }
    }
    out
}

/// Loop-erased random walk from `u` to the target set: loop erasure of a simple random walk.
/// Returns the darts of the path in order from `u`.
pub fn lerw<R: Rng + ?Sized>(g: &Graph, u: Vertex, target: &[bool], rng: &mut R) -> Vec<u32> {
    let n = g.vertex_count();
    let mut pos = vec![NONE; n];
    let mut verts: Vec<Vertex> = vec![u];
    let mut out: Vec<u32> = Vec::new();
    pos[u as usize] = 0;
    let mut v = u;
    while !target[v as usize] {
        let s = uniform_slot(g, v, rng);
        let h = g.slot_target(s);
        let p = pos[h as usize];
        if p != NONE {
            for &x in &verts[p as usize + 1..] {
                pos[x as usize] = NONE;
            }
            verts.truncate(p as usize + 1);
            out.truncate(p as usize);
        } else {
            pos[h as usize] = verts.len() as u32;
            verts.push(h);
            out.push(g.slot_dart(s));
        }
        v = h;
    }
    out
}

/// Distribution of the next LERW step from the tip of `path_vertices`
/// towards `w`: harmonic measure from `w` on the path, restricted to edges at
/// the tip and normalised. Entries are `(edge, far endpoint, probability)`.
pub fn lerw_step_distribution(
    g: &Graph,
    path_vertices: &[Vertex],
    w: Vertex,
) -> Result<Vec<(Edge, Vertex, f64)>, WalkError> {
    let tip = *path_vertices.last().ok_or(WalkError::EmptyCluster)?;
    let mut in_path = vec![false; g.vertex_count()];
    for &v in path_vertices {
        in_path[v as usize] = true;
    }
    let h = harmonic_measure_exact(g, &in_path, w)?;
    let mut out = Vec::new();
    let mut total = 0.0;
    for ((e, a), &p) in h.candidates.iter().zip(&h.probabilities) {
        if *a == tip && p > 0.0 {
            let far = other_end(g, *e, tip);
            out.push((*e, far, p));
            total += p;
        }
    }
    if !(total > 0.0) {
        return Err(WalkError::Singular);
    }
    for x in &mut out {
        x.2 /= total;
    }
    Ok(out)
}

fn other_end(g: &Graph, e: Edge, v: Vertex) -> Vertex {
    for (j, &d) in g.darts_at(v).iter().enumerate() {
        if d >> 1 == e {
            return g.neighbors(v)[j];
        }
    }
    v
}

/// LERW from `u` to `w` grown one edge at a time by harmonic measure from `w`.
pub fn lerw_harmonic<R: Rng + ?Sized>(g: &Graph, u: Vertex, w: Vertex, rng: &mut R) -> Result<Vec<Edge>, WalkError> {
    let mut verts = vec![u];
    let mut edges = Vec::new();
    while *verts.last().expect("nonempty") != w {
        let dist = lerw_step_distribution(g, &verts, w)?;
        let mut x = rng.random::<f64>();
        let mut pick = dist[dist.len() - 1];
        for &c in &dist {
            x -= c.2;
            if x < 0.0 {
                pick = c;
                break;
            }
        }
        edges.push(pick.0);
        verts.push(pick.1);
    }
    Ok(edges)
}
