//! Edge-based external DLA on a map, aimed at a vertex or at infinity.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::planar_map::{induced_subgraph, subset_diameter, Bfs, Edge, Graph, MapError, Vertex, NONE};
use crate::walk_engines::{
    far_source, harmonic_measure_exact, harmonic_measure_from_set, srw_last_slot, uniform_slot, FarSource,
    InfinityPolicy, MergedSource, WalkError, DENSE_LIMIT,
};

#[derive(Debug, Clone, PartialEq)]
pub enum DlaError {
    TargetAbsorbed { step: usize },
    TooLarge,
    Walk(WalkError),
}

impl fmt::Display for DlaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DlaError::TargetAbsorbed { step } => write!(f, "target absorbed at step {step}"),
            DlaError::TooLarge => f.write_str("instance too large for exact expansion"),
            DlaError::Walk(e) => write!(f, "{e}"),
        }
    }
}

impl From<WalkError> for DlaError {
    fn from(e: WalkError) -> Self {
        DlaError::Walk(e)
    }
}

impl From<MapError> for DlaError {
    fn from(e: MapError) -> Self {
        DlaError::Walk(WalkError::Map(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Vertex(Vertex),
    Infinity(InfinityPolicy),
}

/// A DLA cluster: a tree grown from `seed`, one edge per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlaCluster {
    pub seed: Vertex,
    /// Edges in order of addition.
    pub edges: Vec<Edge>,
    /// The seed followed by the new endpoint of each edge.
    pub vertices: Vec<Vertex>,
    in_cluster: Vec<bool>,
}

impl DlaCluster {
    pub fn new(g: &Graph, seed: Vertex) -> Self {
        let mut in_cluster = vec![false; g.vertex_count()];
        in_cluster[seed as usize] = true;
        DlaCluster { seed, edges: Vec::new(), vertices: vec![seed], in_cluster }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.in_cluster[v as usize]
    }

    pub fn membership(&self) -> &[bool] {
        &self.in_cluster
    }

    fn add(&mut self, e: Edge, new_vertex: Vertex) {
        debug_assert!(!self.in_cluster[new_vertex as usize]);
        self.in_cluster[new_vertex as usize] = true;
        self.edges.push(e);
        self.vertices.push(new_vertex);
    }

    /// `diam(X; M)`: largest graph distance in `g` between cluster vertices.
    pub fn diameter(&self, g: &Graph) -> Result<u32, MapError> {
        subset_diameter(g, &self.vertices)
    }
}

/// Per-run state for aiming at infinity on a window.
#[derive(Debug, Clone)]
pub struct InfinityContext<'a> {
    /// Vertices of the window with edges leaving it.
    pub outer: &'a [bool],
    /// Smallest margin seen so far across steps.
    pub min_margin: f64,
    /// Check the margin only when the cluster reaches this many edges.
    pub check_at: Option<usize>,
    bfs: Bfs,
    wired: Option<MergedSource>,
}

impl<'a> InfinityContext<'a> {
    pub fn new(outer: &'a [bool]) -> Self {
        InfinityContext { outer, min_margin: f64::INFINITY, check_at: None, bfs: Bfs::new(), wired: None }
    }
}

/// One DLA step aimed at a vertex: the new edge is the last edge crossed by a
/// walk from the target before it first hits the cluster. Exact solves are
/// used for small components, walk sampling otherwise.
pub fn dla_step_to_vertex<R: Rng + ?Sized>(
    g: &Graph,
    x: &mut DlaCluster,
    target: Vertex,
    rng: &mut R,
) -> Result<(), DlaError> {
    if x.contains(target) {
        return Err(DlaError::TargetAbsorbed { step: x.len() });
    }
    let (e, new_v) = if g.vertex_count() - x.vertices.len() < DENSE_LIMIT {
        let h = harmonic_measure_exact(g, x.membership(), target)?;
        let (e, a) = h.sample(rng);
        (e, other_end_of_edge(g, e, a))
    } else {
        // The last slot points into the cluster; its origin is the new vertex.
        let s = srw_last_slot(g, target, x.membership(), rng);
        (g.slot_edge(s), origin_of_slot(g, s))
    };
    x.add(e, new_v);
    if new_v == target {
        return Err(DlaError::TargetAbsorbed { step: x.len() });
    }
    Ok(())
}

fn origin_of_slot(g: &Graph, s: usize) -> Vertex {
    let off = g.offsets();
    (off.partition_point(|&o| o as usize <= s) - 1) as Vertex
}

fn other_end_of_edge(g: &Graph, e: Edge, a: Vertex) -> Vertex {
    for (j, &d) in g.darts_at(a).iter().enumerate() {
        if d >> 1 == e {
            return g.neighbors(a)[j];
        }
    }
    a
}

/// One DLA step aimed at infinity on a window graph. The walk source is
/// re-selected from the current cluster at every step, and the smallest
/// margin is tracked in `ctx`.
pub fn dla_step_to_infinity<R: Rng + ?Sized>(
    g: &Graph,
    x: &mut DlaCluster,
    policy: InfinityPolicy,
    ctx: &mut InfinityContext<'_>,
    rng: &mut R,
) -> Result<FarSource, DlaError> {
    let check = ctx.check_at.is_none_or(|k| x.len() + 1 >= k);
    let lenient = match policy {
        InfinityPolicy::FarVertex { .. } => InfinityPolicy::FarVertex { min_ratio: 0.0 },
        InfinityPolicy::WiredBoundary { .. } => InfinityPolicy::WiredBoundary { min_ratio: 0.0 },
    };
    let src = match policy {
        InfinityPolicy::WiredBoundary { .. } if !check => {
            // The wired source does not depend on the cluster; skip the diameter computation.
            if ctx.outer.iter().zip(x.membership()).any(|(&o, &c)| o && c) {
                return Err(WalkError::MarginTooSmall { margin: 0.0, required: policy.min_ratio() }.into());
            }
            FarSource { vertices: Vec::new(), distance: 0, margin: f64::INFINITY }
        }
        _ => far_source(g, &x.vertices, ctx.outer, if check { policy } else { lenient }, &mut ctx.bfs)?,
    };
    if check {
        ctx.min_margin = ctx.min_margin.min(src.margin);
    }
    let (e, new_v) = match policy {
        InfinityPolicy::FarVertex { .. } => {
            let from = src.vertices[0];
            if g.vertex_count() - x.vertices.len() < DENSE_LIMIT {
                let h = harmonic_measure_from_set(g, x.membership(), &src.vertices)?;
                let (e, a) = h.sample(rng);
                (e, other_end_of_edge(g, e, a))
            } else {
                let s = srw_last_slot(g, from, x.membership(), rng);
                (g.slot_edge(s), origin_of_slot(g, s))
            }
        }
        InfinityPolicy::WiredBoundary { .. } => {
            let wired = ctx.wired.get_or_insert_with(|| {
                let vs: Vec<Vertex> = (0..g.vertex_count() as u32).filter(|&v| ctx.outer[v as usize]).collect();
                MergedSource::new(g, &vs)
            });
            let s = wired.last_slot(g, x.membership(), rng);
            (g.slot_edge(s), origin_of_slot(g, s))
        }
    };
    x.add(e, new_v);
    Ok(src)
}

/// DLA aimed at infinity on a large map through a wired ball around the seed.
///
/// All vertices at distance at least `radius` from the seed are identified
/// into a single source. The radius follows the cluster: it is
/// `max(⌈ratio · reach⌉, reach + 1)`, where `reach` is the largest distance
/// from the seed to a cluster vertex, so the picture seen by the cluster is
/// the same at every scale.
#[derive(Debug, Clone)]
pub struct WiredBall {
    ratio: f64,
    dist: Vec<u32>,
    /// Vertices in order of distance from the seed.
    order: Vec<u32>,
    /// `level_start[r]` is the position in `order` of the first vertex at distance `r`.
    level_start: Vec<usize>,
    /// Radii up to this value only see vertices whose edges are all present.
    safe_radius: u32,
    radius: u32,
    reach: u32,
    /// Slots from sphere vertices to vertices strictly inside the ball.
    slots: Vec<u32>,
    slot_origin: Vec<u32>,
    /// 0 free, 1 cluster, 2 identified with the source.
    state: Vec<u8>,
    /// Walk steps spent so far.
    pub walk_steps: u64,
}

const FREE: u8 = 0;
const CLUSTER: u8 = 1;
const WIRED: u8 = 2;

impl WiredBall {
    /// `outer` flags vertices that may have edges missing from `g`.
    pub fn new(g: &Graph, seed: Vertex, outer: &[bool], ratio: f64) -> Result<Self, DlaError> {
        if !(ratio > 1.0) {
            return Err(WalkError::MarginTooSmall { margin: ratio, required: 1.0 }.into());
        }
        let mut bfs = Bfs::new();
        let maxd = bfs.run(g, &[seed]);
        let order = bfs.order().to_vec();
        let dist = core::mem::take(&mut bfs.dist);
        let mut level_start = vec![0usize; maxd as usize + 2];
        for &v in &order {
            level_start[dist[v as usize] as usize + 1] += 1;
        }
        for r in 1..level_start.len() {
            level_start[r] += level_start[r - 1];
        }
        let safe_radius = order
            .iter()
            .filter(|&&v| outer.get(v as usize).copied().unwrap_or(false))
            .map(|&v| dist[v as usize])
            .min()
            .unwrap_or(maxd + 1);
        let state = vec![WIRED; g.vertex_count()];
        let mut ball = WiredBall {
            ratio,
            dist,
            order,
            level_start,
            safe_radius,
            radius: 0,
            reach: 0,
            slots: Vec::new(),
            slot_origin: Vec::new(),
            state,
            walk_steps: 0,
        };
        ball.state[seed as usize] = CLUSTER;
        ball.set_radius(g)?;
        Ok(ball)
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn reach(&self) -> u32 {
        self.reach
    }

    /// Largest radius the map supports around the seed.
    pub fn safe_radius(&self) -> u32 {
        self.safe_radius
    }

    /// Distance from the seed, or `None` outside the seed's component.
    pub fn distance(&self, v: Vertex) -> Option<u32> {
        let d = self.dist[v as usize];
        (d != NONE).then_some(d)
    }

    /// `diam(X; M)` computed inside the ball of radius `2 · reach`, which
    /// holds every geodesic between cluster vertices. Exact as long as that
    /// radius does not exceed [`WiredBall::safe_radius`].
    pub fn cluster_diameter(&self, g: &Graph, x: &DlaCluster) -> Result<u32, MapError> {
        let r = (2 * self.reach as usize + 1).min(self.level_start.len() - 1);
        let (sub, id) = induced_subgraph(g, &self.order[..self.level_start[r]]);
        let set: Vec<u32> = x.vertices.iter().map(|&v| id[v as usize]).collect();
        subset_diameter(&sub, &set)
    }

    fn set_radius(&mut self, g: &Graph) -> Result<(), DlaError> {
        let wanted = libm::ceil(self.ratio * self.reach.max(1) as f64) as u32;
        let r = wanted.max(self.reach + 1);
        if r == self.radius {
            return Ok(());
        }
        if r > self.safe_radius || r as usize + 1 >= self.level_start.len() {
            let margin = self.safe_radius as f64 / self.reach.max(1) as f64;
            return Err(WalkError::MarginTooSmall { margin, required: self.ratio }.into());
        }
        let (lo, hi) = (self.level_start[self.radius as usize], self.level_start[r as usize]);
        for &v in &self.order[lo..hi] {
            if self.state[v as usize] == WIRED {
                self.state[v as usize] = FREE;
            }
        }
        self.radius = r;
        self.slots.clear();
        self.slot_origin.clear();
        let sphere = &self.order[self.level_start[r as usize]..self.level_start[r as usize + 1]];
        for &v in sphere {
            for s in g.slot_range(v) {
                if self.dist[g.slot_target(s) as usize] < r {
                    self.slots.push(s as u32);
                    self.slot_origin.push(v);
                }
            }
        }
        if self.slots.is_empty() {
            return Err(WalkError::NoExternalBoundary.into());
        }
        Ok(())
    }

    /// One DLA step: walks enter the ball through a uniform inward slot of the
    /// sphere and are restarted when they return to it.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, x: &mut DlaCluster, rng: &mut R) -> Result<(), DlaError> {
        let mut steps = 0u64;
        let (s, from) = 'outer: loop {
            let k = rng.random_range(0..self.slots.len());
            let (mut s, mut from) = (self.slots[k] as usize, self.slot_origin[k]);
            loop {
                let v = g.slot_target(s);
                steps += 1;
                match self.state[v as usize] {
                    CLUSTER => break 'outer (s, from),
                    WIRED => continue 'outer,
                    _ => {}
                }
                from = v;
                s = uniform_slot(g, v, rng);
            }
        };
        self.walk_steps += steps;
        let new_v = from;
        x.add(g.slot_edge(s), new_v);
        self.state[new_v as usize] = CLUSTER;
        let d = self.dist[new_v as usize];
        if d > self.reach {
            self.reach = d;
            self.set_radius(g)?;
        }
        Ok(())
    }
}

/// Runs `steps` DLA steps from `seed`.
pub fn dla_run<R: Rng + ?Sized>(
    g: &Graph,
    seed: Vertex,
    target: Target,
    outer: Option<&[bool]>,
    steps: usize,
    rng: &mut R,
) -> Result<DlaCluster, DlaError> {
    let mut x = DlaCluster::new(g, seed);
    match target {
        Target::Vertex(t) => {
            for _ in 0..steps {
                dla_step_to_vertex(g, &mut x, t, rng)?;
            }
        }
        Target::Infinity(policy) => {
            let none = vec![false; g.vertex_count()];
            let mut ctx = InfinityContext::new(outer.unwrap_or(&none));
            for _ in 0..steps {
                dla_step_to_infinity(g, &mut x, policy, &mut ctx, rng)?;
            }
        }
    }
    Ok(x)
}

/// Exact law of the cluster after `steps` steps aimed at `target`, keyed by
/// the sorted edge set. Runs in which the target is absorbed are dropped, so
/// the total mass is the probability that the target survives all steps.
pub fn dla_exact_distribution(
    g: &Graph,
    seed: Vertex,
    target: Vertex,
    steps: usize,
) -> Result<BTreeMap<Vec<Edge>, f64>, DlaError> {
    let mut out = BTreeMap::new();
    dla_exact_paths(g, seed, target, steps, &mut |path, p| {
        let mut key: Vec<Edge> = path.iter().map(|c| c.0).collect();
        key.sort_unstable();
        *out.entry(key).or_insert(0.0) += p;
    })?;
    Ok(out)
}

/// Enumerates every surviving ordered DLA history `(edge, new vertex)` of
/// length `steps` with its probability.
pub fn dla_exact_paths(
    g: &Graph,
    seed: Vertex,
    target: Vertex,
    steps: usize,
    visit: &mut dyn FnMut(&[(Edge, Vertex)], f64),
) -> Result<(), DlaError> {
    if g.edge_count() > 12 || steps > 4 {
        return Err(DlaError::TooLarge);
    }
    let mut in_cluster = vec![false; g.vertex_count()];
    in_cluster[seed as usize] = true;
    let mut path = Vec::new();
    expand(g, &mut in_cluster, target, steps, 1.0, &mut path, visit)?;
    Ok(())
}

fn expand(
    g: &Graph,
    in_cluster: &mut [bool],
    target: Vertex,
    left: usize,
    p: f64,
    path: &mut Vec<(Edge, Vertex)>,
    visit: &mut dyn FnMut(&[(Edge, Vertex)], f64),
) -> Result<(), DlaError> {
    if left == 0 {
        visit(path, p);
        return Ok(());
    }
    let h = harmonic_measure_exact(g, in_cluster, target)?;
    for ((e, a), &q) in h.candidates.iter().zip(&h.probabilities) {
        if q <= 0.0 {
            continue;
        }
        let v = other_end_of_edge(g, *e, *a);
        if v == target {
            continue;
        }
        in_cluster[v as usize] = true;
        path.push((*e, v));
        expand(g, in_cluster, target, left - 1, p * q, path, visit)?;
        path.pop();
        in_cluster[v as usize] = false;
    }
    Ok(())
}
