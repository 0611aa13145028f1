//! Discrete one-sided mated-CRT maps built from a pair of integer walks.
//!
//! Cell `i` (0-based) covers the closed time range `[i·s, (i+1)·s]`, so
//! neighbouring cells share an endpoint. Two cells are adjacent when some
//! times `s₁ ≤ s₂` in them have `L(s₁) = L(s₂) = min L on [s₁, s₂]`, or the
//! same for `R`; equal values count as attaining the minimum.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::mullin_codec::LatticeWalk;
use crate::planar_map::{ball_sizes, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Free,
    QuadrantConditioned,
    /// Coordinates of a lattice walk with one coordinate moving per step.
    Lattice,
    /// Output of a transform such as negation or the Pitman map.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatedCrtError {
    BadLength,
    RejectionBudgetExceeded { attempts: usize },
}

impl fmt::Display for MatedCrtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatedCrtError::BadLength => f.write_str("walk length is not a positive multiple of the cell size"),
            MatedCrtError::RejectionBudgetExceeded { attempts } => {
                write!(f, "no quadrant path after {attempts} attempts")
            }
        }
    }
}

/// Partial sums `L(0..=N)`, `R(0..=N)` of a pair of walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPair {
    pub l: Vec<i64>,
    pub r: Vec<i64>,
    /// Walk steps per unit of continuum time.
    pub steps_per_unit: usize,
    pub kind: PairKind,
}

impl WalkPair {
    pub fn new(l: Vec<i64>, r: Vec<i64>, steps_per_unit: usize, kind: PairKind) -> Result<Self, MatedCrtError> {
        if l.len() != r.len() || l.is_empty() || steps_per_unit == 0 {
            return Err(MatedCrtError::BadLength);
        }
        Ok(WalkPair { l, r, steps_per_unit, kind })
    }

    pub fn from_lattice_walk(w: &LatticeWalk) -> Self {
        let mut l = Vec::with_capacity(w.len() + 1);
        let mut r = Vec::with_capacity(w.len() + 1);
        let (mut x, mut y) = (0i64, 0i64);
        l.push(0);
        r.push(0);
        for s in &w.steps {
            let (dx, dy) = s.delta();
            x += dx;
            y += dy;
            l.push(x);
            r.push(y);
        }
        WalkPair { l, r, steps_per_unit: 1, kind: PairKind::Lattice }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.l.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn negated(&self) -> Self {
        let neg = |v: &[i64]| v.iter().map(|x| -x).collect();
        WalkPair { l: neg(&self.l), r: neg(&self.r), kind: PairKind::Derived, ..*self }
    }

    /// `(2S − L, 2S − R)` with `S` the running maximum of each coordinate.
    pub fn pitman(&self) -> Self {
        fn transform(v: &[i64]) -> Vec<i64> {
            let mut top = i64::MIN;
            v.iter()
                .map(|&x| {
                    top = top.max(x);
                    2 * top - x
                })
                .collect()
        }
        WalkPair { l: transform(&self.l), r: transform(&self.r), kind: PairKind::Derived, ..*self }
    }

    pub fn reversed(&self) -> Self {
        let rev = |v: &[i64]| v.iter().rev().copied().collect();
        WalkPair { l: rev(&self.l), r: rev(&self.r), kind: PairKind::Derived, ..*self }
    }

    fn cells(&self, s: usize) -> Result<usize, MatedCrtError> {
        let n = self.len();
        if s == 0 || n == 0 || n % s != 0 {
            return Err(MatedCrtError::BadLength);
        }
        Ok(n / s)
    }
}

/// Adjacency structure on cells `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatedCrtGraph {
    pub n: usize,
    pub cell_size: usize,
    /// Sorted pairs `(a, b)` with `a < b`, without repetition.
    pub edges: Vec<(u32, u32)>,
    pub lower_boundary: Vec<u32>,
    pub upper_boundary: Vec<u32>,
}

impl MatedCrtGraph {
    pub fn to_graph(&self) -> Graph {
        Graph::from_edges(self.n, &self.edges)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }
}

/// Cells containing time `t`: one, or two at a shared endpoint.
#[inline]
fn cells_of(t: usize, s: usize, n: usize) -> (u32, u32) {
    let lo = if t == 0 { 0 } else { (t - 1) / s };
    let hi = (t / s).min(n - 1);
    (lo as u32, hi as u32)
}

/// Emits cell pairs for one coordinate with a stack of level groups: each
/// group holds the cells of all times at its level since the walk was last
/// strictly below it.
fn coordinate_pairs(v: &[i64], s: usize, n: usize, out: &mut Vec<(u32, u32)>) {
    let mut levels: Vec<(i64, usize)> = Vec::new();
    let mut cells: Vec<u32> = Vec::new();
    for (t, &x) in v.iter().enumerate() {
        while levels.last().is_some_and(|&(y, _)| y > x) {
            let (_, start) = levels.pop().unwrap_or((0, 0));
            cells.truncate(start);
        }
        let (lo, hi) = cells_of(t, s, n);
        match levels.last() {
            Some(&(y, start)) if y == x => {
                for &c in &cells[start..] {
                    if c < lo {
                        out.push((c, lo));
                    }
                    if c < hi {
                        out.push((c, hi));
                    }
                }
            }
            _ => levels.push((x, cells.len())),
        }
        for c in [lo, hi] {
            if cells.last() != Some(&c) || cells.len() == levels.last().map_or(0, |g| g.1) {
                cells.push(c);
            }
        }
    }
}

/// Builds the mated-CRT graph of `w` with `s` steps per cell.
pub fn build_graph(w: &WalkPair, s: usize) -> Result<MatedCrtGraph, MatedCrtError> {
    let n = w.cells(s)?;
    let mut edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    coordinate_pairs(&w.l, s, n, &mut edges);
    coordinate_pairs(&w.r, s, n, &mut edges);
    edges.sort_unstable();
    edges.dedup();
    let (lower_boundary, upper_boundary) = boundary_sets(w, s, 0..n)?;
    Ok(MatedCrtGraph { n, cell_size: s, edges, lower_boundary, upper_boundary })
}

/// Lower and upper boundary of the cells in `range`: cells containing a time
/// at which `L` or `R` attains its running minimum from the left end of the
/// range (lower), or from the right end backwards (upper).
pub fn boundary_sets(
    w: &WalkPair,
    s: usize,
    range: core::ops::Range<usize>,
) -> Result<(Vec<u32>, Vec<u32>), MatedCrtError> {
    let n = w.cells(s)?;
    if range.start >= range.end || range.end > n {
        return Err(MatedCrtError::BadLength);
    }
    let (t0, t1) = (range.start * s, range.end * s);
    let mut lower = vec![false; n];
    let mut upper = vec![false; n];
    let (mut ml, mut mr) = (i64::MAX, i64::MAX);
    for t in t0..=t1 {
        ml = ml.min(w.l[t]);
        mr = mr.min(w.r[t]);
        if w.l[t] == ml || w.r[t] == mr {
            mark(&mut lower, t, s, n, &range);
        }
    }
    let (mut ml, mut mr) = (i64::MAX, i64::MAX);
    for t in (t0..=t1).rev() {
        ml = ml.min(w.l[t]);
        mr = mr.min(w.r[t]);
        if w.l[t] == ml || w.r[t] == mr {
            mark(&mut upper, t, s, n, &range);
        }
    }
    let collect = |f: &[bool]| (0..n as u32).filter(|&i| f[i as usize]).collect();
    Ok((collect(&lower), collect(&upper)))
}

fn mark(flags: &mut [bool], t: usize, s: usize, n: usize, range: &core::ops::Range<usize>) {
    let (lo, hi) = cells_of(t, s, n);
    for c in [lo, hi] {
        if range.contains(&(c as usize)) {
            flags[c as usize] = true;
        }
    }
}

/// Whether the Pitman transform of `w` and the negation of `w` give the same
/// adjacency. For walks with increments in `{-1, 0, 1}` this always holds.
pub fn pitman_graph_identity_check(w: &WalkPair, s: usize) -> Result<bool, MatedCrtError> {
    Ok(build_graph(&w.pitman(), s)?.edges == build_graph(&w.negated(), s)?.edges)
}

fn srw_path<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<i64> {
    let mut v = Vec::with_capacity(len + 1);
    let mut x = 0i64;
    v.push(0);
    for _ in 0..len {
        x += if rng.random::<bool>() { 1 } else { -1 };
        v.push(x);
    }
    v
}

fn nonnegative_path<R: Rng + ?Sized>(len: usize, budget: usize, rng: &mut R) -> Result<Vec<i64>, MatedCrtError> {
    for _ in 0..budget {
        let v = srw_path(len, rng);
        if v.iter().all(|&x| x >= 0) {
            return Ok(v);
        }
    }
    Err(MatedCrtError::RejectionBudgetExceeded { attempts: budget })
}

/// Two independent simple random walks of `len` steps. The quadrant-conditioned
/// kind rejects each coordinate separately until it stays nonnegative, which
/// gives the same law as rejecting the pair since the coordinates are independent.
pub fn generate_walk_pair<R: Rng + ?Sized>(
    kind: PairKind,
    len: usize,
    steps_per_unit: usize,
    budget: usize,
    rng: &mut R,
) -> Result<WalkPair, MatedCrtError> {
    if len == 0 || steps_per_unit == 0 {
        return Err(MatedCrtError::BadLength);
    }
    let (l, r) = match kind {
        PairKind::QuadrantConditioned => (nonnegative_path(len, budget, rng)?, nonnegative_path(len, budget, rng)?),
        _ => (srw_path(len, rng), srw_path(len, rng)),
    };
    let kind = if kind == PairKind::QuadrantConditioned { kind } else { PairKind::Free };
    WalkPair::new(l, r, steps_per_unit, kind)
}

/// `(r, #B_r)` for `r = 0..=r_max`: cumulative BFS ball sizes around `center`.
pub fn ball_growth_series(g: &MatedCrtGraph, center: u32, r_max: u32) -> Vec<(u32, u64)> {
    ball_sizes(&g.to_graph(), center, r_max).into_iter().enumerate().map(|(r, b)| (r as u32, b)).collect()
}
