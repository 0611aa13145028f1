//! Text formats for maps, walks, mated-CRT graphs and DLA traces.
//!
//! A map record is
//!
//! ```text
//! MAP <dart_count> <root_dart | ->
//! <d> <next(d)> <twin(d)>        one line per dart
//! TREE <edge ids>                optional
//! EXTFACE <face id>              optional, faces numbered by lowest dart
//! MARK <vertex ids>              optional
//! ```
//!
//! Darts may use any fixed-point-free twin involution. The parser pairs
//! twins as `2e, 2e + 1` in order of first appearance, and trailers refer to
//! that numbering; for files written here the renumbering is the identity.

use std::fmt::Write as _;
use std::io::Write;

use dlamap_core::mated_crt::MatedCrtGraph;
use dlamap_core::mullin_codec::{LatticeWalk, Step, WalkKind};
use dlamap_core::planar_map::{BoundaryMap, Dart, MapError, PlanarMap, Vertex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid map: {0}")]
    Map(MapError),
    #[error("invalid walk: {0}")]
    Walk(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<MapError> for FormatError {
    fn from(e: MapError) -> Self {
        FormatError::Map(e)
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// A parsed map record with its optional trailers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapRecord {
    pub map: PlanarMap,
    /// Per-edge tree flags.
    pub tree: Option<Vec<bool>>,
    pub external_face: Option<u32>,
    pub marks: Vec<Vertex>,
}

impl MapRecord {
    pub fn plain(map: PlanarMap) -> Self {
        MapRecord { map, tree: None, external_face: None, marks: Vec::new() }
    }

    pub fn from_boundary(bm: &BoundaryMap, tree: Option<Vec<bool>>) -> Self {
        let face = bm.map.face_ids()[bm.external_dart as usize];
        MapRecord { map: bm.map.clone(), tree, external_face: Some(face), marks: bm.marked.clone() }
    }

    /// The boundary map described by `EXTFACE` and `MARK`, rooted on the
    /// lowest dart of the external face.
    pub fn boundary_map(&self) -> Result<BoundaryMap, FormatError> {
        let face = self.external_face.ok_or_else(|| syntax(0, "record has no EXTFACE trailer"))?;
        let ids = self.map.face_ids();
        let dart = ids.iter().position(|&f| f == face).ok_or(MapError::BadFace)?;
        Ok(BoundaryMap::new(self.map.clone(), dart as Dart, self.marks.clone())?)
    }
}

pub fn write_map(rec: &MapRecord) -> String {
    let map = &rec.map;
    let mut s = String::new();
    let root = map.root_dart().map_or("-".to_string(), |r| r.to_string());
    let _ = writeln!(s, "MAP {} {}", map.dart_count(), root);
    for d in 0..map.dart_count() as Dart {
        let _ = writeln!(s, "{} {} {}", d, map.next(d), map.twin(d));
    }
    if let Some(tree) = &rec.tree {
        s.push_str("TREE");
        for (e, _) in tree.iter().enumerate().filter(|x| *x.1) {
            let _ = write!(s, " {e}");
        }
        s.push('\n');
    }
    if let Some(f) = rec.external_face {
        let _ = writeln!(s, "EXTFACE {f}");
    }
    if !rec.marks.is_empty() {
        s.push_str("MARK");
        for v in &rec.marks {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

fn numbers(line: usize, fields: &[&str]) -> Result<Vec<u32>, FormatError> {
    fields.iter().map(|f| f.parse::<u32>().map_err(|_| syntax(line, format!("bad integer `{f}`")))).collect()
}

/// Parses one map record; blank lines and lines starting with `#` are skipped.
pub fn parse_map(text: &str) -> Result<MapRecord, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 || h[0] != "MAP" {
        return Err(syntax(ln, "expected `MAP <dart_count> <root_dart>`"));
    }
    let n: usize = h[1].parse().map_err(|_| syntax(ln, "bad dart count"))?;
    let root = match h[2] {
        "-" => None,
        r => Some(r.parse::<Dart>().map_err(|_| syntax(ln, "bad root dart"))?),
    };
    let mut next = vec![u32::MAX; n];
    let mut twin = vec![u32::MAX; n];
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| syntax(0, "truncated dart table"))?;
        let f = numbers(ln, &l.split_whitespace().collect::<Vec<_>>())?;
        if f.len() != 3 || f[0] as usize >= n || next[f[0] as usize] != u32::MAX {
            return Err(syntax(ln, "expected a new `d next twin` line"));
        }
        next[f[0] as usize] = f[1];
        twin[f[0] as usize] = f[2];
    }
    let map = PlanarMap::from_permutations(&next, &twin, root)?;
    let mut rec = MapRecord::plain(map);
    for (ln, l) in lines {
        let mut f = l.split_whitespace();
        let key = f.next().unwrap_or_default();
        let vals = numbers(ln, &f.collect::<Vec<_>>())?;
        match key {
            "TREE" => {
                let mut tree = vec![false; rec.map.edge_count()];
                for e in vals {
                    *tree.get_mut(e as usize).ok_or_else(|| syntax(ln, "tree edge out of range"))? = true;
                }
                rec.tree = Some(tree);
            }
            "EXTFACE" => {
                if vals.len() != 1 || vals[0] as usize >= rec.map.face_count() {
                    return Err(syntax(ln, "bad EXTFACE"));
                }
                rec.external_face = Some(vals[0]);
            }
            "MARK" => {
                if vals.iter().any(|&v| v as usize >= rec.map.vertex_count()) {
                    return Err(syntax(ln, "marked vertex out of range"));
                }
                rec.marks = vals;
            }
            _ => return Err(syntax(ln, format!("unknown trailer `{key}`"))),
        }
    }
    Ok(rec)
}

fn kind_token(kind: WalkKind) -> String {
    match kind {
        WalkKind::Free => "free".into(),
        WalkKind::QuadrantExcursion => "excursion".into(),
        WalkKind::QuadrantMeander => "meander".into(),
        WalkKind::BoundaryExcursion(l) => format!("boundary:{l}"),
    }
}

fn parse_kind(tok: &str) -> Option<WalkKind> {
    match tok {
        "free" => Some(WalkKind::Free),
        "excursion" => Some(WalkKind::QuadrantExcursion),
        "meander" => Some(WalkKind::QuadrantMeander),
        _ => tok.strip_prefix("boundary:")?.parse().ok().map(WalkKind::BoundaryExcursion),
    }
}

/// `WALK <kind> <length>` followed by the steps on one line.
pub fn write_walk(w: &LatticeWalk) -> String {
    format!("WALK {} {}\n{}\n", kind_token(w.kind), w.len(), w.to_string_steps())
}

pub fn parse_walk(text: &str) -> Result<LatticeWalk, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 || h[0] != "WALK" {
        return Err(syntax(ln, "expected `WALK <kind> <length>`"));
    }
    let kind = parse_kind(h[1]).ok_or_else(|| syntax(ln, format!("unknown walk kind `{}`", h[1])))?;
    let len: usize = h[2].parse().map_err(|_| syntax(ln, "bad length"))?;
    let mut steps = Vec::with_capacity(len);
    for (ln, l) in lines {
        for c in l.chars() {
            steps.push(Step::from_char(c).ok_or_else(|| syntax(ln, format!("bad step `{c}`")))?);
        }
    }
    if steps.len() != len {
        return Err(FormatError::Walk(format!("header says {len} steps, found {}", steps.len())));
    }
    LatticeWalk::new(steps, kind).map_err(|e| FormatError::Walk(e.to_string()))
}

/// `MCRT <n> <cell_size>`, one `u v` line per edge, then `LOWER` and `UPPER` trailers.
pub fn write_mcrt(g: &MatedCrtGraph, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "MCRT {} {}", g.n, g.cell_size)?;
    for &(a, b) in &g.edges {
        writeln!(out, "{a} {b}")?;
    }
    for (key, set) in [("LOWER", &g.lower_boundary), ("UPPER", &g.upper_boundary)] {
        write!(out, "{key}")?;
        for v in set {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn parse_mcrt(text: &str) -> Result<MatedCrtGraph, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| syntax(0, "empty input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 || h[0] != "MCRT" {
        return Err(syntax(ln, "expected `MCRT <n> <cell_size>`"));
    }
    let n: usize = h[1].parse().map_err(|_| syntax(ln, "bad cell count"))?;
    let cell_size: usize = h[2].parse().map_err(|_| syntax(ln, "bad cell size"))?;
    let mut g = MatedCrtGraph { n, cell_size, edges: Vec::new(), lower_boundary: Vec::new(), upper_boundary: Vec::new() };
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        match f[0] {
            "LOWER" => g.lower_boundary = numbers(ln, &f[1..])?,
            "UPPER" => g.upper_boundary = numbers(ln, &f[1..])?,
            _ => {
                let v = numbers(ln, &f)?;
                if v.len() != 2 || v[0] >= v[1] || v[1] as usize >= n {
                    return Err(syntax(ln, "expected an edge `u v` with u < v < n"));
                }
                g.edges.push((v[0], v[1]));
            }
        }
    }
    Ok(g)
}

/// One row of a DLA run trace.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Cluster endpoint of the added edge.
    pub from: Vertex,
    /// Newly added vertex.
    pub to: Vertex,
    pub diameter: u32,
    pub elapsed_ms: f64,
}

pub fn write_trace(rows: &[TraceRow], out: impl Write) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
