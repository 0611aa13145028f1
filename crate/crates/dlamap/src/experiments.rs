//! Experiment configuration, trial runners, fits and result files.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dlamap_core::dla_engine::{DlaCluster, WiredBall};
use dlamap_core::map_surgery::{sample_dla_cut, sample_lerw_cut, CutResult};
use dlamap_core::mated_crt::{ball_growth_series, build_graph, generate_walk_pair, PairKind};
use dlamap_core::mullin_codec::{
    contour_vertices, decode, decode_boundary, sample_boundary_excursion, sample_free_walk, sample_quadrant_excursion,
    tree_branch_to_infinity, window_from_truncated_streams,
};
use dlamap_core::planar_map::{ball_sizes, diameter, induced_subgraph, subset_diameter, Bfs, Graph};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::trial_rng;
use crate::stats::{fit_power_law, mean_and_stderr, two_sample_chi_square, ChiSquareTest, PowerLawFit, StatsError};
use crate::VERSION_STAMP;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{failed} of {total} trials failed (first error: {first})")]
    TooManyFailures { failed: usize, total: usize, first: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Diameter of a DLA cluster grown from infinity.
    DlaDiameter,
    /// Diameter of the first `m` edges of the tree branch to infinity.
    LerwDiameter,
    /// Internal diameter of the map of a walk window.
    Chi,
    /// Ball volume growth around the root.
    BallVolume,
    /// Diameter of a finite map with no boundary.
    FiniteDiameter,
    /// Diameter of a finite map with boundary length about the square root of its size.
    FiniteDiameterBoundary,
    /// Ball volume growth in a mated-CRT graph.
    McrtBallVolume,
    /// Chi-square comparison of the sampled DLA and LERW cut laws.
    CutLaw,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::DlaDiameter,
        Experiment::LerwDiameter,
        Experiment::Chi,
        Experiment::BallVolume,
        Experiment::FiniteDiameter,
        Experiment::FiniteDiameterBoundary,
        Experiment::McrtBallVolume,
        Experiment::CutLaw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DlaDiameter => "dla-diameter",
            Experiment::LerwDiameter => "lerw-diameter",
            Experiment::Chi => "chi",
            Experiment::BallVolume => "ball-volume",
            Experiment::FiniteDiameter => "finite-diameter",
            Experiment::FiniteDiameterBoundary => "finite-diameter-boundary",
            Experiment::McrtBallVolume => "mcrt-ball-volume",
            Experiment::CutLaw => "cut-law",
        }
    }

    pub fn from_name(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Experiment::DlaDiameter | Experiment::LerwDiameter => vec![32, 64, 128, 256, 512, 1024],
            Experiment::Chi => vec![1_000, 3_162, 10_000, 31_623, 100_000, 316_228, 1_000_000],
            Experiment::BallVolume => vec![8, 11, 16, 23, 32, 45, 64],
            Experiment::McrtBallVolume => vec![4, 6, 8, 11, 16, 23, 32],
            Experiment::FiniteDiameter | Experiment::FiniteDiameterBoundary => {
                vec![100, 316, 1_000, 3_162, 10_000, 31_623, 100_000]
            }
            Experiment::CutLaw => vec![20],
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Experiment::CutLaw => 100_000,
            _ => 32,
        }
    }

    /// Meaning depends on the experiment: host map size relative to `m²`
    /// (DLA, LERW) or `r⁴` (ball volumes), context steps per window step (χ).
    pub fn default_buffer_ratio(self) -> f64 {
        match self {
            Experiment::DlaDiameter | Experiment::LerwDiameter => 16.0,
            Experiment::Chi => 4.0,
            _ => 1.0,
        }
    }

    /// Acceptance band for the fitted slope and the band implied by the theory.
    pub fn bands(self) -> Option<(Band, Band)> {
        let b = |lo, hi| Band { lo, hi };
        match self {
            Experiment::DlaDiameter | Experiment::LerwDiameter => Some((b(0.45, 0.70), b(0.55051, 0.563315))),
            Experiment::Chi | Experiment::FiniteDiameter | Experiment::FiniteDiameterBoundary => {
                Some((b(0.22, 0.34), b(0.27532, 0.28165)))
            }
            Experiment::BallVolume | Experiment::McrtBallVolume => Some((b(3.0, 4.4), b(3.5504, 3.6330))),
            Experiment::CutLaw => None,
        }
    }
}

impl Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Smallest p-value accepted by the cut-law comparison.
pub const CUT_LAW_MIN_P: f64 = 1e-3;

/// Fraction of failed trials above which a run is aborted.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub buffer_ratio: f64,
    /// Wired-ball radius over cluster reach for DLA.
    pub harmonic_margin: f64,
    /// Walk steps per mated-CRT cell.
    pub steps_per_unit: usize,
    /// Number of cut edges for the cut-law comparison.
    pub cut_length: usize,
    /// Fraction of the smallest sizes left out of the fit.
    pub fit_discard: f64,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            sizes: experiment.default_sizes(),
            trials: experiment.default_trials(),
            seed: 42,
            buffer_ratio: experiment.default_buffer_ratio(),
            harmonic_margin: 2.0,
            steps_per_unit: 1,
            cut_length: 5,
            fit_discard: 0.25,
            threads: 1,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&s| s == 0) {
            return Err(config_err("sizes must be a nonempty list of positive integers"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("sizes must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if !(self.buffer_ratio > 0.0 && self.buffer_ratio.is_finite()) {
            return Err(config_err("buffer ratio must be positive"));
        }
        if !(self.harmonic_margin > 1.0 && self.harmonic_margin.is_finite()) {
            return Err(config_err("harmonic margin must exceed 1"));
        }
        if self.steps_per_unit == 0 || self.cut_length == 0 || self.threads == 0 {
            return Err(config_err("steps per unit, cut length and threads must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.fit_discard) {
            return Err(config_err("fit discard fraction must lie in [0, 1)"));
        }
        if self.experiment == Experiment::CutLaw {
            if self.sizes.len() != 1 {
                return Err(config_err("cut-law takes a single map size"));
            }
        } else if self.sizes.len() - self.discarded() < 3 {
            return Err(config_err("at least three sizes must remain after discarding the smallest"));
        }
        Ok(())
    }

    /// Number of smallest sizes excluded from the fit.
    pub fn discarded(&self) -> usize {
        (self.fit_discard * self.sizes.len() as f64).floor() as usize
    }

    /// `key=value` lines describing everything that determines the output.
    pub fn header_lines(&self) -> Vec<String> {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        vec![
            format!("experiment={}", self.experiment),
            format!("sizes={}", sizes.join(",")),
            format!("trials={}", self.trials),
            format!("seed={}", self.seed),
            format!("buffer-ratio={}", self.buffer_ratio),
            format!("harmonic-margin={}", self.harmonic_margin),
            format!("steps-per-unit={}", self.steps_per_unit),
            format!("cut-length={}", self.cut_length),
            format!("fit-discard={}", self.fit_discard),
            format!("version={VERSION_STAMP}"),
        ]
    }
}

/// Parses a size list: `32,64,128`, or a geometric progression written as
/// `32,64,...,1024` whose ratio is taken from the first two terms.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, HarnessError> {
    let toks: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let num = |t: &str| -> Result<usize, HarnessError> {
        let v: f64 = t.parse().map_err(|_| config_err(format!("bad size `{t}`")))?;
        if v < 1.0 || v.fract() != 0.0 || v > usize::MAX as f64 {
            return Err(config_err(format!("bad size `{t}`")));
        }
        Ok(v as usize)
    };
    match toks.iter().position(|&t| t == "...") {
        None => toks.iter().map(|t| num(t)).collect(),
        Some(i) => {
            if i < 2 || i + 2 != toks.len() {
                return Err(config_err("use `a,b,...,c` for a geometric size grid"));
            }
            let mut out: Vec<usize> = toks[..i].iter().map(|t| num(t)).collect::<Result<_, _>>()?;
            let ratio = out[i - 1] as f64 / out[i - 2] as f64;
            let last = num(toks[i + 1])?;
            if ratio <= 1.0 || out[i - 1] > last {
                return Err(config_err("geometric size grid must increase towards its last term"));
            }
            let mut x = out[i - 1] as f64;
            loop {
                x *= ratio;
                let v = x.round() as usize;
                if v >= last {
                    break;
                }
                out.push(v);
            }
            out.push(last);
            Ok(out)
        }
    }
}

/// Settings collected from a config file and command-line flags; later
/// sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    pub sizes: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub buffer_ratio: Option<f64>,
    pub harmonic_margin: Option<f64>,
    pub steps_per_unit: Option<usize>,
    pub cut_length: Option<usize>,
    pub fit_discard: Option<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    /// Flat `key=value` text; keys match the long flag names, `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self, HarnessError> {
        fn val<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, HarnessError> {
            v.parse().map_err(|_| config_err(format!("bad value `{v}` for `{k}`")))
        }
        let mut c = PartialConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim().replace('_', "-"), v.trim());
            match k.as_str() {
                "experiment" => {
                    c.experiment =
                        Some(Experiment::from_name(v).ok_or_else(|| config_err(format!("unknown experiment `{v}`")))?)
                }
                "sizes" => c.sizes = Some(parse_sizes(v)?),
                "trials" => c.trials = Some(val(&k, v)?),
                "seed" => c.seed = Some(val(&k, v)?),
                "buffer-ratio" => c.buffer_ratio = Some(val(&k, v)?),
                "harmonic-margin" => c.harmonic_margin = Some(val(&k, v)?),
                "steps-per-unit" => c.steps_per_unit = Some(val(&k, v)?),
                "cut-length" => c.cut_length = Some(val(&k, v)?),
                "fit-discard" => c.fit_discard = Some(val(&k, v)?),
                "threads" => c.threads = Some(val(&k, v)?),
                "out" => c.out = Some(PathBuf::from(v)),
                _ => return Err(config_err(format!("line {}: unknown key `{k}`", i + 1))),
            }
        }
        Ok(c)
    }

    pub fn merge(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            experiment: over.experiment.or(self.experiment),
            sizes: over.sizes.or(self.sizes),
            trials: over.trials.or(self.trials),
            seed: over.seed.or(self.seed),
            buffer_ratio: over.buffer_ratio.or(self.buffer_ratio),
            harmonic_margin: over.harmonic_margin.or(self.harmonic_margin),
            steps_per_unit: over.steps_per_unit.or(self.steps_per_unit),
            cut_length: over.cut_length.or(self.cut_length),
            fit_discard: over.fit_discard.or(self.fit_discard),
            threads: over.threads.or(self.threads),
            out: over.out.or(self.out),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig, HarnessError> {
        let exp = self.experiment.ok_or_else(|| config_err("no experiment given"))?;
        let d = ExperimentConfig::new(exp);
        let cfg = ExperimentConfig {
            experiment: exp,
            sizes: self.sizes.unwrap_or(d.sizes),
            trials: self.trials.unwrap_or(d.trials),
            seed: self.seed.unwrap_or(d.seed),
            buffer_ratio: self.buffer_ratio.unwrap_or(d.buffer_ratio),
            harmonic_margin: self.harmonic_margin.unwrap_or(d.harmonic_margin),
            steps_per_unit: self.steps_per_unit.unwrap_or(d.steps_per_unit),
            cut_length: self.cut_length.unwrap_or(d.cut_length),
            fit_discard: self.fit_discard.unwrap_or(d.fit_discard),
            threads: self.threads.unwrap_or(d.threads),
            out: self.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn msg<E: Display>(e: E) -> String {
    e.to_string()
}

/// Diameter of `set` in `g`, computed inside the ball around `center` of
/// twice the largest distance from `center` to the set. That ball contains
/// every geodesic between set vertices.
fn local_subset_diameter(g: &Graph, bfs: &Bfs, set: &[u32]) -> Result<u32, String> {
    let reach = set.iter().map(|&v| bfs.dist[v as usize]).max().ok_or("empty set")?;
    let order = bfs.order();
    let end = order.partition_point(|&v| bfs.dist[v as usize] <= 2 * reach);
    let (sub, id) = induced_subgraph(g, &order[..end]);
    let local: Vec<u32> = set.iter().map(|&v| id[v as usize]).collect();
    subset_diameter(&sub, &local).map_err(msg)
}

fn host_edges(cfg: &ExperimentConfig, scale: f64) -> usize {
    (cfg.buffer_ratio * scale).ceil().max(1.0) as usize
}

fn dla_trial<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Vec<f64>, String> {
    let m_max = *cfg.sizes.last().ok_or("no sizes")?;
    let w = sample_quadrant_excursion(host_edges(cfg, (m_max * m_max) as f64), rng);
    let dm = decode(&w).map_err(msg)?;
    drop(w);
    let g = dm.map.to_graph();
    let seed = dm.map.root_vertex();
    drop(dm);
    let outer = vec![false; g.vertex_count()];
    let mut ball = WiredBall::new(&g, seed, &outer, cfg.harmonic_margin).map_err(msg)?;
    let mut x = DlaCluster::new(&g, seed);
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for &m in &cfg.sizes {
        while x.len() < m {
            ball.step(&g, &mut x, rng).map_err(msg)?;
        }
        out.push(ball.cluster_diameter(&g, &x).map_err(msg)? as f64);
    }
    Ok(out)
}

fn lerw_trial<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Vec<f64>, String> {
    let m_max = *cfg.sizes.last().ok_or("no sizes")?;
    let w = sample_quadrant_excursion(host_edges(cfg, (m_max * m_max) as f64), rng);
    let dm = decode(&w).map_err(msg)?;
    let cur = contour_vertices(&dm, &w.steps);
    let g = dm.map.to_graph();
    drop(dm);
    let mut level = Vec::with_capacity(w.len() + 1);
    let mut h = 0i64;
    level.push(0);
    for s in &w.steps {
        h += s.delta().0;
        level.push(h);
    }
    if level.iter().all(|&l| l < m_max as i64) {
        return Err(format!("host tree has height below {m_max}"));
    }
    let t = loop {
        let t = rng.random_range(0..w.len());
        if level[t] >= m_max as i64 {
            break t;
        }
    };
    let times = tree_branch_to_infinity(&w.steps[t..], m_max, w.len() - t).map_err(msg)?;
    let mut bfs = Bfs::new();
    bfs.run(&g, &[cur[t]]);
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for &m in &cfg.sizes {
        let mut set = vec![cur[t]];
        set.extend(times[..m].iter().map(|&s| cur[t + s]));
        out.push(local_subset_diameter(&g, &bfs, &set)? as f64);
    }
    Ok(out)
}

fn chi_trial<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Vec<f64>, String> {
    let n_max = *cfg.sizes.last().ok_or("no sizes")?;
    let ctx = |n: usize| (cfg.buffer_ratio * n as f64).ceil() as usize;
    let start = ctx(n_max);
    let w = sample_free_walk(start + n_max + ctx(n_max), rng);
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let c = ctx(n);
        let wm = window_from_truncated_streams(
            &w.steps[start..start + n],
            w.steps[start - c..start].iter().rev().copied(),
            w.steps[start + n..start + n + c].iter().copied(),
        )
        .map_err(msg)?;
        out.push(diameter(&wm.map.to_graph()).map_err(msg)? as f64);
    }
    Ok(out)
}

fn ball_trial<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Vec<f64>, String> {
    let r_max = *cfg.sizes.last().ok_or("no sizes")?;
    let w = sample_quadrant_excursion(host_edges(cfg, (r_max as f64).powi(4)), rng);
    let dm = decode(&w).map_err(msg)?;
    let balls = ball_sizes(&dm.map.to_graph(), dm.map.root_vertex(), r_max as u32);
    Ok(cfg.sizes.iter().map(|&r| balls[r.min(balls.len() - 1)] as f64).collect())
}

/// Boundary length used for a finite map with `n` edges.
pub fn boundary_length(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).min(n.saturating_sub(1))
}

fn finite_trial<R: Rng>(cfg: &ExperimentConfig, boundary: bool, rng: &mut R) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let map = if boundary && n > 1 {
            let w = sample_boundary_excursion(n - 1, boundary_length(n), rng);
            decode_boundary(&w).map_err(msg)?.decorated.map
        } else {
            decode(&sample_quadrant_excursion(n, rng)).map_err(msg)?.map
        };
        out.push(diameter(&map.to_graph()).map_err(msg)? as f64);
    }
    Ok(out)
}

fn mcrt_trial<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Vec<f64>, String> {
    let r_max = *cfg.sizes.last().ok_or("no sizes")?;
    let cells = host_edges(cfg, (r_max as f64).powi(4));
    let s = cfg.steps_per_unit;
    let pair = generate_walk_pair(PairKind::Free, cells * s, s, 1, rng).map_err(msg)?;
    let g = build_graph(&pair, s).map_err(msg)?;
    let series = ball_growth_series(&g, (cells / 2) as u32, r_max as u32);
    Ok(cfg.sizes.iter().map(|&r| series[r.min(series.len() - 1)].1 as f64).collect())
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<f64>, String> {
    let mut rng = trial_rng(cfg.seed, trial as u64);
    match cfg.experiment {
        Experiment::DlaDiameter => dla_trial(cfg, &mut rng),
        Experiment::LerwDiameter => lerw_trial(cfg, &mut rng),
        Experiment::Chi => chi_trial(cfg, &mut rng),
        Experiment::BallVolume => ball_trial(cfg, &mut rng),
        Experiment::FiniteDiameter => finite_trial(cfg, false, &mut rng),
        Experiment::FiniteDiameterBoundary => finite_trial(cfg, true, &mut rng),
        Experiment::McrtBallVolume => mcrt_trial(cfg, &mut rng),
        Experiment::CutLaw => Err("cut-law has no size trials".into()),
    }
}

/// Category of a cut map: vertex count, degrees of the tip and target
/// copies, and their graph distance.
pub type CutFeature = (u32, u32, u32, u32);

pub fn cut_feature(cut: &CutResult) -> Result<CutFeature, String> {
    let bm = &cut.boundary_map;
    let (w, tip) = match bm.marked.as_slice() {
        [w, tip] => (*w, *tip),
        _ => return Err("cut map must mark the target and the tip".into()),
    };
    let g = bm.map.to_graph();
    let mut bfs = Bfs::new();
    bfs.run(&g, &[tip]);
    Ok((bm.map.vertex_count() as u32, g.degree(tip) as u32, g.degree(w) as u32, bfs.dist[w as usize]))
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeMean {
    pub size: usize,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fit: PowerLawFit,
    pub discarded_sizes: Vec<usize>,
    pub band: Band,
    pub target: Band,
    pub in_band: bool,
    pub in_target: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutLawReport {
    pub n: usize,
    pub m: usize,
    pub samples_per_side: usize,
    pub test: ChiSquareTest,
    pub min_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub completed_trials: usize,
    pub failed_trials: usize,
    pub errors: Vec<String>,
    pub means: Vec<SizeMean>,
    pub fit: Option<FitReport>,
    pub cut_law: Option<CutLawReport>,
    pub passed: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `(size, trial, value)` rows in trial order.
    pub rows: Vec<(usize, usize, f64)>,
    /// Per-sample cut categories for the cut-law experiment.
    pub cut_rows: Vec<(&'static str, usize, CutFeature)>,
    pub summary: Summary,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, HarnessError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn check_failures(failed: usize, total: usize, errors: &[String]) -> Result<(), HarnessError> {
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        let first = errors.first().cloned().unwrap_or_default();
        return Err(HarnessError::TooManyFailures { failed, total, first });
    }
    Ok(())
}

fn run_cut_law(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let (n, m) = (cfg.sizes[0], cfg.cut_length);
    let sample = |i: usize| -> Result<(CutFeature, CutFeature), String> {
        let a = sample_lerw_cut(n, m, &mut trial_rng(cfg.seed, 2 * i as u64)).map_err(msg)?;
        let b = sample_dla_cut(n, m, &mut trial_rng(cfg.seed, 2 * i as u64 + 1)).map_err(msg)?;
        Ok((cut_feature(&a)?, cut_feature(&b)?))
    };
    let results: Vec<_> = pool(cfg.threads)?.install(|| (0..cfg.trials).into_par_iter().map(sample).collect());
    let errors: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    check_failures(errors.len(), cfg.trials, &errors)?;
    let mut counts: BTreeMap<CutFeature, [u64; 2]> = BTreeMap::new();
    let mut cut_rows = Vec::new();
    for (i, r) in results.iter().enumerate() {
        if let Ok((a, b)) = r {
            counts.entry(*a).or_default()[0] += 1;
            counts.entry(*b).or_default()[1] += 1;
            cut_rows.push(("lerw", i, *a));
            cut_rows.push(("dla", i, *b));
        }
    }
    let (a, b): (Vec<u64>, Vec<u64>) = counts.values().map(|c| (c[0], c[1])).unzip();
    let test = two_sample_chi_square(&a, &b)?;
    let passed = test.p_value > CUT_LAW_MIN_P;
    let summary = Summary {
        version: VERSION_STAMP,
        config: cfg.clone(),
        completed_trials: cfg.trials - errors.len(),
        failed_trials: errors.len(),
        errors: errors.into_iter().take(5).collect(),
        means: Vec::new(),
        fit: None,
        cut_law: Some(CutLawReport { n, m, samples_per_side: cfg.trials, test, min_p: CUT_LAW_MIN_P }),
        passed,
    };
    Ok(RunOutput { rows: Vec::new(), cut_rows, summary })
}

/// Runs an experiment and, when `cfg.out` is set, writes its result files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let output = if cfg.experiment == Experiment::CutLaw { run_cut_law(cfg)? } else { run_sizes(cfg)? };
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &output)?;
    }
    Ok(output)
}

fn run_sizes(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let results: Vec<Result<Vec<f64>, String>> =
        pool(cfg.threads)?.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect());
    let errors: Vec<String> =
        results.iter().enumerate().filter_map(|(t, r)| r.as_ref().err().map(|e| format!("trial {t}: {e}"))).collect();
    check_failures(errors.len(), cfg.trials, &errors)?;
    let mut rows = Vec::new();
    for (i, &size) in cfg.sizes.iter().enumerate() {
        for (t, r) in results.iter().enumerate() {
            if let Ok(v) = r {
                rows.push((size, t, v[i]));
            }
        }
    }
    let means: Vec<SizeMean> = cfg
        .sizes
        .iter()
        .map(|&size| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.0 == size).map(|r| r.2).collect();
            let (mean, stderr) = mean_and_stderr(&vals);
            SizeMean { size, trials: vals.len(), mean, stderr }
        })
        .collect();
    let k = cfg.discarded();
    let points: Vec<(f64, f64)> = means[k..].iter().map(|m| (m.size as f64, m.mean)).collect();
    let fit = fit_power_law(&points)?;
    let (band, target) = cfg.experiment.bands().ok_or_else(|| config_err("experiment has no bands"))?;
    let report = FitReport {
        fit,
        discarded_sizes: cfg.sizes[..k].to_vec(),
        band,
        target,
        in_band: band.contains(fit.slope),
        in_target: target.contains(fit.slope),
    };
    let summary = Summary {
        version: VERSION_STAMP,
        config: cfg.clone(),
        completed_trials: cfg.trials - errors.len(),
        failed_trials: errors.len(),
        errors: errors.into_iter().take(5).collect(),
        means,
        passed: report.in_band,
        fit: Some(report),
        cut_law: None,
    };
    Ok(RunOutput { rows, cut_rows: Vec::new(), summary })
}

/// Paths of the files written for an experiment into `dir`.
pub fn output_paths(dir: &Path, e: Experiment) -> [PathBuf; 4] {
    let name = e.name();
    [
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}-fit.csv")),
        dir.join(format!("{name}-means.csv")),
        dir.join(format!("{name}-summary.json")),
    ]
}

fn header(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut h = Vec::new();
    for l in cfg.header_lines() {
        let _ = writeln!(h, "# {l}");
    }
    h
}

pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let cfg = &out.summary.config;
    let [data, fit_path, means_path, summary_path] = output_paths(dir, cfg.experiment);

    let mut w = csv::Writer::from_writer(header(cfg));
    if cfg.experiment == Experiment::CutLaw {
        w.write_record(["side", "trial", "vertices", "tip_degree", "target_degree", "distance"])?;
        for (side, t, f) in &out.cut_rows {
            w.write_record([side.to_string(), t.to_string(), f.0.to_string(), f.1.to_string(), f.2.to_string(), f.3.to_string()])?;
        }
    } else {
        w.write_record(["size", "trial", "value"])?;
        for (s, t, v) in &out.rows {
            w.write_record([s.to_string(), t.to_string(), v.to_string()])?;
        }
    }
    fs::write(data, w.into_inner().map_err(|e| e.into_error())?)?;

    let mut w = csv::Writer::from_writer(header(cfg));
    if let Some(f) = &out.summary.fit {
        w.write_record([
            "slope", "intercept", "stderr_slope", "r_squared", "x_min", "x_max", "points", "band_lo", "band_hi",
            "target_lo", "target_hi", "in_band", "in_target",
        ])?;
        let p = &f.fit;
        w.write_record([
            p.slope.to_string(),
            p.intercept.to_string(),
            p.stderr_slope.to_string(),
            p.r_squared.to_string(),
            p.range.0.to_string(),
            p.range.1.to_string(),
            p.points.to_string(),
            f.band.lo.to_string(),
            f.band.hi.to_string(),
            f.target.lo.to_string(),
            f.target.hi.to_string(),
            f.in_band.to_string(),
            f.in_target.to_string(),
        ])?;
    } else if let Some(c) = &out.summary.cut_law {
        w.write_record(["n", "m", "samples_per_side", "statistic", "dof", "p_value", "categories", "min_p"])?;
        w.write_record([
            c.n.to_string(),
            c.m.to_string(),
            c.samples_per_side.to_string(),
            c.test.statistic.to_string(),
            c.test.dof.to_string(),
            c.test.p_value.to_string(),
            c.test.categories.to_string(),
            c.min_p.to_string(),
        ])?;
    }
    fs::write(fit_path, w.into_inner().map_err(|e| e.into_error())?)?;

    let mut w = csv::Writer::from_writer(header(cfg));
    w.write_record(["size", "trials", "mean", "stderr"])?;
    for m in &out.summary.means {
        w.write_record([m.size.to_string(), m.trials.to_string(), m.mean.to_string(), m.stderr.to_string()])?;
    }
    fs::write(means_path, w.into_inner().map_err(|e| e.into_error())?)?;

    fs::write(summary_path, serde_json::to_string_pretty(&out.summary)? + "\n")?;
    Ok(())
}
