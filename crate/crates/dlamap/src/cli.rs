//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlamap_core::dla_engine::{DlaCluster, WiredBall};
use dlamap_core::mated_crt::{build_graph, generate_walk_pair, PairKind};
use dlamap_core::mullin_codec::{decode, decode_boundary, sample_boundary_excursion, sample_quadrant_excursion};

use crate::experiments::{output_paths, parse_sizes, run_experiment, Experiment, HarnessError, PartialConfig};
use crate::formats::{write_map, write_mcrt, write_trace, write_walk, MapRecord, TraceRow};
use crate::rng::trial_rng;
use crate::verify::run_exact_suite;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BAND_VIOLATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

type CmdResult = Result<(), String>;

#[derive(Debug, Parser)]
#[command(name = "dlamap", version, about = "Random planar maps, DLA and LERW on them, and exponent estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write CSV, fit and JSON summary files.
    Run(RunArgs),
    /// Run the exact verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "exact")]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Sample a uniform spanning-tree-decorated map and print it as a MAP record.
    SampleMap {
        /// Number of edges.
        #[arg(long)]
        edges: usize,
        /// Boundary length parameter of the walk; the map then has a simple boundary.
        #[arg(long)]
        boundary: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write the encoding walk to this file.
        #[arg(long)]
        walk: Option<PathBuf>,
    },
    /// Grow a DLA cluster from infinity and write a per-step trace CSV.
    TraceDla {
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 16.0)]
        buffer_ratio: f64,
        #[arg(long, default_value_t = 2.0)]
        harmonic_margin: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a mated-CRT graph from a random walk pair and export it.
    ExportMcrt {
        #[arg(long)]
        cells: usize,
        #[arg(long, default_value_t = 1)]
        steps_per_unit: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Exact,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Comma-separated sizes, or `a,b,...,c` for a geometric grid.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Trials per size (samples per side for cut-law).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; trial `i` uses stream `i` of a ChaCha8 generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Host size over m² (DLA, LERW) or r⁴ (ball volumes), context steps per window step (chi).
    #[arg(long)]
    pub buffer_ratio: Option<f64>,
    /// Radius of the wired sphere relative to the cluster reach.
    #[arg(long)]
    pub harmonic_margin: Option<f64>,
    /// Walk steps per mated-CRT cell.
    #[arg(long)]
    pub steps_per_unit: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Cut length m of the cut-law experiment.
    #[arg(long)]
    pub cut_length: Option<usize>,
    /// Fraction of the smallest sizes left out of the fit.
    #[arg(long)]
    pub fit_discard: Option<f64>,
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    fn to_partial(&self) -> Result<PartialConfig, HarnessError> {
        Ok(PartialConfig {
            experiment: self.experiment,
            sizes: self.sizes.as_deref().map(parse_sizes).transpose()?,
            trials: self.trials,
            seed: self.seed,
            buffer_ratio: self.buffer_ratio,
            harmonic_margin: self.harmonic_margin,
            steps_per_unit: self.steps_per_unit,
            cut_length: self.cut_length,
            fit_discard: self.fit_discard,
            threads: self.threads,
            out: self.out.clone(),
        })
    }
}

fn exit_for(e: &HarnessError) -> i32 {
    eprintln!("error: {e}");
    match e {
        HarnessError::Config(_) => EXIT_USAGE,
        _ => EXIT_ERROR,
    }
}

fn cmd_run(args: &RunArgs) -> i32 {
    let file = match &args.config {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => PartialConfig::from_kv(&t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return EXIT_USAGE;
            }
        },
        None => Ok(PartialConfig::default()),
    };
    let cfg = match file.and_then(|f| Ok(f.merge(args.to_partial()?))).and_then(PartialConfig::resolve) {
        Ok(c) => c,
        Err(e) => return exit_for(&e),
    };
    let out = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => return exit_for(&e),
    };
    let s = &out.summary;
    println!("experiment {}: {} trials completed, {} failed", cfg.experiment, s.completed_trials, s.failed_trials);
    if let Some(f) = &s.fit {
        println!(
            "slope {:.4} ± {:.4} (r² {:.4}); band [{}, {}] {}; target [{}, {}] {}",
            f.fit.slope,
            f.fit.stderr_slope,
            f.fit.r_squared,
            f.band.lo,
            f.band.hi,
            if f.in_band { "inside" } else { "outside" },
            f.target.lo,
            f.target.hi,
            if f.in_target { "inside" } else { "outside" },
        );
    }
    if let Some(c) = &s.cut_law {
        println!("chi-square {:.2} on {} dof, p = {:.4}", c.test.statistic, c.test.dof, c.test.p_value);
    }
    if let Some(dir) = &cfg.out {
        println!("wrote {}", output_paths(dir, cfg.experiment)[0].display());
    }
    if s.passed {
        EXIT_PASS
    } else {
        EXIT_BAND_VIOLATION
    }
}

fn cmd_verify(seed: u64) -> i32 {
    let mut ok = true;
    for c in run_exact_suite(seed) {
        println!("{} {:<20} {:>8.2}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
        ok &= c.passed;
    }
    if ok {
        EXIT_PASS
    } else {
        EXIT_ERROR
    }
}

fn cmd_sample_map(edges: usize, boundary: Option<usize>, seed: u64, walk: Option<&PathBuf>) -> CmdResult {
    let mut rng = trial_rng(seed, 0);
    let (w, rec) = match boundary {
        Some(l) => {
            if edges == 0 || l > edges - 1 {
                return Err("boundary parameter must be at most edges - 1".into());
            }
            let w = sample_boundary_excursion(edges - 1, l, &mut rng);
            let bd = decode_boundary(&w).map_err(|e| e.to_string())?;
            let rec = MapRecord::from_boundary(&bd.boundary, Some(bd.decorated.tree.clone()));
            (w, rec)
        }
        None => {
            let w = sample_quadrant_excursion(edges, &mut rng);
            let dm = decode(&w).map_err(|e| e.to_string())?;
            let rec = MapRecord { tree: Some(dm.tree.clone()), ..MapRecord::plain(dm.map) };
            (w, rec)
        }
    };
    if let Some(p) = walk {
        fs::write(p, write_walk(&w)).map_err(|e| e.to_string())?;
    }
    print!("{}", write_map(&rec));
    Ok(())
}

fn cmd_trace_dla(steps: usize, buffer_ratio: f64, margin: f64, seed: u64, out: &PathBuf) -> CmdResult {
    let mut rng = trial_rng(seed, 0);
    let n = (buffer_ratio * (steps * steps) as f64).ceil().max(1.0) as usize;
    let dm = decode(&sample_quadrant_excursion(n, &mut rng)).map_err(|e| e.to_string())?;
    let g = dm.map.to_graph();
    let seed_v = dm.map.root_vertex();
    let outer = vec![false; g.vertex_count()];
    let mut ball = WiredBall::new(&g, seed_v, &outer, margin).map_err(|e| e.to_string())?;
    let mut x = DlaCluster::new(&g, seed_v);
    let start = Instant::now();
    let mut rows = Vec::with_capacity(steps);
    for step in 1..=steps {
        ball.step(&g, &mut x, &mut rng).map_err(|e| e.to_string())?;
        let e = x.edges[step - 1];
        let to = x.vertices[step];
        let (a, b) = (dm.map.vertex(2 * e), dm.map.vertex(2 * e + 1));
        rows.push(TraceRow {
            step,
            from: if a == to { b } else { a },
            to,
            diameter: ball.cluster_diameter(&g, &x).map_err(|e| e.to_string())?,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let f = fs::File::create(out).map_err(|e| e.to_string())?;
    write_trace(&rows, f).map_err(|e| e.to_string())
}

fn cmd_export_mcrt(cells: usize, s: usize, seed: u64, out: &PathBuf) -> CmdResult {
    let mut rng = trial_rng(seed, 0);
    let pair = generate_walk_pair(PairKind::Free, cells * s, s, 1, &mut rng).map_err(|e| e.to_string())?;
    let g = build_graph(&pair, s).map_err(|e| e.to_string())?;
    let mut f = std::io::BufWriter::new(fs::File::create(out).map_err(|e| e.to_string())?);
    write_mcrt(&g, &mut f).map_err(|e| e.to_string())
}

fn report(r: CmdResult) -> i32 {
    match r {
        Ok(()) => EXIT_PASS,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Parses `argv` (including the program name) and runs the command,
/// returning the process exit code.
pub fn cli_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { suite: Suite::Exact, seed } => cmd_verify(*seed),
        Command::SampleMap { edges, boundary, seed, walk } => {
            report(cmd_sample_map(*edges, *boundary, *seed, walk.as_ref()))
        }
        Command::TraceDla { steps, buffer_ratio, harmonic_margin, seed, out } => {
            report(cmd_trace_dla(*steps, *buffer_ratio, *harmonic_margin, *seed, out))
        }
        Command::ExportMcrt { cells, steps_per_unit, seed, out } => {
            if *cells == 0 || *steps_per_unit == 0 {
                eprintln!("error: cells and steps per unit must be positive");
                return EXIT_USAGE;
            }
            report(cmd_export_mcrt(*cells, *steps_per_unit, *seed, out))
        }
    }
}
