//! `treecap`: capacities, equilibrium measures and tilings of rooted trees.
//!
//! Exit status: 0 on success, 1 when `verify` finds a non-equilibrium
//! measure, 2 when the input cannot be read or the computation fails.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use treecap::capacity::capacity_by_levels;
use treecap::constructions::capacity_curve;
use treecap::io::{MeasureDocument, SetDocument, SpecField, TreeDocument};
use treecap::tiling::emit_svg;
use treecap::{
    build_tiling, capacity_of_set, capacity_oracle, capacity_recursive, compact_set_of_capacity, homogeneous_capacity,
    subdyadic_tree_of_capacity, symmetric_capacity, total_resistance, verify_equilibrium, BoundarySet,
    CapacityInterval, LevelDegrees, OracleOptions, PExponent, SvgOptions, TailPolicy, Tree,
};

use output::Format;

type Failure = Box<dyn std::error::Error>;

#[derive(Parser, Debug)]
#[command(name = "treecap", version, about = "Nonlinear capacities on rooted trees")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Exponent p > 1
    #[arg(long, global = true, default_value_t = 2.0)]
    p: f64,
    /// Tolerance for equilibrium checks
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Truncation depth for infinite trees
    #[arg(long, global = true, default_value_t = 24)]
    depth: usize,
    /// Values assumed at truncation tails: 0, 1, or a certified interval
    #[arg(long, global = true, value_enum, default_value_t = TailArg::Interval)]
    tail: TailArg,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for parallel checks
    #[arg(long, global = true, env = "TREECAP_THREADS")]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TailArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Interval,
}

impl TailArg {
    fn policy(self) -> TailPolicy {
        match self {
            TailArg::Zero => TailPolicy::Pessimistic,
            TailArg::One => TailPolicy::Optimistic,
            TailArg::Interval => TailPolicy::Certified,
        }
    }
}

#[derive(Args, Debug)]
struct TreeInput {
    /// Tree JSON file (generator spec or explicit edge list)
    #[arg(long, conflicts_with = "spec")]
    tree: Option<PathBuf>,
    /// Short tree spec such as homogeneous:2, symmetric:1,3*, subdyadic:1,0,2 or path:5
    #[arg(long)]
    spec: Option<String>,
}

impl TreeInput {
    fn document(&self) -> Result<TreeDocument, Failure> {
        match (&self.tree, &self.spec) {
            (Some(path), _) => Ok(TreeDocument::read(path)?),
            (None, Some(text)) => Ok(TreeDocument::Spec {
                spec: SpecField::Text(text.clone()),
                depth: None,
            }),
            (None, None) => Err("a tree is required: pass --tree FILE or --spec SPEC".into()),
        }
    }

    fn load(&self, depth: usize) -> Result<Tree, Failure> {
        Ok(self.document()?.to_tree(Some(depth))?)
    }

    /// Level degrees when the input is a spherically symmetric generator
    /// without an explicit depth of its own.
    fn level_degrees(&self) -> Result<Option<LevelDegrees>, Failure> {
        match self.document()? {
            TreeDocument::Spec { spec, depth: None } => Ok(spec.resolve()?.level_degrees()?),
            _ => Ok(None),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity of the boundary or of a leaf set
    Capacity {
        #[command(flatten)]
        input: TreeInput,
        /// Leaf set JSON (a list of leaf ids)
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Equilibrium measure, tent capacities and capacity
    Equilibrium {
        #[command(flatten)]
        input: TreeInput,
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Test whether a measure is an equilibrium measure
    Verify {
        #[command(flatten)]
        input: TreeInput,
        /// Measure JSON: {"M": {...}}, {"leaf_masses": {...}} or a bare edge map
        #[arg(long)]
        measure: PathBuf,
    },
    /// Square tiling of the equilibrium measure (p = 2)
    Tile {
        #[command(flatten)]
        input: TreeInput,
        #[arg(long)]
        set: Option<PathBuf>,
        /// Tile this measure instead of computing one
        #[arg(long, conflicts_with = "set")]
        measure: Option<PathBuf>,
        /// Also write the tiling as SVG
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Label squares with their edge ids in the SVG
        #[arg(long)]
        labels: bool,
    },
    /// Capacity of a spherically symmetric tree from its degree sequence
    Symmetric {
        /// Degree sequence: 2,3,2 (finite), 1,2* (last repeats) or 1,2+ (later degrees at least 2)
        #[arg(long, conflicts_with = "n", required_unless_present = "n")]
        degrees: Option<String>,
        /// Homogeneous degree
        #[arg(long)]
        n: Option<u32>,
    },
    /// Effective resistance to the boundary and the p = 2 identity check
    Resistance {
        #[command(flatten)]
        input: TreeInput,
    },
    /// Leaf set {Λ ≤ x} of prescribed capacity in a homogeneous tree
    ConstructSet {
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Target capacity
        #[arg(long)]
        t: f64,
        /// Working depth of the leaf grid
        #[arg(long = "grid-depth", default_value_t = 14)]
        grid_depth: usize,
        /// Write the finite tree the set lives in
        #[arg(long)]
        tree_out: Option<PathBuf>,
        /// Sample the capacity curve at this many points instead
        #[arg(long)]
        curve: Option<usize>,
    },
    /// Subdyadic tree whose boundary has prescribed capacity
    ConstructTree {
        /// Target capacity, below the capacity of the dyadic tree
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 30)]
        digits: usize,
    },
    /// Independent convex-optimization capacity of a leaf set
    Oracle {
        #[command(flatten)]
        input: TreeInput,
        #[arg(long)]
        set: Option<PathBuf>,
        /// Relative width of the certified bracket
        #[arg(long, default_value_t = 1e-8)]
        gap: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iterations: usize,
    },
}

fn read_set(path: &Option<PathBuf>, tree: &Tree) -> Result<Option<BoundarySet>, Failure> {
    match path {
        None => Ok(None),
        Some(path) => Ok(Some(SetDocument::read(path)?.to_set(tree)?)),
    }
}

fn equilibrium(
    tree: &Tree,
    set: Option<&BoundarySet>,
    p: PExponent,
    tail: TailArg,
) -> Result<treecap::EquilibriumResult, Failure> {
    Ok(match set {
        Some(set) => capacity_of_set(tree, set, p)?,
        None => capacity_recursive(tree, p, &tail.policy())?,
    })
}

#[derive(Serialize)]
struct CapacityOut {
    p: f64,
    capacity: CapacityInterval,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
}

#[derive(Serialize)]
struct SymmetricOut {
    p: f64,
    capacity: CapacityInterval,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
}

#[derive(Serialize)]
struct ResistanceOut {
    resistance: treecap::ResistanceReport,
    /// Largest `|1/(1+R(α)) - c(α)|` against the p = 2 recursion.
    identity_gap: f64,
    identity_holds: bool,
}

#[derive(Serialize)]
struct CurveOut {
    n: u32,
    p: f64,
    depth: usize,
    points: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    capacity: CapacityInterval,
}

#[derive(Serialize)]
struct OracleOut {
    oracle: treecap::OracleResult,
    recursion: f64,
    relative_gap: f64,
}

/// Runs one subcommand; `Ok(false)` means "computed, and the answer is no".
fn run(cli: &Cli) -> Result<bool, Failure> {
    let c = &cli.common;
    let p = PExponent::new(c.p)?;
    let fmt = c.format;
    match &cli.command {
        Command::Capacity { input, set } => {
            // the per-level recursion only certifies intervals
            if set.is_none() && matches!(c.tail, TailArg::Interval) {
                if let Some(degrees) = input.level_degrees()? {
                    let capacity = capacity_by_levels(&degrees, p, c.depth)?;
                    let method = "levels";
                    return output::emit(fmt, &CapacityOut { p: c.p, capacity, method, depth: Some(c.depth) });
                }
            }
            let tree = input.load(c.depth)?;
            let set = read_set(set, &tree)?;
            let r = equilibrium(&tree, set.as_ref(), p, c.tail)?;
            let method = if set.is_some() { "set" } else { "recursion" };
            output::emit(fmt, &CapacityOut { p: c.p, capacity: r.capacity, method, depth: None })
        }
        Command::Equilibrium { input, set } => {
            let tree = input.load(c.depth)?;
            let set = read_set(set, &tree)?;
            output::emit(fmt, &equilibrium(&tree, set.as_ref(), p, c.tail)?)
        }
        Command::Verify { input, measure } => {
            let tree = input.load(c.depth)?;
            let mu = MeasureDocument::read(measure)?.to_measure(&tree)?;
            let report = verify_equilibrium(&tree, &mu, p, c.tol)?;
            output::emit(fmt, &report)?;
            Ok(report.is_equilibrium)
        }
        Command::Tile { input, set, measure, svg, labels } => {
            let tree = input.load(c.depth)?;
            let mut r = equilibrium(&tree, read_set(set, &tree)?.as_ref(), p, c.tail)?;
            if let Some(path) = measure {
                r.measure = MeasureDocument::read(path)?.to_measure(&tree)?;
            }
            let tiling = build_tiling(&tree, &r)?;
            if let Some(path) = svg {
                let opts = SvgOptions { labels: *labels, ..SvgOptions::default() };
                emit_svg(&tiling, path, &opts)?;
            }
            match fmt {
                // coordinates printed to 17 digits so the file reads back exactly
                Format::Json => println!("{}", tiling.to_json()),
                Format::Human => output::emit(fmt, &tiling).map(|_| ())?,
            }
            Ok(true)
        }
        Command::Symmetric { degrees, n } => {
            let (seq, closed_form) = match (degrees, n) {
                (Some(text), _) => (text.parse::<LevelDegrees>()?, None),
                (None, Some(n)) => (LevelDegrees::homogeneous(*n)?, Some(homogeneous_capacity(*n, p))),
                (None, None) => return Err("pass --degrees or --n".into()),
            };
            let capacity = symmetric_capacity(&seq, p, c.depth)?;
            output::emit(fmt, &SymmetricOut { p: c.p, capacity, closed_form })
        }
        Command::Resistance { input } => {
            let tree = input.load(c.depth)?;
            let policy = c.tail.policy();
            let resistance = total_resistance(&tree, &policy)?;
            let rec = capacity_recursive(&tree, PExponent::TWO, &policy)?;
            let identity_gap = tree
                .edges()
                .map(|e| (1.0 / (1.0 + resistance.per_edge.get(e)) - rec.c_of_alpha.get(e)).abs())
                .fold(0.0, f64::max);
            output::emit(fmt, &ResistanceOut { resistance, identity_gap, identity_holds: identity_gap <= 1e-12 })
        }
        Command::ConstructSet { n, t, grid_depth, tree_out, curve } => {
            if let Some(samples) = curve {
                let points = capacity_curve(*n, p, *grid_depth, *samples)?
                    .into_iter()
                    .map(|(x, capacity)| CurvePoint { x, capacity })
                    .collect();
                return output::emit(fmt, &CurveOut { n: *n, p: c.p, depth: *grid_depth, points });
            }
            let k = compact_set_of_capacity(*n, p, *t, c.tol.max(1e-12), *grid_depth)?;
            if let Some(path) = tree_out {
                write_json(path, &TreeDocument::from_tree(&k.tree))?;
            }
            output::emit(fmt, &k)
        }
        Command::ConstructTree { c: target, digits } => {
            let r = subdyadic_tree_of_capacity(*target, p, *digits)?;
            output::emit(fmt, &r)
        }
        Command::Oracle { input, set, gap, max_iterations } => {
            let tree = input.load(c.depth)?;
            let set = read_set(set, &tree)?.unwrap_or_else(|| BoundarySet::all_leaves(&tree));
            let opts = OracleOptions { tol: *gap, max_iterations: *max_iterations };
            let oracle = capacity_oracle(&tree, &set, p, &opts)?;
            let recursion = if set.is_empty() { 0.0 } else { capacity_of_set(&tree, &set, p)?.capacity.lower };
            let relative_gap = (oracle.value - recursion).abs() / oracle.value.abs().max(f64::MIN_POSITIVE);
            output::emit(fmt, &OracleOut { oracle, recursion, relative_gap })
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(2)
        }
    }
}
