//! Command-line front end: argument parsing, JSON reports and the three modes
//! (`summarize`, `verify`, `generate`).

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::decomposition::approximation_bound;
use crate::error::{Error, Result};
use crate::generators::{self, GeneratedInstance, RandomSpec};
use crate::io;
use crate::oracle;
use crate::solver::{solve, Solution, SolverConfig};
use crate::space::ProductSpace;
use crate::weights::{
    aggregate_with_budget, weights_from_aggregates, AggregateTable, CellTable, Metrics, WeightFunction, WeightMap,
    DEFAULT_BOXCOX_FLOOR, DEFAULT_DENSE_BUDGET,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    #[default]
    Summarize,
    Verify,
    Generate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum WeightKind {
    #[default]
    Absdiff,
    Composition,
    Boxcox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    TwoTree,
    SimpleConflict,
    PowerConflict,
    Mis,
    Random,
}

/// Summarize hierarchical metric changes into at most k non-overlapping segments.
#[derive(Clone, Debug, Parser)]
#[command(name = "hiersum", version)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = RunMode::Summarize)]
    pub mode: RunMode,

    /// Dimension hierarchy CSV (`id,parent_id,name`); repeat once per dimension, in order.
    #[arg(long = "hierarchy", value_name = "FILE")]
    pub hierarchies: Vec<PathBuf>,

    /// Leaf facts CSV (`dim1..dimd,metric_pre,metric_cur`).
    #[arg(long, value_name = "FILE", conflicts_with = "weights")]
    pub facts: Option<PathBuf>,

    /// Explicit node weights CSV (`dim1..dimd,weight`), instead of facts.
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,

    /// Maximum number of segments to report.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,

    #[arg(long = "weight", value_enum, default_value_t = WeightKind::Absdiff)]
    pub weight: WeightKind,

    #[arg(long = "boxcox-m", default_value_t = 0.5)]
    pub boxcox_m: f64,

    #[arg(long = "boxcox-floor", default_value_t = DEFAULT_BOXCOX_FLOOR)]
    pub boxcox_floor: f64,

    /// Largest space aggregated into dense tables; bigger spaces stay sparse.
    #[arg(long = "dense-budget", default_value_t = DEFAULT_DENSE_BUDGET)]
    pub dense_budget: u64,

    /// Output file (summarize, verify) or directory (generate). Defaults to stdout for reports.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub generator: Option<GeneratorKind>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Change size for the two-tree generator.
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,

    /// Power-conflict exponent.
    #[arg(long = "power", default_value_t = 1)]
    pub power: usize,

    /// Edge weight offset for the independent-set generator.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,

    /// Edge list CSV (`source,target`) for the independent-set generator; random when absent.
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,

    #[arg(long = "max-vertices", default_value_t = 7)]
    pub max_vertices: usize,

    #[arg(long = "max-edges", default_value_t = 9)]
    pub max_edges: usize,

    /// Node counts of the random trees, comma separated.
    #[arg(long = "tree-sizes", value_delimiter = ',', default_values_t = [5usize, 5, 5])]
    pub tree_sizes: Vec<usize>,

    #[arg(long = "max-height", default_value_t = 3)]
    pub max_height: usize,

    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
}

impl Args {
    pub fn weight_function(&self) -> Result<WeightFunction> {
        let f = match self.weight {
            WeightKind::Absdiff => WeightFunction::AbsDiff,
            WeightKind::Composition => WeightFunction::Composition,
            WeightKind::Boxcox => WeightFunction::BoxCox { m: self.boxcox_m, floor: self.boxcox_floor },
        };
        f.validate()?;
        Ok(f)
    }

    fn k(&self) -> Result<Option<usize>> {
        match self.k {
            None => Ok(None),
            Some(k) => usize::try_from(k)
                .map(Some)
                .map_err(|_| Error::Config(format!("k = {k} does not fit in memory"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportEntry {
    /// Display names, one per dimension.
    pub coordinates: Vec<String>,
    /// Node ids, one per dimension.
    pub ids: Vec<String>,
    pub weight: f64,
    pub metric_pre: Option<f64>,
    pub metric_cur: Option<f64>,
    pub delta: Option<f64>,
    pub share_pre: Option<f64>,
    pub share_cur: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSpec {
    pub name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

impl WeightSpec {
    pub fn of(f: &WeightFunction) -> Self {
        match *f {
            WeightFunction::BoxCox { m, floor } => Self { name: f.name(), m: Some(m), floor: Some(floor) },
            _ => Self { name: f.name(), m: None, floor: None },
        }
    }

    pub fn explicit() -> Self {
        Self { name: "explicit", m: None, floor: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Totals {
    pub metric_pre: f64,
    pub metric_cur: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub k: usize,
    pub weight_function: WeightSpec,
    /// Sum of the entry weights, in entry order.
    pub total_weight: f64,
    pub grand_totals: Option<Totals>,
    pub entries: Vec<ReportEntry>,
}

fn share(part: f64, total: f64) -> Option<f64> {
    (total > 0.0).then(|| part / total)
}

/// Turns a solution into report entries sorted by weight (descending), then linear index.
pub fn build_report(
    space: &ProductSpace,
    weights: &WeightMap,
    aggregates: Option<&AggregateTable>,
    solution: &Solution,
    k: usize,
    weight_function: WeightSpec,
) -> Report {
    let totals = aggregates.map(AggregateTable::totals);
    let mut order: Vec<u64> = solution.indices.clone();
    order.sort_by(|&a, &b| weights.get(b).total_cmp(&weights.get(a)).then(a.cmp(&b)));
    let entries: Vec<ReportEntry> = order
        .into_iter()
        .map(|idx| {
            let node = space.node_at(idx);
            let m: Option<Metrics> = aggregates.map(|a| a.get(idx));
            ReportEntry {
                coordinates: space.names_of(&node).into_iter().map(str::to_owned).collect(),
                ids: space.keys_of(&node).into_iter().map(str::to_owned).collect(),
                weight: weights.get(idx),
                metric_pre: m.map(|m| m.pre),
                metric_cur: m.map(|m| m.cur),
                delta: m.map(|m| m.cur - m.pre),
                share_pre: m.zip(totals).and_then(|(m, t)| share(m.pre, t.pre)),
                share_cur: m.zip(totals).and_then(|(m, t)| share(m.cur, t.cur)),
            }
        })
        .collect();
    Report {
        schema: SCHEMA_VERSION,
        k,
        weight_function,
        total_weight: entries.iter().map(|e| e.weight).sum(),
        grand_totals: totals.map(|t| Totals { metric_pre: t.pre, metric_cur: t.cur }),
        entries,
    }
}

/// Aggregates `cells`, derives weights with `function`, solves and reports.
pub fn summarize_cells(
    space: &ProductSpace,
    cells: &CellTable,
    function: WeightFunction,
    k: usize,
    dense_budget: u64,
) -> Result<Report> {
    function.validate()?;
    let cfg = SolverConfig::new(k)?;
    let agg = aggregate_with_budget(cells, space, dense_budget)?;
    let weights = weights_from_aggregates(&agg, space, function)?;
    let sol = solve(space, &weights, &cfg)?;
    Ok(build_report(space, &weights, Some(&agg), &sol, k, WeightSpec::of(&function)))
}

/// Solves an instance whose weights are given directly.
pub fn summarize_weights(space: &ProductSpace, weights: &WeightMap, k: usize) -> Result<Report> {
    let cfg = SolverConfig::new(k)?;
    let sol = solve(space, weights, &cfg)?;
    Ok(build_report(space, weights, None, &sol, k, WeightSpec::explicit()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub instance: String,
    pub dims: usize,
    pub nodes: u64,
    pub positive_nodes: usize,
    pub k: usize,
    pub solver_weight: f64,
    pub conflict_free_weight: f64,
    pub optimal_weight: f64,
    /// `optimal / solver`; `1` when both are zero.
    pub ratio: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub solver_matches_conflict_free: bool,
    pub known_optimal: Option<f64>,
    pub known_conflict_free: Option<f64>,
}

/// Runs the solver and both exhaustive oracles on one instance.
pub fn verify(space: &ProductSpace, weights: &WeightMap, k: usize, instance: &str) -> Result<VerifyReport> {
    let cfg = SolverConfig::new(k)?;
    let sol = solve(space, weights, &cfg)?;
    let opt = oracle::brute_force_optimal(space, weights, k)?;
    let cf = oracle::brute_force_conflict_free(space, weights, k)?;
    let ratio = if sol.total_weight > 0.0 {
        opt.total_weight / sol.total_weight
    } else if opt.total_weight > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let bound = approximation_bound(space);
    Ok(VerifyReport {
        schema: SCHEMA_VERSION,
        instance: instance.to_owned(),
        dims: space.dims(),
        nodes: space.len(),
        positive_nodes: weights.positive().len(),
        k,
        solver_weight: sol.total_weight,
        conflict_free_weight: cf.total_weight,
        optimal_weight: opt.total_weight,
        ratio,
        bound,
        within_bound: sol.total_weight * bound >= opt.total_weight,
        solver_matches_conflict_free: sol.total_weight == cf.total_weight,
        known_optimal: None,
        known_conflict_free: None,
    })
}

/// Builds the instance named by `--generator` and its parameters.
pub fn generate(args: &Args) -> Result<GeneratedInstance> {
    let kind = args.generator.ok_or_else(|| Error::Config("--generator is required".into()))?;
    match kind {
        GeneratorKind::TwoTree => generators::gen_two_tree_example(args.x),
        GeneratorKind::SimpleConflict => generators::gen_simple_conflict(),
        GeneratorKind::PowerConflict => generators::gen_power_conflict(args.power),
        GeneratorKind::Mis => {
            let graph = match &args.graph {
                Some(p) => io::read_digraph(p, None)?,
                None => generators::random_digraph(args.seed, args.max_vertices, args.max_edges)?,
            };
            generators::gen_mis_reduction(&graph, args.epsilon)
        }
        GeneratorKind::Random => generators::gen_random(&RandomSpec {
            tree_sizes: args.tree_sizes.clone(),
            max_height: args.max_height,
            cell_density: args.density,
            seed: args.seed,
        }),
    }
}

/// Writes `dim{i}.csv`, `facts.csv` or `weights.csv`, and `manifest.json` into `dir`.
pub fn write_instance(inst: &GeneratedInstance, dir: &Path) -> Result<Value> {
    let dims = io::write_space(&inst.space, dir)?;
    let mut manifest = json!({
        "schema": SCHEMA_VERSION,
        "generator": inst.name,
        "params": inst.params,
        "k": inst.k,
        "known_optimal": inst.known.overlap_free,
        "known_conflict_free": inst.known.conflict_free,
        "hierarchies": dims.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
    });
    match &inst.cells {
        Some(cells) => {
            io::write_facts_file(&inst.space, cells, &dir.join("facts.csv"))?;
            manifest["facts"] = json!("facts.csv");
        }
        None => {
            io::write_weights_file(&inst.space, &inst.weights, &dir.join("weights.csv"))?;
            manifest["weights"] = json!("weights.csv");
        }
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, to_json(&manifest)).map_err(|source| Error::Io { path, source })?;
    Ok(manifest)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

/// Loaded instance: space, weights and (when built from facts) aggregates.
struct Loaded {
    name: String,
    space: ProductSpace,
    weights: WeightMap,
    aggregates: Option<AggregateTable>,
    spec: WeightSpec,
    default_k: Option<usize>,
    known: generators::KnownOptima,
}

fn load(args: &Args) -> Result<Loaded> {
    if args.generator.is_some() && args.hierarchies.is_empty() {
        let inst = generate(args)?;
        let spec = if inst.cells.is_some() { WeightSpec::of(&WeightFunction::AbsDiff) } else { WeightSpec::explicit() };
        return Ok(Loaded {
            name: inst.name.to_owned(),
            space: inst.space,
            weights: inst.weights,
            aggregates: None,
            spec,
            default_k: Some(inst.k),
            known: inst.known,
        });
    }
    let space = io::read_space(&args.hierarchies)?;
    match (&args.facts, &args.weights) {
        (Some(facts), None) => {
            let function = args.weight_function()?;
            let cells = io::read_facts(facts, &space)?;
            let agg = aggregate_with_budget(&cells, &space, args.dense_budget)?;
            let weights = weights_from_aggregates(&agg, &space, function)?;
            Ok(Loaded {
                name: file_name(facts),
                space,
                weights,
                aggregates: Some(agg),
                spec: WeightSpec::of(&function),
                default_k: None,
                known: Default::default(),
            })
        }
        (None, Some(w)) => {
            let weights = io::read_weights(w, &space)?;
            Ok(Loaded {
                name: file_name(w),
                space,
                weights,
                aggregates: None,
                spec: WeightSpec::explicit(),
                default_k: None,
                known: Default::default(),
            })
        }
        _ => Err(Error::Config("exactly one of --facts or --weights is required".into())),
    }
}

/// Executes one invocation and returns the JSON text that goes to stdout.
pub fn run(args: &Args) -> Result<String> {
    match args.mode {
        RunMode::Summarize => {
            let loaded = load(args)?;
            let k = args.k()?.or(loaded.default_k).ok_or_else(|| Error::Config("--k is required".into()))?;
            let cfg = SolverConfig::new(k)?;
            let sol = solve(&loaded.space, &loaded.weights, &cfg)?;
            let report = build_report(&loaded.space, &loaded.weights, loaded.aggregates.as_ref(), &sol, k, loaded.spec);
            emit(args, &report)
        }
        RunMode::Verify => {
            let loaded = load(args)?;
            let k = args.k()?.or(loaded.default_k).ok_or_else(|| Error::Config("--k is required".into()))?;
            let mut report = verify(&loaded.space, &loaded.weights, k, &loaded.name)?;
            if loaded.default_k == Some(k) {
                report.known_optimal = loaded.known.overlap_free;
                report.known_conflict_free = loaded.known.conflict_free;
            }
            emit(args, &report)
        }
        RunMode::Generate => {
            let out = args.out.as_deref().ok_or_else(|| Error::Config("--out <dir> is required to generate".into()))?;
            let inst = generate(args)?;
            Ok(to_json(&write_instance(&inst, out)?))
        }
    }
}

fn emit<T: Serialize>(args: &Args, value: &T) -> Result<String> {
    let text = to_json(value);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| Error::Io { path: path.clone(), source })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Structured error body printed on stderr.
pub fn error_json(e: &Error) -> String {
    let mut body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    if let Error::Parse { file, line, .. } = e {
        body["error"]["file"] = json!(file.display().to_string());
        body["error"]["line"] = json!(line);
    }
    body.to_string()
}
