//! Experiment orchestration over (dataset x model x algorithm x budget x
//! seed) grids.
//!
//! Results land in an append-only `results.csv` keyed by the full cell
//! coordinate, so interrupted runs resume without recomputing finished
//! cells, and two runs from the same config and seed produce byte-identical
//! files: cells are computed in parallel but written in grid order, and
//! every random draw derives from the master seed through the cell
//! coordinates.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::cascade::{load_cascades, Cascade, CascadeSet};
use crate::clustopt::clust_opt;
use crate::error::{Error, Result};
use crate::graph::{load_dataset, DatasetBundle, Graph, SubPartition};
use crate::metrics::{evaluate, MetricName};
use crate::rng;
use crate::simulate::{calibrate, CalibrationTarget, EpidemicParams, Model, ModelKind};
use crate::surrogate::{detect, CliqueRate, Method};
use crate::svg;
use crate::{filter_singletons, Partition};

/// The detection algorithms the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Path,
    Clique,
    Clique0,
    Cosine,
    Oracle,
    ClustOpt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Path,
        Algorithm::Clique,
        Algorithm::Clique0,
        Algorithm::Cosine,
        Algorithm::Oracle,
        Algorithm::ClustOpt,
    ];

    pub fn run(self, cs: &CascadeSet, seed: u64) -> Result<SubPartition> {
        match self {
            Algorithm::Path => detect(cs, Method::Path, seed),
            Algorithm::Clique => detect(cs, Method::Clique(CliqueRate::Auto), seed),
            Algorithm::Clique0 => detect(cs, Method::Clique(CliqueRate::Zero), seed),
            Algorithm::Cosine => detect(cs, Method::Cosine, seed),
            Algorithm::Oracle => detect(cs, Method::Oracle, seed),
            Algorithm::ClustOpt => clust_opt(cs, seed).map(|r| r.partition),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Path => "path",
            Algorithm::Clique => "clique",
            Algorithm::Clique0 => "clique0",
            Algorithm::Cosine => "cosine",
            Algorithm::Oracle => "oracle",
            Algorithm::ClustOpt => "clustopt",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Ok(match s {
            "path" => Algorithm::Path,
            "clique" => Algorithm::Clique,
            "clique0" => Algorithm::Clique0,
            "cosine" => Algorithm::Cosine,
            "oracle" => Algorithm::Oracle,
            "clustopt" => Algorithm::ClustOpt,
            other => return Err(Error::Validation(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// Cascade budget: either a fixed cascade count, or a target relative size
/// S that is converted to a count by generating until the threshold is
/// crossed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Count(usize),
    STarget(f64),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Count(n) => write!(f, "{n}"),
            Budget::STarget(s) => write!(f, "s{s}"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Budget> {
        if let Some(rest) = s.strip_prefix('s').or_else(|| s.strip_prefix('S')) {
            let v: f64 = rest
                .parse()
                .map_err(|_| Error::Validation(format!("bad S target {s:?}")))?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("S target must be positive: {s:?}")));
            }
            return Ok(Budget::STarget(v));
        }
        let n: usize = s
            .parse()
            .map_err(|_| Error::Validation(format!("bad budget {s:?}")))?;
        if n == 0 {
            return Err(Error::Validation("budget must be positive".into()));
        }
        Ok(Budget::Count(n))
    }
}

/// Hard cap on cascades generated while chasing an S target.
pub const MAX_TARGET_CASCADES: usize = 1_000_000;

/// One dataset in an experiment: a graph with ground truth, and optionally
/// a file of real cascades (synthetic cascades are simulated otherwise).
#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub bundle: DatasetBundle,
    pub cascade_file: Option<PathBuf>,
}

/// Full description of an experiment grid.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub datasets: Vec<DatasetSpec>,
    pub model: ModelKind,
    pub params: EpidemicParams,
    pub calibration: Option<CalibrationTarget>,
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<Budget>,
    pub metrics: Vec<MetricName>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Validation("no datasets configured".into()));
        }
        if self.algorithms.is_empty() || self.budgets.is_empty() {
            return Err(Error::Validation(
                "algorithms and budgets must be nonempty".into(),
            ));
        }
        if self.metrics.is_empty() || self.seeds.is_empty() {
            return Err(Error::Validation("metrics and seeds must be nonempty".into()));
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.bundle.name.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate dataset name {:?}",
                    d.bundle.name
                )));
            }
        }
        if self.algorithms.contains(&Algorithm::Oracle)
            && self.datasets.iter().any(|d| d.cascade_file.is_some())
        {
            log::warn!(
                "oracle runs on real cascades will fail: transmission trees are unknown"
            );
        }
        Ok(())
    }
}

/// One result row, mirroring the CSV line format. `metric` is either a
/// metric name or the literal `error`, in which case `error` holds the
/// failure kind and `value` is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub dataset: String,
    pub model: String,
    pub algorithm: Algorithm,
    pub budget: String,
    pub s: f64,
    pub s_approx: bool,
    pub seed: u64,
    pub metric: String,
    pub value: Option<f64>,
    pub error: Option<String>,
}

impl Row {
    fn key(&self) -> String {
        format!(
            "{}\u{1}{}\u{1}{}\u{1}{}\u{1}{}\u{1}{}",
            self.dataset, self.model, self.algorithm, self.budget, self.seed, self.metric
        )
    }

    fn to_csv(&self) -> String {
        let s = if self.s_approx {
            format!("~{:.6}", self.s)
        } else {
            format!("{:.6}", self.s)
        };
        let value = match (&self.error, self.value) {
            (Some(kind), _) => kind.clone(),
            (None, Some(v)) => format!("{v:.6}"),
            (None, None) => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.dataset, self.model, self.algorithm, self.budget, s, self.seed, self.metric, value
        )
    }

    fn from_csv(line: &str, lineno: usize, path: &Path) -> Result<Row> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let bad = |what: &str| Error::parse(path, lineno, format!("bad {what}: {line:?}"));
        let (s_text, s_approx) = match fields[4].strip_prefix('~') {
            Some(rest) => (rest, true),
            None => (fields[4], false),
        };
        let metric = fields[6].to_string();
        let (value, error) = if metric == "error" {
            (None, Some(fields[7].to_string()))
        } else if fields[7].is_empty() {
            (None, None)
        } else {
            (Some(fields[7].parse().map_err(|_| bad("value"))?), None)
        };
        Ok(Row {
            dataset: fields[0].to_string(),
            model: fields[1].to_string(),
            algorithm: fields[2].parse()?,
            budget: fields[3].to_string(),
            s: s_text.parse().map_err(|_| bad("S"))?,
            s_approx,
            seed: fields[5].parse().map_err(|_| bad("seed"))?,
            metric,
            value,
            error,
        })
    }
}

/// All rows of one experiment, in grid order.
#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    rows: Vec<Row>,
}

impl EvalReport {
    pub fn new(rows: Vec<Row>) -> EvalReport {
        EvalReport { rows }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean of a metric for one algorithm over the cells falling into an
    /// S bucket; undefined and failed cells are skipped.
    pub fn mean_metric(&self, algorithm: Algorithm, metric: MetricName, bucket: f64) -> Option<f64> {
        let name = metric.to_string();
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.algorithm == algorithm && r.metric == name && s_bucket(r.s) == bucket
            })
            .filter_map(|r| r.value)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Relative cascade size S: total transmission count over the edge count,
/// i.e. the average number of transmissions per edge. For cascade sets
/// without recorded trees the count Σ(|C|−1) is an upper-bound
/// approximation.
pub fn relative_size(cs: &CascadeSet, g: &Graph) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::DegenerateInput("graph has no edges".into()));
    }
    Ok(cs.transmission_count() as f64 / g.edge_count() as f64)
}

/// Geometric S buckets used to align budgets across datasets.
pub const S_BUCKETS: [f64; 11] = [
    1.0 / 32.0,
    1.0 / 16.0,
    1.0 / 8.0,
    1.0 / 4.0,
    1.0 / 2.0,
    1.0,
    2.0,
    4.0,
    8.0,
    16.0,
    32.0,
];

/// Nearest bucket in log space; values at or beyond the ends clamp.
pub fn s_bucket(s: f64) -> f64 {
    if !(s > 0.0) {
        return S_BUCKETS[0];
    }
    let l = s.log2();
    let k = l.round().clamp(-5.0, 5.0) as i32;
    S_BUCKETS[(k + 5) as usize]
}

/// Mean rank per algorithm over datasets inside one S bucket. Rank 1 is
/// the best (highest metric); ties share the mean of their ranks; a
/// dataset missing any algorithm's value is excluded with a warning.
pub fn average_rank(
    report: &EvalReport,
    metric: MetricName,
    bucket: f64,
) -> Vec<(Algorithm, f64)> {
    let name = metric.to_string();
    let algorithms: BTreeSet<Algorithm> = report.rows.iter().map(|r| r.algorithm).collect();
    let algorithms: Vec<Algorithm> = algorithms.into_iter().collect();
    let datasets: BTreeSet<&str> = report.rows.iter().map(|r| r.dataset.as_str()).collect();

    let mut sums = vec![0.0; algorithms.len()];
    let mut used = 0usize;
    for ds in datasets {
        let means: Vec<Option<f64>> = algorithms
            .iter()
            .map(|&a| {
                let vals: Vec<f64> = report
                    .rows
                    .iter()
                    .filter(|r| {
                        r.dataset == ds
                            && r.algorithm == a
                            && r.metric == name
                            && s_bucket(r.s) == bucket
                    })
                    .filter_map(|r| r.value)
                    .collect();
                if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                }
            })
            .collect();
        if means.iter().any(|m| m.is_none()) {
            log::warn!(
                "dataset {ds} lacks {name} values for some algorithm in bucket {bucket}; excluded from ranking"
            );
            continue;
        }
        used += 1;
        // rank descending; tied values share the mean of their ranks
        let mut order: Vec<usize> = (0..algorithms.len()).collect();
        order.sort_by(|&a, &b| means[b].partial_cmp(&means[a]).unwrap());
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && means[order[j + 1]] == means[order[i]] {
                j += 1;
            }
            let shared = (i + j) as f64 / 2.0 + 1.0;
            for &idx in &order[i..=j] {
                sums[idx] += shared;
            }
            i = j + 1;
        }
    }
    if used == 0 {
        log::warn!("no dataset had complete {name} values in bucket {bucket}");
        return Vec::new();
    }
    algorithms
        .into_iter()
        .zip(sums)
        .map(|(a, s)| (a, s / used as f64))
        .collect()
}

/// Remaps a cascade set onto a graph's node ids by label, so metrics and
/// simulation share one namespace. Every cascade node must exist in the
/// graph.
pub fn align_to_graph(cs: &CascadeSet, g: &Graph) -> Result<CascadeSet> {
    let map = |v: u32| -> Result<u32> {
        let name = cs.node_name(v);
        g.node_by_label(&name)
            .or_else(|| {
                if g.labels().is_none() {
                    name.parse::<u32>()
                        .ok()
                        .filter(|&x| (x as usize) < g.node_count())
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::Validation(format!("cascade node {name:?} is not in the graph")))
    };
    let mut cascades = Vec::with_capacity(cs.len());
    for c in cs.cascades() {
        let events: Result<Vec<(u32, f64)>> =
            c.events().iter().map(|&(v, t)| Ok((map(v)?, t))).collect();
        cascades.push(Cascade::new(events?)?);
    }
    let trees = match cs.transmissions() {
        Some(lists) => {
            let mut out = Vec::with_capacity(lists.len());
            for list in lists {
                let mapped: Result<Vec<(u32, u32)>> =
                    list.iter().map(|&(a, b)| Ok((map(a)?, map(b)?))).collect();
                out.push(mapped?);
            }
            Some(out)
        }
        None => None,
    };
    let set = CascadeSet::new(cascades, trees)?;
    Ok(match g.labels() {
        Some(l) => set.with_labels(l.to_vec()),
        None => set,
    })
}

struct Prepared {
    name: String,
    model_label: String,
    graph: Graph,
    truth: Partition,
    params: EpidemicParams,
    real: Option<CascadeSet>,
}

fn prepare_dataset(
    d: &DatasetSpec,
    model: ModelKind,
    base: &EpidemicParams,
    calibration: Option<CalibrationTarget>,
    index: usize,
) -> Result<Prepared> {
    let real = match &d.cascade_file {
        Some(path) => Some(align_to_graph(&load_cascades(path, None)?, &d.bundle.graph)?),
        None => None,
    };
    let params = if real.is_none() {
        match calibration {
            Some(target) => {
                let m = make_model(model, &d.bundle);
                calibrate(&m, base, target, rng::mix(0xCA11B, &[index as u64]))?
            }
            None => *base,
        }
    } else {
        *base
    };
    Ok(Prepared {
        name: d.bundle.name.clone(),
        model_label: if real.is_some() {
            "real".to_string()
        } else {
            model.to_string()
        },
        graph: d.bundle.graph.clone(),
        truth: d.bundle.ground_truth.clone(),
        params,
        real,
    })
}

fn make_model(kind: ModelKind, bundle: &DatasetBundle) -> Model<'_> {
    match kind {
        ModelKind::Sir => Model::Sir(&bundle.graph),
        ModelKind::SiBd => Model::SiBd(&bundle.graph),
        ModelKind::CSiBd => Model::CSiBd(&bundle.ground_truth),
    }
}

fn make_model_prepared(kind: ModelKind, p: &Prepared) -> Model<'_> {
    match kind {
        ModelKind::Sir => Model::Sir(&p.graph),
        ModelKind::SiBd => Model::SiBd(&p.graph),
        ModelKind::CSiBd => Model::CSiBd(&p.truth),
    }
}

/// Minimal prefix length whose transmission total crosses `target * m`.
fn prefix_for_target(cs: &CascadeSet, m: usize, target: f64) -> Option<usize> {
    let mut total = 0usize;
    for (i, c) in cs.cascades().iter().enumerate() {
        total += c.len().saturating_sub(1);
        if total as f64 / m as f64 >= target {
            return Some(i + 1);
        }
    }
    None
}

/// Builds the cascade set for one cell and reports its realized S.
fn cell_cascades(
    prep: &Prepared,
    kind: ModelKind,
    budget: &Budget,
    seed: u64,
) -> Result<(CascadeSet, f64, bool)> {
    let m = prep.graph.edge_count();
    if let Some(real) = &prep.real {
        let mut cs = real.clone();
        match budget {
            Budget::Count(n) => {
                if *n < cs.len() {
                    cs.truncate(*n);
                } else if *n > cs.len() {
                    log::warn!(
                        "{}: budget {n} exceeds the {} available cascades; using all",
                        prep.name,
                        cs.len()
                    );
                }
            }
            Budget::STarget(s) => match prefix_for_target(&cs, m, *s) {
                Some(k) => cs.truncate(k),
                None => log::warn!(
                    "{}: S target {s} unreachable with the available cascades; using all",
                    prep.name
                ),
            },
        }
        let s = relative_size(&cs, &prep.graph)?;
        return Ok((cs, s, true));
    }

    let model = make_model_prepared(kind, prep);
    let cs = match budget {
        Budget::Count(n) => crate::simulate::generate_set(&model, &prep.params, *n, seed)?,
        Budget::STarget(target) => {
            let mut n = 64usize;
            loop {
                let cs = crate::simulate::generate_set(&model, &prep.params, n, seed)?;
                if let Some(k) = prefix_for_target(&cs, m, *target) {
                    let mut cs = cs;
                    cs.truncate(k);
                    break cs;
                }
                if n >= MAX_TARGET_CASCADES {
                    log::warn!(
                        "{}: S target {target} not reached within {MAX_TARGET_CASCADES} cascades",
                        prep.name
                    );
                    break cs;
                }
                n = (n * 2).min(MAX_TARGET_CASCADES);
            }
        }
    };
    let s = relative_size(&cs, &prep.graph)?;
    Ok((cs, s, false))
}

fn error_slug(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::Validation(_) => "validation",
        Error::IncompleteGroundTruth(_) => "incomplete-ground-truth",
        Error::EmptyInput(_) => "empty-input",
        Error::UndefinedEstimate => "undefined-estimate",
        Error::MalformedCascade(_) => "malformed-cascade",
        Error::Domain(_) => "domain",
        Error::CalibrationFailure(_) => "calibration-failure",
        Error::OracleUnavailable => "oracle-unavailable",
        Error::DegenerateInput(_) => "degenerate-input",
        Error::FitFailure(_) => "fit-failure",
        Error::GenerationFailure(_) => "generation-failure",
        Error::UndefinedModularity => "undefined-modularity",
        Error::UndefinedMixing => "undefined-mixing",
    }
}

pub const RESULTS_HEADER: &str = "dataset,model,algorithm,budget,S,seed,metric,value";

struct Cell {
    dataset: usize,
    budget: usize,
    seed: usize,
}

/// Runs one grid cell, returning only the rows not already on disk.
fn run_cell(
    cell: &Cell,
    spec: &ExperimentSpec,
    prepared: &[Prepared],
    done: &HashSet<String>,
) -> Vec<Row> {
    let prep = &prepared[cell.dataset];
    let budget = &spec.budgets[cell.budget];
    let seed = spec.seeds[cell.seed];
    let budget_label = budget.to_string();

    let proto = |algorithm: Algorithm, metric: &str| -> Row {
        Row {
            dataset: prep.name.clone(),
            model: prep.model_label.clone(),
            algorithm,
            budget: budget_label.clone(),
            s: 0.0,
            s_approx: false,
            seed,
            metric: metric.to_string(),
            value: None,
            error: None,
        }
    };
    // an algorithm cell is complete when all its metric rows exist or a
    // single error row covers it
    let missing: Vec<(Algorithm, Vec<MetricName>)> = spec
        .algorithms
        .iter()
        .filter_map(|&a| {
            if done.contains(&proto(a, "error").key()) {
                return None;
            }
            let metrics: Vec<MetricName> = spec
                .metrics
                .iter()
                .copied()
                .filter(|m| !done.contains(&proto(a, &m.to_string()).key()))
                .collect();
            if metrics.is_empty() {
                None
            } else {
                Some((a, metrics))
            }
        })
        .collect();
    if missing.is_empty() {
        return Vec::new();
    }

    let cell_seed = rng::mix(seed, &[cell.dataset as u64, cell.budget as u64]);
    let (cascades, s, s_approx) = match cell_cascades(prep, spec.model, budget, cell_seed) {
        Ok(out) => out,
        Err(e) => {
            log::warn!("{}/{budget_label}/{seed}: cascade generation failed: {e}", prep.name);
            return missing
                .iter()
                .map(|&(a, _)| {
                    let mut r = proto(a, "error");
                    r.error = Some(error_slug(&e).to_string());
                    r
                })
                .collect();
        }
    };
    let cascades = filter_singletons(cascades);

    let mut rows = Vec::new();
    for &(algorithm, ref wanted) in &missing {
        let algo_index = spec
            .algorithms
            .iter()
            .position(|&a| a == algorithm)
            .unwrap() as u64;
        let algo_seed = rng::mix(cell_seed, &[algo_index]);
        match algorithm.run(&cascades, algo_seed) {
            Ok(pred) => {
                for &metric in wanted {
                    let mut r = proto(algorithm, &metric.to_string());
                    r.s = s;
                    r.s_approx = s_approx;
                    match evaluate(metric, &pred, &prep.truth) {
                        Ok(v) => r.value = v,
                        Err(e) => {
                            log::warn!(
                                "{}/{algorithm}/{budget_label}/{seed}: {metric} failed: {e}",
                                prep.name
                            );
                            r.metric = "error".to_string();
                            r.error = Some(error_slug(&e).to_string());
                        }
                    }
                    rows.push(r);
                }
            }
            Err(e) => {
                log::warn!(
                    "{}/{algorithm}/{budget_label}/{seed}: detection failed: {e}",
                    prep.name
                );
                let mut r = proto(algorithm, "error");
                r.s = s;
                r.s_approx = s_approx;
                r.error = Some(error_slug(&e).to_string());
                rows.push(r);
            }
        }
    }
    rows
}

fn read_existing(path: &Path) -> Result<(Vec<Row>, HashSet<String>)> {
    if !path.exists() {
        return Ok((Vec::new(), HashSet::new()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != RESULTS_HEADER {
                return Err(Error::parse(path, 1, "unexpected results header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let row = Row::from_csv(line, i + 1, path)?;
        keys.insert(row.key());
        rows.push(row);
    }
    Ok((rows, keys))
}

/// Runs the full grid, appending missing cells to `results.csv` in the
/// output directory and regenerating the plot-data files. Already-recorded
/// cells are skipped, so interrupted runs resume where they stopped.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<EvalReport> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let results_path = spec.out_dir.join("results.csv");
    let (_, done) = read_existing(&results_path)?;

    let prepared: Vec<Prepared> = spec
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| prepare_dataset(d, spec.model, &spec.params, spec.calibration, i))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for dataset in 0..spec.datasets.len() {
        for budget in 0..spec.budgets.len() {
            for seed in 0..spec.seeds.len() {
                cells.push(Cell {
                    dataset,
                    budget,
                    seed,
                });
            }
        }
    }

    let compute = |cells: &[Cell]| -> Vec<Vec<Row>> {
        cells
            .par_iter()
            .map(|c| run_cell(c, spec, &prepared, &done))
            .collect()
    };

    let had_file = results_path.exists();
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&results_path)
        .map_err(|e| Error::io(&results_path, e))?;
    if !had_file {
        writeln!(file, "{RESULTS_HEADER}").map_err(|e| Error::io(&results_path, e))?;
    }

    let pool = match spec.workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Validation(format!("worker pool: {e}")))?,
        ),
        None => None,
    };

    let mut new_rows = Vec::new();
    // compute in parallel per chunk, append strictly in grid order
    for chunk in cells.chunks(16) {
        let outs = match &pool {
            Some(p) => p.install(|| compute(chunk)),
            None => compute(chunk),
        };
        for rows in outs {
            for row in rows {
                file.write_all(row.to_csv().as_bytes())
                    .map_err(|e| Error::io(&results_path, e))?;
                new_rows.push(row);
            }
        }
        file.flush().map_err(|e| Error::io(&results_path, e))?;
    }
    drop(file);

    // the universe of this spec, so stale rows from other configs in the
    // same directory do not leak into aggregates
    let budget_labels: HashSet<String> = spec.budgets.iter().map(|b| b.to_string()).collect();
    let metric_names: HashSet<String> = spec
        .metrics
        .iter()
        .map(|m| m.to_string())
        .chain(std::iter::once("error".to_string()))
        .collect();
    let dataset_names: HashSet<&str> = prepared.iter().map(|p| p.name.as_str()).collect();
    let (all_rows, _) = read_existing(&results_path)?;
    let rows: Vec<Row> = all_rows
        .into_iter()
        .filter(|r| {
            dataset_names.contains(r.dataset.as_str())
                && spec.algorithms.contains(&r.algorithm)
                && budget_labels.contains(&r.budget)
                && spec.seeds.contains(&r.seed)
                && metric_names.contains(&r.metric)
        })
        .collect();
    let report = EvalReport::new(rows);

    emit_plot_data(&report, Axis::Budget, &spec.out_dir, spec.emit_svg)?;
    emit_plot_data(&report, Axis::S, &spec.out_dir, spec.emit_svg)?;
    Ok(report)
}

/// Which x axis a plot file uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Budget,
    S,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn budget_sort_key(label: &str) -> (u8, f64) {
    match label.parse::<Budget>() {
        Ok(Budget::Count(n)) => (0, n as f64),
        Ok(Budget::STarget(s)) => (1, s),
        Err(_) => (2, 0.0),
    }
}

fn mean_stderr(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6}"),
        None => String::new(),
    }
}

/// Writes per-figure CSVs: one row per x value, mean and standard error
/// per algorithm. Budget-axis files are per (dataset, model, metric);
/// S-axis files pool datasets per (model, metric). Undefined cells stay
/// empty, never zero. Returns the paths written.
pub fn emit_plot_data(
    report: &EvalReport,
    axis: Axis,
    out_dir: &Path,
    with_svg: bool,
) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Ok(Vec::new());
    }
    let algorithms: Vec<Algorithm> = {
        let set: BTreeSet<Algorithm> = report.rows.iter().map(|r| r.algorithm).collect();
        set.into_iter().collect()
    };

    // group key -> x label -> algorithm -> values
    type Series = BTreeMap<String, BTreeMap<usize, Vec<f64>>>;
    let mut groups: BTreeMap<(String, String, String), Series> = BTreeMap::new();
    for r in &report.rows {
        if r.metric == "error" {
            continue;
        }
        let Some(v) = r.value else { continue };
        let ai = match algorithms.iter().position(|&a| a == r.algorithm) {
            Some(i) => i,
            None => continue,
        };
        let (key, x) = match axis {
            Axis::Budget => (
                (r.dataset.clone(), r.model.clone(), r.metric.clone()),
                r.budget.clone(),
            ),
            Axis::S => (
                (String::new(), r.model.clone(), r.metric.clone()),
                format!("{:.6}", s_bucket(r.s)),
            ),
        };
        groups
            .entry(key)
            .or_default()
            .entry(x)
            .or_default()
            .entry(ai)
            .or_default()
            .push(v);
    }

    let mut written = Vec::new();
    for ((dataset, model, metric), series) in &groups {
        let stem = match axis {
            Axis::Budget => format!(
                "budget-{}-{}-{}",
                sanitize(dataset),
                sanitize(model),
                sanitize(metric)
            ),
            Axis::S => format!("s-{}-{}", sanitize(model), sanitize(metric)),
        };
        let mut xs: Vec<&String> = series.keys().collect();
        match axis {
            Axis::Budget => xs.sort_by(|a, b| {
                budget_sort_key(a)
                    .partial_cmp(&budget_sort_key(b))
                    .unwrap()
            }),
            Axis::S => xs.sort_by(|a, b| {
                a.parse::<f64>()
                    .unwrap_or(0.0)
                    .partial_cmp(&b.parse::<f64>().unwrap_or(0.0))
                    .unwrap()
            }),
        }

        let mut out = String::from("x");
        for &a in &algorithms {
            out.push_str(&format!(",{a}_mean,{a}_stderr"));
        }
        out.push('\n');
        let mut chart_series: Vec<(String, Vec<Option<f64>>)> = algorithms
            .iter()
            .map(|a| (a.to_string(), Vec::new()))
            .collect();
        for x in &xs {
            out.push_str(x);
            for (ai, _) in algorithms.iter().enumerate() {
                let empty = Vec::new();
                let vals = series[*x].get(&ai).unwrap_or(&empty);
                let (mean, stderr) = mean_stderr(vals);
                out.push(',');
                out.push_str(&fmt_opt(mean));
                out.push(',');
                out.push_str(&fmt_opt(stderr));
                chart_series[ai].1.push(mean);
            }
            out.push('\n');
        }
        let path = out_dir.join(format!("{stem}.csv"));
        fs::write(&path, &out).map_err(|e| Error::io(&path, e))?;
        written.push(path);

        if with_svg {
            let labels: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            let chart = svg::line_chart(&stem, &labels, &chart_series);
            let path = out_dir.join(format!("{stem}.svg"));
            fs::write(&path, chart).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Parses a flat `key = value` experiment config. Paths are resolved
/// relative to the config file. Recognized keys: `dataset` (repeatable,
/// `name:edges:communities[:cascades]`), `model`, `alpha`, `beta`,
/// `alpha-in`, `alpha-out`, `lomax-shape`, `tmax`, `calibrate`,
/// `algorithms`, `budgets`, `metrics`, `seeds`, `out`, `svg`, `workers`.
pub fn parse_experiment_config(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut datasets = Vec::new();
    let mut model: Option<ModelKind> = None;
    let mut params = EpidemicParams::default();
    let mut calibration = None;
    let mut algorithms = Vec::new();
    let mut budgets = Vec::new();
    let mut metrics: Vec<MetricName> = Vec::new();
    let mut seeds: Vec<u64> = Vec::new();
    let mut out_dir = base.join("results");
    let mut emit_svg = false;
    let mut workers = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, lineno, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::parse(path, lineno, format!("bad {what}: {value:?}"));
        match key {
            "dataset" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 3 && parts.len() != 4 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "dataset needs name:edges:communities[:cascades]",
                    ));
                }
                let bundle = load_dataset(parts[0], base.join(parts[1]), base.join(parts[2]))?;
                datasets.push(DatasetSpec {
                    bundle,
                    cascade_file: parts.get(3).map(|p| base.join(p)),
                });
            }
            "model" => model = Some(value.parse().map_err(|_| bad("model"))?),
            "alpha" => params.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "beta" => params.beta = value.parse().map_err(|_| bad("beta"))?,
            "alpha-in" => params.alpha_in = value.parse().map_err(|_| bad("alpha-in"))?,
            "alpha-out" => params.alpha_out = value.parse().map_err(|_| bad("alpha-out"))?,
            "lomax-shape" => params.lomax_shape = value.parse().map_err(|_| bad("lomax-shape"))?,
            "tmax" => params.t_max = value.parse().map_err(|_| bad("tmax"))?,
            "calibrate" => calibration = Some(value.parse().map_err(|_| bad("calibrate"))?),
            "algorithms" => {
                for tok in value.split(',') {
                    algorithms.push(tok.trim().parse()?);
                }
            }
            "budgets" => {
                for tok in value.split(',') {
                    budgets.push(tok.trim().parse()?);
                }
            }
            "metrics" => {
                for tok in value.split(',') {
                    metrics.push(tok.trim().parse()?);
                }
            }
            "seeds" => {
                for tok in value.split(',') {
                    seeds.push(tok.trim().parse().map_err(|_| bad("seed"))?);
                }
            }
            "out" => out_dir = base.join(value),
            "svg" => emit_svg = value.parse().map_err(|_| bad("svg flag"))?,
            "workers" => workers = Some(value.parse().map_err(|_| bad("workers"))?),
            other => {
                return Err(Error::parse(path, lineno, format!("unknown key {other:?}")));
            }
        }
    }

    let all_real = !datasets.is_empty() && datasets.iter().all(|d| d.cascade_file.is_some());
    let model = match model {
        Some(m) => m,
        None if all_real => ModelKind::SiBd, // unused: every dataset brings cascades
        None => {
            return Err(Error::Validation(
                "config must set `model` when synthetic cascades are needed".into(),
            ))
        }
    };
    if metrics.is_empty() {
        metrics = MetricName::ALL.to_vec();
    }
    if seeds.is_empty() {
        seeds.push(0);
    }
    let spec = ExperimentSpec {
        datasets,
        model,
        params,
        calibration,
        algorithms,
        budgets,
        metrics,
        seeds,
        out_dir,
        emit_svg,
        workers,
    };
    spec.validate()?;
    Ok(spec)
}
