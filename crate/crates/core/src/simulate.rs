//! Epidemic cascade simulators and target-statistic calibration.
//!
//! All three models run the same event-driven engine: when a node becomes
//! infected it draws keyed exponential clocks toward its potential targets
//! and the earliest pending arrival fires next. Keyed draws (see
//! [`crate::rng`]) make runs reproducible, parallel across cascades, and
//! pointwise monotone in the rate parameters under a shared seed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cascade::{Cascade, CascadeSet};
use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::rng::{self, tag};

/// Cascade model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Sir,
    SiBd,
    CSiBd,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Sir => "sir",
            ModelKind::SiBd => "si-bd",
            ModelKind::CSiBd => "c-si-bd",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        match s {
            "sir" => Ok(ModelKind::Sir),
            "si-bd" => Ok(ModelKind::SiBd),
            "c-si-bd" => Ok(ModelKind::CSiBd),
            other => Err(Error::Validation(format!("unknown model {other:?}"))),
        }
    }
}

/// Rate parameters shared by the cascade models. Only the fields relevant to
/// a model are read: `alpha`, `beta` and `lomax_shape` for SIR, `alpha` and
/// `t_max` for SI-BD, `alpha_in`, `alpha_out` and `t_max` for C-SI-BD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpidemicParams {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_in: f64,
    pub alpha_out: f64,
    /// Shape of the per-cascade rate multiplier; the scale is shape - 1 so
    /// the multiplier has unit mean. Requires shape > 1.
    pub lomax_shape: f64,
    pub t_max: f64,
}

impl Default for EpidemicParams {
    fn default() -> EpidemicParams {
        EpidemicParams {
            alpha: 0.1,
            beta: 1.0,
            alpha_in: 0.1,
            alpha_out: 0.01,
            lomax_shape: 12.0,
            t_max: 1.0,
        }
    }
}

impl EpidemicParams {
    pub fn sir(alpha: f64, lomax_shape: f64) -> EpidemicParams {
        EpidemicParams {
            alpha,
            lomax_shape,
            ..EpidemicParams::default()
        }
    }

    pub fn si_bd(alpha: f64) -> EpidemicParams {
        EpidemicParams {
            alpha,
            ..EpidemicParams::default()
        }
    }

    pub fn c_si_bd(alpha_in: f64, alpha_out: f64) -> EpidemicParams {
        EpidemicParams {
            alpha_in,
            alpha_out,
            ..EpidemicParams::default()
        }
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        match kind {
            ModelKind::Sir => {
                pos("alpha", self.alpha)?;
                pos("beta", self.beta)?;
                if !(self.lomax_shape > 1.0) {
                    return Err(Error::Domain(format!(
                        "lomax shape must exceed 1 for a unit-mean multiplier, got {}",
                        self.lomax_shape
                    )));
                }
            }
            ModelKind::SiBd => {
                pos("alpha", self.alpha)?;
                pos("t_max", self.t_max)?;
            }
            ModelKind::CSiBd => {
                pos("alpha_in", self.alpha_in)?;
                pos("t_max", self.t_max)?;
                if !(self.alpha_out.is_finite() && self.alpha_out >= 0.0) {
                    return Err(Error::Domain(format!(
                        "alpha_out must be non-negative, got {}",
                        self.alpha_out
                    )));
                }
                if self.alpha_out > self.alpha_in {
                    return Err(Error::Domain(format!(
                        "alpha_out ({}) must not exceed alpha_in ({})",
                        self.alpha_out, self.alpha_in
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A cascade model bound to the structure it spreads on.
#[derive(Clone, Copy, Debug)]
pub enum Model<'a> {
    Sir(&'a Graph),
    SiBd(&'a Graph),
    /// Spreading on the complete graph with rates set by community
    /// co-membership in the given ground truth.
    CSiBd(&'a Partition),
}

impl<'a> Model<'a> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Sir(_) => ModelKind::Sir,
            Model::SiBd(_) => ModelKind::SiBd,
            Model::CSiBd(_) => ModelKind::CSiBd,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Model::Sir(g) | Model::SiBd(g) => g.node_count(),
            Model::CSiBd(p) => p.len(),
        }
    }
}

/// Pending arrival; min-heap order by (time, target, source) so simultaneous
/// events process in node-id order.
#[derive(Copy, Clone, Debug)]
struct Arrival {
    t: f64,
    target: u32,
    source: u32,
}

impl PartialEq for Arrival {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Arrival {}
impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the earliest arrival
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.target.cmp(&self.target))
            .then_with(|| other.source.cmp(&self.source))
    }
}

/// Unit-mean Lomax multiplier: shape `k`, scale `k - 1`, inverse-CDF sample.
fn lomax_multiplier(seed: u64, shape: f64) -> f64 {
    let u = rng::unit_uniform(seed, &[tag::LOMAX]);
    (shape - 1.0) * (u.powf(-1.0 / shape) - 1.0)
}

struct Run {
    events: Vec<(u32, f64)>,
    transmissions: Vec<(u32, u32)>,
}

/// Shared engine. `horizon` cuts arrivals at t >= horizon; `recovery` draws
/// a per-node infectious window.
fn drive<F>(n: usize, seed: u64, source: u32, horizon: Option<f64>, recovery: Option<f64>, rate: F) -> Run
where
    F: Fn(u32, u32) -> f64,
{
    let mut infected = vec![false; n];
    let mut heap: BinaryHeap<Arrival> = BinaryHeap::new();
    let mut events = Vec::new();
    let mut transmissions = Vec::new();

    let mut infect = |v: u32,
                      t: f64,
                      infected: &mut Vec<bool>,
                      heap: &mut BinaryHeap<Arrival>| {
        infected[v as usize] = true;
        events.push((v, t));
        let window = recovery.map(|beta| rng::unit_exp(seed, &[tag::RECOVERY, v as u64]) / beta);
        for u in 0..n as u32 {
            if infected[u as usize] {
                continue;
            }
            let r = rate(v, u);
            if r <= 0.0 {
                continue;
            }
            let d = rng::unit_exp(seed, &[tag::TRANSMIT, v as u64, u as u64]) / r;
            if let Some(w) = window {
                if d >= w {
                    continue;
                }
            }
            let at = t + d;
            if let Some(h) = horizon {
                if at >= h {
                    continue;
                }
            }
            heap.push(Arrival {
                t: at,
                target: u,
                source: v,
            });
        }
    };

    infect(source, 0.0, &mut infected, &mut heap);
    while let Some(a) = heap.pop() {
        if infected[a.target as usize] {
            continue;
        }
        transmissions.push((a.source, a.target));
        infect(a.target, a.t, &mut infected, &mut heap);
    }
    Run {
        events,
        transmissions,
    }
}

/// Graph-structured variant of [`drive`] that only clocks actual neighbors.
fn drive_graph(
    g: &Graph,
    seed: u64,
    source: u32,
    rate: f64,
    horizon: Option<f64>,
    recovery: Option<f64>,
) -> Run {
    let n = g.node_count();
    let mut infected = vec![false; n];
    let mut heap: BinaryHeap<Arrival> = BinaryHeap::new();
    let mut events = Vec::new();
    let mut transmissions = Vec::new();

    let mut infect = |v: u32,
                      t: f64,
                      infected: &mut Vec<bool>,
                      heap: &mut BinaryHeap<Arrival>| {
        infected[v as usize] = true;
        events.push((v, t));
        let window = recovery.map(|beta| rng::unit_exp(seed, &[tag::RECOVERY, v as u64]) / beta);
        for &(u, _) in g.neighbors(v) {
            if infected[u as usize] {
                continue;
            }
            let d = rng::unit_exp(seed, &[tag::TRANSMIT, v as u64, u as u64]) / rate;
            if let Some(w) = window {
                if d >= w {
                    continue;
                }
            }
            let at = t + d;
            if let Some(h) = horizon {
                if at >= h {
                    continue;
                }
            }
            heap.push(Arrival {
                t: at,
                target: u,
                source: v,
            });
        }
    };

    infect(source, 0.0, &mut infected, &mut heap);
    while let Some(a) = heap.pop() {
        if infected[a.target as usize] {
            continue;
        }
        transmissions.push((a.source, a.target));
        infect(a.target, a.t, &mut infected, &mut heap);
    }
    Run {
        events,
        transmissions,
    }
}

/// One SIR cascade: a uniform source, a per-cascade rate `alpha` times a
/// unit-mean Lomax multiplier, and exponential recovery at rate `beta`.
/// Returns the cascade and its transmission tree.
pub fn simulate_sir(g: &Graph, params: &EpidemicParams, seed: u64) -> Result<(Cascade, Vec<(u32, u32)>)> {
    params.validate(ModelKind::Sir)?;
    if g.node_count() == 0 {
        return Err(Error::EmptyInput("graph"));
    }
    let source = rng::uniform_index(seed, &[tag::SOURCE], g.node_count()) as u32;
    let alpha_c = params.alpha * lomax_multiplier(seed, params.lomax_shape);
    let run = drive_graph(g, seed, source, alpha_c, None, Some(params.beta));
    Ok((Cascade::new(run.events)?, run.transmissions))
}

/// One SI cascade with a bounded duration: no recovery, all infections
/// strictly before `t_max`.
pub fn simulate_si_bd(g: &Graph, params: &EpidemicParams, seed: u64) -> Result<(Cascade, Vec<(u32, u32)>)> {
    params.validate(ModelKind::SiBd)?;
    if g.node_count() == 0 {
        return Err(Error::EmptyInput("graph"));
    }
    let source = rng::uniform_index(seed, &[tag::SOURCE], g.node_count()) as u32;
    let run = drive_graph(g, seed, source, params.alpha, Some(params.t_max), None);
    Ok((Cascade::new(run.events)?, run.transmissions))
}

/// One community-structured SI cascade on the complete graph: rate
/// `alpha_in` toward nodes sharing the source's community, `alpha_out`
/// otherwise, bounded duration `t_max`.
pub fn simulate_c_si_bd(gt: &Partition, params: &EpidemicParams, seed: u64) -> Result<Cascade> {
    params.validate(ModelKind::CSiBd)?;
    if gt.is_empty() {
        return Err(Error::EmptyInput("ground truth partition"));
    }
    let n = gt.len();
    let source = rng::uniform_index(seed, &[tag::SOURCE], n) as u32;
    let labels = gt.labels();
    let run = drive(
        n,
        seed,
        source,
        Some(params.t_max),
        None,
        |v, u| {
            if labels[v as usize] == labels[u as usize] {
                params.alpha_in
            } else {
                params.alpha_out
            }
        },
    );
    Ok(Cascade::new(run.events)?)
}

/// Generates `count` cascades in parallel with per-cascade seeds derived
/// from `master_seed` by cascade index. Transmission trees are attached for
/// the graph-structured models; node labels are copied from the graph.
pub fn generate_set(model: &Model, params: &EpidemicParams, count: usize, master_seed: u64) -> Result<CascadeSet> {
    params.validate(model.kind())?;
    let runs: Result<Vec<(Cascade, Option<Vec<(u32, u32)>>)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = rng::cascade_seed(master_seed, i);
            match model {
                Model::Sir(g) => simulate_sir(g, params, seed).map(|(c, t)| (c, Some(t))),
                Model::SiBd(g) => simulate_si_bd(g, params, seed).map(|(c, t)| (c, Some(t))),
                Model::CSiBd(p) => simulate_c_si_bd(p, params, seed).map(|c| (c, None)),
            }
        })
        .collect();
    let runs = runs?;
    let with_trees = matches!(model, Model::Sir(_) | Model::SiBd(_));
    let mut cascades = Vec::with_capacity(runs.len());
    let mut trees = Vec::with_capacity(runs.len());
    for (c, t) in runs {
        cascades.push(c);
        if with_trees {
            trees.push(t.unwrap());
        }
    }
    let set = CascadeSet::new(cascades, if with_trees { Some(trees) } else { None })?;
    Ok(match model {
        Model::Sir(g) | Model::SiBd(g) => match g.labels() {
            Some(l) => set.with_labels(l.to_vec()),
            None => set,
        },
        Model::CSiBd(_) => set,
    })
}

/// Statistic a calibration run drives toward its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibrationTarget {
    /// Mean cascade size (singletons included) of 2.
    MeanSizeTwo,
    /// Fraction of single-node cascades of 20%.
    SingletonFifth,
}

impl CalibrationTarget {
    fn value(&self) -> f64 {
        match self {
            CalibrationTarget::MeanSizeTwo => 2.0,
            CalibrationTarget::SingletonFifth => 0.2,
        }
    }

    /// Whether the statistic increases with the free rate.
    fn increasing(&self) -> bool {
        matches!(self, CalibrationTarget::MeanSizeTwo)
    }

    fn measure(&self, cs: &CascadeSet) -> f64 {
        match self {
            CalibrationTarget::MeanSizeTwo => {
                cs.cascades().iter().map(|c| c.len()).sum::<usize>() as f64 / cs.len() as f64
            }
            CalibrationTarget::SingletonFifth => {
                cs.cascades().iter().filter(|c| c.len() == 1).count() as f64 / cs.len() as f64
            }
        }
    }
}

impl FromStr for CalibrationTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<CalibrationTarget> {
        match s {
            "mean-size-2" => Ok(CalibrationTarget::MeanSizeTwo),
            "singleton-20pct" => Ok(CalibrationTarget::SingletonFifth),
            other => Err(Error::Validation(format!("unknown calibration target {other:?}"))),
        }
    }
}

/// Cascades per probe during calibration.
pub const CALIBRATION_PROBES: usize = 2000;
/// Relative tolerance on the calibration target.
pub const CALIBRATION_TOL: f64 = 0.1;
/// For C-SI-BD calibration the within rate is pinned to ten times the
/// across rate and only the across rate is searched.
pub const CSIBD_RATE_RATIO: f64 = 10.0;

/// Finds the free rate (SIR and SI-BD: `alpha`; C-SI-BD: `alpha_out`, with
/// `alpha_in = 10 * alpha_out`) that hits the target statistic within 10%
/// relative tolerance, by geometric bisection over Monte Carlo probes with
/// common random numbers.
pub fn calibrate(
    model: &Model,
    base: &EpidemicParams,
    target: CalibrationTarget,
    seed: u64,
) -> Result<EpidemicParams> {
    let probe_seed = rng::mix(seed, &[0xCA11B]);
    let apply = |x: f64| -> EpidemicParams {
        let mut p = *base;
        match model.kind() {
            ModelKind::Sir | ModelKind::SiBd => p.alpha = x,
            ModelKind::CSiBd => {
                p.alpha_out = x;
                p.alpha_in = CSIBD_RATE_RATIO * x;
            }
        }
        p
    };
    let stat = |x: f64| -> Result<f64> {
        let cs = generate_set(model, &apply(x), CALIBRATION_PROBES, probe_seed)?;
        Ok(target.measure(&cs))
    };
    let goal = target.value();
    let tol = CALIBRATION_TOL * goal;
    let sign = if target.increasing() { 1.0 } else { -1.0 };

    let x0 = match model.kind() {
        ModelKind::Sir | ModelKind::SiBd => {
            if base.alpha > 0.0 {
                base.alpha
            } else {
                0.1
            }
        }
        ModelKind::CSiBd => {
            if base.alpha_out > 0.0 {
                base.alpha_out
            } else {
                0.01
            }
        }
    };

    let mut lo = x0;
    let mut f_lo = stat(lo)?;
    if (f_lo - goal).abs() <= tol {
        log::info!("calibration hit {f_lo:.4} at rate {lo} immediately");
        return Ok(apply(lo));
    }
    let mut hi = lo;
    let mut f_hi = f_lo;
    let mut guard = 0;
    while sign * (f_lo - goal) > 0.0 {
        lo /= 2.0;
        f_lo = stat(lo)?;
        if (f_lo - goal).abs() <= tol {
            return Ok(apply(lo));
        }
        guard += 1;
        if guard > 80 {
            return Err(Error::CalibrationFailure(format!(
                "statistic stuck at {f_lo:.4} while lowering the rate toward {goal}"
            )));
        }
    }
    guard = 0;
    while sign * (f_hi - goal) < 0.0 {
        hi *= 2.0;
        f_hi = stat(hi)?;
        if (f_hi - goal).abs() <= tol {
            return Ok(apply(hi));
        }
        guard += 1;
        if guard > 80 {
            return Err(Error::CalibrationFailure(format!(
                "statistic saturates at {f_hi:.4}, target {goal} unreachable"
            )));
        }
    }

    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        let f_mid = stat(mid)?;
        if (f_mid - goal).abs() <= tol {
            log::info!("calibrated rate {mid} with statistic {f_mid:.4} (target {goal})");
            return Ok(apply(mid));
        }
        if sign * (f_mid - goal) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::CalibrationFailure(format!(
        "bisection did not reach {goal} within tolerance"
    )))
}
