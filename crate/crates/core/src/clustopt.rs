//! Infection-time likelihood of a two-rate spreading process and the
//! community refinement built on it.
//!
//! Under the model, an infected node transmits to a not-yet-infected one at
//! rate `alpha_in` when they share a community and `alpha_out` otherwise,
//! within a per-cascade window estimated from the event times. The log
//! likelihood of a partition decomposes into pairwise time-gap sums plus
//! one log term per mid-window event, which makes single-node community
//! moves cheap to score incrementally.
//!
//! The full pipeline ([`clust_opt`]): detect initial communities on the
//! order-only surrogate graph, fit the two rates by profile likelihood over
//! the rate ratio, then greedily move nodes between communities of
//! co-infected peers while the likelihood at the fitted rates improves.

use std::collections::HashMap;

use crate::cascade::{estimate_tmax, CascadeSet};
use crate::error::{Error, Result};
use crate::graph::SubPartition;
use crate::louvain::{optimize_moves, MoveObjective};
use crate::rng;
use crate::surrogate::{self, CliqueRate, Method};

/// Relative width at which the rate-ratio line search stops.
pub const RATIO_TOL: f64 = 1e-4;

/// Fitted transmission rates. `delta` is the ratio offset,
/// `alpha_in = (delta + 1) * alpha_out`; `log_likelihood` is the value at
/// the fitted rates for the partition the fit was given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub alpha_in: f64,
    pub alpha_out: f64,
    pub delta: f64,
    pub log_likelihood: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClustOptConfig {
    /// Also charge observed-but-uninfected nodes for each cascade, placed
    /// at the end of its window. They enter the pairwise gap sums only.
    /// Cascades too short to estimate a window are skipped entirely.
    pub include_uninfected: bool,
}

#[derive(Clone, Debug)]
pub struct ClustOptResult {
    pub partition: SubPartition,
    pub rates: RateEstimate,
}

#[derive(Clone, Copy)]
struct Ev {
    /// dense index into the observed node list
    node: u32,
    t: f64,
    /// strictly earlier events in the same cascade
    ntot: u32,
    /// true when t lies strictly inside (0, window)
    log_term: bool,
}

/// Precomputed, partition-independent view of a cascade set.
struct Ctx {
    casc: Vec<Vec<Ev>>,
    window: Vec<f64>,
    /// dense node -> (cascade, event index) appearances
    node_events: Vec<Vec<(u32, u32)>>,
    nodes: Vec<u32>,
    /// all-pairs gap sum, including uninfected terms when enabled
    s_all: f64,
    /// number of log-term events
    m: usize,
    include_uninfected: bool,
    n_communities: usize,
}

impl Ctx {
    fn new(cs: &CascadeSet, sp: &SubPartition, include_uninfected: bool) -> Result<(Ctx, Vec<u32>)> {
        if cs.len() == 0 {
            return Err(Error::EmptyInput("cascade set"));
        }
        let nodes = cs.observed_nodes();
        let mut membership = Vec::with_capacity(nodes.len());
        for &v in &nodes {
            match sp.community_of_node(v) {
                Some(c) => membership.push(c),
                None => {
                    return Err(Error::Validation(format!(
                        "partition does not cover observed node {v}"
                    )))
                }
            }
        }
        let dense = |v: u32| nodes.binary_search(&v).expect("observed") as u32;

        let mut casc = Vec::with_capacity(cs.len());
        let mut window = Vec::with_capacity(cs.len());
        let mut node_events: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nodes.len()];
        let mut s_all = 0.0f64;
        let mut m = 0usize;
        for (ci, c) in cs.cascades().iter().enumerate() {
            let raw = c.events();
            let w = if raw.len() >= 2 { estimate_tmax(c)? } else { 0.0 };
            let mut evs = Vec::with_capacity(raw.len());
            let mut first_at_t = 0usize;
            let mut prefix = 0.0f64;
            let mut uninfected_gap = 0.0f64;
            for (j, &(v, t)) in raw.iter().enumerate() {
                if t > raw[first_at_t].1 {
                    first_at_t = j;
                }
                let log_term = t > 0.0 && t < w;
                if log_term {
                    m += 1;
                }
                evs.push(Ev {
                    node: dense(v),
                    t,
                    ntot: first_at_t as u32,
                    log_term,
                });
                node_events[dense(v) as usize].push((ci as u32, j as u32));
                s_all += j as f64 * t - prefix;
                prefix += t;
                uninfected_gap += w - t;
            }
            if include_uninfected && raw.len() >= 2 {
                s_all += (nodes.len() - raw.len()) as f64 * uninfected_gap;
            }
            casc.push(evs);
            window.push(w);
        }
        // first_at_t tracks the first index holding the current time value,
        // which for time-sorted events is exactly the strict-predecessor
        // count of everything at that time
        let ctx = Ctx {
            casc,
            window,
            node_events,
            nodes,
            s_all,
            m,
            include_uninfected,
            n_communities: sp.partition().community_count() as usize,
        };
        Ok((ctx, membership))
    }

    /// Same-community pair gap sum under `labels`, including the uninfected
    /// terms when enabled.
    fn s_same(&self, labels: &[u32]) -> f64 {
        let mut total = 0.0f64;
        let mut sizes = vec![0u32; self.n_communities];
        if self.include_uninfected {
            for &l in labels {
                sizes[l as usize] += 1;
            }
        }
        let mut count: HashMap<u32, (f64, f64, f64)> = HashMap::new(); // c -> (n, prefix, w_sum)
        for (ci, evs) in self.casc.iter().enumerate() {
            count.clear();
            let w = self.window[ci];
            for e in evs {
                let c = labels[e.node as usize];
                let entry = count.entry(c).or_insert((0.0, 0.0, 0.0));
                total += entry.0 * e.t - entry.1;
                entry.0 += 1.0;
                entry.1 += e.t;
                entry.2 += w - e.t;
            }
            if self.include_uninfected && evs.len() >= 2 {
                for (&c, &(n, _, wsum)) in count.iter() {
                    let outside = sizes[c as usize] - n as u32;
                    total += outside as f64 * wsum;
                }
            }
        }
        total
    }

    /// (same-community predecessors, all predecessors) per log-term event.
    fn log_event_counts(&self, labels: &[u32]) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m);
        let mut seen = vec![0u32; self.n_communities];
        let mut touched: Vec<u32> = Vec::new();
        for evs in &self.casc {
            for &c in &touched {
                seen[c as usize] = 0;
            }
            touched.clear();
            let mut i = 0usize; // strict predecessors folded in so far
            for (j, e) in evs.iter().enumerate() {
                while i < j && evs[i].t < e.t {
                    let c = labels[evs[i].node as usize];
                    if seen[c as usize] == 0 {
                        touched.push(c);
                    }
                    seen[c as usize] += 1;
                    i += 1;
                }
                if e.log_term {
                    out.push((seen[labels[e.node as usize] as usize], e.ntot));
                }
            }
        }
        out
    }

    fn log_likelihood_at(&self, labels: &[u32], alpha_in: f64, alpha_out: f64) -> f64 {
        let ad = alpha_in - alpha_out;
        let mut ll = -ad * self.s_same(labels) - alpha_out * self.s_all;
        for (ns, nt) in self.log_event_counts(labels) {
            ll += (ad * ns as f64 + alpha_out * nt as f64).ln();
        }
        ll
    }
}

fn check_rates(alpha_in: f64, alpha_out: f64) -> Result<()> {
    if !(alpha_in.is_finite() && alpha_out.is_finite()) {
        return Err(Error::Domain("rates must be finite".into()));
    }
    if alpha_out <= 0.0 {
        return Err(Error::Domain(format!(
            "alpha_out must be positive, got {alpha_out}"
        )));
    }
    if alpha_out > alpha_in {
        return Err(Error::Domain(format!(
            "alpha_out ({alpha_out}) must not exceed alpha_in ({alpha_in})"
        )));
    }
    Ok(())
}

/// Log likelihood of `sp` on `cs` at the given rates. The partition must
/// cover every observed node; it may cover more.
pub fn log_likelihood(cs: &CascadeSet, sp: &SubPartition, alpha_in: f64, alpha_out: f64) -> Result<f64> {
    log_likelihood_with(cs, sp, alpha_in, alpha_out, false)
}

pub fn log_likelihood_with(
    cs: &CascadeSet,
    sp: &SubPartition,
    alpha_in: f64,
    alpha_out: f64,
    include_uninfected: bool,
) -> Result<f64> {
    check_rates(alpha_in, alpha_out)?;
    let (ctx, labels) = Ctx::new(cs, sp, include_uninfected)?;
    Ok(ctx.log_likelihood_at(&labels, alpha_in, alpha_out))
}

/// The transmission rate toward different-community nodes that maximizes
/// the likelihood for a fixed ratio offset `delta`: total transmissions
/// divided by the ratio-weighted gap sums.
pub fn optimal_alpha_out(cs: &CascadeSet, sp: &SubPartition, delta: f64) -> Result<f64> {
    optimal_alpha_out_with(cs, sp, delta, false)
}

pub fn optimal_alpha_out_with(
    cs: &CascadeSet,
    sp: &SubPartition,
    delta: f64,
    include_uninfected: bool,
) -> Result<f64> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
    }
    let (ctx, labels) = Ctx::new(cs, sp, include_uninfected)?;
    let denom = delta * ctx.s_same(&labels) + ctx.s_all;
    if denom <= 0.0 {
        return Err(Error::DegenerateInput(
            "all event time gaps are zero; the rate scale is unidentifiable".into(),
        ));
    }
    Ok(cs.transmission_count() as f64 / denom)
}

/// Golden-section maximization on [lo, hi].
fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > rel_tol * hi.max(1e-2) {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum-likelihood rates for a fixed partition. The search runs over
/// the ratio offset `delta = alpha_in / alpha_out - 1 >= 0`; for each
/// `delta` the scale has the closed form
/// `alpha_out = m / (delta * s_same + s_all)`.
pub fn fit_rates(cs: &CascadeSet, sp: &SubPartition) -> Result<RateEstimate> {
    fit_rates_with(cs, sp, false)
}

pub fn fit_rates_with(cs: &CascadeSet, sp: &SubPartition, include_uninfected: bool) -> Result<RateEstimate> {
    if cs.len() == 0 {
        return Err(Error::FitFailure("empty cascade set".into()));
    }
    let (ctx, labels) = Ctx::new(cs, sp, include_uninfected)?;
    if ctx.m == 0 {
        return Err(Error::DegenerateInput(
            "no event falls strictly inside an estimation window".into(),
        ));
    }
    let s_same = ctx.s_same(&labels);
    let counts = ctx.log_event_counts(&labels);
    let m = ctx.m as f64;
    let t = cs.transmission_count() as f64;
    if ctx.s_all <= 0.0 {
        return Err(Error::DegenerateInput(
            "all event time gaps are zero; the rate scale is unidentifiable".into(),
        ));
    }
    // value of the likelihood at the closed-form scale for this offset
    let profile = |delta: f64| -> f64 {
        let d = delta * s_same + ctx.s_all;
        let mut v = m * (t / d).ln() - t;
        for &(ns, nt) in &counts {
            v += (delta * ns as f64 + nt as f64).ln();
        }
        v
    };

    // improvements below this are treated as ties, resolved toward the
    // smaller ratio; a flat profile (single community) then reports 0
    let better = |candidate: f64, incumbent: f64| -> bool {
        candidate.is_finite() && candidate > incumbent + 1e-9 * (1.0 + incumbent.abs())
    };

    let mut grid = vec![0.0f64];
    grid.extend((0..=20u32).map(|k| 0.01 * f64::from(1u32 << k)));
    let values: Vec<f64> = grid.iter().map(|&d| profile(d)).collect();
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |b| better(v, values[b])) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        Error::FitFailure("likelihood is not finite anywhere on the ratio grid".into())
    })?;
    if best == grid.len() - 1 {
        log::warn!(
            "rate ratio search hit the upper grid boundary (delta = {}); estimate may be truncated",
            grid[best]
        );
    }
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = if best == grid.len() - 1 { grid[best] } else { grid[best + 1] };
    let (gx, gv) = golden_max(|d| profile(d), lo, hi, RATIO_TOL);

    let mut delta = 0.0;
    let mut val = profile(0.0);
    for (d, v) in [(grid[best], values[best]), (gx, gv)] {
        if better(v, val) {
            delta = d;
            val = v;
        }
    }
    let alpha_out = t / (delta * s_same + ctx.s_all);
    Ok(RateEstimate {
        alpha_in: (delta + 1.0) * alpha_out,
        alpha_out,
        delta,
        log_likelihood: val,
    })
}

/// Changes `apply` must make to the cached predecessor counts.
struct MovePlan {
    delta: f64,
    bump: Vec<(u32, u32, i32)>,
    own: Vec<(u32, u32, u32)>,
}

/// Likelihood at fixed rates as a move objective over the observed nodes.
pub struct LikelihoodObjective {
    ctx: Ctx,
    labels: Vec<u32>,
    /// same-community strict-predecessor count per event, kept in step
    /// with `labels`
    nsame: Vec<Vec<u32>>,
    alpha_diff: f64,
    alpha_out: f64,
    // aggregates for the uninfected terms
    comm_sizes: Vec<u32>,
    /// per cascade: community -> (member events, sum of window - t)
    by_comm: Vec<HashMap<u32, (u32, f64)>>,
    /// community -> sum of by_comm gap sums over all cascades
    g_total: Vec<f64>,
}

impl LikelihoodObjective {
    pub fn new(cs: &CascadeSet, sp: &SubPartition, rates: &RateEstimate) -> Result<LikelihoodObjective> {
        LikelihoodObjective::with_config(cs, sp, rates, &ClustOptConfig::default())
    }

    pub fn with_config(
        cs: &CascadeSet,
        sp: &SubPartition,
        rates: &RateEstimate,
        config: &ClustOptConfig,
    ) -> Result<LikelihoodObjective> {
        check_rates(rates.alpha_in, rates.alpha_out)?;
        let (ctx, labels) = Ctx::new(cs, sp, config.include_uninfected)?;
        let mut nsame: Vec<Vec<u32>> = Vec::with_capacity(ctx.casc.len());
        {
            let counts = ctx.log_event_counts(&labels);
            // log_event_counts only reports log-term events; rebuild the
            // full per-event table with the same scan
            let mut seen = vec![0u32; ctx.n_communities];
            let mut touched: Vec<u32> = Vec::new();
            for evs in &ctx.casc {
                for &c in &touched {
                    seen[c as usize] = 0;
                }
                touched.clear();
                let mut i = 0usize;
                let mut row = Vec::with_capacity(evs.len());
                for (j, e) in evs.iter().enumerate() {
                    while i < j && evs[i].t < e.t {
                        let c = labels[evs[i].node as usize];
                        if seen[c as usize] == 0 {
                            touched.push(c);
                        }
                        seen[c as usize] += 1;
                        i += 1;
                    }
                    row.push(seen[labels[e.node as usize] as usize]);
                }
                nsame.push(row);
            }
            debug_assert_eq!(
                counts.len(),
                nsame
                    .iter()
                    .zip(&ctx.casc)
                    .map(|(_, evs)| evs.iter().filter(|e| e.log_term).count())
                    .sum::<usize>()
            );
        }
        let mut comm_sizes = vec![0u32; ctx.n_communities];
        for &l in &labels {
            comm_sizes[l as usize] += 1;
        }
        let mut by_comm: Vec<HashMap<u32, (u32, f64)>> = Vec::with_capacity(ctx.casc.len());
        let mut g_total = vec![0.0f64; ctx.n_communities];
        for (ci, evs) in ctx.casc.iter().enumerate() {
            let mut map: HashMap<u32, (u32, f64)> = HashMap::new();
            if evs.len() >= 2 {
                let w = ctx.window[ci];
                for e in evs {
                    let c = labels[e.node as usize];
                    let entry = map.entry(c).or_insert((0, 0.0));
                    entry.0 += 1;
                    entry.1 += w - e.t;
                    g_total[c as usize] += w - e.t;
                }
            }
            by_comm.push(map);
        }
        Ok(LikelihoodObjective {
            ctx,
            labels,
            nsame,
            alpha_diff: rates.alpha_in - rates.alpha_out,
            alpha_out: rates.alpha_out,
            comm_sizes,
            by_comm,
            g_total,
        })
    }

    pub fn into_subpartition(self) -> Result<SubPartition> {
        SubPartition::new(self.ctx.nodes, self.labels)
    }

    fn plan(&self, v: u32, b: u32) -> MovePlan {
        let a = self.labels[v as usize];
        let mut plan = MovePlan {
            delta: 0.0,
            bump: Vec::new(),
            own: Vec::new(),
        };
        if a == b {
            return plan;
        }
        let ad = self.alpha_diff;
        let ao = self.alpha_out;
        let mut d_same = 0.0f64;
        let mut d_log = 0.0f64;
        let mut wv_a = 0.0f64;
        let mut wv_b = 0.0f64;
        for &(ci, ei) in &self.ctx.node_events[v as usize] {
            let evs = &self.ctx.casc[ci as usize];
            let me = evs[ei as usize];
            let mut preds_b = 0u32;
            for (k, e) in evs.iter().enumerate() {
                if k == ei as usize {
                    continue;
                }
                let c = self.labels[e.node as usize];
                let gap = (e.t - me.t).abs();
                if c == b {
                    d_same += gap;
                    if e.t < me.t {
                        preds_b += 1;
                    }
                } else if c == a {
                    d_same -= gap;
                }
                if e.t > me.t && (c == a || c == b) {
                    let dir = if c == a { -1i32 } else { 1i32 };
                    if e.log_term {
                        let cur = self.nsame[ci as usize][k] as f64;
                        let new = cur + dir as f64;
                        d_log += (ad * new + ao * e.ntot as f64).ln()
                            - (ad * cur + ao * e.ntot as f64).ln();
                    }
                    plan.bump.push((ci, k as u32, dir));
                }
            }
            if me.log_term {
                let cur = self.nsame[ci as usize][ei as usize] as f64;
                d_log += (ad * preds_b as f64 + ao * me.ntot as f64).ln()
                    - (ad * cur + ao * me.ntot as f64).ln();
            }
            plan.own.push((ci, ei, preds_b));
            if self.ctx.include_uninfected && evs.len() >= 2 {
                let w = self.ctx.window[ci as usize];
                let in_a = self.by_comm[ci as usize].get(&a).map_or(0, |e| e.0);
                let in_b = self.by_comm[ci as usize].get(&b).map_or(0, |e| e.0);
                let out_a = self.comm_sizes[a as usize] - in_a;
                let out_b = self.comm_sizes[b as usize] - in_b;
                d_same += (w - me.t) * (out_b as f64 - out_a as f64);
                wv_a += self.by_comm[ci as usize].get(&a).map_or(0.0, |e| e.1);
                wv_b += self.by_comm[ci as usize].get(&b).map_or(0.0, |e| e.1);
            }
        }
        if self.ctx.include_uninfected {
            d_same += (self.g_total[b as usize] - wv_b) - (self.g_total[a as usize] - wv_a);
        }
        plan.delta = -ad * d_same + d_log;
        plan
    }
}

impl MoveObjective for LikelihoodObjective {
    fn node_count(&self) -> usize {
        self.ctx.nodes.len()
    }

    fn community_of(&self, v: u32) -> u32 {
        self.labels[v as usize]
    }

    fn candidates(&self, v: u32) -> Vec<u32> {
        let mut cs: Vec<u32> = self.ctx.node_events[v as usize]
            .iter()
            .flat_map(|&(ci, _)| self.ctx.casc[ci as usize].iter())
            .map(|e| self.labels[e.node as usize])
            .collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    fn gain(&self, v: u32, to: u32) -> f64 {
        self.plan(v, to).delta
    }

    fn apply(&mut self, v: u32, to: u32) {
        let a = self.labels[v as usize];
        if a == to {
            return;
        }
        let plan = self.plan(v, to);
        for (ci, k, dir) in plan.bump {
            let cell = &mut self.nsame[ci as usize][k as usize];
            *cell = (*cell as i64 + dir as i64) as u32;
        }
        for (ci, ei, val) in plan.own {
            self.nsame[ci as usize][ei as usize] = val;
        }
        for &(ci, ei) in &self.ctx.node_events[v as usize] {
            let evs = &self.ctx.casc[ci as usize];
            if evs.len() < 2 {
                continue;
            }
            let w = self.ctx.window[ci as usize];
            let gap = w - evs[ei as usize].t;
            let from = self.by_comm[ci as usize].get_mut(&a).expect("member");
            from.0 -= 1;
            from.1 -= gap;
            let into = self.by_comm[ci as usize].entry(to).or_insert((0, 0.0));
            into.0 += 1;
            into.1 += gap;
            self.g_total[a as usize] -= gap;
            self.g_total[to as usize] += gap;
        }
        self.comm_sizes[a as usize] -= 1;
        self.comm_sizes[to as usize] += 1;
        self.labels[v as usize] = to;
    }

    fn objective(&self) -> f64 {
        self.ctx
            .log_likelihood_at(&self.labels, self.alpha_diff + self.alpha_out, self.alpha_out)
    }
}

/// Community detection by likelihood refinement: order-only surrogate
/// detection for the start, rate fit on that start, then greedy single-node
/// moves between communities of co-infected nodes.
pub fn clust_opt(cs: &CascadeSet, seed: u64) -> Result<ClustOptResult> {
    clust_opt_with(cs, &ClustOptConfig::default(), seed)
}

pub fn clust_opt_with(cs: &CascadeSet, config: &ClustOptConfig, seed: u64) -> Result<ClustOptResult> {
    let init = surrogate::detect(cs, Method::Clique(CliqueRate::Zero), rng::mix(seed, &[0xC0]))?;
    let rates = fit_rates_with(cs, &init, config.include_uninfected)?;
    if rates.alpha_in <= rates.alpha_out {
        // no community signal in the rates; moves cannot change the value
        return Ok(ClustOptResult {
            partition: init,
            rates,
        });
    }
    let mut obj = LikelihoodObjective::with_config(cs, &init, &rates, config)?;
    let moved = optimize_moves(&mut obj, rng::mix(seed, &[0xC1]));
    log::debug!("likelihood refinement applied {moved} moves");
    Ok(ClustOptResult {
        partition: obj.into_subpartition()?,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::Cascade;

    fn set(cascades: Vec<Vec<(u32, f64)>>) -> CascadeSet {
        CascadeSet::new(
            cascades
                .into_iter()
                .map(|ev| Cascade::new(ev).unwrap())
                .collect(),
            None,
        )
        .unwrap()
    }

    fn sub(nodes: Vec<u32>, labels: Vec<u32>) -> SubPartition {
        SubPartition::new(nodes, labels).unwrap()
    }

    /// Direct transcription of the likelihood with nested loops, kept free
    /// of the incremental bookkeeping on purpose.
    fn brute_loglik(
        cascades: &[Vec<(u32, f64)>],
        observed: &[u32],
        comm: impl Fn(u32) -> u32,
        alpha_in: f64,
        alpha_out: f64,
        include_uninfected: bool,
    ) -> f64 {
        let ad = alpha_in - alpha_out;
        let mut ll = 0.0;
        for raw in cascades {
            let mut ev = raw.clone();
            ev.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let n = ev.len();
            let w = if n >= 2 {
                ev[n - 1].1 + (ev[n - 1].1 - ev[0].1) / (n as f64 - 1.0)
            } else {
                0.0
            };
            for j in 0..n {
                for i in 0..j {
                    let gap = ev[j].1 - ev[i].1;
                    ll -= alpha_out * gap;
                    if comm(ev[i].0) == comm(ev[j].0) {
                        ll -= ad * gap;
                    }
                }
                if ev[j].1 > 0.0 && ev[j].1 < w {
                    let mut nt = 0.0;
                    let mut ns = 0.0;
                    for i in 0..n {
                        if ev[i].1 < ev[j].1 {
                            nt += 1.0;
                            if comm(ev[i].0) == comm(ev[j].0) {
                                ns += 1.0;
                            }
                        }
                    }
                    ll += (ad * ns + alpha_out * nt).ln();
                }
            }
            if include_uninfected && n >= 2 {
                for &u in observed {
                    if ev.iter().any(|&(x, _)| x == u) {
                        continue;
                    }
                    for &(x, t) in &ev {
                        let gap = w - t;
                        ll -= alpha_out * gap;
                        if comm(x) == comm(u) {
                            ll -= ad * gap;
                        }
                    }
                }
            }
        }
        ll
    }

    fn example_cascades() -> Vec<Vec<(u32, f64)>> {
        vec![
            vec![(0, 0.0), (1, 0.4), (2, 1.1), (4, 2.0)],
            vec![(3, 0.0), (4, 0.25), (0, 0.8)],
            vec![(2, 0.0), (3, 0.5)],
            vec![(5, 0.0)],
            vec![(1, 0.0), (5, 0.7), (3, 0.7), (2, 1.9)],
        ]
    }

    #[test]
    fn likelihood_matches_direct_transcription() {
        let raw = example_cascades();
        let cs = set(raw.clone());
        let labels = vec![0u32, 0, 1, 1, 0, 2];
        let sp = sub((0..6).collect(), labels.clone());
        for flag in [false, true] {
            for (ain, aout) in [(2.0, 0.5), (1.0, 1.0), (0.3, 0.1)] {
                let got = log_likelihood_with(&cs, &sp, ain, aout, flag).unwrap();
                let want = brute_loglik(&raw, &[0, 1, 2, 3, 4, 5], |v| labels[v as usize], ain, aout, flag);
                assert!(
                    (got - want).abs() < 1e-9,
                    "flag {flag} rates ({ain},{aout}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn hand_evaluated_two_node_cascade() {
        // window estimate 2, one pair with gap 1, one mid-window event:
        // -(1 - 0.5)*1 - 0.5*1 + ln(0.5*1 + 0.5*1) = -1
        let cs = set(vec![vec![(0, 0.0), (1, 1.0)]]);
        let sp = sub(vec![0, 1], vec![0, 0]);
        let ll = log_likelihood(&cs, &sp, 1.0, 0.5).unwrap();
        assert!((ll - (-1.0)).abs() < 1e-12, "ll = {ll}");
    }

    #[test]
    fn partition_may_cover_more_than_observed() {
        let cs = set(vec![vec![(0, 0.0), (2, 1.0)]]);
        let sp = sub(vec![0, 1, 2, 3], vec![0, 1, 0, 1]);
        let ll = log_likelihood(&cs, &sp, 2.0, 0.5).unwrap();
        // single pair, same community: -(2.0)*1.0 + ln(2.0 * 1)
        assert!((ll - (-2.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn missing_node_in_partition_is_rejected() {
        let cs = set(vec![vec![(0, 0.0), (7, 1.0)]]);
        let sp = sub(vec![0, 1], vec![0, 1]);
        assert!(matches!(
            log_likelihood(&cs, &sp, 1.0, 0.5),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rate_domain_is_enforced() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0)]]);
        let sp = sub(vec![0, 1], vec![0, 0]);
        assert!(matches!(log_likelihood(&cs, &sp, 0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(log_likelihood(&cs, &sp, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(log_likelihood(&cs, &sp, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(log_likelihood(&cs, &sp, 1.0, 1.0).is_ok());
    }

    #[test]
    fn closed_form_scale_on_a_worked_example() {
        // one 3-event cascade in one community: both gap sums are 4, two
        // transmissions, so at delta = 1 the scale is 2 / (4 + 4)
        let cs = set(vec![vec![(0, 0.0), (1, 1.0), (2, 2.0)]]);
        let sp = sub(vec![0, 1, 2], vec![0, 0, 0]);
        let a = optimal_alpha_out(&cs, &sp, 1.0).unwrap();
        assert!((a - 0.25).abs() < 1e-12, "alpha_out = {a}");
        // delta = 0 ignores the partition
        let split = sub(vec![0, 1, 2], vec![0, 1, 0]);
        let u = optimal_alpha_out(&cs, &split, 0.0).unwrap();
        assert!((u - 2.0 / 4.0).abs() < 1e-12);
        // doubling the timestamps halves the scale
        let cs2 = set(vec![vec![(0, 0.0), (1, 2.0), (2, 4.0)]]);
        let h = optimal_alpha_out(&cs2, &sp, 1.0).unwrap();
        assert!((h - 0.125).abs() < 1e-12);
        assert!(matches!(
            optimal_alpha_out(&cs, &sp, -0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empty_set_is_a_fit_failure() {
        let cs = CascadeSet::new(vec![], None).unwrap();
        let sp = sub(vec![], vec![]);
        assert!(matches!(fit_rates(&cs, &sp), Err(Error::FitFailure(_))));
    }

    #[test]
    fn fitted_scale_is_the_closed_form_optimum() {
        let cs = set(example_cascades());
        let sp = sub((0..6).collect(), vec![0, 0, 1, 1, 0, 2]);
        let fit = fit_rates(&cs, &sp).unwrap();
        for factor in [0.9, 0.97, 1.03, 1.1] {
            let aout = fit.alpha_out * factor;
            let ain = (fit.delta + 1.0) * aout;
            let ll = log_likelihood(&cs, &sp, ain, aout).unwrap();
            assert!(
                ll <= fit.log_likelihood + 1e-9,
                "scale {factor}: {ll} beats {}",
                fit.log_likelihood
            );
        }
        // the reported value is the likelihood at the reported rates
        let ll = log_likelihood(&cs, &sp, fit.alpha_in, fit.alpha_out).unwrap();
        assert!((ll - fit.log_likelihood).abs() < 1e-9);
    }

    #[test]
    fn single_community_profile_is_flat_and_reports_zero_ratio() {
        let cs = set(vec![
            vec![(0, 0.0), (1, 0.5)],
            vec![(1, 0.0), (2, 0.25)],
            vec![(2, 0.0), (0, 1.5)],
        ]);
        let sp = sub(vec![0, 1, 2], vec![0, 0, 0]);
        let fit = fit_rates(&cs, &sp).unwrap();
        assert_eq!(fit.delta, 0.0);
        assert!((fit.alpha_in - fit.alpha_out).abs() < 1e-15);
        // windows are 2*t1, gaps t1; every second event is a log event:
        // alpha = m / sum(gaps) = 3 / 2.25
        assert!((fit.alpha_out - 3.0 / 2.25).abs() < 1e-12);
    }

    #[test]
    fn strongly_assortative_times_fit_a_large_ratio() {
        // same-community pairs are fast, cross pairs slow
        let mut cascades = Vec::new();
        for i in 0..40 {
            let (a, b) = ([0u32, 1, 2][i % 3], [1u32, 2, 0][i % 3]);
            cascades.push(vec![(a, 0.0), (b, 0.01)]);
            let (c, d) = ([3u32, 4, 5][i % 3], [4u32, 5, 3][i % 3]);
            cascades.push(vec![(c, 0.0), (d, 0.01)]);
        }
        cascades.push(vec![(0, 0.0), (3, 1.0)]);
        cascades.push(vec![(4, 0.0), (1, 1.0)]);
        let cs = set(cascades);
        let sp = sub((0..6).collect(), vec![0, 0, 0, 1, 1, 1]);
        let fit = fit_rates(&cs, &sp).unwrap();
        assert!(fit.delta > 10.0, "delta = {}", fit.delta);
        assert!(fit.alpha_in > fit.alpha_out);
    }

    #[test]
    fn degenerate_sets_are_reported() {
        let singles = set(vec![vec![(0, 0.0)], vec![(1, 0.0)]]);
        let sp = sub(vec![0, 1], vec![0, 1]);
        assert!(matches!(
            fit_rates(&singles, &sp),
            Err(Error::DegenerateInput(_))
        ));
        let burst = set(vec![vec![(0, 0.0), (1, 0.0), (2, 0.0)]]);
        let sp3 = sub(vec![0, 1, 2], vec![0, 0, 0]);
        assert!(matches!(
            fit_rates(&burst, &sp3),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn rescaling_time_rescales_the_fitted_rates() {
        let raw = example_cascades();
        let scaled: Vec<Vec<(u32, f64)>> = raw
            .iter()
            .map(|c| c.iter().map(|&(v, t)| (v, 4.0 * t)).collect())
            .collect();
        let sp = sub((0..6).collect(), vec![0, 0, 1, 1, 0, 2]);
        let a = fit_rates(&set(raw), &sp).unwrap();
        let b = fit_rates(&set(scaled), &sp).unwrap();
        assert!((a.delta - b.delta).abs() <= 1e-9 * (1.0 + a.delta));
        assert!((a.alpha_out - 4.0 * b.alpha_out).abs() < 1e-9 * a.alpha_out);
    }

    #[test]
    fn move_gain_matches_recomputed_objective() {
        let raw = example_cascades();
        let cs = set(raw);
        for flag in [false, true] {
            let config = ClustOptConfig {
                include_uninfected: flag,
            };
            let sp = sub((0..6).collect(), vec![0, 1, 0, 2, 1, 2]);
            let rates = RateEstimate {
                alpha_in: 1.7,
                alpha_out: 0.4,
                delta: 1.7 / 0.4 - 1.0,
                log_likelihood: 0.0,
            };
            let mut obj = LikelihoodObjective::with_config(&cs, &sp, &rates, &config).unwrap();
            let mut state = 11u64;
            for _ in 0..120 {
                state = rng::mix(state, &[1]);
                let v = (state % 6) as u32;
                let to = ((state >> 8) % 3) as u32;
                let before = obj.objective();
                let predicted = obj.gain(v, to);
                obj.apply(v, to);
                let after = obj.objective();
                assert!(
                    (after - before - predicted).abs() < 1e-9,
                    "flag {flag}: move {v}->{to} predicted {predicted}, got {}",
                    after - before
                );
            }
        }
    }

    #[test]
    fn refinement_moves_a_misassigned_node() {
        // node 2 interacts only with community {0,1} but starts in {3,4}
        let mut cascades = Vec::new();
        for k in 0..30 {
            let t = 0.01 + 0.001 * k as f64;
            cascades.push(vec![(0, 0.0), (2, t)]);
            cascades.push(vec![(2, 0.0), (1, t)]);
            cascades.push(vec![(3, 0.0), (4, t)]);
        }
        cascades.push(vec![(0, 0.0), (3, 2.0)]);
        let cs = set(cascades);
        let sp = sub(vec![0, 1, 2, 3, 4], vec![0, 0, 1, 1, 1]);
        let rates = fit_rates(&cs, &sp).unwrap();
        let mut obj = LikelihoodObjective::new(&cs, &sp, &rates).unwrap();
        let moves = optimize_moves(&mut obj, 5);
        assert!(moves >= 1);
        let out = obj.into_subpartition().unwrap();
        assert_eq!(out.community_of_node(2), out.community_of_node(0));
        assert_ne!(out.community_of_node(2), out.community_of_node(3));
    }

    #[test]
    fn clust_opt_recovers_separated_groups() {
        use crate::graph::Partition;
        use crate::simulate::{generate_set, EpidemicParams, Model};
        let gt = Partition::from_labels(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let params = EpidemicParams::c_si_bd(8.0, 0.05);
        let cs = generate_set(&Model::CSiBd(&gt), &params, 300, 77).unwrap();
        let cs = crate::cascade::filter_singletons(cs);
        let res = clust_opt(&cs, 9).unwrap();
        assert!(res.rates.delta > 0.0);
        let sp = res.partition;
        for group in [&[0u32, 1, 2, 3, 4][..], &[5u32, 6, 7, 8, 9][..]] {
            let present: Vec<u32> = group
                .iter()
                .copied()
                .filter(|&v| sp.community_of_node(v).is_some())
                .collect();
            for w in present.windows(2) {
                assert_eq!(sp.community_of_node(w[0]), sp.community_of_node(w[1]));
            }
        }
        if let (Some(a), Some(b)) = (sp.community_of_node(0), sp.community_of_node(5)) {
            assert_ne!(a, b);
        }
    }
}
