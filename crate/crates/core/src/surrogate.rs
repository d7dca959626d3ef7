//! Surrogate interaction graphs built from infection times alone.
//!
//! Each builder turns a cascade set into a weighted graph over the observed
//! nodes; communities are then read off that graph by modularity. The
//! builders differ in how much of the timing they use: co-occurrence only
//! (cosine), time order (path, clique with rate 0), or time differences
//! (clique with a positive rate). The oracle builder cheats by counting
//! actual transmission edges and is only available for simulated sets that
//! kept them.

use std::collections::BTreeMap;

use crate::cascade::{Cascade, CascadeSet};
use crate::error::{Error, Result};
use crate::graph::{Graph, SubPartition};
use crate::louvain::louvain_modularity;

/// Decay rate for the clique builder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CliqueRate {
    /// Reciprocal of the pooled mean time gap.
    Auto,
    /// Rate zero: every earlier event is an equally likely parent.
    Zero,
    Fixed(f64),
}

/// How pair weights are derived from cascades.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// +1 between consecutive events of each cascade.
    Path,
    /// Parent probabilities with exponentially decaying preference for
    /// recent predecessors, summed over cascades.
    Clique(CliqueRate),
    /// Co-occurrence counts normalized by the geometric mean of the nodes'
    /// cascade counts.
    Cosine,
    /// Transmission-edge counts; requires recorded transmissions.
    Oracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Path => "path",
            Method::Clique(CliqueRate::Zero) => "clique0",
            Method::Clique(_) => "clique",
            Method::Cosine => "cosine",
            Method::Oracle => "oracle",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "path" => Ok(Method::Path),
            "clique" => Ok(Method::Clique(CliqueRate::Auto)),
            "clique0" => Ok(Method::Clique(CliqueRate::Zero)),
            "cosine" => Ok(Method::Cosine),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Validation(format!("unknown surrogate method {other:?}"))),
        }
    }
}

/// A weighted graph over the observed nodes. `nodes[i]` is the original id
/// of compact node `i`; `nodes` is sorted.
#[derive(Clone, Debug)]
pub struct SurrogateGraph {
    pub graph: Graph,
    pub nodes: Vec<u32>,
}

/// Accumulated weights below this are numerical noise and are dropped
/// from the final graph.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Mean absolute time difference over all same-cascade event pairs, pooled
/// across cascades. `None` when no cascade has two events.
pub fn pooled_mean_gap(cs: &CascadeSet) -> Option<f64> {
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for c in cs.cascades() {
        let ev = c.events();
        for j in 1..ev.len() {
            for i in 0..j {
                sum += ev[j].1 - ev[i].1;
                count += 1;
            }
        }
    }
    if count == 0 {
        None
    } else {
        Some(sum / count as f64)
    }
}

/// Probability that event `i` was the parent of event `j` within cascade
/// `c`: zero unless `i` precedes `j` (sorted order, so simultaneous events
/// resolve by node id), otherwise `exp(-rate * (t_j - t_i))` normalized
/// over all of `j`'s predecessors. Nodes absent from the cascade get 0.
pub fn clique_prob(c: &Cascade, i: u32, j: u32, rate: f64) -> f64 {
    let ev = c.events();
    let pi = ev.iter().position(|&(v, _)| v == i);
    let pj = ev.iter().position(|&(v, _)| v == j);
    let (pi, pj) = match (pi, pj) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return 0.0,
    };
    let tj = ev[pj].1;
    let dmin = tj - ev[pj - 1].1;
    let total: f64 = ev[..pj]
        .iter()
        .map(|&(_, tl)| (-rate * ((tj - tl) - dmin)).exp())
        .sum();
    (-rate * ((tj - ev[pi].1) - dmin)).exp() / total
}

/// Parent probabilities within one cascade: for each non-source event `j`,
/// every earlier event (sorted order, so simultaneous events resolve by
/// node id) is a candidate parent with probability proportional to
/// `exp(-rate * (t_j - t_i))`. Probabilities per event sum to one, so each
/// cascade contributes exactly its size minus one in total weight.
fn add_clique_weights(c: &Cascade, rate: f64, add: &mut impl FnMut(u32, u32, f64)) {
    let ev = c.events();
    let mut w = Vec::new();
    for j in 1..ev.len() {
        let tj = ev[j].1;
        // nearest predecessor gap is minimal since events are time-sorted
        let dmin = tj - ev[j - 1].1;
        w.clear();
        let mut total = 0.0;
        for &(_, ti) in &ev[..j] {
            let x = (-rate * ((tj - ti) - dmin)).exp();
            w.push(x);
            total += x;
        }
        for (i, &x) in w.iter().enumerate() {
            let p = x / total;
            if p > 0.0 {
                add(ev[i].0, ev[j].0, p);
            }
        }
    }
}

fn resolve_rate(cs: &CascadeSet, rate: CliqueRate) -> f64 {
    match rate {
        CliqueRate::Zero => 0.0,
        CliqueRate::Fixed(a) => a,
        CliqueRate::Auto => match pooled_mean_gap(cs) {
            Some(gap) if gap > 0.0 => 1.0 / gap,
            _ => {
                log::warn!("all event gaps are zero; falling back to order-only weights");
                0.0
            }
        },
    }
}

/// Builds the surrogate graph for `method` over the observed nodes.
pub fn build_surrogate(cs: &CascadeSet, method: Method) -> Result<SurrogateGraph> {
    if cs.len() == 0 {
        return Err(Error::EmptyInput("cascade set"));
    }
    let nodes = cs.observed_nodes();
    let compact = |v: u32| -> u32 {
        nodes.binary_search(&v).expect("observed node") as u32
    };
    let mut acc: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut add = |a: u32, b: u32, w: f64| {
        let (a, b) = (compact(a), compact(b));
        let key = if a < b { (a, b) } else { (b, a) };
        *acc.entry(key).or_insert(0.0) += w;
    };
    match method {
        Method::Path => {
            for c in cs.cascades() {
                let ev = c.events();
                for pair in ev.windows(2) {
                    add(pair[0].0, pair[1].0, 1.0);
                }
            }
        }
        Method::Clique(rate) => {
            let a = resolve_rate(cs, rate);
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Domain(format!("clique rate must be non-negative, got {a}")));
            }
            for c in cs.cascades() {
                add_clique_weights(c, a, &mut add);
            }
        }
        Method::Cosine => {
            let mut appear = vec![0u64; nodes.len()];
            for c in cs.cascades() {
                for v in c.nodes() {
                    appear[compact(v) as usize] += 1;
                }
            }
            let mut co: BTreeMap<(u32, u32), u64> = BTreeMap::new();
            for c in cs.cascades() {
                let mut ids: Vec<u32> = c.nodes().map(compact).collect();
                ids.sort_unstable();
                for j in 1..ids.len() {
                    for i in 0..j {
                        *co.entry((ids[i], ids[j])).or_insert(0) += 1;
                    }
                }
            }
            for ((a, b), n) in co {
                let w = n as f64 / ((appear[a as usize] * appear[b as usize]) as f64).sqrt();
                *acc.entry((a, b)).or_insert(0.0) += w;
            }
        }
        Method::Oracle => {
            let trees = cs.transmissions().ok_or(Error::OracleUnavailable)?;
            for tree in trees {
                for &(u, v) in tree {
                    add(u, v, 1.0);
                }
            }
        }
    }
    let graph = Graph::from_weighted_pairs(
        nodes.len(),
        acc.into_iter()
            .filter(|&(_, w)| w >= WEIGHT_FLOOR)
            .map(|((a, b), w)| (a, b, w)),
    )?;
    let graph = match cs.labels() {
        Some(_) => graph.with_labels(nodes.iter().map(|&v| cs.node_name(v)).collect())?,
        None => graph,
    };
    Ok(SurrogateGraph { graph, nodes })
}

/// Consecutive-activation weights; see [`Method::Path`].
pub fn build_path(cs: &CascadeSet) -> Result<SurrogateGraph> {
    build_surrogate(cs, Method::Path)
}

/// Parent-probability weights; see [`Method::Clique`].
pub fn build_clique(cs: &CascadeSet, rate: CliqueRate) -> Result<SurrogateGraph> {
    build_surrogate(cs, Method::Clique(rate))
}

/// Normalized co-occurrence weights; see [`Method::Cosine`].
pub fn build_cosine_sim(cs: &CascadeSet) -> Result<SurrogateGraph> {
    build_surrogate(cs, Method::Cosine)
}

/// True transmission-edge counts; see [`Method::Oracle`].
pub fn build_oracle(cs: &CascadeSet) -> Result<SurrogateGraph> {
    build_surrogate(cs, Method::Oracle)
}

/// Communities of the observed nodes: build the surrogate graph, maximize
/// modularity on it, and report the result against original node ids.
pub fn detect(cs: &CascadeSet, method: Method, seed: u64) -> Result<SubPartition> {
    let sg = build_surrogate(cs, method)?;
    let p = louvain_modularity(&sg.graph, seed)?;
    SubPartition::new(sg.nodes, p.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(cascades: Vec<Vec<(u32, f64)>>) -> CascadeSet {
        let cs: Vec<Cascade> = cascades
            .into_iter()
            .map(|ev| Cascade::new(ev).unwrap())
            .collect();
        CascadeSet::new(cs, None).unwrap()
    }

    fn weight(sg: &SurrogateGraph, a: u32, b: u32) -> f64 {
        let ca = sg.nodes.binary_search(&a).unwrap() as u32;
        let cb = sg.nodes.binary_search(&b).unwrap() as u32;
        sg.graph
            .neighbors(ca)
            .iter()
            .find(|&&(u, _)| u == cb)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }

    #[test]
    fn path_links_consecutive_events() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0), (2, 2.0)]]);
        let sg = build_surrogate(&cs, Method::Path).unwrap();
        assert_eq!(weight(&sg, 0, 1), 1.0);
        assert_eq!(weight(&sg, 1, 2), 1.0);
        assert_eq!(weight(&sg, 0, 2), 0.0);
    }

    #[test]
    fn clique_with_zero_rate_splits_weight_among_predecessors() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0), (2, 2.0)]]);
        let sg = build_surrogate(&cs, Method::Clique(CliqueRate::Zero)).unwrap();
        assert!((weight(&sg, 0, 1) - 1.0).abs() < 1e-12);
        assert!((weight(&sg, 0, 2) - 0.5).abs() < 1e-12);
        assert!((weight(&sg, 1, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clique_rate_weighs_recent_predecessors_more() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0), (2, 3.0)]]);
        let sg = build_surrogate(&cs, Method::Clique(CliqueRate::Fixed(1.0))).unwrap();
        let e = std::f64::consts::E;
        assert!((weight(&sg, 0, 1) - 1.0).abs() < 1e-12);
        assert!((weight(&sg, 0, 2) - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((weight(&sg, 1, 2) - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn clique_weight_totals_one_per_non_source() {
        let cs = set(vec![
            vec![(0, 0.0), (3, 0.5), (1, 0.5), (4, 2.0)],
            vec![(2, 0.0), (0, 1.0)],
            vec![(5, 0.0)],
        ]);
        for rate in [CliqueRate::Zero, CliqueRate::Auto, CliqueRate::Fixed(7.3)] {
            let sg = build_surrogate(&cs, Method::Clique(rate)).unwrap();
            let total = sg.graph.total_weight();
            let expected = cs.transmission_count() as f64;
            assert!(
                (total - expected).abs() < 1e-9,
                "{rate:?}: total {total} vs {expected}"
            );
        }
    }

    #[test]
    fn simultaneous_events_share_parenthood_by_order() {
        let cs = set(vec![vec![(2, 0.0), (0, 0.0), (1, 0.0)]]);
        // sorted by (t, node): 0, 1, 2
        let sg = build_surrogate(&cs, Method::Clique(CliqueRate::Fixed(5.0))).unwrap();
        assert!((weight(&sg, 0, 1) - 1.0).abs() < 1e-12);
        assert!((weight(&sg, 0, 2) - 0.5).abs() < 1e-12);
        assert!((weight(&sg, 1, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn huge_rate_degenerates_to_path_weights() {
        let cs = set(vec![
            vec![(0, 0.0), (1, 0.3), (2, 0.9), (3, 1.0)],
            vec![(4, 0.0), (2, 0.2), (0, 0.7)],
        ]);
        let gap = pooled_mean_gap(&cs).unwrap();
        let sharp = build_surrogate(&cs, Method::Clique(CliqueRate::Fixed(1e6 / gap))).unwrap();
        let path = build_surrogate(&cs, Method::Path).unwrap();
        for &(a, b, w) in path.graph.edges() {
            let oa = path.nodes[a as usize];
            let ob = path.nodes[b as usize];
            assert!(
                (weight(&sharp, oa, ob) - w).abs() < 1e-9,
                "edge {oa}-{ob}: {} vs {w}",
                weight(&sharp, oa, ob)
            );
        }
        assert_eq!(sharp.graph.edge_count(), path.graph.edge_count());
    }

    #[test]
    fn auto_rate_is_reciprocal_mean_gap() {
        let cs = set(vec![vec![(0, 0.0), (1, 2.0), (2, 6.0)]]);
        // gaps: 2, 6, 4 -> mean 4
        assert!((pooled_mean_gap(&cs).unwrap() - 4.0).abs() < 1e-12);
        let auto = build_surrogate(&cs, Method::Clique(CliqueRate::Auto)).unwrap();
        let fixed = build_surrogate(&cs, Method::Clique(CliqueRate::Fixed(0.25))).unwrap();
        for &(a, b, w) in auto.graph.edges() {
            let (oa, ob) = (auto.nodes[a as usize], auto.nodes[b as usize]);
            assert!((weight(&fixed, oa, ob) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_gaps_fall_back_to_uniform_parents() {
        let cs = set(vec![vec![(0, 0.0), (1, 0.0), (2, 0.0)]]);
        let sg = build_surrogate(&cs, Method::Clique(CliqueRate::Auto)).unwrap();
        assert!((weight(&sg, 0, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cosine_normalizes_cooccurrence() {
        let cs = set(vec![
            vec![(0, 0.0), (1, 1.0)],
            vec![(0, 0.0), (2, 1.0)],
            vec![(0, 0.0), (1, 1.0), (2, 2.0)],
        ]);
        let sg = build_surrogate(&cs, Method::Cosine).unwrap();
        assert!((weight(&sg, 0, 1) - 2.0 / 6.0f64.sqrt()).abs() < 1e-12);
        assert!((weight(&sg, 0, 2) - 2.0 / 6.0f64.sqrt()).abs() < 1e-12);
        assert!((weight(&sg, 1, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_counts_transmission_edges() {
        let cascades = vec![
            Cascade::new(vec![(0, 0.0), (1, 1.0), (2, 2.0)]).unwrap(),
            Cascade::new(vec![(1, 0.0), (2, 1.0)]).unwrap(),
        ];
        let trees = vec![vec![(0, 1), (1, 2)], vec![(1, 2)]];
        let cs = CascadeSet::new(cascades, Some(trees)).unwrap();
        let sg = build_surrogate(&cs, Method::Oracle).unwrap();
        assert_eq!(weight(&sg, 1, 2), 2.0);
        assert_eq!(weight(&sg, 0, 1), 1.0);
        assert_eq!(weight(&sg, 0, 2), 0.0);
    }

    #[test]
    fn oracle_requires_transmissions() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0)]]);
        assert!(matches!(
            build_surrogate(&cs, Method::Oracle),
            Err(Error::OracleUnavailable)
        ));
    }

    #[test]
    fn detect_reports_original_node_ids() {
        // two groups that never co-occur: {1, 5} and {7, 9}
        let cs = set(vec![
            vec![(1, 0.0), (5, 1.0)],
            vec![(5, 0.0), (1, 1.0)],
            vec![(7, 0.0), (9, 1.0)],
            vec![(9, 0.0), (7, 1.0)],
        ]);
        let sp = detect(&cs, Method::Path, 3).unwrap();
        assert_eq!(sp.nodes(), &[1, 5, 7, 9]);
        assert_eq!(sp.community_of_node(1), sp.community_of_node(5));
        assert_eq!(sp.community_of_node(7), sp.community_of_node(9));
        assert_ne!(sp.community_of_node(1), sp.community_of_node(7));
    }

    #[test]
    fn parent_probability_worked_example() {
        let c = Cascade::new(vec![(0, 0.0), (1, 1.0), (2, 2.0)]).unwrap();
        let e2 = (-2.0f64).exp();
        let e1 = (-1.0f64).exp();
        assert!((clique_prob(&c, 0, 2, 1.0) - e2 / (e2 + e1)).abs() < 1e-12);
        assert!((clique_prob(&c, 1, 2, 1.0) - e1 / (e2 + e1)).abs() < 1e-12);
        assert!((clique_prob(&c, 0, 1, 1.0) - 1.0).abs() < 1e-12);
        // never a parent: the source, later events, absent nodes
        assert_eq!(clique_prob(&c, 1, 0, 1.0), 0.0);
        assert_eq!(clique_prob(&c, 2, 1, 1.0), 0.0);
        assert_eq!(clique_prob(&c, 7, 1, 1.0), 0.0);
        assert_eq!(clique_prob(&c, 1, 1, 1.0), 0.0);
    }

    #[test]
    fn builder_weights_are_summed_parent_probabilities() {
        let cs = set(vec![
            vec![(0, 0.0), (3, 0.5), (1, 0.5), (4, 2.0)],
            vec![(2, 0.0), (0, 1.0), (4, 1.25)],
        ]);
        let a = 1.7;
        let sg = build_clique(&cs, CliqueRate::Fixed(a)).unwrap();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                let want: f64 = cs
                    .cascades()
                    .iter()
                    .map(|c| clique_prob(c, u, v, a) + clique_prob(c, v, u, a))
                    .sum();
                let got = weight(&sg, u, v);
                let expect = if want >= WEIGHT_FLOOR { want } else { 0.0 };
                assert!((got - expect).abs() < 1e-12, "pair {u},{v}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for name in ["path", "clique", "clique0", "cosine", "oracle"] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert!("parsnip".parse::<Method>().is_err());
    }

    #[test]
    fn surrogate_carries_node_names() {
        let cs = set(vec![vec![(0, 0.0), (1, 1.0)]])
            .with_labels(vec!["alice".into(), "bob".into()]);
        let sg = build_surrogate(&cs, Method::Path).unwrap();
        assert_eq!(sg.graph.label(0), "alice");
        assert_eq!(sg.graph.label(1), "bob");
    }
}
