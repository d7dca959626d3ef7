//! Weighted modularity and greedy community moves.
//!
//! Two entry points. [`louvain_modularity`] is the classic two-phase
//! algorithm (local moves, then aggregation into a coarser weighted graph,
//! repeated until no gain). [`optimize_moves`] is the single-level driver
//! over any [`MoveObjective`]; it never aggregates, which is what the
//! likelihood-based refinement step needs since that objective is not
//! defined on a coarsened node set.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::rng;

/// Gains at or below this threshold do not justify a move.
pub const MIN_GAIN: f64 = 1e-10;

const SHUFFLE_KEY: u64 = 0x510f;

/// Modularity of a partition on a weighted graph: for each community, the
/// fraction of weight inside it minus the squared fraction of degree
/// attached to it. Zero total weight leaves the measure undefined.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    if p.len() != g.node_count() {
        return Err(Error::Validation(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.node_count()
        )));
    }
    let w = g.total_weight();
    if w <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    let k = p.community_count();
    let mut intra = vec![0.0f64; k];
    let mut degree = vec![0.0f64; k];
    for &(a, b, wt) in g.edges() {
        let ca = p.community_of(a);
        let cb = p.community_of(b);
        if ca == cb {
            intra[ca as usize] += wt;
        }
        degree[ca as usize] += wt;
        degree[cb as usize] += wt;
    }
    let q = (0..k)
        .map(|c| intra[c] / w - (degree[c] / (2.0 * w)).powi(2))
        .sum();
    Ok(q)
}

/// An objective that scores single-node community moves. Implementations
/// must keep `gain` consistent with `objective`: applying a move changes
/// the objective by exactly the reported gain.
pub trait MoveObjective {
    fn node_count(&self) -> usize;
    fn community_of(&self, v: u32) -> u32;
    /// Communities worth trying for `v`. May include the current one.
    fn candidates(&self, v: u32) -> Vec<u32>;
    /// Objective change if `v` moved from its community to `to`.
    fn gain(&self, v: u32, to: u32) -> f64;
    fn apply(&mut self, v: u32, to: u32);
    fn objective(&self) -> f64;
}

/// Greedy single-node moves in a fixed shuffled order, swept repeatedly
/// until a full sweep makes no move. Ties in gain go to the lowest
/// community label. Returns the number of moves applied.
pub fn optimize_moves<O: MoveObjective>(obj: &mut O, seed: u64) -> usize {
    let n = obj.node_count();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng::stream(seed, &[SHUFFLE_KEY]));
    let mut total = 0;
    loop {
        let mut moved = 0;
        for &v in &order {
            let cur = obj.community_of(v);
            let mut best: Option<(f64, u32)> = None;
            for c in obj.candidates(v) {
                if c == cur {
                    continue;
                }
                let g = obj.gain(v, c);
                match best {
                    None => best = Some((g, c)),
                    Some((bg, bc)) => {
                        if g > bg || (g == bg && c < bc) {
                            best = Some((g, c));
                        }
                    }
                }
            }
            if let Some((g, c)) = best {
                if g > MIN_GAIN {
                    obj.apply(v, c);
                    moved += 1;
                }
            }
        }
        total += moved;
        if moved == 0 {
            return total;
        }
    }
}

/// Modularity as a [`MoveObjective`] over a fixed graph. Useful directly
/// for tests and as the reference the likelihood objective is checked
/// against; `louvain_modularity` uses a faster specialized path.
pub struct ModularityObjective<'a> {
    graph: &'a Graph,
    membership: Vec<u32>,
    comm_degree: Vec<f64>,
    w: f64,
}

impl<'a> ModularityObjective<'a> {
    pub fn new(graph: &'a Graph, init: &Partition) -> Result<ModularityObjective<'a>> {
        if init.len() != graph.node_count() {
            return Err(Error::Validation(format!(
                "partition covers {} nodes, graph has {}",
                init.len(),
                graph.node_count()
            )));
        }
        let w = graph.total_weight();
        if w <= 0.0 {
            return Err(Error::UndefinedModularity);
        }
        let membership = init.labels().to_vec();
        let mut comm_degree = vec![0.0; graph.node_count()];
        for v in 0..graph.node_count() as u32 {
            comm_degree[membership[v as usize] as usize] += graph.degree(v);
        }
        Ok(ModularityObjective {
            graph,
            membership,
            comm_degree,
            w,
        })
    }

    pub fn into_partition(self) -> Partition {
        Partition::from_labels(&self.membership)
    }

    /// Weight from `v` to community `c`, v excluded.
    fn link_weight(&self, v: u32, c: u32) -> f64 {
        self.graph
            .neighbors(v)
            .iter()
            .filter(|&&(u, _)| self.membership[u as usize] == c)
            .map(|&(_, w)| w)
            .sum()
    }
}

impl MoveObjective for ModularityObjective<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn community_of(&self, v: u32) -> u32 {
        self.membership[v as usize]
    }

    fn candidates(&self, v: u32) -> Vec<u32> {
        let mut cs: Vec<u32> = self
            .graph
            .neighbors(v)
            .iter()
            .map(|&(u, _)| self.membership[u as usize])
            .collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    fn gain(&self, v: u32, to: u32) -> f64 {
        let cur = self.membership[v as usize];
        if to == cur {
            return 0.0;
        }
        let d = self.graph.degree(v);
        let l_to = self.link_weight(v, to);
        let l_cur = self.link_weight(v, cur);
        let s_to = self.comm_degree[to as usize];
        let s_cur = self.comm_degree[cur as usize] - d;
        (l_to - l_cur) / self.w - d * (s_to - s_cur) / (2.0 * self.w * self.w)
    }

    fn apply(&mut self, v: u32, to: u32) {
        let d = self.graph.degree(v);
        let cur = self.membership[v as usize];
        self.comm_degree[cur as usize] -= d;
        self.comm_degree[to as usize] += d;
        self.membership[v as usize] = to;
    }

    fn objective(&self) -> f64 {
        modularity(self.graph, &Partition::from_labels(&self.membership))
            .expect("weight checked at construction")
    }
}

/// One level of the aggregated hierarchy. Unlike [`Graph`] this carries
/// self-loops, which appear as soon as communities collapse into nodes.
struct Level {
    n: usize,
    adj: Vec<Vec<(u32, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
    w: f64,
}

impl Level {
    fn from_graph(g: &Graph) -> Level {
        let n = g.node_count();
        let adj = (0..n as u32).map(|v| g.neighbors(v).to_vec()).collect();
        let degree = (0..n as u32).map(|v| g.degree(v)).collect();
        Level {
            n,
            adj,
            self_loop: vec![0.0; n],
            degree,
            w: g.total_weight(),
        }
    }

    /// Local move phase; returns (membership, moved_any).
    fn local_moves(&self, seed: u64) -> (Vec<u32>, bool) {
        let mut membership: Vec<u32> = (0..self.n as u32).collect();
        let mut comm_degree = self.degree.clone();
        let mut order: Vec<u32> = (0..self.n as u32).collect();
        order.shuffle(&mut rng::stream(seed, &[SHUFFLE_KEY]));
        let mut any = false;
        let mut link = vec![0.0f64; self.n];
        let mut touched: Vec<u32> = Vec::new();
        loop {
            let mut moved = 0;
            for &v in &order {
                let cur = membership[v as usize];
                let d = self.degree[v as usize];
                for &(u, wt) in &self.adj[v as usize] {
                    let c = membership[u as usize];
                    if link[c as usize] == 0.0 {
                        touched.push(c);
                    }
                    link[c as usize] += wt;
                }
                let s_cur = comm_degree[cur as usize] - d;
                let base = link[cur as usize] / self.w - d * s_cur / (2.0 * self.w * self.w);
                let mut best_c = cur;
                let mut best_gain = 0.0f64;
                for &c in &touched {
                    if c == cur {
                        continue;
                    }
                    let s_c = comm_degree[c as usize];
                    let g = link[c as usize] / self.w - d * s_c / (2.0 * self.w * self.w) - base;
                    if g > best_gain || (g == best_gain && g > 0.0 && c < best_c) {
                        best_gain = g;
                        best_c = c;
                    }
                }
                for &c in &touched {
                    link[c as usize] = 0.0;
                }
                touched.clear();
                if best_c != cur && best_gain > MIN_GAIN {
                    comm_degree[cur as usize] -= d;
                    comm_degree[best_c as usize] += d;
                    membership[v as usize] = best_c;
                    moved += 1;
                    any = true;
                }
            }
            if moved == 0 {
                return (membership, any);
            }
        }
    }

    /// Collapse communities into nodes, keeping intra-community weight as
    /// self-loops. `membership` must use labels 0..k densely.
    fn aggregate(&self, membership: &[u32], k: usize) -> Level {
        let mut self_loop = vec![0.0f64; k];
        let mut cross: Vec<std::collections::BTreeMap<u32, f64>> =
            vec![std::collections::BTreeMap::new(); k];
        for v in 0..self.n {
            let cv = membership[v] as usize;
            self_loop[cv] += self.self_loop[v];
            for &(u, wt) in &self.adj[v] {
                let cu = membership[u as usize] as usize;
                if cu == cv {
                    // each undirected edge visited twice
                    self_loop[cv] += wt / 2.0;
                } else {
                    *cross[cv].entry(cu as u32).or_insert(0.0) += wt;
                }
            }
        }
        let adj: Vec<Vec<(u32, f64)>> = cross.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree: Vec<f64> = (0..k)
            .map(|c| 2.0 * self_loop[c] + adj[c].iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        Level {
            n: k,
            adj,
            self_loop,
            degree,
            w: self.w,
        }
    }
}

/// Two-phase modularity maximization. A graph without edge weight has no
/// modularity signal; every node stays in its own community.
pub fn louvain_modularity(g: &Graph, seed: u64) -> Result<Partition> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("graph"));
    }
    if g.total_weight() <= 0.0 {
        return Ok(Partition::singletons(n));
    }
    let mut assign: Vec<u32> = (0..n as u32).collect();
    let mut level = Level::from_graph(g);
    let mut round: u64 = 0;
    loop {
        let (membership, moved) = level.local_moves(rng::mix(seed, &[round]));
        if !moved {
            return Ok(Partition::from_labels(&assign));
        }
        let local = Partition::from_labels(&membership);
        for a in assign.iter_mut() {
            *a = local.community_of(*a);
        }
        let k = local.community_count();
        if k == level.n {
            return Ok(Partition::from_labels(&assign));
        }
        level = level.aggregate(local.labels(), k);
        round += 1;
    }
}
