//! Benchmark graphs with planted power-law communities.
//!
//! Standard LFR construction: power-law degrees and community sizes, each
//! node splits its degree into an intra-community part (fraction 1−μ) and
//! an inter-community part (fraction μ), and both stub classes are wired by
//! configuration-model matching with swap repair of self loops and
//! duplicate edges.
//!
//! One deliberate deviation from the textbook recipe: the intra-degree
//! split uses *stochastic* rounding of (1−μ)·deg instead of nearest-integer
//! rounding. With small mean degrees, nearest rounding sends most nodes'
//! entire degree intra (e.g. deg 5, μ = 0.1 rounds 4.5 up to 5), biasing
//! the realized mixing far below the target; stochastic rounding keeps the
//! expected split exact.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DatasetBundle, Graph, Partition};
use crate::rng;

const BUILD_ATTEMPTS: u32 = 3;

/// Parameters for one generated graph.
#[derive(Clone, Copy, Debug)]
pub struct LfrConfig {
    pub n: usize,
    /// degree distribution exponent, > 1
    pub tau1: f64,
    /// community-size distribution exponent, > 1
    pub tau2: f64,
    /// target fraction of inter-community edges, in [0, 1)
    pub mu: f64,
    pub avg_degree: f64,
    pub max_degree: f64,
    pub min_community: usize,
    pub max_community: usize,
    pub seed: u64,
}

impl LfrConfig {
    /// Reference configuration at full size: ten thousand nodes, exponents
    /// 2.5 / 1.5, mixing 0.1, mean degree 5, communities of 100 to 600.
    pub fn reference(seed: u64) -> LfrConfig {
        LfrConfig {
            n: 10_000,
            tau1: 2.5,
            tau2: 1.5,
            mu: 0.1,
            avg_degree: 5.0,
            max_degree: 100.0,
            min_community: 100,
            max_community: 600,
            seed,
        }
    }

    /// Reference configuration shrunk to `n` nodes, community-size range
    /// scaled proportionally (floored at 20 so intra stubs still fit).
    pub fn reference_scaled(n: usize, seed: u64) -> LfrConfig {
        let scale = n as f64 / 10_000.0;
        LfrConfig {
            n,
            min_community: ((100.0 * scale) as usize).max(20),
            max_community: ((600.0 * scale) as usize).max(120).min(n),
            ..LfrConfig::reference(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("node count must be positive".into()));
        }
        if !(self.tau1 > 1.0) || !(self.tau2 > 1.0) {
            return Err(Error::Validation(
                "power-law exponents must exceed 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::Validation(format!(
                "mixing fraction {} outside [0, 1)",
                self.mu
            )));
        }
        if self.min_community > self.max_community || self.max_community > self.n {
            return Err(Error::Validation(
                "community size range must satisfy min <= max <= n".into(),
            ));
        }
        if self.min_community == 0 {
            return Err(Error::Validation("community sizes must be positive".into()));
        }
        if !(self.avg_degree >= 1.0) || self.avg_degree > self.max_degree {
            return Err(Error::Validation(
                "average degree must lie in [1, max_degree]".into(),
            ));
        }
        if self.max_degree >= self.n as f64 {
            return Err(Error::Validation(
                "maximum degree must be below the node count".into(),
            ));
        }
        Ok(())
    }
}

/// Inverse CDF of the power law with density proportional to x^(-tau) on
/// [a, b], tau > 1.
fn power_law_inv(u: f64, tau: f64, a: f64, b: f64) -> f64 {
    let e = 1.0 - tau;
    (a.powf(e) + u * (b.powf(e) - a.powf(e))).powf(1.0 / e)
}

/// Mean of that distribution.
fn power_law_mean(tau: f64, a: f64, b: f64) -> f64 {
    let e1 = 1.0 - tau;
    let d1 = b.powf(e1) - a.powf(e1);
    if (tau - 2.0).abs() < 1e-9 {
        // density ~ x^-2: the first moment integrand is 1/x
        return e1 * (b.ln() - a.ln()) / d1;
    }
    let e2 = 2.0 - tau;
    e1 * (b.powf(e2) - a.powf(e2)) / (e2 * d1)
}

/// Lower cutoff that makes the analytic mean hit `target`; the mean is
/// increasing in the cutoff, so plain bisection applies.
fn solve_min_degree(tau: f64, b: f64, target: f64) -> Result<f64> {
    let mut lo = 1.0;
    let mut hi = b;
    if power_law_mean(tau, lo, b) > target || target > b {
        return Err(Error::GenerationFailure(format!(
            "average degree {target} is out of reach for exponent {tau} and max degree {b}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power_law_mean(tau, mid, b) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// floor(x) plus a Bernoulli on the fractional part; expectation is x.
fn stochastic_round(x: f64, rng: &mut impl Rng) -> usize {
    let base = x.floor();
    let frac = x - base;
    base as usize + usize::from(rng.gen::<f64>() < frac)
}

/// Community sizes from the tau2 power law, summing exactly to n.
fn draw_community_sizes(cfg: &LfrConfig, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let (a, b) = (cfg.min_community as f64, cfg.max_community as f64);
    for _ in 0..10_000 {
        let mut sizes: Vec<usize> = Vec::new();
        let mut sum = 0usize;
        while sum < cfg.n {
            let s = if cfg.min_community == cfg.max_community {
                cfg.min_community
            } else {
                (power_law_inv(rng.gen(), cfg.tau2, a, b).round() as usize)
                    .clamp(cfg.min_community, cfg.max_community)
            };
            sizes.push(s);
            sum += s;
        }
        let over = sum - cfg.n;
        if over == 0 {
            return Ok(sizes);
        }
        let last = *sizes.last().unwrap();
        if last >= over + cfg.min_community {
            *sizes.last_mut().unwrap() = last - over;
            return Ok(sizes);
        }
        // overshoot cannot be absorbed; redraw the whole sequence
    }
    Err(Error::GenerationFailure(
        "community sizes never summed to the node count".into(),
    ))
}

/// Assigns each node a community that can hold its intra-degree, choosing
/// among feasible communities with probability proportional to free slots.
/// Nodes are placed in decreasing intra-degree order so the hardest
/// constraints go first.
fn assign_communities(
    sizes: &[usize],
    intra: &[usize],
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..intra.len()).collect();
    order.sort_by_key(|&v| std::cmp::Reverse((intra[v], v)));
    let mut free: Vec<usize> = sizes.to_vec();
    let mut home = vec![usize::MAX; intra.len()];
    for v in order {
        let mut total = 0usize;
        for (c, &f) in free.iter().enumerate() {
            if f > 0 && sizes[c] - 1 >= intra[v] {
                total += f;
            }
        }
        if total == 0 {
            return None;
        }
        let mut pick = rng.gen_range(0..total);
        for (c, &f) in free.iter().enumerate() {
            if f > 0 && sizes[c] - 1 >= intra[v] {
                if pick < f {
                    home[v] = c;
                    free[c] -= 1;
                    break;
                }
                pick -= f;
            }
        }
    }
    Some(home)
}

/// Pairs up stubs and swap-repairs self loops, duplicates, and pairs the
/// predicate rejects, spending at most `budget` swaps.
fn wire_stubs(
    mut stubs: Vec<u32>,
    reject: impl Fn(u32, u32) -> bool,
    seen: &mut HashSet<(u32, u32)>,
    budget: &mut usize,
    rng: &mut impl Rng,
) -> Option<Vec<(u32, u32)>> {
    debug_assert!(stubs.len() % 2 == 0);
    stubs.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = stubs.chunks(2).map(|p| (p[0], p[1])).collect();
    let key = |a: u32, b: u32| (a.min(b), a.max(b));
    let bad = |a: u32, b: u32, seen: &HashSet<(u32, u32)>| {
        a == b || reject(a, b) || seen.contains(&key(a, b))
    };
    // greedy insert, then swap conflicting edges against random partners;
    // the partner may itself be conflicting (two same-community pairs often
    // repair each other)
    let mut pending: Vec<usize> = Vec::new();
    for (i, &(a, b)) in edges.iter().enumerate() {
        if bad(a, b, seen) {
            pending.push(i);
        } else {
            seen.insert(key(a, b));
        }
    }
    while let Some(&i) = pending.last() {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let j = rng.gen_range(0..edges.len());
        if j == i {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = edges[j];
        // swap second endpoints: (a,b),(c,d) -> (a,d),(c,b)
        if bad(a, d, seen) || bad(c, b, seen) || key(a, d) == key(c, b) {
            continue;
        }
        let j_pending = pending.iter().position(|&p| p == j);
        if j_pending.is_none() {
            seen.remove(&key(c, d));
        }
        seen.insert(key(a, d));
        seen.insert(key(c, b));
        edges[i] = (a, d);
        edges[j] = (c, b);
        pending.pop();
        if let Some(pos) = j_pending {
            pending.swap_remove(pos);
        }
    }
    Some(edges)
}

/// Generates one benchmark graph with its planted partition. Fails with a
/// generation error when the configuration cannot be realized within a
/// bounded number of rebuild attempts.
pub fn generate_lfr(cfg: &LfrConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let min_degree = solve_min_degree(cfg.tau1, cfg.max_degree, cfg.avg_degree)?;
    for attempt in 0..BUILD_ATTEMPTS {
        let mut rng = rng::stream(cfg.seed, &[0x1F2, attempt as u64]);
        match build_once(cfg, min_degree, &mut rng)? {
            Some(bundle) => return Ok(bundle),
            None => continue,
        }
    }
    Err(Error::GenerationFailure(format!(
        "no valid wiring after {BUILD_ATTEMPTS} attempts (n={}, mu={})",
        cfg.n, cfg.mu
    )))
}

/// Erdős–Gallai test: an even-sum degree sequence is realizable as a
/// simple graph iff every prefix of the sorted sequence is bounded by
/// k(k-1) plus the capped tail.
fn is_graphical(need: &[usize]) -> bool {
    let mut d: Vec<usize> = need.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    if d.iter().sum::<usize>() % 2 == 1 {
        return false;
    }
    let n = d.len();
    let mut prefix = 0usize;
    for k in 1..=n {
        prefix += d[k - 1];
        let tail: usize = d[k..].iter().map(|&x| x.min(k)).sum();
        if prefix > k * (k - 1) + tail {
            return false;
        }
    }
    true
}

/// Builds the intra-community edges. Random stub pairing cannot terminate
/// when the community's degree sequence is not graphical (two hubs plus
/// degree-one leaves in a small community, for instance), so the sequence
/// is first shaved to graphical by dropping stubs from the largest entries,
/// realized largest-first, and then randomized by degree-preserving edge
/// swaps. `intra` is updated in place when shaving occurs.
fn wire_community(
    comm: &[u32],
    intra: &mut [usize],
    rng: &mut impl Rng,
) -> Option<Vec<(u32, u32)>> {
    let k = comm.len();
    let mut need: Vec<usize> = comm.iter().map(|&v| intra[v as usize]).collect();
    while !is_graphical(&need) {
        // two decrements keep the sum even; all-zero is always graphical
        for _ in 0..2 {
            let i = (0..k).max_by_key(|&i| (need[i], i))?;
            if need[i] == 0 {
                return None;
            }
            need[i] -= 1;
        }
    }
    for (i, &v) in comm.iter().enumerate() {
        intra[v as usize] = need[i];
    }

    // largest-first construction; cannot fail on a graphical sequence
    let mut order: Vec<usize> = (0..k).collect();
    let mut remaining = need;
    let mut local: Vec<(usize, usize)> = Vec::new();
    loop {
        order.sort_by_key(|&i| std::cmp::Reverse(remaining[i]));
        let v = order[0];
        if remaining[v] == 0 {
            break;
        }
        let take = remaining[v];
        remaining[v] = 0;
        let mut connected = 0;
        for &u in &order[1..] {
            if connected == take {
                break;
            }
            if remaining[u] > 0 {
                local.push((v.min(u), v.max(u)));
                remaining[u] -= 1;
                connected += 1;
            }
        }
        if connected < take {
            return None;
        }
    }

    // shake off the deterministic structure with simple-graph-preserving
    // double-edge swaps
    let m = local.len();
    if m > 1 {
        let mut eset: HashSet<(usize, usize)> = local.iter().copied().collect();
        for _ in 0..(10 * m) {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i == j {
                continue;
            }
            let (a, b) = local[i];
            let (c, d) = if rng.gen() {
                local[j]
            } else {
                let (c, d) = local[j];
                (d, c)
            };
            let e1 = (a.min(d), a.max(d));
            let e2 = (c.min(b), c.max(b));
            if a == d || c == b || e1 == e2 || eset.contains(&e1) || eset.contains(&e2) {
                continue;
            }
            eset.remove(&local[i]);
            eset.remove(&(c.min(d), c.max(d)));
            eset.insert(e1);
            eset.insert(e2);
            local[i] = e1;
            local[j] = e2;
        }
    }
    Some(
        local
            .into_iter()
            .map(|(i, j)| (comm[i], comm[j]))
            .collect(),
    )
}

/// Makes the stub counts wirable: the global inter-stub total must be even,
/// no community may hold more than half of all inter stubs (or some
/// same-community pair is forced), and every community's intra-stub total
/// must be even. The three fixes run in that order and do not feed back
/// into each other: the cap step sheds an even number of stubs at a time
/// (preserving global parity), and intra parity is repaired by dropping an
/// intra stub, never by touching the inter side.
fn repair_stub_counts(
    members: &[Vec<u32>],
    intra: &mut [usize],
    inter: &mut [usize],
) -> Option<()> {
    let held_by =
        |inter: &[usize], comm: &[u32]| -> usize { comm.iter().map(|&v| inter[v as usize]).sum() };
    let heaviest = |inter: &[usize], comm: &[u32]| -> Option<u32> {
        comm.iter()
            .filter(|&&v| inter[v as usize] > 0)
            .max_by_key(|&&v| (inter[v as usize], v))
            .copied()
    };

    let mut total: usize = inter.iter().sum();
    if total % 2 == 1 {
        let c = (0..members.len()).max_by_key(|&c| (held_by(inter, &members[c]), c))?;
        let v = heaviest(inter, &members[c])?;
        inter[v as usize] -= 1;
        total -= 1;
    }

    let mut guard = total / 2 + members.len() + 2;
    loop {
        let violator = (0..members.len()).find(|&c| 2 * held_by(inter, &members[c]) > total);
        let Some(c) = violator else { break };
        guard = guard.checked_sub(1)?;
        let comm = &members[c];
        let held = held_by(inter, comm);
        // shedding one stub lowers 2*held - total by one; shed an even
        // count so the global parity survives (zeroing the community lands
        // on total 0, also even)
        let excess = 2 * held - total;
        let shed = (excess + excess % 2).min(held);
        for _ in 0..shed {
            let v = heaviest(inter, comm)? as usize;
            inter[v] -= 1;
            total -= 1;
            if intra[v] + 1 <= comm.len() - 1 {
                intra[v] += 1;
            }
        }
    }

    for comm in members {
        let sum: usize = comm.iter().map(|&v| intra[v as usize]).sum();
        if sum % 2 == 1 {
            let &v = comm
                .iter()
                .filter(|&&v| intra[v as usize] > 0)
                .max_by_key(|&&v| (intra[v as usize], v))?;
            intra[v as usize] -= 1;
        }
    }
    Some(())
}

fn build_once(
    cfg: &LfrConfig,
    min_degree: f64,
    rng: &mut impl Rng,
) -> Result<Option<DatasetBundle>> {
    let sizes = draw_community_sizes(cfg, rng)?;
    let degrees: Vec<usize> = (0..cfg.n)
        .map(|_| power_law_inv(rng.gen(), cfg.tau1, min_degree, cfg.max_degree).round() as usize)
        .collect();
    let mut intra: Vec<usize> = degrees
        .iter()
        .map(|&d| stochastic_round((1.0 - cfg.mu) * d as f64, rng))
        .collect();
    let mut inter: Vec<usize> = degrees.iter().zip(&intra).map(|(&d, &i)| d - i).collect();
    let home = match assign_communities(&sizes, &intra, rng) {
        Some(h) => h,
        None => return Ok(None),
    };
    let members = {
        let mut m = vec![Vec::new(); sizes.len()];
        for (v, &c) in home.iter().enumerate() {
            m[c].push(v as u32);
        }
        m
    };
    if repair_stub_counts(&members, &mut intra, &mut inter).is_none() {
        return Ok(None);
    }

    let m_estimate = (intra.iter().sum::<usize>() + inter.iter().sum::<usize>()) / 2;
    let mut budget = 100 * m_estimate.max(1);
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m_estimate);
    for comm in &members {
        match wire_community(comm, &mut intra, rng) {
            Some(e) => edges.extend(e),
            None => return Ok(None),
        }
    }
    let mut stubs = Vec::new();
    for v in 0..cfg.n {
        stubs.extend(std::iter::repeat(v as u32).take(inter[v]));
    }
    let same_home = |a: u32, b: u32| home[a as usize] == home[b as usize];
    match wire_stubs(stubs, same_home, &mut seen, &mut budget, rng) {
        Some(e) => edges.extend(e),
        None => return Ok(None),
    }

    let weighted: Vec<(u32, u32, f64)> = edges.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    let graph = Graph::new(cfg.n, weighted)?;
    let labels: Vec<u32> = home.iter().map(|&c| c as u32).collect();
    Ok(Some(DatasetBundle {
        name: format!("lfr-n{}-mu{}-seed{}", cfg.n, cfg.mu, cfg.seed),
        graph,
        ground_truth: Partition::from_labels(&labels),
    }))
}

/// Fraction of edges whose endpoints live in different communities.
pub fn realized_mixing(g: &Graph, p: &Partition) -> Result<f64> {
    if p.len() != g.node_count() {
        return Err(Error::Validation(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.node_count()
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::UndefinedMixing);
    }
    let inter = g
        .edges()
        .iter()
        .filter(|&&(a, b, _)| p.community_of(a) != p.community_of(b))
        .count();
    Ok(inter as f64 / g.edge_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> LfrConfig {
        LfrConfig {
            n: 300,
            tau1: 2.5,
            tau2: 1.5,
            mu: 0.1,
            avg_degree: 6.0,
            max_degree: 30.0,
            min_community: 30,
            max_community: 100,
            seed,
        }
    }

    #[test]
    fn power_law_mean_matches_quadrature() {
        // trapezoid check of the closed form
        let (tau, a, b): (f64, f64, f64) = (2.5, 2.0, 100.0);
        let e = 1.0 - tau;
        let norm = (b.powf(e) - a.powf(e)) / e;
        let steps = 200_000;
        let h = (b - a) / steps as f64;
        let mut num = 0.0;
        for i in 0..=steps {
            let x: f64 = a + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            num += w * x * x.powf(-tau) * h;
        }
        let want = num / norm;
        let got = power_law_mean(tau, a, b);
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn min_degree_bisection_hits_target_mean() {
        let a = solve_min_degree(2.5, 100.0, 5.0).unwrap();
        assert!((power_law_mean(2.5, a, 100.0) - 5.0).abs() < 1e-6);
        assert!(solve_min_degree(2.5, 100.0, 2.0).is_err());
        assert!(solve_min_degree(2.5, 100.0, 200.0).is_err());
    }

    #[test]
    fn generated_graph_respects_structural_invariants() {
        let bundle = generate_lfr(&small_cfg(5)).unwrap();
        let g = &bundle.graph;
        let p = &bundle.ground_truth;
        assert_eq!(g.node_count(), 300);
        assert_eq!(p.len(), 300);
        let sizes = p.sizes();
        assert!(sizes.iter().all(|&s| (30..=100).contains(&s)), "{sizes:?}");
        let mean_deg = 2.0 * g.edge_count() as f64 / g.node_count() as f64;
        assert!((mean_deg - 6.0).abs() / 6.0 < 0.10, "mean degree {mean_deg}");
        let max_deg = (0..300).map(|v| g.neighbors(v).len()).max().unwrap();
        assert!(max_deg <= 30, "max degree {max_deg}");
        // Graph::new already rejects self loops and duplicates
    }

    #[test]
    fn mixing_tracks_the_target() {
        let mut sum = 0.0;
        for seed in 0..5 {
            let bundle = generate_lfr(&small_cfg(seed)).unwrap();
            sum += realized_mixing(&bundle.graph, &bundle.ground_truth).unwrap();
        }
        let mean = sum / 5.0;
        assert!((mean - 0.1).abs() < 0.03, "mean mixing {mean}");
    }

    #[test]
    fn zero_mixing_keeps_every_edge_internal() {
        let cfg = LfrConfig {
            mu: 0.0,
            ..small_cfg(11)
        };
        let bundle = generate_lfr(&cfg).unwrap();
        let mix = realized_mixing(&bundle.graph, &bundle.ground_truth).unwrap();
        assert_eq!(mix, 0.0);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_lfr(&small_cfg(42)).unwrap();
        let b = generate_lfr(&small_cfg(42)).unwrap();
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.ground_truth, b.ground_truth);
        let c = generate_lfr(&small_cfg(43)).unwrap();
        assert_ne!(a.graph.edges(), c.graph.edges());
    }

    #[test]
    fn forced_two_communities_hit_the_target_fraction() {
        let cfg = LfrConfig {
            n: 200,
            tau1: 2.5,
            tau2: 1.5,
            mu: 0.1,
            avg_degree: 6.0,
            max_degree: 20.0,
            min_community: 100,
            max_community: 100,
            seed: 3,
        };
        let mut sum = 0.0;
        let trials = 6;
        for seed in 0..trials {
            let bundle = generate_lfr(&LfrConfig { seed, ..cfg }).unwrap();
            assert_eq!(bundle.ground_truth.community_count(), 2);
            sum += realized_mixing(&bundle.graph, &bundle.ground_truth).unwrap();
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.1).abs() < 0.03, "mean mixing {mean}");
    }

    #[test]
    fn mixing_worked_examples() {
        // two triangles joined by one edge
        let g = Graph::new(
            6,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let mix = realized_mixing(&g, &p).unwrap();
        assert!((mix - 1.0 / 7.0).abs() < 1e-12);
        // complete bipartite across the two communities
        let kb = Graph::new(4, vec![(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap();
        let pb = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(realized_mixing(&kb, &pb).unwrap(), 1.0);
        // no edges
        let empty = Graph::new(2, vec![]).unwrap();
        assert!(matches!(
            realized_mixing(&empty, &Partition::from_labels(&[0, 0])),
            Err(Error::UndefinedMixing)
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = small_cfg(0);
        assert!(LfrConfig { tau1: 1.0, ..ok }.validate().is_err());
        assert!(LfrConfig { mu: 1.0, ..ok }.validate().is_err());
        assert!(LfrConfig {
            min_community: 200,
            max_community: 100,
            ..ok
        }
        .validate()
        .is_err());
        assert!(LfrConfig {
            avg_degree: 50.0,
            max_degree: 30.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(LfrConfig {
            max_degree: 300.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(ok.validate().is_ok());
    }
}
