//! Partition similarity under partial observation.
//!
//! A detected partition covers only the observed nodes; the reference
//! partition covers the whole graph. Every metric therefore comes in two
//! variants. The `sub` variant restricts the reference to the observed
//! nodes. The `all` variant scores all nodes, treating the unobserved ones
//! by a per-metric convention: an extra "unknown" cluster for NMI,
//! one singleton each for Jaccard and the pairwise F measure, and for the
//! Pearson correlation a prediction entry of 0 on observed/unobserved pairs
//! and 0.5 on pairs of two unobserved nodes.
//!
//! Everything is computed from pair-count summaries; no O(n^2) incidence
//! vector is materialized outside tests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Partition, SubPartition};

/// Which node universe a metric is computed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// observed nodes only
    Sub,
    /// every node of the reference partition
    All,
}

/// Node-pair agreement counts between a predicted and a reference
/// partition. `n11` pairs share a community in both, `n10` only in the
/// prediction, `n01` only in the reference, `n00` in neither;
/// `half_pairs`/`half_same_truth` carry the mass of pairs whose prediction
/// entry is 0.5 (both nodes unobserved; only nonzero for [`Variant::All`]).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IncidenceSummary {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
    pub pairs: u64,
    pub half_pairs: u64,
    pub half_same_truth: u64,
}

fn choose2(n: u64) -> u64 {
    n * (n.saturating_sub(1)) / 2
}

fn check_cover(pred: &SubPartition, truth: &Partition) -> Result<()> {
    match pred.nodes().last() {
        Some(&max) if (max as usize) >= truth.len() => Err(Error::Validation(format!(
            "observed node {max} is outside the reference partition (size {})",
            truth.len()
        ))),
        _ => Ok(()),
    }
}

impl IncidenceSummary {
    /// Counts over the observed-node pairs.
    pub fn sub(pred: &SubPartition, truth: &Partition) -> Result<IncidenceSummary> {
        check_cover(pred, truth)?;
        let mut cell: HashMap<(u32, u32), u64> = HashMap::new();
        let mut pred_sz: HashMap<u32, u64> = HashMap::new();
        let mut truth_sz: HashMap<u32, u64> = HashMap::new();
        for (i, &v) in pred.nodes().iter().enumerate() {
            let p = pred.partition().labels()[i];
            let t = truth.community_of(v);
            *cell.entry((p, t)).or_insert(0) += 1;
            *pred_sz.entry(p).or_insert(0) += 1;
            *truth_sz.entry(t).or_insert(0) += 1;
        }
        let n11: u64 = cell.values().map(|&c| choose2(c)).sum();
        let same_pred: u64 = pred_sz.values().map(|&c| choose2(c)).sum();
        let same_truth: u64 = truth_sz.values().map(|&c| choose2(c)).sum();
        let pairs = choose2(pred.len() as u64);
        let n10 = same_pred - n11;
        let n01 = same_truth - n11;
        Ok(IncidenceSummary {
            n11,
            n10,
            n01,
            n00: pairs - n11 - n10 - n01,
            pairs,
            half_pairs: 0,
            half_same_truth: 0,
        })
    }

    /// Counts over all pairs of the reference universe, with every
    /// unobserved node in its own predicted singleton. The 0.5-entry mass
    /// for the mixed-vector correlation is recorded on the side.
    pub fn all(pred: &SubPartition, truth: &Partition) -> Result<IncidenceSummary> {
        check_cover(pred, truth)?;
        let sub = IncidenceSummary::sub(pred, truth)?;
        let n = truth.len() as u64;
        let pairs = choose2(n);
        let same_truth_full: u64 = truth.sizes().iter().map(|&s| choose2(s as u64)).sum();
        let mut outside_sz: HashMap<u32, u64> = HashMap::new();
        let mut next = 0usize;
        let nodes = pred.nodes();
        for v in 0..truth.len() as u32 {
            if next < nodes.len() && nodes[next] == v {
                next += 1;
                continue;
            }
            *outside_sz.entry(truth.community_of(v)).or_insert(0) += 1;
        }
        let unseen = n - pred.len() as u64;
        let half_same_truth: u64 = outside_sz.values().map(|&c| choose2(c)).sum();
        let n11 = sub.n11;
        let n10 = sub.n10;
        let n01 = same_truth_full - n11;
        Ok(IncidenceSummary {
            n11,
            n10,
            n01,
            n00: pairs - n11 - n10 - n01,
            pairs,
            half_pairs: choose2(unseen),
            half_same_truth,
        })
    }
}

fn correlation(sx: f64, sxx: f64, sy: f64, syy: f64, sxy: f64, n: f64) -> Option<f64> {
    let var_x = n * sxx - sx * sx;
    let var_y = n * syy - sy * sy;
    if var_x <= 0.0 || var_y <= 0.0 {
        return None;
    }
    Some(((n * sxy - sx * sy) / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the same-community incidence vectors over the
/// observed-node pairs. `None` when either vector is constant (a single
/// community, or all singletons): the correlation is undefined there and
/// must not be reported as 0.
pub fn pearson_sub(pred: &SubPartition, truth: &Partition) -> Result<Option<f64>> {
    let s = IncidenceSummary::sub(pred, truth)?;
    let sx = (s.n11 + s.n10) as f64;
    let sy = (s.n11 + s.n01) as f64;
    Ok(correlation(sx, sx, sy, sy, s.n11 as f64, s.pairs as f64))
}

/// Pearson correlation over all pairs of the reference universe. The
/// prediction entry is the usual 0/1 on observed pairs, 0 when exactly one
/// node is observed, and 0.5 when neither is.
pub fn pearson_all(pred: &SubPartition, truth: &Partition) -> Result<Option<f64>> {
    let s = IncidenceSummary::all(pred, truth)?;
    let half = s.half_pairs as f64;
    let sx = (s.n11 + s.n10) as f64 + 0.5 * half;
    let sxx = (s.n11 + s.n10) as f64 + 0.25 * half;
    let sy = (s.n11 + s.n01) as f64;
    let sxy = s.n11 as f64 + 0.5 * s.half_same_truth as f64;
    Ok(correlation(sx, sxx, sy, sy, sxy, s.pairs as f64))
}

/// Entropy (natural log) of community sizes over a universe of `n` nodes.
fn entropy(sizes: impl Iterator<Item = u64>, n: f64) -> f64 {
    let mut h = 0.0;
    for s in sizes {
        if s > 0 {
            let p = s as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

/// Normalized mutual information with arithmetic-mean normalization,
/// `2 I / (H_pred + H_truth)`. The `all` variant groups every unobserved
/// node into one extra predicted cluster. Two zero-entropy partitions over
/// the same universe are identical, scored 1.
pub fn nmi(pred: &SubPartition, truth: &Partition, variant: Variant) -> Result<f64> {
    check_cover(pred, truth)?;
    let universe = match variant {
        Variant::Sub => pred.len(),
        Variant::All => truth.len(),
    };
    if universe == 0 {
        return Err(Error::EmptyInput("node universe"));
    }
    let unknown = pred.partition().community_count() as u32;
    // ordered maps: the entropy and information sums below must not depend
    // on hash iteration order
    let mut cell: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut pred_sz: BTreeMap<u32, u64> = BTreeMap::new();
    let mut truth_sz: BTreeMap<u32, u64> = BTreeMap::new();
    let mut tally = |p: u32, t: u32| {
        *cell.entry((p, t)).or_insert(0) += 1;
        *pred_sz.entry(p).or_insert(0) += 1;
        *truth_sz.entry(t).or_insert(0) += 1;
    };
    for (i, &v) in pred.nodes().iter().enumerate() {
        tally(pred.partition().labels()[i], truth.community_of(v));
    }
    if variant == Variant::All {
        let nodes = pred.nodes();
        let mut next = 0usize;
        for v in 0..truth.len() as u32 {
            if next < nodes.len() && nodes[next] == v {
                next += 1;
                continue;
            }
            tally(unknown, truth.community_of(v));
        }
    }
    let n = universe as f64;
    let h1 = entropy(pred_sz.values().copied(), n);
    let h2 = entropy(truth_sz.values().copied(), n);
    if h1 + h2 == 0.0 {
        // both are the one-block partition of the same universe
        return Ok(1.0);
    }
    let mut info = 0.0;
    for (&(p, t), &c) in &cell {
        let joint = c as f64 / n;
        info += joint * (joint * n * n / (pred_sz[&p] * truth_sz[&t]) as f64).ln();
    }
    Ok((2.0 * info / (h1 + h2)).clamp(0.0, 1.0))
}

fn summary(pred: &SubPartition, truth: &Partition, variant: Variant) -> Result<IncidenceSummary> {
    match variant {
        Variant::Sub => IncidenceSummary::sub(pred, truth),
        Variant::All => IncidenceSummary::all(pred, truth),
    }
}

/// Pairwise Jaccard index `n11 / (n11 + n10 + n01)`; two all-singleton
/// partitions (denominator 0) count as perfect agreement.
pub fn jaccard(pred: &SubPartition, truth: &Partition, variant: Variant) -> Result<f64> {
    let s = summary(pred, truth, variant)?;
    let denom = s.n11 + s.n10 + s.n01;
    Ok(if denom == 0 {
        1.0
    } else {
        s.n11 as f64 / denom as f64
    })
}

/// Pairwise F measure, the harmonic mean of precision `n11/(n11+n10)` and
/// recall `n11/(n11+n01)`; 0 when no pair agrees.
pub fn f_measure(pred: &SubPartition, truth: &Partition, variant: Variant) -> Result<f64> {
    let s = summary(pred, truth, variant)?;
    Ok(if s.n11 == 0 {
        0.0
    } else {
        2.0 * s.n11 as f64 / (2 * s.n11 + s.n10 + s.n01) as f64
    })
}

/// The eight reported metric variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricName {
    PearsonSub,
    PearsonAll,
    NmiSub,
    NmiAll,
    JaccardSub,
    JaccardAll,
    FSub,
    FAll,
}

impl MetricName {
    pub const ALL: [MetricName; 8] = [
        MetricName::PearsonSub,
        MetricName::PearsonAll,
        MetricName::NmiSub,
        MetricName::NmiAll,
        MetricName::JaccardSub,
        MetricName::JaccardAll,
        MetricName::FSub,
        MetricName::FAll,
    ];
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::PearsonSub => "pearson-sub",
            MetricName::PearsonAll => "pearson-all",
            MetricName::NmiSub => "nmi-sub",
            MetricName::NmiAll => "nmi-all",
            MetricName::JaccardSub => "jaccard-sub",
            MetricName::JaccardAll => "jaccard-all",
            MetricName::FSub => "f-sub",
            MetricName::FAll => "f-all",
        })
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<MetricName> {
        Ok(match s {
            "pearson-sub" => MetricName::PearsonSub,
            "pearson-all" => MetricName::PearsonAll,
            "nmi-sub" => MetricName::NmiSub,
            "nmi-all" => MetricName::NmiAll,
            "jaccard-sub" => MetricName::JaccardSub,
            "jaccard-all" => MetricName::JaccardAll,
            "f-sub" => MetricName::FSub,
            "f-all" => MetricName::FAll,
            other => return Err(Error::Validation(format!("unknown metric {other:?}"))),
        })
    }
}

/// Evaluates one named metric. `None` marks an undefined value (a constant
/// incidence vector under Pearson), which aggregation must skip.
pub fn evaluate(name: MetricName, pred: &SubPartition, truth: &Partition) -> Result<Option<f64>> {
    Ok(match name {
        MetricName::PearsonSub => pearson_sub(pred, truth)?,
        MetricName::PearsonAll => pearson_all(pred, truth)?,
        MetricName::NmiSub => Some(nmi(pred, truth, Variant::Sub)?),
        MetricName::NmiAll => Some(nmi(pred, truth, Variant::All)?),
        MetricName::JaccardSub => Some(jaccard(pred, truth, Variant::Sub)?),
        MetricName::JaccardAll => Some(jaccard(pred, truth, Variant::All)?),
        MetricName::FSub => Some(f_measure(pred, truth, Variant::Sub)?),
        MetricName::FAll => Some(f_measure(pred, truth, Variant::All)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub_of(nodes: Vec<u32>, labels: Vec<u32>) -> SubPartition {
        SubPartition::new(nodes, labels).unwrap()
    }

    fn full(labels: &[u32]) -> Partition {
        Partition::from_labels(labels)
    }

    fn assert_near(got: Option<f64>, want: f64) {
        let got = got.expect("value should be defined");
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn identical_partitions_score_perfectly() {
        let truth = full(&[0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![5, 5, 9, 9]);
        assert_near(pearson_sub(&pred, &truth).unwrap(), 1.0);
        assert_near(pearson_all(&pred, &truth).unwrap(), 1.0);
        for variant in [Variant::Sub, Variant::All] {
            assert_eq!(nmi(&pred, &truth, variant).unwrap(), 1.0);
            assert_eq!(jaccard(&pred, &truth, variant).unwrap(), 1.0);
            assert_eq!(f_measure(&pred, &truth, variant).unwrap(), 1.0);
        }
    }

    #[test]
    fn crossed_pairs_give_negative_correlation() {
        // pred {ab}{cd} vs truth {ac}{bd} over 6 pairs
        let truth = full(&[0, 1, 0, 1]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![0, 0, 1, 1]);
        let r = pearson_sub(&pred, &truth).unwrap().unwrap();
        assert!((r - (-0.5)).abs() < 1e-12, "r = {r}");
        assert_eq!(nmi(&pred, &truth, Variant::Sub).unwrap(), 0.0);
        assert_eq!(jaccard(&pred, &truth, Variant::Sub).unwrap(), 0.0);
        assert_eq!(f_measure(&pred, &truth, Variant::Sub).unwrap(), 0.0);
    }

    #[test]
    fn restriction_scores_against_observed_truth_only() {
        // truth {ab}{cd}; observed {a,b,c} predicted {ab}{c}
        let truth = full(&[0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1, 2], vec![0, 0, 1]);
        assert_near(pearson_sub(&pred, &truth).unwrap(), 1.0);
        assert_eq!(nmi(&pred, &truth, Variant::Sub).unwrap(), 1.0);
    }

    #[test]
    fn constant_vectors_are_undefined_not_zero() {
        let truth = full(&[0, 0, 1, 1]);
        let singletons = sub_of(vec![0, 1, 2, 3], vec![0, 1, 2, 3]);
        assert_eq!(pearson_sub(&singletons, &truth).unwrap(), None);
        let one_block = sub_of(vec![0, 1, 2, 3], vec![0, 0, 0, 0]);
        assert_eq!(pearson_sub(&one_block, &truth).unwrap(), None);
        let trivial_truth = full(&[0, 0, 0, 0]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![0, 0, 1, 1]);
        assert_eq!(pearson_sub(&pred, &trivial_truth).unwrap(), None);
    }

    #[test]
    fn unobserved_pairs_enter_the_mixed_vector() {
        // V = {a,b,c}, observed {a,b} as one community, truth {ab}{c}
        let truth = full(&[0, 0, 1]);
        let pred = sub_of(vec![0, 1], vec![0, 0]);
        assert_near(pearson_all(&pred, &truth).unwrap(), 1.0);
        // nothing observed: prediction vector is constant 0.5
        let none = sub_of(vec![], vec![]);
        assert_eq!(pearson_all(&none, &truth).unwrap(), None);
    }

    #[test]
    fn full_observation_collapses_all_onto_sub() {
        let truth = full(&[0, 1, 2, 0, 1, 2, 0]);
        let pred = sub_of((0..7).collect(), vec![0, 0, 1, 1, 2, 2, 0]);
        assert_eq!(
            pearson_all(&pred, &truth).unwrap(),
            pearson_sub(&pred, &truth).unwrap()
        );
        assert_eq!(
            jaccard(&pred, &truth, Variant::All).unwrap(),
            jaccard(&pred, &truth, Variant::Sub).unwrap()
        );
        assert_eq!(
            f_measure(&pred, &truth, Variant::All).unwrap(),
            f_measure(&pred, &truth, Variant::Sub).unwrap()
        );
        assert!(
            (nmi(&pred, &truth, Variant::All).unwrap()
                - nmi(&pred, &truth, Variant::Sub).unwrap())
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn one_block_prediction_has_no_information() {
        let truth = full(&[0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![0, 0, 0, 0]);
        assert_eq!(nmi(&pred, &truth, Variant::Sub).unwrap(), 0.0);
    }

    #[test]
    fn f_measure_worked_example() {
        // pred one block of 4 vs truth {ab}{cd}: P = 2/6, R = 1
        let truth = full(&[0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![0, 0, 0, 0]);
        let f = f_measure(&pred, &truth, Variant::Sub).unwrap();
        assert!((f - 0.5).abs() < 1e-12, "f = {f}");
    }

    #[test]
    fn all_singletons_against_all_singletons_is_agreement() {
        let truth = full(&[0, 1, 2]);
        let pred = sub_of(vec![0, 1, 2], vec![2, 1, 0]);
        assert_eq!(jaccard(&pred, &truth, Variant::Sub).unwrap(), 1.0);
        // but against real communities it is zero overlap
        let truth2 = full(&[0, 0, 0]);
        assert_eq!(jaccard(&pred, &truth2, Variant::Sub).unwrap(), 0.0);
    }

    #[test]
    fn unknown_cluster_extension_matches_direct_computation() {
        // V = 5 nodes, observed {0,1,4} predicted {0,1}{4};
        // extended prediction: {0,1},{4},{2,3} vs truth {0,1,2},{3,4}
        let truth = full(&[0, 0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1, 4], vec![0, 0, 1]);
        let got = nmi(&pred, &truth, Variant::All).unwrap();
        // direct confusion over the extension
        let ext = sub_of(vec![0, 1, 2, 3, 4], vec![0, 0, 2, 2, 1]);
        let want = nmi(&ext, &truth, Variant::Sub).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn label_permutations_do_not_matter() {
        let truth_a = full(&[0, 0, 1, 1, 2]);
        let truth_b = full(&[7, 7, 2, 2, 40]);
        let pred = sub_of(vec![0, 1, 2, 3], vec![0, 1, 1, 0]);
        for name in MetricName::ALL {
            assert_eq!(
                evaluate(name, &pred, &truth_a).unwrap(),
                evaluate(name, &pred, &truth_b).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn jaccard_and_f_all_extend_with_singletons() {
        // truth {0,1,2},{3,4}; observed {0,1} predicted together.
        // extension: pred pairs {01}; truth pairs {01,02,12,34}
        // n11 = 1, n10 = 0, n01 = 3
        let truth = full(&[0, 0, 0, 1, 1]);
        let pred = sub_of(vec![0, 1], vec![0, 0]);
        let j = jaccard(&pred, &truth, Variant::All).unwrap();
        assert!((j - 0.25).abs() < 1e-12);
        let f = f_measure(&pred, &truth, Variant::All).unwrap();
        assert!((f - 2.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_nodes_are_rejected() {
        let truth = full(&[0, 0]);
        let pred = sub_of(vec![0, 5], vec![0, 0]);
        assert!(matches!(
            pearson_sub(&pred, &truth),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn metric_names_round_trip() {
        for name in MetricName::ALL {
            let s = name.to_string();
            assert_eq!(s.parse::<MetricName>().unwrap(), name);
        }
        assert!("rand-index".parse::<MetricName>().is_err());
    }
}
