//! Undirected weighted graphs, node partitions, and their text formats.
//!
//! Nodes are contiguous `u32` ids internally; original labels from input
//! files are kept in a side map so output refers to the caller's names.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Undirected graph with strictly positive edge weights and no self loops.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32, f64)>,
    adj: Vec<Vec<(u32, f64)>>,
    labels: Option<Vec<String>>,
    total_weight: f64,
}

impl Graph {
    /// Builds a graph over nodes `0..n`. Edges must be unique as unordered
    /// pairs; use [`Graph::from_weighted_pairs`] for accumulating input.
    pub fn new(n: usize, input: Vec<(u32, u32, f64)>) -> Result<Graph> {
        let mut edges = Vec::with_capacity(input.len());
        for (a, b, w) in input {
            if a == b {
                return Err(Error::Validation(format!("self loop on node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) exceeds node count {n}"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            edges.push((a.min(b), a.max(b), w));
        }
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        if edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Validation("duplicate edge".into()));
        }
        let mut adj = vec![Vec::new(); n];
        let mut total = 0.0;
        for &(a, b, w) in &edges {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
            total += w;
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Graph {
            n,
            edges,
            adj,
            labels: None,
            total_weight: total,
        })
    }

    /// Builds a graph from possibly repeated unordered pairs, merging
    /// duplicates by summing their weights.
    pub fn from_weighted_pairs(n: usize, pairs: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Graph> {
        let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
        for (a, b, w) in pairs {
            *acc.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
        let mut edges: Vec<_> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        Graph::new(n, edges)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Graph> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "label map has {} entries for {} nodes",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of edge weights, each edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Canonical edge list: `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, f64)] {
        &self.adj[v as usize]
    }

    /// Weighted degree of `v`.
    pub fn degree(&self, v: u32) -> f64 {
        self.adj[v as usize].iter().map(|&(_, w)| w).sum()
    }

    /// Original label of `v`; falls back to the numeric id.
    pub fn label(&self, v: u32) -> String {
        match &self.labels {
            Some(l) => l[v as usize].clone(),
            None => v.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Id for an original label, when the graph was loaded from a file.
    pub fn node_by_label(&self, label: &str) -> Option<u32> {
        let labels = self.labels.as_ref()?;
        labels.iter().position(|l| l == label).map(|i| i as u32)
    }
}

/// Partition of nodes `0..len` into communities labeled `0..k`.
///
/// Labels are normalized to first-appearance order, so two partitions are
/// equal iff they induce the same grouping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    k: usize,
}

impl Partition {
    /// Normalizes arbitrary labels into contiguous ones.
    pub fn from_labels(raw: &[u32]) -> Partition {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let next = remap.len() as u32;
            labels.push(*remap.entry(r).or_insert(next));
        }
        Partition {
            labels,
            k: remap.len(),
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            labels: (0..n as u32).collect(),
            k: n,
        }
    }

    pub fn single_community(n: usize) -> Partition {
        Partition {
            labels: vec![0; n],
            k: if n == 0 { 0 } else { 1 },
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.k
    }

    pub fn community_of(&self, v: u32) -> u32 {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Community member lists, indexed by community label.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(v as u32);
        }
        out
    }

    /// Community sizes, indexed by community label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.k];
        for &c in &self.labels {
            out[c as usize] += 1;
        }
        out
    }
}

/// Partition over an explicit subset of a larger node universe.
#[derive(Clone, Debug, PartialEq)]
pub struct SubPartition {
    nodes: Vec<u32>,
    part: Partition,
}

impl SubPartition {
    /// `nodes` must be unique; entries are sorted together with labels.
    pub fn new(nodes: Vec<u32>, raw_labels: Vec<u32>) -> Result<SubPartition> {
        if nodes.len() != raw_labels.len() {
            return Err(Error::Validation(
                "node list and label list differ in length".into(),
            ));
        }
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| nodes[i]);
        let sorted_nodes: Vec<u32> = order.iter().map(|&i| nodes[i]).collect();
        if sorted_nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate node in subset".into()));
        }
        let sorted_labels: Vec<u32> = order.iter().map(|&i| raw_labels[i]).collect();
        Ok(SubPartition {
            nodes: sorted_nodes,
            part: Partition::from_labels(&sorted_labels),
        })
    }

    /// Sorted global node ids the partition covers.
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    /// Partition over positions of [`SubPartition::nodes`].
    pub fn partition(&self) -> &Partition {
        &self.part
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.part.community_count()
    }

    /// Community of a global node id, if covered.
    pub fn community_of_node(&self, v: u32) -> Option<u32> {
        self.nodes
            .binary_search(&v)
            .ok()
            .map(|i| self.part.community_of(i as u32))
    }

    /// Restriction to a smaller subset of covered nodes.
    pub fn restrict(&self, nodes: &[u32]) -> Result<SubPartition> {
        let mut labels = Vec::with_capacity(nodes.len());
        for &v in nodes {
            match self.community_of_node(v) {
                Some(c) => labels.push(c),
                None => {
                    return Err(Error::Validation(format!(
                        "node {v} is outside the partitioned subset"
                    )))
                }
            }
        }
        SubPartition::new(nodes.to_vec(), labels)
    }
}

/// Restriction of a full partition to a node subset, labels renormalized.
pub fn restrict_partition(p: &Partition, nodes: &[u32]) -> Result<SubPartition> {
    let mut labels = Vec::with_capacity(nodes.len());
    for &v in nodes {
        if v as usize >= p.len() {
            return Err(Error::Validation(format!(
                "node {v} is outside the partition universe"
            )));
        }
        labels.push(p.community_of(v));
    }
    SubPartition::new(nodes.to_vec(), labels)
}

/// Named graph paired with its ground-truth communities.
#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    pub ground_truth: Partition,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .collect())
}

/// Loads a whitespace- or tab-separated edge list: `u v [w]`. Lines starting
/// with `#` are comments. Nodes are relabeled to contiguous ids in order of
/// first appearance; duplicate edges are merged by summing weights.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
    let mut dupes = 0usize;
    let intern = |tok: &str, labels: &mut Vec<String>, ids: &mut HashMap<String, u32>| -> u32 {
        *ids.entry(tok.to_string()).or_insert_with(|| {
            labels.push(tok.to_string());
            (labels.len() - 1) as u32
        })
    };
    for (lineno, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        let a = intern(fields[0], &mut labels, &mut ids);
        let b = intern(fields[1], &mut labels, &mut ids);
        if a == b {
            return Err(Error::parse(path, lineno, format!("self loop on {}", fields[0])));
        }
        let w = if fields.len() == 3 {
            fields[2]
                .parse::<f64>()
                .map_err(|_| Error::parse(path, lineno, format!("bad weight {:?}", fields[2])))?
        } else {
            1.0
        };
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::parse(path, lineno, format!("non-positive weight {w}")));
        }
        let key = (a.min(b), a.max(b));
        if acc.contains_key(&key) {
            dupes += 1;
        }
        *acc.entry(key).or_insert(0.0) += w;
    }
    if acc.is_empty() {
        return Err(Error::EmptyInput("edge list"));
    }
    if dupes > 0 {
        log::warn!("{}: merged {dupes} duplicate edges by summing weights", path.display());
    }
    let edges: Vec<_> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    Graph::from_weighted_pairs(labels.len(), edges)?.with_labels(labels)
}

/// Writes the canonical edge list: `u<TAB>v<TAB>w`, edges in canonical
/// order, weights in shortest round-trip notation.
pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for &(a, b, w) in g.edges() {
        writeln!(out, "{}\t{}\t{}", g.label(a), g.label(b), w).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Raw `node<TAB>community` pairs from a community file.
pub fn read_community_pairs(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        out.push((fields[0].to_string(), fields[1].to_string()));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("community file"));
    }
    Ok(out)
}

/// Loads ground-truth communities for `g`. Every graph node must appear
/// exactly once; community labels may be arbitrary strings.
pub fn load_communities(path: impl AsRef<Path>, g: &Graph) -> Result<Partition> {
    let path = path.as_ref();
    let pairs = read_community_pairs(path)?;
    let mut label_ids: HashMap<String, u32> = HashMap::new();
    let mut raw = vec![u32::MAX; g.node_count()];
    let mut seen = vec![false; g.node_count()];
    for (node, comm) in &pairs {
        let v = g
            .node_by_label(node)
            .or_else(|| {
                if g.labels().is_none() {
                    node.parse::<u32>().ok().filter(|&v| (v as usize) < g.node_count())
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::Validation(format!("unknown node {node} in community file")))?;
        if seen[v as usize] {
            return Err(Error::Validation(format!("node {node} listed twice")));
        }
        seen[v as usize] = true;
        let next = label_ids.len() as u32;
        raw[v as usize] = *label_ids.entry(comm.clone()).or_insert(next);
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Err(Error::IncompleteGroundTruth(g.label(v as u32)));
    }
    Ok(Partition::from_labels(&raw))
}

/// Writes `node<TAB>community` lines for a full partition. `names` gives the
/// node labels; numeric ids are used when absent.
pub fn write_communities(p: &Partition, names: Option<&[String]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for v in 0..p.len() {
        let name = match names {
            Some(n) => n[v].clone(),
            None => v.to_string(),
        };
        writeln!(out, "{}\t{}", name, p.community_of(v as u32)).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `node<TAB>community` lines for a subset partition, `names` indexed
/// by global node id.
pub fn write_sub_communities(
    sp: &SubPartition,
    names: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (i, &v) in sp.nodes().iter().enumerate() {
        let name = match names {
            Some(n) => n[v as usize].clone(),
            None => v.to_string(),
        };
        writeln!(out, "{}\t{}", name, sp.partition().community_of(i as u32)).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads a named dataset from an edge list and a community file.
pub fn load_dataset(
    name: impl Into<String>,
    edges: impl AsRef<Path>,
    communities: impl AsRef<Path>,
) -> Result<DatasetBundle> {
    let graph = load_edge_list(edges)?;
    let ground_truth = load_communities(communities, &graph)?;
    Ok(DatasetBundle {
        name: name.into(),
        graph,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmpfile(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_contiguous_ids_and_label_map() {
        let f = tmpfile("# comment\nx y\ny z 2.5\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.label(0), "x");
        assert_eq!(g.node_by_label("z"), Some(2));
        assert_eq!(g.total_weight(), 3.5);
    }

    #[test]
    fn merges_duplicate_edges_by_summing() {
        let f = tmpfile("a b 1\nb a 2\n");
        let g = load_edge_list(f.path()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].2, 3.0);
    }

    #[test]
    fn rejects_self_loops_and_bad_weights() {
        assert!(matches!(
            load_edge_list(tmpfile("a a\n").path()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_edge_list(tmpfile("a b -1\n").path()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_edge_list(tmpfile("a b c d\n").path()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn empty_edge_list_is_an_error() {
        assert!(matches!(
            load_edge_list(tmpfile("# nothing\n").path()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn edge_list_round_trips() {
        let f = tmpfile("a b 1\nb c 0.125\na c 3\n");
        let g = load_edge_list(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_edge_list(&g, out.path()).unwrap();
        let g2 = load_edge_list(out.path()).unwrap();
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(g.edges(), g2.edges());
        assert_eq!(g.labels(), g2.labels());
    }

    #[test]
    fn community_loader_checks_coverage() {
        let f = tmpfile("a b\nb c\n");
        let g = load_edge_list(f.path()).unwrap();
        let p = load_communities(tmpfile("a 0\nb 0\nc 1\n").path(), &g).unwrap();
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.community_of(0), p.community_of(1));

        assert!(matches!(
            load_communities(tmpfile("a 0\nb 0\n").path(), &g),
            Err(Error::IncompleteGroundTruth(_))
        ));
        assert!(matches!(
            load_communities(tmpfile("a 0\nb 0\nc 1\nq 1\n").path(), &g),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_communities(tmpfile("a 0\na 0\nb 0\nc 1\n").path(), &g),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn community_labels_may_be_arbitrary_strings() {
        let f = tmpfile("a b\nb c\n");
        let g = load_edge_list(f.path()).unwrap();
        let p = load_communities(tmpfile("a red\nb red\nc blue\n").path(), &g).unwrap();
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.labels(), &[0, 0, 1]);
    }

    #[test]
    fn partitions_normalize_labels() {
        let p = Partition::from_labels(&[7, 7, 2, 9, 2]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.community_count(), 3);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
    }

    #[test]
    fn partition_round_trips_through_file() {
        let p = Partition::from_labels(&[1, 0, 1, 2]);
        let out = tempfile::NamedTempFile::new().unwrap();
        write_communities(&p, None, out.path()).unwrap();
        let f = tmpfile("0 1\n1 2\n2 3\n3 0\n");
        let g = load_edge_list(f.path()).unwrap();
        // graph above has labels 0,1,2,3 in id order
        let p2 = load_communities(out.path(), &g).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn restriction_renormalizes_and_composes() {
        let p = Partition::from_labels(&[0, 0, 1, 1, 2, 2]);
        let sub = restrict_partition(&p, &[4, 2, 5]).unwrap();
        assert_eq!(sub.nodes(), &[2, 4, 5]);
        assert_eq!(sub.partition().labels(), &[0, 1, 1]);

        let sub2 = sub.restrict(&[2, 5]).unwrap();
        let direct = restrict_partition(&p, &[2, 5]).unwrap();
        assert_eq!(sub2, direct);

        assert!(restrict_partition(&p, &[9]).is_err());
        assert!(restrict_partition(&p, &[1, 1]).is_err());
    }
}
