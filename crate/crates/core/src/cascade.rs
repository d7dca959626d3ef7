//! Cascades: ordered infection events, optional transmission trees, and the
//! text formats used to exchange them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One observed cascade: `(node, time)` events sorted by time, ties broken
/// by node id. The first event is at time zero and nodes are unique.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    events: Vec<(u32, f64)>,
}

impl Cascade {
    pub fn new(mut events: Vec<(u32, f64)>) -> Result<Cascade> {
        if events.is_empty() {
            return Err(Error::MalformedCascade("no events".into()));
        }
        for &(v, t) in &events {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::MalformedCascade(format!(
                    "node {v} has invalid time {t}"
                )));
            }
        }
        events.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if events[0].1 != 0.0 {
            return Err(Error::MalformedCascade(format!(
                "first event at t = {}, expected 0",
                events[0].1
            )));
        }
        let mut nodes: Vec<u32> = events.iter().map(|&(v, _)| v).collect();
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedCascade("repeated node".into()));
        }
        Ok(Cascade { events })
    }

    /// Events sorted by `(time, node)`.
    pub fn events(&self) -> &[(u32, f64)] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.events.iter().map(|&(v, _)| v)
    }

    pub fn last_time(&self) -> f64 {
        self.events.last().unwrap().1
    }
}

/// Horizon estimate for one cascade: last event time plus the mean gap
/// between consecutive events. Needs at least two events.
pub fn estimate_tmax(c: &Cascade) -> Result<f64> {
    let ev = c.events();
    if ev.len() < 2 {
        return Err(Error::UndefinedEstimate);
    }
    let last = ev[ev.len() - 1].1;
    let mean_gap = (last - ev[0].1) / (ev.len() - 1) as f64;
    Ok(last + mean_gap)
}

/// A set of cascades over one node universe, with optional per-cascade
/// transmission edges (who infected whom) and an optional node label map.
#[derive(Clone, Debug)]
pub struct CascadeSet {
    cascades: Vec<Cascade>,
    transmissions: Option<Vec<Vec<(u32, u32)>>>,
    labels: Option<Vec<String>>,
}

impl CascadeSet {
    pub fn new(cascades: Vec<Cascade>, transmissions: Option<Vec<Vec<(u32, u32)>>>) -> Result<CascadeSet> {
        if let Some(tr) = &transmissions {
            if tr.len() != cascades.len() {
                return Err(Error::Validation(
                    "transmission lists are not parallel to cascades".into(),
                ));
            }
            for (c, t) in cascades.iter().zip(tr) {
                if t.len() != c.len() - 1 {
                    return Err(Error::Validation(format!(
                        "cascade with {} events has {} transmissions",
                        c.len(),
                        t.len()
                    )));
                }
            }
        }
        Ok(CascadeSet {
            cascades,
            transmissions,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> CascadeSet {
        self.labels = Some(labels);
        self
    }

    pub fn cascades(&self) -> &[Cascade] {
        &self.cascades
    }

    pub fn len(&self) -> usize {
        self.cascades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cascades.is_empty()
    }

    pub fn transmissions(&self) -> Option<&[Vec<(u32, u32)>]> {
        self.transmissions.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Name of a node for output purposes.
    pub fn node_name(&self, v: u32) -> String {
        match &self.labels {
            Some(l) => l[v as usize].clone(),
            None => v.to_string(),
        }
    }

    /// Sorted, deduplicated list of all nodes observed in any cascade.
    pub fn observed_nodes(&self) -> Vec<u32> {
        let mut nodes: Vec<u32> = self.cascades.iter().flat_map(|c| c.nodes()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Per-cascade horizon estimates; errors on single-event cascades.
    pub fn tmax_estimates(&self) -> Result<Vec<f64>> {
        self.cascades.iter().map(estimate_tmax).collect()
    }

    /// Total transmission count, `sum(|C| - 1)`.
    pub fn transmission_count(&self) -> usize {
        self.cascades.iter().map(|c| c.len() - 1).sum()
    }

    /// Keeps only the first `n` cascades.
    pub fn truncate(&mut self, n: usize) {
        self.cascades.truncate(n);
        if let Some(tr) = &mut self.transmissions {
            tr.truncate(n);
        }
    }
}

/// Drops single-node cascades, keeping transmission lists parallel.
pub fn filter_singletons(cs: CascadeSet) -> CascadeSet {
    let CascadeSet {
        cascades,
        transmissions,
        labels,
    } = cs;
    match transmissions {
        Some(tr) => {
            let (c, t): (Vec<_>, Vec<_>) = cascades
                .into_iter()
                .zip(tr)
                .filter(|(c, _)| c.len() >= 2)
                .unzip();
            CascadeSet {
                cascades: c,
                transmissions: Some(t),
                labels,
            }
        }
        None => CascadeSet {
            cascades: cascades.into_iter().filter(|c| c.len() >= 2).collect(),
            transmissions: None,
            labels,
        },
    }
}

fn format_time(t: f64) -> String {
    // nine significant digits, stable across platforms
    format!("{t:.8e}")
}

fn check_name(name: &str) -> Result<()> {
    if name.contains(':') || name.contains(';') || name.contains('>') || name.chars().any(|c| c.is_whitespace()) {
        return Err(Error::Validation(format!(
            "node name {name:?} contains a reserved separator"
        )));
    }
    Ok(())
}

/// Writes one cascade per line: `node:time` events joined by `;`, events in
/// cascade order, times with nine significant digits.
pub fn write_cascades(cs: &CascadeSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for c in cs.cascades() {
        let mut first = true;
        for &(v, t) in c.events() {
            let name = cs.node_name(v);
            check_name(&name)?;
            if !first {
                out.push(';');
            }
            write!(out, "{}:{}", name, format_time(t)).unwrap();
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes one line of `infector>infectee` pairs joined by `;` per cascade.
pub fn write_transmissions(cs: &CascadeSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tr = cs.transmissions().ok_or(Error::OracleUnavailable)?;
    let mut out = String::new();
    for list in tr {
        let mut first = true;
        for &(a, b) in list {
            let na = cs.node_name(a);
            let nb = cs.node_name(b);
            check_name(&na)?;
            check_name(&nb)?;
            if !first {
                out.push(';');
            }
            write!(out, "{na}>{nb}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Interner {
    ids: HashMap<String, u32>,
    labels: Vec<String>,
}

impl Interner {
    fn new() -> Interner {
        Interner {
            ids: HashMap::new(),
            labels: Vec::new(),
        }
    }

    fn get(&mut self, tok: &str) -> u32 {
        *self.ids.entry(tok.to_string()).or_insert_with(|| {
            self.labels.push(tok.to_string());
            (self.labels.len() - 1) as u32
        })
    }
}

fn parse_cascade_line(
    path: &Path,
    lineno: usize,
    line: &str,
    intern: &mut Interner,
) -> Result<Cascade> {
    let mut events = Vec::new();
    for part in line.trim().split(';') {
        let (name, time) = part
            .rsplit_once(':')
            .ok_or_else(|| Error::parse(path, lineno, format!("bad event {part:?}")))?;
        let t = time
            .parse::<f64>()
            .map_err(|_| Error::parse(path, lineno, format!("bad time {time:?}")))?;
        events.push((intern.get(name), t));
    }
    Cascade::new(events).map_err(|e| Error::parse(path, lineno, e.to_string()))
}

/// Loads a cascade file, optionally paired with a transmissions file written
/// by [`write_transmissions`]. Node ids are assigned in order of first
/// appearance across the file; the label map is kept on the returned set.
pub fn load_cascades(
    path: impl AsRef<Path>,
    transmissions: Option<&Path>,
) -> Result<CascadeSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut intern = Interner::new();
    let mut cascades = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        cascades.push(parse_cascade_line(path, i + 1, line, &mut intern)?);
    }
    if cascades.is_empty() {
        return Err(Error::EmptyInput("cascade file"));
    }
    let trans = match transmissions {
        Some(tpath) => {
            let ttext = fs::read_to_string(tpath).map_err(|e| Error::io(tpath, e))?;
            let mut lists = Vec::new();
            for (i, line) in ttext.lines().enumerate() {
                let line = line.trim();
                let mut list = Vec::new();
                if !line.is_empty() {
                    for part in line.split(';') {
                        let (a, b) = part.split_once('>').ok_or_else(|| {
                            Error::parse(tpath, i + 1, format!("bad transmission {part:?}"))
                        })?;
                        list.push((intern.get(a), intern.get(b)));
                    }
                }
                lists.push(list);
            }
            Some(lists)
        }
        None => None,
    };
    let labels = intern.labels;
    Ok(CascadeSet::new(cascades, trans)?.with_labels(labels))
}

/// Builds cascades from a retweet log: a TSV with columns
/// `source_user_id  retweeter_id  timestamp  hashtag_list  hyperlink_count`.
///
/// Rows sharing `(hashtag_list, source_user_id, hyperlink_count)` form one
/// cascade. The source's own time is imputed one first-gap before the first
/// retweet (zero when there is a single retweet), then all times are shifted
/// so the source sits at zero. Repeated retweeters keep their earliest time;
/// retweets by the source itself are dropped.
pub fn ingest_retweet_log(path: impl AsRef<Path>) -> Result<CascadeSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut intern = Interner::new();
    let mut order: Vec<(String, u32)> = Vec::new(); // (key, source id) in first appearance order
    let mut groups: HashMap<String, Vec<(u32, f64)>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let source = intern.get(fields[0].trim());
        let retweeter = intern.get(fields[1].trim());
        let ts = fields[2]
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(path, lineno, format!("bad timestamp {:?}", fields[2])))?;
        if !ts.is_finite() {
            return Err(Error::parse(path, lineno, "non-finite timestamp"));
        }
        let key = format!("{}\t{}\t{}", fields[3].trim(), source, fields[4].trim());
        if !groups.contains_key(&key) {
            order.push((key.clone(), source));
        }
        groups.entry(key).or_default().push((retweeter, ts));
    }
    if order.is_empty() {
        return Err(Error::EmptyInput("retweet log"));
    }
    let mut cascades = Vec::new();
    for (key, source) in order {
        let mut rows = groups.remove(&key).unwrap();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut seen: HashMap<u32, ()> = HashMap::new();
        let mut retweets: Vec<(u32, f64)> = Vec::new();
        for (user, ts) in rows {
            if user == source || seen.contains_key(&user) {
                continue;
            }
            seen.insert(user, ());
            retweets.push((user, ts));
        }
        if retweets.is_empty() {
            cascades.push(Cascade::new(vec![(source, 0.0)])?);
            continue;
        }
        let t1 = retweets[0].1;
        let gap = if retweets.len() >= 2 { retweets[1].1 - t1 } else { 0.0 };
        let t0 = t1 - gap;
        let mut events = vec![(source, 0.0)];
        events.extend(retweets.into_iter().map(|(u, t)| (u, t - t0)));
        cascades.push(Cascade::new(events).map_err(|e| {
            Error::MalformedCascade(format!("retweet cascade for source {source}: {e}"))
        })?);
    }
    let labels = intern.labels;
    Ok(CascadeSet::new(cascades, None)?.with_labels(labels))
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
    fn cascades_sort_and_validate() {
        let c = Cascade::new(vec![(2, 1.5), (0, 0.0), (1, 1.5)]).unwrap();
        assert_eq!(c.events(), &[(0, 0.0), (1, 1.5), (2, 1.5)]);

        assert!(matches!(
            Cascade::new(vec![(0, 0.5)]),
            Err(Error::MalformedCascade(_))
        ));
        assert!(matches!(
            Cascade::new(vec![(0, 0.0), (0, 1.0)]),
            Err(Error::MalformedCascade(_))
        ));
        assert!(matches!(Cascade::new(vec![]), Err(Error::MalformedCascade(_))));
        assert!(matches!(
            Cascade::new(vec![(0, 0.0), (1, f64::NAN)]),
            Err(Error::MalformedCascade(_))
        ));
    }

    #[test]
    fn tmax_estimate_adds_mean_gap() {
        let c = Cascade::new(vec![(0, 0.0), (1, 1.0), (2, 2.0)]).unwrap();
        assert_eq!(estimate_tmax(&c).unwrap(), 3.0);

        let c = Cascade::new(vec![(0, 0.0), (1, 4.0)]).unwrap();
        assert_eq!(estimate_tmax(&c).unwrap(), 8.0);

        let c = Cascade::new(vec![(0, 0.0), (1, 1.0), (2, 5.0)]).unwrap();
        assert_eq!(estimate_tmax(&c).unwrap(), 7.5);

        let single = Cascade::new(vec![(0, 0.0)]);
        assert!(matches!(single, Ok(_)));
        assert!(matches!(
            estimate_tmax(&single.unwrap()),
            Err(Error::UndefinedEstimate)
        ));
    }

    #[test]
    fn singleton_filter_keeps_lists_parallel() {
        let cascades = vec![
            Cascade::new(vec![(0, 0.0), (1, 1.0)]).unwrap(),
            Cascade::new(vec![(2, 0.0)]).unwrap(),
            Cascade::new(vec![(1, 0.0), (3, 0.5)]).unwrap(),
        ];
        let tr = vec![vec![(0, 1)], vec![], vec![(1, 3)]];
        let cs = CascadeSet::new(cascades, Some(tr)).unwrap();
        let f = filter_singletons(cs);
        assert_eq!(f.len(), 2);
        assert_eq!(f.transmissions().unwrap().len(), 2);
        assert_eq!(f.observed_nodes(), vec![0, 1, 3]);
        assert_eq!(f.transmission_count(), 2);
    }

    #[test]
    fn cascade_file_round_trips_to_nine_digits() {
        let cascades = vec![
            Cascade::new(vec![(0, 0.0), (1, 0.123456789123), (2, 2.0)]).unwrap(),
            Cascade::new(vec![(2, 0.0), (0, 7.25)]).unwrap(),
        ];
        let cs = CascadeSet::new(cascades, None)
            .unwrap()
            .with_labels(vec!["u".into(), "v".into(), "w".into()]);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_cascades(&cs, f.path()).unwrap();
        let text = fs::read_to_string(f.path()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("u:0.00000000e0;v:1.23456789e-1;w:2.00000000e0"));

        let back = load_cascades(f.path(), None).unwrap();
        assert_eq!(back.len(), 2);
        let ev = back.cascades()[0].events();
        assert_eq!(ev[0].1, 0.0);
        assert!((ev[1].1 - 0.123456789123).abs() < 1e-9);
        // writing again is byte identical
        let f2 = tempfile::NamedTempFile::new().unwrap();
        write_cascades(&back, f2.path()).unwrap();
        assert_eq!(text, fs::read_to_string(f2.path()).unwrap());
    }

    #[test]
    fn transmissions_round_trip_with_shared_labels() {
        let cascades = vec![Cascade::new(vec![(0, 0.0), (1, 1.0), (2, 1.5)]).unwrap()];
        let cs = CascadeSet::new(cascades, Some(vec![vec![(0, 1), (1, 2)]]))
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into()]);
        let cf = tempfile::NamedTempFile::new().unwrap();
        let tf = tempfile::NamedTempFile::new().unwrap();
        write_cascades(&cs, cf.path()).unwrap();
        write_transmissions(&cs, tf.path()).unwrap();
        assert_eq!(fs::read_to_string(tf.path()).unwrap(), "a>b;b>c\n");

        let back = load_cascades(cf.path(), Some(tf.path())).unwrap();
        assert_eq!(back.transmissions().unwrap()[0], vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn malformed_cascade_lines_report_position() {
        let f = tmpfile("a:0.0;b:1.0\nb:0.5;c:1.0\n");
        match load_cascades(f.path(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn retweet_imputation_shifts_source_to_zero() {
        // retweets at epoch 10 and 12: source imputed at 8, times 0/2/4
        let f = tmpfile("s\tr1\t10\t#x\t0\ns\tr2\t12\t#x\t0\n");
        let cs = ingest_retweet_log(f.path()).unwrap();
        assert_eq!(cs.len(), 1);
        let ev = cs.cascades()[0].events();
        assert_eq!(ev.len(), 3);
        assert_eq!(ev[0].1, 0.0);
        assert_eq!(ev[1].1, 2.0);
        assert_eq!(ev[2].1, 4.0);
        assert_eq!(cs.node_name(ev[0].0), "s");
    }

    #[test]
    fn single_retweet_uses_zero_gap() {
        let f = tmpfile("s\tr1\t100\t#x\t1\n");
        let cs = ingest_retweet_log(f.path()).unwrap();
        let ev = cs.cascades()[0].events();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].1, 0.0);
        assert_eq!(ev[1].1, 0.0);
    }

    #[test]
    fn retweet_groups_split_by_key_fields() {
        let f = tmpfile(
            "s\ta\t1\t#x\t0\n\
             s\tb\t2\t#x\t0\n\
             s\tc\t1\t#y\t0\n\
             t\td\t5\t#x\t0\n\
             s\te\t9\t#x\t2\n",
        );
        let cs = ingest_retweet_log(f.path()).unwrap();
        assert_eq!(cs.len(), 4);
        assert_eq!(cs.cascades()[0].len(), 3);
    }

    #[test]
    fn repeated_and_self_retweets_are_dropped() {
        let f = tmpfile(
            "s\ta\t10\t#x\t0\n\
             s\ta\t11\t#x\t0\n\
             s\ts\t12\t#x\t0\n\
             s\tb\t14\t#x\t0\n",
        );
        let cs = ingest_retweet_log(f.path()).unwrap();
        let ev = cs.cascades()[0].events();
        assert_eq!(ev.len(), 3);
        // kept retweets at epoch 10 and 14: source imputed at 6
        assert_eq!(ev[1].1, 4.0);
        assert_eq!(ev[2].1, 8.0);
    }
}
