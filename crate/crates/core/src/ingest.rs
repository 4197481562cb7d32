//! Cascade interchange files and the two real-world source formats.
//!
//! Interchange files are UTF-8, one JSON object per line:
//!
//! ```text
//! # cascade-v1
//! {"cascade_id":"m1","window_t":10800.0,"nodes":[["root",0.0],["u1",42.0]],"edges":[["root","u1"]],"label":7}
//! ```
//!
//! Weibo sources are tab-separated `author<TAB>relative_seconds<TAB>chain_text`
//! lines; the first line is the original post (time 0, empty chain). A chain
//! text such as `//@B//@A` means the author got the post from `B`, who got it
//! from `A`, who got it from the original poster.
//!
//! Citation sources are tab-separated `paper_id<TAB>year<TAB>ref1,ref2,...`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{
    ensure_valid, CascadeError, CascadeGraph, Edge, GrowthLabel, LabeledCascade, Node, NodeId,
    MIN_ADOPTION_TIME,
};

pub const FORMAT_HEADER: &str = "# cascade-v1";

/// Seconds per (Julian) year, used to put citation years on the same clock
/// as retweet seconds.
pub const YEAR_SECONDS: f64 = 31_557_600.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {detail}")]
    Malformed {
        line: usize,
        field: String,
        detail: String,
    },
    #[error(transparent)]
    Invalid(#[from] CascadeError),
    #[error("cascade {cascade_id}: implied edges form a cycle")]
    Cycle { cascade_id: String },
    #[error("unknown paper {0}")]
    UnknownTarget(NodeId),
    #[error("{0}")]
    Parameter(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CascadeRecord {
    cascade_id: String,
    window_t: f64,
    nodes: Vec<(String, f64)>,
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u64>,
}

impl From<&LabeledCascade> for CascadeRecord {
    fn from(c: &LabeledCascade) -> Self {
        let g = &c.graph;
        CascadeRecord {
            cascade_id: g.cascade_id.clone(),
            window_t: g.window_t,
            nodes: g.nodes.iter().map(|n| (n.id.0.clone(), n.time)).collect(),
            edges: g.edges.iter().map(|e| (e.src.0.clone(), e.dst.0.clone())).collect(),
            label: c.label.map(|l| l.0),
        }
    }
}

impl From<CascadeRecord> for LabeledCascade {
    fn from(r: CascadeRecord) -> Self {
        LabeledCascade {
            graph: CascadeGraph {
                cascade_id: r.cascade_id,
                window_t: r.window_t,
                nodes: r
                    .nodes
                    .into_iter()
                    .map(|(id, time)| Node { id: NodeId(id), time })
                    .collect(),
                edges: r
                    .edges
                    .into_iter()
                    .map(|(s, d)| Edge { src: NodeId(s), dst: NodeId(d) })
                    .collect(),
            },
            label: r.label.map(GrowthLabel),
        }
    }
}

/// Parses interchange text. Every cascade is validated.
pub fn parse_cascades(text: &str) -> Result<Vec<LabeledCascade>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if i == 0 && !trimmed.contains("cascade-v1") {
                return Err(IngestError::Malformed {
                    line: line_no,
                    field: "header".into(),
                    detail: format!("unsupported format header {trimmed:?}"),
                });
            }
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(trimmed);
        let record: CascadeRecord =
            serde_path_to_error::deserialize(de).map_err(|e| IngestError::Malformed {
                line: line_no,
                field: e.path().to_string(),
                detail: e.inner().to_string(),
            })?;
        let cascade = LabeledCascade::from(record);
        ensure_valid(&cascade.graph)?;
        out.push(cascade);
    }
    Ok(out)
}

pub fn read_cascades(path: &Path) -> Result<Vec<LabeledCascade>, IngestError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_cascades(&text)
}

pub fn cascades_to_string(cascades: &[LabeledCascade]) -> String {
    let mut out = String::from(FORMAT_HEADER);
    out.push('\n');
    for c in cascades {
        out.push_str(&serde_json::to_string(&CascadeRecord::from(c)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_cascades(cascades: &[LabeledCascade], path: &Path) -> Result<(), IngestError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{FORMAT_HEADER}").map_err(io_err(path))?;
    for c in cascades {
        serde_json::to_writer(&mut w, &CascadeRecord::from(c))
            .map_err(|e| io_err(path)(e.into()))?;
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// Weibo retweet chains

#[derive(Debug, Clone, PartialEq)]
pub struct WeiboRecord {
    pub author: NodeId,
    /// Seconds since the original post.
    pub timestamp: f64,
    /// Nearest hop first, as written left to right in `//@B//@A`.
    pub chain: Vec<NodeId>,
}

/// Splits `//@B: text//@A: text` into `[B, A]`.
pub fn parse_chain(text: &str) -> Vec<NodeId> {
    text.split("//@")
        .skip(1)
        .filter_map(|part| {
            let name = part.split([':', '：']).next().unwrap_or("").trim();
            (!name.is_empty()).then(|| NodeId::from(name))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeiboCascade {
    pub graph: CascadeGraph,
    /// Later retweets by an author who already retweeted; dropped.
    pub duplicates: Vec<WeiboRecord>,
}

/// Builds the observed diffusion graph from retweet records.
///
/// Each record contributes the path `origin → chain[last] → … → chain[0] →
/// author`. A node's time is the earliest timestamp of any kept record that
/// it authored or that mentions it in a chain, which keeps every implied
/// edge forward in time whenever parentage is consistent.
pub fn parse_weibo_cascade(
    cascade_id: &str,
    origin_author: &NodeId,
    records: &[WeiboRecord],
    window_t: f64,
) -> Result<WeiboCascade, IngestError> {
    if origin_author.0.is_empty() {
        return Err(IngestError::Parameter("empty origin author".into()));
    }
    if !(window_t > 0.0) {
        return Err(IngestError::Parameter(format!("window_t {window_t} must be > 0")));
    }
    let mut sorted: Vec<&WeiboRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    let mut seen_authors: HashSet<&NodeId> = HashSet::new();
    let mut duplicates = Vec::new();
    let mut times: HashMap<NodeId, f64> = HashMap::new();
    let mut order: Vec<NodeId> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_set: HashSet<(NodeId, NodeId)> = HashSet::new();

    for rec in sorted {
        if rec.author.0.is_empty() {
            return Err(IngestError::Parameter(format!(
                "cascade {cascade_id}: record at t={} has an empty author",
                rec.timestamp
            )));
        }
        if !(rec.timestamp >= 0.0) {
            return Err(IngestError::Parameter(format!(
                "cascade {cascade_id}: negative timestamp {} for {}",
                rec.timestamp, rec.author
            )));
        }
        if rec.chain.contains(&rec.author) {
            return Err(IngestError::Parameter(format!(
                "cascade {cascade_id}: author {} appears in its own chain",
                rec.author
            )));
        }
        if rec.timestamp > window_t {
            continue;
        }
        if &rec.author == origin_author || !seen_authors.insert(&rec.author) {
            duplicates.push(rec.clone());
            continue;
        }
        let time = rec.timestamp.max(MIN_ADOPTION_TIME);
        let mut path: Vec<&NodeId> = vec![origin_author];
        path.extend(rec.chain.iter().rev().filter(|id| *id != origin_author));
        path.push(&rec.author);
        for id in &path[1..] {
            match times.get_mut(*id) {
                Some(t) => *t = t.min(time),
                None => {
                    times.insert((*id).clone(), time);
                    order.push((*id).clone());
                }
            }
        }
        for w in path.windows(2) {
            let key = (w[0].clone(), w[1].clone());
            if edge_set.insert(key.clone()) {
                edges.push(Edge {
                    src: key.0,
                    dst: key.1,
                });
            }
        }
    }
    if !duplicates.is_empty() {
        log::debug!("cascade {cascade_id}: dropped {} duplicate retweets", duplicates.len());
    }

    let mut nodes = vec![Node {
        id: origin_author.clone(),
        time: 0.0,
    }];
    let mut rest: Vec<(usize, Node)> = order
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let time = times[&id];
            (i, Node { id, time })
        })
        .collect();
    rest.sort_by(|a, b| a.1.time.total_cmp(&b.1.time).then(a.0.cmp(&b.0)));
    nodes.extend(rest.into_iter().map(|(_, n)| n));

    let graph = CascadeGraph {
        cascade_id: cascade_id.to_string(),
        window_t,
        nodes,
        edges,
    };
    if has_cycle(&graph) {
        return Err(IngestError::Cycle {
            cascade_id: cascade_id.to_string(),
        });
    }
    ensure_valid(&graph)?;
    Ok(WeiboCascade { graph, duplicates })
}

/// Observed graph for `window_t` plus the growth label over
/// `(window_t, window_t + delta_t]`.
pub fn build_weibo_cascade(
    cascade_id: &str,
    origin_author: &NodeId,
    records: &[WeiboRecord],
    window_t: f64,
    delta_t: f64,
) -> Result<LabeledCascade, IngestError> {
    if !(delta_t > 0.0) {
        return Err(IngestError::Parameter(format!("delta_t {delta_t} must be > 0")));
    }
    let full = parse_weibo_cascade(cascade_id, origin_author, records, window_t + delta_t)?;
    let times: Vec<f64> = full.graph.nodes.iter().map(|n| n.time).collect();
    let label = crate::cascade::growth_label(&times, window_t, delta_t)?;
    let observed = parse_weibo_cascade(cascade_id, origin_author, records, window_t)?;
    Ok(LabeledCascade::new(observed.graph, label))
}

/// Reads a Weibo source file: the origin author and the retweet records.
pub fn read_weibo_source(path: &Path) -> Result<(NodeId, Vec<WeiboRecord>), IngestError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut origin = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let malformed = |field: &str, detail: String| IngestError::Malformed {
            line: line_no,
            field: field.into(),
            detail,
        };
        let author = cols.next().unwrap_or("").trim();
        if author.is_empty() {
            return Err(malformed("author", "empty author".into()));
        }
        let secs = cols.next().ok_or_else(|| malformed("relative_seconds", "missing".into()))?;
        let timestamp: f64 = secs
            .trim()
            .parse()
            .map_err(|_| malformed("relative_seconds", format!("not a number: {secs:?}")))?;
        let chain = parse_chain(cols.next().unwrap_or(""));
        if origin.is_none() {
            if timestamp != 0.0 || !chain.is_empty() {
                return Err(malformed(
                    "relative_seconds",
                    "first line must be the original post at time 0 with no chain".into(),
                ));
            }
            origin = Some(NodeId::from(author));
            continue;
        }
        records.push(WeiboRecord {
            author: NodeId::from(author),
            timestamp,
            chain,
        });
    }
    let origin = origin.ok_or_else(|| IngestError::Malformed {
        line: 1,
        field: "author".into(),
        detail: "empty source file".into(),
    })?;
    Ok((origin, records))
}

fn has_cycle(graph: &CascadeGraph) -> bool {
    let n = graph.nodes.len();
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in graph.index_edges() {
        out[u].push(v);
        indeg[v] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut visited = 0;
    while let Some(u) = stack.pop() {
        visited += 1;
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    visited < n
}

// ---------------------------------------------------------------------------
// Citation cascades

#[derive(Debug, Clone, PartialEq)]
pub struct CitationRecord {
    pub paper: NodeId,
    pub year: i32,
    pub references: Vec<NodeId>,
}

/// A citation corpus indexed by paper and by cited paper.
pub struct CitationCorpus<'a> {
    records: &'a [CitationRecord],
    by_id: HashMap<&'a NodeId, usize>,
    citers: HashMap<&'a NodeId, Vec<usize>>,
}

impl<'a> CitationCorpus<'a> {
    pub fn new(records: &'a [CitationRecord]) -> Self {
        let mut by_id = HashMap::with_capacity(records.len());
        let mut citers: HashMap<&NodeId, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            by_id.entry(&r.paper).or_insert(i);
            let mut refs: Vec<&NodeId> = r.references.iter().collect();
            refs.sort();
            refs.dedup();
            for q in refs {
                citers.entry(q).or_default().push(i);
            }
        }
        Self {
            records,
            by_id,
            citers,
        }
    }

    pub fn get(&self, paper: &NodeId) -> Option<&'a CitationRecord> {
        self.by_id.get(paper).map(|&i| &self.records[i])
    }

    pub fn papers(&self) -> impl Iterator<Item = &'a CitationRecord> {
        self.records.iter()
    }

    /// Cascade rooted at `target`: citers within `t_years` of publication
    /// are observed, citers in `(t_years, t_years + delta_t_years]` are
    /// growth. Edges run cited → citing.
    pub fn cascade(
        &self,
        target: &NodeId,
        t_years: u32,
        delta_t_years: u32,
    ) -> Result<LabeledCascade, IngestError> {
        if t_years == 0 || delta_t_years == 0 {
            return Err(IngestError::Parameter(
                "citation windows must be at least one year".into(),
            ));
        }
        let root = self
            .get(target)
            .ok_or_else(|| IngestError::UnknownTarget(target.clone()))?;
        let mut observed: Vec<&CitationRecord> = Vec::new();
        let mut growth = 0u64;
        for &i in self.citers.get(target).map(Vec::as_slice).unwrap_or(&[]) {
            let citer = &self.records[i];
            if citer.paper == root.paper {
                continue;
            }
            let age = i64::from(citer.year) - i64::from(root.year);
            if age < 0 {
                return Err(IngestError::Parameter(format!(
                    "{} ({}) cites later paper {} ({})",
                    citer.paper, citer.year, root.paper, root.year
                )));
            }
            let age = age as u64;
            if age <= u64::from(t_years) {
                observed.push(citer);
            } else if age <= u64::from(t_years) + u64::from(delta_t_years) {
                growth += 1;
            }
        }
        observed.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.paper.cmp(&b.paper)));
        observed.dedup_by(|a, b| a.paper == b.paper);

        let members: HashMap<&NodeId, i32> =
            observed.iter().map(|r| (&r.paper, r.year)).collect();
        let mut nodes = vec![Node {
            id: root.paper.clone(),
            time: 0.0,
        }];
        let mut edges = Vec::new();
        for p in &observed {
            let years = f64::from(p.year - root.year);
            nodes.push(Node {
                id: p.paper.clone(),
                time: (years * YEAR_SECONDS).max(MIN_ADOPTION_TIME),
            });
            edges.push(Edge {
                src: root.paper.clone(),
                dst: p.paper.clone(),
            });
        }
        for p in &observed {
            let mut refs: Vec<&NodeId> = p.references.iter().collect();
            refs.sort();
            refs.dedup();
            for q in refs {
                if q == &root.paper || q == &p.paper {
                    continue;
                }
                if let Some(&q_year) = members.get(q) {
                    if q_year > p.year {
                        return Err(IngestError::Parameter(format!(
                            "{} ({}) cites later paper {q} ({q_year})",
                            p.paper, p.year
                        )));
                    }
                    edges.push(Edge {
                        src: q.clone(),
                        dst: p.paper.clone(),
                    });
                }
            }
        }
        let graph = CascadeGraph {
            cascade_id: root.paper.0.clone(),
            window_t: f64::from(t_years) * YEAR_SECONDS,
            nodes,
            edges,
        };
        ensure_valid(&graph)?;
        Ok(LabeledCascade::new(graph, GrowthLabel(growth)))
    }
}

pub fn build_citation_cascade(
    target: &NodeId,
    corpus: &[CitationRecord],
    t_years: u32,
    delta_t_years: u32,
) -> Result<LabeledCascade, IngestError> {
    CitationCorpus::new(corpus).cascade(target, t_years, delta_t_years)
}

pub fn parse_citation_source(text: &str) -> Result<Vec<CitationRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let malformed = |field: &str, detail: String| IngestError::Malformed {
            line: line_no,
            field: field.into(),
            detail,
        };
        let mut cols = line.splitn(3, '\t');
        let paper = cols.next().unwrap_or("").trim();
        if paper.is_empty() {
            return Err(malformed("paper_id", "empty paper id".into()));
        }
        let year_text = cols.next().ok_or_else(|| malformed("year", "missing".into()))?;
        let year = year_text
            .trim()
            .parse()
            .map_err(|_| malformed("year", format!("not an integer: {year_text:?}")))?;
        let references = cols
            .next()
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(NodeId::from)
            .collect();
        out.push(CitationRecord {
            paper: NodeId::from(paper),
            year,
            references,
        });
    }
    Ok(out)
}

pub fn read_citation_source(path: &Path) -> Result<Vec<CitationRecord>, IngestError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_citation_source(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(author: &str, t: f64, chain: &str) -> WeiboRecord {
        WeiboRecord {
            author: author.into(),
            timestamp: t,
            chain: parse_chain(chain),
        }
    }

    fn edge_pairs(g: &CascadeGraph) -> Vec<(String, String)> {
        let mut v: Vec<_> = g.edges.iter().map(|e| (e.src.0.clone(), e.dst.0.clone())).collect();
        v.sort();
        v
    }

    fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut v: Vec<_> = list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        v.sort();
        v
    }

    #[test]
    fn chain_text_parsing() {
        assert_eq!(parse_chain(""), Vec::<NodeId>::new());
        assert_eq!(parse_chain("//@B//@A"), vec![NodeId::from("B"), "A".into()]);
        assert_eq!(parse_chain("nice //@B: agreed//@A:wow"), vec![NodeId::from("B"), "A".into()]);
    }

    #[test]
    fn direct_retweet_from_origin() {
        let w = parse_weibo_cascade("m", &"O".into(), &[rec("C", 100.0, "")], 10800.0).unwrap();
        let ids: Vec<&str> = w.graph.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["O", "C"]);
        assert_eq!(edge_pairs(&w.graph), pairs(&[("O", "C")]));
    }

    #[test]
    fn chain_is_read_right_to_left() {
        let w = parse_weibo_cascade("m", &"O".into(), &[rec("C", 200.0, "//@B//@A")], 10800.0)
            .unwrap();
        assert_eq!(edge_pairs(&w.graph), pairs(&[("O", "A"), ("A", "B"), ("B", "C")]));
        // A and B have no record of their own and inherit C's time.
        assert!(w.graph.nodes.iter().all(|n| n.time == 0.0 || n.time == 200.0));
    }

    #[test]
    fn duplicate_author_keeps_earliest() {
        let records = [rec("C", 300.0, ""), rec("C", 100.0, "")];
        let w = parse_weibo_cascade("m", &"O".into(), &records, 10800.0).unwrap();
        assert_eq!(w.graph.nodes[1].time, 100.0);
        assert_eq!(w.duplicates, vec![rec("C", 300.0, "")]);
    }

    #[test]
    fn records_beyond_window_are_excluded() {
        let records = [rec("A", 100.0, ""), rec("B", 20000.0, "//@A")];
        let w = parse_weibo_cascade("m", &"O".into(), &records, 10800.0).unwrap();
        assert_eq!(w.graph.nodes.len(), 2);
        let labeled = build_weibo_cascade("m", &"O".into(), &records, 10800.0, 75600.0).unwrap();
        assert_eq!(labeled.label, Some(GrowthLabel(1)));
    }

    #[test]
    fn imputed_times_keep_edges_forward() {
        let records = [
            rec("B", 500.0, "//@A"),
            rec("D", 50.0, "//@C//@B//@A"),
            rec("A", 900.0, ""),
        ];
        let w = parse_weibo_cascade("m", &"O".into(), &records, 10800.0).unwrap();
        assert!(crate::cascade::validate_cascade(&w.graph).is_empty());
        assert!(w.graph.nodes.iter().skip(1).all(|n| n.time == 50.0));
    }

    #[test]
    fn cyclic_chains_are_rejected() {
        let records = [rec("C", 10.0, "//@B//@A"), rec("D", 10.0, "//@A//@B")];
        assert!(matches!(
            parse_weibo_cascade("m", &"O".into(), &records, 10800.0),
            Err(IngestError::Cycle { .. })
        ));
    }

    #[test]
    fn empty_author_is_rejected() {
        assert!(parse_weibo_cascade("m", &"O".into(), &[rec("", 1.0, "")], 10.0).is_err());
        assert!(parse_weibo_cascade("m", &"".into(), &[], 10.0).is_err());
    }

    #[test]
    fn retweet_at_origin_second_stays_distinct() {
        let w = parse_weibo_cascade("m", &"O".into(), &[rec("C", 0.0, "")], 60.0).unwrap();
        assert_eq!(w.graph.nodes[1].time, MIN_ADOPTION_TIME);
    }

    fn paper(id: &str, year: i32, refs: &[&str]) -> CitationRecord {
        CitationRecord {
            paper: id.into(),
            year,
            references: refs.iter().map(|r| NodeId::from(*r)).collect(),
        }
    }

    #[test]
    fn citation_cascade_figure_example() {
        let corpus = [paper("A", 1990, &[]), paper("B", 1992, &["A"]), paper("C", 1993, &["A", "B"])];
        let c = build_citation_cascade(&"A".into(), &corpus, 5, 15).unwrap();
        let ids: Vec<&str> = c.graph.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["A", "B", "C"]);
        assert_eq!(edge_pairs(&c.graph), pairs(&[("A", "B"), ("A", "C"), ("B", "C")]));
        assert_eq!(c.graph.nodes[1].time, 2.0 * YEAR_SECONDS);
        assert_eq!(c.label, Some(GrowthLabel(0)));
    }

    #[test]
    fn citation_cascade_without_citers() {
        let corpus = [paper("A", 1990, &[])];
        let c = build_citation_cascade(&"A".into(), &corpus, 5, 15).unwrap();
        assert_eq!(c.graph.nodes.len(), 1);
        assert_eq!(c.label, Some(GrowthLabel(0)));
    }

    #[test]
    fn citation_boundary_year_is_observed() {
        let corpus = [
            paper("A", 1990, &[]),
            paper("B", 1995, &["A"]),
            paper("C", 1996, &["A"]),
            paper("D", 2010, &["A"]),
            paper("E", 2011, &["A"]),
        ];
        let c = build_citation_cascade(&"A".into(), &corpus, 5, 15).unwrap();
        assert_eq!(c.graph.nodes.len(), 2);
        assert_eq!(c.label, Some(GrowthLabel(2)));
    }

    #[test]
    fn citation_unknown_target() {
        assert!(matches!(
            build_citation_cascade(&"Z".into(), &[], 5, 15),
            Err(IngestError::UnknownTarget(_))
        ));
    }

    #[test]
    fn citation_same_year_citer() {
        let corpus = [paper("A", 1990, &[]), paper("B", 1990, &["A"])];
        let c = build_citation_cascade(&"A".into(), &corpus, 5, 15).unwrap();
        assert_eq!(c.graph.nodes[1].time, MIN_ADOPTION_TIME);
    }

    #[test]
    fn citation_source_parsing() {
        let recs = parse_citation_source("A\t1990\t\nB\t1992\tA\nC\t1993\tA, B\n").unwrap();
        assert_eq!(recs[2], paper("C", 1993, &["A", "B"]));
        let err = parse_citation_source("A\tnineteen\t\n").unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 1, ref field, .. } if field == "year"));
    }

    #[test]
    fn interchange_minimal_and_empty() {
        assert!(parse_cascades("").unwrap().is_empty());
        let one = parse_cascades(
            r#"{"cascade_id":"x","window_t":3600,"nodes":[["r",0]],"edges":[]}"#,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].label, None);
    }

    #[test]
    fn interchange_errors_name_line_and_field() {
        let text = "# cascade-v1\n{\"cascade_id\":\"x\",\"window_t\":1,\"nodes\":[[\"r\",\"zero\"]],\"edges\":[]}\n";
        match parse_cascades(text).unwrap_err() {
            IngestError::Malformed { line, field, .. } => {
                assert_eq!(line, 2);
                assert!(field.starts_with("nodes"), "{field}");
            }
            e => panic!("unexpected {e}"),
        }
        let unknown = r#"{"cascade_id":"x","window_t":1,"nodes":[["r",0]],"edges":[],"extra":1}"#;
        assert!(matches!(parse_cascades(unknown), Err(IngestError::Malformed { .. })));
        let negative = r#"{"cascade_id":"x","window_t":1,"nodes":[["r",0]],"edges":[],"label":-1}"#;
        assert!(matches!(parse_cascades(negative), Err(IngestError::Malformed { .. })));
        let invalid = r#"{"cascade_id":"bad","window_t":1,"nodes":[["r",0],["s",0]],"edges":[]}"#;
        assert!(
            matches!(parse_cascades(invalid), Err(IngestError::Invalid(CascadeError::Invalid { ref cascade_id, .. })) if cascade_id == "bad")
        );
        assert!(parse_cascades("# cascade-v9\n").is_err());
    }

    #[test]
    fn empty_list_writes_header_only() {
        assert_eq!(cascades_to_string(&[]), "# cascade-v1\n");
    }
}
