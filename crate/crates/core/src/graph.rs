//! Abstract metric graphs: adjacency, edge lengths and file ingestion.
//!
//! A [`MetricGraph`] is the only global input to the searches. Vertices are
//! dense indices `0..vertex_count`; every edge carries a finite positive
//! length stored once per unordered pair.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense vertex index into a [`MetricGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid JSON graph: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("edge ({u}, {v}) has non-positive or non-finite length {length}")]
    NonPositiveLength { u: usize, v: usize, length: f64 },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("self-loop at vertex {v}")]
    SelfLoop { v: usize },
    #[error("vertex {v} out of range for graph with {vertex_count} vertices")]
    VertexOutOfRange { v: usize, vertex_count: usize },
    #[error("no edge between {u} and {v}")]
    MissingEdge { u: VertexId, v: VertexId },
    #[error("label table has {got} entries, expected {expected}")]
    LabelCount { got: usize, expected: usize },
}

/// Input encodings accepted by [`MetricGraph::load`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    /// `<vertex_count>` on the first line, then `<u> <v> <length>` per line.
    EdgeList,
    /// `{"vertex_count": n, "edges": [[u, v, len], ...], "labels": [...]}`.
    Json,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Undirected graph with positive edge lengths. Immutable after construction.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    // adjacency[v] sorted by neighbor id; second field indexes `lengths`.
    adjacency: Vec<Vec<(VertexId, usize)>>,
    lengths: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl MetricGraph {
    /// Builds and validates a graph from `(u, v, length)` triples.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adjacency: Vec<Vec<(VertexId, usize)>> = vec![Vec::new(); vertex_count];
        let mut lengths = Vec::new();
        for (u, v, length) in edges {
            for w in [u, v] {
                if w >= vertex_count {
                    return Err(GraphError::VertexOutOfRange { v: w, vertex_count });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { v: u });
            }
            if !(length.is_finite() && length > 0.0) {
                return Err(GraphError::NonPositiveLength { u, v, length });
            }
            let id = lengths.len();
            lengths.push(length);
            adjacency[u].push((VertexId(v), id));
            adjacency[v].push((VertexId(u), id));
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable_by_key(|&(w, _)| w);
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                let v = pair[0].0 .0;
                return Err(GraphError::DuplicateEdge { u: u.min(v), v: u.max(v) });
            }
        }
        Ok(MetricGraph { adjacency, lengths, labels: None })
    }

    /// Attaches symbolic vertex names (JSON format only carries these).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GraphError> {
        if labels.len() != self.vertex_count() {
            return Err(GraphError::LabelCount { got: labels.len(), expected: self.vertex_count() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn load<R: Read>(mut source: R, format: GraphFormat) -> Result<Self, GraphError> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        match format {
            GraphFormat::EdgeList => Self::parse_edge_list(&text),
            GraphFormat::Json => Self::parse_json(&text),
        }
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut vertex_count = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| GraphError::Parse { line: line_no, message };
            match vertex_count {
                None => {
                    if fields.len() != 1 {
                        return Err(parse_err(format!("expected vertex count, got {line:?}")));
                    }
                    let n = fields[0]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad vertex count {:?}: {e}", fields[0])))?;
                    vertex_count = Some(n);
                }
                Some(_) => {
                    if fields.len() != 3 {
                        return Err(parse_err(format!("expected `<u> <v> <length>`, got {line:?}")));
                    }
                    let u = fields[0]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad vertex {:?}: {e}", fields[0])))?;
                    let v = fields[1]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad vertex {:?}: {e}", fields[1])))?;
                    let len =
                        fields[2].parse::<f64>().map_err(|e| parse_err(format!("bad length {:?}: {e}", fields[2])))?;
                    edges.push((u, v, len));
                }
            }
        }
        let n = vertex_count.ok_or(GraphError::Parse { line: 0, message: "missing vertex count".into() })?;
        Self::from_edges(n, edges)
    }

    pub fn parse_json(text: &str) -> Result<Self, GraphError> {
        let raw: JsonGraph = serde_json::from_str(text)?;
        let g = Self::from_edges(raw.vertex_count, raw.edges)?;
        match raw.labels {
            Some(labels) => g.with_labels(labels),
            None => Ok(g),
        }
    }

    /// Edges as `(u, v, length)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId, f64)> {
        let mut out = Vec::with_capacity(self.lengths.len());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &(v, id) in list {
                if u < v.0 {
                    out.push((VertexId(u), v, self.lengths[id]));
                }
            }
        }
        out
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.vertex_count());
        for (u, v, len) in self.edges() {
            s.push_str(&format!("{u} {v} {len:?}\n"));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let raw = JsonGraph {
            vertex_count: self.vertex_count(),
            edges: self.edges().into_iter().map(|(u, v, l)| (u.0, v.0, l)).collect(),
            labels: self.labels.clone(),
        };
        serde_json::to_string(&raw).expect("graph serializes")
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count()).map(VertexId)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v.0].as_str())
    }

    /// Looks a vertex up by its label.
    pub fn vertex_by_label(&self, name: &str) -> Option<VertexId> {
        self.labels.as_ref()?.iter().position(|l| l == name).map(VertexId)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    /// Neighbors of `v`, ascending, excluding `v`.
    pub fn neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.adjacency[v.0].iter().map(|&(w, _)| w)
    }

    /// Neighbors shared by every vertex of `vs`, ascending and excluding `vs`.
    pub fn common_neighbors(&self, vs: &[VertexId]) -> Vec<VertexId> {
        let Some((first, rest)) = vs.split_first() else {
            return Vec::new();
        };
        let mut acc: Vec<VertexId> = self.neighbors(*first).collect();
        for &v in rest {
            acc = intersect_sorted(&acc, self.adjacency[v.0].iter().map(|&(w, _)| w));
            if acc.is_empty() {
                break;
            }
        }
        acc.retain(|w| !vs.contains(w));
        acc
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_id(u, v).is_some()
    }

    fn edge_id(&self, u: VertexId, v: VertexId) -> Option<usize> {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        let list = self.adjacency.get(a.0)?;
        list.binary_search_by_key(&b, |&(w, _)| w).ok().map(|i| list[i].1)
    }

    pub fn edge_length(&self, u: VertexId, v: VertexId) -> Result<f64, GraphError> {
        self.edge_id(u, v).map(|id| self.lengths[id]).ok_or(GraphError::MissingEdge { u, v })
    }

    /// Like [`edge_length`](Self::edge_length) but `None` for non-edges.
    #[inline]
    pub fn length(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.edge_id(u, v).map(|id| self.lengths[id])
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v.0 < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { v: v.0, vertex_count: self.vertex_count() })
        }
    }
}

/// Intersection of a sorted slice with a sorted iterator.
pub(crate) fn intersect_sorted<I>(a: &[VertexId], b: I) -> Vec<VertexId>
where
    I: IntoIterator<Item = VertexId>,
{
    let mut out = Vec::with_capacity(a.len());
    let mut ai = a.iter().peekable();
    for y in b {
        while let Some(&&x) = ai.peek() {
            if x < y {
                ai.next();
            } else {
                break;
            }
        }
        match ai.peek() {
            Some(&&x) if x == y => {
                out.push(x);
                ai.next();
            }
            Some(_) => {}
            None => break,
        }
    }
    out
}

#[cfg(test)]
pub(crate) use tests::three_cliques;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn three_cliques() -> MetricGraph {
        // a..f = 0..5; cliques {a,b,e,c}, {a,e,c,d}, {a,c,f}
        let cliques: [&[usize]; 3] = [&[0, 1, 4, 2], &[0, 4, 2, 3], &[0, 2, 5]];
        let mut edges = std::collections::BTreeSet::new();
        for c in cliques {
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    edges.insert((c[i].min(c[j]), c[i].max(c[j])));
                }
            }
        }
        MetricGraph::from_edges(6, edges.into_iter().map(|(u, v)| (u, v, 1.0))).unwrap()
    }

    #[test]
    fn triangle_edge_list() {
        let g = MetricGraph::parse_edge_list("3\n0 1 1.0\n1 2 1.0\n0 2 1.0\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(VertexId(0)).collect::<Vec<_>>(), vec![VertexId(1), VertexId(2)]);
        assert_eq!(g.edge_length(VertexId(0), VertexId(1)).unwrap(), 1.0);
        assert_eq!(g.edge_length(VertexId(1), VertexId(0)).unwrap(), 1.0);
        assert_eq!(g.common_neighbors(&[VertexId(0), VertexId(1)]), vec![VertexId(2)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 1 -1.0\n"), Err(GraphError::NonPositiveLength { .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 1 0.0\n"), Err(GraphError::NonPositiveLength { .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 0 1.0\n"), Err(GraphError::SelfLoop { .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 1 1.0\n1 0 2.0\n"), Err(GraphError::DuplicateEdge { .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 2 1.0\n"), Err(GraphError::VertexOutOfRange { .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 1\n"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(MetricGraph::parse_edge_list("x\n"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(MetricGraph::parse_edge_list("2\n0 1 nan\n"), Err(GraphError::NonPositiveLength { .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = MetricGraph::parse_edge_list("# header\n\n3\n# edge\n0 1 2.5\n\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(VertexId(2)), 0);
        assert_eq!(g.neighbors(VertexId(2)).count(), 0);
    }

    #[test]
    fn three_cliques_structure() {
        let g = three_cliques();
        // The three cliques share edges ac, ae, ce: 6 + 3 + 2 distinct edges.
        assert_eq!(g.edge_count(), 11);
        assert_eq!(g.degree(VertexId(0)), 5);
        assert_eq!(g.neighbors(VertexId(5)).collect::<Vec<_>>(), vec![VertexId(0), VertexId(2)]);
        assert_eq!(
            g.common_neighbors(&[VertexId(0), VertexId(2)]),
            vec![VertexId(1), VertexId(3), VertexId(4), VertexId(5)]
        );
        assert!(matches!(g.edge_length(VertexId(1), VertexId(3)), Err(GraphError::MissingEdge { .. })));
    }

    #[test]
    fn json_with_labels() {
        let text = r#"{"vertex_count":3,"edges":[[0,1,1.5],[1,2,2.0]],"labels":["a","b","c"]}"#;
        let g = MetricGraph::parse_json(text).unwrap();
        assert_eq!(g.vertex_by_label("c"), Some(VertexId(2)));
        assert_eq!(g.label(VertexId(1)), Some("b"));
        let back = MetricGraph::parse_json(&g.to_json()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert!(MetricGraph::parse_json(r#"{"vertex_count":2,"edges":[],"labels":["a"]}"#).is_err());
    }
}
