//! Undirected simple graphs and the generator families used to build
//! manifolds of equilibria.
//!
//! Vertices are labeled `0..n`. Edges are stored once, as `(u, v)` with
//! `u < v`, in sorted order, so two graphs built from the same family are
//! identical edge-for-edge.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting loops, duplicate edges (in either
    /// orientation) and out-of-range endpoints.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u, v));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, edges, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of `j`.
    pub fn neighbors(&self, j: usize) -> Result<&[usize]> {
        self.adjacency
            .get(j)
            .map(Vec::as_slice)
            .ok_or(Error::VertexOutOfRange { vertex: j, n: self.n })
    }

    pub fn degree(&self, j: usize) -> Result<usize> {
        self.neighbors(j).map(<[usize]>::len)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Breadth-first reachability from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    /// Parses the edge-list text format: a first line holding `n`, then one
    /// `u v` pair per line. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing vertex count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected vertex count, found {header:?}"),
        })?;

        let mut edges = Vec::new();
        for (line, text) in lines {
            let fields: Vec<&str> = text.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("expected vertex index, found {s:?}"),
                })
            };
            match fields.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected two vertex indices, found {text:?}"),
                    })
                }
            }
        }
        Graph::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// A named family of graphs.
///
/// The JSON form is internally tagged, e.g. `{"family":"eye","d":2}` or
/// `{"family":"blowup","base":{"family":"eye","d":2},"k":3}`. The compact
/// form accepted by [`FromStr`] is `eye:2`, `blowup:3:eye:2`, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    Cycle { n: usize },
    Complete { n: usize },
    CompleteBipartite { n: usize, m: usize },
    /// `d` six-cycles, the first joined to every other one through the
    /// first and fourth vertex of each.
    #[serde(rename = "eye")]
    EyeGd { d: usize },
    /// Each vertex replaced by `k` independent copies; copy classes of
    /// adjacent vertices are joined completely.
    Blowup { base: Box<GraphFamily>, k: usize },
    /// Two disjoint `n`-cycles plus all `n²` edges between them.
    TwoFullyJoinedCycles { n: usize },
    /// Vertex `j` of the base receives a pendant path with `j + 1` edges.
    AsymmetricEnlargement { base: Box<GraphFamily> },
    /// Two `n`-cycles fully joined to each other; each cycle is then copied
    /// `copies - 1` more times, copies of a cycle being blown up in parallel
    /// along the cycle edges. Cross edges exist only between the two
    /// original cycles.
    ParallelJoinedCycles { n: usize, copies: usize },
}

impl GraphFamily {
    /// 36 vertices: the eye graph blown up three times.
    pub fn h36() -> Self {
        GraphFamily::Blowup { base: Box::new(GraphFamily::EyeGd { d: 2 }), k: 3 }
    }

    /// 60 vertices. Experimental: the edge set is an interpretation.
    pub fn h60() -> Self {
        GraphFamily::Blowup { base: Box::new(GraphFamily::EyeGd { d: 2 }), k: 5 }
    }

    /// 90 vertices: two fully joined 5-cycles blown up nine times.
    pub fn h90() -> Self {
        GraphFamily::Blowup { base: Box::new(GraphFamily::TwoFullyJoinedCycles { n: 5 }), k: 9 }
    }

    /// 90 vertices, with cross edges only between one pair of 5-cycles.
    pub fn h90_parallel() -> Self {
        GraphFamily::ParallelJoinedCycles { n: 5, copies: 9 }
    }

    /// True for presets whose edge set is not pinned down by a unique
    /// construction.
    pub fn is_experimental(&self) -> bool {
        *self == Self::h60()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            GraphFamily::Cycle { n } if *n < 3 => bad(format!("cycle needs n >= 3, got {n}")),
            GraphFamily::Complete { n } if *n < 1 => bad("complete graph needs n >= 1".into()),
            GraphFamily::CompleteBipartite { n, m } if *n < 1 || *m < 1 => {
                bad(format!("complete bipartite needs positive parts, got {n},{m}"))
            }
            GraphFamily::EyeGd { d } if *d < 1 => bad("eye graph needs d >= 1".into()),
            GraphFamily::Blowup { k, .. } if *k < 1 => bad("blow-up needs k >= 1".into()),
            GraphFamily::Blowup { base, .. } => base.validate(),
            GraphFamily::TwoFullyJoinedCycles { n } if *n < 3 => {
                bad(format!("two-cycles needs n >= 3, got {n}"))
            }
            GraphFamily::ParallelJoinedCycles { n, copies } if *n < 3 || *copies < 1 => {
                bad(format!("parallel-cycles needs n >= 3 and copies >= 1, got {n},{copies}"))
            }
            GraphFamily::AsymmetricEnlargement { base } => base.validate(),
            _ => Ok(()),
        }
    }

    /// Vertex count of the generated graph, without building it.
    pub fn vertex_count(&self) -> usize {
        match self {
            GraphFamily::Cycle { n } | GraphFamily::Complete { n } => *n,
            GraphFamily::CompleteBipartite { n, m } => n + m,
            GraphFamily::EyeGd { d } => 6 * d,
            GraphFamily::Blowup { base, k } => base.vertex_count() * k,
            GraphFamily::TwoFullyJoinedCycles { n } => 2 * n,
            GraphFamily::AsymmetricEnlargement { base } => {
                let b = base.vertex_count();
                b + b * (b + 1) / 2
            }
            GraphFamily::ParallelJoinedCycles { n, copies } => 2 * n * copies,
        }
    }
}

/// Builds the graph of a family.
pub fn generate(family: &GraphFamily) -> Result<Graph> {
    family.validate()?;
    let (n, edges) = edges_of(family);
    Graph::new(n, edges)
}

fn cycle_edges(n: usize, offset: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |i| (offset + i, offset + (i + 1) % n))
}

fn edges_of(family: &GraphFamily) -> (usize, Vec<(usize, usize)>) {
    match family {
        GraphFamily::Cycle { n } => (*n, cycle_edges(*n, 0).collect()),
        GraphFamily::Complete { n } => {
            let edges = (0..*n).flat_map(|u| (u + 1..*n).map(move |v| (u, v))).collect();
            (*n, edges)
        }
        GraphFamily::CompleteBipartite { n, m } => {
            let (n, m) = (*n, *m);
            let edges = (0..n).flat_map(|u| (n..n + m).map(move |v| (u, v))).collect();
            (n + m, edges)
        }
        GraphFamily::EyeGd { d } => {
            let mut edges: Vec<_> = (0..*d).flat_map(|i| cycle_edges(6, 6 * i)).collect();
            for i in 1..*d {
                for a in [0, 3] {
                    for b in [0, 3] {
                        edges.push((a, 6 * i + b));
                    }
                }
            }
            (6 * d, edges)
        }
        GraphFamily::Blowup { base, k } => {
            let k = *k;
            let (n, base_edges) = edges_of(base);
            let mut edges = Vec::with_capacity(base_edges.len() * k * k);
            for (u, v) in base_edges {
                for a in 0..k {
                    for b in 0..k {
                        edges.push((u * k + a, v * k + b));
                    }
                }
            }
            (n * k, edges)
        }
        GraphFamily::TwoFullyJoinedCycles { n } => {
            let n = *n;
            let mut edges: Vec<_> = cycle_edges(n, 0).chain(cycle_edges(n, n)).collect();
            edges.extend((0..n).flat_map(|u| (n..2 * n).map(move |v| (u, v))));
            (2 * n, edges)
        }
        GraphFamily::AsymmetricEnlargement { base } => {
            let (n, mut edges) = edges_of(base);
            let mut next = n;
            for j in 0..n {
                let mut prev = j;
                for _ in 0..=j {
                    edges.push((prev, next));
                    prev = next;
                    next += 1;
                }
            }
            (next, edges)
        }
        GraphFamily::ParallelJoinedCycles { n, copies } => {
            let (n, copies) = (*n, *copies);
            let vertex = |part: usize, copy: usize, v: usize| part * n * copies + copy * n + v;
            let mut edges = Vec::new();
            for part in 0..2 {
                for v in 0..n {
                    for a in 0..copies {
                        for b in 0..copies {
                            edges.push((vertex(part, a, v), vertex(part, b, (v + 1) % n)));
                        }
                    }
                }
            }
            for u in 0..n {
                for w in 0..n {
                    edges.push((vertex(0, 0, u), vertex(1, 0, w)));
                }
            }
            (2 * n * copies, edges)
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::Cycle { n } => write!(f, "cycle:{n}"),
            GraphFamily::Complete { n } => write!(f, "complete:{n}"),
            GraphFamily::CompleteBipartite { n, m } => write!(f, "bipartite:{n}:{m}"),
            GraphFamily::EyeGd { d } => write!(f, "eye:{d}"),
            GraphFamily::Blowup { base, k } => write!(f, "blowup:{k}:{base}"),
            GraphFamily::TwoFullyJoinedCycles { n } => write!(f, "two-cycles:{n}"),
            GraphFamily::AsymmetricEnlargement { base } => write!(f, "asym:{base}"),
            GraphFamily::ParallelJoinedCycles { n, copies } => {
                write!(f, "parallel-cycles:{n}:{copies}")
            }
        }
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unrecognized graph family {s:?}"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());

        match s {
            "h36" => return Ok(Self::h36()),
            "h60" => return Ok(Self::h60()),
            "h90" => return Ok(Self::h90()),
            "h90-parallel" => return Ok(Self::h90_parallel()),
            _ => {}
        }
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        let family = match head {
            "cycle" => GraphFamily::Cycle { n: num(rest)? },
            "complete" => GraphFamily::Complete { n: num(rest)? },
            "eye" => GraphFamily::EyeGd { d: num(rest)? },
            "two-cycles" => GraphFamily::TwoFullyJoinedCycles { n: num(rest)? },
            "bipartite" => {
                let (n, m) = rest.split_once(':').ok_or_else(bad)?;
                GraphFamily::CompleteBipartite { n: num(n)?, m: num(m)? }
            }
            "parallel-cycles" => {
                let (n, c) = rest.split_once(':').ok_or_else(bad)?;
                GraphFamily::ParallelJoinedCycles { n: num(n)?, copies: num(c)? }
            }
            "blowup" => {
                let (k, inner) = rest.split_once(':').ok_or_else(bad)?;
                GraphFamily::Blowup { base: Box::new(inner.parse()?), k: num(k)? }
            }
            "asym" => GraphFamily::AsymmetricEnlargement { base: Box::new(rest.parse()?) },
            _ => return Err(bad()),
        };
        family.validate()?;
        Ok(family)
    }
}
