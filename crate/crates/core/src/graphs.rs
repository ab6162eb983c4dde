//! Simple undirected graphs on contiguous vertex indices.
//!
//! Besides the [`Graph`] type itself this module knows the standard
//! families used throughout the crate (a small family DSL, see
//! [`make_family`]), BFS 2-coloring and the degree condition under which the
//! bipartite witness construction beats the edge bound.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),
    #[error("invalid size in family descriptor `{0}`")]
    InvalidSize(String),
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is not bipartite")]
    NotBipartite,
}

/// Undirected simple graph with vertices `0..n`.
///
/// Edges are stored as ordered pairs `(min, max)` in a `BTreeSet`, so
/// iteration is lexicographic and deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    name: Option<String>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
            name: None,
        }
    }

    /// Builds a graph from an edge iterator. Duplicate edges (in either
    /// orientation) collapse; loops and out-of-range endpoints are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool, GraphError> {
        for w in [u, v] {
            if w >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Name if set, otherwise a short `graph(n=..,m=..)` label.
    pub fn label(&self) -> String {
        match &self.name {
            Some(s) => s.clone(),
            None => format!("graph(n={},m={})", self.n, self.edges.len()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.adjacency()[v].clone()
    }

    /// Sorted adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// All unordered non-adjacent pairs `(v, w)`, `v < w`, in lexicographic order.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.n {
            for w in (v + 1)..self.n {
                if !self.edges.contains(&(v, w)) {
                    out.push((v, w));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for root in 0..self.n {
            if seen[root] {
                continue;
            }
            let mut comp: Vec<usize> = self
                .distances_from(root)
                .iter()
                .enumerate()
                .filter_map(|(v, d)| d.map(|_| v))
                .collect();
            for &v in &comp {
                seen[v] = true;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// A forest has exactly `n - c` edges, `c` the number of components.
    pub fn is_forest(&self) -> bool {
        self.edge_count() + self.components().len() == self.n
    }

    /// Induced subgraph on `vertices`, relabeled `0..vertices.len()` in the
    /// given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let pos: BTreeMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut g = Graph::empty(vertices.len());
        for &(u, v) in &self.edges {
            if let (Some(&a), Some(&b)) = (pos.get(&u), pos.get(&v)) {
                g.edges.insert((a.min(b), a.max(b)));
            }
        }
        g
    }

    /// Disjoint union; vertices of `other` are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let mut g = Graph::empty(self.n + other.n);
        g.edges.extend(self.edges.iter().copied());
        g.edges
            .extend(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        g.name = Some(format!("{}+{}", self.label(), other.label()));
        g
    }

    /// Proper 2-coloring by BFS, or `None` when an odd cycle exists.
    ///
    /// Components are rooted at their smallest vertex, which goes to the
    /// left class.
    pub fn bipartition(&self) -> Option<Bipartition> {
        let adj = self.adjacency();
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        for root in 0..self.n {
            if color[root].is_some() {
                continue;
            }
            color[root] = Some(false);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &w in &adj[u] {
                    match color[w] {
                        None => {
                            color[w] = Some(!cu);
                            queue.push_back(w);
                        }
                        Some(cw) if cw == cu => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (v, c) in color.into_iter().enumerate() {
            if c == Some(false) {
                left.push(v);
            } else {
                right.push(v);
            }
        }
        Some(Bipartition { left, right })
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartition().is_some()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// The two color classes of a bipartite graph, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Bipartition {
    /// Every vertex in exactly one class and every edge crossing.
    pub fn is_proper_for(&self, g: &Graph) -> bool {
        let mut side = vec![None; g.vertex_count()];
        for &v in &self.left {
            if v >= side.len() || side[v].is_some() {
                return false;
            }
            side[v] = Some(false);
        }
        for &v in &self.right {
            if v >= side.len() || side[v].is_some() {
                return false;
            }
            side[v] = Some(true);
        }
        side.iter().all(Option::is_some) && g.edges().all(|(u, v)| side[u] != side[v])
    }

    /// ±1 signs, `+1` on the left class.
    pub fn signs(&self, n: usize) -> Vec<f64> {
        let mut s = vec![1.0; n];
        for &v in &self.right {
            s[v] = -1.0;
        }
        s
    }

    pub fn oriented(&self, orientation: Orientation) -> (&[usize], &[usize]) {
        match orientation {
            Orientation::LeftIsV1 => (&self.left, &self.right),
            Orientation::RightIsV1 => (&self.right, &self.left),
        }
    }
}

/// Which color class plays the role of `V₁` (the base class) in the degree
/// condition and in the witness construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    LeftIsV1,
    RightIsV1,
}

/// One orientation of the degree condition: `lhs = Σ_{v∈V₂} d(d−1)`,
/// `rhs = |V₁|(|V₁|−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSides {
    pub lhs: u64,
    pub rhs: u64,
}

impl DegreeSides {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }
    fn slack(&self) -> i128 {
        self.lhs as i128 - self.rhs as i128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thm2Verdict {
    pub holds: bool,
    pub best_orientation: Orientation,
    pub left_as_v1: DegreeSides,
    pub right_as_v1: DegreeSides,
}

/// Evaluates `Σ_{v∈V₂} deg(v)(deg(v)−1) ≥ |V₁|(|V₁|−1)` for both
/// assignments of the color classes. The best orientation is the one with
/// the larger slack; ties go to left-as-`V₁`.
pub fn thm2_condition(g: &Graph) -> Result<Thm2Verdict, GraphError> {
    let bip = g.bipartition().ok_or(GraphError::NotBipartite)?;
    let deg = g.degrees();
    let sides = |v1: &[usize], v2: &[usize]| {
        let a = v1.len() as u64;
        DegreeSides {
            lhs: v2.iter().map(|&v| (deg[v] * deg[v].saturating_sub(1)) as u64).sum(),
            rhs: a * a.saturating_sub(1),
        }
    };
    let left_as_v1 = sides(&bip.left, &bip.right);
    let right_as_v1 = sides(&bip.right, &bip.left);
    let best_orientation = if right_as_v1.slack() > left_as_v1.slack() {
        Orientation::RightIsV1
    } else {
        Orientation::LeftIsV1
    };
    Ok(Thm2Verdict {
        holds: left_as_v1.holds() || right_as_v1.holds(),
        best_orientation,
        left_as_v1,
        right_as_v1,
    })
}

fn parse_size(spec: &str, s: &str) -> Result<usize, GraphError> {
    match s.trim().parse::<usize>() {
        Ok(k) if k > 0 => Ok(k),
        _ => Err(GraphError::InvalidSize(spec.to_string())),
    }
}

/// Builds a named graph from a family descriptor.
///
/// Recognized descriptors: `path:k` (k edges), `cycle:k`, `complete:k`,
/// `complete-bipartite:a,b`, `star:k` (center 0, k leaves), `hypercube:d`,
/// `tree-random:k:seed`, `gnp:n:p:seed`, `empty:k`, `petersen`,
/// `moebius-ladder`.
pub fn make_family(spec: &str) -> Result<Graph, GraphError> {
    let spec = spec.trim();
    let (family, args) = match spec.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (spec, None),
    };
    let arg = || args.ok_or_else(|| GraphError::InvalidSize(spec.to_string()));
    let g = match family {
        "path" => {
            let k = parse_size(spec, arg()?)?;
            Graph::from_edges(k + 1, (0..k).map(|i| (i, i + 1)))?
        }
        "cycle" => {
            let k = parse_size(spec, arg()?)?;
            if k < 3 {
                return Err(GraphError::InvalidSize(spec.to_string()));
            }
            Graph::from_edges(k, (0..k).map(|i| (i, (i + 1) % k)))?
        }
        "complete" => {
            let k = parse_size(spec, arg()?)?;
            Graph::from_edges(k, (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))))?
        }
        "empty" => Graph::empty(parse_size(spec, arg()?)?),
        "complete-bipartite" => {
            let (a, b) = arg()?
                .split_once(',')
                .ok_or_else(|| GraphError::InvalidSize(spec.to_string()))?;
            let (a, b) = (parse_size(spec, a)?, parse_size(spec, b)?);
            Graph::from_edges(a + b, (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j))))?
        }
        "star" => {
            let k = parse_size(spec, arg()?)?;
            Graph::from_edges(k + 1, (1..=k).map(|i| (0, i)))?
        }
        "hypercube" => {
            let d = parse_size(spec, arg()?)?;
            if d > 16 {
                return Err(GraphError::InvalidSize(spec.to_string()));
            }
            let n = 1usize << d;
            Graph::from_edges(
                n,
                (0..n).flat_map(|v| (0..d).map(move |b| (v, v ^ (1 << b)))),
            )?
        }
        "tree-random" => {
            let (k, seed) = arg()?
                .split_once(':')
                .ok_or_else(|| GraphError::InvalidSize(spec.to_string()))?;
            let k = parse_size(spec, k)?;
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| GraphError::InvalidSize(spec.to_string()))?;
            random_tree(k, seed)
        }
        "gnp" => {
            let parts: Vec<&str> = arg()?.split(':').collect();
            if parts.len() != 3 {
                return Err(GraphError::InvalidSize(spec.to_string()));
            }
            let n = parse_size(spec, parts[0])?;
            let p: f64 = parts[1]
                .parse()
                .ok()
                .filter(|p: &f64| (0.0..=1.0).contains(p))
                .ok_or_else(|| GraphError::InvalidSize(spec.to_string()))?;
            let seed: u64 = parts[2]
                .parse()
                .map_err(|_| GraphError::InvalidSize(spec.to_string()))?;
            random_gnp(n, p, seed)
        }
        "petersen" if args.is_none() => {
            let outer = (0..5).map(|i| (i, (i + 1) % 5));
            let spokes = (0..5).map(|i| (i, i + 5));
            let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
            Graph::from_edges(10, outer.chain(spokes).chain(inner))?
        }
        "moebius-ladder" if args.is_none() => moebius_ladder(),
        _ => return Err(GraphError::UnknownFamily(spec.to_string())),
    };
    Ok(g.with_name(spec))
}

/// K₅,₅ on L = {0..4}, R = {5..9} minus the Hamiltonian cycle
/// 0-5-1-6-2-7-3-8-4-9-0.
fn moebius_ladder() -> Graph {
    let removed: BTreeSet<(usize, usize)> = (0..5)
        .flat_map(|i| [(i, 5 + i), ((i + 1) % 5, 5 + i)])
        .collect();
    let edges = (0..5)
        .flat_map(|i| (5..10).map(move |j| (i, j)))
        .filter(|e| !removed.contains(e));
    Graph::from_edges(10, edges).expect("static edge list")
}

/// Uniform random labeled tree via a random Prüfer sequence.
fn random_tree(k: usize, seed: u64) -> Graph {
    let mut g = Graph::empty(k);
    if k < 2 {
        return g;
    }
    if k == 2 {
        g.edges.insert((0, 1));
        return g;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prufer: Vec<usize> = (0..k - 2).map(|_| rng.gen_range(0..k)).collect();
    let mut degree = vec![1usize; k];
    for &p in &prufer {
        degree[p] += 1;
    }
    for &p in &prufer {
        let leaf = (0..k).find(|&v| degree[v] == 1).unwrap();
        g.edges.insert((leaf.min(p), leaf.max(p)));
        degree[leaf] -= 1;
        degree[p] -= 1;
    }
    let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
    g.edges.insert((rest[0], rest[1]));
    g
}

/// Erdős–Rényi G(n, p). Pairs are visited lexicographically with one
/// uniform draw each.
fn random_gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                g.edges.insert((u, v));
            }
        }
    }
    g
}

/// Random connected-or-not graph used by test harnesses: `K_n` minus `r`
/// randomly chosen edges.
pub fn complete_minus(n: usize, removed: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(&mut rng);
    let keep = pairs.len().saturating_sub(removed);
    let g = Graph::from_edges(n, pairs.into_iter().take(keep)).expect("valid pairs");
    g.with_name(format!("complete-minus:{n}:{removed}:{seed}"))
}

/// Result of reading an edge-list file: the graph plus the original labels
/// in order of first appearance (`labels[i]` is the file label of vertex i).
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEdgeList {
    pub graph: Graph,
    pub labels: Vec<u64>,
    /// Third column per edge, if present.
    pub weights: Vec<((usize, usize), f64)>,
}

/// Parses `u v [w]` lines; `#` comments and blank lines are skipped.
/// Vertex labels are relabeled by first appearance.
pub fn parse_edge_list(text: &str) -> Result<ParsedEdgeList, GraphError> {
    let mut relabel: BTreeMap<u64, usize> = BTreeMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| GraphError::Parse {
            line: lineno + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err("expected `u v` or `u v w`"));
        }
        let mut ids = [0usize; 2];
        for (slot, field) in ids.iter_mut().zip(&fields[..2]) {
            let label: u64 = field.parse().map_err(|_| err("vertex is not a non-negative integer"))?;
            *slot = *relabel.entry(label).or_insert_with(|| {
                labels.push(label);
                labels.len() - 1
            });
        }
        let w = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| err("weight is not a number"))?,
            None => 1.0,
        };
        if ids[0] == ids[1] {
            return Err(err("self loop"));
        }
        raw.push(((ids[0], ids[1]), w));
    }
    let graph = Graph::from_edges(labels.len(), raw.iter().map(|&(e, _)| e))?;
    let weights = raw
        .into_iter()
        .map(|((u, v), w)| ((u.min(v), u.max(v)), w))
        .collect();
    Ok(ParsedEdgeList {
        graph,
        labels,
        weights,
    })
}

/// One `u v` line per edge in canonical order, preceded by a header comment
/// carrying the vertex count. Isolated vertices survive only through that
/// header, so [`parse_edge_list`] of the output drops them.
pub fn serialize_edge_list(g: &Graph) -> String {
    let mut out = format!("# {} n={} m={}\n", g.label(), g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}
