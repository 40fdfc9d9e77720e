use std::fmt::Write as _;
use std::str::FromStr;

use crate::ensembles::{sample_potentials, sample_tree, Graph, Seed};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pairwise model `μ(x) ∝ Π_{(i,j)∈E} ψ_ij(x_i, x_j)` over the alphabet `0..q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalModel<T> {
    graph: Graph,
    q: usize,
    /// Per edge `(u, v)` with `u < v`: `ψ_uv(a, b)` at `a * q + b`.
    tables: Vec<Vec<T>>,
    /// `adj[i]`: `(neighbour, directed edge i→neighbour)`.
    adj: Vec<Vec<(usize, usize)>>,
}

impl<T: Real> GraphicalModel<T> {
    /// Builds a model from `(i, j, ψ_ij)` triples; tables given for `i > j` are
    /// transposed so that `ψ_ij(a, b) = ψ_ji(b, a)` holds by construction.
    pub fn new(n: usize, q: usize, edges: Vec<(usize, usize, Vec<T>)>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("alphabet must be non-empty".into()));
        }
        let mut pairs = Vec::with_capacity(edges.len());
        let mut tables = Vec::with_capacity(edges.len());
        for (i, j, t) in edges {
            if t.len() != q * q {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) has {} potential entries, expected {}",
                    t.len(),
                    q * q
                )));
            }
            if let Some(v) = t.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) has non-positive potential {v}")));
            }
            let t = if i > j { transpose(&t, q) } else { t };
            pairs.push((i, j));
            tables.push(t);
        }
        let graph = Graph::new(n, pairs)?;
        Ok(Self::assemble(graph, q, tables))
    }

    /// Model on an existing graph; `tables[e]` is indexed by the states of the
    /// lower and higher endpoint of edge `e`.
    pub fn from_graph(graph: Graph, q: usize, tables: Vec<Vec<T>>) -> Result<Self> {
        if tables.len() != graph.edges.len() {
            return Err(Error::InvalidInput("one table per edge required".into()));
        }
        let edges = graph.edges.iter().zip(tables).map(|(&(i, j), t)| (i, j, t)).collect();
        Self::new(graph.n, q, edges)
    }

    fn assemble(graph: Graph, q: usize, tables: Vec<Vec<T>>) -> Self {
        let mut adj = vec![Vec::new(); graph.n];
        for (e, &(u, v)) in graph.edges.iter().enumerate() {
            adj[u].push((v, 2 * e));
            adj[v].push((u, 2 * e + 1));
        }
        Self { graph, q, tables, adj }
    }

    /// Random tree with log-normal potentials `exp(scale · Z)`.
    pub fn random_tree(n: usize, q: usize, max_degree: usize, scale: f64, seed: &Seed) -> Result<Self> {
        let graph = sample_tree(n, max_degree, &seed.child("tree"))?;
        let tables = sample_potentials(&graph, q, scale, &seed.child("potentials"))?
            .into_iter()
            .map(|t| t.into_iter().map(T::lit).collect())
            .collect();
        Self::from_graph(graph, q, tables)
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// `(neighbour, directed edge id)` pairs of vertex `i`.
    pub fn neighbours(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn num_directed_edges(&self) -> usize {
        2 * self.graph.edges.len()
    }

    /// Endpoints `(from, to)` of a directed edge id.
    pub fn directed_edge(&self, d: usize) -> (usize, usize) {
        let (u, v) = self.graph.edges[d / 2];
        if d % 2 == 0 {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Id of the reverse of directed edge `d`.
    pub fn reverse(d: usize) -> usize {
        d ^ 1
    }

    /// `ψ(x_from, x_to)` along directed edge `d`.
    pub fn potential(&self, d: usize, a: usize, b: usize) -> T {
        let t = &self.tables[d / 2];
        if d % 2 == 0 {
            t[a * self.q + b]
        } else {
            t[b * self.q + a]
        }
    }

    /// The model with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidInput("relabeling must be a permutation".into()));
        }
        let edges = self
            .graph
            .edges
            .iter()
            .zip(&self.tables)
            .map(|(&(u, v), t)| (perm[u], perm[v], t.clone()))
            .collect();
        Self::new(n, self.q, edges)
    }

    /// Edge-list text: a header `n q`, then one line `i j ψ(0,0) ψ(0,1) …` per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.q);
        for (&(u, v), t) in self.graph.edges.iter().zip(&self.tables) {
            let _ = write!(s, "{u} {v}");
            for x in t {
                let _ = write!(s, " {x}");
            }
            s.push('\n');
        }
        s
    }
}

impl<T: Real + FromStr> FromStr for GraphicalModel<T> {
    type Err = Error;

    /// Parses the edge-list format; blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty model file".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token '{t}'"))))
            .collect::<Result<_>>()?;
        let [n, q] = head[..] else {
            return Err(Error::Parse(format!("header must be 'n q', got '{header}'")));
        };
        let mut edges = Vec::new();
        for (no, line) in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 2 + q * q {
                return Err(Error::Parse(format!("line {no}: expected {} fields, got {}", 2 + q * q, tok.len())));
            }
            let idx = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("line {no}: bad vertex '{t}'")));
            let vals = tok[2..]
                .iter()
                .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("line {no}: bad potential '{t}'"))))
                .collect::<Result<Vec<T>>>()?;
            edges.push((idx(tok[0])?, idx(tok[1])?, vals));
        }
        Self::new(n, q, edges)
    }
}

fn transpose<T: Copy>(t: &[T], q: usize) -> Vec<T> {
    (0..q * q).map(|k| t[(k % q) * q + k / q]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_is_consistent() {
        let m = GraphicalModel::<f64>::new(2, 2, vec![(1, 0, vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        // ψ_10(a, b) given; stored as ψ_01(b, a).
        assert_eq!(m.directed_edge(0), (0, 1));
        assert_eq!(m.potential(0, 0, 1), 3.0);
        assert_eq!(m.potential(1, 1, 0), 3.0);
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let text = "# chain\n3 2\n0 1 1 2 2 1\n1 2 0.5 1 1 0.5\n";
        let m: GraphicalModel<f64> = text.parse().unwrap();
        let back: GraphicalModel<f64> = m.to_text().parse().unwrap();
        assert_eq!(m, back);
        assert!("3 2\n0 1 1 2 2\n".parse::<GraphicalModel<f64>>().is_err());
        assert!("3 2\n0 1 1 2 2 -1\n".parse::<GraphicalModel<f64>>().is_err());
        assert!("3\n".parse::<GraphicalModel<f64>>().is_err());
    }
}
