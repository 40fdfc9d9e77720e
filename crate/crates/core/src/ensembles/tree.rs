use crate::ensembles::Seed;
use crate::error::{Error, Result};

/// Simple undirected graph on vertices `0..n`, edges stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b}) for n = {n}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidInput(format!("duplicate edge ({a}, {b})")));
            }
            out.push(e);
        }
        Ok(Self { n, edges: out })
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().iter().map(Vec::len).collect()
    }

    /// True when the graph is connected and has `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        if self.n == 0 || self.edges.len() + 1 != self.n {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Longest shortest path, assuming the graph is a forest (BFS from every vertex).
    pub fn diameter(&self) -> usize {
        let adj = self.adjacency();
        let mut best = 0;
        for s in 0..self.n {
            let mut dist = vec![usize::MAX; self.n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        best = best.max(dist[w]);
                        queue.push_back(w);
                    }
                }
            }
        }
        best
    }
}

/// Uniform labeled tree on `n` vertices with every degree at most `max_degree`,
/// by rejection sampling of Prüfer sequences.
pub fn sample_tree(n: usize, max_degree: usize, seed: &Seed) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidDimension("tree needs n >= 1".into()));
    }
    if n <= 2 {
        if n == 2 && max_degree == 0 {
            return Err(Error::InvalidInput("max_degree 0 admits no tree on 2 vertices".into()));
        }
        let edges = if n == 2 { vec![(0, 1)] } else { vec![] };
        return Graph::new(n, edges);
    }
    if max_degree < 2 {
        return Err(Error::InvalidInput(format!("no tree on {n} vertices has max degree {max_degree}")));
    }
    let rng = seed.rng();
    let len = n - 2;
    for attempt in 0..100_000u64 {
        let mut stream = rng.stream(attempt << 32);
        let code: Vec<usize> = (0..len).map(|_| stream.below(n as u64) as usize).collect();
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        if degree.iter().any(|&d| d > max_degree) {
            continue;
        }
        return Graph::new(n, decode_prufer(&code, degree));
    }
    Err(Error::ResourceLimit(format!(
        "degree bound {max_degree} rejected every Prüfer sequence for n = {n}"
    )))
}

fn decode_prufer(code: &[usize], mut degree: Vec<usize>) -> Vec<(usize, usize)> {
    let n = degree.len();
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    for &c in code {
        let leaf = *leaves.iter().next().expect("a leaf always exists");
        leaves.remove(&leaf);
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// One strictly positive `q × q` table per edge (row-major, indexed by the states
/// of the lower and higher endpoint), with log-normal entries `exp(scale · Z)`.
pub fn sample_potentials(graph: &Graph, q: usize, scale: f64, seed: &Seed) -> Result<Vec<Vec<f64>>> {
    if q == 0 {
        return Err(Error::InvalidDimension("alphabet size must be >= 1".into()));
    }
    let rng = seed.rng();
    Ok((0..graph.edges.len())
        .map(|e| {
            (0..q * q)
                .map(|k| (scale * rng.normal_at((e * q * q + k) as u64)).exp())
                .collect()
        })
        .collect())
}
