use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};

/// Simple undirected graph with an optional left/right bipartition
/// (vertices `0..left` on the left).
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    left: Option<usize>,
    incident: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut incident = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::Parameter(format!("edge {e} = ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Parameter(format!("edge {e} is a self-loop at {u}")));
            }
            incident[u].push(e);
            incident[v].push(e);
        }
        Ok(Self {
            n,
            edges,
            left: None,
            incident,
        })
    }

    pub fn bipartite(n: usize, left: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if left > n {
            return Err(Error::Parameter(format!("left side {left} larger than n = {n}")));
        }
        let mut g = Self::new(n, edges)?;
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            if (u < left) == (v < left) {
                return Err(Error::Parameter(format!("edge {e} = ({u},{v}) does not cross the bipartition")));
            }
        }
        g.left = Some(left);
        Ok(g)
    }

    pub fn complete(k: usize) -> Self {
        let edges = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))).collect();
        Self::new(k, edges).expect("complete graph is valid")
    }

    pub fn path(k: usize) -> Self {
        Self::new(k, (1..k).map(|v| (v - 1, v)).collect()).expect("path is valid")
    }

    pub fn cycle(k: usize) -> Self {
        let mut edges: Vec<_> = (1..k).map(|v| (v - 1, v)).collect();
        if k >= 3 {
            edges.push((k - 1, 0));
        }
        Self::new(k, edges).expect("cycle is valid")
    }

    /// Parses "n m [bipartite k]" followed by m lines "u v".
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?
            .split_whitespace()
            .collect();
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("expected an integer, got {s:?}")))
        };
        let (n, m, left) = match header.as_slice() {
            [n, m] => (num(n)?, num(m)?, None),
            [n, m, "bipartite", k] => (num(n)?, num(m)?, Some(num(k)?)),
            _ => return Err(Error::Parse(format!("bad graph header {header:?}"))),
        };
        let mut edges = Vec::with_capacity(m);
        for line in lines.by_ref().take(m) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [u, v] => edges.push((num(u)?, num(v)?)),
                _ => return Err(Error::Parse(format!("bad edge line {line:?}"))),
            }
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("expected {m} edges, found {}", edges.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines after the edge list".into()));
        }
        match left {
            Some(k) => Self::bipartite(n, k, edges),
            None => Self::new(n, edges),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = match self.left {
            Some(k) => format!("{} {} bipartite {k}\n", self.n, self.edges.len()),
            None => format!("{} {}\n", self.n, self.edges.len()),
        };
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Edge ids incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[v].iter().map(move |&e| self.other_end(e, v))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn left_size(&self) -> Option<usize> {
        self.left
    }

    pub fn is_bipartite(&self) -> bool {
        self.left.is_some()
    }

    /// Component labels of (V, {e : keep(e)}), each label being the
    /// component's representative vertex.
    pub fn components(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut uf = UnionFind::<usize>::new(self.n);
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if keep(e) {
                uf.union(u, v);
            }
        }
        (0..self.n).map(|v| uf.find(v)).collect()
    }
}
