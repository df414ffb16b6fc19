use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Simple undirected graph over agents `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityGraph {
    num_agents: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl ConnectivityGraph {
    pub fn empty(num_agents: usize) -> Self {
        Self {
            num_agents,
            edges: BTreeSet::new(),
        }
    }

    /// Rejects self loops, out-of-range endpoints and repeated edges
    /// (including `(l, k)` after `(k, l)`).
    pub fn new(num_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (k, l) in edges {
            if k == l {
                return Err(Error::input(format!("self loop at agent {}", k)));
            }
            if k >= num_agents || l >= num_agents {
                return Err(Error::input(format!("edge ({}, {}) out of range", k, l)));
            }
            if !set.insert((k.min(l), k.max(l))) {
                return Err(Error::input(format!("duplicate edge ({}, {})", k, l)));
            }
        }
        Ok(Self {
            num_agents,
            edges: set,
        })
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, k: usize, l: usize) -> bool {
        self.edges.contains(&(k.min(l), k.max(l)))
    }

    /// Open neighborhood of `k`.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        (0..self.num_agents)
            .filter(|&l| l != k && self.has_edge(k, l))
            .collect()
    }

    /// Closed neighborhood: `k` together with its neighbors, ascending.
    pub fn closed_neighbors(&self, k: usize) -> Vec<usize> {
        (0..self.num_agents)
            .filter(|&l| l == k || self.has_edge(k, l))
            .collect()
    }

    pub fn degree(&self, k: usize) -> usize {
        self.neighbors(k).len()
    }

    /// Combination matrix giving every edge the weight `1 / (max_degree + 1)`.
    pub fn uniform_combination<T: Real>(&self) -> Matrix<T> {
        let max_deg = (0..self.num_agents).map(|k| self.degree(k)).max().unwrap_or(0);
        let c = T::one() / T::from_usize_lossy(max_deg + 1);
        let mut m = Matrix::zeros(self.num_agents, self.num_agents);
        for (k, l) in self.edges() {
            m[(k, l)] = c;
            m[(l, k)] = c;
            m[(k, k)] -= c;
            m[(l, l)] -= c;
        }
        m
    }
}

/// On-disk network description: 1-based edge list and optional combination
/// matrix `C`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub num_agents: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub combination: Option<Vec<Vec<f64>>>,
}

impl NetworkFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn graph(&self) -> Result<ConnectivityGraph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(k, l) in &self.edges {
            if k == 0 || l == 0 {
                return Err(Error::input("agents are labelled from 1 in network files"));
            }
            edges.push((k - 1, l - 1));
        }
        ConnectivityGraph::new(self.num_agents, edges)
    }

    /// The stored combination matrix, or the uniform default for the graph.
    pub fn combination<T: Real>(&self) -> Result<Matrix<T>> {
        match &self.combination {
            Some(rows) => {
                let rows: Vec<Vec<T>> = rows
                    .iter()
                    .map(|r| r.iter().map(|&x| T::lit(x)).collect())
                    .collect();
                Matrix::from_rows(&rows).ok_or_else(|| Error::input("ragged combination matrix"))
            }
            None => Ok(self.graph()?.uniform_combination()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_simple_graphs() {
        assert!(ConnectivityGraph::new(3, [(0, 0)]).is_err());
        assert!(ConnectivityGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(ConnectivityGraph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn neighborhoods() {
        let g = ConnectivityGraph::new(3, [(0, 1)]).unwrap();
        assert_eq!(g.neighbors(0), vec![1]);
        assert_eq!(g.closed_neighbors(1), vec![0, 1]);
        assert_eq!(g.closed_neighbors(2), vec![2]);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn network_file_with_explicit_combination() {
        let file: NetworkFile = serde_json::from_str(
            r#"{"num_agents": 3, "edges": [[1, 2]],
                "combination": [[-0.25, 0.25, 0], [0.25, -0.25, 0], [0, 0, 0]]}"#,
        )
        .unwrap();
        let g = file.graph().unwrap();
        assert!(g.has_edge(0, 1));
        let c: Matrix<f64> = file.combination().unwrap();
        assert_eq!(c[(0, 1)], 0.25);
    }

    #[test]
    fn default_combination_has_zero_row_sums() {
        let g = ConnectivityGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c: Matrix<f64> = g.uniform_combination();
        for k in 0..4 {
            assert!(c.row(k).iter().sum::<f64>().abs() < 1e-15);
        }
    }
}
