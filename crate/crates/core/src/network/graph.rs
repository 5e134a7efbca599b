use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `from -> to`: `from` is an in-neighbor of `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Transport delay, s.
    #[serde(default = "default_delay")]
    pub delay: f64,
}

/// Leader-to-follower lag observed over the shared communication server.
pub const DEFAULT_EDGE_DELAY: f64 = 0.1;

fn default_delay() -> f64 {
    DEFAULT_EDGE_DELAY
}

/// Why a graph fails the leader-rooted DAG requirement.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphViolation {
    /// Nodes of one directed cycle, in order.
    pub cycle: Option<Vec<usize>>,
    /// Nodes with no directed path from the leader, ascending.
    pub unreachable: Vec<usize>,
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(cycle) = &self.cycle {
            let mut path: Vec<String> = cycle.iter().map(|n| n.to_string()).collect();
            path.push(cycle[0].to_string());
            parts.push(format!("cycle {}", path.join(" -> ")));
        }
        if !self.unreachable.is_empty() {
            let nodes: Vec<String> = self.unreachable.iter().map(|n| n.to_string()).collect();
            parts.push(format!("nodes unreachable from the leader: {{{}}}", nodes.join(", ")));
        }
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl CommGraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
        }
    }

    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut g = Self::new(node_count);
        for e in edges {
            g.add_edge(e.from, e.to, e.delay)?;
        }
        Ok(g)
    }

    /// Rejects self-loops, out-of-range nodes, duplicates and negative delays.
    pub fn add_edge(&mut self, from: usize, to: usize, delay: f64) -> Result<()> {
        if from >= self.node_count || to >= self.node_count {
            return Err(Error::Graph(format!(
                "edge {from} -> {to} references a node outside 0..{}",
                self.node_count
            )));
        }
        if from == to {
            return Err(Error::Graph(format!("self-loop on node {from}")));
        }
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::Graph(format!("edge {from} -> {to} has invalid delay {delay}")));
        }
        if self.edges.iter().any(|e| e.from == from && e.to == to) {
            return Err(Error::Graph(format!("duplicate edge {from} -> {to}")));
        }
        self.edges.push(Edge { from, to, delay });
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == node)
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == node)
    }

    /// `a_ij = 1` iff `j -> i`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.node_count, self.node_count);
        for e in &self.edges {
            a[(e.to, e.from)] = 1.0;
        }
        a
    }

    /// Diagonal in-degree matrix.
    pub fn degree(&self) -> DMatrix<f64> {
        let a = self.adjacency();
        DMatrix::from_diagonal(&a.column_sum())
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree() - self.adjacency()
    }

    /// `1^T L = 0`, i.e. every node's in-degree equals its out-degree.
    pub fn weight_balanced(&self) -> bool {
        self.laplacian().row_sum().iter().all(|&s| s == 0.0)
    }

    /// Kahn topological order, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count;
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            indeg[e.to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for e in self.out_edges(v) {
                indeg[e.to] -= 1;
                if indeg[e.to] == 0 {
                    queue.push_back(e.to);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(g: &CommGraph, v: usize, color: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
            color[v] = 1;
            stack.push(v);
            for e in g.out_edges(v) {
                match color[e.to] {
                    1 => {
                        let start = stack.iter().position(|&s| s == e.to).expect("on stack");
                        return Some(stack[start..].to_vec());
                    }
                    0 => {
                        if let Some(c) = visit(g, e.to, color, stack) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            stack.pop();
            color[v] = 2;
            None
        }
        let mut color = vec![0u8; self.node_count];
        for v in 0..self.node_count {
            if color[v] == 0 {
                if let Some(c) = visit(self, v, &mut color, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Breadth-first reachability from `root`.
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        if root >= self.node_count {
            return seen;
        }
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for e in self.out_edges(v) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    /// Acyclic and every node reachable from the leader (node 0).
    /// Returns a topological order on success.
    pub fn validate_assumption1(&self) -> std::result::Result<Vec<usize>, GraphViolation> {
        let order = self.topological_order();
        let seen = self.reachable_from(0);
        let unreachable: Vec<usize> = (0..self.node_count).filter(|&i| !seen[i]).collect();
        match order {
            Some(order) if unreachable.is_empty() => Ok(order),
            Some(_) => Err(GraphViolation {
                cycle: None,
                unreachable,
            }),
            None => Err(GraphViolation {
                cycle: self.find_cycle(),
                unreachable,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> CommGraph {
        CommGraph::from_edges(n, edges.iter().map(|&(from, to)| Edge { from, to, delay: 0.0 })).unwrap()
    }

    #[test]
    fn chain_laplacian() {
        let l = graph(3, &[(0, 1), (1, 2)]).laplacian();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(l, expected);
    }

    #[test]
    fn empty_graph() {
        let g = CommGraph::new(4);
        assert_eq!(g.laplacian(), DMatrix::zeros(4, 4));
        assert!(g.weight_balanced());
    }

    #[test]
    fn assumption1_cases() {
        assert_eq!(graph(3, &[(0, 1), (1, 2)]).validate_assumption1(), Ok(vec![0, 1, 2]));
        let cyc = graph(3, &[(0, 1), (1, 2), (2, 1)]).validate_assumption1().unwrap_err();
        let mut c = cyc.cycle.clone().unwrap();
        c.sort();
        assert_eq!(c, vec![1, 2]);
        assert!(cyc.to_string().contains("cycle"));
        let iso = graph(3, &[(0, 1)]).validate_assumption1().unwrap_err();
        assert_eq!(iso.cycle, None);
        assert_eq!(iso.unreachable, vec![2]);
    }

    #[test]
    fn balance() {
        assert!(graph(3, &[(0, 1), (1, 2), (2, 0)]).weight_balanced());
        assert!(!graph(3, &[(0, 1), (1, 2)]).weight_balanced());
    }

    #[test]
    fn rejects_malformed_edges() {
        let mut g = CommGraph::new(2);
        assert!(g.add_edge(0, 0, 0.0).is_err());
        assert!(g.add_edge(0, 2, 0.0).is_err());
        assert!(g.add_edge(0, 1, -0.1).is_err());
        g.add_edge(0, 1, 0.1).unwrap();
        assert!(g.add_edge(0, 1, 0.0).is_err());
    }

    #[test]
    fn star_degrees() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(g.degree().diagonal().as_slice(), &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.in_edges(2).count(), 1);
        assert_eq!(g.out_edges(0).count(), 3);
    }
}
