//! Undirected labeled graphs and the index conventions shared by every
//! other module.
//!
//! Edges are stored canonically: `u < v`, sorted by `(u, v)`. The position
//! of an edge in [`Graph::edges`] is its *edge index*, and all per-edge
//! outputs (feature rows, posteriors) follow this order.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeAttr {
    pub label: usize,
}

/// An undirected edge. `label == None` marks an edge whose value is unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub label: Option<usize>,
}

impl Edge {
    /// Builds an edge with its endpoints in canonical (ascending) order.
    pub fn new(a: usize, b: usize, label: Option<usize>) -> Self {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        Edge { u, v, label }
    }
}

/// Sizes of the dense, 0-based label alphabets of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAlphabet {
    pub edge_classes: usize,
    pub node_classes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    global_attr: Option<f64>,
    nodes: Vec<NodeAttr>,
    edges: Vec<Edge>,
    dataset_id: String,
}

impl Graph {
    /// Validates and canonicalizes a graph. Edges may be given in any order
    /// and orientation; exact duplicates are rejected.
    pub fn new(nodes: Vec<NodeAttr>, edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge::new(e.u, e.v, e.label))
            .collect();
        for e in &edges {
            if e.v >= n {
                return Err(Error::NodeOutOfRange { index: e.v, nodes: n });
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u));
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::DuplicateEdge(w[0].u, w[0].v));
        }
        Ok(Graph {
            global_attr: None,
            nodes,
            edges,
            dataset_id: String::new(),
        })
    }

    pub fn with_global_attr(mut self, attr: Option<f64>) -> Self {
        self.global_attr = attr;
        self
    }

    pub fn with_dataset_id(mut self, id: impl Into<String>) -> Self {
        self.dataset_id = id.into();
        self
    }

    /// Carried for format fidelity; no model consumes it.
    pub fn global_attr(&self) -> Option<f64> {
        self.global_attr
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn nodes(&self) -> &[NodeAttr] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        if i >= self.nodes.len() {
            return Err(Error::NodeOutOfRange {
                index: i,
                nodes: self.nodes.len(),
            });
        }
        Ok(self.edges.iter().filter(|e| e.u == i || e.v == i).count())
    }

    /// Full-graph degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Indices of edges that carry a label, in edge order.
    pub fn labeled_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&k| self.edges[k].label.is_some())
            .collect()
    }

    pub fn unlabeled_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&k| self.edges[k].label.is_none())
            .collect()
    }

    /// Copy of the graph where only the edges in `keep` retain their labels.
    pub fn keep_labels(&self, keep: &[usize]) -> Result<Graph> {
        let mut mask = vec![false; self.edges.len()];
        for &k in keep {
            self.check_edge(k)?;
            mask[k] = true;
        }
        let mut out = self.clone();
        for (e, keep) in out.edges.iter_mut().zip(mask) {
            if !keep {
                e.label = None;
            }
        }
        Ok(out)
    }

    /// Copy of the graph with every edge label set to `labels[k]`.
    pub fn with_edge_labels(&self, labels: &[Option<usize>]) -> Result<Graph> {
        if labels.len() != self.edges.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} edges",
                labels.len(),
                self.edges.len()
            )));
        }
        let mut out = self.clone();
        for (e, &l) in out.edges.iter_mut().zip(labels) {
            e.label = l;
        }
        Ok(out)
    }

    pub(crate) fn check_edge(&self, k: usize) -> Result<()> {
        if k >= self.edges.len() {
            return Err(Error::EdgeOutOfRange {
                index: k,
                edges: self.edges.len(),
            });
        }
        Ok(())
    }

    /// Adjacency and degree matrices of the subgraph formed by `edge_subset`,
    /// sized by the full node set so rows stay indexable by node index.
    pub fn adjacency_and_degree(&self, edge_subset: &[usize]) -> Result<(Array2<f64>, Array2<f64>)> {
        let n = self.nodes.len();
        let mut a = Array2::<f64>::zeros((n, n));
        for &k in edge_subset {
            self.check_edge(k)?;
            let e = self.edges[k];
            a[[e.u, e.v]] = 1.0;
            a[[e.v, e.u]] = 1.0;
        }
        let mut d = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            d[[i, i]] = a.row(i).sum();
        }
        Ok((a, d))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn unlabeled_nodes(n: usize) -> Vec<NodeAttr> {
        vec![NodeAttr { label: 0 }; n]
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Graph {
        let edges = pairs.iter().map(|&(a, b)| Edge::new(a, b, Some(0))).collect();
        Graph::new(unlabeled_nodes(n), edges).unwrap()
    }

    pub fn path2() -> Graph {
        from_pairs(2, &[(0, 1)])
    }

    pub fn triangle() -> Graph {
        from_pairs(3, &[(0, 1), (1, 2), (0, 2)])
    }

    pub fn star(leaves: usize) -> Graph {
        let pairs: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        from_pairs(leaves + 1, &pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degrees_of_small_graphs() {
        assert_eq!(path2().degree(0).unwrap(), 1);
        let k3 = triangle();
        for i in 0..3 {
            assert_eq!(k3.degree(i).unwrap(), 2);
        }
        assert_eq!(star(4).degree(0).unwrap(), 4);
        assert!(matches!(
            k3.degree(3),
            Err(Error::NodeOutOfRange { index: 3, nodes: 3 })
        ));
    }

    #[test]
    fn canonicalizes_and_rejects_bad_edges() {
        let g = Graph::new(unlabeled_nodes(3), vec![Edge::new(2, 1, None), Edge { u: 1, v: 0, label: Some(1) }]).unwrap();
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, label: Some(1) });
        assert_eq!(g.edges()[1], Edge { u: 1, v: 2, label: None });

        let again = Graph::new(g.nodes().to_vec(), g.edges().to_vec()).unwrap();
        assert_eq!(again, g);

        assert!(matches!(
            Graph::new(unlabeled_nodes(2), vec![Edge::new(1, 1, None)]),
            Err(Error::SelfLoop(1))
        ));
        assert!(matches!(
            Graph::new(unlabeled_nodes(2), vec![Edge::new(0, 1, None), Edge::new(1, 0, None)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(Graph::new(unlabeled_nodes(2), vec![Edge::new(0, 2, None)]).is_err());
    }

    #[test]
    fn adjacency_of_path_and_triangle_subset() {
        let (a, d) = path2().adjacency_and_degree(&[0]).unwrap();
        assert_eq!(a, ndarray::arr2(&[[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(d, ndarray::arr2(&[[1.0, 0.0], [0.0, 1.0]]));

        // edges: (0,1), (0,2), (1,2); drop (0,1)
        let k3 = triangle();
        let (_, d) = k3.adjacency_and_degree(&[1, 2]).unwrap();
        assert_eq!(d[[0, 0]], 1.0);
        assert_eq!(d[[1, 1]], 1.0);
        assert_eq!(d[[2, 2]], 2.0);

        let (a, d) = k3.adjacency_and_degree(&[]).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
        assert!(d.iter().all(|&x| x == 0.0));

        assert!(k3.adjacency_and_degree(&[3]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, Vec<bool>)> {
        (2usize..12)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> =
                    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                let m = pairs.len();
                (Just(n), Just(pairs), proptest::collection::vec(any::<bool>(), m), proptest::collection::vec(any::<bool>(), m))
            })
            .prop_map(|(n, pairs, present, subset)| {
                let chosen: Vec<_> = pairs
                    .iter()
                    .zip(&present)
                    .filter(|(_, &p)| p)
                    .map(|(&(a, b), _)| (a, b))
                    .collect();
                let g = from_pairs(n, &chosen);
                let subset = subset.into_iter().take(g.edge_count()).collect();
                (g, subset)
            })
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_and_degree_sum_is_twice_edges((g, mask) in arb_graph()) {
            let subset: Vec<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect();
            let (a, d) = g.adjacency_and_degree(&subset).unwrap();
            let n = g.node_count();
            for i in 0..n {
                prop_assert_eq!(a[[i, i]], 0.0);
                for j in 0..n {
                    prop_assert_eq!(a[[i, j]], a[[j, i]]);
                }
            }
            prop_assert_eq!(d.diag().sum(), 2.0 * subset.len() as f64);
        }
    }
}
