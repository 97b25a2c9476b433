//! Per-edge feature rows fed to the encoder, the decoder and the
//! feature-based baselines.
//!
//! Row layout for edge `(u, v)`, `u < v`:
//!
//! ```text
//! [ Λ[u][..m] ; Λ[v][..m] ; node(u) ; node(v) ; deg(u)/s ; deg(v)/s ]   target row
//! [ ...target row... ; onehot(label) ]                                   context row
//! ```
//!
//! `Λ` comes from the Laplacian of the context subgraph, degrees from the
//! full graph.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelAlphabet};
use crate::spectral::{edge_eigenfeatures, normalized_laplacian, symmetric_eigen, EigenSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeEncoding {
    OneHot,
    /// The raw dense label as a single real; kept for ablations.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub m: usize,
    pub degree_scale: f64,
    pub node_encoding: NodeEncoding,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            m: 1,
            degree_scale: 10.0,
            node_encoding: NodeEncoding::OneHot,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(self.degree_scale > 0.0 && self.degree_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degree_scale must be positive, got {}",
                self.degree_scale
            )));
        }
        Ok(())
    }

    fn node_width(&self, alphabet: &LabelAlphabet) -> usize {
        match self.node_encoding {
            NodeEncoding::OneHot => alphabet.node_classes,
            NodeEncoding::Raw => 1,
        }
    }

    /// Width of a label-free (target) row.
    pub fn target_width(&self, alphabet: &LabelAlphabet) -> usize {
        2 * self.m + 2 * self.node_width(alphabet) + 2
    }

    /// Width of a context row: target row plus the label one-hot.
    pub fn context_width(&self, alphabet: &LabelAlphabet) -> usize {
        self.target_width(alphabet) + alphabet.edge_classes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFeatures {
    /// Sorted, deduplicated context edge indices; row `i` of `context`
    /// describes edge `context_edges[i]`.
    pub context_edges: Vec<usize>,
    pub context: Array2<f64>,
    /// One label-free row per edge of the graph, in edge order.
    pub all: Array2<f64>,
}

/// Eigensystem of the Laplacian of the subgraph spanned by `context_edges`
/// over the full node set.
pub fn context_eigensystem(g: &Graph, context_edges: &[usize]) -> Result<EigenSystem> {
    let (a, d) = g.adjacency_and_degree(context_edges)?;
    let l = normalized_laplacian(&a, &d)?;
    symmetric_eigen(&l.0)
}

fn push_node(row: &mut Vec<f64>, label: usize, cfg: &FeatureConfig, alphabet: &LabelAlphabet) -> Result<()> {
    if label >= alphabet.node_classes {
        return Err(Error::Data(format!(
            "node label {label} outside alphabet of {} classes",
            alphabet.node_classes
        )));
    }
    match cfg.node_encoding {
        NodeEncoding::OneHot => {
            let start = row.len();
            row.resize(start + alphabet.node_classes, 0.0);
            row[start + label] = 1.0;
        }
        NodeEncoding::Raw => row.push(label as f64),
    }
    Ok(())
}

pub fn build_edge_features(
    g: &Graph,
    context_edges: &[usize],
    es: &EigenSystem,
    cfg: &FeatureConfig,
    alphabet: &LabelAlphabet,
) -> Result<EdgeFeatures> {
    if es.dim() != g.node_count() {
        return Err(Error::Shape(format!(
            "eigensystem of dimension {} for a graph with {} nodes",
            es.dim(),
            g.node_count()
        )));
    }
    let mut ctx: Vec<usize> = context_edges.to_vec();
    ctx.sort_unstable();
    ctx.dedup();
    for &k in &ctx {
        g.check_edge(k)?;
    }

    let tw = cfg.target_width(alphabet);
    let cw = cfg.context_width(alphabet);
    let degrees = g.degrees();
    let mut all = Array2::<f64>::zeros((g.edge_count(), tw));
    let mut row = Vec::with_capacity(cw);
    for (k, e) in g.edges().iter().enumerate() {
        row.clear();
        row.extend(edge_eigenfeatures(es, e.u, e.v, cfg.m)?);
        push_node(&mut row, g.nodes()[e.u].label, cfg, alphabet)?;
        push_node(&mut row, g.nodes()[e.v].label, cfg, alphabet)?;
        row.push(degrees[e.u] as f64 / cfg.degree_scale);
        row.push(degrees[e.v] as f64 / cfg.degree_scale);
        all.row_mut(k).iter_mut().zip(&row).for_each(|(d, s)| *d = *s);
    }

    let mut context = Array2::<f64>::zeros((ctx.len(), cw));
    for (i, &k) in ctx.iter().enumerate() {
        let label = g.edges()[k].label.ok_or_else(|| {
            Error::Data(format!("context edge {k} has no label"))
        })?;
        if label >= alphabet.edge_classes {
            return Err(Error::Data(format!(
                "edge label {label} outside alphabet of {} classes",
                alphabet.edge_classes
            )));
        }
        let mut dst = context.row_mut(i);
        dst.slice_mut(ndarray::s![..tw]).assign(&all.row(k));
        dst[tw + label] = 1.0;
    }

    Ok(EdgeFeatures {
        context_edges: ctx,
        context,
        all,
    })
}

/// Eigensystem and features in one call.
pub fn edge_features(
    g: &Graph,
    context_edges: &[usize],
    cfg: &FeatureConfig,
    alphabet: &LabelAlphabet,
) -> Result<EdgeFeatures> {
    let es = context_eigensystem(g, context_edges)?;
    build_edge_features(g, context_edges, &es, cfg, alphabet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::{Edge, NodeAttr};

    fn alphabet(node_classes: usize, edge_classes: usize) -> LabelAlphabet {
        LabelAlphabet {
            edge_classes,
            node_classes,
        }
    }

    #[test]
    fn k3_widths() {
        let g = triangle();
        let f = edge_features(&g, &[0, 1, 2], &FeatureConfig::default(), &alphabet(1, 2)).unwrap();
        assert_eq!(f.context.dim(), (3, 8));
        assert_eq!(f.all.dim(), (3, 6));
        for i in 0..3 {
            assert_eq!(f.context[[i, 6]], 1.0); // label 0 one-hot
            assert_eq!(f.context[[i, 7]], 0.0);
        }
    }

    #[test]
    fn p2_row() {
        let f = edge_features(&path2(), &[0], &FeatureConfig::default(), &alphabet(1, 1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let row = f.all.row(0);
        assert!((row[0] - h).abs() < 1e-12);
        assert!((row[1] + h).abs() < 1e-12);
        assert_eq!(row.slice(ndarray::s![2..]).to_vec(), vec![1.0, 1.0, 0.1, 0.1]);
    }

    #[test]
    fn context_order_is_canonical() {
        let g = star(4);
        let cfg = FeatureConfig::default();
        let a = edge_features(&g, &[2, 0, 3], &cfg, &alphabet(1, 1)).unwrap();
        let b = edge_features(&g, &[3, 2, 0, 0], &cfg, &alphabet(1, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.context_edges, vec![0, 2, 3]);
    }

    #[test]
    fn degrees_come_from_the_full_graph() {
        let g = star(4);
        let cfg = FeatureConfig { m: 1, ..Default::default() };
        let a = edge_features(&g, &[0, 1, 2, 3], &cfg, &alphabet(1, 1)).unwrap();
        let b = edge_features(&g, &[0, 1], &cfg, &alphabet(1, 1)).unwrap();
        let tw = cfg.target_width(&alphabet(1, 1));
        for k in 0..4 {
            assert_eq!(a.all[[k, tw - 2]], 0.4);
            assert_eq!(a.all[[k, tw - 1]], b.all[[k, tw - 1]]);
            assert_eq!(a.all[[k, tw - 2]], b.all[[k, tw - 2]]);
        }
    }

    #[test]
    fn node_one_hots_and_raw_mode() {
        let nodes = vec![NodeAttr { label: 2 }, NodeAttr { label: 0 }];
        let g = Graph::new(nodes, vec![Edge::new(0, 1, Some(1))]).unwrap();
        let alph = alphabet(3, 2);
        let f = edge_features(&g, &[0], &FeatureConfig::default(), &alph).unwrap();
        assert_eq!(f.all.row(0).slice(ndarray::s![2..8]).to_vec(), vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.context.row(0).slice(ndarray::s![10..]).to_vec(), vec![0.0, 1.0]);

        let raw = FeatureConfig { node_encoding: NodeEncoding::Raw, ..Default::default() };
        let f = edge_features(&g, &[0], &raw, &alph).unwrap();
        assert_eq!(f.all.ncols(), 6);
        assert_eq!(f.all.row(0).slice(ndarray::s![2..4]).to_vec(), vec![2.0, 0.0]);
    }

    #[test]
    fn errors() {
        let g = path2();
        let cfg = FeatureConfig::default();
        let es = context_eigensystem(&triangle(), &[0]).unwrap();
        assert!(matches!(
            build_edge_features(&g, &[0], &es, &cfg, &alphabet(1, 1)),
            Err(Error::Shape(_))
        ));
        let unlabeled = g.keep_labels(&[]).unwrap();
        assert!(edge_features(&unlabeled, &[0], &cfg, &alphabet(1, 1)).is_err());
        assert!(edge_features(&g, &[0], &FeatureConfig { m: 3, ..cfg }, &alphabet(1, 1)).is_err());
    }

    #[test]
    fn recomputation_is_bit_identical() {
        let g = star(5);
        let cfg = FeatureConfig { m: 2, ..Default::default() };
        let a = edge_features(&g, &[1, 3], &cfg, &alphabet(1, 1)).unwrap();
        let b = edge_features(&g, &[1, 3], &cfg, &alphabet(1, 1)).unwrap();
        assert_eq!(a, b);
    }
}
