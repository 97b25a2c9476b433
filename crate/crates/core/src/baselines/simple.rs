use rand::Rng as _;

use super::{mode, Imputer, Method};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelAlphabet};
use crate::seed::Seed;

fn label_counts<'a>(graphs: impl IntoIterator<Item = &'a Graph>, classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for g in graphs {
        for l in g.edges().iter().filter_map(|e| e.label) {
            if l < classes {
                counts[l] += 1;
            }
        }
    }
    counts
}

/// Uniformly random label for every unknown edge.
#[derive(Clone, Debug, Default)]
pub struct RandomImputer {
    classes: usize,
}

impl Imputer for RandomImputer {
    fn method(&self) -> Method {
        Method::Random
    }

    fn fit(&mut self, _train: &[Graph], alphabet: &LabelAlphabet, _seed: Seed) -> Result<()> {
        self.classes = alphabet.edge_classes.max(1);
        Ok(())
    }

    fn impute(&self, g: &Graph, seed: Seed) -> Result<Vec<usize>> {
        let mut rng = seed.named("random").rng();
        let k = self.classes.max(1);
        Ok(g.unlabeled_edges().iter().map(|_| rng.random_range(0..k)).collect())
    }
}

/// Globally most common training label.
#[derive(Clone, Debug, Default)]
pub struct CommonImputer {
    label: Option<usize>,
}

impl Imputer for CommonImputer {
    fn method(&self) -> Method {
        Method::Common
    }

    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, _seed: Seed) -> Result<()> {
        let counts = label_counts(train, alphabet.edge_classes);
        self.label = Some(mode(&counts).ok_or_else(|| Error::Data("no labeled training edges".into()))?);
        Ok(())
    }

    fn impute(&self, g: &Graph, _seed: Seed) -> Result<Vec<usize>> {
        let label = self.label.ok_or_else(|| Error::Data("common imputer used before fit".into()))?;
        Ok(vec![label; g.unlabeled_edges().len()])
    }
}

/// Most common label among observed edges touching either endpoint.
/// Falls back to the graph's most common observed label, then to the
/// training-set mode.
#[derive(Clone, Debug, Default)]
pub struct CommonNeighborImputer {
    classes: usize,
    global: Option<usize>,
}

impl Imputer for CommonNeighborImputer {
    fn method(&self) -> Method {
        Method::CommonNeighbor
    }

    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, _seed: Seed) -> Result<()> {
        self.classes = alphabet.edge_classes;
        self.global = mode(&label_counts(train, alphabet.edge_classes));
        Ok(())
    }

    fn impute(&self, g: &Graph, _seed: Seed) -> Result<Vec<usize>> {
        let k = self.classes;
        let mut incident = vec![vec![0usize; k]; g.node_count()];
        let mut local = vec![0usize; k];
        for e in g.edges() {
            if let Some(l) = e.label.filter(|&l| l < k) {
                incident[e.u][l] += 1;
                incident[e.v][l] += 1;
                local[l] += 1;
            }
        }
        let graph_mode = mode(&local);
        g.unlabeled_edges()
            .into_iter()
            .map(|idx| {
                let e = g.edges()[idx];
                let counts: Vec<usize> = (0..k).map(|c| incident[e.u][c] + incident[e.v][c]).collect();
                mode(&counts)
                    .or(graph_mode)
                    .or(self.global)
                    .ok_or_else(|| Error::Data("common-neighbor imputer used before fit".into()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::star;
    use crate::graph::{Edge, NodeAttr};

    fn alphabet(k: usize) -> LabelAlphabet {
        LabelAlphabet {
            edge_classes: k,
            node_classes: 1,
        }
    }

    fn labeled(n: usize, edges: &[(usize, usize, Option<usize>)]) -> Graph {
        Graph::new(
            vec![NodeAttr { label: 0 }; n],
            edges.iter().map(|&(u, v, l)| Edge::new(u, v, l)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn random_single_class_and_determinism() {
        let g = star(6).keep_labels(&[0]).unwrap();
        let mut r = RandomImputer::default();
        r.fit(&[], &alphabet(1), Seed(0)).unwrap();
        assert_eq!(r.impute(&g, Seed(1)).unwrap(), vec![0; 5]);

        r.fit(&[], &alphabet(4), Seed(0)).unwrap();
        assert_eq!(r.impute(&g, Seed(9)).unwrap(), r.impute(&g, Seed(9)).unwrap());
    }

    #[test]
    fn random_accuracy_is_one_over_k() {
        // 20 000 draws, k = 4: binomial sd = sqrt(n p (1-p)) ~ 61
        let pairs: Vec<_> = (1..=20_000).map(|i| (0, i, None)).collect();
        let g = labeled(20_001, &pairs);
        let mut r = RandomImputer::default();
        r.fit(&[], &alphabet(4), Seed(0)).unwrap();
        let hits = r.impute(&g, Seed(3)).unwrap().iter().filter(|&&l| l == 2).count() as f64;
        let (n, p) = (20_000.0f64, 0.25);
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((hits - n * p).abs() < 3.0 * sd, "{hits}");
    }

    #[test]
    fn common_majority_tie_and_single_class() {
        let train = [labeled(4, &[(0, 1, Some(1)), (1, 2, Some(1)), (2, 3, Some(0))])];
        let mut c = CommonImputer::default();
        c.fit(&train, &alphabet(2), Seed(0)).unwrap();
        let g = labeled(3, &[(0, 1, Some(0)), (1, 2, None), (0, 2, None)]);
        assert_eq!(c.impute(&g, Seed(0)).unwrap(), vec![1, 1]);

        let tie = [labeled(3, &[(0, 1, Some(1)), (1, 2, Some(0))])];
        c.fit(&tie, &alphabet(2), Seed(0)).unwrap();
        assert_eq!(c.impute(&g, Seed(0)).unwrap(), vec![0, 0]);

        let single = [labeled(3, &[(0, 1, Some(2)), (1, 2, Some(2))])];
        c.fit(&single, &alphabet(3), Seed(0)).unwrap();
        assert_eq!(c.impute(&g, Seed(0)).unwrap(), vec![2, 2]);

        assert!(c.fit(&[], &alphabet(2), Seed(0)).is_err());
    }

    #[test]
    fn common_neighbor_rules() {
        let mut cn = CommonNeighborImputer::default();
        let train = [labeled(2, &[(0, 1, Some(0))])];
        cn.fit(&train, &alphabet(3), Seed(0)).unwrap();

        // star spokes labeled 2, one unknown spoke
        let g = labeled(5, &[(0, 1, Some(2)), (0, 2, Some(2)), (0, 3, Some(2)), (0, 4, None)]);
        assert_eq!(cn.impute(&g, Seed(0)).unwrap(), vec![2]);

        // edge (3,4) touches no labeled edge -> graph-local mode (1)
        let g = labeled(5, &[(0, 1, Some(1)), (1, 2, Some(1)), (0, 2, Some(2)), (3, 4, None)]);
        assert_eq!(cn.impute(&g, Seed(0)).unwrap(), vec![1]);

        // local tie between 1 and 2 -> 1
        let g = labeled(4, &[(0, 1, Some(2)), (0, 2, None), (2, 3, Some(1))]);
        assert_eq!(cn.impute(&g, Seed(0)).unwrap(), vec![1]);

        // nothing labeled anywhere -> global training mode
        let g = labeled(2, &[(0, 1, None)]);
        assert_eq!(cn.impute(&g, Seed(0)).unwrap(), vec![0]);
    }
}
