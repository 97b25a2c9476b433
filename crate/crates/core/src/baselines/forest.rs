//! Bagged CART classifiers: bootstrap samples, Gini impurity, `√d`
//! candidate features per split, trees grown until leaves are pure.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use super::{mode, query_rows, training_rows, Imputer, Method, MethodSettings};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelAlphabet};
use crate::seed::{Rng, Seed};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_split_on(x: &Array2<f64>, y: &[usize], idx: &mut [usize], feature: usize, classes: usize) -> Option<BestSplit> {
    idx.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
    let n = idx.len();
    let mut left = vec![0usize; classes];
    let mut right = vec![0usize; classes];
    for &i in idx.iter() {
        right[y[i]] += 1;
    }
    let mut best: Option<BestSplit> = None;
    for pos in 0..n - 1 {
        let c = y[idx[pos]];
        left[c] += 1;
        right[c] -= 1;
        let (a, b) = (x[[idx[pos], feature]], x[[idx[pos + 1], feature]]);
        if a == b {
            continue;
        }
        let nl = pos + 1;
        let nr = n - nl;
        let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
        if best.as_ref().is_none_or(|s| impurity < s.impurity) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(BestSplit {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}

impl DecisionTree {
    /// Grows a tree on the rows `sample` of `x` (repeats allowed).
    pub fn fit(x: &Array2<f64>, y: &[usize], sample: Vec<usize>, classes: usize, max_features: usize, rng: &mut Rng) -> Self {
        let mut nodes = Vec::new();
        // (node slot, rows)
        let mut stack = vec![(0usize, sample)];
        nodes.push(Node::Leaf(0));
        let d = x.ncols();
        let mut features: Vec<usize> = (0..d).collect();
        while let Some((slot, mut rows)) = stack.pop() {
            let mut counts = vec![0usize; classes];
            for &i in &rows {
                counts[y[i]] += 1;
            }
            let majority = mode(&counts).unwrap_or(0);
            if counts.iter().filter(|&&c| c > 0).count() <= 1 {
                nodes[slot] = Node::Leaf(majority);
                continue;
            }
            features.shuffle(rng);
            let mut best: Option<BestSplit> = None;
            for (tried, &f) in features.iter().enumerate() {
                // keep looking past max_features until some valid split exists
                if tried >= max_features && best.is_some() {
                    break;
                }
                if let Some(s) = best_split_on(x, y, &mut rows, f, classes) {
                    if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                        best = Some(s);
                    }
                }
            }
            let Some(split) = best else {
                nodes[slot] = Node::Leaf(majority);
                continue;
            };
            let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
                rows.into_iter().partition(|&i| x[[i, split.feature]] <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf(0));
            let right = nodes.len();
            nodes.push(Node::Leaf(0));
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, r_rows));
            stack.push((left, l_rows));
        }
        DecisionTree { nodes }
    }

    pub fn predict(&self, row: ArrayView1<f64>) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    classes: usize,
}

impl RandomForest {
    pub fn fit(x: &Array2<f64>, y: &[usize], classes: usize, n_trees: usize, seed: Seed) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || y.len() != n {
            return Err(Error::Data(format!("random forest needs rows with labels, got {n} rows and {} labels", y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
            return Err(Error::Data(format!("label {bad} outside {classes} classes")));
        }
        let max_features = ((x.ncols() as f64).sqrt().floor() as usize).max(1);
        let trees = (0..n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.child(t as u64).rng();
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, sample, classes, max_features, &mut rng)
            })
            .collect();
        Ok(RandomForest { trees, classes })
    }

    pub fn votes(&self, row: ArrayView1<f64>) -> Vec<usize> {
        let mut votes = vec![0; self.classes];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        votes
    }

    /// Majority vote, lowest class on ties.
    pub fn predict(&self, row: ArrayView1<f64>) -> usize {
        mode(&self.votes(row)).unwrap_or(0)
    }
}

pub(crate) struct ForestImputer {
    settings: MethodSettings,
    alphabet: Option<LabelAlphabet>,
    forest: Option<RandomForest>,
}

impl ForestImputer {
    pub(crate) fn new(settings: MethodSettings) -> Self {
        ForestImputer {
            settings,
            alphabet: None,
            forest: None,
        }
    }
}

impl Imputer for ForestImputer {
    fn method(&self) -> Method {
        Method::RandomForest
    }

    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, seed: Seed) -> Result<()> {
        let (x, y) = training_rows(train, alphabet, &self.settings, seed.named("rows"))?;
        self.forest = Some(RandomForest::fit(&x, &y, alphabet.edge_classes, self.settings.n_trees, seed.named("forest"))?);
        self.alphabet = Some(*alphabet);
        Ok(())
    }

    fn impute(&self, g: &Graph, _seed: Seed) -> Result<Vec<usize>> {
        let (Some(forest), Some(alphabet)) = (&self.forest, &self.alphabet) else {
            return Err(Error::Data("random forest imputer used before fit".into()));
        };
        let rows = query_rows(g, alphabet, &self.settings)?;
        Ok(rows.rows().into_iter().map(|r| forest.predict(r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn single_class_data() {
        let x = arr2(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]);
        let rf = RandomForest::fit(&x, &[1, 1, 1], 3, 10, Seed(0)).unwrap();
        assert_eq!(rf.predict(ndarray::arr1(&[9.0, 9.0]).view()), 1);
    }

    #[test]
    fn axis_separable_fixture() {
        // label = 1 iff deg_u > 2; a single split at deg_u = 2.5 separates it,
        // so every grown tree is consistent with the training rows
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for du in 1..=5 {
            for dv in 1..=5 {
                for noise in 0..3 {
                    rows.extend([du as f64, dv as f64, noise as f64 * 0.1]);
                    y.push(usize::from(du > 2));
                }
            }
        }
        let x = Array2::from_shape_vec((y.len(), 3), rows).unwrap();
        let rf = RandomForest::fit(&x, &y, 2, 25, Seed(4)).unwrap();
        for (r, &t) in x.rows().into_iter().zip(&y) {
            assert_eq!(rf.predict(r), t);
        }
        // a lone tree fit on all rows is exact as well
        let tree = DecisionTree::fit(&x, &y, (0..y.len()).collect(), 2, 3, &mut Seed(1).rng());
        assert!(x.rows().into_iter().zip(&y).all(|(r, &t)| tree.predict(r) == t));
    }

    #[test]
    fn seeded_determinism() {
        let x = Array2::from_shape_fn((40, 4), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<usize> = (0..40).map(|i| i * 5 % 3).collect();
        let a = RandomForest::fit(&x, &y, 3, 15, Seed(2)).unwrap();
        let b = RandomForest::fit(&x, &y, 3, 15, Seed(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_on_empty_data() {
        let x = Array2::<f64>::zeros((0, 2));
        assert!(RandomForest::fit(&x, &[], 2, 5, Seed(0)).is_err());
    }

    #[test]
    fn constant_features_give_a_majority_leaf() {
        let x = arr2(&[[1.0], [1.0], [1.0]]);
        let tree = DecisionTree::fit(&x, &[0, 1, 1], vec![0, 1, 2], 2, 1, &mut Seed(0).rng());
        assert_eq!(tree.node_count(), 1);
        assert_eq!(tree.predict(ndarray::arr1(&[1.0]).view()), 1);
    }
}
