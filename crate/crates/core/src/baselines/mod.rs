//! Comparison imputers behind one interface.
//!
//! [`Imputer::impute`] receives a graph whose labels are present on the
//! context edges only, so no method can read a held-out label.

mod forest;
mod nn;
mod simple;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnp::{GnpConfig, GnpModel, TrainConfig};
use crate::graph::{Graph, LabelAlphabet};
use crate::seed::Seed;

pub use forest::{DecisionTree, RandomForest};
pub use nn::{matched_hidden_width, NnImputer};
pub use simple::{CommonImputer, CommonNeighborImputer, RandomImputer};

pub trait Imputer: Send + Sync {
    fn method(&self) -> Method;

    /// Trains on fully labeled graphs.
    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, seed: Seed) -> Result<()>;

    /// One label per unlabeled edge of `g`, in edge order.
    fn impute(&self, g: &Graph, seed: Seed) -> Result<Vec<usize>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gnp,
    Random,
    Common,
    CommonNeighbor,
    RandomForest,
    NeuralNet,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gnp,
        Method::Random,
        Method::Common,
        Method::CommonNeighbor,
        Method::RandomForest,
        Method::NeuralNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gnp => "gnp",
            Method::Random => "random",
            Method::Common => "common",
            Method::CommonNeighbor => "common_neighbor",
            Method::RandomForest => "random_forest",
            Method::NeuralNet => "neural_net",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

/// Everything the methods need beyond the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodSettings {
    pub gnp: GnpConfig,
    pub p0: f64,
    pub p1: f64,
    pub epochs: usize,
    pub shuffle: bool,
    pub n_trees: usize,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            gnp: GnpConfig::default(),
            p0: 0.4,
            p1: 0.9,
            epochs: 10,
            shuffle: true,
            n_trees: 100,
        }
    }
}

/// Number of GNP parameters for a configuration, without building one.
pub fn gnp_param_count(cfg: &GnpConfig, alphabet: &LabelAlphabet) -> usize {
    let h = cfg.hidden_width;
    let mlp = |i: usize, o: usize| i * h + h + 2 * (h * h + h) + h * o + o;
    mlp(cfg.features.context_width(alphabet), cfg.r_width)
        + mlp(cfg.r_width + cfg.features.target_width(alphabet), alphabet.edge_classes)
}

pub struct GnpImputer {
    settings: MethodSettings,
    model: Option<GnpModel>,
}

impl GnpImputer {
    pub fn new(settings: MethodSettings) -> Self {
        GnpImputer { settings, model: None }
    }

    pub fn model(&self) -> Option<&GnpModel> {
        self.model.as_ref()
    }
}

impl Imputer for GnpImputer {
    fn method(&self) -> Method {
        Method::Gnp
    }

    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, seed: Seed) -> Result<()> {
        let mut model = GnpModel::new(self.settings.gnp, *alphabet, seed.named("init"))?;
        model.train(
            train,
            &TrainConfig {
                p0: self.settings.p0,
                p1: self.settings.p1,
                epochs: self.settings.epochs,
                seed: seed.named("train").0,
                shuffle: self.settings.shuffle,
            },
        )?;
        self.model = Some(model);
        Ok(())
    }

    fn impute(&self, g: &Graph, _seed: Seed) -> Result<Vec<usize>> {
        let model = self.model.as_ref().ok_or_else(|| Error::Data("gnp imputer used before fit".into()))?;
        Ok(model.impute(g)?.labels)
    }
}

pub fn make_imputer(method: Method, settings: &MethodSettings) -> Box<dyn Imputer> {
    match method {
        Method::Gnp => Box::new(GnpImputer::new(*settings)),
        Method::Random => Box::new(RandomImputer::default()),
        Method::Common => Box::new(CommonImputer::default()),
        Method::CommonNeighbor => Box::new(CommonNeighborImputer::default()),
        Method::RandomForest => Box::new(forest::ForestImputer::new(*settings)),
        Method::NeuralNet => Box::new(NnImputer::new(*settings)),
    }
}

/// Most frequent class in `counts`, lowest index on ties; `None` if all zero.
pub(crate) fn mode(counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 && best.is_none_or(|b| n > counts[b]) {
            best = Some(c);
        }
    }
    best
}

/// Label-free feature rows for one sampled context per graph, pooled over
/// all graphs, with the true label of every row.
pub(crate) fn training_rows(
    train: &[Graph],
    alphabet: &LabelAlphabet,
    settings: &MethodSettings,
    seed: Seed,
) -> Result<(ndarray::Array2<f64>, Vec<usize>)> {
    use rayon::prelude::*;
    let per_graph: Vec<(ndarray::Array2<f64>, Vec<usize>)> = train
        .par_iter()
        .enumerate()
        .filter(|(_, g)| g.edge_count() > 0)
        .map(|(i, g)| {
            let mut rng = seed.child(i as u64).rng();
            let (_, ctx) = crate::gnp::sample_context(g, settings.p0, settings.p1, &mut rng);
            let f = crate::features::edge_features(g, &ctx, &settings.gnp.features, alphabet)?;
            Ok((f.all, crate::gnp::true_labels(g)?))
        })
        .collect::<Result<_>>()?;
    let width = settings.gnp.features.target_width(alphabet);
    let rows: usize = per_graph.iter().map(|(x, _)| x.nrows()).sum();
    let mut x = ndarray::Array2::zeros((rows, width));
    let mut y = Vec::with_capacity(rows);
    let mut at = 0;
    for (xg, yg) in per_graph {
        x.slice_mut(ndarray::s![at..at + xg.nrows(), ..]).assign(&xg);
        at += xg.nrows();
        y.extend(yg);
    }
    Ok((x, y))
}

/// Label-free rows of the unlabeled edges of `g`, using its labeled edges
/// as the context subgraph.
pub(crate) fn query_rows(g: &Graph, alphabet: &LabelAlphabet, settings: &MethodSettings) -> Result<ndarray::Array2<f64>> {
    let f = crate::features::edge_features(g, &g.labeled_edges(), &settings.gnp.features, alphabet)?;
    Ok(f.all.select(ndarray::Axis(0), &g.unlabeled_edges()))
}
