//! The Graph Neural Process: a context encoder, mean aggregation and a
//! conditional decoder producing a label distribution for every edge.

use std::fs;
use std::path::Path;

use log::warn;
use ndarray::{s, Array1, Array2, Axis};
use rand::Rng as _;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::choose_context;
use crate::error::{Error, Result};
use crate::features::{edge_features, EdgeFeatures, FeatureConfig};
use crate::graph::{Graph, LabelAlphabet};
use crate::neural::{softmax, softmax_cross_entropy, AdamState, Mlp, MlpRecord};
use crate::seed::{Rng, Seed};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnpConfig {
    pub features: FeatureConfig,
    /// Width of the aggregated context representation.
    pub r_width: usize,
    pub hidden_width: usize,
}

impl Default for GnpConfig {
    fn default() -> Self {
        GnpConfig {
            features: FeatureConfig::default(),
            r_width: 256,
            hidden_width: 256,
        }
    }
}

/// Per-edge categorical distributions, one row per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePosterior(pub Array2<f64>);

impl EdgePosterior {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i).to_slice().expect("standard layout")
    }

    /// Most probable class per row, lowest index on ties.
    pub fn argmax(&self) -> Vec<usize> {
        self.0.rows().into_iter().map(|r| argmax(r.as_slice().expect("row"))).collect()
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Posterior over the unlabeled edges of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Imputation {
    /// Edge indices that were imputed.
    pub edges: Vec<usize>,
    /// Row `i` is the distribution for `edges[i]`.
    pub posterior: EdgePosterior,
    pub labels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnpModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub config: GnpConfig,
    pub alphabet: LabelAlphabet,
    /// Context fraction range the model was trained with.
    pub context_range: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub p0: f64,
    pub p1: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Visit graphs in a seeded shuffled order each epoch; `false` keeps
    /// input order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            p0: 0.4,
            p1: 0.9,
            epochs: 10,
            seed: 0,
            shuffle: true,
        }
    }
}

pub fn validate_context_range(p0: f64, p1: f64) -> Result<()> {
    if !(p0 > 0.0 && p1 <= 1.0 && p0 <= p1) {
        return Err(Error::InvalidParameter(format!(
            "context fractions need 0 < p0 <= p1 <= 1, got p0 = {p0}, p1 = {p1}"
        )));
    }
    Ok(())
}

pub(crate) fn sample_fraction(p0: f64, p1: f64, rng: &mut Rng) -> f64 {
    if p0 == p1 {
        p0
    } else {
        rng.random_range(p0..=p1)
    }
}

/// Draws a context fraction in `[p0, p1]` and then the context edges.
pub fn sample_context(g: &Graph, p0: f64, p1: f64, rng: &mut Rng) -> (f64, Vec<usize>) {
    let p = sample_fraction(p0, p1, rng);
    (p, choose_context(g.edge_count(), p, rng))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean per-graph loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub skipped_graphs: usize,
}

pub(crate) fn true_labels(g: &Graph) -> Result<Vec<usize>> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            e.label
                .ok_or_else(|| Error::Data(format!("training graph edge {k} has no label")))
        })
        .collect()
}

impl GnpModel {
    pub fn new(config: GnpConfig, alphabet: LabelAlphabet, seed: Seed) -> Result<Self> {
        config.features.validate()?;
        if alphabet.edge_classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 edge classes, got {}",
                alphabet.edge_classes
            )));
        }
        if config.r_width == 0 || config.hidden_width == 0 {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        let h = config.hidden_width;
        let cw = config.features.context_width(&alphabet);
        let tw = config.features.target_width(&alphabet);
        Ok(GnpModel {
            encoder: Mlp::new([cw, h, h, h, config.r_width], seed.named("encoder")),
            decoder: Mlp::new([config.r_width + tw, h, h, h, alphabet.edge_classes], seed.named("decoder")),
            config,
            alphabet,
            context_range: (0.4, 0.9),
        })
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    pub fn features(&self, g: &Graph, context_edges: &[usize]) -> Result<EdgeFeatures> {
        edge_features(g, context_edges, &self.config.features, &self.alphabet)
    }

    /// Mean of the encoder outputs over the context rows.
    pub fn encode_context(&self, context_rows: &Array2<f64>) -> Result<Array1<f64>> {
        if context_rows.nrows() == 0 {
            return Err(Error::Data("cannot encode an empty context".into()));
        }
        let enc = self.encoder.predict(context_rows)?;
        Ok(enc.mean_axis(Axis(0)).expect("non-empty"))
    }

    fn decoder_input(&self, r_c: &Array1<f64>, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if r_c.len() != self.config.r_width {
            return Err(Error::Shape(format!(
                "context vector has width {}, decoder expects {}",
                r_c.len(),
                self.config.r_width
            )));
        }
        let r = r_c.len();
        let mut x = Array2::<f64>::zeros((rows.nrows(), r + rows.ncols()));
        x.slice_mut(s![.., ..r]).assign(&r_c.broadcast((rows.nrows(), r)).expect("broadcast"));
        x.slice_mut(s![.., r..]).assign(rows);
        Ok(x)
    }

    /// Softmax of the decoder output for every row, conditioned on `r_c`.
    pub fn decode_targets(&self, r_c: &Array1<f64>, rows: &Array2<f64>) -> Result<EdgePosterior> {
        let logits = self.decoder.predict(&self.decoder_input(r_c, rows)?)?;
        let mut probs = Array2::zeros(logits.dim());
        for (mut dst, src) in probs.rows_mut().into_iter().zip(logits.rows()) {
            let p = softmax(src.as_slice().expect("row"));
            dst.iter_mut().zip(p).for_each(|(d, v)| *d = v);
        }
        Ok(EdgePosterior(probs))
    }

    /// Posterior over every edge of `g` given the labels of `context_edges`.
    pub fn posterior(&self, g: &Graph, context_edges: &[usize]) -> Result<EdgePosterior> {
        let f = self.features(g, context_edges)?;
        let r_c = self.encode_context(&f.context)?;
        self.decode_targets(&r_c, &f.all)
    }

    /// Uses every labeled edge as context and imputes the rest.
    pub fn impute(&self, g: &Graph) -> Result<Imputation> {
        let context = g.labeled_edges();
        if context.is_empty() {
            return Err(Error::Data("graph has no labeled edges to use as context".into()));
        }
        let targets = g.unlabeled_edges();
        let full = self.posterior(g, &context)?;
        let mut probs = Array2::zeros((targets.len(), self.alphabet.edge_classes));
        for (i, &k) in targets.iter().enumerate() {
            probs.row_mut(i).assign(&full.0.row(k));
        }
        let posterior = EdgePosterior(probs);
        Ok(Imputation {
            labels: posterior.argmax(),
            edges: targets,
            posterior,
        })
    }

    /// Mean cross-entropy over all edges and its gradients (encoder, decoder).
    pub fn loss_and_grads(&self, f: &EdgeFeatures, labels: &[usize]) -> Result<(f64, Mlp, Mlp)> {
        let n_edges = f.all.nrows();
        let n_ctx = f.context.nrows();
        if labels.len() != n_edges {
            return Err(Error::Shape(format!("{} labels for {n_edges} edges", labels.len())));
        }
        if n_ctx == 0 || n_edges == 0 {
            return Err(Error::Data("loss needs at least one context and one target edge".into()));
        }
        let (enc_out, enc_cache) = self.encoder.forward(&f.context)?;
        let r_c = enc_out.mean_axis(Axis(0)).expect("non-empty");
        let x = self.decoder_input(&r_c, &f.all)?;
        let (logits, dec_cache) = self.decoder.forward(&x)?;

        let k = self.alphabet.edge_classes;
        let mut loss = 0.0;
        let mut up = Array2::<f64>::zeros((n_edges, k));
        for (i, &t) in labels.iter().enumerate() {
            let (l, g) = softmax_cross_entropy(logits.row(i).as_slice().expect("row"), t)?;
            loss += l;
            for (c, gc) in g.into_iter().enumerate() {
                up[[i, c]] = gc / n_edges as f64;
            }
        }
        loss /= n_edges as f64;

        let (dec_grads, dx) = self.decoder.backward(&dec_cache, &up)?;
        let dr = dx.slice(s![.., ..self.config.r_width]).sum_axis(Axis(0)) / n_ctx as f64;
        let d_enc = dr.broadcast((n_ctx, self.config.r_width)).expect("broadcast").to_owned();
        let (enc_grads, _) = self.encoder.backward(&enc_cache, &d_enc)?;
        Ok((loss, enc_grads, dec_grads))
    }

    fn optimizer(&self) -> AdamState {
        let lens: Vec<usize> = self
            .encoder
            .tensors()
            .into_iter()
            .chain(self.decoder.tensors())
            .map(<[f64]>::len)
            .collect();
        AdamState::new(&lens)
    }

    fn apply(&mut self, adam: &mut AdamState, enc: &Mlp, dec: &Mlp) -> Result<()> {
        let grads: Vec<&[f64]> = enc.tensors().into_iter().chain(dec.tensors()).collect();
        let mut params: Vec<&mut [f64]> = self
            .encoder
            .tensors_mut()
            .into_iter()
            .chain(self.decoder.tensors_mut())
            .collect();
        adam.step(&mut params, &grads)
    }

    /// Episodic training: for every graph, draw a context fraction, sample
    /// context edges, build features from the context Laplacian, and take
    /// one Adam step on the mean cross-entropy over all edges.
    pub fn train(&mut self, graphs: &[Graph], cfg: &TrainConfig) -> Result<TrainReport> {
        validate_context_range(cfg.p0, cfg.p1)?;
        self.context_range = (cfg.p0, cfg.p1);
        let labels: Vec<Vec<usize>> = graphs.iter().map(true_labels).collect::<Result<_>>()?;
        let usable: Vec<usize> = (0..graphs.len()).filter(|&i| graphs[i].edge_count() > 0).collect();
        let skipped = graphs.len() - usable.len();
        if skipped > 0 {
            warn!("skipping {skipped} graph(s) without edges");
        }

        let root = Seed(cfg.seed).named("train");
        let mut adam = self.optimizer();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let epoch_seed = root.child(epoch as u64);
            let mut order = usable.clone();
            if cfg.shuffle {
                order.shuffle(&mut epoch_seed.named("order").rng());
            }
            // contexts depend only on (seed, epoch, graph), so features can be built ahead in parallel
            let feats: Vec<EdgeFeatures> = order
                .par_iter()
                .map(|&i| {
                    let mut rng = epoch_seed.child(i as u64).rng();
                    let (_, ctx) = sample_context(&graphs[i], cfg.p0, cfg.p1, &mut rng);
                    self.features(&graphs[i], &ctx)
                })
                .collect::<Result<_>>()?;

            let mut total = 0.0;
            for (&i, f) in order.iter().zip(&feats) {
                let (loss, enc, dec) = self.loss_and_grads(f, &labels[i])?;
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!("loss became {loss} at epoch {epoch}, graph {i}")));
                }
                self.apply(&mut adam, &enc, &dec).map_err(|e| match e {
                    Error::Numerical(msg) => Error::Numerical(format!("epoch {epoch}, graph {i}: {msg}")),
                    other => other,
                })?;
                total += loss;
            }
            epoch_losses.push(if order.is_empty() { 0.0 } else { total / order.len() as f64 });
        }
        if !(self.encoder.is_finite() && self.decoder.is_finite()) {
            return Err(Error::Numerical("non-finite parameters after training".into()));
        }
        Ok(TrainReport {
            epoch_losses,
            skipped_graphs: skipped,
        })
    }

    pub fn to_checkpoint(&self) -> GnpCheckpoint {
        GnpCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: "gnp".into(),
            p0: self.context_range.0,
            p1: self.context_range.1,
            config: self.config,
            alphabet: self.alphabet,
            encoder: self.encoder.to_record(),
            decoder: self.decoder.to_record(),
        }
    }

    pub fn from_checkpoint(ck: &GnpCheckpoint) -> Result<Self> {
        if ck.format_version != CHECKPOINT_FORMAT_VERSION || ck.kind != "gnp" {
            return Err(Error::Data(format!(
                "unsupported checkpoint (kind {:?}, format_version {})",
                ck.kind, ck.format_version
            )));
        }
        let encoder = Mlp::from_record(&ck.encoder)?;
        let decoder = Mlp::from_record(&ck.decoder)?;
        let cw = ck.config.features.context_width(&ck.alphabet);
        let tw = ck.config.features.target_width(&ck.alphabet);
        if encoder.input_width() != cw
            || encoder.output_width() != ck.config.r_width
            || decoder.input_width() != ck.config.r_width + tw
            || decoder.output_width() != ck.alphabet.edge_classes
        {
            return Err(Error::Shape("checkpoint layer widths do not match its feature config".into()));
        }
        Ok(GnpModel {
            encoder,
            decoder,
            config: ck.config,
            alphabet: ck.alphabet,
            context_range: (ck.p0, ck.p1),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(&self.to_checkpoint())?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

/// On-disk model: header (context range, feature config, alphabet) plus
/// both networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnpCheckpoint {
    pub format_version: u32,
    pub kind: String,
    pub p0: f64,
    pub p1: f64,
    pub config: GnpConfig,
    pub alphabet: LabelAlphabet,
    pub encoder: MlpRecord,
    pub decoder: MlpRecord,
}
