//! Plain MLP classifier on label-free edge rows, sized to the GNP's
//! parameter budget and trained the same way (one Adam step per graph).

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{gnp_param_count, query_rows, Imputer, Method, MethodSettings};
use crate::error::{Error, Result};
use crate::features::edge_features;
use crate::gnp::{argmax, sample_context, true_labels};
use crate::graph::{Graph, LabelAlphabet};
use crate::neural::{softmax_cross_entropy, AdamState, Mlp};
use crate::seed::Seed;

/// Hidden width `h` for a 4-layer `[input, h, h, h, output]` MLP whose
/// parameter count is closest to `budget`.
pub fn matched_hidden_width(input: usize, output: usize, budget: usize) -> usize {
    let count = |h: usize| 2 * h * h + h * (input + output + 3) + output;
    // 2h^2 + b h + (output - budget) = 0
    let b = (input + output + 3) as f64;
    let c = output as f64 - budget as f64;
    let root = ((-b + (b * b - 8.0 * c).max(0.0).sqrt()) / 4.0).max(1.0) as usize;
    (root.saturating_sub(2).max(1)..=root + 2)
        .min_by_key(|&h| count(h).abs_diff(budget))
        .expect("non-empty range")
}

pub struct NnImputer {
    settings: MethodSettings,
    alphabet: Option<LabelAlphabet>,
    net: Option<Mlp>,
}

impl NnImputer {
    pub fn new(settings: MethodSettings) -> Self {
        NnImputer {
            settings,
            alphabet: None,
            net: None,
        }
    }

    pub fn network(&self) -> Option<&Mlp> {
        self.net.as_ref()
    }

    pub fn build(settings: &MethodSettings, alphabet: &LabelAlphabet, seed: Seed) -> Result<Mlp> {
        let input = settings.gnp.features.target_width(alphabet);
        let k = alphabet.edge_classes;
        let budget = gnp_param_count(&settings.gnp, alphabet);
        let h = matched_hidden_width(input, k, budget);
        let net = Mlp::new([input, h, h, h, k], seed);
        let gap = net.param_count().abs_diff(budget) as f64 / budget as f64;
        if gap > 0.02 {
            return Err(Error::InvalidParameter(format!(
                "cannot match the GNP parameter budget {budget} within 2% (closest {})",
                net.param_count()
            )));
        }
        Ok(net)
    }
}

impl Imputer for NnImputer {
    fn method(&self) -> Method {
        Method::NeuralNet
    }

    fn fit(&mut self, train: &[Graph], alphabet: &LabelAlphabet, seed: Seed) -> Result<()> {
        let s = self.settings;
        let mut net = Self::build(&s, alphabet, seed.named("init"))?;
        let lens: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        let mut adam = AdamState::new(&lens);
        let labels: Vec<Vec<usize>> = train.iter().map(true_labels).collect::<Result<_>>()?;
        let usable: Vec<usize> = (0..train.len()).filter(|&i| train[i].edge_count() > 0).collect();
        let root = seed.named("train");

        for epoch in 0..s.epochs {
            let epoch_seed = root.child(epoch as u64);
            let mut order = usable.clone();
            if s.shuffle {
                order.shuffle(&mut epoch_seed.named("order").rng());
            }
            let rows: Vec<Array2<f64>> = order
                .par_iter()
                .map(|&i| {
                    let mut rng = epoch_seed.child(i as u64).rng();
                    let (_, ctx) = sample_context(&train[i], s.p0, s.p1, &mut rng);
                    Ok(edge_features(&train[i], &ctx, &s.gnp.features, alphabet)?.all)
                })
                .collect::<Result<_>>()?;
            for (&i, x) in order.iter().zip(&rows) {
                let (logits, cache) = net.forward(x)?;
                let n = x.nrows() as f64;
                let mut up = Array2::zeros(logits.dim());
                for (r, &t) in labels[i].iter().enumerate() {
                    let (_, g) = softmax_cross_entropy(logits.row(r).as_slice().expect("row"), t)?;
                    for (c, gc) in g.into_iter().enumerate() {
                        up[[r, c]] = gc / n;
                    }
                }
                let (grads, _) = net.backward(&cache, &up)?;
                let mut params = net.tensors_mut();
                adam.step(&mut params, &grads.tensors())?;
            }
        }
        self.net = Some(net);
        self.alphabet = Some(*alphabet);
        Ok(())
    }

    fn impute(&self, g: &Graph, _seed: Seed) -> Result<Vec<usize>> {
        let (Some(net), Some(alphabet)) = (&self.net, &self.alphabet) else {
            return Err(Error::Data("neural-net imputer used before fit".into()));
        };
        let rows = query_rows(g, alphabet, &self.settings)?;
        let logits = net.predict(&rows)?;
        Ok(logits.rows().into_iter().map(|r| argmax(r.as_slice().expect("row"))).collect())
    }
}
