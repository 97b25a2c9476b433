//! Weighted classification metrics, Welch's t-test and the multi-run
//! experiment driver.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::baselines::{make_imputer, Imputer, Method, MethodSettings};
use crate::dataset::{choose_context, split, SplitSpec, TuDataset};
use crate::error::{Error, Result};
use crate::gnp::sample_fraction;
use crate::seed::Seed;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// `k x k` counts, rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionTally {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionTally {
    pub fn new(classes: usize) -> Self {
        ConfusionTally {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::Shape(format!("{} counts for {classes} classes", counts.len())));
        }
        Ok(ConfusionTally { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    pub fn merge(&mut self, other: &ConfusionTally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl WeightedMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "weighted_precision",
            Metric::Recall => "weighted_recall",
            Metric::F1 => "weighted_f1",
        }
    }
}

/// Per-class precision, recall and F1 averaged with weights equal to the
/// true-class proportions. Zero denominators score 0.
pub fn weighted_metrics(tally: &ConfusionTally) -> Result<WeightedMetrics> {
    let total = tally.total();
    if total == 0 {
        return Err(Error::Data("cannot score an empty confusion tally".into()));
    }
    let k = tally.classes;
    let mut out = WeightedMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for c in 0..k {
        let tp = tally.get(c, c);
        let support: u64 = (0..k).map(|p| tally.get(c, p)).sum();
        let predicted: u64 = (0..k).map(|t| tally.get(t, c)).sum();
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let w = support as f64 / total as f64;
        out.precision += w * precision;
        out.recall += w * recall;
        out.f1 += w * f1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

pub const ALPHA: f64 = 0.05;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-tailed Welch test (unequal variances, Welch–Satterthwaite degrees
/// of freedom) at `α = 0.05`.
pub fn two_tailed_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "t-test needs at least 2 samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let df_pooled = na + nb - 2.0;
    let (t, df, p) = if se2 == 0.0 {
        if ma == mb {
            (0.0, df_pooled, 1.0)
        } else {
            let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
            (t, df_pooled, 0.0)
        }
    } else {
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(format!("t distribution: {e}")))?;
        let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
        (t, df, p)
    };
    Ok(TTest {
        t,
        df,
        p,
        significant: p < ALPHA,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Only edges whose label was hidden.
    TargetsOnly,
    /// Every edge: observed context labels count as given.
    AllEdges,
}

impl ScoringMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoringMode::TargetsOnly => "targets_only",
            ScoringMode::AllEdges => "all_edges",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub runs: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub settings: MethodSettings,
    pub scoring: ScoringMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            methods: Method::ALL.to_vec(),
            runs: 5,
            train_fraction: 0.8,
            seed: 0,
            settings: MethodSettings::default(),
            scoring: ScoringMode::TargetsOnly,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub seed: u64,
    pub targets_only: WeightedMetrics,
    pub all_edges: WeightedMetrics,
    pub scored_edges: u64,
}

impl RunMetrics {
    pub fn scored(&self, mode: ScoringMode) -> &WeightedMetrics {
        match mode {
            ScoringMode::TargetsOnly => &self.targets_only,
            ScoringMode::AllEdges => &self.all_edges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: Option<f64>,
    pub n: usize,
    pub p_vs_gnp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub runs: Vec<RunMetrics>,
}

impl MethodReport {
    pub fn samples(&self, mode: ScoringMode, metric: Metric) -> Vec<f64> {
        self.runs.iter().map(|r| r.scored(mode).get(metric)).collect()
    }

    pub fn mean(&self, mode: ScoringMode, metric: Metric) -> f64 {
        let s = self.samples(mode, metric);
        s.iter().sum::<f64>() / s.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub dataset: String,
    pub headline: ScoringMode,
    pub run_seeds: Vec<u64>,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn summary(&self, m: Method, mode: ScoringMode, metric: Metric) -> Option<MetricSummary> {
        let rep = self.method(m)?;
        let samples = rep.samples(mode, metric);
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let sd = (n >= 2).then(|| mean_var(&samples).1.sqrt());
        let p_vs_gnp = match self.method(Method::Gnp) {
            Some(gnp) if m != Method::Gnp => two_tailed_t_test(&samples, &gnp.samples(mode, metric)).ok().map(|t| t.p),
            _ => None,
        };
        Some(MetricSummary { mean, sd, n, p_vs_gnp })
    }

    /// `dataset,method,metric,mean,sd,n,p_vs_gnp`; headline metrics first,
    /// then the other scoring mode prefixed with its name.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,method,metric,mean,sd,n,p_vs_gnp\n");
        let other = match self.headline {
            ScoringMode::TargetsOnly => ScoringMode::AllEdges,
            ScoringMode::AllEdges => ScoringMode::TargetsOnly,
        };
        for (mode, prefix) in [(self.headline, String::new()), (other, format!("{}:", other.name()))] {
            for rep in &self.methods {
                for metric in Metric::ALL {
                    let s = self.summary(rep.method, mode, metric).expect("method present");
                    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{},{}{},{},{},{},{}",
                        self.dataset,
                        rep.method,
                        prefix,
                        metric.name(),
                        s.mean,
                        opt(s.sd),
                        s.n,
                        opt(s.p_vs_gnp)
                    );
                }
            }
        }
        out
    }
}

/// Weighted recall must equal plain accuracy.
fn check_accuracy_identity(t: &ConfusionTally) -> Result<()> {
    let recall = weighted_metrics(t)?.recall;
    let accuracy = t.correct() as f64 / t.total() as f64;
    if (recall - accuracy).abs() > 1e-12 {
        return Err(Error::Numerical(format!("weighted recall {recall} differs from accuracy {accuracy}")));
    }
    Ok(())
}

fn run_once(ds: &TuDataset, cfg: &ExperimentConfig, run: usize) -> Result<(u64, Vec<RunMetrics>)> {
    let run_seed = Seed(cfg.seed).named("run").child(run as u64);
    let (train, test) = split(
        ds,
        SplitSpec {
            train_fraction: cfg.train_fraction,
            seed: run_seed.named("split").0,
        },
    )?;
    let mut imputers: Vec<Box<dyn Imputer>> = cfg.methods.iter().map(|&m| make_imputer(m, &cfg.settings)).collect();
    for imp in imputers.iter_mut() {
        imp.fit(&train.graphs, &ds.alphabet, run_seed.named(imp.method().name()))?;
    }

    let k = ds.alphabet.edge_classes;
    let mut targets = vec![ConfusionTally::new(k); imputers.len()];
    let mut all = vec![ConfusionTally::new(k); imputers.len()];
    let (p0, p1) = (cfg.settings.p0, cfg.settings.p1);
    for (i, g) in test.graphs.iter().enumerate() {
        if g.edge_count() == 0 {
            continue;
        }
        let mut rng = run_seed.named("context").child(i as u64).rng();
        let p = sample_fraction(p0, p1, &mut rng);
        let ctx = choose_context(g.edge_count(), p, &mut rng);
        let masked = g.keep_labels(&ctx)?;
        let hidden = masked.unlabeled_edges();
        let truth: Vec<usize> = g
            .edges()
            .iter()
            .map(|e| e.label.ok_or_else(|| Error::Data("test graphs must be fully labeled".into())))
            .collect::<Result<_>>()?;
        for (m, imp) in imputers.iter().enumerate() {
            let pred = imp.impute(&masked, run_seed.named("impute").child(i as u64))?;
            if pred.len() != hidden.len() {
                return Err(Error::Shape(format!("{} returned {} labels for {} edges", imp.method(), pred.len(), hidden.len())));
            }
            for (&e, &l) in hidden.iter().zip(&pred) {
                targets[m].add(truth[e], l);
                all[m].add(truth[e], l);
            }
            for &e in &ctx {
                all[m].add(truth[e], truth[e]);
            }
        }
    }

    for t in targets.iter().chain(&all) {
        check_accuracy_identity(t)?;
    }
    let metrics = imputers
        .iter()
        .enumerate()
        .map(|(m, _)| {
            Ok(RunMetrics {
                run,
                seed: run_seed.0,
                targets_only: weighted_metrics(&targets[m])?,
                all_edges: weighted_metrics(&all[m])?,
                scored_edges: targets[m].total(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((run_seed.0, metrics))
}

/// Runs every method `cfg.runs` times on fresh seeded splits and contexts.
pub fn run_experiment(ds: &TuDataset, cfg: &ExperimentConfig) -> Result<EvalReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods selected".into()));
    }
    let per_run: Vec<(u64, Vec<RunMetrics>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_once(ds, cfg, r))
        .collect::<Result<_>>()?;
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| MethodReport {
            method,
            runs: per_run.iter().map(|(_, r)| r[m].clone()).collect(),
        })
        .collect();
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        dataset: ds.name.clone(),
        headline: cfg.scoring,
        run_seeds: per_run.iter().map(|(s, _)| *s).collect(),
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tally_of(k: usize, pairs: &[(usize, usize)]) -> ConfusionTally {
        let mut t = ConfusionTally::new(k);
        for &(a, b) in pairs {
            t.add(a, b);
        }
        t
    }

    #[test]
    fn perfect_predictions() {
        let t = tally_of(3, &[(0, 0), (1, 1), (2, 2), (2, 2)]);
        let m = weighted_metrics(&t).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let single = tally_of(5, &[(3, 3), (3, 3)]);
        let m = weighted_metrics(&single).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_computed_majority_fill() {
        // truths (1,1,1,0), all predicted 1
        let t = tally_of(2, &[(1, 1), (1, 1), (1, 1), (0, 1)]);
        let m = weighted_metrics(&t).unwrap();
        assert!((m.recall - 0.75).abs() < 1e-15);
        assert!((m.precision - 0.5625).abs() < 1e-15);
        assert!((m.f1 - 0.75 * 6.0 / 7.0).abs() < 1e-15);
        assert!((m.f1 - 0.642_857_142_857_142_8).abs() < 1e-12);
    }

    #[test]
    fn empty_tally_is_an_error() {
        assert!(weighted_metrics(&ConfusionTally::new(2)).is_err());
    }

    #[test]
    fn t_test_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let same = two_tailed_t_test(&a, &a).unwrap();
        assert_eq!((same.t, same.p), (0.0, 1.0));

        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let r = two_tailed_t_test(&a, &b).unwrap();
        assert!((r.t + 1.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        // two-sided p for t = 1 with 8 degrees of freedom (standard t table)
        assert!((r.p - 0.346_593_507).abs() < 1e-6, "{}", r.p);
        assert!(!r.significant);

        let lo: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let hi: Vec<f64> = lo.iter().map(|x| x + 100.0).collect();
        let r = two_tailed_t_test(&lo, &hi).unwrap();
        assert!(r.p < 1e-6 && r.significant);

        let flat = two_tailed_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(flat.p, 0.0);
        assert!(two_tailed_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn t_test_is_antisymmetric(a in proptest::collection::vec(-10.0f64..10.0, 2..8), b in proptest::collection::vec(-10.0f64..10.0, 2..8)) {
            let ab = two_tailed_t_test(&a, &b).unwrap();
            let ba = two_tailed_t_test(&b, &a).unwrap();
            prop_assert_eq!(ab.t, -ba.t);
            prop_assert_eq!(ab.p, ba.p);
        }

        #[test]
        fn recall_is_accuracy_and_order_free(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let t = tally_of(4, &pairs);
            let m = weighted_metrics(&t).unwrap();
            let acc = t.correct() as f64 / t.total() as f64;
            prop_assert!((m.recall - acc).abs() < 1e-12);
            let mut rev = pairs.clone();
            rev.reverse();
            prop_assert_eq!(weighted_metrics(&tally_of(4, &rev)).unwrap(), m);
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
