//! `gnp`: inspect TU datasets, train GNP models, benchmark imputers and
//! impute missing edge labels.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use gnp::baselines::Method;
use gnp::config::RunConfig;
use gnp::dataset::{load_tu_dataset, read_graph_records, sparsify, write_graph_records, TuDataset};
use gnp::eval::{run_experiment, ScoringMode};
use gnp::gnp::GnpModel;
use gnp::seed::Seed;
use gnp::synthetic::{generate, write_tu_dataset, SyntheticSpec};
use gnp::{Error, Result};

const CSV_FORMAT_VERSION: u32 = 1;
const POSTERIOR_FORMAT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "gnp", version, about = "Graph Neural Processes for edge label imputation")]
struct Cli {
    /// Flat TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base directory for run outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print dataset statistics.
    Inspect {
        #[command(flatten)]
        data: DataArgs,
        /// Also write the graphs as JSONL records to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// With --dump, keep labels on only this seeded fraction of edges.
        #[arg(long, requires = "dump")]
        keep_fraction: Option<f64>,
    },
    /// Train a GNP on a whole dataset and write the checkpoint.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Compare imputers over repeated seeded splits.
    Benchmark {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Headline scores include observed context edges.
        #[arg(long)]
        score_all_edges: bool,
    },
    /// Posterior over every unlabeled edge of each graph in a JSONL file.
    Impute {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Graph records, one JSON object per line; `null` marks an unknown label.
        #[arg(long)]
        graphs: PathBuf,
    },
    /// Write a synthetic TU dataset whose labels follow a degree rule.
    Generate {
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value_t = 300)]
        graphs: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    dataset: Option<String>,
    /// Directory holding `<NAME>/<NAME>_A.txt` etc.
    #[arg(long)]
    root: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Eigenvectors per endpoint.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r_width: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(r) = &self.root {
            cfg.root = r.clone();
        }
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(r) = self.r_width {
            cfg.r_width = r;
            cfg.hidden_width = r;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(p) = self.p0 {
            cfg.p0 = p;
        }
        if let Some(p) = self.p1 {
            cfg.p1 = p;
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// `<out>/runs/<dataset>/<timestamp>-<seed>/`, suffixed if it already exists.
fn run_dir(out: &Path, dataset: &str, seed: u64) -> Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = out.join("runs").join(dataset);
    let mut dir = base.join(format!("{stamp}-{seed}"));
    let mut n = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{seed}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

fn load(cfg: &RunConfig) -> Result<TuDataset> {
    load_tu_dataset(&cfg.root, &cfg.dataset)
}

fn echo_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write(&dir.join("config.toml"), cfg.to_toml())
}

fn inspect(cfg: &RunConfig, dump: Option<&Path>, keep: Option<f64>) -> Result<()> {
    let ds = load(cfg)?;
    let s = ds.stats();
    println!("dataset\tgraphs\tmean_nodes\tmean_edges\tedge_classes\tnode_classes");
    println!(
        "{}\t{}\t{:.2}\t{:.2}\t{}\t{}",
        ds.name, s.graphs, s.mean_nodes, s.mean_edges, s.edge_classes, s.node_classes
    );
    if let Some(path) = dump {
        let graphs = match keep {
            None => ds.graphs.clone(),
            Some(f) => {
                let root = Seed(cfg.seed).named("dump");
                ds.graphs
                    .iter()
                    .enumerate()
                    .map(|(i, g)| sparsify(g, f, root.child(i as u64).0))
                    .collect::<Result<_>>()?
            }
        };
        write_graph_records(path, &graphs)?;
    }
    Ok(())
}

fn train(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let ds = load(cfg)?;
    let mut model = GnpModel::new(cfg.gnp(), ds.alphabet, Seed(cfg.seed).named("init"))?;
    info!("training on {} graphs, {} parameters", ds.graphs.len(), model.param_count());
    let report = model.train(&ds.graphs, &cfg.train_config())?;
    let dir = run_dir(out, &cfg.dataset, cfg.seed)?;
    echo_config(&dir, cfg)?;
    model.save(&dir.join("checkpoint.json"))?;
    let mut trace = format!("# format_version: {CSV_FORMAT_VERSION}\nepoch,mean_loss\n");
    for (e, l) in report.epoch_losses.iter().enumerate() {
        let _ = writeln!(trace, "{},{}", e + 1, l);
    }
    write(&dir.join("loss_trace.csv"), trace)?;
    if let Some(last) = report.epoch_losses.last() {
        println!("final mean loss {last}");
    }
    Ok(dir)
}

fn benchmark(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let ds = load(cfg)?;
    let report = run_experiment(&ds, &cfg.experiment())?;
    let dir = run_dir(out, &cfg.dataset, cfg.seed)?;
    echo_config(&dir, cfg)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write(&dir.join("report.json"), json)?;
    let csv = report.to_csv();
    write(&dir.join("report.csv"), format!("# format_version: {CSV_FORMAT_VERSION}\n{csv}"))?;
    print!("{csv}");
    Ok(dir)
}

#[derive(Serialize)]
struct PosteriorRecord {
    format_version: u32,
    graph: usize,
    edge: usize,
    u: usize,
    v: usize,
    probabilities: Vec<f64>,
    label: usize,
}

fn impute(checkpoint: &Path, graphs: &Path, cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let model = GnpModel::load(checkpoint)?;
    let graphs = read_graph_records(graphs)?;
    let mut lines = String::new();
    for (gi, g) in graphs.iter().enumerate() {
        if g.unlabeled_edges().is_empty() {
            continue;
        }
        let imp = model.impute(g).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("graph {gi}: {msg}")),
            Error::NodeOutOfRange { .. } | Error::Shape(_) => {
                Error::Data(format!("graph {gi} is incompatible with checkpoint: {e}"))
            }
            other => other,
        })?;
        for (i, &k) in imp.edges.iter().enumerate() {
            let e = g.edges()[k];
            let rec = PosteriorRecord {
                format_version: POSTERIOR_FORMAT_VERSION,
                graph: gi,
                edge: k,
                u: e.u,
                v: e.v,
                probabilities: imp.posterior.row(i).to_vec(),
                label: imp.labels[i],
            };
            lines.push_str(&serde_json::to_string(&rec)?);
            lines.push('\n');
        }
    }
    let dir = run_dir(out, "impute", cfg.seed)?;
    write(&dir.join("posteriors.jsonl"), lines)?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    let dir = match &cli.command {
        Command::Inspect { data, dump, keep_fraction } => {
            data.apply(&mut cfg);
            return inspect(&cfg, dump.as_deref(), *keep_fraction);
        }
        Command::Train { data, model } => {
            data.apply(&mut cfg);
            model.apply(&mut cfg);
            cfg.validate()?;
            train(&cfg, &cli.out)?
        }
        Command::Benchmark {
            data,
            model,
            methods,
            runs,
            train_fraction,
            score_all_edges,
        } => {
            data.apply(&mut cfg);
            model.apply(&mut cfg);
            if let Some(m) = methods {
                cfg.methods = m.clone();
            }
            if let Some(r) = runs {
                cfg.runs = *r;
            }
            if let Some(f) = train_fraction {
                cfg.train_fraction = *f;
            }
            if *score_all_edges {
                cfg.scoring = ScoringMode::AllEdges;
            }
            cfg.validate()?;
            benchmark(&cfg, &cli.out)?
        }
        Command::Impute { checkpoint, graphs } => impute(checkpoint, graphs, &cfg, &cli.out)?,
        Command::Generate { name, graphs, classes } => {
            let spec = SyntheticSpec {
                graphs: *graphs,
                edge_classes: *classes,
                seed: cfg.seed,
                ..SyntheticSpec::default()
            };
            let mut ds = generate(&spec)?;
            ds.name = name.clone();
            let dir = cli.out.join(name);
            write_tu_dataset(&ds, &dir)?;
            dir
        }
    };
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
