//! TU benchmark collection loading, label sparsification and seeded splits.
//!
//! A TU dataset `NAME` is a directory with
//!
//! ```text
//! NAME_A.txt                one directed edge per line: "src, dst" (1-indexed global node ids)
//! NAME_graph_indicator.txt  line i: graph id of node i
//! NAME_node_labels.txt      line i: label of node i
//! NAME_edge_labels.txt      line k: label of the edge on line k of NAME_A.txt
//! ```
//!
//! Both directions of an undirected edge are usually listed; they are merged.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, LabelAlphabet, NodeAttr};
use crate::seed::{round_half_up, Rng, Seed};

pub const DUMP_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct TuDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub alphabet: LabelAlphabet,
    /// Raw file value of each dense node label.
    pub node_label_values: Vec<i64>,
    /// Raw file value of each dense edge label.
    pub edge_label_values: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetStats {
    pub graphs: usize,
    pub mean_nodes: f64,
    pub mean_edges: f64,
    pub edge_classes: usize,
    pub node_classes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            out.push((i + 1, trimmed.to_string()));
        }
    }
    Ok(out)
}

fn parse_int(path: &Path, line: usize, s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected an integer, found {s:?}"),
    })
}

fn parse_column(path: &Path) -> Result<Vec<(usize, i64)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, s)| {
            // label files occasionally carry extra comma-separated columns; the first one is the label
            let first = s.split(',').next().unwrap_or("");
            Ok((line, parse_int(path, line, first)?))
        })
        .collect()
}

fn dense_map(values: impl Iterator<Item = i64>) -> (Vec<i64>, HashMap<i64, usize>) {
    let distinct: BTreeSet<i64> = values.collect();
    let sorted: Vec<i64> = distinct.into_iter().collect();
    let map = sorted.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    (sorted, map)
}

/// Loads `root/name/NAME_*.txt`, or `root/NAME_*.txt` when `root` already
/// is the dataset directory.
pub fn load_tu_dataset(root: &Path, name: &str) -> Result<TuDataset> {
    let dir = if root.join(format!("{name}_A.txt")).exists() {
        root.to_path_buf()
    } else {
        root.join(name)
    };
    let file = |suffix: &str| -> Result<PathBuf> {
        let p = dir.join(format!("{name}_{suffix}.txt"));
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::Data(format!("missing file {}", p.display())))
        }
    };
    let a_path = file("A")?;
    let ind_path = file("graph_indicator")?;
    let nl_path = file("node_labels")?;
    let el_path = file("edge_labels")?;

    let indicator = parse_column(&ind_path)?;
    let node_labels = parse_column(&nl_path)?;
    let edge_labels = parse_column(&el_path)?;
    let rows = read_lines(&a_path)?;

    if node_labels.len() != indicator.len() {
        return Err(Error::Data(format!(
            "{} has {} rows but {} has {}",
            nl_path.display(),
            node_labels.len(),
            ind_path.display(),
            indicator.len()
        )));
    }
    if edge_labels.len() != rows.len() {
        return Err(Error::Data(format!(
            "{} has {} rows but {} has {}",
            el_path.display(),
            edge_labels.len(),
            a_path.display(),
            rows.len()
        )));
    }

    let (graph_ids, graph_of_id) = dense_map(indicator.iter().map(|&(_, g)| g));
    let (node_label_values, node_label_map) = dense_map(node_labels.iter().map(|&(_, l)| l));
    let (edge_label_values, edge_label_map) = dense_map(edge_labels.iter().map(|&(_, l)| l));

    // global node id (0-based) -> (graph, local index)
    let mut local = Vec::with_capacity(indicator.len());
    let mut nodes: Vec<Vec<NodeAttr>> = vec![Vec::new(); graph_ids.len()];
    for (i, &(_, gid)) in indicator.iter().enumerate() {
        let g = graph_of_id[&gid];
        local.push((g, nodes[g].len()));
        nodes[g].push(NodeAttr {
            label: node_label_map[&node_labels[i].1],
        });
    }

    let mut edges: Vec<BTreeMap<(usize, usize), (usize, usize)>> = vec![BTreeMap::new(); graph_ids.len()];
    for (k, (line, row)) in rows.iter().enumerate() {
        let mut parts = row.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                path: a_path.clone(),
                line: *line,
                msg: format!("expected \"src, dst\", found {row:?}"),
            });
        };
        let id = |s: &str| -> Result<usize> {
            let v = parse_int(&a_path, *line, s)?;
            if v < 1 || v as usize > local.len() {
                return Err(Error::Parse {
                    path: a_path.clone(),
                    line: *line,
                    msg: format!("node id {v} outside 1..={}", local.len()),
                });
            }
            Ok(v as usize - 1)
        };
        let (ga, la) = local[id(a)?];
        let (gb, lb) = local[id(b)?];
        if ga != gb {
            return Err(Error::Parse {
                path: a_path.clone(),
                line: *line,
                msg: format!("edge joins nodes of graphs {} and {}", graph_ids[ga], graph_ids[gb]),
            });
        }
        if la == lb {
            return Err(Error::Parse {
                path: a_path.clone(),
                line: *line,
                msg: "self-loop".into(),
            });
        }
        let label = edge_label_map[&edge_labels[k].1];
        let key = (la.min(lb), la.max(lb));
        match edges[ga].get(&key) {
            Some(&(prev, prev_line)) if prev != label => {
                return Err(Error::Parse {
                    path: el_path.clone(),
                    line: edge_labels[k].0,
                    msg: format!(
                        "label {} conflicts with label {} given for the reverse direction on line {prev_line}",
                        edge_labels[k].1, edge_label_values[prev]
                    ),
                });
            }
            Some(_) => {}
            None => {
                edges[ga].insert(key, (label, edge_labels[k].0));
            }
        }
    }

    let graphs = nodes
        .into_iter()
        .zip(edges)
        .map(|(nodes, edges)| {
            let edges = edges
                .into_iter()
                .map(|((u, v), (l, _))| Edge::new(u, v, Some(l)))
                .collect();
            Ok(Graph::new(nodes, edges)?.with_dataset_id(name))
        })
        .collect::<Result<Vec<_>>>()?;
    if graphs.is_empty() {
        return Err(Error::Data(format!("dataset {name} has no graphs")));
    }

    Ok(TuDataset {
        name: name.to_string(),
        graphs,
        alphabet: LabelAlphabet {
            edge_classes: edge_label_values.len(),
            node_classes: node_label_values.len(),
        },
        node_label_values,
        edge_label_values,
    })
}

impl TuDataset {
    pub fn stats(&self) -> DatasetStats {
        let n = self.graphs.len() as f64;
        DatasetStats {
            graphs: self.graphs.len(),
            mean_nodes: self.graphs.iter().map(|g| g.node_count()).sum::<usize>() as f64 / n,
            mean_edges: self.graphs.iter().map(|g| g.edge_count()).sum::<usize>() as f64 / n,
            edge_classes: self.alphabet.edge_classes,
            node_classes: self.alphabet.node_classes,
        }
    }

    fn subset(&self, idx: &[usize]) -> TuDataset {
        TuDataset {
            name: self.name.clone(),
            graphs: idx.iter().map(|&i| self.graphs[i].clone()).collect(),
            alphabet: self.alphabet,
            node_label_values: self.node_label_values.clone(),
            edge_label_values: self.edge_label_values.clone(),
        }
    }

    /// Writes one JSON record per graph.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_graph_records(path, &self.graphs)
    }
}

/// Picks `round_half_up(fraction * edge_count)` distinct edge indices
/// (at least one when there are edges), returned sorted.
pub fn choose_context(edge_count: usize, fraction: f64, rng: &mut Rng) -> Vec<usize> {
    if edge_count == 0 {
        return Vec::new();
    }
    let k = round_half_up(fraction * edge_count as f64).clamp(1, edge_count);
    let mut picked = index::sample(rng, edge_count, k).into_vec();
    picked.sort_unstable();
    picked
}

/// Hides the labels of all but a seeded random `fraction_known` of the edges.
pub fn sparsify(g: &Graph, fraction_known: f64, seed: u64) -> Result<Graph> {
    if !(fraction_known > 0.0 && fraction_known <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction_known must lie in (0, 1], got {fraction_known}"
        )));
    }
    let keep = choose_context(g.edge_count(), fraction_known, &mut Seed(seed).rng());
    g.keep_labels(&keep)
}

pub fn split(ds: &TuDataset, spec: SplitSpec) -> Result<(TuDataset, TuDataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n = ds.graphs.len();
    let n_train = round_half_up(spec.train_fraction * n as f64);
    if n_train == 0 || n_train >= n {
        return Err(Error::Data(format!(
            "splitting {n} graphs at {} leaves one side empty",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut Seed(spec.seed).rng());
    let (mut train, mut test) = (order[..n_train].to_vec(), order[n_train..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub format_version: u32,
    #[serde(default)]
    pub global_attr: Option<f64>,
    pub node_labels: Vec<usize>,
    /// `(u, v, label)`; `null` label marks an unknown edge.
    pub edges: Vec<(usize, usize, Option<usize>)>,
}

impl GraphRecord {
    pub fn from_graph(g: &Graph) -> Self {
        GraphRecord {
            format_version: DUMP_FORMAT_VERSION,
            global_attr: g.global_attr(),
            node_labels: g.nodes().iter().map(|n| n.label).collect(),
            edges: g.edges().iter().map(|e| (e.u, e.v, e.label)).collect(),
        }
    }

    pub fn into_graph(self) -> Result<Graph> {
        if self.format_version != DUMP_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported graph record format_version {}",
                self.format_version
            )));
        }
        let nodes = self.node_labels.into_iter().map(|label| NodeAttr { label }).collect();
        let edges = self.edges.into_iter().map(|(u, v, l)| Edge::new(u, v, l)).collect();
        Ok(Graph::new(nodes, edges)?.with_global_attr(self.global_attr))
    }
}

pub fn write_graph_records(path: &Path, graphs: &[Graph]) -> Result<()> {
    let mut out = Vec::new();
    for g in graphs {
        serde_json::to_writer(&mut out, &GraphRecord::from_graph(g))?;
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

pub fn read_graph_records(path: &Path) -> Result<Vec<Graph>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, s)| {
            let rec: GraphRecord = serde_json::from_str(&s).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
            rec.into_graph()
        })
        .collect()
}
