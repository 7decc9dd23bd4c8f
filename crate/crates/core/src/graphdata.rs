//! TU-format graph datasets, one-class splits and block-diagonal batches.
//!
//! TU files (`NAME_A.txt`, `NAME_graph_indicator.txt`, `NAME_graph_labels.txt`
//! and optionally `NAME_node_labels.txt`) use 1-based node and graph ids.
//! Internally every graph keeps 0-based local node indices and its edges as
//! normalised undirected pairs `(i, j)` with `i <= j`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_features: DenseMatrix,
    /// Class index in `0..C`.
    pub label: usize,
    /// Node label indices when the dataset carries node labels.
    pub node_labels: Option<Vec<usize>>,
}

impl Graph {
    /// Neighbour lists with both directions materialised; a self-loop
    /// appears once.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            if i != j {
                adj[j].push(i);
            }
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().iter().map(Vec::len).collect()
    }
}

/// How node features were built; recorded in run metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// One-hot over the sorted distinct node label values.
    NodeLabels { values: Vec<i64> },
    /// One-hot node degree, `0..=max_degree`.
    DegreeOneHot { max_degree: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub feature_dim: usize,
    /// Original graph label values; class `c` is `class_values[c]`.
    pub class_values: Vec<i64>,
    pub feature_kind: FeatureKind,
}

impl GraphDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }

    pub fn average_nodes(&self) -> f64 {
        let total: usize = self.graphs.iter().map(|g| g.node_count).sum();
        total as f64 / self.graphs.len().max(1) as f64
    }

    pub fn subset(&self, indices: &[usize]) -> GraphDataset {
        GraphDataset {
            name: self.name.clone(),
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            feature_dim: self.feature_dim,
            class_values: self.class_values.clone(),
            feature_kind: self.feature_kind.clone(),
        }
    }
}

fn tu_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read_required(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::ingest(path, "missing mandatory file"));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_int(path: &Path, line: usize, token: &str) -> Result<i64> {
    token
        .trim()
        .parse::<i64>()
        .map_err(|_| Error::ingest(path, format!("line {line}: expected an integer, got {token:?}")))
}

/// Parse the TU files for dataset `name` in `dir`.
pub fn parse_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<GraphDataset> {
    let dir = dir.as_ref();
    let a_path = tu_path(dir, name, "A");
    let ind_path = tu_path(dir, name, "graph_indicator");
    let lab_path = tu_path(dir, name, "graph_labels");
    let node_lab_path = tu_path(dir, name, "node_labels");

    let indicator_text = read_required(&ind_path)?;
    let labels_text = read_required(&lab_path)?;
    let edges_text = read_required(&a_path)?;

    let graph_labels: Vec<i64> = numbered_lines(&labels_text)
        .map(|(n, l)| parse_int(&lab_path, n, l))
        .collect::<Result<_>>()?;
    let graph_count = graph_labels.len();

    // node -> (graph, local index)
    let mut node_owner: Vec<(usize, usize)> = Vec::new();
    let mut node_counts = vec![0usize; graph_count];
    for (n, l) in numbered_lines(&indicator_text) {
        let g = parse_int(&ind_path, n, l)?;
        if g < 1 || g as usize > graph_count {
            return Err(Error::ingest(
                &ind_path,
                format!("line {n}: graph id {g} outside 1..={graph_count}"),
            ));
        }
        let g = g as usize - 1;
        node_owner.push((g, node_counts[g]));
        node_counts[g] += 1;
    }
    if let Some(empty) = node_counts.iter().position(|&c| c == 0) {
        return Err(Error::ingest(
            &ind_path,
            format!("graph {} has no nodes", empty + 1),
        ));
    }

    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); graph_count];
    for (n, l) in numbered_lines(&edges_text) {
        let mut parts = l.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::ingest(&a_path, format!("line {n}: expected \"i, j\", got {l:?}")));
        };
        let (a, b) = (parse_int(&a_path, n, a)?, parse_int(&a_path, n, b)?);
        let lookup = |v: i64| {
            if v < 1 || v as usize > node_owner.len() {
                Err(Error::ingest(
                    &a_path,
                    format!("line {n}: node {v} out of range 1..={}", node_owner.len()),
                ))
            } else {
                Ok(node_owner[v as usize - 1])
            }
        };
        let ((ga, la), (gb, lb)) = (lookup(a)?, lookup(b)?);
        if ga != gb {
            return Err(Error::ingest(
                &a_path,
                format!("line {n}: edge {a}-{b} crosses graphs {} and {}", ga + 1, gb + 1),
            ));
        }
        edge_sets[ga].insert((la.min(lb), la.max(lb)));
    }

    let node_labels = if node_lab_path.exists() {
        let text = fs::read_to_string(&node_lab_path).map_err(|e| Error::io(&node_lab_path, e))?;
        let values: Vec<i64> = numbered_lines(&text)
            .map(|(n, l)| parse_int(&node_lab_path, n, l))
            .collect::<Result<_>>()?;
        if values.len() != node_owner.len() {
            return Err(Error::ingest(
                &node_lab_path,
                format!("{} node labels for {} nodes", values.len(), node_owner.len()),
            ));
        }
        Some(values)
    } else {
        None
    };

    let class_values: Vec<i64> = graph_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let class_of = |v: i64| class_values.binary_search(&v).expect("value collected above");

    let mut graphs: Vec<Graph> = (0..graph_count)
        .map(|g| Graph {
            node_count: node_counts[g],
            edges: edge_sets[g].iter().copied().collect(),
            node_features: DenseMatrix::zeros(0, 0),
            label: class_of(graph_labels[g]),
            node_labels: None,
        })
        .collect();

    if let Some(values) = &node_labels {
        let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let mut per_graph: Vec<Vec<usize>> = node_counts.iter().map(|&c| vec![0; c]).collect();
        for (node, &v) in values.iter().enumerate() {
            let (g, local) = node_owner[node];
            per_graph[g][local] = distinct.binary_search(&v).expect("collected above");
        }
        for (graph, labels) in graphs.iter_mut().zip(per_graph) {
            graph.node_labels = Some(labels);
        }
        Ok(finish_with_node_labels(name, graphs, class_values, distinct))
    } else {
        Ok(finish_with_degrees(name, graphs, class_values))
    }
}

fn one_hot(rows: &[usize], width: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows.len(), width);
    for (r, &c) in rows.iter().enumerate() {
        m.set(r, c, 1.0);
    }
    m
}

fn finish_with_node_labels(
    name: &str,
    mut graphs: Vec<Graph>,
    class_values: Vec<i64>,
    node_values: Vec<i64>,
) -> GraphDataset {
    let width = node_values.len();
    for g in &mut graphs {
        g.node_features = one_hot(g.node_labels.as_ref().expect("set by caller"), width);
    }
    GraphDataset {
        name: name.to_string(),
        graphs,
        feature_dim: width,
        class_values,
        feature_kind: FeatureKind::NodeLabels { values: node_values },
    }
}

/// Attach degree one-hot features (width = max degree + 1).
fn finish_with_degrees(name: &str, mut graphs: Vec<Graph>, class_values: Vec<i64>) -> GraphDataset {
    let max_degree = graphs
        .iter()
        .flat_map(|g| g.degrees())
        .max()
        .unwrap_or(0);
    for g in &mut graphs {
        g.node_features = one_hot(&g.degrees(), max_degree + 1);
        g.node_labels = None;
    }
    GraphDataset {
        name: name.to_string(),
        graphs,
        feature_dim: max_degree + 1,
        class_values,
        feature_kind: FeatureKind::DegreeOneHot { max_degree },
    }
}

/// Write `ds` back out in TU format (edges listed in both directions).
pub fn write_tu_dataset(ds: &GraphDataset, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mut a, mut ind, mut labels, mut node_labels) =
        (String::new(), String::new(), String::new(), String::new());
    let node_values = match &ds.feature_kind {
        FeatureKind::NodeLabels { values } => Some(values),
        FeatureKind::DegreeOneHot { .. } => None,
    };
    let mut offset = 0;
    for (gi, g) in ds.graphs.iter().enumerate() {
        for _ in 0..g.node_count {
            writeln!(ind, "{}", gi + 1).unwrap();
        }
        for &(i, j) in &g.edges {
            writeln!(a, "{}, {}", offset + i + 1, offset + j + 1).unwrap();
            if i != j {
                writeln!(a, "{}, {}", offset + j + 1, offset + i + 1).unwrap();
            }
        }
        writeln!(labels, "{}", ds.class_values[g.label]).unwrap();
        if let (Some(values), Some(nl)) = (node_values, &g.node_labels) {
            for &l in nl {
                writeln!(node_labels, "{}", values[l]).unwrap();
            }
        }
        offset += g.node_count;
    }
    let mut files = vec![("A", a), ("graph_indicator", ind), ("graph_labels", labels)];
    if node_values.is_some() {
        files.push(("node_labels", node_labels));
    }
    for (suffix, body) in files {
        let path = tu_path(dir, name, suffix);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Index-level result of a one-class split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub normal_class: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// 0 = normal, 1 = anomalous, aligned with `test`.
    pub test_labels: Vec<u8>,
    pub warning: Option<String>,
}

/// 80% of the normal class (seeded, without replacement) for training; the
/// remaining normals plus an equal number of sampled anomalies for testing.
/// With too few anomalies, all of them are used and a warning is recorded.
pub fn split_indices(labels: &[usize], normal_class: usize, seed: u64) -> Result<SplitIndices> {
    let mut normals: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == normal_class).collect();
    let mut anomalies: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != normal_class).collect();
    if normals.is_empty() {
        return Err(Error::Contract(format!(
            "normal class {normal_class} has no members"
        )));
    }
    let mut rng = rng::stream(seed, purpose::SPLIT);
    normals.shuffle(&mut rng);
    anomalies.shuffle(&mut rng);

    let n_train = (normals.len() * 4 / 5).max(1);
    let mut train = normals[..n_train].to_vec();
    let mut test_normals = normals[n_train..].to_vec();
    let wanted = test_normals.len();
    let warning = (anomalies.len() < wanted).then(|| {
        format!(
            "only {} anomalies available for {} held-out normals; using all anomalies",
            anomalies.len(),
            wanted
        )
    });
    let mut test_anomalies = anomalies[..wanted.min(anomalies.len())].to_vec();
    train.sort_unstable();
    test_normals.sort_unstable();
    test_anomalies.sort_unstable();

    let test_labels = std::iter::repeat_n(0u8, test_normals.len())
        .chain(std::iter::repeat_n(1u8, test_anomalies.len()))
        .collect();
    let test = test_normals.into_iter().chain(test_anomalies).collect();
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(SplitIndices {
        normal_class,
        train,
        test,
        test_labels,
        warning,
    })
}

#[derive(Clone, Debug)]
pub struct OneClassSplit {
    pub train: GraphDataset,
    pub test: GraphDataset,
    pub test_labels: Vec<u8>,
    pub indices: SplitIndices,
}

pub fn one_class_split(ds: &GraphDataset, normal_class: usize, seed: u64) -> Result<OneClassSplit> {
    if normal_class >= ds.class_values.len() {
        return Err(Error::Contract(format!(
            "normal class {normal_class} not present ({} classes)",
            ds.class_values.len()
        )));
    }
    let indices = split_indices(&ds.labels(), normal_class, seed)?;
    Ok(OneClassSplit {
        train: ds.subset(&indices.train),
        test: ds.subset(&indices.test),
        test_labels: indices.test_labels.clone(),
        indices,
    })
}

/// Several graphs assembled into one block-diagonal graph.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    pub adjacency: Arc<Vec<Vec<usize>>>,
    pub node_features: DenseMatrix,
    /// Graph index (within the batch) of every node; nondecreasing.
    pub graph_indicator: Arc<Vec<usize>>,
    pub graph_count: usize,
    pub node_counts: Vec<usize>,
    /// Dataset indices of the member graphs, in batch order.
    pub members: Vec<usize>,
}

impl GraphBatch {
    pub fn assemble(graphs: &[Graph], members: &[usize]) -> Result<GraphBatch> {
        if members.is_empty() {
            return Err(Error::Contract("cannot assemble an empty batch".into()));
        }
        let mut adjacency = Vec::new();
        let mut indicator = Vec::new();
        let mut features = Vec::with_capacity(members.len());
        let mut node_counts = Vec::with_capacity(members.len());
        for (b, &gi) in members.iter().enumerate() {
            let g = &graphs[gi];
            let offset = adjacency.len();
            adjacency.extend(
                g.adjacency()
                    .into_iter()
                    .map(|nbrs| nbrs.into_iter().map(|j| j + offset).collect::<Vec<_>>()),
            );
            indicator.extend(std::iter::repeat_n(b, g.node_count));
            features.push(&g.node_features);
            node_counts.push(g.node_count);
        }
        Ok(GraphBatch {
            adjacency: Arc::new(adjacency),
            node_features: DenseMatrix::vcat(&features)?,
            graph_indicator: Arc::new(indicator),
            graph_count: members.len(),
            node_counts,
            members: members.to_vec(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph_indicator.len()
    }
}

/// Partition `0..n` into consecutive chunks, optionally after a seeded shuffle.
pub fn batch_order(n: usize, batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Contract("batch size must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Contract("cannot batch an empty dataset".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut rng::stream(seed, purpose::BATCHES));
    }
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

pub fn make_batches(ds: &GraphDataset, batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<GraphBatch>> {
    batch_order(ds.len(), batch_size, seed, shuffle)?
        .iter()
        .map(|members| GraphBatch::assemble(&ds.graphs, members))
        .collect()
}

/// One group of random graphs for [`random_graph_dataset`].
#[derive(Clone, Copy, Debug)]
pub struct RandomGraphGroup {
    pub count: usize,
    pub nodes: usize,
    pub density: f64,
    pub label: i64,
}

/// Erdős–Rényi graphs (each pair linked with probability `density`),
/// degree one-hot features.
pub fn random_graph_dataset(name: &str, groups: &[RandomGraphGroup], seed: u64) -> GraphDataset {
    let mut rng = rng::stream(seed, purpose::SYNTHETIC);
    let class_values: Vec<i64> = groups.iter().map(|g| g.label).collect::<BTreeSet<_>>().into_iter().collect();
    let mut graphs = Vec::new();
    for group in groups {
        for _ in 0..group.count {
            let mut edges = Vec::new();
            for i in 0..group.nodes {
                for j in (i + 1)..group.nodes {
                    if rng.gen::<f64>() < group.density {
                        edges.push((i, j));
                    }
                }
            }
            graphs.push(Graph {
                node_count: group.nodes,
                edges,
                node_features: DenseMatrix::zeros(0, 0),
                label: class_values.binary_search(&group.label).expect("collected above"),
                node_labels: None,
            });
        }
    }
    finish_with_degrees(name, graphs, class_values)
}

/// Small two-class dataset bundled with the CLI's `fixture` command:
/// sparse graphs (label 0) against denser ones (label 1).
pub fn fixture_dataset() -> GraphDataset {
    random_graph_dataset(
        "FIXTURE",
        &[
            RandomGraphGroup { count: 40, nodes: 12, density: 0.2, label: 0 },
            RandomGraphGroup { count: 20, nodes: 12, density: 0.5, label: 1 },
        ],
        2024,
    )
}

/// Numeric table loaded from CSV for the non-graph mode.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularData {
    pub features: DenseMatrix,
    /// Class index in `0..C`.
    pub labels: Vec<usize>,
    pub class_values: Vec<i64>,
}

/// Header row required; the last column is an integer label.
pub fn load_csv_table(path: impl AsRef<Path>) -> Result<TabularData> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ingest(path, e.to_string()))?;
    let width = reader
        .headers()
        .map_err(|e| Error::ingest(path, e.to_string()))?
        .len();
    if width < 2 {
        return Err(Error::ingest(path, "need at least one feature column and a label column"));
    }
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // header is line 1
        let line = r + 2;
        let record = record.map_err(|e| Error::ingest(path, format!("row {line}: {e}")))?;
        if record.len() != width {
            return Err(Error::ingest(
                path,
                format!("row {line}: {} fields, expected {width}", record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate().take(width - 1) {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::ingest(path, format!("row {line}, column {}: non-numeric cell {cell:?}", c + 1))
            })?;
            values.push(v);
        }
        let label = &record[width - 1];
        raw_labels.push(label.parse::<i64>().map_err(|_| {
            Error::ingest(path, format!("row {line}, column {width}: non-integer label {label:?}"))
        })?);
    }
    let class_values: Vec<i64> = raw_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|v| class_values.binary_search(v).expect("collected above"))
        .collect();
    Ok(TabularData {
        features: DenseMatrix::new(raw_labels.len(), width - 1, values)?,
        labels,
        class_values,
    })
}

/// Per-column standardisation fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero spread get a unit scale.
    pub fn fit(rows: &DenseMatrix) -> Standardizer {
        let means = rows.column_means();
        let n = rows.rows().max(1) as f64;
        let mut var = vec![0.0; rows.cols()];
        for r in 0..rows.rows() {
            for ((v, x), m) in var.iter_mut().zip(rows.row(r)).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 { s } else { 1.0 }
            })
            .collect();
        Standardizer { means, stds }
    }

    pub fn apply(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = rows.sub_row_vector(&self.means)?;
        for r in 0..out.rows() {
            for (x, s) in out.row_mut(r).iter_mut().zip(&self.stds) {
                *x /= s;
            }
        }
        Ok(out)
    }
}

/// Label counts per class, handy for logging.
pub fn class_histogram(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &l in labels {
        *h.entry(l).or_insert(0) += 1;
    }
    h
}
