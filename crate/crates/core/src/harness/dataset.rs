//! Dataset container and the text file formats it loads from and saves to.
//!
//! Files: an edge list (`src<TAB>dst<TAB>etype`), sparse feature rows
//! (`node_id<TAB>dim:value dim:value ...`), labels (`node_id<TAB>class_id`)
//! and one node id per line per mask. Headers (`nodes=N ...`) pin counts so
//! saved datasets reload byte-exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gnn::SparseFeatures;
use crate::graph::Graph;

use super::HarnessError;

fn default_true() -> bool {
    true
}

/// Paths of an on-disk dataset. Only the edge list is required.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetFiles {
    pub edges: PathBuf,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub train_mask: Option<PathBuf>,
    #[serde(default)]
    pub val_mask: Option<PathBuf>,
    #[serde(default)]
    pub test_mask: Option<PathBuf>,
    /// Treat the edge list as undirected and split each record into both
    /// directions on load. Citation-network dumps are undirected.
    #[serde(default = "default_true")]
    pub undirected: bool,
}

/// In-memory dataset: the graph plus features, partial labels and disjoint
/// train/val/test masks.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: Graph,
    pub features: SparseFeatures,
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
    pub train_mask: Vec<usize>,
    pub val_mask: Vec<usize>,
    pub test_mask: Vec<usize>,
}

impl Dataset {
    /// |train| / N.
    pub fn label_rate(&self) -> f64 {
        if self.graph.num_nodes() == 0 {
            return 0.0;
        }
        self.train_mask.len() as f64 / self.graph.num_nodes() as f64
    }

    /// Masks must be disjoint, in range, and every mask node must be labeled.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.graph.num_nodes();
        if self.features.num_nodes != n {
            return Err(HarnessError::Validation {
                message: format!(
                    "feature rows cover {} nodes, graph has {n}",
                    self.features.num_nodes
                ),
            });
        }
        if self.labels.len() != n {
            return Err(HarnessError::Validation {
                message: format!("labels cover {} nodes, graph has {n}", self.labels.len()),
            });
        }
        let mut seen = vec![false; n];
        for (name, mask) in [
            ("train", &self.train_mask),
            ("val", &self.val_mask),
            ("test", &self.test_mask),
        ] {
            for &v in mask {
                if v >= n {
                    return Err(HarnessError::Validation {
                        message: format!("{name} mask node {v} out of range"),
                    });
                }
                if seen[v] {
                    return Err(HarnessError::Validation {
                        message: format!("node {v} appears in more than one mask"),
                    });
                }
                seen[v] = true;
                if self.labels[v].is_none() {
                    return Err(HarnessError::Validation {
                        message: format!("{name} mask node {v} has no label"),
                    });
                }
            }
        }
        for (v, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                if *c >= self.num_classes {
                    return Err(HarnessError::Validation {
                        message: format!("node {v} labeled {c}, only {} classes", self.num_classes),
                    });
                }
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses feature rows. Returns an error naming the offending line for ids
/// or dims out of range.
pub fn parse_features(
    text: &str,
    num_nodes: usize,
    num_features: Option<usize>,
) -> Result<SparseFeatures, HarnessError> {
    // (line, node, sorted sparse row)
    type Record = (usize, usize, Vec<(usize, f64)>);
    let mut header_features = None;
    let mut records: Vec<Record> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("nodes=") {
            for part in line.split_whitespace() {
                if let Some(v) = part.strip_prefix("features=") {
                    header_features =
                        Some(v.parse::<usize>().map_err(|_| HarnessError::ParseFile {
                            line: line_no,
                            message: format!("bad feature count '{v}'"),
                        })?);
                }
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let node_tok = it.next().unwrap();
        let node: usize = node_tok.parse().map_err(|_| HarnessError::ParseFile {
            line: line_no,
            message: format!("bad node id '{node_tok}'"),
        })?;
        if node >= num_nodes {
            return Err(HarnessError::ParseFile {
                line: line_no,
                message: format!("node id {node} out of range"),
            });
        }
        let mut row = Vec::new();
        for pair in it {
            let (dim, value) = pair
                .split_once(':')
                .ok_or_else(|| HarnessError::ParseFile {
                    line: line_no,
                    message: format!("bad feature entry '{pair}'"),
                })?;
            let dim: usize = dim.parse().map_err(|_| HarnessError::ParseFile {
                line: line_no,
                message: format!("bad feature dim '{dim}'"),
            })?;
            let value: f64 = value.parse().map_err(|_| HarnessError::ParseFile {
                line: line_no,
                message: format!("bad feature value '{value}'"),
            })?;
            row.push((dim, value));
        }
        row.sort_by_key(|&(d, _)| d);
        records.push((line_no, node, row));
    }
    let f = num_features.or(header_features).unwrap_or_else(|| {
        records
            .iter()
            .flat_map(|(_, _, row)| row.iter().map(|&(d, _)| d + 1))
            .max()
            .unwrap_or(0)
    });
    let mut features = SparseFeatures::empty(num_nodes, f);
    for (line, node, row) in records {
        for &(dim, _) in &row {
            if dim >= f {
                return Err(HarnessError::ParseFile {
                    line,
                    message: format!("feature dim {dim} out of range"),
                });
            }
        }
        features.rows[node] = row;
    }
    Ok(features)
}

pub fn features_to_text(features: &SparseFeatures) -> String {
    let mut out = format!(
        "nodes={} features={}\n",
        features.num_nodes, features.num_features
    );
    for (v, row) in features.rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let entries: Vec<String> = row.iter().map(|(d, x)| format!("{d}:{x}")).collect();
        out.push_str(&format!("{v}\t{}\n", entries.join(" ")));
    }
    out
}

pub fn parse_labels(
    text: &str,
    num_nodes: usize,
    num_classes: Option<usize>,
) -> Result<(Vec<Option<usize>>, usize), HarnessError> {
    let mut header_classes = None;
    let mut labels = vec![None; num_nodes];
    let mut max_class = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("nodes=") {
            for part in line.split_whitespace() {
                if let Some(v) = part.strip_prefix("classes=") {
                    header_classes =
                        Some(v.parse::<usize>().map_err(|_| HarnessError::ParseFile {
                            line: line_no,
                            message: format!("bad class count '{v}'"),
                        })?);
                }
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<usize, HarnessError> {
            let tok = tok.ok_or_else(|| HarnessError::ParseFile {
                line: line_no,
                message: format!("missing {what}"),
            })?;
            tok.parse().map_err(|_| HarnessError::ParseFile {
                line: line_no,
                message: format!("bad {what} '{tok}'"),
            })
        };
        let node = parse(it.next(), "node id")?;
        let class = parse(it.next(), "class id")?;
        if node >= num_nodes {
            return Err(HarnessError::ParseFile {
                line: line_no,
                message: format!("node id {node} out of range"),
            });
        }
        labels[node] = Some(class);
        max_class = max_class.max(class + 1);
    }
    let classes = num_classes.or(header_classes).unwrap_or(max_class);
    Ok((labels, classes))
}

pub fn labels_to_text(labels: &[Option<usize>], num_classes: usize) -> String {
    let mut out = format!("nodes={} classes={num_classes}\n", labels.len());
    for (v, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            out.push_str(&format!("{v}\t{c}\n"));
        }
    }
    out
}

pub fn parse_mask(text: &str, num_nodes: usize) -> Result<Vec<usize>, HarnessError> {
    let mut mask = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let node: usize = line.parse().map_err(|_| HarnessError::ParseFile {
            line: idx + 1,
            message: format!("bad node id '{line}'"),
        })?;
        if node >= num_nodes {
            return Err(HarnessError::ParseFile {
                line: idx + 1,
                message: format!("node id {node} out of range"),
            });
        }
        mask.push(node);
    }
    mask.sort_unstable();
    mask.dedup();
    Ok(mask)
}

pub fn mask_to_text(mask: &[usize]) -> String {
    let mut out = String::new();
    for v in mask {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Loads a dataset from files, bidirecting undirected edge lists and
/// validating mask consistency.
pub fn load_dataset(files: &DatasetFiles) -> Result<Dataset, HarnessError> {
    let edge_text = read(&files.edges)?;
    let mut graph = Graph::parse_edge_list(&edge_text, None, None)?;
    if files.undirected {
        graph = graph.bidirect();
    }
    let n = graph.num_nodes();

    let features = match &files.features {
        Some(path) => parse_features(&read(path)?, n, None)?,
        None => SparseFeatures::empty(n, 0),
    };
    let (labels, num_classes) = match &files.labels {
        Some(path) => parse_labels(&read(path)?, n, None)?,
        None => (vec![None; n], 0),
    };
    let load_mask = |path: &Option<PathBuf>| -> Result<Vec<usize>, HarnessError> {
        match path {
            Some(p) => parse_mask(&read(p)?, n),
            None => Ok(Vec::new()),
        }
    };
    let dataset = Dataset {
        train_mask: load_mask(&files.train_mask)?,
        val_mask: load_mask(&files.val_mask)?,
        test_mask: load_mask(&files.test_mask)?,
        graph,
        features,
        labels,
        num_classes,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes a dataset under `dir` and returns the file set that reloads it
/// exactly (the graph is stored as-is, so `undirected` is false).
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<DatasetFiles, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let write = |name: &str, text: String| -> Result<PathBuf, HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    };
    Ok(DatasetFiles {
        edges: write("edges.tsv", dataset.graph.to_edge_list_text())?,
        features: Some(write("features.tsv", features_to_text(&dataset.features))?),
        labels: Some(write(
            "labels.tsv",
            labels_to_text(&dataset.labels, dataset.num_classes),
        )?),
        train_mask: Some(write("train_mask.txt", mask_to_text(&dataset.train_mask))?),
        val_mask: Some(write("val_mask.txt", mask_to_text(&dataset.val_mask))?),
        test_mask: Some(write("test_mask.txt", mask_to_text(&dataset.test_mask))?),
        undirected: false,
    })
}
