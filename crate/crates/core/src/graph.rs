//! Attributed undirected graphs, their file formats, and symmetric
//! normalization of adjacency with self-loops.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};

/// Per-node ground-truth tag. Only consumed at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    #[default]
    Normal,
    Structural,
    Contextual,
}

impl AnomalyKind {
    pub fn is_anomaly(self) -> bool {
        self != AnomalyKind::Normal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnomalyKind::Normal => "normal",
            AnomalyKind::Structural => "structural",
            AnomalyKind::Contextual => "contextual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "normal" => Some(AnomalyKind::Normal),
            "structural" => Some(AnomalyKind::Structural),
            "contextual" => Some(AnomalyKind::Contextual),
            _ => None,
        }
    }
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unweighted symmetric adjacency in compressed row form.
///
/// Neighbour lists are sorted and free of duplicates and self-loops. Every
/// undirected edge is stored in both rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Adjacency {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
        }
    }

    /// Builds from undirected pairs. Reversed and repeated pairs collapse.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(MagError::Bounds { index: u, n });
            }
            if v >= n {
                return Err(MagError::Bounds { index: v, n });
            }
            if u == v {
                return Err(MagError::Validation(format!("self-loop on node {u}")));
            }
            rows[u].push(v);
            rows[v].push(u);
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        Adjacency { n, indptr, indices }
    }

    /// Wraps raw CSR arrays without checking any invariant. Intended for
    /// diagnostics; run [`Adjacency::check`] before trusting the result.
    pub fn from_raw_csr(n: usize, indptr: Vec<usize>, indices: Vec<usize>) -> Self {
        Adjacency { n, indptr, indices }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Checks every structural invariant, naming the first violation.
    pub fn check(&self) -> Result<()> {
        if self.indptr.len() != self.n + 1 || self.indptr[0] != 0 {
            return Err(MagError::Validation(
                "row pointer has the wrong shape".into(),
            ));
        }
        if *self.indptr.last().unwrap() != self.indices.len() {
            return Err(MagError::Validation(
                "row pointer does not cover the index array".into(),
            ));
        }
        for i in 0..self.n {
            if self.indptr[i] > self.indptr[i + 1] {
                return Err(MagError::Validation(format!(
                    "row pointer decreases at row {i}"
                )));
            }
            let row = self.neighbors(i);
            for (k, &j) in row.iter().enumerate() {
                if j >= self.n {
                    return Err(MagError::Bounds {
                        index: j,
                        n: self.n,
                    });
                }
                if j == i {
                    return Err(MagError::Validation(format!(
                        "self-loop stored on node {i}"
                    )));
                }
                if k > 0 && row[k - 1] >= j {
                    return Err(MagError::Validation(format!(
                        "row {i} is unsorted or has duplicate entries"
                    )));
                }
            }
        }
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                if !self.has_edge(j, i) {
                    return Err(MagError::Validation(format!(
                        "adjacency is not symmetric: ({i},{j}) present but ({j},{i}) missing"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for (u, v) in self.edges() {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        a
    }
}

/// An attributed graph: structure, dense node features and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Adjacency,
    features: Array2<f64>,
    labels: Option<Vec<AnomalyKind>>,
}

impl Graph {
    pub fn new(
        adjacency: Adjacency,
        features: Array2<f64>,
        labels: Option<Vec<AnomalyKind>>,
    ) -> Result<Self> {
        let g = Graph {
            adjacency,
            features,
            labels,
        };
        g.check()?;
        Ok(g)
    }

    /// Assembles a graph without validation. See [`validate_graph`].
    pub fn from_parts_unchecked(
        adjacency: Adjacency,
        features: Array2<f64>,
        labels: Option<Vec<AnomalyKind>>,
    ) -> Self {
        Graph {
            adjacency,
            features,
            labels,
        }
    }

    fn check(&self) -> Result<()> {
        self.adjacency.check()?;
        if self.features.nrows() != self.adjacency.n() {
            return Err(MagError::Validation(format!(
                "feature matrix has {} rows but the graph has {} nodes",
                self.features.nrows(),
                self.adjacency.n()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.adjacency.n() {
                return Err(MagError::Validation(format!(
                    "label vector has {} entries but the graph has {} nodes",
                    labels.len(),
                    self.adjacency.n()
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> Option<&[AnomalyKind]> {
        self.labels.as_deref()
    }

    /// Binary anomaly indicator per node, if labels are present.
    pub fn anomaly_mask(&self) -> Option<Vec<bool>> {
        self.labels
            .as_ref()
            .map(|l| l.iter().map(|k| k.is_anomaly()).collect())
    }

    pub fn with_adjacency(&self, adjacency: Adjacency) -> Result<Graph> {
        if adjacency.n() != self.n() {
            return Err(MagError::Dimension(format!(
                "replacement adjacency has {} nodes, graph has {}",
                adjacency.n(),
                self.n()
            )));
        }
        Ok(Graph {
            adjacency,
            features: self.features.clone(),
            labels: self.labels.clone(),
        })
    }

    pub fn with_features(&self, features: Array2<f64>) -> Result<Graph> {
        if features.nrows() != self.n() {
            return Err(MagError::Dimension(format!(
                "replacement features have {} rows, graph has {} nodes",
                features.nrows(),
                self.n()
            )));
        }
        Ok(Graph {
            adjacency: self.adjacency.clone(),
            features,
            labels: self.labels.clone(),
        })
    }

    pub fn with_labels(&self, labels: Option<Vec<AnomalyKind>>) -> Result<Graph> {
        Graph::new(self.adjacency.clone(), self.features.clone(), labels)
    }

    pub fn into_parts(self) -> (Adjacency, Array2<f64>, Option<Vec<AnomalyKind>>) {
        (self.adjacency, self.features, self.labels)
    }
}

/// Symmetric sparse matrix `D^{-1/2}(A+I)D^{-1/2}`, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_adjacency(adj: &Adjacency) -> Self {
        let n = adj.n();
        let deg: Vec<f64> = (0..n).map(|i| (adj.degree(i) + 1) as f64).collect();
        let weight = |i: usize, j: usize| 1.0 / (deg[i] * deg[j]).sqrt();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(adj.indices.len() + n);
        let mut values = Vec::with_capacity(adj.indices.len() + n);
        indptr.push(0);
        for (i, &d) in deg.iter().enumerate() {
            let mut diag_done = false;
            for &j in adj.neighbors(i) {
                if !diag_done && j > i {
                    indices.push(i);
                    values.push(1.0 / d);
                    diag_done = true;
                }
                indices.push(j);
                values.push(weight(i, j));
            }
            if !diag_done {
                indices.push(i);
                values.push(1.0 / d);
            }
            indptr.push(indices.len());
        }
        NormalizedAdjacency {
            n,
            indptr,
            indices,
            values,
        }
    }

    /// The `m × m` identity, i.e. the normalization of an edgeless graph.
    pub fn identity(m: usize) -> Self {
        NormalizedAdjacency {
            n: m,
            indptr: (0..=m).collect(),
            indices: (0..m).collect(),
            values: vec![1.0; m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(column, value)` entries of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Sparse-times-dense product `Â · X`.
    pub fn matmul(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "row count must match adjacency size");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for i in 0..self.n {
            let mut out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &x.row(j));
            }
        }
        out
    }
}

pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    NormalizedAdjacency::from_adjacency(g.adjacency())
}

/// Local normalized adjacency over `nodes` (positions are distinct even when
/// node ids repeat; repeated ids never connect to each other).
pub fn induced_adjacency(adj: &Adjacency, nodes: &[usize]) -> Result<NormalizedAdjacency> {
    if nodes.is_empty() {
        return Err(MagError::Sampling(
            "induced subgraph needs at least one node".into(),
        ));
    }
    let n = adj.n();
    if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
        return Err(MagError::Bounds { index: bad, n });
    }
    let m = nodes.len();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    for a in 0..m {
        for b in (a + 1)..m {
            if nodes[a] != nodes[b] && adj.has_edge(nodes[a], nodes[b]) {
                rows[a].push(b);
                rows[b].push(a);
            }
        }
    }
    Ok(NormalizedAdjacency::from_adjacency(&Adjacency::from_rows(
        rows,
    )))
}

/// Local normalized adjacency plus the stacked feature rows of `nodes`.
pub fn induced_subgraph(g: &Graph, nodes: &[usize]) -> Result<(NormalizedAdjacency, Array2<f64>)> {
    let adj = induced_adjacency(g.adjacency(), nodes)?;
    let mut block = Array2::zeros((nodes.len(), g.dim()));
    for (r, &v) in nodes.iter().enumerate() {
        block.row_mut(r).assign(&g.feature_row(v));
    }
    Ok((adj, block))
}

/// Summary statistics of a validated graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub isolated: usize,
    pub normal: usize,
    pub structural: usize,
    pub contextual: usize,
    pub anomalies: usize,
}

pub fn validate_graph(g: &Graph) -> Result<GraphReport> {
    g.check()?;
    let adj = g.adjacency();
    let isolated = (0..g.n()).filter(|&i| adj.degree(i) == 0).count();
    let count = |k: AnomalyKind| {
        g.labels()
            .map(|l| l.iter().filter(|&&x| x == k).count())
            .unwrap_or(0)
    };
    let structural = count(AnomalyKind::Structural);
    let contextual = count(AnomalyKind::Contextual);
    Ok(GraphReport {
        nodes: g.n(),
        edges: adj.num_edges(),
        features: g.dim(),
        isolated,
        normal: g.n() - structural - contextual,
        structural,
        contextual,
        anomalies: structural + contextual,
    })
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = File::open(path).map_err(|e| MagError::io(path, e))?;
    Ok(BufReader::new(f)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> MagError {
    MagError::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut cols: Option<usize> = None;
    for (lineno, line) in open_lines(path)? {
        let line = line.map_err(|e| MagError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let before = data.len();
        for field in trimmed.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid number {field:?}")))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected {c} columns, found {width}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| MagError::Dimension(format!("feature matrix: {e}")))
}

fn read_edges(path: &Path, n: usize) -> Result<Adjacency> {
    let mut pairs = Vec::new();
    for (lineno, line) in open_lines(path)? {
        let line = line.map_err(|e| MagError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(path, lineno, "expected two node indices"))?;
            tok.parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid node index {tok:?}")))
        };
        let u = next()?;
        let v = next()?;
        if it.next().is_some() {
            return Err(parse_err(path, lineno, "trailing tokens after edge"));
        }
        if u == v {
            return Err(parse_err(path, lineno, format!("self-loop on node {u}")));
        }
        for x in [u, v] {
            if x >= n {
                return Err(MagError::Bounds { index: x, n });
            }
        }
        pairs.push((u, v));
    }
    Adjacency::from_edges(n, pairs)
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<AnomalyKind>> {
    let mut labels = vec![AnomalyKind::Normal; n];
    for (lineno, line) in open_lines(path)? {
        let line = line.map_err(|e| MagError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 {
            if trimmed.replace(' ', "") != "node,kind" {
                return Err(parse_err(path, lineno, "expected header \"node,kind\""));
            }
            continue;
        }
        let (node, kind) = trimmed
            .split_once(',')
            .ok_or_else(|| parse_err(path, lineno, "expected \"node,kind\""))?;
        let node: usize = node
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("invalid node index {node:?}")))?;
        if node >= n {
            return Err(MagError::Bounds { index: node, n });
        }
        labels[node] = AnomalyKind::parse(kind)
            .ok_or_else(|| parse_err(path, lineno, format!("unknown label kind {kind:?}")))?;
    }
    Ok(labels)
}

/// Reads the edge list, CSV features and optional `node,kind` label file.
///
/// The node count comes from the number of feature rows.
pub fn load_graph(
    edge_path: impl AsRef<Path>,
    feature_path: impl AsRef<Path>,
    label_path: Option<&Path>,
) -> Result<Graph> {
    let features = read_features(feature_path.as_ref())?;
    let n = features.nrows();
    let adjacency = read_edges(edge_path.as_ref(), n)?;
    let labels = match label_path {
        Some(p) => Some(read_labels(p, n)?),
        None => None,
    };
    Graph::new(adjacency, features, labels)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| MagError::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| MagError::io(path, e))
}

/// Writes the graph in the formats read by [`load_graph`]. The label file is
/// written only when the graph carries labels, and lists anomalous nodes.
pub fn save_graph(
    g: &Graph,
    edge_path: impl AsRef<Path>,
    feature_path: impl AsRef<Path>,
    label_path: Option<&Path>,
) -> Result<()> {
    let edge_path = edge_path.as_ref();
    let mut w = create(edge_path)?;
    for (u, v) in g.adjacency().edges() {
        writeln!(w, "{u} {v}").map_err(|e| MagError::io(edge_path, e))?;
    }
    w.flush().map_err(|e| MagError::io(edge_path, e))?;

    let feature_path = feature_path.as_ref();
    let mut w = create(feature_path)?;
    let mut line = String::new();
    for row in g.features().rows() {
        line.clear();
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            // `Display` for f64 prints the shortest string that round-trips.
            line.push_str(&x.to_string());
        }
        writeln!(w, "{line}").map_err(|e| MagError::io(feature_path, e))?;
    }
    w.flush().map_err(|e| MagError::io(feature_path, e))?;

    if let (Some(path), Some(labels)) = (label_path, g.labels()) {
        let mut w = create(path)?;
        writeln!(w, "node,kind").map_err(|e| MagError::io(path, e))?;
        for (i, k) in labels.iter().enumerate().filter(|(_, k)| k.is_anomaly()) {
            writeln!(w, "{i},{k}").map_err(|e| MagError::io(path, e))?;
        }
        w.flush().map_err(|e| MagError::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn star() -> Adjacency {
        Adjacency::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn reversed_pair_is_one_edge() {
        let a = Adjacency::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(a.num_edges(), 1);
        assert!(a.has_edge(0, 1) && a.has_edge(1, 0));
    }

    #[test]
    fn self_loops_and_bounds_are_rejected() {
        assert!(matches!(
            Adjacency::from_edges(3, [(1, 1)]),
            Err(MagError::Validation(_))
        ));
        assert!(matches!(
            Adjacency::from_edges(3, [(0, 3)]),
            Err(MagError::Bounds { index: 3, n: 3 })
        ));
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        let a = NormalizedAdjacency::from_adjacency(&Adjacency::empty(1));
        assert_eq!(a.to_dense(), array![[1.0]]);
    }

    #[test]
    fn single_edge_normalizes_to_halves() {
        let a = NormalizedAdjacency::from_adjacency(&Adjacency::from_edges(2, [(0, 1)]).unwrap());
        assert_eq!(a.to_dense(), array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn star_normalization_by_hand() {
        // degrees with self-loop: centre 4, leaves 2
        let a = NormalizedAdjacency::from_adjacency(&star()).to_dense();
        assert!((a[[0, 0]] - 0.25).abs() < 1e-15);
        for leaf in 1..4 {
            assert!((a[[leaf, leaf]] - 0.5).abs() < 1e-15);
            assert!((a[[0, leaf]] - 1.0 / 8f64.sqrt()).abs() < 1e-15);
            assert!((a[[leaf, 0]] - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(a[[1, 2]], 0.0);
    }

    #[test]
    fn induced_single_and_pair() {
        let adj = Adjacency::from_edges(6, [(2, 5), (1, 2)]).unwrap();
        let feats = Array2::from_shape_fn((6, 2), |(i, j)| (i * 10 + j) as f64);
        let g = Graph::new(adj, feats, None).unwrap();
        let (a, x) = induced_subgraph(&g, &[5]).unwrap();
        assert_eq!(a.to_dense(), array![[1.0]]);
        assert_eq!(x, array![[50.0, 51.0]]);
        let (a, _) = induced_subgraph(&g, &[2, 5]).unwrap();
        assert_eq!(a.to_dense(), array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn pure_padding_is_identity() {
        let adj = Adjacency::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let a = induced_adjacency(&adj, &[1, 1, 1, 1]).unwrap();
        assert_eq!(a, NormalizedAdjacency::identity(4));
    }

    #[test]
    fn induced_out_of_range() {
        let adj = Adjacency::empty(3);
        assert!(matches!(
            induced_adjacency(&adj, &[0, 7]),
            Err(MagError::Bounds { index: 7, n: 3 })
        ));
    }

    #[test]
    fn asymmetric_matrix_fails_validation() {
        let adj = Adjacency::from_raw_csr(2, vec![0, 1, 1], vec![1]);
        let g = Graph::from_parts_unchecked(adj, Array2::zeros((2, 1)), None);
        let err = validate_graph(&g).unwrap_err();
        assert!(err.to_string().contains("not symmetric"), "{err}");
    }

    #[test]
    fn report_counts_labels() {
        let mut labels = vec![AnomalyKind::Normal; 10];
        labels[1] = AnomalyKind::Structural;
        labels[2] = AnomalyKind::Contextual;
        labels[3] = AnomalyKind::Contextual;
        let g = Graph::new(Adjacency::empty(10), Array2::zeros((10, 1)), Some(labels)).unwrap();
        let r = validate_graph(&g).unwrap();
        assert_eq!(
            (r.anomalies, r.structural, r.contextual, r.isolated),
            (3, 1, 2, 10)
        );
    }
}
