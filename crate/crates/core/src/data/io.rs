//! Plain-text dataset files.
//!
//! All files are UTF-8, `#` starts a comment, ids are 0-based, and `\r\n`
//! line endings are accepted.
//!
//! ```text
//! hypergraph.txt   header `n m`, then one hyperedge per line: member ids
//! graph.txt        header `n e`, then one edge per line: `u v`
//! features.txt     header `n d`, then one row per line: either d reals, or
//!                  sparse `index:value` pairs (a blank line is a zero row)
//! labels.txt       one class id per line
//! manifest.txt     key=value lines: expected_n, expected_m, expected_max_e,
//!                  classes (all optional, other keys are kept verbatim)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{knn_hypergraph, neighbor_hypergraph, Dataset, Distance};
use crate::{Error, Hypergraph, Matrix, Result};

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &'a str) -> Self {
        Self {
            path,
            inner: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

/// A line with its comment stripped. `blank` is true only for lines that were
/// empty before stripping, so comment-only lines can be told apart.
struct Line<'a> {
    number: usize,
    content: &'a str,
    blank: bool,
}

impl<'a> Iterator for Lines<'a> {
    type Item = Line<'a>;

    fn next(&mut self) -> Option<Line<'a>> {
        let (i, raw) = self.inner.next()?;
        let content = raw.split('#').next().unwrap_or("").trim();
        Some(Line {
            number: i + 1,
            content,
            blank: raw.trim().is_empty(),
        })
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines<'_>, line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| lines.err(line, format!("cannot read {what} from `{token}`")))
}

/// Reads a two-integer header, skipping blank and comment lines before it.
fn header(lines: &mut Lines<'_>, names: (&str, &str)) -> Result<(usize, usize)> {
    for line in lines.by_ref() {
        if line.content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.content.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(lines.err(line.number, format!("expected header `{} {}`", names.0, names.1)));
        }
        let a = parse_num(lines, line.number, tokens[0], names.0)?;
        let b = parse_num(lines, line.number, tokens[1], names.1)?;
        return Ok((a, b));
    }
    Err(lines.err(0, "file has no header"))
}

fn path_label(path: &Path) -> String {
    path.display().to_string()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path_label(path),
        line: 0,
        msg: e.to_string(),
    })
}

pub fn parse_hypergraph(text: &str, path: &str) -> Result<Hypergraph> {
    let mut lines = Lines::new(text, path);
    let (n, m) = header(&mut lines, ("n", "m"))?;
    let mut edges = Vec::with_capacity(m);
    while let Some(line) = lines.next() {
        if line.content.is_empty() {
            if line.blank && edges.len() < m {
                return Err(lines.err(line.number, format!("hyperedge {} is empty", edges.len())));
            }
            continue;
        }
        if edges.len() == m {
            return Err(lines.err(line.number, format!("more hyperedges than the {m} declared")));
        }
        let mut members = Vec::new();
        for token in line.content.split_whitespace() {
            let v: usize = parse_num(&lines, line.number, token, "node id")?;
            if v >= n {
                return Err(lines.err(line.number, format!("node {v} outside [0, {n})")));
            }
            members.push(v);
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(lines.err(line.number, format!("node {} listed twice", w[0])));
        }
        edges.push(members);
    }
    if edges.len() != m {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("declared {m} hyperedges, found {}", edges.len()),
        });
    }
    Hypergraph::new(n, &edges)
}

pub fn read_hypergraph(path: &Path) -> Result<Hypergraph> {
    parse_hypergraph(&read(path)?, &path_label(path))
}

pub fn write_hypergraph(path: &Path, h: &Hypergraph) -> Result<()> {
    let mut out = format!("{} {}\n", h.n(), h.m());
    for e in 0..h.m() {
        let ids: Vec<String> = h.members(e).iter().map(ToString::to_string).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    Ok(fs::write(path, out)?)
}

pub fn parse_features(text: &str, path: &str) -> Result<Matrix> {
    let mut lines = Lines::new(text, path);
    let (n, d) = header(&mut lines, ("n", "d"))?;
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    while let Some(line) = lines.next() {
        if line.content.is_empty() && !line.blank {
            continue;
        }
        if rows == n {
            if line.content.is_empty() {
                continue;
            }
            return Err(lines.err(line.number, format!("more rows than the {n} declared")));
        }
        let start = data.len();
        data.resize(start + d, 0.0);
        let row = &mut data[start..];
        let tokens: Vec<&str> = line.content.split_whitespace().collect();
        if tokens.iter().any(|t| t.contains(':')) {
            for t in tokens {
                let (idx, val) = t
                    .split_once(':')
                    .ok_or_else(|| lines.err(line.number, "mixed dense and sparse entries"))?;
                let j: usize = parse_num(&lines, line.number, idx, "column index")?;
                if j >= d {
                    return Err(lines.err(line.number, format!("column {j} outside [0, {d})")));
                }
                row[j] = parse_num(&lines, line.number, val, "value")?;
            }
        } else if !tokens.is_empty() {
            if tokens.len() != d {
                return Err(lines.err(line.number, format!("expected {d} values, found {}", tokens.len())));
            }
            for (slot, t) in row.iter_mut().zip(tokens) {
                *slot = parse_num(&lines, line.number, t, "value")?;
            }
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("declared {n} rows, found {rows}"),
        });
    }
    Matrix::from_vec(n, d, data)
}

pub fn read_features(path: &Path) -> Result<Matrix> {
    parse_features(&read(path)?, &path_label(path))
}

/// Dense rows; values are printed in shortest round-trip form.
pub fn write_features(path: &Path, x: &Matrix) -> Result<()> {
    let mut out = format!("{} {}\n", x.rows(), x.cols());
    for i in 0..x.rows() {
        for (j, v) in x.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").expect("writing to a string");
        }
        out.push('\n');
    }
    Ok(fs::write(path, out)?)
}

pub fn parse_labels(text: &str, path: &str) -> Result<Vec<usize>> {
    let lines = Lines::new(text, path);
    let mut labels = Vec::new();
    for line in Lines::new(text, path) {
        if line.content.is_empty() {
            continue;
        }
        labels.push(parse_num(&lines, line.number, line.content, "class id")?);
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&read(path)?, &path_label(path))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").expect("writing to a string");
    }
    Ok(fs::write(path, out)?)
}

pub fn parse_graph(text: &str, path: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = Lines::new(text, path);
    let (n, e) = header(&mut lines, ("n", "e"))?;
    let mut edges = Vec::with_capacity(e);
    while let Some(line) = lines.next() {
        if line.content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.content.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(lines.err(line.number, "expected an edge `u v`"));
        }
        let u: usize = parse_num(&lines, line.number, tokens[0], "node id")?;
        let v: usize = parse_num(&lines, line.number, tokens[1], "node id")?;
        if let Some(bad) = [u, v].into_iter().find(|&x| x >= n) {
            return Err(lines.err(line.number, format!("endpoint {bad} outside [0, {n})")));
        }
        edges.push((u, v));
    }
    if edges.len() != e {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("declared {e} edges, found {}", edges.len()),
        });
    }
    Ok((n, edges))
}

pub fn read_graph(path: &Path) -> Result<(usize, Vec<(usize, usize)>)> {
    parse_graph(&read(path)?, &path_label(path))
}

pub fn write_graph(path: &Path, n: usize, edges: &[(usize, usize)]) -> Result<()> {
    let mut out = format!("{n} {}\n", edges.len());
    for (u, v) in edges {
        writeln!(out, "{u} {v}").expect("writing to a string");
    }
    Ok(fs::write(path, out)?)
}

/// Declared statistics of a dataset, checked after loading.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub expected_n: Option<usize>,
    pub expected_m: Option<usize>,
    pub expected_max_e: Option<usize>,
    pub classes: Option<usize>,
    /// Keys this crate does not interpret.
    pub other: BTreeMap<String, String>,
}

impl Manifest {
    /// Compares the declared statistics with a loaded hypergraph.
    pub fn check(&self, h: &Hypergraph) -> Result<()> {
        let stats = h.structure_stats();
        let checks = [
            ("expected_n", self.expected_n, stats.n),
            ("expected_m", self.expected_m, stats.m),
            ("expected_max_e", self.expected_max_e, stats.max_edge_degree),
        ];
        for (field, expected, found) in checks {
            if let Some(expected) = expected {
                if expected != found {
                    return Err(Error::StatMismatch { field, expected, found });
                }
            }
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str, path: &str) -> Result<Manifest> {
    let lines = Lines::new(text, path);
    let mut manifest = Manifest::default();
    for line in Lines::new(text, path) {
        if line.content.is_empty() {
            continue;
        }
        let (key, value) = line
            .content
            .split_once('=')
            .ok_or_else(|| lines.err(line.number, "expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        let slot = match key {
            "expected_n" => &mut manifest.expected_n,
            "expected_m" => &mut manifest.expected_m,
            "expected_max_e" => &mut manifest.expected_max_e,
            "classes" => &mut manifest.classes,
            _ => {
                manifest.other.insert(key.to_string(), value.to_string());
                continue;
            }
        };
        *slot = Some(parse_num(&lines, line.number, value, key)?);
    }
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    parse_manifest(&read(path)?, &path_label(path))
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut out = String::new();
    let fields = [
        ("expected_n", manifest.expected_n),
        ("expected_m", manifest.expected_m),
        ("expected_max_e", manifest.expected_max_e),
        ("classes", manifest.classes),
    ];
    for (key, value) in fields {
        if let Some(v) = value {
            writeln!(out, "{key}={v}").expect("writing to a string");
        }
    }
    for (key, value) in &manifest.other {
        writeln!(out, "{key}={value}").expect("writing to a string");
    }
    Ok(fs::write(path, out)?)
}

/// Where the hypergraph of a dataset comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    /// A hyperedge list file.
    Hyperedges(PathBuf),
    /// Neighborhoods in a graph edge-list file.
    Neighbors { graph: PathBuf, hops: usize },
    /// Nearest neighbors in feature space.
    Knn { k: usize, distance: Distance },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFiles {
    pub construction: Construction,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub manifest: Option<PathBuf>,
}

impl DatasetFiles {
    /// The standard layout of a dataset directory. A `knn` choice overrides
    /// the files; otherwise `hypergraph.txt` is preferred over `graph.txt`.
    pub fn in_dir(dir: &Path, hops: usize, knn: Option<(usize, Distance)>) -> Result<Self> {
        let hypergraph = dir.join("hypergraph.txt");
        let graph = dir.join("graph.txt");
        let construction = match knn {
            Some((k, distance)) => Construction::Knn { k, distance },
            None if hypergraph.is_file() => Construction::Hyperedges(hypergraph),
            None if graph.is_file() => Construction::Neighbors { graph, hops },
            None => {
                return Err(Error::Config(format!(
                    "{} has neither hypergraph.txt nor graph.txt",
                    dir.display()
                )))
            }
        };
        let manifest = dir.join("manifest.txt");
        Ok(Self {
            construction,
            features: dir.join("features.txt"),
            labels: dir.join("labels.txt"),
            manifest: manifest.is_file().then_some(manifest),
        })
    }
}

/// Loads, builds the hypergraph, checks the manifest, and draws the split.
pub fn load_dataset(files: &DatasetFiles, split_seed: u64) -> Result<Dataset> {
    let features = read_features(&files.features)?;
    let labels = read_labels(&files.labels)?;
    let hypergraph = match &files.construction {
        Construction::Hyperedges(path) => read_hypergraph(path)?,
        Construction::Neighbors { graph, hops } => {
            let (n, edges) = read_graph(graph)?;
            neighbor_hypergraph(n, &edges, *hops)?
        }
        Construction::Knn { k, distance } => knn_hypergraph(&features, *k, *distance)?,
    };
    let manifest = match &files.manifest {
        Some(path) => read_manifest(path)?,
        None => Manifest::default(),
    };
    manifest.check(&hypergraph)?;
    Dataset::new(hypergraph, features, labels, manifest.classes, split_seed)
}

pub fn load_dir(dir: &Path, split_seed: u64) -> Result<Dataset> {
    load_dataset(&DatasetFiles::in_dir(dir, 1, None)?, split_seed)
}

/// Writes `hypergraph.txt`, `features.txt`, `labels.txt` and a manifest with
/// the dataset's own statistics.
pub fn write_dir(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_hypergraph(&dir.join("hypergraph.txt"), &dataset.hypergraph)?;
    write_features(&dir.join("features.txt"), &dataset.features)?;
    write_labels(&dir.join("labels.txt"), &dataset.labels)?;
    let stats = dataset.hypergraph.structure_stats();
    let manifest = Manifest {
        expected_n: Some(stats.n),
        expected_m: Some(stats.m),
        expected_max_e: Some(stats.max_edge_degree),
        classes: Some(dataset.classes),
        other: BTreeMap::new(),
    };
    write_manifest(&dir.join("manifest.txt"), &manifest)
}
