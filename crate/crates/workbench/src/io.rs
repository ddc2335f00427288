//! Plain-text formats.
//!
//! - points: one point per line, comma-separated coordinates, optional
//!   `# d=<dim>` header;
//! - graphs: `u w weight` per edge, `#` comments;
//! - reports: `[section]` blocks of `key: value` lines, followed by CSV tables.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use avgstretch::geometry::dist;
use avgstretch::{Graph, PointSet};

use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, RunFailure, RunRecord, RECORD_FIELDS};

/// Dimension assumed for an empty file without a header.
const DEFAULT_DIM: usize = 2;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn read_err(e: std::io::Error, line: usize) -> Error {
    Error::parse(line, format!("read failed: {e}"))
}

pub fn read_points_from<R: BufRead>(reader: R) -> Result<PointSet> {
    let mut dim: Option<usize> = None;
    let mut coords = Vec::new();
    let mut seen_data = false;
    for (no, line) in lines(reader) {
        let line = line.map_err(|e| read_err(e, no))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(d) = comment.trim().strip_prefix("d=") {
                if seen_data || dim.is_some() {
                    return Err(Error::parse(no, "dimension header must precede the data"));
                }
                let d: usize = d.trim().parse().map_err(|_| Error::parse(no, format!("bad dimension {d:?}")))?;
                if d == 0 {
                    return Err(Error::parse(no, "dimension must be at least 1"));
                }
                dim = Some(d);
            }
            continue;
        }
        let before = coords.len();
        for field in line.split(',') {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(no, format!("bad coordinate {:?}", field.trim())))?;
            if !x.is_finite() {
                return Err(Error::parse(no, format!("non-finite coordinate {x}")));
            }
            coords.push(x);
        }
        let found = coords.len() - before;
        match dim {
            Some(d) if d != found => {
                return Err(Error::parse(no, format!("expected {d} coordinates, found {found}")));
            }
            None => dim = Some(found),
            _ => {}
        }
        seen_data = true;
    }
    Ok(PointSet::new(dim.unwrap_or(DEFAULT_DIM), coords)?)
}

pub fn write_points_to<W: Write>(mut out: W, points: &PointSet) -> std::io::Result<()> {
    writeln!(out, "# d={}", points.dim())?;
    for p in points.iter() {
        let mut first = true;
        for x in p {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{x:?}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    read_points_from(open(path)?)
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    write_points_to(create(path)?, points).map_err(|e| Error::io(path, e))
}

pub fn write_graph_to<W: Write>(mut out: W, graph: &Graph) -> std::io::Result<()> {
    writeln!(out, "# n={} m={}", graph.vertex_count(), graph.edge_count())?;
    for (u, w, len) in graph.edges() {
        writeln!(out, "{u} {w} {len:?}")?;
    }
    out.flush()
}

/// Reads an edge list over `points`. Weights must be the Euclidean lengths
/// of their edges up to a relative `1e-9`.
pub fn read_graph_from<R: BufRead>(reader: R, points: &PointSet) -> Result<Graph> {
    let n = points.len();
    let mut edges = Vec::new();
    for (no, line) in lines(reader) {
        let line = line.map_err(|e| read_err(e, no))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, w, len] = fields[..] else {
            return Err(Error::parse(no, format!("expected `u w weight`, found {} fields", fields.len())));
        };
        let vertex = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| Error::parse(no, format!("bad vertex {s:?}")))?;
            if v >= n {
                return Err(Error::parse(no, format!("vertex {v} out of range for {n} points")));
            }
            Ok(v)
        };
        let (u, w) = (vertex(u)?, vertex(w)?);
        if u == w {
            return Err(Error::parse(no, format!("self-loop at {u}")));
        }
        let len: f64 = len.parse().map_err(|_| Error::parse(no, format!("bad weight {len:?}")))?;
        let euclid = dist(points.point(u), points.point(w));
        if !((len - euclid).abs() <= 1e-9 * euclid) {
            return Err(Error::parse(no, format!("weight {len} differs from the edge length {euclid}")));
        }
        edges.push((u, w));
    }
    Ok(Graph::from_edges(points, edges))
}

pub fn read_graph(path: &Path, points: &PointSet) -> Result<Graph> {
    read_graph_from(open(path)?, points)
}

pub fn write_graph(path: &Path, graph: &Graph) -> Result<()> {
    write_graph_to(create(path)?, graph).map_err(|e| Error::io(path, e))
}

/// An experiment report: free-form metadata, run records and failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub meta: Vec<(String, String)>,
    pub result: ExperimentResult,
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// `records` as a CSV table with a header row.
pub fn records_csv(records: &[RunRecord]) -> String {
    let mut s = RECORD_FIELDS.join(",");
    s.push('\n');
    for r in records {
        s.push_str(&r.values().join(","));
        s.push('\n');
    }
    s
}

pub fn write_report_to<W: Write>(mut out: W, report: &Report) -> std::io::Result<()> {
    writeln!(out, "[meta]")?;
    for (k, v) in &report.meta {
        writeln!(out, "{}: {}", one_line(k), one_line(v))?;
    }
    for (i, r) in report.result.records.iter().enumerate() {
        writeln!(out, "\n[run {i}]")?;
        for (k, v) in RECORD_FIELDS.iter().zip(r.values()) {
            writeln!(out, "{k}: {v}")?;
        }
    }
    for (i, f) in report.result.failures.iter().enumerate() {
        writeln!(out, "\n[failure {i}]")?;
        writeln!(out, "n: {}\nseed: {}\nmessage: {}", f.n, f.seed, one_line(&f.message))?;
    }
    writeln!(out, "\n[csv runs]")?;
    out.write_all(records_csv(&report.result.records).as_bytes())?;
    out.flush()
}

pub fn read_report_from<R: Read>(mut reader: R) -> Result<Report> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| read_err(e, 0))?;
    let mut report = Report::default();
    let mut section: Option<(String, usize)> = None;
    let mut fields: HashMap<String, String> = HashMap::new();

    let finish = |section: &Option<(String, usize)>, fields: &mut HashMap<String, String>, report: &mut Report| -> Result<()> {
        let Some((name, line)) = section else { return Ok(()) };
        let at = |e: Error| Error::parse(*line, format!("section [{name}]: {e}"));
        if name.starts_with("run ") {
            report.result.records.push(RunRecord::from_fields(fields).map_err(at)?);
        } else if name.starts_with("failure ") {
            let get = |k: &str| fields.get(k).cloned().ok_or_else(|| at(Error::invalid(format!("missing {k:?}"))));
            let num = |k: &str| -> Result<u64> {
                let v = get(k)?;
                v.parse().map_err(|_| at(Error::invalid(format!("bad {k} {v:?}"))))
            };
            report.result.failures.push(RunFailure { n: num("n")? as usize, seed: num("seed")?, message: get("message")? });
        }
        fields.clear();
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            finish(&section, &mut fields, &mut report)?;
            section = Some((name.to_string(), no));
            continue;
        }
        match &section {
            None => return Err(Error::parse(no, "content before the first section")),
            Some((name, _)) if name.starts_with("csv ") => {}
            Some((name, _)) => {
                let (k, v) = line
                    .split_once(": ")
                    .or_else(|| line.strip_suffix(':').map(|k| (k, "")))
                    .ok_or_else(|| Error::parse(no, format!("expected `key: value`, found {line:?}")))?;
                if name == "meta" {
                    report.meta.push((k.to_string(), v.to_string()));
                } else if fields.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(Error::parse(no, format!("duplicate key {k:?}")));
                }
            }
        }
    }
    finish(&section, &mut fields, &mut report)?;
    Ok(report)
}

pub fn read_report(path: &Path) -> Result<Report> {
    read_report_from(open(path)?)
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    write_report_to(create(path)?, report).map_err(|e| Error::io(path, e))
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(records_csv(records).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
