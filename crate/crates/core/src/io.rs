//! Edge-list and phase files, and deterministic report emission.
//!
//! Edge-list format: an optional run of `#` comment lines, a header `n m`,
//! then `m` lines `u v w`. Spin graphs are written the same way with `w = 1`
//! and a leading `# spin base_n=<n> k=<k>` line.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::dynamics::PhaseVector;
use crate::graph::{Coupling, GraphError, SpinGraph, WeightedGraph};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Validation { line: usize, source: GraphError },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields<const N: usize>(line: usize, text: &str) -> Result<[u64; N], IoError> {
    let parsed: Vec<u64> = text
        .split_whitespace()
        .map(|t| {
            t.parse::<u64>().map_err(|_| IoError::Parse { line, msg: format!("not a non-negative integer: {t:?}") })
        })
        .collect::<Result<_, _>>()?;
    parsed
        .try_into()
        .map_err(|v: Vec<u64>| IoError::Parse { line, msg: format!("expected {N} fields, found {}", v.len()) })
}

pub fn parse_graph_str(text: &str) -> Result<WeightedGraph, IoError> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or(IoError::Parse { line: 1, msg: "missing `n m` header".into() })?;
    let [n, m] = fields::<2>(header_line, header)?;
    let mut edges = Vec::with_capacity(m as usize);
    let mut line_of = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let (line, text) = lines.next().ok_or(IoError::Parse {
            line: text.lines().count() + 1,
            msg: format!("expected {m} edges, found {}", edges.len()),
        })?;
        let [u, v, w] = fields::<3>(line, text)?;
        let w = u32::try_from(w).map_err(|_| IoError::Parse { line, msg: format!("weight {w} too large") })?;
        edges.push((u as usize, v as usize, w));
        line_of.push(line);
    }
    if let Some((line, _)) = lines.next() {
        return Err(IoError::Parse { line, msg: format!("more than the declared {m} edges") });
    }
    WeightedGraph::new(n as usize, edges).map_err(|source| {
        let index = match source {
            GraphError::LoopEdge { index, .. }
            | GraphError::DuplicateEdge { index, .. }
            | GraphError::ZeroWeight { index, .. }
            | GraphError::VertexOutOfRange { index, .. } => index,
            _ => 0,
        };
        IoError::Validation { line: line_of.get(index).copied().unwrap_or(header_line), source }
    })
}

pub fn parse_graph_file(path: impl AsRef<Path>) -> Result<WeightedGraph, IoError> {
    parse_graph_str(&fs::read_to_string(path)?)
}

pub fn write_graph(g: &impl Coupling) -> String {
    let mut out = format!("{} {}\n", g.order(), g.edges().len());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
    }
    out
}

pub fn write_spin_graph(s: &SpinGraph) -> String {
    format!("# spin base_n={} k={}\n{}", s.base().n(), s.k(), write_graph(s))
}

/// One angle (radians) per line.
pub fn parse_phases_str(text: &str) -> Result<PhaseVector, IoError> {
    content_lines(text)
        .map(|(line, t)| t.parse::<f64>().map_err(|_| IoError::Parse { line, msg: format!("not an angle: {t:?}") }))
        .collect::<Result<Vec<_>, _>>()
        .map(PhaseVector::new)
}

pub fn parse_phases_file(path: impl AsRef<Path>) -> Result<PhaseVector, IoError> {
    parse_phases_str(&fs::read_to_string(path)?)
}

pub fn write_phases(theta: &PhaseVector) -> String {
    theta.as_slice().iter().map(|&x| format_f64(x) + "\n").collect()
}

/// 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct ReportFormatter(PrettyFormatter<'static>);

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON, fields in declaration order, floats with
/// 17 significant digits and non-finite floats as `null`.
pub fn to_json_string(value: &impl Serialize) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ReportFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json(value: &impl Serialize, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::spin;

    #[test]
    fn parses_minimal_file() {
        let g = parse_graph_str("2 1\n0 1 3\n").unwrap();
        assert_eq!(g, WeightedGraph::new(2, [(0, 1, 3)]).unwrap());
    }

    #[test]
    fn tolerates_comments_and_trailing_space() {
        let g = parse_graph_str("# hello\n3 2  \n\n0 1 1 \n# mid\n1 2 2\t\n").unwrap();
        assert_eq!(g.total_weight(), 3);
    }

    #[test]
    fn loop_reported_with_line() {
        let err = parse_graph_str("2 1\n0 0 1\n").unwrap_err();
        assert!(matches!(err, IoError::Validation { line: 2, source: GraphError::LoopEdge { .. } }), "{err:?}");
        let err = parse_graph_str("# c\n3 2\n0 1 1\n\n1 0 1\n").unwrap_err();
        assert!(matches!(err, IoError::Validation { line: 5, source: GraphError::DuplicateEdge { .. } }), "{err:?}");
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_graph_str(""), Err(IoError::Parse { .. })));
        assert!(matches!(parse_graph_str("2 1\n0 1\n"), Err(IoError::Parse { line: 2, .. })));
        assert!(matches!(parse_graph_str("2 2\n0 1 1\n"), Err(IoError::Parse { .. })));
        assert!(matches!(parse_graph_str("2 1\n0 1 1\n1 0 1\n"), Err(IoError::Parse { line: 3, .. })));
        assert!(matches!(parse_graph_str("2 1\n0 -1 1\n"), Err(IoError::Parse { line: 2, .. })));
    }

    #[test]
    fn spin_file_reads_back_as_unit_weights() {
        let g = WeightedGraph::new(3, [(0, 1, 2), (1, 2, 1)]).unwrap();
        let s = spin(&g, 2).unwrap();
        let text = write_spin_graph(&s);
        assert!(text.starts_with("# spin base_n=3 k=2\n6 "));
        assert_eq!(parse_graph_str(&text).unwrap(), s.to_weighted());
    }

    #[test]
    fn phases_round_trip() {
        let theta = PhaseVector::new(vec![0.1, -2.5, std::f64::consts::PI]);
        assert_eq!(parse_phases_str(&write_phases(&theta)).unwrap(), theta);
        assert!(parse_phases_str("0.1\nabc\n").is_err());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        #[derive(Serialize)]
        struct S {
            x: f64,
            y: f64,
        }
        let json = to_json_string(&S { x: 0.1, y: f64::NAN }).unwrap();
        assert!(json.contains("\"x\": 1.0000000000000001e-1"), "{json}");
        assert!(json.contains("\"y\": null"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.1));
    }
}
