//! Line-oriented text formats for graphs and grid subsets.
//!
//! All three share the conventions: `#` starts a comment, blank lines are
//! skipped, fields are whitespace-separated 0-based indices.
//!
//! * directed `k`-graph: header `k n`, then one edge per line as `k` vertex
//!   indices in `[n]`;
//! * `k`-partite `k`-graph: header `k n_1 ... n_k`, then edges with
//!   coordinate `i` in `[n_i]`;
//! * grid subset: header `k m`, then one occupied cell per line as `k`
//!   indices in `[m]`.

use crate::error::{Error, Result};
use crate::instances::{DirectedKGraph, GridSubset, KPartiteKGraph};

struct Lines<'a> {
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn significant_lines(text: &str) -> Lines<'_> {
    let rows = text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("");
            let fields: Vec<&str> = body.split_whitespace().collect();
            (!fields.is_empty()).then_some((i + 1, fields))
        })
        .collect();
    Lines { rows }
}

fn parse_fields(line: usize, fields: &[&str]) -> Result<Vec<u32>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<u32>().map_err(|_| Error::Parse {
                line,
                message: format!("expected a nonnegative integer, got {f:?}"),
            })
        })
        .collect()
}

/// Parse the directed `k`-graph format.
pub fn parse_digraph(text: &str) -> Result<DirectedKGraph> {
    let lines = significant_lines(text);
    let Some((header_line, header)) = lines.rows.first() else {
        return Err(Error::Parse { line: 1, message: "missing `k n` header".into() });
    };
    let header = parse_fields(*header_line, header)?;
    if header.len() != 2 {
        return Err(Error::Parse {
            line: *header_line,
            message: format!("digraph header is `k n`, got {} fields", header.len()),
        });
    }
    let (k, n) = (header[0], header[1]);
    let mut edges = Vec::new();
    for (line, fields) in &lines.rows[1..] {
        let edge = parse_fields(*line, fields)?;
        if edge.len() != k as usize {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {k} vertices per edge, got {}", edge.len()),
            });
        }
        edges.push(edge);
    }
    DirectedKGraph::new(n, k, edges)
}

/// Parse the `k`-partite format.
pub fn parse_kpartite(text: &str) -> Result<KPartiteKGraph> {
    let lines = significant_lines(text);
    let Some((header_line, header)) = lines.rows.first() else {
        return Err(Error::Parse { line: 1, message: "missing `k n_1 ... n_k` header".into() });
    };
    let header = parse_fields(*header_line, header)?;
    if header.len() < 3 || header[0] as usize != header.len() - 1 {
        return Err(Error::Parse {
            line: *header_line,
            message: "k-partite header is `k n_1 ... n_k` with k >= 2".into(),
        });
    }
    let class_sizes = header[1..].to_vec();
    let k = header[0] as usize;
    let mut edges = Vec::new();
    for (line, fields) in &lines.rows[1..] {
        let edge = parse_fields(*line, fields)?;
        if edge.len() != k {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {k} coordinates per edge, got {}", edge.len()),
            });
        }
        edges.push(edge);
    }
    KPartiteKGraph::new(class_sizes, edges)
}

/// Parse the grid format.
pub fn parse_grid(text: &str) -> Result<GridSubset> {
    let lines = significant_lines(text);
    let Some((header_line, header)) = lines.rows.first() else {
        return Err(Error::Parse { line: 1, message: "missing `k m` header".into() });
    };
    let header = parse_fields(*header_line, header)?;
    if header.len() != 2 {
        return Err(Error::Parse {
            line: *header_line,
            message: format!("grid header is `k m`, got {} fields", header.len()),
        });
    }
    let (k, m) = (header[0], header[1]);
    let mut cells = Vec::new();
    for (line, fields) in &lines.rows[1..] {
        let cell = parse_fields(*line, fields)?;
        if cell.len() != k as usize {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {k} indices per cell, got {}", cell.len()),
            });
        }
        cells.push(cell);
    }
    GridSubset::new(k, m, cells)
}

/// Sniff whether a file is a digraph or a k-partite instance by its header
/// arity (`k n` has two fields, `k n_1 ... n_k` has `k + 1 >= 3`).
pub fn header_field_count(text: &str) -> usize {
    significant_lines(text).rows.first().map(|(_, f)| f.len()).unwrap_or(0)
}
