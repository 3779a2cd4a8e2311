//! Plain-text formats: graph specs, configurations and trajectory rows.
//!
//! Vertices are 1-based in every file. Blank lines and `#` comments are
//! ignored on input; writers emit no comments, so write → read → write is
//! the identity.

use std::fmt::Write as _;

use thiserror::Error;

use crate::error::GraphError;
use crate::geometry::{Configuration, Point};
use crate::graph::{HennebergStep, TriangulatedLamanGraph};
use crate::integrate::Trajectory;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_field<F: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<F, ParseError> {
    token
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} `{token}`")))
}

/// First line `N`, then one `v j k` line per Henneberg step.
pub fn write_graph(graph: &TriangulatedLamanGraph) -> String {
    let mut out = format!("{}\n", graph.vertex_count());
    for s in graph.steps() {
        let _ = writeln!(out, "{} {} {}", s.new_vertex + 1, s.parent.0 + 1, s.parent.1 + 1);
    }
    out
}

pub fn read_graph(text: &str) -> Result<TriangulatedLamanGraph, ParseError> {
    let mut lines = content_lines(text);
    let (first, header) = lines.next().ok_or_else(|| ParseError::new(1, "empty graph spec"))?;
    let n: usize = parse_field(header, first, "vertex count")?;
    let mut steps = Vec::new();
    let mut last_line = first;
    for (line, content) in lines {
        last_line = line;
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [v, j, k] = fields.as_slice() else {
            return Err(ParseError::new(line, format!("expected `v j k`, found {} field(s)", fields.len())));
        };
        let mut ids = [0usize; 3];
        for (slot, tok) in ids.iter_mut().zip([v, j, k]) {
            let id: usize = parse_field(tok, line, "vertex")?;
            if id == 0 {
                return Err(ParseError::new(line, "vertices are numbered from 1"));
            }
            *slot = id - 1;
        }
        steps.push((line, HennebergStep::new(ids[0], ids[1], ids[2])));
    }
    if n < 2 {
        return Err(ParseError::new(first, GraphError::TooFewVertices(n).to_string()));
    }
    if steps.len() != n - 2 {
        return Err(ParseError::new(
            last_line,
            format!("{} vertices need {} step(s), found {}", n, n - 2, steps.len()),
        ));
    }
    let plain: Vec<HennebergStep> = steps.iter().map(|(_, s)| *s).collect();
    TriangulatedLamanGraph::build(&plain).map_err(|e| {
        let line = match &e {
            GraphError::MalformedStep { index, .. } => steps[*index].0,
            _ => first,
        };
        ParseError::new(line, e.to_string())
    })
}

/// One `x y` row per agent.
pub fn write_configuration<T: Scalar>(p: &Configuration<T>) -> String {
    let mut out = String::new();
    for q in p.points() {
        let _ = writeln!(out, "{} {}", q.x, q.y);
    }
    out
}

pub fn read_configuration<T: Scalar>(text: &str) -> Result<Configuration<T>, ParseError> {
    let mut pts = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [x, y] = fields.as_slice() else {
            return Err(ParseError::new(line, format!("expected `x y`, found {} field(s)", fields.len())));
        };
        let x: T = parse_field(x, line, "coordinate")?;
        let y: T = parse_field(y, line, "coordinate")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(ParseError::new(line, "coordinates must be finite"));
        }
        pts.push(Point::new(x, y));
    }
    Ok(Configuration::new(pts))
}

/// `t,x1,y1,…,xN,yN,phi,grad_inf` header followed by one row per sample.
pub fn write_trajectory_csv<T: Scalar>(traj: &Trajectory<T>) -> String {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x{i},y{i}");
    }
    out.push_str(",phi,grad_inf\n");
    for k in 0..traj.len() {
        let _ = write!(out, "{}", traj.times[k]);
        for q in traj.states[k].points() {
            let _ = write!(out, ",{},{}", q.x, q.y);
        }
        let _ = writeln!(out, ",{},{}", traj.potentials[k], traj.gradient_norms[k]);
    }
    out
}

/// Inverse of [`write_trajectory_csv`]; run metadata not stored in the rows
/// (`converged`, `steps_taken`) comes back false and zero.
pub fn read_trajectory_csv<T: Scalar>(text: &str) -> Result<Trajectory<T>, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
    let columns = header.split(',').count();
    if columns < 3 || (columns - 3) % 2 != 0 || !header.starts_with("t,") {
        return Err(ParseError::new(1, "header must be t,x1,y1,…,phi,grad_inf"));
    }
    let n = (columns - 3) / 2;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        potentials: Vec::new(),
        gradient_norms: Vec::new(),
        converged: false,
        steps_taken: 0,
    };
    for (line, content) in lines.filter(|(_, l)| !l.is_empty()) {
        let values = content
            .split(',')
            .map(|tok| parse_field::<T>(tok.trim(), line, "value"))
            .collect::<Result<Vec<T>, _>>()?;
        if values.len() != columns {
            return Err(ParseError::new(line, format!("expected {columns} columns, found {}", values.len())));
        }
        traj.times.push(values[0]);
        traj.states.push(Configuration::new(
            (0..n).map(|i| Point::new(values[1 + 2 * i], values[2 + 2 * i])).collect(),
        ));
        traj.potentials.push(values[columns - 2]);
        traj.gradient_norms.push(values[columns - 1]);
    }
    Ok(traj)
}
