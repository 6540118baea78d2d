//! Body JSON: `{"dim": d, "vertices": [[...], ...]}`.

use serde::Deserialize;

use super::Polytope;
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

/// Formats `x` with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes the vertex list of `p`.
pub fn body_to_json(p: &Polytope) -> String {
    let rows: Vec<String> = p
        .vertices()
        .iter()
        .map(|v| format!("[{}]", v.iter().map(|&c| fmt_f64(c)).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("{{\"dim\": {}, \"vertices\": [{}]}}", p.dim(), rows.join(", "))
}

/// Parses a body; the hull must be full-dimensional in `dim` (2 or 3).
pub fn body_from_json(text: &str) -> Result<Polytope> {
    let f: BodyFile = serde_json::from_str(text)?;
    if !(2..=3).contains(&f.dim) {
        return Err(Error::UnsupportedDimension(f.dim));
    }
    Polytope::from_points(&f.vertices, f.dim)
}
