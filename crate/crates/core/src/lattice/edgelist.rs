//! Versioned text format listing the open edges of a window.
//!
//! ```text
//! # ersl v1 d=2 n=<n> model=<kind> seed=<seed> p=<p> q=<q> sigma=<sigma> L=<L>
//! H u v      open edge (u,v)-(u+1,v)
//! V u v      open edge (u,v)-(u,v+1)
//! ```
//! Closed edges are omitted. Grids without provenance are written with
//! `model=custom` and read back without it.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::EdgeGrid;
use crate::generators::{ModelKind, RealizationSpec};
use crate::params::ModelParams;

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> EdgeListError {
    EdgeListError::Parse {
        line,
        message: message.into(),
    }
}

pub fn header(grid: &EdgeGrid) -> String {
    let n = grid.n();
    match grid.provenance() {
        Some(spec) => format!(
            "# ersl v1 d=2 n={n} model={} seed={} p={} q={} sigma={} L={}",
            spec.model, spec.seed, spec.params.p, spec.params.q, spec.params.sigma, spec.params.fill_cutoff
        ),
        None => format!("# ersl v1 d=2 n={n} model=custom seed=0 p=0 q=0 sigma=0 L=0"),
    }
}

pub fn write_edge_list<W: Write>(grid: &EdgeGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", header(grid))?;
    for (u, v) in grid.open_h_edges() {
        writeln!(out, "H {u} {v}")?;
    }
    for (u, v) in grid.open_v_edges() {
        writeln!(out, "V {u} {v}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<EdgeGrid, EdgeListError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| parse_err(1, "empty input"))??;
    let mut tokens = first.split_whitespace();
    if tokens.next() != Some("#") || tokens.next() != Some("ersl") || tokens.next() != Some("v1") {
        return Err(parse_err(1, "expected `# ersl v1` header"));
    }
    let fields: HashMap<&str, &str> = tokens
        .map(|t| t.split_once('=').ok_or_else(|| parse_err(1, format!("malformed field `{t}`"))))
        .collect::<Result<_, _>>()?;
    let get = |key: &str| fields.get(key).copied().ok_or_else(|| parse_err(1, format!("missing `{key}`")));
    fn num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, EdgeListError> {
        raw.parse().map_err(|_| parse_err(1, format!("bad value for `{key}`: {raw}")))
    }
    if get("d")? != "2" {
        return Err(parse_err(1, "only d=2 is supported"));
    }
    let n: usize = num("n", get("n")?)?;
    if n == 0 {
        return Err(parse_err(1, "n must be at least 1"));
    }
    let model = get("model")?;
    let provenance = if model == "custom" {
        None
    } else {
        let kind: ModelKind = model.parse().map_err(|e: String| parse_err(1, e))?;
        let params = ModelParams::new(
            num("p", get("p")?)?,
            num("q", get("q")?)?,
            num("sigma", get("sigma")?)?,
            num("L", get("L")?)?,
        );
        Some(RealizationSpec::new(params, n as u64, num("seed", get("seed")?)?, kind))
    };

    let mut grid = EdgeGrid::closed(n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [kind, u, v] = parts.as_slice() else {
            return Err(parse_err(lineno, "expected `H u v` or `V u v`"));
        };
        let u: usize = u.parse().map_err(|_| parse_err(lineno, "bad coordinate"))?;
        let v: usize = v.parse().map_err(|_| parse_err(lineno, "bad coordinate"))?;
        match *kind {
            "H" if u < n && v <= n => grid.set_h(u, v, true),
            "V" if u <= n && v < n => grid.set_v(u, v, true),
            "H" | "V" => return Err(parse_err(lineno, "coordinate outside the window")),
            other => return Err(parse_err(lineno, format!("unknown edge kind `{other}`"))),
        }
    }
    Ok(match provenance {
        Some(spec) => grid.with_provenance(spec),
        None => grid,
    })
}
