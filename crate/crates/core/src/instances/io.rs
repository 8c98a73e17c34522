//! `sdar-instance/1` text format.
//!
//! ```text
//! sdar-instance/1
//! units length=workspace angle=rad
//! label S3
//! seed 7
//! workspace 1 0.6
//! objects 3
//! # id half_width half_height start_x start_y start_theta goal_x goal_y goal_theta
//! 0 0.04 0.04 0.2 0.3 0 0.25 0.3 0
//! ...
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so a save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Instance, Label};
use crate::depgraph::{Arrangement, ObjectShape};
use crate::geom::{Pose2, Workspace};

pub const FORMAT_VERSION: &str = "sdar-instance/1";
const UNITS: &str = "length=workspace angle=rad";
const TABLE_HEADER: &str =
    "# id half_width half_height start_x start_y start_theta goal_x goal_y goal_theta";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("infeasible instance: {0}")]
    Feasibility(String),
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn format_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{FORMAT_VERSION}");
    let _ = writeln!(s, "units {UNITS}");
    let _ = writeln!(s, "label {}", inst.label);
    let _ = writeln!(s, "seed {}", inst.seed);
    let _ = writeln!(s, "workspace {} {}", inst.workspace.width, inst.workspace.height);
    let _ = writeln!(s, "objects {}", inst.len());
    let _ = writeln!(s, "{TABLE_HEADER}");
    for (id, shape) in inst.shapes.iter().enumerate() {
        let st = inst.start.pose(id).expect("instances are on-table");
        let go = inst.goal.pose(id).expect("instances are on-table");
        let _ = writeln!(
            s,
            "{id} {} {} {} {} {} {} {} {}",
            shape.half_width, shape.half_height, st.x, st.y, st.theta, go.x, go.y, go.theta
        );
    }
    s
}

fn parse_f64(line: usize, field: &str, tok: Option<&str>) -> Result<f64, InstanceError> {
    let tok = tok.ok_or_else(|| parse_err(line, field, "missing value"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, field, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, field, "value must be finite"));
    }
    Ok(v)
}

/// Parses and validates instance text.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, FORMAT_VERSION)) => {}
        Some((n, other)) => {
            return Err(parse_err(n, "version", format!("expected `{FORMAT_VERSION}`, found `{other}`")))
        }
        None => return Err(parse_err(1, "version", "empty file")),
    }

    let mut label: Option<Label> = None;
    let mut seed: Option<u64> = None;
    let mut workspace: Option<Workspace> = None;
    let mut count: Option<(usize, usize)> = None;
    for (n, l) in lines.by_ref() {
        let mut toks = l.split_whitespace();
        let key = toks.next().unwrap_or_default();
        match key {
            "units" => {}
            "label" => {
                let v = toks.next().ok_or_else(|| parse_err(n, "label", "missing value"))?;
                label = Some(v.parse().map_err(|e: String| parse_err(n, "label", e))?);
            }
            "seed" => {
                let v = toks.next().ok_or_else(|| parse_err(n, "seed", "missing value"))?;
                seed = Some(
                    v.parse()
                        .map_err(|_| parse_err(n, "seed", format!("`{v}` is not an unsigned integer")))?,
                );
            }
            "workspace" => {
                let w = parse_f64(n, "workspace.width", toks.next())?;
                let h = parse_f64(n, "workspace.height", toks.next())?;
                if w <= 0.0 || h <= 0.0 {
                    return Err(parse_err(n, "workspace", "dimensions must be positive"));
                }
                workspace = Some(Workspace::new(w, h));
            }
            "objects" => {
                let v = toks.next().ok_or_else(|| parse_err(n, "objects", "missing value"))?;
                let k = v
                    .parse()
                    .map_err(|_| parse_err(n, "objects", format!("`{v}` is not a count")))?;
                count = Some((k, n));
                break;
            }
            other => return Err(parse_err(n, "key", format!("unknown key `{other}`"))),
        }
    }
    let label = label.ok_or_else(|| parse_err(0, "label", "missing"))?;
    let seed = seed.ok_or_else(|| parse_err(0, "seed", "missing"))?;
    let workspace = workspace.ok_or_else(|| parse_err(0, "workspace", "missing"))?;
    let (count, count_line) = count.ok_or_else(|| parse_err(0, "objects", "missing"))?;

    let mut shapes = Vec::with_capacity(count);
    let mut start = Vec::with_capacity(count);
    let mut goal = Vec::with_capacity(count);
    for (n, l) in lines {
        let mut toks = l.split_whitespace();
        let id_tok = toks.next().unwrap_or_default();
        let id: usize = id_tok
            .parse()
            .map_err(|_| parse_err(n, "id", format!("`{id_tok}` is not an object id")))?;
        if id != shapes.len() {
            return Err(parse_err(n, "id", format!("expected id {}, found {id}", shapes.len())));
        }
        let mut next = |field: &str| parse_f64(n, field, toks.next());
        let hw = next("half_width")?;
        let hh = next("half_height")?;
        if hw <= 0.0 || hh <= 0.0 {
            return Err(parse_err(n, "half_width", "half-extents must be positive"));
        }
        let s = Pose2 { x: next("start_x")?, y: next("start_y")?, theta: next("start_theta")? };
        let g = Pose2 { x: next("goal_x")?, y: next("goal_y")?, theta: next("goal_theta")? };
        if toks.next().is_some() {
            return Err(parse_err(n, "row", "trailing fields"));
        }
        shapes.push(ObjectShape::new(hw, hh));
        start.push(s);
        goal.push(g);
    }
    if shapes.len() != count {
        return Err(parse_err(
            count_line,
            "objects",
            format!("declared {count} objects, found {}", shapes.len()),
        ));
    }

    let inst = Instance {
        label,
        seed,
        workspace,
        shapes,
        start: Arrangement::on_table(start),
        goal: Arrangement::on_table(goal),
    };
    inst.validate()
        .map_err(|e| InstanceError::Feasibility(e.to_string()))?;
    Ok(inst)
}

pub fn save(inst: &Instance, path: &Path) -> Result<(), InstanceError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| InstanceError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, format_instance(inst)).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<Instance, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text)
}
