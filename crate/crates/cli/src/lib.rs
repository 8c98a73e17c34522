//! Library side of the `sdar` command-line tool.
//!
//! Each subcommand lives in its own module and returns a [`CliError`] that
//! maps onto the process exit code.

pub mod bench;
pub mod gen;
pub mod plan;
pub mod render;

use std::fmt;

use sdar_core::geom::Workspace;
use sdar_core::PlannerConfig;

/// Exit status for a successful command.
pub const EXIT_OK: i32 = 0;
/// Exit status when planning fails on at least one instance.
pub const EXIT_PLANNING: i32 = 1;
/// Exit status for unreadable or malformed input and bad arguments.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable files, malformed instances or traces.
    Input(anyhow::Error),
    /// The planner ran but did not solve the instance.
    Planning(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Planning(_) => EXIT_PLANNING,
        }
    }

    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        CliError::Input(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "input error: {e:#}"),
            CliError::Planning(m) => write!(f, "planning failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Planner overrides; unset fields keep the defaults for the workspace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlannerOptions {
    pub k_buffers: Option<usize>,
    pub clearance: Option<f64>,
    pub dt: Option<f64>,
}

impl PlannerOptions {
    pub fn config(&self, ws: &Workspace) -> CliResult<PlannerConfig> {
        let mut cfg = PlannerConfig::for_workspace(ws);
        if let Some(k) = self.k_buffers {
            if k == 0 {
                return Err(CliError::Input(anyhow::anyhow!("--k-buffers must be at least 1")));
            }
            cfg.k_buffers = k;
        }
        if let Some(c) = self.clearance {
            if !(c.is_finite() && c >= 0.0) {
                return Err(CliError::Input(anyhow::anyhow!("--clearance must be a finite non-negative number")));
            }
            cfg = cfg.with_clearance(c);
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= 1.0) {
                return Err(CliError::Input(anyhow::anyhow!("--dt must lie in (0, 1]")));
            }
            cfg.dt = dt;
        }
        Ok(cfg)
    }
}
