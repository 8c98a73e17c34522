//! `sdar plan`: solve one instance and write its trace.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sdar_core::instances::load;
use sdar_core::{run_instance, verify_trace, Instance, Run, Rung};

use crate::{CliError, CliResult, PlannerOptions};

#[derive(Debug)]
pub struct PlanOutcome {
    pub instance: Instance,
    pub run: Run,
    /// `None` when the trace passed verification.
    pub violation: Option<String>,
    pub trace_path: Option<PathBuf>,
}

impl PlanOutcome {
    pub fn succeeded(&self) -> bool {
        self.run.metrics.success && self.violation.is_none()
    }

    /// `key=value` lines describing the run.
    pub fn summary(&self) -> String {
        let m = &self.run.metrics;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("instance", self.instance.name());
        kv("hash", self.instance.hash());
        kv("objects", self.instance.len().to_string());
        kv("success", m.success.to_string());
        kv("verified", self.violation.is_none().to_string());
        kv("actions", m.actions.to_string());
        kv("buffers_used", m.buffers_used.to_string());
        kv("sync_steps", m.sync_steps.to_string());
        kv("makespan", format!("{:.6}", m.makespan));
        for rung in Rung::ALL {
            kv(rung.name(), m.fallbacks(rung).to_string());
        }
        let seq: Vec<String> = m.sequence.iter().map(|i| i.to_string()).collect();
        kv("sequence", seq.join(","));
        kv("planning_seconds", format!("{:.6}", self.run.planning_time.as_secs_f64()));
        if let Some(f) = &m.failure {
            kv("failure", f.clone());
        }
        if let Some(v) = &self.violation {
            kv("violation", v.clone());
        }
        if let Some(p) = &self.trace_path {
            kv("trace", p.display().to_string());
        }
        s
    }

    /// Error to report when the run did not succeed.
    pub fn failure(&self) -> Option<CliError> {
        if let Some(f) = &self.run.metrics.failure {
            return Some(CliError::Planning(f.clone()));
        }
        self.violation
            .as_ref()
            .map(|v| CliError::Planning(format!("trace verification: {v}")))
    }
}

/// Default trace location: next to the instance, with a `.trace` extension.
pub fn default_trace_path(instance_path: &Path) -> PathBuf {
    instance_path.with_extension("trace")
}

pub fn plan_instance(instance: Instance, seed: u64, opts: &PlannerOptions, trace_out: Option<&Path>) -> CliResult<PlanOutcome> {
    let cfg = opts.config(&instance.workspace)?;
    let run = run_instance(&instance, cfg, seed).map_err(|e| CliError::Planning(e.to_string()))?;
    let violation = if run.metrics.success {
        verify_trace(&run.trace, &instance).err().map(|v| v.to_string())
    } else {
        None
    };
    if let Some(path) = trace_out {
        run.trace.save(path).map_err(CliError::input)?;
    }
    Ok(PlanOutcome {
        instance,
        run,
        violation,
        trace_path: trace_out.map(Path::to_path_buf),
    })
}

pub fn plan_file(path: &Path, seed: u64, opts: &PlannerOptions, trace_out: Option<&Path>) -> CliResult<PlanOutcome> {
    let instance = load(path).map_err(CliError::input)?;
    plan_instance(instance, seed, opts, trace_out)
}
