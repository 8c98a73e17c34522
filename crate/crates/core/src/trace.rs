//! `sdar-trace/1` run traces.
//!
//! The first line is the version tag; every following line is one JSON
//! object with a `kind` field: one `header`, then per stage a `stage` record
//! followed by its `sample` records, then a closing `metrics` record.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{ArmId, ObjectId};
use crate::geom::Pose2;
use crate::motion::{ArmModel, GraspAngle, Knot, Rung};
use crate::taskplan::{Gripper, SingleArmTask, Stage};

pub const TRACE_VERSION: &str = "sdar-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub instance_hash: String,
    pub seed: u64,
    pub dt: f64,
    pub k_buffers: usize,
    pub arms: [ArmModel; 2],
    /// The instance in `sdar-instance/1` text form.
    pub instance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperEvent {
    /// Absolute run time.
    pub t: f64,
    pub arm: ArmId,
    pub action: Gripper,
    pub object: ObjectId,
    /// Object pose at the event: where it is picked or placed.
    pub pose: Pose2,
}

/// One stage of one sub-task round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub round: usize,
    pub stage: Stage,
    pub candidates: Vec<(ObjectId, ObjectId)>,
    pub single_arm: Option<SingleArmTask>,
    /// Object handled by each arm.
    pub objects: [Option<ObjectId>; 2],
    pub grasps: [Option<GraspAngle>; 2],
    pub buffer: Option<(ObjectId, Pose2)>,
    pub mode: Rung,
    pub start_time: f64,
    pub duration: f64,
    /// Per-arm end-effector knots, times relative to `start_time`.
    pub knots: [Vec<Knot>; 2],
    pub events: Vec<GripperEvent>,
}

/// End-effector position of one arm at one time sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Index of the stage record the sample belongs to.
    pub stage: usize,
    pub t: f64,
    pub arm: ArmId,
    pub x: f64,
    pub y: f64,
    pub carried: Option<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Pick-and-place operations over both arms.
    pub actions: usize,
    pub buffers_used: usize,
    /// Completed sub-task rounds.
    pub sync_steps: usize,
    /// Sum of stage durations under unit end-effector speed.
    pub makespan: f64,
    /// Stages executed per rung, keyed by rung name.
    pub fallback_counts: BTreeMap<String, usize>,
    pub success: bool,
    /// Removal order; buffered objects appear twice.
    pub sequence: Vec<ObjectId>,
    /// Failure reason with the failing round, when unsuccessful.
    pub failure: Option<String>,
}

impl RunMetrics {
    pub fn fallbacks(&self, rung: Rung) -> usize {
        self.fallback_counts.get(rung.name()).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub stages: Vec<StageRecord>,
    /// Samples of every stage in order: per time step, left then right arm.
    pub samples: Vec<Sample>,
    pub metrics: RunMetrics,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Stage(StageRecord),
    Sample(Sample),
    Metrics(RunMetrics),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Trace {
    /// Number of time samples (each covers both arms).
    pub fn frame_count(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_VERSION);
        out.push('\n');
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("trace records serialize"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        let mut samples = self.samples.iter().peekable();
        for (k, st) in self.stages.iter().enumerate() {
            push(&Line::Stage(st.clone()));
            while let Some(s) = samples.next_if(|s| s.stage <= k) {
                push(&Line::Sample(*s));
            }
        }
        for s in samples {
            push(&Line::Sample(*s));
        }
        push(&Line::Metrics(self.metrics.clone()));
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == TRACE_VERSION => {}
            Some((i, l)) => {
                return Err(TraceError::Parse {
                    line: i + 1,
                    message: format!("expected `{TRACE_VERSION}`, found `{}`", l.trim()),
                })
            }
            None => {
                return Err(TraceError::Parse {
                    line: 1,
                    message: "empty trace".into(),
                })
            }
        }
        let mut header = None;
        let mut stages = Vec::new();
        let mut samples = Vec::new();
        let mut metrics = None;
        for (i, l) in lines {
            let line: Line = serde_json::from_str(l).map_err(|e| TraceError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match line {
                Line::Header(h) => header = Some(h),
                Line::Stage(s) => stages.push(s),
                Line::Sample(s) => samples.push(s),
                Line::Metrics(m) => metrics = Some(m),
            }
        }
        let missing = |what: &str| TraceError::Parse {
            line: 0,
            message: format!("missing {what} record"),
        };
        Ok(Trace {
            header: header.ok_or_else(|| missing("header"))?,
            stages,
            samples,
            metrics: metrics.ok_or_else(|| missing("metrics"))?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Trace, TraceError> {
        Trace::parse(&fs::read_to_string(path)?)
    }
}
