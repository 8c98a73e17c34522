//! `sdar bench`: plan a whole suite and report metrics against the oracles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use sdar_core::baseline::{sequential_makespan_of, single_arm_optimal_actions};
use sdar_core::instances::load;
use sdar_core::{run_instance, verify_trace, Instance, Rung, Trace};

use crate::{CliError, CliResult, PlannerOptions};

/// Tag of the CSV column layout, recorded in the summary file.
pub const REPORT_VERSION: &str = "sdar-bench/1";

/// One instance. Lengths in workspace units, times at unit speed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub category: char,
    pub n: usize,
    pub hash: String,
    pub success: bool,
    pub verified: bool,
    pub actions: usize,
    pub buffers_used: usize,
    pub sync_steps: usize,
    pub oracle_actions: Option<usize>,
    pub min_fvs: Option<usize>,
    pub assumption_holds: Option<bool>,
    /// Oracle actions over planner actions.
    pub action_ratio: Option<f64>,
    pub makespan: f64,
    pub sequential_makespan: Option<f64>,
    /// Planner makespan over sequential makespan.
    pub makespan_ratio: Option<f64>,
    pub synchronous: usize,
    pub untangled: usize,
    pub sequential: usize,
    pub failure: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub instance: String,
    pub planning_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategorySummary {
    /// Category letter, or `all`.
    pub category: String,
    pub instances: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_action_ratio: Option<f64>,
    pub min_action_ratio: Option<f64>,
    pub mean_makespan_ratio: Option<f64>,
    pub max_makespan_ratio: Option<f64>,
    /// One minus the mean makespan ratio.
    pub mean_saving: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Sorted by instance name.
    pub rows: Vec<BenchRow>,
    pub timings: Vec<TimingRow>,
    pub summary: Vec<CategorySummary>,
    /// Trace of every instance that got far enough to produce one.
    pub traces: Vec<(String, Trace)>,
}

/// Every `.inst` file below `dir`, loaded and sorted by name.
pub fn load_suite_dir(dir: &Path) -> CliResult<Vec<Instance>> {
    if !dir.is_dir() {
        return Err(CliError::Input(anyhow!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(CliError::input)?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|e| e == "inst") {
            out.push(load(path).map_err(CliError::input)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Input(anyhow!("no .inst files under {}", dir.display())));
    }
    out.sort_by_key(Instance::name);
    Ok(out)
}

struct Outcome {
    row: BenchRow,
    timing: TimingRow,
    trace: Option<Trace>,
}

fn bench_one(inst: &Instance, seed: u64, opts: &PlannerOptions) -> CliResult<Outcome> {
    let cfg = opts.config(&inst.workspace)?;
    let started = Instant::now();
    let oracle = single_arm_optimal_actions(inst).ok();
    let mut row = BenchRow {
        instance: inst.name(),
        category: inst.label.category.letter(),
        n: inst.len(),
        hash: inst.hash(),
        success: false,
        verified: false,
        actions: 0,
        buffers_used: 0,
        sync_steps: 0,
        oracle_actions: oracle.map(|o| o.single_arm_optimal_actions),
        min_fvs: oracle.map(|o| o.min_fvs),
        assumption_holds: oracle.map(|o| o.assumption_holds),
        action_ratio: None,
        makespan: 0.0,
        sequential_makespan: None,
        makespan_ratio: None,
        synchronous: 0,
        untangled: 0,
        sequential: 0,
        failure: String::new(),
    };
    let (trace, planning) = match run_instance(inst, cfg, seed) {
        Err(e) => {
            row.failure = e.to_string();
            (None, 0.0)
        }
        Ok(run) => {
            let m = &run.metrics;
            row.success = m.success;
            row.actions = m.actions;
            row.buffers_used = m.buffers_used;
            row.sync_steps = m.sync_steps;
            row.makespan = m.makespan;
            row.synchronous = m.fallbacks(Rung::Synchronous);
            row.untangled = m.fallbacks(Rung::Untangled);
            row.sequential = m.fallbacks(Rung::Sequential);
            row.failure = m.failure.clone().unwrap_or_default();
            if m.success {
                match verify_trace(&run.trace, inst) {
                    Ok(()) => row.verified = true,
                    Err(v) => row.failure = format!("trace verification: {v}"),
                }
                if m.actions > 0 {
                    row.action_ratio = row.oracle_actions.map(|o| o as f64 / m.actions as f64);
                }
                match sequential_makespan_of(&run, &cfg) {
                    Ok(seq) => {
                        row.sequential_makespan = Some(seq);
                        if seq > 0.0 {
                            row.makespan_ratio = Some(m.makespan / seq);
                        }
                    }
                    Err(e) => row.failure = e.to_string(),
                }
            }
            (Some(run.trace), run.planning_time.as_secs_f64())
        }
    };
    let timing = TimingRow {
        instance: row.instance.clone(),
        planning_seconds: planning,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(Outcome { row, timing, trace })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn summarize(category: String, rows: &[&BenchRow]) -> CategorySummary {
    let successes = rows.iter().filter(|r| r.success && r.verified).count();
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.assumption_holds == Some(true))
        .filter_map(|r| r.action_ratio)
        .collect();
    let spans: Vec<f64> = rows.iter().filter_map(|r| r.makespan_ratio).collect();
    let mean_span = mean(&spans);
    CategorySummary {
        category,
        instances: rows.len(),
        successes,
        success_rate: if rows.is_empty() { 0.0 } else { successes as f64 / rows.len() as f64 },
        mean_action_ratio: mean(&ratios),
        min_action_ratio: ratios.iter().copied().reduce(f64::min),
        mean_makespan_ratio: mean_span,
        max_makespan_ratio: spans.iter().copied().reduce(f64::max),
        mean_saving: mean_span.map(|r| 1.0 - r),
    }
}

/// Per-category summaries followed by an `all` row.
pub fn summarize_rows(rows: &[BenchRow]) -> Vec<CategorySummary> {
    let mut by_cat: BTreeMap<char, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        by_cat.entry(r.category).or_default().push(r);
    }
    let order = |c: &char| "RSDM".find(*c).unwrap_or(usize::MAX);
    let mut cats: Vec<char> = by_cat.keys().copied().collect();
    cats.sort_by_key(order);
    let mut out: Vec<CategorySummary> = cats
        .into_iter()
        .map(|c| summarize(c.to_string(), &by_cat[&c]))
        .collect();
    out.push(summarize("all".into(), &rows.iter().collect::<Vec<_>>()));
    out
}

/// Plans every instance on up to `jobs` threads (0 picks automatically).
pub fn run_bench(instances: &[Instance], seed: u64, opts: &PlannerOptions, jobs: usize) -> CliResult<BenchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::input)?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| bench_one(inst, seed, opts))
            .collect::<CliResult<_>>()
    })?;
    let mut outcomes = outcomes;
    outcomes.sort_by(|a, b| a.row.instance.cmp(&b.row.instance));
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut timings = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    for o in outcomes {
        if let Some(t) = o.trace {
            traces.push((o.row.instance.clone(), t));
        }
        rows.push(o.row);
        timings.push(o.timing);
    }
    let summary = summarize_rows(&rows);
    Ok(BenchReport {
        rows,
        timings,
        summary,
        traces,
    })
}

fn to_csv<T: Serialize>(records: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

impl BenchReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.success && r.verified)
    }

    /// Deterministic per-instance CSV; wall-clock times live in [`Self::timing_csv`].
    pub fn csv(&self) -> String {
        to_csv(&self.rows)
    }

    pub fn timing_csv(&self) -> String {
        to_csv(&self.timings)
    }

    pub fn summary_csv(&self) -> String {
        to_csv(&self.summary)
    }

    /// Human-readable summary table.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:>9} {:>9} {:>13} {:>12} {:>14} {:>8}",
            "category", "instances", "success", "action_ratio", "min_ratio", "makespan_ratio", "saving"
        );
        for c in &self.summary {
            let _ = writeln!(
                s,
                "{:<8} {:>9} {:>8.1}% {:>13} {:>12} {:>14} {:>8}",
                c.category,
                c.instances,
                100.0 * c.success_rate,
                fmt_opt(c.mean_action_ratio),
                fmt_opt(c.min_action_ratio),
                fmt_opt(c.mean_makespan_ratio),
                fmt_opt(c.mean_saving),
            );
        }
        s
    }

    /// Writes `report.csv`, `summary.csv`, `timing.csv` and, when asked,
    /// `traces/<instance>.trace`. Returns the written paths.
    pub fn write(&self, out: &Path, with_traces: bool) -> CliResult<Vec<PathBuf>> {
        let io = |e: std::io::Error, p: &Path| CliError::Input(anyhow::Error::new(e).context(format!("writing {}", p.display())));
        fs::create_dir_all(out).map_err(|e| io(e, out))?;
        let mut written = Vec::new();
        let summary = format!("# {REPORT_VERSION}\n{}", self.summary_csv());
        for (name, body) in [
            ("report.csv", self.csv()),
            ("summary.csv", summary),
            ("timing.csv", self.timing_csv()),
        ] {
            let p = out.join(name);
            fs::write(&p, body).map_err(|e| io(e, &p))?;
            written.push(p);
        }
        if with_traces {
            let dir = out.join("traces");
            for (name, trace) in &self.traces {
                let p = dir.join(format!("{name}.trace"));
                trace
                    .save(&p)
                    .with_context(|| format!("writing {}", p.display()))
                    .map_err(CliError::Input)?;
                written.push(p);
            }
        }
        Ok(written)
    }
}
