//! `sdar render`: SVG scenes, dependency-graph DOT files and trace frames.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use sdar_core::instances::{parse_instance, FORMAT_VERSION};
use sdar_core::taskplan::Gripper;
use sdar_core::trace::TRACE_VERSION;
use sdar_core::{ArmId, Instance, OrientedBox, Point2, Pose2, Trace};

use crate::{CliError, CliResult};

/// Pixels per workspace unit.
const SCALE: f64 = 800.0;
/// Room around the workspace for the arm bases.
const MARGIN: f64 = 0.25;
const STROKE: f64 = 0.003;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scene {
    Start,
    Goal,
}

fn color(id: usize) -> String {
    format!("hsl({:.0},60%,62%)", (id as f64 * 137.508) % 360.0)
}

struct Canvas {
    height: f64,
    body: String,
}

impl Canvas {
    fn new(inst: &Instance) -> Self {
        let (w, h) = (inst.workspace.width, inst.workspace.height);
        let mut c = Canvas { height: h, body: String::new() };
        let _ = writeln!(
            c.body,
            r##"<rect class="workspace" x="0" y="0" width="{w}" height="{h}" fill="#f4f1ea" stroke="#555" stroke-width="{STROKE}"/>"##
        );
        c
    }

    fn pt(&self, p: Point2) -> (f64, f64) {
        (p.x, self.height - p.y)
    }

    fn points(&self, b: &OrientedBox) -> String {
        b.corners()
            .iter()
            .map(|&p| {
                let (x, y) = self.pt(p);
                format!("{x:.5},{y:.5}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn object(&mut self, inst: &Instance, id: usize, pose: Pose2) {
        let b = inst.shapes[id].at(pose);
        let pts = self.points(&b);
        let (x, y) = self.pt(pose.position());
        let _ = writeln!(
            self.body,
            r##"<polygon class="object" data-id="{id}" points="{pts}" fill="{}" stroke="#222" stroke-width="{STROKE}"/>"##,
            color(id)
        );
        let _ = writeln!(
            self.body,
            r##"<text x="{x:.5}" y="{y:.5}" font-size="0.025" text-anchor="middle" dominant-baseline="central">{id}</text>"##
        );
    }

    fn outline(&mut self, inst: &Instance, id: usize, pose: Pose2, class: &str) {
        let pts = self.points(&inst.shapes[id].at(pose));
        let _ = writeln!(
            self.body,
            r##"<polygon class="{class}" data-id="{id}" points="{pts}" fill="white" fill-opacity="0.6" stroke="#888" stroke-width="{STROKE}" stroke-dasharray="0.008 0.006"/>"##
        );
    }

    fn arm(&mut self, base: Point2, ee: Point2, arm: ArmId) {
        let (bx, by) = self.pt(base);
        let (ex, ey) = self.pt(ee);
        let stroke = if arm == ArmId::Left { "#2a6fbb" } else { "#c0462b" };
        let _ = writeln!(
            self.body,
            r##"<line class="arm" data-arm="{}" x1="{bx:.5}" y1="{by:.5}" x2="{ex:.5}" y2="{ey:.5}" stroke="{stroke}" stroke-width="0.012" stroke-linecap="round" opacity="0.8"/>"##,
            arm.number()
        );
        let _ = writeln!(
            self.body,
            r##"<circle class="effector" cx="{ex:.5}" cy="{ey:.5}" r="0.012" fill="{stroke}"/>"##
        );
    }

    fn caption(&mut self, text: &str) {
        let _ = writeln!(
            self.body,
            r##"<text x="0" y="{:.5}" font-size="0.03">{}</text>"##,
            -0.015,
            escape(text)
        );
    }

    fn finish(self, inst: &Instance) -> String {
        let (w, h) = (inst.workspace.width, inst.workspace.height);
        let (vx, vy, vw, vh) = (-MARGIN, -0.06, w + 2.0 * MARGIN, h + 0.12);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{vx} {vy} {vw} {vh}\">\n{}</svg>\n",
            vw * SCALE,
            vh * SCALE,
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Start or goal arrangement. The goal panel also outlines the start footprints.
pub fn scene_svg(inst: &Instance, scene: Scene) -> String {
    let mut c = Canvas::new(inst);
    let (arr, title) = match scene {
        Scene::Start => (&inst.start, "start"),
        Scene::Goal => (&inst.goal, "goal"),
    };
    c.caption(&format!("{} {title}", inst.name()));
    if scene == Scene::Goal {
        for id in 0..inst.len() {
            if let Some(p) = inst.start.pose(id) {
                c.outline(inst, id, p, "start-outline");
            }
        }
    }
    for id in 0..inst.len() {
        if let Some(p) = arr.pose(id) {
            c.object(inst, id, p);
        }
    }
    c.finish(inst)
}

pub fn dependency_dot(inst: &Instance) -> CliResult<String> {
    Ok(inst.dependency_graph().map_err(CliError::input)?.to_dot())
}

/// One SVG per time sample of the trace, showing both arms and every object.
pub fn trace_frames(trace: &Trace) -> CliResult<Vec<String>> {
    let inst = parse_instance(&trace.header.instance)
        .context("instance embedded in the trace")
        .map_err(CliError::Input)?;
    let arms = trace.header.arms;
    let mut events: Vec<_> = trace.stages.iter().flat_map(|s| s.events.iter().copied()).collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut table: Vec<Option<Pose2>> = (0..inst.len()).map(|i| inst.start.pose(i)).collect();
    let mut last: Vec<Pose2> = table.iter().map(|p| p.expect("start on table")).collect();
    let mut next_event = 0;

    let mut frames = Vec::with_capacity(trace.frame_count());
    for pair in trace.samples.chunks_exact(2) {
        let t = pair[0].t;
        while next_event < events.len() && events[next_event].t <= t + 1e-12 {
            let ev = events[next_event];
            let id = ev.object;
            if id >= inst.len() {
                return Err(CliError::Input(anyhow!("event for unknown object {id}")));
            }
            match ev.action {
                Gripper::Close => table[id] = None,
                Gripper::Open => table[id] = Some(ev.pose),
            }
            last[id] = ev.pose;
            next_event += 1;
        }

        let mut c = Canvas::new(&inst);
        c.caption(&format!("{}  t={t:.4}  stage {}", inst.name(), pair[0].stage));
        for id in 0..inst.len() {
            c.outline(&inst, id, inst.goal.pose(id).expect("goal on table"), "goal-outline");
        }
        let carried: Vec<usize> = pair.iter().filter_map(|s| s.carried).collect();
        for (id, pose) in table.iter().enumerate() {
            if let Some(p) = pose {
                if !carried.contains(&id) {
                    c.object(&inst, id, *p);
                }
            }
        }
        for s in pair {
            let ee = Point2::new(s.x, s.y);
            if let Some(id) = s.carried.filter(|&id| id < inst.len()) {
                c.object(&inst, id, Pose2::new(ee.x, ee.y, last[id].theta));
            }
            c.arm(arms[s.arm.index()].base, ee, s.arm);
        }
        frames.push(c.finish(&inst));
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Instance,
    Trace,
}

pub fn detect(text: &str) -> CliResult<InputKind> {
    match text.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some(FORMAT_VERSION) => Ok(InputKind::Instance),
        Some(TRACE_VERSION) => Ok(InputKind::Trace),
        Some(other) => Err(CliError::Input(anyhow!(
            "unrecognized input: expected `{FORMAT_VERSION}` or `{TRACE_VERSION}`, found `{other}`"
        ))),
        None => Err(CliError::Input(anyhow!("empty input"))),
    }
}

/// Renders an instance (two scenes and a DOT file) or a trace (numbered
/// frames) into `out`. Returns the written paths.
pub fn render_path(input: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let text = fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))
        .map_err(CliError::Input)?;
    let files: Vec<(String, String)> = match detect(&text)? {
        InputKind::Instance => {
            let inst = parse_instance(&text).map_err(CliError::input)?;
            let name = inst.name();
            vec![
                (format!("{name}-start.svg"), scene_svg(&inst, Scene::Start)),
                (format!("{name}-goal.svg"), scene_svg(&inst, Scene::Goal)),
                (format!("{name}.dot"), dependency_dot(&inst)?),
            ]
        }
        InputKind::Trace => {
            let trace = Trace::parse(&text).map_err(CliError::input)?;
            trace_frames(&trace)?
                .into_iter()
                .enumerate()
                .map(|(k, svg)| (format!("frame-{k:04}.svg"), svg))
                .collect()
        }
    };
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(CliError::Input)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let p = out.join(name);
        fs::write(&p, body)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(CliError::Input)?;
        written.push(p);
    }
    Ok(written)
}
