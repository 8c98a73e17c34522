use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdar_core::instances::load;
use sdar_core::Trace;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn sdar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdar"))
        .args(args)
        .env_remove("SDAR_SEED")
        .env_remove("SDAR_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(o: &Output, key: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{}", stdout(o)))
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_single_category_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(sdar(&["gen", "S", "7", "--seed", "3", "--out", p(&a)]).status.success());
    assert!(sdar(&["gen", "S", "7", "--seed", "3", "--out", p(&b)]).status.success());
    let fa = files(&a, "inst");
    assert_eq!(fa.len(), 1);
    assert_eq!(fa[0].file_name().unwrap(), "S7-0003.inst");
    assert_eq!(fs::read(&fa[0]).unwrap(), fs::read(b.join("S7-0003.inst")).unwrap());
}

#[test]
fn gen_mixed_writes_twelve_object_instances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sdar(&["gen", "M", "--count", "5", "--seed", "1", "--out", p(tmp.path())]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 5);
    let insts = files(tmp.path(), "inst");
    assert_eq!(insts.len(), 5);
    for f in insts {
        assert_eq!(load(&f).unwrap().len(), 12);
    }
}

#[test]
fn gen_rejects_bad_arguments() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sdar(&["gen", "R", "--out", p(tmp.path())]).status.code(), Some(2));
    assert_eq!(sdar(&["gen", "D", "2", "--out", p(tmp.path())]).status.code(), Some(2));
    assert_eq!(sdar(&["gen", "Q", "4"]).status.code(), Some(2));
}

#[test]
fn plan_reports_metrics_and_writes_a_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("run.trace");
    let out = sdar(&["plan", p(&fixture("running_example.inst")), "--out", p(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(field(&out, "actions"), "10");
    assert_eq!(field(&out, "buffers_used"), "1");
    assert_eq!(field(&out, "verified"), "true");
    let t = Trace::load(&trace).unwrap();
    assert_eq!(t.metrics.actions, 10);

    let out = sdar(&["plan", p(&fixture("identity.inst")), "--out", p(&tmp.path().join("id.trace"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(field(&out, "actions"), "0");
}

#[test]
fn plan_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.inst");
    let text = fs::read_to_string(fixture("identity.inst")).unwrap();
    fs::write(&bad, text.replacen("workspace 1 0.6", "workspace one 0.6", 1)).unwrap();
    assert_eq!(sdar(&["plan", p(&bad)]).status.code(), Some(2));
    assert_eq!(sdar(&["plan", p(&tmp.path().join("missing.inst"))]).status.code(), Some(2));
    let trace = tmp.path().join("t.trace");
    let inst = fixture("ladder_sync.inst");
    let args = ["plan", p(&inst), "--out", p(&trace)];
    assert_eq!(sdar(&[&args[..], &["--dt", "0"]].concat()).status.code(), Some(2));
    // arms that must stay further apart than the workspace is wide
    let out = sdar(&[&args[..], &["--clearance", "3"]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(field(&out, "success"), "false");
    assert!(field(&out, "failure").starts_with("round 0"));
}

#[test]
fn environment_overrides_numeric_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sdar"))
        .args(["gen", "S", "4", "--out", p(tmp.path())])
        .env("SDAR_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("S4-0009.inst").exists());
}

#[test]
fn bench_is_deterministic_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = tmp.path().join("suite");
    assert!(sdar(&["gen", "S", "5", "--count", "3", "--out", p(&suite)]).status.success());
    assert!(sdar(&["gen", "R", "6", "--count", "3", "--out", p(&suite)]).status.success());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(sdar(&["bench", p(&suite), "--jobs", "3", "--out", p(&a)]).status.code(), Some(0));
    assert_eq!(sdar(&["bench", p(&suite), "--jobs", "1", "--out", p(&b)]).status.code(), Some(0));
    let csv = fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("report.csv")).unwrap());
    assert_eq!(csv.lines().count(), 7);
    for name in ["R6-0000", "R6-0001", "R6-0002", "S5-0000", "S5-0001", "S5-0002"] {
        assert_eq!(csv.matches(&format!("\n{name},")).count(), 1, "{name}");
        let t = format!("traces/{name}.trace");
        assert_eq!(fs::read(a.join(&t)).unwrap(), fs::read(b.join(&t)).unwrap());
    }
    assert!(a.join("timing.csv").exists() && a.join("summary.csv").exists());
    assert_eq!(sdar(&["bench", p(&tmp.path().join("nowhere"))]).status.code(), Some(2));
}

fn parse_svg(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text
}

fn polygons(svg: &str, class: &str) -> Vec<(String, String)> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name("polygon") && n.attribute("class") == Some(class))
        .map(|n| (n.attribute("data-id").unwrap().to_string(), n.attribute("points").unwrap().to_string()))
        .collect()
}

fn dot_edges(text: &str) -> usize {
    assert!(text.trim_start().starts_with("digraph") && text.trim_end().ends_with('}'));
    text.lines().filter(|l| l.contains("->")).count()
}

#[test]
fn render_instance_scenes_and_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sdar(&["render", p(&fixture("running_example.inst")), "--out", p(tmp.path())]);
    assert!(out.status.success());
    let svgs = files(tmp.path(), "svg");
    assert_eq!(svgs.len(), 2);
    let goal = parse_svg(&tmp.path().join("M0-0000-goal.svg"));
    let start = parse_svg(&tmp.path().join("M0-0000-start.svg"));
    assert_eq!(polygons(&goal, "object").len(), 9);
    assert_eq!(polygons(&goal, "start-outline"), polygons(&start, "object"));
    let dots = files(tmp.path(), "dot");
    assert_eq!(dots.len(), 1);
    assert_eq!(dot_edges(&fs::read_to_string(&dots[0]).unwrap()), 7);

    let tmp = tempfile::tempdir().unwrap();
    assert!(sdar(&["render", p(&fixture("identity.inst")), "--out", p(tmp.path())]).status.success());
    let dots = files(tmp.path(), "dot");
    assert_eq!(dot_edges(&fs::read_to_string(&dots[0]).unwrap()), 0);
}

#[test]
fn render_trace_frames_end_at_the_goal() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("run.trace");
    assert!(sdar(&["plan", p(&fixture("running_example.inst")), "--out", p(&trace)]).status.success());
    let frames_dir = tmp.path().join("frames");
    assert!(sdar(&["render", p(&trace), "--out", p(&frames_dir)]).status.success());
    let frames = files(&frames_dir, "svg");
    assert_eq!(frames.len(), Trace::load(&trace).unwrap().frame_count());
    for f in &frames {
        parse_svg(f);
    }
    let scene_dir = tmp.path().join("scene");
    assert!(sdar(&["render", p(&fixture("running_example.inst")), "--out", p(&scene_dir)]).status.success());
    let goal = parse_svg(&scene_dir.join("M0-0000-goal.svg"));
    let mut expect = polygons(&goal, "object");
    let mut last = polygons(&parse_svg(frames.last().unwrap()), "object");
    expect.sort();
    last.sort();
    assert_eq!(last, expect);
}

#[test]
fn render_rejects_unknown_input() {
    let tmp = tempfile::tempdir().unwrap();
    let junk = tmp.path().join("junk.txt");
    fs::write(&junk, "hello\n").unwrap();
    assert_eq!(sdar(&["render", p(&junk), "--out", p(tmp.path())]).status.code(), Some(2));
    let broken = tmp.path().join("broken.trace");
    fs::write(&broken, "sdar-trace/1\n{not json}\n").unwrap();
    assert_eq!(sdar(&["render", p(&broken), "--out", p(tmp.path())]).status.code(), Some(2));
}
