use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rgbd_gmm::dataset::synth::scenario_a;
use rgbd_gmm::dataset::{save_mask, write_color_png, write_depth_png, FrameEntry, SequenceManifest};
use rgbd_gmm::{ForegroundMask, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rgbd-gmm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small scene in the spirit of scenario A, written as a JSON spec.
fn small_spec(dir: &Path, frames: usize) -> PathBuf {
    let mut spec = scenario_a();
    spec.width = 80;
    spec.height = 60;
    spec.frame_count = frames;
    spec.background.horizon_row = 25;
    for o in &mut spec.objects {
        o.width /= 8;
        o.height /= 8;
        o.checker_px = 2;
        o.shadow = None;
        for w in &mut o.waypoints {
            w.x /= 8;
            w.y /= 8;
        }
    }
    spec.events.clear();
    let path = dir.join("spec.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    path
}

fn synth(dir: &Path, frames: usize) -> PathBuf {
    let spec = small_spec(dir, frames);
    let out = dir.join("seq");
    let printed = ok(&["synth", "--spec", s(&spec), "-o", s(&out)]);
    assert_eq!(printed.trim(), s(&out.join("manifest.json")));
    out.join("manifest.json")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synth_is_deterministic_and_seeded() {
    let t = tempfile::tempdir().unwrap();
    let spec = small_spec(t.path(), 4);
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    ok(&["synth", "--spec", s(&spec), "-o", s(&a)]);
    ok(&["synth", "--spec", s(&spec), "-o", s(&b)]);
    ok(&["synth", "--spec", s(&spec), "--seed", "99", "-o", s(&c)]);
    assert_eq!(files(&a), files(&b));
    assert_ne!(files(&a), files(&c));
    assert_eq!(files(&a).len(), 1 + 3 * 4);
}

#[test]
fn unknown_scenario_is_reported() {
    let t = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--scenario", "Z", "-o", s(t.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("unknown scenario 'Z'") && err.contains("A, B"), "{err}");
}

#[test]
fn segment_fused_writes_every_stream_it_computes() {
    let t = tempfile::tempdir().unwrap();
    let manifest = synth(t.path(), 5);
    let out = t.path().join("masks");
    ok(&["segment", "--manifest", s(&manifest), "--methods", "fused", "-o", s(&out)]);
    for m in ["rgb", "depth", "fused"] {
        let names: Vec<_> = files(&out.join(m)).into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, (0..5).map(|i| format!("{i:05}.png")).collect::<Vec<_>>(), "{m}");
    }
    assert!(!out.join("augmented").exists());
}

#[test]
fn worker_count_does_not_change_masks() {
    let t = tempfile::tempdir().unwrap();
    let manifest = synth(t.path(), 8);
    let (a, b) = (t.path().join("w1"), t.path().join("w8"));
    let args = |out: &Path, w: &str, p: &str| {
        ok(&[
            "segment", "--manifest", s(&manifest), "--methods", "fused,augmented", "--workers", w, "--pipeline", p,
            "-o", s(out),
        ]);
    };
    args(&a, "1", "false");
    args(&b, "8", "true");
    for m in ["rgb", "depth", "fused", "augmented"] {
        assert_eq!(files(&a.join(m)), files(&b.join(m)), "{m}");
    }
}

fn copy_gt_as_predictions(manifest: &Path, dst: &Path, skip: Option<usize>) {
    let root = manifest.parent().unwrap();
    let m: SequenceManifest = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    std::fs::create_dir_all(dst).unwrap();
    for f in &m.frames {
        if Some(f.index) != skip {
            std::fs::copy(root.join(f.gt.as_ref().unwrap()), dst.join(format!("{:05}.png", f.index))).unwrap();
        }
    }
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let t = tempfile::tempdir().unwrap();
    let manifest = synth(t.path(), 40);
    let pred = t.path().join("pred");
    copy_gt_as_predictions(&manifest, &pred, None);
    let out = t.path().join("eval");
    let printed = ok(&["eval", "--manifest", s(&manifest), "--pred", &format!("fused={}", s(&pred)), "-o", s(&out)]);
    assert!(printed.contains("fused: F1 = 1.000"), "{printed}");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["methods"]["fused"]["frames"], 10);
    assert_eq!(std::fs::read_to_string(out.join("metrics.csv")).unwrap().lines().count(), 41);
}

#[test]
fn eval_names_the_missing_frame() {
    let t = tempfile::tempdir().unwrap();
    let manifest = synth(t.path(), 8);
    let pred = t.path().join("pred");
    copy_gt_as_predictions(&manifest, &pred, Some(5));
    let out = run(&["eval", "--manifest", s(&manifest), "--pred", &format!("rgb={}", s(&pred))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("frame 5") && err.contains("00005.png"), "{err}");
}

/// Three 2x2 frames with hand-built ground truth and predictions.
fn toy_sequence(dir: &Path) -> (PathBuf, PathBuf) {
    let gts = [[1, 1, 0, 0], [1, 1, 1, 0], [1, 0, 0, 0]];
    let preds = [[1, 0, 1, 0], [1, 1, 1, 1], [0, 0, 0, 1]];
    let pred_dir = dir.join("pred");
    std::fs::create_dir_all(&pred_dir).unwrap();
    let mut frames = Vec::new();
    for i in 0..3 {
        let e = FrameEntry {
            index: i,
            color: format!("c{i}.png"),
            depth: format!("d{i}.png"),
            gt: Some(format!("g{i}.png")),
        };
        write_color_png(&dir.join(&e.color), 2, 2, &[0; 12]).unwrap();
        write_depth_png(&dir.join(&e.depth), 2, 2, &[1000; 4]).unwrap();
        save_mask(&ForegroundMask::from_bits(2, 2, gts[i].to_vec()).unwrap(), dir.join(e.gt.as_ref().unwrap())).unwrap();
        save_mask(&ForegroundMask::from_bits(2, 2, preds[i].to_vec()).unwrap(), pred_dir.join(format!("{i:05}.png")))
            .unwrap();
        frames.push(e);
    }
    let manifest = SequenceManifest {
        name: "toy".into(),
        frame_count: 3,
        width: Some(2),
        height: Some(2),
        depth_scale: 1.0,
        registered: true,
        frames,
        calibration: None,
    };
    let path = dir.join("manifest.json");
    manifest.write(&path).unwrap();
    (path, pred_dir)
}

#[test]
fn eval_toy_rows_match_hand_counts() {
    let t = tempfile::tempdir().unwrap();
    let (manifest, pred) = toy_sequence(t.path());
    let cfg = t.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"evaluation": {"warmup_frames": 0}}"#).unwrap();
    let out = t.path().join("eval");
    ok(&[
        "eval", "--config", s(&cfg), "--manifest", s(&manifest), "--pred", &format!("rgb={}", s(&pred)), "-o", s(&out),
    ]);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        csv.lines().collect::<Vec<_>>(),
        [
            "frame,method,tp,fp,tn,fn,precision,recall,f1",
            "0,rgb,1,1,1,1,0.500000,0.500000,0.500000",
            "1,rgb,3,1,0,0,0.750000,1.000000,0.857143",
            "2,rgb,0,1,2,1,0.000000,0.000000,0.000000",
        ]
    );
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let rgb = &summary["methods"]["rgb"];
    assert_eq!(rgb["f1"].as_f64().unwrap(), 8.0 / 13.0);
    assert_eq!(rgb["counts"], serde_json::json!({"tp": 4, "fp": 3, "tn": 3, "fn": 2}));
}

#[test]
fn bench_reports_every_configuration() {
    let t = tempfile::tempdir().unwrap();
    let manifest = synth(t.path(), 6);
    let out = t.path().join("bench");
    let printed = ok(&["bench", "--manifest", s(&manifest), "--workers", "2", "-o", s(&out)]);
    for row in ["baseline", "opt1", "opt2"] {
        assert!(printed.lines().any(|l| l.starts_with(row)), "{printed}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json["identical_masks"], true);
    assert_eq!(json["configurations"]["opt1"]["workers"], 2);
    assert_eq!(json["configurations"]["baseline"]["stats"]["frames_processed"], 6);
}

#[test]
fn bench_of_empty_sequence_reports_zero() {
    let t = tempfile::tempdir().unwrap();
    let manifest = SequenceManifest {
        name: "empty".into(),
        frame_count: 0,
        width: None,
        height: None,
        depth_scale: 1.0,
        registered: true,
        frames: Vec::new(),
        calibration: None,
    };
    let path = t.path().join("manifest.json");
    manifest.write(&path).unwrap();
    let out = t.path().join("bench");
    ok(&["bench", "--manifest", s(&path), "-o", s(&out)]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
    for k in ["baseline", "opt1", "opt2"] {
        assert_eq!(json["configurations"][k]["stats"]["fps"], 0.0);
        assert_eq!(json["configurations"][k]["stats"]["frames_processed"], 0);
    }
}

#[test]
fn dump_config_round_trips() {
    let printed = ok(&["--dump-config"]);
    assert_eq!(RunConfig::from_json(&printed).unwrap(), RunConfig::default());
}

#[test]
fn bad_config_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"color": {"components": 9}}"#).unwrap();
    let manifest = synth(t.path(), 2);
    let out = run(&["segment", "--config", s(&cfg), "--manifest", s(&manifest)]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: "));
}
