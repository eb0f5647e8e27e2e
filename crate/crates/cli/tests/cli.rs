mod common;

use std::fs;
use std::path::Path;

use svqa_core::media::StereoSequence;
use svqa_core::{MetricReport, Plane};

use common::*;

fn fixture(dir: &Path) {
    let d = two_plane(32, 32);
    let seq = StereoSequence::from_luma_pairs(
        "a",
        25.0,
        (0..2).map(|t| {
            let l = texture(32, 32, 10 + t);
            (l.clone(), right_from_left(&l, &d))
        }),
    )
    .unwrap();
    write_sequence(dir, "a", &seq);
    fs::write(dir.join("cfg.json"), r#"{"disparity":{"search_range":8}}"#).unwrap();
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = svqa(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn report(dir: &Path, name: &str) -> MetricReport {
    MetricReport::read_json(&dir.join(name)).unwrap()
}

#[test]
fn info_prints_dims_and_complexity() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let text = ok(tmp.path(), &["info", "--in", "a.json"]);
    assert!(text.contains("dims: 32x32"));
    assert!(text.contains("frames: 2"));
    assert!(text.contains("si: ") && text.contains("ti: "));
}

#[test]
fn identical_inputs_score_one_with_baseline_saliency() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    ok(tmp.path(), &["score-fr", "--metric", "ssim_s", "--ref", "a.json", "--dist", "a.json", "--saliency", "baseline", "--out", "r.json"]);
    let r = report(tmp.path(), "r.json");
    assert_eq!(r.pooled, 1.0);
    assert_eq!(r.saliency_mode, "baseline");
    let csv = fs::read_to_string(tmp.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("frame,score"));
    assert_eq!(csv.lines().count(), 3);
    assert!(tmp.path().join("r.manifest.json").exists());
}

#[test]
fn none_and_uniform_saliency_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    fs::write(dir.join("noise.json"), r#"{"kind":"awgn","variance":0.01,"seed":3}"#).unwrap();
    ok(dir, &["distort", "--in", "a.json", "--spec", "noise.json", "--out", "n.json"]);
    for metric in ["psnr_s", "vif_s", "phsd_s"] {
        ok(dir, &["score-fr", "--metric", metric, "--config", "cfg.json", "--ref", "a.json", "--dist", "n.json", "--saliency", "none", "--out", "none.json"]);
        ok(dir, &["score-fr", "--metric", metric, "--config", "cfg.json", "--ref", "a.json", "--dist", "n.json", "--saliency", "uniform", "--out", "uni.json"]);
        let (a, b) = (report(dir, "none.json"), report(dir, "uni.json"));
        assert_eq!(a.per_frame, b.per_frame, "{metric}");
    }
    ok(dir, &["score-nr", "--metric", "gbim_s", "--dist", "n.json", "--saliency", "none", "--out", "g0.json"]);
    ok(dir, &["score-nr", "--metric", "gbim_s", "--dist", "n.json", "--saliency", "uniform", "--out", "g1.json"]);
    assert_eq!(report(dir, "g0.json").per_frame, report(dir, "g1.json").per_frame);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = svqa(tmp.path(), &["score-fr", "--metric", "nope", "--ref", "a.json", "--dist", "a.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("psnr_s") && err.contains("nospdm_s"), "{err}");

    let cases: [&[&str]; 4] = [
        &["score-fr", "--metric", "gbim_s", "--ref", "a.json", "--dist", "a.json", "--out", "r.json"],
        &["score-nr", "--metric", "gbim_s", "--dist", "a.json", "--saliency", "magic", "--out", "r.json"],
        &["score-nr", "--metric", "gbim_s"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(svqa(tmp.path(), args).status.code(), Some(2), "{args:?}");
    }
    assert!(svqa(tmp.path(), &[]).stdout.is_empty());
}

#[test]
fn processing_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let out = svqa(tmp.path(), &["score-nr", "--metric", "gbim_s", "--dist", "missing.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    // flosim needs two frames of history; qa3d needs eleven
    let out = svqa(tmp.path(), &["score-nr", "--metric", "qa3d_s", "--dist", "a.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("r.json").exists());
}

#[test]
fn map_series_round_trip_through_dir_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    ok(dir, &["saliency", "--in", "a.json", "--out", "sal"]);
    ok(dir, &["disparity", "--in", "a.json", "--config", "cfg.json", "--out", "disp/ref"]);
    ok(dir, &["disparity", "--in", "a.json", "--config", "cfg.json", "--out", "disp/dist"]);
    for f in ["sal/000000.pgm", "sal/000001.pgm", "sal/manifest.json", "disp/ref/000001.pgm"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    ok(dir, &["score-fr", "--metric", "ddl1_s", "--ref", "a.json", "--dist", "a.json", "--saliency", "dir:sal", "--disparity", "dir:disp", "--config", "cfg.json", "--out", "d.json"]);
    let r = report(dir, "d.json");
    assert_eq!(r.saliency_mode, "external");
    assert_eq!(r.pooled, 2.0);
    ok(dir, &["score-nr", "--metric", "nospdm_s", "--dist", "a.json", "--disparity", "dir:disp/ref", "--config", "cfg.json", "--out", "n.json"]);
}

#[test]
fn job_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    fs::write(dir.join("noise.json"), r#"{"kind":"awgn","variance":0.02,"seed":9}"#).unwrap();
    ok(dir, &["--jobs", "1", "distort", "--in", "a.json", "--spec", "noise.json", "--out", "one.json"]);
    ok(dir, &["--jobs", "4", "distort", "--in", "a.json", "--spec", "noise.json", "--out", "four.json"]);
    assert_eq!(fs::read(dir.join("one_left.yuv")).unwrap(), fs::read(dir.join("four_left.yuv")).unwrap());
    ok(dir, &["--jobs", "1", "score-fr", "--config", "cfg.json", "--metric", "mj3d_s", "--ref", "a.json", "--dist", "one.json", "--out", "j1.json"]);
    ok(dir, &["--jobs", "3", "score-fr", "--config", "cfg.json", "--metric", "mj3d_s", "--ref", "a.json", "--dist", "one.json", "--out", "j3.json"]);
    assert_eq!(fs::read(dir.join("j1.json")).unwrap(), fs::read(dir.join("j3.json")).unwrap());
}

#[test]
fn fix_b_pipeline_to_perf_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let src = ramp(16, 16);
    let seq = StereoSequence::from_luma_pairs("src", 25.0, [(src.clone(), src)]).unwrap();
    write_sequence(dir, "src", &seq);
    fs::create_dir_all(dir.join("hot")).unwrap();
    let hot = Plane::from_fn(16, 16, |x, y| if x < 8 && y < 8 { 0.9 } else { 0.1 });
    svqa_core::media::save_map_series(&[hot], &dir.join("hot")).unwrap();

    let mut scores = String::from("item_id,subject_id,score\n");
    let mut reports = Vec::new();
    for (i, delta) in [8, 16, 32, 48].iter().enumerate() {
        let spec = format!(r#"{{"kind":"intensity_shift","delta":{delta},"region":{{"x":0,"y":0,"width":8,"height":8}}}}"#);
        fs::write(dir.join(format!("s{i}.json")), spec).unwrap();
        ok(dir, &["distort", "--in", "src.json", "--spec", &format!("s{i}.json"), "--out", &format!("d{i}.json")]);
        for (mode, tag) in [("none", "p"), ("dir:hot", "w")] {
            let out = format!("{tag}{i}.json");
            ok(dir, &["score-fr", "--metric", "psnr_s", "--ref", "src.json", "--dist", &format!("d{i}.json"), "--saliency", mode, "--out", &out]);
            reports.push(out);
        }
        for s in 0..4 {
            scores += &format!("d{i},subj{s},{}\n", 90 - 20 * i + s);
        }
    }
    fs::write(dir.join("scores.csv"), scores).unwrap();
    let mut args = vec!["evaluate", "--scores", "scores.csv", "--distortion", "shift", "--out", "perf.csv", "--objective"];
    args.extend(reports.iter().map(String::as_str));
    ok(dir, &args);
    let perf = fs::read_to_string(dir.join("perf.csv")).unwrap();
    let lines: Vec<&str> = perf.lines().collect();
    assert_eq!(lines[0], "metric,saliency_mode,distortion,pcc,scc,rmse,or,n");
    assert_eq!(lines.len(), 3, "{perf}");
    assert!(lines[1].starts_with("psnr_s,none,shift,"));
    assert!(lines[2].starts_with("psnr_s,external,shift,"));
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",4")));

    ok(dir, &["evaluate", "--scores", "scores.csv", "--objective", "p0.json", "p1.json", "p2.json", "p3.json", "--out", "perf.json"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("perf.json")).unwrap()).unwrap();
    assert_eq!(json[0]["n"], 4);
}
