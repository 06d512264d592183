use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rwodsn::{read_cloud, Format};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwodsn"))
        .args(args)
        .env_remove("RWODSN_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("cube.ply");
    ok(&["synth", "cube", s(&cube), "--spacing", "0.1"]);
    let mut outputs = Vec::new();
    for (name, threads) in [("a.ply", "1"), ("b.ply", "4"), ("c.ply", "4")] {
        let out = dir.path().join(name);
        ok(&["detect", s(&cube), s(&out), "--seed", "7", "--threads", threads]);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);

    let labeled = read_cloud(&dir.path().join("a.ply"), Format::Ply).unwrap();
    assert!(labeled.labels.is_some());
    assert!(labeled.ground_truth.is_some());
}

#[test]
fn eval_of_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("edges.xyz");
    // a bare point list serves as both prediction and truth
    let mut text = String::new();
    for i in 0..30 {
        text.push_str(&format!("{} {} 0\n", i as f64 * 0.1, (i % 3) as f64 * 0.05));
    }
    fs::write(&gt, text).unwrap();
    let csv = ok(&["eval", s(&gt), s(&gt), "--cloud-size", "100", "--report", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(field("jaccard"), "1.000000");
    assert_eq!(field("recall"), "1.000000");
    assert_eq!(field("hausdorff"), "0.000000");
    assert_eq!(field("tn"), "70");
}

#[test]
fn batch_mean_row_is_the_mean_of_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    fs::create_dir(&models).unwrap();
    for seed in 0..10 {
        let raw = dir.path().join(format!("raw{seed}.ply"));
        let seed = seed.to_string();
        ok(&["synth", "cube", s(&raw), "--spacing", "0.1", "--seed", &seed]);
        let labeled = models.join(format!("cube{seed}.ply"));
        ok(&["detect", s(&raw), s(&labeled), "--seed", &seed, "--walks", "12"]);
    }
    let report = dir.path().join("report.csv");
    ok(&["batch-eval", s(&models), "--report", "csv", "-o", s(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    let parse = |line: &str| -> Vec<f64> {
        line.split(',').skip(1).map(|v| v.parse().unwrap()).collect()
    };
    let rows: Vec<Vec<f64>> = lines[1..11].iter().map(|l| parse(l)).collect();
    assert!(lines[11].starts_with("mean,"));
    let mean = parse(lines[11]);
    for (col, m) in mean.iter().enumerate() {
        let hand = rows.iter().map(|r| r[col]).sum::<f64>() / 10.0;
        // rows are printed to 6 decimals, the mean is taken before rounding
        assert!((hand - m).abs() < 1e-5, "column {col}: {hand} vs {m}");
    }
}

#[test]
fn exit_codes() {
    let out = run(&["detect", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["detect", "/nonexistent/in.ply", "/tmp/out.ply"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(&["perturb", "a.ply", "b.ply"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("cube.xyz");
    let out = dir.path().join("out.xyz");
    ok(&["synth", "cube", s(&cube), "--spacing", "0.1"]);
    let config = dir.path().join("run.conf");
    fs::write(&config, "# zero disks is invalid\ndisks = 0\nseed = 3\n").unwrap();
    let failed = run(&["--config", s(&config), "detect", s(&cube), s(&out)]);
    assert_eq!(failed.status.code(), Some(1));
    ok(&["--config", s(&config), "detect", s(&cube), s(&out), "--disks", "5"]);

    fs::write(&config, "bogus = 1\n").unwrap();
    assert_eq!(run(&["--config", s(&config), "detect", s(&cube), s(&out)]).status.code(), Some(1));
}

#[test]
fn perturb_and_synth_write_readable_clouds() {
    let dir = tempfile::tempdir().unwrap();
    let wedge = dir.path().join("wedge.ply");
    ok(&["synth", "wedge:120", s(&wedge), "--spacing", "0.05", "--seed", "2"]);
    let base = read_cloud(&wedge, Format::Ply).unwrap();
    assert!(base.cloud.normals().is_some());

    let noisy = dir.path().join("noisy.xyz");
    ok(&["perturb", s(&wedge), s(&noisy), "--noise", "0.05", "--seed", "4"]);
    let n = read_cloud(&noisy, Format::Xyz).unwrap();
    assert_eq!(n.len(), base.len());
    assert_eq!(n.ground_truth, base.ground_truth);
    assert_ne!(n.cloud.points(), base.cloud.points());

    let thin = dir.path().join("thin.ply");
    ok(&["perturb", s(&wedge), s(&thin), "--keep", "0.5"]);
    let t = read_cloud(&thin, Format::Ply).unwrap();
    assert_eq!(t.len(), (0.5 * base.len() as f64).round() as usize);

    // noisy clouds lose their normals; detect can estimate them
    let labeled = dir.path().join("labeled.ply");
    ok(&["detect", s(&noisy), s(&labeled), "--estimate-normals"]);
    let segmented = dir.path().join("segmented.ply");
    ok(&["segment", s(&labeled), s(&segmented)]);
    assert!(read_cloud(&segmented, Format::Ply).unwrap().segments.is_some());
}

#[test]
fn trace_dumps_the_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("cube.ply");
    let out = dir.path().join("out.ply");
    let trace = dir.path().join("trace.txt");
    ok(&["synth", "cube", s(&cube), "--spacing", "0.1"]);
    ok(&["detect", s(&cube), s(&out), "--trace", "5", "--trace-out", s(&trace)]);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(!text.is_empty());
    assert!(text.contains("kept"));
}
