use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use safs_cli::artifact::{
    OverlapArtifact, RankingArtifact, ReportArtifact, ScanArtifact, SweepLine, SCHEMA,
};
use serde_json::Value;
use tempfile::TempDir;

fn safs() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_safs"));
    for (key, _) in std::env::vars() {
        if key.starts_with("SAFS_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    safs().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "safs {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

fn fixture(extra: &[&str]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let csv = root.join("data.csv");
    let truth = root.join("truth.json");
    let mut args = vec![
        "generate",
        "planted",
        "--out",
        path(&csv),
        "--truth",
        path(&truth),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    Fixture { _dir: dir, root }
}

fn strip_volatile(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("volatile");
    v
}

#[test]
fn rank_is_deterministic_and_round_trips() {
    let fx = fixture(&["--seed", "3"]);
    let csv = fx.file("data.csv");
    let a = fx.file("a.json");
    let b = fx.file("b.json");
    ok(&[
        "rank",
        "--input",
        path(&csv),
        "--method",
        "safs",
        "--out",
        path(&a),
    ]);
    ok(&[
        "rank",
        "--input",
        path(&csv),
        "--method",
        "safs",
        "--out",
        path(&b),
    ]);
    let raw_a = std::fs::read_to_string(&a).unwrap();
    let raw_b = std::fs::read_to_string(&b).unwrap();
    assert_eq!(strip_volatile(&raw_a), strip_volatile(&raw_b));

    let parsed: RankingArtifact = serde_json::from_str(&raw_a).unwrap();
    assert_eq!(parsed.schema, SCHEMA);
    assert_eq!(parsed.features.len(), 12);
    assert_eq!(safs_cli::to_json(&parsed).unwrap(), raw_a);

    let truth: Value =
        serde_json::from_str(&std::fs::read_to_string(fx.file("truth.json")).unwrap()).unwrap();
    let mut planted: Vec<String> =
        serde_json::from_value(truth["planted_features"].clone()).unwrap();
    let mut top3 = parsed.feature_names()[..3].to_vec();
    planted.sort();
    top3.sort();
    assert_eq!(top3, planted);
}

#[test]
fn compare_safs_and_mi() {
    let fx = fixture(&[]);
    let csv = fx.file("data.csv");
    let s = fx.file("safs.json");
    let m = fx.file("mi.json");
    ok(&["rank", "--input", path(&csv), "--out", path(&s)]);
    ok(&[
        "rank",
        "--input",
        path(&csv),
        "--method",
        "mi",
        "--out",
        path(&m),
    ]);
    let out = ok(&["compare", "--rankings", path(&s), path(&m)]);
    let matrix: OverlapArtifact = serde_json::from_str(&out).unwrap();
    assert_eq!(matrix.methods, vec!["safs", "mi"]);
    assert_eq!(matrix.values[0][0], 1.0);
    assert_eq!(matrix.values[1][1], 1.0);
    assert_eq!(matrix.values[0][1], matrix.values[1][0]);
    assert!((0.0..=1.0).contains(&matrix.values[0][1]));
}

#[test]
fn compare_rejects_mismatched_rankings() {
    let fx = fixture(&[]);
    let other = fx.file("other.csv");
    ok(&[
        "generate",
        "planted",
        "--features",
        "5",
        "--out",
        path(&other),
    ]);
    let a = fx.file("a.json");
    let b = fx.file("b.json");
    ok(&[
        "rank",
        "--input",
        path(&fx.file("data.csv")),
        "--out",
        path(&a),
    ]);
    ok(&["rank", "--input", path(&other), "--out", path(&b)]);
    assert_eq!(code(&["compare", "--rankings", path(&a), path(&b)]), 2);
}

#[test]
fn pipeline_flags_planted_subgroup() {
    let fx = fixture(&["--seed", "11"]);
    let out = ok(&[
        "pipeline",
        "--input",
        path(&fx.file("data.csv")),
        "--top-k",
        "6",
    ]);
    let report: ReportArtifact = serde_json::from_str(&out).unwrap();
    let p = report.report.p_value.unwrap();
    assert!(p <= 0.05, "p = {p}");
    assert_eq!(report.report.permutations, 100);
    assert!(report.report.odds_ratio > 1.0);
    assert!(report.report.ci_low <= report.report.odds_ratio);
    assert!(report.report.odds_ratio <= report.report.ci_high);
    assert_eq!(report.volatile.timings.len(), 2);
}

#[test]
fn pipeline_is_reproducible() {
    let fx = fixture(&["--rows", "1500", "--features", "6"]);
    let csv = fx.file("data.csv");
    let args = [
        "pipeline",
        "--input",
        path(&csv),
        "--seed",
        "9",
        "--permutations",
        "20",
    ];
    assert_eq!(strip_volatile(&ok(&args)), strip_volatile(&ok(&args)));
}

#[test]
fn noise_pipeline_is_rarely_significant() {
    let dir = tempfile::tempdir().unwrap();
    let mut insignificant = 0;
    for seed in 0..50 {
        let csv = dir.path().join(format!("noise{seed}.csv"));
        let s = seed.to_string();
        ok(&[
            "generate",
            "noise",
            "--rows",
            "300",
            "--features",
            "4",
            "--cardinality",
            "3",
            "--seed",
            &s,
            "--out",
            path(&csv),
        ]);
        let out = ok(&[
            "pipeline",
            "--input",
            path(&csv),
            "--seed",
            &s,
            "--restarts",
            "5",
        ]);
        let report: ReportArtifact = serde_json::from_str(&out).unwrap();
        if report.report.p_value.unwrap() > 0.05 {
            insignificant += 1;
        }
    }
    assert!(
        insignificant >= 45,
        "{insignificant}/50 noise runs had p > 0.05"
    );
}

#[test]
fn full_top_k_matches_unselected_scan() {
    let fx = fixture(&["--rows", "2000"]);
    let csv = fx.file("data.csv");
    let all: ScanArtifact = serde_json::from_str(&ok(&["scan", "--input", path(&csv)])).unwrap();
    let top: ScanArtifact =
        serde_json::from_str(&ok(&["scan", "--input", path(&csv), "--top-k", "12"])).unwrap();
    assert_eq!(all.descriptor, top.descriptor);
    assert_eq!(all.score, top.score);
    assert_eq!(all.q_hat, top.q_hat);
    assert_eq!(all.subset_size, top.subset_size);
}

#[test]
fn scan_reuses_saved_ranking() {
    let fx = fixture(&[]);
    let csv = fx.file("data.csv");
    let r = fx.file("r.json");
    ok(&["rank", "--input", path(&csv), "--out", path(&r)]);
    let a: ScanArtifact =
        serde_json::from_str(&ok(&["scan", "--input", path(&csv), "--top-k", "4"])).unwrap();
    let b: ScanArtifact = serde_json::from_str(&ok(&[
        "scan",
        "--input",
        path(&csv),
        "--top-k",
        "4",
        "--ranking",
        path(&r),
    ]))
    .unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.score, b.score);
}

#[test]
fn sweep_emits_one_line_per_k() {
    let fx = fixture(&["--features", "8", "--rows", "3000"]);
    let out = ok(&[
        "sweep",
        "--input",
        path(&fx.file("data.csv")),
        "--k",
        "2,4,6,8",
    ]);
    let lines: Vec<SweepLine> = out
        .lines()
        .map(|l| serde_json::from_str(l).expect("line matches the sweep schema"))
        .collect();
    assert_eq!(
        lines.iter().map(|l| l.k).collect::<Vec<_>>(),
        vec![2, 4, 6, 8]
    );
    assert_eq!(lines[3].jaccard_vs_full, 1.0);
    for l in &lines {
        assert_eq!(l.schema, SCHEMA);
        assert_eq!(l.features.len(), l.k);
        assert!(l.volatile.timings.iter().all(|t| t.seconds > 0.0));
    }
}

#[test]
fn sweep_rejects_descending_k() {
    let fx = fixture(&["--rows", "500"]);
    assert_eq!(
        code(&["sweep", "--input", path(&fx.file("data.csv")), "--k", "4,2"]),
        1
    );
}

#[test]
fn text_outputs() {
    let fx = fixture(&["--rows", "1000", "--features", "5"]);
    let csv = fx.file("data.csv");
    let ranking = ok(&["rank", "--input", path(&csv), "--format", "text"]);
    assert!(ranking.starts_with("feature  score\n"));
    assert_eq!(ranking.lines().count(), 6);
    let report = ok(&[
        "pipeline",
        "--input",
        path(&csv),
        "--format",
        "text",
        "--permutations",
        "10",
    ]);
    assert!(report.contains("#Feats (#Vals)"));
    assert!(report.contains("95% CI"));
}

#[test]
fn exit_codes() {
    let fx = fixture(&["--rows", "300"]);
    let csv = fx.file("data.csv");
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["rank"]), 1);
    assert_eq!(code(&["rank", "--input", path(&csv), "--method", "xgb"]), 1);
    assert_eq!(code(&["scan", "--input", path(&csv), "--top-k", "0"]), 1);
    assert_eq!(code(&["scan", "--input", path(&csv), "--restarts", "0"]), 1);
    assert_eq!(code(&["rank", "--input", path(&fx.file("missing.csv"))]), 2);
    assert_eq!(
        code(&["rank", "--input", path(&csv), "--outcome-col", "label"]),
        2
    );

    let bad = fx.file("bad.csv");
    std::fs::write(&bad, "a,y\nx,1\nz,maybe\n").unwrap();
    let out = run(&["rank", "--input", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("maybe"));
}

#[test]
fn flags_override_environment() {
    let fx = fixture(&["--rows", "800", "--features", "4"]);
    let csv = fx.file("data.csv");
    let with_env = |args: &[&str]| {
        safs()
            .env("SAFS_RESTARTS", "0")
            .env("SAFS_INPUT", path(&csv))
            .args(args)
            .output()
            .unwrap()
    };
    assert_eq!(with_env(&["scan"]).status.code(), Some(1));
    assert!(with_env(&["scan", "--restarts", "3"]).status.success());

    let seeded = safs()
        .env("SAFS_SEED", "4")
        .args(["scan", "--input", path(&csv)])
        .output()
        .unwrap();
    let scan: ScanArtifact = serde_json::from_slice(&seeded.stdout).unwrap();
    assert_eq!(scan.seed, 4);
}
