use std::path::Path;
use std::process::{Command, Output};

fn softhappy(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softhappy"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = softhappy(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generate(dir: &Path, count: &str) {
    ok(dir, &["generate", "--n-range", "40-70", "--k-range", "2-4", "--pcc-range", "1-3", "--count", count, "--seed", "5", "--out-dir", "inst"]);
}

/// Results sorted by row, header kept first.
fn sorted_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[1..].sort();
    lines
}

#[test]
fn generate_writes_instances_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "3");
    let manifest = std::fs::read_to_string(dir.path().join("inst/manifest.csv")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines[0], "filename,n,k,p,q,pcc,rho_suggested,seed");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let name = line.split(',').next().unwrap();
        let text = std::fs::read_to_string(dir.path().join("inst").join(name)).unwrap();
        assert!(text.starts_with("c meta k="));
    }
    // Same seed, same files.
    let again = tempfile::tempdir().unwrap();
    generate(again.path(), "3");
    let a = std::fs::read(dir.path().join("inst/sbm-0002.col")).unwrap();
    let b = std::fs::read(again.path().join("inst/sbm-0002.col")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solve_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "1");
    for algo in ["rnd", "lmc", "ls", "rls", "ga", "ma"] {
        ok(dir.path(), &[
            "solve", "inst/sbm-0000.col", "--algo", algo, "--max-generations", "5", "--rho", "0.4", "--seed", "9",
            "--out", "col.txt", "--record", "rec.json", "--trace", "trace.csv",
        ]);
        let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.json")).unwrap()).unwrap();
        let report: serde_json::Value =
            serde_json::from_str(&ok(dir.path(), &["eval", "inst/sbm-0000.col", "col.txt", "--rho", "0.4", "--format", "json"])).unwrap();
        assert_eq!(rec["alpha"], report["alpha"], "{algo}");
        assert_eq!(rec["acd"], report["acd"], "{algo}");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("generation,best,mean,elapsed_ms\n0,"));
}

#[test]
fn bench_is_deterministic_across_workers_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "4");
    let bench = |out: &str, workers: &str| {
        ok(dir.path(), &[
            "bench", "--instances", "inst", "--workers", workers, "--seed", "11", "--out", out, "--max-generations", "10",
            "--omit-timing",
        ])
    };
    bench("one.csv", "1");
    bench("four.csv", "4");
    bench("again.csv", "4");
    let one = sorted_rows(&dir.path().join("one.csv"));
    assert_eq!(one.len(), 1 + 4 * 6);
    assert_eq!(
        one[0],
        "instance_id,algo,seed,n,k,p,q,pcc,rho,mu,xi,xi_tilde,regime_mu_xitilde,regime_xi,alpha,acd,complete,acd_exact,generations,wall_ms"
    );
    assert_eq!(one, sorted_rows(&dir.path().join("four.csv")));
    assert_eq!(one, sorted_rows(&dir.path().join("again.csv")));
    assert!(dir.path().join("one.manifest.json").exists());

    // Drop two rows; the rerun restores exactly those.
    let path = dir.path().join("one.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().enumerate().filter(|(i, _)| *i != 3 && *i != 7).map(|(_, l)| l).collect();
    std::fs::write(&path, kept.join("\n") + "\n").unwrap();
    let out = softhappy(dir.path(), &[
        "bench", "--instances", "inst", "--seed", "11", "--out", "one.csv", "--max-generations", "10", "--omit-timing",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 runs, 22 already present"));
    assert_eq!(one, sorted_rows(&path));
}

#[test]
fn stats_summary_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "4");
    ok(dir.path(), &["bench", "--instances", "inst", "--seed", "1", "--out", "res.csv", "--max-generations", "5"]);

    let welch = ok(dir.path(), &["stats", "--results", "res.csv", "--pairs", "all"]);
    assert_eq!(welch.lines().count(), 1 + 36);
    let pair = ok(dir.path(), &["stats", "--results", "res.csv", "--pairs", "GA(Rnd):MA(LMC)", "--metric", "acd"]);
    assert_eq!(pair.lines().count(), 2);

    let summary = ok(dir.path(), &["summary", "--results", "res.csv", "--grouping", "xi"]);
    assert!(summary.starts_with("algo,group,count,alpha_mean,alpha_sd"));

    let series = ok(dir.path(), &["plotdata", "--results", "res.csv", "--axis", "k", "--bins", "4", "--hist-out", "h.csv"]);
    assert_eq!(series.lines().count(), 1 + 6 * 4);
    let hist = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 6 * 100);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.col"), "p edge 2 1\ne 1 1\n").unwrap();
    let out = softhappy(dir.path(), &["solve", "bad.col", "--algo", "lmc", "--rho", "0.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(dir.path().join("ok.col"), "c meta k=2\np edge 2 1\ne 1 2\nn 1 1\n").unwrap();
    let out = softhappy(dir.path(), &["solve", "ok.col", "--algo", "lmc"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rho"));
    let out = softhappy(dir.path(), &["generate", "--n-range", "9-3", "--out-dir", "x"]);
    assert!(!out.status.success());
}
