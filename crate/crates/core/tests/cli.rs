use std::path::Path;
use std::process::{Command, Output};

fn ghzctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghzctl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn decompose_writes_block_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ghzctl(&["decompose", "--n", "4", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("decompose_N4.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("block_id,dim,contains_initial,contains_ghz"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    let total: usize = rows.iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 16);
    let ghz: Vec<&Vec<String>> = rows.iter().filter(|r| r[3] == "true").collect();
    assert_eq!(ghz.len(), 1);
    assert_eq!(ghz[0][1], "6");
    assert_eq!(ghz[0][2], "true");
}

#[test]
fn dry_run_prints_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("plan");
    let o = ghzctl(&["optimize", "--n", "3", "--dry-run", "--out", &out_arg(&target)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("optimize N=3"), "{text}");
    assert!(text.contains("output:"), "{text}");
    assert!(!target.exists());
}

#[test]
fn config_missing_key_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let target = dir.path().join("never");
    std::fs::write(
        &cfg,
        format!("[experiment]\nname = \"bad\"\nmethod = \"decompose\"\nout = {:?}\n\n[chain]\nsites = [4]\n", target.to_str().unwrap()),
    )
    .unwrap();
    let o = ghzctl(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coupling"));
    assert!(!target.exists());
}

#[test]
fn config_runs_each_chain_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lyap.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\nname = \"lyap\"\nmethod = \"lyapunov\"\n\n[chain]\nsites = [2, 3]\ncoupling = -1.0\n\n[lyapunov]\nt_f = 5.0\n",
    )
    .unwrap();
    let o = ghzctl(&["run", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for n in [2, 3] {
        let csv = std::fs::read_to_string(dir.path().join(format!("lyapunov_N{n}.csv"))).unwrap();
        assert!(csv.lines().count() > 40);
    }
}

#[test]
fn chain_length_above_limit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ghzctl"))
        .args(["decompose", "--n", "5", "--out", &out_arg(&dir.path().join("x"))])
        .env("GHZCTL_MAX_N", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("x").exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&ghzctl(&["decompose"])), 2);
    assert_eq!(code(&ghzctl(&["reproduce", "fig8", "--dry-run"])), 2);
    assert_eq!(code(&ghzctl(&["optimize", "--n", "3", "--jobs", "0", "--dry-run"])), 2);
    assert_eq!(code(&ghzctl(&["adiabatic", "--n", "0", "--dry-run"])), 2);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let run = |dir: &Path| {
        let o = ghzctl(&[
            "robustness",
            "--n",
            "3",
            "--method",
            "lyapunov",
            "--kind",
            "disorder",
            "--values",
            "0,0.05",
            "--samples",
            "6",
            "--seed",
            "11",
            "--out",
            &out_arg(dir),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.join("robustness_lyapunov_disorder_N3.csv")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(a.path()), run(b.path()));
}
