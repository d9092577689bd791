use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use noma_experiments::table::CsvHeader;
use noma_secrecy::persist::Model;

const TINY: &str = r#"
seed = 7
mc_trials = 20000

[sweep]
variable = "snr_db"
start = 0.0
stop = 20.0
step = 10.0
scale = "db"

[train]
hidden = [8, 4]
epochs = 3
train_samples = 800
test_samples = 300

[compare]
rho = [0.3, 0.7]
timing_repeats = 1
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noma-sec"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn noma-sec")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated-unix:"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    let rho = TINY.replace(
        "variable = \"snr_db\"\nstart = 0.0\nstop = 20.0\nstep = 10.0\nscale = \"db\"",
        "variable = \"rho\"\nstart = 0.2\nstop = 0.8\nstep = 0.3",
    );
    assert_ne!(rho, TINY);
    fs::write(dir.path().join("rho.toml"), rho).unwrap();
    dir
}

#[test]
fn csv_header_reproduces_the_run() {
    let dir = setup();
    let d = dir.path();
    let a = run(d, &["intercept-vs-snr", "--config", "tiny.toml", "--out", "a.csv"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = run(d, &["intercept-vs-snr", "--config", "a.csv", "--out", "b.csv"]);
    assert!(b.status.success(), "{}", stderr(&b));
    let (ta, tb) = (fs::read_to_string(d.join("a.csv")).unwrap(), fs::read_to_string(d.join("b.csv")).unwrap());
    assert_eq!(without_timestamp(&ta), without_timestamp(&tb));
    let h = CsvHeader::parse(&ta).unwrap();
    assert_eq!(h.command, "intercept-vs-snr");
    assert!(h.config.contains("seed = 7"));
    assert_eq!(h.columns[0], "snr_db");
    // 2 eta x 2 alpha x 3 snr
    assert_eq!(ta.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = setup();
    let d = dir.path();
    for (w, out) in [("1", "w1.csv"), ("3", "w3.csv")] {
        let o = run(d, &["intercept-vs-rho", "--config", "rho.toml", "--workers", w, "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read_to_string(d.join("w1.csv")).unwrap();
    let b = fs::read_to_string(d.join("w3.csv")).unwrap();
    assert_eq!(CsvHeader::parse(&a).unwrap().columns.last().map(String::as_str), Some("gap_mc"));
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
}

#[test]
fn seed_flag_overrides_scenario() {
    let dir = setup();
    let d = dir.path();
    run(d, &["intercept-vs-snr", "--config", "tiny.toml", "--out", "s7.csv"]);
    run(d, &["intercept-vs-snr", "--config", "tiny.toml", "--seed", "8", "--out", "s8.csv"]);
    let a = fs::read_to_string(d.join("s7.csv")).unwrap();
    let b = fs::read_to_string(d.join("s8.csv")).unwrap();
    assert!(b.contains("# seed = 8"));
    assert_ne!(without_timestamp(&a), without_timestamp(&b));
}

#[test]
fn train_then_compare() {
    let dir = setup();
    let d = dir.path();
    let t = run(d, &["train", "--config", "tiny.toml", "--out", "m.txt"]);
    assert!(t.status.success(), "{}", stderr(&t));
    let model = Model::decode(&fs::read_to_string(d.join("m.txt")).unwrap()).unwrap();
    assert_eq!(model.net.hidden_sizes(), vec![8, 4]);
    let stdout = String::from_utf8_lossy(&t.stdout);
    assert!(stdout.contains(&model.digest()), "{stdout}");
    let loss = fs::read_to_string(d.join("m.txt.loss.csv")).unwrap();
    assert_eq!(CsvHeader::parse(&loss).unwrap().columns, vec!["epoch", "loss"]);

    let c = run(d, &["compare", "--config", "tiny.toml", "--model", "m.txt", "--out", "c.csv"]);
    assert!(c.status.success(), "{}", stderr(&c));
    let text = fs::read_to_string(d.join("c.csv")).unwrap();
    let h = CsvHeader::parse(&text).unwrap();
    assert!(h.meta.iter().any(|(k, v)| k == "model_digest" && *v == model.digest()));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn validation_errors_exit_1_and_name_the_field() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "[params]\neta = 1.5\n").unwrap();
    let o = run(d, &["intercept-vs-snr", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.eta"), "{}", stderr(&o));

    fs::write(d.join("typo.toml"), "[params]\nsnr = 3.0\n").unwrap();
    let o = run(d, &["intercept-vs-snr", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("snr"), "{}", stderr(&o));

    let o = run(d, &["intercept-vs-snr", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(d, &["compare", "--config", "tiny.toml", "--model", "missing.txt"]);
    assert_eq!(o.status.code(), Some(1));

    fs::write(d.join("junk.txt"), "noma-mlp 9\n").unwrap();
    let o = run(d, &["compare", "--config", "tiny.toml", "--model", "junk.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("junk.txt"), "{}", stderr(&o));

    let o = run(d, &["intercept-vs-rho", "--config", "tiny.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep.variable"), "{}", stderr(&o));

    let o = run(d, &["intercept-vs-snr", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(d, &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selftest_passes_and_negative_control_exits_2() {
    let dir = setup();
    let d = dir.path();
    let ok = run(d, &["selftest"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let out = String::from_utf8_lossy(&ok.stdout);
    assert!(out.contains("all 6 items passed"), "{out}");

    let bad = run(d, &["selftest", "--specfun-rel-tol", "1e-2"]);
    assert_eq!(bad.status.code(), Some(2));
    let out = String::from_utf8_lossy(&bad.stdout);
    assert!(out.contains("FAIL"), "{out}");
    assert!(stderr(&bad).contains("selftest failed"));
}

#[test]
fn help_exits_0() {
    let o = run(Path::new("."), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("intercept-vs-snr"));
}
