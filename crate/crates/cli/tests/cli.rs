use std::path::Path;
use std::process::{Command, Output};

fn rawmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rawmap"))
        .args(args)
        .output()
        .expect("run rawmap")
}

fn ok(args: &[&str]) -> String {
    let out = rawmap(args);
    assert!(
        out.status.success(),
        "rawmap {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// gen + index + map on a small d1-like set; returns the directory.
fn small_run(dir: &Path) {
    ok(&["gen", "--preset", "d1-like", "--reads", "30", "--out-dir", s(dir)]);
    ok(&[
        "index",
        "-r", s(&dir.join("reference.fa")),
        "-p", s(&dir.join("pore_model.tsv")),
        "-o", s(&dir.join("index.bin")),
    ]);
    ok(&[
        "map",
        "-i", s(&dir.join("index.bin")),
        "-s", s(&dir.join("signals.tsv")),
        "-o", s(&dir.join("mappings.tsv")),
        "-t", s(&dir.join("trace.tsv")),
    ]);
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["gen", "index", "map", "eval", "simulate", "report"] {
        let text = ok(&[sub, "--help"]);
        assert!(text.contains("Usage"), "{sub}");
    }
    assert!(ok(&["--help"]).contains("simulate"));
}

#[test]
fn gen_is_deterministic_and_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |d: &Path, seed: &str| {
        let d = d.to_str().unwrap().to_string();
        ok(&["--seed", seed, "gen", "--preset", "d1-like", "--reads", "10", "--out-dir", &d])
    };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let strip = |m: String, d: &Path| m.replace(d.to_str().unwrap(), "");
    let ma = strip(args(&a, "5"), &a);
    let mb = strip(args(&b, "5"), &b);
    let mc = strip(args(&c, "6"), &c);
    assert_eq!(ma, mb);
    assert_ne!(ma, mc);
    assert!(ma.contains("file\tbytes\tcrc32"));
    for f in ["reference.fa", "pore_model.tsv", "signals.tsv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_preset_lists_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rawmap(&["gen", "--preset", "nope", "--out-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("d1-like") && err.contains("d5-like"), "{err}");
}

#[test]
fn missing_index_exits_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.idx");
    let out = rawmap(&[
        "map",
        "-i", s(&missing),
        "-s", s(&tmp.path().join("signals.tsv")),
        "-o", s(&tmp.path().join("m.tsv")),
        "-t", s(&tmp.path().join("t.tsv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.idx"));
}

#[test]
fn map_eval_simulate_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_run(d);
    let mappings = std::fs::read_to_string(d.join("mappings.tsv")).unwrap();
    assert!(mappings.starts_with("#read_id\t"));
    assert_eq!(mappings.lines().count(), 31);

    let summary = ok(&[
        "eval",
        "-m", s(&d.join("mappings.tsv")),
        "-s", s(&d.join("signals.tsv")),
        "-o", s(&d.join("accuracy.tsv")),
    ]);
    assert!(summary.contains("F1"));

    ok(&["simulate", "-t", s(&d.join("trace.tsv")), "-o", s(&d.join("cost.tsv"))]);
    let cost = std::fs::read_to_string(d.join("cost.tsv")).unwrap();
    let total = |sys: &str| -> f64 {
        cost.lines()
            .map(|l| l.split('\t').collect::<Vec<_>>())
            .find(|f| f[0] == "total" && f[1] == sys)
            .unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!(total("MARS") <= total("MS-SmartSSD"));
    assert!(total("MS-SmartSSD") <= total("MARS-External"));

    let report = ok(&[
        "report",
        "-c", s(&d.join("cost.tsv")),
        "-a", s(&d.join("accuracy.tsv")),
    ]);
    assert!(report.contains("MARS-BitSerial") && report.contains("accuracy:"));
}

#[test]
fn simulate_single_system_and_bad_name() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_run(d);
    ok(&["simulate", "-t", s(&d.join("trace.tsv")), "-s", "mars", "-o", s(&d.join("c.tsv"))]);
    let rows = std::fs::read_to_string(d.join("c.tsv")).unwrap();
    assert!(rows.lines().skip(1).all(|l| l.split('\t').nth(1) == Some("MARS")));

    let out = rawmap(&["simulate", "-t", s(&d.join("trace.tsv")), "-s", "gpu", "-o", s(&d.join("x.tsv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn float_arithmetic_flag_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_run(d);
    ok(&[
        "--arithmetic", "float",
        "map",
        "-i", s(&d.join("index.bin")),
        "-s", s(&d.join("signals.tsv")),
        "-o", s(&d.join("float.tsv")),
        "-t", s(&d.join("float_trace.tsv")),
    ]);
    let out = rawmap(&["--arithmetic", "double", "gen", "--out-dir", s(d)]);
    assert!(!out.status.success());
}
