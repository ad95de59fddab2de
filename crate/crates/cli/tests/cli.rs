use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_momentbound"));
    c.env_remove("MOMENTBOUND_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    fs::read_to_string(path).unwrap()
}

#[test]
fn csv_headers_match_golden_files() {
    let cases: [(&str, &[&str]); 5] = [
        ("pt-series", &["pt-series", "--max-q", "6"]),
        (
            "theorem4-bounds",
            &["theorem4-bounds", "--pstar", "6", "--tol", "1e-2"],
        ),
        (
            "emm-bounds",
            &["emm-bounds", "--pstar", "6", "--tol", "1e-2"],
        ),
        ("pade-bounds", &["pade-bounds", "--q", "4"]),
        ("verify", &["verify", "--suite", "pade"]),
    ];
    for (name, args) in cases {
        let text = stdout(&run(args));
        let header = text.lines().next().unwrap();
        assert_eq!(
            format!("{header}\n"),
            golden(&format!("{name}.header")),
            "{name}"
        );
        assert!(text.lines().count() > 1, "{name} printed no rows");
    }
}

#[test]
fn gaussian_table_matches_golden_file() {
    assert_eq!(
        stdout(&run(&["barta-series", "--max-dim", "8"])),
        golden("barta-series.csv")
    );
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.json"));
        let out = run(&[
            "theorem4-bounds",
            "--pstar",
            "6",
            "--tol",
            "1e-3",
            "--format",
            "json",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        texts.push(fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let json: serde_json::Value = serde_json::from_slice(&texts[0]).unwrap();
    let probes = json["rows"][0]["upper_edge"]["probes"].as_array().unwrap();
    assert!(probes
        .iter()
        .any(|p| p["verdict"] == "feasible" && p["witness"].is_array()));
    assert!(probes
        .iter()
        .all(|p| p["cuts"].is_u64() && p["witness_hash"].is_string()));
}

#[test]
fn verify_suite_is_seeded_and_passes() {
    let a = stdout(&run(&["verify", "--suite", "monotonicity", "--seed", "7"]));
    let b = stdout(&run(&["verify", "--suite", "monotonicity", "--seed", "7"]));
    assert_eq!(a, b);
    assert!(
        a.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")),
        "{a}"
    );
}

#[test]
fn exit_codes_separate_failure_kinds() {
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["barta-series", "--precision", "10"]), Some(2));
    assert_eq!(code(&["barta-series", "--max-dim", "0"]), Some(2));
    assert_eq!(
        code(&["pade-bounds", "--config", "/nonexistent/momentbound.conf"]),
        Some(2)
    );
    // Q = 6 classic EMM: the feasible set runs off the scan window.
    assert_eq!(
        code(&["emm-bounds", "--pstar", "3", "--tol", "1e-2"]),
        Some(3)
    );
    // Q = 3 Padé: same situation.
    assert_eq!(code(&["pade-bounds", "--q", "3"]), Some(3));

    let out = bin()
        .env("MOMENTBOUND_PRECISION", "12")
        .args(["barta-series"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "max_dim = 3\nformat = json\n").unwrap();
    let c = conf.to_str().unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["barta-series", "--config", c]))).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    let csv = stdout(&run(&[
        "barta-series",
        "--config",
        c,
        "--max-dim",
        "2",
        "--format",
        "csv",
    ]));
    assert_eq!(csv.lines().count(), 3);

    fs::write(&conf, "max_dim = three\n").unwrap();
    assert_eq!(run(&["barta-series", "--config", c]).status.code(), Some(2));
}

#[test]
fn moments_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("pt.moments");
    let args = |fmt: &'static str| {
        vec![
            "pt-series".to_string(),
            "--max-q".into(),
            "12".into(),
            "--format".into(),
            fmt.into(),
            "--moments-cache".into(),
            cache.to_str().unwrap().into(),
        ]
    };
    let first = stdout(&bin().args(args("csv")).output().unwrap());
    assert!(cache.exists());
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&bin().args(args("json")).output().unwrap())).unwrap();
    assert_eq!(json["moments"], "cache");
    let again = stdout(&bin().args(args("csv")).output().unwrap());
    assert_eq!(first, again);

    // A longer series keeps the cached recipe but regenerates the values.
    let mut longer = args("json");
    longer[2] = "16".into();
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&bin().args(&longer).output().unwrap())).unwrap();
    assert_eq!(json["moments"], "cached-recipe");
    assert_eq!(json["oracle"], serde_json::Value::Null);
}
