use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 7] = [
    "hermite-table",
    "lp-sweep",
    "verify",
    "randomize",
    "integrability-sweep",
    "evolve",
    "report",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grushin"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("grushin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn help_text() -> String {
    let mut s = String::new();
    for args in
        std::iter::once(vec!["--help"]).chain(SUBCOMMANDS.iter().map(|c| vec![*c, "--help"]))
    {
        let out = run(&args);
        assert!(out.status.success());
        s.push_str(&format!("$ grushin {}\n", args.join(" ")));
        s.push_str(&String::from_utf8(out.stdout).unwrap());
        s.push('\n');
    }
    s
}

// regenerate with GRUSHIN_BLESS=1
#[test]
fn help_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    let text = help_text();
    if std::env::var_os("GRUSHIN_BLESS").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden help file");
    assert_eq!(text, expected);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["verify", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["--config", "/nonexistent/grushin.cfg", "verify"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(
        run(&["hermite-table", "--x-count", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn hermite_table_is_deterministic_and_self_describing() {
    let a = run(&["hermite-table", "--m-max", "3", "--x-count", "5"]);
    let b = run(&["hermite-table", "--m-max", "3", "--x-count", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# grushin "));
    assert!(lines.next().unwrap().starts_with("# config={"));
    assert_eq!(lines.next(), Some("m,x,value"));
    assert_eq!(lines.count(), 4 * 5);
}

#[test]
fn verify_embeds_config_and_is_reproducible() {
    let args = [
        "verify", "--suite", "hermite", "--m-max", "64", "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["config"]["command"], "verify");
    assert_eq!(v["config"]["m_max"], 64);
    assert!(v["version"].as_str().unwrap().starts_with("grushin "));
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = scratch("precedence.cfg");
    std::fs::write(&cfg, "# sweep farm defaults\nm_max = 32\nseed = 9\n").unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "verify",
        "--suite",
        "hermite",
        "--m-max",
        "48",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["m_max"], 48);
    assert_eq!(v["seed"], 9);
}

#[test]
fn zero_data_evolves_to_zero() {
    let out = run(&["evolve", "--mode", "det", "--T", "0.01", "--amplitude", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["trace"]["mass"]
        .as_array()
        .unwrap()
        .iter()
        .all(|m| m.as_f64() == Some(0.0)));
    assert_eq!(v["accepted"], true);
}

#[test]
fn snapshots_feed_other_commands() {
    let trace = scratch("run.json");
    let out = run(&[
        "evolve",
        "--snapshot-every",
        "32",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let snaps: Vec<&str> = v["snapshots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert_eq!(snaps, ["run.0000.grsf", "run.0032.grsf"]);
    let last = trace.with_file_name(snaps[1]);
    assert_eq!(&std::fs::read(&last).unwrap()[..5], b"GRSF1");
    let again = run(&[
        "evolve",
        "--input",
        last.to_str().unwrap(),
        "--T",
        "0.001",
        "--nt",
        "5",
    ]);
    assert_eq!(again.status.code(), Some(0));
    let sweep = run(&[
        "integrability-sweep",
        "--input",
        last.to_str().unwrap(),
        "--samples",
        "100",
        "--nt",
        "17",
    ]);
    assert_eq!(sweep.status.code(), Some(0));
    let bad = run(&[
        "evolve",
        "--input",
        last.to_str().unwrap(),
        "--eta-count",
        "4",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn report_exit_code_follows_verdicts() {
    let pass = scratch("pass.json");
    let out = run(&[
        "randomize",
        "--check",
        "non-smoothing",
        "--out",
        pass.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        run(&["report", pass.to_str().unwrap()]).status.code(),
        Some(0)
    );

    let text = std::fs::read_to_string(&pass)
        .unwrap()
        .replace("\"PASS\"", "\"FAIL\"");
    let fail = scratch("fail.json");
    std::fs::write(&fail, text).unwrap();
    let out = run(&["report", pass.to_str().unwrap(), fail.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn rejected_run_still_writes_its_trace() {
    // ‖v‖ leaves the ball R‖u0‖ for this datum
    let path = scratch("escape.json");
    let args = [
        "evolve",
        "--mode",
        "rand",
        "--amplitude",
        "20",
        "--T",
        "0.025",
        "--out",
        path.to_str().unwrap(),
    ];
    assert_eq!(run(&args).status.code(), Some(2));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["accepted"], false);
    let summary = run(&["report", path.to_str().unwrap()]);
    assert_eq!(summary.status.code(), Some(2));
    assert!(String::from_utf8(summary.stdout)
        .unwrap()
        .contains("\tevolve\tFAIL\t"));
    assert!(v["v_sup_h_ell"].as_f64().unwrap() > v["x_norm"].as_f64().unwrap());
}

#[test]
fn csv_reports() {
    let out = run(&[
        "verify", "--suite", "hermite", "--m-max", "32", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("report,")));
    assert!(text.lines().any(|l| l.starts_with("lp_decay,")));
    let lp = run(&["lp-sweep", "--ms", "16,32", "--ps", "4,inf"]);
    let text = String::from_utf8(lp.stdout).unwrap();
    assert!(text.contains("m,p,norm,scaled\n16,4,"));
    assert!(text.contains("\n32,inf,"));
}
