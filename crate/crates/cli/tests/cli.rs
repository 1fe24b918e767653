use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use qrlab_cli::{parse_config, run_experiment, ConfigError, Experiment, Status, EXIT_CONFIG, EXIT_NUMERICAL};

fn qrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn minimal_qfield_config_resolves_documented_defaults() {
    let cfg = parse_config(r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield"}}"#).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.output.dir, Path::new("qrlab-out"));
    assert!(!cfg.output.plot);
    let Experiment::Qfield { grid, hoelder } = &cfg.experiment else {
        panic!("kind changed")
    };
    assert_eq!(grid.center.as_deref(), Some(&[0.0, 0.0][..]));
    assert_eq!(grid.half_width, 20.0);
    assert_eq!(grid.step, Some(0.5));
    assert_eq!(hoelder.ladder.as_deref(), Some(&[1e-1, 1e-2, 1e-3, 1e-4][..]));
    assert_eq!(hoelder.directions, Some(16));
    // the echo parses back to itself
    let echo = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_config(&echo).unwrap(), cfg);
}

#[test]
fn three_dimensional_grid_default_is_coarser() {
    let cfg = parse_config(r#"{"map": {"kind": "zorich"}, "experiment": {"kind": "qfield"}}"#).unwrap();
    let Experiment::Qfield { grid, hoelder } = &cfg.experiment else {
        panic!()
    };
    assert_eq!(grid.step, Some(2.5));
    assert_eq!(grid.center.as_ref().unwrap().len(), 3);
    assert_eq!(hoelder.directions, Some(32));
}

#[test]
fn pyosida_with_p_below_one_names_the_field() {
    let err = parse_config(r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "pyosida", "p": 0.5}}"#)
        .unwrap_err();
    match err {
        ConfigError::Field { path, .. } => assert_eq!(path, "experiment.p"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    for text in [
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield"}, "extra": 1}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "bogus": 1}}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "grid": {"stepp": 1}}}"#,
        r#"{"map": {"kind": "exponential", "k": 2}, "experiment": {"kind": "qfield"}}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield"}, "output": {"plots": true}}"#,
    ] {
        assert!(matches!(parse_config(text), Err(ConfigError::Parse(_))), "{text}");
    }
}

#[test]
fn semantic_violations_carry_field_paths() {
    let cases = [
        (r#"{"experiment": {"kind": "qfield"}}"#, "map"),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "grid": {"step": -1}}}"#,
            "experiment.grid.step",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "hoelder": {"ladder": [1e-2, 1e-1]}}}"#,
            "experiment.hoelder.ladder",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "afr", "radii": [1, 2, 3]}}"#,
            "experiment.radii",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "afr", "radii": [5, 10, 20, 40, 80], "center": [1, 0]}}"#,
            "experiment.center",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "mpdetect", "sequence": {"generator": "m*e1", "truncation": 20}, "delta": 0}}"#,
            "experiment.delta",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "mucheck", "sequence": {"generator": "m*e1", "truncation": 20}, "cover": {"grid_values": 20}}}"#,
            "experiment.cover.grid_values",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "mpdetect", "sequence": {"generator": "m*e1 +", "truncation": 20}}}"#,
            "experiment.sequence",
        ),
        (
            r#"{"map": {"kind": "zorich"}, "experiment": {"kind": "separation", "values": [[1, 0, 0], [2, 0, 0]]}}"#,
            "map",
        ),
        (
            r#"{"experiment": {"kind": "seqdist", "x": {"generator": "m*e1", "truncation": 20}, "y": {"generator": "m*e1", "truncation": 30}}}"#,
            "experiment.y.truncation",
        ),
        (
            r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "pyosida", "p": 2, "anchors": {"from": 10, "to": 100}}}"#,
            "experiment.anchors.to",
        ),
    ];
    for (text, want) in cases {
        match parse_config(text) {
            Err(ConfigError::Field { path, .. }) => assert_eq!(path, want, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn yosida_on_exponential_matches_spherical_derivative_oracle() {
    let cfg = parse_config(r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "yosida"}}"#).unwrap();
    let out = run_experiment(&cfg);
    assert!(out.succeeded());
    let r = &out.report.results["yosida_indicator"];
    // |(e^z)^#| = e^x / (1 + e^{2x}), largest at x = 0 on the grid
    let oracle = (-40..=40)
        .map(|i| {
            let x = 0.5 * i as f64;
            x.exp() / (1.0 + (2.0 * x).exp())
        })
        .fold(0.0, f64::max);
    let sup = r["sup"].as_f64().unwrap();
    assert!((sup - oracle).abs() < 1e-2, "sup {sup} vs {oracle}");
    assert_eq!(r["verdict"], "consistent");
}

#[test]
fn afr_on_exponential_follows_closed_form_and_grows_linearly() {
    let cfg = parse_config(
        r#"{"map": {"kind": "exponential"},
            "experiment": {"kind": "afr", "radii": [5, 7.0710678, 10, 14.142136, 20, 28.284271, 40]}}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg);
    assert!(out.succeeded());
    let curve = &out.report.results["afr_curve"];
    let s = curve["fit"]["exponent"].as_f64().unwrap();
    assert!((s - 1.0).abs() < 0.1, "s = {s}");
    // A(r) = (1/π) ∫ 2√(r² − x²) / (4 cosh² x) dx over |x| < r
    for (r, a) in curve["radii"].as_array().unwrap().iter().zip(curve["values"].as_array().unwrap()) {
        let r = r.as_f64().unwrap();
        let oracle = simpson(|x| 2.0 * (r * r - x * x).max(0.0).sqrt() / (4.0 * x.cosh().powi(2)), -r, r, 20_000) / PI;
        let a = a.as_f64().unwrap();
        assert!((a - oracle).abs() < 0.02 * oracle, "r = {r}: {a} vs {oracle}");
    }
    let csv = String::from_utf8(out.tables[0].to_csv().unwrap()).unwrap();
    assert!(csv.starts_with("r,afr,std_error\n"));
    assert_eq!(csv.lines().count(), 8);
}

/// Drops wall-clock timing and the output directory, which `--out` sets.
fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v["config"]["output"].as_object_mut().unwrap().remove("dir");
    v
}

#[test]
fn same_config_and_seed_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "afr.json",
        r#"{"map": {"kind": "elliptic"}, "experiment": {"kind": "afr", "method": "domain", "dyadic": {"start": 1.25, "count": 5}, "samples": 4000}, "seed": 11}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (out, threads) in [(&a, None), (&b, Some("1")), (&c, None)] {
        let mut args = vec!["afr", "--config", &cfg, "--out", out.to_str().unwrap(), "--plot"];
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        let o = qrlab(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = strip_timing(report(&a));
    assert_eq!(ra, strip_timing(report(&b)));
    for f in ["afr_curve.csv", "afr_curve.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // --seed overrides the config and changes the sample
    let o = qrlab(&["afr", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert!(o.status.success());
    let rc = strip_timing(report(&c));
    assert_eq!(rc["config"]["seed"], 12);
    assert_ne!(rc["results"]["afr_curve"]["values"], ra["results"]["afr_curve"]["values"]);
}

#[test]
fn report_is_rerunnable_from_its_echoed_config() {
    let cfg = parse_config(
        r#"{"map": {"kind": "sine"}, "experiment": {"kind": "nprobe", "samples": 40, "half_width": 20}, "seed": 3}"#,
    )
    .unwrap();
    let first = run_experiment(&cfg);
    let echoed = serde_json::to_string(&first.report.config).unwrap();
    let second = run_experiment(&parse_config(&echoed).unwrap());
    assert_eq!(first.report.results, second.report.results);
    assert_eq!(first.report.schema_version, "qrlab.report/1");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "pyosida", "p": 0.5}}"#,
    );
    let o = qrlab(&["pyosida", "--config", &bad, "--out", out_s]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.p"));
    assert!(!out.join("report.json").exists(), "nothing is computed on config errors");

    let garbled = write_config(dir.path(), "garbled.json", "{ not json");
    assert_eq!(qrlab(&["qfield", "--config", &garbled]).status.code(), Some(EXIT_CONFIG));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        qrlab(&["qfield", "--config", missing.to_str().unwrap()]).status.code(),
        Some(EXIT_CONFIG)
    );

    let q = write_config(
        dir.path(),
        "q.json",
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "grid": {"half_width": 1}}}"#,
    );
    let o = qrlab(&["afr", "--config", &q, "--out", out_s]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));

    // value on the boundary image: the argument principle refuses it
    let np = write_config(
        dir.path(),
        "np.json",
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "nprobe", "samples": 20,
            "probes": [{"center": [0, 0], "radius": 2, "value": [1, 0]},
                       {"center": [0, 0], "radius": 6.283185307179586, "value": [1, 0], "method": "argument_principle"}]}}"#,
    );
    let o = qrlab(&["nprobe", "--config", &np, "--out", out_s]);
    assert_eq!(o.status.code(), Some(EXIT_NUMERICAL));
    let r = report(&out);
    assert_eq!(r["status"], "failed");
    assert_eq!(r["failure"]["kind"], "numerical");
    assert_eq!(r["results"]["count_apoints"].as_array().unwrap().len(), 1);
    let probes = fs::read_to_string(out.join("nprobe_probes.csv")).unwrap();
    assert_eq!(probes.lines().count(), 2);
}

#[test]
fn zoo_lists_kinds_dimensions_and_capabilities() {
    let o = qrlab(&["zoo", "--json"]);
    assert!(o.status.success());
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    let find = |k: &str| rows.iter().find(|r| r["kind"] == k).unwrap_or_else(|| panic!("{k} missing")).clone();
    let e = find("exponential");
    assert_eq!((e["n"].as_str(), e["K"].as_str()), (Some("2"), Some("1")));
    assert_eq!(find("zorich")["n"], "3");
    let sq = find("exp_square");
    assert!(sq["apoints"].as_str().unwrap().contains("no general analytic enumerator"));
    let text = qrlab(&["zoo"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("zorich"));
}

/// Every experiment kind on a small config: status ok, and each CSV header
/// matches the column list the report declares for it.
#[test]
fn every_kind_runs_and_declares_its_csv_columns() {
    let configs = [
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "grid": {"half_width": 2}}}"#,
        r#"{"map": {"kind": "exp_square"}, "experiment": {"kind": "yosida", "grid": {"half_width": 2},
            "path": {"from": 1, "to": 3, "count": 5, "direction": [1, 1]}}}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "pyosida", "p": 2}}"#,
        r#"{"experiment": {"kind": "seqdist", "x": {"generator": "m*e1", "truncation": 64},
            "y": {"generator": "m*e1 + e2/m", "truncation": 64}}}"#,
        r#"{"map": {"kind": "identity"}, "experiment": {"kind": "mpdetect",
            "sequence": {"generator": "m*e1", "truncation": 12}, "grid_size": 50,
            "search": {"cloud": 256, "starts": 4, "max_evals": 100}}}"#,
        r#"{"map": {"kind": "identity"}, "experiment": {"kind": "mucheck",
            "sequence": {"generator": "m*e1", "truncation": 12},
            "cover": {"samples": 2000, "max_evaluations": 50000}}}"#,
        r#"{"map": {"kind": "elliptic"}, "experiment": {"kind": "separation",
            "values": [[0.3, 0.2], [-1.1, 0.7]], "radii": [5, 10]}}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "afr", "samples": 2000}}"#,
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "oscillation", "grid": {"half_width": 2},
            "min_radius": 0.1}}"#,
        r#"{"map": {"kind": "elliptic"}, "experiment": {"kind": "nprobe", "samples": 30,
            "probes": [{"center": [0, 0], "radius": 1.5, "value": "inf"}]}}"#,
    ];
    for text in configs {
        let mut cfg = parse_config(text).unwrap_or_else(|e| panic!("{text}: {e}"));
        cfg.output.plot = true;
        let out = run_experiment(&cfg);
        assert_eq!(out.report.status, Status::Ok, "{text}: {:?}", out.report.failure);
        assert!(!out.tables.is_empty(), "{text}");
        assert!(!out.plots.is_empty(), "{text}");
        for t in &out.tables {
            let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
            let header = csv.lines().next().unwrap();
            let declared = out.report.files.iter().find(|f| f.path == t.file_name()).unwrap();
            assert_eq!(header, declared.columns.join(","), "{}", t.name);
            assert_eq!(csv.lines().count(), t.rows.len() + 1);
        }
        let json = out.report.to_json();
        let back: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["experiment"], cfg.experiment.name());
    }
}

#[test]
fn plots_are_written_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.json",
        r#"{"map": {"kind": "exponential"}, "experiment": {"kind": "qfield", "grid": {"half_width": 1}}}"#,
    );
    let plain = dir.path().join("plain");
    let plotted = dir.path().join("plotted");
    assert!(qrlab(&["qfield", "--config", &cfg, "--out", plain.to_str().unwrap()]).status.success());
    assert!(qrlab(&["qfield", "--config", &cfg, "--out", plotted.to_str().unwrap(), "--plot"])
        .status
        .success());
    assert!(!plain.join("qfield.svg").exists());
    let svg = fs::read_to_string(plotted.join("qfield.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let r = report(&plotted);
    assert!(r["files"].as_array().unwrap().iter().any(|f| f["path"] == "qfield.svg"));
}
