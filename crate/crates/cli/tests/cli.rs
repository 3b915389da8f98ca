use std::path::{Path, PathBuf};

use csf_lab_cli::{run, ContestSpecFile};
use proptest::prelude::*;
use tempfile::TempDir;

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("csf-lab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_spec(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const LUCK111: &str = r#"{"n":3,"family":"luck_tullock","a":[1,1,1],"b":[1,1,1],"r":1}"#;
const LUCK111_Q: &str =
    r#"{"n":3,"family":"luck_tullock","a":[1,1,1],"b":[1,1,1],"r":1,"backend":"rational"}"#;
const TULLOCK: &str = r#"{"n":3,"family":"tullock","a":[1,2,0.5],"r":1}"#;

#[test]
fn eval_prints_probabilities() {
    let dir = TempDir::new().unwrap();
    let f = write_spec(&dir, "f.json", LUCK111);
    let q = write_spec(&dir, "q.json", LUCK111_Q);
    let (code, out, _) = cli(&["eval", "--spec", s(&f), "--profile", "2,1,0"]);
    assert_eq!((code, out.as_str()), (0, "0.5, 0.333333, 0.166667\n"));
    let (code, out, _) = cli(&["eval", "--spec", s(&q), "--profile", "2,1,0"]);
    assert_eq!((code, out.as_str()), (0, "1/2, 1/3, 1/6\n"));
}

#[test]
fn eval_subset_and_lambda() {
    let dir = TempDir::new().unwrap();
    let q = write_spec(&dir, "q.json", LUCK111_Q);
    let (_, out, _) = cli(&["eval", "--spec", s(&q), "--profile", "2,1,0", "--subset", "0b101"]);
    assert_eq!(out, "3/4, 1/4\n");
    let (_, out, _) = cli(&["eval", "--spec", s(&q), "--profile", "2,1,0", "--lambda", "2"]);
    assert_eq!(out, "5/9, 1/3, 1/9\n");
}

#[test]
fn worked_example_passes() {
    let (code, out, _) = cli(&["paper-examples"]);
    assert_eq!(code, 0);
    for frac in ["1/2", "5/9", "3/2", "5/3"] {
        assert!(out.contains(frac), "{out}");
    }
    assert!(out.ends_with("PASS\n"));
}

#[test]
fn tullock_passes_its_axioms() {
    let dir = TempDir::new().unwrap();
    let t = write_spec(&dir, "t.json", TULLOCK);
    let (code, _, err) = cli(&[
        "check",
        "--spec",
        s(&t),
        "--axiom",
        "HOM,RH,HRE,DC,CRI,SM,LCA",
        "--samples",
        "2000",
        "--expect",
        "holds",
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn failed_expectation_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = write_spec(&dir, "f.json", LUCK111);
    let (code, out, _) = cli(&["check", "--spec", s(&f), "--axiom", "HOM", "--expect", "holds"]);
    assert_eq!(code, 1);
    assert!(out.contains("Violated"));
    let (code, _, _) = cli(&[
        "falsify",
        "--spec",
        s(&f),
        "--axiom",
        "RH",
        "--expect",
        "violated",
    ]);
    assert_eq!(code, 0);
    let (code, _, _) = cli(&[
        "falsify",
        "--spec",
        s(&f),
        "--axiom",
        "HRE",
        "--expect",
        "violated",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn csv_is_deterministic_and_can_go_to_a_file() {
    let dir = TempDir::new().unwrap();
    let f = write_spec(&dir, "f.json", LUCK111);
    let out_path = dir.path().join("report.csv");
    let args = [
        "check",
        "--spec",
        s(&f),
        "--axiom",
        "all",
        "--seed",
        "3",
        "--samples",
        "500",
        "--format",
        "csv",
    ];
    let (_, a, _) = cli(&args);
    let (_, b, _) = cli(&args);
    assert_eq!(a, b);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", s(&out_path)]);
    let (code, printed, _) = cli(&with_out);
    assert_eq!(code, 0);
    assert!(printed.is_empty());
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), a);
    let mut lines = a.lines();
    assert_eq!(
        lines.next(),
        Some("command,family,axiom_or_metric,status,witness,lhs,rhs,gap,seed")
    );
    assert_eq!(lines.count(), 13);
}

#[test]
fn decompose_and_equilibrium() {
    let dir = TempDir::new().unwrap();
    let q = write_spec(&dir, "q.json", LUCK111_Q);
    let (code, out, _) = cli(&["decompose", "--spec", s(&q), "--profile", "2,1,0"]);
    assert_eq!(code, 0);
    assert_eq!(out, "mu: 1/3, 1/6, 0\nmu_null: 1/2\nalpha: 1/3, 1/3, 1/3\n");

    let lottery = write_spec(&dir, "l.json", r#"{"n":2,"family":"tullock","a":[1,1],"r":1}"#);
    let (code, out, _) = cli(&["equilibrium", "--spec", s(&lottery), "--expect", "verified"]);
    assert_eq!(code, 0);
    assert!(out.contains("x*: 0.25, 0.25"), "{out}");

    let steep = write_spec(&dir, "s.json", r#"{"n":2,"family":"tullock","a":[1,1],"r":3}"#);
    let (code, out, _) = cli(&["equilibrium", "--spec", s(&steep), "--expect", "unverified"]);
    assert_eq!(code, 0);
    assert!(out.contains("warning: r > 1"), "{out}");
}

#[test]
fn sweep_reports_monotone_totals() {
    let dir = TempDir::new().unwrap();
    let sym = write_spec(
        &dir,
        "s.json",
        r#"{"n":2,"family":"symmetric_luck","b_scalar":0,"r":1}"#,
    );
    let (code, out, _) = cli(&[
        "sweep",
        "--spec",
        s(&sym),
        "--expect",
        "monotone",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let totals: Vec<f64> = out
        .lines()
        .filter(|l| l.contains("total_effort"))
        .map(|l| l.rsplit(',').nth(3).unwrap().parse().unwrap())
        .collect();
    let expected = [0.5, 0.3, 0.1, 0.0];
    assert_eq!(totals.len(), 4);
    for (t, e) in totals.iter().zip(expected) {
        assert!((t - e).abs() < 1e-6, "{totals:?}");
    }
    let lottery = write_spec(&dir, "l.json", TULLOCK);
    assert_eq!(cli(&["sweep", "--spec", s(&lottery)]).0, 2);
}

#[test]
fn usage_and_spec_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let f = write_spec(&dir, "f.json", LUCK111);
    let bad_r = write_spec(
        &dir,
        "bad.json",
        r#"{"n":3,"family":"luck_tullock","a":[1,1,1],"b":[1,1,1],"r":0.5,"backend":"rational"}"#,
    );
    let missing = dir.path().join("missing.json");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["eval", "--spec", s(&f)],
        vec!["eval", "--spec", s(&f), "--profile", "1,2"],
        vec!["eval", "--spec", s(&f), "--profile", "1,2,-1"],
        vec!["eval", "--spec", s(&f), "--profile", "0,0,0", "--subset", "0b1"],
        vec!["eval", "--spec", s(&missing), "--profile", "1,2,3"],
        vec!["eval", "--spec", s(&bad_r), "--profile", "1,2,3"],
        vec!["check", "--spec", s(&f), "--axiom", "XYZ"],
        vec!["check", "--spec", s(&f), "--expect", "monotone"],
        vec!["check", "--spec", s(&f), "--format", "xml"],
        vec!["equilibrium", "--spec", s(&f), "--values", "1,1"],
    ];
    for args in cases {
        let (code, _, err) = cli(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn evaluation_errors_become_rows() {
    let dir = TempDir::new().unwrap();
    let t = write_spec(&dir, "t.json", TULLOCK);
    let (code, out, err) = cli(&["eval", "--spec", s(&t), "--profile", "0,0,0", "--format", "csv"]);
    assert_eq!(code, 2);
    assert!(out.contains(",Error,"), "{out}");
    assert!(err.contains("zero"), "{err}");
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("paper-examples"));
}

fn family() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("luck_tullock"),
        Just("tullock"),
        Just("linear_headstart"),
        Just("symmetric_luck"),
        Just("ratio"),
        Just("custom_table"),
    ]
    .prop_map(str::to_owned)
}

fn valid_spec() -> impl Strategy<Value = ContestSpecFile> {
    (
        family(),
        2usize..6,
        prop::collection::vec(0.1f64..5.0, 6),
        prop::collection::vec(0.0f64..3.0, 6),
        prop_oneof![Just(1.0), Just(2.0), 0.1f64..3.0],
        any::<bool>(),
    )
        .prop_map(|(fam, n, a, b, r, rational)| {
            let json = serde_json::json!({
                "n": n,
                "family": fam,
                "a": a[..n],
                "b": b[..n],
                "r": r,
                "b_scalar": b[0],
                "custom_table": [[[0.0, b[0]], [1.0, b[0] + a[0]], [3.0, b[0] + a[0] + a[1]]]],
                "backend": if rational { "rational" } else { "float64" },
            });
            let keep: &[&str] = match fam.as_str() {
                "luck_tullock" => &["a", "b", "r"],
                "tullock" => &["a", "r"],
                "linear_headstart" => &["b"],
                "symmetric_luck" => &["b_scalar", "r"],
                "ratio" => &[],
                _ => &["custom_table"],
            };
            let mut obj = json.as_object().unwrap().clone();
            obj.retain(|k, _| keep.contains(&k.as_str()) || ["n", "family", "backend"].contains(&k.as_str()));
            serde_json::from_value(serde_json::Value::Object(obj)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Loading and re-serializing a spec changes nothing.
    #[test]
    fn spec_files_round_trip(file in valid_spec()) {
        if let Ok(loaded) = file.load() {
            let again = ContestSpecFile::describe(&loaded).unwrap();
            prop_assert_eq!(&again, &file);
            let reparsed = ContestSpecFile::from_json(&again.to_json()).unwrap();
            prop_assert_eq!(&reparsed, &file);
            let reloaded = reparsed.load().unwrap();
            prop_assert_eq!(reloaded.spec.summary(), loaded.spec.summary());
            prop_assert_eq!(reloaded.backend, loaded.backend);
        }
    }

    /// Arbitrary bytes as a spec file never crash the program and always
    /// exit with 0 or 2.
    #[test]
    fn malformed_spec_files_exit_two(text in ".{0,80}") {
        let dir = TempDir::new().unwrap();
        let p = write_spec(&dir, "x.json", &text);
        let (code, _, _) = cli(&["eval", "--spec", s(&p), "--profile", "1,1"]);
        prop_assert!(code == 2 || code == 0);
    }

    /// Mutated fields of a valid file: accepted or rejected with 2.
    #[test]
    fn mutated_spec_files(
        n in -1i64..9,
        r in prop_oneof![Just(-1.0), Just(0.0), Just(f64::NAN), 0.1f64..3.0],
        a0 in prop_oneof![Just(-1.0), Just(0.0), 0.1f64..3.0],
        fam in prop_oneof![family(), Just("bogus".to_string())],
    ) {
        let r = if r.is_nan() { serde_json::Value::Null } else { serde_json::json!(r) };
        let text = serde_json::json!({"n": n, "family": fam, "a": [a0, 1, 1], "b": [1, 0, 1], "r": r}).to_string();
        let dir = TempDir::new().unwrap();
        let p = write_spec(&dir, "x.json", &text);
        let (code, out, _) = cli(&["eval", "--spec", s(&p), "--profile", "1,2,3"]);
        prop_assert!(code == 0 || code == 2, "{code} {text}");
        if code == 0 {
            prop_assert_eq!(out.split(", ").count(), 3);
        }
    }

    /// Random argument vectors never panic; exit codes stay in the contract.
    #[test]
    fn random_argv(args in prop::collection::vec(
        prop_oneof![
            Just("eval".to_string()), Just("check".to_string()), Just("--spec".to_string()),
            Just("--profile".to_string()), Just("--axiom".to_string()), Just("1,2".to_string()),
            Just("--format".to_string()), Just("csv".to_string()), "[a-z0-9-]{0,6}",
        ],
        0..6,
    )) {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _, _) = cli(&argv);
        prop_assert!([0, 1, 2].contains(&code));
    }
}
