use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FANO: &str = r#"{"v":7,"blocks":[[0,1,2],[0,3,4],[0,5,6],[1,3,5],[1,4,6],[2,3,6],[2,4,5]]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonincidence"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// STS(21) with a sub-STS(9), plus its certificate.
fn sts21(dir: &TempDir) -> (PathBuf, PathBuf) {
    let design = dir.path().join("sts21.json");
    let o = run(&[
        "construct",
        "--order",
        "21",
        "--sub",
        "9",
        "--seed",
        "1",
        "--out",
        p(&design),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (design.clone(), dir.path().join("sts21.json.cert.json"))
}

#[test]
fn construct_with_subsystem_certifies_twelve() {
    let dir = TempDir::new().unwrap();
    let (design, cert) = sts21(&dir);
    let d = json(&design);
    assert_eq!(d["v"], 21);
    assert_eq!(d["blocks"].as_array().unwrap().len(), 70);
    let c = json(&cert);
    assert_eq!(c["Y"].as_array().unwrap().len(), 12);
    assert_eq!(c["C"].as_array().unwrap().len(), 12);
    assert_eq!(c["digest_algorithm"], "sha256");
}

#[test]
fn construct_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["construct", "--order", "19", "--seed", "5", "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn doubling_records_a_maximal_arc() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("sts19.json");
    let cert = dir.path().join("arc.json");
    let o = run(&[
        "construct",
        "--order",
        "19",
        "--double-from",
        "9",
        "--out",
        p(&design),
        "--cert",
        p(&cert),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = json(&cert);
    assert_eq!(c["Y"].as_array().unwrap().len(), 10);
    assert_eq!(c["C"].as_array().unwrap().len(), 12);
    assert_eq!(c["meta"]["kind"], "maximal_arc");
    let o = run(&["verify", "--design", p(&design), "--cert", p(&cert)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn inadmissible_and_inconsistent_orders_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&["construct", "--order", "11", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not admissible"));
    assert!(!out.exists());
    let o = run(&[
        "construct",
        "--order",
        "21",
        "--double-from",
        "9",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    let o = run(&["construct", "--order", "15", "--sub", "9", "--out", p(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = run(&[
        "construct",
        "--order",
        "21",
        "--sub",
        "9",
        "--double-from",
        "9",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn exhausted_budget_is_retryable() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&[
        "construct",
        "--order",
        "43",
        "--sub",
        "21",
        "--budget",
        "10",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn bound_values() {
    for (v, expected) in [("39", "26"), ("3", "0"), ("21", "12"), ("91", "70")] {
        let o = run(&["bound", "--order", v]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).trim(), expected);
    }
    assert_ne!(code(&run(&["bound", "--order", "11"])), 0);
}

#[test]
fn bound_curve_crosses_the_diagonal_at_26() {
    let o = run(&["bound", "--order", "39", "--curve"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,bound,diagonal"));
    let rows: Vec<Vec<i64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 40);
    let equal: Vec<i64> = rows.iter().filter(|r| r[1] == r[2]).map(|r| r[0]).collect();
    assert_eq!(equal, [26]);

    let o = run(&["bound", "--order", "39", "--curve", "--format", "json"]);
    let data: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(data["crossing_s"], 26);
}

#[test]
fn families_enumerate_and_classify() {
    let o = run(&["families", "--zmax", "0"]);
    assert_eq!(code(&o), 0);
    let orders: Vec<u64> = stdout(&o)
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["v"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert_eq!(orders, [1, 21, 39, 91]);

    let o = run(&["families", "--classify", "91"]);
    let r: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!((r["family"].as_u64(), r["z"].as_u64()), (Some(4), Some(0)));

    let o = run(&["families", "--classify", "15"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "none"));

    assert_eq!(code(&run(&["families"])), 2);
}

#[test]
fn exact_search_on_fano() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("fano.json");
    let report = dir.path().join("report.json");
    let cert = dir.path().join("cert.json");
    fs::write(&design, FANO).unwrap();
    let o = run(&[
        "search",
        "--design",
        p(&design),
        "--exact",
        "--out",
        p(&report),
        "--cert",
        p(&cert),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&report);
    assert_eq!(r["best_s"], 2);
    assert_eq!(r["exact"], true);
    assert_eq!(r["method"], "exact");
    let o = run(&[
        "verify",
        "--design",
        p(&design),
        "--cert",
        p(&cert),
        "--require-square",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn greedy_search_reaches_the_bound_at_21() {
    let dir = TempDir::new().unwrap();
    let (design, _) = sts21(&dir);
    let report = dir.path().join("report.json");
    let o = run(&[
        "search",
        "--design",
        p(&design),
        "--greedy",
        "--seed",
        "1",
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&report);
    assert!(r["best_s"].as_u64().unwrap() >= 12);
    assert_eq!(r["method"], "greedy");
}

#[test]
fn search_reports_are_reproducible_and_threads_agree() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("sts19.json");
    assert_eq!(
        code(&run(&[
            "construct",
            "--order",
            "19",
            "--seed",
            "3",
            "--out",
            p(&design)
        ])),
        0
    );
    let mut reports = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let o = run(&[
            "search",
            "--design",
            p(&design),
            "--threads",
            threads,
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        reports.push(fs::read_to_string(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let a: Value = serde_json::from_str(&reports[0]).unwrap();
    let c: Value = serde_json::from_str(&reports[2]).unwrap();
    assert_eq!(a["best_s"], c["best_s"]);
    assert_eq!(a["certificate"], c["certificate"]);
}

#[test]
fn truncated_exact_search_exits_retryable() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("sts31.json");
    assert_eq!(
        code(&run(&[
            "construct",
            "--order",
            "31",
            "--seed",
            "2",
            "--out",
            p(&design)
        ])),
        0
    );
    let out = dir.path().join("r.json");
    let o = run(&[
        "search",
        "--design",
        p(&design),
        "--budget",
        "10",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    let r = json(&out);
    assert_eq!(r["exact"], false);
    assert!(r["certificate"].is_object());
}

#[test]
fn corrupt_design_names_uncovered_pairs() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("broken.json");
    fs::write(
        &design,
        r#"{"v":7,"blocks":[[0,1,2],[0,3,4],[0,5,6],[1,3,5],[1,4,6],[2,3,6]]}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["search", "--design", p(&design), "--out", p(&out)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("pair coverage"), "{err}");
    assert!(
        err.contains("{2,4}") && err.contains("{2,5}") && err.contains("{4,5}"),
        "{err}"
    );
    assert!(err.contains("block count"), "{err}");

    fs::write(&design, "not json").unwrap();
    assert_eq!(
        code(&run(&["search", "--design", p(&design), "--out", p(&out)])),
        1
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&run(&["search", "--design", p(&missing), "--out", p(&out)])),
        1
    );
}

#[test]
fn verify_accepts_the_equality_certificate() {
    let dir = TempDir::new().unwrap();
    let (design, cert) = sts21(&dir);
    let o = run(&[
        "verify",
        "--design",
        p(&design),
        "--cert",
        p(&cert),
        "--require-square",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("s=12 ≤ bound 12"), "{}", stdout(&o));
}

#[test]
fn verify_names_an_injected_incidence() {
    let dir = TempDir::new().unwrap();
    let (design, cert) = sts21(&dir);
    let d = json(&design);
    let mut c = json(&cert);
    // swap in a block through the first certified point
    let point = c["Y"][0].as_u64().unwrap();
    let block = d["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .position(|b| {
            b.as_array()
                .unwrap()
                .iter()
                .any(|x| x.as_u64() == Some(point))
        })
        .unwrap();
    c["C"][0] = block.into();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&c).unwrap()).unwrap();
    let o = run(&["verify", "--design", p(&design), "--cert", p(&bad)]);
    assert_eq!(code(&o), 1);
    let expected = format!("point {point} lies on block {block}");
    assert!(stdout(&o).contains(&expected), "{}", stdout(&o));
}

#[test]
fn verify_against_the_wrong_design_is_a_digest_mismatch() {
    let dir = TempDir::new().unwrap();
    let (_, cert) = sts21(&dir);
    let other = dir.path().join("other.json");
    let o = run(&[
        "construct",
        "--order",
        "21",
        "--seed",
        "8",
        "--out",
        p(&other),
    ]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", "--design", p(&other), "--cert", p(&cert)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("hashes to"));

    let fano = dir.path().join("fano.json");
    fs::write(&fano, FANO).unwrap();
    assert_eq!(
        code(&run(&["verify", "--design", p(&fano), "--cert", p(&cert)])),
        4
    );
}

#[test]
fn non_square_certificate_fails_when_squareness_is_required() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("sts9.json");
    let cert = dir.path().join("cert.json");
    let digest = {
        let o = run(&["construct", "--order", "9", "--out", p(&design)]);
        let text = stdout(&o);
        let line = text.lines().find(|l| l.starts_with("design ")).unwrap();
        line.split_whitespace().nth(1).unwrap().to_string()
    };
    // point 0 against every block missing it
    let d = json(&design);
    let blocks: Vec<usize> = d["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.as_array().unwrap().iter().any(|x| x.as_u64() == Some(0)))
        .map(|(i, _)| i)
        .collect();
    let c = serde_json::json!({
        "v": 9, "digest_algorithm": "sha256", "design_digest": digest, "Y": [0], "C": blocks,
    });
    fs::write(&cert, c.to_string()).unwrap();
    assert_eq!(
        code(&run(&[
            "verify",
            "--design",
            p(&design),
            "--cert",
            p(&cert)
        ])),
        0
    );
    let o = run(&[
        "verify",
        "--design",
        p(&design),
        "--cert",
        p(&cert),
        "--require-square",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("not square"), "{}", stdout(&o));
}
