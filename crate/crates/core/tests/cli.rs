use std::path::PathBuf;
use std::process::{Command, Output};

fn razors(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_razors")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("razors-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn verify_all_passes() {
    let out = razors(&["verify-example", "--all"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("all facts pass"));
}

#[test]
fn verify_named_examples() {
    for id in ["E1", "EX_CMC_SGS", "e4", "EX_adjF"] {
        let out = razors(&["verify-example", id]);
        assert_eq!(out.status.code(), Some(0), "{id}: {}", stdout(&out));
    }
    let out = razors(&["verify-example", "E9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("EX_resF"));
}

#[test]
fn hierarchy_reproduces_expected_matrix() {
    let out = razors(&["hierarchy", "--against-paper"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("diffs against expected matrix: 0"));
}

#[test]
fn hierarchy_on_a_single_model_file() {
    let model = scratch("p13.json", r#"{"m": 3, "cis": ["<1,3>"]}"#);
    let out = razors(&["hierarchy", "--model", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("SGS Pm:")).unwrap();
    // The only DAGs in SGS but not Pm are the complete DAGs whose triangle
    // does not carry the collider.
    assert!(line.contains("counterexample"), "{line}");

    let empty = razors(&["hierarchy", "--none"]);
    let text = stdout(&empty);
    assert_eq!(text.lines().filter(|l| l.ends_with("identity")).count(), 13);
    assert_eq!(text.lines().filter(|l| l.ends_with("no evidence")).count(), 156);
}

#[test]
fn classify_and_enumerate() {
    let out = razors(&["classify", "--dag", "catalog:E1:G1", "--model", "catalog:E1"]);
    let text = stdout(&out);
    assert!(text.contains("adjF     in"), "{text}");
    assert!(text.contains("ParamM   out"), "{text}");

    let out = razors(&["--format", "json", "classify", "--dag", "3:1->2,3->2", "--model", "catalog:EX_CMC_SGS"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["memberships"][1][0], "CFC");
    assert_eq!(v["memberships"][1][1]["status"], "in");

    let out = razors(&["enumerate-class", "--razor", "uparamm", "--model", "catalog:E4"]);
    assert!(stdout(&out).starts_with("uParamM: 1 DAGs"));
    let out = razors(&["enumerate-class", "--razor", "ParamM", "--model", "catalog:EX_CMC_SGS"]);
    assert_eq!(out.status.code(), Some(0));
    let out = razors(&["enumerate-class", "--razor", "bogus", "--model", "catalog:E1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dag_files_parse_with_line_numbers() {
    let bad = scratch("bad.dag", "m=3\n1 -> 2\n2 => 3\n");
    let out = razors(&["imset", "--dag", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let good = scratch("chain.dag", "m=3\n1 -> 2\n2 -> 3\n");
    let out = razors(&["imset", "--dag", good.to_str().unwrap(), "--ranges", "2,3,2"]);
    assert!(stdout(&out).contains("8 (tables), 8 (parameterizing sets)"));
}

#[test]
fn chickering_prints_a_transcript() {
    let out = razors(&["chickering", "--from", "3:1->2,1->3,2->3", "--to", "3:1->2,2->3"]);
    assert!(stdout(&out).contains("delete 1->3"), "{}", stdout(&out));
}

#[test]
fn score_dilemma_and_penalty() {
    let out = razors(&[
        "score", "--dag", "catalog:E4:G0", "--dag", "catalog:E4:G1", "--model", "catalog:E4", "--criterion", "both",
        "--n", "100000", "--seed", "7",
    ]);
    let text = stdout(&out);
    assert!(text.contains("NEC prefers G0 (-5 vs -6); BIC prefers G1"), "{text}");

    let out = razors(&["score", "--dag", "5:(empty)", "--model", "catalog:E4", "--criterion", "nec"]);
    assert!(stdout(&out).contains("= -inf"));

    let data = scratch("e1.data", &stdout(&razors(&["sample", "--model", "catalog:E1", "--n", "400", "--seed", "2"])));
    let penalty = |c: &str| -> f64 {
        let out = razors(&["--format", "json", "score", "--dag", "catalog:E1:G0", "--data", data.to_str().unwrap(), "--criterion", "bic", "--c", c]);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["reports"][0]["vertices"].as_array().unwrap().iter().map(|x| x["penalty"].as_f64().unwrap()).sum()
    };
    assert!((penalty("2") - 2.0 * penalty("1")).abs() < 1e-9);

    let out = razors(&["score", "--dag", "2:1->2", "--model", "catalog:E4", "--criterion", "nec"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_is_reproducible() {
    let a = razors(&["sample", "--model", "catalog:E3", "--n", "50", "--seed", "11"]);
    let b = razors(&["sample", "--model", "catalog:E3", "--n", "50", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("source: E3 11"));
}
