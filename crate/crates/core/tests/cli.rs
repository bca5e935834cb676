use std::process::Command;

fn run(args: &[&str], cache: &std::path::Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_almost-pyth"))
        .args(args)
        .env("ALMOST_PYTH_CACHE", cache)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn classgroup_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["classgroup", "-m", "974", "--pillar", "5,41"], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("h = 36"));
    assert!(out.contains("Cl(K) = C12 x C3"));
    assert!(out.contains("Cl(K)/E = C6 x C3"));
    assert!(out.contains("pillars = 5 (h=6), 41 (h=3)"));
    let (code, out, _) = run(&["classgroup", "-m", "23"], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("h = 3") && out.contains("|E| = 1"));
    let (code, _, err) = run(&["classgroup", "-m", "12"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("not square-free"));
    assert_eq!(run(&["classgroup", "-m", "3"], dir.path()).0, 2);
    assert_eq!(
        run(&["classgroup", "-m", "974", "--pillar", "5,3"], dir.path()).0,
        2
    );
}

#[test]
fn classgroup_json_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a, _) = run(&["classgroup", "-m", "974", "--json"], dir.path());
    let (_, b, _) = run(&["classgroup", "-m", "974", "--json"], dir.path());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(serde_json::to_string(&v).unwrap(), a.trim_end());
    assert_eq!(v["h"], 36);
    assert_eq!(v["quotient"], serde_json::json!([6, 3]));
}

#[test]
fn generators_examples() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["generators", "-m", "35", "--bound", "17"], dir.path());
    assert_eq!(code, 0);
    let triples: Vec<&str> = out
        .lines()
        .filter_map(|l| l.split_whitespace().nth(2))
        .collect();
    assert_eq!(triples, ["[1,1,6]", "[13,3,22]", "[19,3,26]", "[29,3,34]"]);
    let (_, out, _) = run(
        &["generators", "-m", "23", "--bound", "3", "--pillar", "3"],
        dir.path(),
    );
    assert!(out.contains("beta(2) = [11,1,12]") && out.contains("beta(3) = [19,4,27]"));
    let (_, out, _) = run(
        &["generators", "-m", "23", "--bound", "3", "--pillar", "2"],
        dir.path(),
    );
    assert!(out.contains("beta(2) = [7,3,16]") && out.contains("beta(3) = [11,1,12]"));
    assert_eq!(
        run(&["generators", "-m", "23", "--bound", "1"], dir.path()).0,
        2
    );
    let (_, out, _) = run(&["generators", "-m", "7", "--bound", "10"], dir.path());
    assert!(out.contains("special = [3,1,4]"));
}

#[test]
fn decompose_examples() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(
        &[
            "decompose",
            "-m",
            "974",
            "--pillar",
            "5,41",
            "4141",
            "66",
            "4625",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(
        out.trim_end(),
        r#"{"input":[4141,66,4625],"m":974,"special":0,"terms":[{"coeff":-1,"p":5},{"coeff":1,"p":37}],"verified":true}"#
    );
    let (_, out, _) = run(&["decompose", "-m", "23", "1", "0", "1"], dir.path());
    assert!(out.contains(r#""terms":[]"#));
    let (_, out, _) = run(&["decompose", "-m", "7", "1", "3", "8"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["special"].as_i64().unwrap().abs(), 2);
    assert_eq!(v["terms"], serde_json::json!([]));
    let (_, out, _) = run(
        &[
            "decompose",
            "-m",
            "974",
            "--pillar",
            "5,41",
            "-4141",
            "-66",
            "4625",
        ],
        dir.path(),
    );
    assert!(out.contains(r#""input":[4141,66,4625]"#));
    assert_eq!(
        run(&["decompose", "-m", "7", "1", "3", "9"], dir.path()).0,
        3
    );
    assert_eq!(
        run(&["decompose", "-m", "7", "1", "x", "9"], dir.path()).0,
        2
    );
}

#[test]
fn beta_command() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(
        &["beta", "-m", "974", "--pillar", "5,41", "37", "--json"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["triple"], serde_json::json!([3167, 108, 4625]));
    assert_eq!(v["category"], "composite");
    assert_eq!(run(&["beta", "-m", "974", "7"], dir.path()).0, 1);
}

#[test]
fn verify_command_survives_corrupted_cache() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["verify-paper"], dir.path());
    assert_eq!(code, 0, "{out}");
    assert!(!out.contains("FAIL"));
    let cached: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!cached.is_empty());
    // corrupt every cached document; the run must recompute and still pass
    for path in &cached {
        let text = std::fs::read_to_string(path).unwrap();
        std::fs::write(
            path,
            text.replace("[37,30,937]", "[1,0,1]")
                .replace("\"forms\":[[", "\"forms\":[[9,"),
        )
        .unwrap();
    }
    std::fs::write(dir.path().join("m35_auto.json"), "not json").unwrap();
    let (code, out, _) = run(&["verify-paper"], dir.path());
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = run(&["verify-paper", "--m", "35"], dir.path());
    assert_eq!(code, 0);
    assert!(out
        .lines()
        .filter(|l| l.starts_with("PASS"))
        .all(|l| l.contains("m=35")));
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 4);
}

#[test]
fn generators_output_is_deterministic_with_and_without_cache() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "generators",
        "-m",
        "974",
        "--pillar",
        "5,41",
        "--bound",
        "300",
        "--json",
    ];
    let (_, cold, _) = run(&args, dir.path());
    let (_, warm, _) = run(&args, dir.path());
    let mut no_cache = args.to_vec();
    no_cache.push("--no-cache");
    let (_, none, _) = run(&no_cache, dir.path());
    assert_eq!(cold, warm);
    assert_eq!(cold, none);
}
