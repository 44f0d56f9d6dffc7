use std::fs;
use std::path::PathBuf;

use vertiflow::cli::{parse_grid, run};
use vertiflow::io::{read_design, METRICS_HEADER};

fn fixture(name: &str) -> String {
    [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect::<PathBuf>().display().to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("vertiflow").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn validate_accepts_fixtures() {
    let (code, out, err) = call(&["validate", "--network", &fixture("example2.json")]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "ok: 4 nodes, 4 links, 3 demands, 1 candidates\n");
    assert!(err.starts_with("config-hash: "));
}

#[test]
fn duplicate_node_id_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.json");
    let text = fs::read_to_string(fixture("example1.json")).unwrap().replacen("\"id\": 1,", "\"id\": 0,", 1);
    fs::write(&path, text).unwrap();
    let (code, _, err) = call(&["validate", "--network", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("error: duplicate node id 0"), "{err}");
    let (code, _, err) = call(&["design", "--network", path.to_str().unwrap(), "--budget", "1", "--w", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("duplicate node id 0"), "{err}");
}

#[test]
fn malformed_file_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"format\": \"vertiflow/1\",\n  \"nodes\": 3\n}\n").unwrap();
    let (code, _, err) = call(&["throughput", "--network", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && err.contains("nodes"), "{err}");
    let (code, _, _) = call(&["validate", "--network", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["design", "--network", "x.json"]).0, 2);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("gen-case"));
    let (code, _, err) = call(&["sweep", "--network", &fixture("example2.json"), "--budgets", "5,1", "--w", "0.1"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn throughput_lists_scenarios() {
    let (code, out, err) = call(&["throughput", "--network", &fixture("example2.json"), "--backup", "2"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "scenario\tprobability\tthroughput\tverified");
    assert!(lines.last().unwrap().starts_with("expected\t1\t"));
    assert!(lines.iter().any(|l| *l == "v3@1\t0.05\t15\ttrue"), "{out}");
}

#[test]
fn design_methods_agree_and_feed_metrics() {
    let net = fixture("example2.json");
    let mut objectives = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    for method in ["dual-milp", "direct-milp", "brute-force"] {
        let path = dir.path().join(format!("{method}.json"));
        let args = ["design", "--network", &net, "--budget", "10", "--w", "0.01", "--method", method, "--out", path.to_str().unwrap()];
        let (code, out, err) = call(&args);
        assert_eq!(code, 0, "{err}");
        assert!(out.is_empty());
        let d = read_design(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(d.method, method);
        objectives.push(d.objective);
    }
    assert!(objectives.iter().all(|o| (o - objectives[0]).abs() <= 1e-6), "{objectives:?}");

    let (code, out, err) = call(&["metrics", "--network", &net, "--design", dir.path().join("dual-milp.json").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], METRICS_HEADER);
    assert!(lines[1].starts_with("10,0.01,dual-milp,"));
    // pair (0, 3) has no direct link, so diversity and coverage stay empty
    assert!(lines[1].ends_with(",,,,,,,,,,"), "{}", lines[1]);
}

#[test]
fn design_can_dump_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("m.lp");
    let net = fixture("example2.json");
    let (code, out, err) = call(&["design", "--network", &net, "--budget", "10", "--w", "0.01", "--dump-lp", lp.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(read_design(&out).unwrap().method, "direct-milp");
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("Maximize\n obj:"));
    assert!(text.contains("\nSubject To\n") && text.contains("\nBinaries\n") && text.ends_with("End\n"));
    let args = ["design", "--network", &net, "--budget", "10", "--w", "0.01", "--method", "brute-force", "--dump-lp", lp.to_str().unwrap()];
    assert_eq!(call(&args).0, 2);
}

#[test]
fn gen_case_is_repeatable() {
    let a = call(&["gen-case", "--topology", "multi-star", "--seed", "5"]);
    let b = call(&["gen-case", "--topology", "multi-star", "--seed", "5"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.json");
    assert_eq!(call(&["gen-case", "--topology", "multi-star", "--seed", "5", "--out", path.to_str().unwrap()]).0, 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), a.1);
    let (code, out, _) = call(&["validate", "--network", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, "ok: 15 nodes, 64 links, 64 demands, 45 candidates\n");
    assert_eq!(call(&["gen-case", "--topology", "ring"]).0, 2);
    assert_eq!(call(&["gen-case", "--topology", "star", "--pairs", "11"]).0, 2);
}

#[test]
fn sweep_writes_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let args = ["sweep", "--network", &fixture("example2.json"), "--budgets", "0:10:2", "--w", "0.01,0.1", "--method", "direct-milp", "--out", d.path().to_str().unwrap()];
        let (code, out, err) = call(&args);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("12 grid points written to "));
    }
    for f in ["designs.json", "metrics.csv", "enhancement.csv", "diversity.csv", "coverage.csv"] {
        assert_eq!(fs::read(dirs[0].path().join(f)).unwrap(), fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn star_budget_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--network", &fixture("star.json"), "--budgets", "0:150:5", "--w", "0.2", "--out", dir.path().to_str().unwrap()];
    let (code, out, err) = call(&args);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("31 grid points written to "));
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    let col = METRICS_HEADER.split(',').position(|h| h == "delta_bar").unwrap();
    let deltas: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(deltas.len(), 31);
    assert!(deltas.windows(2).all(|p| p[1] >= p[0] - 1e-9), "{deltas:?}");
}

#[test]
fn grids() {
    assert_eq!(parse_grid("0:60:5").unwrap().len(), 13);
    assert_eq!(parse_grid("0.1:0.5:0.1").unwrap().len(), 5);
    assert_eq!(parse_grid("0.1,0.2, 0.3").unwrap(), vec![0.1, 0.2, 0.3]);
    assert_eq!(parse_grid("7").unwrap(), vec![7.0]);
    assert!(parse_grid("1:0:1").is_err());
    assert!(parse_grid("0:1:0").is_err());
    assert!(parse_grid("a,b").is_err());
    assert!(parse_grid("1:2").is_err());
}
