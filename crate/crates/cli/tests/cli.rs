use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netanom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netanom")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = netanom(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

const SMALL: &[&str] = &[
    "--set", "basic.null_draws=200",
    "--set", "community.replicas=3",
    "--set", "localisation.replicas=5",
    "--set", "localisation.max_vectors=3",
    "--set", "netemd.references=5",
    "--set", "netemd.nulls=10",
    "--set", "path.beam_width=50",
    "--set", "path.replicas=2",
    "--set", "path.max_size=8",
];

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_detect_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["generate", "er", "--n", "150", "--p", "0.03", "--w", "0.95", "--count-min", "2", "--count-max", "2",
         "--seed", "4", "--out", p(&net)]);
    let edges = net.join("edges.csv");
    let truth = net.join("truth.csv");
    assert!(fs::read_to_string(&truth).unwrap().contains("#structure,"));

    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let mut args = vec!["detect", "--graph", p(&edges), "--out", p(&out)];
        args.extend_from_slice(SMALL);
        ok(&args);
        runs.push(out);
    }
    for file in ["features.csv", "ranking_feature_sum.csv"] {
        assert_eq!(fs::read(runs[0].join(file)).unwrap(), fs::read(runs[1].join(file)).unwrap(), "{file}");
    }
    let header = fs::read_to_string(runs[0].join("features.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 141);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(runs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["netemd.nulls"], "10");
    assert_eq!(m["config"]["path.beam_width"], "50");

    let o = ok(&["evaluate", "--scores", p(&runs[0].join("ranking_feature_sum.csv")), "--truth", p(&truth)]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("measure,k,value\nprecision,1,"));
    assert!(text.lines().last().unwrap().starts_with("average_precision,,"));

    let odd = dir.path().join("odd");
    ok(&["oddball", "--graph", p(&edges), "--out", p(&odd)]);
    let rel = fs::read_to_string(odd.join("oddball_relationships.csv")).unwrap();
    assert_eq!(rel.lines().count(), 151);
    assert_eq!(rel.lines().next().unwrap().split(',').count(), 10);
    ok(&["evaluate", "--scores", p(&odd.join("oddball_sum.csv")), "--truth", p(&truth)]);
}

#[test]
fn train_predict_rank_curve() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model");
    let mut args = vec!["train", "--out", p(&model)];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&[
        "--set", "train.n=120", "--set", "train.regimes=1", "--set", "train.networks=2",
        "--set", "train.train_fraction=0.5", "--set", "train.plant_count_min=2", "--set", "train.plant_count_max=2",
        "--set", "select.cutoff=12",
    ]);
    ok(&args);
    let curve = fs::read_to_string(model.join("rank_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 141);
    assert_eq!(fs::read_to_string(model.join("selected_features.csv")).unwrap().lines().count(), 13);

    let again = ok(&["rank-curve", "--importances", p(&model.join("importances.csv"))]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), curve);

    let net = dir.path().join("net");
    ok(&["generate", "er", "--n", "120", "--p", "0.03", "--w", "0.95", "--count-min", "2", "--count-max", "2",
         "--out", p(&net)]);
    let det = dir.path().join("det");
    let (edges, forest) = (net.join("edges.csv"), model.join("forest.json"));
    let mut args = vec!["detect", "--graph", p(&edges), "--model", p(&forest), "--out", p(&det)];
    args.extend_from_slice(SMALL);
    ok(&args);
    let scores = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&model.join("forest.json")), "--features", p(&det.join("features.csv")),
         "--out", p(&scores)]);
    assert_eq!(fs::read(&scores).unwrap(), fs::read(det.join("ranking_forest.csv")).unwrap());
    for line in fs::read_to_string(&scores).unwrap().lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn bounds_and_grid() {
    let o = ok(&["bounds", "--n", "55000", "--sizes", "8,12"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let clique8: f64 = text.lines().find(|l| l.starts_with("clique,8,")).unwrap()[9..].parse().unwrap();
    assert!((clique8 - 0.0328).abs() / 0.0328 < 1e-2);
    let o = ok(&["bounds", "--n", "10000", "--grid"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 28);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(netanom(&["oddball", "--graph", p(&missing), "--out", p(dir.path())]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,-1\n").unwrap();
    assert_eq!(netanom(&["detect", "--graph", p(&bad), "--out", p(dir.path())]).status.code(), Some(2));
    let good = dir.path().join("good.csv");
    fs::write(&good, "a,b,1\nb,c,2\n").unwrap();
    let o = netanom(&["detect", "--graph", p(&good), "--set", "nope=1", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
    assert_eq!(netanom(&["bounds", "--n", "1"]).status.code(), Some(2));
    assert_eq!(netanom(&["frobnicate"]).status.code(), Some(2));
    let scores = dir.path().join("s.csv");
    fs::write(&scores, "node,score\na,1\n").unwrap();
    let truth = dir.path().join("t.csv");
    fs::write(&truth, "node,label\na,1\nz,0\n").unwrap();
    let o = netanom(&["evaluate", "--scores", p(&scores), "--truth", p(&truth)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("z"));
    let unwritable = dir.path().join("good.csv").join("sub");
    assert_eq!(netanom(&["oddball", "--graph", p(&good), "--out", p(&unwritable)]).status.code(), Some(3));
}
