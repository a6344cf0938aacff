use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use geonet_core::experiments::{is_timing_key, strip_timings, BENCH_COLUMNS};
use serde_json::Value;

fn geonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geonet"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let o = geonet(&[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Usage: geonet"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_and_flag_exit_1() {
    assert_eq!(code(&geonet(&["frobnicate"])), 1);
    let o = geonet(&["bench", "--colour", "red"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--colour"));
}

#[test]
fn help_exits_0() {
    let o = geonet(&["bench", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("--repeats"));
}

#[test]
fn out_of_range_probability_names_the_flag() {
    let o = geonet(&["bench", "--p", "1.5"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--p"), "{}", stderr(&o));
}

#[test]
fn bench_two_sizes_gives_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = geonet(&["bench", "--sizes", "100,200", "--p", "0.05", "--repeats", "3", "--seed", "1", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], BENCH_COLUMNS.join(","));
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("100,0.05,gap,range:10,"));
    assert!(lines[2].starts_with("100,0.05,adjacency,range:10,"));
    assert!(lines[2].ends_with(",635,0,1,3"));
}

#[test]
fn bench_json_and_bad_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let args = ["bench", "--sizes", "60", "--repeats", "1", "--workers", "0"];
    let o = geonet(&[&args[..], &["--out", path_str(&out)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["repeats"], 1);
    assert_eq!(v["config"]["warmup"], 1);

    let o = geonet(&[&args[..], &["--out", path_str(&dir.path().join("b.txt"))]].concat());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--out"));
}

#[test]
fn generate_encode_decode_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (g, e, back) = (dir.path().join("g.txt"), dir.path().join("g.gge"), dir.path().join("back.txt"));
    let o = geonet(&["gen-graph", "--model", "er", "--n", "80", "--p", "0.1", "--seed", "4", "--out", path_str(&g)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for strategy in ["louvain", "range:4", "range:sqrt"] {
        let o = geonet(&["encode", "--graph", path_str(&g), "--partition", strategy, "--workers", "3", "--out", path_str(&e)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(fs::read(&e).unwrap().starts_with(b"GGE1"));
        let o = geonet(&["encode", "--decode", path_str(&e), "--out", path_str(&back)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(fs::read(&g).unwrap(), fs::read(&back).unwrap(), "{strategy}");
    }
    let m = dir.path().join("m.json");
    let o = geonet(&["metrics", "--graph", path_str(&g), "--partition", "range:4", "--out", path_str(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(v["runs"][0]["nodes"], 80);
    assert_eq!(v["runs"][0]["clusters"], 4);
    let cc = v["runs"][0]["clustering_coefficient"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&cc));
}

#[test]
fn generator_needs_its_model_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let o = geonet(&["gen-graph", "--model", "ws", "--n", "30", "--k", "4", "--out", path_str(&g)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--beta"));
    let o = geonet(&["gen-graph", "--model", "ba", "--n", "30", "--m", "2", "--out", path_str(&g)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Invalid model parameters are runtime failures.
    let o = geonet(&["gen-graph", "--model", "ws", "--n", "30", "--k", "3", "--beta", "0.1", "--out", path_str(&g)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn missing_inputs_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let o = geonet(&["metrics", "--graph", path_str(&missing)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("absent.txt"));

    let nowhere = dir.path().join("nowhere");
    let o = geonet(&["dimred", "--method", "baseline", "--data-dir", path_str(&nowhere)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nowhere"), "{}", stderr(&o));

    let garbage = dir.path().join("bad.gge");
    fs::write(&garbage, b"NOPE").unwrap();
    let o = geonet(&["encode", "--decode", path_str(&garbage), "--out", path_str(&missing)]);
    assert_eq!(code(&o), 2);
}

fn stripped_json(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    strip_timings(&mut v);
    v
}

#[test]
fn train_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let (out, grid, model) = (
            dir.path().join(format!("{tag}.json")),
            dir.path().join(format!("{tag}-grid.csv")),
            dir.path().join(format!("{tag}-model.json")),
        );
        let o = geonet(&[
            "train", "--dataset", "circles", "--activation", "poly:3", "--epochs", "40", "--samples", "120",
            "--grid-size", "20", "--seed", "9", "--out", path_str(&out), "--grid", path_str(&grid), "--model",
            path_str(&model),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (stripped_json(&out), fs::read(&grid).unwrap(), fs::read(&model).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert_eq!(a.0["config"]["activation"], "poly:3");
    assert_eq!(a.0["config"]["train"]["seed"], 9);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 401);
}

/// Drops the timing column so two bench CSVs can be compared byte for byte.
fn csv_without_timings(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    text.lines()
        .map(|l| {
            l.split(',')
                .zip(&header)
                .filter(|(_, h)| !is_timing_key(h))
                .map(|(v, _)| v)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = geonet(&["bench", "--sizes", "50,120", "--repeats", "2", "--seed", "3", "--partition", "louvain", "--out", path_str(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(csv_without_timings(&a), csv_without_timings(&b));
    assert!(!csv_without_timings(&a).contains("encode_ms_median"));
}

fn write_fixture(dir: &Path) {
    use geonet_core::datasets::{write_idx, Dataset};
    use geonet_core::numkit::Matrix;
    for (prefix, n) in [("train", 300), ("t10k", 60)] {
        let mut pixels = Vec::with_capacity(n * 784);
        for i in 0..n {
            let digit = i % 10;
            pixels.extend((0..784).map(|p| if (p / 28) / 2 == digit { 1.0 } else { 0.0 }));
        }
        let labels = (0..n).map(|i| i % 10).collect();
        let d = Dataset::new("fixture", Matrix::new(n, 784, pixels).unwrap(), labels, Some(10)).unwrap();
        write_idx(
            &d,
            28,
            28,
            dir.join(format!("{prefix}-images-idx3-ubyte")),
            dir.join(format!("{prefix}-labels-idx1-ubyte")),
        )
        .unwrap();
    }
}

#[test]
fn dimred_and_prune_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let data = path_str(dir.path());
    let common = ["--data-dir", data, "--hidden", "16", "--epochs", "3", "--lr", "0.01", "--batch-size", "30", "--seed", "2"];

    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = geonet(&[&["dimred", "--method", "pca:12"][..], &common, &["--out", path_str(out)]].concat());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let v = stripped_json(&a);
    assert_eq!(v, stripped_json(&b));
    assert_eq!(v["runs"][0]["features"], 12);
    assert!(v["runs"][0]["explained_variance_ratio"].as_f64().unwrap() > 0.99);

    let csv = dir.path().join("ae.csv");
    let o = geonet(&[&["dimred", "--method", "ae:8", "--ae-epochs", "2"][..], &common, &["--out", path_str(&csv)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("section,key,value\nexperiment,name,dimred/ae\n"));
    assert!(text.contains("\nrun0,features,8\n"));

    let (report, sens) = (dir.path().join("p.json"), dir.path().join("s.json"));
    let o = geonet(&[
        &["prune", "--fraction", "0.5", "--fine-tune-epochs", "1", "--sensitivity", path_str(&sens)][..],
        &common,
        &["--out", path_str(&report)],
    ]
    .concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stripped_json(&report);
    assert_eq!(r["runs"][0]["mask_preserved"], true);
    assert!((r["runs"][0]["sparsity"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    let s: Value = serde_json::from_str(&fs::read_to_string(&sens).unwrap()).unwrap();
    assert_eq!(s["probe_samples"], 300);
    assert!(!s["layers"].as_array().unwrap().is_empty());

    let o = geonet(&[&["prune", "--fraction", "2"][..], &common].concat());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--fraction"));
}
