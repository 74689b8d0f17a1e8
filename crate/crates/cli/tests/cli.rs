use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qnlp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnlp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DISCO_SEED")
        .output()
        .expect("binary runs")
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_under(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn gen_data_writes_default_sizes_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = qnlp(&["gen-data", "--seed", "11"], dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(lines(&a.join("data.tsv")), 100);
    assert_eq!(lines(&a.join("train.tsv")), 70);
    assert_eq!(lines(&a.join("test.tsv")), 30);
    for name in ["data.tsv", "train.tsv", "test.tsv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn oversized_dataset_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qnlp(&["gen-data", "--n", "500"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("InsufficientCombinations"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn bad_settings_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["train", "--backend", "gpu"],
        vec!["train", "--kernel", "rbf"],
        vec!["train", "--noise-profile", "unknown"],
        vec!["train", "--config", "/nonexistent/qnlp.ini"],
        vec!["train", "--lexicon", "/nonexistent/lexicon.tsv"],
        vec!["train", "--q-s", "2"],
    ] {
        let o = qnlp(&args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn stages_need_their_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qnlp(&["train"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("gen-data"), "{}", stderr(&o));
}

#[test]
fn env_seed_and_config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.ini");
    fs::write(&cfg, "[data]\nn = 40\n[run]\nseeds = 3, 4\n").unwrap();
    let from_env = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_qnlp"))
        .args(["gen-data", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&from_env)
        .env("DISCO_SEED", "9")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(lines(&from_env.join("data.tsv")), 40);
    let from_flag = tmp.path().join("flag");
    let o = qnlp(&["gen-data", "--n", "40", "--seed", "9"], &from_flag);
    assert!(o.status.success());
    assert_eq!(
        fs::read(from_env.join("data.tsv")).unwrap(),
        fs::read(from_flag.join("data.tsv")).unwrap()
    );
    let overridden = tmp.path().join("over");
    let o = qnlp(
        &["gen-data", "--config", cfg.to_str().unwrap(), "--n", "50"],
        &overridden,
    );
    assert!(o.status.success());
    assert_eq!(lines(&overridden.join("data.tsv")), 50);
}

#[test]
fn full_run_layout_and_byte_identical_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["full", "--epochs", "3", "--seeds", "0,1"];
    for dir in [&a, &b] {
        let o = qnlp(&args, dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }

    assert_eq!(lines(&a.join("history_0.csv")), 1 + 3 + 1);
    assert!(a.join("embeddings_1.txt").exists());
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    assert_eq!(metrics["seeds"].as_array().unwrap().len(), 2);
    assert!(metrics["test_acc"]["stderr"].is_number());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    for key in ["explicit", "transition", "swap"] {
        assert!(summary[key]["test_acc"]["mean"].is_number(), "{key}");
    }

    let seed_dir = a.join("swap").join("seed_0");
    let train = fs::read_to_string(seed_dir.join("train.csv")).unwrap();
    let rows: Vec<Vec<f64>> = train
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 70);
    for (i, r) in rows.iter().enumerate() {
        assert!((r[i] - 1.0).abs() < 1e-10);
    }
    let test = fs::read_to_string(seed_dir.join("test.csv")).unwrap();
    let test_rows: Vec<&str> = test.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(test_rows.len(), 30);
    assert!(test_rows.iter().all(|l| l.split(',').count() == 70));
    let regions = fs::read_to_string(seed_dir.join("regions.tsv")).unwrap();
    let names: Vec<&str> = regions
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(names, ["Class 0", "Class 1", "Mixed"]);
    assert!(fs::read(seed_dir.join("train.pgm"))
        .unwrap()
        .starts_with(b"P5"));

    let svm: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(seed_dir.join("metrics.json")).unwrap()).unwrap();
    let mut keys: Vec<&str> = svm
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "C",
            "backend",
            "kernel",
            "n_support",
            "schema_version",
            "seed",
            "test_acc",
            "train_acc"
        ]
    );
    assert_eq!(svm["kernel"], "swap");
    assert_eq!(svm["backend"], "exact");

    let (fa, fb) = (files_under(&a), files_under(&b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }

    let corrupt = seed_dir.join("train.csv");
    fs::write(&corrupt, train.replacen(",", ",oops", 1)).unwrap();
    let o = qnlp(&["svm", "--kernel", "swap", "--seeds", "0,1"], &a);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 9"), "{}", stderr(&o));

    let o = qnlp(
        &[
            "svm",
            "--kernel",
            "swap",
            "--seeds",
            "1",
            "--backend",
            "noisy",
        ],
        &a,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("backend"), "{}", stderr(&o));
}
