use std::path::Path;
use std::process::{Command, Output};

fn sublab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sublab")).args(args).output().expect("spawn sublab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn product_is_harmonic() {
    let o = sublab(&["check", "--model", "product", "--points", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains(": HARMONIC"), "{}", stdout(&o));
}

#[test]
fn report_is_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = sublab(&[
            "report",
            "--model",
            "loubeau_ou",
            "--points",
            "12",
            "--seed",
            "5",
            "--no-timestamp",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let doc: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(doc["verdict"], "PROPER_BIHARMONIC");
    assert!(doc.get("timestamp").is_none());
}

#[test]
fn csv_has_one_row_per_point() {
    let o = sublab(&["report", "--model", "hopf", "--points", "7", "--format", "csv", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("index,"), "{}", lines[0]);
    assert_eq!(lines.len() - 1, 7);
}

#[test]
fn tension_json_lists_every_point() {
    let o = sublab(&["tension", "--model", "inversion", "--param", "n=3", "--points", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 4);
    assert_eq!(doc["params"]["n"], 3.0);
}

#[test]
fn inline_config_gives_neither() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.toml",
        r#"
[inline]
kind = "map"
components = ["exp(x)"]

[inline.domain]
coords = ["x", "y"]
bounds = [[0.1, 1.0], [-1.0, 1.0]]
metric = [["1", "0"], ["", "1"]]

[inline.codomain]
coords = ["u"]
bounds = [[-10.0, 10.0]]
metric = [["1"]]

[sampling]
points = 6
seed = 2
"#,
    );
    let o = sublab(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("NEITHER"), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[model]\nid = \"product\"\n[sampling]\npoints = \"many\"\n");
    let o = sublab(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4, column 10"), "{}", stderr(&o));

    let o = sublab(&["check", "--model", "product", "--points", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = sublab(&["check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn model_errors_exit_3() {
    let o = sublab(&["check", "--model", "no_such_model"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = sublab(&["check", "--model", "loubeau_ou", "--param", "c1=0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = sublab(&["check", "--model", "product", "--param", "bogus=1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_output_paths_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let csv = dir.path().join("out.csv");
    let text = format!(
        "[model]\nid = \"s2_round\"\n[sampling]\npoints = 3\n[output]\njson = {:?}\ncsv = {:?}\ntimestamp = false\n",
        json.to_str().unwrap(),
        csv.to_str().unwrap()
    );
    let cfg = write(dir.path(), "run.toml", &text);
    let o = sublab(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["records"].as_array().unwrap().len(), 3);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, verdict) in [("loubeau_ou.toml", ": PROPER_BIHARMONIC"), ("warped_inline.toml", ": NEITHER")] {
        let o = Command::new(env!("CARGO_BIN_EXE_sublab"))
            .args(["check", "--points", "5", "--config", root.join(name).to_str().unwrap()])
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(stdout(&o).contains(verdict), "{name}: {}", stdout(&o));
    }
    assert!(dir.path().join("loubeau_ou.csv").exists());
}
