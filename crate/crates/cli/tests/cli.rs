use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fracsig::idx::{encode_images, encode_labels, PIXELS};

fn fracsig() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracsig"));
    cmd.env_remove("FRACSIG_DATA_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    fracsig().args(args).output().unwrap()
}

fn parse_sig(text: &str) -> (Vec<String>, Vec<f64>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let values = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    (header, values)
}

fn write_path(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ZIGZAG: &str = "x,y,z\n0,0,1\n1,0.5,0\n0.5,2,-1\n-1,1,0.5\n0,-0.5,2\n";

#[test]
fn classical_l_path() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_path(dir.path(), "l.csv", "0,0\n1,0\n1,1\n");
    let out = run(&["sig", "--kind", "classical", "--level", "2", "--input", &input]);
    assert!(out.status.success());
    let (header, values) = parse_sig(&String::from_utf8(out.stdout).unwrap());
    let at = |name: &str| values[header.iter().position(|h| h == name).unwrap()];
    assert_eq!(at("s_1_2"), 1.0);
    assert_eq!(at("s_2_1"), 0.0);
}

#[test]
fn discrete_level_four_has_120_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_path(dir.path(), "p.csv", ZIGZAG);
    let output = dir.path().join("sig.csv");
    let out = run(&[
        "sig", "--kind", "discrete", "--alpha", "1.15", "--level", "4", "--input", &input, "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, values) = parse_sig(&fs::read_to_string(&output).unwrap());
    assert_eq!(header.len(), 120);
    assert_eq!(values.len(), 120);
    assert_eq!(header[0], "s_1");
    assert_eq!(header[119], "s_3_3_3_3");
}

#[test]
fn discrete_at_unit_alpha_equals_classical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_path(dir.path(), "p.csv", ZIGZAG);
    let c = run(&["sig", "--kind", "classical", "--level", "4", "--input", &input]);
    let d = run(&["sig", "--kind", "discrete", "--alpha", "1", "--level", "4", "--input", &input]);
    let (_, cv) = parse_sig(&String::from_utf8(c.stdout).unwrap());
    let (_, dv) = parse_sig(&String::from_utf8(d.stdout).unwrap());
    for (x, y) in cv.iter().zip(&dv) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn fractional_needs_grid_and_rounds_it() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_path(dir.path(), "p.csv", ZIGZAG);
    let out = run(&["sig", "--kind", "fractional", "--alpha", "0.5", "--level", "2", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "sig", "--kind", "fractional", "--alpha", "0.5", "--level", "2", "--grid", "255", "--input", &input,
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("256"));
}

#[test]
fn usage_and_data_exit_codes() {
    let out = run(&["sig", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["sig", "--kind", "classical", "--level", "0", "--input", "x"]).status.code(), Some(1));
    assert_eq!(run(&["sig", "--kind", "discrete", "--alpha", "-1", "--level", "2", "--input", "x"]).status.code(), Some(1));
    assert_eq!(run(&["sig", "--kind", "classical", "--level", "2", "--input", "/no/such.csv"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write_path(dir.path(), "bad.csv", "1,2\n3,oops\n");
    assert_eq!(run(&["sig", "--kind", "classical", "--level", "2", "--input", &bad]).status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

fn digit(k: usize) -> Vec<u8> {
    (0..PIXELS).map(|i| ((i * 13 + k * 29) % 89 * (i % 3)) as u8).collect()
}

fn mnist_fixture(dir: &Path, train: usize, test: usize) {
    let imgs: Vec<Vec<u8>> = (0..train + test).map(digit).collect();
    let labels: Vec<u8> = (0..train + test).map(|k| (k % 10) as u8).collect();
    let write = |name: &str, bytes: Vec<u8>| fs::write(dir.join(name), bytes).unwrap();
    write("train-images-idx3-ubyte", encode_images(imgs[..train].iter().map(Vec::as_slice)));
    write("train-labels-idx1-ubyte", encode_labels(&labels[..train]));
    write("t10k-images-idx3-ubyte", encode_images(imgs[train..].iter().map(Vec::as_slice)));
    write("t10k-labels-idx1-ubyte", encode_labels(&labels[train..]));
}

#[test]
fn mnist_features_are_reproducible() {
    let data = tempfile::tempdir().unwrap();
    mnist_fixture(data.path(), 6, 3);
    let out_dir = tempfile::tempdir().unwrap();
    let args = |jobs: &str, sub: &str| {
        let o = out_dir.path().join(sub);
        run(&[
            "--jobs", jobs, "mnist-features", "--alpha", "1.15", "--level", "2", "--data-dir",
            data.path().to_str().unwrap(), "--output-dir", o.to_str().unwrap(),
        ])
    };
    assert!(args("1", "a").status.success());
    assert!(args("3", "b").status.success());
    for name in ["features_alpha1.15_L2_train.csv", "features_alpha1.15_L2_test.csv", "features_alpha1.15_L2_train.stats"] {
        let a = fs::read(out_dir.path().join("a").join(name)).unwrap();
        let b = fs::read(out_dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let train = fs::read_to_string(out_dir.path().join("a/features_alpha1.15_L2_train.csv")).unwrap();
    let mut lines = train.lines();
    assert_eq!(lines.next().unwrap(), "label,s_1,s_2,s_3,s_1_1,s_1_2,s_1_3,s_2_1,s_2_2,s_2_3,s_3_1,s_3_2,s_3_3");
    assert_eq!(lines.count(), 6);
    let stats = fs::read_to_string(out_dir.path().join("a/features_alpha1.15_L2_test.stats")).unwrap();
    assert_eq!(stats.lines().count(), 2);
    assert!(stats.lines().all(|l| l.split(',').count() == 12));
}

#[test]
fn alpha_sweep_and_data_dir_env() {
    let data = tempfile::tempdir().unwrap();
    mnist_fixture(data.path(), 2, 1);
    let out = tempfile::tempdir().unwrap();
    let status = fracsig()
        .env("FRACSIG_DATA_DIR", data.path())
        .args(["mnist-features", "--alpha-sweep", "0.9,1.1", "--level", "1", "--output-dir"])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let mut names: Vec<String> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "features_alpha0.9_L1_test.csv",
            "features_alpha0.9_L1_train.csv",
            "features_alpha1.1_L1_test.csv",
            "features_alpha1.1_L1_train.csv"
        ]
    );

    let full = tempfile::tempdir().unwrap();
    let status = fracsig()
        .env("FRACSIG_DATA_DIR", data.path())
        .args(["mnist-features", "--alpha-sweep", "--level", "1", "--output-dir"])
        .arg(full.path())
        .status()
        .unwrap();
    assert!(status.success());
    let count = fs::read_dir(full.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().file_name().to_string_lossy().ends_with("_train.csv")
    }).count();
    assert_eq!(count, 13);
    assert!(full.path().join("features_alpha0.85_L1_train.csv").exists());
    assert!(full.path().join("features_alpha1.4_L1_train.csv").exists());
}

#[test]
fn missing_or_corrupt_dataset_is_data_error() {
    let empty = tempfile::tempdir().unwrap();
    let out = run(&["mnist-features", "--alpha", "1", "--level", "1", "--data-dir", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    mnist_fixture(empty.path(), 2, 1);
    let labels = empty.path().join("train-labels-idx1-ubyte");
    fs::write(&labels, encode_labels(&[1, 2, 3])).unwrap();
    let out = run(&["mnist-features", "--alpha", "1", "--level", "1", "--data-dir", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));
    let out = run(&["mnist-features", "--alpha", "1", "--level", "9", "--data-dir", empty.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_path(dir.path(), "p.csv", ZIGZAG);
    let cfg = write_path(dir.path(), "run.cfg", &format!("# sig settings\nkind=discrete\nalpha=1.15\nlevel=2\ninput={input}\n"));
    let from_cfg = run(&["sig", "--config", &cfg]);
    assert!(from_cfg.status.success(), "{}", String::from_utf8_lossy(&from_cfg.stderr));
    let direct = run(&["sig", "--kind", "discrete", "--alpha", "1.15", "--level", "2", "--input", &input]);
    assert_eq!(from_cfg.stdout, direct.stdout);
    // command line wins over the file
    let overridden = run(&["sig", "--config", &cfg, "--level", "1"]);
    assert_eq!(String::from_utf8(overridden.stdout).unwrap().lines().next().unwrap(), "s_1,s_2,s_3");
}

#[test]
fn verify_fde_small_battery() {
    let out = run(&["verify-fde", "--cases", "1", "--grid", "256"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("case,alpha,e,d,knots,iterate,max_rel_err,status"));
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 3 * 4 + 1);
    assert!(!text.contains("FAIL"));
}
