use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use tempfile::TempDir;

fn ris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-emi"))
        .args(args)
        .env_remove("RIS_EMI_THREADS")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn csv_rows(file: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(file).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for out in [&a, &b] {
        ok(&ris(&[
            "sweep-power", "--n", "49", "--p-dbm-range", "0:20:10", "--m", "2,4", "--trials", "1", "--seed", "7",
            "--r", "100", "--out", out,
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (header, rows) = csv_rows(&a);
    assert_eq!(
        &header[..6],
        &["swept_value", "scheme", "mean_sinr_db", "stderr_db", "op@100", "det_err_rate"].map(String::from)
    );
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(Path::new(&format!("{a}.manifest.json")).exists());
}

#[test]
fn empty_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = ris(&["sweep-power", "--p-dbm-range", "", "--out", &path(&dir, "x.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let out = ris(&["sweep-power", "--p-dbm-range", "10:0:1", "--out", &path(&dir, "x.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let out = ris(&["sweep-power", "--n", "50", "--out", &path(&dir, "x.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("50"));
}

#[test]
fn malformed_samples_report_the_line() {
    let dir = TempDir::new().unwrap();
    let samples = path(&dir, "s.txt");
    std::fs::write(&samples, "# header\n1.5\n\n2.5\n3.x\n").unwrap();
    let out = ris(&["fit", "--samples", &samples, "--out", &path(&dir, "f.json")]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":5:"), "{err}");
}

#[test]
fn too_few_samples_is_a_fit_error() {
    let dir = TempDir::new().unwrap();
    let samples = path(&dir, "s.txt");
    std::fs::write(&samples, "1\n2\n3\n").unwrap();
    let out = ris(&["fit", "--samples", &samples, "--out", &path(&dir, "f.json")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn replay_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let first = path(&dir, "first.csv");
    ok(&ris(&[
        "--threads", "1", "outage", "--n", "25,49", "--p-dbm-range", "10,25", "--trials", "400", "--seed", "3",
        "--out", &first,
    ]));
    let manifest = format!("{first}.manifest.json");
    for threads in ["2", "4"] {
        let again = path(&dir, &format!("again{threads}.csv"));
        ok(&ris(&["--threads", threads, "replay", &manifest, "--out", &again]));
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap(), "threads={threads}");
    }
}

#[test]
fn size_sweep_has_one_row_per_point_and_scheme() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "size.csv");
    ok(&ris(&["sweep-size", "--nh", "3,4,5", "--rho-db", "0,5", "--trials", "20", "--out", &out]));
    let (header, rows) = csv_rows(&out);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let mut keys: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r[col("swept_value")].clone(), r[col("rho_db")].clone(), r[col("scheme")].clone()))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 12);
    for r in &rows {
        let nh: usize = r[col("swept_value")].parse().unwrap();
        assert_eq!(r[col("n_elements")], (nh * nh).to_string());
    }
}

#[test]
fn fit_recovers_synthetic_gamma() {
    let dir = TempDir::new().unwrap();
    let samples = path(&dir, "g.txt");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dist = Gamma::new(2.955, 470.391).unwrap();
    let text: String = (0..20_000).map(|_| format!("{}\n", dist.sample(&mut rng))).collect();
    std::fs::write(&samples, text).unwrap();
    let report = path(&dir, "fit.json");
    let curve = path(&dir, "curve.csv");
    ok(&ris(&["fit", "--samples", &samples, "--out", &report, "--curve", &curve]));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let a = json["shape"].as_f64().unwrap();
    let b = json["scale"].as_f64().unwrap();
    assert!((a / 2.955 - 1.0).abs() < 0.03, "shape {a}");
    assert!((b / 470.391 - 1.0).abs() < 0.03, "scale {b}");
    assert!(json["ks_statistic"].as_f64().unwrap() < 0.02);
    let (header, rows) = csv_rows(&curve);
    assert_eq!(header, ["x", "pdf", "cdf", "empirical_cdf"]);
    assert!(rows.len() > 100);
}

#[test]
fn config_file_sets_the_base_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "link.toml");
    std::fs::write(&cfg, "n_elements = 25\ntransmit_power_dbm = 15.0\nrho_db = 5.0\nslots_per_block = 3\n").unwrap();
    let out = path(&dir, "p.csv");
    ok(&ris(&["--config", &cfg, "sweep-power", "--p-dbm-range", "0,5", "--n", "36", "--trials", "10", "--out", &out]));
    let (header, rows) = csv_rows(&out);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[col("n_elements")], "36");
        assert_eq!(r[col("rho_db")], "5");
        assert_eq!(r[col("slots_per_block")], "3");
    }

    std::fs::write(&cfg, "n_elements = 25\nbogus = 1\n").unwrap();
    let bad = ris(&["--config", &cfg, "sweep-power", "--out", &out]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn outage_with_published_fit_adds_theory_column() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "o.csv");
    ok(&ris(&[
        "outage", "--n", "49", "--p-dbm-range", "20,30", "--trials", "200", "--fit", "table", "--scheme", "proposed",
        "--out", &out,
    ]));
    let (header, rows) = csv_rows(&out);
    let theory = header.iter().position(|h| h == "op_theory@200").expect("theory column");
    for r in &rows {
        let p: f64 = r[theory].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["job"]["kind"], "outage");
    assert_eq!(manifest["seed"], 1);
}
