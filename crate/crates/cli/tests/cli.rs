use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tardos(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tardos")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "tardos {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(tardos(args).stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(1).filter(|l| !l.starts_with('#')).collect()
}

fn work(csv: &str) -> usize {
    let footer = csv.lines().find(|l| l.starts_with("# work")).unwrap();
    footer.rsplit("dot_products_total=").next().unwrap().parse().unwrap()
}

/// codebook of 2000 users, ℓ = 1000, and a copy forged by users 3, 10, 99
fn instance(dir: &TempDir) -> (String, String) {
    let (cb, y) = (p(dir, "cb.tfpc"), p(dir, "y.tfpy"));
    tardos(&[
        "gen", "--n", "2000", "--len", "1000", "--dist", "nuida-c3", "--seed", "7", "--out", &cb,
    ]);
    tardos(&[
        "attack",
        "--codebook",
        &cb,
        "--colluders",
        "3,10,99",
        "--seed",
        "2",
        "--out",
        &y,
    ]);
    (cb, y)
}

#[test]
fn gen_file_size_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    let args = |out: &str| {
        [
            "gen", "--n", "1000", "--len", "2000", "--dist", "nuida-c3", "--seed", "7", "--out", out,
        ]
        .map(String::from)
    };
    tardos(&args(&a).each_ref().map(|s| s.as_str()));
    tardos(&args(&b).each_ref().map(|s| s.as_str()));
    let bytes = std::fs::read(&a).unwrap();
    // magic, version, n, ℓ; ℓ biases; n rows of ⌈2000/64⌉ = 32 words
    assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 2000 * 8 + 1000 * 32 * 8);
    assert_eq!(bytes, std::fs::read(&b).unwrap());
}

#[test]
fn discrete_spec_aliases_nuida() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    tardos(&["gen", "--n", "50", "--len", "300", "--dist", "nuida-c3", "--out", &a]);
    tardos(&[
        "gen",
        "--n",
        "50",
        "--len",
        "300",
        "--dist",
        "discrete:0.211:0.5,0.789:0.5",
        "--out",
        &b,
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn linear_top_three() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let out = stdout(&["decode", "--codebook", &cb, "--pirate", &y, "--linear", "--top", "3"]);
    let users: Vec<&str> = rows(&out).iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(users.len(), 3);
    let mut sorted = users.clone();
    sorted.sort();
    assert_eq!(sorted, ["10", "3", "99"]);
    assert_eq!(work(&out), 2000);
}

#[test]
fn exhaustive_lsh_matches_linear() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let linear = stdout(&["decode", "--codebook", &cb, "--pirate", &y, "--top", "20"]);
    let lsh = stdout(&[
        "decode",
        "--codebook",
        &cb,
        "--pirate",
        &y,
        "--lsh",
        "--tables",
        "3",
        "--hash-len",
        "6",
        "--probes",
        "64",
        "--top",
        "20",
    ]);
    assert_eq!(rows(&linear), rows(&lsh));
    assert_eq!(work(&lsh), 2000 + 3 * 6);
}

#[test]
fn lsh_does_less_work() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let linear = stdout(&[
        "decode",
        "--codebook",
        &cb,
        "--pirate",
        &y,
        "--linear",
        "--threshold",
        "0",
    ]);
    let lsh = stdout(&[
        "decode",
        "--codebook",
        &cb,
        "--pirate",
        &y,
        "--lsh",
        "--tables",
        "20",
        "--hash-len",
        "10",
        "--threshold",
        "0",
    ]);
    assert!(work(&lsh) <= work(&linear), "{} vs {}", work(&lsh), work(&linear));
    // every LSH row is a linear row with the same score
    let linear_rows = rows(&linear);
    for r in rows(&lsh) {
        assert!(linear_rows.contains(&r), "{r}");
    }
}

#[test]
fn saved_index_reloads_and_guards_codebook() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let index = p(&dir, "i.tfli");
    let lsh = ["--lsh", "--tables", "8", "--hash-len", "8", "--top", "3"];
    let fresh = stdout(
        &[
            &["decode", "--codebook", &cb, "--pirate", &y, "--save-index", &index][..],
            &lsh,
        ]
        .concat(),
    );
    let loaded = stdout(
        &[
            &["decode", "--codebook", &cb, "--pirate", &y, "--load-index", &index][..],
            &lsh,
        ]
        .concat(),
    );
    assert_eq!(fresh, loaded);

    let other = p(&dir, "other.tfpc");
    tardos(&[
        "gen", "--n", "2000", "--len", "1000", "--dist", "nuida-c3", "--seed", "8", "--out", &other,
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_tardos"))
        .args([
            "decode",
            "--codebook",
            &other,
            "--pirate",
            &y,
            "--lsh",
            "--load-index",
            &index,
            "--top",
            "3",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn suggested_threshold_footer() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let out = stdout(&[
        "decode",
        "--codebook",
        &cb,
        "--pirate",
        &y,
        "--suggest-threshold",
        "1",
        "--all",
    ]);
    assert!(out.lines().any(|l| l.starts_with("# threshold ")));
    assert_eq!(rows(&out).len(), 2000);
    assert!(rows(&out)[0].ends_with(",true"));
}

#[test]
fn decode_requires_a_rule() {
    let dir = TempDir::new().unwrap();
    let (cb, y) = instance(&dir);
    let out = Command::new(env!("CARGO_BIN_EXE_tardos"))
        .args(["decode", "--codebook", &cb, "--pirate", &y])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn tradeoff_rows() {
    let two = stdout(&["tradeoff", "--c", "2", "--dist", "half"]);
    let row = rows(&two)[0];
    assert!(row.starts_with("2,2.0000,0.0000,1.0000,0.0000,0.5000,1.4142,0.7500,0.3333,3.0000,"));
    assert!(row.ends_with("III: computed 3.00, reference 5.00"));

    let three = stdout(&["tradeoff", "--c", "3", "--dist", "nuida-c3"]);
    let cols: Vec<f64> = rows(&three)[0]
        .split(',')
        .take(10)
        .map(|v| v.parse().unwrap())
        .collect();
    let expect = [3.0, 2.45, 0.82, 1.36, 0.33, 0.56, 1.22, 0.89, 0.50, 8.00];
    for (got, want) in cols.iter().zip(expect) {
        assert!((got - want).abs() <= 0.01, "{got} vs {want}");
    }
}

#[test]
fn tradeoff_curve_decreases() {
    let out = stdout(&["tradeoff", "--alpha", "1.4142", "--curve", "0:3:0.5"]);
    let rho_q: Vec<f64> = rows(&out)
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rho_q.len(), 7);
    assert!((rho_q[0] - 0.75).abs() < 1e-3);
    assert!(rho_q[6].abs() < 1e-6);
    assert!(rho_q.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn table_default_rows() {
    let out = stdout(&["table"]);
    assert_eq!(rows(&out).len(), 3);
    assert!(rows(&out)[0].starts_with("1,2.0000,0.0000,2.0000,0.0000,1.0000,inf,"));
}

#[test]
fn experiment_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, name: &str| {
        let out = p(&dir, name);
        let prefix = p(&dir, &format!("{name}-"));
        tardos(&[
            "--threads",
            threads,
            "--seed",
            "5",
            "experiment",
            "--n",
            "400",
            "--len",
            "256",
            "--trials",
            "3",
            "--tables",
            "4",
            "--hash-len",
            "6",
            "--window",
            "21",
            "--out",
            &out,
            "--csv-prefix",
            &prefix,
        ]);
        (std::fs::read_to_string(out).unwrap(), prefix)
    };
    let (one, prefix) = run("1", "one");
    let (two, _) = run("2", "two");
    assert_eq!(one, two);
    let json: serde_json::Value = serde_json::from_str(&one).unwrap();
    for key in [
        "innocent_fraction_mean",
        "innocent_fraction_pooled",
        "colluder_recall",
        "speedup",
        "spearman",
    ] {
        assert!(json[key].is_number(), "{key}");
    }
    assert_eq!(json["trials"].as_array().unwrap().len(), 3);
    for file in ["trials.csv", "series.csv", "histogram.csv"] {
        assert!(Path::new(&format!("{prefix}{file}")).exists());
    }
}

#[test]
fn moments_with_monte_carlo() {
    let out = stdout(&[
        "moments", "--dist", "half", "--c", "2", "--trials", "20", "--len", "2000",
    ]);
    let lines = rows(&out);
    assert!(lines[0].starts_with("closed-form,0,1,2,"));
    assert!(lines[1].starts_with("monte-carlo,"));
}
