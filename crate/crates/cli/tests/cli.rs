use std::path::Path;
use std::process::{Command, Output};

fn run(sub: &str, config: &str, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let cfg = dir.join(format!("{sub}.toml"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_funnystrom"))
        .args([sub, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn budget_curve_rows_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "matrix = \"alg:n=60,s=1,c=3\"\nranks = [5, 10]\nrepetitions = 2\nseed = 3\n";
    let a = tmp.path().join("a");
    let o = run("budget-curve", cfg, &a);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&a.join("budget_curve.csv"));
    assert_eq!(header[0], "method");
    assert!(header.contains(&"seed".to_string()) && header.contains(&"mvps".to_string()));
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(a.join("plot.gp").exists());
    let (_, meta) = read_csv(&a.join("metadata.csv"));
    assert!(meta.iter().any(|r| r[0] == "workers"));

    let b = tmp.path().join("b");
    assert_eq!(run("budget-curve", cfg, &b).status.code(), Some(0));
    let first = std::fs::read(a.join("budget_curve.csv")).unwrap();
    let second = std::fs::read(b.join("budget_curve.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn accuracy_curve_has_bound_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = "matrix = \"exp:n=80,s=1,gamma=0.7\"\nranks = [10, 20]\nrepetitions = 2\n";
    let o = run("accuracy-curve", cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("accuracy_curve_summary.csv"));
    let c = header.iter().position(|h| h == "rel_bound").unwrap();
    let m = header.iter().position(|h| h == "method").unwrap();
    for r in rows.iter().filter(|r| r[m] == "funnystrom") {
        assert!(r[c].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn speedup_trace_duel_and_sweep_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("speedup");
    let cfg = "matrix = \"exp:n=150,s=1,gamma=0.36787944117144233\"\nrepetitions = 1\n[speedup]\ncolumns = [10, 20]\n";
    let o = run("speedup", cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("speedup.csv"));
    let t = header.iter().position(|h| h == "t_lanczos").unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[t].parse::<f64>().unwrap() > 0.0));

    let out = tmp.path().join("duel");
    let cfg = "matrix = \"alg:n=200,s=100,c=2\"\nrepetitions = 3\n[trace]\nbudgets = [20, 40]\n";
    let o = run("trace-duel", cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_csv(&out.join("trace_duel.csv")).1.len(), 2 * 2 * 3);

    let out = tmp.path().join("sweep");
    let cfg = "matrix = \"alg:n=200,s=100,c=2\"\nrepetitions = 3\n[trace]\nprobes = [6, 12]\n";
    let o = run("fnpp-sweep", cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("fnpp_sweep_summary.csv"));
    let p5 = header.iter().position(|h| h == "err_p5").unwrap();
    for r in &rows {
        let v: Vec<f64> = r[p5..p5 + 4].iter().map(|s| s.parse().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
    }
}

#[test]
fn verify_bounds_passes_for_log1p() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg =
        "repetitions = 20\n[bounds]\nmatrices = [\"exp:n=60,s=1,gamma=0.8\"]\nfunctions = [\"log1p\"]\nk = 5\np = 5\n";
    let o = run("verify-bounds", cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("verify_bounds.csv"));
    let kind = header.iter().position(|h| h == "kind").unwrap();
    assert!(rows.iter().any(|r| r[kind] == "structural"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("trace-duel", "seed = 1\nbudget = [10]\n", &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = run("trace-duel", "function = \"sqrt\"\n", &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'function'"), "{}", stderr(&o));

    let o = run("budget-curve", "experiment = \"speedup\"\n", &out);
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_funnystrom"))
        .args(["speedup", "--config", "/nonexistent.toml", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_funnystrom"))
        .arg("speedup")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
