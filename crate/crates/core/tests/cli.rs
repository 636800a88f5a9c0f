use std::fs;
use std::path::Path;

use ladder_core::cli::{run_cli, EXIT_CONFIG, EXIT_IDENTITY_FAILURE, EXIT_PASS};
use ladder_core::config::RunConfig;

fn ladder(args: &[&str], out: &Path) -> u8 {
    let mut argv = vec!["ladder"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap();
    argv.extend_from_slice(&["--out", out]);
    run_cli(argv)
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn compute_writes_one_row_per_degree_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["compute", "--lambda", "1", "--t", "1", "--nmax", "50", "--digits", "30"];
    assert_eq!(ladder(&args, &dir.path().join("a")), EXIT_PASS);
    assert_eq!(ladder(&args, &dir.path().join("b")), EXIT_PASS);
    let a = fs::read(dir.path().join("a/compute_000.csv")).unwrap();
    let b = fs::read(dir.path().join("b/compute_000.csv")).unwrap();
    assert_eq!(a, b);
    let rows = data_rows(&dir.path().join("a/compute_000.csv"));
    assert_eq!(rows.len(), 51);
    assert!(rows[50].starts_with("50,"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# lambda=1\n# t=1\n# precision_bits="));
    assert!(text.contains("\nn,alpha,beta,h,p,R,r\n"));
}

#[test]
fn t_grid_writes_one_file_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let code = ladder(
        &["compute", "--lambda", "0", "--t-grid", "0.5:2:4:linear", "--nmax", "6", "--format", "json", "--moments"],
        dir.path(),
    );
    assert_eq!(code, EXIT_PASS);
    for i in 0..4 {
        let table: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("compute_{i:03}.json"))).unwrap()).unwrap();
        assert_eq!(table["rows"].as_array().unwrap().len(), 7);
        assert!(dir.path().join(format!("moments_{i:03}.json")).exists());
    }
    assert!(!dir.path().join("compute_004.json").exists());
    let config = RunConfig::from_json(&fs::read_to_string(dir.path().join("run_config.json")).unwrap()).unwrap();
    assert_eq!(config.t.values(30).unwrap(), ["0.5", "1", "1.5", "2"]);
}

#[test]
fn verify_passes_default_suites() {
    let dir = tempfile::tempdir().unwrap();
    let code = ladder(&["verify", "--lambda", "1", "--t", "1", "--nmax", "12", "--digits", "30"], dir.path());
    assert_eq!(code, EXIT_PASS);
    let csv = fs::read_to_string(dir.path().join("verify_000.csv")).unwrap();
    assert!(csv.contains("identity,n,t,residual,tolerance,pass"));
    for id in ["d1,", "dd2,", "S2'@z=5,", "s3,", "R_cross,", "pearson@x=1,"] {
        assert!(csv.contains(&format!("\n{id}")), "missing {id}");
    }
    assert!(!csv.contains(",false\n"));
}

#[test]
fn corrupted_beta_fails_the_neighbouring_difference_equations() {
    let dir = tempfile::tempdir().unwrap();
    let code = ladder(
        &["verify", "--lambda", "1", "--t", "1", "--nmax", "12", "--suite", "difference", "--inject-beta-fault", "5", "--format", "json"],
        dir.path(),
    );
    assert_eq!(code, EXIT_IDENTITY_FAILURE);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_000.json")).unwrap()).unwrap();
    let failing: Vec<u64> = report
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["identity"] == "d1" && e["pass"] == false)
        .map(|e| e["n"].as_u64().unwrap())
        .collect();
    assert_eq!(failing, [4, 5, 6]);
}

#[test]
fn halving_h_divides_theorem2_residuals_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| -> Vec<(String, f64)> {
        let path = dir.path().join(sub).join("verify_000.csv");
        data_rows(&path)
            .into_iter()
            .filter(|r| r.starts_with("dd1,") || r.starts_with("dd2,"))
            .map(|r| {
                let f: Vec<&str> = r.split(',').collect();
                (format!("{}{}", f[0], f[1]), f[3].parse().unwrap())
            })
            .collect()
    };
    for (sub, h) in [("h", "1e-6"), ("half", "5e-7")] {
        let code = ladder(
            &["verify", "--lambda", "0", "--t", "1", "--nmax", "8", "--suite", "diffdiff", "--h", h],
            &dir.path().join(sub),
        );
        assert_eq!(code, EXIT_PASS);
    }
    for ((id, coarse), (_, fine)) in read("h").into_iter().zip(read("half")) {
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "{id}: {ratio}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ladder(&["compute", "--t", "0"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["compute", "--lambda", "-0.5", "--t", "1"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["compute", "--t-grid", "1:2:3"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["verify", "--suite", "nonsense"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["verify", "--suite", "asym", "--nmax", "20"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["verify", "--t", "1", "--h", "2"], dir.path()), EXIT_CONFIG);
    assert_eq!(ladder(&["asym", "--nmax", "30"], dir.path()), EXIT_CONFIG);
}
