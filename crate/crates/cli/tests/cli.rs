use std::path::Path;
use std::process::{Command, Output};

const WEAK: [&str; 8] = ["--kappa", "0.1", "--G", "1e-3", "--Gamma_m", "1e-5", "--N_m", "200"];

fn covarloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covarloop")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn summary_value(text: &str, prefix: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no `{prefix}` line in\n{text}"));
    line[prefix.len()..].trim().split_whitespace().next().unwrap().parse().unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn weak_cooling_summary() {
    let o = covarloop(&[&["cooling-weak"], &WEAK[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!((summary_value(&s, "optimal a:") - 0.99).abs() < 1e-9);
    assert_eq!(summary_value(&s, "optimal b:"), 0.0);
    assert!((summary_value(&s, "occupancy:") - 0.988).abs() < 0.002);
}

#[test]
fn delayed_loop_occupancy() {
    let o = covarloop(&[&["delay", "--tau", "1"], &WEAK[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((summary_value(&stdout(&o), "tau = 1: occupancy") - 1.036).abs() < 0.01);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# weak red sideband\nkappa = 0.1\nG = 1e-3   # linearized coupling\nGamma_m = 1e-5\nN_m = 200\na = 0.99\n").unwrap();
    let out = dir.path().join("steady.csv");
    let o = covarloop(&["steady", "--config", cfg.to_str().unwrap(), "--kappa", "0.05", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_column(&out, "kappa"), vec!["5.000000000000e-02"]);
    assert_eq!(csv_column(&out, "a"), vec!["9.900000000000e-01"]);
    assert_eq!(csv_column(&out, "N_l"), vec!["1.000000000000e+00"]);
    assert_eq!(csv_column(&out, "omega_m"), vec!["1.000000000000e+00"]);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kappa = -1\n").unwrap();
    let o = covarloop(&["steady", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kappa must be positive (line 1)"), "{}", stderr(&o));

    std::fs::write(&cfg, "kappa = 0.1\nG = 1e-3\nGamma = 1e-5\n").unwrap();
    let o = covarloop(&["steady", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Gamma is not a known key (line 3)"), "{}", stderr(&o));

    std::fs::write(&cfg, "kappa = 0.1\nkappa = 0.2\n").unwrap();
    let o = covarloop(&["steady", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("kappa is given twice"), "{}", stderr(&o));

    let o = covarloop(&["cooling-weak", "--kappa", "0.1", "--G", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing required key `Gamma_m`"), "{}", stderr(&o));

    let o = covarloop(&["warm-up"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unstable_steady_state_exits_two() {
    let o = covarloop(&["steady", "--regime", "blue", "--kappa", "0.1", "--G", "4.5e-3", "--Gamma_m", "1e-3", "--N_m", "100", "--kappa_eff", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
    let s = stdout(&o);
    assert!(s.contains("stable: no"));
    // the row is still written, flagged unstable with E_N recorded as zero
    let row = s.lines().last().unwrap();
    assert!(row.starts_with("0,unstable,0.000000000000e+00,unstable,unstable,,"), "{row}");
    assert!(stderr(&o).contains("kappa_eff=0.05"));
}

#[test]
fn sweep_csv_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str, jobs: &str| -> Vec<String> {
        [
            "entangle", "--kappa", "0.1", "--G", "4.5e-3", "--Gamma_m", "1e-3", "--N_m", "100",
            "--grid.kappa_eff", "0.02,0.3,15,log", "--jobs", jobs, "--out", out,
        ]
        .map(String::from)
        .to_vec()
    };
    let mut files = Vec::new();
    for (name, jobs) in [("a.csv", "1"), ("b.csv", "4"), ("c.csv", "4")] {
        let path = dir.path().join(name);
        let a = args(path.to_str().unwrap(), jobs);
        let o = covarloop(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[1], files[2]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("kappa_eff,stable,occupancy,log_neg,min_opt_eig,min_mech_eig,v_min,abscissa,regime,"), "{header}");
    assert_eq!(text.lines().count(), 16);
    assert!(!text.contains('\r'));
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("2.000000000000e-02,0,unstable,0.000000000000e+00,"), "{first}");
}

#[test]
fn tms_threshold_summary() {
    let o = covarloop(&["tms-stabilize", "--kappa", "0.01", "--G", "4.5e-3", "--Gamma_m", "1e-3", "--N_m", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!((summary_value(&s, "analytic threshold r*:") - 1.78).abs() < 0.01);
    assert_eq!(summary_value(&s, "log_neg (bits):"), 0.0);
}

#[test]
fn squeezing_boundary_summary() {
    let o = covarloop(&["squeeze", "--kappa", "0.1", "--G", "1e-3", "--Gamma_m", "1e-5", "--N_m", "100", "--z", "1.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((summary_value(&stdout(&o), "stability boundary: eta =") - 0.6388).abs() < 1e-3);
}

#[test]
fn occupancy_convention_switch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = covarloop(&[&["steady", "--a", "0.99", "--N_convention", "occupancy", "--out", out.to_str().unwrap()], &WEAK[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_column(&out, "N_m"), vec!["4.010000000000e+02"]);
    assert_eq!(csv_column(&out, "N_l"), vec!["1.000000000000e+00"]);
}

#[test]
fn transient_reports_crossing() {
    let o = covarloop(&[&["transient", "--kappa_eff", "2e-3", "--t_final", "5000", "--dt", "10", "--level", "2"], &WEAK[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("first time with occupancy <= 2:"));
}

#[test]
fn verify_single_criterion() {
    let o = covarloop(&["verify", "--criterion", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("PASS criterion  1:"), "{s}");
    assert!(s.contains("1 of 1 criteria passed"));
    let o = covarloop(&["verify", "--criterion", "11"]);
    assert_eq!(o.status.code(), Some(1));
}
