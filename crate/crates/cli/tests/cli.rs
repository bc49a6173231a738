use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qbattery"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Csv { header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }

    fn text_col(&self, name: &str) -> Vec<String> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i].clone()).collect()
    }
}

/// Runs a subcommand writing to a fresh file and returns the parsed table.
fn table(dir: &TempDir, name: &str, args: &[&str]) -> Csv {
    let out: PathBuf = dir.path().join(format!("{name}.csv"));
    let mut all = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    let o = run(&all);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    Csv::read(&out)
}

#[test]
fn time_sweep_matches_vacuum_formulas() {
    let dir = TempDir::new().unwrap();
    let t = table(&dir, "ts", &["time-sweep", "--tgrid", "0:2pi:401"]);
    assert_eq!(t.header.join(","), "t,ergotropy,daemonic_min,daemonic_max,gap,band");
    assert_eq!(t.rows.len(), 401);
    let (ts, e, dmin, dmax, gap) = (t.col("t"), t.col("ergotropy"), t.col("daemonic_min"), t.col("daemonic_max"), t.col("gap"));
    for i in 0..ts.len() {
        let s2 = ts[i].sin().powi(2);
        assert!((e[i] - (s2 - ts[i].cos().powi(2)).max(0.0)).abs() <= 1e-9, "t = {}", ts[i]);
        assert!((dmin[i] - s2).abs() <= 1e-9 && (dmax[i] - s2).abs() <= 1e-9, "t = {}", ts[i]);
        assert!((gap[i] - (dmin[i] - e[i])).abs() <= 1e-15);
    }
    assert!(t.rows[0].iter().all(|x| x.parse::<f64>().unwrap() == 0.0));
    assert!((ts[400] - 2.0 * PI).abs() < 1e-15);
}

#[test]
fn beta_sweep_is_gapless_at_low_temperature() {
    let dir = TempDir::new().unwrap();
    let t = table(&dir, "bs", &["beta-sweep", "--betas", "0.5,1,1.65,1.7,2,3,50"]);
    assert_eq!(t.header.join(","), "beta,tau,e_max,daemonic_min,gap");
    let (beta, e, gap) = (t.col("beta"), t.col("e_max"), t.col("gap"));
    for i in 0..beta.len() {
        assert_eq!(gap[i] <= 1e-3, beta[i] >= 1.65, "beta {}: gap {}", beta[i], gap[i]);
    }
    for w in e.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!((e[6] - 1.0).abs() <= 1e-6);
}

#[test]
fn repeat_charge_ladder_and_detuned_slowdown() {
    let dir = TempDir::new().unwrap();
    let t = table(&dir, "ladder", &["repeat-charge"]);
    let mut want = vec!["m", "tau_m", "e_max_m"].into_iter().map(String::from).collect::<Vec<_>>();
    want.extend((0..11).map(|n| format!("pop_{n}")));
    assert_eq!(t.header, want);
    let e = t.col("e_max_m");
    assert_eq!(e.len(), 10);
    for (m, x) in e.iter().enumerate() {
        assert!((x - (m + 1) as f64).abs() <= 1e-9);
    }
    assert!((t.col("pop_10")[9] - 1.0).abs() <= 1e-9);

    let t = table(&dir, "detuned", &["repeat-charge", "--delta", "0.1"]);
    let e = t.col("e_max_m");
    assert!(e.len() > 10);
    assert!(e[e.len() - 1] >= 10.0 - 1e-6);
}

#[test]
fn repeat_charge_thermal_saturates() {
    let dir = TempDir::new().unwrap();
    let t = table(&dir, "thermal", &["repeat-charge", "--init", "thermal:2"]);
    let e = t.col("e_max_m");
    for w in e.windows(2) {
        assert!(w[1] >= w[0] - 1e-9);
    }
    assert!(e[e.len() - 1] >= 10.0 - 1e-6, "last {}", e[e.len() - 1]);
}

#[test]
fn double_mode_simultaneous_flags() {
    let dir = TempDir::new().unwrap();
    let t = table(&dir, "dm", &["double-mode", "--cycles", "2", "--theta", "pi/2"]);
    assert_eq!(t.header.join(","), "m,tau_m,e_b,e_b1,e_b2,simultaneous");
    assert_eq!(t.text_col("simultaneous"), vec!["false", "true"]);

    for theta in ["0.3", "2.5"] {
        let t = table(&dir, "dm_first", &["double-mode", "--cycles", "1", "--theta", theta]);
        assert_eq!(t.text_col("simultaneous"), vec!["false"]);
    }

    let t = table(&dir, "dm_trunc", &["double-mode", "--cycles", "3", "--init", "trunc2:0.8"]);
    let (e, e1, e2) = (t.col("e_b"), t.col("e_b1"), t.col("e_b2"));
    assert!(e[0] > 1e-6 && e1[0] <= 1e-12 && e2[0] <= 1e-12);
    for m in 1..3 {
        assert!(e[m] > 0.0 && e1[m] > 1e-6 && e2[m] > 1e-6);
    }
}

#[test]
fn landscape_properties() {
    let dir = TempDir::new().unwrap();
    let args = ["landscape", "--r0grid", "0.5:1:6", "--alphagrid", "0:pi:13"];
    let t = table(&dir, "ls", &args);
    assert_eq!(t.header.join(","), "r0,alpha,advantage");
    assert_eq!(t.rows.len(), 6 * 13);
    let (r0, alpha, adv) = (t.col("r0"), t.col("alpha"), t.col("advantage"));
    assert!(adv.iter().all(|&a| a >= -1e-9));
    for chunk in 0..6 {
        let rows = chunk * 13..(chunk + 1) * 13;
        assert!(r0[rows.clone()].iter().all(|&x| x == r0[chunk * 13]));
        let min = adv[rows.clone()].iter().copied().fold(f64::INFINITY, f64::min);
        let at = rows.clone().find(|&i| adv[i] <= min + 1e-12).unwrap();
        assert!(alpha[at] == 0.0 || alpha[at] == PI, "r0 {}: min at alpha {}", r0[at], alpha[at]);
    }

    let mut shifted = args.to_vec();
    shifted.extend(["--gamma", "1.234"]);
    let u = table(&dir, "ls_gamma", &shifted);
    for (a, b) in adv.iter().zip(u.col("advantage")) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "delta = 0.1\ninit = \"trunc2:0.9\"\ntgrid = \"0:pi:9\"\nseed = 7\n").unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["time-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(Csv::read(&a).rows.len(), 9);
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "tgrid = \"0:pi:9\"\n").unwrap();
    let out = dir.path().join("o.csv");
    let o = run(&["time-sweep", "--config", cfg.to_str().unwrap(), "--tgrid", "0:1:3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(Csv::read(&out).col("t"), vec![0.0, 0.5, 1.0]);
}

#[test]
fn stdout_when_no_out_path() {
    let o = run(&["time-sweep", "--tgrid", "0:1:2"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("t,ergotropy,daemonic_min,daemonic_max,gap,band\n"));
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["verify"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["time-sweep", "--init", "trunc2:0.3"]).status.code(), Some(1));
    assert_eq!(run(&["time-sweep", "--tgrid", "1:0:3"]).status.code(), Some(1));
    assert_eq!(run(&["double-mode", "--omega", "1.0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "unknown_key = 3\n").unwrap();
    assert_eq!(run(&["time-sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("missing").join("x.csv");
    let o = run(&["time-sweep", "--tgrid", "0:1:2", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(missing.to_str().unwrap()));
}
