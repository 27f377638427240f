use mhd_lab::fieldops::{Grid, Parity, ScalarField, Snapshot, VectorField};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhdlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdlab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    csv_rows(path).iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn resolved_scenario_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), "preset = \"rest\"\n").unwrap();
    let resolved = dir.path().join("o/resolved.toml");
    let mut copies = Vec::new();
    for config in ["s.toml", "s.toml", "o/resolved.toml"] {
        // the last round feeds the resolved copy back in
        let o = mhdlab(dir.path(), &["--config", config, "--out", "o", "validate"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        copies.push(fs::read_to_string(&resolved).unwrap());
    }
    assert_eq!(copies[0], copies[1]);
    assert_eq!(copies[0], copies[2]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["--override", "law.gamma=1.4", "validate"], "gamma > 3/2"),
        (&["--override", "law.alpha=2", "validate"], "alpha > 2"),
        (&["--override", "grid.spacing=3", "--override", "colour=1", "validate"], "unknown keys: colour, grid.spacing"),
        (&["--config", "missing.toml", "run"], "cannot read scenario"),
        (&["--override", "preset=\"nope\"", "validate"], "unknown preset"),
        (&["mms", "9d"], "unknown mms suite"),
    ];
    for (args, message) in cases {
        let o = mhdlab(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(message), "{args:?}: {}", stderr(&o));
    }
    let o = mhdlab(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_horizon_writes_the_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhdlab(dir.path(), &["--override", "preset=\"rest\"", "--override", "scheme.t_end=0", "--out", "o", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("o/diagnostics.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert!(dir.path().join("o/resolved.toml").exists());
}

#[test]
fn resting_state_cools_and_keeps_its_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhdlab(
        dir.path(),
        &[
            "--override",
            "preset=\"rest\"",
            "--override",
            "scheme.t_end=0.05",
            "--override",
            "record.snapshots=[0.05]",
            "--out",
            "o",
            "run",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let diag = dir.path().join("o/diagnostics.csv");
    let mass = column(&diag, "mass");
    assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-14 * mass[0]));
    assert!(column(&diag, "kinetic_energy").iter().all(|e| *e == 0.0));
    assert!(column(&diag, "magnetic_energy").iter().all(|e| *e == 0.0));
    let thermal = column(&diag, "thermal_energy");
    assert!(thermal.windows(2).all(|w| w[1] < w[0]));
    for f in ["energy_budget.csv", "monitor.csv", "thermal.csv", "entropy.csv"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
    let g = Grid::unit_box([16, 16, 1]);
    let theta = Snapshot::load(&dir.path().join("o/snapshots/t0.050000_theta.snap")).unwrap();
    let theta = theta.to_scalar(&g, Parity::Even).unwrap();
    assert!(theta.max() < 1.0 && theta.min() > 0.9);
}

#[test]
fn zero_tolerance_is_an_invariant_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhdlab(
        dir.path(),
        &[
            "--override",
            "grid.nodes=[16,16,1]",
            "--override",
            "scheme.t_end=0.05",
            "--override",
            "budget.c1=0",
            "--override",
            "budget.c2=0",
            "--out",
            "o",
            "run",
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("invariant violated"));
}

#[test]
fn non_finite_initial_data_is_a_numerical_abort() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::unit_box([8, 8, 1]);
    let mut theta = ScalarField::constant(&g, 1.0);
    theta.data[27] = f64::NAN;
    let save = |name: &str, s: Snapshot| s.save(&dir.path().join(name)).unwrap();
    save("rho.snap", Snapshot::scalar(&g, "rho", 0.0, &ScalarField::constant(&g, 1.0)));
    save("m.snap", Snapshot::vector(&g, "m", 0.0, &VectorField::zeros(&g)));
    save("theta.snap", Snapshot::scalar(&g, "theta", 0.0, &theta));
    save("h.snap", Snapshot::vector(&g, "h", 0.0, &VectorField::zeros(&g)));
    fs::write(
        dir.path().join("s.toml"),
        "preset = \"rest\"\n[grid]\nnodes = [8, 8, 1]\n[initial]\nkind = \"files\"\nrho = \"rho.snap\"\nmomentum = \"m.snap\"\ntheta = \"theta.snap\"\nh = \"h.snap\"\n",
    )
    .unwrap();
    let o = mhdlab(dir.path(), &["--config", "s.toml", "--out", "o", "run"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn sweep_summary_matches_the_point_monitors() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhdlab(
        dir.path(),
        &[
            "--override",
            "preset=\"rest\"",
            "--override",
            "grid.nodes=[9,9,1]",
            "--override",
            "scheme.t_end=0.03",
            "--override",
            "sweep.epsilon=[0.1,0.05]",
            "--override",
            "sweep.delta=[0.1,0.01]",
            "--threads",
            "1",
            "--out",
            "o",
            "sweep",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = dir.path().join("o/sweep_summary.csv");
    let rows = csv_rows(&summary);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[2], "ok");
        let (eps, delta): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let point = dir.path().join("o/sweep").join(format!("eps{eps:e}_delta{delta:e}"));
        let monitor = point.join("monitor.csv");
        let (t, p) = (column(&monitor, "t"), column(&monitor, "artificial_pressure"));
        let area: f64 = (1..t.len()).map(|k| 0.5 * (t[k] - t[k - 1]) * (p[k] + p[k - 1])).sum();
        let reported: f64 = r[4].parse().unwrap();
        assert!((area / (t[t.len() - 1] - t[0]) - reported).abs() <= 1e-14 * reported, "{area} {reported}");
        assert_eq!(r[5].parse::<f64>().unwrap(), p[p.len() - 1]);
        let resolved = fs::read_to_string(point.join("resolved.toml")).unwrap();
        assert!(resolved.contains(&format!("delta = {delta}")), "{resolved}");
    }
    let text = fs::read_to_string(&summary).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("strictly decreasing in delta: true")).count(), 2);
}
