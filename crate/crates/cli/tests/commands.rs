use std::fs;
use std::path::Path;
use std::process::Command as Process;

use bwave_cli::commands::sweep_rows;
use bwave_cli::{parse_scenario, run_subcommand, Command, Flags};

fn scenario(extra: &str) -> bwave_cli::Scenario {
    let doc = format!(
        r#"
[grid]
dimension = 1
n = 15

[time]
horizon = 2.0
steps = 64

[optimizer]
rayleigh_samples = 8
rayleigh_power_iters = 10
{extra}
"#
    );
    parse_scenario(&doc).unwrap()
}

fn flags(dir: &Path) -> Flags {
    Flags {
        out: Some(dir.to_path_buf()),
        ..Flags::default()
    }
}

fn perfect_tracking() -> bwave_cli::Scenario {
    let mut s = scenario("");
    s.init.y0 = "sine-mode 1".parse().unwrap();
    s.init.yd = "uncontrolled-state".parse().unwrap();
    s
}

#[test]
fn zero_data_gives_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_subcommand(Command::Solve, &scenario(""), &flags(dir.path())).unwrap();
    assert_eq!(out.exit_code(), 0);
    let csv = fs::read_to_string(dir.path().join("state.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,y,v"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 65 * 15);
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[2..], &[0.0, 0.0], "{row}");
    }
}

#[test]
fn stride_samples_time_slices() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = perfect_tracking();
    s.output.stride = 8;
    run_subcommand(Command::Adjoint, &s, &flags(dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("adjoint.csv")).unwrap();
    assert!(csv.starts_with("t,x,phi,phi_dot\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 15);
    let decay = fs::read_to_string(dir.path().join("decay.txt")).unwrap();
    assert!(decay.contains("factor=2\n"));
}

#[test]
fn two_dimensional_csv_has_both_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = scenario("");
    s.grid.dimension = 2;
    s.grid.n = bwave_cli::scenario::PerAxis::Axes([3, 4]);
    s.init.y0 = "gaussian-bump 0.5 0.5 0.2".parse().unwrap();
    run_subcommand(Command::Solve, &s, &flags(dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("state.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,y,v\n"));
    assert_eq!(csv.lines().count(), 1 + 65 * 12);
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let s = scenario("[init]\ny0 = \"sine-mode 1\"\nyd = \"0.8 * sine-mode 1\"\n[bounds]\nalpha = \"constant -0.1\"\nbeta = \"constant 0.1\"\n[cost]\ngamma = 0.1\n");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        run_subcommand(Command::Optimize, &s, &flags(d.path())).unwrap();
        run_subcommand(Command::Solve, &s, &flags(d.path())).unwrap();
    }
    for name in ["iterates.csv", "control.csv", "state.csv", "second_order.txt", "result.txt"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let f = Flags {
        seed: Some(42),
        ..flags(dir.path())
    };
    run_subcommand(Command::Optimize, &perfect_tracking(), &f).unwrap();
    let so = fs::read_to_string(dir.path().join("second_order.txt")).unwrap();
    assert!(so.starts_with("seed=42\n"));
    let echoed = parse_scenario(&fs::read_to_string(dir.path().join("scenario.toml")).unwrap()).unwrap();
    assert_eq!(echoed.seed, 42);
}

#[test]
fn verify_passes_on_perfect_tracking() {
    let dir = tempfile::tempdir().unwrap();
    // the mesh-stability checks need the random modes resolved
    let mut s = perfect_tracking();
    s.grid.n = bwave_cli::scenario::PerAxis::Uniform(31);
    let out = run_subcommand(Command::Verify, &s, &flags(dir.path())).unwrap();
    assert_eq!(out.exit_code(), 0, "{}", out.summary);
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(names.len() >= 15);
    assert!(csv.lines().skip(1).all(|l| l.contains(",pass,")), "{csv}");
}

#[test]
fn verify_fails_when_the_optimizer_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = scenario("[init]\ny0 = \"sine-mode 1\"\n");
    s.optimizer.max_iter = 1;
    let out = run_subcommand(Command::Verify, &s, &flags(dir.path())).unwrap();
    assert_eq!(out.exit_code(), 3);
    let failure = out.failure.unwrap();
    assert!(failure.to_string().contains("kkt_residual"), "{failure}");
}

#[test]
fn sweep_differences_decrease_for_a_decaying_mode() {
    let s = scenario("[init]\ny0 = \"sine-mode 1\"\n");
    let rows = sweep_rows(&s, 0, 2).unwrap();
    assert_eq!(rows.iter().map(|r| r.horizon).collect::<Vec<_>>(), [2.0, 4.0, 8.0]);
    let d1 = (rows[1].j - rows[0].j).abs();
    let d2 = (rows[2].j - rows[1].j).abs();
    assert!(d2 < d1, "{d1} {d2}");
    assert!(rows[2].adjoint_tail < rows[0].adjoint_tail);

    let dir = tempfile::tempdir().unwrap();
    let f = Flags {
        horizon_factor: Some(3),
        ..flags(dir.path())
    };
    run_subcommand(Command::SweepHorizon, &s, &f).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("horizon,J,kkt_residual,adjoint_tail\n"));
    let horizons: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(horizons, [2.0, 6.0, 18.0]);
}

#[test]
fn horizon_factor_below_two_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = Flags {
        horizon_factor: Some(1),
        ..flags(dir.path())
    };
    let err = run_subcommand(Command::SweepHorizon, &scenario(""), &f).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

fn bwave(args: &[&str]) -> (i32, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_bwave")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn binary_reports_errors_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    fs::write(&path, "[grid]\ndimension = 1\nn = 7\n[time]\nhorizon = 1.0\nsteps = 8\n").unwrap();
    let (code, stderr) = bwave(&["solve", "--scenario", path.to_str().unwrap(), "--out", out]);
    assert_eq!((code, stderr.as_str()), (0, ""));
    assert!(Path::new(out).join("state.csv").exists());

    fs::write(&path, "[grid]\ndimension = 3\nn = 7\n[time]\nhorizon = 1.0\nsteps = 8\n").unwrap();
    let (code, stderr) = bwave(&["solve", "--scenario", path.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 1);
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error kind=validation exit=1 message="), "{stderr}");

    fs::write(
        &path,
        "[grid]\ndimension = 1\nn = 7\n[time]\nhorizon = 40.0\nsteps = 8\n[control]\nu0 = \"constant 30\"\n[bounds]\nbeta = \"constant 40\"\n",
    )
    .unwrap();
    let (code, stderr) = bwave(&["solve", "--scenario", path.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error kind=solver exit=2"), "{stderr}");

    let (code, stderr) = bwave(&["solve", "--scenario", "/nonexistent/s.toml"]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error kind=validation"), "{stderr}");
}
