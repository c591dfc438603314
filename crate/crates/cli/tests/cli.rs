use std::path::Path;
use std::process::{Command, Output};

fn tendonsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tendonsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TENDONSIM_OUT")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TINY_SWEEP: &str = r#"
name = "tiny"
kind = "sweep"

[parameters]
stiffness = 1.0
dead_band = 0.5
rail_separation_y = 200.0
rail_width_x = 20.0
n_wires = 4
axis = "x_shear"
max_displacement = 10.0
steps = 2
"#;

#[test]
fn empty_sweep_parameters_name_the_first_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", "name = \"s\"\nkind = \"sweep\"\n[parameters]\n");
    let out = tendonsim(&["run", &file, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`stiffness`"), "{}", stderr(&out));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn misspelled_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", &TINY_SWEEP.replace("n_wires", "n_wirse"));
    let out = tendonsim(&["validate", &file], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_wirse"), "{}", stderr(&out));
}

#[test]
fn validate_accepts_a_good_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", TINY_SWEEP);
    assert_eq!(tendonsim(&["validate", &file], dir.path()).status.code(), Some(0));
}

#[test]
fn two_row_sweep_writes_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "s.toml", TINY_SWEEP);
    let out = tendonsim(&["run", &file, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("o/tiny.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    assert_eq!(
        csv.lines().next().unwrap(),
        "displacement_mm,parallel_force,cross_force,parallel_cross_force"
    );
}

#[test]
fn csv_values_round_trip_at_nine_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = tendonsim(&["run", "knee_compliance", "--out", "."], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("knee_compliance.csv")).unwrap();
    for field in csv.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        let again = tendonsim_core::table::format_sig9(v);
        assert_eq!(again, field);
    }
}

#[test]
fn out_dir_defaults_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tendonsim"))
        .args(["run", "hip_soft_limit"])
        .current_dir(dir.path())
        .env("TENDONSIM_OUT", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/hip_soft_limit.csv").exists());
}

#[test]
fn screw_home_trials_share_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = tendonsim(&["run", "screw_home_10", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("screw_home_10.csv")).unwrap();
    let mut trials: Vec<u32> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    trials.dedup();
    assert_eq!(trials, (0..10).collect::<Vec<_>>());
}

#[test]
fn seed_flag_changes_trials() {
    let dir = tempfile::tempdir().unwrap();
    tendonsim(&["run", "screw_home_10", "--out", "a"], dir.path());
    tendonsim(&["run", "screw_home_10", "--out", "b", "--seed", "11"], dir.path());
    let a = std::fs::read(dir.path().join("a/screw_home_10.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/screw_home_10.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn svg_has_one_polyline_per_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = tendonsim(&["run", "paper_sweep", "--out", ".", "--svg"], dir.path());
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("paper_sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    for name in ["parallel_force", "cross_force", "parallel_cross_force"] {
        assert!(svg.contains(&format!(">{name}</text>")));
    }
}

#[test]
fn svg_with_too_few_rows_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "empty"
kind = "gradient_check"

[parameters]
stiffness = 1.0
dead_band = 0.5
configurations = 0
step = 1e-6
"#;
    let file = write(dir.path(), "g.toml", text);
    let out = tendonsim(&["run", &file, "--svg"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("empty.csv").exists());
    assert!(!dir.path().join("empty.svg").exists());
}

#[test]
fn domain_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "clear"
kind = "slip_stability"

[parameters]
anchor_a = [-60.0, 30.0, 0.0]
anchor_b = [60.0, 30.0, 0.0]
center = [0.0, 0.0, 0.0]
radius = 20.0
samples = 64
"#;
    let file = write(dir.path(), "c.toml", text);
    let out = tendonsim(&["run", &file], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("clears the sphere"));
    assert!(!dir.path().join("clear.csv").exists());
}

#[test]
fn unknown_scenario_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tendonsim(&["run", "no_such_thing"], dir.path()).status.code(), Some(4));
}

#[test]
fn list_shows_every_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = tendonsim(&["list"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "paper_sweep",
        "knee_compliance",
        "screw_home_10",
        "hip_soft_limit",
        "patella_moment_arm",
        "sphere_slip",
        "gradient_check",
    ] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}
