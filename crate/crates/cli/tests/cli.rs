use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlrn_core::io::{parse_blow_up_row, read_error_curve_csv, read_params, read_trajectory_csv};
use nlrn_core::{EvalKernel, Seed, SweepSpec};

fn nlrn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlrn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn run_ok(args: &[&str], out: &Path) -> PathBuf {
    let o = nlrn(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    PathBuf::from(String::from_utf8(o.stdout).unwrap().trim())
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_writes_trajectory_params_and_heatmap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(&["simulate", "--n", "50", "--t", "100", "--seed", "123", "--kernel", "seq64"], tmp.path());
    let csv = read(&dir, "trajectory.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.split(',').count() == 51));

    let traj = read_trajectory_csv(csv.as_bytes()).unwrap();
    let params = read_params(read(&dir, "params.txt").as_bytes()).unwrap();
    let again = nlrn_core::iterate(&params, &traj[0], 100, EvalKernel::SEQ64).unwrap();
    assert_eq!(again, traj);

    let pgm = fs::read(dir.join("trajectory.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n100 50\n255\n"));
    assert_eq!(pgm.len(), b"P5\n100 50\n255\n".len() + 5000);
    assert_eq!(read(&dir, "run.txt"), "command=simulate\nkernel=seq64\nn=50\nseed=123\nt=100\n");
}

#[test]
fn invalid_arguments_fail_with_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlrn(&["simulate", "--n", "5", "--t", "0", "--seed", "1"], tmp.path());
    assert!(!o.status.success());

    let o = nlrn(&["twin", "--n", "5", "--t", "10", "--seed", "1", "--kernel-b", "nosuch"], tmp.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("seq64") && err.contains("perm32:<seed>"), "{err}");

    let o = nlrn(&["train-predict", "--n", "5", "--t-train", "10", "--delta-t", "3", "--seed", "1"], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = nlrn(&["simulate", "--n", "5", "--t", "5", "--seed", "1", "--bogus", "3"], tmp.path());
    assert!(!o.status.success());

    let o = nlrn(&["twin", "--n", "5", "--t", "10", "--seed", "1", "--threshold", "-1"], tmp.path());
    assert!(!o.status.success());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0, "nothing written on invalid input");
}

#[test]
fn unwritable_output_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("not-a-dir");
    fs::write(&file, "x").unwrap();
    let o = nlrn(&["simulate", "--n", "3", "--t", "3", "--seed", "1"], &file);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn twin_reports_blow_up() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(
        &["twin", "--n", "50", "--t", "100", "--seed", "123", "--kernel-a", "seq64", "--kernel-b", "seq32"],
        tmp.path(),
    );
    let curve = read_error_curve_csv(read(&dir, "error_curve.csv").as_bytes()).unwrap();
    assert_eq!(curve.len(), 100);
    assert!(curve.max() > 10.0);
    let report = read(&dir, "blow_up.csv");
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("threshold,blow_up_step,growth_rate,saturated"));
    assert!(parse_blow_up_row(lines.next().unwrap()).unwrap().blow_up_step.is_some());
    for name in ["trajectory_a.csv", "trajectory_b.csv", "params.txt", "heatmap_a.pgm", "heatmap_b.pgm", "heatmap_diff.pgm"] {
        assert!(dir.join(name).exists(), "{name}");
    }
}

#[test]
fn twin_with_identical_kernels_has_no_blow_up() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(
        &["twin", "--n", "20", "--t", "50", "--seed", "5", "--kernel-a", "blk32:4", "--kernel-b", "blk32:4"],
        tmp.path(),
    );
    let row = read(&dir, "blow_up.csv").lines().nth(1).unwrap().to_string();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[1], "");
    assert_eq!(fields[2], "");
    assert_eq!(fields[3], "false");
}

#[test]
fn sweep_writes_one_curve_per_size() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(&["sweep", "--sizes", "50,100", "--t", "100", "--trials", "5", "--seed", "123"], tmp.path());
    for n in [50, 100] {
        let curve = read_error_curve_csv(read(&dir, &format!("curve_n{n}.csv")).as_bytes()).unwrap();
        assert_eq!(curve.len(), 100);
    }
    assert_eq!(read(&dir, "trials.csv").lines().count(), 11);
    assert_eq!(read(&dir, "summary.csv").lines().count(), 3);
}

#[test]
fn single_trial_sweep_equals_twin_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = run_ok(&["sweep", "--sizes", "40", "--t", "80", "--trials", "1", "--seed", "9"], tmp.path());
    let spec = SweepSpec {
        sizes: vec![40],
        t: 80,
        trials: 1,
        base_seed: Seed(9),
        kernel_a: EvalKernel::SEQ64,
        kernel_b: EvalKernel::SEQ32,
        threshold: 1.0,
    };
    let seed = spec.trial_seed(40, 0).to_string();
    let twin = run_ok(&["twin", "--n", "40", "--t", "80", "--seed", &seed], tmp.path());
    assert_eq!(read(&sweep, "curve_n40.csv"), read(&twin, "error_curve.csv"));
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["sweep", "--sizes", "30,60", "--t", "60", "--trials", "6", "--seed", "4", "--jobs"];
    let da = run_ok(&[&args[..], &["1"]].concat(), a.path());
    let db = run_ok(&[&args[..], &["3"]].concat(), b.path());
    assert_eq!(da.file_name(), db.file_name());
    for name in ["curve_n30.csv", "curve_n60.csv", "trials.csv", "summary.csv", "run.txt"] {
        assert_eq!(read(&da, name), read(&db, name), "{name}");
    }
}

#[test]
fn train_predict_with_zero_epochs_reports_untrained_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(
        &["train-predict", "--n", "8", "--t-train", "50", "--delta-t", "10", "--epochs", "0", "--batch", "10", "--seed", "3"],
        tmp.path(),
    );
    let summary = read(&dir, "summary.csv");
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("eps_w,eps_b,horizon"));
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    let eps_w: f64 = values[0].parse().unwrap();
    let eps_b: f64 = values[1].parse().unwrap();
    assert!(eps_w > 10.0);
    assert_eq!(eps_b, 100.0);
    assert_eq!(read(&dir, "loss.csv"), "epoch,loss\n");

    let teacher = read_params(read(&dir, "teacher.txt").as_bytes()).unwrap();
    let student = read_params(read(&dir, "student.txt").as_bytes()).unwrap();
    assert_eq!(nlrn_core::param_errors(&student, &teacher).unwrap().0, eps_w);
}

#[test]
fn train_predict_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(
        &[
            "train-predict", "--n", "10", "--t-train", "200", "--delta-t", "30", "--epochs", "30", "--batch", "25",
            "--lr", "0.001", "--seed", "123",
        ],
        tmp.path(),
    );
    let loss = read(&dir, "loss.csv");
    assert_eq!(loss.lines().count(), 31);
    let future = read_trajectory_csv(read(&dir, "teacher_future.csv").as_bytes()).unwrap();
    assert_eq!((future.t0(), future.len()), (200, 30));
    let student = read_trajectory_csv(read(&dir, "student_future.csv").as_bytes()).unwrap();
    assert_eq!(student[0], future[0]);
    let curve = read_error_curve_csv(read(&dir, "prediction_curve.csv").as_bytes()).unwrap();
    assert_eq!((curve.t0, curve.len()), (200, 30));
    for name in ["teacher_future.pgm", "student_future.pgm", "difference.pgm", "blow_up.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let echo = read(&dir, "run.txt");
    assert!(echo.contains("epochs=30\n") && echo.contains("seed=123\n"));
}

#[test]
fn distinct_specs_get_distinct_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_ok(&["simulate", "--n", "3", "--t", "4", "--seed", "1"], tmp.path());
    let b = run_ok(&["simulate", "--n", "3", "--t", "4", "--seed", "2"], tmp.path());
    let c = run_ok(&["simulate", "--n", "3", "--t", "4", "--seed", "1"], tmp.path());
    assert_ne!(a, b);
    assert_eq!(a, c);
}
