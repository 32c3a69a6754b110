//! `nlrn`: simulate random tanh networks, run twin and sweep divergence
//! experiments, and train-then-predict students. Every run writes into
//! `<out>/<command>-<hash>/` and prints that directory on stdout.

mod run_dir;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use nlrn_core::io::{
    blow_up_row, fmt_real, write_blow_up_csv, write_difference_heatmap, write_error_curve_csv, write_loss_csv,
    write_params, write_trajectory_csv, write_trajectory_heatmap, BLOW_UP_HEADER,
};
use nlrn_core::metrics::DEFAULT_THRESHOLD;
use nlrn_core::{
    divergence_sweep, experiments::sample_system, iterate, train_and_predict, twin_divergence, EvalKernel, Seed,
    SweepSpec, TrainConfig, TrainPredictSpec, TwinSpec,
};

use run_dir::{Echo, RunDir};

#[derive(Parser)]
#[command(name = "nlrn", version, about = "Chaotic random tanh networks and floating-point blow-up")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate one sampled network and write its trajectory.
    Simulate(SimulateArgs),
    /// Iterate one network under two kernels and measure the divergence.
    Twin(TwinArgs),
    /// Average twin divergence over trials for several network sizes.
    Sweep(SweepArgs),
    /// Train a student on a teacher trajectory, then predict ahead.
    TrainPredict(TrainPredictArgs),
}

fn kernel_help() -> String {
    format!("One of: {}", nlrn_core::kernel::KERNEL_NAMES)
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw of the run.
    #[arg(long)]
    seed: u64,
    /// Output directory; each run gets its own subdirectory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Network size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of states, including the initial one.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    t: u64,
    #[arg(long, default_value = "seq64", long_help = kernel_help())]
    kernel: EvalKernel,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TwinArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    t: u64,
    /// Reference kernel.
    #[arg(long, default_value = "seq64", long_help = kernel_help())]
    kernel_a: EvalKernel,
    #[arg(long, default_value = "seq32", long_help = kernel_help())]
    kernel_b: EvalKernel,
    /// Blow-up threshold in percent.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated network sizes.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
    sizes: Vec<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    t: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value = "seq64", long_help = kernel_help())]
    kernel_a: EvalKernel,
    #[arg(long, default_value = "seq32", long_help = kernel_help())]
    kernel_b: EvalKernel,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Worker threads for the trials; output does not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrainPredictArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Teacher states used for training.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    t_train: u64,
    /// Prediction window.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    delta_t: u64,
    #[arg(long)]
    epochs: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    batch: u64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value = "seq64", long_help = kernel_help())]
    kernel: EvalKernel,
    /// Error level in percent that ends the prediction horizon.
    #[arg(long, default_value_t = 10.0)]
    threshold: f64,
    #[command(flatten)]
    common: Common,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        bail!("--threshold must be a positive number, got {threshold}");
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<RunDir> {
    let (n, t) = (args.n as usize, args.t as usize);
    let seed = Seed(args.common.seed);
    let (x0, params) = sample_system(seed, n)?;
    let traj = iterate(&params, &x0, t, args.kernel)?;

    let echo = Echo::new("simulate")
        .set("n", n)
        .set("t", t)
        .set("seed", seed)
        .set("kernel", args.kernel);
    let dir = RunDir::create(&args.common.out, "simulate", echo.entries())?;
    dir.write("params.txt", |w| write_params(w, &params))?;
    dir.write("trajectory.csv", |w| write_trajectory_csv(w, &traj))?;
    dir.write("trajectory.pgm", |w| write_trajectory_heatmap(w, &traj))?;
    Ok(dir)
}

fn twin(args: TwinArgs) -> Result<RunDir> {
    check_threshold(args.threshold)?;
    let spec = TwinSpec {
        n: args.n as usize,
        t: args.t as usize,
        seed: Seed(args.common.seed),
        kernel_a: args.kernel_a,
        kernel_b: args.kernel_b,
        threshold: args.threshold,
    };
    spec.validate()?;
    let out = twin_divergence(&spec)?;
    let (_, params) = sample_system(spec.seed, spec.n)?;

    let echo = Echo::new("twin")
        .set("n", spec.n)
        .set("t", spec.t)
        .set("seed", spec.seed)
        .set("kernel_a", spec.kernel_a)
        .set("kernel_b", spec.kernel_b)
        .set("threshold", fmt_real(spec.threshold));
    let dir = RunDir::create(&args.common.out, "twin", echo.entries())?;
    dir.write("params.txt", |w| write_params(w, &params))?;
    dir.write("trajectory_a.csv", |w| write_trajectory_csv(w, &out.reference))?;
    dir.write("trajectory_b.csv", |w| write_trajectory_csv(w, &out.test))?;
    dir.write("error_curve.csv", |w| write_error_curve_csv(w, &out.curve))?;
    dir.write("blow_up.csv", |w| write_blow_up_csv(w, &out.report))?;
    dir.write("heatmap_a.pgm", |w| write_trajectory_heatmap(w, &out.reference))?;
    dir.write("heatmap_b.pgm", |w| write_trajectory_heatmap(w, &out.test))?;
    dir.write("heatmap_diff.pgm", |w| write_difference_heatmap(w, &out.test, &out.reference))?;
    Ok(dir)
}

fn sweep(args: SweepArgs) -> Result<RunDir> {
    check_threshold(args.threshold)?;
    let mut sizes: Vec<usize> = args.sizes.iter().map(|&s| s as usize).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let spec = SweepSpec {
        sizes,
        t: args.t as usize,
        trials: args.trials as usize,
        base_seed: Seed(args.common.seed),
        kernel_a: args.kernel_a,
        kernel_b: args.kernel_b,
        threshold: args.threshold,
    };
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs as usize).build()?;
    let result = pool.install(|| divergence_sweep(&spec))?;

    let size_list: Vec<String> = spec.sizes.iter().map(|s| s.to_string()).collect();
    let echo = Echo::new("sweep")
        .set("sizes", size_list.join(","))
        .set("t", spec.t)
        .set("trials", spec.trials)
        .set("seed", spec.base_seed)
        .set("kernel_a", spec.kernel_a)
        .set("kernel_b", spec.kernel_b)
        .set("threshold", fmt_real(spec.threshold));
    let dir = RunDir::create(&args.common.out, "sweep", echo.entries())?;
    for (n, entry) in &result {
        dir.write(&format!("curve_n{n}.csv"), |w| write_error_curve_csv(w, &entry.curve))?;
    }
    dir.write("trials.csv", |w| {
        writeln!(w, "n,trial,seed,{BLOW_UP_HEADER}")?;
        for (n, entry) in &result {
            for (m, report) in entry.trials.iter().enumerate() {
                writeln!(w, "{n},{m},{},{}", spec.trial_seed(*n, m), blow_up_row(report))?;
            }
        }
        Ok(())
    })?;
    dir.write("summary.csv", |w| {
        writeln!(w, "n,mean_blow_up_step,mean_growth_rate")?;
        for (n, entry) in &result {
            let rate = entry.mean_growth_rate().map(fmt_real).unwrap_or_default();
            writeln!(w, "{n},{},{rate}", fmt_real(entry.mean_blow_up_step()))?;
        }
        Ok(())
    })?;
    Ok(dir)
}

fn train_predict(args: TrainPredictArgs) -> Result<RunDir> {
    check_threshold(args.threshold)?;
    let seed = Seed(args.common.seed);
    let spec = TrainPredictSpec {
        n: args.n as usize,
        t_train: args.t_train as usize,
        delta_t: args.delta_t as usize,
        train: TrainConfig {
            epochs: args.epochs as usize,
            batch_size: args.batch as usize,
            learning_rate: args.lr,
            shuffle_seed: seed.derive(&[1]),
            init_seed: seed.derive(&[2]),
            ..TrainConfig::default()
        },
        seed,
        kernel: args.kernel,
        horizon_threshold: args.threshold,
    };
    spec.validate()?;
    let out = train_and_predict(&spec)?;

    let cfg = &spec.train;
    let echo = Echo::new("train-predict")
        .set("n", spec.n)
        .set("t_train", spec.t_train)
        .set("delta_t", spec.delta_t)
        .set("epochs", cfg.epochs)
        .set("batch", cfg.batch_size)
        .set("lr", fmt_real(cfg.learning_rate))
        .set("beta1", fmt_real(cfg.beta1))
        .set("beta2", fmt_real(cfg.beta2))
        .set("epsilon_hat", fmt_real(cfg.epsilon_hat))
        .set("seed", seed)
        .set("shuffle_seed", cfg.shuffle_seed)
        .set("init_seed", cfg.init_seed)
        .set("kernel", spec.kernel)
        .set("threshold", fmt_real(spec.horizon_threshold));
    let dir = RunDir::create(&args.common.out, "train-predict", echo.entries())?;
    dir.write("summary.csv", |w| {
        writeln!(w, "eps_w,eps_b,horizon")?;
        writeln!(w, "{},{},{}", fmt_real(out.eps_w), fmt_real(out.eps_b), out.horizon())?;
        Ok(())
    })?;
    dir.write("teacher.txt", |w| write_params(w, &out.teacher))?;
    dir.write("student.txt", |w| write_params(w, &out.student))?;
    dir.write("loss.csv", |w| write_loss_csv(w, &out.loss_history))?;
    dir.write("prediction_curve.csv", |w| write_error_curve_csv(w, &out.pred_curve))?;
    dir.write("blow_up.csv", |w| write_blow_up_csv(w, &out.report))?;
    dir.write("teacher_future.csv", |w| write_trajectory_csv(w, &out.teacher_future))?;
    dir.write("student_future.csv", |w| write_trajectory_csv(w, &out.student_future))?;
    dir.write("teacher_future.pgm", |w| write_trajectory_heatmap(w, &out.teacher_future))?;
    dir.write("student_future.pgm", |w| write_trajectory_heatmap(w, &out.student_future))?;
    dir.write("difference.pgm", |w| {
        write_difference_heatmap(w, &out.student_future, &out.teacher_future)
    })?;
    eprintln!(
        "eps_w={:.4}% eps_b={:.4}% horizon={} steps",
        out.eps_w,
        out.eps_b,
        out.horizon()
    );
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Twin(a) => twin(a),
        Command::Sweep(a) => sweep(a),
        Command::TrainPredict(a) => train_predict(a),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.path().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
