//! Seeded drivers for the three experiments: twin divergence of one network
//! under two kernels, the divergence sweep over network sizes, and teacher
//! recovery followed by prediction.
//!
//! Everything here works on `f64` storage; only the kernels change precision.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dynamics::{iterate, NetworkParams, Sampler, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::kernel::EvalKernel;
use crate::learner::{build_dataset, predict_rollout, train, Dataset, TrainConfig};
use crate::metrics::{average_curves, blow_up_analysis, param_errors, per_step_error, BlowUpReport, ErrorCurve};
use crate::rng::Seed;

/// Draw `(x0, network)` from one stream in that order: state, bias, weights.
pub fn sample_system(seed: Seed, n: usize) -> Result<(StateVector<f64>, NetworkParams<f64>)> {
    let mut sampler = Sampler::from_seed(seed);
    let x0 = sampler.state(n)?;
    let params = sampler.network(n)?;
    Ok((x0, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinSpec {
    pub n: usize,
    pub t: usize,
    pub seed: Seed,
    /// Reference kernel; its states normalise the error.
    pub kernel_a: EvalKernel,
    pub kernel_b: EvalKernel,
    pub threshold: f64,
}

impl TwinSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("n must be >= 1".into()));
        }
        if self.t < 2 {
            return Err(Error::InvalidArgument("t must be >= 2".into()));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TwinOutcome {
    pub reference: Trajectory<f64>,
    pub test: Trajectory<f64>,
    pub curve: ErrorCurve,
    pub report: BlowUpReport,
}

/// Iterate one sampled network from one sampled state under both kernels.
pub fn twin_divergence(spec: &TwinSpec) -> Result<TwinOutcome> {
    spec.validate()?;
    let (x0, params) = sample_system(spec.seed, spec.n)?;
    let reference = iterate(&params, &x0, spec.t, spec.kernel_a)?;
    let test = iterate(&params, &x0, spec.t, spec.kernel_b)?;
    let curve = per_step_error(&test, &reference)?;
    let report = blow_up_analysis(&curve, spec.threshold)?;
    Ok(TwinOutcome { reference, test, curve, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub t: usize,
    pub trials: usize,
    pub base_seed: Seed,
    pub kernel_a: EvalKernel,
    pub kernel_b: EvalKernel,
    pub threshold: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidArgument("sizes must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        for &n in &self.sizes {
            self.twin(n, 0).validate()?;
        }
        Ok(())
    }

    /// Seed of trial `m` at size `n`.
    pub fn trial_seed(&self, n: usize, m: usize) -> Seed {
        self.base_seed.derive(&[n as u64, m as u64])
    }

    pub fn twin(&self, n: usize, m: usize) -> TwinSpec {
        TwinSpec {
            n,
            t: self.t,
            seed: self.trial_seed(n, m),
            kernel_a: self.kernel_a,
            kernel_b: self.kernel_b,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    /// Point-wise mean of the trial curves.
    pub curve: ErrorCurve,
    /// Per-trial reports, in trial order.
    pub trials: Vec<BlowUpReport>,
}

impl SweepEntry {
    /// Mean first-crossing step over trials; a trial that never crosses
    /// counts as `t`, the curve length.
    pub fn mean_blow_up_step(&self) -> f64 {
        let t = self.curve.len();
        let total: usize = self.trials.iter().map(|r| r.blow_up_step.unwrap_or(t)).sum();
        total as f64 / self.trials.len() as f64
    }

    /// Mean growth rate over the trials that have one.
    pub fn mean_growth_rate(&self) -> Option<f64> {
        let rates: Vec<f64> = self.trials.iter().filter_map(|r| r.growth_rate).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

/// Run `trials` twin experiments for every size and average their curves.
///
/// Trials run on the current rayon pool; results are gathered in
/// `(size, trial)` order so the output does not depend on the thread count.
pub fn divergence_sweep(spec: &SweepSpec) -> Result<BTreeMap<usize, SweepEntry>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.trials).map(move |m| (n, m)))
        .collect();
    let results: Vec<(usize, ErrorCurve, BlowUpReport)> = jobs
        .par_iter()
        .map(|&(n, m)| {
            let out = twin_divergence(&spec.twin(n, m))?;
            Ok((n, out.curve, out.report))
        })
        .collect::<Result<_>>()?;

    let mut grouped: BTreeMap<usize, (Vec<ErrorCurve>, Vec<BlowUpReport>)> = BTreeMap::new();
    for (n, curve, report) in results {
        let slot = grouped.entry(n).or_default();
        slot.0.push(curve);
        slot.1.push(report);
    }
    grouped
        .into_iter()
        .map(|(n, (curves, trials))| Ok((n, SweepEntry { curve: average_curves(&curves)?, trials })))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainPredictSpec {
    pub n: usize,
    /// Teacher states used for training; yields `t_train - 1` pairs.
    pub t_train: usize,
    pub delta_t: usize,
    pub train: TrainConfig,
    pub seed: Seed,
    pub kernel: EvalKernel,
    /// Error level (percent) that ends the prediction horizon.
    pub horizon_threshold: f64,
}

impl TrainPredictSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("n must be >= 1".into()));
        }
        if self.t_train < 2 {
            return Err(Error::InvalidArgument("t_train must be >= 2".into()));
        }
        if self.delta_t == 0 {
            return Err(Error::InvalidArgument("delta_t must be >= 1".into()));
        }
        if self.horizon_threshold.is_nan() || self.horizon_threshold <= 0.0 {
            return Err(Error::InvalidArgument("horizon threshold must be positive".into()));
        }
        self.train.validate()
    }
}

/// Teacher, its trajectory and the training pairs, before any training.
#[derive(Debug, Clone)]
pub struct TrainPredictSetup {
    pub spec: TrainPredictSpec,
    pub teacher: NetworkParams<f64>,
    /// `t_train + delta_t` teacher states starting at time 0.
    pub trajectory: Trajectory<f64>,
    pub dataset: Dataset<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainPredictOutcome {
    pub teacher: NetworkParams<f64>,
    pub student: NetworkParams<f64>,
    pub loss_history: Vec<f64>,
    pub eps_w: f64,
    pub eps_b: f64,
    /// Student error against the teacher over times `t_train ..`.
    pub pred_curve: ErrorCurve,
    pub report: BlowUpReport,
    pub teacher_future: Trajectory<f64>,
    pub student_future: Trajectory<f64>,
}

impl TrainPredictOutcome {
    /// Steps before the prediction error first exceeds the horizon threshold;
    /// the full window when it never does.
    pub fn horizon(&self) -> usize {
        self.report.blow_up_step.unwrap_or(self.pred_curve.len())
    }
}

impl TrainPredictSetup {
    pub fn new(spec: &TrainPredictSpec) -> Result<Self> {
        spec.validate()?;
        let (x0, teacher) = sample_system(spec.seed, spec.n)?;
        let trajectory = iterate(&teacher, &x0, spec.t_train + spec.delta_t, spec.kernel)?;
        let dataset = build_dataset(&trajectory.slice(0..spec.t_train)?)?;
        Ok(TrainPredictSetup { spec: spec.clone(), teacher, trajectory, dataset })
    }

    /// Roll `student` out from the true teacher state at `t_train` and compare.
    pub fn evaluate(&self, student: NetworkParams<f64>, loss_history: Vec<f64>) -> Result<TrainPredictOutcome> {
        let spec = &self.spec;
        let (eps_w, eps_b) = param_errors(&student, &self.teacher)?;
        let teacher_future = self.trajectory.slice(spec.t_train..spec.t_train + spec.delta_t)?;
        let rollout = predict_rollout(&student, &teacher_future[0], spec.delta_t, spec.kernel)?;
        let student_future = Trajectory::from_states(rollout.states().to_vec(), spec.t_train)?;
        let pred_curve = per_step_error(&student_future, &teacher_future)?;
        let report = blow_up_analysis(&pred_curve, spec.horizon_threshold)?;
        Ok(TrainPredictOutcome {
            teacher: self.teacher.clone(),
            student,
            loss_history,
            eps_w,
            eps_b,
            pred_curve,
            report,
            teacher_future,
            student_future,
        })
    }
}

/// Sample a teacher, train a student on its trajectory, then predict.
pub fn train_and_predict(spec: &TrainPredictSpec) -> Result<TrainPredictOutcome> {
    let setup = TrainPredictSetup::new(spec)?;
    let (student, history) = train(&setup.dataset, &spec.train, spec.kernel)?;
    setup.evaluate(student, history)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twin(n: usize, a: &str, b: &str) -> TwinSpec {
        TwinSpec {
            n,
            t: 100,
            seed: Seed(123),
            kernel_a: a.parse().unwrap(),
            kernel_b: b.parse().unwrap(),
            threshold: 1.0,
        }
    }

    #[test]
    fn same_kernel_twin_is_null() {
        let out = twin_divergence(&twin(20, "seq32", "seq32")).unwrap();
        assert!(out.curve.eps.iter().all(|e| *e == 0.0));
        assert_eq!(out.report.blow_up_step, None);
        assert_eq!(out.reference, out.test);
    }

    #[test]
    fn spec_validation() {
        assert!(twin_divergence(&TwinSpec { t: 1, ..twin(5, "seq64", "seq32") }).is_err());
        assert!(twin_divergence(&TwinSpec { n: 0, ..twin(5, "seq64", "seq32") }).is_err());
        let sweep = SweepSpec {
            sizes: vec![],
            t: 10,
            trials: 1,
            base_seed: Seed(1),
            kernel_a: EvalKernel::SEQ64,
            kernel_b: EvalKernel::SEQ32,
            threshold: 1.0,
        };
        assert!(divergence_sweep(&sweep).is_err());
        assert!(divergence_sweep(&SweepSpec { sizes: vec![5], trials: 0, ..sweep }).is_err());
    }

    #[test]
    fn single_trial_sweep_equals_twin() {
        let spec = SweepSpec {
            sizes: vec![30],
            t: 60,
            trials: 1,
            base_seed: Seed(9),
            kernel_a: EvalKernel::SEQ64,
            kernel_b: EvalKernel::SEQ32,
            threshold: 1.0,
        };
        let sweep = divergence_sweep(&spec).unwrap();
        let single = twin_divergence(&spec.twin(30, 0)).unwrap();
        assert_eq!(sweep[&30].curve, single.curve);
        assert_eq!(sweep[&30].trials, vec![single.report]);
    }

    #[test]
    fn evaluate_teacher_as_student_is_exact() {
        let spec = TrainPredictSpec {
            n: 10,
            t_train: 50,
            delta_t: 20,
            train: TrainConfig { epochs: 0, ..TrainConfig::default() },
            seed: Seed(4),
            kernel: EvalKernel::SEQ64,
            horizon_threshold: 10.0,
        };
        let setup = TrainPredictSetup::new(&spec).unwrap();
        assert_eq!(setup.dataset.len(), 49);
        let out = setup.evaluate(setup.teacher.clone(), vec![]).unwrap();
        assert_eq!((out.eps_w, out.eps_b), (0.0, 0.0));
        assert!(out.pred_curve.eps.iter().all(|e| *e == 0.0));
        assert_eq!(out.pred_curve.t0, 50);
        assert_eq!(out.teacher_future[0], setup.trajectory[50]);
        assert_eq!(out.horizon(), 20);

        let untrained = train_and_predict(&spec).unwrap();
        assert!(untrained.loss_history.is_empty());
        assert!(untrained.eps_w > 10.0);
    }
}
