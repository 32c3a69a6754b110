//! The random tanh network `x(t+1) = tanh(w x(t) + b)` and its iteration under
//! an [`EvalKernel`].

use std::ops::{Deref, Index};

use rand_core::RngCore;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{EvalKernel, Precision, PreparedKernel};
use crate::rng::{symmetric_f64, Seed};
use crate::scalar::{cast, Real};

/// Activity vector of an `n`-node network.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T>(Vec<T>);

impl<T: Real> StateVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("state vector must have n >= 1".into()));
        }
        Ok(StateVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        StateVector(vec![T::zero(); n])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T> Deref for StateVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Connectivity `w` (row `i` holds the weights into node `i`) and bias `b`.
///
/// Used both for the frozen teacher network and for a trained student.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    n: usize,
    w: Vec<T>,
    b: Vec<T>,
}

impl<T: Real> NetworkParams<T> {
    /// `w` is row-major `n * n`.
    pub fn new(n: usize, w: Vec<T>, b: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("network size must be >= 1".into()));
        }
        check_dim(n * n, w.len())?;
        check_dim(n, b.len())?;
        Ok(NetworkParams { n, w, b })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![T::zero(); n * n], vec![T::zero(); n])
    }

    pub fn from_rows(rows: &[Vec<T>], b: Vec<T>) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            check_dim(n, r.len())?;
        }
        Self::new(n, rows.concat(), b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.w
    }

    pub fn bias(&self) -> &[T] {
        &self.b
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.b
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.w[i * self.n + j]
    }

    /// Convert element type, rounding if narrowing.
    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            n: self.n,
            w: self.w.iter().map(|&v| cast(v)).collect(),
            b: self.b.iter().map(|&v| cast(v)).collect(),
        }
    }
}

/// Sequence of states, `states[k + 1]` being one update of `states[k]`.
///
/// `t0` is the time index of `states[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    n: usize,
    t0: usize,
    states: Vec<StateVector<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Wrap externally produced states (e.g. read back from CSV). Only the
    /// shape is checked; the one-step relation between rows is the caller's
    /// responsibility.
    pub fn from_states(states: Vec<StateVector<T>>, t0: usize) -> Result<Self> {
        let n = states
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::InvalidDimension("trajectory must hold at least one state".into()))?;
        for s in &states {
            check_dim(n, s.len())?;
        }
        Ok(Trajectory { n, t0, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateVector<T>] {
        &self.states
    }

    pub fn last(&self) -> &StateVector<T> {
        self.states.last().expect("non-empty trajectory")
    }

    /// States `range`, re-indexed so the new `t0` is `self.t0 + range.start`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.states.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {range:?} out of bounds for trajectory of length {}",
                self.states.len()
            )));
        }
        Ok(Trajectory {
            n: self.n,
            t0: self.t0 + range.start,
            states: self.states[range.clone()].to_vec(),
        })
    }
}

impl<T> Index<usize> for Trajectory<T> {
    type Output = StateVector<T>;
    fn index(&self, k: usize) -> &StateVector<T> {
        &self.states[k]
    }
}

/// Draws states and networks from one seeded stream.
///
/// Draw order within [`Sampler::network`] is the bias vector first, then the
/// weight matrix in row-major order.
pub struct Sampler<R> {
    rng: R,
}

impl Sampler<rand_xoshiro::Xoshiro256StarStar> {
    pub fn from_seed(seed: Seed) -> Self {
        Sampler { rng: seed.rng() }
    }
}

impl<R: RngCore> Sampler<R> {
    pub fn new(rng: R) -> Self {
        Sampler { rng }
    }

    fn values<T: Real>(&mut self, count: usize) -> Vec<T> {
        (0..count).map(|_| T::from_f64_lossy(symmetric_f64(&mut self.rng))).collect()
    }

    pub fn state<T: Real>(&mut self, n: usize) -> Result<StateVector<T>> {
        if n == 0 {
            return Err(Error::InvalidDimension("state size must be >= 1".into()));
        }
        Ok(StateVector(self.values(n)))
    }

    pub fn network<T: Real>(&mut self, n: usize) -> Result<NetworkParams<T>> {
        if n == 0 {
            return Err(Error::InvalidDimension("network size must be >= 1".into()));
        }
        let b = self.values(n);
        let w = self.values(n * n);
        NetworkParams::new(n, w, b)
    }
}

/// Uniform(-1, 1) weights and bias drawn from `seed`.
pub fn sample_network<T: Real>(seed: Seed, n: usize) -> Result<NetworkParams<T>> {
    Sampler::from_seed(seed).network(n)
}

/// Uniform(-1, 1) initial state drawn from `seed`.
pub fn sample_state<T: Real>(seed: Seed, n: usize) -> Result<StateVector<T>> {
    Sampler::from_seed(seed).state(n)
}

/// Applies the update rule repeatedly with reusable scratch space.
pub struct Stepper<'a, T> {
    params: &'a NetworkParams<T>,
    kernel: PreparedKernel,
    scratch64: Vec<f64>,
    scratch32: Vec<f32>,
    x64: Vec<f64>,
    x32: Vec<f32>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(params: &'a NetworkParams<T>, kernel: EvalKernel) -> Self {
        Stepper {
            params,
            kernel: kernel.prepare(params.n),
            scratch64: Vec::new(),
            scratch32: Vec::new(),
            x64: Vec::new(),
            x32: Vec::new(),
        }
    }

    pub fn step(&mut self, x: &[T]) -> Result<StateVector<T>> {
        check_dim(self.params.n, x.len())?;
        let out = match self.kernel.kernel().precision {
            Precision::Bits64 => {
                activate(self.params, &self.kernel, x, &mut self.x64, &mut self.scratch64)
            }
            Precision::Bits32 => {
                activate(self.params, &self.kernel, x, &mut self.x32, &mut self.scratch32)
            }
        };
        Ok(StateVector(out))
    }
}

/// `y[i] = tanh(sum(w[i][m] * x[m]) + b[i])` with every operation performed in
/// `P`: inputs are rounded to `P`, the products are summed in the kernel's
/// order, the bias is added, `tanh` is evaluated, and only then is the result
/// widened back to `T`.
///
/// Where `tanh` rounds to +-1 the result is pulled in to the nearest
/// representable value inside the open interval, so states never reach +-1.
fn activate<T: Real, P: Real>(
    params: &NetworkParams<T>,
    kernel: &PreparedKernel,
    x: &[T],
    xp: &mut Vec<P>,
    products: &mut Vec<P>,
) -> Vec<T> {
    let n = params.n;
    xp.clear();
    xp.extend(x.iter().map(|&v| cast::<T, P>(v)));
    products.clear();
    products.resize(n, P::zero());
    let below_one = P::one() - P::epsilon() / (P::one() + P::one());
    (0..n)
        .map(|i| {
            for ((p, &w), &xm) in products.iter_mut().zip(params.row(i)).zip(xp.iter()) {
                *p = cast::<T, P>(w) * xm;
            }
            let z = kernel.sum(products) + cast::<T, P>(params.b[i]);
            let y = z.tanh().max(-below_one).min(below_one);
            cast::<P, T>(y)
        })
        .collect()
}

/// One update of `x` under `kernel`.
pub fn step<T: Real>(params: &NetworkParams<T>, x: &StateVector<T>, kernel: EvalKernel) -> Result<StateVector<T>> {
    Stepper::new(params, kernel).step(x)
}

/// Trajectory of `t` states starting at `x0` (so `t - 1` updates).
pub fn iterate<T: Real>(
    params: &NetworkParams<T>,
    x0: &StateVector<T>,
    t: usize,
    kernel: EvalKernel,
) -> Result<Trajectory<T>> {
    if t == 0 {
        return Err(Error::InvalidArgument("trajectory length t must be >= 1".into()));
    }
    check_dim(params.n, x0.len())?;
    let mut stepper = Stepper::new(params, kernel);
    let mut states = Vec::with_capacity(t);
    states.push(x0.clone());
    for k in 1..t {
        let next = stepper.step(&states[k - 1])?;
        states.push(next);
    }
    Ok(Trajectory { n: params.n, t0: 0, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SumOrder;
    use std::num::NonZeroUsize;

    fn zoo() -> Vec<EvalKernel> {
        let blk = NonZeroUsize::new(3).unwrap();
        let mut ks = EvalKernel::all_orders(Precision::Bits64, blk, 11);
        ks.extend(EvalKernel::all_orders(Precision::Bits32, blk, 11));
        ks
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(sample_network::<f64>(Seed(1), 0), Err(Error::InvalidDimension(_))));
        assert!(matches!(sample_state::<f64>(Seed(1), 0), Err(Error::InvalidDimension(_))));
        assert!(NetworkParams::<f64>::zeros(0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let a = sample_network::<f64>(Seed(123), 50).unwrap();
        let b = sample_network::<f64>(Seed(123), 50).unwrap();
        assert_eq!(a, b);
        let all: Vec<f64> = a.bias().iter().chain(a.weights()).copied().collect();
        assert_eq!(all.len(), 2550);
        assert!(all.iter().all(|v| *v > -1.0 && *v < 1.0));

        let x = sample_state::<f64>(Seed(7), 50).unwrap();
        assert_eq!(x, sample_state::<f64>(Seed(7), 50).unwrap());
        assert!(sample_state::<f64>(Seed(99), 100).unwrap().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn zero_network_maps_to_origin() {
        let p = NetworkParams::<f64>::zeros(4).unwrap();
        let x = sample_state(Seed(3), 4).unwrap();
        for k in zoo() {
            assert!(step(&p, &x, k).unwrap().iter().all(|v| *v == 0.0));
        }
        let traj = iterate(&p, &x, 5, EvalKernel::SEQ64).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(traj[0], x);
        for s in &traj.states()[1..] {
            assert!(s.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn scalar_step() {
        let p = NetworkParams::from_rows(&[vec![1.0]], vec![0.0]).unwrap();
        let x = StateVector::new(vec![0.5]).unwrap();
        let y = step(&p, &x, EvalKernel::SEQ64).unwrap();
        assert!((y[0] - 0.4621171572600098_f64).abs() < 1e-15);
        assert_eq!(y[0], 0.5f64.tanh());
    }

    #[test]
    fn dyadic_step_is_order_free() {
        let p = NetworkParams::from_rows(&[vec![0.5, 0.5], vec![-0.5, 0.5]], vec![0.0, 0.0]).unwrap();
        let x = StateVector::new(vec![0.5, 0.5]).unwrap();
        let want = [0.5f64.tanh(), 0.0];
        for k in zoo().into_iter().filter(|k| k.precision == Precision::Bits64) {
            let y = step(&p, &x, k).unwrap();
            assert_eq!(y.as_slice(), &want, "{k}");
        }
    }

    #[test]
    fn bits32_rounds_through_f32() {
        let p = NetworkParams::from_rows(&[vec![1.0]], vec![0.1]).unwrap();
        let x = StateVector::new(vec![0.3]).unwrap();
        let y = step(&p, &x, EvalKernel::SEQ32).unwrap();
        let want = ((1.0f32 * 0.3f32) + 0.1f32).tanh() as f64;
        assert_eq!(y[0], want);
    }

    #[test]
    fn permuted_uses_seeded_order() {
        let terms = [1.0f64, 1e-16, 1e-16, -1.0];
        let sums: std::collections::HashSet<u64> = (0..64)
            .map(|s| EvalKernel::new(Precision::Bits64, SumOrder::Permuted(s)).prepare(4).sum(&terms).to_bits())
            .collect();
        assert!(sums.len() > 1);
    }

    #[test]
    fn dimension_mismatch_and_zero_length() {
        let p = NetworkParams::<f64>::zeros(3).unwrap();
        let x = StateVector::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(step(&p, &x, EvalKernel::SEQ64), Err(Error::DimensionMismatch { .. })));
        let x3 = StateVector::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(iterate(&p, &x3, 0, EvalKernel::SEQ64).is_err());
        let one = iterate(&p, &x3, 1, EvalKernel::SEQ64).unwrap();
        assert_eq!(one.states(), &[x3]);
    }

    #[test]
    fn saturated_outputs_stay_inside_unit_interval() {
        let p = NetworkParams::from_rows(&[vec![30.0, 0.0], vec![0.0, -30.0]], vec![0.0, 0.0]).unwrap();
        let x = StateVector::new(vec![0.9, 0.9]).unwrap();
        for k in zoo() {
            let y = step(&p, &x, k).unwrap();
            assert!(y[0] < 1.0 && y[1] > -1.0, "{k}: {y:?}");
            assert!(y[0] > 0.999_999 && y[1] < -0.999_999);
        }
        let y = step(&p, &x, EvalKernel::SEQ64).unwrap();
        assert_eq!(y[0], 1.0 - f64::EPSILON / 2.0);
    }

    #[test]
    fn f32_storage_works() {
        let p = sample_network::<f32>(Seed(4), 10).unwrap();
        let x = sample_state::<f32>(Seed(5), 10).unwrap();
        let traj = iterate(&p, &x, 20, EvalKernel::SEQ32).unwrap();
        assert!(traj.states()[1..].iter().all(|s| s.max_abs() < 1.0));
    }
}
