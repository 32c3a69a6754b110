//! Evaluation kernels: how the weighted sum `sum_m w[n][m] * x[m] + b[n]` and
//! the following `tanh` are rounded.
//!
//! Every kernel computes the same mathematical quantity. They differ only in
//! the working precision and in the order in which the products are added, so
//! two kernels applied to the same inputs agree to within a few ulps per step.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use crate::error::Error;
use crate::rng::{permutation, Seed};
use crate::scalar::Real;

/// Working precision of the accumulate-and-activate step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Bits64,
    Bits32,
}

/// Order in which the `n` products of one row are added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumOrder {
    /// `((p0 + p1) + p2) + ...`
    Sequential,
    /// `((p[n-1] + p[n-2]) + ...) + p0`
    Reversed,
    /// Recursive halving at `len / 2`; slices of at most 8 are summed
    /// sequentially.
    Pairwise,
    /// Sequential partial sums over consecutive blocks, then a sequential sum
    /// of the block results.
    Blocked(NonZeroUsize),
    /// Sequential sum over a Fisher-Yates permutation of `0..n` drawn from
    /// the given seed. The same permutation is used for every row.
    Permuted(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EvalKernel {
    pub precision: Precision,
    pub order: SumOrder,
}

pub const PAIRWISE_BASE: usize = 8;

impl EvalKernel {
    pub const SEQ64: EvalKernel = EvalKernel::new(Precision::Bits64, SumOrder::Sequential);
    pub const SEQ32: EvalKernel = EvalKernel::new(Precision::Bits32, SumOrder::Sequential);

    pub const fn new(precision: Precision, order: SumOrder) -> Self {
        EvalKernel { precision, order }
    }

    /// Every named order at `precision`, with the given block size and
    /// permutation seed for the parameterised variants.
    pub fn all_orders(precision: Precision, block: NonZeroUsize, perm_seed: u64) -> Vec<Self> {
        [
            SumOrder::Sequential,
            SumOrder::Reversed,
            SumOrder::Pairwise,
            SumOrder::Blocked(block),
            SumOrder::Permuted(perm_seed),
        ]
        .into_iter()
        .map(|order| EvalKernel::new(precision, order))
        .collect()
    }

    /// Fix the per-size data (the permutation, for `Permuted`) once so that
    /// repeated steps do not redo it.
    pub fn prepare(&self, n: usize) -> PreparedKernel {
        let perm = match self.order {
            SumOrder::Permuted(seed) => Some(permutation(&mut Seed(seed).rng(), n)),
            _ => None,
        };
        PreparedKernel { kernel: *self, perm }
    }
}

impl Default for EvalKernel {
    fn default() -> Self {
        EvalKernel::SEQ64
    }
}

/// Valid names accepted by [`EvalKernel::from_str`].
pub const KERNEL_NAMES: &str =
    "seq64, rev64, pair64, blk64:<size>, perm64:<seed>, seq32, rev32, pair32, blk32:<size>, perm32:<seed>";

impl fmt::Display for EvalKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = match self.precision {
            Precision::Bits64 => 64,
            Precision::Bits32 => 32,
        };
        match self.order {
            SumOrder::Sequential => write!(f, "seq{bits}"),
            SumOrder::Reversed => write!(f, "rev{bits}"),
            SumOrder::Pairwise => write!(f, "pair{bits}"),
            SumOrder::Blocked(size) => write!(f, "blk{bits}:{size}"),
            SumOrder::Permuted(seed) => write!(f, "perm{bits}:{seed}"),
        }
    }
}

impl FromStr for EvalKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("unknown kernel `{s}`; valid kernels: {KERNEL_NAMES}"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let (name, precision) = if let Some(name) = head.strip_suffix("64") {
            (name, Precision::Bits64)
        } else if let Some(name) = head.strip_suffix("32") {
            (name, Precision::Bits32)
        } else {
            return Err(bad());
        };
        let order = match (name, arg) {
            ("seq", None) => SumOrder::Sequential,
            ("rev", None) => SumOrder::Reversed,
            ("pair", None) => SumOrder::Pairwise,
            ("blk", Some(a)) => SumOrder::Blocked(a.parse().map_err(|_| bad())?),
            ("perm", Some(a)) => SumOrder::Permuted(a.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        Ok(EvalKernel::new(precision, order))
    }
}

/// A kernel bound to a network size.
#[derive(Debug, Clone)]
pub struct PreparedKernel {
    kernel: EvalKernel,
    perm: Option<Vec<usize>>,
}

impl PreparedKernel {
    pub fn kernel(&self) -> EvalKernel {
        self.kernel
    }

    /// Sum `terms` in this kernel's order, in the precision of `P`.
    pub fn sum<P: Real>(&self, terms: &[P]) -> P {
        match self.kernel.order {
            SumOrder::Sequential => sum_sequential(terms),
            SumOrder::Reversed => terms.iter().rev().fold(P::zero(), |acc, &t| acc + t),
            SumOrder::Pairwise => sum_pairwise(terms),
            SumOrder::Blocked(size) => sum_blocked(terms, size.get()),
            SumOrder::Permuted(_) => {
                let perm = self.perm.as_deref().expect("permutation prepared");
                debug_assert_eq!(perm.len(), terms.len());
                perm.iter().fold(P::zero(), |acc, &i| acc + terms[i])
            }
        }
    }
}

pub fn sum_sequential<P: Real>(terms: &[P]) -> P {
    terms.iter().fold(P::zero(), |acc, &t| acc + t)
}

pub fn sum_pairwise<P: Real>(terms: &[P]) -> P {
    if terms.len() <= PAIRWISE_BASE {
        return sum_sequential(terms);
    }
    let (lo, hi) = terms.split_at(terms.len() / 2);
    sum_pairwise(lo) + sum_pairwise(hi)
}

pub fn sum_blocked<P: Real>(terms: &[P], block: usize) -> P {
    terms
        .chunks(block)
        .map(sum_sequential)
        .fold(P::zero(), |acc, s| acc + s)
}
