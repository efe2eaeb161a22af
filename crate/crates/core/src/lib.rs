//! Samplers for multimodal distributions on `{0,1}^p`.
//!
//! The crate implements adaptive informed importance tempering (A-IIT) with a
//! bounded balancing function, its single-step variant (SS-IIT), and the
//! algorithms it is usually compared against: Metropolis-Hastings, MH with a
//! multiplicity list, rejection-free MH and naive IIT. On top of the
//! single-replica kernels sits a non-reversible parallel tempering driver
//! that alternates multiplicity-budgeted exploration with even/odd swap
//! rounds.
//!
//! Module map:
//!
//! - [`target`]: packed binary states, incremental mode distances and the
//!   mixture-of-modes target.
//! - [`balancing`]: balancing functions, the bounded construction and the
//!   adaptive bounding constant.
//! - [`samplers`]: the seven step kernels and their weights.
//! - [`estimator`]: the self-normalized weighted estimator.
//! - [`tempering`]: swap rules, the L0 budget procedure and [`tempering::run_pt`].
//! - [`diagnostics`]: TVD, mode hitting, accounting and the exact kernel oracle.
//!
//! The crate is `no_std` (with `alloc`). Threads, clocks and file formats
//! live in the companion harness crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod balancing;
pub mod diagnostics;
mod error;
pub mod estimator;
mod math;
pub mod rng;
pub mod samplers;
pub mod target;
pub mod tempering;

pub use balancing::{Basis, BalancingKind, BalancingSpec, BoundTrace};
pub use error::{Error, Result};
pub use estimator::EstimatorAccumulator;
pub use samplers::{Kernel, ReplicaState, SamplerKind, Transition, WeightKind, WeightedSample};
pub use target::{BinaryState, DistanceCache, ModePattern, TargetSpec};
pub use diagnostics::RunSummary;
pub use tempering::{PtConfig, ReplicaLadder, SwapRule};
