//! Discrete-time parallel-queue simulator and analysis toolkit for
//! sample-and-skip round-robin dispatching.
//!
//! The system under study: `n` parallel single-server queues in slotted time.
//! Each slot one batch of `A(t)` jobs arrives and must be dispatched, whole,
//! to a single queue; server `i` removes up to `S_i(t)` jobs from its own
//! queue. The dispatching policy ("k rounds, skip the d longest", `SLQ{k,d}`)
//! polls all queue lengths once every `k(n-d)` slots, marks the `d` longest
//! queues (ties broken uniformly at random), and then round-robins the next
//! `k(n-d)` batches over the remaining `n-d` queues. Polling costs `2n`
//! messages; everything in between is communication-free.
//!
//! The crate has two halves that check each other:
//!
//! * **Closed-form analysis** ([`analysis`]): the exact stability region of
//!   the policy, the minimum number of skips for throughput optimality, and
//!   the heavy-traffic bounds on the stationary queue length — including the
//!   state-space-collapse constant `N₂` built from the drift constants
//!   `Δ, Z, C₁′, C₂, η, ρ`.
//! * **Simulation** ([`harness`]): an exact, seeded, integer-state replay of
//!   the slot dynamics with batch-means confidence intervals, used to verify
//!   the formulas empirically (delay scaling, collapse of the queue-length
//!   imbalance, message accounting, instability outside the stability
//!   region).
//!
//! Module layout:
//!
//! ```text
//!             config ───────────► harness ───────────► report (CSV)
//!                                 │  │  │
//!                   ┌─────────────┘  │  └──────────────┐
//!                   ▼                ▼                  ▼
//!                policy           model             metrics
//!             (dispatch state  (one-slot queue   (projections, batch
//!              machine)         dynamics)         means, running stats)
//!                   │                │
//!                   └───────┬────────┘
//!                           ▼
//!                      stochastic
//!               (seeded streams, bounded
//!                integer distributions)
//!
//!             analysis (pure formulas; no simulation dependencies)
//! ```
//!
//! Determinism contract: every random quantity is drawn from a counter-based
//! generator seeded by `(seed, stream id)`, so a `(config, seed)` pair fully
//! determines the trajectory — across runs, platforms, and replication
//! orderings.

// `!(x > 0.0)` is used throughout validation on purpose: unlike `x <= 0.0`
// it also rejects NaN inputs, which must never pass a range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod report;
pub mod stochastic;

pub use analysis::{
    capacity_bound, capacity_bound_bruteforce, delta, is_throughput_optimal, lower_bound_rhs,
    many_server_diagnostic, message_rates, min_skips, n2_bound, stability_report, upper_bound_rhs,
    BoundsReport, StabilityReport,
};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use harness::{
    instability_demo, run_experiment, sweep_heavy_traffic, table1_preset, ExperimentResult,
    SlopeReport,
};
pub use metrics::{batch_means, collapse_ratio, perp_norm_sq, RunningStats, SscSnapshot};
pub use model::{step, total_jobs, ArrivalSpec, QueueVector, ServiceSpec, SlotOutcome};
pub use policy::{cycle_length, sample_and_select, DispatchState, Dispatcher, PolicyKind};
pub use stochastic::{make_bounded_discrete, BoundedDiscreteDist, RngStream};
