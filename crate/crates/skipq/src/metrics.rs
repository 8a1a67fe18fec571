//! Queue-imbalance projections and steady-state estimators.
//!
//! **Projections.** Decompose a queue vector along the all-ones direction:
//! the balanced component `Q∥` has every entry equal to the mean queue
//! length, and the imbalance component `Q⊥ = Q − Q∥` measures how unevenly
//! the work is spread. They are orthogonal, so
//! `‖Q‖₂² = ‖Q∥‖₂² + ‖Q⊥‖₂²` exactly. "State space collapse" is the
//! empirical fact this module lets experiments verify: as the load
//! approaches capacity the total queue `‖Q‖₁` diverges like `1/ε` while
//! `E[‖Q⊥‖₂²]` stays bounded, so the imbalance becomes negligible
//! relative to the queue itself.
//!
//! **Sampling convention.** `‖Q⊥‖₂²` is accumulated twice: over *all*
//! slots, and separately at *cycle boundaries only* — the instants the
//! dispatcher polls, which is where the collapse constant `N₂` applies.
//! Between polls the imbalance can grow by at most a bounded amount per
//! cycle, so the two estimates stay within a k-and-bound-dependent gap;
//! both are reported, only the boundary estimate is compared against `N₂`.
//!
//! **Estimation.** Steady-state means come with batch-means confidence
//! intervals: the measurement window (everything after warmup) is split
//! into equal non-overlapping batches, and the batch means — approximately
//! independent once batches are much longer than the mixing time — feed a
//! Student-t interval.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// The projection of one queue vector, as used by the collapse analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscSnapshot {
    /// `‖Q∥‖₂² = (‖Q‖₁)²/n` — the balanced component's squared norm.
    pub parallel_norm_sq: f64,
    /// `‖Q⊥‖₂² = Σ(q_i − mean)²` — the imbalance's squared norm.
    pub perp_norm_sq: f64,
    /// `‖Q‖₁ = Σ q_i`.
    pub l1_total: u64,
    /// Whether the snapshot was taken at a polling instant.
    pub sampled_at_cycle_boundary: bool,
}

impl SscSnapshot {
    /// Project a queue vector.
    pub fn from_queues(q: &[u64], sampled_at_cycle_boundary: bool) -> Self {
        let l1: u64 = q.iter().sum();
        let n = q.len() as f64;
        SscSnapshot {
            parallel_norm_sq: (l1 as f64) * (l1 as f64) / n,
            perp_norm_sq: perp_norm_sq(q),
            l1_total: l1,
            sampled_at_cycle_boundary,
        }
    }
}

/// Squared norm of the imbalance component: `Σ_i (q_i − mean(q))²`.
pub fn perp_norm_sq(q: &[u64]) -> f64 {
    let n = q.len() as f64;
    let mean = q.iter().sum::<u64>() as f64 / n;
    q.iter()
        .map(|&v| {
            let dev = v as f64 - mean;
            dev * dev
        })
        .sum()
}

/// The collapse ratio `√(n·E[‖Q⊥‖₂²]) / E[‖Q‖₁]` from plug-in estimates.
///
/// The numerator dominates `E[‖Q⊥‖₁]` (norm equivalence plus Jensen), so a
/// vanishing ratio certifies that the imbalance is negligible relative to
/// the queue vector. `n` is the system size the estimates came from.
pub fn collapse_ratio(e_perp_norm_sq: f64, e_l1: f64, n: usize) -> Result<f64> {
    if !(e_l1 > 0.0) {
        return Err(Error::Precondition(format!(
            "mean total queue {e_l1} must be positive"
        )));
    }
    if !(e_perp_norm_sq >= 0.0) {
        return Err(Error::Precondition(format!(
            "mean squared imbalance {e_perp_norm_sq} must be non-negative"
        )));
    }
    Ok((n as f64 * e_perp_norm_sq).sqrt() / e_l1)
}

/// Two-sided 97.5% Student-t quantile (the multiplier for a 95% interval)
/// with the given degrees of freedom.
fn t_975(dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64)
        .expect("degrees of freedom are validated by the caller");
    dist.inverse_cdf(0.975)
}

/// Mean and 95% half-width of a set of (approximately independent) batch
/// means. Needs at least two values; a constant set gives half-width 0.
pub fn mean_and_half_width_95(batch_means: &[f64]) -> Result<(f64, f64)> {
    let b = batch_means.len();
    if b < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 batch means for an interval, got {b}"
        )));
    }
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    let ss: f64 = batch_means.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let sample_var = ss / (b - 1) as f64;
    let half_width = t_975(b - 1) * (sample_var / b as f64).sqrt();
    Ok((mean, half_width))
}

/// Non-overlapping batch-means estimator: splits `series` into `batches`
/// equal consecutive batches (trailing remainder dropped) and returns the
/// overall mean with its Student-t 95% half-width.
///
/// Requires `series.len() ≥ 10·batches` so each batch carries enough data
/// to be treated as one approximately independent observation.
pub fn batch_means(series: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 batches, got {batches}"
        )));
    }
    if series.len() < 10 * batches {
        return Err(Error::InsufficientData(format!(
            "series of length {} is too short for {batches} batches (need ≥ {})",
            series.len(),
            10 * batches
        )));
    }
    let per = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    mean_and_half_width_95(&means)
}

/// Streaming per-trajectory statistics: per-slot state measurements split
/// into equal batches, plus whole-window totals. One instance per
/// trajectory; replications are merged downstream by pooling batch means.
///
/// Slots before `warmup_slots` must simply not be recorded; the owner of
/// the trajectory enforces the warmup cut.
#[derive(Debug, Clone)]
pub struct RunningStats {
    n: usize,
    /// Warmup length this window was preceded by (for reporting).
    pub warmup_slots: u64,
    slots_per_batch: u64,

    cur_slots: u64,
    cur_qbar_sum: f64,
    cur_cross_sum: f64,
    cur_perp_boundary_sum: f64,
    cur_perp_boundary_count: u64,
    cur_msgs: u64,
    cur_unused: u64,

    /// Per-batch means of the per-slot average queue length.
    pub batch_avg_queue: Vec<f64>,
    /// Per-batch means of the per-slot cross-server standard deviation.
    pub batch_cross_stdev: Vec<f64>,
    /// Per-batch means of `‖Q⊥‖₂²` at polling instants (batches without a
    /// polling instant are skipped).
    pub batch_perp_sq_boundary: Vec<f64>,
    /// Per-batch messages per slot.
    pub batch_msg_per_slot: Vec<f64>,
    /// Per-batch wasted service per slot.
    pub batch_unused_per_slot: Vec<f64>,

    measured_slots: u64,
    total_qbar_sum: f64,
    total_qbar_sq_sum: f64,
    total_perp_all_sum: f64,
    total_perp_boundary_sum: f64,
    total_boundary_count: u64,
    total_msgs: u64,
    total_unused: u64,
}

impl RunningStats {
    /// A window of `horizon_slots` measured slots in `batches` equal
    /// batches. `horizon_slots` must be divisible by `batches` (the config
    /// normalization guarantees this for harness runs).
    pub fn new(n: usize, warmup_slots: u64, horizon_slots: u64, batches: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("system size n must be ≥ 1".into()));
        }
        if batches == 0 || horizon_slots == 0 || !horizon_slots.is_multiple_of(batches as u64) {
            return Err(Error::Config(format!(
                "horizon of {horizon_slots} slots does not split into {batches} equal batches"
            )));
        }
        Ok(RunningStats {
            n,
            warmup_slots,
            slots_per_batch: horizon_slots / batches as u64,
            cur_slots: 0,
            cur_qbar_sum: 0.0,
            cur_cross_sum: 0.0,
            cur_perp_boundary_sum: 0.0,
            cur_perp_boundary_count: 0,
            cur_msgs: 0,
            cur_unused: 0,
            batch_avg_queue: Vec::new(),
            batch_cross_stdev: Vec::new(),
            batch_perp_sq_boundary: Vec::new(),
            batch_msg_per_slot: Vec::new(),
            batch_unused_per_slot: Vec::new(),
            measured_slots: 0,
            total_qbar_sum: 0.0,
            total_qbar_sq_sum: 0.0,
            total_perp_all_sum: 0.0,
            total_perp_boundary_sum: 0.0,
            total_boundary_count: 0,
            total_msgs: 0,
            total_unused: 0,
        })
    }

    /// Record the state at the *beginning* of a measured slot from the
    /// queue totals `l1 = Σq` and `l2_sq = Σq²`; `at_boundary` marks
    /// polling instants.
    #[inline]
    pub fn record_state(&mut self, l1: u64, l2_sq: u64, at_boundary: bool) {
        let nf = self.n as f64;
        let qbar = l1 as f64 / nf;
        // ‖Q⊥‖₂² = Σq² − (Σq)²/n, computed from exact integer totals
        let perp = (l2_sq as f64 - (l1 as f64) * (l1 as f64) / nf).max(0.0);
        let cross = (perp / nf).sqrt();
        self.cur_qbar_sum += qbar;
        self.cur_cross_sum += cross;
        self.total_qbar_sum += qbar;
        self.total_qbar_sq_sum += qbar * qbar;
        self.total_perp_all_sum += perp;
        if at_boundary {
            self.cur_perp_boundary_sum += perp;
            self.cur_perp_boundary_count += 1;
            self.total_perp_boundary_sum += perp;
            self.total_boundary_count += 1;
        }
    }

    /// Record the flows of the same slot (messages charged at its top,
    /// service wasted during it) and close the slot; closes the batch when
    /// it is full.
    #[inline]
    pub fn record_flows(&mut self, messages: u64, unused: u64) {
        self.cur_msgs += messages;
        self.cur_unused += unused;
        self.total_msgs += messages;
        self.total_unused += unused;
        self.cur_slots += 1;
        self.measured_slots += 1;
        if self.cur_slots == self.slots_per_batch {
            let slots = self.cur_slots as f64;
            self.batch_avg_queue.push(self.cur_qbar_sum / slots);
            self.batch_cross_stdev.push(self.cur_cross_sum / slots);
            if self.cur_perp_boundary_count > 0 {
                self.batch_perp_sq_boundary
                    .push(self.cur_perp_boundary_sum / self.cur_perp_boundary_count as f64);
            }
            self.batch_msg_per_slot.push(self.cur_msgs as f64 / slots);
            self.batch_unused_per_slot
                .push(self.cur_unused as f64 / slots);
            self.cur_slots = 0;
            self.cur_qbar_sum = 0.0;
            self.cur_cross_sum = 0.0;
            self.cur_perp_boundary_sum = 0.0;
            self.cur_perp_boundary_count = 0;
            self.cur_msgs = 0;
            self.cur_unused = 0;
        }
    }

    /// Slots recorded so far (excluding warmup, which is never recorded).
    pub fn measured_slots(&self) -> u64 {
        self.measured_slots
    }

    /// Completed batches so far.
    pub fn completed_batches(&self) -> usize {
        self.batch_avg_queue.len()
    }

    /// Mean per-slot average queue length over the whole window.
    pub fn mean_avg_queue(&self) -> f64 {
        self.total_qbar_sum / self.measured_slots as f64
    }

    /// 95% half-width for the average queue from this trajectory's batch
    /// means. At least 10 completed batches are required for any interval.
    pub fn avg_queue_half_width(&self) -> Result<f64> {
        if self.completed_batches() < 10 {
            return Err(Error::InsufficientData(format!(
                "only {} completed batches; need ≥ 10 for an interval",
                self.completed_batches()
            )));
        }
        Ok(mean_and_half_width_95(&self.batch_avg_queue)?.1)
    }

    /// Time-average of the per-slot cross-server standard deviation.
    pub fn cross_stdev(&self) -> f64 {
        let total: f64 = self.batch_cross_stdev.iter().sum::<f64>();
        total / self.batch_cross_stdev.len().max(1) as f64
    }

    /// Standard deviation over time of the per-slot average queue.
    pub fn temporal_stdev(&self) -> f64 {
        let m = self.measured_slots as f64;
        let mean = self.total_qbar_sum / m;
        (self.total_qbar_sq_sum / m - mean * mean).max(0.0).sqrt()
    }

    /// Mean `‖Q⊥‖₂²` at polling instants.
    pub fn perp_sq_boundary_mean(&self) -> f64 {
        if self.total_boundary_count == 0 {
            return f64::NAN;
        }
        self.total_perp_boundary_sum / self.total_boundary_count as f64
    }

    /// Mean `‖Q⊥‖₂²` over all slots.
    pub fn perp_sq_all_mean(&self) -> f64 {
        self.total_perp_all_sum / self.measured_slots as f64
    }

    /// Polling instants seen in the window.
    pub fn boundary_count(&self) -> u64 {
        self.total_boundary_count
    }

    /// Total messages charged in the window.
    pub fn total_messages(&self) -> u64 {
        self.total_msgs
    }

    /// Mean messages per slot.
    pub fn msg_per_slot(&self) -> f64 {
        self.total_msgs as f64 / self.measured_slots as f64
    }

    /// Mean wasted service per slot.
    pub fn unused_per_slot(&self) -> f64 {
        self.total_unused as f64 / self.measured_slots as f64
    }
}
