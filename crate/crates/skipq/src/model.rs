//! Queueing state and the one-slot dynamics.
//!
//! Time is slotted. At the beginning of slot `t` the state is the vector of
//! queue lengths `q`. During the slot a single batch of `arrivals` jobs is
//! appended to the queue chosen by the dispatcher (`target`), and server `i`
//! removes up to `services[i]` jobs from its own queue; both effects are
//! applied simultaneously as one truncated update:
//!
//! ```text
//! q'[i] = max(q[i] + arrivals·1{i = target} - services[i], 0)
//! ```
//!
//! Service capacity that finds no job to serve is recorded per server as
//! `unused[i] = max(services[i] - q[i] - arrivals·1{i = target}, 0)`, so the
//! exact integer identity
//!
//! ```text
//! q'[i] - q[i] = arrivals·1{i = target} - services[i] + unused[i]
//! ```
//!
//! holds at every slot, along with complementary slackness
//! `q'[i]·unused[i] = 0`: capacity is only ever wasted on a queue that ends
//! the slot empty.
//!
//! All state is exact integers; mean/variance targets live exclusively in
//! [`crate::stochastic`]. There is no intra-slot ordering of arrivals versus
//! services — the truncated update above *is* the model.

use crate::error::{Error, Result};

/// Queue lengths at the beginning of a slot, one non-negative entry per
/// server. The length of the vector is the system size `n`, fixed for a run.
pub type QueueVector = Vec<u64>;

/// Everything that happened in one time slot, kept for inspection and
/// invariant checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotOutcome {
    /// The arrival batch size `A(t)` (all jobs go to one queue).
    pub arrivals_total: u64,
    /// Index of the queue that received the batch (0-based).
    pub target: usize,
    /// Per-server offered service `S_i(t)`.
    pub services: Vec<u64>,
    /// Per-server wasted capacity `U_i(t)`.
    pub unused: Vec<u64>,
    /// Messages exchanged with the dispatcher during this slot (2n on
    /// polling slots, 0 otherwise; filled in by the harness).
    pub messages_exchanged: u64,
}

/// Per-server service-law description: targets for the mean and variance of
/// the per-slot service offered by each server, plus the almost-sure bound
/// shared by all servers.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSpec {
    /// Mean service rate per slot for each server (jobs/slot), `mu[i] > 0`.
    pub mu: Vec<f64>,
    /// Per-server service variance target.
    pub sigma_mu_sq: Vec<f64>,
    /// Hard upper bound on any single-slot service amount.
    pub s_max: u64,
}

impl ServiceSpec {
    /// Homogeneous spec: every server gets the same `(mu, sigma_mu_sq)`.
    pub fn homogeneous(n: usize, mu: f64, sigma_mu_sq: f64, s_max: u64) -> Self {
        ServiceSpec {
            mu: vec![mu; n],
            sigma_mu_sq: vec![sigma_mu_sq; n],
            s_max,
        }
    }

    /// Number of servers described.
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Sum of the mean service rates (the system's total capacity).
    pub fn mu_sum(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// Largest mean service rate.
    pub fn mu_max(&self) -> f64 {
        self.mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest mean service rate.
    pub fn mu_min(&self) -> f64 {
        self.mu.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest per-server service variance.
    pub fn sigma_mu_max_sq(&self) -> f64 {
        self.sigma_mu_sq
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum of the per-server service variances.
    pub fn sigma_mu_sq_sum(&self) -> f64 {
        self.sigma_mu_sq.iter().sum()
    }

    /// Check ranges and moment feasibility: each server needs an integer
    /// law on `{0, …, s_max}` with mean `mu[i]` and variance
    /// `sigma_mu_sq[i]`, which requires `0 < mu[i] ≤ s_max` and
    /// `sigma_mu_sq[i] ≤ mu[i]·(s_max - mu[i])`.
    pub fn validate(&self) -> Result<()> {
        if self.mu.is_empty() {
            return Err(Error::Config("service spec has no servers".into()));
        }
        if self.mu.len() != self.sigma_mu_sq.len() {
            return Err(Error::Config(format!(
                "service spec has {} mean rates but {} variances",
                self.mu.len(),
                self.sigma_mu_sq.len()
            )));
        }
        if self.s_max == 0 {
            return Err(Error::Config("s_max must be a positive integer".into()));
        }
        let s_max = self.s_max as f64;
        for (i, (&m, &v)) in self.mu.iter().zip(&self.sigma_mu_sq).enumerate() {
            if !(m > 0.0) || m > s_max {
                return Err(Error::Config(format!(
                    "server {i}: mean service rate {m} outside (0, s_max = {s_max}]"
                )));
            }
            if !(v >= 0.0) || v > m * (s_max - m) {
                return Err(Error::Config(format!(
                    "server {i}: service variance {v} infeasible on {{0,…,{}}} with mean {m} \
                     (max feasible {})",
                    self.s_max,
                    m * (s_max - m)
                )));
            }
        }
        Ok(())
    }
}

/// Arrival-law description for the per-slot batch `A(t)`.
///
/// The fields follow the scaling convention of the model: with `n` servers
/// and per-server load `λ`, the batch has mean `nλ`, variance `nσ_λ²`, and
/// is bounded by `n·a_max` almost surely. The fields store the *aggregate*
/// mean and variance, and the *per-server* bound `a_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSpec {
    /// Mean batch size per slot, `E[A(1)] = nλ`.
    pub n_lambda: f64,
    /// Variance of the batch size, `Var(A(1)) = nσ_λ²`.
    pub n_sigma_lambda_sq: f64,
    /// Per-server bound: `A(1) ≤ n·a_max` almost surely.
    pub a_max: f64,
}

impl ArrivalSpec {
    /// The absolute bound on a single batch, `⌊n·a_max⌋`.
    pub fn batch_bound(&self, n: usize) -> u64 {
        (n as f64 * self.a_max).floor() as u64
    }

    /// Per-server mean load `λ = E[A(1)]/n`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.n_lambda / n as f64
    }

    /// Check ranges and moment feasibility on the support `{0, …, ⌊n·a_max⌋}`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.n_lambda > 0.0) {
            return Err(Error::Config(format!(
                "arrival mean {} must be positive",
                self.n_lambda
            )));
        }
        if !(self.a_max > 0.0) {
            return Err(Error::Config(format!(
                "a_max {} must be positive",
                self.a_max
            )));
        }
        let bound = self.batch_bound(n) as f64;
        if self.n_lambda >= bound && bound > 0.0 {
            // equality excluded so the mean stays strictly inside the support
            return Err(Error::Config(format!(
                "arrival mean {} must be below the batch bound n·a_max = {bound}",
                self.n_lambda
            )));
        }
        if !(self.n_sigma_lambda_sq >= 0.0)
            || self.n_sigma_lambda_sq > self.n_lambda * (bound - self.n_lambda)
        {
            return Err(Error::Config(format!(
                "arrival variance {} infeasible on {{0,…,{bound}}} with mean {} (max feasible {})",
                self.n_sigma_lambda_sq,
                self.n_lambda,
                self.n_lambda * (bound - self.n_lambda)
            )));
        }
        Ok(())
    }
}

/// Running totals produced as a by-product of [`step_in_place`], so
/// callers that track whole-trajectory aggregates do not need a second pass
/// over the queue vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepTotals {
    /// Sum of queue lengths after the update.
    pub l1: u64,
    /// Sum of squared queue lengths after the update.
    pub l2_sq: u64,
    /// Total service capacity wasted this slot.
    pub unused_total: u64,
}

/// Allocation-free core of the one-slot update. `q` is updated in place,
/// per-server wasted capacity is written to `unused`.
///
/// This is the single authoritative implementation of the dynamics; the
/// checked, value-returning [`step`] and the simulation harness both
/// delegate here. Dimension agreement is the caller's responsibility
/// (checked in debug builds).
pub fn step_in_place(
    q: &mut [u64],
    arrivals: u64,
    target: usize,
    services: &[u64],
    unused: &mut [u64],
) -> StepTotals {
    debug_assert_eq!(q.len(), services.len());
    debug_assert_eq!(q.len(), unused.len());
    debug_assert!(target < q.len());
    let mut l1 = 0u64;
    let mut l2_sq = 0u64;
    let mut unused_total = 0u64;
    for i in 0..q.len() {
        let offered = q[i] + if i == target { arrivals } else { 0 };
        let s = services[i];
        let u = s.saturating_sub(offered);
        let next = offered.saturating_sub(s);
        q[i] = next;
        unused[i] = u;
        l1 += next;
        l2_sq += next * next;
        unused_total += u;
    }
    StepTotals {
        l1,
        l2_sq,
        unused_total,
    }
}

/// One slot of the dynamics as a pure function: returns the next queue
/// vector and the full [`SlotOutcome`] (with `messages_exchanged = 0`; the
/// dispatcher's message accounting is layered on by the harness).
///
/// `target` is a 0-based queue index.
pub fn step(
    q: &QueueVector,
    arrivals: u64,
    target: usize,
    services: &[u64],
) -> Result<(QueueVector, SlotOutcome)> {
    if services.len() != q.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} queues but {} service draws",
            q.len(),
            services.len()
        )));
    }
    if target >= q.len() {
        return Err(Error::Config(format!(
            "target index {target} out of range for {} queues",
            q.len()
        )));
    }
    let mut next = q.clone();
    let mut unused = vec![0u64; q.len()];
    step_in_place(&mut next, arrivals, target, services, &mut unused);
    let outcome = SlotOutcome {
        arrivals_total: arrivals,
        target,
        services: services.to_vec(),
        unused,
        messages_exchanged: 0,
    };
    Ok((next, outcome))
}

/// Total number of jobs in the system.
pub fn total_jobs(q: &[u64]) -> u64 {
    q.iter().sum()
}
