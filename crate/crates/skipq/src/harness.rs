//! Experiment orchestration: drives the dispatcher and queue dynamics over
//! seeded random inputs and aggregates the metrics into result rows.
//!
//! ```text
//!                ┌────────────── one replication ──────────────┐
//!  SystemConfig  │  LiveSim: per-slot loop                     │
//!  ────────────▶ │   begin_slot ─▶ draw A(t) ─▶ target ─▶      │ ─▶ RunningStats
//!   (normalized) │   draw S(t) ─▶ Lindley update               │
//!                └──────────────────────────────────────────────┘
//!                          … replications pooled …
//!                                   │
//!                                   ▼
//!                          ExperimentResult row
//! ```
//!
//! Randomness is striped: replication `r` of a run with seed `s` uses
//! streams `r·(n+2) + {0: arrivals, 1: tie-breaks, 2+i: server i}` of the
//! counter-based generator seeded with `s`. Two consequences worth the
//! bookkeeping: replications are statistically independent without sharing
//! state, and two *policies* run under one seed consume identical arrival
//! and service draws (common random numbers), so queue-length differences
//! between them are attributable to the policy alone.
//!
//! The stability gate runs before any simulation: loads outside the
//! policy's stability region are refused unless `allow_unstable` is set,
//! naming the offending boundary.

use crate::analysis::{
    delta, is_throughput_optimal, lower_bound_rhs, message_rates, n2_bound, stability_report,
    upper_bound_rhs,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{collapse_ratio, mean_and_half_width_95, RunningStats};
use crate::model::step_in_place;
use crate::policy::{Dispatcher, PolicyKind, ResolvedPolicy};
use crate::stochastic::{make_bounded_discrete, BoundedDiscreteDist, RngStream};

/// One aggregated experiment row: the config echo plus every estimate and
/// bound the CSV reports. Field meanings match the CSV columns.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Policy label (`slq`, `round-robin`, `repeated-jsq`, `jsq`).
    pub policy: String,
    /// System size.
    pub n: usize,
    /// Resolved rounds per cycle.
    pub k: u64,
    /// Resolved skip count.
    pub d: usize,
    /// Capacity slack `ε = Σμ − E[A(1)]`.
    pub epsilon: f64,
    /// Time-mean of the per-slot average queue length `(1/n)Σqᵢ`.
    pub avg_queue: f64,
    /// 95% half-width for `avg_queue` (batch means pooled over
    /// replications).
    pub avg_queue_ci: f64,
    /// Time-mean of the per-slot cross-server standard deviation.
    pub cross_stdev: f64,
    /// Standard deviation over time of the per-slot average queue.
    pub temporal_stdev: f64,
    /// Mean `‖Q⊥‖₂²` at polling instants (the collapse statistic).
    pub perp_sq: f64,
    /// Mean `‖Q⊥‖₂²` over all slots (diagnostic companion to `perp_sq`).
    pub perp_sq_all: f64,
    /// Messages per dispatched job, `2/(λ·k(n−d))`; 0 for round-robin.
    pub msg_per_job: f64,
    /// Messages per slot, both poll directions counted: `2n/(k(n−d))`.
    pub msg_per_slot_2n: f64,
    /// Messages per slot, one per sampled server: `n/(k(n−d))`.
    pub msg_per_slot_n: f64,
    /// The delay-optimality statistic `ε · avg_queue`.
    pub eps_x_avgq: f64,
    /// Universal lower bound on `eps_x_avgq` (NaN when ε ≤ 0).
    pub lower_rhs: f64,
    /// Collapse-based upper bound on `eps_x_avgq`; `None` whenever its
    /// hypotheses fail (see `warning`).
    pub upper_rhs: Option<f64>,
    /// CI-adjusted check `lower_rhs ≤ ε·(avg_queue + ci)`.
    pub above_lower: Option<bool>,
    /// CI-adjusted check `ε·(avg_queue − ci) ≤ upper_rhs`.
    pub below_upper: Option<bool>,
    /// `√(n·perp_sq)/(n·avg_queue)` — vanishes under state space collapse.
    pub collapse_ratio: f64,
    /// Mean service capacity wasted per slot (≈ ε in steady state).
    pub unused_per_slot: f64,
    /// Measured slots per replication (after normalization).
    pub measured_slots: u64,
    /// Replications pooled into this row.
    pub replications: usize,
    /// Master seed.
    pub seed: u64,
    /// Why parts of the row are missing, when they are.
    pub warning: Option<String>,
}

/// Least-squares drift of the total queue, with a replication-level
/// confidence interval; produced by [`instability_demo`].
#[derive(Debug, Clone)]
pub struct SlopeReport {
    /// Mean least-squares slope of `Σqᵢ(t)` versus `t`, jobs per slot.
    pub slope: f64,
    /// 95% half-width across replications.
    pub half_width: f64,
    /// The individual replication slopes.
    pub per_rep_slopes: Vec<f64>,
    /// Slots simulated per replication.
    pub horizon_slots: u64,
}

impl SlopeReport {
    /// True when the interval lies strictly above zero (sustained growth).
    pub fn ci_excludes_zero(&self) -> bool {
        self.slope - self.half_width > 0.0
    }

    /// True when the interval contains zero (no demonstrable drift).
    pub fn ci_contains_zero(&self) -> bool {
        !self.ci_excludes_zero() && self.slope + self.half_width >= 0.0
    }
}

/// What one simulated slot did, as reported by [`LiveSim::step`]. The
/// `pre_*` totals describe the state the slot *started* from — the state a
/// cycle-boundary poll observes.
#[derive(Debug, Clone, Copy)]
pub struct SlotRecord {
    /// `Σqᵢ` at the top of the slot.
    pub pre_l1: u64,
    /// `Σqᵢ²` at the top of the slot.
    pub pre_l2_sq: u64,
    /// Whether this slot opened a cycle (polling instant for samplers).
    pub cycle_boundary: bool,
    /// Messages charged at the top of the slot (2n on polls, else 0).
    pub messages: u64,
    /// Arrival batch size.
    pub arrivals: u64,
    /// Queue that received the batch.
    pub target: usize,
    /// Service capacity wasted during the slot.
    pub unused_total: u64,
}

/// A single stepping trajectory: dispatcher, laws, streams, and the queue
/// vector. `run_experiment` drives one per replication; the browser demo
/// drives one interactively.
#[derive(Debug, Clone)]
pub struct LiveSim {
    n: usize,
    dispatcher: Dispatcher,
    arrival_dist: BoundedDiscreteDist,
    service_dists: Vec<BoundedDiscreteDist>,
    arrival_rng: RngStream,
    tie_rng: RngStream,
    service_rngs: Vec<RngStream>,
    q: Vec<u64>,
    services_buf: Vec<u64>,
    unused_buf: Vec<u64>,
    cur_l1: u64,
    cur_l2_sq: u64,
    slot: u64,
}

impl LiveSim {
    /// Build the trajectory for one replication of `cfg`, starting from
    /// empty queues. Does not normalize or stability-check the config.
    pub fn new(cfg: &SystemConfig, replication: usize) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let resolved = cfg.policy.resolve(n)?;
        let arrival_dist = make_bounded_discrete(
            cfg.arrival.n_lambda,
            cfg.arrival.n_sigma_lambda_sq,
            cfg.arrival.batch_bound(n),
        )?;
        let service_dists: Vec<BoundedDiscreteDist> = (0..n)
            .map(|i| {
                make_bounded_discrete(
                    cfg.service.mu[i],
                    cfg.service.sigma_mu_sq[i],
                    cfg.service.s_max,
                )
            })
            .collect::<Result<_>>()?;
        let base = replication as u64 * (n as u64 + 2);
        Ok(LiveSim {
            n,
            dispatcher: Dispatcher::new(resolved, n)?,
            arrival_dist,
            service_dists,
            arrival_rng: RngStream::new(cfg.seed, base),
            tie_rng: RngStream::new(cfg.seed, base + 1),
            service_rngs: (0..n)
                .map(|i| RngStream::new(cfg.seed, base + 2 + i as u64))
                .collect(),
            q: vec![0; n],
            services_buf: vec![0; n],
            unused_buf: vec![0; n],
            cur_l1: 0,
            cur_l2_sq: 0,
            slot: 0,
        })
    }

    /// Current queue lengths.
    pub fn queues(&self) -> &[u64] {
        &self.q
    }

    /// Slots simulated so far.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// `Σqᵢ` of the current state.
    pub fn total_jobs(&self) -> u64 {
        self.cur_l1
    }

    /// Slots between polling instants.
    pub fn cycle_len(&self) -> u64 {
        self.dispatcher.cycle_len()
    }

    /// The resolved policy being driven.
    pub fn policy(&self) -> ResolvedPolicy {
        self.dispatcher.policy()
    }

    /// Simulate one slot: poll if the cycle is exhausted, draw the arrival
    /// batch and per-server services, dispatch, and apply the queue update.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let start = self.dispatcher.begin_slot(&self.q, &mut self.tie_rng)?;
        let pre_l1 = self.cur_l1;
        let pre_l2_sq = self.cur_l2_sq;
        let arrivals = self.arrival_dist.sample(&mut self.arrival_rng);
        let target = self.dispatcher.next_target()?;
        for i in 0..self.n {
            self.services_buf[i] = self.service_dists[i].sample(&mut self.service_rngs[i]);
        }
        let totals = step_in_place(
            &mut self.q,
            arrivals,
            target,
            &self.services_buf,
            &mut self.unused_buf,
        );
        self.cur_l1 = totals.l1;
        self.cur_l2_sq = totals.l2_sq;
        self.slot += 1;
        Ok(SlotRecord {
            pre_l1,
            pre_l2_sq,
            cycle_boundary: start.cycle_boundary,
            messages: start.messages,
            arrivals,
            target,
            unused_total: totals.unused_total,
        })
    }
}

/// One warmed-up, measured trajectory; `cfg` must already be normalized.
fn run_trajectory(cfg: &SystemConfig, replication: usize) -> Result<RunningStats> {
    let warmup = cfg
        .warmup_slots
        .expect("normalized config always sets warmup");
    let horizon = cfg.horizon_slots;
    let mut sim = LiveSim::new(cfg, replication)?;
    for _ in 0..warmup {
        sim.step()?;
    }
    let mut stats = RunningStats::new(cfg.n, warmup, horizon, cfg.batches)?;
    for _ in 0..horizon {
        let rec = sim.step()?;
        stats.record_state(rec.pre_l1, rec.pre_l2_sq, rec.cycle_boundary);
        stats.record_flows(rec.messages, rec.unused_total);
    }
    Ok(stats)
}

/// Run the configured experiment: stability gate, `replications`
/// trajectories of `horizon_slots` measured slots each, pooled into one
/// result row with confidence intervals and bound evaluations.
pub fn run_experiment(cfg: &SystemConfig) -> Result<ExperimentResult> {
    let cfg = cfg.normalized()?;
    let n = cfg.n;
    let resolved = cfg.policy.resolve(n)?;
    let stab_d = if resolved.samples { resolved.d } else { 0 };
    let stab = stability_report(&cfg.service.mu, stab_d, cfg.arrival.n_lambda)?;
    let mut warnings: Vec<String> = Vec::new();
    if !stab.stable {
        if !cfg.allow_unstable {
            return Err(Error::Infeasible(format!(
                "E[A(1)] = {} is outside the stability region: theorem1_bound = {} \
                 (binding subset size {}); set allow_unstable = true to simulate anyway",
                cfg.arrival.n_lambda, stab.theorem1_bound, stab.argmin_size
            )));
        }
        warnings.push(format!(
            "running outside the stability region (E[A(1)] = {} ≥ theorem1_bound = {})",
            cfg.arrival.n_lambda, stab.theorem1_bound
        ));
    }
    if cfg.replications * cfg.batches < 10 {
        return Err(Error::InsufficientData(format!(
            "replications × batches = {} < 10: not enough batch means for an interval",
            cfg.replications * cfg.batches
        )));
    }

    let horizon = cfg.horizon_slots;
    let cycle = cfg.cycle_len()?;
    let expected_msgs_per_rep = if resolved.samples {
        2 * n as u64 * (horizon / cycle)
    } else {
        0
    };

    let mut pooled_batch_means: Vec<f64> = Vec::with_capacity(cfg.replications * cfg.batches);
    let mut sum_cross = 0.0;
    let mut sum_temporal = 0.0;
    let mut sum_perp_boundary = 0.0;
    let mut sum_perp_all = 0.0;
    let mut sum_unused = 0.0;
    for rep in 0..cfg.replications {
        let stats = run_trajectory(&cfg, rep)?;
        if stats.total_messages() != expected_msgs_per_rep {
            return Err(Error::State(format!(
                "message accounting broke: measured {} messages, expected {} \
                 (2n per cycle over whole cycles)",
                stats.total_messages(),
                expected_msgs_per_rep
            )));
        }
        pooled_batch_means.extend_from_slice(&stats.batch_avg_queue);
        sum_cross += stats.cross_stdev();
        sum_temporal += stats.temporal_stdev();
        sum_perp_boundary += stats.perp_sq_boundary_mean();
        sum_perp_all += stats.perp_sq_all_mean();
        sum_unused += stats.unused_per_slot();
    }
    let reps = cfg.replications as f64;
    let (avg_queue, avg_queue_ci) = mean_and_half_width_95(&pooled_batch_means)?;
    let perp_sq = sum_perp_boundary / reps;
    let perp_sq_all = sum_perp_all / reps;

    let eps = cfg.epsilon();
    let rates = if resolved.samples {
        message_rates(cfg.arrival.lambda(n), resolved.k, n, resolved.d)?
    } else {
        crate::analysis::MessageRates {
            per_job: 0.0,
            per_slot_2n: 0.0,
            per_slot_n: 0.0,
        }
    };

    let lower = if eps > 0.0 {
        lower_bound_rhs(
            eps,
            n,
            cfg.arrival.n_sigma_lambda_sq,
            cfg.service.sigma_mu_sq_sum(),
            cfg.service.s_max as f64,
        )?
        .value
    } else {
        warnings.push(format!("slack ε = {eps} ≤ 0: no bounds apply"));
        f64::NAN
    };

    let upper_rhs = evaluate_upper_bound(&cfg, resolved, eps, &mut warnings)?;

    let above_lower = if lower.is_nan() {
        None
    } else {
        Some(lower <= eps * (avg_queue + avg_queue_ci) + 1e-12)
    };
    let below_upper = upper_rhs.map(|u| eps * (avg_queue - avg_queue_ci) <= u + 1e-12);

    Ok(ExperimentResult {
        policy: cfg.policy.label().to_string(),
        n,
        k: resolved.k,
        d: resolved.d,
        epsilon: eps,
        avg_queue,
        avg_queue_ci,
        cross_stdev: sum_cross / reps,
        temporal_stdev: sum_temporal / reps,
        perp_sq,
        perp_sq_all,
        msg_per_job: rates.per_job,
        msg_per_slot_2n: rates.per_slot_2n,
        msg_per_slot_n: rates.per_slot_n,
        eps_x_avgq: eps * avg_queue,
        lower_rhs: lower,
        upper_rhs,
        above_lower,
        below_upper,
        collapse_ratio: collapse_ratio(perp_sq, n as f64 * avg_queue, n)?,
        unused_per_slot: sum_unused / reps,
        measured_slots: horizon,
        replications: cfg.replications,
        seed: cfg.seed,
        warning: join_warnings(warnings),
    })
}

/// The collapse-based upper bound applies only when its hypotheses hold:
/// a polling policy with `d ≥ 1` that is throughput optimal for these
/// rates, with slack `0 < ε ≤ Δ`. Every failed hypothesis turns into a
/// warning instead of an error so sweep rows outside the regime still
/// carry their measurements.
fn evaluate_upper_bound(
    cfg: &SystemConfig,
    resolved: ResolvedPolicy,
    eps: f64,
    warnings: &mut Vec<String>,
) -> Result<Option<f64>> {
    if !(eps > 0.0) {
        return Ok(None); // already warned by the caller
    }
    if !resolved.samples || resolved.d < 1 {
        warnings.push("upper bound not evaluated: the policy never polls".into());
        return Ok(None);
    }
    if !is_throughput_optimal(&cfg.service.mu, resolved.d)? {
        warnings.push(format!(
            "upper bound not evaluated: d = {} is below the throughput-optimality \
             threshold for these rates",
            resolved.d
        ));
        return Ok(None);
    }
    let dr = delta(&cfg.service.mu, resolved.d)?;
    if dr.degenerate || eps > dr.delta {
        warnings.push(format!(
            "upper bound not evaluated: slack ε = {eps} exceeds the admissible \
             threshold Δ = {}",
            dr.delta
        ));
        return Ok(None);
    }
    let n = cfg.n;
    let bounds = n2_bound(
        &cfg.service.mu,
        resolved.k,
        resolved.d,
        cfg.arrival.a_max,
        cfg.service.s_max as f64,
        cfg.arrival.n_sigma_lambda_sq / n as f64,
        cfg.service.sigma_mu_max_sq(),
        eps,
    )?;
    let upper = upper_bound_rhs(
        eps,
        n,
        resolved.k,
        resolved.d,
        cfg.arrival.n_sigma_lambda_sq,
        cfg.service.sigma_mu_sq_sum(),
        cfg.arrival.a_max,
        cfg.service.s_max as f64,
        bounds.n2,
    )?;
    Ok(Some(upper))
}

fn join_warnings(warnings: Vec<String>) -> Option<String> {
    if warnings.is_empty() {
        None
    } else {
        Some(warnings.join("; "))
    }
}

/// A result row for a sweep point that could not be simulated: config
/// echo and closed-form columns only, measurements empty.
fn warning_row(cfg: &SystemConfig, resolved: ResolvedPolicy, eps: f64, warning: String) -> Result<ExperimentResult> {
    let n = cfg.n;
    let rates = if resolved.samples {
        message_rates(cfg.arrival.lambda(n), resolved.k, n, resolved.d)?
    } else {
        crate::analysis::MessageRates {
            per_job: 0.0,
            per_slot_2n: 0.0,
            per_slot_n: 0.0,
        }
    };
    let lower = if eps > 0.0 {
        lower_bound_rhs(
            eps,
            n,
            cfg.arrival.n_sigma_lambda_sq,
            cfg.service.sigma_mu_sq_sum(),
            cfg.service.s_max as f64,
        )?
        .value
    } else {
        f64::NAN
    };
    Ok(ExperimentResult {
        policy: cfg.policy.label().to_string(),
        n,
        k: resolved.k,
        d: resolved.d,
        epsilon: eps,
        avg_queue: f64::NAN,
        avg_queue_ci: f64::NAN,
        cross_stdev: f64::NAN,
        temporal_stdev: f64::NAN,
        perp_sq: f64::NAN,
        perp_sq_all: f64::NAN,
        msg_per_job: rates.per_job,
        msg_per_slot_2n: rates.per_slot_2n,
        msg_per_slot_n: rates.per_slot_n,
        eps_x_avgq: f64::NAN,
        lower_rhs: lower,
        upper_rhs: None,
        above_lower: None,
        below_upper: None,
        collapse_ratio: f64::NAN,
        unused_per_slot: f64::NAN,
        measured_slots: 0,
        replications: 0,
        seed: cfg.seed,
        warning: Some(warning),
    })
}

/// Heavy-traffic sweep: for each slack `ε` in `eps_list`, set
/// `E[A(1)] = Σμ − ε` and run the experiment. Rows come back sorted by ε
/// descending (approaching capacity down the table).
///
/// Horizons scale with the mixing time: the base config's horizon (and
/// explicit warmup, if any) belongs to the *smallest* ε; larger slacks run
/// proportionally shorter windows (`× (ε_min/ε)²`), keeping the relative
/// precision roughly constant across rows.
///
/// Points whose load falls outside the stability region (possible when the
/// policy is not throughput optimal) become warning rows without
/// simulation — unless `allow_unstable` is set. Points with `ε` above the
/// collapse threshold Δ simulate normally but skip the upper bound, with a
/// warning.
pub fn sweep_heavy_traffic(base: &SystemConfig, eps_list: &[f64]) -> Result<Vec<ExperimentResult>> {
    if eps_list.is_empty() {
        return Err(Error::Config("sweep needs at least one ε".into()));
    }
    if let Some(&bad) = eps_list.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::Config(format!(
            "sweep slacks must be positive, got {bad}"
        )));
    }
    let resolved = base.policy.resolve(base.n)?;
    if !resolved.samples || resolved.d < 1 {
        return Err(Error::Precondition(
            "a heavy-traffic sweep needs a polling policy with d ≥ 1".into(),
        ));
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).expect("positivity checked above"));
    eps_sorted.dedup();
    let eps_min = *eps_sorted.last().expect("non-empty checked above");

    let mu_sum = base.service.mu_sum();
    let mut rows = Vec::with_capacity(eps_sorted.len());
    for &eps in &eps_sorted {
        let shrink = (eps_min / eps) * (eps_min / eps);
        let mut cfg = base.clone();
        cfg.arrival.n_lambda = mu_sum - eps;
        cfg.horizon_slots = ((base.horizon_slots as f64 * shrink).ceil() as u64).max(1);
        cfg.warmup_slots = base
            .warmup_slots
            .map(|w| (w as f64 * shrink).ceil() as u64);
        cfg.out = None;
        // pre-check stability here so that a point outside the region
        // becomes a warning row while genuine config errors (infeasible
        // laws, bad dimensions) still propagate out of run_experiment
        let stab = stability_report(&cfg.service.mu, resolved.d, cfg.arrival.n_lambda)?;
        if !stab.stable && !cfg.allow_unstable {
            rows.push(warning_row(
                &cfg,
                resolved,
                eps,
                format!(
                    "skipped: E[A(1)] = {} is outside the stability region \
                     (theorem1_bound = {})",
                    cfg.arrival.n_lambda, stab.theorem1_bound
                ),
            )?);
            continue;
        }
        rows.push(run_experiment(&cfg)?);
    }
    Ok(rows)
}

/// Drift demonstration: simulate `replications` trajectories (no warmup,
/// empty start) and fit a least-squares line to `Σqᵢ(t)` sampled at ~1000
/// evenly spaced instants. A stable system gives a slope interval around
/// zero; a load outside the stability region gives a strictly positive
/// one. No stability gate — measuring drift at unstable loads is the
/// point — so the config's `allow_unstable` is not consulted.
pub fn instability_demo(cfg: &SystemConfig) -> Result<SlopeReport> {
    cfg.validate()?;
    if cfg.replications < 2 {
        return Err(Error::InsufficientData(format!(
            "need ≥ 2 replications for a slope interval, got {}",
            cfg.replications
        )));
    }
    let horizon = cfg.horizon_slots;
    let stride = (horizon / 1000).max(1);
    let mut slopes = Vec::with_capacity(cfg.replications);
    for rep in 0..cfg.replications {
        let mut sim = LiveSim::new(cfg, rep)?;
        let mut ts: Vec<f64> = Vec::with_capacity(1002);
        let mut ys: Vec<f64> = Vec::with_capacity(1002);
        ts.push(0.0);
        ys.push(sim.total_jobs() as f64);
        for t in 1..=horizon {
            sim.step()?;
            if t % stride == 0 || t == horizon {
                ts.push(t as f64);
                ys.push(sim.total_jobs() as f64);
            }
        }
        slopes.push(least_squares_slope(&ts, &ys));
    }
    let (slope, half_width) = mean_and_half_width_95(&slopes)?;
    Ok(SlopeReport {
        slope,
        half_width,
        per_rep_slopes: slopes,
        horizon_slots: horizon,
    })
}

fn least_squares_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let m = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    num / den
}

/// The seven-row comparison preset: round-robin at n = 10, then the
/// skip-one poller and the repeated-shortest-queue policy at
/// n ∈ {10, 20, 50}. Homogeneous rates μ = 2 with service law {1, 3}
/// (variance 1, bound 3), aggregate arrivals at slack ε = 0.01·(n/10)
/// scale — means 19.99, 39.98, 99.95 — with Var(A(1)) = 25 and batch
/// bound 3n. All rows share one seed, so comparisons use common random
/// numbers.
///
/// `scale` multiplies the default horizon of 2×10⁸ measured slots; use a
/// small value for smoke runs.
pub fn table1_preset(scale: f64) -> Result<Vec<SystemConfig>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Config(format!(
            "horizon scale must be positive and finite, got {scale}"
        )));
    }
    let rows: [(usize, PolicyKind, f64); 7] = [
        (10, PolicyKind::RoundRobin, 19.99),
        (10, PolicyKind::Slq { k: 1, d: 1 }, 19.99),
        (10, PolicyKind::RepeatedJsq { k: 1 }, 19.99),
        (20, PolicyKind::Slq { k: 1, d: 1 }, 39.98),
        (20, PolicyKind::RepeatedJsq { k: 1 }, 39.98),
        (50, PolicyKind::Slq { k: 1, d: 1 }, 99.95),
        (50, PolicyKind::RepeatedJsq { k: 1 }, 99.95),
    ];
    let horizon = ((2e8 * scale).ceil() as u64).max(1);
    Ok(rows
        .into_iter()
        .map(|(n, policy, n_lambda)| {
            let mut cfg = SystemConfig::new(
                n,
                policy,
                crate::model::ArrivalSpec {
                    n_lambda,
                    n_sigma_lambda_sq: 25.0,
                    a_max: 3.0,
                },
                crate::model::ServiceSpec {
                    mu: vec![2.0; n],
                    sigma_mu_sq: vec![1.0; n],
                    s_max: 3,
                },
            );
            cfg.horizon_slots = horizon;
            cfg.seed = 7;
            cfg
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArrivalSpec, ServiceSpec};

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::new(
            4,
            PolicyKind::Slq { k: 1, d: 1 },
            ArrivalSpec {
                n_lambda: 7.6, // ε = 0.4
                n_sigma_lambda_sq: 8.0,
                a_max: 3.0,
            },
            ServiceSpec {
                mu: vec![2.0; 4],
                sigma_mu_sq: vec![1.0; 4],
                s_max: 3,
            },
        );
        cfg.horizon_slots = 60_000;
        cfg.warmup_slots = Some(3_000);
        cfg.seed = 42;
        cfg
    }

    #[test]
    fn deterministic_drain_stays_small() {
        // zero-variance arrivals and services below capacity: queues can
        // never build past one cycle's worth of arrivals
        let mut cfg = SystemConfig::new(
            4,
            PolicyKind::Slq { k: 1, d: 1 },
            ArrivalSpec {
                n_lambda: 3.0,
                n_sigma_lambda_sq: 0.0,
                a_max: 1.0,
            },
            ServiceSpec {
                mu: vec![1.0; 4],
                sigma_mu_sq: vec![0.0; 4],
                s_max: 2,
            },
        );
        cfg.horizon_slots = 10_000;
        cfg.warmup_slots = Some(0);
        let row = run_experiment(&cfg).unwrap();
        assert!(row.avg_queue < 9.0, "avg queue {}", row.avg_queue);
        assert!(row.avg_queue > 0.0);
    }

    #[test]
    fn result_row_is_consistent() {
        let row = run_experiment(&small_cfg()).unwrap();
        assert_eq!(row.policy, "slq");
        assert_eq!((row.n, row.k, row.d), (4, 1, 1));
        assert!((row.epsilon - 0.4).abs() < 1e-9);
        assert_eq!(row.eps_x_avgq, row.epsilon * row.avg_queue);
        // analytic message rates for k=1, d=1, n=4
        assert!((row.msg_per_slot_2n - 8.0 / 3.0).abs() < 1e-12);
        assert!((row.msg_per_slot_n - 4.0 / 3.0).abs() < 1e-12);
        let lambda = 7.6 / 4.0;
        assert!((row.msg_per_job - 2.0 / (lambda * 3.0)).abs() < 1e-12);
        // ε = 0.4 exceeds Δ = 1/3: measured row, no upper bound
        assert!(row.upper_rhs.is_none());
        assert!(row.warning.as_deref().unwrap().contains("Δ"));
        assert_eq!(row.above_lower, Some(true));
        // wasted service per slot ≈ ε in steady state
        assert!((row.unused_per_slot - 0.4).abs() < 0.08, "{}", row.unused_per_slot);
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let a = run_experiment(&small_cfg()).unwrap();
        let b = run_experiment(&small_cfg()).unwrap();
        assert_eq!(a.avg_queue.to_bits(), b.avg_queue.to_bits());
        assert_eq!(a.perp_sq.to_bits(), b.perp_sq.to_bits());
        assert_eq!(a.cross_stdev.to_bits(), b.cross_stdev.to_bits());
    }

    #[test]
    fn unstable_load_is_refused_by_name() {
        let mut cfg = SystemConfig::new(
            4,
            PolicyKind::Slq { k: 1, d: 1 },
            ArrivalSpec {
                n_lambda: 5.0,
                n_sigma_lambda_sq: 0.5,
                a_max: 2.0,
            },
            ServiceSpec {
                mu: vec![3.0, 1.0, 1.0, 1.0],
                sigma_mu_sq: vec![0.0; 4],
                s_max: 4,
            },
        );
        cfg.horizon_slots = 1_000;
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.is_config_refusal());
        let msg = err.to_string();
        assert!(msg.contains("theorem1_bound = 4.5"), "{msg}");
    }

    #[test]
    fn slope_positive_outside_region_zero_inside() {
        let mut cfg = SystemConfig::new(
            4,
            PolicyKind::Slq { k: 1, d: 1 },
            ArrivalSpec {
                n_lambda: 5.0,
                n_sigma_lambda_sq: 0.5,
                a_max: 2.0,
            },
            ServiceSpec {
                mu: vec![3.0, 1.0, 1.0, 1.0],
                sigma_mu_sq: vec![0.0; 4],
                s_max: 4,
            },
        );
        cfg.horizon_slots = 100_000;
        cfg.replications = 6;
        cfg.seed = 5;
        let unstable = instability_demo(&cfg).unwrap();
        assert!(
            unstable.ci_excludes_zero(),
            "slope {} ± {}",
            unstable.slope,
            unstable.half_width
        );
        // d = 2 makes the same load stable
        cfg.policy = PolicyKind::Slq { k: 1, d: 2 };
        let stable = instability_demo(&cfg).unwrap();
        assert!(
            stable.ci_contains_zero(),
            "slope {} ± {}",
            stable.slope,
            stable.half_width
        );
    }

    #[test]
    fn sweep_orders_rows_and_flags_large_slack() {
        let mut base = small_cfg();
        base.horizon_slots = 30_000;
        base.warmup_slots = None;
        let rows = sweep_heavy_traffic(&base, &[0.2, 0.4]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].epsilon > rows[1].epsilon);
        // ε = 0.4 > Δ = 1/3: simulated but without the upper bound
        assert!(rows[0].upper_rhs.is_none());
        assert!(rows[0].avg_queue.is_finite());
        assert!(rows[0].warning.is_some());
        // ε = 0.2 ≤ Δ: upper bound evaluated
        assert!(rows[1].upper_rhs.is_some());
        // larger ε gets the shorter horizon
        assert!(rows[0].measured_slots < rows[1].measured_slots);
    }

    #[test]
    fn sweep_skips_unstable_points_for_partial_skip_policies() {
        let mut base = SystemConfig::new(
            4,
            PolicyKind::Slq { k: 1, d: 1 },
            ArrivalSpec {
                n_lambda: 4.0, // placeholder; the sweep overwrites it
                n_sigma_lambda_sq: 0.5,
                a_max: 2.0,
            },
            ServiceSpec {
                mu: vec![3.0, 1.0, 1.0, 1.0],
                sigma_mu_sq: vec![0.0; 4],
                s_max: 4,
            },
        );
        base.horizon_slots = 5_000;
        base.warmup_slots = Some(500);
        // Σμ = 6, bound at d=1 is 4.5: ε = 1.0 → nλ = 5.0 unstable;
        // ε = 1.6 → nλ = 4.4 stable
        let rows = sweep_heavy_traffic(&base, &[1.0, 1.6]).unwrap();
        assert_eq!(rows.len(), 2);
        let unstable_row = &rows[1];
        assert!((unstable_row.epsilon - 1.0).abs() < 1e-12);
        assert!(unstable_row.avg_queue.is_nan());
        assert!(unstable_row
            .warning
            .as_deref()
            .unwrap()
            .contains("theorem1_bound"));
        assert!(rows[0].avg_queue.is_finite());
    }

    #[test]
    fn preset_has_seven_rows_with_documented_shape() {
        let rows = table1_preset(1e-4).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].policy, PolicyKind::RoundRobin);
        let n20_rjsq = &rows[4];
        assert_eq!(n20_rjsq.policy, PolicyKind::RepeatedJsq { k: 1 });
        let resolved = n20_rjsq.policy.resolve(20).unwrap();
        assert_eq!((resolved.k, resolved.d), (19, 19));
        for cfg in &rows {
            assert_eq!(cfg.seed, rows[0].seed);
            assert!((cfg.epsilon() - 0.01 * (cfg.n as f64 / 10.0)).abs() < 1e-9);
            assert_eq!(cfg.service.s_max, 3);
        }
    }

    #[test]
    fn crn_shares_draws_across_policies() {
        // same seed, two policies: identical arrival streams mean the
        // first-slot batch is identical
        let cfg_a = small_cfg();
        let mut cfg_b = small_cfg();
        cfg_b.policy = PolicyKind::RoundRobin;
        let mut sim_a = LiveSim::new(&cfg_a, 0).unwrap();
        let mut sim_b = LiveSim::new(&cfg_b, 0).unwrap();
        for _ in 0..50 {
            let ra = sim_a.step().unwrap();
            let rb = sim_b.step().unwrap();
            assert_eq!(ra.arrivals, rb.arrivals);
        }
    }
}
