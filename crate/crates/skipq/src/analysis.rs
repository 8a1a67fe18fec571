//! Closed-form analysis: stability region, skip thresholds, slack, and the
//! heavy-traffic bounds on the stationary queue length.
//!
//! Everything here is a pure function of the system parameters — no
//! simulation. The simulation harness uses these values both as guards
//! (refusing unstable configurations) and as the reference curves that the
//! empirical estimates are compared against.
//!
//! Notation used throughout: `n` servers with mean service rates
//! `mu[0..n]`, aggregate arrival rate `nλ = E[A(1)]`, slack
//! `ε = Σμ − nλ`, policy parameters `k` (rounds per cycle) and `d`
//! (queues skipped per cycle).

use crate::error::{Error, Result};

/// Closed-form stability facts for one `(mu, d, nλ)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Total service capacity `Σμ` (the outer boundary of any policy's
    /// stability region).
    pub capacity_sum: f64,
    /// The policy's stability boundary: arrivals are stable iff
    /// `nλ < theorem1_bound`.
    pub theorem1_bound: f64,
    /// Subset size `m` achieving the bound (smallest on ties).
    pub argmin_size: usize,
    /// Whether the configured `nλ` is inside the stability region.
    pub stable: bool,
    /// Whether the bound equals the full capacity `Σμ`.
    pub throughput_optimal: bool,
    /// Smallest `d` that makes the policy throughput optimal for these
    /// rates.
    pub min_skips: usize,
    /// Slack `ε = Σμ − nλ`.
    pub epsilon: f64,
}

/// Constants of the state-space-collapse bound, computed by [`n2_bound`].
///
/// `upper_rhs`/`lower_rhs` are `None` when produced by [`n2_bound`] alone
/// (they need the variance totals, which the chain itself does not); the
/// harness fills them when it has the full system description.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Drift margin `Δ = min{μ_min, Σμ/(n−d) − μ_max}/2`.
    pub delta: f64,
    /// Almost-sure per-cycle change bound `Z = 2k(n−d)n(A_max + S_max)`.
    pub z: f64,
    /// Quadratic-drift constant (sum of the per-group contributions).
    pub c1_prime: f64,
    /// Boundary-correction constant `C₂ = 2k²(n−d)²nS_max²`.
    pub c2: f64,
    /// Exponential-moment step size `η` (three-way minimum).
    pub eta: f64,
    /// Geometric decay factor `ρ = 1 − ε₀η + Z²(e−2)η²`, in `(0, 1)`.
    pub rho: f64,
    /// Drift-region radius `a = C√n/(k(n−d)Δ)` with `C = C₁′ + C₂`.
    pub a: f64,
    /// The ε-independent bound on `E[‖Q⊥‖₂²]` at polling instants.
    pub n2: f64,
    /// Four-term upper bound on `ε·E[(1/n)ΣQ]` (filled by the harness).
    pub upper_rhs: Option<f64>,
    /// Universal lower bound on `ε·E[(1/n)ΣQ]` (filled by the harness).
    pub lower_rhs: Option<f64>,
    /// Largest admissible slack for the collapse bound (equals `delta`).
    pub ssc_eps_threshold: f64,
}

/// Result of [`delta`]: the drift margin and whether it is degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaReport {
    /// `Δ = min{μ_min, Σμ/(n−d) − μ_max}/2 ≥ 0`.
    pub delta: f64,
    /// True when `Δ = 0` (throughput optimality holds with equality):
    /// the collapse and delay bounds are void, every admissible `ε > Δ`.
    pub degenerate: bool,
}

/// Result of [`min_skips`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipReport {
    /// Smallest `d ∈ [1, n−1]` with `Σμ ≥ (n−d)·μ_max`.
    pub min_skips: usize,
    /// Large-system skip fraction `1 − μ̄/μ_max` (the limit of
    /// `min_skips/n` as the system grows with this rate profile).
    pub many_server_fraction: f64,
}

/// Result of [`lower_bound_rhs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// The reported bound, clamped at 0.
    pub value: f64,
    /// The unclamped expression `(Var(A) + Σσ²_μ + ε² − S_max·ε)/(2n)`.
    pub raw: f64,
    /// True when the expression was negative (the bound is vacuous).
    pub clamped: bool,
}

/// Message-overhead of the polling policies in the three conventions in
/// circulation; see [`message_rates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageRates {
    /// Messages per job: `2/(λk(n−d))`.
    pub per_job: f64,
    /// Messages per slot counting both query and reply: `2n/(k(n−d))`.
    pub per_slot_2n: f64,
    /// Messages per slot counting one message per sampled server:
    /// `n/(k(n−d))`.
    pub per_slot_n: f64,
}

fn validate_rates(mu: &[f64]) -> Result<()> {
    if mu.len() < 2 {
        return Err(Error::Config(format!(
            "need at least two servers, got {}",
            mu.len()
        )));
    }
    if let Some((i, &m)) = mu.iter().enumerate().find(|&(_, &m)| !(m > 0.0)) {
        return Err(Error::Config(format!(
            "service rate mu[{i}] = {m} must be positive"
        )));
    }
    Ok(())
}

fn validate_d(n: usize, d: usize) -> Result<()> {
    if d < 1 || d >= n {
        return Err(Error::Config(format!(
            "d = {d} outside [1, n-1] = [1, {}]",
            n - 1
        )));
    }
    Ok(())
}

/// The stability boundary of the skip-`d` policy: the largest `nλ` below
/// which the chain is positive recurrent, together with the subset size
/// achieving it.
///
/// The boundary is `min` over subsets `I` with `|I| ≥ d+1` of
/// `(n−d)/(|I|−d) · Σ_{l∈I} μ_l`. For a fixed size `m = |I|` the sum is
/// minimized by the `m` smallest rates, so the subset minimum reduces to a
/// scan over `m ∈ {d+1, …, n}` of ascending-sorted prefix sums —
/// `O(n log n)` instead of `2ⁿ`. Note the result does not depend on `k`.
pub fn capacity_bound(mu: &[f64], d: usize) -> Result<(f64, usize)> {
    validate_rates(mu)?;
    let n = mu.len();
    validate_d(n, d)?;
    let mut sorted = mu.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = f64::INFINITY;
    let mut best_m = d + 1;
    let mut prefix = 0.0;
    for (idx, &rate) in sorted.iter().enumerate() {
        let m = idx + 1;
        prefix += rate;
        if m > d {
            let value = (n - d) as f64 / (m - d) as f64 * prefix;
            if value < best {
                best = value;
                best_m = m;
            }
        }
    }
    Ok((best, best_m))
}

/// Exhaustive-oracle form of [`capacity_bound`]: enumerates every subset of
/// size ≥ d+1. Guarded to `n ≤ 20`.
pub fn capacity_bound_bruteforce(mu: &[f64], d: usize) -> Result<f64> {
    validate_rates(mu)?;
    let n = mu.len();
    validate_d(n, d)?;
    if n > 20 {
        return Err(Error::Config(format!(
            "brute-force enumeration guarded to n ≤ 20, got n = {n}"
        )));
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let m = mask.count_ones() as usize;
        if m < d + 1 {
            continue;
        }
        let mut sum = 0.0;
        for (i, &rate) in mu.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum += rate;
            }
        }
        let value = (n - d) as f64 / (m - d) as f64 * sum;
        if value < best {
            best = value;
        }
    }
    Ok(best)
}

/// Whether skipping `d` queues preserves the full stability region:
/// `Σμ ≥ (n−d)·μ_max`.
pub fn is_throughput_optimal(mu: &[f64], d: usize) -> Result<bool> {
    validate_rates(mu)?;
    validate_d(mu.len(), d)?;
    let sum: f64 = mu.iter().sum();
    let max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(sum >= (mu.len() - d) as f64 * max)
}

/// Smallest `d` making the policy throughput optimal, plus the
/// many-server skip fraction `1 − μ̄/μ_max`.
///
/// The threshold is `d ≥ n − Σμ/μ_max`; a `1e−9` slack absorbs float
/// roundoff in the ratio so exact-integer boundaries (for example rates
/// `[3,1,1,1]`, where the threshold is exactly 2) are classified correctly.
pub fn min_skips(mu: &[f64]) -> Result<SkipReport> {
    validate_rates(mu)?;
    let n = mu.len();
    let sum: f64 = mu.iter().sum();
    let max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = n as f64 - sum / max;
    let d = (threshold - 1e-9).ceil() as i64;
    let d = d.clamp(1, n as i64 - 1) as usize;
    Ok(SkipReport {
        min_skips: d,
        many_server_fraction: 1.0 - (sum / n as f64) / max,
    })
}

/// The drift margin `Δ = min{μ_min, Σμ/(n−d) − μ_max}/2`.
///
/// Requires throughput optimality (`d ≥ n − Σμ/μ_max`) so the second
/// argument is non-negative; strict inequality gives `Δ > 0`, equality
/// gives the degenerate `Δ = 0` for which the heavy-traffic bounds are
/// void (flagged, not an error).
pub fn delta(mu: &[f64], d: usize) -> Result<DeltaReport> {
    validate_rates(mu)?;
    let n = mu.len();
    validate_d(n, d)?;
    let sum: f64 = mu.iter().sum();
    let max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let spare = sum / (n - d) as f64 - max;
    if spare < -1e-12 * sum.max(1.0) {
        let need = min_skips(mu)?.min_skips;
        return Err(Error::Precondition(format!(
            "d = {d} is below the skip threshold n − sum(mu)/mu_max = {:.6}: \
             need d ≥ {need} for a positive drift margin",
            n as f64 - sum / max
        )));
    }
    let value = min.min(spare.max(0.0)) / 2.0;
    Ok(DeltaReport {
        delta: value,
        degenerate: value == 0.0,
    })
}

/// The full constant chain behind the state-space-collapse bound: from
/// `(n, k, d, μ, A_max, S_max, σ_λ², σ²_μmax, ε)` to the ε-independent
/// second-moment bound `N₂` on the queue-imbalance component at polling
/// instants.
///
/// `sigma_lambda_sq` is the *per-server* arrival variance `Var(A(1))/n`;
/// `sigma_mu_max_sq` is the largest per-server service variance.
///
/// The chain, in order:
///
/// ```text
/// Δ  = min{μ_min, Σμ/(n−d) − μ_max}/2          (drift margin)
/// Z  = 2k(n−d)n(A_max + S_max)                  (per-cycle change bound)
/// C₁′ = 2k²(n−1)(n−d)²μ_max S_max
///     + d·[k²(n−d)²μ_max² + k(n−d)σ²_μmax]
///     + (n−d)·[k²(Σμ − ε + (n−d)μ_max)² + knσ_λ² + k(n−d)σ²_μmax]
///     + (n−d)·[k²(Σμ − ε)² + knσ_λ²]
/// C₂ = 2k²(n−d)²nS_max²,   C = C₁′ + C₂
/// a  = C√n/(k(n−d)Δ)
/// ε₀ = k(n−d)Δ/(2√n)
/// η  = min{1/Z, k(n−d)Δ/(4√n Z²(e−2)), k(n−d)Δ/(C√n)}
/// ρ  = 1 − ε₀η + Z²(e−2)η²                      (in (0,1))
/// N₂ = 4√n e² / (k(n−d)Δη³ − 2√n Z²(e−2)η⁴)
/// ```
///
/// The denominator of `N₂` is provably at least `½·k(n−d)Δη³` because
/// `η` never exceeds its second branch; a non-positive denominator would
/// indicate an implementation bug and is reported as an error rather than
/// silently returned.
#[allow(clippy::too_many_arguments)]
pub fn n2_bound(
    mu: &[f64],
    k: u64,
    d: usize,
    a_max: f64,
    s_max: f64,
    sigma_lambda_sq: f64,
    sigma_mu_max_sq: f64,
    epsilon: f64,
) -> Result<BoundsReport> {
    validate_rates(mu)?;
    let n = mu.len();
    validate_d(n, d)?;
    if k < 1 {
        return Err(Error::Config("k must be ≥ 1".into()));
    }
    if !(a_max > 0.0) || !(s_max > 0.0) {
        return Err(Error::Config(
            "a_max and s_max must be positive".to_string(),
        ));
    }
    if !(sigma_lambda_sq >= 0.0) || !(sigma_mu_max_sq >= 0.0) {
        return Err(Error::Config("variances must be non-negative".into()));
    }
    let dr = delta(mu, d)?;
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "slack epsilon = {epsilon} must be positive"
        )));
    }
    if epsilon > dr.delta {
        return Err(Error::Precondition(format!(
            "slack epsilon = {epsilon} exceeds the admissible threshold delta = {}",
            dr.delta
        )));
    }

    let nf = n as f64;
    let nd = (n - d) as f64;
    let kf = k as f64;
    let e = std::f64::consts::E;
    let sum_mu: f64 = mu.iter().sum();
    let mu_max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sqrt_n = nf.sqrt();

    let z = 2.0 * kf * nd * nf * (a_max + s_max);
    let per_skipped = kf * kf * nd * nd * mu_max * mu_max + kf * nd * sigma_mu_max_sq;
    let c1_prime = 2.0 * kf * kf * (nf - 1.0) * nd * nd * mu_max * s_max
        + d as f64 * per_skipped
        + nd * (kf * kf * (sum_mu - epsilon + nd * mu_max).powi(2)
            + kf * nf * sigma_lambda_sq
            + kf * nd * sigma_mu_max_sq)
        + nd * (kf * kf * (sum_mu - epsilon).powi(2) + kf * nf * sigma_lambda_sq);
    let c2 = 2.0 * kf * kf * nd * nd * nf * s_max * s_max;
    let c = c1_prime + c2;

    let knd_delta = kf * nd * dr.delta;
    let a = c * sqrt_n / knd_delta;
    let eps0 = knd_delta / (2.0 * sqrt_n);
    let eta = (1.0 / z)
        .min(knd_delta / (4.0 * sqrt_n * z * z * (e - 2.0)))
        .min(knd_delta / (c * sqrt_n));
    let rho = 1.0 - eps0 * eta + z * z * (e - 2.0) * eta * eta;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!(
            "internal: geometric factor rho = {rho} left (0, 1); the constant chain is broken"
        )));
    }
    let denominator = knd_delta * eta.powi(3) - 2.0 * sqrt_n * z * z * (e - 2.0) * eta.powi(4);
    if !(denominator > 0.0) {
        return Err(Error::Precondition(format!(
            "internal: N₂ denominator = {denominator} is not positive; the constant chain is broken"
        )));
    }
    let n2 = 4.0 * sqrt_n * e * e / denominator;

    Ok(BoundsReport {
        delta: dr.delta,
        z,
        c1_prime,
        c2,
        eta,
        rho,
        a,
        n2,
        upper_rhs: None,
        lower_rhs: None,
        ssc_eps_threshold: dr.delta,
    })
}

/// The four-term upper bound on `ε·E[(1/n)ΣQ]`:
///
/// ```text
/// (Var(A) + Σσ²_μ)/(2n) + ε²k(n−d)/(2n)
///   + εk(n−d)(2nA_max + S_max)/2 + √(ε·N₂·n·S_max)
/// ```
///
/// `sigma_lambda_sq_total` is the aggregate `Var(A(1))`;
/// `sigma_mu_sq_sum` is the sum of the per-server service variances.
/// `n2` must come from [`n2_bound`] evaluated at this same `ε`, which is
/// what enforces the bound's hypotheses (`ε ≤ Δ` and throughput
/// optimality); this function checks only basic ranges.
#[allow(clippy::too_many_arguments)]
pub fn upper_bound_rhs(
    epsilon: f64,
    n: usize,
    k: u64,
    d: usize,
    sigma_lambda_sq_total: f64,
    sigma_mu_sq_sum: f64,
    a_max: f64,
    s_max: f64,
    n2: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "slack epsilon = {epsilon} must be positive"
        )));
    }
    if n < 2 || d < 1 || d >= n || k < 1 {
        return Err(Error::Config(format!(
            "invalid parameters n = {n}, k = {k}, d = {d}"
        )));
    }
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::Precondition(format!(
            "collapse constant n2 = {n2} must be positive and finite"
        )));
    }
    let nf = n as f64;
    let knd = k as f64 * (n - d) as f64;
    Ok((sigma_lambda_sq_total + sigma_mu_sq_sum) / (2.0 * nf)
        + epsilon * epsilon * knd / (2.0 * nf)
        + epsilon * knd * (2.0 * nf * a_max + s_max) / 2.0
        + (epsilon * n2 * nf * s_max).sqrt())
}

/// The universal lower bound on `ε·E[(1/n)ΣQ]`, valid for *any*
/// dispatching policy:
///
/// ```text
/// (Var(A) + Σσ²_μ + ε² − S_max·ε)/(2n)
/// ```
///
/// For large `ε` the expression can go negative, in which case it is
/// vacuous and reported clamped at 0 with the `clamped` flag set.
pub fn lower_bound_rhs(
    epsilon: f64,
    n: usize,
    sigma_lambda_sq_total: f64,
    sigma_mu_sq_sum: f64,
    s_max: f64,
) -> Result<LowerBound> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "slack epsilon = {epsilon} must be positive"
        )));
    }
    if n < 1 {
        return Err(Error::Config("n must be ≥ 1".into()));
    }
    let raw = (sigma_lambda_sq_total + sigma_mu_sq_sum + epsilon * epsilon - s_max * epsilon)
        / (2.0 * n as f64);
    Ok(LowerBound {
        value: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
    })
}

/// Communication overhead of the polling policies under the three
/// conventions in circulation: per dispatched job, per slot counting both
/// directions of the poll (`2n` messages per cycle), and per slot counting
/// one message per sampled server (`n` per cycle). The rotation baseline
/// polls nothing and has rate 0 in every convention (handled by the
/// harness, not here).
pub fn message_rates(lambda_per_server: f64, k: u64, n: usize, d: usize) -> Result<MessageRates> {
    if !(lambda_per_server > 0.0) {
        return Err(Error::Config(format!(
            "lambda = {lambda_per_server} must be positive"
        )));
    }
    if k < 1 || n < 1 || d >= n {
        return Err(Error::Config(format!(
            "invalid parameters n = {n}, k = {k}, d = {d}"
        )));
    }
    let knd = k as f64 * (n - d) as f64;
    Ok(MessageRates {
        per_job: 2.0 / (lambda_per_server * knd),
        per_slot_2n: 2.0 * n as f64 / knd,
        per_slot_n: n as f64 / knd,
    })
}

/// Scalar diagnostic `ε·k²·n¹¹` for the many-server delay-optimality
/// condition: along a scaling sequence the policy family is delay optimal
/// when this quantity vanishes.
pub fn many_server_diagnostic(epsilon: f64, k: u64, n: usize) -> Result<f64> {
    if !(epsilon > 0.0) || k < 1 || n < 1 {
        return Err(Error::Config(format!(
            "inputs must be positive: epsilon = {epsilon}, k = {k}, n = {n}"
        )));
    }
    Ok(epsilon * (k as f64) * (k as f64) * (n as f64).powi(11))
}

/// Evaluate [`many_server_diagnostic`] along a `(n, ε, k)` sequence and
/// report whether it is non-increasing (within `1e−12` relative).
pub fn many_server_sweep(seq: &[(usize, f64, u64)]) -> Result<(Vec<f64>, bool)> {
    let values: Vec<f64> = seq
        .iter()
        .map(|&(n, eps, k)| many_server_diagnostic(eps, k, n))
        .collect::<Result<_>>()?;
    let decreasing = values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok((values, decreasing))
}

/// Assemble the full stability picture for one configuration.
///
/// `d = 0` means the rotation baseline: its boundary is `n·μ_min` (every
/// queue receives every n-th batch, so the slowest server is the
/// bottleneck), which coincides with the subset formula extended to
/// `d = 0` (the minimum sits at the singleton containing `μ_min`).
pub fn stability_report(mu: &[f64], d: usize, n_lambda: f64) -> Result<StabilityReport> {
    validate_rates(mu)?;
    let n = mu.len();
    let capacity_sum: f64 = mu.iter().sum();
    let (bound, argmin) = if d == 0 {
        let min = mu.iter().cloned().fold(f64::INFINITY, f64::min);
        (n as f64 * min, 1)
    } else {
        capacity_bound(mu, d)?
    };
    let throughput_optimal = if d == 0 {
        (capacity_sum - bound).abs() <= 1e-12 * capacity_sum.max(1.0)
    } else {
        is_throughput_optimal(mu, d)?
    };
    Ok(StabilityReport {
        capacity_sum,
        theorem1_bound: bound,
        argmin_size: argmin,
        stable: n_lambda < bound,
        throughput_optimal,
        min_skips: min_skips(mu)?.min_skips,
        epsilon: capacity_sum - n_lambda,
    })
}
