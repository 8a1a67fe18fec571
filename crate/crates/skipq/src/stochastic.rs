//! Seeded random streams and bounded integer distributions with prescribed
//! moments.
//!
//! The model only constrains the arrival and service laws through their
//! mean, variance, and an almost-sure upper bound. This module realizes any
//! feasible such triple as a small atomic distribution on `{0, …, bound}`
//! via *two-anchor randomized rounding*:
//!
//! 1. place mass ½ on each of the real anchors `mean ± √variance` — the
//!    unique symmetric two-point law matching both moments exactly;
//! 2. round each anchor onto its two adjacent integers, splitting its mass
//!    so the expectation is preserved exactly (an anchor `x` with fractional
//!    part `f` sends `1-f` of its mass to `⌊x⌋` and `f` to `⌈x⌉`).
//!
//! The mean is preserved exactly; each rounding adds `f(1-f) ≤ ¼` to the
//! variance, and since the two anchors share the total mass the overall
//! inflation is at most `+0.25`. When both anchors are already integers the
//! law is exact (e.g. mean 2, variance 1, bound 3 gives the two-point law
//! `{1: ½, 3: ½}`).
//!
//! Sampling uses a counter-based generator (`ChaCha8`) keyed by a
//! `(seed, stream id)` pair: the same pair yields the identical sequence on
//! every platform, and distinct stream ids yield statistically independent
//! streams under one seed. The simulation harness gives every
//! `(replication, purpose)` its own stream — one for arrivals, one for
//! tie-breaking, one per server — so two policies run under the same seed
//! see identical arrival and service draws (common random numbers).

use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A seeded, platform-stable random stream. Owned by exactly one trajectory;
/// never shared.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RngStream {
    /// Create the stream identified by `(seed, stream)`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng, seed, stream }
    }

    /// The seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream id this stream was created with.
    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Next raw 64-bit draw.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Next uniform draw in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `0..upper` (rejection-free modulo reduction is
    /// avoided; uses Lemire-style widening multiply, bias < 2⁻⁶⁴).
    #[inline]
    pub fn next_below(&mut self, upper: u64) -> u64 {
        debug_assert!(upper > 0);
        ((self.next_u64() as u128 * upper as u128) >> 64) as u64
    }
}

/// An integer-valued distribution on `{0, …, bound}` with an exactly-met
/// mean target and a variance within `+0.25` of its target.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDiscreteDist {
    /// `(value, probability)` pairs, ascending by value, probabilities
    /// summing to 1.
    atoms: Vec<(u64, f64)>,
    /// Cumulative probabilities scaled to the full `u64` range; sampling is
    /// one raw draw plus a short forward scan.
    thresholds: Vec<u64>,
    mean_target: f64,
    var_target: f64,
    bound: u64,
    realized_mean: f64,
    realized_var: f64,
}

impl BoundedDiscreteDist {
    /// The atoms as `(value, probability)`, ascending by value.
    pub fn atoms(&self) -> &[(u64, f64)] {
        &self.atoms
    }

    /// The mean the construction was asked for (met exactly).
    pub fn mean_target(&self) -> f64 {
        self.mean_target
    }

    /// The variance the construction was asked for.
    pub fn var_target(&self) -> f64 {
        self.var_target
    }

    /// The almost-sure upper bound on samples.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Mean of the constructed law (equals the target up to float roundoff).
    pub fn realized_mean(&self) -> f64 {
        self.realized_mean
    }

    /// Variance of the constructed law, in `[var_target, var_target + 0.25]`.
    pub fn realized_var(&self) -> f64 {
        self.realized_var
    }

    /// Draw one sample.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let r = rng.next_u64();
        // at most four atoms in practice, so a forward scan beats binary search
        for (i, &t) in self.thresholds.iter().enumerate() {
            if r < t {
                return self.atoms[i].0;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

/// Split one real anchor of mass `w` onto its adjacent integers, preserving
/// the expectation exactly. Pushes one or two `(value, probability)` pairs.
fn round_anchor(x: f64, w: f64, out: &mut Vec<(u64, f64)>) {
    let lo = x.floor();
    let f = x - lo;
    // treat sub-1e-12 fractional parts as exact integers to absorb roundoff
    // from the mean ± √variance computation
    if f < 1e-12 {
        out.push((lo as u64, w));
    } else if f > 1.0 - 1e-12 {
        out.push((lo as u64 + 1, w));
    } else {
        out.push((lo as u64, w * (1.0 - f)));
        out.push((lo as u64 + 1, w * f));
    }
}

/// Construct the two-anchor randomized-rounding law for the given moment
/// targets on the support `{0, …, bound}`.
///
/// Errors when an anchor `mean ± √variance` leaves `[0, bound]` or the
/// variance exceeds the feasible maximum `mean·(bound − mean)`.
pub fn make_bounded_discrete(mean: f64, variance: f64, bound: u64) -> Result<BoundedDiscreteDist> {
    let b = bound as f64;
    if !(mean > 0.0 && mean < b) {
        return Err(Error::Infeasible(format!(
            "mean {mean} outside the open interval (0, bound = {b})"
        )));
    }
    if !(variance >= 0.0) {
        return Err(Error::Infeasible(format!("variance {variance} is negative")));
    }
    if variance > mean * (b - mean) {
        return Err(Error::Infeasible(format!(
            "variance {variance} exceeds the maximum {} feasible on {{0,…,{bound}}} with mean {mean}",
            mean * (b - mean)
        )));
    }
    let spread = variance.sqrt();
    let lo_anchor = mean - spread;
    let hi_anchor = mean + spread;
    if lo_anchor < 0.0 {
        return Err(Error::Infeasible(format!(
            "lower anchor mean − √variance = {lo_anchor} is below 0"
        )));
    }
    if hi_anchor > b {
        return Err(Error::Infeasible(format!(
            "upper anchor mean + √variance = {hi_anchor} is above the bound {b}"
        )));
    }

    let mut raw: Vec<(u64, f64)> = Vec::with_capacity(4);
    if spread == 0.0 {
        round_anchor(mean, 1.0, &mut raw);
    } else {
        round_anchor(lo_anchor, 0.5, &mut raw);
        round_anchor(hi_anchor, 0.5, &mut raw);
    }
    raw.sort_by_key(|&(v, _)| v);
    // merge equal values (the two anchors may round onto a shared integer)
    let mut atoms: Vec<(u64, f64)> = Vec::with_capacity(raw.len());
    for (v, p) in raw {
        if p <= 0.0 {
            continue;
        }
        match atoms.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => atoms.push((v, p)),
        }
    }

    let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
    debug_assert!((total - 1.0).abs() < 1e-12);
    let realized_mean: f64 = atoms.iter().map(|&(v, p)| v as f64 * p).sum();
    let second: f64 = atoms.iter().map(|&(v, p)| (v as f64) * (v as f64) * p).sum();
    let realized_var = second - realized_mean * realized_mean;

    // cumulative thresholds on the raw u64 scale; the final atom catches
    // everything remaining, so the last threshold is pinned to u64::MAX
    let mut thresholds = Vec::with_capacity(atoms.len());
    let mut cum = 0.0f64;
    for (i, &(_, p)) in atoms.iter().enumerate() {
        cum += p;
        if i + 1 == atoms.len() || cum >= 1.0 {
            thresholds.push(u64::MAX);
        } else {
            thresholds.push((cum * 2f64.powi(64)) as u64);
        }
    }

    Ok(BoundedDiscreteDist {
        atoms,
        thresholds,
        mean_target: mean,
        var_target: variance,
        bound,
        realized_mean,
        realized_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn integer_anchors_give_exact_two_point_law() {
        let d = make_bounded_discrete(2.0, 1.0, 3).unwrap();
        assert_eq!(d.atoms(), &[(1, 0.5), (3, 0.5)]);
        assert_close(d.realized_mean(), 2.0, 1e-12);
        assert_close(d.realized_var(), 1.0, 1e-12);
    }

    #[test]
    fn fractional_anchors_split_onto_adjacent_integers() {
        // anchors 14.99 and 24.99, each mass ½ split 0.01/0.99
        let d = make_bounded_discrete(19.99, 25.0, 30).unwrap();
        let atoms = d.atoms();
        assert_eq!(atoms.len(), 4);
        let expect = [(14u64, 0.005), (15, 0.495), (24, 0.005), (25, 0.495)];
        for ((v, p), (ev, ep)) in atoms.iter().zip(expect.iter()) {
            assert_eq!(v, ev);
            assert_close(*p, *ep, 1e-12);
        }
        assert_close(d.realized_mean(), 19.99, 1e-9);
        // rounding inflates variance by at most 0.25
        assert!(d.realized_var() >= 25.0 - 1e-9 && d.realized_var() <= 25.25 + 1e-9);
    }

    #[test]
    fn infeasible_anchor_is_rejected() {
        // 2 − √10 < 0
        let err = make_bounded_discrete(2.0, 10.0, 3).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn degenerate_distribution_always_returns_its_atom() {
        let d = make_bounded_discrete(5.0, 0.0, 9).unwrap();
        assert_eq!(d.atoms(), &[(5, 1.0)]);
        let mut rng = RngStream::new(7, 0);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), 5);
        }
    }

    #[test]
    fn empirical_moments_converge() {
        let d = make_bounded_discrete(2.0, 1.0, 3).unwrap();
        let mut rng = RngStream::new(42, 3);
        let n = 1_000_000u64;
        let mut sum = 0u64;
        let mut sum_sq = 0u64;
        for _ in 0..n {
            let x = d.sample(&mut rng);
            assert!(x <= 3);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum as f64 / n as f64;
        let var = sum_sq as f64 / n as f64 - mean * mean;
        assert_close(mean, 2.0, 0.01);
        assert_close(var, 1.0, 0.02);
    }

    #[test]
    fn same_seed_and_stream_reproduces_the_sequence() {
        let d = make_bounded_discrete(19.99, 25.0, 30).unwrap();
        let mut a = RngStream::new(123, 9);
        let mut b = RngStream::new(123, 9);
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut a), d.sample(&mut b));
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(123, 0);
        let mut b = RngStream::new(123, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }
}
