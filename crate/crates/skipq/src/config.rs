//! Run configuration: a flat `key = value` text format and the checked
//! [`SystemConfig`] it parses into.
//!
//! The format is deliberately minimal so configs diff cleanly:
//!
//! ```text
//! # sixteen servers, skip the two longest, re-poll every 2·(16−2) slots
//! n            = 16
//! policy       = slq
//! k            = 2
//! d            = 2
//! arrival_mean = 31.9       # E[A(1)], summed over the system
//! arrival_var  = 25         # Var[A(1)], summed over the system
//! a_max        = 3          # batch bound is floor(n · a_max)
//! mu           = 2          # scalar broadcasts; or a comma list of n rates
//! sigma_mu_sq  = 1
//! s_max        = 3
//! ```
//!
//! Unknown and duplicate keys are errors: a typo must never silently fall
//! back to a default. Scalars for `mu`/`sigma_mu_sq` broadcast to all `n`
//! servers; comma lists give per-server values.
//!
//! Horizons are normalized upward so that the measurement window is a
//! whole number of batches, each a whole number of polling cycles, and
//! warmup ends exactly at a polling instant — estimator windows then never
//! straddle partial cycles.

use std::collections::HashSet;
use std::path::Path;

use crate::analysis::min_skips;
use crate::error::{Error, Result};
use crate::model::{ArrivalSpec, ServiceSpec};
use crate::policy::{cycle_length, PolicyKind, ResolvedPolicy};

/// Everything a single experiment needs: system shape, traffic laws,
/// policy, horizon, and bookkeeping knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of servers.
    pub n: usize,
    /// Dispatching policy.
    pub policy: PolicyKind,
    /// Arrival-batch law parameters (system totals).
    pub arrival: ArrivalSpec,
    /// Per-server service law parameters.
    pub service: ServiceSpec,
    /// Measured slots per replication (before normalization).
    pub horizon_slots: u64,
    /// Discarded slots before measurement; `None` picks the relaxation
    /// heuristic.
    pub warmup_slots: Option<u64>,
    /// Independent trajectories to run and pool.
    pub replications: usize,
    /// Master seed; replication r uses streams derived from (seed, r).
    pub seed: u64,
    /// Batch count for batch-means confidence intervals.
    pub batches: usize,
    /// Optional CSV output path.
    pub out: Option<String>,
    /// Run even when the load is outside the stability region.
    pub allow_unstable: bool,
    /// Reject policies whose skip depth is below the throughput-optimality
    /// threshold for the configured service rates.
    pub require_throughput_optimal: bool,
}

impl SystemConfig {
    /// A config with the given shape and defaulted knobs (horizon 10⁶,
    /// heuristic warmup, 1 replication, seed 1, 20 batches).
    pub fn new(n: usize, policy: PolicyKind, arrival: ArrivalSpec, service: ServiceSpec) -> Self {
        SystemConfig {
            n,
            policy,
            arrival,
            service,
            horizon_slots: 1_000_000,
            warmup_slots: None,
            replications: 1,
            seed: 1,
            batches: 20,
            out: None,
            allow_unstable: false,
            require_throughput_optimal: false,
        }
    }

    /// Read and parse a config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        text.parse()
    }
}

impl std::str::FromStr for SystemConfig {
    type Err = Error;

    /// Parse the flat `key = value` format. See the module docs for the
    /// grammar; [`validate`](Self::validate) runs on the result.
    fn from_str(text: &str) -> Result<Self> {
        let mut seen: HashSet<String> = HashSet::new();
        let mut n: Option<usize> = None;
        let mut policy_name: Option<String> = None;
        let mut k: Option<u64> = None;
        let mut d: Option<usize> = None;
        let mut arrival_mean: Option<f64> = None;
        let mut arrival_var: f64 = 0.0;
        let mut a_max: Option<f64> = None;
        let mut mu: Option<Vec<f64>> = None;
        let mut sigma_mu_sq: Option<Vec<f64>> = None;
        let mut s_max: Option<u64> = None;
        let mut horizon_slots: u64 = 1_000_000;
        let mut warmup_slots: Option<u64> = None;
        let mut replications: usize = 1;
        let mut seed: u64 = 1;
        let mut batches: usize = 20;
        let mut out: Option<String> = None;
        let mut allow_unstable = false;
        let mut require_throughput_optimal = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            // strip a trailing comment from the value
            let value = match value.find('#') {
                Some(pos) => value[..pos].trim(),
                None => value.trim(),
            };
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            match key {
                "n" => n = Some(parse_scalar(key, value)?),
                "policy" => policy_name = Some(value.to_string()),
                "k" => k = Some(parse_scalar(key, value)?),
                "d" => d = Some(parse_scalar(key, value)?),
                "arrival_mean" => arrival_mean = Some(parse_scalar(key, value)?),
                "arrival_var" => arrival_var = parse_scalar(key, value)?,
                "a_max" => a_max = Some(parse_scalar(key, value)?),
                "mu" => mu = Some(parse_list(key, value)?),
                "sigma_mu_sq" => sigma_mu_sq = Some(parse_list(key, value)?),
                "s_max" => s_max = Some(parse_scalar(key, value)?),
                "horizon_slots" => horizon_slots = parse_scalar(key, value)?,
                "warmup_slots" => warmup_slots = Some(parse_scalar(key, value)?),
                "replications" => replications = parse_scalar(key, value)?,
                "seed" => seed = parse_scalar(key, value)?,
                "batches" => batches = parse_scalar(key, value)?,
                "out" => out = Some(value.to_string()),
                "allow_unstable" => allow_unstable = parse_bool(key, value)?,
                "require_throughput_optimal" => {
                    require_throughput_optimal = parse_bool(key, value)?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{key}`",
                        lineno + 1
                    )))
                }
            }
        }

        let n = n.ok_or_else(|| Error::Config("missing required key `n`".into()))?;
        let policy_name =
            policy_name.ok_or_else(|| Error::Config("missing required key `policy`".into()))?;
        let arrival_mean = arrival_mean
            .ok_or_else(|| Error::Config("missing required key `arrival_mean`".into()))?;
        let a_max = a_max.ok_or_else(|| Error::Config("missing required key `a_max`".into()))?;
        let mu = mu.ok_or_else(|| Error::Config("missing required key `mu`".into()))?;

        let policy = build_policy(&policy_name, k, d)?;
        let mu = broadcast("mu", mu, n)?;
        let sigma_mu_sq = broadcast("sigma_mu_sq", sigma_mu_sq.unwrap_or_else(|| vec![0.0]), n)?;
        let s_max = match s_max {
            Some(v) => v,
            None => mu.iter().cloned().fold(0.0, f64::max).ceil() as u64,
        };

        let cfg = SystemConfig {
            n,
            policy,
            arrival: ArrivalSpec {
                n_lambda: arrival_mean,
                n_sigma_lambda_sq: arrival_var,
                a_max,
            },
            service: ServiceSpec {
                mu,
                sigma_mu_sq,
                s_max,
            },
            horizon_slots,
            warmup_slots,
            replications,
            seed,
            batches,
            out,
            allow_unstable,
            require_throughput_optimal,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SystemConfig {
    /// Shape checks: dimensions agree, laws are feasible, knobs are in
    /// range, and (when requested) the skip depth clears the
    /// throughput-optimality threshold.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be ≥ 1".into()));
        }
        self.policy.resolve(self.n)?;
        if self.service.n() != self.n {
            return Err(Error::Config(format!(
                "mu has {} entries for n = {}",
                self.service.n(),
                self.n
            )));
        }
        self.service.validate()?;
        self.arrival.validate(self.n)?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be ≥ 1".into()));
        }
        if self.batches < 2 {
            return Err(Error::Config("batches must be ≥ 2".into()));
        }
        if self.horizon_slots == 0 {
            return Err(Error::Config("horizon_slots must be ≥ 1".into()));
        }
        if self.require_throughput_optimal {
            let needed = min_skips(&self.service.mu)?.min_skips;
            let resolved = self.policy.resolve(self.n)?;
            if resolved.d < needed {
                return Err(Error::Config(format!(
                    "require_throughput_optimal: policy skips d = {} longest queues but these \
                     service rates need d ≥ {}",
                    resolved.d, needed
                )));
            }
        }
        Ok(())
    }

    /// Capacity slack `ε = Σμ − E[A(1)]`.
    pub fn epsilon(&self) -> f64 {
        self.service.mu_sum() - self.arrival.n_lambda
    }

    /// The policy resolved against this system size.
    pub fn resolved_policy(&self) -> Result<ResolvedPolicy> {
        self.policy.resolve(self.n)
    }

    /// Slots between polling instants for this config.
    pub fn cycle_len(&self) -> Result<u64> {
        let r = self.policy.resolve(self.n)?;
        Ok(cycle_length(r.k, self.n, r.d))
    }

    /// Warmup heuristic: 20 relaxation times, where one relaxation time is
    /// (estimated mean queue per server) / ε slots and the mean-queue
    /// estimate is the heavy-traffic constant (Var[A] + Σσ²μ)/(2nε) —
    /// scaled by n for the policies whose queues run a factor ~n higher
    /// (round-robin and repeated dispatch to one queue). Zero when the
    /// system has no slack to relax into (ε ≤ 0).
    pub fn default_warmup(&self) -> Result<u64> {
        let eps = self.epsilon();
        if eps <= 0.0 {
            return Ok(0);
        }
        let base = (self.arrival.n_sigma_lambda_sq + self.service.sigma_mu_sq_sum())
            / (2.0 * self.n as f64 * eps);
        let multiplier = match self.policy {
            PolicyKind::RoundRobin | PolicyKind::RepeatedJsq { .. } => self.n as f64,
            PolicyKind::Slq { .. } | PolicyKind::Jsq => 1.0,
        };
        let slots = 20.0 * (base * multiplier / eps).max(1.0);
        let cycle = self.cycle_len()?;
        Ok(round_up_to_multiple(slots.ceil() as u64, cycle))
    }

    /// The config actually run: warmup defaulted (if unset) and rounded up
    /// to whole cycles, horizon rounded up so it splits into `batches`
    /// equal batches of whole cycles.
    pub fn normalized(&self) -> Result<SystemConfig> {
        self.validate()?;
        let cycle = self.cycle_len()?;
        let warmup = match self.warmup_slots {
            Some(w) => round_up_to_multiple(w, cycle),
            None => self.default_warmup()?,
        };
        let chunk = cycle * self.batches as u64;
        let horizon = round_up_to_multiple(self.horizon_slots, chunk);
        let mut cfg = self.clone();
        cfg.warmup_slots = Some(warmup);
        cfg.horizon_slots = horizon;
        Ok(cfg)
    }
}

fn round_up_to_multiple(value: u64, multiple: u64) -> u64 {
    if multiple == 0 {
        return value;
    }
    value.div_ceil(multiple) * multiple
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "key `{key}`: expected `true` or `false`, got `{value}`"
        ))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_scalar(key, part.trim()))
        .collect()
}

/// Scalar entries broadcast to length `n`; lists must match `n` exactly.
fn broadcast(key: &str, values: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if values.len() == 1 {
        return Ok(vec![values[0]; n]);
    }
    if values.len() == n {
        return Ok(values);
    }
    Err(Error::Config(format!(
        "key `{key}`: {} entries for n = {n} (give 1 to broadcast or exactly n)",
        values.len()
    )))
}

fn build_policy(name: &str, k: Option<u64>, d: Option<usize>) -> Result<PolicyKind> {
    match name {
        "slq" => Ok(PolicyKind::Slq {
            k: k.unwrap_or(1),
            d: d.unwrap_or(1),
        }),
        "round-robin" => {
            if k.is_some() || d.is_some() {
                return Err(Error::Config(
                    "policy round-robin takes neither k nor d".into(),
                ));
            }
            Ok(PolicyKind::RoundRobin)
        }
        "repeated-jsq" => {
            if d.is_some() {
                return Err(Error::Config(
                    "policy repeated-jsq takes k only (d is implied)".into(),
                ));
            }
            Ok(PolicyKind::RepeatedJsq { k: k.unwrap_or(1) })
        }
        "jsq" => {
            if k.is_some() || d.is_some() {
                return Err(Error::Config("policy jsq takes neither k nor d".into()));
            }
            Ok(PolicyKind::Jsq)
        }
        _ => Err(Error::Config(format!(
            "unknown policy `{name}` (expected slq, round-robin, repeated-jsq, or jsq)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    const BASE: &str = "\
n = 10
policy = slq
k = 1
d = 1
arrival_mean = 19.99
arrival_var = 25
a_max = 3
mu = 2
sigma_mu_sq = 1
s_max = 3
";

    #[test]
    fn parses_the_reference_config() {
        let cfg = SystemConfig::from_str(BASE).unwrap();
        assert_eq!(cfg.n, 10);
        assert_eq!(cfg.policy, PolicyKind::Slq { k: 1, d: 1 });
        assert_eq!(cfg.service.mu, vec![2.0; 10]);
        assert_eq!(cfg.service.sigma_mu_sq, vec![1.0; 10]);
        assert_eq!(cfg.service.s_max, 3);
        assert!((cfg.epsilon() - 0.01).abs() < 1e-12);
        assert_eq!(cfg.cycle_len().unwrap(), 9);
        assert_eq!(cfg.batches, 20);
        assert_eq!(cfg.replications, 1);
    }

    #[test]
    fn comments_blank_lines_and_inline_comments() {
        let text = format!("# header\n\n{BASE}\nseed = 7 # lucky\n");
        let cfg = SystemConfig::from_str(&text).unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = format!("{BASE}\nhorizonn = 5\n");
        let err = SystemConfig::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown key `horizonn`"), "{err}");
    }

    #[test]
    fn duplicate_key_is_an_error() {
        let text = format!("{BASE}\nn = 11\n");
        let err = SystemConfig::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate key `n`"), "{err}");
    }

    #[test]
    fn list_length_must_match_n() {
        let text = BASE.replace("mu = 2", "mu = 2,2,2");
        let err = SystemConfig::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("3 entries for n = 10"), "{err}");
    }

    #[test]
    fn per_server_lists_parse() {
        let text = BASE
            .replace("n = 10", "n = 4")
            .replace("mu = 2", "mu = 3, 1, 1, 1")
            .replace("sigma_mu_sq = 1", "sigma_mu_sq = 0")
            .replace("arrival_mean = 19.99", "arrival_mean = 5.0");
        let cfg = SystemConfig::from_str(&text).unwrap();
        assert_eq!(cfg.service.mu, vec![3.0, 1.0, 1.0, 1.0]);
        assert_eq!(cfg.service.sigma_mu_sq, vec![0.0; 4]);
    }

    #[test]
    fn policy_parameter_rules() {
        let rr = BASE
            .replace("policy = slq", "policy = round-robin")
            .replace("k = 1\n", "")
            .replace("d = 1\n", "");
        assert_eq!(
            SystemConfig::from_str(&rr).unwrap().policy,
            PolicyKind::RoundRobin
        );

        let rr_with_k = BASE.replace("policy = slq", "policy = round-robin");
        assert!(SystemConfig::from_str(&rr_with_k).is_err());

        let rjsq = BASE
            .replace("policy = slq", "policy = repeated-jsq")
            .replace("d = 1\n", "");
        assert_eq!(
            SystemConfig::from_str(&rjsq).unwrap().policy,
            PolicyKind::RepeatedJsq { k: 1 }
        );
    }

    #[test]
    fn throughput_optimality_gate() {
        let text = BASE
            .replace("n = 10", "n = 4")
            .replace("mu = 2", "mu = 3, 1, 1, 1")
            .replace("sigma_mu_sq = 1", "sigma_mu_sq = 0")
            .replace("arrival_mean = 19.99", "arrival_mean = 5.0");
        let strict = format!("{text}require_throughput_optimal = true\n");
        // these rates need d ≥ 2; the config has d = 1
        let err = SystemConfig::from_str(&strict).unwrap_err();
        assert!(err.to_string().contains("d ≥ 2"), "{err}");

        let ok = strict.replace("d = 1", "d = 2");
        assert!(SystemConfig::from_str(&ok).is_ok());
    }

    #[test]
    fn normalization_rounds_to_whole_cycles_and_batches() {
        let mut cfg = SystemConfig::from_str(BASE).unwrap();
        cfg.horizon_slots = 1_000;
        cfg.warmup_slots = Some(10);
        cfg.batches = 20;
        let norm = cfg.normalized().unwrap();
        // cycle 9, chunk 180 → horizon rounds 1000 → 1080, warmup 10 → 18
        assert_eq!(norm.horizon_slots, 1_080);
        assert_eq!(norm.warmup_slots, Some(18));
        assert_eq!(norm.horizon_slots % (9 * 20), 0);
    }

    #[test]
    fn default_warmup_scales_with_policy() {
        let cfg = SystemConfig::from_str(BASE).unwrap();
        let slq = cfg.default_warmup().unwrap();
        // base estimate: (25+10)/(20·0.01) = 175 jobs; 20·175/0.01 = 350_000
        assert_eq!(slq, 350_001); // rounded up to a multiple of cycle 9

        let rr_text = BASE
            .replace("policy = slq", "policy = round-robin")
            .replace("k = 1\n", "")
            .replace("d = 1\n", "");
        let rr = SystemConfig::from_str(&rr_text).unwrap();
        let rr_warmup = rr.default_warmup().unwrap();
        assert_eq!(rr_warmup, 3_500_000); // ×n, multiple of cycle n = 10
    }

    #[test]
    fn missing_required_key_names_it() {
        let text = BASE.replace("a_max = 3\n", "");
        let err = SystemConfig::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("a_max"), "{err}");
    }
}
