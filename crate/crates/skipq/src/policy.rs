//! The sample-and-skip dispatching state machine.
//!
//! An `SLQ{k, d}` dispatcher works in cycles of `k(n-d)` slots. At the first
//! slot of a cycle it polls every server for its queue length (n queries +
//! n replies = 2n messages), marks the `d` longest queues — breaking ties
//! uniformly at random — and freezes the remaining `n-d` indices as the
//! cycle's *allowed list*. All `k(n-d)` batches of the cycle, including the
//! polling slot's own batch, are dispatched round-robin over the allowed
//! list in ascending index order, restarting from the head of the list each
//! cycle. Between polls the dispatcher is communication-silent.
//!
//! Derived special cases:
//!
//! * `RoundRobin` — polls nothing and charges zero messages; rotates over
//!   all `n` queues forever (the allowed list is everything, and the
//!   natural cycle for accounting purposes is `n` slots).
//! * `RepeatedJsq{k}` — `SLQ{k(n-1), n-1}`: the poll identifies the single
//!   shortest queue, which then receives `k(n-1)` consecutive batches.
//! * `Jsq` — `SLQ{1, n-1}`: poll every slot, dispatch to the shortest.
//!
//! The round-robin order within a cycle (ascending, reset at each poll) is
//! an implementation choice: the steady-state behavior is insensitive to
//! the visiting order, but fixing it makes trajectories reproducible and
//! the state machine exhaustively testable.

use crate::error::{Error, Result};
use crate::stochastic::RngStream;

/// Dispatching policy selector, as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Poll every `k(n-d)` slots, skip the `d` longest queues.
    Slq { k: u64, d: usize },
    /// Rotate over all queues; no polling, no messages.
    RoundRobin,
    /// `SLQ{k(n-1), n-1}`: send `k(n-1)` consecutive batches to the queue
    /// that was shortest at the last poll.
    RepeatedJsq { k: u64 },
    /// `SLQ{1, n-1}`: poll every slot, dispatch to the shortest queue.
    Jsq,
}

impl PolicyKind {
    /// Resolve the policy against a system size, normalizing the aliases
    /// onto the `(samples, k, d)` triple that drives the state machine.
    pub fn resolve(&self, n: usize) -> Result<ResolvedPolicy> {
        match *self {
            PolicyKind::Slq { k, d } => {
                if k < 1 {
                    return Err(Error::Config("policy parameter k must be ≥ 1".into()));
                }
                if d < 1 || d > n.saturating_sub(1) {
                    return Err(Error::Config(format!(
                        "policy parameter d = {d} outside [1, n-1] = [1, {}]",
                        n.saturating_sub(1)
                    )));
                }
                Ok(ResolvedPolicy {
                    samples: true,
                    k,
                    d,
                })
            }
            PolicyKind::RoundRobin => Ok(ResolvedPolicy {
                samples: false,
                k: 1,
                d: 0,
            }),
            PolicyKind::RepeatedJsq { k } => {
                if k < 1 {
                    return Err(Error::Config("policy parameter k must be ≥ 1".into()));
                }
                if n < 2 {
                    return Err(Error::Config(
                        "repeated-jsq needs at least two queues".into(),
                    ));
                }
                Ok(ResolvedPolicy {
                    samples: true,
                    k: k * (n as u64 - 1),
                    d: n - 1,
                })
            }
            PolicyKind::Jsq => {
                if n < 2 {
                    return Err(Error::Config("jsq needs at least two queues".into()));
                }
                Ok(ResolvedPolicy {
                    samples: true,
                    k: 1,
                    d: n - 1,
                })
            }
        }
    }

    /// The policy name used in CSV output and logs.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Slq { .. } => "slq",
            PolicyKind::RoundRobin => "round-robin",
            PolicyKind::RepeatedJsq { .. } => "repeated-jsq",
            PolicyKind::Jsq => "jsq",
        }
    }
}

/// A policy normalized to the parameters the state machine runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedPolicy {
    /// Whether the policy polls queue lengths (false only for round-robin).
    pub samples: bool,
    /// Rounds per cycle.
    pub k: u64,
    /// Number of queues skipped each cycle (0 for round-robin).
    pub d: usize,
}

/// Slots between consecutive polls: `k·(n-d)`.
pub fn cycle_length(k: u64, n: usize, d: usize) -> u64 {
    debug_assert!(k >= 1 && d < n);
    k * (n - d) as u64
}

/// The dispatcher's memory for one cycle: the frozen skipped set, the
/// round-robin cursor, and the round counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchState {
    allowed: Vec<usize>,
    skipped: Vec<usize>,
    cursor: usize,
    round: u64,
    k: u64,
}

impl DispatchState {
    /// Start a fresh cycle for a system of `n` queues with the given skipped
    /// set (ascending or not; it is sorted internally).
    pub fn new(n: usize, mut skipped: Vec<usize>, k: u64) -> Result<Self> {
        skipped.sort_unstable();
        if skipped.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("skipped set contains duplicates".into()));
        }
        if skipped.iter().any(|&i| i >= n) {
            return Err(Error::Config(format!(
                "skipped index out of range for n = {n}"
            )));
        }
        if skipped.len() >= n {
            return Err(Error::Config(
                "skipped set must leave at least one queue allowed".into(),
            ));
        }
        if k < 1 {
            return Err(Error::Config("round count k must be ≥ 1".into()));
        }
        let mut in_skipped = vec![false; n];
        for &i in &skipped {
            in_skipped[i] = true;
        }
        let allowed: Vec<usize> = (0..n).filter(|&i| !in_skipped[i]).collect();
        Ok(DispatchState {
            allowed,
            skipped,
            cursor: 0,
            round: 0,
            k,
        })
    }

    /// The queues excluded this cycle, ascending.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    /// The round-robin list, ascending, of size `n-d`.
    pub fn allowed(&self) -> &[usize] {
        &self.allowed
    }

    /// Completed rounds this cycle, in `[0, k]`.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Position of the next dispatch within the allowed list.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Slots already dispatched this cycle: `round·(n-d) + cursor`.
    pub fn slot_in_cycle(&self) -> u64 {
        self.round * self.allowed.len() as u64 + self.cursor as u64
    }

    /// True once all `k(n-d)` dispatches of the cycle are spent.
    pub fn exhausted(&self) -> bool {
        self.round == self.k
    }

    /// The next dispatch target (0-based queue index). Advances the cursor,
    /// wrapping into a new round at the end of the allowed list. Errors if
    /// the cycle is exhausted — the caller must poll and rebuild the state.
    pub fn next_target(&mut self) -> Result<usize> {
        if self.exhausted() {
            return Err(Error::State(format!(
                "cycle of {} slots exhausted; poll before dispatching again",
                self.k * self.allowed.len() as u64
            )));
        }
        let target = self.allowed[self.cursor];
        self.cursor += 1;
        if self.cursor == self.allowed.len() {
            self.cursor = 0;
            self.round += 1;
        }
        Ok(target)
    }
}

/// Indices of the `d` longest queues, ties broken uniformly at random,
/// returned ascending. Charges nothing by itself — message accounting is
/// the harness's job (one poll = 2n messages).
///
/// Each entry gets an independent random key; sorting by
/// `(length desc, key)` makes every subset of a tied boundary group equally
/// likely.
pub fn sample_and_select(q: &[u64], d: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    let n = q.len();
    if d < 1 || d >= n {
        return Err(Error::Config(format!(
            "d = {d} outside [1, n-1] = [1, {}]",
            n.saturating_sub(1)
        )));
    }
    let mut order: Vec<(u64, u64, usize)> = q
        .iter()
        .enumerate()
        .map(|(i, &len)| (len, rng.next_u64(), i))
        .collect();
    order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut selected: Vec<usize> = order[..d].iter().map(|&(_, _, i)| i).collect();
    selected.sort_unstable();
    Ok(selected)
}

/// Ties a [`ResolvedPolicy`] to its [`DispatchState`] across cycles and
/// owns the polling decision. Drives both the simulation harness and the
/// browser demo.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    policy: ResolvedPolicy,
    n: usize,
    state: DispatchState,
    fresh: bool,
}

/// What happened at the top of a slot, as reported by
/// [`Dispatcher::begin_slot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotStart {
    /// True when this slot begins a new cycle (for the polling policies
    /// this is exactly the polling instant).
    pub cycle_boundary: bool,
    /// Messages exchanged at this instant: `2n` on polls, else 0.
    pub messages: u64,
}

impl Dispatcher {
    /// Create a dispatcher in the "needs a first poll" state.
    pub fn new(policy: ResolvedPolicy, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Config("system size n must be ≥ 1".into()));
        }
        if policy.d >= n {
            return Err(Error::Config(format!(
                "resolved d = {} must be below n = {n}",
                policy.d
            )));
        }
        // start exhausted so the first begin_slot opens a cycle
        let mut state = DispatchState::new(n, Vec::new(), policy.k)?;
        state.round = policy.k;
        Ok(Dispatcher {
            policy,
            n,
            state,
            fresh: true,
        })
    }

    /// The resolved policy parameters.
    pub fn policy(&self) -> ResolvedPolicy {
        self.policy
    }

    /// Cycle length in slots.
    pub fn cycle_len(&self) -> u64 {
        cycle_length(self.policy.k, self.n, self.policy.d)
    }

    /// Current cycle state (for inspection).
    pub fn state(&self) -> &DispatchState {
        &self.state
    }

    /// Call once at the top of every slot, before drawing arrivals, with
    /// the queue lengths as they stand at the beginning of the slot. On a
    /// cycle boundary this polls (for sampling policies) and rebuilds the
    /// dispatch state; the same slot's batch already follows the new state.
    pub fn begin_slot(&mut self, q: &[u64], tie_rng: &mut RngStream) -> Result<SlotStart> {
        debug_assert_eq!(q.len(), self.n);
        if !self.state.exhausted() {
            return Ok(SlotStart {
                cycle_boundary: false,
                messages: 0,
            });
        }
        if self.policy.samples {
            let skipped = sample_and_select(q, self.policy.d, tie_rng)?;
            self.state = DispatchState::new(self.n, skipped, self.policy.k)?;
            self.fresh = false;
            Ok(SlotStart {
                cycle_boundary: true,
                messages: 2 * self.n as u64,
            })
        } else {
            self.state = DispatchState::new(self.n, Vec::new(), self.policy.k)?;
            self.fresh = false;
            Ok(SlotStart {
                cycle_boundary: true,
                messages: 0,
            })
        }
    }

    /// The dispatch target for the current slot. Must follow a
    /// `begin_slot` for this slot.
    pub fn next_target(&mut self) -> Result<usize> {
        if self.fresh {
            return Err(Error::State(
                "dispatcher not started: call begin_slot first".into(),
            ));
        }
        self.state.next_target()
    }
}
