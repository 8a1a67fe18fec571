//! Browser bindings for the core crate, exposing three interactive
//! operations to a static demo page:
//!
//!   1. [`stability_json`] — the stability boundary, throughput-optimality
//!      verdict, and minimum skip depth for arbitrary rate vectors;
//!   2. [`sandwich_curve_json`] — the closed-form lower/upper bounds on
//!      `ε·E[avgQ]` across a slack ladder, for plotting the heavy-traffic
//!      sandwich;
//!   3. [`SimHandle`] — a live single-trajectory simulation stepped from
//!      JavaScript, with queue snapshots for rendering.
//!
//! Results cross the boundary as JSON strings built by hand (the payloads
//! are small and purely numeric), so the page needs no extra glue beyond
//! the generated module. Errors surface as `JsError`, which the page shows
//! verbatim; the refusal messages are the library's own.

use wasm_bindgen::prelude::*;

use skipq::harness::LiveSim;
use skipq::model::ArrivalSpec;
use skipq::{
    delta, lower_bound_rhs, n2_bound, stability_report, upper_bound_rhs, PolicyKind, ServiceSpec,
    SystemConfig,
};

/// A float for a JSON payload: finite numbers verbatim, everything else
/// `null` (JSON has no NaN/∞).
fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "null".to_string()
    }
}

fn to_js<T>(result: skipq::Result<T>) -> Result<T, JsError> {
    result.map_err(|e| JsError::new(&e.to_string()))
}

/// Stability analysis for a comma-separated rate vector: the sustainable
/// arrival boundary at skip depth `d` (0 means plain round-robin), whether
/// the given load is inside it, and the smallest depth that preserves the
/// full capacity.
#[wasm_bindgen]
pub fn stability_json(rates: Vec<f64>, d: usize, n_lambda: f64) -> Result<String, JsError> {
    let report = to_js(stability_report(&rates, d, n_lambda))?;
    Ok(format!(
        "{{\"n\":{},\"d\":{},\"theorem1_bound\":{},\"capacity_sum\":{},\"argmin_size\":{},\
         \"stable\":{},\"throughput_optimal\":{},\"min_skips\":{},\"epsilon\":{}}}",
        rates.len(),
        d,
        json_num(report.theorem1_bound),
        json_num(report.capacity_sum),
        report.argmin_size,
        report.stable,
        report.throughput_optimal,
        report.min_skips,
        json_num(report.epsilon),
    ))
}

/// The heavy-traffic sandwich for a homogeneous system: `points` slacks
/// spaced geometrically from the drift margin `Δ` down to `Δ/1000`, each
/// with the universal lower bound and (where defined) the collapse-based
/// upper bound on `ε·E[avgQ]`, plus the shared `ε → 0` limit.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sandwich_curve_json(
    n: usize,
    mu: f64,
    sigma_mu_sq: f64,
    s_max: f64,
    k: u64,
    d: usize,
    a_max: f64,
    var_a_total: f64,
    points: usize,
) -> Result<String, JsError> {
    if !(2..=400).contains(&points) {
        return Err(JsError::new("points must be in [2, 400]"));
    }
    let rates = vec![mu; n];
    let margin = to_js(delta(&rates, d))?;
    if margin.degenerate {
        return Err(JsError::new(
            "the drift margin is zero for this system; no admissible slack exists",
        ));
    }
    let sigma_mu_sq_sum = sigma_mu_sq * n as f64;
    let limit = (var_a_total + sigma_mu_sq_sum) / (2.0 * n as f64);
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        // Geometric ladder over three decades below the margin.
        let eps = margin.delta * 1e-3f64.powf(i as f64 / (points - 1) as f64);
        let lower = to_js(lower_bound_rhs(eps, n, var_a_total, sigma_mu_sq_sum, s_max))?;
        let upper = n2_bound(
            &rates,
            k,
            d,
            a_max,
            s_max,
            var_a_total / n as f64,
            sigma_mu_sq,
            eps,
        )
        .and_then(|rep| {
            upper_bound_rhs(
                eps,
                n,
                k,
                d,
                var_a_total,
                sigma_mu_sq_sum,
                a_max,
                s_max,
                rep.n2,
            )
        })
        .map(json_num)
        .unwrap_or_else(|_| "null".to_string());
        rows.push(format!(
            "{{\"eps\":{},\"lower\":{},\"upper\":{}}}",
            json_num(eps),
            json_num(lower.value),
            upper
        ));
    }
    Ok(format!(
        "{{\"delta\":{},\"limit\":{},\"points\":[{}]}}",
        json_num(margin.delta),
        json_num(limit),
        rows.join(",")
    ))
}

/// One live trajectory, stepped in chunks from the page. Queue snapshots
/// come back as plain arrays for canvas rendering; running statistics are
/// aggregated on the Rust side.
#[wasm_bindgen]
pub struct SimHandle {
    sim: LiveSim,
    n: usize,
    measured_slots: u64,
    sum_avg_queue: f64,
    messages: u64,
    arrivals: u64,
    unused: u64,
    last_target: i32,
    polls: u64,
}

#[wasm_bindgen]
impl SimHandle {
    /// Build a simulation. `policy` is one of `slq`, `round-robin`,
    /// `repeated-jsq`, `jsq`; `k` and `d` are read only where the policy
    /// uses them. Unstable loads are allowed — watching the divergence is
    /// part of the point — but malformed laws are refused.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        policy: &str,
        n: usize,
        k: u64,
        d: usize,
        n_lambda: f64,
        var_a_total: f64,
        a_max: f64,
        mu: f64,
        sigma_mu_sq: f64,
        s_max: u64,
        seed: u64,
    ) -> Result<SimHandle, JsError> {
        let kind = match policy {
            "slq" => PolicyKind::Slq { k, d },
            "round-robin" => PolicyKind::RoundRobin,
            "repeated-jsq" => PolicyKind::RepeatedJsq { k },
            "jsq" => PolicyKind::Jsq,
            other => {
                return Err(JsError::new(&format!(
                    "unknown policy `{other}`; expected slq, round-robin, repeated-jsq, or jsq"
                )))
            }
        };
        let arrival = ArrivalSpec {
            n_lambda,
            n_sigma_lambda_sq: var_a_total,
            a_max,
        };
        let service = ServiceSpec::homogeneous(n, mu, sigma_mu_sq, s_max);
        let mut cfg = SystemConfig::new(n, kind, arrival, service);
        cfg.seed = seed;
        to_js(cfg.validate())?;
        let sim = to_js(LiveSim::new(&cfg, 0))?;
        Ok(SimHandle {
            sim,
            n,
            measured_slots: 0,
            sum_avg_queue: 0.0,
            messages: 0,
            arrivals: 0,
            unused: 0,
            last_target: -1,
            polls: 0,
        })
    }

    /// Advance `slots` steps and return a JSON summary of the run so far.
    pub fn advance(&mut self, slots: u32) -> Result<String, JsError> {
        for _ in 0..slots {
            let record = to_js(self.sim.step())?;
            self.measured_slots += 1;
            self.sum_avg_queue += record.pre_l1 as f64 / self.n as f64;
            self.messages += record.messages;
            self.arrivals += record.arrivals;
            self.unused += record.unused_total;
            self.last_target = record.target as i32;
            if record.cycle_boundary {
                self.polls += 1;
            }
        }
        let slots_f = self.measured_slots.max(1) as f64;
        Ok(format!(
            "{{\"slot\":{},\"total_jobs\":{},\"avg_queue\":{},\"msg_per_slot\":{},\
             \"arrivals_per_slot\":{},\"unused_per_slot\":{},\"last_target\":{},\"polls\":{}}}",
            self.sim.slot(),
            self.sim.total_jobs(),
            json_num(self.sum_avg_queue / slots_f),
            json_num(self.messages as f64 / slots_f),
            json_num(self.arrivals as f64 / slots_f),
            json_num(self.unused as f64 / slots_f),
            self.last_target,
            self.polls,
        ))
    }

    /// Current queue lengths, for drawing.
    pub fn queues(&self) -> Vec<f64> {
        self.sim.queues().iter().map(|&q| q as f64).collect()
    }

    /// Slots per dispatching cycle for the configured policy.
    pub fn cycle_len(&self) -> f64 {
        self.sim.cycle_len() as f64
    }
}
