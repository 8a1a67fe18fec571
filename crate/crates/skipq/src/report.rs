//! CSV persistence for experiment rows and analysis reports.
//!
//! Floats are written with Rust's default formatting: the shortest decimal
//! string that parses back to the identical bit pattern. That gives both
//! byte-determinism (same config and seed → same file) and lossless
//! round-trips. Missing values — `NaN` measurements or bounds whose
//! hypotheses failed — become empty cells rather than sentinel numbers.

use std::path::Path;

use crate::analysis::{BoundsReport, StabilityReport};
use crate::error::{Error, Result};
use crate::harness::ExperimentResult;

/// The fixed experiment-table header.
pub const EXPERIMENT_HEADER: &str = "policy,n,k,d,epsilon,avg_queue,avg_queue_ci,cross_stdev,\
temporal_stdev,perp_sq,msg_per_job,msg_per_slot_2n,msg_per_slot_n,eps_x_avgq,lower_rhs,upper_rhs";

/// A float cell: default (round-trip) formatting, empty for NaN.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn format_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format_float(x),
        None => String::new(),
    }
}

/// Render experiment rows as a CSV string (header + one line per row, in
/// input order).
pub fn experiment_csv(rows: &[ExperimentResult]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(EXPERIMENT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.policy,
            r.n,
            r.k,
            r.d,
            format_float(r.epsilon),
            format_float(r.avg_queue),
            format_float(r.avg_queue_ci),
            format_float(r.cross_stdev),
            format_float(r.temporal_stdev),
            format_float(r.perp_sq),
            format_float(r.msg_per_job),
            format_float(r.msg_per_slot_2n),
            format_float(r.msg_per_slot_n),
            format_float(r.eps_x_avgq),
            format_float(r.lower_rhs),
            format_opt(r.upper_rhs),
        ));
    }
    out
}

/// Write experiment rows to `path`.
pub fn write_csv(rows: &[ExperimentResult], path: &Path) -> Result<()> {
    std::fs::write(path, experiment_csv(rows))
        .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

/// Render a stability report as a two-line CSV.
pub fn stability_csv(r: &StabilityReport) -> String {
    format!(
        "theorem1_bound,capacity_sum,argmin_size,stable,throughput_optimal,min_skips,epsilon\n\
         {},{},{},{},{},{},{}\n",
        format_float(r.theorem1_bound),
        format_float(r.capacity_sum),
        r.argmin_size,
        r.stable,
        r.throughput_optimal,
        r.min_skips,
        format_float(r.epsilon),
    )
}

/// Render a bounds report as a two-line CSV.
pub fn bounds_csv(r: &BoundsReport) -> String {
    format!(
        "delta,z,c1_prime,c2,eta,rho,a,n2,ssc_eps_threshold,upper_rhs,lower_rhs\n\
         {},{},{},{},{},{},{},{},{},{},{}\n",
        format_float(r.delta),
        format_float(r.z),
        format_float(r.c1_prime),
        format_float(r.c2),
        format_float(r.eta),
        format_float(r.rho),
        format_float(r.a),
        format_float(r.n2),
        format_float(r.ssc_eps_threshold),
        format_opt(r.upper_rhs),
        format_opt(r.lower_rhs),
    )
}
