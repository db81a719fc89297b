//! Run reports (`key = value`) and per-mode residual histories (CSV).
//!
//! A report is deterministic apart from its `timestamp` line. Wall-clock
//! timings go to a separate file for that reason.

use std::fmt::Write as _;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use ontd_core::admm::ModeSolve;
use ontd_core::DecomposeReport;

use crate::config::RunConfig;
use crate::formats::fmt_real;

pub const TIMESTAMP_KEY: &str = "timestamp";

pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("{TIMESTAMP_KEY} = {secs}\n")
}

/// Report text with the timestamp line removed, for comparisons.
pub fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with(TIMESTAMP_KEY))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Body of a decompose report: command, input, full configuration, metrics
/// and per-mode solver diagnostics. Modes are numbered from 1.
pub fn decompose_report(input: &str, cfg: &RunConfig, report: &DecomposeReport) -> String {
    let mut s = String::from("command = decompose\n");
    let _ = writeln!(s, "input = {input}");
    s.push_str(&cfg.to_text());
    let _ = writeln!(s, "relative_error = {}", fmt_real(report.relative_error));
    let _ = writeln!(s, "compression_ratio = {}", fmt_real(report.compression_ratio));
    let _ = writeln!(s, "space_savings = {}", fmt_real(report.space_savings));
    let _ = writeln!(s, "clamped_core_entries = {}", report.clamped_core_entries);
    let _ = writeln!(s, "status = {}", if report.converged() { "converged" } else { "max_iter" });
    for (n, mode) in report.modes.iter().enumerate() {
        let key = format!("mode{}", n + 1);
        let Some(mode) = mode else {
            let _ = writeln!(s, "{key}.factor = identity");
            continue;
        };
        let sizes: Vec<String> = mode.assignment.sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{key}.cluster_sizes = {}", sizes.join(","));
        if let Some(solve) = &mode.solve {
            let _ = writeln!(s, "{key}.iterations = {}", solve.iterations);
            let _ = writeln!(s, "{key}.converged = {}", solve.converged);
            let _ = writeln!(s, "{key}.final_residual = {}", fmt_real(solve.final_residual()));
            let _ = writeln!(s, "{key}.final_dual_residual = {}", fmt_real(*solve.dual_history.last().unwrap_or(&0.0)));
            let _ = writeln!(s, "{key}.objective = {}", fmt_real(*solve.objective_history.last().unwrap_or(&0.0)));
            let _ = writeln!(s, "{key}.idempotency_defect = {}", fmt_real(solve.idempotency_defect()));
            let _ = writeln!(s, "{key}.max_trace_deviation = {}", fmt_real(solve.max_trace_deviation));
            let _ = writeln!(s, "{key}.asymmetry = {}", fmt_real(solve.asymmetry));
        }
    }
    for w in warnings(report) {
        let _ = writeln!(s, "warning = {w}");
    }
    s
}

/// One line per mode that stopped at `max_iter`, modes numbered from 1.
pub fn warnings(report: &DecomposeReport) -> Vec<String> {
    report
        .modes
        .iter()
        .flatten()
        .filter_map(|m| m.solve.as_ref().filter(|s| !s.converged).map(|s| (m.mode, s)))
        .map(|(n, s)| {
            format!("mode{} stopped at max_iter = {} with residual {}", n + 1, s.iterations, fmt_real(s.final_residual()))
        })
        .collect()
}

/// `iteration,res_x,res_z,res_m,dual,objective` per iteration.
pub fn residual_csv(solve: &ModeSolve) -> String {
    let mut s = String::from("iteration,res_x,res_z,res_m,dual,objective\n");
    for (i, r) in solve.residual_history.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            i + 1,
            fmt_real(r[0]),
            fmt_real(r[1]),
            fmt_real(r[2]),
            fmt_real(solve.dual_history[i]),
            fmt_real(solve.objective_history[i])
        );
    }
    s
}

pub fn timing_text(phases: &[(&str, Duration)]) -> String {
    phases.iter().map(|(k, d)| format!("{k}_seconds = {:.6}\n", d.as_secs_f64())).collect()
}
