//! CSV form of a solver trace.

use std::fmt::Write;

use klt_mbi_core::MbiTrace;

pub const HEADER: &str = "iteration,objective,chosen_block,analytic_mse,empirical_mse";

/// 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

/// One row per recorded objective. `chosen_block` (0-based) is empty on the
/// initial row; `empirical` is omitted for exact-moment runs.
pub fn trace_csv(trace: &MbiTrace, mse_offset: f64, empirical: Option<&[f64]>) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (q, &f) in trace.objective_per_iteration.iter().enumerate() {
        let chosen = if q == 0 {
            String::new()
        } else {
            trace.chosen_block_per_iteration[q - 1].to_string()
        };
        let emp = empirical.and_then(|e| e.get(q)).map_or(String::new(), |&v| fmt_num(v));
        writeln!(out, "{q},{},{chosen},{},{emp}", fmt_num(f), fmt_num(mse_offset + f)).unwrap();
    }
    out
}
