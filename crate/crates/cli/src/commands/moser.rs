use heisenberg_tm::moser::{default_k_list, threshold_scan, ScanReport, SCAN_CSV_HEADER};
use heisenberg_tm::quadrature::RuleOptions;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Table, Verdict};

/// Grid around the `β = 0` threshold `α_4 ≈ 8.5801`.
pub const BASE_ALPHA_GRID: [f64; 6] = [6.0, 7.5, 8.0, 8.58, 9.0, 10.7];

/// Entry of [`BASE_ALPHA_GRID`] within `1e-4` of the threshold.
const NEAR_THRESHOLD: f64 = 8.58;

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<ScanReport>> {
    let dim = config.dim()?;
    let mc = &config.moser_scan;
    let beta = config.params.beta;
    let grid = match &mc.alpha_grid {
        Some(g) => g.clone(),
        // At beta > 0 the scaled near-threshold member still grows over
        // k <= 256 and saturates only near k ~ 10^4, so the slope test over
        // the default k range cannot classify it; it is left out.
        None => {
            let f = 1.0 - beta / dim.q_f64();
            BASE_ALPHA_GRID
                .iter()
                .filter(|&&a| beta == 0.0 || a != NEAR_THRESHOLD)
                .map(|a| a * f)
                .collect()
        }
    };
    let k_list = match &mc.k_list {
        Some(k) => k.clone(),
        None => default_k_list(mc.k_max),
    };
    if k_list.len() < 4 {
        return Err(CliError::Config(format!(
            "at `moser_scan`: the slope fit needs at least 4 family members, got {k_list:?}"
        )));
    }
    let opts = config.rule_options(RuleOptions::default());
    let report = threshold_scan(beta, config.params.tau, &grid, &k_list, &dim, &opts)?;

    let notices = report
        .entries
        .iter()
        .map(|e| {
            format!(
                "alpha = {}: {} (slope {:.3} +- {:.3}, last/first {:.3}, max/min {:.3})",
                e.alpha,
                e.classification.label(),
                e.slope,
                e.slope_se,
                e.last_over_first,
                e.max_over_min
            )
        })
        .chain(report.notes.iter().cloned())
        .collect();
    let threshold = report.threshold;
    let verdict = match report.bracket {
        Some((lo, hi)) => Verdict::flag(
            "bracket contains the sharp threshold",
            report.bracket_contains_threshold,
            format!("[{lo}, {hi}] vs {threshold:.6}"),
        ),
        None => Verdict::flag(
            "bracket contains the sharp threshold",
            false,
            format!("no bounded-to-growing transition on the grid; threshold {threshold:.6}"),
        ),
    };
    let table = Table::new("moser_scan", &SCAN_CSV_HEADER, report.csv_rows());
    Ok(Outcome {
        command: "moser-scan",
        result: report,
        verdicts: vec![verdict],
        tables: vec![table],
        notices,
    })
}
