use heisenberg_tm::functional::{normalize, tm_functional, FunctionalReport, NormMode, REPORT_CSV_HEADER};
use heisenberg_tm::gluing::{preset_raw, Preset};
use heisenberg_tm::quadrature::{field_rule, RuleOptions};
use serde::Serialize;

use crate::config::{ExperimentConfig, Normalization};
use crate::error::CliResult;
use crate::report::{Outcome, Table, Verdict};

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalRun {
    pub field: Preset,
    /// Factor applied to the raw field by the normalization.
    pub scale: f64,
    pub nodes: usize,
    pub report: FunctionalReport,
}

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<FunctionalRun>> {
    let dim = config.dim()?;
    let params = config.tm_params(&dim)?;
    let fc = &config.functional;
    let raw = preset_raw(fc.field, &dim)?;
    let opts = RuleOptions {
        singular_power: params.beta,
        ..config.rule_options(RuleOptions::default())
    };
    let origin = dim.origin();
    let rule = field_rule(&raw, (params.beta > 0.0).then_some(&origin), &opts)?;
    let (u, scale) = match fc.normalize {
        Normalization::None => (raw, 1.0),
        Normalization::Gradient => normalize(&raw, NormMode::GradientOnly, params.tau, &dim, &rule)?,
        Normalization::Tau => normalize(&raw, NormMode::TauNorm, params.tau, &dim, &rule)?,
    };
    let report = tm_functional(&u, &params, &dim, &rule)?;

    let mut verdicts = vec![Verdict::flag(
        "functional value finite and non-negative",
        report.tm_value.is_finite() && report.tm_value >= 0.0,
        format!("{:.10e} +- {:.1e}", report.tm_value, report.quadrature_error),
    )];
    let rel = report.quadrature_error / report.tm_value.abs().max(f64::MIN_POSITIVE);
    verdicts.push(Verdict::le("relative quadrature error", rel, fc.rel_tol).convergence());
    let (norm, name) = match fc.normalize {
        Normalization::None => (None, ""),
        Normalization::Gradient => (Some(report.grad_norm_q), "gradient norm"),
        Normalization::Tau => (Some(report.tau_norm), "tau norm"),
    };
    if let Some(v) = norm {
        verdicts.push(Verdict::le(format!("normalized {name} = 1"), (v - 1.0).abs(), 1e-9));
    }
    let k = match fc.field {
        Preset::Moser { k } => Some(k as f64),
        _ => None,
    };
    let table = Table::new("functional", &REPORT_CSV_HEADER, vec![report.csv_row(k)]);
    Ok(Outcome {
        command: "functional",
        result: FunctionalRun {
            field: fc.field,
            scale,
            nodes: rule.len(),
            report,
        },
        verdicts,
        tables: vec![table],
        notices: Vec::new(),
    })
}
