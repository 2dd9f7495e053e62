use heisenberg_tm::gluing::{glue_experiment, preset_field, GlueOptions, GlueRun, GLUE_CSV_HEADER};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::report::{Outcome, Table, Verdict};

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<GlueRun>> {
    let dim = config.dim()?;
    let params = config.tm_params(&dim)?;
    let defaults = GlueOptions::default();
    let opts = GlueOptions {
        rule: config.rule_options(defaults.rule.clone()),
        ..defaults
    };
    let u = preset_field(config.glue.preset, &params, &dim, &opts.rule)?;
    let run = glue_experiment(&u, &params, &dim, config.glue.r, &opts)?;

    let mut notices = vec![format!(
        "r = {}, minimal admissible r = {}, {} balls, Minkowski constant {} (printed form {})",
        run.r,
        run.minimal_r.map_or("n/a".to_string(), |v| v.to_string()),
        run.per_ball.len(),
        run.minkowski_constant,
        run.minkowski_constant_printed
    )];
    notices.push(format!(
        "global {:.6e} <= sum over B(xi, r) {:.6e} <= sum over B(xi, 2r) {:.6e}; max 2r-multiplicity {}",
        run.global_tm, run.sum_local_tm_inner, run.sum_local_tm, run.max_multiplicity_2r
    ));
    let verdicts = run
        .checks
        .iter()
        .map(|c| {
            let v = Verdict::le(c.name.clone(), c.lhs, c.rhs);
            Verdict { passed: c.passed, ..v }
        })
        .collect();
    let table = Table::new("glue", &GLUE_CSV_HEADER, run.csv_rows());
    Ok(Outcome {
        command: "glue",
        result: run,
        verdicts,
        tables: vec![table],
        notices,
    })
}
