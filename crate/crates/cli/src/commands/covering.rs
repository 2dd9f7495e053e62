use heisenberg_tm::covering::{
    greedy_net, max_multiplicity, multiplicity_bound, verify_cover_lattice, verify_separation, LatticeCoverReport, Net,
    SeparationReport,
};
use heisenberg_tm::{HBox, HPoint};
use serde::Serialize;

use super::{random_point, rng};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Table, Verdict};

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityCount {
    pub r: f64,
    pub observed: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetRun {
    pub net: Net,
    pub separation: SeparationReport,
    pub cover: LatticeCoverReport,
    pub multiplicity: Vec<MultiplicityCount>,
}

pub const COVERING_CSV_HEADER: [&str; 8] = [
    "rho",
    "centers",
    "min_separation",
    "lattice_samples",
    "uncovered",
    "r",
    "max_multiplicity",
    "multiplicity_bound",
];

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<Vec<NetRun>>> {
    let dim = config.dim()?;
    let c = &config.covering;
    if !(c.half_width > 0.0) {
        return Err(CliError::Config(format!(
            "at `covering.half_width`: must be positive, got {}",
            c.half_width
        )));
    }
    if let Some(bad) = c.rho.iter().find(|r| !(**r > 0.0)) {
        return Err(CliError::Config(format!("at `covering.rho`: entries must be positive, got {bad}")));
    }
    let region = HBox::cube(dim.n, c.half_width)?;
    let mut rng = rng(config.seed);
    let samples: Vec<HPoint> = (0..c.multiplicity_samples)
        .map(|_| random_point(&mut rng, dim.n, c.half_width))
        .collect();

    let mut runs = Vec::new();
    let mut verdicts = Vec::new();
    let mut rows = Vec::new();
    for &rho in &c.rho {
        let net = greedy_net(&region, rho)?;
        let separation = verify_separation(&net);
        let cover = verify_cover_lattice(&net, &region, c.refine);
        verdicts.push(Verdict::le(format!("rho = {rho}: separation >= rho"), rho - separation.min_distance, 0.0).with_detail(
            format!("{} centers, min distance {:.6}", net.len(), separation.min_distance),
        ));
        verdicts.push(Verdict::le(format!("rho = {rho}: uncovered lattice samples"), cover.uncovered as f64, 0.0).with_detail(
            format!("{} of {} uncovered", cover.uncovered, cover.samples),
        ));
        let mut multiplicity = Vec::new();
        for r in [rho, 2.0 * rho] {
            let observed = max_multiplicity(&net, r, &samples)?;
            let bound = multiplicity_bound(dim.q, r, rho);
            verdicts.push(Verdict::le(format!("rho = {rho}: multiplicity at r = {r}"), observed as f64, bound));
            rows.push(vec![
                rho.to_string(),
                net.len().to_string(),
                separation.min_distance.to_string(),
                cover.samples.to_string(),
                cover.uncovered.to_string(),
                r.to_string(),
                observed.to_string(),
                bound.to_string(),
            ]);
            multiplicity.push(MultiplicityCount { r, observed, bound });
        }
        runs.push(NetRun {
            net,
            separation,
            cover,
            multiplicity,
        });
    }
    Ok(Outcome {
        command: "covering",
        result: runs,
        verdicts,
        tables: vec![Table::new("covering", &COVERING_CSV_HEADER, rows)],
        notices: Vec::new(),
    })
}
