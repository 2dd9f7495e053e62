use heisenberg_tm::calculus::{fd_hgrad, hgrad};
use heisenberg_tm::cutoff::ball_cutoff;
use heisenberg_tm::hgroup::{compose, dilate, hdist, hnorm};
use heisenberg_tm::HPoint;
use rand::Rng;
use serde::Serialize;

use super::{random_point, rng};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Table, Verdict};

#[derive(Debug, Clone, Serialize)]
pub struct CutoffSweep {
    pub r: f64,
    pub samples: usize,
    pub max_grad: f64,
    pub grad_bound: f64,
    pub range_violations: usize,
    pub plateau_violations: usize,
    pub support_violations: usize,
    /// Largest `r |fd - exact|` over samples away from the kink spheres.
    pub max_fd_diff: f64,
}

pub const CUTOFF_CSV_HEADER: [&str; 8] = [
    "r",
    "samples",
    "max_grad",
    "grad_bound_2_over_r",
    "range_violations",
    "plateau_violations",
    "support_violations",
    "max_fd_diff_times_r",
];

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<Vec<CutoffSweep>>> {
    let dim = config.dim()?;
    let n = dim.n;
    let c = &config.cutoff;
    let center = match &c.center {
        None => {
            let mut v = vec![0.0; 2 * n + 1];
            v[0] = 1.0;
            v[n] = -0.5;
            v[2 * n] = 2.0;
            HPoint::from_flat(n, &v)?
        }
        Some(v) => HPoint::from_flat(n, v).map_err(|e| CliError::Config(format!("at `cutoff.center`: {e}")))?,
    };
    let mut rng = rng(config.seed);
    let mut sweeps = Vec::new();
    let mut verdicts = Vec::new();
    for &r in &c.radii {
        let phi = ball_cutoff(&center, r).map_err(|e| CliError::Config(format!("at `cutoff.radii`: {e}")))?;
        let mut s = CutoffSweep {
            r,
            samples: c.samples,
            max_grad: 0.0,
            grad_bound: 2.0 / r,
            range_violations: 0,
            plateau_violations: 0,
            support_violations: 0,
            max_fd_diff: 0.0,
        };
        for _ in 0..c.samples {
            // gauge distance from the center uniform in (0, 3r)
            let dir = random_point(&mut rng, n, 1.0);
            let unit = dilate(1.0 / hnorm(&dir).max(1e-300), &dir)?;
            let p = compose(&center, &dilate(rng.gen_range(0.0..3.0) * r, &unit)?)?;
            let d = hdist(&p, &center)? / r;
            let v = phi.eval(&p);
            let g = hgrad(&phi, &p)?.norm();
            s.max_grad = s.max_grad.max(g);
            if !(0.0..=1.0).contains(&v) {
                s.range_violations += 1;
            }
            if d <= 1.0 && (v != 1.0 || g != 0.0) {
                s.plateau_violations += 1;
            }
            if d >= 2.0 && v != 0.0 {
                s.support_violations += 1;
            }
            if (d - 1.0).abs() > 0.05 && (d - 2.0).abs() > 0.05 {
                let fd = fd_hgrad(&phi, &p, 1e-5 * r)?;
                let ex = hgrad(&phi, &p)?;
                let diff = fd
                    .a
                    .iter()
                    .chain(&fd.b)
                    .zip(ex.a.iter().chain(&ex.b))
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                s.max_fd_diff = s.max_fd_diff.max(diff * r);
            }
        }
        verdicts.push(Verdict::le(format!("r = {r}: sup |grad phi| <= 2/r"), s.max_grad, 2.0 / r + 1e-9));
        verdicts.push(Verdict::le(format!("r = {r}: values in [0, 1]"), s.range_violations as f64, 0.0));
        verdicts.push(Verdict::le(format!("r = {r}: plateau exact"), s.plateau_violations as f64, 0.0));
        verdicts.push(Verdict::le(format!("r = {r}: zero outside B(c, 2r)"), s.support_violations as f64, 0.0));
        verdicts.push(Verdict::le(format!("r = {r}: chain rule vs finite differences"), s.max_fd_diff, 1e-6));
        sweeps.push(s);
    }
    let rows = sweeps
        .iter()
        .map(|s| {
            vec![
                s.r.to_string(),
                s.samples.to_string(),
                s.max_grad.to_string(),
                s.grad_bound.to_string(),
                s.range_violations.to_string(),
                s.plateau_violations.to_string(),
                s.support_violations.to_string(),
                s.max_fd_diff.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        command: "cutoff-check",
        result: sweeps,
        verdicts,
        tables: vec![Table::new("cutoff", &CUTOFF_CSV_HEADER, rows)],
        notices: Vec::new(),
    })
}
