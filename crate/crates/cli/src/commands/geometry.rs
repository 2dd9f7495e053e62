//! Property sweep over the group law, gauge, distance gradient and the
//! vector-field commutators.

use heisenberg_tm::calculus::{commutator_residual, dist_gradient, polynomial_corpus, ScalarField};
use heisenberg_tm::hgroup::{compose, dilate, hdist, hnorm, inverse, product_norm_ratio, quasi_triangle_defect};
use heisenberg_tm::quadrature::{box_rule_with, integrate, RuleOptions};
use heisenberg_tm::{HBall, HPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{random_point, rng};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Table, Verdict};

#[derive(Debug, Clone, Default, Serialize)]
pub struct GeometrySummary {
    pub samples: usize,
    pub associativity_max: f64,
    pub inverse_max: f64,
    pub homogeneity_max: f64,
    pub left_invariance_max: f64,
    pub symmetry_max: f64,
    pub gauge_identity_max_rel: f64,
    pub grad_formula_max_rel: f64,
    pub grad_norm_max: f64,
    pub equality_case_max_dev: f64,
    pub axis_case_max: f64,
    pub quasi_triangle_max: f64,
    pub product_norm_max: f64,
    pub commutator_points: usize,
    pub commutator_exact_max: f64,
    pub commutator_fd_max: f64,
    pub unit_ball_volume: Option<f64>,
    pub volume_scaling_max_rel: Option<f64>,
}

fn bump(max: &mut f64, v: f64) {
    if v > *max || v.is_nan() {
        *max = v;
    }
}

pub fn run(config: &ExperimentConfig) -> CliResult<Outcome<GeometrySummary>> {
    let dim = config.dim()?;
    let g = &config.geometry;
    let n = dim.n;
    let l = g.half_width;
    if !(l > 0.0) {
        return Err(CliError::Config(format!("at `geometry.half_width`: must be positive, got {l}")));
    }
    let mut rng = rng(config.seed);
    let mut s = GeometrySummary {
        samples: g.samples,
        commutator_points: g.commutator_points,
        ..GeometrySummary::default()
    };
    let mut notices = Vec::new();

    for _ in 0..g.samples {
        let a = random_point(&mut rng, n, l);
        let b = random_point(&mut rng, n, l);
        let c = random_point(&mut rng, n, l);
        // points at mixed scales stress the quasi-triangle and product bounds
        let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
        let c_small = dilate(scale, &c)?;

        let ab_c = compose(&compose(&a, &b)?, &c)?;
        let a_bc = compose(&a, &compose(&b, &c)?)?;
        let diff = ab_c.to_flat().iter().zip(a_bc.to_flat()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        bump(&mut s.associativity_max, diff);
        let id = compose(&a, &inverse(&a))?;
        bump(&mut s.inverse_max, id.to_flat().iter().map(|v| v.abs()).fold(0.0, f64::max));

        let lambda = rng.gen_range(1e-3..10.0);
        let na = hnorm(&a);
        bump(&mut s.homogeneity_max, (hnorm(&dilate(lambda, &a)?) - lambda * na).abs() / (1.0 + lambda * na));

        let dab = hdist(&a, &b)?;
        let moved = hdist(&compose(&c, &a)?, &compose(&c, &b)?)?;
        bump(&mut s.left_invariance_max, (moved - dab).abs() / (1.0 + dab));
        bump(&mut s.symmetry_max, (hdist(&b, &a)? - dab).abs() / (1.0 + dab));

        let parts = dist_gradient(&b, &a)?;
        let rho4 = hnorm(&compose(&inverse(&b), &a)?).powi(4);
        bump(&mut s.gauge_identity_max_rel, (parts.e * parts.e + parts.f * parts.f - rho4).abs() / rho4);
        let gn = parts.grad.norm();
        let formula = parts.e.sqrt() / parts.rho;
        bump(&mut s.grad_formula_max_rel, (gn - formula).abs() / formula.max(f64::MIN_POSITIVE));
        bump(&mut s.grad_norm_max, gn);

        // F = 0 attains |∇ρ| = 1; the vertical axis through the center gives 0
        let flat_pt = on_flat_sheet(&b, &a);
        let eq = dist_gradient(&b, &flat_pt)?;
        bump(&mut s.equality_case_max_dev, (eq.grad.norm() - 1.0).abs());
        let mut axis_pt = b.clone();
        axis_pt.t += rng.gen_range(0.1..l);
        bump(&mut s.axis_case_max, dist_gradient(&b, &axis_pt)?.grad.norm());

        for (p, q, r) in [(&a, &b, &c), (&a, &b, &c_small), (&a, &c_small, &b)] {
            let d = quasi_triangle_defect(p, q, r).map_err(|e| CliError::Invariant(format!("quasi-triangle defect: {e}")))?;
            bump(&mut s.quasi_triangle_max, d);
        }
        bump(&mut s.product_norm_max, product_norm_ratio(&a, &b)?);
        bump(&mut s.product_norm_max, product_norm_ratio(&a, &c_small)?);
    }
    if g.inject_duplicates {
        let a = random_point(&mut rng, n, l);
        quasi_triangle_defect(&a, &a, &a).map_err(|e| CliError::Invariant(format!("quasi-triangle defect: {e}")))?;
    }

    commutators(config, &mut rng, &mut s)?;

    if n == 1 {
        volumes(&dim, &mut s)?;
    } else {
        notices.push(format!(
            "n = {n}: quadrature-dependent volume checks skipped (only quasi-random rules exist above n = 1)"
        ));
    }

    let mut v = vec![
        Verdict::le("associativity (abs)", s.associativity_max, 1e-12),
        Verdict::le("inverse law (abs)", s.inverse_max, 0.0),
        Verdict::le("dilation homogeneity (rel)", s.homogeneity_max, 1e-12),
        Verdict::le("left invariance of distance (rel)", s.left_invariance_max, 1e-12),
        Verdict::le("distance symmetry (rel)", s.symmetry_max, 1e-12),
        Verdict::le("E^2 + F^2 = rho^4 (rel)", s.gauge_identity_max_rel, 1e-10),
        Verdict::le("|grad rho| = sqrt(E)/rho (rel)", s.grad_formula_max_rel, 1e-10),
        Verdict::le("|grad rho| <= 1", s.grad_norm_max, 1.0 + 1e-12),
        Verdict::le("|grad rho| = 1 where F = 0", s.equality_case_max_dev, 1e-12),
        Verdict::le("|grad rho| = 0 on the center axis", s.axis_case_max, 1e-12),
        Verdict::le("quasi-triangle defect <= 3", s.quasi_triangle_max, 3.0),
        Verdict::le("product norm ratio <= 3", s.product_norm_max, 3.0),
        Verdict::le("commutator residual, exact second derivatives", s.commutator_exact_max, 1e-6),
    ];
    if let (Some(vol), Some(sc)) = (s.unit_ball_volume, s.volume_scaling_max_rel) {
        let target = dim.unit_ball_volume;
        v.push(
            Verdict::le("unit ball volume (rel)", (vol - target).abs() / target, 1e-4)
                .with_detail(format!("{vol:.9} vs {target:.9}")),
        );
        v.push(Verdict::le("volume scaling r^Q (rel)", sc, 1e-6));
    }
    let rows = vec![
        vec!["quasi_triangle_max".into(), s.quasi_triangle_max.to_string()],
        vec!["product_norm_max".into(), s.product_norm_max.to_string()],
        vec!["grad_norm_max".into(), s.grad_norm_max.to_string()],
        vec!["commutator_fd_max".into(), s.commutator_fd_max.to_string()],
    ];
    Ok(Outcome {
        command: "geometry-check",
        tables: vec![Table::new("geometry_extremes", &["quantity", "value"], rows)],
        result: s,
        verdicts: v,
        notices,
    })
}

/// The point with the same horizontal part as `p` and `F = 0` relative to `center`.
fn on_flat_sheet(center: &HPoint, p: &HPoint) -> HPoint {
    let mut q = p.clone();
    let cross: f64 = (0..p.n()).map(|i| p.x[i] * center.y[i] - p.y[i] * center.x[i]).sum();
    q.t = center.t + 2.0 * cross;
    q
}

fn commutators(config: &ExperimentConfig, rng: &mut ChaCha8Rng, s: &mut GeometrySummary) -> CliResult<()> {
    let n = config.n;
    let corpus = polynomial_corpus(n);
    // the same polynomials evaluated without derivative data exercise the
    // nested finite-difference path
    let bare: Vec<ScalarField> = corpus
        .iter()
        .map(|(_, f)| {
            let f = f.clone();
            ScalarField::new(n, move |p| f.eval(p))
        })
        .collect();
    for _ in 0..config.geometry.commutator_points {
        let p = random_point(rng, n, 2.0);
        for ((_, f), b) in corpus.iter().zip(&bare) {
            for i in 0..n {
                for j in 0..n {
                    bump(&mut s.commutator_exact_max, commutator_residual(i, j, f, &p, None)?.abs());
                    bump(&mut s.commutator_fd_max, commutator_residual(i, j, b, &p, None)?.abs());
                }
            }
        }
    }
    Ok(())
}

/// Box quadrature of the ball indicator, independent of the closed form.
fn volumes(dim: &heisenberg_tm::GroupDim, s: &mut GeometrySummary) -> CliResult<()> {
    let origin = dim.origin();
    let measure = |r: f64| -> CliResult<f64> {
        let ball = HBall::new(origin.clone(), r)?;
        let opts = RuleOptions {
            kinks: vec![ball.clone()],
            levels: 0,
            ..RuleOptions::default()
        };
        let rule = box_rule_with(&ball.bounding_box(), None, &opts)?;
        Ok(integrate(|p| if hnorm(p) < r { 1.0 } else { 0.0 }, &rule)?.value)
    };
    let unit = measure(1.0)?;
    let mut worst: f64 = 0.0;
    for r in [0.5, 2.0, 3.0] {
        let ratio = measure(r)? / unit;
        let want = r.powi(dim.q as i32);
        worst = worst.max((ratio - want).abs() / want);
    }
    s.unit_ball_volume = Some(unit);
    s.volume_scaling_max_rel = Some(worst);
    Ok(())
}
