//! Local-to-global assembly of the functional bound, executed on a concrete
//! field: cover the support by gauge balls `B(ξ_i, r)`, cut off with
//! `φ_i^2`, bound each piece locally and compare the sum with the global value.
//!
//! The second Minkowski term is `(4/r) ‖u‖_Q <= (4/r) τ^{-1/Q}` because
//! `∫|u|^Q <= 1/τ`. Runs assert against `1 + (4/r) τ^{-1/Q}` and also report
//! `1 + 4/(τ r)`, which is smaller when `τ > 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{hgrad, EuclidGrad, ScalarField, Support};
use crate::covering::{greedy_net, max_multiplicity, multiplicity_bound, verify_cover, Net};
use crate::cutoff::{profile, squared_cutoff};
use crate::error::{Error, Result};
use crate::functional::{normalize, singular_weight, tm_functional, zeta_unchecked, LocalCase, NormMode, TMParams};
use crate::hgroup::{dist_ef, hdist_unchecked, GroupDim, HBall, HPoint};
use crate::moser::moser_function;
use crate::quadrature::{field_rule, integrate_many, RuleOptions};

/// Smallest radius returned by [`r_selector`].
pub const R_MIN: f64 = 1.0;

/// `1 + (4/r) τ^{-1/Q}`.
pub fn minkowski_constant(r: f64, tau: f64, dim: &GroupDim) -> f64 {
    1.0 + 4.0 / r * tau.powf(-1.0 / dim.q_f64())
}

/// The radius at which `α (1 + (4/r) τ^{-1/Q})^{Q'} = α_Q (1 - β/Q)`, by
/// bisection to `1e-9` relative. Any larger radius is admissible.
pub fn minimal_radius(params: &TMParams, dim: &GroupDim) -> Result<f64> {
    params.validate(dim)?;
    let thr = dim.threshold(params.beta);
    if params.alpha >= thr {
        return Err(Error::Precondition(format!(
            "alpha = {} is not below the threshold {thr}; no radius is admissible",
            params.alpha
        )));
    }
    let excess = |r: f64| params.alpha * minkowski_constant(r, params.tau, dim).powf(dim.q_prime) - thr;
    let mut hi = 1.0;
    while excess(hi) >= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while excess(lo) < 0.0 {
        if lo < 1e-300 {
            return Ok(0.0);
        }
        lo /= 2.0;
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Twice the minimal admissible radius, and at least [`R_MIN`].
pub fn r_selector(params: &TMParams, dim: &GroupDim) -> Result<f64> {
    Ok((2.0 * minimal_radius(params, dim)?).max(R_MIN))
}

/// `A (1 - ρ^4 / R^4)^3` with `ρ = d(ξ, center)`: a C² bump on `B(center, R)`
/// that is polynomial inside the ball.
pub fn smooth_bump(center: &HPoint, radius: f64, amplitude: f64) -> Result<ScalarField> {
    if !(radius > 0.0) {
        return Err(Error::NonPositive {
            what: "bump radius",
            value: radius,
        });
    }
    let n = center.n();
    let r4 = radius.powi(4);
    let (ce, cp) = (center.clone(), center.clone());
    let support = Support::ball(HBall::new(center.clone(), radius)?);
    Ok(ScalarField::new(n, move |xi| {
        let (e, f) = dist_ef(&ce, xi);
        let s = 1.0 - (e * e + f * f) / r4;
        if s > 0.0 {
            amplitude * s * s * s
        } else {
            0.0
        }
    })
    .with_partials(move |xi| {
        let m = xi.n();
        let (e, f) = dist_ef(&cp, xi);
        let s = 1.0 - (e * e + f * f) / r4;
        let mut g = EuclidGrad::from_elem(0.0, 2 * m + 1);
        if s <= 0.0 {
            return g;
        }
        // d(E^2 + F^2) = 2E dE + 2F dF
        let c = -3.0 * amplitude * s * s / r4;
        for i in 0..m {
            g[i] = c * (4.0 * e * (xi.x[i] - cp.x[i]) - 4.0 * f * cp.y[i]);
            g[m + i] = c * (4.0 * e * (xi.y[i] - cp.y[i]) + 4.0 * f * cp.x[i]);
        }
        g[2 * m] = c * 2.0 * f;
        g
    })
    .with_support(support))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// One bump of radius 1 at the origin.
    SingleBump,
    /// Bumps of radius 1 at the origin and at `(30, 0, 0)`.
    TwoBump,
    /// Moser family member `u_k`.
    Moser { k: u64 },
}

/// The preset field before normalization.
pub fn preset_raw(preset: Preset, dim: &GroupDim) -> Result<ScalarField> {
    let n = dim.n;
    let origin = dim.origin();
    Ok(match preset {
        Preset::SingleBump => smooth_bump(&origin, 1.0, 1.0)?,
        Preset::TwoBump => {
            let mut x = vec![0.0; n];
            x[0] = 30.0;
            let far = HPoint::new(&x, &vec![0.0; n], 0.0)?;
            smooth_bump(&origin, 1.0, 1.0)?.sum(&smooth_bump(&far, 1.0, 1.0)?)
        }
        Preset::Moser { k } => moser_function(k as f64, dim)?,
    })
}

/// The preset field rescaled to unit `‖·‖_{1,τ}`.
pub fn preset_field(preset: Preset, params: &TMParams, dim: &GroupDim, opts: &RuleOptions) -> Result<ScalarField> {
    let origin = dim.origin();
    let raw = preset_raw(preset, dim)?;
    let mut o = opts.clone();
    o.singular_power = params.beta;
    let sp = (params.beta > 0.0).then_some(&origin);
    let rule = field_rule(&raw, sp, &o)?;
    Ok(normalize(&raw, NormMode::TauNorm, params.tau, dim, &rule)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRecord {
    pub index: usize,
    pub center: HPoint,
    /// Branch of the local estimate for `B(ξ_i, 2r)`.
    pub case: LocalCase,
    /// `∫_{B(ξ_i, r)} |ξ|^{-β} ζ(Q, α|u|^{Q'})`.
    pub local_tm_inner: f64,
    /// `∫_{B(ξ_i, 2r)} |ξ|^{-β} ζ(Q, α|φ_i^2 u|^{Q'})`.
    pub local_tm: f64,
    pub local_tm_error: f64,
    /// `∫|∇(φ_i^2 u)|^Q`.
    pub local_grad_q: f64,
    /// `‖∇(φ_i^2 u)‖_Q`.
    pub minkowski_norm: f64,
    /// `‖∇u‖_{Q, B(ξ_i, 2r)} + (4/r) ‖u‖_{Q, B(ξ_i, 2r)}`.
    pub minkowski_triangle: f64,
    /// `∫|∇ũ_i|^Q` with `ũ_i = φ_i^2 u / (1 + (4/r) τ^{-1/Q})`.
    pub scaled_grad_q: f64,
    /// `local_tm / local_grad_q`, the constant of the local inequality.
    pub local_constant: f64,
    /// `2^Q ∫φ_i|∇u|^Q + (8/r)^Q ∫φ_i|u|^Q`.
    pub pointwise_bound: f64,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Check {
    fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: lhs <= rhs + tol,
            lhs,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueRun {
    pub params: TMParams,
    pub r: f64,
    pub minimal_r: Option<f64>,
    pub minkowski_constant: f64,
    /// The constant `1 + 4/(τ r)` as printed in the source derivation.
    pub minkowski_constant_printed: f64,
    pub net: Net,
    pub per_ball: Vec<BallRecord>,
    pub global_tm: f64,
    pub global_tm_error: f64,
    pub grad_power: f64,
    pub lq_power: f64,
    pub tau_norm: f64,
    pub sum_local_tm_inner: f64,
    pub sum_local_tm: f64,
    pub grad_sum: f64,
    /// `96^Q ∫|∇u|^Q + (384/r)^Q ∫|u|^Q`.
    pub grad_sum_bound: f64,
    pub support_samples: usize,
    pub uncovered_samples: usize,
    pub max_multiplicity_2r: usize,
    pub multiplicity_bound_2r: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const GLUE_CSV_HEADER: [&str; 5] = ["ball", "case", "local_tm", "minkowski_norm", "bound_slack"];

impl GlueRun {
    /// Per-ball summary; the slack is `1 + (4/r) τ^{-1/Q} - ‖∇(φ_i^2 u)‖_Q`.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.per_ball
            .iter()
            .map(|b| {
                vec![
                    b.index.to_string(),
                    format!("{:?}", b.case).to_lowercase(),
                    b.local_tm.to_string(),
                    b.minkowski_norm.to_string(),
                    (self.minkowski_constant - b.minkowski_norm).to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueOptions {
    pub rule: RuleOptions,
    /// Tolerance on the `τ`-norm precondition.
    pub norm_slack: f64,
}

impl Default for GlueOptions {
    fn default() -> Self {
        Self {
            // the ζ integrand of a sliced bump is a high-degree polynomial
            rule: RuleOptions {
                base_order: 12,
                ..RuleOptions::default()
            },
            norm_slack: 1e-9,
        }
    }
}

// Combined tolerance for an inequality between two quadrature results.
fn tol(errs: f64, scale: f64) -> f64 {
    errs + 1e-10 * scale.abs()
}

/// Runs the covering/cutoff/local-estimate chain on `u` and checks each
/// inequality of the assembly. When `r` is `None` it is chosen by
/// [`r_selector`].
pub fn glue_experiment(
    u: &ScalarField,
    params: &TMParams,
    dim: &GroupDim,
    r: Option<f64>,
    opts: &GlueOptions,
) -> Result<GlueRun> {
    params.validate(dim)?;
    let q = dim.q as u32;
    let qf = dim.q_f64();
    let qi = q as i32;
    let qp = dim.q_prime;
    let TMParams { alpha, beta, tau } = *params;
    let thr = dim.threshold(beta);

    let minimal_r = if alpha < thr { Some(minimal_radius(params, dim)?) } else { None };
    let r = match r {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::NonPositive { what: "gluing radius", value: r }),
        None => r_selector(params, dim)?,
    };
    let support = u
        .support()
        .ok_or_else(|| Error::Precondition("field has no declared support".into()))?
        .clone();

    let origin = dim.origin();
    let sp = (beta > 0.0).then_some(&origin);
    let mut ropts = opts.rule.clone();
    ropts.singular_power = beta;
    let rule = field_rule(u, sp, &ropts)?;
    let global = tm_functional(u, params, dim, &rule)?;
    if global.tau_norm > 1.0 + opts.norm_slack {
        return Err(Error::Precondition(format!(
            "tau-norm {} exceeds one",
            global.tau_norm
        )));
    }
    let grad_power = global.grad_norm_q.powi(qi);
    let lq_power = (global.tau_norm.powi(qi) - grad_power).max(0.0) / tau;

    let bbox = support.bounding_box().ok_or(Error::EmptyRegion)?;
    let net = greedy_net(&bbox, r)?;
    let active: Vec<usize> = (0..net.len())
        .filter(|&i| {
            support
                .balls
                .iter()
                .any(|b| hdist_unchecked(&net.centers[i], &b.center) < 2.0 * r + b.radius)
        })
        .collect();

    let kconst = minkowski_constant(r, tau, dim);
    let per_ball: Vec<BallRecord> = active
        .par_iter()
        .map(|&i| {
            let c = net.centers[i].clone();
            let mut o = ropts.clone();
            o.kinks.push(HBall::new(c.clone(), r)?);
            o.kinks.push(HBall::new(c.clone(), 2.0 * r)?);
            let rule_i = field_rule(u, sp, &o)?;
            let w = squared_cutoff(&c, r)?.product(u);
            let est = integrate_many(
                7,
                |p, out| {
                    out.fill(0.0);
                    let v = u.eval(p);
                    if v == 0.0 {
                        return;
                    }
                    let d = hdist_unchecked(p, &c);
                    if d >= 2.0 * r {
                        return;
                    }
                    let wt = singular_weight(beta, p);
                    let phi = profile(d / r);
                    let wv = phi * phi * v;
                    let gu = hgrad(u, p).map(|g| g.norm()).unwrap_or(f64::NAN).powi(qi);
                    let gw = hgrad(&w, p).map(|g| g.norm()).unwrap_or(f64::NAN).powi(qi);
                    let uq = v.abs().powi(qi);
                    out[0] = wt * zeta_unchecked(q, alpha * wv.abs().powf(qp));
                    if d < r {
                        out[1] = wt * zeta_unchecked(q, alpha * v.abs().powf(qp));
                    }
                    out[2] = gw;
                    out[3] = gu;
                    out[4] = uq;
                    out[5] = phi * gu;
                    out[6] = phi * uq;
                },
                &rule_i,
            )?;
            let val = |j: usize| est[j].value.max(0.0);
            let minkowski_norm = val(2).powf(1.0 / qf);
            Ok(BallRecord {
                index: i,
                case: LocalCase::of(&HBall::new(c.clone(), 2.0 * r)?),
                center: c,
                local_tm_inner: val(1),
                local_tm: val(0),
                local_tm_error: est[0].error,
                local_grad_q: val(2),
                minkowski_norm,
                minkowski_triangle: val(3).powf(1.0 / qf) + 4.0 / r * val(4).powf(1.0 / qf),
                scaled_grad_q: val(2) / kconst.powf(qf),
                local_constant: if val(2) > 0.0 { val(0) / val(2) } else { 0.0 },
                pointwise_bound: 2f64.powf(qf) * val(5) + (8.0 / r).powf(qf) * val(6),
                errors: est.iter().map(|e| e.error).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let sum_local_tm_inner: f64 = per_ball.iter().map(|b| b.local_tm_inner).sum();
    let sum_local_tm: f64 = per_ball.iter().map(|b| b.local_tm).sum();
    let grad_sum: f64 = per_ball.iter().map(|b| b.local_grad_q).sum();
    let err_inner: f64 = per_ball.iter().map(|b| b.errors[1]).sum();
    let err_outer: f64 = per_ball.iter().map(|b| b.errors[0]).sum();
    let err_grad: f64 = per_ball.iter().map(|b| b.errors[2]).sum();
    let grad_sum_bound = 96f64.powf(qf) * grad_power + (384.0 / r).powf(qf) * lq_power;

    let samples: Vec<HPoint> = rule
        .nodes
        .iter()
        .filter(|p| u.eval(p) != 0.0)
        .cloned()
        .collect();
    let cover = verify_cover(&net, &samples);
    let max_mult = max_multiplicity(&net, 2.0 * r, &samples)?;
    let mult_bound = multiplicity_bound(dim.q, 2.0 * r, r);

    let mut checks = vec![
        Check {
            name: "support covered by B(xi_i, r)".into(),
            passed: cover.passed,
            lhs: cover.uncovered as f64,
            rhs: 0.0,
        },
        Check::le("multiplicity at 2r", max_mult as f64, mult_bound, 0.0),
        Check::le(
            "global <= sum over B(xi_i, r)",
            global.tm_value,
            sum_local_tm_inner,
            tol(global.quadrature_error + err_inner, sum_local_tm_inner),
        ),
        Check::le(
            "sum over B(xi_i, r) <= sum over B(xi_i, 2r)",
            sum_local_tm_inner,
            sum_local_tm,
            tol(err_inner + err_outer, sum_local_tm),
        ),
        Check::le(
            "gradient sum bound",
            grad_sum,
            grad_sum_bound,
            tol(err_grad, grad_sum_bound),
        ),
    ];
    if let Some(m) = minimal_r {
        checks.push(Check::le("r admissible", m, r, 0.0));
    } else {
        checks.push(Check {
            name: "r admissible".into(),
            passed: false,
            lhs: alpha,
            rhs: thr,
        });
    }
    for b in &per_ball {
        let e = &b.errors;
        let name = |s: &str| format!("ball {}: {s}", b.index);
        // errors of ∫g translate to errors of g^{1/Q} by the derivative of the root
        let root_err = |v: f64, err: f64| if v > 0.0 { err * v.powf(1.0 / qf - 1.0) / qf } else { err.powf(1.0 / qf) };
        checks.push(Check::le(
            &name("Minkowski triangle form"),
            b.minkowski_norm,
            b.minkowski_triangle,
            tol(root_err(b.local_grad_q, e[2]) + root_err(b.local_grad_q.max(e[3]), e[3]) + 4.0 / r * e[4].powf(1.0 / qf), 1.0),
        ));
        checks.push(Check::le(&name("Minkowski bound"), b.minkowski_norm, kconst, 1e-6));
        checks.push(Check::le(
            &name("scaled gradient energy"),
            b.scaled_grad_q,
            1.0,
            tol(e[2] / kconst.powf(qf), 1.0),
        ));
        checks.push(Check::le(
            &name("two-term power bound"),
            b.local_grad_q,
            b.pointwise_bound,
            tol(e[2] + 2f64.powf(qf) * e[5] + (8.0 / r).powf(qf) * e[6], b.pointwise_bound),
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(GlueRun {
        params: *params,
        r,
        minimal_r,
        minkowski_constant: kconst,
        minkowski_constant_printed: 1.0 + 4.0 / (tau * r),
        net,
        per_ball,
        global_tm: global.tm_value,
        global_tm_error: global.quadrature_error,
        grad_power,
        lq_power,
        tau_norm: global.tau_norm,
        sum_local_tm_inner,
        sum_local_tm,
        grad_sum,
        grad_sum_bound,
        support_samples: samples.len(),
        uncovered_samples: cover.uncovered,
        max_multiplicity_2r: max_mult,
        multiplicity_bound_2r: mult_bound,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::fd_hgrad;
    use approx::assert_relative_eq;

    fn dim1() -> GroupDim {
        GroupDim::new(1).unwrap()
    }

    #[test]
    fn selector_matches_closed_form() {
        let d = dim1();
        let p = TMParams::new(4.0, 0.0, 1.0);
        // r = 4 τ^{-1/Q} / ((thr/α)^{1/Q'} - 1)
        let closed = 4.0 / ((d.alpha_q / 4.0).powf(1.0 / d.q_prime) - 1.0);
        let m = minimal_radius(&p, &d).unwrap();
        assert_relative_eq!(m, closed, max_relative = 1e-8);
        assert!((m - 5.178).abs() < 0.01);
        assert_relative_eq!(r_selector(&p, &d).unwrap(), 2.0 * m);
        let tiny = TMParams::new(1e-9, 0.0, 1.0);
        assert_eq!(r_selector(&tiny, &d).unwrap(), R_MIN);
        let at = TMParams::new(d.alpha_q, 0.0, 1.0);
        assert!(r_selector(&at, &d).is_err());
    }

    #[test]
    fn bump_partials_match_differences() {
        let c = HPoint::h1(0.3, -0.2, 0.1);
        let b = smooth_bump(&c, 1.0, 2.0).unwrap();
        for p in [HPoint::h1(0.5, 0.1, 0.2), HPoint::h1(0.0, -0.6, -0.3)] {
            let g = crate::calculus::hgrad(&b, &p).unwrap();
            let fd = fd_hgrad(&b, &p, 1e-5).unwrap();
            assert!((g.a[0] - fd.a[0]).abs() < 1e-7 && (g.b[0] - fd.b[0]).abs() < 1e-7);
        }
        assert_eq!(b.eval(&HPoint::h1(3.0, 0.0, 0.0)), 0.0);
        assert_relative_eq!(b.eval(&c), 2.0);
    }

    #[test]
    fn single_bump_is_one_ball() {
        let d = dim1();
        let p = TMParams::new(0.5 * d.alpha_q, 0.0, 1.0);
        let opts = GlueOptions::default();
        let u = preset_field(Preset::SingleBump, &p, &d, &opts.rule).unwrap();
        let run = glue_experiment(&u, &p, &d, Some(10.0), &opts).unwrap();
        assert_eq!(run.per_ball.len(), 1);
        let tol = run.global_tm_error + run.per_ball[0].local_tm_error + 1e-12;
        assert!((run.global_tm - run.sum_local_tm).abs() <= tol);
        assert!(run.passed, "{:#?}", run.checks);
    }

    #[test]
    fn two_bumps_pass_every_check() {
        let d = dim1();
        let p = TMParams::new(0.5 * d.alpha_q, 0.0, 1.0);
        let opts = GlueOptions::default();
        let u = preset_field(Preset::TwoBump, &p, &d, &opts.rule).unwrap();
        let run = glue_experiment(&u, &p, &d, Some(10.0), &opts).unwrap();
        assert!(run.per_ball.len() >= 2);
        assert!(run.global_tm <= run.sum_local_tm);
        for b in &run.per_ball {
            assert!(b.minkowski_norm <= 1.0 + 0.4 + 1e-6);
        }
        assert!(run.passed, "{:#?}", run.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn unnormalized_field_is_rejected() {
        let d = dim1();
        let p = TMParams::new(1.0, 0.0, 1.0);
        let u = smooth_bump(&d.origin(), 1.0, 10.0).unwrap();
        assert!(matches!(
            glue_experiment(&u, &p, &d, Some(10.0), &GlueOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
