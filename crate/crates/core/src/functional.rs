//! The truncated exponential, the Sobolev-type norms and the singular
//! Trudinger-Moser functional
//!
//! ```text
//! TM(u) = ∫ |ξ|_h^{-β} ζ(Q, α |u|^{Q'}) dξ,   ζ(m, s) = e^s - Σ_{k=0}^{m-2} s^k / k!
//! ```

use serde::{Deserialize, Serialize};

use crate::calculus::{hgrad, ScalarField};
use crate::error::{Error, Result};
use crate::hgroup::{hdist_unchecked, hnorm, GroupDim, HBall, HPoint};
use crate::quadrature::radial::Estimate;
use crate::quadrature::{integrate_many, QuadratureRule, Region};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TMParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl TMParams {
    pub fn new(alpha: f64, beta: f64, tau: f64) -> Self {
        Self { alpha, beta, tau }
    }

    pub fn validate(&self, dim: &GroupDim) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::NonPositive {
                what: "alpha",
                value: self.alpha,
            });
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::NonPositive {
                what: "tau",
                value: self.tau,
            });
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.beta >= dim.q_f64() {
            return Err(Error::NonIntegrable(format!(
                "beta = {} is not below Q = {}",
                self.beta, dim.q
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub tm_value: f64,
    pub grad_norm_q: f64,
    pub tau_norm: f64,
    pub params: TMParams,
    /// Absolute error estimate of `tm_value`.
    pub quadrature_error: f64,
    /// Error estimates of `∫|∇u|^Q` and `∫|u|^Q`.
    pub grad_power_error: f64,
    pub lq_power_error: f64,
}

pub const REPORT_CSV_HEADER: [&str; 8] = [
    "alpha",
    "beta",
    "tau",
    "k",
    "tm_value",
    "grad_norm",
    "tau_norm",
    "quad_error",
];

impl FunctionalReport {
    /// One CSV record; `k` is the family index when there is one.
    pub fn csv_row(&self, k: Option<f64>) -> Vec<String> {
        vec![
            self.params.alpha.to_string(),
            self.params.beta.to_string(),
            self.params.tau.to_string(),
            k.map(|v| v.to_string()).unwrap_or_default(),
            self.tm_value.to_string(),
            self.grad_norm_q.to_string(),
            self.tau_norm.to_string(),
            self.quadrature_error.to_string(),
        ]
    }
}

/// Tail series `Σ_{k >= m-1} s^k / k!`, accurate for small `s`.
pub fn zeta_series(m: u32, s: f64) -> f64 {
    let k0 = m - 1;
    let mut term = 1.0;
    for k in 1..=k0 {
        term *= s / k as f64;
    }
    let mut sum = term;
    let mut k = k0;
    loop {
        k += 1;
        term *= s / k as f64;
        if term <= f64::EPSILON * 0.25 * sum || term == 0.0 {
            break;
        }
        sum += term;
    }
    sum
}

/// `e^s` minus the partial sum, with Neumaier-compensated subtraction.
pub fn zeta_exp_minus_sum(m: u32, s: f64) -> f64 {
    let mut sum = s.exp();
    let mut comp = 0.0;
    let mut term = 1.0;
    for k in 0..=(m as i64 - 2) {
        if k > 0 {
            term *= s / k as f64;
        }
        let t = sum - term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) - term;
        } else {
            comp += (-term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ζ(m, s)`, switching from the tail series to `exp` at `s = m`.
pub fn zeta(m: u32, s: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("zeta needs m >= 2, got {m}")));
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("zeta needs s >= 0, got {s}")));
    }
    Ok(zeta_unchecked(m, s))
}

#[inline]
pub(crate) fn zeta_unchecked(m: u32, s: f64) -> f64 {
    if s <= m as f64 {
        zeta_series(m, s)
    } else {
        zeta_exp_minus_sum(m, s)
    }
}

fn grad_norm_or_nan(u: &ScalarField, p: &HPoint) -> f64 {
    hgrad(u, p).map(|g| g.norm()).unwrap_or(f64::NAN)
}

/// `∫|∇u|^Q` and `∫|u|^Q` in one pass.
pub fn norm_powers(u: &ScalarField, q: u32, rule: &QuadratureRule) -> Result<(Estimate, Estimate)> {
    let qi = q as i32;
    let est = integrate_many(
        2,
        |p, out| {
            let v = u.eval(p);
            out[0] = grad_norm_or_nan(u, p).powi(qi);
            out[1] = v.abs().powi(qi);
        },
        rule,
    )?;
    Ok((est[0], est[1]))
}

/// `(∫|∇_H u|^Q)^{1/Q}`.
pub fn grad_norm_q(u: &ScalarField, dim: &GroupDim, rule: &QuadratureRule) -> Result<f64> {
    let (g, _) = norm_powers(u, dim.q as u32, rule)?;
    Ok(g.value.max(0.0).powf(1.0 / dim.q_f64()))
}

/// `(∫ |∇_H u|^Q + τ |u|^Q)^{1/Q}`.
pub fn tau_norm(u: &ScalarField, tau: f64, dim: &GroupDim, rule: &QuadratureRule) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::NonPositive { what: "tau", value: tau });
    }
    let (g, l) = norm_powers(u, dim.q as u32, rule)?;
    Ok((g.value + tau * l.value).max(0.0).powf(1.0 / dim.q_f64()))
}

fn check_singular(params: &TMParams, rule: &QuadratureRule) -> Result<()> {
    if params.beta > 0.0 {
        let refined = rule.singular_point.as_ref().is_some_and(|s| s.is_origin());
        let o = HPoint::origin(rule.n);
        let away = rule.regions.iter().all(|r| match r {
            Region::Box(b) => !b.contains(&o),
            Region::Ball(b) => !b.contains(&o),
        });
        if !refined && !away {
            return Err(Error::Precondition(
                "beta > 0 needs a rule refined toward the origin".into(),
            ));
        }
    }
    Ok(())
}

/// Weight `|ξ|_h^{-β}`; `β = 0` gives 1 everywhere, including the origin.
#[inline]
pub(crate) fn singular_weight(beta: f64, p: &HPoint) -> f64 {
    if beta == 0.0 {
        1.0
    } else {
        hnorm(p).powf(-beta)
    }
}

/// The functional together with both norms of `u`. No normalization is applied.
pub fn tm_functional(u: &ScalarField, params: &TMParams, dim: &GroupDim, rule: &QuadratureRule) -> Result<FunctionalReport> {
    params.validate(dim)?;
    check_singular(params, rule)?;
    let q = dim.q as u32;
    let qi = q as i32;
    let qp = dim.q_prime;
    let TMParams { alpha, beta, tau } = *params;
    let est = integrate_many(
        3,
        |p, out| {
            let v = u.eval(p).abs();
            out[0] = if v == 0.0 {
                0.0
            } else {
                singular_weight(beta, p) * zeta_unchecked(q, alpha * v.powf(qp))
            };
            out[1] = grad_norm_or_nan(u, p).powi(qi);
            out[2] = v.powi(qi);
        },
        rule,
    )?;
    let inv_q = 1.0 / dim.q_f64();
    Ok(FunctionalReport {
        tm_value: est[0].value.max(0.0),
        grad_norm_q: est[1].value.max(0.0).powf(inv_q),
        tau_norm: (est[1].value + tau * est[2].value).max(0.0).powf(inv_q),
        params: *params,
        quadrature_error: est[0].error,
        grad_power_error: est[1].error,
        lq_power_error: est[2].error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMode {
    GradientOnly,
    TauNorm,
}

/// `u` rescaled so the selected norm is one, with the scale used.
pub fn normalize(
    u: &ScalarField,
    mode: NormMode,
    tau: f64,
    dim: &GroupDim,
    rule: &QuadratureRule,
) -> Result<(ScalarField, f64)> {
    let norm = match mode {
        NormMode::GradientOnly => grad_norm_q(u, dim, rule)?,
        NormMode::TauNorm => tau_norm(u, tau, dim, rule)?,
    };
    if !(norm > 0.0) {
        return Err(Error::Undefined("cannot normalize a field with zero norm"));
    }
    let scale = 1.0 / norm;
    Ok((u.scaled(scale), scale))
}

/// Which branch of the local estimate applies to a ball `B(ξ_0, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalCase {
    /// `|ξ_0|_h > 6r`: the weight is bounded by `r^{-β}` on the ball.
    Far,
    /// `|ξ_0|_h <= 6r`: the ball lies in `|ξ|_h < 21r`.
    Near,
}

impl LocalCase {
    pub fn of(ball: &HBall) -> Self {
        if hnorm(&ball.center) > 6.0 * ball.radius {
            LocalCase::Far
        } else {
            LocalCase::Near
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRatio {
    /// `TM(u) / ∫|∇u|^Q`.
    pub ratio: f64,
    pub tm_value: f64,
    pub grad_power: f64,
    pub quadrature_error: f64,
    pub case: LocalCase,
}

/// The constant bounded by the local inequality, `TM(u) / ∫|∇u|^Q`, for `u`
/// supported in `ball` with `∫|∇u|^Q <= 1` and `α <= α_Q (1 - β/Q)`.
pub fn local_ratio(
    u: &ScalarField,
    ball: &HBall,
    params: &TMParams,
    dim: &GroupDim,
    rule: &QuadratureRule,
) -> Result<LocalRatio> {
    params.validate(dim)?;
    let thr = dim.threshold(params.beta);
    if params.alpha > thr * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "alpha = {} exceeds the local threshold {thr}",
            params.alpha
        )));
    }
    let support = u
        .support()
        .ok_or_else(|| Error::Precondition("field has no declared support".into()))?;
    let slack = 1e-12 * (1.0 + ball.radius);
    let inside = support
        .balls
        .iter()
        .all(|b| hdist_unchecked(&b.center, &ball.center) + b.radius <= ball.radius + slack);
    if !inside {
        return Err(Error::Precondition("field support is not inside the ball".into()));
    }
    let rep = tm_functional(u, params, dim, rule)?;
    let grad_power = rep.grad_norm_q.powi(dim.q as i32);
    if !(grad_power > 0.0) {
        return Err(Error::Undefined("local ratio of a field with zero gradient"));
    }
    if grad_power > 1.0 + 1e-9 + rep.grad_power_error {
        return Err(Error::Precondition(format!(
            "gradient energy {grad_power} exceeds one"
        )));
    }
    Ok(LocalRatio {
        ratio: rep.tm_value / grad_power,
        tm_value: rep.tm_value,
        grad_power,
        quadrature_error: rep.quadrature_error,
        case: LocalCase::of(ball),
    })
}
