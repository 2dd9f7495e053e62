//! Concentrating log-profile family and the sharpness scan.
//!
//! With `c = σ_Q^{-1/Q}` and `ρ = |ξ|_h`,
//!
//! ```text
//! u_k = c (log k)^{(Q-1)/Q}            ρ <= 1/k
//!     = c log(1/ρ) / (log k)^{1/Q}     1/k < ρ <= 1
//!     = 0                              ρ > 1
//! ```
//!
//! and `∫|∇_H u_k|^Q = 1` because `∫ ρ^{-Q} |∇_H ρ|^Q` over the shell
//! `a < ρ < b` equals `σ_Q log(b/a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{dist_euclidean_partials, EuclidGrad, ScalarField, Support};
use crate::error::{Error, Result};
use crate::functional::{singular_weight, tm_functional, zeta_unchecked, FunctionalReport, NormMode, TMParams};
use crate::hgroup::{hnorm, GroupDim, HBall};
use crate::quadrature::{field_rule, integrate_many, QuadratureRule, RuleOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserFamily {
    /// Concentration index; the plateau is `ρ <= 1/k`.
    pub k: f64,
    pub dim: GroupDim,
}

impl MoserFamily {
    pub fn new(k: f64, dim: &GroupDim) -> Result<Self> {
        if !(k >= 2.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("Moser index must be >= 2, got {k}")));
        }
        Ok(Self { k, dim: dim.clone() })
    }

    fn amplitude(&self) -> f64 {
        self.dim.sigma_q.powf(-1.0 / self.dim.q_f64())
    }

    pub fn profile(&self, rho: f64) -> f64 {
        let q = self.dim.q_f64();
        let lk = self.k.ln();
        let c = self.amplitude();
        if rho <= 1.0 / self.k {
            c * lk.powf((q - 1.0) / q)
        } else if rho <= 1.0 {
            c * (1.0 / rho).ln() / lk.powf(1.0 / q)
        } else {
            0.0
        }
    }

    /// `d/dρ` of the profile; zero on the plateau and outside the unit ball.
    pub fn profile_deriv(&self, rho: f64) -> f64 {
        if rho <= 1.0 / self.k || rho > 1.0 {
            0.0
        } else {
            -self.amplitude() / (rho * self.k.ln().powf(1.0 / self.dim.q_f64()))
        }
    }

    pub fn kink_radii(&self) -> [f64; 2] {
        [1.0 / self.k, 1.0]
    }

    pub fn field(&self) -> ScalarField {
        let n = self.dim.n;
        let (fe, fp) = (self.clone(), self.clone());
        let origin = self.dim.origin();
        let support = Support::ball(HBall {
            center: origin.clone(),
            radius: 1.0,
        })
        .with_kinks(vec![1.0 / self.k]);
        ScalarField::new(n, move |xi| fe.profile(hnorm(xi)))
            .with_partials(move |xi| {
                let d = fp.profile_deriv(hnorm(xi));
                if d == 0.0 {
                    return EuclidGrad::from_elem(0.0, 2 * xi.n() + 1);
                }
                let mut g = dist_euclidean_partials(&origin, xi).expect("off the plateau, so not at the origin");
                g.iter_mut().for_each(|v| *v *= d);
                g
            })
            .with_support(support)
    }
}

/// `u_k` as a field with exact partials and the spheres `ρ = 1/k, 1` registered.
pub fn moser_function(k: f64, dim: &GroupDim) -> Result<ScalarField> {
    Ok(MoserFamily::new(k, dim)?.field())
}

/// A family member rescaled to unit `‖·‖_{1,τ}`, with its rule.
#[derive(Debug, Clone)]
pub struct NormalizedMember {
    pub k: u64,
    pub field: ScalarField,
    pub rule: QuadratureRule,
    pub scale: f64,
}

pub fn normalized_member(k: u64, params: &TMParams, dim: &GroupDim, opts: &RuleOptions) -> Result<NormalizedMember> {
    let u = moser_function(k as f64, dim)?;
    let mut o = opts.clone();
    o.singular_power = params.beta;
    let rule = field_rule(&u, Some(&dim.origin()), &o)?;
    let (field, scale) = crate::functional::normalize(&u, NormMode::TauNorm, params.tau, dim, &rule)?;
    Ok(NormalizedMember { k, field, rule, scale })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: u64,
    /// Factor applied to `u_k` to reach unit `τ`-norm.
    pub scale: f64,
    pub report: FunctionalReport,
}

/// The functional along the normalized family.
pub fn blowup_curve(params: &TMParams, dim: &GroupDim, k_list: &[u64], opts: &RuleOptions) -> Result<Vec<CurvePoint>> {
    params.validate(dim)?;
    k_list
        .par_iter()
        .map(|&k| {
            let m = normalized_member(k, params, dim, opts)?;
            let report = tm_functional(&m.field, params, dim, &m.rule)?;
            Ok(CurvePoint { k, scale: m.scale, report })
        })
        .collect()
}

/// `4, 16, 64, ...` up to `k_max`.
pub fn default_k_list(k_max: u64) -> Vec<u64> {
    std::iter::successors(Some(4u64), |k| k.checked_mul(4))
        .take_while(|&k| k <= k_max)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Growing,
    Bounded,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Growing => "GROWING",
            Classification::Bounded => "BOUNDED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub alpha: f64,
    pub tm_values: Vec<f64>,
    pub tm_errors: Vec<f64>,
    /// Least-squares slope of `log TM` against `log k`, and its standard error.
    pub slope: f64,
    pub slope_se: f64,
    pub classification: Classification,
    pub last_over_first: f64,
    pub max_over_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub beta: f64,
    pub tau: f64,
    pub threshold: f64,
    pub k_list: Vec<u64>,
    pub entries: Vec<ScanEntry>,
    /// Largest bounded `α` below the smallest growing one, and that growing `α`.
    pub bracket: Option<(f64, f64)>,
    pub bracket_contains_threshold: bool,
    pub notes: Vec<String>,
}

pub const SCAN_CSV_HEADER: [&str; 5] = ["alpha", "k", "tm_value", "slope", "classification"];

impl ScanReport {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for e in &self.entries {
            for (k, v) in self.k_list.iter().zip(&e.tm_values) {
                rows.push(vec![
                    e.alpha.to_string(),
                    k.to_string(),
                    v.to_string(),
                    e.slope.to_string(),
                    e.classification.label().to_string(),
                ]);
            }
        }
        rows
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, se(b))`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let sse: f64 = x.iter().zip(y).map(|(a, c)| (c - my - b * (a - mx)).powi(2)).sum();
    let se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (b, se)
}

/// Growing when the log-log slope is positive by more than three standard errors.
pub fn classify(k_list: &[u64], values: &[f64]) -> (f64, f64, Classification) {
    let x: Vec<f64> = k_list.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (b, se) = ls_slope(&x, &y);
    let class = if b > 0.0 && b > 3.0 * se {
        Classification::Growing
    } else {
        Classification::Bounded
    };
    (b, se, class)
}

fn bracket_of(entries: &[ScanEntry], notes: &mut Vec<String>) -> Option<(f64, f64)> {
    let mut sorted: Vec<&ScanEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let Some(g) = sorted.iter().find(|e| e.classification == Classification::Growing) else {
        notes.push("no growing alpha on the grid; no bracket".into());
        return None;
    };
    if sorted
        .iter()
        .any(|e| e.alpha > g.alpha && e.classification == Classification::Bounded)
    {
        notes.push("classification is not monotone in alpha".into());
    }
    let Some(b) = sorted
        .iter()
        .rev()
        .find(|e| e.alpha < g.alpha && e.classification == Classification::Bounded)
    else {
        notes.push("no bounded alpha below the smallest growing one; no bracket".into());
        return None;
    };
    Some((b.alpha, g.alpha))
}

/// Classifies each `α` of the grid along the normalized family and locates
/// the transition.
pub fn threshold_scan(
    beta: f64,
    tau: f64,
    alpha_grid: &[f64],
    k_list: &[u64],
    dim: &GroupDim,
    opts: &RuleOptions,
) -> Result<ScanReport> {
    if k_list.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 4 family members, got {}",
            k_list.len()
        )));
    }
    if alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid".into()));
    }
    for &a in alpha_grid {
        TMParams::new(a, beta, tau).validate(dim)?;
    }
    let m = alpha_grid.len();
    let q = dim.q as u32;
    let qp = dim.q_prime;
    let params = TMParams::new(alpha_grid[0], beta, tau);
    let per_k: Vec<Vec<(f64, f64)>> = k_list
        .par_iter()
        .map(|&k| {
            let mem = normalized_member(k, &params, dim, opts)?;
            let u = &mem.field;
            let est = integrate_many(
                m,
                |p, out| {
                    let v = u.eval(p).abs();
                    if v == 0.0 {
                        out.fill(0.0);
                        return;
                    }
                    let w = singular_weight(beta, p);
                    let s = v.powf(qp);
                    for (o, &a) in out.iter_mut().zip(alpha_grid) {
                        *o = w * zeta_unchecked(q, a * s);
                    }
                },
                &mem.rule,
            )?;
            Ok(est.iter().map(|e| (e.value, e.error)).collect())
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(m);
    for (j, &alpha) in alpha_grid.iter().enumerate() {
        let vals: Vec<f64> = per_k.iter().map(|r| r[j].0).collect();
        let errs: Vec<f64> = per_k.iter().map(|r| r[j].1).collect();
        let (slope, slope_se, classification) = classify(k_list, &vals);
        let max = vals.iter().copied().fold(f64::MIN, f64::max);
        let min = vals.iter().copied().fold(f64::MAX, f64::min);
        entries.push(ScanEntry {
            alpha,
            last_over_first: vals[vals.len() - 1] / vals[0],
            max_over_min: max / min,
            tm_values: vals,
            tm_errors: errs,
            slope,
            slope_se,
            classification,
        });
    }
    let mut notes = Vec::new();
    if alpha_grid.len() < 2 {
        notes.push("a single alpha cannot bracket the threshold".into());
    }
    let threshold = dim.threshold(beta);
    let bracket = bracket_of(&entries, &mut notes);
    let bracket_contains_threshold = bracket.is_some_and(|(lo, hi)| lo <= threshold && threshold <= hi);
    Ok(ScanReport {
        beta,
        tau,
        threshold,
        k_list: k_list.to_vec(),
        entries,
        bracket,
        bracket_contains_threshold,
        notes,
    })
}
