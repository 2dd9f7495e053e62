//! Deterministic integration over boxes and gauge balls (Haar measure is
//! Lebesgue measure in exponential coordinates).
//!
//! For `n = 1` rules are tensor Gauss rules: homogeneous-polar on balls, and
//! Cartesian on boxes with panels split exactly at registered gauge spheres.
//! A singular point inside a box is surrounded by dyadic spheres and its
//! innermost ball is integrated in polar form with a Gauss-Jacobi radial rule.
//! For `n >= 2` the rules fall back to shifted Halton sampling.
//!
//! Every tensor rule carries a companion of one lower order; the reported
//! error of an integral is the difference of the two.

pub mod gauss;
mod polar;
mod qmc;
pub mod radial;
pub mod sum;
mod tensor;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{ScalarField, Support};
use crate::error::{Error, Result};
use crate::hgroup::{hdist_unchecked, HBall, HBox, HPoint};
use polar::{polar_nodes, PolarSpec};
use radial::Estimate;
use sum::{pairwise_dot, pairwise_sum};
use tensor::{tensor_nodes, Sphere, TensorSpec};

#[derive(Debug, Clone, Default)]
pub(crate) struct NodeSet {
    pub nodes: Vec<HPoint>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    fn with_capacity(c: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(c),
            weights: Vec::with_capacity(c),
        }
    }

    #[inline]
    fn push(&mut self, p: HPoint, w: f64) {
        self.nodes.push(p);
        self.weights.push(w);
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn extend(&mut self, other: NodeSet) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Box(HBox),
    Ball(HBall),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Tensor,
    QuasiMonteCarlo { replicas: usize },
}

/// How an integral's error is estimated.
#[derive(Debug, Clone)]
pub enum ErrorModel {
    /// A lower-order rule over the same cells.
    Companion { nodes: Vec<HPoint>, weights: Vec<f64> },
    /// Independent randomized replicas; node `i` belongs to replica `ids[i]`.
    Replicas { ids: Vec<u32>, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOptions {
    /// Gauss order per panel and direction.
    pub base_order: usize,
    /// Dyadic refinement steps toward a singular point or ball center.
    pub levels: usize,
    /// Exponent `β` of the weight `|ξ - s|^{-β}` at the singular point.
    pub singular_power: f64,
    /// Gauge spheres that must be panel boundaries.
    pub kinks: Vec<HBall>,
    /// Uniform panels per axis on boxes.
    pub cells_per_axis: usize,
    pub qmc_points: usize,
    pub qmc_replicas: usize,
    pub seed: u64,
    pub max_nodes: usize,
}

impl Default for RuleOptions {
    fn default() -> Self {
        Self {
            base_order: 8,
            levels: 6,
            singular_power: 0.0,
            kinks: Vec::new(),
            cells_per_axis: 1,
            qmc_points: 1 << 14,
            qmc_replicas: 8,
            seed: 0,
            max_nodes: 40_000_000,
        }
    }
}

impl RuleOptions {
    fn validate(&self) -> Result<()> {
        if self.base_order < 2 {
            return Err(Error::InvalidArgument(format!(
                "base_order must be at least 2, got {}",
                self.base_order
            )));
        }
        if !(self.singular_power >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "singular power must be non-negative, got {}",
                self.singular_power
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub n: usize,
    pub nodes: Vec<HPoint>,
    pub weights: Vec<f64>,
    pub check: ErrorModel,
    pub regions: Vec<Region>,
    pub singular_point: Option<HPoint>,
    pub singular_power: f64,
    pub refinement_levels: usize,
    pub base_order: usize,
    /// Error of the rule on the constant function.
    pub estimated_error: f64,
    pub kind: RuleKind,
}

/// JSON-serializable summary of a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDescriptor {
    pub kind: RuleKind,
    pub n: usize,
    pub regions: Vec<Region>,
    pub singular_point: Option<HPoint>,
    pub singular_power: f64,
    pub refinement_levels: usize,
    pub base_order: usize,
    pub node_count: usize,
    pub weight_sum: f64,
    pub estimated_error: f64,
}

impl QuadratureRule {
    fn from_tensor(n: usize, main: NodeSet, comp: NodeSet, region: Region, sp: Option<HPoint>, opts: &RuleOptions) -> Self {
        let estimated_error = (pairwise_sum(&main.weights) - pairwise_sum(&comp.weights)).abs();
        Self {
            n,
            nodes: main.nodes,
            weights: main.weights,
            check: ErrorModel::Companion {
                nodes: comp.nodes,
                weights: comp.weights,
            },
            regions: vec![region],
            singular_point: sp,
            singular_power: opts.singular_power,
            refinement_levels: opts.levels,
            base_order: opts.base_order,
            estimated_error,
            kind: RuleKind::Tensor,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn descriptor(&self) -> RuleDescriptor {
        RuleDescriptor {
            kind: self.kind,
            n: self.n,
            regions: self.regions.clone(),
            singular_point: self.singular_point.clone(),
            singular_power: self.singular_power,
            refinement_levels: self.refinement_levels,
            base_order: self.base_order,
            node_count: self.nodes.len(),
            weight_sum: self.weight_sum(),
            estimated_error: self.estimated_error,
        }
    }

    /// Concatenates rules over disjoint regions.
    pub fn merge(rules: Vec<QuadratureRule>) -> Result<QuadratureRule> {
        let mut it = rules.into_iter();
        let mut acc = it.next().ok_or(Error::EmptyRegion)?;
        for r in it {
            if r.n != acc.n {
                return Err(Error::DimensionMismatch {
                    expected: acc.n,
                    found: r.n,
                });
            }
            match (&mut acc.check, r.check) {
                (ErrorModel::Companion { nodes, weights }, ErrorModel::Companion { nodes: n2, weights: w2 }) => {
                    nodes.extend(n2);
                    weights.extend(w2);
                }
                (ErrorModel::Replicas { ids, count }, ErrorModel::Replicas { ids: i2, count: c2 }) if *count == c2 => {
                    ids.extend(i2);
                }
                _ => return Err(Error::InvalidArgument("cannot merge rules of different kinds".into())),
            }
            acc.nodes.extend(r.nodes);
            acc.weights.extend(r.weights);
            acc.regions.extend(r.regions);
            acc.estimated_error += r.estimated_error;
            acc.refinement_levels = acc.refinement_levels.max(r.refinement_levels);
            if acc.singular_point.is_none() {
                acc.singular_point = r.singular_point;
                acc.singular_power = r.singular_power;
            }
        }
        Ok(acc)
    }
}

fn qmc_rule(region: Region, singular: Option<&HPoint>, opts: &RuleOptions) -> Result<QuadratureRule> {
    let (bx, mask) = match &region {
        Region::Box(b) => (b.clone(), None),
        Region::Ball(b) => (b.bounding_box(), Some(b)),
    };
    let (nodes, weights, ids) =
        qmc::shifted_halton(&bx, mask, singular, opts.qmc_points, opts.qmc_replicas, opts.seed)?;
    let count = opts.qmc_replicas;
    let mut rule = QuadratureRule {
        n: bx.n(),
        nodes,
        weights,
        check: ErrorModel::Replicas { ids, count },
        regions: vec![region],
        singular_point: singular.cloned(),
        singular_power: opts.singular_power,
        refinement_levels: 0,
        base_order: opts.base_order,
        estimated_error: 0.0,
        kind: RuleKind::QuasiMonteCarlo { replicas: count },
    };
    rule.estimated_error = integrate(|_| 1.0, &rule)?.error;
    Ok(rule)
}

/// Tensor rule on `region` with default options.
pub fn box_rule(region: &HBox, base_order: usize, levels: usize, singular_point: Option<&HPoint>) -> Result<QuadratureRule> {
    box_rule_with(
        region,
        singular_point,
        &RuleOptions {
            base_order,
            levels,
            ..RuleOptions::default()
        },
    )
}

/// Tensor rule on `region`.
pub fn box_rule_with(region: &HBox, singular_point: Option<&HPoint>, opts: &RuleOptions) -> Result<QuadratureRule> {
    box_rule_masked(region, None, singular_point, opts)
}

// Largest r with the bounding box of B(s, r) inside `bx`.
fn inscribed_radius(bx: &HBox, s: &HPoint) -> f64 {
    let mut m_xy = f64::INFINITY;
    for i in 0..s.n() {
        m_xy = m_xy
            .min(s.x[i] - bx.lo.x[i])
            .min(bx.hi.x[i] - s.x[i])
            .min(s.y[i] - bx.lo.y[i])
            .min(bx.hi.y[i] - s.y[i]);
    }
    let m_t = (s.t - bx.lo.t).min(bx.hi.t - s.t);
    if m_xy <= 0.0 || m_t <= 0.0 {
        return 0.0;
    }
    let cz = s.horizontal_sq().sqrt();
    let r_t = -cz + (cz * cz + m_t).sqrt();
    m_xy.min(r_t)
}

fn box_rule_masked(
    region: &HBox,
    mask: Option<&HBall>,
    singular_point: Option<&HPoint>,
    opts: &RuleOptions,
) -> Result<QuadratureRule> {
    opts.validate()?;
    if !(region.volume() > 0.0) {
        return Err(Error::EmptyRegion);
    }
    let n = region.n();
    if let Some(s) = singular_point {
        if s.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.n(),
            });
        }
    }
    let out_region = match mask {
        Some(b) => Region::Ball(b.clone()),
        None => Region::Box(region.clone()),
    };
    if n != 1 {
        return qmc_rule(out_region, singular_point, opts);
    }

    let mut spheres: Vec<Sphere> = opts.kinks.iter().map(|b| Sphere::new(&b.center, b.radius)).collect();
    let mut exclude = Vec::new();
    let mut inner: Option<PolarSpec> = None;
    let mut grading = None;
    let mut sp = None;
    if let Some(s) = singular_point {
        let inside_mask = mask.is_none_or(|b| b.contains(s));
        let mut r_max = inscribed_radius(region, s);
        if let Some(b) = mask {
            r_max = r_max.min(b.radius - hdist_unchecked(s, &b.center));
        }
        if region.contains(s) && inside_mask {
            if !(r_max > 0.0) {
                return Err(Error::Precondition("singular point lies on the region boundary".into()));
            }
            let r_max = 0.9 * r_max;
            for j in 0..=opts.levels {
                spheres.push(Sphere::new(s, r_max / 2f64.powi(j as i32)));
            }
            let eps = r_max / 2f64.powi(opts.levels as i32);
            exclude.push(Sphere::new(s, eps));
            grading = Some(Sphere::new(s, r_max));
            inner = Some(PolarSpec {
                center: s.clone(),
                radius: eps,
                kinks: vec![],
                beta: opts.singular_power,
                levels: 2,
            });
            sp = Some(s.clone());
        }
    }
    let spec = TensorSpec {
        region: region.clone(),
        cells: opts.cells_per_axis,
        spheres,
        exclude,
        mask: mask.map(|b| Sphere::new(&b.center, b.radius)),
        grading,
        max_nodes: opts.max_nodes,
    };
    let p = opts.base_order;
    let mut main = tensor_nodes(&spec, p)?;
    let mut comp = tensor_nodes(&spec, p - 1)?;
    if let Some(ps) = &inner {
        main.extend(polar_nodes(ps, p)?);
        comp.extend(polar_nodes(ps, p - 1)?);
    }
    Ok(QuadratureRule::from_tensor(n, main, comp, out_region, sp, opts))
}

/// Homogeneous-polar rule on a ball. Kinks concentric with the ball become
/// radial cell boundaries; a singular point must be the center or lie outside.
pub fn ball_rule(ball: &HBall, singular_point: Option<&HPoint>, opts: &RuleOptions) -> Result<QuadratureRule> {
    opts.validate()?;
    let n = ball.center.n();
    if n != 1 {
        return qmc_rule(Region::Ball(ball.clone()), singular_point, opts);
    }
    let tol = 1e-12 * (1.0 + ball.radius);
    let mut beta = 0.0;
    let mut sp = None;
    if let Some(s) = singular_point {
        let d = hdist_unchecked(s, &ball.center);
        if d <= tol {
            beta = opts.singular_power;
            sp = Some(s.clone());
        } else if d < ball.radius {
            return Err(Error::Precondition(
                "polar rule needs the singular point at the ball center; use box_rule".into(),
            ));
        }
    }
    let kinks = opts
        .kinks
        .iter()
        .filter(|k| hdist_unchecked(&k.center, &ball.center) <= tol)
        .map(|k| k.radius)
        .collect();
    let spec = PolarSpec {
        center: ball.center.clone(),
        radius: ball.radius,
        kinks,
        beta,
        levels: opts.levels,
    };
    let main = polar_nodes(&spec, opts.base_order)?;
    let comp = polar_nodes(&spec, opts.base_order - 1)?;
    let mut o = opts.clone();
    o.singular_power = beta;
    Ok(QuadratureRule::from_tensor(n, main, comp, Region::Ball(ball.clone()), sp, &o))
}

/// Rule over the union of the support balls, with the support's kink radii
/// registered about every ball center. Disjoint balls get a polar rule each,
/// or a masked tensor rule when the singular point is off-center or another
/// registered sphere cuts the ball.
pub fn support_rule(support: &Support, singular_point: Option<&HPoint>, opts: &RuleOptions) -> Result<QuadratureRule> {
    if support.balls.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut o = opts.clone();
    for b in &support.balls {
        for &k in &support.kink_radii {
            o.kinks.push(HBall {
                center: b.center.clone(),
                radius: k,
            });
        }
    }
    let balls = &support.balls;
    let disjoint = balls.iter().enumerate().all(|(i, a)| {
        balls[i + 1..]
            .iter()
            .all(|b| hdist_unchecked(&a.center, &b.center) >= a.radius + b.radius)
    });
    if disjoint {
        let rules = balls
            .iter()
            .map(|b| {
                let off_center = singular_point.is_some_and(|s| {
                    let d = hdist_unchecked(s, &b.center);
                    d > 1e-12 * (1.0 + b.radius) && d < b.radius
                });
                let tol = 1e-12 * (1.0 + b.radius);
                // a registered sphere that is not concentric but cuts the ball
                let cut = o.kinks.iter().any(|k| {
                    let d = hdist_unchecked(&k.center, &b.center);
                    d > tol && (d - k.radius).abs() < b.radius
                });
                if (off_center || cut) && b.center.n() == 1 {
                    let mut ob = o.clone();
                    ob.cells_per_axis = ob.cells_per_axis.max(4);
                    box_rule_masked(&b.bounding_box(), Some(b), singular_point, &ob)
                } else {
                    ball_rule(b, singular_point, &o)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        return QuadratureRule::merge(rules);
    }
    for b in balls {
        o.kinks.push(b.clone());
    }
    let bx = support.bounding_box().ok_or(Error::EmptyRegion)?;
    box_rule_with(&bx, singular_point, &o)
}

/// Rule for integrating a field over its declared support.
pub fn field_rule(field: &ScalarField, singular_point: Option<&HPoint>, opts: &RuleOptions) -> Result<QuadratureRule> {
    let support = field
        .support()
        .ok_or_else(|| Error::Precondition("field has no declared support".into()))?;
    support_rule(support, singular_point, opts)
}

fn evaluate<F>(f: &F, nodes: &[HPoint]) -> Result<Vec<f64>>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    let vals: Vec<f64> = nodes.par_iter().map(f).collect();
    if let Some((index, &value)) = vals.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteNode { index, value });
    }
    Ok(vals)
}

fn replica_error(weights: &[f64], vals: &[f64], ids: &[u32], count: usize) -> f64 {
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); count];
    for i in 0..weights.len() {
        per[ids[i] as usize].push(weights[i] * vals[i]);
    }
    let sums: Vec<f64> = per.iter().map(|v| count as f64 * pairwise_sum(v)).collect();
    let mean = pairwise_sum(&sums) / count as f64;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count * (count - 1)) as f64;
    var.sqrt()
}

fn finish(rule: &QuadratureRule, vals: &[f64], comp_vals: Option<&[f64]>) -> Estimate {
    let value = pairwise_dot(&rule.weights, vals);
    let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let floor = 8.0 * f64::EPSILON * pairwise_dot(&rule.weights, &abs);
    let error = match (&rule.check, comp_vals) {
        (ErrorModel::Companion { weights, .. }, Some(cv)) => (value - pairwise_dot(weights, cv)).abs(),
        (ErrorModel::Replicas { ids, count }, _) => replica_error(&rule.weights, vals, ids, *count),
        _ => 0.0,
    };
    Estimate {
        value,
        error: error.max(floor),
    }
}

/// `∫ f` with the rule's error estimate. Summation order is fixed, so the
/// result does not depend on the number of worker threads.
pub fn integrate<F>(f: F, rule: &QuadratureRule) -> Result<Estimate>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    let vals = evaluate(&f, &rule.nodes)?;
    let comp = match &rule.check {
        ErrorModel::Companion { nodes, .. } => Some(evaluate(&f, nodes)?),
        ErrorModel::Replicas { .. } => None,
    };
    Ok(finish(rule, &vals, comp.as_deref()))
}

pub fn integrate_field(field: &ScalarField, rule: &QuadratureRule) -> Result<Estimate> {
    integrate(|p| field.eval(p), rule)
}

fn evaluate_many<F>(m: usize, f: &F, nodes: &[HPoint]) -> Result<Vec<f64>>
where
    F: Fn(&HPoint, &mut [f64]) + Sync,
{
    let mut buf = vec![0.0; nodes.len() * m];
    buf.par_chunks_mut(m)
        .zip(nodes.par_iter())
        .for_each(|(out, p)| f(p, out));
    if let Some((k, &value)) = buf.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteNode { index: k / m, value });
    }
    Ok(buf)
}

/// `m` integrals sharing one pass over the nodes; `f` fills `m` values per node.
pub fn integrate_many<F>(m: usize, f: F, rule: &QuadratureRule) -> Result<Vec<Estimate>>
where
    F: Fn(&HPoint, &mut [f64]) + Sync,
{
    let buf = evaluate_many(m, &f, &rule.nodes)?;
    let cbuf = match &rule.check {
        ErrorModel::Companion { nodes, .. } => Some(evaluate_many(m, &f, nodes)?),
        ErrorModel::Replicas { .. } => None,
    };
    let column = |b: &[f64], j: usize| -> Vec<f64> { b.iter().skip(j).step_by(m).copied().collect() };
    Ok((0..m)
        .map(|j| {
            let v = column(&buf, j);
            let c = cbuf.as_ref().map(|cb| column(cb, j));
            finish(rule, &v, c.as_deref())
        })
        .collect())
}
