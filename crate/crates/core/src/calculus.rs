//! Left-invariant vector fields and sub-elliptic gradients.
//!
//! ```text
//! X_i = ∂/∂x_i + 2 y_i ∂/∂t,   Y_i = ∂/∂y_i - 2 x_i ∂/∂t,   T = ∂/∂t
//! ```
//!
//! Fields carry optional closed-form Euclidean partials; when absent,
//! central differences are used.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::hgroup::{compose_unchecked, dist_ef, hnorm, inverse, Coords, HBall, HBox, HPoint};

/// Euclidean partials in the flat layout `(∂x_1..∂x_n, ∂y_1..∂y_n, ∂t)`.
pub type EuclidGrad = SmallVec<[f64; 5]>;

type EvalFn = dyn Fn(&HPoint) -> f64 + Send + Sync;
type PartialsFn = dyn Fn(&HPoint) -> EuclidGrad + Send + Sync;
type HessianFn = dyn Fn(&HPoint) -> Vec<f64> + Send + Sync;

/// Where a field may be non-zero, plus spheres across which it is only
/// piecewise smooth (radii measured from each ball center).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub balls: Vec<HBall>,
    pub kink_radii: Vec<f64>,
}

impl Support {
    pub fn ball(ball: HBall) -> Self {
        Self {
            balls: vec![ball],
            kink_radii: Vec::new(),
        }
    }

    pub fn balls(balls: Vec<HBall>) -> Self {
        Self {
            balls,
            kink_radii: Vec::new(),
        }
    }

    pub fn with_kinks(mut self, radii: Vec<f64>) -> Self {
        self.kink_radii = radii;
        self
    }

    pub fn contains(&self, xi: &HPoint) -> bool {
        self.balls.iter().any(|b| b.contains(xi))
    }

    pub fn bounding_box(&self) -> Option<HBox> {
        let mut it = self.balls.iter().map(HBall::bounding_box);
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.union(&b)))
    }
}

/// An evaluable function on `H^n`.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    eval: Arc<EvalFn>,
    partials: Option<Arc<PartialsFn>>,
    hessian: Option<Arc<HessianFn>>,
    support: Option<Support>,
    nonsmooth: Vec<HPoint>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("partials", &self.partials.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(n: usize, eval: F) -> Self
    where
        F: Fn(&HPoint) -> f64 + Send + Sync + 'static,
    {
        Self {
            n,
            eval: Arc::new(eval),
            partials: None,
            hessian: None,
            support: None,
            nonsmooth: Vec::new(),
        }
    }

    pub fn with_partials<F>(mut self, partials: F) -> Self
    where
        F: Fn(&HPoint) -> EuclidGrad + Send + Sync + 'static,
    {
        self.partials = Some(Arc::new(partials));
        self
    }

    /// Row-major `(2n+1)^2` Euclidean Hessian.
    pub fn with_hessian<F>(mut self, hessian: F) -> Self
    where
        F: Fn(&HPoint) -> Vec<f64> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = Some(support);
        self
    }

    /// Points where the field is not differentiable.
    pub fn with_nonsmooth_points(mut self, pts: Vec<HPoint>) -> Self {
        self.nonsmooth = pts;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn eval(&self, xi: &HPoint) -> f64 {
        if let Some(s) = &self.support {
            if !s.contains(xi) {
                return 0.0;
            }
        }
        (self.eval)(xi)
    }

    #[inline]
    pub fn partials(&self, xi: &HPoint) -> Option<EuclidGrad> {
        let p = self.partials.as_ref()?;
        if let Some(s) = &self.support {
            if !s.contains(xi) {
                return Some(EuclidGrad::from_elem(0.0, 2 * self.n + 1));
            }
        }
        Some(p(xi))
    }

    pub fn hessian(&self, xi: &HPoint) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(xi))
    }

    pub fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn support(&self) -> Option<&Support> {
        self.support.as_ref()
    }

    pub fn nonsmooth_points(&self) -> &[HPoint] {
        &self.nonsmooth
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> ScalarField {
        let f = self.clone();
        let g = self.clone();
        let mut out = ScalarField::new(self.n, move |xi| c * f.eval(xi));
        if self.partials.is_some() {
            out = out.with_partials(move |xi| {
                let mut p = g.partials(xi).expect("checked");
                p.iter_mut().for_each(|v| *v *= c);
                p
            });
        }
        out.support = self.support.clone();
        out.nonsmooth = self.nonsmooth.clone();
        out
    }

    /// Pointwise product; support is that of `self`.
    pub fn product(&self, other: &ScalarField) -> ScalarField {
        let (f, g) = (self.clone(), other.clone());
        let (fp, gp) = (self.clone(), other.clone());
        let mut out = ScalarField::new(self.n, move |xi| {
            let a = f.eval(xi);
            if a == 0.0 {
                0.0
            } else {
                a * g.eval(xi)
            }
        });
        if self.partials.is_some() && other.partials.is_some() {
            out = out.with_partials(move |xi| {
                let (a, b) = (fp.eval(xi), gp.eval(xi));
                let pa = fp.partials(xi).expect("checked");
                let pb = gp.partials(xi).expect("checked");
                pa.iter().zip(pb.iter()).map(|(da, db)| da * b + a * db).collect()
            });
        }
        out.support = self.support.clone();
        out.nonsmooth = self.nonsmooth.iter().chain(other.nonsmooth.iter()).cloned().collect();
        out
    }

    /// Pointwise sum; supports are merged.
    pub fn sum(&self, other: &ScalarField) -> ScalarField {
        let (f, g) = (self.clone(), other.clone());
        let (fp, gp) = (self.clone(), other.clone());
        let mut out = ScalarField::new(self.n, move |xi| f.eval(xi) + g.eval(xi));
        if self.partials.is_some() && other.partials.is_some() {
            out = out.with_partials(move |xi| {
                let pa = fp.partials(xi).expect("checked");
                let pb = gp.partials(xi).expect("checked");
                pa.iter().zip(pb.iter()).map(|(a, b)| a + b).collect()
            });
        }
        out.support = match (&self.support, &other.support) {
            (Some(a), Some(b)) => {
                let mut balls = a.balls.clone();
                balls.extend(b.balls.iter().cloned());
                let mut kinks = a.kink_radii.clone();
                kinks.extend(b.kink_radii.iter().copied());
                Some(Support {
                    balls,
                    kink_radii: kinks,
                })
            }
            _ => None,
        };
        out.nonsmooth = self.nonsmooth.iter().chain(other.nonsmooth.iter()).cloned().collect();
        out
    }

    /// Left translate: `ξ ↦ f(γ^{-1} o ξ)`.
    pub fn translated(&self, gamma: &HPoint) -> ScalarField {
        let n = self.n;
        let ginv = inverse(gamma);
        let (f, fp) = (self.clone(), self.clone());
        let (gi_e, gi_p, g) = (ginv.clone(), ginv, gamma.clone());
        let mut out = ScalarField::new(n, move |xi| f.eval(&compose_unchecked(&gi_e, xi)));
        if self.partials.is_some() {
            out = out.with_partials(move |xi| {
                let eta = compose_unchecked(&gi_p, xi);
                let p = fp.partials(&eta).expect("checked");
                let ft = p[2 * n];
                let mut q = p.clone();
                for i in 0..n {
                    q[i] = p[i] - 2.0 * g.y[i] * ft;
                    q[n + i] = p[n + i] + 2.0 * g.x[i] * ft;
                }
                q
            });
        }
        out.support = self.support.as_ref().map(|s| Support {
            balls: s
                .balls
                .iter()
                .map(|b| HBall {
                    center: compose_unchecked(gamma, &b.center),
                    radius: b.radius,
                })
                .collect(),
            kink_radii: s.kink_radii.clone(),
        });
        out.nonsmooth = self.nonsmooth.iter().map(|p| compose_unchecked(gamma, p)).collect();
        out
    }
}

/// Horizontal gradient `(X_1 u .. X_n u, Y_1 u .. Y_n u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalVector {
    pub a: Coords,
    pub b: Coords,
}

impl HorizontalVector {
    pub fn zero(n: usize) -> Self {
        Self {
            a: smallvec::smallvec![0.0; n],
            b: smallvec::smallvec![0.0; n],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Projects Euclidean partials onto the horizontal frame at `xi`.
    pub fn from_partials(xi: &HPoint, p: &[f64]) -> Self {
        let n = xi.n();
        let ft = p[2 * n];
        Self {
            a: (0..n).map(|i| p[i] + 2.0 * xi.y[i] * ft).collect(),
            b: (0..n).map(|i| p[n + i] - 2.0 * xi.x[i] * ft).collect(),
        }
    }
}

/// Default central-difference step `1e-5 (1 + |ξ|)`.
pub fn default_step(xi: &HPoint) -> f64 {
    1e-5 * (1.0 + hnorm(xi))
}

fn check_point(f: &ScalarField, xi: &HPoint) -> Result<()> {
    if xi.n() != f.n {
        return Err(Error::DimensionMismatch {
            expected: f.n,
            found: xi.n(),
        });
    }
    Ok(())
}

fn shifted(xi: &HPoint, coord: usize, h: f64) -> HPoint {
    let n = xi.n();
    let mut p = xi.clone();
    if coord < n {
        p.x[coord] += h;
    } else if coord < 2 * n {
        p.y[coord - n] += h;
    } else {
        p.t += h;
    }
    p
}

fn central<F: Fn(&HPoint) -> f64>(g: &F, xi: &HPoint, coord: usize, h: f64) -> f64 {
    (g(&shifted(xi, coord, h)) - g(&shifted(xi, coord, -h))) / (2.0 * h)
}

fn fd_partials(f: &ScalarField, xi: &HPoint, h: f64) -> EuclidGrad {
    let eval = |p: &HPoint| f.eval(p);
    (0..2 * xi.n() + 1).map(|c| central(&eval, xi, c, h)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    X,
    Y,
    T,
}

fn apply(dir: Direction, i: usize, f: &ScalarField, xi: &HPoint, step: Option<f64>) -> Result<f64> {
    check_point(f, xi)?;
    let n = xi.n();
    if dir != Direction::T && i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let p = match (f.partials(xi), step) {
        (Some(p), _) => p,
        (None, Some(h)) if h > 0.0 => fd_partials(f, xi, h),
        (None, Some(h)) => {
            return Err(Error::NonPositive {
                what: "finite-difference step",
                value: h,
            })
        }
        (None, None) => return Err(Error::MissingPartials),
    };
    Ok(match dir {
        Direction::X => p[i] + 2.0 * xi.y[i] * p[2 * n],
        Direction::Y => p[n + i] - 2.0 * xi.x[i] * p[2 * n],
        Direction::T => p[2 * n],
    })
}

/// `X_i f (ξ)` with a zero-based index. Uses exact partials when present,
/// otherwise central differences with `step`.
pub fn apply_x(i: usize, f: &ScalarField, xi: &HPoint, step: Option<f64>) -> Result<f64> {
    apply(Direction::X, i, f, xi, step)
}

pub fn apply_y(i: usize, f: &ScalarField, xi: &HPoint, step: Option<f64>) -> Result<f64> {
    apply(Direction::Y, i, f, xi, step)
}

pub fn apply_t(f: &ScalarField, xi: &HPoint, step: Option<f64>) -> Result<f64> {
    apply(Direction::T, 0, f, xi, step)
}

/// Sub-elliptic gradient; falls back to central differences with
/// [`default_step`] when the field has no partials.
pub fn hgrad(f: &ScalarField, xi: &HPoint) -> Result<HorizontalVector> {
    check_point(f, xi)?;
    let p = match f.partials(xi) {
        Some(p) => p,
        None => fd_partials(f, xi, default_step(xi)),
    };
    Ok(HorizontalVector::from_partials(xi, &p))
}

pub fn hgrad_norm(f: &ScalarField, xi: &HPoint) -> Result<f64> {
    Ok(hgrad(f, xi)?.norm())
}

/// Central-difference horizontal gradient, ignoring any exact partials.
pub fn fd_hgrad(f: &ScalarField, xi: &HPoint, h: f64) -> Result<HorizontalVector> {
    check_point(f, xi)?;
    if !(h > 0.0) {
        return Err(Error::NonPositive {
            what: "finite-difference step",
            value: h,
        });
    }
    for p in f.nonsmooth_points() {
        let d = xi
            .to_flat()
            .iter()
            .zip(p.to_flat().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if h >= d {
            return Err(Error::StepTooLarge { h, distance: d });
        }
    }
    Ok(HorizontalVector::from_partials(xi, &fd_partials(f, xi, h)))
}

// X_i, Y_j or T applied to f, with first partials exact when available.
fn first_order(dir: Direction, i: usize, f: &ScalarField, xi: &HPoint, h: f64) -> f64 {
    let n = xi.n();
    let p = f.partials(xi).unwrap_or_else(|| fd_partials(f, xi, h));
    match dir {
        Direction::X => p[i] + 2.0 * xi.y[i] * p[2 * n],
        Direction::Y => p[n + i] - 2.0 * xi.x[i] * p[2 * n],
        Direction::T => p[2 * n],
    }
}

fn second_order(
    outer: Direction,
    oi: usize,
    inner: Direction,
    ii: usize,
    f: &ScalarField,
    xi: &HPoint,
    h: f64,
) -> f64 {
    let n = xi.n();
    let g = |p: &HPoint| first_order(inner, ii, f, p, h);
    let dg = |c: usize| central(&g, xi, c, h);
    match outer {
        Direction::X => dg(oi) + 2.0 * xi.y[oi] * dg(2 * n),
        Direction::Y => dg(n + oi) - 2.0 * xi.x[oi] * dg(2 * n),
        Direction::T => dg(2 * n),
    }
}

/// `([X_i, Y_j] f + 4 δ_ij T f)(ξ)`, which vanishes identically.
///
/// With a Hessian the compositions are assembled in closed form; otherwise
/// nested central differences with step `h` (default `1e-4 (1 + |ξ|)`) are used.
pub fn commutator_residual(i: usize, j: usize, f: &ScalarField, xi: &HPoint, h: Option<f64>) -> Result<f64> {
    check_point(f, xi)?;
    let n = xi.n();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { index: i.max(j), n });
    }
    let delta = if i == j { 4.0 } else { 0.0 };
    if let (Some(p), Some(hess)) = (f.partials(xi), f.hessian(xi)) {
        let d = 2 * n + 1;
        let hh = |a: usize, b: usize| hess[a * d + b];
        let (xi_i, yj, t) = (i, n + j, 2 * n);
        let dij = if i == j { 1.0 } else { 0.0 };
        let ft = p[t];
        // X_i Y_j f and Y_j X_i f expanded
        let xy = hh(xi_i, yj) - 2.0 * dij * ft - 2.0 * xi.x[j] * hh(xi_i, t) + 2.0 * xi.y[i] * hh(t, yj)
            - 4.0 * xi.y[i] * xi.x[j] * hh(t, t);
        let yx = hh(yj, xi_i) + 2.0 * dij * ft + 2.0 * xi.y[i] * hh(yj, t) - 2.0 * xi.x[j] * hh(t, xi_i)
            - 4.0 * xi.x[j] * xi.y[i] * hh(t, t);
        return Ok(xy - yx + delta * ft);
    }
    let h = h.unwrap_or(1e-4 * (1.0 + hnorm(xi)));
    if !(h > 0.0) {
        return Err(Error::NonPositive {
            what: "finite-difference step",
            value: h,
        });
    }
    let xy = second_order(Direction::X, i, Direction::Y, j, f, xi, h);
    let yx = second_order(Direction::Y, j, Direction::X, i, f, xi, h);
    let tf = first_order(Direction::T, 0, f, xi, h);
    Ok(xy - yx + delta * tf)
}

/// Pieces of the horizontal gradient of `ρ(ξ) = d(ξ, ξ0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistGradParts {
    pub e: f64,
    pub f: f64,
    pub rho: f64,
    pub grad: HorizontalVector,
}

/// Closed-form `E`, `F`, `ρ` and `∇_H ρ` for the distance to `xi0`.
pub fn dist_gradient(xi0: &HPoint, xi: &HPoint) -> Result<DistGradParts> {
    if xi0.n() != xi.n() {
        return Err(Error::DimensionMismatch {
            expected: xi0.n(),
            found: xi.n(),
        });
    }
    let (e, f) = dist_ef(xi0, xi);
    let rho = e.hypot(f).sqrt();
    if rho == 0.0 {
        return Err(Error::SingularPoint);
    }
    let n = xi.n();
    let inv3 = rho.powi(-3);
    let a = (0..n)
        .map(|i| inv3 * ((xi.x[i] - xi0.x[i]) * e + (xi.y[i] - xi0.y[i]) * f))
        .collect();
    let b = (0..n)
        .map(|i| inv3 * ((xi.y[i] - xi0.y[i]) * e + (xi0.x[i] - xi.x[i]) * f))
        .collect();
    Ok(DistGradParts {
        e,
        f,
        rho,
        grad: HorizontalVector { a, b },
    })
}

/// Euclidean partials of `ρ(ξ) = d(ξ, ξ0)`.
pub fn dist_euclidean_partials(xi0: &HPoint, xi: &HPoint) -> Result<EuclidGrad> {
    let (e, f) = dist_ef(xi0, xi);
    let rho = e.hypot(f).sqrt();
    if rho == 0.0 {
        return Err(Error::SingularPoint);
    }
    let n = xi.n();
    let inv3 = rho.powi(-3);
    let mut g = EuclidGrad::with_capacity(2 * n + 1);
    for i in 0..n {
        g.push(inv3 * ((xi.x[i] - xi0.x[i]) * e - xi0.y[i] * f));
    }
    for i in 0..n {
        g.push(inv3 * ((xi.y[i] - xi0.y[i]) * e + xi0.x[i] * f));
    }
    g.push(0.5 * inv3 * f);
    Ok(g)
}

/// The gauge `|ξ|` as a field, with exact partials away from the origin.
pub fn gauge_field(n: usize) -> ScalarField {
    let o = HPoint::origin(n);
    let o2 = o.clone();
    ScalarField::new(n, hnorm)
        .with_partials(move |xi| {
            dist_euclidean_partials(&o2, xi).unwrap_or_else(|_| EuclidGrad::from_elem(0.0, 2 * n + 1))
        })
        .with_nonsmooth_points(vec![o])
}

/// Monomial `c · Π v_a^{e_a}` over the flat coordinates `(x, y, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

fn monomial_eval(m: &Monomial, v: &[f64], skip: &[usize]) -> f64 {
    let mut e = m.exponents.clone();
    let mut c = m.coef;
    for &a in skip {
        if e[a] == 0 {
            return 0.0;
        }
        c *= e[a] as f64;
        e[a] -= 1;
    }
    e.iter().zip(v).fold(c, |acc, (&k, &x)| acc * x.powi(k as i32))
}

/// A polynomial field with exact partials and Hessian.
pub fn polynomial_field(n: usize, terms: Vec<Monomial>) -> Result<ScalarField> {
    let d = 2 * n + 1;
    if let Some(m) = terms.iter().find(|m| m.exponents.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.exponents.len(),
        });
    }
    let (te, tp, th) = (terms.clone(), terms.clone(), terms);
    Ok(ScalarField::new(n, move |xi| {
        let v = xi.to_flat();
        te.iter().map(|m| monomial_eval(m, &v, &[])).sum()
    })
    .with_partials(move |xi| {
        let v = xi.to_flat();
        (0..d).map(|a| tp.iter().map(|m| monomial_eval(m, &v, &[a])).sum()).collect()
    })
    .with_hessian(move |xi| {
        let v = xi.to_flat();
        let mut h = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                h[a * d + b] = th.iter().map(|m| monomial_eval(m, &v, &[a, b])).sum();
            }
        }
        h
    }))
}

/// Named polynomials of degree up to four that mix horizontal and vertical
/// coordinates; used by the commutator sweeps.
pub fn polynomial_corpus(n: usize) -> Vec<(String, ScalarField)> {
    let d = 2 * n + 1;
    let mono = |coef: f64, pairs: &[(usize, u32)]| {
        let mut exponents = vec![0; d];
        for &(a, e) in pairs {
            exponents[a] += e;
        }
        Monomial { coef, exponents }
    };
    let (x0, y0, t) = (0, n, 2 * n);
    let xl = n - 1;
    let yl = 2 * n - 1;
    let specs: Vec<(&str, Vec<Monomial>)> = vec![
        ("t", vec![mono(1.0, &[(t, 1)])]),
        ("x0*y0", vec![mono(1.0, &[(x0, 1), (y0, 1)])]),
        ("x0*t", vec![mono(1.0, &[(x0, 1), (t, 1)])]),
        ("t^2", vec![mono(1.0, &[(t, 2)])]),
        ("x0^2*y_last - 3 t*y0", vec![mono(1.0, &[(x0, 2), (yl, 1)]), mono(-3.0, &[(t, 1), (y0, 1)])]),
        (
            "x_last^2*t^2 + 0.5 y0^4 - x0*y0*t",
            vec![
                mono(1.0, &[(xl, 2), (t, 2)]),
                mono(0.5, &[(y0, 4)]),
                mono(-1.0, &[(x0, 1), (y0, 1), (t, 1)]),
            ],
        ),
    ];
    specs
        .into_iter()
        .map(|(name, terms)| (name.to_string(), polynomial_field(n, terms).expect("corpus terms match n")))
        .collect()
}
