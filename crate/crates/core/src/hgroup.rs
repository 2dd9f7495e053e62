//! Group law, Korányi gauge, gauge distance and ball volumes on the
//! Heisenberg group `H^n = R^{2n} x R`.
//!
//! Points are stored as `(x, y, t)` with `x, y` of length `n`. The product is
//!
//! ```text
//! (x, y, t) o (x', y', t') = (x + x', y + y', t + t' + 2(<y, x'> - <x, y'>))
//! ```
//!
//! the inverse is the negation, and the gauge `|(x, y, t)| = ((|x|^2 + |y|^2)^2 + t^2)^(1/4)`
//! is homogeneous of degree one under the parabolic dilations `(λx, λy, λ²t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::quadrature::gauss;

/// Horizontal coordinate block; inline storage for `n <= 2`.
pub type Coords = SmallVec<[f64; 2]>;

/// A point `(x, y, t)` of `H^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: Coords,
    pub y: Coords,
    pub t: f64,
}

impl HPoint {
    pub fn new(x: &[f64], y: &[f64], t: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let p = Self {
            x: Coords::from_slice(x),
            y: Coords::from_slice(y),
            t,
        };
        if !p.is_finite() {
            return Err(Error::NonFinitePoint);
        }
        Ok(p)
    }

    /// Shorthand for `n = 1`.
    pub fn h1(x: f64, y: f64, t: f64) -> Self {
        Self {
            x: smallvec::smallvec![x],
            y: smallvec::smallvec![y],
            t,
        }
    }

    pub fn origin(n: usize) -> Self {
        Self {
            x: smallvec::smallvec![0.0; n],
            y: smallvec::smallvec![0.0; n],
            t: 0.0,
        }
    }

    /// Builds a point from the flat layout `(x_1..x_n, y_1..y_n, t)`.
    pub fn from_flat(n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                found: v.len(),
            });
        }
        Self::new(&v[..n], &v[n..2 * n], v[2 * n])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.n() + 1);
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v.push(self.t);
        v
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn is_origin(&self) -> bool {
        self.t == 0.0 && self.x.iter().chain(self.y.iter()).all(|&v| v == 0.0)
    }

    /// `|x|^2 + |y|^2`.
    #[inline]
    pub fn horizontal_sq(&self) -> f64 {
        self.x.iter().chain(self.y.iter()).map(|v| v * v).sum()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }
}

/// Unchecked group product; callers guarantee equal `n`.
#[inline]
pub(crate) fn compose_unchecked(a: &HPoint, b: &HPoint) -> HPoint {
    let n = a.n();
    let mut x = Coords::with_capacity(n);
    let mut y = Coords::with_capacity(n);
    let mut symp = 0.0;
    for i in 0..n {
        x.push(a.x[i] + b.x[i]);
        y.push(a.y[i] + b.y[i]);
        symp += a.y[i] * b.x[i] - a.x[i] * b.y[i];
    }
    HPoint {
        x,
        y,
        t: a.t + b.t + 2.0 * symp,
    }
}

/// Group product `xi o eta`.
pub fn compose(xi: &HPoint, eta: &HPoint) -> Result<HPoint> {
    xi.check_same_dim(eta)?;
    Ok(compose_unchecked(xi, eta))
}

pub fn inverse(xi: &HPoint) -> HPoint {
    HPoint {
        x: xi.x.iter().map(|v| -v).collect(),
        y: xi.y.iter().map(|v| -v).collect(),
        t: -xi.t,
    }
}

/// Parabolic dilation `(λx, λy, λ²t)`.
pub fn dilate(lambda: f64, xi: &HPoint) -> Result<HPoint> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositive {
            what: "dilation factor",
            value: lambda,
        });
    }
    Ok(HPoint {
        x: xi.x.iter().map(|v| lambda * v).collect(),
        y: xi.y.iter().map(|v| lambda * v).collect(),
        t: lambda * lambda * xi.t,
    })
}

/// Korányi gauge.
#[inline]
pub fn hnorm(xi: &HPoint) -> f64 {
    let e = xi.horizontal_sq();
    // hypot keeps the fourth power away from overflow
    e.hypot(xi.t).sqrt()
}

#[inline]
pub(crate) fn hdist_unchecked(xi: &HPoint, eta: &HPoint) -> f64 {
    let (e, f) = dist_ef(eta, xi);
    e.hypot(f).sqrt()
}

/// `E` and `F` of `xi0^{-1} o xi`, i.e. the squared horizontal offset and the
/// twisted vertical offset.
#[inline]
pub(crate) fn dist_ef(xi0: &HPoint, xi: &HPoint) -> (f64, f64) {
    let mut e = 0.0;
    let mut twist = 0.0;
    for i in 0..xi.n() {
        let dx = xi.x[i] - xi0.x[i];
        let dy = xi.y[i] - xi0.y[i];
        e += dx * dx + dy * dy;
        twist += xi.x[i] * xi0.y[i] - xi.y[i] * xi0.x[i];
    }
    (e, xi.t - xi0.t - 2.0 * twist)
}

/// Gauge distance `|eta^{-1} o xi|`.
pub fn hdist(xi: &HPoint, eta: &HPoint) -> Result<f64> {
    xi.check_same_dim(eta)?;
    Ok(hdist_unchecked(xi, eta))
}

/// Ratio `d(xi, eta) / (d(xi, zeta) + d(zeta, eta))`; bounded by 3.
pub fn quasi_triangle_defect(xi: &HPoint, eta: &HPoint, zeta: &HPoint) -> Result<f64> {
    xi.check_same_dim(eta)?;
    xi.check_same_dim(zeta)?;
    let num = hdist_unchecked(xi, eta);
    let den = hdist_unchecked(xi, zeta) + hdist_unchecked(zeta, eta);
    if den == 0.0 {
        return Err(Error::Undefined("all three points coincide"));
    }
    Ok(num / den)
}

/// Ratio `|eta^{-1} o xi| / (|xi| + |eta|)`; bounded by 3.
pub fn product_norm_ratio(xi: &HPoint, eta: &HPoint) -> Result<f64> {
    xi.check_same_dim(eta)?;
    let den = hnorm(xi) + hnorm(eta);
    if den == 0.0 {
        return Err(Error::Undefined("both points are the origin"));
    }
    Ok(hdist_unchecked(xi, eta) / den)
}

/// Open gauge ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HBall {
    pub center: HPoint,
    pub radius: f64,
}

impl HBall {
    pub fn new(center: HPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::NonPositive {
                what: "ball radius",
                value: radius,
            });
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, xi: &HPoint) -> bool {
        hdist_unchecked(xi, &self.center) < self.radius
    }

    /// Smallest coordinate box containing the ball.
    pub fn bounding_box(&self) -> HBox {
        let r = self.radius;
        let c = &self.center;
        let cz = c.horizontal_sq().sqrt();
        let ht = r * r + 2.0 * r * cz;
        HBox {
            lo: HPoint {
                x: c.x.iter().map(|v| v - r).collect(),
                y: c.y.iter().map(|v| v - r).collect(),
                t: c.t - ht,
            },
            hi: HPoint {
                x: c.x.iter().map(|v| v + r).collect(),
                y: c.y.iter().map(|v| v + r).collect(),
                t: c.t + ht,
            },
        }
    }
}

/// Axis-aligned coordinate box `[lo, hi]` in `R^{2n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HBox {
    pub lo: HPoint,
    pub hi: HPoint,
}

impl HBox {
    pub fn new(lo: HPoint, hi: HPoint) -> Result<Self> {
        lo.check_same_dim(&hi)?;
        let ok = lo
            .to_flat()
            .iter()
            .zip(hi.to_flat().iter())
            .all(|(a, b)| a <= b && a.is_finite() && b.is_finite());
        if !ok {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-a, a]^{2n+1}`.
    pub fn cube(n: usize, a: f64) -> Result<Self> {
        let lo = HPoint::from_flat(n, &vec![-a; 2 * n + 1])?;
        let hi = HPoint::from_flat(n, &vec![a; 2 * n + 1])?;
        Self::new(lo, hi)
    }

    pub fn n(&self) -> usize {
        self.lo.n()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .to_flat()
            .iter()
            .zip(self.hi.to_flat().iter())
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn contains(&self, xi: &HPoint) -> bool {
        let lo = self.lo.to_flat();
        let hi = self.hi.to_flat();
        xi.to_flat()
            .iter()
            .enumerate()
            .all(|(i, v)| *v >= lo[i] && *v <= hi[i])
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &HBox) -> HBox {
        let lo: Vec<f64> = self
            .lo
            .to_flat()
            .iter()
            .zip(other.lo.to_flat())
            .map(|(a, b)| a.min(b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .to_flat()
            .iter()
            .zip(other.hi.to_flat())
            .map(|(a, b)| a.max(b))
            .collect();
        let n = self.n();
        HBox {
            lo: HPoint::from_flat(n, &lo).expect("finite"),
            hi: HPoint::from_flat(n, &hi).expect("finite"),
        }
    }

    /// Largest coordinate extent mapped to a gauge length: `max(Δx, Δy, sqrt(Δt))`.
    pub fn gauge_diameter(&self) -> f64 {
        let lo = self.lo.to_flat();
        let hi = self.hi.to_flat();
        let n = self.n();
        let mut d: f64 = 0.0;
        for i in 0..2 * n {
            d = d.max(hi[i] - lo[i]);
        }
        d.max((hi[2 * n] - lo[2 * n]).sqrt())
    }
}

/// `Γ(m/2)` for a positive integer `m`.
pub fn gamma_half_integer(m: u32) -> f64 {
    assert!(m > 0);
    let (mut g, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Dimension bundle of `H^n` together with the sharp-constant data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDim {
    pub n: usize,
    /// Homogeneous dimension `2n + 2`.
    pub q: usize,
    /// Conjugate exponent `Q / (Q - 1)`.
    pub q_prime: f64,
    pub sigma_q: f64,
    pub alpha_q: f64,
    /// Surface area of the unit sphere in `R^{2n}`.
    pub omega_2n_minus_1: f64,
    /// `|B_h(0, 1)|`, computed by one-dimensional Gauss-Jacobi quadrature.
    pub unit_ball_volume: f64,
    pub unit_ball_volume_error: f64,
}

impl GroupDim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let q = 2 * n + 2;
        let qf = q as f64;
        let omega = 2.0 * PI.powi(n as i32) / gamma_half_integer(2 * n as u32);
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        let sigma_q = gamma_half_integer(1) * gamma_half_integer(2 * n as u32 + 1) * omega / factorial;
        let alpha_q = qf * sigma_q.powf(1.0 / (qf - 1.0));
        let (vol, err) = unit_ball_volume(n, omega)?;
        Ok(Self {
            n,
            q,
            q_prime: qf / (qf - 1.0),
            sigma_q,
            alpha_q,
            omega_2n_minus_1: omega,
            unit_ball_volume: vol,
            unit_ball_volume_error: err,
        })
    }

    pub fn q_f64(&self) -> f64 {
        self.q as f64
    }

    /// Sharp exponent `alpha_Q (1 - beta / Q)`.
    pub fn threshold(&self, beta: f64) -> f64 {
        self.alpha_q * (1.0 - beta / self.q_f64())
    }

    pub fn origin(&self) -> HPoint {
        HPoint::origin(self.n)
    }
}

// |B_h(0,1)| = omega * \int_0^1 v^{n-1} sqrt(1 - v^2) dv, with the square-root
// endpoint absorbed into the Jacobi weight (1 - v)^{1/2}.
fn unit_ball_volume(n: usize, omega: f64) -> Result<(f64, f64)> {
    let integrate = |order: usize| -> Result<f64> {
        let rule = gauss::gauss_jacobi_unit(order, 0.5, 0.0)?;
        Ok(rule
            .iter()
            .map(|&(v, w)| w * v.powi(n as i32 - 1) * (1.0 + v).sqrt())
            .sum::<f64>())
    };
    let fine = integrate(24)?;
    let coarse = integrate(16)?;
    Ok((omega * fine, omega * (fine - coarse).abs()))
}

/// `|B_h(xi, r)| = |B_h(0, 1)| r^Q`.
pub fn ball_volume(dim: &GroupDim, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositive {
            what: "radius",
            value: r,
        });
    }
    Ok(dim.unit_ball_volume * r.powi(dim.q as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_hand_evaluated() {
        let p = compose(&HPoint::h1(1.0, 0.0, 0.0), &HPoint::h1(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(p, HPoint::h1(1.0, 1.0, -2.0));
    }

    #[test]
    fn identity_and_inverse() {
        let xi = HPoint::h1(1.0, 2.0, 3.0);
        assert_eq!(compose(&xi, &HPoint::origin(1)).unwrap(), xi);
        assert_eq!(inverse(&xi), HPoint::h1(-1.0, -2.0, -3.0));
        assert!(compose(&xi, &inverse(&xi)).unwrap().is_origin());
        assert_eq!(inverse(&inverse(&xi)), xi);
        assert!(inverse(&HPoint::origin(1)).is_origin());
    }

    #[test]
    fn compose_rejects_mixed_dimensions() {
        let a = HPoint::h1(1.0, 0.0, 0.0);
        let b = HPoint::origin(2);
        assert!(matches!(
            compose(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(hdist(&a, &b).is_err());
    }

    #[test]
    fn dilation_examples() {
        assert_eq!(
            dilate(2.0, &HPoint::h1(1.0, 1.0, 1.0)).unwrap(),
            HPoint::h1(2.0, 2.0, 4.0)
        );
        let xi = HPoint::h1(0.3, -1.1, 2.0);
        assert_eq!(dilate(1.0, &xi).unwrap(), xi);
        assert!(dilate(0.0, &xi).is_err());
        assert!(dilate(-1.0, &xi).is_err());
    }

    #[test]
    fn gauge_examples() {
        assert_relative_eq!(hnorm(&HPoint::h1(1.0, 1.0, 0.0)), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(hnorm(&HPoint::h1(0.0, 0.0, 4.0)), 2.0, epsilon = 1e-15);
        assert_eq!(hnorm(&HPoint::origin(3)), 0.0);
        assert_eq!(
            hdist(&HPoint::h1(1.0, 0.0, 0.0), &HPoint::origin(1)).unwrap(),
            1.0
        );
    }

    #[test]
    fn defect_examples() {
        let a = HPoint::h1(0.0, 0.0, 0.0);
        let b = HPoint::h1(1.0, 0.0, 0.0);
        let c = HPoint::h1(2.0, 0.0, 0.0);
        assert_relative_eq!(quasi_triangle_defect(&a, &c, &b).unwrap(), 1.0, epsilon = 1e-15);
        let eta = HPoint::h1(0.5, -2.0, 1.0);
        assert_eq!(quasi_triangle_defect(&a, &eta, &a).unwrap(), 1.0);
        assert!(matches!(
            quasi_triangle_defect(&b, &b, &b),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn constants_for_n1() {
        let d = GroupDim::new(1).unwrap();
        assert_eq!(d.q, 4);
        assert_relative_eq!(d.q_prime * 3.0, 4.0);
        assert_relative_eq!(d.omega_2n_minus_1, 2.0 * PI, epsilon = 1e-15);
        assert_relative_eq!(d.sigma_q, PI * PI, max_relative = 1e-14);
        assert_relative_eq!(d.alpha_q, 4.0 * PI.powf(2.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(d.unit_ball_volume, PI * PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn unit_ball_volume_matches_beta_function() {
        // omega * B(n/2, 3/2) / 2
        for n in 1..=4usize {
            let d = GroupDim::new(n).unwrap();
            let beta = gamma_half_integer(n as u32) * gamma_half_integer(3)
                / gamma_half_integer(n as u32 + 3);
            let expect = d.omega_2n_minus_1 * beta / 2.0;
            assert_relative_eq!(d.unit_ball_volume, expect, max_relative = 1e-12);
            assert!(d.unit_ball_volume_error < 1e-10);
        }
    }

    #[test]
    fn ball_volume_scaling() {
        let d = GroupDim::new(1).unwrap();
        assert_relative_eq!(
            ball_volume(&d, 2.0).unwrap(),
            16.0 * PI * PI / 2.0,
            max_relative = 1e-13
        );
        assert!(ball_volume(&d, 1e-6).unwrap() < 1e-20);
        assert!(ball_volume(&d, 0.0).is_err());
    }

    #[test]
    fn gamma_half_integers() {
        assert_relative_eq!(gamma_half_integer(1), PI.sqrt());
        assert_relative_eq!(gamma_half_integer(3), PI.sqrt() / 2.0);
        assert_relative_eq!(gamma_half_integer(2), 1.0);
        assert_relative_eq!(gamma_half_integer(10), 24.0);
    }

    #[test]
    fn bounding_box_contains_ball_samples() {
        let ball = HBall::new(HPoint::h1(3.0, -1.0, 2.0), 1.5).unwrap();
        let bx = ball.bounding_box();
        for i in 0..20 {
            for j in 0..20 {
                let chi = -std::f64::consts::FRAC_PI_2 + PI * (i as f64 + 0.5) / 20.0;
                let th = 2.0 * PI * j as f64 / 20.0;
                let r = 1.4999;
                let g = (1.0 + chi.cos().powi(2)).sqrt();
                let eta = HPoint::h1(
                    r * chi.cos() * th.cos(),
                    r * chi.cos() * th.sin(),
                    r * r * chi.sin() * g,
                );
                let p = compose(&ball.center, &eta).unwrap();
                assert!(ball.contains(&p));
                assert!(bx.contains(&p));
            }
        }
    }
}
