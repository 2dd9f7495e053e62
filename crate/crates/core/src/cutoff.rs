//! Transition profile and gauge-ball cutoffs.
//!
//! The profile is `1` on `[-1, 1]`, `0` outside `(-2, 2)` and on `1 < |s| < 2`
//! follows the reversed quintic smoothstep `1 - (6u^5 - 15u^4 + 10u^3)`,
//! `u = |s| - 1`. It is C², and `max |φ'| = 15/8`.

use crate::calculus::{dist_euclidean_partials, EuclidGrad, ScalarField, Support};
use crate::error::{Error, Result};
use crate::hgroup::{hdist_unchecked, HBall, HPoint};

/// Exact maximum of `|φ'|` for the quintic profile.
pub const PROFILE_DERIV_MAX: f64 = 15.0 / 8.0;

#[inline]
pub fn profile(s: f64) -> f64 {
    let a = s.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let u = a - 1.0;
        (1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))).clamp(0.0, 1.0)
    }
}

#[inline]
pub fn profile_deriv(s: f64) -> f64 {
    let a = s.abs();
    if a <= 1.0 || a >= 2.0 {
        0.0
    } else {
        let u = a - 1.0;
        let d = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        -d * s.signum()
    }
}

/// The transition profile with its certified constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub plateau: (f64, f64),
    pub support: (f64, f64),
    pub deriv_bound: f64,
}

impl BumpProfile {
    pub fn eval(&self, s: f64) -> f64 {
        profile(s)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        profile_deriv(s)
    }
}

pub fn bump_profile() -> BumpProfile {
    BumpProfile {
        plateau: (-1.0, 1.0),
        support: (-2.0, 2.0),
        deriv_bound: PROFILE_DERIV_MAX,
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositive {
            what: "cutoff radius",
            value: r,
        });
    }
    Ok(())
}

/// `φ(d(ξ, center) / r)`: one on `B(center, r)`, supported in `B(center, 2r)`.
pub fn ball_cutoff(center: &HPoint, r: f64) -> Result<ScalarField> {
    check_radius(r)?;
    let n = center.n();
    let c_eval = center.clone();
    let c_part = center.clone();
    let support = Support::ball(HBall::new(center.clone(), 2.0 * r)?).with_kinks(vec![r]);
    Ok(ScalarField::new(n, move |xi| profile(hdist_unchecked(xi, &c_eval) / r))
        .with_partials(move |xi| {
            let rho = hdist_unchecked(xi, &c_part);
            let d = profile_deriv(rho / r);
            if d == 0.0 {
                return EuclidGrad::from_elem(0.0, 2 * xi.n() + 1);
            }
            let mut g = dist_euclidean_partials(&c_part, xi).expect("rho > r > 0 here");
            for v in g.iter_mut() {
                *v *= d / r;
            }
            g
        })
        .with_support(support))
}

/// `φ(d(ξ, center) / r)^2`.
pub fn squared_cutoff(center: &HPoint, r: f64) -> Result<ScalarField> {
    check_radius(r)?;
    let n = center.n();
    let c_eval = center.clone();
    let c_part = center.clone();
    let support = Support::ball(HBall::new(center.clone(), 2.0 * r)?).with_kinks(vec![r]);
    Ok(ScalarField::new(n, move |xi| {
        let p = profile(hdist_unchecked(xi, &c_eval) / r);
        p * p
    })
    .with_partials(move |xi| {
        let rho = hdist_unchecked(xi, &c_part);
        let d = profile_deriv(rho / r);
        if d == 0.0 {
            return EuclidGrad::from_elem(0.0, 2 * xi.n() + 1);
        }
        let p = profile(rho / r);
        let mut g = dist_euclidean_partials(&c_part, xi).expect("rho > r > 0 here");
        for v in g.iter_mut() {
            *v *= 2.0 * p * d / r;
        }
        g
    })
    .with_support(support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{fd_hgrad, hgrad_norm};
    use crate::hgroup::{compose, dilate, hnorm};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_constraints() {
        let p = bump_profile();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(2.0), 0.0);
        assert_eq!(p.eval(-2.0), 0.0);
        assert_relative_eq!(p.eval(1.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.eval(-1.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn derivative_bound_on_dense_grid() {
        let n = 1_000_000;
        let mut max: f64 = 0.0;
        for i in 0..=n {
            let s = -3.0 + 6.0 * i as f64 / n as f64;
            let v = profile(s);
            assert!((0.0..=1.0).contains(&v));
            max = max.max(profile_deriv(s).abs());
        }
        assert!((max - 1.875).abs() < 1e-9, "max {max}");
        assert!(max <= 2.0);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for i in 1..200 {
            let s = -2.5 + 5.0 * i as f64 / 200.0;
            let fd = (profile(s + h) - profile(s - h)) / (2.0 * h);
            assert!((fd - profile_deriv(s)).abs() < 1e-6, "s = {s}");
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let c = HPoint::h1(0.5, -0.3, 1.0);
        let r = 2.0;
        let phi = ball_cutoff(&c, r).unwrap();
        let dir = HPoint::h1(0.6, 0.0, 0.8);
        let unit = dilate(1.0 / hnorm(&dir), &dir).unwrap();
        let inside = compose(&c, &dilate(r / 2.0, &unit).unwrap()).unwrap();
        assert_eq!(phi.eval(&inside), 1.0);
        assert_eq!(hgrad_norm(&phi, &inside).unwrap(), 0.0);
        let outside = compose(&c, &dilate(3.0 * r, &unit).unwrap()).unwrap();
        assert_eq!(phi.eval(&outside), 0.0);
        assert_eq!(hgrad_norm(&phi, &c).unwrap(), 0.0);

        let phi2 = squared_cutoff(&c, r).unwrap();
        let mid = compose(&c, &dilate(1.5 * r, &unit).unwrap()).unwrap();
        assert_relative_eq!(phi2.eval(&mid), 0.25, epsilon = 1e-12);
        assert_eq!(phi2.eval(&inside), 1.0);
        assert_eq!(hgrad_norm(&phi2, &inside).unwrap(), 0.0);
    }

    #[test]
    fn gradient_bounds_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &r in &[1.0, 5.0] {
            let c = HPoint::h1(1.0, 2.0, -1.0);
            let phi = ball_cutoff(&c, r).unwrap();
            let phi2 = squared_cutoff(&c, r).unwrap();
            for _ in 0..20_000 {
                let eta = HPoint::h1(
                    rng.gen_range(-2.5 * r..2.5 * r),
                    rng.gen_range(-2.5 * r..2.5 * r),
                    rng.gen_range(-6.0 * r * r..6.0 * r * r),
                );
                let xi = compose(&c, &eta).unwrap();
                let g1 = hgrad_norm(&phi, &xi).unwrap();
                let g2 = hgrad_norm(&phi2, &xi).unwrap();
                assert!(g1 <= 2.0 / r + 1e-12);
                assert!(g2 <= 4.0 / r + 1e-12);
                assert!(g2 <= 2.0 * g1 + 1e-12);
            }
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let c = HPoint::h1(0.2, 0.1, -0.4);
        let r = 1.0;
        let phi = ball_cutoff(&c, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 200 {
            let eta = HPoint::h1(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-4.0..4.0),
            );
            let rho = hnorm(&eta);
            if (rho - r).abs() < 0.05 || (rho - 2.0 * r).abs() < 0.05 || rho < 0.05 {
                continue;
            }
            let xi = compose(&c, &eta).unwrap();
            let exact = crate::calculus::hgrad(&phi, &xi).unwrap();
            let fd = fd_hgrad(&phi, &xi, 1e-5).unwrap();
            for (a, b) in exact.a.iter().chain(exact.b.iter()).zip(fd.a.iter().chain(fd.b.iter())) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
            checked += 1;
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(ball_cutoff(&HPoint::origin(1), 0.0).is_err());
        assert!(squared_cutoff(&HPoint::origin(1), -1.0).is_err());
    }
}
