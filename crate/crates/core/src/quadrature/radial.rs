//! Homogeneous-polar reduction of radial integrals to one dimension.
//!
//! For a function of the gauge alone,
//!
//! ```text
//! ∫ g(|ξ|) |∇_H |ξ||^Q dξ = σ_Q ∫_0^∞ g(ρ) ρ^{Q-1} dρ
//! ∫ g(|ξ|) dξ              = Q |B(0,1)| ∫_0^∞ g(ρ) ρ^{Q-1} dρ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::GroupDim;

/// Which surface measure multiplies the radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialKernel {
    /// Integrands `g(ρ) |∇_H ρ|^Q`; constant `σ_Q`.
    GradientWeighted,
    /// Plain radial integrands `g(ρ)`; constant `Q |B(0,1)|`.
    Volume,
}

impl RadialKernel {
    pub fn constant(self, dim: &GroupDim) -> f64 {
        match self {
            RadialKernel::GradientWeighted => dim.sigma_q,
            RadialKernel::Volume => dim.q_f64() * dim.unit_ball_volume,
        }
    }
}

/// Value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Gauss-Kronrod 7-15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<Estimate> {
    let (k, err) = gk15(f, a, b);
    if !k.is_finite() {
        return Err(Error::NonIntegrable(format!("non-finite profile on [{a}, {b}]")));
    }
    if err <= tol.max(1e-15 * k.abs()) || depth == 0 {
        if depth == 0 && err > tol.max(1e-10 * k.abs()) {
            return Err(Error::NonConvergence(format!(
                "adaptive radial quadrature stalled on [{a}, {b}]"
            )));
        }
        return Ok(Estimate { value: k, error: err });
    }
    let m = 0.5 * (a + b);
    let l = adaptive(f, a, m, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, m, b, 0.5 * tol, depth - 1)?;
    Ok(Estimate {
        value: l.value + r.value,
        error: l.error + r.error,
    })
}

/// `∫_a^b f` by adaptive Gauss-Kronrod to absolute tolerance `tol`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    adaptive(&f, a, b, tol, 40)
}

/// `K · ∫_0^R profile(ρ) ρ^{Q-1+power} dρ` where `K` is the kernel constant.
///
/// The first breakpoint interval is integrated over dyadic shells toward the
/// origin; if the shell contributions stop decaying the integrand is reported
/// as non-integrable.
pub fn radial_reduce<F>(
    dim: &GroupDim,
    kernel: RadialKernel,
    profile: F,
    power: f64,
    radius: f64,
    breakpoints: &[f64],
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if !(radius > 0.0) {
        return Err(Error::NonPositive {
            what: "radial extent",
            value: radius,
        });
    }
    let expo = dim.q_f64() - 1.0 + power;
    let g = |rho: f64| {
        let p = profile(rho);
        if p == 0.0 {
            0.0
        } else {
            p * rho.powf(expo)
        }
    };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < radius)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(radius);

    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let est = integrate_1d(g, w[0], w[1], 1e-14)?;
        value += est.value;
        error += est.error;
    }

    // dyadic shells on (0, cuts[0]]
    let mut hi = cuts[0];
    let mut shells: Vec<f64> = Vec::new();
    let mut inner = 0.0;
    for j in 0..2000 {
        let lo = hi * 0.5;
        let est = integrate_1d(g, lo, hi, 1e-16)?;
        inner += est.value;
        error += est.error;
        shells.push(est.value);
        hi = lo;
        if j >= 8 {
            let k = shells.len();
            let (a, b) = (shells[k - 2].abs(), shells[k - 1].abs());
            if b == 0.0 && a == 0.0 {
                break;
            }
            let ratio = if a > 0.0 { b / a } else { 0.0 };
            if j >= 200 && ratio >= 0.999 {
                return Err(Error::NonIntegrable(format!(
                    "shell contributions do not decay toward the origin (ratio {ratio:.4})"
                )));
            }
            if ratio < 1.0 {
                let tail = b * ratio / (1.0 - ratio);
                if tail <= 1e-15 * (value + inner).abs().max(1e-300) {
                    error += tail;
                    break;
                }
            }
        }
        if hi < 1e-280 {
            return Err(Error::NonIntegrable(
                "refinement reached the underflow floor without converging".into(),
            ));
        }
    }
    value += inner;
    let c = kernel.constant(dim);
    Ok(Estimate {
        value: c * value,
        error: c * error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn dim1() -> GroupDim {
        GroupDim::new(1).unwrap()
    }

    #[test]
    fn volume_kernel_reproduces_unit_ball() {
        let est = radial_reduce(&dim1(), RadialKernel::Volume, |_| 1.0, 0.0, 1.0, &[]).unwrap();
        assert_relative_eq!(est.value, PI * PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn gradient_kernel_constant_is_sigma() {
        let est =
            radial_reduce(&dim1(), RadialKernel::GradientWeighted, |_| 1.0, 0.0, 1.0, &[]).unwrap();
        assert_relative_eq!(est.value, PI * PI / 4.0, max_relative = 1e-13);
    }

    #[test]
    fn disjoint_support_is_zero() {
        let f = |r: f64| if r > 2.0 && r < 3.0 { 1.0 } else { 0.0 };
        let est = radial_reduce(&dim1(), RadialKernel::Volume, f, 0.0, 1.0, &[]).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn singular_weight_closed_form() {
        // Q|B1| ∫_0^1 ρ^{3-β} dρ = 2π² / (4 - β)
        for &beta in &[1.0, 2.0, 3.0, 3.9] {
            let est =
                radial_reduce(&dim1(), RadialKernel::Volume, |_| 1.0, -beta, 1.0, &[]).unwrap();
            assert_relative_eq!(est.value, 2.0 * PI * PI / (4.0 - beta), max_relative = 1e-10);
        }
    }

    #[test]
    fn non_integrable_weight_is_flagged() {
        let est = radial_reduce(&dim1(), RadialKernel::Volume, |_| 1.0, -4.0, 1.0, &[]);
        assert!(matches!(est, Err(Error::NonIntegrable(_))));
        let est = radial_reduce(&dim1(), RadialKernel::Volume, |_| 1.0, -4.5, 1.0, &[]);
        assert!(matches!(est, Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn kinked_profile_with_breakpoints() {
        // ∫_{1/k}^1 ρ^{-4} ρ^3 dρ = log k
        let k: f64 = 16.0;
        let f = |r: f64| if r > 1.0 / k && r <= 1.0 { r.powi(-4) } else { 0.0 };
        let est = radial_reduce(&dim1(), RadialKernel::GradientWeighted, f, 0.0, 1.0, &[1.0 / k])
            .unwrap();
        assert_relative_eq!(est.value, PI * PI * k.ln(), max_relative = 1e-12);
    }
}
