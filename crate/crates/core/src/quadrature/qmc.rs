//! Randomly shifted Halton sampling for `n >= 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hgroup::{HBall, HBox, HPoint};

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `points` Halton nodes in each of `replicas` Cranley-Patterson shifted copies.
/// Returns `(nodes, weights, replica ids)`.
pub(crate) fn shifted_halton(
    region: &HBox,
    mask: Option<&HBall>,
    singular: Option<&HPoint>,
    points: usize,
    replicas: usize,
    seed: u64,
) -> Result<(Vec<HPoint>, Vec<f64>, Vec<u32>)> {
    let n = region.n();
    let d = 2 * n + 1;
    if d > PRIMES.len() {
        return Err(Error::InvalidArgument(format!("quasi-random rule supports n <= 7, got {n}")));
    }
    if points == 0 || replicas < 2 {
        return Err(Error::InvalidArgument(
            "quasi-random rule needs points >= 1 and replicas >= 2".into(),
        ));
    }
    let lo = region.lo.to_flat();
    let hi = region.hi.to_flat();
    let w = region.volume() / (points * replicas) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut ids = Vec::new();
    let mut coords = vec![0.0; d];
    for r in 0..replicas {
        let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        for i in 1..=points as u64 {
            for k in 0..d {
                let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                coords[k] = lo[k] + (hi[k] - lo[k]) * u;
            }
            let p = HPoint::from_flat(n, &coords)?;
            if mask.is_some_and(|b| !b.contains(&p)) || singular.is_some_and(|s| *s == p) {
                continue;
            }
            nodes.push(p);
            weights.push(w);
            ids.push(r as u32);
        }
    }
    Ok((nodes, weights, ids))
}
