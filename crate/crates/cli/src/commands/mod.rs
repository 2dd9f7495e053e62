//! One module per subcommand; each returns an [`Outcome`](crate::report::Outcome).

pub mod covering;
pub mod cutoff;
pub mod functional;
pub mod geometry;
pub mod glue;
pub mod moser;

use heisenberg_tm::HPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the cube `[-l, l]^{2n+1}`.
pub(crate) fn random_point(rng: &mut ChaCha8Rng, n: usize, l: f64) -> HPoint {
    let v: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-l..l)).collect();
    HPoint::from_flat(n, &v).expect("length 2n + 1 and finite")
}
