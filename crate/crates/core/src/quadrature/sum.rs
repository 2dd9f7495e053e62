//! Fixed-shape reductions. The tree depends only on the slice length, so the
//! result is bit-identical regardless of how the terms were produced.

const LEAF: usize = 16;

/// Pairwise summation with a fixed split at `len / 2`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= LEAF {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// `Σ w_i f_i` over the fixed tree.
pub fn pairwise_dot(w: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), f.len());
    if w.len() <= LEAF {
        let mut s = 0.0;
        for i in 0..w.len() {
            s += w[i] * f[i];
        }
        return s;
    }
    let mid = w.len() / 2;
    pairwise_dot(&w[..mid], &f[..mid]) + pairwise_dot(&w[mid..], &f[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_match_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        let w = vec![2.0; 1000];
        assert_eq!(pairwise_dot(&w, &v), 999_000.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pairwise_is_more_accurate_than_naive() {
        let v = vec![0.1; 1 << 20];
        let naive: f64 = v.iter().sum();
        let exact = 0.1 * (1 << 20) as f64;
        assert!((pairwise_sum(&v) - exact).abs() <= (naive - exact).abs());
    }
}
