//! Greedy maximal separated nets on bounded boxes, with separation, covering
//! and multiplicity checks.
//!
//! Candidates sit on a lattice of pitch at most `h = ρ/4` in every horizontal
//! coordinate and `h²` in `t`, scanned with `t` slowest and `x` fastest. In
//! each `(x, y)` column the `t`-range is widened by the largest shift
//! `2 Σ (Δx y - Δy x)` the group law puts between a point and its nearest
//! column, so every point of the box has a candidate within gauge distance
//! `0.85 h`. Centers may therefore sit slightly outside the box in `t`. That
//! pass alone covers only at radius `ρ + 0.85 h`; a completion pass on a
//! finer lattice closes the remaining holes there.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::{compose_unchecked, dilate, hdist_unchecked, hnorm, HBox, HPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub centers: Vec<HPoint>,
    /// Separation radius.
    pub rho: f64,
    /// Covering radius used by consumers, `r >= rho`.
    pub r: f64,
    pub region: HBox,
}

impl Net {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn with_radius(mut self, r: f64) -> Result<Self> {
        if !(r >= self.rho) {
            return Err(Error::Precondition(format!(
                "covering radius {r} is below the separation {}",
                self.rho
            )));
        }
        self.r = r;
        Ok(self)
    }
}

/// Horizontal bucketing of points for radius queries.
#[derive(Debug, Clone)]
pub struct CenterIndex {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl CenterIndex {
    pub fn new(points: &[HPoint], cell: f64) -> Self {
        let mut idx = Self {
            cell,
            buckets: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            idx.insert(i, p);
        }
        idx
    }

    fn key(&self, p: &HPoint) -> Vec<i64> {
        p.x.iter()
            .chain(p.y.iter())
            .map(|v| (v / self.cell).floor() as i64)
            .collect()
    }

    pub fn insert(&mut self, i: usize, p: &HPoint) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(i);
    }

    /// Calls `f(i)` for every stored index whose horizontal offset from `p`
    /// is below `radius` in each coordinate (a superset of the gauge ball).
    pub fn for_each_near<F: FnMut(usize)>(&self, p: &HPoint, radius: f64, mut f: F) {
        let base = self.key(p);
        let reach = (radius / self.cell).ceil() as i64;
        let dims = base.len();
        let mut off = vec![-reach; dims];
        loop {
            let k: Vec<i64> = base.iter().zip(&off).map(|(b, o)| b + o).collect();
            if let Some(v) = self.buckets.get(&k) {
                v.iter().for_each(|&i| f(i));
            }
            let mut d = 0;
            loop {
                if d == dims {
                    return;
                }
                off[d] += 1;
                if off[d] <= reach {
                    break;
                }
                off[d] = -reach;
                d += 1;
            }
        }
    }
}

fn axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let m = ((hi - lo) / pitch - 1e-9).ceil().max(1.0) as usize;
    (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect()
}

// Horizontal lattice points, x fastest then y.
fn horizontal_lattice(region: &HBox, pitch: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = region.n();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        axes.push(axis(region.lo.x[i], region.hi.x[i], pitch));
    }
    for i in 0..n {
        axes.push(axis(region.lo.y[i], region.hi.y[i], pitch));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; 2 * n];
    loop {
        let x = (0..n).map(|i| axes[i][idx[i]]).collect();
        let y = (0..n).map(|i| axes[n + i][idx[n + i]]).collect();
        out.push((x, y));
        let mut d = 0;
        loop {
            if d == 2 * n {
                return out;
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Refinement of the lattice on which [`greedy_net`] completes its net.
pub const COMPLETION_REFINE: usize = 4;

// Open t-intervals cut from the column over `(x, y)` by the balls `B(c, rho)`.
fn column_intervals(index: &CenterIndex, centers: &[HPoint], x: &[f64], y: &[f64], rho: f64) -> Vec<(f64, f64)> {
    let rho4 = rho.powi(4);
    let probe = HPoint {
        x: x.iter().copied().collect(),
        y: y.iter().copied().collect(),
        t: 0.0,
    };
    let mut iv = Vec::new();
    index.for_each_near(&probe, rho, |j| {
        let c = &centers[j];
        let mut e = 0.0;
        let mut shift = 0.0;
        for i in 0..x.len() {
            let (dx, dy) = (x[i] - c.x[i], y[i] - c.y[i]);
            e += dx * dx + dy * dy;
            shift += x[i] * c.y[i] - y[i] * c.x[i];
        }
        if e * e < rho4 {
            let half = (rho4 - e * e).sqrt();
            let s = c.t + 2.0 * shift;
            iv.push((s - half, s + half));
        }
    });
    iv
}

/// Greedy maximal `rho`-separated net: a pass over the candidate lattice,
/// then a completion pass adding every still-uncovered point of the lattice
/// [`COMPLETION_REFINE`] times finer, inside the region shrunk by one pitch.
pub fn greedy_net(region: &HBox, rho: f64) -> Result<Net> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPositive {
            what: "net separation",
            value: rho,
        });
    }
    if !region.lo.is_finite() || !region.hi.is_finite() {
        return Err(Error::EmptyRegion);
    }
    let h = rho / 4.0;
    let n = region.n();
    let half = |lo: f64, hi: f64| {
        let a = axis(lo, hi, h);
        if a.len() > 1 {
            0.5 * (a[1] - a[0])
        } else {
            0.0
        }
    };
    let hx: Vec<f64> = (0..n).map(|i| half(region.lo.x[i], region.hi.x[i])).collect();
    let hy: Vec<f64> = (0..n).map(|i| half(region.lo.y[i], region.hi.y[i])).collect();
    // bound on |2 Σ (Δx y - Δy x)| for a point within half a pitch of the column
    let shift = |x: &[f64], y: &[f64]| 2.0 * (0..n).map(|i| hx[i] * y[i].abs() + hy[i] * x[i].abs()).sum::<f64>();
    let columns: Vec<(Vec<f64>, Vec<f64>, f64)> = horizontal_lattice(region, h)
        .into_iter()
        .map(|(x, y)| {
            let m = shift(&x, &y);
            (x, y, m)
        })
        .collect();
    let widen = columns.iter().map(|c| c.2).fold(0.0, f64::max);
    let tlat = axis(region.lo.t - widen, region.hi.t + widen, h * h);

    let mut centers: Vec<HPoint> = Vec::new();
    let mut index = CenterIndex::new(&[], rho);
    let rho4 = rho.powi(4);
    for &t in &tlat {
        for (x, y, m) in &columns {
            if t < region.lo.t - m || t > region.hi.t + m {
                continue;
            }
            let p = HPoint {
                x: x.iter().copied().collect(),
                y: y.iter().copied().collect(),
                t,
            };
            let mut free = true;
            index.for_each_near(&p, rho, |i| {
                if free {
                    let c = &centers[i];
                    let e: f64 = (0..p.n())
                        .map(|k| (p.x[k] - c.x[k]).powi(2) + (p.y[k] - c.y[k]).powi(2))
                        .sum();
                    let f = p.t - c.t - 2.0 * (0..p.n()).map(|k| p.x[k] * c.y[k] - p.y[k] * c.x[k]).sum::<f64>();
                    if e * e + f * f < rho4 {
                        free = false;
                    }
                }
            });
            if free {
                index.insert(centers.len(), &p);
                centers.push(p);
            }
        }
    }
    // A point outside every open ball is at distance >= rho from all
    // centers, so adding it keeps the net separated.
    let (cols, ts) = lattice_axes(region, rho, COMPLETION_REFINE);
    for (x, y) in &cols {
        let mut iv = column_intervals(&index, &centers, x, y, rho);
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut k, mut reach) = (0, f64::NEG_INFINITY);
        for &t in &ts {
            while k < iv.len() && iv[k].0 < t {
                reach = reach.max(iv[k].1);
                k += 1;
            }
            if !(reach > t) {
                let p = HPoint {
                    x: x.iter().copied().collect(),
                    y: y.iter().copied().collect(),
                    t,
                };
                index.insert(centers.len(), &p);
                centers.push(p);
                reach = t + rho * rho;
            }
        }
    }
    Ok(Net {
        centers,
        rho,
        r: rho,
        region: region.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub centers: usize,
    /// Smallest pairwise distance among neighbouring centers (infinite for one center).
    pub min_distance: f64,
    pub violations: Vec<(usize, usize, f64)>,
    pub sixth_ball_samples: usize,
    pub sixth_ball_overlaps: usize,
    pub passed: bool,
}

// Fixed probe directions on the unit gauge sphere.
fn unit_directions(n: usize) -> Vec<HPoint> {
    let mut dirs = Vec::new();
    for k in 0..2 * n {
        for s in [-1.0, 1.0] {
            let mut v = vec![0.0; 2 * n + 1];
            v[k] = s;
            dirs.push(v);
        }
    }
    for s in [-1.0, 1.0] {
        let mut v = vec![0.0; 2 * n + 1];
        v[2 * n] = s;
        dirs.push(v);
        let mut w = vec![0.5; 2 * n + 1];
        w[2 * n] = s;
        dirs.push(w);
    }
    dirs.into_iter()
        .map(|v| {
            let p = HPoint::from_flat(n, &v).expect("finite");
            dilate(1.0 / hnorm(&p), &p).expect("positive")
        })
        .collect()
}

/// Pairwise `>= rho` check plus a sampled check that the `rho/6` balls are disjoint.
pub fn verify_separation(net: &Net) -> SeparationReport {
    let index = CenterIndex::new(&net.centers, net.rho);
    let mut min_distance = f64::INFINITY;
    let mut violations = Vec::new();
    for (i, c) in net.centers.iter().enumerate() {
        index.for_each_near(c, net.rho, |j| {
            if j > i {
                let d = hdist_unchecked(c, &net.centers[j]);
                min_distance = min_distance.min(d);
                if d < net.rho {
                    violations.push((i, j, d));
                }
            }
        });
    }
    let mut samples = 0;
    let mut overlaps = 0;
    if let Some(first) = net.centers.first() {
        let small = net.rho / 6.0;
        let dirs = unit_directions(first.n());
        for (i, c) in net.centers.iter().enumerate() {
            for u in &dirs {
                let p = compose_unchecked(c, &dilate(0.99 * small, u).expect("positive"));
                samples += 1;
                let mut hit = false;
                index.for_each_near(&p, small, |j| {
                    if j != i && hdist_unchecked(&p, &net.centers[j]) < small {
                        hit = true;
                    }
                });
                overlaps += hit as usize;
            }
        }
    }
    SeparationReport {
        centers: net.centers.len(),
        min_distance,
        passed: violations.is_empty() && overlaps == 0,
        violations,
        sixth_ball_samples: samples,
        sixth_ball_overlaps: overlaps,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub samples: usize,
    pub uncovered: usize,
    /// Largest distance from a sample to its nearest center.
    pub max_gap: f64,
    pub first_uncovered: Option<HPoint>,
    pub passed: bool,
}

/// Checks that each sample lies in some `B(ξ_i, rho)`.
pub fn verify_cover(net: &Net, samples: &[HPoint]) -> CoverReport {
    let index = CenterIndex::new(&net.centers, net.rho);
    let gaps: Vec<f64> = samples
        .par_iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            index.for_each_near(p, net.rho, |j| {
                best = best.min(hdist_unchecked(p, &net.centers[j]));
            });
            if best.is_infinite() {
                best = net.centers.iter().map(|c| hdist_unchecked(p, c)).fold(f64::INFINITY, f64::min);
            }
            best
        })
        .collect();
    let uncovered = gaps.iter().filter(|g| !(**g < net.rho)).count();
    let first = gaps.iter().position(|g| !(*g < net.rho)).map(|i| samples[i].clone());
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    CoverReport {
        samples: samples.len(),
        uncovered,
        max_gap,
        first_uncovered: first,
        passed: uncovered == 0,
    }
}

type Column = (Vec<f64>, Vec<f64>);

// Horizontal columns and t values of the verification lattice.
fn lattice_axes(region: &HBox, rho: f64, refine: usize) -> (Vec<Column>, Vec<f64>) {
    let h = rho / 4.0;
    let mut inner = region.clone();
    for i in 0..region.n() {
        inner.lo.x[i] = (region.lo.x[i] + h).min(region.hi.x[i]);
        inner.hi.x[i] = (region.hi.x[i] - h).max(inner.lo.x[i]);
        inner.lo.y[i] = (region.lo.y[i] + h).min(region.hi.y[i]);
        inner.hi.y[i] = (region.hi.y[i] - h).max(inner.lo.y[i]);
    }
    inner.lo.t = (region.lo.t + h * h).min(region.hi.t);
    inner.hi.t = (region.hi.t - h * h).max(inner.lo.t);
    let fh = h / refine.max(1) as f64;
    (horizontal_lattice(&inner, fh), axis(inner.lo.t, inner.hi.t, fh * fh))
}

/// Lattice `refine` times finer than the construction lattice (parabolically,
/// so `t` is `refine²` times finer), inside the region shrunk by one
/// construction pitch.
pub fn verification_lattice(region: &HBox, rho: f64, refine: usize) -> Vec<HPoint> {
    let (cols, ts) = lattice_axes(region, rho, refine);
    let mut out = Vec::with_capacity(cols.len() * ts.len());
    for &t in &ts {
        for (x, y) in &cols {
            out.push(HPoint {
                x: x.iter().copied().collect(),
                y: y.iter().copied().collect(),
                t,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoverReport {
    pub columns: usize,
    pub samples: usize,
    pub uncovered: usize,
    pub first_uncovered: Option<HPoint>,
    /// Whether every column segment of the shrunk region lies in the union
    /// of the balls, not just its lattice samples.
    pub segments_covered: bool,
    pub passed: bool,
}

/// [`verify_cover`] over [`verification_lattice`] without materializing it.
///
/// On a vertical line with fixed `(x, y)` the ball `B(c, rho)` is the open
/// interval `|t - s| < sqrt(rho^4 - E^2)`, where `E` is the horizontal
/// offset and `s` the group-law shift, so each column is a sorted sweep.
pub fn verify_cover_lattice(net: &Net, region: &HBox, refine: usize) -> LatticeCoverReport {
    let (cols, ts) = lattice_axes(region, net.rho, refine);
    let index = CenterIndex::new(&net.centers, net.rho);
    let per_col: Vec<(usize, Option<f64>, bool)> = cols
        .par_iter()
        .map(|(x, y)| {
            let mut iv = column_intervals(&index, &net.centers, x, y, net.rho);
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut k, mut reach) = (0, f64::NEG_INFINITY);
            let mut uncovered = 0;
            let mut first = None;
            for &t in &ts {
                while k < iv.len() && iv[k].0 < t {
                    reach = reach.max(iv[k].1);
                    k += 1;
                }
                if !(reach > t) {
                    uncovered += 1;
                    first.get_or_insert(t);
                }
            }
            let (lo, hi) = (ts[0], ts[ts.len() - 1]);
            let mut cover = lo;
            let mut whole = false;
            for &(a, b) in &iv {
                if a >= cover {
                    break;
                }
                cover = cover.max(b);
                if cover > hi {
                    whole = true;
                    break;
                }
            }
            (uncovered, first, whole)
        })
        .collect();
    let uncovered = per_col.iter().map(|c| c.0).sum();
    let first_uncovered = per_col.iter().zip(&cols).find_map(|((_, f, _), (x, y))| {
        f.map(|t| HPoint {
            x: x.iter().copied().collect(),
            y: y.iter().copied().collect(),
            t,
        })
    });
    LatticeCoverReport {
        columns: cols.len(),
        samples: cols.len() * ts.len(),
        uncovered,
        first_uncovered,
        segments_covered: per_col.iter().all(|c| c.2),
        passed: uncovered == 0,
    }
}

/// `(24 r / rho)^Q`.
pub fn multiplicity_bound(q: usize, r: f64, rho: f64) -> f64 {
    (24.0 * r / rho).powi(q as i32)
}

/// Number of net balls `B(ξ_i, r)` containing `xi`.
pub fn multiplicity(net: &Net, r: f64, xi: &HPoint) -> Result<usize> {
    if !(r >= net.rho) {
        return Err(Error::Precondition(format!("radius {r} is below the separation {}", net.rho)));
    }
    Ok(net.centers.iter().filter(|c| hdist_unchecked(xi, c) < r).count())
}

pub fn max_multiplicity(net: &Net, r: f64, samples: &[HPoint]) -> Result<usize> {
    if !(r >= net.rho) {
        return Err(Error::Precondition(format!("radius {r} is below the separation {}", net.rho)));
    }
    let index = CenterIndex::new(&net.centers, net.rho);
    Ok(samples
        .par_iter()
        .map(|p| {
            let mut k = 0;
            index.for_each_near(p, r, |j| {
                if hdist_unchecked(p, &net.centers[j]) < r {
                    k += 1;
                }
            });
            k
        })
        .max()
        .unwrap_or(0))
}
