//! Cartesian tensor rule on a box of `H^1` with exact alignment to gauge spheres.
//!
//! Integration order is `y`, then `x`, then `t`. For a sphere `d(ξ, c) = r`
//! the `t`-crossings over a fixed `(x, y)` are explicit,
//!
//! ```text
//! t = c_t + 2 (x c_y - y c_x) ± sqrt(r⁴ - E²),   E = |z - c_z|² < r²,
//! ```
//!
//! so every `t`-panel lies on one side of every registered sphere. After the
//! `t`-integration the remaining function of `(x, y)` has square-root edges on
//! the circles `|z - c_z| = r`; `x`-panels ending on such a circle use a cosine
//! map that absorbs the square root, and `y`-panels break at `c_y ± r`.

use super::gauss::gauss_legendre;
use super::NodeSet;
use crate::error::{Error, Result};
use crate::hgroup::{HBox, HPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sphere {
    pub cx: f64,
    pub cy: f64,
    pub ct: f64,
    pub r: f64,
}

impl Sphere {
    pub fn new(c: &HPoint, r: f64) -> Self {
        Self {
            cx: c.x[0],
            cy: c.y[0],
            ct: c.t,
            r,
        }
    }

    #[inline]
    fn ef(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * dx + dy * dy, t - self.ct - 2.0 * (x * self.cy - y * self.cx))
    }

    #[inline]
    pub fn inside(&self, x: f64, y: f64, t: f64) -> bool {
        let (e, f) = self.ef(x, y, t);
        e * e + f * f < self.r.powi(4)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TensorSpec {
    pub region: HBox,
    pub cells: usize,
    /// Breakpoint spheres.
    pub spheres: Vec<Sphere>,
    /// Points inside any of these are dropped.
    pub exclude: Vec<Sphere>,
    /// When set, only points inside are kept.
    pub mask: Option<Sphere>,
    /// Singular point and outer radius of the dyadic zone around it.
    pub grading: Option<Sphere>,
    pub max_nodes: usize,
}

// Panel [a, b] whose ends may carry a square-root edge.
fn push_mapped(out: &mut Vec<(f64, f64)>, gl: &[(f64, f64)], a: f64, b: f64, sa: bool, sb: bool) {
    use std::f64::consts::PI;
    let len = b - a;
    for &(u, w) in gl {
        let (x, wx) = match (sa, sb) {
            (false, false) => (a + 0.5 * len * (u + 1.0), 0.5 * len * w),
            (true, true) => {
                let th = 0.5 * PI * (u + 1.0);
                (a + 0.5 * len * (1.0 - th.cos()), w * 0.5 * PI * 0.5 * len * th.sin())
            }
            (true, false) => {
                let th = 0.25 * PI * (u + 1.0);
                (a + len * (1.0 - th.cos()), w * 0.25 * PI * len * th.sin())
            }
            (false, true) => {
                let th = 0.25 * PI * (u + 1.0);
                (b - len * (1.0 - th.cos()), w * 0.25 * PI * len * th.sin())
            }
        };
        out.push((x, wx));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Brk {
    /// Artificial panel boundary.
    Plain,
    /// The integrand is only piecewise smooth here.
    Edge,
    /// Square-root edge, absorbed by the cosine map.
    Sqrt,
}

// Sorted, deduplicated breaks. A plain break sitting much closer to an edge
// than to its other neighbour is dropped: it would leave the edge just
// outside a panel, where Gauss rules converge slowly.
fn merged_breaks(mut pts: Vec<(f64, Brk)>, scale: f64) -> Vec<(f64, Brk)> {
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let tol = 1e-13 * scale;
    let mut out: Vec<(f64, Brk)> = Vec::with_capacity(pts.len());
    for (v, kind) in pts {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= tol => last.1 = last.1.max(kind),
            _ => out.push((v, kind)),
        }
    }
    let mut i = 1;
    while i + 1 < out.len() {
        let (a, v, b) = (out[i - 1], out[i], out[i + 1]);
        let crowded = v.1 == Brk::Plain
            && ((b.1 != Brk::Plain && b.0 - v.0 < 0.2 * (v.0 - a.0))
                || (a.1 != Brk::Plain && v.0 - a.0 < 0.2 * (b.0 - v.0)));
        if crowded {
            out.remove(i);
        } else {
            i += 1;
        }
    }
    out
}

fn uniform(lo: f64, hi: f64, m: usize) -> Vec<(f64, Brk)> {
    (0..=m)
        .map(|k| (lo + (hi - lo) * k as f64 / m as f64, Brk::Plain))
        .collect()
}

pub(crate) fn tensor_nodes(spec: &TensorSpec, order: usize) -> Result<NodeSet> {
    let bx = &spec.region;
    if bx.n() != 1 {
        return Err(Error::Precondition("tensor rule is implemented for n = 1".into()));
    }
    let (x0, x1) = (bx.lo.x[0], bx.hi.x[0]);
    let (y0, y1) = (bx.lo.y[0], bx.hi.y[0]);
    let (t0, t1) = (bx.lo.t, bx.hi.t);
    let m = spec.cells.max(1);
    let gl = gauss_legendre(order);
    let scale = (x1 - x0).abs().max((y1 - y0).abs()).max((t1 - t0).abs()).max(1.0);

    let mut all: Vec<Sphere> = spec.spheres.clone();
    all.extend(spec.exclude.iter().copied());
    all.extend(spec.mask.iter().copied());

    let mut set = NodeSet::default();
    let mut ypts = uniform(y0, y1, m);
    for s in &all {
        for v in [s.cy - s.r, s.cy + s.r] {
            if v > y0 && v < y1 {
                ypts.push((v, Brk::Edge));
            }
        }
    }
    let ypts = merged_breaks(ypts, scale);
    let mut ynodes = Vec::new();
    for w in ypts.windows(2) {
        push_mapped(&mut ynodes, &gl, w[0].0, w[1].0, false, false);
    }

    let mut xnodes = Vec::new();
    let mut tnodes = Vec::new();
    for &(y, wy) in &ynodes {
        let mut xpts = uniform(x0, x1, m);
        for s in &all {
            let dy = y - s.cy;
            let h2 = s.r * s.r - dy * dy;
            if h2 > 0.0 {
                let h = h2.sqrt();
                for v in [s.cx - h, s.cx + h] {
                    if v > x0 && v < x1 {
                        xpts.push((v, Brk::Sqrt));
                    }
                }
            }
        }
        if let Some(g) = &spec.grading {
            // geometric panels toward the line through the singular point
            let mut d = (y - g.cy).abs();
            while d > 0.0 && d < g.r {
                for v in [g.cx - d, g.cx + d] {
                    if v > x0 && v < x1 {
                        xpts.push((v, Brk::Plain));
                    }
                }
                d *= 2.0;
            }
        }
        let xpts = merged_breaks(xpts, scale);
        xnodes.clear();
        for w in xpts.windows(2) {
            push_mapped(&mut xnodes, &gl, w[0].0, w[1].0, w[0].1 == Brk::Sqrt, w[1].1 == Brk::Sqrt);
        }
        for &(x, wx) in &xnodes {
            let mut tpts = uniform(t0, t1, m);
            for s in &all {
                let (e, _) = s.ef(x, y, 0.0);
                let r2 = s.r * s.r;
                if e < r2 {
                    let half = ((r2 - e) * (r2 + e)).sqrt();
                    let base = s.ct + 2.0 * (x * s.cy - y * s.cx);
                    for v in [base - half, base + half] {
                        if v > t0 && v < t1 {
                            tpts.push((v, Brk::Edge));
                        }
                    }
                }
            }
            if let Some(g) = &spec.grading {
                let (e, _) = g.ef(x, y, 0.0);
                let base = g.ct + 2.0 * (x * g.cy - y * g.cx);
                let mut d = e;
                while d > 0.0 && d < g.r * g.r {
                    for v in [base - d, base + d] {
                        if v > t0 && v < t1 {
                            tpts.push((v, Brk::Plain));
                        }
                    }
                    d *= 2.0;
                }
            }
            let tpts = merged_breaks(tpts, scale);
            for w in tpts.windows(2) {
                let (a, b) = (w[0].0, w[1].0);
                let mid = 0.5 * (a + b);
                if spec.exclude.iter().any(|s| s.inside(x, y, mid)) {
                    continue;
                }
                if let Some(mk) = &spec.mask {
                    if !mk.inside(x, y, mid) {
                        continue;
                    }
                }
                tnodes.clear();
                push_mapped(&mut tnodes, &gl, a, b, false, false);
                for &(t, wt) in &tnodes {
                    let wgt = wy * wx * wt;
                    if wgt > 0.0 {
                        set.push(HPoint::h1(x, y, t), wgt);
                    }
                }
            }
            if set.len() > spec.max_nodes {
                return Err(Error::Precondition(format!(
                    "tensor rule exceeds the node budget of {}",
                    spec.max_nodes
                )));
            }
        }
    }
    Ok(set)
}
