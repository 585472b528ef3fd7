//! Constrained costs: the minimizer set `z̄(l)` and a check that an optimal
//! plan is a map `T(x) = x - z̄(∇φ(x))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::costs::{CostSpec, ScalarH};
use crate::error::{RebuildError, TransportError};
use crate::geometry::{section, ConvexPolygon, ConvexSet, Frame, Vec2};
use crate::measure::{DiscreteMeasure, DualPotentials, TransportPlan};

/// `argmin_{z ∈ K} c(z) - ⟨l, z⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ZBar {
    Point(Vec2),
    Segment(Vec2, Vec2),
}

impl ZBar {
    pub fn distance(&self, z: Vec2) -> f64 {
        match *self {
            ZBar::Point(p) => (z - p).norm(),
            ZBar::Segment(a, b) => {
                let d = b - a;
                let t = ((z - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
                (z - (a + t * d)).norm()
            }
        }
    }
}

pub fn zbar(l: Vec2, c: &CostSpec) -> Result<ZBar, RebuildError> {
    match c {
        CostSpec::ConstrainedStrict { k } => Ok(ZBar::Point(k.project(l))),
        CostSpec::ConstrainedOneVar { h, frame, k } => Ok(zbar_onevar(l, *h, frame, k)),
        CostSpec::HNorm { .. } => Err(RebuildError::UnsupportedCost("z̄ needs a constrained cost")),
    }
}

/// Minimize `h(t) - l₁t - l₂s` over `K` in frame coordinates. For fixed `t`
/// the best `s` is an end of the section; between vertex abscissae both ends
/// are affine in `t`, so each piece is a one-dimensional convex problem.
fn zbar_onevar(l: Vec2, h: ScalarH, frame: &Frame, k: &ConvexPolygon) -> ZBar {
    let (l1, l2) = frame.coords(l);
    let mut ts: Vec<f64> = k.vertices().iter().map(|v| frame.coords(*v).0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let (tmin, tmax) = (ts[0], ts[ts.len() - 1]);
    let sect = |t: f64| {
        let t = t.clamp(tmin, tmax);
        section(k, t, frame).unwrap_or_else(|| {
            // numerically at an extreme vertex
            let v = k
                .vertices()
                .iter()
                .min_by(|a, b| {
                    (frame.coords(**a).0 - t)
                        .abs()
                        .total_cmp(&(frame.coords(**b).0 - t).abs())
                })
                .unwrap();
            let s = frame.coords(*v).1;
            crate::geometry::Interval { lo: s, hi: s }
        })
    };
    let s_best = |t: f64| {
        let iv = sect(t);
        if l2 >= 0.0 {
            iv.hi
        } else {
            iv.lo
        }
    };
    let g = |t: f64| h.eval(t) - l1 * t - l2 * s_best(t);

    let mut best_t = tmin;
    let mut best_g = g(tmin);
    let mut consider = |t: f64| {
        let v = g(t);
        if v < best_g {
            best_g = v;
            best_t = t;
        }
    };
    if ts.len() == 1 {
        consider(tmin);
    }
    for w in ts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        // interior endpoints of the piece avoid degenerate vertex sections
        let (pa, pb) = (ta + 1e-9 * (tb - ta), tb - 1e-9 * (tb - ta));
        let alpha = (s_best(pb) - s_best(pa)) / (pb - pa);
        let beta = l1 + l2 * alpha;
        let t = stationary(h, beta).clamp(ta, tb);
        consider(ta);
        consider(t);
        consider(tb);
    }
    let m = best_t;
    let iv = sect(m);
    let scale = 1.0 + l1.abs() + l2.abs();
    if l2.abs() <= 1e-12 * scale && iv.hi - iv.lo > 1e-12 * (1.0 + iv.hi.abs() + iv.lo.abs()) {
        ZBar::Segment(frame.point(m, iv.lo), frame.point(m, iv.hi))
    } else {
        ZBar::Point(frame.point(m, s_best(m)))
    }
}

/// Solution of `h'(t) = beta`.
fn stationary(h: ScalarH, beta: f64) -> f64 {
    match h {
        ScalarH::Power(p) if p > 1.0 => beta.signum() * (beta.abs() / p).powf(1.0 / (p - 1.0)),
        ScalarH::Power(_) => 0.0,
        ScalarH::ShiftedSquarePlus if beta == 0.0 => 0.0,
        ScalarH::ShiftedSquarePlus => beta.signum() * (1.0 + beta.abs() / 2.0),
    }
}

/// Indices of the atoms within `radius` of each atom, excluding itself.
pub fn neighbors_within(points: &[Vec2], radius: f64) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, &q)| j != i && (q - p).norm() <= radius)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Least-squares gradient at `points[i]` of the data `values` over
/// `neighbors`: minimizes `Σ (v_j - v_i - ⟨g, x_j - x_i⟩)²`.
pub fn ls_gradient(points: &[Vec2], values: &[f64], i: usize, neighbors: &[usize]) -> Option<Vec2> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &j in neighbors {
        let d = points[j] - points[i];
        let dv = values[j] - values[i];
        a11 += d.x1 * d.x1;
        a12 += d.x1 * d.x2;
        a22 += d.x2 * d.x2;
        b1 += d.x1 * dv;
        b2 += d.x2 * dv;
    }
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-12 * (a11 + a22) * (a11 + a22) || det == 0.0 {
        return None;
    }
    Some(Vec2::new(
        (a22 * b1 - a12 * b2) / det,
        (a11 * b2 - a12 * b1) / det,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapCheckOptions {
    pub tol: f64,
    /// Neighborhood radius for the discrete gradient of `φ`; `None` skips
    /// the formula check.
    pub gradient_radius: Option<f64>,
}

impl Default for MapCheckOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            gradient_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstrainedMapReport {
    pub is_map: bool,
    pub split_atoms: usize,
    pub max_support_slack: f64,
    /// Largest distance of a support displacement outside `K`.
    pub max_constraint_residual: f64,
    /// Per source: distance from `x - T(x)` to `z̄(ĝ)`, with `ĝ` the discrete
    /// gradient of `φ`. `None` for split atoms or degenerate neighborhoods.
    pub formula_errors: Vec<Option<f64>>,
    pub median_formula_error: Option<f64>,
    pub passed: bool,
}

pub fn constrained_map_check(
    plan: &TransportPlan,
    pots: &DualPotentials,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
    opts: &MapCheckOptions,
) -> Result<ConstrainedMapReport, RebuildError> {
    let k = match c {
        CostSpec::ConstrainedStrict { k } => k.clone(),
        CostSpec::ConstrainedOneVar { k, .. } => ConvexSet::Polygon(k.clone()),
        CostSpec::HNorm { .. } => {
            return Err(RebuildError::UnsupportedCost(
                "map check needs a constrained cost",
            ))
        }
    };
    let n = mu.len();
    if pots.phi.len() != n || pots.psi.len() != nu.len() {
        return Err(TransportError::Shape("potentials do not match the measures".into()).into());
    }
    let (xs, ys) = (mu.points(), nu.points());
    let mut slack: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for e in &plan.entries {
        let z = xs[e.source] - ys[e.target];
        residual = residual.max(match &k {
            ConvexSet::Polygon(p) => p.max_residual(z).max(0.0),
            ConvexSet::Disk(d) => ((z - d.center).norm() - d.radius).max(0.0),
        });
        let cz = c.eval_tol(z, f64::INFINITY);
        if let Some(v) = cz.finite() {
            slack = slack.max((v - pots.phi[e.source] - pots.psi[e.target]).abs());
        }
    }
    let counts = plan.targets_per_source(n);
    let split_atoms = counts.iter().filter(|&&k| k > 1).count();

    let mut formula_errors = vec![None; n];
    if let Some(radius) = opts.gradient_radius {
        let nbrs = neighbors_within(xs, radius);
        let mut target = vec![usize::MAX; n];
        for e in &plan.entries {
            target[e.source] = e.target;
        }
        formula_errors = (0..n)
            .into_par_iter()
            .map(|i| {
                if counts[i] != 1 {
                    return None;
                }
                let g = ls_gradient(xs, &pots.phi, i, &nbrs[i])?;
                let zb = zbar(g, c).ok()?;
                Some(zb.distance(xs[i] - ys[target[i]]))
            })
            .collect();
    }
    let mut errs: Vec<f64> = formula_errors.iter().flatten().copied().collect();
    errs.sort_by(f64::total_cmp);
    let median_formula_error = if errs.is_empty() {
        None
    } else if errs.len() % 2 == 1 {
        Some(errs[errs.len() / 2])
    } else {
        Some(0.5 * (errs[errs.len() / 2 - 1] + errs[errs.len() / 2]))
    };
    Ok(ConstrainedMapReport {
        is_map: split_atoms == 0,
        split_atoms,
        max_support_slack: slack,
        max_constraint_residual: residual,
        formula_errors,
        median_formula_error,
        passed: split_atoms == 0 && slack <= opts.tol && residual <= opts.tol,
    })
}
