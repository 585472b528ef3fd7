//! Turn face-restricted sub-plans into transport maps without changing the
//! cost or the marginals.
//!
//! - `Cone(i)` and `Fibers` parts: monotone rearrangement inside each
//!   `(x₁, y₁)` fiber block.
//! - `Ball` part: secondary selection by the constrained quadratic cost.
//! - Rigid and ambiguous parts pass through unchanged.

mod constrained;
mod fiber;

use serde::Serialize;

use crate::costs::CostSpec;
use crate::decomposition::{FaceDecomposition, FaceKey, FaceSet};
use crate::error::{RebuildError, TransportError};
use crate::geometry::{ConvexSet, Disk, NormSpec, DEFAULT_GEOM_TOL};
use crate::measure::{DiscreteMeasure, PlanEntry, SubMeasure, TransportPlan};
use crate::transport::solve_weighted;

pub use constrained::{
    constrained_map_check, ls_gradient, neighbors_within, zbar, ConstrainedMapReport,
    MapCheckOptions, ZBar,
};
pub use fiber::{
    build_fiber_blocks, face_frame, monotone_rearrange, BlockAtom, FiberBlock, FiberConstraint,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RebuildOptions {
    /// Fiber grouping tolerance; `None` means `1e-9 × instance diameter`.
    pub coord_tol: Option<f64>,
    /// Face and section membership tolerance.
    pub geom_tol: f64,
    /// Allowed `|cost_after - cost_before|`, relative to `1 + cost_before`.
    pub cost_tol: f64,
}

impl Default for RebuildOptions {
    fn default() -> Self {
        Self {
            coord_tol: None,
            geom_tol: DEFAULT_GEOM_TOL,
            cost_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RebuildReport {
    pub new_plan: TransportPlan,
    pub cost_before: f64,
    pub cost_after: f64,
    /// Source atoms with more than one target in `new_plan`.
    pub split_atoms: usize,
    /// Rebuilt entries leaving their face, their fiber section, or the
    /// domain of the cost.
    pub constraint_violations: usize,
    pub blocks: usize,
    pub marginal_error: f64,
    pub passed: bool,
}

/// Rebuild a decomposed optimal plan into one with the same cost and
/// marginals, supported on a map wherever the face structure allows.
pub fn rebuild_plan(
    plan: &TransportPlan,
    decomp: &FaceDecomposition,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
    opts: &RebuildOptions,
) -> Result<RebuildReport, RebuildError> {
    let faces = FaceSet::for_cost(c)?;
    let coord_tol = opts
        .coord_tol
        .unwrap_or(1e-9 * mu.diameter_bound().max(nu.diameter_bound()).max(1.0));
    let cost_before = plan
        .cost(mu, nu, c)
        .ok_or(TransportError::Infeasible(None))?;

    let mut entries: Vec<PlanEntry> = decomp.rigid.entries.clone();
    entries.extend_from_slice(&decomp.ambiguous.entries);
    let mut violations = 0usize;
    let mut n_blocks = 0usize;

    for (&key, part) in &decomp.per_face {
        let rebuilt: Vec<PlanEntry> = match key {
            FaceKey::Ball => {
                let (mu_i, nu_i) = &decomp.sub_marginals[&key];
                let ball = match faces.norm.as_ref() {
                    Some(NormSpec::Polyhedral(p)) => ConvexSet::Polygon(p.clone()),
                    _ => ConvexSet::Disk(Disk::unit()),
                };
                secondary_selection(mu_i, nu_i, &ball)?.entries
            }
            FaceKey::Cone(_) | FaceKey::Fibers => {
                let (frame, constraint) = match (key, c) {
                    (FaceKey::Cone(i), _) => {
                        let f = &faces.faces[i];
                        (face_frame(f), FiberConstraint::for_face(f))
                    }
                    (_, CostSpec::ConstrainedOneVar { frame, k, .. }) => (
                        *frame,
                        FiberConstraint::Polygon {
                            k: k.clone(),
                            frame: *frame,
                        },
                    ),
                    _ => unreachable!("fiber faces only arise for one-variable costs"),
                };
                let blocks = build_fiber_blocks(part, mu, nu, key, &frame, coord_tol);
                n_blocks += blocks.len();
                let mut out = Vec::with_capacity(part.len());
                for block in &blocks {
                    let new = monotone_rearrange(block)?;
                    let t = block.a - block.b;
                    let tol = opts.geom_tol * (1.0 + t.abs());
                    for e in &new {
                        let z2 = frame.coords(mu.points()[e.source]).1
                            - frame.coords(nu.points()[e.target]).1;
                        if !constraint
                            .section(t, tol)
                            .is_some_and(|iv| iv.contains(z2, tol))
                        {
                            violations += 1;
                        }
                    }
                    out.extend(new);
                }
                out
            }
        };
        for e in &rebuilt {
            let z = mu.points()[e.source] - nu.points()[e.target];
            if !faces.contains(key, c, z, opts.geom_tol) {
                violations += 1;
            }
        }
        entries.extend(rebuilt);
    }

    let new_plan = TransportPlan::from_entries(entries);
    let cost_after = match new_plan.cost(mu, nu, c) {
        Some(v) => v,
        None => {
            violations += new_plan
                .entries
                .iter()
                .filter(|e| {
                    !c.eval(mu.points()[e.source] - nu.points()[e.target])
                        .is_finite()
                })
                .count();
            f64::INFINITY
        }
    };
    let marginal_error = new_plan.marginal_error(mu, nu);
    let passed = violations == 0
        && (cost_after - cost_before).abs() <= opts.cost_tol * (1.0 + cost_before.abs())
        && marginal_error <= 1e-12;
    Ok(RebuildReport {
        split_atoms: new_plan.split_atoms(mu.len()),
        new_plan,
        cost_before,
        cost_after,
        constraint_violations: violations,
        blocks: n_blocks,
        marginal_error,
        passed,
    })
}

/// Among plans between `mu_i` and `nu_i` with displacements in `k`, the one
/// minimizing `∫ ½|x - y|² dγ`. Indices of the result refer to the parent
/// measures.
pub fn secondary_selection(
    mu_i: &SubMeasure,
    nu_i: &SubMeasure,
    k: &ConvexSet,
) -> Result<TransportPlan, TransportError> {
    let cost = CostSpec::constrained_quadratic(k.clone());
    let sol = solve_weighted(
        &mu_i.points,
        &mu_i.masses,
        &nu_i.points,
        &nu_i.masses,
        &cost,
    )?;
    Ok(TransportPlan::from_entries(
        sol.plan
            .entries
            .iter()
            .map(|e| PlanEntry {
                source: mu_i.indices[e.source],
                target: nu_i.indices[e.target],
                mass: e.mass,
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::ScalarH;
    use crate::decomposition::decompose;
    use crate::geometry::{ConvexPolygon, Frame, Vec2};
    use crate::transport::solve_kantorovich;

    #[test]
    fn all_rigid_plan_is_unchanged() {
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(0.1, 1.0), Vec2::new(1.0, 1.3)]).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::square());
        let s = solve_kantorovich(&mu, &nu, &c).unwrap();
        let d = decompose(&s.plan, &mu, &nu, &c, 1e-9).unwrap();
        let r = rebuild_plan(&s.plan, &d, &mu, &nu, &c, &RebuildOptions::default()).unwrap();
        assert_eq!(r.new_plan, s.plan);
        assert_eq!(r.split_atoms, 0);
        assert!(r.passed);
    }

    #[test]
    fn shared_fiber_is_uncrossed() {
        // two sources on the same vertical fiber, two targets on another;
        // right face of the square, crossed coupling
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.5), Vec2::new(0.0, 0.6)]).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::square());
        // crossed plan, each source split across both targets
        let plan = TransportPlan::from_entries(vec![
            PlanEntry {
                source: 0,
                target: 0,
                mass: 0.25,
            },
            PlanEntry {
                source: 0,
                target: 1,
                mass: 0.25,
            },
            PlanEntry {
                source: 1,
                target: 0,
                mass: 0.25,
            },
            PlanEntry {
                source: 1,
                target: 1,
                mass: 0.25,
            },
        ]);
        let d = decompose(&plan, &mu, &nu, &c, 1e-9).unwrap();
        assert_eq!(d.per_face.len(), 1);
        let r = rebuild_plan(&plan, &d, &mu, &nu, &c, &RebuildOptions::default()).unwrap();
        assert_eq!(r.split_atoms, 0);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.cost_after, r.cost_before);
        assert_eq!(
            r.new_plan.entries,
            vec![
                PlanEntry {
                    source: 0,
                    target: 0,
                    mass: 0.5
                },
                PlanEntry {
                    source: 1,
                    target: 1,
                    mass: 0.5
                },
            ]
        );
    }

    #[test]
    fn onevar_fibers_respect_sections() {
        let k = ConvexPolygon::rectangle(Vec2::new(0.0, -0.6), Vec2::new(2.0, 0.6)).unwrap();
        let c = CostSpec::constrained_onevar(ScalarH::Power(2.0), Frame::STANDARD, k).unwrap();
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.5), Vec2::new(0.0, 0.55)]).unwrap();
        let plan = TransportPlan::from_entries(vec![
            PlanEntry {
                source: 0,
                target: 0,
                mass: 0.25,
            },
            PlanEntry {
                source: 0,
                target: 1,
                mass: 0.25,
            },
            PlanEntry {
                source: 1,
                target: 0,
                mass: 0.25,
            },
            PlanEntry {
                source: 1,
                target: 1,
                mass: 0.25,
            },
        ]);
        let d = decompose(&plan, &mu, &nu, &c, 1e-9).unwrap();
        assert!(d.per_face.contains_key(&FaceKey::Fibers));
        let r = rebuild_plan(&plan, &d, &mu, &nu, &c, &RebuildOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.split_atoms, 0);
        assert_eq!(r.constraint_violations, 0);
    }

    #[test]
    fn ambiguous_atom_is_reported() {
        let mu = DiscreteMeasure::uniform(vec![Vec2::ZERO]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 0.5), Vec2::new(0.5, 1.0)]).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::square());
        let s = solve_kantorovich(&mu, &nu, &c).unwrap();
        let d = decompose(&s.plan, &mu, &nu, &c, 1e-9).unwrap();
        let r = rebuild_plan(&s.plan, &d, &mu, &nu, &c, &RebuildOptions::default()).unwrap();
        assert_eq!(r.split_atoms, 1);
        assert!(r.passed);
    }

    #[test]
    fn secondary_selection_picks_straight_pairing() {
        let mu = SubMeasure {
            indices: vec![3, 7],
            points: vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)],
            masses: vec![0.5, 0.5],
        };
        let nu = SubMeasure {
            indices: vec![1, 2],
            points: vec![Vec2::new(0.5, 0.2), Vec2::new(0.5, 0.9)],
            masses: vec![0.5, 0.5],
        };
        // both pairings feasible in the unit disk: |(-.5,-.2)|,|(-.5,.1)|,|(-.5,-.9)|,|(-.5,.8)| <= 1.03
        let straight = 0.5 * (0.25 + 0.04) + 0.5 * (0.25 + 0.01);
        let crossed = 0.5 * (0.25 + 0.81) + 0.5 * (0.25 + 0.64);
        assert!(straight < crossed);
        let k = ConvexSet::Disk(Disk::new(Vec2::ZERO, 1.1).unwrap());
        let p = secondary_selection(&mu, &nu, &k).unwrap();
        assert_eq!(
            p.entries,
            vec![
                PlanEntry {
                    source: 3,
                    target: 1,
                    mass: 0.5
                },
                PlanEntry {
                    source: 7,
                    target: 2,
                    mass: 0.5
                },
            ]
        );
        let same = secondary_selection(&mu, &mu, &k).unwrap();
        assert!(same.entries.iter().all(|e| e.source == e.target));
    }
}
