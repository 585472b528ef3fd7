//! Discrete Kantorovich problem: exact solver, brute-force oracle, and
//! duality certificates.

mod maxflow;
pub mod oracle;
mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::error::TransportError;
use crate::geometry::{ConvexSet, Vec2};
use crate::measure::{DiscreteMeasure, DualPotentials, PlanEntry, TransportPlan, MASS_TOL};

pub use oracle::brute_force_value;

/// Relative mass below which basic flows are dropped from the plan.
pub const PRUNE_TOL: f64 = 1e-13;

/// Optimal plan with its certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub value: f64,
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    pub pivots: usize,
}

/// Solve `min Σ c(x_i - y_j) γ_ij` over couplings of `mu` and `nu`.
///
/// Arcs with infinite cost are removed; feasibility of the remaining graph
/// is checked by max-flow first. Potentials are normalized with `φ_0 = 0`.
pub fn solve_kantorovich(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
) -> Result<Solution, TransportError> {
    solve_weighted(mu.points(), mu.masses(), nu.points(), nu.masses(), c)
}

/// As [`solve_kantorovich`] for measures of equal but arbitrary total mass.
pub fn solve_weighted(
    xs: &[Vec2],
    a: &[f64],
    ys: &[Vec2],
    b: &[f64],
    c: &CostSpec,
) -> Result<Solution, TransportError> {
    if xs.len() != a.len() || ys.len() != b.len() {
        return Err(TransportError::Shape(
            "points and masses differ in length".into(),
        ));
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(TransportError::Shape("empty measure".into()));
    }
    let (ta, tb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if (ta - tb).abs() > MASS_TOL * ta.max(1.0) {
        return Err(TransportError::Unbalanced(ta, tb));
    }

    let arcs = admissible_arcs(xs, ys, c);
    if arcs.len() < xs.len() * ys.len() {
        let pairs: Vec<(usize, usize)> = arcs.iter().map(|e| (e.source, e.target)).collect();
        maxflow::check_feasible(a, b, &pairs, 1e-12 * ta.max(1.0))
            .map_err(|cut| TransportError::Infeasible(Some(cut)))?;
    }

    let out = simplex::solve(a, b, &arcs);
    if out.artificial_flow > 1e-12 * ta.max(1.0) {
        return Err(TransportError::Infeasible(None));
    }

    let n = xs.len();
    // flows below this are mass-representation noise (e.g. a compensated
    // last mass), not transport structure
    let prune = PRUNE_TOL * ta;
    let entries: Vec<PlanEntry> = arcs
        .iter()
        .zip(&out.flow)
        .zip(&out.basic)
        .filter(|((_, &f), &basic)| basic && f > prune)
        .map(|((arc, &f), _)| PlanEntry {
            source: arc.source,
            target: arc.target,
            mass: f,
        })
        .collect();
    let value = entries
        .iter()
        .map(|e| {
            e.mass
                * c.eval(xs[e.source] - ys[e.target])
                    .finite()
                    .unwrap_or(f64::NAN)
        })
        .sum();
    let plan = TransportPlan::from_entries(entries);

    let shift = out.potential[0];
    let phi = out.potential[..n].iter().map(|y| y - shift).collect();
    let psi = out.potential[n..].iter().map(|y| shift - y).collect();
    Ok(Solution {
        value,
        plan,
        potentials: DualPotentials { phi, psi },
        pivots: out.pivots,
    })
}

fn admissible_arcs(xs: &[Vec2], ys: &[Vec2], c: &CostSpec) -> Vec<simplex::Arc> {
    let rows: Vec<Vec<simplex::Arc>> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            ys.iter()
                .enumerate()
                .filter_map(|(j, &y)| {
                    c.eval(x - y).finite().map(|cost| simplex::Arc {
                        source: i,
                        target: j,
                        cost,
                    })
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Residuals of a primal-dual pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// `max (φ_i + ψ_j - c_ij)` over admissible pairs.
    pub max_violation: f64,
    /// `max |c_ij - φ_i - ψ_j|` over the plan's support.
    pub max_slack_on_support: f64,
    pub marginal_error: f64,
    /// `|⟨φ, μ⟩ + ⟨ψ, ν⟩ - plan cost|`.
    pub duality_gap: f64,
    pub plan_cost: f64,
    pub dual_value: f64,
    /// Support entries on forbidden pairs.
    pub infeasible_entries: usize,
    pub tol: f64,
    pub passed: bool,
}

pub fn verify_duality(
    plan: &TransportPlan,
    pots: &DualPotentials,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
    tol: f64,
) -> Result<DualityReport, TransportError> {
    let (n, m) = (mu.len(), nu.len());
    if pots.phi.len() != n || pots.psi.len() != m {
        return Err(TransportError::Shape(format!(
            "potentials have {}x{} entries, measures {n}x{m}",
            pots.phi.len(),
            pots.psi.len()
        )));
    }
    let (pn, pm) = plan.max_index();
    if pn > n || pm > m {
        return Err(TransportError::Shape(
            "plan indexes outside the measures".into(),
        ));
    }
    let (xs, ys) = (mu.points(), nu.points());
    let max_violation = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .filter_map(|j| {
                    c.eval(xs[i] - ys[j])
                        .finite()
                        .map(|cij| pots.phi[i] + pots.psi[j] - cij)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let mut max_slack: f64 = 0.0;
    let mut infeasible_entries = 0;
    let mut plan_cost = 0.0;
    for e in &plan.entries {
        match c.eval(xs[e.source] - ys[e.target]).finite() {
            Some(cij) => {
                max_slack = max_slack.max((cij - pots.phi[e.source] - pots.psi[e.target]).abs());
                plan_cost += e.mass * cij;
            }
            None => infeasible_entries += 1,
        }
    }
    let marginal_error = plan.marginal_error(mu, nu);
    let dual_value = pots.dual_value(mu.masses(), nu.masses());
    let duality_gap = (dual_value - plan_cost).abs();
    let passed = max_violation <= tol
        && max_slack <= tol
        && marginal_error <= tol
        && duality_gap <= tol
        && infeasible_entries == 0;
    Ok(DualityReport {
        max_violation,
        max_slack_on_support: max_slack,
        marginal_error,
        duality_gap,
        plan_cost,
        dual_value,
        infeasible_entries,
        tol,
        passed,
    })
}

/// `max ‖x - y‖_K` over the plan's support.
pub fn linf_gauge_value(
    plan: &TransportPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    k: &ConvexSet,
) -> f64 {
    plan.entries
        .iter()
        .map(|e| k.gauge(mu.points()[e.source] - nu.points()[e.target]))
        .fold(0.0, f64::max)
}
