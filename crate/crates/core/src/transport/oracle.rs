//! Exact brute-force optimal values for tiny instances, independent of the
//! simplex code path.

use itertools::Itertools;

use crate::costs::CostSpec;
use crate::error::TransportError;
use crate::measure::DiscreteMeasure;

/// Largest `n` for permutation enumeration.
pub const MAX_PERMUTATION_N: usize = 8;
/// Largest `n·m` for vertex enumeration.
pub const MAX_VERTEX_ARCS: usize = 12;

/// Exact optimal value by enumeration.
///
/// Equal-mass square instances with `n <= 8` enumerate all `n!`
/// permutations. Otherwise, instances with `n·m <= 12` enumerate every
/// acyclic support (every vertex of the transportation polytope has one),
/// solving the flows by leaf peeling.
pub fn brute_force_value(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
) -> Result<f64, TransportError> {
    let (n, m) = (mu.len(), nu.len());
    let cost = |i: usize, j: usize| c.eval(mu.points()[i] - nu.points()[j]).finite();
    let equal = n == m
        && mu.is_equal_mass()
        && nu.is_equal_mass()
        && (mu.masses()[0] - nu.masses()[0]).abs() <= 1e-12;

    if equal && n <= MAX_PERMUTATION_N {
        let w = 1.0 / n as f64;
        let best = (0..n)
            .permutations(n)
            .filter_map(|sigma| {
                sigma
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| cost(i, j))
                    .sum::<Option<f64>>()
            })
            .fold(f64::INFINITY, f64::min);
        return if best.is_finite() {
            Ok(best * w)
        } else {
            Err(TransportError::Infeasible(None))
        };
    }
    if n * m > MAX_VERTEX_ARCS {
        return Err(TransportError::TooLarge(format!(
            "n={n}, m={m}: need equal masses with n<={MAX_PERMUTATION_N} or n*m<={MAX_VERTEX_ARCS}"
        )));
    }

    let arcs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter_map(|(i, j)| cost(i, j).map(|cij| (i, j, cij)))
        .collect();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << arcs.len()) {
        let support: Vec<(usize, usize, f64)> = arcs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, a)| *a)
            .collect();
        if support.len() > n + m - 1 {
            continue;
        }
        if let Some(flows) = peel(&support, mu.masses(), nu.masses()) {
            let v: f64 = flows.iter().zip(&support).map(|(f, a)| f * a.2).sum();
            best = best.min(v);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(TransportError::Infeasible(None))
    }
}

/// Unique flows on an acyclic support meeting the marginals, if nonnegative.
fn peel(support: &[(usize, usize, f64)], a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; residual.len()];
    for &(i, j, _) in support {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    if degree.contains(&0) {
        return None;
    }
    let mut flows = vec![f64::NAN; support.len()];
    let mut done = vec![false; support.len()];
    let mut remaining = support.len();
    while remaining > 0 {
        let leaf = (0..residual.len()).find(|&v| degree[v] == 1)?; // none: cycle
        let k = (0..support.len())
            .find(|&k| !done[k] && (support[k].0 == leaf || n + support[k].1 == leaf))?;
        let other = if support[k].0 == leaf {
            n + support[k].1
        } else {
            support[k].0
        };
        let f = residual[leaf];
        if f < -1e-12 {
            return None;
        }
        flows[k] = f;
        residual[leaf] = 0.0;
        residual[other] -= f;
        degree[leaf] -= 1;
        degree[other] -= 1;
        done[k] = true;
        remaining -= 1;
    }
    if residual.iter().any(|r| r.abs() > 1e-12) {
        return None;
    }
    Some(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::ScalarH;
    use crate::geometry::{NormSpec, Vec2};

    #[test]
    fn single_atom() {
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 2.0)]).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::Euclidean);
        assert_eq!(brute_force_value(&mu, &nu, &c).unwrap(), 5.0);
    }

    #[test]
    fn vertex_enumeration_agrees_with_permutations() {
        // 2x2 equal masses, computed both ways
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)]).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::Euclidean);
        assert_eq!(brute_force_value(&mu, &nu, &c).unwrap(), 1.0);
        let arcs = [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)];
        let straight = peel(&[arcs[0], arcs[3]], &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(straight, vec![0.5, 0.5]);
        assert!(peel(&arcs, &[0.5, 0.5], &[0.5, 0.5]).is_none());
    }

    #[test]
    fn unequal_masses_use_vertices() {
        // one source, three targets: the only plan splits
        let mu = DiscreteMeasure::uniform(vec![Vec2::new(0.0, 0.0)]).unwrap();
        let nu = DiscreteMeasure::new(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, 0.0),
                Vec2::new(3.0, 0.0),
            ],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::Euclidean);
        let v = brute_force_value(&mu, &nu, &c).unwrap();
        assert!((v - (0.5 + 1.0 + 2.25)).abs() < 1e-15);
    }

    #[test]
    fn too_large() {
        let pts: Vec<Vec2> = (0..9).map(|k| Vec2::new(k as f64, 0.0)).collect();
        let mu = DiscreteMeasure::uniform(pts.clone()).unwrap();
        let c = CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::Euclidean);
        assert!(matches!(
            brute_force_value(&mu, &mu, &c),
            Err(TransportError::TooLarge(_))
        ));
    }
}
