//! Discrete measures, couplings, and dual potentials.

use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::error::MeasureError;
use crate::geometry::Vec2;

/// Tolerance on total mass and on marginal residuals.
pub const MASS_TOL: f64 = 1e-12;

/// Weighted point cloud in the plane with unit total mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    points: Vec<Vec2>,
    masses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    points: Vec<Vec2>,
    masses: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = MeasureError;
    fn try_from(r: RawMeasure) -> Result<Self, MeasureError> {
        DiscreteMeasure::new(r.points, r.masses)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            points: m.points,
            masses: m.masses,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec2>, masses: Vec<f64>) -> Result<Self, MeasureError> {
        if points.is_empty() {
            return Err(MeasureError::Empty);
        }
        if points.len() != masses.len() {
            return Err(MeasureError::LengthMismatch {
                points: points.len(),
                masses: masses.len(),
            });
        }
        for (index, &mass) in masses.iter().enumerate() {
            if !(mass.is_finite() && mass > 0.0) {
                return Err(MeasureError::BadMass { index, mass });
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::NotNormalized(total));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .x1
                .total_cmp(&points[b].x1)
                .then(points[a].x2.total_cmp(&points[b].x2))
        });
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(MeasureError::DuplicatePoint(a, b));
            }
        }
        Ok(Self { points, masses })
    }

    /// Equal masses `1/n`, the last one compensated so the sum is 1.
    pub fn uniform(points: Vec<Vec2>) -> Result<Self, MeasureError> {
        let masses = equal_masses(points.len());
        Self::new(points, masses)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Whether all masses agree to within [`MASS_TOL`].
    pub fn is_equal_mass(&self) -> bool {
        let m0 = self.masses[0];
        self.masses.iter().all(|m| (m - m0).abs() <= MASS_TOL)
    }

    /// Largest coordinate-wise spread of the atoms.
    pub fn diameter_bound(&self) -> f64 {
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for p in &self.points {
            lo = Vec2::new(lo.x1.min(p.x1), lo.x2.min(p.x2));
            hi = Vec2::new(hi.x1.max(p.x1), hi.x2.max(p.x2));
        }
        (hi - lo).norm()
    }
}

pub fn equal_masses(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let m = 1.0 / n as f64;
    let mut masses = vec![m; n];
    let head: f64 = masses[..n - 1].iter().sum();
    masses[n - 1] = 1.0 - head;
    masses
}

/// Atoms of a sub-measure, indexed into a parent measure. Total mass is
/// arbitrary (positive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubMeasure {
    pub indices: Vec<usize>,
    pub points: Vec<Vec2>,
    pub masses: Vec<f64>,
}

impl SubMeasure {
    pub fn total(&self) -> f64 {
        self.masses.iter().fold(0.0, |acc, m| acc + m)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self {
            indices: (0..m.len()).collect(),
            points: m.points().to_vec(),
            masses: m.masses().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse coupling, entries sorted by `(source, target)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    /// Sorts and merges duplicate `(source, target)` pairs.
    pub fn from_entries(mut entries: Vec<PlanEntry>) -> Self {
        entries.sort_by_key(|e| (e.source, e.target));
        let mut out: Vec<PlanEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match out.last_mut() {
                Some(l) if l.source == e.source && l.target == e.target => l.mass += e.mass,
                _ => out.push(e),
            }
        }
        Self { entries: out }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc + e.mass)
    }

    pub fn row_sums(&self, n: usize) -> Vec<f64> {
        let mut r = vec![0.0; n];
        for e in &self.entries {
            r[e.source] += e.mass;
        }
        r
    }

    pub fn col_sums(&self, m: usize) -> Vec<f64> {
        let mut c = vec![0.0; m];
        for e in &self.entries {
            c[e.target] += e.mass;
        }
        c
    }

    /// Largest absolute residual of the two marginal constraints.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let r = self.row_sums(mu.len());
        let c = self.col_sums(nu.len());
        r.iter()
            .zip(mu.masses())
            .chain(c.iter().zip(nu.masses()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Number of distinct targets per source.
    pub fn targets_per_source(&self, n: usize) -> Vec<usize> {
        let mut k = vec![0usize; n];
        for e in &self.entries {
            k[e.source] += 1;
        }
        k
    }

    /// Sources with more than one target.
    pub fn split_atoms(&self, n: usize) -> usize {
        self.targets_per_source(n)
            .iter()
            .filter(|&&k| k > 1)
            .count()
    }

    /// `Σ mass · c(x - y)`, `None` if any entry has infinite cost.
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostSpec) -> Option<f64> {
        let mut total = 0.0;
        for e in &self.entries {
            let z = mu.points()[e.source] - nu.points()[e.target];
            total += e.mass * c.eval(z).finite()?;
        }
        Some(total)
    }

    /// True when every source has exactly one target (the plan is a map).
    pub fn is_map(&self, n: usize) -> bool {
        self.targets_per_source(n).iter().all(|&k| k == 1)
    }

    /// True for a map that is also injective with `n == m`.
    pub fn is_permutation(&self, n: usize, m: usize) -> bool {
        if n != m || self.entries.len() != n || !self.is_map(n) {
            return false;
        }
        let mut seen = vec![false; m];
        self.entries
            .iter()
            .all(|e| !std::mem::replace(&mut seen[e.target], true))
    }

    pub fn max_index(&self) -> (usize, usize) {
        self.entries.iter().fold((0, 0), |(a, b), e| {
            (a.max(e.source + 1), b.max(e.target + 1))
        })
    }
}

/// Kantorovich potentials: `φ_i + ψ_j <= c_ij` on admissible pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl DualPotentials {
    pub fn dual_value(&self, mu_masses: &[f64], nu_masses: &[f64]) -> f64 {
        let a: f64 = self.phi.iter().zip(mu_masses).map(|(p, m)| p * m).sum();
        let b: f64 = self.psi.iter().zip(nu_masses).map(|(p, m)| p * m).sum();
        a + b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_validation() {
        let p = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(DiscreteMeasure::new(p.clone(), vec![0.5, 0.5]).is_ok());
        assert_eq!(
            DiscreteMeasure::new(p.clone(), vec![0.5, 0.6]),
            Err(MeasureError::NotNormalized(1.1))
        );
        assert!(matches!(
            DiscreteMeasure::new(p.clone(), vec![1.0, 0.0]),
            Err(MeasureError::BadMass { index: 1, .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![p[0], p[1], p[0]], equal_masses(3)),
            Err(MeasureError::DuplicatePoint(0, 2))
        ));
        assert!(matches!(
            DiscreteMeasure::new(p, vec![1.0]),
            Err(MeasureError::LengthMismatch { .. })
        ));
        assert_eq!(
            DiscreteMeasure::new(vec![], vec![]),
            Err(MeasureError::Empty)
        );
    }

    #[test]
    fn equal_masses_compensate() {
        for n in [1, 3, 7, 49, 200] {
            let m = equal_masses(n);
            let s: f64 = m.iter().sum();
            assert!((s - 1.0).abs() <= 1e-15, "n={n} sum={s}");
        }
        assert_eq!(equal_masses(1), vec![1.0]);
    }

    #[test]
    fn plan_merges_and_counts() {
        let plan = TransportPlan::from_entries(vec![
            PlanEntry {
                source: 1,
                target: 0,
                mass: 0.25,
            },
            PlanEntry {
                source: 0,
                target: 1,
                mass: 0.25,
            },
            PlanEntry {
                source: 0,
                target: 1,
                mass: 0.25,
            },
            PlanEntry {
                source: 1,
                target: 1,
                mass: 0.25,
            },
        ]);
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.entries[0].mass, 0.5);
        assert_eq!(plan.split_atoms(2), 1);
        assert!(!plan.is_map(2));
        assert_eq!(plan.row_sums(2), vec![0.5, 0.5]);
    }
}
