//! Split an optimal plan by the face of the cost selected by each source
//! atom's displacements.
//!
//! A source atom with several targets can only be rebuilt into a map if all
//! of its displacements lie on one face of the cost, where the cost is
//! affine along the face. Faces are keyed by:
//!
//! - `Cone(i)`: the cone over flat edge `i` of a polyhedral unit ball
//!   (all homotheties of the edge share one key);
//! - `Ball`: the unit ball itself, on which `((‖z‖ - 1)₊)²` vanishes;
//! - `Fibers`: the whole constraint set of `h(z₁) + χ_K`, whose faces are
//!   the vertical slices `{z₁ = m} ∩ K`.
//!
//! Single-target atoms are rigid. Atoms whose displacements straddle faces
//! are kept intact in `ambiguous` with a diagnostic; splitting them would
//! fabricate a map.

use std::collections::BTreeMap;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::costs::{is_strictly_convex_cost, CostSpec, ScalarH};
use crate::error::DecompositionError;
use crate::geometry::{faces, Face, NormSpec, Vec2};
use crate::measure::{DiscreteMeasure, PlanEntry, SubMeasure, TransportPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceKey {
    Cone(usize),
    Ball,
    Fibers,
}

impl fmt::Display for FaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceKey::Cone(i) => write!(f, "cone:{i}"),
            FaceKey::Ball => f.write_str("ball"),
            FaceKey::Fibers => f.write_str("fibers"),
        }
    }
}

impl Serialize for FaceKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::str::FromStr for FaceKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ball" => Ok(FaceKey::Ball),
            "fibers" => Ok(FaceKey::Fibers),
            _ => s
                .strip_prefix("cone:")
                .and_then(|i| i.parse().ok())
                .map(FaceKey::Cone)
                .ok_or_else(|| format!("unknown face key `{s}`")),
        }
    }
}

impl<'de> Deserialize<'de> for FaceKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbiguousAtom {
    pub source: usize,
    pub targets: Vec<usize>,
    /// Faces containing each displacement, in target order.
    pub faces_per_entry: Vec<Vec<FaceKey>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceDecomposition {
    pub rigid: TransportPlan,
    pub per_face: BTreeMap<FaceKey, TransportPlan>,
    pub ambiguous: TransportPlan,
    pub sub_marginals: BTreeMap<FaceKey, (SubMeasure, SubMeasure)>,
    pub diagnostics: Vec<AmbiguousAtom>,
}

impl FaceDecomposition {
    /// All parts merged back into one plan.
    pub fn recombine(&self) -> TransportPlan {
        let entries = self
            .rigid
            .entries
            .iter()
            .chain(self.per_face.values().flat_map(|p| p.entries.iter()))
            .chain(self.ambiguous.entries.iter())
            .copied()
            .collect();
        TransportPlan::from_entries(entries)
    }
}

/// Face bookkeeping for a cost that admits decomposition.
pub(crate) struct FaceSet {
    pub faces: Vec<Face>,
    pub norm: Option<NormSpec>,
    pub has_ball: bool,
    pub fibers: bool,
}

impl FaceSet {
    pub fn for_cost(c: &CostSpec) -> Result<Self, DecompositionError> {
        if is_strictly_convex_cost(c) {
            return Err(DecompositionError::NotApplicable);
        }
        Ok(match c {
            CostSpec::HNorm { h, norm } => FaceSet {
                faces: faces(norm),
                norm: Some(norm.clone()),
                has_ball: matches!(h, ScalarH::ShiftedSquarePlus),
                fibers: false,
            },
            CostSpec::ConstrainedOneVar { .. } => FaceSet {
                faces: Vec::new(),
                norm: None,
                has_ball: false,
                fibers: true,
            },
            CostSpec::ConstrainedStrict { .. } => return Err(DecompositionError::NotApplicable),
        })
    }

    /// Faces of the cost containing displacement `z`.
    pub fn faces_of(&self, c: &CostSpec, z: Vec2, tol: f64) -> Vec<FaceKey> {
        let mut keys = Vec::new();
        if self.fibers {
            if c.eval_tol(z, tol).is_finite() {
                keys.push(FaceKey::Fibers);
            }
            return keys;
        }
        let norm = self.norm.as_ref().expect("norm cost");
        let g = norm.gauge(z);
        for f in &self.faces {
            if z.is_zero() || f.cone_contains(z, g, tol) {
                keys.push(FaceKey::Cone(f.id));
            }
        }
        if self.has_ball && g <= 1.0 + tol {
            keys.push(FaceKey::Ball);
        }
        keys
    }

    pub fn contains(&self, key: FaceKey, c: &CostSpec, z: Vec2, tol: f64) -> bool {
        match key {
            FaceKey::Fibers => c.eval_tol(z, tol).is_finite(),
            FaceKey::Ball => {
                self.has_ball && self.norm.as_ref().is_some_and(|n| n.gauge(z) <= 1.0 + tol)
            }
            FaceKey::Cone(i) => {
                let Some(norm) = self.norm.as_ref() else {
                    return false;
                };
                z.is_zero()
                    || self
                        .faces
                        .get(i)
                        .is_some_and(|f| f.cone_contains(z, norm.gauge(z), tol))
            }
        }
    }
}

/// Classify source atoms of `plan` and split it into rigid, per-face, and
/// ambiguous parts.
pub fn decompose(
    plan: &TransportPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
    tol: f64,
) -> Result<FaceDecomposition, DecompositionError> {
    let faces = FaceSet::for_cost(c)?;
    let (pn, pm) = plan.max_index();
    if pn > mu.len() || pm > nu.len() {
        return Err(DecompositionError::BadIndex);
    }

    let mut rigid = Vec::new();
    let mut ambiguous = Vec::new();
    let mut per_face: BTreeMap<FaceKey, Vec<PlanEntry>> = BTreeMap::new();
    let mut diagnostics = Vec::new();

    let mut entries = plan.entries.clone();
    entries.sort_by_key(|e| (e.source, e.target));
    for group in entries.chunk_by(|a, b| a.source == b.source) {
        if group.len() == 1 {
            rigid.push(group[0]);
            continue;
        }
        let x = mu.points()[group[0].source];
        let per_entry: Vec<Vec<FaceKey>> = group
            .iter()
            .map(|e| faces.faces_of(c, x - nu.points()[e.target], tol))
            .collect();
        // keys shared by every displacement; per-entry lists are sorted
        let common = per_entry[0]
            .iter()
            .copied()
            .filter(|k| per_entry[1..].iter().all(|ks| ks.contains(k)))
            .min_by_key(|k| match k {
                // prefer the two-dimensional face when all displacements fit
                FaceKey::Ball => (0, 0),
                FaceKey::Fibers => (1, 0),
                FaceKey::Cone(i) => (2, *i),
            });
        match common {
            Some(key) => per_face.entry(key).or_default().extend_from_slice(group),
            None => {
                ambiguous.extend_from_slice(group);
                diagnostics.push(AmbiguousAtom {
                    source: group[0].source,
                    targets: group.iter().map(|e| e.target).collect(),
                    faces_per_entry: per_entry,
                });
            }
        }
    }

    let per_face: BTreeMap<FaceKey, TransportPlan> = per_face
        .into_iter()
        .map(|(k, v)| (k, TransportPlan::from_entries(v)))
        .collect();
    let sub_marginals = per_face
        .iter()
        .map(|(&k, p)| (k, sub_marginals(p, mu, nu)))
        .collect();
    Ok(FaceDecomposition {
        rigid: TransportPlan::from_entries(rigid),
        per_face,
        ambiguous: TransportPlan::from_entries(ambiguous),
        sub_marginals,
        diagnostics,
    })
}

/// Marginals of a sub-plan as sub-measures of `mu` and `nu`.
pub fn sub_marginals(
    plan: &TransportPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> (SubMeasure, SubMeasure) {
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for e in &plan.entries {
        *rows.entry(e.source).or_default() += e.mass;
        *cols.entry(e.target).or_default() += e.mass;
    }
    let build = |m: BTreeMap<usize, f64>, parent: &DiscreteMeasure| SubMeasure {
        points: m.keys().map(|&i| parent.points()[i]).collect(),
        masses: m.values().copied().collect(),
        indices: m.into_keys().collect(),
    };
    (build(rows, mu), build(cols, nu))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionStats {
    /// Source atoms in the rigid part.
    pub n_rigid: usize,
    pub n_faces_used: usize,
    pub rigid_mass: f64,
    pub mass_per_face: BTreeMap<FaceKey, f64>,
    pub n_ambiguous: usize,
    pub ambiguous_mass: f64,
    pub total_mass: f64,
}

pub fn decomposition_stats(d: &FaceDecomposition) -> DecompositionStats {
    let mass_per_face: BTreeMap<FaceKey, f64> = d
        .per_face
        .iter()
        .map(|(&k, p)| (k, p.total_mass()))
        .collect();
    let rigid_mass = d.rigid.total_mass();
    let ambiguous_mass = d.ambiguous.total_mass();
    DecompositionStats {
        n_rigid: d.rigid.len(),
        n_faces_used: d.per_face.len(),
        rigid_mass,
        total_mass: rigid_mass + mass_per_face.values().sum::<f64>() + ambiguous_mass,
        mass_per_face,
        n_ambiguous: d.diagnostics.len(),
        ambiguous_mass,
    }
}
