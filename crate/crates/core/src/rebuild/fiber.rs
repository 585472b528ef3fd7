//! One-dimensional fibers of a face and their monotone rearrangement.
//!
//! In a face frame `(e1, e2)` the cost of a face-restricted pair depends only
//! on `z₁ = x₁ - y₁`. Entries are grouped into blocks of equal `(x₁, y₁)`;
//! inside a block any re-coupling keeps the cost, and the monotone
//! (north-west corner) coupling in the `e2` coordinate keeps every
//! displacement inside the section of the face, because it is optimal for
//! the convex indicator of that section.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decomposition::FaceKey;
use crate::error::RebuildError;
use crate::geometry::{section, ConvexPolygon, Face, Frame, Interval};
use crate::measure::{DiscreteMeasure, PlanEntry, TransportPlan};

/// Frame in which `⟨e1, z⟩` is the norm on the face cone; `e2` runs along
/// the face, positively oriented.
pub fn face_frame(face: &Face) -> Frame {
    face.frame()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockAtom {
    pub index: usize,
    /// Coordinate along `e2`.
    pub coord: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberBlock {
    pub face: FaceKey,
    /// Source coordinate `x₁`.
    pub a: f64,
    /// Target coordinate `y₁`.
    pub b: f64,
    pub sources: Vec<BlockAtom>,
    pub targets: Vec<BlockAtom>,
    /// The block's original entries.
    pub entries: Vec<PlanEntry>,
}

impl FiberBlock {
    pub fn source_mass(&self) -> f64 {
        self.sources.iter().map(|s| s.mass).sum()
    }

    pub fn target_mass(&self) -> f64 {
        self.targets.iter().map(|t| t.mass).sum()
    }
}

/// The admissible set of `z₂` given `z₁ = t` for a face.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberConstraint {
    /// Cone with `z₂ ∈ [t·lo, t·hi]`, `t >= 0`.
    Cone { lo: f64, hi: f64 },
    /// Slice of a polygon in `frame`.
    Polygon { k: ConvexPolygon, frame: Frame },
}

impl FiberConstraint {
    pub fn for_face(face: &Face) -> Self {
        let (lo, hi) = face.cone_slopes();
        FiberConstraint::Cone { lo, hi }
    }

    pub fn section(&self, t: f64, tol: f64) -> Option<Interval> {
        match self {
            FiberConstraint::Cone { lo, hi } => {
                if t < -tol {
                    None
                } else {
                    let t = t.max(0.0);
                    Some(Interval {
                        lo: t * lo,
                        hi: t * hi,
                    })
                }
            }
            FiberConstraint::Polygon { k, frame } => section(k, t, frame),
        }
    }
}

/// Cluster sorted values: consecutive values within `tol` share an id.
/// Returns the id per input value and the representative (smallest) value
/// of each cluster.
fn cluster(values: &[f64], tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut ids = vec![0; values.len()];
    let mut reps: Vec<f64> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &i in &order {
        if reps.is_empty() || values[i] - prev > tol {
            reps.push(values[i]);
        }
        prev = values[i];
        ids[i] = reps.len() - 1;
    }
    (ids, reps)
}

/// Group a face-restricted plan into blocks of equal `(x₁, y₁)`, comparing
/// coordinates at `coord_tol`.
pub fn build_fiber_blocks(
    gamma: &TransportPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    face: FaceKey,
    frame: &Frame,
    coord_tol: f64,
) -> Vec<FiberBlock> {
    let xs: Vec<(f64, f64)> = gamma
        .entries
        .iter()
        .map(|e| frame.coords(mu.points()[e.source]))
        .collect();
    let ys: Vec<(f64, f64)> = gamma
        .entries
        .iter()
        .map(|e| frame.coords(nu.points()[e.target]))
        .collect();
    let (xid, xrep) = cluster(&xs.iter().map(|p| p.0).collect::<Vec<_>>(), coord_tol);
    let (yid, yrep) = cluster(&ys.iter().map(|p| p.0).collect::<Vec<_>>(), coord_tol);

    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for k in 0..gamma.entries.len() {
        groups.entry((xid[k], yid[k])).or_default().push(k);
    }
    groups
        .into_iter()
        .map(|((xi, yi), ks)| {
            let mut src: BTreeMap<usize, BlockAtom> = BTreeMap::new();
            let mut dst: BTreeMap<usize, BlockAtom> = BTreeMap::new();
            for &k in &ks {
                let e = gamma.entries[k];
                src.entry(e.source)
                    .or_insert(BlockAtom {
                        index: e.source,
                        coord: xs[k].1,
                        mass: 0.0,
                    })
                    .mass += e.mass;
                dst.entry(e.target)
                    .or_insert(BlockAtom {
                        index: e.target,
                        coord: ys[k].1,
                        mass: 0.0,
                    })
                    .mass += e.mass;
            }
            FiberBlock {
                face,
                a: xrep[xi],
                b: yrep[yi],
                sources: src.into_values().collect(),
                targets: dst.into_values().collect(),
                entries: ks.iter().map(|&k| gamma.entries[k]).collect(),
            }
        })
        .collect()
}

/// North-west-corner coupling of the block's sources and targets, both
/// sorted by their `e2` coordinate (ties by atom index).
pub fn monotone_rearrange(block: &FiberBlock) -> Result<Vec<PlanEntry>, RebuildError> {
    let (ms, mt) = (block.source_mass(), block.target_mass());
    if (ms - mt).abs() > 1e-12 * ms.max(1e-300).max(1.0) {
        return Err(RebuildError::MassImbalance {
            sources: ms,
            targets: mt,
        });
    }
    let sorted = |atoms: &[BlockAtom]| {
        let mut v = atoms.to_vec();
        v.sort_by(|a, b| a.coord.total_cmp(&b.coord).then(a.index.cmp(&b.index)));
        v
    };
    let src = sorted(&block.sources);
    let dst = sorted(&block.targets);
    let eps = 1e-14 * ms;

    let mut out = Vec::with_capacity(src.len() + dst.len());
    let (mut i, mut j) = (0, 0);
    let (mut rs, mut rt) = (src[0].mass, dst[0].mass);
    while i < src.len() && j < dst.len() {
        let q = rs.min(rt);
        out.push(PlanEntry {
            source: src[i].index,
            target: dst[j].index,
            mass: q,
        });
        rs -= q;
        rt -= q;
        if rs <= eps {
            i += 1;
            if i < src.len() {
                rs = src[i].mass;
            }
        }
        if rt <= eps {
            j += 1;
            if j < dst.len() {
                rt = dst[j].mass;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{faces, NormSpec, Vec2};
    use crate::measure::DiscreteMeasure;

    fn block(src: &[(f64, f64)], dst: &[(f64, f64)]) -> FiberBlock {
        FiberBlock {
            face: FaceKey::Fibers,
            a: 0.0,
            b: 0.0,
            sources: src
                .iter()
                .enumerate()
                .map(|(i, &(coord, mass))| BlockAtom {
                    index: i,
                    coord,
                    mass,
                })
                .collect(),
            targets: dst
                .iter()
                .enumerate()
                .map(|(i, &(coord, mass))| BlockAtom {
                    index: i,
                    coord,
                    mass,
                })
                .collect(),
            entries: Vec::new(),
        }
    }

    #[test]
    fn frames_of_square_faces() {
        let fs = faces(&NormSpec::square());
        let right = fs.iter().find(|f| f.n == Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(
            face_frame(right),
            Frame {
                e1: Vec2::new(1.0, 0.0),
                e2: Vec2::new(0.0, 1.0)
            }
        );
        let left = fs.iter().find(|f| f.n == Vec2::new(-1.0, 0.0)).unwrap();
        let fr = face_frame(left);
        assert_eq!(fr.e1, Vec2::new(-1.0, 0.0));
        assert_eq!(fr.e2, Vec2::new(0.0, -1.0));
        assert!(fr.e1.cross(fr.e2) > 0.0);
    }

    #[test]
    fn hexagon_frame_measures_the_norm() {
        let norm = NormSpec::hexagon();
        for f in faces(&norm) {
            let fr = face_frame(&f);
            assert!(fr.e1.cross(fr.e2) > 0.0);
            assert!(fr.e1.dot(fr.e2).abs() < 1e-15);
            for k in 0..=10 {
                let w = f.a + (k as f64 / 10.0) * (f.b - f.a);
                let z = 2.5 * w;
                assert!((fr.coords(z).0 - norm.gauge(z)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crossed_block_becomes_monotone() {
        let b = block(&[(0.0, 0.5), (1.0, 0.5)], &[(0.5, 0.5), (0.6, 0.5)]);
        let out = monotone_rearrange(&b).unwrap();
        assert_eq!(
            out,
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
        // displacements 0-0.5 and 1-0.6 lie in [-1, 1]
        let iv = Interval { lo: -1.0, hi: 1.0 };
        assert!(iv.contains(-0.5, 0.0) && iv.contains(0.4, 0.0));
    }

    #[test]
    fn single_pair_unchanged_and_forced_split() {
        let b = block(&[(0.3, 1.0)], &[(0.1, 1.0)]);
        assert_eq!(
            monotone_rearrange(&b).unwrap(),
            vec![PlanEntry {
                source: 0,
                target: 0,
                mass: 1.0
            }]
        );
        let b = block(&[(0.0, 2.0 / 3.0)], &[(0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0)]);
        let out = monotone_rearrange(&b).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|e| e.source == 0));
    }

    #[test]
    fn imbalance_is_an_error() {
        let b = block(&[(0.0, 0.5)], &[(0.0, 0.4)]);
        assert!(matches!(
            monotone_rearrange(&b),
            Err(RebuildError::MassImbalance { .. })
        ));
    }

    #[test]
    fn blocks_group_by_both_coordinates() {
        // left face of the square: e1 = (-1, 0)
        let fs = faces(&NormSpec::square());
        let left = *fs.iter().find(|f| f.n == Vec2::new(-1.0, 0.0)).unwrap();
        let mu = DiscreteMeasure::uniform(vec![Vec2::ZERO]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 0.3), Vec2::new(1.0, -0.2)]).unwrap();
        let plan = TransportPlan::from_entries(vec![
            PlanEntry {
                source: 0,
                target: 0,
                mass: 0.5,
            },
            PlanEntry {
                source: 0,
                target: 1,
                mass: 0.5,
            },
        ]);
        let blocks = build_fiber_blocks(
            &plan,
            &mu,
            &nu,
            FaceKey::Cone(left.id),
            &face_frame(&left),
            1e-9,
        );
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].a, 0.0);
        assert_eq!(blocks[0].b, -1.0);
        assert_eq!(blocks[0].sources.len(), 1);
        assert_eq!(blocks[0].targets.len(), 2);

        // two source fibers with distinct x₁
        let mu = DiscreteMeasure::uniform(vec![Vec2::ZERO, Vec2::new(0.5, 0.0)]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![Vec2::new(1.0, 0.3), Vec2::new(1.5, -0.2)]).unwrap();
        let plan = TransportPlan::from_entries(vec![
            PlanEntry {
                source: 0,
                target: 0,
                mass: 0.5,
            },
            PlanEntry {
                source: 1,
                target: 1,
                mass: 0.5,
            },
        ]);
        let blocks = build_fiber_blocks(
            &plan,
            &mu,
            &nu,
            FaceKey::Cone(left.id),
            &face_frame(&left),
            1e-9,
        );
        assert_eq!(blocks.len(), 2);
    }

    #[test]
    fn cone_sections() {
        let fs = faces(&NormSpec::square());
        let right = fs.iter().find(|f| f.n == Vec2::new(1.0, 0.0)).unwrap();
        let c = FiberConstraint::for_face(right);
        assert_eq!(c.section(2.0, 1e-12), Some(Interval { lo: -2.0, hi: 2.0 }));
        assert_eq!(c.section(-1.0, 1e-12), None);
    }
}
