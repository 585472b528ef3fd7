//! Planar convex geometry: points, convex polygons, norm balls and their
//! flat faces, projections, and one-dimensional sections.
//!
//! Conventions
//! - Polygons are stored counter-clockwise in strictly convex position.
//!   Input may be given in either orientation; collinear vertices are merged.
//! - Half-planes carry unit outward normals, so a half-plane residual is a
//!   Euclidean distance and tolerances are absolute in the domain's units.
//! - A `Frame` is a pair of coordinate functionals `(e1, e2)` with `e1 ⟂ e2`
//!   and `|e2| = 1`. `e1` need not be unit: for a face of a polyhedral norm
//!   it is the supporting functional `n`, so that `⟨e1, z⟩` is the norm on the
//!   face cone.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Default relative tolerance for geometric predicates.
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    /// Unchecked constructor; use [`Vec2::try_new`] on untrusted input.
    #[inline]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn try_new(x1: f64, x2: f64) -> Result<Self, GeometryError> {
        if x1.is_finite() && x2.is_finite() {
            Ok(Self { x1, x2 })
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x1 * o.x2 - self.x2 * o.x1
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Rotation by -90 degrees. For a counter-clockwise edge direction this
    /// is the outward normal direction.
    #[inline]
    pub fn rot_cw(self) -> Vec2 {
        Vec2::new(self.x2, -self.x1)
    }

    pub fn is_zero(self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }
}

impl TryFrom<[f64; 2]> for Vec2 {
    type Error = GeometryError;
    fn try_from(a: [f64; 2]) -> Result<Self, Self::Error> {
        Vec2::try_new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x1, v.x2]
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x1, self * v.x2)
    }
}

/// Closed half-plane `⟨normal, z⟩ <= offset` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfPlane {
    #[inline]
    pub fn residual(&self, z: Vec2) -> f64 {
        self.normal.dot(z) - self.offset
    }
}

/// Convex polygon, counter-clockwise, no three consecutive vertices collinear.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    halfplanes: Vec<HalfPlane>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices
            .iter()
            .any(|v| !v.x1.is_finite() || !v.x2.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let scale = vertices
            .iter()
            .map(|v| v.x1.abs().max(v.x2.abs()))
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let eps = 1e-12 * scale;

        // drop repeated consecutive points (including the closing one)
        let mut vs: Vec<Vec2> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if vs.last().is_none_or(|&l: &Vec2| (v - l).norm() > eps) {
                vs.push(v);
            }
        }
        while vs.len() > 1 && (vs[0] - vs[vs.len() - 1]).norm() <= eps {
            vs.pop();
        }
        if vs.len() < 3 {
            return Err(GeometryError::Degenerate("fewer than 3 distinct vertices"));
        }
        let area2: f64 = (0..vs.len())
            .map(|i| vs[i].cross(vs[(i + 1) % vs.len()]))
            .sum();
        if area2.abs() <= eps * scale {
            return Err(GeometryError::Degenerate("zero area"));
        }
        if area2 < 0.0 {
            vs.reverse();
        }

        // merge collinear vertices
        loop {
            let k = vs.len();
            if k < 3 {
                return Err(GeometryError::Degenerate(
                    "fewer than 3 non-collinear vertices",
                ));
            }
            let pos = (0..k).find(|&i| {
                let prev = vs[(i + k - 1) % k];
                let next = vs[(i + 1) % k];
                let d1 = vs[i] - prev;
                let d2 = next - vs[i];
                d1.cross(d2).abs() <= 1e-12 * d1.norm() * d2.norm() && d1.dot(d2) > 0.0
            });
            match pos {
                Some(i) => {
                    vs.remove(i);
                }
                None => break,
            }
        }

        // strict convexity: every turn is a left turn and the boundary winds once
        let k = vs.len();
        let mut turning = 0.0;
        for i in 0..k {
            let d1 = vs[(i + 1) % k] - vs[i];
            let d2 = vs[(i + 2) % k] - vs[(i + 1) % k];
            let c = d1.cross(d2);
            if c <= 0.0 {
                return Err(GeometryError::NotConvex);
            }
            turning += c.atan2(d1.dot(d2));
        }
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(GeometryError::NotConvex);
        }

        let halfplanes = (0..k)
            .map(|i| {
                let a = vs[i];
                let b = vs[(i + 1) % k];
                let d = b - a;
                let normal = (1.0 / d.norm()) * d.rot_cw();
                HalfPlane {
                    normal,
                    offset: normal.dot(a),
                }
            })
            .collect();
        Ok(Self {
            vertices: vs,
            halfplanes,
        })
    }

    /// Axis-aligned rectangle `[lo.x1, hi.x1] × [lo.x2, hi.x2]`.
    pub fn rectangle(lo: Vec2, hi: Vec2) -> Result<Self, GeometryError> {
        Self::new(vec![
            lo,
            Vec2::new(hi.x1, lo.x2),
            hi,
            Vec2::new(lo.x1, hi.x2),
        ])
    }

    /// Regular polygon with `k` vertices on the circle of radius `r`, first
    /// vertex at angle `phase`.
    pub fn regular(k: usize, r: f64, phase: f64) -> Result<Self, GeometryError> {
        let vs = (0..k)
            .map(|i| {
                let t = phase + std::f64::consts::TAU * i as f64 / k as f64;
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        Self::new(vs)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn halfplanes(&self) -> &[HalfPlane] {
        &self.halfplanes
    }

    /// Edge `i` as `(a, b)`, counter-clockwise.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let k = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % k])
    }

    pub fn contains(&self, z: Vec2, tol: f64) -> bool {
        self.max_residual(z) <= tol
    }

    /// Largest half-plane violation; non-positive inside.
    pub fn max_residual(&self, z: Vec2) -> f64 {
        self.halfplanes
            .iter()
            .map(|h| h.residual(z))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minkowski functional `inf { t >= 0 : z ∈ tK }`.
    ///
    /// Finite everywhere when the origin is interior. When the origin lies on
    /// the boundary, directions leaving the polygon get `+∞`.
    pub fn gauge(&self, z: Vec2) -> f64 {
        if z.is_zero() {
            return 0.0;
        }
        let mut lo = 0.0_f64;
        let mut hi = f64::INFINITY;
        for h in &self.halfplanes {
            let a = h.normal.dot(z);
            let b = h.offset;
            // need a <= t * b
            if b > 0.0 {
                lo = lo.max(a / b);
            } else if b < 0.0 {
                hi = hi.min(a / b);
            } else if a > 0.0 {
                return f64::INFINITY;
            }
        }
        if lo <= hi {
            lo
        } else {
            f64::INFINITY
        }
    }

    /// Euclidean projection onto the polygon.
    pub fn project(&self, p: Vec2) -> Vec2 {
        if self.max_residual(p) <= 0.0 {
            return p;
        }
        let k = self.vertices.len();
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..k {
            let (a, b) = self.edge(i);
            let q = project_segment(a, b, p);
            let d = (p - q).norm_sq();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Extent of `⟨e, ·⟩` over the polygon.
    pub fn extent(&self, e: Vec2) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| e.dot(*v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                (lo.min(t), hi.max(t))
            })
    }

    pub fn diameter(&self) -> f64 {
        let vs = &self.vertices;
        let mut d = 0.0_f64;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                d = d.max((vs[i] - vs[j]).norm());
            }
        }
        d
    }

    /// True when the vertex set is closed under `v ↦ -v` (within `tol`).
    pub fn is_origin_symmetric(&self, tol: f64) -> bool {
        self.vertices
            .iter()
            .all(|v| self.vertices.iter().any(|w| (*w + *v).norm() <= tol))
    }
}

fn project_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
    a + t * d
}

/// Closed disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::Degenerate("disk radius must be positive"));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: Vec2::ZERO,
            radius: 1.0,
        }
    }
}

/// A compact convex constraint set: polygon or disk.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Polygon(ConvexPolygon),
    Disk(Disk),
}

impl ConvexSet {
    pub fn contains(&self, z: Vec2, tol: f64) -> bool {
        match self {
            ConvexSet::Polygon(p) => p.contains(z, tol),
            ConvexSet::Disk(d) => (z - d.center).norm() <= d.radius + tol,
        }
    }

    pub fn project(&self, p: Vec2) -> Vec2 {
        project_onto(self, p)
    }

    pub fn gauge(&self, z: Vec2) -> f64 {
        match self {
            ConvexSet::Polygon(p) => p.gauge(z),
            ConvexSet::Disk(d) if d.center.is_zero() => z.norm() / d.radius,
            ConvexSet::Disk(d) => {
                // smallest t >= 0 with |z - t c| <= t r
                if z.is_zero() {
                    return 0.0;
                }
                let c = d.center;
                let a = c.norm_sq() - d.radius * d.radius;
                let b = -2.0 * z.dot(c);
                let cc = z.norm_sq();
                if a.abs() < 1e-300 {
                    return if b < 0.0 { -cc / b } else { f64::INFINITY };
                }
                let disc = b * b - 4.0 * a * cc;
                if disc < 0.0 {
                    return f64::INFINITY;
                }
                let r1 = (-b - disc.sqrt()) / (2.0 * a);
                let r2 = (-b + disc.sqrt()) / (2.0 * a);
                let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
                if a < 0.0 {
                    // origin interior: quadratic negative outside roots
                    hi.max(0.0)
                } else if hi >= 0.0 {
                    lo.max(0.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Unit ball of a planar norm.
#[derive(Clone, Debug, PartialEq)]
pub enum NormSpec {
    /// Origin-symmetric polygon (crystalline norm).
    Polyhedral(ConvexPolygon),
    Euclidean,
}

impl NormSpec {
    pub fn polyhedral(ball: ConvexPolygon) -> Result<Self, GeometryError> {
        let tol = 1e-9 * ball.diameter();
        if !ball.is_origin_symmetric(tol) {
            return Err(GeometryError::NotSymmetric);
        }
        if ball.max_residual(Vec2::ZERO) >= 0.0 {
            return Err(GeometryError::OriginNotInterior);
        }
        Ok(NormSpec::Polyhedral(ball))
    }

    /// ℓ∞ ball with vertices (±1, ±1).
    pub fn square() -> Self {
        NormSpec::Polyhedral(
            ConvexPolygon::new(vec![
                Vec2::new(1.0, -1.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(-1.0, 1.0),
                Vec2::new(-1.0, -1.0),
            ])
            .expect("square"),
        )
    }

    /// Regular hexagon with vertices (±1, 0), (±1/2, ±√3/2).
    pub fn hexagon() -> Self {
        NormSpec::Polyhedral(ConvexPolygon::regular(6, 1.0, 0.0).expect("hexagon"))
    }

    pub fn gauge(&self, z: Vec2) -> f64 {
        gauge(self, z)
    }
}

/// Minkowski gauge of a norm ball.
pub fn gauge(ball: &NormSpec, z: Vec2) -> f64 {
    match ball {
        NormSpec::Euclidean => z.norm(),
        NormSpec::Polyhedral(p) => p.gauge(z),
    }
}

/// Closed flat part `[a, b]` of a polyhedral unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Face {
    pub id: usize,
    pub a: Vec2,
    pub b: Vec2,
    /// Supporting functional: `⟨n, a⟩ = ⟨n, b⟩ = 1`.
    pub n: Vec2,
    /// Unit vector along `b - a`.
    pub tangent: Vec2,
}

impl Face {
    /// Membership of `z` in the cone `{t w : t >= 0, w ∈ [a, b]}` at relative
    /// tolerance, given the norm's gauge value `g = gauge(z)`.
    pub fn cone_contains(&self, z: Vec2, g: f64, tol: f64) -> bool {
        (self.n.dot(z) - g).abs() <= tol * g
    }

    /// Slope interval of the cone in the face frame: a point with frame
    /// coordinates `(t, s)`, `t >= 0`, lies in the cone iff
    /// `s ∈ [t·lo, t·hi]`.
    pub fn cone_slopes(&self) -> (f64, f64) {
        let ta = self.tangent.dot(self.a);
        let tb = self.tangent.dot(self.b);
        (ta.min(tb), ta.max(tb))
    }

    pub fn frame(&self) -> Frame {
        Frame {
            e1: self.n,
            e2: self.tangent,
        }
    }
}

/// Flat faces of the unit sphere, one per polygon edge; empty for the
/// Euclidean norm.
pub fn faces(norm: &NormSpec) -> Vec<Face> {
    match norm {
        NormSpec::Euclidean => Vec::new(),
        NormSpec::Polyhedral(p) => (0..p.vertices().len())
            .map(|i| {
                let (a, b) = p.edge(i);
                let n = solve2(a, b, 1.0, 1.0).expect("edge endpoints are independent");
                let d = b - a;
                Face {
                    id: i,
                    a,
                    b,
                    n,
                    tangent: (1.0 / d.norm()) * d,
                }
            })
            .collect(),
    }
}

/// Solve `⟨n, a⟩ = ra`, `⟨n, b⟩ = rb` for `n`.
fn solve2(a: Vec2, b: Vec2, ra: f64, rb: f64) -> Option<Vec2> {
    let det = a.cross(b);
    if det.abs() < 1e-300 {
        return None;
    }
    Some(Vec2::new(
        (ra * b.x2 - rb * a.x2) / det,
        (rb * a.x1 - ra * b.x1) / det,
    ))
}

/// Face whose cone contains `z`.
///
/// `None` for the Euclidean norm and for vertex directions, where the
/// displacement sits on two adjacent cones.
pub fn face_of_direction(
    norm: &NormSpec,
    faces: &[Face],
    z: Vec2,
    tol: f64,
) -> Result<Option<usize>, GeometryError> {
    if z.is_zero() {
        return Err(GeometryError::ZeroDisplacement);
    }
    if matches!(norm, NormSpec::Euclidean) {
        return Ok(None);
    }
    let g = gauge(norm, z);
    let mut hit = faces.iter().filter(|f| f.cone_contains(z, g, tol));
    match (hit.next(), hit.next()) {
        (Some(f), None) => Ok(Some(f.id)),
        _ => Ok(None),
    }
}

/// Euclidean projection onto a convex set.
pub fn project_onto(k: &ConvexSet, p: Vec2) -> Vec2 {
    match k {
        ConvexSet::Polygon(poly) => poly.project(p),
        ConvexSet::Disk(d) => {
            let r = p - d.center;
            let len = r.norm();
            if len <= d.radius {
                p
            } else {
                d.center + (d.radius / len) * r
            }
        }
    }
}

/// Coordinate functionals `(⟨e1, ·⟩, ⟨e2, ·⟩)` with `e1 ⟂ e2` and `|e2| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Frame {
    pub e1: Vec2,
    pub e2: Vec2,
}

impl Frame {
    pub const STANDARD: Frame = Frame {
        e1: Vec2::new(1.0, 0.0),
        e2: Vec2::new(0.0, 1.0),
    };

    /// Orthonormal, positively oriented frame.
    pub fn orthonormal(e1: Vec2, e2: Vec2) -> Result<Self, GeometryError> {
        let tol = 1e-9;
        if (e1.norm() - 1.0).abs() > tol || (e2.norm() - 1.0).abs() > tol || e1.dot(e2).abs() > tol
        {
            return Err(GeometryError::BadFrame);
        }
        if e1.cross(e2) <= 0.0 {
            return Err(GeometryError::BadFrame);
        }
        Ok(Self { e1, e2 })
    }

    #[inline]
    pub fn coords(&self, z: Vec2) -> (f64, f64) {
        (self.e1.dot(z), self.e2.dot(z))
    }

    /// The point with coordinates `(t, s)`.
    #[inline]
    pub fn point(&self, t: f64, s: f64) -> Vec2 {
        (t / self.e1.norm_sq()) * self.e1 + s * self.e2
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, s: f64, tol: f64) -> bool {
        s >= self.lo - tol && s <= self.hi + tol
    }
}

/// The slice `{ s : frame.point(t, s) ∈ K }`.
pub fn section(k: &ConvexPolygon, t: f64, frame: &Frame) -> Option<Interval> {
    let base = frame.point(t, 0.0);
    let scale = k.diameter().max(base.norm()).max(1.0);
    let eps = 1e-12 * scale;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for h in k.halfplanes() {
        // residual(base + s e2) = r0 + s * slope <= 0
        let r0 = h.residual(base);
        let slope = h.normal.dot(frame.e2);
        if slope.abs() <= 1e-15 {
            if r0 > eps {
                return None;
            }
        } else if slope > 0.0 {
            hi = hi.min(-r0 / slope);
        } else {
            lo = lo.max(-r0 / slope);
        }
    }
    if lo <= hi {
        Some(Interval { lo, hi })
    } else if lo - hi <= eps {
        let m = 0.5 * (lo + hi);
        Some(Interval { lo: m, hi: m })
    } else {
        None
    }
}

/// `l ∈ N_K(z)`: `⟨l, k - z⟩ <= tol` for every vertex `k`.
pub fn normal_cone_contains(
    k: &ConvexPolygon,
    z: Vec2,
    l: Vec2,
    tol: f64,
) -> Result<bool, GeometryError> {
    if !k.contains(z, tol) {
        return Err(GeometryError::PointNotInK);
    }
    Ok(k.vertices().iter().all(|v| l.dot(*v - z) <= tol))
}
