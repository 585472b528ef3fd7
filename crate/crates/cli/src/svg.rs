//! SVG rendering of an instance, its plan, and the face structure.

use std::collections::HashMap;
use std::fmt::Write;

use otfaces::decomposition::{FaceDecomposition, FaceKey};
use otfaces::geometry::Face;
use otfaces::{DiscreteMeasure, TransportPlan, Vec2};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4",
];

fn face_color(key: FaceKey) -> &'static str {
    match key {
        FaceKey::Cone(i) => PALETTE[i % PALETTE.len()],
        FaceKey::Ball => PALETTE[0],
        FaceKey::Fibers => PALETTE[1],
    }
}

struct View {
    lo: Vec2,
    scale: f64,
}

impl View {
    fn new(points: impl Iterator<Item = Vec2>) -> Self {
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for p in points {
            lo = Vec2::new(lo.x1.min(p.x1), lo.x2.min(p.x2));
            hi = Vec2::new(hi.x1.max(p.x1), hi.x2.max(p.x2));
        }
        let span = (hi.x1 - lo.x1).max(hi.x2 - lo.x2).max(1e-9);
        Self {
            lo,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    /// Screen coordinates, y pointing up.
    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            MARGIN + (p.x1 - self.lo.x1) * self.scale,
            SIZE - MARGIN - (p.x2 - self.lo.x2) * self.scale,
        )
    }
}

/// Sources as blue dots, targets as red dots, displacement arrows colored
/// by face (grey for rigid, black for ambiguous), and an inset of the face
/// cones when `faces` is non-empty.
pub fn render(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    plan: &TransportPlan,
    decomp: Option<&FaceDecomposition>,
    faces: &[Face],
) -> String {
    let view = View::new(mu.points().iter().chain(nu.points()).copied());
    let mut part: HashMap<(usize, usize), &'static str> = HashMap::new();
    if let Some(d) = decomp {
        for (k, p) in &d.per_face {
            for e in &p.entries {
                part.insert((e.source, e.target), face_color(*k));
            }
        }
        for e in &d.ambiguous.entries {
            part.insert((e.source, e.target), "#000000");
        }
    }
    let color: Vec<&str> = plan
        .entries
        .iter()
        .map(|e| {
            part.get(&(e.source, e.target))
                .copied()
                .unwrap_or("#888888")
        })
        .collect();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><marker id="head" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (e, c) in plan.entries.iter().zip(&color) {
        let (x1, y1) = view.map(mu.points()[e.source]);
        let (x2, y2) = view.map(nu.points()[e.target]);
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{c}" stroke-width="1" marker-end="url(#head)"/>"#
        );
    }
    for p in mu.points() {
        let (x, y) = view.map(*p);
        let _ = writeln!(
            s,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#2166ac"/>"##
        );
    }
    for p in nu.points() {
        let (x, y) = view.map(*p);
        let _ = writeln!(
            s,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#b2182b"/>"##
        );
    }
    if !faces.is_empty() {
        // inset: unit ball with each face cone shaded
        let (cx, cy, r) = (SIZE - 70.0, 70.0, 50.0);
        let sc = r / faces
            .iter()
            .map(|f| f.a.norm().max(f.b.norm()))
            .fold(0.0, f64::max);
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="white" stroke="#cccccc"/>"##,
            cx - 60.0,
            cy - 60.0,
            120.0,
            120.0
        );
        for f in faces {
            let c = face_color(FaceKey::Cone(f.id));
            let _ = writeln!(
                s,
                r#"<polygon points="{cx:.1},{cy:.1} {:.1},{:.1} {:.1},{:.1}" fill="{c}" fill-opacity="0.35" stroke="{c}"/>"#,
                cx + sc * f.a.x1,
                cy - sc * f.a.x2,
                cx + sc * f.b.x1,
                cy - sc * f.b.x2
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
