//! File formats: CSV and JSON measures, JSON cost/norm literals.
//!
//! Floats are written in shortest round-trip form, so emit-then-ingest is
//! lossless.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::costs::{CostSpec, ScalarH};
use crate::error::IoError;
use crate::geometry::{ConvexPolygon, ConvexSet, Disk, Frame, NormSpec, Vec2};
use crate::measure::DiscreteMeasure;

pub const CSV_HEADER: [&str; 3] = ["x1", "x2", "mass"];

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a measure from CSV text with header `x1,x2,mass`.
pub fn measure_from_csv(text: &str) -> Result<DiscreteMeasure, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| IoError::Csv {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(IoError::Csv {
            line: 1,
            msg: format!(
                "expected header `x1,x2,mass`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64, IoError> {
            rec[k].parse::<f64>().map_err(|e| IoError::Csv {
                line,
                msg: format!("column {} (`{}`): {e}", CSV_HEADER[k], &rec[k]),
            })
        };
        let p = Vec2::try_new(field(0)?, field(1)?).map_err(|e| IoError::Csv {
            line,
            msg: e.to_string(),
        })?;
        points.push(p);
        masses.push(field(2)?);
    }
    Ok(DiscreteMeasure::new(points, masses)?)
}

pub fn measure_to_csv(m: &DiscreteMeasure) -> String {
    let mut out = String::from("x1,x2,mass\n");
    for (p, w) in m.points().iter().zip(m.masses()) {
        out.push_str(&format!("{:?},{:?},{:?}\n", p.x1, p.x2, w));
    }
    out
}

/// Read a measure, as JSON if the path ends in `.json`, CSV otherwise.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure, IoError> {
    let text = read_file(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        from_json(&text)
    } else {
        measure_from_csv(&text)
    }
}

pub fn write_measure(path: &Path, m: &DiscreteMeasure) -> Result<(), IoError> {
    if path.extension().is_some_and(|e| e == "json") {
        write_file(path, &to_json(m))
    } else {
        write_file(path, &measure_to_csv(m))
    }
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| locate(text, e))
}

/// Errors raised inside buffered (tagged) content carry no position; point
/// at the first occurrence of the offending token instead, or at the start.
fn locate(text: &str, e: serde_json::Error) -> IoError {
    if e.line() != 0 {
        return e.into();
    }
    let msg = e.to_string();
    let offset = msg
        .split('`')
        .nth(1)
        .and_then(|tok| text.find(&format!("\"{tok}\"")).or_else(|| text.find(tok)));
    let (line, column) = offset.map_or((1, 1), |off| {
        let before = &text[..off];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        (line, column)
    });
    IoError::Json { line, column, msg }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    from_json(&read_file(path)?)
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable value")
}

/// `{"kind":"polyhedral","vertices":[...]}` or `{"kind":"euclidean"}`;
/// `square` and `hexagon` are presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormLiteral {
    Polyhedral { vertices: Vec<Vec2> },
    Euclidean,
    Square,
    Hexagon,
}

impl NormLiteral {
    pub fn build(&self) -> Result<NormSpec, IoError> {
        Ok(match self {
            NormLiteral::Polyhedral { vertices } => {
                NormSpec::polyhedral(ConvexPolygon::new(vertices.clone()).map_err(lit)?)
                    .map_err(lit)?
            }
            NormLiteral::Euclidean => NormSpec::Euclidean,
            NormLiteral::Square => NormSpec::square(),
            NormLiteral::Hexagon => NormSpec::hexagon(),
        })
    }
}

/// A convex constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetLiteral {
    #[serde(alias = "polyhedral")]
    Polygon { vertices: Vec<Vec2> },
    Disk {
        #[serde(default)]
        center: Vec2,
        radius: f64,
    },
}

impl SetLiteral {
    pub fn build(&self) -> Result<ConvexSet, IoError> {
        Ok(match self {
            SetLiteral::Polygon { vertices } => {
                ConvexSet::Polygon(ConvexPolygon::new(vertices.clone()).map_err(lit)?)
            }
            SetLiteral::Disk { center, radius } => {
                ConvexSet::Disk(Disk::new(*center, *radius).map_err(lit)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLiteral {
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostLiteral {
    HNorm {
        h: PowerLiteral,
        norm: NormLiteral,
    },
    ConstrainedQuadratic {
        #[serde(rename = "K")]
        k: SetLiteral,
    },
    ConstrainedOnevar {
        power: f64,
        frame: [Vec2; 2],
        #[serde(rename = "K")]
        k: SetLiteral,
    },
    ShiftedSquarePlus,
}

impl CostLiteral {
    pub fn build(&self) -> Result<CostSpec, IoError> {
        match self {
            CostLiteral::HNorm { h, norm } => Ok(CostSpec::h_norm(
                ScalarH::power(h.power).map_err(lit)?,
                norm.build()?,
            )),
            CostLiteral::ConstrainedQuadratic { k } => {
                Ok(CostSpec::constrained_quadratic(k.build()?))
            }
            CostLiteral::ConstrainedOnevar { power, frame, k } => {
                let ConvexSet::Polygon(k) = k.build()? else {
                    return Err(IoError::Literal(
                        "constrained_onevar needs a polygonal K".into(),
                    ));
                };
                CostSpec::constrained_onevar(
                    ScalarH::power(*power).map_err(lit)?,
                    Frame {
                        e1: frame[0],
                        e2: frame[1],
                    },
                    k,
                )
                .map_err(lit)
            }
            CostLiteral::ShiftedSquarePlus => Ok(CostSpec::shifted_square_plus()),
        }
    }
}

fn lit(e: impl std::fmt::Display) -> IoError {
    IoError::Literal(e.to_string())
}

/// Parse and validate a cost literal.
pub fn parse_cost(text: &str) -> Result<CostSpec, IoError> {
    from_json::<CostLiteral>(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{equal_masses, TransportPlan};
    use proptest::prelude::*;

    #[test]
    fn csv_round_trip() {
        let m = DiscreteMeasure::new(
            vec![Vec2::new(0.1, 1.0 / 3.0), Vec2::new(-2.5e-17, 7.0)],
            vec![0.3, 0.7],
        )
        .unwrap();
        let text = measure_to_csv(&m);
        assert!(text.starts_with("x1,x2,mass\n"));
        assert_eq!(measure_from_csv(&text).unwrap(), m);
    }

    #[test]
    fn csv_errors_carry_lines() {
        match measure_from_csv("x1,x2,mass\n0,0,0.5\n1,zz,0.5\n") {
            Err(IoError::Csv { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("x2"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            measure_from_csv("a,b,c\n"),
            Err(IoError::Csv { line: 1, .. })
        ));
        assert!(matches!(
            measure_from_csv("x1,x2,mass\n0,0,0.5\n"),
            Err(IoError::Measure(_))
        ));
    }

    #[test]
    fn json_errors_carry_positions() {
        match parse_cost(
            "{\"kind\": \"h_norm\",\n \"h\": {\"power\": 2},\n \"norm\": {\"kind\": \"oval\"}}",
        ) {
            Err(IoError::Json { line, column, .. }) => {
                assert_eq!((line, column), (3, 19));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_cost("{\"kind\": \"h_norm\",\n  \"h\": {\"power\": 2,}}") {
            Err(IoError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cost_literals() {
        let c = parse_cost(r#"{"kind":"h_norm","h":{"power":2},"norm":{"kind":"polyhedral","vertices":[[1,1],[-1,1],[-1,-1],[1,-1]]}}"#).unwrap();
        assert_eq!(c.eval(Vec2::new(0.5, -2.0)).finite(), Some(4.0));
        let c =
            parse_cost(r#"{"kind":"h_norm","h":{"power":2},"norm":{"kind":"euclidean"}}"#).unwrap();
        assert_eq!(c.eval(Vec2::new(3.0, 4.0)).finite(), Some(25.0));
        let c = parse_cost(r#"{"kind":"constrained_quadratic","K":{"kind":"disk","radius":1}}"#)
            .unwrap();
        assert!(!c.eval(Vec2::new(2.0, 0.0)).is_finite());
        let c = parse_cost(
            r#"{"kind":"constrained_onevar","power":2,"frame":[[1,0],[0,1]],"K":{"kind":"polygon","vertices":[[-1,-1],[1,-1],[1,1],[-1,1]]}}"#,
        )
        .unwrap();
        assert_eq!(c.eval(Vec2::new(0.5, 0.9)).finite(), Some(0.25));
        let c = parse_cost(r#"{"kind":"shifted_square_plus"}"#).unwrap();
        assert_eq!(c, CostSpec::shifted_square_plus());
    }

    #[test]
    fn invalid_literals() {
        // non-symmetric ball
        assert!(matches!(
            parse_cost(
                r#"{"kind":"h_norm","h":{"power":2},"norm":{"kind":"polyhedral","vertices":[[2,0],[0,1],[-1,0],[0,-1]]}}"#
            ),
            Err(IoError::Literal(_))
        ));
        assert!(matches!(
            parse_cost(r#"{"kind":"h_norm","h":{"power":0.5},"norm":{"kind":"euclidean"}}"#),
            Err(IoError::Literal(_))
        ));
        assert!(matches!(
            parse_cost(
                r#"{"kind":"constrained_onevar","power":2,"frame":[[1,0],[1,1]],"K":{"kind":"disk","radius":1}}"#
            ),
            Err(IoError::Literal(_))
        ));
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = TransportPlan::from_entries(vec![crate::PlanEntry {
            source: 0,
            target: 2,
            mass: 1.0 / 3.0,
        }]);
        let back: TransportPlan = from_json(&to_json(&plan)).unwrap();
        assert_eq!(back, plan);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn measure_round_trips_bitwise(
            pts in proptest::collection::vec((-1e6f64..1e6, -1e-6f64..1e-6), 1..12),
        ) {
            let n = pts.len();
            let points: Vec<Vec2> = pts.iter().map(|&(a, b)| Vec2::new(a, b)).collect();
            // distinct points
            let points: Vec<Vec2> = points.iter().enumerate().map(|(i, p)| *p + Vec2::new(0.0, i as f64)).collect();
            let m = DiscreteMeasure::new(points, equal_masses(n)).unwrap();
            let j: DiscreteMeasure = from_json(&to_json(&m)).unwrap();
            let c = measure_from_csv(&measure_to_csv(&m)).unwrap();
            for other in [&j, &c] {
                for (p, q) in m.points().iter().zip(other.points()) {
                    prop_assert_eq!(p.x1.to_bits(), q.x1.to_bits());
                    prop_assert_eq!(p.x2.to_bits(), q.x2.to_bits());
                }
                for (a, b) in m.masses().iter().zip(other.masses()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
