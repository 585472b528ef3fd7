//! Difference costs `c(x - y)`: `h(‖z‖)` for a planar norm, and convex
//! costs restricted to a constraint set `K` (`+∞` outside).

use std::fmt;

use crate::error::CostError;
use crate::geometry::{ConvexPolygon, ConvexSet, Frame, NormSpec, Vec2, DEFAULT_GEOM_TOL};

/// Extended real value `[0, +∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => f.write_str("+inf"),
        }
    }
}

/// Scalar profile `h : [0, ∞) → [0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarH {
    /// `h(t) = |t|^p`, `p > 1`.
    Power(f64),
    /// `h(t) = ((t - 1)₊)²`: flat on `[0, 1]`.
    ShiftedSquarePlus,
}

impl ScalarH {
    pub fn power(p: f64) -> Result<Self, CostError> {
        if p.is_finite() && p > 1.0 {
            Ok(ScalarH::Power(p))
        } else {
            Err(CostError::BadPower(p))
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            ScalarH::Power(2.0) => t * t,
            ScalarH::Power(p) => t.abs().powf(p),
            ScalarH::ShiftedSquarePlus => {
                let s = (t - 1.0).max(0.0);
                s * s
            }
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            ScalarH::Power(p) => p * t.abs().powf(p - 1.0) * t.signum(),
            ScalarH::ShiftedSquarePlus => 2.0 * (t - 1.0).max(0.0),
        }
    }

    pub fn is_strictly_convex(self) -> bool {
        matches!(self, ScalarH::Power(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CostSpec {
    /// `h(‖z‖)`.
    HNorm { h: ScalarH, norm: NormSpec },
    /// `½|z|² + χ_K(z)`.
    ConstrainedStrict { k: ConvexSet },
    /// `h(⟨e1, z⟩) + χ_K(z)` with `h` a power.
    ConstrainedOneVar {
        h: ScalarH,
        frame: Frame,
        k: ConvexPolygon,
    },
}

impl CostSpec {
    pub fn h_norm(h: ScalarH, norm: NormSpec) -> Self {
        CostSpec::HNorm { h, norm }
    }

    /// `((|z| - 1)₊)²`.
    pub fn shifted_square_plus() -> Self {
        CostSpec::HNorm {
            h: ScalarH::ShiftedSquarePlus,
            norm: NormSpec::Euclidean,
        }
    }

    pub fn constrained_quadratic(k: ConvexSet) -> Self {
        CostSpec::ConstrainedStrict { k }
    }

    pub fn constrained_onevar(
        h: ScalarH,
        frame: Frame,
        k: ConvexPolygon,
    ) -> Result<Self, CostError> {
        if !matches!(h, ScalarH::Power(_)) {
            return Err(CostError::OneVarNeedsPower);
        }
        let frame = Frame::orthonormal(frame.e1, frame.e2)?;
        Ok(CostSpec::ConstrainedOneVar { h, frame, k })
    }

    pub fn eval(&self, z: Vec2) -> ExtReal {
        self.eval_tol(z, DEFAULT_GEOM_TOL)
    }

    /// Cost of displacement `z`, with constraint membership tested at `tol`.
    pub fn eval_tol(&self, z: Vec2, tol: f64) -> ExtReal {
        match self {
            CostSpec::HNorm {
                h: ScalarH::Power(p),
                norm: NormSpec::Euclidean,
            } if *p == 2.0 => ExtReal::Finite(z.norm_sq()),
            CostSpec::HNorm { h, norm } => ExtReal::Finite(h.eval(norm.gauge(z))),
            CostSpec::ConstrainedStrict { k } => {
                if k.contains(z, tol) {
                    ExtReal::Finite(0.5 * z.norm_sq())
                } else {
                    ExtReal::Infinite
                }
            }
            CostSpec::ConstrainedOneVar { h, frame, k } => {
                if k.contains(z, tol) {
                    ExtReal::Finite(h.eval(frame.e1.dot(z)))
                } else {
                    ExtReal::Infinite
                }
            }
        }
    }

    pub fn is_constrained(&self) -> bool {
        !matches!(self, CostSpec::HNorm { .. })
    }
}

pub fn cost_eval(c: &CostSpec, z: Vec2) -> ExtReal {
    c.eval(z)
}

/// Whether the cost is strictly convex on its domain, in which case an
/// optimal plan needs no rebuilding.
pub fn is_strictly_convex_cost(c: &CostSpec) -> bool {
    match c {
        CostSpec::HNorm { h, norm } => {
            h.is_strictly_convex() && matches!(norm, NormSpec::Euclidean)
        }
        CostSpec::ConstrainedStrict { .. } => true,
        CostSpec::ConstrainedOneVar { .. } => false,
    }
}
