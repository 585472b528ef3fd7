//! Optimal transport in the plane for convex costs that are not strictly
//! convex, such as `h(‖x - y‖)` for a crystalline norm.
//!
//! The pipeline solves the discrete Kantorovich problem exactly, splits the
//! optimal plan by the face of the cost its displacements select, and
//! rebuilds each face-restricted part into a transport map by monotone
//! rearrangement along one-dimensional fibers.

pub mod costs;
pub mod decomposition;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod pipeline;
pub mod rebuild;
pub mod transport;

pub use costs::{cost_eval, is_strictly_convex_cost, CostSpec, ExtReal, ScalarH};
pub use decomposition::{decompose, decomposition_stats, FaceDecomposition, FaceKey};
pub use error::*;
pub use geometry::{ConvexPolygon, ConvexSet, Disk, Face, Frame, Interval, NormSpec, Vec2};
pub use measure::{DiscreteMeasure, DualPotentials, PlanEntry, SubMeasure, TransportPlan};
pub use pipeline::{gen, run_config, run_pipeline, InstanceConfig, PipelineResult, Tolerances};
pub use rebuild::{
    constrained_map_check, rebuild_plan, secondary_selection, zbar, RebuildOptions, RebuildReport,
};
pub use transport::{
    brute_force_value, linf_gauge_value, solve_kantorovich, solve_weighted, verify_duality,
    DualityReport, Solution,
};
