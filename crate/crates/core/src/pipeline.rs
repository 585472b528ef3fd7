//! Seeded instance generation and the end-to-end
//! solve → decompose → rebuild → verify pipeline.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{is_strictly_convex_cost, CostSpec};
use crate::decomposition::{decompose, decomposition_stats, DecompositionStats};
use crate::error::PipelineError;
use crate::geometry::{Vec2, DEFAULT_GEOM_TOL};
use crate::io::CostLiteral;
use crate::measure::{equal_masses, DiscreteMeasure, TransportPlan};
use crate::rebuild::{
    constrained_map_check, rebuild_plan, ConstrainedMapReport, MapCheckOptions, RebuildOptions,
    RebuildReport,
};
use crate::transport::{solve_kantorovich, verify_duality, DualityReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    #[default]
    Equal,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Default for BoxDomain {
    fn default() -> Self {
        Self {
            lo: Vec2::new(0.0, 0.0),
            hi: Vec2::new(1.0, 1.0),
        }
    }
}

impl BoxDomain {
    fn validate(&self) -> Result<(), PipelineError> {
        let ok = [self.lo.x1, self.lo.x2, self.hi.x1, self.hi.x2]
            .iter()
            .all(|v| v.is_finite())
            && self.lo.x1 < self.hi.x1
            && self.lo.x2 < self.hi.x2;
        if ok {
            Ok(())
        } else {
            Err(PipelineError::Config("degenerate domain box".into()))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        Vec2::new(
            rng.gen_range(self.lo.x1..self.hi.x1),
            rng.gen_range(self.lo.x2..self.hi.x2),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Duality certificate tolerance.
    pub duality: f64,
    /// Face, cone, and section membership.
    pub geom: f64,
    /// `|cost_after - cost_before|` relative to `1 + cost_before`.
    pub cost: f64,
    /// Fiber grouping; `None` means `1e-9 × diameter`.
    pub coord: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            duality: 1e-9,
            geom: DEFAULT_GEOM_TOL,
            cost: 1e-9,
            coord: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub mass_mode: MassMode,
    #[serde(default)]
    pub domain: BoxDomain,
    /// Box for the targets; defaults to `domain`.
    #[serde(default)]
    pub target_domain: Option<BoxDomain>,
    pub cost: CostLiteral,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Seeded source and target measures. Sources are drawn first, then
/// targets, then (in random mode) source and target masses.
pub fn gen(cfg: &InstanceConfig) -> Result<(DiscreteMeasure, DiscreteMeasure), PipelineError> {
    if cfg.n == 0 || cfg.m == 0 {
        return Err(PipelineError::Config("n and m must be at least 1".into()));
    }
    cfg.domain.validate()?;
    let tdom = cfg.target_domain.unwrap_or(cfg.domain);
    tdom.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs: Vec<Vec2> = (0..cfg.n).map(|_| cfg.domain.sample(&mut rng)).collect();
    let ys: Vec<Vec2> = (0..cfg.m).map(|_| tdom.sample(&mut rng)).collect();
    let (a, b) = match cfg.mass_mode {
        MassMode::Equal => (equal_masses(cfg.n), equal_masses(cfg.m)),
        MassMode::Random => (
            random_masses(cfg.n, &mut rng),
            random_masses(cfg.m, &mut rng),
        ),
    };
    Ok((DiscreteMeasure::new(xs, a)?, DiscreteMeasure::new(ys, b)?))
}

fn random_masses(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineResult {
    pub lp_value: f64,
    pub pivots: usize,
    pub duality: DualityReport,
    /// `None` when the cost is strictly convex or decomposition does not
    /// apply, in which case the LP plan is final.
    pub decomposition: Option<DecompositionStats>,
    pub rebuild: Option<RebuildReport>,
    /// Map check for the constrained quadratic cost.
    pub constrained_map: Option<ConstrainedMapReport>,
    pub final_plan: TransportPlan,
    pub split_atoms: usize,
    pub passed: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

pub fn run_pipeline(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostSpec,
    tol: &Tolerances,
) -> Result<PipelineResult, PipelineError> {
    let start = Instant::now();
    let sol = solve_kantorovich(mu, nu, c)?;
    let duality = verify_duality(&sol.plan, &sol.potentials, mu, nu, c, tol.duality)?;
    let mut passed = duality.passed;

    let mut decomposition = None;
    let mut rebuild = None;
    let mut constrained_map = None;
    let mut final_plan = sol.plan.clone();
    match c {
        CostSpec::ConstrainedStrict { .. } => {
            let r = constrained_map_check(
                &sol.plan,
                &sol.potentials,
                mu,
                nu,
                c,
                &MapCheckOptions {
                    tol: tol.duality,
                    gradient_radius: None,
                },
            )?;
            constrained_map = Some(r);
        }
        _ if is_strictly_convex_cost(c) => {}
        _ => {
            let d = decompose(&sol.plan, mu, nu, c, tol.geom)?;
            decomposition = Some(decomposition_stats(&d));
            let opts = RebuildOptions {
                coord_tol: tol.coord,
                geom_tol: tol.geom,
                cost_tol: tol.cost,
            };
            let r = rebuild_plan(&sol.plan, &d, mu, nu, c, &opts)?;
            passed &= r.passed;
            final_plan = r.new_plan.clone();
            rebuild = Some(r);
        }
    }
    Ok(PipelineResult {
        lp_value: sol.value,
        pivots: sol.pivots,
        duality,
        decomposition,
        rebuild,
        constrained_map,
        split_atoms: final_plan.split_atoms(mu.len()),
        final_plan,
        passed,
        wall_time: start.elapsed(),
    })
}

/// Generate an instance from `cfg` and run the pipeline on it.
pub fn run_config(cfg: &InstanceConfig) -> Result<PipelineResult, PipelineError> {
    let (mu, nu) = gen(cfg)?;
    let c = cfg.cost.build()?;
    run_pipeline(&mu, &nu, &c, &cfg.tolerances)
}

/// Mass per face key, for reporting.
pub fn mass_table(stats: &DecompositionStats) -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    t.insert("rigid".to_string(), stats.rigid_mass);
    for (k, v) in &stats.mass_per_face {
        t.insert(k.to_string(), *v);
    }
    t.insert("ambiguous".to_string(), stats.ambiguous_mass);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{NormLiteral, PowerLiteral};

    fn cfg(n: usize, norm: NormLiteral) -> InstanceConfig {
        InstanceConfig {
            seed: 7,
            n,
            m: n,
            mass_mode: MassMode::Equal,
            domain: BoxDomain::default(),
            target_domain: None,
            cost: CostLiteral::HNorm {
                h: PowerLiteral { power: 2.0 },
                norm,
            },
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn gen_is_seeded_and_compensated() {
        let c = cfg(3, NormLiteral::Square);
        let (a, b) = gen(&c).unwrap();
        assert_eq!(gen(&c).unwrap(), (a.clone(), b));
        assert_eq!(a.masses().iter().sum::<f64>(), 1.0);
        let (one, _) = gen(&cfg(1, NormLiteral::Square)).unwrap();
        assert_eq!(one.masses(), &[1.0]);
        let mut r = cfg(5, NormLiteral::Square);
        r.mass_mode = MassMode::Random;
        let (a, _) = gen(&r).unwrap();
        assert!((a.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        r.n = 0;
        assert!(gen(&r).is_err());
    }

    #[test]
    fn identity_instance_passes() {
        let (mu, _) = gen(&cfg(10, NormLiteral::Square)).unwrap();
        let c = CostSpec::h_norm(crate::ScalarH::Power(2.0), crate::NormSpec::square());
        let r = run_pipeline(&mu, &mu, &c, &Tolerances::default()).unwrap();
        assert_eq!(r.lp_value, 0.0);
        assert_eq!(r.split_atoms, 0);
        assert!(r.passed);
    }

    #[test]
    fn square_ball_instance_passes_and_repeats() {
        let c = cfg(50, NormLiteral::Square);
        let r1 = run_config(&c).unwrap();
        let r2 = run_config(&c).unwrap();
        assert!(r1.passed);
        assert_eq!(r1.split_atoms, 0);
        assert_eq!(r1.lp_value.to_bits(), r2.lp_value.to_bits());
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn strictly_convex_skips_decomposition() {
        let r = run_config(&cfg(30, NormLiteral::Euclidean)).unwrap();
        assert!(r.decomposition.is_none() && r.rebuild.is_none());
        assert!(r.final_plan.is_permutation(30, 30));
        assert!(r.passed);
    }
}
