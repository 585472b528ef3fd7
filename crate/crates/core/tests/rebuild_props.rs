use otfaces::decomposition::{decompose, FaceKey};
use otfaces::io::{CostLiteral, NormLiteral, PowerLiteral};
use otfaces::pipeline::{gen, BoxDomain, InstanceConfig, MassMode, Tolerances};
use otfaces::rebuild::{monotone_rearrange, rebuild_plan, BlockAtom, FiberBlock, RebuildOptions};
use otfaces::{solve_kantorovich, verify_duality, CostSpec, ScalarH};
use proptest::prelude::*;

fn cost(norm: usize, power: f64) -> (CostLiteral, CostSpec) {
    let lit = CostLiteral::HNorm {
        h: PowerLiteral { power },
        norm: if norm == 0 {
            NormLiteral::Square
        } else {
            NormLiteral::Hexagon
        },
    };
    let spec = lit.build().unwrap();
    (lit, spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    /// With unequal masses the LP plan splits atoms, so faces are exercised:
    /// the rebuilt plan keeps marginals and cost, stays on its faces, and is
    /// certified optimal by the original potentials.
    #[test]
    fn rebuild_preserves_optimality(seed in 0u64..10_000, n in 2usize..25, m in 2usize..25, norm in 0usize..2, power in prop::sample::select(vec![2.0, 3.0])) {
        let (lit, c) = cost(norm, power);
        let (mu, nu) = gen(&InstanceConfig {
            seed, n, m,
            mass_mode: MassMode::Random,
            domain: BoxDomain::default(),
            target_domain: None,
            cost: lit,
            tolerances: Tolerances::default(),
        }).unwrap();
        let sol = solve_kantorovich(&mu, &nu, &c).unwrap();
        let d = decompose(&sol.plan, &mu, &nu, &c, 1e-9).unwrap();
        prop_assert_eq!(d.recombine(), sol.plan.clone());
        for key in d.per_face.keys() {
            prop_assert!(matches!(key, FaceKey::Cone(_)));
        }
        let r = rebuild_plan(&sol.plan, &d, &mu, &nu, &c, &RebuildOptions::default()).unwrap();
        prop_assert!(r.passed, "{:?}", r);
        prop_assert_eq!(r.constraint_violations, 0);
        prop_assert!(r.marginal_error <= 1e-12);
        prop_assert!((r.cost_after - sol.value).abs() <= 1e-9 * (1.0 + sol.value));
        let cert = verify_duality(&r.new_plan, &sol.potentials, &mu, &nu, &c, 1e-9).unwrap();
        prop_assert!(cert.passed, "{:?}", cert);
    }

    /// The monotone coupling of any balanced block is feasible for every
    /// interval that some coupling of the block is feasible for.
    #[test]
    fn monotone_coupling_stays_in_interval(
        lo in -2.0f64..1.0,
        width in 0.0f64..2.0,
        pieces in prop::collection::vec((-3.0f64..3.0, prop::collection::vec((0.1f64..1.0, 0.0f64..=1.0), 1..4)), 1..8),
    ) {
        let hi = lo + width;
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for (i, (x, parts)) in pieces.iter().enumerate() {
            let mut total = 0.0;
            for &(w, u) in parts {
                total += w;
                targets.push(BlockAtom { index: targets.len(), coord: x - (lo + u * width), mass: w });
            }
            sources.push(BlockAtom { index: i, coord: *x, mass: total });
        }
        let block = FiberBlock { face: FaceKey::Fibers, a: 0.0, b: 0.0, sources, targets, entries: Vec::new() };
        let out = monotone_rearrange(&block).unwrap();
        let total: f64 = out.iter().map(|e| e.mass).sum();
        prop_assert!((total - block.source_mass()).abs() <= 1e-12);
        for e in &out {
            let d = block.sources[e.source].coord - block.targets[e.target].coord;
            prop_assert!(d >= lo - 1e-12 && d <= hi + 1e-12, "{} not in [{}, {}]", d, lo, hi);
        }
    }
}

#[test]
fn strictly_convex_cost_is_not_decomposed() {
    let c = CostSpec::h_norm(ScalarH::Power(2.0), otfaces::NormSpec::Euclidean);
    let (mu, nu) = gen(&InstanceConfig {
        seed: 1,
        n: 5,
        m: 5,
        mass_mode: MassMode::Equal,
        domain: BoxDomain::default(),
        target_domain: None,
        cost: CostLiteral::ShiftedSquarePlus,
        tolerances: Tolerances::default(),
    })
    .unwrap();
    let sol = solve_kantorovich(&mu, &nu, &c).unwrap();
    assert!(decompose(&sol.plan, &mu, &nu, &c, 1e-9).is_err());
}
