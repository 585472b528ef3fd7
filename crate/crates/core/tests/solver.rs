use otfaces::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn costs() -> Vec<CostSpec> {
    vec![
        CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::Euclidean),
        CostSpec::h_norm(ScalarH::Power(2.0), NormSpec::square()),
        CostSpec::h_norm(ScalarH::Power(3.0), NormSpec::hexagon()),
        CostSpec::shifted_square_plus(),
    ]
}

#[test]
fn matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..200 {
        let n = 2 + trial % 6;
        let mu = DiscreteMeasure::uniform(random_points(&mut rng, n)).unwrap();
        let nu = DiscreteMeasure::uniform(random_points(&mut rng, n)).unwrap();
        let c = &costs()[trial % 4];
        let s = solve_kantorovich(&mu, &nu, c).unwrap();
        let want = brute_force_value(&mu, &nu, c).unwrap();
        assert!(
            (s.value - want).abs() <= 1e-9 * (1.0 + want),
            "trial {trial}: {} vs {want}",
            s.value
        );
        assert!(s.plan.is_permutation(n, n));
        assert!(s.plan.len() < 2 * n);
    }
}

#[test]
fn matches_vertex_oracle_with_unequal_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..100 {
        let n = 1 + trial % 4;
        let m = (12 / n).min(4);
        let weights = |rng: &mut ChaCha8Rng, k: usize| {
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
            let s: f64 = w.iter().sum();
            let mut w: Vec<f64> = w.iter().map(|x| x / s).collect();
            let head: f64 = w[..k - 1].iter().sum();
            w[k - 1] = 1.0 - head;
            w
        };
        let (a, b) = (weights(&mut rng, n), weights(&mut rng, m));
        let mu = DiscreteMeasure::new(random_points(&mut rng, n), a).unwrap();
        let nu = DiscreteMeasure::new(random_points(&mut rng, m), b).unwrap();
        let c = &costs()[trial % 4];
        let s = solve_kantorovich(&mu, &nu, c).unwrap();
        let want = brute_force_value(&mu, &nu, c).unwrap();
        assert!(
            (s.value - want).abs() <= 1e-9 * (1.0 + want),
            "trial {trial}"
        );
        assert!(s.plan.len() < n + m);
        let r = verify_duality(&s.plan, &s.potentials, &mu, &nu, c, 1e-9).unwrap();
        assert!(r.passed, "trial {trial}: {r:?}");
    }
}

#[test]
fn constrained_instances_certify() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let k = ConvexPolygon::rectangle(Vec2::new(-0.8, -0.8), Vec2::new(0.8, 0.8)).unwrap();
    let c = CostSpec::constrained_quadratic(ConvexSet::Polygon(k.clone()));
    let onevar = CostSpec::constrained_onevar(ScalarH::Power(2.0), Frame::STANDARD, k).unwrap();
    let mut solved = 0;
    for trial in 0..100 {
        let n = 2 + trial % 6;
        let mu = DiscreteMeasure::uniform(random_points(&mut rng, n)).unwrap();
        let nu = DiscreteMeasure::uniform(random_points(&mut rng, n)).unwrap();
        let cost = if trial % 2 == 0 { &c } else { &onevar };
        match (
            solve_kantorovich(&mu, &nu, cost),
            brute_force_value(&mu, &nu, cost),
        ) {
            (Ok(s), Ok(want)) => {
                solved += 1;
                assert!((s.value - want).abs() <= 1e-9 * (1.0 + want));
                let r = verify_duality(&s.plan, &s.potentials, &mu, &nu, cost, 1e-9).unwrap();
                assert!(r.passed, "{r:?}");
            }
            (Err(TransportError::Infeasible(_)), Err(TransportError::Infeasible(_))) => {}
            (a, b) => panic!("solver and oracle disagree: {a:?} / {b:?}"),
        }
    }
    assert!(solved > 20);
}

#[test]
fn deterministic_and_thread_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mu = DiscreteMeasure::uniform(random_points(&mut rng, 60)).unwrap();
    let nu = DiscreteMeasure::uniform(random_points(&mut rng, 60)).unwrap();
    let c = CostSpec::h_norm(ScalarH::Power(3.0), NormSpec::hexagon());
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| serde_json::to_string(&solve_kantorovich(&mu, &nu, &c).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(4));
}
