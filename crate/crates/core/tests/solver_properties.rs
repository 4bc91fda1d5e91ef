use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sfp_core::ctfp::DynamicsSpec as Dynamics;
use sfp_core::equilibrium::{random_simplex, solve};
use sfp_core::game::utility;
use sfp_core::sampling::random_game_2x2;
use sfp_core::{FixedPointProblem, Game, Profile};

const TAUS: [f64; 3] = [0.5, 1.0, 2.0];

#[test]
fn converged_points_satisfy_tolerance_and_are_regularized_nash() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
        let problem = FixedPointProblem::plain(&g);
        let r = solve(&problem, &Profile::uniform(2, 2)).unwrap();
        assert!(r.converged);
        assert!(problem.residual(&r.point).unwrap() < problem.settings.tol);
        let x = &r.point;
        for _ in 0..100 {
            let alt = random_simplex(2, &mut rng);
            let best1 = utility(&x.p1, &x.p2, g.player(0)).unwrap();
            let best2 = utility(&x.p2, &x.p1, g.player(1)).unwrap();
            assert!(utility(&alt, &x.p2, g.player(0)).unwrap() <= best1 + 1e-9);
            assert!(utility(&alt, &x.p1, g.player(1)).unwrap() <= best2 + 1e-9);
        }
    }
}

/// Where the ODE's fixed point is a global attractor (nondegenerate games with
/// no second equilibrium), every start lands on the same point.
#[test]
fn solution_does_not_depend_on_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    while checked < 50 {
        let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
        if !Dynamics::plain(&g).hypotheses(1e-6).holds {
            continue;
        }
        let problem = FixedPointProblem::plain(&g);
        let reference = solve(&problem, &Profile::uniform(2, 2)).unwrap();
        let results: Vec<_> = (0..10)
            .map(|_| {
                let start = Profile::new(random_simplex(2, &mut rng), random_simplex(2, &mut rng));
                solve(&problem, &start).unwrap()
            })
            .collect();
        let spread = results
            .iter()
            .map(|r| r.point.distance(&reference.point))
            .fold(0.0, f64::max);
        if spread > 1e-3 {
            // Several equilibria: the coordination case. Not a uniqueness instance.
            continue;
        }
        assert!(spread < 2.0 * problem.settings.tol, "spread {spread:e}");
        checked += 1;
    }
}
