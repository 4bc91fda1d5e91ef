use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfp_core::ctfp::{converged_limit, integrate, Convergence};
use sfp_core::equilibrium::{multi_start, random_simplex, solve};
use sfp_core::game::softmax;
use sfp_core::sampling::{random_channel_2x2, random_game_2x2};
use sfp_core::{ChannelMatrix, DynamicsSpec, FixedPointProblem, Game, Matrix, Profile, SimplexVector};

const TAUS: [f64; 3] = [0.5, 1.0, 2.0];

fn frozen_opponent_game() -> Game {
    let m1 = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let m2 = Matrix::from_rows(&[vec![-0.5, -0.5], vec![0.25, 0.25]]).unwrap();
    Game::from_matrices(m1, m2, 1.0, 1.0).unwrap()
}

/// Global error at t = 5 against `p(t) = b + (p0 − b)e^{−t}`.
fn frozen_opponent_error(h: f64) -> f64 {
    let spec = DynamicsSpec::plain(&frozen_opponent_game());
    let b = [softmax(&[1.0, 0.0]), softmax(&[-0.5, 0.25])];
    let p0 = Profile::new(SimplexVector::vertex(2, 1), SimplexVector::vertex(2, 0));
    let traj = integrate(&spec, &p0, h, 5.0).unwrap();
    let decay = (-5.0f64).exp();
    let last = traj.last();
    let mut err = 0.0f64;
    for (i, p) in [&last.p1, &last.p2].into_iter().enumerate() {
        let start = p0.get(i);
        for j in 0..2 {
            let exact = b[i][j] + (start[j] - b[i][j]) * decay;
            err = err.max((p[j] - exact).abs());
        }
    }
    err
}

#[test]
fn rk4_matches_closed_form_and_has_order_four() {
    let coarse = frozen_opponent_error(0.02);
    let fine = frozen_opponent_error(0.01);
    assert!(fine < 1e-9, "error {fine}");
    let ratio = coarse / fine;
    assert!(
        (12.0..=20.0).contains(&ratio),
        "ratio {ratio} (errors {coarse:e}, {fine:e})"
    );
}

fn random_state(rng: &mut ChaCha8Rng) -> Profile {
    Profile::new(random_simplex(2, rng), random_simplex(2, rng))
}

#[test]
fn rhs_is_tangent_for_every_variant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
        let d = [
            random_channel_2x2(&mut rng, 1.0, 0.3),
            random_channel_2x2(&mut rng, 1.0, 0.3),
        ];
        let c = [
            random_channel_2x2(&mut rng, 0.4, 0.3),
            random_channel_2x2(&mut rng, 0.4, 0.3),
        ];
        let specs = [
            DynamicsSpec::plain(&g),
            DynamicsSpec::decision_error(&g, d[0].clone(), d[1].clone()).unwrap(),
            DynamicsSpec::observation_error(&g, c.clone(), d.clone(), 1e-9).unwrap(),
        ];
        let x = random_state(&mut rng);
        for spec in &specs {
            let (a, b) = spec.rhs(&x.p1, &x.p2).unwrap();
            assert!(a.iter().sum::<f64>().abs() < 1e-13);
            assert!(b.iter().sum::<f64>().abs() < 1e-13);
        }
    }
}

#[test]
fn identity_decision_errors_reduce_to_plain_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
    let plain = DynamicsSpec::plain(&g);
    let eye = ChannelMatrix::identity(2);
    let dec = DynamicsSpec::decision_error(&g, eye.clone(), eye).unwrap();
    for _ in 0..1000 {
        let x = random_state(&mut rng);
        let (a1, a2) = plain.rhs(&x.p1, &x.p2).unwrap();
        let (b1, b2) = dec.rhs(&x.p1, &x.p2).unwrap();
        for (u, v) in a1.iter().chain(&a2).zip(b1.iter().chain(&b2)) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}

#[test]
fn fixed_point_start_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
    let fp = solve(&FixedPointProblem::plain(&g), &Profile::uniform(2, 2)).unwrap();
    assert!(fp.converged);
    let spec = DynamicsSpec::plain(&g);
    assert!(spec.residual(&fp.point).unwrap() < 1e-10);
    let traj = integrate(&spec, &fp.point, 0.01, 50.0).unwrap();
    for s in &traj.states {
        assert!(s.distance(&fp.point) < 1e-10);
    }
}

#[test]
fn perfect_estimates_reproduce_plain_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
        let c = [
            random_channel_2x2(&mut rng, 0.4, 0.3),
            random_channel_2x2(&mut rng, 0.4, 0.3),
        ];
        let plain = DynamicsSpec::plain(&g);
        let obs = DynamicsSpec::observation_error(&g, c.clone(), c, 1e-9).unwrap();
        let p0 = random_state(&mut rng);
        let a = integrate(&plain, &p0, 0.01, 20.0).unwrap();
        let b = integrate(&obs, &p0, 0.01, 20.0).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.distance(y) < 1e-10);
        }
    }
}

#[test]
fn identity_decision_errors_share_plain_limit() {
    let m1 = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let g = Game::from_matrices(m1.clone(), m1.transpose(), 1.0, 1.0).unwrap();
    let eye = ChannelMatrix::identity(2);
    let plain = integrate(&DynamicsSpec::plain(&g), &Profile::uniform(2, 2), 0.01, 200.0).unwrap();
    let dec = integrate(
        &DynamicsSpec::decision_error(&g, eye.clone(), eye).unwrap(),
        &Profile::uniform(2, 2),
        0.01,
        200.0,
    )
    .unwrap();
    let (Convergence::Converged(a), Convergence::Converged(b)) =
        (converged_limit(&plain, 1e-6), converged_limit(&dec, 1e-6))
    else {
        panic!("both runs should converge");
    };
    assert!(a.distance(&b) < 1e-8);
    let fp = solve(&FixedPointProblem::plain(&g), &Profile::uniform(2, 2)).unwrap();
    assert!(a.distance(&fp.point) < 1e-6);
}

/// Random games, decision matrices and channels: every variant's ODE limit is
/// a fixed point found independently by the solver.
#[test]
fn ode_limits_agree_with_solver_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = [0usize; 3];
    while checked.iter().any(|&c| c < 100) {
        let g: Game = random_game_2x2(&mut rng, 2.0, &TAUS);
        let d = [
            random_channel_2x2(&mut rng, 1.0, 0.3),
            random_channel_2x2(&mut rng, 1.0, 0.3),
        ];
        let c = [
            random_channel_2x2(&mut rng, 1.0, 0.3),
            random_channel_2x2(&mut rng, 1.0, 0.3),
        ];
        let c_bar = [
            random_channel_2x2(&mut rng, 1.0, 0.3),
            random_channel_2x2(&mut rng, 1.0, 0.3),
        ];
        let variant = rng.gen_range(0..3);
        if checked[variant] >= 100 {
            continue;
        }
        let (spec, problem) = match variant {
            0 => (DynamicsSpec::plain(&g), FixedPointProblem::plain(&g)),
            1 => (
                DynamicsSpec::decision_error(&g, d[0].clone(), d[1].clone()).unwrap(),
                FixedPointProblem::decision_error(&g, d[0].clone(), d[1].clone()).unwrap(),
            ),
            _ => (
                DynamicsSpec::observation_error(&g, c.clone(), c_bar.clone(), 1e-9).unwrap(),
                FixedPointProblem::observation_error(&g, c.clone(), c_bar.clone(), 1e-9).unwrap(),
            ),
        };
        if !spec.hypotheses(1e-6).holds {
            continue;
        }
        let traj = integrate(&spec, &Profile::uniform(2, 2), 0.01, 200.0).unwrap();
        assert!(traj.max_renormalization < 1e-9);
        let limit = converged_limit(&traj, 1e-6);
        let Convergence::Converged(limit) = limit else {
            panic!("variant {variant} did not converge: {g:?}");
        };
        let ms = multi_start(&problem, 10, 0, 1e-6).unwrap();
        let (_, dist) = ms.nearest(&limit).expect("solver found a fixed point");
        assert!(dist < 1e-6, "variant {variant}: ODE/solver distance {dist}");
        checked[variant] += 1;
    }
}
