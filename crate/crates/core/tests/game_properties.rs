use proptest::prelude::*;
use sfp_core::game::{best_response, entropy, softmax, utility};
use sfp_core::{Matrix, SimplexVector};
use sfp_core::{PayoffMatrix, PlayerParams};

fn simplex(k: usize) -> impl Strategy<Value = SimplexVector> {
    prop::collection::vec(0.0f64..1.0, k).prop_filter_map("all-zero draw", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-9).then(|| SimplexVector::new(w.into_iter().map(|x| x / s).collect()).unwrap())
    })
}

fn params(k: usize, l: usize) -> impl Strategy<Value = PlayerParams> {
    (prop::collection::vec(-3.0f64..3.0, k * l), 0.1f64..3.0).prop_map(move |(entries, tau)| {
        let m = Matrix::from_fn(k, l, |r, c| entries[r * l + c]);
        PlayerParams::new(tau, PayoffMatrix::new(m).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn softmax_is_interior(x in prop::collection::vec(-50.0f64..50.0, 2..6)) {
        let s = softmax(&x);
        prop_assert!(s.iter().all(|&p| p > 0.0));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariant(x in prop::collection::vec(-50.0f64..50.0, 2..6), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = softmax(&x);
        let b = softmax(&shifted);
        for (p, q) in a.iter().zip(b.iter()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn best_response_maximizes_utility(
        params in params(3, 2),
        q in simplex(2),
        alts in prop::collection::vec(simplex(3), 100),
    ) {
        let b = best_response(&q, &params).unwrap();
        let ub = utility(&b, &q, &params).unwrap();
        for p in &alts {
            prop_assert!(ub >= utility(p, &q, &params).unwrap() - 1e-10);
        }
    }

    #[test]
    fn entropy_peaks_at_uniform(p in simplex(4)) {
        let h_uniform = entropy(&SimplexVector::uniform(4));
        let h = entropy(&p);
        prop_assert!(h <= h_uniform + 1e-12);
        prop_assert!(h >= 0.0);
        if (h - h_uniform).abs() < 1e-12 {
            prop_assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-5));
        }
    }

    #[test]
    fn best_response_invariant_under_joint_scaling(params in params(2, 3), q in simplex(3), c in 0.01f64..100.0) {
        let scaled = PlayerParams::new(
            params.tau() * c,
            PayoffMatrix::new(params.payoff().matrix().scale(c)).unwrap(),
        ).unwrap();
        let a = best_response(&q, &params).unwrap();
        let b = best_response(&q, &scaled).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
