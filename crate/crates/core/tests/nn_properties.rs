use proptest::prelude::*;
use xrcodec_core::nn::{orthogonal_init, GruCell, Matrix, OptimizerState};

fn gram_error(m: &Matrix) -> f64 {
    let g = if m.rows() <= m.cols() {
        m.matmul(&m.transpose()).unwrap()
    } else {
        m.transpose().matmul(m).unwrap()
    };
    g.max_abs_diff(&Matrix::identity(g.rows()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orthogonal_gram_identity(rows in 1usize..40, cols in 1usize..40, seed in any::<u64>()) {
        let m = orthogonal_init(rows, cols, seed);
        prop_assert_eq!((m.rows(), m.cols()), (rows, cols));
        prop_assert!(gram_error(&m) < 1e-6);
        prop_assert_eq!(m, orthogonal_init(rows, cols, seed));
    }

    #[test]
    fn zero_gru_halves_hidden(h in proptest::collection::vec(-10.0f64..10.0, 1..32)) {
        let cell = GruCell::zeros(3, h.len());
        let out = cell.step(&[0.4, -1.0, 2.0], &h).unwrap();
        for (o, v) in out.iter().zip(&h) {
            prop_assert_eq!(*o, 0.5 * v);
        }
    }

    #[test]
    fn rmsprop_updates_are_deterministic(
        p in proptest::collection::vec(-5.0f64..5.0, 1..16),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = xrcodec_core::seeded_rng(seed);
        let grads: Vec<Vec<f64>> = (0..5).map(|_| p.iter().map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let run = || {
            let mut opt = OptimizerState::new(p.len(), 8e-3, 0.99, 1e-5).unwrap();
            let mut q = p.clone();
            for g in &grads {
                opt.update(&mut q, g).unwrap();
            }
            (q, opt.accumulator)
        };
        let (a, acc) = run();
        prop_assert_eq!(&a, &run().0);
        prop_assert!(acc.iter().all(|m| *m >= 0.0));
    }
}
