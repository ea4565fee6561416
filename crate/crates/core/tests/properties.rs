//! Property tests for the kernel invariants.

#![allow(clippy::needless_range_loop)]

mod common;

use common::TestRng;
use proptest::prelude::*;
use tensorkv::jl::check_deviation;
use tensorkv::{
    attn_four, attn_two, kron_colwise, softmax, DenseMatrixF64, QueryVector, TwoCacheF64,
};

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-30.0..30.0f64, len..=len)
}

proptest! {
    #[test]
    fn softmax_normalizes_and_shifts_cancel(
        len in 1usize..24,
        shift in -50.0..50.0f64,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let logits: Vec<f64> = (0..len).map(|_| rng.range(-40.0, 40.0)).collect();
        let weights = softmax(&logits).unwrap();
        prop_assert!(weights.iter().all(|&w| w > 0.0));
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);

        let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
        let shifted_weights = softmax(&shifted).unwrap();
        for (a, b) in weights.iter().zip(shifted_weights.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn kron_rows_are_pairwise_products(
        n1 in 1usize..=5,
        n2 in 1usize..=5,
        d in 1usize..=4,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let a = common::random_matrix(&mut rng, n1, d, -5.0, 5.0);
        let b = common::random_matrix(&mut rng, n2, d, -5.0, 5.0);
        let k = kron_colwise(&a, &b).unwrap();
        prop_assert_eq!(k.rows(), n1 * n2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let row = k.row(i1 * n2 + i2);
                for j in 0..d {
                    prop_assert_eq!(row[j], a.row(i1)[j] * b.row(i2)[j]);
                }
            }
        }
    }

    #[test]
    fn cache_layouts_agree_coordinatewise(
        i in 1usize..=16,
        d in 1usize..=8,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let k1 = common::random_matrix(&mut rng, i, d, -2.0, 2.0);
        let k2 = common::random_matrix(&mut rng, i, d, -2.0, 2.0);
        let v1 = common::random_matrix(&mut rng, i, d, -3.0, 3.0);
        let v2 = common::random_matrix(&mut rng, i, d, -3.0, 3.0);
        let q = QueryVector::new(common::random_vec(&mut rng, d, -1.5, 1.5)).unwrap();
        let four = attn_four(&q, &k1, &k2, &v1, &v2).unwrap();
        let two = attn_two(
            &q,
            &kron_colwise(&k1, &k2).unwrap(),
            &kron_colwise(&v1, &v2).unwrap(),
        )
        .unwrap();
        prop_assert!(four.max_abs_diff(&two) <= 1e-12);
    }

    #[test]
    fn output_is_convex_combination_of_value_rows(
        rows in 1usize..=10,
        d in 1usize..=6,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let k = common::random_matrix(&mut rng, rows, d, -2.0, 2.0);
        let v = common::random_matrix(&mut rng, rows, d, -4.0, 4.0);
        let q = QueryVector::new(common::random_vec(&mut rng, d, -2.0, 2.0)).unwrap();
        let out = attn_two(&q, &k, &v).unwrap();
        for j in 0..d {
            let column: Vec<f64> = (0..rows).map(|r| v.row(r)[j]).collect();
            let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.as_slice()[j] >= lo - 1e-12);
            prop_assert!(out.as_slice()[j] <= hi + 1e-12);
        }
    }

    #[test]
    fn joint_row_permutation_preserves_output(
        rows in 2usize..=9,
        d in 1usize..=5,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let k = common::random_matrix(&mut rng, rows, d, -2.0, 2.0);
        let v = common::random_matrix(&mut rng, rows, d, -4.0, 4.0);
        let q = QueryVector::new(common::random_vec(&mut rng, d, -2.0, 2.0)).unwrap();

        // Fisher-Yates on the row order, applied jointly to K and V.
        let mut order: Vec<usize> = (0..rows).collect();
        for i in (1..rows).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let permute = |m: &DenseMatrixF64| {
            DenseMatrixF64::from_rows(
                &order.iter().map(|&r| m.row(r).to_vec()).collect::<Vec<_>>(),
            )
            .unwrap()
        };

        let base = attn_two(&q, &k, &v).unwrap();
        let permuted = attn_two(&q, &permute(&k), &permute(&v)).unwrap();
        prop_assert!(base.max_abs_diff(&permuted) <= 1e-12);
    }

    #[test]
    fn deviation_scan_is_permutation_symmetric(
        count in 1usize..=8,
        d in 1usize..=6,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let vectors: Vec<Vec<f64>> =
            (0..count).map(|_| common::random_vec(&mut rng, d, -1.0, 1.0)).collect();
        let mut shuffled = vectors.clone();
        for i in (1..count).rev() {
            shuffled.swap(i, rng.index(i + 1));
        }
        let a = check_deviation(&vectors, 0.3).unwrap();
        let b = check_deviation(&shuffled, 0.3).unwrap();
        prop_assert_eq!(a.max_cross, b.max_cross);
        prop_assert_eq!(a.max_norm_dev, b.max_norm_dev);
    }

    #[test]
    fn two_cache_append_writes_follow_the_delta_law(
        d in 1usize..=6,
        steps in 1usize..=10,
        seed in 0u64..10_000,
    ) {
        let mut rng = TestRng::new(seed);
        let mut cache = TwoCacheF64::new(d);
        for i in 0..steps {
            let cost = cache
                .append(
                    &common::random_vec(&mut rng, d, -1.0, 1.0),
                    &common::random_vec(&mut rng, d, -1.0, 1.0),
                    &common::random_vec(&mut rng, d, -1.0, 1.0),
                    &common::random_vec(&mut rng, d, -1.0, 1.0),
                )
                .unwrap();
            prop_assert_eq!(cost.append_scalar_ops, 2 * (2 * i as u64 + 1) * d as u64);
        }
    }

    #[test]
    fn softmax_rejects_only_empty_input(payload in finite_vec(3)) {
        prop_assert!(softmax(&payload).is_ok());
        prop_assert!(softmax::<f64>(&[]).is_err());
    }
}
