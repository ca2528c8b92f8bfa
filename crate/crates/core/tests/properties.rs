use proptest::prelude::*;
use stt_core::cross::maxvol;
use stt_core::linalg::{right_solve, Matrix};
use stt_core::tt::{quantics_fold, tt_full, tt_round, tt_svd, DenseTensor};

fn dense(shape: Vec<usize>, seed: u64) -> DenseTensor {
    // Small deterministic pseudo-random fill; proptest picks the seed.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    DenseTensor::from_fn(&shape, |_| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tt_svd_meets_its_bound(shape in prop::collection::vec(1usize..5, 1..5), seed: u64, e in 1u32..10) {
        let eps = 10f64.powi(-(e as i32));
        let a = dense(shape, seed);
        let tt = tt_svd(&a, eps).unwrap();
        let err = tt_full(&tt, 1 << 20).unwrap().distance(&a);
        prop_assert!(err <= eps * a.frobenius_norm() * (1.0 + 1e-10));
        prop_assert_eq!(tt.ranks()[0], 1);
        prop_assert_eq!(*tt.ranks().last().unwrap(), 1);
    }

    #[test]
    fn rounding_meets_its_bound(shape in prop::collection::vec(2usize..5, 2..5), seed: u64) {
        let a = dense(shape, seed);
        let exact = tt_svd(&a, 1e-14).unwrap();
        let rounded = tt_round(&exact, 1e-2).unwrap();
        let err = tt_full(&rounded, 1 << 20).unwrap().distance(&a);
        prop_assert!(err <= 1e-2 * a.frobenius_norm() * (1.0 + 1e-8));
        prop_assert!(rounded.ranks().iter().zip(exact.ranks()).all(|(r, s)| *r <= s));
    }

    #[test]
    fn quantics_fold_round_trips(exps in prop::collection::vec(0u32..5, 1..5), raw in prop::collection::vec(0usize..1000, 4)) {
        let shape: Vec<usize> = exps.iter().map(|&m| 2usize.pow(m)).collect();
        let map = quantics_fold(&shape, 2).unwrap();
        let idx: Vec<usize> = shape.iter().zip(raw.iter().cycle()).map(|(&n, &r)| r % n).collect();
        let folded = map.fold_index(&idx).unwrap();
        prop_assert_eq!(folded.len(), map.folded_shape().len());
        prop_assert!(folded.iter().zip(map.folded_shape()).all(|(&i, n)| i < n));
        prop_assert_eq!(map.unfold_index(&folded).unwrap(), idx);
    }

    #[test]
    fn maxvol_is_dominant(rows in 4usize..20, cols in 1usize..4, seed: u64) {
        let rows = rows.max(cols);
        let a = dense(vec![rows, cols], seed);
        let m = Matrix::from_vec(rows, cols, a.data().to_vec()).unwrap();
        if let Ok(mv) = maxvol(&m, 1e-2, 200) {
            prop_assert!(mv.converged);
            let mut sorted = mv.rows.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), cols);
            let c = right_solve(&m, &m.select_rows(&mv.rows)).unwrap();
            prop_assert!(c.max_abs() <= 1.0 + 1e-2 + 1e-12);
        }
    }
}
