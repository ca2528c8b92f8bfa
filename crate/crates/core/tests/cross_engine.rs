use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stt_core::cross::{cross_on_quantics, dmrg_cross, CrossConfig, EvalLedger};
use stt_core::tt::{tt_eval, tt_full, Core, DenseTensor, TTTensor};

fn random_tt(shape: &[usize], ranks: &[usize], seed: u64) -> TTTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = shape
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let len = ranks[k] * n * ranks[k + 1];
            Core::new(ranks[k], n, ranks[k + 1], (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        })
        .collect();
    TTTensor::new(cores).unwrap()
}

fn oracle_error(tt: &TTTensor, dense: &DenseTensor) -> f64 {
    tt_full(tt, 10_000_000).unwrap().distance(dense) / dense.frobenius_norm()
}

fn callback(dense: &DenseTensor) -> impl FnMut(&[Vec<usize>]) -> Vec<f64> + '_ {
    move |batch: &[Vec<usize>]| batch.iter().map(|i| dense.get(i)).collect()
}

#[test]
fn recovers_rank_3_cube() {
    let target = random_tt(&[10, 10, 10], &[1, 3, 3, 1], 11);
    let dense = tt_full(&target, 10_000_000).unwrap();
    let mut ledger = EvalLedger::new();
    let out = dmrg_cross(&[10, 10, 10], &mut callback(&dense), &CrossConfig::with_eps(1e-10), &mut ledger).unwrap();
    assert_eq!(out.tt.ranks(), vec![1, 3, 3, 1]);
    assert!(oracle_error(&out.tt, &dense) <= 1e-10);
    assert!(ledger.eval_count() < 1000);
}

#[test]
fn recovers_rank_profile_12321() {
    for seed in 0..5 {
        let shape = [5, 6, 6, 5];
        let target = random_tt(&shape, &[1, 2, 3, 2, 1], seed);
        let dense = tt_full(&target, 10_000_000).unwrap();
        let mut ledger = EvalLedger::new();
        let cfg = CrossConfig { seed, ..CrossConfig::with_eps(1e-10) };
        let out = dmrg_cross(&shape, &mut callback(&dense), &cfg, &mut ledger).unwrap();
        assert_eq!(out.tt.ranks(), vec![1, 2, 3, 2, 1], "seed {seed}");
        assert!(oracle_error(&out.tt, &dense) <= 1e-10);
    }
}

#[test]
fn separable_grid_is_rank_one() {
    let shape = [8; 5];
    let f = |i: &[usize]| i.iter().enumerate().map(|(k, &x)| (0.3 * (k + 1) as f64 * x as f64).cos() + 2.0).product::<f64>();
    let mut ledger = EvalLedger::new();
    let mut cb = |b: &[Vec<usize>]| b.iter().map(|i| f(i)).collect::<Vec<_>>();
    let out = dmrg_cross(&shape, &mut cb, &CrossConfig::default(), &mut ledger).unwrap();
    assert_eq!(out.tt.max_rank(), 1);
    for idx in [[0, 1, 2, 3, 4], [7, 7, 7, 7, 7], [3, 0, 5, 1, 6]] {
        let v = tt_eval(&out.tt, &idx).unwrap();
        assert!((v - f(&idx)).abs() <= 1e-10 * f(&idx).abs());
    }
}

#[test]
fn same_seed_same_result() {
    let target = random_tt(&[6, 6, 6, 6], &[1, 2, 2, 2, 1], 3);
    let dense = tt_full(&target, 10_000_000).unwrap();
    let run = || {
        let mut ledger = EvalLedger::new();
        let out = dmrg_cross(&[6, 6, 6, 6], &mut callback(&dense), &CrossConfig::default(), &mut ledger).unwrap();
        (out.tt, ledger.eval_count())
    };
    let (a, na) = run();
    let (b, nb) = run();
    assert_eq!(na, nb);
    assert_eq!(a, b);
}

#[test]
fn quantics_bump_is_cheap() {
    let n = 32;
    let x = |i: usize| i as f64 / (n - 1) as f64;
    let f = |i: &[usize]| {
        let r2 = (x(i[0]) - 0.2).powi(2) + (x(i[1]) - 0.2).powi(2);
        (-r2 / (2.0 * 0.05f64.powi(2))).exp()
    };
    let dense = DenseTensor::from_fn(&[n, n], |i| f(i));
    let mut ledger = EvalLedger::new();
    let mut cb = |b: &[Vec<usize>]| b.iter().map(|i| f(i)).collect::<Vec<_>>();
    let out = cross_on_quantics(&[n, n], &mut cb, &CrossConfig::with_eps(1e-10), 2, &mut ledger).unwrap();
    assert!(oracle_error(&out.tt, &dense) <= 1e-9);
    eprintln!("bump evals {}", ledger.eval_count());
    assert!(ledger.eval_count() <= 205, "{} evaluations", ledger.eval_count());
}
