use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tkg_continual::dataset::Quadruple;
use tkg_continual::model::{init_params, EventLog, ModelParams};
use tkg_continual::regularizer::{
    decayed_lambda, estimate_fisher, ewc_penalty, ConsolidationStore, EwcVariant, FisherRecord,
    ParamSnapshot, RegConfig,
};

fn random_store(seed: u64, tasks: usize, sparse: bool) -> (ModelParams, ConsolidationStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let live = init_params(3, 5, 2, rng.gen()).unwrap();
    let mut store = ConsolidationStore::new();
    for task in 0..tasks {
        let anchor = init_params(3, 5, 2, rng.gen()).unwrap();
        let fisher = (0..anchor.values().len())
            .map(|_| if sparse && rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..3.0) })
            .collect();
        store.push(ParamSnapshot::capture(task, &anchor), FisherRecord { task, values: fisher }).unwrap();
    }
    (live, store)
}

fn reg(lambda: f64, alpha: f64) -> RegConfig {
    RegConfig {
        lambda,
        alpha,
        ..RegConfig::default()
    }
}

const VARIANTS: [EwcVariant; 4] = [EwcVariant::PrevOnly, EwcVariant::Uniform, EwcVariant::Decayed, EwcVariant::PermutedDecay];

proptest! {
    #[test]
    fn decayed_lambda_shrinks_with_age(lambda in 0.001f64..100.0, alpha in 0.01f64..0.999, t in 2usize..30) {
        for tau in 1..t {
            prop_assert!(decayed_lambda(lambda, alpha, t, tau - 1).unwrap() < decayed_lambda(lambda, alpha, t, tau).unwrap());
        }
    }

    #[test]
    fn penalty_is_non_negative(seed in any::<u64>(), tasks in 1usize..5, lambda in 0.0f64..50.0, alpha in 0.05f64..=1.0) {
        let (live, store) = random_store(seed, tasks, true);
        for v in VARIANTS {
            prop_assert!(ewc_penalty(&live, &store, v, &reg(lambda, alpha), tasks).unwrap().0 >= 0.0);
        }
    }

    #[test]
    fn penalty_vanishes_off_the_fisher_support(seed in any::<u64>(), bump in -3.0f64..3.0) {
        let (_, store) = random_store(seed, 1, true);
        let (snap, fisher) = &store.entries()[0];
        let mut live = snap.to_params().unwrap();
        for (v, f) in live.values_mut().iter_mut().zip(&fisher.values) {
            if *f == 0.0 {
                *v += bump;
            }
        }
        let (p, g) = ewc_penalty(&live, &store, EwcVariant::Decayed, &reg(10.0, 0.9), 1).unwrap();
        prop_assert_eq!(p, 0.0);
        prop_assert!(g.values().iter().all(|&x| x == 0.0));
        if bump != 0.0 && fisher.values.iter().any(|&f| f > 0.0) {
            let mut moved = live.clone();
            let i = fisher.values.iter().position(|&f| f > 0.0).unwrap();
            moved.values_mut()[i] += bump;
            prop_assert!(ewc_penalty(&moved, &store, EwcVariant::Decayed, &reg(10.0, 0.9), 1).unwrap().0 > 0.0);
        }
    }

    #[test]
    fn uniform_is_decayed_with_unit_alpha(seed in any::<u64>(), tasks in 1usize..5, extra in 0usize..3) {
        let (live, store) = random_store(seed, tasks, false);
        let t = tasks + extra;
        let u = ewc_penalty(&live, &store, EwcVariant::Uniform, &reg(7.0, 0.5), t).unwrap();
        let d = ewc_penalty(&live, &store, EwcVariant::Decayed, &reg(7.0, 1.0), t).unwrap();
        prop_assert_eq!(u.0, d.0);
        prop_assert_eq!(u.1, d.1);
    }

    #[test]
    fn prev_only_uses_the_last_entry(seed in any::<u64>(), tasks in 1usize..5) {
        let (live, store) = random_store(seed, tasks, false);
        let mut last = ConsolidationStore::new();
        let (snap, fisher) = store.entries().last().unwrap().clone();
        last.push(snap, fisher).unwrap();
        let t = tasks;
        let a = ewc_penalty(&live, &store, EwcVariant::PrevOnly, &reg(4.0, 0.3), t).unwrap();
        // With α^(t − τ) = α^1, scaling λ by 1/α isolates the last entry.
        let b = ewc_penalty(&live, &last, EwcVariant::Decayed, &reg(4.0 / 0.5, 0.5), t).unwrap();
        prop_assert!((a.0 - b.0).abs() <= 1e-12 * a.0.abs().max(1.0));
        for (x, y) in a.1.values().iter().zip(b.1.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn doubling_lambda_doubles_penalty_and_gradient(seed in any::<u64>(), tasks in 1usize..5, lambda in 0.01f64..20.0) {
        let (live, store) = random_store(seed, tasks, true);
        for v in VARIANTS {
            let a = ewc_penalty(&live, &store, v, &reg(lambda, 0.8), tasks).unwrap();
            let b = ewc_penalty(&live, &store, v, &reg(2.0 * lambda, 0.8), tasks).unwrap();
            prop_assert_eq!(b.0, 2.0 * a.0);
            for (x, y) in a.1.values().iter().zip(b.1.values()) {
                prop_assert_eq!(*y, 2.0 * x);
            }
        }
    }
}

#[test]
fn fisher_uses_only_the_given_training_events() {
    let params = init_params(3, 6, 2, 1).unwrap();
    let train = vec![Quadruple::new(0, 0, 1, 0), Quadruple::new(2, 1, 3, 0)];
    let log = EventLog::new();
    let cfg = RegConfig::default();
    let f = estimate_fisher(&params, 0, &train, &log, 3, &cfg).unwrap();
    assert!(f.values.iter().all(|&x| x >= 0.0 && x.is_finite()));
    let entity_rows_used = [0usize, 2];
    for e in 0..6 {
        let row = &f.values[e * 3..e * 3 + 3];
        assert_eq!(row.iter().any(|&x| x > 0.0), entity_rows_used.contains(&e), "entity {e}");
    }
}

#[test]
fn store_rejects_out_of_order_tasks() {
    let p = init_params(2, 3, 1, 0).unwrap();
    let mut store = ConsolidationStore::new();
    let fisher = |task| FisherRecord { task, values: vec![0.0; p.values().len()] };
    store.push(ParamSnapshot::capture(1, &p), fisher(1)).unwrap();
    assert!(store.push(ParamSnapshot::capture(1, &p), fisher(1)).is_err());
    assert!(store.push(ParamSnapshot::capture(0, &p), fisher(0)).is_err());
}

#[test]
fn store_files_round_trip() {
    let (live, store) = random_store(9, 3, true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tkgs");
    store.save(&path, live.layout()).unwrap();
    assert_eq!(ConsolidationStore::load(&path).unwrap(), store);
}
