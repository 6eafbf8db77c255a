mod common;

use std::collections::HashMap;

use embedrift::analysis::{pca_fit, project_trajectories};
use embedrift::refine;
use embedrift::store::norm;
use embedrift::trajectory::{mean_drift, shared_tokens, table_drift};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn instance(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn refine_matches_reference(seed in any::<u64>()) {
        let inst = instance(seed);
        let out = refine(&inst.corpus(), &inst.table(), &inst.config).unwrap();
        let (expected, steps) = oracle_refine(
            &inst.docs, &inst.origin, inst.dim,
            inst.config.window_size, inst.config.learning_rate, inst.config.epochs,
        );
        prop_assert_eq!(out.log.len(), steps.len());
        for (got, want) in out.log.snapshots().zip(&steps) {
            prop_assert_eq!(got.token, want.token.as_str());
            prop_assert!(max_abs_diff(got.vector, &want.vector) <= 1e-6);
        }
        prop_assert_eq!(out.table.len(), expected.len());
        for (t, v) in &expected {
            prop_assert!(max_abs_diff(out.table.lookup(t).unwrap(), v) <= 1e-6);
        }
    }

    #[test]
    fn snapshots_are_unit_or_flagged_zero(seed in any::<u64>(), alpha in prop_oneof![Just(0.01f32), 0.0f32..4.0]) {
        let mut inst = instance(seed);
        inst.config.learning_rate = alpha.max(1e-3);
        let out = refine(&inst.corpus(), &inst.table(), &inst.config).unwrap();
        for s in out.log.snapshots() {
            if s.zero {
                prop_assert!(s.vector.iter().all(|&x| x == 0.0));
            } else {
                prop_assert!((norm(s.vector) - 1.0).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn history_is_epochs_times_occurrences(seed in any::<u64>(), epochs in 1u32..4) {
        let mut inst = instance(seed);
        inst.config.epochs = epochs;
        let out = refine(&inst.corpus(), &inst.table(), &inst.config).unwrap();
        let mut occ: HashMap<&str, usize> = HashMap::new();
        for t in inst.docs.iter().flatten() {
            *occ.entry(t).or_default() += 1;
        }
        for (t, n) in occ {
            let h = out.log.token_history(t);
            prop_assert_eq!(h.len(), epochs as usize * n);
            // Run order: positions strictly increase, epochs never decrease.
            prop_assert!(h.windows(2).all(|w| w[0].position < w[1].position && w[0].epoch <= w[1].epoch));
            prop_assert_eq!(h.last().unwrap().vector, out.table.lookup(t).unwrap());
        }
    }

    #[test]
    fn drift_is_a_bounded_cosine(seed in any::<u64>()) {
        let inst = instance(seed);
        let origin = inst.table();
        let out = refine(&inst.corpus(), &origin, &inst.config).unwrap();
        for t in shared_tokens(&out.table, &origin) {
            let d = table_drift(&out.table, &origin, &t).unwrap().unwrap();
            prop_assert!((-1.0..=1.0).contains(&d));
        }
        if let Ok(m) = mean_drift(&out.table, &origin, shared_tokens(&out.table, &origin).iter().map(String::as_str)) {
            prop_assert!((-1.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn longer_runs_extend_the_log(seed in any::<u64>()) {
        // Append-only: a 2-epoch log starts with the 1-epoch log.
        let mut inst = instance(seed);
        inst.config.epochs = 1;
        let one = refine(&inst.corpus(), &inst.table(), &inst.config).unwrap().log;
        inst.config.epochs = 2;
        let two = refine(&inst.corpus(), &inst.table(), &inst.config).unwrap().log;
        for (a, b) in one.snapshots().zip(two.snapshots()) {
            prop_assert_eq!(a.token, b.token);
            prop_assert_eq!(a.vector, b.vector);
        }
    }

    #[test]
    fn pca_matches_reference(seed in any::<u64>(), dim in 1usize..=10, n in 2usize..30) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..dim).map(|j| rng.gen_range(-1.0f32..1.0) * 3.0 / (j + 1) as f32).collect())
            .collect();
        let model = pca_fit(&points, dim).unwrap();
        let oracle = oracle_eigen(covariance(&points));
        let top = oracle[0].0.max(1.0);
        for i in 0..dim {
            prop_assert!((model.explained_variance[i] - oracle[i].0.max(0.0)).abs() <= 1e-5 * top);
            let gap = (0..dim).filter(|&j| j != i).map(|j| (oracle[i].0 - oracle[j].0).abs()).fold(f64::INFINITY, f64::min);
            if gap > 1e-3 * top {
                for (a, b) in model.components[i].iter().zip(&oracle[i].1) {
                    prop_assert!((a - b).abs() <= 1e-5);
                }
            }
        }
        let total: f64 = oracle.iter().map(|p| p.0.max(0.0)).sum();
        prop_assert!((model.total_variance - total).abs() <= 1e-9 * total.max(1.0));
    }

    #[test]
    fn projection_shares_one_space(seed in any::<u64>()) {
        let mut inst = instance(seed);
        inst.config.epochs = 2;
        let origin = inst.table();
        let out = refine(&inst.corpus(), &origin, &inst.config).unwrap();
        prop_assume!(inst.dim >= 2);
        let tokens: Vec<&str> = out.log.tokens().iter().take(2).map(String::as_str).collect();
        let proj = project_trajectories(&out.log, Some(&origin.normalize_all(1e-12)), &tokens, 2).unwrap();
        for (p, t) in proj.iter().zip(&tokens) {
            prop_assert_eq!(p.points.len(), out.log.token_history(t).len());
            prop_assert_eq!(p.origin_point.is_some(), origin.contains(t));
            prop_assert!(p.points.iter().all(|q| q.coords.len() == 2 && q.coords.iter().all(|c| c.is_finite())));
        }
    }
}
