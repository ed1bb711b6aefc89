mod common;

use common::{min_norm_oracle, naive_rewards, Mat};
use hanabi_instruct::engine::{LegalMask, NUM_ACTIONS};
use hanabi_instruct::factors::{factor_matrix, FactorId, FactorMatrix, NUM_FACTORS};
use hanabi_instruct::harness::{generate_decisions, perturbed};
use hanabi_instruct::instructor::*;
use hanabi_instruct::policy::{agreement, argmax_legal, expected_rewards, Profile, StrategyVector};
use proptest::prelude::*;
use rand::Rng;

fn real_matrices(count: usize, seed: u64) -> Vec<FactorMatrix> {
    common::sample_states(count, seed)
        .iter()
        .map(|s| factor_matrix(s, s.current_player).unwrap())
        .collect()
}

fn decide(h: &FactorMatrix, w: &StrategyVector) -> Decision {
    Decision {
        h: *h,
        action: expected_rewards(h, w).argmax().unwrap(),
        source: format!("agent:{}", w.name),
    }
}

fn ht_rows(h: &FactorMatrix) -> Mat {
    (0..NUM_ACTIONS)
        .map(|i| (0..NUM_FACTORS).map(|f| h.entries[f][i]).collect())
        .collect()
}

proptest! {
    #[test]
    fn rewards_are_linear_in_w(
        a in proptest::array::uniform12(-10.0f64..10.0),
        b in proptest::array::uniform12(-10.0f64..10.0),
        seed in 0u64..1000,
    ) {
        let h = real_matrices(1, seed)[0];
        let ya = expected_rewards(&h, &StrategyVector::new("a", a)).y;
        let yb = expected_rewards(&h, &StrategyVector::new("b", b)).y;
        let sum: [f64; NUM_FACTORS] = std::array::from_fn(|i| a[i] + b[i]);
        let yab = expected_rewards(&h, &StrategyVector::new("ab", sum)).y;
        for i in 0..NUM_ACTIONS {
            prop_assert!((yab[i] - ya[i] - yb[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn argmax_survives_power_of_two_scaling(w in proptest::array::uniform12(-10.0f64..10.0), k in 0i32..6, seed in 0u64..1000) {
        let h = real_matrices(1, seed)[0];
        let w = StrategyVector::new("w", w);
        let scaled = w.scaled(2f64.powi(k));
        prop_assert_eq!(expected_rewards(&h, &w).argmax(), expected_rewards(&h, &scaled).argmax());
    }

    #[test]
    fn z_makes_the_target_win_by_epsilon(
        y in proptest::array::uniform20(-5.0f64..5.0),
        mask in proptest::array::uniform20(any::<bool>()),
        pick in 0usize..20,
        eps in 0.001f64..1.0,
    ) {
        let mut legal = LegalMask(mask);
        legal.0[pick] = true;
        let z = z_from(&y, &legal, pick, eps);
        prop_assert_eq!(argmax_legal(&z, &legal), Some(pick));
        if argmax_legal(&y, &legal) == Some(pick) {
            prop_assert_eq!(z, y);
        } else {
            let runner_up = legal.indices().filter(|&j| j != pick).map(|j| z[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((z[pick] - runner_up - eps).abs() < 1e-12);
        }
        for j in 0..NUM_ACTIONS {
            if !legal.is_legal(j) {
                prop_assert_eq!(z[j], y[j]);
            }
        }
    }
}

#[test]
fn rewards_match_the_loop_oracle() {
    let mut r = common::rng(1);
    for h in real_matrices(200, 11) {
        let w = common::random_weights(&mut r, 20.0);
        let y = expected_rewards(&h, &StrategyVector::new("w", w)).y;
        let oracle = naive_rewards(&h.entries, &w);
        for i in 0..NUM_ACTIONS {
            assert!((y[i] - oracle[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn two_by_two_solve() {
    let mut h = FactorMatrix::zeros(LegalMask::none());
    h.entries[0][0] = 1.0;
    h.entries[1][1] = 1.0;
    h.legal.0[0] = true;
    h.legal.0[1] = true;
    let d = DecisionSet(vec![Decision { h, action: 1, source: "human".into() }]);
    let w = StrategyVector::zeros("w").with(FactorId::PlayPlayable, 1.0);
    let dw = solve_dw(&d, &w, 0.01).unwrap();
    assert!(dw.dw[0].abs() < 1e-12);
    assert!((dw.dw[1] - 1.01).abs() < 1e-12);
    assert_eq!(quality(&d, &w, &dw), 1.0);
}

#[test]
fn solve_matches_normal_equations_oracle_on_small_sets() {
    let mut r = common::rng(2);
    let pool = real_matrices(300, 12);
    for trial in 0..100 {
        let g = 1 + trial % 3;
        let w_ref = StrategyVector::new("ref", common::random_weights(&mut r, 5.0));
        let decisions: DecisionSet = (0..g)
            .map(|_| {
                let h = pool[r.random_range(0..pool.len())];
                let legal: Vec<usize> = h.legal.indices().collect();
                Decision { h, action: legal[r.random_range(0..legal.len())], source: "human".into() }
            })
            .collect();
        let dw = solve_dw(&decisions, &w_ref, 0.05).unwrap().dw;
        let (a, b) = stacked_system(&decisions, &w_ref, 0.05);
        let a: Mat = (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect();
        let b: Vec<f64> = b.iter().copied().collect();
        let oracle = min_norm_oracle(&a, &b);
        for f in 0..NUM_FACTORS {
            assert!((dw[f] - oracle[f]).abs() < 1e-8, "trial {trial}: {:?} vs {:?}", dw, oracle);
        }
    }
}

#[test]
fn quality_extremes() {
    let w = Profile::SelfPlay.strategy();
    let d = generate_decisions(&w, 100, 1).unwrap();
    assert_eq!(quality(&d, &w, &StrategyDelta::zero()), 1.0);
    let forced: DecisionSet = d
        .iter()
        .filter_map(|dec| {
            let best = expected_rewards(&dec.h, &w).argmax()?;
            let other = dec.h.legal.indices().find(|&j| j != best)?;
            Some(Decision { action: other, ..dec.clone() })
        })
        .collect();
    assert!(!forced.is_empty());
    assert_eq!(quality(&forced, &w, &StrategyDelta::zero()), 0.0);
}

#[test]
fn solve_rarely_lowers_quality_on_linear_targets() {
    let mut r = common::rng(3);
    let pool = real_matrices(2_000, 13);
    let mut violations = 0;
    for _ in 0..100 {
        let w_star = StrategyVector::new("star", common::random_weights(&mut r, 5.0));
        let w_ref = StrategyVector::new("ref", common::random_weights(&mut r, 5.0));
        let d: DecisionSet = (0..60).map(|_| decide(&pool[r.random_range(0..pool.len())], &w_star)).collect();
        let dw = solve_dw(&d, &w_ref, DEFAULT_EPSILON).unwrap();
        if quality(&d, &w_ref, &dw) < quality(&d, &w_ref, &StrategyDelta::zero()) {
            violations += 1;
        }
    }
    println!("quality decreased in {violations} of 100 synthetic sets");
    assert!(violations <= 10, "{violations} violations");
}

#[test]
fn lambda_is_zero_for_exact_linear_targets_and_grows_with_noise() {
    let mut r = common::rng(4);
    let pool = real_matrices(200, 14);
    let w_star = Profile::SelfPlay.strategy();
    let d: DecisionSet = pool.iter().map(|h| decide(h, &w_star)).collect();
    let exact: Vec<[f64; NUM_ACTIONS]> = pool.iter().map(|h| expected_rewards(h, &w_star).y).collect();
    let all = FactorId::ALL.to_vec();
    assert!(lambda_merit(&d, &exact, &all).unwrap() < 1e-9);

    let mut last = 0.0;
    for sigma in [0.1, 0.5, 2.0] {
        let noisy: Vec<[f64; NUM_ACTIONS]> = exact
            .iter()
            .map(|y| std::array::from_fn(|i| y[i] + sigma * (r.random::<f64>() * 2.0 - 1.0) * 3f64.sqrt()))
            .collect();
        let lambda = lambda_merit(&d, &noisy, &all).unwrap();
        assert!(lambda > last);
        assert!(lambda <= sigma * (NUM_ACTIONS as f64).sqrt() * 1.5);
        last = lambda;
    }

    let without: Vec<FactorId> = all.iter().copied().filter(|&f| f != FactorId::PlayPlayable).collect();
    assert!(lambda_merit(&d, &exact, &without).unwrap() > 1e-6);
}

#[test]
fn sparsify_drops_an_irrelevant_entry() {
    let pool = real_matrices(300, 15);
    let w = Profile::HumanLike.strategy();
    // Discard-unneeded is zero in every fresh-ish column of these states only if
    // no card is unneeded; use an entry whose row is identically zero instead.
    let zero_row = FactorId::ALL
        .into_iter()
        .find(|f| pool.iter().all(|h| h.entries[f.index()].iter().all(|&v| v == 0.0)));
    let mut pool = pool;
    let zero_row = zero_row.unwrap_or_else(|| {
        for h in pool.iter_mut() {
            h.entries[FactorId::OtherPlaysUnplayable.index()] = [0.0; NUM_ACTIONS];
        }
        FactorId::OtherPlaysUnplayable
    });
    let target = w.clone().with(FactorId::ClueSinglesPlayable, 8.0);
    let d: DecisionSet = pool.iter().map(|h| decide(h, &target)).collect();
    let mut dw = [0.0; NUM_FACTORS];
    dw[FactorId::ClueSinglesPlayable.index()] = 5.0;
    dw[zero_row.index()] = 1e-3;
    let delta = StrategyDelta { dw };
    let q = quality(&d, &w, &delta);
    let out = sparsify(&d, &w, &delta, q - 1e-6);
    assert_eq!(out.delta.dw[zero_row.index()], 0.0);
    assert_eq!(out.quality, q);
    assert!(out.delta.dw[FactorId::ClueSinglesPlayable.index()] != 0.0);
}

#[test]
fn single_entry_kept_or_dropped_by_alpha() {
    let w = Profile::SelfPlay.strategy();
    let target = w.clone().with(FactorId::ClueSinglesPlayable, 9.0);
    let d = generate_decisions(&target, 200, 5).unwrap();
    let mut dw = [0.0; NUM_FACTORS];
    dw[FactorId::ClueSinglesPlayable.index()] = 7.0;
    let delta = StrategyDelta { dw };
    let q_with = quality(&d, &w, &delta);
    let q_without = quality(&d, &w, &StrategyDelta::zero());
    assert!(q_with > q_without);
    let low = sparsify(&d, &w, &delta, q_without / 2.0);
    assert!(low.delta.support().is_empty());
    let high = sparsify(&d, &w, &delta, (q_with + q_without) / 2.0);
    assert_eq!(high.delta.support(), vec![FactorId::ClueSinglesPlayable]);
}

#[test]
fn raised_discard_weight_is_reported_as_value_less() {
    let ideal = Profile::SelfPlay.strategy();
    let observed = perturbed(&ideal, FactorId::DiscardNonEndangered, 9.2);
    let d = generate_decisions(&observed, 400, 6).unwrap();
    let result = instruct(&d, &ideal, agreement(&ideal, &d), DEFAULT_EPSILON).unwrap();
    assert!(result.dw_dense[FactorId::DiscardNonEndangered.index()] > 0.0);
    assert!(
        result.rendered.iter().any(|s| s == "value Discarding a non-endangered card less"),
        "{:?}",
        result.rendered
    );
    assert_eq!(result.rendered.len(), result.sparse().support().len());
}

#[test]
fn perception_equivalence_is_the_projection() {
    let mut r = common::rng(5);
    for h in real_matrices(100, 16) {
        let w = StrategyVector::new("w", common::random_weights(&mut r, 5.0));
        assert_eq!(
            perception_equivalent_dw(&h, &PerceptionDelta { dh: [[0.0; NUM_ACTIONS]; NUM_FACTORS] }, &w).dw,
            [0.0; NUM_FACTORS]
        );
        let a = ht_rows(&h);

        // A shift already inside range(Hᵀ) is reproduced exactly.
        let v = common::random_weights(&mut r, 2.0);
        let target = common::matvec(&a, &v);
        let k = (0..NUM_FACTORS).max_by(|&i, &j| w.weights[i].abs().total_cmp(&w.weights[j].abs())).unwrap();
        let mut dh = [[0.0; NUM_ACTIONS]; NUM_FACTORS];
        for i in 0..NUM_ACTIONS {
            dh[k][i] = target[i] / w.weights[k];
        }
        let dw = perception_equivalent_dw(&h, &PerceptionDelta { dh }, &w).dw;
        let got = common::matvec(&a, &dw);
        for i in 0..NUM_ACTIONS {
            assert!((got[i] - target[i]).abs() < 1e-7 * target[i].abs().max(1.0), "{} vs {}", got[i], target[i]);
        }

        // A generic shift leaves a residual orthogonal to every column of Hᵀ.
        let dh: [[f64; NUM_ACTIONS]; NUM_FACTORS] = std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0)));
        let dw = perception_equivalent_dw(&h, &PerceptionDelta { dh }, &w).dw;
        let shift: Vec<f64> = (0..NUM_ACTIONS)
            .map(|i| (0..NUM_FACTORS).map(|f| dh[f][i] * w.weights[f]).sum())
            .collect();
        let fitted = common::matvec(&a, &dw);
        let residual: Vec<f64> = shift.iter().zip(&fitted).map(|(s, f)| s - f).collect();
        let scale = common::norm(&shift).max(1.0);
        for col in common::transpose(&a) {
            assert!(common::dot(&col, &residual).abs() < 1e-8 * scale * common::norm(&col).max(1.0), "{} {} {}", common::dot(&col, &residual), scale, common::norm(&dw));
        }
        // And the answer carries no null-space component.
        for n in common::null_space_oracle(&a) {
            assert!(common::dot(&n, &dw).abs() < 1e-8 * common::norm(&n) * common::norm(&dw).max(1.0));
        }
    }
}

#[test]
fn emulating_yourself_changes_nothing() {
    let w = Profile::HumanLike.strategy();
    let steps = iterative_emulation(
        &w,
        |b| generate_decisions(&w, 50, b as u64).unwrap(),
        &EmulationConfig { batches: 3, ..EmulationConfig::default() },
    )
    .unwrap();
    assert_eq!(steps.len(), 4);
    for s in steps {
        assert_eq!(s.agreement, 1.0);
        assert_eq!(s.dw_norm, 0.0);
        assert_eq!(s.weights, w.weights);
    }
}

