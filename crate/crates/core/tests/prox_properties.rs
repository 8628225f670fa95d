mod common;

use common::*;

use nkdcd::loss::{penalty, PenaltyKind};
use nkdcd::model::LagStack;
use nkdcd::numgrad::Matrix;
use nkdcd::optim::{prox, prox_hlg, prox_ilg, prox_ulg};
use proptest::prelude::*;

fn stack_strategy() -> impl Strategy<Value = LagStack> {
    (1usize..4, 1usize..4, 1usize..5, any::<u64>()).prop_map(|(n, b, l, seed)| random_stack(n, b, l, seed))
}

#[test]
fn hierarchical_two_lag_hand_example() {
    let lags = vec![Matrix::scalar(3.0), Matrix::scalar(4.0)];
    let s = LagStack::from_matrices(1, 1, lags).unwrap();
    let out = prox_hlg(&s, 1.0);
    assert!((out.lag(0).get(0, 0) - 2.4).abs() < 1e-12);
    assert!((out.lag(1).get(0, 0) - 2.2).abs() < 1e-12);
}

#[test]
fn independent_block_below_threshold_zeroes_only_itself() {
    let lags = vec![Matrix::scalar(0.5), Matrix::scalar(2.0)];
    let s = LagStack::from_matrices(1, 1, lags).unwrap();
    let out = prox_ilg(&s, 1.0);
    assert_eq!(out.lag(0).get(0, 0), 0.0);
    assert!((out.lag(1).get(0, 0) - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prox_matches_closed_form(s in stack_strategy(), t in 0.0f64..1.5) {
        let (u, h, i) = (prox_ulg(&s, t), prox_hlg(&s, t), prox_ilg(&s, t));
        for a in 0..s.n_series() {
            for b in 0..s.n_series() {
                let g = pair(&s, a, b);
                prop_assert!(close(&pair(&u, a, b), &oracle_ulg(&g, t)));
                prop_assert!(close(&pair(&h, a, b), &oracle_hlg(&g, t)));
                prop_assert!(close(&pair(&i, a, b), &oracle_ilg(&g, t)));
            }
        }
    }

    #[test]
    fn prox_is_non_expansive(
        (a, b) in (1usize..4, 1usize..3, 1usize..5, any::<u64>(), any::<u64>())
            .prop_map(|(n, k, l, s1, s2)| (random_stack(n, k, l, s1), random_stack(n, k, l, s2))),
        t in 0.0f64..1.5,
    ) {
        for kind in PenaltyKind::ALL {
            let (pa, pb) = (prox(&a, kind, t), prox(&b, kind, t));
            prop_assert!(distance(&pa, &pb) <= distance(&a, &b) * (1.0 + 1e-12) + 1e-14);
            prop_assert!(total_norm(&pa) <= total_norm(&a) * (1.0 + 1e-12));
            for i in 0..a.n_series() {
                for j in 0..a.n_series() {
                    let before = norm(&pair(&a, i, j).concat());
                    let after = norm(&pair(&pa, i, j).concat());
                    prop_assert!(after <= before * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn single_lag_kinds_coincide(
        s in (1usize..5, 1usize..4, any::<u64>()).prop_map(|(n, b, seed)| random_stack(n, b, 1, seed)),
        t in 0.0f64..1.5,
    ) {
        let h = prox_hlg(&s, t);
        prop_assert_eq!(&prox_ulg(&s, t), &h);
        prop_assert_eq!(&prox_ilg(&s, t), &h);
    }

    #[test]
    fn independent_prox_never_flips_signs(s in stack_strategy(), t in 0.0f64..1.5) {
        let out = prox_ilg(&s, t);
        for l in 0..s.max_lag() {
            for i in 0..s.n_series() {
                for j in 0..s.n_series() {
                    let (a, b) = (s.block(l, i, j), out.block(l, i, j));
                    let zero = b.data().iter().all(|v| *v == 0.0);
                    let scaled = a.data().iter().zip(b.data()).all(|(x, y)| x * y > 0.0 || (*x == 0.0 && *y == 0.0));
                    prop_assert!(zero || scaled);
                    prop_assert!(b.norm() <= a.norm());
                }
            }
        }
    }

    #[test]
    fn penalty_orderings(s in stack_strategy()) {
        let (u, h, i) = (
            penalty(&s, PenaltyKind::Ulg),
            penalty(&s, PenaltyKind::Hlg),
            penalty(&s, PenaltyKind::Ilg),
        );
        prop_assert!(u <= h * (1.0 + 1e-12) + 1e-15);
        prop_assert!(u <= i * (1.0 + 1e-12) + 1e-15);
        prop_assert!(h <= s.max_lag() as f64 * u * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn penalty_is_positively_homogeneous(s in stack_strategy(), c in 0.0f64..10.0) {
        for kind in PenaltyKind::ALL {
            let a = penalty(&s.scale(c), kind);
            let b = c * penalty(&s, kind);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn prox_never_raises_penalty(s in stack_strategy(), t in 0.0f64..1.5) {
        for kind in PenaltyKind::ALL {
            prop_assert!(penalty(&prox(&s, kind, t), kind) <= penalty(&s, kind) * (1.0 + 1e-12) + 1e-15);
        }
    }
}
