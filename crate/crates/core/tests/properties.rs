//! Randomized properties of the backward map, the gain equations, the
//! stabilizability test and the game file format.

mod common;

use lqgame::io::{game_to_string, parse_game};
use lqgame::linalg::is_positive_definite;
use lqgame::model::pbh_stabilizable;
use lqgame::riccati::{gain_equation_residual, riccati_step, riccati_step_explicit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_case, random_matrix, rel_gap};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn explicit_and_alternate_forms_agree(seed in any::<u64>()) {
        let (game, p) = random_case(seed);
        let (Ok((a, ka)), Ok((b, kb))) = (riccati_step(&p, &game), riccati_step_explicit(&p, &game)) else {
            return Err(TestCaseError::reject("singular stage system"));
        };
        prop_assert!(rel_gap(&a, &b) < 1e-10, "gap {}", rel_gap(&a, &b));
        for (x, y) in ka.iter().zip(kb.iter()) {
            prop_assert_eq!(x, y);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn backward_map_keeps_tuples_symmetric_positive_definite(seed in any::<u64>()) {
        let (game, p) = random_case(seed);
        let Ok((next, _)) = riccati_step(&p, &game) else {
            return Err(TestCaseError::reject("singular stage system"));
        };
        for (i, m) in next.iter().enumerate() {
            prop_assert_eq!(m, &m.transpose());
            prop_assert!(is_positive_definite(m));
            // P = Q + (PSD terms), so P - Q is positive semidefinite.
            let diff = m - &game.q[i];
            let min = diff.symmetric_eigenvalues().min();
            prop_assert!(min >= -1e-9 * (1.0 + m.norm()), "min eigenvalue of P - Q: {min}");
        }
    }

    #[test]
    fn stage_gains_solve_the_coupled_gain_equations(seed in any::<u64>()) {
        let (game, p) = random_case(seed);
        let Ok((_, k)) = riccati_step(&p, &game) else {
            return Err(TestCaseError::reject("singular stage system"));
        };
        let scale = 1.0 + p.norm() * (1.0 + game.a.norm()) * (1.0 + k.iter().map(|m| m.norm()).sum::<f64>());
        prop_assert!(gain_equation_residual(&p, &game, &k) < 1e-10 * scale);
    }

    #[test]
    fn stabilizability_is_similarity_invariant(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, n, &mut rng) * 2.0;
        // Sparse input maps make unstabilizable pairs common enough to matter.
        let mut b = random_matrix(n, m, &mut rng);
        if seed % 3 == 0 {
            b.row_mut(0).fill(0.0);
        }
        let t = lqgame::Matrix::identity(n, n) + random_matrix(n, n, &mut rng) * 0.3;
        let Some(t_inv) = t.clone().try_inverse() else {
            return Err(TestCaseError::reject("singular similarity"));
        };
        let (a2, b2) = (&t * &a * &t_inv, &t * &b);
        prop_assert_eq!(pbh_stabilizable(&a, &b), pbh_stabilizable(&a2, &b2));
    }

    #[test]
    fn game_files_round_trip_bit_for_bit(seed in any::<u64>()) {
        let (game, _) = random_case(seed);
        let text = game_to_string(&game).unwrap();
        prop_assert_eq!(parse_game(&text).unwrap(), game);
    }
}
