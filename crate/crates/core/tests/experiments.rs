//! Ensembles, basin maps and bounded non-convergence.

mod common;

use lqgame::analysis::{classify, Classification, ClassifyOptions, Verdict};
use lqgame::equilibria::scalar_two_agent_equilibria;
use lqgame::experiments::{run_basin_grid, run_ensemble, trial_instance, Cell};
use lqgame::riccati::{run_recursion, NoStop};
use lqgame::GameSpec;

use common::three_equilibrium_game;

#[test]
fn ensemble_counts_partition_the_trials_and_repeat_exactly() {
    let cells = [Cell::new(1, 1, 2), Cell::new(2, 2, 3)];
    let opts = ClassifyOptions::default();
    let a = run_ensemble(&cells, 60, 11, &opts);
    let b = run_ensemble(&cells, 60, 11, &opts);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.counts.total(), 60);
        assert_eq!(x.counts, y.counts);
        let verdicts = |c: &lqgame::experiments::EnsembleCell| {
            c.trials.iter().map(|t| t.classification.as_ref().map(Classification::verdict)).collect::<Vec<_>>()
        };
        assert_eq!(verdicts(x), verdicts(y));
        let pct: f64 = [
            x.counts.converged,
            x.counts.cycle,
            x.counts.non_convergent,
            x.counts.diverged,
            x.counts.singular,
            x.counts.generation_failed,
        ]
        .iter()
        .map(|&c| x.counts.percent(c))
        .sum();
        assert!((pct - 100.0).abs() < 1e-9);
    }
    let other = run_ensemble(&cells[1..], 60, 12, &opts);
    assert_ne!(
        a.cells[1].trials.iter().map(|t| t.seed).collect::<Vec<_>>(),
        other.cells[0].trials.iter().map(|t| t.seed).collect::<Vec<_>>()
    );
}

#[test]
fn starting_at_an_equilibrium_converges_immediately_to_it() {
    let game = three_equilibrium_game();
    let set = scalar_two_agent_equilibria(&game).unwrap();
    for (k, pt) in set.points.iter().enumerate() {
        let Classification::Converged { fixed_point, steps_to_converge } =
            classify(&game, pt.p.clone(), &ClassifyOptions::default())
        else {
            panic!("equilibrium {k} did not classify as converged");
        };
        assert_eq!(set.nearest(&fixed_point, 1e-6), Some(k));
        assert!(steps_to_converge <= ClassifyOptions::default().convergence_window);
    }
}

#[test]
fn stable_game_basin_has_one_label() {
    let game = GameSpec::scalar(0.5, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]);
    let map = run_basin_grid(&game, 20, (0.3, 30.0), &ClassifyOptions::default()).unwrap();
    assert_eq!(map.cells.len(), 400);
    assert_eq!(map.verdict_count(Verdict::Converged), 400);
    assert_eq!(map.label_counts(), vec![400]);
}

#[test]
fn three_equilibrium_basin_is_split_between_the_stable_nodes() {
    let map = run_basin_grid(&three_equilibrium_game(), 30, (0.3, 30.0), &ClassifyOptions::default()).unwrap();
    let counts = map.label_counts();
    assert_eq!(counts.len(), 3);
    assert_eq!(counts.iter().sum::<usize>(), 900);
    // The middle point is a saddle of the recursion; generic grid points miss it.
    assert_eq!(counts[1], 0);
    assert!(counts[0] > 0 && counts[2] > 0);
    // Below the diagonal agent 1's terminal weight is smaller.
    let corner = |i: usize, j: usize| map.cells[i * 30 + j].label;
    assert_ne!(corner(0, 29), corner(29, 0));
}

#[test]
fn bounded_non_convergence_keeps_moving_without_blowing_up() {
    let cell = Cell::new(3, 3, 2);
    let opts = ClassifyOptions::default();
    let trial = (0..2000)
        .find(|&t| {
            trial_instance(cell, 2024, t)
                .map(|(g, p)| classify(&g, p, &opts).verdict() == Verdict::BoundedNonConvergent)
                .unwrap_or(false)
        })
        .expect("a bounded non-convergent trial");
    let (game, terminal) = trial_instance(cell, 2024, trial).unwrap();
    let trace = run_recursion(&game, terminal, 4000, &mut NoStop);
    let norms: Vec<f64> =
        trace.gains().skip(2000).map(|(_, k)| k.iter().map(|g| g.norm()).fold(0.0, f64::max)).collect();
    let hi = norms.iter().cloned().fold(0.0, f64::max);
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi.is_finite() && hi < 1e6);
    // Still moving: the tail is not a fixed point.
    assert!(trace.last_step_change().unwrap() > 1e-9);
    assert!(hi - lo > 1e-6 * hi.max(1.0));
}
