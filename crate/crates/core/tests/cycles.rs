//! Periodic equilibria found in random games: certification, product
//! stability of forward play, determinism of the census.

use lqgame::analysis::{classify, verify_cycle, CertifyTolerances, Classification, ClassifyOptions, CycleCertificate};
use lqgame::experiments::{cycle_census, trial_instance, Cell, CensusOptions};
use lqgame::export::FigureSeries;
use lqgame::linalg::spectral_radius;
use lqgame::riccati::riccati_step;
use lqgame::simulation::{simulate, Vector};
use lqgame::GameSpec;

const SEED: u64 = 2024;

/// The first certified cycle of the given period among seeded trials.
fn find_cycle(cell: Cell, period: usize) -> (GameSpec, CycleCertificate) {
    for trial in 0..5000 {
        let (game, terminal) = trial_instance(cell, SEED, trial).unwrap();
        if let Classification::Cycle(cert) = classify(&game, terminal, &ClassifyOptions::default()) {
            if cert.period == period {
                return (game, *cert);
            }
        }
    }
    panic!("no period-{period} cycle in cell {cell}");
}

#[test]
fn two_cycle_certificate_from_a_random_game() {
    let (game, cert) = find_cycle(Cell::new(2, 2, 2), 2);
    assert_eq!(cert.phases.len(), 2);
    assert!(cert.cycle_residual < 1e-8);
    assert!(cert.product_spectral_radius < 1.0);
    assert!(cert.loop_identity_residual < 1e-6 * (1.0 + cert.phases[0][0].norm()));
    assert!(cert.periodic_br_residual < 1e-6);

    // The phases really are an orbit: P_1 = f(P_2), P_2 = f(P_1).
    let (f2, k2) = riccati_step(&cert.phases[1], &game).unwrap();
    let (f1, _) = riccati_step(&cert.phases[0], &game).unwrap();
    assert!(cert.phases[0].max_agent_relative_distance(&f2) < 1e-8);
    assert!(cert.phases[1].max_agent_relative_distance(&f1) < 1e-8);
    assert!(cert.phases[0].max_agent_relative_distance(&cert.phases[1]) > 1e-6);
    for (a, b) in cert.gains[0].iter().zip(k2.iter()) {
        assert!((a - b).norm() < 1e-6 * (1.0 + a.norm()));
    }

    // Re-certifying the stored phases reproduces the certificate.
    let again = verify_cycle(&cert.phases, &game, &CertifyTolerances::default()).unwrap();
    assert_eq!(again.period, 2);
    assert!((again.product_spectral_radius - cert.product_spectral_radius).abs() < 1e-9);
}

#[test]
fn periodic_play_contracts_at_the_product_rate() {
    let (game, cert) = find_cycle(Cell::new(2, 2, 2), 2);
    let periods = 60;
    let schedule: Vec<_> = (0..cert.period * periods).map(|t| cert.gains[t % cert.period].clone()).collect();
    let x0 = Vector::from_element(game.state_dim(), 1.0);
    let traj = simulate(&game, &schedule, &x0, schedule.len(), None).unwrap();
    let theta: lqgame::Matrix = cert.closed_loops(&game).iter().fold(lqgame::Matrix::identity(2, 2), |acc, a| a * acc);
    assert!((spectral_radius(&theta) - cert.product_spectral_radius).abs() < 1e-9);
    for k in 1..=periods {
        let x = &traj.states[k * cert.period];
        let expect = theta.pow(k as u32) * &x0;
        assert!((x - &expect).norm() <= 1e-9 * (1.0 + expect.norm()));
    }
    let end = traj.states[periods * cert.period].norm() / x0.norm();
    assert!(end <= 1e3 * (cert.product_spectral_radius + 0.02).powi(periods as i32));
}

#[test]
fn frobenius_series_of_a_cycle_repeats_with_its_period() {
    let (game, cert) = find_cycle(Cell::new(2, 2, 2), 2);
    let series = FigureSeries::from_certificate(&cert, &game, 5);
    for t in 0..series.frobenius.len() - cert.period {
        for i in 0..game.num_agents() {
            assert!((series.frobenius[t][i] - series.frobenius[t + cert.period][i]).abs() < 1e-9);
        }
        assert_eq!(series.spectral_radius[t], series.spectral_radius[t + cert.period]);
    }
    assert!(series.frobenius[0].iter().any(|&d| d > 1e-6));
}

#[test]
fn census_is_deterministic_and_every_entry_is_certified() {
    let cells = [Cell::new(2, 2, 2)];
    let opts = CensusOptions { batch: 16, ..CensusOptions::default() };
    let a = cycle_census(&cells, 4, 7, &opts).unwrap();
    let b = cycle_census(&cells, 4, 7, &CensusOptions { batch: 5, ..opts }).unwrap();
    let trials =
        |c: &lqgame::experiments::CycleCensus| c.cells[0].certificates.iter().map(|(t, _)| *t).collect::<Vec<_>>();
    assert_eq!(trials(&a), trials(&b));
    let cell = &a.cells[0];
    assert_eq!(cell.histogram.values().sum::<usize>(), cell.certificates.len());
    for (trial, cert) in &cell.certificates {
        let (game, _) = trial_instance(cell.cell, 7, *trial).unwrap();
        assert!(verify_cycle(&cert.phases, &game, &CertifyTolerances::default()).is_ok());
    }
}

#[test]
fn exhausted_census_reports_its_partial_histogram() {
    let err =
        cycle_census(&[Cell::new(1, 1, 2)], 1, 0, &CensusOptions { examination_cap: 30, ..CensusOptions::default() })
            .unwrap_err();
    match err {
        lqgame::Error::CensusIncomplete { census } => {
            assert_eq!(census.cells[0].games_examined, 30);
            assert!(!census.cells[0].complete);
        }
        e => panic!("unexpected {e}"),
    }
}
