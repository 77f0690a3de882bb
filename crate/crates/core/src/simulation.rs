//! Closed-loop rollouts, finite-horizon costs and unilateral deviation tests.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{GainTuple, GameSpec, PTuple};
use crate::riccati::RecursionTrace;

pub type Vector = DVector<f64>;

/// Deviation magnitudes `||dK_t||_F`, cycled over perturbation indices.
pub const DEVIATION_SCALES: [f64; 3] = [1e-3, 1e-1, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_0 .. x_T`.
    pub states: Vec<Vector>,
    /// `inputs[i][t] = u^i_t`.
    pub inputs: Vec<Vec<Vector>>,
    pub noise_seed: Option<u64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

/// Rolls out `x+ = A x + sum_i B^i u^i + w` with `u^i_t = -K^i_t x_t`.
///
/// A schedule of length one is reused at every step. Noise is drawn only
/// when `seed` is given and `W` is nonzero.
pub fn simulate(
    game: &GameSpec,
    schedule: &[GainTuple],
    x0: &Vector,
    horizon: usize,
    seed: Option<u64>,
) -> Result<Trajectory> {
    if schedule.is_empty() || (schedule.len() != 1 && schedule.len() < horizon) {
        return Err(Error::Precondition(format!(
            "schedule of length {} cannot drive horizon {horizon}",
            schedule.len()
        )));
    }
    if x0.len() != game.state_dim() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), game.state_dim())));
    }
    let noise = match seed {
        Some(s) if game.has_noise() => Some((linalg::symmetric_sqrt(&game.w), ChaCha8Rng::seed_from_u64(s))),
        _ => None,
    };
    let mut noise = noise;
    let agents = game.num_agents();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs = vec![Vec::with_capacity(horizon); agents];
    states.push(x0.clone());
    for t in 0..horizon {
        let gains = if schedule.len() == 1 { &schedule[0] } else { &schedule[t] };
        let x = &states[t];
        let mut next = &game.a * x;
        for i in 0..agents {
            let u = -(&gains[i] * x);
            next += &game.b[i] * &u;
            inputs[i].push(u);
        }
        if let Some((factor, rng)) = noise.as_mut() {
            let z = Vector::from_fn(game.state_dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            next += &*factor * z;
        }
        states.push(next);
    }
    Ok(Trajectory { states, inputs, noise_seed: seed })
}

/// `(1/T) (sum_{t<T} x'Q^i x + u^i' R^i u^i + x_T' Q_T^i x_T)`.
pub fn finite_horizon_cost(traj: &Trajectory, game: &GameSpec, agent: usize, terminal: &PTuple) -> f64 {
    let horizon = traj.horizon();
    let (q, r) = (&game.q[agent], &game.r[agent]);
    let mut total = 0.0;
    for t in 0..horizon {
        let x = &traj.states[t];
        let u = &traj.inputs[agent][t];
        total += x.dot(&(q * x)) + u.dot(&(r * u));
    }
    let xt = &traj.states[horizon];
    total += xt.dot(&(&terminal[agent] * xt));
    if horizon == 0 {
        total
    } else {
        total / horizon as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationViolation {
    pub perturbation: usize,
    pub scale: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub agent: usize,
    pub horizon: usize,
    pub equilibrium_cost: f64,
    pub perturbations: usize,
    /// Smallest and largest `J_dev - J_eq`.
    pub min_gap: f64,
    pub max_gap: f64,
    pub violations: Vec<DeviationViolation>,
}

/// Cost to `agent` when it adds `deltas[t]` to its scheduled gains.
pub fn deviation_cost(
    game: &GameSpec,
    schedule: &[GainTuple],
    agent: usize,
    deltas: &[Matrix],
    x0: &Vector,
    terminal: &PTuple,
) -> Result<f64> {
    let deviated: Vec<GainTuple> = schedule
        .iter()
        .zip(deltas)
        .map(|(k, d)| {
            let mut k = k.clone();
            k.entries_mut()[agent] += d;
            k
        })
        .collect();
    let traj = simulate(game, &deviated, x0, schedule.len(), None)?;
    Ok(finite_horizon_cost(&traj, game, agent, terminal))
}

/// Random time-varying linear deviations of one agent against the finite-
/// horizon equilibrium stored in `trace`; any cost decrease beyond
/// `1e-9 (1 + |J|)` is a violation.
pub fn deviation_test(
    game: &GameSpec,
    trace: &RecursionTrace,
    agent: usize,
    x0: &Vector,
    perturbations: usize,
    seed: u64,
) -> Result<DeviationReport> {
    if game.has_noise() {
        return Err(Error::Precondition("deviation tests need W = 0".into()));
    }
    if !trace.is_complete() || !matches!(trace.termination(), crate::riccati::Termination::Completed) {
        return Err(Error::Precondition("trace must cover its horizon without early stop".into()));
    }
    let horizon = trace.last_index();
    let schedule = trace.schedule(horizon).expect("complete trace");
    let terminal = trace.state(0).expect("complete trace").clone();
    let equilibrium = simulate(game, &schedule, x0, horizon, None)?;
    let equilibrium_cost = finite_horizon_cost(&equilibrium, game, agent, &terminal);
    let slack = 1e-9 * (1.0 + equilibrium_cost.abs());
    let (m, n) = (game.b[agent].ncols(), game.state_dim());

    let gaps: Vec<Result<(usize, f64, f64)>> = (0..perturbations)
        .into_par_iter()
        .map(|k| {
            let scale = DEVIATION_SCALES[k % DEVIATION_SCALES.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let deltas: Vec<Matrix> = (0..horizon)
                .map(|_| {
                    let d = Matrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = d.norm();
                    if norm > 0.0 {
                        d * (scale / norm)
                    } else {
                        d
                    }
                })
                .collect();
            let cost = deviation_cost(game, &schedule, agent, &deltas, x0, &terminal)?;
            Ok((k, scale, cost - equilibrium_cost))
        })
        .collect();

    let mut report = DeviationReport {
        agent,
        horizon,
        equilibrium_cost,
        perturbations,
        min_gap: f64::INFINITY,
        max_gap: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for g in gaps {
        let (k, scale, gap) = g?;
        report.min_gap = report.min_gap.min(gap);
        report.max_gap = report.max_gap.max(gap);
        if gap < -slack {
            report.violations.push(DeviationViolation { perturbation: k, scale, gap });
        }
    }
    Ok(report)
}

/// Random initial state with standard normal entries.
pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar;
    use crate::riccati::{run_recursion, NoStop};

    fn lqr() -> GameSpec {
        GameSpec::scalar(1.0, &[1.0], &[1.0], &[1.0])
    }

    #[test]
    fn zero_dynamics_rollout() {
        let mut g = lqr();
        g.a = scalar(0.0);
        let traj = simulate(&g, &[GainTuple::scalars(&[0.0])], &Vector::from_element(1, 1.0), 3, None).unwrap();
        let xs: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_stage_cost() {
        let mut g = lqr();
        g.a = scalar(0.0);
        let traj = simulate(&g, &[GainTuple::scalars(&[0.0])], &Vector::from_element(1, 1.0), 1, None).unwrap();
        assert_eq!(finite_horizon_cost(&traj, &g, 0, &PTuple::scalars(&[1.0])), 1.0);
    }

    #[test]
    fn zero_state_costs_nothing() {
        let g = GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0]);
        let traj = simulate(&g, &[GainTuple::scalars(&[2.0, 1.0])], &Vector::zeros(1), 10, None).unwrap();
        for i in 0..2 {
            assert_eq!(finite_horizon_cost(&traj, &g, i, &g.q_tuple()), 0.0);
        }
    }

    #[test]
    fn schedule_length_is_checked() {
        let g = lqr();
        let err = simulate(&g, &vec![GainTuple::scalars(&[0.1]); 2], &Vector::zeros(1), 5, None);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn noise_is_reproducible_and_seed_dependent() {
        let mut g = lqr();
        g.w = scalar(0.5);
        let k = [GainTuple::scalars(&[0.6])];
        let x0 = Vector::from_element(1, 1.0);
        let a = simulate(&g, &k, &x0, 50, Some(3)).unwrap();
        let b = simulate(&g, &k, &x0, 50, Some(3)).unwrap();
        let c = simulate(&g, &k, &x0, 50, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
        let quiet = simulate(&g, &k, &x0, 50, None).unwrap();
        assert!((quiet.states[50][0]).abs() < 1e-10);
    }

    #[test]
    fn zero_deviation_leaves_cost_unchanged() {
        let g = lqr();
        let trace = run_recursion(&g, PTuple::scalars(&[1.0]), 20, &mut NoStop);
        let schedule = trace.schedule(20).unwrap();
        let x0 = Vector::from_element(1, 2.0);
        let terminal = trace.state(0).unwrap();
        let eq = finite_horizon_cost(&simulate(&g, &schedule, &x0, 20, None).unwrap(), &g, 0, terminal);
        let zeros = vec![Matrix::zeros(1, 1); 20];
        assert_eq!(deviation_cost(&g, &schedule, 0, &zeros, &x0, terminal).unwrap(), eq);
    }

    #[test]
    fn scalar_lqr_deviations_strictly_increase_cost() {
        let g = lqr();
        let trace = run_recursion(&g, PTuple::scalars(&[1.0]), 30, &mut NoStop);
        let report = deviation_test(&g, &trace, 0, &Vector::from_element(1, 1.0), 30, 5).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.min_gap > 0.0);
    }
}
