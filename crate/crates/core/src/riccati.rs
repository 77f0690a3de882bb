//! The coupled Riccati machinery: stacked stage-gain solve, the backward map
//! `f`, full recursions and single-agent best responses.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{pbh_stabilizable, GainTuple, GameSpec, PTuple};

/// A stage solve fails when the reciprocal condition estimate drops below this.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Any `||P^i||_F` above this stops a recursion as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Traces keep every state up to this many steps, then switch to a ring buffer.
pub const FULL_STORAGE_STEPS: usize = 10_000;

/// The stacked linear system `M K = rhs` whose solution holds all agents' gains.
#[derive(Debug, Clone)]
pub struct StageSystem {
    /// Block `(i, j)` is `B^i' P^i B^j`, plus `R^i` on the diagonal.
    pub matrix: Matrix,
    /// Block `i` is `B^i' P^i A`.
    pub rhs: Matrix,
    pub rcond_estimate: f64,
    input_dims: Vec<usize>,
    inverse: Option<Matrix>,
}

impl StageSystem {
    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }
}

pub fn assemble_stage_system(p_next: &PTuple, game: &GameSpec) -> StageSystem {
    let n = game.state_dim();
    let dims = game.input_dims();
    let total: usize = dims.iter().sum();
    let mut matrix = Matrix::zeros(total, total);
    let mut rhs = Matrix::zeros(total, n);

    let mut row = 0;
    for (i, bi) in game.b.iter().enumerate() {
        let bt_p = bi.transpose() * &p_next[i];
        let mut col = 0;
        for bj in &game.b {
            let block = &bt_p * bj;
            matrix.view_mut((row, col), (dims[i], bj.ncols())).copy_from(&block);
            col += bj.ncols();
        }
        let mut diag = matrix.view_mut((row, row), (dims[i], dims[i]));
        diag += &game.r[i];
        rhs.view_mut((row, 0), (dims[i], n)).copy_from(&(&bt_p * &game.a));
        row += dims[i];
    }

    let inverse = matrix.clone().try_inverse();
    let rcond_estimate = inverse.as_ref().map_or(0.0, |inv| linalg::rcond_from_inverse(&matrix, inv));
    StageSystem { matrix, rhs, rcond_estimate, input_dims: dims, inverse }
}

pub fn solve_stage_gains(sys: &StageSystem) -> Result<GainTuple> {
    let inverse = match &sys.inverse {
        Some(inv) if sys.rcond_estimate >= SINGULARITY_THRESHOLD => inv,
        _ => return Err(Error::SingularStageSystem { rcond: sys.rcond_estimate }),
    };
    let stacked = inverse * &sys.rhs;
    let n = sys.rhs.ncols();
    let mut row = 0;
    let gains = sys
        .input_dims
        .iter()
        .map(|&m| {
            let k = stacked.view((row, 0), (m, n)).into_owned();
            row += m;
            k
        })
        .collect();
    Ok(GainTuple::new(gains))
}

/// The gain map `g`: stage gains induced by a value tuple.
pub fn stage_gains(p: &PTuple, game: &GameSpec) -> Result<GainTuple> {
    solve_stage_gains(&assemble_stage_system(p, game))
}

/// `A - sum_j B^j K^j`.
pub fn closed_loop(game: &GameSpec, gains: &GainTuple) -> Matrix {
    let mut acl = game.a.clone();
    for (b, k) in game.b.iter().zip(gains.iter()) {
        acl -= b * k;
    }
    acl
}

/// `A - sum_{j != agent} B^j K^j`, with `agent` zero-based.
pub fn partial_closed_loop(game: &GameSpec, gains: &GainTuple, agent: usize) -> Matrix {
    let mut acl = game.a.clone();
    for (j, (b, k)) in game.b.iter().zip(gains.iter()).enumerate() {
        if j != agent {
            acl -= b * k;
        }
    }
    acl
}

/// One backward step `P = f(P_next)`, using `P^i = Q^i + K'RK + Acl' P_next Acl`.
pub fn riccati_step(p_next: &PTuple, game: &GameSpec) -> Result<(PTuple, GainTuple)> {
    let gains = stage_gains(p_next, game)?;
    let acl = closed_loop(game, &gains);
    let acl_t = acl.transpose();
    let entries = (0..game.num_agents())
        .map(|i| {
            let k = &gains[i];
            let mut p = &game.q[i] + k.transpose() * &game.r[i] * k + &acl_t * &p_next[i] * &acl;
            linalg::symmetrize_in_place(&mut p);
            p
        })
        .collect();
    Ok((PTuple::new(entries), gains))
}

/// The same step through the partial closed loops:
/// `P^i = Q^i + Ai' P Ai - Ai' P B (R + B'PB)^-1 B' P Ai` with `Ai = A^cl,-i`.
pub fn riccati_step_explicit(p_next: &PTuple, game: &GameSpec) -> Result<(PTuple, GainTuple)> {
    let gains = stage_gains(p_next, game)?;
    let entries = (0..game.num_agents())
        .map(|i| {
            let ai = partial_closed_loop(game, &gains, i);
            let (p, _) = single_agent_update(&ai, &game.b[i], &game.q[i], &game.r[i], &p_next[i])?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((PTuple::new(entries), gains))
}

/// Single-agent Riccati update against a fixed state matrix. Returns the new
/// (symmetrized) value matrix and the induced gain.
pub(crate) fn single_agent_update(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    x: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let bt_x = b.transpose() * x;
    let s = r + &bt_x * b;
    let s_inv = s.clone().try_inverse().ok_or(Error::SingularStageSystem { rcond: 0.0 })?;
    let k = s_inv * (&bt_x * a);
    let at_x = a.transpose() * x;
    let mut p = q + &at_x * a - (&at_x * b) * &k;
    linalg::symmetrize_in_place(&mut p);
    Ok((p, k))
}

/// `max_i ||R^i K^i + sum_j B^i' P^i B^j K^j - B^i' P^i A||_F / (1 + ||rhs||_F)`.
pub fn gain_equation_residual(p_next: &PTuple, game: &GameSpec, gains: &GainTuple) -> f64 {
    let sys = assemble_stage_system(p_next, game);
    let n = game.state_dim();
    let mut stacked = Matrix::zeros(sys.matrix.nrows(), n);
    let mut row = 0;
    for k in gains.iter() {
        stacked.view_mut((row, 0), (k.nrows(), n)).copy_from(k);
        row += k.nrows();
    }
    (&sys.matrix * stacked - &sys.rhs).norm() / (1.0 + sys.rhs.norm())
}

/// Options for single-agent fixed-point Riccati iterations.
#[derive(Debug, Clone, Copy)]
pub struct DareOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for DareOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iterations: 100_000 }
    }
}

/// Stabilizing solution of agent `agent`'s algebraic Riccati equation with the
/// other agents' gains frozen. The entry of `others` at `agent` is ignored.
pub fn best_response_dare(game: &GameSpec, agent: usize, others: &GainTuple) -> Result<(Matrix, Matrix)> {
    best_response_dare_with(game, agent, others, DareOptions::default())
}

pub fn best_response_dare_with(
    game: &GameSpec,
    agent: usize,
    others: &GainTuple,
    opts: DareOptions,
) -> Result<(Matrix, Matrix)> {
    let a = partial_closed_loop(game, others, agent);
    let b = &game.b[agent];
    if !pbh_stabilizable(&a, b) {
        return Err(Error::NotStabilizable { agent: agent + 1 });
    }
    solve_dare(&a, b, &game.q[agent], &game.r[agent], opts)
}

/// Value iteration for `X = Q + A'XA - A'XB(R + B'XB)^-1 B'XA` from `X = Q`.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, opts: DareOptions) -> Result<(Matrix, Matrix)> {
    let mut x = q.clone();
    for _ in 0..opts.max_iterations {
        let (next, _) = single_agent_update(a, b, q, r, &x)?;
        let change = (&next - &x).norm() / (1.0 + next.norm());
        x = next;
        if change < opts.tol {
            let (_, k) = single_agent_update(a, b, q, r, &x)?;
            return Ok((x, k));
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations })
}

/// Why a recursion stopped before its horizon at the request of a [`StopRule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCause {
    Converged,
    CycleCandidate { period: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// The requested number of steps was taken.
    Completed,
    Stopped(StopCause),
    Diverged {
        step: usize,
        norm: f64,
    },
    Singular {
        step: usize,
        rcond: f64,
    },
}

impl Termination {
    pub fn reason(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Stopped(StopCause::Converged) => "converged",
            Termination::Stopped(StopCause::CycleCandidate { .. }) => "cycle_candidate",
            Termination::Diverged { .. } => "diverged",
            Termination::Singular { .. } => "singular_stage",
        }
    }
}

/// Observes a recursion after every step and may ask it to stop.
pub trait StopRule {
    fn observe(&mut self, trace: &RecursionTrace) -> Option<StopCause>;
}

/// Runs the full horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoStop;

impl StopRule for NoStop {
    fn observe(&mut self, _: &RecursionTrace) -> Option<StopCause> {
        None
    }
}

/// Stops once `window` consecutive relative step changes are below `tol`.
#[derive(Debug, Clone)]
pub struct ConvergenceStop {
    pub tol: f64,
    pub window: usize,
    streak: usize,
}

impl ConvergenceStop {
    pub fn new(tol: f64, window: usize) -> Self {
        Self { tol, window, streak: 0 }
    }
}

impl StopRule for ConvergenceStop {
    fn observe(&mut self, trace: &RecursionTrace) -> Option<StopCause> {
        match trace.last_step_change() {
            Some(change) if change < self.tol => self.streak += 1,
            _ => self.streak = 0,
        }
        (self.streak >= self.window.max(1)).then_some(StopCause::Converged)
    }
}

/// Backward orbit `p_states[s] = f^s(Q_T)` with the gains of every step.
///
/// `gain(s)` is produced by the step from `state(s)` to `state(s + 1)`. Past
/// [`FULL_STORAGE_STEPS`] only the most recent `ring_capacity` states are kept.
#[derive(Debug, Clone)]
pub struct RecursionTrace {
    states: VecDeque<PTuple>,
    gains: VecDeque<GainTuple>,
    first_index: usize,
    ring_capacity: usize,
    termination: Termination,
}

impl RecursionTrace {
    pub fn new(terminal: PTuple) -> Self {
        Self::with_ring_capacity(terminal, 512)
    }

    pub fn with_ring_capacity(terminal: PTuple, ring_capacity: usize) -> Self {
        let mut states = VecDeque::new();
        states.push_back(terminal);
        Self {
            states,
            gains: VecDeque::new(),
            first_index: 0,
            ring_capacity: ring_capacity.max(2),
            termination: Termination::Completed,
        }
    }

    /// Builds a trace from explicit states (gains left empty); used for
    /// analysing externally produced sequences.
    pub fn from_states(states: Vec<PTuple>) -> Self {
        Self {
            states: states.into(),
            gains: VecDeque::new(),
            first_index: 0,
            ring_capacity: usize::MAX,
            termination: Termination::Completed,
        }
    }

    fn push(&mut self, gains: GainTuple, next: PTuple) {
        self.gains.push_back(gains);
        self.states.push_back(next);
        let ring_mode = self.first_index > 0 || self.states.len() > FULL_STORAGE_STEPS + 1;
        if ring_mode && self.states.len() > self.ring_capacity {
            while self.states.len() > self.ring_capacity {
                self.states.pop_front();
                self.first_index += 1;
            }
            while self.gains.len() > self.states.len() - 1 {
                self.gains.pop_front();
            }
        }
    }

    /// Index of the last state; equal to the number of steps taken.
    pub fn last_index(&self) -> usize {
        self.first_index + self.states.len() - 1
    }

    /// Index of the oldest state still stored.
    pub fn first_stored_index(&self) -> usize {
        self.first_index
    }

    pub fn stored_len(&self) -> usize {
        self.states.len()
    }

    pub fn is_complete(&self) -> bool {
        self.first_index == 0
    }

    pub fn state(&self, s: usize) -> Option<&PTuple> {
        s.checked_sub(self.first_index).and_then(|k| self.states.get(k))
    }

    pub fn gain(&self, s: usize) -> Option<&GainTuple> {
        let first_gain = self.last_index() - self.gains.len();
        s.checked_sub(first_gain).and_then(|k| self.gains.get(k))
    }

    pub fn last_state(&self) -> &PTuple {
        self.states.back().expect("trace holds at least one state")
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, &PTuple)> {
        self.states.iter().enumerate().map(move |(k, p)| (self.first_index + k, p))
    }

    pub fn gains(&self) -> impl Iterator<Item = (usize, &GainTuple)> {
        let first_gain = self.last_index() - self.gains.len();
        self.gains.iter().enumerate().map(move |(k, g)| (first_gain + k, g))
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Relative change `||p[s+1] - p[s]||_F / (1 + ||p[s]||_F)` for step `s`.
    pub fn step_change(&self, s: usize) -> Option<f64> {
        Some(self.state(s)?.relative_distance(self.state(s + 1)?))
    }

    pub fn last_step_change(&self) -> Option<f64> {
        self.last_index().checked_sub(1).and_then(|s| self.step_change(s))
    }

    /// Time-ordered gain schedule `K_0 .. K_{T-1}` for a horizon `T` not
    /// exceeding the number of stored steps: `K_t = gain(T - 1 - t)`.
    pub fn schedule(&self, horizon: usize) -> Option<Vec<GainTuple>> {
        (0..horizon).map(|t| self.gain(horizon - 1 - t).cloned()).collect()
    }

    /// Largest per-agent Frobenius norm among stored states.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(PTuple::max_norm).fold(0.0, f64::max)
    }
}

/// Iterates [`riccati_step`] from `terminal` for up to `max_steps` steps.
pub fn run_recursion(game: &GameSpec, terminal: PTuple, max_steps: usize, stop: &mut dyn StopRule) -> RecursionTrace {
    let mut trace = RecursionTrace::new(terminal);
    extend_recursion(&mut trace, game, max_steps, stop);
    trace
}

/// Continues a trace for up to `more_steps` further steps.
pub fn extend_recursion(trace: &mut RecursionTrace, game: &GameSpec, more_steps: usize, stop: &mut dyn StopRule) {
    trace.termination = Termination::Completed;
    for _ in 0..more_steps {
        let step = trace.last_index();
        let (next, gains) = match riccati_step(trace.last_state(), game) {
            Ok(v) => v,
            Err(Error::SingularStageSystem { rcond }) => {
                trace.termination = Termination::Singular { step, rcond };
                return;
            }
            Err(e) => unreachable!("riccati_step only fails on singular stages: {e}"),
        };
        let norm = next.max_norm();
        let diverged = !next.is_finite() || norm > DIVERGENCE_THRESHOLD;
        trace.push(gains, next);
        if diverged {
            trace.termination = Termination::Diverged { step: step + 1, norm };
            return;
        }
        if let Some(cause) = stop.observe(trace) {
            trace.termination = Termination::Stopped(cause);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar;
    use approx::assert_relative_eq;

    fn three_equilibrium_game() -> GameSpec {
        GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0])
    }

    fn lqr() -> GameSpec {
        GameSpec::scalar(1.0, &[1.0], &[1.0], &[1.0])
    }

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn assemble_scalar_game_at_unit_values() {
        let sys = assemble_stage_system(&PTuple::scalars(&[1.0, 1.0]), &three_equilibrium_game());
        assert_eq!(sys.matrix, Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        assert_eq!(sys.rhs, Matrix::from_row_slice(2, 1, &[5.0, 5.0]));
        assert!(sys.rcond_estimate > 0.1);
    }

    #[test]
    fn assemble_zero_dynamics_has_zero_rhs() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        let sys = assemble_stage_system(&PTuple::scalars(&[3.0, 0.5]), &g);
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_single_agent() {
        let mut g = lqr();
        g.a = scalar(0.7);
        let sys = assemble_stage_system(&PTuple::scalars(&[1.0]), &g);
        assert_eq!(sys.matrix, scalar(2.0));
        assert_eq!(sys.rhs, scalar(0.7));
    }

    #[test]
    fn solve_scalar_game_gains() {
        let sys = assemble_stage_system(&PTuple::scalars(&[1.0, 1.0]), &three_equilibrium_game());
        let k = solve_stage_gains(&sys).unwrap();
        assert_relative_eq!(k[0][(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(k[1][(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_zero_rhs() {
        let mut g = lqr();
        g.a = scalar(0.0);
        let k = stage_gains(&PTuple::scalars(&[1.0]), &g).unwrap();
        assert_eq!(k[0][(0, 0)], 0.0);
    }

    #[test]
    fn solve_rank_deficient_is_singular() {
        let matrix = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let inverse = matrix.clone().try_inverse();
        let rcond = inverse.as_ref().map_or(0.0, |inv| linalg::rcond_from_inverse(&matrix, inv));
        let sys = StageSystem {
            matrix,
            rhs: Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
            rcond_estimate: rcond,
            input_dims: vec![1, 1],
            inverse,
        };
        assert!(matches!(solve_stage_gains(&sys), Err(Error::SingularStageSystem { .. })));
    }

    #[test]
    fn step_scalar_lqr() {
        let (p, k) = riccati_step(&PTuple::scalars(&[1.0]), &lqr()).unwrap();
        assert_relative_eq!(k[0][(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[0][(0, 0)], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn step_with_zero_dynamics_returns_q() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        let (p, k) = riccati_step(&PTuple::scalars(&[7.0, 0.2]), &g).unwrap();
        assert_eq!(p, g.q_tuple());
        assert!(k.iter().all(|m| m[(0, 0)] == 0.0));
    }

    #[test]
    fn step_scalar_game_at_unit_values() {
        let (p, k) = riccati_step(&PTuple::scalars(&[1.0, 1.0]), &three_equilibrium_game()).unwrap();
        assert_relative_eq!(k[0][(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(k[1][(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p[0][(0, 0)], 9.0, epsilon = 1e-13);
        assert_relative_eq!(p[1][(0, 0)], 7.0, epsilon = 1e-13);
        assert_relative_eq!(closed_loop(&three_equilibrium_game(), &k)[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn explicit_and_alternate_forms_agree_on_scalar_game() {
        let p = PTuple::scalars(&[3.0, 0.4]);
        let (a, _) = riccati_step(&p, &three_equilibrium_game()).unwrap();
        let (b, _) = riccati_step_explicit(&p, &three_equilibrium_game()).unwrap();
        assert!(a.max_agent_relative_distance(&b) < 1e-12);
    }

    #[test]
    fn closed_loop_examples() {
        let g = three_equilibrium_game();
        let k = GainTuple::scalars(&[2.0, 1.0]);
        assert_eq!(closed_loop(&g, &k), scalar(2.0));
        assert_eq!(closed_loop(&g, &GainTuple::zeros(&g)), g.a);
        let golden_gain = GainTuple::scalars(&[GOLDEN - 1.0]);
        assert_relative_eq!(closed_loop(&lqr(), &golden_gain)[(0, 0)], 2.0 - GOLDEN, epsilon = 1e-15);
    }

    #[test]
    fn partial_closed_loop_examples() {
        let g = three_equilibrium_game();
        assert_eq!(partial_closed_loop(&g, &GainTuple::scalars(&[2.0, 1.0]), 0), scalar(4.0));
        assert_eq!(partial_closed_loop(&lqr(), &GainTuple::scalars(&[0.3]), 0), lqr().a);
        assert_eq!(partial_closed_loop(&g, &GainTuple::zeros(&g), 1), g.a);
    }

    #[test]
    fn recursion_converges_to_golden_ratio() {
        let mut stop = ConvergenceStop::new(1e-14, 10);
        let trace = run_recursion(&lqr(), PTuple::scalars(&[1.0]), 1000, &mut stop);
        assert_eq!(trace.termination(), Termination::Stopped(StopCause::Converged));
        assert_relative_eq!(trace.last_state()[0][(0, 0)], GOLDEN, epsilon = 1e-12);
        let k = trace.gain(trace.last_index() - 1).unwrap();
        assert_relative_eq!(k[0][(0, 0)], GOLDEN - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn recursion_with_zero_dynamics_is_constant_after_one_step() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        let trace = run_recursion(&g, PTuple::scalars(&[4.0, 9.0]), 5, &mut NoStop);
        assert_eq!(trace.last_index(), 5);
        for s in 1..=5 {
            assert_eq!(trace.state(s).unwrap(), &g.q_tuple());
        }
    }

    #[test]
    fn scalar_game_recursion_converges_from_unit_terminal() {
        let mut stop = ConvergenceStop::new(1e-9, 10);
        let trace = run_recursion(&three_equilibrium_game(), PTuple::scalars(&[1.0, 1.0]), 1000, &mut stop);
        assert_eq!(trace.termination(), Termination::Stopped(StopCause::Converged));
    }

    #[test]
    fn divergence_and_singularity_are_recorded() {
        // negative R makes the stage system singular for a suitable P
        let g = GameSpec::scalar(1.0, &[1.0], &[1.0], &[-1.0]);
        let trace = run_recursion(&g, PTuple::scalars(&[1.0]), 10, &mut NoStop);
        assert!(matches!(trace.termination(), Termination::Singular { step: 0, .. }));

        let g = GameSpec::scalar(10.0, &[1.0], &[1.0], &[1e20]);
        let trace = run_recursion(&g, PTuple::scalars(&[1.0]), 100, &mut NoStop);
        assert!(matches!(trace.termination(), Termination::Diverged { .. }));
    }

    #[test]
    fn ring_buffer_keeps_recent_window() {
        let trace = run_recursion(&lqr(), PTuple::scalars(&[1.0]), FULL_STORAGE_STEPS + 50, &mut NoStop);
        assert_eq!(trace.last_index(), FULL_STORAGE_STEPS + 50);
        assert!(!trace.is_complete());
        assert!(trace.stored_len() <= 512);
        assert!(trace.state(0).is_none());
        assert!(trace.state(trace.last_index()).is_some());
        let last = trace.last_index();
        assert!(trace.gain(last - 1).is_some());
        assert!(trace.gain(last).is_none());
    }

    #[test]
    fn best_response_scalar_lqr() {
        let (p, k) = best_response_dare(&lqr(), 0, &GainTuple::scalars(&[0.0])).unwrap();
        assert_relative_eq!(p[(0, 0)], GOLDEN, epsilon = 1e-10);
        assert_relative_eq!(k[(0, 0)], GOLDEN / (1.0 + GOLDEN), epsilon = 1e-10);
    }

    #[test]
    fn best_response_zero_dynamics() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        let (p, k) = best_response_dare(&g, 1, &GainTuple::scalars(&[0.0, 0.0])).unwrap();
        assert_eq!(p, g.q[1]);
        assert_eq!(k[(0, 0)], 0.0);
    }

    #[test]
    fn best_response_requires_stabilizability() {
        let g = GameSpec::scalar(2.0, &[1.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]);
        let err = best_response_dare(&g, 1, &GainTuple::scalars(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotStabilizable { agent: 2 }));
    }

    #[test]
    fn trace_schedule_is_time_ordered() {
        let trace = run_recursion(&three_equilibrium_game(), PTuple::scalars(&[1.0, 1.0]), 3, &mut NoStop);
        let schedule = trace.schedule(3).unwrap();
        assert_eq!(&schedule[2], trace.gain(0).unwrap());
        assert_eq!(&schedule[0], trace.gain(2).unwrap());
        assert!(trace.schedule(4).is_none());
    }
}
