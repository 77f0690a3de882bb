//! Fixed points, cycles and the asymptotic regime of the backward recursion.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{GainTuple, GameSpec, PTuple};
use crate::riccati::{
    self, extend_recursion, riccati_step, single_agent_update, stage_gains, RecursionTrace, StopCause, StopRule,
    Termination,
};

pub use crate::linalg::spectral_radius;

/// `max_i ||P^i - f(P)^i||_F / (1 + ||P^i||_F)`.
pub fn fixed_point_residual(p: &PTuple, game: &GameSpec) -> Result<f64> {
    let (image, _) = riccati_step(p, game)?;
    Ok(p.max_agent_relative_distance(&image))
}

/// Earliest `s*` whose next `window` relative step changes are all below
/// `tol`. Returns the last state of that window and `s*`.
pub fn detect_convergence(trace: &RecursionTrace, tol: f64, window: usize) -> Option<(PTuple, usize)> {
    let window = window.max(1);
    let first = trace.first_stored_index();
    let last = trace.last_index();
    let mut streak = 0;
    for s in first..last {
        if trace.step_change(s)? < tol {
            streak += 1;
            if streak == window {
                let start = s + 1 - window;
                return Some((trace.state(s + 1)?.clone(), start));
            }
        } else {
            streak = 0;
        }
    }
    None
}

/// Smallest `L` in `1..=l_max` such that the last `window_periods * L`
/// states each match the state `L` steps later within `tol` (relative).
pub fn find_period(trace: &RecursionTrace, tol: f64, l_max: usize, window_periods: usize) -> Option<usize> {
    let w = window_periods.max(1);
    let last = trace.last_index();
    let stored = trace.stored_len();
    'period: for period in 1..=l_max {
        if stored < (w + 1) * period {
            break;
        }
        for k in 0..w * period {
            let s = last - period - k;
            let (a, b) = (trace.state(s)?, trace.state(s + period)?);
            if a.relative_distance(b) >= tol {
                continue 'period;
            }
        }
        return Some(period);
    }
    None
}

/// Tolerances for [`verify_cycle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyTolerances {
    /// Bound on `max_l max_i ||P^i_l - f(P_{l+1})^i||_F`.
    pub cycle: f64,
    /// Relative bound on the one-period loop identity, scaled by `1 + ||P^i_1||_F`.
    pub loop_identity: f64,
    /// Relative bound on the periodic best-response mismatch.
    pub best_response: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self { cycle: 1e-8, loop_identity: 1e-6, best_response: 1e-6 }
    }
}

/// One failed certificate condition.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateCheck {
    CycleResidual { value: f64, tol: f64 },
    ProductSpectralRadius { value: f64 },
    LoopIdentity { value: f64, bound: f64 },
    PeriodicBestResponse { value: f64, tol: f64 },
    Evaluation(String),
}

impl fmt::Display for CertificateCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CycleResidual { value, tol } => write!(f, "cycle residual {value:e} >= {tol:e}"),
            Self::ProductSpectralRadius { value } => write!(f, "period-product spectral radius {value} >= 1"),
            Self::LoopIdentity { value, bound } => write!(f, "loop identity residual {value:e} >= {bound:e}"),
            Self::PeriodicBestResponse { value, tol } => {
                write!(f, "periodic best-response residual {value:e} >= {tol:e}")
            }
            Self::Evaluation(msg) => write!(f, "evaluation failed: {msg}"),
        }
    }
}

/// A verified periodic orbit of the backward map.
///
/// Phases follow `P_l = f(P_{l+1})` with `P_{L+1} = P_1`. The gain of phase
/// `l` is the stage solution at `P_{l+1}`, the one that produces `P_l`; in
/// forward time the phases are played in the order `1, 2, ..., L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleCertificate {
    pub period: usize,
    pub phases: Vec<PTuple>,
    pub gains: Vec<GainTuple>,
    pub cycle_residual: f64,
    /// `rho(A^cl_L ... A^cl_1)`.
    pub product_spectral_radius: f64,
    /// `rho(A^cl_l)` for each phase.
    pub phase_spectral_radii: Vec<f64>,
    /// Largest absolute loop-identity residual over agents.
    pub loop_identity_residual: f64,
    /// Largest relative mismatch between the periodic best response and the phases.
    pub periodic_br_residual: f64,
}

impl CycleCertificate {
    /// `rho(A^cl_l) >= 1` for some phase although the period product is stable.
    pub fn has_unstable_phase(&self) -> bool {
        self.phase_spectral_radii.iter().any(|&r| r >= 1.0)
    }

    pub fn closed_loops(&self, game: &GameSpec) -> Vec<Matrix> {
        self.gains.iter().map(|k| riccati::closed_loop(game, k)).collect()
    }
}

/// `value < bound`; NaN is never within.
fn within(value: f64, bound: f64) -> bool {
    value < bound
}

/// Re-runs `f` around `phases`, builds the period product and checks the
/// loop identity and each agent's periodic best response.
pub fn verify_cycle(phases: &[PTuple], game: &GameSpec, tol: &CertifyTolerances) -> Result<CycleCertificate> {
    let period = phases.len();
    if period < 2 {
        return Err(Error::Precondition(format!("a cycle needs at least two phases, got {period}")));
    }
    if let Some(l) = phases.iter().position(|p| !p.is_positive_definite()) {
        return Err(Error::Precondition(format!("phase {} is not positive definite", l + 1)));
    }
    let n = game.state_dim();
    let agents = game.num_agents();

    let mut gains = Vec::with_capacity(period);
    let mut cycle_residual: f64 = 0.0;
    for l in 0..period {
        let next = &phases[(l + 1) % period];
        let (image, k) = riccati_step(next, game).map_err(|e| Error::CertificationFailed {
            failures: vec![CertificateCheck::Evaluation(format!("phase {}: {e}", l + 1))],
        })?;
        for i in 0..agents {
            cycle_residual = cycle_residual.max((&phases[l][i] - &image[i]).norm());
        }
        gains.push(k);
    }

    let closed_loops: Vec<Matrix> = gains.iter().map(|k| riccati::closed_loop(game, k)).collect();
    let phase_spectral_radii: Vec<f64> = closed_loops.iter().map(spectral_radius).collect();
    // thetas[l] = A^cl_l ... A^cl_1, thetas[0] = I
    let mut thetas = Vec::with_capacity(period + 1);
    thetas.push(Matrix::identity(n, n));
    for acl in &closed_loops {
        let next = acl * thetas.last().unwrap();
        thetas.push(next);
    }
    let product_spectral_radius = spectral_radius(&thetas[period]);

    let mut loop_identity_residual: f64 = 0.0;
    let mut loop_ok = true;
    let mut loop_bound = 0.0;
    for i in 0..agents {
        let p1 = &phases[0][i];
        let mut total = thetas[period].transpose() * p1 * &thetas[period];
        for l in 0..period {
            let k = &gains[l][i];
            let stage = &game.q[i] + k.transpose() * &game.r[i] * k;
            total += thetas[l].transpose() * stage * &thetas[l];
        }
        let residual = (p1 - total).norm();
        let bound = tol.loop_identity * (1.0 + p1.norm());
        if residual >= bound {
            loop_ok = false;
            loop_bound = bound;
        }
        loop_identity_residual = loop_identity_residual.max(residual);
    }

    let periodic_br_residual = match periodic_best_response_residual(phases, &gains, game) {
        Ok(v) => v,
        Err(e) => {
            return Err(Error::CertificationFailed {
                failures: vec![CertificateCheck::Evaluation(format!("periodic best response: {e}"))],
            })
        }
    };

    let mut failures = Vec::new();
    if !within(cycle_residual, tol.cycle) {
        failures.push(CertificateCheck::CycleResidual { value: cycle_residual, tol: tol.cycle });
    }
    if !within(product_spectral_radius, 1.0) {
        failures.push(CertificateCheck::ProductSpectralRadius { value: product_spectral_radius });
    }
    if !loop_ok {
        failures.push(CertificateCheck::LoopIdentity { value: loop_identity_residual, bound: loop_bound });
    }
    if !within(periodic_br_residual, tol.best_response) {
        failures.push(CertificateCheck::PeriodicBestResponse { value: periodic_br_residual, tol: tol.best_response });
    }
    if !failures.is_empty() {
        return Err(Error::CertificationFailed { failures });
    }

    Ok(CycleCertificate {
        period,
        phases: phases.to_vec(),
        gains,
        cycle_residual,
        product_spectral_radius,
        phase_spectral_radii,
        loop_identity_residual,
        periodic_br_residual,
    })
}

/// For each agent, iterates the periodic single-agent Riccati backward pass
/// with the other agents' phase gains frozen until it settles, and returns the
/// largest relative distance to the phases.
fn periodic_best_response_residual(phases: &[PTuple], gains: &[GainTuple], game: &GameSpec) -> Result<f64> {
    const SETTLE_TOL: f64 = 1e-12;
    const MAX_PERIODS: usize = 100_000;
    let period = phases.len();
    let mut worst: f64 = 0.0;
    for i in 0..game.num_agents() {
        let partial: Vec<Matrix> = gains.iter().map(|k| riccati::partial_closed_loop(game, k, i)).collect();
        let (b, q, r) = (&game.b[i], &game.q[i], &game.r[i]);
        let mut values = vec![q.clone(); period];
        let mut settled = false;
        for _ in 0..MAX_PERIODS {
            let previous_first = values[0].clone();
            // values[l] sits at phase l + 1; phase L + 1 wraps to phase 1
            let mut next = values[0].clone();
            for l in (0..period).rev() {
                let (x, _) = single_agent_update(&partial[l], b, q, r, &next)?;
                values[l] = x;
                next = values[l].clone();
            }
            let change = (&values[0] - &previous_first).norm() / (1.0 + values[0].norm());
            if change < SETTLE_TOL {
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(Error::NoConvergence { iterations: MAX_PERIODS });
        }
        for (x, phase) in values.iter().zip(phases) {
            let p = &phase[i];
            worst = worst.max((x - p).norm() / (1.0 + p.norm()));
        }
    }
    Ok(worst)
}

/// Phase-matches the trailing window and, for a period of at least two,
/// returns the verified certificate of the last `L` states.
pub fn detect_cycle(
    trace: &RecursionTrace,
    game: &GameSpec,
    tol: f64,
    l_max: usize,
    window_periods: usize,
    certify: &CertifyTolerances,
) -> Option<CycleCertificate> {
    let period = find_period(trace, tol, l_max, window_periods)?;
    if period < 2 {
        return None;
    }
    let last = trace.last_index();
    let phases: Vec<PTuple> = (1..=period).map(|l| trace.state(last + 1 - l).cloned()).collect::<Option<_>>()?;
    verify_cycle(&phases, game, certify).ok()
}

/// Asymptotic regime of one recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Converged { fixed_point: PTuple, steps_to_converge: usize },
    Cycle(Box<CycleCertificate>),
    BoundedNonConvergent { sup_norm: f64, steps_observed: usize },
    Diverged { step: usize },
    SingularStage { step: usize, rcond: f64 },
}

impl Classification {
    pub fn verdict(&self) -> Verdict {
        match self {
            Self::Converged { .. } => Verdict::Converged,
            Self::Cycle(_) => Verdict::Cycle,
            Self::BoundedNonConvergent { .. } => Verdict::BoundedNonConvergent,
            Self::Diverged { .. } => Verdict::Diverged,
            Self::SingularStage { .. } => Verdict::SingularStage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Converged,
    Cycle,
    BoundedNonConvergent,
    Diverged,
    SingularStage,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Cycle => "cycle",
            Verdict::BoundedNonConvergent => "non_convergent",
            Verdict::Diverged => "diverged",
            Verdict::SingularStage => "singular",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub horizon: usize,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub cycle_tol: f64,
    /// Number of periods the phase match must hold for.
    pub cycle_window_periods: usize,
    pub max_period: usize,
    /// Steps between trailing-window period searches.
    pub cycle_check_every: usize,
    pub certify: CertifyTolerances,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            convergence_tol: 1e-9,
            convergence_window: 10,
            cycle_tol: 1e-8,
            cycle_window_periods: 3,
            max_period: 100,
            cycle_check_every: 10,
            certify: CertifyTolerances::default(),
        }
    }
}

impl ClassifyOptions {
    /// States a trace must retain for cycle search over every period.
    pub fn ring_capacity(&self) -> usize {
        (2 + self.cycle_window_periods) * self.max_period + self.convergence_window + 2
    }
}

/// Convergence streak plus periodic trailing-window period search.
struct RegimeStop {
    opts: ClassifyOptions,
    streak: usize,
    quiet_until: usize,
}

impl StopRule for RegimeStop {
    fn observe(&mut self, trace: &RecursionTrace) -> Option<StopCause> {
        match trace.last_step_change() {
            Some(change) if change < self.opts.convergence_tol => self.streak += 1,
            _ => self.streak = 0,
        }
        if self.streak >= self.opts.convergence_window.max(1) {
            return Some(StopCause::Converged);
        }
        let step = trace.last_index();
        if step >= self.quiet_until && step.is_multiple_of(self.opts.cycle_check_every.max(1)) {
            let o = &self.opts;
            if let Some(period) = find_period(trace, o.cycle_tol, o.max_period, o.cycle_window_periods) {
                if period >= 2 {
                    return Some(StopCause::CycleCandidate { period });
                }
            }
        }
        None
    }
}

/// Continues a candidate cycle until its period-to-period mismatch stops
/// shrinking, so the certificate is built from a tight orbit.
struct PeriodRefine {
    period: usize,
    best: f64,
    since_best: usize,
}

impl StopRule for PeriodRefine {
    fn observe(&mut self, trace: &RecursionTrace) -> Option<StopCause> {
        let last = trace.last_index();
        let current = trace.state(last)?;
        let earlier = trace.state(last.checked_sub(self.period)?)?;
        let mismatch = earlier.relative_distance(current);
        if mismatch < 1e-15 {
            return Some(StopCause::CycleCandidate { period: self.period });
        }
        if mismatch < 0.999 * self.best {
            self.best = mismatch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
            if self.since_best > 4 * self.period {
                return Some(StopCause::CycleCandidate { period: self.period });
            }
        }
        None
    }
}

/// Runs the recursion from `terminal` and classifies its asymptotic regime.
/// Convergence is tested before cycles.
pub fn classify(game: &GameSpec, terminal: PTuple, opts: &ClassifyOptions) -> Classification {
    classify_with_trace(game, terminal, opts).0
}

/// [`classify`], also returning the trace it examined.
pub fn classify_with_trace(
    game: &GameSpec,
    terminal: PTuple,
    opts: &ClassifyOptions,
) -> (Classification, RecursionTrace) {
    let mut trace = RecursionTrace::with_ring_capacity(terminal, opts.ring_capacity());
    let mut stop = RegimeStop { opts: *opts, streak: 0, quiet_until: 0 };
    loop {
        let remaining = opts.horizon.saturating_sub(trace.last_index());
        extend_recursion(&mut trace, game, remaining, &mut stop);
        match trace.termination() {
            Termination::Stopped(StopCause::Converged) => {
                let steps = trace.last_index() - opts.convergence_window.max(1);
                let verdict =
                    Classification::Converged { fixed_point: trace.last_state().clone(), steps_to_converge: steps };
                return (verdict, trace);
            }
            Termination::Stopped(StopCause::CycleCandidate { period }) => {
                let budget = (200 * period + 500).min(opts.horizon.saturating_sub(trace.last_index()));
                let mut refine = PeriodRefine { period, best: f64::INFINITY, since_best: 0 };
                extend_recursion(&mut trace, game, budget, &mut refine);
                match trace.termination() {
                    Termination::Diverged { step, .. } => return (Classification::Diverged { step }, trace),
                    Termination::Singular { step, rcond } => {
                        return (Classification::SingularStage { step, rcond }, trace)
                    }
                    _ => {}
                }
                if let Some(cert) = detect_cycle(
                    &trace,
                    game,
                    opts.cycle_tol,
                    opts.max_period,
                    opts.cycle_window_periods,
                    &opts.certify,
                ) {
                    return (Classification::Cycle(Box::new(cert)), trace);
                }
                stop.quiet_until = trace.last_index() + 10 * opts.cycle_check_every.max(1);
                stop.streak = 0;
                if trace.last_index() >= opts.horizon {
                    return (bounded(&trace), trace);
                }
            }
            Termination::Completed => {
                if let Some((fixed_point, steps)) =
                    detect_convergence(&trace, opts.convergence_tol, opts.convergence_window)
                {
                    return (Classification::Converged { fixed_point, steps_to_converge: steps }, trace);
                }
                if let Some(cert) = detect_cycle(
                    &trace,
                    game,
                    opts.cycle_tol,
                    opts.max_period,
                    opts.cycle_window_periods,
                    &opts.certify,
                ) {
                    return (Classification::Cycle(Box::new(cert)), trace);
                }
                return (bounded(&trace), trace);
            }
            Termination::Diverged { step, .. } => return (Classification::Diverged { step }, trace),
            Termination::Singular { step, rcond } => return (Classification::SingularStage { step, rcond }, trace),
        }
    }
}

fn bounded(trace: &RecursionTrace) -> Classification {
    Classification::BoundedNonConvergent { sup_norm: trace.sup_norm(), steps_observed: trace.last_index() }
}

/// Outcome of [`nash_verify_stationary`].
#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub fixed_point_residual: f64,
    /// The residual was below the tolerance, so the remaining checks apply.
    pub is_fixed_point: bool,
    pub gains: GainTuple,
    pub closed_loop_spectral_radius: f64,
    /// `||K_br^i - K^i||_F` per agent; empty when the precondition failed.
    pub best_response_gaps: Vec<f64>,
    pub pass: bool,
}

/// Checks a stationary candidate: fixed-point residual, closed-loop stability
/// and every agent's best-response gap against the others' gains.
pub fn nash_verify_stationary(p: &PTuple, game: &GameSpec, tol: f64) -> Result<NashReport> {
    let fixed_point_residual = fixed_point_residual(p, game)?;
    let gains = stage_gains(p, game)?;
    let closed_loop_spectral_radius = spectral_radius(&riccati::closed_loop(game, &gains));
    let is_fixed_point = fixed_point_residual < tol;
    let mut report = NashReport {
        fixed_point_residual,
        is_fixed_point,
        gains,
        closed_loop_spectral_radius,
        best_response_gaps: Vec::new(),
        pass: false,
    };
    if !is_fixed_point {
        return Ok(report);
    }
    for i in 0..game.num_agents() {
        let (_, k) = riccati::best_response_dare(game, i, &report.gains)?;
        report.best_response_gaps.push((k - &report.gains[i]).norm());
    }
    report.pass = closed_loop_spectral_radius < 1.0 && report.best_response_gaps.iter().all(|&g| g < tol);
    Ok(report)
}

/// Per-step `rho(A^cl)` along a trace's stored gains.
pub fn closed_loop_radii(trace: &RecursionTrace, game: &GameSpec) -> Vec<(usize, f64)> {
    trace.gains().map(|(s, k)| (s, spectral_radius(&riccati::closed_loop(game, k)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar;
    use crate::riccati::{run_recursion, NoStop};
    use approx::assert_relative_eq;

    const GOLDEN: f64 = 1.618_033_988_749_895;

    fn three_equilibrium_game() -> GameSpec {
        GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0])
    }

    fn lqr() -> GameSpec {
        GameSpec::scalar(1.0, &[1.0], &[1.0], &[1.0])
    }

    #[test]
    fn residual_at_golden_ratio() {
        assert!(fixed_point_residual(&PTuple::scalars(&[GOLDEN]), &lqr()).unwrap() < 1e-12);
    }

    #[test]
    fn residual_with_zero_dynamics_at_q() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        assert_eq!(fixed_point_residual(&g.q_tuple(), &g).unwrap(), 0.0);
    }

    #[test]
    fn residual_scalar_game_at_unit_values() {
        let r = fixed_point_residual(&PTuple::scalars(&[1.0, 1.0]), &three_equilibrium_game()).unwrap();
        assert_relative_eq!(r, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn convergence_of_constant_trace() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        let trace = run_recursion(&g, PTuple::scalars(&[3.0, 3.0]), 20, &mut NoStop);
        let (p, steps) = detect_convergence(&trace, 1e-9, 10).unwrap();
        assert_eq!(p, g.q_tuple());
        assert_eq!(steps, 1);
    }

    #[test]
    fn convergence_of_scalar_lqr() {
        let trace = run_recursion(&lqr(), PTuple::scalars(&[1.0]), 200, &mut NoStop);
        let (p, _) = detect_convergence(&trace, 1e-9, 10).unwrap();
        assert!((p[0][(0, 0)] - GOLDEN).abs() < 1e-9);
    }

    fn alternating(len: usize) -> RecursionTrace {
        let x = PTuple::scalars(&[1.0, 2.0]);
        let y = PTuple::scalars(&[3.0, 1.5]);
        RecursionTrace::from_states((0..len).map(|s| if s % 2 == 0 { x.clone() } else { y.clone() }).collect())
    }

    #[test]
    fn alternating_trace_never_converges() {
        assert!(detect_convergence(&alternating(50), 1e-9, 10).is_none());
        assert_eq!(find_period(&alternating(50), 1e-8, 10, 3), Some(2));
    }

    #[test]
    fn constant_trace_has_period_one_and_no_cycle() {
        let trace = RecursionTrace::from_states(vec![PTuple::scalars(&[2.0]); 40]);
        assert_eq!(find_period(&trace, 1e-8, 10, 3), Some(1));
        assert!(detect_cycle(&trace, &lqr(), 1e-8, 10, 3, &CertifyTolerances::default()).is_none());
    }

    #[test]
    fn replicated_fixed_point_certifies_for_any_period() {
        let trace = run_recursion(&three_equilibrium_game(), PTuple::scalars(&[1.0, 1.0]), 2000, &mut NoStop);
        let p = trace.last_state().clone();
        let rho = spectral_radius(&riccati::closed_loop(
            &three_equilibrium_game(),
            &stage_gains(&p, &three_equilibrium_game()).unwrap(),
        ));
        for period in [2, 3] {
            let cert = verify_cycle(&vec![p.clone(); period], &three_equilibrium_game(), &CertifyTolerances::default())
                .unwrap();
            assert!(cert.cycle_residual < 1e-8);
            assert!(cert.loop_identity_residual < 1e-8);
            assert!(cert.periodic_br_residual < 1e-8);
            assert_relative_eq!(cert.product_spectral_radius, rho.powi(period as i32), epsilon = 1e-10);
        }
    }

    #[test]
    fn interleaved_fixed_points_fail_on_cycle_residual() {
        let g = three_equilibrium_game();
        let a = run_recursion(&g, PTuple::scalars(&[0.5, 30.0]), 3000, &mut NoStop).last_state().clone();
        let b = run_recursion(&g, PTuple::scalars(&[30.0, 0.5]), 3000, &mut NoStop).last_state().clone();
        assert!(a.relative_distance(&b) > 1e-3, "expected two distinct attractors");
        let err = verify_cycle(&[a, b], &g, &CertifyTolerances::default()).unwrap_err();
        match err {
            Error::CertificationFailed { failures } => {
                assert!(matches!(failures[0], CertificateCheck::CycleResidual { .. }))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn verify_cycle_rejects_single_phase() {
        assert!(matches!(
            verify_cycle(&[PTuple::scalars(&[1.0])], &lqr(), &CertifyTolerances::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn classify_scalar_game_converges() {
        let c = classify(&three_equilibrium_game(), PTuple::scalars(&[1.0, 1.0]), &ClassifyOptions::default());
        assert_eq!(c.verdict(), Verdict::Converged);
    }

    #[test]
    fn classify_zero_dynamics_converges_in_one_step() {
        let mut g = three_equilibrium_game();
        g.a = scalar(0.0);
        match classify(&g, PTuple::scalars(&[2.0, 2.0]), &ClassifyOptions::default()) {
            Classification::Converged { fixed_point, steps_to_converge } => {
                assert_eq!(fixed_point, g.q_tuple());
                assert_eq!(steps_to_converge, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nash_verification_of_golden_ratio() {
        let report = nash_verify_stationary(&PTuple::scalars(&[GOLDEN]), &lqr(), 1e-8).unwrap();
        assert!(report.pass);
        assert_relative_eq!(report.closed_loop_spectral_radius, 2.0 - GOLDEN, epsilon = 1e-10);
    }

    #[test]
    fn nash_verification_flags_non_fixed_point() {
        let report = nash_verify_stationary(&PTuple::scalars(&[1.0, 1.0]), &three_equilibrium_game(), 1e-8).unwrap();
        assert!(!report.is_fixed_point);
        assert!(!report.pass);
    }
}
