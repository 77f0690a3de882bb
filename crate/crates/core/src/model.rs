//! Game data, validation and the stabilizability check.

use std::ops::Index;

use nalgebra::{Complex, DMatrix};

use crate::linalg::{self, Matrix};

/// Asymmetry above this relative Frobenius norm fails validation.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues with modulus at least `1 - PBH_MARGIN` are tested by PBH.
pub const PBH_MARGIN: f64 = 1e-12;

/// One LQ game: `x+ = A x + sum_i B^i u^i + w`, stage cost `x'Q^i x + u'R^i u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub a: Matrix,
    pub b: Vec<Matrix>,
    pub q: Vec<Matrix>,
    pub r: Vec<Matrix>,
    /// Noise covariance; zero when absent.
    pub w: Matrix,
}

impl GameSpec {
    /// Builds a game without checking it; see [`validate_game`].
    pub fn new(a: Matrix, b: Vec<Matrix>, q: Vec<Matrix>, r: Vec<Matrix>, w: Option<Matrix>) -> Self {
        let n = a.nrows();
        let w = w.unwrap_or_else(|| Matrix::zeros(n, n));
        Self { a, b, q, r, w }
    }

    /// Scalar game with one-dimensional state and inputs.
    pub fn scalar(a: f64, b: &[f64], q: &[f64], r: &[f64]) -> Self {
        let m = |v: &[f64]| v.iter().map(|&x| linalg::scalar(x)).collect::<Vec<_>>();
        Self::new(linalg::scalar(a), m(b), m(q), m(r), None)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_agents(&self) -> usize {
        self.b.len()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.b.iter().map(|b| b.ncols()).collect()
    }

    pub fn total_inputs(&self) -> usize {
        self.b.iter().map(|b| b.ncols()).sum()
    }

    /// `[B^1 ... B^N]`.
    pub fn b_all(&self) -> Matrix {
        linalg::hstack(&self.b)
    }

    /// Replaces every symmetric-by-declaration matrix by its symmetric part.
    pub fn symmetrized(mut self) -> Self {
        for m in self.q.iter_mut().chain(self.r.iter_mut()) {
            linalg::symmetrize_in_place(m);
        }
        linalg::symmetrize_in_place(&mut self.w);
        self
    }

    /// The stage cost weights as a terminal tuple, `Q_T = Q`.
    pub fn q_tuple(&self) -> PTuple {
        PTuple::new(self.q.clone())
    }

    pub fn has_noise(&self) -> bool {
        self.w.iter().any(|&v| v != 0.0)
    }
}

/// Per-agent value matrices `(P^1, ..., P^N)` at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PTuple {
    entries: Vec<Matrix>,
}

impl PTuple {
    pub fn new(entries: Vec<Matrix>) -> Self {
        Self { entries }
    }

    pub fn scalars(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| linalg::scalar(v)).collect())
    }

    pub fn entries(&self) -> &[Matrix] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Matrix> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.entries.iter()
    }

    /// Frobenius norm of the stacked tuple.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }

    /// Largest per-agent Frobenius norm.
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// `||self - other||_F` over the stacked tuple.
    pub fn distance(&self, other: &PTuple) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| squared_difference(a, b)).sum::<f64>().sqrt()
    }

    /// `||self - other||_F / (1 + ||self||_F)` over the stacked tuple.
    pub fn relative_distance(&self, other: &PTuple) -> f64 {
        self.distance(other) / (1.0 + self.norm())
    }

    /// `max_i ||P^i - O^i||_F / (1 + ||P^i||_F)`.
    pub fn max_agent_relative_distance(&self, other: &PTuple) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| squared_difference(a, b).sqrt() / (1.0 + a.norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.entries.iter().all(linalg::is_positive_definite)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }
}

fn squared_difference(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Index<usize> for PTuple {
    type Output = Matrix;

    fn index(&self, i: usize) -> &Matrix {
        &self.entries[i]
    }
}

/// Per-agent feedback gains `(K^1, ..., K^N)`, each `m_i x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTuple {
    entries: Vec<Matrix>,
}

impl GainTuple {
    pub fn new(entries: Vec<Matrix>) -> Self {
        Self { entries }
    }

    pub fn zeros(game: &GameSpec) -> Self {
        let n = game.state_dim();
        Self::new(game.input_dims().into_iter().map(|m| Matrix::zeros(m, n)).collect())
    }

    pub fn scalars(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| linalg::scalar(v)).collect())
    }

    pub fn entries(&self) -> &[Matrix] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Matrix] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.entries.iter()
    }
}

impl Index<usize> for GainTuple {
    type Output = Matrix;

    fn index(&self, i: usize) -> &Matrix {
        &self.entries[i]
    }
}

/// Outcome of [`validate_game`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub stabilizable: bool,
    /// `(matrix name, minimum eigenvalue)` for every definiteness failure.
    pub definiteness_failures: Vec<(String, f64)>,
    pub dimension_failures: Vec<String>,
    pub symmetry_failures: Vec<String>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        parts.extend(self.dimension_failures.iter().cloned());
        parts.extend(self.symmetry_failures.iter().map(|s| format!("{s} is not symmetric")));
        parts.extend(
            self.definiteness_failures
                .iter()
                .map(|(name, ev)| format!("{name} fails definiteness (min eigenvalue {ev:e})")),
        );
        if !self.stabilizable && self.dimension_failures.is_empty() {
            parts.push("(A, [B^1 .. B^N]) is not stabilizable".into());
        }
        if parts.is_empty() {
            "ok".into()
        } else {
            parts.join("; ")
        }
    }
}

/// Checks dimensions, symmetry, definiteness and stabilizability. Never fails:
/// every violation is collected in the report.
pub fn validate_game(game: &GameSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = game.a.nrows();
    let agents = game.b.len();

    if n == 0 {
        report.dimension_failures.push("state dimension n must be at least 1".into());
    }
    if !game.a.is_square() {
        report.dimension_failures.push(format!("A is {}x{}, expected square", game.a.nrows(), game.a.ncols()));
    }
    if agents == 0 {
        report.dimension_failures.push("at least one agent is required".into());
    }
    if game.q.len() != agents || game.r.len() != agents {
        report.dimension_failures.push(format!(
            "agent counts disagree: {} B, {} Q, {} R",
            agents,
            game.q.len(),
            game.r.len()
        ));
    }
    for (i, b) in game.b.iter().enumerate() {
        if b.nrows() != n {
            report.dimension_failures.push(format!("B^{} has {} rows, expected {n}", i + 1, b.nrows()));
        }
        if b.ncols() == 0 {
            report.dimension_failures.push(format!("B^{} has no input columns", i + 1));
        }
    }
    for (i, q) in game.q.iter().enumerate() {
        if q.nrows() != n || q.ncols() != n {
            report.dimension_failures.push(format!("Q^{} is {}x{}, expected {n}x{n}", i + 1, q.nrows(), q.ncols()));
        }
    }
    for (i, r) in game.r.iter().enumerate() {
        let m = game.b.get(i).map_or(0, |b| b.ncols());
        if r.nrows() != m || r.ncols() != m {
            report.dimension_failures.push(format!("R^{} is {}x{}, expected {m}x{m}", i + 1, r.nrows(), r.ncols()));
        }
    }
    if game.w.nrows() != n || game.w.ncols() != n {
        report.dimension_failures.push(format!("W is {}x{}, expected {n}x{n}", game.w.nrows(), game.w.ncols()));
    }

    let check_sym = |name: String, m: &Matrix, strict: bool, report: &mut ValidationReport| {
        if !m.is_square() || m.is_empty() {
            return;
        }
        if linalg::relative_asymmetry(m) > SYMMETRY_TOL {
            report.symmetry_failures.push(name.clone());
        }
        let (min, max) = linalg::symmetric_eigen_range(m);
        let floor = linalg::PD_TOL * (1.0 + max.abs());
        let pass = if strict { min > floor } else { min >= -floor };
        if !pass {
            report.definiteness_failures.push((name, min));
        }
    };
    for (i, q) in game.q.iter().enumerate() {
        check_sym(format!("Q^{}", i + 1), q, true, &mut report);
    }
    for (i, r) in game.r.iter().enumerate() {
        check_sym(format!("R^{}", i + 1), r, true, &mut report);
    }
    check_sym("W".into(), &game.w, false, &mut report);

    if report.dimension_failures.is_empty() {
        report.stabilizable = pbh_stabilizable(&game.a, &game.b_all());
    }
    report.ok = report.dimension_failures.is_empty()
        && report.symmetry_failures.is_empty()
        && report.definiteness_failures.is_empty()
        && report.stabilizable;
    report
}

/// PBH test: `rank [A - lambda I | B_all] = n` for every eigenvalue of `A`
/// with `|lambda| >= 1 - 1e-12`.
pub fn pbh_stabilizable(a: &Matrix, b_all: &Matrix) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let eigenvalues = a.complex_eigenvalues();
    let ca: DMatrix<Complex<f64>> = a.map(|v| Complex::new(v, 0.0));
    let cb: DMatrix<Complex<f64>> = b_all.map(|v| Complex::new(v, 0.0));
    let cols = n + b_all.ncols();
    for lambda in eigenvalues.iter() {
        if lambda.norm() < 1.0 - PBH_MARGIN {
            continue;
        }
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, cols);
        pencil.view_mut((0, 0), (n, n)).copy_from(&ca);
        for k in 0..n {
            pencil[(k, k)] -= *lambda;
        }
        if b_all.ncols() > 0 {
            pencil.view_mut((0, n), (n, b_all.ncols())).copy_from(&cb);
        }
        let sv = pencil.singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > linalg::RANK_TOL * smax).count();
        if rank < n {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar;

    pub(crate) fn scalar_game_game() -> GameSpec {
        GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0])
    }

    #[test]
    fn scalar_game_game_is_valid() {
        let report = validate_game(&scalar_game_game());
        assert!(report.ok, "{}", report.summary());
        assert!(report.stabilizable);
    }

    #[test]
    fn zero_input_map_cannot_stabilize() {
        let g = GameSpec::scalar(2.0, &[0.0], &[1.0], &[1.0]);
        let report = validate_game(&g);
        assert!(!report.ok);
        assert!(!report.stabilizable);
    }

    #[test]
    fn identity_game_is_valid() {
        let i2 = Matrix::identity(2, 2);
        let g = GameSpec::new(i2.clone(), vec![i2.clone()], vec![i2.clone()], vec![i2], None);
        let report = validate_game(&g);
        assert!(report.ok && report.stabilizable);
    }

    #[test]
    fn pbh_examples() {
        assert!(pbh_stabilizable(&scalar(5.0), &Matrix::from_row_slice(1, 2, &[1.0, 1.0])));
        assert!(pbh_stabilizable(&scalar(0.5), &scalar(0.0)));
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.1]);
        let e2 = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(!pbh_stabilizable(&a, &e2));
    }

    #[test]
    fn marginal_eigenvalue_counts_as_unstable() {
        assert!(!pbh_stabilizable(&scalar(1.0), &scalar(0.0)));
        assert!(!pbh_stabilizable(&scalar(-1.0), &scalar(0.0)));
    }

    #[test]
    fn complex_unstable_pair_needs_input() {
        let rot = Matrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        assert!(!pbh_stabilizable(&rot, &Matrix::zeros(2, 1)));
        assert!(pbh_stabilizable(&rot, &Matrix::from_row_slice(2, 1, &[1.0, 0.0])));
    }

    #[test]
    fn reports_every_failure() {
        let g = GameSpec::new(
            scalar(0.5),
            vec![Matrix::zeros(2, 1)],
            vec![scalar(-1.0)],
            vec![Matrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0])],
            None,
        );
        let report = validate_game(&g);
        assert!(!report.ok);
        assert_eq!(report.dimension_failures.len(), 2);
        assert!(report.definiteness_failures.iter().any(|(n, ev)| n == "Q^1" && *ev < 0.0));
        assert!(report.symmetry_failures.contains(&"R^1".to_string()));
    }

    #[test]
    fn small_asymmetry_is_tolerated_and_removed() {
        let mut q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        q[(0, 1)] += 1e-12;
        let i2 = Matrix::identity(2, 2);
        let g = GameSpec::new(i2.clone(), vec![i2.clone()], vec![q], vec![i2], None);
        assert!(validate_game(&g).ok);
        let s = g.symmetrized();
        assert_eq!(s.q[0][(0, 1)], s.q[0][(1, 0)]);
    }

    #[test]
    fn indefinite_w_is_rejected() {
        let mut g = scalar_game_game();
        g.w = scalar(-1.0);
        let report = validate_game(&g);
        assert!(!report.ok);
        assert_eq!(report.definiteness_failures[0].0, "W");
    }
}
