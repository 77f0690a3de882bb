//! Stationary equilibria computed independently of the recursion: a grid
//! enumerator for scalar two-agent games and a residual descent for any size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{nash_verify_stationary, NashReport};
use crate::error::{Error, Result};
use crate::experiments::random_spd;
use crate::linalg::Matrix;
use crate::model::{GainTuple, GameSpec, PTuple};
use crate::riccati::riccati_step;

/// Tolerance every returned point must pass in Nash verification.
pub const VERIFY_TOL: f64 = 1e-8;

/// Points closer than this (max-agent relative) are the same equilibrium.
pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Enumeration,
    Descent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub p: PTuple,
    pub gains: GainTuple,
    pub report: NashReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchMetadata {
    /// Grid description or number of initializations.
    pub description: String,
    pub candidates: usize,
    /// Roots of the residual rejected by Nash verification.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub points: Vec<EquilibriumPoint>,
    pub method: SearchMethod,
    pub metadata: SearchMetadata,
}

impl EquilibriumSet {
    /// Index of the closest point within `max_distance` (max-agent relative).
    pub fn nearest(&self, p: &PTuple, max_distance: f64) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, e)| (k, e.p.max_agent_relative_distance(p)))
            .filter(|&(_, d)| d <= max_distance)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    }

    pub fn contains(&self, p: &PTuple, tol: f64) -> bool {
        self.nearest(p, tol).is_some()
    }

    fn push_distinct(&mut self, point: EquilibriumPoint) {
        if !self.contains(&point.p, DISTINCT_TOL) {
            self.points.push(point);
        }
    }
}

/// Log-spaced grid used by the scalar enumerator.
pub const SCAN_POINTS: usize = 200;
pub const SCAN_RANGE: (f64, f64) = (1e-4, 1e6);

fn scalar_residual(game: &GameSpec, p1: f64, p2: f64) -> Option<[f64; 2]> {
    let (image, _) = riccati_step(&PTuple::scalars(&[p1, p2]), game).ok()?;
    Some([p1 - image[0][(0, 0)], p2 - image[1][(0, 0)]])
}

/// All stabilizing equilibria `(P^1, P^2)` of a scalar two-agent game.
///
/// Scans the fixed-point residual over a 200 x 200 logarithmic grid on
/// `[1e-4, 1e6]^2`, polishes every cell where both residual components
/// change sign with Newton's method in log coordinates, then keeps the
/// distinct roots that pass Nash verification. Each root is finally moved
/// by at most a few dozen ulps to the nearest exact fixed point of the
/// rounded map when one exists.
pub fn scalar_two_agent_equilibria(game: &GameSpec) -> Result<EquilibriumSet> {
    if game.state_dim() != 1 || game.num_agents() != 2 || game.input_dims() != [1, 1] {
        return Err(Error::Precondition("scalar enumeration needs n = 1, N = 2, m = 1".into()));
    }
    let (lo, hi) = (SCAN_RANGE.0.ln(), SCAN_RANGE.1.ln());
    let grid: Vec<f64> =
        (0..SCAN_POINTS).map(|k| (lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64).exp()).collect();
    let values: Vec<Option<[f64; 2]>> = (0..SCAN_POINTS * SCAN_POINTS)
        .into_par_iter()
        .map(|idx| scalar_residual(game, grid[idx / SCAN_POINTS], grid[idx % SCAN_POINTS]))
        .collect();
    let at = |i: usize, j: usize| values[i * SCAN_POINTS + j];

    let mut starts = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        for j in 0..SCAN_POINTS - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            let Some(corners) = corners.into_iter().collect::<Option<Vec<_>>>() else {
                continue;
            };
            let brackets = |c: usize| {
                let min = corners.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
                let max = corners.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
                min <= 0.0 && max >= 0.0
            };
            if brackets(0) && brackets(1) {
                starts.push(((grid[i] * grid[i + 1]).sqrt(), (grid[j] * grid[j + 1]).sqrt()));
            }
        }
    }

    let mut set = EquilibriumSet {
        points: Vec::new(),
        method: SearchMethod::Enumeration,
        metadata: SearchMetadata {
            description: format!("{SCAN_POINTS}x{SCAN_POINTS} log grid on [{:e}, {:e}]", SCAN_RANGE.0, SCAN_RANGE.1),
            candidates: starts.len(),
            rejected: 0,
        },
    };
    let mut roots: Vec<PTuple> = Vec::new();
    for (p1, p2) in starts {
        let Some(root) = newton_polish_scalar(game, p1, p2) else {
            continue;
        };
        let root = PTuple::scalars(&snap_to_lattice_fixed_point(game, root));
        if roots.iter().any(|r| r.max_agent_relative_distance(&root) < DISTINCT_TOL) {
            continue;
        }
        roots.push(root.clone());
        match verify_point(game, root) {
            Some(point) => set.push_distinct(point),
            None => set.metadata.rejected += 1,
        }
    }
    set.points.sort_by(|a, b| a.p[0][(0, 0)].total_cmp(&b.p[0][(0, 0)]));
    if set.points.is_empty() {
        return Err(Error::NoEquilibriumFound);
    }
    Ok(set)
}

/// Ulp offsets searched around a polished scalar root, per coordinate.
pub const LATTICE_SEARCH_ULPS: i64 = 48;

fn ulp_offset(x: f64, k: i64) -> f64 {
    f64::from_bits((x.to_bits() as i64 + k) as u64)
}

/// The double-precision pair near `root` that the implemented map sends
/// closest to itself, searched ring by ring out to [`LATTICE_SEARCH_ULPS`]
/// and stopping at the first exact fixed point.
///
/// An exact fixed point of the rounded map is reproduced bit for bit by the
/// recursion, which matters for repelling equilibria: from a merely nearby
/// pair, rounding noise is amplified at every step.
fn snap_to_lattice_fixed_point(game: &GameSpec, root: [f64; 2]) -> [f64; 2] {
    let gap = |p: [f64; 2]| scalar_residual(game, p[0], p[1]).map_or(f64::INFINITY, |r| r[0].abs() + r[1].abs());
    let mut best = (gap(root), root);
    for ring in 1..=LATTICE_SEARCH_ULPS {
        if best.0 == 0.0 {
            break;
        }
        for i in -ring..=ring {
            for j in -ring..=ring {
                if i.abs() != ring && j.abs() != ring {
                    continue;
                }
                let p = [ulp_offset(root[0], i), ulp_offset(root[1], j)];
                let g = gap(p);
                if g < best.0 {
                    best = (g, p);
                }
            }
        }
    }
    best.1
}

fn verify_point(game: &GameSpec, p: PTuple) -> Option<EquilibriumPoint> {
    let report = nash_verify_stationary(&p, game, VERIFY_TOL).ok()?;
    report.pass.then(|| EquilibriumPoint { gains: report.gains.clone(), p, report })
}

/// Damped Newton on the scalar residual in `u = ln p`.
fn newton_polish_scalar(game: &GameSpec, p1: f64, p2: f64) -> Option<[f64; 2]> {
    let scaled = |u: [f64; 2]| -> Option<[f64; 2]> {
        let p = [u[0].exp(), u[1].exp()];
        let r = scalar_residual(game, p[0], p[1])?;
        Some([r[0] / (1.0 + p[0]), r[1] / (1.0 + p[1])])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut u = [p1.ln(), p2.ln()];
    let mut r = scaled(u)?;
    for _ in 0..200 {
        if norm(r) < 1e-14 {
            break;
        }
        let h = 1e-7;
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[c] += h;
            dn[c] -= h;
            let (fu, fd) = (scaled(up)?, scaled(dn)?);
            for row in 0..2 {
                jac[row][c] = (fu[row] - fd[row]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let du = [-(jac[1][1] * r[0] - jac[0][1] * r[1]) / det, -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det];
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial = [u[0] + step * du[0], u[1] + step * du[1]];
            if let Some(rt) = scaled(trial) {
                if norm(rt) < norm(r) {
                    u = trial;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (norm(r) < 1e-12).then(|| [u[0].exp(), u[1].exp()])
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub max_iterations: usize,
    /// Random positive definite starts added to the caller's initializations.
    pub random_restarts: usize,
    pub seed: u64,
    /// Acceptance threshold on `sum_i ||P^i - f(P)^i||_F^2`.
    pub accept_objective: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, random_restarts: 20, seed: 0, accept_objective: 1e-16 }
    }
}

/// Packs the upper triangles of each `P^i`.
fn pack(p: &PTuple) -> Vec<f64> {
    p.iter()
        .flat_map(|m| {
            let n = m.nrows();
            (0..n).flat_map(move |r| (r..n).map(move |c| m[(r, c)]))
        })
        .collect()
}

fn unpack(x: &[f64], agents: usize, n: usize) -> PTuple {
    let mut k = 0;
    let entries = (0..agents)
        .map(|_| {
            let mut m = Matrix::zeros(n, n);
            for r in 0..n {
                for c in r..n {
                    m[(r, c)] = x[k];
                    m[(c, r)] = x[k];
                    k += 1;
                }
            }
            m
        })
        .collect();
    PTuple::new(entries)
}

/// Weighted residual vector whose squared norm is the objective.
fn residual_vector(game: &GameSpec, x: &[f64]) -> Option<Vec<f64>> {
    let n = game.state_dim();
    let p = unpack(x, game.num_agents(), n);
    if !p.is_positive_definite() {
        return None;
    }
    let (image, _) = riccati_step(&p, game).ok()?;
    let mut out = Vec::with_capacity(x.len());
    for (pi, fi) in p.iter().zip(image.iter()) {
        for r in 0..n {
            for c in r..n {
                let w = if r == c { 1.0 } else { std::f64::consts::SQRT_2 };
                out.push(w * (pi[(r, c)] - fi[(r, c)]));
            }
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// `sum_i ||P^i - f(P)^i||_F^2`.
pub fn fixed_point_objective(game: &GameSpec, p: &PTuple) -> Option<f64> {
    residual_vector(game, &pack(p)).map(|r| r.iter().map(|v| v * v).sum())
}

/// Minimizes the fixed-point objective from one start with a damped
/// Gauss-Newton (Levenberg-Marquardt) iteration on central-difference
/// Jacobians. Returns the final point and objective.
pub fn descend(game: &GameSpec, init: &PTuple, opts: &DescentOptions) -> Option<(PTuple, f64)> {
    let mut x = pack(init);
    let dim = x.len();
    let mut r = residual_vector(game, &x)?;
    let mut phi: f64 = r.iter().map(|v| v * v).sum();
    let mut damping = 1e-3;
    for _ in 0..opts.max_iterations {
        if phi < opts.accept_objective * 1e-6 {
            break;
        }
        let mut jac = Matrix::zeros(r.len(), dim);
        for c in 0..dim {
            let h = 1e-7 * x[c].abs().max(1.0);
            let mut up = x.clone();
            let mut dn = x.clone();
            up[c] += h;
            dn[c] -= h;
            let (fu, fd) = match (residual_vector(game, &up), residual_vector(game, &dn)) {
                (Some(fu), Some(fd)) => (fu, fd),
                _ => return Some((unpack(&x, game.num_agents(), game.state_dim()), phi)),
            };
            for row in 0..r.len() {
                jac[(row, c)] = (fu[row] - fd[row]) / (2.0 * h);
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * Matrix::from_column_slice(r.len(), 1, &r);
        let mut accepted = false;
        while damping < 1e16 {
            let mut lhs = jtj.clone();
            for d in 0..dim {
                lhs[(d, d)] += damping * (1.0 + jtj[(d, d)]);
            }
            let Some(delta) = lhs.lu().solve(&(-&grad)) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            if let Some(rt) = residual_vector(game, &trial) {
                let phi_t: f64 = rt.iter().map(|v| v * v).sum();
                if phi_t < phi {
                    x = trial;
                    r = rt;
                    phi = phi_t;
                    damping = (damping / 5.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Some((unpack(&x, game.num_agents(), game.state_dim()), phi))
}

/// Stationary equilibria reached by residual descent from `inits` plus
/// `opts.random_restarts` random positive definite starts. A point is kept
/// when its objective is below `opts.accept_objective` and it passes Nash
/// verification.
pub fn residual_descent_search(game: &GameSpec, inits: &[PTuple], opts: &DescentOptions) -> EquilibriumSet {
    let mut starts: Vec<PTuple> = inits.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_restarts {
        let scale = 10f64.powf(rng.random_range(-1.0..2.0));
        let entries = (0..game.num_agents()).map(|_| random_spd(game.state_dim(), &mut rng) * scale).collect();
        starts.push(PTuple::new(entries));
    }
    let results: Vec<Option<(PTuple, f64)>> = starts.par_iter().map(|s| descend(game, s, opts)).collect();

    let mut set = EquilibriumSet {
        points: Vec::new(),
        method: SearchMethod::Descent,
        metadata: SearchMetadata {
            description: format!("{} initializations ({} random)", starts.len(), opts.random_restarts),
            candidates: 0,
            rejected: 0,
        },
    };
    for (p, phi) in results.into_iter().flatten() {
        if phi >= opts.accept_objective {
            continue;
        }
        set.metadata.candidates += 1;
        if set.contains(&p, DISTINCT_TOL) {
            continue;
        }
        match verify_point(game, p) {
            Some(point) => set.push_distinct(point),
            None => set.metadata.rejected += 1,
        }
    }
    set
}

/// `count x count` log-spaced scalar initializations over `[lo, hi]^2`.
pub fn scalar_init_grid(count: usize, lo: f64, hi: f64) -> Vec<PTuple> {
    let axis: Vec<f64> =
        (0..count).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (count.max(2) - 1) as f64).exp()).collect();
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| PTuple::scalars(&[a, b]))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_equilibrium_game() -> GameSpec {
        GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0])
    }

    #[test]
    fn pack_round_trip() {
        let p = PTuple::new(vec![Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]); 2]);
        assert_eq!(unpack(&pack(&p), 2, 2), p);
    }

    #[test]
    fn enumerator_requires_scalar_two_agent_game() {
        let g = GameSpec::scalar(1.0, &[1.0], &[1.0], &[1.0]);
        assert!(matches!(scalar_two_agent_equilibria(&g), Err(Error::Precondition(_))));
    }

    #[test]
    fn descent_finds_golden_ratio() {
        let g = GameSpec::scalar(1.0, &[1.0], &[1.0], &[1.0]);
        let opts = DescentOptions { random_restarts: 0, ..Default::default() };
        let set = residual_descent_search(&g, &[PTuple::scalars(&[1.0])], &opts);
        assert_eq!(set.points.len(), 1);
        assert!((set.points[0].p[0][(0, 0)] - 1.618_033_988_749_895).abs() < 1e-10);
    }

    #[test]
    fn scalar_game_has_three_equilibria() {
        let set = scalar_two_agent_equilibria(&three_equilibrium_game()).unwrap();
        assert_eq!(set.points.len(), 3);
    }
}
