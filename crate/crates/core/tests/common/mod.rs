//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use lqgame::experiments::{random_game, random_spd};
use lqgame::{GameSpec, Matrix, PTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The three-equilibrium scalar game: A = 5, B = (1, 1), Q = (1, 1), R = (1, 2).
pub fn three_equilibrium_game() -> GameSpec {
    GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0])
}

/// A random valid game with `n <= 3`, `m <= 2`, `N <= 3` and a random
/// positive definite tuple, both derived from `seed`.
pub fn random_case(seed: u64) -> (GameSpec, PTuple) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=2);
    let agents = rng.random_range(1..=3);
    let game = random_game(n, m, agents, &mut rng).expect("random games are valid");
    let p = PTuple::new((0..agents).map(|_| random_spd(n, &mut rng)).collect());
    (game, p)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Per-agent `||a^i - b^i||_F / (1 + ||a^i||_F)`, maximized over agents.
pub fn rel_gap(a: &PTuple, b: &PTuple) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm() / (1.0 + x.norm())).fold(0.0, f64::max)
}

/// Positive root of the scalar algebraic Riccati equation
/// `b^2 p^2 + (r - q b^2 - a^2 r) p - q r = 0`.
pub fn scalar_dare(a: f64, b: f64, q: f64, r: f64) -> f64 {
    let (qa, qb, qc) = (b * b, r - q * b * b - a * a * r, -q * r);
    (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
}

/// Stationary stabilizing equilibria of a scalar two-agent game, computed
/// along the closed-loop coefficient `c = A^cl`.
///
/// At a stationary point `K^i = b_i p_i c / r_i`, so `c (1 + sum s_i p_i) = a`
/// with `s_i = b_i^2 / r_i`, and each value equation reduces to
/// `s_i c^2 p_i^2 - (1 - c^2) p_i + q_i = 0`. Every branch pair of those
/// quadratics is scanned over `|c| < 1` for roots of
/// `h(c) = c (1 + sum s_i p_i(c)) - a`, refined by bisection.
pub fn scalar_pair_oracle(a: f64, b: [f64; 2], q: [f64; 2], r: [f64; 2]) -> Vec<[f64; 2]> {
    let s = [b[0] * b[0] / r[0], b[1] * b[1] / r[1]];
    let branch = |i: usize, c: f64, plus: bool| -> Option<f64> {
        let (qa, qb, qc) = (s[i] * c * c, -(1.0 - c * c), q[i]);
        if qa == 0.0 {
            return Some(-qc / qb);
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let root = if plus { (-qb + disc.sqrt()) / (2.0 * qa) } else { (-qb - disc.sqrt()) / (2.0 * qa) };
        (root > 0.0).then_some(root)
    };
    let h = |c: f64, br: [bool; 2]| -> Option<f64> {
        let p0 = branch(0, c, br[0])?;
        let p1 = branch(1, c, br[1])?;
        Some(c * (1.0 + s[0] * p0 + s[1] * p1) - a)
    };
    let mut out: Vec<[f64; 2]> = Vec::new();
    let samples = 200_000;
    for br in [[false, false], [false, true], [true, false], [true, true]] {
        let cs: Vec<f64> = (1..samples).map(|k| -1.0 + 2.0 * k as f64 / samples as f64).collect();
        for w in cs.windows(2) {
            let (Some(h0), Some(h1)) = (h(w[0], br), h(w[1], br)) else { continue };
            if h0 == 0.0 || h0.signum() != h1.signum() {
                let (mut lo, mut hi, mut hlo) = (w[0], w[1], h0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let Some(hm) = h(mid, br) else { break };
                    if hm.signum() == hlo.signum() {
                        lo = mid;
                        hlo = hm;
                    } else {
                        hi = mid;
                    }
                }
                let c = 0.5 * (lo + hi);
                // A sign change through the pole at c = 0 is not a root.
                if h(c, br).is_none_or(|v| v.abs() > 1e-6 * (1.0 + a.abs())) {
                    continue;
                }
                if let (Some(p0), Some(p1)) = (branch(0, c, br[0]), branch(1, c, br[1])) {
                    let p = [p0, p1];
                    let dup = out.iter().any(|o| (0..2).all(|i| (o[i] - p[i]).abs() <= 1e-7 * (1.0 + p[i])));
                    if !dup {
                        out.push(p);
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| x[0].total_cmp(&y[0]));
    out
}
