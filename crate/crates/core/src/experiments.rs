//! Seeded experiment campaigns: terminal-cost basin maps, random-game regime
//! ensembles and cycle-length censuses.
//!
//! Every trial draws from its own generator seeded by `(master seed, cell,
//! trial index)`, so results do not depend on scheduling or on which other
//! cells run alongside.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{classify, nash_verify_stationary, Classification, ClassifyOptions, CycleCertificate, Verdict};
use crate::equilibria::{scalar_two_agent_equilibria, EquilibriumSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{validate_game, GameSpec, PTuple};

pub const GENERATION_ATTEMPTS: usize = 100;

/// Default cap on games examined per census cell.
pub const CENSUS_EXAMINATION_CAP: usize = 1_000_000;

/// Converged fixed points farther than this from every equilibrium stay unlabeled.
pub const LABEL_DISTANCE: f64 = 1e-4;

/// Ensemble grid cell: state dimension, common input dimension, agent count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub agents: usize,
}

impl Cell {
    pub fn new(n: usize, m: usize, agents: usize) -> Self {
        Self { n, m, agents }
    }

    fn stream(&self) -> u64 {
        ((self.n as u64) << 40) ^ ((self.m as u64) << 20) ^ self.agents as u64
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.n, self.m, self.agents)
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| Error::Parse(format!("cell `{s}`: `{p}` is not a positive integer")))
        };
        match parts.as_slice() {
            [n, m, agents] => Ok(Cell::new(parse(n)?, parse(m)?, parse(agents)?)),
            _ => Err(Error::Parse(format!("cell `{s}` must be an `n,m,N` triple"))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in `cell` under `master_seed`.
pub fn trial_seed(master_seed: u64, cell: Cell, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ cell.stream()) ^ trial)
}

fn uniform_matrix<R: Rng>(rows: usize, cols: usize, half_width: f64, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-half_width..=half_width))
}

/// `G G' + 0.1 I` with standard normal `G`.
pub fn random_spd<R: Rng>(dim: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose() + Matrix::identity(dim, dim) * 0.1
}

/// Random game: `A ~ U[-2, 2]`, `B^i ~ U[-1, 1]`, `Q^i, R^i = G G' + 0.1 I`.
/// Resampled until it validates.
pub fn random_game<R: Rng>(n: usize, m: usize, agents: usize, rng: &mut R) -> Result<GameSpec> {
    if n == 0 || m == 0 || agents == 0 {
        return Err(Error::Precondition("n, m and N must be at least 1".into()));
    }
    for _ in 0..GENERATION_ATTEMPTS {
        let a = uniform_matrix(n, n, 2.0, rng);
        let b = (0..agents).map(|_| uniform_matrix(n, m, 1.0, rng)).collect();
        let q = (0..agents).map(|_| random_spd(n, rng)).collect();
        let r = (0..agents).map(|_| random_spd(m, rng)).collect();
        let game = GameSpec::new(a, b, q, r, None);
        if validate_game(&game).ok {
            return Ok(game);
        }
    }
    Err(Error::GenerationFailed { attempts: GENERATION_ATTEMPTS })
}

/// Terminal costs drawn like `Q`.
pub fn random_terminal<R: Rng>(game: &GameSpec, rng: &mut R) -> PTuple {
    PTuple::new((0..game.num_agents()).map(|_| random_spd(game.state_dim(), rng)).collect())
}

/// The game and terminal cost of one ensemble trial.
pub fn trial_instance(cell: Cell, master_seed: u64, trial: u64) -> Result<(GameSpec, PTuple)> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, cell, trial));
    let game = random_game(cell.n, cell.m, cell.agents, &mut rng)?;
    let terminal = random_terminal(&game, &mut rng);
    Ok((game, terminal))
}

/// Per-regime counts for one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegimeCounts {
    pub converged: usize,
    pub cycle: usize,
    pub non_convergent: usize,
    pub diverged: usize,
    pub singular: usize,
    pub generation_failed: usize,
}

impl RegimeCounts {
    pub fn total(&self) -> usize {
        self.converged + self.cycle + self.non_convergent + self.diverged + self.singular + self.generation_failed
    }

    pub fn record(&mut self, verdict: Option<Verdict>) {
        match verdict {
            Some(Verdict::Converged) => self.converged += 1,
            Some(Verdict::Cycle) => self.cycle += 1,
            Some(Verdict::BoundedNonConvergent) => self.non_convergent += 1,
            Some(Verdict::Diverged) => self.diverged += 1,
            Some(Verdict::SingularStage) => self.singular += 1,
            None => self.generation_failed += 1,
        }
    }

    pub fn percent(&self, count: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            t => 100.0 * count as f64 / t as f64,
        }
    }

    pub fn converged_fraction(&self) -> f64 {
        self.percent(self.converged) / 100.0
    }
}

/// One classified ensemble trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    /// `None` when game generation failed.
    pub classification: Option<Classification>,
}

#[derive(Debug, Clone)]
pub struct EnsembleCell {
    pub cell: Cell,
    pub counts: RegimeCounts,
    pub trials: Vec<TrialOutcome>,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub cells: Vec<EnsembleCell>,
    pub trials_per_cell: usize,
    pub master_seed: u64,
}

fn run_trial(cell: Cell, master_seed: u64, trial: u64, opts: &ClassifyOptions) -> TrialOutcome {
    let seed = trial_seed(master_seed, cell, trial);
    let classification =
        trial_instance(cell, master_seed, trial).ok().map(|(game, terminal)| classify(&game, terminal, opts));
    TrialOutcome { trial, seed, classification }
}

/// Classifies `trials` random games per cell.
pub fn run_ensemble(cells: &[Cell], trials: usize, master_seed: u64, opts: &ClassifyOptions) -> EnsembleReport {
    let cells = cells
        .iter()
        .map(|&cell| {
            let outcomes: Vec<TrialOutcome> =
                (0..trials as u64).into_par_iter().map(|t| run_trial(cell, master_seed, t, opts)).collect();
            let mut counts = RegimeCounts::default();
            for o in &outcomes {
                counts.record(o.classification.as_ref().map(Classification::verdict));
            }
            EnsembleCell { cell, counts, trials: outcomes }
        })
        .collect();
    EnsembleReport { cells, trials_per_cell: trials, master_seed }
}

#[derive(Debug, Clone)]
pub struct CensusCell {
    pub cell: Cell,
    /// Minimal period -> number of certified cycles.
    pub histogram: BTreeMap<usize, usize>,
    pub games_examined: usize,
    /// `(trial index, certificate)` for every counted cycle.
    pub certificates: Vec<(u64, CycleCertificate)>,
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct CycleCensus {
    pub target_count: usize,
    pub cells: Vec<CensusCell>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct CensusOptions {
    pub classify: ClassifyOptions,
    pub examination_cap: usize,
    pub batch: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self { classify: ClassifyOptions::default(), examination_cap: CENSUS_EXAMINATION_CAP, batch: 64 }
    }
}

/// Generates games per cell until `target` certified cycles are collected.
/// Trials are taken in index order, so the result is independent of the
/// batch size and of scheduling.
pub fn cycle_census(cells: &[Cell], target: usize, master_seed: u64, opts: &CensusOptions) -> Result<CycleCensus> {
    if target == 0 {
        return Err(Error::Precondition("census target must be at least 1".into()));
    }
    let mut census = CycleCensus { target_count: target, cells: Vec::new(), master_seed };
    for &cell in cells {
        let mut entry = CensusCell {
            cell,
            histogram: BTreeMap::new(),
            games_examined: 0,
            certificates: Vec::new(),
            complete: false,
        };
        let mut next = 0u64;
        'cell: while entry.games_examined < opts.examination_cap {
            let end = (next + opts.batch.max(1) as u64).min(opts.examination_cap as u64);
            let outcomes: Vec<TrialOutcome> =
                (next..end).into_par_iter().map(|t| run_trial(cell, master_seed, t, &opts.classify)).collect();
            next = end;
            for outcome in outcomes {
                entry.games_examined += 1;
                if let Some(Classification::Cycle(cert)) = outcome.classification {
                    *entry.histogram.entry(cert.period).or_default() += 1;
                    entry.certificates.push((outcome.trial, *cert));
                    if entry.certificates.len() == target {
                        entry.complete = true;
                        break 'cell;
                    }
                }
            }
        }
        census.cells.push(entry);
    }
    if census.cells.iter().all(|c| c.complete) {
        Ok(census)
    } else {
        Err(Error::CensusIncomplete { census: Box::new(census) })
    }
}

/// One terminal-cost grid point of a basin map.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinCell {
    pub terminal: (f64, f64),
    pub verdict: Verdict,
    /// Index into the equilibrium set of the matched limit.
    pub label: Option<usize>,
    pub steps_to_converge: Option<usize>,
    pub fixed_point: Option<PTuple>,
}

#[derive(Debug, Clone)]
pub struct BasinMap {
    pub axis: Vec<f64>,
    /// Row-major over `(Q_T^1 index, Q_T^2 index)`.
    pub cells: Vec<BasinCell>,
    pub equilibria: Option<EquilibriumSet>,
}

impl BasinMap {
    pub fn label_counts(&self) -> Vec<usize> {
        let k = self.equilibria.as_ref().map_or(0, |e| e.points.len());
        let mut counts = vec![0; k];
        for c in &self.cells {
            if let Some(l) = c.label {
                counts[l] += 1;
            }
        }
        counts
    }

    pub fn verdict_count(&self, verdict: Verdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == verdict).count()
    }
}

/// `samples` evenly spaced points in the half-open interval `(lo, hi]`.
pub fn grid_axis(samples: usize, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / samples as f64;
    (1..=samples).map(|k| lo + step * k as f64).collect()
}

/// Classifies every `(Q_T^1, Q_T^2)` on a square grid for a scalar two-agent
/// game and labels converged cells by the nearest enumerated equilibrium.
pub fn run_basin_grid(
    game: &GameSpec,
    axis_samples: usize,
    q_range: (f64, f64),
    opts: &ClassifyOptions,
) -> Result<BasinMap> {
    if game.state_dim() != 1 || game.num_agents() != 2 {
        return Err(Error::Precondition("basin maps need a scalar two-agent game".into()));
    }
    let equilibria = match scalar_two_agent_equilibria(game) {
        Ok(set) => Some(set),
        Err(Error::NoEquilibriumFound) => None,
        Err(e) => return Err(e),
    };
    let axis = grid_axis(axis_samples, q_range.0, q_range.1);
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let cells = points
        .into_par_iter()
        .map(|(q1, q2)| {
            let verdict = classify(game, PTuple::scalars(&[q1, q2]), opts);
            let mut cell = BasinCell {
                terminal: (q1, q2),
                verdict: verdict.verdict(),
                label: None,
                steps_to_converge: None,
                fixed_point: None,
            };
            if let Classification::Converged { fixed_point, steps_to_converge } = verdict {
                cell.steps_to_converge = Some(steps_to_converge);
                cell.label = equilibria.as_ref().and_then(|set| set.nearest(&fixed_point, LABEL_DISTANCE));
                cell.fixed_point = Some(fixed_point);
            }
            cell
        })
        .collect();
    Ok(BasinMap { axis, cells, equilibria })
}

/// Whether a converged basin cell's limit passes Nash verification.
pub fn basin_cell_is_nash(game: &GameSpec, cell: &BasinCell, tol: f64) -> bool {
    cell.fixed_point.as_ref().and_then(|p| nash_verify_stationary(p, game, tol).ok()).is_some_and(|r| r.pass)
}
