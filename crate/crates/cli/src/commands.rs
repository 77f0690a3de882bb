//! Settings and handlers of the subcommands.
//!
//! Every settings field is optional so that flags, config-file values and
//! defaults can be layered; `with_defaults` fills what is still unset, and
//! the filled struct is what gets echoed as the resolved configuration.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use lqgame::analysis::{
    classify_with_trace, verify_cycle, CertifyTolerances, Classification, ClassifyOptions, CycleCertificate, Verdict,
};
use lqgame::equilibria::{residual_descent_search, scalar_two_agent_equilibria, DescentOptions, EquilibriumSet};
use lqgame::experiments::{cycle_census, run_basin_grid, run_ensemble, Cell, CensusOptions, CycleCensus};
use lqgame::export::{self, FigureSeries, Provenance};
use lqgame::riccati::{run_recursion, ConvergenceStop, NoStop, RecursionTrace, StopRule, Termination};
use lqgame::simulation::{deviation_test, finite_horizon_cost, simulate, Vector};
use lqgame::{io, validate_game, Error, GameSpec, PTuple};

use crate::failure::Failure;
use crate::output::OutputDir;

pub trait Task {
    const NAME: &'static str;

    /// Fills every unset field with its default.
    fn with_defaults(self) -> Self;

    /// Checks required settings and input paths before any output is made.
    fn check(&self) -> Result<(), Failure>;

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure>;
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    value.as_ref().ok_or_else(|| Failure::Usage(format!("missing required setting --{flag}")))
}

fn existing(path: &Option<PathBuf>, flag: &str) -> Result<(), Failure> {
    if let Some(p) = path {
        if !p.is_file() {
            return Err(Failure::Usage(format!("--{flag}: file not found: {}", p.display())));
        }
    }
    Ok(())
}

fn load_game(path: &Option<PathBuf>) -> Result<GameSpec, Failure> {
    let path = required(path, "game")?;
    io::load_game(path).map_err(|e| Failure::reading(path, e))
}

/// The terminal file if given, otherwise `Q_T = Q`.
fn load_terminal(path: &Option<PathBuf>, game: &GameSpec) -> Result<PTuple, Failure> {
    match path {
        None => Ok(game.q_tuple()),
        Some(path) => {
            let p = io::read_tuple(path).map_err(|e| Failure::reading(path, e))?;
            io::check_tuple_shape(&p, game).map_err(|e| Failure::reading(path, e))?;
            Ok(p)
        }
    }
}

fn parse_cells(cells: &[String]) -> Result<Vec<Cell>, Failure> {
    cells.iter().map(|c| c.parse::<Cell>().map_err(|e| Failure::Usage(e.to_string()))).collect()
}

fn parse_range(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("range `{s}` must be `lo:hi` with 0 <= lo < hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_vector(s: &str, n: usize) -> Result<Vector, Failure> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("x0 `{s}` must be comma-separated numbers")))?;
    if values.len() != n {
        return Err(Failure::Usage(format!("x0 has {} entries, the state has {n}", values.len())));
    }
    Ok(Vector::from_vec(values))
}

fn write_figures(
    out: &mut OutputDir,
    series: &FigureSeries,
    game: &GameSpec,
    prov: &Provenance,
) -> Result<(), Failure> {
    let dir = out.path().join("figures");
    std::fs::create_dir_all(&dir)?;
    export::export_trace_figures(series, game, &dir, prov)?;
    out.artifact("figures/gains.csv", "gain entries over forward time");
    out.artifact("figures/frobenius.csv", "||P_(t+1) - P_0||_F per agent over forward time");
    out.artifact("figures/spectral_radius.csv", "closed-loop spectral radius over forward time");
    Ok(())
}

fn write_certificate(
    out: &mut OutputDir,
    cert: &CycleCertificate,
    game: &GameSpec,
    prov: &Provenance,
) -> Result<(), Failure> {
    out.json("certificate.json", "cycle certificate", &export::certificate_json(cert, prov))?;
    out.text("phases.json", "cycle phases, readable by verify-cycle", &io::phases_to_string(&cert.phases)?)?;
    export::write_phase_radii_csv(out.file("phase_radii.csv", "per-phase closed-loop spectral radius")?, cert, prov)?;
    write_figures(out, &FigureSeries::from_certificate(cert, game, 4), game, prov)
}

/// Recursion and classification tolerances shared by several commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum number of backward steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Relative step change that counts as converged.
    #[arg(long)]
    pub convergence_tol: Option<f64>,
    /// Consecutive steps below the convergence tolerance.
    #[arg(long)]
    pub convergence_window: Option<usize>,
    /// Mismatch tolerance for cycle detection and certification.
    #[arg(long)]
    pub cycle_tol: Option<f64>,
    /// Longest period searched for.
    #[arg(long)]
    pub max_period: Option<usize>,
}

impl Tolerances {
    fn with_defaults(self, horizon: usize) -> Self {
        let d = ClassifyOptions::default();
        Self {
            horizon: self.horizon.or(Some(horizon)),
            convergence_tol: self.convergence_tol.or(Some(d.convergence_tol)),
            convergence_window: self.convergence_window.or(Some(d.convergence_window)),
            cycle_tol: self.cycle_tol.or(Some(d.cycle_tol)),
            max_period: self.max_period.or(Some(d.max_period)),
        }
    }

    fn options(&self) -> ClassifyOptions {
        let mut o = ClassifyOptions::default();
        o.horizon = self.horizon.unwrap_or(o.horizon);
        o.convergence_tol = self.convergence_tol.unwrap_or(o.convergence_tol);
        o.convergence_window = self.convergence_window.unwrap_or(o.convergence_window);
        o.cycle_tol = self.cycle_tol.unwrap_or(o.cycle_tol);
        o.certify.cycle = o.cycle_tol;
        o.max_period = self.max_period.unwrap_or(o.max_period);
        o
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Validate {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
}

impl Task for Validate {
    const NAME: &'static str = "validate";

    fn with_defaults(self) -> Self {
        self
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let path = required(&self.game, "game")?;
        let game = io::read_game(path).map_err(|e| Failure::reading(path, e))?;
        let report = validate_game(&game);
        let value = json!({
            "ok": report.ok,
            "stabilizable": report.stabilizable,
            "definiteness_failures": report.definiteness_failures.iter()
                .map(|(name, min)| json!({ "matrix": name, "min_eigenvalue": min }))
                .collect::<Vec<_>>(),
            "dimension_failures": report.dimension_failures,
            "symmetry_failures": report.symmetry_failures,
            "summary": report.summary(),
        });
        out.json("validation.json", "validation report", &value)?;
        if report.ok {
            println!("valid: n = {}, N = {}, input dims {:?}", game.state_dim(), game.num_agents(), game.input_dims());
            Ok(())
        } else {
            Err(Failure::Domain(format!("invalid game: {}", report.summary())))
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Run {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Terminal cost file `{"P": [...]}`; defaults to Q.
    #[arg(long)]
    pub terminal: Option<PathBuf>,
    /// Number of backward steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Stop early once the recursion has converged.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stop_on_convergence: Option<bool>,
    /// Relative step change that counts as converged.
    #[arg(long)]
    pub convergence_tol: Option<f64>,
    /// Consecutive steps below the convergence tolerance.
    #[arg(long)]
    pub convergence_window: Option<usize>,
}

impl Task for Run {
    const NAME: &'static str = "run";

    fn with_defaults(self) -> Self {
        let d = ClassifyOptions::default();
        Self {
            horizon: self.horizon.or(Some(100)),
            stop_on_convergence: self.stop_on_convergence.or(Some(false)),
            convergence_tol: self.convergence_tol.or(Some(d.convergence_tol)),
            convergence_window: self.convergence_window.or(Some(d.convergence_window)),
            ..self
        }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")?;
        existing(&self.terminal, "terminal")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let terminal = load_terminal(&self.terminal, &game)?;
        let horizon = self.horizon.unwrap_or(100);
        let tol = self.convergence_tol.unwrap_or(1e-9);
        let window = self.convergence_window.unwrap_or(10);
        let mut stop: Box<dyn StopRule> = if self.stop_on_convergence == Some(true) {
            Box::new(ConvergenceStop::new(tol, window))
        } else {
            Box::new(NoStop)
        };
        let trace = run_recursion(&game, terminal.clone(), horizon, stop.as_mut());
        let prov = Provenance::new()
            .with("seed", "none")
            .with("horizon", horizon)
            .with("convergence_tol", tol)
            .with("convergence_window", window);

        let deviation = trace.states().map(|(_, p)| terminal.max_agent_relative_distance(p)).fold(0.0, f64::max);
        let max_rho =
            lqgame::analysis::closed_loop_radii(&trace, &game).into_iter().map(|(_, r)| r).fold(0.0, f64::max);
        let mut term = export::termination_json(&trace, &prov);
        term["max_deviation_from_terminal"] = json!(deviation);
        term["max_closed_loop_spectral_radius"] = json!(max_rho);
        export::write_trace_csv(out.file("trace.csv", "P and K per backward step and agent")?, &trace, &game, &prov)?;
        out.json("termination.json", "termination record", &term)?;
        write_figures(out, &FigureSeries::from_trace(&trace, &game), &game, &prov)?;

        let t = trace.termination();
        println!(
            "{} after {} steps; max relative deviation from terminal {deviation:e}; max rho(A_cl) {max_rho}",
            t.reason(),
            trace.last_index()
        );
        match t {
            Termination::Diverged { step, norm } => {
                Err(Failure::Domain(format!("recursion diverged at step {step} (norm {norm:e})")))
            }
            Termination::Singular { step, rcond } => {
                Err(Failure::Domain(format!("singular stage system at step {step} (rcond {rcond:e})")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Classify {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Terminal cost file `{"P": [...]}`; defaults to Q.
    #[arg(long)]
    pub terminal: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tolerances: Tolerances,
}

impl Task for Classify {
    const NAME: &'static str = "classify";

    fn with_defaults(self) -> Self {
        Self { tolerances: self.tolerances.with_defaults(ClassifyOptions::default().horizon), ..self }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")?;
        existing(&self.terminal, "terminal")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let terminal = load_terminal(&self.terminal, &game)?;
        let opts = self.tolerances.options();
        let prov = Provenance::new().with("seed", "none").classify_options(&opts);
        let (class, trace) = classify_with_trace(&game, terminal, &opts);

        out.json("classification.json", "verdict with evidence", &export::classification_json(&class, &game, &prov))?;
        export::write_trace_csv(out.file("trace.csv", "stored window of the trace")?, &trace, &game, &prov)?;
        out.json("termination.json", "termination record", &export::termination_json(&trace, &prov))?;
        match &class {
            Classification::Cycle(cert) => write_certificate(out, cert, &game, &prov)?,
            _ => write_figures(out, &FigureSeries::from_trace(&trace, &game), &game, &prov)?,
        }

        match &class {
            Classification::Converged { steps_to_converge, .. } => {
                println!("converged after {steps_to_converge} steps")
            }
            Classification::Cycle(cert) => println!(
                "cycle of period {} (rho of period product {}, largest phase rho {})",
                cert.period,
                cert.product_spectral_radius,
                cert.phase_spectral_radii.iter().copied().fold(0.0, f64::max)
            ),
            Classification::BoundedNonConvergent { sup_norm, steps_observed } => {
                println!("non_convergent over {steps_observed} steps (sup norm {sup_norm:e})")
            }
            Classification::Diverged { step } => return Err(Failure::Domain(format!("diverged at step {step}"))),
            Classification::SingularStage { step, rcond } => {
                return Err(Failure::Domain(format!("singular stage system at step {step} (rcond {rcond:e})")))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Basin {
    /// Scalar two-agent game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Samples per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Terminal-cost interval `lo:hi`, sampled as (lo, hi].
    #[arg(long)]
    pub range: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tolerances: Tolerances,
}

impl Task for Basin {
    const NAME: &'static str = "basin";

    fn with_defaults(self) -> Self {
        Self {
            grid: self.grid.or(Some(100)),
            range: self.range.or(Some("0.3:30".into())),
            tolerances: self.tolerances.with_defaults(ClassifyOptions::default().horizon),
            ..self
        }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")?;
        parse_range(required(&self.range, "range")?)?;
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let range = parse_range(required(&self.range, "range")?)?;
        let grid = self.grid.unwrap_or(100);
        let opts = self.tolerances.options();
        let prov = Provenance::new()
            .with("seed", "none")
            .with("grid", grid)
            .with("range", format!("{}:{}", range.0, range.1))
            .classify_options(&opts);
        let map = run_basin_grid(&game, grid, range, &opts)?;
        export::write_basin_csv(
            out.file("basin.csv", "verdict and equilibrium label per terminal cost")?,
            &map,
            &prov,
        )?;
        if let Some(set) = &map.equilibria {
            export::write_equilibria_csv(out.file("equilibria.csv", "equilibria used as labels")?, set, &game, &prov)?;
        }

        let total = map.cells.len().max(1) as f64;
        let mut summary = String::new();
        for v in [
            Verdict::Converged,
            Verdict::Cycle,
            Verdict::BoundedNonConvergent,
            Verdict::Diverged,
            Verdict::SingularStage,
        ] {
            let c = map.verdict_count(v);
            summary += &format!("{v}: {c} ({:.2}%)\n", 100.0 * c as f64 / total);
        }
        for (i, c) in map.label_counts().iter().enumerate() {
            summary += &format!("equilibrium {}: {c} cells ({:.2}%)\n", i + 1, 100.0 * *c as f64 / total);
        }
        let unmatched = map.cells.iter().filter(|c| c.verdict == Verdict::Converged && c.label.is_none()).count();
        summary += &format!("converged but unmatched: {unmatched}\n");
        out.text("summary.txt", "verdict and label shares", &summary)?;
        print!("{summary}");
        Ok(())
    }
}

fn default_cells() -> Vec<String> {
    let mut cells = Vec::new();
    for n in 1..=3 {
        for agents in 2..=4 {
            cells.push(format!("{n},{n},{agents}"));
        }
    }
    cells
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Ensemble {
    /// Cells as `n,m,N`; repeat the flag or list several.
    #[arg(long, num_args = 1..)]
    pub cells: Option<Vec<String>>,
    /// Random games per cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tolerances: Tolerances,
}

impl Task for Ensemble {
    const NAME: &'static str = "ensemble";

    fn with_defaults(self) -> Self {
        Self {
            cells: self.cells.or_else(|| Some(default_cells())),
            trials: self.trials.or(Some(1000)),
            seed: self.seed.or(Some(0)),
            tolerances: self.tolerances.with_defaults(ClassifyOptions::default().horizon),
        }
    }

    fn check(&self) -> Result<(), Failure> {
        parse_cells(required(&self.cells, "cells")?)?;
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let cells = parse_cells(required(&self.cells, "cells")?)?;
        let trials = self.trials.unwrap_or(1000);
        let seed = self.seed.unwrap_or(0);
        let opts = self.tolerances.options();
        let prov = Provenance::new().seed(seed).classify_options(&opts);
        let report = run_ensemble(&cells, trials, seed, &opts);
        export::write_ensemble_csv(
            out.file("ensemble.csv", "regime counts and percentages per cell")?,
            &report,
            &prov,
        )?;
        export::write_trials_csv(out.file("trials.csv", "verdict per trial")?, &report, &prov)?;
        let tables = export::ensemble_tables(&report);
        out.text("tables.txt", "regime percentage tables", &tables)?;
        print!("{tables}");
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Census {
    /// Cells as `n,m,N`; repeat the flag or list several.
    #[arg(long, num_args = 1..)]
    pub cells: Option<Vec<String>>,
    /// Certified cycles to collect per cell.
    #[arg(long)]
    pub target: Option<usize>,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Most games examined per cell before giving up.
    #[arg(long)]
    pub cap: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tolerances: Tolerances,
}

impl Task for Census {
    const NAME: &'static str = "census";

    fn with_defaults(self) -> Self {
        Self {
            cells: self.cells.or_else(|| Some(vec!["2,2,2".into()])),
            target: self.target.or(Some(50)),
            seed: self.seed.or(Some(0)),
            cap: self.cap.or(Some(CensusOptions::default().examination_cap)),
            tolerances: self.tolerances.with_defaults(ClassifyOptions::default().horizon),
        }
    }

    fn check(&self) -> Result<(), Failure> {
        parse_cells(required(&self.cells, "cells")?)?;
        if self.target == Some(0) {
            return Err(Failure::Usage("--target must be at least 1".into()));
        }
        Ok(())
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let cells = parse_cells(required(&self.cells, "cells")?)?;
        let target = self.target.unwrap_or(50);
        let seed = self.seed.unwrap_or(0);
        let opts = CensusOptions {
            classify: self.tolerances.options(),
            examination_cap: self.cap.unwrap_or(CensusOptions::default().examination_cap),
            ..CensusOptions::default()
        };
        let prov = Provenance::new().seed(seed).with("cap", opts.examination_cap).classify_options(&opts.classify);
        let (census, incomplete) = match cycle_census(&cells, target, seed, &opts) {
            Ok(c) => (c, false),
            Err(Error::CensusIncomplete { census }) => (*census, true),
            Err(e) => return Err(e.into()),
        };
        write_census(out, &census, &prov)?;
        if incomplete {
            let short: Vec<String> = census.cells.iter().filter(|c| !c.complete).map(|c| c.cell.to_string()).collect();
            return Err(Failure::Domain(format!(
                "census incomplete: examination cap reached in cell(s) {}",
                short.join("; ")
            )));
        }
        Ok(())
    }
}

fn write_census(out: &mut OutputDir, census: &CycleCensus, prov: &Provenance) -> Result<(), Failure> {
    export::write_census_csv(out.file("census.csv", "cycle-length histogram per cell")?, census, prov)?;
    export::write_census_certificates_csv(
        out.file("certificates.csv", "summary of every stored certificate")?,
        census,
        prov,
    )?;
    let all: Vec<Value> = census
        .cells
        .iter()
        .flat_map(|c| {
            c.certificates.iter().map(move |(trial, cert)| {
                let mut v = export::certificate_json(cert, &Provenance::new());
                v["cell"] = json!(c.cell.to_string());
                v["trial"] = json!(trial);
                v.as_object_mut().map(|o| o.remove("provenance"));
                v
            })
        })
        .collect();
    out.json(
        "certificates.json",
        "every stored certificate in full",
        &json!({ "certificates": all, "provenance": prov.to_json() }),
    )?;
    let table = export::census_table(census);
    out.text("census.txt", "cycle-length histograms", &table)?;
    print!("{table}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Grid enumeration for scalar two-agent games, descent otherwise.
    Auto,
    /// Exhaustive grid enumeration (scalar two-agent games only).
    Enumerate,
    /// Residual descent from many initializations.
    Descent,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Equilibria {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Random starting points for descent.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Seed of the random starting points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap per descent run.
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl Task for Equilibria {
    const NAME: &'static str = "equilibria";

    fn with_defaults(self) -> Self {
        let d = DescentOptions::default();
        Self {
            method: self.method.or(Some(Method::Auto)),
            restarts: self.restarts.or(Some(d.random_restarts)),
            seed: self.seed.or(Some(d.seed)),
            max_iterations: self.max_iterations.or(Some(d.max_iterations)),
            ..self
        }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let scalar_pair = game.state_dim() == 1 && game.num_agents() == 2;
        let method = match self.method.unwrap_or(Method::Auto) {
            Method::Auto if scalar_pair => Method::Enumerate,
            Method::Auto => Method::Descent,
            Method::Enumerate if !scalar_pair => {
                return Err(Failure::Usage("enumeration needs a scalar two-agent game; use --method descent".into()))
            }
            m => m,
        };
        let opts = DescentOptions {
            random_restarts: self.restarts.unwrap_or(20),
            seed: self.seed.unwrap_or(0),
            max_iterations: self.max_iterations.unwrap_or(10_000),
            ..DescentOptions::default()
        };
        let set = match method {
            Method::Enumerate => match scalar_two_agent_equilibria(&game) {
                Ok(set) => set,
                Err(Error::NoEquilibriumFound) => {
                    return Err(Failure::Domain("no stationary equilibrium found".into()))
                }
                Err(e) => return Err(e.into()),
            },
            _ => descent(&game, &opts),
        };
        let prov = Provenance::new()
            .seed(opts.seed)
            .with("verify_tol", lqgame::equilibria::VERIFY_TOL)
            .with("distinct_tol", lqgame::equilibria::DISTINCT_TOL)
            .with("search", &set.metadata.description);
        export::write_equilibria_csv(out.file("equilibria.csv", "one row per equilibrium")?, &set, &game, &prov)?;
        out.json("equilibria.json", "equilibria with verification reports", &export::equilibria_json(&set, &prov))?;
        for (i, pt) in set.points.iter().enumerate() {
            let diag: Vec<String> = pt.p.iter().map(|m| format!("{:.6}", m[(0, 0)])).collect();
            println!(
                "equilibrium {}: P^i(1,1) = [{}], rho(A_cl) = {:.4}, residual {:.1e}",
                i + 1,
                diag.join(", "),
                pt.report.closed_loop_spectral_radius,
                pt.report.fixed_point_residual
            );
        }
        if set.points.is_empty() {
            return Err(Failure::Domain("no stationary equilibrium found".into()));
        }
        Ok(())
    }
}

/// Descent from `Q`, from the recursion's limit when it converges, and from
/// random restarts.
fn descent(game: &GameSpec, opts: &DescentOptions) -> EquilibriumSet {
    let mut inits = vec![game.q_tuple()];
    let (class, _) = classify_with_trace(game, game.q_tuple(), &ClassifyOptions::default());
    if let Classification::Converged { fixed_point, .. } = class {
        inits.push(fixed_point);
    }
    residual_descent_search(game, &inits, opts)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct VerifyCycle {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Phases file `{"phases": [[P_1^1, ...], ...]}` with `P_l = f(P_(l+1))`.
    #[arg(long)]
    pub phases: Option<PathBuf>,
    /// Largest relative mismatch between a phase and the image of its successor.
    #[arg(long)]
    pub cycle_tol: Option<f64>,
    /// Relative tolerance on the periodic loop identity.
    #[arg(long)]
    pub loop_identity_tol: Option<f64>,
    /// Relative tolerance on each agent's periodic best-response gap.
    #[arg(long)]
    pub best_response_tol: Option<f64>,
}

impl Task for VerifyCycle {
    const NAME: &'static str = "verify-cycle";

    fn with_defaults(self) -> Self {
        let d = CertifyTolerances::default();
        Self {
            cycle_tol: self.cycle_tol.or(Some(d.cycle)),
            loop_identity_tol: self.loop_identity_tol.or(Some(d.loop_identity)),
            best_response_tol: self.best_response_tol.or(Some(d.best_response)),
            ..self
        }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        required(&self.phases, "phases")?;
        existing(&self.game, "game")?;
        existing(&self.phases, "phases")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let path: &Path = required(&self.phases, "phases")?;
        let phases = io::read_phases(path).map_err(|e| Failure::reading(path, e))?;
        for p in &phases {
            io::check_tuple_shape(p, &game).map_err(|e| Failure::reading(path, e))?;
        }
        let d = CertifyTolerances::default();
        let tol = CertifyTolerances {
            cycle: self.cycle_tol.unwrap_or(d.cycle),
            loop_identity: self.loop_identity_tol.unwrap_or(d.loop_identity),
            best_response: self.best_response_tol.unwrap_or(d.best_response),
        };
        let prov = Provenance::new()
            .with("seed", "none")
            .with("cycle_tol", tol.cycle)
            .with("loop_identity_tol", tol.loop_identity)
            .with("best_response_tol", tol.best_response);
        match verify_cycle(&phases, &game, &tol) {
            Ok(cert) => {
                write_certificate(out, &cert, &game, &prov)?;
                println!(
                    "certified: period {}, rho of period product {}, phase radii {:?}",
                    cert.period, cert.product_spectral_radius, cert.phase_spectral_radii
                );
                Ok(())
            }
            Err(Error::CertificationFailed { failures }) => {
                let list: Vec<String> = failures.iter().map(ToString::to_string).collect();
                out.json(
                    "failures.json",
                    "failed certificate checks",
                    &json!({ "failures": list, "provenance": prov.to_json() }),
                )?;
                Err(Failure::Domain(format!("certification failed: {}", list.join("; "))))
            }
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Simulate {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Terminal cost file `{"P": [...]}`; defaults to Q.
    #[arg(long)]
    pub terminal: Option<PathBuf>,
    /// Game horizon T.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Initial state as comma-separated numbers; defaults to all ones.
    #[arg(long)]
    pub x0: Option<String>,
    /// Seed for process noise and deviation draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random unilateral deviations tested per agent (requires W = 0).
    #[arg(long)]
    pub deviations: Option<usize>,
}

impl Task for Simulate {
    const NAME: &'static str = "simulate";

    fn with_defaults(self) -> Self {
        Self {
            horizon: self.horizon.or(Some(100)),
            seed: self.seed.or(Some(0)),
            deviations: self.deviations.or(Some(0)),
            ..self
        }
    }

    fn check(&self) -> Result<(), Failure> {
        required(&self.game, "game")?;
        existing(&self.game, "game")?;
        existing(&self.terminal, "terminal")
    }

    fn execute(&self, out: &mut OutputDir) -> Result<(), Failure> {
        let game = load_game(&self.game)?;
        let terminal = load_terminal(&self.terminal, &game)?;
        let horizon = self.horizon.unwrap_or(100);
        let seed = self.seed.unwrap_or(0);
        let x0 = match &self.x0 {
            Some(s) => parse_vector(s, game.state_dim())?,
            None => Vector::from_element(game.state_dim(), 1.0),
        };
        let trace: RecursionTrace = run_recursion(&game, terminal.clone(), horizon, &mut NoStop);
        if trace.termination() != Termination::Completed {
            return Err(Failure::Domain(format!("recursion stopped early: {}", trace.termination().reason())));
        }
        let schedule = trace.schedule(horizon).expect("completed trace has a full schedule");
        let traj = simulate(&game, &schedule, &x0, horizon, Some(seed))?;
        let prov = Provenance::new().seed(seed).with("horizon", horizon);
        export::write_trajectory_csv(out.file("trajectory.csv", "states and inputs over time")?, &traj, &prov)?;
        let costs: Vec<f64> = (0..game.num_agents()).map(|i| finite_horizon_cost(&traj, &game, i, &terminal)).collect();
        out.json("costs.json", "realized cost per agent", &json!({ "costs": costs, "provenance": prov.to_json() }))?;
        println!("realized costs: {costs:?}");

        let k = self.deviations.unwrap_or(0);
        if k > 0 {
            let reports = (0..game.num_agents())
                .map(|i| deviation_test(&game, &trace, i, &x0, k, seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            out.json(
                "deviations.json",
                "unilateral deviation cost gaps",
                &export::deviation_report_json(&reports, &prov),
            )?;
            let violations: usize = reports.iter().map(|r| r.violations.len()).sum();
            for r in &reports {
                println!(
                    "agent {}: {} deviations, cost gap in [{:e}, {:e}]",
                    r.agent + 1,
                    r.perturbations,
                    r.min_gap,
                    r.max_gap
                );
            }
            if violations > 0 {
                return Err(Failure::Domain(format!("{violations} profitable deviations found")));
            }
        }
        Ok(())
    }
}
