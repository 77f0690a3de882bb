//! CSV and JSON emitters for traces, certificates and experiment reports.
//!
//! Every CSV starts with a `#` provenance line (seed and tolerances) followed
//! by a header row; read them back with a comment-aware reader. JSON reports
//! carry the same record under a `"provenance"` key. Floats are written in
//! shortest round-trip form.

use std::collections::BTreeSet;
use std::fmt::{Display, Write as _};
use std::io::Write;

use serde_json::{json, Map, Value};

use crate::analysis::{
    fixed_point_residual, spectral_radius, Classification, ClassifyOptions, CycleCertificate, NashReport,
};
use crate::equilibria::{EquilibriumSet, SearchMethod};
use crate::error::Result;
use crate::experiments::{BasinMap, CycleCensus, EnsembleReport, RegimeCounts};
use crate::linalg::{self, Matrix};
use crate::model::{GainTuple, GameSpec, PTuple};
use crate::riccati::{closed_loop, RecursionTrace, StopCause, Termination};
use crate::simulation::{DeviationReport, Trajectory};

/// Shortest round-trip decimal form of `x`, in scientific notation outside
/// `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// A value that can be recorded in a [`Provenance`].
pub trait Field {
    fn render(&self) -> String;
}

impl Field for f64 {
    fn render(&self) -> String {
        num(*self)
    }
}

macro_rules! display_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_field!(i32, i64, u32, u64, usize, bool, &str, String, &String);

/// Seed and tolerance record embedded in every artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces `key`.
    pub fn with(mut self, key: &str, value: impl Field) -> Self {
        let value = value.render();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_owned(), value)),
        }
        self
    }

    pub fn seed(self, seed: u64) -> Self {
        self.with("seed", seed)
    }

    /// Records every tolerance that influences a classification.
    pub fn classify_options(self, opts: &ClassifyOptions) -> Self {
        self.with("horizon", opts.horizon)
            .with("convergence_tol", opts.convergence_tol)
            .with("convergence_window", opts.convergence_window)
            .with("cycle_tol", opts.cycle_tol)
            .with("cycle_window_periods", opts.cycle_window_periods)
            .with("max_period", opts.max_period)
            .with("certify_cycle_tol", opts.certify.cycle)
            .with("certify_loop_identity_tol", opts.certify.loop_identity)
            .with("certify_best_response_tol", opts.certify.best_response)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `# key=value, key=value`
    pub fn comment_line(&self) -> String {
        let body: Vec<String> = self.entries.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}", body.join(", "))
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

fn csv_writer<W: Write>(mut out: W, prov: &Provenance) -> Result<csv::Writer<W>> {
    writeln!(out, "{}", prov.comment_line())?;
    Ok(csv::WriterBuilder::new().flexible(false).from_writer(out))
}

fn entry_names(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    (1..=rows).flat_map(|r| (1..=cols).map(move |c| format!("{prefix}_{r}_{c}"))).collect()
}

fn entries(m: &Matrix) -> impl Iterator<Item = String> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| num(m[(r, c)])))
}

fn padded(m: Option<&Matrix>, width: usize) -> Vec<String> {
    let mut v: Vec<String> = m.map(|m| entries(m).collect()).unwrap_or_default();
    v.resize(width, String::new());
    v
}

fn max_input_dim(game: &GameSpec) -> usize {
    game.input_dims().into_iter().max().unwrap_or(0)
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn matrices_json<'a>(ms: impl Iterator<Item = &'a Matrix>) -> Value {
    Value::Array(ms.map(|m| json!(linalg::to_rows(m))).collect())
}

/// Rows `step, agent, P_r_c..., K_r_c...`, one per stored step and agent.
///
/// `K` at step `s` is the gain produced on the way from `P_s` to `P_{s+1}`;
/// the final state has none and its gain cells are empty. Agents with fewer
/// inputs than the widest agent leave trailing gain cells empty too.
pub fn write_trace_csv<W: Write>(out: W, trace: &RecursionTrace, game: &GameSpec, prov: &Provenance) -> Result<()> {
    let n = game.state_dim();
    let m = max_input_dim(game);
    let mut w = csv_writer(out, prov)?;
    let mut header = vec!["step".to_owned(), "agent".to_owned()];
    header.extend(entry_names("P", n, n));
    header.extend(entry_names("K", m, n));
    w.write_record(&header)?;
    for (s, p) in trace.states() {
        let k = trace.gain(s);
        for i in 0..p.len() {
            let mut row = vec![s.to_string(), (i + 1).to_string()];
            row.extend(entries(&p[i]));
            row.extend(padded(k.map(|k| &k[i]), m * n));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `{"reason", "steps", "final_residual"}` plus detail and provenance.
///
/// `final_residual` is the last relative step change `||P_s - P_{s-1}|| /
/// (1 + ||P_s||)`, or `null` for a trace of a single state.
pub fn termination_json(trace: &RecursionTrace, prov: &Provenance) -> Value {
    let t = trace.termination();
    let mut v = json!({
        "reason": t.reason(),
        "steps": trace.last_index(),
        "final_residual": trace.last_step_change(),
    });
    let detail = match t {
        Termination::Stopped(StopCause::CycleCandidate { period }) => json!({ "period": period }),
        Termination::Diverged { step, norm } => json!({ "step": step, "norm": norm }),
        Termination::Singular { step, rcond } => json!({ "step": step, "rcond": rcond }),
        _ => Value::Null,
    };
    if !detail.is_null() {
        v["detail"] = detail;
    }
    v["provenance"] = prov.to_json();
    v
}

pub fn nash_report_json(report: &NashReport) -> Value {
    json!({
        "pass": report.pass,
        "fixed_point_residual": report.fixed_point_residual,
        "is_fixed_point": report.is_fixed_point,
        "closed_loop_spectral_radius": report.closed_loop_spectral_radius,
        "best_response_gaps": report.best_response_gaps,
        "gains": matrices_json(report.gains.iter()),
    })
}

pub fn certificate_json(cert: &CycleCertificate, prov: &Provenance) -> Value {
    json!({
        "period": cert.period,
        "cycle_residual": cert.cycle_residual,
        "product_spectral_radius": cert.product_spectral_radius,
        "phase_spectral_radii": cert.phase_spectral_radii,
        "loop_identity_residual": cert.loop_identity_residual,
        "periodic_best_response_residual": cert.periodic_br_residual,
        "has_unstable_phase": cert.has_unstable_phase(),
        "phases": cert.phases.iter().map(|p| matrices_json(p.iter())).collect::<Vec<_>>(),
        "gains": cert.gains.iter().map(|k| matrices_json(k.iter())).collect::<Vec<_>>(),
        "provenance": prov.to_json(),
    })
}

/// Verdict with the regime-specific evidence.
pub fn classification_json(c: &Classification, game: &GameSpec, prov: &Provenance) -> Value {
    let mut v = json!({ "verdict": c.verdict().as_str() });
    match c {
        Classification::Converged { fixed_point, steps_to_converge } => {
            v["steps_to_converge"] = json!(steps_to_converge);
            v["fixed_point"] = matrices_json(fixed_point.iter());
            v["fixed_point_residual"] = json!(fixed_point_residual(fixed_point, game).ok());
        }
        Classification::Cycle(cert) => {
            v["certificate"] = certificate_json(cert, &Provenance::new());
            v["certificate"].as_object_mut().map(|o| o.remove("provenance"));
        }
        Classification::BoundedNonConvergent { sup_norm, steps_observed } => {
            v["sup_norm"] = json!(sup_norm);
            v["steps_observed"] = json!(steps_observed);
        }
        Classification::Diverged { step } => v["step"] = json!(step),
        Classification::SingularStage { step, rcond } => {
            v["step"] = json!(step);
            v["rcond"] = json!(rcond);
        }
    }
    v["provenance"] = prov.to_json();
    v
}

/// `phase, spectral_radius`, one row per phase of a cycle.
pub fn write_phase_radii_csv<W: Write>(out: W, cert: &CycleCertificate, prov: &Provenance) -> Result<()> {
    let prov = prov.clone().with("product_spectral_radius", cert.product_spectral_radius);
    let mut w = csv_writer(out, &prov)?;
    w.write_record(["phase", "spectral_radius"])?;
    for (l, rho) in cert.phase_spectral_radii.iter().enumerate() {
        w.write_record([(l + 1).to_string(), num(*rho)])?;
    }
    w.flush()?;
    Ok(())
}

fn method_name(m: SearchMethod) -> &'static str {
    match m {
        SearchMethod::Enumeration => "enumeration",
        SearchMethod::Descent => "descent",
    }
}

/// One row per equilibrium: P entries (agent-major), K entries, closed-loop
/// spectral radius, fixed-point residual and the largest best-response gap.
pub fn write_equilibria_csv<W: Write>(out: W, set: &EquilibriumSet, game: &GameSpec, prov: &Provenance) -> Result<()> {
    let n = game.state_dim();
    let dims = game.input_dims();
    let prov = prov
        .clone()
        .with("method", method_name(set.method))
        .with("candidates", set.metadata.candidates)
        .with("rejected", set.metadata.rejected);
    let mut w = csv_writer(out, &prov)?;
    let mut header = vec!["point".to_owned()];
    for i in 1..=game.num_agents() {
        header.extend(entry_names(&format!("P{i}"), n, n));
    }
    for (i, &m) in dims.iter().enumerate() {
        header.extend(entry_names(&format!("K{}", i + 1), m, n));
    }
    header.extend(["spectral_radius", "residual", "max_best_response_gap"].map(String::from));
    w.write_record(&header)?;
    for (idx, pt) in set.points.iter().enumerate() {
        let mut row = vec![(idx + 1).to_string()];
        pt.p.iter().for_each(|m| row.extend(entries(m)));
        pt.gains.iter().for_each(|m| row.extend(entries(m)));
        let gap = pt.report.best_response_gaps.iter().copied().fold(0.0, f64::max);
        row.push(num(pt.report.closed_loop_spectral_radius));
        row.push(num(pt.report.fixed_point_residual));
        row.push(num(gap));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn equilibria_json(set: &EquilibriumSet, prov: &Provenance) -> Value {
    json!({
        "method": method_name(set.method),
        "search": {
            "description": set.metadata.description,
            "candidates": set.metadata.candidates,
            "rejected": set.metadata.rejected,
        },
        "points": set.points.iter().map(|pt| json!({
            "P": matrices_json(pt.p.iter()),
            "K": matrices_json(pt.gains.iter()),
            "report": nash_report_json(&pt.report),
        })).collect::<Vec<_>>(),
        "provenance": prov.to_json(),
    })
}

/// `q1, q2, verdict, label, steps_to_converge, p1, p2` per grid cell; labels
/// are 1-based equilibrium indices, empty when unmatched.
pub fn write_basin_csv<W: Write>(out: W, map: &BasinMap, prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(out, prov)?;
    w.write_record(["q1", "q2", "verdict", "label", "steps_to_converge", "p1", "p2"])?;
    for c in &map.cells {
        let fp = |i: usize| c.fixed_point.as_ref().map_or(String::new(), |p| num(p[i][(0, 0)]));
        w.write_record([
            num(c.terminal.0),
            num(c.terminal.1),
            c.verdict.to_string(),
            opt(c.label.map(|l| l + 1)),
            opt(c.steps_to_converge),
            fp(0),
            fp(1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const REGIMES: [&str; 6] = ["converged", "cycle", "non_convergent", "diverged", "singular", "generation_failed"];

fn regime_values(c: &RegimeCounts) -> [usize; 6] {
    [c.converged, c.cycle, c.non_convergent, c.diverged, c.singular, c.generation_failed]
}

/// Per-cell counts and percentages.
pub fn write_ensemble_csv<W: Write>(out: W, report: &EnsembleReport, prov: &Provenance) -> Result<()> {
    let prov = prov.clone().seed(report.master_seed).with("trials_per_cell", report.trials_per_cell);
    let mut w = csv_writer(out, &prov)?;
    let mut header: Vec<String> = ["n", "m", "N", "trials"].map(String::from).to_vec();
    header.extend(REGIMES.iter().map(|r| r.to_string()));
    header.extend(REGIMES.iter().map(|r| format!("{r}_pct")));
    w.write_record(&header)?;
    for cell in &report.cells {
        let c = &cell.counts;
        let mut row =
            vec![cell.cell.n.to_string(), cell.cell.m.to_string(), cell.cell.agents.to_string(), c.total().to_string()];
        row.extend(regime_values(c).iter().map(|v| v.to_string()));
        row.extend(regime_values(c).iter().map(|&v| num(c.percent(v))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per trial: cell, trial index, derived seed, verdict and detail.
pub fn write_trials_csv<W: Write>(out: W, report: &EnsembleReport, prov: &Provenance) -> Result<()> {
    let prov = prov.clone().seed(report.master_seed);
    let mut w = csv_writer(out, &prov)?;
    w.write_record(["n", "m", "N", "trial", "trial_seed", "verdict", "steps", "period"])?;
    for cell in &report.cells {
        for t in &cell.trials {
            let (verdict, steps, period) = match &t.classification {
                None => ("generation_failed".to_owned(), String::new(), String::new()),
                Some(c) => {
                    let steps = match c {
                        Classification::Converged { steps_to_converge, .. } => steps_to_converge.to_string(),
                        Classification::BoundedNonConvergent { steps_observed, .. } => steps_observed.to_string(),
                        Classification::Diverged { step } | Classification::SingularStage { step, .. } => {
                            step.to_string()
                        }
                        Classification::Cycle(_) => String::new(),
                    };
                    let period = match c {
                        Classification::Cycle(cert) => cert.period.to_string(),
                        _ => String::new(),
                    };
                    (c.verdict().to_string(), steps, period)
                }
            };
            w.write_record([
                cell.cell.n.to_string(),
                cell.cell.m.to_string(),
                cell.cell.agents.to_string(),
                t.trial.to_string(),
                t.seed.to_string(),
                verdict,
                steps,
                period,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Three percentage tables (converged, cycle, non-convergent) with rows
/// `(n, m)` and columns `N`, in the layout of the regime-frequency figure.
/// Diverged and singular trials are listed below the tables.
pub fn ensemble_tables(report: &EnsembleReport) -> String {
    let rows: BTreeSet<(usize, usize)> = report.cells.iter().map(|c| (c.cell.n, c.cell.m)).collect();
    let cols: BTreeSet<usize> = report.cells.iter().map(|c| c.cell.agents).collect();
    let lookup = |n: usize, m: usize, agents: usize| {
        report.cells.iter().find(|c| (c.cell.n, c.cell.m, c.cell.agents) == (n, m, agents)).map(|c| &c.counts)
    };
    let mut s = String::new();
    let _ = writeln!(s, "seed {}, {} trials per cell", report.master_seed, report.trials_per_cell);
    type Column = fn(&RegimeCounts) -> usize;
    let tables: [(&str, Column); 3] = [
        ("converged to a fixed point (%)", |c| c.converged),
        ("converged to a cycle (%)", |c| c.cycle),
        ("bounded, not converging (%)", |c| c.non_convergent),
    ];
    for (title, pick) in tables {
        let _ = writeln!(s, "\n{title}");
        let _ = write!(s, "{:>8}", "n,m \\ N");
        for &a in &cols {
            let _ = write!(s, "{a:>9}");
        }
        s.push('\n');
        for &(n, m) in &rows {
            let _ = write!(s, "{:>8}", format!("{n},{m}"));
            for &a in &cols {
                match lookup(n, m, a) {
                    Some(c) => {
                        let _ = write!(s, "{:>9.1}", c.percent(pick(c)));
                    }
                    None => {
                        let _ = write!(s, "{:>9}", "-");
                    }
                }
            }
            s.push('\n');
        }
    }
    let _ = writeln!(s, "\nother outcomes (counts)");
    for cell in &report.cells {
        let c = &cell.counts;
        let _ = writeln!(
            s,
            "  {}: diverged {}, singular {}, generation failed {}",
            cell.cell, c.diverged, c.singular, c.generation_failed
        );
    }
    s
}

/// `n, m, N, period, count` per histogram bin.
pub fn write_census_csv<W: Write>(out: W, census: &CycleCensus, prov: &Provenance) -> Result<()> {
    let prov = prov.clone().seed(census.master_seed).with("target", census.target_count);
    let mut w = csv_writer(out, &prov)?;
    w.write_record(["n", "m", "N", "period", "count", "games_examined", "complete"])?;
    for cell in &census.cells {
        for (period, count) in &cell.histogram {
            w.write_record([
                cell.cell.n.to_string(),
                cell.cell.m.to_string(),
                cell.cell.agents.to_string(),
                period.to_string(),
                count.to_string(),
                cell.games_examined.to_string(),
                cell.complete.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per stored certificate, with its residuals and radii.
pub fn write_census_certificates_csv<W: Write>(out: W, census: &CycleCensus, prov: &Provenance) -> Result<()> {
    let prov = prov.clone().seed(census.master_seed);
    let mut w = csv_writer(out, &prov)?;
    w.write_record([
        "n",
        "m",
        "N",
        "trial",
        "period",
        "cycle_residual",
        "product_spectral_radius",
        "max_phase_spectral_radius",
        "loop_identity_residual",
        "periodic_best_response_residual",
    ])?;
    for cell in &census.cells {
        for (trial, cert) in &cell.certificates {
            let max_phase = cert.phase_spectral_radii.iter().copied().fold(0.0, f64::max);
            w.write_record([
                cell.cell.n.to_string(),
                cell.cell.m.to_string(),
                cell.cell.agents.to_string(),
                trial.to_string(),
                cert.period.to_string(),
                num(cert.cycle_residual),
                num(cert.product_spectral_radius),
                num(max_phase),
                num(cert.loop_identity_residual),
                num(cert.periodic_br_residual),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cycle-length histograms as text, one line per cell.
pub fn census_table(census: &CycleCensus) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed {}, target {} cycles per cell", census.master_seed, census.target_count);
    for cell in &census.cells {
        let bins: Vec<String> = cell.histogram.iter().map(|(l, c)| format!("L={l}: {c}")).collect();
        let status = if cell.complete { "" } else { " (incomplete)" };
        let _ = writeln!(s, "  {} [{} games]{status}: {}", cell.cell, cell.games_examined, bins.join(", "));
    }
    s
}

/// `t, x_1..x_n, u<i>_<k>...` per time step; inputs are empty on the final
/// state.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, prov: &Provenance) -> Result<()> {
    let prov = match traj.noise_seed {
        Some(seed) => prov.clone().seed(seed),
        None => prov.clone(),
    };
    let n = traj.states.first().map_or(0, |x| x.len());
    let dims: Vec<usize> = traj.inputs.iter().map(|u| u.first().map_or(0, |v| v.len())).collect();
    let mut w = csv_writer(out, &prov)?;
    let mut header = vec!["t".to_owned()];
    header.extend((1..=n).map(|k| format!("x_{k}")));
    for (i, &m) in dims.iter().enumerate() {
        header.extend((1..=m).map(|k| format!("u{}_{k}", i + 1)));
    }
    w.write_record(&header)?;
    for (t, x) in traj.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|&v| num(v)));
        for (i, &m) in dims.iter().enumerate() {
            match traj.inputs[i].get(t) {
                Some(u) => row.extend(u.iter().map(|&v| num(v))),
                None => row.extend(std::iter::repeat_n(String::new(), m)),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn deviation_report_json(reports: &[DeviationReport], prov: &Provenance) -> Value {
    let agents: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "agent": r.agent + 1,
                "horizon": r.horizon,
                "equilibrium_cost": r.equilibrium_cost,
                "perturbations": r.perturbations,
                "min_gap": r.min_gap,
                "max_gap": r.max_gap,
                "violations": r.violations.iter().map(|v| json!({
                    "perturbation": v.perturbation,
                    "scale": v.scale,
                    "gap": v.gap,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut root = Map::new();
    root.insert("agents".into(), Value::Array(agents));
    root.insert("provenance".into(), prov.to_json());
    Value::Object(root)
}

/// Forward-time series behind the gain, Frobenius-difference and
/// spectral-radius plots.
///
/// Time `t = 0` is the first stage played. `frobenius[t][i]` is
/// `||P^i_{t+1} - P^i_0||_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub gains: Vec<GainTuple>,
    pub frobenius: Vec<Vec<f64>>,
    pub spectral_radius: Vec<f64>,
}

impl FigureSeries {
    fn build(values: Vec<&PTuple>, gains: Vec<GainTuple>, game: &GameSpec) -> Self {
        let spectral_radius = gains.iter().map(|k| spectral_radius(&closed_loop(game, k))).collect();
        let p0 = values[0];
        let frobenius =
            values[1..].iter().map(|p| p.iter().zip(p0.iter()).map(|(a, b)| (a - b).norm()).collect()).collect();
        FigureSeries { gains, frobenius, spectral_radius }
    }

    /// Series over the stored window of a trace, in forward time: the value
    /// at time `t` is `P_{T-t}` and the gain played is the one that produced
    /// it.
    pub fn from_trace(trace: &RecursionTrace, game: &GameSpec) -> Self {
        let last = trace.last_index();
        let first = trace.first_stored_index();
        let values: Vec<&PTuple> = (first..=last).rev().filter_map(|s| trace.state(s)).collect();
        let gains: Vec<GainTuple> = (first..last).rev().filter_map(|s| trace.gain(s).cloned()).collect();
        Self::build(values, gains, game)
    }

    /// A cycle unrolled over `periods` repetitions, phases played in order
    /// `1, ..., L`.
    pub fn from_certificate(cert: &CycleCertificate, game: &GameSpec, periods: usize) -> Self {
        let len = cert.period * periods;
        let values: Vec<&PTuple> = (0..=len).map(|t| &cert.phases[t % cert.period]).collect();
        let gains: Vec<GainTuple> = (0..len).map(|t| cert.gains[t % cert.period].clone()).collect();
        Self::build(values, gains, game)
    }
}

/// Writes `gains.csv`, `frobenius.csv` and `spectral_radius.csv` into `dir`
/// and returns their paths.
pub fn export_trace_figures(
    series: &FigureSeries,
    game: &GameSpec,
    dir: &std::path::Path,
    prov: &Provenance,
) -> Result<Vec<std::path::PathBuf>> {
    let n = game.state_dim();
    let m = max_input_dim(game);
    let agents = game.num_agents();

    let gains_path = dir.join("gains.csv");
    let mut w = csv_writer(std::fs::File::create(&gains_path)?, prov)?;
    let mut header = vec!["t".to_owned(), "agent".to_owned()];
    header.extend(entry_names("K", m, n));
    w.write_record(&header)?;
    for (t, k) in series.gains.iter().enumerate() {
        for i in 0..agents {
            let mut row = vec![t.to_string(), (i + 1).to_string()];
            row.extend(padded(Some(&k[i]), m * n));
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    let frob_path = dir.join("frobenius.csv");
    let mut w = csv_writer(std::fs::File::create(&frob_path)?, prov)?;
    let mut header = vec!["t".to_owned()];
    header.extend((1..=agents).map(|i| format!("agent_{i}")));
    w.write_record(&header)?;
    for (t, row) in series.frobenius.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|&v| num(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let rho_path = dir.join("spectral_radius.csv");
    let mut w = csv_writer(std::fs::File::create(&rho_path)?, prov)?;
    w.write_record(["t", "spectral_radius"])?;
    for (t, rho) in series.spectral_radius.iter().enumerate() {
        w.write_record([t.to_string(), num(*rho)])?;
    }
    w.flush()?;

    Ok(vec![gains_path, frob_path, rho_path])
}
