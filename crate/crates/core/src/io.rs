//! Game, terminal-cost and cycle-phase files.
//!
//! All three are JSON documents. Matrices are lists of rows; numbers are
//! written in shortest round-trip form, so a file written and read back
//! reproduces every `f64` bit for bit.
//!
//! ```json
//! { "n": 1, "num_agents": 2, "input_dims": [1, 1],
//!   "A": [[5.0]], "B": [[[1.0]], [[1.0]]],
//!   "Q": [[[1.0]], [[1.0]]], "R": [[[1.0]], [[2.0]]], "W": [[0.0]] }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{validate_game, GameSpec, PTuple};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n: usize,
    num_agents: usize,
    input_dims: Vec<usize>,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Vec<Rows>,
    #[serde(rename = "Q")]
    q: Vec<Rows>,
    #[serde(rename = "R")]
    r: Vec<Rows>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    w: Option<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleFile {
    #[serde(rename = "P")]
    p: Vec<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasesFile {
    phases: Vec<Vec<Rows>>,
}

fn matrix(name: &str, rows: &Rows, shape: (usize, usize)) -> Result<Matrix> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        let got: Vec<usize> = rows.iter().map(Vec::len).collect();
        return Err(Error::Dimension(format!(
            "{name} must be {}x{}, got {} rows with lengths {got:?}",
            shape.0,
            shape.1,
            rows.len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("{name} has non-finite entries")));
    }
    Ok(linalg::from_rows(rows))
}

fn square(name: &str, rows: &Rows) -> Result<Matrix> {
    matrix(name, rows, (rows.len(), rows.len()))
}

fn game_from_file(f: GameFile) -> Result<GameSpec> {
    let (n, agents) = (f.n, f.num_agents);
    if f.input_dims.len() != agents || f.b.len() != agents || f.q.len() != agents || f.r.len() != agents {
        return Err(Error::Dimension(format!(
            "num_agents = {agents} but input_dims, B, Q, R have {}, {}, {}, {} entries",
            f.input_dims.len(),
            f.b.len(),
            f.q.len(),
            f.r.len()
        )));
    }
    let a = matrix("A", &f.a, (n, n))?;
    let mut b = Vec::with_capacity(agents);
    let mut q = Vec::with_capacity(agents);
    let mut r = Vec::with_capacity(agents);
    for i in 0..agents {
        let m = f.input_dims[i];
        b.push(matrix(&format!("B^{}", i + 1), &f.b[i], (n, m))?);
        q.push(matrix(&format!("Q^{}", i + 1), &f.q[i], (n, n))?);
        r.push(matrix(&format!("R^{}", i + 1), &f.r[i], (m, m))?);
    }
    let w = f.w.as_ref().map(|w| matrix("W", w, (n, n))).transpose()?;
    Ok(GameSpec::new(a, b, q, r, w))
}

fn game_to_file(game: &GameSpec) -> GameFile {
    GameFile {
        n: game.state_dim(),
        num_agents: game.num_agents(),
        input_dims: game.input_dims(),
        a: linalg::to_rows(&game.a),
        b: game.b.iter().map(linalg::to_rows).collect(),
        q: game.q.iter().map(linalg::to_rows).collect(),
        r: game.r.iter().map(linalg::to_rows).collect(),
        w: Some(linalg::to_rows(&game.w)),
    }
}

/// Parses a game document without validating it.
pub fn parse_game(text: &str) -> Result<GameSpec> {
    game_from_file(serde_json::from_str(text)?)
}

pub fn game_to_string(game: &GameSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(&game_to_file(game))?)
}

/// Reads a game file without validating it.
pub fn read_game(path: &Path) -> Result<GameSpec> {
    parse_game(&fs::read_to_string(path)?)
}

/// Reads, validates and symmetrizes a game file.
pub fn load_game(path: &Path) -> Result<GameSpec> {
    let game = read_game(path)?;
    let report = validate_game(&game);
    if !report.ok {
        return Err(Error::InvalidGame(report.summary()));
    }
    Ok(game.symmetrized())
}

pub fn write_game(game: &GameSpec, path: &Path) -> Result<()> {
    fs::write(path, game_to_string(game)?)?;
    Ok(())
}

fn tuple_from_rows(name: &str, entries: &[Rows]) -> Result<PTuple> {
    let mats = entries
        .iter()
        .enumerate()
        .map(|(i, rows)| square(&format!("{name}^{}", i + 1), rows).map(|m| linalg::symmetrize(&m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PTuple::new(mats))
}

/// `{"P": [P^1, ..., P^N]}`.
pub fn parse_tuple(text: &str) -> Result<PTuple> {
    let f: TupleFile = serde_json::from_str(text)?;
    tuple_from_rows("P", &f.p)
}

pub fn tuple_to_string(p: &PTuple) -> Result<String> {
    let f = TupleFile { p: p.iter().map(linalg::to_rows).collect() };
    Ok(serde_json::to_string_pretty(&f)?)
}

pub fn read_tuple(path: &Path) -> Result<PTuple> {
    parse_tuple(&fs::read_to_string(path)?)
}

pub fn write_tuple(p: &PTuple, path: &Path) -> Result<()> {
    fs::write(path, tuple_to_string(p)?)?;
    Ok(())
}

/// `{"phases": [[P_1^1, ..., P_1^N], ..., [P_L^1, ..., P_L^N]]}`.
pub fn parse_phases(text: &str) -> Result<Vec<PTuple>> {
    let f: PhasesFile = serde_json::from_str(text)?;
    f.phases.iter().enumerate().map(|(l, phase)| tuple_from_rows(&format!("P_{}", l + 1), phase)).collect()
}

pub fn phases_to_string(phases: &[PTuple]) -> Result<String> {
    let f = PhasesFile { phases: phases.iter().map(|p| p.iter().map(linalg::to_rows).collect()).collect() };
    Ok(serde_json::to_string_pretty(&f)?)
}

pub fn read_phases(path: &Path) -> Result<Vec<PTuple>> {
    parse_phases(&fs::read_to_string(path)?)
}

/// Checks that a tuple matches a game's agent count and state dimension.
pub fn check_tuple_shape(p: &PTuple, game: &GameSpec) -> Result<()> {
    if p.len() != game.num_agents() || p.iter().any(|m| m.nrows() != game.state_dim()) {
        return Err(Error::Dimension(format!(
            "tuple has {} entries of sizes {:?}, game has {} agents with n = {}",
            p.len(),
            p.iter().map(|m| m.nrows()).collect::<Vec<_>>(),
            game.num_agents(),
            game.state_dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_EQUILIBRIA: &str = r#"{
        "n": 1, "num_agents": 2, "input_dims": [1, 1],
        "A": [[5]], "B": [[[1]], [[1]]],
        "Q": [[[1]], [[1]]], "R": [[[1]], [[2]]]
    }"#;

    #[test]
    fn parses_game_document() {
        let g = parse_game(THREE_EQUILIBRIA).unwrap();
        assert_eq!(g, GameSpec::scalar(5.0, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0]));
        assert!(!g.has_noise());
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let text = THREE_EQUILIBRIA.replace("\"n\": 1,", "\"n\": 1, \"gamma\": 2,");
        let err = parse_game(&text).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn inconsistent_shapes_are_rejected() {
        let text = THREE_EQUILIBRIA.replace("\"A\": [[5]]", "\"A\": [[5, 1]]");
        assert!(matches!(parse_game(&text), Err(Error::Dimension(_))));
        let text = THREE_EQUILIBRIA.replace("\"input_dims\": [1, 1]", "\"input_dims\": [1]");
        assert!(matches!(parse_game(&text), Err(Error::Dimension(_))));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let third = 1.0 / 3.0;
        let g = GameSpec::scalar(std::f64::consts::PI, &[third, 1e-300], &[0.1, 7.0e10], &[1.0 + f64::EPSILON, 2.0]);
        let back = parse_game(&game_to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn tuples_and_phases() {
        let p = PTuple::scalars(&[1.5, 2.5]);
        assert_eq!(parse_tuple(&tuple_to_string(&p).unwrap()).unwrap(), p);
        let phases = vec![p.clone(), PTuple::scalars(&[3.0, 4.0])];
        assert_eq!(parse_phases(&phases_to_string(&phases).unwrap()).unwrap(), phases);
    }

    #[test]
    fn load_game_rejects_invalid_and_names_path_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, THREE_EQUILIBRIA.replace("[[2]]", "[[-2]]")).unwrap();
        assert!(matches!(load_game(&path), Err(Error::InvalidGame(_))));
        assert!(matches!(load_game(&dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
