//! Finite-horizon Nash equilibria of N-player discrete-time linear-quadratic
//! games, studied as the discrete dynamical system `P_t = f(P_{t+1})`.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: game data, validation, PBH stabilizability.
//! - [`riccati`]: the stacked stage-gain solve, the backward map `f`, full
//!   recursions and single-agent best responses.
//! - [`analysis`]: fixed-point and cycle detection, cycle certificates,
//!   regime classification and Nash verification.
//! - [`equilibria`]: stationary equilibria by scalar enumeration or by
//!   residual descent.
//! - [`simulation`]: closed-loop rollouts, finite-horizon costs and
//!   unilateral deviation tests.
//! - [`experiments`]: basin maps, regime ensembles and cycle censuses.
//! - [`io`] and [`export`]: game files and CSV/JSON emitters.
//!
//! Sign convention: every agent plays `u^i = -K^i x`, so the closed loop is
//! `A - sum_j B^j K^j` and the stage solve returns `K` with a positive sign.

pub mod analysis;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod export;
pub mod io;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod simulation;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{validate_game, GainTuple, GameSpec, PTuple, ValidationReport};
