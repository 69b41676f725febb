//! Information design for anonymous nonatomic games.
//!
//! The library computes Wardrop equilibria, checks the correlated and Bayes
//! correlated Wardrop equilibrium conditions, solves the designer's outcome
//! program as a linear program over a flow grid, builds information
//! structures that implement a designed outcome, and measures how finite
//! player recommendation schemes approach their nonatomic limits.

pub mod atomic;
pub mod bundled;
pub mod cli;
pub mod designer_lp;
pub mod equilibrium_checks;
pub mod error;
pub mod expr;
pub mod format;
pub mod game_model;
pub mod implementation;
pub mod lp;
pub mod numfmt;
pub mod wardrop;

pub use error::{Error, Result};
pub use game_model::{FlowProfile, GameSpec, Outcome};
