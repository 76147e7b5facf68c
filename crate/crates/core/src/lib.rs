//! Measures how well self-play-learned strategies generalize to new
//! opponents in multiplayer games.
//!
//! The pipeline: train no-regret self-play agents ([`regret`]), decompose
//! the game into an (approximately) constant-sum polymatrix form with exact
//! linear programs ([`exactdecomp`]) or a stochastic-subgradient fit
//! ([`sgdecompose`]), then compute vulnerability metrics and the
//! `|E_i| * gamma + 2 * delta` performance bounds ([`analysis`]).

pub mod analysis;
pub mod error;
pub mod exactdecomp;
pub mod games;
pub mod linprog;
pub mod polymatrix;
pub mod regret;
pub mod rng;
pub mod sgdecompose;

pub use error::{Error, Result};
pub use games::{
    BehaviorProfile, BehaviorStrategy, EmpiricalDistribution, ExtensiveFormGame, MixedProfile,
    MixedStrategy, NormalFormGame,
};
pub use polymatrix::{PolyEfg, PolymatrixGame};
