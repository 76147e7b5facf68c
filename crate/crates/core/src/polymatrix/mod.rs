//! Polymatrix games: pairwise-decomposed utility structure over a graph of
//! two-player subgames, in normal form and extensive form.

mod efg_poly;
mod nf;

pub use efg_poly::{default_subgame_chance, ChanceStrategy, PolyEfg};
pub use nf::{PolyEdge, PolymatrixGame};
