//! Game representations and evaluation.

pub mod builtin;
pub mod efg;
pub mod eval;
pub mod normal_form;
pub mod strategy;

use rand::Rng;

pub use efg::{ExtensiveFormGame, GameBuilder, InfosetId, NodeId, NodeKind, TerminalId, TreeSpec};
pub use normal_form::{NormalFormGame, ProfileIter};
pub use strategy::{
    BehaviorProfile, BehaviorStrategy, EmpiricalDistribution, MixedProfile, MixedStrategy,
};

/// Sample a fully mixed behavior strategy (Dirichlet-ish via normalized
/// uniforms) for seeded property tests and experiments.
pub fn random_behavior_strategy(
    game: &ExtensiveFormGame,
    player: usize,
    rng: &mut impl Rng,
) -> BehaviorStrategy {
    let mut strategy = BehaviorStrategy::uniform(game, player);
    for id in game.player_infoset_ids(player).to_vec() {
        let k = game.infoset(id).num_actions();
        let mut dist: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let sum: f64 = dist.iter().sum();
        for d in &mut dist {
            *d /= sum;
        }
        // Renormalize the largest entry so the sum is exact.
        let drift: f64 = 1.0 - dist.iter().sum::<f64>();
        dist[0] += drift;
        strategy.set(id, dist).expect("normalized distribution");
    }
    strategy
}

pub fn random_behavior_profile(game: &ExtensiveFormGame, rng: &mut impl Rng) -> BehaviorProfile {
    BehaviorProfile::new(
        (0..game.num_players())
            .map(|p| random_behavior_strategy(game, p, rng))
            .collect(),
    )
}
