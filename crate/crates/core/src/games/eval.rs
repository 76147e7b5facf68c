//! Tree-walk evaluation of extensive-form games.
//!
//! The workhorse is the forward reach pass: nodes are stored parent-before-
//! child, so one sweep over the arena propagates reach probabilities without
//! recursion or allocation per node.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, InfosetId, NodeId, NodeKind, DEGENERATE_PROB};
use crate::games::normal_form::{NormalFormGame, ProfileIter};
use crate::games::strategy::{BehaviorProfile, BehaviorStrategy, MixedStrategy};

/// Guard for `behavior_to_mixed`: pure-strategy enumeration per player.
pub const KUHN_TRANSFORM_INFOSET_GUARD: usize = 20;
/// Guard for `induced_normal_form`: total pure-profile count.
pub const INDUCED_NF_PROFILE_GUARD: usize = 1_000_000;

/// What weight each node contributes in a reach pass.
enum Weights<'a> {
    /// Every actor weighted: joint reach including chance.
    Joint(&'a BehaviorProfile),
    /// Only one player's own probabilities; everything else passes through.
    Player(&'a BehaviorStrategy),
    /// Chance nodes only.
    Chance,
    /// Chance nodes plus an explicit per-node override table (used for
    /// subgame chance strategies that absorb outside players).
    ChanceWith(&'a BTreeMap<NodeId, Vec<f64>>),
}

fn reach_pass(game: &ExtensiveFormGame, weights: Weights) -> Vec<f64> {
    let mut node_reach = vec![0.0; game.num_nodes()];
    node_reach[game.root()] = 1.0;
    let mut out = vec![0.0; game.num_terminals()];
    for id in 0..game.num_nodes() {
        let r = node_reach[id];
        match game.node_kind(id) {
            NodeKind::Terminal { terminal } => {
                out[terminal] = r;
            }
            NodeKind::Chance => {
                let probs = game.node_chance_probs(id);
                for (slot, &child) in game.node_children(id).iter().enumerate() {
                    let mut p = match &weights {
                        Weights::Joint(_) | Weights::Chance | Weights::ChanceWith(_) => probs[slot],
                        Weights::Player(_) => 1.0,
                    };
                    if let Weights::ChanceWith(table) = &weights {
                        if let Some(over) = table.get(&id) {
                            p = over[slot];
                        }
                    }
                    if p < DEGENERATE_PROB {
                        continue;
                    }
                    node_reach[child] = r * p;
                }
            }
            NodeKind::Decision { infoset } => {
                let owner = game.infoset(infoset).player();
                for (slot, &child) in game.node_children(id).iter().enumerate() {
                    let p = match &weights {
                        Weights::Joint(profile) => profile
                            .strategy(owner)
                            .probs_at(infoset)
                            .map(|d| d[slot])
                            .unwrap_or(0.0),
                        Weights::Player(strategy) if strategy.player() == owner => strategy
                            .probs_at(infoset)
                            .map(|d| d[slot])
                            .unwrap_or(0.0),
                        Weights::Player(_) | Weights::Chance => 1.0,
                        Weights::ChanceWith(table) => match table.get(&id) {
                            Some(over) => over[slot],
                            None => 1.0,
                        },
                    };
                    if p < DEGENERATE_PROB {
                        continue;
                    }
                    node_reach[child] = r * p;
                }
            }
        }
    }
    out
}

/// p_i(z, pi_i) for every terminal: the product of `player`'s own action
/// probabilities along the path to z.
pub fn player_reach(game: &ExtensiveFormGame, strategy: &BehaviorStrategy) -> Result<Vec<f64>> {
    strategy.validate_for(game)?;
    Ok(reach_pass(game, Weights::Player(strategy)))
}

/// p_c(z) under the game's own chance distributions.
pub fn chance_reach(game: &ExtensiveFormGame) -> Vec<f64> {
    reach_pass(game, Weights::Chance)
}

/// Chance reach with per-node overrides (subgame chance strategies).
pub fn chance_reach_with(
    game: &ExtensiveFormGame,
    overrides: &BTreeMap<NodeId, Vec<f64>>,
) -> Vec<f64> {
    reach_pass(game, Weights::ChanceWith(overrides))
}

/// Joint reach p(z, pi) including chance.
pub fn joint_reach(game: &ExtensiveFormGame, profile: &BehaviorProfile) -> Result<Vec<f64>> {
    profile.validate_for(game)?;
    Ok(reach_pass(game, Weights::Joint(profile)))
}

/// Terminal distribution plus per-player factors.
pub struct ReachProbabilities {
    /// p(z, pi) per terminal.
    pub joint: Vec<f64>,
    /// p_i(z, pi_i) per player per terminal.
    pub per_player: Vec<Vec<f64>>,
    /// p_c(z) per terminal.
    pub chance: Vec<f64>,
}

pub fn reach_probabilities(
    game: &ExtensiveFormGame,
    profile: &BehaviorProfile,
) -> Result<ReachProbabilities> {
    let joint = joint_reach(game, profile)?;
    let per_player = (0..game.num_players())
        .map(|p| player_reach(game, profile.strategy(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachProbabilities {
        joint,
        per_player,
        chance: chance_reach(game),
    })
}

/// Expected utility per player under a behavior profile.
pub fn expected_utility_efg(
    game: &ExtensiveFormGame,
    profile: &BehaviorProfile,
) -> Result<Vec<f64>> {
    let reach = joint_reach(game, profile)?;
    let mut out = vec![0.0; game.num_players()];
    for (z, &p) in reach.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += p * game.terminal_utility(z, i);
        }
    }
    Ok(out)
}

/// Total variation distance between the terminal distributions of two
/// profiles: 1/2 * sum_z |p(z, pi) - p(z, pi')|.
pub fn total_variation(
    game: &ExtensiveFormGame,
    a: &BehaviorProfile,
    b: &BehaviorProfile,
) -> Result<f64> {
    let ra = joint_reach(game, a)?;
    let rb = joint_reach(game, b)?;
    Ok(0.5 * ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Iterate one player's pure strategies as action assignments over their
/// infosets in ascending infoset-id order.
pub struct PureStrategyIter<'a> {
    game: &'a ExtensiveFormGame,
    player: usize,
    inner: ProfileIter,
}

impl<'a> PureStrategyIter<'a> {
    pub fn new(game: &'a ExtensiveFormGame, player: usize) -> Self {
        let radices: Vec<usize> = game
            .player_infoset_ids(player)
            .iter()
            .map(|&id| game.infoset(id).num_actions())
            .collect();
        Self {
            game,
            player,
            inner: ProfileIter::new(&radices),
        }
    }
}

impl Iterator for PureStrategyIter<'_> {
    /// Map infoset id -> action index.
    type Item = BTreeMap<InfosetId, usize>;

    fn next(&mut self) -> Option<Self::Item> {
        let assignment = self.inner.next()?;
        Some(
            self.game
                .player_infoset_ids(self.player)
                .iter()
                .copied()
                .zip(assignment)
                .collect(),
        )
    }
}

/// Kuhn's-theorem conversion of a behavior strategy into a realization-
/// equivalent mixed strategy over the player's pure strategies.
///
/// The weight of a pure strategy is the product of the behavior
/// probabilities of its choices over all of the player's infosets.
pub fn behavior_to_mixed(
    game: &ExtensiveFormGame,
    strategy: &BehaviorStrategy,
) -> Result<MixedStrategy> {
    strategy.validate_for(game)?;
    let player = strategy.player();
    let infosets = game.player_infoset_ids(player);
    if infosets.len() > KUHN_TRANSFORM_INFOSET_GUARD {
        return Err(Error::GuardExceeded {
            what: "behavior_to_mixed infoset enumeration",
            limit: KUHN_TRANSFORM_INFOSET_GUARD,
            actual: infosets.len(),
        });
    }
    let mut weights = Vec::with_capacity(game.num_pure_strategies(player).unwrap_or(0));
    for assignment in PureStrategyIter::new(game, player) {
        let mut w = 1.0;
        for (&infoset, &action) in &assignment {
            w *= strategy.probs_at(infoset).unwrap()[action];
        }
        weights.push(w);
    }
    // Products of valid distributions sum to 1 up to rounding.
    MixedStrategy::new(weights)
}

/// Expected utilities of a pure profile, marginalizing chance.
pub fn pure_profile_utility(
    game: &ExtensiveFormGame,
    assignments: &[BTreeMap<InfosetId, usize>],
) -> Vec<f64> {
    let mut out = vec![0.0; game.num_players()];
    let mut stack: Vec<(NodeId, f64)> = vec![(game.root(), 1.0)];
    while let Some((id, reach)) = stack.pop() {
        match game.node_kind(id) {
            NodeKind::Terminal { terminal } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += reach * game.terminal_utility(terminal, i);
                }
            }
            NodeKind::Chance => {
                let probs = game.node_chance_probs(id);
                for (slot, &child) in game.node_children(id).iter().enumerate() {
                    if probs[slot] < DEGENERATE_PROB {
                        continue;
                    }
                    stack.push((child, reach * probs[slot]));
                }
            }
            NodeKind::Decision { infoset } => {
                let player = game.infoset(infoset).player();
                let action = assignments[player][&infoset];
                stack.push((game.node_children(id)[action], reach));
            }
        }
    }
    out
}

/// The induced normal form: one pure strategy per infoset-action assignment,
/// utilities evaluated through the tree with chance marginalized.
pub fn induced_normal_form(game: &ExtensiveFormGame) -> Result<NormalFormGame> {
    let mut total = 1usize;
    for p in 0..game.num_players() {
        let count = game.num_pure_strategies(p).ok_or(Error::GuardExceeded {
            what: "induced_normal_form profile count",
            limit: INDUCED_NF_PROFILE_GUARD,
            actual: usize::MAX,
        })?;
        total = total.checked_mul(count).ok_or(Error::GuardExceeded {
            what: "induced_normal_form profile count",
            limit: INDUCED_NF_PROFILE_GUARD,
            actual: usize::MAX,
        })?;
    }
    if total > INDUCED_NF_PROFILE_GUARD {
        return Err(Error::GuardExceeded {
            what: "induced_normal_form profile count",
            limit: INDUCED_NF_PROFILE_GUARD,
            actual: total,
        });
    }
    let per_player: Vec<Vec<BTreeMap<InfosetId, usize>>> = (0..game.num_players())
        .map(|p| PureStrategyIter::new(game, p).collect())
        .collect();
    let actions: Vec<usize> = per_player.iter().map(|v| v.len()).collect();
    let mut assignments: Vec<BTreeMap<InfosetId, usize>> = Vec::with_capacity(game.num_players());
    Ok(NormalFormGame::from_fn(actions, |profile| {
        assignments.clear();
        for (p, &s) in profile.iter().enumerate() {
            assignments.push(per_player[p][s].clone());
        }
        pure_profile_utility(game, &assignments)
    }))
}

/// Reach of a single pure strategy: indicator product over the player's
/// on-path actions.
pub fn pure_player_reach(
    game: &ExtensiveFormGame,
    player: usize,
    assignment: &BTreeMap<InfosetId, usize>,
) -> Vec<f64> {
    let strategy = BehaviorStrategy::pure(game, player, assignment);
    reach_pass(game, Weights::Player(&strategy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;

    #[test]
    fn reach_sums_to_one_and_factors() {
        for game in [builtin::kuhn_poker(2).unwrap(), builtin::tiny_hanabi()] {
            let profile = BehaviorProfile::uniform(&game);
            let r = reach_probabilities(&game, &profile).unwrap();
            let total: f64 = r.joint.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for z in 0..game.num_terminals() {
                let mut product = r.chance[z];
                for p in 0..game.num_players() {
                    product *= r.per_player[p][z];
                }
                assert!((product - r.joint[z]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_tiny_hanabi_reach_is_uniform() {
        let game = builtin::tiny_hanabi();
        let r = joint_reach(&game, &BehaviorProfile::uniform(&game)).unwrap();
        assert_eq!(r.len(), 16);
        for p in r {
            assert!((p - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn total_variation_edges() {
        let game = builtin::kuhn_poker(2).unwrap();
        let a = BehaviorProfile::uniform(&game);
        assert_eq!(total_variation(&game, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn kuhn_transform_single_infoset_matches_behavior() {
        let game = builtin::coordination().to_one_shot_efg();
        let s = BehaviorStrategy::uniform(&game, 0);
        let mixed = behavior_to_mixed(&game, &s).unwrap();
        assert_eq!(mixed.num_pure(), 2);
        assert!((mixed.prob(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kuhn_transform_independent_infosets_product() {
        // Two independent binary infosets at 0.5 each -> four pure
        // strategies at weight 0.25.
        let game = builtin::kuhn_poker(2).unwrap();
        let player = 0;
        let strategy = BehaviorStrategy::uniform(&game, player);
        let mixed = behavior_to_mixed(&game, &strategy).unwrap();
        let k = game.num_pure_strategies(player).unwrap();
        assert_eq!(mixed.num_pure(), k);
        for idx in 0..k {
            assert!((mixed.prob(idx) - 1.0 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn kuhn_transform_realization_equivalence() {
        // p_i(z, pi_i) == E_{rho~s_i}[p_i(z, rho_i)] for an arbitrary
        // behavior strategy.
        let game = builtin::kuhn_poker(2).unwrap();
        let mut rng = crate::rng::seeded_rng(11);
        for player in 0..2 {
            let strategy = crate::games::random_behavior_strategy(&game, player, &mut rng);
            let direct = player_reach(&game, &strategy).unwrap();
            let mixed = behavior_to_mixed(&game, &strategy).unwrap();
            let mut expected = vec![0.0; game.num_terminals()];
            for (idx, assignment) in PureStrategyIter::new(&game, player).enumerate() {
                let w = mixed.prob(idx);
                if w == 0.0 {
                    continue;
                }
                for (z, r) in pure_player_reach(&game, player, &assignment)
                    .iter()
                    .enumerate()
                {
                    expected[z] += w * r;
                }
            }
            for z in 0..game.num_terminals() {
                assert!((direct[z] - expected[z]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn induced_normal_form_one_shot_identity() {
        let nf = builtin::offense_defense(1.0).unwrap();
        let efg = nf.to_one_shot_efg();
        let back = induced_normal_form(&efg).unwrap();
        assert_eq!(nf, back);
    }

    #[test]
    fn induced_normal_form_tiny_hanabi_shape() {
        // Player 3 observes both the signal and player 2's action, so has
        // four binary infosets: 4 x 4 x 16 pure strategies.
        let game = builtin::tiny_hanabi();
        let nf = induced_normal_form(&game).unwrap();
        assert_eq!(nf.actions(), &[4, 4, 16]);
    }

    #[test]
    fn guard_rejects_huge_induced_normal_form() {
        let game = builtin::leduc_poker(3).unwrap();
        assert!(matches!(
            induced_normal_form(&game),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
