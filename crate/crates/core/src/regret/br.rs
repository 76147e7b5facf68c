//! Counterfactual tree-walk best response.
//!
//! Works against any "environment": either the other players of the full
//! game (plus its chance), or a single opponent seat plus a subgame chance
//! strategy that absorbs everyone else. Per-infoset action values are
//! resolved deepest-own-sequence first, which is well-founded under
//! perfect recall.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, InfosetId, NodeId, NodeKind, DEGENERATE_PROB};
use crate::games::strategy::{BehaviorProfile, BehaviorStrategy};
use crate::polymatrix::ChanceStrategy;

/// The non-responder part of a best-response problem.
pub enum BrEnv<'a> {
    /// All other players of `profile` plus the game's own chance. The
    /// responder's entry in the profile is ignored.
    Opponents(&'a BehaviorProfile),
    /// One opponent seat plus a chance strategy covering chance nodes and
    /// every node owned by neither seat.
    Subgame {
        opponent: &'a BehaviorStrategy,
        chance: &'a ChanceStrategy,
    },
}

impl BrEnv<'_> {
    /// Distribution over children at a node the responder does not own.
    fn probs_at<'b>(
        &'b self,
        game: &'b ExtensiveFormGame,
        node: NodeId,
        kind: NodeKind,
    ) -> Result<&'b [f64]> {
        match (self, kind) {
            (BrEnv::Opponents(_), NodeKind::Chance) => Ok(game.node_chance_probs(node)),
            (BrEnv::Opponents(profile), NodeKind::Decision { infoset }) => {
                let owner = game.infoset(infoset).player();
                profile
                    .strategy(owner)
                    .probs_at(infoset)
                    .ok_or_else(|| Error::MissingInfoset(game.infoset(infoset).key().to_string()))
            }
            (BrEnv::Subgame { chance, .. }, NodeKind::Chance) => chance
                .probs_at(node)
                .ok_or_else(|| Error::InvalidStrategy(format!("chance node {node} uncovered"))),
            (BrEnv::Subgame { opponent, chance }, NodeKind::Decision { infoset }) => {
                let owner = game.infoset(infoset).player();
                if owner == opponent.player() {
                    opponent.probs_at(infoset).ok_or_else(|| {
                        Error::MissingInfoset(game.infoset(infoset).key().to_string())
                    })
                } else {
                    chance.probs_at(node).ok_or_else(|| {
                        Error::InvalidStrategy(format!("outside node {node} uncovered"))
                    })
                }
            }
            (_, NodeKind::Terminal { .. }) => unreachable!("terminals have no distribution"),
        }
    }
}

/// Best response of `player` against `env` with per-terminal payoffs
/// `terminal_utils`. Returns the attained value and the (pure) responding
/// strategy; ties at an infoset go to the lowest action index.
pub fn best_response_in(
    game: &ExtensiveFormGame,
    player: usize,
    terminal_utils: &[f64],
    env: &BrEnv,
) -> Result<(f64, BehaviorStrategy)> {
    if terminal_utils.len() != game.num_terminals() {
        return Err(Error::DimensionMismatch(format!(
            "terminal utility vector has {} entries, game has {} terminals",
            terminal_utils.len(),
            game.num_terminals()
        )));
    }
    // Environment reach per node (the responder contributes factor 1).
    let mut env_reach = vec![0.0; game.num_nodes()];
    env_reach[game.root()] = 1.0;
    for id in 0..game.num_nodes() {
        let kind = game.node_kind(id);
        if matches!(kind, NodeKind::Terminal { .. }) {
            continue;
        }
        let own = match kind {
            NodeKind::Decision { infoset } => game.infoset(infoset).player() == player,
            _ => false,
        };
        let r = env_reach[id];
        if own {
            for &child in game.node_children(id) {
                env_reach[child] = r;
            }
        } else {
            let probs = env.probs_at(game, id, kind)?;
            for (slot, &child) in game.node_children(id).iter().enumerate() {
                if probs[slot] < DEGENERATE_PROB {
                    env_reach[child] = 0.0;
                    continue;
                }
                env_reach[child] = r * probs[slot];
            }
        }
    }

    // Resolve the responder's infosets deepest own-sequence first.
    let mut order: Vec<InfosetId> = game.player_infoset_ids(player).to_vec();
    order.sort_by_key(|&id| std::cmp::Reverse(game.infoset(id).own_depth()));
    let mut br_action: BTreeMap<InfosetId, usize> = BTreeMap::new();
    let mut memo: Vec<f64> = vec![f64::NAN; game.num_nodes()];

    // Detached node-value evaluator; `br_action` must already cover every
    // responder infoset inside the evaluated subtree.
    fn value(
        game: &ExtensiveFormGame,
        player: usize,
        terminal_utils: &[f64],
        env: &BrEnv,
        br_action: &BTreeMap<InfosetId, usize>,
        memo: &mut [f64],
        id: NodeId,
    ) -> Result<f64> {
        if !memo[id].is_nan() {
            return Ok(memo[id]);
        }
        let v = match game.node_kind(id) {
            NodeKind::Terminal { terminal } => terminal_utils[terminal],
            kind @ (NodeKind::Chance | NodeKind::Decision { .. }) => {
                let own = match kind {
                    NodeKind::Decision { infoset } => {
                        game.infoset(infoset).player() == player
                    }
                    _ => false,
                };
                if own {
                    let NodeKind::Decision { infoset } = kind else {
                        unreachable!()
                    };
                    let action = br_action[&infoset];
                    value(
                        game,
                        player,
                        terminal_utils,
                        env,
                        br_action,
                        memo,
                        game.node_children(id)[action],
                    )?
                } else {
                    let probs = env.probs_at(game, id, kind)?.to_vec();
                    let mut total = 0.0;
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        if probs[slot] < DEGENERATE_PROB {
                            continue;
                        }
                        total += probs[slot]
                            * value(game, player, terminal_utils, env, br_action, memo, child)?;
                    }
                    total
                }
            }
        };
        memo[id] = v;
        Ok(v)
    }

    for id in order {
        let infoset = game.infoset(id);
        let k = infoset.num_actions();
        let mut best = (0usize, f64::NEG_INFINITY);
        for a in 0..k {
            let mut cf_value = 0.0;
            for &node in infoset.nodes() {
                let child = game.node_children(node)[a];
                cf_value += env_reach[node]
                    * value(
                        game,
                        player,
                        terminal_utils,
                        env,
                        &br_action,
                        &mut memo,
                        child,
                    )?;
            }
            if cf_value > best.1 {
                best = (a, cf_value);
            }
        }
        br_action.insert(id, best.0);
    }
    let v = value(
        game,
        player,
        terminal_utils,
        env,
        &br_action,
        &mut memo,
        game.root(),
    )?;
    Ok((v, BehaviorStrategy::pure(game, player, &br_action)))
}

/// Full-game best response: value and strategy of `player` against the
/// other entries of `opponents` (the `player` entry is ignored).
pub fn best_response(
    game: &ExtensiveFormGame,
    player: usize,
    opponents: &BehaviorProfile,
) -> Result<(f64, BehaviorStrategy)> {
    opponents.validate_except(game, player)?;
    let utils = game.player_terminal_utils(player);
    best_response_in(game, player, &utils, &BrEnv::Opponents(opponents))
}

/// The largest any player can gain by unilaterally best-responding.
pub fn nash_gap(game: &ExtensiveFormGame, profile: &BehaviorProfile) -> Result<f64> {
    profile.validate_for(game)?;
    let base = crate::games::eval::expected_utility_efg(game, profile)?;
    let mut gap = f64::NEG_INFINITY;
    for player in 0..game.num_players() {
        let (v, _) = best_response(game, player, profile)?;
        gap = gap.max(v - base[player]);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;
    use crate::games::eval::{induced_normal_form, PureStrategyIter};
    use crate::games::strategy::BehaviorProfile;

    #[test]
    fn matching_pennies_uniform_value_zero() {
        let nf = crate::games::NormalFormGame::from_fn(vec![2, 2], |p| {
            let v = if p[0] == p[1] { 1.0 } else { -1.0 };
            vec![v, -v]
        });
        let game = nf.to_one_shot_efg();
        let uniform = BehaviorProfile::uniform(&game);
        let (v, _) = best_response(&game, 0, &uniform).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn coordination_best_response_follows_opponent() {
        let game = builtin::coordination().to_one_shot_efg();
        let mut profile = BehaviorProfile::uniform(&game);
        let id = game.infoset_by_key("p1").unwrap();
        let mut s = profile.strategy(1).clone();
        s.set(id, vec![1.0, 0.0]).unwrap();
        profile = profile.replace(1, s);
        let (v, br) = best_response(&game, 0, &profile).unwrap();
        assert_eq!(v, 1.0);
        let own = game.infoset_by_key("p0").unwrap();
        assert_eq!(br.probs_at(own).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn bad_card_best_response_matches_pure_enumeration() {
        // Player 1 against (dealer uniform, everyone else always calls):
        // the tree-walk value must equal the max over player 1's pure
        // strategies evaluated through the induced normal form.
        let game = builtin::bad_card(1.0).unwrap();
        let mut profile = BehaviorProfile::uniform(&game);
        for p in [0usize, 2] {
            let mut choices = std::collections::BTreeMap::new();
            for id in game.player_infosets(p) {
                let call = game
                    .infoset(id)
                    .actions()
                    .iter()
                    .position(|a| a == "c")
                    .unwrap();
                choices.insert(id, call);
            }
            profile = profile.replace(p, BehaviorStrategy::pure(&game, p, &choices));
        }
        let (v, _) = best_response(&game, 1, &profile).unwrap();

        let mut best = f64::NEG_INFINITY;
        for assignment in PureStrategyIter::new(&game, 1) {
            let candidate = BehaviorStrategy::pure(&game, 1, &assignment);
            let trial = profile.replace(1, candidate);
            let u = crate::games::eval::expected_utility_efg(&game, &trial).unwrap()[1];
            best = best.max(u);
        }
        assert!((v - best).abs() < 1e-12, "tree {v} vs enumeration {best}");
    }

    #[test]
    fn nash_gap_examples() {
        // Offense-Defense (r, a2, a1) is a Nash equilibrium of the one-shot
        // extensive form.
        let game = builtin::offense_defense(1.0).unwrap().to_one_shot_efg();
        let mut profile = BehaviorProfile::uniform(&game);
        for (p, action) in [(0usize, 0usize), (1, 1), (2, 1)] {
            let id = game.infoset_by_key(&format!("p{p}")).unwrap();
            let mut s = profile.strategy(p).clone();
            let mut dist = vec![0.0; 2];
            dist[action] = 1.0;
            s.set(id, dist).unwrap();
            profile = profile.replace(p, s);
        }
        let gap = nash_gap(&game, &profile).unwrap();
        assert!(gap.abs() <= 1e-9, "gap {gap}");

        // Coordination mismatch (a, b) leaves a full point on the table.
        let coord = builtin::coordination().to_one_shot_efg();
        let mut mismatch = BehaviorProfile::uniform(&coord);
        for (p, action) in [(0usize, 0usize), (1, 1)] {
            let id = coord.infoset_by_key(&format!("p{p}")).unwrap();
            let mut s = mismatch.strategy(p).clone();
            let mut dist = vec![0.0; 2];
            dist[action] = 1.0;
            s.set(id, dist).unwrap();
            mismatch = mismatch.replace(p, s);
        }
        assert!((nash_gap(&coord, &mismatch).unwrap() - 1.0).abs() < 1e-12);

        // Determinism.
        let g1 = nash_gap(&coord, &mismatch).unwrap();
        let g2 = nash_gap(&coord, &mismatch).unwrap();
        assert_eq!(g1.to_bits(), g2.to_bits());
    }

    #[test]
    fn kuhn_train_then_gap_drops() {
        let game = builtin::kuhn_poker(2).unwrap();
        let run = crate::regret::train(&game, crate::regret::Algorithm::Cfr, 10_000, 3);
        let gap = nash_gap(&game, &run.profile).unwrap();
        assert!(gap <= 0.01, "gap {gap}");
        // Two-player zero-sum sanity: the average profile value approaches
        // the game value -1/18 for the first player.
        let u = crate::games::eval::expected_utility_efg(&game, &run.profile).unwrap();
        assert!((u[0] + 1.0 / 18.0).abs() < 0.01, "value {}", u[0]);
        let _ = induced_normal_form(&game).unwrap();
    }
}
