//! Bad Card: a dealer hands one of three players a losing card; that player
//! may fold (all antes returned) or call, after which the two good-card
//! holders call or fold in seat order.
//!
//! The dealer is indifferent (utility 0 at every leaf) and deals uniformly;
//! it is modelled as a uniform chance root with a reserved player slot 3,
//! so payoff vectors stay zero-sum over four entries. Every infoset is a
//! singleton, so the game is perfect information. Terminal payoffs follow
//! the worked system of equations for the call subtree (the figure's own
//! payoff vector for the fold-then-call leaf disagrees with those
//! equations; the equations win): a lone good-card caller takes `beta`
//! from the bad-card caller, two callers split it, and if both good cards
//! fold the bad card wins `beta` funded by both antes.

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, GameBuilder, TreeSpec};

/// Players 0, 1, 2 plus the idle dealer slot as player 3.
pub const BAD_CARD_DEALER: usize = 3;

fn build(beta: f64, pruned: bool) -> Result<ExtensiveFormGame> {
    if !(beta > 0.0) {
        return Err(Error::InvalidBuiltinParams(format!(
            "bad_card needs beta > 0, got {beta}"
        )));
    }
    let mut b = GameBuilder::new(4);
    let mut picks = Vec::with_capacity(3);
    for bad in 0..3usize {
        let goods: Vec<usize> = (0..3).filter(|&p| p != bad).collect();
        let (g1, g2) = (goods[0], goods[1]);
        let leaf = |u_bad: f64, u_g1: f64, u_g2: f64| {
            let mut utils = vec![0.0; 4];
            utils[bad] = u_bad;
            utils[g1] = u_g1;
            utils[g2] = u_g2;
            TreeSpec::Terminal { utils }
        };
        // Outcomes by (g1 action, g2 action); f = 0, c = 1.
        let ff = leaf(beta, -beta / 2.0, -beta / 2.0);
        let fc = leaf(-beta, 0.0, beta);
        let cf = leaf(-beta, beta, 0.0);
        let cc = leaf(-beta, beta / 2.0, beta / 2.0);

        let after_call = if pruned {
            // Folding a good card is strictly dominated; only call remains.
            let g2_is = b.infoset_str(g2, format!("p{g2}:good:bad{bad}:c"), &["c"]);
            let g1_is = b.infoset_str(g1, format!("p{g1}:good:bad{bad}"), &["c"]);
            TreeSpec::Decision {
                infoset: g1_is,
                children: vec![TreeSpec::Decision {
                    infoset: g2_is,
                    children: vec![cc],
                }],
            }
        } else {
            let g2_after_fold = b.infoset_str(g2, format!("p{g2}:good:bad{bad}:f"), &["f", "c"]);
            let g2_after_call = b.infoset_str(g2, format!("p{g2}:good:bad{bad}:c"), &["f", "c"]);
            let g1_is = b.infoset_str(g1, format!("p{g1}:good:bad{bad}"), &["f", "c"]);
            TreeSpec::Decision {
                infoset: g1_is,
                children: vec![
                    TreeSpec::Decision {
                        infoset: g2_after_fold,
                        children: vec![ff, fc],
                    },
                    TreeSpec::Decision {
                        infoset: g2_after_call,
                        children: vec![cf, cc],
                    },
                ],
            }
        };
        let holder = b.infoset_str(bad, format!("p{bad}:bad"), &["f", "c"]);
        picks.push((
            1.0 / 3.0,
            TreeSpec::Decision {
                infoset: holder,
                children: vec![
                    TreeSpec::Terminal {
                        utils: vec![0.0; 4],
                    },
                    after_call,
                ],
            },
        ));
    }
    b.build(TreeSpec::Chance { outcomes: picks })
}

pub fn bad_card(beta: f64) -> Result<ExtensiveFormGame> {
    build(beta, false)
}

/// Bad Card with the strictly dominated good-card fold actions removed.
pub fn bad_card_pruned(beta: f64) -> Result<ExtensiveFormGame> {
    build(beta, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::efg::NodeKind;
    use crate::games::eval::{expected_utility_efg, induced_normal_form};
    use crate::games::strategy::{BehaviorProfile, BehaviorStrategy};
    use std::collections::BTreeMap;

    fn pure_everywhere(g: &ExtensiveFormGame, player: usize, action: usize) -> BehaviorStrategy {
        let mut choices = BTreeMap::new();
        for id in g.player_infosets(player) {
            choices.insert(id, action.min(g.infoset(id).num_actions() - 1));
        }
        BehaviorStrategy::pure(g, player, &choices)
    }

    #[test]
    fn is_perfect_information_with_uniform_deal() {
        let g = bad_card(1.0).unwrap();
        assert!(g.is_perfect_information());
        assert!(g.has_chance_nodes());
        assert_eq!(g.num_terminals(), 15);
        assert_eq!(g.node_chance_probs(g.root()).len(), 3);
        // The dealer slot never moves.
        assert_eq!(g.player_infoset_ids(BAD_CARD_DEALER).len(), 0);
        assert_eq!(g.num_pure_strategies(BAD_CARD_DEALER), Some(1));
    }

    #[test]
    fn terminals_are_zero_sum_with_idle_dealer() {
        for g in [bad_card(1.5).unwrap(), bad_card_pruned(1.5).unwrap()] {
            for z in 0..g.num_terminals() {
                let u = g.terminal_utils(z);
                assert_eq!(u[BAD_CARD_DEALER], 0.0);
                assert!(u.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn call_subtree_terminal_payoffs() {
        // Walk the give-0 branch: (c, f, f) pays player 0 exactly +beta,
        // and the four call-subtree leaves pay player 0 (-1, -1, -1, +1)
        // over ((c,c), (c,f), (f,c), (f,f)) of players 1 and 2.
        let g = bad_card(1.0).unwrap();
        let give0 = g.node_children(g.root())[0];
        let after_call = g.node_children(give0)[1];
        let leaf = |a1: usize, a2: usize| -> &[f64] {
            let g1 = g.node_children(after_call)[a1];
            let g2 = g.node_children(g1)[a2];
            let NodeKind::Terminal { terminal } = g.node_kind(g2) else {
                panic!("expected a terminal");
            };
            g.terminal_utils(terminal)
        };
        assert_eq!(leaf(1, 1)[0], -1.0);
        assert_eq!(leaf(1, 0)[0], -1.0);
        assert_eq!(leaf(0, 1)[0], -1.0);
        assert_eq!(leaf(0, 0)[0], 1.0);
        // The figure's quoted leaves: both-call splits the pot, fold-fold
        // rewards the bad card.
        assert_eq!(leaf(1, 1), &[-1.0, 0.5, 0.5, 0.0]);
        assert_eq!(leaf(0, 0), &[1.0, -0.5, -0.5, 0.0]);
    }

    #[test]
    fn always_call_matches_enumeration_oracle() {
        let g = bad_card(1.0).unwrap();
        let mut profile = BehaviorProfile::uniform(&g);
        for p in 0..3 {
            profile = profile.replace(p, pure_everywhere(&g, p, 1));
        }
        let u = expected_utility_efg(&g, &profile).unwrap();
        // Oracle: each player is dealt the bad card with probability 1/3;
        // everyone calls, so the holder loses beta and the good cards
        // split it.
        let expect = (1.0 / 3.0) * (-1.0) + (2.0 / 3.0) * 0.5;
        for p in 0..3 {
            assert!((u[p] - expect).abs() < 1e-12);
        }
        assert_eq!(u[BAD_CARD_DEALER], 0.0);
    }

    #[test]
    fn induced_normal_form_shape() {
        let g = bad_card(1.0).unwrap();
        let nf = induced_normal_form(&g).unwrap();
        assert_eq!(nf.actions(), &[8, 16, 32, 1]);
        let pruned = induced_normal_form(&bad_card_pruned(1.0).unwrap()).unwrap();
        assert_eq!(pruned.actions(), &[2, 2, 2, 1]);
    }
}
