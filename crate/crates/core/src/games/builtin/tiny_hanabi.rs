//! A three-player signalling game in the spirit of Hanabi. Chance deals
//! hand A or B; only player 1 sees the deal and moves first, so its action
//! is a signal. Players 2 and 3 must then match the deal ((a, a) for A,
//! (b, b) for B) for everyone to score 1; any other outcome scores 0.
//! Player 2 observes the signal; player 3 observes the signal and player
//! 2's action, but never the deal itself.

use crate::games::efg::{ExtensiveFormGame, GameBuilder, InfosetId, TreeSpec};

pub fn tiny_hanabi() -> ExtensiveFormGame {
    let mut b = GameBuilder::new(3);
    let p1_a = b.infoset_str(0, "p1:A", &["s1", "s2"]);
    let p1_b = b.infoset_str(0, "p1:B", &["s1", "s2"]);
    let p2: Vec<InfosetId> = (1..=2)
        .map(|s| b.infoset_str(1, format!("p2:s{s}"), &["a", "b"]))
        .collect();
    let p3: Vec<Vec<InfosetId>> = (1..=2)
        .map(|s| {
            ["a", "b"]
                .iter()
                .map(|act| b.infoset_str(2, format!("p3:s{s}:{act}"), &["a", "b"]))
                .collect()
        })
        .collect();

    let deal_subtree = |deal: usize, p1_infoset: InfosetId| {
        let winning_action = deal; // A needs (a, a), B needs (b, b)
        let signals = (0..2)
            .map(|signal| {
                let p2_children = (0..2)
                    .map(|p2_action| {
                        let p3_children = (0..2)
                            .map(|p3_action| {
                                let win =
                                    p2_action == winning_action && p3_action == winning_action;
                                let v = if win { 1.0 } else { 0.0 };
                                TreeSpec::Terminal {
                                    utils: vec![v, v, v],
                                }
                            })
                            .collect();
                        TreeSpec::Decision {
                            infoset: p3[signal][p2_action],
                            children: p3_children,
                        }
                    })
                    .collect();
                TreeSpec::Decision {
                    infoset: p2[signal],
                    children: p2_children,
                }
            })
            .collect();
        TreeSpec::Decision {
            infoset: p1_infoset,
            children: signals,
        }
    };

    b.build(TreeSpec::Chance {
        outcomes: vec![(0.5, deal_subtree(0, p1_a)), (0.5, deal_subtree(1, p1_b))],
    })
    .expect("tiny hanabi construction is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let g = tiny_hanabi();
        assert_eq!(g.num_terminals(), 16);
        assert_eq!(g.num_pure_strategies(0), Some(4));
        assert_eq!(g.num_pure_strategies(1), Some(4));
        assert_eq!(g.num_pure_strategies(2), Some(16));
        assert!(!g.is_perfect_information());
    }

    #[test]
    fn only_matched_deals_score() {
        let g = tiny_hanabi();
        let winners: usize = (0..g.num_terminals())
            .filter(|&z| g.terminal_utility(z, 0) == 1.0)
            .count();
        // Per deal and signal there is exactly one (a,a)/(b,b) winner: 4 total.
        assert_eq!(winners, 4);
        for z in 0..g.num_terminals() {
            let u = g.terminal_utils(z);
            assert!(u.iter().all(|&x| x == u[0]));
        }
    }
}
