//! Three-player Leduc hold'em.
//!
//! Eight cards (four ranks, two suits), ante 1, one private card each, two
//! betting rounds with fixed raise sizes 2 then 4 and at most two raises
//! per round, one public card between the rounds. At showdown a private
//! card pairing the public card beats everything else; otherwise the
//! highest private rank wins, with ties splitting the pot.
//!
//! Suits never affect the outcome, so chance deals ranks with the
//! multiplicities of the 8-card deck instead of distinct cards. This
//! collapses suit-equivalent deals into one history (a several-fold
//! smaller tree) and leaves every strategy-measurable quantity unchanged.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, GameBuilder, InfosetId, TreeSpec};

const NUM_RANKS: usize = 4;
const COPIES: usize = 2;
const BET_SIZE: [f64; 2] = [2.0, 4.0];
const MAX_RAISES: usize = 2;
const ANTE: f64 = 1.0;

pub fn leduc_poker(players: usize) -> Result<ExtensiveFormGame> {
    if players != 3 {
        return Err(Error::InvalidBuiltinParams(format!(
            "leduc_poker supports exactly 3 players in this implementation, got {players}"
        )));
    }
    let mut builder = LeducBuilder {
        players,
        b: GameBuilder::new(players),
        infosets: BTreeMap::new(),
    };
    let mut counts = [COPIES; NUM_RANKS];
    let mut ranks = Vec::new();
    let root = builder.deal_private(&mut counts, &mut ranks);
    builder.b.build(root)
}

#[derive(Clone)]
struct BetState {
    round: usize,
    folded: Vec<bool>,
    contrib: Vec<f64>,
    stakes: f64,
    raises: usize,
    pending: VecDeque<usize>,
    hist: String,
    public: Option<usize>,
}

impl BetState {
    fn active(&self) -> Vec<usize> {
        (0..self.folded.len()).filter(|&p| !self.folded[p]).collect()
    }
}

struct LeducBuilder {
    players: usize,
    b: GameBuilder,
    infosets: BTreeMap<String, InfosetId>,
}

impl LeducBuilder {
    fn deal_private(&mut self, counts: &mut [usize; NUM_RANKS], ranks: &mut Vec<usize>) -> TreeSpec {
        if ranks.len() == self.players {
            let mut state = BetState {
                round: 0,
                folded: vec![false; self.players],
                contrib: vec![ANTE; self.players],
                stakes: ANTE,
                raises: 0,
                pending: (0..self.players).collect(),
                hist: String::new(),
                public: None,
            };
            return self.act(ranks, counts, &mut state);
        }
        self.rank_chance(counts, |this, counts, rank| {
            ranks.push(rank);
            let sub = this.deal_private(counts, ranks);
            ranks.pop();
            sub
        })
    }

    fn rank_chance(
        &mut self,
        counts: &mut [usize; NUM_RANKS],
        mut child: impl FnMut(&mut Self, &mut [usize; NUM_RANKS], usize) -> TreeSpec,
    ) -> TreeSpec {
        let total: usize = counts.iter().sum();
        let mut outcomes = Vec::new();
        for rank in 0..NUM_RANKS {
            if counts[rank] == 0 {
                continue;
            }
            let p = counts[rank] as f64 / total as f64;
            counts[rank] -= 1;
            let sub = child(self, counts, rank);
            counts[rank] += 1;
            outcomes.push((p, sub));
        }
        TreeSpec::Chance { outcomes }
    }

    fn infoset(
        &mut self,
        player: usize,
        rank: usize,
        state: &BetState,
        actions: &[&str],
    ) -> InfosetId {
        let key = format!("p{player}:{rank}:{}", state.hist);
        if let Some(&id) = self.infosets.get(&key) {
            return id;
        }
        let id = self.b.infoset_str(player, key.clone(), actions);
        self.infosets.insert(key, id);
        id
    }

    fn act(
        &mut self,
        ranks: &[usize],
        counts: &mut [usize; NUM_RANKS],
        state: &mut BetState,
    ) -> TreeSpec {
        let Some(player) = state.pending.pop_front() else {
            return self.round_over(ranks, counts, state);
        };
        let can_fold = state.contrib[player] < state.stakes;
        let can_raise = state.raises < MAX_RAISES;
        let mut actions = Vec::new();
        if can_fold {
            actions.push("f");
        }
        actions.push("c");
        if can_raise {
            actions.push("r");
        }
        let infoset = self.infoset(player, ranks[player], state, &actions);
        let mut children = Vec::with_capacity(actions.len());
        for &action in &actions {
            let mut next = state.clone();
            next.hist.push_str(action);
            match action {
                "f" => {
                    next.folded[player] = true;
                    if next.active().len() == 1 {
                        children.push(self.fold_out(&next));
                        continue;
                    }
                }
                "c" => {
                    next.contrib[player] = next.stakes;
                }
                "r" => {
                    next.stakes += BET_SIZE[state.round];
                    next.contrib[player] = next.stakes;
                    next.raises += 1;
                    next.pending = (1..self.players)
                        .map(|d| (player + d) % self.players)
                        .filter(|&q| !next.folded[q])
                        .collect();
                }
                _ => unreachable!(),
            }
            children.push(self.act(ranks, counts, &mut next));
        }
        TreeSpec::Decision { infoset, children }
    }

    fn round_over(
        &mut self,
        ranks: &[usize],
        counts: &mut [usize; NUM_RANKS],
        state: &mut BetState,
    ) -> TreeSpec {
        if state.round == 0 {
            // Deal the public card and start the second round.
            self.rank_chance(counts, |this, counts, public| {
                let mut next = state.clone();
                next.round = 1;
                next.raises = 0;
                next.public = Some(public);
                next.hist.push_str(&format!("|{public}|"));
                next.pending = next.active().into();
                this.act(ranks, counts, &mut next)
            })
        } else {
            self.showdown(ranks, state)
        }
    }

    fn fold_out(&self, state: &BetState) -> TreeSpec {
        let winner = state.active()[0];
        let pot: f64 = state.contrib.iter().sum();
        let utils = (0..self.players)
            .map(|p| if p == winner { pot } else { 0.0 } - state.contrib[p])
            .collect();
        TreeSpec::Terminal { utils }
    }

    fn showdown(&self, ranks: &[usize], state: &BetState) -> TreeSpec {
        let public = state.public.expect("showdown before the public card");
        let strength = |p: usize| {
            if ranks[p] == public {
                NUM_RANKS + ranks[p]
            } else {
                ranks[p]
            }
        };
        let active = state.active();
        let best = active.iter().map(|&p| strength(p)).max().unwrap();
        let winners: Vec<usize> = active.into_iter().filter(|&p| strength(p) == best).collect();
        let pot: f64 = state.contrib.iter().sum();
        let share = pot / winners.len() as f64;
        let utils = (0..self.players)
            .map(|p| {
                if winners.contains(&p) {
                    share - state.contrib[p]
                } else {
                    -state.contrib[p]
                }
            })
            .collect();
        TreeSpec::Terminal { utils }
    }
}
