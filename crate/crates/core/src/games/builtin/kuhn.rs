//! Kuhn poker for two or three players.
//!
//! The deck has one more card than there are players; each player antes 1
//! and receives one card. Players act in seat order: check or bet (one
//! chip) while no bet is outstanding; once someone bets, every other
//! player in turn folds or calls and the hand ends. Showdown awards the
//! pot to the highest card among the players still in.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, GameBuilder, InfosetId, TreeSpec};

pub fn kuhn_poker(players: usize) -> Result<ExtensiveFormGame> {
    if !(2..=3).contains(&players) {
        return Err(Error::InvalidBuiltinParams(format!(
            "kuhn_poker supports 2 or 3 players, got {players}"
        )));
    }
    let mut builder = KuhnBuilder {
        players,
        b: GameBuilder::new(players),
        infosets: BTreeMap::new(),
    };
    let mut cards = Vec::new();
    let mut used = vec![false; players + 1];
    let root = builder.deal(&mut cards, &mut used);
    builder.b.build(root)
}

struct KuhnBuilder {
    players: usize,
    b: GameBuilder,
    infosets: BTreeMap<String, InfosetId>,
}

impl KuhnBuilder {
    fn deal(&mut self, cards: &mut Vec<usize>, used: &mut [bool]) -> TreeSpec {
        if cards.len() == self.players {
            return self.check_phase(cards, 0, String::new());
        }
        let remaining: Vec<usize> = (0..=self.players).filter(|&c| !used[c]).collect();
        let p = 1.0 / remaining.len() as f64;
        let outcomes = remaining
            .into_iter()
            .map(|c| {
                used[c] = true;
                cards.push(c);
                let sub = self.deal(cards, used);
                cards.pop();
                used[c] = false;
                (p, sub)
            })
            .collect();
        TreeSpec::Chance { outcomes }
    }

    fn infoset(&mut self, player: usize, card: usize, hist: &str, actions: &[&str]) -> InfosetId {
        let key = format!("p{player}:{card}:{hist}");
        if let Some(&id) = self.infosets.get(&key) {
            return id;
        }
        let id = self.b.infoset_str(player, key.clone(), actions);
        self.infosets.insert(key, id);
        id
    }

    /// No bet outstanding; `player` may check or bet.
    fn check_phase(&mut self, cards: &[usize], player: usize, hist: String) -> TreeSpec {
        let infoset = self.infoset(player, cards[player], &hist, &["k", "b"]);
        let on_check = if player + 1 == self.players {
            // Everyone checked: showdown with all players at 1 chip each.
            self.showdown(cards, &(0..self.players).collect::<Vec<_>>(), None)
        } else {
            self.check_phase(cards, player + 1, format!("{hist}k"))
        };
        let responders: Vec<usize> = (1..self.players).map(|d| (player + d) % self.players).collect();
        let on_bet = self.respond_phase(
            cards,
            player,
            &responders,
            0,
            format!("{hist}b"),
            Vec::new(),
        );
        TreeSpec::Decision {
            infoset,
            children: vec![on_check, on_bet],
        }
    }

    /// A bet is outstanding; remaining players fold or call in turn.
    fn respond_phase(
        &mut self,
        cards: &[usize],
        bettor: usize,
        responders: &[usize],
        idx: usize,
        hist: String,
        callers: Vec<usize>,
    ) -> TreeSpec {
        if idx == responders.len() {
            let mut active = vec![bettor];
            active.extend(&callers);
            active.sort_unstable();
            return self.showdown(cards, &active, Some((bettor, callers)));
        }
        let player = responders[idx];
        let infoset = self.infoset(player, cards[player], &hist, &["f", "c"]);
        let on_fold = self.respond_phase(
            cards,
            bettor,
            responders,
            idx + 1,
            format!("{hist}f"),
            callers.clone(),
        );
        let mut with_call = callers;
        with_call.push(player);
        let on_call = self.respond_phase(
            cards,
            bettor,
            responders,
            idx + 1,
            format!("{hist}c"),
            with_call,
        );
        TreeSpec::Decision {
            infoset,
            children: vec![on_fold, on_call],
        }
    }

    fn showdown(
        &mut self,
        cards: &[usize],
        active: &[usize],
        bet: Option<(usize, Vec<usize>)>,
    ) -> TreeSpec {
        let mut contrib = vec![1.0; self.players];
        if let Some((bettor, callers)) = &bet {
            contrib[*bettor] += 1.0;
            for &c in callers {
                contrib[c] += 1.0;
            }
        }
        let pot: f64 = contrib.iter().sum();
        let winner = *active
            .iter()
            .max_by_key(|&&p| cards[p])
            .expect("showdown with no active players");
        let utils = (0..self.players)
            .map(|p| if p == winner { pot } else { 0.0 } - contrib[p])
            .collect();
        TreeSpec::Terminal { utils }
    }
}
