//! Dense normal-form games.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::strategy::{MixedProfile, MixedStrategy};

/// An n-player normal-form game with a dense utility table.
///
/// Utilities are stored profile-major: entry `profile_index * n + player`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    actions: Vec<usize>,
    utilities: Vec<f64>,
}

impl NormalFormGame {
    pub fn new(actions: Vec<usize>, utilities: Vec<f64>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidGame("need at least one player".into()));
        }
        if actions.iter().any(|&k| k == 0) {
            return Err(Error::InvalidGame(
                "every player needs at least one pure strategy".into(),
            ));
        }
        let profiles = actions.iter().product::<usize>();
        let expected = profiles * actions.len();
        if utilities.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "utility table has {} entries, expected {}",
                utilities.len(),
                expected
            )));
        }
        if utilities.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidGame("non-finite utility".into()));
        }
        Ok(Self { actions, utilities })
    }

    /// Build from a per-profile payoff function.
    pub fn from_fn(actions: Vec<usize>, mut payoff: impl FnMut(&[usize]) -> Vec<f64>) -> Self {
        let n = actions.len();
        let mut utilities = Vec::with_capacity(actions.iter().product::<usize>() * n);
        for profile in ProfileIter::new(&actions) {
            let u = payoff(&profile);
            assert_eq!(u.len(), n, "payoff function returned wrong arity");
            utilities.extend(u);
        }
        Self { actions, utilities }
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    /// Pure-strategy counts per player.
    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn num_profiles(&self) -> usize {
        self.actions.iter().product()
    }

    pub fn profile_index(&self, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.actions.len());
        let mut idx = 0;
        for (p, &a) in profile.iter().enumerate() {
            debug_assert!(a < self.actions[p]);
            idx = idx * self.actions[p] + a;
        }
        idx
    }

    pub fn profiles(&self) -> ProfileIter {
        ProfileIter::new(&self.actions)
    }

    pub fn utility(&self, profile: &[usize], player: usize) -> f64 {
        self.utilities[self.profile_index(profile) * self.num_players() + player]
    }

    pub fn utilities_at(&self, profile: &[usize]) -> &[f64] {
        let n = self.num_players();
        let idx = self.profile_index(profile);
        &self.utilities[idx * n..(idx + 1) * n]
    }

    pub fn utilities_at_index(&self, profile_index: usize) -> &[f64] {
        let n = self.num_players();
        &self.utilities[profile_index * n..(profile_index + 1) * n]
    }

    /// Expected utility of a mixed profile, per player.
    pub fn expected_utility(&self, profile: &MixedProfile) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        let n = self.num_players();
        let mut out = vec![0.0; n];
        for (idx, pure) in self.profiles().enumerate() {
            let mut weight = 1.0;
            for (p, &a) in pure.iter().enumerate() {
                weight *= profile.strategy(p).prob(a);
                if weight == 0.0 {
                    break;
                }
            }
            if weight == 0.0 {
                continue;
            }
            for (i, u) in self.utilities_at_index(idx).iter().enumerate() {
                out[i] += weight * u;
            }
        }
        Ok(out)
    }

    /// Expected utility for `player` when they commit to pure strategy
    /// `action` and everyone else follows `profile`.
    pub fn deviation_utility(
        &self,
        player: usize,
        action: usize,
        profile: &MixedProfile,
    ) -> Result<f64> {
        self.check_profile(profile)?;
        let mut total = 0.0;
        for pure in self.profiles() {
            if pure[player] != action {
                continue;
            }
            let mut weight = 1.0;
            for (p, &a) in pure.iter().enumerate() {
                if p == player {
                    continue;
                }
                weight *= profile.strategy(p).prob(a);
                if weight == 0.0 {
                    break;
                }
            }
            if weight == 0.0 {
                continue;
            }
            total += weight * self.utility(&pure, player);
        }
        Ok(total)
    }

    fn check_profile(&self, profile: &MixedProfile) -> Result<()> {
        if profile.num_players() != self.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} players, game has {}",
                profile.num_players(),
                self.num_players()
            )));
        }
        for (p, &k) in self.actions.iter().enumerate() {
            if profile.strategy(p).num_pure() != k {
                return Err(Error::DimensionMismatch(format!(
                    "player {p} strategy covers {} pure strategies, game has {k}",
                    profile.strategy(p).num_pure()
                )));
            }
        }
        Ok(())
    }

    pub fn uniform_profile(&self) -> MixedProfile {
        MixedProfile::new(
            self.actions
                .iter()
                .map(|&k| MixedStrategy::uniform(k))
                .collect(),
        )
    }

    pub fn pure_profile(&self, actions: &[usize]) -> MixedProfile {
        MixedProfile::new(
            actions
                .iter()
                .zip(&self.actions)
                .map(|(&a, &k)| MixedStrategy::pure(k, a))
                .collect(),
        )
    }

    /// One-shot extensive form: players move in index order, each at a
    /// single infoset that hides every earlier move.
    pub fn to_one_shot_efg(&self) -> crate::games::efg::ExtensiveFormGame {
        use crate::games::efg::{GameBuilder, InfosetId, TreeSpec};
        let mut b = GameBuilder::new(self.num_players());
        let infosets: Vec<InfosetId> = (0..self.num_players())
            .map(|p| {
                b.infoset(
                    p,
                    format!("p{p}"),
                    (0..self.actions[p]).map(|a| format!("a{a}")).collect(),
                )
            })
            .collect();
        fn subtree(
            g: &NormalFormGame,
            infosets: &[InfosetId],
            prefix: &mut Vec<usize>,
        ) -> TreeSpec {
            let p = prefix.len();
            if p == g.num_players() {
                return TreeSpec::Terminal {
                    utils: g.utilities_at(prefix).to_vec(),
                };
            }
            let children = (0..g.actions[p])
                .map(|a| {
                    prefix.push(a);
                    let child = subtree(g, infosets, prefix);
                    prefix.pop();
                    child
                })
                .collect();
            TreeSpec::Decision {
                infoset: infosets[p],
                children,
            }
        }
        let spec = subtree(self, &infosets, &mut Vec::new());
        b.build(spec).expect("one-shot conversion is structurally valid")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut utilities = BTreeMap::new();
        for (idx, profile) in self.profiles().enumerate() {
            let key = profile
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",");
            utilities.insert(key, self.utilities_at_index(idx).to_vec());
        }
        serde_json::json!({
            "players": self.num_players(),
            "actions": self.actions,
            "utilities": utilities,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: NormalFormDoc = serde_json::from_value(value.clone())?;
        if doc.actions.len() != doc.players {
            return Err(Error::DimensionMismatch(format!(
                "`actions` lists {} players, `players` says {}",
                doc.actions.len(),
                doc.players
            )));
        }
        let profiles: usize = doc.actions.iter().product();
        let n = doc.players;
        let mut utilities = vec![0.0; profiles * n];
        let mut seen = vec![false; profiles];
        let probe = Self {
            actions: doc.actions.clone(),
            utilities: vec![],
        };
        for (key, payoffs) in &doc.utilities {
            let profile: Vec<usize> = key
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidGame(format!("bad profile key `{key}`")))
                })
                .collect::<Result<_>>()?;
            if profile.len() != n {
                return Err(Error::InvalidGame(format!(
                    "profile key `{key}` has wrong arity"
                )));
            }
            for (p, &a) in profile.iter().enumerate() {
                if a >= doc.actions[p] {
                    return Err(Error::InvalidGame(format!(
                        "profile key `{key}` is out of range for player {p}"
                    )));
                }
            }
            if payoffs.len() != n {
                return Err(Error::InvalidGame(format!(
                    "payoff vector for `{key}` has wrong arity"
                )));
            }
            let idx = probe.profile_index(&profile);
            seen[idx] = true;
            utilities[idx * n..(idx + 1) * n].copy_from_slice(payoffs);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGame(format!(
                "utility table is not dense: profile index {missing} missing"
            )));
        }
        Self::new(doc.actions, utilities)
    }
}

#[derive(Serialize, Deserialize)]
struct NormalFormDoc {
    players: usize,
    actions: Vec<usize>,
    utilities: BTreeMap<String, Vec<f64>>,
}

/// Mixed-radix iteration over pure strategy profiles, last player fastest.
pub struct ProfileIter {
    radices: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl ProfileIter {
    pub fn new(radices: &[usize]) -> Self {
        Self {
            radices: radices.to_vec(),
            current: vec![0; radices.len()],
            done: radices.iter().any(|&r| r == 0),
        }
    }
}

impl Iterator for ProfileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut pos = self.radices.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.radices[pos] {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}
