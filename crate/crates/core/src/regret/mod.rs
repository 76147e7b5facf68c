//! No-external-regret self-play: CFR and CFR+ with simultaneous updates.

mod br;

pub use br::{best_response, best_response_in, nash_gap, BrEnv};

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, NodeKind, DEGENERATE_PROB};
use crate::games::strategy::{BehaviorProfile, BehaviorStrategy};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cfr,
    CfrPlus,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cfr => "cfr",
            Algorithm::CfrPlus => "cfr+",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cfr" => Ok(Algorithm::Cfr),
            "cfr+" | "cfrplus" | "cfr_plus" => Ok(Algorithm::CfrPlus),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Regret matching: weights proportional to positive cumulative regret,
/// uniform when nothing is positive.
pub fn regret_match(regrets: &[f64]) -> Vec<f64> {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        regrets.iter().map(|r| r.max(0.0) / total).collect()
    } else {
        vec![1.0 / regrets.len() as f64; regrets.len()]
    }
}

/// Per-infoset cumulative regrets and weighted strategy sums for all
/// players, indexed by global infoset id.
#[derive(Debug, Clone)]
pub struct RegretTables {
    pub regrets: Vec<Vec<f64>>,
    pub strategy_sum: Vec<Vec<f64>>,
}

impl RegretTables {
    /// Initial regrets are i.i.d. uniform on [0, 0.001), drawn in infoset
    /// id then action order from the seeded generator.
    fn init(game: &ExtensiveFormGame, rng: &mut impl Rng) -> Self {
        let mut regrets = Vec::with_capacity(game.num_infosets());
        let mut strategy_sum = Vec::with_capacity(game.num_infosets());
        for id in 0..game.num_infosets() {
            let k = game.infoset(id).num_actions();
            regrets.push((0..k).map(|_| rng.random::<f64>() * 0.001).collect());
            strategy_sum.push(vec![0.0; k]);
        }
        Self {
            regrets,
            strategy_sum,
        }
    }

    /// The average profile: strategy sums normalized per infoset, uniform
    /// where no weight accumulated (unreached infosets).
    pub fn average_profile(&self, game: &ExtensiveFormGame) -> BehaviorProfile {
        let strategies = (0..game.num_players())
            .map(|player| {
                let mut probs = BTreeMap::new();
                for id in game.player_infosets(player) {
                    let sums = &self.strategy_sum[id];
                    let total: f64 = sums.iter().sum();
                    let dist = if total > 0.0 {
                        sums.iter().map(|s| s / total).collect()
                    } else {
                        vec![1.0 / sums.len() as f64; sums.len()]
                    };
                    probs.insert(id, dist);
                }
                BehaviorStrategy::new(player, probs).expect("normalized averages")
            })
            .collect();
        BehaviorProfile::new(strategies)
    }
}

/// One completed self-play run.
#[derive(Debug, Clone)]
pub struct SelfPlayRun {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub iterations: u64,
    /// The average behavior profile: the marginal strategy profile of the
    /// empirical distribution of play.
    pub profile: BehaviorProfile,
    /// (iteration, nash gap) samples when checkpointing was requested.
    pub checkpoints: Vec<(u64, f64)>,
}

/// Scratch buffers reused across iterations.
struct Walker {
    // Per node: reach per player plus chance in the last slot.
    reach: Vec<f64>,
    // Per node: expected utility per player under the current profile.
    utils: Vec<f64>,
    // Current strategy per infoset.
    current: Vec<Vec<f64>>,
}

impl Walker {
    fn new(game: &ExtensiveFormGame) -> Self {
        let n = game.num_players();
        Self {
            reach: vec![0.0; game.num_nodes() * (n + 1)],
            utils: vec![0.0; game.num_nodes() * n],
            current: (0..game.num_infosets())
                .map(|id| vec![0.0; game.infoset(id).num_actions()])
                .collect(),
        }
    }

    /// One simultaneous CFR iteration: every player's regrets and strategy
    /// sums are updated from the same current profile.
    fn iterate(&mut self, game: &ExtensiveFormGame, tables: &mut RegretTables, weight: f64) {
        let n = game.num_players();
        let stride = n + 1;
        for (id, dist) in self.current.iter_mut().enumerate() {
            dist.copy_from_slice(&regret_match(&tables.regrets[id]));
        }
        // Forward: per-player reach products.
        self.reach[..stride].iter_mut().for_each(|r| *r = 1.0);
        for id in 0..game.num_nodes() {
            let base = id * stride;
            match game.node_kind(id) {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance => {
                    let probs = game.node_chance_probs(id);
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        let cb = child * stride;
                        for k in 0..stride {
                            self.reach[cb + k] = self.reach[base + k];
                        }
                        self.reach[cb + n] *= probs[slot];
                    }
                }
                NodeKind::Decision { infoset } => {
                    let owner = game.infoset(infoset).player();
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        let p = self.current[infoset][slot];
                        let cb = child * stride;
                        for k in 0..stride {
                            self.reach[cb + k] = self.reach[base + k];
                        }
                        self.reach[cb + owner] *= p;
                    }
                }
            }
        }
        // Backward: utilities, regret and average-strategy accumulation.
        for id in (0..game.num_nodes()).rev() {
            let base = id * n;
            match game.node_kind(id) {
                NodeKind::Terminal { terminal } => {
                    self.utils[base..base + n].copy_from_slice(game.terminal_utils(terminal));
                }
                NodeKind::Chance => {
                    let probs = game.node_chance_probs(id);
                    self.utils[base..base + n].iter_mut().for_each(|u| *u = 0.0);
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        let p = probs[slot];
                        if p < DEGENERATE_PROB {
                            continue;
                        }
                        for k in 0..n {
                            self.utils[base + k] += p * self.utils[child * n + k];
                        }
                    }
                }
                NodeKind::Decision { infoset } => {
                    let owner = game.infoset(infoset).player();
                    self.utils[base..base + n].iter_mut().for_each(|u| *u = 0.0);
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        let p = self.current[infoset][slot];
                        if p < DEGENERATE_PROB {
                            continue;
                        }
                        for k in 0..n {
                            self.utils[base + k] += p * self.utils[child * n + k];
                        }
                    }
                    let rbase = id * stride;
                    let mut cf_reach = self.reach[rbase + n];
                    for k in 0..n {
                        if k != owner {
                            cf_reach *= self.reach[rbase + k];
                        }
                    }
                    let own_reach = self.reach[rbase + owner];
                    let node_value = self.utils[base + owner];
                    for (slot, &child) in game.node_children(id).iter().enumerate() {
                        if cf_reach != 0.0 {
                            tables.regrets[infoset][slot] +=
                                cf_reach * (self.utils[child * n + owner] - node_value);
                        }
                        tables.strategy_sum[infoset][slot] +=
                            weight * own_reach * self.current[infoset][slot];
                    }
                }
            }
        }
    }
}

/// Train `algorithm` by self-play for `iterations` full tree walks.
///
/// CFR accumulates plain regrets with uniformly weighted averaging; CFR+
/// clips cumulative regrets at zero after each iteration and weights the
/// average strategy linearly by iteration index. Updates are simultaneous
/// for all players. (The other common variant pairs CFR+ with alternating
/// per-player updates; the simultaneous form is used here so one tree walk
/// serves every player.)
pub fn train(
    game: &ExtensiveFormGame,
    algorithm: Algorithm,
    iterations: u64,
    seed: u64,
) -> SelfPlayRun {
    train_inner(game, algorithm, iterations, seed, None)
}

/// As [`train`], recording the nash gap of the running average profile
/// every `max(1, iterations / 100)` iterations.
pub fn train_with_checkpoints(
    game: &ExtensiveFormGame,
    algorithm: Algorithm,
    iterations: u64,
    seed: u64,
) -> SelfPlayRun {
    let cadence = (iterations / 100).max(1);
    train_inner(game, algorithm, iterations, seed, Some(cadence))
}

fn train_inner(
    game: &ExtensiveFormGame,
    algorithm: Algorithm,
    iterations: u64,
    seed: u64,
    checkpoint_every: Option<u64>,
) -> SelfPlayRun {
    assert!(iterations >= 1, "need at least one iteration");
    let mut rng = seeded_rng(seed);
    let mut tables = RegretTables::init(game, &mut rng);
    let mut walker = Walker::new(game);
    let mut checkpoints = Vec::new();
    for t in 1..=iterations {
        let weight = match algorithm {
            Algorithm::Cfr => 1.0,
            Algorithm::CfrPlus => t as f64,
        };
        walker.iterate(game, &mut tables, weight);
        if algorithm == Algorithm::CfrPlus {
            for regrets in &mut tables.regrets {
                for r in regrets {
                    if *r < 0.0 {
                        *r = 0.0;
                    }
                }
            }
        }
        if let Some(every) = checkpoint_every {
            if t % every == 0 || t == iterations {
                let profile = tables.average_profile(game);
                let gap = nash_gap(game, &profile).expect("profile covers the game");
                checkpoints.push((t, gap));
            }
        }
    }
    SelfPlayRun {
        algorithm,
        seed,
        iterations,
        profile: tables.average_profile(game),
        checkpoints,
    }
}

/// Serialize a behavior profile as a map from infoset key to its action
/// probability array.
pub fn profile_to_json(game: &ExtensiveFormGame, profile: &BehaviorProfile) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for player in 0..game.num_players() {
        for (id, dist) in profile.strategy(player).iter() {
            map.insert(
                game.infoset(id).key().to_string(),
                serde_json::json!(dist),
            );
        }
    }
    serde_json::Value::Object(map)
}

pub fn profile_from_json(
    game: &ExtensiveFormGame,
    value: &serde_json::Value,
) -> Result<BehaviorProfile> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidConfig("profile document must be an object".into()))?;
    let mut per_player: Vec<BTreeMap<usize, Vec<f64>>> =
        vec![BTreeMap::new(); game.num_players()];
    for (key, dist) in obj {
        let id = game
            .infoset_by_key(key)
            .ok_or_else(|| Error::MissingInfoset(key.clone()))?;
        let dist: Vec<f64> = serde_json::from_value(dist.clone())?;
        per_player[game.infoset(id).player()].insert(id, dist);
    }
    let strategies = per_player
        .into_iter()
        .enumerate()
        .map(|(player, probs)| BehaviorStrategy::new(player, probs))
        .collect::<Result<Vec<_>>>()?;
    let profile = BehaviorProfile::new(strategies);
    profile.validate_for(game)?;
    Ok(profile)
}
