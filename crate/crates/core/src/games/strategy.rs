//! Strategy representations shared across the crate.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, InfosetId};

pub const DIST_TOL: f64 = 1e-12;
pub const EMPIRICAL_TOL: f64 = 1e-10;

fn check_distribution(probs: &[f64], tol: f64, what: &str) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidStrategy(format!(
            "{what}: negative or non-finite probability"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidStrategy(format!(
            "{what}: probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Distribution over one player's pure strategies of a normal-form game.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs, DIST_TOL, "mixed strategy")?;
        Ok(Self { probs })
    }

    pub fn uniform(num_pure: usize) -> Self {
        Self {
            probs: vec![1.0 / num_pure as f64; num_pure],
        }
    }

    pub fn pure(num_pure: usize, index: usize) -> Self {
        let mut probs = vec![0.0; num_pure];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn num_pure(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, pure: usize) -> f64 {
        self.probs[pure]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Indices with non-zero weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    strategies: Vec<MixedStrategy>,
}

impl MixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Self { strategies }
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn replace(&self, player: usize, strategy: MixedStrategy) -> Self {
        let mut out = self.clone();
        out.strategies[player] = strategy;
        out
    }
}

/// Weight over the pure strategy profiles of a normal-form game, stored
/// dense in profile-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_distribution(&weights, EMPIRICAL_TOL, "empirical distribution")?;
        Ok(Self { weights })
    }

    pub fn point_mass(num_profiles: usize, index: usize) -> Self {
        let mut weights = vec![0.0; num_profiles];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, profile_index: usize) -> f64 {
        self.weights[profile_index]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Per-infoset action distributions for a single player of an EFG.
///
/// Keys are global infoset ids of that player; `BTreeMap` keeps iteration
/// order deterministic for serialization and hashing.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorStrategy {
    player: usize,
    probs: BTreeMap<InfosetId, Vec<f64>>,
}

impl BehaviorStrategy {
    pub fn new(player: usize, probs: BTreeMap<InfosetId, Vec<f64>>) -> Result<Self> {
        for dist in probs.values() {
            check_distribution(dist, DIST_TOL, "behavior strategy")?;
        }
        Ok(Self { player, probs })
    }

    /// Uniform at every infoset of `player`.
    pub fn uniform(game: &ExtensiveFormGame, player: usize) -> Self {
        let probs = game
            .player_infosets(player)
            .map(|id| {
                let k = game.infoset(id).num_actions();
                (id, vec![1.0 / k as f64; k])
            })
            .collect();
        Self { player, probs }
    }

    /// Deterministic strategy from a per-infoset action choice.
    pub fn pure(game: &ExtensiveFormGame, player: usize, action_at: &BTreeMap<InfosetId, usize>) -> Self {
        let probs = game
            .player_infosets(player)
            .map(|id| {
                let k = game.infoset(id).num_actions();
                let mut dist = vec![0.0; k];
                dist[*action_at.get(&id).unwrap_or(&0)] = 1.0;
                (id, dist)
            })
            .collect();
        Self { player, probs }
    }

    /// Plays action 0 everywhere; the canonical tie-break strategy.
    pub fn first_action(game: &ExtensiveFormGame, player: usize) -> Self {
        Self::pure(game, player, &BTreeMap::new())
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn probs_at(&self, infoset: InfosetId) -> Option<&[f64]> {
        self.probs.get(&infoset).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (InfosetId, &[f64])> {
        self.probs.iter().map(|(&id, v)| (id, v.as_slice()))
    }

    pub fn set(&mut self, infoset: InfosetId, dist: Vec<f64>) -> Result<()> {
        check_distribution(&dist, DIST_TOL, "behavior strategy")?;
        self.probs.insert(infoset, dist);
        Ok(())
    }

    /// Check this strategy covers every infoset of its player in `game`.
    pub fn validate_for(&self, game: &ExtensiveFormGame) -> Result<()> {
        for id in game.player_infosets(self.player) {
            match self.probs.get(&id) {
                None => return Err(Error::MissingInfoset(game.infoset(id).key().to_string())),
                Some(dist) => {
                    if dist.len() != game.infoset(id).num_actions() {
                        return Err(Error::DimensionMismatch(format!(
                            "infoset `{}` expects {} actions, strategy has {}",
                            game.infoset(id).key(),
                            game.infoset(id).num_actions(),
                            dist.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One behavior strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    strategies: Vec<BehaviorStrategy>,
}

impl BehaviorProfile {
    pub fn new(strategies: Vec<BehaviorStrategy>) -> Self {
        Self { strategies }
    }

    pub fn uniform(game: &ExtensiveFormGame) -> Self {
        Self {
            strategies: (0..game.num_players())
                .map(|p| BehaviorStrategy::uniform(game, p))
                .collect(),
        }
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, player: usize) -> &BehaviorStrategy {
        &self.strategies[player]
    }

    pub fn strategies(&self) -> &[BehaviorStrategy] {
        &self.strategies
    }

    pub fn replace(&self, player: usize, strategy: BehaviorStrategy) -> Self {
        let mut out = self.clone();
        out.strategies[player] = strategy;
        out
    }

    pub fn validate_for(&self, game: &ExtensiveFormGame) -> Result<()> {
        if self.strategies.len() != game.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} players, game has {}",
                self.strategies.len(),
                game.num_players()
            )));
        }
        for s in &self.strategies {
            s.validate_for(game)?;
        }
        Ok(())
    }

    /// Validate every strategy except `skip` (for partial profiles).
    pub fn validate_except(&self, game: &ExtensiveFormGame, skip: usize) -> Result<()> {
        if self.strategies.len() != game.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} players, game has {}",
                self.strategies.len(),
                game.num_players()
            )));
        }
        for (p, s) in self.strategies.iter().enumerate() {
            if p != skip {
                s.validate_for(game)?;
            }
        }
        Ok(())
    }
}
