//! Equilibrium quality and vulnerability metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactdecomp::DeviationAdvantage;
use crate::games::efg::ExtensiveFormGame;
use crate::games::eval::{chance_reach, expected_utility_efg, player_reach};
use crate::games::normal_form::{NormalFormGame, ProfileIter};
use crate::games::strategy::{
    BehaviorProfile, BehaviorStrategy, EmpiricalDistribution, MixedProfile, MixedStrategy,
};
use crate::polymatrix::{PolyEfg, PolymatrixGame};
use crate::regret::{best_response_in, BrEnv};

/// Marginal strategy of one player: mu summed over everyone else.
pub fn marginal_strategy(
    game: &NormalFormGame,
    mu: &EmpiricalDistribution,
    player: usize,
) -> MixedStrategy {
    let mut probs = vec![0.0; game.actions()[player]];
    for (idx, profile) in game.profiles().enumerate() {
        probs[profile[player]] += mu.weight(idx);
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    MixedStrategy::new(probs).expect("marginalization preserves normalization")
}

pub fn marginal_profile(game: &NormalFormGame, mu: &EmpiricalDistribution) -> MixedProfile {
    MixedProfile::new(
        (0..game.num_players())
            .map(|p| marginal_strategy(game, mu, p))
            .collect(),
    )
}

/// Largest external-deviation advantage of `mu`: the epsilon for which mu
/// is an epsilon-CCE. May be negative for strict equilibria.
pub fn cce_gap(game: &NormalFormGame, mu: &EmpiricalDistribution) -> f64 {
    let mut gap = f64::NEG_INFINITY;
    for player in 0..game.num_players() {
        for target in 0..game.actions()[player] {
            gap = gap.max(DeviationAdvantage::global(game, player, target).evaluate(mu));
        }
    }
    gap
}

/// Largest unilateral pure-deviation gain from a mixed profile.
pub fn nash_gap_nf(game: &NormalFormGame, profile: &MixedProfile) -> Result<f64> {
    let base = game.expected_utility(profile)?;
    let mut gap = f64::NEG_INFINITY;
    for player in 0..game.num_players() {
        for action in 0..game.actions()[player] {
            let dev = game.deviation_utility(player, action, profile)?;
            gap = gap.max(dev - base[player]);
        }
    }
    Ok(gap)
}

fn check_opponent_sets<T>(num_players: usize, player: usize, sets: &[Vec<T>]) -> Result<()> {
    if sets.len() != num_players {
        return Err(Error::DimensionMismatch(format!(
            "{} opponent lists for {} players",
            sets.len(),
            num_players
        )));
    }
    for (j, set) in sets.iter().enumerate() {
        if j != player && set.is_empty() {
            return Err(Error::EmptyOpponentSet(j));
        }
    }
    Ok(())
}

/// Vulnerability of `profile` for `player` against finite per-player
/// opponent lists: training utility minus the minimum over the cross
/// product of the lists (opponents deviate independently).
pub fn vulnerability_finite_nf(
    game: &NormalFormGame,
    player: usize,
    profile: &MixedProfile,
    opponent_sets: &[Vec<MixedStrategy>],
) -> Result<f64> {
    check_opponent_sets(game.num_players(), player, opponent_sets)?;
    let base = game.expected_utility(profile)?[player];
    let others: Vec<usize> = (0..game.num_players()).filter(|&j| j != player).collect();
    let radices: Vec<usize> = others.iter().map(|&j| opponent_sets[j].len()).collect();
    let mut worst = f64::INFINITY;
    for pick in ProfileIter::new(&radices) {
        let mut candidate = profile.clone();
        for (slot, &j) in others.iter().enumerate() {
            candidate = candidate.replace(j, opponent_sets[j][pick[slot]].clone());
        }
        worst = worst.min(game.expected_utility(&candidate)?[player]);
    }
    Ok(base - worst)
}

/// Extensive-form version of [`vulnerability_finite_nf`], evaluated with
/// per-terminal reach products (no sampling).
pub fn vulnerability_finite_efg(
    game: &ExtensiveFormGame,
    player: usize,
    profile: &BehaviorProfile,
    opponent_sets: &[Vec<BehaviorStrategy>],
) -> Result<f64> {
    check_opponent_sets(game.num_players(), player, opponent_sets)?;
    profile.validate_for(game)?;
    let base = expected_utility_efg(game, profile)?[player];
    let z = game.num_terminals();
    // Fixed part: own reach, chance, and own utilities.
    let own = player_reach(game, profile.strategy(player))?;
    let chance = chance_reach(game);
    let fixed: Vec<f64> = (0..z)
        .map(|t| own[t] * chance[t] * game.terminal_utility(t, player))
        .collect();
    let others: Vec<usize> = (0..game.num_players()).filter(|&j| j != player).collect();
    let candidate_reach: Vec<Vec<Vec<f64>>> = others
        .iter()
        .map(|&j| {
            opponent_sets[j]
                .iter()
                .map(|s| {
                    if s.player() != j {
                        return Err(Error::InvalidStrategy(format!(
                            "opponent list {j} holds a strategy of player {}",
                            s.player()
                        )));
                    }
                    player_reach(game, s)
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let radices: Vec<usize> = others.iter().map(|&j| opponent_sets[j].len()).collect();
    let mut worst = f64::INFINITY;
    let mut scratch = vec![0.0; z];
    for pick in ProfileIter::new(&radices) {
        scratch.copy_from_slice(&fixed);
        for (slot, _) in others.iter().enumerate() {
            let r = &candidate_reach[slot][pick[slot]];
            for t in 0..z {
                scratch[t] *= r[t];
            }
        }
        worst = worst.min(scratch.iter().sum::<f64>());
    }
    Ok(base - worst)
}

/// Worst-case vulnerability in a pairwise constant-sum polymatrix game:
/// the per-subgame losses to a best-responding opponent, summed over the
/// player's edges. Equals the vulnerability against the full strategy
/// space because opponents minimize independently edge by edge.
pub fn vulnerability_polymatrix_nf(
    pg: &PolymatrixGame,
    player: usize,
    profile: &MixedProfile,
) -> Result<f64> {
    pg.require_constant_sum()?;
    let mut total = 0.0;
    for edge in pg.edges() {
        let (i, j) = (edge.i, edge.j);
        let other = if i == player {
            j
        } else if j == player {
            i
        } else {
            continue;
        };
        let current = pg.edge_utility_mixed(
            player,
            other,
            profile.strategy(player),
            profile.strategy(other),
        )?;
        // The minimum of a linear function over the simplex sits at a vertex.
        let mut worst = f64::INFINITY;
        for a in 0..pg.actions()[other] {
            worst = worst.min(pg.edge_utility_mixed_vs_pure(
                player,
                other,
                profile.strategy(player),
                a,
            )?);
        }
        total += current - worst;
    }
    Ok(total)
}

/// Extensive-form analogue: per-subgame best responses of each neighbor
/// minimizing the player's seat value (the subgames are constant-sum, so
/// the neighbor maximizes its own seat).
pub fn vulnerability_polymatrix_efg(
    pg: &PolyEfg,
    player: usize,
    profile: &BehaviorProfile,
) -> Result<f64> {
    let game = pg.game();
    profile.validate_for(game)?;
    let mut total = 0.0;
    for (e, &(i, j)) in pg.edges().iter().enumerate() {
        let other = if i == player {
            j
        } else if j == player {
            i
        } else {
            continue;
        };
        let (current, _) = pg.subgame_utility(
            player,
            other,
            profile.strategy(player),
            profile.strategy(other),
        )?;
        let opp_utils: Vec<f64> = (0..game.num_terminals())
            .map(|z| pg.seat_terminal_util(e, other, z))
            .collect();
        let env = BrEnv::Subgame {
            opponent: profile.strategy(player),
            chance: pg.edge_chance(e),
        };
        let (opp_best, _) = best_response_in(game, other, &opp_utils, &env)?;
        let worst_for_player = pg.constant(e) - opp_best;
        total += current - worst_for_player;
    }
    Ok(total)
}

/// Simplex-grid points with step `1/m` for a simplex of dimension `k`.
fn simplex_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in 0..=left {
            prefix.push(take);
            rec(k - 1, left - take, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    rec(k, m, &mut Vec::new(), &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / m as f64).collect())
        .collect()
}

/// Brute-force vulnerability oracle: minimize the player's utility over a
/// simplex grid of independent opponent mixed strategies. Guarded to tiny
/// games; accuracy is within a Lipschitz constant times the resolution.
pub fn vulnerability_grid_oracle(
    game: &NormalFormGame,
    player: usize,
    profile: &MixedProfile,
    resolution: f64,
) -> Result<f64> {
    if game.num_players() > 3 {
        return Err(Error::GuardExceeded {
            what: "grid oracle players",
            limit: 3,
            actual: game.num_players(),
        });
    }
    for (j, &k) in game.actions().iter().enumerate() {
        if j != player && k > 4 {
            return Err(Error::GuardExceeded {
                what: "grid oracle opponent actions",
                limit: 4,
                actual: k,
            });
        }
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be positive, got {resolution}"
        )));
    }
    let m = ((1.0 / resolution).round() as usize).max(1);
    let base = game.expected_utility(profile)?[player];
    let others: Vec<usize> = (0..game.num_players()).filter(|&j| j != player).collect();
    let grids: Vec<Vec<MixedStrategy>> = others
        .iter()
        .map(|&j| {
            simplex_grid(game.actions()[j], m)
                .into_iter()
                .map(|w| MixedStrategy::new(w).expect("grid weights normalized"))
                .collect()
        })
        .collect();
    let radices: Vec<usize> = grids.iter().map(|g| g.len()).collect();
    let mut worst = f64::INFINITY;
    for pick in ProfileIter::new(&radices) {
        let mut candidate = profile.clone();
        for (slot, &j) in others.iter().enumerate() {
            candidate = candidate.replace(j, grids[slot][pick[slot]].clone());
        }
        worst = worst.min(game.expected_utility(&candidate)?[player]);
    }
    Ok(base - worst)
}

/// The vulnerability ceilings from the decomposition quality numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityBound {
    /// |E_i| * gamma + 2 * delta.
    pub edge: f64,
    /// (n - 1) * gamma + 2 * delta.
    pub loose: f64,
}

pub fn bound(edges_incident: usize, num_players: usize, gamma: f64, delta: f64) -> VulnerabilityBound {
    VulnerabilityBound {
        edge: edges_incident as f64 * gamma + 2.0 * delta,
        loose: (num_players.saturating_sub(1)) as f64 * gamma + 2.0 * delta,
    }
}

/// How the opponent set of a vulnerability evaluation was modelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OpponentModel {
    FiniteSet { size: usize },
    PolymatrixWorstCase,
    GridOracle { resolution: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub opponent_model: OpponentModel,
    /// Vul_i per player.
    pub per_player: Vec<f64>,
    /// (n-1) * gamma + 2 * delta when a decomposition is available.
    pub bound: Option<f64>,
    /// bound / max vulnerability, when both are available and positive.
    pub ratio: Option<f64>,
}

impl VulnerabilityReport {
    pub fn max_vulnerability(&self) -> f64 {
        self.per_player.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn csv_header() -> &'static str {
        "run,player,vulnerability,bound,ratio"
    }

    /// One CSV row per player.
    pub fn csv_rows(&self, run: &str) -> Vec<String> {
        self.per_player
            .iter()
            .enumerate()
            .map(|(player, v)| {
                format!(
                    "{run},{player},{v},{},{}",
                    self.bound.map_or(String::new(), |b| b.to_string()),
                    self.ratio.map_or(String::new(), |r| r.to_string()),
                )
            })
            .collect()
    }
}
