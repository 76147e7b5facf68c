//! Stochastic-subgradient fitting of a constant-sum poly-EFG to a game in
//! the neighborhood of given strategy profiles.
//!
//! Each epoch recomputes per-subgame best responses against every
//! neighborhood strategy under the current decomposition, then sweeps the
//! cross product of neighborhood strategies in seeded-shuffled batches,
//! stepping the per-terminal edge utilities and edge constants along the
//! normalized subgradient of a loss balancing decomposition error against
//! subgame stability.

use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::games::efg::ExtensiveFormGame;
use crate::games::eval::{chance_reach, expected_utility_efg, player_reach};
use crate::games::normal_form::ProfileIter;
use crate::games::strategy::{BehaviorProfile, BehaviorStrategy};
use crate::polymatrix::PolyEfg;
use crate::regret::{best_response_in, BrEnv};
use crate::rng::seeded_rng;

/// Gradient steps are skipped when the stacked norm falls below this.
const GRAD_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SgConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight on the decomposition-error loss; 1 - lambda goes to the
    /// subgame-stability loss.
    pub lambda: f64,
    pub lr_start: f64,
    pub lr_halve_every: usize,
    pub lr_floor: f64,
    pub seed: u64,
}

impl Default for SgConfig {
    /// The experiment hyperparameters: lambda 0.5, batches of 30, 200
    /// epochs, learning rate 2^-6 halving every 5 epochs down to 2^-17.
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 30,
            lambda: 0.5,
            lr_start: (2.0f64).powi(-6),
            lr_halve_every: 5,
            lr_floor: (2.0f64).powi(-17),
            seed: 0,
        }
    }
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.lr_start > 0.0) || !(self.lr_floor > 0.0) || self.lr_halve_every < 1 {
            return Err(Error::InvalidConfig("bad learning-rate schedule".into()));
        }
        Ok(())
    }
}

/// Step size for a 1-based epoch: start, halving on a fixed cadence, with
/// a floor.
pub fn lr_schedule(cfg: &SgConfig, epoch: usize) -> f64 {
    debug_assert!(epoch >= 1);
    let halvings = ((epoch - 1) / cfg.lr_halve_every) as i32;
    (cfg.lr_start * (2.0f64).powi(-halvings)).max(cfg.lr_floor)
}

/// A finite set of strategy profiles; the per-player projections are the
/// neighborhood strategy sets and their cross product is the region where
/// decomposition quality is measured.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    profiles: Vec<BehaviorProfile>,
}

impl Neighborhood {
    pub fn from_profiles(profiles: Vec<BehaviorProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::EmptyNeighborhood);
        }
        let n = profiles[0].num_players();
        if profiles.iter().any(|p| p.num_players() != n) {
            return Err(Error::DimensionMismatch(
                "neighborhood profiles disagree on player count".into(),
            ));
        }
        Ok(Self { profiles })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[BehaviorProfile] {
        &self.profiles
    }

    pub fn strategy(&self, player: usize, k: usize) -> &BehaviorStrategy {
        self.profiles[k].strategy(player)
    }

    /// |cross product| = len^n.
    pub fn cross_size(&self, num_players: usize) -> usize {
        self.profiles.len().pow(num_players as u32)
    }

    pub fn validate_for(&self, game: &ExtensiveFormGame) -> Result<()> {
        for p in &self.profiles {
            p.validate_for(game)?;
        }
        Ok(())
    }
}

/// Subgradient over the decomposition parameters, aligned with the edges
/// of a [`PolyEfg`].
#[derive(Debug, Clone)]
pub struct SgGradient {
    pub edge_utils: Vec<Vec<f64>>,
    pub constants: Vec<f64>,
}

impl SgGradient {
    pub fn zeros(pg: &PolyEfg) -> Self {
        Self {
            edge_utils: vec![vec![0.0; pg.game().num_terminals()]; pg.num_edges()],
            constants: vec![0.0; pg.num_edges()],
        }
    }

    /// L2 norm of the stacked parameter vector (utilities and constants).
    pub fn norm(&self) -> f64 {
        let mut sq = 0.0;
        for g in &self.edge_utils {
            for v in g {
                sq += v * v;
            }
        }
        for c in &self.constants {
            sq += c * c;
        }
        sq.sqrt()
    }
}

/// The fitted decomposition with its measured quality numbers.
#[derive(Debug, Clone)]
pub struct SgDecomposition {
    pub poly: PolyEfg,
    /// max over the neighborhood cross product and players of the
    /// decomposition error under the returned utilities.
    pub delta: f64,
    /// max subgame best-response advantage over the neighborhood profiles
    /// under the returned utilities (fresh best responses).
    pub gamma: f64,
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Decomposition-error loss of one profile: sum_i |u_check_i - u_i|.
pub fn loss_delta(pg: &PolyEfg, profile: &BehaviorProfile) -> Result<f64> {
    let decomposed = pg.global_utility(profile)?;
    let truth = expected_utility_efg(pg.game(), profile)?;
    Ok(decomposed
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Subgame-stability loss of one profile against one deviation profile:
/// per edge, the positive part of each seat's deviation advantage.
pub fn loss_gamma(
    pg: &PolyEfg,
    profile: &BehaviorProfile,
    deviation: &BehaviorProfile,
) -> Result<f64> {
    let mut total = 0.0;
    for &(i, j) in pg.edges() {
        let (base_i, base_j) = pg.subgame_utility(i, j, profile.strategy(i), profile.strategy(j))?;
        let (dev_i, _) = pg.subgame_utility(i, j, deviation.strategy(i), profile.strategy(j))?;
        let (_, dev_j) = pg.subgame_utility(i, j, profile.strategy(i), deviation.strategy(j))?;
        total += (dev_i - base_i).max(0.0) + (dev_j - base_j).max(0.0);
    }
    Ok(total)
}

/// Reach vectors of one profile, one per player.
fn profile_reaches(game: &ExtensiveFormGame, profile: &BehaviorProfile) -> Result<Vec<Vec<f64>>> {
    (0..game.num_players())
        .map(|p| player_reach(game, profile.strategy(p)))
        .collect()
}

/// Inner accumulation shared by the public loss/gradient entry points and
/// the training loop. Inputs are reach vectors; `None` gradient computes
/// the loss only.
struct Accumulator<'a> {
    pg: &'a PolyEfg,
    grad: Option<SgGradient>,
    loss: f64,
}

impl<'a> Accumulator<'a> {
    fn new(pg: &'a PolyEfg, want_grad: bool) -> Self {
        Self {
            pg,
            grad: want_grad.then(|| SgGradient::zeros(pg)),
            loss: 0.0,
        }
    }

    /// Add `weight * L_delta(profile)` given the profile's reaches and its
    /// true utilities in the underlying game.
    fn add_delta(&mut self, reaches: &[&[f64]], truth: &[f64], weight: f64) {
        let pg = self.pg;
        let n = pg.game().num_players();
        let mut decomposed = vec![0.0; n];
        let mut masses = vec![0.0; pg.num_edges()];
        for (e, &(lo, hi)) in pg.edges().iter().enumerate() {
            let (v, mass) = pg.lower_seat_value(e, reaches[lo], reaches[hi]);
            decomposed[lo] += v;
            decomposed[hi] += pg.constant(e) * mass - v;
            masses[e] = mass;
        }
        let mut signs = vec![0.0; n];
        for i in 0..n {
            let d = decomposed[i] - truth[i];
            self.loss += weight * d.abs();
            signs[i] = signum0(d);
        }
        let Some(grad) = self.grad.as_mut() else {
            return;
        };
        for (e, &(lo, hi)) in pg.edges().iter().enumerate() {
            // d(u_check_lo)/d(u_e[z]) = +w(z); d(u_check_hi)/d(u_e[z]) = -w(z)
            // and d(u_check_hi)/d(c_e) = mass.
            let coeff_u = weight * (signs[lo] - signs[hi]);
            let coeff_c = weight * signs[hi];
            if coeff_u == 0.0 && coeff_c == 0.0 {
                continue;
            }
            if coeff_u != 0.0 {
                let pc = pg.edge_chance_reach(e);
                let (ra, rb) = (reaches[lo], reaches[hi]);
                let gu = &mut grad.edge_utils[e];
                for z in 0..gu.len() {
                    let w = ra[z] * rb[z] * pc[z];
                    if w != 0.0 {
                        gu[z] += coeff_u * w;
                    }
                }
            }
            grad.constants[e] += coeff_c * masses[e];
        }
    }

    /// Add `weight_base * sum over the deviation cross product of
    /// L_gamma(profile, deviation)`, factorized: each edge term touches a
    /// single deviator component, so the sum collapses to per-deviator
    /// sums scaled by the sizes of the other players' deviation sets.
    fn add_gamma(
        &mut self,
        profile_reaches: &[&[f64]],
        deviation_reaches: &[Vec<Vec<f64>>],
        weight_base: f64,
    ) {
        let pg = self.pg;
        let n = pg.game().num_players();
        if deviation_reaches.iter().any(|d| d.is_empty()) {
            // Empty cross product: no deviation terms at all.
            return;
        }
        let multiplicity = |deviator: usize| -> f64 {
            (0..n)
                .filter(|&p| p != deviator)
                .map(|p| deviation_reaches[p].len() as f64)
                .product()
        };
        for (e, &(lo, hi)) in pg.edges().iter().enumerate() {
            let (base_lo, base_mass) =
                pg.lower_seat_value(e, profile_reaches[lo], profile_reaches[hi]);
            let c = pg.constant(e);
            for (deviator, _other) in [(lo, hi), (hi, lo)] {
                let base_seat = if deviator == lo {
                    base_lo
                } else {
                    c * base_mass - base_lo
                };
                let coeff = weight_base * multiplicity(deviator);
                for dev in &deviation_reaches[deviator] {
                    let (pair_a, pair_b) = if deviator == lo {
                        (dev.as_slice(), profile_reaches[hi])
                    } else {
                        (profile_reaches[lo], dev.as_slice())
                    };
                    let (dev_lo, dev_mass) = pg.lower_seat_value(e, pair_a, pair_b);
                    let dev_seat = if deviator == lo {
                        dev_lo
                    } else {
                        c * dev_mass - dev_lo
                    };
                    let advantage = dev_seat - base_seat;
                    if advantage <= 0.0 {
                        // max(x, 0) contributes nothing at or below zero.
                        continue;
                    }
                    self.loss += coeff * advantage;
                    let Some(grad) = self.grad.as_mut() else {
                        continue;
                    };
                    let sign = if deviator == lo { 1.0 } else { -1.0 };
                    let pc = pg.edge_chance_reach(e);
                    let gu = &mut grad.edge_utils[e];
                    let (ra, rb) = (profile_reaches[lo], profile_reaches[hi]);
                    for z in 0..gu.len() {
                        let w_dev = pair_a[z] * pair_b[z] * pc[z];
                        let w_base = ra[z] * rb[z] * pc[z];
                        let dw = w_dev - w_base;
                        if dw != 0.0 {
                            gu[z] += coeff * sign * dw;
                        }
                    }
                    if deviator == hi {
                        grad.constants[e] += coeff * (dev_mass - base_mass);
                    }
                }
            }
        }
    }
}

/// The batch loss: `(lambda / |batch|) * sum L_delta` over the batch plus
/// `((1 - lambda) / |neighborhood|) * sum over neighborhood profiles and
/// the cross product of per-player deviation sets of L_gamma`.
pub fn batch_loss(
    pg: &PolyEfg,
    batch: &[BehaviorProfile],
    neighborhood: &[BehaviorProfile],
    deviations: &[Vec<BehaviorStrategy>],
    lambda: f64,
) -> Result<f64> {
    Ok(accumulate(pg, batch, neighborhood, deviations, lambda, false)?.0)
}

/// Exact subgradient of [`batch_loss`] with respect to the per-terminal
/// edge utilities and edge constants. Kink conventions: `sign(0) = 0` and
/// `max(x, 0)` contributes nothing at `x <= 0`.
pub fn subgradient(
    pg: &PolyEfg,
    batch: &[BehaviorProfile],
    neighborhood: &[BehaviorProfile],
    deviations: &[Vec<BehaviorStrategy>],
    lambda: f64,
) -> Result<SgGradient> {
    Ok(accumulate(pg, batch, neighborhood, deviations, lambda, true)?
        .1
        .expect("gradient requested"))
}

fn accumulate(
    pg: &PolyEfg,
    batch: &[BehaviorProfile],
    neighborhood: &[BehaviorProfile],
    deviations: &[Vec<BehaviorStrategy>],
    lambda: f64,
    want_grad: bool,
) -> Result<(f64, Option<SgGradient>)> {
    let game = pg.game();
    let n = game.num_players();
    if deviations.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} deviation sets for {n} players",
            deviations.len()
        )));
    }
    let mut acc = Accumulator::new(pg, want_grad);
    if !batch.is_empty() {
        let weight = lambda / batch.len() as f64;
        for profile in batch {
            let reaches = profile_reaches(game, profile)?;
            let refs: Vec<&[f64]> = reaches.iter().map(|r| r.as_slice()).collect();
            let truth = expected_utility_efg(game, profile)?;
            acc.add_delta(&refs, &truth, weight);
        }
    }
    if !neighborhood.is_empty() && lambda < 1.0 {
        let dev_reaches: Vec<Vec<Vec<f64>>> = deviations
            .iter()
            .map(|list| list.iter().map(|s| player_reach(game, s)).collect())
            .collect::<Result<_>>()?;
        let weight = (1.0 - lambda) / neighborhood.len() as f64;
        for profile in neighborhood {
            let reaches = profile_reaches(game, profile)?;
            let refs: Vec<&[f64]> = reaches.iter().map(|r| r.as_slice()).collect();
            acc.add_gamma(&refs, &dev_reaches, weight);
        }
    }
    Ok((acc.loss, acc.grad))
}

/// Per-subgame best responses to every neighborhood strategy under the
/// current decomposition: for each ordered pair (i, j) with an edge and
/// each profile index, the best response of i against j's strategy in
/// their subgame. Returned per player with exact duplicates collapsed
/// (insertion order preserved); the cross product of these sets is the
/// deviation set.
pub fn get_brs(pg: &PolyEfg, neighborhood: &Neighborhood) -> Result<Vec<Vec<BehaviorStrategy>>> {
    let game = pg.game();
    let n = game.num_players();
    let mut out: Vec<Vec<BehaviorStrategy>> = vec![Vec::new(); n];
    for deviator in 0..n {
        for other in 0..n {
            if other == deviator || pg.edge_index(deviator, other).is_err() {
                continue;
            }
            let e = pg.edge_index(deviator, other)?;
            let utils: Vec<f64> = (0..game.num_terminals())
                .map(|z| pg.seat_terminal_util(e, deviator, z))
                .collect();
            for k in 0..neighborhood.len() {
                let env = BrEnv::Subgame {
                    opponent: neighborhood.strategy(other, k),
                    chance: pg.edge_chance(e),
                };
                let (_, br) = best_response_in(game, deviator, &utils, &env)?;
                if !out[deviator].contains(&br) {
                    out[deviator].push(br);
                }
            }
        }
    }
    Ok(out)
}

/// Fit a constant-sum poly-EFG to `game` in the neighborhood of the given
/// profiles and report the achieved decomposition error and subgame
/// stability level.
pub fn sg_decompose(
    game: &Arc<ExtensiveFormGame>,
    neighborhood: &Neighborhood,
    cfg: &SgConfig,
) -> Result<SgDecomposition> {
    cfg.validate()?;
    neighborhood.validate_for(game)?;
    let n = game.num_players();
    let k = neighborhood.len();
    let z = game.num_terminals();

    // Reach vectors per (player, profile index) and true utilities for
    // every tuple of the cross product; all invariant across epochs.
    let reach: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|p| {
            (0..k)
                .map(|q| player_reach(game, neighborhood.strategy(p, q)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let chance = chance_reach(game);
    let player_utils: Vec<Vec<f64>> = (0..n).map(|p| game.player_terminal_utils(p)).collect();
    let tuples: Vec<Vec<usize>> = ProfileIter::new(&vec![k; n]).collect();
    let mut true_utils = vec![0.0; tuples.len() * n];
    let mut weight = vec![0.0; z];
    for (t, tuple) in tuples.iter().enumerate() {
        weight.copy_from_slice(&chance);
        for p in 0..n {
            let r = &reach[p][tuple[p]];
            for (w, &x) in weight.iter_mut().zip(r) {
                *w *= x;
            }
        }
        for p in 0..n {
            true_utils[t * n + p] = weight
                .iter()
                .zip(&player_utils[p])
                .map(|(w, u)| w * u)
                .sum();
        }
    }

    let mut pg = PolyEfg::zeros(game.clone());
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..tuples.len()).collect();
    for epoch in 1..=cfg.epochs {
        let eta = lr_schedule(cfg, epoch);
        let brs = get_brs(&pg, neighborhood)?;
        let dev_reaches: Vec<Vec<Vec<f64>>> = brs
            .iter()
            .map(|list| {
                list.iter()
                    .map(|s| player_reach(game, s))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut acc = Accumulator::new(&pg, true);
            let delta_weight = cfg.lambda / batch.len() as f64;
            for &t in batch {
                let refs: Vec<&[f64]> = (0..n)
                    .map(|p| reach[p][tuples[t][p]].as_slice())
                    .collect();
                acc.add_delta(&refs, &true_utils[t * n..(t + 1) * n], delta_weight);
            }
            if cfg.lambda < 1.0 {
                let gamma_weight = (1.0 - cfg.lambda) / k as f64;
                for q in 0..k {
                    let refs: Vec<&[f64]> = (0..n).map(|p| reach[p][q].as_slice()).collect();
                    acc.add_gamma(&refs, &dev_reaches, gamma_weight);
                }
            }
            let grad = acc.grad.take().expect("gradient requested");
            let norm = grad.norm();
            if norm <= GRAD_NORM_FLOOR {
                continue;
            }
            let step = eta / norm;
            for e in 0..pg.num_edges() {
                let gu = &grad.edge_utils[e];
                let utils = pg.edge_utils_mut(e);
                for (u, g) in utils.iter_mut().zip(gu) {
                    *u -= step * g;
                }
                *pg.constant_mut(e) -= step * grad.constants[e];
            }
        }
    }

    // Reported delta: max decomposition error over the cross product.
    let mut delta: f64 = 0.0;
    for (t, tuple) in tuples.iter().enumerate() {
        let reaches: Vec<Vec<f64>> = (0..n).map(|p| reach[p][tuple[p]].clone()).collect();
        let decomposed = pg.global_utility_from_reach(&reaches);
        for p in 0..n {
            delta = delta.max((decomposed[p] - true_utils[t * n + p]).abs());
        }
    }

    // Reported gamma: fresh best responses under the final utilities.
    let mut gamma = f64::NEG_INFINITY;
    for q in 0..k {
        for deviator in 0..n {
            for other in 0..n {
                if other == deviator || pg.edge_index(deviator, other).is_err() {
                    continue;
                }
                let e = pg.edge_index(deviator, other)?;
                let utils: Vec<f64> = (0..z)
                    .map(|t| pg.seat_terminal_util(e, deviator, t))
                    .collect();
                let env = BrEnv::Subgame {
                    opponent: neighborhood.strategy(other, q),
                    chance: pg.edge_chance(e),
                };
                let (best, _) = best_response_in(game, deviator, &utils, &env)?;
                let (lo_val, mass) = pg.lower_seat_value(
                    e,
                    &reach[pg.edges()[e].0][q],
                    &reach[pg.edges()[e].1][q],
                );
                let base = if deviator == pg.edges()[e].0 {
                    lo_val
                } else {
                    pg.constant(e) * mass - lo_val
                };
                gamma = gamma.max(best - base);
            }
        }
    }

    Ok(SgDecomposition {
        poly: pg,
        delta,
        gamma,
    })
}
