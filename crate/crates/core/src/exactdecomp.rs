//! Exact decomposition via linear programming: CCE computation, the
//! minimum subgame-stability level gamma (one LP per ordered edge and pure
//! strategy), and minimum-delta constant-sum polymatrix projections for
//! normal-form games and for perfect-information extensive-form games.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::games::efg::ExtensiveFormGame;
use crate::games::eval::{pure_player_reach, PureStrategyIter};
use crate::games::normal_form::{NormalFormGame, ProfileIter};
use crate::games::strategy::EmpiricalDistribution;
use crate::linprog::{solve, LinearProgram, LpStatus};
use crate::polymatrix::{PolyEfg, PolymatrixGame};

/// Guard on pure-profile counts for the LP-based operations.
pub const LP_PROFILE_GUARD: usize = 100_000;
/// Guard on terminal counts for the extensive-form projection.
pub const LP_TERMINAL_GUARD: usize = 100_000;
/// Largest pure-strategy count per player for the extensive-form projection.
pub const LP_PURE_GUARD: usize = 4_096;

/// Constraint violations above this trigger another lazy-generation round.
const LAZY_TOL: f64 = 1e-9;
/// Total row count below which all constraints are materialized up front.
const DIRECT_ROW_LIMIT: usize = 512;
const LAZY_BATCH: usize = 16;
const LAZY_MAX_ROUNDS: usize = 500;

/// The advantage `a_i(target, mu)` of deviating to a fixed pure strategy,
/// as an explicit linear functional over the weights of `mu`.
#[derive(Debug, Clone)]
pub struct DeviationAdvantage {
    pub player: usize,
    pub target: usize,
    coefficients: Vec<f64>,
}

impl DeviationAdvantage {
    /// Advantage in the full game: `u_i(target, rho_{-i}) - u_i(rho)`.
    pub fn global(game: &NormalFormGame, player: usize, target: usize) -> Self {
        let mut coefficients = Vec::with_capacity(game.num_profiles());
        for profile in game.profiles() {
            let mut deviated = profile.clone();
            deviated[player] = target;
            coefficients.push(game.utility(&deviated, player) - game.utility(&profile, player));
        }
        Self {
            player,
            target,
            coefficients,
        }
    }

    /// Advantage restricted to the subgame between `player` and `other`:
    /// `u_ij(target, rho_j) - u_ij(rho_i, rho_j)`.
    pub fn subgame(pg: &PolymatrixGame, player: usize, other: usize, target: usize) -> Result<Self> {
        let mut coefficients = Vec::new();
        for profile in ProfileIter::new(pg.actions()) {
            let base = pg.edge_utility(player, other, profile[player], profile[other])?;
            let dev = pg.edge_utility(player, other, target, profile[other])?;
            coefficients.push(dev - base);
        }
        Ok(Self {
            player,
            target,
            coefficients,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn evaluate(&self, mu: &EmpiricalDistribution) -> f64 {
        self.coefficients
            .iter()
            .zip(mu.weights())
            .map(|(c, w)| c * w)
            .sum()
    }
}

fn check_profile_guard(game: &NormalFormGame) -> Result<()> {
    let profiles = game.num_profiles();
    if profiles > LP_PROFILE_GUARD {
        return Err(Error::GuardExceeded {
            what: "LP profile count",
            limit: LP_PROFILE_GUARD,
            actual: profiles,
        });
    }
    Ok(())
}

fn cce_constraint_rows(game: &NormalFormGame) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for player in 0..game.num_players() {
        for target in 0..game.actions()[player] {
            rows.push(
                DeviationAdvantage::global(game, player, target)
                    .coefficients()
                    .to_vec(),
            );
        }
    }
    rows
}

/// A coarse correlated equilibrium of `game`: any feasible point of the
/// external-deviation constraint set, found by phase-1 simplex with
/// Bland's rule (deterministic).
pub fn compute_cce(game: &NormalFormGame) -> Result<EmpiricalDistribution> {
    check_profile_guard(game)?;
    let profiles = game.num_profiles();
    let mut lp = LinearProgram::minimize(vec![0.0; profiles]);
    lp.bounds = vec![(0.0, 1.0); profiles];
    for row in cce_constraint_rows(game) {
        lp.add_ub(row, 0.0);
    }
    lp.add_eq(vec![1.0; profiles], 1.0);
    let solution = solve(&lp)?;
    if solution.status != LpStatus::Optimal {
        // A finite game always has a CCE; reaching this is numerical
        // degeneracy, not a property of the input.
        return Err(Error::LpFailure(format!(
            "CCE feasibility program reported {:?}",
            solution.status
        )));
    }
    let mut weights: Vec<f64> = solution.x.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    EmpiricalDistribution::new(weights)
}

#[derive(Debug, Clone, Copy)]
pub struct GammaResult {
    /// The minimum gamma such that the game is (0, gamma)-subgame stable.
    pub value: f64,
    pub feasible_solves: usize,
    pub infeasible_solves: usize,
}

/// Minimum subgame-stability level of a constant-sum polymatrix game: for
/// every ordered edge (i, j) and target pure strategy, maximize the
/// subgame deviation advantage over the CCE polytope and take the overall
/// maximum. Infeasible solves are skipped; if every solve is infeasible
/// the result is 0 with the counts reporting the degeneracy.
pub fn compute_gamma(pg: &PolymatrixGame) -> Result<GammaResult> {
    pg.require_constant_sum()?;
    let nf = pg.to_normal_form();
    check_profile_guard(&nf)?;
    let profiles = nf.num_profiles();
    let cce_rows = cce_constraint_rows(&nf);

    let mut value = f64::NEG_INFINITY;
    let mut feasible = 0usize;
    let mut infeasible = 0usize;
    for edge in pg.edges() {
        for (player, other) in [(edge.i, edge.j), (edge.j, edge.i)] {
            for target in 0..pg.actions()[player] {
                let objective =
                    DeviationAdvantage::subgame(pg, player, other, target)?;
                let mut lp = LinearProgram::maximize(objective.coefficients().to_vec());
                lp.bounds = vec![(0.0, 1.0); profiles];
                for row in &cce_rows {
                    lp.add_ub(row.clone(), 0.0);
                }
                lp.add_eq(vec![1.0; profiles], 1.0);
                let solution = solve(&lp)?;
                match solution.status {
                    LpStatus::Optimal => {
                        feasible += 1;
                        value = value.max(solution.objective);
                    }
                    LpStatus::Infeasible => infeasible += 1,
                    LpStatus::Unbounded => {
                        return Err(Error::LpFailure(
                            "bounded advantage program reported unbounded".into(),
                        ))
                    }
                }
            }
        }
    }
    Ok(GammaResult {
        value: if feasible == 0 { 0.0 } else { value },
        feasible_solves: feasible,
        infeasible_solves: infeasible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompMethod {
    LpNormalForm,
    LpExtensive,
    Sgd,
}

impl DecompMethod {
    pub fn name(self) -> &'static str {
        match self {
            DecompMethod::LpNormalForm => "lp-nf",
            DecompMethod::LpExtensive => "lp-efg",
            DecompMethod::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DecomposedGame {
    NormalForm(PolymatrixGame),
    Extensive(PolyEfg),
}

/// A constant-sum polymatrix decomposition plus its quality numbers and
/// provenance.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub game: DecomposedGame,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub method: DecompMethod,
    /// Human-readable description of the inputs that produced this result.
    pub source: String,
}

impl DecompositionResult {
    pub fn to_json(&self) -> serde_json::Value {
        let decomposition = match &self.game {
            DecomposedGame::NormalForm(pg) => {
                let edges: Vec<_> = pg
                    .edges()
                    .iter()
                    .map(|e| {
                        let (ni, nj) = (pg.actions()[e.i], pg.actions()[e.j]);
                        let u_lower: Vec<Vec<f64>> = (0..ni)
                            .map(|a| {
                                (0..nj)
                                    .map(|b| pg.edge_utility(e.i, e.j, a, b).unwrap())
                                    .collect()
                            })
                            .collect();
                        serde_json::json!({
                            "players": [e.i, e.j],
                            "constant": e.constant(),
                            "u_lower": u_lower,
                        })
                    })
                    .collect();
                serde_json::json!({
                    "type": "polymatrix",
                    "actions": pg.actions(),
                    "edges": edges,
                })
            }
            DecomposedGame::Extensive(pg) => {
                let edges: Vec<_> = pg
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(e, &(i, j))| {
                        serde_json::json!({
                            "players": [i, j],
                            "constant": pg.constant(e),
                            "terminal_utils": pg.edge_utils(e),
                        })
                    })
                    .collect();
                serde_json::json!({
                    "type": "poly_efg",
                    "terminal_order": "depth_first",
                    "num_terminals": pg.game().num_terminals(),
                    "edges": edges,
                })
            }
        };
        serde_json::json!({
            "method": self.method.name(),
            "game": self.source,
            "delta": self.delta,
            "gamma": self.gamma,
            "decomposition": decomposition,
        })
    }
}

/// Shared driver for the two min-delta programs. Variables are
/// `num_vars` columns with delta last; candidate constraints are indexed
/// by `k` and say `|target_k - L_k(x)| <= delta` for a linear `L_k`.
/// Rows are generated lazily against full scans of the candidate set.
struct MinDeltaDriver<'a> {
    num_vars: usize,
    delta_col: usize,
    num_candidates: usize,
    /// L_k coefficients over the non-delta columns (sparse pairs) and the
    /// target constant.
    row_of: Box<dyn Fn(usize) -> (Vec<(usize, f64)>, f64) + 'a>,
    /// Signed error target_k - L_k(x); must agree with `row_of`.
    error_of: Box<dyn Fn(&[f64], usize) -> f64 + 'a>,
}

impl MinDeltaDriver<'_> {
    fn solve(&self) -> Result<(Vec<f64>, f64)> {
        let mut lp = LinearProgram::minimize({
            let mut c = vec![0.0; self.num_vars];
            c[self.delta_col] = 1.0;
            c
        });
        lp.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); self.num_vars];
        lp.bounds[self.delta_col] = (0.0, f64::INFINITY);

        let add_rows = |lp: &mut LinearProgram, k: usize, side_hi: bool, side_lo: bool| {
            let (coeffs, target) = (self.row_of)(k);
            // side_hi: target - L <= delta; side_lo: L - target <= delta.
            for (sign, rhs, on) in [(-1.0, -target, side_hi), (1.0, target, side_lo)] {
                if !on {
                    continue;
                }
                let mut row = vec![0.0; self.num_vars];
                for &(col, a) in &coeffs {
                    row[col] += sign * a;
                }
                row[self.delta_col] = -1.0;
                lp.add_ub(row, rhs);
            }
        };

        if 2 * self.num_candidates <= DIRECT_ROW_LIMIT {
            for k in 0..self.num_candidates {
                add_rows(&mut lp, k, true, true);
            }
            let solution = solve(&lp)?;
            if solution.status != LpStatus::Optimal {
                return Err(Error::LpFailure(format!(
                    "min-delta program reported {:?}",
                    solution.status
                )));
            }
            let measured = self.max_error(&solution.x);
            return Ok((solution.x, measured));
        }

        // Lazy generation with cut management: rows that stay slack for
        // two consecutive master solves are dropped, keeping the working
        // LP close to the size of the active set.
        let base_rows = lp.a_ub.len();
        let mut slack_streak: Vec<u32> = Vec::new();
        for _round in 0..LAZY_MAX_ROUNDS {
            let solution = solve(&lp)?;
            if solution.status != LpStatus::Optimal {
                return Err(Error::LpFailure(format!(
                    "min-delta master reported {:?}",
                    solution.status
                )));
            }
            let delta = solution.x[self.delta_col];
            // Scan every candidate for violations.
            let mut violated: Vec<(f64, usize, bool, bool)> = Vec::new();
            for k in 0..self.num_candidates {
                let err = (self.error_of)(&solution.x, k);
                let excess = err.abs() - delta;
                if excess > LAZY_TOL {
                    violated.push((excess, k, err > 0.0, err < 0.0));
                }
            }
            if violated.is_empty() {
                let measured = self.max_error(&solution.x);
                return Ok((solution.x, measured));
            }
            // Age out rows that stayed slack twice in a row.
            let mut keep = Vec::with_capacity(lp.a_ub.len());
            for r in base_rows..lp.a_ub.len() {
                let lhs: f64 = lp.a_ub[r]
                    .iter()
                    .zip(&solution.x)
                    .map(|(a, x)| a * x)
                    .sum();
                if lp.b_ub[r] - lhs > 1e-7 {
                    slack_streak[r - base_rows] += 1;
                } else {
                    slack_streak[r - base_rows] = 0;
                }
                keep.push(slack_streak[r - base_rows] < 2);
            }
            let mut idx = 0;
            let mut kept_streaks = Vec::new();
            lp.a_ub = std::mem::take(&mut lp.a_ub)
                .into_iter()
                .enumerate()
                .filter_map(|(r, row)| {
                    if r < base_rows {
                        return Some(row);
                    }
                    let keep_it = keep[r - base_rows];
                    if keep_it {
                        kept_streaks.push(slack_streak[r - base_rows]);
                    }
                    keep_it.then_some(row)
                })
                .collect();
            lp.b_ub = std::mem::take(&mut lp.b_ub)
                .into_iter()
                .enumerate()
                .filter_map(|(r, rhs)| {
                    if r < base_rows {
                        return Some(rhs);
                    }
                    let keep_it = keep[r - base_rows];
                    idx += 1;
                    keep_it.then_some(rhs)
                })
                .collect();
            slack_streak = kept_streaks;
            violated.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            for &(_, k, hi, lo) in violated.iter().take(LAZY_BATCH) {
                let before = lp.a_ub.len();
                add_rows(&mut lp, k, hi, lo);
                slack_streak.extend(std::iter::repeat(0).take(lp.a_ub.len() - before));
            }
        }
        Err(Error::LpFailure(
            "constraint generation did not converge".into(),
        ))
    }

    fn max_error(&self, x: &[f64]) -> f64 {
        (0..self.num_candidates)
            .map(|k| (self.error_of)(x, k).abs())
            .fold(0.0, f64::max)
    }
}

/// Column layout shared by the two min-delta programs.
struct EdgeLayout {
    edges: Vec<(usize, usize)>,
    /// Start column of each edge's utility block.
    block_start: Vec<usize>,
    block_len: Vec<usize>,
    constant_col: Vec<usize>,
    delta_col: usize,
}

impl EdgeLayout {
    fn fully_connected(n: usize, block_len_of: impl Fn(usize, usize) -> usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut block_start = Vec::with_capacity(edges.len());
        let mut block_len = Vec::with_capacity(edges.len());
        let mut col = 0usize;
        for &(i, j) in &edges {
            block_start.push(col);
            let len = block_len_of(i, j);
            block_len.push(len);
            col += len;
        }
        let constant_col: Vec<usize> = (0..edges.len()).map(|e| col + e).collect();
        Self {
            delta_col: col + edges.len(),
            edges,
            block_start,
            block_len,
            constant_col,
        }
    }

    fn num_vars(&self) -> usize {
        self.delta_col + 1
    }

    fn incident(&self, player: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].0 == player || self.edges[e].1 == player)
            .collect()
    }
}

/// Minimum delta such that the game is delta-constant-sum-polymatrix,
/// together with a witnessing constant-sum polymatrix game (LP over pure
/// strategy pair utilities; the reverse seat is `c - u` by construction).
pub fn min_delta_nf(game: &NormalFormGame) -> Result<DecompositionResult> {
    check_profile_guard(game)?;
    let n = game.num_players();
    let actions = game.actions().to_vec();
    let layout = EdgeLayout::fully_connected(n, |i, j| actions[i] * actions[j]);
    let profiles: Vec<Vec<usize>> = game.profiles().collect();
    let num_candidates = n * profiles.len();

    let entry_col = |layout: &EdgeLayout, e: usize, a_lo: usize, a_hi: usize| {
        let (_, hi) = layout.edges[e];
        layout.block_start[e] + a_lo * actions[hi] + a_hi
    };

    // L_(i, rho) = sum over incident edges of the seat value.
    let coeffs_for = {
        let layout = &layout;
        let profiles = &profiles;
        let actions = &actions;
        move |k: usize| {
            let player = k / profiles.len();
            let profile = &profiles[k % profiles.len()];
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for e in layout.incident(player) {
                let (lo, hi) = layout.edges[e];
                let col = layout.block_start[e] + profile[lo] * actions[hi] + profile[hi];
                if player == lo {
                    coeffs.push((col, 1.0));
                } else {
                    coeffs.push((col, -1.0));
                    coeffs.push((layout.constant_col[e], 1.0));
                }
            }
            coeffs
        }
    };
    let driver = MinDeltaDriver {
        num_vars: layout.num_vars(),
        delta_col: layout.delta_col,
        num_candidates,
        row_of: Box::new({
            let profiles = &profiles;
            let coeffs_for = coeffs_for.clone();
            move |k| {
                let player = k / profiles.len();
                let profile = &profiles[k % profiles.len()];
                (coeffs_for(k), game.utility(profile, player))
            }
        }),
        error_of: Box::new({
            let profiles = &profiles;
            move |x, k| {
                let player = k / profiles.len();
                let profile = &profiles[k % profiles.len()];
                let l: f64 = coeffs_for(k).iter().map(|&(col, a)| a * x[col]).sum();
                game.utility(profile, player) - l
            }
        }),
    };
    let (x, delta) = driver.solve()?;
    drop(driver);
    let mut edges = Vec::with_capacity(layout.edges.len());
    for (e, &(i, j)) in layout.edges.iter().enumerate() {
        let mut u = vec![0.0; layout.block_len[e]];
        for a in 0..actions[i] {
            for b in 0..actions[j] {
                u[a * actions[j] + b] = x[entry_col(&layout, e, a, b)];
            }
        }
        edges.push((i, j, u, x[layout.constant_col[e]]));
    }
    Ok(DecompositionResult {
        game: DecomposedGame::NormalForm(PolymatrixGame::constant_sum(actions.clone(), edges)?),
        delta,
        gamma: None,
        method: DecompMethod::LpNormalForm,
        source: format!("normal-form game with {} profiles", profiles.len()),
    })
}

/// Minimum-delta constant-sum poly-EFG decomposition of a perfect-
/// information game (every infoset a singleton).
///
/// Decision variables are one utility per terminal per edge plus the edge
/// constants, exactly the poly-EFG representation; the closeness
/// constraints range over pure strategy profiles, which by multilinearity
/// of the error in the behavior probabilities bounds the gap over all
/// behavior profiles. Solved with lazy constraint generation, so the
/// working LP stays near the size of the active set.
pub fn min_delta_perfect_info(game: &Arc<ExtensiveFormGame>) -> Result<DecompositionResult> {
    if !game.is_perfect_information() {
        return Err(Error::NotPerfectInformation("min_delta_perfect_info"));
    }
    let z = game.num_terminals();
    if z > LP_TERMINAL_GUARD {
        return Err(Error::GuardExceeded {
            what: "min_delta_perfect_info terminals",
            limit: LP_TERMINAL_GUARD,
            actual: z,
        });
    }
    let n = game.num_players();
    let mut pure_counts = Vec::with_capacity(n);
    let mut total_profiles = 1usize;
    for p in 0..n {
        let count = game
            .num_pure_strategies(p)
            .filter(|&c| c <= LP_PURE_GUARD)
            .ok_or(Error::GuardExceeded {
                what: "min_delta_perfect_info pure strategies",
                limit: LP_PURE_GUARD,
                actual: usize::MAX,
            })?;
        total_profiles = total_profiles
            .checked_mul(count)
            .filter(|&t| t <= crate::games::eval::INDUCED_NF_PROFILE_GUARD)
            .ok_or(Error::GuardExceeded {
                what: "min_delta_perfect_info profiles",
                limit: crate::games::eval::INDUCED_NF_PROFILE_GUARD,
                actual: usize::MAX,
            })?;
        pure_counts.push(count);
    }

    // Template poly-EFG provides the per-edge chance strategies.
    let template = PolyEfg::zeros(game.clone());
    let layout = EdgeLayout::fully_connected(n, |_, _| z);
    // Pure strategies (as infoset assignments) and their reach vectors.
    let assignments: Vec<Vec<std::collections::BTreeMap<usize, usize>>> = (0..n)
        .map(|p| PureStrategyIter::new(game, p).collect())
        .collect();
    let reach: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|p| {
            assignments[p]
                .iter()
                .map(|a| pure_player_reach(game, p, a))
                .collect()
        })
        .collect();
    let profiles: Vec<Vec<usize>> = ProfileIter::new(&pure_counts).collect();
    // Chance-marginalized utilities of each pure profile.
    let profile_utils: Vec<Vec<f64>> = profiles
        .iter()
        .map(|profile| {
            let chosen: Vec<_> = (0..n)
                .map(|p| assignments[p][profile[p]].clone())
                .collect();
            crate::games::eval::pure_profile_utility(game, &chosen)
        })
        .collect();

    // Per-candidate seat values: L_(i, rho) = sum over incident edges of
    // sum_z R_lo R_hi pc * u_e(z) (lower seat) or c_e * mass - that sum.
    let edge_weight = |e: usize, profile: &[usize], z_idx: usize| -> f64 {
        let (lo, hi) = layout.edges[e];
        reach[lo][profile[lo]][z_idx]
            * reach[hi][profile[hi]][z_idx]
            * template.edge_chance_reach(e)[z_idx]
    };
    let coeffs_for = {
        let layout = &layout;
        let profiles = &profiles;
        move |k: usize| {
            let player = k / profiles.len();
            let profile = &profiles[k % profiles.len()];
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for e in layout.incident(player) {
                let (lo, _) = layout.edges[e];
                let sign = if player == lo { 1.0 } else { -1.0 };
                let mut mass = 0.0;
                for t in 0..z {
                    let w = edge_weight(e, profile, t);
                    if w != 0.0 {
                        coeffs.push((layout.block_start[e] + t, sign * w));
                        mass += w;
                    }
                }
                if player != lo {
                    coeffs.push((layout.constant_col[e], mass));
                }
            }
            coeffs
        }
    };
    let driver = MinDeltaDriver {
        num_vars: layout.num_vars(),
        delta_col: layout.delta_col,
        num_candidates: n * profiles.len(),
        row_of: Box::new({
            let profiles = &profiles;
            let profile_utils = &profile_utils;
            let coeffs_for = coeffs_for.clone();
            move |k| {
                let player = k / profiles.len();
                let target = profile_utils[k % profiles.len()][player];
                (coeffs_for(k), target)
            }
        }),
        error_of: Box::new({
            let profiles = &profiles;
            let profile_utils = &profile_utils;
            move |x, k| {
                let player = k / profiles.len();
                let target = profile_utils[k % profiles.len()][player];
                let l: f64 = coeffs_for(k).iter().map(|&(col, a)| a * x[col]).sum();
                target - l
            }
        }),
    };
    let (x, delta) = driver.solve()?;
    let mut poly = PolyEfg::zeros(game.clone());
    for e in 0..layout.edges.len() {
        let utils: Vec<f64> = (0..z).map(|t| x[layout.block_start[e] + t]).collect();
        poly.set_edge(e, utils, x[layout.constant_col[e]])?;
    }
    Ok(DecompositionResult {
        game: DecomposedGame::Extensive(poly),
        delta,
        gamma: None,
        method: DecompMethod::LpExtensive,
        source: format!("perfect-information game with {z} terminals"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cce_gap, marginal_profile, nash_gap_nf};
    use crate::games::builtin;
    use crate::games::efg::{GameBuilder, TreeSpec};
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn compute_cce_feasible_on_small_games() {
        for game in [builtin::coordination(), builtin::appendix_a()] {
            let mu = compute_cce(&game).unwrap();
            assert!(cce_gap(&game, &mu) <= 1e-7);
        }
    }

    #[test]
    fn compute_cce_random_two_by_two() {
        let mut rng = seeded_rng(31);
        for _ in 0..20 {
            let game = NormalFormGame::from_fn(vec![2, 2], |_| {
                vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0]
            });
            let mu = compute_cce(&game).unwrap();
            assert!(cce_gap(&game, &mu) <= 1e-7, "gap {}", cce_gap(&game, &mu));
        }
    }

    #[test]
    fn fixture_distribution_is_cce() {
        let game = builtin::appendix_a();
        let mut weights = vec![0.0; 4];
        weights[game.profile_index(&[0, 0])] = 0.5;
        weights[game.profile_index(&[1, 1])] = 0.5;
        let mu = EmpiricalDistribution::new(weights).unwrap();
        assert!(cce_gap(&game, &mu) <= 0.0);
    }

    #[test]
    fn gamma_offense_defense_at_least_beta() {
        let pg = builtin::offense_defense_polymatrix(1.0).unwrap();
        let result = compute_gamma(&pg).unwrap();
        assert!(result.value >= 1.0 - 1e-6, "gamma {}", result.value);
        assert!(result.value <= 1.0 + 1e-6, "gamma {}", result.value);
        assert!(result.feasible_solves > 0);
    }

    #[test]
    fn gamma_two_player_constant_sum_is_zero() {
        // A single-edge game: global and subgame Nash coincide.
        let mut rng = seeded_rng(5);
        for _ in 0..5 {
            let u: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let pg = PolymatrixGame::constant_sum(vec![2, 2], vec![(0, 1, u, 0.3)]).unwrap();
            let result = compute_gamma(&pg).unwrap();
            assert!(result.value.abs() <= 1e-6, "gamma {}", result.value);
        }
    }

    #[test]
    fn gamma_requires_constant_sum() {
        let pg = PolymatrixGame::new(
            vec![2, 2],
            vec![(0, 1, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0])],
        )
        .unwrap();
        assert!(matches!(compute_gamma(&pg), Err(Error::NotConstantSum(_))));
    }

    fn random_csp_game(rng: &mut impl Rng, players: usize, actions: usize) -> PolymatrixGame {
        let mut edges = Vec::new();
        for i in 0..players {
            for j in i + 1..players {
                let u: Vec<f64> = (0..actions * actions)
                    .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                    .collect();
                let c = rng.random::<f64>() * 2.0 - 1.0;
                edges.push((i, j, u, c));
            }
        }
        PolymatrixGame::constant_sum(vec![actions; players], edges).unwrap()
    }

    #[test]
    fn gamma_matches_grid_oracle_on_random_csp_games() {
        // Oracle: enumerate mu on a simplex grid over the 8 profiles,
        // keep exact CCE points, and maximize the subgame advantage.
        let mut rng = seeded_rng(77);
        for trial in 0..3 {
            let pg = random_csp_game(&mut rng, 3, 2);
            let nf = pg.to_normal_form();
            let lp = compute_gamma(&pg).unwrap().value;

            let resolution = 20usize; // grid step 0.05
            let rows = cce_constraint_rows(&nf);
            let mut best = f64::NEG_INFINITY;
            // Compositions of `resolution` into 8 parts.
            fn rec(
                k: usize,
                left: usize,
                prefix: &mut Vec<usize>,
                f: &mut impl FnMut(&[usize]),
            ) {
                if k == 1 {
                    prefix.push(left);
                    f(prefix);
                    prefix.pop();
                    return;
                }
                for take in 0..=left {
                    prefix.push(take);
                    rec(k - 1, left - take, prefix, f);
                    prefix.pop();
                }
            }
            let mut objectives = Vec::new();
            for edge in pg.edges() {
                for (player, other) in [(edge.i, edge.j), (edge.j, edge.i)] {
                    for target in 0..2 {
                        objectives.push(
                            DeviationAdvantage::subgame(&pg, player, other, target)
                                .unwrap(),
                        );
                    }
                }
            }
            rec(8, resolution, &mut Vec::new(), &mut |counts: &[usize]| {
                let mu: Vec<f64> = counts
                    .iter()
                    .map(|&c| c as f64 / resolution as f64)
                    .collect();
                // Exact CCE check with a small numerical allowance.
                for row in &rows {
                    let adv: f64 = row.iter().zip(&mu).map(|(a, w)| a * w).sum();
                    if adv > 1e-9 {
                        return;
                    }
                }
                for obj in &objectives {
                    let v: f64 = obj.coefficients().iter().zip(&mu).map(|(a, w)| a * w).sum();
                    best = best.max(v);
                }
            });
            // The grid undershoots; it must sit within one grid step of
            // the LP optimum and never exceed it.
            assert!(
                best <= lp + 1e-6,
                "trial {trial}: grid {best} above lp {lp}"
            );
            assert!(
                lp - best <= 0.05 + 1e-6,
                "trial {trial}: lp {lp} vs grid {best}"
            );
        }
    }

    #[test]
    fn min_delta_recovers_exact_csp_games() {
        let mut rng = seeded_rng(13);
        for _ in 0..5 {
            let pg = random_csp_game(&mut rng, 3, 2);
            let nf = pg.to_normal_form();
            let result = min_delta_nf(&nf).unwrap();
            assert!(result.delta <= 1e-7, "delta {}", result.delta);
        }
    }

    #[test]
    fn min_delta_coordination_is_half() {
        // Closest constant-sum 2-player game: payoff sums are {2, 0}, so
        // the best constant is 1 and each profile takes error 1/2.
        let result = min_delta_nf(&builtin::coordination()).unwrap();
        assert!((result.delta - 0.5).abs() < 1e-6, "delta {}", result.delta);
        let DecomposedGame::NormalForm(pm) = &result.game else {
            panic!("expected a normal-form decomposition")
        };
        assert!(pm.is_constant_sum());
    }

    #[test]
    fn min_delta_bound_is_tight_at_optimum() {
        // The reported delta equals the recomputed max error, and at least
        // one (player, profile) attains it.
        let g = builtin::offense_defense(1.0).unwrap();
        // Perturb to make it not exactly decomposable.
        let mut rng = seeded_rng(3);
        let perturbed = NormalFormGame::from_fn(vec![2, 2, 2], |p| {
            g.utilities_at(p)
                .iter()
                .map(|u| u + 0.2 * (rng.random::<f64>() - 0.5))
                .collect()
        });
        let result = min_delta_nf(&perturbed).unwrap();
        let DecomposedGame::NormalForm(pm) = &result.game else {
            panic!()
        };
        let mut max_err: f64 = 0.0;
        for profile in perturbed.profiles() {
            let decomposed = pm.global_utility(&profile);
            for i in 0..3 {
                max_err = max_err.max((perturbed.utility(&profile, i) - decomposed[i]).abs());
            }
        }
        assert!(
            (max_err - result.delta).abs() <= 1e-6,
            "reported {} vs recomputed {max_err}",
            result.delta
        );
    }

    #[test]
    fn min_delta_pruned_bad_card_is_zero() {
        let game = builtin::bad_card_pruned(1.0).unwrap();
        let nf = crate::games::eval::induced_normal_form(&game).unwrap();
        let result = min_delta_nf(&nf).unwrap();
        assert!(result.delta <= 1e-7, "delta {}", result.delta);
    }

    #[test]
    fn perfect_info_bad_card_delta_in_unit_interval() {
        let game = std::sync::Arc::new(builtin::bad_card(1.0).unwrap());
        let result = min_delta_perfect_info(&game).unwrap();
        assert!(result.delta > 1e-6, "delta {}", result.delta);
        assert!(result.delta <= 1.0 + 1e-9, "delta {}", result.delta);
        // The pruned version is exactly decomposable in the same form.
        let pruned = std::sync::Arc::new(builtin::bad_card_pruned(1.0).unwrap());
        let result = min_delta_perfect_info(&pruned).unwrap();
        assert!(result.delta <= 1e-7, "delta {}", result.delta);
    }

    #[test]
    fn perfect_info_rejects_hidden_information_and_chance() {
        let hanabi = std::sync::Arc::new(builtin::tiny_hanabi());
        assert!(matches!(
            min_delta_perfect_info(&hanabi),
            Err(Error::NotPerfectInformation(_))
        ));
    }

    #[test]
    fn two_player_perfect_info_zero_sum_decomposes_exactly() {
        let mut b = GameBuilder::new(2);
        let root = b.infoset_str(0, "p0", &["l", "r"]);
        let l = b.infoset_str(1, "p1:l", &["a", "b"]);
        let r = b.infoset_str(1, "p1:r", &["a", "b"]);
        let leaf = |v: f64| TreeSpec::Terminal { utils: vec![v, -v] };
        let game = b
            .build(TreeSpec::Decision {
                infoset: root,
                children: vec![
                    TreeSpec::Decision {
                        infoset: l,
                        children: vec![leaf(1.0), leaf(-2.0)],
                    },
                    TreeSpec::Decision {
                        infoset: r,
                        children: vec![leaf(0.5), leaf(3.0)],
                    },
                ],
            })
            .unwrap();
        let result = min_delta_perfect_info(&std::sync::Arc::new(game)).unwrap();
        assert!(result.delta <= 1e-7, "delta {}", result.delta);
    }

    /// Random perfect-information tree without chance: players own levels
    /// round-robin, every infoset is a singleton.
    pub(crate) fn random_perfect_info_tree(
        rng: &mut impl Rng,
        players: usize,
        depth: usize,
    ) -> std::sync::Arc<ExtensiveFormGame> {
        let mut b = GameBuilder::new(players);
        fn subtree(
            b: &mut GameBuilder,
            rng: &mut impl Rng,
            players: usize,
            level: usize,
            depth: usize,
            path: String,
        ) -> TreeSpec {
            if level == depth {
                return TreeSpec::Terminal {
                    utils: (0..players).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                };
            }
            let player = level % players;
            let infoset = b.infoset_str(player, format!("p{player}@{path}"), &["a", "b"]);
            let children = (0..2)
                .map(|a| subtree(b, rng, players, level + 1, depth, format!("{path}{a}")))
                .collect();
            TreeSpec::Decision { infoset, children }
        }
        let spec = subtree(&mut b, rng, players, 0, depth, "r".to_string());
        std::sync::Arc::new(b.build(spec).unwrap())
    }

    #[test]
    fn lp3_equals_lp2_on_random_perfect_info_trees() {
        let mut rng = seeded_rng(47);
        for trial in 0..5 {
            let game = random_perfect_info_tree(&mut rng, 3, 3);
            let efg = min_delta_perfect_info(&game).unwrap();
            let nf = crate::games::eval::induced_normal_form(&game).unwrap();
            let direct = min_delta_nf(&nf).unwrap();
            assert!(
                (efg.delta - direct.delta).abs() <= 1e-6,
                "trial {trial}: efg {} vs nf {}",
                efg.delta,
                direct.delta
            );
        }
    }

    #[test]
    fn decomposition_serializes_with_metadata() {
        let result = min_delta_nf(&builtin::coordination()).unwrap();
        let json = result.to_json();
        assert_eq!(json["method"], "lp-nf");
        assert!(json["delta"].as_f64().unwrap() > 0.0);
        assert_eq!(json["decomposition"]["type"], "polymatrix");
    }
}
