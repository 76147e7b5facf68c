//! Extensive-form polymatrix games over a shared tree.
//!
//! Each edge (i, j) stores a single per-terminal utility vector for the
//! lower-indexed seat plus a constant; the reverse seat is defined as
//! `c - u(z)`, so every subgame is constant-sum by construction. Players
//! outside an edge are absorbed into that edge's chance strategy.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::games::efg::{ExtensiveFormGame, NodeId, NodeKind};
use crate::games::eval::{chance_reach_with, player_reach, pure_player_reach, PureStrategyIter};
use crate::games::strategy::{BehaviorProfile, BehaviorStrategy};
use crate::polymatrix::nf::PolymatrixGame;

/// Guard for `induced_polymatrix`: pure strategies per player.
pub const INDUCED_POLYMATRIX_PURE_GUARD: usize = 1_000;

/// A chance strategy for a subgame: distributions at the game's chance
/// nodes and at every decision node absorbed into chance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceStrategy {
    node_probs: BTreeMap<NodeId, Vec<f64>>,
}

impl ChanceStrategy {
    pub fn new(node_probs: BTreeMap<NodeId, Vec<f64>>) -> Self {
        Self { node_probs }
    }

    pub fn probs_at(&self, node: NodeId) -> Option<&[f64]> {
        self.node_probs.get(&node).map(|v| v.as_slice())
    }

    pub fn node_probs(&self) -> &BTreeMap<NodeId, Vec<f64>> {
        &self.node_probs
    }

    /// p_c(z, pi_c') per terminal.
    pub fn reach(&self, game: &ExtensiveFormGame) -> Vec<f64> {
        chance_reach_with(game, &self.node_probs)
    }
}

/// The default subgame chance strategy for edge (i, j): the game's own
/// chance distributions where chance moves, uniform at every node owned by
/// a player outside {i, j}.
pub fn default_subgame_chance(game: &ExtensiveFormGame, i: usize, j: usize) -> ChanceStrategy {
    let mut node_probs = BTreeMap::new();
    for id in 0..game.num_nodes() {
        match game.node_kind(id) {
            NodeKind::Chance => {
                node_probs.insert(id, game.node_chance_probs(id).to_vec());
            }
            NodeKind::Decision { infoset } => {
                let owner = game.infoset(infoset).player();
                if owner != i && owner != j {
                    let k = game.node_children(id).len();
                    node_probs.insert(id, vec![1.0 / k as f64; k]);
                }
            }
            NodeKind::Terminal { .. } => {}
        }
    }
    ChanceStrategy::new(node_probs)
}

#[derive(Debug, Clone)]
pub struct PolyEfg {
    game: Arc<ExtensiveFormGame>,
    edges: Vec<(usize, usize)>,
    // Per edge: terminal utilities for the lower seat, in depth-first
    // terminal order.
    utils: Vec<Vec<f64>>,
    constants: Vec<f64>,
    chance: Vec<ChanceStrategy>,
    chance_reach: Vec<Vec<f64>>,
}

impl PolyEfg {
    /// Fully connected graph with all-zero utilities and constants.
    pub fn zeros(game: Arc<ExtensiveFormGame>) -> Self {
        let n = game.num_players();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::with_edges(game, edges).expect("fully connected edges are valid")
    }

    pub fn with_edges(game: Arc<ExtensiveFormGame>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = game.num_players();
        for &(i, j) in &edges {
            if i >= j || j >= n {
                return Err(Error::InvalidGame(format!(
                    "edge ({i},{j}) must satisfy i < j < {n}"
                )));
            }
        }
        let z = game.num_terminals();
        let chance: Vec<ChanceStrategy> = edges
            .iter()
            .map(|&(i, j)| default_subgame_chance(&game, i, j))
            .collect();
        let chance_reach = chance.iter().map(|c| c.reach(&game)).collect();
        Ok(Self {
            utils: vec![vec![0.0; z]; edges.len()],
            constants: vec![0.0; edges.len()],
            game,
            edges,
            chance,
            chance_reach,
        })
    }

    pub fn game(&self) -> &Arc<ExtensiveFormGame> {
        &self.game
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, player: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| i == player || j == player)
            .count()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Result<usize> {
        let (lo, hi) = (i.min(j), i.max(j));
        self.edges
            .iter()
            .position(|&(a, b)| a == lo && b == hi)
            .ok_or(Error::MissingEdge(i, j))
    }

    pub fn edge_utils(&self, e: usize) -> &[f64] {
        &self.utils[e]
    }

    pub fn edge_utils_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.utils[e]
    }

    pub fn constant(&self, e: usize) -> f64 {
        self.constants[e]
    }

    pub fn constant_mut(&mut self, e: usize) -> &mut f64 {
        &mut self.constants[e]
    }

    pub fn set_edge(&mut self, e: usize, utils: Vec<f64>, constant: f64) -> Result<()> {
        if utils.len() != self.game.num_terminals() {
            return Err(Error::DimensionMismatch(format!(
                "edge utility vector has {} entries, game has {} terminals",
                utils.len(),
                self.game.num_terminals()
            )));
        }
        self.utils[e] = utils;
        self.constants[e] = constant;
        Ok(())
    }

    pub fn edge_chance(&self, e: usize) -> &ChanceStrategy {
        &self.chance[e]
    }

    /// Cached p_c(z, pi_c') for the edge's default chance strategy.
    pub fn edge_chance_reach(&self, e: usize) -> &[f64] {
        &self.chance_reach[e]
    }

    /// Per-terminal utility seen from `seat` on edge index `e`.
    pub fn seat_terminal_util(&self, e: usize, seat: usize, z: usize) -> f64 {
        if seat == self.edges[e].0 {
            self.utils[e][z]
        } else {
            self.constants[e] - self.utils[e][z]
        }
    }

    /// Subgame expected values `(value_i, value_j)` for edge (i, j) under
    /// behavior strategies of the two seats; outside players follow the
    /// edge's chance strategy. The two values sum to the edge constant.
    pub fn subgame_utility(
        &self,
        i: usize,
        j: usize,
        pi_i: &BehaviorStrategy,
        pi_j: &BehaviorStrategy,
    ) -> Result<(f64, f64)> {
        let e = self.edge_index(i, j)?;
        let r_i = player_reach(&self.game, pi_i)?;
        let r_j = player_reach(&self.game, pi_j)?;
        let (lower_value, mass) = self.lower_seat_value(e, &r_i, &r_j);
        let c = self.constants[e] * mass;
        Ok(if i < j {
            (lower_value, c - lower_value)
        } else {
            (c - lower_value, lower_value)
        })
    }

    /// Weighted sum over terminals for the lower seat plus the total
    /// probability mass, given per-player reach vectors of the two seats.
    pub fn lower_seat_value(&self, e: usize, r_a: &[f64], r_b: &[f64]) -> (f64, f64) {
        let pc = &self.chance_reach[e];
        let u = &self.utils[e];
        let mut value = 0.0;
        let mut mass = 0.0;
        for z in 0..u.len() {
            let w = r_a[z] * r_b[z] * pc[z];
            if w == 0.0 {
                continue;
            }
            value += w * u[z];
            mass += w;
        }
        (value, mass)
    }

    /// Global utilities: per-player sum of incident subgame values.
    pub fn global_utility(&self, profile: &BehaviorProfile) -> Result<Vec<f64>> {
        profile.validate_for(&self.game)?;
        let reaches: Vec<Vec<f64>> = (0..self.game.num_players())
            .map(|p| player_reach(&self.game, profile.strategy(p)))
            .collect::<Result<_>>()?;
        Ok(self.global_utility_from_reach(&reaches))
    }

    pub fn global_utility_from_reach(&self, reaches: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.game.num_players()];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let (lower, mass) = self.lower_seat_value(e, &reaches[i], &reaches[j]);
            out[i] += lower;
            out[j] += self.constants[e] * mass - lower;
        }
        out
    }

    /// The induced normal-form polymatrix game over pure strategies.
    pub fn induced_polymatrix(&self) -> Result<PolymatrixGame> {
        let n = self.game.num_players();
        let mut pure_counts = Vec::with_capacity(n);
        for p in 0..n {
            let count = self
                .game
                .num_pure_strategies(p)
                .filter(|&c| c <= INDUCED_POLYMATRIX_PURE_GUARD)
                .ok_or(Error::GuardExceeded {
                    what: "induced_polymatrix pure strategies",
                    limit: INDUCED_POLYMATRIX_PURE_GUARD,
                    actual: usize::MAX,
                })?;
            if count > INDUCED_POLYMATRIX_PURE_GUARD {
                return Err(Error::GuardExceeded {
                    what: "induced_polymatrix pure strategies",
                    limit: INDUCED_POLYMATRIX_PURE_GUARD,
                    actual: count,
                });
            }
            pure_counts.push(count);
        }
        // Pure-strategy reach vectors per player.
        let reach: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|p| {
                PureStrategyIter::new(&self.game, p)
                    .map(|assignment| pure_player_reach(&self.game, p, &assignment))
                    .collect()
            })
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let (ni, nj) = (pure_counts[i], pure_counts[j]);
            let mut u_ij = vec![0.0; ni * nj];
            for a in 0..ni {
                for b in 0..nj {
                    let (lower, _) = self.lower_seat_value(e, &reach[i][a], &reach[j][b]);
                    u_ij[a * nj + b] = lower;
                }
            }
            // The reverse seat is c - u by the poly-EFG representation, so
            // the induced game is constant-sum by construction.
            edges.push((i, j, u_ij, self.constants[e]));
        }
        PolymatrixGame::constant_sum(pure_counts, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;
    use crate::games::random_behavior_strategy;
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn default_chance_copies_chance_and_uniformizes_outsiders() {
        let game = Arc::new(builtin::tiny_hanabi());
        // Subgame (1, 2): chance keeps (1/2, 1/2); player 0's signal nodes
        // become uniform.
        let cs = default_subgame_chance(&game, 1, 2);
        let mut chance_nodes = 0;
        let mut outsider_nodes = 0;
        for id in 0..game.num_nodes() {
            match game.node_kind(id) {
                NodeKind::Chance => {
                    assert_eq!(cs.probs_at(id).unwrap(), game.node_chance_probs(id));
                    chance_nodes += 1;
                }
                NodeKind::Decision { infoset } => {
                    if game.infoset(infoset).player() == 0 {
                        assert_eq!(cs.probs_at(id).unwrap(), &[0.5, 0.5]);
                        outsider_nodes += 1;
                    } else {
                        assert!(cs.probs_at(id).is_none());
                    }
                }
                NodeKind::Terminal { .. } => {}
            }
        }
        assert_eq!(chance_nodes, 1);
        assert_eq!(outsider_nodes, 2);
    }

    #[test]
    fn bad_card_subgame_chance_keeps_dealer_uniform() {
        let game = Arc::new(builtin::bad_card(1.0).unwrap());
        let cs = default_subgame_chance(&game, 0, 1);
        // The dealer node (root) has three deals and is outside {0, 1}.
        let root_probs = cs.probs_at(game.root()).unwrap();
        assert_eq!(root_probs.len(), 3);
        for p in root_probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        // Player 2's call/fold nodes become (0.5, 0.5).
        for id in 0..game.num_nodes() {
            if let NodeKind::Decision { infoset } = game.node_kind(id) {
                if game.infoset(infoset).player() == 2 {
                    assert_eq!(cs.probs_at(id).unwrap(), &[0.5, 0.5]);
                }
            }
        }
    }

    #[test]
    fn subgame_values_sum_to_constant() {
        let game = Arc::new(builtin::tiny_hanabi());
        let mut pg = PolyEfg::zeros(game.clone());
        let mut rng = seeded_rng(3);
        for e in 0..pg.num_edges() {
            let z = game.num_terminals();
            let utils: Vec<f64> = (0..z).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            pg.set_edge(e, utils, rng.random::<f64>()).unwrap();
        }
        for &(i, j) in pg.edges().to_vec().iter() {
            let pi_i = random_behavior_strategy(&game, i, &mut rng);
            let pi_j = random_behavior_strategy(&game, j, &mut rng);
            let (vi, vj) = pg.subgame_utility(i, j, &pi_i, &pi_j).unwrap();
            let c = pg.constant(pg.edge_index(i, j).unwrap());
            assert!((vi + vj - c).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_utils_give_constant_value() {
        let game = Arc::new(builtin::tiny_hanabi());
        let mut pg = PolyEfg::zeros(game.clone());
        let z = game.num_terminals();
        pg.set_edge(0, vec![2.5; z], 5.0).unwrap();
        let (i, j) = pg.edges()[0];
        let (vi, vj) = pg
            .subgame_utility(
                i,
                j,
                &BehaviorStrategy::uniform(&game, i),
                &BehaviorStrategy::uniform(&game, j),
            )
            .unwrap();
        assert!((vi - 2.5).abs() < 1e-12);
        assert!((vj - 2.5).abs() < 1e-12);
    }

    #[test]
    fn subgame_value_matches_exhaustive_terminal_sum() {
        let game = Arc::new(builtin::tiny_hanabi());
        let mut pg = PolyEfg::zeros(game.clone());
        let mut rng = seeded_rng(17);
        let z = game.num_terminals();
        let utils: Vec<f64> = (0..z).map(|_| rng.random::<f64>()).collect();
        pg.set_edge(0, utils.clone(), 0.0).unwrap();
        let (i, j) = pg.edges()[0];
        let pi_i = random_behavior_strategy(&game, i, &mut rng);
        let pi_j = random_behavior_strategy(&game, j, &mut rng);
        let (vi, _) = pg.subgame_utility(i, j, &pi_i, &pi_j).unwrap();
        // Oracle: explicit sum p_i * p_j * p_c * u over terminals.
        let r_i = player_reach(&game, &pi_i).unwrap();
        let r_j = player_reach(&game, &pi_j).unwrap();
        let pc = pg.edge_chance(0).reach(&game);
        let expect: f64 = (0..z).map(|t| r_i[t] * r_j[t] * pc[t] * utils[t]).sum();
        assert!((vi - expect).abs() < 1e-12);
    }

    #[test]
    fn global_utility_is_sum_of_subgames() {
        let game = Arc::new(builtin::tiny_hanabi());
        let mut pg = PolyEfg::zeros(game.clone());
        let mut rng = seeded_rng(5);
        let z = game.num_terminals();
        for e in 0..pg.num_edges() {
            let utils: Vec<f64> = (0..z).map(|_| rng.random::<f64>()).collect();
            pg.set_edge(e, utils, rng.random::<f64>()).unwrap();
        }
        let profile = crate::games::random_behavior_profile(&game, &mut rng);
        let global = pg.global_utility(&profile).unwrap();
        let mut expect = vec![0.0; 3];
        for &(i, j) in pg.edges() {
            let (vi, vj) = pg
                .subgame_utility(i, j, profile.strategy(i), profile.strategy(j))
                .unwrap();
            expect[i] += vi;
            expect[j] += vj;
        }
        for p in 0..3 {
            assert!((global[p] - expect[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn chance_reweighting_preserves_subgame_values() {
        // Rescaling terminal utilities by the ratio of two fully mixed
        // chance strategies leaves subgame values unchanged.
        let game = Arc::new(builtin::tiny_hanabi());
        let mut rng = seeded_rng(23);
        let z = game.num_terminals();
        let utils: Vec<f64> = (0..z).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();

        let mut pg1 = PolyEfg::zeros(game.clone());
        pg1.set_edge(0, utils.clone(), 0.0).unwrap();
        let pc1 = pg1.edge_chance_reach(0).to_vec();

        // A different fully mixed chance strategy for the same edge.
        let (i, j) = pg1.edges()[0];
        let mut alt = BTreeMap::new();
        for id in 0..game.num_nodes() {
            let absorbed = match game.node_kind(id) {
                NodeKind::Chance => true,
                NodeKind::Decision { infoset } => {
                    let owner = game.infoset(infoset).player();
                    owner != i && owner != j
                }
                NodeKind::Terminal { .. } => false,
            };
            if absorbed {
                let k = game.node_children(id).len();
                let mut dist: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.2).collect();
                let sum: f64 = dist.iter().sum();
                for d in &mut dist {
                    *d /= sum;
                }
                let drift = 1.0 - dist.iter().sum::<f64>();
                dist[0] += drift;
                alt.insert(id, dist);
            }
        }
        let alt = ChanceStrategy::new(alt);
        let pc2 = alt.reach(&game);
        let rescaled: Vec<f64> = (0..z).map(|t| utils[t] * pc1[t] / pc2[t]).collect();

        let mut pg2 = PolyEfg::zeros(game.clone());
        pg2.set_edge(0, rescaled, 0.0).unwrap();
        // Swap in the alternative chance strategy by hand.
        pg2.chance[0] = alt.clone();
        pg2.chance_reach[0] = pc2;

        for _ in 0..5 {
            let pi_i = random_behavior_strategy(&game, i, &mut rng);
            let pi_j = random_behavior_strategy(&game, j, &mut rng);
            let (v1, _) = pg1.subgame_utility(i, j, &pi_i, &pi_j).unwrap();
            let (v2, _) = pg2.subgame_utility(i, j, &pi_i, &pi_j).unwrap();
            assert!((v1 - v2).abs() < 1e-9, "{v1} vs {v2}");
        }
    }

    #[test]
    fn induced_polymatrix_matches_direct_enumeration() {
        let game = Arc::new(builtin::tiny_hanabi());
        let mut pg = PolyEfg::zeros(game.clone());
        let mut rng = seeded_rng(29);
        let z = game.num_terminals();
        for e in 0..pg.num_edges() {
            let utils: Vec<f64> = (0..z).map(|_| rng.random::<f64>()).collect();
            pg.set_edge(e, utils, 1.0).unwrap();
        }
        let nf = pg.induced_polymatrix().unwrap();
        assert!(nf.is_constant_sum());
        // Spot-check entries against pure behavior strategies.
        let mut assignments0 = PureStrategyIter::new(&game, 0);
        let a0 = assignments0.next().unwrap();
        let mut assignments1 = PureStrategyIter::new(&game, 1);
        let b0 = assignments1.nth(2).unwrap();
        let s0 = BehaviorStrategy::pure(&game, 0, &a0);
        let s1 = BehaviorStrategy::pure(&game, 1, &b0);
        let (vi, _) = pg.subgame_utility(0, 1, &s0, &s1).unwrap();
        assert!((nf.edge_utility(0, 1, 0, 2).unwrap() - vi).abs() < 1e-12);
    }
}
