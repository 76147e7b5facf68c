//! Normal-form polymatrix games.

use crate::error::{Error, Result};
use crate::games::normal_form::NormalFormGame;
use crate::games::strategy::{MixedProfile, MixedStrategy};

pub const CONSTANT_SUM_TOL: f64 = 1e-10;

/// One edge of the graph: payoff matrices for both seats.
///
/// `u_ij` is the lower-indexed player's matrix (rows = player `i`'s pure
/// strategies, columns = player `j`'s), `u_ji` the reverse seat.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyEdge {
    pub i: usize,
    pub j: usize,
    u_ij: Vec<f64>,
    u_ji: Vec<f64>,
    constant: Option<f64>,
}

impl PolyEdge {
    pub fn constant(&self) -> Option<f64> {
        self.constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolymatrixGame {
    actions: Vec<usize>,
    edges: Vec<PolyEdge>,
}

impl PolymatrixGame {
    /// General polymatrix game from explicit seat matrices
    /// `(i, j, u_ij, u_ji)` with `i < j`.
    pub fn new(
        actions: Vec<usize>,
        edges: Vec<(usize, usize, Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for (i, j, u_ij, u_ji) in edges {
            Self::check_edge(&actions, i, j, &u_ij, &u_ji)?;
            out.push(PolyEdge {
                i,
                j,
                u_ij,
                u_ji,
                constant: None,
            });
        }
        let game = Self {
            actions,
            edges: out,
        };
        game.check_no_duplicate_edges()?;
        Ok(game)
    }

    /// Constant-sum polymatrix game: each edge is `(i, j, u_ij, c)` with the
    /// reverse seat defined as `u_ji(b, a) = c - u_ij(a, b)`.
    pub fn constant_sum(
        actions: Vec<usize>,
        edges: Vec<(usize, usize, Vec<f64>, f64)>,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for (i, j, u_ij, c) in edges {
            let (ni, nj) = (actions[i], actions[j]);
            if u_ij.len() != ni * nj {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({i},{j}) matrix has {} entries, expected {}",
                    u_ij.len(),
                    ni * nj
                )));
            }
            let mut u_ji = vec![0.0; nj * ni];
            for a in 0..ni {
                for b in 0..nj {
                    u_ji[b * ni + a] = c - u_ij[a * nj + b];
                }
            }
            Self::check_edge(&actions, i, j, &u_ij, &u_ji)?;
            out.push(PolyEdge {
                i,
                j,
                u_ij,
                u_ji,
                constant: Some(c),
            });
        }
        let game = Self {
            actions,
            edges: out,
        };
        game.check_no_duplicate_edges()?;
        Ok(game)
    }

    fn check_edge(actions: &[usize], i: usize, j: usize, u_ij: &[f64], u_ji: &[f64]) -> Result<()> {
        if i >= j || j >= actions.len() {
            return Err(Error::InvalidGame(format!(
                "edge ({i},{j}) must satisfy i < j < {}",
                actions.len()
            )));
        }
        if u_ij.len() != actions[i] * actions[j] || u_ji.len() != actions[j] * actions[i] {
            return Err(Error::DimensionMismatch(format!(
                "edge ({i},{j}) matrices have wrong shape"
            )));
        }
        Ok(())
    }

    fn check_no_duplicate_edges(&self) -> Result<()> {
        for (a, e) in self.edges.iter().enumerate() {
            for f in &self.edges[a + 1..] {
                if e.i == f.i && e.j == f.j {
                    return Err(Error::InvalidGame(format!(
                        "duplicate edge ({}, {})",
                        e.i, e.j
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn edges(&self) -> &[PolyEdge] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (i.min(j), i.max(j));
        self.edges.iter().position(|e| e.i == lo && e.j == hi)
    }

    /// Number of edges incident to `player` (|E_i|).
    pub fn degree(&self, player: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.i == player || e.j == player)
            .count()
    }

    /// u_ij(a_i, a_j) from `i`'s seat, for an edge in either orientation.
    pub fn edge_utility(&self, i: usize, j: usize, a_i: usize, a_j: usize) -> Result<f64> {
        let idx = self.edge_index(i, j).ok_or(Error::MissingEdge(i, j))?;
        let e = &self.edges[idx];
        Ok(if i < j {
            e.u_ij[a_i * self.actions[j] + a_j]
        } else {
            e.u_ji[a_i * self.actions[j] + a_j]
        })
    }

    /// Global utilities: per-player sum of incident edge payoffs.
    pub fn global_utility(&self, profile: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_players()];
        for e in &self.edges {
            out[e.i] += e.u_ij[profile[e.i] * self.actions[e.j] + profile[e.j]];
            out[e.j] += e.u_ji[profile[e.j] * self.actions[e.i] + profile[e.i]];
        }
        out
    }

    /// Expected payoff for `i`'s seat on edge (i, j) when `i` mixes with
    /// `s_i` and `j` plays pure `a_j`.
    pub fn edge_utility_mixed_vs_pure(
        &self,
        i: usize,
        j: usize,
        s_i: &MixedStrategy,
        a_j: usize,
    ) -> Result<f64> {
        let mut total = 0.0;
        for a_i in s_i.support() {
            total += s_i.prob(a_i) * self.edge_utility(i, j, a_i, a_j)?;
        }
        Ok(total)
    }

    /// Expected payoff for `i`'s seat on edge (i, j) under mixed strategies.
    pub fn edge_utility_mixed(
        &self,
        i: usize,
        j: usize,
        s_i: &MixedStrategy,
        s_j: &MixedStrategy,
    ) -> Result<f64> {
        let mut total = 0.0;
        for a_j in s_j.support() {
            total += s_j.prob(a_j) * self.edge_utility_mixed_vs_pure(i, j, s_i, a_j)?;
        }
        Ok(total)
    }

    /// True when every edge carries a constant and the seat matrices sum to
    /// it entrywise within `CONSTANT_SUM_TOL`.
    pub fn is_constant_sum(&self) -> bool {
        self.edges.iter().all(|e| match e.constant {
            None => false,
            Some(c) => {
                let nj = self.actions[e.j];
                let ni = self.actions[e.i];
                (0..ni).all(|a| {
                    (0..nj).all(|b| (e.u_ij[a * nj + b] + e.u_ji[b * ni + a] - c).abs() < CONSTANT_SUM_TOL)
                })
            }
        })
    }

    pub fn require_constant_sum(&self) -> Result<()> {
        if self.is_constant_sum() {
            Ok(())
        } else {
            Err(Error::NotConstantSum(
                "every edge must carry a verified constant".into(),
            ))
        }
    }

    /// Flatten to the dense normal form with `u_i = sum of edge payoffs`.
    pub fn to_normal_form(&self) -> NormalFormGame {
        NormalFormGame::from_fn(self.actions.clone(), |profile| self.global_utility(profile))
    }

    /// Expected global utilities of a mixed profile.
    pub fn expected_global_utility(&self, profile: &MixedProfile) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_players()];
        for e in &self.edges {
            out[e.i] +=
                self.edge_utility_mixed(e.i, e.j, profile.strategy(e.i), profile.strategy(e.j))?;
            out[e.j] +=
                self.edge_utility_mixed(e.j, e.i, profile.strategy(e.j), profile.strategy(e.i))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;

    #[test]
    fn offense_defense_is_constant_sum_and_matches_normal_form() {
        let pg = builtin::offense_defense_polymatrix(1.0).unwrap();
        assert!(pg.is_constant_sum());
        assert_eq!(pg.degree(0), 2);
        // The cited Nash profile has global utility (0, 0, 0).
        assert_eq!(pg.global_utility(&[0, 1, 1]), vec![0.0, 0.0, 0.0]);
        let nf = pg.to_normal_form();
        for profile in nf.profiles() {
            assert_eq!(nf.utilities_at(&profile), pg.global_utility(&profile));
        }
    }

    #[test]
    fn single_edge_global_equals_edge_value() {
        let pg = PolymatrixGame::constant_sum(
            vec![2, 2],
            vec![(0, 1, vec![3.0, -1.0, 0.0, 2.0], 1.0)],
        )
        .unwrap();
        let u = pg.global_utility(&[0, 1]);
        assert_eq!(u[0], -1.0);
        assert_eq!(u[1], 1.0 - (-1.0));
    }

    #[test]
    fn edge_lookup_and_errors() {
        let pg = builtin::offense_defense_polymatrix(2.0).unwrap();
        assert_eq!(pg.edge_utility(1, 0, 0, 0).unwrap(), 2.0);
        assert_eq!(pg.edge_utility(0, 1, 0, 0).unwrap(), -2.0);
        assert!(pg.edge_utility(0, 0, 0, 0).is_err());
    }
}
