//! Builtin benchmark games.

mod bad_card;
mod kuhn;
mod leduc;
mod tiny_hanabi;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::games::efg::ExtensiveFormGame;
use crate::games::normal_form::NormalFormGame;
use crate::polymatrix::PolymatrixGame;

pub use bad_card::{bad_card, bad_card_pruned};
pub use kuhn::kuhn_poker;
pub use leduc::leduc_poker;
pub use tiny_hanabi::tiny_hanabi;

/// Two-player coordination game: matching actions pay (1, 1), mismatches
/// pay (0, 0).
pub fn coordination() -> NormalFormGame {
    NormalFormGame::from_fn(vec![2, 2], |p| {
        if p[0] == p[1] {
            vec![1.0, 1.0]
        } else {
            vec![0.0, 0.0]
        }
    })
}

/// Symmetric 2x2 fixture whose distribution mu(a,a) = mu(b,b) = 1/2 is a
/// CCE with expected value 1/2, zero advantage for deviating to `a`, -1/2
/// for deviating to `b`, and marginal-profile value -1/4.
///
/// Payoffs are the integer solution of those four constraints:
/// u(a,a) = 1, u(a,b) = u(b,a) = -1, u(b,b) = 0 for both players.
pub fn appendix_a() -> NormalFormGame {
    let m = [[1.0, -1.0], [-1.0, 0.0]];
    NormalFormGame::from_fn(vec![2, 2], |p| vec![m[p[0]][p[1]], m[p[1]][p[0]]])
}

/// Offense-Defense as a three-clique constant-sum polymatrix game.
///
/// Player 0 chooses relax/defend; players 1 and 2 each choose whom to
/// attack. Attacking a relaxed 0 moves `beta` from 0 to the attacker;
/// attacking the other attacker while they attack 0 moves `beta` between
/// them; defended or cancelled attacks move nothing.
pub fn offense_defense_polymatrix(beta: f64) -> Result<PolymatrixGame> {
    if !(beta > 0.0) {
        return Err(Error::InvalidBuiltinParams(format!(
            "offense_defense needs beta > 0, got {beta}"
        )));
    }
    // Player 0: {r, d}; player 1: {attack0, attack2}; player 2: {attack0, attack1}.
    let zeros = vec![0.0; 4];
    let mut u01 = zeros.clone();
    u01[0] = -beta; // (r, attack0)
    let mut u02 = zeros.clone();
    u02[0] = -beta; // (r, attack0)
    // From player 1's seat against player 2.
    let mut u12 = zeros.clone();
    u12[1] = -beta; // (attack0, attack1): 2 attacks 1 while 1 is busy
    u12[2] = beta; // (attack2, attack0): 1 attacks 2 while 2 is busy
    PolymatrixGame::constant_sum(
        vec![2, 2, 2],
        vec![(0, 1, u01, 0.0), (0, 2, u02, 0.0), (1, 2, u12, 0.0)],
    )
}

/// Offense-Defense flattened to its normal form.
pub fn offense_defense(beta: f64) -> Result<NormalFormGame> {
    Ok(offense_defense_polymatrix(beta)?.to_normal_form())
}

/// Game returned by [`build_builtin`].
#[derive(Debug, Clone)]
pub enum Builtin {
    NormalForm(NormalFormGame),
    Extensive(Arc<ExtensiveFormGame>),
}

impl Builtin {
    pub fn as_normal_form(&self) -> Option<&NormalFormGame> {
        match self {
            Builtin::NormalForm(g) => Some(g),
            Builtin::Extensive(_) => None,
        }
    }

    pub fn as_extensive(&self) -> Option<&Arc<ExtensiveFormGame>> {
        match self {
            Builtin::Extensive(g) => Some(g),
            Builtin::NormalForm(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinParams {
    pub beta: Option<f64>,
    pub players: Option<usize>,
}

pub fn build_builtin(name: &str, params: BuiltinParams) -> Result<Builtin> {
    let beta = params.beta.unwrap_or(1.0);
    match name {
        "coordination" => Ok(Builtin::NormalForm(coordination())),
        "appendix_a" => Ok(Builtin::NormalForm(appendix_a())),
        "offense_defense" => Ok(Builtin::NormalForm(offense_defense(beta)?)),
        "bad_card" => Ok(Builtin::Extensive(Arc::new(bad_card(beta)?))),
        "bad_card_pruned" => Ok(Builtin::Extensive(Arc::new(bad_card_pruned(beta)?))),
        "tiny_hanabi" => Ok(Builtin::Extensive(Arc::new(tiny_hanabi()))),
        "kuhn_poker" => Ok(Builtin::Extensive(Arc::new(kuhn_poker(
            params.players.unwrap_or(2),
        )?))),
        "leduc_poker" => Ok(Builtin::Extensive(Arc::new(leduc_poker(
            params.players.unwrap_or(3),
        )?))),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}
