//! Extensive-form games with imperfect information.
//!
//! Games are immutable after construction and stored as a flat arena:
//! children always have larger node ids than their parent, terminals are
//! numbered in depth-first traversal order, and that order is the canonical
//! terminal indexing used by every per-terminal array in the crate.

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type InfosetId = usize;
pub type TerminalId = usize;

/// Probabilities below this are treated as exactly zero in reach products.
pub const DEGENERATE_PROB: f64 = 1e-15;

const CHANCE_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Decision { infoset: InfosetId },
    Chance,
    Terminal { terminal: TerminalId },
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    child_start: u32,
    child_count: u32,
    // For chance nodes: offset into the shared probability pool.
    probs_start: u32,
}

#[derive(Debug, Clone)]
pub struct Infoset {
    player: usize,
    key: String,
    actions: Vec<String>,
    nodes: Vec<NodeId>,
    // Length of the owning player's own (infoset, action) sequence; equal
    // for all member nodes under perfect recall.
    own_depth: usize,
}

impl Infoset {
    pub fn player(&self) -> usize {
        self.player
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn own_depth(&self) -> usize {
        self.own_depth
    }
}

/// Recursive description of a game tree, consumed by [`GameBuilder::build`].
pub enum TreeSpec {
    Terminal { utils: Vec<f64> },
    Chance { outcomes: Vec<(f64, TreeSpec)> },
    Decision { infoset: InfosetId, children: Vec<TreeSpec> },
}

pub struct GameBuilder {
    num_players: usize,
    infosets: Vec<(usize, String, Vec<String>)>,
}

impl GameBuilder {
    pub fn new(num_players: usize) -> Self {
        Self {
            num_players,
            infosets: Vec::new(),
        }
    }

    /// Register an infoset for `player` with the given action labels.
    pub fn infoset(
        &mut self,
        player: usize,
        key: impl Into<String>,
        actions: Vec<String>,
    ) -> InfosetId {
        let id = self.infosets.len();
        self.infosets.push((player, key.into(), actions));
        id
    }

    pub fn infoset_str(&mut self, player: usize, key: impl Into<String>, actions: &[&str]) -> InfosetId {
        self.infoset(player, key, actions.iter().map(|s| s.to_string()).collect())
    }

    pub fn build(self, root: TreeSpec) -> Result<ExtensiveFormGame> {
        ExtensiveFormGame::from_spec(self, root)
    }
}

#[derive(Debug)]
pub struct ExtensiveFormGame {
    num_players: usize,
    nodes: Vec<Node>,
    children: Vec<NodeId>,
    chance_probs: Vec<f64>,
    infosets: Vec<Infoset>,
    terminals: Vec<NodeId>,
    // |Z| * num_players, terminal-major.
    terminal_utils: Vec<f64>,
    player_infosets: Vec<Vec<InfosetId>>,
    perfect_information: bool,
    has_chance: bool,
    max_depth: usize,
}

impl ExtensiveFormGame {
    fn from_spec(builder: GameBuilder, root: TreeSpec) -> Result<Self> {
        if builder.num_players == 0 {
            return Err(Error::InvalidGame("need at least one player".into()));
        }
        for (player, key, actions) in &builder.infosets {
            if *player >= builder.num_players {
                return Err(Error::InvalidGame(format!(
                    "infoset `{key}` names player {player}, game has {}",
                    builder.num_players
                )));
            }
            if actions.is_empty() {
                return Err(Error::InvalidGame(format!("infoset `{key}` has no actions")));
            }
        }
        let mut g = ExtensiveFormGame {
            num_players: builder.num_players,
            nodes: Vec::new(),
            children: Vec::new(),
            chance_probs: Vec::new(),
            infosets: builder
                .infosets
                .into_iter()
                .map(|(player, key, actions)| Infoset {
                    player,
                    key,
                    actions,
                    nodes: Vec::new(),
                    own_depth: 0,
                })
                .collect(),
            terminals: Vec::new(),
            terminal_utils: Vec::new(),
            player_infosets: vec![Vec::new(); builder.num_players],
            perfect_information: true,
            has_chance: false,
            max_depth: 0,
        };
        g.flatten(root, 1)?;
        g.finish_validation()?;
        Ok(g)
    }

    /// Depth-first flattening; assigns node and terminal ids in DFS order.
    fn flatten(&mut self, spec: TreeSpec, depth: usize) -> Result<NodeId> {
        self.max_depth = self.max_depth.max(depth);
        let id = self.nodes.len();
        match spec {
            TreeSpec::Terminal { utils } => {
                if utils.len() != self.num_players {
                    return Err(Error::DimensionMismatch(format!(
                        "terminal utility vector has {} entries, game has {} players",
                        utils.len(),
                        self.num_players
                    )));
                }
                if utils.iter().any(|u| !u.is_finite()) {
                    return Err(Error::InvalidGame("non-finite terminal utility".into()));
                }
                let terminal = self.terminals.len();
                self.nodes.push(Node {
                    kind: NodeKind::Terminal { terminal },
                    child_start: 0,
                    child_count: 0,
                    probs_start: 0,
                });
                self.terminals.push(id);
                self.terminal_utils.extend(utils);
            }
            TreeSpec::Chance { outcomes } => {
                if outcomes.is_empty() {
                    return Err(Error::InvalidGame("chance node with no outcomes".into()));
                }
                let sum: f64 = outcomes.iter().map(|(p, _)| p).sum();
                if (sum - 1.0).abs() > CHANCE_SUM_TOL {
                    return Err(Error::InvalidGame(format!(
                        "chance probabilities sum to {sum}, not 1"
                    )));
                }
                if outcomes.iter().any(|(p, _)| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidGame("bad chance probability".into()));
                }
                self.has_chance = true;
                let probs_start = self.chance_probs.len() as u32;
                self.chance_probs
                    .extend(outcomes.iter().map(|(p, _)| *p));
                self.nodes.push(Node {
                    kind: NodeKind::Chance,
                    child_start: 0,
                    child_count: outcomes.len() as u32,
                    probs_start,
                });
                let mut child_ids = Vec::with_capacity(outcomes.len());
                for (_, child) in outcomes {
                    child_ids.push(self.flatten(child, depth + 1)?);
                }
                self.attach_children(id, &child_ids);
            }
            TreeSpec::Decision { infoset, children } => {
                if infoset >= self.infosets.len() {
                    return Err(Error::InvalidGame(format!("unknown infoset id {infoset}")));
                }
                if children.len() != self.infosets[infoset].actions.len() {
                    return Err(Error::InvalidGame(format!(
                        "node in infoset `{}` has {} children, infoset has {} actions",
                        self.infosets[infoset].key,
                        children.len(),
                        self.infosets[infoset].actions.len()
                    )));
                }
                self.infosets[infoset].nodes.push(id);
                self.nodes.push(Node {
                    kind: NodeKind::Decision { infoset },
                    child_start: 0,
                    child_count: children.len() as u32,
                    probs_start: 0,
                });
                let mut child_ids = Vec::with_capacity(children.len());
                for child in children {
                    child_ids.push(self.flatten(child, depth + 1)?);
                }
                self.attach_children(id, &child_ids);
            }
        }
        Ok(id)
    }

    fn attach_children(&mut self, id: NodeId, child_ids: &[NodeId]) {
        let start = self.children.len() as u32;
        self.children.extend_from_slice(child_ids);
        self.nodes[id].child_start = start;
    }

    fn finish_validation(&mut self) -> Result<()> {
        for (id, infoset) in self.infosets.iter().enumerate() {
            if infoset.nodes.is_empty() {
                return Err(Error::InvalidGame(format!(
                    "infoset `{}` (id {id}) has no nodes",
                    infoset.key
                )));
            }
            if infoset.nodes.len() > 1 {
                self.perfect_information = false;
            }
        }
        let mut key_seen = std::collections::BTreeSet::new();
        for infoset in &self.infosets {
            if !key_seen.insert(infoset.key.clone()) {
                return Err(Error::InvalidGame(format!(
                    "duplicate infoset key `{}`",
                    infoset.key
                )));
            }
        }
        for (id, infoset) in self.infosets.iter().enumerate() {
            self.player_infosets[infoset.player].push(id);
        }
        self.check_perfect_recall()?;
        Ok(())
    }

    /// Perfect recall: all nodes of an infoset share the owning player's
    /// own (infoset, action) history.
    fn check_perfect_recall(&mut self) -> Result<()> {
        // Parent links: (parent id, action slot), root has none.
        let mut parent: Vec<Option<(NodeId, usize)>> = vec![None; self.nodes.len()];
        for id in 0..self.nodes.len() {
            let (start, count) = (
                self.nodes[id].child_start as usize,
                self.nodes[id].child_count as usize,
            );
            for slot in 0..count {
                parent[self.children[start + slot]] = Some((id, slot));
            }
        }
        let own_sequence = |node: NodeId, player: usize| -> Vec<(InfosetId, usize)> {
            let mut seq = Vec::new();
            let mut cur = node;
            while let Some((p, slot)) = parent[cur] {
                if let NodeKind::Decision { infoset } = self.nodes[p].kind {
                    if self.infosets[infoset].player == player {
                        seq.push((infoset, slot));
                    }
                }
                cur = p;
            }
            seq.reverse();
            seq
        };
        let mut depths = vec![0usize; self.infosets.len()];
        for id in 0..self.infosets.len() {
            let player = self.infosets[id].player;
            let nodes = &self.infosets[id].nodes;
            let reference = own_sequence(nodes[0], player);
            for &node in &nodes[1..] {
                if own_sequence(node, player) != reference {
                    return Err(Error::NotPerfectRecall("game construction"));
                }
            }
            depths[id] = reference.len();
        }
        for (infoset, depth) in self.infosets.iter_mut().zip(depths) {
            infoset.own_depth = depth;
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn node_children(&self, id: NodeId) -> &[NodeId] {
        let n = &self.nodes[id];
        &self.children[n.child_start as usize..n.child_start as usize + n.child_count as usize]
    }

    pub fn node_chance_probs(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id];
        debug_assert!(matches!(n.kind, NodeKind::Chance));
        &self.chance_probs[n.probs_start as usize..n.probs_start as usize + n.child_count as usize]
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id]
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset_by_key(&self, key: &str) -> Option<InfosetId> {
        self.infosets.iter().position(|i| i.key == key)
    }

    pub fn player_infosets(&self, player: usize) -> impl Iterator<Item = InfosetId> + '_ {
        self.player_infosets[player].iter().copied()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminal_node(&self, z: TerminalId) -> NodeId {
        self.terminals[z]
    }

    pub fn terminal_utils(&self, z: TerminalId) -> &[f64] {
        &self.terminal_utils[z * self.num_players..(z + 1) * self.num_players]
    }

    pub fn terminal_utility(&self, z: TerminalId, player: usize) -> f64 {
        self.terminal_utils[z * self.num_players + player]
    }

    /// Copy of one player's utilities in terminal order.
    pub fn player_terminal_utils(&self, player: usize) -> Vec<f64> {
        (0..self.num_terminals())
            .map(|z| self.terminal_utility(z, player))
            .collect()
    }

    /// True when every infoset is a singleton.
    pub fn is_perfect_information(&self) -> bool {
        self.perfect_information
    }

    pub fn has_chance_nodes(&self) -> bool {
        self.has_chance
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Number of pure strategies of `player`; `None` on overflow.
    pub fn num_pure_strategies(&self, player: usize) -> Option<usize> {
        let mut count = 1usize;
        for id in &self.player_infosets[player] {
            count = count.checked_mul(self.infosets[*id].num_actions())?;
        }
        Some(count)
    }

    /// Infoset ids of `player` in ascending id order (the canonical order
    /// used by pure-strategy enumeration).
    pub fn player_infoset_ids(&self, player: usize) -> &[InfosetId] {
        &self.player_infosets[player]
    }
}
