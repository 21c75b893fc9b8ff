use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000;

pub const DEFAULT_STEP_PENALTY: f64 = -0.05;
pub const DEFAULT_ITEM_REWARD: f64 = 1.0;
pub const DEFAULT_CORRECT_PICK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Lewis,
    Supermarket,
}

/// Index into a game's environment action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Grid cell as `(x, y)`; `y` grows southwards.
pub type Cell = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    North,
    East,
    South,
    West,
    Pick,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::North, Move::East, Move::South, Move::West, Move::Pick];

    pub fn name(self) -> &'static str {
        match self {
            Move::North => "N",
            Move::East => "E",
            Move::South => "S",
            Move::West => "W",
            Move::Pick => "pick",
        }
    }

    pub fn id(self) -> ActionId {
        ActionId(Move::ALL.iter().position(|m| *m == self).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LewisRewards {
    #[serde(default = "default_correct_pick")]
    pub correct_pick: f64,
}

impl Default for LewisRewards {
    fn default() -> Self {
        Self {
            correct_pick: DEFAULT_CORRECT_PICK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupermarketRewards {
    #[serde(default = "default_step_penalty")]
    pub step_penalty: f64,
    #[serde(default = "default_item_reward")]
    pub item_reward: f64,
}

impl Default for SupermarketRewards {
    fn default() -> Self {
        Self {
            step_penalty: DEFAULT_STEP_PENALTY,
            item_reward: DEFAULT_ITEM_REWARD,
        }
    }
}

fn default_correct_pick() -> f64 {
    DEFAULT_CORRECT_PICK
}
fn default_step_penalty() -> f64 {
    DEFAULT_STEP_PENALTY
}
fn default_item_reward() -> f64 {
    DEFAULT_ITEM_REWARD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LewisLayout {
    pub candidates: Vec<String>,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupermarketLayout {
    pub width: u32,
    pub height: u32,
    /// Item cells; an item's id is its index here.
    pub items: Vec<Cell>,
    /// Ids of the items the listener is asked to collect.
    pub shopping_list: Vec<usize>,
    pub start: Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rules {
    Lewis {
        rewards: LewisRewards,
        layout: LewisLayout,
    },
    Supermarket {
        rewards: SupermarketRewards,
        layout: SupermarketLayout,
    },
}

/// Environment state. Lewis games are either open or closed by a pick;
/// supermarket state is the agent cell plus the set of collected item ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum State {
    Lewis { picked: Option<usize> },
    Supermarket { agent: Cell, collected: BTreeSet<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: State,
    pub reward: f64,
    /// What the listener observes after the transition.
    pub observation: String,
    pub terminal: bool,
}

/// A finite-horizon referential game.
///
/// Holds the pieces of the Dec-POMDP the simulator needs: the environment
/// action set of the listener, the vocabulary of the speaker's communicative
/// actions, deterministic dynamics and rewards, and the discount factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameSpecRepr", into = "GameSpecRepr")]
pub struct GameSpec {
    vocab: Vec<String>,
    max_msg_len: usize,
    horizon: usize,
    gamma: f64,
    rules: Rules,
    enumeration_cap: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameSpecRepr {
    kind: GameKind,
    vocab: Vec<String>,
    max_msg_len: usize,
    horizon: usize,
    gamma: f64,
    reward_params: serde_json::Value,
    layout: serde_json::Value,
}

impl TryFrom<GameSpecRepr> for GameSpec {
    type Error = Error;

    fn try_from(r: GameSpecRepr) -> Result<Self> {
        let bad = |what: &str, e: serde_json::Error| Error::InvalidGame(format!("{what}: {e}"));
        let rules = match r.kind {
            GameKind::Lewis => Rules::Lewis {
                rewards: serde_json::from_value(r.reward_params)
                    .map_err(|e| bad("reward_params", e))?,
                layout: serde_json::from_value(r.layout).map_err(|e| bad("layout", e))?,
            },
            GameKind::Supermarket => Rules::Supermarket {
                rewards: serde_json::from_value(r.reward_params)
                    .map_err(|e| bad("reward_params", e))?,
                layout: serde_json::from_value(r.layout).map_err(|e| bad("layout", e))?,
            },
        };
        GameSpec::new(r.vocab, r.max_msg_len, r.horizon, r.gamma, rules)
    }
}

impl From<GameSpec> for GameSpecRepr {
    fn from(g: GameSpec) -> Self {
        let kind = g.kind();
        let (reward_params, layout) = match g.rules {
            Rules::Lewis { rewards, layout } => (
                serde_json::to_value(rewards).expect("plain struct"),
                serde_json::to_value(layout).expect("plain struct"),
            ),
            Rules::Supermarket { rewards, layout } => (
                serde_json::to_value(rewards).expect("plain struct"),
                serde_json::to_value(layout).expect("plain struct"),
            ),
        };
        GameSpecRepr {
            kind,
            vocab: g.vocab,
            max_msg_len: g.max_msg_len,
            horizon: g.horizon,
            gamma: g.gamma,
            reward_params,
            layout,
        }
    }
}

impl GameSpec {
    pub fn new(
        vocab: Vec<String>,
        max_msg_len: usize,
        horizon: usize,
        gamma: f64,
        rules: Rules,
    ) -> Result<Self> {
        let game = Self {
            vocab,
            max_msg_len,
            horizon,
            gamma,
            rules,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        };
        game.validate()?;
        Ok(game)
    }

    /// Lewis signalling game with default rewards; horizon 1, one pick per candidate.
    pub fn lewis<S: Into<String>>(
        candidates: Vec<S>,
        target: usize,
        vocab: Vec<S>,
        max_msg_len: usize,
    ) -> Result<Self> {
        Self::new(
            vocab.into_iter().map(Into::into).collect(),
            max_msg_len,
            1,
            1.0,
            Rules::Lewis {
                rewards: LewisRewards::default(),
                layout: LewisLayout {
                    candidates: candidates.into_iter().map(Into::into).collect(),
                    target,
                },
            },
        )
    }

    pub fn supermarket<S: Into<String>>(
        layout: SupermarketLayout,
        rewards: SupermarketRewards,
        vocab: Vec<S>,
        max_msg_len: usize,
        horizon: usize,
        gamma: f64,
    ) -> Result<Self> {
        Self::new(
            vocab.into_iter().map(Into::into).collect(),
            max_msg_len,
            horizon,
            gamma,
            Rules::Supermarket { rewards, layout },
        )
    }

    pub fn with_enumeration_cap(mut self, cap: u64) -> Result<Self> {
        self.enumeration_cap = cap;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidGame(msg));
        if self.vocab.is_empty() {
            return fail("vocab must be non-empty".into());
        }
        let mut seen = BTreeSet::new();
        for tok in &self.vocab {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return fail(format!("token {tok:?} must be non-empty without whitespace"));
            }
            if !seen.insert(tok.as_str()) {
                return fail(format!("duplicate token {tok:?}"));
            }
        }
        if self.max_msg_len == 0 {
            return fail("max_msg_len must be positive".into());
        }
        let messages = pow_u128(self.vocab.len() as u128, self.max_msg_len);
        if messages > self.enumeration_cap as u128 {
            return Err(Error::EnumerationCap {
                what: "message space |vocab|^L",
                required: messages,
                bound: self.enumeration_cap,
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma {} outside [0, 1]", self.gamma));
        }
        match &self.rules {
            Rules::Lewis { rewards, layout } => {
                if !rewards.correct_pick.is_finite() {
                    return fail("correct_pick must be finite".into());
                }
                if layout.candidates.is_empty() {
                    return fail("lewis game needs at least one candidate".into());
                }
                if layout.target >= layout.candidates.len() {
                    return fail(format!(
                        "target {} out of range for {} candidates",
                        layout.target,
                        layout.candidates.len()
                    ));
                }
                if self.horizon != 1 {
                    return fail(format!("lewis horizon must be 1, got {}", self.horizon));
                }
            }
            Rules::Supermarket { rewards, layout } => {
                if !rewards.step_penalty.is_finite() || !rewards.item_reward.is_finite() {
                    return fail("reward params must be finite".into());
                }
                if layout.width == 0 || layout.height == 0 {
                    return fail("grid must be at least 1x1".into());
                }
                let inside = |c: &Cell| c.0 < layout.width && c.1 < layout.height;
                if !inside(&layout.start) {
                    return fail(format!("start cell {:?} outside grid", layout.start));
                }
                let mut cells = BTreeSet::new();
                for c in &layout.items {
                    if !inside(c) {
                        return fail(format!("item cell {c:?} outside grid"));
                    }
                    if !cells.insert(*c) {
                        return fail(format!("two items share cell {c:?}"));
                    }
                }
                let mut listed = BTreeSet::new();
                for &id in &layout.shopping_list {
                    if id >= layout.items.len() {
                        return fail(format!("shopping list names unknown item {id}"));
                    }
                    if !listed.insert(id) {
                        return fail(format!("item {id} listed twice"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> GameKind {
        match self.rules {
            Rules::Lewis { .. } => GameKind::Lewis,
            Rules::Supermarket { .. } => GameKind::Supermarket,
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn max_msg_len(&self) -> usize {
        self.max_msg_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn enumeration_cap(&self) -> u64 {
        self.enumeration_cap
    }

    pub fn num_actions(&self) -> usize {
        match &self.rules {
            Rules::Lewis { layout, .. } => layout.candidates.len(),
            Rules::Supermarket { .. } => Move::ALL.len(),
        }
    }

    pub fn action_name(&self, action: ActionId) -> Result<String> {
        self.check_action(action)?;
        Ok(match &self.rules {
            Rules::Lewis { .. } => format!("pick({})", action.0),
            Rules::Supermarket { .. } => Move::ALL[action.0].name().to_string(),
        })
    }

    pub fn action_by_name(&self, name: &str) -> Result<ActionId> {
        (0..self.num_actions())
            .map(ActionId)
            .find(|a| self.action_name(*a).map(|n| n == name).unwrap_or(false))
            .ok_or_else(|| Error::InvalidGame(format!("unknown action name {name:?}")))
    }

    fn check_action(&self, action: ActionId) -> Result<()> {
        if action.0 < self.num_actions() {
            Ok(())
        } else {
            Err(Error::InvalidAction {
                action: action.0,
                available: self.num_actions(),
            })
        }
    }

    pub fn initial_state(&self) -> State {
        match &self.rules {
            Rules::Lewis { .. } => State::Lewis { picked: None },
            Rules::Supermarket { layout, .. } => State::Supermarket {
                agent: layout.start,
                collected: BTreeSet::new(),
            },
        }
    }

    pub fn is_terminal(&self, state: &State) -> bool {
        match (&self.rules, state) {
            (Rules::Lewis { .. }, State::Lewis { picked }) => picked.is_some(),
            (Rules::Supermarket { layout, .. }, State::Supermarket { collected, .. }) => {
                !layout.shopping_list.is_empty()
                    && layout.shopping_list.iter().all(|id| collected.contains(id))
            }
            _ => false,
        }
    }

    /// Observation digest of a state. Injective for a fixed game and prefixed
    /// with a short game tag so digests from different layouts rarely agree.
    pub fn digest(&self, state: &State) -> String {
        match (&self.rules, state) {
            (Rules::Lewis { layout, .. }, State::Lewis { picked }) => {
                let n = layout.candidates.len();
                match picked {
                    None => format!("L{n}:open"),
                    Some(k) => format!("L{n}:picked{k}"),
                }
            }
            (Rules::Supermarket { layout, .. }, State::Supermarket { agent, collected }) => {
                let ids: Vec<String> = collected.iter().map(usize::to_string).collect();
                format!(
                    "S{}x{}:({},{})[{}]",
                    layout.width,
                    layout.height,
                    agent.0,
                    agent.1,
                    ids.join(",")
                )
            }
            _ => "foreign-state".to_string(),
        }
    }

    pub fn step(&self, state: &State, action: ActionId) -> Result<StepOutcome> {
        self.check_action(action)?;
        if self.is_terminal(state) {
            return Err(Error::TerminalState);
        }
        let (next_state, reward) = match (&self.rules, state) {
            (Rules::Lewis { rewards, layout }, State::Lewis { .. }) => {
                let reward = if action.0 == layout.target {
                    rewards.correct_pick
                } else {
                    0.0
                };
                (State::Lewis { picked: Some(action.0) }, reward)
            }
            (Rules::Supermarket { rewards, layout }, State::Supermarket { agent, collected }) => {
                let (x, y) = *agent;
                let mut collected = collected.clone();
                let mut reward = rewards.step_penalty;
                let agent = match Move::ALL[action.0] {
                    Move::North => (x, y.saturating_sub(1)),
                    Move::East => ((x + 1).min(layout.width - 1), y),
                    Move::South => (x, (y + 1).min(layout.height - 1)),
                    Move::West => (x.saturating_sub(1), y),
                    Move::Pick => {
                        let here = layout.items.iter().position(|c| *c == (x, y));
                        if let Some(id) = here {
                            if layout.shopping_list.contains(&id) && collected.insert(id) {
                                reward = rewards.item_reward;
                            }
                        }
                        (x, y)
                    }
                };
                (State::Supermarket { agent, collected }, reward)
            }
            _ => {
                return Err(Error::InvalidGame(
                    "state does not belong to this game".into(),
                ))
            }
        };
        let terminal = self.is_terminal(&next_state);
        Ok(StepOutcome {
            observation: self.digest(&next_state),
            next_state,
            reward,
            terminal,
        })
    }

    /// Coarse trajectory feature used for backoff: the picked candidate in a
    /// Lewis game, the set of collected items in a supermarket.
    pub fn coarse_feature_of_state(&self, state: &State) -> String {
        match state {
            State::Lewis { picked: Some(k) } => format!("picked={k}"),
            State::Lewis { picked: None } => "picked=none".to_string(),
            State::Supermarket { collected, .. } => {
                let ids: Vec<String> = collected.iter().map(usize::to_string).collect();
                format!("items={{{}}}", ids.join(","))
            }
        }
    }

    /// Stable digest of the serialized game, used to tie datasets and models
    /// to the game they came from.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("game serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serializes")
    }
}

pub(crate) fn pow_u128(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}
