//! Referential games, trajectories, returns and rollouts.

mod distribution;
mod game;
mod trajectory;

use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

pub use game::{
    ActionId, Cell, GameKind, GameSpec, LewisLayout, LewisRewards, Move, Rules, State,
    StepOutcome, SupermarketLayout, SupermarketRewards, DEFAULT_CORRECT_PICK,
    DEFAULT_ENUMERATION_CAP, DEFAULT_ITEM_REWARD, DEFAULT_STEP_PENALTY,
};
pub use distribution::TrajectoryDistribution;
pub use trajectory::{trajectory_return, Step, Trajectory};

pub(crate) use game::pow_u128;

use crate::community::Message;
use crate::error::{Error, Result};

/// Anything that can drive a listener through a game: gives the
/// distribution over env actions at a step, given the message and the
/// observations seen so far.
pub trait ActionPolicy {
    fn action_distribution(
        &self,
        game: &GameSpec,
        message: &Message,
        step: usize,
        history: &[String],
    ) -> Vec<f64>;
}

/// Every feasible trajectory up to the horizon, sorted by canonical key.
/// Branches stop early at terminal states.
pub fn enumerate_trajectories(game: &GameSpec) -> Result<Vec<Trajectory>> {
    let required = pow_u128(game.num_actions() as u128, game.horizon());
    if required > game.enumeration_cap() as u128 {
        return Err(Error::EnumerationCap {
            what: "trajectory space |A^e|^horizon",
            required,
            bound: game.enumeration_cap(),
        });
    }
    let start = game.initial_state();
    let origin = game.digest(&start);
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(game.horizon());
    expand(game, &origin, &start, &mut path, &mut out)?;
    out.sort_by(|a: &Trajectory, b| a.key().cmp(b.key()));
    out.dedup_by(|a, b| a.key() == b.key());
    Ok(out)
}

fn expand(
    game: &GameSpec,
    origin: &str,
    state: &State,
    path: &mut Vec<Step>,
    out: &mut Vec<Trajectory>,
) -> Result<()> {
    if path.len() == game.horizon() || game.is_terminal(state) {
        out.push(Trajectory::new(origin, path.clone()));
        return Ok(());
    }
    let digest = game.digest(state);
    for a in 0..game.num_actions() {
        let outcome = game.step(state, ActionId(a))?;
        path.push(Step {
            state: digest.clone(),
            action: ActionId(a),
            reward: outcome.reward,
        });
        expand(game, origin, &outcome.next_state, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Replays `actions` from the initial state, stopping at the horizon or at
/// a terminal state. Returns the trajectory and the final state.
pub fn replay(game: &GameSpec, actions: &[ActionId]) -> Result<(Trajectory, State)> {
    let mut state = game.initial_state();
    let origin = game.digest(&state);
    let mut steps = Vec::new();
    for &a in actions {
        if steps.len() == game.horizon() || game.is_terminal(&state) {
            break;
        }
        let out = game.step(&state, a)?;
        steps.push(Step {
            state: game.digest(&state),
            action: a,
            reward: out.reward,
        });
        state = out.next_state;
    }
    Ok((Trajectory::new(&origin, steps), state))
}

/// True when `tau` is exactly what the game produces for its action sequence
/// and it ends at the horizon or at a terminal state.
pub fn is_feasible(game: &GameSpec, tau: &Trajectory) -> bool {
    match replay(game, &tau.actions()) {
        Ok((t, state)) => {
            &t == tau && (t.len() == game.horizon() || game.is_terminal(&state))
        }
        Err(_) => false,
    }
}

/// Coarse feature of a trajectory's end state (see [`GameSpec::coarse_feature_of_state`]).
pub fn coarse_feature(game: &GameSpec, tau: &Trajectory) -> Result<String> {
    let (_, state) = replay(game, &tau.actions())?;
    Ok(game.coarse_feature_of_state(&state))
}

/// Samples a listener trajectory for `message`.
pub fn rollout<P: ActionPolicy + ?Sized, R: Rng + ?Sized>(
    game: &GameSpec,
    listener: &P,
    message: &Message,
    rng: &mut R,
) -> Result<Trajectory> {
    message.validate(game)?;
    let mut state = game.initial_state();
    let origin = game.digest(&state);
    let mut history = vec![origin.clone()];
    let mut steps = Vec::with_capacity(game.horizon());
    while steps.len() < game.horizon() && !game.is_terminal(&state) {
        let probs = listener.action_distribution(game, message, steps.len(), &history);
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidPolicy(format!("bad action distribution: {e}")))?;
        let action = ActionId(dist.sample(rng));
        let out = game.step(&state, action)?;
        steps.push(Step {
            state: game.digest(&state),
            action,
            reward: out.reward,
        });
        history.push(out.observation);
        state = out.next_state;
    }
    Ok(Trajectory::new(&origin, steps))
}

/// The enumerated trajectory set of a game with cached returns and a key index.
#[derive(Debug)]
pub struct TrajectorySpace {
    trajectories: Vec<Trajectory>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
    origin: String,
    fingerprint: String,
}

impl TrajectorySpace {
    pub fn new(game: &GameSpec) -> Result<Arc<Self>> {
        let trajectories = enumerate_trajectories(game)?;
        let values = trajectories
            .iter()
            .map(|t| t.discounted_return(game.gamma()))
            .collect();
        let index = trajectories
            .iter()
            .enumerate()
            .map(|(i, t)| (t.key().to_string(), i))
            .collect();
        Ok(Arc::new(Self {
            trajectories,
            values,
            index,
            origin: game.digest(&game.initial_state()),
            fingerprint: game.fingerprint(),
        }))
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn get(&self, idx: usize) -> &Trajectory {
        &self.trajectories[idx]
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Highest-return trajectory; ties go to the earliest canonical key.
    pub fn argmax_value(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        best
    }
}
