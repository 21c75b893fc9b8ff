use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use super::distance::{distribution_distance, DistanceConfig};
use crate::community::{
    boltzmann, enumerate_messages, ListenerPolicy, Message, Plan, Temperature,
};
use crate::envcore::{GameSpec, TrajectoryDistribution, TrajectorySpace};
use crate::error::{Error, Result};

/// Behavioural semantics of one listener in one game.
///
/// Messages that map to the same plan induce the same trajectory
/// distribution, so distributions and semantic distances are computed per
/// distinct plan and cached; the message space only indexes into them.
#[derive(Debug)]
pub struct SemanticModel {
    game: GameSpec,
    space: Arc<TrajectorySpace>,
    cfg: DistanceConfig,
    /// Every message of length `0..=L`, sorted; index 0 is the null message.
    messages: Vec<Message>,
    message_plan: Vec<usize>,
    plans: Vec<Plan>,
    dists: Vec<TrajectoryDistribution>,
    plan_distances: Vec<OnceLock<f64>>,
    optimal: Vec<OnceLock<usize>>,
    speaker_costs: Vec<OnceLock<Vec<f64>>>,
}

impl SemanticModel {
    pub fn new(listener: &ListenerPolicy, game: &GameSpec, cfg: &DistanceConfig) -> Result<Self> {
        let space = TrajectorySpace::new(game)?;
        Self::with_space(listener, game, space, cfg)
    }

    pub fn with_space(
        listener: &ListenerPolicy,
        game: &GameSpec,
        space: Arc<TrajectorySpace>,
        cfg: &DistanceConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        listener.validate(game)?;
        let messages = enumerate_messages(game, true)?;
        let mut plans: Vec<Plan> = Vec::new();
        let mut lookup: HashMap<Plan, usize> = HashMap::new();
        let message_plan = messages
            .iter()
            .map(|m| {
                let plan = listener.plan_for(m);
                *lookup.entry(plan.clone()).or_insert_with(|| {
                    plans.push(plan.clone());
                    plans.len() - 1
                })
            })
            .collect();
        let dists = plans
            .iter()
            .map(|p| {
                crate::community::plan_distribution(
                    &space,
                    p,
                    listener.epsilon(),
                    game.num_actions(),
                    &[],
                )
            })
            .collect();
        let n_plans = plans.len();
        Ok(Self {
            game: game.clone(),
            cfg: cfg.clone(),
            optimal: (0..space.len()).map(|_| OnceLock::new()).collect(),
            speaker_costs: (0..space.len()).map(|_| OnceLock::new()).collect(),
            space,
            messages,
            message_plan,
            plans,
            dists,
            plan_distances: (0..n_plans * n_plans).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn space(&self) -> &Arc<TrajectorySpace> {
        &self.space
    }

    pub fn config(&self) -> &DistanceConfig {
        &self.cfg
    }

    /// All messages including the null message, sorted.
    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// The messages a speaker may emit: lengths `1..=L`, sorted.
    pub fn speaker_messages(&self) -> &[Message] {
        &self.messages[1..]
    }

    pub fn num_plans(&self) -> usize {
        self.plans.len()
    }

    fn message_index(&self, m: &Message) -> Result<usize> {
        self.messages
            .binary_search(m)
            .map_err(|_| Error::InvalidMessage(format!("{m} is not in the message space")))
    }

    pub fn plan_of(&self, m: &Message) -> Result<usize> {
        Ok(self.message_plan[self.message_index(m)?])
    }

    pub fn distribution(&self, m: &Message) -> Result<&TrajectoryDistribution> {
        Ok(&self.dists[self.plan_of(m)?])
    }

    pub fn plan_distribution(&self, plan: usize) -> &TrajectoryDistribution {
        &self.dists[plan]
    }

    /// Semantic distance between the behaviours of two plans.
    pub fn plan_distance(&self, a: usize, b: usize) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let cell = &self.plan_distances[lo * self.plans.len() + hi];
        if let Some(d) = cell.get() {
            return Ok(*d);
        }
        let d = distribution_distance(&self.dists[lo], &self.dists[hi], &self.cfg)?;
        Ok(*cell.get_or_init(|| d))
    }

    pub fn semantic_distance(&self, m1: &Message, m2: &Message) -> Result<f64> {
        self.plan_distance(self.plan_of(m1)?, self.plan_of(m2)?)
    }

    /// `argmax_m pi_B(target | m)` over every message including the null
    /// one; ties go to the shortest, then lexicographically first message.
    pub fn optimal_message(&self, target: usize) -> &Message {
        let idx = *self.optimal[target].get_or_init(|| {
            let mut best = 0;
            let mut best_p = f64::NEG_INFINITY;
            for (i, &plan) in self.message_plan.iter().enumerate() {
                let p = self.dists[plan].prob(target);
                if p > best_p {
                    best = i;
                    best_p = p;
                }
            }
            best
        });
        &self.messages[idx]
    }

    /// `S_B(m*_B(target), m)` for every speaker message, in order.
    pub fn speaker_costs(&self, target: usize) -> Result<&[f64]> {
        if let Some(c) = self.speaker_costs[target].get() {
            return Ok(c);
        }
        let star = self.plan_of(self.optimal_message(target))?;
        let costs = self.message_plan[1..]
            .iter()
            .map(|&plan| self.plan_distance(star, plan))
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.speaker_costs[target].get_or_init(|| costs))
    }

    /// Boltzmann speaker: `P(m | target)` proportional to
    /// `exp(-S_B(m*_B(target), m) / temp)` over the speaker messages.
    /// At zero temperature all mass sits on `m*_B(target)`, or on the
    /// cheapest speaker message when the optimal message is the null one.
    pub fn speaker_distribution(&self, target: usize, temp: Temperature) -> Result<Vec<f64>> {
        let costs = self.speaker_costs(target)?;
        if temp == Temperature::Zero {
            let star = self.optimal_message(target);
            if !star.is_null() {
                let idx = self.message_index(star)? - 1;
                let mut probs = vec![0.0; costs.len()];
                probs[idx] = 1.0;
                return Ok(probs);
            }
        }
        let utilities: Vec<f64> = costs.iter().map(|c| -c).collect();
        Ok(boltzmann(&utilities, temp))
    }

    /// Probability of `message` under the unit-temperature speaker.
    /// The null message is outside the emission space and gets zero.
    pub fn message_likelihood(&self, message: &Message, target: usize) -> Result<f64> {
        let idx = self.message_index(message)?;
        if idx == 0 {
            return Ok(0.0);
        }
        Ok(self.speaker_distribution(target, Temperature::Finite(1.0))?[idx - 1])
    }
}
