use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Message;
use crate::envcore::{ActionId, ActionPolicy, GameSpec, TrajectoryDistribution, TrajectorySpace};
use crate::error::{Error, Result};

/// Open-loop action sequence a listener executes for a message.
pub type Plan = Vec<ActionId>;

/// A listener that maps messages to plans through a codebook and executes
/// them with uniform-action noise: at every step the planned action is taken
/// with probability `1 - epsilon`, otherwise a uniformly random env action.
/// Null and unknown messages fall back to `default_plan`. Steps beyond the
/// end of a plan are uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListenerPolicy {
    codebook: BTreeMap<Message, Plan>,
    epsilon: f64,
    default_plan: Plan,
}

impl ListenerPolicy {
    pub fn new(
        game: &GameSpec,
        codebook: BTreeMap<Message, Plan>,
        epsilon: f64,
        default_plan: Plan,
    ) -> Result<Self> {
        let policy = Self {
            codebook,
            epsilon,
            default_plan,
        };
        policy.validate(game)?;
        Ok(policy)
    }

    /// A listener whose behaviour does not depend on the message at all.
    pub fn message_blind(game: &GameSpec, plan: Plan, epsilon: f64) -> Result<Self> {
        Self::new(game, BTreeMap::new(), epsilon, plan)
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidPolicy(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        let plans = self.codebook.values().chain(std::iter::once(&self.default_plan));
        for plan in plans {
            if plan.len() > game.horizon() {
                return Err(Error::InvalidPolicy(format!(
                    "plan of length {} exceeds horizon {}",
                    plan.len(),
                    game.horizon()
                )));
            }
            if let Some(a) = plan.iter().find(|a| a.0 >= game.num_actions()) {
                return Err(Error::InvalidAction {
                    action: a.0,
                    available: game.num_actions(),
                });
            }
        }
        for m in self.codebook.keys() {
            m.validate(game)?;
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn codebook(&self) -> &BTreeMap<Message, Plan> {
        &self.codebook
    }

    pub fn default_plan(&self) -> &Plan {
        &self.default_plan
    }

    pub fn plan_for(&self, message: &Message) -> &Plan {
        self.codebook.get(message).unwrap_or(&self.default_plan)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    /// Exact trajectory distribution the listener induces for `message`.
    pub fn trajectory_distribution(
        &self,
        space: &Arc<TrajectorySpace>,
        num_actions: usize,
        message: &Message,
    ) -> TrajectoryDistribution {
        plan_distribution(space, self.plan_for(message), self.epsilon, num_actions, &[])
    }
}

/// Per-step action probabilities of a noisy open-loop plan.
pub fn plan_step_probs(plan: &[ActionId], epsilon: f64, num_actions: usize, step: usize) -> Vec<f64> {
    let uniform = 1.0 / num_actions as f64;
    match plan.get(step) {
        Some(a) => {
            let mut probs = vec![epsilon * uniform; num_actions];
            probs[a.0] += 1.0 - epsilon;
            probs
        }
        None => vec![uniform; num_actions],
    }
}

/// Distribution over trajectories for a noisy open-loop plan, conditioned on
/// the listener having already taken `prefix`. Trajectories that do not
/// start with `prefix` get zero mass; the rest are weighted by the
/// probabilities of their remaining actions, which is the exact conditional
/// because the plan ignores what happened before.
pub fn plan_distribution(
    space: &Arc<TrajectorySpace>,
    plan: &[ActionId],
    epsilon: f64,
    num_actions: usize,
    prefix: &[ActionId],
) -> TrajectoryDistribution {
    let step_probs: Vec<Vec<f64>> = (0..space.trajectories().iter().map(|t| t.len()).max().unwrap_or(0))
        .map(|k| plan_step_probs(plan, epsilon, num_actions, k))
        .collect();
    let probs = space
        .trajectories()
        .iter()
        .map(|tau| {
            let steps = tau.steps();
            if steps.len() < prefix.len()
                || steps.iter().zip(prefix).any(|(s, a)| s.action != *a)
            {
                return 0.0;
            }
            steps
                .iter()
                .enumerate()
                .skip(prefix.len())
                .map(|(k, s)| step_probs[k][s.action.0])
                .product()
        })
        .collect();
    TrajectoryDistribution::new(space.clone(), probs).expect("probabilities are finite")
}

impl ActionPolicy for ListenerPolicy {
    fn action_distribution(
        &self,
        game: &GameSpec,
        message: &Message,
        step: usize,
        _history: &[String],
    ) -> Vec<f64> {
        plan_step_probs(self.plan_for(message), self.epsilon, game.num_actions(), step)
    }
}

/// Exact `pi_B(tau | m)` for every feasible trajectory.
pub fn listener_traj_dist(
    listener: &ListenerPolicy,
    game: &GameSpec,
    message: &Message,
) -> Result<TrajectoryDistribution> {
    let space = TrajectorySpace::new(game)?;
    Ok(listener.trajectory_distribution(&space, game.num_actions(), message))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envcore::{rollout, SupermarketLayout, SupermarketRewards};
    use rand::SeedableRng;

    fn l3() -> GameSpec {
        GameSpec::lewis(vec!["x", "y", "z"], 0, vec!["a", "b", "c"], 1).unwrap()
    }

    fn codebook_listener(game: &GameSpec, epsilon: f64) -> ListenerPolicy {
        let codebook = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(k, t)| (Message::parse(t), vec![ActionId(k)]))
            .collect();
        ListenerPolicy::new(game, codebook, epsilon, vec![ActionId(0)]).unwrap()
    }

    #[test]
    fn noiseless_codebook_is_a_point_mass() {
        let g = l3();
        let d = listener_traj_dist(&codebook_listener(&g, 0.0), &g, &Message::parse("a")).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn noisy_codebook_mixes_in_uniform_actions() {
        let g = l3();
        let d = listener_traj_dist(&codebook_listener(&g, 0.1), &g, &Message::parse("a")).unwrap();
        assert!((d.prob(0) - (0.9 + 0.1 / 3.0)).abs() < 1e-12);
        assert!((d.prob(1) - 0.1 / 3.0).abs() < 1e-12);
        assert!((d.prob(2) - 0.1 / 3.0).abs() < 1e-12);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_message_uses_default_plan() {
        let g = l3();
        let l = ListenerPolicy::new(&g, BTreeMap::new(), 0.0, vec![ActionId(2)]).unwrap();
        let d = listener_traj_dist(&l, &g, &Message::null()).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
        let unknown = listener_traj_dist(&l, &g, &Message::parse("b")).unwrap();
        assert_eq!(unknown.probs(), d.probs());
    }

    #[test]
    fn distributions_normalize_on_a_grid() {
        let g = GameSpec::supermarket(
            SupermarketLayout {
                width: 2,
                height: 2,
                items: vec![(1, 0)],
                shopping_list: vec![0],
                start: (0, 0),
            },
            SupermarketRewards::default(),
            vec!["a"],
            1,
            3,
            1.0,
        )
        .unwrap();
        let space = TrajectorySpace::new(&g).unwrap();
        for eps in [0.0, 0.1, 0.5, 1.0] {
            let d = plan_distribution(&space, &[ActionId(1), ActionId(4)], eps, 5, &[]);
            assert!((d.total() - 1.0).abs() < 1e-12, "eps {eps}: {}", d.total());
        }
    }

    #[test]
    fn rejects_bad_policies() {
        let g = l3();
        assert!(ListenerPolicy::new(&g, BTreeMap::new(), 1.5, vec![]).is_err());
        assert!(ListenerPolicy::new(&g, BTreeMap::new(), 0.1, vec![ActionId(3)]).is_err());
        assert!(
            ListenerPolicy::new(&g, BTreeMap::new(), 0.1, vec![ActionId(0), ActionId(0)]).is_err()
        );
    }

    #[test]
    fn rollouts_follow_the_codebook_and_the_seed() {
        let g = l3();
        let l = codebook_listener(&g, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let t = rollout(&g, &l, &Message::parse("b"), &mut rng).unwrap();
        assert_eq!(t.key(), "L3:open|1");

        let noisy = codebook_listener(&g, 0.1);
        let run = |seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| rollout(&g, &noisy, &Message::parse("b"), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn horizon_zero_rollout_is_empty() {
        let g = GameSpec::supermarket(
            SupermarketLayout {
                width: 2,
                height: 2,
                items: vec![],
                shopping_list: vec![],
                start: (0, 0),
            },
            SupermarketRewards::default(),
            vec!["a"],
            1,
            0,
            1.0,
        )
        .unwrap();
        let l = ListenerPolicy::message_blind(&g, vec![], 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(rollout(&g, &l, &Message::null(), &mut rng).unwrap().is_empty());
    }
}
