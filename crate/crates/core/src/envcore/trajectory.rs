use serde::{Deserialize, Serialize};

use super::game::ActionId;
use crate::error::{Error, Result};

/// One `(state, action, reward)` tuple; `state` is the digest of the state
/// the action was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub state: String,
    pub action: ActionId,
    pub reward: f64,
}

/// A listener trajectory. The canonical key is the initial observation
/// digest followed by the action-id sequence, which is injective because
/// the dynamics are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr")]
pub struct Trajectory {
    steps: Vec<Step>,
    canonical_key: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryRepr {
    steps: Vec<Step>,
    canonical_key: String,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = Error;

    fn try_from(r: TrajectoryRepr) -> Result<Self> {
        let origin = r
            .canonical_key
            .split_once('|')
            .map(|(o, _)| o)
            .ok_or_else(|| Error::InvalidGame(format!("malformed key {:?}", r.canonical_key)))?;
        let t = Trajectory::new(origin, r.steps);
        if t.canonical_key != r.canonical_key {
            return Err(Error::InvalidGame(format!(
                "canonical key {:?} does not match steps",
                r.canonical_key
            )));
        }
        Ok(t)
    }
}

impl Trajectory {
    pub fn new(initial_digest: &str, steps: Vec<Step>) -> Self {
        let actions: Vec<String> = steps.iter().map(|s| s.action.0.to_string()).collect();
        let canonical_key = format!("{initial_digest}|{}", actions.join("."));
        Self {
            steps,
            canonical_key,
        }
    }

    pub fn empty(initial_digest: &str) -> Self {
        Self::new(initial_digest, Vec::new())
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn key(&self) -> &str {
        &self.canonical_key
    }

    /// Digest of the initial observation; trajectories from the same game share it.
    pub fn origin(&self) -> &str {
        self.canonical_key
            .split_once('|')
            .map(|(o, _)| o)
            .unwrap_or("")
    }

    pub fn actions(&self) -> Vec<ActionId> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        trajectory_return(self, gamma)
    }
}

/// `sum_k gamma^k r_k` over the steps in order.
pub fn trajectory_return(tau: &Trajectory, gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for step in &tau.steps {
        total += discount * step.reward;
        discount *= gamma;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_rewards(rewards: &[f64]) -> Trajectory {
        let steps = rewards
            .iter()
            .map(|&r| Step {
                state: "s".into(),
                action: ActionId(0),
                reward: r,
            })
            .collect();
        Trajectory::new("s", steps)
    }

    #[test]
    fn discounted_returns() {
        assert_eq!(trajectory_return(&with_rewards(&[1.0, 1.0, 1.0]), 0.5), 1.75);
        assert_eq!(trajectory_return(&Trajectory::empty("s"), 0.3), 0.0);
        assert_eq!(trajectory_return(&with_rewards(&[2.0, 9.0]), 0.0), 2.0);
    }

    #[test]
    fn key_encodes_origin_and_actions() {
        let t = Trajectory::new(
            "L3:open",
            vec![Step {
                state: "L3:open".into(),
                action: ActionId(2),
                reward: 0.0,
            }],
        );
        assert_eq!(t.key(), "L3:open|2");
        assert_eq!(t.origin(), "L3:open");
        assert_eq!(Trajectory::empty("x").key(), "x|");
    }

    #[test]
    fn deserialization_checks_the_key() {
        let t = with_rewards(&[0.5]);
        let json = serde_json::to_string(&t).unwrap();
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let forged = json.replace("s|0", "s|1");
        assert!(serde_json::from_str::<Trajectory>(&forged).is_err());
    }

    proptest! {
        #[test]
        fn return_is_linear_in_rewards(
            rewards in prop::collection::vec(-10.0f64..10.0, 0..8),
            gamma in 0.0f64..=1.0,
            c in -5.0f64..5.0,
        ) {
            let base = trajectory_return(&with_rewards(&rewards), gamma);
            let scaled: Vec<f64> = rewards.iter().map(|r| r * c).collect();
            let got = trajectory_return(&with_rewards(&scaled), gamma);
            prop_assert!((got - c * base).abs() <= 1e-12 * (1.0 + base.abs() * c.abs()) * 10.0);
        }
    }
}
