use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::community::{ListenerPolicy, Message};
use crate::dataset::{Observed, ObservedData};
use crate::envcore::{ActionId, GameSpec, Trajectory, TrajectoryDistribution, TrajectorySpace};
use crate::error::{Error, Result};
use crate::semantics::{action_distance, target_index, DistanceConfig, SemanticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MapVariant {
    /// Distance to the observed trajectory.
    #[default]
    Literal,
    /// Expected distance under a model of the listener's response to the message.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Weight of communication sub-optimality against trajectory return.
    pub alpha: f64,
    #[serde(default)]
    pub variant: MapVariant,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            variant: MapVariant::Literal,
        }
    }
}

impl MapConfig {
    pub fn literal(alpha: f64) -> Self {
        Self {
            alpha,
            variant: MapVariant::Literal,
        }
    }

    pub fn expected(alpha: f64) -> Self {
        Self {
            alpha,
            variant: MapVariant::Expected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInferenceConfig(format!(
                "alpha {} must be positive and finite",
                self.alpha
            )))
        }
    }
}

/// A model of `pi_B(tau | m)` available to the observer.
pub trait ListenerModel {
    fn response(&self, message: &Message) -> Result<TrajectoryDistribution>;
}

impl ListenerModel for SemanticModel {
    fn response(&self, message: &Message) -> Result<TrajectoryDistribution> {
        self.distribution(message).cloned()
    }
}

/// Message-conditional trajectory frequencies from observed data. Messages
/// never seen fall back to the marginal trajectory frequencies.
#[derive(Debug, Clone)]
pub struct EmpiricalListener {
    space: Arc<TrajectorySpace>,
    by_message: BTreeMap<Message, Vec<f64>>,
    marginal: Vec<f64>,
}

impl EmpiricalListener {
    pub fn fit(data: &ObservedData<'_>, space: Arc<TrajectorySpace>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let idx = data.trajectory_indices(&space)?;
        let mut by_message: BTreeMap<Message, Vec<f64>> = BTreeMap::new();
        let mut marginal = vec![0.0; space.len()];
        for (r, &i) in data.records().iter().zip(&idx) {
            by_message
                .entry(r.message.clone())
                .or_insert_with(|| vec![0.0; space.len()])[i] += 1.0;
            marginal[i] += 1.0;
        }
        let normalize = |v: &mut Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
        };
        by_message.values_mut().for_each(normalize);
        normalize(&mut marginal);
        Ok(Self {
            space,
            by_message,
            marginal,
        })
    }
}

impl ListenerModel for EmpiricalListener {
    fn response(&self, message: &Message) -> Result<TrajectoryDistribution> {
        let probs = self.by_message.get(message).unwrap_or(&self.marginal);
        TrajectoryDistribution::new(self.space.clone(), probs.clone())
    }
}

/// Boltzmann-rational MAP estimate of intended trajectories:
/// `argmax_t V(t) - alpha * D(t)`, where `D` is the distance to the observed
/// trajectory (literal) or its expectation under a listener model (expected).
/// Ties go to the higher return, then the earlier canonical key.
pub struct MapEstimator {
    space: Arc<TrajectorySpace>,
    cfg: MapConfig,
    actions: Vec<Vec<ActionId>>,
}

impl MapEstimator {
    pub fn new(game: &GameSpec, cfg: MapConfig) -> Result<Self> {
        Self::with_space(TrajectorySpace::new(game)?, cfg)
    }

    pub fn with_space(space: Arc<TrajectorySpace>, cfg: MapConfig) -> Result<Self> {
        cfg.validate()?;
        let actions = space.trajectories().iter().map(Trajectory::actions).collect();
        Ok(Self {
            space,
            cfg,
            actions,
        })
    }

    pub fn space(&self) -> &Arc<TrajectorySpace> {
        &self.space
    }

    pub fn config(&self) -> &MapConfig {
        &self.cfg
    }

    /// Score of every candidate intended trajectory, in support order.
    pub fn scores(
        &self,
        record: &Observed<'_>,
        listener: Option<&dyn ListenerModel>,
    ) -> Result<Vec<f64>> {
        let alpha = self.cfg.alpha;
        match self.cfg.variant {
            MapVariant::Literal => {
                let observed = record.trajectory.actions();
                Ok((0..self.space.len())
                    .map(|j| self.space.value(j) - alpha * action_distance(&self.actions[j], &observed))
                    .collect())
            }
            MapVariant::Expected => {
                let model = listener.ok_or(Error::MissingListenerModel)?;
                let response = model.response(record.message)?;
                if response.space().fingerprint() != self.space.fingerprint()
                    || response.space().len() != self.space.len()
                {
                    return Err(Error::SupportMismatch);
                }
                let atoms: Vec<(usize, f64)> = response.atoms().collect();
                Ok((0..self.space.len())
                    .map(|j| {
                        let expected: f64 = atoms
                            .iter()
                            .map(|&(k, p)| p * action_distance(&self.actions[j], &self.actions[k]))
                            .sum();
                        self.space.value(j) - alpha * expected
                    })
                    .collect())
            }
        }
    }

    /// Index of the MAP intended trajectory.
    pub fn estimate(
        &self,
        record: &Observed<'_>,
        listener: Option<&dyn ListenerModel>,
    ) -> Result<usize> {
        let scores = self.scores(record, listener)?;
        Ok(argmax_with_value_ties(&scores, self.space.values()))
    }
}

/// First index maximizing `scores`, ties broken by higher `values`, then by
/// lower index.
pub(crate) fn argmax_with_value_ties(scores: &[f64], values: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..scores.len() {
        if scores[j] > scores[best] || (scores[j] == scores[best] && values[j] > values[best]) {
            best = j;
        }
    }
    best
}

/// MAP estimate of the trajectory the speaker intended for one observed interaction.
pub fn map_target(
    record: &Observed<'_>,
    game: &GameSpec,
    cfg: &MapConfig,
    listener_model: Option<&dyn ListenerModel>,
) -> Result<Trajectory> {
    let est = MapEstimator::new(game, *cfg)?;
    let idx = est.estimate(record, listener_model)?;
    Ok(est.space().get(idx).clone())
}

/// `P(m | target)` proportional to `exp(-S_B(m*_B(target), m))`, normalized
/// over the speaker messages (lengths `1..=L`).
pub fn boltzmann_message_likelihood(
    listener: &ListenerPolicy,
    game: &GameSpec,
    message: &Message,
    target: &Trajectory,
    cfg: &DistanceConfig,
) -> Result<f64> {
    let model = SemanticModel::new(listener, game, cfg)?;
    let idx = target_index(&model, target)?;
    model.message_likelihood(message, idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envcore::enumerate_trajectories;

    fn l3() -> GameSpec {
        GameSpec::lewis(vec!["x", "y", "z"], 0, vec!["a", "b", "c"], 1).unwrap()
    }

    fn literal_target(alpha: f64) -> String {
        let g = l3();
        let ts = enumerate_trajectories(&g).unwrap();
        let m = Message::parse("b");
        let rec = Observed {
            message: &m,
            trajectory: &ts[1],
        };
        map_target(&rec, &g, &MapConfig::literal(alpha), None)
            .unwrap()
            .key()
            .to_string()
    }

    #[test]
    fn literal_examples_on_l3() {
        assert_eq!(literal_target(2.0), "L3:open|1");
        assert_eq!(literal_target(0.5), "L3:open|0");
        // scores (0, 0, -1): the tie goes to the higher return
        assert_eq!(literal_target(1.0), "L3:open|0");
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(MapConfig::literal(0.0).validate().is_err());
        assert!(MapConfig::literal(f64::NAN).validate().is_err());
        assert!(MapEstimator::new(&l3(), MapConfig::literal(-1.0)).is_err());
    }

    #[test]
    fn expected_variant_needs_a_listener_model() {
        let g = l3();
        let ts = enumerate_trajectories(&g).unwrap();
        let m = Message::parse("a");
        let rec = Observed {
            message: &m,
            trajectory: &ts[0],
        };
        assert!(matches!(
            map_target(&rec, &g, &MapConfig::expected(1.0), None),
            Err(Error::MissingListenerModel)
        ));
    }

    #[test]
    fn tie_breaking() {
        assert_eq!(argmax_with_value_ties(&[1.0, 1.0, 0.0], &[0.0, 0.5, 2.0]), 1);
        assert_eq!(argmax_with_value_ties(&[1.0, 1.0], &[0.5, 0.5]), 0);
    }
}
