//! Distances over messages, trajectories and trajectory distributions; the
//! optimal-message oracle, semantic distance, and the positive listening and
//! signalling detectors.

mod detectors;
mod distance;
mod model;
mod transport;

pub use detectors::{
    mutual_information, positive_listening_test, positive_signalling_test, DetectorReport,
    SignallingEpisode, Witness, MIN_SIGNALLING_EPISODES,
};
pub use distance::{
    action_distance, distribution_distance, message_distance, normalized_edit,
    trajectory_distance, DistLift, DistanceConfig, TrajMetric, DEFAULT_TRANSPORT_CAP,
};
pub use model::SemanticModel;
pub use transport::transport_cost;

use crate::community::{ListenerPolicy, Message};
use crate::envcore::{GameSpec, Trajectory};
use crate::error::{Error, Result};

/// `argmax_m pi_B(target | m)`, scoring every message of length `0..=L`.
pub fn optimal_message(
    listener: &ListenerPolicy,
    game: &GameSpec,
    target: &Trajectory,
) -> Result<Message> {
    let model = SemanticModel::new(listener, game, &DistanceConfig::default())?;
    let idx = target_index(&model, target)?;
    Ok(model.optimal_message(idx).clone())
}

/// Distance between the trajectory distributions two messages induce.
pub fn semantic_distance(
    listener: &ListenerPolicy,
    game: &GameSpec,
    m1: &Message,
    m2: &Message,
    cfg: &DistanceConfig,
) -> Result<f64> {
    SemanticModel::new(listener, game, cfg)?.semantic_distance(m1, m2)
}

pub(crate) fn target_index(model: &SemanticModel, target: &Trajectory) -> Result<usize> {
    model.space().index_of(target.key()).ok_or_else(|| {
        Error::DomainMismatch(target.key().to_string(), model.space().origin().to_string())
    })
}
