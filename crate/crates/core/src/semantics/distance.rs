use serde::{Deserialize, Serialize};

use super::transport::transport_cost;
use crate::community::Message;
use crate::envcore::{ActionId, Trajectory, TrajectoryDistribution};
use crate::error::{Error, Result};

pub const DEFAULT_TRANSPORT_CAP: usize = 512;
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrajMetric {
    #[default]
    ActionEdit,
}

/// How a trajectory metric is lifted to distributions over trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistLift {
    #[default]
    Wasserstein1,
    TotalVariation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceConfig {
    pub traj_metric: TrajMetric,
    pub dist_lift: DistLift,
    /// Positive-listening threshold on the distance statistic.
    pub listening_epsilon: f64,
    /// Significance level of the positive-signalling permutation test.
    pub signalling_alpha: f64,
    pub permutations: usize,
    pub permutation_seed: u64,
    /// Largest transport problem (atoms whose mass differs) solved exactly.
    pub transport_cap: usize,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            traj_metric: TrajMetric::ActionEdit,
            dist_lift: DistLift::Wasserstein1,
            listening_epsilon: 1e-6,
            signalling_alpha: 0.05,
            permutations: 1000,
            permutation_seed: 0,
            transport_cap: DEFAULT_TRANSPORT_CAP,
        }
    }
}

impl DistanceConfig {
    pub fn total_variation() -> Self {
        Self {
            dist_lift: DistLift::TotalVariation,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidDistanceConfig(m));
        if !(self.listening_epsilon > 0.0) {
            return fail(format!("listening_epsilon {} must be > 0", self.listening_epsilon));
        }
        if !(self.signalling_alpha > 0.0 && self.signalling_alpha < 1.0) {
            return fail(format!("signalling_alpha {} outside (0, 1)", self.signalling_alpha));
        }
        if self.permutations < 100 {
            return fail(format!("permutations {} < 100", self.permutations));
        }
        if self.transport_cap == 0 {
            return fail("transport_cap must be positive".into());
        }
        Ok(())
    }
}

/// Levenshtein distance divided by the longer length (at least 1).
///
/// This is a metric on sequences of one fixed length. Across lengths the
/// triangle inequality can fail: `ab`, `aba`, `ba` give 1 > 1/3 + 1/3.
pub fn normalized_edit<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let (ra, rb): (Vec<&T>, Vec<&T>) = (a.iter().collect(), b.iter().collect());
    let edits = strsim::generic_levenshtein(&ra, &rb);
    edits as f64 / a.len().max(b.len()).max(1) as f64
}

pub fn message_distance(m1: &Message, m2: &Message) -> f64 {
    normalized_edit(m1.tokens(), m2.tokens())
}

pub fn action_distance(a: &[ActionId], b: &[ActionId]) -> f64 {
    normalized_edit(a, b)
}

/// Normalized action edit distance between two trajectories of one game.
pub fn trajectory_distance(t1: &Trajectory, t2: &Trajectory) -> Result<f64> {
    if t1.origin() != t2.origin() {
        return Err(Error::DomainMismatch(
            t1.origin().to_string(),
            t2.origin().to_string(),
        ));
    }
    Ok(action_distance(&t1.actions(), &t2.actions()))
}

/// Distance between two trajectory distributions on the same support.
///
/// `Wasserstein1` solves the transport problem exactly with the action edit
/// distance as ground cost. Mass shared by both distributions stays in
/// place, so only atoms where `p` and `q` differ enter the problem, and that
/// count is what `transport_cap` bounds.
pub fn distribution_distance(
    p: &TrajectoryDistribution,
    q: &TrajectoryDistribution,
    cfg: &DistanceConfig,
) -> Result<f64> {
    if !p.same_support(q) {
        return Err(Error::SupportMismatch);
    }
    for d in [p, q] {
        let total = d.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
    }
    let d = match cfg.dist_lift {
        DistLift::TotalVariation => {
            0.5 * p
                .probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        }
        DistLift::Wasserstein1 => wasserstein1(p, q, cfg.transport_cap)?,
    };
    Ok(d.clamp(0.0, 1.0))
}

fn wasserstein1(p: &TrajectoryDistribution, q: &TrajectoryDistribution, cap: usize) -> Result<f64> {
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (i, (a, b)) in p.probs().iter().zip(q.probs()).enumerate() {
        let diff = a - b;
        if diff > 0.0 {
            sources.push((i, diff));
        } else if diff < 0.0 {
            sinks.push((i, -diff));
        }
    }
    let atoms = sources.len() + sinks.len();
    if atoms > cap {
        return Err(Error::SupportTooLarge { atoms, cap });
    }
    let space = p.space();
    let actions = |i: usize| space.get(i).actions();
    let sink_actions: Vec<Vec<ActionId>> = sinks.iter().map(|&(j, _)| actions(j)).collect();
    let cost: Vec<Vec<f64>> = sources
        .iter()
        .map(|&(i, _)| {
            let a = actions(i);
            sink_actions.iter().map(|b| action_distance(&a, b)).collect()
        })
        .collect();
    let supply: Vec<f64> = sources.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = sinks.iter().map(|s| s.1).collect();
    Ok(transport_cost(&supply, &demand, &cost))
}
