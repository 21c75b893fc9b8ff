use std::sync::Arc;

use super::{Trajectory, TrajectorySpace};
use crate::error::{Error, Result};

/// Probability mass over the enumerated trajectories of one game.
#[derive(Debug, Clone)]
pub struct TrajectoryDistribution {
    space: Arc<TrajectorySpace>,
    probs: Vec<f64>,
}

impl TrajectoryDistribution {
    pub fn new(space: Arc<TrajectorySpace>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::SupportMismatch);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NotNormalized(f64::NAN));
        }
        Ok(Self { space, probs })
    }

    pub fn point_mass(space: Arc<TrajectorySpace>, idx: usize) -> Self {
        let mut probs = vec![0.0; space.len()];
        probs[idx] = 1.0;
        Self { space, probs }
    }

    pub fn space(&self) -> &Arc<TrajectorySpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    pub fn prob_of(&self, tau: &Trajectory) -> f64 {
        self.space
            .index_of(tau.key())
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Atoms with positive mass, in support order.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
    }

    pub fn same_support(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.space.len() == other.space.len()
                && self.space.fingerprint() == other.space.fingerprint())
    }
}
