use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::broca::{check_records, Histogram, MODEL_FORMAT_VERSION};
use super::map::{ListenerModel, MapConfig, MapEstimator, MapVariant};
use crate::community::Message;
use crate::dataset::ObservedData;
use crate::envcore::{GameSpec, Trajectory, TrajectorySpace};
use crate::error::{Error, Result};
use crate::semantics::message_distance;

pub const DEFAULT_BACKOFF_THRESHOLD: f64 = 0.5;

/// Tabular listening model: for every message, counts of the MAP
/// pseudo-labels of the trajectories it was followed by.
#[derive(Debug, Clone, PartialEq)]
pub struct WernickeModel {
    game_fingerprint: String,
    cfg: MapConfig,
    backoff_threshold: f64,
    table: BTreeMap<Message, Histogram<String>>,
    labels: BTreeMap<String, Label>,
    fallback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Label {
    pub trajectory: Trajectory,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WernickeDoc {
    format_version: u32,
    kind: String,
    game_fingerprint: String,
    alpha: f64,
    variant: MapVariant,
    backoff_threshold: f64,
    table: BTreeMap<Message, Histogram<String>>,
    labels: BTreeMap<String, Label>,
    fallback: String,
}

/// Fits the listening model: every record is relabelled with the MAP
/// estimate of the intended trajectory, then pseudo-labels are counted per
/// message. With the labels fixed, the per-message majority label is the
/// tabular decoder that minimizes the summed `alpha * d(label, tau) - V(label)`
/// objective's 0/1 surrogate: it agrees with the most pseudo-labels.
pub fn fit_wernicke(
    data: &ObservedData<'_>,
    game: &GameSpec,
    cfg: &MapConfig,
    listener_model: Option<&dyn ListenerModel>,
) -> Result<WernickeModel> {
    cfg.validate()?;
    check_records(data, game)?;
    if cfg.variant == MapVariant::Expected && listener_model.is_none() {
        return Err(Error::MissingListenerModel);
    }
    let est = MapEstimator::with_space(TrajectorySpace::new(game)?, *cfg)?;
    let space = est.space().clone();
    // literal labels depend only on the trajectory, expected ones only on the message
    let mut cache: HashMap<String, usize> = HashMap::new();
    let mut table: BTreeMap<Message, Histogram<String>> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for r in data.records() {
        let cache_key = match cfg.variant {
            MapVariant::Literal => r.trajectory.key().to_string(),
            MapVariant::Expected => r.message.canonical(),
        };
        let label = match cache.get(&cache_key) {
            Some(&l) => l,
            None => {
                let l = est.estimate(r, listener_model)?;
                cache.insert(cache_key, l);
                l
            }
        };
        let tau = space.get(label);
        *table
            .entry(r.message.clone())
            .or_default()
            .entry(tau.key().to_string())
            .or_default() += 1;
        labels.entry(tau.key().to_string()).or_insert_with(|| Label {
            trajectory: tau.clone(),
            value: space.value(label),
        });
    }
    let fallback = best_label(labels.keys().map(|k| (k, 0u64)), &labels);
    Ok(WernickeModel {
        game_fingerprint: game.fingerprint(),
        cfg: *cfg,
        backoff_threshold: DEFAULT_BACKOFF_THRESHOLD,
        table,
        labels,
        fallback,
    })
}

/// Highest count, then higher return, then earlier canonical key.
fn best_label<'a>(
    counts: impl Iterator<Item = (&'a String, u64)>,
    labels: &BTreeMap<String, Label>,
) -> String {
    let mut best: Option<(&String, u64, f64)> = None;
    for (k, c) in counts {
        let v = labels[k].value;
        let better = match best {
            None => true,
            Some((bk, bc, bv)) => c > bc || (c == bc && (v > bv || (v == bv && k < bk))),
        };
        if better {
            best = Some((k, c, v));
        }
    }
    best.map(|(k, _, _)| k.clone()).expect("fitted model has labels")
}

impl WernickeModel {
    pub fn with_backoff_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidInferenceConfig(format!(
                "backoff threshold {threshold} outside [0, 1]"
            )));
        }
        self.backoff_threshold = threshold;
        Ok(self)
    }

    pub fn game_fingerprint(&self) -> &str {
        &self.game_fingerprint
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    pub fn config(&self) -> &MapConfig {
        &self.cfg
    }

    pub fn backoff_threshold(&self) -> f64 {
        self.backoff_threshold
    }

    pub fn table(&self) -> &BTreeMap<Message, Histogram<String>> {
        &self.table
    }

    /// The highest-return pseudo-label, used for messages with no close known neighbour.
    pub fn fallback(&self) -> &Trajectory {
        &self.labels[&self.fallback].trajectory
    }

    fn decode_known(&self, h: &Histogram<String>) -> &Trajectory {
        let key = best_label(h.iter().map(|(k, c)| (k, *c)), &self.labels);
        &self.labels[&key].trajectory
    }

    /// Estimated intended trajectory for `message`. Unknown messages borrow
    /// the histogram of the nearest known message (by message distance,
    /// ties to the smaller message) when it is within the backoff
    /// threshold; otherwise the fallback label is returned.
    pub fn decode(&self, message: &Message) -> &Trajectory {
        if let Some(h) = self.table.get(message) {
            return self.decode_known(h);
        }
        let mut nearest: Option<(&Message, f64)> = None;
        for known in self.table.keys() {
            let d = message_distance(message, known);
            if nearest.is_none_or(|(_, b)| d < b) {
                nearest = Some((known, d));
            }
        }
        match nearest {
            Some((known, d)) if d <= self.backoff_threshold => self.decode_known(&self.table[known]),
            _ => self.fallback(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = WernickeDoc {
            format_version: MODEL_FORMAT_VERSION,
            kind: "wernicke".into(),
            game_fingerprint: self.game_fingerprint.clone(),
            alpha: self.cfg.alpha,
            variant: self.cfg.variant,
            backoff_threshold: self.backoff_threshold,
            table: self.table.clone(),
            labels: self.labels.clone(),
            fallback: self.fallback.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str, game: &GameSpec) -> Result<Self> {
        let doc: WernickeDoc = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: doc.format_version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        if doc.kind != "wernicke" {
            return Err(Error::InvalidInferenceConfig(format!(
                "expected a wernicke model, found {:?}",
                doc.kind
            )));
        }
        let expected = game.fingerprint();
        if doc.game_fingerprint != expected {
            return Err(Error::Fingerprint {
                expected,
                found: doc.game_fingerprint,
            });
        }
        let referenced = doc
            .table
            .values()
            .flat_map(|h| h.keys())
            .chain(std::iter::once(&doc.fallback));
        for k in referenced {
            if !doc.labels.contains_key(k) {
                return Err(Error::InvalidInferenceConfig(format!("unknown label {k:?}")));
            }
        }
        let cfg = MapConfig {
            alpha: doc.alpha,
            variant: doc.variant,
        };
        cfg.validate()?;
        Self {
            game_fingerprint: doc.game_fingerprint,
            cfg,
            backoff_threshold: DEFAULT_BACKOFF_THRESHOLD,
            table: doc.table,
            labels: doc.labels,
            fallback: doc.fallback,
        }
        .with_backoff_threshold(doc.backoff_threshold)
    }
}

/// See [`WernickeModel::decode`].
pub fn wernicke_decode(model: &WernickeModel, message: &Message) -> Trajectory {
    model.decode(message).clone()
}
