use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::community::{enumerate_messages, Message};
use crate::dataset::ObservedData;
use crate::envcore::{coarse_feature, is_feasible, GameSpec, Trajectory};
use crate::error::{Error, Result};
use crate::semantics::message_distance;

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub type Histogram<K> = BTreeMap<K, u64>;

/// Tabular signalling model: message counts per observed trajectory, with a
/// coarser per-feature table and a global table to fall back on.
#[derive(Debug, Clone, PartialEq)]
pub struct BrocaModel {
    game: GameSpec,
    smoothing: f64,
    message_space: usize,
    table: BTreeMap<String, Histogram<Message>>,
    backoff_table: BTreeMap<String, Histogram<Message>>,
    global: Histogram<Message>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BrocaDoc {
    format_version: u32,
    kind: String,
    game_fingerprint: String,
    smoothing: f64,
    message_space: usize,
    table: BTreeMap<String, Histogram<Message>>,
    backoff_table: BTreeMap<String, Histogram<Message>>,
    global: Histogram<Message>,
}

/// Most frequent key; ties go to the smallest key.
pub(crate) fn majority<K: Ord + Clone>(h: &Histogram<K>) -> Option<K> {
    let mut best: Option<(&K, u64)> = None;
    for (k, &c) in h {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k.clone())
}

pub(crate) fn check_records(data: &ObservedData<'_>, game: &GameSpec) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let expected = game.fingerprint();
    if data.game_fingerprint() != expected {
        return Err(Error::Fingerprint {
            expected,
            found: data.game_fingerprint().to_string(),
        });
    }
    for (index, r) in data.records().iter().enumerate() {
        if !is_feasible(game, r.trajectory) || r.message.validate(game).is_err() {
            return Err(Error::ForeignRecord { index });
        }
    }
    Ok(())
}

/// Fits the signalling model by counting, for every observed trajectory,
/// which messages preceded it. The majority message per trajectory is the
/// decoder in the tabular family that minimizes the summed message distance
/// to the data whenever any disagreement costs the same, which holds
/// exactly for single-token messages.
pub fn fit_broca(data: &ObservedData<'_>, game: &GameSpec, smoothing: f64) -> Result<BrocaModel> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidInferenceConfig(format!(
            "smoothing {smoothing} must be a non-negative number"
        )));
    }
    check_records(data, game)?;
    let mut model = BrocaModel {
        game: game.clone(),
        smoothing,
        message_space: enumerate_messages(game, false)?.len(),
        table: BTreeMap::new(),
        backoff_table: BTreeMap::new(),
        global: BTreeMap::new(),
    };
    for r in data.records() {
        let m = r.message.clone();
        *model
            .table
            .entry(r.trajectory.key().to_string())
            .or_default()
            .entry(m.clone())
            .or_default() += 1;
        *model
            .backoff_table
            .entry(coarse_feature(game, r.trajectory)?)
            .or_default()
            .entry(m.clone())
            .or_default() += 1;
        *model.global.entry(m).or_default() += 1;
    }
    Ok(model)
}

impl BrocaModel {
    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn table(&self) -> &BTreeMap<String, Histogram<Message>> {
        &self.table
    }

    pub fn backoff_table(&self) -> &BTreeMap<String, Histogram<Message>> {
        &self.backoff_table
    }

    fn histogram_for(&self, target: &Trajectory) -> &Histogram<Message> {
        if let Some(h) = self.table.get(target.key()) {
            return h;
        }
        coarse_feature(&self.game, target)
            .ok()
            .and_then(|f| self.backoff_table.get(&f))
            .unwrap_or(&self.global)
    }

    /// Message to send so the listener follows `target`: the majority
    /// message for the exact trajectory, else for its coarse feature, else
    /// overall.
    pub fn emit(&self, target: &Trajectory) -> Message {
        majority(self.histogram_for(target)).expect("fitted tables are non-empty")
    }

    /// Add-`smoothing` estimate of `beta(message | target)` over the
    /// speaker message space, from the same table [`BrocaModel::emit`] uses.
    pub fn probability(&self, target: &Trajectory, message: &Message) -> f64 {
        let h = self.histogram_for(target);
        let total: u64 = h.values().sum();
        let count = h.get(message).copied().unwrap_or(0) as f64;
        let denom = total as f64 + self.smoothing * self.message_space as f64;
        if denom == 0.0 {
            return 0.0;
        }
        (count + self.smoothing) / denom
    }

    /// Summed message distance between the data and the emitted messages.
    pub fn training_loss(&self, data: &ObservedData<'_>) -> f64 {
        data.records()
            .iter()
            .map(|r| message_distance(r.message, &self.emit(r.trajectory)))
            .sum()
    }

    pub fn to_json(&self) -> String {
        let doc = BrocaDoc {
            format_version: MODEL_FORMAT_VERSION,
            kind: "broca".into(),
            game_fingerprint: self.game.fingerprint(),
            smoothing: self.smoothing,
            message_space: self.message_space,
            table: self.table.clone(),
            backoff_table: self.backoff_table.clone(),
            global: self.global.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str, game: &GameSpec) -> Result<Self> {
        let doc: BrocaDoc = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: doc.format_version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        if doc.kind != "broca" {
            return Err(Error::InvalidInferenceConfig(format!(
                "expected a broca model, found {:?}",
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
        if doc.global.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            game: game.clone(),
            smoothing: doc.smoothing,
            message_space: doc.message_space,
            table: doc.table,
            backoff_table: doc.backoff_table,
            global: doc.global,
        })
    }
}

/// See [`BrocaModel::emit`].
pub fn broca_emit(model: &BrocaModel, target: &Trajectory) -> Message {
    model.emit(target)
}
