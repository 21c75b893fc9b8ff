//! Interaction datasets: generation from a community, JSONL persistence,
//! and the observer-side view that hides the intended trajectories.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::community::{Community, Message, Temperature};
use crate::envcore::{rollout, GameSpec, Trajectory, TrajectorySpace};
use crate::error::{Error, Result};
use crate::rng::{episode_stream, Purpose};
use crate::semantics::SignallingEpisode;

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// One observed interaction plus, for harness-generated data, the
/// trajectory the speaker intended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionRecord {
    pub message: Message,
    pub trajectory: Trajectory,
    pub hidden_target: Option<Trajectory>,
    /// Episode counter; the episode's random streams derive from
    /// `(meta.master_seed, episode_seed)`.
    pub episode_seed: u64,
    pub speaker_id: usize,
    pub listener_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub community_seed: u64,
    pub master_seed: u64,
    pub temp_msg: Temperature,
    pub temp_target: Temperature,
    /// Unix seconds; left out in canonical output.
    pub created_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    pub game_fingerprint: String,
    pub meta: DatasetMeta,
    pub records: Vec<InteractionRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    game_fingerprint: String,
    meta: DatasetMeta,
}

/// What the observer may see of one interaction: the message and the
/// listener's trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Observed<'a> {
    pub message: &'a Message,
    pub trajectory: &'a Trajectory,
}

/// Observer-side view of a dataset. The estimators only accept this type,
/// so they cannot reach `hidden_target`.
#[derive(Debug, Clone)]
pub struct ObservedData<'a> {
    game_fingerprint: &'a str,
    records: Vec<Observed<'a>>,
}

impl<'a> ObservedData<'a> {
    pub fn game_fingerprint(&self) -> &str {
        self.game_fingerprint
    }

    pub fn records(&self) -> &[Observed<'a>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of each record's trajectory in `space`; fails on the first
    /// record that is not a feasible trajectory of the space's game.
    pub(crate) fn trajectory_indices(&self, space: &TrajectorySpace) -> Result<Vec<usize>> {
        if self.game_fingerprint != space.fingerprint() {
            return Err(Error::Fingerprint {
                expected: space.fingerprint().to_string(),
                found: self.game_fingerprint.to_string(),
            });
        }
        self.records
            .iter()
            .enumerate()
            .map(|(index, r)| {
                space
                    .index_of(r.trajectory.key())
                    .filter(|&i| space.get(i) == r.trajectory)
                    .ok_or(Error::ForeignRecord { index })
            })
            .collect()
    }
}

impl InteractionDataset {
    pub fn new(game: &GameSpec, meta: DatasetMeta) -> Self {
        Self {
            game_fingerprint: game.fingerprint(),
            meta,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn observed(&self) -> ObservedData<'_> {
        ObservedData {
            game_fingerprint: &self.game_fingerprint,
            records: self
                .records
                .iter()
                .map(|r| Observed {
                    message: &r.message,
                    trajectory: &r.trajectory,
                })
                .collect(),
        }
    }

    /// Speaker-side view of each episode for the signalling test: the
    /// speaker observes its intended trajectory and says one message. Needs
    /// the hidden targets, so it is a harness-only measurement.
    pub fn signalling_episodes(&self) -> Result<Vec<SignallingEpisode>> {
        self.records
            .iter()
            .enumerate()
            .map(|(index, r)| {
                let target = r.hidden_target.as_ref().ok_or(Error::MissingHiddenTarget { index })?;
                Ok(SignallingEpisode {
                    observations: vec![target.key().to_string()],
                    actions: Vec::new(),
                    messages: vec![r.message.clone()],
                })
            })
            .collect()
    }

    pub fn check_game(&self, game: &GameSpec) -> Result<()> {
        let expected = game.fingerprint();
        if self.game_fingerprint != expected {
            return Err(Error::Fingerprint {
                expected,
                found: self.game_fingerprint.clone(),
            });
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let header = Header {
            format_version: DATASET_FORMAT_VERSION,
            game_fingerprint: self.game_fingerprint.clone(),
            meta: self.meta.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(self.to_jsonl().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Loads and checks that the file was generated for `game`.
    pub fn load_for_game(path: &Path, game: &GameSpec) -> Result<Self> {
        let d = Self::load(path)?;
        d.check_game(game)?;
        Ok(d)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines
            .next()
            .filter(|(_, l)| !l.is_empty())
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let header: Header =
            serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
        if header.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: header.format_version,
                supported: DATASET_FORMAT_VERSION,
            });
        }
        let records = lines
            .map(|(n, l)| serde_json::from_str(l).map_err(|e| parse_err(n, e.to_string())))
            .collect::<Result<Vec<InteractionRecord>>>()?;
        if !text.is_empty() && !text.ends_with('\n') {
            let n = records.len() + 1;
            return Err(parse_err(n, "truncated line (no trailing newline)".into()));
        }
        Ok(Self {
            game_fingerprint: header.game_fingerprint,
            meta: header.meta,
            records,
        })
    }
}

/// Plays `n_episodes` speaker-listener episodes. Episode `i` uses speaker
/// `i mod |speakers|`, listener `i mod |listeners|`, and streams derived from
/// `(master_seed, i)`: the target from the Boltzmann prior, the message from
/// the speaker, the trajectory from a rollout.
pub fn collect(community: &Community, n_episodes: usize, master_seed: u64) -> Result<InteractionDataset> {
    if n_episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let speakers = community.speakers();
    let meta = DatasetMeta {
        community_seed: community.seed(),
        master_seed,
        temp_msg: speakers[0].temp_msg,
        temp_target: speakers[0].temp_target,
        created_unix: None,
    };
    let mut dataset = InteractionDataset::new(community.game(), meta);
    dataset.records = (0..n_episodes as u64)
        .map(|i| play_episode(community, master_seed, i))
        .collect::<Result<_>>()?;
    Ok(dataset)
}

pub(crate) fn play_episode(community: &Community, master_seed: u64, i: u64) -> Result<InteractionRecord> {
    let speaker_id = (i % community.speakers().len() as u64) as usize;
    let listener_id = (i % community.listeners().len() as u64) as usize;
    let target = community.sample_target(
        speaker_id,
        &mut episode_stream(master_seed, i, Purpose::Target),
    );
    let message = community.sample_message(
        speaker_id,
        target,
        &mut episode_stream(master_seed, i, Purpose::Message),
    )?;
    let trajectory = rollout(
        community.game(),
        &community.listeners()[listener_id],
        &message,
        &mut episode_stream(master_seed, i, Purpose::Rollout),
    )?;
    Ok(InteractionRecord {
        message,
        trajectory,
        hidden_target: Some(community.space().get(target).clone()),
        episode_seed: i,
        speaker_id,
        listener_id,
    })
}
