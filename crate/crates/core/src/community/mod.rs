//! Synthetic communities of speakers and listeners that share a codebook.

mod listener;
mod message;
mod speaker;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use listener::{listener_traj_dist, plan_distribution, plan_step_probs, ListenerPolicy, Plan};
pub use message::{enumerate_messages, Message};
pub use speaker::{boltzmann, SpeakerPolicy, Temperature};

use crate::envcore::{ActionId, GameKind, GameSpec, Move, Trajectory, TrajectorySpace};
use crate::error::{Error, Result};
use crate::rng;
use crate::semantics::{DistanceConfig, SemanticModel};

pub const COMMUNITY_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CODEBOOK_K: usize = 64;

/// What a listener does for the null message and for messages outside the codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DefaultPlanRule {
    /// Stay put: `pick` in place in a supermarket, the first candidate in a Lewis game.
    #[default]
    Stay,
    /// A seeded random action sequence drawn once at construction.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    #[serde(default = "one")]
    pub n_speakers: usize,
    #[serde(default = "one")]
    pub n_listeners: usize,
    #[serde(default)]
    pub epsilon: f64,
    /// Per-listener noise; overrides `epsilon` when present.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub temp_msg: Temperature,
    #[serde(default)]
    pub temp_target: Temperature,
    /// Supermarket codebooks cover the top-K trajectories by return.
    #[serde(default)]
    pub codebook_k: Option<usize>,
    #[serde(default)]
    pub default_plan: DefaultPlanRule,
    #[serde(default)]
    pub distances: DistanceConfig,
}

fn one() -> usize {
    1
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self {
            n_speakers: 1,
            n_listeners: 1,
            epsilon: 0.0,
            epsilons: None,
            temp_msg: Temperature::default(),
            temp_target: Temperature::default(),
            codebook_k: None,
            default_plan: DefaultPlanRule::Stay,
            distances: DistanceConfig::default(),
        }
    }
}

impl CommunityConfig {
    /// Noise-free listeners and zero-temperature message choice.
    pub fn deterministic() -> Self {
        Self {
            temp_msg: Temperature::Zero,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidCommunityConfig(m));
        if self.n_speakers == 0 || self.n_listeners == 0 {
            return fail("pool sizes must be at least 1".into());
        }
        if let Some(eps) = &self.epsilons {
            if eps.len() != self.n_listeners {
                return fail(format!(
                    "{} epsilons given for {} listeners",
                    eps.len(),
                    self.n_listeners
                ));
            }
        }
        for e in self.listener_epsilons() {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("epsilon {e} outside [0, 1]"));
            }
        }
        if self.codebook_k == Some(0) {
            return fail("codebook_k must be positive".into());
        }
        self.temp_msg.validate()?;
        self.temp_target.validate()?;
        self.distances.validate()
    }

    pub fn listener_epsilons(&self) -> Vec<f64> {
        self.epsilons
            .clone()
            .unwrap_or_else(|| vec![self.epsilon; self.n_listeners])
    }
}

/// A pool of agents that share one language in one game.
///
/// Everything is a pure function of `(game, config, seed)`. Speakers are
/// calibrated to the reference listener (index 0), whose semantic model is
/// built with the community and shared by all speakers.
#[derive(Debug)]
pub struct Community {
    game: GameSpec,
    config: CommunityConfig,
    seed: u64,
    codebook: BTreeMap<Message, Plan>,
    listeners: Vec<ListenerPolicy>,
    speakers: Vec<SpeakerPolicy>,
    semantics: SemanticModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommunityDoc {
    format_version: u32,
    seed: u64,
    config: CommunityConfig,
    game: GameSpec,
    codebook: BTreeMap<Message, Plan>,
    listeners: Vec<ListenerPolicy>,
    speakers: Vec<SpeakerPolicy>,
}

/// Builds the community for `(game, config, seed)`.
///
/// The codebook assigns distinct speaker messages, in a seeded random order,
/// to a covering set of trajectories: all of them in a Lewis game, the top-K
/// by return (ties by canonical key) in a supermarket. Each codebook plan is
/// the covered trajectory's action sequence.
pub fn build_community(game: &GameSpec, config: &CommunityConfig, seed: u64) -> Result<Community> {
    config.validate()?;
    let space = TrajectorySpace::new(game)?;
    let cover: Vec<usize> = match game.kind() {
        GameKind::Lewis => (0..space.len()).collect(),
        GameKind::Supermarket => {
            let k = config
                .codebook_k
                .unwrap_or(DEFAULT_CODEBOOK_K)
                .min(space.len());
            let mut order: Vec<usize> = (0..space.len()).collect();
            order.sort_by(|&a, &b| space.value(b).total_cmp(&space.value(a)).then(a.cmp(&b)));
            order.truncate(k);
            order
        }
    };
    let mut messages = enumerate_messages(game, false)?;
    if messages.len() < cover.len() {
        return Err(Error::VocabularyTooSmall {
            needed: cover.len(),
            available: messages.len(),
        });
    }
    messages.shuffle(&mut rng::stream(seed, 0));
    let codebook: BTreeMap<Message, Plan> = cover
        .iter()
        .zip(messages)
        .map(|(&t, m)| (m, space.get(t).actions()))
        .collect();

    let default_plan: Plan = match config.default_plan {
        DefaultPlanRule::Stay => match game.kind() {
            GameKind::Lewis => vec![ActionId(0)],
            GameKind::Supermarket => vec![Move::Pick.id(); game.horizon()],
        },
        DefaultPlanRule::Random => {
            let mut r = rng::stream(seed, 1);
            (0..game.horizon())
                .map(|_| ActionId(r.gen_range(0..game.num_actions())))
                .collect()
        }
    };
    let listeners = config
        .listener_epsilons()
        .into_iter()
        .map(|eps| ListenerPolicy::new(game, codebook.clone(), eps, default_plan.clone()))
        .collect::<Result<Vec<_>>>()?;
    let speakers = (0..config.n_speakers)
        .map(|_| SpeakerPolicy {
            listener_ref: 0,
            temp_msg: config.temp_msg,
            temp_target: config.temp_target,
        })
        .collect();
    let semantics = SemanticModel::with_space(&listeners[0], game, space, &config.distances)?;
    Ok(Community {
        game: game.clone(),
        config: config.clone(),
        seed,
        codebook,
        listeners,
        speakers,
        semantics,
    })
}

impl Community {
    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn config(&self) -> &CommunityConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn codebook(&self) -> &BTreeMap<Message, Plan> {
        &self.codebook
    }

    pub fn listeners(&self) -> &[ListenerPolicy] {
        &self.listeners
    }

    pub fn speakers(&self) -> &[SpeakerPolicy] {
        &self.speakers
    }

    pub fn reference_listener(&self) -> &ListenerPolicy {
        &self.listeners[0]
    }

    /// Semantic model of the reference listener.
    pub fn semantics(&self) -> &SemanticModel {
        &self.semantics
    }

    pub fn space(&self) -> &Arc<TrajectorySpace> {
        self.semantics.space()
    }

    /// `P(target)` proportional to `exp(V / temp_target)` over all trajectories.
    pub fn target_prior(&self, speaker: usize) -> Vec<f64> {
        boltzmann(self.space().values(), self.speakers[speaker].temp_target)
    }

    /// Samples an intended trajectory index from a speaker's prior.
    pub fn sample_target<R: Rng + ?Sized>(&self, speaker: usize, rng: &mut R) -> usize {
        sample_index(&self.target_prior(speaker), rng)
    }

    /// Samples a message for `target` (an index into [`Community::space`]).
    pub fn sample_message<R: Rng + ?Sized>(
        &self,
        speaker: usize,
        target: usize,
        rng: &mut R,
    ) -> Result<Message> {
        let probs = self
            .semantics
            .speaker_distribution(target, self.speakers[speaker].temp_msg)?;
        Ok(self.semantics.speaker_messages()[sample_index(&probs, rng)].clone())
    }

    pub fn to_json(&self) -> String {
        let doc = CommunityDoc {
            format_version: COMMUNITY_FORMAT_VERSION,
            seed: self.seed,
            config: self.config.clone(),
            game: self.game.clone(),
            codebook: self.codebook.clone(),
            listeners: self.listeners.clone(),
            speakers: self.speakers.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("community serializes")
    }

    /// Loads a community document and checks it against a rebuild from its
    /// own config and seed.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CommunityDoc = serde_json::from_str(text)?;
        if doc.format_version != COMMUNITY_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: doc.format_version,
                supported: COMMUNITY_FORMAT_VERSION,
            });
        }
        let rebuilt = build_community(&doc.game, &doc.config, doc.seed)?;
        if rebuilt.codebook != doc.codebook
            || rebuilt.listeners != doc.listeners
            || rebuilt.speakers != doc.speakers
        {
            return Err(Error::CommunityMismatch);
        }
        Ok(rebuilt)
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(probs)
        .expect("normalized non-negative weights")
        .sample(rng)
}

/// Samples `tau_target` from the first speaker's Boltzmann prior.
pub fn target_prior_sample<R: Rng + ?Sized>(community: &Community, rng: &mut R) -> Trajectory {
    community.space().get(community.sample_target(0, rng)).clone()
}

/// Samples a message for `target` from speaker `speaker` of the community.
pub fn speaker_sample<R: Rng + ?Sized>(
    community: &Community,
    speaker: usize,
    target: &Trajectory,
    rng: &mut R,
) -> Result<Message> {
    let idx = crate::semantics::target_index(community.semantics(), target)?;
    community.sample_message(speaker, idx, rng)
}
