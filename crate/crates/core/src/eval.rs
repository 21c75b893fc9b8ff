//! Monte Carlo scoring of the observer against a community, with paired
//! baselines: every arm of an evaluation consumes the same per-episode
//! streams, so differences between arms are not sampling artifacts.
//!
//! CSV columns (one row per evaluation, header first):
//!
//! - speaker: `kind,n,success_rate,mean_return,oracle_success_rate,oracle_mean_return,random_success_rate,random_mean_return`
//! - listener: `kind,n,recovery_rate,mean_distance,mean_target_value,literal_recovery_rate,literal_mean_distance,literal_mean_target_value`

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::community::{Community, Message, Temperature};
use crate::dataset::play_episode;
use crate::envcore::{rollout, Trajectory};
use crate::error::{Error, Result};
use crate::inference::{BrocaModel, WernickeModel};
use crate::rng::{episode_stream, Purpose};
use crate::semantics::trajectory_distance;

pub const SPEAKER_CSV_HEADER: [&str; 8] = [
    "kind",
    "n",
    "success_rate",
    "mean_return",
    "oracle_success_rate",
    "oracle_mean_return",
    "random_success_rate",
    "random_mean_return",
];

pub const LISTENER_CSV_HEADER: [&str; 8] = [
    "kind",
    "n",
    "recovery_rate",
    "mean_distance",
    "mean_target_value",
    "literal_recovery_rate",
    "literal_mean_distance",
    "literal_mean_target_value",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerMetrics {
    pub success_rate: f64,
    pub mean_return: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerBaselines {
    pub oracle: SpeakerMetrics,
    pub random: SpeakerMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerReport {
    pub n: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    pub baselines: SpeakerBaselines,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListenerMetrics {
    pub recovery_rate: f64,
    pub mean_distance: f64,
    pub mean_target_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListenerReport {
    pub n: usize,
    pub recovery_rate: f64,
    pub mean_distance: f64,
    pub mean_target_value: f64,
    pub literal_baseline: ListenerMetrics,
}

/// One arm of one episode: what was said and what happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTranscript {
    pub message: Message,
    pub trajectory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerEpisode {
    pub episode: u64,
    pub target: String,
    pub model: ArmTranscript,
    pub oracle: ArmTranscript,
    pub random: ArmTranscript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerEpisode {
    pub episode: u64,
    pub target: String,
    pub message: Message,
    pub observed: String,
    pub decoded: String,
}

#[derive(Default)]
struct SpeakerAcc {
    hits: usize,
    ret: f64,
}

impl SpeakerAcc {
    fn add(&mut self, target: &Trajectory, realized: &Trajectory, value: f64) {
        self.hits += usize::from(target.key() == realized.key());
        self.ret += value;
    }

    fn finish(&self, n: usize) -> SpeakerMetrics {
        SpeakerMetrics {
            success_rate: self.hits as f64 / n as f64,
            mean_return: self.ret / n as f64,
        }
    }
}

#[derive(Default)]
struct ListenerAcc {
    hits: usize,
    dist: f64,
    value: f64,
}

impl ListenerAcc {
    fn add(&mut self, decoded: &Trajectory, truth: &Trajectory, value: f64) -> Result<()> {
        self.hits += usize::from(decoded.key() == truth.key());
        self.dist += trajectory_distance(decoded, truth)?;
        self.value += value;
        Ok(())
    }

    fn finish(&self, n: usize) -> ListenerMetrics {
        ListenerMetrics {
            recovery_rate: self.hits as f64 / n as f64,
            mean_distance: self.dist / n as f64,
            mean_target_value: self.value / n as f64,
        }
    }
}

fn check_model_game(found: &str, community: &Community) -> Result<()> {
    let expected = community.game().fingerprint();
    if found != expected {
        return Err(Error::Fingerprint {
            expected,
            found: found.to_string(),
        });
    }
    Ok(())
}

/// Scores a fitted Broca model as a speaker. Episode `i` draws the target
/// from the Boltzmann prior of speaker `i mod |speakers|` and rolls out
/// listener `i mod |listeners|`; the oracle (the listener's optimal
/// message) and the uniformly random speaker reuse the same streams.
pub fn eval_speaker(broca: &BrocaModel, community: &Community, n: usize, seed: u64) -> Result<SpeakerReport> {
    eval_speaker_with_transcript(broca, community, n, seed).map(|(r, _)| r)
}

pub fn eval_speaker_with_transcript(
    broca: &BrocaModel,
    community: &Community,
    n: usize,
    seed: u64,
) -> Result<(SpeakerReport, Vec<SpeakerEpisode>)> {
    if n == 0 {
        return Err(Error::NoEpisodes);
    }
    check_model_game(&broca.game().fingerprint(), community)?;
    let game = community.game();
    let space = community.space();
    let sem = community.semantics();
    let candidates = sem.speaker_messages();
    let (mut model, mut oracle, mut random) =
        (SpeakerAcc::default(), SpeakerAcc::default(), SpeakerAcc::default());
    let mut transcript = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let speaker = (i % community.speakers().len() as u64) as usize;
        let listener = &community.listeners()[(i % community.listeners().len() as u64) as usize];
        let target_idx = community.sample_target(speaker, &mut episode_stream(seed, i, Purpose::Target));
        let target = space.get(target_idx);

        let oracle_probs = sem.speaker_distribution(target_idx, Temperature::Zero)?;
        let oracle_msg = candidates[oracle_probs.iter().position(|&p| p == 1.0).expect("point mass")].clone();
        let random_msg = candidates[episode_stream(seed, i, Purpose::Message).gen_range(0..candidates.len())].clone();
        let model_msg = broca.emit(target);

        let arm = |msg: Message, acc: &mut SpeakerAcc| -> Result<ArmTranscript> {
            let tau = rollout(game, listener, &msg, &mut episode_stream(seed, i, Purpose::Rollout))?;
            let idx = space.index_of(tau.key()).expect("rollouts stay in the enumerated space");
            acc.add(target, &tau, space.value(idx));
            Ok(ArmTranscript {
                message: msg,
                trajectory: tau.key().to_string(),
            })
        };
        let episode = SpeakerEpisode {
            episode: i,
            target: target.key().to_string(),
            model: arm(model_msg, &mut model)?,
            oracle: arm(oracle_msg, &mut oracle)?,
            random: arm(random_msg, &mut random)?,
        };
        transcript.push(episode);
    }
    let m = model.finish(n);
    Ok((
        SpeakerReport {
            n,
            success_rate: m.success_rate,
            mean_return: m.mean_return,
            baselines: SpeakerBaselines {
                oracle: oracle.finish(n),
                random: random.finish(n),
            },
        },
        transcript,
    ))
}

/// Scores a fitted Wernicke model as a listener: episodes are generated
/// exactly as by [`crate::dataset::collect`] with `seed` as master seed, the
/// observed message is decoded and compared with the speaker's hidden
/// target. The literal baseline decodes every episode as the observed
/// trajectory.
pub fn eval_listener(
    wernicke: &WernickeModel,
    community: &Community,
    n: usize,
    seed: u64,
) -> Result<ListenerReport> {
    eval_listener_with_transcript(wernicke, community, n, seed).map(|(r, _)| r)
}

pub fn eval_listener_with_transcript(
    wernicke: &WernickeModel,
    community: &Community,
    n: usize,
    seed: u64,
) -> Result<(ListenerReport, Vec<ListenerEpisode>)> {
    if n == 0 {
        return Err(Error::NoEpisodes);
    }
    check_model_game(wernicke.game_fingerprint(), community)?;
    let space = community.space();
    let value_of = |t: &Trajectory| space.value(space.index_of(t.key()).expect("enumerated"));
    let (mut model, mut literal) = (ListenerAcc::default(), ListenerAcc::default());
    let mut transcript = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let record = play_episode(community, seed, i)?;
        let truth = record.hidden_target.as_ref().expect("harness episodes carry their target");
        let decoded = wernicke.decode(&record.message);
        model.add(decoded, truth, value_of(decoded))?;
        literal.add(&record.trajectory, truth, value_of(&record.trajectory))?;
        transcript.push(ListenerEpisode {
            episode: i,
            target: truth.key().to_string(),
            observed: record.trajectory.key().to_string(),
            decoded: decoded.key().to_string(),
            message: record.message,
        });
    }
    let m = model.finish(n);
    Ok((
        ListenerReport {
            n,
            recovery_rate: m.recovery_rate,
            mean_distance: m.mean_distance,
            mean_target_value: m.mean_target_value,
            literal_baseline: literal.finish(n),
        },
        transcript,
    ))
}

fn csv_text(header: &[&str], row: Vec<String>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    w.write_record(&row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

impl SpeakerReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header line plus one row, in [`SPEAKER_CSV_HEADER`] order.
    pub fn to_csv(&self) -> String {
        let b = &self.baselines;
        csv_text(
            &SPEAKER_CSV_HEADER,
            vec![
                "speaker".into(),
                self.n.to_string(),
                self.success_rate.to_string(),
                self.mean_return.to_string(),
                b.oracle.success_rate.to_string(),
                b.oracle.mean_return.to_string(),
                b.random.success_rate.to_string(),
                b.random.mean_return.to_string(),
            ],
        )
    }
}

impl ListenerReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header line plus one row, in [`LISTENER_CSV_HEADER`] order.
    pub fn to_csv(&self) -> String {
        let l = &self.literal_baseline;
        csv_text(
            &LISTENER_CSV_HEADER,
            vec![
                "listener".into(),
                self.n.to_string(),
                self.recovery_rate.to_string(),
                self.mean_distance.to_string(),
                self.mean_target_value.to_string(),
                l.recovery_rate.to_string(),
                l.mean_distance.to_string(),
                l.mean_target_value.to_string(),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{build_community, CommunityConfig};
    use crate::dataset::collect;
    use crate::envcore::GameSpec;
    use crate::inference::{fit_broca, fit_wernicke, MapConfig};

    fn l3() -> GameSpec {
        GameSpec::lewis(vec!["x", "y", "z"], 0, vec!["a", "b", "c"], 1)
            .unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let game = l3();
        let mut cfg = CommunityConfig::deterministic();
        cfg.epsilon = 0.0;
        let c = build_community(&game, &cfg, 3).unwrap();
        let data = collect(&c, 300, 1).unwrap();
        let broca = fit_broca(&data.observed(), &game, 0.0).unwrap();
        let r = eval_speaker(&broca, &c, 200, 9).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.baselines.oracle, SpeakerMetrics { success_rate: 1.0, mean_return: r.mean_return });
        assert!(r.baselines.random.success_rate <= r.baselines.oracle.success_rate);

        let w = fit_wernicke(&data.observed(), &game, &MapConfig::literal(1000.0), None).unwrap();
        let l = eval_listener(&w, &c, 200, 9).unwrap();
        assert_eq!(l.recovery_rate, 1.0);
        assert_eq!(l.mean_distance, 0.0);
        assert_eq!(l.literal_baseline.recovery_rate, 1.0);
    }

    #[test]
    fn zero_episodes_rejected() {
        let game = l3();
        let c = build_community(&game, &CommunityConfig::deterministic(), 0).unwrap();
        let data = collect(&c, 10, 0).unwrap();
        let broca = fit_broca(&data.observed(), &game, 0.0).unwrap();
        assert!(matches!(eval_speaker(&broca, &c, 0, 0), Err(Error::NoEpisodes)));
    }

    #[test]
    fn csv_has_header_and_one_row() {
        let r = ListenerReport {
            n: 2,
            recovery_rate: 0.5,
            mean_distance: 0.5,
            mean_target_value: 1.0,
            literal_baseline: ListenerMetrics { recovery_rate: 0.0, mean_distance: 1.0, mean_target_value: 0.0 },
        };
        let text = r.to_csv();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], LISTENER_CSV_HEADER.join(","));
        assert_eq!(lines[1], "listener,2,0.5,0.5,1,0,1,0");
    }
}
