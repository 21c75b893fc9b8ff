use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::distance::{distribution_distance, DistanceConfig};
use crate::community::{plan_distribution, ListenerPolicy, Message};
use crate::envcore::{ActionId, GameSpec, TrajectorySpace};
use crate::error::{Error, Result};
use crate::rng;

pub const MIN_SIGNALLING_EPISODES: usize = 30;

/// The `(context, message)` pair at which the listening statistic peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub context: Vec<ActionId>,
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub detected: bool,
    pub statistic: f64,
    /// Set for the signalling test only.
    pub p_value: Option<f64>,
    /// Set for the listening test only.
    pub witness: Option<Witness>,
}

/// One speaker episode: what it observed, what it did, what it said.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignallingEpisode {
    pub observations: Vec<String>,
    pub actions: Vec<String>,
    pub messages: Vec<Message>,
}

/// Largest change a message makes to the listener's trajectory
/// distribution relative to the null message, over the given contexts.
///
/// A context is an action prefix the listener has already taken (its
/// observation history is determined by it); the empty prefix is the start
/// of the episode and is used when `contexts` is empty. Prefixes no
/// trajectory extends are skipped.
pub fn positive_listening_test(
    listener: &ListenerPolicy,
    game: &GameSpec,
    contexts: &[Vec<ActionId>],
    messages: &[Message],
    cfg: &DistanceConfig,
) -> Result<DetectorReport> {
    cfg.validate()?;
    if messages.is_empty() {
        return Err(Error::NoMessages);
    }
    for m in messages {
        m.validate(game)?;
    }
    let space = TrajectorySpace::new(game)?;
    let root = [Vec::new()];
    let contexts = if contexts.is_empty() { &root[..] } else { contexts };
    let null_plan = listener.plan_for(&Message::null());
    let mut statistic = 0.0;
    let mut witness = None;
    for z in contexts {
        let base = plan_distribution(&space, null_plan, listener.epsilon(), game.num_actions(), z);
        if base.total() == 0.0 {
            continue;
        }
        for m in messages {
            let with_m = plan_distribution(
                &space,
                listener.plan_for(m),
                listener.epsilon(),
                game.num_actions(),
                z,
            );
            let d = distribution_distance(&base, &with_m, cfg)?;
            if witness.is_none() || d > statistic {
                statistic = d;
                witness = Some(Witness {
                    context: z.clone(),
                    message: m.clone(),
                });
            }
        }
    }
    Ok(DetectorReport {
        detected: statistic > cfg.listening_epsilon,
        statistic,
        p_value: None,
        witness,
    })
}

/// Plug-in mutual information (nats) between two coded columns.
pub fn mutual_information(xs: &[usize], ys: &[usize]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let nx = xs.iter().max().map_or(0, |m| m + 1);
    let ny = ys.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0u32; nx * ny];
    let mut cx = vec![0u32; nx];
    let mut cy = vec![0u32; ny];
    for (&x, &y) in xs.iter().zip(ys) {
        joint[x * ny + y] += 1;
        cx[x] += 1;
        cy[y] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let c = joint[x * ny + y];
            if c > 0 {
                let c = c as f64;
                mi += c / nf * (c * nf / (cx[x] as f64 * cy[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

fn encode<I: IntoIterator<Item = String>>(items: I) -> Vec<usize> {
    let mut codes = HashMap::new();
    items
        .into_iter()
        .map(|s| {
            let next = codes.len();
            *codes.entry(s).or_insert(next)
        })
        .collect()
}

/// Tests whether messages depend on the speaker's (observation, action)
/// record: mutual information as the statistic, a permutation test on the
/// message column for the p-value. Resample `r` shuffles with the stream
/// `(permutation_seed, r)`, so the result does not depend on evaluation order.
pub fn positive_signalling_test(
    episodes: &[SignallingEpisode],
    cfg: &DistanceConfig,
) -> Result<DetectorReport> {
    cfg.validate()?;
    if episodes.len() < MIN_SIGNALLING_EPISODES {
        return Err(Error::TooFewEpisodes {
            got: episodes.len(),
            min: MIN_SIGNALLING_EPISODES,
        });
    }
    let messages = encode(episodes.iter().map(|e| {
        e.messages
            .iter()
            .map(Message::canonical)
            .collect::<Vec<_>>()
            .join(" | ")
    }));
    let context = encode(
        episodes
            .iter()
            .map(|e| format!("{}#{}", e.observations.join(" | "), e.actions.join(" | "))),
    );
    let observed = mutual_information(&messages, &context);
    let mut shuffled = messages.clone();
    let at_least = (0..cfg.permutations)
        .filter(|&r| {
            shuffled.copy_from_slice(&messages);
            shuffled.shuffle(&mut rng::stream(cfg.permutation_seed, r as u64));
            mutual_information(&shuffled, &context) >= observed - 1e-12
        })
        .count();
    let p_value = (1 + at_least) as f64 / (1 + cfg.permutations) as f64;
    Ok(DetectorReport {
        detected: p_value < cfg.signalling_alpha,
        statistic: observed,
        p_value: Some(p_value),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn l3() -> GameSpec {
        GameSpec::lewis(vec!["x", "y", "z"], 0, vec!["a", "b", "c"], 1).unwrap()
    }

    fn codebook_listener(game: &GameSpec, epsilon: f64) -> ListenerPolicy {
        let codebook = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(k, t)| (Message::parse(t), vec![ActionId(k)]))
            .collect();
        ListenerPolicy::new(game, codebook, epsilon, vec![ActionId(0)]).unwrap()
    }

    fn all_messages() -> Vec<Message> {
        ["a", "b", "c"].iter().map(|t| Message::parse(t)).collect()
    }

    #[test]
    fn codebook_listener_listens() {
        let g = l3();
        let r = positive_listening_test(
            &codebook_listener(&g, 0.0),
            &g,
            &[],
            &all_messages(),
            &DistanceConfig::default(),
        )
        .unwrap();
        assert!(r.detected);
        assert_eq!(r.statistic, 1.0);
        assert_eq!(r.witness.unwrap().message, Message::parse("b"));
    }

    #[test]
    fn message_blind_listener_does_not() {
        let g = l3();
        let blind = ListenerPolicy::new(&g, BTreeMap::new(), 0.2, vec![ActionId(1)]).unwrap();
        let r = positive_listening_test(&blind, &g, &[], &all_messages(), &DistanceConfig::default())
            .unwrap();
        assert!(!r.detected);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn half_noise_listener_under_total_variation() {
        let g = l3();
        let r = positive_listening_test(
            &codebook_listener(&g, 0.5),
            &g,
            &[],
            &all_messages(),
            &DistanceConfig::total_variation(),
        )
        .unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn listening_needs_messages() {
        let g = l3();
        let err = positive_listening_test(
            &codebook_listener(&g, 0.0),
            &g,
            &[],
            &[],
            &DistanceConfig::default(),
        );
        assert!(matches!(err, Err(Error::NoMessages)));
    }

    #[test]
    fn mutual_information_basics() {
        assert_eq!(mutual_information(&[0, 0, 0, 0], &[0, 1, 0, 1]), 0.0);
        let mi = mutual_information(&[0, 1, 0, 1], &[0, 1, 0, 1]);
        assert!((mi - 2f64.ln()).abs() < 1e-12);
    }

    fn episode(target: usize, message: &str) -> SignallingEpisode {
        SignallingEpisode {
            observations: vec![format!("t{target}")],
            actions: vec![],
            messages: vec![Message::parse(message)],
        }
    }

    #[test]
    fn constant_speaker_is_not_signalling() {
        let eps: Vec<_> = (0..60).map(|i| episode(i % 3, "a")).collect();
        let r = positive_signalling_test(&eps, &DistanceConfig::default()).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, Some(1.0));
        assert!(!r.detected);
    }

    #[test]
    fn codebook_speaker_is_signalling() {
        let eps: Vec<_> = (0..90)
            .map(|i| episode(i % 3, ["a", "b", "c"][i % 3]))
            .collect();
        let r = positive_signalling_test(&eps, &DistanceConfig::default()).unwrap();
        assert!(r.detected);
        assert!(r.p_value.unwrap() <= 1.0 / 1001.0 + 1e-15);
    }

    #[test]
    fn signalling_needs_thirty_episodes() {
        let eps: Vec<_> = (0..29).map(|i| episode(i % 3, "a")).collect();
        assert!(matches!(
            positive_signalling_test(&eps, &DistanceConfig::default()),
            Err(Error::TooFewEpisodes { got: 29, min: 30 })
        ));
    }

    #[test]
    fn report_json_shape() {
        let r = DetectorReport {
            detected: true,
            statistic: 0.5,
            p_value: Some(0.01),
            witness: None,
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(keys, ["detected", "p_value", "statistic", "witness"]);
    }
}
