//! Brute-force reference implementations, written without the enumeration,
//! distance and listener machinery they check, plus the randomized
//! equivalence suite behind `cla oracle-check`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::community::{
    build_community, enumerate_messages, CommunityConfig, ListenerPolicy, Message, Temperature,
};
use crate::dataset::Observed;
use crate::envcore::{rollout, ActionId, GameSpec, State, SupermarketLayout, SupermarketRewards};
use crate::error::Result;
use crate::inference::{map_target, MapConfig, MapVariant};
use crate::rng::stream;

/// One complete action sequence of a game with its return.
#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    pub key: String,
    pub actions: Vec<ActionId>,
    pub value: f64,
}

/// Depth-first walk over every action sequence, stopping at terminal
/// states or the horizon; sorted by key.
pub fn brute_force_trajectories(game: &GameSpec) -> Result<Vec<OracleTrajectory>> {
    fn walk(
        game: &GameSpec,
        state: &State,
        actions: &mut Vec<ActionId>,
        rewards: &mut Vec<f64>,
        origin: &str,
        out: &mut Vec<OracleTrajectory>,
    ) -> Result<()> {
        if actions.len() == game.horizon() || game.is_terminal(state) {
            let mut value = 0.0;
            let mut discount = 1.0;
            for r in rewards.iter() {
                value += discount * r;
                discount *= game.gamma();
            }
            let ids: Vec<String> = actions.iter().map(|a| a.0.to_string()).collect();
            out.push(OracleTrajectory {
                key: format!("{origin}|{}", ids.join(".")),
                actions: actions.clone(),
                value,
            });
            return Ok(());
        }
        for a in 0..game.num_actions() {
            let o = game.step(state, ActionId(a))?;
            actions.push(ActionId(a));
            rewards.push(o.reward);
            walk(game, &o.next_state, actions, rewards, origin, out)?;
            actions.pop();
            rewards.pop();
        }
        Ok(())
    }
    let s0 = game.initial_state();
    let origin = game.digest(&s0);
    let mut out = Vec::new();
    walk(game, &s0, &mut Vec::new(), &mut Vec::new(), &origin, &mut out)?;
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

/// Textbook two-row Levenshtein distance over the longer length.
pub fn brute_force_edit<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()] as f64 / a.len().max(b.len()).max(1) as f64
}

/// Probability that a noisy open-loop listener produces `actions`.
pub fn brute_force_likelihood(listener: &ListenerPolicy, game: &GameSpec, message: &Message, actions: &[ActionId]) -> f64 {
    let plan = listener.plan_for(message);
    let n = game.num_actions() as f64;
    let eps = listener.epsilon();
    actions
        .iter()
        .enumerate()
        .map(|(k, a)| match plan.get(k) {
            Some(p) if p == a => eps * (1.0 / n) + (1.0 - eps),
            Some(_) => eps * (1.0 / n),
            None => 1.0 / n,
        })
        .product()
}

/// Scores every candidate intended trajectory and returns the key of the
/// best one: highest score, then highest return, then earliest key.
pub fn brute_force_map(
    game: &GameSpec,
    observed: &[ActionId],
    message: &Message,
    alpha: f64,
    variant: MapVariant,
    listener: Option<&ListenerPolicy>,
) -> Result<String> {
    let all = brute_force_trajectories(game)?;
    let response: Vec<f64> = match (variant, listener) {
        (MapVariant::Expected, Some(l)) => all
            .iter()
            .map(|t| brute_force_likelihood(l, game, message, &t.actions))
            .collect(),
        (MapVariant::Expected, None) => return Err(crate::Error::MissingListenerModel),
        (MapVariant::Literal, _) => Vec::new(),
    };
    let mut best: Option<(f64, f64, &str)> = None;
    for cand in &all {
        let penalty = match variant {
            MapVariant::Literal => brute_force_edit(&cand.actions, observed),
            MapVariant::Expected => all
                .iter()
                .zip(&response)
                .filter(|(_, &p)| p > 0.0)
                .map(|(t, &p)| p * brute_force_edit(&cand.actions, &t.actions))
                .sum(),
        };
        let score = cand.value - alpha * penalty;
        let better = match best {
            None => true,
            Some((s, v, k)) => {
                score > s || (score == s && (cand.value > v || (cand.value == v && cand.key.as_str() < k)))
            }
        };
        if better {
            best = Some((score, cand.value, &cand.key));
        }
    }
    Ok(best.expect("games have trajectories").2.to_string())
}

/// The message (null included) under which the listener is most likely to
/// produce `target`; ties go to the shorter, then lexicographically smaller
/// message.
pub fn brute_force_optimal_message(listener: &ListenerPolicy, game: &GameSpec, target: &[ActionId]) -> Result<Message> {
    let mut best: Option<(f64, Message)> = None;
    for m in enumerate_messages(game, true)? {
        let p = brute_force_likelihood(listener, game, &m, target);
        let better = match &best {
            None => true,
            Some((bp, bm)) => p > *bp || (p == *bp && (m.len(), m.tokens()) < (bm.len(), bm.tokens())),
        };
        if better {
            best = Some((p, m));
        }
    }
    Ok(best.expect("message space is non-empty").1)
}

/// The games the equivalence suite draws from: Lewis games with two to four
/// candidates and supermarkets with at most 64 trajectories.
pub fn oracle_games() -> Vec<GameSpec> {
    let lewis = |n: usize, vocab: &[&str], len: usize| {
        let cands: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        GameSpec::lewis(cands, 0, vocab.iter().map(|s| s.to_string()).collect(), len).expect("valid game")
    };
    let market = |w, h, items: Vec<(u32, u32)>, list: Vec<usize>, start, horizon, gamma| {
        GameSpec::supermarket(
            SupermarketLayout {
                width: w,
                height: h,
                items,
                shopping_list: list,
                start,
            },
            SupermarketRewards::default(),
            vec!["a", "b", "c", "d", "e", "f"],
            2,
            horizon,
            gamma,
        )
        .expect("valid game")
    };
    vec![
        lewis(2, &["a", "b"], 1),
        lewis(3, &["a", "b", "c"], 1),
        lewis(4, &["a", "b", "c", "d"], 1),
        lewis(3, &["a", "b"], 2),
        market(2, 2, vec![(1, 1)], vec![0], (0, 0), 2, 1.0),
        market(3, 3, vec![(1, 0), (2, 2)], vec![0], (1, 1), 2, 0.9),
        market(2, 2, vec![(0, 0), (1, 0)], vec![0, 1], (0, 0), 2, 1.0),
    ]
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleSummary {
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

impl OracleSummary {
    pub fn failed(&self) -> usize {
        self.cases - self.passed
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(what());
        }
    }
}

/// Runs `cases` randomized MAP cases per variant, plus an optimal-message
/// check per case, comparing the library against the brute-force scorers.
pub fn oracle_check(cases: usize, seed: u64) -> Result<OracleSummary> {
    let games = oracle_games();
    let mut rng = stream(seed, 0);
    let mut summary = OracleSummary::default();
    for case in 0..cases {
        let game = &games[case % games.len()];
        let cfg = CommunityConfig {
            epsilon: *[0.0, 0.1, 0.25].choose(&mut rng).expect("non-empty"),
            temp_msg: Temperature::Zero,
            codebook_k: Some(6),
            ..CommunityConfig::default()
        };
        let community = build_community(game, &cfg, rng.gen())?;
        let listener = community.reference_listener();
        let messages = enumerate_messages(game, true)?;
        let message = messages.choose(&mut rng).expect("non-empty").clone();
        let observed = rollout(game, listener, &message, &mut rng)?;
        // integer and half-integer alphas make exact score ties likely
        let alpha = if rng.gen_bool(0.3) {
            f64::from(rng.gen_range(1..=8)) / 2.0
        } else {
            10f64.powf(rng.gen_range(-3.0..3.0))
        };
        let record = Observed {
            message: &message,
            trajectory: &observed,
        };
        for variant in [MapVariant::Literal, MapVariant::Expected] {
            let map_cfg = MapConfig { alpha, variant };
            let got = map_target(&record, game, &map_cfg, Some(community.semantics()))?;
            let want = brute_force_map(game, &observed.actions(), &message, alpha, variant, Some(listener))?;
            summary.record(got.key() == want, || {
                format!(
                    "case {case} {variant:?} alpha={alpha} message={:?} observed={}: got {}, want {want}",
                    message.canonical(),
                    observed.key(),
                    got.key()
                )
            });
        }
        let target = community.space().get(rng.gen_range(0..community.space().len())).clone();
        let got = crate::semantics::optimal_message(listener, game, &target)?;
        let want = brute_force_optimal_message(listener, game, &target.actions())?;
        summary.record(got == want, || {
            format!("case {case} optimal message for {}: got {:?}, want {:?}", target.key(), got.canonical(), want.canonical())
        });
    }
    Ok(summary)
}
