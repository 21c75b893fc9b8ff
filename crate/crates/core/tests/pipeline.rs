use cla_core::community::{build_community, CommunityConfig, Temperature};
use cla_core::dataset::collect;
use cla_core::envcore::{GameSpec, SupermarketLayout, SupermarketRewards};
use cla_core::eval::*;
use cla_core::inference::{fit_broca, fit_wernicke, MapConfig};

fn l3() -> GameSpec {
    GameSpec::lewis(vec!["x", "y", "z"], 0, vec!["a", "b", "c"], 1).unwrap()
}

fn market() -> GameSpec {
    GameSpec::supermarket(
        SupermarketLayout { width: 2, height: 2, items: vec![(1, 1)], shopping_list: vec![0], start: (0, 0) },
        SupermarketRewards::default(),
        vec!["a", "b", "c", "d", "e", "f"],
        2,
        2,
        1.0,
    )
    .unwrap()
}

#[test]
fn codebooks_depend_on_the_seed() {
    let a = build_community(&l3(), &CommunityConfig::default(), 0).unwrap();
    let b = build_community(&l3(), &CommunityConfig::default(), 1).unwrap();
    assert_ne!(a.codebook(), b.codebook());
    assert_eq!(a.codebook(), build_community(&l3(), &CommunityConfig::default(), 0).unwrap().codebook());
}

fn target_counts(game: &GameSpec, temp: f64, n: usize) -> (Vec<f64>, Vec<usize>) {
    let cfg = CommunityConfig {
        temp_target: Temperature::Finite(temp),
        codebook_k: Some(8),
        ..CommunityConfig::deterministic()
    };
    let c = build_community(game, &cfg, 0).unwrap();
    let data = collect(&c, n, 5).unwrap();
    let prior = c.target_prior(0);
    let mut counts = vec![0usize; prior.len()];
    for r in &data.records {
        counts[c.space().index_of(r.hidden_target.as_ref().unwrap().key()).unwrap()] += 1;
    }
    (prior, counts)
}

#[test]
fn collected_targets_follow_the_boltzmann_prior() {
    let n = 10_000;
    let (prior, counts) = target_counts(&l3(), 1.0, n);
    for (p, &k) in prior.iter().zip(&counts) {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((k as f64 - n as f64 * p).abs() <= 3.0 * sigma, "p={p} count={k}");
    }
    // 25 cells: per-cell 3 sigma bounds would fire by chance about 7% of
    // the time, so the store is checked with one goodness-of-fit test
    let (prior, counts) = target_counts(&market(), 0.05, n);
    assert_eq!(prior.len(), 25);
    let chi2: f64 = prior
        .iter()
        .zip(&counts)
        .map(|(p, &k)| (k as f64 - n as f64 * p).powi(2) / (n as f64 * p))
        .sum();
    // 0.999 quantile of chi-square with 24 degrees of freedom
    assert!(chi2 < 51.1786, "chi2 = {chi2}");
}

#[test]
fn random_speaker_succeeds_a_third_of_the_time() {
    let game = l3();
    let c = build_community(&game, &CommunityConfig::deterministic(), 0).unwrap();
    let data = collect(&c, 100, 0).unwrap();
    let broca = fit_broca(&data.observed(), &game, 0.0).unwrap();
    let n = 3000;
    let r = eval_speaker(&broca, &c, n, 11).unwrap();
    let p = 1.0 / 3.0;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((r.baselines.random.success_rate - p).abs() <= 3.0 * sigma, "{r:?}");
    assert!(r.baselines.oracle.success_rate >= r.baselines.random.success_rate);
}

#[test]
fn full_coverage_broca_equals_the_oracle() {
    for game in [l3(), market()] {
        let cfg = CommunityConfig { codebook_k: Some(30), ..CommunityConfig::deterministic() };
        let c = build_community(&game, &cfg, 2).unwrap();
        let data = collect(&c, 3000, 2).unwrap();
        let broca = fit_broca(&data.observed(), &game, 0.0).unwrap();
        let (r, transcript) = eval_speaker_with_transcript(&broca, &c, 500, 3).unwrap();
        assert_eq!(r.success_rate, r.baselines.oracle.success_rate);
        assert_eq!(r.mean_return, r.baselines.oracle.mean_return);
        assert!(transcript.iter().all(|e| e.model == e.oracle));
    }
}

#[test]
fn arms_share_episode_streams() {
    let game = l3();
    let c = build_community(&game, &CommunityConfig { epsilon: 0.5, ..CommunityConfig::default() }, 4).unwrap();
    let data = collect(&c, 200, 4).unwrap();
    let broca = fit_broca(&data.observed(), &game, 0.0).unwrap();
    let (r1, t1) = eval_speaker_with_transcript(&broca, &c, 300, 8).unwrap();
    let (r2, t2) = eval_speaker_with_transcript(&broca, &c, 300, 8).unwrap();
    assert_eq!((r1, &t1), (r2, &t2));
    // same message, same rollout stream: same trajectory even under noise
    let mut shared = 0;
    for e in &t1 {
        for (x, y) in [(&e.model, &e.oracle), (&e.model, &e.random), (&e.oracle, &e.random)] {
            if x.message == y.message {
                shared += 1;
                assert_eq!(x.trajectory, y.trajectory);
            }
        }
    }
    assert!(shared > 100);

    let w = fit_wernicke(&data.observed(), &game, &MapConfig::literal(2.0), None).unwrap();
    let (l1, lt) = eval_listener_with_transcript(&w, &c, 300, 8).unwrap();
    assert_eq!(l1, eval_listener(&w, &c, 300, 8).unwrap());
    // the listener evaluation replays exactly the episodes collect would generate
    let replayed = collect(&c, 300, 8).unwrap();
    for (e, r) in lt.iter().zip(&replayed.records) {
        assert_eq!(e.observed, r.trajectory.key());
        assert_eq!(&e.target, r.hidden_target.as_ref().unwrap().key());
        assert_eq!(e.message, r.message);
    }
}

#[test]
fn listener_report_is_bounded() {
    let game = market();
    let cfg = CommunityConfig { epsilon: 0.3, temp_msg: Temperature::Finite(0.5), codebook_k: Some(10), ..CommunityConfig::default() };
    let c = build_community(&game, &cfg, 1).unwrap();
    let data = collect(&c, 500, 1).unwrap();
    let w = fit_wernicke(&data.observed(), &game, &MapConfig::literal(1.0), None).unwrap();
    let r = eval_listener(&w, &c, 400, 2).unwrap();
    for x in [r.recovery_rate, r.mean_distance, r.literal_baseline.recovery_rate, r.literal_baseline.mean_distance] {
        assert!((0.0..=1.0).contains(&x));
    }
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["n"], 400);
    assert!(json["literal_baseline"]["recovery_rate"].is_number());
    assert_eq!(r.to_csv().lines().next().unwrap(), LISTENER_CSV_HEADER.join(","));
}
