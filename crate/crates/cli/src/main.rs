//! `cla`: generate communities and interaction data, fit the observer's
//! signalling and listening models, and score them.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use cla_core::community::{build_community, Community};
use cla_core::dataset::{collect, InteractionDataset};
use cla_core::envcore::{ActionId, TrajectorySpace};
use cla_core::eval::{eval_listener, eval_speaker};
use cla_core::inference::{
    fit_broca, fit_wernicke, BrocaModel, EmpiricalListener, ListenerModel, MapVariant, WernickeModel,
};
use cla_core::oracle::oracle_check;
use cla_core::semantics::{positive_listening_test, positive_signalling_test, DetectorReport};
use serde::Serialize;

use config::{ConfigError, ExperimentConfig};

const COMMUNITY_FILE: &str = "community.json";
const DATASET_FILE: &str = "dataset.jsonl";
const BROCA_FILE: &str = "broca.json";
const WERNICKE_FILE: &str = "wernicke.json";
const REPORT_JSON: &str = "report.json";
const REPORT_CSV: &str = "report.csv";

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (unknown subcommand or flag)
  3  config missing, unreadable or invalid
  4  I/O error reading or writing an artifact
  5  artifact rejected (parse error, format version, game fingerprint, community mismatch)
  6  invalid parameters or other model error
  7  oracle-check found mismatches

Artifacts are written under --out (default: run.out from the config) with
fixed names: community.json, dataset.jsonl, broca.json, wernicke.json,
report.json, report.csv. Commands that need a community load community.json
from the output directory when present and otherwise build it from the
config.";

#[derive(Debug, Parser)]
#[command(name = "cla", version, about = "Observer training and evaluation for referential games", after_help = EXIT_HELP)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true, env = "CLA_CONFIG")]
    config: Option<PathBuf>,

    /// Seed override: the community seed for gen-community, the master seed
    /// for collect, the evaluation seed for eval-*, the case seed for oracle-check.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Episode count override (collect, eval-*) or case count (oracle-check).
    #[arg(long, global = true)]
    n: Option<usize>,

    /// MAP alpha override for fit-wernicke.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Leave the creation timestamp out of generated artifacts so reruns
    /// are byte-identical.
    #[arg(long, global = true)]
    canonical: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the speaker/listener community and write community.json.
    GenCommunity,
    /// Play episodes with the community and write dataset.jsonl.
    Collect,
    /// Fit the signalling model on dataset.jsonl and write broca.json.
    FitBroca,
    /// Fit the listening model on dataset.jsonl and write wernicke.json.
    FitWernicke,
    /// Run the positive listening and signalling tests; writes report.json/csv.
    Detect,
    /// Score broca.json as a speaker; writes report.json/csv.
    EvalSpeaker,
    /// Score wernicke.json as a listener; writes report.json/csv.
    EvalListener,
    /// Compare the MAP estimator with brute-force scoring; writes report.json.
    OracleCheck,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Core(cla_core::Error),
    Io(PathBuf, std::io::Error),
    Oracle(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        use cla_core::Error as E;
        match self {
            Failure::Config(_) => 3,
            Failure::Io(..) | Failure::Core(E::Io(_)) => 4,
            Failure::Core(
                E::Parse { .. }
                | E::Json(_)
                | E::Csv(_)
                | E::Fingerprint { .. }
                | E::FormatVersion { .. }
                | E::CommunityMismatch
                | E::ForeignRecord { .. }
                | E::MissingHiddenTarget { .. },
            ) => 5,
            Failure::Core(_) => 6,
            Failure::Oracle(_) => 7,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
            Failure::Oracle(n) => write!(f, "{n} oracle mismatches"),
        }
    }
}

impl From<cla_core::Error> for Failure {
    fn from(e: cla_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<String, Failure>;

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    cli: Cli,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn read(&self, name: &str) -> Result<String, Failure> {
        let p = self.path(name);
        fs::read_to_string(&p).map_err(|e| Failure::Io(p, e))
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Io(self.out.clone(), e))?;
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| Failure::Io(p, e))
    }

    fn community(&self) -> Result<Community, Failure> {
        let p = self.path(COMMUNITY_FILE);
        if p.exists() {
            let c = Community::from_json(&self.read(COMMUNITY_FILE)?)?;
            if c.game().fingerprint() != self.cfg.game.fingerprint() {
                return Err(cla_core::Error::Fingerprint {
                    expected: self.cfg.game.fingerprint(),
                    found: c.game().fingerprint(),
                }
                .into());
            }
            Ok(c)
        } else {
            Ok(build_community(&self.cfg.game, &self.cfg.community, self.cfg.run.community_seed)?)
        }
    }

    fn dataset(&self) -> Result<InteractionDataset, Failure> {
        Ok(InteractionDataset::load_for_game(&self.path(DATASET_FILE), &self.cfg.game)?)
    }

    fn episodes(&self) -> usize {
        self.cli.n.unwrap_or(self.cfg.run.n_episodes)
    }
}

fn load(cli: Cli) -> Result<Ctx, Failure> {
    let path = cli.config.clone().ok_or(ConfigError::Missing)?;
    let cfg = ExperimentConfig::load(&path)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.run.out.clone());
    Ok(Ctx { cfg, out, cli })
}

fn gen_community(ctx: &Ctx) -> Outcome {
    let seed = ctx.cli.seed.unwrap_or(ctx.cfg.run.community_seed);
    let c = build_community(&ctx.cfg.game, &ctx.cfg.community, seed)?;
    ctx.write(COMMUNITY_FILE, &c.to_json())?;
    Ok(format!(
        "community seed={seed} speakers={} listeners={} codebook={} -> {}",
        c.speakers().len(),
        c.listeners().len(),
        c.codebook().len(),
        ctx.path(COMMUNITY_FILE).display()
    ))
}

fn run_collect(ctx: &Ctx) -> Outcome {
    let seed = ctx.cli.seed.unwrap_or(ctx.cfg.run.collect_seed);
    let mut data = collect(&ctx.community()?, ctx.episodes(), seed)?;
    if !ctx.cli.canonical {
        data.meta.created_unix = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    ctx.write(DATASET_FILE, &data.to_jsonl())?;
    Ok(format!("collected {} episodes seed={seed} -> {}", data.len(), ctx.path(DATASET_FILE).display()))
}

fn run_fit_broca(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let model = fit_broca(&data.observed(), &ctx.cfg.game, ctx.cfg.inference.smoothing)?;
    ctx.write(BROCA_FILE, &model.to_json())?;
    Ok(format!(
        "broca fitted on {} records, {} trajectories, training loss {} -> {}",
        data.len(),
        model.table().len(),
        model.training_loss(&data.observed()),
        ctx.path(BROCA_FILE).display()
    ))
}

fn run_fit_wernicke(ctx: &Ctx) -> Outcome {
    let data = ctx.dataset()?;
    let mut map = ctx.cfg.inference.map_config();
    if let Some(a) = ctx.cli.alpha {
        map.alpha = a;
    }
    let observed = data.observed();
    let empirical;
    let listener: Option<&dyn ListenerModel> = match map.variant {
        MapVariant::Literal => None,
        MapVariant::Expected => {
            empirical = EmpiricalListener::fit(&observed, TrajectorySpace::new(&ctx.cfg.game)?)?;
            Some(&empirical)
        }
    };
    let model = fit_wernicke(&observed, &ctx.cfg.game, &map, listener)?
        .with_backoff_threshold(ctx.cfg.inference.backoff_threshold)?;
    ctx.write(WERNICKE_FILE, &model.to_json())?;
    Ok(format!(
        "wernicke fitted on {} records, alpha={} variant={:?}, {} messages -> {}",
        data.len(),
        map.alpha,
        map.variant,
        model.table().len(),
        ctx.path(WERNICKE_FILE).display()
    ))
}

#[derive(Serialize)]
struct DetectReport {
    listening: DetectorReport,
    signalling: DetectorReport,
}

fn run_detect(ctx: &Ctx) -> Outcome {
    let community = ctx.community()?;
    let data = ctx.dataset()?;
    let mut contexts: Vec<Vec<ActionId>> = vec![Vec::new()];
    for r in &data.records {
        let actions = r.trajectory.actions();
        for k in 1..actions.len() {
            contexts.push(actions[..k].to_vec());
        }
    }
    contexts.sort();
    contexts.dedup();
    let cfg = &community.config().distances;
    let listening = positive_listening_test(
        community.reference_listener(),
        community.game(),
        &contexts,
        community.semantics().speaker_messages(),
        cfg,
    )?;
    let signalling = positive_signalling_test(&data.signalling_episodes()?, cfg)?;
    let report = DetectReport { listening, signalling };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let csv = format!(
        "kind,listening_detected,listening_statistic,signalling_detected,signalling_statistic,signalling_p_value\n\
         detect,{},{},{},{},{}\n",
        report.listening.detected,
        report.listening.statistic,
        report.signalling.detected,
        report.signalling.statistic,
        report.signalling.p_value.expect("signalling test reports a p-value"),
    );
    ctx.write(REPORT_JSON, &json)?;
    ctx.write(REPORT_CSV, &csv)?;
    Ok(format!(
        "listening detected={} statistic={}; signalling detected={} statistic={} p={}",
        report.listening.detected,
        report.listening.statistic,
        report.signalling.detected,
        report.signalling.statistic,
        report.signalling.p_value.unwrap_or(f64::NAN)
    ))
}

fn run_eval_speaker(ctx: &Ctx) -> Outcome {
    let community = ctx.community()?;
    let model = BrocaModel::from_json(&ctx.read(BROCA_FILE)?, &ctx.cfg.game)?;
    let seed = ctx.cli.seed.unwrap_or(ctx.cfg.run.eval_seed);
    let r = eval_speaker(&model, &community, ctx.episodes(), seed)?;
    ctx.write(REPORT_JSON, &r.to_json())?;
    ctx.write(REPORT_CSV, &r.to_csv())?;
    Ok(format!(
        "speaker n={} success_rate={} (oracle {}, random {}) mean_return={}",
        r.n, r.success_rate, r.baselines.oracle.success_rate, r.baselines.random.success_rate, r.mean_return
    ))
}

fn run_eval_listener(ctx: &Ctx) -> Outcome {
    let community = ctx.community()?;
    let model = WernickeModel::from_json(&ctx.read(WERNICKE_FILE)?, &ctx.cfg.game)?;
    let seed = ctx.cli.seed.unwrap_or(ctx.cfg.run.eval_seed);
    let r = eval_listener(&model, &community, ctx.episodes(), seed)?;
    ctx.write(REPORT_JSON, &r.to_json())?;
    ctx.write(REPORT_CSV, &r.to_csv())?;
    Ok(format!(
        "listener n={} recovery_rate={} (literal {}) mean_distance={}",
        r.n, r.recovery_rate, r.literal_baseline.recovery_rate, r.mean_distance
    ))
}

fn run_oracle_check(ctx: &Ctx) -> Outcome {
    let cases = ctx.cli.n.unwrap_or(ctx.cfg.run.oracle_cases);
    let summary = oracle_check(cases, ctx.cli.seed.unwrap_or(0))?;
    ctx.write(REPORT_JSON, &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    for f in &summary.failures {
        eprintln!("mismatch: {f}");
    }
    let line = format!("oracle-check passed={} failed={}", summary.passed, summary.failed());
    if summary.failed() > 0 {
        println!("{line}");
        return Err(Failure::Oracle(summary.failed()));
    }
    Ok(line)
}

fn dispatch(ctx: &Ctx) -> Outcome {
    match ctx.cli.command {
        Command::GenCommunity => gen_community(ctx),
        Command::Collect => run_collect(ctx),
        Command::FitBroca => run_fit_broca(ctx),
        Command::FitWernicke => run_fit_wernicke(ctx),
        Command::Detect => run_detect(ctx),
        Command::EvalSpeaker => run_eval_speaker(ctx),
        Command::EvalListener => run_eval_listener(ctx),
        Command::OracleCheck => run_oracle_check(ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match load(cli).and_then(|ctx| dispatch(&ctx)) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
