//! Command-line front end. Every subcommand returns `anyhow::Result`;
//! `main` maps errors to exit code 1 (clap uses 2 for usage errors).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use supportsim_core::analysis::{
    corpus_statistics, distinct_n_corpus, scenario_dialogue_similarity, similarity_by_group, strategy_distribution,
    strategy_transition, unique_strategy_histogram, Grouping,
};
use supportsim_core::counselor::TransitionModel;
use supportsim_core::dialogue::merge_consecutive;
use supportsim_core::engine::Engine;
use supportsim_core::eval::{run_eval, CannedModel, ChatModel, EchoModel, EvalMode, ModelAdapter};
use supportsim_core::metrics::fleiss_kappa;
use supportsim_core::postprocess::{FilterPolicy, PostProcessor};
use supportsim_core::supporter::supporter_turn;
use supportsim_core::text::{DefaultTokenizer, Tokenizer};
use supportsim_core::{Dialogue, Utterance};

use crate::config::Config;
use crate::esconv::load_esconv;
use crate::gateway::build_backend;
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "supportsim", version, about = "Role-played emotional-support dialogues: generate, filter, analyze, evaluate, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a batch of dialogues from a config.
    Generate(GenerateArgs),
    /// Trim farewells and drop unusable dialogues.
    Postprocess(PostprocessArgs),
    /// Corpus statistics, similarity and strategy reports.
    Analyze(AnalyzeArgs),
    /// Score a response model against a labeled test corpus.
    Eval(EvalArgs),
    /// Fit the counselor transition model on a labeled corpus.
    FitCounselor(FitArgs),
    /// Run the rating session service.
    Serve(ServeArgs),
    /// Talk to the configured supporter on stdin.
    Chat(ChatArgs),
    /// Convert ESConv.json into dialogue records.
    ConvertEsconv(ConvertArgs),
    /// Fleiss' kappa over an item_id,rater_id,label CSV.
    Kappa(KappaArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Overrides `engine.rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the grown pools.
    #[arg(long)]
    pub pools_out: Option<PathBuf>,
    /// Batch report JSON; printed to stderr when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// One JSON line per dropped dialogue.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Takes policy, farewell lexicon and role patterns from here.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub report_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    GeneratedContext,
    ReferenceContext,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::GeneratedContext => EvalMode::GeneratedContext,
            ModeArg::ReferenceContext => EvalMode::ReferenceContext,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `echo`, `gold`, `canned:<replies.jsonl>`, or a model name from
    /// `[service.models]` (needs --config; `default` is the supporter backend).
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value = "reference-context")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-position records as JSONL.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Additive smoothing on transition counts.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `service.port`.
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    #[arg(long)]
    pub ratings: PathBuf,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Postprocess(a) => postprocess(a),
        Command::Analyze(a) => analyze(a),
        Command::Eval(a) => eval(a),
        Command::FitCounselor(a) => fit_counselor(a),
        Command::Serve(a) => serve(a),
        Command::Chat(a) => chat(a),
        Command::ConvertEsconv(a) => convert_esconv(a),
        Command::Kappa(a) => kappa(a),
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let mut config = Config::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.engine.rng_seed = seed;
    }
    let pools = config.pools()?;
    let backends = config.backends()?;
    let counselor = config.counselor(&pools, config.engine.counselor_mode)?;
    let mut engine = Engine::new(config.engine.clone(), counselor, backends.roles());
    engine.settings = config.role_settings()?;
    engine.post = config.post_processor()?;
    engine.taxonomy = config.taxonomy()?;

    let out = engine.run_batch(a.n, pools)?;
    io::save_corpus(&a.out, &out.corpus)?;
    if let Some(p) = &a.pools_out {
        io::save_pools(p, &out.pools)?;
    }
    match &a.report {
        Some(p) => io::write_json(p, &out.report)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&out.report)?),
    }
    log::info!(
        "generated {}: {} accepted, {} rejected, {} aborted",
        out.report.requested,
        out.report.accepted,
        out.report.rejected,
        out.report.aborted
    );
    Ok(())
}

fn postprocess(a: PostprocessArgs) -> anyhow::Result<()> {
    let post = match &a.config {
        Some(p) => Config::load(p)?.post_processor()?,
        None => PostProcessor::new(FilterPolicy::default()),
    };
    let corpus = io::load_corpus(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let outcome = post.filter_corpus(&corpus);
    io::save_corpus(&a.out, &outcome.kept)?;
    if let Some(p) = &a.report {
        io::write_drop_report(p, &outcome.dropped)?;
    }
    eprintln!("kept {} of {}, dropped {}", outcome.kept.len(), corpus.len(), outcome.dropped.len());
    Ok(())
}

/// Runs one report; failures become a warning and a null entry.
fn attempt<T: serde::Serialize>(what: &str, warnings: &mut Vec<String>, r: supportsim_core::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("reports serialize"),
        Err(e) => {
            log::warn!("{what}: {e}");
            warnings.push(format!("{what}: {e}"));
            Value::Null
        }
    }
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let corpus: Vec<Dialogue> = io::load_corpus(&a.input)?.iter().map(merge_consecutive).collect();
    if corpus.is_empty() {
        bail!("{} holds no dialogues", a.input.display());
    }
    let tok = DefaultTokenizer;
    let dir = &a.report_dir;
    let mut warnings = Vec::new();

    let stats = corpus_statistics(&corpus, &tok)?;
    io::write_json(&dir.join("stats.json"), &stats)?;
    let mut csv = String::from("section,row,value\n");
    for (section, row, value) in stats.rows() {
        csv.push_str(&format!("{section},{row},{value}\n"));
    }
    io::write_text(&dir.join("stats.csv"), &csv)?;

    let global = similarity_by_group(&corpus, Grouping::Global, &tok);
    if let Ok(groups) = &global {
        if let Some(g) = groups.first() {
            let mut hist = String::from("low,high,count\n");
            for b in &g.summary.histogram {
                hist.push_str(&format!("{},{},{}\n", b.low, b.high, b.count));
            }
            io::write_text(&dir.join("similarity_histogram.csv"), &hist)?;
        }
    }
    let similarity = json!({
        "global": attempt("global similarity", &mut warnings, global),
        "by_problem_type": attempt("problem-type similarity", &mut warnings, similarity_by_group(&corpus, Grouping::ByProblemType, &tok)),
        "by_strategy": attempt("strategy similarity", &mut warnings, similarity_by_group(&corpus, Grouping::ByStrategy, &tok)),
        "scenario_dialogue": attempt("scenario-dialogue similarity", &mut warnings, scenario_dialogue_similarity(&corpus, &tok)),
    });
    io::write_json(&dir.join("similarity.json"), &similarity)?;

    let docs: Vec<Vec<String>> = corpus.iter().map(|d| tok.tokenize(&d.plain_text())).collect();
    let distinct = json!({
        "distinct2": attempt("distinct-2", &mut warnings, distinct_n_corpus(&docs, 2)),
        "distinct3": attempt("distinct-3", &mut warnings, distinct_n_corpus(&docs, 3)),
    });
    io::write_json(&dir.join("distinct.json"), &distinct)?;

    match strategy_distribution(&corpus) {
        Ok(dist) => {
            let mut csv = String::from("strategy,share\n");
            for (label, share) in dist {
                csv.push_str(&format!("{label},{share}\n"));
            }
            io::write_text(&dir.join("strategy_distribution.csv"), &csv)?;
        }
        Err(e) => warnings.push(format!("strategy distribution: {e}")),
    }
    match strategy_transition(&corpus) {
        Ok(t) => io::write_text(&dir.join("strategy_transition.csv"), &t.to_csv())?,
        Err(e) => warnings.push(format!("strategy transition: {e}")),
    }
    let mut csv = String::from("unique_strategies,dialogues\n");
    for (k, n) in unique_strategy_histogram(&corpus) {
        csv.push_str(&format!("{k},{n}\n"));
    }
    io::write_text(&dir.join("unique_strategies.csv"), &csv)?;

    if !warnings.is_empty() {
        io::write_json(&dir.join("warnings.json"), &warnings)?;
    }
    eprintln!("wrote reports for {} dialogues to {}", corpus.len(), dir.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CannedReply {
    dialogue_id: String,
    position: usize,
    reply: String,
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let corpus = io::load_corpus(&a.test)?;
    let tok = DefaultTokenizer;
    let mode = EvalMode::from(a.mode);
    let run = match a.model.as_str() {
        "echo" => run_eval(&EchoModel, &corpus, mode, &tok)?,
        "gold" => run_eval(&CannedModel::gold(&corpus), &corpus, mode, &tok)?,
        spec if spec.starts_with("canned:") => {
            let mut model = CannedModel::new();
            for r in io::read_jsonl::<CannedReply>(Path::new(&spec["canned:".len()..]))? {
                model.insert(r.dialogue_id, r.position, r.reply);
            }
            run_eval(&model, &corpus, mode, &tok)?
        }
        name => {
            let path = a.config.as_ref().with_context(|| format!("model {name:?} needs --config"))?;
            let config = Config::load(path)?;
            let backend = match config.service.models.get(name) {
                Some(m) => build_backend(&m.backend, &config.base_dir)?,
                None if name == "default" => config.backends()?.supporter,
                None => bail!("unknown model {name:?}"),
            };
            let model = ChatModel { backend: &*backend, settings: config.role_settings()? };
            run_eval(&model as &dyn ModelAdapter, &corpus, mode, &tok)?
        }
    };
    io::write_json(&a.out, &run.report)?;
    if let Some(p) = &a.records {
        io::write_jsonl(p, &run.records)?;
    }
    for w in &run.report.warnings {
        log::warn!("{w}");
    }
    eprintln!("{}", serde_json::to_string_pretty(&run.report)?);
    Ok(())
}

fn fit_counselor(a: FitArgs) -> anyhow::Result<()> {
    let corpus = io::load_corpus(&a.input)?;
    let model = TransitionModel::fit_smoothed(&corpus, a.smoothing)?;
    io::write_json(&a.out, &model)?;
    Ok(())
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let config = Config::load(&a.config)?;
    let port = a.port.unwrap_or(config.service.port);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(crate::service::serve(&config, port))
}

fn chat(a: ChatArgs) -> anyhow::Result<()> {
    let config = Config::load(&a.config)?;
    let pools = config.pools()?;
    let backends = config.backends()?;
    let counselor = config.counselor(&pools, config.engine.counselor_mode)?;
    let settings = config.role_settings()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.engine.rng_seed);
    let exemplar = pools.scenario_pool().first().map(|s| s.dialogue.clone()).context("empty scenario pool")?;

    let mut history: Vec<Utterance> = Vec::new();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    write!(out, "you> ")?;
    out.flush()?;
    for line in stdin.lock().lines() {
        let line = line?;
        let text = line.trim();
        if text == "/quit" {
            break;
        }
        if !text.is_empty() {
            history.push(Utterance::seeker(text));
            let decision = counselor.select(&history, &*backends.counselor, &settings, &mut rng)?;
            match supporter_turn(decision.strategy, &history, &exemplar, &*backends.supporter, &settings) {
                Ok(reply) => {
                    writeln!(out, "[{}] {}", decision.strategy, reply.text)?;
                    history.push(reply);
                }
                Err(e) => {
                    history.pop();
                    writeln!(out, "(error: {e})")?;
                }
            }
        }
        write!(out, "you> ")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}

fn convert_esconv(a: ConvertArgs) -> anyhow::Result<()> {
    let corpus = load_esconv(&a.input, &supportsim_core::Taxonomy::builtin())?;
    io::save_corpus(&a.out, &corpus)?;
    eprintln!("converted {} dialogues", corpus.len());
    Ok(())
}

fn kappa(a: KappaArgs) -> anyhow::Result<()> {
    let items = io::load_ratings(&a.ratings)?;
    let matrix: Vec<Vec<String>> = items.into_iter().map(|(_, labels)| labels).collect();
    let k = fleiss_kappa(&matrix)?;
    println!("{}", json!({"kappa": k.kappa, "degenerate": k.degenerate, "items": matrix.len()}));
    Ok(())
}
