mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, Settings};
use nludiag::cues::ClozeVariant;
use nludiag::{CorruptionSetting, Split, Task, WordClass};

#[derive(Parser, Debug)]
#[command(name = "nludiag", version, about = "Word-class corruption diagnostics for NLU datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write word-class-stripped copies of dataset splits.
    Corrupt(CorruptArgs),
    /// Train and score the corruption matrix, appending to the results store.
    Run(RunArgs),
    /// Masked-word prediction accuracy on original and corrupted sentences.
    Probe(ProbeArgs),
    /// Paraphrase or sentiment cue retention among correct predictions.
    Analyze(AnalyzeArgs),
    /// Baseline tables, delta tables and heatmaps from the results store.
    Report(ReportArgs),
    /// Generate a seeded synthetic SST-2 dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML file with default values for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding `<task>/` and `<task>-<class>/` splits.
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Averaged-perceptron weights (JSON); the bundled rule tagger otherwise.
    #[arg(long)]
    tagger: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    /// `bow`, or `cmd:<program and arguments>` for a subprocess backend.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<u32>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args, Debug)]
struct CorruptArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    task: Vec<Task>,
    #[arg(long, value_delimiter = ',')]
    word_class: Vec<WordClass>,
    /// Defaults to the training split and the task's evaluation split.
    #[arg(long, value_delimiter = ',')]
    split: Vec<Split>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: TrainFlags,
    /// Tasks to run; all eight when omitted.
    #[arg(long, value_delimiter = ',')]
    task: Vec<Task>,
    /// Classes to remove; all eight when omitted.
    #[arg(long, value_delimiter = ',')]
    word_class: Vec<WordClass>,
    /// Settings to run; all three when omitted.
    #[arg(long, value_delimiter = ',')]
    setting: Vec<CorruptionSetting>,
    /// Skip the uncorrupted baseline runs.
    #[arg(long)]
    no_baseline: bool,
    /// Results store (JSONL).
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Original,
    Corrupted,
    Both,
}

impl VariantArg {
    fn variants(self) -> Vec<ClozeVariant> {
        match self {
            VariantArg::Original => vec![ClozeVariant::Original],
            VariantArg::Corrupted => vec![ClozeVariant::Corrupted],
            VariantArg::Both => vec![ClozeVariant::Original, ClozeVariant::Corrupted],
        }
    }
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    /// Defaults to mrpc.
    #[arg(long)]
    task: Option<Task>,
    /// Defaults to noun.
    #[arg(long)]
    word_class: Option<WordClass>,
    /// Split whose sentences are probed; defaults to the evaluation split.
    #[arg(long)]
    split: Option<Split>,
    /// `bigram` (trained on the training split) or `cmd:<program and arguments>`.
    #[arg(long)]
    predictor: Option<String>,
    #[arg(long)]
    mask_token: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    variant: VariantArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Analysis {
    Paraphrase,
    Sentiment,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    analysis: Analysis,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: TrainFlags,
    /// Defaults to mrpc for paraphrase and sst-2 for sentiment.
    #[arg(long)]
    task: Option<Task>,
    /// Defaults to noun.
    #[arg(long)]
    word_class: Option<WordClass>,
    /// Defaults to corrupt-test.
    #[arg(long)]
    setting: Option<CorruptionSetting>,
    /// Paraphrase pairs (`a TAB b` or PPDB) or polarity lexicon (`word TAB polarity`).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Count a word shared verbatim by both sentences as a paraphrase.
    #[arg(long)]
    identity_matches: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Baseline,
    Delta,
    Heatmap,
    All,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "all")]
    kind: ReportKind,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Heatmap settings; all with results when omitted.
    #[arg(long, value_delimiter = ',')]
    setting: Vec<CorruptionSetting>,
    /// Delta-table classes; all with results when omitted.
    #[arg(long, value_delimiter = ',')]
    word_class: Vec<WordClass>,
    /// Only rows from this backend.
    #[arg(long)]
    backend: Option<String>,
    /// Only rows with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Pin the heatmap colour range to [-bound, bound].
    #[arg(long)]
    scale_bound: Option<f64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    data_root: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    train_size: usize,
    #[arg(long, default_value_t = 872)]
    dev_size: usize,
    #[arg(long, default_value_t = 13)]
    seed: u64,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            data_root: self.data_root.clone(),
            out: self.out.clone(),
            tagger: self.tagger.clone(),
            ..Settings::default()
        }
    }
}

impl TrainFlags {
    fn apply(&self, s: &mut Settings) {
        s.backend = self.backend.clone();
        s.seed = self.seed;
        s.epochs = self.epochs;
        s.batch_size = self.batch_size;
        s.learning_rate = self.learning_rate;
    }
}

/// Settings from `--config` (if any) overridden by `flags`.
fn resolve(common: &Common, flags: Settings) -> Result<Settings, commands::Failure> {
    let file = match &common.config {
        Some(p) => Settings::load(p).map_err(commands::Failure::usage)?,
        None => Settings::default(),
    };
    Ok(file.merged(flags))
}

fn dispatch(command: Command) -> Result<(), commands::Failure> {
    match command {
        Command::Corrupt(a) => {
            let flags = Settings { task: a.task, word_class: a.word_class, split: a.split, ..a.common.settings() };
            commands::corrupt(resolve(&a.common, flags)?)
        }
        Command::Run(a) => {
            let mut flags = Settings {
                task: a.task,
                word_class: a.word_class,
                setting: a.setting,
                store: a.store,
                baseline: a.no_baseline.then_some(false),
                ..a.common.settings()
            };
            a.train.apply(&mut flags);
            commands::run(resolve(&a.common, flags)?)
        }
        Command::Probe(a) => {
            let flags = Settings {
                task: a.task.into_iter().collect(),
                word_class: a.word_class.into_iter().collect(),
                split: a.split.into_iter().collect(),
                predictor: a.predictor,
                mask_token: a.mask_token,
                ..a.common.settings()
            };
            commands::probe(resolve(&a.common, flags)?, &a.variant.variants())
        }
        Command::Analyze(a) => {
            let mut flags = Settings {
                task: a.task.into_iter().collect(),
                word_class: a.word_class.into_iter().collect(),
                setting: a.setting.into_iter().collect(),
                lexicon: a.lexicon,
                identity_matches: a.identity_matches.then_some(true),
                ..a.common.settings()
            };
            a.train.apply(&mut flags);
            let s = resolve(&a.common, flags)?;
            match a.analysis {
                Analysis::Paraphrase => commands::analyze_paraphrase(s),
                Analysis::Sentiment => commands::analyze_sentiment(s),
            }
        }
        Command::Report(a) => {
            let flags = Settings {
                format: a.format,
                store: a.store,
                setting: a.setting,
                word_class: a.word_class,
                backend: a.backend,
                seed: a.seed,
                scale_bound: a.scale_bound,
                ..a.common.settings()
            };
            let kinds = match a.kind {
                ReportKind::All => vec![ReportKind::Baseline, ReportKind::Delta, ReportKind::Heatmap],
                k => vec![k],
            };
            let s = resolve(&a.common, flags)?;
            commands::report(
                s,
                kinds.contains(&ReportKind::Baseline),
                kinds.contains(&ReportKind::Delta),
                kinds.contains(&ReportKind::Heatmap),
            )
        }
        Command::Synth(a) => {
            let s = Settings { data_root: a.data_root, ..Settings::default() };
            commands::synth(&s.data_root(), a.train_size, a.dev_size, a.seed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(commands::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
