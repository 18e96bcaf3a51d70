use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use nludiag::annotation::PerceptronTagger;
use nludiag::corruption::{corrupt_split, enumerate_configs};
use nludiag::cues::{
    masked_prediction_accuracy, paraphrase_retention, sentiment_retention, AnalysisReport, BigramPredictor,
    ClozeVariant, CommandPredictor, CueError, MaskedPredictor, ParaphraseLexicon, Polarity, SentimentLexicon,
};
use nludiag::dataset::{find_split_file, load_split, save_split, split_dir, DatasetSplit, LabelKind};
use nludiag::harness::{load_results, BowBackend, CommandBackend, Harness, HarnessError, ResultsStore, StoredResult};
use nludiag::report::{baseline_table, delta_table, HeatmapMatrix, ReportError, ReportFilter};
use nludiag::synthetic::SyntheticSst2;
use nludiag::{
    CorruptionSetting, ExperimentConfig, Hyperparams, Record, RuleTagger, Split, Tagger, Task, TrainerBackend,
    WordClass,
};

use crate::config::{Format, Settings};

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const BACKEND: u8 = 3;

/// An error plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: USAGE, error: e.into() }
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: DATA, error: e.into() }
    }

    pub fn backend(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: BACKEND, error: e.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_backend_failure() {
            Failure::backend(e)
        } else {
            Failure::data(e)
        }
    }
}

impl From<CueError> for Failure {
    fn from(e: CueError) -> Self {
        match e {
            CueError::Predictor(_) => Failure::backend(e),
            _ => Failure::data(e),
        }
    }
}

trait OrData<T> {
    fn or_data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrData<T> for Result<T, E> {
    fn or_data(self) -> Result<T, Failure> {
        self.map_err(Failure::data)
    }
}

fn tagger(s: &Settings) -> Result<Box<dyn Tagger>, Failure> {
    Ok(match &s.tagger {
        Some(p) => Box::new(PerceptronTagger::load(p).or_data()?),
        None => Box::new(RuleTagger::bundled()),
    })
}

fn backend(s: &Settings) -> Result<Box<dyn TrainerBackend>, Failure> {
    let spec = s.backend.as_deref().unwrap_or(BowBackend::ID);
    if spec == BowBackend::ID {
        return Ok(Box::new(BowBackend::new()));
    }
    match spec.strip_prefix("cmd:") {
        Some(line) => Ok(Box::new(CommandBackend::from_command_line(line).map_err(Failure::usage)?)),
        None => Err(Failure::usage(anyhow!("unknown backend {spec:?}; expected `bow` or `cmd:<command>`"))),
    }
}

fn hyperparams(s: &Settings) -> Result<Hyperparams, Failure> {
    let d = Hyperparams::default();
    let hp = Hyperparams {
        epochs: s.epochs.unwrap_or(d.epochs),
        batch_size: s.batch_size.unwrap_or(d.batch_size),
        learning_rate: s.learning_rate.unwrap_or(d.learning_rate),
        seed: s.seed.unwrap_or(d.seed),
    };
    if hp.epochs == 0 || hp.batch_size == 0 || hp.learning_rate.is_nan() || hp.learning_rate <= 0.0 {
        return Err(Failure::usage(anyhow!("epochs, batch size and learning rate must be positive")));
    }
    Ok(hp)
}

fn load_original(root: &Path, task: Task, split: Split) -> Result<DatasetSplit, Failure> {
    let dir = split_dir(root, task, None);
    let path = find_split_file(&dir, split)
        .ok_or_else(|| Failure::data(anyhow!("no {split} split for {task} under {}", dir.display())))?;
    load_split(task, split, &path).or_data()
}

fn write_json(out: Option<&Path>, file: &str, value: &impl serde::Serialize, s: &Settings) -> Result<(), Failure> {
    let body = serde_json::to_string_pretty(value).or_data()?;
    println!("{body}");
    if let Some(dir) = out {
        s.echo_into(dir).or_data()?;
        fs::write(dir.join(file), body + "\n").or_data()?;
    }
    Ok(())
}

pub fn synth(root: &Path, train_size: usize, dev_size: usize, seed: u64) -> Result<(), Failure> {
    let gen = SyntheticSst2 { train_size, dev_size, seed, ..SyntheticSst2::default() };
    let (train, dev) = gen.write(root).or_data()?;
    let dir = split_dir(root, Task::Sst2, None);
    println!("wrote {} train and {} dev records to {}", train.count, dev.count, dir.display());
    Ok(())
}

pub fn corrupt(mut s: Settings) -> Result<(), Failure> {
    if s.task.is_empty() || s.word_class.is_empty() {
        return Err(Failure::usage(anyhow!("corrupt needs --task and --word-class")));
    }
    let tagger = tagger(&s)?;
    let root = s.data_root();
    let out = s.out.clone().unwrap_or_else(|| root.clone());
    s.data_root = Some(root.clone());
    s.out = Some(out.clone());
    for &task in &s.task {
        let splits = if s.split.is_empty() { vec![Split::Train, task.schema().eval_split] } else { s.split.clone() };
        for split in splits {
            let original = load_original(&root, task, split)?;
            for &class in &s.word_class {
                let corrupted = corrupt_split(&original, class, tagger.as_ref()).or_data()?;
                let dir = split_dir(&out, task, Some(class));
                let path = dir.join(format!("{split}.jsonl"));
                let manifest = save_split(&corrupted, &path).or_data()?;
                s.echo_into(&dir).or_data()?;
                println!("{} ({} records)", path.display(), manifest.count);
            }
        }
    }
    Ok(())
}

pub fn run(mut s: Settings) -> Result<(), Failure> {
    let tasks: BTreeSet<Task> = if s.task.is_empty() { Task::ALL.into() } else { s.task.iter().copied().collect() };
    let classes: BTreeSet<WordClass> =
        if s.word_class.is_empty() { WordClass::ALL.into() } else { s.word_class.iter().copied().collect() };
    let settings: BTreeSet<CorruptionSetting> =
        if s.setting.is_empty() { CorruptionSetting::ALL.into() } else { s.setting.iter().copied().collect() };
    let hp = hyperparams(&s)?;
    let backend = backend(&s)?;
    let tagger = tagger(&s)?;

    let mut configs: Vec<ExperimentConfig> = Vec::new();
    if s.baseline != Some(false) {
        configs.extend(tasks.iter().map(|&t| ExperimentConfig::baseline(t)));
    }
    configs.extend(enumerate_configs(&tasks, &classes, &settings).map_err(Failure::usage)?);
    let configs: Vec<ExperimentConfig> = configs.into_iter().map(|c| c.with_hyperparams(hp.clone())).collect();

    let root = s.data_root();
    let store_path = s.store();
    let store_dir = store_path.parent().map(Path::to_path_buf).unwrap_or_default();
    s.task = tasks.iter().copied().collect();
    s.word_class = classes.iter().copied().collect();
    s.setting = settings.iter().copied().collect();
    s.backend = Some(s.backend.clone().unwrap_or_else(|| BowBackend::ID.into()));
    s.seed = Some(hp.seed);
    s.epochs = Some(hp.epochs);
    s.batch_size = Some(hp.batch_size);
    s.learning_rate = Some(hp.learning_rate);
    s.data_root = Some(root.clone());
    s.store = Some(store_path.clone());
    s.echo_into(&store_dir).or_data()?;

    let store = ResultsStore::open(&store_path).or_data()?;
    let harness = Harness::new(&root, backend.as_ref(), tagger.as_ref()).with_work_root(store_dir.join("runs"));
    let outcome = harness.run_matrix(&configs, &store)?;

    for r in &outcome.results {
        let delta = r.delta.map(|d| format!("{d:+.2}")).unwrap_or_else(|| "-".into());
        println!("{:<48} {:>8.2} {:>8}", r.config.run_id(&r.backend), r.score, delta);
    }
    println!(
        "executed {}, skipped {}, failed {} (store: {})",
        outcome.executed,
        outcome.skipped,
        outcome.failures.len(),
        store_path.display()
    );
    for (cfg, e) in &outcome.failures {
        eprintln!("failed {}: {e}", cfg.run_id(backend.id()));
    }
    match outcome.failures.iter().find(|(_, e)| e.is_backend_failure()).or(outcome.failures.first()) {
        None => Ok(()),
        Some((_, e)) => {
            let code = if e.is_backend_failure() { BACKEND } else { DATA };
            Err(Failure { code, error: anyhow!("{} of {} configs failed", outcome.failures.len(), outcome.executed) })
        }
    }
}

fn text_fields(record: &Record, fields: &[&str]) -> Vec<String> {
    fields.iter().filter_map(|f| record.text(f)).map(str::to_string).collect()
}

pub fn probe(mut s: Settings, variants: &[ClozeVariant]) -> Result<(), Failure> {
    let task = s.task.first().copied().unwrap_or(Task::Mrpc);
    let class = s.word_class.first().copied().unwrap_or(WordClass::Noun);
    let schema = task.schema();
    let split = s.split.first().copied().unwrap_or(schema.eval_split);
    let root = s.data_root();
    let tagger = tagger(&s)?;

    let eval = load_original(&root, task, split)?;
    let sentences: Vec<String> = eval.records.iter().flat_map(|r| text_fields(r, &schema.text_fields)).collect();

    let spec = s.predictor.clone().unwrap_or_else(|| "bigram".into());
    let predictor: Box<dyn MaskedPredictor> = if spec == "bigram" {
        let train = load_original(&root, task, Split::Train)?;
        let corpus: Vec<String> = train.records.iter().flat_map(|r| text_fields(r, &schema.text_fields)).collect();
        let p = BigramPredictor::train(&corpus);
        Box::new(match &s.mask_token {
            Some(m) => p.with_mask_token(m.clone()),
            None => p,
        })
    } else if let Some(line) = spec.strip_prefix("cmd:") {
        let p = CommandPredictor::from_command_line(line).map_err(Failure::usage)?;
        Box::new(match &s.mask_token {
            Some(m) => p.with_mask_token(m.clone()),
            None => p,
        })
    } else {
        return Err(Failure::usage(anyhow!("unknown predictor {spec:?}; expected `bigram` or `cmd:<command>`")));
    };

    let mut reports = Vec::new();
    for &v in variants {
        let f = masked_prediction_accuracy(&sentences, class, tagger.as_ref(), predictor.as_ref(), v)?;
        reports.push(AnalysisReport::new("masked-prediction", task, Some(class), Some(v), f));
    }
    s.task = vec![task];
    s.word_class = vec![class];
    s.split = vec![split];
    s.predictor = Some(spec);
    s.data_root = Some(root);
    let file = format!("probe-{task}-{class}.json");
    write_json(s.out.clone().as_deref(), &file, &reports, &s)
}

/// Evaluation records (as the model saw them) that the backend labels correctly.
fn correct_examples(
    s: &Settings,
    task: Task,
    class: WordClass,
    setting: CorruptionSetting,
) -> Result<Vec<Record>, Failure> {
    let schema = task.schema();
    if !schema.label_kind.is_classification() {
        return Err(Failure::usage(anyhow!("{task} is not a classification task")));
    }
    let hp = hyperparams(s)?;
    let backend = backend(s)?;
    let tagger = tagger(s)?;
    let harness = Harness::new(s.data_root(), backend.as_ref(), tagger.as_ref());
    let train = harness.split(task, Split::Train, setting.corrupts_train().then_some(class))?;
    let eval = harness.split(task, schema.eval_split, setting.corrupts_eval().then_some(class))?;
    let model = backend.fit(&train, &hp).map_err(Failure::backend)?;
    let preds = model.predict(&eval).map_err(Failure::backend)?;
    if preds.len() != eval.len() {
        return Err(Failure::backend(anyhow!("{} predictions for {} records", preds.len(), eval.len())));
    }
    Ok(eval
        .records
        .iter()
        .zip(eval.labels())
        .zip(preds)
        .filter(|((_, gold), p)| gold == p)
        .map(|((r, _), _)| r.clone())
        .collect())
}

fn analysis_axes(s: &mut Settings, default_task: Task) -> (Task, WordClass, CorruptionSetting) {
    let task = s.task.first().copied().unwrap_or(default_task);
    let class = s.word_class.first().copied().unwrap_or(WordClass::Noun);
    let setting = s.setting.first().copied().unwrap_or(CorruptionSetting::CorruptTest);
    s.task = vec![task];
    s.word_class = vec![class];
    s.setting = vec![setting];
    s.data_root = Some(s.data_root());
    (task, class, setting)
}

pub fn analyze_paraphrase(mut s: Settings) -> Result<(), Failure> {
    let (task, class, setting) = analysis_axes(&mut s, Task::Mrpc);
    let schema = task.schema();
    if schema.text_fields.len() != 2 {
        return Err(Failure::usage(anyhow!("paraphrase analysis needs a sentence-pair task, not {task}")));
    }
    let path = s.lexicon.clone().ok_or_else(|| Failure::usage(anyhow!("paraphrase analysis needs --lexicon")))?;
    let lexicon = ParaphraseLexicon::load(&path)?.with_identity_matches(s.identity_matches.unwrap_or(false));
    let correct = correct_examples(&s, task, class, setting)?;
    let pairs: Vec<(String, String)> = correct
        .iter()
        .map(|r| {
            let t = text_fields(r, &schema.text_fields);
            (t[0].clone(), t[1].clone())
        })
        .collect();
    let f = paraphrase_retention(&pairs, &lexicon)?;
    let report = AnalysisReport::new("paraphrase-retention", task, Some(class), None, f);
    write_json(s.out.clone().as_deref(), &format!("paraphrase-{task}-{class}.json"), &report, &s)
}

pub fn analyze_sentiment(mut s: Settings) -> Result<(), Failure> {
    let (task, class, setting) = analysis_axes(&mut s, Task::Sst2);
    let schema = task.schema();
    if task != Task::Sst2 || schema.label_kind != LabelKind::Binary {
        return Err(Failure::usage(anyhow!("sentiment analysis applies to sst-2 only")));
    }
    let owned;
    let lexicon: &SentimentLexicon = match &s.lexicon {
        Some(p) => {
            owned = SentimentLexicon::load(p)?;
            &owned
        }
        None => SentimentLexicon::bundled(),
    };
    let correct = correct_examples(&s, task, class, setting)?;
    let field = schema.text_fields[0];
    let examples: Vec<(String, Polarity)> = correct
        .iter()
        .filter_map(|r| {
            let polarity = Polarity::from_sst2_label(r.label(&schema)?)?;
            Some((r.text(field)?.to_string(), polarity))
        })
        .collect();
    let f = sentiment_retention(&examples, lexicon)?;
    let report = AnalysisReport::new("sentiment-retention", task, Some(class), None, f);
    write_json(s.out.clone().as_deref(), &format!("sentiment-{task}-{class}.json"), &report, &s)
}

/// Sends one rendered artefact to `out/<file>` or, without `--out`, to stdout.
fn emit(out: Option<&Path>, file: &str, body: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            let path = dir.join(file);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display())).or_data()?;
            println!("{}", path.display());
        }
        None => println!("{body}"),
    }
    Ok(())
}

fn report_failure(e: ReportError) -> Failure {
    Failure::data(e)
}

pub fn report(mut s: Settings, baselines: bool, deltas: bool, heatmaps: bool) -> Result<(), Failure> {
    let format = s.format.unwrap_or(Format::Text);
    let out: Option<PathBuf> = s.out.clone();
    if format == Format::Png && out.is_none() {
        return Err(Failure::usage(anyhow!("--format png needs --out")));
    }
    if format == Format::Png && !heatmaps {
        return Err(Failure::usage(anyhow!("only heatmaps render as png")));
    }
    let store = s.store();
    let results: Vec<StoredResult> = load_results(&store).or_data()?;
    if results.is_empty() {
        return Err(Failure::data(anyhow!("no results in {}", store.display())));
    }
    s.store = Some(store);
    s.format = Some(format);
    if let Some(dir) = &out {
        s.echo_into(dir).or_data()?;
    }
    let out = out.as_deref();
    let filter = ReportFilter { backend: s.backend.clone(), seed: s.seed };
    let ext = if format == Format::Text { "txt" } else { "csv" };

    if baselines && format != Format::Png {
        let table = baseline_table(&results, &filter).map_err(report_failure)?;
        let body = if format == Format::Text { table.render_text() } else { table.to_csv() };
        emit(out, &format!("baselines.{ext}"), &body)?;
    }

    if deltas && format != Format::Png {
        let explicit = !s.word_class.is_empty();
        let classes: BTreeSet<WordClass> = if explicit {
            s.word_class.iter().copied().collect()
        } else {
            results.iter().filter(|r| r.is_ok()).filter_map(|r| r.word_class).collect()
        };
        for class in classes {
            match delta_table(&results, class, &filter) {
                Ok(t) => {
                    let body = if format == Format::Text { t.render_text() } else { t.to_csv() };
                    emit(out, &format!("delta-{class}.{ext}"), &body)?;
                }
                Err(ReportError::NoResults(m)) if !explicit => log::info!("skipping {class}: {m}"),
                Err(e) => return Err(report_failure(e)),
            }
        }
    }

    if heatmaps {
        let explicit = !s.setting.is_empty();
        let settings = if explicit { s.setting.clone() } else { CorruptionSetting::ALL.to_vec() };
        let mut drawn = 0;
        for setting in settings {
            let m = match HeatmapMatrix::from_results(&results, setting, &filter) {
                Ok(m) => m,
                Err(ReportError::NoResults(msg)) if !explicit => {
                    log::info!("skipping {setting}: {msg}");
                    continue;
                }
                Err(e) => return Err(report_failure(e)),
            };
            drawn += 1;
            match format {
                Format::Text => emit(out, &format!("heatmap-{setting}.txt"), &m.render_text())?,
                Format::Csv => emit(out, &format!("heatmap-{setting}.csv"), &m.to_csv())?,
                Format::Png => {
                    let dir = out.expect("checked above");
                    emit(out, &format!("heatmap-{setting}.csv"), &m.to_csv())?;
                    let path = dir.join(format!("heatmap-{setting}.png"));
                    m.write_png(&path, s.scale_bound).map_err(report_failure)?;
                    println!("{}", path.display());
                }
            }
        }
        if drawn == 0 {
            return Err(Failure::data(anyhow!("no corrupted results with deltas in the store")));
        }
    }
    Ok(())
}
