//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) so the lines are printed even when everything passes.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nludiag::annotation::{annotate, tokenize};
use nludiag::corruption::{corrupt_record, corrupt_text, enumerate_configs, make_cloze_pair};
use nludiag::cues::{
    masked_prediction_accuracy, paraphrase_retention, sentiment_retention, ClozeVariant, CueError, MaskedPredictor,
    ParaphraseLexicon, Polarity, SentimentLexicon,
};
use nludiag::dataset::{save_split, split_dir};
use nludiag::harness::stubs::RecordingBackend;
use nludiag::harness::{
    compute_delta, compute_metric, load_results, majority_class_score, Harness, Metric, RunStatus, StoredResult,
};
use nludiag::report::{delta_table, ReportFilter};
use nludiag::synthetic::SyntheticSst2;
use nludiag::{
    CorruptionSetting, CorruptionSpec, DatasetSplit, ExperimentConfig, Record, RuleTagger, Split, Task, WordClass,
};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn criterion(id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = started.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d.as_str()),
        Err(d) => ("FAIL", d.as_str()),
    };
    println!("[{tag}] criterion {id:>2}: {name}: {detail} ({:.3} s)", elapsed.as_secs_f64());
    outcome.is_ok()
}

fn matrix_cardinality() -> Check {
    let configs = enumerate_configs(
        &Task::ALL.into_iter().collect(),
        &WordClass::ALL.into_iter().collect(),
        &CorruptionSetting::ALL.into_iter().collect(),
    )
    .map_err(|e| e.to_string())?;
    let unique: BTreeSet<_> = configs.iter().map(|c| c.run_id("x")).collect();
    ensure!(configs.len() == 192, "{} configs", configs.len());
    ensure!(unique.len() == 192, "{} unique configs", unique.len());
    Ok("192 unique configs".into())
}

const MRPC_1: &str = "Easynews Inc. was subpoenaed late last week by the FBI, which was seeking account information related to the uploading of the virus to the ISP's Usenet news group server.";
const MRPC_2: &str = "Easynews Inc. said Monday that it was cooperating with the FBI in trying to locate the person who uploaded the virus to a Usenet news group hosted by the ISP.";
const SST_1: &str = "An unclassifiably awful study in self - and audience-abuse.";
const SST_2: &str = "It proves quite compelling as an intense, brooding character study.";

fn corruption_fixtures() -> Check {
    let tagger = RuleTagger::bundled();
    // Expected strings keep the source casing; the printed table lowercases them.
    let cases = [
        (MRPC_1, WordClass::Noun, "was subpoenaed late last by the, which was seeking related to the of the to the."),
        (
            MRPC_2,
            WordClass::Noun,
            "said that it was cooperating with the in trying to locate the who uploaded the to a hosted by the.",
        ),
        (SST_1, WordClass::Noun, "An unclassifiably awful in - and."),
        (SST_1, WordClass::Adj, "An unclassifiably study in self - and audience-abuse."),
        (SST_2, WordClass::Noun, "It proves quite compelling as an intense, brooding."),
        (SST_2, WordClass::Adj, "It proves quite as an, brooding character study."),
    ];
    for (text, class, want) in cases {
        let got = corrupt_text(text, class, &tagger).map_err(|e| e.to_string())?;
        ensure!(got == want, "{class} on {text:?}: got {got:?}, want {want:?}");
    }
    Ok(format!("{} fixture sentences reproduced", cases.len()))
}

fn subsequence_property() -> Check {
    let tagger = RuleTagger::bundled();
    let vocab: Vec<&str> = "The the a an cat dogs saw sees , . ; : ! ? ( ) \" - -- ... Inc. U.S. e.g. 's n't \
        quickly very beautiful awful and or but he she they it was is were running ran 42 1,000 3.5 \
        audience-abuse self well-known John Smith London study compelling brooding of in to with"
        .split(' ')
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let n = rng.random_range(0..30);
        let sentence = (0..n).map(|_| vocab[rng.random_range(0..vocab.len())]).collect::<Vec<_>>().join(" ");
        let class = WordClass::ALL[rng.random_range(0..WordClass::ALL.len())];
        let tagged = annotate(&sentence, &tagger).map_err(|e| e.to_string())?;
        let expected: Vec<&str> = tagged.iter().filter(|t| t.upos != class.upos()).map(|t| t.token.text()).collect();
        let corrupted = corrupt_text(&sentence, class, &tagger).map_err(|e| e.to_string())?;
        let got = tokenize(&corrupted);
        let got: Vec<&str> = got.iter().map(|t| t.text()).collect();
        ensure!(got == expected, "sentence {i} {sentence:?} ({class}): {got:?} != {expected:?}");

        let label: f64 = rng.random_range(0.0..=5.0);
        let record = Record::new()
            .with("idx", i as u64)
            .with("sentence1", sentence.as_str())
            .with("sentence2", corrupted.as_str())
            .with("label", label);
        let out = corrupt_record(&record, &Task::StsB.schema(), class, &tagger).map_err(|e| e.to_string())?;
        let after = out.get("label").and_then(|v| v.as_f64()).ok_or("label lost")?;
        ensure!(after.to_bits() == label.to_bits(), "label {label} became {after}");
    }
    Ok("1000 fuzzed sentences; labels bit-identical".into())
}

fn oracle_accuracy(p: &[f64], g: &[f64]) -> f64 {
    p.iter().zip(g).filter(|(a, b)| a == b).count() as f64 / p.len() as f64
}

fn oracle_mcc(p: &[f64], g: &[f64]) -> f64 {
    let count = |pp: f64, gg: f64| p.iter().zip(g).filter(|(a, b)| **a == pp && **b == gg).count() as f64;
    let (tp, tn, fp, fneg) = (count(1.0, 1.0), count(0.0, 0.0), count(1.0, 0.0), count(0.0, 1.0));
    let den = ((tp + fp) * (tp + fneg) * (tn + fp) * (tn + fneg)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fneg) / den
    }
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    if den == 0.0 || !den.is_finite() {
        0.0
    } else {
        (n * sxy - sx * sy) / den
    }
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for metric in [Metric::Accuracy, Metric::Matthews, Metric::Pearson] {
        for _ in 0..500 {
            let n = rng.random_range(1..=50);
            let (p, g): (Vec<f64>, Vec<f64>) = match metric {
                Metric::Accuracy => {
                    (0..n).map(|_| (rng.random_range(0..3) as f64, rng.random_range(0..3) as f64)).unzip()
                }
                Metric::Matthews => {
                    (0..n).map(|_| (rng.random_range(0..2) as f64, rng.random_range(0..2) as f64)).unzip()
                }
                Metric::Pearson => (0..n).map(|_| (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0))).unzip(),
            };
            let oracle = match metric {
                Metric::Accuracy => oracle_accuracy(&p, &g),
                Metric::Matthews => oracle_mcc(&p, &g),
                Metric::Pearson => oracle_pearson(&p, &g),
            };
            let got = compute_metric(&p, &g, metric).map_err(|e| e.to_string())? / 100.0;
            let err = (got - oracle).abs();
            worst = worst.max(err);
            ensure!(err < 1e-9, "{metric:?} on n={n}: {got} vs oracle {oracle}");
        }
    }
    let degenerate = [
        compute_metric(&[0.0; 4], &[0.0, 1.0, 0.0, 1.0], Metric::Matthews),
        compute_metric(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], Metric::Pearson),
    ];
    for d in degenerate {
        ensure!(d.as_ref().ok() == Some(&0.0), "degenerate case gave {d:?}");
    }
    let p = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    let g = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let mcc = compute_metric(&p, &g, Metric::Matthews).map_err(|e| e.to_string())?;
    ensure!((mcc - 33.33).abs() <= 0.01, "Matthews fixture {mcc}");
    let r = compute_metric(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], Metric::Pearson).map_err(|e| e.to_string())?;
    ensure!((r - 98.20).abs() <= 0.01, "Pearson fixture {r}");
    Ok(format!("1500 vectors, worst error {worst:.1e}; MCC {mcc:.3}, Pearson {r:.3}"))
}

const BASELINES: [(Task, f64); 8] = [
    (Task::Cola, 64.05),
    (Task::MnliM, 87.89),
    (Task::Mrpc, 88.73),
    (Task::Qnli, 92.64),
    (Task::Qqp, 91.32),
    (Task::Rte, 70.04),
    (Task::Sst2, 94.61),
    (Task::StsB, 90.08),
];

/// (task, class, [(score, printed delta); 3 settings]).
type Row = (Task, WordClass, [(f64, f64); 3]);

const PRINTED: [Row; 16] = [
    (Task::Cola, WordClass::Noun, [(39.72, -24.34), (17.75, -46.30), (34.33, -29.73)]),
    (Task::MnliM, WordClass::Noun, [(85.64, -2.24), (72.85, -15.04), (77.46, -10.42)]),
    (Task::Mrpc, WordClass::Noun, [(86.27, -2.45), (82.35, -6.37), (80.15, -8.58)]),
    (Task::Qnli, WordClass::Noun, [(89.13, -3.51), (71.02, -21.62), (82.02, -10.62)]),
    (Task::Qqp, WordClass::Noun, [(86.69, -4.63), (72.57, -18.75), (84.17, -7.16)]),
    (Task::Rte, WordClass::Noun, [(47.29, -22.74), (53.79, -16.25), (47.29, -22.74)]),
    (Task::Sst2, WordClass::Noun, [(94.04, -0.57), (87.27, -7.34), (88.76, -5.85)]),
    (Task::StsB, WordClass::Noun, [(81.67, -8.41), (56.12, -33.96), (63.52, -26.56)]),
    (Task::Cola, WordClass::Verb, [(23.26, -40.79), (4.30, -59.75), (20.22, -43.83)]),
    (Task::MnliM, WordClass::Verb, [(86.95, -0.94), (77.61, -10.28), (80.32, -7.57)]),
    (Task::Mrpc, WordClass::Verb, [(85.54, -3.19), (85.54, -3.19), (85.05, -3.68)]),
    (Task::Qnli, WordClass::Verb, [(92.00, -0.64), (87.41, -5.24), (90.15, -2.49)]),
    (Task::Qqp, WordClass::Verb, [(89.49, -1.84), (86.01, -5.31), (89.05, -2.27)]),
    (Task::Rte, WordClass::Verb, [(65.34, -4.69), (65.70, -4.33), (65.34, -4.69)]),
    (Task::Sst2, WordClass::Verb, [(93.69, -0.92), (89.33, -5.28), (89.56, -5.05)]),
    (Task::StsB, WordClass::Verb, [(87.63, -2.46), (85.54, -4.54), (86.22, -3.86)]),
];

fn stored(
    task: Task,
    class: Option<WordClass>,
    setting: Option<CorruptionSetting>,
    score: f64,
    baseline: Option<f64>,
) -> StoredResult {
    StoredResult {
        task,
        word_class: class,
        setting,
        backend: "fixture".into(),
        seed: 42,
        metric: task.schema().metric,
        score: Some(score),
        baseline,
        delta: baseline.map(|b| compute_delta(score, b)),
        wall_time: 0.0,
        timestamp: "2021-01-01T00:00:00.000Z".into(),
        status: RunStatus::Ok,
        error: None,
    }
}

fn delta_replay() -> Check {
    let mut rows: Vec<StoredResult> = BASELINES.iter().map(|&(t, s)| stored(t, None, None, s, None)).collect();
    for (task, class, cells) in PRINTED {
        let base = BASELINES.iter().find(|(t, _)| *t == task).map(|(_, b)| *b);
        for (setting, (score, _)) in CorruptionSetting::ALL.into_iter().zip(cells) {
            rows.push(stored(task, Some(class), Some(setting), score, base));
        }
    }
    // Decimal inputs such as 39.72 are not exact in binary; 1e-9 absorbs that
    // representation error on top of the ±0.01 printing tolerance.
    let tol = 0.01 + 1e-9;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for class in [WordClass::Noun, WordClass::Verb] {
        let table = delta_table(&rows, class, &ReportFilter::default()).map_err(|e| e.to_string())?;
        for (task, c, cells) in PRINTED.iter().filter(|r| r.1 == class) {
            let row = table.get(*task).ok_or_else(|| format!("{task}-{c} missing"))?;
            for (setting, (_, printed)) in CorruptionSetting::ALL.into_iter().zip(cells) {
                let got = row.cell(setting).delta.ok_or_else(|| format!("{task}-{c} {setting} empty"))?;
                worst = worst.max((got - printed).abs());
                ensure!((got - printed).abs() <= tol, "{task}-{c} {setting}: {got:.4} vs printed {printed}");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} printed deltas within ±0.01 (worst {worst:.4})"))
}

fn cloze_queries() -> Check {
    let tagger = RuleTagger::bundled();
    let q = make_cloze_pair(SST_1, WordClass::Noun, &tagger, "[MASK]")
        .map_err(|e| e.to_string())?
        .ok_or("no query generated")?;
    ensure!(
        q.masked_original == "An unclassifiably awful [MASK] in self - and audience-abuse.",
        "(a) {:?}",
        q.masked_original
    );
    ensure!(q.masked_corrupted == "An unclassifiably awful [MASK] in - and.", "(b) {:?}", q.masked_corrupted);
    ensure!(q.removed_token == "study", "removed {:?}", q.removed_token);
    Ok("queries (a) and (b) verbatim, removed \"study\"".into())
}

fn write_tiny_sst2(root: &Path) -> Result<(), String> {
    let rows = |texts: &[&str]| -> Vec<Record> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Record::new().with("idx", i as u64).with("sentence", *t).with("label", (i % 2) as u64))
            .collect()
    };
    let train = DatasetSplit::new(
        Task::Sst2,
        Split::Train,
        rows(&["The cat sat on the mat.", "A good film with a bad ending."]),
    );
    let dev = DatasetSplit::new(Task::Sst2, Split::Dev, rows(&["The dog barked twice.", "Two birds sang a song."]));
    let dir = split_dir(root, Task::Sst2, None);
    for s in [&train, &dev] {
        save_split(s, dir.join(format!("{}.jsonl", s.split))).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn setting_semantics() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_tiny_sst2(dir.path())?;
    let tagger = RuleTagger::bundled();
    let texts = |split: &str| -> Vec<String> {
        let path = dir.path().join("sst-2").join(format!("{split}.jsonl"));
        let loaded = nludiag::dataset::load_split(Task::Sst2, split.parse().unwrap(), path).unwrap();
        loaded.records.iter().map(|r| r.text("sentence").unwrap().to_string()).collect()
    };
    let strip = |v: &[String]| -> Vec<String> {
        v.iter().map(|t| corrupt_text(t, WordClass::Noun, &tagger).unwrap()).collect()
    };
    let (train, dev) = (texts("train"), texts("dev"));
    let (train_c, dev_c) = (strip(&train), strip(&dev));
    ensure!(train != train_c && dev != dev_c, "fixture has no nouns to strip");

    let expected = [
        (CorruptionSetting::CorruptTrain, &train_c, &dev, "(corrupt, orig)"),
        (CorruptionSetting::CorruptTest, &train, &dev_c, "(orig, corrupt)"),
        (CorruptionSetting::CorruptTrainAndTest, &train_c, &dev_c, "(corrupt, corrupt)"),
    ];
    let mut seen = Vec::new();
    for (setting, want_train, want_eval, label) in expected {
        let backend = RecordingBackend::new();
        let harness = Harness::new(dir.path(), &backend, &tagger).with_work_root(dir.path().join("runs"));
        let cfg = ExperimentConfig::corrupted(Task::Sst2, CorruptionSpec::new(WordClass::Noun, setting));
        harness.run_experiment(&cfg).map_err(|e| e.to_string())?;
        let obs = backend.observations();
        ensure!(obs.len() == 1, "{setting}: {} observations", obs.len());
        ensure!(&obs[0].train_texts == want_train, "{setting}: train {:?}", obs[0].train_texts);
        ensure!(&obs[0].eval_texts == want_eval, "{setting}: eval {:?}", obs[0].eval_texts);
        seen.push(label);
    }
    Ok(seen.join(" / "))
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_nludiag");
    let run = |args: &[&str]| -> Result<String, String> {
        let out = Command::new(bin).args(args).env("NLUDIAG_ROOT", dir.path()).output().map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        ensure!(
            out.status.success(),
            "`nludiag {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        Ok(stdout)
    };
    run(&["synth"])?;
    let (train, dev) = SyntheticSst2::default().generate();
    ensure!(train.len() == 2000, "train has {} records", train.len());
    let majority = majority_class_score(&train, &dev).map_err(|e| e.to_string())?;

    let started = Instant::now();
    run(&["run", "--task", "sst-2", "--word-class", "noun", "--backend", "bow"])?;
    let run_time = started.elapsed();
    ensure!(run_time < Duration::from_secs(300), "run took {run_time:?}");

    let store = load_results(&dir.path().join("results.jsonl")).map_err(|e| e.to_string())?;
    ensure!(store.len() == 4, "store has {} rows", store.len());
    let mut lowest = f64::INFINITY;
    for r in &store {
        let score = r.score.ok_or("missing score")?;
        lowest = lowest.min(score);
        ensure!(score > majority, "{:?}/{:?} scored {score} <= majority {majority}", r.word_class, r.setting);
        if !r.is_baseline() {
            ensure!(r.delta.is_some(), "{:?} has no delta", r.setting);
        }
    }

    let out = dir.path().join("report");
    let out_s = out.to_string_lossy().into_owned();
    run(&["report", "--kind", "heatmap", "--format", "png", "--setting", "corrupt-test", "--out", &out_s])?;
    let csv = std::fs::read_to_string(out.join("heatmap-corrupt-test.csv")).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = csv.lines().collect();
    ensure!(lines.len() == 2 && lines[0] == "task,noun" && lines[1].starts_with("sst-2,"), "heatmap csv {csv:?}");
    let png = std::fs::read(out.join("heatmap-corrupt-test.png")).map_err(|e| e.to_string())?;
    ensure!(png.starts_with(b"\x89PNG"), "heatmap image is not a PNG");
    Ok(format!(
        "run {:.1} s; lowest score {lowest:.2} > majority {majority:.2}; 4 rows; 1x1 heatmap",
        run_time.as_secs_f64()
    ))
}

struct Fixed(&'static str);

impl MaskedPredictor for Fixed {
    fn predict_top1(&self, _text: &str) -> Result<String, CueError> {
        Ok(self.0.to_string())
    }
}

fn analysis_fixtures() -> Check {
    let mut lex = ParaphraseLexicon::new();
    for (a, b) in [("locate", "find"), ("big", "large"), ("quick", "fast")] {
        lex.insert(a, b);
    }
    let pairs = [
        ("we will locate it", "they find it"),
        ("a big house", "a large home"),
        ("the quick fox", "the fast fox"),
        ("he slept", "she ate"),
    ];
    let para = paraphrase_retention(&pairs, &lex).map_err(|e| e.to_string())?.value();
    ensure!(para == 0.75, "paraphrase retention {para}");

    let tagger = RuleTagger::bundled();
    let rows = [(SST_1, Polarity::Negative), (SST_2, Polarity::Positive)];
    let corrupted: Vec<(String, Polarity)> =
        rows.iter().map(|(t, p)| (corrupt_text(t, WordClass::Noun, &tagger).unwrap(), *p)).collect();
    let senti = sentiment_retention(&corrupted, SentimentLexicon::bundled()).map_err(|e| e.to_string())?.value();
    ensure!(senti == 1.0, "sentiment retention {senti}");

    let five = [
        "The cat sat on the mat.",
        "A dog barked at the cat.",
        "My cat likes fish.",
        "The bird sang a song.",
        "Her car is red.",
    ];
    let mut accs = Vec::new();
    for v in [ClozeVariant::Original, ClozeVariant::Corrupted] {
        let f =
            masked_prediction_accuracy(&five, WordClass::Noun, &tagger, &Fixed("cat"), v).map_err(|e| e.to_string())?;
        ensure!((f.numerator, f.denominator) == (2, 5) && f.value() == 0.4, "{v:?}: {}/{}", f.numerator, f.denominator);
        accs.push(f.value());
    }
    Ok(format!("paraphrase {para}, sentiment {senti}, masked {:?}", accs))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "matrix cardinality", Some(secs(1)), matrix_cardinality),
        criterion(2, "corruption fixtures", Some(secs(1)), corruption_fixtures),
        criterion(3, "subsequence property", Some(secs(30)), subsequence_property),
        criterion(4, "metric oracles", None, metric_oracles),
        criterion(5, "delta fixture replay", Some(secs(1)), delta_replay),
        criterion(6, "cloze query generation", Some(secs(1)), cloze_queries),
        criterion(7, "setting semantics", None, setting_semantics),
        criterion(8, "desk-scale end-to-end", Some(secs(300)), end_to_end),
        criterion(9, "analysis fixtures", None, analysis_fixtures),
    ];
    println!("[SKIP] criterion 10: full-scale transformer reproduction: needs a GPU fine-tuning backend, not gating");
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed, 1 skipped", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
