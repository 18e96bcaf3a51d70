//! Masked-token predictors for the cloze probe.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use super::CueError;
use crate::annotation::tokenize;

/// Fills a single mask placeholder with its best guess.
pub trait MaskedPredictor: Send + Sync {
    fn mask_token(&self) -> &str {
        "[MASK]"
    }

    /// Whether concurrent calls are safe; callers serialise otherwise.
    fn is_thread_safe(&self) -> bool {
        true
    }

    fn predict_top1(&self, text: &str) -> Result<String, CueError>;

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<String>, CueError> {
        texts.iter().map(|t| self.predict_top1(t)).collect()
    }
}

pub(crate) fn check_single_mask(text: &str, mask: &str) -> Result<(), CueError> {
    match text.matches(mask).count() {
        1 => Ok(()),
        n => Err(CueError::MaskCount { found: n, text: text.to_string() }),
    }
}

/// Scores candidates by bigram counts with the words either side of the mask.
#[derive(Debug, Clone, Default)]
pub struct BigramPredictor {
    mask: String,
    unigrams: HashMap<String, u64>,
    bigrams: HashMap<(String, String), u64>,
    fallback: Option<String>,
}

impl BigramPredictor {
    pub fn train<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut p = BigramPredictor { mask: "[MASK]".into(), ..Self::default() };
        for s in corpus {
            let words: Vec<String> = tokenize(s.as_ref()).iter().map(|t| t.text().to_lowercase()).collect();
            for w in &words {
                *p.unigrams.entry(w.clone()).or_insert(0) += 1;
            }
            for pair in words.windows(2) {
                *p.bigrams.entry((pair[0].clone(), pair[1].clone())).or_insert(0) += 1;
            }
        }
        p.fallback = best(
            p.unigrams.iter().filter(|(w, _)| w.chars().any(char::is_alphanumeric)).map(|(w, c)| (w.as_str(), *c)),
        );
        p
    }

    pub fn with_mask_token(mut self, mask: impl Into<String>) -> Self {
        self.mask = mask.into();
        self
    }
}

/// Highest count, ties to the lexicographically smallest word.
fn best<'a>(it: impl Iterator<Item = (&'a str, u64)>) -> Option<String> {
    it.max_by(|(wa, a), (wb, b)| a.cmp(b).then_with(|| wb.cmp(wa))).map(|(w, _)| w.to_string())
}

impl MaskedPredictor for BigramPredictor {
    fn mask_token(&self) -> &str {
        &self.mask
    }

    fn predict_top1(&self, text: &str) -> Result<String, CueError> {
        check_single_mask(text, &self.mask)?;
        let (left, right) = text.split_once(self.mask.as_str()).expect("one mask");
        let prev = tokenize(left).last().map(|t| t.text().to_lowercase());
        let next = tokenize(right).first().map(|t| t.text().to_lowercase());
        let mut scores: HashMap<&str, u64> = HashMap::new();
        for ((a, b), c) in &self.bigrams {
            if prev.as_deref() == Some(a.as_str()) {
                *scores.entry(b.as_str()).or_insert(0) += c;
            }
            if next.as_deref() == Some(b.as_str()) {
                *scores.entry(a.as_str()).or_insert(0) += c;
            }
        }
        let guess = best(scores.into_iter()).or_else(|| self.fallback.clone());
        Ok(guess.unwrap_or_default())
    }
}

/// Sends one query per line to an external program and reads one answer
/// per line back.
#[derive(Debug, Clone)]
pub struct CommandPredictor {
    program: PathBuf,
    args: Vec<String>,
    mask: String,
}

impl CommandPredictor {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        CommandPredictor { program: program.into(), args, mask: "[MASK]".into() }
    }

    pub fn from_command_line(line: &str) -> Result<Self, CueError> {
        let mut parts = line.split_whitespace();
        let program = parts.next().ok_or_else(|| CueError::Predictor("empty predictor command".into()))?;
        Ok(Self::new(program, parts.map(String::from).collect()))
    }

    pub fn with_mask_token(mut self, mask: impl Into<String>) -> Self {
        self.mask = mask.into();
        self
    }
}

impl MaskedPredictor for CommandPredictor {
    fn mask_token(&self) -> &str {
        &self.mask
    }

    fn predict_top1(&self, text: &str) -> Result<String, CueError> {
        Ok(self.predict_batch(&[text.to_string()])?.remove(0))
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<String>, CueError> {
        for t in texts {
            check_single_mask(t, &self.mask)?;
            if t.contains('\n') {
                return Err(CueError::Predictor("query contains a newline".into()));
            }
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| CueError::Predictor(format!("cannot start {}: {e}", self.program.display())))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = texts.join("\n") + "\n";
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let stdout = child.stdout.take().expect("piped stdout");
        let answers: Vec<String> = BufReader::new(stdout).lines().collect::<Result<_, _>>()?;
        let output = child.wait_with_output()?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(CueError::Predictor(format!(
                "{} exited with {}: {}",
                self.program.display(),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        if answers.len() != texts.len() {
            return Err(CueError::Predictor(format!("expected {} answers, got {}", texts.len(), answers.len())));
        }
        Ok(answers.into_iter().map(|a| a.trim().to_string()).collect())
    }
}
