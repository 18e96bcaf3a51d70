use super::Token;

const OPENING: &[char] = &['(', '[', '{'];
const TRAILING: &[char] = &[')', ']', '}', '"', ',', ';', ':', '!', '?', '.'];
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "jr", "sr", "inc", "corp", "co", "ltd", "st", "vs", "etc", "jan", "feb", "aug",
    "sept", "oct", "nov", "dec", "mt", "gov", "sen", "rep", "gen", "col",
];

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// A stem that keeps its trailing period: "Inc", "U.S", "e.g".
fn is_abbrev_stem(stem: &str) -> bool {
    if stem.is_empty() {
        return false;
    }
    if stem.contains('.') && stem.chars().all(|c| c.is_alphabetic() || c == '.') {
        return true;
    }
    let lower = stem.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits a run of identical leading/trailing characters.
fn run_len_front(s: &str, c: char) -> usize {
    s.chars().take_while(|&x| x == c).map(char::len_utf8).sum()
}

fn run_len_back(s: &str, c: char) -> usize {
    s.chars().rev().take_while(|&x| x == c).map(char::len_utf8).sum()
}

fn split_runs(chunk: &str, out: &mut Vec<String>) {
    let mut rest = chunk;
    while let Some(c) = rest.chars().next() {
        let n = run_len_front(rest, c);
        out.push(rest[..n].to_string());
        rest = &rest[n..];
    }
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    if chunk.chars().all(is_punct) {
        split_runs(chunk, out);
        return;
    }
    let mut rest = chunk;
    while let Some(c) = rest.chars().next() {
        if !(OPENING.contains(&c) || c == '"') {
            break;
        }
        let n = run_len_front(rest, c);
        out.push(rest[..n].to_string());
        rest = &rest[n..];
    }
    let mut trailing = Vec::new();
    while let Some(c) = rest.chars().last() {
        if !TRAILING.contains(&c) {
            break;
        }
        let n = run_len_back(rest, c);
        let cut = rest.len() - n;
        if c == '.' && n == 1 && is_abbrev_stem(&rest[..cut]) {
            break;
        }
        trailing.push(rest[cut..].to_string());
        rest = &rest[..cut];
    }
    // The chunk holds at least one alphanumeric character, which is never peeled.
    out.push(rest.to_string());
    out.extend(trailing.into_iter().rev());
}

/// Splits text into whitespace-free tokens.
///
/// Brackets, quotes and clause punctuation are split off words; a single
/// trailing period stays attached to abbreviations ("Inc.", "U.S.").
/// Hyphens and apostrophes inside words are kept ("audience-abuse", "ISP's").
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut pieces = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut pieces);
    }
    pieces.into_iter().enumerate().map(|(index, text)| Token { text, index }).collect()
}

/// Builds tokens from pre-split words, skipping anything that is not a valid token.
pub fn tokenize_words<S: AsRef<str>>(words: &[S]) -> Vec<Token> {
    words
        .iter()
        .filter_map(|w| Token::new(w.as_ref(), 0))
        .enumerate()
        .map(|(index, mut t)| {
            t.index = index;
            t
        })
        .collect()
}

fn all_of(s: &str, set: &[char]) -> bool {
    !s.is_empty() && s.chars().all(|c| set.contains(&c))
}

/// Whether `next` may be written directly after `prev` without a space and
/// still split back into the same two tokens.
fn can_glue(prev: &str, next: &str) -> bool {
    let (Some(last), Some(first)) = (prev.chars().last(), next.chars().next()) else {
        return false;
    };
    if last == first {
        return false;
    }
    !(first == '.' && is_abbrev_stem(prev))
}

/// Joins tokens into text.
///
/// Closing punctuation attaches to the preceding token, opening brackets
/// attach to the following one and double quotes alternate between the two.
/// Standalone hyphens and dashes keep their surrounding spaces.
pub fn detokenize<T: AsRef<str>>(tokens: &[T]) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    let mut attach_next = false;
    let mut quotes = 0usize;
    for tok in tokens {
        let tok = tok.as_ref();
        let is_quote = all_of(tok, &['"']);
        let closing_quote = is_quote && quotes % 2 == 1;
        let glue = match prev {
            None => true,
            Some(p) => (attach_next || closing_quote || (!is_quote && all_of(tok, TRAILING))) && can_glue(p, tok),
        };
        if !glue {
            out.push(' ');
        }
        out.push_str(tok);
        attach_next = all_of(tok, OPENING) || (is_quote && !closing_quote);
        if is_quote {
            quotes += 1;
        }
        prev = Some(tok);
    }
    out
}
