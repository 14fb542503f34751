//! Character n-gram language identification.
//!
//! Texts and references are reduced to rank-ordered profiles of their most
//! frequent character n-grams (n = 1..3) and compared with the out-of-place
//! distance: for each text n-gram, the absolute rank difference against the
//! reference, with a miss costing the full reference length. Reference
//! profiles are built from pinned training texts shipped with the crate.

use std::collections::HashMap;

/// Maximum profile length in n-grams.
pub const PROFILE_SIZE: usize = 300;

/// Largest n-gram order considered.
pub const MAX_NGRAM: usize = 3;

/// Texts below this many characters (after normalization) are undetermined.
pub const MIN_TEXT_CHARS: usize = 20;

/// Code returned when the text is too short to classify.
pub const UNDETERMINED: &str = "und";

const TRAINING: &[(&str, &str)] = &[
    ("de", include_str!("../../data/lang/de.txt")),
    ("en", include_str!("../../data/lang/en.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("ru", include_str!("../../data/lang/ru.txt")),
    ("zh", include_str!("../../data/lang/zh.txt")),
];

/// A language's rank-ordered n-gram list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageProfile {
    pub code: String,
    ngrams: Vec<String>,
    ranks: HashMap<String, usize>,
}

impl LanguageProfile {
    fn from_ranked(code: &str, ngrams: Vec<String>) -> Result<Self, String> {
        let mut ranks = HashMap::with_capacity(ngrams.len());
        for (rank, gram) in ngrams.iter().enumerate() {
            if ranks.insert(gram.clone(), rank).is_some() {
                return Err(format!("duplicate n-gram {gram:?} in profile {code:?}"));
            }
        }
        Ok(LanguageProfile { code: code.to_owned(), ngrams, ranks })
    }

    /// Build a profile from training text.
    pub fn from_text(code: &str, text: &str) -> Self {
        Self::from_ranked(code, ranked_ngrams(text, PROFILE_SIZE))
            .expect("ranked n-grams are distinct by construction")
    }

    /// Parse a profile file: one n-gram per line in rank order. Grams may
    /// contain spaces, so lines are taken verbatim; empty lines are skipped.
    pub fn parse(code: &str, text: &str) -> Result<Self, String> {
        let ngrams: Vec<String> =
            text.lines().filter(|l| !l.is_empty()).map(str::to_owned).collect();
        Self::from_ranked(code, ngrams)
    }

    /// Render in the profile file format (one n-gram per line).
    pub fn to_lines(&self) -> String {
        let mut out = self.ngrams.join("\n");
        out.push('\n');
        out
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }
}

/// The six reference profiles shipped with the crate, code-sorted.
pub fn shipped_profiles() -> Vec<LanguageProfile> {
    TRAINING.iter().map(|(code, text)| LanguageProfile::from_text(code, text)).collect()
}

/// Lowercase and collapse whitespace runs to single spaces.
fn normalize(text: &str) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len());
    let mut prev_space = true;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !prev_space {
                out.push(' ');
                prev_space = true;
            }
        } else {
            out.extend(ch.to_lowercase());
            prev_space = false;
        }
    }
    if out.last() == Some(&' ') {
        out.pop();
    }
    out
}

/// Top `cap` character n-grams (n = 1..=MAX_NGRAM) by frequency, ties by
/// lexicographic order so identical texts always rank identically.
fn ranked_ngrams(text: &str, cap: usize) -> Vec<String> {
    let chars = normalize(text);
    let mut counts: HashMap<String, u64> = HashMap::new();
    for n in 1..=MAX_NGRAM {
        if chars.len() < n {
            break;
        }
        for window in chars.windows(n) {
            *counts.entry(window.iter().collect()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(cap);
    ranked.into_iter().map(|(g, _)| g).collect()
}

fn out_of_place(doc: &[String], profile: &LanguageProfile) -> u64 {
    let miss = profile.len() as u64;
    doc.iter()
        .enumerate()
        .map(|(rank, gram)| match profile.ranks.get(gram) {
            Some(r) => (rank as i64 - *r as i64).unsigned_abs(),
            None => miss,
        })
        .sum()
}

/// Classify `text` against reference profiles by minimum out-of-place
/// distance; ties resolve to the lexicographically smallest code. Texts
/// shorter than [`MIN_TEXT_CHARS`] after normalization return
/// [`UNDETERMINED`].
pub fn detect_language(text: &str, profiles: &[LanguageProfile]) -> String {
    assert!(!profiles.is_empty(), "no language profiles loaded");
    let chars = normalize(text);
    if chars.len() < MIN_TEXT_CHARS {
        return UNDETERMINED.to_owned();
    }
    let doc_text: String = chars.into_iter().collect();
    let doc = ranked_ngrams(&doc_text, PROFILE_SIZE);
    let mut best: Option<(&str, u64)> = None;
    for profile in profiles {
        let dist = out_of_place(&doc, profile);
        let better = match best {
            None => true,
            Some((code, d)) => dist < d || (dist == d && profile.code.as_str() < code),
        };
        if better {
            best = Some((&profile.code, dist));
        }
    }
    best.expect("profiles nonempty").0.to_owned()
}
