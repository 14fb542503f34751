//! Text normalization: tokenization, stopword filtering, rule-based
//! lemmatization, vocabulary construction and bag-of-words encoding.
//!
//! The pipeline order is fixed: [`tokenize`] -> [`remove_stopwords`] ->
//! [`Lemmatizer::lemmatize`]. Stopwords are matched on surface forms, so
//! the filter sees tokens before any suffix stripping. All operations are
//! pure functions over their inputs.

use std::collections::{BTreeMap, HashMap, HashSet};

/// Embedded default English stopword list (one token per line, `#` comments).
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Embedded lemmatizer exception table (tab-separated surface/lemma pairs).
pub const DEFAULT_LEMMA_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");

/// A document reduced to an ordered token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub author: String,
    pub subreddit: String,
    pub tokens: Vec<String>,
}

/// Dense token <-> id mapping with per-token document frequencies.
///
/// Ids are assigned in lexicographic token order, so identical corpora
/// always produce identical vocabularies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    doc_freq: Vec<u32>,
}

impl Vocabulary {
    /// Rebuild a vocabulary from its persisted parts. `tokens` must already
    /// be in id order; the token -> id map is reconstructed.
    pub fn from_parts(tokens: Vec<String>, doc_freq: Vec<u32>) -> Self {
        assert_eq!(tokens.len(), doc_freq.len(), "tokens/doc_freq length mismatch");
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, ids, doc_freq }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    /// Stable content hash over the id-ordered token list. Used to verify
    /// that a persisted model and a vocabulary file belong together.
    pub fn content_hash(&self) -> u64 {
        let mut buf = Vec::new();
        for t in &self.tokens {
            buf.extend_from_slice(t.as_bytes());
            buf.push(b'\n');
        }
        crate::seed::fnv1a64(&buf)
    }
}

/// Sparse bag-of-words document. Keys are vocabulary ids; counts are >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDoc {
    pub doc_id: String,
    pub counts: BTreeMap<u32, u32>,
}

impl BowDoc {
    /// Total token count (sum of all per-id counts).
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }
}

fn is_url_start(text: &str, byte_pos: usize) -> bool {
    let rest = &text[byte_pos..];
    if rest.starts_with("http://") || rest.starts_with("https://") {
        return true;
    }
    if rest.starts_with("www.") {
        // Bare "www." counts only at a word start.
        let prev = text[..byte_pos].chars().next_back();
        return prev.is_none_or(|c| !c.is_alphanumeric());
    }
    false
}

fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut skip_until_ws = false;
    for (pos, ch) in text.char_indices() {
        if skip_until_ws {
            if ch.is_whitespace() {
                skip_until_ws = false;
                out.push(ch);
            }
            continue;
        }
        if is_url_start(text, pos) {
            skip_until_ws = true;
            continue;
        }
        out.push(ch);
    }
    out
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Drop possessive "'s" before splitting: an apostrophe + `s` followed by a
/// non-alphanumeric character or end of input.
fn strip_possessives(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if is_apostrophe(chars[i])
            && i + 1 < chars.len()
            && chars[i + 1] == 's'
            && chars.get(i + 2).is_none_or(|c| !c.is_alphanumeric())
        {
            i += 2;
            continue;
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// Normalize raw text into lowercase tokens.
///
/// Lowercases, removes URLs (`http://`, `https://`, bare `www.`), strips
/// possessive `'s`, splits on any non-alphanumeric character, and drops
/// tokens shorter than two characters or consisting only of digits.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let cleaned = strip_possessives(&strip_urls(&lowered));
    cleaned
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !t.chars().all(|c| c.is_numeric()))
        .map(str::to_owned)
        .collect()
}

/// Parse a stopword list: one token per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

/// The shipped default English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Order-preserving stopword filter.
pub fn remove_stopwords(tokens: &[String], stoplist: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

/// Rule-based suffix lemmatizer with an exception table.
///
/// The exception table is consulted first; otherwise the first matching
/// suffix rule fires:
/// 1. `ies` -> `y` (token longer than 4 chars)
/// 2. `sses` -> `ss`
/// 3. `es` dropped when the stem ends in `s`, `x`, `z`, `ch`, or `sh`
/// 4. trailing `s` dropped (not `ss`, token longer than 3 chars)
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    /// Parse a two-column tab-separated exception table (`#` comments).
    pub fn from_table(table: &str) -> Self {
        let exceptions = table
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let mut cols = l.splitn(2, '\t');
                Some((cols.next()?.to_owned(), cols.next()?.trim().to_owned()))
            })
            .collect();
        Lemmatizer { exceptions }
    }

    /// The shipped exception table.
    pub fn shipped() -> Self {
        Self::from_table(DEFAULT_LEMMA_EXCEPTIONS)
    }

    /// An empty exception table (suffix rules only).
    pub fn bare() -> Self {
        Lemmatizer { exceptions: HashMap::new() }
    }

    pub fn lemmatize(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        let n_chars = token.chars().count();
        if n_chars > 4 && token.ends_with("ies") {
            let mut stem = token[..token.len() - 3].to_owned();
            stem.push('y');
            return stem;
        }
        if token.ends_with("sses") {
            return token[..token.len() - 2].to_owned();
        }
        if token.ends_with("es") {
            let stem = &token[..token.len() - 2];
            if !stem.is_empty()
                && (stem.ends_with('s')
                    || stem.ends_with('x')
                    || stem.ends_with('z')
                    || stem.ends_with("ch")
                    || stem.ends_with("sh"))
            {
                return stem.to_owned();
            }
        }
        if n_chars > 3 && token.ends_with('s') && !token.ends_with("ss") {
            return token[..token.len() - 1].to_owned();
        }
        token.to_owned()
    }

    pub fn lemmatize_all(&self, tokens: &[String]) -> Vec<String> {
        tokens.iter().map(|t| self.lemmatize(t)).collect()
    }
}

/// The full fixed-order preparation pipeline:
/// tokenize -> stopword removal -> lemmatization.
pub fn preprocess(text: &str, stoplist: &HashSet<String>, lemmatizer: &Lemmatizer) -> Vec<String> {
    lemmatizer.lemmatize_all(&remove_stopwords(&tokenize(text), stoplist))
}

/// Build a vocabulary from tokenized documents.
///
/// A token is kept iff its document frequency is at least `min_df` and at
/// most `max_df_ratio * D`. Ids are assigned in lexicographic token order.
pub fn build_vocabulary(docs: &[TokenizedDoc], min_df: u32, max_df_ratio: f64) -> Vocabulary {
    assert!(
        max_df_ratio > 0.0 && max_df_ratio <= 1.0,
        "max_df_ratio must be in (0, 1]"
    );
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in docs {
        let mut seen: HashSet<&str> = HashSet::new();
        for tok in &doc.tokens {
            if seen.insert(tok) {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let mut tokens = Vec::new();
    let mut doc_freq = Vec::new();
    for (tok, freq) in df {
        if freq >= min_df && f64::from(freq) <= max_df {
            tokens.push(tok.to_owned());
            doc_freq.push(freq);
        }
    }
    Vocabulary::from_parts(tokens, doc_freq)
}

/// Encode a document against a vocabulary; out-of-vocabulary tokens are
/// silently dropped.
pub fn to_bow(doc: &TokenizedDoc, vocab: &Vocabulary) -> BowDoc {
    let mut counts = BTreeMap::new();
    for tok in &doc.tokens {
        if let Some(id) = vocab.id(tok) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    BowDoc { doc_id: doc.doc_id.clone(), counts }
}
