//! Activity-dump ingestion: newline-delimited JSON parsing, dual-community
//! user selection, cohort activity statistics, and an HTTP fetch contract
//! for pulling public user histories.
//!
//! Input files are newline-delimited JSON, one record per line. Required
//! record keys: `id`, `author`, `subreddit`, `created_utc`, `kind`
//! (`"post"` or `"comment"`), `body`; optional: `title`, `score`. User
//! metadata files carry `username` plus whatever account fields are known;
//! absent fields stay absent rather than defaulting to zero.

pub mod fetch;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether a record is a submission or a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Post,
    Comment,
}

/// One post or comment from an activity dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub kind: RecordKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub title: Option<String>,
    pub body: String,
    #[serde(default)]
    pub score: i64,
}

impl PostRecord {
    /// Title and body joined for text analysis (title first, if any).
    pub fn full_text(&self) -> String {
        match &self.title {
            Some(t) if !t.is_empty() => format!("{t}\n{}", self.body),
            _ => self.body.clone(),
        }
    }
}

/// Account metadata snapshot. Fields other than the username may be absent
/// in the input; absent fields disable the heuristics that need them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserMeta {
    pub username: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub account_created_utc: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub link_karma: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub comment_karma: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub has_verified_email: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub is_suspended: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snapshot_utc: Option<i64>,
}

/// Author value used for removed accounts; excluded from user-level analysis.
pub const DELETED_AUTHOR: &str = "[deleted]";

/// An immutable loaded corpus. Record order is file order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PostRecord>,
    users: BTreeMap<String, UserMeta>,
    provenance: Vec<String>,
    skipped_lines: usize,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(
        records: Vec<PostRecord>,
        users: BTreeMap<String, UserMeta>,
        provenance: Vec<String>,
        skipped_lines: usize,
    ) -> Self {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            by_id.entry(r.id.clone()).or_insert(i);
        }
        Corpus { records, users, provenance, skipped_lines, by_id }
    }

    pub fn records(&self) -> &[PostRecord] {
        &self.records
    }

    pub fn record_by_id(&self, id: &str) -> Option<&PostRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn users(&self) -> &BTreeMap<String, UserMeta> {
        &self.users
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    /// Lines skipped during lenient parsing (always 0 in strict mode).
    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }
}

/// Strict parsing fails on the first malformed line; lenient parsing skips
/// malformed lines and counts them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message} (byte offset {offset})")]
    Line {
        path: String,
        line: usize,
        offset: u64,
        message: String,
    },
}

pub fn normalize_author(author: &str) -> String {
    let lowered = author.trim().to_lowercase();
    lowered.strip_prefix("u/").unwrap_or(&lowered).to_owned()
}

pub fn normalize_subreddit(subreddit: &str) -> String {
    let lowered = subreddit.trim().to_lowercase();
    lowered.strip_prefix("r/").unwrap_or(&lowered).to_owned()
}

/// Trim a serde_json error message down to its substance: drop position
/// suffixes (we report our own line numbers) and backticks.
fn clean_serde_message(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    let msg = msg.split(" at line ").next().unwrap_or(&msg);
    msg.replace('`', "")
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    author: String,
    subreddit: String,
    created_utc: serde_json::Number,
    kind: RecordKind,
    #[serde(default)]
    title: Option<String>,
    body: String,
    #[serde(default)]
    score: i64,
}

fn validate_record(raw: RawRecord) -> Result<PostRecord, String> {
    let author = normalize_author(&raw.author);
    // Deleted markers keep their canonical spelling.
    let author = if author == DELETED_AUTHOR || raw.author.trim() == DELETED_AUTHOR {
        DELETED_AUTHOR.to_owned()
    } else {
        author
    };
    if author.is_empty() {
        return Err("empty author".to_owned());
    }
    let created_utc = raw
        .created_utc
        .as_i64()
        .or_else(|| raw.created_utc.as_f64().map(|f| f as i64))
        .ok_or_else(|| "created_utc is not a number".to_owned())?;
    if created_utc <= 0 {
        return Err(format!("created_utc must be positive, got {created_utc}"));
    }
    // Comments never carry a title.
    let title = match raw.kind {
        RecordKind::Comment => None,
        RecordKind::Post => raw.title,
    };
    Ok(PostRecord {
        id: raw.id,
        author,
        subreddit: normalize_subreddit(&raw.subreddit),
        created_utc,
        kind: raw.kind,
        title,
        body: raw.body,
        score: raw.score,
    })
}

fn parse_ndjson<T, R: Read>(
    path: &str,
    reader: R,
    mode: ParseMode,
    mut parse_line: impl FnMut(&str) -> Result<T, String>,
) -> Result<(Vec<T>, usize), IngestError> {
    let mut out = Vec::new();
    let mut skipped = 0usize;
    let mut offset = 0u64;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io { path: path.to_owned(), source })?;
        let line_no = idx + 1;
        let line_offset = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(v) => out.push(v),
            Err(message) => match mode {
                ParseMode::Strict => {
                    return Err(IngestError::Line {
                        path: path.to_owned(),
                        line: line_no,
                        offset: line_offset,
                        message,
                    });
                }
                ParseMode::Lenient => skipped += 1,
            },
        }
    }
    Ok((out, skipped))
}

fn parse_record_line(line: &str) -> Result<PostRecord, String> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| clean_serde_message(&e))?;
    validate_record(raw)
}

fn parse_user_line(line: &str) -> Result<UserMeta, String> {
    let mut meta: UserMeta =
        serde_json::from_str(line).map_err(|e| clean_serde_message(&e))?;
    meta.username = normalize_author(&meta.username);
    if meta.username.is_empty() {
        return Err("empty username".to_owned());
    }
    if let (Some(created), Some(snap)) = (meta.account_created_utc, meta.snapshot_utc) {
        if created > snap {
            return Err(format!(
                "account_created_utc {created} is after snapshot_utc {snap}"
            ));
        }
    }
    Ok(meta)
}

/// Parse one newline-delimited JSON records file.
pub fn read_records_file(
    path: &Path,
    mode: ParseMode,
) -> Result<(Vec<PostRecord>, usize), IngestError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io { path: display.clone(), source })?;
    parse_ndjson(&display, file, mode, parse_record_line)
}

/// Parse one newline-delimited JSON user metadata file.
pub fn read_user_meta_file(
    path: &Path,
    mode: ParseMode,
) -> Result<(Vec<UserMeta>, usize), IngestError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io { path: display.clone(), source })?;
    parse_ndjson(&display, file, mode, parse_user_line)
}

/// Load a corpus from record files plus optional user metadata files.
pub fn load_corpus(
    record_paths: &[impl AsRef<Path>],
    meta_paths: &[impl AsRef<Path>],
    mode: ParseMode,
) -> Result<Corpus, IngestError> {
    let mut records = Vec::new();
    let mut skipped = 0usize;
    let mut provenance = Vec::new();
    for p in record_paths {
        let (mut recs, s) = read_records_file(p.as_ref(), mode)?;
        records.append(&mut recs);
        skipped += s;
        provenance.push(p.as_ref().display().to_string());
    }
    let mut users = BTreeMap::new();
    for p in meta_paths {
        let (metas, s) = read_user_meta_file(p.as_ref(), mode)?;
        skipped += s;
        provenance.push(p.as_ref().display().to_string());
        for m in metas {
            users.insert(m.username.clone(), m);
        }
    }
    Ok(Corpus::new(records, users, provenance, skipped))
}

/// Parse a single records file into a corpus.
pub fn read_records(path: &Path, mode: ParseMode) -> Result<Corpus, IngestError> {
    load_corpus(&[path], &[] as &[&Path], mode)
}

/// Serialize records as newline-delimited JSON in record order.
pub fn write_records<W: Write>(records: &[PostRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Serialize user metadata as newline-delimited JSON.
pub fn write_user_meta<W: Write>(users: &[UserMeta], mut w: W) -> std::io::Result<()> {
    for u in users {
        serde_json::to_writer(&mut w, u)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Users with at least `min_each` records in each of the two communities.
/// Deleted/anonymous authors are never selected.
pub fn select_dual_users(
    corpus: &Corpus,
    community_a: &str,
    community_b: &str,
    min_each: u64,
) -> BTreeSet<String> {
    assert!(min_each >= 1, "min_each must be at least 1");
    let a = normalize_subreddit(community_a);
    let b = normalize_subreddit(community_b);
    let mut counts: HashMap<&str, (u64, u64)> = HashMap::new();
    for r in corpus.records() {
        if r.author == DELETED_AUTHOR {
            continue;
        }
        if r.subreddit == a {
            counts.entry(&r.author).or_default().0 += 1;
        } else if r.subreddit == b {
            counts.entry(&r.author).or_default().1 += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(_, (ca, cb))| *ca >= min_each && *cb >= min_each)
        .map(|(name, _)| name.to_owned())
        .collect()
}

/// Cohort activity statistics for the dual-user selection.
///
/// Statistics over an empty dual-user set are reported as absent, not zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    pub n_total_users: u64,
    pub n_dual_users: u64,
    /// n_dual_users / n_total_users; absent when no users were seen.
    pub dual_fraction: Option<f64>,
    /// Per-dual-user record count across both communities.
    pub per_user_activity: BTreeMap<String, u64>,
    pub mean: Option<f64>,
    /// Median of the per-user counts; for even-length lists this is the
    /// lower-middle element (counts are integers, so the median stays one).
    pub median: Option<f64>,
    /// Sample standard deviation (n-1 denominator); absent for n < 2.
    pub std: Option<f64>,
    /// Macro-averaged fraction of each dual user's activity in community A.
    pub share_a: Option<f64>,
    pub share_b: Option<f64>,
}

impl ActivityStats {
    /// Dual fraction rendered as a one-decimal percentage, e.g. "1.2%".
    pub fn dual_fraction_percent(&self) -> Option<String> {
        self.dual_fraction.map(format_percent)
    }
}

/// One-decimal percentage rendering of a fraction: 0.01247 -> "1.2%".
pub fn format_percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

fn lower_middle_median(sorted: &[u64]) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = if sorted.len() % 2 == 1 {
        sorted.len() / 2
    } else {
        sorted.len() / 2 - 1
    };
    sorted[idx] as f64
}

fn sample_std(values: &[u64], mean: f64) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Activity statistics over the dual cohort within the two communities.
pub fn activity_stats(
    corpus: &Corpus,
    dual_users: &BTreeSet<String>,
    community_a: &str,
    community_b: &str,
) -> ActivityStats {
    let a = normalize_subreddit(community_a);
    let b = normalize_subreddit(community_b);

    let mut total_users: BTreeSet<&str> = BTreeSet::new();
    let mut per_user: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in corpus.records() {
        if r.author == DELETED_AUTHOR || r.author.is_empty() {
            continue;
        }
        let in_a = r.subreddit == a;
        let in_b = r.subreddit == b;
        if !(in_a || in_b) {
            continue;
        }
        total_users.insert(&r.author);
        if dual_users.contains(&r.author) {
            let entry = per_user.entry(r.author.clone()).or_default();
            if in_a {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }

    let n_total_users = total_users.len() as u64;
    let n_dual_users = dual_users.len() as u64;
    let dual_fraction = (n_total_users > 0).then(|| n_dual_users as f64 / n_total_users as f64);

    let per_user_activity: BTreeMap<String, u64> =
        per_user.iter().map(|(u, (ca, cb))| (u.clone(), ca + cb)).collect();

    if per_user.is_empty() {
        return ActivityStats {
            n_total_users,
            n_dual_users,
            dual_fraction,
            per_user_activity,
            mean: None,
            median: None,
            std: None,
            share_a: None,
            share_b: None,
        };
    }

    let mut counts: Vec<u64> = per_user_activity.values().copied().collect();
    counts.sort_unstable();
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let median = lower_middle_median(&counts);
    let std = sample_std(&counts, mean);

    // Shares are averaged per-user first, then across users.
    let mut share_a_sum = 0.0;
    for (ca, cb) in per_user.values() {
        let total = (ca + cb) as f64;
        share_a_sum += *ca as f64 / total;
    }
    let share_a = share_a_sum / per_user.len() as f64;

    ActivityStats {
        n_total_users,
        n_dual_users,
        dual_fraction,
        per_user_activity,
        mean: Some(mean),
        median: Some(median),
        std,
        share_a: Some(share_a),
        share_b: Some(1.0 - share_a),
    }
}
