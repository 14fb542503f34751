//! Per-user behavioral features and anomaly flags.
//!
//! Five heuristics cover account age vs activity, karma shape, email
//! verification, lexical diversity, and dominant language. Absent metadata
//! never raises a flag; each absent field is tracked so completeness can be
//! reported alongside the flags. Suspension status is carried through but
//! never counted as a flag.

mod language;

pub use language::{
    detect_language, shipped_profiles, LanguageProfile, MAX_NGRAM, MIN_TEXT_CHARS, PROFILE_SIZE,
    UNDETERMINED,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ingest::{PostRecord, UserMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorConfig {
    /// Max records per account-age day before F_AGE.
    pub theta_rate: f64,
    /// Max comment/link karma ratio before F_KARMA.
    pub theta_imb: f64,
    /// Activity floor for the low-link-karma arm of F_KARMA.
    pub theta_act: usize,
    /// Link karma ceiling for the low-link-karma arm of F_KARMA.
    pub theta_link: i64,
    /// MATTR floor under which F_LEX raises.
    pub theta_lex: f64,
    /// MATTR window in tokens.
    pub mattr_window: usize,
    /// Language code that does not raise F_LANG.
    pub expected_language: String,
    /// Token floor below which lexical diversity is not computed.
    pub min_tokens_for_lex: usize,
    /// Flags needed before a user counts as flagged.
    pub flag_threshold: usize,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        BehaviorConfig {
            theta_rate: 20.0,
            theta_imb: 200.0,
            theta_act: 100,
            theta_link: 10,
            theta_lex: 0.5,
            mattr_window: 100,
            expected_language: "en".to_owned(),
            min_tokens_for_lex: 50,
            flag_threshold: 2,
        }
    }
}

impl BehaviorConfig {
    fn assert_valid(&self) {
        assert!(
            self.theta_rate > 0.0
                && self.theta_imb > 0.0
                && self.theta_act > 0
                && self.theta_link > 0
                && self.theta_lex > 0.0
                && self.mattr_window > 0
                && self.min_tokens_for_lex > 0
                && self.flag_threshold >= 1,
            "behavior thresholds must be positive"
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    Age,
    Karma,
    Email,
    Lex,
    Lang,
}

impl Flag {
    pub const ALL: [Flag; 5] = [Flag::Age, Flag::Karma, Flag::Email, Flag::Lex, Flag::Lang];

    pub fn code(self) -> &'static str {
        match self {
            Flag::Age => "F_AGE",
            Flag::Karma => "F_KARMA",
            Flag::Email => "F_EMAIL",
            Flag::Lex => "F_LEX",
            Flag::Lang => "F_LANG",
        }
    }

    pub fn from_code(code: &str) -> Option<Flag> {
        Flag::ALL.into_iter().find(|f| f.code() == code)
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One user's computed features, raised flags, and which metadata fields
/// were absent (and therefore could not raise their flag).
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub username: String,
    pub account_age_days: Option<f64>,
    pub total_activity: usize,
    pub activity_rate: Option<f64>,
    pub link_karma: Option<i64>,
    pub comment_karma: Option<i64>,
    pub karma_ratio: Option<f64>,
    pub has_verified_email: Option<bool>,
    pub mattr: Option<f64>,
    pub detected_language: String,
    pub flags: BTreeSet<Flag>,
    pub is_flagged: bool,
    pub is_suspended: bool,
    pub missing_fields: BTreeSet<&'static str>,
}

impl BehaviorProfile {
    pub fn flag_count(&self) -> usize {
        self.flags.len()
    }
}

/// Moving-average type-token ratio. Texts shorter than the window fall back
/// to plain TTR; empty input has no value. Always in (0, 1] when defined.
pub fn mattr(tokens: &[String], window: usize) -> Option<f64> {
    assert!(window >= 1, "window must be at least 1");
    if tokens.is_empty() {
        return None;
    }
    let n = tokens.len();
    if n < window {
        let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
        return Some(distinct.len() as f64 / n as f64);
    }
    let mut counts: HashMap<&str, u32> = HashMap::new();
    for token in &tokens[..window] {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut sum = counts.len() as f64;
    for i in window..n {
        let out = tokens[i - window].as_str();
        match counts.get_mut(out) {
            Some(1) => {
                counts.remove(out);
            }
            Some(c) => *c -= 1,
            None => unreachable!("outgoing token was counted"),
        }
        *counts.entry(tokens[i].as_str()).or_insert(0) += 1;
        sum += counts.len() as f64;
    }
    Some(sum / ((n - window + 1) as f64 * window as f64))
}

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Compute one user's features and flags. `records` must all be authored
/// by the user; `tokens` is the user's pre-stopword token stream (used for
/// lexical diversity), while language detection runs on the records' raw
/// text.
pub fn compute_profile(
    user: &UserMeta,
    records: &[PostRecord],
    tokens: &[String],
    lang_profiles: &[LanguageProfile],
    config: &BehaviorConfig,
) -> BehaviorProfile {
    config.assert_valid();
    for r in records {
        assert_eq!(r.author, user.username, "record {} not authored by {}", r.id, user.username);
    }

    let mut missing: BTreeSet<&'static str> = BTreeSet::new();
    let mut track = |field: &'static str, present: bool| {
        if !present {
            missing.insert(field);
        }
    };
    track("account_created_utc", user.account_created_utc.is_some());
    track("snapshot_utc", user.snapshot_utc.is_some());
    track("link_karma", user.link_karma.is_some());
    track("comment_karma", user.comment_karma.is_some());
    track("has_verified_email", user.has_verified_email.is_some());
    track("is_suspended", user.is_suspended.is_some());

    let total_activity = records.len();
    let account_age_days = match (user.account_created_utc, user.snapshot_utc) {
        (Some(created), Some(snapshot)) => Some((snapshot - created) as f64 / SECONDS_PER_DAY),
        _ => None,
    };
    let activity_rate = account_age_days.map(|days| total_activity as f64 / days.max(1.0));
    let karma_ratio = match (user.comment_karma, user.link_karma) {
        (Some(comment), Some(link)) => Some(comment as f64 / (link + 1) as f64),
        _ => None,
    };

    let lex_tokens_suffice = tokens.len() >= config.min_tokens_for_lex;
    let mattr_value = if lex_tokens_suffice { mattr(tokens, config.mattr_window) } else { None };

    let text: String = {
        let parts: Vec<String> = records.iter().map(PostRecord::full_text).collect();
        parts.join("\n")
    };
    let detected_language = detect_language(&text, lang_profiles);

    let mut flags = BTreeSet::new();
    if activity_rate.is_some_and(|r| r > config.theta_rate) {
        flags.insert(Flag::Age);
    }
    let imbalanced = karma_ratio.is_some_and(|r| r > config.theta_imb);
    let active_low_link = user
        .link_karma
        .is_some_and(|link| total_activity > config.theta_act && link < config.theta_link);
    if imbalanced || active_low_link {
        flags.insert(Flag::Karma);
    }
    if user.has_verified_email == Some(false) {
        flags.insert(Flag::Email);
    }
    if mattr_value.is_some_and(|m| m < config.theta_lex) {
        flags.insert(Flag::Lex);
    }
    if detected_language != config.expected_language && detected_language != UNDETERMINED {
        flags.insert(Flag::Lang);
    }

    let is_flagged = flags.len() >= config.flag_threshold;
    BehaviorProfile {
        username: user.username.clone(),
        account_age_days,
        total_activity,
        activity_rate,
        link_karma: user.link_karma,
        comment_karma: user.comment_karma,
        karma_ratio,
        has_verified_email: user.has_verified_email,
        mattr: mattr_value,
        detected_language,
        flags,
        is_flagged,
        is_suspended: user.is_suspended.unwrap_or(false),
        missing_fields: missing,
    }
}

/// Corpus-level flag incidence and membership.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlagSummary {
    pub n_profiles: usize,
    /// Incidence per flag; every flag has an entry, possibly 0.
    pub per_flag: BTreeMap<Flag, usize>,
    /// Users with flag_count >= flag_threshold, sorted.
    pub flagged: Vec<String>,
    /// Users with no flags at all.
    pub n_zero_flags: usize,
    /// Suspended users, sorted; reported separately from flags.
    pub suspended: Vec<String>,
    /// How many profiles lacked each metadata field.
    pub missing_counts: BTreeMap<&'static str, usize>,
}

pub fn aggregate_flags(profiles: &[BehaviorProfile], config: &BehaviorConfig) -> FlagSummary {
    config.assert_valid();
    let mut summary = FlagSummary {
        n_profiles: profiles.len(),
        per_flag: Flag::ALL.iter().map(|f| (*f, 0)).collect(),
        ..FlagSummary::default()
    };
    for profile in profiles {
        for flag in &profile.flags {
            *summary.per_flag.get_mut(flag).expect("all flags present") += 1;
        }
        if profile.flag_count() >= config.flag_threshold {
            summary.flagged.push(profile.username.clone());
        }
        if profile.flags.is_empty() {
            summary.n_zero_flags += 1;
        }
        if profile.is_suspended {
            summary.suspended.push(profile.username.clone());
        }
        for field in &profile.missing_fields {
            *summary.missing_counts.entry(field).or_insert(0) += 1;
        }
    }
    summary.flagged.sort();
    summary.suspended.sort();
    summary
}

/// Flags export; absent metrics render as empty fields, flags as
/// semicolon-joined codes.
pub fn write_flags_csv<W: Write>(
    profiles: &[BehaviorProfile],
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "username",
        "account_age_days",
        "total_activity",
        "activity_rate",
        "link_karma",
        "comment_karma",
        "karma_ratio",
        "has_verified_email",
        "mattr",
        "detected_language",
        "flags",
        "flag_count",
        "is_flagged",
        "is_suspended",
    ])?;
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    for p in profiles {
        let flags: Vec<&str> = p.flags.iter().map(|f| f.code()).collect();
        w.write_record([
            p.username.clone(),
            opt(p.account_age_days),
            p.total_activity.to_string(),
            opt(p.activity_rate),
            opt(p.link_karma),
            opt(p.comment_karma),
            opt(p.karma_ratio),
            opt(p.has_verified_email),
            opt(p.mattr),
            p.detected_language.clone(),
            flags.join(";"),
            p.flag_count().to_string(),
            p.is_flagged.to_string(),
            p.is_suspended.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
