//! Readers for stage artifacts that downstream commands consume.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use bridgewatch::behavior::{BehaviorProfile, Flag};

use crate::error::CliError;
use crate::paths::read_text;

/// dual_users.txt: one username per line.
pub fn read_dual_users(path: &Path) -> Result<BTreeSet<String>, CliError> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// The slice of flags.csv later stages need: who carries which flags.
#[derive(Debug, Clone)]
pub struct FlagRow {
    pub username: String,
    pub flags: BTreeSet<Flag>,
    pub is_flagged: bool,
}

pub fn read_flag_rows(path: &Path) -> Result<Vec<FlagRow>, CliError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::io_at(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::io_at(path, e))?.clone();
    let col = |name: &str| -> Result<usize, CliError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Validation(format!("{}: missing column {name:?}", path.display()))
        })
    };
    let user_col = col("username")?;
    let flags_col = col("flags")?;
    let flagged_col = col("is_flagged")?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io_at(path, e))?;
        let field = |idx: usize| -> Result<&str, CliError> {
            record.get(idx).ok_or_else(|| {
                CliError::Validation(format!("{}: row {}: short record", path.display(), i + 2))
            })
        };
        let mut flags = BTreeSet::new();
        for code in field(flags_col)?.split(';').filter(|c| !c.is_empty()) {
            let flag = Flag::from_code(code).ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: row {}: unknown flag code {code:?}",
                    path.display(),
                    i + 2
                ))
            })?;
            flags.insert(flag);
        }
        let is_flagged = match field(flagged_col)? {
            "true" => true,
            "false" => false,
            other => {
                return Err(CliError::Validation(format!(
                    "{}: row {}: is_flagged must be true/false, got {other:?}",
                    path.display(),
                    i + 2
                )))
            }
        };
        rows.push(FlagRow { username: field(user_col)?.to_string(), flags, is_flagged });
    }
    Ok(rows)
}

/// Rebuild just enough of each profile for detection scoring: username and
/// flag set; the numeric features are not needed there.
pub fn rows_to_profiles(rows: &[FlagRow]) -> Vec<BehaviorProfile> {
    rows.iter()
        .map(|r| BehaviorProfile {
            username: r.username.clone(),
            account_age_days: None,
            total_activity: 0,
            activity_rate: None,
            link_karma: None,
            comment_karma: None,
            karma_ratio: None,
            has_verified_email: None,
            mattr: None,
            detected_language: String::new(),
            flags: r.flags.clone(),
            is_flagged: r.is_flagged,
            is_suspended: false,
            missing_fields: BTreeSet::new(),
        })
        .collect()
}

/// topics_{cohort}.csv rows regrouped per topic: (token share, top tokens).
pub fn read_topic_summary(path: &Path) -> Result<BTreeMap<usize, (f64, Vec<String>)>, CliError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::io_at(path, e))?;
    let mut topics: BTreeMap<usize, (f64, Vec<String>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io_at(path, e))?;
        let bad = || CliError::Validation(format!("{}: malformed summary row", path.display()));
        let topic: usize = record.get(0).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let token = record.get(2).ok_or_else(bad)?.to_string();
        let share: f64 = record.get(4).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let entry = topics.entry(topic).or_insert((share, Vec::new()));
        entry.1.push(token);
    }
    Ok(topics)
}
