//! `bridgewatch flags`: behavior profiles and anomaly flags for every
//! dual user that has metadata.

use std::fmt::Write as _;

use bridgewatch::behavior::{
    aggregate_flags, compute_profile, shipped_profiles, write_flags_csv, Flag, FlagSummary,
};
use bridgewatch::ingest::{load_corpus, ParseMode, PostRecord};
use bridgewatch::textprep::tokenize;

use crate::artifacts::read_dual_users;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{create, require, write_text, RunDir};

fn summary_text(summary: &FlagSummary, no_meta: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "profiles: {}", summary.n_profiles);
    for flag in Flag::ALL {
        let _ = writeln!(out, "{}: {}", flag.code(), summary.per_flag[&flag]);
    }
    let _ = writeln!(out, "flagged: {}", join_or_none(&summary.flagged));
    let _ = writeln!(out, "zero flags: {}", summary.n_zero_flags);
    let _ = writeln!(out, "suspended: {}", join_or_none(&summary.suspended));
    let missing: Vec<String> =
        summary.missing_counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(out, "missing metadata fields: {}", join_or_none(&missing));
    let _ = writeln!(out, "dual users without metadata: {}", join_or_none(no_meta));
    out
}

fn join_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(", ")
    }
}

pub fn run(config: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    require(&dir.corpus(), "ingest")?;
    require(&dir.users(), "ingest")?;
    require(&dir.dual_users(), "ingest")?;

    let corpus = load_corpus(&[dir.corpus()], &[dir.users()], ParseMode::Strict)?;
    let dual = read_dual_users(&dir.dual_users())?;
    let lang_profiles = shipped_profiles();

    let mut profiles = Vec::new();
    let mut no_meta = Vec::new();
    for user in &dual {
        let Some(meta) = corpus.users().get(user) else {
            no_meta.push(user.clone());
            continue;
        };
        let records: Vec<PostRecord> =
            corpus.records().iter().filter(|r| &r.author == user).cloned().collect();
        let mut tokens = Vec::new();
        for r in &records {
            tokens.extend(tokenize(&r.full_text()));
        }
        profiles.push(compute_profile(meta, &records, &tokens, &lang_profiles, &config.behavior));
    }

    let summary = aggregate_flags(&profiles, &config.behavior);
    write_flags_csv(&profiles, create(&dir.flags_csv())?)?;
    let text = summary_text(&summary, &no_meta);
    write_text(&dir.flags_summary(), &text)?;
    print!("{text}");
    Ok(())
}
