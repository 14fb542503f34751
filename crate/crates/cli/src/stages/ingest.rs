//! `bridgewatch ingest`: parse raw record and metadata files, normalize
//! them into the run directory, and select dual-community users.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use bridgewatch::ingest::{
    activity_stats, load_corpus, normalize_subreddit, select_dual_users, write_records,
    write_user_meta, ActivityStats, Corpus, ParseMode,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{write_text, RunDir};

fn opt1(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"))
}

fn summary_text(config: &RunConfig, corpus: &Corpus, stats: &ActivityStats) -> String {
    let a = normalize_subreddit(&config.community_a);
    let b = normalize_subreddit(&config.community_b);
    let count_in = |sub: &str| corpus.records().iter().filter(|r| r.subreddit == sub).count();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "records: {} ({} malformed lines skipped)",
        corpus.records().len(),
        corpus.skipped_lines()
    );
    let _ = writeln!(out, "users with metadata: {}", corpus.users().len());
    let _ = writeln!(out, "community {a}: {} records", count_in(&a));
    let _ = writeln!(out, "community {b}: {} records", count_in(&b));
    let _ = writeln!(
        out,
        "dual users (>= {} in each): {} of {}{}",
        config.min_each,
        stats.n_dual_users,
        stats.n_total_users,
        stats
            .dual_fraction_percent()
            .map_or_else(String::new, |p| format!(" ({p})")),
    );
    let _ = writeln!(
        out,
        "activity per dual user: mean {}, median {}, std {}",
        opt1(stats.mean),
        opt1(stats.median),
        opt1(stats.std)
    );
    if let (Some(sa), Some(sb)) = (stats.share_a, stats.share_b) {
        let _ = writeln!(
            out,
            "activity share: {:.1}% {a}, {:.1}% {b}",
            sa * 100.0,
            sb * 100.0
        );
    }
    out
}

pub fn run(
    config: &RunConfig,
    dir: &RunDir,
    records: &[PathBuf],
    meta: &[PathBuf],
    mode: ParseMode,
) -> Result<(), CliError> {
    let corpus = load_corpus(records, meta, mode)?;
    if corpus.records().is_empty() {
        return Err(CliError::Validation("no records parsed from the inputs".to_string()));
    }
    let dual =
        select_dual_users(&corpus, &config.community_a, &config.community_b, config.min_each);
    let stats = activity_stats(&corpus, &dual, &config.community_a, &config.community_b);

    let corpus_path = dir.corpus();
    let mut w = crate::paths::create(&corpus_path)?;
    write_records(corpus.records(), &mut w).map_err(|e| CliError::io_at(&corpus_path, e))?;
    w.flush().map_err(|e| CliError::io_at(&corpus_path, e))?;

    let users_path = dir.users();
    let metas: Vec<_> = corpus.users().values().cloned().collect();
    let mut w = crate::paths::create(&users_path)?;
    write_user_meta(&metas, &mut w).map_err(|e| CliError::io_at(&users_path, e))?;
    w.flush().map_err(|e| CliError::io_at(&users_path, e))?;

    let mut list = dual.iter().cloned().collect::<Vec<_>>().join("\n");
    if !list.is_empty() {
        list.push('\n');
    }
    write_text(&dir.dual_users(), &list)?;

    let summary = summary_text(config, &corpus, &stats);
    write_text(&dir.ingest_summary(), &summary)?;
    print!("{summary}");
    Ok(())
}
