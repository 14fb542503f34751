//! `bridgewatch report`: stitch the artifacts present in the run directory
//! into one Markdown report. Stages that have not run are noted, not
//! errors; the report renders whatever exists.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use bridgewatch::sentiment::OutlierReport;
use bridgewatch::synth::{evaluate_detection, DetectorOutput, TruthLedger};

use crate::artifacts::{read_dual_users, read_flag_rows, read_topic_summary, rows_to_profiles};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{read_text, write_text, RunDir};

const NOT_RUN: &str = "_stage not run_\n";

fn inline_text(out: &mut String, path: &Path) -> Result<bool, CliError> {
    if !path.is_file() {
        out.push_str(NOT_RUN);
        return Ok(false);
    }
    out.push_str("```\n");
    out.push_str(&read_text(path)?);
    out.push_str("```\n");
    Ok(true)
}

fn topics_section(out: &mut String, dir: &RunDir) -> Result<(), CliError> {
    let mut any = false;
    for cohort in ["dual", "all"] {
        let path = dir.topic_summary(cohort);
        if !path.is_file() {
            continue;
        }
        any = true;
        let topics = read_topic_summary(&path)?;
        let _ = writeln!(out, "### Cohort {cohort}\n");
        out.push_str("| Topic | Token share | Top terms |\n|---|---|---|\n");
        for (topic, (share, tokens)) in &topics {
            let _ = writeln!(out, "| {topic} | {:.1}% | {} |", share * 100.0, tokens.join(", "));
        }
        out.push('\n');
    }
    if !any {
        out.push_str(NOT_RUN);
    }
    Ok(())
}

fn outliers_section(out: &mut String, dir: &RunDir) -> Result<(), CliError> {
    let path = dir.outliers_csv();
    if !path.is_file() {
        out.push_str(NOT_RUN);
        return Ok(());
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| CliError::io_at(&path, e))?;
    let headers = reader.headers().map_err(|e| CliError::io_at(&path, e))?.clone();
    let _ = writeln!(out, "| {} |", headers.iter().collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(headers.len()));
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io_at(&path, e))?;
        let _ = writeln!(out, "| {} |", record.iter().collect::<Vec<_>>().join(" | "));
        rows += 1;
    }
    if rows == 0 {
        out.push_str("\nNo outlier groups met the thresholds.\n");
    }
    out.push('\n');
    Ok(())
}

fn graph_section(out: &mut String, dir: &RunDir) -> Result<(), CliError> {
    if !dir.coverage().is_file() {
        out.push_str(NOT_RUN);
        return Ok(());
    }
    out.push_str(&read_text(&dir.coverage())?);
    if dir.degrees().is_file() {
        out.push_str("\nHighest-degree subreddits:\n\n");
        for line in read_text(&dir.degrees())?.lines() {
            if let Some((name, degree)) = line.split_once('\t') {
                let _ = writeln!(out, "- {name} (degree {degree})");
            }
        }
    }
    out.push('\n');
    Ok(())
}

fn evaluation_section(out: &mut String, dir: &RunDir) -> Result<(), CliError> {
    let truth_path = dir.truth();
    if !truth_path.is_file() {
        out.push_str("_no truth ledger in this run directory_\n");
        return Ok(());
    }
    let truth: TruthLedger = serde_json::from_str(&read_text(&truth_path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", truth_path.display())))?;

    let outliers: OutlierReport = if dir.outliers_json().is_file() {
        serde_json::from_str(&read_text(&dir.outliers_json())?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", dir.outliers_json().display())))?
    } else {
        OutlierReport::default()
    };
    let profiles = if dir.flags_csv().is_file() {
        rows_to_profiles(&read_flag_rows(&dir.flags_csv())?)
    } else {
        Vec::new()
    };
    let dual = if dir.dual_users().is_file() {
        read_dual_users(&dir.dual_users())?
    } else {
        BTreeSet::new()
    };

    let scores = evaluate_detection(
        &truth,
        &DetectorOutput { outliers: &outliers, profiles: &profiles, dual_users: &dual },
    );
    if scores.is_empty() {
        out.push_str("The truth ledger contains no planted cohorts.\n");
        return Ok(());
    }
    out.push_str("| Kind | Planted | Detected | True positives | Precision | Recall |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for (kind, s) in &scores {
        let precision =
            s.precision.map_or_else(|| "n/a".to_string(), |p| format!("{p:.2}"));
        let _ = writeln!(
            out,
            "| {kind} | {} | {} | {} | {precision} | {:.2} |",
            s.planted, s.detected, s.true_positives, s.recall
        );
    }
    out.push('\n');
    Ok(())
}

pub fn run(config: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("# Run report\n\n");
    let _ = writeln!(
        out,
        "generated: {}\n",
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    );
    let _ = writeln!(
        out,
        "Configuration: `config_effective.toml` (seed {}, communities {} / {}).\n",
        config.seed, config.community_a, config.community_b
    );

    out.push_str("## Ingestion\n\n");
    inline_text(&mut out, &dir.ingest_summary())?;
    out.push('\n');

    out.push_str("## Topics\n\n");
    topics_section(&mut out, dir)?;

    out.push_str("## Sentiment outliers\n\n");
    outliers_section(&mut out, dir)?;

    out.push_str("## Behavior flags\n\n");
    inline_text(&mut out, &dir.flags_summary())?;
    out.push('\n');

    out.push_str("## Co-participation graph\n\n");
    graph_section(&mut out, dir)?;

    out.push_str("## Planted-anomaly evaluation\n\n");
    evaluation_section(&mut out, dir)?;

    write_text(&dir.report(), &out)?;
    println!("report written to {}", dir.report().display());
    Ok(())
}
