//! `bridgewatch sentiment`: score every record, assign each scored post a
//! dominant topic by folding it into the all-users model, and detect
//! outlier users against the dual and global baselines.

use bridgewatch::ingest::{read_records, ParseMode};
use bridgewatch::seed::derive_seed;
use bridgewatch::sentiment::{
    assign_topics, build_matrix, compute_baselines, detect_outliers, score_posts,
    write_baselines_csv, write_matrix_csv, write_outlier_csv, Cohort, SentimentLexicon,
};
use bridgewatch::textprep::{build_vocabulary, to_bow};
use bridgewatch::topics::load_model;

use crate::artifacts::read_dual_users;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{create, require, write_text, RunDir};
use crate::stages::{model_records, tokenize_records};

pub fn run(config: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    require(&dir.corpus(), "ingest")?;
    require(&dir.dual_users(), "ingest")?;
    require(&dir.model("all"), "topics --cohort all")?;

    let corpus = read_records(&dir.corpus(), ParseMode::Strict)?;
    let dual = read_dual_users(&dir.dual_users())?;
    let lexicon = match &config.lexicon {
        Some(path) => SentimentLexicon::from_file(path)?,
        None => SentimentLexicon::shipped(),
    };

    // The topic space comes from the all-users model, so its vocabulary is
    // rebuilt with the same document filter the topics stage used.
    let all_docs = tokenize_records(&model_records(
        corpus.records(),
        None,
        config.include_comments,
    ));
    let vocab = build_vocabulary(&all_docs, config.min_df, config.max_df_ratio);
    let model = load_model(&dir.model("all"), &vocab)?;

    let mut posts = score_posts(corpus.records(), &lexicon);
    let post_docs = tokenize_records(&corpus.records().iter().collect::<Vec<_>>());
    let bows: Vec<_> = post_docs.iter().map(|d| to_bow(d, &vocab)).collect();
    let stats = assign_topics(
        &mut posts,
        &bows,
        &model,
        &vocab,
        derive_seed(config.seed, "sentiment-assign"),
    )?;

    let dual_posts: Vec<_> =
        posts.iter().filter(|p| dual.contains(&p.author)).cloned().collect();
    let matrix = build_matrix(&dual_posts, Cohort::Dual, Some(&dual));
    let baselines = compute_baselines(&posts, &dual_posts);
    let report = detect_outliers(&matrix, &baselines, &config.outliers);

    write_matrix_csv(&matrix, create(&dir.matrix())?)?;
    write_baselines_csv(&baselines, create(&dir.baselines())?)?;
    write_outlier_csv(&report, create(&dir.outliers_csv())?)?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(format!("cannot serialize outliers: {e}")))?;
    json.push('\n');
    write_text(&dir.outliers_json(), &json)?;

    println!(
        "scored {} posts ({} assigned a topic, {} fully out of vocabulary)",
        posts.len(),
        stats.assigned,
        stats.excluded_all_oov
    );
    println!(
        "dual matrix: {} users, {} cells; outlier rows: {}",
        matrix.users().len(),
        matrix.len(),
        report.rows.len()
    );
    Ok(())
}
