//! `bridgewatch topics`: train the cohort's topic model and export the
//! keyword summary, inter-topic distances, and 2-d projection.

use bridgewatch::ingest::{read_records, ParseMode};
use bridgewatch::seed::derive_seed;
use bridgewatch::textprep::{build_vocabulary, to_bow};
use bridgewatch::topics::{
    mds_project, perplexity, save_model, topic_distance_matrix, train_lda, write_coordinates,
    write_distance_matrix, write_topic_summary,
};

use crate::artifacts::read_dual_users;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::{create, require, RunDir};
use crate::stages::{model_records, tokenize_records};
use crate::Cohort;

pub fn run(config: &RunConfig, dir: &RunDir, cohort: Cohort) -> Result<(), CliError> {
    require(&dir.corpus(), "ingest")?;
    let corpus = read_records(&dir.corpus(), ParseMode::Strict)?;

    let dual;
    let users = match cohort {
        Cohort::Dual => {
            require(&dir.dual_users(), "ingest")?;
            dual = read_dual_users(&dir.dual_users())?;
            Some(&dual)
        }
        Cohort::All => None,
    };
    let records = model_records(corpus.records(), users, config.include_comments);
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "cohort {cohort} has no documents to model"
        )));
    }
    let docs = tokenize_records(&records);
    let vocab = build_vocabulary(&docs, config.min_df, config.max_df_ratio);
    if vocab.len() == 0 {
        return Err(CliError::Validation(
            "vocabulary is empty after pruning; lower min_df or raise max_df_ratio".to_string(),
        ));
    }
    let bows: Vec<_> = docs.iter().map(|d| to_bow(d, &vocab)).collect();

    let mut lda = match cohort {
        Cohort::Dual => config.topics_dual.clone(),
        Cohort::All => config.topics_all.clone(),
    };
    lda.seed = derive_seed(config.seed, &format!("topics-{cohort}"));
    let model = train_lda(&bows, &vocab, &lda)?;

    let label = cohort.label();
    save_model(&model, &dir.model(label))?;
    write_topic_summary(&model, &vocab, config.top_words, create(&dir.topic_summary(label))?)?;
    let dist = topic_distance_matrix(&model);
    write_distance_matrix(&dist, lda.k, create(&dir.distance_matrix(label))?)?;
    let coords = mds_project(&dist, lda.k, 2);
    write_coordinates(&coords, lda.k, 2, create(&dir.coordinates(label))?)?;

    let perp = perplexity(&model, &bows)?;
    println!(
        "cohort {cohort}: trained {} topics on {} docs (vocabulary {}); perplexity {perp:.1}",
        lda.k,
        bows.len(),
        vocab.len()
    );
    Ok(())
}
