//! One module per subcommand plus the document-preparation helper both
//! topic stages and the sentiment stage must agree on.

pub mod flags;
pub mod graph;
pub mod ingest;
pub mod report;
pub mod sentiment;
pub mod synth;
pub mod topics;

use std::collections::BTreeSet;

use bridgewatch::ingest::{PostRecord, RecordKind};
use bridgewatch::textprep::{default_stopwords, preprocess, Lemmatizer, TokenizedDoc};

/// Select the records a model corpus is built from. The same filter must
/// be applied wherever that model's vocabulary is reconstructed.
pub fn model_records<'a>(
    records: &'a [PostRecord],
    users: Option<&BTreeSet<String>>,
    include_comments: bool,
) -> Vec<&'a PostRecord> {
    records
        .iter()
        .filter(|r| include_comments || r.kind == RecordKind::Post)
        .filter(|r| users.map_or(true, |set| set.contains(&r.author)))
        .collect()
}

pub fn tokenize_records(records: &[&PostRecord]) -> Vec<TokenizedDoc> {
    let stoplist = default_stopwords();
    let lemmatizer = Lemmatizer::shipped();
    records
        .iter()
        .map(|r| TokenizedDoc {
            doc_id: r.id.clone(),
            author: r.author.clone(),
            subreddit: r.subreddit.clone(),
            tokens: preprocess(&r.full_text(), &stoplist, &lemmatizer),
        })
        .collect()
}
