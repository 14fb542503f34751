//! Model persistence and tabular exports.
//!
//! Models are stored as versioned JSON carrying the config, the vocabulary
//! hash, the raw count state, and the point estimates. Loading verifies the
//! vocabulary hash so a model can never be silently applied to phi rows
//! indexed by a different token list.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{top_keywords, topic_token_share, LdaModel, TopicError};
use crate::textprep::Vocabulary;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: LdaModel,
}

fn io_err(path: &Path, e: impl ToString) -> TopicError {
    TopicError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn save_model(model: &LdaModel, path: &Path) -> Result<(), TopicError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &ModelFile { version: MODEL_FORMAT_VERSION, model: model.clone() })
        .map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Load a model and verify it was trained over `vocab`.
pub fn load_model(path: &Path, vocab: &Vocabulary) -> Result<LdaModel, TopicError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let parsed: ModelFile = serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        TopicError::Malformed { path: path.display().to_string(), message: e.to_string() }
    })?;
    if parsed.version != MODEL_FORMAT_VERSION {
        return Err(TopicError::Version { expected: MODEL_FORMAT_VERSION, got: parsed.version });
    }
    let model = parsed.model;
    if model.vocab_hash != vocab.content_hash() || model.v != vocab.len() {
        return Err(TopicError::VocabMismatch {
            model_hash: model.vocab_hash,
            vocab_hash: vocab.content_hash(),
        });
    }
    Ok(model)
}

/// Per-topic summary rows: topic, rank, token, phi, token_share.
pub fn write_topic_summary<W: Write>(
    model: &LdaModel,
    vocab: &Vocabulary,
    top_n: usize,
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["topic", "rank", "token", "phi", "token_share"])?;
    let shares = topic_token_share(model);
    for topic in 0..model.config.k {
        let share = format!("{:.6}", shares[topic]);
        for (rank, (token, phi)) in top_keywords(model, vocab, topic, top_n).iter().enumerate() {
            w.write_record([
                topic.to_string(),
                (rank + 1).to_string(),
                token.clone(),
                format!("{phi:.6}"),
                share.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Square matrix export: header `topic,t0..t{n-1}`, one row per topic.
pub fn write_distance_matrix<W: Write>(
    dist: &[f64],
    n: usize,
    writer: W,
) -> Result<(), csv::Error> {
    assert_eq!(dist.len(), n * n);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["topic".to_owned()];
    header.extend((0..n).map(|j| format!("t{j}")));
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![i.to_string()];
        row.extend((0..n).map(|j| format!("{:.6}", dist[i * n + j])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Coordinate export: header `topic,x,y[,z,c3..]`, one row per point.
pub fn write_coordinates<W: Write>(
    coords: &[f64],
    n: usize,
    dim: usize,
    writer: W,
) -> Result<(), csv::Error> {
    assert_eq!(coords.len(), n * dim);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["topic".to_owned()];
    for e in 0..dim {
        header.push(match e {
            0 => "x".to_owned(),
            1 => "y".to_owned(),
            2 => "z".to_owned(),
            _ => format!("c{e}"),
        });
    }
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![i.to_string()];
        row.extend((0..dim).map(|e| format!("{:.6}", coords[i * dim + e])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{build_vocabulary, to_bow, TokenizedDoc};
    use crate::topics::{mds_project, topic_distance_matrix, train_lda, LdaConfig};

    fn fixture() -> (LdaModel, Vocabulary) {
        let docs: Vec<TokenizedDoc> = (0..6)
            .map(|i| TokenizedDoc {
                doc_id: format!("d{i}"),
                author: "a".to_owned(),
                subreddit: "s".to_owned(),
                tokens: ["china", "trade", "war", "tariff", "export"]
                    .iter()
                    .cycle()
                    .skip(i)
                    .take(12)
                    .map(|s| s.to_string())
                    .collect(),
            })
            .collect();
        let vocab = build_vocabulary(&docs, 1, 1.0);
        let bows: Vec<_> = docs.iter().map(|d| to_bow(d, &vocab)).collect();
        let config = LdaConfig { k: 2, iterations: 20, burn_in: 10, seed: 1, ..LdaConfig::default() };
        (train_lda(&bows, &vocab, &config).unwrap(), vocab)
    }

    #[test]
    fn save_load_round_trip_is_identity() {
        let (model, vocab) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path, &vocab).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn load_rejects_foreign_vocabulary() {
        let (model, _) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();

        let other_doc = TokenizedDoc {
            doc_id: "x".to_owned(),
            author: "a".to_owned(),
            subreddit: "s".to_owned(),
            tokens: vec!["different".to_owned(), "tokens".to_owned()],
        };
        let other_vocab = build_vocabulary(&[other_doc], 1, 1.0);
        assert!(matches!(
            load_model(&path, &other_vocab),
            Err(TopicError::VocabMismatch { .. })
        ));
    }

    #[test]
    fn load_rejects_unknown_version() {
        let (model, vocab) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let text = serde_json::to_string(&ModelFile { version: 99, model }).unwrap();
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_model(&path, &vocab),
            Err(TopicError::Version { got: 99, .. })
        ));
    }

    #[test]
    fn topic_summary_has_expected_shape() {
        let (model, vocab) = fixture();
        let mut buf = Vec::new();
        write_topic_summary(&model, &vocab, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "topic,rank,token,phi,token_share");
        assert_eq!(lines.len(), 1 + 2 * 3, "2 topics x 3 keywords");
        assert!(lines[1].starts_with("0,1,"));
    }

    #[test]
    fn matrix_exports_are_deterministic() {
        let (model, _) = fixture();
        let dist = topic_distance_matrix(&model);
        let coords = mds_project(&dist, 2, 2);

        let mut b1 = Vec::new();
        write_distance_matrix(&dist, 2, &mut b1).unwrap();
        let mut b2 = Vec::new();
        write_distance_matrix(&dist, 2, &mut b2).unwrap();
        assert_eq!(b1, b2);
        assert!(String::from_utf8(b1).unwrap().starts_with("topic,t0,t1\n"));

        let mut c1 = Vec::new();
        write_coordinates(&coords, 2, 2, &mut c1).unwrap();
        assert!(String::from_utf8(c1).unwrap().starts_with("topic,x,y\n"));
    }
}
