//! Detection of coordinated-influence indicators among users active in two
//! opposed discussion communities.
//!
//! The library is organized as a pipeline over a forum activity dump:
//!
//! 1. [`ingest`] parses newline-delimited JSON activity records, selects
//!    users active in both designated communities ("dual users"), and
//!    computes cohort activity statistics. It also carries a minimal HTTP
//!    fetch contract for pulling public user histories.
//! 2. [`textprep`] normalizes raw text into token streams and bag-of-words
//!    documents over a shared vocabulary.
//! 3. [`topics`] trains LDA by collapsed Gibbs sampling and exposes
//!    dominant topics, top keywords, token shares, inter-topic
//!    Jensen-Shannon distances, and a classical MDS projection.
//! 4. [`sentiment`] scores post polarity with a lexicon, folds posts into
//!    the all-user topic model, builds the user-topic sentiment matrix,
//!    and classifies positive / negative / low-variance outlier users
//!    against dual-cohort and global baselines.
//! 5. [`behavior`] computes per-user metadata heuristics (activity rate,
//!    karma ratios, email verification, MATTR lexical diversity, n-gram
//!    language identification) and aggregates anomaly flags.
//! 6. [`network`] builds the weighted community co-participation graph,
//!    marks nodes touched by flagged users, and exports GEXF/DOT/CSV.
//! 7. [`synth`] generates synthetic corpora with planted anomalous cohorts
//!    so the detectors can be validated against known ground truth.
//!
//! Every stage is deterministic for a fixed seed: all randomness flows from
//! seeded ChaCha streams, map-ordered containers are used for anything that
//! reaches an output file, and per-document work keys its RNG off stable
//! identifiers so data-parallel schedules cannot change results.

pub mod behavior;
pub mod ingest;
pub mod network;
pub mod seed;
pub mod sentiment;
pub mod synth;
pub mod textprep;
pub mod topics;
