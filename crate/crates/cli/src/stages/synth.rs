//! `bridgewatch synth`: generate a corpus with planted anomalies from a
//! TOML generator spec, in the same file formats ingest reads.

use std::io::Write as _;
use std::path::Path;

use bridgewatch::ingest::{write_records, write_user_meta};
use bridgewatch::synth::{generate, test_lexicon, SynthSpec};

use crate::error::CliError;
use crate::paths::{read_text, write_text, RunDir};

pub fn run(dir: &RunDir, spec_path: &Path) -> Result<(), CliError> {
    let text = read_text(spec_path)?;
    let spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("spec {}: {e}", spec_path.display())))?;
    let out = generate(&spec)?;

    let corpus_path = dir.corpus();
    let mut w = crate::paths::create(&corpus_path)?;
    write_records(&out.records, &mut w).map_err(|e| CliError::io_at(&corpus_path, e))?;
    w.flush().map_err(|e| CliError::io_at(&corpus_path, e))?;

    let users_path = dir.users();
    let mut w = crate::paths::create(&users_path)?;
    write_user_meta(&out.users, &mut w).map_err(|e| CliError::io_at(&users_path, e))?;
    w.flush().map_err(|e| CliError::io_at(&users_path, e))?;

    let mut truth = serde_json::to_string_pretty(&out.truth)
        .map_err(|e| CliError::Validation(format!("cannot serialize truth ledger: {e}")))?;
    truth.push('\n');
    write_text(&dir.truth(), &truth)?;
    write_text(&dir.synth_lexicon(), &test_lexicon().to_tsv())?;

    println!(
        "generated {} records for {} users ({} planted); truth ledger and test lexicon written",
        out.records.len(),
        out.users.len(),
        out.truth.planted.len()
    );
    Ok(())
}
