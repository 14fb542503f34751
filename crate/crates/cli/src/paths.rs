//! Artifact layout inside a run directory. Every stage reads and writes
//! through these accessors so file names stay consistent across commands.

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn ensure(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io_at(&self.root, e))
    }

    pub fn config_echo(&self) -> PathBuf {
        self.root.join("config_effective.toml")
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.ndjson")
    }

    pub fn users(&self) -> PathBuf {
        self.root.join("users.ndjson")
    }

    pub fn dual_users(&self) -> PathBuf {
        self.root.join("dual_users.txt")
    }

    pub fn ingest_summary(&self) -> PathBuf {
        self.root.join("ingest_summary.txt")
    }

    pub fn model(&self, cohort: &str) -> PathBuf {
        self.root.join(format!("model_{cohort}.json"))
    }

    pub fn topic_summary(&self, cohort: &str) -> PathBuf {
        self.root.join(format!("topics_{cohort}.csv"))
    }

    pub fn distance_matrix(&self, cohort: &str) -> PathBuf {
        self.root.join(format!("distance_{cohort}.csv"))
    }

    pub fn coordinates(&self, cohort: &str) -> PathBuf {
        self.root.join(format!("coords_{cohort}.csv"))
    }

    pub fn matrix(&self) -> PathBuf {
        self.root.join("matrix_dual.csv")
    }

    pub fn baselines(&self) -> PathBuf {
        self.root.join("baselines.csv")
    }

    pub fn outliers_csv(&self) -> PathBuf {
        self.root.join("outliers.csv")
    }

    pub fn outliers_json(&self) -> PathBuf {
        self.root.join("outliers.json")
    }

    pub fn flags_csv(&self) -> PathBuf {
        self.root.join("flags.csv")
    }

    pub fn flags_summary(&self) -> PathBuf {
        self.root.join("flags_summary.txt")
    }

    pub fn gexf(&self) -> PathBuf {
        self.root.join("graph.gexf")
    }

    pub fn dot(&self) -> PathBuf {
        self.root.join("graph.dot")
    }

    pub fn edges_csv(&self) -> PathBuf {
        self.root.join("edges.csv")
    }

    pub fn nodes_csv(&self) -> PathBuf {
        self.root.join("nodes.csv")
    }

    pub fn degrees(&self) -> PathBuf {
        self.root.join("degrees.txt")
    }

    pub fn coverage(&self) -> PathBuf {
        self.root.join("coverage.txt")
    }

    pub fn truth(&self) -> PathBuf {
        self.root.join("truth.json")
    }

    pub fn synth_lexicon(&self) -> PathBuf {
        self.root.join("lexicon.tsv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.md")
    }
}

/// Stage precondition: the artifact must exist, otherwise tell the user
/// which command produces it.
pub fn require(path: &Path, produced_by: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "missing {}: run `bridgewatch {produced_by}` first",
            path.display()
        )))
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io_at(path, e))?))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| CliError::io_at(path, e))?;
    w.flush().map_err(|e| CliError::io_at(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io_at(path, e))
}
