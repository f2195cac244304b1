//! Run manifests and the output directory.
//!
//! The manifest is written before any result file. Everything in it is a function
//! of the config and the seed, so it is byte-identical across reruns; the
//! wall-clock record goes to a separate text file that the manifest names.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rsdp::rng::child_seed;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.txt";

pub const SEED_RULE: &str = "path p of an experiment with seed s and stream tag g draws from \
ChaCha8 keyed by SHA-256(s, g, p); path_seeds lists the first 8 key bytes (little endian) for the first tag";

/// One seeded batch inside a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub seed: u64,
    pub tags: Vec<String>,
    pub paths: usize,
    pub path_seeds: Vec<u64>,
}

impl Experiment {
    pub fn new(name: &str, seed: u64, tags: &[&str], paths: usize) -> Self {
        let first = tags.first().copied().unwrap_or("");
        Experiment {
            name: name.to_string(),
            seed,
            tags: tags.iter().map(|t| t.to_string()).collect(),
            paths,
            path_seeds: (0..paths as u64).map(|p| child_seed(seed, first, p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    /// SHA-256 over the experiment config and the model file.
    pub config_hash: String,
    pub base_seed: u64,
    pub seed_rule: String,
    pub experiments: Vec<Experiment>,
    /// File holding start time and elapsed seconds.
    pub wall_clock: String,
    pub outputs: Vec<String>,
}

/// An output directory with a fixed list of files.
pub struct Run {
    dir: PathBuf,
    planned: BTreeSet<String>,
    written: BTreeSet<String>,
    started: Instant,
    started_unix: f64,
}

impl Run {
    /// Writes the manifest; `outputs` must name every result file the command will write.
    pub fn begin(
        dir: &Path,
        command: &str,
        config_hash: &str,
        base_seed: u64,
        experiments: Vec<Experiment>,
        outputs: &[&str],
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let mut all: Vec<String> = vec![MANIFEST.into(), TIMING.into()];
        all.extend(outputs.iter().map(|s| s.to_string()));
        let manifest = RunManifest {
            command: command.to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            base_seed,
            seed_rule: SEED_RULE.to_string(),
            experiments,
            wall_clock: TIMING.to_string(),
            outputs: all.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(dir.join(MANIFEST), text + "\n")?;
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Ok(Run {
            dir: dir.to_path_buf(),
            planned: all.into_iter().collect(),
            written: [MANIFEST.to_string()].into_iter().collect(),
            started: Instant::now(),
            started_unix,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        assert!(self.planned.contains(name), "{name} is not listed in the manifest");
        fs::write(self.dir.join(name), contents)?;
        self.written.insert(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    /// Records wall-clock time. Files planned but never written are reported.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        let timing = format!(
            "started_unix_seconds = {:.3}\nelapsed_seconds = {:.3}\n",
            self.started_unix,
            self.started.elapsed().as_secs_f64()
        );
        self.write(TIMING, &timing)?;
        Ok(self.planned.difference(&self.written).cloned().collect())
    }
}
