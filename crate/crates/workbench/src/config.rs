//! TOML configuration file. Command line flags take precedence over it.
//!
//! ```toml
//! seed = 7
//! manifest = "corpus/manifest.ndjson"
//! port = 8080
//!
//! [encoder]
//! command = "ffmpeg -i {input}/%06d.png -crf {crf} {output}/%06d.png"
//!
//! [serve]
//! ratings = "ratings.csv"
//! sessions = "sessions.ndjson"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::encoder::EncoderConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub port: Option<u16>,
    pub encoder: Option<EncoderConfig>,
    #[serde(default)]
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    /// Ratings CSV the service appends to.
    pub ratings: Option<PathBuf>,
    /// Session log, one JSON record per session.
    pub sessions: Option<PathBuf>,
    /// Address to bind; defaults to 127.0.0.1.
    pub host: Option<String>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| e.context(path.display()))
    }
}

/// `flag`, else the config value, else an input error naming the flag.
pub fn required<T: Clone>(flag: Option<T>, config: &Option<T>, name: &str) -> CliResult<T> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| CliError::input(format!("--{name} is required (flag or config file)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let c = Config::parse(
            "seed = 7\nport = 9000\n[encoder]\ncommand = \"cp -r {input} {output}\"\n[serve]\nratings = \"r.csv\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.port, Some(9000));
        assert_eq!(c.serve.ratings, Some(PathBuf::from("r.csv")));
        assert!(c.encoder.is_some());
    }

    #[test]
    fn flags_win() {
        let c = Config::parse("seed = 7").unwrap();
        assert_eq!(required(Some(3), &c.seed, "seed").unwrap(), 3);
        assert_eq!(required(None, &c.seed, "seed").unwrap(), 7);
        assert_eq!(
            required::<u64>(None, &None, "seed")
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(Config::parse("sede = 7").is_err());
    }
}
