//! Settings resolution: command-line flags over environment over the TOML
//! config file over built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stereoscan_core::framework::NaPolicy;
use stereoscan_core::rater::{PromptVariant, DEFAULT_REPEATS};
use stereoscan_core::smells::DetectorConfig;

use crate::provider::{API_KEY_ENV, BASE_URL_ENV, DEFAULT_BASE_URL, DEFAULT_CONCURRENCY, DEFAULT_MODEL};

pub const MODEL_ENV: &str = "STEREOSCAN_MODEL";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error(transparent)]
    Detectors(#[from] stereoscan_core::smells::ConfigError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaterSection {
    pub model: Option<String>,
    pub base_url: Option<String>,
    pub repeats: Option<u32>,
    pub temperature: Option<f64>,
    pub concurrency: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub variants: Option<Vec<PromptVariant>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub na_policy: Option<NaPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub workers: Option<usize>,
    pub transcripts: Option<bool>,
}

/// Contents of `stereoscan.toml`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub rater: RaterSection,
    pub detectors: DetectorConfig,
    pub stats: StatsSection,
    pub analyze: AnalyzeSection,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), reason: e.to_string() })
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg: FileConfig = parse(path, &read(path)?)?;
        cfg.detectors.validate()?;
        Ok(cfg)
    }
}

/// A standalone detector file: `[co04] pink_fraction = 0.35` etc.
pub fn load_detector_config(path: &Path) -> Result<DetectorConfig, ConfigError> {
    let cfg: DetectorConfig = parse(path, &read(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub base_url: Option<String>,
    pub repeats: Option<u32>,
    pub temperature: Option<f64>,
    pub concurrency: Option<usize>,
    pub variants: Option<Vec<PromptVariant>>,
    pub na_policy: Option<NaPolicy>,
    pub workers: Option<usize>,
    pub transcripts: Option<bool>,
    pub detectors: Option<DetectorConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: String,
    pub base_url: String,
    pub api_key: Option<String>,
    pub repeats: u32,
    /// `None` keeps the provider default.
    pub temperature: Option<f64>,
    pub concurrency: usize,
    pub timeout_secs: u64,
    /// HTTP retries for 429, 5xx and transport errors.
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff_ms: u64,
    pub variants: Vec<PromptVariant>,
    pub na_policy: NaPolicy,
    pub workers: usize,
    /// `None` means: on for real providers, off for the mock.
    pub transcripts: Option<bool>,
    pub detectors: DetectorConfig,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

impl Settings {
    /// `env` looks up environment variables; pass `|k| std::env::var(k).ok()`
    /// in production.
    pub fn resolve(file: &FileConfig, env: &dyn Fn(&str) -> Option<String>, flags: &Overrides) -> Settings {
        let r = &file.rater;
        Settings {
            model: flags.model.clone().or_else(|| env(MODEL_ENV)).or_else(|| r.model.clone()).unwrap_or_else(|| DEFAULT_MODEL.into()),
            base_url: flags
                .base_url
                .clone()
                .or_else(|| env(BASE_URL_ENV))
                .or_else(|| r.base_url.clone())
                .unwrap_or_else(|| DEFAULT_BASE_URL.into()),
            api_key: env(API_KEY_ENV).filter(|k| !k.is_empty()),
            repeats: flags.repeats.or(r.repeats).unwrap_or(DEFAULT_REPEATS),
            temperature: flags.temperature.or(r.temperature),
            concurrency: flags.concurrency.or(r.concurrency).unwrap_or(DEFAULT_CONCURRENCY).max(1),
            timeout_secs: r.timeout_secs.unwrap_or(120),
            max_retries: r.max_retries.unwrap_or(4),
            backoff_ms: r.backoff_ms.unwrap_or(500),
            variants: flags.variants.clone().or_else(|| r.variants.clone()).unwrap_or_else(|| PromptVariant::ALL.to_vec()),
            na_policy: flags.na_policy.or(file.stats.na_policy).unwrap_or_default(),
            workers: flags.workers.or(file.analyze.workers).unwrap_or_else(default_workers).max(1),
            transcripts: flags.transcripts.or(file.analyze.transcripts),
            detectors: flags.detectors.unwrap_or(file.detectors),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_of(pairs: &'static [(&'static str, &'static str)]) -> impl Fn(&str) -> Option<String> {
        move |k| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())
    }

    #[test]
    fn defaults() {
        let s = Settings::resolve(&FileConfig::default(), &env_of(&[]), &Overrides::default());
        assert_eq!(s.model, DEFAULT_MODEL);
        assert_eq!(s.base_url, DEFAULT_BASE_URL);
        assert_eq!(s.repeats, 5);
        assert_eq!(s.temperature, None);
        assert_eq!(s.concurrency, 4);
        assert_eq!(s.variants, PromptVariant::ALL);
        assert_eq!(s.na_policy, NaPolicy::Exclude);
        assert_eq!(s.api_key, None);
    }

    #[test]
    fn precedence() {
        let file: FileConfig = toml::from_str(
            "[rater]\nmodel = \"file-model\"\nbase_url = \"http://file\"\nrepeats = 3\n[stats]\nna_policy = \"as_midpoint\"\n",
        )
        .unwrap();
        let env = env_of(&[(MODEL_ENV, "env-model"), (API_KEY_ENV, "k")]);
        let s = Settings::resolve(&file, &env, &Overrides::default());
        assert_eq!(s.model, "env-model");
        assert_eq!(s.base_url, "http://file");
        assert_eq!(s.repeats, 3);
        assert_eq!(s.na_policy, NaPolicy::AsMidpoint);
        assert_eq!(s.api_key.as_deref(), Some("k"));
        let flags = Overrides { model: Some("flag-model".into()), repeats: Some(7), ..Default::default() };
        let s = Settings::resolve(&file, &env, &flags);
        assert_eq!(s.model, "flag-model");
        assert_eq!(s.repeats, 7);
        let env = env_of(&[(BASE_URL_ENV, "http://env")]);
        assert_eq!(Settings::resolve(&file, &env, &Overrides::default()).base_url, "http://env");
    }

    #[test]
    fn detector_sections() {
        let file: FileConfig = toml::from_str("[detectors.co04]\npink_fraction = 0.5\n[detectors.pr01]\nenabled = false\n").unwrap();
        assert_eq!(file.detectors.co04.pink_fraction, 0.5);
        assert!(!file.detectors.pr01.enabled);
        assert_eq!(file.detectors.co02, Default::default());
        let standalone: DetectorConfig = toml::from_str("[co04]\npink_fraction = 0.35\n").unwrap();
        assert_eq!(standalone, DetectorConfig::default());
        assert!(toml::from_str::<FileConfig>("[rater]\nmodle = \"x\"\n").is_err());
        assert!(toml::from_str::<DetectorConfig>("[co04]\npink = 1\n").is_err());
    }
}
