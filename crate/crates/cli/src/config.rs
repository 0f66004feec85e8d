//! Settings resolution. Command-line flags win over the config file, which
//! wins over the environment.
//!
//! The config file holds `key = value` lines; `#` starts a comment. Keys
//! are `store`, `schema`, `mappings` and `format`. Relative paths are taken
//! relative to the file's own directory.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const DEFAULT_CONFIG: &str = ".lcag.conf";
pub const DEFAULT_STORE: &str = "lcag.store";
pub const STORE_ENV: &str = "LCAG_STORE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub store: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub mappings: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn parse_config(text: &str, base: &Path) -> Result<FileConfig> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            bail!("line {}: {key} has no value", i + 1);
        }
        let path = || base.join(value);
        match key {
            "store" => cfg.store = Some(path()),
            "schema" => cfg.schema = Some(path()),
            "mappings" => cfg.mappings = Some(path()),
            "format" => {
                cfg.format = Some(match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => bail!("line {}: format must be csv or json, not {other:?}", i + 1),
                })
            }
            other => bail!("line {}: unknown key {other:?}", i + 1),
        }
    }
    Ok(cfg)
}

/// Reads `explicit`, or the default file in the working directory when it
/// exists.
pub fn load_config(explicit: Option<&Path>) -> Result<FileConfig> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
        None => return Ok(FileConfig::default()),
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).with_context(|| format!("in config {}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub store_path: PathBuf,
    pub schema_path: Option<PathBuf>,
    pub mappings_path: Option<PathBuf>,
    pub format: Format,
}

pub fn resolve(flag_store: Option<PathBuf>, file: FileConfig, env_store: Option<String>) -> Result<CliConfig> {
    let store_path = flag_store
        .or(file.store)
        .or(env_store.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
    let parent = match store_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("store directory {} does not exist", parent.display());
    }
    Ok(CliConfig {
        store_path,
        schema_path: file.schema,
        mappings_path: file.mappings,
        format: file.format.unwrap_or(Format::Csv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let cfg =
            parse_config("# comment\nstore = data/g.store\n\nformat=json # trailing\n", Path::new("/etc/x")).unwrap();
        assert_eq!(cfg.store, Some(PathBuf::from("/etc/x/data/g.store")));
        assert_eq!(cfg.format, Some(Format::Json));
        assert!(parse_config("colour = red", Path::new(".")).is_err());
        assert!(parse_config("store", Path::new(".")).is_err());
        assert!(parse_config("format = xml", Path::new(".")).is_err());
    }

    #[test]
    fn precedence() {
        let file = FileConfig { store: Some("from-file".into()), ..Default::default() };
        let env = Some("from-env".to_string());
        assert_eq!(resolve(Some("flag".into()), file.clone(), env.clone()).unwrap().store_path, PathBuf::from("flag"));
        assert_eq!(resolve(None, file, env.clone()).unwrap().store_path, PathBuf::from("from-file"));
        assert_eq!(resolve(None, FileConfig::default(), env).unwrap().store_path, PathBuf::from("from-env"));
        assert_eq!(resolve(None, FileConfig::default(), None).unwrap().store_path, PathBuf::from(DEFAULT_STORE));
        assert!(resolve(Some("/no/such/dir/s".into()), FileConfig::default(), None).is_err());
    }
}
