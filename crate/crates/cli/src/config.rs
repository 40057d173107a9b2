//! Key-value configuration file. Every long flag has a config key of the
//! same name (dashes or underscores both accepted); explicit flags always
//! win over file values.
//!
//! ```text
//! # example
//! resize-side = 64
//! seed = 7
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected 'key = value'",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(normalize(key), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag value if given, else the config-file value, else the default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> CliResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(&normalize(key)) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("config key '{key}': cannot parse '{raw}'"))),
            None => Ok(default),
        }
    }

    /// As `resolve`, but with no default: stays None when absent.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(&normalize(key)) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key '{key}': cannot parse '{raw}'"))),
            None => Ok(None),
        }
    }
}
