use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes tables and reports into one directory; every file starts with the
/// configuration of the run.
pub struct Output {
    dir: PathBuf,
    header: String,
    config: serde_json::Value,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header: config.header(),
            config: serde_json::to_value(config)?,
            written: Vec::new(),
        })
    }

    /// CSV with `#` comment lines echoing the configuration, then a column row.
    pub fn csv<I>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut text = self.header.clone();
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                write!(text, "{v:e}").expect("writing to a string");
            }
            text.push('\n');
        }
        self.write(name, text)
    }

    /// JSON object {"config": ..., "<key>": value}.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, value: &T) -> Result<(), CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("config".into(), self.config.clone());
        doc.insert(key.into(), serde_json::to_value(value)?);
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
        text.push('\n');
        self.write(name, text)
    }

    fn write(&mut self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
