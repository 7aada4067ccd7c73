use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use toml::{Table, Value};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Everything needed to replay a run; written before any computation.
pub struct RunManifest {
    subcommand: &'static str,
    out: PathBuf,
    seed: Option<u64>,
    inputs: Vec<String>,
    arguments: Table,
    config: Option<Table>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, out: &Path) -> Self {
        Self {
            subcommand,
            out: out.to_owned(),
            seed: None,
            inputs: Vec::new(),
            arguments: Table::new(),
            config: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn arg(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.arguments.insert(key.to_owned(), value.into());
        self
    }

    pub fn config(mut self, resolved: &str) -> Result<Self> {
        self.config = Some(
            resolved
                .parse()
                .context("resolved config is not valid TOML")?,
        );
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("subcommand".into(), self.subcommand.into());
        t.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
        if let Some(seed) = self.seed {
            t.insert("seed".into(), Value::Integer(seed as i64));
        }
        t.insert("output_dir".into(), self.out.display().to_string().into());
        t.insert(
            "inputs".into(),
            Value::Array(self.inputs.iter().cloned().map(Value::from).collect()),
        );
        t.insert("arguments".into(), Value::Table(self.arguments.clone()));
        if let Some(c) = &self.config {
            t.insert("config".into(), Value::Table(c.clone()));
        }
        toml::to_string(&t).expect("manifest serializes")
    }

    /// Creates the output directory and writes `manifest.toml` into it.
    pub fn write(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }
}
