use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    CnnAttention,
    CnnLstm,
    Lstm,
    #[serde(rename = "bilstm")]
    BiLstm,
    #[serde(rename = "bilstm_attention")]
    BiLstmAttention,
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::CnnAttention,
        Architecture::CnnLstm,
        Architecture::Lstm,
        Architecture::BiLstm,
        Architecture::BiLstmAttention,
        Architecture::Gru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::CnnAttention => "cnn_attention",
            Architecture::CnnLstm => "cnn_lstm",
            Architecture::Lstm => "lstm",
            Architecture::BiLstm => "bilstm",
            Architecture::BiLstmAttention => "bilstm_attention",
            Architecture::Gru => "gru",
        }
    }

    /// Human-readable row label, e.g. `BiLSTM + Attention`.
    pub fn display_name(self) -> &'static str {
        match self {
            Architecture::CnnAttention => "CNN + Attention",
            Architecture::CnnLstm => "CNN + LSTM",
            Architecture::Lstm => "LSTM",
            Architecture::BiLstm => "BiLSTM",
            Architecture::BiLstmAttention => "BiLSTM + Attention",
            Architecture::Gru => "GRU",
        }
    }

    /// Recurrent width of the reference configuration.
    pub fn reference_hidden(self) -> usize {
        match self {
            Architecture::Lstm | Architecture::Gru => 128,
            _ => 64,
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Architecture::name).join(", ")
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownArchitecture {
                name: s.to_owned(),
                valid: Self::valid_names(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    StaticBe,
    WordVectors,
    Concat,
}

impl EmbeddingSource {
    pub fn name(self) -> &'static str {
        match self {
            EmbeddingSource::StaticBe => "static_be",
            EmbeddingSource::WordVectors => "word_vectors",
            EmbeddingSource::Concat => "concat",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            EmbeddingSource::StaticBe => "static BE",
            EmbeddingSource::WordVectors => "word vectors",
            EmbeddingSource::Concat => "concatenated vectors",
        }
    }
}

impl FromStr for EmbeddingSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "static_be" => Ok(EmbeddingSource::StaticBe),
            "word_vectors" => Ok(EmbeddingSource::WordVectors),
            "concat" => Ok(EmbeddingSource::Concat),
            _ => Err(Error::InvalidInput(format!(
                "unknown embedding source `{s}`; valid: static_be, word_vectors, concat"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub embedding_source: EmbeddingSource,
    /// Tokens kept per example after truncation/padding.
    pub max_len: usize,
    /// Units per recurrent direction.
    pub hidden: usize,
    pub conv_filters: usize,
    pub conv_width: usize,
    pub pool_size: usize,
    /// Attention scoring width; defaults to the width of its input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_units: Option<usize>,
    pub dropout: f64,
    pub trainable_embeddings: bool,
    /// When set, the embedding matrix must have exactly this many columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn reference(architecture: Architecture) -> Self {
        Self {
            architecture,
            embedding_source: EmbeddingSource::StaticBe,
            max_len: 64,
            hidden: architecture.reference_hidden(),
            conv_filters: 64,
            conv_width: 3,
            pool_size: 2,
            attention_units: None,
            dropout: 0.2,
            trainable_embeddings: false,
            embedding_dim: None,
            seed: 0,
        }
    }

    /// Same layer sequence at gradient-check scale.
    pub fn tiny(architecture: Architecture) -> Self {
        Self {
            max_len: 6,
            hidden: 4,
            conv_filters: 4,
            trainable_embeddings: true,
            ..Self::reference(architecture)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_len", self.max_len),
            ("hidden", self.hidden),
            ("conv_filters", self.conv_filters),
            ("conv_width", self.conv_width),
            ("pool_size", self.pool_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if self.attention_units == Some(0) {
            return Err(Error::InvalidInput(
                "attention_units must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Format(format!("model config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
