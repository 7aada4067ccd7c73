//! Labeled text ingestion, tokenization, vocabulary and sequence encoding,
//! dataset balance, and stratified fold assignment.

mod balance;
mod folds;
mod vocab;

use std::path::Path;

pub use balance::{balance, BalanceReport};
pub use folds::{stratified_folds, stratified_holdout, FoldPlan};
pub use vocab::{build_vocabulary, encode, EncodedExample, Vocabulary, PAD_INDEX, UNK_INDEX};

use crate::error::{Error, Result};

pub const TEXT_COLUMN: &str = "comment";
pub const LABEL_COLUMN: &str = "isHate";
pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DELIMITER: u8 = b';';

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub text: String,
    /// 1 = hate, 0 = non-hate.
    pub label: u8,
    /// Zero-based ordinal among the data rows of the input file.
    pub source_row: usize,
}

impl LabeledExample {
    pub fn new(text: impl Into<String>, label: u8, source_row: usize) -> Result<Self> {
        let text = text.into();
        if label > 1 {
            return Err(Error::InvalidInput(format!(
                "label must be 0 or 1, got {label}"
            )));
        }
        if normalize_and_tokenize(&text).is_empty() {
            return Err(Error::InvalidInput(format!(
                "example {source_row} has no tokens after normalization"
            )));
        }
        Ok(Self {
            text,
            label,
            source_row,
        })
    }

    pub fn tokens(&self) -> Vec<String> {
        normalize_and_tokenize(&self.text)
    }
}

/// Lowercases, turns every character that is not a letter, digit or
/// apostrophe into a space, and splits on whitespace runs.
pub fn normalize_and_tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| {
            if c.is_alphanumeric() || c == '\'' {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Reads a delimiter-separated file with a header containing `comment` and
/// `isHate` columns. Labels are vote fractions; anything at or above
/// `label_threshold` is hate.
pub fn load_corpus(
    path: &Path,
    delimiter: u8,
    label_threshold: f64,
) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, path, delimiter, label_threshold)
}

pub fn read_corpus<R: std::io::Read>(
    reader: R,
    path: &Path,
    delimiter: u8,
    label_threshold: f64,
) -> Result<Vec<LabeledExample>> {
    let row_err = |row: usize, message: String| Error::Row {
        path: path.to_owned(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| row_err(0, format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| row_err(0, format!("missing `{name}` column in header")))
    };
    let text_col = column(TEXT_COLUMN)?;
    let label_col = column(LABEL_COLUMN)?;

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Row numbers in messages are 1-based file lines, header being line 1.
        let line = i + 2;
        let record = record.map_err(|e| row_err(line, e.to_string()))?;
        let raw_label = record[label_col].trim();
        let score: f64 = raw_label
            .parse()
            .map_err(|_| row_err(line, format!("label `{raw_label}` is not numeric")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(row_err(line, format!("label {score} outside [0, 1]")));
        }
        let label = u8::from(score >= label_threshold);
        let example = LabeledExample::new(&record[text_col], label, i)
            .map_err(|e| row_err(line, e.to_string()))?;
        out.push(example);
    }
    Ok(out)
}

/// Class sizes indexed by label: `[non-hate, hate]`.
pub fn class_counts(corpus: &[LabeledExample]) -> [u64; 2] {
    corpus.iter().fold([0, 0], |mut acc, ex| {
        acc[usize::from(ex.label)] += 1;
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> Result<Vec<LabeledExample>> {
        read_corpus(body.as_bytes(), Path::new("mem.csv"), b';', 0.5)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(normalize_and_tokenize("Hello, WORLD!"), ["hello", "world"]);
        assert_eq!(normalize_and_tokenize("don't  stop"), ["don't", "stop"]);
        assert!(normalize_and_tokenize("!!!").is_empty());
        assert_eq!(normalize_and_tokenize("a-b\tc\n9"), ["a", "b", "c", "9"]);
    }

    #[test]
    fn single_row_below_threshold() {
        let ex = parse("comment;isHate\nhello world;0.0\n").unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].label, 0);
        assert_eq!(ex[0].text, "hello world");
    }

    #[test]
    fn threshold_is_inclusive() {
        let ex = parse("comment;isHate\nborderline;0.5\nlow;0.4999\n").unwrap();
        assert_eq!(ex[0].label, 1);
        assert_eq!(ex[1].label, 0);
    }

    #[test]
    fn quoted_text_with_delimiter() {
        let ex = parse("comment;isHate\n\"semi; colon\";1\n").unwrap();
        assert_eq!(ex[0].text, "semi; colon");
        assert_eq!(ex[0].label, 1);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let err = parse("comment;isHate\nok;0\nbad;zero\n").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        let err = parse("comment;isHate\nok;0\ntoo;many;cols\n").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        let err = parse("comment;isHate\nout of range;1.5\n").unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = parse("comment;isHate\n...;1\n").unwrap_err();
        assert!(err.to_string().contains("no tokens"), "{err}");
    }

    #[test]
    fn missing_file_errors() {
        let err = load_corpus(Path::new("/nonexistent/corpus.csv"), b';', 0.5).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn missing_column() {
        let err = parse("text;label\nhi;0\n").unwrap_err();
        assert!(err.to_string().contains("comment"));
    }

    #[test]
    fn row_order_preserved() {
        let ex = parse("comment;isHate\nfirst;1\nsecond;0\nthird;0.7\n").unwrap();
        let rows: Vec<_> = ex.iter().map(|e| e.source_row).collect();
        assert_eq!(rows, [0, 1, 2]);
        assert_eq!(class_counts(&ex), [1, 2]);
    }
}
