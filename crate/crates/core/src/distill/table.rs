use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Word → fixed vector. Iteration is in lexicographic word order, which keeps
/// exports byte-stable.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticEmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub rows: usize,
    /// Words seen more than once; the last row wins.
    pub duplicates: usize,
    pub header_skipped: bool,
}

impl StaticEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Returns `true` when the word was already present.
    pub fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{bad} in vector for `{word}`")));
        }
        Ok(self.vectors.insert(word, vector).is_some())
    }

    /// Word-vector text format: `<word> <f1> ... <f_dim>` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, v) in &self.vectors {
            out.push_str(w);
            for x in v {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn is_count_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
}

/// Parses a word-vector text file. A leading `<count> <dim>` line (fastText
/// `.vec` style) is recognized and skipped. Without `expected_dim`, the first
/// vector row fixes the dimension.
pub fn load_word_vectors(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<(StaticEmbeddingTable, LoadStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_word_vectors(BufReader::new(file), path, expected_dim)
}

pub(crate) fn read_word_vectors<R: BufRead>(
    reader: R,
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<(StaticEmbeddingTable, LoadStats)> {
    let row_err = |row: usize, message: String| Error::Row {
        path: path.to_owned(),
        row,
        message,
    };
    let mut stats = LoadStats::default();
    let mut table: Option<StaticEmbeddingTable> = expected_dim.map(StaticEmbeddingTable::new);

    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| row_err(row, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if row == 1 && is_count_header(&fields) {
            stats.header_skipped = true;
            let header_dim: usize = fields[1].parse().expect("checked numeric");
            match &table {
                Some(t) if t.dim() != header_dim => {
                    return Err(row_err(
                        row,
                        format!("header dim {header_dim} but expected {}", t.dim()),
                    ))
                }
                Some(_) => {}
                None => table = Some(StaticEmbeddingTable::new(header_dim)),
            }
            continue;
        }
        let word = fields[0];
        let vector = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| row_err(row, format!("bad float: {e}")))?;
        let t = table.get_or_insert_with(|| StaticEmbeddingTable::new(vector.len()));
        if vector.len() != t.dim() || vector.is_empty() {
            return Err(row_err(
                row,
                format!("expected {} values, found {}", t.dim(), vector.len()),
            ));
        }
        if t.insert(word.to_owned(), vector)
            .map_err(|e| row_err(row, e.to_string()))?
        {
            stats.duplicates += 1;
        }
        stats.rows += 1;
    }
    let table = table
        .filter(|t| !t.is_empty())
        .ok_or_else(|| Error::Format(format!("{}: no vectors", path.display())))?;
    Ok((table, stats))
}

/// Concatenates per word; a word missing from one side gets zeros there.
pub fn concat_tables(
    first: &StaticEmbeddingTable,
    second: &StaticEmbeddingTable,
) -> StaticEmbeddingTable {
    let (d1, d2) = (first.dim(), second.dim());
    let mut out = StaticEmbeddingTable::new(d1 + d2);
    let words: std::collections::BTreeSet<&str> = first
        .vectors
        .keys()
        .chain(second.vectors.keys())
        .map(String::as_str)
        .collect();
    for w in words {
        let mut v = Vec::with_capacity(d1 + d2);
        match first.get(w) {
            Some(a) => v.extend_from_slice(a),
            None => v.resize(d1, 0.0),
        }
        match second.get(w) {
            Some(b) => v.extend_from_slice(b),
            None => v.resize(d1 + d2, 0.0),
        }
        out.vectors.insert(w.to_owned(), v);
    }
    out
}
