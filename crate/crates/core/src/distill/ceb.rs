//! Contextual Embedding Batch files: a `CEB 1 <dim>` header followed by one
//! `<word>\t<f1> ... <f_dim>` line per word occurrence.

use std::io::BufRead;
use std::path::Path;

use super::ContextualAccumulator;
use crate::error::{Error, Result};

pub const CEB_MAGIC: &str = "CEB";
pub const CEB_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CebSummary {
    pub dim: usize,
    pub occurrences: u64,
    pub words: usize,
}

fn parse_header(line: &str) -> std::result::Result<usize, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        [magic, version, dim] if *magic == CEB_MAGIC => {
            let version: u32 = version
                .parse()
                .map_err(|_| format!("bad version `{version}`"))?;
            if version != CEB_VERSION {
                return Err(format!("unsupported version {version}"));
            }
            match dim.parse::<usize>() {
                Ok(d) if d > 0 => Ok(d),
                _ => Err(format!("bad dim `{dim}`")),
            }
        }
        _ => Err(format!("expected `{CEB_MAGIC} {CEB_VERSION} <dim>` header")),
    }
}

/// Streams a CEB file into a fresh accumulator.
pub fn read_ceb<R: BufRead>(reader: R, path: &Path) -> Result<(ContextualAccumulator, CebSummary)> {
    let row_err = |row: usize, message: String| Error::Row {
        path: path.to_owned(),
        row,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| row_err(1, e.to_string()))?,
        None => return Err(row_err(1, "empty file".into())),
    };
    let dim = parse_header(&header).map_err(|m| row_err(1, m))?;

    let mut acc = ContextualAccumulator::new(dim);
    let mut occurrences = 0u64;
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line.map_err(|e| row_err(row, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, values) = line
            .split_once('\t')
            .ok_or_else(|| row_err(row, "missing tab after word".into()))?;
        if word.is_empty() {
            return Err(row_err(row, "empty word".into()));
        }
        let vector = values
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| row_err(row, format!("bad float: {e}")))?;
        acc.accumulate(word, &vector)
            .map_err(|e| row_err(row, e.to_string()))?;
        occurrences += 1;
    }
    if occurrences == 0 {
        return Err(row_err(2, "no occurrences".into()));
    }
    let words = acc.len();
    Ok((
        acc,
        CebSummary {
            dim,
            occurrences,
            words,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(ContextualAccumulator, CebSummary)> {
        read_ceb(text.as_bytes(), Path::new("mem.ceb"))
    }

    #[test]
    fn three_occurrences() {
        let (acc, s) = parse("CEB 1 2\nw\t1 2\nw\t3 5\nv\t0 0\nw\t2 2\n").unwrap();
        assert_eq!(
            s,
            CebSummary {
                dim: 2,
                occurrences: 4,
                words: 2
            }
        );
        assert_eq!(acc.finalize().unwrap().get("w").unwrap(), [2.0, 3.0]);
    }

    #[test]
    fn errors_name_lines() {
        let e = parse("CEB 1 2\n").unwrap_err().to_string();
        assert!(e.contains("no occurrences"), "{e}");
        let e = parse("CEB 1 2\nw\t1 2\nw\t1 2 3\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("row 3"), "{e}");
        let e = parse("CEB 2 2\nw\t1 2\n").unwrap_err().to_string();
        assert!(e.contains("unsupported version"), "{e}");
        let e = parse("w\t1 2\n").unwrap_err().to_string();
        assert!(e.contains("row 1"), "{e}");
        let e = parse("CEB 1 2\nw 1 2\n").unwrap_err().to_string();
        assert!(e.contains("missing tab"), "{e}");
        let e = parse("CEB 1 2\nw\t1 nan\n").unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
    }
}
