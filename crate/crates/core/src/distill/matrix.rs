use std::io::{Read, Write};
use std::path::Path;

use rand::RngExt;

use super::StaticEmbeddingTable;
use crate::corpus::{Vocabulary, PAD_INDEX, UNK_INDEX};
use crate::error::{Error, Result};
use crate::seed;

/// Half-width of the uniform range used for rows with no known vector.
pub const FALLBACK_RANGE: f64 = 0.25;

const MATRIX_MAGIC: &[u8; 8] = b"SBEMATRX";
const MATRIX_VERSION: u32 = 1;
const UNK_TAG: &str = "<unk>";

/// `(V + 2) × dim` row-major matrix aligned to a vocabulary. Row 0 is the
/// zero padding row, row 1 the unknown-word row.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    seed: u64,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub found: usize,
    pub oov_resolved: usize,
    pub fallback: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    Found,
    Subwords,
    Fallback,
}

impl EmbeddingMatrix {
    pub fn from_parts(rows: usize, dim: usize, seed: u64, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::shape(
                "embedding matrix",
                format!(
                    "{rows}×{dim} needs {} values, got {}",
                    rows * dim,
                    data.len()
                ),
            ));
        }
        Ok(Self {
            rows,
            dim,
            seed,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab_size(&self) -> usize {
        self.rows.saturating_sub(2)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Binary dump: magic `SBEMATRX`, u32 version, u64 rows, u64 dim,
    /// u64 seed, then `rows·dim` f64 values; all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + self.data.len() * 8);
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(Error::Format("not an embedding matrix file".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != MATRIX_VERSION {
            return Err(Error::Format(format!(
                "unsupported matrix version {version}"
            )));
        }
        let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let dim = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        if r.len() != rows * dim * 8 {
            return Err(Error::Format(format!(
                "matrix body has {} bytes, header implies {}",
                r.len(),
                rows * dim * 8
            )));
        }
        let data = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::from_parts(rows, dim, seed, data)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format("truncated matrix file".into()))
}

fn read_array<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

/// Uniform in `[-FALLBACK_RANGE, FALLBACK_RANGE)` per coordinate, seeded by
/// the global seed and the word itself.
pub fn fallback_vector(word: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng_for(seed, &format!("oov/{word}"));
    (0..dim)
        .map(|_| rng.random_range(-FALLBACK_RANGE..FALLBACK_RANGE))
        .collect()
}

/// Splits a word into the longest table keys that prefix the remaining
/// characters, left to right. A character that starts no known key becomes
/// its own (unresolvable) piece.
pub fn greedy_longest_prefix(table: &StaticEmbeddingTable) -> impl Fn(&str) -> Vec<String> + '_ {
    move |word: &str| {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        let mut pieces = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let start = chars[i].0;
            let mut best = None;
            for j in (i + 1..=chars.len()).rev() {
                let end = chars.get(j).map_or(word.len(), |c| c.0);
                if table.contains(&word[start..end]) {
                    best = Some(j);
                    break;
                }
            }
            let j = best.unwrap_or(i + 1);
            let end = chars.get(j).map_or(word.len(), |c| c.0);
            pieces.push(word[start..end].to_owned());
            i = j;
        }
        pieces
    }
}

/// Vector for `word`: its own table entry, else the mean of whichever of its
/// subwords are in the table, else the seeded fallback.
pub fn oov_embedding<F>(
    word: &str,
    table: &StaticEmbeddingTable,
    splitter: F,
    seed: u64,
) -> (Vec<f64>, RowSource)
where
    F: Fn(&str) -> Vec<String>,
{
    if let Some(v) = table.get(word) {
        return (v.to_vec(), RowSource::Found);
    }
    let mut sum = vec![0.0; table.dim()];
    let mut found = 0usize;
    for piece in splitter(word) {
        if let Some(v) = table.get(&piece) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            found += 1;
        }
    }
    if found == 0 {
        return (
            fallback_vector(word, table.dim(), seed),
            RowSource::Fallback,
        );
    }
    let n = found as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    (sum, RowSource::Subwords)
}

pub fn build_matrix(
    vocab: &Vocabulary,
    table: &StaticEmbeddingTable,
    seed: u64,
) -> Result<(EmbeddingMatrix, Coverage)> {
    if vocab.is_empty() {
        return Err(Error::InvalidInput("empty vocabulary".into()));
    }
    let dim = table.dim();
    if dim == 0 {
        return Err(Error::InvalidInput(
            "embedding table has zero dimensions".into(),
        ));
    }
    let rows = vocab.index_space();
    let mut data = vec![0.0; rows * dim];
    debug_assert_eq!(PAD_INDEX, 0);
    data[UNK_INDEX * dim..(UNK_INDEX + 1) * dim]
        .copy_from_slice(&fallback_vector(UNK_TAG, dim, seed));

    let splitter = greedy_longest_prefix(table);
    let mut coverage = Coverage::default();
    for (index, word) in vocab.iter() {
        let (v, source) = oov_embedding(word, table, &splitter, seed);
        match source {
            RowSource::Found => coverage.found += 1,
            RowSource::Subwords => coverage.oov_resolved += 1,
            RowSource::Fallback => coverage.fallback += 1,
        }
        data[index * dim..(index + 1) * dim].copy_from_slice(&v);
    }
    Ok((
        EmbeddingMatrix::from_parts(rows, dim, seed, data)?,
        coverage,
    ))
}
