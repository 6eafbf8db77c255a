//! Embedding tables and the word2vec binary/text formats.
//!
//! Tokens are kept as the exact bytes found in the source file. Lookups by
//! `&str` compare against those bytes; iteration exposes them as lossy UTF-8.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};

/// Norms at or below this value are treated as zero everywhere.
pub const ZERO_NORM_EPSILON: f32 = 1e-12;

/// An owned embedding vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vector(Vec<f32>);

impl Vector {
    pub fn new(values: Vec<f32>) -> Self {
        Vector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bits_eq(&self, other: &Vector) -> bool {
        bits_eq(&self.0, &other.0)
    }
}

impl Deref for Vector {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

impl From<Vec<f32>> for Vector {
    fn from(values: Vec<f32>) -> Self {
        Vector(values)
    }
}

impl From<&[f32]> for Vector {
    fn from(values: &[f32]) -> Self {
        Vector(values.to_vec())
    }
}

pub(crate) fn bits_eq(a: &[f32], b: &[f32]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Euclidean norm, accumulated in `f64`.
pub fn norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt()
}

/// Cosine similarity clamped to `[-1, 1]`; `0.0` when either side has a
/// (near) zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f32], b: &[f32]) -> f32 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    let eps = f64::from(ZERO_NORM_EPSILON);
    if na <= eps || nb <= eps {
        return 0.0;
    }
    ((dot / (na * nb)).clamp(-1.0, 1.0)) as f32
}

/// Vectors whose norm is within this distance of 1 count as already unit.
/// Rounding a normalized vector to `f32` moves its norm by at most 2^-24
/// relative, so a second pass never exceeds this and normalization stays
/// bit-for-bit idempotent.
const UNIT_TOLERANCE: f64 = 1e-6;

/// Divides `v` by its norm in place unless the norm is at or below
/// `epsilon` or already within [`UNIT_TOLERANCE`] of 1.
/// Returns `false` when the vector was left untouched.
pub(crate) fn normalize_in_place(v: &mut [f32], epsilon: f32) -> bool {
    let n = norm(v);
    if n <= f64::from(epsilon) || (n - 1.0).abs() <= UNIT_TOLERANCE {
        return false;
    }
    for x in v.iter_mut() {
        *x = (f64::from(*x) / n) as f32;
    }
    true
}

/// A token to vector map with a shared dimensionality.
///
/// Vectors live in one contiguous buffer in insertion order. Equality
/// compares dimensionality and the token to vector mapping bit for bit; the
/// normalized flag and insertion order are not part of it.
#[derive(Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<Box<[u8]>>,
    index: HashMap<Box<[u8]>, usize>,
    data: Vec<f32>,
    normalized: bool,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::format("embedding dimensionality must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            normalized: false,
            duplicates: 0,
        })
    }

    fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        let mut table = Self::new(dim)?;
        // Header counts are untrusted; cap the up-front reservation.
        let capacity = capacity.min(1 << 20);
        table.words.reserve(capacity);
        table.index.reserve(capacity);
        table
            .data
            .reserve(capacity.saturating_mul(dim).min(1 << 26));
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of entries overwritten by a later duplicate during loading or
    /// insertion.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Inserts or overwrites an entry. Returns `true` if the token was
    /// already present.
    pub fn insert(&mut self, token: impl Into<Vec<u8>>, values: &[f32]) -> Result<bool> {
        let token = token.into();
        if token.is_empty() {
            return Err(Error::format("empty token"));
        }
        if values.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::format(format!(
                "non-finite component {} in vector for {:?}",
                pos,
                String::from_utf8_lossy(&token)
            )));
        }
        if self.normalized && !is_unit_or_zero(values) {
            self.normalized = false;
        }
        let replaced = self.put(token.into_boxed_slice(), values);
        Ok(replaced)
    }

    fn put(&mut self, token: Box<[u8]>, values: &[f32]) -> bool {
        match self.index.get(&token) {
            Some(&row) => {
                self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(values);
                self.duplicates += 1;
                true
            }
            None => {
                self.index.insert(token.clone(), self.words.len());
                self.words.push(token);
                self.data.extend_from_slice(values);
                false
            }
        }
    }

    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.lookup_bytes(token.as_bytes())
    }

    pub fn lookup_bytes(&self, token: &[u8]) -> Option<&[f32]> {
        self.index.get(token).map(|&row| self.row(row))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token.as_bytes())
    }

    pub(crate) fn row_of(&self, token: &str) -> Option<usize> {
        self.index.get(token.as_bytes()).copied()
    }

    pub(crate) fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Entries in insertion order, tokens as raw bytes.
    pub fn iter_raw(&self) -> impl Iterator<Item = (&[u8], &[f32])> + '_ {
        self.words
            .iter()
            .enumerate()
            .map(move |(row, w)| (&w[..], self.row(row)))
    }

    /// Entries in insertion order, tokens decoded as lossy UTF-8.
    pub fn iter(&self) -> impl Iterator<Item = (Cow<'_, str>, &[f32])> + '_ {
        self.iter_raw()
            .map(|(w, v)| (String::from_utf8_lossy(w), v))
    }

    /// Row indices in ascending byte-lexicographic token order.
    pub(crate) fn sorted_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.words.len()).collect();
        rows.sort_unstable_by(|&a, &b| self.words[a].cmp(&self.words[b]));
        rows
    }

    pub(crate) fn word(&self, row: usize) -> &[u8] {
        &self.words[row]
    }

    /// Returns a copy with every entry whose norm exceeds `epsilon` scaled to
    /// unit length. Entries at or below `epsilon` are kept as they are.
    pub fn normalize_all(&self, epsilon: f32) -> EmbeddingTable {
        let mut out = self.clone();
        out.normalize_all_in_place(epsilon);
        out
    }

    pub fn normalize_all_in_place(&mut self, epsilon: f32) {
        if self.dim > 0 {
            for row in self.data.chunks_exact_mut(self.dim) {
                normalize_in_place(row, epsilon);
            }
        }
        self.normalized = true;
    }

    pub(crate) fn set_normalized(&mut self, normalized: bool) {
        self.normalized = normalized;
    }

    /// Reads a word2vec binary stream.
    pub fn read_word2vec_binary<R: BufRead>(reader: &mut R) -> Result<Self> {
        let (count, dim) = read_header(reader)?;
        let mut table = Self::with_capacity(dim, count)?;
        let mut word = Vec::new();
        let mut raw = vec![0u8; dim * 4];
        let mut values = vec![0f32; dim];

        for record in 0..count {
            word.clear();
            reader.read_until(b' ', &mut word)?;
            if word.pop() != Some(b' ') {
                return Err(Error::Truncated { record });
            }
            if word.is_empty() {
                return Err(Error::format(format!("record {record} has an empty word")));
            }
            reader.read_exact(&mut raw).map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => Error::Truncated { record },
                _ => Error::Io(e),
            })?;
            for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
                *v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Error::format(format!(
                    "record {record} contains a non-finite component"
                )));
            }
            if reader.fill_buf()?.first() == Some(&b'\n') {
                reader.consume(1);
            }
            table.put(word.as_slice().into(), &values);
        }

        let mut rest = Vec::new();
        reader.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::format(format!(
                "{} trailing bytes after {count} records",
                rest.len()
            )));
        }
        Ok(table)
    }

    /// Writes the word2vec binary format, entries in token order, each record
    /// followed by a newline.
    pub fn write_word2vec_binary<W: Write>(&self, writer: &mut W) -> Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim)?;
        for row in self.sorted_rows() {
            writer.write_all(self.word(row))?;
            writer.write_all(b" ")?;
            for x in self.row(row) {
                writer.write_all(&x.to_le_bytes())?;
            }
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads the word2vec text format.
    pub fn read_word2vec_text<R: BufRead>(reader: &mut R) -> Result<Self> {
        let (count, dim) = read_header(reader)?;
        let mut table = Self::with_capacity(dim, count)?;
        let mut line = Vec::new();
        let mut values = Vec::with_capacity(dim);
        let mut line_no = 1;

        for record in 0..count {
            line.clear();
            line_no += 1;
            if reader.read_until(b'\n', &mut line)? == 0 {
                return Err(Error::Truncated { record });
            }
            let mut fields = line
                .split(u8::is_ascii_whitespace)
                .filter(|f| !f.is_empty());
            let word = fields
                .next()
                .ok_or_else(|| Error::format_at(line_no, "missing word"))?;
            values.clear();
            for field in fields {
                let value = std::str::from_utf8(field)
                    .ok()
                    .and_then(|s| s.parse::<f32>().ok())
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        Error::format_at(
                            line_no,
                            format!("invalid float {:?}", String::from_utf8_lossy(field)),
                        )
                    })?;
                values.push(value);
            }
            if values.len() != dim {
                return Err(Error::format_at(
                    line_no,
                    format!("expected {dim} components, found {}", values.len()),
                ));
            }
            table.put(word.into(), &values);
        }

        loop {
            line.clear();
            line_no += 1;
            if reader.read_until(b'\n', &mut line)? == 0 {
                break;
            }
            if !line.iter().all(u8::is_ascii_whitespace) {
                return Err(Error::format_at(
                    line_no,
                    format!("unexpected content after {count} records"),
                ));
            }
        }
        Ok(table)
    }

    /// Writes the word2vec text format in token order. Components use the
    /// shortest decimal that parses back to the same `f32`.
    pub fn write_word2vec_text<W: Write>(&self, writer: &mut W) -> Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim)?;
        for row in self.sorted_rows() {
            writer.write_all(self.word(row))?;
            for x in self.row(row) {
                write!(writer, " {x}")?;
            }
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Loads a table from disk, choosing the format from `format`.
    pub fn load(path: &Path, format: VectorFormat) -> Result<Self> {
        let mut reader = BufReader::with_capacity(1 << 20, File::open(path)?);
        match format.resolve(path) {
            VectorFormat::Binary => Self::read_word2vec_binary(&mut reader),
            _ => Self::read_word2vec_text(&mut reader),
        }
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_word2vec_text(&mut writer)?;
        writer.flush()?;
        Ok(())
    }
}

fn is_unit_or_zero(values: &[f32]) -> bool {
    let n = norm(values);
    n <= f64::from(ZERO_NORM_EPSILON) || (n - 1.0).abs() <= 1e-5
}

fn read_header<R: BufRead>(reader: &mut R) -> Result<(usize, usize)> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(Error::format_at(1, "header must end with a newline"));
    }
    let text =
        std::str::from_utf8(&header).map_err(|_| Error::format_at(1, "header is not ASCII"))?;
    let mut fields = text.split_ascii_whitespace();
    let parse = |f: Option<&str>| f.and_then(|s| s.parse::<usize>().ok());
    match (parse(fields.next()), parse(fields.next()), fields.next()) {
        (Some(count), Some(dim), None) if dim > 0 => Ok((count, dim)),
        (Some(_), Some(0), None) => Err(Error::format_at(1, "dimensionality must be positive")),
        _ => Err(Error::format_at(
            1,
            format!(
                "expected \"<vocab_count> <dim>\", found {:?}",
                text.trim_end()
            ),
        )),
    }
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .iter_raw()
                .all(|(w, v)| other.lookup_bytes(w).is_some_and(|o| bits_eq(v, o)))
    }
}

impl fmt::Debug for EmbeddingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingTable")
            .field("dim", &self.dim)
            .field("len", &self.len())
            .field("normalized", &self.normalized)
            .finish()
    }
}

/// On-disk vector formats. `Auto` picks binary for a `.bin` extension and
/// text otherwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VectorFormat {
    #[default]
    Auto,
    Binary,
    Text,
}

impl VectorFormat {
    pub fn resolve(self, path: &Path) -> VectorFormat {
        match self {
            VectorFormat::Auto => match path.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("bin") => VectorFormat::Binary,
                _ => VectorFormat::Text,
            },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f32::consts::FRAC_1_SQRT_2;

    fn binary_record(word: &str, values: &[f32], newline: bool) -> Vec<u8> {
        let mut out = word.as_bytes().to_vec();
        out.push(b' ');
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if newline {
            out.push(b'\n');
        }
        out
    }

    fn table(dim: usize, entries: &[(&str, &[f32])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(dim).unwrap();
        for (w, v) in entries {
            t.insert(*w, v).unwrap();
        }
        t
    }

    #[test]
    fn binary_two_records() {
        let mut bytes = b"2 3\n".to_vec();
        bytes.extend(binary_record("a", &[1.0, 0.0, 0.0], true));
        bytes.extend(binary_record("b", &[0.0, 1.0, 0.0], false));
        // Field-by-field check of the hand-built stream.
        assert_eq!(&bytes[4..6], b"a ");
        assert_eq!(&bytes[6..10], &[0x00, 0x00, 0x80, 0x3f]);
        let t = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.lookup("a"), Some(&[1.0, 0.0, 0.0][..]));
        assert_eq!(t.lookup("b"), Some(&[0.0, 1.0, 0.0][..]));
    }

    #[test]
    fn binary_empty_vocab() {
        let t = EmbeddingTable::read_word2vec_binary(&mut &b"0 3\n"[..]).unwrap();
        assert_eq!((t.len(), t.dim()), (0, 3));
    }

    #[test]
    fn binary_empty_vocab_with_trailing_bytes() {
        let err = EmbeddingTable::read_word2vec_binary(&mut &b"0 3\nxyz"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn binary_truncated() {
        let mut bytes = b"2 3\n".to_vec();
        bytes.extend(binary_record("a", &[1.0, 0.0, 0.0], true));
        let err = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap_err();
        assert!(matches!(err, Error::Truncated { record: 1 }), "{err}");

        // Cut inside the float block of record 0.
        let mut bytes = b"1 3\n".to_vec();
        bytes.extend(&binary_record("a", &[1.0, 0.0, 0.0], false)[..7]);
        let err = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap_err();
        assert!(matches!(err, Error::Truncated { record: 0 }), "{err}");
    }

    #[test]
    fn binary_malformed_header() {
        for header in [&b"2\n"[..], b"x 3\n", b"2 3", b"2 0\n", b"1 2 3\n"] {
            let err = EmbeddingTable::read_word2vec_binary(&mut &header[..]).unwrap_err();
            assert!(matches!(err, Error::Format { .. }), "{header:?}: {err}");
        }
    }

    #[test]
    fn binary_invalid_utf8_word_is_kept() {
        let mut bytes = b"1 1\n".to_vec();
        bytes.extend([0xff, b'x', b' ']);
        bytes.extend(1.5f32.to_le_bytes());
        let t = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap();
        assert_eq!(t.lookup_bytes(&[0xff, b'x']), Some(&[1.5][..]));
        let (word, _) = t.iter().next().unwrap();
        assert_eq!(word, "\u{fffd}x");
    }

    #[test]
    fn duplicates_last_wins() {
        let mut bytes = b"2 1\n".to_vec();
        bytes.extend(binary_record("a", &[1.0], true));
        bytes.extend(binary_record("a", &[2.0], true));
        let t = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.duplicates(), 1);
        assert_eq!(t.lookup("a"), Some(&[2.0][..]));
    }

    #[test]
    fn text_examples() {
        let t = EmbeddingTable::read_word2vec_text(&mut &b"1 2\nx 0.5 0.5\n"[..]).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.lookup("x"), Some(&[0.5, 0.5][..]));

        let t = EmbeddingTable::read_word2vec_text(&mut &b"0 4\n"[..]).unwrap();
        assert_eq!((t.len(), t.dim()), (0, 4));

        let err = EmbeddingTable::read_word2vec_text(&mut &b"1 2\nx 0.5\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn text_rejects_nonfinite_and_short_input() {
        let err = EmbeddingTable::read_word2vec_text(&mut &b"1 1\nx NaN\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(2), .. }));
        let err = EmbeddingTable::read_word2vec_text(&mut &b"2 1\nx 1\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Truncated { record: 1 }));
    }

    #[test]
    fn text_save_examples() {
        let t = EmbeddingTable::read_word2vec_text(&mut &b"1 2\nx 0.5 0.5\n"[..]).unwrap();
        let mut out = Vec::new();
        t.write_word2vec_text(&mut out).unwrap();
        assert_eq!(
            EmbeddingTable::read_word2vec_text(&mut &out[..]).unwrap(),
            t
        );

        let mut out = Vec::new();
        EmbeddingTable::new(3)
            .unwrap()
            .write_word2vec_text(&mut out)
            .unwrap();
        assert_eq!(out, b"0 3\n");

        let t = table(2, &[("b", &[0.0, 1.0]), ("a", &[1.0, 0.0])]);
        let mut out = Vec::new();
        t.write_word2vec_text(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "2 2\na 1 0\nb 0 1\n");
    }

    #[test]
    fn lookup_examples() {
        let t = table(2, &[("a", &[1.0, 0.0])]);
        assert_eq!(t.lookup("a"), Some(&[1.0, 0.0][..]));
        assert_eq!(t.lookup("z"), None);
        assert_eq!(EmbeddingTable::new(2).unwrap().lookup("a"), None);
    }

    #[test]
    fn normalize_examples() {
        let t = table(2, &[("x", &[3.0, 4.0])]).normalize_all(ZERO_NORM_EPSILON);
        let x = t.lookup("x").unwrap();
        assert!((x[0] - 0.6).abs() < 1e-7 && (x[1] - 0.8).abs() < 1e-7);
        assert!(t.is_normalized());

        let t = table(2, &[("x", &[0.0, 0.0])]).normalize_all(ZERO_NORM_EPSILON);
        assert_eq!(t.lookup("x"), Some(&[0.0, 0.0][..]));
        assert!(t.is_normalized());

        let t = table(2, &[("x", &[1.0, 0.0])]).normalize_all(ZERO_NORM_EPSILON);
        assert_eq!(t.lookup("x"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(Error::Dimension {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn insert_rejects_bad_vectors() {
        let mut t = EmbeddingTable::new(2).unwrap();
        assert!(matches!(
            t.insert("a", &[1.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(t.insert("a", &[f32::INFINITY, 0.0]).is_err());
        assert!(t.insert("", &[1.0, 0.0]).is_err());
    }

    fn arb_table() -> impl Strategy<Value = EmbeddingTable> {
        (1usize..=16).prop_flat_map(|dim| {
            proptest::collection::btree_map(
                "[a-zA-Z0-9_\u{e9}\u{4e2d}]{1,8}",
                proptest::collection::vec(
                    any::<f32>().prop_filter("finite", |x| x.is_finite()),
                    dim,
                ),
                0..=50,
            )
            .prop_map(move |entries| {
                let mut t = EmbeddingTable::new(dim).unwrap();
                for (w, v) in entries {
                    t.insert(w, &v).unwrap();
                }
                t
            })
        })
    }

    proptest! {
        #[test]
        fn binary_round_trip(t in arb_table()) {
            let mut bytes = Vec::new();
            t.write_word2vec_binary(&mut bytes).unwrap();
            let back = EmbeddingTable::read_word2vec_binary(&mut &bytes[..]).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn text_round_trip(t in arb_table()) {
            let mut bytes = Vec::new();
            t.write_word2vec_text(&mut bytes).unwrap();
            let back = EmbeddingTable::read_word2vec_text(&mut &bytes[..]).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn normalize_is_idempotent(t in arb_table()) {
            let once = t.normalize_all(ZERO_NORM_EPSILON);
            let twice = once.normalize_all(ZERO_NORM_EPSILON);
            for (w, v) in once.iter_raw() {
                let n = norm(v);
                if n > f64::from(ZERO_NORM_EPSILON) {
                    prop_assert!((n - 1.0).abs() <= 1e-5);
                }
                let again = twice.lookup_bytes(w).unwrap();
                prop_assert!(bits_eq(v, again), "{:?} vs {:?}", v, again);
            }
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in proptest::collection::vec(-10.0f32..10.0, 1..16),
            seed in proptest::collection::vec(-10.0f32..10.0, 16),
            scale in 0.01f32..100.0,
        ) {
            let b = &seed[..a.len()];
            prop_assert_eq!(cosine(&a, b).unwrap(), cosine(b, &a).unwrap());
            if norm(&a) > 1e-3 {
                let scaled: Vec<f32> = a.iter().map(|x| x * scale).collect();
                prop_assert!((cosine(&a, &scaled).unwrap() - 1.0).abs() <= 1e-6);
            }
        }
    }
}
