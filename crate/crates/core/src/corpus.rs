//! Corpus ingestion: externally tagged TSV and a plain-text fallback.

use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One source document after filtering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenDocument {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenDocument {
            doc_id: doc_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_tokens: usize,
    pub unique_tokens: usize,
    pub documents: usize,
}

impl CorpusStats {
    /// Mean number of filtered tokens per document, `0.0` for an empty corpus.
    pub fn mean_document_length(&self) -> f64 {
        if self.documents == 0 {
            0.0
        } else {
            self.total_tokens as f64 / self.documents as f64
        }
    }
}

/// Ordered documents plus their counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    documents: Vec<TokenDocument>,
    stats: CorpusStats,
}

impl Corpus {
    /// Builds a corpus, dropping documents left without tokens.
    pub fn new(documents: Vec<TokenDocument>) -> Self {
        let documents: Vec<_> = documents.into_iter().filter(|d| !d.is_empty()).collect();
        let stats = corpus_stats(&documents);
        Corpus { documents, stats }
    }

    pub fn documents(&self) -> &[TokenDocument] {
        &self.documents
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Appends the documents of `other`, keeping order.
    pub fn extend(&mut self, other: Corpus) {
        self.documents.extend(other.documents);
        self.stats = corpus_stats(&self.documents);
    }
}

/// Recomputes the counts of a document list.
pub fn corpus_stats(documents: &[TokenDocument]) -> CorpusStats {
    let unique: HashSet<&str> = documents
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    CorpusStats {
        total_tokens: documents.iter().map(TokenDocument::len).sum(),
        unique_tokens: unique.len(),
        documents: documents.len(),
    }
}

/// Token filtering rules.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    /// Universal POS tags kept by the tagged loader.
    pub allowed_pos: BTreeSet<String>,
    stopwords: BTreeSet<String>,
    /// Keep the case of proper nouns; everything else is lowercased.
    pub lowercase_except_propn: bool,
    /// Emit the lemma column instead of the surface token.
    pub use_lemma: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            allowed_pos: ["ADJ", "ADV", "NOUN", "PROPN", "VERB"]
                .into_iter()
                .map(String::from)
                .collect(),
            stopwords: BTreeSet::new(),
            lowercase_except_propn: true,
            use_lemma: true,
        }
    }
}

impl FilterConfig {
    /// Replaces the stopword set. Entries are trimmed and lowercased; matching
    /// is done on the lowercased form of each emitted token.
    pub fn with_stopwords<I, S>(mut self, stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = stopwords
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        self
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn validate(&self) -> Result<()> {
        if self.allowed_pos.is_empty() {
            return Err(Error::Config("allowed POS set must not be empty".into()));
        }
        Ok(())
    }

    fn is_stopword(&self, token: &str) -> bool {
        !self.stopwords.is_empty() && self.stopwords.contains(&token.to_lowercase())
    }

    /// Applies POS, lemma, case and stopword rules to one tagged row.
    fn apply(&self, token: &str, lemma: &str, pos: &str) -> Option<String> {
        if !self.allowed_pos.contains(pos) {
            return None;
        }
        let base = if self.use_lemma { lemma } else { token };
        let emitted = if pos == "PROPN" && self.lowercase_except_propn {
            base.to_owned()
        } else {
            base.to_lowercase()
        };
        if emitted.is_empty() || self.is_stopword(&emitted) {
            return None;
        }
        Some(emitted)
    }
}

/// Reads a stopword list, one entry per line.
pub fn read_stopwords<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() {
            out.push(word.to_owned());
        }
    }
    Ok(out)
}

/// Reads `token<TAB>lemma<TAB>pos` rows. Blank lines separate documents and a
/// `#doc <id>` line starts a document with that id.
pub fn load_tagged_tsv<R: BufRead>(reader: R, filter: &FilterConfig) -> Result<Corpus> {
    filter.validate()?;
    let mut documents = Vec::new();
    let mut builder = DocBuilder::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Parse {
                line: line_no,
                message: "invalid UTF-8".into(),
            },
            _ => Error::Io(e),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);

        if line.trim().is_empty() {
            builder.flush(&mut documents);
            continue;
        }
        if let Some(id) = line.strip_prefix("#doc ") {
            builder.flush(&mut documents);
            builder.id = Some(id.trim().to_owned());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [token, lemma, pos] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        builder.rows += 1;
        if let Some(t) = filter.apply(token, lemma, pos.trim()) {
            builder.tokens.push(t);
        }
    }
    builder.flush(&mut documents);
    Ok(Corpus::new(documents))
}

#[derive(Default)]
struct DocBuilder {
    id: Option<String>,
    tokens: Vec<String>,
    rows: usize,
    seen: usize,
}

impl DocBuilder {
    fn flush(&mut self, out: &mut Vec<TokenDocument>) {
        if self.rows == 0 && self.id.is_none() {
            return;
        }
        let id = self
            .id
            .take()
            .unwrap_or_else(|| format!("doc{}", self.seen));
        out.push(TokenDocument::new(id, std::mem::take(&mut self.tokens)));
        self.rows = 0;
        self.seen += 1;
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Rule-based tokenization for untagged text: split on anything that is not
/// alphanumeric or an apostrophe, trim apostrophes at the edges, lowercase,
/// then drop stopwords and all-digit tokens. No POS or lemma handling.
pub fn tokenize_plain(doc_id: &str, text: &str, filter: &FilterConfig) -> TokenDocument {
    let tokens = text
        .split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .map(|piece| piece.trim_matches(is_apostrophe))
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !filter.is_stopword(t))
        .collect();
    TokenDocument::new(doc_id, tokens)
}

/// Splits plain text into documents on blank lines and tokenizes each one.
/// Document ids are `<prefix><n>`.
pub fn load_plain_text<R: BufRead>(
    reader: R,
    filter: &FilterConfig,
    prefix: &str,
) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut paragraph = String::new();
    let mut seen = 0usize;
    let mut flush = |paragraph: &mut String, documents: &mut Vec<TokenDocument>| {
        if !paragraph.trim().is_empty() {
            documents.push(tokenize_plain(
                &format!("{prefix}{seen}"),
                paragraph,
                filter,
            ));
            seen += 1;
        }
        paragraph.clear();
    };
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut paragraph, &mut documents);
        } else {
            paragraph.push_str(&line);
            paragraph.push('\n');
        }
    }
    flush(&mut paragraph, &mut documents);
    Ok(Corpus::new(documents))
}
