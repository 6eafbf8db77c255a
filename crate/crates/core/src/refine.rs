//! The refinement engine.
//!
//! A window of `s` positions slides over every document. For the token in
//! the middle, the most current vectors of its neighbors are summed, scaled
//! by the learning rate and added to the token's own current vector; the
//! result is renormalized and becomes the token's current vector. A token
//! that has never been updated starts from its pre-trained vector, or from
//! zero when it has none, which makes the first update an imputation from
//! context. Updates are online: later windows see earlier results within
//! the same epoch, and epochs continue from the previous state.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenDocument};
use crate::error::{Error, Result};
use crate::store::{norm, EmbeddingTable, ZERO_NORM_EPSILON};
use crate::trajectory::{LogHeader, TrajectoryLog};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Window length in token positions, target included. Odd, at least 3.
    pub window_size: usize,
    pub learning_rate: f32,
    pub epochs: u32,
    pub zero_norm_epsilon: f32,
    /// Scale pre-trained vectors to unit length before the first update.
    pub normalize_pretrained: bool,
    /// Also emit pre-trained entries that never occur in the corpus.
    pub include_pretrained: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            window_size: 13,
            learning_rate: 0.01,
            epochs: 2,
            zero_norm_epsilon: ZERO_NORM_EPSILON,
            normalize_pretrained: true,
            include_pretrained: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        validate_window(self.window_size)?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.zero_norm_epsilon.is_finite() && self.zero_norm_epsilon > 0.0) {
            return Err(Error::Config("zero-norm epsilon must be positive".into()));
        }
        Ok(())
    }
}

fn validate_window(s: usize) -> Result<()> {
    if s.is_multiple_of(2) {
        return Err(Error::Config(format!("window size must be odd, got {s}")));
    }
    if s < 3 {
        return Err(Error::Config(format!(
            "window size must be at least 3, got {s}"
        )));
    }
    Ok(())
}

/// One target position and its neighbors within a single document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextWindow {
    pub doc_index: usize,
    pub target_pos: usize,
    pub neighbor_pos: Vec<usize>,
}

/// Neighbor range `[lo, hi)` of position `pos` in a document of `len` tokens.
fn neighbor_span(pos: usize, len: usize, half: usize) -> (usize, usize) {
    (pos.saturating_sub(half), (pos + half + 1).min(len))
}

/// One window per position of `doc`, in order, truncated at the document
/// edges.
pub fn context_windows(
    doc_index: usize,
    doc: &TokenDocument,
    s: usize,
) -> Result<Vec<ContextWindow>> {
    validate_window(s)?;
    let half = s / 2;
    let len = doc.len();
    Ok((0..len)
        .map(|target_pos| {
            let (lo, hi) = neighbor_span(target_pos, len, half);
            ContextWindow {
                doc_index,
                target_pos,
                neighbor_pos: (lo..hi).filter(|&p| p != target_pos).collect(),
            }
        })
        .collect())
}

/// The result of a run.
#[derive(Clone, Debug)]
pub struct RefineOutput {
    pub table: EmbeddingTable,
    pub log: TrajectoryLog,
    pub elapsed: Duration,
}

/// Working state of a run: current vectors of every token seen so far,
/// backed by the pre-trained origin for tokens not yet loaded.
pub struct EmbeddingState<'a> {
    origin: &'a EmbeddingTable,
    dim: usize,
    learning_rate: f32,
    epsilon: f32,
    vocab: Vec<String>,
    ids: HashMap<String, u32>,
    current: Vec<f32>,
    updated: Vec<bool>,
    occurrences: Vec<u32>,
    log_ids: Vec<u32>,
    epoch: u32,
    position: u64,
    log: TrajectoryLog,
    scratch: Vec<f32>,
}

impl<'a> EmbeddingState<'a> {
    /// `origin` is used as given; normalize it beforehand if required.
    pub fn new(origin: &'a EmbeddingTable, header: LogHeader) -> Result<Self> {
        if header.dim != origin.dim() {
            return Err(Error::Dimension {
                expected: origin.dim(),
                found: header.dim,
            });
        }
        let dim = origin.dim();
        Ok(EmbeddingState {
            origin,
            dim,
            learning_rate: header.config.learning_rate,
            epsilon: header.config.zero_norm_epsilon,
            vocab: Vec::new(),
            ids: HashMap::new(),
            current: Vec::new(),
            updated: Vec::new(),
            occurrences: Vec::new(),
            log_ids: Vec::new(),
            epoch: 1,
            position: 0,
            log: TrajectoryLog::new(header),
            scratch: vec![0.0; dim],
        })
    }

    /// Interns `token`, seeding its current vector from the origin or zero.
    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.vocab.len() as u32;
        match self.origin.lookup(token) {
            Some(v) => self.current.extend_from_slice(v),
            None => self.current.resize(self.current.len() + self.dim, 0.0),
        }
        self.vocab.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        self.updated.push(false);
        self.occurrences.push(0);
        self.log_ids.push(u32::MAX);
        id
    }

    fn row(&self, id: u32) -> &[f32] {
        let start = id as usize * self.dim;
        &self.current[start..start + self.dim]
    }

    /// The most current vector of `token`: its latest update, else its
    /// pre-trained vector.
    pub fn current(&self, token: &str) -> Option<&[f32]> {
        match self.ids.get(token) {
            Some(&id) => Some(self.row(id)),
            None => self.origin.lookup(token),
        }
    }

    pub fn is_updated(&self, token: &str) -> bool {
        self.ids
            .get(token)
            .is_some_and(|&id| self.updated[id as usize])
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Starts the next epoch; occurrence ordinals restart at 1.
    pub fn next_epoch(&mut self) {
        self.epoch += 1;
        self.occurrences.iter_mut().for_each(|o| *o = 0);
    }

    /// Applies one update for `window` over the tokens of `doc`.
    pub fn update_target(&mut self, doc: &TokenDocument, window: &ContextWindow) -> Result<()> {
        let len = doc.len();
        if window.target_pos >= len || window.neighbor_pos.iter().any(|&p| p >= len) {
            return Err(Error::Undefined(format!(
                "window at {} does not fit a document of {len} tokens",
                window.target_pos
            )));
        }
        if window.neighbor_pos.contains(&window.target_pos) {
            return Err(Error::Undefined("target listed among its neighbors".into()));
        }
        let target = self.intern(&doc.tokens[window.target_pos]);
        let neighbors: Vec<u32> = window
            .neighbor_pos
            .iter()
            .map(|&p| self.intern(&doc.tokens[p]))
            .collect();
        self.apply(target, &neighbors);
        Ok(())
    }

    fn apply(&mut self, target: u32, neighbors: &[u32]) {
        let dim = self.dim;
        let mut sum = std::mem::take(&mut self.scratch);
        sum.iter_mut().for_each(|x| *x = 0.0);
        for &n in neighbors {
            for (s, x) in sum.iter_mut().zip(self.row(n)) {
                *s += x;
            }
        }

        let alpha = self.learning_rate;
        let start = target as usize * dim;
        let cur = &mut self.current[start..start + dim];
        for (c, s) in cur.iter_mut().zip(&sum) {
            *c += alpha * s;
        }
        let n = norm(cur);
        let zero = n <= f64::from(self.epsilon);
        if zero {
            cur.iter_mut().for_each(|x| *x = 0.0);
        } else {
            for x in cur.iter_mut() {
                *x = (f64::from(*x) / n) as f32;
            }
        }
        self.scratch = sum;

        let t = target as usize;
        self.updated[t] = true;
        self.occurrences[t] += 1;
        if self.log_ids[t] == u32::MAX {
            self.log_ids[t] = self.log.intern(&self.vocab[t]);
        }
        let position = self.position;
        self.position += 1;
        self.log.push_interned(
            self.log_ids[t],
            self.epoch,
            self.occurrences[t],
            position,
            &self.current[start..start + dim],
            zero,
        );
    }

    /// Runs one pass over the corpus.
    fn run_epoch(&mut self, docs: &[Vec<u32>], window_size: usize) {
        let half = window_size / 2;
        let mut neighbors = Vec::with_capacity(window_size);
        for doc in docs {
            for pos in 0..doc.len() {
                let (lo, hi) = neighbor_span(pos, doc.len(), half);
                neighbors.clear();
                neighbors.extend_from_slice(&doc[lo..pos]);
                neighbors.extend_from_slice(&doc[pos + 1..hi]);
                self.apply(doc[pos], &neighbors);
            }
        }
    }

    /// Final vectors of all corpus tokens, optionally followed by the
    /// untouched origin entries.
    fn into_output(self, include_pretrained: bool) -> Result<(EmbeddingTable, TrajectoryLog)> {
        let mut table = EmbeddingTable::new(self.dim)?;
        for (id, token) in self.vocab.iter().enumerate() {
            table.insert(token.as_str(), self.row(id as u32))?;
        }
        if include_pretrained {
            for (word, v) in self.origin.iter_raw() {
                if table.lookup_bytes(word).is_none() {
                    table.insert(word, v)?;
                }
            }
        }
        table.set_normalized(!include_pretrained || self.origin.is_normalized());
        Ok((table, self.log))
    }
}

/// Refines `pretrained` over `corpus`.
///
/// The returned table holds every corpus token (pre-trained or imputed), plus
/// the remaining pre-trained entries when `include_pretrained` is set. An
/// empty corpus yields a copy of the (normalized) pre-trained table.
pub fn refine(
    corpus: &Corpus,
    pretrained: &EmbeddingTable,
    config: &RefineConfig,
) -> Result<RefineOutput> {
    config.validate()?;
    run(corpus, pretrained, config)
}

pub(crate) fn run(
    corpus: &Corpus,
    pretrained: &EmbeddingTable,
    config: &RefineConfig,
) -> Result<RefineOutput> {
    let started = Instant::now();
    let normalized;
    let origin = if config.normalize_pretrained && !pretrained.is_normalized() {
        normalized = pretrained.normalize_all(config.zero_norm_epsilon);
        &normalized
    } else {
        pretrained
    };

    let header = LogHeader::new(origin.dim(), config.clone(), corpus.stats());
    if corpus.is_empty() {
        return Ok(RefineOutput {
            table: origin.clone(),
            log: TrajectoryLog::new(header),
            elapsed: started.elapsed(),
        });
    }

    let mut state = EmbeddingState::new(origin, header)?;
    let docs: Vec<Vec<u32>> = corpus
        .documents()
        .iter()
        .map(|d| d.tokens.iter().map(|t| state.intern(t)).collect())
        .collect();
    state
        .log
        .reserve(corpus.stats().total_tokens * config.epochs as usize);

    for epoch in 1..=config.epochs {
        if epoch > 1 {
            state.next_epoch();
        }
        state.run_epoch(&docs, config.window_size);
    }

    let (table, log) = state.into_output(config.include_pretrained)?;
    Ok(RefineOutput {
        table,
        log,
        elapsed: started.elapsed(),
    })
}
