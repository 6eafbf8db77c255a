use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::store::{cosine_unchecked, norm, EmbeddingTable, ZERO_NORM_EPSILON};

/// Ranked cosine neighbors of a query token.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborList {
    pub query: String,
    /// `(token, score)` by descending score, ties by ascending token.
    pub entries: Vec<(String, f32)>,
}

impl NeighborList {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    score: f32,
    row: usize,
}

fn rank(table: &EmbeddingTable, a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| table.word(a.row).cmp(table.word(b.row)))
}

fn top_k(table: &EmbeddingTable, mut candidates: Vec<Candidate>, k: usize) -> Vec<Candidate> {
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, |a, b| rank(table, a, b));
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(|a, b| rank(table, a, b));
    candidates
}

fn scan(
    table: &EmbeddingTable,
    query_row: usize,
    rows: std::ops::Range<usize>,
    k: usize,
) -> Vec<Candidate> {
    let q = table.row(query_row);
    let eps = f64::from(ZERO_NORM_EPSILON);
    let candidates = rows
        .filter(|&row| row != query_row)
        .filter_map(|row| {
            let v = table.row(row);
            (norm(v) > eps).then(|| Candidate {
                score: cosine_unchecked(q, v),
                row,
            })
        })
        .collect();
    top_k(table, candidates, k)
}

fn query_row(table: &EmbeddingTable, query: &str, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    table.row_of(query).ok_or_else(|| Error::unknown(query))
}

fn finish(table: &EmbeddingTable, query: &str, ranked: Vec<Candidate>) -> NeighborList {
    NeighborList {
        query: query.to_owned(),
        entries: ranked
            .into_iter()
            .map(|c| {
                (
                    String::from_utf8_lossy(table.word(c.row)).into_owned(),
                    c.score,
                )
            })
            .collect(),
    }
}

/// The `k` entries most cosine-similar to `query`, excluding the query
/// itself and zero vectors. Returns fewer than `k` when the table is small.
pub fn nearest_neighbors(table: &EmbeddingTable, query: &str, k: usize) -> Result<NeighborList> {
    let q = query_row(table, query, k)?;
    Ok(finish(table, query, scan(table, q, 0..table.len(), k)))
}

/// Same result as [`nearest_neighbors`], scanning contiguous shards of the
/// table on up to `threads` threads.
pub fn nearest_neighbors_parallel(
    table: &EmbeddingTable,
    query: &str,
    k: usize,
    threads: usize,
) -> Result<NeighborList> {
    let q = query_row(table, query, k)?;
    let threads = threads.max(1).min(table.len().max(1));
    if threads == 1 {
        return Ok(finish(table, query, scan(table, q, 0..table.len(), k)));
    }
    let shard = table.len().div_ceil(threads);
    let merged: Vec<Candidate> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|i| {
                let rows = (i * shard).min(table.len())..((i + 1) * shard).min(table.len());
                scope.spawn(move || scan(table, q, rows, k))
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("neighbor scan panicked"))
            .collect()
    });
    Ok(finish(table, query, top_k(table, merged, k)))
}

/// Neighbor lists of `query` in the refined and the original table.
pub fn compare_neighbors(
    refined: &EmbeddingTable,
    original: &EmbeddingTable,
    query: &str,
    k: usize,
) -> Result<(NeighborList, NeighborList)> {
    fn tag(table: &'static str) -> impl Fn(Error) -> Error {
        move |e| match e {
            Error::UnknownToken { token, .. } => Error::UnknownToken {
                token,
                table: Some(table.to_owned()),
            },
            other => other,
        }
    }
    let left = nearest_neighbors(refined, query, k).map_err(tag("refined"))?;
    let right = nearest_neighbors(original, query, k).map_err(tag("original"))?;
    Ok((left, right))
}

/// Formats a score truncated (not rounded) to two decimals.
pub fn truncate2(score: f32) -> String {
    // Six-decimal rounding first absorbs f32 representation error such as
    // 0.29 being stored as 0.28999999.
    let six = format!("{:.6}", f64::from(score));
    let cut = &six[..six.find('.').map_or(six.len(), |d| d + 3)];
    if cut
        .trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        cut.trim_start_matches('-').to_owned()
    } else {
        cut.to_owned()
    }
}
