//! Per-occurrence update history and drift against the pre-trained origin.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStats;
use crate::error::{Error, Result};
use crate::refine::RefineConfig;
use crate::store::{bits_eq, cosine, norm, EmbeddingTable, Vector};

pub const SCHEMA_VERSION: &str = "1";

/// Run metadata stored as the first line of a trajectory file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: String,
    pub dim: usize,
    pub config: RefineConfig,
    pub stats: CorpusStats,
}

impl LogHeader {
    pub fn new(dim: usize, config: RefineConfig, stats: CorpusStats) -> Self {
        LogHeader {
            schema_version: SCHEMA_VERSION.to_owned(),
            dim,
            config,
            stats,
        }
    }
}

/// An owned copy of one logged update.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub token: String,
    /// 1-based epoch.
    pub epoch: u32,
    /// 1-based occurrence of the token within its epoch.
    pub occurrence: u32,
    /// Window index in run order, counted across epochs.
    pub position: u64,
    pub vector: Vector,
    /// Set when the update produced the zero vector.
    pub zero: bool,
}

/// A borrowed view of one logged update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRef<'a> {
    pub token: &'a str,
    pub epoch: u32,
    pub occurrence: u32,
    pub position: u64,
    pub vector: &'a [f32],
    pub zero: bool,
}

impl SnapshotRef<'_> {
    pub fn to_owned(&self) -> Snapshot {
        Snapshot {
            token: self.token.to_owned(),
            epoch: self.epoch,
            occurrence: self.occurrence,
            position: self.position,
            vector: self.vector.into(),
            zero: self.zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Record {
    token: u32,
    epoch: u32,
    occurrence: u32,
    position: u64,
    zero: bool,
}

/// Append-only snapshot history of a refinement run.
///
/// Vectors are stored back to back in one buffer; tokens are interned in
/// order of first appearance.
#[derive(Clone, Debug)]
pub struct TrajectoryLog {
    header: LogHeader,
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    records: Vec<Record>,
    data: Vec<f32>,
}

impl TrajectoryLog {
    pub fn new(header: LogHeader) -> Self {
        TrajectoryLog {
            header,
            tokens: Vec::new(),
            ids: HashMap::new(),
            records: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub(crate) fn reserve(&mut self, snapshots: usize) {
        self.records.reserve(snapshots);
        self.data.reserve(snapshots.saturating_mul(self.header.dim));
    }

    pub(crate) fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    /// Appends a snapshot. Positions must be strictly increasing and the
    /// vector must match the log's dimensionality.
    pub fn push(&mut self, snapshot: &Snapshot) -> Result<()> {
        if snapshot.vector.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: snapshot.vector.len(),
            });
        }
        if let Some(last) = self.records.last() {
            if snapshot.position <= last.position {
                return Err(Error::Undefined(format!(
                    "snapshot position {} does not follow {}",
                    snapshot.position, last.position
                )));
            }
        }
        let id = self.intern(&snapshot.token);
        self.push_interned(
            id,
            snapshot.epoch,
            snapshot.occurrence,
            snapshot.position,
            &snapshot.vector,
            snapshot.zero,
        );
        Ok(())
    }

    pub(crate) fn push_interned(
        &mut self,
        token: u32,
        epoch: u32,
        occurrence: u32,
        position: u64,
        vector: &[f32],
        zero: bool,
    ) {
        debug_assert_eq!(vector.len(), self.header.dim);
        self.records.push(Record {
            token,
            epoch,
            occurrence,
            position,
            zero,
        });
        self.data.extend_from_slice(vector);
    }

    fn view(&self, idx: usize) -> SnapshotRef<'_> {
        let r = &self.records[idx];
        let dim = self.header.dim;
        SnapshotRef {
            token: &self.tokens[r.token as usize],
            epoch: r.epoch,
            occurrence: r.occurrence,
            position: r.position,
            vector: &self.data[idx * dim..(idx + 1) * dim],
            zero: r.zero,
        }
    }

    /// All snapshots in run order.
    pub fn snapshots(&self) -> impl ExactSizeIterator<Item = SnapshotRef<'_>> + '_ {
        (0..self.records.len()).map(move |i| self.view(i))
    }

    /// Distinct tokens in order of their first snapshot.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Snapshots of `token` in run order; empty if it was never updated.
    pub fn token_history(&self, token: &str) -> Vec<SnapshotRef<'_>> {
        let Some(&id) = self.ids.get(token) else {
            return Vec::new();
        };
        (0..self.records.len())
            .filter(|&i| self.records[i].token == id)
            .map(|i| self.view(i))
            .collect()
    }

    /// The most recent snapshot of `token`.
    pub fn latest(&self, token: &str) -> Option<SnapshotRef<'_>> {
        let &id = self.ids.get(token)?;
        (0..self.records.len())
            .rev()
            .find(|&i| self.records[i].token == id)
            .map(|i| self.view(i))
    }

    /// Number of snapshots per token.
    pub fn counts(&self) -> HashMap<&str, usize> {
        let mut per_id = vec![0usize; self.tokens.len()];
        for r in &self.records {
            per_id[r.token as usize] += 1;
        }
        self.tokens.iter().map(String::as_str).zip(per_id).collect()
    }

    /// Writes the header line followed by one JSON object per snapshot.
    pub fn export_jsonl<W: Write>(&self, writer: &mut W) -> Result<()> {
        serde_json::to_writer(&mut *writer, &self.header).map_err(json_io)?;
        writer.write_all(b"\n")?;
        for s in self.snapshots() {
            let line = SnapshotLine {
                token: s.token.into(),
                epoch: s.epoch,
                occ: s.occurrence,
                pos: s.position,
                vec: s.vector.into(),
                zero: s.zero,
            };
            serde_json::to_writer(&mut *writer, &line).map_err(json_io)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn import_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing header line".into(),
        })??;
        let value: serde_json::Value =
            serde_json::from_str(&header_line).map_err(|e| parse_error(1, e))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(SCHEMA_VERSION) => {}
            other => {
                return Err(Error::Version {
                    found: other
                        .map(str::to_owned)
                        .unwrap_or_else(|| "<missing>".into()),
                    expected: SCHEMA_VERSION.into(),
                })
            }
        }
        let header: LogHeader = serde_json::from_value(value).map_err(|e| parse_error(1, e))?;
        let mut log = TrajectoryLog::new(header);

        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: SnapshotLine =
                serde_json::from_str(&line).map_err(|e| parse_error(line_no, e))?;
            let snapshot = Snapshot {
                token: s.token.into_owned(),
                epoch: s.epoch,
                occurrence: s.occ,
                position: s.pos,
                vector: Vector::new(s.vec.into_owned()),
                zero: s.zero,
            };
            log.push(&snapshot).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        Ok(log)
    }
}

impl PartialEq for TrajectoryLog {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.tokens == other.tokens
            && self.records == other.records
            && bits_eq(&self.data, &other.data)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotLine<'a> {
    #[serde(borrow)]
    token: std::borrow::Cow<'a, str>,
    epoch: u32,
    occ: u32,
    pos: u64,
    vec: std::borrow::Cow<'a, [f32]>,
    zero: bool,
}

fn json_io(e: serde_json::Error) -> Error {
    Error::Io(e.into())
}

fn parse_error(line: usize, e: serde_json::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Cosine between `vector` and the origin entry of `token`, or `None` when
/// the origin has no such token.
pub fn drift(vector: &[f32], origin: &EmbeddingTable, token: &str) -> Result<Option<f32>> {
    origin.lookup(token).map(|o| cosine(vector, o)).transpose()
}

/// Drift of a refined table entry. Fails if `token` is missing from `refined`.
pub fn table_drift(
    refined: &EmbeddingTable,
    origin: &EmbeddingTable,
    token: &str,
) -> Result<Option<f32>> {
    let vector = refined.lookup(token).ok_or_else(|| Error::UnknownToken {
        token: token.to_owned(),
        table: Some("refined".into()),
    })?;
    drift(vector, origin, token)
}

/// Mean drift over those `tokens` present in both tables.
pub fn mean_drift<'a, I>(
    refined: &EmbeddingTable,
    origin: &EmbeddingTable,
    tokens: I,
) -> Result<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for token in tokens {
        if let (Some(r), Some(o)) = (refined.lookup(token), origin.lookup(token)) {
            sum += f64::from(cosine(r, o)?);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Undefined(
            "no tokens are present in both tables".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Tokens present in both tables, in byte order.
pub fn shared_tokens(refined: &EmbeddingTable, origin: &EmbeddingTable) -> Vec<String> {
    let mut out: Vec<String> = refined
        .iter_raw()
        .filter(|(w, _)| origin.lookup_bytes(w).is_some())
        .map(|(w, _)| String::from_utf8_lossy(w).into_owned())
        .collect();
    out.sort_unstable();
    out
}

/// True when `v` is the zero vector or has unit norm within `1e-5`.
pub fn is_unit_or_zero(v: &[f32]) -> bool {
    let n = norm(v);
    n == 0.0 || (n - 1.0).abs() <= 1e-5
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f32::consts::FRAC_1_SQRT_2;

    fn header(dim: usize) -> LogHeader {
        LogHeader::new(dim, RefineConfig::default(), CorpusStats::default())
    }

    fn snap(token: &str, pos: u64, v: &[f32]) -> Snapshot {
        Snapshot {
            token: token.into(),
            epoch: 1,
            occurrence: 1,
            position: pos,
            vector: v.into(),
            zero: v.iter().all(|x| *x == 0.0),
        }
    }

    #[test]
    fn history_filters_in_run_order() {
        let mut log = TrajectoryLog::new(header(2));
        log.push(&snap("storm", 0, &[1.0, 0.0])).unwrap();
        log.push(&snap("rain", 1, &[0.0, 1.0])).unwrap();
        log.push(&snap("storm", 2, &[0.0, 1.0])).unwrap();
        log.push(&snap("storm", 5, &[1.0, 0.0])).unwrap();
        let h = log.token_history("storm");
        assert_eq!(h.iter().map(|s| s.position).collect::<Vec<_>>(), [0, 2, 5]);
        assert!(log.token_history("hail").is_empty());
        assert_eq!(log.latest("storm").unwrap().position, 5);
        assert_eq!(log.counts()["storm"], 3);
    }

    #[test]
    fn push_rejects_out_of_order_and_bad_dim() {
        let mut log = TrajectoryLog::new(header(2));
        log.push(&snap("a", 3, &[1.0, 0.0])).unwrap();
        assert!(log.push(&snap("a", 3, &[1.0, 0.0])).is_err());
        assert!(matches!(
            log.push(&snap("a", 4, &[1.0])),
            Err(Error::Dimension { .. })
        ));
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn drift_examples() {
        let mut origin = EmbeddingTable::new(2).unwrap();
        origin.insert("a", &[1.0, 0.0]).unwrap();
        assert_eq!(drift(&[1.0, 0.0], &origin, "a").unwrap(), Some(1.0));
        assert_eq!(drift(&[1.0, 0.0], &origin, "behaviour").unwrap(), None);
        let d = drift(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &origin, "a")
            .unwrap()
            .unwrap();
        assert!((d - FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn mean_drift_examples() {
        let mut origin = EmbeddingTable::new(2).unwrap();
        let mut refined = EmbeddingTable::new(2).unwrap();
        origin.insert("a", &[1.0, 0.0]).unwrap();
        origin.insert("b", &[1.0, 0.0]).unwrap();
        // cos = 0.2 and 0.6 respectively.
        refined.insert("a", &[0.2, (1.0f32 - 0.04).sqrt()]).unwrap();
        refined.insert("b", &[0.6, 0.8]).unwrap();
        refined.insert("oov", &[0.6, 0.8]).unwrap();
        let m = mean_drift(&refined, &origin, ["a", "b", "oov"]).unwrap();
        assert!((m - 0.4).abs() < 1e-6, "{m}");

        let m = mean_drift(&origin, &origin, ["a", "b"]).unwrap();
        assert_eq!(m, 1.0);

        assert!(matches!(
            mean_drift(&refined, &origin, ["oov"]),
            Err(Error::Undefined(_))
        ));
        assert_eq!(shared_tokens(&refined, &origin), ["a", "b"]);
    }

    #[test]
    fn table_drift_requires_refined_token() {
        let origin = EmbeddingTable::new(2).unwrap();
        let refined = EmbeddingTable::new(2).unwrap();
        assert!(matches!(
            table_drift(&refined, &origin, "x"),
            Err(Error::UnknownToken { .. })
        ));
    }

    #[test]
    fn empty_log_is_one_header_line() {
        let log = TrajectoryLog::new(header(3));
        let mut out = Vec::new();
        log.export_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("{\"schema_version\":\"1\""));
        assert_eq!(TrajectoryLog::import_jsonl(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn snapshot_line_fields() {
        let mut log = TrajectoryLog::new(header(2));
        log.push(&snap("a", 0, &[0.6, 0.8])).unwrap();
        let mut out = Vec::new();
        log.export_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            r#"{"token":"a","epoch":1,"occ":1,"pos":0,"vec":[0.6,0.8],"zero":false}"#
        );
    }

    #[test]
    fn import_errors() {
        let err = TrajectoryLog::import_jsonl(r#"{"schema_version":"2"}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Version { .. }), "{err}");

        let mut out = Vec::new();
        TrajectoryLog::new(header(2))
            .export_jsonl(&mut out)
            .unwrap();
        out.extend_from_slice(b"{\"token\":\"a\"}\n");
        let err = TrajectoryLog::import_jsonl(&out[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        assert!(matches!(
            TrajectoryLog::import_jsonl(&b""[..]),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn json_f32_round_trip_is_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200_000 {
            let x = f32::from_bits(rng.gen::<u32>());
            if !x.is_finite() {
                continue;
            }
            let text = serde_json::to_string(&x).unwrap();
            let back: f32 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x:e} via {text}");
        }
    }

    pub(crate) fn arb_log() -> impl Strategy<Value = TrajectoryLog> {
        (1usize..=8).prop_flat_map(|dim| {
            proptest::collection::vec(
                (
                    "[a-z]{1,4}",
                    1u32..3,
                    1u32..50,
                    1u64..4,
                    proptest::collection::vec(
                        any::<f32>().prop_filter("finite", |x| x.is_finite()),
                        dim,
                    ),
                    any::<bool>(),
                ),
                0..=100,
            )
            .prop_map(move |rows| {
                let mut log = TrajectoryLog::new(header(dim));
                let mut pos = 0u64;
                for (token, epoch, occurrence, step, v, zero) in rows {
                    pos += step;
                    log.push(&Snapshot {
                        token,
                        epoch,
                        occurrence,
                        position: pos,
                        vector: v.into(),
                        zero,
                    })
                    .unwrap();
                }
                log
            })
        })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(log in arb_log()) {
            let mut out = Vec::new();
            log.export_jsonl(&mut out).unwrap();
            let back = TrajectoryLog::import_jsonl(&out[..]).unwrap();
            prop_assert_eq!(back, log);
        }
    }
}
