//! C interface to `embedrift`.
//!
//! Every function returns an [`EmbedriftStatus`]. On failure a message is
//! available from [`embedrift_last_error`] on the calling thread until the
//! next failing call. Handles returned through out-pointers are owned by the
//! caller and released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use embedrift::analysis::nearest_neighbors;
use embedrift::corpus::{load_plain_text, load_tagged_tsv, read_stopwords};
use embedrift::trajectory::{mean_drift, shared_tokens, table_drift};
use embedrift::{
    Corpus, EmbeddingTable, Error, FilterConfig, RefineConfig, RefineOutput, VectorFormat,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedriftStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Dimension = 5,
    Config = 6,
    Parse = 7,
    Version = 8,
    UnknownToken = 9,
    Undefined = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedriftVectorFormat {
    Auto = 0,
    Binary = 1,
    Text = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedriftCorpusFormat {
    Tsv = 0,
    Plain = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbedriftRefineConfig {
    pub window_size: usize,
    pub learning_rate: f32,
    pub epochs: u32,
    pub zero_norm_epsilon: f32,
    pub normalize_pretrained: bool,
    pub include_pretrained: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmbedriftCorpusStats {
    pub total_tokens: usize,
    pub unique_tokens: usize,
    pub documents: usize,
}

/// Token vectors of a fixed dimension.
pub struct EmbedriftTable(EmbeddingTable);

/// Filtered token documents.
pub struct EmbedriftCorpus(Corpus);

/// Refined table plus the full update log.
pub struct EmbedriftRun(RefineOutput);

/// Ranked neighbors of one query.
pub struct EmbedriftNeighbors(Vec<(CString, f32)>);

struct Failure(EmbedriftStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => EmbedriftStatus::Io,
            Error::Format { .. } | Error::Truncated { .. } => EmbedriftStatus::Format,
            Error::Dimension { .. } => EmbedriftStatus::Dimension,
            Error::Config(_) => EmbedriftStatus::Config,
            Error::Parse { .. } => EmbedriftStatus::Parse,
            Error::Version { .. } => EmbedriftStatus::Version,
            Error::UnknownToken { .. } => EmbedriftStatus::UnknownToken,
            _ => EmbedriftStatus::Undefined,
        };
        Failure(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EmbedriftStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmbedriftStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&message);
            EmbedriftStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EmbedriftStatus::NullArgument, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            EmbedriftStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn embedrift_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_load(
    path: *const c_char,
    format: EmbedriftVectorFormat,
    out: *mut *mut EmbedriftTable,
) -> EmbedriftStatus {
    guard(|| {
        let path = text(path, "path")?;
        let format = match format {
            EmbedriftVectorFormat::Auto => VectorFormat::Auto,
            EmbedriftVectorFormat::Binary => VectorFormat::Binary,
            EmbedriftVectorFormat::Text => VectorFormat::Text,
        };
        emit(
            out,
            EmbedriftTable(EmbeddingTable::load(Path::new(path), format)?),
        )
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_new(
    dim: usize,
    out: *mut *mut EmbedriftTable,
) -> EmbedriftStatus {
    guard(|| emit(out, EmbedriftTable(EmbeddingTable::new(dim)?)))
}

/// Inserts or replaces `token`. `values` must hold exactly the table dimension.
///
/// # Safety
/// `table` must come from this library, `token` must be NUL-terminated and
/// `values` must point to `len` floats.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_insert(
    table: *mut EmbedriftTable,
    token: *const c_char,
    values: *const f32,
    len: usize,
) -> EmbedriftStatus {
    guard(|| {
        let table = table.as_mut().ok_or_else(|| null("table"))?;
        let token = text(token, "token")?;
        if values.is_null() {
            return Err(null("values"));
        }
        table
            .0
            .insert(token, std::slice::from_raw_parts(values, len))?;
        Ok(())
    })
}

/// # Safety
/// `table` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_free(table: *mut EmbedriftTable) {
    release(table);
}

/// Dimension of the table, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_dim(table: *const EmbedriftTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.dim())
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_len(table: *const EmbedriftTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the vector of `token` into `out`, which has room for `capacity`
/// floats.
///
/// # Safety
/// `table` must come from this library, `token` must be NUL-terminated and
/// `out` must point to `capacity` writable floats.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_lookup(
    table: *const EmbedriftTable,
    token: *const c_char,
    out: *mut f32,
    capacity: usize,
) -> EmbedriftStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        let token = text(token, "token")?;
        let v = table.0.lookup(token).ok_or_else(|| Error::UnknownToken {
            token: token.to_owned(),
            table: None,
        })?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if capacity < v.len() {
            return Err(Failure(
                EmbedriftStatus::BufferTooSmall,
                format!("buffer holds {capacity} floats, vector has {}", v.len()),
            ));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// Writes the table in word2vec text format.
///
/// # Safety
/// `table` must come from this library and `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn embedrift_table_save_text(
    table: *const EmbedriftTable,
    path: *const c_char,
) -> EmbedriftStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        table.0.save_text(Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// Cosine similarity of two vectors of length `len`; 0 if either is zero.
///
/// # Safety
/// `a` and `b` must point to `len` floats and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_cosine(
    a: *const f32,
    b: *const f32,
    len: usize,
    out: *mut f32,
) -> EmbedriftStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("vector or output pointer"));
        }
        let a = std::slice::from_raw_parts(a, len);
        let b = std::slice::from_raw_parts(b, len);
        *out = embedrift::cosine(a, b)?;
        Ok(())
    })
}

/// Loads a corpus with the default filter (content POS tags, lemmas,
/// lowercasing except proper nouns). `stopwords_path` may be null.
///
/// # Safety
/// String arguments must be NUL-terminated (or null where allowed) and `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_corpus_load(
    path: *const c_char,
    format: EmbedriftCorpusFormat,
    stopwords_path: *const c_char,
    out: *mut *mut EmbedriftCorpus,
) -> EmbedriftStatus {
    guard(|| {
        let path = text(path, "path")?;
        let stopwords = if stopwords_path.is_null() {
            Vec::new()
        } else {
            read_stopwords(BufReader::new(File::open(text(
                stopwords_path,
                "stopwords path",
            )?)?))?
        };
        let filter = FilterConfig::default().with_stopwords(stopwords);
        let reader = BufReader::new(File::open(path)?);
        let corpus = match format {
            EmbedriftCorpusFormat::Tsv => load_tagged_tsv(reader, &filter)?,
            EmbedriftCorpusFormat::Plain => load_plain_text(reader, &filter, "doc")?,
        };
        emit(out, EmbedriftCorpus(corpus))
    })
}

/// # Safety
/// `corpus` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn embedrift_corpus_free(corpus: *mut EmbedriftCorpus) {
    release(corpus);
}

/// # Safety
/// `corpus` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_corpus_stats(
    corpus: *const EmbedriftCorpus,
    out: *mut EmbedriftCorpusStats,
) -> EmbedriftStatus {
    guard(|| {
        let stats = borrow(corpus, "corpus")?.0.stats();
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = EmbedriftCorpusStats {
            total_tokens: stats.total_tokens,
            unique_tokens: stats.unique_tokens,
            documents: stats.documents,
        };
        Ok(())
    })
}

/// Window 13, learning rate 0.01, 2 epochs, pre-trained vectors normalized.
#[no_mangle]
pub extern "C" fn embedrift_refine_config_default() -> EmbedriftRefineConfig {
    let c = RefineConfig::default();
    EmbedriftRefineConfig {
        window_size: c.window_size,
        learning_rate: c.learning_rate,
        epochs: c.epochs,
        zero_norm_epsilon: c.zero_norm_epsilon,
        normalize_pretrained: c.normalize_pretrained,
        include_pretrained: c.include_pretrained,
    }
}

/// Refines `pretrained` over `corpus`. Neither input is modified.
///
/// # Safety
/// Handles must come from this library and `config` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_refine(
    corpus: *const EmbedriftCorpus,
    pretrained: *const EmbedriftTable,
    config: *const EmbedriftRefineConfig,
    out: *mut *mut EmbedriftRun,
) -> EmbedriftStatus {
    guard(|| {
        let corpus = borrow(corpus, "corpus")?;
        let pretrained = borrow(pretrained, "pretrained table")?;
        let c = borrow(config, "config")?;
        let config = RefineConfig {
            window_size: c.window_size,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            zero_norm_epsilon: c.zero_norm_epsilon,
            normalize_pretrained: c.normalize_pretrained,
            include_pretrained: c.include_pretrained,
        };
        emit(
            out,
            EmbedriftRun(embedrift::refine(&corpus.0, &pretrained.0, &config)?),
        )
    })
}

/// # Safety
/// `run` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn embedrift_run_free(run: *mut EmbedriftRun) {
    release(run);
}

/// Copies the refined table into a new handle.
///
/// # Safety
/// `run` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_run_table(
    run: *const EmbedriftRun,
    out: *mut *mut EmbedriftTable,
) -> EmbedriftStatus {
    guard(|| emit(out, EmbedriftTable(borrow(run, "run")?.0.table.clone())))
}

/// Number of recorded snapshots, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn embedrift_run_snapshot_count(run: *const EmbedriftRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.log.len())
}

/// Number of snapshots recorded for `token`.
///
/// # Safety
/// `run` must come from this library, `token` must be NUL-terminated and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_run_history_len(
    run: *const EmbedriftRun,
    token: *const c_char,
    out: *mut usize,
) -> EmbedriftStatus {
    guard(|| {
        let n = borrow(run, "run")?
            .0
            .log
            .token_history(text(token, "token")?)
            .len();
        *out.as_mut().ok_or_else(|| null("output pointer"))? = n;
        Ok(())
    })
}

/// Writes the update log as JSON lines.
///
/// # Safety
/// `run` must come from this library and `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn embedrift_run_export_trajectory(
    run: *const EmbedriftRun,
    path: *const c_char,
) -> EmbedriftStatus {
    guard(|| {
        let run = borrow(run, "run")?;
        let mut w = BufWriter::new(File::create(text(path, "path")?)?);
        run.0.log.export_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// The `k` nearest neighbors of `token` by cosine similarity.
///
/// # Safety
/// `table` must come from this library, `token` must be NUL-terminated and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_nearest_neighbors(
    table: *const EmbedriftTable,
    token: *const c_char,
    k: usize,
    out: *mut *mut EmbedriftNeighbors,
) -> EmbedriftStatus {
    guard(|| {
        let list = nearest_neighbors(&borrow(table, "table")?.0, text(token, "token")?, k)?;
        let entries = list
            .entries
            .into_iter()
            .map(|(t, s)| (CString::new(t.replace('\0', " ")).unwrap_or_default(), s))
            .collect();
        emit(out, EmbedriftNeighbors(entries))
    })
}

/// # Safety
/// `list` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn embedrift_neighbors_len(list: *const EmbedriftNeighbors) -> usize {
    list.as_ref().map_or(0, |l| l.0.len())
}

/// Entry `index` of `list`. The token pointer stays valid until the list is
/// freed.
///
/// # Safety
/// `list` must come from this library and the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_neighbors_get(
    list: *const EmbedriftNeighbors,
    index: usize,
    token: *mut *const c_char,
    score: *mut f32,
) -> EmbedriftStatus {
    guard(|| {
        let list = borrow(list, "list")?;
        let (t, s) = list.0.get(index).ok_or_else(|| {
            Failure(
                EmbedriftStatus::Config,
                format!("index {index} out of range for {} neighbors", list.0.len()),
            )
        })?;
        if token.is_null() || score.is_null() {
            return Err(null("output pointer"));
        }
        *token = t.as_ptr();
        *score = *s;
        Ok(())
    })
}

/// # Safety
/// `list` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn embedrift_neighbors_free(list: *mut EmbedriftNeighbors) {
    release(list);
}

/// Cosine between the refined and original vectors of `token`. Sets
/// `present` to false (and `out` to 0) when `original` lacks the token.
///
/// # Safety
/// Handles must come from this library, `token` must be NUL-terminated and
/// the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_drift(
    refined: *const EmbedriftTable,
    original: *const EmbedriftTable,
    token: *const c_char,
    out: *mut f32,
    present: *mut bool,
) -> EmbedriftStatus {
    guard(|| {
        let d = table_drift(
            &borrow(refined, "refined table")?.0,
            &borrow(original, "original table")?.0,
            text(token, "token")?,
        )?;
        if out.is_null() || present.is_null() {
            return Err(null("output pointer"));
        }
        *out = d.unwrap_or(0.0);
        *present = d.is_some();
        Ok(())
    })
}

/// Mean drift over all tokens present in both tables.
///
/// # Safety
/// Handles must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn embedrift_mean_drift(
    refined: *const EmbedriftTable,
    original: *const EmbedriftTable,
    out: *mut f64,
) -> EmbedriftStatus {
    guard(|| {
        let refined = &borrow(refined, "refined table")?.0;
        let original = &borrow(original, "original table")?.0;
        let shared = shared_tokens(refined, original);
        let mean = mean_drift(refined, original, shared.iter().map(String::as_str))?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = mean;
        Ok(())
    })
}
