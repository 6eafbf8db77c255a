use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use embedrift::analysis::{
    nearest_neighbors_parallel, project_trajectories, write_trajectory_csv, NeighborList,
};
use embedrift::corpus::{self, CorpusStats};
use embedrift::trajectory::{mean_drift, shared_tokens, table_drift};
use embedrift::{
    refine as run_refine, Corpus, EmbeddingTable, Error, FilterConfig, RefineConfig, Result,
    TrajectoryLog, VectorFormat,
};

use crate::render;
use crate::{CorpusFormat, DriftArgs, NeighborArgs, RefineArgs, TrajectoryArgs};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_vectors(path: &Path, format: VectorFormat) -> Result<EmbeddingTable> {
    // Opening first gives a path-qualified I/O error.
    drop(open(path)?);
    EmbeddingTable::load(path, format)
}

fn unknown(tokens: Vec<&str>, table: &str) -> Error {
    Error::UnknownToken {
        token: tokens.join(", "),
        table: Some(table.to_owned()),
    }
}

fn threads() -> usize {
    std::env::var("EMBEDRIFT_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Serialize)]
struct FilterEcho<'a> {
    allowed_pos: Vec<&'a str>,
    use_lemma: bool,
    lowercase_except_propn: bool,
    stopword_count: usize,
}

#[derive(Serialize)]
struct StatsEcho {
    #[serde(flatten)]
    stats: CorpusStats,
    mean_document_length: f64,
}

#[derive(Serialize)]
struct PretrainedEcho {
    vocab: usize,
    dim: usize,
    duplicates: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    vectors_path: &'a Path,
    vectors_format: String,
    corpus_paths: &'a [PathBuf],
    corpus_format: CorpusFormat,
    stopwords_path: Option<&'a Path>,
    output_dir: &'a Path,
    config: &'a RefineConfig,
    filter: FilterEcho<'a>,
    corpus_stats: StatsEcho,
    pretrained: PretrainedEcho,
    oov_tokens: usize,
    refined_entries: usize,
    snapshots: usize,
    started_at_unix: u64,
    duration_secs: f64,
}

pub fn refine(args: RefineArgs) -> Result<()> {
    let config = RefineConfig {
        window_size: args.window,
        learning_rate: args.alpha,
        epochs: args.epochs,
        normalize_pretrained: !args.no_normalize_pretrained,
        include_pretrained: args.include_pretrained,
        ..RefineConfig::default()
    };
    config.validate()?;

    let started_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());

    let stopwords = match &args.stopwords {
        Some(path) => corpus::read_stopwords(open(path)?)?,
        None => Vec::new(),
    };
    let mut filter = FilterConfig::default().with_stopwords(stopwords);
    filter.allowed_pos = args
        .pos
        .iter()
        .map(|p| p.trim().to_owned())
        .filter(|p| !p.is_empty())
        .collect();
    filter.use_lemma = !args.no_lemma;
    filter.validate()?;

    let mut corpus = Corpus::default();
    for path in &args.corpus {
        let reader = open(path)?;
        let part = match args.format {
            CorpusFormat::Tsv => corpus::load_tagged_tsv(reader, &filter),
            CorpusFormat::Plain => {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("doc");
                corpus::load_plain_text(reader, &filter, &format!("{stem}:"))
            }
        }
        .map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        corpus.extend(part);
    }
    let stats = corpus.stats();
    eprintln!(
        "ingested {} documents, {} tokens ({} unique), mean document length {:.2}",
        stats.documents,
        stats.total_tokens,
        stats.unique_tokens,
        stats.mean_document_length()
    );

    let pretrained = load_vectors(&args.vectors, args.vectors_format.into())?;
    let oov_tokens = {
        let mut unique: Vec<&str> = corpus
            .documents()
            .iter()
            .flat_map(|d| d.tokens.iter().map(String::as_str))
            .collect();
        unique.sort_unstable();
        unique.dedup();
        unique.iter().filter(|t| !pretrained.contains(t)).count()
    };
    eprintln!(
        "{} of {} unique tokens have no pre-trained vector",
        oov_tokens, stats.unique_tokens
    );

    let output = run_refine(&corpus, &pretrained, &config)?;

    fs::create_dir_all(&args.out)?;
    output.table.save_text(&args.out.join("refined.vec"))?;
    let mut w = BufWriter::new(File::create(args.out.join("trajectory.jsonl"))?);
    output.log.export_jsonl(&mut w)?;
    w.flush()?;

    let manifest = RunManifest {
        command: "refine",
        vectors_path: &args.vectors,
        vectors_format: format!(
            "{:?}",
            VectorFormat::from(args.vectors_format).resolve(&args.vectors)
        )
        .to_lowercase(),
        corpus_paths: &args.corpus,
        corpus_format: args.format,
        stopwords_path: args.stopwords.as_deref(),
        output_dir: &args.out,
        config: &config,
        filter: FilterEcho {
            allowed_pos: filter.allowed_pos.iter().map(String::as_str).collect(),
            use_lemma: filter.use_lemma,
            lowercase_except_propn: filter.lowercase_except_propn,
            stopword_count: filter.stopwords().len(),
        },
        corpus_stats: StatsEcho {
            stats,
            mean_document_length: stats.mean_document_length(),
        },
        pretrained: PretrainedEcho {
            vocab: pretrained.len(),
            dim: pretrained.dim(),
            duplicates: pretrained.duplicates(),
        },
        oov_tokens,
        refined_entries: output.table.len(),
        snapshots: output.log.len(),
        started_at_unix,
        duration_secs: output.elapsed.as_secs_f64(),
    };
    let mut w = BufWriter::new(File::create(args.out.join("run.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;

    eprintln!(
        "refined {} tokens, {} snapshots in {:.3} s -> {}",
        output.table.len(),
        output.log.len(),
        output.elapsed.as_secs_f64(),
        args.out.display()
    );
    Ok(())
}

pub fn neighbors(args: NeighborArgs) -> Result<()> {
    let format = args.vectors_format.into();
    let refined = load_vectors(&args.refined, format)?;
    let original = args
        .original
        .as_deref()
        .map(|p| load_vectors(p, format))
        .transpose()?;

    let missing: Vec<&str> = args
        .token
        .iter()
        .map(String::as_str)
        .filter(|t| !refined.contains(t))
        .collect();
    if !missing.is_empty() {
        return Err(unknown(missing, "refined"));
    }
    if let Some(orig) = &original {
        let missing: Vec<&str> = args
            .token
            .iter()
            .map(String::as_str)
            .filter(|t| !orig.contains(t))
            .collect();
        if !missing.is_empty() {
            return Err(unknown(missing, "original"));
        }
    }

    let k = args.k as usize;
    let threads = threads();
    let mut results: Vec<(NeighborList, Option<NeighborList>)> = Vec::new();
    for token in &args.token {
        let refined_list = nearest_neighbors_parallel(&refined, token, k, threads)?;
        let original_list = original
            .as_ref()
            .map(|orig| nearest_neighbors_parallel(orig, token, k, threads))
            .transpose()?;
        results.push((refined_list, original_list));
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.csv {
        render::neighbors_csv(&mut out, &results)?;
    } else {
        render::neighbors_table(&mut out, &results)?;
    }
    out.flush()?;
    Ok(())
}

pub fn drift(args: DriftArgs) -> Result<()> {
    let format = args.vectors_format.into();
    let refined = load_vectors(&args.refined, format)?;
    let original = load_vectors(&args.original, format)?;
    if refined.dim() != original.dim() {
        return Err(Error::Dimension {
            expected: refined.dim(),
            found: original.dim(),
        });
    }

    let tokens: Vec<String> = if args.token.is_empty() {
        shared_tokens(&refined, &original)
    } else {
        args.token.clone()
    };
    let missing: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !refined.contains(t))
        .collect();
    if !missing.is_empty() {
        return Err(unknown(missing, "refined"));
    }

    let rows = tokens
        .iter()
        .map(|t| Ok((t.as_str(), table_drift(&refined, &original, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let mean = if args.mean {
        Some(mean_drift(
            &refined,
            &original,
            tokens.iter().map(String::as_str),
        )?)
    } else {
        None
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.csv {
        render::drift_csv(&mut out, &rows, mean)?;
    } else {
        render::drift_table(&mut out, &rows, mean)?;
    }
    out.flush()?;
    Ok(())
}

pub fn trajectory(args: TrajectoryArgs) -> Result<()> {
    if args.token.len() > 2 {
        return Err(Error::Config(format!(
            "at most 2 tokens per trajectory plot, got {}",
            args.token.len()
        )));
    }
    let log = TrajectoryLog::import_jsonl(open(&args.trajectory)?)?;
    let mut original = load_vectors(&args.original, args.vectors_format.into())?;
    if original.dim() != log.dim() {
        return Err(Error::Dimension {
            expected: log.dim(),
            found: original.dim(),
        });
    }
    let config = &log.header().config;
    if config.normalize_pretrained {
        original.normalize_all_in_place(config.zero_norm_epsilon);
    }

    let tokens: Vec<&str> = args.token.iter().map(String::as_str).collect();
    let missing: Vec<&str> = tokens
        .iter()
        .copied()
        .filter(|t| log.token_history(t).is_empty())
        .collect();
    if !missing.is_empty() {
        return Err(unknown(missing, "trajectory"));
    }
    let projected = project_trajectories(&log, Some(&original), &tokens, args.dims as usize)?;

    let mut w = BufWriter::new(File::create(&args.out)?);
    write_trajectory_csv(&projected, &mut w)?;
    w.flush()?;
    for t in &projected {
        eprintln!("{}: {} snapshots", t.token, t.points.len());
    }
    Ok(())
}
