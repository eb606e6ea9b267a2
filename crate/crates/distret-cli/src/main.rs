//! `distret` — ingest, train, index, search, evaluate, and benchmark a
//! distribution-aware retrieval engine from the command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data/validation error,
//! 3 internal numeric error.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use distret::bench::run_bench;
use distret::context::{build_tool_context, render_context_block, ContextOptions};
use distret::corpus::{fuse_query_text, load_query_batch, Corpus, DataProfile, QueryRecord};
use distret::encoder::Checkpoint;
use distret::error::Error;
use distret::evaluation::{evaluate, EvalQuery};
use distret::index::{build_index, search, VectorStore};
use distret::training::{
    generate_synthetic_triples, load_triples, train, write_triples_jsonl, EpochRecord,
};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "distret",
    version,
    about = "Distribution-aware retrieval for statistical tool corpora"
)]
struct Cli {
    /// JSON run configuration; falls back to $DISTRET_CONFIG
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and print a summary
    Ingest {
        /// Corpus JSON Lines file (overrides config corpus_path)
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the encoder and write the best checkpoint plus an epoch log
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Where to write the checkpoint (overrides config model_path)
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Training triples file; omit with --synthetic
        #[arg(long)]
        triples: Option<PathBuf>,
        /// Generate training queries from the corpus instead of reading a file
        #[arg(long)]
        synthetic: bool,
        /// Queries generated per entry with --synthetic
        #[arg(long, default_value_t = 30)]
        per_entry: usize,
        /// Overrides both the initialization and shuffle seeds
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Encode the corpus and persist the search index
    BuildIndex {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Where to write the index (overrides config index_path)
        #[arg(long)]
        index_out: Option<PathBuf>,
    },
    /// Retrieve the top-k entries for one query
    Search {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Needed only with --context
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// The natural-language request
        #[arg(long)]
        query: String,
        /// Query data profile as a JSON object; omitted fields default
        #[arg(long)]
        profile: Option<String>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Print the rendered documentation block instead of ranked lines
        #[arg(long)]
        context: bool,
    },
    /// Compute retrieval metrics over a labeled query file
    Eval {
        /// JSON Lines of {"query", "profile", "ground_truth"}
        queries: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Also write the report to a file
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure encoding latency and throughput
    Bench {
        /// JSON Lines of {"query", "profile"}
        queries: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Generate synthetic training queries from a corpus
    GenQueries {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        per_entry: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output triples file
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument { .. } => 1,
        Error::ZeroNorm { .. } | Error::NonFinite { .. } => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { corpus } => cmd_ingest(&config, corpus),
        Command::Train {
            corpus,
            model_out,
            triples,
            synthetic,
            per_entry,
            seed,
        } => cmd_train(
            config, corpus, model_out, triples, synthetic, per_entry, seed,
        ),
        Command::BuildIndex {
            corpus,
            model,
            index_out,
        } => cmd_build_index(&config, corpus, model, index_out),
        Command::Search {
            model,
            index,
            corpus,
            query,
            profile,
            k,
            context,
        } => cmd_search(
            &config,
            model,
            index,
            corpus,
            &query,
            profile.as_deref(),
            k,
            context,
        ),
        Command::Eval {
            queries,
            model,
            index,
            output,
        } => cmd_eval(&config, &queries, model, index, output),
        Command::Bench {
            queries,
            model,
            batch_size,
        } => cmd_bench(&config, &queries, model, batch_size),
        Command::GenQueries {
            corpus,
            per_entry,
            seed,
            output,
        } => cmd_gen_queries(&config, corpus, per_entry, seed, &output),
    }
}

fn cmd_ingest(config: &RunConfig, corpus_flag: Option<PathBuf>) -> Result<(), Error> {
    let path = RunConfig::require(
        corpus_flag,
        &config.corpus_path,
        "corpus path",
        "--corpus or config corpus_path",
    )?;
    let corpus = Corpus::load(&path)?;
    println!("{} entries OK", corpus.len());
    let mut by_domain: BTreeMap<&str, usize> = BTreeMap::new();
    for entry in corpus.iter() {
        *by_domain.entry(entry.domain.as_str()).or_insert(0) += 1;
    }
    println!("domains:");
    for (domain, count) in by_domain {
        println!("  {domain}: {count}");
    }
    Ok(())
}

/// The epoch whose checkpoint was retained: best NDCG@10, earliest on ties.
fn best_epoch(log: &[EpochRecord]) -> Option<&EpochRecord> {
    let mut best: Option<&EpochRecord> = None;
    for record in log {
        if best.is_none_or(|b| record.ndcg_at_10 > b.ndcg_at_10) {
            best = Some(record);
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    mut config: RunConfig,
    corpus_flag: Option<PathBuf>,
    model_out: Option<PathBuf>,
    triples_flag: Option<PathBuf>,
    synthetic: bool,
    per_entry: usize,
    seed: Option<u64>,
) -> Result<(), Error> {
    config.apply_seed(seed);
    let corpus_path = RunConfig::require(
        corpus_flag,
        &config.corpus_path,
        "corpus path",
        "--corpus or config corpus_path",
    )?;
    let model_path = RunConfig::require(
        model_out,
        &config.model_path,
        "model output path",
        "--model-out or config model_path",
    )?;
    let corpus = Corpus::load(&corpus_path)?;
    let triples = match (triples_flag, synthetic) {
        (Some(_), true) => {
            return Err(Error::InvalidArgument {
                message: "--triples and --synthetic are mutually exclusive".into(),
            })
        }
        (Some(path), false) => load_triples(&path)?,
        (None, true) => generate_synthetic_triples(&corpus, per_entry, config.train.shuffle_seed)?,
        (None, false) => {
            return Err(Error::InvalidArgument {
                message: "training needs --triples FILE or --synthetic".into(),
            })
        }
    };

    let outcome = train(&corpus, &triples, &config.encoder, &config.train)?;
    outcome.checkpoint.save(&model_path)?;

    let log_path = log_path_for(&model_path);
    let file = File::create(&log_path).map_err(|e| Error::Io {
        path: log_path.clone(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    for record in &outcome.log {
        let line = serde_json::to_string(record).expect("epoch record serializes");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::Io {
                path: log_path.clone(),
                source: e,
            })?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: log_path.clone(),
        source: e,
    })?;

    let summary = match best_epoch(&outcome.log) {
        Some(best) => serde_json::json!({
            "model": model_path,
            "log": log_path,
            "epochs": outcome.log.len(),
            "best_epoch": best.epoch,
            "ndcg@10": best.ndcg_at_10,
            "recall@1": best.recall_at_1,
        }),
        None => serde_json::json!({
            "model": model_path,
            "log": log_path,
            "epochs": 0,
        }),
    };
    println!("{summary}");
    Ok(())
}

fn log_path_for(model_path: &std::path::Path) -> PathBuf {
    let mut name = model_path.file_name().unwrap_or_default().to_os_string();
    name.push(".log.jsonl");
    model_path.with_file_name(name)
}

fn cmd_build_index(
    config: &RunConfig,
    corpus_flag: Option<PathBuf>,
    model_flag: Option<PathBuf>,
    index_out: Option<PathBuf>,
) -> Result<(), Error> {
    let corpus_path = RunConfig::require(
        corpus_flag,
        &config.corpus_path,
        "corpus path",
        "--corpus or config corpus_path",
    )?;
    let model_path = RunConfig::require(
        model_flag,
        &config.model_path,
        "model path",
        "--model or config model_path",
    )?;
    let index_path = RunConfig::require(
        index_out,
        &config.index_path,
        "index output path",
        "--index-out or config index_path",
    )?;
    let corpus = Corpus::load(&corpus_path)?;
    let checkpoint = Checkpoint::load(&model_path)?;
    let store = build_index(&corpus, &checkpoint.encoder)?;
    store.save(&index_path)?;
    println!(
        "{}",
        serde_json::json!({"index": index_path, "entries": store.len(), "dim": store.dim()})
    );
    Ok(())
}

fn parse_profile(profile: Option<&str>) -> Result<DataProfile, Error> {
    match profile {
        None => Ok(DataProfile::default()),
        Some(text) => serde_json::from_str(text).map_err(|e| Error::InvalidArgument {
            message: format!("invalid --profile JSON: {e}"),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    config: &RunConfig,
    model_flag: Option<PathBuf>,
    index_flag: Option<PathBuf>,
    corpus_flag: Option<PathBuf>,
    query: &str,
    profile: Option<&str>,
    k: usize,
    context: bool,
) -> Result<(), Error> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            message: "k must be positive".into(),
        });
    }
    // the profile tail always contributes tokens after fusion, so the raw
    // query text must carry signal of its own
    if distret::encoder::tokenize(query).is_empty() {
        return Err(Error::EmptyInput);
    }
    let model_path = RunConfig::require(
        model_flag,
        &config.model_path,
        "model path",
        "--model or config model_path",
    )?;
    let index_path = RunConfig::require(
        index_flag,
        &config.index_path,
        "index path",
        "--index or config index_path",
    )?;
    let checkpoint = Checkpoint::load(&model_path)?;
    let store = VectorStore::load(&index_path)?;
    let record = QueryRecord::new(query, parse_profile(profile)?)?;

    if context {
        let corpus_path = RunConfig::require(
            corpus_flag,
            &config.corpus_path,
            "corpus path (needed for --context)",
            "--corpus or config corpus_path",
        )?;
        let corpus = Corpus::load(&corpus_path)?;
        let ctx = build_tool_context(
            &store,
            &corpus,
            &checkpoint.encoder,
            &record,
            k,
            &ContextOptions::default(),
        )?;
        print!("{}", render_context_block(&ctx));
    } else {
        use distret::encoder::TextEncoder;
        let fused = fuse_query_text(&record)?;
        let embedding = checkpoint.encoder.encode_text(&fused)?;
        for hit in search(&store, &embedding, k)? {
            println!("{}\t{:.6}\t{}", hit.rank, hit.score, hit.fc_id);
        }
    }
    Ok(())
}

fn cmd_eval(
    config: &RunConfig,
    queries_path: &std::path::Path,
    model_flag: Option<PathBuf>,
    index_flag: Option<PathBuf>,
    output: Option<PathBuf>,
) -> Result<(), Error> {
    let model_path = RunConfig::require(
        model_flag,
        &config.model_path,
        "model path",
        "--model or config model_path",
    )?;
    let index_path = RunConfig::require(
        index_flag,
        &config.index_path,
        "index path",
        "--index or config index_path",
    )?;
    let checkpoint = Checkpoint::load(&model_path)?;
    let store = VectorStore::load(&index_path)?;
    let queries: Vec<EvalQuery> = load_triples(queries_path)?
        .into_iter()
        .map(|t| EvalQuery {
            record: t.query,
            ground_truth: t.target_fc_id,
        })
        .collect();
    let report = evaluate(&store, &checkpoint.encoder, &queries, &config.cutoffs)?;
    let json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    println!("{json}");
    if let Some(path) = output {
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn cmd_bench(
    config: &RunConfig,
    queries_path: &std::path::Path,
    model_flag: Option<PathBuf>,
    batch_size: Option<usize>,
) -> Result<(), Error> {
    let model_path = RunConfig::require(
        model_flag,
        &config.model_path,
        "model path",
        "--model or config model_path",
    )?;
    let batch_size = batch_size.unwrap_or(config.bench_batch_size);
    let checkpoint = Checkpoint::load(&model_path)?;
    let fused: Vec<String> = load_query_batch(queries_path)?
        .iter()
        .map(|item| fuse_query_text(&item.record))
        .collect::<Result<_, _>>()?;
    let report = run_bench(&checkpoint.encoder, &fused, batch_size)?;
    let mut json = serde_json::to_value(&report).expect("report serializes");
    json["host"] = serde_json::json!({
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("report serializes")
    );
    Ok(())
}

fn cmd_gen_queries(
    config: &RunConfig,
    corpus_flag: Option<PathBuf>,
    per_entry: usize,
    seed: Option<u64>,
    output: &std::path::Path,
) -> Result<(), Error> {
    let corpus_path = RunConfig::require(
        corpus_flag,
        &config.corpus_path,
        "corpus path",
        "--corpus or config corpus_path",
    )?;
    let corpus = Corpus::load(&corpus_path)?;
    let seed = seed.unwrap_or(config.train.shuffle_seed);
    let triples = generate_synthetic_triples(&corpus, per_entry, seed)?;
    let file = File::create(output).map_err(|e| Error::Io {
        path: output.to_owned(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    write_triples_jsonl(&triples, &mut writer).map_err(|e| Error::Io {
        path: output.to_owned(),
        source: e,
    })?;
    println!(
        "{}",
        serde_json::json!({"output": output, "triples": triples.len()})
    );
    Ok(())
}
