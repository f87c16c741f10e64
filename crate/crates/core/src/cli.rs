//! Command-line front end.
//!
//! Every subcommand validates its flags and inputs before writing anything;
//! outputs are staged in temporary files next to their destination and only
//! renamed into place once the whole job has succeeded.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use tempfile::NamedTempFile;

use crate::embedding_io::{
    is_packed_file, load_categorization_dataset, load_packed, load_similarity_dataset,
    load_text_embedding, write_packed, BinaryEmbedding, EmbeddingMatrix,
};
use crate::error::{Error, Result};
use crate::eval::{
    eval_word_similarity, kmeans_purity, nearest_neighbors_binary, nearest_neighbors_real,
    DEFAULT_RESTARTS,
};
use crate::isotropy::isotropy_report;
use crate::quantizer::{compress, CompressionConfig, Method, DEFAULT_ITERATIONS};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "BINQUANT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "binquant",
    version,
    about = "Binary compression and evaluation of word embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a text embedding into packed binary codes.
    Compress {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Text embedding, one token and its values per line.
        #[arg(long)]
        input: PathBuf,
        /// Destination of the packed codes.
        #[arg(long)]
        output: PathBuf,
        /// Dominant directions to remove (iiq only). Typical values are
        /// 2 for HDC and 14 for GloVe vectors.
        #[arg(long)]
        remove_top: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iters: usize,
        /// Code length in bits; defaults to the input dimension.
        #[arg(long)]
        out_dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the per-iteration loss as CSV.
        #[arg(long)]
        loss_curve: Option<PathBuf>,
    },
    /// Print isotropy statistics of a text embedding.
    Isotropy {
        #[arg(long)]
        input: PathBuf,
    },
    /// Word similarity: Spearman correlation against human scores.
    EvalSim {
        /// Text or packed embedding.
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Categorization: k-means purity against gold labels.
    EvalCat {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Cluster count; defaults to the number of categories.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// List the most (or least) similar words.
    Neighbors {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        furthest: bool,
    },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numeric(_)
        | Error::Range(_)
        | Error::UndefinedSimilarity(_)
        | Error::DegenerateRanking(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv` (program name first) and runs the job, returning the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("binquant: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // already initialised when run twice in one process
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        _ => eprintln!("binquant: ignoring {THREADS_ENV}={value:?}"),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("{}: no such file", path.display()),
        )))
    }
}

enum AnyEmbedding {
    Real(EmbeddingMatrix<f64>),
    Binary(BinaryEmbedding),
}

fn load_any(path: &Path) -> Result<AnyEmbedding> {
    require_file(path)?;
    if is_packed_file(path)? {
        Ok(AnyEmbedding::Binary(load_packed(path)?))
    } else {
        Ok(AnyEmbedding::Real(load_text_embedding(path)?))
    }
}

fn staged_file(dest: &Path) -> Result<NamedTempFile> {
    let dir = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    Ok(NamedTempFile::new_in(dir)?)
}

fn persist(tmp: NamedTempFile, dest: &Path) -> Result<()> {
    tmp.persist(dest).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn execute(command: Command, out: &mut impl Write) -> Result<()> {
    match command {
        Command::Compress {
            method,
            input,
            output,
            remove_top,
            iters,
            out_dim,
            seed,
            loss_curve,
        } => {
            if method == Method::Itq && remove_top.is_some() {
                return Err(Error::Parameter(
                    "--remove-top only applies to method iiq".into(),
                ));
            }
            let remove_top = match (method, remove_top) {
                (Method::Iiq, None) => {
                    return Err(Error::Parameter("method iiq requires --remove-top".into()))
                }
                (_, d) => d.unwrap_or(0),
            };
            require_file(&input)?;
            let emb: EmbeddingMatrix<f64> = load_text_embedding(&input)?;
            let out_dim = out_dim.unwrap_or(emb.dim());
            let cfg = match method {
                Method::Iiq => CompressionConfig::iiq(remove_top, out_dim),
                Method::Itq => CompressionConfig::itq(out_dim),
            }
            .with_iterations(iters)
            .with_seed(seed);
            cfg.validate(emb.len(), emb.dim())?;
            let (binary, trace) = compress(&emb, &cfg)?;

            let codes = staged_file(&output)?;
            write_packed(&binary, BufWriter::new(codes.as_file()))?;
            let curve = match &loss_curve {
                Some(path) => {
                    let tmp = staged_file(path)?;
                    trace.write_loss_csv(BufWriter::new(tmp.as_file()))?;
                    Some((tmp, path))
                }
                None => None,
            };
            persist(codes, &output)?;
            if let Some((tmp, path)) = curve {
                persist(tmp, path)?;
            }
            writeln!(
                out,
                "wrote {} codes of {} bits, final loss {:?}",
                binary.len(),
                binary.code_len(),
                trace.final_loss
            )?;
        }
        Command::Isotropy { input } => {
            require_file(&input)?;
            let emb: EmbeddingMatrix<f64> = load_text_embedding(&input)?;
            let r = isotropy_report(emb.data())?;
            if r.degenerate {
                eprintln!("binquant: centered embedding is zero; i_ratio reported as 1");
            }
            writeln!(out, "i_ratio\t{:?}", r.i_ratio)?;
            writeln!(out, "i_quadratic\t{:?}", r.i_quadratic)?;
            writeln!(out, "sigma_min\t{:?}", r.sigma_min)?;
            writeln!(out, "sigma_max\t{:?}", r.sigma_max)?;
            writeln!(out, "mean_norm\t{:?}", r.mean_norm)?;
            writeln!(out, "degenerate\t{}", r.degenerate)?;
        }
        Command::EvalSim { embedding, dataset } => {
            let emb = load_any(&embedding)?;
            require_file(&dataset)?;
            let ds = load_similarity_dataset(&dataset)?;
            let r = match &emb {
                AnyEmbedding::Real(e) => eval_word_similarity(e, &ds)?,
                AnyEmbedding::Binary(b) => eval_word_similarity(b, &ds)?,
            };
            writeln!(
                out,
                "{}\t{:?}\t{}\t{}",
                display_name(&dataset),
                r.rho,
                r.n_pairs,
                r.n_oov
            )?;
        }
        Command::EvalCat {
            embedding,
            dataset,
            k,
            seed,
            restarts,
        } => {
            let emb = load_any(&embedding)?;
            require_file(&dataset)?;
            let ds = load_categorization_dataset(&dataset)?;
            let r = match &emb {
                AnyEmbedding::Real(e) => kmeans_purity(e, &ds, k, seed, restarts)?,
                AnyEmbedding::Binary(b) => kmeans_purity::<f64, _>(b, &ds, k, seed, restarts)?,
            };
            writeln!(out, "{}\t{:?}\t{}", display_name(&dataset), r.purity, r.k)?;
        }
        Command::Neighbors {
            embedding,
            word,
            k,
            furthest,
        } => match load_any(&embedding)? {
            AnyEmbedding::Real(e) => {
                for (token, score) in nearest_neighbors_real(&e, &word, k, furthest)? {
                    writeln!(out, "{token}\t{score:?}")?;
                }
            }
            AnyEmbedding::Binary(b) => {
                for (token, score) in nearest_neighbors_binary(&b, &word, k, furthest)? {
                    writeln!(out, "{token}\t{score}")?;
                }
            }
        },
    }
    out.flush()?;
    Ok(())
}

fn display_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
