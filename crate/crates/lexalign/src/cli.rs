//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage and validation errors, 2 when a
//! computation or file operation fails.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use lexalign_core::eval::{evaluate, render_table, Method};
use lexalign_core::pca::pca_pairs;
use lexalign_core::synth::{generate, SynthSpec};

use crate::config::{parse_config, ConfigError, KEYS};
use crate::formats::{
    load_checkpoint, load_seed_dictionary, save_checkpoint, save_dictionary, save_embeddings, save_seed_dictionary,
    Checkpoint,
};
use crate::pipeline::{induce, load_side, run_pipeline};
use crate::{Error, Result};

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn path_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_name("PATH")
        .value_parser(value_parser!(PathBuf))
        .required(true)
        .help(help)
}

fn embedding_args(cmd: Command) -> Command {
    cmd.arg(path_arg("src-emb", "source embedding file"))
        .arg(path_arg("tgt-emb", "target embedding file"))
        .arg(path_arg("checkpoint", "mapping checkpoint"))
        .arg(
            Arg::new("src-lang")
                .long("src-lang")
                .default_value("src")
                .help("source language tag"),
        )
        .arg(
            Arg::new("tgt-lang")
                .long("tgt-lang")
                .default_value("tgt")
                .help("target language tag"),
        )
        .arg(
            Arg::new("max-vocab")
                .long("max-vocab")
                .value_parser(value_parser!(usize))
                .default_value("200000")
                .help("vectors loaded per language, 0 for all"),
        )
        .arg(
            Arg::new("no-normalize")
                .long("no-normalize")
                .action(ArgAction::SetTrue)
                .help("keep vectors as stored"),
        )
        .arg(
            Arg::new("csls-k")
                .long("csls-k")
                .value_parser(value_parser!(usize))
                .default_value("10")
                .help("CSLS neighborhood size"),
        )
}

fn number<T: Clone + Send + Sync + std::str::FromStr + 'static>(
    name: &'static str,
    default: &'static str,
    help: &'static str,
) -> Arg
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    Arg::new(name)
        .long(name)
        .value_parser(clap::builder::ValueParser::new(|s: &str| s.parse::<T>()))
        .default_value(default)
        .help(help)
}

pub fn command() -> Command {
    let mut align = Command::new("align")
        .about("Learn a mapping with semi-sup, self-sup or self-sup-re and export its dictionary")
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf))
                .help("key = value configuration file; flags override it"),
        );
    for (key, help) in KEYS {
        align = align.arg(Arg::new(*key).long(flag(key)).value_name("VALUE").help(*help));
    }

    let induce = embedding_args(Command::new("induce").about("Induce a CSLS dictionary from a checkpoint"))
        .arg(path_arg("output", "dictionary file to write"))
        .arg(number::<usize>("top-pairs", "50000", "maximum exported pairs"))
        .arg(
            Arg::new("mutual-only")
                .long("mutual-only")
                .action(ArgAction::SetTrue)
                .help("keep only mutual nearest neighbors"),
        );

    let eval = embedding_args(Command::new("eval").about("Score a checkpoint against a gold dictionary"))
        .arg(path_arg("test-dict", "gold dictionary"))
        .arg(
            Arg::new("ns")
                .long("ns")
                .value_delimiter(',')
                .value_parser(value_parser!(usize))
                .default_value("1,5,10")
                .help("N values for P@N"),
        )
        .arg(
            Arg::new("method")
                .long("method")
                .default_value("self-sup-re")
                .help("row label in the table"),
        )
        .arg(
            Arg::new("output")
                .long("output")
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf))
                .help("also write the report as JSON"),
        );

    let synth = Command::new("synth")
        .about("Write a synthetic language pair with a known rotation")
        .arg(path_arg(
            "output-dir",
            "directory for src.vec, tgt.vec, gold.tsv and true.mapping",
        ))
        .arg(number::<usize>("n-words", "2000", "words per language"))
        .arg(number::<usize>("dim", "50", "embedding dimension"))
        .arg(number::<f64>("noise-sigma", "0", "target noise standard deviation"))
        .arg(number::<u64>("rotation-seed", "0", "seed of the hidden rotation"))
        .arg(number::<u64>("data-seed", "1", "seed of the vectors and noise"))
        .arg(number::<f64>("hubness-factor", "0", "extra scale on the first axis"))
        .arg(number::<usize>(
            "clusters",
            "0",
            "mixture components, 0 for plain Gaussian",
        ))
        .arg(number::<f64>(
            "cluster-spread",
            "0.5",
            "within-cluster standard deviation",
        ))
        .arg(number::<f64>(
            "spectral-decay",
            "0",
            "axis scale exp(-j/decay), 0 for none",
        ))
        .arg(
            Arg::new("src-lang")
                .long("src-lang")
                .default_value("src")
                .help("source language tag"),
        )
        .arg(
            Arg::new("tgt-lang")
                .long("tgt-lang")
                .default_value("tgt")
                .help("target language tag"),
        );

    let pca = embedding_args(Command::new("pca").about("Project aligned pairs onto two principal components"))
        .arg(path_arg("pairs", "dictionary of pairs to project"))
        .arg(path_arg("output", "CSV file to write"));

    Command::new("lexalign")
        .version(clap::crate_version!())
        .about("Bilingual lexicon induction from monolingual word embeddings")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands([align, induce, eval, synth, pca])
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match matches.subcommand() {
        Some(("align", m)) => align(m),
        Some(("induce", m)) => induce_cmd(m),
        Some(("eval", m)) => eval_cmd(m),
        Some(("synth", m)) => synth_cmd(m),
        Some(("pca", m)) => pca_cmd(m),
        _ => unreachable!("subcommand_required"),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes each log record to stderr and, once opened, to a file.
#[derive(Clone, Default)]
struct Tee(Arc<Mutex<Option<File>>>);

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        io::stderr().write_all(buf)?;
        if let Some(f) = self.0.lock().expect("log file lock").as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(f) = self.0.lock().expect("log file lock").as_mut() {
            f.flush()?;
        }
        io::stderr().flush()
    }
}

static LOG_FILE: Mutex<Option<Tee>> = Mutex::new(None);

/// Installs the logger on first use; later calls only redirect the file copy.
fn init_logging(file: Option<&Path>) -> Result<()> {
    let mut guard = LOG_FILE.lock().expect("logger lock");
    let tee = guard.get_or_insert_with(|| {
        let tee = Tee::default();
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
            .target(env_logger::Target::Pipe(Box::new(tee.clone())))
            .try_init();
        tee
    });
    let handle = match file {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?,
        ),
        None => None,
    };
    *tee.0.lock().expect("log file lock") = handle;
    Ok(())
}

fn align(m: &ArgMatches) -> Result<()> {
    let overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|(key, _)| m.get_one::<String>(key).map(|v| ((*key).to_owned(), v.clone())))
        .collect();
    let cfg = parse_config(m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides)?;
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    init_logging(Some(&cfg.output_dir.join("run.log")))?;
    let summary = run_pipeline(&cfg)?;
    let reports = summary.reports();
    if !reports.is_empty() {
        print!("{}", render_table(&reports));
    }
    for p in &summary.artifacts {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

/// Checks that every path-valued argument exists before any work starts.
fn existing<'a>(m: &'a ArgMatches, keys: &[&'static str]) -> Result<Vec<&'a Path>> {
    keys.iter()
        .map(|&key| {
            let p = m.get_one::<PathBuf>(key).expect("required").as_path();
            if p.exists() {
                Ok(p)
            } else {
                Err(ConfigError::MissingPath {
                    key,
                    path: p.to_owned(),
                }
                .into())
            }
        })
        .collect()
}

struct Loaded {
    src: lexalign_core::EmbeddingSet,
    tgt: lexalign_core::EmbeddingSet,
    checkpoint: Checkpoint,
    csls_k: usize,
}

fn load_common(m: &ArgMatches, extra: &[&'static str]) -> Result<(Loaded, Vec<PathBuf>)> {
    let mut keys = vec!["src-emb", "tgt-emb", "checkpoint"];
    keys.extend_from_slice(extra);
    let paths: Vec<PathBuf> = existing(m, &keys)?.into_iter().map(Path::to_path_buf).collect();
    init_logging(None)?;
    let max_vocab = match *m.get_one::<usize>("max-vocab").expect("default") {
        0 => None,
        n => Some(n),
    };
    let normalize = !m.get_flag("no-normalize");
    let lang = |k: &str| m.get_one::<String>(k).expect("default").clone();
    let src = load_side(&paths[0], max_vocab, &lang("src-lang"), normalize)?;
    let tgt = load_side(&paths[1], max_vocab, &lang("tgt-lang"), normalize)?;
    let checkpoint = load_checkpoint(&paths[2])?;
    let csls_k = *m.get_one::<usize>("csls-k").expect("default");
    Ok((
        Loaded {
            src,
            tgt,
            checkpoint,
            csls_k,
        },
        paths[3..].to_vec(),
    ))
}

fn induce_cmd(m: &ArgMatches) -> Result<()> {
    let (l, _) = load_common(m, &[])?;
    let out = m.get_one::<PathBuf>("output").expect("required");
    let top = *m.get_one::<usize>("top-pairs").expect("default");
    let dict = induce(
        &l.checkpoint.mapping,
        &l.src,
        &l.tgt,
        l.csls_k,
        top,
        m.get_flag("mutual-only"),
    )?;
    save_dictionary(&dict, out)?;
    log::info!("wrote {} pairs to {}", dict.len(), out.display());
    Ok(())
}

fn eval_cmd(m: &ArgMatches) -> Result<()> {
    let method: Method = m.get_one::<String>("method").expect("default").parse()?;
    let (l, paths) = load_common(m, &["test-dict"])?;
    let test = load_seed_dictionary(&paths[0])?;
    let ns: Vec<usize> = m.get_many::<usize>("ns").expect("default").copied().collect();
    let report = evaluate(&l.checkpoint.mapping, &l.src, &l.tgt, &test, &ns, l.csls_k, method)?;
    let reports = [report];
    print!("{}", render_table(&reports));
    if let Some(out) = m.get_one::<PathBuf>("output") {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        fs::write(out, text + "\n").map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}

fn synth_cmd(m: &ArgMatches) -> Result<()> {
    init_logging(None)?;
    let spec = SynthSpec {
        n_words: *m.get_one("n-words").expect("default"),
        dim: *m.get_one("dim").expect("default"),
        noise_sigma: *m.get_one("noise-sigma").expect("default"),
        rotation_seed: *m.get_one("rotation-seed").expect("default"),
        data_seed: *m.get_one("data-seed").expect("default"),
        hubness_factor: *m.get_one("hubness-factor").expect("default"),
        clusters: *m.get_one("clusters").expect("default"),
        cluster_spread: *m.get_one("cluster-spread").expect("default"),
        spectral_decay: *m.get_one("spectral-decay").expect("default"),
        source_lang: m.get_one::<String>("src-lang").expect("default").clone(),
        target_lang: m.get_one::<String>("tgt-lang").expect("default").clone(),
    };
    spec.validate()?;
    let pair = generate(&spec)?;
    let dir = m.get_one::<PathBuf>("output-dir").expect("required");
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_embeddings(&pair.src, &dir.join("src.vec"))?;
    save_embeddings(&pair.tgt, &dir.join("tgt.vec"))?;
    save_seed_dictionary(&pair.gold, &dir.join("gold.tsv"))?;
    save_checkpoint(
        &Checkpoint {
            mapping: pair.true_mapping,
            epoch: 0,
            score: 0.0,
        },
        &dir.join("true.mapping"),
    )?;
    log::info!(
        "wrote {} word pairs of dim {} to {}",
        spec.n_words,
        spec.dim,
        dir.display()
    );
    Ok(())
}

fn pca_cmd(m: &ArgMatches) -> Result<()> {
    let (l, paths) = load_common(m, &["pairs"])?;
    let pairs = load_seed_dictionary(&paths[0])?;
    let points = pca_pairs(&l.checkpoint.mapping, &l.src, &l.tgt, &pairs)?;
    let out = m.get_one::<PathBuf>("output").expect("required");
    let mut text = String::from("word,lang,pc1,pc2\n");
    for p in &points {
        text.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&p.word),
            csv_field(&p.lang),
            p.pc1,
            p.pc2
        ));
    }
    fs::write(out, text).map_err(|e| Error::io(out, e))?;
    log::info!("wrote {} points to {}", points.len(), out.display());
    Ok(())
}

/// Quotes a field containing a comma, quote or line break.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
