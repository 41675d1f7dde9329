//! Text formats: embeddings, dictionaries, mapping checkpoints and training
//! curves.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every value bit for bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lexalign_core::adversarial::{EpochRecord, LossRecord};
use lexalign_core::procrustes::IterationLog;
use lexalign_core::{DictEntry, Direction, EmbeddingSet, InducedDictionary, MappingMatrix, Matrix, SeedDictionary};

use crate::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Reads lines with their 1-based numbers, stripping line terminators.
fn numbered_lines<'a, R: BufRead + 'a>(
    reader: R,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().map(move |(i, l)| {
        l.map(|mut s| {
            if s.ends_with('\r') {
                s.pop();
            }
            (i + 1, s)
        })
        .map_err(|e| Error::io(path, e))
    })
}

fn parse_float(field: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(path, line, format!("'{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value '{field}'")));
    }
    Ok(v)
}

/// Reads an embedding file: a `count dim` header, then one `token v_1 .. v_dim`
/// line per word, in frequency order. At most `max_vocab` distinct words are
/// kept; a repeated token keeps its first vector. `origin` names the source in
/// error messages.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    origin: &Path,
    max_vocab: Option<usize>,
    lang: &str,
) -> Result<EmbeddingSet> {
    let mut lines = numbered_lines(reader, origin);
    let (_, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if c > 0 && d > 0 => (c, d),
            _ => {
                return Err(Error::parse(
                    origin,
                    1,
                    "header must be two positive integers 'count dim'",
                ))
            }
        },
        _ => return Err(Error::parse(origin, 1, "header must be 'count dim'")),
    };
    let wanted = max_vocab.map_or(count, |m| m.min(count));

    let mut words = Vec::with_capacity(wanted);
    let mut seen = HashSet::with_capacity(wanted);
    let mut data = Vec::with_capacity(wanted * dim);
    let mut rows = 0;
    let mut duplicates = 0;
    let mut last_line = 1;
    for item in lines {
        let (n, line) = item?;
        last_line = n;
        if line.trim().is_empty() {
            continue;
        }
        if rows == count {
            return Err(Error::parse(
                origin,
                n,
                format!("more than the {count} vectors the header declares"),
            ));
        }
        rows += 1;
        let mut fields = line.split_ascii_whitespace();
        let token = fields.next().expect("non-blank line has a field");
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::parse(
                origin,
                n,
                format!("expected {dim} components, found {}", values.len()),
            ));
        }
        if !seen.insert(token.to_owned()) {
            duplicates += 1;
            continue;
        }
        for v in values {
            data.push(parse_float(v, origin, n)?);
        }
        words.push(token.to_owned());
        // Without truncation the rest of the file is still checked.
        if words.len() == wanted && wanted < count {
            break;
        }
    }
    if words.len() < wanted && rows < count {
        return Err(Error::parse(
            origin,
            last_line + 1,
            format!("header declares {count} vectors but the file ends after {rows}"),
        ));
    }
    if duplicates > 0 {
        log::warn!("{}: skipped {duplicates} repeated tokens", origin.display());
    }
    let vectors = Matrix::from_vec(words.len(), dim, data);
    Ok(EmbeddingSet::new(words, vectors, lang)?)
}

pub fn load_embeddings(path: &Path, max_vocab: Option<usize>, lang: &str) -> Result<EmbeddingSet> {
    read_embeddings(open(path)?, path, max_vocab, lang)
}

pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", set.len(), set.dim())?;
    for (word, row) in set.words().iter().zip(set.vectors().iter_rows()) {
        write!(out, "{word}")?;
        for v in row {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn save_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    write_embeddings(set, create(path)?).map_err(|e| Error::io(path, e))
}

/// One dictionary line: two words and an optional score.
fn parse_dictionary_line<'a>(line: &'a str, path: &Path, n: usize) -> Result<(&'a str, &'a str, Option<f64>)> {
    let fields: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split(' ').collect()
    };
    match fields.as_slice() {
        [s, t] if !s.is_empty() && !t.is_empty() => Ok((s, t, None)),
        [s, t, score] if !s.is_empty() && !t.is_empty() => Ok((s, t, Some(parse_float(score.trim(), path, n)?))),
        _ => Err(Error::parse(
            path,
            n,
            "expected 'source<TAB>target' with an optional score column",
        )),
    }
}

/// Reads word pairs, one per line, separated by a TAB or a single space. A
/// third score column is accepted and ignored. Blank lines are skipped.
pub fn read_dictionary<R: BufRead>(reader: R, origin: &Path) -> Result<SeedDictionary> {
    let mut dict = SeedDictionary::default();
    for item in numbered_lines(reader, origin) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let (s, t, _) = parse_dictionary_line(&line, origin, n)?;
        dict.push(s, t);
    }
    Ok(dict)
}

pub fn load_seed_dictionary(path: &Path) -> Result<SeedDictionary> {
    read_dictionary(open(path)?, path)
}

/// A dictionary restricted to pairs whose words are both in vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadedDictionary {
    pub pairs: SeedDictionary,
    pub dropped: usize,
}

/// Loads a dictionary file keeping only resolvable pairs. The number dropped
/// is returned and logged.
pub fn load_dictionary(path: &Path, src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<LoadedDictionary> {
    let all = load_seed_dictionary(path)?;
    let pairs: SeedDictionary = all
        .pairs()
        .iter()
        .filter(|(s, t)| src.rank_of(s).is_some() && tgt.rank_of(t).is_some())
        .cloned()
        .collect();
    let dropped = all.len() - pairs.len();
    if dropped > 0 {
        log::warn!(
            "{}: {dropped} of {} pairs are out of vocabulary",
            path.display(),
            all.len()
        );
    }
    Ok(LoadedDictionary { pairs, dropped })
}

/// Reads a scored dictionary as written by [`write_dictionary`].
pub fn read_induced_dictionary<R: BufRead>(
    reader: R,
    origin: &Path,
    direction: Direction,
) -> Result<InducedDictionary> {
    let mut entries = Vec::new();
    for item in numbered_lines(reader, origin) {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_dictionary_line(&line, origin, n)? {
            (s, t, Some(score)) => entries.push(DictEntry {
                source: s.into(),
                target: t.into(),
                score,
            }),
            _ => return Err(Error::parse(origin, n, "missing score column")),
        }
    }
    Ok(InducedDictionary::new(direction, entries))
}

pub fn load_induced_dictionary(path: &Path, direction: Direction) -> Result<InducedDictionary> {
    read_induced_dictionary(open(path)?, path, direction)
}

/// One `source<TAB>target<TAB>score` line per entry, in stored order.
pub fn write_dictionary<W: Write>(dict: &InducedDictionary, mut out: W) -> std::io::Result<()> {
    for e in dict.entries() {
        writeln!(out, "{}\t{}\t{}", e.source, e.target, e.score)?;
    }
    out.flush()
}

pub fn save_dictionary(dict: &InducedDictionary, path: &Path) -> Result<()> {
    write_dictionary(dict, create(path)?).map_err(|e| Error::io(path, e))
}

/// Writes word pairs TAB-separated without scores.
pub fn save_seed_dictionary(dict: &SeedDictionary, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for (s, t) in dict.pairs() {
            writeln!(out, "{s}\t{t}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// A mapping with the epoch and validation score it was saved at.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub mapping: MappingMatrix,
    pub epoch: usize,
    pub score: f64,
}

/// Header `d epoch score`, then `d` rows of `d` space-separated entries.
pub fn write_checkpoint<W: Write>(ckpt: &Checkpoint, mut out: W) -> std::io::Result<()> {
    let m = ckpt.mapping.matrix();
    writeln!(out, "{} {} {}", m.rows(), ckpt.epoch, ckpt.score)?;
    for row in m.iter_rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    out.flush()
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    write_checkpoint(ckpt, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<R: BufRead>(reader: R, origin: &Path) -> Result<Checkpoint> {
    let mut lines = numbered_lines(reader, origin);
    let (_, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    let [d, epoch, score] = fields.as_slice() else {
        return Err(Error::parse(origin, 1, "header must be 'dim epoch score'"));
    };
    let d: usize = d
        .parse()
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(origin, 1, "dimension must be a positive integer"))?;
    let epoch: usize = epoch
        .parse()
        .map_err(|_| Error::parse(origin, 1, "epoch must be a non-negative integer"))?;
    let score: f64 = score
        .parse()
        .map_err(|_| Error::parse(origin, 1, "score must be a number"))?;

    let mut data = Vec::with_capacity(d * d);
    for row in 0..d {
        let (n, line) = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::parse(origin, row + 2, format!("expected {d} rows, found {row}")))?;
        let before = data.len();
        for f in line.split_ascii_whitespace() {
            data.push(parse_float(f, origin, n)?);
        }
        if data.len() - before != d {
            return Err(Error::parse(
                origin,
                n,
                format!("expected {d} entries, found {}", data.len() - before),
            ));
        }
    }
    for item in lines {
        let (n, line) = item?;
        if !line.trim().is_empty() {
            return Err(Error::parse(origin, n, "unexpected data after the matrix"));
        }
    }
    let mapping = MappingMatrix::from_matrix(Matrix::from_vec(d, d, data))?;
    Ok(Checkpoint { mapping, epoch, score })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(open(path)?, path)
}

fn save_csv<T>(path: &Path, header: &str, rows: &[T], row: impl Fn(&T) -> String) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for r in rows {
            writeln!(out, "{}", row(r))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Loss curve CSV: `step,discriminator_loss,generator_loss,orthogonality`.
pub fn save_losses(losses: &[LossRecord], path: &Path) -> Result<()> {
    save_csv(
        path,
        "step,discriminator_loss,generator_loss,orthogonality",
        losses,
        |r| {
            format!(
                "{},{},{},{}",
                r.step, r.discriminator_loss, r.generator_loss, r.orthogonality
            )
        },
    )
}

/// Validation history CSV: `epoch,mean_csls,learning_rate`.
pub fn save_validation(history: &[EpochRecord], path: &Path) -> Result<()> {
    save_csv(path, "epoch,mean_csls,learning_rate", history, |r| {
        format!("{},{},{}", r.epoch, r.score.mean_csls, r.learning_rate)
    })
}

/// Procrustes log CSV: `iteration,anchors,residual,mean_csls,orthogonality`.
pub fn save_iterations(log: &[IterationLog], path: &Path) -> Result<()> {
    save_csv(path, "iteration,anchors,residual,mean_csls,orthogonality", log, |r| {
        format!(
            "{},{},{},{},{}",
            r.iteration, r.anchors, r.residual, r.mean_csls, r.orthogonality
        )
    })
}
