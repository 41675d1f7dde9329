//! The `align` pipeline: load, train in each requested direction, export and
//! evaluate. Every artifact lands under the configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use lexalign_core::adversarial::{train_adversarial, AdversarialOutcome};
use lexalign_core::eval::{evaluate, render_table, EvalReport, Method};
use lexalign_core::procrustes::{train_procrustes, IterationLog};
use lexalign_core::refine::train_refined;
use lexalign_core::{CslsIndex, Direction, EmbeddingSet, InducedDictionary, MappingMatrix, SeedDictionary};

use crate::config::{DirectionMode, RunConfig};
use crate::formats::{
    load_checkpoint, load_dictionary, load_embeddings, save_checkpoint, save_dictionary, save_iterations, save_losses,
    save_seed_dictionary, save_validation, Checkpoint,
};
use crate::{Error, Result};

/// What one direction of a run produced.
#[derive(Clone, Debug)]
pub struct DirectionResult {
    pub direction: Direction,
    pub mapping: MappingMatrix,
    pub dictionary: InducedDictionary,
    pub report: Option<EvalReport>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub results: Vec<DirectionResult>,
    /// Every file written, in creation order.
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn reports(&self) -> Vec<EvalReport> {
        self.results.iter().filter_map(|r| r.report.clone()).collect()
    }
}

/// Artifact paths for one direction, prefixed `<src>-<tgt>.`.
struct Outputs<'a> {
    dir: &'a Path,
    prefix: String,
    written: &'a mut Vec<PathBuf>,
}

impl Outputs<'_> {
    fn path(&mut self, suffix: &str) -> PathBuf {
        let p = self.dir.join(format!("{}.{suffix}", self.prefix));
        self.written.push(p.clone());
        p
    }
}

/// Loads one embedding file, normalizing it when configured.
pub fn load_side(path: &Path, max_vocab: Option<usize>, lang: &str, normalize: bool) -> Result<EmbeddingSet> {
    let set = load_embeddings(path, max_vocab, lang)?;
    log::info!("{}: {} words, dim {}", path.display(), set.len(), set.dim());
    Ok(if normalize { set.normalize()? } else { set })
}

/// Induces the exported dictionary for a mapping.
pub fn induce(
    w: &MappingMatrix,
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    csls_k: usize,
    top_pairs: usize,
    mutual_only: bool,
) -> Result<InducedDictionary> {
    let index = CslsIndex::for_mapping(w, src.vectors(), tgt.vectors(), csls_k)?;
    Ok(index.induce_dictionary(src, tgt, top_pairs, mutual_only)?)
}

/// Runs the configured method in every requested direction.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out_dir = cfg.output_dir.as_path();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut artifacts = Vec::new();

    let config_path = out_dir.join("config.txt");
    fs::write(&config_path, cfg.to_string()).map_err(|e| Error::io(&config_path, e))?;
    artifacts.push(config_path);

    let src_path = cfg.src_emb.as_deref().expect("validated");
    let tgt_path = cfg.tgt_emb.as_deref().expect("validated");
    let src = load_side(src_path, cfg.max_vocab, &cfg.src_lang, cfg.normalize_embeddings)?;
    let tgt = load_side(tgt_path, cfg.max_vocab, &cfg.tgt_lang, cfg.normalize_embeddings)?;

    let seed = match &cfg.seed_dict {
        Some(p) => Some(load_dictionary(p, &src, &tgt)?.pairs),
        None => None,
    };
    // Filtering happens per direction in `evaluate`, which counts OOV pairs.
    let test = match &cfg.test_dict {
        Some(p) => Some(crate::formats::load_seed_dictionary(p)?),
        None => None,
    };

    let mut sides: Vec<(&EmbeddingSet, &EmbeddingSet, bool)> = Vec::new();
    if cfg.direction != DirectionMode::Reverse {
        sides.push((&src, &tgt, false));
    }
    if cfg.direction != DirectionMode::Forward {
        sides.push((&tgt, &src, true));
    }

    let mut results = Vec::new();
    for (a, b, reversed) in sides {
        let orient = |d: &SeedDictionary| if reversed { d.reversed() } else { d.clone() };
        let direction = Direction::between(a, b);
        log::info!("aligning {direction} with {}", cfg.method.tag());
        let mut outputs = Outputs {
            dir: out_dir,
            prefix: direction.to_string(),
            written: &mut artifacts,
        };
        let seed = seed.as_ref().map(orient);
        let (mapping, dictionary) = align_direction(cfg, a, b, seed.as_ref(), &mut outputs)?;
        save_dictionary(&dictionary, &outputs.path("dict.tsv"))?;

        let report = match &test {
            Some(t) => {
                let r = evaluate(
                    &mapping,
                    a,
                    b,
                    &orient(t),
                    &cfg.eval_ns,
                    cfg.procrustes.csls_k,
                    cfg.method,
                )?;
                log::info!(
                    "{direction}: {} evaluated, {} skipped, P@N {:?}",
                    r.n_evaluated,
                    r.n_skipped,
                    r.p_at
                );
                Some(r)
            }
            None => None,
        };
        results.push(DirectionResult {
            direction,
            mapping,
            dictionary,
            report,
        });
    }

    let summary = RunSummary { results, artifacts };
    let reports = summary.reports();
    let mut artifacts = summary.artifacts;
    if !reports.is_empty() {
        let json = out_dir.join("report.json");
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        let table = out_dir.join("table.tsv");
        fs::write(&table, render_table(&reports)).map_err(|e| Error::io(&table, e))?;
        artifacts.extend([json, table]);
    }
    Ok(RunSummary {
        results: summary.results,
        artifacts,
    })
}

fn align_direction(
    cfg: &RunConfig,
    a: &EmbeddingSet,
    b: &EmbeddingSet,
    seed: Option<&SeedDictionary>,
    out: &mut Outputs<'_>,
) -> Result<(MappingMatrix, InducedDictionary)> {
    match cfg.method {
        Method::SemiSupervised => {
            let seed = seed.expect("validated: semi-sup has a seed dictionary");
            let o = train_procrustes(a, b, seed, &cfg.procrustes)?;
            finish_procrustes(&o.mapping, &o.log, cfg.procrustes.n_iterations, out)?;
            Ok((o.mapping, o.dictionary))
        }
        Method::SelfSupervised => {
            let o = adversarial(cfg, a, b, out, "mapping")?;
            let dict = induce(
                &o.best,
                a,
                b,
                cfg.procrustes.csls_k,
                cfg.procrustes.dict_top_pairs,
                cfg.procrustes.export_mutual_only,
            )?;
            Ok((o.best, dict))
        }
        Method::SelfSupervisedRefined => {
            let start = match &cfg.adversarial_checkpoint {
                Some(p) => {
                    let ckpt = load_checkpoint(p)?;
                    log::info!("refining {} (epoch {})", p.display(), ckpt.epoch);
                    ckpt.mapping
                }
                None => adversarial(cfg, a, b, out, "adversarial.mapping")?.best,
            };
            let o = train_refined(a, b, &start, &cfg.refine())?;
            save_seed_dictionary(&o.anchors, &out.path("anchors.tsv"))?;
            finish_procrustes(&o.mapping, &o.log, cfg.procrustes.n_iterations, out)?;
            Ok((o.mapping, o.dictionary))
        }
    }
}

fn finish_procrustes(w: &MappingMatrix, log: &[IterationLog], rounds: usize, out: &mut Outputs<'_>) -> Result<()> {
    let score = log.last().map_or(0.0, |l| l.mean_csls);
    save_checkpoint(
        &Checkpoint {
            mapping: w.clone(),
            epoch: rounds,
            score,
        },
        &out.path("mapping"),
    )?;
    save_iterations(log, &out.path("iterations.csv"))
}

fn adversarial(
    cfg: &RunConfig,
    a: &EmbeddingSet,
    b: &EmbeddingSet,
    out: &mut Outputs<'_>,
    checkpoint_suffix: &str,
) -> Result<AdversarialOutcome> {
    let o = match train_adversarial(a, b, &cfg.adversarial) {
        Ok(o) => o,
        Err(lexalign_core::Error::Diverged {
            epoch,
            step,
            last_finite,
        }) => {
            let p = out.path("diverged.mapping");
            save_checkpoint(
                &Checkpoint {
                    mapping: (*last_finite).clone(),
                    epoch,
                    score: f64::NAN,
                },
                &p,
            )?;
            log::error!("last finite mapping saved to {}", p.display());
            return Err(lexalign_core::Error::Diverged {
                epoch,
                step,
                last_finite,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    log::info!(
        "adversarial best epoch {} (mean CSLS {:.4}), max orthogonality error {:.3e}",
        o.best_epoch,
        o.best_score.mean_csls,
        o.max_orthogonality
    );
    save_checkpoint(
        &Checkpoint {
            mapping: o.best.clone(),
            epoch: o.best_epoch,
            score: o.best_score.mean_csls,
        },
        &out.path(checkpoint_suffix),
    )?;
    save_losses(&o.losses, &out.path("losses.csv"))?;
    save_validation(&o.validation, &out.path("validation.csv"))?;
    Ok(o)
}
