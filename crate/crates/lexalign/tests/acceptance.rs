//! Acceptance gates. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gate fails.
//!
//! Reference values come from oracles written here independently of the
//! library: brute-force CSLS, a scalar re-implementation of the
//! discriminator loss, closed-form constants and the known synthetic
//! rotation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lexalign::config::{DirectionMode, RunConfig};
use lexalign::formats::{save_embeddings, save_seed_dictionary};
use lexalign::pipeline::run_pipeline;
use lexalign_core::adversarial::{
    discriminator_gradients, discriminator_loss, generator_gradient, generator_loss, train_adversarial,
    AdversarialConfig, Batches, Discriminator, DiscriminatorConfig,
};
use lexalign_core::eval::{evaluate, render_table, EvalReport, Method};
use lexalign_core::geometry::{orthogonal_retraction, retraction_sweep};
use lexalign_core::procrustes::{train_procrustes, ProcrustesConfig};
use lexalign_core::refine::{train_refined, RefineConfig};
use lexalign_core::synth::{generate, SynthPair, SynthSpec};
use lexalign_core::{CslsIndex, MappingMatrix, Matrix, RetractionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Gate<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn p_at(w: &MappingMatrix, pair: &SynthPair, range: std::ops::Range<usize>) -> EvalReport {
    evaluate(
        w,
        &pair.src,
        &pair.tgt,
        &pair.gold_range(range),
        &[1, 5, 10],
        10,
        Method::SelfSupervised,
    )
    .unwrap()
}

// ---------------------------------------------------------------- oracles

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// `csls(i, j)` by the definition, in O(n m d) with full sorts.
fn brute_csls(xs: &[Vec<f64>], ys: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let knn_mean = |q: &[f64], pool: &[Vec<f64>]| {
        let mut sims: Vec<f64> = pool.iter().map(|p| cosine(q, p)).collect();
        sims.sort_by(|a, b| b.total_cmp(a));
        sims[..k].iter().sum::<f64>() / k as f64
    };
    let r_t: Vec<f64> = xs.iter().map(|x| knn_mean(x, ys)).collect();
    let r_s: Vec<f64> = ys.iter().map(|y| knn_mean(y, xs)).collect();
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            ys.iter()
                .enumerate()
                .map(|(j, y)| 2.0 * cosine(x, y) - r_t[i] - r_s[j])
                .collect()
        })
        .collect()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| StandardNormal.sample(rng)).collect())
}

/// Scalar forward pass of the `d -> h -> h -> 1` LeakyReLU network.
fn scalar_probability(disc: &Discriminator, z: &[f64]) -> f64 {
    let slope = disc.config().leaky_slope;
    let layer = |l: usize, input: &[f64], act: bool| -> Vec<f64> {
        let dense = &disc.layers()[l];
        (0..dense.w.rows())
            .map(|o| {
                let a = dense.b[o] + dense.w.row(o).iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                if act && a < 0.0 {
                    slope * a
                } else {
                    a
                }
            })
            .collect()
    };
    let h1 = layer(0, z, true);
    let h2 = layer(1, &h1, true);
    1.0 / (1.0 + (-layer(2, &h2, false)[0]).exp())
}

/// Discriminator loss (`generator = false`) or mapping loss (`generator =
/// true`): the sum of the per-side mean cross-entropies with smoothed labels.
fn scalar_loss(disc: &Discriminator, w: &Matrix, xs: &Matrix, ys: &Matrix, s: f64, generator: bool) -> f64 {
    let (t_src, t_tgt) = if generator { (s, 1.0 - s) } else { (1.0 - s, s) };
    let ce = |p: f64, t: f64| -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
    let mapped = |x: &[f64]| -> Vec<f64> {
        (0..w.rows())
            .map(|r| w.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    };
    let src: f64 = xs
        .iter_rows()
        .map(|x| ce(scalar_probability(disc, &mapped(x)), t_src))
        .sum::<f64>()
        / xs.rows() as f64;
    let tgt: f64 = ys
        .iter_rows()
        .map(|y| ce(scalar_probability(disc, y), t_tgt))
        .sum::<f64>()
        / ys.rows() as f64;
    src + tgt
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

// -------------------------------------------------------------- criteria

fn synth_files(dir: &Path, pair: &SynthPair) -> (PathBuf, PathBuf) {
    fs::create_dir_all(dir).unwrap();
    let (s, t) = (dir.join("src.vec"), dir.join("tgt.vec"));
    save_embeddings(&pair.src, &s).unwrap();
    save_embeddings(&pair.tgt, &t).unwrap();
    (s, t)
}

fn criterion_1(tmp: &Path) -> Outcome {
    let mut spec = SynthSpec::structured(2000, 50);
    spec.noise_sigma = 0.08;
    spec.source_lang = "ti".into();
    spec.target_lang = "zh".into();
    let pair = generate(&spec).unwrap();
    let dir = tmp.join("c1");
    let (src, tgt) = synth_files(&dir, &pair);
    let seed = dir.join("seed.tsv");
    let test = dir.join("test.tsv");
    save_seed_dictionary(&pair.gold_range(0..200), &seed).unwrap();
    save_seed_dictionary(&pair.gold_range(200..2000), &test).unwrap();

    let mut reports = Vec::new();
    for method in Method::ALL {
        let mut cfg = RunConfig {
            method,
            src_emb: Some(src.clone()),
            tgt_emb: Some(tgt.clone()),
            seed_dict: (method == Method::SemiSupervised).then(|| seed.clone()),
            test_dict: Some(test.clone()),
            output_dir: dir.join(method.tag()),
            src_lang: "ti".into(),
            tgt_lang: "zh".into(),
            direction: DirectionMode::Both,
            s_anchor_pairs: 1000,
            ..RunConfig::default()
        };
        cfg.adversarial.epochs = 1;
        cfg.adversarial.steps_per_epoch = 5000;
        cfg.adversarial.discriminator.hidden = 128;
        reports.extend(run_pipeline(&cfg).unwrap().reports());
    }
    let table = render_table(&reports);
    for line in table.lines() {
        println!("    {line}");
    }

    let lines: Vec<Vec<&str>> = table.lines().map(|l| l.split('\t').collect()).collect();
    let shape = lines.len() == 5
        && lines.iter().all(|l| l.len() == 7)
        && lines[0][1] == "Ti-Zh"
        && lines[0][4] == "Zh-Ti"
        && lines[1][1..] == ["P@1", "P@5", "P@10", "P@1", "P@5", "P@10"]
        && [lines[2][0], lines[3][0], lines[4][0]] == ["Semi-sup", "Self-sup", "Self-sup-re"];

    let find = |m: Method, src: &str| {
        reports
            .iter()
            .find(|r| r.method == m && r.direction.source == src)
            .unwrap()
    };
    let mut ordered = true;
    for dir in ["ti", "zh"] {
        let (plain, refined) = (
            find(Method::SelfSupervised, dir),
            find(Method::SelfSupervisedRefined, dir),
        );
        ordered &= [1, 5, 10].iter().all(|n| refined.p_at[n] > plain.p_at[n]);
    }
    let monotone = reports
        .iter()
        .all(|r| r.p_at.values().collect::<Vec<_>>().windows(2).all(|w| w[0] <= w[1]));
    outcome(
        shape && ordered && monotone,
        format!("table shape {shape}, Self-sup-re > Self-sup at every N {ordered}, P@N non-decreasing {monotone}"),
    )
}

fn exact_instance(noise: f64) -> SynthPair {
    generate(&SynthSpec {
        n_words: 2000,
        dim: 50,
        noise_sigma: noise,
        ..Default::default()
    })
    .unwrap()
}

fn criterion_2() -> Outcome {
    let pair = exact_instance(0.0);
    let t = Instant::now();
    let o = train_procrustes(
        &pair.src,
        &pair.tgt,
        &pair.gold_range(0..100),
        &ProcrustesConfig::default(),
    )
    .unwrap();
    let dt = t.elapsed();
    let err = o.mapping.matrix().max_abs_diff(pair.true_mapping.matrix());
    let p1 = p_at(&o.mapping, &pair, 100..2000).p_at[&1];
    outcome(
        err <= 1e-6 && p1 == 100.0 && within(dt, 10.0),
        format!(
            "max |W - Q| = {err:.2e} (<= 1e-6), held-out P@1 = {p1:.1} (= 100), {:.2}s (< 10s)",
            dt.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let pair = exact_instance(0.01);
    let cfg = ProcrustesConfig {
        n_iterations: 5,
        ..Default::default()
    };
    let t = Instant::now();
    let o = train_procrustes(&pair.src, &pair.tgt, &pair.gold_range(0..100), &cfg).unwrap();
    let dt = t.elapsed();
    let p1 = p_at(&o.mapping, &pair, 100..2000).p_at[&1];
    outcome(
        p1 >= 95.0 && within(dt, 30.0),
        format!(
            "held-out P@1 = {p1:.2} (>= 95) after 5 iterations, {:.2}s (< 30s)",
            dt.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (n, m, d) = (
            rng.random_range(5..=50),
            rng.random_range(5..=50),
            rng.random_range(1..=10),
        );
        let k = [1, 2, 5][rng.random_range(0..3)];
        let mut xs = gaussian(&mut rng, n, d);
        let mut ys = gaussian(&mut rng, m, d);
        xs.normalize_rows();
        ys.normalize_rows();
        let got = CslsIndex::build(xs.clone(), &ys, k).unwrap().score_matrix();
        let want = brute_csls(&rows(&xs), &rows(&ys), k);
        for (i, row) in want.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((got.row(i)[j] - v).abs());
            }
        }
    }
    let dt = t.elapsed();
    outcome(
        worst <= 1e-6 && within(dt, 5.0),
        format!(
            "20 instances, max |CSLS - brute force| = {worst:.2e} (<= 1e-6), {:.2}s (< 5s)",
            dt.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let pair = generate(&SynthSpec {
        n_words: 100,
        dim: 5,
        hubness_factor: 10.0,
        ..Default::default()
    })
    .unwrap();
    let w = MappingMatrix::identity(5);
    let xs = rows(pair.src.vectors());
    let ys = rows(pair.tgt.vectors());
    let argmax = |row: Vec<f64>| (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();

    let mut cos_degree = vec![0usize; ys.len()];
    for x in &xs {
        cos_degree[argmax(ys.iter().map(|y| cosine(x, y)).collect())] += 1;
    }
    let hub = (0..ys.len()).max_by_key(|&j| cos_degree[j]).unwrap();

    let index = CslsIndex::for_mapping(&w, pair.src.vectors(), pair.tgt.vectors(), 10).unwrap();
    let oracle = brute_csls(&xs, &ys, 10);
    let mut csls_degree = 0;
    let mut agree = true;
    for (i, row) in oracle.into_iter().enumerate() {
        let best = index.top_targets(i, 1)[0].tgt;
        agree &= best == argmax(row);
        csls_degree += usize::from(best == hub);
    }
    outcome(
        csls_degree < cos_degree[hub] && agree,
        format!(
            "hub w_{hub}' is the cosine argmax of {} sources, CSLS argmax of {csls_degree}; library argmax matches oracle {agree}",
            cos_degree[hub]
        ),
    )
}

fn criterion_6() -> Outcome {
    const EPS: f64 = 1e-4;
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = DiscriminatorConfig {
        hidden: 8,
        input_dropout: 0.0,
        ..Default::default()
    };
    let mut disc = Discriminator::new(4, cfg, &mut rng);
    let w = MappingMatrix::from_matrix(gaussian(&mut rng, 4, 4)).unwrap();
    let xs = gaussian(&mut rng, 6, 4);
    let ys = gaussian(&mut rng, 5, 4);
    let batches = Batches { src: &xs, tgt: &ys };
    let s = 0.1;

    // The library loss must agree with the scalar oracle before its
    // derivatives mean anything.
    let mut worst_loss = relative_error(
        discriminator_loss(&disc, &w, &batches, s),
        scalar_loss(&disc, w.matrix(), &xs, &ys, s, false),
    );
    worst_loss = worst_loss.max(relative_error(
        generator_loss(&disc, &w, &batches, s),
        scalar_loss(&disc, w.matrix(), &xs, &ys, s, true),
    ));

    let (_, grads) = discriminator_gradients::<ChaCha8Rng>(&disc, &w, &batches, s, None);
    let mut worst_d: f64 = 0.0;
    for l in 0..3 {
        let n_w = disc.layers()[l].w.as_slice().len();
        let n_b = disc.layers()[l].b.len();
        for p in 0..n_w + n_b {
            let analytic = if p < n_w {
                grads.layers[l].w.as_slice()[p]
            } else {
                grads.layers[l].b[p - n_w]
            };
            let mut at = |delta: f64| {
                let layer = &mut disc.layers_mut()[l];
                let slot = if p < n_w {
                    &mut layer.w.as_mut_slice()[p]
                } else {
                    &mut layer.b[p - n_w]
                };
                let old = *slot;
                *slot = old + delta;
                let v = scalar_loss(&disc, w.matrix(), &xs, &ys, s, false);
                let layer = &mut disc.layers_mut()[l];
                if p < n_w {
                    layer.w.as_mut_slice()[p] = old;
                } else {
                    layer.b[p - n_w] = old;
                }
                v
            };
            let numeric = (at(EPS) - at(-EPS)) / (2.0 * EPS);
            worst_d = worst_d.max(relative_error(analytic, numeric));
        }
    }

    let (_, grad_w) = generator_gradient(&disc, &w, &batches, s);
    let mut worst_w: f64 = 0.0;
    for p in 0..16 {
        let at = |delta: f64| {
            let mut m = w.matrix().clone();
            m.as_mut_slice()[p] += delta;
            scalar_loss(&disc, &m, &xs, &ys, s, true)
        };
        let numeric = (at(EPS) - at(-EPS)) / (2.0 * EPS);
        worst_w = worst_w.max(relative_error(grad_w.as_slice()[p], numeric));
    }
    let dt = t.elapsed();
    outcome(
        worst_loss < 1e-12 && worst_d < 1e-4 && worst_w < 1e-4 && within(dt, 10.0),
        format!(
            "max relative error dL_D/dtheta {worst_d:.2e}, dL_W/dW {worst_w:.2e} (< 1e-4); loss vs oracle {worst_loss:.1e}; {:.2}s (< 10s)",
            dt.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let pair = generate(&SynthSpec::default()).unwrap();
    let run = |lr: f64| {
        let cfg = AdversarialConfig {
            epochs: 1,
            steps_per_epoch: 5000,
            learning_rate: lr,
            beta: 0.001,
            log_interval: 1,
            discriminator: DiscriminatorConfig {
                hidden: 128,
                ..Default::default()
            },
            ..Default::default()
        };
        train_adversarial(&pair.src, &pair.tgt, &cfg).unwrap()
    };
    let o = run(0.01);
    let beta = RetractionConfig::new(0.001).unwrap();
    let (swept, passes) = retraction_sweep(&o.last, beta, 1e-2 * 0.999, 100_000);
    let end = swept.orthogonality_error();

    let q = MappingMatrix::random_orthogonal(50, &mut ChaCha8Rng::seed_from_u64(7));
    let fixed = orthogonal_retraction(&q, beta).matrix().max_abs_diff(q.matrix());

    let drift = run(0.1).max_orthogonality;
    println!("    info: the same run at learning rate 0.1 reaches max ||WW^T - I||_F = {drift:.3}");
    outcome(
        o.max_orthogonality <= 0.05 && end < 1e-2 && fixed <= 1e-9,
        format!(
            "lr 0.01: max ||WW^T - I||_F = {:.4} (<= 0.05) over 5000 steps, {end:.2e} (< 1e-2) after {passes} sweep passes; fixed point change {fixed:.1e} (<= 1e-9)",
            o.max_orthogonality
        ),
    )
}

fn criterion_8() -> Outcome {
    let pair = generate(&SynthSpec::structured(2000, 50)).unwrap();
    let t = Instant::now();
    let mut per_seed = Vec::new();
    for seed in 0..5 {
        let cfg = AdversarialConfig {
            epochs: 5,
            steps_per_epoch: 5000,
            rng_seed: seed,
            discriminator: DiscriminatorConfig {
                hidden: 128,
                ..Default::default()
            },
            ..Default::default()
        };
        let o = train_adversarial(&pair.src, &pair.tgt, &cfg).unwrap();
        let before = p_at(&o.best, &pair, 0..2000).p_at[&1];
        let after = match train_refined(&pair.src, &pair.tgt, &o.best, &RefineConfig::default()) {
            Ok(r) => p_at(&r.mapping, &pair, 0..2000).p_at[&1],
            Err(_) => 0.0,
        };
        println!("    seed {seed}: P@1 {before:.2} before refinement, {after:.2} after");
        per_seed.push((before, after));
    }
    let dt = t.elapsed();
    let passing = per_seed.iter().filter(|(b, a)| *b >= 80.0 && *a >= 99.0).count();
    let best = per_seed
        .iter()
        .copied()
        .fold((0.0f64, 0.0f64), |m, (b, a)| (m.0.max(b), m.1.max(a)));
    outcome(
        passing > 0 && within(dt, 600.0),
        format!(
            "{passing}/5 seeds reach P@1 >= 80 before and >= 99 after refinement (best {:.2} / {:.2}), {:.0}s (< 600s)",
            best.0,
            best.1,
            dt.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let d = 6;
    let disc = Discriminator::zeros(d, DiscriminatorConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs = gaussian(&mut rng, 7, d);
    let ys = gaussian(&mut rng, 9, d);
    let w = MappingMatrix::random_orthogonal(d, &mut rng);
    let batches = Batches { src: &xs, tgt: &ys };
    let want = 2.0 * std::f64::consts::LN_2;
    let l_d = discriminator_loss(&disc, &w, &batches, 0.0);
    let l_w = generator_loss(&disc, &w, &batches, 0.0);
    let err = (l_d - want).abs().max((l_w - want).abs());
    outcome(
        err <= 1e-9,
        format!("L_D = {l_d:.12}, L_W = {l_w:.12}, 2 ln 2 = {want:.12}, max error {err:.1e} (<= 1e-9)"),
    )
}

fn lexalign(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lexalign"))
        .args(args)
        .env("RUST_LOG", "warn")
        .status()
        .expect("binary runs")
        .success()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn criterion_10(tmp: &Path) -> Outcome {
    let pair = generate(&SynthSpec::structured(600, 20)).unwrap();
    let dir = tmp.join("c10");
    let (src, tgt) = synth_files(&dir, &pair);
    let run = |name: &str| {
        let out = dir.join(name);
        let ok = lexalign(&[
            "align",
            "--method",
            "self-sup-re",
            "--src-emb",
            p(&src),
            "--tgt-emb",
            p(&tgt),
            "--output-dir",
            p(&out),
            "--epochs",
            "2",
            "--steps-per-epoch",
            "500",
            "--hidden",
            "64",
            "--s-anchor-pairs",
            "300",
            "--seed",
            "10",
        ]);
        (ok, out)
    };
    let (ok_a, a) = run("first");
    let (ok_b, b) = run("second");
    let files = [
        "src-tgt.adversarial.mapping",
        "src-tgt.mapping",
        "src-tgt.anchors.tsv",
        "src-tgt.dict.tsv",
        "src-tgt.losses.csv",
        "src-tgt.validation.csv",
    ];
    let identical = ok_a
        && ok_b
        && files
            .iter()
            .all(|f| matches!((fs::read(a.join(f)), fs::read(b.join(f))), (Ok(x), Ok(y)) if x == y));
    outcome(
        identical,
        format!(
            "two `align --method self-sup-re` runs, {} artifacts bit-identical: {identical}",
            files.len()
        ),
    )
}

fn criterion_11(tmp: &Path) -> Outcome {
    let dir = tmp.join("c11");
    let data = dir.join("data");
    let ok_synth = lexalign(&["synth", "--output-dir", p(&data), "--n-words", "500", "--dim", "20"]);
    let out = dir.join("align");
    let gold = data.join("gold.tsv");
    let ok_align = lexalign(&[
        "align",
        "--src-emb",
        p(&data.join("src.vec")),
        "--tgt-emb",
        p(&data.join("tgt.vec")),
        "--seed-dict",
        p(&gold),
        "--output-dir",
        p(&out),
    ]);
    let csv = dir.join("pca.csv");
    let ok_pca = lexalign(&[
        "pca",
        "--src-emb",
        p(&data.join("src.vec")),
        "--tgt-emb",
        p(&data.join("tgt.vec")),
        "--checkpoint",
        p(&out.join("src-tgt.mapping")),
        "--pairs",
        p(&gold),
        "--output",
        p(&csv),
    ]);
    if !(ok_synth && ok_align && ok_pca) {
        return outcome(false, "a subcommand failed".into());
    }
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header_ok = lines.next() == Some("word,lang,pc1,pc2");
    let points: Vec<(String, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_owned(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    let n = points.len() / 2;
    let mut worst: f64 = 0.0;
    let mut labels_ok = points.len() == 1000;
    for i in 0..n {
        let (s, t) = (&points[i], &points[i + n]);
        labels_ok &= format!("{}'", s.0) == t.0;
        worst = worst.max((s.1 - t.1).abs()).max((s.2 - t.2).abs());
    }
    outcome(
        header_ok && labels_ok && worst <= 1e-6,
        format!(
            "{n} pairs, max distance between paired 2-D points {worst:.2e} (<= 1e-6), header and labels ok {}",
            header_ok && labels_ok
        ),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<Gate<'_>> = vec![
        ("table shape and method ordering", Box::new(|| criterion_1(tmp.path()))),
        ("Procrustes exactness", Box::new(criterion_2)),
        ("Procrustes robustness", Box::new(criterion_3)),
        ("CSLS oracle equivalence", Box::new(criterion_4)),
        ("hubness reduction", Box::new(criterion_5)),
        ("gradient checks", Box::new(criterion_6)),
        ("orthogonality maintenance", Box::new(criterion_7)),
        ("adversarial recovery", Box::new(criterion_8)),
        ("analytic loss values", Box::new(criterion_9)),
        ("end-to-end determinism", Box::new(|| criterion_10(tmp.path()))),
        ("PCA pair coincidence", Box::new(|| criterion_11(tmp.path()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {name}: {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
