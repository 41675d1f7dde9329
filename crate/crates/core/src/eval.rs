//! Precision at N of a mapping against a gold dictionary, and the results
//! table in the layout of one row per method and one column group per
//! direction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::str::FromStr;

use crate::csls::CslsIndex;
use crate::embedding::{Direction, EmbeddingSet, SeedDictionary};
use crate::geometry::MappingMatrix;
use crate::{Error, Result};

pub const DEFAULT_NS: [usize; 3] = [1, 5, 10];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    #[cfg_attr(feature = "serde", serde(rename = "Semi-sup"))]
    SemiSupervised,
    #[cfg_attr(feature = "serde", serde(rename = "Self-sup"))]
    SelfSupervised,
    #[cfg_attr(feature = "serde", serde(rename = "Self-sup-re"))]
    SelfSupervisedRefined,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::SemiSupervised,
        Method::SelfSupervised,
        Method::SelfSupervisedRefined,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::SemiSupervised => "Semi-sup",
            Method::SelfSupervised => "Self-sup",
            Method::SelfSupervisedRefined => "Self-sup-re",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the table tags in any letter case.
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or(Error::InvalidConfig {
                field: "method",
                reason: "expected semi-sup, self-sup or self-sup-re",
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub direction: Direction,
    pub method: Method,
    /// Percentage of evaluated source words with a gold target among the top
    /// `N` CSLS candidates.
    pub p_at: BTreeMap<usize, f64>,
    /// Distinct source words with at least one in-vocabulary gold target.
    pub n_evaluated: usize,
    /// Gold pairs with an out-of-vocabulary word.
    pub n_skipped: usize,
}

/// Scores `w` on `test_dict`. Targets are ranked by CSLS with neighborhood
/// `csls_k` over the whole target vocabulary; a source word with several gold
/// targets is one unit and counts as a hit if any of them is retrieved.
pub fn evaluate(
    w: &MappingMatrix,
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    test_dict: &SeedDictionary,
    ns: &[usize],
    csls_k: usize,
    method: Method,
) -> Result<EvalReport> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidConfig {
            field: "ns",
            reason: "must be positive and strictly ascending",
        });
    }
    let mut gold: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut n_skipped = 0;
    for (s, t) in test_dict.pairs() {
        match (src.rank_of(s), tgt.rank_of(t)) {
            (Some(i), Some(j)) => {
                gold.entry(i).or_default().insert(j);
            }
            _ => n_skipped += 1,
        }
    }
    if gold.is_empty() {
        return Err(Error::NoEvaluableWords);
    }
    let index = CslsIndex::for_mapping(w, src.vectors(), tgt.vectors(), csls_k)?;
    let max_n = ns[ns.len() - 1];
    let mut hits = alloc::vec![0usize; ns.len()];
    for (&i, targets) in &gold {
        let first = index
            .top_targets(i, max_n)
            .iter()
            .position(|p| targets.contains(&p.tgt));
        if let Some(pos) = first {
            for (h, &n) in hits.iter_mut().zip(ns) {
                if pos < n {
                    *h += 1;
                }
            }
        }
    }
    let n_evaluated = gold.len();
    let p_at = ns
        .iter()
        .zip(hits)
        .map(|(&n, h)| (n, 100.0 * h as f64 / n_evaluated as f64))
        .collect();
    Ok(EvalReport {
        direction: Direction::between(src, tgt),
        method,
        p_at,
        n_evaluated,
        n_skipped,
    })
}

/// Tab-separated table: a header row of direction groups, a header row of
/// `P@N` labels, then one row per method in the order semi-supervised,
/// self-supervised, refined. Direction groups keep first-appearance order.
/// Missing cells are `-`.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut directions: Vec<&Direction> = Vec::new();
    let mut ns: BTreeSet<usize> = BTreeSet::new();
    let mut methods: BTreeSet<Method> = BTreeSet::new();
    for r in reports {
        if !directions.contains(&&r.direction) {
            directions.push(&r.direction);
        }
        ns.extend(r.p_at.keys());
        methods.insert(r.method);
    }

    let mut out = String::new();
    for d in &directions {
        out.push('\t');
        out.push_str(&direction_label(d));
        out.extend(core::iter::repeat_n('\t', ns.len() - 1));
    }
    out.push('\n');
    for _ in &directions {
        for n in &ns {
            let _ = write!(out, "\tP@{n}");
        }
    }
    out.push('\n');
    for m in methods {
        out.push_str(m.tag());
        for d in &directions {
            let report = reports.iter().rev().find(|r| r.method == m && &r.direction == *d);
            for n in &ns {
                match report.and_then(|r| r.p_at.get(n)) {
                    Some(v) => {
                        let _ = write!(out, "\t{v:.1}");
                    }
                    None => out.push_str("\t-"),
                }
            }
        }
        out.push('\n');
    }
    out
}

fn direction_label(d: &Direction) -> String {
    let cap = |s: &str| {
        let mut c = s.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect::<String>(),
            None => String::new(),
        }
    };
    alloc::format!("{}-{}", cap(&d.source), cap(&d.target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::synth::{generate, SynthSpec};
    use alloc::format;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn report(method: Method, dir: (&str, &str), values: [f64; 3]) -> EvalReport {
        EvalReport {
            direction: Direction::new(dir.0, dir.1),
            method,
            p_at: DEFAULT_NS.iter().copied().zip(values).collect(),
            n_evaluated: 100,
            n_skipped: 0,
        }
    }

    #[test]
    fn exact_rotation_scores_perfectly() {
        let p = generate(&SynthSpec {
            n_words: 300,
            dim: 10,
            ..Default::default()
        })
        .unwrap();
        let r = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &p.gold,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        assert_eq!(r.n_evaluated, 300);
        assert!(r.p_at.values().all(|&v| v == 100.0));
    }

    #[test]
    fn unrelated_spaces_score_near_chance() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut set = |lang: &str, prefix: &str| {
                let data = (0..500 * 8).map(|_| rng.sample(StandardNormal)).collect();
                let mut m = Matrix::from_vec(500, 8, data);
                m.normalize_rows();
                let words = (0..500).map(|i| format!("{prefix}{i}")).collect();
                EmbeddingSet::new(words, m, lang).unwrap()
            };
            let src = set("a", "a");
            let tgt = set("b", "b");
            let gold: SeedDictionary = (0..500).map(|i| (format!("a{i}"), format!("b{i}"))).collect();
            let r = evaluate(
                &MappingMatrix::identity(8),
                &src,
                &tgt,
                &gold,
                &DEFAULT_NS,
                10,
                Method::SelfSupervised,
            )
            .unwrap();
            assert!(r.p_at[&1] < 5.0, "seed {seed}: {}", r.p_at[&1]);
        }
    }

    fn small_pair() -> crate::synth::SynthPair {
        generate(&SynthSpec {
            n_words: 200,
            dim: 4,
            noise_sigma: 0.3,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn scores_are_monotone_in_n() {
        let p = small_pair();
        let r = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &p.gold,
            &[1, 2, 5, 10, 50],
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        let v: Vec<f64> = r.p_at.values().copied().collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(v[0] < 100.0 && v[4] > v[0]);
    }

    #[test]
    fn oov_pairs_are_skipped_without_effect() {
        let p = small_pair();
        let base = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &p.gold,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        let mut with_oov = p.gold.clone();
        with_oov.push("w_3", "missing");
        with_oov.push("missing", "w_3'");
        let r = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &with_oov,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        assert_eq!(r.n_skipped, 2);
        assert_eq!(r.p_at, base.p_at);
        assert_eq!(r.n_evaluated, base.n_evaluated);
    }

    #[test]
    fn line_order_does_not_matter() {
        let p = small_pair();
        let mut pairs = p.gold.pairs().to_vec();
        pairs.reverse();
        pairs.rotate_left(37);
        let a = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &p.gold,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        let b = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &SeedDictionary::new(pairs),
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multiple_gold_targets_count_once() {
        let p = small_pair();
        let mut dict = SeedDictionary::default();
        for i in 0..20 {
            dict.push(format!("w_{i}"), format!("w_{i}'"));
            dict.push(format!("w_{i}"), format!("w_{}'", i + 100));
        }
        let r = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &dict,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        assert_eq!(r.n_evaluated, 20);
        let single: SeedDictionary = (0..20).map(|i| (format!("w_{i}"), format!("w_{i}'"))).collect();
        let s = evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &single,
            &DEFAULT_NS,
            10,
            Method::SemiSupervised,
        )
        .unwrap();
        for n in DEFAULT_NS {
            assert!(r.p_at[&n] >= s.p_at[&n]);
        }
    }

    #[test]
    fn no_evaluable_words_is_an_error() {
        let p = small_pair();
        let dict = SeedDictionary::new(vec![("nope".into(), "w_1'".into())]);
        assert_eq!(
            evaluate(
                &p.true_mapping,
                &p.src,
                &p.tgt,
                &dict,
                &DEFAULT_NS,
                10,
                Method::SemiSupervised
            ),
            Err(Error::NoEvaluableWords)
        );
        assert!(evaluate(
            &p.true_mapping,
            &p.src,
            &p.tgt,
            &p.gold,
            &[5, 1],
            10,
            Method::SemiSupervised
        )
        .is_err());
    }

    #[test]
    fn table_matches_the_three_by_two_layout() {
        let reports = [
            report(Method::SelfSupervisedRefined, ("ti", "zh"), [25.4, 46.3, 53.5]),
            report(Method::SemiSupervised, ("ti", "zh"), [48.5, 62.7, 66.5]),
            report(Method::SelfSupervised, ("ti", "zh"), [12.7, 23.7, 29.2]),
            report(Method::SemiSupervised, ("zh", "ti"), [55.7, 69.8, 74.8]),
            report(Method::SelfSupervised, ("zh", "ti"), [8.4, 16.8, 21.7]),
            report(Method::SelfSupervisedRefined, ("zh", "ti"), [27.5, 47.7, 53.5]),
        ];
        let expected = "\tTi-Zh\t\t\tZh-Ti\t\t\n\
                        \tP@1\tP@5\tP@10\tP@1\tP@5\tP@10\n\
                        Semi-sup\t48.5\t62.7\t66.5\t55.7\t69.8\t74.8\n\
                        Self-sup\t12.7\t23.7\t29.2\t8.4\t16.8\t21.7\n\
                        Self-sup-re\t25.4\t46.3\t53.5\t27.5\t47.7\t53.5\n";
        assert_eq!(render_table(&reports), expected);
    }

    #[test]
    fn single_report_gives_one_row() {
        let t = render_table(&[report(Method::SelfSupervised, ("a", "b"), [1.0, 2.0, 3.0])]);
        assert_eq!(t.lines().count(), 3);
        assert_eq!(t.lines().nth(2).unwrap(), "Self-sup\t1.0\t2.0\t3.0");
    }

    #[test]
    fn missing_cells_render_as_dash() {
        let t = render_table(&[
            report(Method::SemiSupervised, ("a", "b"), [1.0, 2.0, 3.0]),
            report(Method::SelfSupervised, ("b", "a"), [4.0, 5.0, 6.0]),
        ]);
        assert!(t.contains("Semi-sup\t1.0\t2.0\t3.0\t-\t-\t-"));
        assert!(t.contains("Self-sup\t-\t-\t-\t4.0\t5.0\t6.0"));
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            assert_eq!(m.tag().to_lowercase().parse::<Method>().unwrap(), m);
        }
        assert!("self".parse::<Method>().is_err());
    }
}
