//! Precision, recall and F at token, boundary and lexicon level, plus
//! Spearman rank correlation between F and the criteria.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{RawCorpus, Segmentation};
use crate::criteria::{CriteriaSet, CriterionId};
use crate::error::{Error, Result};

/// Match counts; the ratios are derived from them so nothing is rounded
/// until display.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prf {
    pub correct: u64,
    pub predicted: u64,
    pub reference: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.reference)
    }

    pub fn f(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// True when precision or recall is 0/0 and was reported as 0.
    pub fn degenerate(&self) -> bool {
        self.predicted == 0 || self.reference == 0
    }

    /// (P, R, F) as percentages.
    pub fn percent(&self) -> (f64, f64, f64) {
        (100.0 * self.precision(), 100.0 * self.recall(), 100.0 * self.f())
    }

    fn from_sorted<T: Ord>(hyp: &[T], gold: &[T]) -> Prf {
        let (mut i, mut j, mut correct) = (0, 0, 0);
        while i < hyp.len() && j < gold.len() {
            match hyp[i].cmp(&gold[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    correct += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Prf {
            correct,
            predicted: hyp.len() as u64,
            reference: gold.len() as u64,
        }
    }
}

fn check_same(hyp: &Segmentation, gold: &Segmentation) {
    assert_eq!(hyp.n_chars(), gold.n_chars(), "segmentations of different corpora");
}

/// A hypothesized word is correct when the identical span is a gold word.
pub fn token_prf(corpus: &RawCorpus, hyp: &Segmentation, gold: &Segmentation) -> Prf {
    check_same(hyp, gold);
    let spans = |s: &Segmentation| -> Vec<(usize, usize)> {
        s.word_spans(corpus).into_iter().map(|r| (r.start, r.end)).collect()
    };
    Prf::from_sorted(&spans(hyp), &spans(gold))
}

/// Internal boundary positions; block edges are given and not scored.
pub fn boundary_prf(hyp: &Segmentation, gold: &Segmentation) -> Prf {
    check_same(hyp, gold);
    Prf::from_sorted(hyp.positions(), gold.positions())
}

/// Distinct word types of each side.
pub fn lexicon_prf(corpus: &RawCorpus, hyp: &Segmentation, gold: &Segmentation) -> Prf {
    check_same(hyp, gold);
    let types = |s: &Segmentation| -> HashSet<String> { s.words(corpus).into_iter().collect() };
    let (h, g) = (types(hyp), types(gold));
    Prf {
        correct: h.intersection(&g).count() as u64,
        predicted: h.len() as u64,
        reference: g.len() as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub token: Prf,
    pub boundary: Prf,
    pub lexicon: Prf,
}

pub fn evaluate(corpus: &RawCorpus, hyp: &Segmentation, gold: &Segmentation) -> EvalReport {
    EvalReport {
        token: token_prf(corpus, hyp, gold),
        boundary: boundary_prf(hyp, gold),
        lexicon: lexicon_prf(corpus, hyp, gold),
    }
}

impl EvalReport {
    /// Flat JSON with percentages to one decimal and the raw counts.
    pub fn to_json(&self) -> serde_json::Value {
        let level = |p: &Prf| {
            let (pp, rr, ff) = p.percent();
            serde_json::json!({
                "P": round1(pp), "R": round1(rr), "F": round1(ff),
                "correct": p.correct, "predicted": p.predicted, "reference": p.reference,
                "degenerate": p.degenerate(),
            })
        };
        serde_json::json!({
            "token": level(&self.token),
            "boundary": level(&self.boundary),
            "lexicon": level(&self.lexicon),
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("level\tP\tR\tF\tdegenerate\n");
        for (name, p) in [("token", &self.token), ("boundary", &self.boundary), ("lexicon", &self.lexicon)] {
            let (pp, rr, ff) = p.percent();
            out.push_str(&format!("{name}\t{pp:.1}\t{rr:.1}\t{ff:.1}\t{}\n", p.degenerate()));
        }
        out
    }
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Fractional ranks starting at 1; tied values share their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = avg;
        }
        i = j;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of fractional ranks.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParams("need at least two points".into()));
    }
    pearson(&ranks(xs), &ranks(ys)).ok_or(Error::Undefined("rank correlation of a constant ranking"))
}

/// One scored hypothesis: its token F and criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub token_f: f64,
    pub criteria: CriteriaSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub criterion: CriterionId,
    /// `None` when undefined (too few points or a constant ranking).
    pub outputs: Option<f64>,
    pub trace: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    pub criterion: CriterionId,
    pub population: String,
    /// (rank by criterion, best = 1; token F)
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n_outputs: usize,
    pub n_trace: usize,
    pub rows: Vec<CorrelationRow>,
    pub scatter: Vec<ScatterSeries>,
}

fn population(points: &[ScoredPoint], c: CriterionId) -> (Option<f64>, Vec<(f64, f64)>) {
    let f: Vec<f64> = points.iter().map(|p| p.token_f).collect();
    let v: Vec<f64> = points.iter().map(|p| p.criteria.value(c)).collect();
    let rho = spearman_rho(&f, &v).ok();
    let scatter = ranks(&v).into_iter().zip(f).collect();
    (rho, scatter)
}

/// ρ(token F, criterion) over final outputs and over the full trace.
pub fn correlation_report(
    outputs: &[ScoredPoint],
    trace: &[ScoredPoint],
    criteria: &[CriterionId],
) -> CorrelationReport {
    let mut rows = Vec::new();
    let mut scatter = Vec::new();
    for &c in criteria {
        let (o, os) = population(outputs, c);
        let (t, ts) = population(trace, c);
        rows.push(CorrelationRow {
            criterion: c,
            outputs: o,
            trace: t,
        });
        scatter.push(ScatterSeries {
            criterion: c,
            population: "outputs".into(),
            points: os,
        });
        scatter.push(ScatterSeries {
            criterion: c,
            population: "trace".into(),
            points: ts,
        });
    }
    CorrelationReport {
        n_outputs: outputs.len(),
        n_trace: trace.len(),
        rows,
        scatter,
    }
}

impl CorrelationReport {
    pub fn to_tsv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |r| format!("{r:.2}"));
        let mut out = String::from("criterion\toutputs\ttrace\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{}\n", r.criterion, fmt(r.outputs), fmt(r.trace)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_gold, Format};
    use proptest::prelude::*;

    fn pair(gold: &str, hyp: &str) -> (RawCorpus, Segmentation, Segmentation) {
        let (c, g) = parse_gold(gold.as_bytes(), Format::Brent).unwrap();
        let (c2, h) = parse_gold(hyp.as_bytes(), Format::Brent).unwrap();
        assert!(c.same_stream(&c2));
        (c, h, g)
    }

    #[test]
    fn token_examples() {
        let (c, h, g) = pair("a b c", "a bc");
        let p = token_prf(&c, &h, &g);
        assert_eq!((p.correct, p.predicted, p.reference), (1, 2, 3));
        let (pp, rr, ff) = p.percent();
        assert_eq!(round1(pp), 50.0);
        assert_eq!(round1(rr), 33.3);
        assert_eq!(round1(ff), 40.0);

        let (c, h, g) = pair("ab cd", "abcd");
        assert_eq!(token_prf(&c, &h, &g).f(), 0.0);
    }

    #[test]
    fn boundary_examples() {
        let (_, h, g) = pair("a b c", "a bc");
        let (p, r, f) = boundary_prf(&h, &g).percent();
        assert_eq!((p, r, round1(f)), (100.0, 50.0, 66.7));

        let (_, h, g) = pair("abc\nde", "abc\nde");
        let b = boundary_prf(&h, &g);
        assert!(b.degenerate());
        assert_eq!(b.precision(), 0.0);
    }

    #[test]
    fn lexicon_examples() {
        let (c, h, g) = pair("a b ab", "a b ab");
        assert_eq!(lexicon_prf(&c, &h, &g).percent(), (100.0, 100.0, 100.0));
        let (c, h, g) = pair("a b ab", "ab ab");
        let l = lexicon_prf(&c, &h, &g);
        assert_eq!((l.correct, l.predicted, l.reference), (1, 1, 3));
    }

    #[test]
    fn identical_segmentations_score_perfectly() {
        let (c, h, g) = pair("yu want tu si D6 bUk\nlUk", "yu want tu si D6 bUk\nlUk");
        let r = evaluate(&c, &h, &g);
        for p in [r.token, r.boundary, r.lexicon] {
            assert_eq!(p.f(), 1.0);
        }
        let tsv = r.to_tsv();
        assert!(tsv.contains("token\t100.0\t100.0\t100.0"));
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap() + 0.5).abs() < 1e-12);
        let xs = [3.0, 1.0, 4.0, 1.5, 9.0];
        assert!((spearman_rho(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((spearman_rho(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman_rho(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn average_ranks() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        assert_eq!(ranks(&[f64::INFINITY, 1.0]), vec![2.0, 1.0]);
    }

    proptest! {
        #[test]
        fn boundary_symmetry(a in proptest::collection::btree_set(1u32..30, 0..20),
                             b in proptest::collection::btree_set(1u32..30, 0..20)) {
            let n = 31;
            let sa = Segmentation::from_sorted_unchecked(n, a.into_iter().collect());
            let sb = Segmentation::from_sorted_unchecked(n, b.into_iter().collect());
            let ab = boundary_prf(&sa, &sb);
            let ba = boundary_prf(&sb, &sa);
            prop_assert_eq!(ab.precision(), ba.recall());
            prop_assert_eq!(ab.recall(), ba.precision());
        }

        #[test]
        fn spearman_monotone_invariance(xs in proptest::collection::vec(-100.0f64..100.0, 3..30),
                                        ys in proptest::collection::vec(-100.0f64..100.0, 3..30)) {
            let n = xs.len().min(ys.len());
            let (xs, ys) = (&xs[..n], &ys[..n]);
            if let Ok(r) = spearman_rho(xs, ys) {
                let tx: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0).collect();
                let r2 = spearman_rho(&tx, ys).unwrap();
                prop_assert!((r - r2).abs() < 1e-12);
            }
        }
    }
}
