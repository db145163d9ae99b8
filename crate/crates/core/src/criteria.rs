//! Information criteria for finished hypotheses: AIC with the finite-sample
//! correction and MDL, each under a unigram, bigram or trigram model.
//!
//! All values are in nats. Sequences are expected to be surface-level (one
//! token id per distinct word); [`evaluate_segmentation`] builds one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{RawCorpus, Segmentation};
use crate::lexmodel::{Gram, Lexicon, TokenSequence};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum CriterionId {
    Aic1,
    Aic2,
    Aic3,
    Mdl1,
    Mdl2,
    Mdl3,
}

impl CriterionId {
    pub const ALL: [CriterionId; 6] = [
        CriterionId::Aic1,
        CriterionId::Aic2,
        CriterionId::Aic3,
        CriterionId::Mdl1,
        CriterionId::Mdl2,
        CriterionId::Mdl3,
    ];

    pub fn order(self) -> usize {
        match self {
            CriterionId::Aic1 | CriterionId::Mdl1 => 1,
            CriterionId::Aic2 | CriterionId::Mdl2 => 2,
            CriterionId::Aic3 | CriterionId::Mdl3 => 3,
        }
    }

    pub fn is_mdl(self) -> bool {
        matches!(self, CriterionId::Mdl1 | CriterionId::Mdl2 | CriterionId::Mdl3)
    }

    pub fn name(self) -> &'static str {
        match self {
            CriterionId::Aic1 => "aic1",
            CriterionId::Aic2 => "aic2",
            CriterionId::Aic3 => "aic3",
            CriterionId::Mdl1 => "mdl1",
            CriterionId::Mdl2 => "mdl2",
            CriterionId::Mdl3 => "mdl3",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for CriterionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CriterionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriterionId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown criterion '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub id: CriterionId,
    /// May be +∞ for an over-parameterized AIC model.
    #[serde(with = "crate::criteria::float_or_inf")]
    pub value: f64,
    pub nll: f64,
    pub k: u64,
    /// AIC: the correction N·k/(N−k−1). MDL: the lexicon code length.
    #[serde(with = "crate::criteria::float_or_inf")]
    pub extra: f64,
}

impl CriterionValue {
    /// Value rebuilt from the stored parts.
    pub fn reconstruct(&self, n_chars: u64) -> f64 {
        if self.id.is_mdl() {
            self.nll + 0.5 * self.k as f64 * (n_chars as f64).ln() + self.extra
        } else {
            self.nll + self.extra
        }
    }

    pub fn in_bits(&self) -> f64 {
        self.value / std::f64::consts::LN_2
    }
}

/// JSON has no infinity; store it as null.
pub(crate) mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// The six criteria of one hypothesis, indexable by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSet(pub Vec<CriterionValue>);

impl CriteriaSet {
    pub fn get(&self, id: CriterionId) -> &CriterionValue {
        let v = &self.0[id.index()];
        debug_assert_eq!(v.id, id);
        v
    }

    pub fn value(&self, id: CriterionId) -> f64 {
        self.get(id).value
    }
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Σ F(c) in a fixed order, so results do not depend on hash iteration.
fn sum_xlnx(counts: impl Iterator<Item = u64>) -> f64 {
    let mut v: Vec<u64> = counts.collect();
    v.sort_unstable();
    v.into_iter().map(|c| xlnx(c as f64)).sum()
}

/// Σ_h F(Σ_x c(h,x)) − Σ_g F(c(g)): the ML conditional cost of every
/// n-gram given its (n−1)-token context.
fn conditional_cost(seq: &TokenSequence, n: usize) -> f64 {
    let stats = seq.ngram_stats(n);
    let mut ctx: HashMap<Gram, u64> = HashMap::new();
    for (g, &c) in &stats.counts {
        *ctx.entry(g.context()).or_default() += c;
    }
    sum_xlnx(ctx.into_values()) - sum_xlnx(stats.counts.values().copied())
}

/// ML negative log-likelihood of the sequence under an order-`n` model.
///
/// Within each block, position i < n−1 is scored with the order-(i+1)
/// model; the rest with the order-n model.
pub fn neg_log_likelihood(seq: &TokenSequence, n: usize) -> f64 {
    assert!((1..=3).contains(&n), "order {n} outside 1..=3");
    let total = seq.total() as f64;
    let unigram = xlnx(total) - sum_xlnx(seq.counts().iter().copied());
    if n == 1 {
        return unigram;
    }
    let ln_total = total.ln();
    let mut head = 0.0;
    let bigrams = if n == 3 { Some(seq.ngram_stats(2)) } else { None };
    let mut continuations: HashMap<u32, u64> = HashMap::new();
    if let Some(b) = &bigrams {
        for (g, &c) in &b.counts {
            *continuations.entry(g.as_slice()[0]).or_default() += c;
        }
    }
    for (block, w) in seq.weighted_blocks() {
        let w = w as f64;
        head += w * (ln_total - (seq.count(block[0]) as f64).ln());
        if let (Some(b), true) = (&bigrams, block.len() >= 2) {
            let pair = b.get(&block[..2]) as f64;
            let ctx = continuations[&block[0]] as f64;
            head += w * (ctx.ln() - pair.ln());
        }
    }
    head + conditional_cost(seq, n)
}

/// Degrees of freedom for AIC: Σ over active words of (1 + |w|) plus the
/// model's own parameters.
pub fn complexity_aic(seq: &TokenSequence, n: usize) -> u64 {
    assert!((1..=3).contains(&n), "order {n} outside 1..=3");
    let lexicon: u64 = seq.active_tokens().map(|t| 1 + seq.length(t) as u64).sum();
    let model = match n {
        1 => seq.active_types() as u64,
        _ => 1 + 2 * seq.ngram_stats(n).distinct() as u64,
    };
    lexicon + model
}

/// Parameter count for MDL: the number of distinct order-`n` grams.
pub fn complexity_mdl(seq: &TokenSequence, n: usize) -> u64 {
    assert!((1..=3).contains(&n), "order {n} outside 1..=3");
    match n {
        1 => seq.active_types() as u64,
        _ => seq.ngram_stats(n).distinct() as u64,
    }
}

/// Code length of the active lexicon: every surface spelled out with an
/// end marker, under the ML distribution of characters and markers.
pub fn codebook_length(lex: &Lexicon, seq: &TokenSequence) -> f64 {
    let mut chars: HashMap<char, u64> = HashMap::new();
    let mut entries = 0u64;
    let mut total = 0u64;
    for t in seq.active_tokens() {
        for c in lex.surface(t).chars() {
            *chars.entry(c).or_default() += 1;
            total += 1;
        }
        entries += 1;
    }
    total += entries;
    xlnx(total as f64) - xlnx(entries as f64) - sum_xlnx(chars.into_values())
}

fn aic_value(id: CriterionId, nll: f64, k: u64, n_chars: u64) -> CriterionValue {
    let (nf, kf) = (n_chars as f64, k as f64);
    let extra = if nf - kf - 1.0 <= 0.0 {
        f64::INFINITY
    } else {
        nf * kf / (nf - kf - 1.0)
    };
    CriterionValue {
        id,
        value: nll + extra,
        nll,
        k,
        extra,
    }
}

fn mdl_value(id: CriterionId, nll: f64, k: u64, n_chars: u64, cbl: f64) -> CriterionValue {
    CriterionValue {
        id,
        value: nll + 0.5 * k as f64 * (n_chars as f64).ln() + cbl,
        nll,
        k,
        extra: cbl,
    }
}

fn aic_id(n: usize) -> CriterionId {
    [CriterionId::Aic1, CriterionId::Aic2, CriterionId::Aic3][n - 1]
}

fn mdl_id(n: usize) -> CriterionId {
    [CriterionId::Mdl1, CriterionId::Mdl2, CriterionId::Mdl3][n - 1]
}

/// Corrected AIC of order `n`; +∞ when N − k − 1 ≤ 0.
pub fn aicc(seq: &TokenSequence, n: usize) -> CriterionValue {
    let nll = neg_log_likelihood(seq, n);
    aic_value(aic_id(n), nll, complexity_aic(seq, n), seq.n_chars())
}

/// MDL of order `n`.
pub fn mdl(seq: &TokenSequence, lex: &Lexicon, n: usize) -> CriterionValue {
    let nll = neg_log_likelihood(seq, n);
    let cbl = codebook_length(lex, seq);
    mdl_value(mdl_id(n), nll, complexity_mdl(seq, n), seq.n_chars(), cbl)
}

/// All six criteria, sharing the likelihood and lexicon computations.
pub fn evaluate_all(seq: &TokenSequence, lex: &Lexicon) -> CriteriaSet {
    let n_chars = seq.n_chars();
    let cbl = codebook_length(lex, seq);
    let lexicon_k: u64 = seq.active_tokens().map(|t| 1 + seq.length(t) as u64).sum();
    let mut aic = Vec::with_capacity(3);
    let mut mdl = Vec::with_capacity(3);
    for n in 1..=3 {
        let nll = neg_log_likelihood(seq, n);
        let grams = match n {
            1 => seq.active_types() as u64,
            _ => seq.ngram_stats(n).distinct() as u64,
        };
        let model_k = if n == 1 { grams } else { 1 + 2 * grams };
        aic.push(aic_value(aic_id(n), nll, lexicon_k + model_k, n_chars));
        mdl.push(mdl_value(mdl_id(n), nll, grams, n_chars, cbl));
    }
    aic.extend(mdl);
    CriteriaSet(aic)
}

/// Criteria of a boundary set: words are read off the segmentation and
/// interned by surface.
pub fn evaluate_segmentation(corpus: &RawCorpus, seg: &Segmentation) -> CriteriaSet {
    let (seq, lex) = TokenSequence::from_segmentation(corpus, seg);
    evaluate_all(&seq, &lex)
}
