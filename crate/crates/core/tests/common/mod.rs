#![allow(dead_code)]

use std::collections::HashMap;

use incseg::corpus::{parse_gold, Format, RawCorpus, Segmentation};
use incseg::learner::{PenaltyKind, PenaltyParams};
use incseg::lexmodel::{Lexicon, TokenSequence};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gold-segmented text drawn from a Zipf-weighted random lexicon.
pub fn zipf_text(rng: &mut impl Rng, alphabet: usize, max_chars: usize) -> String {
    let letters: Vec<char> = "abcdefghijklmnopqrstuvwxyz".chars().take(alphabet.clamp(1, 26)).collect();
    let n_words = rng.gen_range(3..40);
    let lexicon: Vec<String> = (0..n_words)
        .map(|_| {
            let len = rng.gen_range(1..=5);
            (0..len).map(|_| *letters.choose(rng).unwrap()).collect()
        })
        .collect();
    let weights: Vec<f64> = (1..=n_words).map(|r| 1.0 / r as f64).collect();
    let dist = rand::distributions::WeightedIndex::new(&weights).unwrap();
    let target = rng.gen_range(max_chars / 4..=max_chars).max(1);
    let mut lines = Vec::new();
    let mut chars = 0;
    while chars < target {
        let mut line = Vec::new();
        for _ in 0..rng.gen_range(1..=6) {
            let w = &lexicon[rng.sample(&dist)];
            if chars + w.len() > max_chars {
                break;
            }
            chars += w.len();
            line.push(w.clone());
        }
        if line.is_empty() {
            break;
        }
        lines.push(line.join(" "));
    }
    if lines.is_empty() {
        lines.push(letters[0].to_string());
    }
    lines.join("\n") + "\n"
}

pub fn corpus(text: &str) -> (RawCorpus, Segmentation) {
    parse_gold(text.as_bytes(), Format::Brent).unwrap()
}

pub fn random_params(rng: &mut impl Rng) -> PenaltyParams {
    let kind = if rng.gen_bool(0.5) {
        PenaltyKind::Xlogx
    } else {
        PenaltyKind::Xsquared
    };
    // Zero penalties a third of the time; otherwise modest values.
    if rng.gen_bool(0.33) {
        PenaltyParams::new(0.0, 0.0, kind).unwrap()
    } else {
        let alpha = rng.gen_range(0..=30) as f64 / 10.0;
        let beta = rng.gen_range(0..=10) as f64 / 20.0;
        PenaltyParams::new(alpha, beta, kind).unwrap()
    }
}

fn g(kind: PenaltyKind, x: f64) -> f64 {
    match kind {
        PenaltyKind::Xlogx => x * x.ln(),
        PenaltyKind::Xsquared => x * x,
    }
}

/// Objective recomputed from surfaces and block contents alone: counts
/// come from the blocks, lengths from the character count of each surface.
pub fn oracle_objective(seq: &TokenSequence, lex: &Lexicon, p: &PenaltyParams, n_chars: usize) -> f64 {
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for b in 0..seq.n_blocks() {
        for &t in seq.block(b) {
            *counts.entry(t).or_default() += 1.0;
        }
    }
    let total: f64 = counts.values().sum();
    let mut ids: Vec<_> = counts.keys().copied().collect();
    ids.sort_unstable();
    let mut nll = 0.0;
    let mut pen = 0.0;
    for t in ids {
        let c = counts[&t];
        nll -= c * (c / total).ln();
        let len = lex.surface(t).chars().count() as f64;
        pen += c * (-p.alpha + p.beta * g(p.kind, len));
    }
    nll + 0.5 * counts.len() as f64 * (n_chars as f64).ln() + pen
}

/// Σ count(t)·|t| with counts taken from the blocks.
pub fn oracle_char_mass(seq: &TokenSequence, lex: &Lexicon) -> usize {
    (0..seq.n_blocks())
        .flat_map(|b| seq.block(b).iter())
        .map(|&t| lex.surface(t).chars().count())
        .sum()
}

/// Unigram MDL and corrected AIC of a list of words over N characters.
pub fn oracle_unigram_criteria(words: &[String], n_chars: usize) -> (f64, f64) {
    let mut counts: HashMap<&str, f64> = HashMap::new();
    for w in words {
        *counts.entry(w.as_str()).or_default() += 1.0;
    }
    let total = words.len() as f64;
    let mut types: Vec<&str> = counts.keys().copied().collect();
    types.sort_unstable();
    let nll: f64 = types.iter().map(|t| -counts[t] * (counts[t] / total).ln()).sum();

    let n = n_chars as f64;
    let k_aic: usize = types.iter().map(|t| 1 + t.chars().count()).sum::<usize>() + types.len();
    let k = k_aic as f64;
    let aic = if n - k - 1.0 <= 0.0 {
        f64::INFINITY
    } else {
        nll + n * k / (n - k - 1.0)
    };

    let mut symbols: HashMap<Option<char>, f64> = HashMap::new();
    for t in &types {
        for c in t.chars() {
            *symbols.entry(Some(c)).or_default() += 1.0;
        }
        *symbols.entry(None).or_default() += 1.0;
    }
    let m: f64 = symbols.values().sum();
    let cbl: f64 = symbols.values().map(|&c| -c * (c / m).ln()).sum();
    let mdl = nll + 0.5 * types.len() as f64 * n.ln() + cbl;
    (mdl, aic)
}

/// Words of a single-block string under a boundary mask; bit i set means a
/// boundary after character i.
pub fn words_from_mask(chars: &[char], mask: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        if i + 1 < chars.len() && mask >> i & 1 == 1 {
            out.push(std::mem::take(&mut cur));
        }
    }
    out.push(cur);
    out
}

/// Naive fractional ranks: 1 + (#smaller) + (#equal − 1)/2.
pub fn naive_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Spearman: Pearson's r of the naive ranks.
pub fn naive_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (rx, ry) = (naive_ranks(xs), naive_ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}
