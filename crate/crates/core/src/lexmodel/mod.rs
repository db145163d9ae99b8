//! The evolving token sequence, its lexicon and n-gram statistics.
//!
//! Identical blocks are stored once with a multiplicity (`weight`). Every
//! count exposed here is multiplicity-weighted, so the numbers are the same
//! as if each block had been stored separately.

mod candidates;

use std::collections::HashMap;

use serde::Serialize;

use crate::corpus::{RawCorpus, Segmentation};

pub use candidates::{CandId, CandidateIndex};

pub type TokenId = u32;

/// Longest n-gram the learner and the criteria ever look at.
pub const MAX_GRAM: usize = 4;

/// A short run of token ids, usable as a hash key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gram {
    len: u8,
    ids: [TokenId; MAX_GRAM],
}

impl Gram {
    pub fn new(ids: &[TokenId]) -> Self {
        assert!(
            (1..=MAX_GRAM).contains(&ids.len()),
            "gram length {} outside 1..={MAX_GRAM}",
            ids.len()
        );
        let mut buf = [0; MAX_GRAM];
        buf[..ids.len()].copy_from_slice(ids);
        Gram {
            len: ids.len() as u8,
            ids: buf,
        }
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.ids[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All tokens except the last.
    pub fn context(&self) -> Gram {
        Gram::new(&self.as_slice()[..self.len() - 1])
    }
}

impl std::fmt::Debug for Gram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LexEntry {
    /// Token ids the entry was composed from; empty for base characters.
    pub components: Vec<TokenId>,
    pub surface: String,
}

#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    creation_order: Vec<TokenId>,
}

impl Lexicon {
    fn from_corpus(corpus: &RawCorpus) -> Self {
        let cm = corpus.charmap();
        let entries = (0..cm.len())
            .map(|i| LexEntry {
                components: Vec::new(),
                surface: cm.char(i as u32).to_string(),
            })
            .collect();
        Lexicon {
            entries,
            creation_order: Vec::new(),
        }
    }

    /// Adds a composed entry and returns its fresh id.
    pub fn add(&mut self, components: &[TokenId]) -> TokenId {
        let surface = components
            .iter()
            .map(|&t| self.entries[t as usize].surface.as_str())
            .collect();
        let id = self.entries.len() as TokenId;
        self.entries.push(LexEntry {
            components: components.to_vec(),
            surface,
        });
        self.creation_order.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: TokenId) -> &LexEntry {
        &self.entries[id as usize]
    }

    pub fn surface(&self, id: TokenId) -> &str {
        &self.entries[id as usize].surface
    }

    pub fn is_base(&self, id: TokenId) -> bool {
        self.entries[id as usize].components.is_empty()
    }

    pub fn creation_order(&self) -> &[TokenId] {
        &self.creation_order
    }

    /// Recursively expands a token into base character tokens.
    pub fn expand(&self, id: TokenId, out: &mut Vec<TokenId>) {
        let entry = &self.entries[id as usize];
        if entry.components.is_empty() {
            out.push(id);
        } else {
            for &c in &entry.components {
                self.expand(c, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountChange {
    pub token: TokenId,
    pub old: u64,
    pub new: u64,
}

/// What a single compression changed.
#[derive(Clone, Debug)]
pub struct CompressionDelta {
    pub token: TokenId,
    pub gram: Gram,
    /// Weighted number of replaced occurrences.
    pub occurrences: u64,
    pub old_total: u64,
    pub new_total: u64,
    pub count_changes: Vec<CountChange>,
    /// Unique blocks that were rewritten, with their previous contents.
    pub changed_blocks: Vec<(u32, Vec<TokenId>)>,
}

/// Maximum-likelihood n-gram counts inside blocks.
#[derive(Clone, Debug, Default)]
pub struct NgramStats {
    pub n: usize,
    pub counts: HashMap<Gram, u64>,
}

impl NgramStats {
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, ids: &[TokenId]) -> u64 {
        self.counts.get(&Gram::new(ids)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Clone, Debug)]
pub struct TokenSequence {
    blocks: Vec<Vec<TokenId>>,
    weights: Vec<u64>,
    block_of: Vec<u32>,
    counts: Vec<u64>,
    lengths: Vec<u32>,
    total: u64,
    n_chars: u64,
    active_types: usize,
}

/// One-token-per-character sequence and the base lexicon.
pub fn init_from_corpus(corpus: &RawCorpus) -> (TokenSequence, Lexicon) {
    let lex = Lexicon::from_corpus(corpus);
    let lengths = vec![1; lex.len()];
    let seq = TokenSequence::from_blocks(corpus.blocks().iter().cloned(), lengths);
    (seq, lex)
}

impl TokenSequence {
    fn from_blocks(blocks: impl Iterator<Item = Vec<TokenId>>, lengths: Vec<u32>) -> Self {
        let mut unique: HashMap<Vec<TokenId>, u32> = HashMap::new();
        let mut stored = Vec::new();
        let mut weights = Vec::new();
        let mut block_of = Vec::new();
        for block in blocks {
            let next = stored.len() as u32;
            let id = *unique.entry(block.clone()).or_insert_with(|| {
                stored.push(block);
                weights.push(0);
                next
            });
            weights[id as usize] += 1;
            block_of.push(id);
        }
        let mut seq = TokenSequence {
            blocks: stored,
            weights,
            block_of,
            counts: vec![0; lengths.len()],
            lengths,
            total: 0,
            n_chars: 0,
            active_types: 0,
        };
        seq.counts = seq.recount();
        seq.total = seq.counts.iter().sum();
        seq.n_chars = seq.char_mass();
        seq.active_types = seq.counts.iter().filter(|&&c| c > 0).count();
        seq
    }

    /// Word-level sequence read off a boundary set; words are interned by
    /// surface, single-character words reuse the base character ids.
    pub fn from_segmentation(corpus: &RawCorpus, seg: &Segmentation) -> (TokenSequence, Lexicon) {
        let mut lex = Lexicon::from_corpus(corpus);
        let mut ids: HashMap<Vec<TokenId>, TokenId> = HashMap::new();
        let mut lengths: Vec<u32> = vec![1; lex.len()];
        let spans = seg.word_spans(corpus);
        let mut blocks: Vec<Vec<TokenId>> = vec![Vec::new(); corpus.n_blocks()];
        let mut b = 0;
        for span in spans {
            while span.start >= corpus.block_range(b).end {
                b += 1;
            }
            let base = corpus.block_range(b).start;
            let chars = &corpus.block(b)[span.start - base..span.end - base];
            let id = if chars.len() == 1 {
                chars[0]
            } else {
                *ids.entry(chars.to_vec()).or_insert_with(|| {
                    lengths.push(chars.len() as u32);
                    lex.add(chars)
                })
            };
            blocks[b].push(id);
        }
        (TokenSequence::from_blocks(blocks.into_iter(), lengths), lex)
    }

    /// Merges token ids that share a surface string.
    pub fn relabel_by_surface(&self, lex: &Lexicon) -> (TokenSequence, Lexicon) {
        let mut canon: HashMap<&str, TokenId> = HashMap::new();
        let mut map = vec![0 as TokenId; lex.len()];
        let mut out = Lexicon::default();
        let mut lengths = Vec::new();
        for id in 0..lex.len() as TokenId {
            let surface = lex.surface(id);
            let next = out.entries.len() as TokenId;
            let c = *canon.entry(surface).or_insert_with(|| {
                out.entries.push(lex.entry(id).clone());
                lengths.push(self.lengths[id as usize]);
                next
            });
            map[id as usize] = c;
        }
        // Components still refer to the old ids; only surfaces matter downstream.
        let blocks = self
            .block_of
            .iter()
            .map(|&u| self.blocks[u as usize].iter().map(|&t| map[t as usize]).collect());
        (TokenSequence::from_blocks(blocks, lengths), out)
    }

    pub fn count(&self, t: TokenId) -> u64 {
        self.counts[t as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn length(&self, t: TokenId) -> u32 {
        self.lengths[t as usize]
    }

    /// |T|, the number of token occurrences.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// N, the number of characters; invariant under compression.
    pub fn n_chars(&self) -> u64 {
        self.n_chars
    }

    /// Number of token types with a non-zero count.
    pub fn active_types(&self) -> usize {
        self.active_types
    }

    pub fn active_tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, _)| t as TokenId)
    }

    pub fn n_unique_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn unique_block(&self, u: u32) -> &[TokenId] {
        &self.blocks[u as usize]
    }

    pub fn weight(&self, u: u32) -> u64 {
        self.weights[u as usize]
    }

    pub fn n_blocks(&self) -> usize {
        self.block_of.len()
    }

    /// Tokens of original block `b`.
    pub fn block(&self, b: usize) -> &[TokenId] {
        &self.blocks[self.block_of[b] as usize]
    }

    /// Unique blocks with their multiplicity.
    pub fn weighted_blocks(&self) -> impl Iterator<Item = (&[TokenId], u64)> + '_ {
        self.blocks
            .iter()
            .zip(&self.weights)
            .map(|(b, &w)| (b.as_slice(), w))
    }

    /// Greedy left-to-right non-overlapping occurrence count.
    pub fn count_occurrences(&self, gram: &[TokenId]) -> u64 {
        self.weighted_blocks()
            .map(|(b, w)| w * greedy_count(b, gram))
            .sum()
    }

    /// Replaces every greedy occurrence of `gram` with a fresh token.
    pub fn apply_compression(&mut self, lex: &mut Lexicon, gram: &[TokenId]) -> CompressionDelta {
        let all: Vec<u32> = (0..self.blocks.len() as u32).collect();
        self.apply_compression_in(lex, gram, &all)
    }

    /// [`Self::apply_compression`] restricted to the given unique blocks,
    /// which must include every block where `gram` occurs.
    pub fn apply_compression_in(
        &mut self,
        lex: &mut Lexicon,
        gram: &[TokenId],
        blocks: &[u32],
    ) -> CompressionDelta {
        let token = lex.add(gram);
        let length = gram.iter().map(|&t| self.lengths[t as usize]).sum();
        self.lengths.push(length);
        self.counts.push(0);
        debug_assert_eq!(self.lengths.len(), lex.len());

        let mut occurrences = 0;
        let mut changed_blocks = Vec::new();
        for &u in blocks {
            let old = &self.blocks[u as usize];
            let (new, hits) = replace_greedy(old, gram, token);
            if hits == 0 {
                continue;
            }
            occurrences += hits * self.weights[u as usize];
            let old = std::mem::replace(&mut self.blocks[u as usize], new);
            changed_blocks.push((u, old));
        }

        let mut count_changes = Vec::with_capacity(gram.len() + 1);
        let mut seen: Vec<TokenId> = Vec::with_capacity(gram.len());
        for &t in gram {
            if seen.contains(&t) {
                continue;
            }
            seen.push(t);
            let mult = gram.iter().filter(|&&x| x == t).count() as u64;
            let old = self.counts[t as usize];
            let new = old - mult * occurrences;
            self.counts[t as usize] = new;
            if new == 0 && old > 0 {
                self.active_types -= 1;
            }
            count_changes.push(CountChange { token: t, old, new });
        }
        self.counts[token as usize] = occurrences;
        if occurrences > 0 {
            self.active_types += 1;
        }
        count_changes.push(CountChange {
            token,
            old: 0,
            new: occurrences,
        });

        let old_total = self.total;
        self.total -= occurrences * (gram.len() as u64 - 1);
        CompressionDelta {
            token,
            gram: Gram::new(gram),
            occurrences,
            old_total,
            new_total: self.total,
            count_changes,
            changed_blocks,
        }
    }

    pub fn ngram_stats(&self, n: usize) -> NgramStats {
        let mut counts = HashMap::new();
        for (b, w) in self.weighted_blocks() {
            for g in b.windows(n) {
                *counts.entry(Gram::new(g)).or_insert(0) += w;
            }
        }
        NgramStats { n, counts }
    }

    /// Counts recomputed from the block contents.
    pub fn recount(&self) -> Vec<u64> {
        let mut counts = vec![0; self.lengths.len()];
        for (b, w) in self.weighted_blocks() {
            for &t in b {
                counts[t as usize] += w;
            }
        }
        counts
    }

    /// Σ count(t)·|t|; equals N at all times.
    pub fn char_mass(&self) -> u64 {
        self.counts
            .iter()
            .zip(&self.lengths)
            .map(|(&c, &l)| c * l as u64)
            .sum()
    }

    /// Base-character expansion of every original block.
    pub fn expand(&self, lex: &Lexicon) -> Vec<Vec<TokenId>> {
        (0..self.n_blocks())
            .map(|b| {
                let mut out = Vec::new();
                for &t in self.block(b) {
                    lex.expand(t, &mut out);
                }
                out
            })
            .collect()
    }

    /// Positions between adjacent tokens, as a segmentation of `corpus`.
    pub fn segmentation(&self, corpus: &RawCorpus) -> Segmentation {
        let mut positions = Vec::with_capacity(self.total as usize);
        for b in 0..self.n_blocks() {
            let mut pos = corpus.block_range(b).start as u32;
            let tokens = self.block(b);
            for &t in &tokens[..tokens.len() - 1] {
                pos += self.lengths[t as usize];
                positions.push(pos);
            }
        }
        Segmentation::from_sorted_unchecked(corpus.n_chars(), positions)
    }
}

pub(crate) fn greedy_count(block: &[TokenId], gram: &[TokenId]) -> u64 {
    let n = gram.len();
    if block.len() < n {
        return 0;
    }
    let mut i = 0;
    let mut hits = 0;
    while i + n <= block.len() {
        if &block[i..i + n] == gram {
            hits += 1;
            i += n;
        } else {
            i += 1;
        }
    }
    hits
}

fn replace_greedy(block: &[TokenId], gram: &[TokenId], token: TokenId) -> (Vec<TokenId>, u64) {
    let n = gram.len();
    let mut out = Vec::with_capacity(block.len());
    let mut hits = 0;
    let mut i = 0;
    while i < block.len() {
        if i + n <= block.len() && &block[i..i + n] == gram {
            out.push(token);
            hits += 1;
            i += n;
        } else {
            out.push(block[i]);
            i += 1;
        }
    }
    (out, hits)
}
