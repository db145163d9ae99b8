//! Incrementally maintained table of compression candidates.
//!
//! Each candidate is a within-block n-gram (2 ≤ n ≤ n_max) with its greedy
//! non-overlapping occurrence count, the set of unique blocks containing it
//! and its earliest occurrence. After a compression only the rewritten
//! blocks are re-scanned.

use std::collections::{BTreeSet, HashMap};

use super::{CompressionDelta, Gram, TokenId, TokenSequence};

pub type CandId = u32;

/// Earliest occurrence as (unique block, character offset in block).
///
/// Unique blocks are numbered in order of first appearance, so this orders
/// candidates by their first global position.
pub type FirstPos = (u32, u32);

#[derive(Default)]
struct BlockScan {
    /// gram -> (greedy count, next free token index, first token index)
    grams: HashMap<Gram, (u32, u32, u32)>,
}

impl BlockScan {
    fn scan(&mut self, block: &[TokenId], n_max: usize) {
        self.grams.clear();
        for n in 2..=n_max.min(block.len()) {
            for i in 0..=block.len() - n {
                let g = Gram::new(&block[i..i + n]);
                let slot = self.grams.entry(g).or_insert((0, 0, i as u32));
                if i as u32 >= slot.1 {
                    slot.0 += 1;
                    slot.1 = (i + n) as u32;
                }
            }
        }
    }
}

pub struct CandidateIndex {
    n_max: usize,
    grams: Vec<Gram>,
    ids: HashMap<Gram, CandId>,
    counts: Vec<u64>,
    blocks: Vec<BTreeSet<u32>>,
    first: Vec<FirstPos>,
    by_token: Vec<Vec<CandId>>,
    old_scan: BlockScan,
    new_scan: BlockScan,
}

impl CandidateIndex {
    pub fn build(seq: &TokenSequence, n_max: usize) -> Self {
        assert!((2..=super::MAX_GRAM).contains(&n_max), "n_max must be in 2..=4");
        let mut index = CandidateIndex {
            n_max,
            grams: Vec::new(),
            ids: HashMap::new(),
            counts: Vec::new(),
            blocks: Vec::new(),
            first: Vec::new(),
            by_token: vec![Vec::new(); seq.lengths.len()],
            old_scan: BlockScan::default(),
            new_scan: BlockScan::default(),
        };
        let mut scan = BlockScan::default();
        for u in 0..seq.n_unique_blocks() as u32 {
            let block = seq.unique_block(u);
            let w = seq.weight(u);
            scan.scan(block, n_max);
            for (&g, &(count, _, first_idx)) in &scan.grams {
                let c = index.intern(g);
                if index.counts[c as usize] == 0 {
                    index.first[c as usize] = (u, char_offset(seq, block, first_idx as usize));
                }
                index.counts[c as usize] += w * count as u64;
                index.blocks[c as usize].insert(u);
            }
        }
        index
    }

    fn intern(&mut self, g: Gram) -> CandId {
        if let Some(&c) = self.ids.get(&g) {
            return c;
        }
        let c = self.grams.len() as CandId;
        self.grams.push(g);
        self.ids.insert(g, c);
        self.counts.push(0);
        self.blocks.push(BTreeSet::new());
        self.first.push((u32::MAX, u32::MAX));
        self.list(c);
        c
    }

    fn list(&mut self, c: CandId) {
        let g = self.grams[c as usize];
        let ids = g.as_slice();
        for (i, &t) in ids.iter().enumerate() {
            if ids[..i].contains(&t) {
                continue;
            }
            let t = t as usize;
            if t >= self.by_token.len() {
                self.by_token.resize(t + 1, Vec::new());
            }
            self.by_token[t].push(c);
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn id(&self, gram: &Gram) -> Option<CandId> {
        self.ids.get(gram).copied()
    }

    pub fn gram(&self, c: CandId) -> Gram {
        self.grams[c as usize]
    }

    pub fn count(&self, c: CandId) -> u64 {
        self.counts[c as usize]
    }

    pub fn first(&self, c: CandId) -> FirstPos {
        self.first[c as usize]
    }

    pub fn blocks(&self, c: CandId) -> impl Iterator<Item = u32> + '_ {
        self.blocks[c as usize].iter().copied()
    }

    /// Candidates with a non-zero count.
    pub fn live(&self) -> impl Iterator<Item = CandId> + '_ {
        (0..self.grams.len() as CandId).filter(|&c| self.counts[c as usize] > 0)
    }

    /// Live candidates that contain token `t`; prunes dead entries.
    ///
    /// A dead candidate never comes back: rewriting a block only removes
    /// adjacencies between pre-existing tokens, and the greedy count of a
    /// subset of occurrences cannot exceed that of the full set.
    pub fn live_with_token(&mut self, t: TokenId) -> Vec<CandId> {
        let Some(list) = self.by_token.get_mut(t as usize) else {
            return Vec::new();
        };
        let counts = &self.counts;
        list.retain(|&c| counts[c as usize] > 0);
        list.clone()
    }

    /// Applies the block rewrites of a compression. Returns the candidates
    /// whose count, block set or first occurrence may have changed.
    pub fn update(&mut self, seq: &TokenSequence, delta: &CompressionDelta) -> Vec<CandId> {
        let mut touched = Vec::new();
        let mut old_scan = std::mem::take(&mut self.old_scan);
        let mut new_scan = std::mem::take(&mut self.new_scan);
        for (u, old_tokens) in &delta.changed_blocks {
            let u = *u;
            let w = seq.weight(u);
            old_scan.scan(old_tokens, self.n_max);
            new_scan.scan(seq.unique_block(u), self.n_max);
            for (g, &(old, ..)) in &old_scan.grams {
                let new = new_scan.grams.get(g).map_or(0, |v| v.0);
                if new == old {
                    continue;
                }
                debug_assert!(new < old, "greedy count grew for {g:?}");
                let c = self.ids[g];
                self.counts[c as usize] -= w * (old - new) as u64;
                if new == 0 {
                    self.blocks[c as usize].remove(&u);
                }
                touched.push(c);
            }
            for (&g, &(new, ..)) in &new_scan.grams {
                if old_scan.grams.contains_key(&g) {
                    continue;
                }
                let c = self.intern(g);
                debug_assert!(
                    g.as_slice().contains(&delta.token) || self.counts[c as usize] > 0,
                    "candidate {g:?} revived"
                );
                self.counts[c as usize] += w * new as u64;
                self.blocks[c as usize].insert(u);
                touched.push(c);
            }
        }
        self.old_scan = old_scan;
        self.new_scan = new_scan;

        touched.sort_unstable();
        touched.dedup();
        for &c in &touched {
            if self.counts[c as usize] == 0 {
                continue;
            }
            let u = *self.blocks[c as usize].first().expect("live candidate has a block");
            let g = self.grams[c as usize];
            self.first[c as usize] = (u, first_offset(seq, u, g.as_slice()));
        }
        touched
    }
}

fn char_offset(seq: &TokenSequence, block: &[TokenId], token_idx: usize) -> u32 {
    block[..token_idx].iter().map(|&t| seq.length(t)).sum()
}

fn first_offset(seq: &TokenSequence, u: u32, gram: &[TokenId]) -> u32 {
    let block = seq.unique_block(u);
    let n = gram.len();
    let i = (0..=block.len() - n)
        .find(|&i| &block[i..i + n] == gram)
        .expect("gram occurs in its block");
    char_offset(seq, block, i)
}
