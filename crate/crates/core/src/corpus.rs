//! Gold-segmented corpus ingestion, hard boundaries and segmentation output.
//!
//! A [`RawCorpus`] is the unsegmented character stream split into blocks.
//! Blocks are utterances (one per input line) or, after
//! [`apply_hard_boundaries`], the spans between punctuation runs. Every
//! character that is not part of a block (line breaks, punctuation) is kept
//! verbatim as a separator so the original text can be restored.
//!
//! Boundary positions are global indices into the concatenation of all
//! blocks: position `p` sits between character `p - 1` and character `p`.
//! Block edges are implicit and never stored in a [`Segmentation`].

use std::collections::{HashMap, HashSet};
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_general_category::get_general_category;

use crate::error::{Error, Result};

pub type CharId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One utterance per line, space-separated words of phoneme symbols.
    Brent,
    /// UTF-8 passages, one per line, words separated by whitespace.
    Sighan,
}

impl Format {
    fn is_word_separator(self, c: char) -> bool {
        match self {
            Format::Brent => c == ' ' || c == '\t',
            Format::Sighan => c == ' ' || c == '\t' || c == '\u{3000}',
        }
    }
}

/// Bidirectional character table, one id per Unicode scalar value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CharMap {
    chars: Vec<char>,
    ids: HashMap<char, CharId>,
}

impl CharMap {
    pub fn intern(&mut self, c: char) -> CharId {
        if let Some(&id) = self.ids.get(&c) {
            return id;
        }
        let id = self.chars.len() as CharId;
        self.chars.push(c);
        self.ids.insert(c, id);
        id
    }

    pub fn id(&self, c: char) -> Option<CharId> {
        self.ids.get(&c).copied()
    }

    pub fn char(&self, id: CharId) -> char {
        self.chars[id as usize]
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// Non-segmentable text between blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SepPiece {
    /// Line terminators, possibly several (empty lines are folded in).
    Break(String),
    /// A maximal punctuation run removed by hard-boundary splitting.
    Punct(String),
}

impl SepPiece {
    fn text(&self) -> &str {
        match self {
            SepPiece::Break(s) | SepPiece::Punct(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawCorpus {
    charmap: CharMap,
    blocks: Vec<Vec<CharId>>,
    leading: Vec<SepPiece>,
    separators: Vec<Vec<SepPiece>>,
    offsets: Vec<usize>,
}

impl RawCorpus {
    pub fn charmap(&self) -> &CharMap {
        &self.charmap
    }

    pub fn blocks(&self) -> &[Vec<CharId>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[CharId] {
        &self.blocks[i]
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of segmentable characters, N.
    pub fn n_chars(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Global character range covered by block `i`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Number of inter-character positions that are not block edges.
    pub fn n_internal_positions(&self) -> usize {
        self.n_chars() - self.n_blocks()
    }

    pub fn separators(&self) -> &[Vec<SepPiece>] {
        &self.separators
    }

    pub fn leading(&self) -> &[SepPiece] {
        &self.leading
    }

    /// Characters of the global range as a string.
    pub fn surface(&self, range: Range<usize>) -> String {
        let mut out = String::with_capacity(range.len());
        let mut b = self.block_containing(range.start);
        let mut pos = range.start;
        while pos < range.end {
            while pos >= self.offsets[b + 1] {
                b += 1;
            }
            let local = pos - self.offsets[b];
            out.push(self.charmap.char(self.blocks[b][local]));
            pos += 1;
        }
        out
    }

    /// Index of the block containing global character `pos`.
    pub fn block_containing(&self, pos: usize) -> usize {
        match self.offsets.binary_search(&pos) {
            Ok(i) => i.min(self.blocks.len().saturating_sub(1)),
            Err(i) => i - 1,
        }
    }

    /// Whether `pos` is a block edge (including 0 and N).
    pub fn is_block_edge(&self, pos: usize) -> bool {
        self.offsets.binary_search(&pos).is_ok()
    }

    /// Reserializes the corpus with no word boundaries at all.
    pub fn to_raw_text(&self) -> String {
        let mut out = String::new();
        for piece in &self.leading {
            out.push_str(piece.text());
        }
        for (block, seps) in self.blocks.iter().zip(&self.separators) {
            out.extend(block.iter().map(|&c| self.charmap.char(c)));
            for piece in seps {
                out.push_str(piece.text());
            }
        }
        out
    }

    /// True when both corpora have the same character stream and block layout.
    pub fn same_stream(&self, other: &RawCorpus) -> bool {
        self.offsets == other.offsets
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| {
                a.iter()
                    .zip(b)
                    .all(|(&x, &y)| self.charmap.char(x) == other.charmap.char(y))
            })
    }

    /// Whole-corpus segmentation with a boundary between every pair of characters.
    pub fn all_boundaries(&self) -> Segmentation {
        let positions = (0..self.n_blocks())
            .flat_map(|b| {
                let r = self.block_range(b);
                (r.start as u32 + 1)..r.end as u32
            })
            .collect();
        Segmentation::from_sorted_unchecked(self.n_chars(), positions)
    }
}

#[derive(Default)]
struct CorpusBuilder {
    charmap: CharMap,
    blocks: Vec<Vec<CharId>>,
    leading: Vec<SepPiece>,
    separators: Vec<Vec<SepPiece>>,
    pending: Vec<SepPiece>,
}

impl CorpusBuilder {
    fn with_charmap(charmap: CharMap) -> Self {
        CorpusBuilder {
            charmap,
            ..Default::default()
        }
    }

    fn push_sep(&mut self, piece: SepPiece) {
        match (self.pending.last_mut(), piece) {
            (Some(SepPiece::Break(prev)), SepPiece::Break(s)) => prev.push_str(&s),
            (Some(SepPiece::Punct(prev)), SepPiece::Punct(s)) => prev.push_str(&s),
            (_, piece) => self.pending.push(piece),
        }
    }

    fn flush_pending(&mut self) {
        let pending = std::mem::take(&mut self.pending);
        let target = match self.separators.last_mut() {
            Some(seps) => seps,
            None => &mut self.leading,
        };
        for piece in pending {
            match (target.last_mut(), piece) {
                (Some(SepPiece::Break(prev)), SepPiece::Break(s)) => prev.push_str(&s),
                (Some(SepPiece::Punct(prev)), SepPiece::Punct(s)) => prev.push_str(&s),
                (_, piece) => target.push(piece),
            }
        }
    }

    fn push_block(&mut self, block: Vec<CharId>) {
        debug_assert!(!block.is_empty());
        self.flush_pending();
        self.blocks.push(block);
        self.separators.push(Vec::new());
    }

    fn finish(mut self) -> Result<RawCorpus> {
        self.flush_pending();
        if self.blocks.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut offsets = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &self.blocks {
            acc += b.len();
            offsets.push(acc);
        }
        Ok(RawCorpus {
            charmap: self.charmap,
            blocks: self.blocks,
            leading: self.leading,
            separators: self.separators,
            offsets,
        })
    }
}

/// Internal word boundaries over a corpus of `n_chars` characters.
///
/// Positions are sorted, unique and never include block edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segmentation {
    n_chars: usize,
    boundaries: Vec<u32>,
}

pub type GoldSegmentation = Segmentation;

impl Segmentation {
    /// Builds a segmentation, validating every position against the corpus.
    pub fn new(corpus: &RawCorpus, mut positions: Vec<u32>) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        for &p in &positions {
            let p = p as usize;
            if p == 0 || p >= corpus.n_chars() || corpus.is_block_edge(p) {
                return Err(Error::BoundaryOutOfRange { position: p });
            }
        }
        Ok(Segmentation {
            n_chars: corpus.n_chars(),
            boundaries: positions,
        })
    }

    /// No internal boundaries: every block is one word.
    pub fn empty(corpus: &RawCorpus) -> Self {
        Segmentation {
            n_chars: corpus.n_chars(),
            boundaries: Vec::new(),
        }
    }

    pub(crate) fn from_sorted_unchecked(n_chars: usize, boundaries: Vec<u32>) -> Self {
        debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        Segmentation {
            n_chars,
            boundaries,
        }
    }

    pub fn n_chars(&self) -> usize {
        self.n_chars
    }

    pub fn positions(&self) -> &[u32] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.boundaries.binary_search(&(pos as u32)).is_ok()
    }

    /// Word spans (global character ranges) in corpus order.
    pub fn word_spans(&self, corpus: &RawCorpus) -> Vec<Range<usize>> {
        let mut spans = Vec::with_capacity(self.boundaries.len() + corpus.n_blocks());
        let mut cursor = self.boundaries.iter().peekable();
        for b in 0..corpus.n_blocks() {
            let range = corpus.block_range(b);
            let mut start = range.start;
            while let Some(&&p) = cursor.peek() {
                let p = p as usize;
                if p >= range.end {
                    break;
                }
                spans.push(start..p);
                start = p;
                cursor.next();
            }
            spans.push(start..range.end);
        }
        spans
    }

    /// Word surfaces in corpus order.
    pub fn words(&self, corpus: &RawCorpus) -> Vec<String> {
        self.word_spans(corpus)
            .into_iter()
            .map(|r| corpus.surface(r))
            .collect()
    }
}

/// Characters that receive hard boundaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum PunctSet {
    /// Unicode general categories P*.
    #[default]
    Unicode,
    Explicit(HashSet<char>),
}

impl PunctSet {
    pub fn from_chars(chars: &str) -> Self {
        PunctSet::Explicit(chars.chars().collect())
    }

    pub fn contains(&self, c: char) -> bool {
        match self {
            PunctSet::Unicode => get_general_category(c).abbreviation().starts_with('P'),
            PunctSet::Explicit(set) => set.contains(&c),
        }
    }
}

/// Reads a gold-segmented file.
pub fn load_gold(path: impl AsRef<Path>, format: Format) -> Result<(RawCorpus, Segmentation)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_gold(&bytes, format).map_err(|e| match e {
        Error::Decode { line, .. } => Error::Decode {
            path: path.to_path_buf(),
            line,
        },
        other => other,
    })
}

/// Parses gold-segmented text. Decode errors carry a 1-based line number.
pub fn parse_gold(bytes: &[u8], format: Format) -> Result<(RawCorpus, Segmentation)> {
    if bytes.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut builder = CorpusBuilder::default();
    let mut boundaries = Vec::new();
    let mut n_chars = 0usize;

    for (lineno, raw_line) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(raw_line).map_err(|_| Error::Decode {
            path: Default::default(),
            line: lineno + 1,
        })?;
        let (content, terminator) = split_terminator(line);

        let mut block = Vec::new();
        let mut pending_boundary = false;
        for c in content.chars() {
            if format.is_word_separator(c) {
                pending_boundary = true;
                continue;
            }
            if pending_boundary && !block.is_empty() {
                boundaries.push((n_chars + block.len()) as u32);
            }
            pending_boundary = false;
            block.push(builder.charmap.intern(c));
        }
        if !block.is_empty() {
            n_chars += block.len();
            builder.push_block(block);
        }
        if !terminator.is_empty() {
            builder.push_sep(SepPiece::Break(terminator.to_string()));
        }
    }

    let corpus = builder.finish()?;
    let seg = Segmentation::from_sorted_unchecked(corpus.n_chars(), boundaries);
    Ok((corpus, seg))
}

fn split_terminator(line: &str) -> (&str, &str) {
    if let Some(s) = line.strip_suffix("\r\n") {
        (s, &line[s.len()..])
    } else if let Some(s) = line.strip_suffix('\n') {
        (s, &line[s.len()..])
    } else {
        (line, "")
    }
}

/// Splits blocks at punctuation runs; the runs become separators.
pub fn apply_hard_boundaries(corpus: &RawCorpus, punct: &PunctSet) -> RawCorpus {
    split_hard(corpus, None, punct).0
}

/// [`apply_hard_boundaries`] that also projects a segmentation onto the new stream.
pub fn apply_hard_boundaries_with_gold(
    corpus: &RawCorpus,
    gold: &Segmentation,
    punct: &PunctSet,
) -> (RawCorpus, Segmentation) {
    let (c, g) = split_hard(corpus, Some(gold), punct);
    (c, g.expect("gold projected"))
}

fn split_hard(
    corpus: &RawCorpus,
    gold: Option<&Segmentation>,
    punct: &PunctSet,
) -> (RawCorpus, Option<Segmentation>) {
    let mut builder = CorpusBuilder::with_charmap(corpus.charmap.clone());
    let mut projected = Vec::new();
    let mut new_len = 0usize;

    for piece in &corpus.leading {
        builder.push_sep(piece.clone());
    }
    for (b, block) in corpus.blocks.iter().enumerate() {
        let base = corpus.offsets[b];
        let mut current: Vec<CharId> = Vec::new();
        let mut run = String::new();
        for (i, &cid) in block.iter().enumerate() {
            let c = corpus.charmap.char(cid);
            if punct.contains(c) {
                if !current.is_empty() {
                    new_len += current.len();
                    builder.push_block(std::mem::take(&mut current));
                }
                run.push(c);
                continue;
            }
            if !run.is_empty() {
                builder.push_sep(SepPiece::Punct(std::mem::take(&mut run)));
            }
            if let Some(g) = gold {
                if !current.is_empty() && g.contains(base + i) {
                    projected.push((new_len + current.len()) as u32);
                }
            }
            current.push(cid);
        }
        if !current.is_empty() {
            new_len += current.len();
            builder.push_block(current);
        }
        if !run.is_empty() {
            builder.push_sep(SepPiece::Punct(run));
        }
        for piece in &corpus.separators[b] {
            builder.push_sep(piece.clone());
        }
    }

    if builder.blocks.is_empty() {
        // Nothing segmentable survives; keep the original so callers still
        // have a valid corpus to report on.
        return (corpus.clone(), gold.cloned());
    }
    let new_corpus = builder.finish().expect("non-empty");
    let seg = gold.map(|_| Segmentation::from_sorted_unchecked(new_corpus.n_chars(), projected));
    (new_corpus, seg)
}

/// Renders the corpus with one ASCII space at every boundary.
///
/// Punctuation separators sitting on the same line as a block are emitted as
/// words of their own.
pub fn render_segmentation(corpus: &RawCorpus, seg: &Segmentation) -> String {
    let mut out = String::with_capacity(corpus.n_chars() * 2);
    let mut dirty = false;
    let emit = |out: &mut String, pieces: &[SepPiece], dirty: &mut bool| {
        for piece in pieces {
            match piece {
                SepPiece::Break(s) => {
                    out.push_str(s);
                    *dirty = false;
                }
                SepPiece::Punct(s) => {
                    if *dirty {
                        out.push(' ');
                    }
                    out.push_str(s);
                    *dirty = true;
                }
            }
        }
    };

    emit(&mut out, &corpus.leading, &mut dirty);
    let mut cursor = seg.boundaries.iter().peekable();
    for (b, block) in corpus.blocks.iter().enumerate() {
        if dirty {
            out.push(' ');
        }
        let base = corpus.offsets[b];
        for (i, &c) in block.iter().enumerate() {
            if i > 0 && cursor.peek().is_some_and(|&&p| p as usize == base + i) {
                out.push(' ');
                cursor.next();
            }
            out.push(corpus.charmap.char(c));
        }
        dirty = true;
        emit(&mut out, &corpus.separators[b], &mut dirty);
    }
    out
}

pub fn write_segmentation(path: impl AsRef<Path>, corpus: &RawCorpus, seg: &Segmentation) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_segmentation(corpus, seg)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct BoundarySidecar {
    n_chars: usize,
    n_blocks: usize,
    block_edges: Vec<usize>,
    boundaries: Vec<u32>,
}

/// JSON sidecar with the global boundary positions.
pub fn write_boundary_sidecar(path: impl AsRef<Path>, corpus: &RawCorpus, seg: &Segmentation) -> Result<()> {
    let path = path.as_ref();
    let sidecar = BoundarySidecar {
        n_chars: corpus.n_chars(),
        n_blocks: corpus.n_blocks(),
        block_edges: corpus.offsets.clone(),
        boundaries: seg.boundaries.clone(),
    };
    let json = serde_json::to_string(&sidecar)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Loads a segmented file and checks it covers the same stream as `corpus`.
pub fn load_segmentation_for(
    path: impl AsRef<Path>,
    format: Format,
    punct: Option<&PunctSet>,
    corpus: &RawCorpus,
) -> Result<Segmentation> {
    let path = path.as_ref();
    let (c, s) = load_gold(path, format)?;
    let (c, s) = match punct {
        Some(p) => apply_hard_boundaries_with_gold(&c, &s, p),
        None => (c, s),
    };
    if !c.same_stream(corpus) {
        return Err(Error::CorpusMismatch(format!(
            "{} does not contain the same character stream",
            path.display()
        )));
    }
    Ok(s)
}
