//! Parameter search over (α, β): grid runs with a resumable ledger,
//! family-minimum and top-k selection, heat maps and the two-stage search.
//!
//! A ledger directory holds `grid.json` (what the grid was run on),
//! `ledger.jsonl` (one finished cell per line) and `boundaries/<digest>.bin`
//! (final boundary sets, shared between cells that agree).

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{RawCorpus, Segmentation};
use crate::criteria::{evaluate_segmentation, CriteriaSet, CriterionId};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::learner::{run_observed, LearnerOptions, PenaltyKind, PenaltyParams, StopReason};

/// `lo:hi:step`, inclusive at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range1D {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range1D {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::InvalidRange(format!("{lo}:{hi}:{step} is not finite")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidRange(format!("step {step} must be > 0")));
        }
        if lo > hi {
            return Err(Error::InvalidRange(format!("lo {lo} > hi {hi}")));
        }
        Ok(Range1D { lo, hi, step })
    }

    pub fn point(v: f64) -> Self {
        Range1D {
            lo: v,
            hi: v,
            step: 1.0,
        }
    }

    /// Grid values, snapped to 1e-9 so that 0.1-steps print cleanly.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

impl FromStr for Range1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidRange(format!("'{s}': '{p}' is not a number")))
        };
        match parts.as_slice() {
            [v] => Ok(Range1D::point(num(v)?)),
            [lo, hi, step] => Range1D::new(num(lo)?, num(hi)?, num(step)?),
            _ => Err(Error::InvalidRange(format!("'{s}' is not lo:hi:step"))),
        }
    }
}

impl std::fmt::Display for Range1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha: Range1D,
    pub beta: Range1D,
    pub kinds: Vec<PenaltyKind>,
}

impl GridSpec {
    pub fn cells(&self) -> Vec<PenaltyParams> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            for &alpha in &self.alpha.values() {
                for &beta in &self.beta.values() {
                    out.push(PenaltyParams { alpha, beta, kind });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct GridOptions {
    pub learner: LearnerOptions,
    /// Evaluate criteria (and scores, with gold) at every trace point.
    pub full_trace: bool,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Ledger directory; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Recorded for the staged search's first stage.
    pub beta0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub n_boundaries: usize,
    pub criteria: Option<CriteriaSet>,
    pub scores: Option<EvalReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub alpha: f64,
    pub beta: f64,
    pub kind: PenaltyKind,
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub objective: f64,
    pub n_tokens: u64,
    pub n_types: usize,
    pub n_boundaries: usize,
    pub boundary_digest: String,
    pub criteria: CriteriaSet,
    pub scores: Option<EvalReport>,
    pub trace: Vec<TracePoint>,
    /// Not part of the result proper; differs between identical runs.
    pub wall_time: f64,
}

impl RunRecord {
    pub fn params(&self) -> PenaltyParams {
        PenaltyParams {
            alpha: self.alpha,
            beta: self.beta,
            kind: self.kind,
        }
    }

    pub fn token_f(&self) -> Option<f64> {
        self.scores.map(|s| 100.0 * s.token.f())
    }

    /// Everything but the wall time, for comparing reruns.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub alpha: f64,
    pub beta: f64,
    pub kind: PenaltyKind,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LedgerEntry {
    Done(RunRecord),
    Failed(FailedCell),
}

impl LedgerEntry {
    fn key(&self) -> CellKey {
        match self {
            LedgerEntry::Done(r) => cell_key(&r.params()),
            LedgerEntry::Failed(f) => cell_key(&PenaltyParams {
                alpha: f.alpha,
                beta: f.beta,
                kind: f.kind,
            }),
        }
    }
}

type CellKey = (PenaltyKind, u64, u64);

fn cell_key(p: &PenaltyParams) -> CellKey {
    (p.kind, p.alpha.to_bits(), p.beta.to_bits())
}

#[derive(Clone, Debug, Default)]
pub struct GridOutcome {
    /// Sorted by (kind, α, β).
    pub records: Vec<RunRecord>,
    pub failures: Vec<FailedCell>,
    /// Cells taken from an existing ledger instead of being run.
    pub resumed: usize,
}

/// A learner run at one parameter setting, scored and summarized.
pub fn run_cell(
    corpus: &RawCorpus,
    gold: Option<&Segmentation>,
    params: PenaltyParams,
    options: &LearnerOptions,
    full_trace: bool,
) -> (RunRecord, Segmentation) {
    let start = Instant::now();
    let mut trace = Vec::new();
    let out = run_observed(corpus, params, options, |view| {
        let (criteria, scores) = if full_trace {
            let seg = view.state.segmentation(view.corpus);
            let criteria = evaluate_segmentation(view.corpus, &seg);
            (Some(criteria), gold.map(|g| evaluate(view.corpus, &seg, g)))
        } else {
            (None, None)
        };
        trace.push(TracePoint {
            iteration: view.state.iteration(),
            objective: view.state.objective(),
            n_boundaries: view.state.seq().total() as usize - view.state.seq().n_blocks(),
            criteria,
            scores,
        });
    });
    let seg = out.hypothesis.segmentation;
    let record = RunRecord {
        alpha: params.alpha,
        beta: params.beta,
        kind: params.kind,
        n_max: options.n_max,
        beta0: None,
        iterations: out.iterations,
        stop_reason: out.stop_reason,
        objective: out.objective,
        n_tokens: out.hypothesis.seq.total(),
        n_types: out.hypothesis.seq.active_types(),
        n_boundaries: seg.len(),
        boundary_digest: boundary_digest(&seg),
        criteria: evaluate_segmentation(corpus, &seg),
        scores: gold.map(|g| evaluate(corpus, &seg, g)),
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    };
    (record, seg)
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_varint(bytes: &[u8], at: &mut usize) -> Option<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *bytes.get(*at)?;
        *at += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Some(v);
        }
    }
    None
}

const BOUNDARY_MAGIC: &[u8; 4] = b"ISB1";

/// Binary form: magic, N, count, then gaps between sorted positions.
pub fn encode_boundaries(seg: &Segmentation) -> Vec<u8> {
    let mut out = BOUNDARY_MAGIC.to_vec();
    put_varint(&mut out, seg.n_chars() as u64);
    put_varint(&mut out, seg.len() as u64);
    let mut prev = 0;
    for &p in seg.positions() {
        put_varint(&mut out, (p - prev) as u64);
        prev = p;
    }
    out
}

/// Sorted positions and N from [`encode_boundaries`] output.
pub fn decode_boundaries(bytes: &[u8]) -> Option<(usize, Vec<u32>)> {
    if bytes.get(..4)? != BOUNDARY_MAGIC {
        return None;
    }
    let mut at = 4;
    let n_chars = get_varint(bytes, &mut at)? as usize;
    let count = get_varint(bytes, &mut at)? as usize;
    let mut positions = Vec::with_capacity(count.min(bytes.len()));
    let mut prev = 0u64;
    for _ in 0..count {
        prev += get_varint(bytes, &mut at)?;
        positions.push(u32::try_from(prev).ok()?);
    }
    (at == bytes.len()).then_some((n_chars, positions))
}

pub fn boundary_digest(seg: &Segmentation) -> String {
    hex::encode(Sha256::digest(encode_boundaries(seg)))
}

/// Digest of the character stream and its block layout.
pub fn corpus_digest(corpus: &RawCorpus) -> String {
    hex::encode(Sha256::digest(corpus.to_raw_text().as_bytes()))
}

pub fn boundary_path(dir: &Path, digest: &str) -> PathBuf {
    dir.join("boundaries").join(format!("{digest}.bin"))
}

/// Reads a stored boundary set back as a segmentation of `corpus`.
pub fn load_boundaries(dir: &Path, digest: &str, corpus: &RawCorpus) -> Result<Segmentation> {
    let path = boundary_path(dir, digest);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let (n_chars, positions) =
        decode_boundaries(&bytes).ok_or_else(|| Error::Ledger(format!("{} is corrupt", path.display())))?;
    if n_chars != corpus.n_chars() {
        return Err(Error::CorpusMismatch(format!(
            "{} covers {n_chars} characters, corpus has {}",
            path.display(),
            corpus.n_chars()
        )));
    }
    Segmentation::new(corpus, positions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GridHeader {
    corpus_digest: String,
    n_chars: usize,
    learner: LearnerOptions,
    full_trace: bool,
    with_gold: bool,
}

/// Entries of `dir/ledger.jsonl`. A torn last line (interrupted write) is
/// ignored; damage anywhere else is an error.
pub fn read_ledger(dir: &Path) -> Result<Vec<LedgerEntry>> {
    let path = dir.join("ledger.jsonl");
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(&path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => out.push(e),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(Error::Ledger(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Finished records of a ledger directory, sorted by (kind, α, β).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut records: Vec<RunRecord> = read_ledger(dir)?
        .into_iter()
        .filter_map(|e| match e {
            LedgerEntry::Done(r) => Some(r),
            LedgerEntry::Failed(_) => None,
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (a.kind, a.alpha, a.beta)
            .partial_cmp(&(b.kind, b.alpha, b.beta))
            .expect("finite parameters")
    });
}

fn prepare_dir(dir: &Path, header: &GridHeader) -> Result<Vec<LedgerEntry>> {
    fs::create_dir_all(dir.join("boundaries")).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("grid.json");
    match fs::read(&path) {
        Ok(bytes) => {
            let existing: GridHeader = serde_json::from_slice(&bytes)?;
            if existing != *header {
                return Err(Error::Ledger(format!(
                    "{} was written for a different corpus or learner settings",
                    path.display()
                )));
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            fs::write(&path, serde_json::to_vec_pretty(header)?).map_err(|e| Error::io(&path, e))?;
        }
        Err(e) => return Err(Error::io(&path, e)),
    }
    read_ledger(dir)
}

struct Writer {
    dir: PathBuf,
    ledger: BufWriter<File>,
}

impl Writer {
    fn open(dir: &Path) -> Result<Self> {
        let path = dir.join("ledger.jsonl");
        // Drop a torn final line before appending.
        if let Ok(text) = fs::read_to_string(&path) {
            if !text.is_empty() && !text.ends_with('\n') {
                let keep = text.rfind('\n').map_or(0, |i| i + 1);
                fs::write(&path, &text[..keep]).map_err(|e| Error::io(&path, e))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            ledger: BufWriter::new(file),
        })
    }

    fn write(&mut self, entry: &LedgerEntry, seg: Option<&Segmentation>) -> Result<()> {
        if let (LedgerEntry::Done(r), Some(seg)) = (entry, seg) {
            let path = boundary_path(&self.dir, &r.boundary_digest);
            if !path.exists() {
                let tmp = path.with_extension("tmp");
                fs::write(&tmp, encode_boundaries(seg)).map_err(|e| Error::io(&tmp, e))?;
                fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
            }
        }
        let path = self.dir.join("ledger.jsonl");
        serde_json::to_writer(&mut self.ledger, entry)?;
        self.ledger.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        self.ledger.flush().map_err(|e| Error::io(&path, e))
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".into()
    }
}

/// Runs every cell of the grid in parallel. With an output directory,
/// cells already in its ledger are not rerun and each new cell is appended
/// as soon as it finishes.
pub fn run_grid(
    corpus: &RawCorpus,
    gold: Option<&Segmentation>,
    spec: &GridSpec,
    options: &GridOptions,
) -> Result<GridOutcome> {
    let header = GridHeader {
        corpus_digest: corpus_digest(corpus),
        n_chars: corpus.n_chars(),
        learner: options.learner.clone(),
        full_trace: options.full_trace,
        with_gold: gold.is_some(),
    };
    let existing = match &options.out_dir {
        Some(dir) => prepare_dir(dir, &header)?,
        None => Vec::new(),
    };

    let wanted = spec.cells();
    let wanted_keys: HashSet<CellKey> = wanted.iter().map(cell_key).collect();
    let mut done: BTreeMap<CellKey, LedgerEntry> = BTreeMap::new();
    for e in existing {
        let key = e.key();
        if wanted_keys.contains(&key) {
            done.insert(key, e);
        }
    }
    let resumed = done.len();
    let todo: Vec<PenaltyParams> = wanted
        .into_iter()
        .filter(|p| !done.contains_key(&cell_key(p)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = options.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<(LedgerEntry, Option<Segmentation>)>();
    let writer = options.out_dir.as_deref().map(Writer::open).transpose()?;
    let collected = std::thread::scope(|scope| {
        let sink = scope.spawn(move || -> Result<Vec<LedgerEntry>> {
            let mut writer = writer;
            let mut entries = Vec::new();
            for (entry, seg) in rx {
                if let Some(w) = writer.as_mut() {
                    w.write(&entry, seg.as_ref())?;
                }
                entries.push(entry);
            }
            Ok(entries)
        });
        pool.install(|| {
            todo.par_iter().for_each_with(tx, |tx, &params| {
                let result = catch_unwind(AssertUnwindSafe(|| {
                    run_cell(corpus, gold, params, &options.learner, options.full_trace)
                }));
                let msg = match result {
                    Ok((mut record, seg)) => {
                        record.beta0 = options.beta0;
                        (LedgerEntry::Done(record), Some(seg))
                    }
                    Err(p) => (
                        LedgerEntry::Failed(FailedCell {
                            alpha: params.alpha,
                            beta: params.beta,
                            kind: params.kind,
                            error: panic_message(p),
                        }),
                        None,
                    ),
                };
                // The writer only goes away on an I/O error, reported below.
                let _ = tx.send(msg);
            });
        });
        sink.join().expect("ledger writer panicked")
    })?;

    for e in collected {
        done.insert(e.key(), e);
    }
    let mut outcome = GridOutcome {
        resumed,
        ..Default::default()
    };
    for e in done.into_values() {
        match e {
            LedgerEntry::Done(r) => outcome.records.push(r),
            LedgerEntry::Failed(f) => outcome.failures.push(f),
        }
    }
    sort_records(&mut outcome.records);
    Ok(outcome)
}

fn by_criterion(records: &[RunRecord], c: CriterionId) -> Vec<&RunRecord> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.criteria
            .value(c)
            .total_cmp(&b.criteria.value(c))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.beta.total_cmp(&b.beta))
            .then(a.kind.cmp(&b.kind))
    });
    sorted
}

/// The record minimizing `c`; ties go to the smaller (α, β).
pub fn select_family_minimum(records: &[RunRecord], c: CriterionId) -> Option<&RunRecord> {
    by_criterion(records, c).into_iter().next()
}

/// The `k` records with the smallest `c`, best first.
pub fn select_top_k(records: &[RunRecord], c: CriterionId, k: usize) -> Result<Vec<&RunRecord>> {
    if k == 0 || k > records.len() {
        return Err(Error::InvalidParams(format!(
            "top {k} requested from {} records",
            records.len()
        )));
    }
    let mut sorted = by_criterion(records, c);
    sorted.truncate(k);
    Ok(sorted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    TokenF,
    BoundaryF,
    LexiconF,
    Iterations,
    Criterion(CriterionId),
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tokenf" | "token-f" => Quantity::TokenF,
            "boundaryf" | "boundary-f" => Quantity::BoundaryF,
            "lexiconf" | "lexicon-f" => Quantity::LexiconF,
            "iterations" => Quantity::Iterations,
            other => Quantity::Criterion(
                other
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("unknown quantity '{s}'")))?,
            ),
        })
    }
}

impl Quantity {
    fn of(self, r: &RunRecord) -> Result<f64> {
        let scores = || {
            r.scores
                .ok_or_else(|| Error::InvalidParams("F-score quantities need a grid run with gold".into()))
        };
        Ok(match self {
            Quantity::TokenF => 100.0 * scores()?.token.f(),
            Quantity::BoundaryF => 100.0 * scores()?.boundary.f(),
            Quantity::LexiconF => 100.0 * scores()?.lexicon.f(),
            Quantity::Iterations => r.iterations as f64,
            Quantity::Criterion(c) => r.criteria.value(c),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `cells[i][j]` is the value at (α = alphas[j], β = betas[i]).
    pub cells: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta\\alpha");
        for a in &self.alphas {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (b, row) in self.betas.iter().zip(&self.cells) {
            out.push_str(&b.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Matrix of a quantity over a complete rectangular grid of one penalty
/// kind; rows are β, columns α. `log` takes the natural log of each cell.
pub fn export_heatmap(records: &[RunRecord], quantity: Quantity, log: bool) -> Result<Heatmap> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidParams("no records".into()))?;
    if records.iter().any(|r| r.kind != first.kind) {
        return Err(Error::InvalidParams("records mix penalty kinds".into()));
    }
    let mut alphas: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let mut betas: Vec<f64> = records.iter().map(|r| r.beta).collect();
    for v in [&mut alphas, &mut betas] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if alphas.len() * betas.len() != records.len() {
        return Err(Error::InvalidParams(format!(
            "{} records do not form a {}x{} grid",
            records.len(),
            betas.len(),
            alphas.len()
        )));
    }
    let mut cells = vec![vec![f64::NAN; alphas.len()]; betas.len()];
    for r in records {
        let j = alphas.iter().position(|&a| a == r.alpha).expect("alpha listed");
        let i = betas.iter().position(|&b| b == r.beta).expect("beta listed");
        if !cells[i][j].is_nan() {
            return Err(Error::InvalidParams(format!(
                "duplicate cell alpha={} beta={}",
                r.alpha, r.beta
            )));
        }
        let mut v = quantity.of(r)?;
        if log {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "cannot log-transform {v} at alpha={} beta={}",
                    r.alpha, r.beta
                )));
            }
            v = v.ln();
        }
        cells[i][j] = v;
    }
    Ok(Heatmap {
        alphas,
        betas,
        cells,
    })
}

#[derive(Clone, Debug)]
pub struct StagedOptions {
    pub alpha: Range1D,
    pub beta: Range1D,
    /// β held fixed while α is swept.
    pub beta0: f64,
    pub kind: PenaltyKind,
    pub stage1: CriterionId,
    pub stage2: CriterionId,
    pub grid: GridOptions,
}

#[derive(Clone, Debug)]
pub struct StagedOutcome {
    pub stage1: GridOutcome,
    pub stage2: GridOutcome,
    pub best: RunRecord,
}

/// Sweeps α at β = β₀, keeps the best α, then sweeps β. With an output
/// directory each stage gets its own ledger (`stage1/`, `stage2/`).
pub fn staged_search(
    corpus: &RawCorpus,
    gold: Option<&Segmentation>,
    options: &StagedOptions,
) -> Result<StagedOutcome> {
    if options.stage1 != options.stage2 {
        return Err(Error::InvalidParams(format!(
            "stage criteria differ: {} vs {}",
            options.stage1, options.stage2
        )));
    }
    let c = options.stage1;
    let stage_opts = |name: &str, beta0: Option<f64>| GridOptions {
        out_dir: options.grid.out_dir.as_ref().map(|d| d.join(name)),
        beta0,
        ..options.grid.clone()
    };
    let spec1 = GridSpec {
        alpha: options.alpha,
        beta: Range1D::point(options.beta0),
        kinds: vec![options.kind],
    };
    let stage1 = run_grid(corpus, gold, &spec1, &stage_opts("stage1", Some(options.beta0)))?;
    let alpha = select_family_minimum(&stage1.records, c)
        .ok_or_else(|| Error::InvalidParams("stage 1 produced no records".into()))?
        .alpha;
    let spec2 = GridSpec {
        alpha: Range1D::point(alpha),
        beta: options.beta,
        kinds: vec![options.kind],
    };
    let stage2 = run_grid(corpus, gold, &spec2, &stage_opts("stage2", Some(options.beta0)))?;
    let best = select_family_minimum(&stage2.records, c)
        .ok_or_else(|| Error::InvalidParams("stage 2 produced no records".into()))?
        .clone();
    Ok(StagedOutcome {
        stage1,
        stage2,
        best,
    })
}
