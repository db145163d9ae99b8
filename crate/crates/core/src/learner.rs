//! Greedy incremental learning under penalized likelihood.
//!
//! The objective of a token sequence T is
//!
//! ```text
//! -Σ_w c(w) ln(c(w)/|T|)  +  ½·K·ln N  +  Σ_{t∈T} (-α + β·g(|t|))
//! ```
//!
//! with K the number of token types in use, N the character count and `g`
//! the super-additive length penalty. Each step compresses the n-gram whose
//! substitution lowers the objective the most, and the loop stops once no
//! candidate improves it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{RawCorpus, Segmentation};
use crate::error::{Error, Result};
use crate::lexmodel::{
    init_from_corpus, CandId, CandidateIndex, CompressionDelta, Gram, Lexicon, TokenId,
    TokenSequence,
};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    /// g(x) = x·ln x
    Xlogx,
    /// g(x) = x²
    #[value(name = "x2", alias = "xsquared")]
    #[serde(rename = "x2", alias = "xsquared")]
    Xsquared,
}

impl PenaltyKind {
    pub fn g(self, x: f64) -> f64 {
        match self {
            PenaltyKind::Xlogx => x * x.ln(),
            PenaltyKind::Xsquared => x * x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Xlogx => "xlogx",
            PenaltyKind::Xsquared => "x2",
        }
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub alpha: f64,
    pub beta: f64,
    pub kind: PenaltyKind,
}

impl PenaltyParams {
    pub fn new(alpha: f64, beta: f64, kind: PenaltyKind) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(PenaltyParams { alpha, beta, kind })
    }

    pub fn zero() -> Self {
        PenaltyParams {
            alpha: 0.0,
            beta: 0.0,
            kind: PenaltyKind::Xlogx,
        }
    }

    /// Penalty contributed by one token occurrence of length `len`.
    pub fn per_token(&self, len: u32) -> f64 {
        -self.alpha + self.beta * self.kind.g(len as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once the best candidate no longer lowers the objective.
    #[default]
    Improving,
    /// Stop as soon as the best candidate has a negative change.
    Literal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexitySign {
    /// +½·K·ln N
    #[default]
    Penalize,
    /// -½·K·ln N
    Literal,
}

impl ComplexitySign {
    fn factor(self) -> f64 {
        match self {
            ComplexitySign::Penalize => 0.5,
            ComplexitySign::Literal => -0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerOptions {
    pub n_max: usize,
    /// Trace every this many iterations; `None` disables tracing.
    pub trace_interval: Option<usize>,
    /// Hard cap; defaults to N.
    pub max_iters: Option<usize>,
    /// Deliberate early stop after this many compressions.
    pub stop_at: Option<usize>,
    pub stop_rule: StopRule,
    pub complexity_sign: ComplexitySign,
    /// Replace the running objective with a from-scratch value this often.
    pub resync_every: Option<usize>,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        LearnerOptions {
            n_max: 2,
            trace_interval: Some(100),
            max_iters: None,
            stop_at: None,
            stop_rule: StopRule::Improving,
            complexity_sign: ComplexitySign::Penalize,
            resync_every: Some(1000),
        }
    }
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `xlnx(x - d) - xlnx(x)` without cancellation for large x.
fn xlnx_drop(x: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if x - d <= 0.0 {
        -xlnx(x)
    } else {
        (x - d) * (-d / x).ln_1p() - d * x.ln()
    }
}

/// Σ over token occurrences of `-α + β·g(|t|)`.
pub fn penalty(seq: &TokenSequence, params: &PenaltyParams) -> f64 {
    seq.active_tokens()
        .map(|t| seq.count(t) as f64 * params.per_token(seq.length(t)))
        .sum()
}

/// Full objective recomputed from the sequence counts.
pub fn penalized_likelihood(seq: &TokenSequence, params: &PenaltyParams, sign: ComplexitySign) -> f64 {
    let total = seq.total() as f64;
    let nll = xlnx(total) - seq.active_tokens().map(|t| xlnx(seq.count(t) as f64)).sum::<f64>();
    let complexity = sign.factor() * seq.active_types() as f64 * (seq.n_chars() as f64).ln();
    nll + complexity + penalty(seq, params)
}

/// Total-order wrapper so scores can key ordered collections.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Score(f64);

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Candidates sharing (occurrence count, gram length) share the |T| part of
/// their score, so within a group they are ordered by the remainder only.
type GroupKey = (u64, u8);
type GroupEntry = (Score, (u32, u32), Gram, CandId);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Choice {
    pub cand: CandId,
    pub gram: Gram,
    pub delta: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionEvent {
    pub iteration: usize,
    pub tokens: Vec<TokenId>,
    pub new_token: TokenId,
    pub delta: f64,
    pub occurrences: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Stopped,
    Compressed(CompressionEvent),
}

pub struct LearnerState {
    seq: TokenSequence,
    lex: Lexicon,
    index: CandidateIndex,
    params: PenaltyParams,
    sign: ComplexitySign,
    stop_rule: StopRule,
    resync_every: Option<usize>,
    log_n: f64,
    objective: f64,
    iteration: usize,
    groups: BTreeMap<GroupKey, BTreeSet<GroupEntry>>,
    entries: Vec<Option<(GroupKey, GroupEntry)>>,
}

impl LearnerState {
    pub fn new(corpus: &RawCorpus, params: PenaltyParams, options: &LearnerOptions) -> Self {
        let (seq, lex) = init_from_corpus(corpus);
        let index = CandidateIndex::build(&seq, options.n_max);
        let objective = penalized_likelihood(&seq, &params, options.complexity_sign);
        let mut state = LearnerState {
            log_n: (seq.n_chars() as f64).ln(),
            seq,
            lex,
            index,
            params,
            sign: options.complexity_sign,
            stop_rule: options.stop_rule,
            resync_every: options.resync_every,
            objective,
            iteration: 0,
            groups: BTreeMap::new(),
            entries: Vec::new(),
        };
        let live: Vec<CandId> = state.index.live().collect();
        for c in live {
            state.refresh(c);
        }
        state
    }

    pub fn seq(&self) -> &TokenSequence {
        &self.seq
    }

    pub fn lex(&self) -> &Lexicon {
        &self.lex
    }

    pub fn index(&self) -> &CandidateIndex {
        &self.index
    }

    pub fn params(&self) -> &PenaltyParams {
        &self.params
    }

    pub fn complexity_sign(&self) -> ComplexitySign {
        self.sign
    }

    /// Objective maintained incrementally.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn segmentation(&self, corpus: &RawCorpus) -> Segmentation {
        self.seq.segmentation(corpus)
    }

    /// The |T|-dependent part of Δ: change of |T|·ln|T|.
    fn total_term(&self, count: u64, n: usize) -> f64 {
        let total = self.seq.total() as f64;
        let removed = (count * (n as u64 - 1)) as f64;
        xlnx_drop(total, removed)
    }

    /// Everything in Δ except [`Self::total_term`].
    fn local_term(&self, gram: &[TokenId], count: u64) -> f64 {
        let m = count as f64;
        let mut ll = -xlnx(m);
        let mut vanished = 0;
        let mut length = 0;
        let mut parts_g = 0.0;
        for (i, &t) in gram.iter().enumerate() {
            let len = self.seq.length(t);
            length += len;
            parts_g += self.params.kind.g(len as f64);
            if gram[..i].contains(&t) {
                continue;
            }
            let mult = gram.iter().filter(|&&x| x == t).count() as u64;
            let c = self.seq.count(t);
            let removed = mult * count;
            ll -= xlnx_drop(c as f64, removed as f64);
            if c == removed {
                vanished += 1;
            }
        }
        let types = self.sign.factor() * self.log_n * (1 - vanished) as f64;
        let pen = self.params.alpha * m * (gram.len() - 1) as f64
            + self.params.beta * m * (self.params.kind.g(length as f64) - parts_g);
        ll + types + pen
    }

    /// Exact change of the objective if `gram` were compressed now.
    pub fn score_candidate(&self, gram: &[TokenId]) -> Option<f64> {
        if gram.len() < 2 || gram.len() > self.index.n_max() {
            return None;
        }
        let c = self.index.id(&Gram::new(gram))?;
        let count = self.index.count(c);
        if count == 0 {
            return None;
        }
        Some(self.total_term(count, gram.len()) + self.local_term(gram, count))
    }

    fn refresh(&mut self, c: CandId) {
        if self.entries.len() <= c as usize {
            self.entries.resize(c as usize + 1, None);
        }
        if let Some((key, entry)) = self.entries[c as usize].take() {
            let group = self.groups.get_mut(&key).expect("group exists");
            group.remove(&entry);
            if group.is_empty() {
                self.groups.remove(&key);
            }
        }
        let count = self.index.count(c);
        if count == 0 {
            return;
        }
        let gram = self.index.gram(c);
        let local = self.local_term(gram.as_slice(), count);
        let key = (count, gram.len() as u8);
        let entry = (Score(local), self.index.first(c), gram, c);
        self.groups.entry(key).or_default().insert(entry);
        self.entries[c as usize] = Some((key, entry));
    }

    /// Minimizer of Δ. Ties: smaller Δ, then higher count, then earlier
    /// first occurrence, then the token ids themselves.
    pub fn best_candidate(&self) -> Option<Choice> {
        let mut best: Option<(Choice, (u32, u32))> = None;
        for (&(count, n), group) in &self.groups {
            let &(Score(local), first, gram, cand) = group.first().expect("groups are non-empty");
            let delta = self.total_term(count, n as usize) + local;
            let better = match &best {
                None => true,
                Some((b, bfirst)) => delta
                    .total_cmp(&b.delta)
                    .then(b.count.cmp(&count))
                    .then(first.cmp(bfirst))
                    .then(gram.cmp(&b.gram))
                    .is_lt(),
            };
            if better {
                let choice = Choice {
                    cand,
                    gram,
                    delta,
                    count,
                };
                best = Some((choice, first));
            }
        }
        best.map(|(c, _)| c)
    }

    /// One iteration: compress the best candidate or report that the
    /// stopping rule fired. A stop leaves the state untouched.
    /// The candidate the next [`step`](Self::step) would apply, or `None`
    /// if it would stop.
    pub fn next_choice(&self) -> Option<Choice> {
        let choice = self.best_candidate()?;
        let stop = match self.stop_rule {
            StopRule::Improving => choice.delta >= 0.0,
            StopRule::Literal => choice.delta < 0.0,
        };
        (!stop).then_some(choice)
    }

    pub fn step(&mut self) -> StepOutcome {
        let Some(choice) = self.next_choice() else {
            return StepOutcome::Stopped;
        };
        let delta = self.compress(choice.cand);
        debug_assert_eq!(delta.occurrences, choice.count);
        self.objective += choice.delta;
        self.iteration += 1;
        if self.resync_every.is_some_and(|k| k > 0 && self.iteration.is_multiple_of(k)) {
            let fresh = penalized_likelihood(&self.seq, &self.params, self.sign);
            debug_assert!(
                (fresh - self.objective).abs() <= 1e-6 * fresh.abs().max(1.0),
                "objective drifted: {} vs {fresh}",
                self.objective
            );
            self.objective = fresh;
        }
        StepOutcome::Compressed(CompressionEvent {
            iteration: self.iteration,
            tokens: choice.gram.as_slice().to_vec(),
            new_token: delta.token,
            delta: choice.delta,
            occurrences: delta.occurrences,
        })
    }

    fn compress(&mut self, cand: CandId) -> CompressionDelta {
        let gram = self.index.gram(cand);
        let blocks: Vec<u32> = self.index.blocks(cand).collect();
        let delta = self
            .seq
            .apply_compression_in(&mut self.lex, gram.as_slice(), &blocks);
        let mut refresh = self.index.update(&self.seq, &delta);
        for change in &delta.count_changes {
            if change.token != delta.token {
                refresh.extend(self.index.live_with_token(change.token));
            }
        }
        refresh.sort_unstable();
        refresh.dedup();
        for c in refresh {
            self.refresh(c);
        }
        delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The stopping rule fired.
    Converged,
    /// No candidate n-gram is left.
    Exhausted,
    StopAt,
    MaxIters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub n_boundaries: usize,
    pub n_types: usize,
}

/// What an observer sees at each trace point.
pub struct TraceView<'a> {
    pub state: &'a LearnerState,
    pub corpus: &'a RawCorpus,
    pub is_final: bool,
}

pub struct Hypothesis {
    pub segmentation: Segmentation,
    pub seq: TokenSequence,
    pub lex: Lexicon,
}

pub struct RunOutput {
    pub hypothesis: Hypothesis,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub objective: f64,
    pub stop_reason: StopReason,
}

impl RunOutput {
    pub fn hit_max_iters(&self) -> bool {
        self.stop_reason == StopReason::MaxIters
    }
}

/// Runs the learner to its stopping point.
pub fn run(corpus: &RawCorpus, params: PenaltyParams, options: &LearnerOptions) -> RunOutput {
    run_observed(corpus, params, options, |_| {})
}

/// [`run`] with a callback at every trace point (every `trace_interval`
/// iterations and once at the end).
pub fn run_observed(
    corpus: &RawCorpus,
    params: PenaltyParams,
    options: &LearnerOptions,
    mut observer: impl FnMut(&TraceView<'_>),
) -> RunOutput {
    let mut state = LearnerState::new(corpus, params, options);
    let max_iters = options.max_iters.unwrap_or(corpus.n_chars());
    let mut trace = Vec::new();

    let mut record = |state: &LearnerState, trace: &mut Vec<TraceRecord>, is_final: bool| {
        trace.push(TraceRecord {
            iteration: state.iteration(),
            objective: state.objective(),
            n_boundaries: (state.seq().total() as usize) - state.seq().n_blocks(),
            n_types: state.seq().active_types(),
        });
        observer(&TraceView {
            state,
            corpus,
            is_final,
        });
    };

    let halt = |state: &LearnerState| {
        if options.stop_at.is_some_and(|s| state.iteration() >= s) {
            Some(StopReason::StopAt)
        } else if state.iteration() >= max_iters {
            Some(StopReason::MaxIters)
        } else if state.groups.is_empty() {
            Some(StopReason::Exhausted)
        } else {
            None
        }
    };
    let stop_reason = loop {
        if let Some(reason) = halt(&state) {
            break reason;
        }
        match state.step() {
            StepOutcome::Stopped => break StopReason::Converged,
            StepOutcome::Compressed(_) => {
                let due = options
                    .trace_interval
                    .is_some_and(|every| every > 0 && state.iteration().is_multiple_of(every));
                // A periodic point that is also the last one is left to the
                // final record.
                if due && halt(&state).is_none() && state.next_choice().is_some() {
                    record(&state, &mut trace, false);
                }
            }
        }
    };
    if options.trace_interval.is_some() {
        record(&state, &mut trace, true);
    }

    let segmentation = state.segmentation(corpus);
    RunOutput {
        iterations: state.iteration(),
        objective: state.objective(),
        stop_reason,
        trace,
        hypothesis: Hypothesis {
            segmentation,
            seq: state.seq,
            lex: state.lex,
        },
    }
}
