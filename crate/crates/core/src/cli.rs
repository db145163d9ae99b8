//! Command-line front end.
//!
//! A `--config FILE` of `key = value` lines is spliced in right after the
//! subcommand, so flags given on the command line win over the file and the
//! file wins over built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{
    apply_hard_boundaries_with_gold, load_gold, load_segmentation_for, write_boundary_sidecar,
    write_segmentation, Format, PunctSet, RawCorpus, Segmentation,
};
use crate::criteria::{evaluate_segmentation, CriteriaSet, CriterionId};
use crate::ensemble::majority_vote;
use crate::eval::{correlation_report, evaluate, round1, ScoredPoint};
use crate::learner::{
    run_observed, ComplexitySign, LearnerOptions, PenaltyKind, PenaltyParams, StopRule,
};
use crate::search::{
    corpus_digest, encode_boundaries, export_heatmap, load_boundaries, load_records, run_grid,
    select_top_k, staged_search, GridOptions, GridSpec, Quantity, Range1D, RunRecord,
    StagedOptions,
};

// Stdout writes that fail (a closed pipe, say) become errors instead of panics.
macro_rules! out {
    ($($arg:tt)*) => {
        write!(std::io::stdout().lock(), $($arg)*)?
    };
}

macro_rules! outln {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Parser, Debug)]
#[command(name = "incseg", version, about = "Unsupervised word segmentation by greedy n-gram compression")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the learner once and write its segmentation.
    Segment(SegmentArgs),
    /// Run the learner over an (α, β) grid into a resumable ledger.
    Grid(GridArgs),
    /// Sweep α at a fixed β, then β at the best α.
    Staged(StagedArgs),
    /// Rank ledger records by a criterion.
    Select(SelectArgs),
    /// Majority vote over segmentation files.
    Ensemble(EnsembleArgs),
    /// Score a segmentation against gold.
    Eval(EvalArgs),
    /// Spearman correlation between token F and the criteria.
    Correlate(CorrelateArgs),
    /// Export a quantity over the grid as a CSV matrix.
    Heatmap(HeatmapArgs),
    /// Run the learner and list its lexicon.
    DumpLexicon(DumpArgs),
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Corpus file: one utterance per line, words separated by spaces.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Brent)]
    format: Format,
    /// Treat punctuation runs as given boundaries and split blocks there.
    #[arg(long)]
    hard_boundaries: bool,
    /// Explicit punctuation characters (default: Unicode punctuation).
    #[arg(long)]
    punct: Option<String>,
}

impl CorpusArgs {
    fn punct(&self) -> Option<PunctSet> {
        punct_set(self.hard_boundaries, &self.punct)
    }

    /// The corpus and the word boundaries written in the file.
    fn load(&self) -> anyhow::Result<(RawCorpus, Segmentation)> {
        let (c, g) = load_gold(&self.corpus, self.format)?;
        Ok(match self.punct() {
            Some(p) => apply_hard_boundaries_with_gold(&c, &g, &p),
            None => (c, g),
        })
    }
}

fn punct_set(hard: bool, chars: &Option<String>) -> Option<PunctSet> {
    match (hard, chars) {
        (false, None) => None,
        (_, Some(s)) => Some(PunctSet::from_chars(s)),
        (true, None) => Some(PunctSet::Unicode),
    }
}

#[derive(Args, Debug, Clone)]
struct GoldArgs {
    /// Score against the word boundaries of the corpus file itself.
    #[arg(long, conflicts_with = "gold")]
    score: bool,
    /// Score against a separate gold file over the same text.
    #[arg(long)]
    gold: Option<PathBuf>,
}

impl GoldArgs {
    fn resolve(&self, corpus: &CorpusArgs, raw: &RawCorpus, own: Segmentation) -> anyhow::Result<Option<Segmentation>> {
        if self.score {
            return Ok(Some(own));
        }
        match &self.gold {
            None => Ok(None),
            Some(path) => Ok(Some(load_segmentation_for(
                path,
                corpus.format,
                corpus.punct().as_ref(),
                raw,
            )?)),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct LoopArgs {
    /// Longest n-gram considered for compression (2 to 4).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=4))]
    nmax: u8,
    /// Trace every this many iterations; 0 turns tracing off.
    #[arg(long, default_value_t = 100)]
    trace_every: usize,
    /// Hard cap on iterations (default: number of characters).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop after this many compressions.
    #[arg(long)]
    stop_at: Option<usize>,
    /// Stop as soon as the best candidate has a negative change.
    #[arg(long)]
    paper_literal_stop: bool,
    /// Use −½·K·ln N instead of +½·K·ln N.
    #[arg(long)]
    eq3_literal_sign: bool,
}

impl LoopArgs {
    fn options(&self) -> LearnerOptions {
        LearnerOptions {
            n_max: self.nmax as usize,
            trace_interval: (self.trace_every > 0).then_some(self.trace_every),
            max_iters: self.max_iters,
            stop_at: self.stop_at,
            stop_rule: if self.paper_literal_stop {
                StopRule::Literal
            } else {
                StopRule::Improving
            },
            complexity_sign: if self.eq3_literal_sign {
                ComplexitySign::Literal
            } else {
                ComplexitySign::Penalize
            },
            ..LearnerOptions::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = PenaltyKind::Xlogx)]
    penalty: PenaltyKind,
}

impl ParamArgs {
    fn params(&self) -> anyhow::Result<PenaltyParams> {
        Ok(PenaltyParams::new(self.alpha, self.beta, self.penalty)?)
    }
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gold: GoldArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    learn: LoopArgs,
    /// Write a boundary snapshot for every trace record.
    #[arg(long)]
    trace_snapshots: bool,
    /// Also report criteria in bits.
    #[arg(long)]
    bits: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gold: GoldArgs,
    #[command(flatten)]
    learn: LoopArgs,
    #[arg(long, default_value = "0:5:0.1")]
    alpha: Range1D,
    #[arg(long, default_value = "0:5:0.1")]
    beta: Range1D,
    /// Penalty kinds to sweep, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "xlogx")]
    penalty: Vec<PenaltyKind>,
    /// Criteria summarized at the end ('all' or a comma list).
    #[arg(long, default_value = "all")]
    criteria: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Evaluate criteria and scores at every trace point.
    #[arg(long)]
    full_trace: bool,
    /// Ledger directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StagedArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gold: GoldArgs,
    #[command(flatten)]
    learn: LoopArgs,
    #[arg(long, default_value = "0:5:0.1")]
    alpha: Range1D,
    #[arg(long, default_value = "0:5:0.1")]
    beta: Range1D,
    /// β held fixed during the α sweep.
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, value_enum, default_value_t = PenaltyKind::Xlogx)]
    penalty: PenaltyKind,
    #[arg(long, value_enum, default_value_t = CriterionId::Mdl2)]
    criterion: CriterionId,
    /// Criterion of the β sweep; must equal --criterion.
    #[arg(long, value_enum)]
    stage2_criterion: Option<CriterionId>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long, value_enum)]
    criterion: CriterionId,
    #[arg(long, default_value_t = 1)]
    top: usize,
    /// Only records of this penalty kind.
    #[arg(long, value_enum)]
    penalty: Option<PenaltyKind>,
    /// Corpus the grid ran on; needed for --export.
    #[command(flatten)]
    corpus: Option<CorpusArgs>,
    /// Write the selected segmentations into this directory.
    #[arg(long, requires = "corpus")]
    export: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    /// Segmentation files over the same text.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Brent)]
    format: Format,
    #[arg(long)]
    hard_boundaries: bool,
    #[arg(long)]
    punct: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Brent)]
    format: Format,
    #[arg(long)]
    hard_boundaries: bool,
    #[arg(long)]
    punct: Option<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    report: ReportFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Population {
    Outputs,
    Trace,
    Both,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long, value_enum, default_value_t = Population::Both)]
    population: Population,
    #[arg(long, value_enum)]
    penalty: Option<PenaltyKind>,
    /// Write the full report with scatter data as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeatmapArgs {
    #[arg(long)]
    ledger: PathBuf,
    /// tokenF, boundaryF, lexiconF, iterations or a criterion name.
    #[arg(long, default_value = "tokenF")]
    quantity: String,
    #[arg(long, value_enum, default_value_t = PenaltyKind::Xlogx)]
    penalty: PenaltyKind,
    /// Natural log of every cell.
    #[arg(long)]
    log: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    learn: LoopArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Replaces `--config FILE` with the flags it lists, placed right after the
/// subcommand.
pub fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = Some(PathBuf::from(it.next().context("--config needs a file")?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut flags: Vec<OsString> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), i + 1);
        };
        let key = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => flags.push(key.into()),
            "false" => {}
            v => {
                flags.push(key.into());
                flags.extend(v.split_whitespace().map(OsString::from));
            }
        }
    }
    // After the binary name and the subcommand.
    let at = rest.len().min(2);
    rest.splice(at..at, flags);
    Ok(rest)
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    inputs: Vec<InputDigest>,
    corpus_digest: Option<String>,
}

fn write_manifest(
    path: &Path,
    command: &str,
    argv: &[OsString],
    inputs: &[&Path],
    corpus: Option<&RawCorpus>,
) -> anyhow::Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        inputs: inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.to_path_buf(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<anyhow::Result<_>>()?,
        corpus_digest: corpus.map(corpus_digest),
    };
    fs::write(path, serde_json::to_vec_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))
}

fn criteria_json(set: &CriteriaSet, bits: bool) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for v in &set.0 {
        let mut entry = serde_json::to_value(v).expect("criterion serializes");
        if bits {
            entry["bits"] = if v.value.is_finite() {
                serde_json::json!(v.in_bits())
            } else {
                serde_json::Value::Null
            };
        }
        map.insert(v.id.name().into(), entry);
    }
    map.into()
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_segment(a: &SegmentArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let (corpus, own) = a.corpus.load()?;
    let gold = a.gold.resolve(&a.corpus, &corpus, own)?;
    let params = a.params.params()?;
    let options = a.learn.options();
    create_dir(&a.out)?;
    if a.trace_snapshots {
        create_dir(&a.out.join("snapshots"))?;
    }

    let trace_path = a.out.join("trace.jsonl");
    let mut trace = std::io::BufWriter::new(
        fs::File::create(&trace_path).with_context(|| format!("writing {}", trace_path.display()))?,
    );
    let mut trace_err = None;
    let out = run_observed(&corpus, params, &options, |view| {
        let state = view.state;
        let mut line = serde_json::json!({
            "iteration": state.iteration(),
            "objective": state.objective(),
            "n_boundaries": state.seq().total() as usize - state.seq().n_blocks(),
            "n_types": state.seq().active_types(),
            "final": view.is_final,
        });
        if a.trace_snapshots {
            let rel = format!("snapshots/iter_{:07}.bin", state.iteration());
            let seg = state.segmentation(view.corpus);
            if let Err(e) = fs::write(a.out.join(&rel), encode_boundaries(&seg)) {
                trace_err.get_or_insert(e);
            }
            line["snapshot"] = rel.into();
        }
        if let Err(e) = writeln!(trace, "{line}") {
            trace_err.get_or_insert(e);
        }
    });
    trace.flush()?;
    if let Some(e) = trace_err {
        return Err(e).context("writing trace");
    }

    let seg = &out.hypothesis.segmentation;
    write_segmentation(a.out.join("segmentation.txt"), &corpus, seg)?;
    write_boundary_sidecar(a.out.join("boundaries.json"), &corpus, seg)?;
    let criteria = evaluate_segmentation(&corpus, seg);
    let scores = gold.as_ref().map(|g| evaluate(&corpus, seg, g));
    let summary = serde_json::json!({
        "alpha": params.alpha,
        "beta": params.beta,
        "penalty": params.kind,
        "iterations": out.iterations,
        "stop_reason": out.stop_reason,
        "objective": out.objective,
        "n_boundaries": seg.len(),
        "n_types": out.hypothesis.seq.active_types(),
        "criteria": criteria_json(&criteria, a.bits),
        "eval": scores.map(|s| s.to_json()),
    });
    fs::write(a.out.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    let mut inputs = vec![a.corpus.corpus.as_path()];
    inputs.extend(a.gold.gold.as_deref());
    write_manifest(&a.out.join("manifest.json"), "segment", argv, &inputs, Some(&corpus))?;

    outln!("iterations\t{}\nstop\t{:?}", out.iterations, out.stop_reason);
    if let Some(s) = scores {
        out!("{}", s.to_tsv());
    }
    Ok(())
}

fn parse_criteria(s: &str) -> anyhow::Result<Vec<CriterionId>> {
    if s == "all" {
        return Ok(CriterionId::ALL.to_vec());
    }
    s.split(',')
        .map(|c| c.trim().parse::<CriterionId>().map_err(anyhow::Error::msg))
        .collect()
}

fn summary_table(records: &[RunRecord], criteria: &[CriterionId]) -> String {
    let mut out = String::from("criterion\tpenalty\talpha\tbeta\tvalue\ttokenF\n");
    let mut kinds: Vec<PenaltyKind> = records.iter().map(|r| r.kind).collect();
    kinds.dedup();
    for kind in kinds {
        let family: Vec<RunRecord> = records.iter().filter(|r| r.kind == kind).cloned().collect();
        for &c in criteria {
            let Ok(best) = select_top_k(&family, c, 1) else { continue };
            let r = best[0];
            let f = r.token_f().map_or("NA".into(), |f| format!("{:.1}", round1(f)));
            out.push_str(&format!(
                "{c}\t{kind}\t{}\t{}\t{:.3}\t{f}\n",
                r.alpha,
                r.beta,
                r.criteria.value(c)
            ));
        }
    }
    out
}

fn cmd_grid(a: &GridArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let (corpus, own) = a.corpus.load()?;
    let gold = a.gold.resolve(&a.corpus, &corpus, own)?;
    let criteria = parse_criteria(&a.criteria)?;
    let spec = GridSpec {
        alpha: a.alpha,
        beta: a.beta,
        kinds: a.penalty.clone(),
    };
    let options = GridOptions {
        learner: a.learn.options(),
        full_trace: a.full_trace,
        jobs: a.jobs,
        out_dir: Some(a.out.clone()),
        beta0: None,
    };
    let outcome = run_grid(&corpus, gold.as_ref(), &spec, &options)?;
    let mut inputs = vec![a.corpus.corpus.as_path()];
    inputs.extend(a.gold.gold.as_deref());
    write_manifest(&a.out.join("manifest.json"), "grid", argv, &inputs, Some(&corpus))?;
    eprintln!(
        "{} cells ({} resumed), {} failed",
        outcome.records.len() + outcome.failures.len(),
        outcome.resumed,
        outcome.failures.len()
    );
    for f in &outcome.failures {
        eprintln!("failed alpha={} beta={} {}: {}", f.alpha, f.beta, f.kind, f.error);
    }
    out!("{}", summary_table(&outcome.records, &criteria));
    Ok(())
}

fn cmd_staged(a: &StagedArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let (corpus, own) = a.corpus.load()?;
    let gold = a.gold.resolve(&a.corpus, &corpus, own)?;
    let options = StagedOptions {
        alpha: a.alpha,
        beta: a.beta,
        beta0: a.beta0,
        kind: a.penalty,
        stage1: a.criterion,
        stage2: a.stage2_criterion.unwrap_or(a.criterion),
        grid: GridOptions {
            learner: a.learn.options(),
            full_trace: false,
            jobs: a.jobs,
            out_dir: Some(a.out.clone()),
            beta0: None,
        },
    };
    let outcome = staged_search(&corpus, gold.as_ref(), &options)?;
    fs::write(a.out.join("best.json"), serde_json::to_vec_pretty(&outcome.best)?)?;
    let mut inputs = vec![a.corpus.corpus.as_path()];
    inputs.extend(a.gold.gold.as_deref());
    write_manifest(&a.out.join("manifest.json"), "staged", argv, &inputs, Some(&corpus))?;
    let b = &outcome.best;
    let f = b.token_f().map_or("NA".into(), |f| format!("{:.1}", round1(f)));
    outln!("alpha\tbeta\t{}\ttokenF\n{}\t{}\t{:.3}\t{f}", a.criterion, b.alpha, b.beta, b.criteria.value(a.criterion));
    Ok(())
}

fn filtered_records(ledger: &Path, kind: Option<PenaltyKind>) -> anyhow::Result<Vec<RunRecord>> {
    let mut records = load_records(ledger)?;
    if let Some(k) = kind {
        records.retain(|r| r.kind == k);
    }
    if records.is_empty() {
        bail!("no finished records in {}", ledger.display());
    }
    Ok(records)
}

fn cmd_select(a: &SelectArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let records = filtered_records(&a.ledger, a.penalty)?;
    let top = select_top_k(&records, a.criterion, a.top)?;
    outln!("rank\tpenalty\talpha\tbeta\t{}\ttokenF\tdigest", a.criterion);
    for (i, r) in top.iter().enumerate() {
        let f = r.token_f().map_or("NA".into(), |f| format!("{:.1}", round1(f)));
        outln!(
            "{}\t{}\t{}\t{}\t{:.3}\t{f}\t{}",
            i + 1,
            r.kind,
            r.alpha,
            r.beta,
            r.criteria.value(a.criterion),
            r.boundary_digest
        );
    }
    if let (Some(dir), Some(c)) = (&a.export, &a.corpus) {
        let (corpus, _) = c.load()?;
        create_dir(dir)?;
        for (i, r) in top.iter().enumerate() {
            let seg = load_boundaries(&a.ledger, &r.boundary_digest, &corpus)?;
            write_segmentation(dir.join(format!("top{:02}.txt", i + 1)), &corpus, &seg)?;
        }
        write_manifest(&dir.join("manifest.json"), "select", argv, &[c.corpus.as_path()], Some(&corpus))?;
    }
    Ok(())
}

fn cmd_ensemble(a: &EnsembleArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let punct = punct_set(a.hard_boundaries, &a.punct);
    let (c, s) = load_gold(&a.inputs[0], a.format)?;
    let (corpus, first) = match &punct {
        Some(p) => apply_hard_boundaries_with_gold(&c, &s, p),
        None => (c, s),
    };
    let mut sets = vec![first];
    for path in &a.inputs[1..] {
        sets.push(load_segmentation_for(path, a.format, punct.as_ref(), &corpus)?);
    }
    let voted = majority_vote(&sets)?;
    write_segmentation(&a.out, &corpus, &voted)?;
    let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    let mut manifest = a.out.clone().into_os_string();
    manifest.push(".manifest.json");
    write_manifest(Path::new(&manifest), "ensemble", argv, &inputs, Some(&corpus))?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let punct = punct_set(a.hard_boundaries, &a.punct);
    let (c, g) = load_gold(&a.gold, a.format)?;
    let (corpus, gold) = match &punct {
        Some(p) => apply_hard_boundaries_with_gold(&c, &g, p),
        None => (c, g),
    };
    let hyp = load_segmentation_for(&a.hyp, a.format, punct.as_ref(), &corpus)?;
    let report = evaluate(&corpus, &hyp, &gold);
    match a.report {
        ReportFormat::Json => outln!("{}", serde_json::to_string_pretty(&report.to_json())?),
        ReportFormat::Tsv => out!("{}", report.to_tsv()),
    }
    Ok(())
}

fn cmd_correlate(a: &CorrelateArgs) -> anyhow::Result<()> {
    let records = filtered_records(&a.ledger, a.penalty)?;
    let mut outputs = Vec::new();
    let mut trace = Vec::new();
    for r in &records {
        let Some(f) = r.token_f() else {
            bail!("ledger {} has no scores; rerun the grid with gold", a.ledger.display());
        };
        outputs.push(ScoredPoint {
            token_f: f,
            criteria: r.criteria.clone(),
        });
        for t in &r.trace {
            if let (Some(c), Some(s)) = (&t.criteria, &t.scores) {
                trace.push(ScoredPoint {
                    token_f: 100.0 * s.token.f(),
                    criteria: c.clone(),
                });
            }
        }
    }
    if matches!(a.population, Population::Trace | Population::Both) && trace.is_empty() {
        bail!("ledger {} has no full trace; rerun the grid with --full-trace", a.ledger.display());
    }
    let report = correlation_report(&outputs, &trace, &CriterionId::ALL);
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |r| format!("{r:.2}"));
    match a.population {
        Population::Both => out!("{}", report.to_tsv()),
        Population::Outputs => {
            outln!("criterion\toutputs");
            for r in &report.rows {
                outln!("{}\t{}", r.criterion, fmt(r.outputs));
            }
        }
        Population::Trace => {
            outln!("criterion\ttrace");
            for r in &report.rows {
                outln!("{}\t{}", r.criterion, fmt(r.trace));
            }
        }
    }
    if let Some(out) = &a.out {
        fs::write(out, serde_json::to_vec_pretty(&report)?).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_heatmap(a: &HeatmapArgs) -> anyhow::Result<()> {
    let records = filtered_records(&a.ledger, Some(a.penalty))?;
    let quantity: Quantity = a.quantity.parse()?;
    let map = export_heatmap(&records, quantity, a.log)?;
    fs::write(&a.out, map.to_csv()).with_context(|| format!("writing {}", a.out.display()))
}

fn cmd_dump(a: &DumpArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let (corpus, _) = a.corpus.load()?;
    let mut options = a.learn.options();
    options.trace_interval = None;
    let out = run_observed(&corpus, a.params.params()?, &options, |_| {});
    let (seq, lex) = (&out.hypothesis.seq, &out.hypothesis.lex);
    let mut rows: Vec<_> = seq.active_tokens().collect();
    rows.sort_by(|&x, &y| seq.count(y).cmp(&seq.count(x)).then(x.cmp(&y)));
    let mut text = String::from("id\tsurface\tcount\tlength\tcomponents\n");
    for t in rows {
        let comps: Vec<String> = lex.entry(t).components.iter().map(|c| c.to_string()).collect();
        text.push_str(&format!(
            "{t}\t{}\t{}\t{}\t{}\n",
            lex.surface(t),
            seq.count(t),
            seq.length(t),
            comps.join(",")
        ));
    }
    match &a.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            let mut manifest = path.clone().into_os_string();
            manifest.push(".manifest.json");
            write_manifest(Path::new(&manifest), "dump-lexicon", argv, &[a.corpus.corpus.as_path()], Some(&corpus))?;
        }
        None => out!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli, argv: &[OsString]) -> anyhow::Result<()> {
    match &cli.command {
        Command::Segment(a) => cmd_segment(a, argv),
        Command::Grid(a) => cmd_grid(a, argv),
        Command::Staged(a) => cmd_staged(a, argv),
        Command::Select(a) => cmd_select(a, argv),
        Command::Ensemble(a) => cmd_ensemble(a, argv),
        Command::Eval(a) => cmd_eval(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::DumpLexicon(a) => cmd_dump(a, argv),
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code: 0 on success, 1 on a runtime failure, 2 on a usage
/// error.
pub fn main_with(args: Vec<OsString>) -> i32 {
    let argv = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &argv) {
        Ok(()) => 0,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
