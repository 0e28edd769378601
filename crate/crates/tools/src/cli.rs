//! Subcommand implementations behind the `pinsound` binary.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pinsound_core::attack::{
    attempts_to_guess, run_attack, KnowledgeSpec, ModelBank, PinRanking,
};
use pinsound_core::audio::{detect_keystrokes, match_ground_truth, PipelineConfig};
use pinsound_core::eval::{
    extraction_error_report, guessing_cdf, improvement_factor, p50, Baseline, GuessOutcome,
};
use pinsound_core::keypad::{KeypadLayout, Pin};
use pinsound_core::synth::{GeneratorConfig, PinSource};
use pinsound_core::timing::{GapSequence, TimingModel, DEFAULT_MIN_CLASS_SAMPLES};
use pinsound_core::trace::TypistMode;

use crate::dataset::{
    clip_path, generate_dataset, load_manifest, load_truth, read_jsonl, write_json, write_jsonl,
    DatasetSpec, TruthRecord,
};
use crate::error::{Result, ToolError};
use crate::model_fmt::{load_model, save_model};
use crate::reports::{
    p50_table, write_cdf_csv, CdfPoint, DetectionRecord, DetectionTruth, EvalSummary,
    ExtractionReport, ImprovementPoint, RankingRecord, REPORT_FORMAT_VERSION,
};
use crate::wav::read_wav;

#[derive(Debug, Parser)]
#[command(
    name = "pinsound",
    about = "Inter-keystroke timing attacks on PIN-pad feedback beeps",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic beep dataset (clips + manifest + truth).
    Synth(SynthArgs),
    /// Detect keystroke timestamps in every clip of a dataset.
    Extract(ExtractArgs),
    /// Fit a per-distance-class timing model from ground-truth traces.
    Train(TrainArgs),
    /// Rank candidate PINs for each trace.
    Attack(AttackArgs),
    /// Aggregate rankings into CDFs, improvement factors and P50 tables.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of random PINs to draw.
    #[arg(long, default_value_t = 10, conflicts_with = "pin_list")]
    pub pins: usize,
    /// Comma-separated fixed PIN list (overrides --pins).
    #[arg(long)]
    pub pin_list: Option<String>,
    /// Entries recorded per PIN.
    #[arg(long, default_value_t = 1)]
    pub entries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Typist mode: single_finger, other or mixed.
    #[arg(long, default_value = "single_finger")]
    pub mode: String,
    /// Beep-to-noise SNR in dB.
    #[arg(long, default_value_t = 0.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 48_000)]
    pub sample_rate: u32,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Dataset directory (as produced by `synth`).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output detections JSON-lines file.
    #[arg(long)]
    pub out: PathBuf,
    /// Compare against the dataset's ground truth.
    #[arg(long)]
    pub truth: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory with a truth.jsonl to train on.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Restrict training to one typist mode (single_finger, other).
    #[arg(long)]
    pub mode: Option<String>,
    /// Classes with fewer gaps than this fall back to the pooled fit.
    #[arg(long, default_value_t = DEFAULT_MIN_CLASS_SAMPLES)]
    pub min_samples: usize,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Fitted model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Detections JSON-lines file (from `extract`).
    #[arg(long)]
    pub detections: PathBuf,
    /// Dataset directory; supplies ground truth for rank reporting and
    /// the oracle knowledge flags.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output rankings JSON-lines file.
    #[arg(long)]
    pub out: PathBuf,
    /// Known digit as position:digit, e.g. 0:2.
    #[arg(long)]
    pub vpk: Option<String>,
    /// Known pressed-key set, e.g. 0,2.
    #[arg(long)]
    pub thermal: Option<String>,
    /// Derive the VPK digit at this position from ground truth.
    #[arg(long, conflicts_with = "vpk")]
    pub vpk_oracle: Option<usize>,
    /// Derive the pressed-key set from ground truth.
    #[arg(long, conflicts_with = "thermal")]
    pub thermal_oracle: bool,
    /// Candidates kept per record.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Rankings JSON-lines file (from `attack`).
    #[arg(long)]
    pub rankings: PathBuf,
    /// Output directory for report files.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,
    #[arg(long, default_value = "attack")]
    pub label: String,
    /// Baseline for improvement factors: rg or rgvpk.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Also write a per-PIN attempts-to-50% table.
    #[arg(long)]
    pub p50: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

fn parse_mode(s: &str) -> Result<TypistMode> {
    TypistMode::from_label(s)
        .ok_or_else(|| ToolError::Usage(format!("unknown typist mode '{s}'")))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut generator = GeneratorConfig::default();
    generator.seed = args.seed;
    generator.typist_mode = parse_mode(&args.mode)?;
    generator.noise_snr_db = args.snr;
    generator.sample_rate = args.sample_rate;

    let n_pins = match &args.pin_list {
        Some(list) => {
            let pins: Vec<Pin> = list
                .split(',')
                .map(|s| {
                    Pin::parse(s.trim())
                        .map_err(|e| ToolError::Usage(format!("bad PIN '{s}': {e}")))
                })
                .collect::<Result<_>>()?;
            let n = pins.len();
            generator.pin_source = PinSource::FixedList(pins);
            n
        }
        None => args.pins,
    };
    let spec = DatasetSpec {
        generator,
        n_pins,
        entries_per_pin: args.entries,
    };
    let manifest = generate_dataset(&spec, &args.out)?;
    eprintln!("wrote {} clips to {}", manifest.n_clips, args.out.display());
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let manifest = load_manifest(&args.dataset)?;
    let truth: Option<BTreeMap<String, TruthRecord>> = if args.truth {
        let records = load_truth(&args.dataset)?;
        let map: BTreeMap<String, TruthRecord> = records
            .into_iter()
            .map(|r| (r.trace_id.clone(), r))
            .collect();
        let missing: Vec<&str> = manifest
            .clips
            .iter()
            .filter(|c| !map.contains_key(&c.trace_id))
            .map(|c| c.trace_id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(ToolError::Data(format!(
                "truth.jsonl is missing trace ids: {}",
                missing.join(", ")
            )));
        }
        Some(map)
    } else {
        None
    };

    let pipeline = PipelineConfig::default();
    let mut records = Vec::new();
    let mut failures = 0usize;
    for clip_entry in &manifest.clips {
        let mut record = DetectionRecord {
            format_version: REPORT_FORMAT_VERSION,
            trace_id: clip_entry.trace_id.clone(),
            timestamps_ms: None,
            error: None,
            truth: None,
        };
        let detection = read_wav(&clip_path(&args.dataset, clip_entry))
            .and_then(|clip| {
                detect_keystrokes(&clip, &pipeline).map_err(|e| ToolError::Data(e.to_string()))
            });
        match detection {
            Ok(det) => {
                if let Some(truth) = &truth {
                    let t = &truth[&clip_entry.trace_id];
                    let report =
                        match_ground_truth(&det, &t.timestamps_ms, pipeline.match_tolerance_ms);
                    record.truth = Some(DetectionTruth {
                        n_truth: report.n_truth,
                        n_matched: report.matches.len(),
                        detection_rate: report.detection_rate,
                        errors_ms: report
                            .matches
                            .iter()
                            .map(|m| m.signed_error_ms)
                            .collect(),
                        gap_errors_ms: report.gap_errors_ms.clone(),
                    });
                }
                record.timestamps_ms = Some(det.timestamps_ms);
            }
            Err(e) => {
                failures += 1;
                record.error = Some(e.to_string());
            }
        }
        records.push(record);
    }
    write_jsonl(&args.out, &records)?;
    eprintln!(
        "processed {} clips ({} failed)",
        manifest.clips.len(),
        failures
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let truth = load_truth(&args.dataset)?;
    let traces = truth
        .iter()
        .map(|r| r.to_trace())
        .collect::<Result<Vec<_>>>()?;
    let mode_filter = args.mode.as_deref().map(parse_mode).transpose()?;
    let layout = KeypadLayout::standard();
    let outcome = TimingModel::fit(&traces, &layout, mode_filter, args.min_samples)
        .map_err(|e| ToolError::Data(e.to_string()))?;
    if !outcome.rejected.is_empty() {
        eprintln!("rejected {} traces during fitting", outcome.rejected.len());
    }
    save_model(&args.out, &outcome.model)?;
    eprintln!("wrote model to {}", args.out.display());
    Ok(())
}

fn parse_vpk(s: &str) -> Result<(usize, u8)> {
    let bad = || ToolError::Usage(format!("--vpk expects position:digit, got '{s}'"));
    let (pos, digit) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        pos.trim().parse().map_err(|_| bad())?,
        digit.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_thermal(s: &str) -> Result<BTreeSet<u8>> {
    s.split(',')
        .map(|d| {
            d.trim()
                .parse()
                .map_err(|_| ToolError::Usage(format!("--thermal expects digits, got '{s}'")))
        })
        .collect()
}

fn knowledge_for_trace(
    args: &AttackArgs,
    model_mode: TypistMode,
    truth: Option<&TruthRecord>,
) -> Result<KnowledgeSpec> {
    let mut spec = KnowledgeSpec {
        typist_mode: Some(model_mode),
        ..KnowledgeSpec::none()
    };
    if let Some(vpk) = &args.vpk {
        spec.vpk = Some(parse_vpk(vpk)?);
    }
    if let Some(thermal) = &args.thermal {
        spec.thermal_keys = Some(parse_thermal(thermal)?);
    }
    let oracle_pin = |truth: Option<&TruthRecord>| -> Result<Pin> {
        let t = truth.ok_or_else(|| {
            ToolError::Usage("oracle knowledge flags need --dataset for ground truth".into())
        })?;
        Pin::parse(&t.pin).map_err(|e| ToolError::Data(format!("trace {}: {e}", t.trace_id)))
    };
    if let Some(pos) = args.vpk_oracle {
        if pos > 3 {
            return Err(ToolError::Usage(format!("--vpk-oracle position out of range: {pos}")));
        }
        spec.vpk = Some((pos, oracle_pin(truth)?.digit(pos)));
    }
    if args.thermal_oracle {
        spec.thermal_keys = Some(oracle_pin(truth)?.distinct_digits());
    }
    spec.validate()
        .map_err(|e| ToolError::Usage(e.to_string()))?;
    Ok(spec)
}

fn ranking_record(
    args: &AttackArgs,
    trace_id: &str,
    ranking: Option<&PinRanking>,
    model_id: &str,
    true_pin: Option<Pin>,
) -> RankingRecord {
    let (n_candidates, top) = match ranking {
        Some(r) => (
            r.len(),
            r.candidates()
                .iter()
                .take(args.top)
                .map(|(p, s)| (p.to_string(), *s))
                .collect(),
        ),
        None => (0, Vec::new()),
    };
    let rank = true_pin.and_then(|p| ranking.and_then(|r| attempts_to_guess(r, p)));
    RankingRecord {
        format_version: REPORT_FORMAT_VERSION,
        trace_id: trace_id.to_string(),
        model_id: model_id.to_string(),
        n_candidates,
        top,
        true_pin: true_pin.map(|p| p.to_string()),
        rank,
        not_found: true_pin.is_some() && rank.is_none(),
    }
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let model_mode = model.typist_mode();
    let mut bank = ModelBank::new();
    bank.insert(model_mode, model);

    let detections: Vec<DetectionRecord> = read_jsonl(&args.detections)?;
    let truth: BTreeMap<String, TruthRecord> = match &args.dataset {
        Some(dir) => load_truth(dir)?
            .into_iter()
            .map(|r| (r.trace_id.clone(), r))
            .collect(),
        None => BTreeMap::new(),
    };

    let layout = KeypadLayout::standard();
    let index = layout.triplet_index();
    let mut records = Vec::new();
    for det in &detections {
        let truth_rec = truth.get(&det.trace_id);
        let true_pin = truth_rec
            .map(|t| {
                Pin::parse(&t.pin)
                    .map_err(|e| ToolError::Data(format!("trace {}: {e}", t.trace_id)))
            })
            .transpose()?;
        let gaps = det.timestamps_ms.as_deref().and_then(|ts| {
            if ts.len() != 4 {
                return None;
            }
            GapSequence::new([ts[1] - ts[0], ts[2] - ts[1], ts[3] - ts[2]]).ok()
        });
        let record = match gaps {
            Some(gaps) => {
                let knowledge = knowledge_for_trace(&args, model_mode, truth_rec)?;
                let ranking = run_attack(&bank, &gaps, &knowledge, &layout, &index)
                    .map_err(|e| ToolError::Data(e.to_string()))?;
                ranking_record(&args, &det.trace_id, Some(&ranking), &ranking.model_id, true_pin)
            }
            // extraction failed for this clip: emit an empty ranking so
            // evaluation still counts the trial
            None => ranking_record(&args, &det.trace_id, None, "none", true_pin),
        };
        records.push(record);
    }
    write_jsonl(&args.out, &records)?;
    eprintln!("ranked {} traces", records.len());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let rankings: Vec<RankingRecord> = read_jsonl(&args.rankings)?;
    if rankings.is_empty() {
        return Err(ToolError::Data("rankings file is empty".into()));
    }
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| ToolError::file(&args.out_dir, e.to_string()))?;

    let outcomes: Vec<GuessOutcome> = rankings.iter().map(|r| r.rank.into()).collect();
    let cdf = guessing_cdf(&outcomes, args.k_max, &args.label)
        .map_err(|e| ToolError::Data(e.to_string()))?;
    write_cdf_csv(&args.out_dir.join("cdf.csv"), &cdf)?;

    let improvement = match args.baseline.as_deref() {
        None => None,
        Some(name) => {
            let baseline = match name {
                "rg" => Baseline::Rg,
                "rgvpk" => Baseline::Rgvpk,
                other => {
                    return Err(ToolError::Usage(format!(
                        "unknown baseline '{other}' (expected rg or rgvpk)"
                    )))
                }
            };
            let mut points = Vec::new();
            for k in [1usize, 3, 5, 10] {
                if k <= args.k_max {
                    let factor = improvement_factor(&cdf, &baseline, k)
                        .map_err(|e| ToolError::Data(e.to_string()))?;
                    points.push(ImprovementPoint {
                        k,
                        baseline: name.to_string(),
                        factor,
                    });
                }
            }
            Some(points)
        }
    };

    let summary = EvalSummary {
        format_version: REPORT_FORMAT_VERSION,
        label: args.label.clone(),
        n_trials: cdf.n_trials,
        cdf_at: [1usize, 3, 5, 10, 100]
            .iter()
            .filter(|&&k| k <= args.k_max)
            .map(|&k| CdfPoint {
                k,
                fraction: cdf.at(k),
            })
            .collect(),
        improvement,
    };
    write_json(&args.out_dir.join("summary.json"), &summary)?;

    if args.p50 {
        let mut per_pin: BTreeMap<Pin, Vec<GuessOutcome>> = BTreeMap::new();
        for r in &rankings {
            let Some(pin_str) = &r.true_pin else {
                return Err(ToolError::Data(format!(
                    "trace {}: --p50 needs true_pin in every ranking record",
                    r.trace_id
                )));
            };
            let pin = Pin::parse(pin_str)
                .map_err(|e| ToolError::Data(format!("trace {}: {e}", r.trace_id)))?;
            per_pin.entry(pin).or_default().push(r.rank.into());
        }
        let table = p50_table(&p50(&per_pin));
        fs::write(args.out_dir.join("p50.txt"), table)
            .map_err(|e| ToolError::file(&args.out_dir, e.to_string()))?;
    }
    eprintln!("wrote reports to {}", args.out_dir.display());
    Ok(())
}

/// Pool per-clip truth comparisons from a detections file into one
/// summary report. Used by tests and available to library consumers.
pub fn summarize_detections(records: &[DetectionRecord]) -> Result<ExtractionReport> {
    use pinsound_core::audio::{Match, MatchReport};
    let reports: Vec<MatchReport> = records
        .iter()
        .filter_map(|r| r.truth.as_ref())
        .map(|t| MatchReport {
            n_truth: t.n_truth,
            n_detected: t.n_matched,
            matches: t
                .errors_ms
                .iter()
                .enumerate()
                .map(|(i, &e)| Match {
                    truth_index: i,
                    detected_index: i,
                    signed_error_ms: e,
                })
                .collect(),
            misses: t.n_truth - t.n_matched,
            false_positives: 0,
            detection_rate: t.detection_rate,
            mean_error_ms: 0.0,
            std_error_ms: 0.0,
            gap_errors_ms: t.gap_errors_ms.clone(),
            p75_abs_gap_error_ms: 0.0,
            p97_abs_gap_error_ms: 0.0,
        })
        .collect();
    if reports.is_empty() {
        return Err(ToolError::Data(
            "no ground-truth comparisons in detections file".into(),
        ));
    }
    let summary =
        extraction_error_report(&reports).map_err(|e| ToolError::Data(e.to_string()))?;
    Ok(ExtractionReport::from(&summary))
}
