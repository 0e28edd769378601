//! On-disk dataset layout: a manifest, a ground-truth JSON-lines file
//! and one WAV clip per PIN entry.
//!
//! ```text
//! out/
//!   manifest.json     metadata + clip list
//!   truth.jsonl       one record per trace (PIN, timestamps, mode)
//!   clips/
//!     trace-00000.wav
//!     ...
//! ```
//!
//! Generation is deterministic: rerunning with the same spec produces
//! byte-identical files.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pinsound_core::keypad::{KeypadLayout, Pin};
use pinsound_core::synth::{render_audio, sample_trace, GeneratorConfig, PinSource};
use pinsound_core::trace::{KeystrokeTrace, TypistMode};

use crate::error::{Result, ToolError};
use crate::wav::write_wav;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub sample_rate: u32,
    pub typist_mode: String,
    pub noise_snr_db: f64,
    pub n_clips: usize,
    pub clips: Vec<ManifestClip>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestClip {
    pub trace_id: String,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TruthRecord {
    pub trace_id: String,
    pub pin: String,
    pub typist_mode: String,
    pub timestamps_ms: [f64; 4],
}

impl TruthRecord {
    pub fn to_trace(&self) -> Result<KeystrokeTrace> {
        let pin = Pin::parse(&self.pin)
            .map_err(|e| ToolError::Data(format!("trace {}: {e}", self.trace_id)))?;
        let typist_mode = TypistMode::from_label(&self.typist_mode).ok_or_else(|| {
            ToolError::Data(format!(
                "trace {}: unknown typist mode '{}'",
                self.trace_id, self.typist_mode
            ))
        })?;
        Ok(KeystrokeTrace {
            trace_id: self.trace_id.clone(),
            timestamps_ms: self.timestamps_ms,
            pin: Some(pin),
            typist_mode,
        })
    }
}

/// What to generate.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub generator: GeneratorConfig,
    /// Number of distinct entries when PINs are random; with a fixed
    /// list, each listed PIN is entered `entries_per_pin` times.
    pub n_pins: usize,
    pub entries_per_pin: usize,
}

/// Write a complete dataset under `out_dir`.
pub fn generate_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<Manifest> {
    spec.generator
        .validate()
        .map_err(|e| ToolError::Usage(e.to_string()))?;
    if spec.n_pins == 0 || spec.entries_per_pin == 0 {
        return Err(ToolError::Usage("need at least one PIN and one entry".into()));
    }
    let clips_dir = out_dir.join("clips");
    fs::create_dir_all(&clips_dir).map_err(|e| ToolError::file(out_dir, e.to_string()))?;

    let layout = KeypadLayout::standard();
    // PIN selection uses its own stream so per-trace streams stay stable
    let mut pin_rng = ChaCha8Rng::seed_from_u64(spec.generator.seed.wrapping_add(1));
    let pins: Vec<Pin> = match &spec.generator.pin_source {
        PinSource::UniformRandom => (0..spec.n_pins)
            .map(|_| Pin::from_index(pin_rng.gen_range(0..10_000u16)))
            .collect(),
        PinSource::FixedList(list) => list.clone(),
    };

    let mut clips = Vec::new();
    let mut truth = Vec::new();
    let mut idx = 0usize;
    for &pin in &pins {
        for _ in 0..spec.entries_per_pin {
            let trace_id = format!("trace-{idx:05}");
            let mut rng = spec.generator.trace_rng(&trace_id);
            let trace = sample_trace(pin, &spec.generator, &layout, trace_id.clone(), &mut rng);
            let clip = render_audio(&trace, &spec.generator, &mut rng)
                .map_err(|e| ToolError::Internal(e.to_string()))?;
            let file = format!("clips/{trace_id}.wav");
            write_wav(&out_dir.join(&file), &clip)?;
            clips.push(ManifestClip {
                trace_id: trace_id.clone(),
                file,
            });
            truth.push(TruthRecord {
                trace_id,
                pin: pin.to_string(),
                typist_mode: trace.typist_mode.label().to_string(),
                timestamps_ms: trace.timestamps_ms,
            });
            idx += 1;
        }
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed: spec.generator.seed,
        sample_rate: spec.generator.sample_rate,
        typist_mode: spec.generator.typist_mode.label().to_string(),
        noise_snr_db: spec.generator.noise_snr_db,
        n_clips: clips.len(),
        clips,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_jsonl(&out_dir.join("truth.jsonl"), &truth)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| ToolError::file(&path, e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ToolError::Data(format!(
            "unsupported manifest format_version {}",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

pub fn load_truth(dir: &Path) -> Result<Vec<TruthRecord>> {
    read_jsonl(&dir.join("truth.jsonl"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| ToolError::file(path, e.to_string()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| ToolError::file(path, e.to_string()))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")
            .map_err(|e| ToolError::file(path, e.to_string()))?;
    }
    w.flush().map_err(|e| ToolError::file(path, e.to_string()))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| ToolError::file(path, e.to_string()))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ToolError::file(path, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| ToolError::file(path, format!("line {}: {e}", i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

/// Resolve a manifest clip path relative to the dataset directory.
pub fn clip_path(dir: &Path, clip: &ManifestClip) -> PathBuf {
    dir.join(&clip.file)
}
