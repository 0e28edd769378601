//! Round-trip tests for the on-disk formats.

use std::collections::BTreeMap;

use pinsound_core::audio::AudioClip;
use pinsound_core::keypad::{DistanceClass, KeypadLayout, Pin};
use pinsound_core::synth::{GeneratorConfig, PinSource};
use pinsound_core::timing::{ClassFit, GammaParams, TimingModel};
use pinsound_core::trace::TypistMode;
use pinsound_tools::dataset::{
    generate_dataset, load_manifest, load_truth, read_jsonl, write_jsonl, DatasetSpec,
};
use pinsound_tools::model_fmt::{load_model, model_from_str, model_to_string, save_model};
use pinsound_tools::reports::RankingRecord;
use pinsound_tools::wav::{read_wav, write_wav};

fn sample_model() -> TimingModel {
    let per_class: BTreeMap<DistanceClass, ClassFit> = DistanceClass::ALL
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            (
                c,
                ClassFit {
                    params: GammaParams::new(7.3 + i as f64 * 0.113, 21.07 / (1.0 + i as f64)),
                    sample_count: 100 + i,
                    fallback: i == 7,
                },
            )
        })
        .collect();
    TimingModel::from_parts(
        per_class,
        GammaParams::new(8.123456789012345, 26.98765432109876),
        1234,
        TypistMode::SingleFinger,
        10,
    )
}

#[test]
fn model_text_round_trip_is_exact() {
    let model = sample_model();
    let text = model_to_string(&model);
    let back = model_from_str(&text).unwrap();
    assert_eq!(back, model);
    // serialization is stable
    assert_eq!(model_to_string(&back), text);
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    let model = sample_model();
    save_model(&path, &model).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
}

#[test]
fn model_parse_errors() {
    assert!(model_from_str("").is_err());
    assert!(model_from_str("pinsound-model 99\n").is_err());
    // missing class lines
    let partial = "pinsound-model 1\ntypist_mode mixed\nmin_samples 10\nglobal 8 25 100\n";
    assert!(model_from_str(partial).is_err());
    let full = model_to_string(&sample_model());
    let broken = full.replace("class Z", "class QQ");
    assert!(model_from_str(&broken).is_err());
}

#[test]
fn wav_round_trip_within_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.wav");
    let samples: Vec<f64> = (0..4800)
        .map(|i| 0.7 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 48_000.0).sin())
        .collect();
    let clip = AudioClip::new(48_000, samples);
    write_wav(&path, &clip).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.sample_rate, 48_000);
    assert_eq!(back.samples.len(), clip.samples.len());
    let max_err = clip
        .samples
        .iter()
        .zip(&back.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    // 16-bit quantization step is ~3e-5
    assert!(max_err < 1e-4, "max error {max_err}");
}

#[test]
fn dataset_generation_layout_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let mut generator = GeneratorConfig::default();
    generator.seed = 7;
    generator.noise_snr_db = 20.0;
    generator.pin_source = PinSource::FixedList(
        ["2200", "5555", "1004", "1038", "8556"]
            .iter()
            .map(|s| Pin::parse(s).unwrap())
            .collect(),
    );
    let spec = DatasetSpec {
        generator,
        n_pins: 5,
        entries_per_pin: 2,
    };
    let manifest = generate_dataset(&spec, dir.path()).unwrap();
    assert_eq!(manifest.n_clips, 10);
    assert_eq!(load_manifest(dir.path()).unwrap(), manifest);

    let truth = load_truth(dir.path()).unwrap();
    assert_eq!(truth.len(), 10);
    let pins: Vec<&str> = truth.iter().map(|t| t.pin.as_str()).collect();
    assert_eq!(pins[0], "2200");
    assert_eq!(pins[1], "2200");
    assert_eq!(pins[9], "8556");
    for (clip, t) in manifest.clips.iter().zip(&truth) {
        assert_eq!(clip.trace_id, t.trace_id);
        assert!(dir.path().join(&clip.file).exists());
        // first press sits at the configured clip padding
        assert_eq!(t.timestamps_ms[0], 500.0);
        let layout = KeypadLayout::standard();
        let trace = t.to_trace().unwrap();
        assert_eq!(trace.pin, Some(Pin::parse(&t.pin).unwrap()));
        let _ = layout.triplet_of_pin(trace.pin.unwrap());
    }
}

#[test]
fn dataset_regeneration_is_byte_identical() {
    use sha2::{Digest, Sha256};

    let hash_dir = |spec: &DatasetSpec| {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(spec, dir.path()).unwrap();
        let mut files: Vec<_> = walk(dir.path());
        files.sort();
        let mut hasher = Sha256::new();
        for f in files {
            hasher.update(std::fs::read(&f).unwrap());
        }
        hex::encode(hasher.finalize())
    };
    let spec = DatasetSpec {
        generator: GeneratorConfig {
            seed: 42,
            ..GeneratorConfig::default()
        },
        n_pins: 3,
        entries_per_pin: 2,
    };
    assert_eq!(hash_dir(&spec), hash_dir(&spec));
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rankings.jsonl");
    let records = vec![
        RankingRecord {
            format_version: 1,
            trace_id: "trace-00000".into(),
            model_id: "gamma-single_finger".into(),
            n_candidates: 10_000,
            top: vec![("5555".into(), -12.5), ("2200".into(), -13.0)],
            true_pin: Some("5555".into()),
            rank: Some(1),
            not_found: false,
        },
        RankingRecord {
            format_version: 1,
            trace_id: "trace-00001".into(),
            model_id: "gamma-single_finger".into(),
            n_candidates: 0,
            top: Vec::new(),
            true_pin: Some("1234".into()),
            rank: None,
            not_found: true,
        },
    ];
    write_jsonl(&path, &records).unwrap();
    let back: Vec<RankingRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, records);
}
