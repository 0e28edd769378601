//! WAV reading and writing. Clips are stored as 16-bit PCM mono; on
//! read, only the first channel of multi-channel files is kept.

use std::path::Path;

use pinsound_core::audio::AudioClip;

use crate::error::{Result, ToolError};

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| ToolError::file(path, e.to_string()))?;
    for &s in &clip.samples {
        let v = (s.clamp(-1.0, 1.0) * i16::MAX as f64) as i16;
        writer
            .write_sample(v)
            .map_err(|e| ToolError::file(path, e.to_string()))?;
    }
    writer
        .finalize()
        .map_err(|e| ToolError::file(path, e.to_string()))?;
    Ok(())
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let mut reader =
        hound::WavReader::open(path).map_err(|e| ToolError::file(path, e.to_string()))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| ToolError::file(path, e.to_string()))?
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ToolError::file(path, e.to_string()))?,
    };
    Ok(AudioClip::new(spec.sample_rate, samples))
}
