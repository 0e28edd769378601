//! Keystroke detection from PIN-pad feedback audio.
//!
//! Pipeline: amplitude normalization, Butterworth band-pass around the
//! beep frequency (cascaded second-order sections), amplitude gating,
//! sliding-maximum envelope, then onset extraction from the envelope
//! plateaus with a minimum-separation constraint.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::timing::GapSequence;

/// Mono audio buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> AudioClip {
        assert!(sample_rate > 0);
        AudioClip {
            sample_rate,
            samples,
        }
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate as f64
    }
}

/// Parameters of the detection pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Band-pass filter order (number of poles); must be even.
    pub filter_order: u32,
    /// Beep center frequency, Hz.
    pub center_freq_hz: f64,
    /// Pass-band width, Hz (center ± bandwidth/2).
    pub bandwidth_hz: f64,
    /// Samples with rectified amplitude below this are zeroed.
    pub gate_threshold: f64,
    /// Sliding-maximum window length in samples; 0 means sample_rate / 10.
    pub window_samples: usize,
    /// Minimum distance between reported keystrokes, ms.
    pub min_separation_ms: f64,
    /// Ground-truth matching tolerance, ms.
    pub match_tolerance_ms: f64,
    /// Inter-entry split threshold for segmenting recordings, ms.
    pub inter_entry_gap_ms: f64,
    /// Envelope peaks below this fraction of the strongest peak are
    /// treated as noise.
    pub peak_rel_threshold: f64,
    /// Onset threshold as a fraction of the peak envelope value.
    pub onset_rel_threshold: f64,
    /// Smoothing window for onset refinement, ms.
    pub onset_smooth_ms: f64,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            filter_order: 16,
            center_freq_hz: 5600.0,
            bandwidth_hz: 800.0,
            gate_threshold: 0.01,
            window_samples: 0,
            min_separation_ms: 100.0,
            match_tolerance_ms: 25.0,
            inter_entry_gap_ms: 1500.0,
            peak_rel_threshold: 0.55,
            onset_rel_threshold: 0.25,
            onset_smooth_ms: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn window_for(&self, sample_rate: u32) -> usize {
        if self.window_samples == 0 {
            (sample_rate / 10) as usize
        } else {
            self.window_samples
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), AudioError> {
        let nyquist = sample_rate as f64 / 2.0;
        let lo = self.center_freq_hz - self.bandwidth_hz / 2.0;
        let hi = self.center_freq_hz + self.bandwidth_hz / 2.0;
        if self.filter_order == 0 || self.filter_order % 2 != 0 {
            return Err(AudioError::BadConfig("filter_order must be a positive even integer"));
        }
        if !(lo > 0.0 && hi < nyquist) {
            return Err(AudioError::BadConfig("pass-band must lie inside (0, Nyquist)"));
        }
        if !(self.gate_threshold > 0.0 && self.gate_threshold < 1.0) {
            return Err(AudioError::BadConfig("gate_threshold must be in (0, 1)"));
        }
        if self.window_for(sample_rate) == 0 {
            return Err(AudioError::BadConfig("window_samples must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AudioError {
    EmptyClip,
    SilentClip,
    BadConfig(&'static str),
    UnstableFilter { section: usize, pole_magnitude: f64 },
}

impl fmt::Display for AudioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AudioError::EmptyClip => f.write_str("empty audio clip"),
            AudioError::SilentClip => f.write_str("all-zero audio clip, nothing to normalize"),
            AudioError::BadConfig(msg) => write!(f, "invalid pipeline config: {msg}"),
            AudioError::UnstableFilter {
                section,
                pole_magnitude,
            } => write!(
                f,
                "unstable filter design: section {section} pole magnitude {pole_magnitude}"
            ),
        }
    }
}

/// Scale a clip so that max |amplitude| is exactly 1.
pub fn normalize(clip: &AudioClip) -> Result<AudioClip, AudioError> {
    if clip.samples.is_empty() {
        return Err(AudioError::EmptyClip);
    }
    let peak = clip.samples.iter().fold(0.0f64, |m, &x| m.max(libm::fabs(x)));
    if peak == 0.0 {
        return Err(AudioError::SilentClip);
    }
    let scale = 1.0 / peak;
    Ok(AudioClip {
        sample_rate: clip.sample_rate,
        samples: clip.samples.iter().map(|&x| x * scale).collect(),
    })
}

/// One second-order section, direct form II transposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// a0 is normalized to 1; stored are a1, a2.
    pub a: [f64; 2],
}

impl Biquad {
    fn apply(&self, input: &[f64], output: &mut Vec<f64>) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        output.clear();
        output.reserve(input.len());
        for &x in input {
            let y = self.b[0] * x + s1;
            s1 = self.b[1] * x - self.a[0] * y + s2;
            s2 = self.b[2] * x - self.a[1] * y;
            output.push(y);
        }
    }

    /// Complex frequency response at normalized angular frequency `w`.
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::new(libm::cos(-w), libm::sin(-w));
        let z2 = z1 * z1;
        let num = Complex64::new(self.b[0], 0.0) + z1 * self.b[1] + z2 * self.b[2];
        let den = Complex64::new(1.0, 0.0) + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }
}

/// A designed band-pass filter as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate: u32,
}

impl SosFilter {
    /// Magnitude response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * core::f64::consts::PI * freq_hz / self.sample_rate as f64;
        self.sections
            .iter()
            .map(|s| s.response(w).norm())
            .product()
    }

    /// Magnitude response in dB.
    pub fn magnitude_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * libm::log10(self.magnitude_at(freq_hz))
    }

    /// Group delay at `freq_hz` in milliseconds, by numeric phase slope.
    pub fn group_delay_ms_at(&self, freq_hz: f64) -> f64 {
        let fs = self.sample_rate as f64;
        let w = 2.0 * core::f64::consts::PI * freq_hz / fs;
        let dw = 1e-5;
        let response = |w: f64| {
            self.sections
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
        };
        // phase difference of nearby points, wrap-safe via the ratio
        let ratio = response(w + dw) / response(w - dw);
        let dphi = libm::atan2(ratio.im, ratio.re);
        let delay_samples = -dphi / (2.0 * dw);
        delay_samples * 1000.0 / fs
    }

    /// Run the cascade over a signal (single forward pass, zero initial state).
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut current = input.to_vec();
        let mut scratch = Vec::new();
        for section in &self.sections {
            section.apply(&current, &mut scratch);
            core::mem::swap(&mut current, &mut scratch);
        }
        current
    }
}

/// Design a Butterworth band-pass by bilinear transform with frequency
/// pre-warping. `order` counts poles of the band-pass (16 -> 8 sections).
pub fn design_bandpass(
    order: u32,
    center_hz: f64,
    bandwidth_hz: f64,
    sample_rate: u32,
) -> Result<SosFilter, AudioError> {
    let fs = sample_rate as f64;
    let f_lo = center_hz - bandwidth_hz / 2.0;
    let f_hi = center_hz + bandwidth_hz / 2.0;
    if !(f_lo > 0.0 && f_hi < fs / 2.0) {
        return Err(AudioError::BadConfig("pass-band must lie inside (0, Nyquist)"));
    }
    if order == 0 || order % 2 != 0 {
        return Err(AudioError::BadConfig("filter_order must be a positive even integer"));
    }
    let n_proto = (order / 2) as usize;

    // pre-warped analog edge frequencies
    let warp = |f: f64| 2.0 * fs * libm::tan(core::f64::consts::PI * f / fs);
    let w_lo = warp(f_lo);
    let w_hi = warp(f_hi);
    let w0_sq = w_lo * w_hi;
    let bw = w_hi - w_lo;

    // Butterworth low-pass prototype poles on the unit circle, left half plane
    let mut proto: Vec<Complex64> = Vec::new();
    for k in 1..=n_proto {
        let theta = core::f64::consts::PI * (2.0 * k as f64 + n_proto as f64 - 1.0)
            / (2.0 * n_proto as f64);
        proto.push(Complex64::new(libm::cos(theta), libm::sin(theta)));
    }

    // band-pass transform: each prototype pole p yields the two roots of
    // s^2 - p*bw*s + w0^2 = 0
    let mut analog_pole_pairs: Vec<Complex64> = Vec::new();
    let mut real_analog_poles: Vec<f64> = Vec::new();
    for p in proto {
        if libm::fabs(p.im) < 1e-12 {
            // real prototype pole (odd prototype order)
            let pb = p.re * bw;
            let disc = pb * pb - 4.0 * w0_sq;
            if disc < 0.0 {
                let s = Complex64::new(pb / 2.0, libm::sqrt(-disc) / 2.0);
                analog_pole_pairs.push(s);
            } else {
                let r = libm::sqrt(disc);
                real_analog_poles.push((pb + r) / 2.0);
                real_analog_poles.push((pb - r) / 2.0);
            }
        } else if p.im > 0.0 {
            // complex pair handled via the upper-half pole; the lower one
            // contributes the conjugate z-poles automatically
            let pb = p * bw;
            let disc = pb * pb - Complex64::new(4.0 * w0_sq, 0.0);
            let r = disc.sqrt();
            analog_pole_pairs.push((pb + r) / 2.0);
            analog_pole_pairs.push((pb - r) / 2.0);
        }
    }

    // bilinear transform to z-plane
    let two_fs = 2.0 * fs;
    let bilinear = |s: Complex64| (Complex64::new(two_fs, 0.0) + s) / (Complex64::new(two_fs, 0.0) - s);

    let mut sections: Vec<Biquad> = Vec::new();
    for zp in analog_pole_pairs.iter().map(|&s| bilinear(s)) {
        // denominator from the conjugate pole pair; numerator carries one
        // zero at z=1 and one at z=-1
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * zp.re, zp.norm_sqr()],
        });
    }
    let mut reals = real_analog_poles.iter().map(|&s| bilinear(Complex64::new(s, 0.0)).re);
    while let (Some(r1), Some(r2)) = (reals.next(), reals.next()) {
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-(r1 + r2), r1 * r2],
        });
    }

    // stability check
    for (i, sec) in sections.iter().enumerate() {
        // roots of z^2 + a1 z + a2
        let a1 = sec.a[0];
        let a2 = sec.a[1];
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        for root in [
            (Complex64::new(-a1, 0.0) + disc) / 2.0,
            (Complex64::new(-a1, 0.0) - disc) / 2.0,
        ] {
            let mag = root.norm();
            if mag >= 1.0 {
                return Err(AudioError::UnstableFilter {
                    section: i,
                    pole_magnitude: mag,
                });
            }
        }
    }

    // normalize each section to unit gain at the center frequency
    let wc = 2.0 * core::f64::consts::PI * center_hz / fs;
    for sec in sections.iter_mut() {
        let g = sec.response(wc).norm();
        let scale = 1.0 / g;
        sec.b = [sec.b[0] * scale, sec.b[1] * scale, sec.b[2] * scale];
    }

    Ok(SosFilter {
        sections,
        sample_rate,
    })
}

/// Band-pass a clip with the configured Butterworth design.
pub fn bandpass(clip: &AudioClip, cfg: &PipelineConfig) -> Result<AudioClip, AudioError> {
    cfg.validate(clip.sample_rate)?;
    let filter = design_bandpass(
        cfg.filter_order,
        cfg.center_freq_hz,
        cfg.bandwidth_hz,
        clip.sample_rate,
    )?;
    Ok(AudioClip {
        sample_rate: clip.sample_rate,
        samples: filter.filter(&clip.samples),
    })
}

/// Sliding maximum with a centered window, monotonic-deque algorithm.
///
/// `out[i] = max(signal[i - w/2 ..= i + (w - 1 - w/2)])`, clamped at the
/// edges. Linear time in the signal length.
pub fn sliding_max(signal: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1);
    let n = signal.len();
    let left = window / 2;
    let right = window - 1 - left;
    let mut out = vec![0.0f64; n];
    let mut deque: VecDeque<usize> = VecDeque::new();
    let push = |deque: &mut VecDeque<usize>, j: usize| {
        while let Some(&back) = deque.back() {
            if signal[back] <= signal[j] {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(j);
    };
    // prime with the right half of the first window
    for j in 0..right.min(n) {
        push(&mut deque, j);
    }
    for i in 0..n {
        let j = i + right;
        if j < n {
            push(&mut deque, j);
        }
        // expire the left edge
        while let Some(&front) = deque.front() {
            if front + left < i {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[i] = signal[*deque.front().expect("window is never empty")];
    }
    out
}

/// Rectify, gate below threshold, then sliding-maximum envelope.
pub fn gate_and_envelope(clip: &AudioClip, cfg: &PipelineConfig) -> AudioClip {
    let window = cfg.window_for(clip.sample_rate);
    let gated: Vec<f64> = clip
        .samples
        .iter()
        .map(|&x| {
            let a = libm::fabs(x);
            if a < cfg.gate_threshold {
                0.0
            } else {
                a
            }
        })
        .collect();
    AudioClip {
        sample_rate: clip.sample_rate,
        samples: sliding_max(&gated, window),
    }
}

/// Result of running the detection pipeline over one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected press instants, ms from clip start, strictly increasing.
    pub timestamps_ms: Vec<f64>,
    /// Envelope values at the detected peaks.
    pub peak_values: Vec<f64>,
    /// Processed envelope, kept only when requested.
    pub envelope: Option<Vec<f64>>,
    pub config_echo: PipelineConfig,
}

struct Candidate {
    peak_sample: usize,
    value: f64,
}

/// Full detection pipeline: normalize, band-pass, gate + envelope, onset
/// extraction with minimum separation.
pub fn detect_keystrokes(
    clip: &AudioClip,
    cfg: &PipelineConfig,
) -> Result<DetectionResult, AudioError> {
    detect_keystrokes_opts(clip, cfg, false)
}

/// Like [`detect_keystrokes`], optionally retaining the envelope for
/// debugging output.
pub fn detect_keystrokes_opts(
    clip: &AudioClip,
    cfg: &PipelineConfig,
    keep_envelope: bool,
) -> Result<DetectionResult, AudioError> {
    cfg.validate(clip.sample_rate)?;
    let fs = clip.sample_rate as f64;
    let empty = |envelope: Option<Vec<f64>>| DetectionResult {
        timestamps_ms: Vec::new(),
        peak_values: Vec::new(),
        envelope,
        config_echo: cfg.clone(),
    };

    let normalized = match normalize(clip) {
        Ok(c) => c,
        Err(AudioError::SilentClip) => return Ok(empty(None)),
        Err(e) => return Err(e),
    };
    let filter = design_bandpass(
        cfg.filter_order,
        cfg.center_freq_hz,
        cfg.bandwidth_hz,
        clip.sample_rate,
    )?;
    let group_delay_ms = filter.group_delay_ms_at(cfg.center_freq_hz);
    let filtered = AudioClip {
        sample_rate: clip.sample_rate,
        samples: filter.filter(&normalized.samples),
    };
    let env_clip = gate_and_envelope(&filtered, cfg);
    let env = &env_clip.samples;
    let n = env.len();
    let window = cfg.window_for(clip.sample_rate);
    let left = window / 2;

    let env_max = env.iter().fold(0.0f64, |m, &x| m.max(x));
    if env_max <= 0.0 {
        let envelope = keep_envelope.then(|| env.clone());
        return Ok(empty(envelope));
    }
    let floor = libm::fmax(cfg.gate_threshold, cfg.peak_rel_threshold * env_max);

    // envelope plateaus that are local maxima
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut i = 0;
    while i < n {
        let v = env[i];
        let start = i;
        while i + 1 < n && env[i + 1] == v {
            i += 1;
        }
        let end = i;
        i += 1;
        if v < floor {
            continue;
        }
        let rising = start == 0 || env[start - 1] < v;
        let falling = end == n - 1 || env[end + 1] < v;
        if rising && falling {
            // the sliding max plateau of a dominant sample starts left
            // samples before it
            candidates.push(Candidate {
                peak_sample: start + left,
                value: v,
            });
        }
    }

    // minimum-separation suppression, strongest peaks win
    let min_sep = (cfg.min_separation_ms / 1000.0 * fs) as usize;
    candidates.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap()
            .then(a.peak_sample.cmp(&b.peak_sample))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for cand in candidates {
        if kept
            .iter()
            .all(|k| k.peak_sample.abs_diff(cand.peak_sample) >= min_sep)
        {
            kept.push(cand);
        }
    }

    // onset refinement on a lightly smoothed rectified signal: walk left
    // from the dominant sample until the level drops below a fraction of
    // the peak value
    let smooth_len = ((cfg.onset_smooth_ms / 1000.0 * fs) as usize).max(1);
    let smoothed = moving_average_abs(&filtered.samples, smooth_len);
    let mut detections: Vec<(usize, f64)> = kept
        .iter()
        .map(|cand| {
            let threshold = cfg.onset_rel_threshold * cand.value;
            let peak = cand.peak_sample.min(n - 1);
            let lower_bound = peak.saturating_sub(window);
            let mut onset = peak;
            while onset > lower_bound && smoothed[onset - 1] >= threshold {
                onset -= 1;
            }
            (onset, cand.value)
        })
        .collect();
    detections.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.partial_cmp(&a.1).unwrap()));
    detections.dedup_by_key(|d| d.0);

    // re-enforce the separation on refined onsets
    let mut final_det: Vec<(usize, f64)> = Vec::new();
    for (onset, value) in detections {
        match final_det.last() {
            Some(&(prev_onset, prev_value)) if onset - prev_onset < min_sep => {
                if value > prev_value {
                    final_det.pop();
                    final_det.push((onset, value));
                }
            }
            _ => final_det.push((onset, value)),
        }
    }

    // Merged-press recovery. Two presses closer than the envelope window
    // collapse into a single plateau, so only one of them survives the
    // peak picking. Around every detection, scan the smoothed rectified
    // signal for a second sustained burst: a real beep holds a high level
    // for tens of milliseconds, which noise at the operating SNRs cannot.
    let sustain_len = ((0.015 * fs) as usize).max(1);
    let drop_len = ((0.005 * fs) as usize).max(1);
    let scan_near = (0.045 * fs) as usize;
    let scan_far = min_sep + (0.020 * fs) as usize;
    let guard = ((0.040 * fs) as usize).max(1);
    let mean_over = |from: usize, len: usize| -> f64 {
        let to = (from + len).min(n);
        if to <= from {
            return 0.0;
        }
        smoothed[from..to].iter().sum::<f64>() / (to - from) as f64
    };
    let walk_to_onset = |from: usize, threshold: f64| -> usize {
        let lower_bound = from.saturating_sub(window);
        let mut onset = from;
        while onset > lower_bound && smoothed[onset - 1] >= threshold {
            onset -= 1;
        }
        onset
    };
    let mut recovered: Vec<(usize, f64)> = Vec::new();
    for &(onset, value) in &final_det {
        // forward: wait for this beep to end (below 0.3·peak for 5 ms),
        // then accept a rise back above 0.5·peak that sustains 0.4·peak
        let end = (onset + scan_far).min(n);
        let mut beep_ended = false;
        let mut low_run = 0usize;
        for j in onset + scan_near..end {
            let s = smoothed[j];
            if !beep_ended {
                if s < 0.3 * value {
                    low_run += 1;
                    beep_ended = low_run >= drop_len;
                } else {
                    low_run = 0;
                }
            } else if s >= 0.5 * value {
                if mean_over(j, sustain_len) >= 0.4 * value {
                    let o2 = walk_to_onset(j, cfg.onset_rel_threshold * value);
                    recovered.push((o2, s));
                }
                break;
            }
        }
        // backward: a suppressed earlier press leaves a sustained burst in
        // the window before this onset
        let w_end = onset.saturating_sub((0.010 * fs) as usize);
        let w_start = onset.saturating_sub(scan_far);
        if w_end > w_start {
            let best = (w_start..w_end)
                .max_by(|&a, &b| smoothed[a].partial_cmp(&smoothed[b]).unwrap())
                .unwrap();
            let best_v = smoothed[best];
            let above = smoothed[w_start..w_end]
                .iter()
                .filter(|&&s| s >= 0.4 * value)
                .count();
            if best_v >= 0.5 * value && above >= sustain_len {
                let o2 = walk_to_onset(best, cfg.onset_rel_threshold * best_v);
                recovered.push((o2, best_v));
            }
        }
    }
    for (onset, value) in recovered {
        if final_det.iter().all(|&(e, _)| e.abs_diff(onset) >= guard) {
            final_det.push((onset, value));
        }
    }
    final_det.sort_by(|a, b| a.0.cmp(&b.0));
    final_det.dedup_by(|a, b| a.0.abs_diff(b.0) < guard);

    // undo the filter's propagation delay at the beep frequency
    let timestamps_ms: Vec<f64> = final_det
        .iter()
        .map(|&(s, _)| libm::fmax(0.0, s as f64 * 1000.0 / fs - group_delay_ms))
        .collect();
    let peak_values: Vec<f64> = final_det.iter().map(|&(_, v)| v).collect();
    let envelope = keep_envelope.then(|| env.clone());
    Ok(DetectionResult {
        timestamps_ms,
        peak_values,
        envelope,
        config_echo: cfg.clone(),
    })
}

fn moving_average_abs(signal: &[f64], window: usize) -> Vec<f64> {
    let n = signal.len();
    let mut out = vec![0.0f64; n];
    let mut sum = 0.0;
    let mut count = 0usize;
    // trailing window; onset refinement only needs a stable local level
    for i in 0..n {
        sum += libm::fabs(signal[i]);
        count += 1;
        if count > window {
            sum -= libm::fabs(signal[i - window]);
            count -= 1;
        }
        out[i] = sum / count as f64;
    }
    out
}

/// One detected/truth pairing with its signed error (detected − truth), ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub truth_index: usize,
    pub detected_index: usize,
    pub signed_error_ms: f64,
}

/// Comparison of a detection result against ground-truth timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub n_truth: usize,
    pub n_detected: usize,
    pub matches: Vec<Match>,
    pub misses: usize,
    pub false_positives: usize,
    /// Matched fraction of truth events.
    pub detection_rate: f64,
    pub mean_error_ms: f64,
    pub std_error_ms: f64,
    /// Errors of detected gaps against true gaps, for consecutive truth
    /// events that both matched.
    pub gap_errors_ms: Vec<f64>,
    pub p75_abs_gap_error_ms: f64,
    pub p97_abs_gap_error_ms: f64,
}

/// Greedy nearest matching of detections to truth within a tolerance.
pub fn match_ground_truth(
    detected: &DetectionResult,
    truth_ms: &[f64],
    tolerance_ms: f64,
) -> MatchReport {
    let det = &detected.timestamps_ms;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, &t) in truth_ms.iter().enumerate() {
        for (di, &d) in det.iter().enumerate() {
            let err = libm::fabs(d - t);
            if err <= tolerance_ms {
                pairs.push((err, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut truth_used = vec![false; truth_ms.len()];
    let mut det_used = vec![false; det.len()];
    let mut matches: Vec<Match> = Vec::new();
    for (_, ti, di) in pairs {
        if truth_used[ti] || det_used[di] {
            continue;
        }
        truth_used[ti] = true;
        det_used[di] = true;
        matches.push(Match {
            truth_index: ti,
            detected_index: di,
            signed_error_ms: det[di] - truth_ms[ti],
        });
    }
    matches.sort_by(|a, b| a.truth_index.cmp(&b.truth_index));

    let n_matched = matches.len();
    let mean = if n_matched > 0 {
        matches.iter().map(|m| m.signed_error_ms).sum::<f64>() / n_matched as f64
    } else {
        0.0
    };
    let std = if n_matched > 1 {
        let ss = matches
            .iter()
            .map(|m| (m.signed_error_ms - mean) * (m.signed_error_ms - mean))
            .sum::<f64>();
        libm::sqrt(ss / (n_matched as f64 - 1.0))
    } else {
        0.0
    };

    let mut gap_errors_ms: Vec<f64> = Vec::new();
    for w in matches.windows(2) {
        if w[1].truth_index == w[0].truth_index + 1 {
            let true_gap = truth_ms[w[1].truth_index] - truth_ms[w[0].truth_index];
            let det_gap = det[w[1].detected_index] - det[w[0].detected_index];
            gap_errors_ms.push(det_gap - true_gap);
        }
    }
    let p75 = percentile_abs(&gap_errors_ms, 0.75);
    let p97 = percentile_abs(&gap_errors_ms, 0.97);

    MatchReport {
        n_truth: truth_ms.len(),
        n_detected: det.len(),
        misses: truth_ms.len() - n_matched,
        false_positives: det.len() - n_matched,
        detection_rate: if truth_ms.is_empty() {
            1.0
        } else {
            n_matched as f64 / truth_ms.len() as f64
        },
        matches,
        mean_error_ms: mean,
        std_error_ms: std,
        gap_errors_ms,
        p75_abs_gap_error_ms: p75,
        p97_abs_gap_error_ms: p97,
    }
}

/// Nearest-rank percentile of absolute values; 0 for an empty slice.
pub fn percentile_abs(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = values.iter().map(|&v| libm::fabs(v)).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (libm::ceil(q * abs.len() as f64) as usize).clamp(1, abs.len());
    abs[rank - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentationError {
    /// Some group did not contain exactly 4 presses.
    BadGroupSizes(Vec<usize>),
}

impl fmt::Display for SegmentationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentationError::BadGroupSizes(sizes) => {
                write!(f, "expected groups of 4 keystrokes, got sizes {sizes:?}")
            }
        }
    }
}

/// Split timestamps into PIN entries wherever consecutive presses are more
/// than `inter_entry_gap_ms` apart.
pub fn segment_entries(timestamps_ms: &[f64], inter_entry_gap_ms: f64) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &t in timestamps_ms {
        match groups.last_mut() {
            Some(g) if t - *g.last().unwrap() <= inter_entry_gap_ms => g.push(t),
            _ => groups.push(vec![t]),
        }
    }
    groups
}

/// Gap sequences of a detection, one per 4-press entry.
pub fn gaps_from_detection(
    detected: &DetectionResult,
) -> Result<Vec<GapSequence>, SegmentationError> {
    let groups = segment_entries(
        &detected.timestamps_ms,
        detected.config_echo.inter_entry_gap_ms,
    );
    if groups.is_empty() || groups.iter().any(|g| g.len() != 4) {
        return Err(SegmentationError::BadGroupSizes(
            groups.iter().map(Vec::len).collect(),
        ));
    }
    Ok(groups
        .iter()
        .map(|g| {
            GapSequence::new([g[1] - g[0], g[2] - g[1], g[3] - g[2]])
                .expect("detected timestamps are strictly increasing")
        })
        .collect())
}
