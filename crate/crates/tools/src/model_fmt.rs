//! Plain-text serialization of a fitted timing model.
//!
//! ```text
//! pinsound-model 1
//! typist_mode single_finger
//! min_samples 10
//! global 8.0123 26.44 2400
//! class Z 7.91 18.97 310 fitted
//! class U1 ...          (8 class lines, canonical order)
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces the model bit for bit.

use std::fs;
use std::path::Path;

use pinsound_core::keypad::DistanceClass;
use pinsound_core::timing::{ClassFit, GammaParams, TimingModel};
use pinsound_core::trace::TypistMode;

use crate::error::{Result, ToolError};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn model_to_string(model: &TimingModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("pinsound-model {MODEL_FORMAT_VERSION}\n"));
    out.push_str(&format!("typist_mode {}\n", model.typist_mode().label()));
    out.push_str(&format!("min_samples {}\n", model.min_samples()));
    let g = model.global();
    out.push_str(&format!(
        "global {} {} {}\n",
        g.shape,
        g.scale,
        model.global_count()
    ));
    for class in DistanceClass::ALL {
        let fit = model.class_fit(class);
        out.push_str(&format!(
            "class {} {} {} {} {}\n",
            class.tag(),
            fit.params.shape,
            fit.params.scale,
            fit.sample_count,
            if fit.fallback { "fallback" } else { "fitted" }
        ));
    }
    out
}

pub fn save_model(path: &Path, model: &TimingModel) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| ToolError::file(path, e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<TimingModel> {
    let bad = |msg: &str| ToolError::Data(format!("model file: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());

    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let version: u32 = header
        .strip_prefix("pinsound-model ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing 'pinsound-model <version>' header"))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }

    let mut typist_mode = None;
    let mut min_samples = None;
    let mut global = None;
    let mut per_class = std::collections::BTreeMap::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("typist_mode") => {
                let label = parts.next().ok_or_else(|| bad("typist_mode needs a value"))?;
                typist_mode = Some(
                    TypistMode::from_label(label)
                        .ok_or_else(|| bad(&format!("unknown typist mode '{label}'")))?,
                );
            }
            Some("min_samples") => {
                min_samples = Some(
                    parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("min_samples needs an integer"))?,
                );
            }
            Some("global") => {
                let (params, count) = parse_params(&mut parts).ok_or_else(|| bad("bad global line"))?;
                global = Some((params, count));
            }
            Some("class") => {
                let tag = parts.next().ok_or_else(|| bad("class line needs a tag"))?;
                let class = DistanceClass::from_tag(tag)
                    .ok_or_else(|| bad(&format!("unknown class tag '{tag}'")))?;
                let (params, sample_count) =
                    parse_params(&mut parts).ok_or_else(|| bad("bad class line"))?;
                let fallback = match parts.next() {
                    Some("fitted") => false,
                    Some("fallback") => true,
                    _ => return Err(bad("class line must end with 'fitted' or 'fallback'")),
                };
                per_class.insert(
                    class,
                    ClassFit {
                        params,
                        sample_count,
                        fallback,
                    },
                );
            }
            Some(other) => return Err(bad(&format!("unknown directive '{other}'"))),
            None => {}
        }
    }

    let typist_mode = typist_mode.ok_or_else(|| bad("missing typist_mode"))?;
    let min_samples = min_samples.ok_or_else(|| bad("missing min_samples"))?;
    let (global, global_count) = global.ok_or_else(|| bad("missing global line"))?;
    if per_class.len() != 8 {
        return Err(bad(&format!("expected 8 class lines, got {}", per_class.len())));
    }
    Ok(TimingModel::from_parts(
        per_class,
        global,
        global_count,
        typist_mode,
        min_samples,
    ))
}

pub fn load_model(path: &Path) -> Result<TimingModel> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::file(path, e.to_string()))?;
    model_from_str(&text).map_err(|e| match e {
        ToolError::Data(msg) => ToolError::file(path, msg),
        other => other,
    })
}

fn parse_params<'a>(
    parts: &mut impl Iterator<Item = &'a str>,
) -> Option<(GammaParams, usize)> {
    let shape: f64 = parts.next()?.parse().ok()?;
    let scale: f64 = parts.next()?.parse().ok()?;
    let count: usize = parts.next()?.parse().ok()?;
    if !(shape > 0.0 && scale > 0.0) {
        return None;
    }
    Some((GammaParams::new(shape, scale), count))
}
