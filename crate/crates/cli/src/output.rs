use std::io::Write;
use std::ops::Range;
use std::path::Path;

use periodauth::auth::{ActivityProfile, ActivityWindow};
use periodauth::data::{load_csv_path, Recording};
use periodauth::TimeSeries;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{CliError, Selection};

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Write to `out`, or standard output when `None`.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Pretty JSON document carrying the command name and the resolved config.
pub fn document(command: &str, cfg: &RunConfig, body: impl Serialize) -> Result<String, CliError> {
    let mut v = json!({ "command": command, "config": cfg, "seed": cfg.seed });
    let body = serde_json::to_value(body).map_err(|e| CliError::Compute(e.to_string()))?;
    match body {
        Value::Object(m) => v.as_object_mut().expect("object").extend(m),
        other => {
            v["result"] = other;
        }
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// The recording picked by `sel` and the selected sample range.
pub fn select(sel: &Selection) -> Result<(Recording, Range<usize>), CliError> {
    let recs = load_csv_path(&sel.input).map_err(|e| match e {
        periodauth::Error::Io(io) => CliError::Input(format!("{}: {io}", sel.input.display())),
        other => other.into(),
    })?;
    let rec = recs
        .into_iter()
        .find(|r| sel.activity.is_none_or(|a| r.label == a) && sel.subject.as_ref().is_none_or(|s| &r.subject_id == s))
        .ok_or_else(|| {
            CliError::Input(format!(
                "{}: no recording for activity {} and subject {}",
                sel.input.display(),
                sel.activity.map_or("any".to_string(), |a| a.to_string()),
                sel.subject.as_deref().unwrap_or("any")
            ))
        })?;
    let end = match sel.len {
        Some(n) => sel.start.saturating_add(n),
        None => rec.len(),
    };
    if sel.start >= end || end > rec.len() {
        return Err(CliError::Input(format!(
            "samples {}..{end} outside a recording of {}",
            sel.start,
            rec.len()
        )));
    }
    Ok((rec, sel.start..end))
}

/// Labelled window over `range`, with times starting at `t0`.
pub fn window(rec: &Recording, range: Range<usize>, t0: f64) -> Result<ActivityWindow, CliError> {
    let start = range.start as f64;
    let axes = rec.axes(range)?;
    let shifted = axes.map(|ts| {
        let (t, y) = ts.into_parts();
        TimeSeries::new(t.into_iter().map(|v| v - start + t0).collect(), y)
    });
    let [x, y, z] = shifted;
    Ok(ActivityWindow::new(Some(rec.label), x?, y?, z?)?)
}

#[derive(Serialize, serde::Deserialize)]
struct ProfileFile {
    command: String,
    config: RunConfig,
    seed: u64,
    profile: Value,
}

/// Profiles are stored with the config that produced them; a bare profile
/// document is accepted too.
pub fn read_profile(path: &Path) -> Result<ActivityProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let inner = match v.get("profile") {
        Some(p) => p.clone(),
        None => v,
    };
    ActivityProfile::from_json(&inner.to_string())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn profile_document(command: &str, cfg: &RunConfig, profile: &ActivityProfile) -> Result<String, CliError> {
    let inner: Value = serde_json::from_str(&profile.to_json()?).map_err(|e| CliError::Compute(e.to_string()))?;
    let doc = ProfileFile {
        command: command.into(),
        config: cfg.clone(),
        seed: cfg.seed,
        profile: inner,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
