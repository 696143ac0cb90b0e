use std::ops::Range;
use std::path::Path;

use periodauth::auth::{accept_and_update, authenticate, enroll, ActivityProfile, AuthConfig, Verdict};
use periodauth::data::{make_cv_splits, sliding_windows, Recording};
use periodauth::energy::{default_profiles, estimate_energy, profiles_from_json, DutyCycleSchedule, RiskLevel, SensorPowerProfile};
use periodauth::eval::{run_cv, shared_seasonality, AXIS_NAMES};
use periodauth::forecast::{fit as fit_model, predict as forecast, ForecastModel};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{document, emit, profile_document, read_profile, select, window, write_file};
use crate::scenario::{parse_scenario, replay};
use crate::{CliError, Selection};

fn sub_recording(rec: &Recording, range: Range<usize>) -> Result<Recording, CliError> {
    Ok(Recording::new(
        rec.subject_id.clone(),
        rec.label,
        rec.sample_rate_hz,
        rec.ax[range.clone()].to_vec(),
        rec.ay[range.clone()].to_vec(),
        rec.az[range].to_vec(),
    )?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

pub fn fit(cfg: &RunConfig, data: &Selection, out: Option<&Path>) -> Result<(), CliError> {
    let dir = out.ok_or_else(|| CliError::Input("fit writes one file per axis; give --out DIR".into()))?;
    let (rec, range) = select(data)?;
    let n = range.len();
    let axes = rec.axes(range.clone())?;
    let mut fc = cfg.fit.clone();
    if fc.seasonalities.is_empty() {
        fc.seasonalities.extend(shared_seasonality(&axes, cfg.min_period, cfg.max_order)?);
    }
    let models = axes
        .iter()
        .map(|ts| fit_model(ts, &fc))
        .collect::<Result<Vec<ForecastModel>, _>>()?;
    create_dir(dir)?;
    let mut files = Vec::new();
    for (name, m) in AXIS_NAMES.iter().zip(&models) {
        let file = format!("{name}.json");
        let mut text = m.to_json()?;
        text.push('\n');
        write_file(&dir.join(&file), &text)?;
        files.push(json!({ "axis": name, "file": file, "noise_sigma": m.noise_sigma() }));
    }
    let summary = json!({
        "subject_id": rec.subject_id,
        "activity": rec.label,
        "samples": { "start": range.start, "end": range.end },
        "seasonalities": fc.seasonalities,
        "models": files,
    });
    write_file(&dir.join("fit.json"), &document("fit", cfg, summary)?)?;
    let period = fc
        .seasonalities
        .first()
        .map_or("none".to_string(), |s| format!("{:.3}", s.period));
    println!(
        "fit {} ({}): {n} samples, period {period}, models in {}",
        rec.label,
        rec.subject_id,
        dir.display()
    );
    Ok(())
}

pub fn predict(cfg: &RunConfig, model: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(model).map_err(|e| CliError::Input(format!("{}: {e}", model.display())))?;
    let m = ForecastModel::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", model.display())))?;
    let band = forecast(&m, cfg.horizon, cfg.level, cfg.n_sims, cfg.seed)?;
    emit(out, &document("predict", cfg, json!({ "model": model, "band": band }))?)
}

pub fn crossval(cfg: &RunConfig, data: &Selection, out: Option<&Path>) -> Result<(), CliError> {
    let (rec, range) = select(data)?;
    let rec = sub_recording(&rec, range)?;
    let c = &cfg.crossval;
    let split = make_cv_splits(&rec, c.train_len, c.block, c.n_blocks)?;
    let res = run_cv(&rec, &split, &cfg.cv_config())?;
    let csv = res.to_csv();
    match out {
        None => emit(None, &csv),
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("cv.csv"), &csv)?;
            let summary = json!({
                "subject_id": rec.subject_id,
                "activity": rec.label,
                "split": split,
                "max_axis_mse": res.max_axis_mse(),
                "result": res,
            });
            write_file(&dir.join("cv.json"), &document("crossval", cfg, summary)?)
        }
    }
}

/// Time just after the training data of `activity`, or of every entry.
fn continuation(profile: &ActivityProfile, activity: Option<periodauth::Activity>) -> f64 {
    let end = |e: &periodauth::auth::ProfileEntry| e.buffer().t().last().copied().unwrap_or(-1.0) + 1.0;
    match activity.and_then(|a| profile.entry(a)) {
        Some(e) => end(e),
        None => profile.entries().map(end).fold(0.0, f64::max),
    }
}

pub fn auth(
    cfg: &RunConfig,
    profile: &Path,
    data: &Selection,
    t0: Option<f64>,
    unlabeled: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = read_profile(profile)?;
    let (rec, range) = select(data)?;
    let t0 = t0.unwrap_or_else(|| continuation(&p, (!unlabeled).then_some(rec.label)));
    let ac = cfg.auth_config();
    let mut spans = sliding_windows(range.len(), ac.window_len, ac.window_len);
    if spans.is_empty() {
        spans.push(0..range.len());
    }
    let mut decisions = Vec::with_capacity(spans.len());
    for (k, s) in spans.iter().enumerate() {
        let abs = range.start + s.start..range.start + s.end;
        let mut w = window(&rec, abs.clone(), t0 + s.start as f64)?;
        if unlabeled {
            w = w.with_label(None);
        }
        let seed = cfg.seed.wrapping_add(k as u64);
        let d = authenticate(&w, &p, &AuthConfig { seed, ..ac.clone() })?;
        decisions.push(json!({ "start": abs.start, "end": abs.end, "seed": seed, "decision": d }));
    }
    let accepted = decisions
        .iter()
        .filter(|d| d["decision"]["verdict"] == json!(Verdict::Accept))
        .count();
    let body = json!({
        "profile": profile,
        "subject_id": rec.subject_id,
        "activity": rec.label,
        "unlabeled": unlabeled,
        "t0": t0,
        "windows": decisions.len(),
        "accept_rate": accepted as f64 / decisions.len() as f64,
        "decisions": decisions,
    });
    emit(out, &document("auth", cfg, body)?)
}

fn sensor(cfg: &RunConfig, name: Option<&str>) -> Result<SensorPowerProfile, CliError> {
    let table = match &cfg.power_profiles {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
            profiles_from_json(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))?
        }
        None => default_profiles(),
    };
    let name = name.unwrap_or(&cfg.sensor);
    table.into_iter().find(|p| p.name == name).ok_or_else(|| {
        CliError::Input(format!("unknown sensor {name:?}"))
    })
}

pub fn simulate(cfg: &RunConfig, profile: &Path, scenario: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let p = read_profile(profile)?;
    let text =
        std::fs::read_to_string(scenario).map_err(|e| CliError::Input(format!("{}: {e}", scenario.display())))?;
    let steps = parse_scenario(&text)?;
    let s = sensor(cfg, None)?;
    let r = replay(&p, &steps, &cfg.auth_config(), &cfg.policy, &s, cfg.sample_rate_hz, RiskLevel::Regular)?;
    emit(out, &document("simulate", cfg, json!({ "profile": profile, "scenario": scenario, "replay": r }))?)
}

pub fn energy(cfg: &RunConfig, name: Option<&str>, duty: Option<f64>, out: Option<&Path>) -> Result<(), CliError> {
    let s = sensor(cfg, name)?;
    let mut rows = Vec::new();
    let mut price = |label: String, sch: DutyCycleSchedule| -> Result<(), CliError> {
        let e = estimate_energy(&sch, &s)?;
        rows.push(json!({ "schedule": label, "duty": sch.normal_fraction(), "estimate": e, "segments": sch.segments() }));
        Ok(())
    };
    price("idle".into(), cfg.policy.schedule(RiskLevel::Low, true)?)?;
    for r in RiskLevel::ALL {
        price(r.to_string(), cfg.policy.schedule(r, false)?)?;
    }
    if let Some(d) = duty {
        price("custom".into(), DutyCycleSchedule::duty(cfg.policy.frame_length, d)?)?;
    }
    emit(out, &document("energy", cfg, json!({ "sensor": s, "schedules": rows }))?)
}

pub fn profile_init(
    cfg: &RunConfig,
    user: Option<&str>,
    existing: Option<&Path>,
    data: &Selection,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let base = match existing {
        Some(path) => read_profile(path)?,
        None => ActivityProfile::new(user.unwrap_or("user")),
    };
    if let (Some(u), Some(_)) = (user, existing) {
        if u != base.user_id() {
            return Err(CliError::Input(format!("profile belongs to {:?}, not {u:?}", base.user_id())));
        }
    }
    let (rec, range) = select(data)?;
    let w = window(&rec, range, 0.0)?;
    let p = enroll(&base, &w, &cfg.auth_config())?;
    emit(out, &profile_document("profile init", cfg, &p)?)
}

pub fn profile_update(
    cfg: &RunConfig,
    profile: &Path,
    data: &Selection,
    t0: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = read_profile(profile)?;
    let (rec, range) = select(data)?;
    let t0 = t0.unwrap_or_else(|| continuation(&p, Some(rec.label)));
    let w = window(&rec, range, t0)?;
    let ac = cfg.auth_config();
    let d = authenticate(&w, &p, &ac)?;
    if d.verdict != Verdict::Accept {
        return Err(CliError::Compute(format!(
            "window not accepted ({}, coverage {:.3}, novelty {}); profile unchanged",
            d.verdict,
            d.coverage_ratio,
            if d.novelty_pass { "pass" } else { "fail" }
        )));
    }
    let updated = accept_and_update(&w, &p, &d, &ac)?;
    emit(out, &profile_document("profile update", cfg, &updated)?)
}

pub fn profile_show(cfg: &RunConfig, profile: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let p = read_profile(profile)?;
    let entries: Vec<_> = p
        .entries()
        .map(|e| {
            json!({
                "activity": e.activity(),
                "period": e.period(),
                "observation_count": e.observation_count(),
                "buffer_len": e.buffer().len(),
                "novelty_threshold": e.novelty().threshold(),
                "noise_sigma": e.axis_models().each_ref().map(|m| m.noise_sigma()),
                "singularities": e.singularities().map(|s| s.len()),
            })
        })
        .collect();
    let body = json!({ "profile": profile, "user_id": p.user_id(), "entries": entries });
    emit(out, &document("profile show", cfg, body)?)
}
