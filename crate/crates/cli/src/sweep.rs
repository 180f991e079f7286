//! Budget-bounded parameter sweep: enumerate the candidate grid, evaluate
//! each candidate on its own pipeline state, and report the argmin of the
//! objective with a full trace. Candidates run concurrently but the trace
//! and the winner are deterministic.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::json;

use crate::config::{apply_overrides, Objective, RunConfig, SweepSpec};
use crate::run::{assemble, config_echo, ensure_out_dir, evaluate_to_report, write_json};
use crate::{data, internal, Failure};

#[derive(Clone, Debug, Serialize)]
struct TraceEntry {
    index: usize,
    settings: BTreeMap<String, serde_json::Value>,
    pairs: u64,
    counts: sightline_core::metrics::ConfusionCounts,
    fvr: Option<f64>,
    fir: Option<f64>,
    coverage_rate: Option<f64>,
    /// `None` when a needed rate is undefined; such candidates never win.
    objective: Option<f64>,
}

fn objective_value(spec: &SweepSpec, fvr: Option<f64>, fir: Option<f64>) -> Option<f64> {
    match spec.objective {
        Objective::Fvr => fvr,
        Objective::Fir => fir,
        Objective::Sum => Some(spec.weights[0] * fvr? + spec.weights[1] * fir?),
    }
}

fn evaluate_candidate(
    index: usize,
    config_text: &str,
    settings: &[(String, toml::Value)],
    seed: Option<u64>,
    spec: &SweepSpec,
) -> Result<TraceEntry, Failure> {
    let mut cfg: RunConfig = apply_overrides(config_text, settings).map_err(data)?;
    cfg.override_seed(seed);
    let est = cfg.run.estimator;
    let d = assemble(&cfg)?;
    let (report, _) = evaluate_to_report("sweep", est, &cfg, &d)?;
    let m = &report.metrics;
    let settings_json: BTreeMap<String, serde_json::Value> = settings
        .iter()
        .map(|(k, v)| {
            let jv = serde_json::to_value(v)
                .map_err(|e| internal(format!("encoding setting {k}: {e}")))?;
            Ok((k.clone(), jv))
        })
        .collect::<Result<_, Failure>>()?;
    Ok(TraceEntry {
        index,
        settings: settings_json,
        pairs: m.pairs,
        counts: m.counts,
        fvr: m.rates.fvr,
        fir: m.rates.fir,
        coverage_rate: m.coverage_rate,
        objective: objective_value(spec, m.rates.fvr, m.rates.fir),
    })
}

pub fn cmd_sweep(
    config_text: &str,
    cfg: &RunConfig,
    out: &Path,
    seed: Option<u64>,
    budget_override: Option<usize>,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    ensure_out_dir(out)?;
    let mut spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| data("config has no [sweep] section".to_string()))?;
    if let Some(b) = budget_override {
        spec.budget = b;
    }
    spec.validate().map_err(data)?;
    let candidates = spec.candidates().map_err(data)?;

    let n_workers = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, candidates.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TraceEntry, Failure>>>> =
        Mutex::new(vec![None; candidates.len()]);
    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= candidates.len() {
                    break;
                }
                let entry = evaluate_candidate(i, config_text, &candidates[i], seed, &spec);
                results.lock().unwrap()[i] = Some(entry);
            });
        }
    });

    let mut trace = Vec::with_capacity(candidates.len());
    for slot in results.into_inner().unwrap() {
        trace.push(slot.expect("every candidate was evaluated")?);
    }

    let trace_path = out.join("sweep.jsonl");
    {
        let mut w = std::fs::File::create(&trace_path)
            .map_err(|e| data(format!("writing {}: {e}", trace_path.display())))?;
        for entry in &trace {
            let line = serde_json::to_string(entry)
                .map_err(|e| internal(format!("encoding trace: {e}")))?;
            writeln!(w, "{line}").map_err(|e| data(format!("writing trace: {e}")))?;
        }
    }
    println!("wrote {}", trace_path.display());

    let best = trace
        .iter()
        .filter(|e| e.objective.is_some())
        .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .ok_or_else(|| data("no candidate produced a defined objective".to_string()))?;

    let mut best_cfg: RunConfig =
        apply_overrides(config_text, &candidates[best.index]).map_err(data)?;
    best_cfg.override_seed(seed);
    write_json(
        &out.join("sweep_best.json"),
        &json!({
            "index": best.index,
            "settings": best.settings,
            "objective": best.objective,
            "fvr": best.fvr,
            "fir": best.fir,
            "config_echo": config_echo("sweep", Some(best_cfg.run.estimator), &best_cfg),
        }),
    )?;
    let toml_text = toml::to_string_pretty(&best_cfg)
        .map_err(|e| internal(format!("encoding best config: {e}")))?;
    let best_path = out.join("best_config.toml");
    std::fs::write(&best_path, toml_text)
        .map_err(|e| data(format!("writing {}: {e}", best_path.display())))?;
    println!("wrote {}", out.join("sweep_best.json").display());
    println!("wrote {}", best_path.display());
    println!(
        "best candidate #{} objective {:.6} with {}",
        best.index,
        best.objective.unwrap(),
        serde_json::to_string(&best.settings).expect("settings serialize"),
    );
    Ok(())
}
