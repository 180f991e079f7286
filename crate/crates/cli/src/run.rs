//! Assembles a run from its config — synthetic scene or recorded logs —
//! drives the chosen estimator frame by frame, and scores it. All
//! subcommands funnel through here so `compare` and `sweep` cannot drift
//! from what `evaluate` reports.

use std::path::Path;

use serde_json::json;

use sightline_core::io::{
    gt_to_labels, labels_to_objects, load_ground_truth, load_labels, load_measurement_log,
    save_ground_truth, save_labels, save_measurement_log, save_report, GridSnapshot, RunReport,
};
use sightline_core::metrics::{evaluate_run, MeasurementFrame, MetricsReport, ObjectFrame,
    VisibilityFrame};
use sightline_core::pipeline::{
    camera_boxes_to_points, Camera3dPipeline, Radar2dPipeline, Radar3dPipeline, ReferencePipeline,
};
use sightline_core::sim::{
    generate_scene, measurement_frames, simulate_camera, simulate_radar, CameraFrame,
    GroundTruthLog,
};
use sightline_core::visibility::VisibilityGrid2D;

use crate::config::{EstimatorName, RunConfig};
use crate::{data, internal, Failure};

/// Everything a run consumes, resolved from either logs or simulation.
pub struct RunData {
    pub gt: GroundTruthLog,
    /// Scoring targets per frame (ground truth, or interpolated labels
    /// when a label file was given).
    pub objects: Vec<ObjectFrame>,
    pub radar: Vec<MeasurementFrame>,
    pub camera: Vec<CameraFrame>,
    /// True when any stream came from recorded files rather than the
    /// simulator; alignment errors are then the data's fault, not ours.
    pub from_inputs: bool,
}

pub fn assemble(cfg: &RunConfig) -> Result<RunData, Failure> {
    let mut from_inputs = false;
    let gt = match &cfg.inputs.ground_truth {
        Some(path) => {
            from_inputs = true;
            load_ground_truth(path).map_err(|e| data(format!("data-io: {e}")))?
        }
        None => generate_scene(&cfg.scene, &cfg.sensor.pose())
            .map_err(|e| data(format!("scene-simulator: {e}")))?,
    };
    let times: Vec<f64> = gt.frames.iter().map(|f| f.t).collect();
    let objects = match &cfg.inputs.labels {
        Some(path) => {
            from_inputs = true;
            let (tracks, warnings) =
                load_labels(path).map_err(|e| data(format!("data-io: {e}")))?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            labels_to_objects(&tracks, &times)
        }
        None => gt.object_frames(),
    };
    let radar = match &cfg.inputs.measurements {
        Some(path) => {
            from_inputs = true;
            load_measurement_log(path).map_err(|e| data(format!("data-io: {e}")))?
        }
        None => measurement_frames(&simulate_radar(
            &gt,
            &cfg.radar3d.spherical,
            &cfg.detection.radar,
            cfg.run.noise_seed,
        )),
    };
    let camera = simulate_camera(&gt, &cfg.detection.camera);
    Ok(RunData { gt, objects, radar, camera, from_inputs })
}

/// Per-frame output of one estimator plus its artifacts.
pub struct EstimatorRun {
    pub visibility: Vec<VisibilityFrame>,
    /// The measurement stream this estimator is scored against.
    pub measurements: Vec<MeasurementFrame>,
    /// Accumulated occupancy after the last frame, if the estimator keeps
    /// one.
    pub occupancy: Option<GridSnapshot>,
    /// Camera boxes dropped because lifting failed.
    pub skipped_boxes: u64,
}

fn pipeline_err(e: impl std::fmt::Display) -> Failure {
    internal(format!("visibility-estimators: {e}"))
}

pub fn run_estimator(
    est: EstimatorName,
    cfg: &RunConfig,
    d: &RunData,
) -> Result<EstimatorRun, Failure> {
    let sensor = d.gt.sensor;
    let mut visibility = Vec::with_capacity(d.gt.frames.len());
    match est {
        EstimatorName::Radar2d => {
            let mut p = Radar2dPipeline::new(cfg.radar2d.clone(), sensor)
                .map_err(|e| data(format!("visibility-estimators: {e}")))?;
            for frame in &d.radar {
                let vis = p.step(frame).map_err(pipeline_err)?;
                visibility.push(VisibilityFrame { t: frame.t, visibility: vis });
            }
            Ok(EstimatorRun {
                visibility,
                measurements: d.radar.clone(),
                occupancy: Some(GridSnapshot::Cartesian2d {
                    grid: p.occupancy().clone(),
                    mask: None,
                }),
                skipped_boxes: 0,
            })
        }
        EstimatorName::Radar3d => {
            let mut p = Radar3dPipeline::new(cfg.radar3d.clone(), sensor)
                .map_err(|e| data(format!("visibility-estimators: {e}")))?;
            for frame in &d.radar {
                let vis = p.step(frame).map_err(pipeline_err)?;
                visibility.push(VisibilityFrame { t: frame.t, visibility: vis });
            }
            Ok(EstimatorRun {
                visibility,
                measurements: d.radar.clone(),
                occupancy: Some(GridSnapshot::Spherical(p.occupancy().clone())),
                skipped_boxes: 0,
            })
        }
        EstimatorName::Camera3d => {
            let homography = cfg
                .detection
                .camera
                .ground_homography(&sensor)
                .map_err(|e| data(format!("sensor-models: {e}")))?;
            let mut p = Camera3dPipeline::new(cfg.camera3d.clone(), sensor, homography.clone())
                .map_err(|e| data(format!("visibility-estimators: {e}")))?;
            let mut measurements = Vec::with_capacity(d.camera.len());
            for frame in &d.camera {
                let boxes: Vec<_> = frame.boxes.iter().map(|b| b.bbox.clone()).collect();
                let vis = p.step(frame.t, &boxes).map_err(pipeline_err)?;
                visibility.push(VisibilityFrame { t: frame.t, visibility: vis });
                let (points, _) =
                    camera_boxes_to_points(frame.t, &boxes, &homography, &cfg.camera3d.priors);
                measurements.push(MeasurementFrame { t: frame.t, measurements: points });
            }
            Ok(EstimatorRun {
                visibility,
                measurements,
                occupancy: Some(GridSnapshot::Voxel(p.occupancy().clone())),
                skipped_boxes: p.skipped_boxes(),
            })
        }
        EstimatorName::Reference => {
            let p = ReferencePipeline::new(cfg.reference.clone(), sensor)
                .map_err(|e| data(format!("visibility-estimators: {e}")))?;
            // The reference sees true object states, never labels.
            for frame in d.gt.object_frames() {
                let vis = p.step(&frame).map_err(pipeline_err)?;
                visibility.push(VisibilityFrame { t: frame.t, visibility: vis });
            }
            Ok(EstimatorRun {
                visibility,
                measurements: d.radar.clone(),
                occupancy: None,
                skipped_boxes: 0,
            })
        }
    }
}

pub fn final_visibility(run: &EstimatorRun) -> Result<&VisibilityGrid2D, Failure> {
    run.visibility
        .last()
        .map(|f| &f.visibility)
        .ok_or_else(|| data("empty run: no frames to snapshot".to_string()))
}

/// The tolerance a run actually applies. Camera points carry no doppler,
/// so a radar-mode gate would be a no-op for them anyway; switching the
/// mode makes the echoed config say what happened.
pub fn effective_tolerance(
    est: EstimatorName,
    cfg: &RunConfig,
) -> sightline_core::metrics::AssociationTolerance {
    let mut tol = cfg.evaluation.tolerance;
    if est == EstimatorName::Camera3d {
        tol.mode = sightline_core::metrics::AssociationMode::Camera;
    }
    tol
}

pub fn score(
    est: EstimatorName,
    cfg: &RunConfig,
    d: &RunData,
    run: &EstimatorRun,
) -> Result<MetricsReport, Failure> {
    let tol = effective_tolerance(est, cfg);
    evaluate_run(
        &run.visibility,
        &d.objects,
        &run.measurements,
        &d.gt.sensor,
        &tol,
        cfg.evaluation.vis_threshold,
    )
    .map_err(|e| {
        let msg = format!("evaluation-metrics: {e}");
        if d.from_inputs {
            data(msg)
        } else {
            internal(msg)
        }
    })
}

/// The reproducibility trailer every artifact carries.
pub fn config_echo(command: &str, est: Option<EstimatorName>, cfg: &RunConfig) -> serde_json::Value {
    json!({
        "command": command,
        "estimator": est.map(|e| e.to_string()),
        "config": serde_json::to_value(cfg).expect("config serializes"),
    })
}

pub fn evaluate_to_report(
    command: &str,
    est: EstimatorName,
    cfg: &RunConfig,
    d: &RunData,
) -> Result<(RunReport, EstimatorRun), Failure> {
    let run = run_estimator(est, cfg, d)?;
    let metrics = score(est, cfg, d, &run)?;
    let mut echo_cfg = cfg.clone();
    echo_cfg.evaluation.tolerance = effective_tolerance(est, cfg);
    let report = RunReport { config_echo: config_echo(command, Some(est), &echo_cfg), metrics };
    Ok((report, run))
}

// ---------------------------------------------------------------------------
// Artifact writing

pub fn ensure_out_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| data(format!("creating {}: {e}", out.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| internal(format!("encoding {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| data(format!("writing {}: {e}", path.display())))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    ensure_out_dir(out)?;
    let d = assemble(cfg)?;
    let io_err = |e: sightline_core::io::IoError| data(format!("data-io: {e}"));

    let gt_path = out.join("gt.json");
    save_ground_truth(&gt_path, &d.gt).map_err(io_err)?;
    let labels_path = out.join("labels.jsonl");
    save_labels(&labels_path, &gt_to_labels(&d.gt)).map_err(io_err)?;
    let meas_path = out.join("measurements.jsonl");
    save_measurement_log(&meas_path, &d.radar).map_err(io_err)?;
    write_json(&out.join("config.json"), &config_echo("simulate", None, cfg))?;

    let vehicles: std::collections::BTreeSet<&str> = d
        .gt
        .frames
        .iter()
        .flat_map(|f| f.objects.iter().map(|o| o.id.as_str()))
        .collect();
    let returns: usize = d.radar.iter().map(|f| f.measurements.len()).sum();
    println!(
        "simulated {} frames, {} vehicles, {} radar returns",
        d.gt.frames.len(),
        vehicles.len(),
        returns
    );
    for p in [&gt_path, &labels_path, &meas_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn cmd_estimate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    ensure_out_dir(out)?;
    let est = cfg.run.estimator;
    let d = assemble(cfg)?;
    let run = run_estimator(est, cfg, &d)?;
    let io_err = |e: sightline_core::io::IoError| data(format!("data-io: {e}"));

    let vis = final_visibility(&run)?;
    let vis_path = out.join(format!("visibility_{est}.slvg"));
    let snap = GridSnapshot::Cartesian2d {
        grid: vis.grid().clone(),
        mask: Some(vis.fov_mask().to_vec()),
    };
    sightline_core::io::save_grid_snapshot(&vis_path, &snap).map_err(io_err)?;
    println!("wrote {}", vis_path.display());

    if let Some(occ) = &run.occupancy {
        let occ_path = out.join(format!("occupancy_{est}.slvg"));
        sightline_core::io::save_grid_snapshot(&occ_path, occ).map_err(io_err)?;
        println!("wrote {}", occ_path.display());
    }
    write_json(&out.join("config.json"), &config_echo("estimate", Some(est), cfg))?;
    if run.skipped_boxes > 0 {
        println!("{} camera boxes skipped", run.skipped_boxes);
    }
    println!("estimated {} frames with {est}", run.visibility.len());
    Ok(())
}

fn fmt_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

pub fn summary_line(est: EstimatorName, m: &MetricsReport) -> String {
    format!(
        "{est:<9} {:>7}  tvr {}  fvr {}  fir {}  tir {}  coverage {}",
        m.pairs,
        fmt_rate(m.rates.tvr),
        fmt_rate(m.rates.fvr),
        fmt_rate(m.rates.fir),
        fmt_rate(m.rates.tir),
        fmt_rate(m.coverage_rate),
    )
}

pub fn cmd_evaluate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    ensure_out_dir(out)?;
    let est = cfg.run.estimator;
    let d = assemble(cfg)?;
    let (report, run) = evaluate_to_report("evaluate", est, cfg, &d)?;
    let path = out.join(format!("report_{est}.json"));
    save_report(&path, &report).map_err(|e| data(format!("data-io: {e}")))?;
    if run.skipped_boxes > 0 {
        println!("{} camera boxes skipped", run.skipped_boxes);
    }
    println!("{:<9} {:>7}", "estimator", "pairs");
    println!("{}", summary_line(est, &report.metrics));
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_compare(
    cfg: &RunConfig,
    out: &Path,
    estimators: &[EstimatorName],
) -> Result<(), Failure> {
    ensure_out_dir(out)?;
    let d = assemble(cfg)?;
    let mut rows = Vec::new();
    println!("{:<9} {:>7}", "estimator", "pairs");
    for &est in estimators {
        let (report, _) = evaluate_to_report("compare", est, cfg, &d)?;
        let path = out.join(format!("report_{est}.json"));
        save_report(&path, &report).map_err(|e| data(format!("data-io: {e}")))?;
        println!("{}", summary_line(est, &report.metrics));
        rows.push(json!({
            "estimator": est.to_string(),
            "pairs": report.metrics.pairs,
            "counts": report.metrics.counts,
            "rates": report.metrics.rates,
            "coverage_rate": report.metrics.coverage_rate,
        }));
    }
    write_json(
        &out.join("compare.json"),
        &json!({
            "config_echo": config_echo("compare", None, cfg),
            "estimators": rows,
        }),
    )?;
    println!("wrote {}", out.join("compare.json").display());
    Ok(())
}
