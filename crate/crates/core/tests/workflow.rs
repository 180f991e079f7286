//! A full offline workflow over files, the way a recorded dataset would be
//! processed: simulate a scene, persist every artifact, reload them all,
//! run an estimator on the reloaded data, and score it.

use sightline_core::grid::{FovSpec, SensorPose};
use sightline_core::io::{
    gt_to_labels, labels_to_objects, load_ground_truth, load_labels, load_measurement_log,
    load_report, save_ground_truth, save_labels, save_measurement_log, save_report, RunReport,
};
use sightline_core::metrics::{
    evaluate_run, AssociationMode, AssociationTolerance, VisibilityFrame,
};
use sightline_core::pipeline::{Radar3dConfig, Radar3dPipeline};
use sightline_core::sim::{
    generate_scene, measurement_frames, simulate_radar, RadarDetectionModel, SceneConfig,
};

fn mast() -> SensorPose {
    SensorPose {
        x: 0.0,
        y: 5.25,
        z: 6.0,
        yaw: 0.0,
        pitch: 0.0,
        fov: FovSpec {
            max_range: 160.0,
            azimuth_half_angle: 45f64.to_radians(),
            elevation_min: (-89f64).to_radians(),
            elevation_max: 5f64.to_radians(),
        },
    }
}

#[test]
fn recorded_logs_reproduce_the_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = SceneConfig {
        seed: 9,
        duration: 3.0,
        road_x_max: 90.0,
        mean_headway: 3.0,
        ..SceneConfig::default()
    };
    let sensor = mast();
    let gt = generate_scene(&scene, &sensor).unwrap();
    let radar = measurement_frames(&simulate_radar(
        &gt,
        &Radar3dConfig::default().spherical,
        &RadarDetectionModel::default(),
        1,
    ));
    assert!(radar.iter().any(|f| !f.measurements.is_empty()), "scene produced no returns");

    // Persist ground truth, labels, and measurements; reload each.
    let gt_path = dir.path().join("gt.json");
    save_ground_truth(&gt_path, &gt).unwrap();
    assert_eq!(load_ground_truth(&gt_path).unwrap(), gt);

    let labels_path = dir.path().join("labels.jsonl");
    save_labels(&labels_path, &gt_to_labels(&gt)).unwrap();
    let (tracks, warnings) = load_labels(&labels_path).unwrap();
    assert!(warnings.is_empty(), "synthetic tracks flagged: {warnings:?}");

    let meas_path = dir.path().join("measurements.jsonl");
    save_measurement_log(&meas_path, &radar).unwrap();
    let radar_loaded = load_measurement_log(&meas_path).unwrap();
    assert_eq!(radar_loaded, radar);

    // Interpolating the two-knot label tracks at the frame times must
    // recover the constant-velocity ground truth.
    let times: Vec<f64> = gt.frames.iter().map(|f| f.t).collect();
    let objects = labels_to_objects(&tracks, &times);
    for (lf, gf) in objects.iter().zip(gt.object_frames().iter()) {
        assert_eq!(lf.objects.len(), gf.objects.len(), "object count at t={}", lf.t);
        for obj in &gf.objects {
            let rec = lf.objects.iter().find(|o| o.id == obj.id).expect("track covers frame");
            assert!(
                (rec.x - obj.x).abs() < 1e-6 && (rec.y - obj.y).abs() < 1e-6,
                "object {} drifted at t={}: ({}, {}) vs ({}, {})",
                obj.id, lf.t, rec.x, rec.y, obj.x, obj.y
            );
        }
    }

    // Run the estimator once on the in-memory streams and once on the
    // reloaded ones; the scores must agree exactly.
    let tol = AssociationTolerance {
        position_radius: 1.2,
        doppler_tolerance: 1.5,
        mode: AssociationMode::Radar,
    };
    let run = |frames: &[sightline_core::metrics::MeasurementFrame],
               objects: &[sightline_core::metrics::ObjectFrame]| {
        let mut p = Radar3dPipeline::new(Radar3dConfig::default(), sensor).unwrap();
        let visibility: Vec<VisibilityFrame> = frames
            .iter()
            .map(|f| VisibilityFrame { t: f.t, visibility: p.step(f).unwrap() })
            .collect();
        evaluate_run(&visibility, objects, frames, &sensor, &tol, 0.5).unwrap()
    };
    let direct = run(&radar, &gt.object_frames());
    let reloaded = run(&radar_loaded, &objects);
    assert!(direct.pairs > 0, "nothing was scored");
    assert_eq!(direct.counts, reloaded.counts);
    assert_eq!(direct.coverage_rate, reloaded.coverage_rate);

    // And the report survives its own round trip, cross-checks included.
    let report_path = dir.path().join("report.json");
    let report = RunReport { config_echo: serde_json::json!({"scene": "workflow"}), metrics: direct };
    save_report(&report_path, &report).unwrap();
    assert_eq!(load_report(&report_path).unwrap().metrics, report.metrics);
}
