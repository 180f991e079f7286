//! Scoring estimated visibility against ground truth.
//!
//! For every (object, timestep) pair inside the sensor's static field of
//! view two booleans are compared: V, what the estimator claims about the
//! object's visibility, and D, whether any measurement associates with the
//! object. The four combinations are counted and summarized as rates; a
//! rate whose denominator is empty is reported as undefined, never as 0.

use crate::grid::{OrientedRect, SensorPose};
use crate::sensor::{Extent, Measurement};
use crate::visibility::{object_visibility, VisibilityError, VisibilityGrid2D};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("frame counts differ: {vis} visibility, {obj} object, {meas} measurement frames")]
    FrameCountMismatch { vis: usize, obj: usize, meas: usize },
    #[error("timestamps misaligned at frame indices {0:?}")]
    MisalignedTimestamps(Vec<usize>),
    #[error("invalid association tolerance: {0}")]
    InvalidTolerance(String),
}

/// Ground-truth state of one object at one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    /// Seconds.
    pub t: f64,
    /// Ground center of the object footprint, meters.
    pub x: f64,
    pub y: f64,
    /// Heading, radians.
    pub yaw: f64,
    /// Ground velocity, m/s.
    pub v_x: f64,
    pub v_y: f64,
    /// Radians per second.
    pub yaw_rate: f64,
    pub extent: Extent,
}

impl ObjectState {
    pub fn footprint(&self) -> OrientedRect {
        OrientedRect {
            cx: self.x,
            cy: self.y,
            yaw: self.yaw,
            length: self.extent.length,
            width: self.extent.width,
        }
    }

    /// Radial velocity of the object relative to a ground position,
    /// positive receding.
    pub fn radial_velocity(&self, from: (f64, f64)) -> f64 {
        let dx = self.x - from.0;
        let dy = self.y - from.1;
        let r = dx.hypot(dy);
        if r == 0.0 {
            return 0.0;
        }
        (self.v_x * dx + self.v_y * dy) / r
    }
}

/// All ground-truth objects at one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectFrame {
    pub t: f64,
    pub objects: Vec<ObjectState>,
}

/// All measurements of one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFrame {
    pub t: f64,
    pub measurements: Vec<Measurement>,
}

/// Estimator output at one timestep.
#[derive(Clone, Debug)]
pub struct VisibilityFrame {
    pub t: f64,
    pub visibility: VisibilityGrid2D,
}

/// How measurements are matched to objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    /// Position gate plus a radial-velocity gate on measurements that
    /// carry doppler.
    Radar,
    /// Position gate only.
    Camera,
}

/// Association gates for [`detection_status`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationTolerance {
    /// Maximum distance from a measurement to the object footprint, meters.
    pub position_radius: f64,
    /// Maximum difference between measured doppler and the object's radial
    /// velocity, m/s.
    pub doppler_tolerance: f64,
    pub mode: AssociationMode,
}

impl Default for AssociationTolerance {
    fn default() -> Self {
        AssociationTolerance {
            position_radius: 1.2,
            doppler_tolerance: 1.5,
            mode: AssociationMode::Radar,
        }
    }
}

impl AssociationTolerance {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.position_radius <= 0.0 {
            return Err(MetricsError::InvalidTolerance(format!(
                "position radius {} must be positive",
                self.position_radius
            )));
        }
        if self.doppler_tolerance <= 0.0 {
            return Err(MetricsError::InvalidTolerance(format!(
                "doppler tolerance {} must be positive",
                self.doppler_tolerance
            )));
        }
        Ok(())
    }
}

/// Joint outcome of the estimator's visibility claim and the detection
/// evidence for one (object, timestep) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Claimed visible and detected.
    TrueVisible,
    /// Claimed visible but not detected.
    FalseVisible,
    /// Claimed invisible and not detected.
    TrueInvisible,
    /// Claimed invisible but detected.
    FalseInvisible,
}

/// Classifies one pair of booleans into the four-way outcome table.
pub fn classify(visible: bool, detected: bool) -> Outcome {
    match (visible, detected) {
        (true, true) => Outcome::TrueVisible,
        (true, false) => Outcome::FalseVisible,
        (false, false) => Outcome::TrueInvisible,
        (false, true) => Outcome::FalseInvisible,
    }
}

/// Tallies of the four outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tv: u64,
    pub fv: u64,
    pub ti: u64,
    pub fi: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TrueVisible => self.tv += 1,
            Outcome::FalseVisible => self.fv += 1,
            Outcome::TrueInvisible => self.ti += 1,
            Outcome::FalseInvisible => self.fi += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tv + self.fv + self.ti + self.fi
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tv += other.tv;
        self.fv += other.fv;
        self.ti += other.ti;
        self.fi += other.fi;
    }
}

/// Outcome rates. Each rate is `None` when its denominator is zero:
/// an undefined rate is distinct from a rate of 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// TV / (TV + FI): detected pairs correctly claimed visible.
    pub tvr: Option<f64>,
    /// FI / (TV + FI): detected pairs wrongly claimed invisible.
    pub fir: Option<f64>,
    /// FV / (FV + TI): undetected pairs wrongly claimed visible.
    pub fvr: Option<f64>,
    /// TI / (FV + TI): undetected pairs correctly claimed invisible.
    pub tir: Option<f64>,
}

/// Computes the four rates from the counts.
pub fn rates(c: &ConfusionCounts) -> Rates {
    let detected = c.tv + c.fi;
    let undetected = c.fv + c.ti;
    Rates {
        tvr: (detected > 0).then(|| c.tv as f64 / detected as f64),
        fir: (detected > 0).then(|| c.fi as f64 / detected as f64),
        fvr: (undetected > 0).then(|| c.fv as f64 / undetected as f64),
        tir: (undetected > 0).then(|| c.ti as f64 / undetected as f64),
    }
}

/// Whether an object's footprint touches the sensor's static 2D field of
/// view, sampled at the footprint center and corners. This same gate is
/// used for pair selection everywhere in the crate.
pub fn object_in_static_fov(obj: &ObjectState, sensor: &SensorPose) -> bool {
    let fp = obj.footprint();
    if sensor.in_fov_2d(fp.cx, fp.cy) {
        return true;
    }
    fp.corners().iter().any(|&(x, y)| sensor.in_fov_2d(x, y))
}

/// Whether any measurement in the frame associates with the object.
///
/// A measurement associates when its ground position lies within
/// `position_radius` of the object footprint (distance to the nearest
/// footprint point) and, in radar mode for measurements carrying doppler,
/// its doppler lies within `doppler_tolerance` of the object's radial
/// velocity toward the sensor.
pub fn detection_status(
    obj: &ObjectState,
    frame: &[Measurement],
    sensor: &SensorPose,
    tol: &AssociationTolerance,
) -> bool {
    let fp = obj.footprint();
    let origin = sensor.ground_position();
    frame.iter().any(|m| {
        let (x, y) = m.ground_position(sensor);
        if fp.distance(x, y) > tol.position_radius {
            return false;
        }
        match (tol.mode, m.doppler) {
            (AssociationMode::Radar, Some(d)) => {
                (d - obj.radial_velocity(origin)).abs() <= tol.doppler_tolerance
            }
            _ => true,
        }
    })
}

/// One scored (object, timestep) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalEvent {
    pub frame: usize,
    pub t: f64,
    pub object_id: String,
    pub visible: bool,
    pub detected: bool,
    pub outcome: Outcome,
}

/// Full evaluation result of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub rates: Rates,
    /// Mean of the detection status over all scored pairs; `None` when no
    /// pair was scored.
    pub coverage_rate: Option<f64>,
    /// Number of scored (object, timestep) pairs.
    pub pairs: u64,
    /// In-FoV pairs skipped because the footprint missed the grid.
    pub skipped_outside_grid: u64,
    pub per_object: BTreeMap<String, ConfusionCounts>,
    pub events: Vec<EvalEvent>,
}

/// Mean detection status over all (object, timestep) pairs whose footprint
/// touches the static field of view; `None` if there are no such pairs.
pub fn coverage_rate(
    objects: &[ObjectFrame],
    measurements: &[MeasurementFrame],
    sensor: &SensorPose,
    tol: &AssociationTolerance,
) -> Result<Option<f64>, MetricsError> {
    if objects.len() != measurements.len() {
        return Err(MetricsError::FrameCountMismatch {
            vis: objects.len(),
            obj: objects.len(),
            meas: measurements.len(),
        });
    }
    check_alignment(objects.iter().map(|f| f.t), measurements.iter().map(|f| f.t))?;
    let mut pairs = 0u64;
    let mut detected = 0u64;
    for (of, mf) in objects.iter().zip(measurements) {
        for obj in &of.objects {
            if !object_in_static_fov(obj, sensor) {
                continue;
            }
            pairs += 1;
            if detection_status(obj, &mf.measurements, sensor, tol) {
                detected += 1;
            }
        }
    }
    Ok((pairs > 0).then(|| detected as f64 / pairs as f64))
}

const TIMESTAMP_EPS: f64 = 1e-6;

fn check_alignment(
    a: impl Iterator<Item = f64>,
    b: impl Iterator<Item = f64>,
) -> Result<(), MetricsError> {
    let bad: Vec<usize> = a
        .zip(b)
        .enumerate()
        .filter(|(_, (ta, tb))| (ta - tb).abs() > TIMESTAMP_EPS)
        .map(|(k, _)| k)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(MetricsError::MisalignedTimestamps(bad))
    }
}

/// Scores a whole run: every (object, timestep) pair inside the static
/// field of view is classified, counted, and logged.
///
/// The three frame sequences must have equal length and pairwise matching
/// timestamps; misalignment is an error naming the offending frames.
/// In-FoV objects whose footprint misses the grid entirely are skipped and
/// counted separately. Results do not depend on the order of objects
/// within a frame.
pub fn evaluate_run(
    visibility: &[VisibilityFrame],
    objects: &[ObjectFrame],
    measurements: &[MeasurementFrame],
    sensor: &SensorPose,
    tol: &AssociationTolerance,
    vis_threshold: f64,
) -> Result<MetricsReport, MetricsError> {
    tol.validate()?;
    if visibility.len() != objects.len() || objects.len() != measurements.len() {
        return Err(MetricsError::FrameCountMismatch {
            vis: visibility.len(),
            obj: objects.len(),
            meas: measurements.len(),
        });
    }
    check_alignment(visibility.iter().map(|f| f.t), objects.iter().map(|f| f.t))?;
    check_alignment(objects.iter().map(|f| f.t), measurements.iter().map(|f| f.t))?;

    let mut counts = ConfusionCounts::default();
    let mut per_object: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    let mut events = Vec::new();
    let mut skipped = 0u64;
    let mut detected_pairs = 0u64;
    for (k, ((vf, of), mf)) in visibility.iter().zip(objects).zip(measurements).enumerate() {
        for obj in &of.objects {
            if !object_in_static_fov(obj, sensor) {
                continue;
            }
            let visible = match object_visibility(&vf.visibility, &obj.footprint(), vis_threshold) {
                Ok(v) => v,
                Err(VisibilityError::FootprintOutsideGrid) => {
                    skipped += 1;
                    continue;
                }
                Err(_) => unreachable!("object_visibility only fails on empty footprints"),
            };
            let detected = detection_status(obj, &mf.measurements, sensor, tol);
            if detected {
                detected_pairs += 1;
            }
            let outcome = classify(visible, detected);
            counts.record(outcome);
            per_object.entry(obj.id.clone()).or_default().record(outcome);
            events.push(EvalEvent {
                frame: k,
                t: of.t,
                object_id: obj.id.clone(),
                visible,
                detected,
                outcome,
            });
        }
    }
    let pairs = counts.total();
    Ok(MetricsReport {
        counts,
        rates: rates(&counts),
        coverage_rate: (pairs > 0).then(|| detected_pairs as f64 / pairs as f64),
        pairs,
        skipped_outside_grid: skipped,
        per_object,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FovSpec, Grid2D, GridSpec2D};
    use crate::sensor::MeasurementPosition;

    fn sensor() -> SensorPose {
        SensorPose {
            x: 0.0,
            y: 5.0,
            z: 6.0,
            yaw: 0.0,
            pitch: 0.0,
            fov: FovSpec {
                max_range: 100.0,
                azimuth_half_angle: 0.8,
                elevation_min: -0.6,
                elevation_max: 0.2,
            },
        }
    }

    fn obj(id: &str, x: f64, y: f64, v_x: f64) -> ObjectState {
        ObjectState {
            id: id.into(),
            t: 0.0,
            x,
            y,
            yaw: 0.0,
            v_x,
            v_y: 0.0,
            yaw_rate: 0.0,
            extent: Extent { length: 4.6, width: 1.85, height: 1.5 },
        }
    }

    fn radar_tol() -> AssociationTolerance {
        AssociationTolerance {
            position_radius: 2.0,
            doppler_tolerance: 1.5,
            mode: AssociationMode::Radar,
        }
    }

    fn meas(x: f64, y: f64, doppler: Option<f64>) -> Measurement {
        Measurement {
            position: MeasurementPosition::Cartesian { x, y, z: 1.0 },
            doppler,
            quality: 1.0,
            rcs: Some(10.0),
            timestamp: 0.0,
        }
    }

    #[test]
    fn classify_covers_the_four_outcomes() {
        assert_eq!(classify(true, true), Outcome::TrueVisible);
        assert_eq!(classify(true, false), Outcome::FalseVisible);
        assert_eq!(classify(false, false), Outcome::TrueInvisible);
        assert_eq!(classify(false, true), Outcome::FalseInvisible);
    }

    #[test]
    fn rates_follow_the_count_ratios() {
        let c = ConfusionCounts { tv: 83, fv: 36, ti: 64, fi: 17 };
        let r = rates(&c);
        assert_eq!(r.tvr, Some(0.83));
        assert_eq!(r.fir, Some(0.17));
        assert_eq!(r.fvr, Some(0.36));
        assert_eq!(r.tir, Some(0.64));

        let c = ConfusionCounts { tv: 77, fv: 61, ti: 39, fi: 23 };
        let r = rates(&c);
        assert_eq!(r.tvr, Some(0.77));
        assert_eq!(r.fvr, Some(0.61));
        assert_eq!(r.fir, Some(0.23));

        let c = ConfusionCounts { tv: 93, fv: 2, ti: 98, fi: 7 };
        let r = rates(&c);
        assert_eq!(r.tvr, Some(0.93));
        assert_eq!(r.fvr, Some(0.02));
    }

    #[test]
    fn rates_are_undefined_without_their_denominator() {
        // No detected pairs: TVR and FIR are undefined, not zero.
        let c = ConfusionCounts { tv: 0, fv: 5, ti: 10, fi: 0 };
        let r = rates(&c);
        assert_eq!(r.tvr, None);
        assert_eq!(r.fir, None);
        assert!(r.fvr.is_some());
        // No undetected pairs: FVR and TIR are undefined.
        let c = ConfusionCounts { tv: 4, fv: 0, ti: 0, fi: 1 };
        let r = rates(&c);
        assert_eq!(r.fvr, None);
        assert_eq!(r.tir, None);
        assert_eq!(r.tvr, Some(0.8));
    }

    #[test]
    fn detection_needs_position_and_doppler_gates() {
        let s = sensor();
        let tol = radar_tol();
        // Object 30 m ahead receding at 25 m/s; its radial velocity from
        // the sensor's ground position is 25.
        let o = obj("car-1", 30.0, 5.0, 25.0);
        // Return on the footprint with matching doppler.
        assert!(detection_status(&o, &[meas(28.0, 5.0, Some(24.8))], &s, &tol));
        // Doppler off by more than the tolerance.
        assert!(!detection_status(&o, &[meas(28.0, 5.0, Some(20.0))], &s, &tol));
        // Position too far from the footprint (footprint edge at x=27.7).
        assert!(!detection_status(&o, &[meas(24.0, 5.0, Some(25.0))], &s, &tol));
        // Any one associating measurement suffices.
        let frame = [meas(90.0, 5.0, Some(0.0)), meas(29.0, 4.0, Some(25.3))];
        assert!(detection_status(&o, &frame, &s, &tol));
        // Camera mode ignores doppler entirely.
        let cam = AssociationTolerance { mode: AssociationMode::Camera, ..tol };
        assert!(detection_status(&o, &[meas(28.0, 5.0, Some(0.0))], &s, &cam));
        // Measurements without doppler associate on position alone.
        assert!(detection_status(&o, &[meas(28.0, 5.0, None)], &s, &tol));
    }

    #[test]
    fn static_fov_gate_uses_footprint_samples() {
        let s = sensor();
        assert!(object_in_static_fov(&obj("a", 50.0, 5.0, 0.0), &s));
        // Far outside the range.
        assert!(!object_in_static_fov(&obj("b", 150.0, 5.0, 0.0), &s));
        // Center beyond max range but a corner pokes back in.
        let edge = obj("c", 101.5, 5.0, 0.0);
        assert!(object_in_static_fov(&edge, &s));
        // Behind the sensor, outside the wedge.
        assert!(!object_in_static_fov(&obj("d", -20.0, 5.0, 0.0), &s));
    }

    /// All-visible or all-invisible visibility over a grid covering the
    /// whole field of view.
    fn uniform_vis(value: f64) -> VisibilityGrid2D {
        let spec = GridSpec2D::new(0.0, -10.0, 110, 30, 1.0).unwrap();
        let grid = Grid2D::from_values(spec, vec![value; spec.cell_count()]).unwrap();
        VisibilityGrid2D::new(grid, vec![true; spec.cell_count()]).unwrap()
    }

    fn frames(
        states: Vec<Vec<ObjectState>>,
        meas_frames: Vec<Vec<Measurement>>,
        vis_value: f64,
    ) -> (Vec<VisibilityFrame>, Vec<ObjectFrame>, Vec<MeasurementFrame>) {
        let n = states.len();
        let vis = (0..n)
            .map(|k| VisibilityFrame { t: k as f64 * 0.1, visibility: uniform_vis(vis_value) })
            .collect();
        let objects = states
            .into_iter()
            .enumerate()
            .map(|(k, objects)| ObjectFrame { t: k as f64 * 0.1, objects })
            .collect();
        let measurements = meas_frames
            .into_iter()
            .enumerate()
            .map(|(k, measurements)| MeasurementFrame { t: k as f64 * 0.1, measurements })
            .collect();
        (vis, objects, measurements)
    }

    #[test]
    fn evaluate_run_counts_pairs_and_logs_events() {
        let s = sensor();
        let tol = radar_tol();
        // Frame 0: car-1 detected, car-2 not. Frame 1: neither detected.
        // Visibility is all-visible, so car-1 is TV once and FV once,
        // car-2 is FV twice.
        let (vis, objects, measurements) = frames(
            vec![
                vec![obj("car-1", 30.0, 5.0, 25.0), obj("car-2", 60.0, 8.0, 25.0)],
                vec![obj("car-1", 32.5, 5.0, 25.0), obj("car-2", 62.5, 8.0, 25.0)],
            ],
            vec![vec![meas(29.0, 5.0, Some(25.0))], vec![]],
            1.0,
        );
        let report = evaluate_run(&vis, &objects, &measurements, &s, &tol, 0.5).unwrap();
        assert_eq!(report.counts, ConfusionCounts { tv: 1, fv: 3, ti: 0, fi: 0 });
        assert_eq!(report.pairs, 4);
        assert_eq!(report.coverage_rate, Some(0.25));
        assert_eq!(report.per_object["car-1"], ConfusionCounts { tv: 1, fv: 1, ti: 0, fi: 0 });
        assert_eq!(report.per_object["car-2"], ConfusionCounts { tv: 0, fv: 2, ti: 0, fi: 0 });
        assert_eq!(report.events.len(), 4);
        assert_eq!(report.events[0].object_id, "car-1");
        assert_eq!(report.events[0].outcome, Outcome::TrueVisible);
        // TVR defined (one detected pair), FVR = 3/3.
        assert_eq!(report.rates.tvr, Some(1.0));
        assert_eq!(report.rates.fvr, Some(1.0));
        assert_eq!(report.rates.tir, Some(0.0));
    }

    #[test]
    fn evaluate_run_is_object_order_invariant() {
        let s = sensor();
        let tol = radar_tol();
        let a = obj("a", 30.0, 5.0, 25.0);
        let b = obj("b", 60.0, 8.0, 25.0);
        let c = obj("c", 45.0, 2.0, 20.0);
        let ms = vec![meas(29.0, 5.0, Some(25.0)), meas(44.0, 2.0, Some(19.8))];
        let (v1, o1, m1) = frames(vec![vec![a.clone(), b.clone(), c.clone()]], vec![ms.clone()], 1.0);
        let (v2, o2, m2) = frames(vec![vec![c, a, b]], vec![ms], 1.0);
        let r1 = evaluate_run(&v1, &o1, &m1, &s, &tol, 0.5).unwrap();
        let r2 = evaluate_run(&v2, &o2, &m2, &s, &tol, 0.5).unwrap();
        assert_eq!(r1.counts, r2.counts);
        assert_eq!(r1.per_object, r2.per_object);
        assert_eq!(r1.coverage_rate, r2.coverage_rate);
    }

    #[test]
    fn forced_all_visible_ties_false_visible_to_coverage() {
        let s = sensor();
        let tol = radar_tol();
        let (vis, objects, measurements) = frames(
            vec![
                vec![obj("a", 30.0, 5.0, 25.0), obj("b", 60.0, 8.0, 25.0)],
                vec![obj("a", 32.5, 5.0, 25.0), obj("b", 62.5, 8.0, 25.0)],
                vec![obj("a", 35.0, 5.0, 25.0)],
            ],
            vec![vec![meas(29.0, 5.0, Some(25.0))], vec![], vec![meas(34.0, 5.0, Some(25.0))]],
            1.0,
        );
        let report = evaluate_run(&vis, &objects, &measurements, &s, &tol, 0.5).unwrap();
        // With visibility forced to 1 everywhere, every undetected pair is
        // FV, so the FV share of all pairs complements the coverage rate.
        let fv_share = report.counts.fv as f64 / report.pairs as f64;
        let coverage = report.coverage_rate.unwrap();
        assert!((fv_share - (1.0 - coverage)).abs() < 1e-12);
        assert_eq!(report.counts.ti, 0);
        assert_eq!(report.counts.fi, 0);
    }

    #[test]
    fn evaluate_run_rejects_misaligned_inputs() {
        let s = sensor();
        let tol = radar_tol();
        let (vis, mut objects, measurements) =
            frames(vec![vec![obj("a", 30.0, 5.0, 25.0)], vec![]], vec![vec![], vec![]], 1.0);
        objects[1].t += 0.05;
        let err = evaluate_run(&vis, &objects, &measurements, &s, &tol, 0.5).unwrap_err();
        match err {
            MetricsError::MisalignedTimestamps(frames) => assert_eq!(frames, vec![1]),
            other => panic!("wrong error: {other}"),
        }

        let (vis, objects, mut measurements) =
            frames(vec![vec![], vec![]], vec![vec![], vec![]], 1.0);
        measurements.pop();
        let err = evaluate_run(&vis, &objects, &measurements, &s, &tol, 0.5).unwrap_err();
        assert!(matches!(err, MetricsError::FrameCountMismatch { .. }));
    }

    #[test]
    fn in_fov_object_off_grid_is_skipped_and_counted() {
        let s = sensor();
        let tol = radar_tol();
        // Tiny grid far from the object, which is still inside the FoV.
        let spec = GridSpec2D::new(0.0, 0.0, 3, 3, 1.0).unwrap();
        let grid = Grid2D::from_values(spec, vec![1.0; 9]).unwrap();
        let vis = vec![VisibilityFrame {
            t: 0.0,
            visibility: VisibilityGrid2D::new(grid, vec![true; 9]).unwrap(),
        }];
        let objects = vec![ObjectFrame { t: 0.0, objects: vec![obj("a", 50.0, 5.0, 25.0)] }];
        let measurements = vec![MeasurementFrame { t: 0.0, measurements: vec![] }];
        let report = evaluate_run(&vis, &objects, &measurements, &s, &tol, 0.5).unwrap();
        assert_eq!(report.pairs, 0);
        assert_eq!(report.skipped_outside_grid, 1);
        assert_eq!(report.coverage_rate, None);
        assert_eq!(report.rates.tvr, None);
    }

    #[test]
    fn standalone_coverage_matches_detection_fraction() {
        let s = sensor();
        let tol = radar_tol();
        let objects = vec![
            ObjectFrame {
                t: 0.0,
                objects: vec![obj("a", 30.0, 5.0, 25.0), obj("b", 60.0, 8.0, 25.0)],
            },
            ObjectFrame { t: 0.1, objects: vec![obj("a", 32.5, 5.0, 25.0)] },
        ];
        let measurements = vec![
            MeasurementFrame { t: 0.0, measurements: vec![meas(29.0, 5.0, Some(25.0))] },
            MeasurementFrame { t: 0.1, measurements: vec![] },
        ];
        let cov = coverage_rate(&objects, &measurements, &s, &tol).unwrap();
        assert_eq!(cov, Some(1.0 / 3.0));
        // Empty scene: undefined, not zero.
        let cov = coverage_rate(&[], &[], &s, &tol).unwrap();
        assert_eq!(cov, None);
    }
}
