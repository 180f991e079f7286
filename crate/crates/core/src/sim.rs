//! Synthetic highway scenes with known ground truth.
//!
//! The generator lays straight lanes along +x, spawns vehicles with
//! exponential headways and normally distributed speeds, and moves them at
//! constant velocity. For every frame it also records which objects are
//! occluded from the sensor, using a sampled line-of-sight oracle, so that
//! estimator output can later be scored against an exact answer. Radar and
//! camera frontends turn the ground truth into measurement streams.
//!
//! Everything is driven by a seeded [`ChaCha8Rng`], so a (config, seed)
//! pair always reproduces the identical scene and measurement log.

use crate::grid::{OrientedRect, SensorPose, SphericalGridSpec};
use crate::metrics::{object_in_static_fov, MeasurementFrame, ObjectFrame, ObjectState};
use crate::sensor::{BoundingBox2D, BoundingBox3D, Extent, Homography, Measurement, MeasurementPosition, SensorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
}

/// Traffic scene parameters. Distances in meters, times in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub seed: u64,
    pub duration: f64,
    /// Frames per second.
    pub frame_rate: f64,
    /// Vehicles exist while their footprint overlaps `[road_x_min,
    /// road_x_max]`; they enter rear-first at `road_x_min`.
    pub road_x_min: f64,
    pub road_x_max: f64,
    pub n_lanes: usize,
    pub lane_width: f64,
    /// Center of the first lane; lane k runs at `first_lane_y + k * lane_width`.
    pub first_lane_y: f64,
    /// Mean time between vehicles per lane.
    pub mean_headway: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub min_speed: f64,
    /// Probability that a spawned vehicle is a truck.
    pub truck_ratio: f64,
    /// Bumper-to-bumper distance never undercut within a lane.
    pub min_gap: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            seed: 7,
            duration: 60.0,
            frame_rate: 10.0,
            road_x_min: 15.0,
            road_x_max: 145.0,
            n_lanes: 3,
            lane_width: 3.5,
            first_lane_y: 1.75,
            mean_headway: 4.0,
            speed_mean: 25.0,
            speed_std: 4.0,
            min_speed: 8.0,
            truck_ratio: 0.2,
            min_gap: 4.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.duration > 0.0 && self.frame_rate > 0.0) {
            return bad(format!(
                "duration {} and frame rate {} must be positive",
                self.duration, self.frame_rate
            ));
        }
        if self.road_x_max <= self.road_x_min {
            return bad(format!(
                "road span [{}, {}] is empty",
                self.road_x_min, self.road_x_max
            ));
        }
        if self.n_lanes == 0 || self.lane_width <= 0.0 {
            return bad(format!(
                "need at least one lane of positive width, got {} x {}",
                self.n_lanes, self.lane_width
            ));
        }
        if !(self.mean_headway > 0.0 && self.min_gap >= 0.0) {
            return bad(format!(
                "headway {} must be positive and min gap {} non-negative",
                self.mean_headway, self.min_gap
            ));
        }
        if !(self.min_speed > 0.0 && self.speed_mean >= self.min_speed && self.speed_std >= 0.0) {
            return bad(format!(
                "speeds (mean {}, std {}, min {}) are inconsistent",
                self.speed_mean, self.speed_std, self.min_speed
            ));
        }
        if !(0.0..=1.0).contains(&self.truck_ratio) {
            return bad(format!("truck ratio {} outside [0, 1]", self.truck_ratio));
        }
        Ok(())
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        self.first_lane_y + lane as f64 * self.lane_width
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.frame_rate).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VehicleClass {
    Car,
    Truck,
}

impl VehicleClass {
    fn extent(self) -> Extent {
        match self {
            VehicleClass::Car => Extent { length: 4.6, width: 1.85, height: 1.5 },
            VehicleClass::Truck => Extent { length: 13.6, width: 2.55, height: 4.0 },
        }
    }

    fn rcs(self) -> f64 {
        match self {
            VehicleClass::Car => 10.0,
            VehicleClass::Truck => 25.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VehicleClass::Car => "car",
            VehicleClass::Truck => "truck",
        }
    }
}

/// Classifies an object by its physical size; the inverse of the extent
/// table used at spawn time.
fn class_of(extent: &Extent) -> VehicleClass {
    if extent.height > 2.5 {
        VehicleClass::Truck
    } else {
        VehicleClass::Car
    }
}

#[derive(Clone, Debug)]
struct Vehicle {
    id: String,
    class: VehicleClass,
    lane_y: f64,
    speed: f64,
    /// Center x at `t_enter`.
    x_enter: f64,
    t_enter: f64,
}

impl Vehicle {
    fn x_at(&self, t: f64) -> f64 {
        self.x_enter + self.speed * (t - self.t_enter)
    }

    fn active(&self, t: f64, cfg: &SceneConfig) -> bool {
        let half = self.class.extent().length / 2.0;
        t >= self.t_enter && self.x_at(t) - half <= cfg.road_x_max
    }

    fn state(&self, t: f64) -> ObjectState {
        ObjectState {
            id: self.id.clone(),
            t,
            x: self.x_at(t),
            y: self.lane_y,
            yaw: 0.0,
            v_x: self.speed,
            v_y: 0.0,
            yaw_rate: 0.0,
            extent: self.class.extent(),
        }
    }
}

/// One ground-truth frame: every active object plus the ids of those the
/// line-of-sight oracle reports as fully hidden from the sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtFrame {
    pub t: f64,
    pub objects: Vec<ObjectState>,
    pub occluded: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLog {
    pub sensor: SensorPose,
    pub frames: Vec<GtFrame>,
}

impl GroundTruthLog {
    pub fn object_frames(&self) -> Vec<ObjectFrame> {
        self.frames
            .iter()
            .map(|f| ObjectFrame { t: f.t, objects: f.objects.clone() })
            .collect()
    }
}

/// Number of line-of-sight sample points per object (perimeter positions
/// times heights).
const OCCLUSION_SAMPLES: (usize, usize) = (16, 4);
const SAMPLE_HEIGHT_FRACTIONS: [f64; 4] = [0.2, 0.45, 0.7, 0.95];

/// Whether `target` is completely hidden from the sensor by the other
/// objects: every one of 64 sample points spread over the target's sides
/// (16 perimeter positions x 4 heights) must be blocked. A single exposed
/// sample makes the object visible.
pub fn is_occluded(target: &ObjectState, others: &[ObjectState], sensor: &SensorPose) -> bool {
    let fp = target.footprint();
    let origin = [sensor.x, sensor.y, sensor.z];
    let blockers: Vec<(OrientedRect, f64)> = others
        .iter()
        .filter(|o| o.id != target.id)
        .map(|o| (o.footprint(), o.extent.height))
        .collect();
    if blockers.is_empty() {
        return false;
    }
    let corners = fp.corners();
    let (n_perimeter, _) = OCCLUSION_SAMPLES;
    let per_edge = n_perimeter / 4;
    for edge in 0..4 {
        let (ax, ay) = corners[edge];
        let (bx, by) = corners[(edge + 1) % 4];
        for s in 0..per_edge {
            let f = (2 * s + 1) as f64 / (2 * per_edge) as f64;
            let px = ax + f * (bx - ax);
            let py = ay + f * (by - ay);
            for hf in SAMPLE_HEIGHT_FRACTIONS {
                let sample = [px, py, hf * target.extent.height];
                let blocked = blockers
                    .iter()
                    .any(|(rect, h)| segment_hits_box(origin, sample, rect, *h));
                if !blocked {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether the open segment from `p0` to `p1` passes through the interior
/// of the upright box given by `rect` extruded from z = 0 to `height`.
fn segment_hits_box(p0: [f64; 3], p1: [f64; 3], rect: &OrientedRect, height: f64) -> bool {
    let (lx0, ly0) = rect.to_local(p0[0], p0[1]);
    let (lx1, ly1) = rect.to_local(p1[0], p1[1]);
    let start = [lx0, ly0, p0[2]];
    let delta = [lx1 - lx0, ly1 - ly0, p1[2] - p0[2]];
    let lo = [-rect.length / 2.0, -rect.width / 2.0, 0.0];
    let hi = [rect.length / 2.0, rect.width / 2.0, height];
    let mut t_enter = 0.0f64;
    let mut t_exit = 1.0f64;
    for axis in 0..3 {
        if delta[axis].abs() < 1e-12 {
            if start[axis] <= lo[axis] || start[axis] >= hi[axis] {
                return false;
            }
            continue;
        }
        let mut t0 = (lo[axis] - start[axis]) / delta[axis];
        let mut t1 = (hi[axis] - start[axis]) / delta[axis];
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter >= t_exit {
            return false;
        }
    }
    true
}

/// Generates the full ground-truth log for a scene.
///
/// Lanes are filled front-to-back at t = 0 and then fed by a per-lane
/// arrival process. A follower's speed is capped so that it cannot close
/// its initial gap to less than `min_gap` within the scene duration, which
/// keeps same-lane footprints from ever overlapping.
pub fn generate_scene(cfg: &SceneConfig, sensor: &SensorPose) -> Result<GroundTruthLog, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let speed_dist = Normal::new(cfg.speed_mean, cfg.speed_std)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let headway = Exp::new(1.0 / cfg.mean_headway).map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    let mut vehicles: Vec<Vehicle> = Vec::new();
    let mut counter = 0u32;
    for lane in 0..cfg.n_lanes {
        let lane_y = cfg.lane_center(lane);
        // Initial population, placed from the far end backwards so each
        // new vehicle is the follower of the previous one.
        let mut ahead: Option<usize> = None;
        let mut front = cfg.road_x_max;
        loop {
            let class = if rng.gen_bool(cfg.truck_ratio) {
                VehicleClass::Truck
            } else {
                VehicleClass::Car
            };
            let len = class.extent().length;
            let center = front - len / 2.0;
            if center - len / 2.0 < cfg.road_x_min {
                break;
            }
            let mut speed = speed_dist.sample(&mut rng).max(cfg.min_speed);
            if let Some(a) = ahead {
                let leader: &Vehicle = &vehicles[a];
                let gap = (leader.x_enter - leader.class.extent().length / 2.0) - front;
                let cap = leader.speed + (gap - cfg.min_gap).max(0.0) / cfg.duration;
                speed = speed.min(cap);
            }
            counter += 1;
            vehicles.push(Vehicle {
                id: format!("{}-{}", class.name(), counter),
                class,
                lane_y,
                speed,
                x_enter: center,
                t_enter: 0.0,
            });
            ahead = Some(vehicles.len() - 1);
            let gap = (cfg.speed_mean * headway.sample(&mut rng)).max(cfg.min_gap);
            front = center - len / 2.0 - gap;
        }
        // Arrivals enter rear-first at the road start.
        let mut t = headway.sample(&mut rng);
        while t < cfg.duration {
            let class = if rng.gen_bool(cfg.truck_ratio) {
                VehicleClass::Truck
            } else {
                VehicleClass::Car
            };
            let len = class.extent().length;
            let center = cfg.road_x_min + len / 2.0;
            let mut t_enter = t;
            let mut speed = speed_dist.sample(&mut rng).max(cfg.min_speed);
            if let Some(a) = ahead {
                let leader: &Vehicle = &vehicles[a];
                let leader_rear = |at: f64| leader.x_at(at) - leader.class.extent().length / 2.0;
                // Hold the spawn until the leader has cleared the entry gap.
                while leader_rear(t_enter) - (center + len / 2.0) < cfg.min_gap {
                    t_enter += 0.25;
                    if t_enter >= cfg.duration {
                        break;
                    }
                }
                if t_enter >= cfg.duration {
                    t += headway.sample(&mut rng);
                    continue;
                }
                let gap = leader_rear(t_enter) - (center + len / 2.0);
                let remaining = (cfg.duration - t_enter).max(0.1);
                speed = speed.min(leader.speed + (gap - cfg.min_gap).max(0.0) / remaining);
            }
            counter += 1;
            vehicles.push(Vehicle {
                id: format!("{}-{}", class.name(), counter),
                class,
                lane_y,
                speed,
                x_enter: center,
                t_enter,
            });
            ahead = Some(vehicles.len() - 1);
            t = t_enter + headway.sample(&mut rng);
        }
    }

    let mut frames = Vec::with_capacity(cfg.frame_count());
    for k in 0..cfg.frame_count() {
        let t = k as f64 / cfg.frame_rate;
        let objects: Vec<ObjectState> = vehicles
            .iter()
            .filter(|v| v.active(t, cfg))
            .map(|v| v.state(t))
            .collect();
        let occluded = objects
            .iter()
            .filter(|o| is_occluded(o, &objects, sensor))
            .map(|o| o.id.clone())
            .collect();
        frames.push(GtFrame { t, objects, occluded });
    }
    Ok(GroundTruthLog { sensor: *sensor, frames })
}

/// Whether the radar can return anything from this object: inside the 2D
/// wedge and the object's subtended elevation interval, taken at its
/// nearest ground range, overlaps the sensor's elevation window. This is
/// the same gate the radar frontend applies, exposed so evaluations can
/// count eligible pairs consistently.
pub fn radar_gate(obj: &ObjectState, sensor: &SensorPose) -> bool {
    if !object_in_static_fov(obj, sensor) {
        return false;
    }
    let (sx, sy) = sensor.ground_position();
    let r = obj.footprint().distance(sx, sy);
    if r <= 0.0 {
        return true;
    }
    let top = (obj.extent.height - sensor.z).atan2(r);
    let bottom = (-sensor.z).atan2(r);
    top >= sensor.fov.elevation_min && bottom <= sensor.fov.elevation_max
}

/// Radar frontend behavior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarDetectionModel {
    /// When set, every eligible object returns exactly one noise-free
    /// measurement per frame and no clutter is generated.
    pub deterministic: bool,
    /// Per-frame detection probability of an eligible, non-occluded object.
    pub p_detect: f64,
    /// Std dev of the ground-position noise per axis, meters.
    pub position_noise: f64,
    /// Std dev of the doppler noise, m/s.
    pub doppler_noise: f64,
    /// Mean number of clutter returns per frame (Poisson).
    pub clutter_rate: f64,
    /// Std dev of clutter doppler around zero, m/s.
    pub clutter_doppler_std: f64,
}

impl Default for RadarDetectionModel {
    fn default() -> Self {
        RadarDetectionModel {
            deterministic: true,
            p_detect: 1.0,
            position_noise: 0.3,
            doppler_noise: 0.2,
            clutter_rate: 0.0,
            clutter_doppler_std: 0.3,
        }
    }
}

/// One measurement tagged with the id of the object that produced it;
/// `None` marks clutter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMeasurement {
    pub measurement: Measurement,
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarFrame {
    pub t: f64,
    pub returns: Vec<SimMeasurement>,
}

/// Strips source tags, producing the frames the estimators consume.
pub fn measurement_frames(frames: &[RadarFrame]) -> Vec<MeasurementFrame> {
    frames
        .iter()
        .map(|f| MeasurementFrame {
            t: f.t,
            measurements: f.returns.iter().map(|r| r.measurement.clone()).collect(),
        })
        .collect()
}

/// Pulls the polar components of a measurement just inside the grid, so
/// that noise can never push a return off the map.
fn clamp_into(m: Measurement, spec: &SphericalGridSpec) -> Measurement {
    const EDGE: f64 = 1e-6;
    match m.position {
        MeasurementPosition::Polar { range, azimuth, elevation } => Measurement {
            position: MeasurementPosition::Polar {
                range: range.clamp(spec.r_min, spec.r_max - EDGE),
                azimuth: azimuth.clamp(spec.azimuth_min, spec.azimuth_max - EDGE),
                elevation: elevation.clamp(spec.elevation_min, spec.elevation_max - EDGE),
            },
            ..m
        },
        MeasurementPosition::Cartesian { .. } => m,
    }
}

/// Simulates the radar over a whole ground-truth log.
///
/// Each eligible ([`radar_gate`]), non-occluded object reflects from the
/// top edge of its footprint point nearest to the sensor, with its exact
/// ground-plane radial velocity as doppler. In stochastic mode detections
/// are Bernoulli draws, positions and doppler get Gaussian noise, and
/// ground clutter with near-zero doppler is mixed in. Returns are emitted
/// in sensor-frame polar coordinates, clamped into `spec`.
pub fn simulate_radar(
    log: &GroundTruthLog,
    spec: &SphericalGridSpec,
    model: &RadarDetectionModel,
    seed: u64,
) -> Vec<RadarFrame> {
    let sensor = &log.sensor;
    let (sx, sy) = sensor.ground_position();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(log.frames.len());
    for frame in &log.frames {
        let mut returns = Vec::new();
        for obj in &frame.objects {
            if !radar_gate(obj, sensor) || frame.occluded.contains(&obj.id) {
                continue;
            }
            if !model.deterministic && !rng.gen_bool(model.p_detect) {
                continue;
            }
            let (mut px, mut py) = obj.footprint().nearest_point(sx, sy);
            let mut doppler = obj.radial_velocity((sx, sy));
            if !model.deterministic {
                let pos = Normal::new(0.0, model.position_noise).unwrap();
                let dop = Normal::new(0.0, model.doppler_noise).unwrap();
                px += pos.sample(&mut rng);
                py += pos.sample(&mut rng);
                doppler += dop.sample(&mut rng);
            }
            let m = Measurement {
                position: MeasurementPosition::Cartesian { x: px, y: py, z: obj.extent.height },
                doppler: Some(doppler),
                quality: 1.0,
                rcs: Some(class_of(&obj.extent).rcs()),
                timestamp: frame.t,
            }
            .to_sensor_polar(sensor);
            returns.push(SimMeasurement {
                measurement: clamp_into(m, spec),
                source: Some(obj.id.clone()),
            });
        }
        if !model.deterministic && model.clutter_rate > 0.0 {
            let n = Poisson::new(model.clutter_rate).unwrap().sample(&mut rng) as usize;
            let dop = Normal::new(0.0, model.clutter_doppler_std).unwrap();
            for _ in 0..n {
                let g: f64 = rng.gen_range(12.0..0.8 * spec.r_max);
                let az = rng.gen_range(spec.azimuth_min..spec.azimuth_max);
                let world_az = sensor.yaw + az;
                let m = Measurement {
                    position: MeasurementPosition::Cartesian {
                        x: sx + g * world_az.cos(),
                        y: sy + g * world_az.sin(),
                        z: 0.3,
                    },
                    doppler: Some(dop.sample(&mut rng)),
                    quality: 0.4,
                    rcs: Some(1.0),
                    timestamp: frame.t,
                }
                .to_sensor_polar(sensor);
                returns.push(SimMeasurement { measurement: clamp_into(m, spec), source: None });
            }
        }
        frames.push(RadarFrame { t: frame.t, returns });
    }
    frames
}

/// Pinhole camera mounted at the sensor pose; pixels in image coordinates
/// with v growing downward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: f64,
    pub image_height: f64,
    /// Objects farther than this ground range are never detected.
    pub max_detection_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            fx: 1400.0,
            fy: 1400.0,
            cx: 960.0,
            cy: 540.0,
            image_width: 1920.0,
            image_height: 1080.0,
            max_detection_range: 120.0,
        }
    }
}

impl CameraModel {
    /// Camera basis in world coordinates: right, down, forward. Forward
    /// follows the pose yaw/pitch; with a negative pitch the camera looks
    /// below the horizon.
    fn axes(sensor: &SensorPose) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (cy, sy) = (sensor.yaw.cos(), sensor.yaw.sin());
        let (cp, sp) = (sensor.pitch.cos(), sensor.pitch.sin());
        let forward = [cp * cy, cp * sy, sp];
        let right = [sy, -cy, 0.0];
        // forward x right: down in the image for a level camera.
        let down = [
            forward[1] * right[2] - forward[2] * right[1],
            forward[2] * right[0] - forward[0] * right[2],
            forward[0] * right[1] - forward[1] * right[0],
        ];
        (right, down, forward)
    }

    /// Projects a world point; `None` when it lies at or behind the image
    /// plane.
    pub fn project_point(&self, sensor: &SensorPose, p: [f64; 3]) -> Option<(f64, f64)> {
        let (right, down, forward) = Self::axes(sensor);
        let rel = [p[0] - sensor.x, p[1] - sensor.y, p[2] - sensor.z];
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let depth = dot(forward, rel);
        if depth < 1e-6 {
            return None;
        }
        Some((
            self.fx * dot(right, rel) / depth + self.cx,
            self.fy * dot(down, rel) / depth + self.cy,
        ))
    }

    /// Homography mapping image pixels to ground-plane (z = 0) world
    /// coordinates for this camera pose.
    pub fn ground_homography(&self, sensor: &SensorPose) -> Result<Homography, SensorError> {
        let (right, down, forward) = Self::axes(sensor);
        let c = [sensor.x, sensor.y, sensor.z];
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        // Rows map homogeneous ground points (X, Y, 1) to camera coords.
        let a = [
            [right[0], right[1], -dot(right, c)],
            [down[0], down[1], -dot(down, c)],
            [forward[0], forward[1], -dot(forward, c)],
        ];
        let mut g2i = [[0.0; 3]; 3];
        for j in 0..3 {
            g2i[0][j] = self.fx * a[0][j] + self.cx * a[2][j];
            g2i[1][j] = self.fy * a[1][j] + self.cy * a[2][j];
            g2i[2][j] = a[2][j];
        }
        Ok(Homography::new(g2i)?.inverse())
    }
}

/// One image-space detection with the id of the object behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimBox {
    pub bbox: BoundingBox2D,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub t: f64,
    pub boxes: Vec<SimBox>,
}

/// Simulates the camera: every non-occluded object within detection range
/// whose box projects into the image yields the axis-aligned hull of its
/// eight projected corners, clipped to the image.
pub fn simulate_camera(log: &GroundTruthLog, model: &CameraModel) -> Vec<CameraFrame> {
    let sensor = &log.sensor;
    let (sx, sy) = sensor.ground_position();
    let mut frames = Vec::with_capacity(log.frames.len());
    for frame in &log.frames {
        let mut boxes = Vec::new();
        for obj in &frame.objects {
            if frame.occluded.contains(&obj.id) {
                continue;
            }
            if obj.footprint().distance(sx, sy) > model.max_detection_range {
                continue;
            }
            let b3 = BoundingBox3D { cx: obj.x, cy: obj.y, yaw: obj.yaw, extent: obj.extent };
            let mut u_min = f64::INFINITY;
            let mut u_max = f64::NEG_INFINITY;
            let mut v_min = f64::INFINITY;
            let mut v_max = f64::NEG_INFINITY;
            let mut behind = false;
            for corner in b3.corners() {
                match model.project_point(sensor, corner) {
                    Some((u, v)) => {
                        u_min = u_min.min(u);
                        u_max = u_max.max(u);
                        v_min = v_min.min(v);
                        v_max = v_max.max(v);
                    }
                    None => {
                        behind = true;
                        break;
                    }
                }
            }
            if behind {
                continue;
            }
            u_min = u_min.max(0.0);
            v_min = v_min.max(0.0);
            u_max = u_max.min(model.image_width);
            v_max = v_max.min(model.image_height);
            if u_max - u_min < 2.0 || v_max - v_min < 2.0 {
                continue;
            }
            boxes.push(SimBox {
                bbox: BoundingBox2D {
                    u_min,
                    v_min,
                    u_max,
                    v_max,
                    class: class_of(&obj.extent).name().to_string(),
                    confidence: 1.0,
                },
                source: obj.id.clone(),
            });
        }
        frames.push(CameraFrame { t: frame.t, boxes });
    }
    frames
}
