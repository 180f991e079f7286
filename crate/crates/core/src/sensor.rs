//! Measurements and the models that turn them into occupancy evidence:
//! radar preprocessing, Gaussian inverse sensor models for 2D and spherical
//! grids, occupancy decay, and camera-box lifting onto the ground plane.

use crate::grid::{Grid2D, GridRay2, GridShape, OrientedRect, ScalarGrid, SensorPose, SphericalGrid, VoxelGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("measurement position must be Cartesian for this operation")]
    NotCartesian,
    #[error("measurement position must be polar for this operation")]
    NotPolar,
    #[error("measurement at range {r:.2} m, azimuth {az:.4} rad, elevation {el:.4} rad lies outside the grid")]
    OutsideGrid { r: f64, az: f64, el: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix is not invertible (|det| = {0:.3e})")]
    NotInvertible(f64),
    #[error("projected point is at infinity (w = {0:.3e})")]
    PointAtInfinity(f64),
    #[error("degenerate bounding box: {0}")]
    DegenerateBox(String),
}

// ---------------------------------------------------------------------------
// Measurements

/// Measurement position, either in world Cartesian coordinates or in the
/// sensor's polar frame (azimuth/elevation relative to the boresight).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementPosition {
    Cartesian { x: f64, y: f64, z: f64 },
    Polar { range: f64, azimuth: f64, elevation: f64 },
}

/// One detection from a sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub position: MeasurementPosition,
    /// Radial velocity, m/s, positive receding; `None` if not measured.
    pub doppler: Option<f64>,
    /// Detection quality in [0, 1].
    pub quality: f64,
    /// Radar cross-section, dBsm; `None` for non-radar detections.
    pub rcs: Option<f64>,
    /// Seconds.
    pub timestamp: f64,
}

impl Measurement {
    /// World-frame 3D position; polar positions are projected through the
    /// sensor pose.
    pub fn world_position(&self, sensor: &SensorPose) -> (f64, f64, f64) {
        match self.position {
            MeasurementPosition::Cartesian { x, y, z } => (x, y, z),
            MeasurementPosition::Polar { range, azimuth, elevation } => {
                let ground = range * elevation.cos();
                let heading = sensor.yaw + azimuth;
                (
                    sensor.x + ground * heading.cos(),
                    sensor.y + ground * heading.sin(),
                    sensor.z + range * elevation.sin(),
                )
            }
        }
    }

    /// World-frame ground-plane position (z dropped).
    pub fn ground_position(&self, sensor: &SensorPose) -> (f64, f64) {
        let (x, y, _) = self.world_position(sensor);
        (x, y)
    }

    /// The same measurement with its position rewritten as world Cartesian.
    pub fn to_world_cartesian(&self, sensor: &SensorPose) -> Measurement {
        let (x, y, z) = self.world_position(sensor);
        Measurement { position: MeasurementPosition::Cartesian { x, y, z }, ..self.clone() }
    }

    /// The same measurement with its position rewritten in the sensor's
    /// polar frame.
    pub fn to_sensor_polar(&self, sensor: &SensorPose) -> Measurement {
        match self.position {
            MeasurementPosition::Polar { .. } => self.clone(),
            MeasurementPosition::Cartesian { x, y, z } => {
                let range = sensor.ground_range_to(x, y).hypot(z - sensor.z);
                Measurement {
                    position: MeasurementPosition::Polar {
                        range,
                        azimuth: sensor.azimuth_to(x, y),
                        elevation: sensor.elevation_to(x, y, z),
                    },
                    ..self.clone()
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Radar preprocessing

/// Gates applied to raw radar frames before any grid update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarFilterConfig {
    /// Detections with quality below this are dropped.
    pub min_quality: f64,
    /// Sensor-frame elevation window, radians. Applies to polar positions;
    /// Cartesian positions carry no sensor-frame elevation and pass.
    pub elevation_min: f64,
    pub elevation_max: f64,
    /// Accepted radar cross-section window, dBsm; missing rcs passes.
    pub rcs_min: f64,
    pub rcs_max: f64,
    /// Minimum absolute radial velocity, m/s; suppresses stationary
    /// clutter. Missing doppler passes.
    pub min_abs_doppler: f64,
}

impl RadarFilterConfig {
    /// Whether a single measurement survives all four gates.
    pub fn retains(&self, m: &Measurement) -> bool {
        if m.quality < self.min_quality {
            return false;
        }
        if let MeasurementPosition::Polar { elevation, .. } = m.position {
            if elevation < self.elevation_min || elevation > self.elevation_max {
                return false;
            }
        }
        if let Some(rcs) = m.rcs {
            if rcs < self.rcs_min || rcs > self.rcs_max {
                return false;
            }
        }
        if let Some(d) = m.doppler {
            if d.abs() < self.min_abs_doppler {
                return false;
            }
        }
        true
    }
}

/// Drops measurements that fail any gate; survivor order is preserved.
pub fn preprocess_radar(frame: &[Measurement], cfg: &RadarFilterConfig) -> Vec<Measurement> {
    frame.iter().filter(|m| cfg.retains(m)).cloned().collect()
}

// ---------------------------------------------------------------------------
// Inverse sensor models

/// Gaussian inverse sensor model on a 2D ground grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianIsmConfig {
    /// Occupancy contributed at the measurement position; must exceed the
    /// prior.
    pub peak_occupancy: f64,
    /// 2x2 ground-plane position covariance of a return, m^2.
    pub covariance: [[f64; 2]; 2],
    /// Occupancy subtracted from cells the sensor-to-return ray crosses.
    pub free_space_decrement: f64,
    /// Occupancy meaning "no information"; 0.5 by convention.
    pub occupancy_prior: f64,
}

impl CartesianIsmConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        validate_peak(self.peak_occupancy, self.occupancy_prior, self.free_space_decrement)?;
        let c = &self.covariance;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if c[0][0] <= 0.0 || det <= 0.0 {
            return Err(SensorError::InvalidConfig(
                "covariance must be positive definite".into(),
            ));
        }
        if (c[0][1] - c[1][0]).abs() > 1e-9 * c[0][0].abs().max(c[1][1].abs()) {
            return Err(SensorError::InvalidConfig("covariance must be symmetric".into()));
        }
        Ok(())
    }

    fn inverse_covariance(&self) -> [[f64; 2]; 2] {
        let c = &self.covariance;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        [[c[1][1] / det, -c[0][1] / det], [-c[1][0] / det, c[0][0] / det]]
    }

    /// Radius around the measurement beyond which occupied evidence is
    /// truncated (3 sigma of the widest marginal).
    fn truncation_radius(&self) -> f64 {
        3.0 * self.covariance[0][0].max(self.covariance[1][1]).sqrt()
    }
}

fn validate_peak(peak: f64, prior: f64, decrement: f64) -> Result<(), SensorError> {
    if !(0.0..1.0).contains(&prior) {
        return Err(SensorError::InvalidConfig(format!("occupancy prior {prior} outside [0, 1)")));
    }
    if !(peak > prior && peak <= 1.0) {
        return Err(SensorError::InvalidConfig(format!(
            "peak occupancy {peak} must lie in (prior, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&decrement) {
        return Err(SensorError::InvalidConfig(format!(
            "free-space decrement {decrement} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Folds one Cartesian measurement into a 2D occupancy grid.
///
/// Cells within three sigma of the return gain
/// `(peak - prior) * exp(-m2 / 2)` where `m2` is the squared Mahalanobis
/// distance of the cell center; the result is clamped to [0, 1]. Cells
/// crossed by the sensor-to-return ray before the measurement (beyond the
/// truncation radius) lose `free_space_decrement`, floored at 0.
pub fn ism_update_cartesian(
    grid: &mut Grid2D,
    sensor_ground: (f64, f64),
    z: &Measurement,
    cfg: &CartesianIsmConfig,
) -> Result<(), SensorError> {
    let mut delta = vec![0.0; grid.spec().cell_count()];
    accumulate_cartesian(grid, sensor_ground, z, cfg, &mut delta)?;
    apply_delta(grid.values_mut(), &delta);
    Ok(())
}

/// Folds a whole frame of Cartesian measurements at once.
///
/// Evidence from all measurements is summed per cell before the single
/// clamp to [0, 1], so the result does not depend on measurement order.
pub fn ism_update_cartesian_batch(
    grid: &mut Grid2D,
    sensor_ground: (f64, f64),
    frame: &[Measurement],
    cfg: &CartesianIsmConfig,
) -> Result<(), SensorError> {
    let mut delta = vec![0.0; grid.spec().cell_count()];
    for z in frame {
        accumulate_cartesian(grid, sensor_ground, z, cfg, &mut delta)?;
    }
    apply_delta(grid.values_mut(), &delta);
    Ok(())
}

fn accumulate_cartesian(
    grid: &Grid2D,
    sensor_ground: (f64, f64),
    z: &Measurement,
    cfg: &CartesianIsmConfig,
    delta: &mut [f64],
) -> Result<(), SensorError> {
    let MeasurementPosition::Cartesian { x: zx, y: zy, .. } = z.position else {
        return Err(SensorError::NotCartesian);
    };
    let spec = *grid.spec();
    let truncation = cfg.truncation_radius();

    // Free space along the ray, stopping at the return and skipping the
    // cells that receive occupied evidence.
    let mut ray = GridRay2::new(&spec, sensor_ground, (zx, zy));
    let target = ray.target();
    for (i, j) in &mut ray {
        if (i, j) == target {
            break;
        }
        if i < 0 || j < 0 || i >= spec.width as i64 || j >= spec.height as i64 {
            continue;
        }
        let (cx, cy) = spec.cell_center(i as usize, j as usize);
        if (cx - zx).hypot(cy - zy) <= truncation {
            continue;
        }
        delta[spec.index(i as usize, j as usize)] -= cfg.free_space_decrement;
    }

    // Occupied evidence in the 3-sigma ellipse around the return.
    let inv = cfg.inverse_covariance();
    let hx = 3.0 * cfg.covariance[0][0].sqrt();
    let hy = 3.0 * cfg.covariance[1][1].sqrt();
    let gain = cfg.peak_occupancy - cfg.occupancy_prior;
    let i0 = (((zx - hx - spec.origin_x) / spec.resolution).floor().max(0.0)) as usize;
    let j0 = (((zy - hy - spec.origin_y) / spec.resolution).floor().max(0.0)) as usize;
    let i1 = ((zx + hx - spec.origin_x) / spec.resolution).floor();
    let j1 = ((zy + hy - spec.origin_y) / spec.resolution).floor();
    if i1 < 0.0 || j1 < 0.0 {
        return Ok(());
    }
    let i1 = (i1 as usize).min(spec.width - 1);
    let j1 = (j1 as usize).min(spec.height - 1);
    for j in j0..=j1 {
        for i in i0..=i1 {
            let (cx, cy) = spec.cell_center(i, j);
            let dx = cx - zx;
            let dy = cy - zy;
            let m2 = dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
            if m2 <= 9.0 {
                delta[spec.index(i, j)] += gain * (-0.5 * m2).exp();
            }
        }
    }
    Ok(())
}

fn apply_delta(values: &mut [f64], delta: &[f64]) {
    for (v, d) in values.iter_mut().zip(delta) {
        if *d != 0.0 {
            *v = (*v + d).clamp(0.0, 1.0);
        }
    }
}

/// Gaussian inverse sensor model on a spherical grid, with independent
/// per-axis spreads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalIsmConfig {
    pub peak_occupancy: f64,
    /// Standard deviation of a return along range, meters.
    pub sigma_range: f64,
    /// Standard deviation across azimuth, radians.
    pub sigma_azimuth: f64,
    /// Standard deviation across elevation, radians.
    pub sigma_elevation: f64,
    pub free_space_decrement: f64,
    pub occupancy_prior: f64,
}

impl SphericalIsmConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        validate_peak(self.peak_occupancy, self.occupancy_prior, self.free_space_decrement)?;
        if self.sigma_range <= 0.0 || self.sigma_azimuth <= 0.0 || self.sigma_elevation <= 0.0 {
            return Err(SensorError::InvalidConfig("sigmas must be positive".into()));
        }
        Ok(())
    }
}

/// Folds one polar measurement into a spherical occupancy grid.
///
/// The update is dual: along every (azimuth, elevation) ray within three
/// sigma of the return's angles, bins in front of the return
/// (`r < z.r - 3 sigma_r`) lose `free_space_decrement`, bins near the
/// return gain Gaussian occupied evidence, and bins beyond
/// `z.r + 3 sigma_r` are untouched.
pub fn ism_update_spherical(
    grid: &mut SphericalGrid,
    z: &Measurement,
    cfg: &SphericalIsmConfig,
) -> Result<(), SensorError> {
    let mut delta = vec![0.0; grid.spec().cell_count()];
    accumulate_spherical(grid, z, cfg, &mut delta)?;
    apply_delta(grid.values_mut(), &delta);
    Ok(())
}

/// Frame-at-once variant of [`ism_update_spherical`]; see
/// [`ism_update_cartesian_batch`] for the order-independence rationale.
pub fn ism_update_spherical_batch(
    grid: &mut SphericalGrid,
    frame: &[Measurement],
    cfg: &SphericalIsmConfig,
) -> Result<(), SensorError> {
    let mut delta = vec![0.0; grid.spec().cell_count()];
    for z in frame {
        accumulate_spherical(grid, z, cfg, &mut delta)?;
    }
    apply_delta(grid.values_mut(), &delta);
    Ok(())
}

fn accumulate_spherical(
    grid: &SphericalGrid,
    z: &Measurement,
    cfg: &SphericalIsmConfig,
    delta: &mut [f64],
) -> Result<(), SensorError> {
    let MeasurementPosition::Polar { range, azimuth, elevation } = z.position else {
        return Err(SensorError::NotPolar);
    };
    let spec = *grid.spec();
    if spec.bin_of(range, azimuth, elevation).is_none() {
        return Err(SensorError::OutsideGrid { r: range, az: azimuth, el: elevation });
    }

    let gain = cfg.peak_occupancy - cfg.occupancy_prior;
    let free_before = range - 3.0 * cfg.sigma_range;
    let occupied_after = range + 3.0 * cfg.sigma_range;

    let ia_window = axis_window(
        azimuth,
        3.0 * cfg.sigma_azimuth,
        spec.azimuth_min,
        spec.azimuth_step(),
        spec.n_azimuth,
    );
    let ie_window = axis_window(
        elevation,
        3.0 * cfg.sigma_elevation,
        spec.elevation_min,
        spec.elevation_step(),
        spec.n_elevation,
    );

    for ie in ie_window.clone() {
        let del = (spec.elevation_center(ie) - elevation) / cfg.sigma_elevation;
        for ia in ia_window.clone() {
            let daz = (spec.azimuth_center(ia) - azimuth) / cfg.sigma_azimuth;
            let angular2 = del * del + daz * daz;
            let base = spec.index(0, ia, ie);
            for ir in 0..spec.n_range {
                let r = spec.range_center(ir);
                if r < free_before {
                    delta[base + ir] -= cfg.free_space_decrement;
                    continue;
                }
                if r > occupied_after {
                    break;
                }
                let dr = (r - range) / cfg.sigma_range;
                let m2 = dr * dr + angular2;
                if m2 <= 9.0 {
                    delta[base + ir] += gain * (-0.5 * m2).exp();
                }
            }
        }
    }
    Ok(())
}

/// Bin indices whose centers lie within `half_width` of `center` on one
/// half-open axis.
fn axis_window(center: f64, half_width: f64, min: f64, step: f64, n: usize) -> std::ops::Range<usize> {
    // Center of bin b is min + (b + 0.5) * step; solve for the bin range.
    let lo = ((center - half_width - min) / step - 0.5).ceil().max(0.0);
    let hi = ((center + half_width - min) / step - 0.5).floor();
    if hi < 0.0 || lo > (n - 1) as f64 || hi < lo {
        return 0..0;
    }
    let lo = lo as usize;
    let hi = (hi as usize).min(n - 1);
    lo..hi + 1
}

// ---------------------------------------------------------------------------
// Temporal decay

/// Exponential relaxation of occupancy toward the 0.5 prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    /// Fraction of the deviation from the prior that survives one second;
    /// 1 disables decay, 0 resets every step.
    pub decay_rate: f64,
}

impl DecayConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(0.0..=1.0).contains(&self.decay_rate) {
            return Err(SensorError::InvalidConfig(format!(
                "decay rate {} outside [0, 1]",
                self.decay_rate
            )));
        }
        Ok(())
    }
}

/// Relaxes every cell toward 0.5: `v' = 0.5 + (v - 0.5) * rate^dt`.
/// `dt` is in seconds and must be non-negative; `dt = 0` is the identity.
pub fn apply_decay<S: GridShape>(grid: &mut ScalarGrid<S>, dt: f64, cfg: &DecayConfig) {
    debug_assert!(dt >= 0.0, "decay over negative time");
    let factor = cfg.decay_rate.powf(dt);
    for v in grid.values_mut() {
        *v = 0.5 + (*v - 0.5) * factor;
    }
}

// ---------------------------------------------------------------------------
// Boxes and camera geometry

/// Object size: length along the heading axis, width across it, height
/// above the ground. Meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// Axis-aligned detection box in image pixels; `v` grows downward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox2D {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
    /// Class label, e.g. "car" or "truck".
    pub class: String,
    /// Detector confidence in [0, 1].
    pub confidence: f64,
}

/// Upright 3D box standing on the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox3D {
    /// Ground center of the footprint.
    pub cx: f64,
    pub cy: f64,
    /// Heading of the length axis, radians.
    pub yaw: f64,
    pub extent: Extent,
}

impl BoundingBox3D {
    pub fn footprint(&self) -> OrientedRect {
        OrientedRect {
            cx: self.cx,
            cy: self.cy,
            yaw: self.yaw,
            length: self.extent.length,
            width: self.extent.width,
        }
    }

    /// Whether a world point lies inside the box (boundary included).
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        (0.0..=self.extent.height).contains(&z) && self.footprint().contains(x, y)
    }

    /// The eight corners, bottom face first.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let fp = self.footprint().corners();
        let mut out = [[0.0; 3]; 8];
        for (k, &(x, y)) in fp.iter().enumerate() {
            out[k] = [x, y, 0.0];
            out[k + 4] = [x, y, self.extent.height];
        }
        out
    }
}

/// Per-class size priors with a fallback for unknown labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizePriors {
    pub classes: BTreeMap<String, Extent>,
    pub default: Extent,
}

impl SizePriors {
    pub fn get(&self, class: &str) -> Extent {
        self.classes.get(class).copied().unwrap_or(self.default)
    }
}

/// Projective map between image pixels and the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, SensorError> {
        let det = det3(&m);
        if det.abs() < 1e-12 {
            return Err(SensorError::NotInvertible(det.abs()));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// Applies the map to a point. Errors when the point maps to infinity
    /// (homogeneous w vanishes).
    pub fn project(&self, u: f64, v: f64) -> Result<(f64, f64), SensorError> {
        let m = &self.m;
        let x = m[0][0] * u + m[0][1] * v + m[0][2];
        let y = m[1][0] * u + m[1][1] * v + m[1][2];
        let w = m[2][0] * u + m[2][1] * v + m[2][2];
        if w.abs() < 1e-12 {
            return Err(SensorError::PointAtInfinity(w));
        }
        Ok((x / w, y / w))
    }

    /// The inverse map; always exists because construction requires a
    /// non-vanishing determinant.
    pub fn inverse(&self) -> Homography {
        let m = &self.m;
        let det = det3(m);
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                // Transposed cofactor (adjugate) over the determinant.
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                inv[c][r] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
            }
        }
        Homography { m: inv }
    }
}

impl TryFrom<[[f64; 3]; 3]> for Homography {
    type Error = SensorError;

    fn try_from(m: [[f64; 3]; 3]) -> Result<Self, SensorError> {
        Homography::new(m)
    }
}

impl From<Homography> for [[f64; 3]; 3] {
    fn from(h: Homography) -> [[f64; 3]; 3] {
        h.m
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Lifts a 2D detection box to a 3D box on the ground.
///
/// The box's bottom edge is projected through the image-to-ground
/// homography; its midpoint anchors the near face of the vehicle. Yaw is
/// the direction perpendicular to the projected bottom edge, oriented away
/// from the camera, and the prior extent for the detected class pushes the
/// box center half a length along that axis.
pub fn estimate_box3d(
    bbox: &BoundingBox2D,
    image_to_ground: &Homography,
    priors: &SizePriors,
) -> Result<BoundingBox3D, SensorError> {
    if bbox.u_max - bbox.u_min < 1e-9 {
        return Err(SensorError::DegenerateBox(format!(
            "image width {:.3e} px is ~0",
            bbox.u_max - bbox.u_min
        )));
    }
    let (lx, ly) = image_to_ground.project(bbox.u_min, bbox.v_max)?;
    let (rx, ry) = image_to_ground.project(bbox.u_max, bbox.v_max)?;
    let (ex, ey) = (rx - lx, ry - ly);
    let edge_len = ex.hypot(ey);
    if edge_len < 1e-9 {
        return Err(SensorError::DegenerateBox("bottom edge projects to a point".into()));
    }

    // A probe point slightly above the bottom edge in the image projects
    // farther from the camera on the ground; it disambiguates which of the
    // two edge normals points away from the camera.
    let mid_u = (bbox.u_min + bbox.u_max) / 2.0;
    let probe_dv = ((bbox.v_max - bbox.v_min) * 0.25).max(1.0);
    let (ax, ay) = image_to_ground.project(mid_u, bbox.v_max)?;
    let (px, py) = image_to_ground.project(mid_u, bbox.v_max - probe_dv)?;
    let (nx, ny) = (-ey / edge_len, ex / edge_len);
    let away = (px - ax) * nx + (py - ay) * ny;
    if away == 0.0 {
        return Err(SensorError::DegenerateBox("cannot orient the box away from the camera".into()));
    }
    let s = away.signum();
    let (nx, ny) = (nx * s, ny * s);

    let extent = priors.get(&bbox.class);
    Ok(BoundingBox3D {
        cx: ax + nx * extent.length / 2.0,
        cy: ay + ny * extent.length / 2.0,
        yaw: ny.atan2(nx),
        extent,
    })
}

/// Turns one frame of 3D boxes into occupied evidence on a voxel grid.
///
/// Every voxel whose center lies inside a box gains
/// `occupied_value - 0.5`, clamped to [0, 1]: starting from the 0.5 prior
/// a single box sets its voxels to exactly `occupied_value`.
pub fn voxelize_boxes(grid: &mut VoxelGrid, boxes: &[BoundingBox3D], occupied_value: f64) {
    let spec = *grid.spec();
    let base = spec.base;
    let gain = occupied_value - 0.5;
    for b in boxes {
        let fp = b.footprint();
        let corners = fp.corners();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in &corners {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let i0 = (((x0 - base.origin_x) / base.resolution).floor().max(0.0)) as usize;
        let j0 = (((y0 - base.origin_y) / base.resolution).floor().max(0.0)) as usize;
        let i1f = ((x1 - base.origin_x) / base.resolution).floor();
        let j1f = ((y1 - base.origin_y) / base.resolution).floor();
        if i1f < 0.0 || j1f < 0.0 || i0 >= base.width || j0 >= base.height {
            continue;
        }
        let i1 = (i1f as usize).min(base.width - 1);
        let j1 = (j1f as usize).min(base.height - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let (cx, cy) = base.cell_center(i, j);
                if !fp.contains(cx, cy) {
                    continue;
                }
                for k in 0..spec.n_z {
                    let zc = spec.layer_center(k);
                    if (0.0..=b.extent.height).contains(&zc) {
                        let idx = spec.index(i, j, k);
                        grid.values_mut()[idx] = (grid.values()[idx] + gain).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
}
