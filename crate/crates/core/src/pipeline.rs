//! End-to-end estimators: measurement streams in, 2D visibility out.
//!
//! Every pipeline produces a [`VisibilityGrid2D`] over the same
//! world-frame output grid so that runs can be scored against each other.
//! The stateful ones keep their occupancy between frames and decay it
//! toward the prior with the elapsed time, so frames must arrive in
//! timestamp order.

use crate::grid::{
    resample_polar_to_cartesian, slice_at_height, wrap_angle, Grid2D, GridError, GridSpec2D,
    OrientedRect, SensorPose, SphericalGrid, SphericalGridSpec, VoxelGrid, VoxelGridSpec, UNKNOWN,
};
use crate::metrics::{MeasurementFrame, ObjectFrame};
use crate::sensor::{
    apply_decay, estimate_box3d, ism_update_cartesian_batch, ism_update_spherical_batch,
    preprocess_radar, voxelize_boxes, BoundingBox2D, CartesianIsmConfig, DecayConfig, Extent,
    Homography, Measurement, MeasurementPosition, RadarFilterConfig, SensorError, SizePriors,
    SphericalIsmConfig,
};
use crate::visibility::{
    raytrace_2d, raytrace_spherical, raytrace_voxels, squash_z_average, OccupancyThreshold,
    RaytraceMode, VisibilityError, VisibilityGrid2D,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame at t = {t} arrived after t = {prev}")]
    NonMonotonicTime { t: f64, prev: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Visibility(#[from] VisibilityError),
}

/// Output grid shared by the bundled configurations: 160 x 15 m at 1 m,
/// covering the road corridor in front of the sensor.
pub fn default_output_grid() -> GridSpec2D {
    GridSpec2D::new(0.0, -2.0, 160, 15, 1.0).unwrap()
}

/// Spherical measurement grid matching the bundled radar: 2-150 m range at
/// ~1 m, a +/-45 deg azimuth fan at 1 deg, and elevations from -30 to
/// +5 deg at 1 deg.
pub fn default_spherical_grid() -> SphericalGridSpec {
    SphericalGridSpec {
        r_min: 2.0,
        r_max: 150.0,
        n_range: 148,
        azimuth_min: (-45f64).to_radians(),
        azimuth_max: 45f64.to_radians(),
        n_azimuth: 90,
        elevation_min: (-30f64).to_radians(),
        elevation_max: 5f64.to_radians(),
        n_elevation: 35,
    }
}

fn permissive_filter() -> RadarFilterConfig {
    RadarFilterConfig {
        min_quality: 0.0,
        elevation_min: -std::f64::consts::FRAC_PI_2,
        elevation_max: std::f64::consts::FRAC_PI_2,
        rcs_min: -100.0,
        rcs_max: 100.0,
        min_abs_doppler: 0.0,
    }
}

fn track_dt(last: &mut Option<f64>, t: f64) -> Result<f64, PipelineError> {
    let dt = match *last {
        Some(prev) if t < prev => return Err(PipelineError::NonMonotonicTime { t, prev }),
        Some(prev) => t - prev,
        None => 0.0,
    };
    *last = Some(t);
    Ok(dt)
}

// ---------------------------------------------------------------------------
// 2D radar

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Radar2dConfig {
    pub grid: GridSpec2D,
    pub filter: RadarFilterConfig,
    pub ism: CartesianIsmConfig,
    pub decay: DecayConfig,
    pub threshold: OccupancyThreshold,
}

impl Default for Radar2dConfig {
    fn default() -> Self {
        Radar2dConfig {
            grid: default_output_grid(),
            filter: permissive_filter(),
            ism: CartesianIsmConfig {
                peak_occupancy: 0.95,
                covariance: [[0.25, 0.0], [0.0, 0.25]],
                free_space_decrement: 0.05,
                occupancy_prior: 0.5,
            },
            decay: DecayConfig { decay_rate: 0.2 },
            threshold: OccupancyThreshold { occupied_above: 0.7 },
        }
    }
}

/// Ground-plane estimator: accumulates returns into a 2D occupancy grid
/// and raytraces it from the sensor.
pub struct Radar2dPipeline {
    cfg: Radar2dConfig,
    sensor: SensorPose,
    occupancy: Grid2D,
    last_t: Option<f64>,
}

impl Radar2dPipeline {
    pub fn new(cfg: Radar2dConfig, sensor: SensorPose) -> Result<Self, PipelineError> {
        cfg.grid.validate()?;
        cfg.ism.validate()?;
        cfg.decay.validate()?;
        cfg.threshold.validate()?;
        let occupancy = Grid2D::filled(cfg.grid, UNKNOWN);
        Ok(Radar2dPipeline { cfg, sensor, occupancy, last_t: None })
    }

    pub fn occupancy(&self) -> &Grid2D {
        &self.occupancy
    }

    pub fn step(&mut self, frame: &MeasurementFrame) -> Result<VisibilityGrid2D, PipelineError> {
        let dt = track_dt(&mut self.last_t, frame.t)?;
        apply_decay(&mut self.occupancy, dt, &self.cfg.decay);
        let kept: Vec<Measurement> = preprocess_radar(&frame.measurements, &self.cfg.filter)
            .iter()
            .map(|m| m.to_world_cartesian(&self.sensor))
            .collect();
        ism_update_cartesian_batch(
            &mut self.occupancy,
            self.sensor.ground_position(),
            &kept,
            &self.cfg.ism,
        )?;
        Ok(raytrace_2d(&self.occupancy, &self.sensor, &self.cfg.threshold))
    }
}

// ---------------------------------------------------------------------------
// 3D radar

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Radar3dConfig {
    pub spherical: SphericalGridSpec,
    pub output: GridSpec2D,
    /// Height of the horizontal plane whose visibility becomes the 2D
    /// output, meters.
    pub slice_height: f64,
    pub filter: RadarFilterConfig,
    pub ism: SphericalIsmConfig,
    pub decay: DecayConfig,
    pub threshold: OccupancyThreshold,
    pub mode: RaytraceMode,
}

impl Default for Radar3dConfig {
    fn default() -> Self {
        Radar3dConfig {
            spherical: default_spherical_grid(),
            output: default_output_grid(),
            slice_height: 1.0,
            filter: permissive_filter(),
            ism: SphericalIsmConfig {
                peak_occupancy: 0.95,
                sigma_range: 0.5,
                sigma_azimuth: 0.5f64.to_radians(),
                sigma_elevation: 0.5f64.to_radians(),
                free_space_decrement: 0.05,
                occupancy_prior: 0.5,
            },
            decay: DecayConfig { decay_rate: 0.2 },
            threshold: OccupancyThreshold { occupied_above: 0.7 },
            mode: RaytraceMode::Binary,
        }
    }
}

/// Slices a raytraced spherical visibility volume at a fixed height and
/// resamples it onto the output grid. The mask is true only where the
/// output cell maps into the polar fan, the slice elevation exists in the
/// volume, and the cell lies in the sensor's 2D wedge; everything else is
/// unknown.
fn spherical_to_output(
    visibility: &SphericalGrid,
    sensor: &SensorPose,
    output: &GridSpec2D,
    slice_height: f64,
) -> Result<VisibilityGrid2D, PipelineError> {
    let spec = *visibility.spec();
    let polar = spec.polar();
    let sliced = slice_at_height(visibility, sensor, slice_height)?;
    let (mut grid, mut mask) = resample_polar_to_cartesian(&sliced, sensor, output);
    // Rings whose slice elevation falls outside the volume carry no
    // information; mirror slice_at_height's per-ring bin decision.
    let ring_known: Vec<bool> = (0..spec.n_range)
        .map(|ir| {
            let el = (slice_height - sensor.z).atan2(spec.range_center(ir));
            spec.elevation_bin(el).is_some()
        })
        .collect();
    for j in 0..output.height {
        for i in 0..output.width {
            let k = output.index(i, j);
            let (x, y) = output.cell_center(i, j);
            let known = match polar.range_bin(sensor.ground_range_to(x, y)) {
                Some(ir) => ring_known[ir],
                None => false,
            };
            mask[k] &= known && sensor.in_fov_2d(x, y);
            if !mask[k] {
                grid.values_mut()[k] = UNKNOWN;
            }
        }
    }
    Ok(VisibilityGrid2D::new(grid, mask)?)
}

/// Volumetric estimator: returns
/// accumulate in a sensor-frame spherical grid, rays run per (azimuth,
/// elevation) bin, and the visibility of a fixed-height slice is projected
/// onto the output grid.
pub struct Radar3dPipeline {
    cfg: Radar3dConfig,
    sensor: SensorPose,
    occupancy: SphericalGrid,
    last_t: Option<f64>,
}

impl Radar3dPipeline {
    pub fn new(cfg: Radar3dConfig, sensor: SensorPose) -> Result<Self, PipelineError> {
        cfg.spherical.validate()?;
        cfg.output.validate()?;
        cfg.ism.validate()?;
        cfg.decay.validate()?;
        cfg.threshold.validate()?;
        let occupancy = SphericalGrid::filled(cfg.spherical, UNKNOWN);
        Ok(Radar3dPipeline { cfg, sensor, occupancy, last_t: None })
    }

    pub fn occupancy(&self) -> &SphericalGrid {
        &self.occupancy
    }

    pub fn step(&mut self, frame: &MeasurementFrame) -> Result<VisibilityGrid2D, PipelineError> {
        let dt = track_dt(&mut self.last_t, frame.t)?;
        apply_decay(&mut self.occupancy, dt, &self.cfg.decay);
        let kept: Vec<Measurement> = preprocess_radar(&frame.measurements, &self.cfg.filter)
            .iter()
            .map(|m| m.to_sensor_polar(&self.sensor))
            .collect();
        ism_update_spherical_batch(&mut self.occupancy, &kept, &self.cfg.ism)?;
        let vis = raytrace_spherical(&self.occupancy, &self.cfg.threshold, self.cfg.mode);
        spherical_to_output(&vis, &self.sensor, &self.cfg.output, self.cfg.slice_height)
    }
}

// ---------------------------------------------------------------------------
// Camera

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Camera3dConfig {
    pub voxel: VoxelGridSpec,
    pub priors: SizePriors,
    /// Occupancy written into voxels covered by a lifted box.
    pub occupied_value: f64,
    pub decay: DecayConfig,
    pub threshold: OccupancyThreshold,
    /// Vertical band whose per-column mean visibility becomes the output.
    pub squash_z: (f64, f64),
}

impl Default for Camera3dConfig {
    fn default() -> Self {
        let mut classes = BTreeMap::new();
        classes.insert("car".to_string(), Extent { length: 4.6, width: 1.85, height: 1.5 });
        classes.insert("truck".to_string(), Extent { length: 13.6, width: 2.55, height: 4.0 });
        Camera3dConfig {
            voxel: VoxelGridSpec {
                base: GridSpec2D::new(0.0, -2.0, 120, 15, 1.0).unwrap(),
                z_min: 0.0,
                z_max: 4.0,
                n_z: 8,
            },
            priors: SizePriors {
                classes,
                default: Extent { length: 4.6, width: 1.85, height: 1.5 },
            },
            occupied_value: 0.95,
            // Full reset each frame. Box evidence is positive-only (no
            // free-space carving like the radar ISMs), so carried-over
            // occupancy from previous frames trails behind every receding
            // vehicle and occludes its current position. At 10 Hz even
            // rate 0.2 keeps a stale voxel above `occupied_above` for
            // ~0.5 s, a two-car-length ghost at highway speed.
            decay: DecayConfig { decay_rate: 0.0 },
            threshold: OccupancyThreshold { occupied_above: 0.7 },
            squash_z: (0.0, 1.5),
        }
    }
}

/// Monocular estimator: image boxes are lifted to 3D with a ground
/// homography and class size priors, voxelized, raytraced in 3D, and the
/// visibility of the low band is averaged into the output grid.
pub struct Camera3dPipeline {
    cfg: Camera3dConfig,
    sensor: SensorPose,
    image_to_ground: Homography,
    occupancy: VoxelGrid,
    last_t: Option<f64>,
    skipped: u64,
}

impl Camera3dPipeline {
    pub fn new(
        cfg: Camera3dConfig,
        sensor: SensorPose,
        image_to_ground: Homography,
    ) -> Result<Self, PipelineError> {
        cfg.voxel.validate()?;
        cfg.decay.validate()?;
        cfg.threshold.validate()?;
        let occupancy = VoxelGrid::filled(cfg.voxel, UNKNOWN);
        Ok(Camera3dPipeline { cfg, sensor, image_to_ground, occupancy, last_t: None, skipped: 0 })
    }

    /// Boxes dropped so far because lifting failed or the result missed
    /// the grid.
    pub fn skipped_boxes(&self) -> u64 {
        self.skipped
    }

    pub fn occupancy(&self) -> &VoxelGrid {
        &self.occupancy
    }

    pub fn step(
        &mut self,
        t: f64,
        boxes: &[BoundingBox2D],
    ) -> Result<VisibilityGrid2D, PipelineError> {
        let dt = track_dt(&mut self.last_t, t)?;
        apply_decay(&mut self.occupancy, dt, &self.cfg.decay);
        let base = self.cfg.voxel.base;
        let lifted: Vec<_> = boxes
            .iter()
            .filter_map(|b| match estimate_box3d(b, &self.image_to_ground, &self.cfg.priors) {
                Ok(b3) if !crate::grid::cells_overlapping(&base, &b3.footprint()).is_empty() => {
                    Some(b3)
                }
                _ => {
                    self.skipped += 1;
                    None
                }
            })
            .collect();
        voxelize_boxes(&mut self.occupancy, &lifted, self.cfg.occupied_value);
        let vis = raytrace_voxels(&self.occupancy, &self.sensor, &self.cfg.threshold);
        let (z_lo, z_hi) = self.cfg.squash_z;
        let mut grid = squash_z_average(&vis, z_lo, z_hi)?;
        let mut mask = vec![false; base.cell_count()];
        for j in 0..base.height {
            for i in 0..base.width {
                let k = base.index(i, j);
                let (x, y) = base.cell_center(i, j);
                mask[k] = self.sensor.in_fov_2d(x, y);
                if !mask[k] {
                    grid.values_mut()[k] = UNKNOWN;
                }
            }
        }
        Ok(VisibilityGrid2D::new(grid, mask)?)
    }
}

/// Turns camera boxes into ground-point pseudo-measurements, for
/// association-based scoring. Each point is the lifted box's ground
/// anchor — the projection of the image box's bottom-center — which lies
/// on the body's camera-facing face. The inferred center would sit half
/// a length further along an estimated heading, so anchoring avoids
/// doubling the heading error into the reported position. Returns the
/// points and the number of boxes that could not be lifted.
pub fn camera_boxes_to_points(
    t: f64,
    boxes: &[BoundingBox2D],
    image_to_ground: &Homography,
    priors: &SizePriors,
) -> (Vec<Measurement>, u64) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for b in boxes {
        match estimate_box3d(b, image_to_ground, priors) {
            Ok(b3) => {
                let (s, c) = b3.yaw.sin_cos();
                let half = b3.extent.length / 2.0;
                out.push(Measurement {
                    position: MeasurementPosition::Cartesian {
                        x: b3.cx - half * c,
                        y: b3.cy - half * s,
                        z: 0.0,
                    },
                    doppler: None,
                    quality: b.confidence,
                    rcs: None,
                    timestamp: t,
                });
            }
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}

// ---------------------------------------------------------------------------
// Ground-truth reference

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub spherical: SphericalGridSpec,
    pub output: GridSpec2D,
    pub slice_height: f64,
    pub threshold: OccupancyThreshold,
    pub mode: RaytraceMode,
    /// Margin added around every footprint before rasterization, meters.
    /// Compensates for output cells whose centers poke out of the true
    /// footprint; half the cell diagonal of the output grid is the
    /// natural choice.
    pub footprint_inflation: f64,
    pub occupied_value: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        // Much finer elevation than the live radar grid: the slice reads
        // one elevation per range ring, and with coarse bins the row
        // center sits up to half a bin away from the ring's sightline —
        // nearly a meter of height error at 100 m, enough to graze roofs
        // the real sightline clears.
        let spherical =
            SphericalGridSpec { n_elevation: 500, ..default_spherical_grid() };
        ReferenceConfig {
            spherical,
            output: default_output_grid(),
            slice_height: 1.0,
            threshold: OccupancyThreshold { occupied_above: 0.7 },
            mode: RaytraceMode::Binary,
            footprint_inflation: std::f64::consts::SQRT_2 / 2.0,
            occupied_value: 0.95,
        }
    }
}

/// Upper-bound estimator fed by ground truth instead of measurements:
/// each frame it rasterizes the true object boxes into a clean spherical
/// occupancy volume and runs the same raytrace / slice / resample back
/// half as the volumetric radar pipeline. Stateless across frames.
pub struct ReferencePipeline {
    cfg: ReferenceConfig,
    sensor: SensorPose,
}

/// Distance interval in which an infinite ray from `origin` along the
/// unit vector `dir` passes through the upright box `rect` x `[0, height]`.
fn ray_box_interval(
    origin: [f64; 3],
    dir: [f64; 3],
    rect: &OrientedRect,
    height: f64,
) -> Option<(f64, f64)> {
    let (ox, oy) = rect.to_local(origin[0], origin[1]);
    let (tx, ty) = rect.to_local(origin[0] + dir[0], origin[1] + dir[1]);
    let start = [ox, oy, origin[2]];
    let delta = [tx - ox, ty - oy, dir[2]];
    let lo = [-rect.length / 2.0, -rect.width / 2.0, 0.0];
    let hi = [rect.length / 2.0, rect.width / 2.0, height];
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        if delta[axis].abs() < 1e-12 {
            if start[axis] <= lo[axis] || start[axis] >= hi[axis] {
                return None;
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
            return None;
        }
    }
    Some((t_enter, t_exit))
}

impl ReferencePipeline {
    pub fn new(cfg: ReferenceConfig, sensor: SensorPose) -> Result<Self, PipelineError> {
        cfg.spherical.validate()?;
        cfg.output.validate()?;
        cfg.threshold.validate()?;
        Ok(ReferencePipeline { cfg, sensor })
    }

    /// Perfect occupancy for one frame: free space everywhere, a bin
    /// occupied when an object box reaches into its angular wedge.
    ///
    /// Testing only each bin's central ray is not enough: at long range a
    /// bin's footprint is wider than a car, so the central ray can pass
    /// beside the body even though the box clearly sits inside the bin.
    /// Instead each box walks the small rectangle of (elevation, azimuth)
    /// bins it can touch and probes every wedge with a fan of sub-rays
    /// spread across the bin's azimuth, marking the slant-range interval
    /// actually covered. Elevation is probed only at the bin center: the
    /// downstream slice reads one elevation per range ring, and letting
    /// edge elevations mark the bin would block whole rows behind a body
    /// that the representative sightline actually clears.
    ///
    /// Width is inflated so grazing directions toward cell centers that
    /// poke sideways out of a footprint still hit the occluder; length is
    /// left exact so the occupied surface never creeps in front of the
    /// true face (which would shadow the object's own frontal cells).
    pub fn rasterize(&self, frame: &ObjectFrame) -> SphericalGrid {
        let spec = self.cfg.spherical;
        let origin = [self.sensor.x, self.sensor.y, self.sensor.z];
        let mut grid = SphericalGrid::filled(spec, 0.0);
        let step = spec.range_step();
        let az_step = spec.azimuth_step();
        let el_step = spec.elevation_step();
        let n_range = spec.n_range;
        let values = grid.values_mut();

        for obj in &frame.objects {
            let fp = obj.footprint();
            let rect = OrientedRect { width: fp.width + 2.0 * self.cfg.footprint_inflation, ..fp };
            let h = obj.extent.height;

            // Candidate azimuth bins from the corner directions.
            let mut az_lo = f64::MAX;
            let mut az_hi = f64::MIN;
            for (x, y) in rect.corners() {
                let az = wrap_angle((y - self.sensor.y).atan2(x - self.sensor.x) - self.sensor.yaw);
                az_lo = az_lo.min(az);
                az_hi = az_hi.max(az);
            }
            if az_hi - az_lo > std::f64::consts::PI {
                // Corners straddle the rear direction; no scene we build
                // puts a footprint there, so just scan everything.
                az_lo = spec.azimuth_min;
                az_hi = spec.azimuth_max;
            }
            let ia_lo = ((az_lo - spec.azimuth_min) / az_step).floor().max(0.0) as usize;
            let ia_hi = ((az_hi - spec.azimuth_min) / az_step).floor().min((spec.n_azimuth - 1) as f64);
            if ia_hi < 0.0 || ia_lo >= spec.n_azimuth {
                continue;
            }
            let ia_hi = ia_hi as usize;

            // Candidate elevation bins from the near/far silhouette edges.
            let d_near = rect.distance(self.sensor.x, self.sensor.y).max(1e-9);
            let d_far = rect
                .corners()
                .iter()
                .map(|&(x, y)| (x - self.sensor.x).hypot(y - self.sensor.y))
                .fold(0.0f64, f64::max);
            let top = h - self.sensor.z;
            let bot = -self.sensor.z;
            let el_hi = top.atan2(d_near).max(top.atan2(d_far));
            let el_lo = bot.atan2(d_near).min(bot.atan2(d_far));
            let ie_lo = ((el_lo - spec.elevation_min) / el_step).floor().max(0.0) as usize;
            let ie_hi =
                ((el_hi - spec.elevation_min) / el_step).floor().min((spec.n_elevation - 1) as f64);
            if ie_hi < 0.0 || ie_lo >= spec.n_elevation {
                continue;
            }
            let ie_hi = ie_hi as usize;

            for ie in ie_lo..=ie_hi {
                let el_c = spec.elevation_center(ie);
                for ia in ia_lo..=ia_hi {
                    let az_c = self.sensor.yaw + spec.azimuth_center(ia);
                    let mut t_lo = f64::MAX;
                    let mut t_hi = f64::MIN;
                    let (sin_el, cos_el) = el_c.sin_cos();
                    for da in [-0.45, 0.0, 0.45] {
                        let az = az_c + da * az_step;
                        let dir = [cos_el * az.cos(), cos_el * az.sin(), sin_el];
                        if let Some((t0, t1)) = ray_box_interval(origin, dir, &rect, h) {
                            t_lo = t_lo.min(t0);
                            t_hi = t_hi.max(t1);
                        }
                    }
                    if t_lo > t_hi {
                        continue;
                    }
                    let lo = ((t_lo - spec.r_min) / step).floor().max(0.0) as usize;
                    let hi = ((t_hi - spec.r_min) / step).floor();
                    if hi < 0.0 || lo >= n_range {
                        continue;
                    }
                    let hi = (hi as usize).min(n_range - 1);
                    let row = (ie * spec.n_azimuth + ia) * n_range;
                    for ir in lo..=hi {
                        values[row + ir] = self.cfg.occupied_value;
                    }
                }
            }
        }
        grid
    }

    pub fn step(&self, frame: &ObjectFrame) -> Result<VisibilityGrid2D, PipelineError> {
        let occupancy = self.rasterize(frame);
        let vis = raytrace_spherical(&occupancy, &self.cfg.threshold, self.cfg.mode);
        spherical_to_output(&vis, &self.sensor, &self.cfg.output, self.cfg.slice_height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FovSpec;
    use crate::metrics::ObjectState;
    use crate::sim::CameraModel;

    fn sensor() -> SensorPose {
        SensorPose {
            x: 0.0,
            y: 5.25,
            z: 6.0,
            yaw: 0.0,
            pitch: 0.0,
            fov: FovSpec {
                max_range: 150.0,
                azimuth_half_angle: 45f64.to_radians(),
                elevation_min: (-30f64).to_radians(),
                elevation_max: 5f64.to_radians(),
            },
        }
    }

    fn polar_return(t: f64, x: f64, y: f64, z: f64) -> Measurement {
        Measurement {
            position: MeasurementPosition::Cartesian { x, y, z },
            doppler: Some(20.0),
            quality: 1.0,
            rcs: Some(10.0),
            timestamp: t,
        }
        .to_sensor_polar(&sensor())
    }

    fn value_at(vis: &VisibilityGrid2D, x: f64, y: f64) -> (f64, bool) {
        let spec = *vis.spec();
        let (i, j) = spec.world_to_cell(x, y).unwrap();
        (vis.value(i, j), vis.in_fov(i, j))
    }

    #[test]
    fn radar2d_sees_the_return_and_shadows_behind_it() {
        let mut p = Radar2dPipeline::new(Radar2dConfig::default(), sensor()).unwrap();
        let frame = MeasurementFrame {
            t: 0.0,
            measurements: vec![polar_return(0.0, 40.0, 5.25, 1.5)],
        };
        let vis = p.step(&frame).unwrap();
        // The near edge of the return blob is the first occupied cell the
        // ray meets, so it is visible (deeper blob cells sit in its
        // shadow).
        let (v, m) = value_at(&vis, 39.5, 5.5);
        assert!(m && v == 1.0, "at return: {v} mask {m}");
        // Far behind it along the same ray: shadowed.
        let (v, m) = value_at(&vis, 100.5, 5.25);
        assert!(m && v == 0.0, "behind return: {v}");
        // Open road to the side stays visible.
        let (v, m) = value_at(&vis, 100.5, 11.0);
        assert!(m && v == 1.0);
        // Outside the wedge: unknown and unmasked.
        let (v, m) = value_at(&vis, 2.5, 12.5);
        assert!(!m && v == UNKNOWN);
    }

    #[test]
    fn radar2d_decays_toward_prior_without_evidence() {
        let mut p = Radar2dPipeline::new(Radar2dConfig::default(), sensor()).unwrap();
        let hit = MeasurementFrame { t: 0.0, measurements: vec![polar_return(0.0, 40.0, 5.25, 1.5)] };
        p.step(&hit).unwrap();
        let spec = *p.occupancy().spec();
        let k = {
            let (i, j) = spec.world_to_cell(40.5, 5.25).unwrap();
            spec.index(i, j)
        };
        let after_hit = p.occupancy().values()[k];
        assert!(after_hit > 0.7, "occupancy at the return: {after_hit}");
        for step in 1..=30 {
            let empty = MeasurementFrame { t: step as f64 * 0.1, measurements: vec![] };
            p.step(&empty).unwrap();
        }
        let later = p.occupancy().values()[k];
        assert!(later < 0.55, "occupancy after decay: {later}");
        assert!(later >= 0.5);
    }

    #[test]
    fn pipelines_reject_time_running_backwards() {
        let mut p = Radar2dPipeline::new(Radar2dConfig::default(), sensor()).unwrap();
        p.step(&MeasurementFrame { t: 1.0, measurements: vec![] }).unwrap();
        let err = p.step(&MeasurementFrame { t: 0.5, measurements: vec![] }).unwrap_err();
        assert!(matches!(err, PipelineError::NonMonotonicTime { .. }));
    }

    #[test]
    fn radar3d_masks_the_unreachable_near_range() {
        let mut p = Radar3dPipeline::new(Radar3dConfig::default(), sensor()).unwrap();
        let vis = p.step(&MeasurementFrame { t: 0.0, measurements: vec![] }).unwrap();
        // At 5.5 m the 1 m slice plane needs a -42 deg ray; the volume
        // stops at -30 deg.
        let (v, m) = value_at(&vis, 5.5, 5.5);
        assert!(!m && v == UNKNOWN);
        // Far range is reachable and, with an empty grid, visible.
        let (v, m) = value_at(&vis, 80.5, 5.5);
        assert!(m && v == 1.0);
        // Outside the wedge.
        let (_, m) = value_at(&vis, 3.5, 12.5);
        assert!(!m);
    }

    #[test]
    fn radar3d_shadows_rings_behind_a_tall_return() {
        let mut p = Radar3dPipeline::new(Radar3dConfig::default(), sensor()).unwrap();
        // Truck-like return: nearest footprint point of a truck centered
        // at x = 40, reflecting at its 4 m top edge.
        let frame = MeasurementFrame {
            t: 0.0,
            measurements: vec![polar_return(0.0, 33.2, 5.25, 4.0)],
        };
        let vis = p.step(&frame).unwrap();
        // A cell whose slice ray passes the return's elevation band far
        // behind it is shadowed.
        let (v, m) = value_at(&vis, 80.5, 5.5);
        assert!(m && v == 0.0, "behind truck: {v}");
        // Nearer cells use steeper slice rays that duck under the band.
        let (v, m) = value_at(&vis, 20.5, 5.5);
        assert!(m && v == 1.0, "in front: {v}");
        // Neighboring lanes at the same range are unaffected.
        let (v, m) = value_at(&vis, 80.5, 11.5);
        assert!(m && v == 1.0, "next lane: {v}");
    }

    #[test]
    fn camera_pipeline_marks_lifted_boxes_and_their_ground_shadow() {
        let mut s = sensor();
        s.pitch = (-15f64).to_radians();
        let cam = CameraModel::default();
        let img_to_ground = cam.ground_homography(&s).unwrap();
        let cfg = Camera3dConfig::default();
        let mut p = Camera3dPipeline::new(cfg, s, img_to_ground).unwrap();

        // Project a truck's corners to build its image box, as the
        // detector would.
        let truck = crate::sensor::BoundingBox3D {
            cx: 40.0,
            cy: 5.25,
            yaw: 0.0,
            extent: Extent { length: 13.6, width: 2.55, height: 4.0 },
        };
        let (mut u0, mut v0, mut u1, mut v1) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in truck.corners() {
            let (u, v) = cam.project_point(&s, c).unwrap();
            u0 = u0.min(u);
            v0 = v0.min(v);
            u1 = u1.max(u);
            v1 = v1.max(v);
        }
        let bbox = BoundingBox2D {
            u_min: u0,
            v_min: v0,
            u_max: u1,
            v_max: v1,
            class: "truck".into(),
            confidence: 1.0,
        };
        let vis = p.step(0.0, &[bbox]).unwrap();
        assert_eq!(p.skipped_boxes(), 0);
        // The sensor-facing face of the truck is first-hit and visible.
        // (Deeper columns shadow themselves: their low voxels sit behind
        // the front face.)
        let (v, m) = value_at(&vis, 33.5, 5.5);
        assert!(m && v > 0.5, "truck front face: {v}");
        // Close behind the truck the low band is fully shadowed.
        let (v, m) = value_at(&vis, 55.5, 5.5);
        assert!(m && v < 0.5, "behind truck: {v}");
        // A garbage box is skipped, not fatal.
        let junk = BoundingBox2D {
            u_min: 10.0,
            v_min: 200.0,
            u_max: 10.0,
            v_max: 260.0,
            class: "car".into(),
            confidence: 0.9,
        };
        p.step(0.1, &[junk]).unwrap();
        assert_eq!(p.skipped_boxes(), 1);
    }

    fn object(id: &str, x: f64, y: f64, extent: Extent) -> ObjectState {
        ObjectState {
            id: id.into(),
            t: 0.0,
            x,
            y,
            yaw: 0.0,
            v_x: 20.0,
            v_y: 0.0,
            yaw_rate: 0.0,
            extent,
        }
    }

    #[test]
    fn reference_blocks_exactly_behind_true_boxes() {
        let p = ReferencePipeline::new(ReferenceConfig::default(), sensor()).unwrap();
        let truck = object(
            "truck-1",
            40.0,
            5.25,
            Extent { length: 13.6, width: 2.55, height: 4.0 },
        );
        let frame = ObjectFrame { t: 0.0, objects: vec![truck] };
        let vis = p.step(&frame).unwrap();
        let (v, m) = value_at(&vis, 80.5, 5.5);
        assert!(m && v == 0.0, "behind truck: {v}");
        let (v, m) = value_at(&vis, 20.5, 5.5);
        assert!(m && v == 1.0, "in front: {v}");
        let (v, m) = value_at(&vis, 80.5, 11.5);
        assert!(m && v == 1.0, "next lane: {v}");
        // An empty frame leaves the whole reachable wedge visible.
        let vis = p.step(&ObjectFrame { t: 0.1, objects: vec![] }).unwrap();
        let (v, m) = value_at(&vis, 100.5, 5.5);
        assert!(m && v == 1.0);
    }
}
