//! Line-of-sight raytracing over occupancy grids.
//!
//! Occupancy is turned into per-cell visibility by walking rays from the
//! sensor: a cell is visible while no cell strictly closer on its ray holds
//! occupancy at or above the threshold. Occupied cells are therefore
//! visible themselves; only the cells behind them are shadowed.

use crate::grid::{
    cells_overlapping, Grid2D, GridRay2, GridRay3, OrientedRect, SensorPose, SphericalGrid,
    VoxelGrid, UNKNOWN,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("occupancy threshold {0} must lie in (0.5, 1]")]
    InvalidThreshold(f64),
    #[error("no voxel layer center inside the height band [{lo}, {hi}] m")]
    NoLayersInBand { lo: f64, hi: f64 },
    #[error("object footprint does not overlap the grid")]
    FootprintOutsideGrid,
    #[error("visibility values and field-of-view mask differ in length ({values} vs {mask})")]
    MaskLengthMismatch { values: usize, mask: usize },
}

/// Occupancy level at and above which a cell blocks the rays behind it.
/// Must exceed the 0.5 prior: unknown space never occludes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyThreshold {
    pub occupied_above: f64,
}

impl OccupancyThreshold {
    pub fn new(occupied_above: f64) -> Result<Self, VisibilityError> {
        let t = Self { occupied_above };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), VisibilityError> {
        if self.occupied_above > 0.5 && self.occupied_above <= 1.0 {
            Ok(())
        } else {
            Err(VisibilityError::InvalidThreshold(self.occupied_above))
        }
    }

    fn blocks(&self, occupancy: f64) -> bool {
        occupancy >= self.occupied_above
    }
}

/// How a spherical raytrace treats partial occupancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaytraceMode {
    /// Visibility is 1 until the first bin at or above the threshold and 0
    /// after it. This is the mode the evaluation metrics are defined on.
    Binary,
    /// Each bin attenuates downstream transmission by
    /// `1 - max(0, 2 * occupancy - 1)`, so partial occupancy yields
    /// visibility between 0 and 1.
    Graded,
}

/// 2D visibility field plus the field-of-view mask that says which cells
/// carry a visibility claim at all. Inside the mask binary raytracing
/// produces exactly 0 or 1; outside it the value is [`UNKNOWN`] and must
/// not be interpreted.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityGrid2D {
    grid: Grid2D,
    fov_mask: Vec<bool>,
}

impl VisibilityGrid2D {
    pub fn new(grid: Grid2D, fov_mask: Vec<bool>) -> Result<Self, VisibilityError> {
        if grid.values().len() != fov_mask.len() {
            return Err(VisibilityError::MaskLengthMismatch {
                values: grid.values().len(),
                mask: fov_mask.len(),
            });
        }
        Ok(Self { grid, fov_mask })
    }

    pub fn spec(&self) -> &crate::grid::GridSpec2D {
        self.grid.spec()
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn fov_mask(&self) -> &[bool] {
        &self.fov_mask
    }

    /// Visibility value of one cell.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.grid.values()[self.grid.spec().index(i, j)]
    }

    /// Whether a cell is inside the field of view.
    pub fn in_fov(&self, i: usize, j: usize) -> bool {
        self.fov_mask[self.grid.spec().index(i, j)]
    }

    pub fn into_parts(self) -> (Grid2D, Vec<bool>) {
        (self.grid, self.fov_mask)
    }
}

/// Raytraces a 2D occupancy grid from the sensor's ground position.
///
/// Cells outside the sensor's range/azimuth wedge are masked out and hold
/// [`UNKNOWN`]. Inside the wedge a cell is visible (1.0) unless some cell
/// strictly before it on the sensor ray blocks; the blocking cell itself
/// stays visible. Each ray is independent of all others.
pub fn raytrace_2d(
    occupancy: &Grid2D,
    sensor: &SensorPose,
    threshold: &OccupancyThreshold,
) -> VisibilityGrid2D {
    let spec = *occupancy.spec();
    let origin = sensor.ground_position();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..spec.height)
        .into_par_iter()
        .map(|j| {
            let mut values = vec![UNKNOWN; spec.width];
            let mut mask = vec![false; spec.width];
            for i in 0..spec.width {
                let center = spec.cell_center(i, j);
                if !sensor.in_fov_2d(center.0, center.1) {
                    continue;
                }
                let mut ray = GridRay2::new(&spec, origin, center);
                let target = ray.target();
                let mut blocked = false;
                for (ci, cj) in &mut ray {
                    if (ci, cj) == target {
                        break;
                    }
                    if ci < 0 || cj < 0 || ci >= spec.width as i64 || cj >= spec.height as i64 {
                        continue;
                    }
                    if threshold.blocks(occupancy.values()[spec.index(ci as usize, cj as usize)]) {
                        blocked = true;
                        break;
                    }
                }
                values[i] = if blocked { 0.0 } else { 1.0 };
                mask[i] = true;
            }
            (values, mask)
        })
        .collect();

    let mut values = Vec::with_capacity(spec.cell_count());
    let mut mask = Vec::with_capacity(spec.cell_count());
    for (v, m) in rows {
        values.extend(v);
        mask.extend(m);
    }
    VisibilityGrid2D {
        grid: Grid2D::from_values(spec, values).expect("row assembly preserves cell count"),
        fov_mask: mask,
    }
}

/// Raytraces a spherical occupancy grid along its range axis.
///
/// Every (azimuth, elevation) ray is scanned outward independently. In
/// binary mode bins are visible until the first blocking bin, inclusive;
/// in graded mode occupancy above 0.5 attenuates downstream transmission
/// continuously.
pub fn raytrace_spherical(
    occupancy: &SphericalGrid,
    threshold: &OccupancyThreshold,
    mode: RaytraceMode,
) -> SphericalGrid {
    let spec = *occupancy.spec();
    let mut out = SphericalGrid::filled(spec, 0.0);
    let n_range = spec.n_range;
    let occ = occupancy.values();
    out.values_mut()
        .par_chunks_mut(n_range)
        .enumerate()
        .for_each(|(ray_idx, vis_ray)| {
            let base = ray_idx * n_range;
            let occ_ray = &occ[base..base + n_range];
            match mode {
                RaytraceMode::Binary => {
                    let mut blocked = false;
                    for ir in 0..n_range {
                        vis_ray[ir] = if blocked { 0.0 } else { 1.0 };
                        if threshold.blocks(occ_ray[ir]) {
                            blocked = true;
                        }
                    }
                }
                RaytraceMode::Graded => {
                    let mut transmission = 1.0;
                    for ir in 0..n_range {
                        vis_ray[ir] = transmission;
                        transmission *= 1.0 - (2.0 * occ_ray[ir] - 1.0).max(0.0);
                    }
                }
            }
        });
    out
}

/// Raytraces a voxel occupancy volume from the sensor's 3D position.
///
/// A voxel is visible unless a voxel strictly before it on the straight
/// segment from the sensor blocks. The sensor may sit outside the volume.
pub fn raytrace_voxels(
    occupancy: &VoxelGrid,
    sensor: &SensorPose,
    threshold: &OccupancyThreshold,
) -> VoxelGrid {
    let spec = *occupancy.spec();
    let base = spec.base;
    let origin = (sensor.x, sensor.y, sensor.z);
    let occ = occupancy.values();
    let layer = base.cell_count();
    let mut out = VoxelGrid::filled(spec, 0.0);
    out.values_mut()
        .par_chunks_mut(layer)
        .enumerate()
        .for_each(|(k, vis_layer)| {
            for j in 0..base.height {
                for i in 0..base.width {
                    let center = spec.voxel_center(i, j, k);
                    let mut ray = GridRay3::new(&spec, origin, center);
                    let target = ray.target();
                    let mut blocked = false;
                    for [ci, cj, ck] in &mut ray {
                        if [ci, cj, ck] == target {
                            break;
                        }
                        if ci < 0
                            || cj < 0
                            || ck < 0
                            || ci >= base.width as i64
                            || cj >= base.height as i64
                            || ck >= spec.n_z as i64
                        {
                            continue;
                        }
                        if threshold.blocks(occ[spec.index(ci as usize, cj as usize, ck as usize)]) {
                            blocked = true;
                            break;
                        }
                    }
                    vis_layer[base.index(i, j)] = if blocked { 0.0 } else { 1.0 };
                }
            }
        });
    out
}

/// Collapses a 3D visibility volume to 2D by averaging the layers whose
/// centers fall inside the height band `[z_lo, z_hi]`.
pub fn squash_z_average(
    visibility: &VoxelGrid,
    z_lo: f64,
    z_hi: f64,
) -> Result<Grid2D, VisibilityError> {
    let spec = *visibility.spec();
    let layers: Vec<usize> =
        (0..spec.n_z).filter(|&k| (z_lo..=z_hi).contains(&spec.layer_center(k))).collect();
    if layers.is_empty() {
        return Err(VisibilityError::NoLayersInBand { lo: z_lo, hi: z_hi });
    }
    let layer_len = spec.base.cell_count();
    let mut values = vec![0.0; layer_len];
    for &k in &layers {
        let slice = &visibility.values()[k * layer_len..(k + 1) * layer_len];
        for (acc, v) in values.iter_mut().zip(slice) {
            *acc += v;
        }
    }
    let n = layers.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    Ok(Grid2D::from_values(spec.base, values).expect("layer length matches base"))
}

/// Whether an object with the given ground footprint is visible: true when
/// any grid cell overlapping the footprint is inside the field-of-view
/// mask with visibility at or above `vis_threshold`.
///
/// Errors when the footprint overlaps no cell at all, because then the
/// grid cannot support any claim about the object.
pub fn object_visibility(
    visibility: &VisibilityGrid2D,
    footprint: &OrientedRect,
    vis_threshold: f64,
) -> Result<bool, VisibilityError> {
    let cells = cells_overlapping(visibility.spec(), footprint);
    if cells.is_empty() {
        return Err(VisibilityError::FootprintOutsideGrid);
    }
    Ok(cells
        .into_iter()
        .any(|(i, j)| visibility.in_fov(i, j) && visibility.value(i, j) >= vis_threshold))
}

/// Binary visible-cell set of a 2D visibility grid: linear indices of
/// in-mask cells with visibility at or above the threshold. Useful for
/// monotonicity comparisons.
pub fn visible_set_2d(visibility: &VisibilityGrid2D, vis_threshold: f64) -> Vec<usize> {
    visibility
        .values()
        .iter()
        .zip(visibility.fov_mask())
        .enumerate()
        .filter(|(_, (v, m))| **m && **v >= vis_threshold)
        .map(|(k, _)| k)
        .collect()
}

/// Visible-bin set of a raytraced grid without a mask (spherical or voxel).
pub fn visible_set_values(values: &[f64], vis_threshold: f64) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= vis_threshold)
        .map(|(k, _)| k)
        .collect()
}
