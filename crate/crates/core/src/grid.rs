//! Grid domains shared by every estimator: 2D Cartesian ground grids,
//! spherical sensor grids, Cartesian voxel volumes, and the transforms
//! between them.
//!
//! All grids use a half-open cell convention: a point belongs to cell
//! `floor((p - origin) / step)`, so a point exactly on a boundary belongs
//! to the cell with the larger index and points on the upper edge of the
//! grid are outside. Cell values are plain `f64` scalars; occupancy and
//! visibility layers both use [`UNKNOWN`] (0.5) for "no information".

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Cell value meaning "no information": neither free nor occupied, and for
/// visibility layers neither visible nor invisible.
pub const UNKNOWN: f64 = 0.5;

/// Errors from grid construction and grid-to-grid transforms.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("value buffer holds {got} values but the spec has {want} cells")]
    ValueCountMismatch { got: usize, want: usize },
    #[error("spherical grid has no elevation bins")]
    NoElevationBins,
}

/// Wraps an angle to the interval `[-pi, pi)`. Angles already in range are
/// returned bit-exactly so that boundary comparisons downstream stay sharp.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        a
    } else {
        (a + PI).rem_euclid(TAU) - PI
    }
}

// ---------------------------------------------------------------------------
// 2D Cartesian grids

/// Axis-aligned 2D grid on the ground plane. `origin` is the minimum corner
/// of cell (0, 0); `resolution` is the square cell edge in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec2D {
    /// World x of the minimum grid corner, meters.
    pub origin_x: f64,
    /// World y of the minimum grid corner, meters.
    pub origin_y: f64,
    /// Number of cells along x.
    pub width: usize,
    /// Number of cells along y.
    pub height: usize,
    /// Cell edge length, meters.
    pub resolution: f64,
}

impl GridSpec2D {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        width: usize,
        height: usize,
        resolution: f64,
    ) -> Result<Self, GridError> {
        let spec = Self { origin_x, origin_y, width, height, resolution };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(GridError::InvalidSpec(format!(
                "resolution must be finite and positive, got {}",
                self.resolution
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GridError::InvalidSpec(format!(
                "grid must have at least one cell per axis, got {}x{}",
                self.width, self.height
            )));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(GridError::InvalidSpec("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// Linear index of cell `(i, j)`; rows (fixed `j`) are contiguous.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    /// Cell containing a world point, or `None` outside the grid.
    /// Points on a cell boundary map to the cell with the larger index.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = ((x - self.origin_x) / self.resolution).floor();
        let j = ((y - self.origin_y) / self.resolution).floor();
        if i >= 0.0 && j >= 0.0 && i < self.width as f64 && j < self.height as f64 {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// World coordinates of the center of cell `(i, j)`.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin_x + (i as f64 + 0.5) * self.resolution,
            self.origin_y + (j as f64 + 0.5) * self.resolution,
        )
    }

    /// World extent of the grid as `(x_min, y_min, x_max, y_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.width as f64 * self.resolution,
            self.origin_y + self.height as f64 * self.resolution,
        )
    }
}

/// Oriented rectangle on the ground plane, e.g. a vehicle footprint.
/// `length` extends along the yaw axis, `width` across it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    /// Heading of the length axis, radians.
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    /// Corners in counter-clockwise order (for yaw 0: rear-right first).
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let mut out = [(0.0, 0.0); 4];
        for (k, (u, v)) in [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)].iter().enumerate() {
            out[k] = (self.cx + u * c - v * s, self.cy + u * s + v * c);
        }
        out
    }

    /// Whether a point lies inside or on the rectangle boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (u, v) = self.to_local(x, y);
        u.abs() <= self.length / 2.0 && v.abs() <= self.width / 2.0
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (nx, ny) = self.nearest_point(x, y);
        (x - nx).hypot(y - ny)
    }

    /// Closest point of the rectangle (boundary or interior) to `(x, y)`.
    pub fn nearest_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (u, v) = self.to_local(x, y);
        let cu = u.clamp(-self.length / 2.0, self.length / 2.0);
        let cv = v.clamp(-self.width / 2.0, self.width / 2.0);
        let (s, c) = self.yaw.sin_cos();
        (self.cx + cu * c - cv * s, self.cy + cu * s + cv * c)
    }

    /// World point in the rectangle's frame: x along the length axis,
    /// y along the width axis, origin at the center.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        (dx * c + dy * s, -dx * s + dy * c)
    }
}

/// Grid cells whose intersection with the rectangle has positive area.
/// Cells that only share an edge or corner with the rectangle are excluded,
/// as is everything for a degenerate (zero-area) rectangle.
pub fn cells_overlapping(spec: &GridSpec2D, rect: &OrientedRect) -> Vec<(usize, usize)> {
    let corners = rect.corners();
    let res = spec.resolution;

    // Candidate index window from the rectangle's bounding box.
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &corners {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let i0 = (((x0 - spec.origin_x) / res).floor().max(0.0)) as usize;
    let j0 = (((y0 - spec.origin_y) / res).floor().max(0.0)) as usize;
    let i1 = ((x1 - spec.origin_x) / res).floor();
    let j1 = ((y1 - spec.origin_y) / res).floor();
    if i1 < 0.0 || j1 < 0.0 || x0 > spec.origin_x + spec.width as f64 * res {
        return Vec::new();
    }
    let i1 = (i1 as usize).min(spec.width.saturating_sub(1));
    let j1 = (j1 as usize).min(spec.height.saturating_sub(1));

    // Separating-axis test between the rectangle and each candidate cell.
    // Overlap must be strictly positive on every axis for a positive-area
    // intersection. Axes: the two grid axes plus the rectangle's two axes.
    let (s, c) = rect.yaw.sin_cos();
    let axes = [(1.0, 0.0), (0.0, 1.0), (c, s), (-s, c)];
    let mut rect_proj = [(0.0f64, 0.0f64); 4];
    for (k, &(ax, ay)) in axes.iter().enumerate() {
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for &(x, y) in &corners {
            let p = x * ax + y * ay;
            lo = lo.min(p);
            hi = hi.max(p);
        }
        rect_proj[k] = (lo, hi);
    }

    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let cx0 = spec.origin_x + i as f64 * res;
            let cy0 = spec.origin_y + j as f64 * res;
            let cell = [(cx0, cy0), (cx0 + res, cy0), (cx0 + res, cy0 + res), (cx0, cy0 + res)];
            let mut overlap = true;
            for (k, &(ax, ay)) in axes.iter().enumerate() {
                let mut lo = f64::MAX;
                let mut hi = f64::MIN;
                for &(x, y) in &cell {
                    let p = x * ax + y * ay;
                    lo = lo.min(p);
                    hi = hi.max(p);
                }
                let (rlo, rhi) = rect_proj[k];
                if hi.min(rhi) - lo.max(rlo) <= 0.0 {
                    overlap = false;
                    break;
                }
            }
            if overlap {
                out.push((i, j));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Polar and spherical grids

/// Range x azimuth grid in the sensor frame. Azimuth 0 is the sensor
/// boresight; bins are half-open on both axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGridSpec {
    /// Minimum range, meters.
    pub r_min: f64,
    /// Maximum range (exclusive), meters.
    pub r_max: f64,
    pub n_range: usize,
    /// Azimuth window, radians relative to boresight.
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub n_azimuth: usize,
}

impl PolarGridSpec {
    pub fn cell_count(&self) -> usize {
        self.n_range * self.n_azimuth
    }

    /// Linear index; range is the fastest axis so each azimuth ray is a
    /// contiguous slice.
    pub fn index(&self, ir: usize, ia: usize) -> usize {
        debug_assert!(ir < self.n_range && ia < self.n_azimuth);
        ia * self.n_range + ir
    }

    pub fn range_step(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_range as f64
    }

    pub fn azimuth_step(&self) -> f64 {
        (self.azimuth_max - self.azimuth_min) / self.n_azimuth as f64
    }

    pub fn range_bin(&self, r: f64) -> Option<usize> {
        bin_on_axis(r, self.r_min, self.r_max, self.n_range)
    }

    /// Azimuth is wrapped to `[-pi, pi)` before binning.
    pub fn azimuth_bin(&self, az: f64) -> Option<usize> {
        bin_on_axis(wrap_angle(az), self.azimuth_min, self.azimuth_max, self.n_azimuth)
    }

    pub fn range_center(&self, ir: usize) -> f64 {
        self.r_min + (ir as f64 + 0.5) * self.range_step()
    }

    pub fn azimuth_center(&self, ia: usize) -> f64 {
        self.azimuth_min + (ia as f64 + 0.5) * self.azimuth_step()
    }
}

/// Range x azimuth x elevation grid in the sensor frame. Elevation 0 is
/// horizontal, positive up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalGridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_range: usize,
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub n_azimuth: usize,
    /// Elevation window, radians; must lie within `(-pi/2, pi/2)`.
    pub elevation_min: f64,
    pub elevation_max: f64,
    pub n_elevation: usize,
}

impl SphericalGridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.r_min >= 0.0 && self.r_max > self.r_min) {
            return Err(GridError::InvalidSpec(format!(
                "range window [{}, {}) is invalid",
                self.r_min, self.r_max
            )));
        }
        if self.azimuth_max <= self.azimuth_min || self.elevation_max <= self.elevation_min {
            return Err(GridError::InvalidSpec("angular windows must be non-empty".into()));
        }
        if self.elevation_min <= -PI / 2.0 || self.elevation_max >= PI / 2.0 {
            return Err(GridError::InvalidSpec("elevation window must lie within (-pi/2, pi/2)".into()));
        }
        if self.n_range == 0 || self.n_azimuth == 0 || self.n_elevation == 0 {
            return Err(GridError::InvalidSpec("bin counts must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.n_range * self.n_azimuth * self.n_elevation
    }

    /// Linear index; range is the fastest axis so each (azimuth, elevation)
    /// ray is a contiguous slice.
    pub fn index(&self, ir: usize, ia: usize, ie: usize) -> usize {
        debug_assert!(ir < self.n_range && ia < self.n_azimuth && ie < self.n_elevation);
        (ie * self.n_azimuth + ia) * self.n_range + ir
    }

    pub fn range_step(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_range as f64
    }

    pub fn azimuth_step(&self) -> f64 {
        (self.azimuth_max - self.azimuth_min) / self.n_azimuth as f64
    }

    pub fn elevation_step(&self) -> f64 {
        (self.elevation_max - self.elevation_min) / self.n_elevation as f64
    }

    pub fn range_bin(&self, r: f64) -> Option<usize> {
        bin_on_axis(r, self.r_min, self.r_max, self.n_range)
    }

    pub fn azimuth_bin(&self, az: f64) -> Option<usize> {
        bin_on_axis(wrap_angle(az), self.azimuth_min, self.azimuth_max, self.n_azimuth)
    }

    pub fn elevation_bin(&self, el: f64) -> Option<usize> {
        bin_on_axis(el, self.elevation_min, self.elevation_max, self.n_elevation)
    }

    /// Bin containing a sensor-frame point, or `None` outside the grid.
    pub fn bin_of(&self, r: f64, az: f64, el: f64) -> Option<(usize, usize, usize)> {
        Some((self.range_bin(r)?, self.azimuth_bin(az)?, self.elevation_bin(el)?))
    }

    pub fn range_center(&self, ir: usize) -> f64 {
        self.r_min + (ir as f64 + 0.5) * self.range_step()
    }

    pub fn azimuth_center(&self, ia: usize) -> f64 {
        self.azimuth_min + (ia as f64 + 0.5) * self.azimuth_step()
    }

    pub fn elevation_center(&self, ie: usize) -> f64 {
        self.elevation_min + (ie as f64 + 0.5) * self.elevation_step()
    }

    /// The range x azimuth footprint of this grid (elevation dropped).
    pub fn polar(&self) -> PolarGridSpec {
        PolarGridSpec {
            r_min: self.r_min,
            r_max: self.r_max,
            n_range: self.n_range,
            azimuth_min: self.azimuth_min,
            azimuth_max: self.azimuth_max,
            n_azimuth: self.n_azimuth,
        }
    }
}

/// Half-open bin lookup on one axis. The fraction of the full span is
/// computed first so that values exactly on the axis boundaries land
/// outside even when the derived step is not exactly representable.
fn bin_on_axis(v: f64, min: f64, max: f64, n: usize) -> Option<usize> {
    let b = ((v - min) / (max - min) * n as f64).floor();
    if b >= 0.0 && b < n as f64 {
        Some(b as usize)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Voxel grids

/// 3D Cartesian voxel volume: a 2D ground grid extruded over a vertical
/// window. Horizontal voxel edges follow `base.resolution`; the vertical
/// edge is `(z_max - z_min) / n_z` and may differ from the horizontal one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGridSpec {
    pub base: GridSpec2D,
    /// Bottom of the volume, meters.
    pub z_min: f64,
    /// Top of the volume (exclusive), meters.
    pub z_max: f64,
    pub n_z: usize,
}

impl VoxelGridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        self.base.validate()?;
        if !(self.z_max > self.z_min) || self.n_z == 0 {
            return Err(GridError::InvalidSpec(format!(
                "vertical window [{}, {}) with {} layers is invalid",
                self.z_min, self.z_max, self.n_z
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.base.cell_count() * self.n_z
    }

    /// Linear index; each horizontal layer is a contiguous 2D grid.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(k < self.n_z);
        k * self.base.cell_count() + self.base.index(i, j)
    }

    pub fn z_step(&self) -> f64 {
        (self.z_max - self.z_min) / self.n_z as f64
    }

    pub fn z_bin(&self, z: f64) -> Option<usize> {
        bin_on_axis(z, self.z_min, self.z_max, self.n_z)
    }

    pub fn layer_center(&self, k: usize) -> f64 {
        self.z_min + (k as f64 + 0.5) * self.z_step()
    }

    pub fn world_to_voxel(&self, x: f64, y: f64, z: f64) -> Option<(usize, usize, usize)> {
        let (i, j) = self.base.world_to_cell(x, y)?;
        Some((i, j, self.z_bin(z)?))
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        let (x, y) = self.base.cell_center(i, j);
        (x, y, self.layer_center(k))
    }
}

// ---------------------------------------------------------------------------
// Scalar grid storage

/// Anything that defines a finite set of linearly indexed cells.
pub trait GridShape: Clone {
    fn cell_count(&self) -> usize;
}

impl GridShape for GridSpec2D {
    fn cell_count(&self) -> usize {
        GridSpec2D::cell_count(self)
    }
}

impl GridShape for PolarGridSpec {
    fn cell_count(&self) -> usize {
        PolarGridSpec::cell_count(self)
    }
}

impl GridShape for SphericalGridSpec {
    fn cell_count(&self) -> usize {
        SphericalGridSpec::cell_count(self)
    }
}

impl GridShape for VoxelGridSpec {
    fn cell_count(&self) -> usize {
        VoxelGridSpec::cell_count(self)
    }
}

/// Dense scalar field over a grid domain. The value buffer always holds
/// exactly `spec.cell_count()` entries in the spec's linear index order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid<S: GridShape> {
    spec: S,
    values: Vec<f64>,
}

pub type Grid2D = ScalarGrid<GridSpec2D>;
pub type PolarGrid = ScalarGrid<PolarGridSpec>;
pub type SphericalGrid = ScalarGrid<SphericalGridSpec>;
pub type VoxelGrid = ScalarGrid<VoxelGridSpec>;

impl<S: GridShape> ScalarGrid<S> {
    /// A grid with every cell set to `value`.
    pub fn filled(spec: S, value: f64) -> Self {
        let n = spec.cell_count();
        Self { spec, values: vec![value; n] }
    }

    /// Wraps an existing value buffer; its length must match the spec.
    pub fn from_values(spec: S, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.cell_count() {
            return Err(GridError::ValueCountMismatch { got: values.len(), want: spec.cell_count() });
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &S {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

// ---------------------------------------------------------------------------
// Sensor pose and field of view

/// Sensor field of view: a range-limited azimuth wedge with an elevation
/// window. Angles are radians relative to the sensor boresight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FovSpec {
    /// Maximum sensing range, meters.
    pub max_range: f64,
    /// Half opening angle of the azimuth wedge.
    pub azimuth_half_angle: f64,
    /// Lower edge of the elevation window (negative looks down).
    pub elevation_min: f64,
    /// Upper edge of the elevation window.
    pub elevation_max: f64,
}

/// Sensor mounting pose in world coordinates plus its field of view.
/// `yaw` is the boresight heading on the ground plane; `pitch` tilts the
/// boresight up (positive) or down (negative).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorPose {
    pub x: f64,
    pub y: f64,
    /// Mounting height above the ground plane, meters.
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub fov: FovSpec,
}

impl SensorPose {
    /// Projection of the sensor onto the ground plane.
    pub fn ground_position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// Ground-plane distance from the sensor to a point.
    pub fn ground_range_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    /// Boresight-relative azimuth of a ground point, wrapped to `[-pi, pi)`.
    pub fn azimuth_to(&self, x: f64, y: f64) -> f64 {
        wrap_angle((y - self.y).atan2(x - self.x) - self.yaw)
    }

    /// Elevation angle from the sensor to a 3D point (0 horizontal, up
    /// positive). Pitch is not applied; elevation is measured from the
    /// horizontal plane through the sensor.
    pub fn elevation_to(&self, x: f64, y: f64, z: f64) -> f64 {
        (z - self.z).atan2(self.ground_range_to(x, y))
    }

    /// Whether a ground point lies inside the 2D field-of-view wedge
    /// (range and azimuth only; boundary points count as inside).
    pub fn in_fov_2d(&self, x: f64, y: f64) -> bool {
        self.ground_range_to(x, y) <= self.fov.max_range
            && self.azimuth_to(x, y).abs() <= self.fov.azimuth_half_angle
    }
}

// ---------------------------------------------------------------------------
// Exact grid ray traversal

/// Cells crossed by a 2D segment, in order from start to end, both endpoint
/// cells included. Yields raw signed indices: the segment may start or end
/// outside the grid and the caller filters bounds.
///
/// This is an exact traversal: every cell whose interior the segment
/// crosses is visited exactly once. When the segment passes exactly through
/// a cell corner the step is diagonal, so cells touched only at that corner
/// are not visited.
pub struct GridRay2 {
    i: i64,
    j: i64,
    target: (i64, i64),
    step: (i64, i64),
    t_max: (f64, f64),
    t_delta: (f64, f64),
    remaining: u64,
    done: bool,
}

impl GridRay2 {
    pub fn new(spec: &GridSpec2D, from: (f64, f64), to: (f64, f64)) -> Self {
        let fu = ((from.0 - spec.origin_x) / spec.resolution, (from.1 - spec.origin_y) / spec.resolution);
        let tu = ((to.0 - spec.origin_x) / spec.resolution, (to.1 - spec.origin_y) / spec.resolution);
        let (i, j) = (fu.0.floor() as i64, fu.1.floor() as i64);
        let target = (tu.0.floor() as i64, tu.1.floor() as i64);
        let d = (tu.0 - fu.0, tu.1 - fu.1);
        let step = (sign(d.0), sign(d.1));
        let t_delta = (inv_abs(d.0), inv_abs(d.1));
        let t_max = (first_crossing(fu.0, i, d.0), first_crossing(fu.1, j, d.1));
        let remaining = (target.0 - i).unsigned_abs() + (target.1 - j).unsigned_abs() + 2;
        Self { i, j, target, step, t_max, t_delta, remaining, done: false }
    }

    /// Cell containing the segment end point (raw signed indices).
    pub fn target(&self) -> (i64, i64) {
        self.target
    }
}

impl Iterator for GridRay2 {
    type Item = (i64, i64);

    fn next(&mut self) -> Option<(i64, i64)> {
        if self.done {
            return None;
        }
        let cur = (self.i, self.j);
        if cur == self.target || self.remaining == 0 {
            self.done = true;
        } else {
            self.remaining -= 1;
            let (tx, ty) = self.t_max;
            if tx <= ty {
                self.t_max.0 += self.t_delta.0;
                self.i += self.step.0;
            }
            if ty <= tx {
                self.t_max.1 += self.t_delta.1;
                self.j += self.step.1;
            }
        }
        Some(cur)
    }
}

/// Voxels crossed by a 3D segment, in order, both endpoint voxels included.
/// Same conventions as [`GridRay2`]: on exact boundary ties all tied axes
/// step together, skipping voxels touched only along an edge or corner.
pub struct GridRay3 {
    idx: [i64; 3],
    target: [i64; 3],
    step: [i64; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    remaining: u64,
    done: bool,
}

impl GridRay3 {
    pub fn new(spec: &VoxelGridSpec, from: (f64, f64, f64), to: (f64, f64, f64)) -> Self {
        let res = spec.base.resolution;
        let zs = spec.z_step();
        let fu = [
            (from.0 - spec.base.origin_x) / res,
            (from.1 - spec.base.origin_y) / res,
            (from.2 - spec.z_min) / zs,
        ];
        let tu = [
            (to.0 - spec.base.origin_x) / res,
            (to.1 - spec.base.origin_y) / res,
            (to.2 - spec.z_min) / zs,
        ];
        let idx = [fu[0].floor() as i64, fu[1].floor() as i64, fu[2].floor() as i64];
        let target = [tu[0].floor() as i64, tu[1].floor() as i64, tu[2].floor() as i64];
        let mut step = [0i64; 3];
        let mut t_delta = [f64::INFINITY; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut remaining = 2u64;
        for a in 0..3 {
            let d = tu[a] - fu[a];
            step[a] = sign(d);
            t_delta[a] = inv_abs(d);
            t_max[a] = first_crossing(fu[a], idx[a], d);
            remaining += (target[a] - idx[a]).unsigned_abs();
        }
        Self { idx, target, step, t_max, t_delta, remaining, done: false }
    }

    pub fn target(&self) -> [i64; 3] {
        self.target
    }
}

impl Iterator for GridRay3 {
    type Item = [i64; 3];

    fn next(&mut self) -> Option<[i64; 3]> {
        if self.done {
            return None;
        }
        let cur = self.idx;
        if cur == self.target || self.remaining == 0 {
            self.done = true;
        } else {
            self.remaining -= 1;
            let m = self.t_max[0].min(self.t_max[1]).min(self.t_max[2]);
            for a in 0..3 {
                if self.t_max[a] == m {
                    self.t_max[a] += self.t_delta[a];
                    self.idx[a] += self.step[a];
                }
            }
        }
        Some(cur)
    }
}

fn sign(d: f64) -> i64 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

fn inv_abs(d: f64) -> f64 {
    if d == 0.0 {
        f64::INFINITY
    } else {
        (1.0 / d).abs()
    }
}

/// Parameter (fraction of the segment) at which the segment first crosses a
/// cell boundary on one axis, starting from fractional coordinate `u` in
/// cell `cell`.
fn first_crossing(u: f64, cell: i64, d: f64) -> f64 {
    if d > 0.0 {
        ((cell + 1) as f64 - u) / d
    } else if d < 0.0 {
        (cell as f64 - u) / d
    } else {
        f64::INFINITY
    }
}

// ---------------------------------------------------------------------------
// Spherical-to-planar transforms

/// Extracts the constant-height surface `z = height` from a spherical grid.
///
/// For each range ring the surface fixes one elevation angle,
/// `atan2(height - sensor.z, r)`; the output polar cell copies the value of
/// that elevation bin. Ranges whose required elevation falls outside the
/// grid's elevation window get [`UNKNOWN`].
pub fn slice_at_height(
    grid: &SphericalGrid,
    sensor: &SensorPose,
    height: f64,
) -> Result<PolarGrid, GridError> {
    let spec = *grid.spec();
    if spec.n_elevation == 0 {
        return Err(GridError::NoElevationBins);
    }
    let polar = spec.polar();
    let mut out = PolarGrid::filled(polar, UNKNOWN);
    for ir in 0..spec.n_range {
        let r = spec.range_center(ir);
        let el = (height - sensor.z).atan2(r);
        if let Some(ie) = spec.elevation_bin(el) {
            for ia in 0..spec.n_azimuth {
                out.values_mut()[polar.index(ir, ia)] = grid.values()[spec.index(ir, ia, ie)];
            }
        }
    }
    Ok(out)
}

/// Resamples a sensor-frame polar grid onto a world-frame 2D grid by
/// nearest-bin lookup at each output cell center.
///
/// Returns the resampled grid plus a coverage mask: `true` where the cell
/// center fell inside the polar domain. Uncovered cells hold [`UNKNOWN`].
pub fn resample_polar_to_cartesian(
    polar: &PolarGrid,
    sensor: &SensorPose,
    target: &GridSpec2D,
) -> (Grid2D, Vec<bool>) {
    let pspec = *polar.spec();
    let mut out = Grid2D::filled(*target, UNKNOWN);
    let mut mask = vec![false; target.cell_count()];
    for j in 0..target.height {
        for i in 0..target.width {
            let (x, y) = target.cell_center(i, j);
            let r = sensor.ground_range_to(x, y);
            let az = sensor.azimuth_to(x, y);
            if let (Some(ir), Some(ia)) = (pspec.range_bin(r), pspec.azimuth_bin(az)) {
                let k = target.index(i, j);
                out.values_mut()[k] = polar.values()[pspec.index(ir, ia)];
                mask[k] = true;
            }
        }
    }
    (out, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn spec(w: usize, h: usize, res: f64) -> GridSpec2D {
        GridSpec2D::new(0.0, 0.0, w, h, res).unwrap()
    }

    #[test]
    fn world_to_cell_uses_floor_and_half_open_edges() {
        let g = spec(4, 4, 0.5);
        assert_eq!(g.world_to_cell(0.0, 0.0), Some((0, 0)));
        assert_eq!(g.world_to_cell(0.49, 0.49), Some((0, 0)));
        // Boundary points belong to the larger-index cell.
        assert_eq!(g.world_to_cell(0.5, 0.5), Some((1, 1)));
        assert_eq!(g.world_to_cell(1.99, 0.0), Some((3, 0)));
        // The upper grid edge is outside.
        assert_eq!(g.world_to_cell(2.0, 1.0), None);
        assert_eq!(g.world_to_cell(-0.01, 1.0), None);
        assert_eq!(g.world_to_cell(f64::NAN, 1.0), None);
    }

    #[test]
    fn cell_center_round_trips() {
        let g = GridSpec2D::new(-3.0, 7.0, 10, 6, 0.25).unwrap();
        for j in 0..6 {
            for i in 0..10 {
                let (x, y) = g.cell_center(i, j);
                assert_eq!(g.world_to_cell(x, y), Some((i, j)));
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec2D::new(0.0, 0.0, 0, 4, 1.0).is_err());
        assert!(GridSpec2D::new(0.0, 0.0, 4, 4, 0.0).is_err());
        assert!(GridSpec2D::new(0.0, 0.0, 4, 4, -1.0).is_err());
        assert!(GridSpec2D::new(f64::NAN, 0.0, 4, 4, 1.0).is_err());
    }

    /// Brute-force overlap oracle: a cell counts as overlapping if any of a
    /// dense lattice of interior sample points lies strictly inside the
    /// rectangle.
    fn overlap_oracle(g: &GridSpec2D, rect: &OrientedRect, n: usize) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for j in 0..g.height {
            for i in 0..g.width {
                let x0 = g.origin_x + i as f64 * g.resolution;
                let y0 = g.origin_y + j as f64 * g.resolution;
                'cell: for sj in 0..n {
                    for si in 0..n {
                        let x = x0 + (si as f64 + 0.5) / n as f64 * g.resolution;
                        let y = y0 + (sj as f64 + 0.5) / n as f64 * g.resolution;
                        let (u, v) = {
                            let (s, c) = rect.yaw.sin_cos();
                            let dx = x - rect.cx;
                            let dy = y - rect.cy;
                            (dx * c + dy * s, -dx * s + dy * c)
                        };
                        if u.abs() < rect.length / 2.0 && v.abs() < rect.width / 2.0 {
                            out.insert((i, j));
                            break 'cell;
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn axis_aligned_rect_covers_expected_cells() {
        let g = spec(4, 4, 1.0);
        // 2x2 rectangle centered on the (1,1)/(2,2) corner: covers four
        // cells; the neighbors it merely touches along an edge do not count.
        let rect = OrientedRect { cx: 1.0, cy: 1.0, yaw: 0.0, length: 2.0, width: 2.0 };
        let mut got = cells_overlapping(&g, &rect);
        got.sort_unstable();
        assert_eq!(got, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn rotated_rect_matches_brute_force_oracle() {
        let g = spec(6, 6, 1.0);
        let rect = OrientedRect {
            cx: 3.0,
            cy: 3.0,
            yaw: std::f64::consts::FRAC_PI_4,
            length: 2.0,
            width: 2.0,
        };
        let got: BTreeSet<_> = cells_overlapping(&g, &rect).into_iter().collect();
        let want = overlap_oracle(&g, &rect, 100);
        assert_eq!(got, want);
    }

    #[test]
    fn degenerate_rect_overlaps_nothing() {
        let g = spec(4, 4, 1.0);
        let rect = OrientedRect { cx: 2.0, cy: 2.0, yaw: 0.3, length: 0.0, width: 2.0 };
        assert!(cells_overlapping(&g, &rect).is_empty());
    }

    #[test]
    fn rect_distance_and_nearest_point() {
        let rect = OrientedRect { cx: 0.0, cy: 0.0, yaw: 0.0, length: 4.0, width: 2.0 };
        assert_eq!(rect.distance(0.5, 0.0), 0.0);
        assert!((rect.distance(5.0, 0.0) - 3.0).abs() < 1e-12);
        assert!((rect.distance(0.0, 4.0) - 3.0).abs() < 1e-12);
        let (nx, ny) = rect.nearest_point(5.0, 5.0);
        assert!((nx - 2.0).abs() < 1e-12 && (ny - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spherical_bins_round_trip_their_centers() {
        let s = SphericalGridSpec {
            r_min: 2.0,
            r_max: 100.0,
            n_range: 49,
            azimuth_min: -0.8,
            azimuth_max: 0.8,
            n_azimuth: 32,
            elevation_min: -0.5,
            elevation_max: 0.1,
            n_elevation: 12,
        };
        s.validate().unwrap();
        for ir in [0, 17, 48] {
            for ia in [0, 15, 31] {
                for ie in [0, 5, 11] {
                    let (r, az, el) = (s.range_center(ir), s.azimuth_center(ia), s.elevation_center(ie));
                    assert_eq!(s.bin_of(r, az, el), Some((ir, ia, ie)));
                }
            }
        }
        assert_eq!(s.range_bin(100.0), None);
        assert_eq!(s.range_bin(1.99), None);
        assert_eq!(s.azimuth_bin(0.8), None);
        assert_eq!(s.elevation_bin(0.2), None);
    }

    #[test]
    fn spherical_index_is_contiguous_in_range() {
        let s = SphericalGridSpec {
            r_min: 0.0,
            r_max: 10.0,
            n_range: 5,
            azimuth_min: -1.0,
            azimuth_max: 1.0,
            n_azimuth: 3,
            elevation_min: -0.3,
            elevation_max: 0.3,
            n_elevation: 2,
        };
        for ie in 0..2 {
            for ia in 0..3 {
                for ir in 0..4 {
                    assert_eq!(s.index(ir + 1, ia, ie), s.index(ir, ia, ie) + 1);
                }
            }
        }
        assert_eq!(s.index(4, 2, 1), s.cell_count() - 1);
    }

    #[test]
    fn wrap_angle_covers_half_open_interval() {
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        assert!((wrap_angle(-PI) - (-PI)).abs() < 1e-12);
        assert!((wrap_angle(PI / 3.0) - PI / 3.0).abs() < 1e-12);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-12);
    }

    /// Exact overlap-area oracle: clips the rectangle against an
    /// axis-aligned box (Sutherland-Hodgman) and returns the shoelace area
    /// of the result.
    fn clipped_area(rect: &OrientedRect, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        // inside(p) predicates for the four half-planes of the box.
        type Pt = (f64, f64);
        let clip = |poly: Vec<Pt>, inside: &dyn Fn(Pt) -> bool, cross: &dyn Fn(Pt, Pt) -> Pt| {
            let mut out = Vec::new();
            for k in 0..poly.len() {
                let a = poly[k];
                let b = poly[(k + 1) % poly.len()];
                match (inside(a), inside(b)) {
                    (true, true) => out.push(b),
                    (true, false) => out.push(cross(a, b)),
                    (false, true) => {
                        out.push(cross(a, b));
                        out.push(b);
                    }
                    (false, false) => {}
                }
            }
            out
        };
        let x_cross = |x: f64| {
            move |a: Pt, b: Pt| {
                let t = (x - a.0) / (b.0 - a.0);
                (x, a.1 + t * (b.1 - a.1))
            }
        };
        let y_cross = |y: f64| {
            move |a: Pt, b: Pt| {
                let t = (y - a.1) / (b.1 - a.1);
                (a.0 + t * (b.0 - a.0), y)
            }
        };
        let mut poly: Vec<Pt> = rect.corners().to_vec();
        poly = clip(poly, &|p| p.0 >= x0, &x_cross(x0));
        if poly.is_empty() {
            return 0.0;
        }
        poly = clip(poly, &|p| p.0 <= x1, &x_cross(x1));
        if poly.is_empty() {
            return 0.0;
        }
        poly = clip(poly, &|p| p.1 >= y0, &y_cross(y0));
        if poly.is_empty() {
            return 0.0;
        }
        poly = clip(poly, &|p| p.1 <= y1, &y_cross(y1));
        let mut area = 0.0;
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            area += a.0 * b.1 - b.0 * a.1;
        }
        (area / 2.0).abs()
    }

    /// Dense-sampling ray oracle: all cells containing at least one of `n`
    /// evenly spaced interior sample points of the segment.
    fn ray_cells_oracle(g: &GridSpec2D, from: (f64, f64), to: (f64, f64), n: usize) -> BTreeSet<(i64, i64)> {
        let mut out = BTreeSet::new();
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            let x = from.0 + t * (to.0 - from.0);
            let y = from.1 + t * (to.1 - from.1);
            let i = ((x - g.origin_x) / g.resolution).floor() as i64;
            let j = ((y - g.origin_y) / g.resolution).floor() as i64;
            out.insert((i, j));
        }
        out
    }

    #[test]
    fn ray_walks_a_horizontal_segment() {
        let g = spec(8, 8, 1.0);
        let cells: Vec<_> = GridRay2::new(&g, (0.5, 2.5), (6.5, 2.5)).collect();
        let want: Vec<_> = (0..=6).map(|i| (i, 2)).collect();
        assert_eq!(cells, want);
    }

    #[test]
    fn ray_from_point_to_itself_is_one_cell() {
        let g = spec(8, 8, 1.0);
        let cells: Vec<_> = GridRay2::new(&g, (3.3, 4.7), (3.3, 4.7)).collect();
        assert_eq!(cells, vec![(3, 4)]);
    }

    #[test]
    fn ray_visits_every_cell_the_segment_crosses() {
        let g = spec(16, 16, 0.5);
        let from = (0.26, 0.74);
        let to = (7.9, 6.1);
        let walked: BTreeSet<_> = GridRay2::new(&g, from, to).collect();
        let sampled = ray_cells_oracle(&g, from, to, 4000);
        // Sampling can only find cells the segment truly crosses, so the
        // sampled set is a subset of the walked set; they differ at most in
        // corner-touch cells.
        assert!(sampled.is_subset(&walked), "walked {walked:?} missing cells from {sampled:?}");
        assert!(walked.len() <= sampled.len() + 2);
    }

    #[test]
    fn ray3_walks_a_vertical_column() {
        let v = VoxelGridSpec {
            base: spec(4, 4, 1.0),
            z_min: 0.0,
            z_max: 4.0,
            n_z: 8,
        };
        let cells: Vec<_> = GridRay3::new(&v, (1.5, 1.5, 0.25), (1.5, 1.5, 3.75)).collect();
        let want: Vec<_> = (0..=7).map(|k| [1, 1, k]).collect();
        assert_eq!(cells, want);
    }

    fn test_sensor(z: f64) -> SensorPose {
        SensorPose {
            x: 0.0,
            y: 0.0,
            z,
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

    #[test]
    fn slice_selects_the_elevation_bin_through_the_height_plane() {
        let s = SphericalGridSpec {
            r_min: 0.0,
            r_max: 60.0,
            n_range: 30,
            azimuth_min: -0.5,
            azimuth_max: 0.5,
            n_azimuth: 4,
            elevation_min: -0.6,
            elevation_max: 0.0,
            n_elevation: 24,
        };
        // Tag every bin with its elevation index so the slice reveals which
        // bin it picked.
        let mut g = SphericalGrid::filled(s, 0.0);
        for ie in 0..s.n_elevation {
            for ia in 0..s.n_azimuth {
                for ir in 0..s.n_range {
                    g.values_mut()[s.index(ir, ia, ie)] = ie as f64;
                }
            }
        }
        let sensor = test_sensor(6.0);
        let sliced = slice_at_height(&g, &sensor, 1.0).unwrap();
        let p = s.polar();
        for ir in 0..s.n_range {
            let r = s.range_center(ir);
            let el = (1.0 - 6.0f64).atan2(r);
            let got = sliced.values()[p.index(ir, 1)];
            match s.elevation_bin(el) {
                Some(ie) => assert_eq!(got, ie as f64, "range ring {ir}"),
                None => assert_eq!(got, UNKNOWN, "range ring {ir} should be unknown"),
            }
        }
        // Near ranges need a steeper look-down angle than the window allows.
        let r0 = s.range_center(0);
        assert!((1.0 - 6.0f64).atan2(r0) < s.elevation_min);
        assert_eq!(sliced.values()[p.index(0, 0)], UNKNOWN);
    }

    #[test]
    fn slice_requires_elevation_bins() {
        let s = SphericalGridSpec {
            r_min: 0.0,
            r_max: 10.0,
            n_range: 5,
            azimuth_min: -0.5,
            azimuth_max: 0.5,
            n_azimuth: 2,
            elevation_min: -0.3,
            elevation_max: 0.3,
            n_elevation: 0,
        };
        // Zero elevation bins means zero cells, so an empty buffer is legal.
        let g = SphericalGrid::from_values(s, Vec::new()).unwrap();
        let err = slice_at_height(&g, &test_sensor(6.0), 1.0).unwrap_err();
        assert!(matches!(err, GridError::NoElevationBins));
    }

    #[test]
    fn resample_keeps_constant_fields_and_masks_the_wedge() {
        let p = PolarGridSpec {
            r_min: 1.0,
            r_max: 40.0,
            n_range: 39,
            azimuth_min: -0.6,
            azimuth_max: 0.6,
            n_azimuth: 24,
        };
        let polar = PolarGrid::filled(p, 1.0);
        let sensor = test_sensor(6.0);
        let target = GridSpec2D::new(-5.0, -20.0, 50, 40, 1.0).unwrap();
        let (out, mask) = resample_polar_to_cartesian(&polar, &sensor, &target);
        let mut covered = 0;
        for j in 0..target.height {
            for i in 0..target.width {
                let (x, y) = target.cell_center(i, j);
                let r = sensor.ground_range_to(x, y);
                let az = sensor.azimuth_to(x, y);
                let inside = p.range_bin(r).is_some() && p.azimuth_bin(az).is_some();
                let k = target.index(i, j);
                assert_eq!(mask[k], inside, "cell ({i},{j})");
                if inside {
                    assert_eq!(out.values()[k], 1.0);
                    covered += 1;
                } else {
                    assert_eq!(out.values()[k], UNKNOWN);
                }
            }
        }
        assert!(covered > 100, "wedge should cover a meaningful part of the grid");
    }

    #[test]
    fn from_values_checks_length() {
        let g = spec(3, 3, 1.0);
        assert!(Grid2D::from_values(g, vec![0.0; 9]).is_ok());
        let err = Grid2D::from_values(g, vec![0.0; 8]).unwrap_err();
        assert!(matches!(err, GridError::ValueCountMismatch { got: 8, want: 9 }));
    }

    proptest! {
        #[test]
        fn prop_cell_centers_round_trip(
            ox in -500.0..500.0f64,
            oy in -500.0..500.0f64,
            res in 0.05..4.0f64,
            w in 1usize..60,
            h in 1usize..60,
            i in 0usize..60,
            j in 0usize..60,
        ) {
            let g = GridSpec2D::new(ox, oy, w, h, res).unwrap();
            let (i, j) = (i % w, j % h);
            let (x, y) = g.cell_center(i, j);
            prop_assert_eq!(g.world_to_cell(x, y), Some((i, j)));
        }

        #[test]
        fn prop_overlap_matches_clipped_area_oracle(
            cx in 0.5..5.5f64,
            cy in 0.5..5.5f64,
            yaw in 0.0..std::f64::consts::PI,
            len in 0.3..3.0f64,
            wid in 0.3..3.0f64,
        ) {
            let g = spec(6, 6, 1.0);
            let rect = OrientedRect { cx, cy, yaw, length: len, width: wid };
            let got: BTreeSet<_> = cells_overlapping(&g, &rect).into_iter().collect();
            for j in 0..g.height {
                for i in 0..g.width {
                    let area = clipped_area(&rect, i as f64, j as f64, (i + 1) as f64, (j + 1) as f64);
                    // Skip cells in the numeric gray zone between "clearly
                    // positive area" and "clearly degenerate".
                    if area > 1e-9 {
                        prop_assert!(got.contains(&(i, j)), "cell ({i},{j}) has area {area}");
                    } else if area < 1e-15 {
                        prop_assert!(!got.contains(&(i, j)), "cell ({i},{j}) has area {area}");
                    }
                }
            }
        }

        #[test]
        fn prop_ray_consecutive_cells_are_neighbors(
            fx in 0.1..7.9f64,
            fy in 0.1..7.9f64,
            tx in 0.1..7.9f64,
            ty in 0.1..7.9f64,
        ) {
            let g = spec(8, 8, 1.0);
            let cells: Vec<_> = GridRay2::new(&g, (fx, fy), (tx, ty)).collect();
            prop_assert!(!cells.is_empty());
            prop_assert_eq!(cells[0], ((fx.floor()) as i64, (fy.floor()) as i64));
            for w in cells.windows(2) {
                let di = (w[1].0 - w[0].0).abs();
                let dj = (w[1].1 - w[0].1).abs();
                // Axis steps, or a diagonal step on an exact corner hit.
                prop_assert!(di <= 1 && dj <= 1 && di + dj >= 1,
                    "bad step {:?} -> {:?}", w[0], w[1]);
            }
            let last = *cells.last().unwrap();
            prop_assert_eq!(last, ((tx.floor()) as i64, (ty.floor()) as i64));
        }

        #[test]
        fn prop_wrap_angle_is_idempotent_and_bounded(a in -50.0..50.0f64) {
            let w = wrap_angle(a);
            prop_assert!((-PI..PI).contains(&w));
            prop_assert!((wrap_angle(w) - w).abs() < 1e-12);
            // Same direction modulo full turns.
            prop_assert!(((a - w) / TAU - ((a - w) / TAU).round()).abs() < 1e-9);
        }
    }
}
