//! Renders a 2D visibility snapshot as a binary PPM (P6) raster.
//!
//! Palette: visibility 1 is red (204, 32, 32), 0.5 is white, 0 is blue
//! (32, 48, 204), linearly interpolated; cells outside the mask are gray
//! (225, 225, 225). Optional overlays: object footprint centers from a
//! label file as black crosses, measurements as dark green dots.

use std::io::Write;
use std::path::Path;

use sightline_core::grid::{GridSpec2D, SensorPose};
use sightline_core::io::{load_grid_snapshot, load_labels, load_measurement_log, labels_to_objects,
    GridSnapshot};

use crate::{data, Failure};

const VISIBLE: [f64; 3] = [204.0, 32.0, 32.0];
const UNKNOWN_COLOR: [f64; 3] = [255.0, 255.0, 255.0];
const INVISIBLE: [f64; 3] = [32.0, 48.0, 204.0];
const MASKED: [u8; 3] = [225, 225, 225];
const MARKER: [u8; 3] = [0, 0, 0];
const DOT: [u8; 3] = [0, 112, 0];

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a[c] + (b[c] - a[c]) * t).round().clamp(0.0, 255.0) as u8;
    }
    out
}

fn cell_color(value: f64, masked: bool) -> [u8; 3] {
    if !masked {
        return MASKED;
    }
    let v = value.clamp(0.0, 1.0);
    if v >= 0.5 {
        lerp(UNKNOWN_COLOR, VISIBLE, (v - 0.5) * 2.0)
    } else {
        lerp(INVISIBLE, UNKNOWN_COLOR, v * 2.0)
    }
}

struct Image {
    width: usize,
    height: usize,
    scale: usize,
    pixels: Vec<u8>,
}

impl Image {
    fn new(cells_w: usize, cells_h: usize, scale: usize) -> Self {
        let (width, height) = (cells_w * scale, cells_h * scale);
        Image { width, height, scale, pixels: vec![0; width * height * 3] }
    }

    /// Fills the block of cell (i, j); grid row 0 is drawn at the image
    /// bottom so +y points up.
    fn fill_cell(&mut self, i: usize, j: usize, cells_h: usize, color: [u8; 3]) {
        for dy in 0..self.scale {
            let py = (cells_h - 1 - j) * self.scale + dy;
            for dx in 0..self.scale {
                let px = i * self.scale + dx;
                let k = (py * self.width + px) * 3;
                self.pixels[k..k + 3].copy_from_slice(&color);
            }
        }
    }

    fn set_px(&mut self, px: i64, py: i64, color: [u8; 3]) {
        if px < 0 || py < 0 || px as usize >= self.width || py as usize >= self.height {
            return;
        }
        let k = (py as usize * self.width + px as usize) * 3;
        self.pixels[k..k + 3].copy_from_slice(&color);
    }

    /// Image pixel of a world position, or nothing when off-grid.
    fn locate(&self, spec: &GridSpec2D, cells_h: usize, x: f64, y: f64) -> Option<(i64, i64)> {
        let (i, j) = spec.world_to_cell(x, y)?;
        let (cx, cy) = spec.cell_center(i, j);
        // Sub-cell offset, in pixels.
        let fx = (x - cx) / spec.resolution + 0.5;
        let fy = (y - cy) / spec.resolution + 0.5;
        let px = (i as f64 + fx.clamp(0.0, 0.999)) * self.scale as f64;
        let py = ((cells_h - 1 - j) as f64 + (1.0 - fy.clamp(0.0, 0.999))) * self.scale as f64;
        Some((px as i64, py as i64))
    }

    fn cross(&mut self, px: i64, py: i64, arm: i64, color: [u8; 3]) {
        for d in -arm..=arm {
            self.set_px(px + d, py, color);
            self.set_px(px, py + d, color);
        }
    }

    fn dot(&mut self, px: i64, py: i64, color: [u8; 3]) {
        for dy in -1..=1 {
            for dx in -1..=1 {
                self.set_px(px + dx, py + dy, color);
            }
        }
    }

    fn write_ppm(&self, path: &Path) -> Result<(), Failure> {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path)
                .map_err(|e| data(format!("writing {}: {e}", path.display())))?,
        );
        let io_err = |e: std::io::Error| data(format!("writing {}: {e}", path.display()));
        write!(w, "P6\n{} {}\n255\n", self.width, self.height).map_err(io_err)?;
        w.write_all(&self.pixels).map_err(io_err)?;
        Ok(())
    }
}

pub struct RenderArgs<'a> {
    pub input: &'a Path,
    pub out: &'a Path,
    pub scale: usize,
    pub labels: Option<&'a Path>,
    pub measurements: Option<&'a Path>,
    /// Overlay time; defaults to the last time present in the overlay
    /// files.
    pub at: Option<f64>,
    /// Pose for projecting polar measurements onto the ground.
    pub sensor: SensorPose,
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), Failure> {
    let snap =
        load_grid_snapshot(args.input).map_err(|e| data(format!("data-io: {e}")))?;
    let (grid, mask) = match snap {
        GridSnapshot::Cartesian2d { grid, mask } => (grid, mask),
        GridSnapshot::Spherical(_) | GridSnapshot::Voxel(_) => {
            return Err(data(format!(
                "{} is not a 2D snapshot; render only draws Cartesian grids",
                args.input.display()
            )))
        }
    };
    if args.scale == 0 {
        return Err(data("scale must be at least 1".to_string()));
    }
    let spec = *grid.spec();
    let (w, h) = (spec.width, spec.height);
    let mut img = Image::new(w, h, args.scale);
    for j in 0..h {
        for i in 0..w {
            let k = spec.index(i, j);
            let masked = mask.as_ref().map_or(true, |m| m[k]);
            img.fill_cell(i, j, h, cell_color(grid.values()[k], masked));
        }
    }

    if let Some(path) = args.measurements {
        let frames = load_measurement_log(path).map_err(|e| data(format!("data-io: {e}")))?;
        let frame = match args.at {
            Some(t) => frames.iter().min_by(|a, b| {
                (a.t - t).abs().partial_cmp(&(b.t - t).abs()).expect("finite times")
            }),
            None => frames.last(),
        };
        if let Some(f) = frame {
            for m in &f.measurements {
                let (x, y) = m.ground_position(&args.sensor);
                if let Some((px, py)) = img.locate(&spec, h, x, y) {
                    img.dot(px, py, DOT);
                }
            }
        }
    }

    if let Some(path) = args.labels {
        let (tracks, _) = load_labels(path).map_err(|e| data(format!("data-io: {e}")))?;
        let t = args.at.or_else(|| {
            tracks
                .iter()
                .flat_map(|tr| tr.knots.iter().map(|k| k.t))
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
        });
        if let Some(t) = t {
            for frame in labels_to_objects(&tracks, &[t]) {
                for obj in &frame.objects {
                    if let Some((px, py)) = img.locate(&spec, h, obj.x, obj.y) {
                        img.cross(px, py, args.scale as i64, MARKER);
                    }
                }
            }
        }
    }

    img.write_ppm(args.out)?;
    println!(
        "wrote {} ({}x{} px, {} cells at scale {})",
        args.out.display(),
        img.width,
        img.height,
        w * h,
        args.scale
    );
    Ok(())
}
