//! On-disk formats: measurement logs, object labels, grid snapshots, and
//! evaluation reports.
//!
//! The line-oriented formats (measurements, labels) are JSONL with a
//! one-line header identifying format and version, so files stay
//! streamable and diffable. Grid snapshots are binary: values live in
//! `[0, 1]` and are stored as 16-bit fixed point, which keeps a 160x15
//! grid at 600 frames around a megabyte instead of twenty. Reports are
//! plain JSON carrying the full config echo next to the numbers, so a
//! result can always be traced back to the run that produced it.

use crate::grid::{Grid2D, GridError, GridSpec2D, SphericalGrid, SphericalGridSpec, VoxelGrid, VoxelGridSpec};
use crate::metrics::{rates, MeasurementFrame, MetricsReport, ObjectFrame, ObjectState};
use crate::sensor::Extent;
use crate::sim::GroundTruthLog;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: timestamp {t} regresses below {prev}")]
    TimestampOrder { line: usize, t: f64, prev: f64 },
    #[error("not a grid snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("grid snapshot: {0}")]
    BadGrid(String),
    #[error("label track {id}: {msg}")]
    BadTrack { id: String, msg: String },
    #[error("report: {0}")]
    BadReport(String),
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    format: String,
    version: u32,
}

fn check_header(line: &str, want_format: &str) -> Result<(), IoError> {
    let header: JsonlHeader = serde_json::from_str(line)
        .map_err(|e| IoError::BadHeader(format!("unreadable header line: {e}")))?;
    if header.format != want_format {
        return Err(IoError::BadHeader(format!(
            "expected a {want_format} file, found {}",
            header.format
        )));
    }
    if header.version != 1 {
        return Err(IoError::UnsupportedVersion(header.version));
    }
    Ok(())
}

fn write_header<W: Write>(w: &mut W, format: &str) -> Result<(), IoError> {
    let header = JsonlHeader { format: format.to_string(), version: 1 };
    serde_json::to_writer(&mut *w, &header)?;
    writeln!(w)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Measurement logs

const MEASUREMENT_FORMAT: &str = "sightline-measurement-log";

/// Writes one frame per line after the header. Frame timestamps must be
/// non-decreasing.
pub fn write_measurement_log<W: Write>(
    w: &mut W,
    frames: &[MeasurementFrame],
) -> Result<(), IoError> {
    write_header(w, MEASUREMENT_FORMAT)?;
    let mut prev = f64::NEG_INFINITY;
    for (k, frame) in frames.iter().enumerate() {
        if frame.t < prev {
            return Err(IoError::TimestampOrder { line: k + 2, t: frame.t, prev });
        }
        prev = frame.t;
        serde_json::to_writer(&mut *w, frame)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_measurement_log<R: BufRead>(r: R) -> Result<Vec<MeasurementFrame>, IoError> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| IoError::BadHeader("empty file".to_string()))?;
    check_header(&first?, MEASUREMENT_FORMAT)?;
    let mut frames = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: MeasurementFrame = serde_json::from_str(&line)
            .map_err(|e| IoError::Malformed { line: idx + 1, msg: e.to_string() })?;
        if frame.t < prev {
            return Err(IoError::TimestampOrder { line: idx + 1, t: frame.t, prev });
        }
        prev = frame.t;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn save_measurement_log(path: &Path, frames: &[MeasurementFrame]) -> Result<(), IoError> {
    write_measurement_log(&mut BufWriter::new(File::create(path)?), frames)
}

pub fn load_measurement_log(path: &Path) -> Result<Vec<MeasurementFrame>, IoError> {
    read_measurement_log(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Object labels

const LABELS_FORMAT: &str = "sightline-labels";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelKnot {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// A labeled object trajectory: straight-line motion between knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelTrack {
    pub id: String,
    pub extent: Extent,
    pub knots: Vec<LabelKnot>,
}

impl LabelTrack {
    fn validate(&self) -> Result<(), IoError> {
        if self.knots.len() < 2 {
            return Err(IoError::BadTrack {
                id: self.id.clone(),
                msg: format!("{} knot(s); a track needs at least 2", self.knots.len()),
            });
        }
        for pair in self.knots.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(IoError::BadTrack {
                    id: self.id.clone(),
                    msg: format!(
                        "knot times must strictly increase, got {} then {}",
                        pair[0].t, pair[1].t
                    ),
                });
            }
        }
        Ok(())
    }

    fn displacement(&self) -> f64 {
        let a = self.knots.first().unwrap();
        let b = self.knots.last().unwrap();
        (b.x - a.x).hypot(b.y - a.y)
    }
}

pub fn write_labels<W: Write>(w: &mut W, tracks: &[LabelTrack]) -> Result<(), IoError> {
    write_header(w, LABELS_FORMAT)?;
    for track in tracks {
        track.validate()?;
        serde_json::to_writer(&mut *w, track)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a label file. Suspicious but legal tracks (barely moving over
/// their whole lifetime) are reported as warnings alongside the data.
pub fn read_labels<R: BufRead>(r: R) -> Result<(Vec<LabelTrack>, Vec<String>), IoError> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| IoError::BadHeader("empty file".to_string()))?;
    check_header(&first?, LABELS_FORMAT)?;
    let mut tracks: Vec<LabelTrack> = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let track: LabelTrack = serde_json::from_str(&line)
            .map_err(|e| IoError::Malformed { line: idx + 1, msg: e.to_string() })?;
        track.validate()?;
        if tracks.iter().any(|t| t.id == track.id) {
            return Err(IoError::BadTrack {
                id: track.id,
                msg: "duplicate track id".to_string(),
            });
        }
        if track.displacement() < 0.1 {
            warnings.push(format!(
                "track {} moves {:.3} m over its lifetime; stationary labels are usually mistakes",
                track.id,
                track.displacement()
            ));
        }
        tracks.push(track);
    }
    Ok((tracks, warnings))
}

pub fn save_labels(path: &Path, tracks: &[LabelTrack]) -> Result<(), IoError> {
    write_labels(&mut BufWriter::new(File::create(path)?), tracks)
}

pub fn load_labels(path: &Path) -> Result<(Vec<LabelTrack>, Vec<String>), IoError> {
    read_labels(BufReader::new(File::open(path)?))
}

/// Samples label tracks at the given times, producing object frames with
/// velocities from the segment slopes and headings from the motion
/// direction. Objects exist only between their first and last knot; a
/// track that is momentarily stationary keeps a zero heading.
pub fn labels_to_objects(tracks: &[LabelTrack], times: &[f64]) -> Vec<ObjectFrame> {
    times
        .iter()
        .map(|&t| {
            let mut objects = Vec::new();
            for track in tracks {
                let first = track.knots.first().unwrap();
                let last = track.knots.last().unwrap();
                if t < first.t || t > last.t {
                    continue;
                }
                let seg = track
                    .knots
                    .windows(2)
                    .find(|pair| t <= pair[1].t)
                    .expect("t is within the knot span");
                let (a, b) = (seg[0], seg[1]);
                let dt = b.t - a.t;
                let f = (t - a.t) / dt;
                let (v_x, v_y) = ((b.x - a.x) / dt, (b.y - a.y) / dt);
                let speed = v_x.hypot(v_y);
                objects.push(ObjectState {
                    id: track.id.clone(),
                    t,
                    x: a.x + f * (b.x - a.x),
                    y: a.y + f * (b.y - a.y),
                    yaw: if speed > 1e-9 { v_y.atan2(v_x) } else { 0.0 },
                    v_x,
                    v_y,
                    yaw_rate: 0.0,
                    extent: track.extent,
                });
            }
            ObjectFrame { t, objects }
        })
        .collect()
}

/// Exports a simulated log as label tracks. The simulator moves objects
/// at constant velocity, so two knots per object (first and last
/// appearance) reproduce the trajectory exactly.
pub fn gt_to_labels(log: &GroundTruthLog) -> Vec<LabelTrack> {
    let mut order: Vec<String> = Vec::new();
    let mut firsts: std::collections::HashMap<String, (LabelKnot, Extent)> =
        std::collections::HashMap::new();
    let mut lasts: std::collections::HashMap<String, LabelKnot> = std::collections::HashMap::new();
    for frame in &log.frames {
        for obj in &frame.objects {
            let knot = LabelKnot { t: obj.t, x: obj.x, y: obj.y };
            if !firsts.contains_key(&obj.id) {
                order.push(obj.id.clone());
                firsts.insert(obj.id.clone(), (knot, obj.extent));
            }
            lasts.insert(obj.id.clone(), knot);
        }
    }
    order
        .into_iter()
        .filter_map(|id| {
            let (first, extent) = firsts.remove(&id)?;
            let last = lasts.remove(&id)?;
            // An object seen in a single frame has no usable trajectory.
            if last.t <= first.t {
                return None;
            }
            Some(LabelTrack { id, extent, knots: vec![first, last] })
        })
        .collect()
}

pub fn save_ground_truth(path: &Path, log: &GroundTruthLog) -> Result<(), IoError> {
    serde_json::to_writer(BufWriter::new(File::create(path)?), log)?;
    Ok(())
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruthLog, IoError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

// ---------------------------------------------------------------------------
// Grid snapshots

const GRID_MAGIC: &[u8; 4] = b"SLVG";
const GRID_VERSION: u16 = 1;

/// Any of the grid shapes the toolkit produces, with an optional mask for
/// 2D grids (used to carry field-of-view coverage next to visibility).
#[derive(Clone, Debug, PartialEq)]
pub enum GridSnapshot {
    Cartesian2d { grid: Grid2D, mask: Option<Vec<bool>> },
    Spherical(SphericalGrid),
    Voxel(VoxelGrid),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SnapshotHeader {
    Cartesian2d { spec: GridSpec2D, mask: bool },
    Spherical { spec: SphericalGridSpec },
    Voxel { spec: VoxelGridSpec },
}

fn quantize(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 2);
    for &v in values {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

fn dequantize(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64 / 65535.0)
        .collect()
}

/// Binary layout: `SLVG`, u16 version, u32 JSON header length, the
/// header, then one little-endian u16 per cell (value x 65535), then one
/// byte per cell for the mask if present. Worst-case quantization error
/// is 2^-17, comfortably below anything the estimators resolve.
pub fn write_grid_snapshot<W: Write>(w: &mut W, snap: &GridSnapshot) -> Result<(), IoError> {
    let (header, values, mask) = match snap {
        GridSnapshot::Cartesian2d { grid, mask } => {
            if let Some(m) = mask {
                if m.len() != grid.values().len() {
                    return Err(IoError::BadGrid(format!(
                        "mask has {} entries for {} cells",
                        m.len(),
                        grid.values().len()
                    )));
                }
            }
            (
                SnapshotHeader::Cartesian2d { spec: *grid.spec(), mask: mask.is_some() },
                grid.values(),
                mask.as_deref(),
            )
        }
        GridSnapshot::Spherical(grid) => {
            (SnapshotHeader::Spherical { spec: *grid.spec() }, grid.values(), None)
        }
        GridSnapshot::Voxel(grid) => {
            (SnapshotHeader::Voxel { spec: *grid.spec() }, grid.values(), None)
        }
    };
    let header_bytes = serde_json::to_vec(&header)?;
    w.write_all(GRID_MAGIC)?;
    w.write_all(&GRID_VERSION.to_le_bytes())?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    w.write_all(&quantize(values))?;
    if let Some(mask) = mask {
        let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_grid_snapshot<R: Read>(r: &mut R) -> Result<GridSnapshot, IoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(IoError::BadMagic);
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)?;
    let version = u16::from_le_bytes(buf2);
    if version != GRID_VERSION {
        return Err(IoError::UnsupportedVersion(version as u32));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let header_len = u32::from_le_bytes(buf4) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: SnapshotHeader = serde_json::from_slice(&header_bytes)?;
    let read_values = |r: &mut R, count: usize| -> Result<Vec<f64>, IoError> {
        let mut bytes = vec![0u8; count * 2];
        r.read_exact(&mut bytes)
            .map_err(|_| IoError::BadGrid(format!("payload shorter than {count} cells")))?;
        Ok(dequantize(&bytes))
    };
    match header {
        SnapshotHeader::Cartesian2d { spec, mask } => {
            spec.validate()?;
            let values = read_values(r, spec.cell_count())?;
            let mask = if mask {
                let mut bytes = vec![0u8; spec.cell_count()];
                r.read_exact(&mut bytes)
                    .map_err(|_| IoError::BadGrid("mask truncated".to_string()))?;
                let mut out = Vec::with_capacity(bytes.len());
                for b in bytes {
                    match b {
                        0 => out.push(false),
                        1 => out.push(true),
                        other => {
                            return Err(IoError::BadGrid(format!("mask byte {other} not 0/1")))
                        }
                    }
                }
                Some(out)
            } else {
                None
            };
            Ok(GridSnapshot::Cartesian2d { grid: Grid2D::from_values(spec, values)?, mask })
        }
        SnapshotHeader::Spherical { spec } => {
            spec.validate()?;
            let values = read_values(r, spec.cell_count())?;
            Ok(GridSnapshot::Spherical(SphericalGrid::from_values(spec, values)?))
        }
        SnapshotHeader::Voxel { spec } => {
            spec.validate()?;
            let values = read_values(r, spec.cell_count())?;
            Ok(GridSnapshot::Voxel(VoxelGrid::from_values(spec, values)?))
        }
    }
}

pub fn save_grid_snapshot(path: &Path, snap: &GridSnapshot) -> Result<(), IoError> {
    write_grid_snapshot(&mut BufWriter::new(File::create(path)?), snap)
}

pub fn load_grid_snapshot(path: &Path) -> Result<GridSnapshot, IoError> {
    read_grid_snapshot(&mut BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Evaluation reports

/// A finished evaluation: the metrics plus an echo of the configuration
/// that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_echo: serde_json::Value,
    pub metrics: MetricsReport,
}

pub fn save_report(path: &Path, report: &RunReport) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

/// Loads a report and cross-checks it: the stored rates must be exactly
/// the ones the stored counts produce, and the pair count must match the
/// count total. A report failing these was edited or corrupted.
pub fn load_report(path: &Path) -> Result<RunReport, IoError> {
    let report: RunReport = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let expect = rates(&report.metrics.counts);
    if expect != report.metrics.rates {
        return Err(IoError::BadReport(format!(
            "rates {:?} do not match counts {:?}",
            report.metrics.rates, report.metrics.counts
        )));
    }
    if report.metrics.pairs != report.metrics.counts.total() {
        return Err(IoError::BadReport(format!(
            "pair count {} does not match count total {}",
            report.metrics.pairs,
            report.metrics.counts.total()
        )));
    }
    if let Some(c) = report.metrics.coverage_rate {
        if !(0.0..=1.0).contains(&c) {
            return Err(IoError::BadReport(format!("coverage rate {c} outside [0, 1]")));
        }
    }
    Ok(report)
}
