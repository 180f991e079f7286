//! The TOML run configuration: which estimator to run, where the data
//! comes from (a synthetic scene or recorded logs), and every module
//! config in one place. Any omitted section or field falls back to its
//! default, and the fully resolved config is echoed into every output so
//! a run can be reproduced from its artifacts alone.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sightline_core::grid::{FovSpec, SensorPose};
use sightline_core::metrics::AssociationTolerance;
use sightline_core::pipeline::{Camera3dConfig, Radar2dConfig, Radar3dConfig, ReferenceConfig};
use sightline_core::sim::{CameraModel, RadarDetectionModel, SceneConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum EstimatorName {
    Radar2d,
    Radar3d,
    Camera3d,
    Reference,
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `pad`, not `write_str`, so table columns can request a width.
        f.pad(match self {
            EstimatorName::Radar2d => "radar2d",
            EstimatorName::Radar3d => "radar3d",
            EstimatorName::Camera3d => "camera3d",
            EstimatorName::Reference => "reference",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub estimator: EstimatorName,
    /// Seed for the detection simulation (traffic is seeded separately by
    /// `scene.seed`).
    pub noise_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { estimator: EstimatorName::Radar3d, noise_seed: 1 }
    }
}

/// Recorded inputs; any path given here replaces the corresponding
/// synthetic stage.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsSection {
    pub ground_truth: Option<PathBuf>,
    pub measurements: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub radar: RadarDetectionModel,
    pub camera: CameraModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub tolerance: AssociationTolerance,
    pub vis_threshold: f64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { tolerance: AssociationTolerance::default(), vis_threshold: 0.5 }
    }
}

/// Sensor pose binding with a default for every field, so a config can
/// override a single number. Angles are radians, like everywhere else.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub fov: FovSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FovSection {
    pub max_range: f64,
    pub azimuth_half_angle: f64,
    pub elevation_min: f64,
    pub elevation_max: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        let p = default_sensor();
        SensorSection { x: p.x, y: p.y, z: p.z, yaw: p.yaw, pitch: p.pitch, fov: p.fov.into() }
    }
}

impl Default for FovSection {
    fn default() -> Self {
        default_sensor().fov.into()
    }
}

impl From<FovSpec> for FovSection {
    fn from(f: FovSpec) -> Self {
        FovSection {
            max_range: f.max_range,
            azimuth_half_angle: f.azimuth_half_angle,
            elevation_min: f.elevation_min,
            elevation_max: f.elevation_max,
        }
    }
}

impl SensorSection {
    pub fn pose(&self) -> SensorPose {
        SensorPose {
            x: self.x,
            y: self.y,
            z: self.z,
            yaw: self.yaw,
            pitch: self.pitch,
            fov: FovSpec {
                max_range: self.fov.max_range,
                azimuth_half_angle: self.fov.azimuth_half_angle,
                elevation_min: self.fov.elevation_min,
                elevation_max: self.fov.elevation_max,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub scene: SceneConfig,
    pub sensor: SensorSection,
    pub inputs: InputsSection,
    pub detection: DetectionSection,
    pub radar2d: Radar2dConfig,
    pub radar3d: Radar3dConfig,
    pub camera3d: Camera3dConfig,
    pub reference: ReferenceConfig,
    pub evaluation: EvaluationSection,
    pub sweep: Option<SweepSpec>,
}

/// Roadside mast shared by all defaults: 6 m up, looking along the road.
fn default_sensor() -> SensorPose {
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

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            scene: SceneConfig::default(),
            sensor: SensorSection::default(),
            inputs: InputsSection::default(),
            detection: DetectionSection::default(),
            radar2d: Radar2dConfig::default(),
            radar3d: Radar3dConfig::default(),
            camera3d: Camera3dConfig::default(),
            reference: ReferenceConfig::default(),
            evaluation: EvaluationSection::default(),
            sweep: None,
        }
    }
}

impl RunConfig {
    /// `--seed` on the command line: one knob that reseeds both the
    /// traffic and the detection noise.
    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.scene.seed = s;
            self.run.noise_seed = s;
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Fvr,
    Fir,
    /// `weights[0] * FVR + weights[1] * FIR`.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// One swept parameter: a dotted path into this config file plus either
/// an explicit value set or an inclusive linear range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParameter {
    pub path: String,
    #[serde(default)]
    pub values: Option<Vec<toml::Value>>,
    #[serde(default)]
    pub range: Option<SweepRange>,
}

impl SweepParameter {
    /// The concrete values this parameter takes, in sweep order.
    pub fn expand(&self) -> Result<Vec<toml::Value>, String> {
        match (&self.values, &self.range) {
            (Some(_), Some(_)) | (None, None) => Err(format!(
                "parameter {} needs exactly one of `values` or `range`",
                self.path
            )),
            (Some(vs), None) => {
                if vs.is_empty() {
                    return Err(format!("parameter {} has an empty value set", self.path));
                }
                Ok(vs.clone())
            }
            (None, Some(r)) => {
                if r.steps == 0 {
                    return Err(format!("parameter {} has zero steps", self.path));
                }
                let vals = (0..r.steps)
                    .map(|i| {
                        let f = if r.steps == 1 {
                            r.min
                        } else {
                            r.min + (r.max - r.min) * i as f64 / (r.steps - 1) as f64
                        };
                        toml::Value::Float(f)
                    })
                    .collect();
                Ok(vals)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub objective: Objective,
    /// Weights for [`Objective::Sum`]: `[w_fvr, w_fir]`.
    pub weights: [f64; 2],
    /// Maximum number of candidate evaluations; the grid is truncated
    /// beyond it.
    pub budget: usize,
    pub parameters: Vec<SweepParameter>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            objective: Objective::Sum,
            weights: [1.0, 1.0],
            budget: 1,
            parameters: Vec::new(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.budget == 0 {
            return Err("sweep budget must be at least 1".to_string());
        }
        if self.parameters.is_empty() {
            return Err("sweep has no parameters".to_string());
        }
        for p in &self.parameters {
            p.expand()?;
        }
        Ok(())
    }

    /// All candidate assignments in deterministic order (the last
    /// parameter varies fastest), truncated to the budget.
    pub fn candidates(&self) -> Result<Vec<Vec<(String, toml::Value)>>, String> {
        let axes: Vec<(String, Vec<toml::Value>)> = self
            .parameters
            .iter()
            .map(|p| Ok((p.path.clone(), p.expand()?)))
            .collect::<Result<_, String>>()?;
        let mut out = vec![Vec::new()];
        for (path, vals) in &axes {
            let mut next = Vec::with_capacity(out.len() * vals.len());
            for prefix in &out {
                for v in vals {
                    let mut c = prefix.clone();
                    c.push((path.clone(), v.clone()));
                    next.push(c);
                }
            }
            out = next;
            if out.len() >= self.budget {
                // No point expanding combinations past the budget.
                out.truncate(self.budget);
            }
        }
        out.truncate(self.budget);
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Loading and dotted-path mutation

pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
}

pub fn parse_config(text: &str) -> Result<RunConfig, toml::de::Error> {
    toml::from_str(text)
}

/// Sets `path` (e.g. `radar3d.decay.decay_rate`) inside a parsed config
/// document, creating intermediate tables as needed.
pub fn set_dotted(doc: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("bad parameter path {path:?}"));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("{path}: {part} is not a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| format!("{path}: parent of {} is not a table", parts[parts.len() - 1]))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Re-reads the original config text with a set of sweep overrides
/// applied.
pub fn apply_overrides(
    text: &str,
    settings: &[(String, toml::Value)],
) -> Result<RunConfig, String> {
    let mut doc: toml::Value =
        toml::from_str(text).map_err(|e| format!("parsing config: {e}"))?;
    for (path, value) in settings {
        set_dotted(&mut doc, path, value.clone())?;
    }
    doc.try_into().map_err(|e| format!("config after overrides: {e}"))
}
