//! Scenario configuration files.
//!
//! ```toml
//! schema_version = 1
//! carrier_hz = 28.0e9
//! rays_per_path = 20
//! seed = 1
//!
//! [time]
//! start = 0.0
//! stop = 60.0
//! step = 0.1
//!
//! [tx]
//! waypoints = [{ t = 0.0, position = [0.0, 0.0, 100.0] }, { t = 60.0, position = [1800.0, 0.0, 100.0] }]
//! attitude = [{ t = 0.0, pitch_deg = 0.0 }, { t = 60.0, pitch_deg = 90.0 }]
//! array = { count = 2, spacing_wavelengths = 0.5, axis = [0.0, 1.0, 0.0] }
//!
//! [rx]
//! waypoints = [{ t = 0.0, position = [0.0, 0.0, 2.0] }]
//!
//! [scene]
//! ground = { z = 0.0, half_size = 3000.0 }
//! blocks = [{ name = "b1", min = [10.0, 15.0, 0.0], max = [60.0, 35.0, 30.0] }]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{AntennaArray, Scenario, TimeGrid};
use crate::error::{Error, Result};
use crate::kinematics::{wavelength, Attitude, AttitudeSample, Trajectory, Vec3, Waypoint};
use crate::scene::{Scatterer, Scene};

pub const SCHEMA_VERSION: u32 = 1;

const URBAN: &str = include_str!("../scenarios/urban_28ghz.toml");
const SEMIURBAN: &str = include_str!("../scenarios/semiurban_24ghz.toml");

/// Names and texts of the scenarios shipped with the crate.
pub fn bundled_scenarios() -> [(&'static str, &'static str); 2] {
    [("urban_28ghz", URBAN), ("semiurban_24ghz", SEMIURBAN)]
}

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    bundled_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub carrier_hz: f64,
    #[serde(default = "default_rays")]
    pub rays_per_path: usize,
    #[serde(default)]
    pub seed: u64,
    pub time: TimeConfig,
    pub tx: TerminalConfig,
    pub rx: TerminalConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub models: ModelPaths,
    #[serde(default)]
    pub data: DataConfig,
}

fn default_rays() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    pub waypoints: Vec<WaypointConfig>,
    #[serde(default)]
    pub attitude: Vec<AttitudeConfig>,
    #[serde(default)]
    pub array: ArrayConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointConfig {
    pub t: f64,
    pub position: [f64; 3],
}

/// Attitude sample in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeConfig {
    pub t: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default = "half")]
    pub spacing_wavelengths: f64,
    #[serde(default = "y_axis")]
    pub axis: [f64; 3],
    /// Explicit element offsets in metres; overrides the linear layout.
    #[serde(default)]
    pub elements: Option<Vec<[f64; 3]>>,
}

fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn y_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            count: 1,
            spacing_wavelengths: 0.5,
            axis: y_axis(),
            elements: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub ground: Option<GroundConfig>,
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundConfig {
    pub z: f64,
    pub half_size: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub name: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default = "yes")]
    pub reflective: bool,
}

fn yes() -> bool {
    true
}

/// Model files, relative to the config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    pub bpnn_los: Option<PathBuf>,
    pub bpnn_nlos: Option<PathBuf>,
    pub gan_azimuth: Option<PathBuf>,
    pub gan_elevation: Option<PathBuf>,
}

/// Terminal sampling regions for corpus generation. Missing boxes fall back
/// to positions along the terminal's trajectory.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub tx_box: Option<BoxConfig>,
    pub rx_box: Option<BoxConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = bundled_scenario(name).ok_or_else(|| Error::invalid(format!("no bundled scenario named {name}")))?;
        Self::from_toml_str(text)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let lambda = if self.carrier_hz > 0.0 {
            wavelength(self.carrier_hz)
        } else {
            return Err(Error::config("carrier_hz", "must be positive"));
        };
        let scenario = Scenario {
            carrier_hz: self.carrier_hz,
            tx: trajectory(&self.tx, "tx")?,
            rx: trajectory(&self.rx, "rx")?,
            tx_array: array(&self.tx.array, lambda, "tx.array")?,
            rx_array: array(&self.rx.array, lambda, "rx.array")?,
            scene: self.scene.build()?,
            rays_per_path: self.rays_per_path,
            time: TimeGrid {
                start: self.time.start,
                stop: self.time.stop,
                step: self.time.step,
            },
            seed: self.seed,
        };
        scenario.validate()?;
        for (name, traj) in [("tx", &scenario.tx), ("rx", &scenario.rx)] {
            let (a, b) = traj.span();
            if !traj.is_stationary() && (scenario.time.start < a || scenario.time.stop > b) {
                return Err(Error::config(
                    "time",
                    format!("[{}, {}] exceeds the {name} trajectory span [{a}, {b}]", scenario.time.start, scenario.time.stop),
                ));
            }
        }
        Ok(scenario)
    }
}

impl SceneConfig {
    pub fn build(&self) -> Result<Scene> {
        let mut scatterers = Vec::new();
        if let Some(g) = self.ground {
            if !(g.half_size > 0.0) {
                return Err(Error::config("scene.ground.half_size", "must be positive"));
            }
            scatterers.push(Scatterer::ground(g.z, g.half_size));
        }
        let mut names = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if (0..3).any(|k| !(b.max[k] > b.min[k])) {
                return Err(Error::config(
                    format!("scene.blocks[{i}]"),
                    "max must exceed min on every axis",
                ));
            }
            if names.insert(b.name.clone(), i).is_some() {
                return Err(Error::config(format!("scene.blocks[{i}].name"), format!("duplicate name {}", b.name)));
            }
            scatterers.push(Scatterer::block(b.name.clone(), v3(b.min), v3(b.max), b.reflective));
        }
        let scene = Scene {
            scatterers,
            obstacles: Vec::new(),
        };
        scene.validate()?;
        Ok(scene)
    }
}

fn trajectory(t: &TerminalConfig, field: &str) -> Result<Trajectory> {
    let waypoints = t
        .waypoints
        .iter()
        .map(|w| Waypoint {
            t: w.t,
            position: v3(w.position),
        })
        .collect();
    let attitude = t
        .attitude
        .iter()
        .map(|a| AttitudeSample {
            t: a.t,
            attitude: Attitude {
                yaw: a.yaw_deg.to_radians(),
                pitch: a.pitch_deg.to_radians(),
                roll: a.roll_deg.to_radians(),
            },
        })
        .collect();
    Trajectory::new(waypoints, attitude).map_err(|e| Error::config(format!("{field}.waypoints"), e.to_string()))
}

fn array(a: &ArrayConfig, lambda: f64, field: &str) -> Result<AntennaArray> {
    let arr = match &a.elements {
        Some(els) => AntennaArray {
            elements: els.iter().copied().map(v3).collect(),
        },
        None => AntennaArray::linear(a.count, a.spacing_wavelengths * lambda, v3(a.axis))
            .map_err(|e| Error::config(field, e.to_string()))?,
    };
    arr.validate().map_err(|e| Error::config(field, e.to_string()))?;
    Ok(arr)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
carrier_hz = 28.0e9

[time]
start = 0.0
stop = 1.0
step = 0.1

[tx]
waypoints = [{ t = 0.0, position = [0.0, 0.0, 100.0] }, { t = 1.0, position = [30.0, 0.0, 100.0] }]
attitude = [{ t = 0.0 }, { t = 1.0, pitch_deg = 90.0 }]
array = { count = 3 }

[rx]
waypoints = [{ t = 0.0, position = [200.0, 0.0, 2.0] }]

[scene]
ground = { z = 0.0, half_size = 1000.0 }
blocks = [{ name = "a", min = [50.0, 10.0, 0.0], max = [80.0, 30.0, 20.0] }]
"#;

    #[test]
    fn minimal_config_builds() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let s = cfg.to_scenario().unwrap();
        assert_eq!(s.rays_per_path, 20);
        assert_eq!(s.tx_array.elements.len(), 3);
        let lambda = wavelength(28e9);
        assert!((s.tx_array.elements[1].y - lambda / 2.0).abs() < 1e-15);
        assert_eq!(s.scene.scatterers.len(), 2);
        assert!((s.tx.attitude_at(1.0).pitch - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(s.rx.is_stationary());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("step = 0.1", "step = -0.1");
        let e = ScenarioConfig::from_toml_str(&bad).unwrap().to_scenario().unwrap_err();
        assert!(e.to_string().contains("time.step"), "{e}");

        let bad = MINIMAL.replace("carrier_hz = 28.0e9", "carrier_hz = 28.0e9\nbogus = 1");
        let e = ScenarioConfig::from_toml_str(&bad).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");

        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());

        let bad = MINIMAL.replace("stop = 1.0", "stop = 2.0");
        let e = ScenarioConfig::from_toml_str(&bad).unwrap().to_scenario().unwrap_err();
        assert!(e.to_string().contains("time"), "{e}");

        let bad = MINIMAL.replace("max = [80.0, 30.0, 20.0]", "max = [40.0, 30.0, 20.0]");
        assert!(ScenarioConfig::from_toml_str(&bad).unwrap().to_scenario().is_err());
    }

    #[test]
    fn bundled_scenarios_parse() {
        for (name, _) in bundled_scenarios() {
            let s = ScenarioConfig::bundled(name).unwrap().to_scenario().unwrap();
            assert!(s.time.times().len() > 1, "{name}");
        }
    }
}
