//! File formats: the JSON scene document, the JSON observation dataset, the
//! flat binary grid with a JSON header, and CSV writers for sweeps and maps.
//!
//! Doubles are written in shortest round-trip decimal form and parsed
//! exactly, so finite values survive a write/read cycle bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{LosConfig, RadioMap, RcsPoint};
use crate::scene::{
    canonical_phase, validate_scene, Aabb, Antenna, AntennaPattern, FrequencyGrid, Measurement, Observation,
    ObservationSet, Quat, RfAttributes, RfGaussian, Scene, Split, Vec3, UNITS_DB,
};

/// Current version of both JSON documents.
pub const FORMAT_VERSION: u32 = 1;

/// Role of a named antenna preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaRole {
    Tx,
    Rx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedAntenna {
    pub name: String,
    pub role: AntennaRole,
    pub antenna: Antenna,
}

/// A scene with its header, antenna presets and LoS parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneDocument {
    pub id: String,
    pub grid: FrequencyGrid,
    pub scene: Scene,
    pub antennas: Vec<NamedAntenna>,
    pub los: Option<LosConfig>,
}

impl SceneDocument {
    pub fn new(id: impl Into<String>, grid: FrequencyGrid, scene: Scene) -> Self {
        Self {
            id: id.into(),
            grid,
            scene,
            antennas: Vec::new(),
            los: None,
        }
    }

    pub fn antenna(&self, name: &str) -> Option<&NamedAntenna> {
        self.antennas.iter().find(|a| a.name == name)
    }

    /// First transmitter preset, if any.
    pub fn first_tx(&self) -> Option<&NamedAntenna> {
        self.antennas.iter().find(|a| a.role == AntennaRole::Tx)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    id: String,
    units: String,
    frequency_grid: Vec<f64>,
    geometry_frozen: bool,
    bounds: BoundsFile,
    gaussians: Vec<GaussianFile>,
    #[serde(default)]
    antennas: Vec<AntennaRecord>,
    #[serde(default)]
    los: Option<LosConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianFile {
    mean: [f64; 3],
    scale: [f64; 3],
    /// `[w, x, y, z]`.
    rotation: [f64; 4],
    normal: [f64; 3],
    alpha: f64,
    roughness: f64,
    gamma_mag: f64,
    gamma_phase: f64,
}

/// Serialized form of a named antenna preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaRecord {
    pub name: String,
    pub role: AntennaRole,
    pub position: [f64; 3],
    pub power_watts: f64,
    pub gain: f64,
    pub pattern: PatternRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternRecord {
    Omni,
    Horn { boresight: [f64; 3], exponent: f64 },
}

fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn pattern_to_file(p: &AntennaPattern) -> PatternRecord {
    match p {
        AntennaPattern::Omni => PatternRecord::Omni,
        AntennaPattern::DirectionalHorn { boresight, exponent } => PatternRecord::Horn {
            boresight: arr3(boresight),
            exponent: *exponent,
        },
    }
}

fn pattern_from_file(p: PatternRecord) -> AntennaPattern {
    match p {
        PatternRecord::Omni => AntennaPattern::Omni,
        PatternRecord::Horn { boresight, exponent } => AntennaPattern::DirectionalHorn {
            boresight: vec3(boresight),
            exponent,
        },
    }
}

impl AntennaRecord {
    pub fn from_named(a: &NamedAntenna) -> Self {
        antenna_to_file(&a.name, a.role, &a.antenna)
    }

    /// Validates the antenna and converts it to a preset.
    pub fn into_named(self) -> Result<NamedAntenna> {
        antenna_from_file(self)
    }
}

fn antenna_to_file(name: &str, role: AntennaRole, a: &Antenna) -> AntennaRecord {
    AntennaRecord {
        name: name.to_string(),
        role,
        position: arr3(&a.position),
        power_watts: a.power_watts,
        gain: a.gain,
        pattern: pattern_to_file(&a.pattern),
    }
}

fn antenna_from_file(a: AntennaRecord) -> Result<NamedAntenna> {
    let antenna = Antenna {
        position: vec3(a.position),
        power_watts: a.power_watts,
        gain: a.gain,
        pattern: pattern_from_file(a.pattern),
    };
    antenna
        .validate()
        .map_err(|e| Error::Format(format!("antenna '{}': {e}", a.name)))?;
    Ok(NamedAntenna {
        name: a.name,
        role: a.role,
        antenna,
    })
}

fn check_header(version: u32, units: &str) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} (expected {FORMAT_VERSION})"
        )));
    }
    if units != UNITS_DB {
        return Err(Error::UnitMismatch {
            expected: UNITS_DB.into(),
            found: units.into(),
        });
    }
    Ok(())
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Format(format!("duplicate antenna name '{n}'")));
        }
    }
    Ok(())
}

/// Serializes a scene document as pretty-printed JSON.
pub fn scene_to_string(doc: &SceneDocument) -> Result<String> {
    let scene = &doc.scene;
    let file = SceneFile {
        version: FORMAT_VERSION,
        id: doc.id.clone(),
        units: UNITS_DB.into(),
        frequency_grid: doc.grid.samples().to_vec(),
        geometry_frozen: scene.geometry_frozen(),
        bounds: BoundsFile {
            min: arr3(&scene.bounds().min),
            max: arr3(&scene.bounds().max),
        },
        gaussians: scene
            .gaussians()
            .iter()
            .map(|g| GaussianFile {
                mean: arr3(&g.mean),
                scale: arr3(&g.scale),
                rotation: [g.rotation.w, g.rotation.i, g.rotation.j, g.rotation.k],
                normal: arr3(&g.normal),
                alpha: g.attributes.alpha,
                roughness: g.attributes.roughness,
                gamma_mag: g.attributes.gamma_mag,
                gamma_phase: g.attributes.gamma_phase,
            })
            .collect(),
        antennas: doc
            .antennas
            .iter()
            .map(|a| antenna_to_file(&a.name, a.role, &a.antenna))
            .collect(),
        los: doc.los,
    };
    let mut out = serde_json::to_string_pretty(&file)?;
    out.push('\n');
    Ok(out)
}

/// Parses and validates a scene document. Reflection phases are wrapped into
/// `(−π, π]`; unknown fields are rejected by name.
pub fn parse_scene(text: &str) -> Result<SceneDocument> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("scene file: {e}")))?;
    check_header(file.version, &file.units)?;
    let grid = FrequencyGrid::new(file.frequency_grid)?;
    let gaussians = file
        .gaussians
        .into_iter()
        .map(|g| RfGaussian {
            mean: vec3(g.mean),
            scale: vec3(g.scale),
            rotation: Quat::new(g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]),
            normal: vec3(g.normal),
            attributes: RfAttributes {
                alpha: g.alpha,
                roughness: g.roughness,
                gamma_mag: g.gamma_mag,
                gamma_phase: canonical_phase(g.gamma_phase),
            },
        })
        .collect();
    let bounds = Aabb::new(vec3(file.bounds.min), vec3(file.bounds.max));
    let scene = Scene::with_bounds(gaussians, bounds).with_geometry_frozen(file.geometry_frozen);
    let issues = validate_scene(&scene);
    if let Some(first) = issues.first() {
        return Err(Error::Validation(format!(
            "{} issue(s) in scene '{}'; first: {first}",
            issues.len(),
            file.id
        )));
    }
    unique_names(file.antennas.iter().map(|a| a.name.as_str()))?;
    let antennas = file
        .antennas
        .into_iter()
        .map(antenna_from_file)
        .collect::<Result<Vec<_>>>()?;
    if let Some(los) = &file.los {
        los.validate()?;
    }
    Ok(SceneDocument {
        id: file.id,
        grid,
        scene,
        antennas,
        los: file.los,
    })
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<SceneDocument> {
    parse_scene(&std::fs::read_to_string(path)?)
}

pub fn write_scene(path: impl AsRef<Path>, doc: &SceneDocument) -> Result<()> {
    std::fs::write(path, scene_to_string(doc)?)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    version: u32,
    scene_id: String,
    units: String,
    frequency_grid: Vec<f64>,
    #[serde(default)]
    antennas: Vec<AntennaRecord>,
    records: Vec<RecordFile>,
}

/// Receiver of a record: an omni antenna at a position, or a named preset.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RxFile {
    Position([f64; 3]),
    Named(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    tx: String,
    rx: RxFile,
    frequency_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rssi_db: Option<f64>,
    /// `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    complex: Option<[f64; 2]>,
    split: Split,
}

/// Serializes observations. Transmitters become named presets `tx0, tx1, …`;
/// unit omni receivers are written by position, others as presets `rx0, …`.
pub fn dataset_to_string(set: &ObservationSet) -> Result<String> {
    let mut txs: Vec<&Antenna> = Vec::new();
    let mut rxs: Vec<&Antenna> = Vec::new();
    let mut records = Vec::with_capacity(set.records.len());
    let plain = |a: &Antenna| a.pattern == AntennaPattern::Omni && a.power_watts == 1.0 && a.gain == 1.0;
    for r in &set.records {
        let t = match txs.iter().position(|a| **a == r.tx) {
            Some(i) => i,
            None => {
                txs.push(&r.tx);
                txs.len() - 1
            }
        };
        let rx = if plain(&r.rx) {
            RxFile::Position(arr3(&r.rx.position))
        } else {
            let k = match rxs.iter().position(|a| **a == r.rx) {
                Some(i) => i,
                None => {
                    rxs.push(&r.rx);
                    rxs.len() - 1
                }
            };
            RxFile::Named(format!("rx{k}"))
        };
        let (rssi_db, complex) = match r.measurement {
            Measurement::RssiDb(db) => (Some(db), None),
            Measurement::Complex(c) => (None, Some([c.re, c.im])),
        };
        records.push(RecordFile {
            tx: format!("tx{t}"),
            rx,
            frequency_index: r.frequency_index,
            rssi_db,
            complex,
            split: r.split,
        });
    }
    let antennas = txs
        .iter()
        .enumerate()
        .map(|(i, a)| antenna_to_file(&format!("tx{i}"), AntennaRole::Tx, a))
        .chain(
            rxs.iter()
                .enumerate()
                .map(|(i, a)| antenna_to_file(&format!("rx{i}"), AntennaRole::Rx, a)),
        )
        .collect();
    let file = DatasetFile {
        version: FORMAT_VERSION,
        scene_id: set.scene_id.clone(),
        units: set.units.clone(),
        frequency_grid: set.grid.samples().to_vec(),
        antennas,
        records,
    };
    let mut out = serde_json::to_string_pretty(&file)?;
    out.push('\n');
    Ok(out)
}

pub fn parse_dataset(text: &str) -> Result<ObservationSet> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("dataset file: {e}")))?;
    check_header(file.version, &file.units)?;
    unique_names(file.antennas.iter().map(|a| a.name.as_str()))?;
    let antennas = file
        .antennas
        .into_iter()
        .map(antenna_from_file)
        .collect::<Result<Vec<_>>>()?;
    let lookup = |name: &str, role: AntennaRole, k: usize| -> Result<Antenna> {
        antennas
            .iter()
            .find(|a| a.name == name && a.role == role)
            .map(|a| a.antenna.clone())
            .ok_or_else(|| Error::Format(format!("record {k}: unknown {role:?} antenna '{name}'")))
    };
    let mut set = ObservationSet::new(FrequencyGrid::new(file.frequency_grid)?, file.scene_id);
    for (k, r) in file.records.into_iter().enumerate() {
        let measurement = match (r.rssi_db, r.complex) {
            (Some(db), None) => Measurement::RssiDb(db),
            (None, Some([re, im])) => Measurement::Complex(Complex64::new(re, im)),
            _ => {
                return Err(Error::Format(format!(
                    "record {k}: exactly one of rssi_db or complex is required"
                )))
            }
        };
        let rx = match r.rx {
            RxFile::Position(p) => Antenna::omni(vec3(p)),
            RxFile::Named(name) => lookup(&name, AntennaRole::Rx, k)?,
        };
        set.records.push(Observation {
            tx: lookup(&r.tx, AntennaRole::Tx, k)?,
            rx,
            frequency_index: r.frequency_index,
            measurement,
            split: r.split,
        });
    }
    set.validate()?;
    Ok(set)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<ObservationSet> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn write_dataset(path: impl AsRef<Path>, set: &ObservationSet) -> Result<()> {
    std::fs::write(path, dataset_to_string(set)?)?;
    Ok(())
}

/// A row-major multi-channel grid of doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
    pub channels: Vec<(String, Vec<f64>)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridHeader {
    height: usize,
    width: usize,
    channels: Vec<String>,
}

impl Grid {
    pub fn new(height: usize, width: usize, channels: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if let Some((name, _)) = channels.iter().find(|(_, v)| v.len() != height * width) {
            return Err(Error::Format(format!(
                "channel '{name}' does not have {height}x{width} cells"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
        })
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Layout: header length as a little-endian u64, the JSON header
    /// `{height, width, channels}`, then each channel's cells in row-major
    /// order as little-endian f64.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = serde_json::to_vec(&GridHeader {
            height: self.height,
            width: self.width,
            channels: self.channels.iter().map(|(n, _)| n.clone()).collect(),
        })?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for (_, values) in &self.channels {
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len);
        if len > 1 << 24 {
            return Err(Error::Format(format!("grid header of {len} bytes is implausible")));
        }
        let mut header = vec![0u8; len as usize];
        r.read_exact(&mut header)?;
        let header: GridHeader = serde_json::from_slice(&header)?;
        let cells = header.height * header.width;
        let mut channels = Vec::with_capacity(header.channels.len());
        let mut buf = [0u8; 8];
        for name in header.channels {
            let mut values = Vec::with_capacity(cells);
            for _ in 0..cells {
                r.read_exact(&mut buf)?;
                values.push(f64::from_le_bytes(buf));
            }
            channels.push((name, values));
        }
        Self::new(header.height, header.width, channels)
    }
}

/// `angle_deg,frequency_hz,rssi_db` with one row per sweep point.
pub fn rcs_csv(points: &[RcsPoint]) -> String {
    let mut out = String::from("angle_deg,frequency_hz,rssi_db\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.angle_deg, p.frequency_hz, p.rssi_db));
    }
    out
}

/// `row,col,x_m,y_m,rssi_db` with one row per map cell.
pub fn radio_map_csv(map: &RadioMap) -> String {
    let mut out = String::from("row,col,x_m,y_m,rssi_db\n");
    for r in 0..map.spec.height {
        for c in 0..map.spec.width {
            let p = map.spec.position(r, c);
            let v = map.cells_db[r * map.spec.width + c];
            out.push_str(&format!("{r},{c},{},{},{v}\n", p.x, p.y));
        }
    }
    out
}

/// Single-channel `rssi_db` grid of a radio map.
pub fn radio_map_grid(map: &RadioMap) -> Grid {
    Grid {
        height: map.spec.height,
        width: map.spec.width,
        channels: vec![("rssi_db".into(), map.cells_db.clone())],
    }
}
