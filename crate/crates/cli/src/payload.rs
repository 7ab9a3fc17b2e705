//! JSON payloads shared by the CLI and the HTTP API, and parsers for the
//! textual arguments both accept.

use rfsplat::bvh::Bvh;
use rfsplat::formats::SceneDocument;
use rfsplat::render::{render_radio_map, render_rcs_sweep, MapSpec, RadarPattern, RcsConfig, RcsPoint, RenderOptions};
use rfsplat::{Antenna, Error, FrequencyGrid, Result, Vec3};
use serde::{Deserialize, Serialize};

/// Largest map a single request may compute, per side.
pub const MAX_MAP_SIDE: usize = 256;

/// Default coverage threshold (dB).
pub const DEFAULT_THRESHOLD_DB: f64 = -90.0;

/// `HxW`, e.g. `64x64`.
pub fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Validation(format!("grid {text:?} is not HxW"));
    let (h, w) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    if h > MAX_MAP_SIDE || w > MAX_MAP_SIDE {
        return Err(Error::Validation(format!(
            "grid {h}x{w} exceeds the {MAX_MAP_SIDE}x{MAX_MAP_SIDE} per-request limit"
        )));
    }
    Ok((h, w))
}

/// `x,y,z` in meters.
pub fn parse_position(text: &str) -> Result<Vec3> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Validation(format!("position {text:?} is not x,y,z")))?;
    match parts.as_slice() {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(Error::Validation(format!(
            "position {text:?} needs three finite components"
        ))),
    }
}

/// `start:stop:count` in Hz.
pub fn parse_band(text: &str) -> Result<FrequencyGrid> {
    let bad = || Error::Validation(format!("band {text:?} is not start:stop:count"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let stop: f64 = stop.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    FrequencyGrid::linspace(start, stop, count)
}

/// A named preset of the document, or an omni antenna at `x,y,z`.
pub fn resolve_antenna(doc: &SceneDocument, spec: &str) -> Result<Antenna> {
    if let Some(a) = doc.antenna(spec) {
        return Ok(a.antenna.clone());
    }
    if spec.contains(',') {
        return Ok(Antenna::omni(parse_position(spec)?));
    }
    Err(Error::Validation(format!(
        "no antenna named {spec:?} in scene '{}'",
        doc.id
    )))
}

/// Sweep angles `0, step, …, 360 − step`.
pub fn sweep_angles(step_deg: f64) -> Result<Vec<f64>> {
    let n = (360.0 / step_deg).round();
    if !(step_deg > 0.0) || !step_deg.is_finite() || (n * step_deg - 360.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("step {step_deg} deg does not divide 360")));
    }
    Ok((0..n as usize).map(|k| k as f64 * step_deg).collect())
}

/// Options for rendering a scene document: FoV grid and its LoS settings.
pub fn render_options(doc: &SceneDocument, exact: bool) -> RenderOptions {
    let base = if exact {
        RenderOptions::exact()
    } else {
        RenderOptions::default()
    };
    base.with_los(doc.los)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapStats {
    pub min_db: f64,
    pub max_db: f64,
    pub mean_db: f64,
    pub threshold_db: f64,
    pub coverage_percent: f64,
}

/// Radio map response. `cells_db` is row-major; rows run along y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapResponse {
    pub height: usize,
    pub width: usize,
    pub frequency_hz: f64,
    pub tx: [f64; 3],
    pub bounds: MapBounds,
    pub stats: MapStats,
    pub cells_db: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapRequest {
    pub tx: Antenna,
    pub height: usize,
    pub width: usize,
    pub frequency: f64,
    /// Receiver height; defaults to the centre of the scene bounds.
    pub z: Option<f64>,
    pub threshold_db: f64,
    pub exact: bool,
}

/// Renders a radio map over the scene footprint. The transmitter must lie
/// inside the scene bounds.
pub fn map_response(
    doc: &SceneDocument,
    bvh: &Bvh,
    req: &MapRequest,
) -> Result<(MapResponse, rfsplat::render::RadioMap)> {
    if req.height > MAX_MAP_SIDE || req.width > MAX_MAP_SIDE {
        return Err(Error::Validation(format!(
            "grid {}x{} exceeds the {MAX_MAP_SIDE}x{MAX_MAP_SIDE} per-request limit",
            req.height, req.width
        )));
    }
    if !(req.frequency > 0.0) || !req.frequency.is_finite() {
        return Err(Error::Validation(format!("invalid frequency {}", req.frequency)));
    }
    let bounds = doc.scene.bounds();
    if !bounds.contains(&req.tx.position) {
        return Err(Error::Validation(format!(
            "transmitter at {:?} lies outside the scene bounds",
            req.tx.position.as_slice()
        )));
    }
    let z = req.z.unwrap_or(bounds.center().z);
    let spec = MapSpec::over_bounds(&doc.scene, req.height, req.width, z);
    let map = render_radio_map(
        &doc.scene,
        bvh,
        &req.tx,
        &spec,
        req.frequency,
        &render_options(doc, req.exact),
    )?;
    let response = MapResponse {
        height: spec.height,
        width: spec.width,
        frequency_hz: req.frequency,
        tx: [req.tx.position.x, req.tx.position.y, req.tx.position.z],
        bounds: MapBounds {
            x_min: spec.x_min,
            x_max: spec.x_max,
            y_min: spec.y_min,
            y_max: spec.y_max,
            z,
        },
        stats: MapStats {
            min_db: map.min_db(),
            max_db: map.max_db(),
            mean_db: map.mean_db(),
            threshold_db: req.threshold_db,
            coverage_percent: map.coverage_percent(req.threshold_db),
        },
        cells_db: map.cells_db.clone(),
    };
    Ok((response, map))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcsResponse {
    pub range_m: f64,
    pub points: Vec<RcsPoint>,
}

pub fn rcs_response(
    doc: &SceneDocument,
    bvh: &Bvh,
    range: f64,
    angles_deg: Vec<f64>,
    pattern: RadarPattern,
    grid: &FrequencyGrid,
    exact: bool,
) -> Result<RcsResponse> {
    let mut config = RcsConfig::new(range, angles_deg);
    config.pattern = pattern;
    let points = render_rcs_sweep(&doc.scene, bvh, &config, grid, &render_options(doc, exact))?;
    Ok(RcsResponse { range_m: range, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("64x32").unwrap(), (64, 32));
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("0x4").is_err());
        assert!(parse_grid("257x2").is_err());
    }

    #[test]
    fn position_needs_three_components() {
        assert_eq!(parse_position("1, 2,3.5").unwrap(), Vec3::new(1.0, 2.0, 3.5));
        assert!(parse_position("1,2").is_err());
        assert!(parse_position("1,2,nan").is_err());
    }

    #[test]
    fn band_and_angles() {
        assert_eq!(parse_band("1e9:2e9:10").unwrap().len(), 10);
        assert!(parse_band("1e9:2e9").is_err());
        assert_eq!(sweep_angles(1.0).unwrap().len(), 360);
        assert!(sweep_angles(7.0).is_err());
    }
}
