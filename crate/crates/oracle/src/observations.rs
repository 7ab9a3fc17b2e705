//! Synthetic observation sets rendered with the forward model.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rfsplat::bvh::build_bvh;
use rfsplat::render::{Illumination, LinkPlan, MapSpec, RadarPattern, RcsConfig, RenderOptions};
use rfsplat::{
    power_to_db, Antenna, Error, FrequencyGrid, Measurement, Observation, ObservationSet, Result, Scene, Split, Vec3,
};

/// Seed offset for the train/test split, independent of the noise stream.
const SPLIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Measurement protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Protocol {
    /// Co-located radar swept around the z axis; all records are training data.
    MonostaticSweep { config: RcsConfig, grid: FrequencyGrid },
    /// Omni receivers on a horizontal grid for each transmitter; a seeded
    /// `test_fraction` of cells per transmitter is held out.
    RadioMapGrid {
        tx_positions: Vec<Vec3>,
        spec: MapSpec,
        grid: FrequencyGrid,
        test_fraction: f64,
    },
    /// Monostatic sweeps at several radar ranges, split by range.
    DistanceSet {
        train_m: Vec<f64>,
        test_m: Vec<f64>,
        angles_deg: Vec<f64>,
        pattern: RadarPattern,
        grid: FrequencyGrid,
    },
    /// Explicit Tx/Rx pairs; all records are training data.
    Links {
        pairs: Vec<(Antenna, Antenna)>,
        grid: FrequencyGrid,
    },
}

impl Protocol {
    /// Train at 2, 2.5, 4, 4.5 and 5 m; test at 3 m.
    pub fn distance_set(angles_deg: Vec<f64>, grid: FrequencyGrid) -> Self {
        Protocol::DistanceSet {
            train_m: vec![2.0, 2.5, 4.0, 4.5, 5.0],
            test_m: vec![3.0],
            angles_deg,
            pattern: RadarPattern::Horn,
            grid,
        }
    }

    fn grid(&self) -> &FrequencyGrid {
        match self {
            Protocol::MonostaticSweep { grid, .. }
            | Protocol::RadioMapGrid { grid, .. }
            | Protocol::DistanceSet { grid, .. }
            | Protocol::Links { grid, .. } => grid,
        }
    }

    /// `(tx, rx, split)` per link, in record order.
    fn links(&self, seed: u64) -> Result<Vec<(Antenna, Antenna, Split)>> {
        let monostatic = |config: &RcsConfig, split: Split| -> Vec<(Antenna, Antenna, Split)> {
            config
                .angles_deg
                .iter()
                .map(|&a| {
                    let radar = config.radar(a);
                    (radar.clone(), radar, split)
                })
                .collect()
        };
        Ok(match self {
            Protocol::MonostaticSweep { config, .. } => monostatic(config, Split::Train),
            Protocol::RadioMapGrid {
                tx_positions,
                spec,
                test_fraction,
                ..
            } => {
                spec.validate()?;
                if !(0.0..=1.0).contains(test_fraction) {
                    return Err(Error::Validation(format!(
                        "test fraction {test_fraction} outside [0, 1]"
                    )));
                }
                let cells = spec.positions();
                let n_test = (test_fraction * cells.len() as f64).round() as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_STREAM);
                let mut out = Vec::with_capacity(tx_positions.len() * cells.len());
                for tx in tx_positions {
                    let mut order: Vec<usize> = (0..cells.len()).collect();
                    order.shuffle(&mut rng);
                    let mut split = vec![Split::Train; cells.len()];
                    for &k in &order[..n_test] {
                        split[k] = Split::Test;
                    }
                    for (k, p) in cells.iter().enumerate() {
                        out.push((Antenna::omni(*tx), Antenna::omni(*p), split[k]));
                    }
                }
                out
            }
            Protocol::DistanceSet {
                train_m,
                test_m,
                angles_deg,
                pattern,
                ..
            } => {
                let sweep = |range: f64, split| {
                    let mut config = RcsConfig::new(range, angles_deg.clone());
                    config.pattern = *pattern;
                    monostatic(&config, split)
                };
                train_m
                    .iter()
                    .flat_map(|&r| sweep(r, Split::Train))
                    .chain(test_m.iter().flat_map(|&r| sweep(r, Split::Test)))
                    .collect()
            }
            Protocol::Links { pairs, .. } => pairs
                .iter()
                .map(|(t, r)| (t.clone(), r.clone(), Split::Train))
                .collect(),
        })
    }
}

/// Renders every link of `protocol` with the forward model and records its
/// power in dB, adding zero-mean Gaussian noise of `noise_db` standard
/// deviation. Deterministic in `seed`.
pub fn generate_observations(
    scene: &Scene,
    protocol: &Protocol,
    options: &RenderOptions,
    seed: u64,
    noise_db: f64,
    scene_id: &str,
) -> Result<ObservationSet> {
    if !(noise_db >= 0.0) || !noise_db.is_finite() {
        return Err(Error::Validation(format!(
            "noise level {noise_db} dB must be finite and >= 0"
        )));
    }
    let grid = protocol.grid().clone();
    let links = protocol.links(seed)?;
    let bvh = build_bvh(scene);
    let attrs = scene.attributes();
    let mut illuminations: Vec<(Antenna, Arc<Illumination>)> = Vec::new();
    for (tx, _, _) in &links {
        if !illuminations.iter().any(|(a, _)| a == tx) {
            tx.validate()?;
            let illum = Illumination::build(scene, &bvh, tx, options.propagation)?;
            illuminations.push((tx.clone(), Arc::new(illum)));
        }
    }
    let powers = links
        .par_iter()
        .map(|(tx, rx, _)| -> Result<Vec<f64>> {
            rx.validate()?;
            let illum = illuminations
                .iter()
                .find(|(a, _)| a == tx)
                .map(|(_, i)| i.clone())
                .expect("every transmitter has an illumination");
            let plan = LinkPlan::build(scene, &bvh, illum, rx, options)?;
            Ok(grid
                .samples()
                .iter()
                .map(|&f| power_to_db(plan.evaluate(&attrs, f).norm_sqr()))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_db).map_err(|e| Error::Validation(e.to_string()))?;
    let mut set = ObservationSet::new(grid, scene_id);
    for ((tx, rx, split), db) in links.into_iter().zip(powers) {
        for (k, value) in db.into_iter().enumerate() {
            let value = if noise_db > 0.0 {
                value + noise.sample(&mut rng)
            } else {
                value
            };
            set.records.push(Observation {
                tx: tx.clone(),
                rx: rx.clone(),
                frequency_index: k,
                measurement: Measurement::RssiDb(value),
                split,
            });
        }
    }
    Ok(set)
}
