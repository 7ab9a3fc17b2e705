#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rfsplat::formats::{write_scene, AntennaRole, NamedAntenna, SceneDocument};
use rfsplat::{Aabb, Antenna, FrequencyGrid, Scene, Vec3};
use rfsplat_oracle::{generate_scene, metal, SyntheticSceneSpec};

/// A 10 x 10 plate with one transmitter and one receiver preset in front
/// of it.
pub fn plate_doc() -> SceneDocument {
    let plate = generate_scene(&SyntheticSceneSpec::plate(10, metal())).unwrap();
    let room = Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
    let scene = Scene::with_bounds(plate.gaussians().to_vec(), room);
    let mut doc = SceneDocument::new("plate", FrequencyGrid::linspace(2e9, 3e9, 3).unwrap(), scene);
    doc.antennas.push(NamedAntenna {
        name: "ap".into(),
        role: AntennaRole::Tx,
        antenna: Antenna::omni(Vec3::new(0.3, 0.1, 0.2)),
    });
    doc.antennas.push(NamedAntenna {
        name: "probe".into(),
        role: AntennaRole::Rx,
        antenna: Antenna::omni(Vec3::new(0.4, -0.2, 0.0)),
    });
    doc
}

pub fn write_plate(dir: &Path) -> PathBuf {
    let path = dir.join("plate.json");
    write_scene(&path, &plate_doc()).unwrap();
    path
}
