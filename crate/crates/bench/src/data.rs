//! Example inputs shipped in the repository's `data/` directory.

use serde::Deserialize;
use surfoffset_core::curve::{ShapeInput, SourceCurve};
use surfoffset_core::pipeline::OffsetConfig;
use surfoffset_core::{Error, Result, SurfaceSpec};

macro_rules! table {
    ($dir:literal: $($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../data/", $dir, "/", $name, ".json")))),*]
    };
}

const SURFACES: &[(&str, &str)] = table!("surfaces":
    "sphere", "cylinder", "torus", "gaussian_bump", "plane", "bivariate_sine", "spiral_paraboloid", "circular_wave",
);

const CURVES: &[(&str, &str)] = table!("curves":
    "equator", "cross_section", "torus_circle", "bump_circle", "segment", "sine_circle", "spiral_ring",
    "wave_circle", "holed_disk",
);

const EXAMPLES: &str = include_str!("../../../data/examples.json");
const STRESS: &str = include_str!("../../../data/configs/stress.json");

/// One shipped offset run.
#[derive(Debug, Clone, Deserialize)]
pub struct Example {
    pub name: String,
    pub surface: String,
    pub curve: String,
    pub distance: f64,
    pub grid: (usize, usize),
    pub segments: usize,
}

impl Example {
    pub fn spec(&self) -> Result<SurfaceSpec> {
        surface(&self.surface)
    }

    pub fn curves(&self, spec: &SurfaceSpec) -> Result<Vec<SourceCurve>> {
        curves(&self.curve, spec)
    }

    pub fn config(&self) -> OffsetConfig {
        OffsetConfig { grid: self.grid, segments: self.segments, ..Default::default() }
    }
}

fn lookup<'a>(table: &[(&str, &'a str)], name: &str) -> Result<&'a str> {
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::Config(format!("no shipped input named `{name}`")))
}

pub fn surface(name: &str) -> Result<SurfaceSpec> {
    Ok(serde_json::from_str(lookup(SURFACES, name)?)?)
}

pub fn curves(name: &str, spec: &SurfaceSpec) -> Result<Vec<SourceCurve>> {
    ShapeInput::from_json(lookup(CURVES, name)?)?.build(spec)
}

pub fn examples() -> Result<Vec<Example>> {
    Ok(serde_json::from_str(EXAMPLES)?)
}

/// Field configuration whose initial paths detour through random waypoints.
pub fn stress() -> Result<(Example, OffsetConfig)> {
    let example = Example {
        name: "torus_stress".into(),
        surface: "torus".into(),
        curve: "torus_circle".into(),
        distance: 0.4,
        grid: (61, 31),
        segments: 80,
    };
    Ok((example, serde_json::from_str(STRESS)?))
}
