//! End-to-end offset runs: mesh, sites, distance field, Voronoi labelling and extraction.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curve::{discretize, SiteSet, SourceCurve};
use crate::error::{config, Result};
use crate::geodesic::{build_distance_field, AnchoredSites, DistanceField, FieldOptions};
use crate::mesh::IntrinsicMesh;
use crate::offset::{extract_offset, OffsetResult};
use crate::surface::SurfaceSpec;
use crate::voronoi::{compute_voronoi, LabeledMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetConfig {
    /// Vertex samples along u and v.
    pub grid: (usize, usize),
    /// Total number of curve segments, shared between curves by length.
    pub segments: usize,
    /// Field cutoff; defaults to `1.5 d + 2 spacing` for the largest distance.
    pub cutoff: Option<f64>,
    pub field: FieldOptions,
}

impl Default for OffsetConfig {
    fn default() -> Self {
        Self { grid: (129, 65), segments: 1000, cutoff: None, field: FieldOptions::default() }
    }
}

impl OffsetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.0 < 8 || self.grid.1 < 8 {
            return config(format!("grid must be at least 8x8, got {}x{}", self.grid.0, self.grid.1));
        }
        if self.segments < 3 {
            return config(format!("at least 3 segments are required, got {}", self.segments));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c.is_finite()) {
                return config(format!("cutoff must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub mesh: f64,
    pub field: f64,
    pub voronoi: f64,
    pub extract: f64,
    pub total: f64,
}

/// Everything up to the Voronoi labelling, reusable for several distances.
#[derive(Debug)]
pub struct Prepared {
    pub mesh: IntrinsicMesh,
    pub sites: AnchoredSites,
    pub field: DistanceField,
    pub labeled: LabeledMesh,
    pub timings: PhaseTimings,
}

#[derive(Debug)]
pub struct OffsetRun {
    pub prepared: Prepared,
    pub result: OffsetResult,
    pub timings: PhaseTimings,
}

/// Splits `total` segments between curves in proportion to their lengths, at least 3 each.
pub fn split_segments(curves: &[SourceCurve], total: usize, spec: &SurfaceSpec) -> Vec<usize> {
    let lengths: Vec<f64> = curves.iter().map(|c| c.length(spec)).collect();
    let sum: f64 = lengths.iter().sum();
    lengths
        .iter()
        .zip(curves)
        .map(|(l, c)| ((total as f64 * l / sum).round() as usize).max(3).min(c.segment_count()))
        .collect()
}

/// Mesh, sites and distance field before labelling.
#[derive(Debug)]
pub struct FieldStage {
    pub mesh: IntrinsicMesh,
    pub sites: AnchoredSites,
    pub field: DistanceField,
    pub timings: PhaseTimings,
}

/// Meshes the domain, inserts the curve sites and computes the distance field up to the cutoff.
///
/// Without an explicit cutoff the field reaches `1.5 max_distance + 2 spacing`.
pub fn build_field(spec: &SurfaceSpec, curves: &[SourceCurve], max_distance: f64, cfg: &OffsetConfig) -> Result<FieldStage> {
    cfg.validate()?;
    if curves.is_empty() {
        return config("at least one source curve is required");
    }
    if !(max_distance > 0.0 && max_distance.is_finite()) {
        return config(format!("offset distance must be positive, got {max_distance}"));
    }
    let start = Instant::now();
    let mut mesh = IntrinsicMesh::build_uniform(spec, cfg.grid.0, cfg.grid.1)?;
    let counts = split_segments(curves, cfg.segments, spec);
    let sets: Vec<SiteSet> = curves.iter().zip(&counts).map(|(c, &n)| discretize(c, n, spec)).collect::<Result<_>>()?;
    let sites = AnchoredSites::insert(&mut mesh, sets)?;
    let cutoff = cfg.cutoff.unwrap_or(1.5 * max_distance + 2.0 * sites.spacing());
    if cutoff <= max_distance {
        return config(format!("offset distance {max_distance} must be below the field cutoff {cutoff}"));
    }
    let t_mesh = Instant::now();
    let field = build_distance_field(&mesh, &sites, cutoff, &cfg.field)?;
    let t_field = Instant::now();
    let timings = PhaseTimings {
        mesh: (t_mesh - start).as_secs_f64(),
        field: (t_field - t_mesh).as_secs_f64(),
        total: (t_field - start).as_secs_f64(),
        ..Default::default()
    };
    tracing::info!(faces = mesh.n_faces(), sites = sites.len(), cutoff, field_s = timings.field, "distance field ready");
    Ok(FieldStage { mesh, sites, field, timings })
}

/// Voronoi labelling of a computed field.
pub fn label(stage: FieldStage) -> Result<Prepared> {
    let FieldStage { mesh, sites, field, timings } = stage;
    let start = Instant::now();
    let labeled = compute_voronoi(&mesh, &field, &sites)?;
    let voronoi = start.elapsed().as_secs_f64();
    let timings = PhaseTimings { voronoi, total: timings.total + voronoi, ..timings };
    tracing::info!(cells = labeled.labels().len(), voronoi_s = voronoi, "labelled mesh ready");
    Ok(Prepared { mesh, sites, field, labeled, timings })
}

/// Meshes the domain, inserts the curve sites and labels the mesh up to the field cutoff.
pub fn prepare(spec: &SurfaceSpec, curves: &[SourceCurve], max_distance: f64, cfg: &OffsetConfig) -> Result<Prepared> {
    label(build_field(spec, curves, max_distance, cfg)?)
}

/// Offsets the curves by `d` from scratch.
pub fn run_offset(spec: &SurfaceSpec, curves: &[SourceCurve], d: f64, cfg: &OffsetConfig) -> Result<OffsetRun> {
    let prepared = prepare(spec, curves, d, cfg)?;
    let start = Instant::now();
    let result = extract_offset(&prepared.labeled, d)?;
    let extract = start.elapsed().as_secs_f64();
    let timings = PhaseTimings { extract, total: prepared.timings.total + extract, ..prepared.timings };
    tracing::info!(polylines = result.polylines.len(), extract_s = extract, total_s = timings.total, "offset extracted");
    Ok(OffsetRun { prepared, result, timings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Domain, ParamPoint};

    #[test]
    fn segments_follow_length() {
        let spec = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        let a = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.6, 400, &spec).unwrap();
        let b = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.2, 400, &spec).unwrap();
        assert_eq!(split_segments(&[a, b], 400, &spec), vec![300, 100]);
    }

    #[test]
    fn timings_add_up() {
        let spec = SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        let c = SourceCurve::circle_uv(ParamPoint::new(0.5, 0.5), 0.2, 200, &spec).unwrap();
        let cfg = OffsetConfig { grid: (21, 21), segments: 64, ..Default::default() };
        let run = run_offset(&spec, &[c], 0.1, &cfg).unwrap();
        let t = run.timings;
        assert!(t.mesh + t.field + t.voronoi + t.extract <= t.total + 1e-9);
        assert_eq!(run.result.polylines.len(), 2);
    }

    #[test]
    fn rejects_bad_configuration() {
        let spec = SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        let c = SourceCurve::circle_uv(ParamPoint::new(0.5, 0.5), 0.2, 200, &spec).unwrap();
        let small = OffsetConfig { grid: (4, 21), ..Default::default() };
        assert!(run_offset(&spec, &[c.clone()], 0.1, &small).unwrap_err().is_config());
        let cfg = OffsetConfig { grid: (21, 21), segments: 64, cutoff: Some(0.05), ..Default::default() };
        assert!(run_offset(&spec, &[c.clone()], 0.1, &cfg).unwrap_err().is_config());
        assert!(run_offset(&spec, &[c], -0.1, &OffsetConfig::default()).unwrap_err().is_config());
    }
}
