//! Property checks over the surface catalog: metric consistency, cell confinement, oracle
//! agreement, field consistency, flat-plane degeneracy and morphology.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use surfoffset_core::curve::SourceCurve;
use surfoffset_core::geodesic::{detect_field_inconsistency, GeodesicEngine};
use surfoffset_core::metrics::{hausdorff_cd, sample_offset};
use surfoffset_core::morphology::{closing, opening, Region, Side};
use surfoffset_core::offset::{brute_force_offset_with, exhaustive_distances};
use surfoffset_core::pipeline::{build_field, run_offset, OffsetConfig};
use surfoffset_core::voronoi::interpolated_distance;
use surfoffset_core::{Domain, EdgeId, IntrinsicMesh, ParamPoint, Result, SurfaceKind, SurfacePoint, SurfaceSpec, VertexId};

use crate::data;

/// Outcome of one property check with a human-readable summary of what was measured.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }

    fn all(parts: Vec<(String, bool)>) -> Self {
        let passed = parts.iter().all(|p| p.1);
        let detail = parts.into_iter().map(|p| p.0).collect::<Vec<_>>().join("; ");
        Self { passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)
    }
}

/// Every catalog surface with its default parameters.
pub fn catalog() -> Result<Vec<SurfaceSpec>> {
    [
        SurfaceKind::Plane,
        SurfaceKind::Sphere { radius: 1.0 },
        SurfaceKind::Cylinder { radius: 1.0 },
        SurfaceKind::Torus { major: 2.0, minor: 0.7 },
        SurfaceKind::GaussianBump { amplitude: 0.5, sigma: 0.3, center_u: 0.0, center_v: 0.0 },
        SurfaceKind::BivariateSine { amplitude: 0.5, freq_u: 1.0, freq_v: 1.0 },
        SurfaceKind::SpiralParaboloid { curvature: 0.5, twist: 1.0 },
        SurfaceKind::CircularWave { amplitude: 0.1, frequency: 8.0 },
    ]
    .into_iter()
    .map(SurfaceSpec::with_defaults)
    .collect()
}

fn catalog_grid(spec: &SurfaceSpec) -> (usize, usize) {
    match spec.kind() {
        SurfaceKind::Sphere { .. } => (49, 25),
        SurfaceKind::Cylinder { .. } | SurfaceKind::Torus { .. } => (49, 17),
        SurfaceKind::BivariateSine { .. } => (33, 33),
        SurfaceKind::SpiralParaboloid { .. } => (17, 65),
        SurfaceKind::CircularWave { .. } => (41, 41),
        _ => (25, 25),
    }
}

fn random_point(rng: &mut impl Rng, d: &Domain) -> ParamPoint {
    ParamPoint::new(rng.gen_range(d.u0..d.u1), rng.gen_range(d.v0..d.v1))
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub model: String,
    pub faces: usize,
    pub triples: usize,
    /// Largest `d(a,c) - d(a,b) - d(b,c)` over all orderings, relative to the model diameter.
    pub worst_excess: f64,
    pub violations: usize,
    pub inserted: usize,
    pub flips: usize,
    pub valid_after_build: bool,
    pub valid_after_insertion: bool,
    pub valid_after_flips: bool,
}

/// Triangle inequality of computed distances and strict face inequalities under editing.
pub fn metric_consistency(spec: &SurfaceSpec, triples: usize, flips: usize, seed: u64) -> Result<MetricReport> {
    let (nu, nv) = catalog_grid(spec);
    let mut mesh = IntrinsicMesh::build_uniform(spec, nu, nv)?;
    let valid_after_build = mesh.validate().is_ok();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = spec.usable_domain();
    let mut inserted = 0;
    for _ in 0..64 {
        if mesh.insert_site(random_point(&mut rng, &dom)).is_ok() {
            inserted += 1;
        }
    }
    let valid_after_insertion = mesh.validate().is_ok();

    let n = mesh.n_vertices() as u32;
    let picks: Vec<[VertexId; 3]> = (0..triples)
        .map(|_| {
            let mut t = [0u32; 3];
            for k in 0..3 {
                t[k] = rng.gen_range(0..n);
                while t[..k].contains(&t[k]) {
                    t[k] = rng.gen_range(0..n);
                }
            }
            t.map(VertexId)
        })
        .collect();
    let engine = GeodesicEngine::new(&mesh);
    let slack = 1e-6 * spec.diameter();
    let excess: Vec<f64> = picks
        .par_iter()
        .map_init(
            || engine.workspace(),
            |ws, &[a, b, c]| {
                let ab = engine.distance(ws, a, b)?.length;
                let bc = engine.distance(ws, b, c)?.length;
                let ac = engine.distance(ws, a, c)?.length;
                Ok((ac - ab - bc).max(ab - ac - bc).max(bc - ab - ac))
            },
        )
        .collect::<Result<_>>()?;
    let violations = excess.iter().filter(|&&e| e > slack).count();
    let worst_excess = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max) / spec.diameter();

    let mut flipped = mesh.clone();
    let mut done = 0;
    let edges = flipped.n_edges() as u32;
    for _ in 0..flips {
        if flipped.flip_edge(EdgeId(rng.gen_range(0..edges))).is_ok() {
            done += 1;
        }
    }
    let valid_after_flips = flipped.validate().is_ok();
    Ok(MetricReport {
        model: spec.kind().name().to_string(),
        faces: mesh.n_faces(),
        triples,
        worst_excess,
        violations,
        inserted,
        flips: done,
        valid_after_build,
        valid_after_insertion,
        valid_after_flips,
    })
}

/// Triangle inequality on every catalog surface with `triples` triples and `flips` random flips.
pub fn check_metric_consistency(triples: usize, flips: usize, seed: u64) -> Result<(Check, Vec<MetricReport>)> {
    let reports: Vec<MetricReport> =
        catalog()?.iter().map(|s| metric_consistency(s, triples, flips, seed)).collect::<Result<_>>()?;
    let parts = reports
        .iter()
        .map(|r| {
            let ok = r.violations == 0 && r.valid_after_build && r.valid_after_insertion && r.valid_after_flips;
            (
                format!(
                    "{} {} violations, excess {:.1e} diam, {} flips{}",
                    r.model,
                    r.violations,
                    r.worst_excess,
                    r.flips,
                    if r.valid_after_build && r.valid_after_insertion && r.valid_after_flips { "" } else { " INVALID FACES" }
                ),
                ok,
            )
        })
        .collect();
    Ok((Check::all(parts), reports))
}

/// A small offset problem for the label and oracle checks.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub spec: SurfaceSpec,
    pub curve: SourceCurve,
    pub config: OffsetConfig,
    pub d: f64,
}

pub fn small_instances() -> Result<Vec<SmallInstance>> {
    let plane = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0))?;
    let sphere = SurfaceSpec::new(SurfaceKind::Sphere { radius: 1.0 }, Domain::new(0.0, TAU, -1.2, 1.2), [true, false])?;
    let bump = SurfaceSpec::with_defaults(SurfaceKind::GaussianBump { amplitude: 0.5, sigma: 0.3, center_u: 0.0, center_v: 0.0 })?;
    let torus = SurfaceSpec::torus(2.0, 0.7)?;
    let cfg = |grid, segments| OffsetConfig { grid, segments, ..Default::default() };
    Ok(vec![
        SmallInstance {
            curve: SourceCurve::circle_uv(ParamPoint::new(0.1, -0.05), 0.45, 256, &plane)?,
            spec: plane,
            config: cfg((25, 25), 48),
            d: 0.15,
        },
        SmallInstance {
            curve: SourceCurve::circle_uv(ParamPoint::new(PI, 0.1), 0.6, 256, &sphere)?,
            spec: sphere,
            config: cfg((33, 17), 48),
            d: 0.2,
        },
        SmallInstance {
            curve: SourceCurve::circle_uv(ParamPoint::new(0.05, 0.0), 0.5, 256, &bump)?,
            spec: bump,
            config: cfg((25, 25), 48),
            d: 0.15,
        },
        SmallInstance {
            curve: SourceCurve::circle_uv(ParamPoint::new(PI, PI), 1.0, 256, &torus)?,
            spec: torus,
            config: cfg((33, 17), 64),
            d: 0.3,
        },
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelReport {
    pub model: String,
    pub faces: usize,
    pub sites: usize,
    pub vertices: usize,
    pub mismatches: usize,
    pub near_bisector: usize,
}

/// Compares every offset vertex's site against the argmin of all sites' exact distances.
///
/// A vertex whose own value exceeds the minimum by `gap` lies at least `gap / 2` from the
/// bisector, so a mismatch counts unless `gap / 2` is within `1e-3` of the site spacing.
pub fn label_confinement(inst: &SmallInstance) -> Result<LabelReport> {
    let run = run_offset(&inst.spec, std::slice::from_ref(&inst.curve), inst.d, &inst.config)?;
    let mesh = &run.prepared.mesh;
    let table = exhaustive_distances(mesh, &run.prepared.sites)?;
    let tol = 1e-3 * run.prepared.sites.spacing();
    let (mut vertices, mut mismatches, mut near) = (0, 0, 0);
    for p in run.result.polylines.iter().flat_map(|pl| &pl.points) {
        vertices += 1;
        let corners = mesh.face_vertices(p.face);
        let lengths = mesh.face_lengths(p.face);
        let value = |s: usize| interpolated_distance(corners.map(|c| table[c.idx()][s]), lengths, p.bary);
        let (best, best_value) = (0..run.prepared.sites.len())
            .map(|s| (s, value(s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("instances have sites");
        if best == p.site.idx() {
            continue;
        }
        if 0.5 * (value(p.site.idx()) - best_value) <= tol {
            near += 1;
        } else {
            mismatches += 1;
        }
    }
    Ok(LabelReport {
        model: inst.spec.kind().name().to_string(),
        faces: mesh.n_faces(),
        sites: run.prepared.sites.len(),
        vertices,
        mismatches,
        near_bisector: near,
    })
}

pub fn check_label_confinement() -> Result<(Check, Vec<LabelReport>)> {
    let reports: Vec<LabelReport> = small_instances()?.iter().map(label_confinement).collect::<Result<_>>()?;
    let parts = reports
        .iter()
        .map(|r| {
            let ok = r.mismatches == 0 && r.vertices > 0 && r.faces <= 2000 && r.sites <= 64;
            (
                format!("{} {}/{} mismatched ({} near bisector, {} faces, {} sites)", r.model, r.mismatches, r.vertices, r.near_bisector, r.faces, r.sites),
                ok,
            )
        })
        .collect();
    Ok((Check::all(parts), reports))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub model: String,
    pub hausdorff: f64,
    pub mean_edge_length: f64,
    pub oracle_points: usize,
}

/// Symmetric surface-space Hausdorff distance between the extracted offset and the oracle.
pub fn oracle_agreement(inst: &SmallInstance) -> Result<OracleReport> {
    let run = run_offset(&inst.spec, std::slice::from_ref(&inst.curve), inst.d, &inst.config)?;
    let mesh = &run.prepared.mesh;
    let table = exhaustive_distances(mesh, &run.prepared.sites)?;
    let oracle: Vec<SurfacePoint> =
        brute_force_offset_with(mesh, &table, inst.d, 4).iter().map(|p| inst.spec.eval_raw(p.u, p.v)).collect();
    let computed = sample_offset(&inst.spec, &run.result, 20_000);
    let there = hausdorff_cd(&computed, &oracle, "computed->oracle").hausdorff_one_directional;
    let back = hausdorff_cd(&oracle, &computed, "oracle->computed").hausdorff_one_directional;
    Ok(OracleReport {
        model: inst.spec.kind().name().to_string(),
        hausdorff: there.max(back),
        mean_edge_length: mesh.mean_edge_length(),
        oracle_points: oracle.len(),
    })
}

pub fn check_oracle_agreement() -> Result<(Check, Vec<OracleReport>)> {
    let instances: Vec<SmallInstance> = small_instances()?
        .into_iter()
        .filter(|i| matches!(i.spec.kind(), SurfaceKind::Plane | SurfaceKind::Sphere { .. } | SurfaceKind::GaussianBump { .. }))
        .collect();
    let reports: Vec<OracleReport> = instances.iter().map(oracle_agreement).collect::<Result<_>>()?;
    let parts = reports
        .iter()
        .map(|r| {
            let ok = r.oracle_points > 0 && r.hausdorff <= 2.0 * r.mean_edge_length;
            (format!("{} HD {:.2e} vs 2h {:.2e}", r.model, r.hausdorff, 2.0 * r.mean_edge_length), ok)
        })
        .collect();
    Ok((Check::all(parts), reports))
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub name: String,
    pub violations: usize,
}

/// Detector output on every shipped example and on the corrupted stress configuration.
pub fn check_field_consistency() -> Result<(Check, Vec<LipschitzReport>)> {
    let mut reports = Vec::new();
    let mut parts = Vec::new();
    for ex in data::examples()? {
        let spec = ex.spec()?;
        let stage = build_field(&spec, &ex.curves(&spec)?, ex.distance, &ex.config())?;
        let n = detect_field_inconsistency(&stage.mesh, &stage.field).len();
        parts.push((format!("{} {n}", ex.name), n == 0));
        reports.push(LipschitzReport { name: ex.name, violations: n });
    }
    let (ex, cfg) = data::stress()?;
    let spec = ex.spec()?;
    let stage = build_field(&spec, &ex.curves(&spec)?, ex.distance, &cfg)?;
    let n = detect_field_inconsistency(&stage.mesh, &stage.field).len();
    parts.push((format!("stress {n} (must be > 0)"), n > 0));
    reports.push(LipschitzReport { name: ex.name, violations: n });
    Ok((Check::all(parts), reports))
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneReport {
    /// Largest deviation of an offset vertex from the exact stadium.
    pub stadium_error: f64,
    /// Largest distance from an exact stadium point to the offset.
    pub stadium_coverage: f64,
    pub spacing: f64,
    pub geodesic_error: f64,
    pub pairs: usize,
}

fn segment_distance(p: ParamPoint, a: ParamPoint, b: ParamPoint) -> f64 {
    let (dx, dy) = (b.u - a.u, b.v - a.v);
    let t = (((p.u - a.u) * dx + (p.v - a.v) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p.u - a.u - t * dx).hypot(p.v - a.v - t * dy)
}

fn polyline_distance(p: ParamPoint, pts: &[ParamPoint], closed: bool) -> f64 {
    let n = pts.len();
    let links = if closed { n } else { n - 1 };
    (0..links).map(|i| segment_distance(p, pts[i], pts[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// Straight-segment offsets against the stadium, and geodesics against Euclidean distances.
pub fn plane_degeneracy(pairs: usize, seed: u64) -> Result<PlaneReport> {
    let spec = data::surface("plane")?;
    let curves = data::curves("segment", &spec)?;
    let (a, b) = (ParamPoint::new(-0.5, 0.0), ParamPoint::new(0.5, 0.0));
    let d = 0.3;
    let run = run_offset(&spec, &curves, d, &OffsetConfig { grid: (41, 41), segments: 100, ..Default::default() })?;
    let spacing = run.prepared.sites.spacing();
    let mut stadium_error: f64 = 0.0;
    for p in run.result.polylines.iter().flat_map(|pl| &pl.points) {
        stadium_error = stadium_error.max((segment_distance(p.param, a, b) - d).abs());
    }
    let mut stadium = Vec::new();
    for i in 0..200 {
        let t = i as f64 / 200.0;
        stadium.push(ParamPoint::new(-0.5 + t, d));
        stadium.push(ParamPoint::new(0.5 - t, -d));
        let ang = PI * t - 0.5 * PI;
        stadium.push(ParamPoint::new(0.5 + d * ang.cos(), d * ang.sin()));
        stadium.push(ParamPoint::new(-0.5 - d * ang.cos(), -d * ang.sin()));
    }
    let stadium_coverage = stadium
        .iter()
        .map(|&q| {
            run.result.polylines.iter().map(|pl| polyline_distance(q, &pl.params(), pl.closed)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    let mesh = IntrinsicMesh::build_uniform(&spec, 21, 21)?;
    let engine = GeodesicEngine::new(&mesh);
    let mut ws = engine.workspace();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.n_vertices() as u32;
    let mut geodesic_error: f64 = 0.0;
    for _ in 0..pairs {
        let (s, t) = (VertexId(rng.gen_range(0..n)), VertexId(rng.gen_range(0..n)));
        let exact = mesh.vertex_param(s).dist(mesh.vertex_param(t));
        geodesic_error = geodesic_error.max((engine.distance(&mut ws, s, t)?.length - exact).abs());
    }
    Ok(PlaneReport { stadium_error, stadium_coverage, spacing, geodesic_error, pairs })
}

pub fn check_plane_degeneracy(pairs: usize, seed: u64) -> Result<(Check, PlaneReport)> {
    let r = plane_degeneracy(pairs, seed)?;
    let ok = r.stadium_error <= 1.5 * r.spacing && r.stadium_coverage <= 1.5 * r.spacing && r.geodesic_error <= 1e-9;
    let detail = format!(
        "stadium error {:.2e}, coverage {:.2e} vs 1.5 spacing {:.2e}; geodesic error {:.1e} over {} pairs",
        r.stadium_error,
        r.stadium_coverage,
        1.5 * r.spacing,
        r.geodesic_error,
        r.pairs
    );
    Ok((Check::new(ok, detail), r))
}

#[derive(Debug, Clone, Serialize)]
pub struct MorphologyReport {
    pub closing_loops: (usize, usize),
    pub hole_filled: bool,
    pub opening_loops: (usize, usize),
    pub blob_removed: bool,
    pub checked_points: usize,
    pub inclusion_violations: usize,
}

fn region_boundary_distance(r: &Region, p: ParamPoint) -> f64 {
    r.loops().iter().map(|c| polyline_distance(p, c.samples(), true)).fold(f64::INFINITY, f64::min)
}

/// Hole filling by closing, blob removal by opening and `opening ⊆ R ⊆ closing` on the plane.
pub fn morphology(points: usize, seed: u64) -> Result<MorphologyReport> {
    let spec = data::surface("plane")?;
    let cfg = OffsetConfig { grid: (49, 49), segments: 400, ..Default::default() };
    let d = 0.12;
    let circle = |c: (f64, f64), r: f64| SourceCurve::circle_uv(ParamPoint::new(c.0, c.1), r, 256, &spec);

    let holed = Region::new(data::curves("holed_disk", &spec)?, &spec)?;
    let closed = closing(&spec, &holed, d, &cfg)?;
    let hole_filled = closed.classify(ParamPoint::new(0.15, 0.1), &spec) == Side::Inside;

    let blob = Region::new(vec![circle((-0.25, 0.0), 0.5)?, circle((0.65, 0.6), 0.08)?], &spec)?;
    let opened = opening(&spec, &blob, d, &cfg)?;
    let blob_removed = opened.classify(ParamPoint::new(0.65, 0.6), &spec) == Side::Outside;

    let r = Region::new(vec![circle((-0.2, 0.0), 0.55)?, circle((-0.1, 0.1), 0.07)?, circle((0.7, 0.6), 0.08)?], &spec)?;
    let (o, c) = (opening(&spec, &r, d, &cfg)?, closing(&spec, &r, d, &cfg)?);
    let dom = spec.domain();
    let tol = 2.0 * dom.width() / (cfg.grid.0 - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut violations) = (0, 0);
    for _ in 0..points {
        let p = random_point(&mut rng, &dom);
        if [&r, &o, &c].iter().any(|x| region_boundary_distance(x, p) <= tol) {
            continue;
        }
        checked += 1;
        let (io, ir, ic) = (o.classify(p, &spec), r.classify(p, &spec), c.classify(p, &spec));
        if (io == Side::Inside && ir != Side::Inside) || (ir == Side::Inside && ic != Side::Inside) {
            violations += 1;
        }
    }
    Ok(MorphologyReport {
        closing_loops: (holed.loops().len(), closed.loops().len()),
        hole_filled,
        opening_loops: (blob.loops().len(), opened.loops().len()),
        blob_removed,
        checked_points: checked,
        inclusion_violations: violations,
    })
}

pub fn check_morphology(points: usize, seed: u64) -> Result<(Check, MorphologyReport)> {
    let r = morphology(points, seed)?;
    let ok = r.closing_loops.1 < r.closing_loops.0
        && r.hole_filled
        && r.opening_loops.1 < r.opening_loops.0
        && r.blob_removed
        && r.checked_points * 2 > points
        && r.inclusion_violations == 0;
    let detail = format!(
        "closing loops {}->{}, opening loops {}->{}, inclusion violations {}/{}",
        r.closing_loops.0, r.closing_loops.1, r.opening_loops.0, r.opening_loops.1, r.inclusion_violations, r.checked_points
    );
    Ok((Check::new(ok, detail), r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_every_model() {
        let names: Vec<&str> = catalog().unwrap().iter().map(|s| s.kind().name()).collect();
        assert_eq!(names.len(), 8);
        assert!(names.contains(&"spiral_paraboloid") && names.contains(&"circular_wave"));
    }

    #[test]
    fn small_metric_run() {
        let spec = SurfaceSpec::with_defaults(SurfaceKind::GaussianBump { amplitude: 0.5, sigma: 0.3, center_u: 0.0, center_v: 0.0 }).unwrap();
        let r = metric_consistency(&spec, 200, 500, 7).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.valid_after_build && r.valid_after_insertion && r.valid_after_flips);
        assert!(r.flips > 0 && r.inserted > 0);
    }
}
