//! Geodesic deviation, offset accuracy and runtime scaling experiments.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use surfoffset_core::curve::SourceCurve;
use surfoffset_core::geodesic::GeodesicEngine;
use surfoffset_core::metrics::{hausdorff_cd, sample_curve, sample_polylines, CurveDistanceReport};
use surfoffset_core::pipeline::{run_offset, OffsetConfig, PhaseTimings};
use surfoffset_core::{Error, IntrinsicMesh, ParamPoint, Result, SurfaceSpec, VertexId};

/// Mean relative deviation of computed sphere geodesics from great-circle distances.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicDeviation {
    pub level: u32,
    pub faces: usize,
    pub pairs: usize,
    pub mean_relative: f64,
    pub max_relative: f64,
    pub non_converged: usize,
    pub seconds: f64,
}

/// Random vertex pairs on a unit icosphere subdivided `level` times.
pub fn geodesic_deviation(level: u32, pairs: usize, seed: u64) -> Result<GeodesicDeviation> {
    let start = Instant::now();
    let spec = SurfaceSpec::sphere(1.0)?;
    let mesh = IntrinsicMesh::icosphere(&spec, level)?;
    let n = mesh.n_vertices() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries: Vec<(VertexId, VertexId)> = (0..pairs)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            (VertexId(a), VertexId(b))
        })
        .collect();
    let engine = GeodesicEngine::new(&mesh);
    let results: Vec<(f64, bool)> = queries
        .par_iter()
        .map_init(
            || engine.workspace(),
            |ws, &(a, b)| {
                let q = engine.distance(ws, a, b)?;
                let (pa, pb) = (engine.position(a), engine.position(b));
                let dot = (pa.x * pb.x + pa.y * pb.y + pa.z * pb.z).clamp(-1.0, 1.0);
                let exact = dot.acos();
                Ok(((q.length - exact).abs() / exact, q.converged))
            },
        )
        .collect::<Result<_>>()?;
    let mean = results.iter().map(|r| r.0).sum::<f64>() / pairs.max(1) as f64;
    Ok(GeodesicDeviation {
        level,
        faces: mesh.n_faces(),
        pairs,
        mean_relative: mean,
        max_relative: results.iter().map(|r| r.0).fold(0.0, f64::max),
        non_converged: results.iter().filter(|r| !r.1).count(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// An offset whose exact answer is a set of `v = const` circles.
#[derive(Debug, Clone)]
pub struct AccuracyCase {
    pub model: &'static str,
    pub spec: SurfaceSpec,
    pub curve: SourceCurve,
    pub config: OffsetConfig,
    pub d: f64,
    /// Parameter `v` of each exact offset circle.
    pub levels: Vec<f64>,
    /// Samples per curve for the distance measurement.
    pub samples: usize,
}

fn equator(spec: &SurfaceSpec) -> Result<SourceCurve> {
    SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 4000, true, spec)
}

/// Unit sphere, equator, `d = 0.3`, 2000 segments on a 50k-face latitude-longitude mesh.
pub fn sphere_case() -> Result<AccuracyCase> {
    let spec = SurfaceSpec::sphere(1.0)?;
    Ok(AccuracyCase {
        model: "sphere",
        curve: equator(&spec)?,
        spec,
        config: OffsetConfig { grid: (225, 113), segments: 2000, ..Default::default() },
        d: 0.3,
        levels: vec![-0.3, 0.3],
        samples: 100_000,
    })
}

/// Unit cylinder of height 3, cross-section circle, `d = 0.5`, 2000 segments on 50k faces.
pub fn cylinder_case() -> Result<AccuracyCase> {
    let spec = SurfaceSpec::cylinder(1.0, -1.5, 1.5)?;
    Ok(AccuracyCase {
        model: "cylinder",
        curve: equator(&spec)?,
        spec,
        config: OffsetConfig { grid: (201, 126), segments: 2000, ..Default::default() },
        d: 0.5,
        levels: vec![-0.5, 0.5],
        samples: 100_000,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyReport {
    pub model: String,
    pub faces: usize,
    pub segments: usize,
    pub d: f64,
    pub polylines: usize,
    pub expected_polylines: usize,
    /// Computed to exact distances, one entry per offset polyline.
    pub curves: Vec<CurveDistanceReport>,
    pub hd: f64,
    pub cd: f64,
    pub timings: PhaseTimings,
}

/// Runs the case and compares every offset polyline with the nearest exact circle.
pub fn run_accuracy(case: &AccuracyCase) -> Result<AccuracyReport> {
    let run = run_offset(&case.spec, std::slice::from_ref(&case.curve), case.d, &case.config)?;
    let exact: Vec<_> = case
        .levels
        .iter()
        .map(|&v| sample_curve(&case.spec, |t| ParamPoint::new(TAU * t, v), case.samples))
        .collect();
    let mut curves = Vec::new();
    for pl in &run.result.polylines {
        let params = pl.params();
        let mean_v = params.iter().map(|p| p.v).sum::<f64>() / params.len() as f64;
        let k = (0..case.levels.len())
            .min_by(|&a, &b| (case.levels[a] - mean_v).abs().total_cmp(&(case.levels[b] - mean_v).abs()))
            .ok_or_else(|| Error::Config("an accuracy case needs at least one exact curve".into()))?;
        let computed = sample_polylines(&case.spec, &[(params, pl.closed)], case.samples);
        curves.push(hausdorff_cd(&computed, &exact[k], "computed->analytic"));
    }
    Ok(AccuracyReport {
        model: case.model.to_string(),
        faces: run.prepared.mesh.n_faces(),
        segments: run.prepared.sites.len(),
        d: case.d,
        polylines: run.result.polylines.len(),
        expected_polylines: case.levels.len(),
        hd: curves.iter().map(|c| c.hausdorff_one_directional).fold(0.0, f64::max),
        cd: curves.iter().map(|c| c.chamfer).fold(0.0, f64::max),
        curves,
        timings: run.timings,
    })
}

/// One CSV line of a suite.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub model: String,
    pub segments: usize,
    pub faces: usize,
    pub d: f64,
    pub hd: Option<f64>,
    pub cd: Option<f64>,
    pub seconds: f64,
    pub phase_field: f64,
    pub phase_voronoi: f64,
    pub phase_extract: f64,
}

impl BenchRow {
    fn new(suite: &str, model: &str, segments: usize, faces: usize, d: f64, t: &PhaseTimings) -> Self {
        Self {
            suite: suite.into(),
            model: model.into(),
            segments,
            faces,
            d,
            hd: None,
            cd: None,
            seconds: t.total,
            phase_field: t.field,
            phase_voronoi: t.voronoi,
            phase_extract: t.extract,
        }
    }
}

impl From<&AccuracyReport> for BenchRow {
    fn from(r: &AccuracyReport) -> Self {
        let mut row = BenchRow::new("accuracy", &r.model, r.segments, r.faces, r.d, &r.timings);
        row.hd = Some(r.hd);
        row.cd = Some(r.cd);
        row
    }
}

pub fn run_accuracy_suite() -> Result<Vec<AccuracyReport>> {
    [sphere_case()?, cylinder_case()?].iter().map(run_accuracy).collect()
}

/// Least-squares line `y = slope x + intercept` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOptions {
    pub grid: (usize, usize),
    pub segments: Vec<usize>,
    /// Offset distance of the segment sweep.
    pub d: f64,
    pub distances: Vec<f64>,
    /// Segments of the distance sweep.
    pub distance_segments: usize,
    /// Each point keeps the fastest of this many runs.
    pub repeats: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            grid: (225, 113),
            segments: vec![500, 1000, 2000, 4000],
            d: 0.3,
            distances: vec![0.1, 0.2, 0.3, 0.4],
            distance_segments: 2000,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub by_segments: Vec<BenchRow>,
    pub fit: LinearFit,
    pub by_distance: Vec<BenchRow>,
    pub monotone_in_distance: bool,
}

fn timed_row(suite: &str, spec: &SurfaceSpec, segments: usize, d: f64, opts: &ScalingOptions) -> Result<BenchRow> {
    let curve = equator(spec)?;
    let cfg = OffsetConfig { grid: opts.grid, segments, ..Default::default() };
    let mut best: Option<BenchRow> = None;
    for _ in 0..opts.repeats.max(1) {
        let run = run_offset(spec, std::slice::from_ref(&curve), d, &cfg)?;
        let row = BenchRow::new(suite, "sphere", run.prepared.sites.len(), run.prepared.mesh.n_faces(), d, &run.timings);
        if best.as_ref().map_or(true, |b| row.seconds < b.seconds) {
            best = Some(row);
        }
    }
    best.ok_or_else(|| Error::Internal("no scaling run".into()))
}

/// Wall time against segment count and against offset distance on the unit sphere.
pub fn run_scaling_suite(opts: &ScalingOptions) -> Result<ScalingReport> {
    let spec = SurfaceSpec::sphere(1.0)?;
    let by_segments: Vec<BenchRow> =
        opts.segments.iter().map(|&n| timed_row("scaling_segments", &spec, n, opts.d, opts)).collect::<Result<_>>()?;
    let fit = linear_fit(&by_segments.iter().map(|r| (r.segments as f64, r.seconds)).collect::<Vec<_>>());
    let by_distance: Vec<BenchRow> = opts
        .distances
        .iter()
        .map(|&d| timed_row("scaling_distance", &spec, opts.distance_segments, d, opts))
        .collect::<Result<_>>()?;
    let monotone_in_distance = by_distance.windows(2).all(|w| w[1].seconds >= w[0].seconds);
    Ok(ScalingReport { by_segments, fit, by_distance, monotone_in_distance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geodesic,
    Accuracy,
    Scaling,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOptions {
    pub seed: u64,
    pub pairs: usize,
    pub levels: Vec<u32>,
    pub scaling: ScalingOptions,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { seed: 42, pairs: 1000, levels: vec![1, 3, 5], scaling: ScalingOptions::default() }
    }
}

/// Everything a bench invocation measured; `rows` holds the offset runs in CSV form.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchOutput {
    pub geodesic: Vec<GeodesicDeviation>,
    pub accuracy: Vec<AccuracyReport>,
    pub scaling: Option<ScalingReport>,
    pub rows: Vec<BenchRow>,
}

/// Runs the requested suites in order.
pub fn run_suites(suites: &[Suite], opts: &BenchOptions) -> Result<BenchOutput> {
    let mut out = BenchOutput::default();
    for suite in suites {
        match suite {
            Suite::Geodesic => {
                for &level in &opts.levels {
                    let r = geodesic_deviation(level, opts.pairs, opts.seed)?;
                    tracing::info!(faces = r.faces, mean_relative = r.mean_relative, "geodesic deviation");
                    out.geodesic.push(r);
                }
            }
            Suite::Accuracy => {
                for r in run_accuracy_suite()? {
                    tracing::info!(model = %r.model, hd = r.hd, cd = r.cd, "offset accuracy");
                    out.rows.push(BenchRow::from(&r));
                    out.accuracy.push(r);
                }
            }
            Suite::Scaling => {
                let r = run_scaling_suite(&opts.scaling)?;
                tracing::info!(r2 = r.fit.r2, monotone = r.monotone_in_distance, "runtime scaling");
                out.rows.extend(r.by_segments.iter().cloned());
                out.rows.extend(r.by_distance.iter().cloned());
                out.scaling = Some(r);
            }
        }
    }
    Ok(out)
}

/// Rows in the `suite,model,segments,faces,d,hd,cd,seconds,phase_field,phase_voronoi,phase_extract` schema.
pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let g = linear_fit(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]);
        assert!(g.r2 < 0.5);
    }

    #[test]
    fn csv_header_and_empty_metrics() {
        let t = PhaseTimings { mesh: 0.1, field: 0.2, voronoi: 0.3, extract: 0.4, total: 1.0 };
        let row = BenchRow::new("scaling_segments", "sphere", 500, 50176, 0.3, &t);
        let text = to_csv(&[row]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("suite,model,segments,faces,d,hd,cd,seconds,phase_field,phase_voronoi,phase_extract"));
        assert_eq!(lines.next(), Some("scaling_segments,sphere,500,50176,0.3,,,1.0,0.2,0.3,0.4"));
    }

    #[test]
    fn coarse_icosphere_deviation_is_deterministic() {
        let a = geodesic_deviation(1, 50, 42).unwrap();
        let b = geodesic_deviation(1, 50, 42).unwrap();
        assert_eq!(a.faces, 80);
        assert_eq!(a.mean_relative, b.mean_relative);
        assert_eq!(a.non_converged, 0);
    }

    #[test]
    fn small_sphere_case_pairs_both_circles() {
        let mut case = sphere_case().unwrap();
        case.config = OffsetConfig { grid: (65, 33), segments: 300, ..Default::default() };
        case.samples = 5000;
        let r = run_accuracy(&case).unwrap();
        assert_eq!(r.polylines, 2);
        assert!(r.hd < 2e-2, "{}", r.hd);
        assert!(r.cd <= r.hd);
    }
}
