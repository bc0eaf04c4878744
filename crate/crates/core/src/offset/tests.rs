use super::*;
use crate::curve::{discretize, SourceCurve};
use crate::geodesic::{build_distance_field, FieldOptions};
use crate::surface::{Domain, SurfaceKind};
use crate::voronoi::compute_voronoi;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;

struct Run {
    mesh: IntrinsicMesh,
    sites: AnchoredSites,
    lab: LabeledMesh,
}

fn run(spec: &SurfaceSpec, nu: usize, nv: usize, curves: &[SourceCurve], n: usize, cutoff: f64) -> Run {
    let mut mesh = IntrinsicMesh::build_uniform(spec, nu, nv).unwrap();
    let sets = curves.iter().map(|c| discretize(c, n, spec).unwrap()).collect();
    let sites = AnchoredSites::insert(&mut mesh, sets).unwrap();
    let field = build_distance_field(&mesh, &sites, cutoff, &FieldOptions::default()).unwrap();
    let lab = compute_voronoi(&mesh, &field, &sites).unwrap();
    Run { mesh, sites, lab }
}

/// Lower envelope of the interpolated candidate distances at an output vertex.
fn field_value(r: &Run, v: &OffsetVertex) -> f64 {
    let lengths = r.mesh.face_lengths(v.face);
    r.lab.candidates[v.face.idx()]
        .iter()
        .map(|c| crate::voronoi::interpolated_distance(c.dist, lengths, v.bary))
        .fold(f64::INFINITY, f64::min)
}

fn seg_dist(p: ParamPoint, a: ParamPoint, b: ParamPoint) -> f64 {
    let (dx, dy) = (b.u - a.u, b.v - a.v);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 { 0.0 } else { (((p.u - a.u) * dx + (p.v - a.v) * dy) / l2).clamp(0.0, 1.0) };
    (p.u - a.u - t * dx).hypot(p.v - a.v - t * dy)
}

fn dist_to_polylines(p: ParamPoint, res: &OffsetResult) -> f64 {
    let mut best = f64::INFINITY;
    for pl in &res.polylines {
        let n = pl.points.len();
        let links = if pl.closed { n } else { n - 1 };
        for i in 0..links {
            best = best.min(seg_dist(p, pl.points[i].param, pl.points[(i + 1) % n].param));
        }
    }
    best
}

#[test]
fn level_segment_examples() {
    let tri = UnfoldedTriangle { p: [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] };
    let s = face_level_segment([0.0, 1.0, 1.0], &tri, 0.5).unwrap();
    assert_eq!(s, [[0.5, 0.0], [0.0, 0.5]]);
    assert!(face_level_segment([0.6, 1.0, 0.7], &tri, 0.5).is_none());
    assert!(face_level_segment([0.1, 0.2, 0.3], &tri, 0.5).is_none());
    // a corner exactly at the level counts as above
    let s = face_level_segment([0.5, 0.0, 1.0], &tri, 0.5).unwrap();
    assert_eq!(s, [[0.5, 0.5], [0.0, 0.0]]);
}

#[test]
fn level_segment_matches_bisection() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let tri = UnfoldedTriangle { p: [[0.0, 0.0], [rng.gen_range(0.5..2.0), 0.0], [rng.gen_range(-0.5..1.5), rng.gen_range(0.2..2.0)]] };
        let dist = [0; 3].map(|_| rng.gen_range(0.0..1.0));
        let d = rng.gen_range(0.0..1.0);
        let Some(seg) = face_level_segment(dist, &tri, d) else { continue };
        let plane = crate::voronoi::Plane::through(&tri, dist);
        for x in seg {
            assert!((plane.at(x) - d).abs() < 1e-12);
        }
        // bisection along each crossing edge finds the same points
        for k in 0..3 {
            let j = (k + 1) % 3;
            if (dist[k] >= d) == (dist[j] >= d) {
                continue;
            }
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (dist[k] + mid * (dist[j] - dist[k]) >= d) == (dist[k] >= d) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (p, q) = (tri.p[k], tri.p[j]);
            let x = [p[0] + lo * (q[0] - p[0]), p[1] + lo * (q[1] - p[1])];
            assert!(seg.iter().any(|s| (s[0] - x[0]).hypot(s[1] - x[1]) < 1e-12));
        }
        // smaller values lie to the left
        let dir = [seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]];
        let left = [-dir[1], dir[0]];
        assert!(left[0] * plane.g[0] + left[1] * plane.g[1] <= 1e-12);
    }
}

#[test]
fn plane_segment_gives_stadium() {
    let spec = SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap();
    let (a, b) = (ParamPoint::new(0.3, 0.5), ParamPoint::new(0.7, 0.5));
    let curve = SourceCurve::line_uv(a, b, 41, false, &spec).unwrap();
    let r = run(&spec, 41, 41, &[curve], 40, 0.35);
    let res = extract_offset(&r.lab, 0.2).unwrap();
    assert_eq!(res.polylines.len(), 1);
    assert!(res.polylines[0].closed);
    let spacing = r.sites.spacing();
    let mut worst: f64 = 0.0;
    for p in &res.polylines[0].points {
        worst = worst.max((seg_dist(p.param, a, b) - 0.2).abs());
    }
    assert!(worst <= 1.5 * spacing, "stadium deviation {worst} vs spacing {spacing}");
    // and the stadium is fully covered
    for i in 0..400 {
        let t = i as f64 / 400.0 * TAU;
        let q = if t.cos() >= 0.0 {
            ParamPoint::new(0.7 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
        } else {
            ParamPoint::new(0.3 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
        };
        assert!(dist_to_polylines(q, &res) <= 1.5 * spacing);
    }
}

#[test]
fn closed_curve_gives_two_loops_with_consistent_values() {
    let spec = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let c = ParamPoint::new(0.0, 0.0);
    let curve = SourceCurve::circle_uv(c, 0.5, 256, &spec).unwrap();
    let r = run(&spec, 41, 41, &[curve], 64, 0.3);
    let res = extract_offset(&r.lab, 0.15).unwrap();
    assert_eq!(res.polylines.len(), 2);
    assert!(res.polylines.iter().all(|p| p.closed));
    assert_eq!(res.clipped, 0);
    let mut radii: Vec<f64> = res.polylines.iter().map(|p| p.points[0].param.dist(c)).collect();
    radii.sort_by(f64::total_cmp);
    assert!((radii[0] - 0.35).abs() < 5e-3 && (radii[1] - 0.65).abs() < 5e-3, "{radii:?}");
    for pl in &res.polylines {
        let area: f64 = (0..pl.points.len())
            .map(|i| {
                let (p, q) = (pl.points[i].param, pl.points[(i + 1) % pl.points.len()].param);
                p.u * q.v - q.u * p.v
            })
            .sum::<f64>()
            * 0.5;
        // nearer values on the left: the outer loop runs counterclockwise, the inner one clockwise
        let outer = pl.points[0].param.dist(c) > 0.5;
        assert_eq!(area > 0.0, outer);
        for v in &pl.points {
            assert!((field_value(&r, v) - 0.15).abs() <= 1e-9, "{v:?}");
        }
    }
}

#[test]
fn sphere_equator_offsets_are_latitude_circles() {
    let spec = SurfaceSpec::sphere(1.0).unwrap();
    let curve = SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 400, true, &spec).unwrap();
    let r = run(&spec, 101, 51, &[curve], 300, 0.5);
    let res = extract_offset(&r.lab, 0.3).unwrap();
    assert_eq!(res.polylines.len(), 2);
    for pl in &res.polylines {
        assert!(pl.closed);
        for p in &pl.points {
            assert!((p.param.v.abs() - 0.3).abs() < 3e-3, "{:?}", p.param);
        }
        for x in &pl.lifted {
            assert!((x.dist(SurfacePoint::new(0.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn extraction_is_deterministic_and_checks_distance() {
    let spec = SurfaceSpec::with_defaults(SurfaceKind::GaussianBump { amplitude: 0.3, sigma: 0.3, center_u: 0.0, center_v: 0.0 }).unwrap();
    let curve = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.4, 200, &spec).unwrap();
    let r1 = run(&spec, 31, 31, &[curve.clone()], 48, 0.3);
    let r2 = run(&spec, 31, 31, &[curve], 48, 0.3);
    let a = extract_offset(&r1.lab, 0.12).unwrap();
    let b = extract_offset(&r2.lab, 0.12).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(extract_offset(&r1.lab, 0.3).unwrap_err().is_config());
    assert!(extract_offset(&r1.lab, -1.0).unwrap_err().is_config());
}

#[test]
fn matches_brute_force_on_small_plane() {
    let spec = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let curve = SourceCurve::circle_uv(ParamPoint::new(0.1, -0.05), 0.45, 64, &spec).unwrap();
    let r = run(&spec, 21, 21, &[curve], 8, 0.8);
    let res = extract_offset(&r.lab, 0.1).unwrap();
    let oracle = brute_force_offset(&r.mesh, &r.sites, 0.1, 4).unwrap();
    assert!(!oracle.is_empty());
    let worst = oracle.iter().map(|q| dist_to_polylines(*q, &res)).fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
    for pl in &res.polylines {
        for p in &pl.points {
            let near = oracle.iter().map(|q| q.dist(p.param)).fold(f64::INFINITY, f64::min);
            assert!(near <= r.mesh.mean_edge_length(), "{:?}", p.param);
        }
    }
}

fn measure(spec: &SurfaceSpec, nu: usize, nv: usize, curve: SourceCurve, n: usize, d: f64, exact: f64) {
    let t0 = std::time::Instant::now();
    let mut mesh = IntrinsicMesh::build_uniform(spec, nu, nv).unwrap();
    let sites = AnchoredSites::insert(&mut mesh, vec![discretize(&curve, n, spec).unwrap()]).unwrap();
    let cutoff = 1.5 * d + 2.0 * sites.spacing();
    let t1 = std::time::Instant::now();
    let field = build_distance_field(&mesh, &sites, cutoff, &FieldOptions::default()).unwrap();
    let t2 = std::time::Instant::now();
    let lab = compute_voronoi(&mesh, &field, &sites).unwrap();
    let t3 = std::time::Instant::now();
    let res = extract_offset(&lab, d).unwrap();
    let t4 = std::time::Instant::now();
    println!(
        "faces {} build {:.2}s field {:.2}s voronoi {:.2}s extract {:.2}s loops {} stats {:?}",
        mesh.n_faces(),
        (t1 - t0).as_secs_f64(),
        (t2 - t1).as_secs_f64(),
        (t3 - t2).as_secs_f64(),
        (t4 - t3).as_secs_f64(),
        res.polylines.len(),
        lab.stats
    );
    let a = crate::metrics::sample_offset(spec, &res, 100_000);
    for sign in [1.0, -1.0] {
        let b = crate::metrics::sample_curve(spec, |t| ParamPoint::new(t * TAU, sign * exact), 100_000);
        let half: Vec<SurfacePoint> = a.iter().copied().filter(|p| p.z * sign > 0.0).collect();
        let r = crate::metrics::hausdorff_cd(&half, &b, "computed->analytic");
        println!("side {sign}: hd {:.3e} cd {:.3e}", r.hausdorff_one_directional, r.chamfer);
    }
}

#[test]
#[ignore]
fn measure_sphere() {
    let spec = SurfaceSpec::sphere(1.0).unwrap();
    let curve = SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 4000, true, &spec).unwrap();
    measure(&spec, 225, 113, curve, 2000, 0.3, 0.3);
}

#[test]
#[ignore]
fn measure_cylinder() {
    let spec = SurfaceSpec::cylinder(1.0, -1.5, 1.5).unwrap();
    let curve = SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 4000, true, &spec).unwrap();
    measure(&spec, 201, 126, curve, 2000, 0.5, 0.5);
}
