use super::*;
use crate::curve::{discretize, Site, SiteSet, SourceCurve};
use crate::geodesic::{build_distance_field, FieldOptions};
use crate::surface::{Domain, SurfaceSpec};
use rand::{Rng, SeedableRng};
use std::f64::consts::{PI, TAU};

fn point_sites(points: &[ParamPoint]) -> SiteSet {
    SiteSet {
        sites: points.iter().map(|&p| Site { param: p, arc_position: 0.0 }).collect(),
        segment_lengths: vec![1.0; points.len()],
        closed: false,
        total_length: points.len() as f64,
    }
}

fn lower_envelope(tri: &UnfoldedTriangle, cands: &[Candidate], x: [f64; 2]) -> (SiteId, f64, f64) {
    let mut vals: Vec<(f64, SiteId)> =
        cands.iter().map(|c| (Plane::through(tri, c.dist).at(x), c.site)).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (vals[0].1, vals[0].0, vals.get(1).map_or(f64::INFINITY, |v| v.0))
}

fn label_at(polys: &[SubPolygon], x: [f64; 2]) -> Option<SiteId> {
    polys.iter().find(|p| inside(&p.points, x)).map(|p| p.site)
}

fn inside(poly: &[[f64; 2]], x: [f64; 2]) -> bool {
    let n = poly.len();
    (0..n).all(|k| {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= -1e-15
    })
}

#[test]
fn single_candidate_keeps_triangle() {
    let tri = UnfoldedTriangle::from_lengths(1.0, 1.0, 1.0);
    let out = cut_triangle(&tri, &[Candidate { site: SiteId(4), dist: [0.3, 0.1, 0.7] }]);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].site, SiteId(4));
    assert_eq!(out[0].points, tri.p.to_vec());
}

#[test]
fn symmetric_pair_splits_through_apex() {
    let tri = UnfoldedTriangle { p: [[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]] };
    let c = [Candidate { site: SiteId(0), dist: [0.0, 1.0, 1.0] }, Candidate { site: SiteId(1), dist: [1.0, 0.0, 1.0] }];
    let out = cut_triangle(&tri, &c);
    assert_eq!(out.len(), 2);
    let (a0, a1) = (cut::polygon_area(&out[0].points), cut::polygon_area(&out[1].points));
    assert!((a0 - a1).abs() < 1e-14 && (a0 + a1 - tri.area()).abs() < 1e-14);
    for p in &out {
        for x in &p.points {
            let on_side = x[0] == 0.0 || x[0] == 1.0 || (x[0] - 0.5).abs() < 1e-12;
            assert!(on_side || x[1] == 0.0 || (x[1] - 0.8).abs() < 1e-12, "{x:?}");
        }
    }
}

#[test]
fn identical_planes_go_to_smaller_id() {
    let tri = UnfoldedTriangle::from_lengths(1.0, 1.0, 1.0);
    let d = [0.2, 0.4, 0.5];
    let out = cut_triangle(&tri, &[Candidate { site: SiteId(9), dist: d }, Candidate { site: SiteId(3), dist: d }]);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].site, SiteId(3));
}

#[test]
fn random_planes_match_point_sampling() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let tri = UnfoldedTriangle { p: [[0.0, 0.0], [1.0, 0.0], [rng.gen_range(0.1..0.9), rng.gen_range(0.3..1.2)]] };
        let cands: Vec<Candidate> = (0..5)
            .map(|i| Candidate { site: SiteId(i), dist: [0; 3].map(|_| rng.gen_range(0.0..1.0)) })
            .collect();
        let polys = cut_triangle(&tri, &cands);
        let total: f64 = polys.iter().map(|p| cut::polygon_area(&p.points)).sum();
        assert!((total - tri.area()).abs() <= 1e-10 * tri.area());
        for p in &polys {
            assert!(cut::polygon_area(&p.points) > 0.0);
        }
        let mut agree = 0;
        for _ in 0..10_000 {
            let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let x = tri.point([1.0 - a - b, a, b]);
            let (best, v0, v1) = lower_envelope(&tri, &cands, x);
            match label_at(&polys, x) {
                Some(l) if l == best => agree += 1,
                _ => assert!(v1 - v0 < 1e-6, "disagreement away from a bisector"),
            }
        }
        assert!(agree >= 9_990);
    }
}

#[test]
fn envelope_on_a_segment() {
    let s = |i| SiteId(i);
    let (w, b) = envelope_1d(&[(s(0), 0.0, 1.0), (s(1), 1.0, 0.0)]);
    assert_eq!(w, vec![s(0), s(1)]);
    assert!((b[0] - 0.5).abs() < 1e-15);
    let (w, b) = envelope_1d(&[(s(0), 0.0, 1.0), (s(1), 0.4, 0.4), (s(2), 1.0, 0.0), (s(3), 2.0, 2.0)]);
    assert_eq!(w, vec![s(0), s(1), s(2)]);
    assert!((b[0] - 0.4).abs() < 1e-15 && (b[1] - 0.6).abs() < 1e-15);
    let (w, b) = envelope_1d(&[(s(5), 0.3, 0.3), (s(2), 0.3, 0.3)]);
    assert_eq!((w, b), (vec![s(2)], vec![]));
    // three lines through one point collapse the middle piece
    let (w, b) = envelope_1d(&[(s(0), 0.0, 1.0), (s(1), 0.25, 0.75), (s(2), 0.5, 0.5)]);
    assert_eq!(w, vec![s(0), s(2)]);
    assert!((b[0] - 0.5).abs() < 1e-12);
}

fn plane_setup(points: &[ParamPoint], n: usize, cutoff: f64) -> (IntrinsicMesh, AnchoredSites, LabeledMesh) {
    let spec = SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap();
    let mut m = IntrinsicMesh::build_uniform(&spec, n, n).unwrap();
    let sites = AnchoredSites::insert(&mut m, vec![point_sites(points)]).unwrap();
    let field = build_distance_field(&m, &sites, cutoff, &FieldOptions::default()).unwrap();
    let lab = compute_voronoi(&m, &field, &sites).unwrap();
    (m, sites, lab)
}

fn check_tiling(m: &IntrinsicMesh, lab: &LabeledMesh) {
    let mut area = vec![0.0; m.n_faces()];
    for f in &lab.faces {
        let tri = m.unfold(f.parent);
        let pts = f.bary.map(|b| tri.point(b));
        area[f.parent.idx()] += cut::polygon_area(&pts);
        assert!(cut::polygon_area(&pts) >= -1e-15);
    }
    for (f, a) in area.iter().enumerate() {
        if !lab.candidates[f].is_empty() {
            let full = m.face_area(FaceId(f as u32));
            assert!((a - full).abs() <= 1e-10 * full, "face {f}: {a} vs {full}");
        }
    }
}

#[test]
fn two_sites_split_along_bisector() {
    let (m, _, lab) = plane_setup(&[ParamPoint::new(0.3, 0.45), ParamPoint::new(0.7, 0.55)], 41, 2.0);
    check_tiling(&m, &lab);
    assert_eq!(lab.labels(), vec![SiteId(0), SiteId(1)]);
    // bisector of (0.3, 0.45)-(0.7, 0.55): through (0.5, 0.5) with normal (0.4, 0.1)
    let n = (0.4f64).hypot(0.1);
    let mut seen = 0;
    for (i, v) in lab.vertices.iter().enumerate() {
        let owners: Vec<SiteId> =
            lab.faces.iter().filter(|f| f.vertices.contains(&(i as u32))).map(|f| f.site).collect();
        if owners.contains(&SiteId(0)) && owners.contains(&SiteId(1)) {
            let off = ((v.param.u - 0.5) * 0.4 + (v.param.v - 0.5) * 0.1) / n;
            assert!(off.abs() <= 1e-3, "{:?} off by {off}", v.param);
            seen += 1;
        }
    }
    assert!(seen > 10);
}

#[test]
fn four_corner_sites_split_on_symmetry_axes() {
    let pts = [
        ParamPoint::new(0.0, 0.0),
        ParamPoint::new(1.0, 0.0),
        ParamPoint::new(1.0, 1.0),
        ParamPoint::new(0.0, 1.0),
    ];
    let (m, _, lab) = plane_setup(&pts, 31, 2.0);
    check_tiling(&m, &lab);
    assert_eq!(lab.labels().len(), 4);
    for f in &lab.faces {
        let c = bary_uv(&f.uv, [1.0 / 3.0; 3]);
        let expect = match (c.u < 0.5, c.v < 0.5) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        assert_eq!(f.site, SiteId(expect), "face at {c:?}");
        for &v in &f.vertices {
            let p = lab.vertices[v as usize].param;
            let on_axis = (p.u - 0.5).abs() < 1e-3 || (p.v - 0.5).abs() < 1e-3;
            let quadrant_ok = match expect {
                0 => p.u <= 0.5 + 1e-9 && p.v <= 0.5 + 1e-9,
                1 => p.u >= 0.5 - 1e-9 && p.v <= 0.5 + 1e-9,
                2 => p.u >= 0.5 - 1e-9 && p.v >= 0.5 - 1e-9,
                _ => p.u <= 0.5 + 1e-9 && p.v >= 0.5 - 1e-9,
            };
            assert!(quadrant_ok || on_axis, "{p:?} in face of site {expect}");
        }
    }
}

#[test]
fn voronoi_vertex_distances_are_min_of_meeting_sites() {
    let pts: Vec<ParamPoint> = (0..7).map(|i| ParamPoint::new(0.15 + 0.1 * i as f64, 0.3 + 0.05 * (i % 3) as f64)).collect();
    let (m, sites, lab) = plane_setup(&pts, 21, 0.5);
    check_tiling(&m, &lab);
    for v in &lab.vertices {
        let exact = (0..sites.len()).map(|s| sites.param(SiteId(s as u32)).dist(v.param)).fold(f64::INFINITY, f64::min);
        // linear interpolation of a convex distance overestimates by at most h^2 / (8 d)
        assert!(v.distance >= exact - 1e-9, "{v:?} below {exact}");
        assert!(v.distance <= exact + 0.02, "{v:?} vs {exact}");
        if v.kind == VertexKind::Site {
            assert_eq!(v.distance, 0.0);
        }
    }
    for f in &lab.faces {
        assert!(lab.candidates[f.parent.idx()].iter().any(|c| c.site == f.site));
    }
}

#[test]
fn sphere_equator_cells_are_meridian_strips() {
    let spec = SurfaceSpec::sphere(1.0).unwrap();
    let mut m = IntrinsicMesh::build_uniform(&spec, 101, 51).unwrap();
    let curve = SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 400, true, &spec).unwrap();
    let set = discretize(&curve, 200, &spec).unwrap();
    let sites = AnchoredSites::insert(&mut m, vec![set]).unwrap();
    let field = build_distance_field(&m, &sites, 0.3, &FieldOptions::default()).unwrap();
    let lab = compute_voronoi(&m, &field, &sites).unwrap();
    check_tiling(&m, &lab);
    assert_eq!(lab.labels().len(), 200);
    let width = TAU / 200.0;
    let mut lo = vec![f64::INFINITY; 200];
    let mut hi = vec![f64::NEG_INFINITY; 200];
    for f in &lab.faces {
        let c = bary_uv(&f.uv, [1.0 / 3.0; 3]);
        let s = sites.param(f.site);
        let du = (c.u - s.u + PI).rem_euclid(TAU) - PI;
        lo[f.site.idx()] = lo[f.site.idx()].min(du);
        hi[f.site.idx()] = hi[f.site.idx()].max(du);
        // every face lies within one cell width of its site's meridian
        assert!(du.abs() <= width, "face {c:?} labeled {:?} at {s:?}", f.site);
    }
    for s in 0..200 {
        // centroids of boundary faces sit inside the strip
        assert!(hi[s] - lo[s] <= width * 1.05, "cell {s} spans {}", hi[s] - lo[s]);
    }
}
