use super::*;
use crate::mesh::SiteId;
use crate::curve::{discretize, SourceCurve};
use crate::surface::{Domain, ParamPoint, SurfaceKind, SurfaceSpec};
use rand::{Rng, SeedableRng};
use std::f64::consts::{PI, TAU};

fn plane(n: usize) -> IntrinsicMesh {
    IntrinsicMesh::build_uniform(&SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap(), n, n).unwrap()
}

fn great_circle(mesh: &IntrinsicMesh, a: VertexId, b: VertexId) -> f64 {
    let e = GeodesicEngine::new(mesh);
    let (p, q) = (e.position(a), e.position(b));
    let dot = p.x * q.x + p.y * q.y + p.z * q.z;
    let cross = [p.y * q.z - p.z * q.y, p.z * q.x - p.x * q.z, p.x * q.y - p.y * q.x];
    (cross[0].hypot(cross[1]).hypot(cross[2])).atan2(dot)
}

#[test]
fn dijkstra_along_diagonal() {
    let m = plane(3);
    let p = dijkstra_path(&m, VertexId(0), VertexId(8)).unwrap();
    assert_eq!(p.vertices, vec![VertexId(0), VertexId(4), VertexId(8)]);
    assert!((p.length - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn straight_path_is_already_geodesic() {
    let m = plane(3);
    let init = dijkstra_path(&m, VertexId(0), VertexId(8)).unwrap();
    let g = flip_shorten(&m, &init).unwrap();
    assert!(g.converged);
    assert_eq!(g.iterations, 0);
    assert!((g.length - 2f64.sqrt()).abs() < 1e-15);
    let single = dijkstra_path(&m, VertexId(0), VertexId(1)).unwrap();
    let g = flip_shorten(&m, &single).unwrap();
    assert!((g.length - 0.5).abs() < 1e-15 && g.iterations == 0);
}

#[test]
fn non_adjacent_init_rejected() {
    let m = plane(3);
    let bad = VertexPath { vertices: vec![VertexId(0), VertexId(8)], length: 1.0 };
    assert!(flip_shorten(&m, &bad).is_err());
}

#[test]
fn plane_geodesics_are_euclidean() {
    let m = plane(21);
    let e = GeodesicEngine::new(&m);
    let mut ws = e.workspace();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let (a, b) = (VertexId(rng.gen_range(0..441)), VertexId(rng.gen_range(0..441)));
        let d = e.distance(&mut ws, a, b).unwrap();
        let exact = m.vertex_param(a).dist(m.vertex_param(b));
        assert!(d.converged);
        assert!((d.length - exact).abs() < 1e-9, "{} vs {exact}", d.length);
    }
}

#[test]
fn cylinder_geodesics_unroll() {
    let spec = SurfaceSpec::cylinder(1.0, -1.0, 1.0).unwrap();
    let m = IntrinsicMesh::build_uniform(&spec, 33, 17).unwrap();
    let e = GeodesicEngine::new(&m);
    let mut ws = e.workspace();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (a, b) = (VertexId(rng.gen_range(0..m.n_vertices() as u32)), VertexId(rng.gen_range(0..m.n_vertices() as u32)));
        let (p, q) = (m.vertex_param(a), m.vertex_param(b));
        let du = (p.u - q.u).abs();
        let exact = du.min(TAU - du).hypot(p.v - q.v);
        let other = du.max(TAU - du).hypot(p.v - q.v);
        // near the cut locus the edge-graph path may wind the other way round
        if other < 1.2 * exact {
            continue;
        }
        let d = e.distance(&mut ws, a, b).unwrap();
        assert!((d.length - exact).abs() < 1e-9, "{} vs {exact}", d.length);
    }
}

#[test]
fn icosphere_distances_close_to_great_circles() {
    let spec = SurfaceSpec::sphere(1.0).unwrap();
    let m = IntrinsicMesh::icosphere(&spec, 3).unwrap();
    let e = GeodesicEngine::new(&m);
    let mut ws = e.workspace();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut dev = 0.0;
    let n = 200;
    for _ in 0..n {
        let a = VertexId(rng.gen_range(0..m.n_vertices() as u32));
        let mut b = a;
        while b == a {
            b = VertexId(rng.gen_range(0..m.n_vertices() as u32));
        }
        let exact = great_circle(&m, a, b);
        let d = e.distance(&mut ws, a, b).unwrap();
        assert!(d.converged);
        dev += (d.length - exact).abs() / exact;
    }
    assert!(dev / n as f64 <= 4e-3, "mean deviation {}", dev / n as f64);
}

#[test]
fn distances_symmetric_and_triangle_inequality() {
    let spec = SurfaceSpec::with_defaults(SurfaceKind::BivariateSine { amplitude: 0.5, freq_u: 1.0, freq_v: 1.0 }).unwrap();
    let m = IntrinsicMesh::build_uniform(&spec, 30, 30).unwrap();
    let e = GeodesicEngine::new(&m);
    let mut ws = e.workspace();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let nv = m.n_vertices() as u32;
    for _ in 0..100 {
        let [a, b, c] = [0; 3].map(|_| VertexId(rng.gen_range(0..nv)));
        let ab = e.distance(&mut ws, a, b).unwrap().length;
        let ba = e.distance(&mut ws, b, a).unwrap().length;
        let bc = e.distance(&mut ws, b, c).unwrap().length;
        let ac = e.distance(&mut ws, a, c).unwrap().length;
        assert!((ab - ba).abs() <= 1e-10 * ab.max(1.0));
        assert!(ac <= ab + bc + 1e-9);
        let path = e.dijkstra_path(&mut ws, a, b).unwrap();
        assert!(ab <= path.length + 1e-12);
    }
}

#[test]
fn workspace_resets_exactly() {
    let spec = SurfaceSpec::torus(2.0, 0.7).unwrap();
    let m = IntrinsicMesh::build_uniform(&spec, 25, 17).unwrap();
    let e = GeodesicEngine::new(&m);
    let mut ws = e.workspace();
    let first = e.distance(&mut ws, VertexId(0), VertexId(200)).unwrap();
    for t in 1..50 {
        e.distance(&mut ws, VertexId(t), VertexId(300 - t)).unwrap();
    }
    assert_eq!(ws.he.next, m.he.next);
    assert_eq!(ws.he.len, m.he.len);
    assert_eq!(ws.phi, e.base_phi);
    let again = e.distance(&mut ws, VertexId(0), VertexId(200)).unwrap();
    assert_eq!(first.length.to_bits(), again.length.to_bits());
}

#[test]
fn traced_path_follows_straight_line() {
    let m = plane(11);
    let (a, b) = (VertexId(0), VertexId(10 * 11 + 4));
    let g = geodesic_distance(&m, a, b).unwrap();
    let (p, q) = (m.vertex_param(a), m.vertex_param(b));
    assert!((g.length - p.dist(q)).abs() < 1e-12);
    let pts = g.params(&m);
    assert!(pts.len() > 2);
    for x in &pts {
        let cross = (q.u - p.u) * (x.v - p.v) - (q.v - p.v) * (x.u - p.u);
        assert!(cross.abs() < 1e-9, "{x:?} off the segment");
    }
    assert!(pts.last().unwrap().dist(q) < 1e-9);
}

#[test]
fn traced_path_on_bump_is_surface_curve_of_right_length() {
    let spec = SurfaceSpec::with_defaults(SurfaceKind::GaussianBump { amplitude: 0.3, sigma: 0.4, center_u: 0.0, center_v: 0.0 })
        .unwrap();
    let m = IntrinsicMesh::build_uniform(&spec, 41, 41).unwrap();
    let a = VertexId(20 * 41 + 2);
    let b = VertexId(20 * 41 + 38);
    let g = geodesic_distance(&m, a, b).unwrap();
    let straight = spec.induced_length(m.vertex_param(a), m.vertex_param(b)).unwrap();
    // the straight line over the bump is longer than the geodesic around it
    assert!(g.length < straight);
    let pts = g.params(&m);
    let poly: f64 = pts.windows(2).map(|w| spec.eval_raw(w[0].u, w[0].v).dist(spec.eval_raw(w[1].u, w[1].v))).sum();
    assert!((poly - g.length).abs() < 1e-3 * g.length, "{poly} vs {}", g.length);
}

#[test]
fn field_on_plane_matches_point_distances() {
    let spec = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let mut m = IntrinsicMesh::build_uniform(&spec, 31, 31).unwrap();
    let curve = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.5, 400, &spec).unwrap();
    let set = discretize(&curve, 64, &spec).unwrap();
    let sites = AnchoredSites::insert(&mut m, vec![set]).unwrap();
    let field = build_distance_field(&m, &sites, 0.3, &FieldOptions::default()).unwrap();
    let mut checked = 0;
    for v in 0..m.n_vertices() {
        let r = field.records[v];
        let p = m.vertex_param(VertexId(v as u32));
        let exact = (0..sites.len()).map(|s| sites.param(SiteId(s as u32)).dist(p)).fold(f64::INFINITY, f64::min);
        if r.finalized {
            assert!((r.distance - exact).abs() < 1e-9, "vertex {v}: {} vs {exact}", r.distance);
            checked += 1;
        } else {
            assert!(exact > 0.3 - 1e-12);
        }
    }
    assert!(checked > 200);
    assert!(detect_field_inconsistency(&m, &field).is_empty());
}

#[test]
fn detector_flags_corrupted_initialisation() {
    let spec = SurfaceSpec::torus(2.0, 0.7).unwrap();
    let mut m = IntrinsicMesh::build_uniform(&spec, 61, 31).unwrap();
    let curve = SourceCurve::circle_uv(ParamPoint::new(PI, PI), 1.0, 400, &spec).unwrap();
    let set = discretize(&curve, 80, &spec).unwrap();
    let sites = AnchoredSites::insert(&mut m, vec![set]).unwrap();
    let clean = build_distance_field(&m, &sites, 1.0, &FieldOptions::default()).unwrap();
    assert!(detect_field_inconsistency(&m, &clean).is_empty());
    let opts = FieldOptions { init: InitStrategy::RandomWaypoints { waypoints: 3, fraction: 0.3, seed: 42 }, ..Default::default() };
    let broken = build_distance_field(&m, &sites, 1.0, &opts).unwrap();
    assert!(!detect_field_inconsistency(&m, &broken).is_empty());
}

#[test]
fn site_adjacency_wraps_on_closed_curves() {
    let spec = SurfaceSpec::plane(Domain::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let mut m = IntrinsicMesh::build_uniform(&spec, 11, 11).unwrap();
    let c = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.5, 40, &spec).unwrap();
    let o = SourceCurve::line_uv(ParamPoint::new(-0.9, -0.9), ParamPoint::new(0.9, -0.9), 40, false, &spec).unwrap();
    let sites =
        AnchoredSites::insert(&mut m, vec![discretize(&c, 8, &spec).unwrap(), discretize(&o, 5, &spec).unwrap()]).unwrap();
    assert_eq!(sites.neighbors(SiteId(0)).collect::<Vec<_>>(), vec![SiteId(7), SiteId(1)]);
    assert_eq!(sites.neighbors(SiteId(8)).collect::<Vec<_>>(), vec![SiteId(9)]);
    assert_eq!(sites.neighbors(SiteId(12)).collect::<Vec<_>>(), vec![SiteId(11)]);
    assert_eq!(sites.locate(SiteId(10)), (1, 2));
}


#[test]
#[ignore]
fn timing_sphere_field() {
    let spec = SurfaceSpec::sphere(1.0).unwrap();
    let t0 = std::time::Instant::now();
    let mut m = IntrinsicMesh::build_uniform(&spec, 225, 113).unwrap();
    println!("mesh {:?} faces {}", t0.elapsed(), m.n_faces());
    let curve = SourceCurve::line_uv(ParamPoint::new(0.0, 0.0), ParamPoint::new(TAU, 0.0), 4000, true, &spec).unwrap();
    let set = discretize(&curve, 2000, &spec).unwrap();
    let t0 = std::time::Instant::now();
    let sites = AnchoredSites::insert(&mut m, vec![set]).unwrap();
    println!("insert {:?}", t0.elapsed());
    let t0 = std::time::Instant::now();
    let field = build_distance_field(&m, &sites, 0.35, &FieldOptions::default()).unwrap();
    println!("field {:?} queries {} finalized {} nonconv {}", t0.elapsed(), field.queries, field.finalized_count(), field.non_converged);
    let mut worst: f64 = 0.0;
    let mut mean = 0.0;
    for v in 0..m.n_vertices() {
        let r = field.records[v];
        if r.finalized && r.distance > 0.01 {
            let lat = m.vertex_param(VertexId(v as u32)).v.abs();
            worst = worst.max((r.distance - lat).abs() / lat);
            mean += (r.distance - lat).abs() / lat;
        }
    }
    println!("worst rel {worst} mean {}", mean / field.finalized_count() as f64);
}
