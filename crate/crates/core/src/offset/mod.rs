//! Offset level set extraction over the labeled refinement.
//!
//! A level crossing is computed once per refined edge, so the two faces sharing the edge see
//! the same point and the segments stitch exactly. Along the edge the squared site distance is
//! quadratic; its curvature comes from the face's site and its end values from the vertices.

#[cfg(test)]
mod tests;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{AnchoredSites, GeodesicEngine};
use crate::mesh::{FaceId, IntrinsicMesh, SiteId, UnfoldedTriangle, VertexId};
use crate::surface::{ParamPoint, SurfacePoint, SurfaceSpec};
use crate::voronoi::{bary_uv, interpolated_distance, LabeledFace, LabeledMesh};

/// Lifted polylines deviate from the surface by less than this fraction of the model diameter.
pub const LIFT_TOLERANCE: f64 = 1e-4;

/// Segments inside a face are subdivided until they follow the level within this fraction of the
/// model diameter.
pub const LEVEL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetVertex {
    pub param: ParamPoint,
    pub site: SiteId,
    /// Original mesh face holding the point, with barycentric coordinates in it.
    pub face: FaceId,
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetPolyline {
    pub points: Vec<OffsetVertex>,
    pub closed: bool,
    /// Surface points of the densified polyline.
    pub lifted: Vec<SurfacePoint>,
}

impl OffsetPolyline {
    pub fn params(&self) -> Vec<ParamPoint> {
        self.points.iter().map(|p| p.param).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetResult {
    pub polylines: Vec<OffsetPolyline>,
    pub offset_distance: f64,
    /// Open polylines that stop at the domain boundary or at the edge of the finalized region.
    pub clipped: usize,
}

impl OffsetResult {
    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(|p| p.points.len()).sum()
    }
}

/// The `d` level of the linear field over one triangle, oriented with smaller values on the left.
///
/// Corner values equal to `d` count as above it.
pub fn face_level_segment(dist: [f64; 3], tri: &UnfoldedTriangle, d: f64) -> Option<[[f64; 2]; 2]> {
    let above = dist.map(|x| x >= d);
    if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
        return None;
    }
    let (mut start, mut end) = (None, None);
    for k in 0..3 {
        let j = (k + 1) % 3;
        if above[k] == above[j] {
            continue;
        }
        let t = ((d - dist[k]) / (dist[j] - dist[k])).clamp(0.0, 1.0);
        let (p, q) = (tri.p[k], tri.p[j]);
        let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        if above[j] {
            start = Some(x);
        } else {
            end = Some(x);
        }
    }
    Some([start?, end?])
}

struct Crossing {
    point: OffsetVertex,
}

/// Extracts the offset at distance `d` and lifts it to the surface.
pub fn extract_offset(lab: &LabeledMesh, d: f64) -> Result<OffsetResult> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Config(format!("offset distance must be positive, got {d}")));
    }
    if d >= lab.cutoff {
        return Err(Error::Config(format!("offset distance {d} must be below the field cutoff {}", lab.cutoff)));
    }
    let spec = &lab.spec;
    let value = |v: u32| lab.vertices[v as usize].distance;

    let tol = LEVEL_TOLERANCE * spec.diameter();
    // crossings per refined edge, ordered along the edge from its smaller vertex id
    let mut index: HashMap<(u32, u32), Vec<(f64, u32)>> = HashMap::new();
    let mut crossings: Vec<Crossing> = Vec::new();
    // directed segments between crossing ids, with the points between them
    let mut segments: Vec<(u32, u32)> = Vec::new();
    let mut interior: Vec<Vec<OffsetVertex>> = Vec::new();
    for face in &lab.faces {
        let vals = face.vertices.map(value);
        if vals.iter().all(|&x| x < d) {
            continue;
        }
        // boundary crossings in counterclockwise order; true where the boundary enters the region above d
        let mut events: Vec<(u32, bool, [f64; 3])> = Vec::new();
        for k in 0..3 {
            let j = (k + 1) % 3;
            let (a, b) = if face.vertices[k] < face.vertices[j] { (k, j) } else { (j, k) };
            let key = (face.vertices[a], face.vertices[b]);
            let list = index.entry(key).or_insert_with(|| {
                edge_roots(face, a, b, vals[a], vals[b], d)
                    .into_iter()
                    .map(|t| {
                        let uv = face.uv[a].lerp(face.uv[b], t);
                        let bary = [0, 1, 2].map(|i| face.bary[a][i] + t * (face.bary[b][i] - face.bary[a][i]));
                        crossings.push(Crossing {
                            point: OffsetVertex { param: spec.wrap(uv), site: face.site, face: face.parent, bary },
                        });
                        (t, (crossings.len() - 1) as u32)
                    })
                    .collect()
            });
            let mut hits: Vec<(f64, u32)> = list.clone();
            if a != k {
                hits.reverse();
            }
            let mut above = vals[k] >= d;
            for (t, id) in hits {
                above = !above;
                let bary = [0, 1, 2].map(|i| face.bary[a][i] + t * (face.bary[b][i] - face.bary[a][i]));
                events.push((id, above, bary));
            }
        }
        let m = events.len();
        for i in 0..m {
            if !events[i].1 {
                continue;
            }
            let Some(e) = (1..m).map(|o| events[(i + o) % m]).find(|x| !x.1) else { continue };
            let (s, _, from) = events[i];
            if s != e.0 {
                segments.push((s, e.0));
                interior.push(follow_level(lab, face, from, e.2, d, tol));
            }
        }
    }

    let chains = stitch(crossings.len(), &segments);
    let mut clipped = 0;
    let polylines: Vec<OffsetPolyline> = chains
        .into_par_iter()
        .map(|chain| {
            let m = chain.nodes.len();
            let mut points: Vec<OffsetVertex> = Vec::with_capacity(m);
            for (i, &node) in chain.nodes.iter().enumerate() {
                points.push(crossings[node as usize].point);
                if let Some(&s) = chain.links.get(i) {
                    if segments[s].0 == node {
                        points.extend(interior[s].iter().copied());
                    } else {
                        points.extend(interior[s].iter().rev().copied());
                    }
                }
            }
            let closed = chain.closed;
            let eps = 1e-12 * spec.domain().extent();
            let same = |a: &OffsetVertex, b: &OffsetVertex| spec.unwrap_near(b.param, a.param).dist(a.param) <= eps;
            points.dedup_by(|b, a| same(a, b));
            while closed && points.len() > 1 && same(points.last().unwrap(), &points[0]) {
                points.pop();
            }
            let lifted = lift(spec, &points.iter().map(|p| p.param).collect::<Vec<_>>(), closed);
            OffsetPolyline { points, closed, lifted }
        })
        .collect();
    for p in &polylines {
        if !p.closed {
            clipped += 1;
        }
    }
    if clipped > 0 {
        tracing::warn!(clipped, "offset stops at the domain boundary or the edge of the finalized region");
    }
    Ok(OffsetResult { polylines, offset_distance: d, clipped })
}

/// Roots in `[0, 1]` of the squared distance minus `d²` along corner `a` to corner `b`.
///
/// The squared interpolant is convex along a segment, so an edge with both ends above `d` is
/// crossed either twice or not at all.
fn edge_roots(face: &LabeledFace, a: usize, b: usize, va: f64, vb: f64, d: f64) -> Vec<f64> {
    let at = |t: f64| {
        let bary = [0, 1, 2].map(|i| face.bary[a][i] + t * (face.bary[b][i] - face.bary[a][i]));
        face.site_distance(bary).powi(2)
    };
    let curvature = 2.0 * at(0.0) - 4.0 * at(0.5) + 2.0 * at(1.0);
    let (g0, g1) = (va * va - d * d, vb * vb - d * d);
    let g = |t: f64| curvature * t * t + (g1 - g0 - curvature) * t + g0;
    let root = |mut lo: f64, mut hi: f64| {
        let below = g(lo) < 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) < 0.0) == below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    if (g0 < 0.0) != (g1 < 0.0) {
        return vec![root(0.0, 1.0)];
    }
    if g0 >= 0.0 && curvature > 0.0 {
        let t = (curvature + g0 - g1) / (2.0 * curvature);
        if t > 0.0 && t < 1.0 && g(t) < 0.0 {
            return vec![root(0.0, t), root(t, 1.0)];
        }
    }
    Vec::new()
}

/// Points inside `face` where its site distance equals `d`, between two level points given as
/// parent barycentric coordinates.
fn follow_level(lab: &LabeledMesh, face: &LabeledFace, from: [f64; 3], to: [f64; 3], d: f64, tol: f64) -> Vec<OffsetVertex> {
    let l = face.parent_lengths;
    let parent = UnfoldedTriangle::from_lengths(l[0], l[1], l[2]);
    let local = UnfoldedTriangle { p: face.bary.map(|b| parent.point(b)) };
    if local.area() <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    refine(lab, face, &parent, &local, parent.point(from), parent.point(to), d, tol, 0, &mut out);
    out.into_iter()
        .map(|x| {
            let lam = local.barycentric(x);
            let bary = [0, 1, 2].map(|i| (0..3).map(|k| lam[k] * face.bary[k][i]).sum());
            OffsetVertex { param: lab.spec.wrap(bary_uv(&face.uv, lam)), site: face.site, face: face.parent, bary }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn refine(
    lab: &LabeledMesh,
    face: &LabeledFace,
    parent: &UnfoldedTriangle,
    local: &UnfoldedTriangle,
    p: [f64; 2],
    q: [f64; 2],
    d: f64,
    tol: f64,
    depth: u32,
    out: &mut Vec<[f64; 2]>,
) {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let c = dx.hypot(dy);
    if depth >= 8 || c <= tol {
        return;
    }
    // larger values lie to the right of the segment
    let n = [dy / c, -dx / c];
    let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let at = |s: f64| [m[0] + s * n[0], m[1] + s * n[1]];
    let h = |s: f64| face.site_distance(parent.barycentric(at(s))) - d;
    let h0 = h(0.0);
    let reach = if h0 < 0.0 { c } else { -c };
    if (h(reach) < 0.0) == (h0 < 0.0) {
        return;
    }
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0) == (h0 < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let x = at(s);
    let b = parent.barycentric(x);
    if s.abs() <= tol || b.iter().any(|&v| v < -1e-9) || !lab.site_wins(face, b) {
        return;
    }
    refine(lab, face, parent, local, p, x, d, tol, depth + 1, out);
    out.push(x);
    refine(lab, face, parent, local, x, q, d, tol, depth + 1, out);
}

struct Chain {
    nodes: Vec<u32>,
    /// Segment joining node `i` to node `i + 1`, wrapping for closed chains.
    links: Vec<usize>,
    closed: bool,
}

/// Joins directed segments into maximal chains, each oriented along most of its segments.
fn stitch(n: usize, segments: &[(u32, u32)]) -> Vec<Chain> {
    let mut adj: Vec<Vec<(u32, usize)>> = vec![Vec::new(); n];
    for (i, &(a, b)) in segments.iter().enumerate() {
        adj[a as usize].push((b, i));
        adj[b as usize].push((a, i));
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start: u32, used: &mut Vec<bool>| -> Option<Chain> {
        let mut nodes = vec![start];
        let mut links = Vec::new();
        let mut cur = start;
        loop {
            let next = adj[cur as usize].iter().find(|(_, s)| !used[*s]).copied();
            let Some((w, s)) = next else { break };
            used[s] = true;
            nodes.push(w);
            links.push(s);
            cur = w;
            if w == start {
                break;
            }
        }
        if nodes.len() < 2 {
            return None;
        }
        let closed = nodes.first() == nodes.last();
        if closed {
            nodes.pop();
        }
        Some(Chain { nodes, links, closed })
    };
    // open chains start at odd-degree crossings
    for v in 0..n as u32 {
        if adj[v as usize].len() % 2 == 1 {
            if let Some(c) = walk(v, &mut used) {
                chains.push(c);
            }
        }
    }
    for v in 0..n as u32 {
        while adj[v as usize].iter().any(|(_, s)| !used[*s]) {
            if let Some(c) = walk(v, &mut used) {
                chains.push(c);
            }
        }
    }
    let dir: HashMap<(u32, u32), ()> = segments.iter().map(|&s| (s, ())).collect();
    for chain in chains.iter_mut() {
        let m = chain.nodes.len();
        let forward = (0..chain.links.len())
            .filter(|&i| dir.contains_key(&(chain.nodes[i], chain.nodes[(i + 1) % m])))
            .count();
        if 2 * forward < chain.links.len() {
            chain.nodes.reverse();
            if chain.closed {
                chain.links[..m - 1].reverse();
            } else {
                chain.links.reverse();
            }
        }
    }
    chains
}

/// Surface points along a parameter polyline, subdivided until chords stay within tolerance.
pub fn lift(spec: &SurfaceSpec, params: &[ParamPoint], closed: bool) -> Vec<SurfacePoint> {
    let tol = LIFT_TOLERANCE * spec.diameter();
    let mut out = Vec::with_capacity(params.len() * 2);
    let n = params.len();
    if n == 0 {
        return out;
    }
    let links = if closed { n } else { n - 1 };
    out.push(spec.eval_raw(params[0].u, params[0].v));
    for i in 0..links {
        let a = params[i];
        let b = spec.unwrap_near(params[(i + 1) % n], a);
        subdivide(spec, a, b, spec.eval_raw(a.u, a.v), spec.eval_raw(b.u, b.v), tol, 0, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn subdivide(
    spec: &SurfaceSpec,
    a: ParamPoint,
    b: ParamPoint,
    pa: SurfacePoint,
    pb: SurfacePoint,
    tol: f64,
    depth: u32,
    out: &mut Vec<SurfacePoint>,
) {
    let m = a.lerp(b, 0.5);
    let pm = spec.eval_raw(m.u, m.v);
    let chord_mid = SurfacePoint::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y), 0.5 * (pa.z + pb.z));
    if depth < 30 && pm.dist(chord_mid) > tol {
        subdivide(spec, a, m, pa, pm, tol, depth + 1, out);
        subdivide(spec, m, b, pm, pb, tol, depth + 1, out);
    } else {
        out.push(pb);
    }
}

/// Distances from every mesh vertex to every site by independent exact geodesics.
pub fn exhaustive_distances(mesh: &IntrinsicMesh, sites: &AnchoredSites) -> Result<Vec<Vec<f64>>> {
    let engine = GeodesicEngine::new(mesh);
    (0..mesh.n_vertices() as u32)
        .into_par_iter()
        .map_init(
            || engine.workspace(),
            |ws, v| {
                sites
                    .vertices()
                    .iter()
                    .map(|&s| Ok(engine.distance(ws, VertexId(v), s)?.length))
                    .collect::<Result<Vec<f64>>>()
            },
        )
        .collect()
}

/// Reference offset: the `d` level of the lower envelope of all sites' interpolated exact
/// distances, with crossings solved on the edges of each face subdivided `sub` times per side.
pub fn brute_force_offset(mesh: &IntrinsicMesh, sites: &AnchoredSites, d: f64, sub: usize) -> Result<Vec<ParamPoint>> {
    let table = exhaustive_distances(mesh, sites)?;
    Ok(brute_force_offset_with(mesh, &table, d, sub))
}

pub fn brute_force_offset_with(mesh: &IntrinsicMesh, table: &[Vec<f64>], d: f64, sub: usize) -> Vec<ParamPoint> {
    let sub = sub.max(1);
    let spec = mesh.spec();
    (0..mesh.n_faces() as u32)
        .into_par_iter()
        .flat_map_iter(|f| {
            let f = FaceId(f);
            let vs = mesh.face_vertices(f);
            let uv = mesh.face_params(f);
            let lengths = mesh.face_lengths(f);
            let value = |b: [f64; 3]| {
                (0..table[0].len())
                    .map(|s| interpolated_distance(vs.map(|v| table[v.idx()][s]), lengths, b))
                    .fold(f64::INFINITY, f64::min)
            };
            let node = |i: usize, j: usize| {
                let b = [(sub - i - j) as f64 / sub as f64, i as f64 / sub as f64, j as f64 / sub as f64];
                (b, value(b))
            };
            let mut pts = Vec::new();
            for i in 0..sub {
                for j in 0..sub - i {
                    let mut tris = vec![[node(i, j), node(i + 1, j), node(i, j + 1)]];
                    if i + j + 1 < sub {
                        tris.push([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
                    }
                    for t in tris {
                        for k in 0..3 {
                            let (a, b) = (t[k], t[(k + 1) % 3]);
                            if (a.1 >= d) != (b.1 >= d) {
                                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                                for _ in 0..60 {
                                    let mid = 0.5 * (lo + hi);
                                    let x = [0, 1, 2].map(|c| a.0[c] + mid * (b.0[c] - a.0[c]));
                                    if (value(x) >= d) == (a.1 >= d) {
                                        lo = mid;
                                    } else {
                                        hi = mid;
                                    }
                                }
                                let s = 0.5 * (lo + hi);
                                let bary = [0, 1, 2].map(|c| a.0[c] + s * (b.0[c] - a.0[c]));
                                pts.push(spec.wrap(bary_uv(&uv, bary)));
                            }
                        }
                    }
                }
            }
            pts
        })
        .collect()
}
