//! Geodesic Voronoi decomposition of the sites, emitted as a refined labeled triangulation.
//!
//! Within a face, the distance to one site is interpolated through its squared corner
//! distances, which is exact on flat metrics. The squared interpolants of different sites differ
//! by a linear function, so each original face is cut by the lower envelope of planes. Candidate sets grow until every face agrees with its neighbours on which sites win
//! along their shared edge, so cell boundaries meet across faces. Breakpoints on original
//! edges are computed once per edge and shared by both faces.

mod cut;
#[cfg(test)]
mod tests;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{AnchoredSites, DistanceField, GeodesicEngine};
use crate::mesh::{EdgeId, FaceId, IntrinsicMesh, SiteId, UnfoldedTriangle, VertexId};
use crate::surface::{ParamPoint, SurfaceSpec};

pub use cut::{cut_triangle, Candidate, SubPolygon};
pub(crate) use cut::envelope_1d;
pub use cut::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Original,
    VoronoiVertex,
    Site,
}

/// Where a refined vertex sits on the original mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Host {
    Vertex(VertexId),
    /// Fraction `t` along the edge from its first to its second vertex.
    Edge { edge: EdgeId, t: f64 },
    Face { face: FaceId, bary: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledVertex {
    pub param: ParamPoint,
    pub distance: f64,
    pub kind: VertexKind,
    pub host: Host,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledFace {
    pub vertices: [u32; 3],
    pub site: SiteId,
    pub parent: FaceId,
    /// Corner positions as barycentric coordinates in the parent face.
    pub bary: [[f64; 3]; 3],
    /// Corner parameters unwrapped into the parent face's frame.
    pub uv: [ParamPoint; 3],
    /// Distances from the site to the parent face's corners.
    pub corner_distance: [f64; 3],
    /// Parent face edge lengths, edge `k` running from corner `k` to corner `k + 1`.
    pub parent_lengths: [f64; 3],
}

impl LabeledFace {
    /// Interpolated distance to this face's site at barycentric `b` of the parent face.
    pub fn site_distance(&self, b: [f64; 3]) -> f64 {
        interpolated_distance(self.corner_distance, self.parent_lengths, b)
    }
}

/// Squared-distance interpolation over a triangle with edge lengths `l` and corner values `d`.
///
/// For a point source in the plane, `|x - s|² = Σ bₖ dₖ² - Σ bᵢ bⱼ lᵢⱼ²` holds exactly.
pub fn interpolated_distance(d: [f64; 3], l: [f64; 3], b: [f64; 3]) -> f64 {
    squared_interpolant(d, l, b).max(0.0).sqrt()
}

fn squared_interpolant(d: [f64; 3], l: [f64; 3], b: [f64; 3]) -> f64 {
    b[0] * d[0] * d[0] + b[1] * d[1] * d[1] + b[2] * d[2] * d[2]
        - b[0] * b[1] * l[0] * l[0]
        - b[1] * b[2] * l[1] * l[1]
        - b[2] * b[0] * l[2] * l[2]
}

/// Interpolated distance at fraction `t` along an edge of length `l` with end values `a`, `b`.
pub fn edge_distance(a: f64, b: f64, l: f64, t: f64) -> f64 {
    ((1.0 - t) * a * a + t * b * b - t * (1.0 - t) * l * l).max(0.0).sqrt()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VoronoiStats {
    pub rounds: usize,
    pub queries: usize,
    pub max_candidates: usize,
    pub cut_faces: usize,
}

#[derive(Debug, Clone)]
pub struct LabeledMesh {
    pub vertices: Vec<LabeledVertex>,
    pub faces: Vec<LabeledFace>,
    /// Candidate sites per original face with their corner distances; empty outside the
    /// finalized region.
    pub candidates: Vec<Vec<Candidate>>,
    pub cutoff: f64,
    pub spec: SurfaceSpec,
    pub stats: VoronoiStats,
}

impl LabeledMesh {
    /// Whether `face`'s site is nearest among its parent's candidates at barycentric `b`.
    pub fn site_wins(&self, face: &LabeledFace, b: [f64; 3]) -> bool {
        let own = face.site_distance(b);
        let slack = 1e-12 * (1.0 + own);
        self.candidates[face.parent.idx()]
            .iter()
            .all(|c| interpolated_distance(c.dist, face.parent_lengths, b) >= own - slack)
    }

    /// Sites that own at least one face.
    pub fn labels(&self) -> Vec<SiteId> {
        let mut l: Vec<SiteId> = self.faces.iter().map(|f| f.site).collect();
        l.sort();
        l.dedup();
        l
    }
}

/// Exact vertex-to-site distances gathered so far, sorted by site per vertex.
struct DistanceTable {
    rows: Vec<Vec<(SiteId, f64)>>,
}

impl DistanceTable {
    fn get(&self, v: VertexId, s: SiteId) -> Option<f64> {
        let row = &self.rows[v.idx()];
        row.binary_search_by_key(&s, |x| x.0).ok().map(|i| row[i].1)
    }

    fn at(&self, v: VertexId, s: SiteId) -> f64 {
        self.get(v, s).expect("distance computed before use")
    }

    fn min(&self, v: VertexId) -> f64 {
        self.rows[v.idx()].iter().map(|x| x.1).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the labeled refinement over every face whose corners are all finalized.
pub fn compute_voronoi(mesh: &IntrinsicMesh, field: &DistanceField, sites: &AnchoredSites) -> Result<LabeledMesh> {
    let nf = mesh.n_faces();
    let ne = mesh.n_edges();
    let engine = GeodesicEngine::new(mesh);
    let corners: Vec<[VertexId; 3]> = (0..nf as u32).map(|f| mesh.face_vertices(FaceId(f))).collect();
    let working: Vec<bool> = corners.iter().map(|c| c.iter().all(|v| field.records[v.idx()].finalized)).collect();
    for (f, c) in corners.iter().enumerate() {
        if !working[f] && c.iter().any(|&v| sites.site_at(v).is_some()) {
            return Err(Error::Internal(format!(
                "face {f} holds a site but lies outside the finalized region; the cutoff is too small"
            )));
        }
    }

    let mut table = DistanceTable {
        rows: field
            .refined
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.sort_by_key(|x| x.0);
                r.dedup_by_key(|x| x.0);
                r
            })
            .collect(),
    };
    let mut cand: Vec<Vec<SiteId>> = (0..nf)
        .map(|f| {
            if !working[f] {
                return Vec::new();
            }
            let mut c: Vec<SiteId> =
                corners[f].iter().filter_map(|v| field.records[v.idx()].nearest_site).collect();
            c.sort();
            c.dedup();
            c
        })
        .collect();
    let edge_faces: Vec<[Option<FaceId>; 2]> = (0..ne as u32)
        .map(|e| {
            let g = |h: u32| {
                let f = mesh.he.face[h as usize];
                (f != crate::mesh::NONE && working[f as usize]).then_some(FaceId(f))
            };
            [g(2 * e), g(2 * e + 1)]
        })
        .collect();

    let mut stats = VoronoiStats::default();
    let mut dirty = working.clone();
    loop {
        stats.rounds += 1;
        let mut need: Vec<(VertexId, SiteId)> = Vec::new();
        for f in (0..nf).filter(|&f| dirty[f]) {
            for &v in &corners[f] {
                for &s in &cand[f] {
                    if table.get(v, s).is_none() {
                        need.push((v, s));
                    }
                }
            }
        }
        need.sort();
        need.dedup();
        let found: Vec<Result<f64>> = need
            .par_iter()
            .with_min_len(16)
            .map_init(|| engine.workspace(), |ws, &(v, s)| Ok(engine.distance(ws, v, sites.vertex(s))?.length))
            .collect();
        stats.queries += need.len();
        for (&(v, s), d) in need.iter().zip(found) {
            table.rows[v.idx()].push((s, d?));
        }
        for &(v, _) in &need {
            table.rows[v.idx()].sort_by_key(|x| x.0);
        }

        let additions: Vec<(FaceId, SiteId)> = (0..ne)
            .into_par_iter()
            .flat_map_iter(|e| {
                let mut add = Vec::new();
                if let [Some(f), Some(g)] = edge_faces[e] {
                    if dirty[f.idx()] || dirty[g.idx()] {
                        let all = union(&cand[f.idx()], &cand[g.idx()]);
                        let (winners, _) = edge_envelope(mesh, &table, EdgeId(e as u32), &all);
                        for face in [f, g] {
                            add.extend(winners.iter().filter(|w| cand[face.idx()].binary_search(w).is_err()).map(|&w| (face, w)));
                        }
                    }
                }
                add
            })
            .collect();
        let mut next = vec![false; nf];
        let any = !additions.is_empty();
        for (f, w) in additions {
            if let Err(i) = cand[f.idx()].binary_search(&w) {
                cand[f.idx()].insert(i, w);
                next[f.idx()] = true;
            }
        }
        if !any {
            break;
        }
        dirty = next;
    }
    stats.max_candidates = cand.iter().map(Vec::len).max().unwrap_or(0);
    stats.cut_faces = working.iter().filter(|&&w| w).count();

    let breaks: Vec<Option<(Vec<SiteId>, Vec<f64>)>> = (0..ne)
        .into_par_iter()
        .map(|e| {
            let sets: Vec<&Vec<SiteId>> = edge_faces[e].iter().flatten().map(|f| &cand[f.idx()]).collect();
            match sets.as_slice() {
                [] => None,
                [a] => Some(edge_envelope(mesh, &table, EdgeId(e as u32), a)),
                [a, b] => Some(edge_envelope(mesh, &table, EdgeId(e as u32), &union(a, b))),
                _ => unreachable!(),
            }
        })
        .collect();

    let pieces: Vec<(UnfoldedTriangle, Vec<SubPolygon>, Vec<Candidate>)> = (0..nf)
        .into_par_iter()
        .map(|f| {
            if !working[f] {
                return (mesh.unfold(FaceId(f as u32)), Vec::new(), Vec::new());
            }
            let tri = mesh.unfold(FaceId(f as u32));
            let cands: Vec<Candidate> = cand[f]
                .iter()
                .map(|&s| Candidate { site: s, dist: corners[f].map(|v| table.at(v, s)) })
                .collect();
            let squared: Vec<Candidate> =
                cands.iter().map(|c| Candidate { site: c.site, dist: c.dist.map(|x| x * x) }).collect();
            (tri, cut_triangle(&tri, &squared), cands)
        })
        .collect();

    let mut asm = Assembly {
        mesh,
        sites,
        table: &table,
        breaks: &breaks,
        index: HashMap::new(),
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    for (f, (tri, polys, cands)) in pieces.iter().enumerate() {
        if working[f] {
            asm.add_face(FaceId(f as u32), tri, polys, cands);
        }
    }
    let Assembly { vertices, faces, .. } = asm;
    let candidates: Vec<Vec<Candidate>> = pieces.into_iter().map(|p| p.2).collect();
    tracing::debug!(
        rounds = stats.rounds,
        queries = stats.queries,
        faces = faces.len(),
        vertices = vertices.len(),
        "voronoi refinement built"
    );
    Ok(LabeledMesh { vertices, faces, candidates, cutoff: field.cutoff, spec: mesh.spec().clone(), stats })
}

fn union(a: &[SiteId], b: &[SiteId]) -> Vec<SiteId> {
    let mut u: Vec<SiteId> = a.iter().chain(b).copied().collect();
    u.sort();
    u.dedup();
    u
}

fn edge_envelope(mesh: &IntrinsicMesh, table: &DistanceTable, e: EdgeId, sites: &[SiteId]) -> (Vec<SiteId>, Vec<f64>) {
    let [a, b] = mesh.edge_vertices(e);
    let lines: Vec<(SiteId, f64, f64)> =
        sites.iter().map(|&s| (s, table.at(a, s).powi(2), table.at(b, s).powi(2))).collect();
    envelope_1d(&lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Vertex(u32),
    Edge(u32, u32),
    Interior(u32, u32),
}

struct Assembly<'a> {
    mesh: &'a IntrinsicMesh,
    sites: &'a AnchoredSites,
    table: &'a DistanceTable,
    breaks: &'a [Option<(Vec<SiteId>, Vec<f64>)>],
    index: HashMap<Key, u32>,
    vertices: Vec<LabeledVertex>,
    faces: Vec<LabeledFace>,
}

impl Assembly<'_> {
    fn add_face(&mut self, f: FaceId, tri: &UnfoldedTriangle, polys: &[SubPolygon], cands: &[Candidate]) {
        let mesh = self.mesh;
        let corners = mesh.face_vertices(f);
        let edges = mesh.face_edges(f);
        let uv = mesh.face_params(f);
        let lengths = mesh.face_lengths(f);
        let diam = cut::diameter(tri);
        let weld = 1e-8 * diam;

        // every snap target of this face with its local position
        let mut points: Vec<(Key, [f64; 2])> = (0..3).map(|k| (Key::Vertex(corners[k].0), tri.p[k])).collect();
        let mut side_points: [Vec<(f64, usize)>; 3] = Default::default();
        for k in 0..3 {
            let e = edges[k];
            let forward = mesh.edge_vertices(e)[0] == corners[k];
            let (p, q) = (tri.p[k], tri.p[(k + 1) % 3]);
            side_points[k].push((0.0, k));
            if let Some((_, bs)) = &self.breaks[e.idx()] {
                for (j, &t) in bs.iter().enumerate() {
                    let s = if forward { t } else { 1.0 - t };
                    side_points[k].push((s, points.len()));
                    points.push((Key::Edge(e.0, j as u32), [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]));
                }
            }
            side_points[k].push((1.0, (k + 1) % 3));
        }
        let n_fixed = points.len();

        let mut loops: Vec<(Vec<usize>, SiteId)> = Vec::new();
        for poly in polys {
            let mut ids: Vec<usize> = Vec::with_capacity(poly.points.len());
            for &x in &poly.points {
                let l = tri.barycentric(x);
                let id = if let Some(k) = (0..3).find(|&k| l[k] >= 1.0 - 1e-9) {
                    k
                } else if let Some(k) = (0..3).find(|&k| l[(k + 2) % 3] <= 1e-9) {
                    let s = l[(k + 1) % 3] / (l[k] + l[(k + 1) % 3]);
                    side_points[k]
                        .iter()
                        .min_by(|a, b| (a.0 - s).abs().total_cmp(&(b.0 - s).abs()))
                        .unwrap()
                        .1
                } else {
                    match (n_fixed..points.len()).find(|&i| dist(points[i].1, x) <= weld) {
                        Some(i) => i,
                        None => {
                            points.push((Key::Interior(f.0, (points.len() - n_fixed) as u32), x));
                            points.len() - 1
                        }
                    }
                };
                if ids.last() != Some(&id) {
                    ids.push(id);
                }
            }
            while ids.len() > 1 && ids.first() == ids.last() {
                ids.pop();
            }
            if ids.len() >= 3 {
                loops.push((ids, poly.site));
            }
        }

        for (ids, site) in loops {
            // split polygon sides at any other snap point lying on them
            let mut ring: Vec<usize> = Vec::with_capacity(ids.len() + 4);
            for i in 0..ids.len() {
                let (a, b) = (ids[i], ids[(i + 1) % ids.len()]);
                ring.push(a);
                let (pa, pb) = (points[a].1, points[b].1);
                let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
                let mut inner: Vec<(f64, usize)> = (0..points.len())
                    .filter(|&c| c != a && c != b)
                    .filter_map(|c| {
                        let pc = points[c].1;
                        let t = ((pc[0] - pa[0]) * (pb[0] - pa[0]) + (pc[1] - pa[1]) * (pb[1] - pa[1])) / len2;
                        let foot = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                        (t > 1e-9 && t < 1.0 - 1e-9 && dist(foot, pc) <= weld).then_some((t, c))
                    })
                    .collect();
                inner.sort_by(|x, y| x.0.total_cmp(&y.0));
                ring.extend(inner.into_iter().map(|x| x.1));
            }
            let gids: Vec<u32> = ring.iter().map(|&i| self.vertex(f, tri, &points[i], cands)).collect();
            for i in 1..ring.len() - 1 {
                let tri_ids = [ring[0], ring[i], ring[i + 1]];
                let bary = tri_ids.map(|c| tri.barycentric(points[c].1));
                self.faces.push(LabeledFace {
                    vertices: [gids[0], gids[i], gids[i + 1]],
                    site,
                    parent: f,
                    bary,
                    uv: bary.map(|b| bary_uv(&uv, b)),
                    corner_distance: cands.iter().find(|c| c.site == site).expect("label is a candidate").dist,
                    parent_lengths: lengths,
                });
            }
        }
    }

    fn vertex(&mut self, f: FaceId, tri: &UnfoldedTriangle, point: &(Key, [f64; 2]), cands: &[Candidate]) -> u32 {
        let (key, x) = *point;
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let mesh = self.mesh;
        let spec = mesh.spec();
        let bary = tri.barycentric(x);
        let param = spec.wrap(bary_uv(&mesh.face_params(f), bary));
        let v = match key {
            Key::Vertex(v) => {
                let v = VertexId(v);
                let kind = if self.sites.site_at(v).is_some() { VertexKind::Site } else { VertexKind::Original };
                LabeledVertex { param: mesh.vertex_param(v), distance: self.table.min(v), kind, host: Host::Vertex(v) }
            }
            Key::Edge(e, j) => {
                let (winners, bs) = self.breaks[e as usize].as_ref().unwrap();
                let t = bs[j as usize];
                let [a, b] = mesh.edge_vertices(EdgeId(e));
                let l = mesh.edge_length(EdgeId(e));
                let value = |s: SiteId| edge_distance(self.table.at(a, s), self.table.at(b, s), l, t);
                let distance = value(winners[j as usize]).min(value(winners[j as usize + 1]));
                LabeledVertex { param, distance, kind: VertexKind::VoronoiVertex, host: Host::Edge { edge: EdgeId(e), t } }
            }
            Key::Interior(..) => {
                let lengths = mesh.face_lengths(f);
                let distance =
                    cands.iter().map(|c| interpolated_distance(c.dist, lengths, bary)).fold(f64::INFINITY, f64::min);
                LabeledVertex { param, distance, kind: VertexKind::VoronoiVertex, host: Host::Face { face: f, bary } }
            }
        };
        let id = self.vertices.len() as u32;
        self.vertices.push(v);
        self.index.insert(key, id);
        id
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn bary_uv(uv: &[ParamPoint; 3], b: [f64; 3]) -> ParamPoint {
    ParamPoint::new(
        b[0] * uv[0].u + b[1] * uv[1].u + b[2] * uv[2].u,
        b[0] * uv[0].v + b[1] * uv[1].v + b[2] * uv[2].v,
    )
}
