//! Exact polyhedral geodesics by edge-flip shortening of an edge-graph path.
//!
//! Every query starts from a shortest path in the base edge graph, widened by hops across
//! the flipped diagonal of every convex quad, and runs FlipOut on a private copy of the
//! connectivity. Flips are recorded so the copy can be rolled back to
//! the base mesh in time proportional to the work done, which keeps batches deterministic.

mod field;
mod trace;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{edge, twin, FaceId, HalfEdges, IntrinsicMesh, Quad, VertexId, NONE};
use crate::surface::SurfacePoint;

pub use field::{
    build_distance_field, detect_field_inconsistency, AnchoredSites, DistanceField, FieldOptions, FieldRecord,
    FieldViolation, InitStrategy,
};

/// Wedge angles at or above `π - CONVERGENCE_EPS` count as straight.
pub const CONVERGENCE_EPS: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexPath {
    pub vertices: Vec<VertexId>,
    pub length: f64,
}

/// A point on a base-mesh face in barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub face: FaceId,
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResult {
    pub length: f64,
    /// Vertices of the shortened path in the flipped triangulation.
    pub intrinsic_vertices: Vec<VertexId>,
    /// The path traced over base-mesh faces, endpoints included.
    pub path: Vec<PathPoint>,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of a distance-only query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceQuery {
    pub length: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    key: f64,
    v: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Parent entries with this bit set index `hops` instead of half-edges.
const HOP_BIT: u32 = 1 << 31;

/// A step to the far corner of a convex quad, walked as two base half-edges.
#[derive(Debug, Clone, Copy)]
struct Hop {
    to: u32,
    first: u32,
    second: u32,
    len: f64,
}

/// Both diagonal hops of the quad around `q`, each routed over the shorter side.
fn quad_hops(he: &HalfEdges, q: &Quad, len: f64) -> [(u32, Hop); 2] {
    let via_a = he.hlen(q.h2) + he.hlen(q.t1);
    let via_b = he.hlen(q.h1) + he.hlen(q.t2);
    let (cd, dc) = if via_a <= via_b {
        ((q.h2, q.t1), (twin(q.t1), twin(q.h2)))
    } else {
        ((twin(q.h1), twin(q.t2)), (q.t2, q.h1))
    };
    [
        (q.c, Hop { to: q.d, first: cd.0, second: cd.1, len }),
        (q.d, Hop { to: q.c, first: dc.0, second: dc.1, len }),
    ]
}

/// Shared read-only data for geodesic queries on one base mesh.
pub struct GeodesicEngine<'m> {
    mesh: &'m IntrinsicMesh,
    positions: Vec<[f64; 3]>,
    adj_start: Vec<u32>,
    /// `(neighbor, half-edge)` pairs.
    adj: Vec<(u32, u32)>,
    hop_start: Vec<u32>,
    hops: Vec<Hop>,
    base_phi: Vec<f64>,
    angle_sum: Vec<f64>,
    boundary: Vec<bool>,
}

/// Per-thread mutable state: a copy of the connectivity plus search buffers.
pub struct Workspace {
    he: HalfEdges,
    phi: Vec<f64>,
    gen: u32,
    he_mark: Vec<u32>,
    touched_he: Vec<u32>,
    f_mark: Vec<u32>,
    touched_f: Vec<u32>,
    v_mark: Vec<u32>,
    touched_v: Vec<u32>,
    dist: Vec<f64>,
    parent: Vec<u32>,
    seen: Vec<u32>,
    heap: BinaryHeap<HeapItem>,
    occupancy: Vec<u16>,
    affected: Vec<u32>,
    pub track_signposts: bool,
}

impl<'m> GeodesicEngine<'m> {
    pub fn new(mesh: &'m IntrinsicMesh) -> Self {
        let he = &mesh.he;
        let spec = mesh.spec();
        let positions = mesh
            .vertex_params()
            .iter()
            .map(|p| spec.eval_raw(p.u, p.v).to_array())
            .collect();
        let nv = he.n_vertices();
        let mut adj_start = Vec::with_capacity(nv + 1);
        let mut adj = Vec::with_capacity(he.next.len());
        let mut base_phi = vec![0.0; he.next.len()];
        let mut angle_sum = vec![0.0; nv];
        let mut boundary = vec![false; nv];
        for v in 0..nv as u32 {
            adj_start.push(adj.len() as u32);
            let out = he.outgoing(v);
            let mut acc = 0.0;
            for &h in &out {
                adj.push((he.tip(h), h));
                base_phi[h as usize] = acc;
                if !he.is_boundary_he(h) {
                    acc += he.corner(h);
                }
            }
            angle_sum[v as usize] = acc;
            boundary[v as usize] = he.is_boundary_vertex(v);
        }
        adj_start.push(adj.len() as u32);
        let mut by_vertex: Vec<Vec<Hop>> = vec![Vec::new(); nv];
        for e in 0..he.n_edges() as u32 {
            if let Some(q) = he.quad(e) {
                if let Some(len) = he.flipped_length(&q) {
                    for (from, hop) in quad_hops(he, &q, len) {
                        by_vertex[from as usize].push(hop);
                    }
                }
            }
        }
        let mut hop_start = Vec::with_capacity(nv + 1);
        let mut hops = Vec::new();
        for list in by_vertex {
            hop_start.push(hops.len() as u32);
            hops.extend(list);
        }
        hop_start.push(hops.len() as u32);
        Self { mesh, positions, adj_start, adj, hop_start, hops, base_phi, angle_sum, boundary }
    }

    pub fn mesh(&self) -> &'m IntrinsicMesh {
        self.mesh
    }

    pub fn position(&self, v: VertexId) -> SurfacePoint {
        self.positions[v.idx()].into()
    }

    pub fn chord(&self, a: VertexId, b: VertexId) -> f64 {
        let (p, q) = (self.positions[a.idx()], self.positions[b.idx()]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }

    pub fn workspace(&self) -> Workspace {
        let nh = self.mesh.he.next.len();
        let nv = self.mesh.n_vertices();
        Workspace {
            he: self.mesh.he.clone(),
            phi: self.base_phi.clone(),
            gen: 1,
            he_mark: vec![0; nh],
            touched_he: Vec::new(),
            f_mark: vec![0; self.mesh.n_faces()],
            touched_f: Vec::new(),
            v_mark: vec![0; nv],
            touched_v: Vec::new(),
            dist: vec![f64::INFINITY; nv],
            parent: vec![NONE; nv],
            seen: vec![0; nv],
            heap: BinaryHeap::new(),
            occupancy: vec![0; nv],
            affected: vec![0; nv],
            track_signposts: true,
        }
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.idx() < self.mesh.n_vertices() {
            Ok(())
        } else {
            Err(Error::Config(format!("vertex {} does not exist", v.0)))
        }
    }

    /// Shortest path over edges and diagonal hops as base half-edges, by A* with the chord
    /// heuristic. The returned length counts hops at their diagonal length.
    ///
    /// Chords never exceed surface lengths, so the heuristic is consistent and the path optimal.
    /// Ties are broken towards the smaller vertex id.
    pub fn edge_path(&self, ws: &mut Workspace, s: VertexId, t: VertexId) -> Result<(Vec<u32>, f64)> {
        self.graph_path(ws, s, t, true)
    }

    fn graph_path(&self, ws: &mut Workspace, s: VertexId, t: VertexId, hops: bool) -> Result<(Vec<u32>, f64)> {
        self.check_vertex(s)?;
        self.check_vertex(t)?;
        if s == t {
            return Ok((Vec::new(), 0.0));
        }
        ws.gen = ws.gen.wrapping_add(1);
        if ws.gen == 0 {
            ws.seen.iter_mut().for_each(|x| *x = 0);
            ws.gen = 1;
        }
        let gen = ws.gen;
        let target = self.positions[t.idx()];
        let h = |v: u32| -> f64 {
            let p = self.positions[v as usize];
            ((p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2) + (p[2] - target[2]).powi(2)).sqrt()
                * (1.0 - 1e-9)
        };
        ws.heap.clear();
        ws.seen[s.idx()] = gen;
        ws.dist[s.idx()] = 0.0;
        ws.parent[s.idx()] = NONE;
        ws.heap.push(HeapItem { key: h(s.0), v: s.0 });
        let lens = &self.mesh.he.len;
        while let Some(HeapItem { key, v }) = ws.heap.pop() {
            let dv = ws.dist[v as usize];
            if key > dv + h(v) + 1e-15 * (1.0 + dv) {
                continue;
            }
            if v == t.0 {
                let mut path = Vec::new();
                let mut x = t.0;
                while x != s.0 {
                    let p = ws.parent[x as usize];
                    if p & HOP_BIT != 0 {
                        let hop = self.hops[(p & !HOP_BIT) as usize];
                        path.push(hop.second);
                        path.push(hop.first);
                        x = self.mesh.he.vert[hop.first as usize];
                    } else {
                        path.push(p);
                        x = self.mesh.he.vert[p as usize];
                    }
                }
                path.reverse();
                return Ok((path, dv));
            }
            for &(w, he) in &self.adj[self.adj_start[v as usize] as usize..self.adj_start[v as usize + 1] as usize] {
                let nd = dv + lens[edge(he) as usize];
                let wi = w as usize;
                if ws.seen[wi] != gen || nd < ws.dist[wi] {
                    ws.seen[wi] = gen;
                    ws.dist[wi] = nd;
                    ws.parent[wi] = he;
                    ws.heap.push(HeapItem { key: nd + h(w), v: w });
                }
            }
            let hop_range = if hops { self.hop_start[v as usize]..self.hop_start[v as usize + 1] } else { 0..0 };
            for k in hop_range {
                let hop = self.hops[k as usize];
                let nd = dv + hop.len;
                let wi = hop.to as usize;
                if ws.seen[wi] != gen || nd < ws.dist[wi] {
                    ws.seen[wi] = gen;
                    ws.dist[wi] = nd;
                    ws.parent[wi] = k | HOP_BIT;
                    ws.heap.push(HeapItem { key: nd + h(hop.to), v: hop.to });
                }
            }
        }
        Err(Error::Numerical(format!("vertices {} and {} are not connected", s.0, t.0)))
    }

    /// Base half-edges for a vertex path; consecutive vertices must share an edge.
    fn halfedges_of(&self, path: &VertexPath) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(path.vertices.len());
        for w in path.vertices.windows(2) {
            self.check_vertex(w[0])?;
            self.check_vertex(w[1])?;
            let range = self.adj_start[w[0].idx()] as usize..self.adj_start[w[0].idx() + 1] as usize;
            let he = self.adj[range]
                .iter()
                .find(|(n, _)| *n == w[1].0)
                .map(|(_, h)| *h)
                .ok_or_else(|| Error::Config(format!("vertices {} and {} are not adjacent", w[0].0, w[1].0)))?;
            out.push(he);
        }
        Ok(out)
    }

    fn vertex_path(&self, hes: &[u32], s: VertexId) -> VertexPath {
        let mut vertices = vec![s];
        let mut length = 0.0;
        for &h in hes {
            vertices.push(VertexId(self.mesh.he.tip(h)));
            length += self.mesh.he.hlen(h);
        }
        VertexPath { vertices, length }
    }

    pub fn dijkstra_path(&self, ws: &mut Workspace, s: VertexId, t: VertexId) -> Result<VertexPath> {
        let (hes, _) = self.edge_path(ws, s, t)?;
        Ok(self.vertex_path(&hes, s))
    }

    /// Geodesic distance between two vertices.
    pub fn distance(&self, ws: &mut Workspace, s: VertexId, t: VertexId) -> Result<DistanceQuery> {
        let (init, _) = self.edge_path(ws, s, t)?;
        Ok(self.shorten(ws, init, false)?.0)
    }

    /// Geodesic distance starting from plain edge-graph paths through intermediate waypoints.
    pub fn distance_via(&self, ws: &mut Workspace, s: VertexId, t: VertexId, waypoints: &[VertexId]) -> Result<DistanceQuery> {
        let mut init = Vec::new();
        let mut from = s;
        for &w in waypoints.iter().chain(std::iter::once(&t)) {
            init.extend(self.graph_path(ws, from, w, false)?.0);
            from = w;
        }
        remove_loops(&self.mesh.he, &mut init);
        Ok(self.shorten(ws, init, false)?.0)
    }

    /// Full geodesic with the path traced over the base mesh.
    pub fn geodesic(&self, ws: &mut Workspace, s: VertexId, t: VertexId) -> Result<GeodesicResult> {
        let (init, _) = self.edge_path(ws, s, t)?;
        self.finish(ws, init, s)
    }

    pub fn flip_shorten(&self, ws: &mut Workspace, init: &VertexPath) -> Result<GeodesicResult> {
        let s = *init.vertices.first().ok_or_else(|| Error::Config("empty path".into()))?;
        let hes = self.halfedges_of(init)?;
        self.finish(ws, hes, s)
    }

    fn finish(&self, ws: &mut Workspace, init: Vec<u32>, s: VertexId) -> Result<GeodesicResult> {
        let saved = ws.track_signposts;
        ws.track_signposts = true;
        let result = self.shorten(ws, init, true);
        ws.track_signposts = saved;
        let (q, path) = result?;
        let hes = path.unwrap_or_default();
        let mut intrinsic_vertices = vec![s];
        let mut points = Vec::new();
        if hes.is_empty() {
            points.push(self.vertex_point(s.0));
        }
        for (i, &h) in hes.iter().enumerate() {
            let seg = trace::trace_segment(self, ws.he.vert[h as usize], ws.phi[h as usize], ws.he.hlen(h));
            let skip = usize::from(i > 0);
            points.extend(seg.into_iter().skip(skip));
            intrinsic_vertices.push(VertexId(ws.he.tip(h)));
        }
        if let (Some(last), Some(&end)) = (points.last_mut(), intrinsic_vertices.last()) {
            *last = self.vertex_point(end.0);
        }
        self.reset(ws);
        Ok(GeodesicResult {
            length: q.length,
            intrinsic_vertices,
            path: points,
            iterations: q.iterations,
            converged: q.converged,
        })
    }

    fn vertex_point(&self, v: u32) -> PathPoint {
        let he = &self.mesh.he;
        let h0 = he.first_outgoing(v);
        let h = if he.is_boundary_he(h0) { he.ccw(twin(h0)) } else { h0 };
        let f = he.face[h as usize];
        let k = he.face_hes(f).iter().position(|&x| x == h).unwrap();
        let mut bary = [0.0; 3];
        bary[k] = 1.0;
        PathPoint { face: FaceId(f), bary }
    }

    /// Restores the workspace connectivity to the base mesh.
    pub fn reset(&self, ws: &mut Workspace) {
        let base = &self.mesh.he;
        for &h in &ws.touched_he {
            let h = h as usize;
            ws.he.next[h] = base.next[h];
            ws.he.vert[h] = base.vert[h];
            ws.he.face[h] = base.face[h];
            ws.phi[h] = self.base_phi[h];
            ws.he.len[h >> 1] = base.len[h >> 1];
            ws.he_mark[h] = 0;
        }
        for &f in &ws.touched_f {
            ws.he.f_he[f as usize] = base.f_he[f as usize];
            ws.f_mark[f as usize] = 0;
        }
        for &v in &ws.touched_v {
            ws.he.v_he[v as usize] = base.v_he[v as usize];
            ws.v_mark[v as usize] = 0;
        }
        ws.touched_he.clear();
        ws.touched_f.clear();
        ws.touched_v.clear();
    }

    fn flip(&self, ws: &mut Workspace, e: u32) -> bool {
        let Some(q) = ws.he.quad(e) else { return false };
        let Some(len) = ws.he.flipped_length(&q) else { return false };
        for h in [q.h, q.h1, q.h2, q.t, q.t1, q.t2] {
            if ws.he_mark[h as usize] == 0 {
                ws.he_mark[h as usize] = 1;
                ws.touched_he.push(h);
            }
        }
        for f in [q.f0, q.f1] {
            if ws.f_mark[f as usize] == 0 {
                ws.f_mark[f as usize] = 1;
                ws.touched_f.push(f);
            }
        }
        for v in [q.a, q.b] {
            if ws.v_mark[v as usize] == 0 {
                ws.v_mark[v as usize] = 1;
                ws.touched_v.push(v);
            }
        }
        ws.he.apply_flip(&q, len);
        if ws.track_signposts {
            // h is now d→c and t is c→d; each follows its clockwise neighbour by one corner
            let (h, t) = (q.h, q.t);
            let at_d = ws.phi[q.t2 as usize] + ws.he.corner(q.t2);
            let at_c = ws.phi[q.h2 as usize] + ws.he.corner(q.h2);
            ws.phi[h as usize] = self.wrap_angle(q.d, at_d);
            ws.phi[t as usize] = self.wrap_angle(q.c, at_c);
        }
        true
    }

    fn wrap_angle(&self, v: u32, a: f64) -> f64 {
        let total = self.angle_sum[v as usize];
        if self.boundary[v as usize] || a < total {
            a
        } else {
            a - total
        }
    }

    /// Interior angle swept counterclockwise from `from` to `to` around their common origin.
    fn wedge(&self, he: &HalfEdges, from: u32, to: u32) -> f64 {
        let mut angle = 0.0;
        let mut h = from;
        for _ in 0..100_000 {
            if h == to {
                return angle;
            }
            if he.is_boundary_he(h) {
                return f64::INFINITY;
            }
            angle += he.corner(h);
            h = he.ccw(h);
            if h == from {
                break;
            }
        }
        f64::INFINITY
    }

    /// Smallest wedge angle at the joint between `h_in` and `h_out`, with the side it is on.
    fn joint_angle(&self, he: &HalfEdges, h_in: u32, h_out: u32) -> (f64, bool) {
        let left = self.wedge(he, twin(h_in), h_out);
        let right = self.wedge(he, h_out, twin(h_in));
        if left <= right {
            (left, true)
        } else {
            (right, false)
        }
    }

    /// FlipOut at a joint: flips spokes inside the wedge until the outer boundary is straight.
    /// Returns the replacement half-edges from the previous to the next path vertex.
    fn flip_out(&self, ws: &mut Workspace, h_in: u32, h_out: u32, left: bool) -> Vec<u32> {
        let (from, to) = if left { (twin(h_in), h_out) } else { (h_out, twin(h_in)) };
        let mut spokes = vec![from];
        let mut h = from;
        while h != to {
            h = ws.he.ccw(h);
            spokes.push(h);
        }
        loop {
            let mut progressed = false;
            let mut j = 1;
            while j + 1 < spokes.len() {
                let (sp, sj) = (spokes[j - 1], spokes[j]);
                let beta = ws.he.corner(ws.he.prev(sp)) + ws.he.corner(ws.he.next[sj as usize]);
                if beta < PI - 1e-12 && self.flip(ws, edge(sj)) {
                    spokes.remove(j);
                    progressed = true;
                } else {
                    j += 1;
                }
            }
            if !progressed {
                break;
            }
        }
        let outer: Vec<u32> = spokes[..spokes.len() - 1].iter().map(|&s| ws.he.next[s as usize]).collect();
        if left {
            outer
        } else {
            outer.into_iter().rev().map(twin).collect()
        }
    }

    /// Runs FlipOut to convergence. The workspace is reset on return unless the traced
    /// path is requested, in which case the caller resets it after reading signposts.
    fn shorten(&self, ws: &mut Workspace, init: Vec<u32>, keep: bool) -> Result<(DistanceQuery, Option<Vec<u32>>)> {
        let mut path = init;
        remove_spikes(&mut path);
        let n_v = ws.occupancy.len();
        let joint_vertex = |he: &HalfEdges, path: &[u32], i: usize| he.vert[path[i] as usize];
        for i in 0..path.len() {
            ws.occupancy[ws.he.vert[path[i] as usize] as usize] += 1;
        }
        if let Some(&last) = path.last() {
            ws.occupancy[ws.he.tip(last) as usize] += 1;
        }
        let mut length: f64 = path.iter().map(|&h| ws.he.hlen(h)).sum();
        let mut angles: Vec<(f64, bool)> = vec![(f64::INFINITY, true); path.len()];
        let mut dirty = vec![true; path.len()];
        let mut iterations = 0;
        let mut converged = false;
        let mut stamp = 0u32;
        let result = loop {
            for i in 1..path.len() {
                if dirty[i] {
                    let v = joint_vertex(&ws.he, &path, i);
                    angles[i] = if ws.occupancy[v as usize] > 1 {
                        (f64::INFINITY, true)
                    } else {
                        self.joint_angle(&ws.he, path[i - 1], path[i])
                    };
                    dirty[i] = false;
                }
            }
            let mut best = (PI - CONVERGENCE_EPS, 0usize);
            for i in 1..path.len() {
                if angles[i].0 < best.0 {
                    best = (angles[i].0, i);
                }
            }
            if best.1 == 0 {
                converged = true;
                break Ok(());
            }
            if iterations >= MAX_ITERATIONS {
                break Ok(());
            }
            iterations += 1;
            let i = best.1;
            let b = joint_vertex(&ws.he, &path, i);
            let replacement = self.flip_out(ws, path[i - 1], path[i], angles[i].1);
            ws.occupancy[b as usize] -= 1;
            for &h in &replacement[..replacement.len().saturating_sub(1)] {
                ws.occupancy[ws.he.tip(h) as usize] += 1;
            }
            let new_len: f64 = replacement.iter().map(|&h| ws.he.hlen(h)).sum();
            let old_len = ws.he.hlen(path[i - 1]) + ws.he.hlen(path[i]);
            // the outer arc of a wedge below π is strictly shorter than its two spokes
            if new_len > old_len * (1.0 + 1e-12) {
                break Err(Error::Numerical("path length increased during shortening".into()));
            }
            length += new_len - old_len;

            stamp = stamp.wrapping_add(1).max(1);
            ws.affected[b as usize] = stamp;
            for &h in &replacement {
                ws.affected[ws.he.vert[h as usize] as usize] = stamp;
                ws.affected[ws.he.tip(h) as usize] = stamp;
            }
            let k = replacement.len();
            path.splice(i - 1..=i, replacement);
            angles.splice(i - 1..=i, std::iter::repeat((f64::INFINITY, true)).take(k));
            dirty.splice(i - 1..=i, std::iter::repeat(true).take(k));
            for j in 1..path.len() {
                if ws.affected[joint_vertex(&ws.he, &path, j) as usize] == stamp {
                    dirty[j] = true;
                }
            }
            let before = path.len();
            remove_spikes(&mut path);
            if path.len() != before {
                // spikes collapse: rebuild bookkeeping from scratch
                ws.occupancy.iter_mut().for_each(|x| *x = 0);
                for &h in &path {
                    ws.occupancy[ws.he.vert[h as usize] as usize] += 1;
                }
                if let Some(&last) = path.last() {
                    ws.occupancy[ws.he.tip(last) as usize] += 1;
                }
                length = path.iter().map(|&h| ws.he.hlen(h)).sum();
                angles = vec![(f64::INFINITY, true); path.len()];
                dirty = vec![true; path.len()];
            }
        };
        debug_assert!(n_v == ws.occupancy.len());
        for &h in &path {
            ws.occupancy[ws.he.vert[h as usize] as usize] = 0;
        }
        if let Some(&last) = path.last() {
            ws.occupancy[ws.he.tip(last) as usize] = 0;
        }
        let exact: f64 = path.iter().map(|&h| ws.he.hlen(h)).sum();
        debug_assert!((exact - length).abs() <= 1e-9 * (1.0 + exact));
        let q = DistanceQuery { length: exact, iterations, converged };
        if let Err(e) = result {
            self.reset(ws);
            return Err(e);
        }
        if keep {
            Ok((q, Some(path)))
        } else {
            self.reset(ws);
            Ok((q, None))
        }
    }
}

/// Drops immediate back-tracks `x→y→x`.
fn remove_spikes(path: &mut Vec<u32>) {
    let mut out: Vec<u32> = Vec::with_capacity(path.len());
    for &h in path.iter() {
        if out.last().is_some_and(|&l| l == twin(h)) {
            out.pop();
        } else {
            out.push(h);
        }
    }
    *path = out;
}

/// Cuts closed sub-walks so every vertex is visited at most once.
fn remove_loops(he: &HalfEdges, path: &mut Vec<u32>) {
    let mut out: Vec<u32> = Vec::with_capacity(path.len());
    let mut at = std::collections::HashMap::new();
    if let Some(&h) = path.first() {
        at.insert(he.vert[h as usize], 0usize);
    }
    for &h in path.iter() {
        let tip = he.tip(h);
        if let Some(&k) = at.get(&tip) {
            for x in out.drain(k..) {
                at.remove(&he.tip(x));
            }
        } else {
            out.push(h);
            at.insert(tip, out.len());
        }
    }
    *path = out;
}

pub fn dijkstra_path(mesh: &IntrinsicMesh, s: VertexId, t: VertexId) -> Result<VertexPath> {
    let engine = GeodesicEngine::new(mesh);
    let mut ws = engine.workspace();
    engine.dijkstra_path(&mut ws, s, t)
}

pub fn flip_shorten(mesh: &IntrinsicMesh, init: &VertexPath) -> Result<GeodesicResult> {
    let engine = GeodesicEngine::new(mesh);
    let mut ws = engine.workspace();
    engine.flip_shorten(&mut ws, init)
}

pub fn geodesic_distance(mesh: &IntrinsicMesh, s: VertexId, t: VertexId) -> Result<GeodesicResult> {
    let engine = GeodesicEngine::new(mesh);
    let mut ws = engine.workspace();
    engine.geodesic(&mut ws, s, t)
}

impl GeodesicResult {
    /// Path points mapped to parameter space.
    pub fn params(&self, mesh: &IntrinsicMesh) -> Vec<crate::surface::ParamPoint> {
        self.path
            .iter()
            .map(|p| {
                let c = mesh.face_params(p.face);
                let u = p.bary[0] * c[0].u + p.bary[1] * c[1].u + p.bary[2] * c[2].u;
                let v = p.bary[0] * c[0].v + p.bary[1] * c[1].v + p.bary[2] * c[2].v;
                mesh.spec().wrap(crate::surface::ParamPoint::new(u, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
