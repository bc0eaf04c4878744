//! Intrinsic triangulation of a surface parameter domain.
//!
//! Vertices live in parameter space, but all geometry is carried by edge lengths measured
//! along the surface. Each face also remembers its corners in an unwrapped parameter frame
//! so points can be located and inserted across periodic seams.

pub(crate) mod halfedge;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::surface::{ParamPoint, SurfaceSpec};
pub use halfedge::{corner_angle, heron_area, triangle_slack, unfold_third};
pub(crate) use halfedge::{edge, twin, HalfEdges, Quad, NONE};

macro_rules! id_type {
    ($($name:ident),*) => {$(
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }
    )*};
}

id_type!(VertexId, FaceId, EdgeId, SiteId);

/// A face laid out in the plane with corner 0 at the origin and corner 1 on the positive x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldedTriangle {
    pub p: [[f64; 2]; 3],
}

impl UnfoldedTriangle {
    pub fn from_lengths(l01: f64, l12: f64, l20: f64) -> Self {
        Self { p: [[0.0, 0.0], [l01, 0.0], unfold_third(l01, l20, l12)] }
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.p;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        barycentric(self.p, x)
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.p;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }
}

pub(crate) fn barycentric(p: [[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = p;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    cols: usize,
    rows: usize,
    u0: f64,
    v0: f64,
    du: f64,
    dv: f64,
}

/// Intrinsic triangulation over a surface parameter domain.
#[derive(Debug, Clone)]
pub struct IntrinsicMesh {
    pub(crate) he: HalfEdges,
    uv: Vec<ParamPoint>,
    is_site: Vec<bool>,
    /// Corner parameters per face in `face_hes` order, unwrapped into one frame.
    f_uv: Vec<[ParamPoint; 3]>,
    f_cell: Vec<u32>,
    cell_faces: Vec<Vec<u32>>,
    grid: Option<Grid>,
    spec: SurfaceSpec,
    flipped: bool,
}

impl IntrinsicMesh {
    /// Regular `nu × nv` grid of the usable domain, each quad split along the same diagonal.
    ///
    /// On a periodic axis the last grid line coincides with the first, so the axis carries
    /// `n - 1` distinct vertex columns and the seam edges are glued.
    pub fn build_uniform(spec: &SurfaceSpec, nu: usize, nv: usize) -> Result<Self> {
        let periodic = spec.periodic();
        let min = |p: bool| if p { 4 } else { 2 };
        if nu < min(periodic[0]) || nv < min(periodic[1]) {
            return config(format!("grid {nu}x{nv} is too coarse"));
        }
        let d = spec.usable_domain();
        let cols_u = if periodic[0] { nu - 1 } else { nu };
        let cols_v = if periodic[1] { nv - 1 } else { nv };
        let du = d.width() / (nu - 1) as f64;
        let dv = d.height() / (nv - 1) as f64;
        let vid = |i: usize, j: usize| ((j % cols_v) * cols_u + (i % cols_u)) as u32;

        let mut uv = Vec::with_capacity(cols_u * cols_v);
        for j in 0..cols_v {
            for i in 0..cols_u {
                uv.push(ParamPoint::new(d.u0 + i as f64 * du, d.v0 + j as f64 * dv));
            }
        }
        for p in &uv {
            spec.fundamental_form(*p)?;
        }

        let grid = Grid { cols: nu - 1, rows: nv - 1, u0: d.u0, v0: d.v0, du, dv };
        let n_faces = 2 * grid.cols * grid.rows;
        let mut faces: Vec<([u32; 3], [ParamPoint; 3], u32)> = Vec::with_capacity(n_faces);
        for j in 0..grid.rows {
            for i in 0..grid.cols {
                let p = |a: usize, b: usize| ParamPoint::new(d.u0 + a as f64 * du, d.v0 + b as f64 * dv);
                let cell = (j * grid.cols + i) as u32;
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                faces.push(([v00, v10, v11], [p(i, j), p(i + 1, j), p(i + 1, j + 1)], cell));
                faces.push(([v00, v11, v01], [p(i, j), p(i + 1, j + 1), p(i, j + 1)], cell));
            }
        }

        let cells = grid.cols * grid.rows;
        Self::assemble(spec, uv, &faces, Some((grid, cells)), |_, _, pa, pb| spec.induced_length_unwrapped(pa, pb))
    }

    /// Geodesic icosphere: the icosahedron subdivided `level` times and projected to the sphere.
    ///
    /// Edge lengths are great-circle arcs. Face counts are `20 · 4^level`. Point insertion is
    /// not available on these meshes.
    pub fn icosphere(spec: &SurfaceSpec, level: u32) -> Result<Self> {
        let radius = match spec.kind() {
            crate::surface::SurfaceKind::Sphere { radius } => radius,
            _ => return config("icosphere meshes require a sphere surface"),
        };
        let d = spec.domain();
        if d != spec.kind().default_domain() || !spec.periodic()[0] {
            return config(format!("icosphere needs the full sphere domain, got {d:?}"));
        }
        let (pos, tris) = icosahedron_subdivided(level);
        let uv: Vec<ParamPoint> = pos
            .iter()
            .map(|p| {
                let v = p[2].clamp(-1.0, 1.0).asin();
                let u = if p[0].hypot(p[1]) < 1e-12 { 0.0 } else { p[1].atan2(p[0]) };
                spec.wrap(ParamPoint::new(u, v))
            })
            .collect();
        let faces: Vec<([u32; 3], [ParamPoint; 3], u32)> = tris
            .iter()
            .map(|t| {
                let p0 = uv[t[0] as usize];
                (*t, t.map(|v| spec.unwrap_near(uv[v as usize], p0)), 0)
            })
            .collect();
        Self::assemble(spec, uv, &faces, None, |a, b, _, _| {
            let (x, y) = (pos[a as usize], pos[b as usize]);
            let cross = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
            let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            radius * s.atan2(x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
        })
    }

    fn assemble(
        spec: &SurfaceSpec,
        uv: Vec<ParamPoint>,
        faces: &[([u32; 3], [ParamPoint; 3], u32)],
        grid: Option<(Grid, usize)>,
        length: impl Fn(u32, u32, ParamPoint, ParamPoint) -> f64,
    ) -> Result<Self> {
        let n_faces = faces.len();
        let mut he = HalfEdges::default();
        let mut edge_of = std::collections::HashMap::with_capacity(3 * n_faces / 2 + 4);
        let mut f_uv = Vec::with_capacity(n_faces);
        let mut f_cell = Vec::with_capacity(n_faces);
        for (f, (vs, ps, cell)) in faces.iter().enumerate() {
            let mut hs = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (vs[k], vs[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_of.entry(key).or_insert_with(|| {
                    let e = he.len.len() as u32;
                    he.len.push(length(a, b, ps[k], ps[(k + 1) % 3]));
                    he.vert.extend([a, b]);
                    he.next.extend([NONE, NONE]);
                    he.face.extend([NONE, NONE]);
                    e
                });
                let h = if he.vert[(2 * e) as usize] == a { 2 * e } else { 2 * e + 1 };
                if he.face[h as usize] != NONE {
                    return Err(Error::Internal("non-manifold edge during assembly".into()));
                }
                he.face[h as usize] = f as u32;
                hs[k] = h;
            }
            for k in 0..3 {
                he.next[hs[k] as usize] = hs[(k + 1) % 3];
            }
            he.f_he.push(hs[0]);
            f_uv.push(*ps);
            f_cell.push(*cell);
        }
        he.v_he = vec![NONE; uv.len()];
        for h in 0..he.vert.len() as u32 {
            let v = he.vert[h as usize] as usize;
            if he.v_he[v] == NONE {
                he.v_he[v] = h;
            }
        }
        let (grid, cells) = match grid {
            Some((g, n)) => (Some(g), n),
            None => (None, 0),
        };
        let mut cell_faces = vec![Vec::new(); cells];
        if grid.is_some() {
            for (f, c) in f_cell.iter().enumerate() {
                cell_faces[*c as usize].push(f as u32);
            }
        }
        let n = uv.len();
        let mesh = Self {
            he,
            uv,
            is_site: vec![false; n],
            f_uv,
            f_cell,
            cell_faces,
            grid,
            spec: spec.clone(),
            flipped: false,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn n_vertices(&self) -> usize {
        self.he.n_vertices()
    }

    pub fn n_faces(&self) -> usize {
        self.he.n_faces()
    }

    pub fn n_edges(&self) -> usize {
        self.he.n_edges()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn vertex_param(&self, v: VertexId) -> ParamPoint {
        self.uv[v.idx()]
    }

    pub fn vertex_params(&self) -> &[ParamPoint] {
        &self.uv
    }

    pub fn is_site(&self, v: VertexId) -> bool {
        self.is_site[v.idx()]
    }

    pub fn face_vertices(&self, f: FaceId) -> [VertexId; 3] {
        self.he.face_verts(f.0).map(VertexId)
    }

    /// Face corners in one unwrapped parameter frame, matching `face_vertices` order.
    pub fn face_params(&self, f: FaceId) -> [ParamPoint; 3] {
        self.f_uv[f.idx()]
    }

    /// Side lengths `[|v0 v1|, |v1 v2|, |v2 v0|]`.
    pub fn face_lengths(&self, f: FaceId) -> [f64; 3] {
        self.he.face_hes(f.0).map(|h| self.he.hlen(h))
    }

    pub fn face_edges(&self, f: FaceId) -> [EdgeId; 3] {
        self.he.face_hes(f.0).map(|h| EdgeId(edge(h)))
    }

    /// Face across side `k` (from corner `k` to `k + 1`), if any.
    pub fn face_neighbor(&self, f: FaceId, k: usize) -> Option<FaceId> {
        let h = self.he.face_hes(f.0)[k];
        let g = self.he.face[twin(h) as usize];
        (g != NONE).then_some(FaceId(g))
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        self.he.len[e.idx()]
    }

    pub fn edge_vertices(&self, e: EdgeId) -> [VertexId; 2] {
        [VertexId(self.he.vert[(2 * e.0) as usize]), VertexId(self.he.vert[(2 * e.0 + 1) as usize])]
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.he.is_boundary_edge(e.0)
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.he.is_boundary_vertex(v.0)
    }

    /// Neighbouring vertices in counterclockwise order.
    pub fn vertex_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.he.outgoing(v.0).into_iter().map(|h| VertexId(self.he.tip(h))).collect()
    }

    pub fn unfold(&self, f: FaceId) -> UnfoldedTriangle {
        let [a, b, c] = self.face_lengths(f);
        UnfoldedTriangle::from_lengths(a, b, c)
    }

    pub fn face_area(&self, f: FaceId) -> f64 {
        let [a, b, c] = self.face_lengths(f);
        heron_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces() as u32).map(|f| self.face_area(FaceId(f))).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.he.len.iter().sum::<f64>() / self.n_edges() as f64
    }

    /// Sum of interior angles around a vertex.
    pub fn angle_sum(&self, v: VertexId) -> f64 {
        self.he
            .outgoing(v.0)
            .into_iter()
            .filter(|&h| !self.he.is_boundary_he(h))
            .map(|h| self.he.corner(h))
            .sum()
    }

    /// Checks connectivity and strict triangle inequality on every face.
    pub fn validate(&self) -> Result<()> {
        self.he.check_connectivity().map_err(Error::Internal)?;
        for f in 0..self.n_faces() as u32 {
            let [a, b, c] = self.face_lengths(FaceId(f));
            if !(triangle_slack(a, b, c) > 0.0) {
                return Err(Error::Refinement(format!("face {f} violates the triangle inequality ({a}, {b}, {c})")));
            }
        }
        Ok(())
    }

    /// Intrinsic edge flip. The new edge is the other diagonal of the unfolded quad.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<()> {
        if e.idx() >= self.n_edges() {
            return Err(Error::InvalidFlip(format!("edge {} does not exist", e.0)));
        }
        let q = self.he.quad(e.0).ok_or_else(|| Error::InvalidFlip(format!("edge {} is on the boundary", e.0)))?;
        let len = self
            .he
            .flipped_length(&q)
            .ok_or_else(|| Error::InvalidFlip(format!("quad around edge {} is not strictly convex", e.0)))?;
        let sound = |x: u32, y: u32| {
            let (lx, ly) = (self.he.hlen(x), self.he.hlen(y));
            triangle_slack(len, lx, ly) > 1e-12 * (len + lx + ly)
        };
        if !(sound(q.h2, q.t1) && sound(q.h1, q.t2)) {
            return Err(Error::InvalidFlip(format!("flipping edge {} leaves a degenerate triangle", e.0)));
        }
        self.he.apply_flip(&q, len);
        for f in [q.f0, q.f1] {
            let vs = self.he.face_verts(f);
            let p0 = self.uv[vs[0] as usize];
            self.f_uv[f as usize] = vs.map(|v| self.spec.unwrap_near(self.uv[v as usize], p0));
        }
        self.flipped = true;
        Ok(())
    }

    /// Inserts a vertex at `p`, splitting the containing face (or edge). Returns the existing
    /// vertex when `p` coincides with one.
    pub fn insert_site(&mut self, p: ParamPoint) -> Result<VertexId> {
        if self.flipped || self.grid.is_none() {
            return Err(Error::Refinement("point insertion needs an unflipped grid mesh".into()));
        }
        let p = self.spec.check_in_domain(p)?;
        let d = self.spec.usable_domain();
        if !self.spec.periodic()[1] && (p.v < d.v0 - 1e-12 * d.height() || p.v > d.v1 + 1e-12 * d.height()) {
            return Err(Error::OutOfDomain { u: p.u, v: p.v });
        }
        let (f, pf, bary) = self.locate(p).ok_or(Error::OutOfDomain { u: p.u, v: p.v })?;
        let corners = self.he.face_verts(f);
        let params = self.f_uv[f as usize];
        let extent = self.spec.domain().extent();
        for k in 0..3 {
            if params[k].dist(pf) <= 1e-12 * extent {
                self.is_site[corners[k] as usize] = true;
                return Ok(VertexId(corners[k]));
            }
        }
        let near_zero: Vec<usize> = (0..3).filter(|&k| bary[k].abs() <= 1e-10).collect();
        let attempt = match near_zero.len() {
            0 => self.split_face(f, pf, bary),
            1 => self.split_edge(f, near_zero[0], bary),
            _ => Err(Error::Refinement("point coincides with a vertex".into())),
        };
        match attempt {
            Ok(v) => {
                self.is_site[v as usize] = true;
                Ok(VertexId(v))
            }
            Err(err) => {
                let nearest = (0..3).min_by(|&a, &b| params[a].dist(pf).total_cmp(&params[b].dist(pf))).unwrap();
                if params[nearest].dist(pf) <= 1e-8 * extent {
                    self.is_site[corners[nearest] as usize] = true;
                    Ok(VertexId(corners[nearest]))
                } else {
                    Err(err)
                }
            }
        }
    }

    /// Face containing `p`, `p` unwrapped into that face's frame, and its barycentric coordinates.
    fn locate(&self, p: ParamPoint) -> Option<(u32, ParamPoint, [f64; 3])> {
        let g = self.grid?;
        let periodic = self.spec.periodic();
        let ci = ((p.u - g.u0) / g.du).floor() as i64;
        let cj = ((p.v - g.v0) / g.dv).floor() as i64;
        let mut best: Option<(f64, u32, ParamPoint, [f64; 3])> = None;
        for dj in -1..=1i64 {
            for di in -1..=1i64 {
                let (mut i, mut j) = (ci + di, cj + dj);
                if periodic[0] {
                    i = i.rem_euclid(g.cols as i64);
                } else if i < 0 || i >= g.cols as i64 {
                    continue;
                }
                if periodic[1] {
                    j = j.rem_euclid(g.rows as i64);
                } else if j < 0 || j >= g.rows as i64 {
                    continue;
                }
                for &f in &self.cell_faces[j as usize * g.cols + i as usize] {
                    let ps = self.f_uv[f as usize];
                    let q = self.spec.unwrap_near(p, ps[0]);
                    let bary = barycentric(ps.map(|x| [x.u, x.v]), [q.u, q.v]);
                    let score = bary[0].min(bary[1]).min(bary[2]);
                    if best.as_ref().map_or(true, |b| score > b.0) {
                        best = Some((score, f, q, bary));
                    }
                }
            }
        }
        best.filter(|b| b.0 >= -1e-9).map(|(_, f, q, bary)| (f, q, bary))
    }

    fn push_vertex(&mut self, p: ParamPoint) -> u32 {
        self.uv.push(self.spec.wrap(p));
        self.is_site.push(false);
        self.he.v_he.push(NONE);
        (self.uv.len() - 1) as u32
    }

    fn push_edge(&mut self, a: u32, b: u32, len: f64) -> u32 {
        let e = self.he.len.len() as u32;
        self.he.len.push(len);
        self.he.vert.extend([a, b]);
        self.he.next.extend([NONE, NONE]);
        self.he.face.extend([NONE, NONE]);
        e
    }

    fn set_face(&mut self, f: u32, hs: [u32; 3], uv: [ParamPoint; 3]) {
        for k in 0..3 {
            self.he.next[hs[k] as usize] = hs[(k + 1) % 3];
            self.he.face[hs[k] as usize] = f;
        }
        if f as usize == self.he.f_he.len() {
            self.he.f_he.push(hs[0]);
            self.f_uv.push(uv);
        } else {
            self.he.f_he[f as usize] = hs[0];
            self.f_uv[f as usize] = uv;
        }
    }

    fn new_face_in_cell(&mut self, cell: u32) -> u32 {
        let f = self.he.f_he.len() as u32;
        self.f_cell.push(cell);
        self.cell_faces[cell as usize].push(f);
        f
    }

    fn induced(&self, a: ParamPoint, b: ParamPoint) -> f64 {
        self.spec.induced_length_unwrapped(a, b)
    }

    fn split_face(&mut self, f: u32, p: ParamPoint, bary: [f64; 3]) -> Result<u32> {
        let [h0, h1, h2] = self.he.face_hes(f);
        let [a, b, c] = self.he.face_verts(f);
        let [pa, pb, pc] = self.f_uv[f as usize];
        let (lab, lbc, lca) = (self.he.hlen(h0), self.he.hlen(h1), self.he.hlen(h2));
        let valid = |la: f64, lb: f64, lc: f64| {
            triangle_slack(lab, lb, la) > 0.0 && triangle_slack(lbc, lc, lb) > 0.0 && triangle_slack(lca, la, lc) > 0.0
        };
        let (mut la, mut lb, mut lc) = (self.induced(p, pa), self.induced(p, pb), self.induced(p, pc));
        if !valid(la, lb, lc) {
            // param-straight lengths of a sliver can break the inequality; measure inside the flat face instead
            let t = UnfoldedTriangle::from_lengths(lab, lbc, lca);
            let x = t.point(bary);
            let d = |q: [f64; 2]| (x[0] - q[0]).hypot(x[1] - q[1]);
            (la, lb, lc) = (d(t.p[0]), d(t.p[1]), d(t.p[2]));
            if !valid(la, lb, lc) {
                return Err(Error::Refinement("face split would violate the triangle inequality".into()));
            }
        }
        let w = self.push_vertex(p);
        let ea = self.push_edge(w, a, la);
        let eb = self.push_edge(w, b, lb);
        let ec = self.push_edge(w, c, lc);
        let (pa0, pa1, pb0, pb1, pc0, pc1) = (2 * ea, 2 * ea + 1, 2 * eb, 2 * eb + 1, 2 * ec, 2 * ec + 1);
        let cell = self.f_cell[f as usize];
        self.set_face(f, [h0, pb1, pa0], [pa, pb, p]);
        let f1 = self.new_face_in_cell(cell);
        self.set_face(f1, [h1, pc1, pb0], [pb, pc, p]);
        let f2 = self.new_face_in_cell(cell);
        self.set_face(f2, [h2, pa1, pc0], [pc, pa, p]);
        self.he.v_he[w as usize] = pa0;
        Ok(w)
    }

    /// Splits the side of `f` opposite corner `k`, and the face across it if there is one.
    fn split_edge(&mut self, f0: u32, k: usize, bary: [f64; 3]) -> Result<u32> {
        let hs = self.he.face_hes(f0);
        let ps = self.f_uv[f0 as usize];
        let (ia, ib) = ((k + 1) % 3, (k + 2) % 3);
        let (h, h1, h2) = (hs[ia], hs[ib], hs[k]);
        let (b, c) = (self.he.vert[h1 as usize], self.he.vert[h2 as usize]);
        let (pa, pb, pc) = (ps[ia], ps[ib], ps[k]);
        let s = bary[ib] / (bary[ia] + bary[ib]);
        let p = pa.lerp(pb, s);
        let t = twin(h);
        let f1 = self.he.face[t as usize];

        let l_aw = self.induced(pa, p);
        let l_wb = self.induced(p, pb);
        let (l_ab, l_bc, l_ca) = (self.he.hlen(h), self.he.hlen(h1), self.he.hlen(h2));
        let flat = |l_ac: f64, l_bc: f64| {
            let x = unfold_third(l_ab, l_ac, l_bc);
            let r = l_aw / (l_aw + l_wb) * l_ab;
            (x[0] - r).hypot(x[1])
        };
        let mut l_wc = self.induced(p, pc);
        if !(triangle_slack(l_aw, l_wc, l_ca) > 0.0 && triangle_slack(l_wb, l_bc, l_wc) > 0.0) {
            l_wc = flat(l_ca, l_bc);
        }
        let mut ok = triangle_slack(l_aw, l_wc, l_ca) > 0.0 && triangle_slack(l_wb, l_bc, l_wc) > 0.0;

        let other = if f1 != NONE {
            let t1 = self.he.next[t as usize];
            let t2 = self.he.next[t1 as usize];
            let d = self.he.vert[t2 as usize];
            let q = self.f_uv[f1 as usize];
            let hs1 = self.he.face_hes(f1);
            let at = |x: u32| q[hs1.iter().position(|&y| y == x).unwrap()];
            let (qb, qa, qd) = (at(t), at(t1), at(t2));
            let p1 = qa.lerp(qb, s);
            let (l_ad, l_db) = (self.he.hlen(t1), self.he.hlen(t2));
            let mut l_wd = self.induced(p1, qd);
            if !(triangle_slack(l_aw, l_ad, l_wd) > 0.0 && triangle_slack(l_wb, l_wd, l_db) > 0.0) {
                l_wd = flat(l_ad, l_db);
            }
            ok &= triangle_slack(l_aw, l_ad, l_wd) > 0.0 && triangle_slack(l_wb, l_wd, l_db) > 0.0;
            Some((t1, t2, d, qa, qb, qd, p1, l_wd))
        } else {
            None
        };
        if !ok {
            return Err(Error::Refinement("edge split would violate the triangle inequality".into()));
        }

        let w = self.push_vertex(p);
        self.he.len[edge(h) as usize] = l_aw;
        let e1 = self.push_edge(w, b, l_wb);
        let e2 = self.push_edge(w, c, l_wc);
        let (n0, n1, m0, m1) = (2 * e1, 2 * e1 + 1, 2 * e2, 2 * e2 + 1);
        let cell0 = self.f_cell[f0 as usize];
        self.set_face(f0, [h, m0, h2], [pa, p, pc]);
        let f2 = self.new_face_in_cell(cell0);
        self.set_face(f2, [n0, h1, m1], [p, pb, pc]);
        self.he.vert[t as usize] = w;
        self.he.v_he[w as usize] = m0;
        self.he.v_he[b as usize] = h1;

        if let Some((t1, t2, d, qa, qb, qd, p1, l_wd)) = other {
            let e3 = self.push_edge(w, d, l_wd);
            let (k0, k1) = (2 * e3, 2 * e3 + 1);
            let cell1 = self.f_cell[f1 as usize];
            self.set_face(f1, [t, t1, k1], [p1, qa, qd]);
            let f3 = self.new_face_in_cell(cell1);
            self.set_face(f3, [n1, k0, t2], [qb, p1, qd]);
        }
        Ok(w)
    }

    /// Parameter-space OBJ (z = 0) for debugging.
    pub fn write_obj(&self, out: &mut impl Write) -> Result<()> {
        for p in &self.uv {
            writeln!(out, "v {} {} 0", p.u, p.v)?;
        }
        for f in 0..self.n_faces() as u32 {
            let [a, b, c] = self.he.face_verts(f);
            writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
        }
        Ok(())
    }

    /// Edge lengths keyed by endpoint vertices.
    pub fn edge_lengths_json(&self) -> serde_json::Value {
        let edges: Vec<_> = (0..self.n_edges() as u32)
            .map(|e| {
                let [a, b] = self.edge_vertices(EdgeId(e));
                serde_json::json!({"a": a.0, "b": b.0, "length": self.he.len[e as usize]})
            })
            .collect();
        serde_json::json!({ "vertices": self.n_vertices(), "edges": edges })
    }
}

fn icosahedron_subdivided(level: u32) -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .to_vec();
    // rotate so that no vertex sits on a pole
    let (s, c) = 0.3f64.sin_cos();
    for p in pos.iter_mut() {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let q = [p[0] / n, p[1] / n, p[2] / n];
        *p = [q[0], c * q[1] - s * q[2], s * q[1] + c * q[2]];
    }
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut m = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                m[k] = *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    let (x, y) = (pos[a as usize], pos[b as usize]);
                    let q = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
                    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                    pos.push([q[0] / n, q[1] / n, q[2] / n]);
                    (pos.len() - 1) as u32
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push(m);
        }
        tris = next;
    }
    (pos, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Domain, SurfaceKind};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{PI, TAU};

    fn unit_square() -> SurfaceSpec {
        SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn plane_grid_lengths() {
        let m = IntrinsicMesh::build_uniform(&unit_square(), 3, 3).unwrap();
        assert_eq!((m.n_vertices(), m.n_faces(), m.n_edges()), (9, 8, 16));
        let mut lens: Vec<f64> = m.he.len.clone();
        lens.sort_by(f64::total_cmp);
        assert!(lens[..12].iter().all(|l| (l - 0.5).abs() < 1e-15));
        assert!(lens[12..].iter().all(|l| (l - 0.5 * 2f64.sqrt()).abs() < 1e-15));
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn cylinder_glues_seam() {
        let spec = SurfaceSpec::cylinder(1.0, 0.0, 1.0).unwrap();
        let m = IntrinsicMesh::build_uniform(&spec, 5, 3).unwrap();
        assert_eq!(m.n_vertices(), 12);
        assert_eq!(m.euler_characteristic(), 0);
        let u_edges = m.he.len.iter().filter(|l| (**l - TAU / 4.0).abs() < 1e-12).count();
        assert_eq!(u_edges, 12);
        let boundary = (0..m.n_edges() as u32).filter(|&e| m.he.is_boundary_edge(e)).count();
        assert_eq!(boundary, 8);
    }

    #[test]
    fn torus_is_closed() {
        let m = IntrinsicMesh::build_uniform(&SurfaceSpec::torus(2.0, 0.7).unwrap(), 9, 7).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert!((0..m.n_edges() as u32).all(|e| !m.he.is_boundary_edge(e)));
        let total: f64 = (0..m.n_vertices() as u32).map(|v| m.angle_sum(VertexId(v)) - TAU).sum();
        assert!(total.abs() < 1e-9);
    }

    #[test]
    fn sphere_grid_has_margin() {
        let m = IntrinsicMesh::build_uniform(&SurfaceSpec::sphere(1.0).unwrap(), 100, 50).unwrap();
        for f in 0..m.n_faces() as u32 {
            let [a, b, c] = m.face_lengths(FaceId(f));
            assert!(triangle_slack(a, b, c) > 1e-9);
        }
        assert!((m.total_area() - 4.0 * PI).abs() < 0.01);
    }

    #[test]
    fn centroid_insertion() {
        let mut m = IntrinsicMesh::build_uniform(&unit_square(), 3, 3).unwrap();
        let v = m.insert_site(ParamPoint::new(1.0 / 3.0, 1.0 / 6.0)).unwrap();
        assert_eq!(m.n_faces(), 10);
        assert_eq!(m.euler_characteristic(), 1);
        for w in m.vertex_neighbors(v) {
            let d = m.vertex_param(w).dist(m.vertex_param(v));
            let e = m.he.outgoing(v.0).into_iter().find(|&h| m.he.tip(h) == w.0).unwrap();
            assert!((m.he.hlen(e) - d).abs() < 1e-15);
        }
        let again = m.insert_site(m.vertex_param(v)).unwrap();
        assert_eq!(again, v);
        assert_eq!(m.n_faces(), 10);
        m.validate().unwrap();
    }

    #[test]
    fn edge_and_boundary_insertion() {
        let mut m = IntrinsicMesh::build_uniform(&unit_square(), 3, 3).unwrap();
        m.insert_site(ParamPoint::new(0.25, 0.25)).unwrap();
        assert_eq!((m.n_faces(), m.euler_characteristic()), (10, 1));
        m.insert_site(ParamPoint::new(0.25, 0.0)).unwrap();
        assert_eq!((m.n_faces(), m.euler_characteristic()), (11, 1));
        m.insert_site(ParamPoint::new(0.5, 0.1)).unwrap();
        assert_eq!((m.n_faces(), m.euler_characteristic()), (13, 1));
        m.validate().unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn insertion_across_seam() {
        let spec = SurfaceSpec::cylinder(1.0, -1.0, 1.0).unwrap();
        let mut m = IntrinsicMesh::build_uniform(&spec, 9, 5).unwrap();
        let before = m.total_area();
        for u in [0.0, TAU - 1e-3, 1e-3, 0.5 * TAU / 8.0] {
            m.insert_site(ParamPoint::new(u, 0.1)).unwrap();
        }
        m.validate().unwrap();
        assert!((m.total_area() - before).abs() < 1e-12);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn many_insertions_on_bump() {
        let spec = SurfaceSpec::with_defaults(SurfaceKind::GaussianBump { amplitude: 0.5, sigma: 0.3, center_u: 0.0, center_v: 0.0 })
            .unwrap();
        let mut m = IntrinsicMesh::build_uniform(&spec, 80, 80).unwrap();
        let v0 = m.n_vertices();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            m.insert_site(ParamPoint::new(rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99))).unwrap();
        }
        m.validate().unwrap();
        assert_eq!(m.n_vertices(), v0 + 2000);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn flip_square_diagonal() {
        let mut m = IntrinsicMesh::build_uniform(&unit_square(), 2, 2).unwrap();
        let diag = (0..m.n_edges() as u32).find(|&e| !m.he.is_boundary_edge(e)).unwrap();
        m.flip_edge(EdgeId(diag)).unwrap();
        assert!((m.edge_length(EdgeId(diag)) - 2f64.sqrt()).abs() < 1e-15);
        let [a, b] = m.edge_vertices(EdgeId(diag));
        assert_eq!([a.0.min(b.0), a.0.max(b.0)], [1, 2]);
        m.flip_edge(EdgeId(diag)).unwrap();
        let [a, b] = m.edge_vertices(EdgeId(diag));
        assert_eq!([a.0.min(b.0), a.0.max(b.0)], [0, 3]);
        assert!(matches!(m.flip_edge(EdgeId(0)), Err(Error::InvalidFlip(_))));
        assert!(m.insert_site(ParamPoint::new(0.5, 0.5)).is_err());
    }

    #[test]
    fn random_flips_keep_metric_valid() {
        let mut m = IntrinsicMesh::build_uniform(&SurfaceSpec::torus(2.0, 0.7).unwrap(), 25, 13).unwrap();
        let area = m.total_area();
        let sums: Vec<f64> = (0..m.n_vertices() as u32).map(|v| m.angle_sum(VertexId(v))).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        for _ in 0..10_000 {
            let e = EdgeId(rng.gen_range(0..m.n_edges() as u32));
            if m.flip_edge(e).is_ok() {
                done += 1;
            }
        }
        assert!(done > 1000);
        m.validate().unwrap();
        assert!((m.total_area() - area).abs() < 1e-9);
        for v in 0..m.n_vertices() as u32 {
            assert!((m.angle_sum(VertexId(v)) - sums[v as usize]).abs() < 1e-9);
        }
    }

    #[test]
    fn coarse_sphere_grid_is_rejected_but_icosphere_works() {
        let spec = SurfaceSpec::sphere(1.0).unwrap();
        assert!(matches!(IntrinsicMesh::build_uniform(&spec, 9, 6), Err(Error::Refinement(_))));
        for (level, faces) in [(1, 80), (3, 1280)] {
            let m = IntrinsicMesh::icosphere(&spec, level).unwrap();
            assert_eq!(m.n_faces(), faces);
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.total_area() < 4.0 * PI);
            for v in 0..m.n_vertices() as u32 {
                let p = spec.evaluate(m.vertex_param(VertexId(v))).unwrap();
                assert!((p.dist(crate::surface::SurfacePoint::new(0.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unfold_right_triangle() {
        let t = UnfoldedTriangle::from_lengths(3.0, 5.0, 4.0);
        assert_eq!(t.p[1], [3.0, 0.0]);
        assert!((t.p[2][0] - 0.0).abs() < 1e-15 && (t.p[2][1] - 4.0).abs() < 1e-15);
        let b = t.barycentric([1.0, 1.0]);
        let x = t.point(b);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_coarse_grid_rejected() {
        assert!(IntrinsicMesh::build_uniform(&SurfaceSpec::torus(2.0, 0.7).unwrap(), 3, 9).is_err());
        assert!(IntrinsicMesh::build_uniform(&unit_square(), 1, 5).is_err());
    }
}
