//! Truncated geodesic distance field from a set of curve sites.

use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use super::{GeodesicEngine, HeapItem, Workspace};
use crate::curve::SiteSet;
use crate::error::{Error, Result};
use crate::mesh::{EdgeId, IntrinsicMesh, SiteId, VertexId};
use crate::surface::ParamPoint;

/// Sites of one or more curves, each bound to a mesh vertex.
#[derive(Debug, Clone)]
pub struct AnchoredSites {
    sets: Vec<SiteSet>,
    offsets: Vec<usize>,
    vertices: Vec<VertexId>,
    by_vertex: HashMap<u32, SiteId>,
}

impl AnchoredSites {
    /// Inserts every site into the mesh as a vertex.
    pub fn insert(mesh: &mut IntrinsicMesh, sets: Vec<SiteSet>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sets.len());
        let mut vertices = Vec::new();
        let mut by_vertex = HashMap::new();
        for set in &sets {
            offsets.push(vertices.len());
            for site in &set.sites {
                let v = mesh.insert_site(site.param)?;
                let id = SiteId(vertices.len() as u32);
                if by_vertex.insert(v.0, id).is_some() {
                    return Err(Error::Resolution(format!(
                        "two sites fall on mesh vertex {}; use fewer segments or a finer grid",
                        v.0
                    )));
                }
                vertices.push(v);
            }
        }
        if vertices.is_empty() {
            return Err(Error::Config("no sites".into()));
        }
        Ok(Self { sets, offsets, vertices, by_vertex })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn sets(&self) -> &[SiteSet] {
        &self.sets
    }

    pub fn vertex(&self, s: SiteId) -> VertexId {
        self.vertices[s.idx()]
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn site_at(&self, v: VertexId) -> Option<SiteId> {
        self.by_vertex.get(&v.0).copied()
    }

    /// Curve index and position within that curve.
    pub fn locate(&self, s: SiteId) -> (usize, usize) {
        let set = self.offsets.partition_point(|&o| o <= s.idx()) - 1;
        (set, s.idx() - self.offsets[set])
    }

    pub fn param(&self, s: SiteId) -> ParamPoint {
        let (set, i) = self.locate(s);
        self.sets[set].sites[i].param
    }

    pub fn segment_length(&self, s: SiteId) -> f64 {
        let (set, i) = self.locate(s);
        self.sets[set].segment_lengths[i]
    }

    /// Mean site spacing over all curves.
    pub fn spacing(&self) -> f64 {
        self.sets.iter().map(|s| s.total_length).sum::<f64>() / self.len() as f64
    }

    /// Adjacent sites along the same curve.
    pub fn neighbors(&self, s: SiteId) -> impl Iterator<Item = SiteId> {
        let (set, i) = self.locate(s);
        let n = self.sets[set].len();
        let closed = self.sets[set].closed;
        let base = self.offsets[set];
        let prev = if i > 0 {
            Some(i - 1)
        } else if closed {
            Some(n - 1)
        } else {
            None
        };
        let next = if i + 1 < n {
            Some(i + 1)
        } else if closed {
            Some(0)
        } else {
            None
        };
        prev.into_iter().chain(next).map(move |j| SiteId((base + j) as u32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub nearest_site: Option<SiteId>,
    pub distance: f64,
    pub finalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// Shortest edge-graph path.
    Dijkstra,
    /// For a random `fraction` of vertices, start from a path through random waypoints.
    /// Only meant for exercising the consistency detector.
    RandomWaypoints { waypoints: usize, fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    pub init: InitStrategy,
    /// Graph propagation stops at this multiple of the cutoff.
    pub graph_factor: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { init: InitStrategy::Dijkstra, graph_factor: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct DistanceField {
    pub records: Vec<FieldRecord>,
    pub cutoff: f64,
    /// Every exact (site, distance) pair computed per vertex.
    pub refined: Vec<Vec<(SiteId, f64)>>,
    pub queries: usize,
    pub non_converged: usize,
}

impl DistanceField {
    pub fn finalized_count(&self) -> usize {
        self.records.iter().filter(|r| r.finalized).count()
    }
}

/// Edge whose endpoint values differ by more than its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldViolation {
    pub edge: EdgeId,
    pub a: VertexId,
    pub b: VertexId,
    pub da: f64,
    pub db: f64,
    pub length: f64,
}

/// Exact distance per vertex within `cutoff` of the sites.
///
/// Graph Dijkstra and a chord nearest-neighbour search seed each vertex with candidate sites.
/// Candidates are refined by exact geodesics and improved by walking along the curve while
/// the distance drops.
pub fn build_distance_field(
    mesh: &IntrinsicMesh,
    sites: &AnchoredSites,
    cutoff: f64,
    opts: &FieldOptions,
) -> Result<DistanceField> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::Config(format!("cutoff must be positive, got {cutoff}")));
    }
    let engine = GeodesicEngine::new(mesh);
    let nv = mesh.n_vertices();
    let graph_site = multi_source_graph(&engine, sites, opts.graph_factor * cutoff);

    let tree = RTree::bulk_load(
        (0..sites.len())
            .map(|s| GeomWithData::new(engine.positions[sites.vertex(SiteId(s as u32)).idx()], s as u32))
            .collect(),
    );
    let chord_site: Vec<(u32, f64)> = engine
        .positions
        .par_iter()
        .map(|p| {
            let n = tree.nearest_neighbor(p).unwrap();
            let q = n.geom();
            (n.data, ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
        })
        .collect();

    let active: Vec<u32> = (0..nv as u32).filter(|&v| chord_site[v as usize].1 <= cutoff).collect();
    let stress: Vec<Option<Vec<VertexId>>> = match opts.init {
        InitStrategy::Dijkstra => vec![None; active.len()],
        InitStrategy::RandomWaypoints { waypoints, fraction, seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            active
                .iter()
                .map(|_| {
                    let pick = rng.gen::<f64>() < fraction;
                    let ws: Vec<VertexId> =
                        (0..waypoints).map(|_| VertexId(active[rng.gen_range(0..active.len())])).collect();
                    pick.then_some(ws)
                })
                .collect()
        }
    };

    let refined: Vec<Result<(Vec<(SiteId, f64)>, usize, usize)>> = active
        .par_iter()
        .zip(stress.par_iter())
        .with_min_len(64)
        .map_init(
            || engine.workspace(),
            |ws, (&v, stress)| {
                let mut seeds = vec![SiteId(chord_site[v as usize].0)];
                if let Some((s, _)) = graph_site[v as usize] {
                    seeds.push(s);
                }
                refine_vertex(&engine, ws, sites, VertexId(v), &seeds, stress.as_deref())
            },
        )
        .collect();

    let mut records = vec![FieldRecord { nearest_site: None, distance: f64::INFINITY, finalized: false }; nv];
    let mut all = vec![Vec::new(); nv];
    let (mut queries, mut non_converged) = (0, 0);
    for (&v, r) in active.iter().zip(refined) {
        let (list, q, nc) = r?;
        queries += q;
        non_converged += nc;
        let best = list
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .copied()
            .ok_or_else(|| Error::Internal("vertex without candidates".into()))?;
        records[v as usize] = FieldRecord { nearest_site: Some(best.0), distance: best.1, finalized: best.1 <= cutoff };
        all[v as usize] = list;
    }
    if !records.iter().any(|r| r.finalized) {
        return Err(Error::Numerical("no vertex lies within the cutoff".into()));
    }
    tracing::debug!(active = active.len(), queries, non_converged, "distance field built");
    Ok(DistanceField { records, cutoff, refined: all, queries, non_converged })
}

fn refine_vertex(
    engine: &GeodesicEngine,
    ws: &mut Workspace,
    sites: &AnchoredSites,
    v: VertexId,
    seeds: &[SiteId],
    waypoints: Option<&[VertexId]>,
) -> Result<(Vec<(SiteId, f64)>, usize, usize)> {
    let mut cache: Vec<(SiteId, f64)> = Vec::new();
    let (mut queries, mut non_converged) = (0, 0);
    let mut eval = |s: SiteId, cache: &mut Vec<(SiteId, f64)>| -> Result<f64> {
        if let Some(&(_, d)) = cache.iter().find(|(x, _)| *x == s) {
            return Ok(d);
        }
        let target = sites.vertex(s);
        let q = match waypoints {
            Some(w) => engine.distance_via(ws, v, target, w)?,
            None => engine.distance(ws, v, target)?,
        };
        queries += 1;
        if !q.converged {
            non_converged += 1;
        }
        cache.push((s, q.length));
        Ok(q.length)
    };
    if let Some(s) = sites.site_at(v) {
        cache.push((s, 0.0));
    }
    for &seed in seeds {
        let mut cur = seed;
        let mut d = eval(cur, &mut cache)?;
        loop {
            let mut moved = false;
            for n in sites.neighbors(cur).collect::<Vec<_>>() {
                let dn = eval(n, &mut cache)?;
                if dn < d {
                    d = dn;
                    cur = n;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
    Ok((cache, queries, non_converged))
}

/// Nearest site by edge-graph distance, for vertices within `bound` of some site.
fn multi_source_graph(engine: &GeodesicEngine, sites: &AnchoredSites, bound: f64) -> Vec<Option<(SiteId, f64)>> {
    let mesh = engine.mesh;
    let mut best: Vec<Option<(SiteId, f64)>> = vec![None; mesh.n_vertices()];
    let mut heap = BinaryHeap::new();
    for (i, &v) in sites.vertices().iter().enumerate() {
        best[v.idx()] = Some((SiteId(i as u32), 0.0));
        heap.push(HeapItem { key: 0.0, v: v.0 });
    }
    while let Some(HeapItem { key, v }) = heap.pop() {
        let (site, d) = best[v as usize].unwrap();
        if key > d {
            continue;
        }
        let range = engine.adj_start[v as usize] as usize..engine.adj_start[v as usize + 1] as usize;
        for &(w, he) in &engine.adj[range] {
            let nd = d + mesh.he.hlen(he);
            if nd > bound {
                continue;
            }
            let better = match best[w as usize] {
                None => true,
                Some((s, od)) => nd < od || (nd == od && site < s),
            };
            if better {
                best[w as usize] = Some((site, nd));
                heap.push(HeapItem { key: nd, v: w });
            }
        }
    }
    best
}

/// Edges between finalized vertices whose values violate the 1-Lipschitz bound.
pub fn detect_field_inconsistency(mesh: &IntrinsicMesh, field: &DistanceField) -> Vec<FieldViolation> {
    (0..mesh.n_edges() as u32)
        .filter_map(|e| {
            let e = EdgeId(e);
            let [a, b] = mesh.edge_vertices(e);
            let (ra, rb) = (field.records[a.idx()], field.records[b.idx()]);
            if !(ra.finalized && rb.finalized) {
                return None;
            }
            let length = mesh.edge_length(e);
            ((ra.distance - rb.distance).abs() > length * (1.0 + 1e-9) + 1e-12).then_some(FieldViolation {
                edge: e,
                a,
                b,
                da: ra.distance,
                db: rb.distance,
                length,
            })
        })
        .collect()
}
