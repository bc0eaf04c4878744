//! Tracing intrinsic edges over the base triangulation via signpost angles.

use super::{GeodesicEngine, PathPoint};
use crate::mesh::{barycentric, twin, FaceId, NONE};

/// Points where a straight intrinsic segment leaving `v` at signpost angle `phi` crosses
/// base-mesh edges, from the start vertex to the endpoint.
pub(super) fn trace_segment(engine: &GeodesicEngine, v: u32, phi: f64, len: f64) -> Vec<PathPoint> {
    let he = &engine.mesh.he;
    let out = he.outgoing(v);
    let mut start = None;
    for &g in &out {
        if he.is_boundary_he(g) {
            continue;
        }
        let a0 = engine.base_phi[g as usize];
        let c = he.corner(g);
        if phi >= a0 - 1e-12 && phi <= a0 + c + 1e-12 {
            start = Some((g, (phi - a0).clamp(0.0, c)));
            break;
        }
    }
    let first = engine.vertex_point(v);
    let Some((g, alpha)) = start else { return vec![first] };

    let f = he.face[g as usize];
    let hs = he.face_hes(f);
    let k = hs.iter().position(|&x| x == g).unwrap();
    let c = he.corner(g);
    let mut pos = [[0.0; 2]; 3];
    pos[k] = [0.0, 0.0];
    pos[(k + 1) % 3] = [he.hlen(g), 0.0];
    let lp = he.hlen(he.prev(g));
    pos[(k + 2) % 3] = [lp * c.cos(), lp * c.sin()];

    let mut points = vec![point_in(f, &pos, [0.0, 0.0])];
    let dir = [alpha.cos(), alpha.sin()];
    let mut face = f;
    let mut p = [0.0, 0.0];
    let mut travelled = 0.0;
    // the only admissible exit from the start corner is the opposite side
    let mut exclude: [Option<usize>; 2] = [Some(k), Some((k + 2) % 3)];
    for _ in 0..1_000_000 {
        let hs = he.face_hes(face);
        let mut best: Option<(f64, usize, f64)> = None;
        for side in 0..3 {
            if exclude.contains(&Some(side)) {
                continue;
            }
            let (a, b) = (pos[side], pos[(side + 1) % 3]);
            if let Some((t, s)) = ray_segment(p, dir, a, b) {
                if best.map_or(true, |x| t < x.0) {
                    best = Some((t, side, s));
                }
            }
        }
        let remaining = len - travelled;
        let Some((t, side, s)) = best else {
            points.push(point_in(face, &pos, [p[0] + remaining * dir[0], p[1] + remaining * dir[1]]));
            break;
        };
        if t >= remaining - 1e-12 * len {
            points.push(point_in(face, &pos, [p[0] + remaining * dir[0], p[1] + remaining * dir[1]]));
            break;
        }
        let (a, b) = (pos[side], pos[(side + 1) % 3]);
        p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        travelled += t;
        points.push(point_in(face, &pos, p));

        let h = hs[side];
        let nf = he.face[twin(h) as usize];
        if nf == NONE {
            break;
        }
        // lay out the neighbour: its half-edge twin(h) runs b → a
        let nhs = he.face_hes(nf);
        let j = nhs.iter().position(|&x| x == twin(h)).unwrap();
        let l_bc = he.hlen(nhs[(j + 2) % 3]);
        let l_ac = he.hlen(nhs[(j + 1) % 3]);
        let third = place_third(b, a, l_bc, l_ac);
        let mut npos = [[0.0; 2]; 3];
        npos[j] = b;
        npos[(j + 1) % 3] = a;
        npos[(j + 2) % 3] = third;
        pos = npos;
        face = nf;
        exclude = [Some(j), None];
    }
    points
}

fn point_in(face: u32, pos: &[[f64; 2]; 3], x: [f64; 2]) -> PathPoint {
    let mut bary = barycentric(*pos, x);
    for b in bary.iter_mut() {
        if b.abs() < 1e-14 {
            *b = 0.0;
        }
    }
    PathPoint { face: FaceId(face), bary }
}

/// Ray `p + t d` against segment `a + s (b - a)`; returns `(t, s)` with `t > 0`, `s ∈ [0, 1]`.
fn ray_segment(p: [f64; 2], d: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<(f64, f64)> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = d[0] * e[1] - d[1] * e[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = [a[0] - p[0], a[1] - p[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / denom;
    let s = (w[0] * d[1] - w[1] * d[0]) / denom;
    let tol = 1e-12;
    (t > 1e-15 && (-tol..=1.0 + tol).contains(&s)).then(|| (t, s.clamp(0.0, 1.0)))
}

/// Third vertex of triangle `(p, q, x)` with `|p x| = lp` and `|q x| = lq`, to the left of `p → q`.
fn place_third(p: [f64; 2], q: [f64; 2], lp: f64, lq: f64) -> [f64; 2] {
    let d = [q[0] - p[0], q[1] - p[1]];
    let l = d[0].hypot(d[1]);
    let local = crate::mesh::unfold_third(l, lp, lq);
    let (ux, uy) = (d[0] / l, d[1] / l);
    [p[0] + local[0] * ux - local[1] * uy, p[1] + local[0] * uy + local[1] * ux]
}
