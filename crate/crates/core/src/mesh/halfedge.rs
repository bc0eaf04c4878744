//! Half-edge connectivity with explicit boundary half-edges and intrinsic edge lengths.
//!
//! Half-edges come in pairs: `twin(h) = h ^ 1` and `edge(h) = h >> 1`. Boundary half-edges
//! have `face == NONE` and `next == NONE`.

use std::f64::consts::PI;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub(crate) struct HalfEdges {
    pub next: Vec<u32>,
    /// Origin vertex.
    pub vert: Vec<u32>,
    pub face: Vec<u32>,
    /// Per edge.
    pub len: Vec<f64>,
    pub f_he: Vec<u32>,
    pub v_he: Vec<u32>,
}

/// The two triangles around an interior edge, `h: a→b` in face `(a, b, c)` and `t: b→a` in `(b, a, d)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quad {
    pub h: u32,
    pub h1: u32,
    pub h2: u32,
    pub t: u32,
    pub t1: u32,
    pub t2: u32,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub f0: u32,
    pub f1: u32,
}

#[inline]
pub(crate) fn twin(h: u32) -> u32 {
    h ^ 1
}

#[inline]
pub(crate) fn edge(h: u32) -> u32 {
    h >> 1
}

impl HalfEdges {
    pub fn n_vertices(&self) -> usize {
        self.v_he.len()
    }

    pub fn n_faces(&self) -> usize {
        self.f_he.len()
    }

    pub fn n_edges(&self) -> usize {
        self.len.len()
    }

    #[inline]
    pub fn tip(&self, h: u32) -> u32 {
        self.vert[twin(h) as usize]
    }

    #[inline]
    pub fn prev(&self, h: u32) -> u32 {
        self.next[self.next[h as usize] as usize]
    }

    #[inline]
    pub fn hlen(&self, h: u32) -> f64 {
        self.len[edge(h) as usize]
    }

    #[inline]
    pub fn is_boundary_he(&self, h: u32) -> bool {
        self.face[h as usize] == NONE
    }

    pub fn is_boundary_edge(&self, e: u32) -> bool {
        self.face[(2 * e) as usize] == NONE || self.face[(2 * e + 1) as usize] == NONE
    }

    /// Interior angle at the origin of `h` inside `face(h)`.
    #[inline]
    pub fn corner(&self, h: u32) -> f64 {
        let n = self.next[h as usize];
        corner_angle(self.hlen(h), self.hlen(self.next[n as usize]), self.hlen(n))
    }

    /// Next outgoing half-edge counterclockwise around the origin; requires `face(h) != NONE`.
    #[inline]
    pub fn ccw(&self, h: u32) -> u32 {
        twin(self.prev(h))
    }

    /// Outgoing half-edge where a counterclockwise sweep around `v` starts.
    ///
    /// For boundary vertices this is the spoke with the boundary on its right.
    pub fn first_outgoing(&self, v: u32) -> u32 {
        let start = self.v_he[v as usize];
        let mut h = start;
        loop {
            let t = twin(h);
            if self.face[t as usize] == NONE {
                return h;
            }
            h = self.next[t as usize];
            if h == start {
                return start;
            }
        }
    }

    /// Outgoing half-edges in counterclockwise order. The last one of a boundary vertex has no face.
    pub fn outgoing(&self, v: u32) -> Vec<u32> {
        let start = self.first_outgoing(v);
        let mut out = vec![start];
        let mut h = start;
        while self.face[h as usize] != NONE {
            h = self.ccw(h);
            if h == start {
                break;
            }
            out.push(h);
        }
        out
    }

    pub fn is_boundary_vertex(&self, v: u32) -> bool {
        self.face[twin(self.first_outgoing(v)) as usize] == NONE
    }

    /// Half-edges of face `f` starting from `f_he[f]`.
    #[inline]
    pub fn face_hes(&self, f: u32) -> [u32; 3] {
        let h0 = self.f_he[f as usize];
        let h1 = self.next[h0 as usize];
        [h0, h1, self.next[h1 as usize]]
    }

    #[inline]
    pub fn face_verts(&self, f: u32) -> [u32; 3] {
        self.face_hes(f).map(|h| self.vert[h as usize])
    }

    pub fn quad(&self, e: u32) -> Option<Quad> {
        let h = 2 * e;
        let t = h + 1;
        let (f0, f1) = (self.face[h as usize], self.face[t as usize]);
        if f0 == NONE || f1 == NONE || f0 == f1 {
            return None;
        }
        let h1 = self.next[h as usize];
        let h2 = self.next[h1 as usize];
        let t1 = self.next[t as usize];
        let t2 = self.next[t1 as usize];
        Some(Quad {
            h,
            h1,
            h2,
            t,
            t1,
            t2,
            a: self.vert[h as usize],
            b: self.vert[t as usize],
            c: self.vert[h2 as usize],
            d: self.vert[t2 as usize],
            f0,
            f1,
        })
    }

    /// Length of the flipped diagonal if the quad is strictly convex at both edge endpoints.
    pub fn flipped_length(&self, q: &Quad) -> Option<f64> {
        if q.c == q.d {
            return None;
        }
        let l = self.hlen(q.h);
        let (l_ac, l_bc) = (self.hlen(q.h2), self.hlen(q.h1));
        let (l_ad, l_bd) = (self.hlen(q.t1), self.hlen(q.t2));
        let at_a = corner_angle(l, l_ac, l_bc) + corner_angle(l, l_ad, l_bd);
        let at_b = corner_angle(l, l_bc, l_ac) + corner_angle(l, l_bd, l_ad);
        if !(at_a < PI - 1e-12 && at_b < PI - 1e-12) {
            return None;
        }
        let c = unfold_third(l, l_ac, l_bc);
        let d = unfold_third(l, l_ad, l_bd);
        let len = (c[0] - d[0]).hypot(c[1] + d[1]);
        (len > 0.0 && len.is_finite()).then_some(len)
    }

    /// Rewires the quad so the edge joins `c` and `d`: `h` becomes `d→c`, `t` becomes `c→d`.
    pub fn apply_flip(&mut self, q: &Quad, new_len: f64) {
        let (h, t) = (q.h as usize, q.t as usize);
        self.vert[h] = q.d;
        self.vert[t] = q.c;
        self.next[q.h2 as usize] = q.t1;
        self.next[q.t1 as usize] = q.h;
        self.next[h] = q.h2;
        self.next[q.t2 as usize] = q.h1;
        self.next[q.h1 as usize] = q.t;
        self.next[t] = q.t2;
        self.face[q.t1 as usize] = q.f0;
        self.face[q.h1 as usize] = q.f1;
        self.face[h] = q.f0;
        self.face[t] = q.f1;
        self.f_he[q.f0 as usize] = q.h;
        self.f_he[q.f1 as usize] = q.t;
        self.v_he[q.a as usize] = q.t1;
        self.v_he[q.b as usize] = q.h1;
        self.len[edge(q.h) as usize] = new_len;
    }

    pub fn check_connectivity(&self) -> Result<(), String> {
        let nh = self.next.len();
        if self.vert.len() != nh || self.face.len() != nh || 2 * self.len.len() != nh {
            return Err("array size mismatch".into());
        }
        for h in 0..nh as u32 {
            let f = self.face[h as usize];
            if f == NONE {
                if self.face[twin(h) as usize] == NONE {
                    return Err(format!("edge {} has no face", edge(h)));
                }
                continue;
            }
            let n = self.next[h as usize];
            if n == NONE || self.face[n as usize] != f || self.next[self.next[n as usize] as usize] != h {
                return Err(format!("half-edge {h} is not in a 3-cycle"));
            }
            if self.vert[n as usize] != self.tip(h) {
                return Err(format!("half-edge {h} does not chain"));
            }
        }
        for (f, &h) in self.f_he.iter().enumerate() {
            if self.face[h as usize] != f as u32 {
                return Err(format!("face {f} points at a foreign half-edge"));
            }
        }
        for (v, &h) in self.v_he.iter().enumerate() {
            if self.vert[h as usize] != v as u32 {
                return Err(format!("vertex {v} points at a foreign half-edge"));
            }
        }
        Ok(())
    }
}

/// Angle between sides `a` and `b`, opposite side `c`.
#[inline]
pub fn corner_angle(a: f64, b: f64, c: f64) -> f64 {
    let area4 = 4.0 * heron_area(a, b, c);
    area4.atan2(a * a + b * b - c * c)
}

/// Triangle area from side lengths, in the numerically stable ordering.
#[inline]
pub fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    let (mut x, mut y, mut z) = (a, b, c);
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    if y < z {
        std::mem::swap(&mut y, &mut z);
    }
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    let p = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    0.25 * p.max(0.0).sqrt()
}

#[inline]
pub fn triangle_slack(a: f64, b: f64, c: f64) -> f64 {
    (a + b - c).min(b + c - a).min(c + a - b)
}

/// Third vertex of a triangle laid out with `p0 = (0, 0)` and `p1 = (l01, 0)`, above the axis.
#[inline]
pub fn unfold_third(l01: f64, l02: f64, l12: f64) -> [f64; 2] {
    let x = (l01 * l01 + l02 * l02 - l12 * l12) / (2.0 * l01);
    let y = 2.0 * heron_area(l01, l02, l12) / l01;
    [x, y]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral() {
        assert!((corner_angle(1.0, 1.0, 1.0) - PI / 3.0).abs() < 1e-15);
        assert!((heron_area(1.0, 1.0, 1.0) - 3f64.sqrt() / 4.0).abs() < 1e-15);
        let p = unfold_third(1.0, 1.0, 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn needle_angles_are_accurate() {
        // a sliver with a tiny angle: acos would lose most digits here
        let (a, b) = (1.0, 1.0);
        let theta: f64 = 1e-9;
        let c = 2.0 * (theta / 2.0).sin();
        assert!((corner_angle(a, b, c) - theta).abs() < 1e-20 + 1e-6 * theta);
    }

    #[test]
    fn right_angle() {
        assert!((corner_angle(3.0, 4.0, 5.0) - PI / 2.0).abs() < 1e-15);
        assert!((heron_area(3.0, 4.0, 5.0) - 6.0).abs() < 1e-14);
    }
}
