//! Lower envelope of linear distance planes over one unfolded triangle.

use crate::mesh::{SiteId, UnfoldedTriangle};

/// A site with its distances at the three triangle corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub site: SiteId,
    pub dist: [f64; 3],
}

/// Convex counterclockwise piece of the triangle where one site's plane is lowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SubPolygon {
    pub points: Vec<[f64; 2]>,
    pub site: SiteId,
}

/// Linear function `g · x + c` over the unfolded frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub g: [f64; 2],
    pub c: f64,
}

impl Plane {
    pub fn through(tri: &UnfoldedTriangle, d: [f64; 3]) -> Self {
        let [p0, p1, p2] = tri.p;
        let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
        let (r1, r2) = (d[1] - d[0], d[2] - d[0]);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let g = [(r1 * e2[1] - r2 * e1[1]) / det, (e1[0] * r2 - e2[0] * r1) / det];
        Self { g, c: d[0] - g[0] * p0[0] - g[1] * p0[1] }
    }

    #[inline]
    pub fn at(&self, x: [f64; 2]) -> f64 {
        self.g[0] * x[0] + self.g[1] * x[1] + self.c
    }
}

/// Splits the triangle into the regions where each candidate's interpolated distance is minimal.
///
/// Candidates dominated at all three corners are skipped; of two identical planes the smaller
/// site id wins. Pieces thinner than `1e-12` of the triangle diameter are dropped.
pub fn cut_triangle(tri: &UnfoldedTriangle, candidates: &[Candidate]) -> Vec<SubPolygon> {
    let mut cands: Vec<Candidate> = candidates.to_vec();
    cands.sort_by_key(|c| c.site);
    cands.dedup_by_key(|c| c.site);
    let diam = diameter(tri);
    let eps = 1e-12 * diam;
    let scale = cands.iter().flat_map(|c| c.dist).fold(0.0f64, |m, d| m.max(d.abs())).max(diam);
    let tie = 1e-14 * scale;

    let kept: Vec<usize> = (0..cands.len())
        .filter(|&i| {
            !cands.iter().enumerate().any(|(j, o)| {
                j != i && {
                    let below = (0..3).all(|k| o.dist[k] <= cands[i].dist[k] + tie);
                    let strictly = (0..3).any(|k| o.dist[k] < cands[i].dist[k] - tie);
                    below && (strictly || j < i)
                }
            })
        })
        .collect();
    if kept.len() == 1 {
        return vec![SubPolygon { points: tri.p.to_vec(), site: cands[kept[0]].site }];
    }
    let planes: Vec<Plane> = kept.iter().map(|&i| Plane::through(tri, cands[i].dist)).collect();

    let mut out = Vec::new();
    for (a, &i) in kept.iter().enumerate() {
        let mut poly = tri.p.to_vec();
        for (b, _) in kept.iter().enumerate() {
            if a == b {
                continue;
            }
            // keep where plane a is not above plane b
            let h = Plane {
                g: [planes[a].g[0] - planes[b].g[0], planes[a].g[1] - planes[b].g[1]],
                c: planes[a].c - planes[b].c,
            };
            poly = clip(&poly, &h, if b < a { -tie } else { tie });
            if poly.len() < 3 {
                break;
            }
        }
        if poly.len() >= 3 && polygon_area(&poly) > eps * diam {
            out.push(SubPolygon { points: poly, site: cands[i].site });
        }
    }
    out
}

/// Sutherland–Hodgman clip of a convex polygon to `h(x) <= slack`.
fn clip(poly: &[[f64; 2]], h: &Plane, slack: f64) -> Vec<[f64; 2]> {
    let n = poly.len();
    let vals: Vec<f64> = poly.iter().map(|&p| h.at(p) - slack).collect();
    if vals.iter().all(|&v| v <= 0.0) {
        return poly.to_vec();
    }
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let (vp, vq) = (vals[k], vals[(k + 1) % n]);
        if vp <= 0.0 {
            out.push(p);
        }
        if (vp <= 0.0) != (vq <= 0.0) {
            let t = vp / (vp - vq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub(crate) fn diameter(tri: &UnfoldedTriangle) -> f64 {
    let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    d(tri.p[0], tri.p[1]).max(d(tri.p[1], tri.p[2])).max(d(tri.p[2], tri.p[0]))
}

/// Sites winning a positive-length piece of a segment on which each site's value runs
/// linearly from `.1` at `t = 0` to `.2` at `t = 1`, and the breakpoints between them.
pub(crate) fn envelope_1d(lines: &[(SiteId, f64, f64)]) -> (Vec<SiteId>, Vec<f64>) {
    const MIN_PIECE: f64 = 1e-9;
    let slope = |l: &(SiteId, f64, f64)| l.2 - l.1;
    // lowest at t = 0; among ties the one that stays lowest
    let mut cur = *lines
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(slope(x).total_cmp(&slope(y))).then(x.0.cmp(&y.0)))
        .expect("nonempty");
    let mut winners = vec![cur.0];
    let mut breaks: Vec<f64> = Vec::new();
    let mut t0 = 0.0;
    loop {
        let mut next: Option<(f64, (SiteId, f64, f64))> = None;
        for l in lines {
            let ds = slope(l) - slope(&cur);
            if l.0 == cur.0 || ds >= 0.0 {
                continue;
            }
            let t = ((cur.1 - l.1) / ds).max(t0);
            let better = match next {
                None => true,
                Some((tn, ln)) => t < tn || (t == tn && (slope(l), l.0) < (slope(&ln), ln.0)),
            };
            if better {
                next = Some((t, *l));
            }
        }
        let Some((t, l)) = next else { break };
        if t >= 1.0 - MIN_PIECE {
            break;
        }
        if t - breaks.last().copied().unwrap_or(0.0) <= MIN_PIECE {
            // the previous piece has no length
            *winners.last_mut().unwrap() = l.0;
            if let Some(b) = breaks.last_mut() {
                *b = t;
            }
            if winners.len() >= 2 && winners[winners.len() - 2] == l.0 {
                winners.pop();
                breaks.pop();
            }
        } else {
            breaks.push(t);
            winners.push(l.0);
        }
        t0 = t;
        cur = l;
    }
    (winners, breaks)
}
