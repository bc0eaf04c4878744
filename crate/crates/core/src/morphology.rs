//! Erosion, dilation, opening and closing of regions bounded by closed parameter loops.

use serde::{Deserialize, Serialize};

use crate::curve::SourceCurve;
use crate::error::{config, Error, Result};
use crate::pipeline::{run_offset, OffsetConfig};
use crate::surface::{ParamPoint, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inside,
    Outside,
}

/// A region given by closed boundary loops under the even-odd rule.
///
/// Outer loops run counterclockwise in parameter coordinates and holes clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    loops: Vec<SourceCurve>,
}

impl Region {
    pub fn new(loops: Vec<SourceCurve>, spec: &SurfaceSpec) -> Result<Self> {
        let mut polys = Vec::with_capacity(loops.len());
        for (i, c) in loops.iter().enumerate() {
            if !c.is_closed() {
                return config(format!("region loop {i} is not closed"));
            }
            check_seam(c.samples(), spec)?;
            polys.push(c.samples().to_vec());
        }
        let mut out = Vec::with_capacity(loops.len());
        for (i, c) in loops.into_iter().enumerate() {
            let depth = (0..polys.len()).filter(|&j| j != i && contains(&polys[j], polys[i][0])).count();
            let ccw = signed_area(&polys[i]) > 0.0;
            if ccw == (depth % 2 == 0) {
                out.push(c);
            } else {
                let mut s = c.samples().to_vec();
                s.reverse();
                out.push(SourceCurve::new(s, true, spec)?);
            }
        }
        Ok(Self { loops: out })
    }

    pub fn empty() -> Self {
        Self { loops: Vec::new() }
    }

    pub fn loops(&self) -> &[SourceCurve] {
        &self.loops
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn classify(&self, p: ParamPoint, spec: &SurfaceSpec) -> Side {
        let p = spec.wrap(p);
        let crossings = self.loops.iter().filter(|c| contains(c.samples(), p)).count();
        if crossings % 2 == 1 {
            Side::Inside
        } else {
            Side::Outside
        }
    }

    /// Surface area of the inside, by midpoint quadrature on an `n x n` parameter grid.
    pub fn area(&self, spec: &SurfaceSpec, n: usize) -> f64 {
        let dom = spec.usable_domain();
        let (du, dv) = (dom.width() / n as f64, dom.height() / n as f64);
        let mut area = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = ParamPoint::new(dom.u0 + (i as f64 + 0.5) * du, dom.v0 + (j as f64 + 0.5) * dv);
                if self.classify(p, spec) == Side::Inside {
                    area += spec.metric_raw(p.u, p.v).det().max(0.0).sqrt() * du * dv;
                }
            }
        }
        area
    }
}

fn check_seam(samples: &[ParamPoint], spec: &SurfaceSpec) -> Result<()> {
    let [pu, pv] = spec.period();
    let n = samples.len();
    for i in 0..n {
        let (a, b) = (samples[i], samples[(i + 1) % n]);
        if pu.is_some_and(|t| (b.u - a.u).abs() > 0.5 * t) || pv.is_some_and(|t| (b.v - a.v).abs() > 0.5 * t) {
            return Err(Error::Unsupported("regions spanning a periodic seam are not supported".into()));
        }
    }
    Ok(())
}

fn contains(poly: &[ParamPoint], p: ParamPoint) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.v > p.v) != (b.v > p.v) {
            let x = a.u + (p.v - a.v) / (b.v - a.v) * (b.u - a.u);
            if p.u < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn signed_area(poly: &[ParamPoint]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].u * poly[(i + 1) % n].v - poly[(i + 1) % n].u * poly[i].v).sum::<f64>()
}

/// Closed loop through `pts`, with midpoints added to the longest links until it has enough samples.
fn densify(mut pts: Vec<ParamPoint>) -> Vec<ParamPoint> {
    while pts.len() < SourceCurve::MIN_SAMPLES {
        let n = pts.len();
        let i = (0..n).max_by(|&a, &b| pts[a].dist(pts[(a + 1) % n]).total_cmp(&pts[b].dist(pts[(b + 1) % n]))).unwrap();
        let m = pts[i].lerp(pts[(i + 1) % n], 0.5);
        pts.insert(i + 1, m);
    }
    pts
}

/// Components of the distance-`d` level set of the boundary lying on `keep`.
fn offset_side(spec: &SurfaceSpec, region: &Region, d: f64, keep: Side, cfg: &OffsetConfig) -> Result<Region> {
    if !(d > 0.0 && d.is_finite()) {
        return config(format!("morphology distance must be positive, got {d}"));
    }
    if region.is_empty() {
        return Ok(Region::empty());
    }
    let run = run_offset(spec, &region.loops, d, cfg)?;
    let mut loops = Vec::new();
    for pl in &run.result.polylines {
        if pl.points.len() < 3 {
            continue;
        }
        if !pl.closed {
            return Err(Error::Unsupported(
                "the offset reaches the domain boundary; the region must stay inside the domain".into(),
            ));
        }
        if region.classify(pl.points[0].param, spec) != keep {
            continue;
        }
        let pts = densify(pl.params());
        check_seam(&pts, spec)?;
        loops.push(SourceCurve::new(pts, true, spec)?);
    }
    Region::new(loops, spec)
}

pub fn dilate(spec: &SurfaceSpec, region: &Region, d: f64, cfg: &OffsetConfig) -> Result<Region> {
    offset_side(spec, region, d, Side::Outside, cfg)
}

pub fn erode(spec: &SurfaceSpec, region: &Region, d: f64, cfg: &OffsetConfig) -> Result<Region> {
    offset_side(spec, region, d, Side::Inside, cfg)
}

/// Erosion followed by dilation; removes features narrower than `2 d`.
pub fn opening(spec: &SurfaceSpec, region: &Region, d: f64, cfg: &OffsetConfig) -> Result<Region> {
    dilate(spec, &erode(spec, region, d, cfg)?, d, cfg)
}

/// Dilation followed by erosion; fills holes and gaps narrower than `2 d`.
pub fn closing(spec: &SurfaceSpec, region: &Region, d: f64, cfg: &OffsetConfig) -> Result<Region> {
    erode(spec, &dilate(spec, region, d, cfg)?, d, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Domain;

    fn plane() -> SurfaceSpec {
        SurfaceSpec::plane(Domain::new(-3.0, 3.0, -3.0, 3.0)).unwrap()
    }

    fn circle(c: (f64, f64), r: f64, spec: &SurfaceSpec) -> SourceCurve {
        SourceCurve::circle_uv(ParamPoint::new(c.0, c.1), r, 64, spec).unwrap()
    }

    #[test]
    fn classify_disk_and_annulus() {
        let spec = plane();
        let disk = Region::new(vec![circle((0.0, 0.0), 1.0, &spec)], &spec).unwrap();
        assert_eq!(disk.classify(ParamPoint::new(0.0, 0.0), &spec), Side::Inside);
        assert_eq!(disk.classify(ParamPoint::new(2.0, 0.0), &spec), Side::Outside);
        let annulus = Region::new(vec![circle((0.0, 0.0), 1.0, &spec), circle((0.0, 0.0), 0.5, &spec)], &spec).unwrap();
        assert_eq!(annulus.classify(ParamPoint::new(0.75, 0.0), &spec), Side::Inside);
        assert_eq!(annulus.classify(ParamPoint::new(0.0, 0.0), &spec), Side::Outside);
    }

    #[test]
    fn loops_are_oriented_by_nesting() {
        let spec = plane();
        let mut inner = circle((0.0, 0.0), 0.5, &spec).samples().to_vec();
        inner.reverse();
        let inner = SourceCurve::new(inner, true, &spec).unwrap();
        let r = Region::new(vec![inner, circle((0.0, 0.0), 1.0, &spec)], &spec).unwrap();
        assert!(signed_area(r.loops()[0].samples()) < 0.0);
        assert!(signed_area(r.loops()[1].samples()) > 0.0);
    }

    #[test]
    fn area_of_disk() {
        let spec = plane();
        let disk = Region::new(vec![circle((0.0, 0.0), 1.0, &spec)], &spec).unwrap();
        let polygon = signed_area(disk.loops()[0].samples());
        assert!((disk.area(&spec, 600) - polygon).abs() < 2e-3);
    }

    #[test]
    fn seam_spanning_loop_is_unsupported() {
        let spec = SurfaceSpec::cylinder(1.0, -1.0, 1.0).unwrap();
        let c = SourceCurve::circle_uv(ParamPoint::new(0.0, 0.0), 0.3, 64, &spec).unwrap();
        assert!(matches!(Region::new(vec![c], &spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn densify_reaches_minimum() {
        let pts = vec![ParamPoint::new(0.0, 0.0), ParamPoint::new(1.0, 0.0), ParamPoint::new(0.0, 1.0)];
        let d = densify(pts);
        assert_eq!(d.len(), SourceCurve::MIN_SAMPLES);
        assert!((signed_area(&d) - 0.5).abs() < 1e-12);
    }
}
