//! OBJ, SVG and JSON renderings of offsets, labellings and regions.

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::curve::SourceCurve;
use crate::offset::OffsetResult;
use crate::surface::{ParamPoint, SurfaceSpec};
use crate::voronoi::LabeledMesh;

/// Lifted polylines as `v` and `l` records.
pub fn offset_obj(result: &OffsetResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# offset distance {}", result.offset_distance);
    let mut base = 1usize;
    for pl in &result.polylines {
        for p in &pl.lifted {
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        let n = pl.lifted.len();
        if n < 2 {
            base += n;
            continue;
        }
        // a closed loop repeats its first lifted point at the end
        let count = if pl.closed { n - 1 } else { n };
        out.push('l');
        for i in 0..count {
            let _ = write!(out, " {}", base + i);
        }
        if pl.closed {
            let _ = write!(out, " {base}");
        }
        out.push('\n');
        base += n;
    }
    out
}

#[derive(Serialize)]
struct PolylineJson<'a> {
    closed: bool,
    params: Vec<[f64; 2]>,
    sites: Vec<u32>,
    faces: Vec<u32>,
    lifted: &'a [crate::surface::SurfacePoint],
}

/// Parameter and surface coordinates of every polyline with the site each vertex came from.
pub fn offset_json(spec: &SurfaceSpec, result: &OffsetResult) -> Value {
    let polylines: Vec<PolylineJson> = result
        .polylines
        .iter()
        .map(|pl| PolylineJson {
            closed: pl.closed,
            params: pl.points.iter().map(|p| p.param.into()).collect(),
            sites: pl.points.iter().map(|p| p.site.0).collect(),
            faces: pl.points.iter().map(|p| p.face.0).collect(),
            lifted: &pl.lifted,
        })
        .collect();
    json!({
        "surface": spec,
        "offset_distance": result.offset_distance,
        "clipped": result.clipped,
        "vertex_count": result.vertex_count(),
        "polylines": polylines,
    })
}

/// Closed loops of a region in parameter coordinates.
pub fn loops_json(spec: &SurfaceSpec, loops: &[SourceCurve]) -> Value {
    let loops: Vec<Value> = loops
        .iter()
        .map(|c| json!({ "closed": c.is_closed(), "samples": c.samples().iter().map(|&p| <[f64; 2]>::from(p)).collect::<Vec<_>>() }))
        .collect();
    json!({ "surface": spec, "loops": loops })
}

/// Lifted region loops as OBJ polylines.
pub fn loops_obj(spec: &SurfaceSpec, loops: &[SourceCurve]) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for c in loops {
        let lifted = crate::offset::lift(spec, c.samples(), true);
        for p in &lifted {
            let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        }
        out.push('l');
        for i in 0..lifted.len() - 1 {
            let _ = write!(out, " {}", base + i);
        }
        let _ = writeln!(out, " {base}");
        base += lifted.len();
    }
    out
}

/// Voronoi cells: site parameters and every labelled sub-triangle in parameter coordinates.
pub fn labels_json(spec: &SurfaceSpec, labeled: &LabeledMesh, sites: &[ParamPoint]) -> Value {
    let cells: Vec<Value> = labeled
        .faces
        .iter()
        .map(|f| json!({ "site": f.site.0, "parent": f.parent.0, "uv": f.uv.map(<[f64; 2]>::from) }))
        .collect();
    json!({
        "surface": spec,
        "cutoff": labeled.cutoff,
        "sites": sites.iter().map(|&p| <[f64; 2]>::from(p)).collect::<Vec<_>>(),
        "labelled_sites": labeled.labels().len(),
        "cells": cells,
    })
}

/// Labelled sub-triangles lifted to the surface, grouped by site.
pub fn labels_obj(spec: &SurfaceSpec, labeled: &LabeledMesh) -> String {
    let mut out = String::new();
    let mut current = None;
    for (i, f) in labeled.faces.iter().enumerate() {
        if current != Some(f.site) {
            let _ = writeln!(out, "g site_{}", f.site.0);
            current = Some(f.site);
        }
        for p in f.uv {
            let q = spec.eval_raw(p.u, p.v);
            let _ = writeln!(out, "v {} {} {}", q.x, q.y, q.z);
        }
        let b = 3 * i + 1;
        let _ = writeln!(out, "f {} {} {}", b, b + 1, b + 2);
    }
    out
}

const SIZE: f64 = 800.0;

struct Frame {
    u0: f64,
    v1: f64,
    scale: f64,
    period: [Option<f64>; 2],
}

impl Frame {
    fn new(spec: &SurfaceSpec) -> Self {
        let d = spec.domain();
        Self { u0: d.u0, v1: d.v1, scale: SIZE / d.width().max(d.height()), period: spec.period() }
    }

    fn xy(&self, p: ParamPoint) -> (f64, f64) {
        ((p.u - self.u0) * self.scale, (self.v1 - p.v) * self.scale)
    }

    fn jumps(&self, a: ParamPoint, b: ParamPoint) -> bool {
        self.period[0].is_some_and(|t| (a.u - b.u).abs() > 0.5 * t) || self.period[1].is_some_and(|t| (a.v - b.v).abs() > 0.5 * t)
    }

    /// Path data, broken wherever the polyline wraps across a periodic seam.
    fn path(&self, pts: &[ParamPoint], closed: bool) -> String {
        let mut d = String::new();
        let n = pts.len();
        let links = if closed { n } else { n.saturating_sub(1) };
        for i in 0..=links.min(n) {
            let p = pts[i % n];
            let (x, y) = self.xy(p);
            let cmd = if i == 0 || self.jumps(pts[(i + n - 1) % n], p) { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{x:.3},{y:.3}");
        }
        d
    }
}

fn color(site: u32) -> String {
    let h = (site.wrapping_mul(2654435761) >> 8) % 360;
    format!("hsl({h},65%,72%)")
}

/// Parameter-domain picture: labelled cells, source curves and offset polylines.
pub fn svg(spec: &SurfaceSpec, labeled: Option<&LabeledMesh>, sources: &[SourceCurve], offsets: &[(Vec<ParamPoint>, bool)]) -> String {
    let frame = Frame::new(spec);
    let d = spec.domain();
    let (w, h) = (d.width() * frame.scale, d.height() * frame.scale);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#);
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    if let Some(lab) = labeled {
        out.push_str("<g stroke-width=\"0.2\">\n");
        for f in &lab.faces {
            let pts = f.uv.map(|p| frame.xy(p));
            let _ = writeln!(
                out,
                r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="{c}" stroke="{c}"/>"#,
                pts[0].0, pts[0].1, pts[1].0, pts[1].1, pts[2].0, pts[2].1,
                c = color(f.site.0)
            );
        }
        out.push_str("</g>\n");
    }
    for c in sources {
        let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#202020" stroke-width="1.5"/>"##, frame.path(c.samples(), c.is_closed()));
    }
    for (pts, closed) in offsets {
        if pts.len() >= 2 {
            let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#c0182b" stroke-width="1.2"/>"##, frame.path(pts, *closed));
        }
    }
    out.push_str("</svg>\n");
    out
}
