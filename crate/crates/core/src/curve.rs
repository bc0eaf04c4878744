//! Source curves in the parameter domain and their arc-length discretization into sites.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::surface::{ParamPoint, SurfaceSpec};

/// A polyline in parameter space, open or closed.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCurve {
    samples: Vec<ParamPoint>,
    closed: bool,
}

impl SourceCurve {
    pub const MIN_SAMPLES: usize = 16;

    pub fn new(samples: Vec<ParamPoint>, closed: bool, spec: &SurfaceSpec) -> Result<Self> {
        if samples.len() < Self::MIN_SAMPLES {
            return config(format!("curve needs at least {} samples, got {}", Self::MIN_SAMPLES, samples.len()));
        }
        let mut wrapped = Vec::with_capacity(samples.len());
        for p in &samples {
            wrapped.push(spec.check_in_domain(*p)?);
        }
        let scale = 1e-14 * spec.domain().extent();
        let n = wrapped.len();
        let pairs = if closed { n } else { n - 1 };
        for i in 0..pairs {
            let a = wrapped[i];
            let b = spec.unwrap_near(wrapped[(i + 1) % n], a);
            if a.dist(b) <= scale {
                return config(format!("curve samples {i} and {} coincide", (i + 1) % n));
            }
        }
        Ok(Self { samples: wrapped, closed })
    }

    /// Circle of the given parameter-space radius, counterclockwise.
    pub fn circle_uv(center: ParamPoint, radius: f64, samples: usize, spec: &SurfaceSpec) -> Result<Self> {
        if !(radius > 0.0) {
            return config("circle radius must be positive");
        }
        let pts = (0..samples)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / samples as f64;
                ParamPoint::new(center.u + radius * t.cos(), center.v + radius * t.sin())
            })
            .collect();
        Self::new(pts, true, spec)
    }

    /// Parameter-straight line. A closed line runs once around a periodic axis and omits `to`.
    pub fn line_uv(from: ParamPoint, to: ParamPoint, samples: usize, closed: bool, spec: &SurfaceSpec) -> Result<Self> {
        let denom = if closed { samples } else { samples.saturating_sub(1).max(1) };
        let pts = (0..samples).map(|i| from.lerp(to, i as f64 / denom as f64)).collect();
        Self::new(pts, closed, spec)
    }

    pub fn samples(&self) -> &[ParamPoint] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.samples.len()
        } else {
            self.samples.len() - 1
        }
    }

    /// Endpoints of segment `i`, with the second unwrapped next to the first.
    pub fn segment(&self, i: usize, spec: &SurfaceSpec) -> (ParamPoint, ParamPoint) {
        let a = self.samples[i];
        let b = self.samples[(i + 1) % self.samples.len()];
        (a, spec.unwrap_near(b, a))
    }

    /// Cumulative induced arc length at every sample (and at the closing sample for closed curves).
    pub fn cumulative_length(&self, spec: &SurfaceSpec) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.segment_count() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i, spec);
            acc += spec.induced_length_unwrapped(a, b);
            cum.push(acc);
        }
        cum
    }

    pub fn length(&self, spec: &SurfaceSpec) -> f64 {
        *self.cumulative_length(spec).last().unwrap()
    }

    /// Surface point at arc position `s`, located exactly by inverting the induced length.
    pub fn point_at(&self, s: f64, cum: &[f64], spec: &SurfaceSpec) -> ParamPoint {
        let seg = match cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.segment_count() - 1),
            Err(i) => i.saturating_sub(1).min(self.segment_count() - 1),
        };
        let (a, b) = self.segment(seg, spec);
        let t = spec.arc_parameter(a, b, s - cum[seg]);
        spec.wrap(a.lerp(b, t))
    }
}

/// Point site on the discretized curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub param: ParamPoint,
    pub arc_position: f64,
}

/// Arc-length-uniform sites of one curve; each site stands for one curve segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    pub sites: Vec<Site>,
    pub segment_lengths: Vec<f64>,
    pub closed: bool,
    pub total_length: f64,
}

impl SiteSet {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.closed {
            self.total_length / self.sites.len() as f64
        } else {
            self.total_length / (self.sites.len() - 1) as f64
        }
    }
}

/// Splits the curve into `n` equal-length segments and places one site per segment.
///
/// Closed curves put sites at segment midpoints `(i + 1/2) L / n`. Open curves put sites at
/// `i L / (n - 1)` so both endpoints are sites and the two end segments are half as long.
pub fn discretize(curve: &SourceCurve, n: usize, spec: &SurfaceSpec) -> Result<SiteSet> {
    if n < 3 {
        return config("at least 3 segments are required");
    }
    if n > curve.segment_count() {
        return Err(Error::Resolution(format!(
            "{n} segments requested but the curve only has {} sample segments",
            curve.segment_count()
        )));
    }
    let cum = curve.cumulative_length(spec);
    let total = *cum.last().unwrap();
    let mut sites = Vec::with_capacity(n);
    let mut segment_lengths = Vec::with_capacity(n);
    for i in 0..n {
        let (s, len) = if curve.closed {
            ((i as f64 + 0.5) * total / n as f64, total / n as f64)
        } else {
            let h = total / (n - 1) as f64;
            (i as f64 * h, if i == 0 || i == n - 1 { 0.5 * h } else { h })
        };
        sites.push(Site { param: curve.point_at(s, &cum, spec), arc_position: s });
        segment_lengths.push(len);
    }
    Ok(SiteSet { sites, segment_lengths, closed: curve.closed, total_length: total })
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum CurveGenerator {
    CircleUv { center: [f64; 2], radius: f64, samples: usize },
    LineUv {
        from: [f64; 2],
        to: [f64; 2],
        samples: usize,
        #[serde(default)]
        closed: bool,
    },
}

/// JSON form of a curve: explicit samples or a generator.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CurveInput {
    Samples { closed: bool, samples: Vec<[f64; 2]> },
    Generator(CurveGenerator),
}

/// JSON form of a region: one or more closed loops.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ShapeInput {
    Loops { loops: Vec<CurveInput> },
    Single(CurveInput),
}

impl CurveInput {
    pub fn build(&self, spec: &SurfaceSpec) -> Result<SourceCurve> {
        match self {
            CurveInput::Samples { closed, samples } => {
                SourceCurve::new(samples.iter().map(|&p| p.into()).collect(), *closed, spec)
            }
            CurveInput::Generator(CurveGenerator::CircleUv { center, radius, samples }) => {
                SourceCurve::circle_uv((*center).into(), *radius, *samples, spec)
            }
            CurveInput::Generator(CurveGenerator::LineUv { from, to, samples, closed }) => {
                SourceCurve::line_uv((*from).into(), (*to).into(), *samples, *closed, spec)
            }
        }
    }
}

impl ShapeInput {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self, spec: &SurfaceSpec) -> Result<Vec<SourceCurve>> {
        match self {
            ShapeInput::Loops { loops } => loops.iter().map(|c| c.build(spec)).collect(),
            ShapeInput::Single(c) => Ok(vec![c.build(spec)?]),
        }
    }
}
