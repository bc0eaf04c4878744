//! Analytic parametric surfaces, their first fundamental form and induced arc length.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct ParamPoint {
    pub u: f64,
    pub v: f64,
}

impl ParamPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(self.u + (other.u - self.u) * t, self.v + (other.v - self.v) * t)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

impl From<[f64; 2]> for ParamPoint {
    fn from(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<ParamPoint> for [f64; 2] {
    fn from(p: ParamPoint) -> Self {
        [p.u, p.v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SurfacePoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dist(self, o: Self) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for SurfacePoint {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<SurfacePoint> for [f64; 3] {
    fn from(p: SurfacePoint) -> Self {
        p.to_array()
    }
}

/// Coefficients `E = x_u·x_u`, `F = x_u·x_v`, `G = x_v·x_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalForm {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl FundamentalForm {
    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// Squared speed of the tangent direction `(du, dv)`.
    pub fn quadratic(&self, du: f64, dv: f64) -> f64 {
        self.e * du * du + 2.0 * self.f * du * dv + self.g * dv * dv
    }

    fn is_degenerate(&self) -> bool {
        let scale = (self.e + self.g).max(f64::MIN_POSITIVE);
        !(self.det() > 1e-20 * scale * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    Plane,
    Sphere { radius: f64 },
    Cylinder { radius: f64 },
    Torus { major: f64, minor: f64 },
    GaussianBump { amplitude: f64, sigma: f64, center_u: f64, center_v: f64 },
    BivariateSine { amplitude: f64, freq_u: f64, freq_v: f64 },
    /// `(u cos(v + k u), u sin(v + k u), a u²)` with `u > 0`.
    SpiralParaboloid { curvature: f64, twist: f64 },
    /// Height field `A cos(f r)` with `r = |(u, v)|`.
    CircularWave { amplitude: f64, frequency: f64 },
}

impl SurfaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::Sphere { .. } => "sphere",
            SurfaceKind::Cylinder { .. } => "cylinder",
            SurfaceKind::Torus { .. } => "torus",
            SurfaceKind::GaussianBump { .. } => "gaussian_bump",
            SurfaceKind::BivariateSine { .. } => "bivariate_sine",
            SurfaceKind::SpiralParaboloid { .. } => "spiral_paraboloid",
            SurfaceKind::CircularWave { .. } => "circular_wave",
        }
    }

    pub fn default_domain(&self) -> Domain {
        match *self {
            SurfaceKind::Plane => Domain::new(0.0, 1.0, 0.0, 1.0),
            SurfaceKind::Sphere { .. } => Domain::new(0.0, TAU, -FRAC_PI_2, FRAC_PI_2),
            SurfaceKind::Cylinder { .. } => Domain::new(0.0, TAU, -1.0, 1.0),
            SurfaceKind::Torus { .. } => Domain::new(0.0, TAU, 0.0, TAU),
            SurfaceKind::GaussianBump { .. } => Domain::new(-1.0, 1.0, -1.0, 1.0),
            SurfaceKind::BivariateSine { .. } => Domain::new(0.0, TAU, 0.0, TAU),
            SurfaceKind::SpiralParaboloid { .. } => Domain::new(0.2, 1.2, 0.0, TAU),
            SurfaceKind::CircularWave { .. } => Domain::new(-1.0, 1.0, -1.0, 1.0),
        }
    }

    pub fn default_periodic(&self) -> [bool; 2] {
        match self {
            SurfaceKind::Sphere { .. } | SurfaceKind::Cylinder { .. } => [true, false],
            SurfaceKind::Torus { .. } => [true, true],
            SurfaceKind::SpiralParaboloid { .. } => [false, true],
            _ => [false, false],
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            SurfaceKind::Plane => vec![],
            SurfaceKind::Sphere { radius } | SurfaceKind::Cylinder { radius } => vec![("R", radius)],
            SurfaceKind::Torus { major, minor } => vec![("R", major), ("r", minor)],
            SurfaceKind::GaussianBump { amplitude, sigma, center_u, center_v } => {
                vec![("A", amplitude), ("sigma", sigma), ("cu", center_u), ("cv", center_v)]
            }
            SurfaceKind::BivariateSine { amplitude, freq_u, freq_v } => {
                vec![("A", amplitude), ("fu", freq_u), ("fv", freq_v)]
            }
            SurfaceKind::SpiralParaboloid { curvature, twist } => vec![("a", curvature), ("k", twist)],
            SurfaceKind::CircularWave { amplitude, frequency } => vec![("A", amplitude), ("f", frequency)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn from_params(kind: &str, p: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| -> f64 { p.get(key).copied().unwrap_or(default) };
        let allowed: &[&str] = match kind {
            "plane" => &[],
            "sphere" | "cylinder" => &["R"],
            "torus" => &["R", "r"],
            "gaussian_bump" => &["A", "sigma", "cu", "cv"],
            "bivariate_sine" => &["A", "fu", "fv"],
            "spiral_paraboloid" => &["a", "k"],
            "circular_wave" => &["A", "f"],
            other => return config(format!("unknown surface kind `{other}`")),
        };
        if let Some(bad) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
            return config(format!("unknown parameter `{bad}` for surface `{kind}`"));
        }
        Ok(match kind {
            "plane" => SurfaceKind::Plane,
            "sphere" => SurfaceKind::Sphere { radius: get("R", 1.0) },
            "cylinder" => SurfaceKind::Cylinder { radius: get("R", 1.0) },
            "torus" => SurfaceKind::Torus { major: get("R", 2.0), minor: get("r", 0.7) },
            "gaussian_bump" => SurfaceKind::GaussianBump {
                amplitude: get("A", 0.5),
                sigma: get("sigma", 0.3),
                center_u: get("cu", 0.0),
                center_v: get("cv", 0.0),
            },
            "bivariate_sine" => SurfaceKind::BivariateSine {
                amplitude: get("A", 0.5),
                freq_u: get("fu", 1.0),
                freq_v: get("fv", 1.0),
            },
            "spiral_paraboloid" => SurfaceKind::SpiralParaboloid { curvature: get("a", 0.5), twist: get("k", 1.0) },
            _ => SurfaceKind::CircularWave { amplitude: get("A", 0.1), frequency: get("f", 8.0) },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Domain {
    pub const fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Self { u0, u1, v0, v1 }
    }

    pub fn width(&self) -> f64 {
        self.u1 - self.u0
    }

    pub fn height(&self) -> f64 {
        self.v1 - self.v0
    }

    pub fn extent(&self) -> f64 {
        self.width().max(self.height())
    }
}

#[derive(Serialize, Deserialize)]
struct RawSurfaceSpec {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    periodic: Option<[bool; 2]>,
}

/// A validated analytic surface over a rectangular parameter domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSurfaceSpec", into = "RawSurfaceSpec")]
pub struct SurfaceSpec {
    kind: SurfaceKind,
    domain: Domain,
    periodic: [bool; 2],
}

impl TryFrom<RawSurfaceSpec> for SurfaceSpec {
    type Error = Error;

    fn try_from(raw: RawSurfaceSpec) -> Result<Self> {
        let kind = SurfaceKind::from_params(&raw.kind, &raw.params)?;
        let domain = raw
            .domain
            .map(|d| Domain::new(d[0], d[1], d[2], d[3]))
            .unwrap_or_else(|| kind.default_domain());
        let periodic = raw.periodic.unwrap_or_else(|| kind.default_periodic());
        SurfaceSpec::new(kind, domain, periodic)
    }
}

impl From<SurfaceSpec> for RawSurfaceSpec {
    fn from(s: SurfaceSpec) -> Self {
        let d = s.domain;
        RawSurfaceSpec {
            kind: s.kind.name().to_string(),
            params: s.kind.params(),
            domain: Some([d.u0, d.u1, d.v0, d.v1]),
            periodic: Some(s.periodic),
        }
    }
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind, domain: Domain, periodic: [bool; 2]) -> Result<Self> {
        let spec = Self { kind, domain, periodic };
        spec.validate()?;
        Ok(spec)
    }

    /// Surface with its canonical domain and periodicity.
    pub fn with_defaults(kind: SurfaceKind) -> Result<Self> {
        Self::new(kind, kind.default_domain(), kind.default_periodic())
    }

    pub fn plane(domain: Domain) -> Result<Self> {
        Self::new(SurfaceKind::Plane, domain, [false, false])
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        Self::with_defaults(SurfaceKind::Sphere { radius })
    }

    pub fn cylinder(radius: f64, v0: f64, v1: f64) -> Result<Self> {
        Self::new(SurfaceKind::Cylinder { radius }, Domain::new(0.0, TAU, v0, v1), [true, false])
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        Self::with_defaults(SurfaceKind::Torus { major, minor })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    fn validate(&self) -> Result<()> {
        let d = self.domain;
        if ![d.u0, d.u1, d.v0, d.v1].iter().all(|x| x.is_finite()) || d.u1 <= d.u0 || d.v1 <= d.v0 {
            return config(format!("invalid domain [{}, {}] x [{}, {}]", d.u0, d.u1, d.v0, d.v1));
        }
        let positive = |name: &str, x: f64| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                config(format!("parameter `{name}` must be positive, got {x}"))
            }
        };
        let finite = |name: &str, x: f64| -> Result<()> {
            if x.is_finite() {
                Ok(())
            } else {
                config(format!("parameter `{name}` must be finite"))
            }
        };
        match self.kind {
            SurfaceKind::Plane => {}
            SurfaceKind::Sphere { radius } => {
                positive("R", radius)?;
                if d.v0 < -FRAC_PI_2 - 1e-12 || d.v1 > FRAC_PI_2 + 1e-12 {
                    return config("sphere latitude domain must lie within [-pi/2, pi/2]");
                }
                if self.periodic[1] {
                    return config("sphere latitude cannot be periodic");
                }
            }
            SurfaceKind::Cylinder { radius } => positive("R", radius)?,
            SurfaceKind::Torus { major, minor } => {
                positive("R", major)?;
                positive("r", minor)?;
                if minor >= major {
                    return config("torus requires r < R");
                }
            }
            SurfaceKind::GaussianBump { amplitude, sigma, center_u, center_v } => {
                finite("A", amplitude)?;
                positive("sigma", sigma)?;
                finite("cu", center_u)?;
                finite("cv", center_v)?;
            }
            SurfaceKind::BivariateSine { amplitude, freq_u, freq_v } => {
                finite("A", amplitude)?;
                finite("fu", freq_u)?;
                finite("fv", freq_v)?;
            }
            SurfaceKind::SpiralParaboloid { curvature, twist } => {
                finite("a", curvature)?;
                finite("k", twist)?;
                if d.u0 <= 0.0 {
                    return config("spiral_paraboloid requires u0 > 0");
                }
            }
            SurfaceKind::CircularWave { amplitude, frequency } => {
                finite("A", amplitude)?;
                finite("f", frequency)?;
            }
        }
        self.check_seams()
    }

    /// Periodic axes must glue: the surface has to agree on opposite domain edges.
    fn check_seams(&self) -> Result<()> {
        let d = self.domain;
        let tol = 1e-3 * self.coarse_diameter();
        for k in 0..=16 {
            let s = k as f64 / 16.0;
            if self.periodic[0] {
                let v = d.v0 + s * d.height();
                let a = self.eval_raw(d.u0, v);
                let b = self.eval_raw(d.u1, v);
                if a.dist(b) > tol {
                    return config(format!("u axis marked periodic but the surface does not close (gap {:.3e})", a.dist(b)));
                }
            }
            if self.periodic[1] {
                let u = d.u0 + s * d.width();
                let a = self.eval_raw(u, d.v0);
                let b = self.eval_raw(u, d.v1);
                if a.dist(b) > tol {
                    return config(format!("v axis marked periodic but the surface does not close (gap {:.3e})", a.dist(b)));
                }
            }
        }
        Ok(())
    }

    fn coarse_diameter(&self) -> f64 {
        let d = self.domain;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..=32 {
            for j in 0..=32 {
                let p = self.eval_raw(d.u0 + d.width() * i as f64 / 32.0, d.v0 + d.height() * j as f64 / 32.0);
                for (k, c) in p.to_array().into_iter().enumerate() {
                    lo[k] = lo[k].min(c);
                    hi[k] = hi[k].max(c);
                }
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
    }

    /// Bounding-box diagonal of the embedded surface.
    pub fn diameter(&self) -> f64 {
        self.coarse_diameter()
    }

    /// The part of the domain that carries a non-degenerate metric.
    ///
    /// Only the sphere needs trimming: its poles are pulled in by 1e-3 of the latitude extent.
    pub fn usable_domain(&self) -> Domain {
        let mut d = self.domain;
        if let SurfaceKind::Sphere { .. } = self.kind {
            let margin = 1e-3 * d.height();
            d.v0 = d.v0.max(-FRAC_PI_2 + margin);
            d.v1 = d.v1.min(FRAC_PI_2 - margin);
        }
        d
    }

    pub fn period(&self) -> [Option<f64>; 2] {
        [
            self.periodic[0].then(|| self.domain.width()),
            self.periodic[1].then(|| self.domain.height()),
        ]
    }

    /// Maps periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, p: ParamPoint) -> ParamPoint {
        let d = self.domain;
        let mut q = p;
        if self.periodic[0] {
            q.u = wrap_into(q.u, d.u0, d.width());
        }
        if self.periodic[1] {
            q.v = wrap_into(q.v, d.v0, d.height());
        }
        q
    }

    /// Representative of `p` closest to `reference` along periodic axes.
    pub fn unwrap_near(&self, p: ParamPoint, reference: ParamPoint) -> ParamPoint {
        let mut q = p;
        if self.periodic[0] {
            let w = self.domain.width();
            q.u -= ((q.u - reference.u) / w).round() * w;
        }
        if self.periodic[1] {
            let h = self.domain.height();
            q.v -= ((q.v - reference.v) / h).round() * h;
        }
        q
    }

    /// Wrapped copy of `p` if it lies in the (usable) domain.
    pub fn check_in_domain(&self, p: ParamPoint) -> Result<ParamPoint> {
        if !(p.u.is_finite() && p.v.is_finite()) {
            return Err(Error::OutOfDomain { u: p.u, v: p.v });
        }
        let q = self.wrap(p);
        let d = self.domain;
        let slack = 1e-12 * d.extent();
        let inside_u = self.periodic[0] || (q.u >= d.u0 - slack && q.u <= d.u1 + slack);
        let inside_v = self.periodic[1] || (q.v >= d.v0 - slack && q.v <= d.v1 + slack);
        if inside_u && inside_v {
            Ok(q)
        } else {
            Err(Error::OutOfDomain { u: p.u, v: p.v })
        }
    }

    pub fn evaluate(&self, p: ParamPoint) -> Result<SurfacePoint> {
        let q = self.check_in_domain(p)?;
        Ok(self.eval_raw(q.u, q.v))
    }

    /// Evaluation without domain checks; formulas are analytic everywhere.
    pub fn eval_raw(&self, u: f64, v: f64) -> SurfacePoint {
        match self.kind {
            SurfaceKind::Plane => SurfacePoint::new(u, v, 0.0),
            SurfaceKind::Sphere { radius: r } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                SurfacePoint::new(r * cu * cv, r * su * cv, r * sv)
            }
            SurfaceKind::Cylinder { radius: r } => {
                let (su, cu) = u.sin_cos();
                SurfacePoint::new(r * cu, r * su, v)
            }
            SurfaceKind::Torus { major, minor } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let w = major + minor * cv;
                SurfacePoint::new(w * cu, w * su, minor * sv)
            }
            SurfaceKind::SpiralParaboloid { curvature, twist } => {
                let (s, c) = (v + twist * u).sin_cos();
                SurfacePoint::new(u * c, u * s, curvature * u * u)
            }
            _ => SurfacePoint::new(u, v, self.height(u, v).0),
        }
    }

    /// Height, h_u, h_v for graph surfaces.
    fn height(&self, u: f64, v: f64) -> (f64, f64, f64) {
        match self.kind {
            SurfaceKind::GaussianBump { amplitude, sigma, center_u, center_v } => {
                let (du, dv) = (u - center_u, v - center_v);
                let s2 = sigma * sigma;
                let h = amplitude * (-(du * du + dv * dv) / (2.0 * s2)).exp();
                (h, -h * du / s2, -h * dv / s2)
            }
            SurfaceKind::BivariateSine { amplitude, freq_u, freq_v } => {
                let (su, cu) = (freq_u * u).sin_cos();
                let (sv, cv) = (freq_v * v).sin_cos();
                (amplitude * su * sv, amplitude * freq_u * cu * sv, amplitude * freq_v * su * cv)
            }
            SurfaceKind::CircularWave { amplitude, frequency } => {
                let r = u.hypot(v);
                let x = frequency * r;
                let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                let k = -amplitude * frequency * frequency * sinc;
                (amplitude * x.cos(), k * u, k * v)
            }
            _ => (0.0, 0.0, 0.0),
        }
    }

    /// Partial derivatives `(x_u, x_v)` without domain checks.
    pub fn partials_raw(&self, u: f64, v: f64) -> ([f64; 3], [f64; 3]) {
        match self.kind {
            SurfaceKind::Plane => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            SurfaceKind::Sphere { radius: r } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                ([-r * su * cv, r * cu * cv, 0.0], [-r * cu * sv, -r * su * sv, r * cv])
            }
            SurfaceKind::Cylinder { radius: r } => {
                let (su, cu) = u.sin_cos();
                ([-r * su, r * cu, 0.0], [0.0, 0.0, 1.0])
            }
            SurfaceKind::Torus { major, minor } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let w = major + minor * cv;
                ([-w * su, w * cu, 0.0], [-minor * sv * cu, -minor * sv * su, minor * cv])
            }
            SurfaceKind::SpiralParaboloid { curvature, twist } => {
                let (s, c) = (v + twist * u).sin_cos();
                (
                    [c - twist * u * s, s + twist * u * c, 2.0 * curvature * u],
                    [-u * s, u * c, 0.0],
                )
            }
            _ => {
                let (_, hu, hv) = self.height(u, v);
                ([1.0, 0.0, hu], [0.0, 1.0, hv])
            }
        }
    }

    /// Metric coefficients without domain or degeneracy checks.
    pub fn metric_raw(&self, u: f64, v: f64) -> FundamentalForm {
        match self.kind {
            SurfaceKind::Plane => FundamentalForm { e: 1.0, f: 0.0, g: 1.0 },
            SurfaceKind::Sphere { radius: r } => {
                let c = v.cos();
                FundamentalForm { e: r * r * c * c, f: 0.0, g: r * r }
            }
            SurfaceKind::Cylinder { radius: r } => FundamentalForm { e: r * r, f: 0.0, g: 1.0 },
            SurfaceKind::Torus { major, minor } => {
                let w = major + minor * v.cos();
                FundamentalForm { e: w * w, f: 0.0, g: minor * minor }
            }
            SurfaceKind::SpiralParaboloid { curvature, twist } => {
                let (a, k) = (curvature, twist);
                FundamentalForm { e: 1.0 + k * k * u * u + 4.0 * a * a * u * u, f: k * u * u, g: u * u }
            }
            _ => {
                let (_, hu, hv) = self.height(u, v);
                FundamentalForm { e: 1.0 + hu * hu, f: hu * hv, g: 1.0 + hv * hv }
            }
        }
    }

    pub fn fundamental_form(&self, p: ParamPoint) -> Result<FundamentalForm> {
        let q = self.check_in_domain(p)?;
        let ff = self.metric_raw(q.u, q.v);
        if ff.is_degenerate() {
            return Err(Error::DegenerateMetric { u: p.u, v: p.v, det: ff.det() });
        }
        Ok(ff)
    }

    /// Central-difference estimate of the fundamental form from `evaluate` alone.
    pub fn fundamental_form_fd(&self, p: ParamPoint) -> FundamentalForm {
        let h = 1e-6 * self.domain.extent();
        let d = |a: SurfacePoint, b: SurfacePoint| [(a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h), (a.z - b.z) / (2.0 * h)];
        let xu = d(self.eval_raw(p.u + h, p.v), self.eval_raw(p.u - h, p.v));
        let xv = d(self.eval_raw(p.u, p.v + h), self.eval_raw(p.u, p.v - h));
        FundamentalForm { e: dot(xu, xu), f: dot(xu, xv), g: dot(xv, xv) }
    }

    /// Length on the surface of the parameter-straight segment from `p` to `q`.
    ///
    /// Periodic coordinates of `q` are unwrapped to the representative nearest `p`.
    pub fn induced_length(&self, p: ParamPoint, q: ParamPoint) -> Result<f64> {
        let p = self.check_in_domain(p)?;
        let q = self.unwrap_near(self.check_in_domain(q)?, p);
        self.fundamental_form(p)?;
        self.fundamental_form(q)?;
        Ok(self.induced_length_unwrapped(p, q))
    }

    /// Induced length with both endpoints taken literally (no wrapping, no checks).
    pub fn induced_length_unwrapped(&self, p: ParamPoint, q: ParamPoint) -> f64 {
        let (du, dv) = (q.u - p.u, q.v - p.v);
        if du == 0.0 && dv == 0.0 {
            return 0.0;
        }
        let speed = |t: f64| -> f64 {
            let m = self.metric_raw(p.u + t * du, p.v + t * dv);
            m.quadratic(du, dv).max(0.0).sqrt()
        };
        adaptive_gauss(&speed, 0.0, 1.0, 1e-10, 0)
    }

    /// Parameter `t` in `[0, 1]` such that the induced length from `p` to `p + t (q - p)` is `target`.
    pub fn arc_parameter(&self, p: ParamPoint, q: ParamPoint, target: f64) -> f64 {
        let total = self.induced_length_unwrapped(p, q);
        if total <= 0.0 || target <= 0.0 {
            return 0.0;
        }
        if target >= total {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut t = target / total;
        for _ in 0..60 {
            let len = self.induced_length_unwrapped(p, p.lerp(q, t));
            let err = len - target;
            if err.abs() <= 1e-14 * total {
                return t;
            }
            if err > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let m = self.metric_raw(p.u + t * (q.u - p.u), p.v + t * (q.v - p.v));
            let speed = m.quadratic(q.u - p.u, q.v - p.v).sqrt();
            let newton = t - err / speed;
            t = if speed > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        t
    }
}

fn wrap_into(x: f64, lo: f64, period: f64) -> f64 {
    let mut y = lo + (x - lo).rem_euclid(period);
    if y >= lo + period {
        y -= period;
    }
    y
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64, depth: u32) -> f64 {
    let whole = gauss5(f, a, b);
    let m = 0.5 * (a + b);
    let left = gauss5(f, a, m);
    let right = gauss5(f, m, b);
    let split = left + right;
    if (split - whole).abs() <= rel * split.abs() || depth >= 40 {
        return split;
    }
    adaptive_gauss(f, a, m, rel, depth + 1) + adaptive_gauss(f, m, b, rel, depth + 1)
}
