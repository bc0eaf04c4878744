//! Curve-to-curve distances between point samples on the surface.

use rayon::prelude::*;
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::offset::OffsetResult;
use crate::surface::{ParamPoint, SurfacePoint, SurfaceSpec};

/// One-directional Hausdorff and Chamfer distance from samples `A` to samples `B`.
///
/// The Chamfer value is the mean of the nearest distances, so it never exceeds the Hausdorff value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDistanceReport {
    pub hausdorff_one_directional: f64,
    pub chamfer: f64,
    pub samples_a: usize,
    pub samples_b: usize,
    pub direction: String,
}

/// Nearest-neighbour distances through an R-tree over `b`.
pub fn hausdorff_cd(a: &[SurfacePoint], b: &[SurfacePoint], direction: &str) -> CurveDistanceReport {
    let tree = RTree::bulk_load(b.iter().map(|p| p.to_array()).collect());
    let nearest: Vec<f64> = a
        .par_iter()
        .map(|p| {
            let q = p.to_array();
            tree.nearest_neighbor(&q).map_or(f64::INFINITY, |n| SurfacePoint::from(*n).dist(*p))
        })
        .collect();
    report(&nearest, a.len(), b.len(), direction)
}

/// Quadratic reference version of [`hausdorff_cd`].
pub fn hausdorff_cd_brute(a: &[SurfacePoint], b: &[SurfacePoint], direction: &str) -> CurveDistanceReport {
    let nearest: Vec<f64> =
        a.iter().map(|p| b.iter().map(|q| q.dist(*p)).fold(f64::INFINITY, f64::min)).collect();
    report(&nearest, a.len(), b.len(), direction)
}

fn report(nearest: &[f64], na: usize, nb: usize, direction: &str) -> CurveDistanceReport {
    let hd = nearest.iter().copied().fold(0.0, f64::max);
    let cd = if nearest.is_empty() { 0.0 } else { nearest.iter().sum::<f64>() / nearest.len() as f64 };
    CurveDistanceReport {
        hausdorff_one_directional: hd,
        chamfer: cd,
        samples_a: na,
        samples_b: nb,
        direction: direction.to_string(),
    }
}

/// `n` surface points spread evenly by arc length over parameter polylines.
///
/// Positions are interpolated in parameter space and evaluated on the surface, so every
/// sample lies exactly on the surface.
pub fn sample_polylines(spec: &SurfaceSpec, polylines: &[(Vec<ParamPoint>, bool)], n: usize) -> Vec<SurfacePoint> {
    let mut segs: Vec<(ParamPoint, ParamPoint, f64)> = Vec::new();
    for (pts, closed) in polylines {
        let m = pts.len();
        if m < 2 {
            continue;
        }
        let links = if *closed { m } else { m - 1 };
        for i in 0..links {
            let a = pts[i];
            let b = spec.unwrap_near(pts[(i + 1) % m], a);
            let len = spec.eval_raw(a.u, a.v).dist(spec.eval_raw(b.u, b.v));
            segs.push((a, b, len));
        }
    }
    let total: f64 = segs.iter().map(|s| s.2).sum();
    if segs.is_empty() || n == 0 || total == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    let mut acc = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) / n as f64 * total;
        while k + 1 < segs.len() && acc + segs[k].2 < s {
            acc += segs[k].2;
            k += 1;
        }
        let (a, b, len) = segs[k];
        let t = if len > 0.0 { ((s - acc) / len).clamp(0.0, 1.0) } else { 0.0 };
        let p = a.lerp(b, t);
        out.push(spec.eval_raw(p.u, p.v));
    }
    out
}

pub fn sample_offset(spec: &SurfaceSpec, offset: &OffsetResult, n: usize) -> Vec<SurfacePoint> {
    let lines: Vec<(Vec<ParamPoint>, bool)> = offset.polylines.iter().map(|p| (p.params(), p.closed)).collect();
    sample_polylines(spec, &lines, n)
}

/// `n` points of an analytic parameter curve `t ↦ f(t)` for `t ∈ [0, 1)`.
pub fn sample_curve(spec: &SurfaceSpec, f: impl Fn(f64) -> ParamPoint, n: usize) -> Vec<SurfacePoint> {
    (0..n)
        .map(|i| {
            let p = f(i as f64 / n as f64);
            spec.eval_raw(p.u, p.v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Domain;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_sets_are_at_zero() {
        let a: Vec<SurfacePoint> = (0..100).map(|i| SurfacePoint::new(i as f64, 0.0, 0.0)).collect();
        let r = hausdorff_cd(&a, &a, "a->a");
        assert_eq!((r.hausdorff_one_directional, r.chamfer), (0.0, 0.0));
    }

    #[test]
    fn parallel_segments() {
        let g = 0.25;
        let a: Vec<SurfacePoint> = (0..=1000).map(|i| SurfacePoint::new(i as f64 / 1000.0, 0.0, 0.0)).collect();
        let b: Vec<SurfacePoint> = (0..=1000).map(|i| SurfacePoint::new(i as f64 / 1000.0, g, 0.0)).collect();
        let r = hausdorff_cd(&a, &b, "a->b");
        assert!((r.hausdorff_one_directional - g).abs() < 1e-6 && (r.chamfer - g).abs() < 1e-6);
    }

    #[test]
    fn tree_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut pts = |n| (0..n).map(|_| SurfacePoint::new(rng.gen(), rng.gen(), rng.gen())).collect::<Vec<_>>();
        let (a, b) = (pts(5000), pts(5000));
        let (fast, slow) = (hausdorff_cd(&a, &b, "x"), hausdorff_cd_brute(&a, &b, "x"));
        assert!((fast.hausdorff_one_directional - slow.hausdorff_one_directional).abs() <= 1e-12);
        assert!((fast.chamfer - slow.chamfer).abs() <= 1e-12);
        assert!(fast.hausdorff_one_directional >= fast.chamfer);
    }

    #[test]
    fn samples_lie_on_surface_and_spread_evenly() {
        let spec = SurfaceSpec::sphere(2.0).unwrap();
        let line = vec![ParamPoint::new(0.0, 0.5), ParamPoint::new(3.0, 0.5), ParamPoint::new(6.0, 0.5)];
        let s = sample_polylines(&spec, &[(line, true)], 1000);
        assert_eq!(s.len(), 1000);
        for p in &s {
            assert!((p.dist(SurfacePoint::new(0.0, 0.0, 0.0)) - 2.0).abs() < 1e-12);
        }
        let plane = SurfaceSpec::plane(Domain::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        let s = sample_polylines(&plane, &[(vec![ParamPoint::new(0.0, 0.0), ParamPoint::new(1.0, 0.0)], false)], 10);
        assert!((s[0].x - 0.05).abs() < 1e-15 && (s[9].x - 0.95).abs() < 1e-15);
    }
}
