use crate::error::{Error, Result};
use nalgebra::Vector3;
use std::collections::HashMap;

/// Ordered samples of a mapped interface curve with unit tangents.
#[derive(Debug, Clone)]
pub struct BoundarySamples {
    points: Vec<Vector3<f64>>,
    tangents: Vec<Vector3<f64>>,
}

impl BoundarySamples {
    pub fn new(points: Vec<Vector3<f64>>, tangents: Vec<Vector3<f64>>) -> Self {
        assert_eq!(points.len(), tangents.len(), "one tangent per sample");
        Self { points, tangents }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vector3<f64>] {
        &self.tangents
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }
}

type Bucket = (i64, i64, i64);

/// Samples bucketed on a uniform grid for nearest-neighbour queries.
#[derive(Debug, Clone)]
struct SampledCurve {
    samples: BoundarySamples,
    bucket: f64,
    buckets: HashMap<Bucket, Vec<usize>>,
    lo: Bucket,
    hi: Bucket,
}

impl SampledCurve {
    fn new(samples: BoundarySamples) -> Self {
        let spacing = samples.max_spacing();
        let bucket = if spacing > 0.0 { 2.0 * spacing } else { 1.0 };
        let key = |p: &Vector3<f64>| {
            ((p.x / bucket).floor() as i64, (p.y / bucket).floor() as i64, (p.z / bucket).floor() as i64)
        };
        let mut buckets: HashMap<Bucket, Vec<usize>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for (i, p) in samples.points.iter().enumerate() {
            let k = key(p);
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
            buckets.entry(k).or_default().push(i);
        }
        Self { samples, bucket, buckets, lo, hi }
    }

    fn nearest_sample(&self, x: &Vector3<f64>) -> usize {
        let b = self.bucket;
        let c = ((x.x / b).floor() as i64, (x.y / b).floor() as i64, (x.z / b).floor() as i64);
        let reach = [
            (c.0 - self.lo.0).abs().max((self.hi.0 - c.0).abs()),
            (c.1 - self.lo.1).abs().max((self.hi.1 - c.1).abs()),
            (c.2 - self.lo.2).abs().max((self.hi.2 - c.2).abs()),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        let mut best = (f64::INFINITY, usize::MAX);
        for shell in 0..=reach {
            for i in -shell..=shell {
                for j in -shell..=shell {
                    for k in -shell..=shell {
                        if i.abs().max(j.abs()).max(k.abs()) != shell {
                            continue;
                        }
                        if let Some(ids) = self.buckets.get(&(c.0 + i, c.1 + j, c.2 + k)) {
                            for &id in ids {
                                let d = (self.samples.points[id] - x).norm_squared();
                                if d < best.0 || (d == best.0 && id < best.1) {
                                    best = (d, id);
                                }
                            }
                        }
                    }
                }
            }
            // everything beyond this shell is at least `shell * b` away
            if best.1 != usize::MAX && best.0.sqrt() <= shell as f64 * b {
                break;
            }
        }
        best.1
    }

    /// Closest point on the sample polyline next to the nearest sample, with
    /// the tangent interpolated linearly along the segment.
    fn closest(&self, x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let pts = &self.samples.points;
        let tan = &self.samples.tangents;
        let i = self.nearest_sample(x);
        let mut best = ((pts[i] - x).norm_squared(), pts[i], tan[i]);
        for (a, b) in [(i.wrapping_sub(1), i), (i, i + 1)] {
            if a >= pts.len() || b >= pts.len() {
                continue;
            }
            let seg = pts[b] - pts[a];
            let len2 = seg.norm_squared();
            if len2 == 0.0 {
                continue;
            }
            let s = ((x - pts[a]).dot(&seg) / len2).clamp(0.0, 1.0);
            let q = pts[a] + seg * s;
            let d = (q - x).norm_squared();
            if d < best.0 {
                best = (d, q, tan[a] * (1.0 - s) + tan[b] * s);
            }
        }
        (best.1, best.2.normalize())
    }
}

/// Result of one artificial-interface query.
#[derive(Debug, Clone, Copy)]
pub struct GammaQuery {
    /// Closest points on the first and second perturbed boundary.
    pub closest: [Vector3<f64>; 2],
    /// Midpoint of the two closest points, taken as the interface point.
    pub point: Vector3<f64>,
    /// Unit interface tangent: normalised mean of the boundary tangents.
    pub tangent: Vector3<f64>,
}

/// Artificial interface between two perturbed boundaries, located halfway
/// between their closest points.
#[derive(Debug, Clone)]
pub struct GammaModel {
    curves: [SampledCurve; 2],
    gap: f64,
    tube_radius: f64,
}

impl GammaModel {
    /// Both sample sets must be ordered consistently so that their tangents
    /// point the same way along the interface.
    pub fn new(first: BoundarySamples, second: BoundarySamples, gap: f64, tube_radius: f64) -> Result<Self> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::EmptySamples);
        }
        Ok(Self { curves: [SampledCurve::new(first), SampledCurve::new(second)], gap, tube_radius })
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    pub fn samples(&self, which: usize) -> &BoundarySamples {
        &self.curves[which].samples
    }

    pub fn query(&self, x: &Vector3<f64>) -> GammaQuery {
        let (p1, t1) = self.curves[0].closest(x);
        let (p2, t2) = self.curves[1].closest(x);
        let sum = t1 + t2;
        let tangent = if sum.norm() > 1e-12 { sum.normalize() } else { t1 };
        GammaQuery { closest: [p1, p2], point: (p1 + p2) * 0.5, tangent }
    }

    /// Closest point on one of the two boundaries.
    pub fn closest_on(&self, which: usize, x: &Vector3<f64>) -> Vector3<f64> {
        self.curves[which].closest(x).0
    }

    pub fn closest_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.query(x).point
    }

    pub fn tangent(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.query(x).tangent
    }
}
