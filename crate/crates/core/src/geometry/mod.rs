//! Patch maps, trims, manufactured data and the artificial interface.

mod gamma;
mod projector;
mod torus;

pub use gamma::{BoundarySamples, GammaModel, GammaQuery};
pub use projector::TangentProjectorField;
pub use torus::{
    manufactured_data, torus_map_inner, torus_map_outer, torus_shift_direction, Manufactured, Torus,
    RING_SPAN, TUBE_SPAN,
};

use crate::error::{Error, Result};
use crate::quadrature::gauss_interval;
use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use std::f64::consts::FRAC_PI_2;

/// Radius of the trim circle centred at the reference origin.
pub const TRIM_RADIUS: f64 = 0.9;

/// Signed level set whose negative side is the kept part of a patch.
pub trait Region: Sync {
    fn psi(&self, x: [f64; 2]) -> f64;
    fn grad_psi(&self, x: [f64; 2]) -> [f64; 2];

    fn is_kept(&self, x: [f64; 2]) -> bool {
        self.psi(x) < 0.0
    }

    /// Exact bounds of `psi` over a box, when cheaply available.
    fn range_on_box(&self, _lo: [f64; 2], _hi: [f64; 2]) -> Option<(f64, f64)> {
        None
    }
}

/// `x^2 + y^2 - 0.9^2`; negative on the inner disc.
pub fn trim_levelset(x: f64, y: f64) -> f64 {
    x * x + y * y - TRIM_RADIUS * TRIM_RADIUS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Inside,
    Outside,
}

/// Circle trim around the reference origin.
#[derive(Debug, Clone, Copy)]
pub struct Trim {
    pub radius: f64,
    pub keep: Keep,
}

impl Trim {
    pub fn quarter_disc(keep: Keep) -> Self {
        Self { radius: TRIM_RADIUS, keep }
    }

    fn sign(&self) -> f64 {
        match self.keep {
            Keep::Inside => 1.0,
            Keep::Outside => -1.0,
        }
    }

    /// Point on the trim arc, counterclockwise in `theta` over `[0, pi/2]`.
    pub fn arc_point(&self, theta: f64) -> [f64; 2] {
        [self.radius * theta.cos(), self.radius * theta.sin()]
    }

    pub fn arc_tangent(&self, theta: f64) -> [f64; 2] {
        [-self.radius * theta.sin(), self.radius * theta.cos()]
    }
}

impl Region for Trim {
    fn psi(&self, x: [f64; 2]) -> f64 {
        let phi = x[0] * x[0] + x[1] * x[1] - self.radius * self.radius;
        self.sign() * phi
    }

    fn grad_psi(&self, x: [f64; 2]) -> [f64; 2] {
        let s = self.sign();
        [2.0 * s * x[0], 2.0 * s * x[1]]
    }

    fn range_on_box(&self, lo: [f64; 2], hi: [f64; 2]) -> Option<(f64, f64)> {
        let mut near = 0.0;
        let mut far = 0.0;
        for k in 0..2 {
            let c = 0.0f64.clamp(lo[k], hi[k]);
            near += c * c;
            far += (lo[k] * lo[k]).max(hi[k] * hi[k]);
        }
        let r2 = self.radius * self.radius;
        let (a, b) = (near - r2, far - r2);
        Some(if self.sign() > 0.0 { (a, b) } else { (-b, -a) })
    }
}

/// Map from the reference square into space.
#[derive(Debug, Clone, Copy)]
pub enum SurfaceMap {
    /// Torus parametrisation plus a rigid shift.
    Torus { torus: Torus, shift: Vector3<f64> },
    /// Identity into the `z = 0` plane plus a rigid shift.
    Planar { shift: Vector3<f64> },
}

impl SurfaceMap {
    pub fn eval(&self, x: [f64; 2]) -> Vector3<f64> {
        match self {
            SurfaceMap::Torus { torus, shift } => torus.param(x) + shift,
            SurfaceMap::Planar { shift } => Vector3::new(x[0], x[1], 0.0) + shift,
        }
    }

    pub fn jacobian(&self, x: [f64; 2]) -> Matrix3x2<f64> {
        match self {
            SurfaceMap::Torus { torus, .. } => torus.param_jacobian(x),
            SurfaceMap::Planar { .. } => Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
        }
    }

    /// Metric tensor `G = DF^T DF`.
    pub fn metric(&self, x: [f64; 2]) -> Matrix2<f64> {
        let j = self.jacobian(x);
        j.transpose() * j
    }

    /// Unit normal of the mapped surface.
    pub fn normal(&self, x: [f64; 2]) -> Vector3<f64> {
        let j = self.jacobian(x);
        j.column(0).cross(&j.column(1)).normalize()
    }
}

/// Metric quantities at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct MetricAt {
    pub jacobian: Matrix3x2<f64>,
    pub metric: Matrix2<f64>,
    pub inverse: Matrix2<f64>,
    pub sqrt_det: f64,
}

impl MetricAt {
    pub fn new(map: &SurfaceMap, x: [f64; 2]) -> Self {
        let jacobian = map.jacobian(x);
        let metric = jacobian.transpose() * jacobian;
        let det = metric.determinant();
        let inverse = Matrix2::new(metric[(1, 1)], -metric[(0, 1)], -metric[(1, 0)], metric[(0, 0)]) / det;
        Self { jacobian, metric, inverse, sqrt_det: det.sqrt() }
    }

    /// `|G|^{1/2} G^{-1}`, the pulled-back diffusion tensor.
    pub fn diffusion(&self) -> Matrix2<f64> {
        self.inverse * self.sqrt_det
    }

    /// Physical surface gradient of a function with reference gradient `g`.
    pub fn surface_gradient(&self, g: [f64; 2]) -> Vector3<f64> {
        self.jacobian * (self.inverse * Vector2::new(g[0], g[1]))
    }

    /// Length scale factor of a reference tangent direction.
    pub fn line_element(&self, t: [f64; 2]) -> f64 {
        let t = Vector2::new(t[0], t[1]);
        (t.dot(&(self.metric * t)) / t.norm_squared()).sqrt()
    }
}

/// Edges of the reference square, in the order `x=0, x=1, y=0, y=1`.
pub const SQUARE_EDGES: usize = 4;

/// One trimmed patch of the model problems.
#[derive(Debug, Clone)]
pub struct PatchGeometry {
    pub name: &'static str,
    pub map: SurfaceMap,
    pub trim: Trim,
    pub dirichlet: [bool; SQUARE_EDGES],
}

impl PatchGeometry {
    /// Interface arc parameter range.
    pub fn arc_range(&self) -> (f64, f64) {
        (0.0, FRAC_PI_2)
    }

    /// Mapped interface samples with unit tangents oriented along increasing
    /// arc parameter, at physical spacing at most `spacing`.
    pub fn interface_samples(&self, spacing: f64) -> BoundarySamples {
        let length = self.interface_length();
        let mut n = ((length / spacing).ceil() as usize).max(8);
        loop {
            let samples = self.interface_samples_n(n);
            if samples.max_spacing() <= spacing {
                return samples;
            }
            n = n * 3 / 2 + 1;
        }
    }

    pub fn interface_samples_n(&self, segments: usize) -> BoundarySamples {
        let (a, b) = self.arc_range();
        let mut points = Vec::with_capacity(segments + 1);
        let mut tangents = Vec::with_capacity(segments + 1);
        for k in 0..=segments {
            let theta = a + (b - a) * k as f64 / segments as f64;
            let xr = self.trim.arc_point(theta);
            let tr = self.trim.arc_tangent(theta);
            points.push(self.map.eval(xr));
            tangents.push((self.map.jacobian(xr) * Vector2::new(tr[0], tr[1])).normalize());
        }
        BoundarySamples::new(points, tangents)
    }

    /// Physical length of the mapped interface arc.
    pub fn interface_length(&self) -> f64 {
        let (a, b) = self.arc_range();
        let pieces = 16;
        (0..pieces)
            .flat_map(|k| {
                let lo = a + (b - a) * k as f64 / pieces as f64;
                gauss_interval(8, lo, lo + (b - a) / pieces as f64)
            })
            .map(|(t, w)| {
                let tr = self.trim.arc_tangent(t);
                w * (self.map.jacobian(self.trim.arc_point(t)) * Vector2::new(tr[0], tr[1])).norm()
            })
            .sum()
    }
}

/// Outer and inner torus patches for gap `delta`.
pub fn torus_patch_geometry(torus: Torus, delta: f64) -> Result<[PatchGeometry; 2]> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("gap {delta} must be nonnegative")));
    }
    Ok([
        PatchGeometry {
            name: "outer",
            map: SurfaceMap::Torus { torus, shift: Vector3::zeros() },
            trim: Trim::quarter_disc(Keep::Outside),
            dirichlet: [true; 4],
        },
        PatchGeometry {
            name: "inner",
            map: SurfaceMap::Torus { torus, shift: torus_shift_direction() * delta },
            trim: Trim::quarter_disc(Keep::Inside),
            dirichlet: [true; 4],
        },
    ])
}

/// In-plane shift direction of the planar disc.
pub fn planar_shift_direction() -> Vector3<f64> {
    Vector3::new(1.0, 0.0, 0.0)
}

/// Unit square minus a quarter disc, and the quarter disc shifted by `delta`.
pub fn planar_patch_geometry(delta: f64) -> Result<[PatchGeometry; 2]> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("gap {delta} must be nonnegative")));
    }
    let clearance = 1.0 - TRIM_RADIUS;
    if delta >= clearance {
        return Err(Error::DiscLeavesSquare(delta));
    }
    Ok([
        PatchGeometry {
            name: "outer",
            map: SurfaceMap::Planar { shift: Vector3::zeros() },
            trim: Trim::quarter_disc(Keep::Outside),
            dirichlet: [true; 4],
        },
        PatchGeometry {
            name: "inner",
            map: SurfaceMap::Planar { shift: planar_shift_direction() * delta },
            trim: Trim::quarter_disc(Keep::Inside),
            dirichlet: [true; 4],
        },
    ])
}

/// Surface area of a mapped trimmed patch by polar tensor-Gauss integration
/// over the disc (and tensor Gauss over the square for the complement), with
/// `pieces` subintervals of `order` points per direction.
pub fn reference_area(patch: &PatchGeometry, pieces: usize, order: usize) -> f64 {
    let sqrt_g = |x: [f64; 2]| patch.map.metric(x).determinant().sqrt();
    let split = |a: f64, b: f64| -> Vec<(f64, f64)> {
        (0..pieces)
            .flat_map(|k| {
                let lo = a + (b - a) * k as f64 / pieces as f64;
                gauss_interval(order, lo, lo + (b - a) / pieces as f64)
            })
            .collect()
    };
    let r = patch.trim.radius;
    let radial = split(0.0, r);
    let angular = split(0.0, FRAC_PI_2);
    let mut disc = 0.0;
    for &(rho, wr) in &radial {
        for &(th, wt) in &angular {
            disc += wr * wt * rho * sqrt_g([rho * th.cos(), rho * th.sin()]);
        }
    }
    match patch.trim.keep {
        Keep::Inside => disc,
        Keep::Outside => {
            let unit = split(0.0, 1.0);
            let mut square = 0.0;
            for &(y, wy) in &unit {
                for &(x, wx) in &unit {
                    square += wx * wy * sqrt_g([x, y]);
                }
            }
            square - disc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn levelset_values() {
        assert!(trim_levelset(0.9, 0.0).abs() < 1e-15);
        assert!((trim_levelset(0.0, 0.0) + 0.81).abs() < 1e-15);
        assert!((trim_levelset(1.0, 1.0) - 1.19).abs() < 1e-15);
        let outer = Trim::quarter_disc(Keep::Outside);
        assert!(outer.is_kept([0.95, 0.5]));
        assert!(!outer.is_kept([0.1, 0.1]));
    }

    #[test]
    fn planar_geometry() {
        let [outer, inner] = planar_patch_geometry(0.0).unwrap();
        let x = [0.3, 0.4];
        assert_eq!(outer.map.eval(x), inner.map.eval(x));
        let [_, shifted] = planar_patch_geometry(0.05).unwrap();
        let d = shifted.map.eval([0.0, 0.0]);
        assert!((d - Vector3::new(0.05, 0.0, 0.0)).norm() < 1e-15);
        assert!((planar_shift_direction().norm() - 1.0).abs() < 1e-15);
        assert!(matches!(planar_patch_geometry(0.2), Err(Error::DiscLeavesSquare(_))));
    }

    #[test]
    fn planar_reference_area() {
        let [outer, inner] = planar_patch_geometry(0.0).unwrap();
        let disc = PI * 0.81 / 4.0;
        assert!((reference_area(&inner, 2, 10) - disc).abs() < 1e-13);
        assert!((reference_area(&outer, 2, 10) - (1.0 - disc)).abs() < 1e-13);
    }

    #[test]
    fn interface_samples_are_dense_and_unit() {
        let torus = Torus::new(1.0, 0.3).unwrap();
        let [outer, _] = torus_patch_geometry(torus, 0.0).unwrap();
        let s = outer.interface_samples(0.01);
        assert!(s.max_spacing() <= 0.01);
        assert!(s.tangents().iter().all(|t| (t.norm() - 1.0).abs() < 1e-12));
    }
}
