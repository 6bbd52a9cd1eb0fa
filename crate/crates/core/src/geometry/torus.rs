use crate::error::{Error, Result};
use nalgebra::{Matrix3, Matrix3x2, Vector3};
use std::f64::consts::PI;

/// Tube angle covered by the reference `x` axis.
pub const TUBE_SPAN: f64 = 5.0 * PI / 3.0;
/// Ring angle covered by the reference `y` axis.
pub const RING_SPAN: f64 = 5.0 * PI / 18.0;

/// Torus around the `z` axis with ring radius `major` and tube radius `minor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus {
    major: f64,
    minor: f64,
}

impl Torus {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0) || !(major > minor) {
            return Err(Error::SelfIntersectingTorus { major, minor });
        }
        Ok(Self { major, minor })
    }

    pub fn major(&self) -> f64 {
        self.major
    }

    pub fn minor(&self) -> f64 {
        self.minor
    }

    pub fn param(&self, x: [f64; 2]) -> Vector3<f64> {
        let (st, ct) = (TUBE_SPAN * x[0]).sin_cos();
        let (sp, cp) = (RING_SPAN * x[1]).sin_cos();
        let rho = self.major + self.minor * ct;
        Vector3::new(rho * cp, rho * sp, self.minor * st)
    }

    pub fn param_jacobian(&self, x: [f64; 2]) -> Matrix3x2<f64> {
        let (st, ct) = (TUBE_SPAN * x[0]).sin_cos();
        let (sp, cp) = (RING_SPAN * x[1]).sin_cos();
        let rho = self.major + self.minor * ct;
        let r = self.minor;
        Matrix3x2::new(
            -TUBE_SPAN * r * st * cp,
            -RING_SPAN * rho * sp,
            -TUBE_SPAN * r * st * sp,
            RING_SPAN * rho * cp,
            TUBE_SPAN * r * ct,
            0.0,
        )
    }

    fn ring_offset(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let rho = x.x.hypot(x.y);
        if rho <= 1e-14 * self.major {
            return Err(Error::AmbiguousProjection([x.x, x.y, x.z]));
        }
        let ring = Vector3::new(self.major * x.x / rho, self.major * x.y / rho, 0.0);
        let v = x - ring;
        if v.norm() <= 1e-14 * self.minor {
            return Err(Error::AmbiguousProjection([x.x, x.y, x.z]));
        }
        Ok(v)
    }

    pub fn closest_point(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let v = self.ring_offset(x)?;
        Ok(x - v + v.normalize() * self.minor)
    }

    /// Outward unit normal at the closest point to `x`.
    pub fn normal(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.ring_offset(x)?.normalize())
    }

    /// Mean curvature `(k1 + k2) / 2` at a surface point, positive for the
    /// outward normal on the outer equator.
    pub fn mean_curvature(&self, p: &Vector3<f64>) -> f64 {
        let rho = p.x.hypot(p.y);
        let cos_t = (rho - self.major) / self.minor;
        0.5 * (1.0 / self.minor + cos_t / rho)
    }

    pub fn distance(&self, x: &Vector3<f64>) -> Result<f64> {
        Ok((x - self.closest_point(x)?).norm())
    }
}

pub fn torus_map_outer(x: [f64; 2], major: f64, minor: f64) -> Result<Vector3<f64>> {
    Ok(Torus::new(major, minor)?.param(x))
}

pub fn torus_map_inner(x: [f64; 2], major: f64, minor: f64, delta: f64) -> Result<Vector3<f64>> {
    Ok(torus_map_outer(x, major, minor)? + torus_shift_direction() * delta)
}

/// Shift of the inner torus patch: the surface normal at the disc midpoint.
pub fn torus_shift_direction() -> Vector3<f64> {
    let (a, b) = (5.0 * PI / 6.0, 5.0 * PI / 36.0);
    Vector3::new(a.cos() * b.cos(), a.cos() * b.sin(), a.sin())
}

fn sine_value(x: &Vector3<f64>) -> f64 {
    (3.0 * x.x).sin() * (3.0 * x.y).sin() * (3.0 * x.z).sin()
}

fn sine_gradient(x: &Vector3<f64>) -> Vector3<f64> {
    let (sx, cx) = (3.0 * x.x).sin_cos();
    let (sy, cy) = (3.0 * x.y).sin_cos();
    let (sz, cz) = (3.0 * x.z).sin_cos();
    Vector3::new(3.0 * cx * sy * sz, 3.0 * sx * cy * sz, 3.0 * sx * sy * cz)
}

fn sine_hessian(x: &Vector3<f64>) -> Matrix3<f64> {
    let (sx, cx) = (3.0 * x.x).sin_cos();
    let (sy, cy) = (3.0 * x.y).sin_cos();
    let (sz, cz) = (3.0 * x.z).sin_cos();
    let u = sx * sy * sz;
    let xy = 9.0 * cx * cy * sz;
    let xz = 9.0 * cx * sy * cz;
    let yz = 9.0 * sx * cy * cz;
    Matrix3::new(-9.0 * u, xy, xz, xy, -9.0 * u, yz, xz, yz, -9.0 * u)
}

/// `-Delta_Omega u` for `u = sin(3x) sin(3y) sin(3z)` at a torus point, through
/// `Delta_Omega u = Delta u - d_nn u - 2 H d_n u`.
fn torus_source(torus: &Torus, p: &Vector3<f64>) -> Result<f64> {
    let n = torus.normal(p)?;
    let lap = -27.0 * sine_value(p);
    let dnn = n.dot(&(sine_hessian(p) * n));
    let dn = n.dot(&sine_gradient(p));
    let h = torus.mean_curvature(p);
    Ok(-(lap - dnn - 2.0 * h * dn))
}

/// `(u, f, grad_Omega u)` at a point on the torus.
pub fn manufactured_data(p: &Vector3<f64>, torus: &Torus) -> Result<(f64, f64, Vector3<f64>)> {
    let distance = torus.distance(p)?;
    if distance > 1e-10 {
        return Err(Error::OffSurface { point: [p.x, p.y, p.z], distance });
    }
    let n = torus.normal(p)?;
    let g = sine_gradient(p);
    Ok((sine_value(p), torus_source(torus, p)?, g - n * n.dot(&g)))
}

/// Exact solution and data of a model problem, evaluated at physical points
/// of (possibly shifted) patches through the lift onto the exact geometry.
#[derive(Debug, Clone, Copy)]
pub enum Manufactured {
    /// `sin(3x) sin(3y) sin(3z)` on a torus, lifted by the closest point map.
    TorusSine(Torus),
    /// `sin(3x) sin(3y)` in the plane.
    PlanarSine,
    /// Constant solution with zero source.
    Constant(f64),
}

impl Manufactured {
    pub fn lift(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        match self {
            Manufactured::TorusSine(t) => t.closest_point(x),
            Manufactured::PlanarSine | Manufactured::Constant(_) => Ok(Vector3::new(x.x, x.y, 0.0)),
        }
    }

    pub fn value(&self, x: &Vector3<f64>) -> Result<f64> {
        let p = self.lift(x)?;
        Ok(match self {
            Manufactured::TorusSine(_) => sine_value(&p),
            Manufactured::PlanarSine => (3.0 * p.x).sin() * (3.0 * p.y).sin(),
            Manufactured::Constant(c) => *c,
        })
    }

    /// Tangential gradient of the exact solution at the lifted point.
    pub fn surface_gradient(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let p = self.lift(x)?;
        Ok(match self {
            Manufactured::TorusSine(t) => {
                let n = t.normal(&p)?;
                let g = sine_gradient(&p);
                g - n * n.dot(&g)
            }
            Manufactured::PlanarSine => {
                let (sx, cx) = (3.0 * p.x).sin_cos();
                let (sy, cy) = (3.0 * p.y).sin_cos();
                Vector3::new(3.0 * cx * sy, 3.0 * sx * cy, 0.0)
            }
            Manufactured::Constant(_) => Vector3::zeros(),
        })
    }

    pub fn source(&self, x: &Vector3<f64>) -> Result<f64> {
        let p = self.lift(x)?;
        match self {
            Manufactured::TorusSine(t) => torus_source(t, &p),
            Manufactured::PlanarSine => Ok(18.0 * (3.0 * p.x).sin() * (3.0 * p.y).sin()),
            Manufactured::Constant(_) => Ok(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> Torus {
        Torus::new(1.0, 0.3).unwrap()
    }

    fn close(a: Vector3<f64>, b: [f64; 3], tol: f64) -> bool {
        (a - Vector3::from(b)).norm() <= tol
    }

    #[test]
    fn outer_map_values() {
        let t = torus();
        assert!(close(t.param([0.0, 0.0]), [1.3, 0.0, 0.0], 1e-15));
        assert!(close(t.param([0.3, 0.0]), [1.0, 0.0, 0.3], 1e-15));
        let s = 1.3 * 0.5f64.sqrt();
        assert!(close(t.param([0.0, 0.9]), [s, s, 0.0], 1e-15));
        assert!(matches!(Torus::new(0.3, 0.3), Err(Error::SelfIntersectingTorus { .. })));
    }

    #[test]
    fn shift_direction() {
        let d = torus_shift_direction();
        assert!((d.norm() - 1.0).abs() < 1e-15);
        assert!(close(d, [-0.784886, -0.365998, 0.5], 1e-6));
        assert!((d.z - 0.5).abs() < 1e-15);
        let x = [0.4, 0.7];
        assert_eq!(torus_map_inner(x, 1.0, 0.3, 0.0).unwrap(), torus_map_outer(x, 1.0, 0.3).unwrap());
    }

    #[test]
    fn closest_point_meridian_plane() {
        let t = torus();
        assert!(close(t.closest_point(&Vector3::new(2.0, 0.0, 0.0)).unwrap(), [1.3, 0.0, 0.0], 1e-15));
        // meridian plane through the y axis: circle of radius 0.3 around (1, 0.3 offset)
        let q = t.closest_point(&Vector3::new(0.0, 2.0, 0.3)).unwrap();
        let (dy, dz) = (1.0, 0.3);
        let len = f64::hypot(dy, dz);
        assert!(close(q, [0.0, 1.0 + 0.3 * dy / len, 0.3 * dz / len], 1e-10));
        let p = t.param([0.37, 0.81]);
        assert!((t.closest_point(&p).unwrap() - p).norm() < 1e-12);
        assert!(matches!(t.closest_point(&Vector3::new(0.0, 0.0, 0.5)), Err(Error::AmbiguousProjection(_))));
        assert!(matches!(t.closest_point(&Vector3::new(1.0, 0.0, 0.0)), Err(Error::AmbiguousProjection(_))));
    }

    #[test]
    fn manufactured_point_values() {
        let t = torus();
        let (u, _, g) = manufactured_data(&Vector3::new(1.3, 0.0, 0.0), &t).unwrap();
        assert_eq!(u, 0.0);
        assert!(g.dot(&t.normal(&Vector3::new(1.3, 0.0, 0.0)).unwrap()).abs() < 1e-14);
        assert!(matches!(
            manufactured_data(&Vector3::new(1.5, 0.0, 0.0), &t),
            Err(Error::OffSurface { .. })
        ));
        let planar = Manufactured::PlanarSine;
        let x = Vector3::new(PI / 6.0, PI / 6.0, 0.0);
        assert!((planar.source(&x).unwrap() - 18.0).abs() < 1e-13);
    }
}
