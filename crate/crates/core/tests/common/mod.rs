#![allow(dead_code)]

use gapfem::problem::{Discretization, GeometryKind, ProblemSetup};
use gapfem::splines::SplineSpace;
use nalgebra::Vector3;

pub fn planar(p: usize, n: usize, delta: f64) -> Discretization {
    ProblemSetup::new(GeometryKind::Planar, p, n, delta).unwrap().discretize().unwrap()
}

pub fn torus(p: usize, n: usize, delta: f64) -> Discretization {
    ProblemSetup::new(GeometryKind::Torus, p, n, delta).unwrap().discretize().unwrap()
}

/// Elementary symmetric polynomial of degree `k` in `xs`.
fn elementary(xs: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in xs {
        for j in (1..=k).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Open uniform knot vector with `n` cells of size `h` from `origin`.
fn knots(origin: f64, h: f64, n: usize, p: usize) -> Vec<f64> {
    let mut t = vec![origin; p + 1];
    t.extend((1..n).map(|i| origin + h * i as f64));
    t.extend(std::iter::repeat_n(origin + h * n as f64, p + 1));
    t
}

/// Spline coefficients of `prod_axis x_axis^powers[axis]` from the blossom
/// (Marsden's identity), one per dof of `space`.
pub fn monomial_coefficients(space: &SplineSpace, powers: [usize; 3]) -> Vec<f64> {
    let g = space.grid();
    let p = g.degree();
    let o = g.origin();
    let c = g.counts();
    let kv: Vec<Vec<f64>> = (0..g.dim()).map(|a| knots(o[a], g.cell_size(), c[a], p)).collect();
    (0..space.num_dofs())
        .map(|d| {
            let b = space.basis_of(d);
            (0..g.dim())
                .map(|a| {
                    let k = powers[a];
                    assert!(k <= p);
                    elementary(&kv[a][b[a] + 1..b[a] + 1 + p], k) / binomial(p, k)
                })
                .product()
        })
        .collect()
}

/// Coefficients of a polynomial given as `(coefficient, powers)` terms.
pub fn polynomial_coefficients(space: &SplineSpace, terms: &[(f64, [usize; 3])]) -> Vec<f64> {
    let mut out = vec![0.0; space.num_dofs()];
    for (c, pw) in terms {
        for (o, v) in out.iter_mut().zip(monomial_coefficients(space, *pw)) {
            *o += c * v;
        }
    }
    out
}

/// `u o F` on the full torus in angle coordinates.
pub fn torus_point(theta: f64, phi: f64) -> Vector3<f64> {
    let rho = 1.0 + 0.3 * theta.cos();
    Vector3::new(rho * phi.cos(), rho * phi.sin(), 0.3 * theta.sin())
}

/// `-Laplace-Beltrami` of `u` by central differences of the divergence form
/// `g^-1/2 d_i (g^1/2 g^ij d_j u)` in angle coordinates, with the metric
/// itself from differences of the embedding.
pub fn fd_source(u: &dyn Fn(Vector3<f64>) -> f64, theta: f64, phi: f64) -> f64 {
    let k = 1e-3;
    let e = [[k, 0.0], [0.0, k]];
    let f = |t: f64, p: f64| u(torus_point(t, p));
    let metric = |t: f64, p: f64| {
        let dt = (torus_point(t + k, p) - torus_point(t - k, p)) / (2.0 * k);
        let dp = (torus_point(t, p + k) - torus_point(t, p - k)) / (2.0 * k);
        let g = nalgebra::Matrix2::new(dt.dot(&dt), dt.dot(&dp), dp.dot(&dt), dp.dot(&dp));
        (g.determinant().sqrt(), g.try_inverse().unwrap())
    };
    let flux = |t: f64, p: f64, i: usize| {
        let (s, gi) = metric(t, p);
        let du = [(f(t + k, p) - f(t - k, p)) / (2.0 * k), (f(t, p + k) - f(t, p - k)) / (2.0 * k)];
        s * (gi[(i, 0)] * du[0] + gi[(i, 1)] * du[1])
    };
    let mut div = 0.0;
    for i in 0..2 {
        let (dt, dp) = (e[i][0] / 2.0, e[i][1] / 2.0);
        div += (flux(theta + dt, phi + dp, i) - flux(theta - dt, phi - dp, i)) / k;
    }
    -div / metric(theta, phi).0
}


pub fn sine3(x: Vector3<f64>) -> f64 {
    (3.0 * x.x).sin() * (3.0 * x.y).sin() * (3.0 * x.z).sin()
}

/// Smallest eigenvalue by inverse iteration.
pub fn smallest_eigenvalue(a: &gapfem::assembly::CsrMatrix) -> Option<f64> {
    let n = a.dim();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut lambda = 0.0;
    for _ in 0..40 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        lambda = a.quadratic_form(&x);
        x = gapfem::solve_post::solve_linear(a, &x).ok()?.0;
    }
    Some(lambda)
}

