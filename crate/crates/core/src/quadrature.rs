//! Gauss rules on intervals, boxes and triangles.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one Gauss point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Gauss rule on `[a, b]`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&t, &wt)| (a + (b - a) * t, (b - a) * wt)).collect()
}

/// Tensor Gauss rule on the rectangle `lo..hi`.
pub fn gauss_rect(n: usize, lo: [f64; 2], hi: [f64; 2]) -> Vec<([f64; 2], f64)> {
    let gx = gauss_interval(n, lo[0], hi[0]);
    let gy = gauss_interval(n, lo[1], hi[1]);
    let mut out = Vec::with_capacity(n * n);
    for &(y, wy) in &gy {
        for &(x, wx) in &gx {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

/// Tensor Gauss rule on the box `lo..hi`.
pub fn gauss_box(n: usize, lo: [f64; 3], hi: [f64; 3]) -> Vec<([f64; 3], f64)> {
    let g: Vec<_> = (0..3).map(|k| gauss_interval(n, lo[k], hi[k])).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &(z, wz) in &g[2] {
        for &(y, wy) in &g[1] {
            for &(x, wx) in &g[0] {
                out.push(([x, y, z], wx * wy * wz));
            }
        }
    }
    out
}

/// Collapsed Gauss rule on the unit triangle `{xi, eta >= 0, xi + eta <= 1}`.
/// Exact for polynomials of total degree `2n - 2`.
pub fn gauss_triangle(n: usize) -> Vec<([f64; 2], f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            out.push(([u, v * (1.0 - u)], wu * wv * (1.0 - u)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_to_degree_2n_minus_1() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for d in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rule_monomials() {
        // int x^a y^b over the unit triangle = a! b! / (a + b + 2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        let rule = gauss_triangle(4);
        for a in 0..4u32 {
            for b in 0..(4 - a) {
                let q: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }
}
