use super::GammaModel;
use crate::splines::{KnotGrid, MultiIndex};
use nalgebra::{Matrix3, Vector3};
use std::collections::HashMap;

/// Piecewise tensor-Lagrange interpolant of `t (x) t` on a set of hexahedra,
/// giving the projector `P = I - t (x) t` onto the plane normal to the
/// interface tangent.
#[derive(Debug, Clone)]
pub struct TangentProjectorField {
    grid: KnotGrid,
    degree: usize,
    cells: HashMap<usize, Vec<Matrix3<f64>>>,
}

/// Values of the `n + 1` equispaced Lagrange polynomials on `[0, 1]` at `s`.
fn lagrange_1d(degree: usize, s: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    let node = |i: usize| i as f64 / degree as f64;
    for (i, o) in out.iter_mut().enumerate().take(degree + 1) {
        let mut v = 1.0;
        for j in 0..=degree {
            if j != i {
                v *= (s - node(j)) / (node(i) - node(j));
            }
        }
        *o = v;
    }
    out
}

impl TangentProjectorField {
    /// Interpolates on every listed cell of a three-dimensional grid with
    /// `(degree + 1)^3` equispaced nodes per cell.
    pub fn new(grid: &KnotGrid, cells: &[MultiIndex], gamma: &GammaModel, degree: usize) -> Self {
        Self::from_tangent(grid, cells, degree, |x| gamma.tangent(x))
    }

    pub fn from_tangent<F>(grid: &KnotGrid, cells: &[MultiIndex], degree: usize, tangent: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> Vector3<f64>,
    {
        assert!((1..=4).contains(&degree), "interpolation degree must lie in 1..=4");
        let h = grid.cell_size();
        let mut map = HashMap::with_capacity(cells.len());
        for &c in cells {
            let (lo, _) = grid.cell_bounds(c);
            let mut nodal = Vec::with_capacity((degree + 1).pow(3));
            for k in 0..=degree {
                for j in 0..=degree {
                    for i in 0..=degree {
                        let x = Vector3::new(
                            lo[0] + h * i as f64 / degree as f64,
                            lo[1] + h * j as f64 / degree as f64,
                            lo[2] + h * k as f64 / degree as f64,
                        );
                        let t = tangent(&x).normalize();
                        nodal.push(t * t.transpose());
                    }
                }
            }
            map.insert(grid.cell_id(c), nodal);
        }
        Self { grid: grid.clone(), degree, cells: map }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Interpolated `t (x) t` at `x` in `cell`, or `None` off the field's cells.
    pub fn tangent_tensor(&self, cell: MultiIndex, x: &Vector3<f64>) -> Option<Matrix3<f64>> {
        let nodal = self.cells.get(&self.grid.cell_id(cell))?;
        let (lo, _) = self.grid.cell_bounds(cell);
        let h = self.grid.cell_size();
        let p = self.degree;
        let lx = lagrange_1d(p, (x.x - lo[0]) / h);
        let ly = lagrange_1d(p, (x.y - lo[1]) / h);
        let lz = lagrange_1d(p, (x.z - lo[2]) / h);
        let mut m = Matrix3::zeros();
        let mut n = 0;
        for wz in &lz[..=p] {
            for wy in &ly[..=p] {
                for wx in &lx[..=p] {
                    m += nodal[n] * (wx * wy * wz);
                    n += 1;
                }
            }
        }
        Some(m)
    }

    /// Symmetrised `I - interpolant(t (x) t)`.
    pub fn eval(&self, cell: MultiIndex, x: &Vector3<f64>) -> Option<Matrix3<f64>> {
        let tt = self.tangent_tensor(cell, x)?;
        Some(Matrix3::identity() - (tt + tt.transpose()) * 0.5)
    }

    /// Nodes of one cell, in the same order as the stored nodal tensors.
    pub fn nodes(&self, cell: MultiIndex) -> Vec<Vector3<f64>> {
        let (lo, _) = self.grid.cell_bounds(cell);
        let h = self.grid.cell_size();
        let p = self.degree as f64;
        let mut out = Vec::new();
        for k in 0..=self.degree {
            for j in 0..=self.degree {
                for i in 0..=self.degree {
                    out.push(Vector3::new(
                        lo[0] + h * i as f64 / p,
                        lo[1] + h * j as f64 / p,
                        lo[2] + h * k as f64 / p,
                    ));
                }
            }
        }
        out
    }
}
