//! Tensor-product B-spline spaces with full regularity on structured grids.
//!
//! Every axis carries an open uniform knot vector over `[origin, origin + n h]`
//! so the space on a grid with `n` cells has `n + p` functions per axis. A
//! [`SplineSpace`] keeps the functions whose support meets a set of active
//! cells and numbers them in increasing tensor-index order.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;

/// Cell or basis multi-index. Unused axes are zero.
pub type MultiIndex = [usize; 3];

type AxisTable = [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1];

/// Structured grid with identical cell size on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    dim: usize,
    origin: [f64; 3],
    cell_size: f64,
    counts: [usize; 3],
    degree: usize,
}

impl KnotGrid {
    pub fn new(origin: &[f64], cell_size: f64, counts: &[usize], degree: usize) -> Result<Self> {
        let dim = origin.len();
        if !(1..=3).contains(&dim) || counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension mismatch: origin has {} entries, counts {}",
                dim,
                counts.len()
            )));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidGrid(format!("cell size {cell_size} must be positive")));
        }
        if degree < 1 || degree > MAX_DEGREE {
            return Err(Error::InvalidGrid(format!("degree {degree} outside 1..={MAX_DEGREE}")));
        }
        if counts.iter().any(|&n| n == 0) {
            return Err(Error::InvalidGrid("zero cell count".into()));
        }
        let mut o = [0.0; 3];
        let mut c = [1; 3];
        o[..dim].copy_from_slice(origin);
        c[..dim].copy_from_slice(counts);
        Ok(Self { dim, origin: o, cell_size, counts: c, degree })
    }

    /// Unit square `[0,1]^2` split into `n x n` cells.
    pub fn unit_square(n: usize, degree: usize) -> Result<Self> {
        Self::new(&[0.0, 0.0], 1.0 / n as f64, &[n, n], degree)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn num_cells(&self) -> usize {
        self.counts[..self.dim].iter().product()
    }

    pub fn basis_counts(&self) -> [usize; 3] {
        let mut b = [1; 3];
        for k in 0..self.dim {
            b[k] = self.counts[k] + self.degree;
        }
        b
    }

    pub fn num_basis(&self) -> usize {
        self.basis_counts()[..self.dim].iter().product()
    }

    pub fn cell_id(&self, c: MultiIndex) -> usize {
        c[0] + self.counts[0] * (c[1] + self.counts[1] * c[2])
    }

    pub fn cell_index(&self, id: usize) -> MultiIndex {
        let nx = self.counts[0];
        let ny = self.counts[1];
        [id % nx, (id / nx) % ny, id / (nx * ny)]
    }

    pub fn contains_cell(&self, c: MultiIndex) -> bool {
        (0..3).all(|k| c[k] < self.counts[k])
    }

    pub fn basis_id(&self, b: MultiIndex) -> usize {
        let n = self.basis_counts();
        b[0] + n[0] * (b[1] + n[1] * b[2])
    }

    pub fn basis_index(&self, id: usize) -> MultiIndex {
        let n = self.basis_counts();
        [id % n[0], (id / n[0]) % n[1], id / (n[0] * n[1])]
    }

    /// Lower and upper corner of a cell.
    pub fn cell_bounds(&self, c: MultiIndex) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..self.dim {
            lo[k] = self.origin[k] + c[k] as f64 * self.cell_size;
            hi[k] = lo[k] + self.cell_size;
        }
        (lo, hi)
    }

    /// Cell containing `x`, with points on the upper domain face assigned to
    /// the last cell. `None` outside the grid.
    pub fn locate(&self, x: &[f64]) -> Option<MultiIndex> {
        let mut c = [0; 3];
        for k in 0..self.dim {
            let s = (x[k] - self.origin[k]) / self.cell_size;
            let n = self.counts[k] as f64;
            let tol = 1e-12 * n.max(1.0);
            if !(s >= -tol && s <= n + tol) {
                return None;
            }
            c[k] = (s.floor().max(0.0) as usize).min(self.counts[k] - 1);
        }
        Some(c)
    }

    /// Greville abscissae of the basis functions along `axis`.
    pub fn greville(&self, axis: usize) -> Vec<f64> {
        let p = self.degree;
        let n = self.counts[axis];
        (0..n + p)
            .map(|j| {
                let s: f64 = (j + 1..=j + p).map(|i| knot(i, p, n)).sum();
                self.origin[axis] + self.cell_size * s / p as f64
            })
            .collect()
    }
}

/// Open uniform knot `i` in cell units for `n` cells and degree `p`.
fn knot(i: usize, p: usize, n: usize) -> f64 {
    (i as isize - p as isize).clamp(0, n as isize) as f64
}

/// Values and derivatives up to `nders` of the `p + 1` functions that are
/// nonzero on `cell`, at `u` given in cell units. Row `k` holds the k-th
/// derivative.
fn univariate(p: usize, n: usize, cell: usize, u: f64, nders: usize) -> AxisTable {
    let span = cell + p;
    let mut ndu = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    let mut left = [0.0; MAX_DEGREE + 1];
    let mut right = [0.0; MAX_DEGREE + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knot(span + 1 - j, p, n);
        right[j] = knot(span + j, p, n) - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let pi = p as isize;
    let mut a = [[0.0; MAX_DEGREE + 1]; 2];
    for r in 0..=pi {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nders as isize {
            let mut d = 0.0;
            let rk = r - k;
            let pk = pi - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
            for j in j1..=j2 {
                let (ju, rkj) = (j as usize, (rk + j) as usize);
                a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][rkj];
                d += a[s2][ju] * ndu[rkj][pk as usize];
            }
            if r <= pk {
                let ku = k as usize;
                a[s2][ku] = -a[s1][ku - 1] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][ku] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nders {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= (p as f64) - k as f64;
    }
    ders
}

/// Values and derivatives of the `(p+1)^dim` functions covering one cell.
///
/// Local function `b` has tensor offset `[b % (p+1), (b / (p+1)) % (p+1), ..]`
/// relative to the cell index.
#[derive(Debug, Clone)]
pub struct BasisEval {
    dim: usize,
    degree: usize,
    max_order: usize,
    cell: MultiIndex,
    axis: [AxisTable; 3],
    dofs: Vec<usize>,
}

impl BasisEval {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn cell(&self) -> MultiIndex {
        self.cell
    }

    /// Global dof of each local function.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn local_offset(&self, b: usize) -> MultiIndex {
        let q = self.degree + 1;
        let mut o = [0; 3];
        let mut r = b;
        for k in 0..self.dim {
            o[k] = r % q;
            r /= q;
        }
        o
    }

    /// Mixed partial derivative with `orders[k]` derivatives along axis `k`.
    pub fn derivative(&self, b: usize, orders: [usize; 3]) -> f64 {
        debug_assert!(orders.iter().sum::<usize>() <= self.max_order);
        let o = self.local_offset(b);
        (0..self.dim).map(|k| self.axis[k][orders[k]][o[k]]).product()
    }

    pub fn value(&self, b: usize) -> f64 {
        self.derivative(b, [0; 3])
    }

    pub fn gradient(&self, b: usize) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
            let mut orders = [0; 3];
            orders[k] = 1;
            *gk = self.derivative(b, orders);
        }
        g
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|b| self.value(b)).collect()
    }

    /// `l`-th derivative along a grid axis, for all local functions.
    pub fn axis_derivatives(&self, axis: usize, l: usize) -> Vec<f64> {
        let mut orders = [0; 3];
        orders[axis] = l;
        (0..self.len()).map(|b| self.derivative(b, orders)).collect()
    }
}

/// Field value and derivatives at one point.
#[derive(Debug, Clone)]
pub struct FieldEval {
    basis: BasisEval,
    coeffs: Vec<f64>,
}

impl FieldEval {
    pub fn derivative(&self, orders: [usize; 3]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(b, c)| c * self.basis.derivative(b, orders))
            .sum()
    }

    pub fn value(&self) -> f64 {
        self.derivative([0; 3])
    }

    pub fn gradient(&self) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (b, c) in self.coeffs.iter().enumerate() {
            let gb = self.basis.gradient(b);
            for k in 0..3 {
                g[k] += c * gb[k];
            }
        }
        g
    }
}

/// B-spline space restricted to an active cell set.
#[derive(Debug, Clone)]
pub struct SplineSpace {
    grid: KnotGrid,
    active: Vec<bool>,
    active_cells: Vec<usize>,
    dof_of_basis: Vec<usize>,
    basis_of_dof: Vec<usize>,
}

const NO_DOF: usize = usize::MAX;

impl SplineSpace {
    /// Keeps every basis function whose support meets an active cell.
    pub fn new(grid: KnotGrid, active_cells: &[MultiIndex]) -> Result<Self> {
        if active_cells.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut active = vec![false; grid.num_cells()];
        for &c in active_cells {
            if !grid.contains_cell(c) {
                return Err(Error::InvalidGrid(format!("cell {c:?} outside grid")));
            }
            active[grid.cell_id(c)] = true;
        }
        let mut used = vec![false; grid.num_basis()];
        let p = grid.degree;
        let q = [
            p + 1,
            if grid.dim > 1 { p + 1 } else { 1 },
            if grid.dim > 2 { p + 1 } else { 1 },
        ];
        let active_ids: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
        for &id in &active_ids {
            let c = grid.cell_index(id);
            for k in 0..q[2] {
                for j in 0..q[1] {
                    for i in 0..q[0] {
                        used[grid.basis_id([c[0] + i, c[1] + j, c[2] + k])] = true;
                    }
                }
            }
        }
        let mut dof_of_basis = vec![NO_DOF; used.len()];
        let mut basis_of_dof = Vec::new();
        for (b, &u) in used.iter().enumerate() {
            if u {
                dof_of_basis[b] = basis_of_dof.len();
                basis_of_dof.push(b);
            }
        }
        Ok(Self { grid, active, active_cells: active_ids, dof_of_basis, basis_of_dof })
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.grid.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.basis_of_dof.len()
    }

    /// Active cell ids in increasing order.
    pub fn active_cells(&self) -> &[usize] {
        &self.active_cells
    }

    pub fn is_active(&self, c: MultiIndex) -> bool {
        self.grid.contains_cell(c) && self.active[self.grid.cell_id(c)]
    }

    pub fn dof(&self, b: MultiIndex) -> Option<usize> {
        let d = self.dof_of_basis[self.grid.basis_id(b)];
        (d != NO_DOF).then_some(d)
    }

    /// Tensor multi-index of the basis function behind a dof.
    pub fn basis_of(&self, dof: usize) -> MultiIndex {
        self.grid.basis_index(self.basis_of_dof[dof])
    }

    /// Active cell containing `x`, if any.
    pub fn locate_active(&self, x: &[f64]) -> Option<MultiIndex> {
        self.grid.locate(x).filter(|&c| self.is_active(c))
    }

    /// Evaluates the functions covering `cell` at `x`; `x` may sit on the
    /// cell boundary, in which case the cell's own polynomial pieces are used.
    pub fn eval_basis(&self, cell: MultiIndex, x: &[f64], max_order: usize) -> Result<BasisEval> {
        let g = &self.grid;
        let p = g.degree;
        if max_order > p {
            return Err(Error::OrderTooHigh { requested: max_order, degree: p });
        }
        if !self.is_active(cell) {
            return Err(Error::InactiveCell(cell));
        }
        let mut axis = [[[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1]; 3];
        for k in 0..g.dim {
            let u = (x[k] - g.origin[k]) / g.cell_size;
            let c = cell[k] as f64;
            if !(u >= c - 1e-10 && u <= c + 1.0 + 1e-10) {
                return Err(Error::PointOutsideCell { cell, point: x[..g.dim].to_vec() });
            }
            let mut t = univariate(p, g.counts[k], cell[k], u.clamp(c, c + 1.0), max_order);
            let mut scale = 1.0;
            for row in t.iter_mut().take(max_order + 1) {
                for v in row.iter_mut().take(p + 1) {
                    *v *= scale;
                }
                scale /= g.cell_size;
            }
            axis[k] = t;
        }
        let q = p + 1;
        let n_local = q.pow(g.dim as u32);
        let mut dofs = Vec::with_capacity(n_local);
        for b in 0..n_local {
            let mut idx = cell;
            let mut r = b;
            for item in idx.iter_mut().take(g.dim) {
                *item += r % q;
                r /= q;
            }
            // covering functions of an active cell always carry a dof
            dofs.push(self.dof_of_basis[g.basis_id(idx)]);
        }
        Ok(BasisEval { dim: g.dim, degree: p, max_order, cell, axis, dofs })
    }

    pub fn eval_field_in_cell(
        &self,
        coeffs: &[f64],
        cell: MultiIndex,
        x: &[f64],
        max_order: usize,
    ) -> Result<FieldEval> {
        if coeffs.len() != self.num_dofs() {
            return Err(Error::LengthMismatch { expected: self.num_dofs(), got: coeffs.len() });
        }
        let basis = self.eval_basis(cell, x, max_order)?;
        let local = basis.dofs().iter().map(|&d| coeffs[d]).collect();
        Ok(FieldEval { basis, coeffs: local })
    }

    /// Evaluates a coefficient vector at `x`, located in the active cell set.
    pub fn eval_field(&self, coeffs: &[f64], x: &[f64], max_order: usize) -> Result<FieldEval> {
        let cell = self.grid.locate(x).ok_or_else(|| Error::PointOutsideCell {
            cell: [usize::MAX; 3],
            point: x[..self.grid.dim].to_vec(),
        })?;
        self.eval_field_in_cell(coeffs, cell, x, max_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_space(n: usize, p: usize) -> SplineSpace {
        let grid = KnotGrid::unit_square(n, p).unwrap();
        let cells: Vec<_> = (0..n * n).map(|i| grid.cell_index(i)).collect();
        SplineSpace::new(grid, &cells).unwrap()
    }

    #[test]
    fn dof_counts() {
        let g1 = KnotGrid::new(&[0.0], 0.25, &[4], 1).unwrap();
        let s1 = SplineSpace::new(g1, &[[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]).unwrap();
        assert_eq!(s1.num_dofs(), 5);
        assert_eq!(full_space(4, 2).num_dofs(), 36);
        let single = SplineSpace::new(KnotGrid::unit_square(4, 1).unwrap(), &[[0, 0, 0]]).unwrap();
        assert_eq!(single.num_dofs(), 4);
    }

    #[test]
    fn empty_active_set_is_rejected() {
        let g = KnotGrid::unit_square(4, 2).unwrap();
        assert!(matches!(SplineSpace::new(g, &[]), Err(Error::EmptySpace)));
    }

    #[test]
    fn hat_functions_at_midpoint() {
        let h = 0.25;
        let g = KnotGrid::new(&[0.0], h, &[4], 1).unwrap();
        let s = SplineSpace::new(g, &[[0, 0, 0]]).unwrap();
        let e = s.eval_basis([0, 0, 0], &[0.125], 1).unwrap();
        assert!((e.value(0) - 0.5).abs() < 1e-15);
        assert!((e.value(1) - 0.5).abs() < 1e-15);
        assert!((e.gradient(0)[0] + 1.0 / h).abs() < 1e-12);
        assert!((e.gradient(1)[0] - 1.0 / h).abs() < 1e-12);
    }

    #[test]
    fn evaluation_errors() {
        let s = full_space(4, 2);
        assert!(matches!(
            s.eval_basis([0, 0, 0], &[0.6, 0.1], 1),
            Err(Error::PointOutsideCell { .. })
        ));
        assert!(matches!(
            s.eval_basis([0, 0, 0], &[0.1, 0.1], 3),
            Err(Error::OrderTooHigh { .. })
        ));
        assert!(matches!(
            s.eval_field(&[1.0; 3], &[0.1, 0.1], 0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn constant_and_linear_reproduction() {
        for p in 1..=3 {
            let s = full_space(5, p);
            let ones = vec![2.5; s.num_dofs()];
            let gx = s.grid().greville(0);
            let lin: Vec<f64> = (0..s.num_dofs()).map(|d| gx[s.basis_of(d)[0]]).collect();
            for x in [[0.13, 0.77], [0.5, 0.5], [0.999, 0.01]] {
                let c = s.eval_field(&ones, &x, 1).unwrap();
                assert!((c.value() - 2.5).abs() < 1e-13);
                assert!(c.gradient()[0].abs() < 1e-12 && c.gradient()[1].abs() < 1e-12);
                let l = s.eval_field(&lin, &x, 1).unwrap();
                assert!((l.value() - x[0]).abs() < 1e-13, "p={p}");
                assert!((l.gradient()[0] - 1.0).abs() < 1e-12);
            }
        }
    }
}
