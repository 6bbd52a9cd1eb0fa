//! Active and cut cells of the patch grids, the hybrid hexahedral band and
//! the face sets carrying the stabilization terms.

mod cut;
mod hybrid;

pub use cut::{
    box_status, cut_quadrature, perimeter_sign_changes, CellStatus, CurvePoint, CutOptions, CutRule, QuadPoint2,
};
pub use hybrid::{background_grid, extract_hybrid_mesh, HybridMesh3D};

use crate::error::Result;
use crate::geometry::{Region, SQUARE_EDGES};
use crate::quadrature::{gauss_interval, gauss_rect};
use crate::splines::{KnotGrid, MultiIndex};
use rayon::prelude::*;
use std::io::Write;

/// Interior face between `lower` and its upper neighbour along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridFace {
    pub lower: MultiIndex,
    pub axis: usize,
}

impl GridFace {
    pub fn upper(&self) -> MultiIndex {
        let mut c = self.lower;
        c[self.axis] += 1;
        c
    }
}

/// Classifies every cell of a 2D grid on a `(p+2) x (p+2)` lattice including
/// the corners, in cell-id order.
pub fn classify_cells(grid: &KnotGrid, region: &dyn Region) -> Vec<CellStatus> {
    let m = grid.degree() + 2;
    (0..grid.num_cells())
        .map(|id| {
            let (lo, hi) = grid.cell_bounds(grid.cell_index(id));
            box_status(region, [lo[0], lo[1]], [hi[0], hi[1]], m)
        })
        .collect()
}

/// Faces between two active cells of which at least one is cut.
pub fn ghost_faces(grid: &KnotGrid, status: &[CellStatus]) -> Vec<GridFace> {
    let mut faces = Vec::new();
    for id in 0..grid.num_cells() {
        let c = grid.cell_index(id);
        for axis in 0..grid.dim() {
            let mut n = c;
            n[axis] += 1;
            if !grid.contains_cell(n) {
                continue;
            }
            let (a, b) = (status[id], status[grid.cell_id(n)]);
            if a.is_active() && b.is_active() && (a == CellStatus::Cut || b == CellStatus::Cut) {
                faces.push(GridFace { lower: c, axis });
            }
        }
    }
    faces
}

/// Active cell with its bulk rule and, for cut cells, the trim-curve rule.
#[derive(Debug, Clone)]
pub struct ActiveCell {
    pub index: MultiIndex,
    pub status: CellStatus,
    pub bulk: Vec<QuadPoint2>,
    pub curve: Vec<CurvePoint>,
}

/// Quadrature point on a Dirichlet edge of the reference square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub x: [f64; 2],
    pub w: f64,
    pub normal: [f64; 2],
    pub cell: MultiIndex,
    pub edge: usize,
}

/// Outward normal and fixed coordinate of a square edge, `x=0, x=1, y=0, y=1`.
fn square_edge(edge: usize) -> (usize, f64, [f64; 2]) {
    match edge {
        0 => (0, 0.0, [-1.0, 0.0]),
        1 => (0, 1.0, [1.0, 0.0]),
        2 => (1, 0.0, [0.0, -1.0]),
        _ => (1, 1.0, [0.0, 1.0]),
    }
}

/// Kept sub-intervals of the segment `a..b`, resolved on `pieces` samples.
fn kept_intervals(region: &dyn Region, a: [f64; 2], b: [f64; 2], pieces: usize) -> Vec<([f64; 2], [f64; 2])> {
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut out = Vec::new();
    let mut start: Option<[f64; 2]> = region.is_kept(a).then_some(a);
    for k in 0..pieces {
        let (p, q) = (at(k as f64 / pieces as f64), at((k + 1) as f64 / pieces as f64));
        let (kp, kq) = (region.is_kept(p), region.is_kept(q));
        if kp != kq {
            let r = cut::segment_root(region, p, q);
            match start.take() {
                Some(s) => out.push((s, r)),
                None => start = Some(r),
            }
        }
    }
    if let Some(s) = start {
        out.push((s, b));
    }
    out
}

/// Structured patch grid restricted to the cells meeting the kept region.
#[derive(Debug, Clone)]
pub struct ActiveMesh2D {
    grid: KnotGrid,
    status: Vec<CellStatus>,
    cells: Vec<ActiveCell>,
    ghost: Vec<GridFace>,
    dirichlet: Vec<EdgePoint>,
    options: CutOptions,
}

impl ActiveMesh2D {
    pub fn new(grid: KnotGrid, region: &dyn Region, dirichlet: [bool; SQUARE_EDGES], options: CutOptions) -> Result<Self> {
        let status = classify_cells(&grid, region);
        let ids: Vec<usize> = (0..status.len()).filter(|&i| status[i].is_active()).collect();
        let cells = ids
            .par_iter()
            .map(|&id| {
                let index = grid.cell_index(id);
                let (lo, hi) = grid.cell_bounds(index);
                let (lo, hi) = ([lo[0], lo[1]], [hi[0], hi[1]]);
                let (bulk, curve) = match status[id] {
                    CellStatus::Cut => {
                        let rule = cut_quadrature(region, index, lo, hi, &options)?;
                        (rule.bulk, rule.curve)
                    }
                    _ => (
                        gauss_rect(options.bulk_order, lo, hi).into_iter().map(|(x, w)| QuadPoint2 { x, w }).collect(),
                        Vec::new(),
                    ),
                };
                Ok(ActiveCell { index, status: status[id], bulk, curve })
            })
            .collect::<Result<Vec<_>>>()?;
        let ghost = ghost_faces(&grid, &status);
        let mut mesh = Self { grid, status, cells, ghost, dirichlet: Vec::new(), options };
        mesh.dirichlet = mesh.edge_quadrature(region, dirichlet);
        Ok(mesh)
    }

    fn edge_quadrature(&self, region: &dyn Region, flags: [bool; SQUARE_EDGES]) -> Vec<EdgePoint> {
        let g = &self.grid;
        let n = g.counts();
        let origin = g.origin();
        let h = g.cell_size();
        let mut out = Vec::new();
        for (edge, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
            let (axis, side, normal) = square_edge(edge);
            let along = 1 - axis;
            let fixed = origin[axis] + side * n[axis] as f64 * h;
            for k in 0..n[along] {
                let mut cell = [0; 3];
                cell[along] = k;
                cell[axis] = if side > 0.0 { n[axis] - 1 } else { 0 };
                if !self.status[g.cell_id(cell)].is_active() {
                    continue;
                }
                let mut a = [0.0; 2];
                let mut b = [0.0; 2];
                a[axis] = fixed;
                b[axis] = fixed;
                a[along] = origin[along] + k as f64 * h;
                b[along] = a[along] + h;
                for (s, e) in kept_intervals(region, a, b, 8) {
                    for (t, w) in gauss_interval(self.options.curve_order, s[along], e[along]) {
                        let mut x = a;
                        x[along] = t;
                        out.push(EdgePoint { x, w, normal, cell, edge });
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn options(&self) -> &CutOptions {
        &self.options
    }

    pub fn status(&self, c: MultiIndex) -> CellStatus {
        self.status[self.grid.cell_id(c)]
    }

    pub fn statuses(&self) -> &[CellStatus] {
        &self.status
    }

    /// Active cells in cell-id order.
    pub fn cells(&self) -> &[ActiveCell] {
        &self.cells
    }

    pub fn active_indices(&self) -> Vec<MultiIndex> {
        self.cells.iter().map(|c| c.index).collect()
    }

    pub fn ghost_faces(&self) -> &[GridFace] {
        &self.ghost
    }

    pub fn dirichlet_points(&self) -> &[EdgePoint] {
        &self.dirichlet
    }

    pub fn curve_points(&self) -> impl Iterator<Item = (MultiIndex, &CurvePoint)> {
        self.cells.iter().flat_map(|c| c.curve.iter().map(move |q| (c.index, q)))
    }

    /// Reference area of the kept region.
    pub fn area(&self) -> f64 {
        self.cells.iter().flat_map(|c| c.bulk.iter()).map(|q| q.w).sum()
    }

    /// Reference length of the trim curve.
    pub fn curve_length(&self) -> f64 {
        self.curve_points().map(|(_, q)| q.w).sum()
    }

    /// Writes `cell i j status` for every active cell, then `ghost i j axis`
    /// for every ghost face.
    pub fn dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        for c in &self.cells {
            writeln!(out, "cell {} {} {}", c.index[0], c.index[1], c.status.label())?;
        }
        for f in &self.ghost {
            writeln!(out, "ghost {} {} {}", f.lower[0], f.lower[1], f.axis)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Keep, Trim};
    use std::f64::consts::PI;

    #[test]
    fn classification_examples() {
        let grid = KnotGrid::unit_square(8, 2).unwrap();
        let disc = Trim::quarter_disc(Keep::Inside);
        let outer = Trim::quarter_disc(Keep::Outside);
        let inner = classify_cells(&grid, &disc);
        let rest = classify_cells(&grid, &outer);
        assert_eq!(inner[grid.cell_id([2, 2, 0])], CellStatus::Inside);
        assert_eq!(inner[grid.cell_id([7, 0, 0])], CellStatus::Cut);
        assert_eq!(rest[grid.cell_id([7, 0, 0])], CellStatus::Cut);
        let active = inner.iter().chain(&rest).filter(|s| s.is_active()).count();
        assert!(active >= grid.num_cells());
    }

    #[test]
    fn areas_and_arc_length() {
        let grid = KnotGrid::unit_square(8, 2).unwrap();
        let opts = CutOptions::for_degree(2);
        let outer = ActiveMesh2D::new(grid.clone(), &Trim::quarter_disc(Keep::Outside), [true; 4], opts).unwrap();
        let inner = ActiveMesh2D::new(grid, &Trim::quarter_disc(Keep::Inside), [true; 4], opts).unwrap();
        let disc = PI * 0.81 / 4.0;
        assert!(((outer.area() - (1.0 - disc)) / (1.0 - disc)).abs() < 1e-8);
        assert!(((inner.area() - disc) / disc).abs() < 1e-8);
        assert!((outer.curve_length() - PI * 0.45).abs() < 1e-8);
        assert!((inner.curve_length() - PI * 0.45).abs() < 1e-8);
    }

    #[test]
    fn area_error_falls_with_depth() {
        let grid = KnotGrid::unit_square(8, 2).unwrap();
        let exact = 1.0 - PI * 0.81 / 4.0;
        let errors: Vec<f64> = (0..4)
            .map(|d| {
                let opts = CutOptions::for_degree(2).with_depth(d);
                let m = ActiveMesh2D::new(grid.clone(), &Trim::quarter_disc(Keep::Outside), [false; 4], opts).unwrap();
                (m.area() - exact).abs()
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "{errors:?}");
        }
    }

    #[test]
    fn polynomials_on_the_disc() {
        // int over the quarter disc of x^a y^b = R^(a+b+2)/(a+b+2) * int_0^{pi/2} cos^a sin^b
        let p = 2;
        let grid = KnotGrid::unit_square(16, p).unwrap();
        let m = ActiveMesh2D::new(grid, &Trim::quarter_disc(Keep::Inside), [false; 4], CutOptions::for_degree(p)).unwrap();
        let angular = |a: i32, b: i32| -> f64 {
            crate::quadrature::gauss_interval(30, 0.0, PI / 2.0)
                .iter()
                .map(|(t, w)| w * t.cos().powi(a) * t.sin().powi(b))
                .sum()
        };
        for a in 0..=(2 * p as i32 + 2) {
            for b in 0..=(2 * p as i32 + 2 - a) {
                let q: f64 = m
                    .cells()
                    .iter()
                    .flat_map(|c| c.bulk.iter())
                    .map(|q| q.w * q.x[0].powi(a) * q.x[1].powi(b))
                    .sum();
                let k = (a + b + 2) as f64;
                let exact = 0.9f64.powf(k) / k * angular(a, b);
                assert!(((q - exact) / exact).abs() < 1e-8, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn dirichlet_edges_are_clipped() {
        let grid = KnotGrid::unit_square(8, 1).unwrap();
        let opts = CutOptions::for_degree(1);
        let outer = ActiveMesh2D::new(grid.clone(), &Trim::quarter_disc(Keep::Outside), [true; 4], opts).unwrap();
        let inner = ActiveMesh2D::new(grid, &Trim::quarter_disc(Keep::Inside), [true; 4], opts).unwrap();
        let length = |m: &ActiveMesh2D, e: usize| -> f64 {
            m.dirichlet_points().iter().filter(|q| q.edge == e).map(|q| q.w).sum()
        };
        for (e, l) in [(0, 0.1), (1, 1.0), (2, 0.1), (3, 1.0)] {
            assert!((length(&outer, e) - l).abs() < 1e-13, "edge {e}");
        }
        for (e, l) in [(0, 0.9), (1, 0.0), (2, 0.9), (3, 0.0)] {
            assert!((length(&inner, e) - l).abs() < 1e-13, "edge {e}");
        }
    }

    #[test]
    fn ghost_faces_match_brute_force() {
        let grid = KnotGrid::unit_square(16, 2).unwrap();
        let status = classify_cells(&grid, &Trim::quarter_disc(Keep::Outside));
        let faces = ghost_faces(&grid, &status);
        let mut brute = Vec::new();
        for a in 0..grid.num_cells() {
            for b in 0..grid.num_cells() {
                let (ca, cb) = (grid.cell_index(a), grid.cell_index(b));
                let d: Vec<usize> = (0..2).map(|k| cb[k].wrapping_sub(ca[k])).collect();
                let axis = match d.as_slice() {
                    [1, 0] => 0,
                    [0, 1] => 1,
                    _ => continue,
                };
                let s = [status[a], status[b]];
                if s.iter().all(|x| x.is_active()) && s.contains(&CellStatus::Cut) {
                    brute.push(GridFace { lower: ca, axis });
                }
            }
        }
        brute.sort();
        let mut sorted = faces.clone();
        sorted.sort();
        assert_eq!(sorted, brute);
        for f in &faces {
            assert!(status[grid.cell_id(f.lower)] == CellStatus::Cut || status[grid.cell_id(f.upper())] == CellStatus::Cut);
        }
    }

    #[test]
    fn single_interior_cut_cell_has_four_faces() {
        let grid = KnotGrid::unit_square(5, 1).unwrap();
        let mut status = vec![CellStatus::Inside; grid.num_cells()];
        status[grid.cell_id([2, 2, 0])] = CellStatus::Cut;
        assert_eq!(ghost_faces(&grid, &status).len(), 4);
        let missed = Trim { radius: 0.1, keep: Keep::Outside };
        let far = KnotGrid::new(&[2.0, 2.0], 0.25, &[4, 4], 1).unwrap();
        assert!(ghost_faces(&far, &classify_cells(&far, &missed)).is_empty());
    }
}
