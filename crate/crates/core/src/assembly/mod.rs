//! Bilinear form and load vector of the hybridized Nitsche method.
//!
//! Unknowns are ordered as `[hybrid | patch 1 | patch 2]`. Patch integrals
//! are pulled back to the reference square with the metric `G = DF^T DF` of
//! the patch map; hybrid integrals live in physical space.

mod sparse;

pub use sparse::{CsrMatrix, SymmetricTriplets};

use crate::error::{Error, Result};
use crate::geometry::{Manufactured, MetricAt};
use crate::mesh::GridFace;
use crate::problem::{Discretization, HybridDiscretization, PatchDiscretization};
use crate::quadrature::{gauss_box, gauss_interval};
use crate::splines::{BasisEval, MultiIndex, SplineSpace};
use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

/// Penalty and stabilization constants of the method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParameters {
    pub degree: usize,
    /// Nitsche penalty.
    pub beta: f64,
    /// Hybrid stabilization strength.
    pub tau0: f64,
    /// Ghost penalty strength on the patches.
    pub tau_patch: f64,
    /// Exponent of `h^-alpha` in the hybrid stabilization.
    pub alpha: f64,
    /// Patch cell size in reference coordinates.
    pub h: f64,
    /// Hybrid cell size.
    pub h0: f64,
}

impl MethodParameters {
    /// `beta = 25 p^2`, `tau0 = tau_i = 0.01`, `alpha = 2`.
    pub fn standard(degree: usize, h: f64, h0: f64) -> Self {
        Self { degree, beta: 25.0 * (degree * degree) as f64, tau0: 0.01, tau_patch: 0.01, alpha: 2.0, h, h0 }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("beta", self.beta), ("tau0", self.tau0), ("tau_patch", self.tau_patch), ("h", self.h), ("h0", self.h0)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {} must be finite", self.alpha)));
        }
        if !(1..=crate::splines::MAX_DEGREE).contains(&self.degree) {
            return Err(Error::InvalidParameter(format!("degree {} unsupported", self.degree)));
        }
        Ok(())
    }
}

/// Offsets of the hybrid block and the two patch blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub sizes: [usize; 3],
    pub offsets: [usize; 3],
}

impl BlockLayout {
    pub fn new(sizes: [usize; 3]) -> Self {
        Self { sizes, offsets: [0, sizes[0], sizes[0] + sizes[1]] }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block] + self.sizes[block]
    }
}

/// Dense local matrix over a list of global dofs; only the upper triangle
/// is accumulated.
struct LocalMatrix {
    dofs: Vec<usize>,
    vals: Vec<f64>,
}

impl LocalMatrix {
    fn new(dofs: Vec<usize>) -> Self {
        let n = dofs.len();
        Self { dofs, vals: vec![0.0; n * n] }
    }

    /// Adds `entry(a, b)` for `a <= b`.
    fn add_sym<F: Fn(usize, usize) -> f64>(&mut self, entry: F) {
        let n = self.dofs.len();
        for a in 0..n {
            for b in a..n {
                self.vals[a * n + b] += entry(a, b);
            }
        }
    }

    fn flush(&self, out: &mut SymmetricTriplets) {
        out.add_local(&self.dofs, &self.vals);
    }
}

fn index_of(dofs: &[usize], d: usize) -> usize {
    dofs.iter().position(|&x| x == d).expect("dof in local list")
}

/// Sorted union of the dofs of two evaluations and, per requested
/// derivative order, the jump `lower - upper` of the `l`-th derivative along
/// `axis` on that union.
fn jumps(lower: &BasisEval, upper: &BasisEval, axis: usize, orders: &[usize]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut dofs: Vec<usize> = lower.dofs().iter().chain(upper.dofs()).copied().collect();
    dofs.sort_unstable();
    dofs.dedup();
    let jumps = orders
        .iter()
        .map(|&l| {
            let mut j = vec![0.0; dofs.len()];
            for (b, v) in lower.axis_derivatives(axis, l).into_iter().enumerate() {
                j[index_of(&dofs, lower.dofs()[b])] += v;
            }
            for (b, v) in upper.axis_derivatives(axis, l).into_iter().enumerate() {
                j[index_of(&dofs, upper.dofs()[b])] -= v;
            }
            j
        })
        .collect();
    (dofs, jumps)
}

/// Tensor Gauss points on a grid face, `order` per tangential direction.
fn face_points(space: &SplineSpace, face: &GridFace, order: usize) -> Vec<([f64; 3], f64)> {
    let g = space.grid();
    let (lo, hi) = g.cell_bounds(face.lower);
    let mut pts = vec![([0.0; 3], 1.0)];
    pts[0].0[face.axis] = hi[face.axis];
    for k in (0..g.dim()).filter(|&k| k != face.axis) {
        let rule = gauss_interval(order, lo[k], hi[k]);
        pts = pts
            .iter()
            .flat_map(|&(x, w)| {
                rule.iter().map(move |&(t, wt)| {
                    let mut y = x;
                    y[k] = t;
                    (y, w * wt)
                })
            })
            .collect();
    }
    pts
}

/// `sum_F sum_{l=1..p} scale(l) ([d_n^l v], [d_n^l w])_F` over a face set,
/// in the space's own numbering.
pub fn face_jump_form<S: Fn(usize) -> f64 + Sync>(space: &SplineSpace, faces: &[GridFace], scale: S) -> Result<SymmetricTriplets> {
    let p = space.degree();
    let orders: Vec<usize> = (1..=p).collect();
    let locals = faces
        .par_iter()
        .map(|f| {
            let mut local: Option<LocalMatrix> = None;
            for (x, w) in face_points(space, f, p + 1) {
                let bl = space.eval_basis(f.lower, &x, p)?;
                let bu = space.eval_basis(f.upper(), &x, p)?;
                let (dofs, js) = jumps(&bl, &bu, f.axis, &orders);
                let m = local.get_or_insert_with(|| LocalMatrix::new(dofs));
                for (j, &l) in js.iter().zip(&orders) {
                    let c = w * scale(l);
                    m.add_sym(|a, b| c * j[a] * j[b]);
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SymmetricTriplets::new();
    for m in locals.iter().flatten() {
        m.flush(&mut out);
    }
    Ok(out)
}

/// Ghost penalty `tau_i sum_l h^(2l-1) ([d_n^l v], [d_n^l w])` on the faces
/// touching cut cells.
pub fn assemble_ghost_penalty(patch: &PatchDiscretization, params: &MethodParameters) -> Result<SymmetricTriplets> {
    let (tau, h) = (params.tau_patch, params.h);
    face_jump_form(&patch.space, patch.mesh.ghost_faces(), |l| tau * h.powi(2 * l as i32 - 1))
}

/// Stiffness `(|G|^(1/2) G^-1 grad v, grad w)` in patch numbering.
pub fn assemble_patch_bulk(patch: &PatchDiscretization) -> Result<SymmetricTriplets> {
    let space = &patch.space;
    let map = &patch.geometry.map;
    let locals = patch
        .mesh
        .cells()
        .par_iter()
        .map(|cell| {
            let mut m: Option<LocalMatrix> = None;
            for q in &cell.bulk {
                let b = space.eval_basis(cell.index, &q.x, 1)?;
                let d = MetricAt::new(map, q.x).diffusion();
                let grads: Vec<Vector2<f64>> = (0..b.len())
                    .map(|k| {
                        let g = b.gradient(k);
                        Vector2::new(g[0], g[1])
                    })
                    .collect();
                let flux: Vec<Vector2<f64>> = grads.iter().map(|g| d * g).collect();
                let m = m.get_or_insert_with(|| LocalMatrix::new(b.dofs().to_vec()));
                m.add_sym(|a, c| q.w * flux[a].dot(&grads[c]));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SymmetricTriplets::new();
    for m in locals.iter().flatten() {
        m.flush(&mut out);
    }
    Ok(out)
}

/// Source term evaluated at physical points.
pub type SourceFn<'a> = &'a (dyn Fn(&Vector3<f64>) -> Result<f64> + Sync);

/// Load `(f, v)` with the surface measure, in patch numbering.
pub fn assemble_load(patch: &PatchDiscretization, f: SourceFn) -> Result<Vec<f64>> {
    let space = &patch.space;
    let map = &patch.geometry.map;
    let locals = patch
        .mesh
        .cells()
        .par_iter()
        .map(|cell| {
            let mut local: Vec<(usize, f64)> = Vec::new();
            for q in &cell.bulk {
                let b = space.eval_basis(cell.index, &q.x, 0)?;
                let fw = f(&map.eval(q.x))? * MetricAt::new(map, q.x).sqrt_det * q.w;
                if local.is_empty() {
                    local = b.dofs().iter().map(|&d| (d, 0.0)).collect();
                }
                for (k, l) in local.iter_mut().enumerate() {
                    l.1 += fw * b.value(k);
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rhs = vec![0.0; space.num_dofs()];
    for (d, v) in locals.iter().flatten() {
        rhs[*d] += v;
    }
    Ok(rhs)
}

/// Reference flux coefficients `n . |G|^(1/2) G^-1 grad phi`, the basis values
/// and the Nitsche penalty weight at a boundary point.
fn boundary_terms(b: &BasisEval, metric: &MetricAt, normal: [f64; 2], params: &MethodParameters) -> (Vec<f64>, Vec<f64>, f64) {
    let n = Vector2::new(normal[0], normal[1]);
    let dn = metric.diffusion().transpose() * n;
    let flux = (0..b.len())
        .map(|k| {
            let g = b.gradient(k);
            dn.x * g[0] + dn.y * g[1]
        })
        .collect();
    let gamma = params.beta / params.h * metric.sqrt_det * n.dot(&(metric.inverse * n));
    (flux, b.values(), gamma)
}

/// Hybrid basis at a physical point, or the covering error.
pub fn eval_hybrid(hybrid: &HybridDiscretization, y: &Vector3<f64>, max_order: usize) -> Result<BasisEval> {
    let cell = hybrid.mesh.locate(y).ok_or(Error::HybridNotCovering([y.x, y.y, y.z]))?;
    hybrid.space.eval_basis(cell, y.as_slice(), max_order)
}

/// Nitsche coupling of a patch to the hybrid variable on the trim curve:
/// `-(n.grad v, [w]) - ([v], n.grad w) + beta/h ([v], [w])` with
/// `[v] = v_i - v_0 o F_i`, in global numbering.
pub fn assemble_patch_form(
    patch: &PatchDiscretization,
    hybrid: &HybridDiscretization,
    params: &MethodParameters,
    patch_offset: usize,
    hybrid_offset: usize,
) -> Result<(SymmetricTriplets, usize)> {
    let space = &patch.space;
    let map = &patch.geometry.map;
    let cut: Vec<_> = patch.mesh.cells().iter().filter(|c| !c.curve.is_empty()).collect();
    let locals = cut
        .par_iter()
        .map(|cell| {
            let mut points = Vec::with_capacity(cell.curve.len());
            let mut dofs: Vec<usize> = Vec::new();
            for q in &cell.curve {
                let b = space.eval_basis(cell.index, &q.x, 1)?;
                let metric = MetricAt::new(map, q.x);
                let (flux, vals, gamma) = boundary_terms(&b, &metric, q.normal, params);
                let hb = eval_hybrid(hybrid, &map.eval(q.x), 0)?;
                if dofs.is_empty() {
                    dofs.extend(b.dofs().iter().map(|d| d + patch_offset));
                }
                dofs.extend(hb.dofs().iter().map(|d| d + hybrid_offset));
                points.push((q.w, flux, vals, gamma, hb));
            }
            let np = (space.degree() + 1).pow(2);
            let mut hyb: Vec<usize> = dofs.split_off(np.min(dofs.len()));
            hyb.sort_unstable();
            hyb.dedup();
            dofs.extend(hyb);
            let mut m = LocalMatrix::new(dofs);
            let n = m.dofs.len();
            for (w, flux, vals, gamma, hb) in &points {
                let mut jump = vec![0.0; n];
                let mut fl = vec![0.0; n];
                jump[..np].copy_from_slice(vals);
                fl[..np].copy_from_slice(flux);
                for (k, v) in hb.values().into_iter().enumerate() {
                    jump[index_of(&m.dofs, hb.dofs()[k] + hybrid_offset)] -= v;
                }
                m.add_sym(|a, c| w * (gamma * jump[a] * jump[c] - fl[a] * jump[c] - jump[a] * fl[c]));
            }
            Ok((m, points.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SymmetricTriplets::new();
    let mut count = 0;
    for (m, k) in &locals {
        m.flush(&mut out);
        count += k;
    }
    Ok((out, count))
}

/// Weak Dirichlet conditions `u = g` on the kept parts of the flagged square
/// edges, in patch numbering.
pub fn assemble_dirichlet(
    patch: &PatchDiscretization,
    data: &Manufactured,
    params: &MethodParameters,
) -> Result<(SymmetricTriplets, Vec<f64>)> {
    let space = &patch.space;
    let map = &patch.geometry.map;
    let mut out = SymmetricTriplets::new();
    let mut rhs = vec![0.0; space.num_dofs()];
    for q in patch.mesh.dirichlet_points() {
        let b = space.eval_basis(q.cell, &q.x, 1)?;
        let metric = MetricAt::new(map, q.x);
        let (flux, vals, gamma) = boundary_terms(&b, &metric, q.normal, params);
        let mut m = LocalMatrix::new(b.dofs().to_vec());
        m.add_sym(|a, c| q.w * (gamma * vals[a] * vals[c] - flux[a] * vals[c] - vals[a] * flux[c]));
        m.flush(&mut out);
        let g = data.value(&map.eval(q.x))?;
        if g != 0.0 {
            for (k, &d) in b.dofs().iter().enumerate() {
                rhs[d] += q.w * g * (gamma * vals[k] - flux[k]);
            }
        }
    }
    Ok((out, rhs))
}

/// Hybrid stabilization `tau0 h^-alpha [(P grad v, P grad w) + sum_l h^(2l+1)
/// ([d_n^l v], [d_n^l w])]`, in hybrid numbering.
pub fn assemble_hybrid_stab(hybrid: &HybridDiscretization, params: &MethodParameters) -> Result<SymmetricTriplets> {
    let space = &hybrid.space;
    let p = space.degree();
    let h = params.h0;
    let scale = params.tau0 * h.powf(-params.alpha);
    let locals = hybrid
        .mesh
        .cells()
        .par_iter()
        .map(|&c: &MultiIndex| {
            let (lo, hi) = space.grid().cell_bounds(c);
            let mut m: Option<LocalMatrix> = None;
            for (x, w) in gauss_box(p + 2, lo, hi) {
                let b = space.eval_basis(c, &x, 1)?;
                let proj = hybrid.projector.eval(c, &Vector3::from(x)).expect("projector on every hybrid cell");
                let pg: Vec<Vector3<f64>> = (0..b.len()).map(|k| proj * Vector3::from(b.gradient(k))).collect();
                let m = m.get_or_insert_with(|| LocalMatrix::new(b.dofs().to_vec()));
                m.add_sym(|a, d| scale * w * pg[a].dot(&pg[d]));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SymmetricTriplets::new();
    for m in locals.iter().flatten() {
        m.flush(&mut out);
    }
    let faces = face_jump_form(space, hybrid.mesh.faces(), |l| scale * h.powi(2 * l as i32 + 1))?;
    out.append_shifted(&faces, 0);
    Ok(out)
}

/// Global system together with the stabilization blocks reused by the
/// energy norm.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: BlockLayout,
    pub params: MethodParameters,
    /// Hybrid stabilization in hybrid numbering.
    pub hybrid_stab: CsrMatrix,
    /// Ghost penalties in patch numbering.
    pub ghost: [CsrMatrix; 2],
    /// Trim-curve quadrature points coupled to the hybrid field.
    pub coupling_points: usize,
}

pub fn assemble_system(disc: &Discretization) -> Result<AssembledSystem> {
    let params = disc.setup.params;
    params.validate()?;
    let data = &disc.setup.data;
    let layout = BlockLayout::new(disc.block_sizes());
    let mut all = SymmetricTriplets::new();
    let mut rhs = vec![0.0; layout.total()];
    let stab = assemble_hybrid_stab(&disc.hybrid, &params)?;
    all.append_shifted(&stab, layout.offsets[0]);
    let mut ghost = Vec::with_capacity(2);
    let mut coupling_points = 0;
    for (i, patch) in disc.patches.iter().enumerate() {
        let off = layout.offsets[i + 1];
        all.append_shifted(&assemble_patch_bulk(patch)?, off);
        let load = assemble_load(patch, &|x| data.source(x))?;
        let (coupling, count) = assemble_patch_form(patch, &disc.hybrid, &params, off, layout.offsets[0])?;
        all.append_shifted(&coupling, 0);
        coupling_points += count;
        let gp = assemble_ghost_penalty(patch, &params)?;
        all.append_shifted(&gp, off);
        ghost.push(gp.to_csr(layout.sizes[i + 1]));
        let (bc, bc_rhs) = assemble_dirichlet(patch, data, &params)?;
        all.append_shifted(&bc, off);
        for (k, v) in load.iter().zip(&bc_rhs).enumerate() {
            rhs[off + k] += v.0 + v.1;
        }
    }
    Ok(AssembledSystem {
        matrix: all.to_csr(layout.total()),
        rhs,
        layout,
        params,
        hybrid_stab: stab.to_csr(layout.sizes[0]),
        ghost: ghost.try_into().expect("two patches"),
        coupling_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Keep, PatchGeometry, SurfaceMap, Trim};
    use crate::mesh::{ActiveMesh2D, CutOptions};
    use crate::splines::KnotGrid;

    fn whole_square(n: usize, p: usize) -> PatchDiscretization {
        let geometry = PatchGeometry {
            name: "square",
            map: SurfaceMap::Planar { shift: Vector3::zeros() },
            trim: Trim { radius: 10.0, keep: Keep::Inside },
            dirichlet: [true; 4],
        };
        let grid = KnotGrid::unit_square(n, p).unwrap();
        let mesh = ActiveMesh2D::new(grid.clone(), &geometry.trim, geometry.dirichlet, CutOptions::for_degree(p)).unwrap();
        let space = SplineSpace::new(grid, &mesh.active_indices()).unwrap();
        PatchDiscretization { geometry, mesh, space }
    }

    #[test]
    fn bilinear_element_stiffness() {
        let patch = whole_square(1, 1);
        let t = assemble_patch_bulk(&patch).unwrap();
        let k = t.to_csr(4).to_dense();
        // dofs in tensor order (0,0), (1,0), (0,1), (1,1)
        let d = 2.0 / 3.0;
        let expected = [
            [d, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 3.0],
            [-1.0 / 6.0, d, -1.0 / 3.0, -1.0 / 6.0],
            [-1.0 / 6.0, -1.0 / 3.0, d, -1.0 / 6.0],
            [-1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, d],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn dirichlet_zero_data_gives_zero_load() {
        let patch = whole_square(4, 2);
        let params = MethodParameters::standard(2, 0.25, 0.25);
        let (t, rhs) = assemble_dirichlet(&patch, &Manufactured::Constant(0.0), &params).unwrap();
        assert!(rhs.iter().all(|&v| v == 0.0));
        assert_eq!(t.to_csr(patch.space.num_dofs()).asymmetry(), 0.0);
    }

    #[test]
    fn load_of_simple_sources() {
        let patch = whole_square(4, 2);
        let zero = assemble_load(&patch, &|_| Ok(0.0)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let one: f64 = assemble_load(&patch, &|_| Ok(1.0)).unwrap().iter().sum();
        assert!((one - 1.0).abs() < 1e-14);
    }
}
