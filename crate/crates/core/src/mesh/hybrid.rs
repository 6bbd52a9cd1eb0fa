use super::GridFace;
use crate::error::{Error, Result};
use crate::splines::{KnotGrid, MultiIndex};
use nalgebra::Vector3;
use std::collections::VecDeque;
use std::io::Write;

/// Background hexahedral grid around a set of sample curves, padded by
/// `margin + 1.5` cells so that the band never touches the grid boundary and
/// the plane of planar samples sits at mid-cell height.
pub fn background_grid(samples: &[&[Vector3<f64>]], h: f64, margin: usize, degree: usize) -> Result<KnotGrid> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in samples.iter().flat_map(|s| s.iter()) {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        return Err(Error::EmptySamples);
    }
    let pad = (margin as f64 + 1.5) * h;
    let origin = [lo[0] - pad, lo[1] - pad, lo[2] - pad];
    let counts: Vec<usize> = (0..3).map(|k| ((hi[k] - lo[k]) / h).ceil() as usize + 2 * margin + 3).collect();
    KnotGrid::new(&origin, h, &counts, degree)
}

/// Hexahedra of the background grid covering the artificial interface.
#[derive(Debug, Clone)]
pub struct HybridMesh3D {
    grid: KnotGrid,
    active: Vec<bool>,
    cells: Vec<MultiIndex>,
    faces: Vec<GridFace>,
}

fn face_neighbours(grid: &KnotGrid, c: MultiIndex) -> impl Iterator<Item = MultiIndex> + '_ {
    (0..3).flat_map(move |axis| {
        let mut out = [None, None];
        if c[axis] > 0 {
            let mut d = c;
            d[axis] -= 1;
            out[0] = Some(d);
        }
        let mut u = c;
        u[axis] += 1;
        if grid.contains_cell(u) {
            out[1] = Some(u);
        }
        out.into_iter().flatten()
    })
}

/// Marks the cells holding samples, dilates them by `margin` face layers and
/// keeps the face-connected components that contain samples.
pub fn extract_hybrid_mesh(background: &KnotGrid, samples: &[&[Vector3<f64>]], margin: usize) -> Result<HybridMesh3D> {
    let g = background;
    if g.dim() != 3 {
        return Err(Error::InvalidGrid("hybrid mesh needs a three-dimensional grid".into()));
    }
    let mut seeds = Vec::new();
    let mut marked = vec![false; g.num_cells()];
    for p in samples.iter().flat_map(|s| s.iter()) {
        let c = g.locate(p.as_slice()).ok_or(Error::GridTooSmall([p.x, p.y, p.z]))?;
        let id = g.cell_id(c);
        if !marked[id] {
            marked[id] = true;
            seeds.push(id);
        }
    }
    if seeds.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut front = seeds.clone();
    for _ in 0..margin {
        let mut next = Vec::new();
        for &id in &front {
            for n in face_neighbours(g, g.cell_index(id)) {
                let nid = g.cell_id(n);
                if !marked[nid] {
                    marked[nid] = true;
                    next.push(nid);
                }
            }
        }
        front = next;
    }
    let mut active = vec![false; g.num_cells()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in &seeds {
        if !active[s] {
            active[s] = true;
            queue.push_back(s);
        }
        while let Some(id) = queue.pop_front() {
            for n in face_neighbours(g, g.cell_index(id)) {
                let nid = g.cell_id(n);
                if marked[nid] && !active[nid] {
                    active[nid] = true;
                    queue.push_back(nid);
                }
            }
        }
    }
    let cells: Vec<MultiIndex> = (0..active.len()).filter(|&i| active[i]).map(|i| g.cell_index(i)).collect();
    let mut faces = Vec::new();
    for &c in &cells {
        for axis in 0..3 {
            let mut u = c;
            u[axis] += 1;
            if g.contains_cell(u) && active[g.cell_id(u)] {
                faces.push(GridFace { lower: c, axis });
            }
        }
    }
    Ok(HybridMesh3D { grid: g.clone(), active, cells, faces })
}

impl HybridMesh3D {
    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    /// Active hexahedra in cell-id order.
    pub fn cells(&self) -> &[MultiIndex] {
        &self.cells
    }

    /// Every interior face once, oriented from `lower` to `upper`.
    pub fn faces(&self) -> &[GridFace] {
        &self.faces
    }

    pub fn contains(&self, c: MultiIndex) -> bool {
        self.grid.contains_cell(c) && self.active[self.grid.cell_id(c)]
    }

    /// Active cell holding `x`, if any.
    pub fn locate(&self, x: &Vector3<f64>) -> Option<MultiIndex> {
        self.grid.locate(x.as_slice()).filter(|&c| self.active[self.grid.cell_id(c)])
    }

    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * self.grid.cell_size().powi(3)
    }

    /// Number of face-connected components of the active set.
    pub fn components(&self) -> usize {
        let g = &self.grid;
        let mut seen = vec![false; g.num_cells()];
        let mut count = 0;
        for &c in &self.cells {
            let id = g.cell_id(c);
            if seen[id] {
                continue;
            }
            count += 1;
            seen[id] = true;
            let mut stack = vec![id];
            while let Some(i) = stack.pop() {
                for n in face_neighbours(g, g.cell_index(i)) {
                    let nid = g.cell_id(n);
                    if self.active[nid] && !seen[nid] {
                        seen[nid] = true;
                        stack.push(nid);
                    }
                }
            }
        }
        count
    }

    /// Writes `hex i j k` for every active cell, then `face i j k axis` for
    /// every interior face.
    pub fn dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        for c in &self.cells {
            writeln!(out, "hex {} {} {}", c[0], c[1], c[2])?;
        }
        for f in &self.faces {
            writeln!(out, "face {} {} {} {}", f.lower[0], f.lower[1], f.lower[2], f.axis)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn circle(radius: f64, n: usize) -> Vec<Vector3<f64>> {
        (0..=n)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_2 * k as f64 / n as f64;
                Vector3::new(radius * t.cos(), radius * t.sin(), 0.0)
            })
            .collect()
    }

    /// Mark and dilate by scanning every cell against every marked cell.
    fn brute_force(g: &KnotGrid, samples: &[Vector3<f64>], margin: usize) -> BTreeSet<MultiIndex> {
        let marked: BTreeSet<MultiIndex> = samples
            .iter()
            .map(|p| {
                let mut c = [0; 3];
                for k in 0..3 {
                    c[k] = ((p[k] - g.origin()[k]) / g.cell_size()).floor() as usize;
                }
                c
            })
            .collect();
        (0..g.num_cells())
            .map(|i| g.cell_index(i))
            .filter(|c| {
                marked.iter().any(|m| (0..3).map(|k| c[k].abs_diff(m[k])).sum::<usize>() <= margin)
            })
            .collect()
    }

    #[test]
    fn single_sample_cell() {
        let g = KnotGrid::new(&[-1.0, -1.0, -1.0], 0.25, &[8, 8, 8], 1).unwrap();
        let x = Vector3::new(0.3, -0.6, 0.01);
        let mesh = extract_hybrid_mesh(&g, &[&[x]], 0).unwrap();
        assert_eq!(mesh.cells(), &[[5, 1, 4]]);
        let far = Vector3::new(3.0, 0.0, 0.0);
        assert!(matches!(extract_hybrid_mesh(&g, &[&[far]], 1), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn circle_band_is_connected_and_covers() {
        let s = circle(0.9, 100);
        let g = background_grid(&[&s], 0.25, 1, 2).unwrap();
        let mesh = extract_hybrid_mesh(&g, &[&s], 1).unwrap();
        assert_eq!(mesh.components(), 1);
        for w in s.windows(2) {
            assert!(mesh.locate(&((w[0] + w[1]) * 0.5)).is_some());
        }
        // z = 0 sits in the middle of a cell layer
        let z = (0.0 - g.origin()[2]) / g.cell_size();
        assert!((z - z.floor() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn concentric_circles_match_brute_force() {
        let h = 0.25;
        let (a, b) = (circle(0.9, 100), circle(0.9 + 0.1, 100));
        let g = background_grid(&[&a, &b], h, 1, 1).unwrap();
        let mesh = extract_hybrid_mesh(&g, &[&a, &b], 1).unwrap();
        let both: Vec<Vector3<f64>> = a.iter().chain(&b).copied().collect();
        let expected = brute_force(&g, &both, 1);
        let got: BTreeSet<MultiIndex> = mesh.cells().iter().copied().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn faces_listed_once() {
        let s = circle(0.9, 60);
        let g = background_grid(&[&s], 0.2, 1, 1).unwrap();
        let mesh = extract_hybrid_mesh(&g, &[&s], 1).unwrap();
        let set: BTreeSet<GridFace> = mesh.faces().iter().copied().collect();
        assert_eq!(set.len(), mesh.faces().len());
        let mut brute = 0;
        for &c in mesh.cells() {
            for &d in mesh.cells() {
                if (0..3).map(|k| c[k].abs_diff(d[k])).sum::<usize>() == 1 {
                    brute += 1;
                }
            }
        }
        assert_eq!(2 * mesh.faces().len(), brute);
        assert!(mesh.faces().iter().all(|f| mesh.contains(f.lower) && mesh.contains(f.upper())));
    }
}
