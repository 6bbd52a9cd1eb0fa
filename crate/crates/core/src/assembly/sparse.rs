/// Upper-triangle triplets of a symmetric matrix. Every entry `(i, j, v)`
/// with `i != j` stands for both `A[i][j]` and `A[j][i]`, so the assembled
/// matrix is symmetric bit for bit.
#[derive(Debug, Clone, Default)]
pub struct SymmetricTriplets {
    entries: Vec<(usize, usize, f64)>,
    compacted: usize,
}

const COMPACT_AT: usize = 1 << 21;

impl SymmetricTriplets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i.min(j), i.max(j), v));
        if self.entries.len() - self.compacted > COMPACT_AT {
            self.compact();
        }
    }

    /// Adds the upper triangle of a dense local matrix stored row-major.
    pub fn add_local(&mut self, dofs: &[usize], local: &[f64]) {
        let n = dofs.len();
        debug_assert_eq!(local.len(), n * n);
        for a in 0..n {
            for b in a..n {
                let v = local[a * n + b];
                if v != 0.0 {
                    self.add(dofs[a], dofs[b], v);
                }
            }
        }
    }

    /// Adds another set with all indices shifted by `offset`.
    pub fn append_shifted(&mut self, other: &SymmetricTriplets, offset: usize) {
        for &(i, j, v) in &other.entries {
            self.add(i + offset, j + offset, v);
        }
    }

    /// Sorts by position, keeping insertion order among duplicates so the sums
    /// do not depend on anything but the order of `add` calls.
    fn compact(&mut self) {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len() / 2);
        for &(i, j, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        self.entries = out;
        self.compacted = self.entries.len();
    }

    pub fn to_csr(&self, n: usize) -> CsrMatrix {
        let mut merged = self.clone();
        merged.compact();
        let mut full: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * merged.entries.len());
        for &(i, j, v) in &merged.entries {
            assert!(j < n, "entry ({i}, {j}) outside a {n} x {n} matrix");
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        full.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(full.len());
        let mut vals = Vec::with_capacity(full.len());
        for &(i, j, v) in &full {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }
}

/// Square sparse matrix in compressed row storage with both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A[i][j] - A[j][i]|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets().fold(0.0, |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }

    /// Submatrix on `start..start + len` in both indices.
    pub fn block(&self, start: usize, len: usize) -> CsrMatrix {
        let mut t = SymmetricTriplets::new();
        for i in start..start + len {
            for (j, v) in self.row(i) {
                if j >= i && j < start + len {
                    t.add(i - start, j - start, v);
                }
            }
        }
        t.to_csr(len)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}
