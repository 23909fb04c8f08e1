use super::tensor::Tensor;

/// Row-normalized adjacency in CSR form: `(A·X)[v] = mean of X[u] over neighbors u of v`.
///
/// Rows without neighbors produce zeros. The transpose is kept alongside for backward.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMean {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    // transpose, same layout
    t_row_ptr: Vec<usize>,
    t_cols: Vec<usize>,
    t_weights: Vec<f64>,
}

impl SparseMean {
    /// Build from per-row neighbor lists; lists are sorted and deduplicated.
    pub fn from_neighbors(n_cols: usize, mut neighbors: Vec<Vec<usize>>) -> Self {
        let n_rows = neighbors.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
            let w = if list.is_empty() { 0.0 } else { 1.0 / list.len() as f64 };
            for &c in list.iter() {
                debug_assert!(c < n_cols);
                cols.push(c);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut t_lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
        for r in 0..n_rows {
            for k in row_ptr[r]..row_ptr[r + 1] {
                t_lists[cols[k]].push((r, weights[k]));
            }
        }
        let mut t_row_ptr = vec![0];
        let mut t_cols = Vec::with_capacity(cols.len());
        let mut t_weights = Vec::with_capacity(cols.len());
        for list in t_lists {
            for (c, w) in list {
                t_cols.push(c);
                t_weights.push(w);
            }
            t_row_ptr.push(t_cols.len());
        }
        SparseMean { n_rows, n_cols, row_ptr, cols, weights, t_row_ptr, t_cols, t_weights }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn neighbors(&self, row: usize) -> &[usize] {
        &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]]
    }

    pub fn apply(&self, x: &Tensor) -> Tensor {
        debug_assert_eq!(x.rows(), self.n_cols);
        spmm(self.n_rows, &self.row_ptr, &self.cols, &self.weights, x)
    }

    pub fn apply_transpose(&self, x: &Tensor) -> Tensor {
        debug_assert_eq!(x.rows(), self.n_rows);
        spmm(self.n_cols, &self.t_row_ptr, &self.t_cols, &self.t_weights, x)
    }
}

fn spmm(n_rows: usize, row_ptr: &[usize], cols: &[usize], weights: &[f64], x: &Tensor) -> Tensor {
    let d = x.cols();
    let mut out = vec![0.0; n_rows * d];
    for r in 0..n_rows {
        let orow = &mut out[r * d..(r + 1) * d];
        for k in row_ptr[r]..row_ptr[r + 1] {
            let w = weights[k];
            let xrow = x.row(cols[k]);
            for (o, v) in orow.iter_mut().zip(xrow) {
                *o += w * v;
            }
        }
    }
    Tensor { shape: vec![n_rows, d], data: out }
}
