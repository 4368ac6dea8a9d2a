//! Block compressed-row storage for the condensed skeleton systems.
//!
//! Rows and columns are grouped into face blocks of size 2(p+1); the
//! smoothers relax exactly these blocks. Entries are stored row-major inside
//! each block.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Square block-CSR matrix with uniform block size.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    /// Scalar rows per block.
    pub block_size: usize,
    /// Number of block rows (= block columns).
    pub n_blocks: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Block entries, `block_size^2` scalars each, row-major.
    data: Vec<f64>,
}

impl BlockMatrix {
    /// Creates a zero matrix with the given sparsity pattern.
    /// `pattern[i]` must list the block columns of block row i in ascending
    /// order; it must include the diagonal.
    pub fn from_pattern(block_size: usize, pattern: &[Vec<usize>]) -> Self {
        let n_blocks = pattern.len();
        let mut row_ptr = Vec::with_capacity(n_blocks + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, cols) in pattern.iter().enumerate() {
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            debug_assert!(cols.binary_search(&i).is_ok(), "diagonal block missing");
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let data = vec![0.0; col_idx.len() * block_size * block_size];
        Self {
            block_size,
            n_blocks,
            row_ptr,
            col_idx,
            data,
        }
    }

    /// Identity matrix with only diagonal blocks; used by small sanity cases.
    pub fn identity(block_size: usize, n_blocks: usize) -> Self {
        let pattern: Vec<Vec<usize>> = (0..n_blocks).map(|i| vec![i]).collect();
        let mut m = Self::from_pattern(block_size, &pattern);
        for i in 0..n_blocks {
            let e = m.entry_index(i, i).unwrap();
            for k in 0..block_size {
                m.block_mut(e)[k * block_size + k] = 1.0;
            }
        }
        m
    }

    /// Scalar dimension.
    pub fn n(&self) -> usize {
        self.n_blocks * self.block_size
    }

    pub fn n_stored_blocks(&self) -> usize {
        self.col_idx.len()
    }

    fn entry_index(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }

    fn block_mut(&mut self, entry: usize) -> &mut [f64] {
        let k2 = self.block_size * self.block_size;
        &mut self.data[entry * k2..(entry + 1) * k2]
    }

    fn block(&self, entry: usize) -> &[f64] {
        let k2 = self.block_size * self.block_size;
        &self.data[entry * k2..(entry + 1) * k2]
    }

    /// Adds `value` to the scalar entry (block coordinates).
    pub fn add(&mut self, brow: usize, bcol: usize, i: usize, j: usize, value: f64) {
        let k = self.block_size;
        let e = self
            .entry_index(brow, bcol)
            .expect("entry outside sparsity pattern");
        self.block_mut(e)[i * k + j] += value;
    }

    /// Scalar entry accessor (zero outside the pattern).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let k = self.block_size;
        match self.entry_index(row / k, col / k) {
            Some(e) => self.block(e)[(row % k) * k + (col % k)],
            None => 0.0,
        }
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        let k = self.block_size;
        y.fill(0.0);
        for br in 0..self.n_blocks {
            for e in self.row_ptr[br]..self.row_ptr[br + 1] {
                let bc = self.col_idx[e];
                let blk = self.block(e);
                for i in 0..k {
                    let mut acc = 0.0;
                    for j in 0..k {
                        acc += blk[i * k + j] * x[bc * k + j];
                    }
                    y[br * k + i] += acc;
                }
            }
        }
    }

    /// r = b - A x.
    pub fn residual(&self, b: &DVector<f64>, x: &DVector<f64>, r: &mut DVector<f64>) {
        self.mul_vec(x, r);
        for i in 0..r.len() {
            r[i] = b[i] - r[i];
        }
    }

    /// Largest absolute asymmetry |A - A^T|; zero for exactly symmetric data.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in 0..self.n() {
            let br = row / self.block_size;
            for e in self.row_ptr[br]..self.row_ptr[br + 1] {
                let bc = self.col_idx[e];
                for j in 0..self.block_size {
                    let col = bc * self.block_size + j;
                    worst = worst.max((self.get(row, col) - self.get(col, row)).abs());
                }
            }
        }
        worst
    }

    /// Block columns stored in one block row.
    pub fn row_block_cols(&self, brow: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[brow]..self.row_ptr[brow + 1]]
    }

    /// Cholesky factors of all diagonal blocks.
    pub fn diagonal_block_factors(&self) -> Option<Vec<Cholesky<f64, Dyn>>> {
        let k = self.block_size;
        let mut out = Vec::with_capacity(self.n_blocks);
        for i in 0..self.n_blocks {
            let e = self.entry_index(i, i)?;
            let blk = self.block(e);
            let m = DMatrix::from_fn(k, k, |r, c| blk[r * k + c]);
            out.push(m.cholesky()?);
        }
        Some(out)
    }

    /// Dense copy, for direct factorizations of small systems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.block_size;
        let mut m = DMatrix::zeros(self.n(), self.n());
        for br in 0..self.n_blocks {
            for e in self.row_ptr[br]..self.row_ptr[br + 1] {
                let bc = self.col_idx[e];
                let blk = self.block(e);
                for i in 0..k {
                    for j in 0..k {
                        m[(br * k + i, bc * k + j)] = blk[i * k + j];
                    }
                }
            }
        }
        m
    }

    /// Writes the matrix in coordinate text form: a `rows cols nnz` header,
    /// then one 1-based `row col value` entry per stored scalar.
    pub fn write_coordinate(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        let k = self.block_size;
        writeln!(out, "{} {} {}", self.n(), self.n(), self.n_stored_blocks() * k * k)?;
        for br in 0..self.n_blocks {
            for i in 0..k {
                for e in self.row_ptr[br]..self.row_ptr[br + 1] {
                    let bc = self.col_idx[e];
                    let blk = self.block(e);
                    for j in 0..k {
                        writeln!(out, "{} {} {}", br * k + i + 1, bc * k + j + 1, blk[i * k + j])?;
                    }
                }
            }
        }
        Ok(())
    }

    /// One block Jacobi sweep: x += omega * D^{-1} (b - A x).
    pub fn jacobi_sweep(
        &self,
        factors: &[Cholesky<f64, Dyn>],
        omega: f64,
        x: &mut DVector<f64>,
        b: &DVector<f64>,
        scratch: &mut DVector<f64>,
    ) {
        let k = self.block_size;
        self.residual(b, x, scratch);
        for br in 0..self.n_blocks {
            let mut r = DVector::zeros(k);
            for i in 0..k {
                r[i] = scratch[br * k + i];
            }
            factors[br].solve_mut(&mut r);
            for i in 0..k {
                x[br * k + i] += omega * r[i];
            }
        }
    }

    /// One block Gauss-Seidel sweep over block rows, ascending when `forward`.
    pub fn gauss_seidel_sweep(
        &self,
        factors: &[Cholesky<f64, Dyn>],
        forward: bool,
        x: &mut DVector<f64>,
        b: &DVector<f64>,
    ) {
        let k = self.block_size;
        let mut r = DVector::zeros(k);
        let rows: Box<dyn Iterator<Item = usize>> = if forward {
            Box::new(0..self.n_blocks)
        } else {
            Box::new((0..self.n_blocks).rev())
        };
        for br in rows {
            for i in 0..k {
                r[i] = b[br * k + i];
            }
            for e in self.row_ptr[br]..self.row_ptr[br + 1] {
                let bc = self.col_idx[e];
                if bc == br {
                    continue;
                }
                let blk = self.block(e);
                for i in 0..k {
                    let mut acc = 0.0;
                    for j in 0..k {
                        acc += blk[i * k + j] * x[bc * k + j];
                    }
                    r[i] -= acc;
                }
            }
            factors[br].solve_mut(&mut r);
            for i in 0..k {
                x[br * k + i] = r[i];
            }
        }
    }
}
