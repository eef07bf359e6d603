//! Compressed-row sparse matrices over real or complex scalars, plus the
//! deterministic vector kernels shared by the iterative solvers.
//!
//! All parallel reductions use a fixed chunk size and combine partial sums
//! in index order, so results are bit-reproducible regardless of thread count.

use num_complex::{Complex64, ComplexFloat};
use num_traits::Zero;
use rayon::prelude::*;

/// Scalar types the solvers operate on (f64 and Complex64).
pub trait Scalar:
    ComplexFloat<Real = f64>
    + Zero
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::Mul<f64, Output = Self>
    + Send
    + Sync
    + std::fmt::Debug
    + 'static
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

const PAR_CHUNK: usize = 8192;
const PAR_THRESHOLD: usize = 32768;

/// Inner product conj(a)·b with a fixed reduction order.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    if a.len() < PAR_THRESHOLD {
        let mut s = T::zero();
        for (x, y) in a.iter().zip(b) {
            s += x.conj() * *y;
        }
        s
    } else {
        let partials: Vec<T> = a
            .par_chunks(PAR_CHUNK)
            .zip(b.par_chunks(PAR_CHUNK))
            .map(|(ca, cb)| {
                let mut s = T::zero();
                for (x, y) in ca.iter().zip(cb) {
                    s += x.conj() * *y;
                }
                s
            })
            .collect();
        let mut s = T::zero();
        for p in partials {
            s += p;
        }
        s
    }
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    dot(a, a).re().max(0.0).sqrt()
}

/// y += alpha * x
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    assert_eq!(x.len(), y.len());
    if x.len() < PAR_THRESHOLD {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * *xi;
        }
    } else {
        y.par_chunks_mut(PAR_CHUNK)
            .zip(x.par_chunks(PAR_CHUNK))
            .for_each(|(cy, cx)| {
                for (yi, xi) in cy.iter_mut().zip(cx) {
                    *yi += alpha * *xi;
                }
            });
    }
}

pub fn scale<T: Scalar>(alpha: f64, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

/// Coordinate-format accumulator used during assembly.
#[derive(Debug, Clone)]
pub struct CooMatrix<T> {
    pub dim: usize,
    pub entries: Vec<(u32, u32, T)>,
}

impl<T: Scalar> CooMatrix<T> {
    pub fn new(dim: usize) -> Self {
        CooMatrix {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row as u32, col as u32, value));
    }

    /// Sort, merge duplicates, and compress.
    pub fn into_csr(mut self) -> CsrMatrix<T> {
        self.entries
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Square sparse matrix in compressed-row storage.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x. Rows are independent, so parallelism keeps determinism.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let body = |row: usize, yi: &mut T| {
            let mut s = T::zero();
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                s += self.vals[idx] * x[self.cols[idx] as usize];
            }
            *yi = s;
        };
        if self.dim < 4096 {
            for (row, yi) in y.iter_mut().enumerate() {
                body(row, yi);
            }
        } else {
            y.par_iter_mut().enumerate().for_each(|(row, yi)| {
                body(row, yi);
            });
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        self.apply(x, &mut y);
        y
    }

    /// max_{ij} |A_ij - conj(A_ji)|, by walking the matrix against its transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let t = self.transpose_conj();
        let mut worst = 0.0f64;
        for row in 0..self.dim {
            let a = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
            let av = &self.vals[self.row_ptr[row]..self.row_ptr[row + 1]];
            let b = &t.cols[t.row_ptr[row]..t.row_ptr[row + 1]];
            let bv = &t.vals[t.row_ptr[row]..t.row_ptr[row + 1]];
            let (mut i, mut j) = (0usize, 0usize);
            while i < a.len() || j < b.len() {
                match (a.get(i), b.get(j)) {
                    (Some(&ca), Some(&cb)) if ca == cb => {
                        worst = worst.max((av[i] - bv[j]).abs());
                        i += 1;
                        j += 1;
                    }
                    (Some(&ca), Some(&cb)) if ca < cb => {
                        worst = worst.max(av[i].abs());
                        i += 1;
                    }
                    (Some(_), Some(_)) => {
                        worst = worst.max(bv[j].abs());
                        j += 1;
                    }
                    (Some(_), None) => {
                        worst = worst.max(av[i].abs());
                        i += 1;
                    }
                    (None, Some(_)) => {
                        worst = worst.max(bv[j].abs());
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        worst
    }

    fn transpose_conj(&self) -> CsrMatrix<T> {
        let mut coo = CooMatrix::new(self.dim);
        for row in 0..self.dim {
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                coo.push(self.cols[idx] as usize, row, self.vals[idx].conj());
            }
        }
        coo.into_csr()
    }
}

impl CsrMatrix<Complex64> {
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for row in 0..self.dim {
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                m[(row, self.cols[idx] as usize)] += self.vals[idx];
            }
        }
        m
    }

    /// Coordinate text export: one `row col re im` line per stored entry.
    pub fn write_coordinate<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.dim, self.dim, self.nnz())?;
        for row in 0..self.dim {
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                let v = self.vals[idx];
                writeln!(w, "{} {} {:.17e} {:.17e}", row, self.cols[idx], v.re, v.im)?;
            }
        }
        Ok(())
    }
}
