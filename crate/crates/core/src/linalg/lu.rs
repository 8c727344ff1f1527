//! Sparse LU factorisation `P A Q = L U`.
//!
//! Left-looking (Gilbert-Peierls) factorisation: each column of `L` and `U`
//! is obtained from a sparse triangular solve whose nonzero pattern is the
//! depth-first reach of the column in the graph of `L`. The column ordering
//! `Q` is a nested-dissection ordering of `A + A^T`; rows are chosen by
//! threshold partial pivoting with preference for the diagonal of the
//! symmetrically permuted matrix, so the fill-reducing ordering is kept
//! whenever the diagonal is acceptable.

use crate::error::{Error, Result};
use crate::linalg::csr::CsrMatrix;
use crate::linalg::ordering::{nested_dissection, symmetric_adjacency};
use crate::scalar::Scalar;

/// Relative size a diagonal pivot must have against the column maximum.
const PIVOT_THRESHOLD: f64 = 0.1;

/// Compressed sparse column storage used internally by the factorisation.
#[derive(Debug, Clone)]
struct Csc<S> {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct SparseLu<S> {
    n: usize,
    /// Unit lower factor, diagonal stored first in each column.
    l: Csc<S>,
    /// Upper factor, diagonal stored last in each column.
    u: Csc<S>,
    /// `pinv[i]` = pivot position of original row `i`.
    pinv: Vec<usize>,
    /// `q[k]` = original column at position `k`.
    q: Vec<usize>,
}

struct Workspace<S> {
    x: Vec<S>,
    xi: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    marked: Vec<bool>,
}

impl<S: Scalar> SparseLu<S> {
    pub fn new(a: &CsrMatrix<S>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let adj = symmetric_adjacency(n, a.row_ptr(), a.col_idx());
        let q = nested_dissection(&adj);
        Self::with_ordering(a, q)
    }

    /// Factorises with a caller-supplied column ordering.
    pub fn with_ordering(a: &CsrMatrix<S>, q: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        // CSC of A is the CSR of A^T.
        let at = a.transpose();
        let acol = Csc {
            col_ptr: at.row_ptr().to_vec(),
            row_idx: at.col_idx().to_vec(),
            values: at.values().to_vec(),
        };
        let guess = 4 * a.nnz() + n;
        let mut l = Csc {
            col_ptr: Vec::with_capacity(n + 1),
            row_idx: Vec::with_capacity(guess),
            values: Vec::with_capacity(guess),
        };
        let mut u = Csc {
            col_ptr: Vec::with_capacity(n + 1),
            row_idx: Vec::with_capacity(guess),
            values: Vec::with_capacity(guess),
        };
        let mut pinv = vec![usize::MAX; n];
        let mut ws = Workspace {
            x: vec![S::zero(); n],
            xi: vec![0; n],
            stack: vec![0; n],
            pstack: vec![0; n],
            marked: vec![false; n],
        };
        let tol = S::of(PIVOT_THRESHOLD);

        for k in 0..n {
            l.col_ptr.push(l.row_idx.len());
            u.col_ptr.push(u.row_idx.len());
            let col = q[k];
            let top = spsolve(&l, &acol, col, &pinv, &mut ws, n);

            let mut ipiv = usize::MAX;
            let mut amax = -S::one();
            for &i in &ws.xi[top..n] {
                if pinv[i] == usize::MAX {
                    let t = ws.x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u.row_idx.push(pinv[i]);
                    u.values.push(ws.x[i]);
                }
            }
            if ipiv == usize::MAX || !(amax > S::zero()) || !amax.is_finite() {
                return Err(Error::SingularMatrix(k));
            }
            if pinv[col] == usize::MAX && ws.x[col].abs() >= amax * tol {
                ipiv = col;
            }
            let pivot = ws.x[ipiv];
            u.row_idx.push(k);
            u.values.push(pivot);
            pinv[ipiv] = k;
            l.row_idx.push(ipiv);
            l.values.push(S::one());
            for p in top..n {
                let i = ws.xi[p];
                if pinv[i] == usize::MAX {
                    l.row_idx.push(i);
                    l.values.push(ws.x[i] / pivot);
                }
                ws.x[i] = S::zero();
            }
        }
        l.col_ptr.push(l.row_idx.len());
        u.col_ptr.push(u.row_idx.len());
        for r in l.row_idx.iter_mut() {
            *r = pinv[*r];
        }
        Ok(SparseLu { n, l, u, pinv, q })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros stored in `L + U`.
    pub fn factor_nnz(&self) -> usize {
        self.l.row_idx.len() + self.u.row_idx.len()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        self.solve_into(b, &mut y);
        y
    }

    pub fn solve_into(&self, b: &[S], x: &mut [S]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = vec![S::zero(); n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        // L y = P b
        for j in 0..n {
            let yj = y[j];
            if yj.is_zero() {
                continue;
            }
            for p in self.l.col_ptr[j] + 1..self.l.col_ptr[j + 1] {
                y[self.l.row_idx[p]] -= self.l.values[p] * yj;
            }
        }
        // U z = y
        for j in (0..n).rev() {
            let last = self.u.col_ptr[j + 1] - 1;
            y[j] /= self.u.values[last];
            let yj = y[j];
            if yj.is_zero() {
                continue;
            }
            for p in self.u.col_ptr[j]..last {
                y[self.u.row_idx[p]] -= self.u.values[p] * yj;
            }
        }
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
    }
}

/// Solves `L x = A(:, col)` with `x` scattered in `ws.x`; returns `top` such
/// that `ws.xi[top..n]` holds the nonzero pattern in topological order.
fn spsolve<S: Scalar>(
    l: &Csc<S>,
    a: &Csc<S>,
    col: usize,
    pinv: &[usize],
    ws: &mut Workspace<S>,
    n: usize,
) -> usize {
    let top = reach(l, a, col, pinv, ws, n);
    for p in top..n {
        ws.x[ws.xi[p]] = S::zero();
    }
    for p in a.col_ptr[col]..a.col_ptr[col + 1] {
        ws.x[a.row_idx[p]] = a.values[p];
    }
    for px in top..n {
        let j = ws.xi[px];
        let jcol = pinv[j];
        if jcol == usize::MAX {
            continue;
        }
        let xj = ws.x[j];
        if xj.is_zero() {
            continue;
        }
        // Unit diagonal is stored first.
        for p in l.col_ptr[jcol] + 1..l.col_ptr[jcol + 1] {
            ws.x[l.row_idx[p]] -= l.values[p] * xj;
        }
    }
    top
}

fn reach<S: Scalar>(
    l: &Csc<S>,
    a: &Csc<S>,
    col: usize,
    pinv: &[usize],
    ws: &mut Workspace<S>,
    n: usize,
) -> usize {
    let mut top = n;
    for p in a.col_ptr[col]..a.col_ptr[col + 1] {
        let i = a.row_idx[p];
        if !ws.marked[i] {
            top = dfs(i, l, top, pinv, ws);
        }
    }
    for p in top..n {
        ws.marked[ws.xi[p]] = false;
    }
    top
}

fn dfs<S: Scalar>(
    start: usize,
    l: &Csc<S>,
    mut top: usize,
    pinv: &[usize],
    ws: &mut Workspace<S>,
) -> usize {
    let mut head = 0usize;
    ws.stack[0] = start;
    loop {
        let j = ws.stack[head];
        let jcol = pinv[j];
        let (lo, hi) = if jcol == usize::MAX {
            (0, 0)
        } else {
            // Columns of L finished so far; col_ptr[jcol + 1] exists since
            // jcol < current column.
            (l.col_ptr[jcol], l.col_ptr[jcol + 1])
        };
        if !ws.marked[j] {
            ws.marked[j] = true;
            ws.pstack[head] = lo;
        }
        let mut done = true;
        let mut p = ws.pstack[head];
        while p < hi {
            let i = l.row_idx[p];
            if !ws.marked[i] {
                ws.pstack[head] = p + 1;
                head += 1;
                ws.stack[head] = i;
                done = false;
                break;
            }
            p += 1;
        }
        if done {
            top -= 1;
            ws.xi[top] = j;
            if head == 0 {
                return top;
            }
            head -= 1;
        }
    }
}
