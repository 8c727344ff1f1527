//! BiCGSTAB with an ILU(0) preconditioner, the iterative fallback behind
//! the direct solver.

use crate::error::{Error, Result};
use crate::linalg::csr::CsrMatrix;
use crate::scalar::{dot, norm2, Scalar};

/// Incomplete LU factorisation on the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0<S> {
    lu: CsrMatrix<S>,
    diag_pos: Vec<usize>,
}

impl<S: Scalar> Ilu0<S> {
    pub fn new(a: &CsrMatrix<S>) -> Result<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag_pos[i] = p;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::SingularMatrix(i));
            }
        }
        let mut pos = vec![usize::MAX; n];
        let vals = lu.values_mut();
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag_pos[i] {
                let k = col_idx[p];
                let piv = vals[diag_pos[k]];
                if piv.is_zero() {
                    return Err(Error::SingularMatrix(k));
                }
                let f = vals[p] / piv;
                vals[p] = f;
                for pk in diag_pos[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[pk];
                    if pos[j] != usize::MAX {
                        let t = vals[pk];
                        vals[pos[j]] -= f * t;
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag_pos })
    }

    pub fn apply(&self, r: &[S], z: &mut [S]) {
        let n = r.len();
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        for i in 0..n {
            let mut s = r[i];
            for p in rp[i]..self.diag_pos[i] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag_pos[i] + 1..rp[i + 1] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s / v[self.diag_pos[i]];
        }
    }
}

/// Right-preconditioned BiCGSTAB. Returns the solution and iteration count.
pub fn bicgstab<S: Scalar>(
    a: &CsrMatrix<S>,
    prec: &Ilu0<S>,
    b: &[S],
    x0: Option<&[S]>,
    rel_tol: S,
    max_iter: usize,
) -> Result<(Vec<S>, usize)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![S::zero(); n], |v| v.to_vec());
    if bnorm.is_zero() {
        return Ok((vec![S::zero(); n], 0));
    }
    let mut r: Vec<S> = a
        .mul_vec(&x)
        .iter()
        .zip(b)
        .map(|(&ax, &bi)| bi - ax)
        .collect();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (S::one(), S::one(), S::one());
    let mut v = vec![S::zero(); n];
    let mut p = vec![S::zero(); n];
    let mut phat = vec![S::zero(); n];
    let mut shat = vec![S::zero(); n];
    let mut t = vec![S::zero(); n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.is_zero() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        prec.apply(&p, &mut phat);
        a.mul_vec_into(&phat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<S> = r.iter().zip(&v).map(|(&ri, &vi)| ri - alpha * vi).collect();
        if norm2(&s) <= rel_tol * bnorm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, it));
        }
        prec.apply(&s, &mut shat);
        a.mul_vec_into(&shat, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = norm2(&r) / bnorm;
        if res <= rel_tol {
            return Ok((x, it));
        }
        if !res.is_finite() || omega.is_zero() {
            return Err(Error::SolverBreakdown {
                residual: res.to_f64_lossy(),
                iterations: it,
            });
        }
    }
    let res = norm2(
        &a.mul_vec(&x)
            .iter()
            .zip(b)
            .map(|(&ax, &bi)| bi - ax)
            .collect::<Vec<_>>(),
    ) / bnorm;
    if res <= rel_tol {
        Ok((x, max_iter))
    } else {
        Err(Error::SolverBreakdown {
            residual: res.to_f64_lossy(),
            iterations: max_iter,
        })
    }
}
