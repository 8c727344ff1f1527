//! Linear solves, the damped fixed-point iteration for the clipped problem
//! and a brute-force active-set oracle for small systems.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{bicgstab, dense_solve, CsrMatrix, Ilu0, SparseLu};
use crate::projection::{clip, complement, AdmissibleBox};
use crate::scalar::{norm2, norm_inf, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverKind {
    /// Sparse LU with a nested-dissection ordering.
    #[default]
    Direct,
    /// ILU(0)-preconditioned BiCGSTAB.
    Iterative,
}

impl FromStr for LinearSolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(LinearSolverKind::Direct),
            "iterative" => Ok(LinearSolverKind::Iterative),
            _ => Err(Error::InvalidArgument(format!(
                "unknown linear solver `{s}`"
            ))),
        }
    }
}

/// Required relative residual `max(1e-12, 1e3 eps)`.
fn residual_tolerance<S: Scalar>() -> S {
    S::of(1e-12).max(S::of(1e3) * S::epsilon())
}

enum Backend<S> {
    Direct(SparseLu<S>),
    Iterative(Ilu0<S>),
}

/// A matrix prepared once for repeated solves.
pub struct LinearSolver<S> {
    matrix: CsrMatrix<S>,
    backend: Backend<S>,
}

impl<S: Scalar> LinearSolver<S> {
    pub fn new(matrix: &CsrMatrix<S>, kind: LinearSolverKind) -> Result<Self> {
        let backend = match kind {
            LinearSolverKind::Direct => Backend::Direct(SparseLu::new(matrix)?),
            LinearSolverKind::Iterative => Backend::Iterative(Ilu0::new(matrix)?),
        };
        Ok(LinearSolver {
            matrix: matrix.clone(),
            backend,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn residual(&self, x: &[S], b: &[S]) -> Vec<S> {
        let ax = self.matrix.mul_vec(x);
        b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect()
    }

    /// Solves `A x = b` to relative residual `max(1e-12, 1e3 eps)`, using
    /// iterative refinement on the direct path. A residual at the level of
    /// the backward error `eps ||A|| ||x||` is also accepted.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let bnorm = norm2(b);
        if bnorm.is_zero() {
            return Ok(vec![S::zero(); n]);
        }
        let tol = residual_tolerance::<S>();
        let anorm = self
            .matrix
            .values()
            .iter()
            .fold(S::zero(), |m, v| m.max(v.abs()));
        match &self.backend {
            Backend::Direct(lu) => {
                let mut x = lu.solve(b);
                let mut res = norm2(&self.residual(&x, b));
                for _ in 0..5 {
                    let backward =
                        S::of(10.0 * n as f64) * S::epsilon() * anorm * norm2(&x).max(S::one());
                    if res <= tol * bnorm || res <= backward {
                        return Ok(x);
                    }
                    let r = self.residual(&x, b);
                    let dx = lu.solve(&r);
                    let cand: Vec<S> = x.iter().zip(&dx).map(|(&a, &d)| a + d).collect();
                    let cres = norm2(&self.residual(&cand, b));
                    if !(cres < res) {
                        break;
                    }
                    x = cand;
                    res = cres;
                }
                if res <= tol * bnorm {
                    Ok(x)
                } else {
                    Err(Error::SolverBreakdown {
                        residual: (res / bnorm).to_f64_lossy(),
                        iterations: 0,
                    })
                }
            }
            Backend::Iterative(ilu) => {
                let (x, _) = bicgstab(&self.matrix, ilu, b, None, tol, 20 * n.max(100))?;
                Ok(x)
            }
        }
    }
}

/// One-shot sparse solve.
pub fn solve_sparse<S: Scalar>(
    a: &CsrMatrix<S>,
    b: &[S],
    kind: LinearSolverKind,
) -> Result<Vec<S>> {
    LinearSolver::new(a, kind)?.solve(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointConfig {
    /// Damping in `(0, 1]`.
    pub omega: f64,
    /// Stopping threshold on the `L^2` norm of the increment.
    pub tol: f64,
    pub max_iter: usize,
    pub linear_solver: LinearSolverKind,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            omega: 1.0,
            tol: 1e-8,
            max_iter: 3000,
            linear_solver: LinearSolverKind::Direct,
        }
    }
}

impl FixedPointConfig {
    pub fn with_omega(omega: f64) -> Self {
        FixedPointConfig {
            omega,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<S> {
    /// Final iterate, `u = u_plus + u_minus`.
    pub u: Vec<S>,
    pub u_plus: Vec<S>,
    pub u_minus: Vec<S>,
    /// Fixed-point steps taken after the initial linear solve.
    pub iterations: usize,
    pub converged: bool,
    /// `L^2` norm of each increment.
    pub increments: Vec<f64>,
}

impl<S: Scalar> SolveReport<S> {
    /// Iteration count, or `NC` when the iteration did not converge.
    pub fn iterations_label(&self) -> String {
        if self.converged {
            self.iterations.to_string()
        } else {
            "NC".to_string()
        }
    }
}

/// Linear stabilised solution of the reduced system.
pub fn cip_initial<S: Scalar>(solver: &LinearSolver<S>, rhs: &[S]) -> Result<Vec<S>> {
    solver.solve(rhs)
}

/// `F - A v_plus - sigma v_minus`.
pub fn fixed_point_residual<S: Scalar>(
    a: &CsrMatrix<S>,
    sigma: &[S],
    rhs: &[S],
    v_plus: &[S],
    v_minus: &[S],
) -> Vec<S> {
    let ap = a.mul_vec(v_plus);
    (0..rhs.len())
        .map(|i| rhs[i] - ap[i] - sigma[i] * v_minus[i])
        .collect()
}

/// Damped fixed-point iteration
/// `A u^{n+1} = A u^n + omega (F - A (u^n)^+ - diag(sigma) (u^n)^-)`
/// started from the linear solution `A u^0 = F`. The matrix is factorised
/// once. Stops when `sqrt(d^T M d) <= tol` for the increment `d`.
/// Non-convergence is reported, not an error.
pub fn richardson<S: Scalar>(
    solver: &LinearSolver<S>,
    sigma: &[S],
    rhs: &[S],
    mass: &CsrMatrix<S>,
    bx: AdmissibleBox,
    cfg: &FixedPointConfig,
) -> Result<SolveReport<S>> {
    cfg.validate()?;
    let n = solver.dim();
    for len in [sigma.len(), rhs.len(), mass.nrows()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    if let Some(i) = sigma.iter().position(|s| !(*s > S::zero())) {
        return Err(Error::ZeroWeight(i));
    }
    let a = solver.matrix();
    let omega = S::of(cfg.omega);
    let mut u = cip_initial(solver, rhs)?;
    let mut increments = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let up = clip(&u, bx);
        let um = complement(&u, &up);
        let r = fixed_point_residual(a, sigma, rhs, &up, &um);
        if r.iter().any(|x| !x.is_finite()) {
            // Blow-up counts as non-convergence; keep the last finite iterate.
            break;
        }
        // The same matrix already solved the initial system, so a failure here
        // comes from an overflowing right-hand side.
        let Ok(mut d) = solver.solve(&r) else { break };
        d.iter_mut().for_each(|x| *x *= omega);
        let inc = mass.bilinear(&d, &d).max(S::zero()).sqrt().to_f64_lossy();
        if !inc.is_finite() {
            break;
        }
        for (ui, di) in u.iter_mut().zip(&d) {
            *ui += *di;
        }
        iterations += 1;
        increments.push(inc);
        if inc <= cfg.tol {
            converged = true;
            break;
        }
    }
    let u_plus = clip(&u, bx);
    let u_minus = complement(&u, &u_plus);
    Ok(SolveReport {
        u,
        u_plus,
        u_minus,
        iterations,
        converged,
        increments,
    })
}

/// Largest system the enumeration oracle accepts.
pub const ORACLE_MAX_UNKNOWNS: usize = 12;

/// Sign tolerance on the residual of active constraints.
const ORACLE_SIGN_TOL: f64 = 1e-10;

/// Solves the variational inequality `find u in [0, kappa]^m with
/// (A u - F) . (v - u) >= 0 for all v in [0, kappa]^m` by enumerating all
/// `3^m` lower/upper/free assignments.
pub fn vi_oracle<S: Scalar>(a: &CsrMatrix<S>, f: &[S], bx: AdmissibleBox) -> Result<Vec<S>> {
    let m = a.nrows();
    if m > ORACLE_MAX_UNKNOWNS {
        return Err(Error::OracleTooLarge {
            max: ORACLE_MAX_UNKNOWNS,
            got: m,
        });
    }
    if f.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: f.len(),
        });
    }
    let dense = a.to_dense();
    let kappa = S::of(bx.upper);
    let tol = S::of(ORACLE_SIGN_TOL);
    let total = 3usize.pow(m as u32);
    let mut state = vec![0u8; m];
    let mut accepted: Option<Vec<S>> = None;
    for code in 0..total {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        // 0 = lower active, 1 = upper active, 2 = free.
        let mut u: Vec<S> = state
            .iter()
            .map(|&s| if s == 1 { kappa } else { S::zero() })
            .collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            let k = free.len();
            let mut sub = vec![S::zero(); k * k];
            let mut rhs = vec![S::zero(); k];
            for (r, &i) in free.iter().enumerate() {
                rhs[r] = f[i];
                for j in 0..m {
                    if state[j] != 2 {
                        rhs[r] -= dense[i][j] * u[j];
                    }
                }
                for (cc, &j) in free.iter().enumerate() {
                    sub[r * k + cc] = dense[i][j];
                }
            }
            let Ok(x) = dense_solve(k, sub, &rhs) else {
                continue;
            };
            if x.iter().any(|&v| !(v > S::zero() && v < kappa)) {
                continue;
            }
            for (&i, &v) in free.iter().zip(&x) {
                u[i] = v;
            }
        }
        let w: Vec<S> = (0..m)
            .map(|i| (0..m).map(|j| dense[i][j] * u[j]).sum::<S>() - f[i])
            .collect();
        let ok = (0..m).all(|i| match state[i] {
            0 => w[i] >= -tol,
            1 => w[i] <= tol,
            _ => true,
        });
        if !ok {
            continue;
        }
        match &accepted {
            None => accepted = Some(u),
            Some(prev) => {
                let diff = norm_inf(
                    &prev
                        .iter()
                        .zip(&u)
                        .map(|(&p, &q)| p - q)
                        .collect::<Vec<_>>(),
                );
                if diff > S::of(1e-9) {
                    return Err(Error::OracleNotUnique(diff.to_f64_lossy()));
                }
            }
        }
    }
    accepted.ok_or(Error::OracleNoSolution)
}

/// `u_minus_i = (F - A u_plus)_i / sigma_i`.
pub fn recover_complement<S: Scalar>(
    a: &CsrMatrix<S>,
    sigma: &[S],
    f: &[S],
    u_plus: &[S],
) -> Result<Vec<S>> {
    let au = a.mul_vec(u_plus);
    (0..f.len())
        .map(|i| {
            if sigma[i].is_zero() {
                Err(Error::ZeroWeight(i))
            } else {
                Ok((f[i] - au[i]) / sigma[i])
            }
        })
        .collect()
}
