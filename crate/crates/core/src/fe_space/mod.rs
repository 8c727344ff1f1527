//! Continuous Lagrange finite element spaces.

pub mod dofmap;
pub mod element;
pub mod quadrature;

pub use dofmap::DofMap;
pub use element::{ElementFamily, ElementSpec, ReferenceElement, Tabulation};
pub use quadrature::{quadrature, QuadratureRule};

use crate::assembly::assemble_mass;
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::scalar::Scalar;
use crate::solver::{solve_sparse, LinearSolverKind};

/// Lagrange interpolant: the coefficient of every dof (boundary included) is
/// `f` at its node.
pub fn interpolate<S: Scalar>(dofs: &DofMap, f: impl Fn(Point) -> f64) -> Result<Vec<S>> {
    dofs.coords
        .iter()
        .map(|&p| {
            let v = f(p);
            if v.is_finite() {
                Ok(S::of(v))
            } else {
                Err(Error::NonFinite { value: v, at: p })
            }
        })
        .collect()
}

/// Value of the finite element function at reference point `r` of cell `c`.
pub fn evaluate_in_cell<S: Scalar>(dofs: &DofMap, coeffs: &[S], c: usize, r: Point) -> S {
    let phi = dofs.element.eval_values(r);
    dofs.cell_dofs(c)
        .iter()
        .zip(&phi)
        .map(|(&g, &v)| coeffs[g] * S::of(v))
        .sum()
}

/// Physical gradient at reference point `r` of cell `c`.
pub fn gradient_in_cell<S: Scalar>(dofs: &DofMap, coeffs: &[S], c: usize, r: Point) -> [S; 2] {
    let map = dofs.mesh().affine_map(c);
    let grads = dofs.element.eval_gradients(r);
    let mut g = [S::zero(); 2];
    for (&d, &gr) in dofs.cell_dofs(c).iter().zip(&grads) {
        let gp = map.push_gradient(gr);
        g[0] += coeffs[d] * S::of(gp[0]);
        g[1] += coeffs[d] * S::of(gp[1]);
    }
    g
}

/// `sum_i c_i phi_i(p)`.
pub fn evaluate<S: Scalar>(dofs: &DofMap, coeffs: &[S], p: Point) -> Result<S> {
    check_len(dofs, coeffs)?;
    let (c, r) = dofs.mesh().locate_point(p)?;
    Ok(evaluate_in_cell(dofs, coeffs, c, r))
}

/// Value and gradient at `p`.
pub fn evaluate_with_gradient<S: Scalar>(
    dofs: &DofMap,
    coeffs: &[S],
    p: Point,
) -> Result<(S, [S; 2])> {
    check_len(dofs, coeffs)?;
    let (c, r) = dofs.mesh().locate_point(p)?;
    Ok((
        evaluate_in_cell(dofs, coeffs, c, r),
        gradient_in_cell(dofs, coeffs, c, r),
    ))
}

/// `L^2` projection onto the full finite element space: solves `M c = b`,
/// `b_i = (f, phi_i)` with a quadrature of degree `2k + 2`.
pub fn l2_project<S: Scalar>(dofs: &DofMap, f: impl Fn(Point) -> f64) -> Result<Vec<S>> {
    let mass = assemble_mass::<S>(dofs)?;
    let rhs = load_vector::<S>(dofs, &f)?;
    solve_sparse(&mass, &rhs, LinearSolverKind::Direct)
}

/// `b_i = (f, phi_i)` over all dofs.
pub fn load_vector<S: Scalar>(dofs: &DofMap, f: &dyn Fn(Point) -> f64) -> Result<Vec<S>> {
    let mesh = dofs.mesh();
    let rule = quadrature(mesh.family.cell_kind(), dofs.spec().quadrature_degree())?;
    let tab = Tabulation::new(&dofs.element, &rule.points);
    let mut b = vec![S::zero(); dofs.num_dofs()];
    for c in 0..mesh.cells.len() {
        let map = mesh.affine_map(c);
        let det = map.det.abs();
        for (q, (r, w)) in rule.iter().enumerate() {
            let x = map.to_physical(r);
            let fv = f(x);
            if !fv.is_finite() {
                return Err(Error::NonFinite { value: fv, at: x });
            }
            let phi = tab.values_at(q);
            for (&g, &v) in dofs.cell_dofs(c).iter().zip(phi) {
                b[g] += S::of(w * det * fv * v);
            }
        }
    }
    Ok(b)
}

fn check_len<S>(dofs: &DofMap, coeffs: &[S]) -> Result<()> {
    if coeffs.len() != dofs.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.num_dofs(),
            got: coeffs.len(),
        });
    }
    Ok(())
}
