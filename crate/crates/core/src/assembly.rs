//! Bilinear and linear forms: Galerkin operator, interior penalty, mass
//! matrix, diagonal complement weights and Dirichlet reduction.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fe_space::quadrature::{interval_rule, quadrature};
use crate::fe_space::{DofMap, Tabulation};
use crate::linalg::{CsrMatrix, SparsityBuilder};
use crate::mesh::{MeshFunction, Point};
use crate::scalar::Scalar;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
pub type BoundaryPredicate = Arc<dyn Fn(Point) -> bool + Send + Sync>;

/// `-div(D grad u) + beta . grad u + mu u = f` on the unit square with
/// `u = g` on the Dirichlet part and a homogeneous natural condition on the
/// rest of the boundary. Solutions are sought in `[0, kappa]`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub diffusion: TensorField,
    /// Must be divergence free.
    pub convection: VectorField,
    pub reaction: f64,
    pub source: ScalarField,
    pub boundary_value: ScalarField,
    pub kappa: f64,
    /// Whether a boundary point belongs to the Dirichlet part.
    pub dirichlet: BoundaryPredicate,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("reaction", &self.reaction)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.reaction.is_finite() && self.reaction >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reaction coefficient must be finite and nonnegative, got {}",
                self.reaction
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "upper bound must be finite and nonnegative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Smallest eigenvalue of the diffusion tensor at `p`.
    pub fn diffusion_min_eigenvalue(&self, p: Point) -> f64 {
        let d = (self.diffusion)(p);
        let (a, b, c) = (d[0][0], 0.5 * (d[0][1] + d[1][0]), d[1][1]);
        0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CipVariant {
    /// `gamma ||beta||_F h_F^2 [grad u].[grad v]`.
    Normal,
    /// `gamma_beta h_F^2 / ||beta||_F [beta.grad u][beta.grad v]`.
    Upwind,
    None,
}

/// Length entering the penalty as `h_F^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyLength {
    /// Length of the facet itself.
    Facet,
    /// Mean diameter of the two cells sharing the facet.
    #[default]
    CellMean,
}

impl std::str::FromStr for PenaltyLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facet" => Ok(PenaltyLength::Facet),
            "cell" | "cell-mean" => Ok(PenaltyLength::CellMean),
            _ => Err(Error::InvalidArgument(format!(
                "unknown penalty length '{s}', expected facet or cell"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabConfig {
    pub variant: CipVariant,
    pub gamma: f64,
    pub gamma_beta: f64,
    /// Scaling of the diagonal complement form.
    pub alpha: f64,
    pub length: PenaltyLength,
}

impl StabConfig {
    pub fn normal(gamma: f64) -> Self {
        StabConfig {
            variant: CipVariant::Normal,
            gamma,
            gamma_beta: 0.0,
            alpha: 1.0,
            length: PenaltyLength::default(),
        }
    }

    pub fn upwind(gamma_beta: f64) -> Self {
        StabConfig {
            variant: CipVariant::Upwind,
            gamma: 0.0,
            gamma_beta,
            alpha: 1.0,
            length: PenaltyLength::default(),
        }
    }

    pub fn with_length(mut self, length: PenaltyLength) -> Self {
        self.length = length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("gamma_beta", self.gamma_beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn finite(v: f64, at: Point) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { value: v, at })
    }
}

fn cell_pattern(dofs: &DofMap) -> SparsityBuilder {
    let n = dofs.num_dofs();
    let mut b = SparsityBuilder::new(n, n);
    for c in 0..dofs.mesh().cells.len() {
        b.add_group(dofs.cell_dofs(c));
    }
    b
}

fn scatter<S: Scalar>(m: &mut CsrMatrix<S>, idx: &[usize], local: &[f64]) {
    let n = idx.len();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            let v = local[a * n + b];
            if v != 0.0 {
                m.add_to(i, j, S::of(v));
            }
        }
    }
}

/// Galerkin matrix `A_ij = (D grad phi_j, grad phi_i) + (beta . grad phi_j,
/// phi_i) + mu (phi_j, phi_i)` and load vector `F_i = (f, phi_i)` over all
/// dofs, boundary rows included.
pub fn assemble_galerkin<S: Scalar>(
    spec: &ProblemSpec,
    dofs: &DofMap,
) -> Result<(CsrMatrix<S>, Vec<S>)> {
    let mesh = dofs.mesh();
    let rule = quadrature(mesh.family.cell_kind(), dofs.spec().quadrature_degree())?;
    let tab = Tabulation::new(&dofs.element, &rule.points);
    let nl = dofs.dofs_per_cell();
    let mut a: CsrMatrix<S> = cell_pattern(dofs).build();
    let mut f = vec![S::zero(); dofs.num_dofs()];
    let mut local = vec![0.0; nl * nl];
    let mut grads = vec![[0.0; 2]; nl];
    for c in 0..mesh.cells.len() {
        let map = mesh.affine_map(c);
        let det = map.det.abs();
        local.iter_mut().for_each(|v| *v = 0.0);
        let idx = dofs.cell_dofs(c);
        for (q, (r, w)) in rule.iter().enumerate() {
            let x = map.to_physical(r);
            let d = (spec.diffusion)(x);
            let beta = (spec.convection)(x);
            for v in [d[0][0], d[0][1], d[1][0], d[1][1], beta[0], beta[1]] {
                finite(v, x)?;
            }
            let fx = finite((spec.source)(x), x)?;
            let wq = w * det;
            let phi = tab.values_at(q);
            for (g, &gr) in grads.iter_mut().zip(tab.gradients_at(q)) {
                *g = map.push_gradient(gr);
            }
            for i in 0..nl {
                f[idx[i]] += S::of(wq * fx * phi[i]);
                for j in 0..nl {
                    let gj = grads[j];
                    let dgj = [
                        d[0][0] * gj[0] + d[0][1] * gj[1],
                        d[1][0] * gj[0] + d[1][1] * gj[1],
                    ];
                    let gi = grads[i];
                    let diff = dgj[0] * gi[0] + dgj[1] * gi[1];
                    let conv = (beta[0] * gj[0] + beta[1] * gj[1]) * phi[i];
                    let reac = spec.reaction * phi[j] * phi[i];
                    local[i * nl + j] += wq * (diff + conv + reac);
                }
            }
        }
        scatter(&mut a, idx, &local);
    }
    Ok((a, f))
}

/// Consistent mass matrix over all dofs.
pub fn assemble_mass<S: Scalar>(dofs: &DofMap) -> Result<CsrMatrix<S>> {
    let mesh = dofs.mesh();
    let rule = quadrature(mesh.family.cell_kind(), dofs.spec().quadrature_degree())?;
    let tab = Tabulation::new(&dofs.element, &rule.points);
    let nl = dofs.dofs_per_cell();
    let mut m: CsrMatrix<S> = cell_pattern(dofs).build();
    let mut local = vec![0.0; nl * nl];
    for c in 0..mesh.cells.len() {
        let det = mesh.affine_map(c).det.abs();
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, (_, w)) in rule.iter().enumerate() {
            let phi = tab.values_at(q);
            for i in 0..nl {
                for j in 0..nl {
                    local[i * nl + j] += w * det * phi[i] * phi[j];
                }
            }
        }
        scatter(&mut m, dofs.cell_dofs(c), &local);
    }
    Ok(m)
}

/// Union of the dofs of the two cells sharing an interior facet, with the
/// local positions in each cell (`usize::MAX` when absent).
fn facet_patch(dofs: &DofMap, left: usize, right: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut patch: Vec<usize> = dofs.cell_dofs(left).to_vec();
    for &d in dofs.cell_dofs(right) {
        if !patch.contains(&d) {
            patch.push(d);
        }
    }
    let pos = |c: usize| -> Vec<usize> {
        patch
            .iter()
            .map(|d| {
                dofs.cell_dofs(c)
                    .iter()
                    .position(|e| e == d)
                    .unwrap_or(usize::MAX)
            })
            .collect()
    };
    let (pl, pr) = (pos(left), pos(right));
    (patch, pl, pr)
}

/// Interior penalty on gradient jumps across interior facets.
///
/// A facet where `beta` vanishes at every quadrature point is skipped by
/// the upwind variant. Variant `None` yields the zero matrix.
pub fn assemble_cip<S: Scalar>(
    dofs: &DofMap,
    beta: &VectorField,
    stab: &StabConfig,
) -> Result<CsrMatrix<S>> {
    stab.validate()?;
    let mesh = dofs.mesh();
    let n = dofs.num_dofs();
    let mut pattern = SparsityBuilder::new(n, n);
    let coefficient = match stab.variant {
        CipVariant::Normal => stab.gamma,
        CipVariant::Upwind => stab.gamma_beta,
        CipVariant::None => 0.0,
    };
    if coefficient == 0.0 {
        return Ok(pattern.build());
    }
    let interior: Vec<&crate::mesh::Facet> =
        mesh.facets.iter().filter(|f| f.is_interior()).collect();
    let patches: Vec<_> = interior
        .iter()
        .map(|f| facet_patch(dofs, f.left, f.right.expect("interior facet")))
        .collect();
    for (p, _, _) in &patches {
        pattern.add_group(p);
    }
    let mut j: CsrMatrix<S> = pattern.build();
    let rule = interval_rule(dofs.spec().quadrature_degree());
    for (f, (patch, pl, pr)) in interior.iter().zip(&patches) {
        let right = f.right.expect("interior facet");
        let (mapl, mapr) = (mesh.affine_map(f.left), mesh.affine_map(right));
        let (a, b) = (mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]);
        let points: Vec<Point> = rule
            .points
            .iter()
            .map(|t| [a[0] + t[0] * (b[0] - a[0]), a[1] + t[0] * (b[1] - a[1])])
            .collect();
        let betas: Vec<[f64; 2]> = points
            .iter()
            .map(|&x| {
                let v = beta(x);
                finite(v[0], x)?;
                finite(v[1], x)?;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let bmax = betas.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        let hf = match stab.length {
            PenaltyLength::Facet => f.length,
            PenaltyLength::CellMean => {
                0.5 * (mesh.cells[f.left].diameter + mesh.cells[right].diameter)
            }
        };
        let h2 = hf * hf;
        let scale = match stab.variant {
            CipVariant::Normal => coefficient * bmax * h2,
            CipVariant::Upwind if bmax > 0.0 => coefficient * h2 / bmax,
            _ => continue,
        };
        if scale == 0.0 {
            continue;
        }
        let np = patch.len();
        let mut local = vec![0.0; np * np];
        let mut jump = vec![[0.0; 2]; np];
        for ((&x, &w), bq) in points.iter().zip(&rule.weights).zip(&betas) {
            let gl = dofs.element.eval_gradients(mapl.to_reference(x));
            let gr = dofs.element.eval_gradients(mapr.to_reference(x));
            for k in 0..np {
                let mut g = [0.0; 2];
                if pl[k] != usize::MAX {
                    let v = mapl.push_gradient(gl[pl[k]]);
                    g = [g[0] + v[0], g[1] + v[1]];
                }
                if pr[k] != usize::MAX {
                    let v = mapr.push_gradient(gr[pr[k]]);
                    g = [g[0] - v[0], g[1] - v[1]];
                }
                jump[k] = g;
            }
            let wq = w * f.length * scale;
            for r in 0..np {
                for s in 0..np {
                    let prod = match stab.variant {
                        CipVariant::Normal => jump[r][0] * jump[s][0] + jump[r][1] * jump[s][1],
                        _ => {
                            (bq[0] * jump[r][0] + bq[1] * jump[r][1])
                                * (bq[0] * jump[s][0] + bq[1] * jump[s][1])
                        }
                    };
                    local[r * np + s] += wq * prod;
                }
            }
        }
        scatter(&mut j, patch, &local);
    }
    Ok(j)
}

/// Per-cell maxima of `max_ij |D_ij|` and `|beta|` over quadrature points.
fn cell_coefficient_bounds(spec: &ProblemSpec, dofs: &DofMap) -> Result<Vec<(f64, f64)>> {
    let mesh = dofs.mesh();
    let rule = quadrature(mesh.family.cell_kind(), dofs.spec().quadrature_degree())?;
    (0..mesh.cells.len())
        .map(|c| {
            let map = mesh.affine_map(c);
            let mut bounds = (0.0f64, 0.0f64);
            for &r in &rule.points {
                let x = map.to_physical(r);
                let d = (spec.diffusion)(x);
                let b = (spec.convection)(x);
                for v in [d[0][0], d[0][1], d[1][0], d[1][1]] {
                    bounds.0 = bounds.0.max(finite(v, x)?.abs());
                }
                bounds.1 = bounds.1.max(finite(b[0], x)?.hypot(finite(b[1], x)?));
            }
            Ok(bounds)
        })
        .collect()
}

/// Diagonal weights of the complement form,
/// `sigma_i = alpha (||D||_i + ||beta||_i h_i + mu h_i^2)` with suprema over
/// the support of `phi_i` and `h_i` the mesh function at node `i`.
/// Defined for every dof.
pub fn assemble_s_diag<S: Scalar>(
    dofs: &DofMap,
    spec: &ProblemSpec,
    hfun: &MeshFunction,
    alpha: f64,
) -> Result<Vec<S>> {
    let bounds = cell_coefficient_bounds(spec, dofs)?;
    let mesh = dofs.mesh();
    Ok((0..dofs.num_dofs())
        .map(|i| {
            let patch = &dofs.dof_cells[i];
            assert!(!patch.is_empty(), "dof {i} has an empty patch");
            let (dmax, bmax) = patch.iter().fold((0.0f64, 0.0f64), |acc, &c| {
                (acc.0.max(bounds[c].0), acc.1.max(bounds[c].1))
            });
            let (c, r) = dofs.node_in_cell(i);
            let h = hfun.eval_in_cell(mesh, c, r);
            S::of(alpha * (dmax + bmax * h + spec.reaction * h * h))
        })
        .collect())
}

/// Mass-lumped inner product `sum_i h(x_i)^2 u_i v_i` over interior dofs.
pub fn lumped_product<S: Scalar>(dofs: &DofMap, hfun: &MeshFunction, u: &[S], v: &[S]) -> S {
    let mesh = dofs.mesh();
    (0..dofs.num_dofs())
        .filter(|&i| !dofs.boundary[i])
        .map(|i| {
            let (c, r) = dofs.node_in_cell(i);
            let h = hfun.eval_in_cell(mesh, c, r);
            S::of(h * h) * u[i] * v[i]
        })
        .sum()
}

/// Dofs on the Dirichlet part of the boundary.
pub fn dirichlet_mask(dofs: &DofMap, spec: &ProblemSpec) -> Vec<bool> {
    dofs.coords
        .iter()
        .zip(&dofs.boundary)
        .map(|(&p, &b)| b && (spec.dirichlet)(p))
        .collect()
}

/// `g` at Dirichlet nodes and zero elsewhere.
pub fn dirichlet_extension<S: Scalar>(dofs: &DofMap, spec: &ProblemSpec) -> Result<Vec<S>> {
    dirichlet_mask(dofs, spec)
        .iter()
        .zip(&dofs.coords)
        .map(|(&d, &p)| {
            if d {
                Ok(S::of(finite((spec.boundary_value)(p), p)?))
            } else {
                Ok(S::zero())
            }
        })
        .collect()
}

/// System restricted to the unknown dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem<S> {
    pub matrix: CsrMatrix<S>,
    pub rhs: Vec<S>,
    /// Global indices of the unknowns, ascending.
    pub unknowns: Vec<usize>,
}

impl<S: Scalar> ReducedSystem<S> {
    /// Restricts a global vector to the unknowns.
    pub fn restrict(&self, v: &[S]) -> Vec<S> {
        self.unknowns.iter().map(|&i| v[i]).collect()
    }

    /// Global vector equal to `base` with the unknowns replaced by `reduced`.
    pub fn expand(&self, reduced: &[S], base: &[S]) -> Vec<S> {
        let mut out = base.to_vec();
        for (&i, &v) in self.unknowns.iter().zip(reduced) {
            out[i] = v;
        }
        out
    }
}

/// `A_red = A[U, U]`, `F_red = (F - A u_g)[U]` for the unknown set `U`.
pub fn reduce_system<S: Scalar>(
    a: &CsrMatrix<S>,
    f: &[S],
    ug: &[S],
    unknown: &[bool],
) -> Result<ReducedSystem<S>> {
    let n = a.nrows();
    for len in [a.ncols(), f.len(), ug.len(), unknown.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let unknowns: Vec<usize> = (0..n).filter(|&i| unknown[i]).collect();
    let aug = a.mul_vec(ug);
    let rhs = unknowns.iter().map(|&i| f[i] - aug[i]).collect();
    Ok(ReducedSystem {
        matrix: a.submatrix(&unknowns, &unknowns),
        rhs,
        unknowns,
    })
}
