//! Full discretisation of one problem on one space: assembled operators,
//! Dirichlet reduction and the two solution methods (clipped fixed point
//! and plain linear stabilised solve).

use crate::assembly::{
    assemble_cip, assemble_galerkin, assemble_mass, assemble_s_diag, dirichlet_extension,
    dirichlet_mask, reduce_system, ProblemSpec, ReducedSystem, StabConfig,
};
use crate::error::Result;
use crate::fe_space::DofMap;
use crate::linalg::CsrMatrix;
use crate::mesh::MeshFunction;
use crate::projection::AdmissibleBox;
use crate::scalar::Scalar;
use crate::solver::{richardson, FixedPointConfig, LinearSolver, LinearSolverKind, SolveReport};

pub struct Discretization<S> {
    pub dofs: DofMap,
    pub problem: ProblemSpec,
    pub stab: StabConfig,
    pub hfun: MeshFunction,
    /// Stabilised operator `A + J` over all dofs.
    pub operator: CsrMatrix<S>,
    /// Interior penalty `J` over all dofs.
    pub cip: CsrMatrix<S>,
    pub mass: CsrMatrix<S>,
    pub load: Vec<S>,
    /// Complement weights over all dofs.
    pub sigma: Vec<S>,
    /// Dirichlet extension of the boundary data.
    pub extension: Vec<S>,
    /// `true` for dofs that are not on the Dirichlet boundary.
    pub unknown: Vec<bool>,
    pub reduced: ReducedSystem<S>,
    pub reduced_mass: CsrMatrix<S>,
    pub reduced_sigma: Vec<S>,
}

/// Clipped solution expanded to all dofs.
#[derive(Debug, Clone)]
pub struct BoundPreservingSolution<S> {
    /// `u_plus` with the Dirichlet data filled in.
    pub u_plus: Vec<S>,
    /// `u_minus`, zero on the Dirichlet boundary.
    pub u_minus: Vec<S>,
    /// Iteration report on the unknowns.
    pub report: SolveReport<S>,
}

impl<S: Scalar> Discretization<S> {
    pub fn new(problem: &ProblemSpec, dofs: DofMap, stab: StabConfig) -> Result<Self> {
        problem.validate()?;
        stab.validate()?;
        let hfun = MeshFunction::new(dofs.mesh());
        let (a, load) = assemble_galerkin::<S>(problem, &dofs)?;
        let cip = assemble_cip::<S>(&dofs, &problem.convection, &stab)?;
        let operator = a.add(&cip)?;
        let mass = assemble_mass::<S>(&dofs)?;
        let sigma = assemble_s_diag::<S>(&dofs, problem, &hfun, stab.alpha)?;
        let extension = dirichlet_extension::<S>(&dofs, problem)?;
        let unknown: Vec<bool> = dirichlet_mask(&dofs, problem).iter().map(|d| !d).collect();
        let reduced = reduce_system(&operator, &load, &extension, &unknown)?;
        let reduced_mass = mass.submatrix(&reduced.unknowns, &reduced.unknowns);
        let reduced_sigma = reduced.restrict(&sigma);
        Ok(Discretization {
            dofs,
            problem: problem.clone(),
            stab,
            hfun,
            operator,
            cip,
            mass,
            load,
            sigma,
            extension,
            unknown,
            reduced,
            reduced_mass,
            reduced_sigma,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.reduced.unknowns.len()
    }

    pub fn admissible_box(&self) -> Result<AdmissibleBox> {
        AdmissibleBox::new(self.problem.kappa)
    }

    pub fn prepare(&self, kind: LinearSolverKind) -> Result<LinearSolver<S>> {
        LinearSolver::new(&self.reduced.matrix, kind)
    }

    /// Clipped method solved by the damped fixed-point iteration.
    pub fn solve_bound_preserving(
        &self,
        cfg: &FixedPointConfig,
    ) -> Result<BoundPreservingSolution<S>> {
        let solver = self.prepare(cfg.linear_solver)?;
        self.solve_bound_preserving_with(&solver, cfg)
    }

    /// As [`Self::solve_bound_preserving`] with an already prepared solver.
    pub fn solve_bound_preserving_with(
        &self,
        solver: &LinearSolver<S>,
        cfg: &FixedPointConfig,
    ) -> Result<BoundPreservingSolution<S>> {
        let report = richardson(
            solver,
            &self.reduced_sigma,
            &self.reduced.rhs,
            &self.reduced_mass,
            self.admissible_box()?,
            cfg,
        )?;
        let u_plus = self.reduced.expand(&report.u_plus, &self.extension);
        let zeros = vec![S::zero(); self.dofs.num_dofs()];
        let u_minus = self.reduced.expand(&report.u_minus, &zeros);
        Ok(BoundPreservingSolution {
            u_plus,
            u_minus,
            report,
        })
    }

    /// Linear stabilised solution over all dofs.
    pub fn solve_linear(&self, kind: LinearSolverKind) -> Result<Vec<S>> {
        let x = self.prepare(kind)?.solve(&self.reduced.rhs)?;
        Ok(self.reduced.expand(&x, &self.extension))
    }
}
