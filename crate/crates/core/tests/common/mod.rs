#![allow(dead_code)]

pub mod properties;

use std::sync::Arc;

use bpfem::analysis::{
    bounds_audit, error_energy, error_l2, fill_rates, norm_s, BoundsAudit, ConvergenceRow,
};
use bpfem::assembly::{ProblemSpec, StabConfig};
use bpfem::fe_space::{DofMap, ElementSpec};
use bpfem::mesh::{Mesh, MeshFamily};
use bpfem::problems::BenchmarkCase;
use bpfem::solver::FixedPointConfig;
use bpfem::Discretization64;
use rand::Rng;

pub const FAMILIES: [MeshFamily; 4] = [
    MeshFamily::TriAlt,
    MeshFamily::TriUniform,
    MeshFamily::TriPerturbed,
    MeshFamily::Quad,
];

pub fn space(family: MeshFamily, n: usize, spec: ElementSpec) -> DofMap {
    DofMap::new(Arc::new(Mesh::structured(family, n).unwrap()), spec).unwrap()
}

/// Elements compatible with `family`.
pub fn elements(family: MeshFamily) -> Vec<ElementSpec> {
    match family {
        MeshFamily::Quad => vec![ElementSpec::q(1), ElementSpec::q(2)],
        _ => vec![ElementSpec::p(1), ElementSpec::p(2), ElementSpec::p(3)],
    }
}

/// Lowest-order element for `family`.
pub fn linear_element(family: MeshFamily) -> ElementSpec {
    match family {
        MeshFamily::Quad => ElementSpec::q(1),
        _ => ElementSpec::p(1),
    }
}

/// One refinement level of a benchmark run.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub kappa: f64,
    pub nodal_min: f64,
    pub nodal_max: f64,
    pub audit: Option<BoundsAudit>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
    pub levels: Vec<LevelResult>,
}

impl BenchmarkRun {
    /// Iteration counts with `None` for non-convergence.
    pub fn iterations(&self) -> Vec<Option<usize>> {
        self.levels
            .iter()
            .map(|l| l.converged.then_some(l.iterations))
            .collect()
    }

    pub fn iterations_text(&self) -> String {
        self.levels
            .iter()
            .map(|l| {
                if l.converged {
                    format!("{}:{}", l.n, l.iterations)
                } else {
                    format!("{}:NC", l.n)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub struct RunOptions {
    pub stab: StabConfig,
    pub omega: f64,
    /// Random samples per level for the pointwise bound audit (0 = off).
    pub audit_samples: usize,
}

/// Solves `case` with the clipped method on every level; error columns
/// are filled only when the case has an exact solution.
pub fn run_benchmark(
    case: &BenchmarkCase,
    spec: ElementSpec,
    family: MeshFamily,
    levels: &[usize],
    opts: &RunOptions,
) -> BenchmarkRun {
    let cfg = FixedPointConfig::with_omega(opts.omega);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &n in levels {
        let disc = Discretization64::new(&case.problem, space(family, n, spec), opts.stab).unwrap();
        let sol = disc.solve_bound_preserving(&cfg).unwrap();
        let (err_l2, err_energy) = match &case.exact {
            Some(exact) => (
                error_l2(&disc.dofs, &sol.u_plus, exact).unwrap(),
                error_energy(&disc.dofs, &disc.problem, &disc.cip, &sol.u_plus, exact).unwrap(),
            ),
            None => (f64::NAN, f64::NAN),
        };
        rows.push(ConvergenceRow {
            n,
            iterations: sol.report.converged.then_some(sol.report.iterations),
            err_l2,
            eoc_l2: None,
            err_energy,
            eoc_energy: None,
            norm_s_minus: norm_s(&disc.sigma, &sol.u_minus),
            eoc_s: None,
        });
        let (lo, hi) = sol
            .u_plus
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let audit = (opts.audit_samples > 0)
            .then(|| bounds_audit(&disc.dofs, &sol.u_plus, opts.audit_samples, n as u64).unwrap());
        results.push(LevelResult {
            n,
            converged: sol.report.converged,
            iterations: sol.report.iterations,
            kappa: case.problem.kappa,
            nodal_min: lo,
            nodal_max: hi,
            audit,
        });
    }
    fill_rates(&mut rows);
    BenchmarkRun {
        label: format!("example {} {spec} {}", case.id, family.tag()),
        rows,
        levels: results,
    }
}

/// Constant-coefficient problem on the unit square with homogeneous
/// Dirichlet data and a source that drives the unconstrained solution
/// outside `[0, kappa]`.
pub fn random_problem(rng: &mut impl Rng) -> (ProblemSpec, StabConfig) {
    let d1: f64 = rng.gen_range(1e-3..1.0);
    let d2 = rng.gen_range(1e-3..1.0);
    let d12 = 0.9 * rng.gen_range(-1.0..1.0) * (d1 * d2).sqrt();
    let beta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
    let mu = rng.gen_range(0.5..5.0);
    let kappa = rng.gen_range(0.5..2.0);
    let amp = rng.gen_range(2.0..20.0) * mu;
    let shift = rng.gen_range(-1.0..3.0) * mu;
    let (kx, ky) = (rng.gen_range(1..=3) as f64, rng.gen_range(1..=3) as f64);
    let (px, py) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
    let spec = ProblemSpec {
        diffusion: Arc::new(move |_| [[d1, d12], [d12, d2]]),
        convection: Arc::new(move |_| beta),
        reaction: mu,
        source: Arc::new(move |p| {
            let tau = std::f64::consts::TAU;
            amp * (tau * kx * p[0] + px).sin() * (tau * ky * p[1] + py).cos() + shift
        }),
        boundary_value: Arc::new(|_| 0.0),
        kappa,
        dirichlet: Arc::new(|_| true),
    };
    (spec, StabConfig::normal(rng.gen_range(0.0..0.1)))
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSummary {
    pub cases: usize,
    pub max_difference: f64,
    pub max_iterations: usize,
    pub max_active: usize,
    /// Smallest damping needed.
    pub min_omega: f64,
}

/// Damping values tried in turn on the random oracle problems; the
/// undamped iteration does not converge on all of them.
pub const ORACLE_OMEGAS: [f64; 3] = [0.5, 0.25, 0.1];

/// Compares the fixed-point solution with the enumeration oracle on
/// `cases` random problems whose solution has both free and active nodes,
/// using the lowest-order element on `family` at `N = 5`.
pub fn oracle_equivalence(
    family: MeshFamily,
    cases: usize,
    seed: u64,
) -> Result<OracleSummary, String> {
    use bpfem::solver::vi_oracle;
    use rand::SeedableRng;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut summary = OracleSummary {
        cases: 0,
        max_difference: 0.0,
        max_iterations: 0,
        max_active: 0,
        min_omega: 1.0,
    };
    let mut attempts = 0;
    while summary.cases < cases {
        attempts += 1;
        if attempts > 20 * cases {
            return Err(format!(
                "only {} of {cases} random problems had active bounds",
                summary.cases
            ));
        }
        let (problem, stab) = random_problem(&mut rng);
        let disc = Discretization64::new(&problem, space(family, 5, linear_element(family)), stab)
            .map_err(|e| e.to_string())?;
        let bx = disc.admissible_box().map_err(|e| e.to_string())?;
        let exact =
            vi_oracle(&disc.reduced.matrix, &disc.reduced.rhs, bx).map_err(|e| e.to_string())?;
        let active = exact.iter().filter(|&&v| v == 0.0 || v == bx.upper).count();
        if active == 0 || active == exact.len() {
            continue;
        }
        let mut solved = None;
        for omega in ORACLE_OMEGAS {
            let cfg = FixedPointConfig {
                tol: 1e-12,
                max_iter: 20_000,
                ..FixedPointConfig::with_omega(omega)
            };
            let sol = disc
                .solve_bound_preserving(&cfg)
                .map_err(|e| e.to_string())?;
            if sol.report.converged {
                summary.min_omega = summary.min_omega.min(omega);
                solved = Some(sol);
                break;
            }
        }
        let Some(sol) = solved else {
            return Err(format!(
                "fixed point did not converge on case {}",
                summary.cases
            ));
        };
        let diff = sol
            .report
            .u_plus
            .iter()
            .zip(&exact)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        summary.cases += 1;
        summary.max_difference = summary.max_difference.max(diff);
        summary.max_iterations = summary.max_iterations.max(sol.report.iterations);
        summary.max_active = summary.max_active.max(active);
    }
    Ok(summary)
}

/// Fourth-order central difference of `f` at `x` with step `h`.
fn d4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Largest `|f - (-div(D grad u) + beta . grad u + mu u)|` over random
/// points, with every derivative of the exact solution and of the flux
/// taken by finite differences.
pub fn forcing_residual(case: &BenchmarkCase, points: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let exact = case.exact.as_ref().expect("manufactured solution");
    let u = |x: f64, y: f64| (exact.value)([x, y]);
    let h = 1e-3;
    let grad = |x: f64, y: f64| [d4(|s| u(s, y), x, h), d4(|s| u(x, s), y, h)];
    let flux = |x: f64, y: f64| {
        let d = (case.problem.diffusion)([x, y]);
        let g = grad(x, y);
        [
            d[0][0] * g[0] + d[0][1] * g[1],
            d[1][0] * g[0] + d[1][1] * g[1],
        ]
    };
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
        let div = d4(|s| flux(s, y)[0], x, h) + d4(|s| flux(x, s)[1], y, h);
        let b = (case.problem.convection)([x, y]);
        let g = grad(x, y);
        let lhs = -div + b[0] * g[0] + b[1] * g[1] + case.problem.reaction * u(x, y);
        worst = worst.max((lhs - (case.problem.source)([x, y])).abs());
    }
    worst
}

/// Error columns and printed rates of the reference Example 1 tables.
pub struct ReferenceTable {
    pub name: &'static str,
    pub errors: [[f64; 6]; 3],
    pub rates: [[Option<f64>; 6]; 3],
}

pub const REFERENCE_NS: [usize; 6] = [5, 9, 17, 33, 65, 129];

pub const REFERENCE_TABLES: [ReferenceTable; 2] = [
    ReferenceTable {
        name: "P1 perturbed mesh",
        errors: [
            [8.57, 2.12, 5.05e-1, 1.23e-1, 3.09e-2, 7.80e-3],
            [4.55e1, 1.95e1, 7.71, 2.89, 1.06, 3.82e-1],
            [0.0, 3.05e-1, 2.74e-1, 6.64e-2, 1.27e-2, 2.29e-3],
        ],
        rates: [
            [
                None,
                Some(2.37),
                Some(2.26),
                Some(2.12),
                Some(2.03),
                Some(2.00),
            ],
            [
                None,
                Some(1.44),
                Some(1.46),
                Some(1.47),
                Some(1.47),
                Some(1.49),
            ],
            [None, None, Some(0.17), Some(2.13), Some(2.44), Some(2.50)],
        ],
    },
    ReferenceTable {
        name: "Q1 quadrilateral mesh",
        errors: [
            [5.51, 8.03e-1, 1.38e-1, 2.86e-2, 6.62e-3, 1.61e-3],
            [2.73e1, 9.79, 3.47, 1.23, 4.37e-1, 1.56e-1],
            [4.43, 8.43e-1, 1.67e-1, 3.12e-2, 5.70e-3, 1.02e-3],
        ],
        rates: [
            [
                None,
                Some(3.27),
                Some(2.76),
                Some(2.37),
                Some(2.15),
                Some(2.06),
            ],
            [
                None,
                Some(1.74),
                Some(1.63),
                Some(1.56),
                Some(1.53),
                Some(1.50),
            ],
            [
                None,
                Some(2.82),
                Some(2.54),
                Some(2.52),
                Some(2.50),
                Some(2.51),
            ],
        ],
    },
];

/// Largest deviation between recomputed and printed rates.
pub fn reference_rate_deviation() -> Result<f64, String> {
    let mut worst = 0.0f64;
    for table in &REFERENCE_TABLES {
        for (errors, printed) in table.errors.iter().zip(&table.rates) {
            let rates = bpfem::analysis::eoc(errors, &REFERENCE_NS);
            for (k, (r, p)) in rates.iter().zip(printed).enumerate() {
                match (r, p) {
                    (Some(r), Some(p)) => worst = worst.max((r - p).abs()),
                    (None, None) => {}
                    _ => return Err(format!("{}: rate {k} is {r:?}, printed {p:?}", table.name)),
                }
            }
        }
    }
    Ok(worst)
}
