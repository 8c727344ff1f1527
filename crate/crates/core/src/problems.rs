//! Benchmark problems: a smooth manufactured solution with anisotropic
//! diffusion, a rotating flow with discontinuous inflow data and a skew
//! inflow producing interior and boundary layers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{ProblemSpec, ScalarField, StabConfig, VectorField};
use crate::error::{Error, Result};
use crate::mesh::{CellKind, GEOM_TOL};

/// Default diffusion scale of all benchmarks.
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

#[derive(Clone)]
pub struct BenchmarkCase {
    pub id: u8,
    pub epsilon: f64,
    pub problem: ProblemSpec,
    pub stab_triangles: StabConfig,
    pub stab_quads: StabConfig,
    pub omega: f64,
    /// Damping used when the stabilisation is switched off.
    pub omega_unstabilised: f64,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for BenchmarkCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkCase")
            .field("id", &self.id)
            .field("epsilon", &self.epsilon)
            .field("problem", &self.problem)
            .field("stab_triangles", &self.stab_triangles)
            .field("stab_quads", &self.stab_quads)
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

impl BenchmarkCase {
    pub fn stab_for(&self, kind: CellKind) -> StabConfig {
        match kind {
            CellKind::Triangle => self.stab_triangles,
            CellKind::Quadrilateral => self.stab_quads,
        }
    }

    /// Recommended damping for a stabilisation setting.
    pub fn omega_for(&self, stab: &StabConfig) -> f64 {
        let off = match stab.variant {
            crate::assembly::CipVariant::Normal => stab.gamma == 0.0,
            crate::assembly::CipVariant::Upwind => stab.gamma_beta == 0.0,
            crate::assembly::CipVariant::None => true,
        };
        if off {
            self.omega_unstabilised
        } else {
            self.omega
        }
    }
}

pub fn example(id: u8, epsilon: f64) -> Result<BenchmarkCase> {
    match id {
        1 => Ok(example1(epsilon)),
        2 => Ok(example2(epsilon)),
        3 => Ok(example3(epsilon)),
        _ => Err(Error::InvalidArgument(format!(
            "unknown example {id} (expected 1, 2 or 3)"
        ))),
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= GEOM_TOL
}

/// `u = 100 sin(pi x) sin(pi y)` with `D = eps [[100, cos x], [cos x, 1]]`,
/// `beta = (2, 1)`, `mu = 1` and homogeneous Dirichlet data.
pub fn example1(epsilon: f64) -> BenchmarkCase {
    let u = |x: f64, y: f64| 100.0 * (PI * x).sin() * (PI * y).sin();
    let source = move |p: [f64; 2]| {
        let (x, y) = (p[0], p[1]);
        let (sx, cx, sy, cy) = (
            (PI * x).sin(),
            (PI * x).cos(),
            (PI * y).sin(),
            (PI * y).cos(),
        );
        let ux = 100.0 * PI * cx * sy;
        let uy = 100.0 * PI * sx * cy;
        let uxx = -100.0 * PI * PI * sx * sy;
        let uyy = uxx;
        let uxy = 100.0 * PI * PI * cx * cy;
        -epsilon * (100.0 * uxx + 2.0 * x.cos() * uxy - x.sin() * uy + uyy)
            + 2.0 * ux
            + uy
            + u(x, y)
    };
    let stab = StabConfig::normal(0.025);
    BenchmarkCase {
        id: 1,
        epsilon,
        problem: ProblemSpec {
            diffusion: Arc::new(move |p| {
                let c = p[0].cos();
                [[100.0 * epsilon, epsilon * c], [epsilon * c, epsilon]]
            }),
            convection: Arc::new(|_| [2.0, 1.0]),
            reaction: 1.0,
            source: Arc::new(source),
            boundary_value: Arc::new(|_| 0.0),
            kappa: 100.0,
            dirichlet: Arc::new(|_| true),
        },
        stab_triangles: stab,
        stab_quads: stab,
        omega: 1.0,
        omega_unstabilised: 1.0,
        exact: Some(ExactSolution {
            value: Arc::new(move |p| u(p[0], p[1])),
            gradient: Arc::new(|p| {
                let (x, y) = (p[0], p[1]);
                [
                    100.0 * PI * (PI * x).cos() * (PI * y).sin(),
                    100.0 * PI * (PI * x).sin() * (PI * y).cos(),
                ]
            }),
        }),
    }
}

/// Rotating flow `beta = (-y, x)`, Dirichlet data on `y = 0` and `x = 1`,
/// natural condition on `x = 0` and `y = 1`.
pub fn example2(epsilon: f64) -> BenchmarkCase {
    let stab = StabConfig::upwind(0.05);
    BenchmarkCase {
        id: 2,
        epsilon,
        problem: ProblemSpec {
            diffusion: Arc::new(move |_| [[epsilon, 0.0], [0.0, epsilon]]),
            convection: Arc::new(|p| [-p[1], p[0]]),
            reaction: 0.0,
            source: Arc::new(|_| 0.0),
            boundary_value: Arc::new(|p| {
                if near(p[1], 0.0) && !near(p[0], 1.0) {
                    if p[0] <= 1.0 / 3.0 + GEOM_TOL {
                        0.0
                    } else if p[0] < 2.0 / 3.0 - GEOM_TOL {
                        0.5
                    } else {
                        1.0
                    }
                } else {
                    1.0
                }
            }),
            kappa: 1.0,
            dirichlet: Arc::new(|p| near(p[1], 0.0) || near(p[0], 1.0)),
        },
        stab_triangles: stab,
        stab_quads: stab,
        omega: 0.1,
        omega_unstabilised: 0.05,
        exact: None,
    }
}

/// Constant skew flow `beta = (cos 60deg, sin 60deg)` with `g = 1` on
/// `x = 0` and `y = 1`, zero elsewhere.
pub fn example3(epsilon: f64) -> BenchmarkCase {
    let (s, c) = (PI / 3.0).sin_cos();
    BenchmarkCase {
        id: 3,
        epsilon,
        problem: ProblemSpec {
            diffusion: Arc::new(move |_| [[epsilon, 0.0], [0.0, epsilon]]),
            convection: Arc::new(move |_| [c, s]),
            reaction: 0.0,
            source: Arc::new(|_| 0.0),
            boundary_value: Arc::new(|p| {
                if near(p[0], 0.0) || near(p[1], 1.0) {
                    1.0
                } else {
                    0.0
                }
            }),
            kappa: 1.0,
            dirichlet: Arc::new(|_| true),
        },
        stab_triangles: StabConfig::normal(0.01),
        stab_quads: StabConfig::upwind(0.01),
        omega: 0.1,
        omega_unstabilised: 0.1,
        exact: None,
    }
}
