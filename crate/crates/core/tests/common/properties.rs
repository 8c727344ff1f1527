//! Randomised property suites shared by the property tests and the
//! acceptance report. Each suite runs `CASES` deterministic instances and
//! returns the first counterexample as an error message.

use std::cell::RefCell;
use std::collections::BTreeMap;

use bpfem::assembly::{assemble_cip, lumped_product, PenaltyLength, StabConfig, VectorField};
use bpfem::fe_space::quadrature::{quadrature, MAX_DEGREE};
use bpfem::fe_space::{interpolate, ElementSpec, ReferenceElement};
use bpfem::mesh::CellKind;
use bpfem::problems::example1;
use bpfem::projection::{active_sets, clip, complement, AdmissibleBox};
use bpfem::{CsrMatrix64, Discretization64};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{elements, space, FAMILIES};

pub const CASES: u32 = 1000;

pub type Outcome = Result<(), String>;

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn run<T: Strategy>(strategy: T, test: impl Fn(T::Value) -> Result<(), TestCaseError>) -> Outcome
where
    T::Value: std::fmt::Debug,
{
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

fn box_and_vectors() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
    (0.0f64..10.0, 1usize..40).prop_flat_map(|(k, n)| {
        (
            Just(k),
            prop::collection::vec(-20.0f64..20.0, n),
            prop::collection::vec(-20.0f64..20.0, n),
        )
    })
}

pub fn projection_idempotent() -> Outcome {
    run(box_and_vectors(), |(k, v, _)| {
        let bx = AdmissibleBox::new(k).unwrap();
        let p = clip(&v, bx);
        prop_assert_eq!(clip(&p, bx), p.clone());
        prop_assert!(p.iter().all(|&x| (0.0..=k).contains(&x)));
        Ok(())
    })
}

pub fn projection_lipschitz() -> Outcome {
    run(box_and_vectors(), |(k, v, w)| {
        let bx = AdmissibleBox::new(k).unwrap();
        let (pv, pw) = (clip(&v, bx), clip(&w, bx));
        for i in 0..v.len() {
            prop_assert!((pv[i] - pw[i]).abs() <= (v[i] - w[i]).abs());
        }
        Ok(())
    })
}

pub fn projection_shift() -> Outcome {
    run(box_and_vectors(), |(k, v, _)| {
        let bx = AdmissibleBox::new(k).unwrap();
        let p = clip(&v, bx);
        let m = complement(&v, &p);
        let sum: Vec<f64> = p.iter().zip(&m).map(|(a, b)| a + b).collect();
        prop_assert_eq!(clip(&sum, bx), p);
        Ok(())
    })
}

/// `(v_i^- - w_i^-)(v_i^+ - w_i^+) >= 0` node by node, hence also for any
/// positive diagonal weighting.
pub fn nodal_monotonicity() -> Outcome {
    let strategy = (box_and_vectors(), prop::collection::vec(1e-3f64..10.0, 40));
    run(strategy, |((k, v, w), sigma)| {
        let bx = AdmissibleBox::new(k).unwrap();
        let (pv, pw) = (clip(&v, bx), clip(&w, bx));
        let (mv, mw) = (complement(&v, &pv), complement(&w, &pw));
        let mut s = 0.0;
        for i in 0..v.len() {
            let t = (mv[i] - mw[i]) * (pv[i] - pw[i]);
            prop_assert!(t >= 0.0, "node {} gives {}", i, t);
            s += sigma[i] * t;
        }
        prop_assert!(s >= 0.0);
        let (lo, hi) = active_sets(&v, bx);
        for i in 0..v.len() {
            if mv[i] != 0.0 {
                prop_assert!(lo.contains(&i) || hi.contains(&i));
            }
        }
        Ok(())
    })
}

#[derive(Debug, Clone)]
struct PenaltyCase {
    family: usize,
    element: usize,
    n: usize,
    beta: [f64; 2],
    gamma: f64,
    upwind: bool,
    facet_length: bool,
    linear: [f64; 3],
    seed: u64,
}

fn penalty_cases() -> impl Strategy<Value = PenaltyCase> {
    (
        0..FAMILIES.len(),
        0usize..3,
        3usize..6,
        (-3.0f64..3.0, -3.0f64..3.0),
        1e-3f64..1.0,
        any::<bool>(),
        any::<bool>(),
        (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
        any::<u64>(),
    )
        .prop_map(
            |(family, element, n, beta, gamma, upwind, facet_length, l, seed)| PenaltyCase {
                family,
                element,
                n,
                beta: [beta.0, beta.1],
                gamma,
                upwind,
                facet_length,
                linear: [l.0, l.1, l.2],
                seed,
            },
        )
}

/// The penalty matrix is symmetric positive semidefinite and annihilates
/// interpolants of globally linear fields.
pub fn penalty_psd_and_linear_kernel() -> Outcome {
    run(penalty_cases(), |c| {
        let family = FAMILIES[c.family];
        let els = elements(family);
        let spec = els[c.element % els.len()];
        let dofs = space(family, c.n, spec);
        let beta = c.beta;
        let field: VectorField = std::sync::Arc::new(move |_| beta);
        let mut stab = if c.upwind {
            StabConfig::upwind(c.gamma)
        } else {
            StabConfig::normal(c.gamma)
        };
        if c.facet_length {
            stab = stab.with_length(PenaltyLength::Facet);
        }
        let j: CsrMatrix64 = assemble_cip(&dofs, &field, &stab).unwrap();
        let jmax = j.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(j.asymmetry() <= 1e-12 * jmax.max(1.0));
        let mut rng = StdRng::seed_from_u64(c.seed);
        let v: Vec<f64> = (0..dofs.num_dofs())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let quad = j.bilinear(&v, &v);
        let scale: f64 = (0..j.nrows())
            .map(|i| {
                let (cols, vals) = j.row(i);
                cols.iter()
                    .zip(vals)
                    .map(|(&k, x)| (x * v[i] * v[k]).abs())
                    .sum::<f64>()
            })
            .sum();
        prop_assert!(quad >= -1e-12 * scale.max(1e-300), "v^T J v = {}", quad);
        let [a, b, cc] = c.linear;
        let l: Vec<f64> = interpolate(&dofs, |p| a + b * p[0] + cc * p[1]).unwrap();
        let jl = j.mul_vec(&l);
        let lmax = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let bound = 1e-10 * jmax * lmax.max(1.0) * 50.0;
        prop_assert!(
            jl.iter().all(|x| x.abs() <= bound),
            "J l not zero: {:?}",
            jl
        );
        Ok(())
    })
}

const RATIO_LEVELS: [usize; 3] = [5, 9, 17];

/// Interior dofs of the largest ratio space (P3 at N = 17).
const MAX_INTERIOR: usize = 47 * 47;

struct RatioSpace {
    label: String,
    disc: Discretization64,
    interior: Vec<usize>,
}

fn ratio_spaces() -> Vec<Vec<RatioSpace>> {
    let case = example1(bpfem::problems::DEFAULT_EPSILON);
    let mut out = Vec::new();
    for family in FAMILIES {
        for spec in elements(family) {
            let levels = RATIO_LEVELS
                .iter()
                .map(|&n| {
                    let dofs = space(family, n, spec);
                    let interior = dofs.interior_dofs();
                    let stab = case.stab_for(family.cell_kind());
                    RatioSpace {
                        label: format!("{spec} {}", family.tag()),
                        disc: Discretization64::new(&case.problem, dofs, stab).unwrap(),
                        interior,
                    }
                })
                .collect();
            out.push(levels);
        }
    }
    out
}

/// Per space: (min, max) ratio observed on each level.
type RatioTable = BTreeMap<(usize, usize), (f64, f64)>;

fn record(table: &RefCell<RatioTable>, key: (usize, usize), r: f64) {
    let mut t = table.borrow_mut();
    let e = t.entry(key).or_insert((f64::INFINITY, f64::NEG_INFINITY));
    e.0 = e.0.min(r);
    e.1 = e.1.max(r);
}

/// Ratio bounds on the finest level must stay within `drift` of those on
/// the coarsest level.
fn check_stable(
    table: &RatioTable,
    spaces: &[Vec<RatioSpace>],
    drift: f64,
    range: (f64, f64),
) -> Outcome {
    for (s, levels) in spaces.iter().enumerate() {
        let coarse = table.get(&(s, 0));
        let fine = table.get(&(s, RATIO_LEVELS.len() - 1));
        let (Some(&(c_lo, c_hi)), Some(&(f_lo, f_hi))) = (coarse, fine) else {
            return Err(format!("{}: not enough samples", levels[0].label));
        };
        for &(lo, hi) in table.iter().filter(|((k, _), _)| *k == s).map(|(_, v)| v) {
            if lo < range.0 || hi > range.1 {
                return Err(format!(
                    "{}: ratio range [{lo:.3e}, {hi:.3e}] leaves [{:.0e}, {:.0e}]",
                    levels[0].label, range.0, range.1
                ));
            }
        }
        if f_hi > drift * c_hi || f_lo < c_lo / drift {
            return Err(format!(
                "{}: ratio range drifts from [{c_lo:.3e}, {c_hi:.3e}] to [{f_lo:.3e}, {f_hi:.3e}]",
                levels[0].label
            ));
        }
    }
    Ok(())
}

fn ratio_cases(spaces: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (
        0..spaces,
        0..RATIO_LEVELS.len(),
        prop::collection::vec(-1.0f64..1.0, MAX_INTERIOR),
    )
}

fn coefficients(rs: &RatioSpace, values: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; rs.disc.dofs.num_dofs()];
    for (k, &i) in rs.interior.iter().enumerate() {
        v[i] = values[k];
    }
    v
}

/// `alpha ||v||_h^2 <= C ||v||_s^2` for functions vanishing on the
/// boundary, with `C` bounded and stable under refinement. For such `v`
/// the convective part of the operator is skew, so `v^T (A + J) v` equals
/// the squared energy norm.
pub fn s_control() -> Outcome {
    let spaces = ratio_spaces();
    let table = RefCell::new(RatioTable::new());
    run(ratio_cases(spaces.len()), |(s, l, values)| {
        let rs = &spaces[s][l];
        let v = coefficients(rs, &values);
        let energy = rs.disc.operator.bilinear(&v, &v);
        let ss: f64 = rs.disc.sigma.iter().zip(&v).map(|(s, x)| s * x * x).sum();
        prop_assert!(energy > 0.0 && ss > 0.0);
        record(&table, (s, l), rs.disc.stab.alpha * energy / ss);
        Ok(())
    })?;
    let table = table.into_inner();
    check_stable(&table, &spaces, 2.0, (1e-4, 1e2))
}

/// `c |v|_h^2 <= ||v||^2 <= C |v|_h^2` between the consistent and the
/// lumped inner products, with constants stable under refinement.
pub fn norm_equivalence() -> Outcome {
    let spaces = ratio_spaces();
    let table = RefCell::new(RatioTable::new());
    run(ratio_cases(spaces.len()), |(s, l, values)| {
        let rs = &spaces[s][l];
        let v = coefficients(rs, &values);
        let l2 = rs.disc.mass.bilinear(&v, &v);
        let lumped = lumped_product(&rs.disc.dofs, &rs.disc.hfun, &v, &v);
        prop_assert!(l2 > 0.0 && lumped > 0.0);
        record(&table, (s, l), l2 / lumped);
        Ok(())
    })?;
    let table = table.into_inner();
    check_stable(&table, &spaces, 2.0, (1e-2, 1e2))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Exact integral of `x^a y^b` over the reference cell.
fn monomial_integral(kind: CellKind, a: u32, b: u32) -> f64 {
    match kind {
        CellKind::Triangle => factorial(a) * factorial(b) / factorial(a + b + 2),
        CellKind::Quadrilateral => 1.0 / f64::from((a + 1) * (b + 1)),
    }
}

/// Rules of every degree integrate random polynomials of that total
/// degree exactly.
pub fn quadrature_exactness() -> Outcome {
    let strategy = (
        any::<bool>(),
        0..=MAX_DEGREE,
        prop::collection::vec(-1.0f64..1.0, (MAX_DEGREE + 1) * (MAX_DEGREE + 1)),
    );
    run(strategy, |(tri, degree, coeffs)| {
        let kind = if tri {
            CellKind::Triangle
        } else {
            CellKind::Quadrilateral
        };
        let rule = quadrature(kind, degree).unwrap();
        let terms: Vec<(u32, u32, f64)> = (0..=degree as u32)
            .flat_map(|a| (0..=degree as u32 - a).map(move |b| (a, b)))
            .map(|(a, b)| (a, b, coeffs[(a as usize) * (MAX_DEGREE + 1) + b as usize]))
            .collect();
        let exact: f64 = terms
            .iter()
            .map(|&(a, b, c)| c * monomial_integral(kind, a, b))
            .sum();
        let approx: f64 = rule
            .iter()
            .map(|(p, w)| {
                w * terms
                    .iter()
                    .map(|&(a, b, c)| c * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum::<f64>()
            })
            .sum();
        let scale: f64 = terms.iter().map(|t| t.2.abs()).sum::<f64>().max(1.0);
        prop_assert!(
            (approx - exact).abs() <= 1e-13 * scale,
            "{:?} degree {}: {} vs {}",
            kind,
            degree,
            approx,
            exact
        );
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
        Ok(())
    })
}

const ALL_ELEMENTS: [(bool, usize); 5] = [(true, 1), (true, 2), (true, 3), (false, 1), (false, 2)];

/// Nodal basis: Kronecker property at the nodes, partition of unity and
/// reproduction of linear functions at random points.
pub fn basis_properties() -> Outcome {
    let strategy = (0..ALL_ELEMENTS.len(), 0.0f64..1.0, 0.0f64..1.0);
    run(strategy, |(e, s, t)| {
        let (simplex, degree) = ALL_ELEMENTS[e];
        let spec = if simplex {
            ElementSpec::p(degree)
        } else {
            ElementSpec::q(degree)
        };
        let el = ReferenceElement::new(spec);
        // Fold the unit square onto the reference triangle.
        let p = if simplex && s + t > 1.0 {
            [1.0 - s, 1.0 - t]
        } else {
            [s, t]
        };
        let phi = el.eval_values(p);
        let grads = el.eval_gradients(p);
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let gsum = grads
            .iter()
            .fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
        prop_assert!(gsum[0].abs() < 1e-10 && gsum[1].abs() < 1e-10);
        let x: f64 = el.nodes.iter().zip(&phi).map(|(n, f)| n[0] * f).sum();
        let y: f64 = el.nodes.iter().zip(&phi).map(|(n, f)| n[1] * f).sum();
        prop_assert!((x - p[0]).abs() < 1e-12 && (y - p[1]).abs() < 1e-12);
        for (j, &node) in el.nodes.iter().enumerate() {
            let at = el.eval_values(node);
            for (i, v) in at.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - delta).abs() < 1e-12, "phi_{}(node {}) = {}", i, j, v);
            }
        }
        Ok(())
    })
}

/// Every suite with its name.
pub fn all() -> Vec<(&'static str, Outcome)> {
    vec![
        ("projection idempotence", projection_idempotent()),
        ("nodal Lipschitz bound", projection_lipschitz()),
        ("(v+ + v-)+ = v+", projection_shift()),
        ("per-node monotonicity", nodal_monotonicity()),
        (
            "penalty PSD and linear kernel",
            penalty_psd_and_linear_kernel(),
        ),
        ("s-control ratio", s_control()),
        ("lumped/L2 norm equivalence", norm_equivalence()),
        ("quadrature exactness", quadrature_exactness()),
        ("basis delta and partition of unity", basis_properties()),
    ]
}
