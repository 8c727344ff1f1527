//! Error norms, convergence rates, line sampling and bound audits.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::assembly::ProblemSpec;
use crate::error::{Error, Result};
use crate::fe_space::{evaluate, quadrature, DofMap, Tabulation};
use crate::linalg::CsrMatrix;
use crate::mesh::Point;
use crate::problems::ExactSolution;
use crate::scalar::Scalar;

/// Default number of samples along a cross-section.
pub const SECTION_SAMPLES: usize = 10_000;

fn to_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// Integrates `(e^2, grad e^T D grad e)` for `e = u - u_h` cellwise with the
/// default quadrature degree `2k + 2`.
fn error_integrals(
    dofs: &DofMap,
    coeffs: &[f64],
    exact: &ExactSolution,
    diffusion: Option<&ProblemSpec>,
) -> Result<(f64, f64)> {
    let mesh = dofs.mesh();
    let rule = quadrature(mesh.family.cell_kind(), dofs.spec().quadrature_degree())?;
    let tab = Tabulation::new(&dofs.element, &rule.points);
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..mesh.cells.len() {
        let map = mesh.affine_map(c);
        let det = map.det.abs();
        let idx = dofs.cell_dofs(c);
        for (q, (r, w)) in rule.iter().enumerate() {
            let x = map.to_physical(r);
            let mut uh = 0.0;
            let mut gh = [0.0; 2];
            for ((&d, &phi), &gr) in idx.iter().zip(tab.values_at(q)).zip(tab.gradients_at(q)) {
                uh += coeffs[d] * phi;
                let g = map.push_gradient(gr);
                gh[0] += coeffs[d] * g[0];
                gh[1] += coeffs[d] * g[1];
            }
            let e = (exact.value)(x) - uh;
            l2 += w * det * e * e;
            if let Some(spec) = diffusion {
                let gu = (exact.gradient)(x);
                let ge = [gu[0] - gh[0], gu[1] - gh[1]];
                let d = (spec.diffusion)(x);
                let dge = [
                    d[0][0] * ge[0] + d[0][1] * ge[1],
                    d[1][0] * ge[0] + d[1][1] * ge[1],
                ];
                h1 += w * det * (ge[0] * dge[0] + ge[1] * dge[1]);
            }
        }
    }
    Ok((l2, h1))
}

/// `||u - u_h||_{L^2}`.
pub fn error_l2<S: Scalar>(dofs: &DofMap, u_h: &[S], exact: &ExactSolution) -> Result<f64> {
    Ok(error_integrals(dofs, &to_f64(u_h), exact, None)?.0.sqrt())
}

/// `sqrt(||D^{1/2} grad(u - u_h)||^2 + mu ||u - u_h||^2 + J(u_h, u_h))`.
/// The penalty term only involves `u_h` since the exact solution has no
/// gradient jumps.
pub fn error_energy<S: Scalar>(
    dofs: &DofMap,
    problem: &ProblemSpec,
    cip: &CsrMatrix<S>,
    u_h: &[S],
    exact: &ExactSolution,
) -> Result<f64> {
    let (l2, h1) = error_integrals(dofs, &to_f64(u_h), exact, Some(problem))?;
    let j = cip.bilinear(u_h, u_h).to_f64_lossy().max(0.0);
    Ok((h1 + problem.reaction * l2 + j).sqrt())
}

/// `sqrt(sum_i sigma_i v_i^2)`.
pub fn norm_s<S: Scalar>(sigma: &[S], v: &[S]) -> f64 {
    sigma
        .iter()
        .zip(v)
        .map(|(&s, &x)| (s * x * x).to_f64_lossy())
        .sum::<f64>()
        .sqrt()
}

/// Rates `ln(e_{i-1}/e_i) / ln(N_i/N_{i-1})`; `None` for the first entry
/// and wherever an error is zero or non-finite.
pub fn eoc(errors: &[f64], ns: &[usize]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let (a, b) = (errors[i - 1], errors[i]);
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return None;
            }
            Some((a / b).ln() / (ns[i] as f64 / ns[i - 1] as f64).ln())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `None` when the fixed-point iteration did not converge.
    pub iterations: Option<usize>,
    pub err_l2: f64,
    pub eoc_l2: Option<f64>,
    pub err_energy: f64,
    pub eoc_energy: Option<f64>,
    pub norm_s_minus: f64,
    pub eoc_s: Option<f64>,
}

/// Fills the rate columns of a table ordered by increasing `N`.
pub fn fill_rates(rows: &mut [ConvergenceRow]) {
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let l2 = eoc(&rows.iter().map(|r| r.err_l2).collect::<Vec<_>>(), &ns);
    let en = eoc(&rows.iter().map(|r| r.err_energy).collect::<Vec<_>>(), &ns);
    let s = eoc(
        &rows.iter().map(|r| r.norm_s_minus).collect::<Vec<_>>(),
        &ns,
    );
    for (i, r) in rows.iter_mut().enumerate() {
        r.eoc_l2 = l2[i];
        r.eoc_energy = en[i];
        r.eoc_s = s[i];
    }
}

/// Straight line through the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Line {
    /// `y = x`.
    Diagonal,
    /// `y = 1 - x`.
    AntiDiagonal,
    /// `x = c`.
    Vertical(f64),
    /// `y = c`.
    Horizontal(f64),
    /// `point + t direction`.
    Parametric { point: Point, direction: Point },
}

impl Line {
    fn point_direction(&self) -> (Point, Point) {
        match *self {
            Line::Diagonal => ([0.0, 0.0], [1.0, 1.0]),
            Line::AntiDiagonal => ([0.0, 1.0], [1.0, -1.0]),
            Line::Vertical(c) => ([c, 0.0], [0.0, 1.0]),
            Line::Horizontal(c) => ([0.0, c], [1.0, 0.0]),
            Line::Parametric { point, direction } => (point, direction),
        }
    }

    /// Short label for file names.
    pub fn tag(&self) -> String {
        match *self {
            Line::Diagonal => "diag".into(),
            Line::AntiDiagonal => "antidiag".into(),
            Line::Vertical(c) => format!("x{c}"),
            Line::Horizontal(c) => format!("y{c}"),
            Line::Parametric { .. } => "line".into(),
        }
    }

    /// Segment of the line inside the closed unit square (Liang-Barsky).
    pub fn clip_to_domain(&self) -> Result<(Point, Point)> {
        let (p, d) = self.point_direction();
        if d[0] == 0.0 && d[1] == 0.0 {
            return Err(Error::InvalidArgument("line direction is zero".into()));
        }
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            if d[k] == 0.0 {
                if p[k] < -1e-14 || p[k] > 1.0 + 1e-14 {
                    return Err(Error::EmptyIntersection);
                }
            } else {
                let (a, b) = ((0.0 - p[k]) / d[k], (1.0 - p[k]) / d[k]);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        if t0 > t1 + 1e-14 {
            return Err(Error::EmptyIntersection);
        }
        let at = |t: f64| {
            [
                (p[0] + t * d[0]).clamp(0.0, 1.0),
                (p[1] + t * d[1]).clamp(0.0, 1.0),
            ]
        };
        Ok((at(t0), at(t1)))
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Line::Diagonal => write!(f, "y=x"),
            Line::AntiDiagonal => write!(f, "y=1-x"),
            Line::Vertical(c) => write!(f, "x={c}"),
            Line::Horizontal(c) => write!(f, "y={c}"),
            Line::Parametric { point, direction } => write!(
                f,
                "({},{})+t({},{})",
                point[0], point[1], direction[0], direction[1]
            ),
        }
    }
}

impl FromStr for Line {
    type Err = Error;

    /// Accepts `y=x`, `y=1-x`, `x=<c>` and `y=<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidArgument(format!("cannot parse line `{s}`"));
        match s.as_str() {
            "y=x" => Ok(Line::Diagonal),
            "y=1-x" => Ok(Line::AntiDiagonal),
            _ => {
                let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
                let c: f64 = rhs.parse().map_err(|_| bad())?;
                match lhs {
                    "x" => Ok(Line::Vertical(c)),
                    "y" => Ok(Line::Horizontal(c)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionSample {
    /// Arc length from the start of the clipped segment.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossSection {
    pub line: Line,
    pub samples: Vec<SectionSample>,
}

/// `n` equidistant samples of a finite element function along the part of
/// `line` inside the domain, endpoints included.
pub fn cross_section<S: Scalar>(
    dofs: &DofMap,
    coeffs: &[S],
    line: Line,
    n: usize,
) -> Result<CrossSection> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a cross-section needs at least 2 samples".into(),
        ));
    }
    let (a, b) = line.clip_to_domain()?;
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let samples = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            Ok(SectionSample {
                t: s * len,
                x: p[0],
                y: p[1],
                value: evaluate(dofs, coeffs, p)?.to_f64_lossy(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CrossSection { line, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsAudit {
    pub nodal_min: f64,
    pub nodal_max: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub samples: usize,
}

impl BoundsAudit {
    pub fn nodal_within(&self, kappa: f64) -> bool {
        self.nodal_min >= 0.0 && self.nodal_max <= kappa
    }

    pub fn sampled_within(&self, kappa: f64, tol: f64) -> bool {
        self.sampled_min >= -tol && self.sampled_max <= kappa + tol
    }
}

/// Nodal extrema of `coeffs` and extrema over `samples` random points
/// drawn from a generator seeded with `seed`.
pub fn bounds_audit<S: Scalar>(
    dofs: &DofMap,
    coeffs: &[S],
    samples: usize,
    seed: u64,
) -> Result<BoundsAudit> {
    let (nodal_min, nodal_max) = coeffs
        .iter()
        .map(|x| x.to_f64_lossy())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let p = [rng.gen::<f64>(), rng.gen::<f64>()];
        let v = evaluate(dofs, coeffs, p)?.to_f64_lossy();
        smin = smin.min(v);
        smax = smax.max(v);
    }
    Ok(BoundsAudit {
        nodal_min,
        nodal_max,
        sampled_min: smin,
        sampled_max: smax,
        samples,
    })
}
