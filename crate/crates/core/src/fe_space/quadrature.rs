//! Quadrature rules on the reference interval, triangle and square.
//!
//! Reference elements: `[0,1]`, the triangle with vertices `(0,0), (1,0),
//! (0,1)` (area 1/2) and the unit square.

use crate::error::{Error, Result};
use crate::mesh::{CellKind, Point};

pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomials of total degree up to this are integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]` as `(nodes, weights)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Initial guess (Tricomi) followed by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on `[0, 1]` exact for polynomials of the given degree.
pub fn interval_rule(degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        points: x.into_iter().map(|t| [t, 0.0]).collect(),
        weights: w,
        degree: 2 * n - 1,
    }
}

/// Rule on the reference cell exact to `degree`.
pub fn quadrature(kind: CellKind, degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    Ok(match kind {
        CellKind::Quadrilateral => {
            let n = degree / 2 + 1;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    points.push([x[i], x[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
            QuadratureRule {
                points,
                weights,
                degree: 2 * n - 1,
            }
        }
        CellKind::Triangle => match degree {
            0 | 1 => QuadratureRule {
                points: vec![[1.0 / 3.0, 1.0 / 3.0]],
                weights: vec![0.5],
                degree: 1,
            },
            2 => QuadratureRule {
                points: vec![
                    [1.0 / 6.0, 1.0 / 6.0],
                    [2.0 / 3.0, 1.0 / 6.0],
                    [1.0 / 6.0, 2.0 / 3.0],
                ],
                weights: vec![1.0 / 6.0; 3],
                degree: 2,
            },
            _ => collapsed_triangle_rule(degree),
        },
    })
}

/// Duffy-collapsed tensor Gauss rule: `x = s`, `y = t (1 - s)` with Jacobian
/// `1 - s`, so the `s` direction needs one extra degree.
fn collapsed_triangle_rule(degree: usize) -> QuadratureRule {
    let ns = degree.div_ceil(2) + 1;
    let nt = degree / 2 + 1;
    let (xs, ws) = gauss_legendre(ns);
    let (xt, wt) = gauss_legendre(nt);
    let mut points = Vec::with_capacity(ns * nt);
    let mut weights = Vec::with_capacity(ns * nt);
    for (s, wsi) in xs.iter().zip(&ws) {
        for (t, wti) in xt.iter().zip(&wt) {
            points.push([*s, t * (1.0 - s)]);
            weights.push(wsi * wti * (1.0 - s));
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}
