//! Lagrange reference elements `P1..P3` on triangles and `Q1, Q2` on squares.
//!
//! Node layout on the reference cell: vertices first, then `k - 1`
//! equispaced nodes per edge walking from the edge's first to its second
//! vertex (edges `(v0,v1), (v1,v2), ...`), then interior nodes. The nodal
//! basis is obtained by inverting the monomial Vandermonde matrix.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseLu;
use crate::mesh::{CellKind, MeshFamily, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum ElementFamily {
    Simplex,
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct ElementSpec {
    pub family: ElementFamily,
    pub degree: usize,
}

impl ElementSpec {
    pub fn new(family: ElementFamily, degree: usize) -> Result<Self> {
        let max = match family {
            ElementFamily::Simplex => 3,
            ElementFamily::Tensor => 2,
        };
        if degree == 0 || degree > max {
            let p = if family == ElementFamily::Simplex {
                'p'
            } else {
                'q'
            };
            return Err(Error::InvalidElement(format!("{p}{degree}")));
        }
        Ok(ElementSpec { family, degree })
    }

    pub fn p(degree: usize) -> Self {
        Self::new(ElementFamily::Simplex, degree).expect("valid simplex degree")
    }

    pub fn q(degree: usize) -> Self {
        Self::new(ElementFamily::Tensor, degree).expect("valid tensor degree")
    }

    pub fn cell_kind(&self) -> CellKind {
        match self.family {
            ElementFamily::Simplex => CellKind::Triangle,
            ElementFamily::Tensor => CellKind::Quadrilateral,
        }
    }

    pub fn check_mesh(&self, family: MeshFamily) -> Result<()> {
        if family.cell_kind() != self.cell_kind() {
            return Err(Error::FamilyMismatch {
                element: self.to_string(),
                mesh: family.to_string(),
            });
        }
        Ok(())
    }

    /// Default volume/facet quadrature degree `2k + 2`.
    pub fn quadrature_degree(&self) -> usize {
        2 * self.degree + 2
    }
}

impl fmt::Display for ElementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.family {
            ElementFamily::Simplex => 'p',
            ElementFamily::Tensor => 'q',
        };
        write!(f, "{p}{}", self.degree)
    }
}

impl FromStr for ElementSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidElement(s.to_string());
        let lower = s.to_ascii_lowercase();
        let (fam, deg) = lower.split_at(1.min(lower.len()));
        let family = match fam {
            "p" => ElementFamily::Simplex,
            "q" => ElementFamily::Tensor,
            _ => return Err(bad()),
        };
        let degree: usize = deg.parse().map_err(|_| bad())?;
        ElementSpec::new(family, degree).map_err(|_| bad())
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub spec: ElementSpec,
    pub kind: CellKind,
    pub nodes: Vec<Point>,
    /// Exponents `(a, b)` of the monomials `x^a y^b` spanning the space.
    monomials: Vec<(i32, i32)>,
    /// `coeffs[m * n + i]`: coefficient of monomial `m` in basis function `i`.
    coeffs: Vec<f64>,
}

impl ReferenceElement {
    pub fn new(spec: ElementSpec) -> Self {
        let k = spec.degree;
        let kind = spec.cell_kind();
        let kf = k as f64;
        let verts: Vec<Point> = match kind {
            CellKind::Triangle => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            CellKind::Quadrilateral => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        let mut nodes = verts.clone();
        let nv = verts.len();
        for e in 0..nv {
            let (a, b) = (verts[e], verts[(e + 1) % nv]);
            for s in 1..k {
                let t = s as f64 / kf;
                nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        let mut monomials = Vec::new();
        match kind {
            CellKind::Triangle => {
                for i in 1..k {
                    for j in 1..k - i {
                        nodes.push([i as f64 / kf, j as f64 / kf]);
                    }
                }
                for a in 0..=k as i32 {
                    for b in 0..=(k as i32 - a) {
                        monomials.push((a, b));
                    }
                }
            }
            CellKind::Quadrilateral => {
                for j in 1..k {
                    for i in 1..k {
                        nodes.push([i as f64 / kf, j as f64 / kf]);
                    }
                }
                for a in 0..=k as i32 {
                    for b in 0..=k as i32 {
                        monomials.push((a, b));
                    }
                }
            }
        }
        let n = nodes.len();
        assert_eq!(n, monomials.len());
        // V[i][m] = monomial m at node i; basis coefficients solve V C = I.
        let mut v = vec![0.0; n * n];
        for (i, p) in nodes.iter().enumerate() {
            for (m, &(a, b)) in monomials.iter().enumerate() {
                v[i * n + m] = p[0].powi(a) * p[1].powi(b);
            }
        }
        let lu = DenseLu::new(n, v).expect("Lagrange nodes are unisolvent");
        let mut coeffs = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for i in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[i] = 1.0;
            let c = lu.solve(&e);
            for m in 0..n {
                coeffs[m * n + i] = c[m];
            }
        }
        ReferenceElement {
            spec,
            kind,
            nodes,
            monomials,
            coeffs,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.kind.num_vertices()
    }

    /// Nodes per edge excluding the vertices.
    pub fn nodes_per_edge(&self) -> usize {
        self.spec.degree - 1
    }

    /// Local index of the `s`-th node (0-based) on local edge `e`.
    pub fn edge_node(&self, e: usize, s: usize) -> usize {
        self.num_vertices() + e * self.nodes_per_edge() + s
    }

    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        self.num_vertices() * (1 + self.nodes_per_edge())..self.num_dofs()
    }

    /// Basis values at `p`.
    pub fn values(&self, p: Point, out: &mut [f64]) {
        let n = self.num_dofs();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (m, &(a, b)) in self.monomials.iter().enumerate() {
            let mv = p[0].powi(a) * p[1].powi(b);
            let row = &self.coeffs[m * n..(m + 1) * n];
            for i in 0..n {
                out[i] += row[i] * mv;
            }
        }
    }

    /// Reference gradients at `p`.
    pub fn gradients(&self, p: Point, out: &mut [Point]) {
        let n = self.num_dofs();
        out.iter_mut().for_each(|g| *g = [0.0, 0.0]);
        for (m, &(a, b)) in self.monomials.iter().enumerate() {
            let dx = if a > 0 {
                a as f64 * p[0].powi(a - 1) * p[1].powi(b)
            } else {
                0.0
            };
            let dy = if b > 0 {
                b as f64 * p[0].powi(a) * p[1].powi(b - 1)
            } else {
                0.0
            };
            let row = &self.coeffs[m * n..(m + 1) * n];
            for i in 0..n {
                out[i][0] += row[i] * dx;
                out[i][1] += row[i] * dy;
            }
        }
    }

    pub fn eval_values(&self, p: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.num_dofs()];
        self.values(p, &mut v);
        v
    }

    pub fn eval_gradients(&self, p: Point) -> Vec<Point> {
        let mut g = vec![[0.0; 2]; self.num_dofs()];
        self.gradients(p, &mut g);
        g
    }
}

/// Basis values and reference gradients tabulated at quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub num_dofs: usize,
    /// `values[q * num_dofs + i]`.
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
}

impl Tabulation {
    pub fn new(element: &ReferenceElement, points: &[Point]) -> Self {
        let n = element.num_dofs();
        let mut values = vec![0.0; points.len() * n];
        let mut gradients = vec![[0.0; 2]; points.len() * n];
        for (q, &p) in points.iter().enumerate() {
            element.values(p, &mut values[q * n..(q + 1) * n]);
            element.gradients(p, &mut gradients[q * n..(q + 1) * n]);
        }
        Tabulation {
            num_dofs: n,
            values,
            gradients,
        }
    }

    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.num_dofs..(q + 1) * self.num_dofs]
    }

    pub fn gradients_at(&self, q: usize) -> &[Point] {
        &self.gradients[q * self.num_dofs..(q + 1) * self.num_dofs]
    }
}
