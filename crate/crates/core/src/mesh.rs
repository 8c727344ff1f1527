//! Structured meshes of the unit square.
//!
//! Four families are provided, all with `N x N` vertices on a uniform grid of
//! spacing `h = 1/(N-1)`:
//!
//! * `tri-uniform`: every square split by its lower-left/upper-right diagonal,
//! * `tri-alt`: the diagonal direction alternates checkerboard-wise,
//! * `tri-perturbed`: `tri-uniform` with every interior vertex of odd parity
//!   shifted `0.45 h` to the right (obtuse, non-Delaunay triangles),
//! * `quad`: the squares themselves.
//!
//! Cells are affine images of a reference element (unit right triangle or
//! unit square), which is what every other module relies on.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance used for reference-coordinate containment tests and boundary
/// detection.
pub const GEOM_TOL: f64 = 1e-12;

/// Shift applied to odd-parity interior vertices of the perturbed family,
/// in units of the grid spacing.
pub const PERTURBATION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum MeshFamily {
    TriAlt,
    TriUniform,
    TriPerturbed,
    Quad,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 4] = [
        MeshFamily::TriAlt,
        MeshFamily::TriUniform,
        MeshFamily::TriPerturbed,
        MeshFamily::Quad,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            MeshFamily::TriAlt => "tri-alt",
            MeshFamily::TriUniform => "tri-uniform",
            MeshFamily::TriPerturbed => "tri-perturbed",
            MeshFamily::Quad => "quad",
        }
    }

    pub fn cell_kind(self) -> CellKind {
        match self {
            MeshFamily::Quad => CellKind::Quadrilateral,
            _ => CellKind::Triangle,
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::InvalidMeshFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CellKind {
    Triangle,
    Quadrilateral,
}

impl CellKind {
    pub fn num_vertices(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Quadrilateral => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub kind: CellKind,
    /// Counter-clockwise vertex ids. For quadrilaterals the order is
    /// lower-left, lower-right, upper-right, upper-left in reference terms.
    pub vertices: Vec<usize>,
    /// Diameter `h_K` (longest vertex-to-vertex distance).
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: [usize; 2],
    /// Lower cell id.
    pub left: usize,
    /// Higher cell id, `None` on the boundary.
    pub right: Option<usize>,
    pub length: f64,
    /// Unit normal pointing from `left` towards `right` (outward on the
    /// boundary).
    pub normal: Point,
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub family: MeshFamily,
    /// Grid points per side.
    pub n: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    /// Facet ids of each cell, in local edge order `(v0,v1), (v1,v2), ...`.
    pub cell_facets: Vec<Vec<usize>>,
    /// Cells touching each vertex, ascending.
    pub vertex_cells: Vec<Vec<usize>>,
    buckets: BucketGrid,
}

/// Affine map `x = origin + B [xi, eta]` of one cell.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Point,
    /// Columns are the images of the reference axes.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `B^{-1}`.
    pub inv: [[f64; 2]; 2],
}

impl AffineMap {
    fn new(origin: Point, e1: Point, e2: Point) -> Self {
        let jac = [[e1[0], e2[0]], [e1[1], e2[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        AffineMap {
            origin,
            jac,
            det,
            inv,
        }
    }

    pub fn to_physical(&self, r: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, p: Point) -> Point {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Maps a reference gradient to a physical one: `B^{-T} g`.
    #[inline]
    pub fn push_gradient(&self, g: Point) -> Point {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Whether reference coordinates lie in the closed reference element.
pub fn reference_contains(kind: CellKind, r: Point, tol: f64) -> bool {
    match kind {
        CellKind::Triangle => r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol,
        CellKind::Quadrilateral => {
            r[0] >= -tol && r[1] >= -tol && r[0] <= 1.0 + tol && r[1] <= 1.0 + tol
        }
    }
}

pub fn in_closed_domain(p: Point) -> bool {
    p[0].is_finite()
        && p[1].is_finite()
        && p[0] >= -GEOM_TOL
        && p[0] <= 1.0 + GEOM_TOL
        && p[1] >= -GEOM_TOL
        && p[1] <= 1.0 + GEOM_TOL
}

pub fn on_boundary(p: Point) -> bool {
    p[0].abs() <= GEOM_TOL
        || (1.0 - p[0]).abs() <= GEOM_TOL
        || p[1].abs() <= GEOM_TOL
        || (1.0 - p[1]).abs() <= GEOM_TOL
}

#[derive(Debug, Clone)]
struct BucketGrid {
    per_side: usize,
    cells: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn bucket_index(&self, t: f64) -> usize {
        let k = (t * self.per_side as f64).floor();
        (k.max(0.0) as usize).min(self.per_side - 1)
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let i = self.bucket_index(p[0]);
        let j = self.bucket_index(p[1]);
        &self.cells[j * self.per_side + i]
    }
}

impl Mesh {
    /// Builds one of the structured mesh families with `n` points per side.
    pub fn structured(family: MeshFamily, n: usize) -> Result<Mesh> {
        if n < 3 {
            return Err(Error::InvalidResolution(n));
        }
        let h = 1.0 / (n - 1) as f64;
        let vid = |i: usize, j: usize| j * n + i;

        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let mut x = i as f64 * h;
                let y = j as f64 * h;
                let interior = i > 0 && j > 0 && i < n - 1 && j < n - 1;
                if family == MeshFamily::TriPerturbed && interior && (i + j) % 2 == 1 {
                    x += PERTURBATION * h;
                }
                // Exact boundary coordinates.
                if i == n - 1 {
                    x = 1.0;
                }
                vertices.push([x, if j == n - 1 { 1.0 } else { y }]);
            }
        }

        let mut cell_verts: Vec<Vec<usize>> = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let ll = vid(i, j);
                let lr = vid(i + 1, j);
                let ur = vid(i + 1, j + 1);
                let ul = vid(i, j + 1);
                match family {
                    MeshFamily::Quad => cell_verts.push(vec![ll, lr, ur, ul]),
                    MeshFamily::TriUniform | MeshFamily::TriPerturbed => {
                        cell_verts.push(vec![ll, lr, ur]);
                        cell_verts.push(vec![ll, ur, ul]);
                    }
                    MeshFamily::TriAlt => {
                        if (i + j) % 2 == 0 {
                            cell_verts.push(vec![ll, lr, ur]);
                            cell_verts.push(vec![ll, ur, ul]);
                        } else {
                            cell_verts.push(vec![ll, lr, ul]);
                            cell_verts.push(vec![lr, ur, ul]);
                        }
                    }
                }
            }
        }

        let kind = family.cell_kind();
        let mut cells = Vec::with_capacity(cell_verts.len());
        for (c, vs) in cell_verts.into_iter().enumerate() {
            let pts: Vec<Point> = vs.iter().map(|&v| vertices[v]).collect();
            let area2 = match kind {
                CellKind::Triangle => cross(pts[0], pts[1], pts[2]),
                CellKind::Quadrilateral => {
                    cross(pts[0], pts[1], pts[2]) + cross(pts[0], pts[2], pts[3])
                }
            };
            if !(area2 > 0.0) {
                return Err(Error::DegenerateCell(c));
            }
            let mut diameter: f64 = 0.0;
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    diameter = diameter.max(dist(pts[a], pts[b]));
                }
            }
            cells.push(Cell {
                kind,
                vertices: vs,
                diameter,
            });
        }

        let (facets, cell_facets) = build_facets(&vertices, &cells);

        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in &cell.vertices {
                vertex_cells[v].push(c);
            }
        }

        let buckets = build_buckets(&vertices, &cells, n - 1);

        Ok(Mesh {
            family,
            n,
            vertices,
            cells,
            facets,
            cell_facets,
            vertex_cells,
            buckets,
        })
    }

    /// Grid spacing `1/(N-1)`.
    pub fn grid_spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn num_interior_facets(&self) -> usize {
        self.facets.iter().filter(|f| f.is_interior()).count()
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    /// Affine map of cell `c` from its reference element.
    pub fn affine_map(&self, c: usize) -> AffineMap {
        let vs = &self.cells[c].vertices;
        let p0 = self.vertices[vs[0]];
        let sub = |a: Point| [a[0] - p0[0], a[1] - p0[1]];
        match self.cells[c].kind {
            CellKind::Triangle => {
                AffineMap::new(p0, sub(self.vertices[vs[1]]), sub(self.vertices[vs[2]]))
            }
            CellKind::Quadrilateral => {
                AffineMap::new(p0, sub(self.vertices[vs[1]]), sub(self.vertices[vs[3]]))
            }
        }
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let m = self.affine_map(c);
        match self.cells[c].kind {
            CellKind::Triangle => 0.5 * m.det,
            CellKind::Quadrilateral => m.det,
        }
    }

    /// Incircle diameter `rho_K` (twice the inradius).
    pub fn cell_inner_diameter(&self, c: usize) -> f64 {
        let pts = self.cell_points(c);
        let perimeter: f64 = (0..pts.len())
            .map(|a| dist(pts[a], pts[(a + 1) % pts.len()]))
            .sum();
        match self.cells[c].kind {
            CellKind::Triangle => 4.0 * self.cell_area(c) / perimeter,
            // Axis-aligned rectangles: the shorter side.
            CellKind::Quadrilateral => dist(pts[0], pts[1]).min(dist(pts[0], pts[3])),
        }
    }

    /// `max_K h_K / min_K h_K`.
    pub fn quasi_uniformity(&self) -> f64 {
        let (lo, hi) = self
            .cells
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
                (lo.min(c.diameter), hi.max(c.diameter))
            });
        hi / lo
    }

    /// `max_K h_K / rho_K`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| self.cells[c].diameter / self.cell_inner_diameter(c))
            .fold(0.0, f64::max)
    }

    /// Interior angles of a cell, in radians.
    pub fn cell_angles(&self, c: usize) -> Vec<f64> {
        let pts = self.cell_points(c);
        let m = pts.len();
        (0..m)
            .map(|a| {
                let p = pts[a];
                let prev = pts[(a + m - 1) % m];
                let next = pts[(a + 1) % m];
                let u = [next[0] - p[0], next[1] - p[1]];
                let v = [prev[0] - p[0], prev[1] - p[1]];
                let cosang =
                    (u[0] * v[0] + u[1] * v[1]) / ((u[0].hypot(u[1])) * (v[0].hypot(v[1])));
                cosang.clamp(-1.0, 1.0).acos()
            })
            .collect()
    }

    /// Minimum and maximum interior angle over all cells, in degrees.
    pub fn angle_range_degrees(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in 0..self.cells.len() {
            for a in self.cell_angles(c) {
                lo = lo.min(a.to_degrees());
                hi = hi.max(a.to_degrees());
            }
        }
        (lo, hi)
    }

    /// Number of interior edges between two triangles that fail the local
    /// Delaunay (empty circumcircle) test, i.e. whose opposite angles sum to
    /// more than `pi`.
    pub fn delaunay_violations(&self) -> usize {
        if self.family.cell_kind() != CellKind::Triangle {
            return 0;
        }
        let opposite_angle = |c: usize, edge: [usize; 2]| -> f64 {
            let vs = &self.cells[c].vertices;
            let local = vs
                .iter()
                .position(|v| !edge.contains(v))
                .expect("triangle has a vertex off the edge");
            self.cell_angles(c)[local]
        };
        self.facets
            .iter()
            .filter_map(|f| f.right.map(|r| (f, r)))
            .filter(|(f, r)| {
                opposite_angle(f.left, f.vertices) + opposite_angle(*r, f.vertices)
                    > std::f64::consts::PI + 1e-12
            })
            .count()
    }

    /// Reference coordinates of `p` in cell `c`.
    pub fn to_reference(&self, c: usize, p: Point) -> Point {
        self.affine_map(c).to_reference(p)
    }

    /// Containing cell (lowest id on ties) and reference coordinates.
    pub fn locate_point(&self, p: Point) -> Result<(usize, Point)> {
        if !in_closed_domain(p) {
            return Err(Error::PointOutsideDomain(p));
        }
        for &c in self.buckets.candidates(p) {
            let r = self.to_reference(c, p);
            if reference_contains(self.cells[c].kind, r, GEOM_TOL) {
                return Ok((c, r));
            }
        }
        // Roundoff near bucket borders: fall back to a full scan.
        (0..self.cells.len())
            .find_map(|c| {
                let r = self.to_reference(c, p);
                reference_contains(self.cells[c].kind, r, 1e-10).then_some((c, r))
            })
            .ok_or(Error::PointOutsideDomain(p))
    }

    /// All cells whose closure contains `p` (the patch `omega` of a node).
    pub fn vertex_patch(&self, p: Point) -> Result<Vec<usize>> {
        if !in_closed_domain(p) {
            return Err(Error::PointOutsideDomain(p));
        }
        let mut cells: Vec<usize> = self
            .buckets
            .candidates(p)
            .iter()
            .copied()
            .filter(|&c| reference_contains(self.cells[c].kind, self.to_reference(c, p), 1e-10))
            .collect();
        cells.sort_unstable();
        Ok(cells)
    }
}

fn build_facets(vertices: &[Point], cells: &[Cell]) -> (Vec<Facet>, Vec<Vec<usize>>) {
    let mut by_key: HashMap<(usize, usize), usize> = HashMap::new();
    let mut facets: Vec<Facet> = Vec::new();
    let mut cell_facets = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let m = cell.vertices.len();
        let mut local = Vec::with_capacity(m);
        for e in 0..m {
            let a = cell.vertices[e];
            let b = cell.vertices[(e + 1) % m];
            let key = (a.min(b), a.max(b));
            let id = match by_key.get(&key) {
                Some(&id) => {
                    debug_assert!(facets[id].right.is_none(), "non-conforming facet");
                    facets[id].right = Some(c);
                    id
                }
                None => {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let length = dist(pa, pb);
                    // Counter-clockwise cells: (dy, -dx) points out of `c`.
                    let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                    facets.push(Facet {
                        vertices: [key.0, key.1],
                        left: c,
                        right: None,
                        length,
                        normal,
                    });
                    by_key.insert(key, facets.len() - 1);
                    facets.len() - 1
                }
            };
            local.push(id);
        }
        cell_facets.push(local);
    }
    (facets, cell_facets)
}

fn build_buckets(vertices: &[Point], cells: &[Cell], per_side: usize) -> BucketGrid {
    let per_side = per_side.max(1);
    let mut grid = BucketGrid {
        per_side,
        cells: vec![Vec::new(); per_side * per_side],
    };
    for (c, cell) in cells.iter().enumerate() {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &v in &cell.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(vertices[v][d]);
                hi[d] = hi[d].max(vertices[v][d]);
            }
        }
        let i0 = grid.bucket_index(lo[0] - 1e-9);
        let i1 = grid.bucket_index(hi[0] + 1e-9);
        let j0 = grid.bucket_index(lo[1] - 1e-9);
        let j1 = grid.bucket_index(hi[1] + 1e-9);
        for j in j0..=j1 {
            for i in i0..=i1 {
                grid.cells[j * per_side + i].push(c);
            }
        }
    }
    grid
}

/// Nodal values of the mesh function: the average diameter of the cells
/// around each vertex. Extended to the whole domain by the piecewise-linear
/// (bilinear on quadrilaterals) interpolation of these values.
#[derive(Debug, Clone)]
pub struct MeshFunction {
    pub values: Vec<f64>,
}

impl MeshFunction {
    pub fn new(mesh: &Mesh) -> Self {
        let values = mesh
            .vertex_cells
            .iter()
            .map(|cells| {
                cells.iter().map(|&c| mesh.cells[c].diameter).sum::<f64>() / cells.len() as f64
            })
            .collect();
        MeshFunction { values }
    }

    /// Value inside cell `c` at reference coordinates `r`.
    pub fn eval_in_cell(&self, mesh: &Mesh, c: usize, r: Point) -> f64 {
        let vs = &mesh.cells[c].vertices;
        let (x, y) = (r[0], r[1]);
        match mesh.cells[c].kind {
            CellKind::Triangle => {
                (1.0 - x - y) * self.values[vs[0]] + x * self.values[vs[1]] + y * self.values[vs[2]]
            }
            CellKind::Quadrilateral => {
                (1.0 - x) * (1.0 - y) * self.values[vs[0]]
                    + x * (1.0 - y) * self.values[vs[1]]
                    + x * y * self.values[vs[2]]
                    + (1.0 - x) * y * self.values[vs[3]]
            }
        }
    }

    pub fn eval(&self, mesh: &Mesh, p: Point) -> Result<f64> {
        let (c, r) = mesh.locate_point(p)?;
        Ok(self.eval_in_cell(mesh, c, r))
    }
}

/// Convenience wrapper matching [`MeshFunction::new`].
pub fn mesh_function(mesh: &Mesh) -> MeshFunction {
    MeshFunction::new(mesh)
}
