use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Result;
use crate::fe_space::element::{ElementSpec, ReferenceElement};
use crate::mesh::{on_boundary, Mesh, Point};

/// Snapping resolution used for the lexicographic node numbering.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    /// Facet id and position along the facet oriented from its lower to its
    /// higher vertex id.
    Edge(usize, usize),
    Interior(usize, usize),
}

/// Global Lagrange degrees of freedom of one element family on one mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    mesh: Arc<Mesh>,
    pub element: ReferenceElement,
    /// Lagrange node of each global dof.
    pub coords: Vec<Point>,
    /// Whether the node lies on the boundary of the unit square.
    pub boundary: Vec<bool>,
    /// `cell_dofs[c * n_loc + i]` = global dof of local node `i` of cell `c`.
    cell_dofs: Vec<usize>,
    /// Cells containing each dof, ascending.
    pub dof_cells: Vec<Vec<usize>>,
    num_interior: usize,
}

impl DofMap {
    pub fn new(mesh: Arc<Mesh>, spec: ElementSpec) -> Result<Self> {
        spec.check_mesh(mesh.family)?;
        let element = ReferenceElement::new(spec);
        let n_loc = element.num_dofs();
        let nv = element.num_vertices();
        let per_edge = element.nodes_per_edge();

        let mut ids: HashMap<NodeKey, usize> = HashMap::new();
        let mut keys: Vec<NodeKey> = Vec::new();
        let mut coords: Vec<Point> = Vec::new();
        let mut local_to_tmp = vec![0usize; mesh.cells.len() * n_loc];

        let mut intern = |key: NodeKey, coord: &dyn Fn() -> Point| -> usize {
            *ids.entry(key).or_insert_with(|| {
                keys.push(key);
                coords.push(coord());
                keys.len() - 1
            })
        };

        for (c, cell) in mesh.cells.iter().enumerate() {
            let map = mesh.affine_map(c);
            let slot = &mut local_to_tmp[c * n_loc..(c + 1) * n_loc];
            for (i, &v) in cell.vertices.iter().enumerate() {
                slot[i] = intern(NodeKey::Vertex(v), &|| mesh.vertices[v]);
            }
            for e in 0..nv {
                let facet = mesh.cell_facets[c][e];
                let (a, b) = (cell.vertices[e], cell.vertices[(e + 1) % nv]);
                let forward = a < b;
                let (lo, hi) = (a.min(b), a.max(b));
                for s in 0..per_edge {
                    let canon = if forward { s } else { per_edge - 1 - s };
                    let t = (canon + 1) as f64 / (per_edge + 1) as f64;
                    let (pa, pb) = (mesh.vertices[lo], mesh.vertices[hi]);
                    slot[element.edge_node(e, s)] = intern(NodeKey::Edge(facet, canon), &|| {
                        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
                    });
                }
            }
            for (q, local) in element.interior_nodes().enumerate() {
                let r = element.nodes[local];
                slot[local] = intern(NodeKey::Interior(c, q), &|| map.to_physical(r));
            }
        }

        // Lexicographic numbering on snapped coordinates (x first, then y).
        let snap = |t: f64| (t / SNAP).round() as i64;
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by_key(|&i| (snap(coords[i][0]), snap(coords[i][1])));
        let mut renumber = vec![0usize; coords.len()];
        for (new, &old) in order.iter().enumerate() {
            renumber[old] = new;
        }
        let coords: Vec<Point> = order.iter().map(|&old| coords[old]).collect();
        let cell_dofs: Vec<usize> = local_to_tmp.iter().map(|&t| renumber[t]).collect();
        let boundary: Vec<bool> = coords.iter().map(|&p| on_boundary(p)).collect();
        let num_interior = boundary.iter().filter(|b| !**b).count();

        let mut dof_cells = vec![Vec::new(); coords.len()];
        for c in 0..mesh.cells.len() {
            for &d in &cell_dofs[c * n_loc..(c + 1) * n_loc] {
                dof_cells[d].push(c);
            }
        }

        Ok(DofMap {
            mesh,
            element,
            coords,
            boundary,
            cell_dofs,
            dof_cells,
            num_interior,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn spec(&self) -> ElementSpec {
        self.element.spec
    }

    pub fn num_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn num_interior(&self) -> usize {
        self.num_interior
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.element.num_dofs()
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        let n = self.element.num_dofs();
        &self.cell_dofs[c * n..(c + 1) * n]
    }

    /// Indices of interior (non-boundary) dofs, ascending.
    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs())
            .filter(|&i| !self.boundary[i])
            .collect()
    }

    /// A cell containing dof `i` and the node's reference coordinates there.
    pub fn node_in_cell(&self, i: usize) -> (usize, Point) {
        let c = self.dof_cells[i][0];
        let local = self
            .cell_dofs(c)
            .iter()
            .position(|&d| d == i)
            .expect("dof belongs to its cell");
        (c, self.element.nodes[local])
    }
}
