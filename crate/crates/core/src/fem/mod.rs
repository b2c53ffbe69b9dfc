//! P1 finite elements on structured triangulations of the unit square.
//!
//! Dirichlet conditions hold on the vertical sides `x1 ∈ {0, 1}` and are
//! imposed by eliminating those nodes; the horizontal sides carry the Neumann
//! boundary. Free dofs are numbered with `x1` running fastest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, SparseMat, TripletBuilder};

/// Which part of the boundary an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Uniform `n × n` square mesh, each square split along its lower-left to
/// upper-right diagonal.
#[derive(Debug, Clone)]
pub struct TriMesh {
    n: usize,
    nodes: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
}

/// Build the `n × n` mesh of `(0,1)²`.
pub fn build_mesh(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one cell per side".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for k in 0..n {
        boundary.push(BoundaryEdge {
            nodes: [id(k, 0), id(k + 1, 0)],
            tag: BoundaryTag::Neumann,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(k, n), id(k + 1, n)],
            tag: BoundaryTag::Neumann,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(0, k), id(0, k + 1)],
            tag: BoundaryTag::Dirichlet,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(n, k), id(n, k + 1)],
            tag: BoundaryTag::Dirichlet,
        });
    }
    Ok(TriMesh {
        n,
        nodes,
        cells,
        boundary,
    })
}

impl TriMesh {
    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Node id of grid position `(i, j)`, `i` along `x1`.
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Whether the node lies on `x1 = 0` or `x1 = 1`.
    pub fn is_dirichlet(&self, node: usize) -> bool {
        let i = node % (self.n + 1);
        i == 0 || i == self.n
    }

    fn cell_geometry(&self, c: usize) -> (f64, [[f64; 2]; 3]) {
        let [a, b, d] = self.cells[c];
        let (pa, pb, pd) = (self.nodes[a], self.nodes[b], self.nodes[d]);
        let area = 0.5 * ((pb[0] - pa[0]) * (pd[1] - pa[1]) - (pd[0] - pa[0]) * (pb[1] - pa[1]));
        (area, [pa, pb, pd])
    }
}

/// P1 space on a mesh with the Dirichlet nodes removed.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: TriMesh,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: TriMesh) -> Self {
        let mut dof_of_node = vec![None; mesh.nodes.len()];
        let mut node_of_dof = Vec::new();
        for (node, slot) in dof_of_node.iter_mut().enumerate() {
            if !mesh.is_dirichlet(node) {
                *slot = Some(node_of_dof.len());
                node_of_dof.push(node);
            }
        }
        Self {
            mesh,
            dof_of_node,
            node_of_dof,
        }
    }

    /// Convenience: mesh and space in one step.
    pub fn unit_square(n: usize) -> Result<Self> {
        Ok(Self::new(build_mesh(n)?))
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Free dof count `N`.
    pub fn ndofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn node(&self, dof: usize) -> usize {
        self.node_of_dof[dof]
    }

    /// Coordinates of every free dof.
    pub fn dof_coords(&self) -> Vec<[f64; 2]> {
        self.node_of_dof.iter().map(|&v| self.mesh.nodes[v]).collect()
    }

    /// Expand free-dof values to all nodes (zero on the Dirichlet boundary).
    pub fn to_nodal(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.nodes.len()];
        for (d, &v) in values.iter().enumerate() {
            out[self.node_of_dof[d]] = v;
        }
        out
    }

    /// Nodal interpolant of `f` on free dofs.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.dof_coords().iter().map(|p| f(p[0], p[1])).collect()
    }
}

const MASS_REF: [[f64; 3]; 3] = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];

fn gradients(area: f64, p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [
            (p[j][1] - p[k][1]) / (2.0 * area),
            (p[k][0] - p[j][0]) / (2.0 * area),
        ];
    }
    g
}

/// Map from mesh nodes to matrix rows: free dofs, or every node.
enum Numbering<'a> {
    Free(&'a FeSpace),
    All(&'a TriMesh),
}

impl Numbering<'_> {
    fn mesh(&self) -> &TriMesh {
        match self {
            Numbering::Free(s) => &s.mesh,
            Numbering::All(m) => m,
        }
    }

    fn size(&self) -> usize {
        match self {
            Numbering::Free(s) => s.ndofs(),
            Numbering::All(m) => m.nodes.len(),
        }
    }

    fn index(&self, node: usize) -> Option<usize> {
        match self {
            Numbering::Free(s) => s.dof_of_node[node],
            Numbering::All(_) => Some(node),
        }
    }
}

fn assemble_cells(num: Numbering<'_>, element: impl Fn(f64, &[[f64; 2]; 3]) -> [[f64; 3]; 3]) -> SparseMat {
    let mesh = num.mesh();
    let size = num.size();
    let mut t = TripletBuilder::with_capacity(size, size, 9 * mesh.cells.len());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let (area, p) = mesh.cell_geometry(c);
        let ke = element(area, &p);
        for a in 0..3 {
            let Some(r) = num.index(cell[a]) else { continue };
            for b in 0..3 {
                if let Some(s) = num.index(cell[b]) {
                    t.push(r, s, ke[a][b]);
                }
            }
        }
    }
    t.build()
}

fn mass_element(area: f64, _: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] = area / 12.0 * MASS_REF[a][b];
        }
    }
    m
}

fn stiffness_element(coeff: &dyn Fn(f64, f64) -> f64) -> impl Fn(f64, &[[f64; 2]; 3]) -> [[f64; 3]; 3] + '_ {
    move |area, p| {
        let cx = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        let cy = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        let k = coeff(cx, cy) * area;
        let g = gradients(area, p);
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] = k * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        m
    }
}

/// `M_ij = ∫ φ_i φ_j dx` over free dofs.
pub fn assemble_mass(space: &FeSpace) -> SparseMat {
    assemble_cells(Numbering::Free(space), mass_element)
}

/// Mass matrix over every mesh node, boundary included.
pub fn assemble_mass_full(mesh: &TriMesh) -> SparseMat {
    assemble_cells(Numbering::All(mesh), mass_element)
}

/// `K_ij = ∫ κ ∇φ_i·∇φ_j dx` over free dofs, `κ` sampled at cell centroids.
pub fn assemble_stiffness(space: &FeSpace, coeff: &dyn Fn(f64, f64) -> f64) -> SparseMat {
    assemble_cells(Numbering::Free(space), stiffness_element(coeff))
}

/// Stiffness matrix over every mesh node, boundary included.
pub fn assemble_stiffness_full(mesh: &TriMesh, coeff: &dyn Fn(f64, f64) -> f64) -> SparseMat {
    assemble_cells(Numbering::All(mesh), stiffness_element(coeff))
}

/// `M^∂_ij = ∫_{∂D_N} φ_i φ_j ds` over free dofs.
pub fn assemble_boundary_mass(space: &FeSpace) -> SparseMat {
    let n = space.ndofs();
    let mut t = TripletBuilder::new(n, n);
    for e in space.mesh.boundary.iter().filter(|e| e.tag == BoundaryTag::Neumann) {
        let [a, b] = e.nodes;
        let (pa, pb) = (space.mesh.nodes[a], space.mesh.nodes[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let ids = [space.dof(a), space.dof(b)];
        for (r, &ir) in ids.iter().enumerate() {
            for (s, &is) in ids.iter().enumerate() {
                if let (Some(i), Some(j)) = (ir, is) {
                    t.push(i, j, len / 6.0 * if r == s { 2.0 } else { 1.0 });
                }
            }
        }
    }
    t.build()
}

/// `∫ f φ_i dx` by the three-point edge-midpoint rule on every cell.
pub fn assemble_load(space: &FeSpace, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndofs()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        let (area, p) = mesh.cell_geometry(c);
        let mid = |a: usize, b: usize| f(0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1]));
        let (f01, f12, f20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        // φ_a is 1/2 at the two midpoints on its edges and 0 at the third
        let contrib = [
            area / 6.0 * (f01 + f20),
            area / 6.0 * (f01 + f12),
            area / 6.0 * (f12 + f20),
        ];
        for a in 0..3 {
            if let Some(i) = space.dof(cell[a]) {
                out[i] += contrib[a];
            }
        }
    }
    out
}

/// `∫_{∂D_N} g φ_i ds` by two-point Gauss quadrature per edge.
pub fn assemble_boundary_load(space: &FeSpace, g: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let s = 0.5 / 3f64.sqrt();
    let mut out = vec![0.0; space.ndofs()];
    for e in space.mesh.boundary.iter().filter(|e| e.tag == BoundaryTag::Neumann) {
        let [a, b] = e.nodes;
        let (pa, pb) = (space.mesh.nodes[a], space.mesh.nodes[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let mut ca = 0.0;
        let mut cb = 0.0;
        for t in [0.5 - s, 0.5 + s] {
            let v = g(pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])) * 0.5 * len;
            ca += v * (1.0 - t);
            cb += v * t;
        }
        if let Some(i) = space.dof(a) {
            out[i] += ca;
        }
        if let Some(i) = space.dof(b) {
            out[i] += cb;
        }
    }
    out
}

/// L2 projection of `f` onto the free-dof space.
pub fn l2_project(space: &FeSpace, mass: &SparseMat, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let b = assemble_load(space, f);
    conjugate_gradient(mass, &b, 1e-14, 10 * space.ndofs() + 100)
}

/// Linear interpolation from `coarse` to its uniform refinement `fine`.
pub fn prolongation(coarse: &FeSpace, fine: &FeSpace) -> Result<SparseMat> {
    let (nc, nf) = (coarse.mesh.n, fine.mesh.n);
    if nf != 2 * nc {
        return Err(Error::NotNested { coarse: nc, fine: nf });
    }
    let mut t = TripletBuilder::new(fine.ndofs(), coarse.ndofs());
    for (row, &node) in fine.node_of_dof.iter().enumerate() {
        let (i, j) = (node % (nf + 1), node / (nf + 1));
        let parents: Vec<(usize, usize)> = match (i % 2, j % 2) {
            (0, 0) => vec![(i / 2, j / 2)],
            (1, 0) => vec![(i / 2, j / 2), (i / 2 + 1, j / 2)],
            (0, 1) => vec![(i / 2, j / 2), (i / 2, j / 2 + 1)],
            _ => vec![(i / 2, j / 2), (i / 2 + 1, j / 2 + 1)],
        };
        let w = 1.0 / parents.len() as f64;
        for (ci, cj) in parents {
            if let Some(col) = coarse.dof(coarse.mesh.node_id(ci, cj)) {
                t.push(row, col, w);
            }
        }
    }
    Ok(t.build())
}

/// Write free-dof values as `node_id,x1,x2,value` for every mesh node.
pub fn write_field_csv(path: &Path, space: &FeSpace, values: &[f64]) -> Result<()> {
    if values.len() != space.ndofs() {
        return Err(Error::DimensionMismatch {
            expected: space.ndofs(),
            got: values.len(),
        });
    }
    write_nodal_csv(path, space.mesh(), &space.to_nodal(values))
}

/// Write one value per mesh node as `node_id,x1,x2,value`.
pub fn write_nodal_csv(path: &Path, mesh: &TriMesh, nodal: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_id", "x1", "x2", "value"])?;
    for (id, (p, v)) in mesh.nodes.iter().zip(nodal).enumerate() {
        w.write_record([id.to_string(), p[0].to_string(), p[1].to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
