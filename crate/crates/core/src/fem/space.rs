use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::mesh::{Mesh, Point};
use crate::quadrature::SimplexRule;
use crate::saddle::SaddleLayout;
use crate::sparse::Pattern;

/// Local edges of a simplex, in VTK quadratic-cell order.
pub(crate) const EDGES_2D: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];
pub(crate) const EDGES_3D: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3)];

pub(crate) fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &EDGES_2D
    } else {
        &EDGES_3D
    }
}

/// Taylor-Hood P2/P1 space on a simplicial mesh.
///
/// Velocity nodes are the mesh vertices followed by the edge midpoints; the
/// velocity dof of component `j` at node `a` is `a * dim + j`. Pressure dofs
/// are the mesh vertices. Every velocity dof on the boundary is Dirichlet.
#[derive(Debug)]
pub struct MixedSpace {
    mesh: Arc<Mesh>,
    dim: usize,
    nloc: usize,
    edges: Vec<[usize; 2]>,
    cell_nodes: Vec<usize>,
    node_coords: Vec<Point>,
    dirichlet: Vec<bool>,
    mean_vector: Vec<f64>,
    vel_pattern: Arc<Pattern>,
    div_pattern: Arc<Pattern>,
    vel_positions: Vec<usize>,
    div_positions: Vec<usize>,
    rule: SimplexRule,
    saddle: OnceLock<SaddleLayout>,
}

impl MixedSpace {
    pub fn new(mesh: Arc<Mesh>) -> Arc<Self> {
        let dim = mesh.dim();
        let nv = mesh.n_vertices();
        let ledges = local_edges(dim);
        let nloc = dim + 1 + ledges.len();
        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut cell_nodes = Vec::with_capacity(mesh.n_cells() * nloc);
        for c in mesh.cells() {
            cell_nodes.extend_from_slice(c);
            for &(a, b) in ledges {
                let key = (c[a].min(c[b]), c[a].max(c[b]));
                let id = *edge_id.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                cell_nodes.push(nv + id);
            }
        }
        let mut node_coords = mesh.vertices().to_vec();
        for e in &edges {
            let (p, q) = (mesh.vertices()[e[0]], mesh.vertices()[e[1]]);
            node_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
        }
        let n_nodes = node_coords.len();

        let mut dir_node = vec![false; n_nodes];
        for (_, f) in mesh.boundary_facets() {
            for (i, &a) in f.iter().enumerate() {
                dir_node[a] = true;
                for &b in &f[i + 1..] {
                    let key = (a.min(b), a.max(b));
                    dir_node[nv + edge_id[&key]] = true;
                }
            }
        }
        let mut dirichlet = vec![false; n_nodes * dim];
        for (a, &d) in dir_node.iter().enumerate() {
            for j in 0..dim {
                dirichlet[a * dim + j] = d;
            }
        }

        // sparsity: all node pairs of a cell, all component pairs
        let n_vel = n_nodes * dim;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_vel];
        let mut drows: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for nodes in cell_nodes.chunks(nloc) {
            for &a in nodes {
                for j in 0..dim {
                    let r = &mut rows[a * dim + j];
                    for &b in nodes {
                        for k in 0..dim {
                            r.push(b * dim + k);
                        }
                    }
                }
            }
            for &q in &nodes[..=dim] {
                for &b in nodes {
                    for k in 0..dim {
                        drows[q].push(b * dim + k);
                    }
                }
            }
        }
        let vel_pattern = Arc::new(Pattern::from_rows(n_vel, rows));
        let div_pattern = Arc::new(Pattern::from_rows(n_vel, drows));
        let nld = nloc * dim;
        let mut vel_positions = Vec::with_capacity(mesh.n_cells() * nld * nld);
        let mut div_positions = Vec::with_capacity(mesh.n_cells() * (dim + 1) * nld);
        for nodes in cell_nodes.chunks(nloc) {
            for &a in nodes {
                for j in 0..dim {
                    for &b in nodes {
                        for k in 0..dim {
                            vel_positions.push(vel_pattern.find(a * dim + j, b * dim + k).unwrap());
                        }
                    }
                }
            }
            for &q in &nodes[..=dim] {
                for &b in nodes {
                    for k in 0..dim {
                        div_positions.push(div_pattern.find(q, b * dim + k).unwrap());
                    }
                }
            }
        }

        // integral of each P1 basis function: |K| / (dim + 1) per incident cell
        let mut mean_vector = vec![0.0; nv];
        for (k, c) in mesh.cells().enumerate() {
            for &v in c {
                mean_vector[v] += mesh.cell_volume(k) / (dim + 1) as f64;
            }
        }

        Arc::new(Self {
            rule: SimplexRule::degree5(dim),
            mesh,
            dim,
            nloc,
            edges,
            cell_nodes,
            node_coords,
            dirichlet,
            mean_vector,
            vel_pattern,
            div_pattern,
            vel_positions,
            div_positions,
            saddle: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of P2 nodes (vertices plus edges).
    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_vel(&self) -> usize {
        self.node_coords.len() * self.dim
    }

    pub fn n_pre(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// Local P2 nodes per cell (6 or 10).
    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn cell_nodes(&self, k: usize) -> &[usize] {
        &self.cell_nodes[k * self.nloc..(k + 1) * self.nloc]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    /// `m_i = ∫ ψ_i`, so that `m · p` is the integral of the P1 pressure `p`.
    pub fn mean_vector(&self) -> &[f64] {
        &self.mean_vector
    }

    pub fn vel_pattern(&self) -> &Arc<Pattern> {
        &self.vel_pattern
    }

    pub fn div_pattern(&self) -> &Arc<Pattern> {
        &self.div_pattern
    }

    /// Storage positions in the velocity pattern of the local matrix of cell
    /// `k` (row-major over local dofs `a * dim + j`).
    pub(crate) fn vel_positions(&self, k: usize) -> &[usize] {
        let nld = self.nloc * self.dim;
        &self.vel_positions[k * nld * nld..(k + 1) * nld * nld]
    }

    pub(crate) fn div_positions(&self, k: usize) -> &[usize] {
        let nld = self.nloc * self.dim;
        let s = (self.dim + 1) * nld;
        &self.div_positions[k * s..(k + 1) * s]
    }

    /// Saddle-point structure and ordering, built on first use.
    pub fn saddle_layout(&self) -> &SaddleLayout {
        self.saddle.get_or_init(|| SaddleLayout::new(self))
    }

    pub fn rule(&self) -> &SimplexRule {
        &self.rule
    }

    /// Zeroes the Dirichlet entries of a velocity vector.
    pub fn apply_dirichlet(&self, v: &mut [f64]) {
        for (x, &d) in v.iter_mut().zip(&self.dirichlet) {
            if d {
                *x = 0.0;
            }
        }
    }

    /// Basis values and gradients of cell `k` at the points of `rule`.
    pub fn eval_cell(&self, k: usize, rule: &SimplexRule, out: &mut CellEval) {
        let dim = self.dim;
        let nloc = self.nloc;
        let mesh = &self.mesh;
        let cell = mesh.cell(k);
        let vol = mesh.cell_volume(k);
        let glam = barycentric_gradients(dim, mesh.vertices(), cell);
        let nq = rule.len();
        out.nq = nq;
        out.nloc = nloc;
        out.np = dim + 1;
        out.weights.clear();
        out.points.clear();
        out.phi.clear();
        out.dphi.clear();
        out.psi.clear();
        let ledges = local_edges(dim);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            out.weights.push(w * vol);
            let mut x = [0.0; 3];
            for (i, &v) in cell.iter().enumerate() {
                for a in 0..dim {
                    x[a] += lam[i] * mesh.vertices()[v][a];
                }
            }
            out.points.push(x);
            for i in 0..=dim {
                out.phi.push(lam[i] * (2.0 * lam[i] - 1.0));
                let s = 4.0 * lam[i] - 1.0;
                out.dphi.push([s * glam[i][0], s * glam[i][1], s * glam[i][2]]);
            }
            for &(a, b) in ledges {
                out.phi.push(4.0 * lam[a] * lam[b]);
                let mut g = [0.0; 3];
                for d in 0..3 {
                    g[d] = 4.0 * (lam[a] * glam[b][d] + lam[b] * glam[a][d]);
                }
                out.dphi.push(g);
            }
            out.psi.extend_from_slice(&lam[..=dim]);
        }
        out.grad_psi.clear();
        out.grad_psi.extend_from_slice(&glam[..=dim]);
    }
}

/// Basis data of one cell at the points of a quadrature rule.
#[derive(Debug, Clone, Default)]
pub struct CellEval {
    pub nq: usize,
    pub nloc: usize,
    /// P1 basis functions per cell (`dim + 1`).
    pub np: usize,
    /// Quadrature weights scaled by the cell volume.
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    /// P2 values, index `q * nloc + i`.
    pub phi: Vec<f64>,
    /// P2 gradients, index `q * nloc + i`.
    pub dphi: Vec<[f64; 3]>,
    /// P1 values, index `q * np + i`.
    pub psi: Vec<f64>,
    /// P1 gradients (constant on the cell).
    pub grad_psi: Vec<[f64; 3]>,
}

impl CellEval {
    pub fn phi(&self, q: usize, i: usize) -> f64 {
        self.phi[q * self.nloc + i]
    }

    pub fn dphi(&self, q: usize, i: usize) -> &[f64; 3] {
        &self.dphi[q * self.nloc + i]
    }

    pub fn psi(&self, q: usize, i: usize) -> f64 {
        self.psi[q * self.np + i]
    }
}

fn barycentric_gradients(dim: usize, v: &[Point], c: &[usize]) -> [[f64; 3]; 4] {
    // rows of the inverse Jacobian give the gradients of lambda_1..lambda_d
    let p0 = v[c[0]];
    let mut jac = [[0.0; 3]; 3];
    for j in 0..dim {
        for i in 0..dim {
            jac[i][j] = v[c[j + 1]][i] - p0[i];
        }
    }
    let mut g = [[0.0; 3]; 4];
    for i in 0..dim {
        // solve J^T g_i = e_i
        let mut jt = [[0.0; 3]; 3];
        for a in 0..dim {
            for b in 0..dim {
                jt[a][b] = jac[b][a];
            }
        }
        let mut e = [0.0; 3];
        e[i] = 1.0;
        g[i + 1] = crate::mesh::solve_small(dim, jt, e);
    }
    for d in 0..3 {
        g[0][d] = -(1..=dim).map(|i| g[i][d]).sum::<f64>();
    }
    g
}
