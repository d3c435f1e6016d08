//! Velocity/pressure saddle-point systems on `Z_h × Q_h`:
//!
//! ```text
//! [ A  Bᵀ 0 ] [y]   [f]
//! [ B  0  m ] [q] = [0]
//! [ 0  mᵀ 0 ] [μ]   [0]
//! ```
//!
//! with Dirichlet velocity dofs eliminated symmetrically and `m` the
//! zero-mean row. With `A` the momentum operator, the physical pressure is
//! `−q`.

use crate::error::Result;
use crate::fem::assembly::assemble_div;
use crate::fem::MixedSpace;
use std::sync::Arc;

use crate::frontal::{FrontalFactors, FrontalSymbolic};
use crate::lu::{CscMatrix, LuFactors, LuOrdering};
use crate::sparse::SparseOperator;

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 0.01;

/// Sparsity structure, scatter maps and fill-reducing ordering of the saddle
/// matrix of one space. Built once and shared by every factorization.
#[derive(Debug)]
pub struct SaddleLayout {
    n_vel: usize,
    n_pre: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    a_map: Vec<usize>,
    b_map: Vec<usize>,
    bt_map: Vec<usize>,
    m_row: Vec<usize>,
    m_col: Vec<usize>,
    dirichlet_diag: Vec<usize>,
    div: SparseOperator,
    ordering: LuOrdering,
    frontal: Arc<FrontalSymbolic>,
}

impl SaddleLayout {
    pub(crate) fn new(space: &MixedSpace) -> Self {
        let nv = space.n_vel();
        let np = space.n_pre();
        let n = nv + np + 1;
        let dir = space.dirichlet();
        let vp = space.vel_pattern();
        let div = assemble_div(space);
        let dp = div.pattern().clone();

        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..nv {
            for &j in vp.row(i) {
                if (!dir[i] && !dir[j]) || i == j {
                    cols[j].push(i);
                }
            }
        }
        for p in 0..np {
            for &v in dp.row(p) {
                if !dir[v] {
                    cols[v].push(nv + p);
                    cols[nv + p].push(v);
                }
            }
            cols[nv + p].push(nv + np);
            cols[nv + np].push(nv + p);
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        for c in &mut cols {
            c.sort_unstable();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let find = |r: usize, c: usize| -> usize {
            let s = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            col_ptr[c] + s.binary_search(&r).expect("entry in saddle pattern")
        };

        let mut a_map = vec![NONE; vp.nnz()];
        let mut dirichlet_diag = Vec::new();
        for i in 0..nv {
            let start = vp.row_ptr()[i];
            for (off, &j) in vp.row(i).iter().enumerate() {
                if dir[i] || dir[j] {
                    if i == j {
                        dirichlet_diag.push(find(i, i));
                    }
                } else {
                    a_map[start + off] = find(i, j);
                }
            }
        }
        let mut b_map = vec![NONE; dp.nnz()];
        let mut bt_map = vec![NONE; dp.nnz()];
        for p in 0..np {
            let start = dp.row_ptr()[p];
            for (off, &v) in dp.row(p).iter().enumerate() {
                if !dir[v] {
                    b_map[start + off] = find(nv + p, v);
                    bt_map[start + off] = find(v, nv + p);
                }
            }
        }
        let m_row = (0..np).map(|p| find(nv + np, nv + p)).collect();
        let m_col = (0..np).map(|p| find(nv + p, nv + np)).collect();

        let structure = CscMatrix {
            n,
            col_ptr: col_ptr.clone(),
            row_idx: row_idx.clone(),
            values: vec![1.0; row_idx.len()],
        };
        let ordering = LuOrdering::nested_dissection(&structure);
        let frontal = Arc::new(FrontalSymbolic::analyse(&structure, &ordering.perm));
        Self {
            n_vel: nv,
            n_pre: np,
            col_ptr,
            row_idx,
            a_map,
            b_map,
            bt_map,
            m_row,
            m_col,
            dirichlet_diag,
            div,
            ordering,
            frontal,
        }
    }

    /// The divergence operator `B` of the space.
    pub fn div(&self) -> &SparseOperator {
        &self.div
    }

    pub fn size(&self) -> usize {
        self.n_vel + self.n_pre + 1
    }

    fn matrix(&self, a: &SparseOperator, mean: &[f64]) -> CscMatrix {
        let mut values = vec![0.0; self.row_idx.len()];
        for (&pos, &v) in self.a_map.iter().zip(a.values()) {
            if pos != NONE {
                values[pos] += v;
            }
        }
        for &pos in &self.dirichlet_diag {
            values[pos] = 1.0;
        }
        for ((&pb, &pbt), &v) in self.b_map.iter().zip(&self.bt_map).zip(self.div.values()) {
            if pb != NONE {
                values[pb] += v;
                values[pbt] += v;
            }
        }
        for p in 0..self.n_pre {
            values[self.m_row[p]] = mean[p];
            values[self.m_col[p]] = mean[p];
        }
        CscMatrix {
            n: self.size(),
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        }
    }
}

/// Solution of one saddle solve.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    /// Multiplier of the divergence constraint (zero mean).
    pub multiplier: Vec<f64>,
    /// Multiplier of the zero-mean row; vanishes for consistent data.
    pub mean_multiplier: f64,
}

/// Factorized saddle matrix for a given velocity block.
#[derive(Debug)]
pub struct SaddleSolver {
    n_vel: usize,
    n_pre: usize,
    dirichlet: Vec<bool>,
    matrix: CscMatrix,
    factors: Factors,
}

#[derive(Debug)]
enum Factors {
    Frontal(Arc<FrontalSymbolic>, FrontalFactors),
    Sparse(LuFactors),
}

impl Factors {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factors::Frontal(sym, f) => f.solve(sym, b),
            Factors::Sparse(lu) => lu.solve(b),
        }
    }
}

impl SaddleSolver {
    /// Factorizes the saddle matrix with velocity block `a` (on the space's
    /// velocity pattern; need not be symmetric).
    pub fn new(space: &MixedSpace, a: &SparseOperator) -> Result<Self> {
        let layout = space.saddle_layout();
        let matrix = layout.matrix(a, space.mean_vector());
        // Dense fronts first; a pivot that cannot be found even at the root
        // front falls back to the general sparse LU.
        let factors = match FrontalFactors::factorize(&layout.frontal, &matrix, PIVOT_TOL) {
            Ok(f) => Factors::Frontal(layout.frontal.clone(), f),
            Err(e) => {
                log::debug!("frontal factorization failed ({e}), using sparse LU");
                Factors::Sparse(LuFactors::factorize(&matrix, &layout.ordering, PIVOT_TOL)?)
            }
        };
        Ok(Self {
            n_vel: layout.n_vel,
            n_pre: layout.n_pre,
            dirichlet: space.dirichlet().to_vec(),
            matrix,
            factors,
        })
    }

    /// Solves with velocity load `f` (Dirichlet entries ignored) and zero
    /// divergence data, with one step of iterative refinement.
    pub fn solve(&self, f: &[f64]) -> SaddleSolution {
        self.solve_with_div(f, None)
    }

    /// As [`SaddleSolver::solve`] with divergence data `B y = g`.
    pub fn solve_with_div(&self, f: &[f64], g: Option<&[f64]>) -> SaddleSolution {
        assert_eq!(f.len(), self.n_vel);
        let mut rhs = vec![0.0; self.matrix.n];
        for (i, (&v, &d)) in f.iter().zip(&self.dirichlet).enumerate() {
            if !d {
                rhs[i] = v;
            }
        }
        if let Some(g) = g {
            rhs[self.n_vel..self.n_vel + self.n_pre].copy_from_slice(g);
        }
        let mut x = self.factors.solve(&rhs);
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = self.factors.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let mean_multiplier = x[self.n_vel + self.n_pre];
        let multiplier = x[self.n_vel..self.n_vel + self.n_pre].to_vec();
        x.truncate(self.n_vel);
        SaddleSolution {
            velocity: x,
            multiplier,
            mean_multiplier,
        }
    }

    /// Number of nonzeros in the LU factors.
    pub fn fill(&self) -> usize {
        match &self.factors {
            Factors::Frontal(_, f) => f.fill(),
            Factors::Sparse(lu) => lu.fill(),
        }
    }

    /// True when the dense-front factorization succeeded.
    pub fn is_frontal(&self) -> bool {
        matches!(self.factors, Factors::Frontal(..))
    }
}
