//! Supernodal multifrontal LU for matrices with symmetric sparsity
//! pattern. Columns are eliminated in a given fill-reducing order; row
//! pivoting is restricted to the fully summed rows of each front. Columns
//! without an acceptable pivot there are delayed to the parent front;
//! factorization fails with [`Error::SingularMatrix`] only when a root
//! front still cannot eliminate them.

use crate::error::{Error, Result};
use crate::lu::CscMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Supernode {
    /// First eliminated (permuted) column.
    first: usize,
    width: usize,
    /// Permuted row indices of the front: the supernode's own columns, then
    /// the off-diagonal structure in ascending order.
    rows: Vec<usize>,
    n_children: usize,
    /// Range of `assembly` entries belonging to this front.
    assembly: std::ops::Range<usize>,
}

/// Elimination structure of one pattern; shared by all numeric
/// factorizations of matrices with that pattern.
#[derive(Debug, Clone)]
pub struct FrontalSymbolic {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    nodes: Vec<Supernode>,
    /// `(position in the CSC values, local row, local column)` with local
    /// indices into the front's `rows`.
    assembly: Vec<(usize, usize, usize)>,
    nnz: usize,
}

impl FrontalSymbolic {
    /// Analyses the pattern of `a` (assumed structurally symmetric; the
    /// union with the transpose is used) under the elimination order
    /// `order`.
    pub fn analyse(a: &CscMatrix, order: &[usize]) -> Self {
        let n = a.n;
        assert_eq!(order.len(), n);
        let lower = permuted_lower(a, order);
        let parent = etree(&lower, n);
        let post = postorder(&parent);
        // Relabel so that the elimination order is a postorder.
        let perm: Vec<usize> = post.iter().map(|&k| order[k]).collect();
        let lower = permuted_lower(a, &perm);
        let parent = etree(&lower, n);

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, &p) in parent.iter().enumerate() {
            if p != NONE {
                children[p].push(k);
            }
        }
        // Column structures (strictly below the diagonal) by merging the
        // children; a column joins the supernode of its predecessor when
        // their structures nest.
        let mut structs: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut mark = vec![NONE; n];
        let mut node_of = vec![NONE; n];
        let mut nodes: Vec<Supernode> = Vec::new();
        for k in 0..n {
            let mut s: Vec<usize> = Vec::with_capacity(lower[k].len());
            mark[k] = k;
            for &i in &lower[k] {
                if mark[i] != k {
                    mark[i] = k;
                    s.push(i);
                }
            }
            for &c in &children[k] {
                for &i in &std::mem::take(&mut structs[c]) {
                    if i != k && mark[i] != k {
                        mark[i] = k;
                        s.push(i);
                    }
                }
            }
            s.sort_unstable();
            let joins = k > 0
                && parent[k - 1] == k
                && node_of[k - 1] != NONE
                && nodes[node_of[k - 1]].rows.len() - (k - nodes[node_of[k - 1]].first) == s.len() + 1;
            if joins {
                let id = node_of[k - 1];
                nodes[id].width += 1;
                node_of[k] = id;
            } else {
                let mut rows = Vec::with_capacity(s.len() + 1);
                rows.push(k);
                rows.extend_from_slice(&s);
                node_of[k] = nodes.len();
                nodes.push(Supernode {
                    first: k,
                    width: 1,
                    rows,
                    n_children: 0,
                    assembly: 0..0,
                });
            }
            structs[k] = s;
        }
        for node in &nodes {
            let last = node.first + node.width - 1;
            if parent[last] != NONE {
                debug_assert_eq!(node.rows.get(node.width), Some(&parent[last]));
            }
        }
        for id in 0..nodes.len() {
            let last = nodes[id].first + nodes[id].width - 1;
            if parent[last] != NONE {
                let p = node_of[parent[last]];
                nodes[p].n_children += 1;
            }
        }

        // Scatter map of the original entries.
        let mut iperm = vec![0; n];
        for (k, &j) in perm.iter().enumerate() {
            iperm[j] = k;
        }
        let mut by_node: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nodes.len()];
        let mut pos = vec![NONE; n];
        let mut entries: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nodes.len()];
        for j in 0..n {
            for p in a.col_ptr[j]..a.col_ptr[j + 1] {
                let (ip, jp) = (iperm[a.row_idx[p]], iperm[j]);
                entries[node_of[ip.min(jp)]].push((p, ip, jp));
            }
        }
        for (id, node) in nodes.iter().enumerate() {
            for (t, &r) in node.rows.iter().enumerate() {
                pos[r] = t;
            }
            by_node[id] = entries[id].iter().map(|&(p, ip, jp)| (p, pos[ip], pos[jp])).collect();
        }
        let mut assembly = Vec::new();
        for (node, list) in nodes.iter_mut().zip(by_node) {
            let start = assembly.len();
            assembly.extend(list);
            node.assembly = start..assembly.len();
        }
        Self {
            n,
            perm,
            nodes,
            assembly,
            nnz: a.values.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Predicted nonzeros of `L + U` when no pivot is delayed.
    pub fn fill(&self) -> usize {
        self.nodes
            .iter()
            .map(|s| {
                let (m, w) = (s.rows.len(), s.width);
                2 * m * w - w * w
            })
            .sum()
    }
}

/// Eliminated part of one front.
#[derive(Debug, Clone)]
struct Front {
    /// Permuted row and column index of each pivot.
    pivot_rows: Vec<usize>,
    pivot_cols: Vec<usize>,
    /// Rows and columns passed on to the parent.
    rest_rows: Vec<usize>,
    rest_cols: Vec<usize>,
    /// `m × e` column panel (`L11\U11` on top of `L21`), column-major.
    lower: Vec<f64>,
    /// `e × (m − e)` row panel `U12`, column-major.
    upper: Vec<f64>,
}

/// Update matrix awaiting its parent; the first `delayed` rows and columns
/// are uneliminated fully summed variables.
struct Contribution {
    rows: Vec<usize>,
    cols: Vec<usize>,
    delayed: usize,
    values: Vec<f64>,
}

/// Numeric factors of one matrix.
#[derive(Debug, Clone)]
pub struct FrontalFactors {
    fronts: Vec<Front>,
    delayed: usize,
}

impl FrontalFactors {
    /// Factorizes `a` (same pattern as the analysed matrix). A diagonal
    /// pivot is kept when within `pivot_tol` of the column maximum.
    pub fn factorize(sym: &FrontalSymbolic, a: &CscMatrix, pivot_tol: f64) -> Result<Self> {
        if a.n != sym.n || a.values.len() != sym.nnz {
            return Err(Error::invalid("matrix pattern differs from the analysed one"));
        }
        let mut fronts = Vec::with_capacity(sym.nodes.len());
        let mut stack: Vec<Contribution> = Vec::new();
        let mut pos_r = vec![NONE; sym.n];
        let mut pos_c = vec![NONE; sym.n];
        let mut total_delayed = 0;
        for node in &sym.nodes {
            let children = stack.split_off(stack.len() - node.n_children);
            let nd: usize = children.iter().map(|c| c.delayed).sum();
            total_delayed += nd;
            let mut rows = Vec::with_capacity(nd + node.rows.len());
            let mut cols = Vec::with_capacity(nd + node.rows.len());
            for c in &children {
                rows.extend_from_slice(&c.rows[..c.delayed]);
                cols.extend_from_slice(&c.cols[..c.delayed]);
            }
            rows.extend_from_slice(&node.rows);
            cols.extend_from_slice(&node.rows);
            let m = rows.len();
            let ws = nd + node.width;
            for (t, (&r, &c)) in rows.iter().zip(&cols).enumerate() {
                pos_r[r] = t;
                pos_c[c] = t;
            }
            let mut f = vec![0.0; m * m];
            for &(p, li, lj) in &sym.assembly[node.assembly.clone()] {
                f[li + nd + (lj + nd) * m] += a.values[p];
            }
            for c in &children {
                let local: Vec<usize> = c.rows.iter().map(|&r| pos_r[r]).collect();
                let mc = c.rows.len();
                for (jc, &gc) in c.cols.iter().enumerate() {
                    let lj = pos_c[gc];
                    let dst = &mut f[lj * m..(lj + 1) * m];
                    for (&li, &v) in local.iter().zip(&c.values[jc * mc..(jc + 1) * mc]) {
                        dst[li] += v;
                    }
                }
            }
            drop(children);
            let (e, rperm, cperm) = partial_lu(&mut f, m, ws, pivot_tol);
            if e < ws && m == ws {
                // a root front with uneliminated columns
                return Err(Error::SingularMatrix {
                    column: sym.perm[cols[cperm[e]]],
                });
            }
            let mut upper = vec![0.0; e * (m - e)];
            for j in e..m {
                upper[(j - e) * e..(j - e + 1) * e].copy_from_slice(&f[j * m..j * m + e]);
            }
            let rest_rows: Vec<usize> = rperm[e..].iter().map(|&t| rows[t]).collect();
            let rest_cols: Vec<usize> = cperm[e..].iter().map(|&t| cols[t]).collect();
            if m > e {
                let mc = m - e;
                let mut values = vec![0.0; mc * mc];
                for j in 0..mc {
                    values[j * mc..(j + 1) * mc].copy_from_slice(&f[(j + e) * m + e..(j + e + 1) * m]);
                }
                stack.push(Contribution {
                    rows: rest_rows.clone(),
                    cols: rest_cols.clone(),
                    delayed: ws - e,
                    values,
                });
            }
            f.truncate(m * e);
            fronts.push(Front {
                pivot_rows: rperm[..e].iter().map(|&t| rows[t]).collect(),
                pivot_cols: cperm[..e].iter().map(|&t| cols[t]).collect(),
                rest_rows,
                rest_cols,
                lower: f,
                upper,
            });
        }
        Ok(Self {
            fronts,
            delayed: total_delayed,
        })
    }

    /// Nonzeros of `L + U` (diagonal counted once), including the explicit
    /// zeros inside fronts.
    pub fn fill(&self) -> usize {
        self.fronts.iter().map(|fr| fr.lower.len() + fr.upper.len()).sum()
    }

    /// Number of delayed pivots summed over all fronts.
    pub fn delayed(&self) -> usize {
        self.delayed
    }

    pub fn solve(&self, sym: &FrontalSymbolic, b: &[f64]) -> Vec<f64> {
        let n = sym.n;
        assert_eq!(b.len(), n);
        let mut work: Vec<f64> = sym.perm.iter().map(|&i| b[i]).collect();
        let mut y = vec![0.0; n];
        let mut v = Vec::new();
        for fr in &self.fronts {
            let e = fr.pivot_rows.len();
            let m = e + fr.rest_rows.len();
            v.clear();
            v.extend(fr.pivot_rows.iter().map(|&r| work[r]));
            for k in 0..e {
                let vk = v[k];
                if vk != 0.0 {
                    let col = &fr.lower[k * m..(k + 1) * m];
                    for t in k + 1..e {
                        v[t] -= col[t] * vk;
                    }
                    for (&r, &l) in fr.rest_rows.iter().zip(&col[e..]) {
                        work[r] -= l * vk;
                    }
                }
            }
            for (&c, &vk) in fr.pivot_cols.iter().zip(&v) {
                y[c] = vk;
            }
        }
        let mut xp = vec![0.0; n];
        for fr in self.fronts.iter().rev() {
            let e = fr.pivot_rows.len();
            let m = e + fr.rest_rows.len();
            v.clear();
            v.extend(fr.pivot_cols.iter().map(|&c| y[c]));
            for (j, &c) in fr.rest_cols.iter().enumerate() {
                let xj = xp[c];
                if xj != 0.0 {
                    for (vt, &u) in v.iter_mut().zip(&fr.upper[j * e..(j + 1) * e]) {
                        *vt -= u * xj;
                    }
                }
            }
            for k in (0..e).rev() {
                let col = &fr.lower[k * m..(k + 1) * m];
                v[k] /= col[k];
                let vk = v[k];
                for t in 0..k {
                    v[t] -= col[t] * vk;
                }
            }
            for (&c, &vk) in fr.pivot_cols.iter().zip(&v) {
                xp[c] = vk;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in sym.perm.iter().enumerate() {
            x[i] = xp[k];
        }
        x
    }
}

/// Eliminates as many of the first `ws` columns of the column-major `m × m`
/// front as possible, with pivots from the first `ws` rows. Rows and columns
/// are swapped in place so that the `e` pivots lead; the trailing block then
/// holds the Schur complement. Returns `e` and the row and column
/// permutations of local indices.
fn partial_lu(f: &mut [f64], m: usize, ws: usize, pivot_tol: f64) -> (usize, Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..m).collect();
    let mut e = 0;
    while e < ws {
        let k = e;
        let Some((c, r)) = (k..ws).find_map(|c| pick_pivot(f, m, ws, k, c, pivot_tol).map(|r| (c, r))) else {
            break;
        };
        if c != k {
            for i in 0..m {
                f.swap(k * m + i, c * m + i);
            }
            cols.swap(k, c);
        }
        if r != k {
            for j in 0..m {
                f.swap(j * m + k, j * m + r);
            }
            rows.swap(k, r);
        }
        let piv = f[k * m + k];
        for v in &mut f[k * m + k + 1..(k + 1) * m] {
            *v /= piv;
        }
        // Rank-one update of the remaining fully summed columns (all rows)
        // and of the fully summed rows of the trailing columns.
        let (head, tail) = f.split_at_mut((k + 1) * m);
        let lcol = &head[k * m..(k + 1) * m];
        for j in k + 1..m {
            let cj = &mut tail[(j - k - 1) * m..(j - k) * m];
            let u = cj[k];
            if u == 0.0 {
                continue;
            }
            let end = if j < ws { m } else { ws };
            for (c, &l) in cj[k + 1..end].iter_mut().zip(&lcol[k + 1..end]) {
                *c -= l * u;
            }
        }
        e += 1;
    }
    // Schur complement C -= L21 U12 on the non fully summed block.
    if m > ws && e > 0 {
        let (panel, trail) = f.split_at_mut(ws * m);
        for j in ws..m {
            let cj = &mut trail[(j - ws) * m..(j - ws + 1) * m];
            for k in 0..e {
                let u = cj[k];
                if u == 0.0 {
                    continue;
                }
                let lcol = &panel[k * m + ws..(k + 1) * m];
                for (c, &l) in cj[ws..].iter_mut().zip(lcol) {
                    *c -= l * u;
                }
            }
        }
    }
    (e, rows, cols)
}

/// Pivot row for local column `c` at step `k`: the diagonal when within
/// `pivot_tol` of the column maximum, else the largest fully summed entry.
fn pick_pivot(f: &[f64], m: usize, ws: usize, k: usize, c: usize, pivot_tol: f64) -> Option<usize> {
    let col = &f[c * m..(c + 1) * m];
    let colmax = col[k..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(colmax > 0.0) || !colmax.is_finite() {
        return None;
    }
    let bound = pivot_tol * colmax;
    if col[c].abs() >= bound && col[c] != 0.0 {
        return Some(c);
    }
    let (r, best) = (k..ws).map(|t| (t, col[t].abs())).fold((k, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    (best >= bound && best > 0.0).then_some(r)
}

/// Strictly lower pattern of the symmetrically permuted `A + Aᵀ`, by
/// column: `lower[k]` holds the rows `i > k`.
fn permuted_lower(a: &CscMatrix, perm: &[usize]) -> Vec<Vec<usize>> {
    let n = a.n;
    let mut iperm = vec![0; n];
    for (k, &j) in perm.iter().enumerate() {
        iperm[j] = k;
    }
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for p in a.col_ptr[j]..a.col_ptr[j + 1] {
            let (ip, jp) = (iperm[a.row_idx[p]], iperm[j]);
            match ip.cmp(&jp) {
                std::cmp::Ordering::Greater => lower[jp].push(ip),
                std::cmp::Ordering::Less => lower[ip].push(jp),
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    for l in &mut lower {
        l.sort_unstable();
        l.dedup();
    }
    lower
}

/// Elimination tree from the lower pattern (Liu's algorithm with path
/// compression).
fn etree(lower: &[Vec<usize>], n: usize) -> Vec<usize> {
    // Row lists of the upper triangle: for row i, the columns k < i.
    let mut upper_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, l) in lower.iter().enumerate() {
        for &i in l {
            upper_rows[i].push(k);
        }
    }
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for i in 0..n {
        for &k in &upper_rows[i] {
            let mut r = k;
            while ancestor[r] != NONE && ancestor[r] != i {
                let t = ancestor[r];
                ancestor[r] = i;
                r = t;
            }
            if ancestor[r] == NONE {
                ancestor[r] = i;
                parent[r] = i;
            }
        }
    }
    parent
}

/// Postorder of a forest; children are visited in increasing order.
fn postorder(parent: &[usize]) -> Vec<usize> {
    let n = parent.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (k, &p) in parent.iter().enumerate() {
        if p == NONE {
            roots.push(k);
        } else {
            children[p].push(k);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for r in roots {
        stack.push((r, 0));
        while let Some((v, i)) = stack.pop() {
            if i < children[v].len() {
                stack.push((v, i + 1));
                stack.push((children[v][i], 0));
            } else {
                order.push(v);
            }
        }
    }
    order
}
