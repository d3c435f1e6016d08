//! Sparse direct solver: left-looking LU with threshold partial pivoting
//! (Gilbert-Peierls) on a fill-reducing column ordering.
//!
//! The ordering depends only on the sparsity pattern, so it is computed once
//! ([`LuOrdering`]) and reused for every numeric factorization on the same
//! pattern.

use crate::error::{Error, Result};

/// Square matrix in compressed sparse column layout.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            for (i, row) in a.iter().enumerate() {
                if row[j] != 0.0 {
                    row_idx.push(i);
                    values.push(row[j]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * x[j];
            }
        }
        y
    }
}

/// Fill-reducing column ordering for a fixed sparsity pattern.
#[derive(Debug, Clone)]
pub struct LuOrdering {
    /// `perm[k]` is the column eliminated at step `k`.
    pub perm: Vec<usize>,
}

impl LuOrdering {
    pub fn natural(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    /// Nested dissection on the graph of `A + A^T`, with level-set
    /// separators. Rows/columns far denser than average (global
    /// constraints) are eliminated last.
    pub fn nested_dissection(a: &CscMatrix) -> Self {
        let n = a.n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            for p in a.col_ptr[j]..a.col_ptr[j + 1] {
                let i = a.row_idx[p];
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let dense_limit = (10.0 * (n as f64).sqrt()).max(64.0) as usize;
        let dense: Vec<bool> = adj.iter().map(|l| l.len() > dense_limit).collect();
        for l in adj.iter_mut() {
            l.retain(|&v| !dense[v]);
        }
        let mut perm = Vec::with_capacity(n);
        let mut part = vec![usize::MAX; n];
        let nodes: Vec<usize> = (0..n).filter(|&v| !dense[v]).collect();
        let mut next_id = 0usize;
        dissect(&adj, nodes, &mut part, &mut next_id, &mut perm);
        perm.extend((0..n).filter(|&v| dense[v]));
        debug_assert_eq!(perm.len(), n);
        Self { perm }
    }
}

const LEAF: usize = 48;

fn dissect(
    adj: &[Vec<usize>],
    nodes: Vec<usize>,
    part: &mut [usize],
    next_id: &mut usize,
    out: &mut Vec<usize>,
) {
    if nodes.len() <= LEAF {
        out.extend(nodes);
        return;
    }
    let id = *next_id;
    *next_id += 1;
    for &v in &nodes {
        part[v] = id;
    }
    // split into connected components first
    let mut comps: Vec<Vec<usize>> = Vec::new();
    {
        let comp_id = *next_id;
        *next_id += 1;
        for &s in &nodes {
            if part[s] != id {
                continue;
            }
            let mut comp = vec![s];
            part[s] = comp_id;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in &adj[v] {
                    if part[w] == id {
                        part[w] = comp_id;
                        comp.push(w);
                    }
                }
            }
            comps.push(comp);
        }
    }
    if comps.len() > 1 {
        for c in comps {
            dissect(adj, c, part, next_id, out);
        }
        return;
    }
    let comp = comps.pop().unwrap();
    let cid = part[comp[0]];

    // pseudo-peripheral start node
    let bfs = |start: usize, part: &[usize]| -> (Vec<usize>, Vec<usize>) {
        // returns (order, level of each node in order)
        let mut order = vec![start];
        let mut lev = vec![0usize];
        let mut seen = std::collections::HashSet::with_capacity(comp.len());
        seen.insert(start);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            let l = lev[head];
            head += 1;
            for &w in &adj[v] {
                if part[w] == cid && seen.insert(w) {
                    order.push(w);
                    lev.push(l + 1);
                }
            }
        }
        (order, lev)
    };
    let (mut order, mut lev) = bfs(comp[0], part);
    for _ in 0..4 {
        let far = *order.last().unwrap();
        let (o2, l2) = bfs(far, part);
        if l2.last() <= lev.last() {
            break;
        }
        order = o2;
        lev = l2;
    }
    let nlev = lev.last().unwrap() + 1;
    if nlev < 3 {
        out.extend(comp);
        return;
    }
    // middle level by node count
    let half = order.len() / 2;
    let mut mid = lev[half].clamp(1, nlev - 2);
    // prefer the smallest level near the middle
    let mut counts = vec![0usize; nlev];
    for &l in &lev {
        counts[l] += 1;
    }
    let window = (nlev / 8).max(1);
    let lo = mid.saturating_sub(window).max(1);
    let hi = (mid + window).min(nlev - 2);
    let mut best = counts[mid];
    for l in lo..=hi {
        if counts[l] < best {
            best = counts[l];
            mid = l;
        }
    }
    let mut level_of = std::collections::HashMap::with_capacity(order.len());
    for (v, l) in order.iter().zip(&lev) {
        level_of.insert(*v, *l);
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for (&v, &l) in order.iter().zip(&lev) {
        if l < mid {
            left.push(v);
        } else if l > mid {
            right.push(v);
        } else if adj[v]
            .iter()
            .any(|w| part[*w] == cid && level_of.get(w) == Some(&(mid + 1)))
        {
            sep.push(v);
        } else {
            left.push(v);
        }
    }
    dissect(adj, left, part, next_id, out);
    dissect(adj, right, part, next_id, out);
    out.extend(sep);
}

/// Numeric LU factors `P A Q = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    q: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

impl LuFactors {
    /// Factorizes `a` with columns taken in `ordering`. A diagonal pivot is
    /// kept whenever it is within `pivot_tol` of the column maximum.
    pub fn factorize(a: &CscMatrix, ordering: &LuOrdering, pivot_tol: f64) -> Result<Self> {
        let n = a.n;
        const NONE: usize = usize::MAX;
        let q = ordering.perm.clone();
        let mut pinv = vec![NONE; n];
        let nnz = a.values.len();
        let mut lp = vec![0; n + 1];
        let mut up = vec![0; n + 1];
        let mut li = Vec::with_capacity(4 * nnz);
        let mut lx = Vec::with_capacity(4 * nnz);
        let mut ui = Vec::with_capacity(4 * nnz);
        let mut ux = Vec::with_capacity(4 * nnz);
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![0usize; n];
        let mut stamp = 0usize;

        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            let col = q[k];
            stamp += 1;

            // reach of A(:,col) in the graph of L
            let mut top = n;
            for p in a.col_ptr[col]..a.col_ptr[col + 1] {
                let s = a.row_idx[p];
                if mark[s] == stamp {
                    continue;
                }
                let mut head = 0usize;
                stack[0] = s;
                while head != usize::MAX {
                    let j = stack[head];
                    let jn = pinv[j];
                    if mark[j] != stamp {
                        mark[j] = stamp;
                        pstack[head] = if jn == NONE { 0 } else { lp[jn] + 1 };
                    }
                    let end = if jn == NONE { 0 } else { lp[jn + 1] };
                    let mut done = true;
                    let mut pp = pstack[head];
                    while pp < end {
                        let i = li[pp];
                        pp += 1;
                        if mark[i] == stamp {
                            continue;
                        }
                        pstack[head] = pp;
                        head += 1;
                        stack[head] = i;
                        done = false;
                        break;
                    }
                    if done {
                        head = head.wrapping_sub(1);
                        top -= 1;
                        xi[top] = j;
                    }
                }
            }
            // sparse triangular solve x = L \ A(:,col)
            for &i in &xi[top..n] {
                x[i] = 0.0;
            }
            for p in a.col_ptr[col]..a.col_ptr[col + 1] {
                x[a.row_idx[p]] += a.values[p];
            }
            for px in top..n {
                let j = xi[px];
                let jn = pinv[j];
                if jn == NONE {
                    continue;
                }
                let xj = x[j];
                if xj != 0.0 {
                    for p in lp[jn] + 1..lp[jn + 1] {
                        x[li[p]] -= lx[p] * xj;
                    }
                }
            }
            // pivot selection
            let mut ipiv = NONE;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || !(amax > 0.0) || !amax.is_finite() {
                return Err(Error::SingularMatrix { column: col });
            }
            if pinv[col] == NONE && mark[col] == stamp && x[col].abs() >= pivot_tol * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            q,
            pinv,
            lp,
            li,
            lx,
            up,
            ui,
            ux,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros in `L + U`.
    pub fn fill(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            y[j] /= self.ux[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..last {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }
}
