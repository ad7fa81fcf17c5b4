//! Sparse symmetric positive definite systems: geometric nested dissection
//! ordering and an up-looking Cholesky factorization with the symbolic
//! analysis done once per sparsity pattern.

use crate::{Error, Point, Result};

const NONE: usize = usize::MAX;

/// Upper triangle of a symmetric matrix in compressed columns, stored in a
/// fill-reducing order.
#[derive(Clone, Debug)]
pub struct SymmetricPattern {
    n: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// `iperm[old] = new`.
    iperm: Vec<usize>,
}

impl SymmetricPattern {
    /// Pattern containing the diagonal and every listed pair (original
    /// indices, either order). `coords` drive the ordering.
    pub fn new(n: usize, pairs: &[(usize, usize)], coords: &[Point]) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in pairs {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let perm = nested_dissection(&adj, coords);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut cols: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
        for (i, a) in adj.iter().enumerate() {
            let pi = iperm[i];
            for &j in a {
                let pj = iperm[j];
                if pi < pj {
                    cols[pj].push(pi);
                }
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowidx = Vec::new();
        colptr.push(0);
        for c in &mut cols {
            c.sort_unstable();
            rowidx.extend_from_slice(c);
            colptr.push(rowidx.len());
        }
        Self {
            n,
            colptr,
            rowidx,
            perm,
            iperm,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rowidx.len()
    }

    /// Value slot of entry `(i, j)` in original indices, if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.iperm[i], self.iperm[j]);
        let (r, c) = if a <= b { (a, b) } else { (b, a) };
        let col = &self.rowidx[self.colptr[c]..self.colptr[c + 1]];
        col.binary_search(&r).ok().map(|k| self.colptr[c] + k)
    }

    /// `y = A x` in original indices.
    pub fn mul(&self, values: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let oc = self.perm[c];
            for p in self.colptr[c]..self.colptr[c + 1] {
                let or = self.perm[self.rowidx[p]];
                y[or] += values[p] * x[oc];
                if or != oc {
                    y[oc] += values[p] * x[or];
                }
            }
        }
        y
    }

    /// Elimination tree and column layout of the factor.
    pub fn analyze(&self) -> Symbolic {
        let n = self.n;
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for p in self.colptr[k]..self.colptr[k + 1] {
                let mut i = self.rowidx[p];
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }
        let mut counts = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = self.ereach(k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for c in counts {
            lp.push(lp.last().unwrap() + c);
        }
        Symbolic { parent, lp }
    }

    /// Pattern of row `k` of the factor, left in `stack[top..]` in
    /// topological order. `mark` holds the last row that visited a node.
    fn ereach(&self, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
        let mut top = self.n;
        mark[k] = k;
        for p in self.colptr[k]..self.colptr[k + 1] {
            let mut i = self.rowidx[p];
            if i > k {
                continue;
            }
            let mut len = 0;
            while mark[i] != k {
                stack[len] = i;
                len += 1;
                mark[i] = k;
                i = parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = stack[len];
            }
        }
        top
    }

    /// Numeric factorization `P A Pᵀ = L Lᵀ`.
    pub fn factorize(&self, sym: &Symbolic, values: &[f64]) -> Result<Factor> {
        let n = self.n;
        let nnz = *sym.lp.last().unwrap();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut next: Vec<usize> = sym.lp[..n].to_vec();
        let mut x = vec![0.0f64; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = self.ereach(k, &sym.parent, &mut stack, &mut mark);
            for p in self.colptr[k]..self.colptr[k + 1] {
                x[self.rowidx[p]] = values[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / lx[sym.lp[i]];
                x[i] = 0.0;
                for p in sym.lp[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Linear(format!(
                    "matrix is not positive definite (pivot {d:e} at step {k} of {n})"
                )));
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(Factor {
            lp: sym.lp.clone(),
            li,
            lx,
        })
    }

    /// Solves `A x = b` in original indices.
    pub fn solve(&self, factor: &Factor, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let start = factor.lp[j];
            y[j] /= factor.lx[start];
            let yj = y[j];
            for p in start + 1..factor.lp[j + 1] {
                y[factor.li[p]] -= factor.lx[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let start = factor.lp[j];
            let mut s = y[j];
            for p in start + 1..factor.lp[j + 1] {
                s -= factor.lx[p] * y[factor.li[p]];
            }
            y[j] = s / factor.lx[start];
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = y[k];
        }
        out
    }
}

/// Elimination tree and column pointers of the factor.
#[derive(Clone, Debug)]
pub struct Symbolic {
    parent: Vec<usize>,
    lp: Vec<usize>,
}

impl Symbolic {
    pub fn factor_nnz(&self) -> usize {
        *self.lp.last().unwrap()
    }
}

/// Lower triangular factor by columns, diagonal first in each column.
#[derive(Clone, Debug)]
pub struct Factor {
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

const LEAF: usize = 64;

/// Fill-reducing order from coordinate bisection: split at the median of
/// the wider axis, number both halves first and the separating layer last.
/// Vertices of very high degree go to the end.
pub fn nested_dissection(adj: &[Vec<usize>], coords: &[Point]) -> Vec<usize> {
    let n = adj.len();
    let mean_degree = adj.iter().map(Vec::len).sum::<usize>() as f64 / n.max(1) as f64;
    let dense = |i: usize| adj[i].len() as f64 > 10.0 * mean_degree + 16.0;
    let mut order = Vec::with_capacity(n);
    let mut side = vec![0u8; n];
    let mut work: Vec<usize> = (0..n).filter(|&i| !dense(i)).collect();
    dissect(&mut work, adj, coords, &mut side, &mut order);
    order.extend((0..n).filter(|&i| dense(i)));
    order
}

fn dissect(nodes: &mut [usize], adj: &[Vec<usize>], coords: &[Point], side: &mut [u8], out: &mut Vec<usize>) {
    if nodes.len() <= LEAF {
        nodes.sort_unstable();
        out.extend_from_slice(nodes);
        return;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &i in nodes.iter() {
        for d in 0..2 {
            lo[d] = lo[d].min(coords[i][d]);
            hi[d] = hi[d].max(coords[i][d]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    nodes.sort_unstable_by(|&a, &b| coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b)));
    let mid = nodes.len() / 2;
    // side: 1 left, 2 right, 0 elsewhere
    for &i in &nodes[..mid] {
        side[i] = 1;
    }
    for &i in &nodes[mid..] {
        side[i] = 2;
    }
    let mut left = Vec::with_capacity(mid);
    let mut sep = Vec::new();
    for &i in &nodes[..mid] {
        if adj[i].iter().any(|&j| side[j] == 2) {
            sep.push(i);
        } else {
            left.push(i);
        }
    }
    let mut right = nodes[mid..].to_vec();
    for &i in nodes.iter() {
        side[i] = 0;
    }
    if left.is_empty() || right.is_empty() {
        nodes.sort_unstable();
        out.extend_from_slice(nodes);
        return;
    }
    dissect(&mut left, adj, coords, side, out);
    dissect(&mut right, adj, coords, side, out);
    sep.sort_unstable();
    out.extend(sep);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 5-point Laplacian plus a shift on an m×m grid.
    fn grid(m: usize, shift: f64) -> (SymmetricPattern, Vec<f64>) {
        let id = |i: usize, j: usize| i * m + j;
        let mut pairs = Vec::new();
        let mut coords = Vec::new();
        for i in 0..m {
            for j in 0..m {
                coords.push([j as f64, i as f64]);
                if j + 1 < m {
                    pairs.push((id(i, j), id(i, j + 1)));
                }
                if i + 1 < m {
                    pairs.push((id(i, j), id(i + 1, j)));
                }
            }
        }
        let pat = SymmetricPattern::new(m * m, &pairs, &coords);
        let mut vals = vec![0.0; pat.nnz()];
        for k in 0..m * m {
            vals[pat.position(k, k).unwrap()] = 4.0 + shift;
        }
        for &(a, b) in &pairs {
            vals[pat.position(a, b).unwrap()] = -1.0;
        }
        (pat, vals)
    }

    #[test]
    fn solves_grid_laplacian() {
        let (pat, vals) = grid(40, 0.01);
        let sym = pat.analyze();
        let f = pat.factorize(&sym, &vals).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..pat.n()).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = pat.mul(&vals, &x);
        let y = pat.solve(&f, &b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "error {err}");
    }

    #[test]
    fn dissection_limits_fill() {
        let (pat, _) = grid(100, 0.0);
        let sym = pat.analyze();
        // natural band ordering needs about m³ = 10⁶ entries
        assert!(sym.factor_nnz() < 400_000, "fill {}", sym.factor_nnz());
        let mut seen = vec![false; pat.n()];
        for &p in &pat.perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
    }

    #[test]
    fn dense_matrix_against_reference() {
        // tridiagonal plus an all-coupled vertex
        let n = 50;
        let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        pairs.extend((0..n - 1).map(|i| (i, n - 1)));
        let coords: Vec<Point> = (0..n).map(|i| [i as f64, 0.0]).collect();
        let pat = SymmetricPattern::new(n, &pairs, &coords);
        let mut vals = vec![0.0; pat.nnz()];
        for k in 0..n {
            vals[pat.position(k, k).unwrap()] = 2.0 * n as f64;
        }
        for &(a, b) in &pairs {
            vals[pat.position(a, b).unwrap()] += -1.0;
        }
        let f = pat.factorize(&pat.analyze(), &vals).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = pat.solve(&f, &b);
        let r = pat.mul(&vals, &x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let (pat, mut vals) = grid(5, 0.0);
        let p = pat.position(7, 7).unwrap();
        vals[p] = -1.0;
        assert!(matches!(pat.factorize(&pat.analyze(), &vals), Err(Error::Linear(_))));
    }
}
