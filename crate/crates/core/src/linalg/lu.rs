use super::{norm2, reverse_cuthill_mckee, CsrMatrix, LinalgError, Solution};

/// Relative magnitude a diagonal entry needs to be preferred as pivot over
/// the largest entry of its column.
const DIAGONAL_PREFERENCE: f64 = 0.1;

/// Left-looking sparse LU factorization (Gilbert-Peierls) with threshold
/// partial pivoting, applied to the matrix symmetrically permuted by reverse
/// Cuthill-McKee.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    /// `perm[new] = old` symmetric fill-reducing permutation.
    perm: Vec<usize>,
    /// Row pivoting: `pinv[row] = pivot position`.
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

const UNSET: usize = usize::MAX;

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::NotSquare {
                nrows: n,
                ncols: a.ncols(),
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // permuted matrix in compressed column form
        let mut cp = vec![0usize; n + 1];
        for (_, j, _) in a.iter() {
            cp[inv[j] + 1] += 1;
        }
        for j in 0..n {
            cp[j + 1] += cp[j];
        }
        let mut next = cp.clone();
        let mut ci = vec![0usize; a.nnz()];
        let mut cx = vec![0.0; a.nnz()];
        for (i, j, v) in a.iter() {
            let col = inv[j];
            ci[next[col]] = inv[i];
            cx[next[col]] = v;
            next[col] += 1;
        }
        let scale = a.max_abs();
        let singular_floor = (n.max(1) as f64) * f64::EPSILON * scale;

        let mut pinv = vec![UNSET; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut li = Vec::with_capacity(4 * a.nnz());
        let mut lx = Vec::with_capacity(4 * a.nnz());
        let mut up = Vec::with_capacity(n + 1);
        let mut ui = Vec::with_capacity(4 * a.nnz());
        let mut ux = Vec::with_capacity(4 * a.nnz());
        lp.push(0);
        up.push(0);

        let mut x = vec![0.0; n];
        let mut mark = vec![UNSET; n];
        let mut reach = Vec::with_capacity(n);
        let mut stack = Vec::with_capacity(n);
        let mut pstack = vec![0usize; n];

        for k in 0..n {
            // nonzero pattern of L \ A(:, k) in topological order
            reach.clear();
            for &i in &ci[cp[k]..cp[k + 1]] {
                if mark[i] != k {
                    dfs(
                        i,
                        k,
                        &lp,
                        &li,
                        &pinv,
                        &mut mark,
                        &mut stack,
                        &mut pstack,
                        &mut reach,
                    );
                }
            }
            reach.reverse();
            for &i in &reach {
                x[i] = 0.0;
            }
            for p in cp[k]..cp[k + 1] {
                x[ci[p]] = cx[p];
            }
            for &j in &reach {
                let col = pinv[j];
                if col == UNSET {
                    continue;
                }
                let xj = x[j];
                for q in lp[col] + 1..lp[col + 1] {
                    x[li[q]] -= lx[q] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut amax = -1.0;
            for &i in &reach {
                if pinv[i] == UNSET {
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
            if ipiv == UNSET || !(amax > singular_floor) || !amax.is_finite() {
                return Err(LinalgError::Singular {
                    column: perm[k],
                    pivot: amax.max(0.0),
                });
            }
            if pinv[k] == UNSET && mark[k] == k && x[k].abs() >= DIAGONAL_PREFERENCE * amax {
                ipiv = k;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            up.push(ui.len());
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in &reach {
                if pinv[i] == UNSET {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
            lp.push(li.len());
        }
        for i in li.iter_mut() {
            *i = pinv[*i];
        }

        Ok(Self {
            n,
            perm,
            pinv,
            lp,
            li,
            lx,
            up,
            ui,
            ux,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in `L + U`.
    pub fn fill(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length must match");
        let mut y = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            y[self.pinv[new]] = b[old];
        }
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for q in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[q]] -= self.lx[q] * yj;
                }
            }
        }
        for j in (0..self.n).rev() {
            let last = self.up[j + 1] - 1;
            y[j] /= self.ux[last];
            let yj = y[j];
            if yj != 0.0 {
                for q in self.up[j]..last {
                    y[self.ui[q]] -= self.ux[q] * yj;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solves and verifies `|Ax - b| ≤ tol |b|`, applying up to three steps
    /// of iterative refinement when needed.
    pub fn solve_checked(
        &self,
        a: &CsrMatrix,
        b: &[f64],
        tol: f64,
    ) -> Result<Solution, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let bnorm = norm2(b);
        let mut x = self.solve(b);
        let mut residual = a.residual_norm(&x, b);
        let mut steps = 0;
        while residual > tol * bnorm && steps < 3 {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            let dx = self.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            residual = a.residual_norm(&x, b);
            steps += 1;
        }
        if residual > tol * bnorm {
            return Err(LinalgError::ResidualTooLarge {
                residual,
                tolerance: tol,
                rhs_norm: bnorm,
            });
        }
        Ok(Solution {
            x,
            residual,
            iterations: steps,
        })
    }
}

/// Depth-first search from `root` in the graph of the partially built `L`,
/// appending finished nodes to `out` (reverse topological order).
#[allow(clippy::too_many_arguments)]
fn dfs(
    root: usize,
    stamp: usize,
    lp: &[usize],
    li: &[usize],
    pinv: &[usize],
    mark: &mut [usize],
    stack: &mut Vec<usize>,
    pstack: &mut [usize],
    out: &mut Vec<usize>,
) {
    stack.clear();
    stack.push(root);
    while let Some(&j) = stack.last() {
        let col = pinv[j];
        if mark[j] != stamp {
            mark[j] = stamp;
            pstack[j] = if col == UNSET { 0 } else { lp[col] + 1 };
        }
        let end = if col == UNSET { 0 } else { lp[col + 1] };
        let mut descended = false;
        while pstack[j] < end {
            let i = li[pstack[j]];
            pstack[j] += 1;
            if mark[i] != stamp {
                stack.push(i);
                descended = true;
                break;
            }
        }
        if !descended {
            stack.pop();
            out.push(j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn random_sparse(n: usize, density: f64, seed: u64) -> CsrMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, rng.gen_range(0.5..2.0)));
            for j in 0..n {
                if i != j && rng.gen::<f64>() < density {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn matches_dense_oracle() {
        for (n, seed) in [(5, 1), (30, 2), (120, 3), (200, 4)] {
            let a = random_sparse(n, 4.0 / n as f64, seed);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = SparseLu::factor(&a).unwrap().solve(&b);
            let xd = dense_solve(a.to_dense(), b.clone());
            let scale = norm2(&xd);
            let err = norm2(&x.iter().zip(&xd).map(|(p, q)| p - q).collect::<Vec<_>>());
            assert!(err <= 1e-9 * scale, "n={n}: {err:e}");
        }
    }

    #[test]
    fn needs_off_diagonal_pivot() {
        // zero diagonal: [[0,1],[1,0]]
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let s = SparseLu::factor(&a)
            .unwrap()
            .solve_checked(&a, &[2.0, 3.0], 1e-14)
            .unwrap();
        assert_eq!(s.x, vec![3.0, 2.0]);
    }

    #[test]
    fn detects_singularity() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 0, 2.0),
                (1, 1, 4.0),
                (2, 2, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            SparseLu::factor(&a),
            Err(LinalgError::Singular { .. })
        ));
        let empty_row = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            SparseLu::factor(&empty_row),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn rejects_rectangular() {
        let a = CsrMatrix::zeros(2, 3);
        assert!(matches!(
            SparseLu::factor(&a),
            Err(LinalgError::NotSquare { .. })
        ));
    }
}
