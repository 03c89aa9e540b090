use super::{dot, norm2, CsrMatrix, LinalgError, Solution};

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Relative residual target `|Ax - b| ≤ tol |b|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite systems.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<Solution, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            nrows: n,
            ncols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(Solution {
            x,
            residual: 0.0,
            iterations: 0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        let ap = a.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= opts.tol * bnorm {
            let residual = a.residual_norm(&x, b);
            if residual <= opts.tol * bnorm {
                return Ok(Solution {
                    x,
                    residual,
                    iterations: it,
                });
            }
            // recurrence drifted; restart from the true residual
            let ax = a.mul_vec(&x);
            r = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        }
        z = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NotConverged {
        iterations: opts.max_iter,
        residual: a.residual_norm(&x, b) / bnorm,
    })
}
