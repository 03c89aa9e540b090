use nalgebra::{DMatrix, SymmetricEigen};

use crate::forms;
use crate::linalg::CsrMatrix;
use crate::spaces::Spaces;

use super::AnalysisError;

/// Relative size below which a generalized eigenvalue counts as zero.
const ZERO_EIGENVALUE: f64 = 1e-9;

/// Smallest generalized eigenvalues behind the discrete Poincaré
/// inequalities `‖v‖ ≤ C ‖div v‖` on the complement of the kernel of div in
/// `V`, and `‖η‖ ≤ C ‖curl η‖` on `W`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareConstants {
    /// Smallest nonzero eigenvalue of `(div_div, M_V)`.
    pub div_min: f64,
    /// Number of (numerically) zero eigenvalues of `(div_div, M_V)`.
    pub div_kernel: usize,
    /// Smallest eigenvalue of `(K_W, M_W)`.
    pub curl_min: f64,
}

/// Dense computation; intended for small meshes.
pub fn poincare_constants(spaces: &Spaces) -> Result<PoincareConstants, AnalysisError> {
    let div = generalized_eigenvalues(&forms::div_div(&spaces.v), &forms::mass_v(&spaces.v))?;
    let curl = generalized_eigenvalues(
        &forms::stiffness_nodal(&spaces.w),
        &forms::mass_nodal(&spaces.w),
    )?;
    let largest = div.last().copied().unwrap_or(0.0);
    let threshold = ZERO_EIGENVALUE * largest;
    let div_kernel = div.iter().filter(|&&l| l.abs() <= threshold).count();
    let div_min = div
        .iter()
        .copied()
        .find(|&l| l > threshold)
        .unwrap_or(f64::NAN);
    Ok(PoincareConstants {
        div_min,
        div_kernel,
        curl_min: curl.first().copied().unwrap_or(f64::NAN),
    })
}

/// Sorted eigenvalues of `A x = λ M x` for symmetric `A` and SPD `M`.
fn generalized_eigenvalues(a: &CsrMatrix, m: &CsrMatrix) -> Result<Vec<f64>, AnalysisError> {
    let n = a.nrows();
    let dense = |s: &CsrMatrix| {
        let mut d = DMatrix::zeros(n, n);
        for (i, j, v) in s.iter() {
            d[(i, j)] = v;
        }
        d
    };
    let l = dense(m)
        .cholesky()
        .ok_or_else(|| AnalysisError::Eigen("mass matrix is not positive definite".into()))?
        .l();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| AnalysisError::Eigen("singular Cholesky factor".into()))?;
    let c = &l_inv * dense(a) * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
