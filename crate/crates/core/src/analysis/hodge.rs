use crate::forms;
use crate::linalg::{solve_cg, CgOptions};
use crate::spaces::{Field, SpaceKind, Spaces};

use super::AnalysisError;

/// Tolerance of the stiffness solve; tighter than the CG default so that
/// the orthogonality defect stays at roundoff level.
const HODGE_TOLERANCE: f64 = 1e-13;

/// `u = curl ζ + z` with `ζ ∈ W` and `z` orthogonal to `curl W`.
#[derive(Clone, Debug)]
pub struct HodgeParts {
    pub zeta: Field,
    pub z: Field,
    /// `curl ζ` as a member of `V`.
    pub curl_zeta: Field,
}

/// Solves `∫ curl ζ · curl η = ∫ u · curl η` for all `η ∈ W` and sets
/// `z = u - curl ζ`.
pub fn hodge_decompose(spaces: &Spaces, u: &Field) -> Result<HodgeParts, AnalysisError> {
    u.require(SpaceKind::V)?;
    let stiffness = forms::stiffness_nodal(&spaces.w);
    let curl = forms::curl_map(&spaces.v, &spaces.w);
    let coupling = forms::curl_coupling(&spaces.v, &spaces.w);
    let rhs = coupling.transpose().mul_vec(u.values());
    let opts = CgOptions {
        tol: HODGE_TOLERANCE,
        ..CgOptions::default()
    };
    let zeta = solve_cg(&stiffness, &rhs, opts)?.x;
    let curl_zeta = curl.mul_vec(&zeta);
    let z = u
        .values()
        .iter()
        .zip(&curl_zeta)
        .map(|(a, b)| a - b)
        .collect();
    Ok(HodgeParts {
        zeta: Field::new(spaces.w.clone(), zeta)?,
        z: u.with_values(z)?,
        curl_zeta: u.with_values(curl_zeta)?,
    })
}
