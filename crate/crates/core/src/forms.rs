//! Global matrices of the bilinear forms used by the scheme and the
//! diagnostics.

use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::quadrature;
use crate::spaces::{p1_gradients, rt_shape, Space, SpaceKind};

/// Element areas, the diagonal of the `Q` mass matrix.
pub fn mass_q(q: &Space) -> Vec<f64> {
    assert_eq!(q.kind(), SpaceKind::Q);
    q.mesh().areas().to_vec()
}

/// `∫ φ_i · φ_j` on `V`.
pub fn mass_v(v: &Space) -> CsrMatrix {
    assert_eq!(v.kind(), SpaceKind::V);
    let mesh = v.mesh();
    let mut t = TripletBuilder::with_capacity(v.dim(), v.dim(), 9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let local = v.rt_local(e);
        let mut m = [[0.0; 3]; 3];
        for (x, w) in quadrature::element_points(mesh, e) {
            let phi = [0, 1, 2].map(|i| rt_shape(mesh, e, i, x));
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
                }
            }
        }
        for i in 0..3 {
            let (Some(di), si) = local[i] else { continue };
            for j in 0..3 {
                let (Some(dj), sj) = local[j] else { continue };
                t.push(di, dj, si * sj * m[i][j]);
            }
        }
    }
    t.build().expect("dofs in range")
}

/// `B[E, i] = ∫_E div φ_i`, so that `(B u)_E = ∫_E div u`.
pub fn divergence(q: &Space, v: &Space) -> CsrMatrix {
    assert_eq!(q.kind(), SpaceKind::Q);
    assert_eq!(v.kind(), SpaceKind::V);
    let mesh = v.mesh();
    let mut t = TripletBuilder::with_capacity(q.dim(), v.dim(), 3 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        for (dof, sign) in v.rt_local(e) {
            if let Some(d) = dof {
                t.push(e, d, sign);
            }
        }
    }
    t.build().expect("dofs in range")
}

/// `∫ div φ_i div φ_j` on `V`.
pub fn div_div(v: &Space) -> CsrMatrix {
    let mesh = v.mesh();
    let mut t = TripletBuilder::with_capacity(v.dim(), v.dim(), 9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let local = v.rt_local(e);
        let inv_area = 1.0 / mesh.area(e);
        for &(di, si) in &local {
            let Some(di) = di else { continue };
            for &(dj, sj) in &local {
                let Some(dj) = dj else { continue };
                t.push(di, dj, si * sj * inv_area);
            }
        }
    }
    t.build().expect("dofs in range")
}

/// `C[i, a] = ∫ curl η_a · φ_i`, coupling `W` (columns) to `V` (rows).
pub fn curl_coupling(v: &Space, w: &Space) -> CsrMatrix {
    assert_eq!(v.kind(), SpaceKind::V);
    assert_eq!(w.kind(), SpaceKind::W);
    let mesh = v.mesh();
    let mut t = TripletBuilder::with_capacity(v.dim(), w.dim(), 9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let grads = p1_gradients(mesh, e);
        let rt = v.rt_local(e);
        let nodal = w.nodal_local(e);
        for (x, wq) in quadrature::element_points(mesh, e) {
            for (i, &(di, si)) in rt.iter().enumerate() {
                let Some(di) = di else { continue };
                let phi = rt_shape(mesh, e, i, x);
                for (a, da) in nodal.iter().enumerate() {
                    let Some(da) = *da else { continue };
                    let curl = [grads[a][1], -grads[a][0]];
                    t.push(di, da, wq * si * (curl[0] * phi[0] + curl[1] * phi[1]));
                }
            }
        }
    }
    t.build().expect("dofs in range")
}

/// `∫ η_a η_b` on a nodal space.
pub fn mass_nodal(w: &Space) -> CsrMatrix {
    assert!(matches!(w.kind(), SpaceKind::W | SpaceKind::S));
    let mesh = w.mesh();
    let mut t = TripletBuilder::with_capacity(w.dim(), w.dim(), 9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let nodal = w.nodal_local(e);
        let area = mesh.area(e);
        for (a, da) in nodal.iter().enumerate() {
            let Some(da) = *da else { continue };
            for (b, db) in nodal.iter().enumerate() {
                let Some(db) = *db else { continue };
                let factor = if a == b { 2.0 } else { 1.0 };
                t.push(da, db, factor * area / 12.0);
            }
        }
    }
    t.build().expect("dofs in range")
}

/// `∫ curl η_a · curl η_b = ∫ ∇η_a · ∇η_b` on a nodal space.
pub fn stiffness_nodal(w: &Space) -> CsrMatrix {
    assert!(matches!(w.kind(), SpaceKind::W | SpaceKind::S));
    let mesh = w.mesh();
    let mut t = TripletBuilder::with_capacity(w.dim(), w.dim(), 9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let nodal = w.nodal_local(e);
        let g = p1_gradients(mesh, e);
        let area = mesh.area(e);
        for (a, da) in nodal.iter().enumerate() {
            let Some(da) = *da else { continue };
            for (b, db) in nodal.iter().enumerate() {
                let Some(db) = *db else { continue };
                t.push(da, db, area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
            }
        }
    }
    t.build().expect("dofs in range")
}

/// Exact representation of `curl: W → V`: the flux of `curl η` through a
/// face `(a, b)` along its normal is `η(b) - η(a)`.
pub fn curl_map(v: &Space, w: &Space) -> CsrMatrix {
    assert_eq!(v.kind(), SpaceKind::V);
    assert_eq!(w.kind(), SpaceKind::W);
    let mesh = v.mesh();
    let mut t = TripletBuilder::with_capacity(v.dim(), w.dim(), 2 * v.dim());
    for dof in 0..v.dim() {
        let [a, b] = mesh.faces()[v.entity(dof)].vertices;
        if let Some(da) = w.dof(a) {
            t.push(dof, da, -1.0);
        }
        if let Some(db) = w.dof(b) {
            t.push(dof, db, 1.0);
        }
    }
    t.build().expect("dofs in range")
}
