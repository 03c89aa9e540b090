//! The discrete spaces of the mixed method and their canonical interpolants.
//!
//! * `Q` – piecewise constants, one dof per element.
//! * `V` – lowest-order Raviart–Thomas, one dof per face: the flux
//!   `∫_Γ v·ν` through the face in the direction of its fixed normal. With
//!   the no-flux condition built in only interior faces carry dofs.
//! * `W` – continuous piecewise linears vanishing on the boundary (the 2D
//!   curl-conforming space), one dof per interior vertex.
//! * `S` – continuous piecewise linears, one dof per vertex.
//!
//! On an element `E` the Raviart–Thomas shape function of the face opposite
//! local vertex `i` is `σ (x - x_i) / (2|E|)`, with `σ = ±1` turning the
//! outward normal of `E` into the face normal. Its divergence is `σ / |E|`
//! and its curl vanishes.
//!
//! In 2D the scalar curl is `curl w = (∂_y w, -∂_x w)` and the curl of a
//! vector field is `∂_x u₂ - ∂_y u₁`.

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{Mesh, Point};
use crate::quadrature;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("operation needs a {expected:?} field, got {got:?}")]
    WrongSpace { expected: SpaceKind, got: SpaceKind },
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point ({}, {}) lies outside element {element}", point[0], point[1])]
    OutsideElement { element: usize, point: Point },
    #[error("element {element} out of range ({count} elements)")]
    ElementOutOfRange { element: usize, count: usize },
    #[error("fields live on different meshes")]
    MeshMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Q,
    V,
    W,
    S,
}

/// Tolerance on barycentric coordinates when locating a point.
const INSIDE_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct Space {
    kind: SpaceKind,
    mesh: Arc<Mesh>,
    entity_dof: Vec<Option<usize>>,
    dof_entity: Vec<usize>,
}

impl Space {
    fn build(
        kind: SpaceKind,
        mesh: Arc<Mesh>,
        keep: impl Fn(usize) -> bool,
        entities: usize,
    ) -> Arc<Self> {
        let mut entity_dof = vec![None; entities];
        let mut dof_entity = Vec::new();
        for (e, slot) in entity_dof.iter_mut().enumerate() {
            if keep(e) {
                *slot = Some(dof_entity.len());
                dof_entity.push(e);
            }
        }
        Arc::new(Self {
            kind,
            mesh,
            entity_dof,
            dof_entity,
        })
    }

    pub fn q(mesh: Arc<Mesh>) -> Arc<Self> {
        let n = mesh.num_elements();
        Self::build(SpaceKind::Q, mesh, |_| true, n)
    }

    /// Raviart–Thomas fields with zero normal flux on the boundary.
    pub fn v(mesh: Arc<Mesh>) -> Arc<Self> {
        let n = mesh.num_faces();
        let m = mesh.clone();
        Self::build(SpaceKind::V, mesh, move |f| m.faces()[f].is_interior(), n)
    }

    /// Raviart–Thomas fields without boundary conditions.
    pub fn v_unconstrained(mesh: Arc<Mesh>) -> Arc<Self> {
        let n = mesh.num_faces();
        Self::build(SpaceKind::V, mesh, |_| true, n)
    }

    /// Continuous piecewise linears vanishing on the boundary.
    pub fn w(mesh: Arc<Mesh>) -> Arc<Self> {
        let n = mesh.num_vertices();
        let m = mesh.clone();
        Self::build(SpaceKind::W, mesh, move |v| !m.is_boundary_vertex(v), n)
    }

    pub fn s(mesh: Arc<Mesh>) -> Arc<Self> {
        let n = mesh.num_vertices();
        Self::build(SpaceKind::S, mesh, |_| true, n)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dof_entity.len()
    }

    /// Dof attached to a mesh entity (element, face or vertex by kind).
    pub fn dof(&self, entity: usize) -> Option<usize> {
        self.entity_dof[entity]
    }

    pub fn entity(&self, dof: usize) -> usize {
        self.dof_entity[dof]
    }

    /// Dofs and orientation signs of the three local Raviart–Thomas shape
    /// functions of `element`.
    pub fn rt_local(&self, element: usize) -> [(Option<usize>, f64); 3] {
        debug_assert_eq!(self.kind, SpaceKind::V);
        self.mesh
            .element_faces(element)
            .map(|f| (self.entity_dof[f], self.mesh.outward_sign(f, element)))
    }

    /// Dofs of the three local nodal shape functions of `element`.
    pub fn nodal_local(&self, element: usize) -> [Option<usize>; 3] {
        debug_assert!(matches!(self.kind, SpaceKind::W | SpaceKind::S));
        self.mesh.elements()[element].map(|v| self.entity_dof[v])
    }

    fn check_element(&self, element: usize) -> Result<(), SpaceError> {
        if element >= self.mesh.num_elements() {
            return Err(SpaceError::ElementOutOfRange {
                element,
                count: self.mesh.num_elements(),
            });
        }
        Ok(())
    }

    pub fn interpolate_q(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> Field {
        assert_eq!(self.kind, SpaceKind::Q);
        let mesh = &self.mesh;
        let values = (0..mesh.num_elements())
            .map(|e| quadrature::integrate_element_precise(mesh, e, &f) / mesh.area(e))
            .collect();
        Field::from_parts(self.clone(), values)
    }

    /// Face fluxes `∫_Γ v·ν` of a vector field.
    pub fn interpolate_v(self: &Arc<Self>, f: impl Fn(Point) -> [f64; 2]) -> Field {
        assert_eq!(self.kind, SpaceKind::V);
        let mesh = &self.mesh;
        let values = self
            .dof_entity
            .iter()
            .map(|&face| {
                let n = mesh.faces()[face].normal;
                quadrature::integrate_face_precise(mesh, face, |x| {
                    let v = f(x);
                    v[0] * n[0] + v[1] * n[1]
                })
            })
            .collect();
        Field::from_parts(self.clone(), values)
    }

    /// Vertex interpolation; `W` only samples interior vertices.
    pub fn interpolate_w(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> Field {
        assert_eq!(self.kind, SpaceKind::W);
        self.interpolate_nodal(f)
    }

    pub fn interpolate_s(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> Field {
        assert_eq!(self.kind, SpaceKind::S);
        self.interpolate_nodal(f)
    }

    fn interpolate_nodal(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> Field {
        let values = self
            .dof_entity
            .iter()
            .map(|&v| f(self.mesh.vertices()[v]))
            .collect();
        Field::from_parts(self.clone(), values)
    }
}

/// `max_E |div Π^V v - Π^Q div v|` on an unconstrained `V` space, with the
/// divergence of `v` supplied separately.
pub fn commuting_defect(
    mesh: &Arc<Mesh>,
    v: impl Fn(Point) -> [f64; 2],
    div_v: impl Fn(Point) -> f64,
) -> f64 {
    let pv = Space::v_unconstrained(mesh.clone()).interpolate_v(v);
    let pq = Space::q(mesh.clone()).interpolate_q(div_v);
    (0..mesh.num_elements())
        .map(|e| (pv.div_unchecked(e) - pq.values()[e]).abs())
        .fold(0.0, f64::max)
}

/// The four spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    pub q: Arc<Space>,
    pub v: Arc<Space>,
    pub w: Arc<Space>,
    pub s: Arc<Space>,
}

impl Spaces {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        Self {
            q: Space::q(mesh.clone()),
            v: Space::v(mesh.clone()),
            w: Space::w(mesh.clone()),
            s: Space::s(mesh.clone()),
            mesh,
        }
    }
}

/// Gradients of the three barycentric coordinates on an element.
pub fn p1_gradients(mesh: &Mesh, element: usize) -> [[f64; 2]; 3] {
    let [a, b, c] = mesh.element_vertices(element);
    let d = 2.0 * mesh.area(element);
    [
        [(b[1] - c[1]) / d, (c[0] - b[0]) / d],
        [(c[1] - a[1]) / d, (a[0] - c[0]) / d],
        [(a[1] - b[1]) / d, (b[0] - a[0]) / d],
    ]
}

/// Unsigned Raviart–Thomas shape function of local face `i` at `x`.
pub fn rt_shape(mesh: &Mesh, element: usize, i: usize, x: Point) -> [f64; 2] {
    let xi = mesh.vertices()[mesh.elements()[element][i]];
    let s = 0.5 / mesh.area(element);
    [s * (x[0] - xi[0]), s * (x[1] - xi[1])]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector([f64; 2]),
}

impl Value {
    pub fn scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(s) => Some(s),
            Value::Vector(_) => None,
        }
    }

    pub fn vector(self) -> Option<[f64; 2]> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }
}

/// Coefficient vector of a discrete function.
#[derive(Clone, Debug)]
pub struct Field {
    space: Arc<Space>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(space: Arc<Space>, values: Vec<f64>) -> Result<Self, SpaceError> {
        if values.len() != space.dim() {
            return Err(SpaceError::LengthMismatch {
                expected: space.dim(),
                got: values.len(),
            });
        }
        Ok(Self { space, values })
    }

    pub(crate) fn from_parts(space: Arc<Space>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.dim());
        Self { space, values }
    }

    pub fn zeros(space: Arc<Space>) -> Self {
        let n = space.dim();
        Self::from_parts(space, vec![0.0; n])
    }

    pub fn constant(space: Arc<Space>, c: f64) -> Self {
        let n = space.dim();
        Self::from_parts(space, vec![c; n])
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn kind(&self) -> SpaceKind {
        self.space.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.space.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same space, new coefficients.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Field, SpaceError> {
        Field::new(self.space.clone(), values)
    }

    pub fn require(&self, kind: SpaceKind) -> Result<(), SpaceError> {
        if self.kind() != kind {
            return Err(SpaceError::WrongSpace {
                expected: kind,
                got: self.kind(),
            });
        }
        Ok(())
    }

    /// Value at a point of `element`, checking that the point lies inside.
    pub fn eval(&self, element: usize, point: Point) -> Result<Value, SpaceError> {
        self.space.check_element(element)?;
        let l = self.mesh().barycentric(element, point);
        if l.iter().any(|&c| c < -INSIDE_TOL) {
            return Err(SpaceError::OutsideElement { element, point });
        }
        Ok(match self.kind() {
            SpaceKind::V => Value::Vector(self.vector_at(element, point)),
            _ => Value::Scalar(self.scalar_at(element, point)),
        })
    }

    /// Scalar value without the containment check (Q, W, S).
    pub fn scalar_at(&self, element: usize, point: Point) -> f64 {
        match self.kind() {
            SpaceKind::Q => self.values[element],
            SpaceKind::W | SpaceKind::S => {
                let l = self.mesh().barycentric(element, point);
                self.space
                    .nodal_local(element)
                    .iter()
                    .zip(l)
                    .map(|(d, li)| d.map_or(0.0, |d| self.values[d] * li))
                    .sum()
            }
            SpaceKind::V => panic!("scalar_at called on a vector field"),
        }
    }

    /// Vector value without the containment check (V).
    pub fn vector_at(&self, element: usize, point: Point) -> [f64; 2] {
        assert_eq!(self.kind(), SpaceKind::V, "vector_at needs a V field");
        let mesh = self.mesh();
        let mut v = [0.0; 2];
        for (i, (dof, sign)) in self.space.rt_local(element).into_iter().enumerate() {
            if let Some(d) = dof {
                let phi = rt_shape(mesh, element, i, point);
                let c = sign * self.values[d];
                v[0] += c * phi[0];
                v[1] += c * phi[1];
            }
        }
        v
    }

    /// Elementwise divergence of a V field.
    pub fn eval_div(&self, element: usize) -> Result<f64, SpaceError> {
        self.require(SpaceKind::V)?;
        self.space.check_element(element)?;
        Ok(self.div_unchecked(element))
    }

    pub(crate) fn div_unchecked(&self, element: usize) -> f64 {
        let flux: f64 = self
            .space
            .rt_local(element)
            .iter()
            .map(|(d, s)| d.map_or(0.0, |d| s * self.values[d]))
            .sum();
        flux / self.mesh().area(element)
    }

    /// Elementwise divergence of a V field as a vector over elements.
    pub fn divergence(&self) -> Result<Vec<f64>, SpaceError> {
        self.require(SpaceKind::V)?;
        Ok((0..self.mesh().num_elements())
            .map(|e| self.div_unchecked(e))
            .collect())
    }

    /// Gradient of a W or S field on an element.
    pub fn eval_grad(&self, element: usize) -> Result<[f64; 2], SpaceError> {
        if !matches!(self.kind(), SpaceKind::W | SpaceKind::S) {
            return Err(SpaceError::WrongSpace {
                expected: SpaceKind::W,
                got: self.kind(),
            });
        }
        self.space.check_element(element)?;
        let grads = p1_gradients(self.mesh(), element);
        let mut g = [0.0; 2];
        for (d, gi) in self.space.nodal_local(element).iter().zip(grads) {
            if let Some(d) = d {
                g[0] += self.values[*d] * gi[0];
                g[1] += self.values[*d] * gi[1];
            }
        }
        Ok(g)
    }

    /// `curl w = (∂_y w, -∂_x w)` of a W field on an element.
    pub fn eval_curl(&self, element: usize) -> Result<[f64; 2], SpaceError> {
        self.require(SpaceKind::W)?;
        let g = self.eval_grad(element)?;
        Ok([g[1], -g[0]])
    }

    /// Elementwise (broken) curl `∂_x u₂ - ∂_y u₁` of a V field; identically
    /// zero for lowest-order Raviart–Thomas shape functions.
    pub fn eval_curl_vec(&self, element: usize) -> Result<f64, SpaceError> {
        self.require(SpaceKind::V)?;
        self.space.check_element(element)?;
        // every shape function is a multiple of (x - x_i), whose curl is zero
        Ok(0.0)
    }

    /// `‖f‖_{L^p}`, by quadrature.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mesh = self.mesh();
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for e in 0..mesh.num_elements() {
            for (x, w) in quadrature::element_points(mesh, e) {
                let m = match self.kind() {
                    SpaceKind::V => {
                        let v = self.vector_at(e, x);
                        (v[0] * v[0] + v[1] * v[1]).sqrt()
                    }
                    _ => self.scalar_at(e, x).abs(),
                };
                if p.is_infinite() {
                    max = max.max(m);
                } else {
                    sum += w * m.powf(p);
                }
            }
        }
        if p.is_infinite() {
            max
        } else {
            sum.powf(1.0 / p)
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// Linear combination `a·self + b·other` on the same space.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field, SpaceError> {
        if !Arc::ptr_eq(&self.space, &other.space) && self.space.dim() != other.space.dim() {
            return Err(SpaceError::LengthMismatch {
                expected: self.space.dim(),
                got: other.space.dim(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Field::from_parts(self.space.clone(), values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn reference_mesh() -> Arc<Mesh> {
        Arc::new(
            Mesh::from_elements(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap(),
        )
    }

    #[test]
    fn dof_counts() {
        let mesh = Arc::new(Mesh::unit_square(4).unwrap());
        let s = Spaces::new(mesh.clone());
        assert_eq!(s.q.dim(), mesh.num_elements());
        assert_eq!(s.v.dim(), mesh.num_interior_faces());
        assert_eq!(s.w.dim(), 9);
        assert_eq!(s.s.dim(), mesh.num_vertices());
        // curl W and the divergence complement fill V exactly
        assert_eq!(s.w.dim() + (s.q.dim() - 1), s.v.dim());
    }

    #[test]
    fn hypotenuse_basis_has_divergence_two() {
        let mesh = reference_mesh();
        let v = Space::v_unconstrained(mesh.clone());
        // face opposite vertex 0 is the hypotenuse
        let hyp = mesh.element_faces(0)[0];
        let mut values = vec![0.0; v.dim()];
        values[v.dof(hyp).unwrap()] = 1.0;
        let field = Field::new(v, values).unwrap();
        let div = field.eval_div(0).unwrap();
        assert!((div.abs() - 2.0).abs() < 1e-14);
        // unit flux through the face along its normal
        let n = mesh.faces()[hyp].normal;
        let flux = quadrature::integrate_face(&mesh, hyp, |x| {
            let u = field.vector_at(0, x);
            u[0] * n[0] + u[1] * n[1]
        });
        assert!((flux - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hat_function_values() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        let w = Space::w(mesh.clone());
        assert_eq!(w.dim(), 1);
        let centre = w.entity(0);
        let hat = Field::new(w, vec![1.0]).unwrap();
        for e in 0..mesh.num_elements() {
            for &v in &mesh.elements()[e] {
                let x = mesh.vertices()[v];
                let expected = if v == centre { 1.0 } else { 0.0 };
                assert_eq!(hat.eval(e, x).unwrap().scalar().unwrap(), expected);
            }
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let mesh = reference_mesh();
        let q = Space::q(mesh);
        let f = Field::constant(q, 1.0);
        assert!(matches!(
            f.eval(0, [0.8, 0.8]),
            Err(SpaceError::OutsideElement { .. })
        ));
        assert!(f.eval(0, [0.5, 0.5]).is_ok());
        assert!(matches!(
            f.eval(3, [0.1, 0.1]),
            Err(SpaceError::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn normal_component_is_continuous() {
        let mesh = Arc::new(Mesh::unit_square(4).unwrap());
        let v = Space::v(mesh.clone());
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let values = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = Field::new(v, values).unwrap();
        for (f, face) in mesh.faces().iter().enumerate() {
            let n = face.normal;
            for (x, _) in quadrature::face_points(&mesh, f) {
                let dot = |u: [f64; 2]| u[0] * n[0] + u[1] * n[1];
                match (face.minus, face.plus) {
                    (Some(m), Some(p)) => {
                        let jump = dot(field.vector_at(p, x)) - dot(field.vector_at(m, x));
                        assert!(jump.abs() <= 1e-12);
                    }
                    (Some(e), None) | (None, Some(e)) => {
                        assert!(dot(field.vector_at(e, x)).abs() <= 1e-12);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn w_fields_vanish_on_boundary() {
        let mesh = Arc::new(Mesh::unit_square(3).unwrap());
        let w = Space::w(mesh.clone());
        let field = Field::constant(w, 1.0);
        for e in 0..mesh.num_elements() {
            for &v in &mesh.elements()[e] {
                if mesh.is_boundary_vertex(v) {
                    assert_eq!(field.scalar_at(e, mesh.vertices()[v]), 0.0);
                }
            }
        }
    }

    #[test]
    fn linear_field_is_reproduced() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        let v = Space::v_unconstrained(mesh.clone());
        let field = v.interpolate_v(|x| x);
        for e in 0..mesh.num_elements() {
            assert!((field.eval_div(e).unwrap() - 2.0).abs() < 1e-13);
            for (x, _) in quadrature::element_points(&mesh, e) {
                let u = field.vector_at(e, x);
                assert!((u[0] - x[0]).abs() < 1e-13 && (u[1] - x[1]).abs() < 1e-13);
            }
        }
        let q = Space::q(mesh);
        assert!(q
            .interpolate_q(|_| 2.5)
            .values()
            .iter()
            .all(|&c| (c - 2.5).abs() < 1e-15));
    }

    #[test]
    fn curl_of_rt_field_vanishes_elementwise() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        let v = Space::v(mesh);
        let f = Field::constant(v, 0.7);
        assert_eq!(f.eval_curl_vec(0).unwrap(), 0.0);
    }

    #[test]
    fn commuting_diagram_on_polynomials() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        assert_eq!(mesh.num_elements(), 8);
        let d = commuting_defect(&mesh, |x| [x[0] * x[0], x[0] * x[1]], |x| 3.0 * x[0]);
        assert!(d <= 1e-10, "{d}");
        let d = commuting_defect(&mesh, |_| [0.3, -1.7], |_| 0.0);
        // zero up to roundoff in the face sums
        assert!(d <= 1e-14, "{d}");
    }
}
