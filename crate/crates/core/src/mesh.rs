//! Conforming triangulations of rectangular domains.
//!
//! Every edge of the triangulation is a *face*. Each face carries one fixed
//! unit normal `ν`, chosen from the lexicographic order of its two vertex
//! indices: for a face `(a, b)` with `a < b` and tangent `t = x_b - x_a`,
//! `ν = (t_y, -t_x) / |t|`. The element that `ν` points out of is the
//! face's *minus* element, the other one its *plus* element, so that the
//! jump of a piecewise function is `⟦f⟧ = f₊ - f₋`.
//!
//! Local numbering: local face `i` of an element is the edge opposite its
//! local vertex `i`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("element counts must be at least 1 (got nx={nx}, ny={ny})")]
    ZeroCount { nx: usize, ny: usize },
    #[error("degenerate bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]")]
    DegenerateBounds {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    #[error("element {element} has nonpositive area {area:e}")]
    DegenerateElement { element: usize, area: f64 },
    #[error("element {element} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange {
        element: usize,
        vertex: usize,
        count: usize,
    },
    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),
    #[error("face {face} is not adjacent to element {element}")]
    NotAdjacent { face: usize, element: usize },
    #[error("index {index} out of range (count {count})")]
    OutOfRange { index: usize, count: usize },
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    /// Vertex indices, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Fixed unit normal of the face.
    pub normal: Point,
    pub length: f64,
    /// Element the normal points out of.
    pub minus: Option<usize>,
    /// Element the normal points into.
    pub plus: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none() || self.plus.is_none()
    }

    pub fn is_interior(&self) -> bool {
        !self.is_boundary()
    }

    pub fn midpoint(&self, mesh: &Mesh) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// The single element of a boundary face.
    pub fn boundary_element(&self) -> Option<usize> {
        match (self.minus, self.plus) {
            (Some(e), None) | (None, Some(e)) => Some(e),
            _ => None,
        }
    }
}

/// An immutable triangulation with face connectivity.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
    h: f64,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds the connectivity for a list of triangles. Clockwise triangles
    /// are reoriented; degenerate ones are rejected.
    pub fn from_elements(
        vertices: Vec<Point>,
        mut elements: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange {
                        element: e,
                        vertex: v,
                        count: nv,
                    });
                }
            }
            let mut area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area < 0.0 {
                tri.swap(1, 2);
                area = -area;
            }
            if !(area > 0.0) {
                return Err(MeshError::DegenerateElement { element: e, area });
            }
            areas.push(area);
            let [a, b, c] = tri.map(|v| vertices[v]);
            diameters.push(dist(a, b).max(dist(b, c)).max(dist(c, a)));
        }

        let mut face_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter().enumerate() {
            let mut local = [0usize; 3];
            for i in 0..3 {
                let p = tri[(i + 1) % 3];
                let q = tri[(i + 2) % 3];
                let key = (p.min(q), p.max(q));
                let f = *face_index.entry(key).or_insert_with(|| {
                    let (a, b) = (vertices[key.0], vertices[key.1]);
                    let length = dist(a, b);
                    let normal = [(b[1] - a[1]) / length, -(b[0] - a[0]) / length];
                    faces.push(Face {
                        vertices: [key.0, key.1],
                        normal,
                        length,
                        minus: None,
                        plus: None,
                    });
                    faces.len() - 1
                });
                // the opposite vertex lies on the inner side of the face
                let face = &mut faces[f];
                let opp = vertices[tri[i]];
                let a = vertices[key.0];
                let outward =
                    face.normal[0] * (a[0] - opp[0]) + face.normal[1] * (a[1] - opp[1]) > 0.0;
                let slot = if outward {
                    &mut face.minus
                } else {
                    &mut face.plus
                };
                if slot.is_some() {
                    return Err(MeshError::NonManifoldEdge(key.0, key.1));
                }
                *slot = Some(e);
                local[i] = f;
            }
            element_faces.push(local);
        }

        let mut boundary_vertex = vec![false; nv];
        for face in faces.iter().filter(|f| f.is_boundary()) {
            boundary_vertex[face.vertices[0]] = true;
            boundary_vertex[face.vertices[1]] = true;
        }
        let h = diameters.iter().cloned().fold(0.0, f64::max);

        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            boundary_vertex,
            areas,
            diameters,
            h,
        })
    }

    /// Structured triangulation of `[x_min, x_max] x [y_min, y_max]`: an
    /// `nx x ny` grid of quads, each cut along its lower-left to upper-right
    /// diagonal.
    pub fn build_structured_rect(nx: usize, ny: usize, bounds: Rect) -> Result<Self, MeshError> {
        if nx == 0 || ny == 0 {
            return Err(MeshError::ZeroCount { nx, ny });
        }
        let Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        } = bounds;
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || !(x_max > x_min) || !(y_max > y_min) {
            return Err(MeshError::DegenerateBounds {
                x_min,
                x_max,
                y_min,
                y_max,
            });
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = y_min + (y_max - y_min) * j as f64 / ny as f64;
            for i in 0..=nx {
                let x = x_min + (x_max - x_min) * i as f64 / nx as f64;
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        Self::from_elements(vertices, elements)
    }

    pub fn unit_square(n: usize) -> Result<Self, MeshError> {
        Self::build_structured_rect(n, n, Rect::unit())
    }

    /// Splits every triangle into four congruent children through the edge
    /// midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        self.refine_with_parents().0
    }

    /// Like [`Mesh::refine_uniform`], also returning the parent element of
    /// every child element.
    pub fn refine_with_parents(&self) -> (Mesh, Vec<usize>) {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.faces.iter().map(|f| f.midpoint(self)));
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        let mut parents = Vec::with_capacity(4 * self.elements.len());
        for (e, tri) in self.elements.iter().enumerate() {
            // midpoint of the edge opposite local vertex i
            let m = self.element_faces[e].map(|f| nv + f);
            let [a, b, c] = *tri;
            elements.push([a, m[2], m[1]]);
            elements.push([m[2], b, m[0]]);
            elements.push([m[1], m[0], c]);
            elements.push([m[0], m[1], m[2]]);
            parents.extend([e; 4]);
        }
        let mesh = Mesh::from_elements(vertices, elements)
            .expect("midpoint refinement of a valid mesh is valid");
        (mesh, parents)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn element_faces(&self, element: usize) -> [usize; 3] {
        self.element_faces[element]
    }

    pub fn element_vertices(&self, element: usize) -> [Point; 3] {
        self.elements[element].map(|v| self.vertices[v])
    }

    pub fn is_boundary_vertex(&self, vertex: usize) -> bool {
        self.boundary_vertex[vertex]
    }

    pub fn area(&self, element: usize) -> f64 {
        self.areas[element]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn diameter(&self, element: usize) -> f64 {
        self.diameters[element]
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn centroid(&self, element: usize) -> Point {
        let [a, b, c] = self.element_vertices(element);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn inradius(&self, element: usize) -> f64 {
        let [a, b, c] = self.element_vertices(element);
        2.0 * self.areas[element] / (dist(a, b) + dist(b, c) + dist(c, a))
    }

    /// Shape-regularity constant `max_E h_E / ρ_E`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| self.diameters[e] / self.inradius(e))
            .fold(0.0, f64::max)
    }

    /// Euler characteristic `V - F + E`, 1 for a simply connected domain.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_faces() as i64 + self.num_elements() as i64
    }

    /// Elements sharing a face with `element`.
    pub fn neighbors(&self, element: usize) -> Vec<usize> {
        self.element_faces[element]
            .iter()
            .filter_map(|&f| {
                let face = &self.faces[f];
                match (face.minus, face.plus) {
                    (Some(m), Some(p)) => Some(if m == element { p } else { m }),
                    _ => None,
                }
            })
            .collect()
    }

    /// `+1` if `element` is the plus side of `face`, `-1` if it is the minus
    /// side.
    pub fn jump_sign(&self, face: usize, element: usize) -> Result<f64, MeshError> {
        let f = self.faces.get(face).ok_or(MeshError::OutOfRange {
            index: face,
            count: self.faces.len(),
        })?;
        if f.plus == Some(element) {
            Ok(1.0)
        } else if f.minus == Some(element) {
            Ok(-1.0)
        } else {
            Err(MeshError::NotAdjacent { face, element })
        }
    }

    /// Sign turning the face normal into the outward normal of `element`.
    pub(crate) fn outward_sign(&self, face: usize, element: usize) -> f64 {
        if self.faces[face].minus == Some(element) {
            1.0
        } else {
            -1.0
        }
    }

    /// Barycentric coordinates of `point` with respect to `element`.
    pub fn barycentric(&self, element: usize, point: Point) -> [f64; 3] {
        let [a, b, c] = self.element_vertices(element);
        let det = 2.0 * self.areas[element];
        let l1 = signed_area(point, b, c) * 2.0 / det;
        let l2 = signed_area(a, point, c) * 2.0 / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    /// Reads the plain-text mesh format:
    ///
    /// ```text
    /// vertices N
    /// x y            (N lines)
    /// elements M
    /// a b c          (M lines, 0-based vertex indices)
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| {
            let (n, l) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                message: format!("missing `{key}` header"),
            })?;
            let mut it = l.split_whitespace();
            match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
                (Some(k), Some(Ok(count)), None) if k == key => Ok(count),
                _ => Err(MeshError::Parse {
                    line: n,
                    message: format!("expected `{key} <count>`"),
                }),
            }
        };
        let nv = header(&mut lines, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (n, l) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                message: "unexpected end of file in vertex block".into(),
            })?;
            let vals: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
            match vals.as_deref() {
                Ok([x, y]) => vertices.push([*x, *y]),
                _ => {
                    return Err(MeshError::Parse {
                        line: n,
                        message: "expected two coordinates".into(),
                    })
                }
            }
        }
        let ne = header(&mut lines, "elements")?;
        let mut elements = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (n, l) = lines.next().ok_or(MeshError::Parse {
                line: 0,
                message: "unexpected end of file in element block".into(),
            })?;
            let vals: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
            match vals.as_deref() {
                Ok([a, b, c]) => elements.push([*a, *b, *c]),
                _ => {
                    return Err(MeshError::Parse {
                        line: n,
                        message: "expected three vertex indices".into(),
                    })
                }
            }
        }
        if let Some((n, _)) = lines.next() {
            return Err(MeshError::Parse {
                line: n,
                message: "trailing content after element block".into(),
            });
        }
        Self::from_elements(vertices, elements)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", v[0], v[1]);
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for t in &self.elements {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

impl Default for Rect {
    fn default() -> Self {
        Self::unit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_quad_counts() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_faces(), 5);
        assert_eq!(m.num_interior_faces(), 1);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_counts() {
        let m = Mesh::unit_square(2).unwrap();
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.num_faces(), 16);
        assert_eq!(m.num_interior_faces(), 8);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Mesh::build_structured_rect(0, 3, Rect::unit()),
            Err(MeshError::ZeroCount { .. })
        ));
        let flat = Rect {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 2.0,
            y_max: 2.0,
        };
        assert!(matches!(
            Mesh::build_structured_rect(2, 2, flat),
            Err(MeshError::DegenerateBounds { .. })
        ));
        let collinear =
            Mesh::from_elements(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(
            collinear,
            Err(MeshError::DegenerateElement { .. })
        ));
    }

    #[test]
    fn jump_signs_on_interior_face() {
        let m = Mesh::unit_square(1).unwrap();
        let (f, face) = m
            .faces()
            .iter()
            .enumerate()
            .find(|(_, f)| f.is_interior())
            .unwrap();
        let (lo, hi) = (face.minus.unwrap(), face.plus.unwrap());
        assert_eq!(m.jump_sign(f, lo).unwrap(), -1.0);
        assert_eq!(m.jump_sign(f, hi).unwrap(), 1.0);
        let (cm, cp) = (m.centroid(lo), m.centroid(hi));
        let d = face.normal[0] * (cp[0] - cm[0]) + face.normal[1] * (cp[1] - cm[1]);
        assert!(d > 0.0);
    }

    #[test]
    fn boundary_face_has_one_element() {
        let m = Mesh::unit_square(3).unwrap();
        for (f, face) in m.faces().iter().enumerate() {
            if face.is_boundary() {
                let e = face.boundary_element().unwrap();
                assert!(m.jump_sign(f, e).is_ok());
                let other = (e + 1) % m.num_elements();
                if !m.element_faces(other).contains(&f) {
                    assert!(matches!(
                        m.jump_sign(f, other),
                        Err(MeshError::NotAdjacent { .. })
                    ));
                }
            }
        }
    }

    #[test]
    fn neighbors_of_corner_element() {
        let m = Mesh::unit_square(2).unwrap();
        // element 0 is the lower triangle of the lower-left quad
        let n = m.neighbors(0);
        assert_eq!(n.len(), 2);
        for e in n {
            assert!(m.neighbors(e).contains(&0));
        }
    }

    #[test]
    fn refinement_quarters_and_halves() {
        let m = Mesh::unit_square(1).unwrap();
        let (r, parents) = m.refine_with_parents();
        assert_eq!(r.num_elements(), 8);
        assert_eq!(r.h(), m.h() / 2.0);
        assert!((r.shape_regularity() - m.shape_regularity()).abs() < 1e-12);
        // nested: child centroid inside parent
        for (c, &p) in parents.iter().enumerate() {
            let l = m.barycentric(p, r.centroid(c));
            assert!(l.iter().all(|&v| v > 0.0));
        }
        assert_eq!(r.euler_characteristic(), 1);
    }

    #[test]
    fn text_roundtrip() {
        let m = Mesh::unit_square(3).unwrap();
        let back = Mesh::parse(&m.to_text()).unwrap();
        assert_eq!(back.elements(), m.elements());
        assert_eq!(back.vertices(), m.vertices());
    }

    #[test]
    fn parse_reports_line() {
        let text = "vertices 3\n0 0\n1 0\n0 1\nelements 1\n0 1\n";
        match Mesh::parse(text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let cw = "vertices 3\n0 0\n1 0\n0 1\nelements 1\n0 2 1\n";
        let m = Mesh::parse(cw).unwrap();
        assert!(m.area(0) > 0.0);
    }
}
