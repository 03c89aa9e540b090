//! Quadrature rules on triangles and faces.

#![allow(clippy::excessive_precision)]

use crate::mesh::{Mesh, Point};

const A1: f64 = 0.445_948_490_915_964_886_32;
const W1: f64 = 0.223_381_589_678_011_465_70;
const A2: f64 = 0.091_576_213_509_770_743_46;
const W2: f64 = 0.109_951_743_655_321_867_64;

/// Six-point rule, exact for polynomials of degree 4. Barycentric points,
/// weights summing to one.
pub const TRIANGLE: [([f64; 3], f64); 6] = [
    ([A1, A1, 1.0 - 2.0 * A1], W1),
    ([A1, 1.0 - 2.0 * A1, A1], W1),
    ([1.0 - 2.0 * A1, A1, A1], W1),
    ([A2, A2, 1.0 - 2.0 * A2], W2),
    ([A2, 1.0 - 2.0 * A2, A2], W2),
    ([1.0 - 2.0 * A2, A2, A2], W2),
];

/// Three-point Gauss-Legendre on `[0, 1]`, exact for degree 5.
pub const LINE: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

/// Six-point Gauss-Legendre on `[0, 1]`, exact for degree 11.
pub const LINE6: [(f64, f64); 6] = [
    (
        0.5 - 0.5 * 0.932_469_514_203_152_1,
        0.5 * 0.171_324_492_379_170_3,
    ),
    (
        0.5 - 0.5 * 0.661_209_386_466_264_5,
        0.5 * 0.360_761_573_048_138_6,
    ),
    (
        0.5 - 0.5 * 0.238_619_186_083_196_9,
        0.5 * 0.467_913_934_572_691_0,
    ),
    (
        0.5 + 0.5 * 0.238_619_186_083_196_9,
        0.5 * 0.467_913_934_572_691_0,
    ),
    (
        0.5 + 0.5 * 0.661_209_386_466_264_5,
        0.5 * 0.360_761_573_048_138_6,
    ),
    (
        0.5 + 0.5 * 0.932_469_514_203_152_1,
        0.5 * 0.171_324_492_379_170_3,
    ),
];

pub fn map_barycentric(verts: &[Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * verts[0][0] + l[1] * verts[1][0] + l[2] * verts[2][0],
        l[0] * verts[0][1] + l[1] * verts[1][1] + l[2] * verts[2][1],
    ]
}

/// Physical quadrature points and weights (including `|E|`) on an element.
pub fn element_points(mesh: &Mesh, element: usize) -> impl Iterator<Item = (Point, f64)> + '_ {
    let verts = mesh.element_vertices(element);
    let area = mesh.area(element);
    TRIANGLE
        .iter()
        .map(move |&(l, w)| (map_barycentric(&verts, l), w * area))
}

/// Physical quadrature points and weights (including the length) on a face.
pub fn face_points(mesh: &Mesh, face: usize) -> impl Iterator<Item = (Point, f64)> + '_ {
    let f = &mesh.faces()[face];
    let a = mesh.vertices()[f.vertices[0]];
    let b = mesh.vertices()[f.vertices[1]];
    LINE.iter().map(move |&(s, w)| {
        (
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            w * f.length,
        )
    })
}

pub fn integrate_element(mesh: &Mesh, element: usize, f: impl Fn(Point) -> f64) -> f64 {
    element_points(mesh, element).map(|(x, w)| w * f(x)).sum()
}

pub fn integrate_face(mesh: &Mesh, face: usize, f: impl Fn(Point) -> f64) -> f64 {
    face_points(mesh, face).map(|(x, w)| w * f(x)).sum()
}

/// Collapsed 6×6 Gauss rule on an element, exact for degree 10. Used to
/// interpolate non-polynomial data, where the degree 4 rule is too coarse.
pub fn integrate_element_precise(mesh: &Mesh, element: usize, f: impl Fn(Point) -> f64) -> f64 {
    let verts = mesh.element_vertices(element);
    let mut sum = 0.0;
    for &(s, ws) in &LINE6 {
        for &(t, wt) in &LINE6 {
            // (s, t) ↦ (s, t(1 - s)) on the reference triangle
            let l = [1.0 - s, s * (1.0 - t), s * t];
            sum += ws * wt * s * f(map_barycentric(&verts, l));
        }
    }
    2.0 * mesh.area(element) * sum
}

/// Six-point Gauss-Legendre on a face, exact for degree 11.
pub fn integrate_face_precise(mesh: &Mesh, face: usize, f: impl Fn(Point) -> f64) -> f64 {
    let fc = &mesh.faces()[face];
    let a = mesh.vertices()[fc.vertices[0]];
    let b = mesh.vertices()[fc.vertices[1]];
    LINE6
        .iter()
        .map(|&(s, w)| w * f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
        .sum::<f64>()
        * fc.length
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_is_degree_four() {
        // ∫_T x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = TRIANGLE
                    .iter()
                    .map(|&(l, w)| {
                        let p = map_barycentric(&verts, l);
                        0.5 * w * p[0].powi(a as i32) * p[1].powi(b as i32)
                    })
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn line_rule_is_degree_five() {
        for k in 0..=5 {
            let q: f64 = LINE.iter().map(|&(s, w)| w * s.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn precise_rules_reach_degree_ten() {
        let mesh =
            Mesh::from_elements(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        // ∫ x^a y^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for a in 0..=10u32 {
            for b in 0..=(10 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let got = integrate_element_precise(&mesh, 0, |x| {
                    x[0].powi(a as i32) * x[1].powi(b as i32)
                });
                assert!((got - exact).abs() < 1e-15, "{a} {b}");
            }
        }
        let face = (0..mesh.num_faces())
            .find(|&f| mesh.faces()[f].vertices == [0, 1])
            .unwrap();
        let got = integrate_face_precise(&mesh, face, |x| x[0].powi(11));
        assert!((got - 1.0 / 12.0).abs() < 1e-15);
    }
}
