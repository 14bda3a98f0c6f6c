//! Taylor-Hood P2/P1 discretization: quadrature, bases, DOF maps and assembly.

mod assembly;
pub mod basis;
mod dofs;
pub mod quadrature;
mod solution;

pub use assembly::{assemble, SaddleSystem, FACET_DEGREE, LOAD_DEGREE, MATRIX_DEGREE};
pub use dofs::{Constraints, DofMap};
pub use solution::Solution;

use crate::mesh::{simplex_measure, Mesh, Point};

/// Affine map data of one element: vertices, measure and barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub dim: usize,
    pub points: [Point; 4],
    pub volume: f64,
    pub grad_lambda: [[f64; 3]; 4],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> ElementGeometry {
        Self::from_points(mesh.dim(), mesh.element_points(t))
    }

    pub fn from_points(dim: usize, points: [Point; 4]) -> ElementGeometry {
        let e = |k: usize| -> [f64; 3] {
            [
                points[k][0] - points[0][0],
                points[k][1] - points[0][1],
                points[k][2] - points[0][2],
            ]
        };
        let mut g = [[0.0; 3]; 4];
        let (det, volume) = if dim == 2 {
            let (e1, e2) = (e(1), e(2));
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            g[1] = [e2[1] / det, -e2[0] / det, 0.0];
            g[2] = [-e1[1] / det, e1[0] / det, 0.0];
            (det, det.abs() / 2.0)
        } else {
            let (e1, e2, e3) = (e(1), e(2), e(3));
            let c23 = cross(&e2, &e3);
            let c31 = cross(&e3, &e1);
            let c12 = cross(&e1, &e2);
            let det = dot(&e1, &c23);
            for k in 0..3 {
                g[1][k] = c23[k] / det;
                g[2][k] = c31[k] / det;
                g[3][k] = c12[k] / det;
            }
            (det, det.abs() / 6.0)
        };
        debug_assert!(det != 0.0);
        for k in 0..3 {
            g[0][k] = -(1..=dim).map(|i| g[i][k]).sum::<f64>();
        }
        ElementGeometry {
            dim,
            points,
            volume,
            grad_lambda: g,
        }
    }

    /// Physical point with barycentric coordinates `lambda`.
    pub fn map(&self, lambda: &[f64; 4]) -> Point {
        let mut x = [0.0; 3];
        for (l, p) in lambda.iter().zip(&self.points).take(self.dim + 1) {
            for k in 0..3 {
                x[k] += l * p[k];
            }
        }
        x
    }

    /// Scale from reference quadrature weights to physical ones.
    pub fn jacobian(&self) -> f64 {
        self.volume / quadrature::reference_measure(self.dim)
    }

    pub fn facet_points(&self, k: usize) -> Vec<Point> {
        (0..=self.dim).filter(|&i| i != k).map(|i| self.points[i]).collect()
    }

    /// Measure of the facet opposite local vertex `k`.
    pub fn facet_measure(&self, k: usize) -> f64 {
        simplex_measure(&self.facet_points(k))
    }

    /// Unit outward normal on the facet opposite local vertex `k`.
    pub fn outward_normal(&self, k: usize) -> [f64; 3] {
        let g = &self.grad_lambda[k];
        let n = dot(g, g).sqrt();
        [-g[0] / n, -g[1] / n, -g[2] / n]
    }

    /// Quadrature on the facet opposite local vertex `k`: element barycentric
    /// coordinates and physical weights.
    pub fn facet_quadrature(&self, k: usize, degree: usize) -> Vec<([f64; 4], f64)> {
        let rule = quadrature::rule(self.dim - 1, degree);
        let scale = self.facet_measure(k) / rule.reference_measure();
        let local: Vec<usize> = (0..=self.dim).filter(|&i| i != k).collect();
        rule.iter()
            .map(|(fl, w)| {
                let mut l = [0.0; 4];
                for (m, &i) in local.iter().enumerate() {
                    l[i] = fl[m];
                }
                (l, w * scale)
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_gradients_are_dual_to_vertices() {
        let tri = [[0.3, 0.1, 0.0], [1.7, 0.4, 0.0], [0.2, 1.9, 0.0], [0.0; 3]];
        let tet = [[0.0, 0.0, 0.0], [1.0, 0.2, 0.1], [0.1, 1.3, 0.0], [0.3, 0.2, 0.8]];
        for (dim, pts) in [(2, tri), (3, tet)] {
            let g = ElementGeometry::from_points(dim, pts);
            for i in 0..=dim {
                for j in 1..=dim {
                    let e = [
                        pts[j][0] - pts[0][0],
                        pts[j][1] - pts[0][1],
                        pts[j][2] - pts[0][2],
                    ];
                    let expected = if i == j { 1.0 } else if i == 0 { -1.0 } else { 0.0 };
                    assert!((dot(&g.grad_lambda[i], &e) - expected).abs() < 1e-14);
                }
            }
            assert!(g.volume > 0.0);
            for k in 0..=dim {
                // outward: pointing away from the opposite vertex
                let n = g.outward_normal(k);
                let fp = g.facet_points(k)[0];
                let to_vertex = [pts[k][0] - fp[0], pts[k][1] - fp[1], pts[k][2] - fp[2]];
                assert!(dot(&n, &to_vertex) < 0.0);
                let total: f64 = g.facet_quadrature(k, 2).iter().map(|(_, w)| w).sum();
                assert!((total - g.facet_measure(k)).abs() < 1e-14);
                for (l, _) in g.facet_quadrature(k, 2) {
                    assert_eq!(l[k], 0.0);
                }
            }
        }
    }
}
