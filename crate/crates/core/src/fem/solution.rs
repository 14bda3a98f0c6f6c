use super::basis::{n_p2, p2_gradients, p2_laplacians, p2_values, MAX_P2};
use super::{DofMap, ElementGeometry};
use crate::mesh::{Mesh, Point};

/// Discrete velocity and pressure coefficients together with their numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    dofs: DofMap,
    velocity: Vec<f64>,
    pressure: Vec<f64>,
}

impl Solution {
    pub fn new(dofs: DofMap, velocity: Vec<f64>, pressure: Vec<f64>) -> Solution {
        assert_eq!(velocity.len(), dofs.n_velocity());
        assert_eq!(pressure.len(), dofs.n_pressure());
        Solution {
            dofs,
            velocity,
            pressure,
        }
    }

    /// Nodal interpolant of the given velocity and pressure fields.
    pub fn interpolate(
        mesh: &Mesh,
        dofs: DofMap,
        u: impl Fn(&Point) -> [f64; 3],
        p: impl Fn(&Point) -> f64,
    ) -> Solution {
        let d = dofs.dim();
        let mut velocity = vec![0.0; dofs.n_velocity()];
        for node in 0..dofs.n_nodes() {
            let val = u(&dofs.node_point(mesh, node));
            velocity[node * d..(node + 1) * d].copy_from_slice(&val[..d]);
        }
        let pressure = mesh.vertices().iter().map(p).collect();
        Solution::new(dofs, velocity, pressure)
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn pressure(&self) -> &[f64] {
        &self.pressure
    }

    pub fn into_parts(self) -> (DofMap, Vec<f64>, Vec<f64>) {
        (self.dofs, self.velocity, self.pressure)
    }

    /// Velocity at a mesh vertex (a P2 node, so the nodal value).
    pub fn vertex_velocity(&self, v: usize) -> [f64; 3] {
        let d = self.dofs.dim();
        let mut u = [0.0; 3];
        u[..d].copy_from_slice(&self.velocity[v * d..(v + 1) * d]);
        u
    }

    /// Nodal velocity coefficients of element `t` in local basis order.
    pub fn local_velocity(&self, t: usize) -> [[f64; 3]; MAX_P2] {
        let d = self.dofs.dim();
        let mut out = [[0.0; 3]; MAX_P2];
        for (a, &node) in self.dofs.element_nodes(t).iter().enumerate() {
            out[a][..d].copy_from_slice(&self.velocity[node * d..(node + 1) * d]);
        }
        out
    }

    pub fn local_pressure(&self, t: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, &v) in self.dofs.pressure_dofs(t).iter().enumerate() {
            out[i] = self.pressure[v];
        }
        out
    }

    pub fn velocity_at(&self, t: usize, lambda: &[f64; 4]) -> [f64; 3] {
        let d = self.dofs.dim();
        let phi = p2_values(d, lambda);
        let u = self.local_velocity(t);
        let mut out = [0.0; 3];
        for a in 0..n_p2(d) {
            for c in 0..d {
                out[c] += phi[a] * u[a][c];
            }
        }
        out
    }

    /// `grad[c][k] = ∂u_c/∂x_k`.
    pub fn velocity_gradient_at(&self, geo: &ElementGeometry, t: usize, lambda: &[f64; 4]) -> [[f64; 3]; 3] {
        let d = self.dofs.dim();
        let g = p2_gradients(d, lambda, &geo.grad_lambda);
        let u = self.local_velocity(t);
        let mut out = [[0.0; 3]; 3];
        for a in 0..n_p2(d) {
            for c in 0..d {
                for k in 0..d {
                    out[c][k] += u[a][c] * g[a][k];
                }
            }
        }
        out
    }

    /// Componentwise Laplacian, constant on the element.
    pub fn velocity_laplacian(&self, geo: &ElementGeometry, t: usize) -> [f64; 3] {
        let d = self.dofs.dim();
        let lap = p2_laplacians(d, &geo.grad_lambda);
        let u = self.local_velocity(t);
        let mut out = [0.0; 3];
        for a in 0..n_p2(d) {
            for c in 0..d {
                out[c] += lap[a] * u[a][c];
            }
        }
        out
    }

    pub fn pressure_at(&self, t: usize, lambda: &[f64; 4]) -> f64 {
        let d = self.dofs.dim();
        let p = self.local_pressure(t);
        (0..=d).map(|i| p[i] * lambda[i]).sum()
    }

    pub fn pressure_gradient(&self, geo: &ElementGeometry, t: usize) -> [f64; 3] {
        let d = self.dofs.dim();
        let p = self.local_pressure(t);
        let mut out = [0.0; 3];
        for i in 0..=d {
            for k in 0..d {
                out[k] += p[i] * geo.grad_lambda[i][k];
            }
        }
        out
    }
}
