//! Lagrange P1 and P2 bases on simplices, written in barycentric coordinates.
//!
//! P2 functions are ordered vertices first, then edges in local edge order
//! (see [`crate::mesh::local_edges`]).

use crate::error::{Error, Result};
use crate::mesh::local_edges;

use super::dot;

/// Maximum number of P2 functions on a simplex (the tetrahedron).
pub const MAX_P2: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    P1,
    P2,
}

pub const fn n_p1(dim: usize) -> usize {
    dim + 1
}

pub const fn n_p2(dim: usize) -> usize {
    (dim + 1) * (dim + 2) / 2
}

pub fn p2_values(dim: usize, l: &[f64; 4]) -> [f64; MAX_P2] {
    let mut v = [0.0; MAX_P2];
    for i in 0..=dim {
        v[i] = l[i] * (2.0 * l[i] - 1.0);
    }
    for (k, &(i, j)) in local_edges(dim).iter().enumerate() {
        v[dim + 1 + k] = 4.0 * l[i] * l[j];
    }
    v
}

pub fn p2_gradients(dim: usize, l: &[f64; 4], gl: &[[f64; 3]; 4]) -> [[f64; 3]; MAX_P2] {
    let mut g = [[0.0; 3]; MAX_P2];
    for i in 0..=dim {
        let s = 4.0 * l[i] - 1.0;
        for c in 0..3 {
            g[i][c] = s * gl[i][c];
        }
    }
    for (k, &(i, j)) in local_edges(dim).iter().enumerate() {
        for c in 0..3 {
            g[dim + 1 + k][c] = 4.0 * (l[j] * gl[i][c] + l[i] * gl[j][c]);
        }
    }
    g
}

/// Laplacians of the P2 functions; constant on an affine element.
pub fn p2_laplacians(dim: usize, gl: &[[f64; 3]; 4]) -> [f64; MAX_P2] {
    let mut d = [0.0; MAX_P2];
    for i in 0..=dim {
        d[i] = 4.0 * dot(&gl[i], &gl[i]);
    }
    for (k, &(i, j)) in local_edges(dim).iter().enumerate() {
        d[dim + 1 + k] = 8.0 * dot(&gl[i], &gl[j]);
    }
    d
}

/// Barycentric gradients of the reference simplex with vertices `0, e_1, .., e_dim`.
pub fn reference_lambda_gradients(dim: usize) -> [[f64; 3]; 4] {
    let mut g = [[0.0; 3]; 4];
    for k in 0..dim {
        g[0][k] = -1.0;
        g[k + 1][k] = 1.0;
    }
    g
}

/// Values and gradients of a reference basis at a point given in reference coordinates.
pub fn reference_basis(dim: usize, family: Family, x: &[f64]) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    if !(2..=3).contains(&dim) || x.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "expected a {dim}-dimensional point in 2D or 3D, got {} coordinates",
            x.len()
        )));
    }
    let tol = 1e-12;
    let mut l = [0.0; 4];
    l[0] = 1.0 - x.iter().sum::<f64>();
    l[1..=dim].copy_from_slice(x);
    if l[..=dim].iter().any(|&v| v < -tol || v > 1.0 + tol) {
        return Err(Error::InvalidArgument(format!(
            "point {x:?} lies outside the reference simplex"
        )));
    }
    let gl = reference_lambda_gradients(dim);
    Ok(match family {
        Family::P1 => (l[..=dim].to_vec(), gl[..=dim].to_vec()),
        Family::P2 => {
            let n = n_p2(dim);
            (
                p2_values(dim, &l)[..n].to_vec(),
                p2_gradients(dim, &l, &gl)[..n].to_vec(),
            )
        }
    })
}
