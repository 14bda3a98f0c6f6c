//! Sparse direct solution of the reduced saddle-point system.

use std::time::Instant;

use faer::prelude::*;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::fem::{SaddleSystem, Solution};
use crate::sparse::CsrMatrix;

/// Required relative residual `‖Kx − b‖ / ‖b‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveReport {
    pub residual_norm_abs: f64,
    pub residual_norm_rel: f64,
    pub n_unknowns: usize,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(k: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let kx = k.mul_vec(x);
    b.iter().zip(kx).map(|(bi, ki)| bi - ki).collect()
}

/// Solves `K x = b` by sparse LU with a few steps of iterative refinement.
pub fn solve_sparse(k: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearSolveReport)> {
    let n = k.nrows();
    if k.ncols() != n || b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "system is {}x{} with right-hand side of length {}",
            k.nrows(),
            k.ncols(),
            b.len()
        )));
    }
    let b_norm = norm(b);
    if n == 0 || b_norm == 0.0 {
        let report = LinearSolveReport {
            residual_norm_abs: 0.0,
            residual_norm_rel: 0.0,
            n_unknowns: n,
            factor_seconds: 0.0,
            solve_seconds: 0.0,
        };
        return Ok((vec![0.0; n], report));
    }

    let start = Instant::now();
    let triplets: Vec<Triplet<usize, usize, f64>> = k.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Assembly(format!("invalid sparse matrix: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => Error::SingularMatrix { pivot: index },
        other => Error::Assembly(format!("factorization failed: {other:?}")),
    })?;
    let factor_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };
    let mut x = solve(b);
    if let Some(pivot) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix { pivot });
    }
    let mut r = residual(k, &x, b);
    let mut r_norm = norm(&r);
    for _ in 0..REFINEMENT_STEPS {
        if r_norm <= 1e-14 * b_norm {
            break;
        }
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let rc = residual(k, &candidate, b);
        let rc_norm = norm(&rc);
        if !(rc_norm < r_norm) {
            break;
        }
        x = candidate;
        r = rc;
        r_norm = rc_norm;
    }
    let report = LinearSolveReport {
        residual_norm_abs: r_norm,
        residual_norm_rel: r_norm / b_norm,
        n_unknowns: n,
        factor_seconds,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    if !(report.residual_norm_rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::Numerical {
            residual: report.residual_norm_rel,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok((x, report))
}

/// Solves the reduced saddle system and restores the Dirichlet values.
pub fn solve_saddle(system: &SaddleSystem) -> Result<(Solution, LinearSolveReport)> {
    let (k, b) = system.kkt();
    let (x, report) = solve_sparse(&k, &b)?;
    let (u, p) = system.expand(&x);
    Ok((Solution::new(system.dofs().clone(), u, p), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    #[test]
    fn identity_system() {
        let mut t = TripletBuilder::new(1, 1);
        t.push(0, 0, 1.0);
        let (x, rep) = solve_sparse(&t.build(), &[3.0]).unwrap();
        assert_eq!(x, vec![3.0]);
        assert_eq!(rep.residual_norm_abs, 0.0);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 2.0);
        t.push(1, 1, 5.0);
        let (x, _) = solve_sparse(&t.build(), &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn indefinite_saddle_needs_pivoting() {
        // [[1, 1], [1, 0]] has a zero diagonal entry
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        let (x, _) = solve_sparse(&t.build(), &[3.0, 2.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn structurally_singular_is_reported() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 1.0);
        let err = solve_sparse(&t.build(), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }), "{err}");
    }

    #[test]
    fn numerically_singular_is_reported() {
        let mut t = TripletBuilder::new(2, 2);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            t.push(r, c, 1.0);
        }
        assert!(solve_sparse(&t.build(), &[1.0, 2.0]).is_err());
    }
}
