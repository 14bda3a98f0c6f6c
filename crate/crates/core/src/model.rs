//! Coefficients, data fields and boundary conditions of a Stokes-Brinkman problem.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{ExprError, Expression};
use crate::mesh::{BcKind, Mesh, Point};

/// Symmetric positive semidefinite inverse permeability tensor of one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KInverse([[f64; 3]; 3]);

impl KInverse {
    pub fn zero() -> KInverse {
        KInverse([[0.0; 3]; 3])
    }

    /// `s·I` in `dim` dimensions.
    pub fn isotropic(dim: usize, s: f64) -> KInverse {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = s;
        }
        KInverse(m)
    }

    /// Inverse of an isotropic permeability `k·I`.
    pub fn from_permeability(dim: usize, k: f64) -> KInverse {
        Self::isotropic(dim, 1.0 / k)
    }

    /// Builds from a `dim × dim` matrix, checking symmetry and positive semidefiniteness.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<KInverse> {
        let d = rows.len();
        if !(2..=3).contains(&d) || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Config(format!("k_inverse must be a 2x2 or 3x3 matrix, got {rows:?}")));
        }
        let mut m = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = rows[i][j];
            }
        }
        let k = KInverse(m);
        k.validate(d)?;
        Ok(k)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let m = &self.0;
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let tol = 1e-12 * scale;
        for i in 0..dim {
            for j in 0..dim {
                if !m[i][j].is_finite() || (m[i][j] - m[j][i]).abs() > tol {
                    return Err(Error::Config(format!("k_inverse {m:?} is not symmetric")));
                }
            }
        }
        // PSD iff every principal minor is nonnegative
        let minor = |idx: &[usize]| -> f64 {
            match idx.len() {
                1 => m[idx[0]][idx[0]],
                2 => m[idx[0]][idx[0]] * m[idx[1]][idx[1]] - m[idx[0]][idx[1]] * m[idx[1]][idx[0]],
                _ => {
                    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
                }
            }
        };
        let mut subsets: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        for i in 0..dim {
            for j in i + 1..dim {
                subsets.push(vec![i, j]);
            }
        }
        if dim == 3 {
            subsets.push(vec![0, 1, 2]);
        }
        for s in subsets {
            let tol_s = tol * scale.powi(s.len() as i32 - 1);
            if minor(&s) < -tol_s {
                return Err(Error::Config(format!("k_inverse {m:?} is not positive semidefinite")));
            }
        }
        Ok(())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Vector-valued coordinate expression with one component per space dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField(Vec<Expression>);

impl VectorField {
    pub fn new(components: Vec<Expression>) -> VectorField {
        VectorField(components)
    }

    pub fn zero(dim: usize) -> VectorField {
        VectorField(vec![Expression::num(0.0); dim])
    }

    pub fn constant(values: &[f64]) -> VectorField {
        VectorField(values.iter().map(|&v| Expression::num(v)).collect())
    }

    pub fn parse(components: &[&str]) -> Result<VectorField> {
        Ok(VectorField(
            components.iter().map(|s| Expression::parse(s)).collect::<std::result::Result<_, _>>()?,
        ))
    }

    pub fn components(&self) -> &[Expression] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|e| matches!(e, Expression::Num(v) if *v == 0.0))
    }

    pub fn eval(&self, p: &Point) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, e) in out.iter_mut().zip(&self.0) {
            *o = e.eval(p);
        }
        out
    }

    pub fn checked_eval(&self, p: &Point) -> std::result::Result<[f64; 3], ExprError> {
        let mut out = [0.0; 3];
        for (o, e) in out.iter_mut().zip(&self.0) {
            *o = e.checked_eval(p)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    /// Velocity for Dirichlet, natural traction `μ*∂u/∂n − p n` for Neumann.
    pub value: VectorField,
}

impl BoundaryCondition {
    pub fn dirichlet(value: VectorField) -> Self {
        BoundaryCondition {
            kind: BcKind::Dirichlet,
            value,
        }
    }

    pub fn neumann(value: VectorField) -> Self {
        BoundaryCondition {
            kind: BcKind::Neumann,
            value,
        }
    }
}

/// Coefficients and data of `−μ*Δu + μK⁻¹u + ∇p = f`, `∇·u = g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub mu: f64,
    pub mu_star: f64,
    pub k_inverse: BTreeMap<i32, KInverse>,
    pub bcs: BTreeMap<i32, BoundaryCondition>,
    pub body_force: VectorField,
    /// Per-region replacements of `body_force`.
    pub region_body_force: BTreeMap<i32, VectorField>,
    pub mass_source: Expression,
}

impl ProblemSpec {
    /// Body force acting in elements of `region`.
    pub fn body_force(&self, region: i32) -> &VectorField {
        self.region_body_force.get(&region).unwrap_or(&self.body_force)
    }

    pub fn bc_classes(&self) -> BTreeMap<i32, BcKind> {
        self.bcs.iter().map(|(&t, bc)| (t, bc.kind)).collect()
    }

    pub fn k_inverse(&self, region: i32) -> Result<&KInverse> {
        self.k_inverse
            .get(&region)
            .ok_or_else(|| Error::Config(format!("no k_inverse given for region {region}")))
    }

    /// Checks coefficient ranges and that the spec covers every region and tag of `mesh`.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if mesh.dim() != self.dim {
            return Err(Error::Config(format!(
                "problem is {}D but mesh is {}D",
                self.dim,
                mesh.dim()
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.mu_star >= 0.0 && self.mu_star.is_finite()) {
            return Err(Error::Config(format!("mu_star must be nonnegative, got {}", self.mu_star)));
        }
        for (id, k) in &self.k_inverse {
            k.validate(self.dim)
                .map_err(|e| Error::Config(format!("region {id}: {e}")))?;
        }
        for r in mesh.regions() {
            self.k_inverse(*r)?;
        }
        for (_, tag) in mesh.boundary_facets() {
            if !self.bcs.contains_key(&tag) {
                return Err(Error::Config(format!("no boundary condition for tag {tag}")));
            }
        }
        if !self.bcs.values().any(|b| b.kind == BcKind::Dirichlet) {
            return Err(Error::Config("at least one boundary tag must be dirichlet".into()));
        }
        let check_len = |what: &str, f: &VectorField| {
            if f.len() == self.dim {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{what} has {} components, expected {}",
                    f.len(),
                    self.dim
                )))
            }
        };
        check_len("body_force", &self.body_force)?;
        for (id, f) in &self.region_body_force {
            check_len(&format!("body_force of region {id}"), f)?;
        }
        for (tag, bc) in &self.bcs {
            check_len(&format!("boundary value for tag {tag}"), &bc.value)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_validation() {
        assert!(KInverse::from_matrix(&[vec![2.0, 0.5], vec![0.5, 1.0]]).is_ok());
        assert!(KInverse::from_matrix(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(KInverse::from_matrix(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(KInverse::from_matrix(&[vec![1.0, 0.0], vec![0.0, -1e-3]]).is_err());
        // zero tensor encodes the Stokes limit
        assert!(KInverse::from_matrix(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).is_ok());
        // singular but PSD with a negative off-diagonal pattern
        let m = vec![vec![1.0, -1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]];
        assert!(KInverse::from_matrix(&m).is_ok());
    }

    #[test]
    fn isotropic_apply() {
        let k = KInverse::from_permeability(2, 5e-4);
        assert_eq!(k.apply(&[1.0, 2.0, 7.0]), [2000.0, 4000.0, 0.0]);
        assert!((k.norm() - 2000.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn field_evaluation() {
        let f = VectorField::parse(&["y*(1-y)", "0"]).unwrap();
        assert_eq!(f.eval(&[0.0, 0.5, 0.0]), [0.25, 0.0, 0.0]);
        assert!(VectorField::zero(3).is_zero());
        assert!(!f.is_zero());
    }
}
