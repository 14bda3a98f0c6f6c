use crate::error::Result;
use crate::expr::{Expression, Var};
use crate::fem::quadrature::rule;
use crate::fem::{ElementGeometry, Solution};
use crate::mesh::Mesh;
use crate::model::VectorField;

/// Quadrature degree of the error integrals.
pub const ERROR_DEGREE: usize = 6;

/// Smooth exact solution with symbolic first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub velocity: VectorField,
    pub pressure: Expression,
    /// Row `c` holds `∇u_c`.
    pub velocity_gradient: Vec<VectorField>,
    pub pressure_gradient: VectorField,
}

impl ExactSolution {
    pub fn new(velocity: VectorField, pressure: Expression) -> Result<ExactSolution> {
        let d = velocity.len();
        let grad = |e: &Expression| -> Result<VectorField> {
            Ok(VectorField::new(
                (0..d).map(|k| e.derivative(Var::from_index(k))).collect::<std::result::Result<_, _>>()?,
            ))
        };
        let velocity_gradient = velocity.components().iter().map(grad).collect::<Result<_>>()?;
        let pressure_gradient = grad(&pressure)?;
        Ok(ExactSolution {
            velocity,
            pressure,
            velocity_gradient,
            pressure_gradient,
        })
    }

    pub fn dim(&self) -> usize {
        self.velocity.len()
    }

    /// Symbolic `Δu`, componentwise.
    pub fn velocity_laplacian(&self) -> Result<VectorField> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for row in &self.velocity_gradient {
            let mut lap = Expression::num(0.0);
            for (k, g) in row.components().iter().enumerate() {
                lap = lap + g.derivative(Var::from_index(k))?;
            }
            out.push(lap);
        }
        Ok(VectorField::new(out))
    }

    /// Symbolic `∇·u`.
    pub fn divergence(&self) -> Expression {
        let mut div = Expression::num(0.0);
        for (c, row) in self.velocity_gradient.iter().enumerate() {
            div = div + row.components()[c].clone();
        }
        div
    }
}

/// Velocity `H¹` and pressure `L²` error norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub velocity_h1: f64,
    pub pressure_l2: f64,
}

/// Computes `‖u − u_h‖₁` and `‖p − p_h‖₀`.
///
/// With `zero_mean` both pressures are compared after subtracting their means,
/// which is how the pressure is fixed when no Neumann boundary is present.
pub fn error_norms(mesh: &Mesh, sol: &Solution, exact: &ExactSolution, zero_mean: bool) -> ErrorNorms {
    let d = mesh.dim();
    let q = rule(d, ERROR_DEGREE);
    let (mut mean_p, mut mean_ph) = (0.0, 0.0);
    if zero_mean {
        for t in 0..mesh.n_elements() {
            let geo = ElementGeometry::new(mesh, t);
            let jac = geo.jacobian();
            for (l, w) in q.iter() {
                mean_p += w * jac * exact.pressure.eval(&geo.map(l));
                mean_ph += w * jac * sol.pressure_at(t, l);
            }
        }
        let vol = mesh.total_volume();
        mean_p /= vol;
        mean_ph /= vol;
    }
    let (mut eu, mut ep) = (0.0, 0.0);
    for t in 0..mesh.n_elements() {
        let geo = ElementGeometry::new(mesh, t);
        let jac = geo.jacobian();
        for (l, w) in q.iter() {
            let x = geo.map(l);
            let wq = w * jac;
            let u = exact.velocity.eval(&x);
            let uh = sol.velocity_at(t, l);
            let gh = sol.velocity_gradient_at(&geo, t, l);
            for c in 0..d {
                eu += wq * (u[c] - uh[c]).powi(2);
                let g = exact.velocity_gradient[c].eval(&x);
                for k in 0..d {
                    eu += wq * (g[k] - gh[c][k]).powi(2);
                }
            }
            let e = (exact.pressure.eval(&x) - mean_p) - (sol.pressure_at(t, l) - mean_ph);
            ep += wq * e * e;
        }
    }
    ErrorNorms {
        velocity_h1: eu.sqrt(),
        pressure_l2: ep.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    use super::*;
    use crate::fem::DofMap;
    use crate::mesh::{BcKind, Topology};
    use crate::problems::grid::structured_mesh;

    fn unit_square(h: f64) -> (Mesh, DofMap) {
        let m = structured_mesh(&[&[0.0, 1.0], &[0.0, 1.0]], h, |_| Some(1), |_| 1).unwrap();
        let topo = Topology::build(&m, &BTreeMap::from([(1, BcKind::Dirichlet)])).unwrap();
        let dofs = DofMap::new(&m, &topo);
        (m, dofs)
    }

    fn trig() -> ExactSolution {
        ExactSolution::new(
            VectorField::parse(&["sin(pi*x)*cos(pi*y)", "-cos(pi*x)*sin(pi*y)"]).unwrap(),
            Expression::parse("x^2*y").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_solution_gives_exact_norms() {
        let (m, dofs) = unit_square(0.125);
        let zero = Solution::interpolate(&m, dofs, |_| [0.0; 3], |_| 0.0);
        let n = error_norms(&m, &zero, &trig(), false);
        // ∫|u|² = 1/2, ∫|∇u|² = π², ∫(x²y)² = 1/15
        let h1 = (0.5 + PI * PI).sqrt();
        assert!((n.velocity_h1 - h1).abs() < 1e-6 * h1, "{}", n.velocity_h1);
        assert!((n.pressure_l2 - (1.0f64 / 15.0).sqrt()).abs() < 1e-10);
        // mean of x²y is 1/6: ∫(x²y − 1/6)² = 1/15 − 1/36
        let n0 = error_norms(&m, &zero, &trig(), true);
        assert!((n0.pressure_l2 - (1.0f64 / 15.0 - 1.0 / 36.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn interpolant_of_polynomial_is_exact() {
        let (m, dofs) = unit_square(0.5);
        let ex = ExactSolution::new(
            VectorField::parse(&["x^2+x*y-y^2", "-2*x*y-y^2/2"]).unwrap(),
            Expression::parse("x+2*y-1").unwrap(),
        )
        .unwrap();
        let sol = Solution::interpolate(
            &m,
            dofs,
            |p| ex.velocity.eval(p),
            |p| ex.pressure.eval(p),
        );
        let n = error_norms(&m, &sol, &ex, false);
        assert!(n.velocity_h1 < 1e-13 && n.pressure_l2 < 1e-13);
    }

    #[test]
    fn symbolic_operators() {
        let ex = trig();
        let lap = ex.velocity_laplacian().unwrap();
        let div = ex.divergence();
        let p = [0.3, 0.7, 0.0];
        let u = ex.velocity.eval(&p);
        let l = lap.eval(&p);
        assert!((l[0] + 2.0 * PI * PI * u[0]).abs() < 1e-12);
        assert!((l[1] + 2.0 * PI * PI * u[1]).abs() < 1e-12);
        assert!(div.eval(&p).abs() < 1e-14);
        assert_eq!(ex.pressure_gradient.eval(&p)[..2], [2.0 * 0.3 * 0.7, 0.09]);
    }
}
