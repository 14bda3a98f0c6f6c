//! Built-in problems: the nonconvex and obstacle flows and manufactured solutions.

mod exact;
pub(crate) mod grid;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::fem::Solution;
use crate::mesh::{BcKind, Mesh, Point};
use crate::model::{BoundaryCondition, KInverse, ProblemSpec, VectorField};

pub use exact::{error_norms, ErrorNorms, ExactSolution, ERROR_DEGREE};

/// Names accepted by [`builtin`].
pub const NAMES: [&str; 6] = [
    "nonconvex2d",
    "obstacle2d",
    "nonconvex3d",
    "mms2d-quad",
    "mms2d-trig",
    "mms3d-trig",
];

const VISCOSITY: f64 = 1e-3;

/// Initial mesh, coefficients and (for manufactured cases) the exact solution.
#[derive(Debug, Clone)]
pub struct BuiltinProblem {
    pub name: String,
    pub mesh: Mesh,
    pub spec: ProblemSpec,
    pub exact: Option<ExactSolution>,
}

impl BuiltinProblem {
    /// True if the pressure is fixed by a zero-mean constraint on `mesh`.
    pub fn pressure_has_zero_mean(&self, mesh: &Mesh) -> bool {
        !mesh
            .boundary_facets()
            .any(|(_, tag)| self.spec.bcs.get(&tag).is_some_and(|b| b.kind == BcKind::Neumann))
    }

    /// Error norms of `sol` on `mesh` if an exact solution is attached.
    pub fn error_norms(&self, mesh: &Mesh, sol: &Solution) -> Option<ErrorNorms> {
        let exact = self.exact.as_ref()?;
        Some(error_norms(mesh, sol, exact, self.pressure_has_zero_mean(mesh)))
    }
}

/// Grid spacing used when none is given.
pub fn default_h(name: &str) -> Option<f64> {
    Some(match name {
        "nonconvex2d" => 0.25,
        "obstacle2d" => 0.2,
        "nonconvex3d" => 0.5,
        "mms2d-quad" => 0.25,
        "mms2d-trig" => 0.125,
        "mms3d-trig" => 0.25,
        _ => return None,
    })
}

/// Builds the named problem with grid spacing `h` (or its default).
pub fn builtin(name: &str, h: Option<f64>) -> Result<BuiltinProblem> {
    let h = match (h, default_h(name)) {
        (Some(h), Some(_)) => h,
        (None, Some(h)) => h,
        (_, None) => {
            return Err(Error::InvalidArgument(format!(
                "unknown problem '{name}'; expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    match name {
        "nonconvex2d" => nonconvex_2d(h),
        "obstacle2d" => obstacle_2d(h),
        "nonconvex3d" => nonconvex_3d(h),
        "mms2d-quad" => manufactured(2, ManufacturedCase::Quadratic, h),
        "mms2d-trig" => manufactured(2, ManufacturedCase::Trigonometric, h),
        _ => manufactured(3, ManufacturedCase::Trigonometric, h),
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn walls_inflow_outflow(inflow: VectorField, dim: usize) -> BTreeMap<i32, BoundaryCondition> {
    BTreeMap::from([
        (1, BoundaryCondition::dirichlet(VectorField::zero(dim))),
        (2, BoundaryCondition::dirichlet(inflow)),
        (3, BoundaryCondition::neumann(VectorField::zero(dim))),
    ])
}

fn flow_spec(dim: usize, k: &[(i32, KInverse)], bcs: BTreeMap<i32, BoundaryCondition>) -> ProblemSpec {
    ProblemSpec {
        dim,
        mu: VISCOSITY,
        mu_star: VISCOSITY,
        k_inverse: k.iter().copied().collect(),
        bcs,
        body_force: VectorField::zero(dim),
        region_body_force: BTreeMap::new(),
        mass_source: Expression::num(0.0),
    }
}

/// Channel `[0,3]×[0,1]` (region 1, `K = 5e-4 I`) with a Stokes pocket `[1,2]×[1,2]`
/// (region 2) and a Darcy pocket `[1,2]×[-1,0]` (region 3, `K = 5e-2 I`).
///
/// Tags: 1 no-slip walls, 2 inflow `u = (y(1-y), 0)` at `x = 0`, 3 do-nothing at `x = 3`.
pub fn nonconvex_2d(h: f64) -> Result<BuiltinProblem> {
    let mesh = grid::structured_mesh(
        &[&[0.0, 1.0, 2.0, 3.0], &[-1.0, 0.0, 1.0, 2.0]],
        h,
        |p| {
            let pocket = (1.0..=2.0).contains(&p[0]);
            match p[1] {
                y if (0.0..=1.0).contains(&y) => Some(1),
                y if y > 1.0 && pocket => Some(2),
                y if y < 0.0 && pocket => Some(3),
                _ => None,
            }
        },
        |c| match c[0] {
            x if near(x, 0.0) => 2,
            x if near(x, 3.0) => 3,
            _ => 1,
        },
    )?;
    let spec = flow_spec(
        2,
        &[
            (1, KInverse::from_permeability(2, 5e-4)),
            (2, KInverse::zero()),
            (3, KInverse::from_permeability(2, 5e-2)),
        ],
        walls_inflow_outflow(VectorField::parse(&["y*(1-y)", "0"])?, 2),
    );
    Ok(BuiltinProblem {
        name: "nonconvex2d".into(),
        mesh,
        spec,
        exact: None,
    })
}

/// Square `(-2,2)²` minus the obstacle `(-0.4,0.4)×(-1,1)`.
///
/// Regions: 1 ambient Darcy `K = 5e-4 I`, 2 Stokes pockets `(±[0.4,1.2])×(0,1)`,
/// 3 Darcy pockets `(±[0.4,1.2])×(-1,0)` with `K = 5e-2 I`. Tags: 1 walls and obstacle,
/// 2 constant inflow `(1/4, 0)` at `x = -2`, 3 do-nothing at `x = 2`.
pub fn obstacle_2d(h: f64) -> Result<BuiltinProblem> {
    let mesh = grid::structured_mesh(
        &[&[-2.0, -1.2, -0.4, 0.4, 1.2, 2.0], &[-2.0, -1.0, 0.0, 1.0, 2.0]],
        h,
        |p| {
            let (ax, y) = (p[0].abs(), p[1]);
            let in_band = y.abs() < 1.0;
            if ax < 0.4 && in_band {
                None
            } else if ax < 1.2 && in_band {
                Some(if y > 0.0 { 2 } else { 3 })
            } else {
                Some(1)
            }
        },
        |c| match c[0] {
            x if near(x, -2.0) => 2,
            x if near(x, 2.0) => 3,
            _ => 1,
        },
    )?;
    let spec = flow_spec(
        2,
        &[
            (1, KInverse::from_permeability(2, 5e-4)),
            (2, KInverse::zero()),
            (3, KInverse::from_permeability(2, 5e-2)),
        ],
        walls_inflow_outflow(VectorField::constant(&[0.25, 0.0]), 2),
    );
    Ok(BuiltinProblem {
        name: "obstacle2d".into(),
        mesh,
        spec,
        exact: None,
    })
}

/// Permeabilities of the eight cubes of [`nonconvex_3d`], by region id 1..=8.
pub const CUBE_PERMEABILITY: [f64; 8] = [5e-5, 5e-4, 5e-3, 5e-2, 5e-1, 5.0, 50.0, 500.0];

/// L-shaped slice `[0,3]×[0,1] ∪ [2,3]×[1,2]` extruded over `z ∈ [0,2]`: eight unit cubes.
///
/// Cube `(i, j, k)` of the slice square `s` (0 at the outflow end, 3 at the inflow end)
/// and layer `k` is region `1 + s + 4k`. Tags: 1 walls, 2 inflow on `y = 2` with
/// `u_y = -4(x-2)(3-x) z(2-z)` (peak magnitude 1), 3 do-nothing on `x = 0`.
pub fn nonconvex_3d(h: f64) -> Result<BuiltinProblem> {
    let mesh = grid::structured_mesh(
        &[&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]],
        h,
        |p| {
            let square = match (p[0], p[1]) {
                (x, y) if y < 1.0 => x.floor() as i32,
                (x, _) if x > 2.0 => 3,
                _ => return None,
            };
            Some(1 + square + 4 * p[2].floor() as i32)
        },
        |c| {
            if near(c[1], 2.0) {
                2
            } else if near(c[0], 0.0) {
                3
            } else {
                1
            }
        },
    )?;
    let k: Vec<(i32, KInverse)> = CUBE_PERMEABILITY
        .iter()
        .enumerate()
        .map(|(i, &kp)| (i as i32 + 1, KInverse::from_permeability(3, kp)))
        .collect();
    let spec = flow_spec(
        3,
        &k,
        walls_inflow_outflow(VectorField::parse(&["0", "-4*(x-2)*(3-x)*z*(2-z)", "0"])?, 3),
    );
    Ok(BuiltinProblem {
        name: "nonconvex3d".into(),
        mesh,
        spec,
        exact: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// Quadratic velocity and linear pressure, reproduced exactly by P2/P1.
    Quadratic,
    Trigonometric,
}

fn manufactured_fields(dim: usize, case: ManufacturedCase) -> Result<(VectorField, Expression)> {
    let (u, p): (&[&str], &str) = match (dim, case) {
        (2, ManufacturedCase::Quadratic) => (&["x^2+x*y-y^2", "-2*x*y-y^2/2"], "x+2*y-1"),
        (2, ManufacturedCase::Trigonometric) => (&["sin(pi*x)*cos(pi*y)", "-cos(pi*x)*sin(pi*y)"], "x^2*y"),
        (3, ManufacturedCase::Quadratic) => (&["y^2+z", "z^2-x*y", "x*z+y^2"], "x-y+z"),
        (3, ManufacturedCase::Trigonometric) => (&["sin(pi*y)", "sin(pi*z)", "sin(pi*x)"], "x*y*z"),
        _ => return Err(Error::InvalidArgument(format!("no manufactured solution in {dim}D"))),
    };
    Ok((VectorField::parse(u)?, Expression::parse(p)?))
}

/// Inverse permeability of the right half `x > 1/2` of the manufactured cases.
pub fn manufactured_k_inverse(dim: usize) -> KInverse {
    let rows = if dim == 2 {
        vec![vec![2.0, 0.5], vec![0.5, 1.0]]
    } else {
        vec![vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 1.5]]
    };
    KInverse::from_matrix(&rows).expect("tensor is symmetric positive definite")
}

pub const MANUFACTURED_MU: f64 = 1.0;
pub const MANUFACTURED_MU_STAR: f64 = 0.5;

/// Unit square or cube with a Stokes half `x < 1/2` (region 1) and an anisotropic
/// Brinkman half (region 2). Data are derived from the exact solution: Dirichlet on
/// tag 1, traction `μ*∂u/∂x − p e_x` on the face `x = 1` (tag 2).
pub fn manufactured(dim: usize, case: ManufacturedCase, h: f64) -> Result<BuiltinProblem> {
    let (u, p) = manufactured_fields(dim, case)?;
    let exact = ExactSolution::new(u, p)?;
    let (mu, mu_star) = (MANUFACTURED_MU, MANUFACTURED_MU_STAR);
    let lap = exact.velocity_laplacian()?;
    let kinv = manufactured_k_inverse(dim);

    let force = |k: &KInverse| -> VectorField {
        VectorField::new(
            (0..dim)
                .map(|c| {
                    let mut f = -mu_star * lap.components()[c].clone() + exact.pressure_gradient.components()[c].clone();
                    for j in 0..dim {
                        let kij = k.entry(c, j);
                        if kij != 0.0 {
                            f = f + (mu * kij) * exact.velocity.components()[j].clone();
                        }
                    }
                    f
                })
                .collect(),
        )
    };
    let traction = VectorField::new(
        (0..dim)
            .map(|c| {
                let t = mu_star * exact.velocity_gradient[c].components()[0].clone();
                if c == 0 {
                    t - exact.pressure.clone()
                } else {
                    t
                }
            })
            .collect(),
    );

    let breaks: Vec<&[f64]> = std::iter::once(&[0.0, 0.5, 1.0][..])
        .chain(std::iter::repeat_n(&[0.0, 1.0][..], dim - 1))
        .collect();
    let mesh = grid::structured_mesh(
        &breaks,
        h,
        |p: &Point| Some(if p[0] < 0.5 { 1 } else { 2 }),
        |c| if near(c[0], 1.0) { 2 } else { 1 },
    )?;
    let spec = ProblemSpec {
        dim,
        mu,
        mu_star,
        k_inverse: BTreeMap::from([(1, KInverse::zero()), (2, kinv)]),
        bcs: BTreeMap::from([
            (1, BoundaryCondition::dirichlet(exact.velocity.clone())),
            (2, BoundaryCondition::neumann(traction)),
        ]),
        body_force: force(&KInverse::zero()),
        region_body_force: BTreeMap::from([(2, force(&kinv))]),
        mass_source: exact.divergence(),
    };
    let name = match (dim, case) {
        (2, ManufacturedCase::Quadratic) => "mms2d-quad",
        (2, ManufacturedCase::Trigonometric) => "mms2d-trig",
        (_, ManufacturedCase::Quadratic) => "mms3d-quad",
        _ => "mms3d-trig",
    };
    Ok(BuiltinProblem {
        name: name.into(),
        mesh,
        spec,
        exact: Some(exact),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::mesh::Topology;

    #[test]
    fn areas_and_volumes() {
        let cases = [
            ("nonconvex2d", 5.0),
            ("obstacle2d", 16.0 - 1.6),
            ("nonconvex3d", 8.0),
            ("mms2d-quad", 1.0),
            ("mms2d-trig", 1.0),
            ("mms3d-trig", 1.0),
        ];
        for (name, vol) in cases {
            let p = builtin(name, None).unwrap();
            assert!((p.mesh.total_volume() - vol).abs() < 1e-12, "{name}");
            p.spec.validate(&p.mesh).unwrap();
            Topology::build(&p.mesh, &p.spec.bc_classes()).unwrap();
        }
        assert!(builtin("nope", None).is_err());
        assert!(builtin("nonconvex2d", Some(-1.0)).is_err());
    }

    #[test]
    fn region_areas() {
        let p = nonconvex_2d(0.25).unwrap();
        let mut area = BTreeMap::new();
        for t in 0..p.mesh.n_elements() {
            *area.entry(p.mesh.region(t)).or_insert(0.0) += p.mesh.volume(t);
        }
        assert_eq!(area.len(), 3);
        assert!((area[&1] - 3.0).abs() < 1e-12 && (area[&2] - 1.0).abs() < 1e-12);

        let p = obstacle_2d(0.2).unwrap();
        let mut area = BTreeMap::new();
        for t in 0..p.mesh.n_elements() {
            *area.entry(p.mesh.region(t)).or_insert(0.0) += p.mesh.volume(t);
        }
        assert!((area[&2] - 1.6).abs() < 1e-12 && (area[&3] - 1.6).abs() < 1e-12);

        let p = nonconvex_3d(0.5).unwrap();
        let mut vol = BTreeMap::new();
        for t in 0..p.mesh.n_elements() {
            *vol.entry(p.mesh.region(t)).or_insert(0.0) += p.mesh.volume(t);
        }
        assert_eq!(vol.len(), 8);
        assert!(vol.values().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn boundary_tags_measure() {
        let measure = |p: &BuiltinProblem, tag: i32| -> f64 {
            p.mesh
                .boundary_facets()
                .filter(|(_, t)| *t == tag)
                .map(|(f, _)| {
                    let pts: Vec<Point> = f.iter().map(|&v| *p.mesh.vertex(v)).collect();
                    crate::mesh::simplex_measure(&pts)
                })
                .sum()
        };
        let p = nonconvex_2d(0.25).unwrap();
        assert!((measure(&p, 2) - 1.0).abs() < 1e-12);
        assert!((measure(&p, 3) - 1.0).abs() < 1e-12);
        assert!((measure(&p, 1) - 10.0).abs() < 1e-12);
        let p = obstacle_2d(0.2).unwrap();
        assert!((measure(&p, 2) - 4.0).abs() < 1e-12);
        assert!((measure(&p, 1) - (8.0 + 2.0 * 0.8 + 4.0)).abs() < 1e-12);
        let p = nonconvex_3d(0.5).unwrap();
        assert!((measure(&p, 2) - 2.0).abs() < 1e-12);
        assert!((measure(&p, 3) - 2.0).abs() < 1e-12);
        assert!((measure(&p, 1) - (2.0 * 4.0 + 10.0 * 2.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn inflow_profiles() {
        let p = nonconvex_2d(0.25).unwrap();
        let v = p.spec.bcs[&2].value.eval(&[0.0, 0.5, 0.0]);
        assert_eq!(v, [0.25, 0.0, 0.0]);
        let p = nonconvex_3d(0.5).unwrap();
        let v = p.spec.bcs[&2].value.eval(&[2.5, 2.0, 1.0]);
        assert_eq!(v, [0.0, -1.0, 0.0]);
        assert_eq!(p.spec.bcs[&2].value.eval(&[2.0, 2.0, 1.0])[1], 0.0);
        assert_eq!(p.spec.k_inverse[&1].entry(0, 0), 2e4);
        assert!((p.spec.k_inverse[&8].entry(2, 2) - 2e-3).abs() < 1e-15);
    }

    /// Independent closed forms of `(u, ∇u, p, ∇p, Δu)` for the manufactured cases.
    #[allow(clippy::type_complexity)]
    fn oracle(name: &str, x: &Point) -> ([f64; 3], [[f64; 3]; 3], f64, [f64; 3], [f64; 3]) {
        let [x, y, z] = *x;
        match name {
            "mms2d-quad" => (
                [x * x + x * y - y * y, -2.0 * x * y - y * y / 2.0, 0.0],
                [[2.0 * x + y, x - 2.0 * y, 0.0], [-2.0 * y, -2.0 * x - y, 0.0], [0.0; 3]],
                x + 2.0 * y - 1.0,
                [1.0, 2.0, 0.0],
                [0.0, -1.0, 0.0],
            ),
            "mms2d-trig" => {
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                let u = [sx * cy, -cx * sy, 0.0];
                (
                    u,
                    [[PI * cx * cy, -PI * sx * sy, 0.0], [PI * sx * sy, -PI * cx * cy, 0.0], [0.0; 3]],
                    x * x * y,
                    [2.0 * x * y, x * x, 0.0],
                    [-2.0 * PI * PI * u[0], -2.0 * PI * PI * u[1], 0.0],
                )
            }
            _ => {
                let u = [(PI * y).sin(), (PI * z).sin(), (PI * x).sin()];
                (
                    u,
                    [
                        [0.0, PI * (PI * y).cos(), 0.0],
                        [0.0, 0.0, PI * (PI * z).cos()],
                        [PI * (PI * x).cos(), 0.0, 0.0],
                    ],
                    x * y * z,
                    [y * z, x * z, x * y],
                    [-PI * PI * u[0], -PI * PI * u[1], -PI * PI * u[2]],
                )
            }
        }
    }

    #[test]
    fn manufactured_data_satisfy_strong_form() {
        let mut rng = StdRng::seed_from_u64(7);
        for name in ["mms2d-quad", "mms2d-trig", "mms3d-trig"] {
            let p = builtin(name, None).unwrap();
            let ex = p.exact.as_ref().unwrap();
            let d = p.spec.dim;
            for _ in 0..100 {
                let mut x = [0.0; 3];
                for c in x.iter_mut().take(d) {
                    *c = rng.gen::<f64>();
                }
                let (u, gu, pr, gp, lap) = oracle(name, &x);
                let region = if x[0] < 0.5 { 1 } else { 2 };
                let kinv = p.spec.k_inverse[&region];
                let ku = kinv.apply(&u);
                let f = p.spec.body_force(region).eval(&x);
                let g = p.spec.mass_source.eval(&x);
                for c in 0..d {
                    let strong = -p.spec.mu_star * lap[c] + p.spec.mu * ku[c] + gp[c];
                    assert!((f[c] - strong).abs() < 1e-10, "{name} f[{c}] at {x:?}");
                    assert!((ex.velocity.eval(&x)[c] - u[c]).abs() < 1e-14);
                    let grad = ex.velocity_gradient[c].eval(&x);
                    for k in 0..d {
                        assert!((grad[k] - gu[c][k]).abs() < 1e-12);
                    }
                }
                assert!((ex.pressure.eval(&x) - pr).abs() < 1e-14);
                let div: f64 = (0..d).map(|c| gu[c][c]).sum();
                assert!((g - div).abs() < 1e-10 && div.abs() < 1e-12);

                // traction on x = 1
                let mut xb = x;
                xb[0] = 1.0;
                let (_, gub, pb, _, _) = oracle(name, &xb);
                let tn = p.spec.bcs[&2].value.eval(&xb);
                for c in 0..d {
                    let expect = p.spec.mu_star * gub[c][0] - if c == 0 { pb } else { 0.0 };
                    assert!((tn[c] - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn quadratic_case_3d_exists() {
        let p = manufactured(3, ManufacturedCase::Quadratic, 0.5).unwrap();
        let ex = p.exact.unwrap();
        assert!(ex.divergence().eval(&[0.3, 0.2, 0.9]).abs() < 1e-14);
    }
}
