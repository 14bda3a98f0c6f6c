//! Residual a posteriori error indicators.
//!
//! For each element `T`,
//! `η_T² = h_T² ‖R₁‖²_{0,T} + ‖R₂‖²_{0,T} + h_T Σ_{E⊂∂T} ‖R_E‖²_{0,E}` with
//! `R₁ = f + μ*Δu_h − μK⁻¹u_h − ∇p_h`, `R₂ = g − ∇·u_h`, and `R_E` half the jump of
//! the normal stress `μ*∂u_h/∂n − p_h n` on interior facets, the Neumann mismatch on
//! Neumann facets, and zero on Dirichlet facets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{ElementGeometry, Solution, FACET_DEGREE};
use crate::fem::quadrature::rule;
use crate::mesh::{FacetClass, Mesh, Point, Topology};
use crate::model::{KInverse, ProblemSpec};

/// Quadrature degree of the element residual norms.
pub const ELEMENT_DEGREE: usize = 4;

/// Per-element indicator contributions and the global estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub eta: Vec<f64>,
    pub r1_part: Vec<f64>,
    pub r2_part: Vec<f64>,
    pub jump_part: Vec<f64>,
    pub global_estimate: f64,
}

impl IndicatorField {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn r1_sum(&self) -> f64 {
        self.r1_part.iter().sum()
    }

    pub fn r2_sum(&self) -> f64 {
        self.r2_part.iter().sum()
    }

    pub fn jump_sum(&self) -> f64 {
        self.jump_part.iter().sum()
    }
}

/// `R₁` at barycentric point `lambda` of element `t`.
pub fn residual_r1(mesh: &Mesh, spec: &ProblemSpec, sol: &Solution, t: usize, lambda: &[f64; 4]) -> Result<[f64; 3]> {
    let geo = ElementGeometry::new(mesh, t);
    let kinv = spec.k_inverse(mesh.region(t))?;
    Ok(r1_at(spec, sol, &geo, t, mesh.region(t), kinv, lambda))
}

fn r1_at(
    spec: &ProblemSpec,
    sol: &Solution,
    geo: &ElementGeometry,
    t: usize,
    region: i32,
    kinv: &KInverse,
    lambda: &[f64; 4],
) -> [f64; 3] {
    let d = geo.dim;
    let f = spec.body_force(region).eval(&geo.map(lambda));
    let lap = sol.velocity_laplacian(geo, t);
    let ku = kinv.apply(&sol.velocity_at(t, lambda));
    let gp = sol.pressure_gradient(geo, t);
    let mut r = [0.0; 3];
    for c in 0..d {
        r[c] = f[c] + spec.mu_star * lap[c] - spec.mu * ku[c] - gp[c];
    }
    r
}

/// `R₂` at barycentric point `lambda` of element `t`.
pub fn residual_r2(mesh: &Mesh, spec: &ProblemSpec, sol: &Solution, t: usize, lambda: &[f64; 4]) -> f64 {
    let geo = ElementGeometry::new(mesh, t);
    r2_at(spec, sol, &geo, t, lambda)
}

fn r2_at(spec: &ProblemSpec, sol: &Solution, geo: &ElementGeometry, t: usize, lambda: &[f64; 4]) -> f64 {
    let grad = sol.velocity_gradient_at(geo, t, lambda);
    let div: f64 = (0..geo.dim).map(|c| grad[c][c]).sum();
    spec.mass_source.eval(&geo.map(lambda)) - div
}

/// `μ*∂u/∂n − p n` of element `t` at `lambda`.
fn normal_stress(spec: &ProblemSpec, sol: &Solution, geo: &ElementGeometry, t: usize, lambda: &[f64; 4], n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let grad = sol.velocity_gradient_at(geo, t, lambda);
    let p = sol.pressure_at(t, lambda);
    let mut viscous = [0.0; 3];
    let mut pressure = [0.0; 3];
    for c in 0..geo.dim {
        viscous[c] = spec.mu_star * (0..geo.dim).map(|k| grad[c][k] * n[k]).sum::<f64>();
        pressure[c] = -p * n[c];
    }
    (viscous, pressure)
}

/// `R_E` sampled at the facet quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetResidual {
    pub class: FacetClass,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    /// Pressure part of the values, `−⟦p n⟧/2` on interior facets.
    pub pressure_values: Vec<[f64; 3]>,
}

impl FacetResidual {
    pub fn norm_squared(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .sum()
    }
}

/// Barycentric coordinates in element `to` of the point with coordinates `lambda` in `from`.
fn transfer(mesh: &Mesh, from: usize, lambda: &[f64; 4], to: usize) -> [f64; 4] {
    let src = mesh.element(from);
    let mut out = [0.0; 4];
    for (j, v) in mesh.element(to).iter().enumerate() {
        if let Some(i) = src.iter().position(|w| w == v) {
            out[j] = lambda[i];
        }
    }
    out
}

/// Equilibrated residual on `facet`. Interior jumps use the outward normal of the
/// lower-index element.
pub fn facet_residual(
    mesh: &Mesh,
    topology: &Topology,
    spec: &ProblemSpec,
    sol: &Solution,
    facet: usize,
) -> Result<FacetResidual> {
    if facet >= topology.n_facets() {
        return Err(Error::InvalidArgument(format!(
            "facet {facet} out of range ({} facets)",
            topology.n_facets()
        )));
    }
    let class = topology.facet_class(facet);
    let incident: Vec<(usize, usize)> = topology.facet_elements(facet).collect();
    let (t1, k1) = incident[0];
    let geo1 = ElementGeometry::new(mesh, t1);
    let n = geo1.outward_normal(k1);
    let quad = geo1.facet_quadrature(k1, FACET_DEGREE);
    let mut out = FacetResidual {
        class,
        points: Vec::with_capacity(quad.len()),
        weights: Vec::with_capacity(quad.len()),
        values: Vec::with_capacity(quad.len()),
        pressure_values: Vec::with_capacity(quad.len()),
    };
    let geo2 = incident.get(1).map(|&(t2, _)| (t2, ElementGeometry::new(mesh, t2)));
    let neumann = match class {
        FacetClass::Neumann => {
            let tag = topology.facet_tag(facet).expect("boundary facets carry tags");
            Some(&spec.bcs[&tag].value)
        }
        _ => None,
    };
    for (l1, w) in quad {
        let x = geo1.map(&l1);
        let mut value = [0.0; 3];
        let mut pvalue = [0.0; 3];
        match class {
            FacetClass::Dirichlet => {}
            FacetClass::Interior => {
                let (t2, g2) = geo2.as_ref().expect("interior facet has two elements");
                let l2 = transfer(mesh, t1, &l1, *t2);
                let (v1, p1) = normal_stress(spec, sol, &geo1, t1, &l1, &n);
                let (v2, p2) = normal_stress(spec, sol, g2, *t2, &l2, &n);
                for c in 0..3 {
                    pvalue[c] = 0.5 * (p1[c] - p2[c]);
                    value[c] = 0.5 * ((v1[c] - v2[c]) + (p1[c] - p2[c]));
                }
            }
            FacetClass::Neumann => {
                let un = neumann.expect("neumann value").eval(&x);
                let (v1, p1) = normal_stress(spec, sol, &geo1, t1, &l1, &n);
                for c in 0..3 {
                    pvalue[c] = -p1[c];
                    value[c] = un[c] - (v1[c] + p1[c]);
                }
            }
        }
        out.points.push(x);
        out.weights.push(w);
        out.values.push(value);
        out.pressure_values.push(pvalue);
    }
    Ok(out)
}

/// Computes all element indicators and the global estimate `(Σ η_T²)^{1/2}`.
pub fn compute_indicators(mesh: &Mesh, topology: &Topology, spec: &ProblemSpec, sol: &Solution) -> Result<IndicatorField> {
    let d = mesh.dim();
    let element_parts: Vec<(f64, f64, f64)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let geo = ElementGeometry::new(mesh, t);
            let kinv = spec.k_inverse(mesh.region(t))?;
            let h = mesh.element_diameter(t);
            let jac = geo.jacobian();
            let (mut r1, mut r2) = (0.0, 0.0);
            for (l, w) in rule(d, ELEMENT_DEGREE).iter() {
                let a = r1_at(spec, sol, &geo, t, mesh.region(t), kinv, l);
                r1 += w * jac * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
                let b = r2_at(spec, sol, &geo, t, l);
                r2 += w * jac * b * b;
            }
            Ok((h, h * h * r1, r2))
        })
        .collect::<Result<_>>()?;
    let facet_norms: Vec<f64> = (0..topology.n_facets())
        .into_par_iter()
        .map(|f| {
            if topology.facet_class(f) == FacetClass::Dirichlet {
                Ok(0.0)
            } else {
                facet_residual(mesh, topology, spec, sol, f).map(|r| r.norm_squared())
            }
        })
        .collect::<Result<_>>()?;

    let n = mesh.n_elements();
    let mut jump_part = vec![0.0; n];
    for t in 0..n {
        let h = element_parts[t].0;
        let s: f64 = topology.element_facets(t).iter().map(|&f| facet_norms[f]).sum();
        jump_part[t] = h * s;
    }
    let r1_part: Vec<f64> = element_parts.iter().map(|p| p.1).collect();
    let r2_part: Vec<f64> = element_parts.iter().map(|p| p.2).collect();
    let eta: Vec<f64> = (0..n)
        .map(|t| (r1_part[t] + r2_part[t] + jump_part[t]).sqrt())
        .collect();
    let global_estimate = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(IndicatorField {
        eta,
        r1_part,
        r2_part,
        jump_part,
        global_estimate,
    })
}
