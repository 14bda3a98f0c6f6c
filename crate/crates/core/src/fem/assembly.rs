use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FacetClass, Mesh, Topology};
use crate::model::ProblemSpec;
use crate::sparse::{CsrMatrix, TripletBuilder};

use super::basis::{n_p2, p2_gradients, p2_values};
use super::quadrature::rule;
use super::{dot, Constraints, DofMap, ElementGeometry};

/// Quadrature degree of the velocity and divergence blocks.
pub const MATRIX_DEGREE: usize = 4;
/// Quadrature degree of volume loads; 4 integrates quadratic data against P2 exactly.
pub const LOAD_DEGREE: usize = 4;
pub const FACET_DEGREE: usize = 4;

/// Assembled Taylor-Hood system before Dirichlet elimination.
///
/// `a` and `b` act on the full velocity vector (constrained DOFs included); the
/// reduced saddle matrix is produced by [`SaddleSystem::kkt`].
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    dofs: DofMap,
    constraints: Constraints,
    a: CsrMatrix,
    b: CsrMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
    gauge: Option<Vec<f64>>,
}

struct LocalBlock {
    a: Vec<f64>,
    b: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

fn element_block(mesh: &Mesh, spec: &ProblemSpec, t: usize) -> Result<LocalBlock> {
    let d = mesh.dim();
    let geo = ElementGeometry::new(mesh, t);
    if !(geo.volume > 0.0) {
        return Err(Error::Assembly(format!("element {t} has zero volume")));
    }
    let kinv = spec.k_inverse(mesh.region(t))?;
    let n = n_p2(d);
    let m = n * d;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; (d + 1) * m];
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; d + 1];
    let jac = geo.jacobian();
    let has_reaction = !kinv.is_zero();
    for (l, w) in rule(d, MATRIX_DEGREE).iter() {
        let wq = w * jac;
        let phi = p2_values(d, l);
        let grad = p2_gradients(d, l, &geo.grad_lambda);
        for i in 0..n {
            for j in 0..n {
                let s = wq * spec.mu_star * dot(&grad[i], &grad[j]);
                let mass = wq * spec.mu * (phi[i] * phi[j]);
                for c in 0..d {
                    a[(i * d + c) * m + j * d + c] += s;
                    if has_reaction {
                        for c2 in 0..d {
                            a[(i * d + c) * m + j * d + c2] += mass * kinv.entry(c, c2);
                        }
                    }
                }
            }
            for q in 0..=d {
                for c in 0..d {
                    b[q * m + i * d + c] -= wq * l[q] * grad[i][c];
                }
            }
        }
    }
    let force = spec.body_force(mesh.region(t));
    let has_force = !force.is_zero();
    let has_source = !matches!(spec.mass_source, crate::expr::Expression::Num(v) if v == 0.0);
    if has_force || has_source {
        for (l, w) in rule(d, LOAD_DEGREE).iter() {
            let wq = w * jac;
            let x = geo.map(l);
            if has_force {
                let phi = p2_values(d, l);
                let fx = force.eval(&x);
                for i in 0..n {
                    for c in 0..d {
                        f[i * d + c] += wq * fx[c] * phi[i];
                    }
                }
            }
            if has_source {
                let gx = spec.mass_source.eval(&x);
                for q in 0..=d {
                    g[q] -= wq * gx * l[q];
                }
            }
        }
    }
    Ok(LocalBlock { a, b, f, g })
}

/// Assembles the saddle-point system and the Dirichlet constraints of `spec` on `mesh`.
pub fn assemble(mesh: &Mesh, topology: &Topology, spec: &ProblemSpec) -> Result<SaddleSystem> {
    spec.validate(mesh)?;
    let d = mesh.dim();
    let dofs = DofMap::new(mesh, topology);
    let constraints = Constraints::dirichlet(mesh, topology, &dofs, spec)?;
    let nv = dofs.n_velocity();
    let np = dofs.n_pressure();

    let blocks: Vec<LocalBlock> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| element_block(mesh, spec, t))
        .collect::<Result<_>>()?;

    let m = n_p2(d) * d;
    let mut ta = TripletBuilder::with_capacity(nv, nv, blocks.len() * m * m);
    let mut tb = TripletBuilder::with_capacity(np, nv, blocks.len() * m * (d + 1));
    let mut f = vec![0.0; nv];
    let mut g = vec![0.0; np];
    for (t, blk) in blocks.iter().enumerate() {
        let vd: Vec<usize> = dofs.velocity_dofs(t).collect();
        let pd = dofs.pressure_dofs(t);
        for (i, &gi) in vd.iter().enumerate() {
            for (j, &gj) in vd.iter().enumerate() {
                let v = blk.a[i * m + j];
                if v != 0.0 {
                    ta.push(gi, gj, v);
                }
            }
            f[gi] += blk.f[i];
        }
        for (q, &gq) in pd.iter().enumerate() {
            for (j, &gj) in vd.iter().enumerate() {
                let v = blk.b[q * m + j];
                if v != 0.0 {
                    tb.push(gq, gj, v);
                }
            }
            g[gq] += blk.g[q];
        }
    }

    let mut has_neumann = false;
    for facet in 0..topology.n_facets() {
        if topology.facet_class(facet) != FacetClass::Neumann {
            continue;
        }
        has_neumann = true;
        let tag = topology.facet_tag(facet).expect("boundary facets carry tags");
        let value = &spec.bcs[&tag].value;
        if value.is_zero() {
            continue;
        }
        let (t, k) = topology.facet_elements(facet).next().expect("boundary facet has an element");
        let geo = ElementGeometry::new(mesh, t);
        let nodes = dofs.element_nodes(t);
        for (l, w) in geo.facet_quadrature(k, FACET_DEGREE) {
            let un = value.checked_eval(&geo.map(&l))?;
            let phi = p2_values(d, &l);
            for (i, &node) in nodes.iter().enumerate() {
                for c in 0..d {
                    f[dofs.velocity_dof(node, c)] += w * un[c] * phi[i];
                }
            }
        }
    }

    let gauge = (!has_neumann).then(|| {
        let mut m = vec![0.0; np];
        for t in 0..mesh.n_elements() {
            let share = mesh.volume(t) / (d + 1) as f64;
            for &v in dofs.pressure_dofs(t) {
                m[v] += share;
            }
        }
        m
    });

    Ok(SaddleSystem {
        dofs,
        constraints,
        a: ta.build(),
        b: tb.build(),
        f,
        g,
        gauge,
    })
}

impl SaddleSystem {
    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    /// Velocity block on all velocity DOFs.
    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    /// Divergence block, `(B u)_q = −∫ φ_q ∇·u`.
    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Pressure mean weights `∫ φ_q` when a zero-mean constraint is imposed.
    pub fn gauge(&self) -> Option<&[f64]> {
        self.gauge.as_deref()
    }

    /// Free velocity DOFs plus pressure DOFs.
    pub fn n_dofs(&self) -> usize {
        self.constraints.n_free() + self.dofs.n_pressure()
    }

    /// Size of the reduced saddle matrix, including the gauge multiplier if present.
    pub fn n_unknowns(&self) -> usize {
        self.n_dofs() + usize::from(self.gauge.is_some())
    }

    /// Reduced symmetric saddle matrix `[A Bᵀ; B 0]` on the free velocity DOFs and
    /// pressures, with the Dirichlet lifting moved to the right-hand side. Unknowns are
    /// ordered free velocities, pressures, then the optional gauge multiplier.
    pub fn kkt(&self) -> (CsrMatrix, Vec<f64>) {
        let c = &self.constraints;
        let nf = c.n_free();
        let np = self.dofs.n_pressure();
        let n = self.n_unknowns();
        let mut rhs = vec![0.0; n];
        let mut t = TripletBuilder::with_capacity(n, n, self.a.nnz() + 2 * self.b.nnz());
        for (dof, &fv) in self.f.iter().enumerate() {
            if let Some(i) = c.free_index(dof) {
                rhs[i] = fv;
            }
        }
        for (r, col, v) in self.a.triplets() {
            let Some(i) = c.free_index(r) else { continue };
            match c.free_index(col) {
                Some(j) => t.push(i, j, v),
                None => rhs[i] -= v * c.value(col),
            }
        }
        for (q, col, v) in self.b.triplets() {
            match c.free_index(col) {
                Some(j) => {
                    t.push(nf + q, j, v);
                    t.push(j, nf + q, v);
                }
                None => rhs[nf + q] -= v * c.value(col),
            }
        }
        for (q, gv) in self.g.iter().enumerate() {
            rhs[nf + q] += gv;
        }
        if let Some(w) = &self.gauge {
            let last = nf + np;
            for (q, &wq) in w.iter().enumerate() {
                t.push(nf + q, last, wq);
                t.push(last, nf + q, wq);
            }
        }
        (t.build(), rhs)
    }

    /// Splits a solution of the reduced system into full velocity and pressure vectors.
    pub fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nf = self.constraints.n_free();
        let np = self.dofs.n_pressure();
        (self.constraints.expand(&x[..nf]), x[nf..nf + np].to_vec())
    }

    /// `‖B u − g‖₂` for a full velocity vector.
    pub fn divergence_residual(&self, velocity: &[f64]) -> f64 {
        let bu = self.b.mul_vec(velocity);
        bu.iter()
            .zip(&self.g)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::expr::Expression;
    use crate::model::{BoundaryCondition, KInverse, VectorField};

    fn tri_mesh() -> Mesh {
        Mesh::new(
            2,
            vec![[0.1, 0.0, 0.0], [1.2, 0.3, 0.0], [0.4, 0.9, 0.0]],
            vec![vec![0, 1, 2]],
            vec![0],
            vec![(vec![0, 1], 1), (vec![1, 2], 1), (vec![2, 0], 1)],
        )
        .unwrap()
    }

    fn spec(dim: usize, mu: f64, mu_star: f64, k: KInverse) -> ProblemSpec {
        ProblemSpec {
            dim,
            mu,
            mu_star,
            k_inverse: BTreeMap::from([(0, k)]),
            bcs: BTreeMap::from([(1, BoundaryCondition::dirichlet(VectorField::zero(dim)))]),
            body_force: VectorField::zero(dim),
            region_body_force: BTreeMap::new(),
            mass_source: Expression::num(0.0),
        }
    }

    fn build(mesh: &Mesh, s: &ProblemSpec) -> SaddleSystem {
        let topo = Topology::build(mesh, &s.bc_classes()).unwrap();
        assemble(mesh, &topo, s).unwrap()
    }

    #[test]
    fn divergence_of_constant_field_vanishes() {
        let m = tri_mesh();
        let sys = build(&m, &spec(2, 1.0, 1.0, KInverse::zero()));
        let n = sys.dofs().n_velocity();
        for c in 0..2 {
            let u: Vec<f64> = (0..n).map(|i| if i % 2 == c { 1.0 } else { 0.0 }).collect();
            assert!(sys.b().mul_vec(&u).iter().all(|v| v.abs() < 1e-14));
            // and constants lie in the kernel of the pure viscous block
            assert!(sys.a().mul_vec(&u).iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn mass_matrix_sums_to_dim_times_volume() {
        for (m, dim) in [(tri_mesh(), 2), (unit_tet(), 3)] {
            let sys = build(&m, &spec(dim, 1.0, 0.0, KInverse::isotropic(dim, 1.0)));
            let total: f64 = sys.a().triplets().map(|(_, _, v)| v).sum();
            assert!((total - dim as f64 * m.volume(0)).abs() < 1e-14);
        }
    }

    fn unit_tet() -> Mesh {
        Mesh::new(
            3,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
            vec![0],
            vec![(vec![1, 2, 3], 1), (vec![0, 2, 3], 1), (vec![0, 1, 3], 1), (vec![0, 1, 2], 1)],
        )
        .unwrap()
    }

    #[test]
    fn velocity_block_is_exactly_symmetric() {
        let k = KInverse::from_matrix(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let sys = build(&tri_mesh(), &spec(2, 0.7, 1.3, k));
        assert_eq!(sys.a().asymmetry(), 0.0);
        let (kkt, _) = sys.kkt();
        assert_eq!(kkt.asymmetry(), 0.0);
    }

    #[test]
    fn divergence_block_matches_integral() {
        // u = (x, 0) is P2-representable; -∫ φ_q ∇·u = -|T|/3 for each vertex q
        let m = tri_mesh();
        let sys = build(&m, &spec(2, 1.0, 1.0, KInverse::zero()));
        let d = sys.dofs();
        let mut u = vec![0.0; d.n_velocity()];
        for node in 0..d.n_nodes() {
            u[d.velocity_dof(node, 0)] = d.node_point(&m, node)[0];
        }
        for v in sys.b().mul_vec(&u) {
            assert!((v + m.volume(0) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_present_without_neumann() {
        let m = tri_mesh();
        let sys = build(&m, &spec(2, 1.0, 1.0, KInverse::zero()));
        let w = sys.gauge().unwrap();
        assert!((w.iter().sum::<f64>() - m.volume(0)).abs() < 1e-15);
        assert_eq!(sys.n_unknowns(), sys.n_dofs() + 1);
        // all velocity DOFs of a single element are on the boundary
        assert_eq!(sys.constraints().n_free(), 0);
    }

    #[test]
    fn missing_region_is_a_config_error() {
        let m = tri_mesh();
        let mut s = spec(2, 1.0, 1.0, KInverse::zero());
        s.k_inverse.clear();
        let topo = Topology::build(&m, &s.bc_classes()).unwrap();
        assert!(matches!(assemble(&m, &topo, &s), Err(Error::Config(_))));
    }
}
