use crate::error::{Error, Result};
use crate::mesh::{local_edges, FacetClass, Mesh, Point, Topology};
use crate::model::ProblemSpec;

use super::basis::n_p2;

/// Degree-of-freedom numbering for the Taylor-Hood pair.
///
/// P2 nodes are the mesh vertices (`0..n_vertices`) followed by edge midpoints
/// (`n_vertices + edge`). Velocity DOFs interleave components, `node * dim + c`.
/// Pressure DOFs are the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dim: usize,
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    element_nodes: Vec<usize>,
    element_vertices: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, topology: &Topology) -> DofMap {
        let dim = mesh.dim();
        let nv = mesh.n_vertices();
        let n = n_p2(dim);
        let mut element_nodes = Vec::with_capacity(mesh.n_elements() * n);
        let mut element_vertices = Vec::with_capacity(mesh.n_elements() * (dim + 1));
        for t in 0..mesh.n_elements() {
            element_nodes.extend_from_slice(mesh.element(t));
            element_nodes.extend(topology.element_edges(t).iter().map(|&e| nv + e));
            element_vertices.extend_from_slice(mesh.element(t));
        }
        DofMap {
            dim,
            n_vertices: nv,
            edges: topology.edges().to_vec(),
            element_nodes,
            element_vertices,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.element_vertices.len() / (self.dim + 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_vertices + self.edges.len()
    }

    pub fn n_velocity(&self) -> usize {
        self.dim * self.n_nodes()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    /// P2 node ids of element `t` in local basis order.
    pub fn element_nodes(&self, t: usize) -> &[usize] {
        let n = n_p2(self.dim);
        &self.element_nodes[t * n..(t + 1) * n]
    }

    /// Global velocity DOFs of element `t`, local index `a * dim + c`.
    pub fn velocity_dofs(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.dim;
        self.element_nodes(t)
            .iter()
            .flat_map(move |&node| (0..d).map(move |c| node * d + c))
    }

    pub fn pressure_dofs(&self, t: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.element_vertices[t * n..(t + 1) * n]
    }

    pub fn velocity_dof(&self, node: usize, component: usize) -> usize {
        node * self.dim + component
    }

    /// Location of a P2 node: a vertex or an edge midpoint.
    pub fn node_point(&self, mesh: &Mesh, node: usize) -> Point {
        if node < self.n_vertices {
            *mesh.vertex(node)
        } else {
            let (a, b) = self.edges[node - self.n_vertices];
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            [
                0.5 * (pa[0] + pb[0]),
                0.5 * (pa[1] + pb[1]),
                0.5 * (pa[2] + pb[2]),
            ]
        }
    }
}

/// Velocity DOFs fixed by Dirichlet data, with their interpolated values.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    values: Vec<f64>,
    fixed: Vec<bool>,
    free_index: Vec<usize>,
    n_free: usize,
}

impl Constraints {
    /// Nodal interpolation of the Dirichlet data. A node on facets with different
    /// Dirichlet tags takes its value from the smallest tag; Dirichlet wins over Neumann.
    pub fn dirichlet(mesh: &Mesh, topology: &Topology, dofs: &DofMap, spec: &ProblemSpec) -> Result<Constraints> {
        let dim = mesh.dim();
        let mut node_tag = vec![i32::MAX; dofs.n_nodes()];
        for f in 0..topology.n_facets() {
            if topology.facet_class(f) != FacetClass::Dirichlet {
                continue;
            }
            let tag = topology.facet_tag(f).expect("boundary facets carry tags");
            let (t, k) = topology
                .facet_elements(f)
                .next()
                .expect("boundary facet has an element");
            let nodes = dofs.element_nodes(t);
            // every local node except the opposite vertex and edges touching it
            for i in (0..=dim).filter(|&i| i != k) {
                node_tag[nodes[i]] = node_tag[nodes[i]].min(tag);
            }
            for (e, &(i, j)) in local_edges(dim).iter().enumerate() {
                if i != k && j != k {
                    let node = nodes[dim + 1 + e];
                    node_tag[node] = node_tag[node].min(tag);
                }
            }
        }
        let mut values = vec![0.0; dofs.n_velocity()];
        let mut fixed = vec![false; dofs.n_velocity()];
        for (node, &tag) in node_tag.iter().enumerate() {
            if tag == i32::MAX {
                continue;
            }
            let bc = spec
                .bcs
                .get(&tag)
                .ok_or_else(|| Error::Config(format!("no boundary condition for tag {tag}")))?;
            let x = dofs.node_point(mesh, node);
            let u = bc.value.checked_eval(&x)?;
            for c in 0..dim {
                let dof = dofs.velocity_dof(node, c);
                values[dof] = u[c];
                fixed[dof] = true;
            }
        }
        Ok(Self::from_parts(values, fixed))
    }

    /// No constrained DOFs.
    pub fn none(n_velocity: usize) -> Constraints {
        Self::from_parts(vec![0.0; n_velocity], vec![false; n_velocity])
    }

    fn from_parts(values: Vec<f64>, fixed: Vec<bool>) -> Constraints {
        let mut free_index = vec![usize::MAX; fixed.len()];
        let mut n_free = 0;
        for (i, &f) in fixed.iter().enumerate() {
            if !f {
                free_index[i] = n_free;
                n_free += 1;
            }
        }
        Constraints {
            values,
            fixed,
            free_index,
            n_free,
        }
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    /// Prescribed value of a fixed DOF (zero for free ones).
    pub fn value(&self, dof: usize) -> f64 {
        self.values[dof]
    }

    /// Position of a free DOF among the free DOFs.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let i = self.free_index[dof];
        (i != usize::MAX).then_some(i)
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_fixed(&self) -> usize {
        self.fixed.len() - self.n_free
    }

    pub fn fixed_dofs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fixed
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| (i, self.values[i]))
    }

    /// Full velocity vector from free values, filling in the prescribed ones.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        (0..self.fixed.len())
            .map(|i| match self.free_index(i) {
                Some(k) => free[k],
                None => self.values[i],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::expr::Expression;
    use crate::mesh::BcKind;
    use crate::model::{BoundaryCondition, KInverse, VectorField};

    fn tri() -> Mesh {
        Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2]],
            vec![0],
            vec![(vec![0, 1], 1), (vec![1, 2], 1), (vec![2, 0], 2)],
        )
        .unwrap()
    }

    fn square() -> Mesh {
        Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![0, 0],
            vec![(vec![0, 1], 1), (vec![1, 2], 3), (vec![2, 3], 1), (vec![3, 0], 2)],
        )
        .unwrap()
    }

    fn spec(bcs: Vec<(i32, BoundaryCondition)>) -> ProblemSpec {
        ProblemSpec {
            dim: 2,
            mu: 1.0,
            mu_star: 1.0,
            k_inverse: BTreeMap::from([(0, KInverse::zero())]),
            bcs: bcs.into_iter().collect(),
            body_force: VectorField::zero(2),
            region_body_force: BTreeMap::new(),
            mass_source: Expression::num(0.0),
        }
    }

    fn topo(mesh: &Mesh, s: &ProblemSpec) -> Topology {
        Topology::build(mesh, &s.bc_classes()).unwrap()
    }

    #[test]
    fn counts_on_single_elements() {
        let m = tri();
        let s = spec(vec![
            (1, BoundaryCondition::dirichlet(VectorField::zero(2))),
            (2, BoundaryCondition::dirichlet(VectorField::zero(2))),
        ]);
        let d = DofMap::new(&m, &topo(&m, &s));
        assert_eq!(d.n_velocity(), 12);
        assert_eq!(d.n_pressure(), 3);

        let tet = Mesh::new(
            3,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
            vec![0],
            vec![(vec![1, 2, 3], 1), (vec![0, 2, 3], 1), (vec![0, 1, 3], 1), (vec![0, 1, 2], 1)],
        )
        .unwrap();
        let t = Topology::build(&tet, &BTreeMap::from([(1, BcKind::Dirichlet)])).unwrap();
        let d = DofMap::new(&tet, &t);
        assert_eq!(d.n_velocity(), 30);
        assert_eq!(d.n_pressure(), 4);
        let all: Vec<usize> = d.velocity_dofs(0).collect();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn shared_edge_node_is_shared() {
        let m = square();
        let s = spec(vec![
            (1, BoundaryCondition::dirichlet(VectorField::zero(2))),
            (2, BoundaryCondition::dirichlet(VectorField::zero(2))),
            (3, BoundaryCondition::neumann(VectorField::zero(2))),
        ]);
        let d = DofMap::new(&m, &topo(&m, &s));
        // the diagonal is local edge 1 of element 0 and local edge 0 of element 1
        let diag0 = d.element_nodes(0)[3 + 1];
        let diag1 = d.element_nodes(1)[3];
        assert_eq!(diag0, diag1);
        assert_eq!(d.node_point(&m, diag0), [0.5, 0.5, 0.0]);
        assert_eq!(d.n_nodes(), 4 + 5);
    }

    #[test]
    fn dirichlet_interpolation_and_precedence() {
        let m = square();
        let s = spec(vec![
            (1, BoundaryCondition::dirichlet(VectorField::zero(2))),
            (2, BoundaryCondition::dirichlet(VectorField::parse(&["y*(1-y)", "0"]).unwrap())),
            (3, BoundaryCondition::neumann(VectorField::constant(&[9.0, 9.0]))),
        ]);
        let t = topo(&m, &s);
        let d = DofMap::new(&m, &t);
        let c = Constraints::dirichlet(&m, &t, &d, &s).unwrap();
        // midpoint of the inflow edge x = 0
        let mid = (0..d.n_nodes())
            .find(|&n| d.node_point(&m, n) == [0.0, 0.5, 0.0])
            .unwrap();
        assert!(c.is_fixed(d.velocity_dof(mid, 0)));
        assert_eq!(c.value(d.velocity_dof(mid, 0)), 0.25);
        assert_eq!(c.value(d.velocity_dof(mid, 1)), 0.0);
        // corner (0,1) is shared by tags 1 and 2; the smaller tag wins
        assert!(c.is_fixed(d.velocity_dof(3, 0)));
        assert_eq!(c.value(d.velocity_dof(3, 0)), 0.0);
        // vertex (1,0) lies on the wall and the Neumann side: fixed
        assert!(c.is_fixed(d.velocity_dof(1, 0)));
        // midpoint of the Neumann side stays free
        let out = (0..d.n_nodes())
            .find(|&n| d.node_point(&m, n) == [1.0, 0.5, 0.0])
            .unwrap();
        assert!(!c.is_fixed(d.velocity_dof(out, 1)));
        // interior diagonal midpoint is free
        assert_eq!(c.n_free(), 2 * 2);
        let full = c.expand(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(full.len(), d.n_velocity());
    }

    #[test]
    fn constant_inflow_everywhere_on_tag() {
        let m = square();
        let s = spec(vec![
            (1, BoundaryCondition::dirichlet(VectorField::zero(2))),
            (2, BoundaryCondition::dirichlet(VectorField::constant(&[0.25, 0.0]))),
            (3, BoundaryCondition::neumann(VectorField::zero(2))),
        ]);
        let t = topo(&m, &s);
        let d = DofMap::new(&m, &t);
        let c = Constraints::dirichlet(&m, &t, &d, &s).unwrap();
        let on_inflow: Vec<usize> = (0..d.n_nodes())
            .filter(|&n| {
                let p = d.node_point(&m, n);
                p[0] == 0.0 && p[1] > 0.0 && p[1] < 1.0
            })
            .collect();
        assert!(!on_inflow.is_empty());
        for n in on_inflow {
            assert_eq!(c.value(d.velocity_dof(n, 0)), 0.25);
        }
    }
}
