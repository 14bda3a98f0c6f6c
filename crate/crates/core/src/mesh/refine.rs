//! Conforming bisection refinement.
//!
//! Triangles use newest-vertex bisection: each element stores its refinement edge,
//! and the two children are refined next across the edges opposite the new vertex.
//! Tetrahedra use longest-edge bisection under a global total order on edges.
//! In both cases, any element holding a midpoint on one of its edges is bisected
//! again until no hanging nodes remain.

use std::collections::HashMap;

use super::{local_edges, longest_edge, sorted_pair, Mesh, Point};
use crate::error::{Error, Result};

struct Refiner {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    regions: Vec<i32>,
    ref_edges: Vec<u8>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl Refiner {
    fn new(mesh: &Mesh) -> Refiner {
        let n = mesh.dim() + 1;
        let cells = mesh
            .elements()
            .map(|el| {
                let mut c = [usize::MAX; 4];
                c[..n].copy_from_slice(el);
                c
            })
            .collect();
        Refiner {
            dim: mesh.dim(),
            vertices: mesh.vertices().to_vec(),
            cells,
            regions: mesh.regions().to_vec(),
            ref_edges: mesh.refinement_edges().to_vec(),
            midpoints: HashMap::new(),
        }
    }

    fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..self.dim + 1]
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = sorted_pair((a, b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let (pa, pb) = (self.vertices[key.0], self.vertices[key.1]);
        let m = self.vertices.len();
        self.vertices
            .push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
        self.midpoints.insert(key, m);
        m
    }

    fn has_hanging_node(&self, c: usize) -> bool {
        let el = self.cell(c);
        local_edges(self.dim)
            .iter()
            .any(|&(i, j)| self.midpoints.contains_key(&sorted_pair((el[i], el[j]))))
    }

    /// Splits cell `c` across its refinement edge; the first child keeps index `c`.
    fn bisect(&mut self, c: usize) {
        let edges = local_edges(self.dim);
        let (i, j) = edges[self.ref_edges[c] as usize];
        let verts = self.cells[c];
        let m = self.midpoint(verts[i], verts[j]);
        let mut first = verts;
        first[j] = m;
        let mut second = verts;
        second[i] = m;
        let (r1, r2) = if self.dim == 2 {
            // newest vertex bisection: refine next across the edge opposite the new vertex
            (opposite_edge(j), opposite_edge(i))
        } else {
            (
                longest_edge(&self.vertices, &first[..4]),
                longest_edge(&self.vertices, &second[..4]),
            )
        };
        self.cells[c] = first;
        self.ref_edges[c] = r1;
        self.cells.push(second);
        self.ref_edges.push(r2);
        self.regions.push(self.regions[c]);
    }

    fn close(&mut self) {
        loop {
            let mut changed = false;
            let mut c = 0;
            while c < self.cells.len() {
                if self.has_hanging_node(c) {
                    self.bisect(c);
                    changed = true;
                } else {
                    c += 1;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn split_facet(&self, facet: &[usize], out: &mut Vec<usize>) -> Result<()> {
        if self.dim == 2 {
            match self.midpoints.get(&sorted_pair((facet[0], facet[1]))) {
                Some(&m) => {
                    self.split_facet(&[facet[0], m], out)?;
                    self.split_facet(&[m, facet[1]], out)
                }
                None => {
                    out.extend_from_slice(facet);
                    Ok(())
                }
            }
        } else {
            // a face is always first split across its own highest-priority edge
            let k = longest_edge(&self.vertices, facet) as usize;
            let (i, j) = local_edges(2)[k];
            match self.midpoints.get(&sorted_pair((facet[i], facet[j]))) {
                Some(&m) => {
                    let mut a = [facet[0], facet[1], facet[2]];
                    a[j] = m;
                    let mut b = [facet[0], facet[1], facet[2]];
                    b[i] = m;
                    self.split_facet(&a, out)?;
                    self.split_facet(&b, out)
                }
                None => {
                    let hanging = local_edges(2)
                        .iter()
                        .any(|&(p, q)| self.midpoints.contains_key(&sorted_pair((facet[p], facet[q]))));
                    if hanging {
                        return Err(Error::Topology {
                            facet: facet.to_vec(),
                            reason: "boundary face split inconsistently during refinement".into(),
                        });
                    }
                    out.extend_from_slice(facet);
                    Ok(())
                }
            }
        }
    }
}

/// Local edge index of a triangle's edge opposite local vertex `v`.
fn opposite_edge(v: usize) -> u8 {
    local_edges(2)
        .iter()
        .position(|&(a, b)| a != v && b != v)
        .expect("triangle edge opposite a vertex") as u8
}

/// Bisects every marked element at least once and closes the result to a conforming mesh.
/// Children inherit region ids; boundary facets are split along with their edges and keep
/// their tags.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    if mesh.n_elements() == 0 {
        return Err(Error::Mesh("cannot refine an empty mesh".into()));
    }
    if let Some(&bad) = marked.iter().find(|&&t| t >= mesh.n_elements()) {
        return Err(Error::InvalidArgument(format!(
            "marked element {bad} out of range (mesh has {} elements)",
            mesh.n_elements()
        )));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut r = Refiner::new(mesh);
    let mut seeds = marked.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    for &c in &seeds {
        r.bisect(c);
    }
    r.close();

    let mut boundary = Vec::with_capacity(mesh.n_boundary_facets() * mesh.dim() * 2);
    let mut tags = Vec::with_capacity(mesh.n_boundary_facets() * 2);
    for (f, tag) in mesh.boundary_facets() {
        let before = boundary.len();
        r.split_facet(f, &mut boundary)?;
        let pieces = (boundary.len() - before) / mesh.dim();
        tags.extend(std::iter::repeat_n(tag, pieces));
    }

    let n = r.dim + 1;
    let cells = r.cells.iter().flat_map(|c| c[..n].iter().copied()).collect();
    Ok(Mesh::from_raw_parts(
        r.dim, r.vertices, cells, r.regions, r.ref_edges, boundary, tags,
    ))
}

/// One refinement pass with every element marked.
pub fn uniform_refine(mesh: &Mesh) -> Result<Mesh> {
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    refine(mesh, &all)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::mesh::{BcKind, Topology};

    fn bc() -> BTreeMap<i32, BcKind> {
        (0..10).map(|t| (t, BcKind::Dirichlet)).collect()
    }

    fn triangle() -> Mesh {
        Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2]],
            vec![4],
            vec![(vec![0, 1], 1), (vec![1, 2], 2), (vec![2, 0], 3)],
        )
        .unwrap()
    }

    fn square() -> Mesh {
        Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![1, 2],
            vec![(vec![0, 1], 1), (vec![1, 2], 1), (vec![2, 3], 1), (vec![3, 0], 1)],
        )
        .unwrap()
    }

    /// Brute-force geometric conformity oracle: no vertex of any element may lie on
    /// the closure of another element without being one of its vertices.
    pub(crate) fn geometrically_conforming(m: &Mesh) -> bool {
        let d = m.dim();
        for t in 0..m.n_elements() {
            let p = m.element_points(t);
            let el = m.element(t);
            for v in 0..m.n_vertices() {
                if el.contains(&v) {
                    continue;
                }
                let x = m.vertex(v);
                let mut lam = vec![0.0; d + 1];
                let vol = crate::mesh::signed_volume(d, &p[..d + 1]);
                for k in 0..=d {
                    let mut q = p;
                    q[k] = *x;
                    lam[k] = crate::mesh::signed_volume(d, &q[..d + 1]) / vol;
                }
                if lam.iter().all(|&l| l > -1e-12) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = square();
        assert_eq!(refine(&m, &[]).unwrap(), m);
    }

    #[test]
    fn out_of_range_mark_is_rejected() {
        assert!(refine(&square(), &[2]).is_err());
    }

    #[test]
    fn single_triangle_bisection() {
        let m = refine(&triangle(), &[0]).unwrap();
        assert_eq!(m.n_elements(), 2);
        for t in 0..2 {
            assert!(m.signed_volume(t) > 0.0);
            assert_eq!(m.region(t), 4);
        }
        // the hypotenuse was split
        assert_eq!(m.vertex(3), &[0.5, 0.5, 0.0]);
        assert_eq!(m.n_boundary_facets(), 4);
        let tags: Vec<i32> = m.boundary_facets().map(|(_, t)| t).collect();
        assert_eq!(tags.iter().filter(|&&t| t == 2).count(), 2);
        Topology::build(&m, &bc()).unwrap();
        assert!(geometrically_conforming(&m));
    }

    #[test]
    fn closure_refines_neighbour() {
        let m = square();
        // the shared diagonal is the longest edge of both triangles
        let r = refine(&m, &[0]).unwrap();
        assert_eq!(r.n_elements(), 4);
        assert!(geometrically_conforming(&r));
        Topology::build(&r, &bc()).unwrap();
        assert!((r.total_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closure_after_deeper_refinement() {
        let mut m = square();
        for step in 0..6 {
            let marked = vec![step % m.n_elements()];
            m = refine(&m, &marked).unwrap();
            assert!(geometrically_conforming(&m));
            Topology::build(&m, &bc()).unwrap();
        }
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_refinement_growth_and_regions() {
        let mut m = square();
        let area_by_region = |m: &Mesh, r: i32| -> f64 {
            (0..m.n_elements()).filter(|&t| m.region(t) == r).map(|t| m.volume(t)).sum()
        };
        for _ in 0..5 {
            let r = uniform_refine(&m).unwrap();
            let factor = r.n_elements() as f64 / m.n_elements() as f64;
            assert!((2.0..=4.0).contains(&factor), "growth factor {factor}");
            assert!((area_by_region(&r, 1) - 0.5).abs() < 1e-14);
            assert!((area_by_region(&r, 2) - 0.5).abs() < 1e-14);
            m = r;
        }
        assert!(geometrically_conforming(&m));
    }

    #[test]
    fn repeated_triangle_bisection_is_shape_regular() {
        let mut m = triangle();
        let initial = m.max_shape_regularity();
        for _ in 0..10 {
            let before = m.n_elements();
            m = uniform_refine(&m).unwrap();
            assert!(m.n_elements() > before);
            assert!(m.max_shape_regularity() <= 4.0 * initial);
        }
    }

    #[test]
    fn refinement_is_deterministic() {
        let a = refine(&uniform_refine(&square()).unwrap(), &[1, 3]).unwrap();
        let b = refine(&uniform_refine(&square()).unwrap(), &[3, 1, 1]).unwrap();
        assert_eq!(a, b);
    }

    fn kuhn_cube() -> Mesh {
        let mut verts = Vec::new();
        for k in 0..8 {
            verts.push([(k & 1) as f64, ((k >> 1) & 1) as f64, ((k >> 2) & 1) as f64]);
        }
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let tets: Vec<Vec<usize>> = perms
            .iter()
            .map(|p| {
                let mut idx = 0;
                let mut t = vec![0];
                for &a in p {
                    idx |= 1 << a;
                    t.push(idx);
                }
                t
            })
            .collect();
        let mut faces: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for t in &tets {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort();
                *faces.entry(f).or_default() += 1;
            }
        }
        let boundary = faces.into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| (f, 1)).collect();
        Mesh::new(3, verts, tets, vec![0; 6], boundary).unwrap()
    }

    #[test]
    fn tetrahedral_refinement_stays_conforming() {
        let mut m = kuhn_cube();
        let initial = m.max_shape_regularity();
        for step in 0..8 {
            let marked: Vec<usize> = (0..m.n_elements()).filter(|t| t % 5 == step % 5).collect();
            m = refine(&m, &marked).unwrap();
            Topology::build(&m, &bc()).unwrap();
            assert!((m.total_volume() - 1.0).abs() < 1e-13);
            assert!(m.max_shape_regularity() <= 4.0 * initial);
        }
        assert!(geometrically_conforming(&m));
        let before = m.n_elements();
        let u = uniform_refine(&m).unwrap();
        assert!(u.n_elements() >= 2 * before);
        Topology::build(&u, &bc()).unwrap();
    }
}
