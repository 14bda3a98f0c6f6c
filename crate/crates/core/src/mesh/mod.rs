//! Simplicial meshes (triangles and tetrahedra) with region and boundary tags.

mod refine;
mod topology;

pub use refine::{refine, uniform_refine};
pub use topology::{BcKind, FacetClass, Topology};

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Coordinates in physical space; the third component is zero for 2D meshes.
pub type Point = [f64; 3];

/// Local vertex pairs of the edges of a triangle.
pub const TRIANGLE_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
/// Local vertex pairs of the edges of a tetrahedron.
pub const TETRAHEDRON_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &TRIANGLE_EDGES
    } else {
        &TETRAHEDRON_EDGES
    }
}

/// Conforming simplicial mesh.
///
/// Elements are stored flat with stride `dim + 1`; boundary facets flat with
/// stride `dim`. Every element is positively oriented. Each element also carries
/// the local index (into [`local_edges`]) of the edge it is bisected across
/// on the next refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    regions: Vec<i32>,
    refinement_edges: Vec<u8>,
    boundary: Vec<usize>,
    boundary_tags: Vec<i32>,
}

impl Mesh {
    /// Builds a mesh, reorienting negatively oriented elements and assigning each
    /// element's refinement edge to its longest edge.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        regions: Vec<i32>,
        boundary: Vec<(Vec<usize>, i32)>,
    ) -> Result<Mesh> {
        Self::with_refinement_edges(dim, vertices, elements, regions, boundary, None)
    }

    /// Like [`Mesh::new`] but with explicit refinement edges (local edge indices).
    pub fn with_refinement_edges(
        dim: usize,
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        regions: Vec<i32>,
        boundary: Vec<(Vec<usize>, i32)>,
        refinement_edges: Option<Vec<u8>>,
    ) -> Result<Mesh> {
        if dim != 2 && dim != 3 {
            return Err(Error::Mesh(format!("dimension must be 2 or 3, got {dim}")));
        }
        if elements.is_empty() {
            return Err(Error::Mesh("mesh has no elements".into()));
        }
        if regions.len() != elements.len() {
            return Err(Error::Mesh(format!(
                "{} region ids for {} elements",
                regions.len(),
                elements.len()
            )));
        }
        if vertices.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Mesh("non-finite vertex coordinate".into()));
        }
        let n_vertices = vertices.len();
        let mut cells = Vec::with_capacity(elements.len() * (dim + 1));
        for (t, el) in elements.iter().enumerate() {
            check_simplex(el, dim + 1, n_vertices).map_err(|m| Error::Mesh(format!("element {t}: {m}")))?;
            cells.extend_from_slice(el);
        }
        let mut bnd = Vec::with_capacity(boundary.len() * dim);
        let mut tags = Vec::with_capacity(boundary.len());
        for (k, (f, tag)) in boundary.iter().enumerate() {
            check_simplex(f, dim, n_vertices).map_err(|m| Error::Mesh(format!("boundary facet {k}: {m}")))?;
            bnd.extend_from_slice(f);
            tags.push(*tag);
        }
        let mut mesh = Mesh {
            dim,
            vertices,
            cells,
            regions,
            refinement_edges: Vec::new(),
            boundary: bnd,
            boundary_tags: tags,
        };
        for t in 0..mesh.n_elements() {
            let v = mesh.signed_volume(t);
            if v == 0.0 || !v.is_finite() {
                return Err(Error::Mesh(format!("element {t} is degenerate (zero volume)")));
            }
            if v < 0.0 {
                let s = t * (dim + 1);
                mesh.cells.swap(s + dim - 1, s + dim);
            }
        }
        let n_local_edges = local_edges(dim).len();
        mesh.refinement_edges = match refinement_edges {
            Some(r) => {
                if r.len() != mesh.n_elements() || r.iter().any(|&e| e as usize >= n_local_edges) {
                    return Err(Error::Mesh("invalid refinement edge list".into()));
                }
                r
            }
            None => (0..mesh.n_elements()).map(|t| mesh.longest_local_edge(t)).collect(),
        };
        Ok(mesh)
    }

    pub(crate) fn from_raw_parts(
        dim: usize,
        vertices: Vec<Point>,
        cells: Vec<usize>,
        regions: Vec<i32>,
        refinement_edges: Vec<u8>,
        boundary: Vec<usize>,
        boundary_tags: Vec<i32>,
    ) -> Mesh {
        Mesh {
            dim,
            vertices,
            cells,
            regions,
            refinement_edges,
            boundary,
            boundary_tags,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.regions.len()
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.boundary_tags.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    /// Vertex indices of element `t`.
    pub fn element(&self, t: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[t * n..(t + 1) * n]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn region(&self, t: usize) -> i32 {
        self.regions[t]
    }

    pub fn regions(&self) -> &[i32] {
        &self.regions
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.refinement_edges[t] as usize
    }

    pub fn refinement_edges(&self) -> &[u8] {
        &self.refinement_edges
    }

    pub fn boundary_facet(&self, k: usize) -> &[usize] {
        &self.boundary[k * self.dim..(k + 1) * self.dim]
    }

    pub fn boundary_tag(&self, k: usize) -> i32 {
        self.boundary_tags[k]
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (&[usize], i32)> {
        self.boundary
            .chunks_exact(self.dim)
            .zip(self.boundary_tags.iter().copied())
    }

    /// Points of element `t`; unused slots (2D) are zero.
    pub fn element_points(&self, t: usize) -> [Point; 4] {
        let mut pts = [[0.0; 3]; 4];
        for (i, &v) in self.element(t).iter().enumerate() {
            pts[i] = self.vertices[v];
        }
        pts
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        signed_volume(self.dim, &self.element_points(t))
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.signed_volume(t).abs()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.volume(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let el = self.element(t);
        let mut c = [0.0; 3];
        for &v in el {
            for (ci, xi) in c.iter_mut().zip(self.vertices[v]) {
                *ci += xi;
            }
        }
        c.map(|ci| ci / el.len() as f64)
    }

    /// Diameter `h_T`: the longest pairwise vertex distance.
    pub fn element_diameter(&self, t: usize) -> f64 {
        local_edges(self.dim)
            .iter()
            .map(|&(i, j)| {
                let el = self.element(t);
                dist2(&self.vertices[el[i]], &self.vertices[el[j]])
            })
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn diameters(&self) -> Vec<f64> {
        (0..self.n_elements()).map(|t| self.element_diameter(t)).collect()
    }

    /// Inradius `ρ_T = d |T| / |∂T|`.
    pub fn inradius(&self, t: usize) -> f64 {
        let pts = self.element_points(t);
        let n = self.dim + 1;
        let surface: f64 = (0..n)
            .map(|skip| {
                let face: Vec<Point> = (0..n).filter(|&i| i != skip).map(|i| pts[i]).collect();
                simplex_measure(&face)
            })
            .sum();
        self.dim as f64 * self.volume(t) / surface
    }

    /// Per-element shape-regularity ratio `h_T / ρ_T`.
    pub fn shape_regularity(&self) -> Vec<f64> {
        (0..self.n_elements())
            .map(|t| self.element_diameter(t) / self.inradius(t))
            .collect()
    }

    pub fn max_shape_regularity(&self) -> f64 {
        self.shape_regularity().into_iter().fold(0.0, f64::max)
    }

    /// Returns a copy with every vertex mapped through `f` (orientation must be preserved).
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Mesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            *v = f(v);
        }
        m
    }

    pub(crate) fn longest_local_edge(&self, t: usize) -> u8 {
        longest_edge(&self.vertices, self.element(t))
    }
}

/// Compares two edges for refinement priority: longer first, ties broken by the
/// lexicographically smaller sorted vertex pair. This is a strict total order on edges.
pub(crate) fn edge_cmp(vertices: &[Point], a: (usize, usize), b: (usize, usize)) -> Ordering {
    let a = sorted_pair(a);
    let b = sorted_pair(b);
    let la = dist2(&vertices[a.0], &vertices[a.1]);
    let lb = dist2(&vertices[b.0], &vertices[b.1]);
    lb.partial_cmp(&la).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

/// Local index (into [`local_edges`]) of the highest-priority edge of a simplex.
pub(crate) fn longest_edge(vertices: &[Point], verts: &[usize]) -> u8 {
    let edges = local_edges(verts.len() - 1);
    let mut best = 0;
    for k in 1..edges.len() {
        let (i, j) = edges[k];
        let (bi, bj) = edges[best];
        if edge_cmp(vertices, (verts[i], verts[j]), (verts[bi], verts[bj])) == Ordering::Less {
            best = k;
        }
    }
    best as u8
}

fn check_simplex(v: &[usize], n: usize, n_vertices: usize) -> std::result::Result<(), String> {
    if v.len() != n {
        return Err(format!("expected {n} vertices, got {}", v.len()));
    }
    for (i, &a) in v.iter().enumerate() {
        if a >= n_vertices {
            return Err(format!("vertex index {a} out of range"));
        }
        if v[..i].contains(&a) {
            return Err(format!("repeated vertex {a}"));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn sorted_pair((a, b): (usize, usize)) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

#[inline]
pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn signed_volume(dim: usize, p: &[Point]) -> f64 {
    let a = sub(&p[1], &p[0]);
    let b = sub(&p[2], &p[0]);
    if dim == 2 {
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        let c = sub(&p[3], &p[0]);
        let n = cross(&a, &b);
        (n[0] * c[0] + n[1] * c[1] + n[2] * c[2]) / 6.0
    }
}

/// Unsigned measure of a simplex given by 2 (segment) or 3 (triangle) points.
pub fn simplex_measure(p: &[Point]) -> f64 {
    match p.len() {
        2 => dist2(&p[0], &p[1]).sqrt(),
        3 => {
            let n = cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0]));
            0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
        }
        _ => panic!("simplex_measure supports segments and triangles"),
    }
}
