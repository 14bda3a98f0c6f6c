use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Grid lines along one axis: every interval between consecutive `breaks`
/// is split into equal pieces no longer than `h`.
pub(crate) fn axis_nodes(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(if i == n { w[1] } else { w[0] + len * i as f64 / n as f64 });
        }
    }
    out
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("target h must be positive, got {h}")))
    }
}

/// Simplicial mesh of the union of tensor cells selected by `region`.
///
/// `axes[k]` are the break points along axis `k`; each interval is subdivided to
/// spacing at most `h`. Cells whose center is mapped to `None` are left out. 2D cells
/// are split along the diagonal, 3D cells into the six Kuhn tetrahedra, which keeps
/// neighbouring cells conforming. Boundary facets are tagged by `tag(centroid)`.
pub(crate) fn structured_mesh(
    axes: &[&[f64]],
    h: f64,
    region: impl Fn(&Point) -> Option<i32>,
    tag: impl Fn(&Point) -> i32,
) -> Result<Mesh> {
    check_h(h)?;
    let dim = axes.len();
    let nodes: Vec<Vec<f64>> = axes.iter().map(|b| axis_nodes(b, h)).collect();
    let counts: Vec<usize> = nodes.iter().map(Vec::len).collect();
    let index = |ijk: [usize; 3]| -> usize {
        let mut id = 0;
        for k in (0..dim).rev() {
            id = id * counts[k] + ijk[k];
        }
        id
    };
    let coords = |ijk: [usize; 3]| -> Point {
        let mut p = [0.0; 3];
        for k in 0..dim {
            p[k] = nodes[k][ijk[k]];
        }
        p
    };

    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    let mut regions = Vec::new();
    let mut vertex_id = |ijk: [usize; 3], vertices: &mut Vec<Point>| -> usize {
        *used.entry(index(ijk)).or_insert_with(|| {
            vertices.push(coords(ijk));
            vertices.len() - 1
        })
    };

    let cells_k = if dim == 3 { counts[2] - 1 } else { 1 };
    for k in 0..cells_k {
        for j in 0..counts[1] - 1 {
            for i in 0..counts[0] - 1 {
                let base = [i, j, k];
                let lo = coords(base);
                let hi = coords([i + 1, j + 1, if dim == 3 { k + 1 } else { k }]);
                let mut center = [0.0; 3];
                for c in 0..dim {
                    center[c] = 0.5 * (lo[c] + hi[c]);
                }
                let Some(r) = region(&center) else { continue };
                let corner = |di: usize, dj: usize, dk: usize| [i + di, j + dj, k + dk];
                if dim == 2 {
                    let c = [corner(0, 0, 0), corner(1, 0, 0), corner(1, 1, 0), corner(0, 1, 0)];
                    for tri in [[0, 1, 2], [0, 2, 3]] {
                        elements.push(tri.iter().map(|&a| vertex_id(c[a], &mut vertices)).collect::<Vec<_>>());
                        regions.push(r);
                    }
                } else {
                    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                        let mut cur = base;
                        let mut tet = vec![vertex_id(cur, &mut vertices)];
                        for axis in perm {
                            cur[axis] += 1;
                            tet.push(vertex_id(cur, &mut vertices));
                        }
                        elements.push(tet);
                        regions.push(r);
                    }
                }
            }
        }
    }
    if elements.is_empty() {
        return Err(Error::Mesh("domain selection produced no cells".into()));
    }

    let mut facets: BTreeMap<Vec<usize>, (Vec<usize>, usize)> = BTreeMap::new();
    for el in &elements {
        for skip in 0..=dim {
            let f: Vec<usize> = (0..=dim).filter(|&a| a != skip).map(|a| el[a]).collect();
            let mut key = f.clone();
            key.sort_unstable();
            facets.entry(key).or_insert((f, 0)).1 += 1;
        }
    }
    let boundary = facets
        .into_values()
        .filter(|(_, n)| *n == 1)
        .map(|(f, _)| {
            let mut c = [0.0; 3];
            for &v in &f {
                for k in 0..dim {
                    c[k] += vertices[v][k] / dim as f64;
                }
            }
            let t = tag(&c);
            (f, t)
        })
        .collect();
    Mesh::new(dim, vertices, elements, regions, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BcKind, Topology};

    #[test]
    fn axis_nodes_hit_breaks() {
        let n = axis_nodes(&[0.0, 1.0, 3.0], 0.4);
        assert_eq!(n.first(), Some(&0.0));
        assert!(n.contains(&1.0));
        assert_eq!(n.last(), Some(&3.0));
        assert_eq!(n.len(), 1 + 3 + 5);
        // exact multiples are not over-subdivided
        assert_eq!(axis_nodes(&[0.0, 1.0], 0.25).len(), 5);
    }

    #[test]
    fn unit_square_is_conforming() {
        let m = structured_mesh(&[&[0.0, 1.0], &[0.0, 1.0]], 0.25, |_| Some(1), |_| 1).unwrap();
        assert_eq!(m.n_elements(), 32);
        assert_eq!(m.n_boundary_facets(), 16);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        let bcs = BTreeMap::from([(1, BcKind::Dirichlet)]);
        Topology::build(&m, &bcs).unwrap();
    }

    #[test]
    fn cube_kuhn_split() {
        let m = structured_mesh(&[&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]], 0.5, |_| Some(1), |_| 1).unwrap();
        assert_eq!(m.n_elements(), 48);
        assert_eq!(m.n_boundary_facets(), 6 * 4 * 2);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        let bcs = BTreeMap::from([(1, BcKind::Dirichlet)]);
        Topology::build(&m, &bcs).unwrap();
    }

    #[test]
    fn holes_are_excluded() {
        let m = structured_mesh(
            &[&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]],
            0.5,
            |p| (p[0] < 1.0 || p[1] < 1.0).then_some(1),
            |_| 1,
        )
        .unwrap();
        assert!((m.total_volume() - 3.0).abs() < 1e-14);
        assert!(structured_mesh(&[&[0.0, 1.0], &[0.0, 1.0]], 0.0, |_| Some(1), |_| 1).is_err());
        assert!(structured_mesh(&[&[0.0, 1.0], &[0.0, 1.0]], 0.5, |_| None, |_| 1).is_err());
    }
}
